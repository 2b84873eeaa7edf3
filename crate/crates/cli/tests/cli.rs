use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kzm-ldt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Splits output into manifest lines, the header and parsed rows.
fn parse(text: &str) -> (Vec<String>, String, Vec<Vec<f64>>) {
    let mut meta = Vec::new();
    let mut lines = text.lines();
    let header = loop {
        let line = lines.next().expect("header present");
        match line.strip_prefix("# ") {
            Some(m) => meta.push(m.to_string()),
            None => break line.to_string(),
        }
    };
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (meta, header, rows)
}

fn meta_value<'a>(meta: &'a [String], key: &str) -> &'a str {
    meta.iter()
        .find_map(|m| m.strip_prefix(key)?.strip_prefix(" = "))
        .unwrap_or_else(|| panic!("missing manifest key {key}"))
}

fn temp_path(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("kzm-ldt-cli-{}-{name}", std::process::id()))
}

#[test]
fn spectrum_header_and_rows() {
    let (meta, header, rows) = parse(&stdout(&["spectrum", "--n-sites", "40", "--tau-q", "4"]));
    assert_eq!(header, "k,p_k_numeric,p_k_lz");
    assert_eq!(rows.len(), 20);
    assert_eq!(meta_value(&meta, "command"), "spectrum");
    assert_eq!(meta_value(&meta, "n_sites"), "40");
    for row in &rows {
        assert!(row[1] >= 0.0 && row[1] <= 1.0);
        assert!(
            (row[2] - (-2.0 * std::f64::consts::PI * 4.0 * row[0] * row[0]).exp()).abs() < 1e-12
        );
    }
}

#[test]
fn spectrum_long_range_adds_renormalized_column() {
    let (meta, header, rows) = parse(&stdout(&[
        "spectrum",
        "--n-sites",
        "40",
        "--tau-q",
        "4",
        "--alpha",
        "3",
    ]));
    assert_eq!(header, "k,p_k_numeric,p_k_lz,p_k_lz_renorm");
    assert!(rows.iter().all(|r| r.len() == 4));
    let xi: f64 = meta_value(&meta, "small_k_slope").parse().unwrap();
    // Finite-N lattice sum approaches zeta(2) from below.
    assert!(
        (xi - std::f64::consts::PI.powi(2) / 6.0).abs() < 0.1,
        "xi {xi}"
    );
}

#[test]
fn rate_function_anchor_rows() {
    let (meta, header, rows) = parse(&stdout(&[
        "rate-function",
        "--n-sites",
        "400",
        "--tau-q",
        "10",
        "--rho-steps",
        "31",
    ]));
    assert_eq!(header, "rho_bar,I_bar_analytic,I_bar_numeric,I_bar_clt");
    assert_eq!(rows.len(), 31);
    let zeta = 2.612_375_348_685_488_f64;
    assert!((rows[0][0]).abs() < 1e-15);
    assert!((rows[0][1] - zeta).abs() < 1e-9);
    let one = rows.iter().find(|r| (r[0] - 1.0).abs() < 1e-12).unwrap();
    assert!(one[1].abs() < 1e-12);
    assert!(one[2].abs() < 1e-2);
    assert!(meta_value(&meta, "boundary_rows").parse::<usize>().is_ok());
}

#[test]
fn rate_function_writes_direct_log_probabilities() {
    let path = temp_path("logp.csv");
    let p = path.to_str().unwrap();
    stdout(&[
        "rate-function",
        "--n-sites",
        "100",
        "--tau-q",
        "5",
        "--rho-steps",
        "5",
        "--log-prob-out",
        p,
    ]);
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    let (_, header, rows) = parse(&text);
    assert_eq!(header, "rho_bar,neg_log_p_over_n,I_bar_direct");
    assert_eq!(rows.len(), 51);
}

#[test]
fn scaling_recovers_square_root_law() {
    let (meta, header, rows) = parse(&stdout(&["scaling", "--n-sites", "1000"]));
    assert_eq!(
        header,
        "tau_q,mean_density,kappa1,kappa2,kappa3,ratio21,ratio31,ratio32"
    );
    assert_eq!(rows.len(), 5);
    let slope: f64 = meta_value(&meta, "fit_slope").parse().unwrap();
    assert!((slope + 0.5).abs() < 0.02, "slope {slope}");
    assert_eq!(meta_value(&meta, "fit_includes_breakdown"), "false");
}

#[test]
fn scaling_fit_needs_three_points() {
    let out = run(&["scaling", "--n-sites", "100", "--tau-q", "5,10"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["scaling", "--n-sites", "100", "--fit-min", "30"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn classical_exact_tail_lies_below_bound() {
    let (meta, header, rows) = parse(&stdout(&[
        "classical",
        "--tau-q",
        "100",
        "--rho-steps",
        "41",
    ]));
    assert_eq!(
        header,
        "rho_bar,I_classical,tail_bound_log,exact_binomial_tail_log"
    );
    assert_eq!(rows.len(), 41);
    assert_eq!(meta_value(&meta, "trials"), "100");
    for row in &rows {
        assert!(row[3] <= row[2] + 1e-9, "row {row:?}");
        assert!(row[1] >= 0.0);
    }
}

#[test]
fn oracle_compare_agrees_with_pipeline() {
    let (_, header, rows) = parse(&stdout(&[
        "oracle-compare",
        "--n-sites",
        "6",
        "--tau-q",
        "1",
    ]));
    assert_eq!(header, "n,P_exact_ed,P_pipeline,abs_diff");
    assert_eq!(rows.len(), 4);
    let max = rows.iter().map(|r| r[3]).fold(0.0, f64::max);
    assert!(max < 1e-6, "max diff {max}");
}

#[test]
fn oracle_compare_rejects_large_chain() {
    let out = run(&["oracle-compare", "--n-sites", "14"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn invalid_input_exits_with_usage_code() {
    assert_eq!(run(&["spectrum", "--tau-q", "1,2"]).status.code(), Some(2));
    assert_eq!(run(&["spectrum", "--n-sites", "7"]).status.code(), Some(2));
    assert_eq!(run(&["spectrum", "--alpha", "1.5"]).status.code(), Some(2));
    assert_eq!(run(&["spectrum", "--tau-q", "-1"]).status.code(), Some(2));
}

#[test]
fn config_file_merges_with_flags_winning() {
    let path = temp_path("run.cfg");
    std::fs::write(&path, "# run settings\nn-sites = 30\ntau-q = 3\n").unwrap();
    let cfg = path.to_str().unwrap();
    let (meta, _, rows) = parse(&stdout(&["spectrum", "--config", cfg, "--tau-q", "6"]));
    std::fs::remove_file(&path).unwrap();
    assert_eq!(meta_value(&meta, "n_sites"), "30");
    assert_eq!(meta_value(&meta, "tau_q"), "6");
    assert_eq!(rows.len(), 15);
}

#[test]
fn unknown_config_key_is_rejected() {
    let path = temp_path("bad.cfg");
    std::fs::write(&path, "tau = 3\n").unwrap();
    let out = run(&["spectrum", "--config", path.to_str().unwrap()]);
    std::fs::remove_file(&path).unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn output_is_deterministic() {
    let args = [
        "rate-function",
        "--n-sites",
        "200",
        "--tau-q",
        "5",
        "--rho-steps",
        "11",
    ];
    assert_eq!(stdout(&args), stdout(&args));
}

#[test]
fn out_flag_writes_file() {
    let path = temp_path("spec.csv");
    let printed = stdout(&[
        "spectrum",
        "--n-sites",
        "20",
        "--out",
        path.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert!(printed.is_empty());
    assert!(text.contains("k,p_k_numeric,p_k_lz"));
}
