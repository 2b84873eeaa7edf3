//! Subcommand implementations. Each resolves its parameters (flags over
//! config over defaults), runs the library and emits one CSV table.

use std::path::PathBuf;

use kzm_ldt::evolve::{landau_zener_profile, run_quench};
use kzm_ldt::fcs::{cgf_finite_n, cumulants, kink_distribution, mean_density, rho_kzm, theta_grid};
use kzm_ldt::ldt::{
    analytic_rate_function, binomial_log_tail, classical_rate_function, clt_rate_function,
    kl_divergence_bernoulli, kzm_defect_scaling, legendre_fenchel, KzmScalingParams, TailSide,
};
use kzm_ldt::model::{LongRangeSpec, MomentumGrid, Pairing, QuenchProtocol};
use kzm_ldt::oracle::{evolve_exact, kink_pair_distribution_exact};
use rayon::prelude::*;

use crate::config::{parse_list, ConfigFile};
use crate::error::CliError;
use crate::table::{fmt_f64, Table};
use crate::{ClassicalArgs, CommonArgs, OracleArgs, RateArgs, ScalingArgs};

pub const COMMON_KEYS: &[&str] = &[
    "n-sites",
    "tau-q",
    "alpha",
    "tol",
    "theta-min",
    "theta-max",
    "theta-steps",
    "rho-min",
    "rho-max",
    "rho-steps",
    "out",
];
pub const SCALING_KEYS: &[&str] = &["fit-min", "fit-max"];
pub const RATE_KEYS: &[&str] = &["log-prob-out"];
pub const CLASSICAL_KEYS: &[&str] = &[
    "nu",
    "z",
    "d",
    "xi0",
    "tau0",
    "f-factor",
    "p-success",
    "volume",
    "trials",
];
pub const ORACLE_KEYS: &[&str] = &["dt"];

struct Defaults {
    n_sites: usize,
    tau_q: &'static str,
    rho: (f64, f64, usize),
}

const DEFAULTS: Defaults = Defaults {
    n_sites: 1000,
    tau_q: "20",
    rho: (0.0, 3.0, 301),
};

/// Parameters shared by every subcommand after merging.
#[derive(Debug, Clone)]
pub struct Common {
    pub command: &'static str,
    pub n_sites: usize,
    pub tau_q: Vec<f64>,
    pub alpha: Option<f64>,
    pub tol: f64,
    pub theta: (f64, f64, usize),
    pub rho: (f64, f64, usize),
    pub out: Option<PathBuf>,
}

impl Common {
    fn resolve_with(
        args: &CommonArgs,
        file: &ConfigFile,
        command: &'static str,
        defaults: Defaults,
    ) -> Result<Self, CliError> {
        let tau_text = file
            .pick("tau-q", args.tau_q.clone())?
            .unwrap_or_else(|| defaults.tau_q.to_string());
        let tau_q = parse_list(&tau_text)?;
        if tau_q.is_empty() || tau_q.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(CliError::Usage(format!(
                "tau-q must be positive, got `{tau_text}`"
            )));
        }
        let tol = file
            .pick("tol", args.tol)?
            .unwrap_or(kzm_ldt::evolve::DEFAULT_TOL);
        if !(tol > 0.0) {
            return Err(CliError::Usage(format!("tol must be positive, got {tol}")));
        }
        let theta = (
            file.pick("theta-min", args.theta_min)?
                .unwrap_or(kzm_ldt::fcs::DEFAULT_THETA_MIN),
            file.pick("theta-max", args.theta_max)?
                .unwrap_or(kzm_ldt::fcs::DEFAULT_THETA_MAX),
            file.pick("theta-steps", args.theta_steps)?
                .unwrap_or(kzm_ldt::fcs::DEFAULT_THETA_STEPS),
        );
        let rho = (
            file.pick("rho-min", args.rho_min)?
                .unwrap_or(defaults.rho.0),
            file.pick("rho-max", args.rho_max)?
                .unwrap_or(defaults.rho.1),
            file.pick("rho-steps", args.rho_steps)?
                .unwrap_or(defaults.rho.2),
        );
        Ok(Self {
            command,
            n_sites: file
                .pick("n-sites", args.n_sites)?
                .unwrap_or(defaults.n_sites),
            tau_q,
            alpha: file.pick("alpha", args.alpha)?,
            tol,
            theta,
            rho,
            out: file.pick("out", args.out.clone())?,
        })
    }

    pub fn resolve(
        args: &CommonArgs,
        file: &ConfigFile,
        command: &'static str,
    ) -> Result<Self, CliError> {
        Self::resolve_with(args, file, command, DEFAULTS)
    }

    fn single_tau(&self) -> Result<f64, CliError> {
        match self.tau_q.as_slice() {
            [t] => Ok(*t),
            _ => Err(CliError::Usage(format!(
                "`{}` takes a single tau-q value",
                self.command
            ))),
        }
    }

    fn pairing(&self) -> Result<Pairing<f64>, CliError> {
        Ok(match self.alpha {
            None => Pairing::ShortRange,
            Some(alpha) => Pairing::LongRange(LongRangeSpec::new(alpha, self.n_sites)?),
        })
    }

    fn thetas(&self) -> Result<Vec<f64>, CliError> {
        Ok(theta_grid(self.theta.0, self.theta.1, self.theta.2)?)
    }

    fn rho_bars(&self) -> Result<Vec<f64>, CliError> {
        Ok(theta_grid(self.rho.0, self.rho.1, self.rho.2)?)
    }

    fn manifest(&self, table: &mut Table) {
        let taus: Vec<String> = self.tau_q.iter().map(|t| t.to_string()).collect();
        table
            .meta("program", concat!("kzm-ldt ", env!("CARGO_PKG_VERSION")))
            .meta("library", format!("kzm-ldt {}", kzm_ldt::VERSION))
            .meta("command", self.command)
            .meta("deterministic", true)
            .meta("n_sites", self.n_sites)
            .meta("tau_q", taus.join(","))
            .meta(
                "alpha",
                self.alpha
                    .map_or("none (short range)".to_string(), |a| a.to_string()),
            )
            .meta("tol", self.tol)
            .meta(
                "theta_grid",
                format!("{}:{}:{}", self.theta.0, self.theta.1, self.theta.2),
            )
            .meta(
                "rho_grid",
                format!("{}:{}:{}", self.rho.0, self.rho.1, self.rho.2),
            );
    }

    fn write(&self, table: &Table) -> Result<(), CliError> {
        Ok(table.write(self.out.as_deref())?)
    }
}

fn f(x: f64) -> String {
    fmt_f64(x)
}

pub fn spectrum(c: &Common) -> Result<(), CliError> {
    let tau = c.single_tau()?;
    let protocol = QuenchProtocol::new(tau)?;
    let grid = MomentumGrid::new(c.n_sites)?;
    let pairing = c.pairing()?;
    let profile = run_quench(&protocol, &grid, &pairing, c.tol)?;
    let lz = landau_zener_profile(&protocol, &grid, 1.0);
    let slope = pairing.small_k_slope();
    let renorm = landau_zener_profile(&protocol, &grid, slope);

    let mut header = vec!["k", "p_k_numeric", "p_k_lz"];
    if c.alpha.is_some() {
        header.push("p_k_lz_renorm");
    }
    let mut table = Table::new(&header);
    c.manifest(&mut table);
    if c.alpha.is_some() {
        table.meta("small_k_slope", f(slope));
        table.meta("renormalized_tau_q", f(slope * slope * tau));
    }
    for ((&(k, p), &(_, p_lz)), &(_, p_re)) in profile
        .entries()
        .iter()
        .zip(lz.entries())
        .zip(renorm.entries())
    {
        let mut row = vec![f(k), f(p), f(p_lz)];
        if c.alpha.is_some() {
            row.push(f(p_re));
        }
        table.push(row);
    }
    c.write(&table)
}

/// Least-squares slope of `ln y` against `ln x`.
fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mx, my) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| {
        (a + x.ln() / n, b + y.ln() / n)
    });
    let (sxy, sxx) = points.iter().fold((0.0, 0.0), |(sxy, sxx), (x, y)| {
        let dx = x.ln() - mx;
        (sxy + dx * (y.ln() - my), sxx + dx * dx)
    });
    sxy / sxx
}

pub fn scaling(args: &ScalingArgs, file: &ConfigFile) -> Result<(), CliError> {
    let c = Common::resolve_with(
        &args.common,
        file,
        "scaling",
        Defaults {
            tau_q: "5,10,20,40,80",
            ..DEFAULTS
        },
    )?;
    let fit_min = file.pick("fit-min", args.fit_min)?.unwrap_or(0.0);
    let fit_max = file.pick("fit-max", args.fit_max)?.unwrap_or(f64::INFINITY);
    let pairing = c.pairing()?;
    let grid = MomentumGrid::new(c.n_sites)?;
    let results = c
        .tau_q
        .par_iter()
        .map(|&tau| {
            let protocol = QuenchProtocol::new(tau)?;
            let profile = run_quench(&protocol, &grid, &pairing, c.tol)?;
            Ok((tau, mean_density(&profile), cumulants(&profile)))
        })
        .collect::<Result<Vec<_>, kzm_ldt::Error>>()?;

    let window: Vec<(f64, f64)> = results
        .iter()
        .filter(|(t, _, _)| *t >= fit_min && *t <= fit_max)
        .map(|(t, rho, _)| (*t, *rho))
        .collect();
    if window.len() < 3 {
        return Err(CliError::Usage(format!(
            "slope fit needs at least 3 quench times in [{fit_min}, {fit_max}], got {}",
            window.len()
        )));
    }
    if window.iter().any(|(_, rho)| !(*rho > 0.0)) {
        return Err(CliError::Core(kzm_ldt::Error::InvalidArgument(
            "zero density in the fit window".into(),
        )));
    }
    let slope = log_log_slope(&window);
    // Adiabatic once the Landau-Zener width drops below the lowest mode.
    let xi = pairing.small_k_slope();
    let k_min = std::f64::consts::PI / c.n_sites as f64;
    let adiabatic = |tau: f64| 2.0 * std::f64::consts::PI * xi * xi * tau * k_min * k_min >= 1.0;
    let flagged: Vec<String> = c
        .tau_q
        .iter()
        .filter(|t| adiabatic(**t))
        .map(|t| t.to_string())
        .collect();

    let mut table = Table::new(&[
        "tau_q",
        "mean_density",
        "kappa1",
        "kappa2",
        "kappa3",
        "ratio21",
        "ratio31",
        "ratio32",
    ]);
    c.manifest(&mut table);
    table
        .meta("fit_window", format!("[{fit_min}, {fit_max}]"))
        .meta("fit_points", window.len())
        .meta("fit_slope", f(slope))
        .meta(
            "adiabatic_breakdown_tau_q",
            if flagged.is_empty() {
                "none".to_string()
            } else {
                flagged.join(",")
            },
        )
        .meta(
            "fit_includes_breakdown",
            window.iter().any(|(t, _)| adiabatic(*t)),
        );
    for (tau, rho, k) in &results {
        table.push(vec![
            f(*tau),
            f(*rho),
            f(k.kappa1),
            f(k.kappa2),
            f(k.kappa3),
            f(k.ratio21()),
            f(k.ratio31()),
            f(k.ratio32()),
        ]);
    }
    c.write(&table)
}

pub fn rate_function(args: &RateArgs, file: &ConfigFile) -> Result<(), CliError> {
    let c = Common::resolve(&args.common, file, "rate-function")?;
    let log_prob_out: Option<PathBuf> = file.pick("log-prob-out", args.log_prob_out.clone())?;
    let tau = c.single_tau()?;
    let protocol = QuenchProtocol::new(tau)?;
    let grid = MomentumGrid::new(c.n_sites)?;
    let pairing = c.pairing()?;
    let xi = pairing.small_k_slope();
    let reference = rho_kzm(xi * xi * tau);
    let profile = run_quench(&protocol, &grid, &pairing, c.tol)?;
    let rho_bars = c.rho_bars()?;

    let curve = cgf_finite_n(&profile, &c.thetas()?)?.with_reference_density(reference);
    let numeric = legendre_fenchel(&curve, &rho_bars)?;
    let cum = cumulants(&profile);
    let clt = clt_rate_function(&cum, c.n_sites, reference, &rho_bars)?;
    let non_negative: Vec<f64> = rho_bars.iter().copied().filter(|r| *r >= 0.0).collect();
    let analytic = analytic_rate_function(&non_negative)?;
    let mut analytic_values = vec![f64::INFINITY; rho_bars.len() - non_negative.len()];
    analytic_values.extend(analytic.samples.iter().map(|s| s.i_bar));

    let mut table = Table::new(&["rho_bar", "I_bar_analytic", "I_bar_numeric", "I_bar_clt"]);
    c.manifest(&mut table);
    table
        .meta("rho_kzm", f(reference))
        .meta(
            "mean_density_bar",
            f(cum.kappa1 / c.n_sites as f64 / reference),
        )
        .meta(
            "boundary_rows",
            numeric.samples.iter().filter(|s| s.boundary).count(),
        )
        .meta(
            "clt_reference",
            "(rho - kappa1/N)^2 N / (2 kappa2) / rho_kzm",
        );
    for (i, &rho_bar) in rho_bars.iter().enumerate() {
        table.push(vec![
            f(rho_bar),
            f(analytic_values[i]),
            f(numeric.samples[i].i_bar),
            f(clt.samples[i].i_bar),
        ]);
    }
    c.write(&table)?;

    if let Some(path) = log_prob_out {
        let dist = kink_distribution(&profile);
        let mut direct = Table::new(&["rho_bar", "neg_log_p_over_n", "I_bar_direct"]);
        c.manifest(&mut direct);
        direct
            .meta("rho_kzm", f(reference))
            .meta("probability_floor_hit", dist.floored());
        for (rho, rate) in dist.scaled_log_probabilities() {
            direct.push(vec![f(rho / reference), f(rate), f(rate / reference)]);
        }
        direct.write(Some(&path))?;
    }
    Ok(())
}

pub fn classical(args: &ClassicalArgs, file: &ConfigFile) -> Result<(), CliError> {
    let p_success = file.pick("p-success", args.p_success)?.unwrap_or(0.5);
    let params = KzmScalingParams {
        nu: file.pick("nu", args.nu)?.unwrap_or(1.0),
        z: file.pick("z", args.z)?.unwrap_or(1.0),
        d: file.pick("d", args.d)?.unwrap_or(1.0),
        xi0: file.pick("xi0", args.xi0)?.unwrap_or(1.0),
        tau0: file.pick("tau0", args.tau0)?.unwrap_or(1.0),
        f_factor: file.pick("f-factor", args.f_factor)?.unwrap_or(1.0),
        p_success,
        volume: file.pick("volume", args.volume)?.unwrap_or(1000.0),
    }
    .validated()?;
    let c = Common::resolve_with(
        &args.common,
        file,
        "classical",
        Defaults {
            rho: (0.0, 1.0 / p_success, 101),
            ..DEFAULTS
        },
    )?;
    let tau = c.single_tau()?;
    let scaling = kzm_defect_scaling(&params, tau)?;
    let trials = match file.pick("trials", args.trials)? {
        Some(n) => n,
        None => scaling.n_domains.round() as usize,
    };
    if trials == 0 {
        return Err(CliError::Usage("trials must be at least 1".into()));
    }
    let rho_bars = c.rho_bars()?;
    let rate = classical_rate_function(&params, tau, &rho_bars)?;

    let mut table = Table::new(&[
        "rho_bar",
        "I_classical",
        "tail_bound_log",
        "exact_binomial_tail_log",
    ]);
    c.manifest(&mut table);
    table
        .meta("nu", params.nu)
        .meta("z", params.z)
        .meta("d", params.d)
        .meta("xi0", params.xi0)
        .meta("tau0", params.tau0)
        .meta("f_factor", params.f_factor)
        .meta("p_success", params.p_success)
        .meta("volume", params.volume)
        .meta("density_exponent", f(-params.d * params.length_exponent()))
        .meta("xi_hat", f(scaling.xi_hat))
        .meta("n_domains", f(scaling.n_domains))
        .meta("rho_kzm_classical", f(scaling.rho))
        .meta("trials", trials);
    let n = trials as f64;
    for s in &rate.samples {
        let r = s.rho_bar * p_success;
        let bound = 0.0 - n * kl_divergence_bernoulli(r, p_success)?;
        let exact = if r >= p_success {
            binomial_log_tail(trials, (r * n).ceil() as usize, p_success, TailSide::Upper)?
        } else {
            binomial_log_tail(trials, (r * n).floor() as usize, p_success, TailSide::Lower)?
        };
        table.push(vec![
            f(s.rho_bar),
            f(s.i_bar * rate.rho_kzm),
            f(bound),
            f(exact),
        ]);
    }
    c.write(&table)
}

pub fn oracle_compare(args: &OracleArgs, file: &ConfigFile) -> Result<(), CliError> {
    let c = Common::resolve_with(
        &args.common,
        file,
        "oracle-compare",
        Defaults {
            n_sites: 8,
            tau_q: "1",
            ..DEFAULTS
        },
    )?;
    if c.alpha.is_some() {
        return Err(CliError::Usage(
            "oracle-compare supports the short-range chain only".into(),
        ));
    }
    let dt: Option<f64> = file.pick("dt", args.dt)?;
    let tau = c.single_tau()?;
    let protocol = QuenchProtocol::new(tau)?;
    let exact = evolve_exact(&protocol, c.n_sites, dt)?;
    let oracle = kink_pair_distribution_exact(&exact.state);
    let grid = MomentumGrid::new(c.n_sites)?;
    let pipeline = kink_distribution(&run_quench(&protocol, &grid, &Pairing::ShortRange, c.tol)?);

    let mut table = Table::new(&["n", "P_exact_ed", "P_pipeline", "abs_diff"]);
    c.manifest(&mut table);
    table
        .meta("dt_final", f(exact.dt))
        .meta("dt_halvings", exact.halvings)
        .meta("self_convergence_tv", f(exact.change))
        .meta("tv_distance", f(oracle.total_variation(&pipeline)));
    for (n, (a, b)) in oracle.probs().iter().zip(pipeline.probs()).enumerate() {
        table.push(vec![n.to_string(), f(*a), f(*b), f((a - b).abs())]);
    }
    c.write(&table)
}
