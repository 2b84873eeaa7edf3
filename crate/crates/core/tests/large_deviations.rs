use kzm_ldt::evolve::{landau_zener_profile, ExcitationProfile};
use kzm_ldt::fcs::{cgf_finite_n, cgf_polylog, cumulants, kink_distribution, theta_grid};
use kzm_ldt::ldt::{
    analytic_rate_function, binomial_ldp_estimate, binomial_log_tail, chernoff_tail_bound,
    classical_log_probability_exponent, classical_rate_function, clt_rate_function,
    kl_divergence_bernoulli, kzm_defect_scaling, legendre_fenchel, theta_star, KzmScalingParams,
    RateForm, TailSide,
};
use kzm_ldt::model::{MomentumGrid, QuenchProtocol};
use kzm_ldt::special::{polylog, zeta_three_halves, PolylogOrder};
use proptest::prelude::*;

fn default_thetas() -> Vec<f64> {
    theta_grid(-10.0f64, 4.0, 561).unwrap()
}

fn lz_profile(tau_q: f64, n_sites: usize) -> ExcitationProfile<f64> {
    let protocol = QuenchProtocol::new(tau_q).unwrap();
    let grid = MomentumGrid::new(n_sites).unwrap();
    landau_zener_profile(&protocol, &grid, 1.0)
}

fn exact_log_tail(dist: &[f64], k: usize, side: TailSide) -> f64 {
    let total: f64 = match side {
        TailSide::Upper => dist[k.min(dist.len())..].iter().sum(),
        TailSide::Lower => dist[..=k.min(dist.len() - 1)].iter().sum(),
    };
    total.ln()
}

#[test]
fn polylog_transform_endpoints() {
    let curve = cgf_polylog(20.0, &default_thetas()).unwrap();
    let rate = legendre_fenchel(&curve, &[0.0, 1.0, -0.1]).unwrap();
    assert_eq!(rate.form, RateForm::InfiniteNNumeric);
    assert!((rate.samples[0].i_bar - zeta_three_halves::<f64>()).abs() < 1e-12);
    assert!((rate.samples[0].i_bar - 2.612_375).abs() < 1e-6);
    assert!(rate.samples[1].i_bar.abs() < 1e-10);
    assert!(rate.samples[2].i_bar.is_infinite());
}

#[test]
fn numeric_transform_matches_closed_form() {
    let curve = cgf_polylog(20.0, &default_thetas()).unwrap();
    let grid = theta_grid(0.05, 2.0, 40).unwrap();
    let numeric = legendre_fenchel(&curve, &grid).unwrap();
    let closed = analytic_rate_function(&grid).unwrap();
    for (a, b) in numeric.samples.iter().zip(&closed.samples) {
        assert!(!a.boundary);
        assert!(
            (a.i_bar - b.i_bar).abs() < 1e-6,
            "{}: {} vs {}",
            a.rho_bar,
            a.i_bar,
            b.i_bar
        );
        assert!((a.theta_star - b.theta_star).abs() < 1e-5);
    }
}

#[test]
fn theta_star_half_consistency() {
    let theta = theta_star(0.5f64).unwrap();
    assert!(theta < 0.0);
    let by_formula = theta * 0.5 + polylog(PolylogOrder::ThreeHalves, 1.0 - theta.exp()).unwrap();
    let curve = cgf_polylog(50.0, &default_thetas()).unwrap();
    let numeric = legendre_fenchel(&curve, &[0.5]).unwrap();
    assert!((numeric.samples[0].i_bar - by_formula).abs() < 1e-6);
}

#[test]
fn theta_star_at_log_two() {
    let rho = -2.0 * polylog(PolylogOrder::Half, -1.0f64).unwrap();
    assert!((rho - 1.209_797).abs() < 1e-6);
    assert!((theta_star(rho).unwrap() - 2f64.ln()).abs() < 1e-10);
}

#[test]
fn theta_star_increasing() {
    let grid = theta_grid(0.1, 5.0, 99).unwrap();
    let thetas: Vec<f64> = grid.iter().map(|&r| theta_star(r).unwrap()).collect();
    assert!(thetas.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn rate_independent_of_quench_time() {
    let grid = theta_grid(0.1, 2.0, 20).unwrap();
    let a = legendre_fenchel(&cgf_polylog(20.0, &default_thetas()).unwrap(), &grid).unwrap();
    let b = legendre_fenchel(&cgf_polylog(80.0, &default_thetas()).unwrap(), &grid).unwrap();
    for (x, y) in a.samples.iter().zip(&b.samples) {
        assert!((x.i_bar - y.i_bar).abs() < 1e-9);
    }
}

#[test]
fn analytic_curve_shape() {
    let grid = theta_grid(0.0f64, 3.0, 61).unwrap();
    let c = analytic_rate_function(&grid).unwrap();
    let min = c.argmin().unwrap();
    assert!((min.rho_bar - 1.0).abs() < 1e-12);
    assert!(c.samples.iter().all(|s| s.i_bar >= 0.0));
    let i: Vec<f64> = c.samples.iter().map(|s| s.i_bar).collect();
    assert!(i.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] > -1e-12));
}

#[test]
fn legendre_round_trip() {
    let thetas = theta_grid(-3.0f64, 2.0, 201).unwrap();
    let curve = cgf_polylog(20.0, &thetas).unwrap();
    let lo = curve.samples[0].slope / curve.rho_kzm;
    let hi = curve.samples[200].slope / curve.rho_kzm;
    let rho_grid = theta_grid(lo, hi, 801).unwrap();
    let rate = legendre_fenchel(&curve, &rho_grid).unwrap();
    let back = rate.to_cgf(&thetas).unwrap();
    for (s, l) in curve.samples.iter().zip(back) {
        assert!((s.lambda - l).abs() < 1e-6, "{}", s.theta);
    }
}

#[test]
fn finite_n_minimum_at_mean() {
    let profile = lz_profile(10.0, 200);
    let curve = cgf_finite_n(&profile, &default_thetas()).unwrap();
    let grid = theta_grid(0.0, 3.0, 301).unwrap();
    let rate = legendre_fenchel(&curve, &grid).unwrap();
    let mean_bar = cumulants(&profile).kappa1 / (200.0 * curve.rho_kzm);
    let min = rate.argmin().unwrap();
    assert!((min.rho_bar - mean_bar).abs() <= 0.01 + 1e-12);
}

#[test]
fn chernoff_at_mean_is_trivial() {
    let profile = lz_profile(2.0, 64);
    let curve = cgf_finite_n(&profile, &default_thetas()).unwrap();
    let mean = cumulants(&profile).kappa1 / 64.0;
    for side in [TailSide::Upper, TailSide::Lower] {
        assert!(chernoff_tail_bound(&curve, mean, side).unwrap().abs() < 1e-10);
    }
}

#[test]
fn chernoff_dominates_exact_tails() {
    let profile = lz_profile(2.0, 64);
    let dist = kink_distribution(&profile);
    let curve = cgf_finite_n(&profile, &default_thetas()).unwrap();
    let mean = cumulants(&profile).kappa1;
    let upper = ((2.0 * mean).ceil()) as usize;
    let bound = chernoff_tail_bound(&curve, upper as f64 / 64.0, TailSide::Upper).unwrap();
    let exact = exact_log_tail(dist.probs(), upper, TailSide::Upper);
    assert!(exact <= bound && bound < 0.0, "{exact} vs {bound}");
    let lower = (0.5 * mean).floor() as usize;
    let bound = chernoff_tail_bound(&curve, lower as f64 / 64.0, TailSide::Lower).unwrap();
    let exact = exact_log_tail(dist.probs(), lower, TailSide::Lower);
    assert!(exact <= bound && bound < 0.0, "{exact} vs {bound}");
}

#[test]
fn clt_reference_centred_on_mean() {
    let profile = lz_profile(10.0, 200);
    let c = cumulants(&profile);
    let rho = kzm_ldt::fcs::rho_kzm(10.0);
    let mean_bar = c.kappa1 / (200.0 * rho);
    let clt = clt_rate_function(&c, 200, rho, &[mean_bar, mean_bar + 0.1]).unwrap();
    assert!(clt.samples[0].i_bar.abs() < 1e-15);
    let expected = (0.1 * rho).powi(2) * 200.0 / (2.0 * c.kappa2) / rho;
    assert!((clt.samples[1].i_bar - expected).abs() < 1e-14);
}

#[test]
fn stirling_estimate_examples() {
    let e = binomial_ldp_estimate(100, 0.5f64, 0.3).unwrap();
    assert_eq!(e.successes, 50);
    assert!((e.estimate - e.exact).abs() < 0.02);
    let peak = binomial_ldp_estimate(10_000, 0.3f64, 0.3).unwrap();
    assert!((peak.estimate - peak.exact).abs() < 1.0 / 10_000.0 * 10.0);
}

#[test]
fn binomial_tail_below_kl_bound() {
    let n = 50;
    let p = 0.2;
    for k in 11..=50 {
        let r = k as f64 / n as f64;
        let tail = binomial_log_tail(n, k, p, TailSide::Upper).unwrap();
        assert!(tail <= -(n as f64) * kl_divergence_bernoulli(r, p).unwrap() + 1e-12);
    }
}

#[test]
fn kl_strictly_convex_zero_at_p() {
    let p = 0.35;
    let grid = theta_grid(0.0, 1.0, 101).unwrap();
    let d: Vec<f64> = grid
        .iter()
        .map(|&r| kl_divergence_bernoulli(r, p).unwrap())
        .collect();
    assert!(d.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] > 0.0));
    assert_eq!(kl_divergence_bernoulli(p, p).unwrap(), 0.0);
    for (r, v) in grid.iter().zip(&d) {
        if (*r - p).abs() > 1e-12 {
            assert!(*v > 0.0, "{r}");
        }
    }
}

fn classical_params(p: f64) -> KzmScalingParams<f64> {
    KzmScalingParams {
        nu: 1.0,
        z: 1.0,
        d: 1.0,
        xi0: 1.0,
        tau0: 1.0,
        f_factor: 1.0,
        p_success: p,
        volume: 1000.0,
    }
}

#[test]
fn classical_rate_examples() {
    let params = classical_params(0.1);
    let grid = theta_grid(0.0, 10.0, 101).unwrap();
    let c = classical_rate_function(&params, 16.0, &grid).unwrap();
    assert!(c.samples.iter().all(|s| s.i_bar >= 0.0));
    assert!(c.samples[10].i_bar.abs() < 1e-15);
    let two = c.samples[20];
    let d = kl_divergence_bernoulli(0.2f64, 0.1).unwrap();
    assert!((d - 0.044_403).abs() < 1e-6);
    assert!((two.i_bar * c.rho_kzm - c.rho_kzm * d / 0.1).abs() < 1e-15);
    assert!(classical_rate_function(&params, 16.0, &[11.0]).is_err());
}

#[test]
fn classical_volume_and_domain_forms_agree() {
    let params = classical_params(0.3);
    let s = kzm_defect_scaling(&params, 9.0).unwrap();
    let rho_bar = 1.7;
    let exponent = classical_log_probability_exponent(&params, 9.0, rho_bar).unwrap();
    let by_domains = -s.n_domains * kl_divergence_bernoulli(rho_bar * 0.3, 0.3).unwrap();
    assert!((exponent - by_domains).abs() < 1e-12 * by_domains.abs());
}

#[test]
fn defect_scaling_exponents() {
    let params = KzmScalingParams {
        nu: 0.5,
        z: 2.0,
        d: 2.0,
        ..classical_params(0.5)
    };
    let a = kzm_defect_scaling(&params, 3.0).unwrap();
    let b = kzm_defect_scaling(&params, 6.0).unwrap();
    assert!((b.rho / a.rho - 2f64.powf(-0.5)).abs() < 1e-14);
    let one_d = classical_params(0.5);
    assert!((one_d.density_exponent() + 0.5).abs() < 1e-15);
    let at_tau0 = kzm_defect_scaling(&one_d, one_d.tau0).unwrap();
    assert!((at_tau0.xi_hat - one_d.xi0).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn chernoff_dominance(p in prop::collection::vec(0.0f64..0.6, 2..=128)) {
        let profile = ExcitationProfile::from_probabilities(&p).unwrap();
        let n = profile.n_sites();
        let dist = kink_distribution(&profile);
        let curve = cgf_finite_n(&profile, &theta_grid(-12.0, 12.0, 241).unwrap()).unwrap();
        for k in 0..dist.probs().len() {
            let rho = k as f64 / n as f64;
            for side in [TailSide::Upper, TailSide::Lower] {
                let exact = exact_log_tail(dist.probs(), k, side);
                let bound = chernoff_tail_bound(&curve, rho, side).unwrap();
                prop_assert!(exact <= bound + 1e-9, "k={} {:?}: {} > {}", k, side, exact, bound);
            }
        }
    }
}
