use kzm_ldt::evolve::{landau_zener_profile, ExcitationProfile};
use kzm_ldt::fcs::{
    cgf_finite_n, cgf_integral, cgf_polylog, cumulants, kink_distribution, mean_density,
    poisson_binomial, rho_kzm, theta_grid,
};
use kzm_ldt::model::{MomentumGrid, QuenchProtocol};
use kzm_ldt::special::zeta_three_halves;
use num_rational::Ratio;
use proptest::prelude::*;
use std::f64::consts::PI;

fn lz_profile(tau_q: f64, n_sites: usize) -> ExcitationProfile<f64> {
    let protocol = QuenchProtocol::new(tau_q).unwrap();
    let grid = MomentumGrid::new(n_sites).unwrap();
    landau_zener_profile(&protocol, &grid, 1.0)
}

/// Sums over all 2^M outcomes.
fn enumerate(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut dist = vec![0.0; m + 1];
    for mask in 0u32..(1 << m) {
        let mut w = 1.0;
        for (i, &pi) in p.iter().enumerate() {
            w *= if mask >> i & 1 == 1 { pi } else { 1.0 - pi };
        }
        dist[mask.count_ones() as usize] += w;
    }
    dist
}

#[test]
fn fold_matches_enumeration() {
    let p = [0.1, 0.2, 0.3];
    let oracle = enumerate(&p);
    let d = kink_distribution(&ExcitationProfile::from_probabilities(&p).unwrap());
    for (a, b) in d.probs().iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-15);
    }
    for (a, b) in oracle.iter().zip([0.504, 0.398, 0.092, 0.006]) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn rational_fold_is_exact() {
    let p: Vec<Ratio<i64>> = [1, 2, 3].iter().map(|&n| Ratio::new(n, 10)).collect();
    let d = poisson_binomial(&p);
    let expected: Vec<Ratio<i64>> = [504, 398, 92, 6]
        .iter()
        .map(|&n| Ratio::new(n, 1000))
        .collect();
    assert_eq!(d, expected);
}

#[test]
fn universal_cumulant_ratios() {
    let c = cumulants(&lz_profile(50.0, 2000));
    let r21 = 1.0 - 1.0 / 2f64.sqrt();
    let r31 = 1.0 - 3.0 / 2f64.sqrt() + 2.0 / 3f64.sqrt();
    assert!((r21 - 0.293).abs() < 1e-3);
    assert!((c.ratio21() - 0.293).abs() < 0.01 * 0.293);
    assert!((c.ratio31() - 0.0334).abs() < 0.03 * 0.0334);
    assert!((c.ratio32() - 0.114).abs() < 0.03 * 0.114);
    assert!((c.ratio21() - r21).abs() < 1e-6);
    assert!((c.ratio31() - r31).abs() < 1e-6);
}

#[test]
fn mean_density_matches_gaussian_sum() {
    // Midpoint sums of a Gaussian converge spectrally to the integral.
    for tau in [5.0, 50.0] {
        let rho = mean_density(&lz_profile(tau, 4000));
        assert!((rho - rho_kzm(tau)).abs() < 1e-12, "{tau}: {rho}");
    }
}

#[test]
fn finite_n_slope_at_origin() {
    let profile = lz_profile(10.0, 400);
    let h = 1e-4;
    let c = cgf_finite_n(&profile, &[-h, 0.0, h]).unwrap();
    let fd = (c.samples[2].lambda - c.samples[0].lambda) / (2.0 * h);
    let mean = cumulants(&profile).kappa1 / 400.0;
    assert!((fd - mean).abs() < 1e-8 * mean.max(1e-3));
    assert!((c.samples[1].slope - mean).abs() < 1e-15);
}

#[test]
fn finite_n_converges_to_integral() {
    let tau = 10.0;
    let thetas = [-2.0, 1.0, 2.0];
    let finite = cgf_finite_n(&lz_profile(tau, 4000), &thetas).unwrap();
    let integral = cgf_integral(tau, &thetas, PI).unwrap();
    for (a, b) in finite.samples.iter().zip(&integral.samples) {
        assert!((a.lambda - b.lambda).abs() < 1e-4);
    }
}

#[test]
fn polylog_matches_integral() {
    let thetas = theta_grid(-5.0, 3.0, 33).unwrap();
    for tau in [20.0, 80.0] {
        let integral = cgf_integral(tau, &thetas, PI).unwrap();
        let closed = cgf_polylog(tau, &thetas).unwrap();
        for (a, b) in integral.samples.iter().zip(&closed.samples) {
            assert!((a.lambda - b.lambda).abs() < 1e-6);
            assert!((a.slope - b.slope).abs() < 1e-6);
        }
    }
}

#[test]
fn polylog_slope_and_plateau() {
    let tau = 20.0f64;
    let h = 1e-5;
    let c = cgf_polylog(tau, &[-h, h, -40.0]).unwrap();
    let fd = (c.samples[1].lambda - c.samples[0].lambda) / (2.0 * h);
    assert!((fd - rho_kzm(tau)).abs() < 1e-9);
    let plateau = -rho_kzm(tau) * zeta_three_halves::<f64>();
    // Leading correction: Li_{3/2}(1 - e^θ) ≈ ζ(3/2) − 2√π e^{θ/2}.
    let approach = rho_kzm(tau) * 2.0 * PI.sqrt() * (-20.0f64).exp();
    assert!((c.samples[2].lambda - (plateau + approach)).abs() < 1e-16);
    let integral = cgf_integral(tau, &[-40.0], PI).unwrap();
    assert!((integral.samples[0].lambda - c.samples[2].lambda).abs() < 1e-10);
}

#[test]
fn default_grid_curves_are_convex() {
    let thetas = theta_grid(-10.0, 4.0, 561).unwrap();
    let profile = lz_profile(20.0, 200);
    for curve in [
        cgf_finite_n(&profile, &thetas).unwrap(),
        cgf_integral(20.0, &thetas, PI).unwrap(),
        cgf_polylog(20.0, &thetas).unwrap(),
    ] {
        curve.check_convex(1e-9).unwrap();
        let lambdas: Vec<f64> = curve.lambdas().collect();
        assert!(lambdas.windows(2).all(|w| w[1] >= w[0]));
    }
}

fn probs_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..=1.0, 1..=32)
}

proptest! {
    #[test]
    fn normalized(p in probs_strategy()) {
        let d = kink_distribution(&ExcitationProfile::from_probabilities(&p).unwrap());
        let total: f64 = d.probs().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(d.probs().iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn moments_match_cumulants(p in probs_strategy()) {
        let profile = ExcitationProfile::from_probabilities(&p).unwrap();
        let d = kink_distribution(&profile);
        let c = cumulants(&profile);
        prop_assert!((d.mean() - c.kappa1).abs() < 1e-9);
        prop_assert!((d.variance() - c.kappa2).abs() < 1e-9);
        prop_assert!(c.kappa2 <= c.kappa1 + 1e-15);
    }

    #[test]
    fn cgf_dual_to_distribution(p in probs_strategy(), theta in -6.0f64..6.0) {
        let profile = ExcitationProfile::from_probabilities(&p).unwrap();
        let d = kink_distribution(&profile);
        let c = cgf_finite_n(&profile, &[theta]).unwrap();
        let n = profile.n_sites() as f64;
        let mgf = d.moment_generating(theta);
        let from_cgf = (n * c.samples[0].lambda).exp();
        prop_assert!((from_cgf - mgf).abs() <= 1e-9 * mgf);
    }

    #[test]
    fn cgf_support_bound_and_convexity(p in probs_strategy()) {
        let profile = ExcitationProfile::from_probabilities(&p).unwrap();
        let thetas = theta_grid(-10.0, 10.0, 81).unwrap();
        let c = cgf_finite_n(&profile, &thetas).unwrap();
        prop_assert!(c.check_convex(1e-9).is_ok());
        for s in c.samples.iter().filter(|s| s.theta > 0.0) {
            prop_assert!(s.lambda <= s.theta / 2.0 + 1e-15);
        }
    }
}
