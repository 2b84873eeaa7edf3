//! Full counting statistics of kink pairs: the exact Poisson-binomial
//! distribution, its cumulants and the scaled cumulant generating function.

use num_traits::Num;

use crate::error::{Error, Result};
use crate::evolve::ExcitationProfile;
use crate::quadrature::{integrate, Tolerance};
use crate::scalar::Real;
use crate::special::{polylog_one_minus_exp, polylog_ratio, zeta_three_halves, PolylogOrder};

/// Probabilities below this are reported as exact zeros.
pub const PROBABILITY_FLOOR: f64 = 1e-300;

/// Default θ grid.
pub const DEFAULT_THETA_MIN: f64 = -10.0;
pub const DEFAULT_THETA_MAX: f64 = 4.0;
pub const DEFAULT_THETA_STEPS: usize = 561;

/// Folds independent Bernoulli modes into the distribution of their sum.
///
/// Works over any numeric ring, so rational inputs give exact results.
pub fn poisson_binomial<S: Num + Clone>(probs: &[S]) -> Vec<S> {
    let mut dist = Vec::with_capacity(probs.len() + 1);
    dist.push(S::one());
    for p in probs {
        let q = S::one() - p.clone();
        dist.push(S::zero());
        for n in (1..dist.len()).rev() {
            dist[n] = dist[n].clone() * q.clone() + dist[n - 1].clone() * p.clone();
        }
        dist[0] = dist[0].clone() * q.clone();
    }
    dist
}

/// Distribution of the number of kink pairs, `P(n)` for `n = 0..=N/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct KinkPairDistribution<T> {
    probs: Vec<T>,
    n_sites: usize,
    floored: bool,
}

impl<T: Real> KinkPairDistribution<T> {
    pub(crate) fn from_parts(probs: Vec<T>, n_sites: usize) -> Self {
        Self {
            probs,
            n_sites,
            floored: false,
        }
    }

    /// Total-variation distance `½ Σ |P(n) − Q(n)|`.
    pub fn total_variation(&self, other: &Self) -> T {
        let len = self.probs.len().max(other.probs.len());
        let at = |v: &[T], i: usize| v.get(i).copied().unwrap_or_else(T::zero);
        (0..len)
            .map(|i| (at(&self.probs, i) - at(&other.probs, i)).abs())
            .sum::<T>()
            * T::half()
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Whether any entry fell below [`PROBABILITY_FLOOR`] and was zeroed.
    pub fn floored(&self) -> bool {
        self.floored
    }

    pub fn mean(&self) -> T {
        self.moment(1)
    }

    pub fn variance(&self) -> T {
        let m = self.mean();
        self.moment(2) - m * m
    }

    fn moment(&self, order: i32) -> T {
        self.probs
            .iter()
            .enumerate()
            .map(|(n, &p)| p * T::from_usize_lossy(n).powi(order))
            .sum()
    }

    /// `Σ_n e^{θn} P(n)`.
    pub fn moment_generating(&self, theta: T) -> T {
        self.probs
            .iter()
            .enumerate()
            .map(|(n, &p)| p * (theta * T::from_usize_lossy(n)).exp())
            .sum()
    }

    /// `(ρ_n, −ln P(n) / N)` with `ρ_n = n/N`; zero-probability entries are
    /// skipped.
    pub fn scaled_log_probabilities(&self) -> Vec<(T, T)> {
        let n_sites = T::from_usize_lossy(self.n_sites);
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > T::zero())
            .map(|(n, &p)| (T::from_usize_lossy(n) / n_sites, -p.ln() / n_sites))
            .collect()
    }
}

/// Exact kink-pair distribution of a profile by polynomial folding.
pub fn kink_distribution<T: Real>(profile: &ExcitationProfile<T>) -> KinkPairDistribution<T> {
    let probs: Vec<T> = profile.probabilities().collect();
    let mut dist = poisson_binomial(&probs);
    let floor = T::lit(PROBABILITY_FLOOR).max(T::min_positive_value());
    // P(n) is strictly positive between these counts, so a zero there is
    // an underflow.
    let certain = probs.iter().filter(|&&p| p == T::one()).count();
    let possible = probs.iter().filter(|&&p| p > T::zero()).count();
    let mut floored = false;
    for (n, p) in dist.iter_mut().enumerate() {
        if *p < floor {
            floored |= (certain..=possible).contains(&n);
            *p = T::zero();
        }
    }
    KinkPairDistribution {
        probs: dist,
        n_sites: profile.n_sites(),
        floored,
    }
}

/// First three cumulants of the kink-pair number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CumulantSet<T> {
    pub kappa1: T,
    pub kappa2: T,
    pub kappa3: T,
}

impl<T: Real> CumulantSet<T> {
    pub fn ratio21(&self) -> T {
        self.kappa2 / self.kappa1
    }

    pub fn ratio31(&self) -> T {
        self.kappa3 / self.kappa1
    }

    pub fn ratio32(&self) -> T {
        self.kappa3 / self.kappa2
    }
}

pub fn cumulants<T: Real>(profile: &ExcitationProfile<T>) -> CumulantSet<T> {
    let mut c = CumulantSet {
        kappa1: T::zero(),
        kappa2: T::zero(),
        kappa3: T::zero(),
    };
    for p in profile.probabilities() {
        let var = p * (T::one() - p);
        c.kappa1 += p;
        c.kappa2 += var;
        c.kappa3 += var * (T::one() - T::two() * p);
    }
    c
}

/// `κ₁ / N`.
pub fn mean_density<T: Real>(profile: &ExcitationProfile<T>) -> T {
    cumulants(profile).kappa1 / T::from_usize_lossy(profile.n_sites())
}

/// `(1/4π) √(ħ / 2Jτ_Q)`; `tau_q` is measured in units of `ħ/J`.
pub fn rho_kzm<T: Real>(tau_q: T) -> T {
    (T::one() / (T::two() * tau_q)).sqrt() / (T::lit(4.0) * T::PI())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CgfForm {
    FiniteN,
    Integral,
    Polylog,
}

impl CgfForm {
    pub fn label(self) -> &'static str {
        match self {
            Self::FiniteN => "finite_n",
            Self::Integral => "integral",
            Self::Polylog => "polylog",
        }
    }
}

/// One point of a sampled CGF with its exact slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgfSample<T> {
    pub theta: T,
    pub lambda: T,
    pub slope: T,
}

/// Sampled scaled cumulant generating function `λ(θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CgfCurve<T> {
    pub samples: Vec<CgfSample<T>>,
    pub form: CgfForm,
    /// Reference density `ρ_KZM` used to rescale the rate function.
    pub rho_kzm: T,
    /// System size for finite-N curves.
    pub n_sites: Option<usize>,
    /// `lim_{θ→−∞} λ(θ)`, i.e. `−I(0)`, when known.
    pub lambda_floor: Option<T>,
}

impl<T: Real> CgfCurve<T> {
    /// Replaces the reference density, e.g. by `ρ_KZM(ξ²τ_Q)` for a
    /// long-range chain with renormalized quench time.
    pub fn with_reference_density(mut self, rho_kzm: T) -> Self {
        self.rho_kzm = rho_kzm;
        self
    }

    pub fn thetas(&self) -> impl Iterator<Item = T> + '_ {
        self.samples.iter().map(|s| s.theta)
    }

    pub fn lambdas(&self) -> impl Iterator<Item = T> + '_ {
        self.samples.iter().map(|s| s.lambda)
    }

    /// Checks that second differences are at least `-tol`, accounting for
    /// non-uniform spacing.
    pub fn check_convex(&self, tol: T) -> Result<()> {
        for (i, w) in self.samples.windows(3).enumerate() {
            let left = (w[1].lambda - w[0].lambda) / (w[1].theta - w[0].theta);
            let right = (w[2].lambda - w[1].lambda) / (w[2].theta - w[1].theta);
            let second = (right - left) * (w[2].theta - w[0].theta) * T::half();
            if second < -tol {
                return Err(Error::NonConvex {
                    index: i + 1,
                    second_difference: second.to_f64_lossy(),
                });
            }
        }
        Ok(())
    }
}

/// Uniform grid of `steps` points; `steps = 1` yields `[min]`.
pub fn theta_grid<T: Real>(min: T, max: T, steps: usize) -> Result<Vec<T>> {
    if steps == 0 || !(min <= max) || (steps > 1 && min == max) {
        return Err(Error::InvalidArgument(format!(
            "theta grid needs min < max and at least one step (got [{min}, {max}], {steps})"
        )));
    }
    if steps == 1 {
        return Ok(vec![min]);
    }
    let h = (max - min) / T::from_usize_lossy(steps - 1);
    Ok((0..steps)
        .map(|i| {
            if i == steps - 1 {
                max
            } else {
                min + h * T::from_usize_lossy(i)
            }
        })
        .collect())
}

/// `ln(1 + (e^θ − 1) p)` without overflow for large θ.
pub fn log_mode_factor<T: Real>(theta: T, p: T) -> T {
    log_mode_factor_split(theta, p, T::one() - p)
}

/// As [`log_mode_factor`] with the complement `q = 1 − p` supplied exactly.
fn log_mode_factor_split<T: Real>(theta: T, p: T, q: T) -> T {
    if p == T::zero() {
        return T::zero();
    }
    let log_weight = theta + p.ln();
    if theta > T::zero() && log_weight > T::zero() {
        return log_weight + ((-theta).exp() * q / p).ln_1p();
    }
    let shift = theta.exp_m1() * p;
    if shift > -T::half() {
        shift.ln_1p()
    } else {
        // expm1 rounds to −1 for very negative θ; keep the e^θ p part.
        (q + p * theta.exp()).ln()
    }
}

/// Tilted occupation `e^θ p / (1 + (e^θ − 1) p)`, the θ-derivative of
/// [`log_mode_factor`].
fn tilted_occupation<T: Real>(theta: T, p: T) -> T {
    if p == T::zero() {
        return T::zero();
    }
    p / (p + (-theta).exp() * (T::one() - p))
}

/// `λ_N(θ) = (1/N) Σ_k ln[1 + (e^θ − 1) p_k]`.
pub fn cgf_finite_n<T: Real>(profile: &ExcitationProfile<T>, thetas: &[T]) -> Result<CgfCurve<T>> {
    if profile.is_empty() {
        return Err(Error::InvalidArgument("empty excitation profile".into()));
    }
    let n = T::from_usize_lossy(profile.n_sites());
    let probs: Vec<T> = profile.probabilities().collect();
    let samples = thetas
        .iter()
        .map(|&theta| {
            let (mut lambda, mut slope) = (T::zero(), T::zero());
            for &p in &probs {
                lambda += log_mode_factor(theta, p);
                slope += tilted_occupation(theta, p);
            }
            CgfSample {
                theta,
                lambda: lambda / n,
                slope: slope / n,
            }
        })
        .collect();
    let floor = probs.iter().map(|&p| (-p).ln_1p()).sum::<T>() / n;
    Ok(CgfCurve {
        samples,
        form: CgfForm::FiniteN,
        rho_kzm: rho_kzm(profile.tau_q),
        n_sites: Some(profile.n_sites()),
        lambda_floor: Some(floor),
    })
}

fn check_tau<T: Real>(tau_q: T) -> Result<()> {
    if tau_q > T::zero() && tau_q.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "tau_q",
            value: tau_q.to_f64_lossy(),
            domain: "(0, inf)",
        })
    }
}

/// `λ(θ) = ∫_0^{k_max} dk/2π ln[1 + (e^θ − 1) e^{−2πτ_Q k²}]` by adaptive
/// quadrature with absolute error below `1e-10`.
pub fn cgf_integral<T: Real>(tau_q: T, thetas: &[T], k_max: T) -> Result<CgfCurve<T>> {
    check_tau(tau_q)?;
    if !(k_max > T::zero()) {
        return Err(Error::Domain {
            what: "k_max",
            value: k_max.to_f64_lossy(),
            domain: "(0, inf)",
        });
    }
    let rate = T::two() * T::PI() * tau_q;
    let width = T::one() / rate.sqrt();
    let two_pi = T::two() * T::PI();
    let tol = Tolerance::new(
        T::lit(1e-12).max(T::epsilon()),
        T::lit(1e-13).max(T::epsilon()),
    );
    let samples = thetas
        .iter()
        .map(|&theta| {
            let mut breaks: Vec<T> = [1.0, 2.0, 4.0, 8.0]
                .iter()
                .map(|&m| width * T::lit(m))
                .collect();
            if theta > T::zero() {
                // Edge where (e^θ − 1) p_k crosses one.
                let edge = (theta.exp_m1().ln() / rate).max(T::zero()).sqrt();
                breaks.extend([edge, edge + width]);
            } else {
                // The logarithm is cut off at k ~ e^{θ/2} · width.
                let mut k = width * (theta * T::half()).exp();
                while k < width {
                    breaks.push(k);
                    k *= T::lit(8.0);
                }
            }
            let lambda = integrate(
                |k: T| {
                    let x = rate * k * k;
                    log_mode_factor_split(theta, (-x).exp(), -(-x).exp_m1())
                },
                T::zero(),
                k_max,
                &breaks,
                &tol,
            )? / two_pi;
            let slope = integrate(
                |k: T| tilted_occupation(theta, (-rate * k * k).exp()),
                T::zero(),
                k_max,
                &breaks,
                &tol,
            )? / two_pi;
            Ok(CgfSample {
                theta,
                lambda,
                slope,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    // ∫ ln(1 − p_k): logarithmic singularity at k = 0.
    let mut breaks = vec![width];
    while breaks[breaks.len() - 1] > width * T::lit(1e-12) {
        let b = breaks[breaks.len() - 1] / T::lit(8.0);
        breaks.push(b);
    }
    let floor = integrate(
        |k: T| (-(-rate * k * k).exp_m1()).ln(),
        T::zero(),
        k_max,
        &breaks,
        &tol,
    )? / two_pi;
    Ok(CgfCurve {
        samples,
        form: CgfForm::Integral,
        rho_kzm: rho_kzm(tau_q),
        n_sites: None,
        lambda_floor: Some(floor),
    })
}

/// `λ(θ) = −ρ_KZM Li_{3/2}(1 − e^θ)`.
pub fn cgf_polylog<T: Real>(tau_q: T, thetas: &[T]) -> Result<CgfCurve<T>> {
    check_tau(tau_q)?;
    let rho = rho_kzm(tau_q);
    let samples = thetas
        .iter()
        .map(|&theta| {
            let lambda = -rho * polylog_one_minus_exp(PolylogOrder::ThreeHalves, theta)?;
            Ok(CgfSample {
                theta,
                lambda,
                slope: rho * polylog_slope_factor(theta)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CgfCurve {
        samples,
        form: CgfForm::Polylog,
        rho_kzm: rho,
        n_sites: None,
        lambda_floor: Some(-rho * zeta_three_halves::<T>()),
    })
}

/// `−(e^θ/(e^θ−1)) Li_{1/2}(1−e^θ)`, the slope of `−Li_{3/2}(1−e^θ)`.
pub fn polylog_slope_factor<T: Real>(theta: T) -> Result<T> {
    let x = -theta.exp_m1();
    let e = theta.exp();
    if x > T::lit(0.5) {
        Ok(e * polylog_one_minus_exp(PolylogOrder::Half, theta)? / x)
    } else {
        Ok(e * polylog_ratio(PolylogOrder::Half, x)?)
    }
}
