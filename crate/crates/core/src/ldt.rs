//! Large deviations: Legendre-Fenchel transforms, the universal rate
//! function, Chernoff bounds and the classical binomial scenario.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fcs::{polylog_slope_factor, CgfCurve, CgfForm, CumulantSet};
use crate::scalar::Real;
use crate::special::{polylog_one_minus_exp, zeta_three_halves, PolylogOrder};

const BISECTION_STEPS: usize = 200;

/// Origin of a rate-function curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RateForm {
    /// Closed form through `θ*`.
    AnalyticPolylog,
    /// Numerical transform of a finite-N CGF.
    FiniteNNumeric,
    /// Numerical transform of an infinite-size CGF (integral or polylog).
    InfiniteNNumeric,
    /// Quadratic rate matching the first two cumulants.
    CltReference,
    /// Binomial defect statistics of the general scenario.
    Classical,
}

impl RateForm {
    pub fn label(self) -> &'static str {
        match self {
            Self::AnalyticPolylog => "analytic_polylog",
            Self::FiniteNNumeric => "finite_n_numeric",
            Self::InfiniteNNumeric => "infinite_n_numeric",
            Self::CltReference => "clt_reference",
            Self::Classical => "classical",
        }
    }
}

/// One point `(ρ̄, Ī(ρ̄))` with the maximizing tilt `θ* = dĪ/dρ̄`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSample<T> {
    pub rho_bar: T,
    pub i_bar: T,
    pub theta_star: T,
    /// The supremum sat on the edge of the sampled θ range, so `i_bar` is
    /// only a lower bound.
    pub boundary: bool,
}

/// Rate function in the scaled variables `ρ̄ = ρ/ρ_KZM`, `Ī = I/ρ_KZM`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFunctionCurve<T> {
    pub samples: Vec<RateSample<T>>,
    pub form: RateForm,
    pub rho_kzm: T,
    pub n_sites: Option<usize>,
}

impl<T: Real> RateFunctionCurve<T> {
    /// Sample with the smallest `Ī`.
    pub fn argmin(&self) -> Option<&RateSample<T>> {
        self.samples
            .iter()
            .filter(|s| s.i_bar.is_finite())
            .min_by(|a, b| a.i_bar.partial_cmp(&b.i_bar).expect("finite rates"))
    }

    /// Inverse transform `λ(θ) = ρ_KZM sup_ρ̄ [θρ̄ − Ī(ρ̄)]` on the samples.
    pub fn to_cgf(&self, thetas: &[T]) -> Result<Vec<T>> {
        let pts: Vec<Knot<T>> = self
            .samples
            .iter()
            .filter(|s| s.i_bar.is_finite() && s.theta_star.is_finite())
            .map(|s| Knot {
                x: s.rho_bar,
                f: s.i_bar,
                df: s.theta_star,
            })
            .collect();
        check_knots(&pts)?;
        Ok(thetas
            .iter()
            .map(|&theta| conjugate(&pts, theta).value * self.rho_kzm)
            .collect())
    }
}

#[derive(Debug, Clone, Copy)]
struct Knot<T> {
    x: T,
    f: T,
    df: T,
}

struct Conjugate<T> {
    value: T,
    arg: T,
    boundary: bool,
}

fn check_knots<T: Real>(pts: &[Knot<T>]) -> Result<()> {
    if pts.len() < 2 {
        return Err(Error::InvalidArgument(
            "a conjugate needs at least two samples".into(),
        ));
    }
    if pts.windows(2).any(|w| !(w[1].x > w[0].x)) {
        return Err(Error::InvalidArgument(
            "samples must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// `sup_x [x y − f(x)]` over the knot range for convex `f`, refined between
/// knots by the cubic Hermite interpolant.
fn conjugate<T: Real>(pts: &[Knot<T>], y: T) -> Conjugate<T> {
    let first = pts[0];
    let last = pts[pts.len() - 1];
    let edge = |k: Knot<T>| Conjugate {
        value: k.x * y - k.f,
        arg: k.x,
        boundary: true,
    };
    if y < first.df {
        return edge(first);
    }
    if y > last.df {
        return edge(last);
    }
    // First interval whose right slope reaches y.
    let i = pts.partition_point(|k| k.df < y).clamp(1, pts.len() - 1);
    let (a, b) = (pts[i - 1], pts[i]);
    let h = b.x - a.x;
    let slope_at = |t: T| {
        let six = T::lit(6.0);
        let three = T::lit(3.0);
        let q = six * t * t - six * t;
        (q * a.f - q * b.f) / h
            + (three * t * t - T::lit(4.0) * t + T::one()) * a.df
            + (three * t * t - T::two() * t) * b.df
    };
    let (mut lo, mut hi) = (T::zero(), T::one());
    for _ in 0..BISECTION_STEPS {
        let mid = (lo + hi) * T::half();
        if mid <= lo || mid >= hi {
            break;
        }
        if slope_at(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = (lo + hi) * T::half();
    let t2 = t * t;
    let t3 = t2 * t;
    let three = T::lit(3.0);
    let value = (T::two() * t3 - three * t2 + T::one()) * a.f
        + (t3 - T::two() * t2 + t) * h * a.df
        + (three * t2 - T::two() * t3) * b.f
        + (t3 - t2) * h * b.df;
    let x = a.x + t * h;
    Conjugate {
        value: x * y - value,
        arg: x,
        boundary: false,
    }
}

fn cgf_knots<T: Real>(curve: &CgfCurve<T>) -> Result<Vec<Knot<T>>> {
    curve.check_convex(T::lit(1e-9))?;
    let pts: Vec<Knot<T>> = curve
        .samples
        .iter()
        .map(|s| Knot {
            x: s.theta,
            f: s.lambda,
            df: s.slope,
        })
        .collect();
    check_knots(&pts)?;
    Ok(pts)
}

/// `I(ρ) = sup_θ [θρ − λ(θ)]` at `ρ = ρ̄ ρ_KZM`, returned in scaled form.
pub fn legendre_fenchel<T: Real>(
    curve: &CgfCurve<T>,
    rho_bar_grid: &[T],
) -> Result<RateFunctionCurve<T>> {
    let pts = cgf_knots(curve)?;
    let rho_kzm = curve.rho_kzm;
    let samples = rho_bar_grid
        .par_iter()
        .map(|&rho_bar| {
            // A finite floor means a count supported on n ≥ 0.
            if rho_bar < T::zero() && curve.lambda_floor.is_some() {
                return RateSample {
                    rho_bar,
                    i_bar: T::infinity(),
                    theta_star: T::neg_infinity(),
                    boundary: false,
                };
            }
            if let (true, Some(floor)) = (rho_bar == T::zero(), curve.lambda_floor) {
                return RateSample {
                    rho_bar,
                    i_bar: -floor / rho_kzm,
                    theta_star: T::neg_infinity(),
                    boundary: false,
                };
            }
            let c = conjugate(&pts, rho_bar * rho_kzm);
            RateSample {
                rho_bar,
                i_bar: c.value / rho_kzm,
                theta_star: c.arg,
                boundary: c.boundary,
            }
        })
        .collect();
    let form = match curve.form {
        CgfForm::FiniteN => RateForm::FiniteNNumeric,
        CgfForm::Integral | CgfForm::Polylog => RateForm::InfiniteNNumeric,
    };
    Ok(RateFunctionCurve {
        samples,
        form,
        rho_kzm,
        n_sites: curve.n_sites,
    })
}

/// Solves `ρ̄ = −(e^θ/(e^θ−1)) Li_{1/2}(1−e^θ)` for θ.
pub fn theta_star<T: Real>(rho_bar: T) -> Result<T> {
    if !(rho_bar > T::zero()) || !rho_bar.is_finite() {
        return Err(Error::Domain {
            what: "rho_bar",
            value: rho_bar.to_f64_lossy(),
            domain: "(0, inf)",
        });
    }
    if rho_bar == T::one() {
        return Ok(T::zero());
    }
    let residual = |theta: T| -> Result<T> { Ok(polylog_slope_factor(theta)? - rho_bar) };
    let limit = T::lit(700.0);
    let (mut lo, mut hi) = if rho_bar < T::one() {
        (-T::one(), T::zero())
    } else {
        (T::zero(), T::one())
    };
    while residual(lo)? > T::zero() {
        hi = lo;
        lo *= T::two();
        if lo < -limit {
            return Err(Error::Bracketing(format!(
                "no root below rho_bar = {rho_bar}"
            )));
        }
    }
    while residual(hi)? < T::zero() {
        lo = hi;
        hi *= T::two();
        if hi > limit {
            return Err(Error::Bracketing(format!(
                "no root above rho_bar = {rho_bar}"
            )));
        }
    }
    let tol = T::lit(1e-12).max(T::epsilon() * T::lit(16.0));
    for _ in 0..BISECTION_STEPS {
        let mid = (lo + hi) * T::half();
        if mid <= lo || mid >= hi {
            break;
        }
        let r = residual(mid)?;
        if r.abs() < tol * rho_bar.max(T::one()) {
            return Ok(mid);
        }
        if r < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) * T::half())
}

/// `Ī(ρ̄) = θ*ρ̄ + Li_{3/2}(1 − e^{θ*})`, with `Ī(0) = ζ(3/2)`.
pub fn analytic_rate_function<T: Real>(rho_bar_grid: &[T]) -> Result<RateFunctionCurve<T>> {
    let samples = rho_bar_grid
        .par_iter()
        .map(|&rho_bar| {
            if rho_bar == T::zero() {
                return Ok(RateSample {
                    rho_bar,
                    i_bar: zeta_three_halves(),
                    theta_star: T::neg_infinity(),
                    boundary: false,
                });
            }
            let theta = theta_star(rho_bar)?;
            Ok(RateSample {
                rho_bar,
                i_bar: theta * rho_bar + polylog_one_minus_exp(PolylogOrder::ThreeHalves, theta)?,
                theta_star: theta,
                boundary: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RateFunctionCurve {
        samples,
        form: RateForm::AnalyticPolylog,
        rho_kzm: T::one(),
        n_sites: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TailSide {
    /// `P(ρ_N ≥ ρ)`, optimized over `θ ≥ 0`.
    Upper,
    /// `P(ρ_N ≤ ρ)`, optimized over `θ ≤ 0`.
    Lower,
}

/// Rate restricted to one sign of θ; always a valid Chernoff exponent even
/// when the sampled θ range is too short to reach the true supremum.
pub fn one_sided_rate<T: Real>(curve: &CgfCurve<T>, rho: T, side: TailSide) -> Result<T> {
    let pts = cgf_knots(curve)?;
    let keep = |x: T| match side {
        TailSide::Upper => x >= T::zero(),
        TailSide::Lower => x <= T::zero(),
    };
    let restricted: Vec<Knot<T>> = pts.iter().copied().filter(|k| keep(k.x)).collect();
    match restricted.len() {
        0 => Ok(T::zero()),
        1 => Ok((restricted[0].x * rho - restricted[0].f).max(T::zero())),
        _ => Ok(conjugate(&restricted, rho).value.max(T::zero())),
    }
}

/// `−N I(ρ)`: upper bound on `ln P(ρ_N ≥ ρ)` or `ln P(ρ_N ≤ ρ)`.
pub fn chernoff_tail_bound<T: Real>(curve: &CgfCurve<T>, rho: T, side: TailSide) -> Result<T> {
    let n = curve.n_sites.ok_or_else(|| {
        Error::InvalidArgument("Chernoff bound needs a finite-N generating function".into())
    })?;
    Ok(-T::from_usize_lossy(n) * one_sided_rate(curve, rho, side)?)
}

/// Quadratic reference `Ī = (ρ − κ₁/N)² N / (2κ₂) / ρ_KZM`.
pub fn clt_rate_function<T: Real>(
    cumulants: &CumulantSet<T>,
    n_sites: usize,
    rho_kzm: T,
    rho_bar_grid: &[T],
) -> Result<RateFunctionCurve<T>> {
    if !(cumulants.kappa2 > T::zero()) {
        return Err(Error::InvalidArgument(
            "CLT reference needs a positive variance".into(),
        ));
    }
    let n = T::from_usize_lossy(n_sites);
    let mean = cumulants.kappa1 / n;
    let curvature = n / cumulants.kappa2;
    let samples = rho_bar_grid
        .iter()
        .map(|&rho_bar| {
            let delta = rho_bar * rho_kzm - mean;
            RateSample {
                rho_bar,
                i_bar: delta * delta * curvature * T::half() / rho_kzm,
                theta_star: delta * curvature,
                boundary: false,
            }
        })
        .collect();
    Ok(RateFunctionCurve {
        samples,
        form: RateForm::CltReference,
        rho_kzm,
        n_sites: Some(n_sites),
    })
}

/// Critical exponents and amplitudes of the general scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KzmScalingParams<T> {
    pub nu: T,
    pub z: T,
    pub d: T,
    pub xi0: T,
    pub tau0: T,
    pub f_factor: T,
    pub p_success: T,
    pub volume: T,
}

impl<T: Real> KzmScalingParams<T> {
    pub fn validated(self) -> Result<Self> {
        let named = [
            ("nu", self.nu),
            ("z", self.z),
            ("d", self.d),
            ("xi0", self.xi0),
            ("tau0", self.tau0),
            ("f_factor", self.f_factor),
            ("volume", self.volume),
        ];
        for (what, v) in named {
            if !(v > T::zero() && v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "{what} = {v} must be positive"
                )));
            }
        }
        if !(self.p_success > T::zero() && self.p_success < T::one()) {
            return Err(Error::Domain {
                what: "p_success",
                value: self.p_success.to_f64_lossy(),
                domain: "(0, 1)",
            });
        }
        Ok(self)
    }

    /// `ν / (1 + zν)`.
    pub fn length_exponent(&self) -> T {
        self.nu / (T::one() + self.z * self.nu)
    }

    /// `−dν / (1 + zν)`.
    pub fn density_exponent(&self) -> T {
        -self.d * self.length_exponent()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefectScaling<T> {
    pub xi_hat: T,
    pub n_domains: T,
    pub rho: T,
}

/// `ξ̂ = ξ₀(τ_Q/τ₀)^{ν/(1+zν)}`, `𝒩 = V/(f ξ̂^d)`, `ρ = p𝒩/V`.
pub fn kzm_defect_scaling<T: Real>(
    params: &KzmScalingParams<T>,
    tau_q: T,
) -> Result<DefectScaling<T>> {
    let params = params.validated()?;
    if !(tau_q > T::zero()) {
        return Err(Error::Domain {
            what: "tau_q",
            value: tau_q.to_f64_lossy(),
            domain: "(0, inf)",
        });
    }
    let xi_hat = params.xi0 * (tau_q / params.tau0).powf(params.length_exponent());
    let n_domains = params.volume / (params.f_factor * xi_hat.powf(params.d));
    Ok(DefectScaling {
        xi_hat,
        n_domains,
        rho: params.p_success * n_domains / params.volume,
    })
}

fn check_probability<T: Real>(what: &'static str, x: T) -> Result<()> {
    if x >= T::zero() && x <= T::one() {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value: x.to_f64_lossy(),
            domain: "[0, 1]",
        })
    }
}

/// `x ln(x/y)` with `0 ln 0 = 0` and `+∞` when `y = 0 < x`.
fn relative_entropy_term<T: Real>(x: T, y: T) -> T {
    if x == T::zero() {
        T::zero()
    } else if y == T::zero() {
        T::infinity()
    } else {
        x * (x / y).ln()
    }
}

/// `D(r‖p) = r ln(r/p) + (1−r) ln((1−r)/(1−p))`.
pub fn kl_divergence_bernoulli<T: Real>(r: T, p: T) -> Result<T> {
    check_probability("r", r)?;
    check_probability("p", p)?;
    Ok(relative_entropy_term(r, p) + relative_entropy_term(T::one() - r, T::one() - p))
}

/// Exact `ln P(S = k)` for `S ~ Binomial(n, p)`.
pub fn binomial_log_pmf<T: Real>(n: usize, k: usize, p: T) -> Result<T> {
    check_probability("p", p)?;
    if k > n {
        return Ok(T::neg_infinity());
    }
    let mut log_choose = T::zero();
    let k_small = k.min(n - k);
    for i in 1..=k_small {
        log_choose += (T::from_usize_lossy(n - k_small + i) / T::from_usize_lossy(i)).ln();
    }
    let term = |count: usize, q: T| {
        if count == 0 {
            T::zero()
        } else {
            T::from_usize_lossy(count) * q.ln()
        }
    };
    Ok(log_choose + term(k, p) + term(n - k, T::one() - p))
}

/// Exact `ln P(S ≥ k)` (upper) or `ln P(S ≤ k)` (lower) by log-sum-exp.
pub fn binomial_log_tail<T: Real>(n: usize, k: usize, p: T, side: TailSide) -> Result<T> {
    let range: Vec<usize> = match side {
        TailSide::Upper => (k.min(n + 1)..=n).collect(),
        TailSide::Lower => (0..=k.min(n)).collect(),
    };
    let logs = range
        .into_iter()
        .map(|m| binomial_log_pmf(n, m, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(log_sum_exp(&logs))
}

pub(crate) fn log_sum_exp<T: Real>(logs: &[T]) -> T {
    let max = logs.iter().copied().fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() {
        return max;
    }
    max + logs.iter().map(|&l| (l - max).exp()).sum::<T>().ln()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinomialLdp<T> {
    /// `−½ ln(2π r(1−r)𝒩) − 𝒩 D(r‖p)`.
    pub estimate: T,
    /// Exact log-pmf at `k = round(r𝒩)`.
    pub exact: T,
    pub successes: usize,
}

/// Stirling estimate of `ln P(S = r𝒩)` alongside the exact value.
pub fn binomial_ldp_estimate<T: Real>(n_trials: usize, r: T, p: T) -> Result<BinomialLdp<T>> {
    if !(r > T::zero() && r < T::one()) {
        return Err(Error::Domain {
            what: "r",
            value: r.to_f64_lossy(),
            domain: "(0, 1)",
        });
    }
    if n_trials == 0 {
        return Err(Error::InvalidArgument(
            "binomial needs at least one trial".into(),
        ));
    }
    let n = T::from_usize_lossy(n_trials);
    let successes = (r * n)
        .round()
        .to_usize()
        .expect("r in (0, 1) keeps r N in range");
    let estimate = -T::half() * (T::two() * T::PI() * r * (T::one() - r) * n).ln()
        - n * kl_divergence_bernoulli(r, p)?;
    Ok(BinomialLdp {
        estimate,
        exact: binomial_log_pmf(n_trials, successes, p)?,
        successes,
    })
}

/// `Ī(ρ̄) = D(ρ̄p‖p)/p`, i.e. `I = ρ_KZM D(ρ̄p‖p)/p` at the classical
/// density for `tau_q`.
pub fn classical_rate_function<T: Real>(
    params: &KzmScalingParams<T>,
    tau_q: T,
    rho_bar_grid: &[T],
) -> Result<RateFunctionCurve<T>> {
    let scaling = kzm_defect_scaling(params, tau_q)?;
    let p = params.p_success;
    let samples = rho_bar_grid
        .iter()
        .map(|&rho_bar| {
            let r = rho_bar * p;
            if !(r >= T::zero() && r <= T::one()) {
                return Err(Error::Domain {
                    what: "rho_bar * p",
                    value: r.to_f64_lossy(),
                    domain: "[0, 1]",
                });
            }
            // dĪ/dρ̄ = ln[r(1−p) / (p(1−r))].
            let theta = (r * (T::one() - p) / (p * (T::one() - r))).ln();
            Ok(RateSample {
                rho_bar,
                i_bar: kl_divergence_bernoulli(r, p)? / p,
                theta_star: theta,
                boundary: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RateFunctionCurve {
        samples,
        form: RateForm::Classical,
        rho_kzm: scaling.rho,
        n_sites: None,
    })
}

/// `−V I(ρ̄) = −𝒩 D(ρ̄p‖p)`, the log-probability exponent of the classical
/// density.
pub fn classical_log_probability_exponent<T: Real>(
    params: &KzmScalingParams<T>,
    tau_q: T,
    rho_bar: T,
) -> Result<T> {
    let curve = classical_rate_function(params, tau_q, &[rho_bar])?;
    Ok(-params.volume * curve.rho_kzm * curve.samples[0].i_bar)
}
