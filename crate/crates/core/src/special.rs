//! Polylogarithm of half-integer order and the Riemann zeta function.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, Tolerance};
use crate::scalar::Real;

/// Supported orders of `Li_s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolylogOrder {
    Half,
    ThreeHalves,
}

impl PolylogOrder {
    /// Accepts `s = 1/2` or `s = 3/2`.
    pub fn new(s: f64) -> Result<Self> {
        if s == 0.5 {
            Ok(Self::Half)
        } else if s == 1.5 {
            Ok(Self::ThreeHalves)
        } else {
            Err(Error::InvalidArgument(format!(
                "polylog order {s} unsupported (only 1/2 and 3/2)"
            )))
        }
    }

    pub fn s(self) -> f64 {
        match self {
            Self::Half => 0.5,
            Self::ThreeHalves => 1.5,
        }
    }

    fn twice_s(self) -> i32 {
        match self {
            Self::Half => 1,
            Self::ThreeHalves => 3,
        }
    }

    /// Γ(s).
    fn gamma<T: Real>(self) -> T {
        let root_pi = T::PI().sqrt();
        match self {
            Self::Half => root_pi,
            Self::ThreeHalves => root_pi * T::half(),
        }
    }

    /// Γ(1 − s).
    fn gamma_reflected<T: Real>(self) -> T {
        let root_pi = T::PI().sqrt();
        match self {
            Self::Half => root_pi,
            Self::ThreeHalves => -T::two() * root_pi,
        }
    }
}

// B_2, B_4, ..., B_20.
const BERNOULLI: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

const EULER_MACLAURIN_CUTOFF: usize = 20;
const SERIES_RADIUS: f64 = 0.5;
const LOG_SERIES_TERMS: usize = 48;

/// Euler-Maclaurin evaluation, accurate for real `s > 0`, `s != 1`.
fn zeta_euler_maclaurin(s: f64) -> f64 {
    let n = EULER_MACLAURIN_CUTOFF as f64;
    let mut sum = 0.0;
    for m in (1..EULER_MACLAURIN_CUTOFF).rev() {
        sum += (m as f64).powf(-s);
    }
    let n_pow = n.powf(-s);
    sum += n * n_pow / (s - 1.0) + 0.5 * n_pow;
    // Term j is B_{2j}/(2j)! * s(s+1)...(s+2j-2) * N^{-s-2j+1}.
    let mut rising = s;
    let mut factorial = 2.0;
    let mut power = n_pow / n;
    for (i, &b) in BERNOULLI.iter().enumerate() {
        if i > 0 {
            let a = (2 * i) as f64;
            rising *= (s + a - 1.0) * (s + a);
            factorial *= (a + 1.0) * (a + 2.0);
        }
        sum += b / factorial * rising * power;
        power /= n * n;
    }
    sum
}

/// ζ(m/2) for odd `m`; negative arguments go through the functional equation.
fn zeta_half_integer(twice_s: i32) -> f64 {
    debug_assert!(twice_s % 2 != 0);
    let s = f64::from(twice_s) / 2.0;
    if s > 0.0 {
        return zeta_euler_maclaurin(s);
    }
    let reflected = 1.0 - s;
    // Γ(m + 1/2) by upward recursion from Γ(1/2).
    let mut gamma = std::f64::consts::PI.sqrt();
    let mut x = 0.5;
    while x < reflected - 0.25 {
        gamma *= x;
        x += 1.0;
    }
    let pi = std::f64::consts::PI;
    2f64.powf(s) * pi.powf(s - 1.0) * (pi * s / 2.0).sin() * gamma * zeta_euler_maclaurin(reflected)
}

/// ζ(s − k) for k = 0, 1, ..., feeding the expansion about x = 1.
fn zeta_shift_table(order: PolylogOrder) -> &'static [f64] {
    static HALF: OnceLock<Vec<f64>> = OnceLock::new();
    static THREE_HALVES: OnceLock<Vec<f64>> = OnceLock::new();
    let cell = match order {
        PolylogOrder::Half => &HALF,
        PolylogOrder::ThreeHalves => &THREE_HALVES,
    };
    cell.get_or_init(|| {
        (0..LOG_SERIES_TERMS as i32)
            .map(|k| zeta_half_integer(order.twice_s() - 2 * k))
            .collect()
    })
}

/// Riemann ζ(s) at half-integer `s = m/2`, `m` odd.
pub fn zeta_half<T: Real>(twice_s: i32) -> Result<T> {
    if twice_s % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "zeta_half expects an odd numerator, got {twice_s}"
        )));
    }
    Ok(T::lit(zeta_half_integer(twice_s)))
}

/// ζ(3/2).
pub fn zeta_three_halves<T: Real>() -> T {
    static VALUE: OnceLock<f64> = OnceLock::new();
    T::lit(*VALUE.get_or_init(|| zeta_euler_maclaurin(1.5)))
}

/// Direct series `Σ x^n / n^s`, intended for `|x| ≤ 1/2`.
pub fn polylog_series<T: Real>(order: PolylogOrder, x: T) -> T {
    x * polylog_series_ratio(order, x)
}

/// `Li_s(x) / x` by the direct series; the value at `x = 0` is 1.
fn polylog_series_ratio<T: Real>(order: PolylogOrder, x: T) -> T {
    let s = T::lit(order.s());
    let eps = T::epsilon() * T::lit(0.25);
    let mut sum = T::one();
    let mut power = T::one();
    let mut n = 1usize;
    loop {
        n += 1;
        power *= x;
        let term = power / T::from_usize_lossy(n).powf(s);
        sum += term;
        if term.abs() <= eps * sum.abs() || n > 4000 {
            return sum;
        }
    }
}

/// Integral representation for `x < 1` after the substitution `t = u²`:
/// `Li_s(x) = (2/Γ(s)) ∫ u^{2s−1} x/(e^{u²} − x) du`.
pub fn polylog_integral<T: Real>(order: PolylogOrder, x: T) -> Result<T> {
    if !(x < T::one()) {
        return Err(Error::Domain {
            what: "polylog integral argument",
            value: x.to_f64_lossy(),
            domain: "(-inf, 1)",
        });
    }
    if x == T::zero() {
        return Ok(T::zero());
    }
    let exponent = T::lit(2.0 * order.s() - 1.0);
    let integrand = |u: T| {
        let weight = if order == PolylogOrder::Half {
            T::one()
        } else {
            u.powf(exponent)
        };
        let denom = u * u - x.abs().ln();
        // x / (e^{u²} − x) written to stay finite for large |x|.
        let occupation = if x < T::zero() {
            -T::one() / (denom.exp() + T::one())
        } else {
            T::one() / (denom.exp() - T::one())
        };
        weight * occupation
    };
    let log_scale = x.abs().ln().max(T::zero());
    let upper = (log_scale + T::lit(45.0)).sqrt();
    let mut breaks = Vec::new();
    if log_scale > T::zero() {
        let edge = log_scale.sqrt();
        let width = T::one() / (edge + T::one());
        breaks.extend([edge - width, edge, edge + width]);
    }
    let eps = T::epsilon();
    let tol = Tolerance::new(
        T::lit(1e-16).max(eps * T::lit(8.0)),
        T::lit(1e-14).max(eps * T::lit(64.0)),
    );
    let value = integrate(integrand, T::zero(), upper, &breaks, &tol)?;
    Ok(T::two() * value / order.gamma::<T>())
}

/// `Li_s(e^μ)` for `μ ≤ 0` near the branch point, via
/// `Γ(1−s)(−μ)^{s−1} + Σ_k ζ(s−k) μ^k / k!`.
fn polylog_near_one<T: Real>(order: PolylogOrder, mu: T) -> T {
    if mu == T::zero() {
        return match order {
            PolylogOrder::Half => T::infinity(),
            PolylogOrder::ThreeHalves => zeta_three_halves(),
        };
    }
    let zetas = zeta_shift_table(order);
    let singular = order.gamma_reflected::<T>() * (-mu).powf(T::lit(order.s() - 1.0));
    let eps = T::epsilon() * T::lit(0.25);
    let mut sum = T::zero();
    let mut factor = T::one();
    for (k, &z) in zetas.iter().enumerate() {
        if k > 0 {
            factor = factor * mu / T::from_usize_lossy(k);
        }
        let term = T::lit(z) * factor;
        sum += term;
        if k > 2 && term.abs() <= eps * (sum.abs() + singular.abs()) {
            break;
        }
    }
    singular + sum
}

/// `Li_s(x)` for real `x ≤ 1`.
pub fn polylog<T: Real>(order: PolylogOrder, x: T) -> Result<T> {
    let half = T::lit(SERIES_RADIUS);
    if x.is_nan() || x > T::one() {
        return Err(Error::Domain {
            what: "polylog argument",
            value: x.to_f64_lossy(),
            domain: "(-inf, 1]",
        });
    }
    if x.abs() <= half {
        Ok(polylog_series(order, x))
    } else if x > T::zero() {
        Ok(polylog_near_one(order, x.ln()))
    } else {
        polylog_integral(order, x)
    }
}

/// `Li_s(1 − e^θ)`, keeping full precision as `θ → −∞` and `θ → 0`.
pub fn polylog_one_minus_exp<T: Real>(order: PolylogOrder, theta: T) -> Result<T> {
    let e = theta.exp();
    if e < T::lit(SERIES_RADIUS) {
        Ok(polylog_near_one(order, (-e).ln_1p()))
    } else {
        polylog(order, -theta.exp_m1())
    }
}

/// `Li_s(x) / x`, finite through `x = 0`.
pub fn polylog_ratio<T: Real>(order: PolylogOrder, x: T) -> Result<T> {
    if x.abs() <= T::lit(SERIES_RADIUS) {
        Ok(polylog_series_ratio(order, x))
    } else {
        Ok(polylog(order, x)? / x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ZETA_3_2: f64 = 2.612_375_348_685_488;

    #[test]
    fn order_validation() {
        assert_eq!(PolylogOrder::new(0.5).unwrap(), PolylogOrder::Half);
        assert_eq!(PolylogOrder::new(1.5).unwrap(), PolylogOrder::ThreeHalves);
        assert!(PolylogOrder::new(2.0).is_err());
    }

    #[test]
    fn zero_argument() {
        for order in [PolylogOrder::Half, PolylogOrder::ThreeHalves] {
            assert_eq!(polylog(order, 0.0f64).unwrap(), 0.0);
        }
    }

    #[test]
    fn zeta_values() {
        assert!((zeta_three_halves::<f64>() - ZETA_3_2).abs() < 1e-14);
        // ζ(1/2), ζ(5/2), ζ(−1/2).
        assert!((zeta_half::<f64>(1).unwrap() + 1.460_354_508_809_586_8).abs() < 1e-13);
        assert!((zeta_half::<f64>(5).unwrap() - 1.341_487_257_250_917).abs() < 1e-14);
        assert!((zeta_half::<f64>(-1).unwrap() + 0.207_886_224_977_354_57).abs() < 1e-14);
        assert!(zeta_half::<f64>(2).is_err());
    }

    #[test]
    fn branch_point() {
        let v: f64 = polylog(PolylogOrder::ThreeHalves, 1.0).unwrap();
        assert_eq!(v, zeta_three_halves::<f64>());
        let w: f64 = polylog(PolylogOrder::Half, 1.0).unwrap();
        assert!(w.is_infinite());
    }

    #[test]
    fn domain_error_above_one() {
        assert!(matches!(
            polylog(PolylogOrder::Half, 1.01f64),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn continuity_across_series_edge() {
        for order in [PolylogOrder::Half, PolylogOrder::ThreeHalves] {
            let below: f64 = polylog_series(order, 0.5);
            let above: f64 = polylog_near_one(order, 0.5f64.ln());
            assert!(
                (below - above).abs() < 1e-14,
                "{order:?}: {below} vs {above}"
            );
            let inner: f64 = polylog_series(order, -0.5);
            let outer: f64 = polylog_integral(order, -0.5).unwrap();
            assert!(
                (inner - outer).abs() < 1e-13,
                "{order:?}: {inner} vs {outer}"
            );
        }
    }

    #[test]
    fn one_minus_exp_matches_direct() {
        for &theta in &[-8.0f64, -1.0, -0.3, 0.0, 0.2, 1.5, 4.0] {
            for order in [PolylogOrder::Half, PolylogOrder::ThreeHalves] {
                let a = polylog_one_minus_exp(order, theta).unwrap();
                let b = polylog(order, 1.0 - theta.exp()).unwrap();
                assert!((a - b).abs() < 1e-11 * b.abs().max(1.0), "{theta}");
            }
        }
    }

    #[test]
    fn ratio_at_origin() {
        assert_eq!(polylog_ratio(PolylogOrder::Half, 0.0f64).unwrap(), 1.0);
        let r: f64 = polylog_ratio(PolylogOrder::Half, -2.0).unwrap();
        let li: f64 = polylog(PolylogOrder::Half, -2.0).unwrap();
        assert!((r - li / -2.0).abs() < 1e-15);
    }

    #[test]
    fn single_precision_runs() {
        let v: f32 = polylog(PolylogOrder::ThreeHalves, -1.0f32).unwrap();
        assert!((v + 0.765_147_04).abs() < 1e-5);
    }
}
