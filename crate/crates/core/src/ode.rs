//! Dormand-Prince 5(4) integrator for the two-component Schrodinger equation.

use num_complex::Complex;

use crate::scalar::Real;

pub type Spinor<T> = [Complex<T>; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl<T> {
    /// Largest accepted local error per step (max over both components).
    pub tol: T,
    pub initial_step: T,
    pub max_step: T,
    pub max_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntegrationError<T> {
    StepUnderflow { t: T },
    TooManySteps { t: T },
    NonFinite { t: T },
}

// Butcher tableau (Dormand & Prince 1980).
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b*, the embedded 4th-order weights subtracted from the 5th-order ones.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn axpy<T: Real>(y: &Spinor<T>, terms: &[(f64, &Spinor<T>)], h: T) -> Spinor<T> {
    let mut out = *y;
    for &(c, k) in terms {
        let w = h * T::lit(c);
        out[0] = out[0] + k[0] * w;
        out[1] = out[1] + k[1] * w;
    }
    out
}

/// Integrates `dy/dt = rhs(t, y)` from `t0` to `t1 > t0`.
pub fn integrate<T, F>(
    rhs: F,
    t0: T,
    y0: Spinor<T>,
    t1: T,
    control: &StepControl<T>,
) -> Result<(Spinor<T>, IntegrationStats), IntegrationError<T>>
where
    T: Real,
    F: Fn(T, &Spinor<T>) -> Spinor<T>,
{
    let mut t = t0;
    let mut y = y0;
    let mut h = control.initial_step.min(control.max_step).min(t1 - t0);
    let mut stats = IntegrationStats {
        accepted: 0,
        rejected: 0,
    };
    let mut k1 = rhs(t, &y);
    let min_step = T::epsilon() * T::lit(16.0) * t0.abs().max(t1.abs()).max(T::one());

    while t < t1 {
        if stats.accepted + stats.rejected >= control.max_steps {
            return Err(IntegrationError::TooManySteps { t });
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        if h < min_step && !last {
            return Err(IntegrationError::StepUnderflow { t });
        }

        let k2 = rhs(t + T::lit(C2) * h, &axpy(&y, &[(A21, &k1)], h));
        let k3 = rhs(t + T::lit(C3) * h, &axpy(&y, &[(A31, &k1), (A32, &k2)], h));
        let k4 = rhs(
            t + T::lit(C4) * h,
            &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h),
        );
        let k5 = rhs(
            t + T::lit(C5) * h,
            &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h),
        );
        let k6 = rhs(
            t + h,
            &axpy(
                &y,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                h,
            ),
        );
        let y_new = axpy(
            &y,
            &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
            h,
        );
        let t_new = if last { t1 } else { t + h };
        let k7 = rhs(t_new, &y_new);
        let zero = [Complex::new(T::zero(), T::zero()); 2];
        let err_vec = axpy(
            &zero,
            &[
                (E1, &k1),
                (E3, &k3),
                (E4, &k4),
                (E5, &k5),
                (E6, &k6),
                (E7, &k7),
            ],
            h,
        );
        let err = err_vec[0].norm().max(err_vec[1].norm());
        if !err.is_finite() || !y_new[0].norm().is_finite() {
            return Err(IntegrationError::NonFinite { t });
        }

        let allowed = control.tol;
        let factor = if err == T::zero() {
            T::lit(5.0)
        } else {
            (T::lit(0.9) * (allowed / err).powf(T::lit(0.2)))
                .max(T::lit(0.2))
                .min(T::lit(5.0))
        };

        if err <= allowed {
            t = t_new;
            y = y_new;
            k1 = k7;
            stats.accepted += 1;
            h = (h * factor).min(control.max_step);
        } else {
            stats.rejected += 1;
            h *= factor.min(T::lit(0.9));
            if h < min_step {
                return Err(IntegrationError::StepUnderflow { t });
            }
        }
    }
    Ok((y, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn control(tol: f64) -> StepControl<f64> {
        StepControl {
            tol,
            initial_step: 1e-3,
            max_step: 1.0,
            max_steps: 1_000_000,
        }
    }

    #[test]
    fn static_rotation_matches_closed_form() {
        // dy/dt = -i w y  ->  y(t) = e^{-i w t} y(0)
        let w = 3.0;
        let rhs = |_t: f64, y: &Spinor<f64>| {
            let m = Complex::new(0.0, -w);
            [y[0] * m, -(y[1] * m)]
        };
        let y0 = [Complex::new(0.6, 0.0), Complex::new(0.0, 0.8)];
        let (y, stats) = integrate(rhs, 0.0, y0, 10.0, &control(1e-11)).unwrap();
        let expect0 = y0[0] * Complex::new(0.0, -w * 10.0).exp();
        let expect1 = y0[1] * Complex::new(0.0, w * 10.0).exp();
        assert!((y[0] - expect0).norm() < 1e-8);
        assert!((y[1] - expect1).norm() < 1e-8);
        assert!(stats.accepted > 10);
    }

    #[test]
    fn rabi_oscillation_population() {
        // H = W sigma_x: population transfer sin^2(W t).
        let wx = 0.7;
        let rhs = |_t: f64, y: &Spinor<f64>| {
            let mi = Complex::new(0.0, -wx);
            [y[1] * mi, y[0] * mi]
        };
        let y0 = [Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)];
        let t1 = 3.3;
        let (y, _) = integrate(rhs, 0.0, y0, t1, &control(1e-12)).unwrap();
        assert!((y[1].norm_sqr() - (wx * t1).sin().powi(2)).abs() < 1e-10);
    }

    #[test]
    fn step_budget_is_enforced() {
        let rhs = |_t: f64, y: &Spinor<f64>| {
            let m = Complex::new(0.0, -100.0);
            [y[0] * m, y[1] * m]
        };
        let mut c = control(1e-12);
        c.max_steps = 5;
        let y0 = [Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)];
        assert!(matches!(
            integrate(rhs, 0.0, y0, 10.0, &c),
            Err(IntegrationError::TooManySteps { .. })
        ));
    }
}
