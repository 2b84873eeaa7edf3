//! Driven transverse-field Ising chain and its long-range Kitaev deformation,
//! reduced to independent momentum-mode two-level problems.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Linear ramp `g(t) = g_c (1 - t / tau_q)` on the window `[t_start, t_end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuenchProtocol<T> {
    pub g_c: T,
    /// Quench time in units of `hbar / J`.
    pub tau_q: T,
    pub t_start: T,
    pub t_end: T,
    pub j: T,
    pub hbar: T,
}

impl<T: Real> QuenchProtocol<T> {
    /// Ramp from `g = 4 g_c` at `t = -3 tau_q` down to `g = 0` at `t = tau_q`,
    /// with `J = hbar = 1`.
    pub fn new(tau_q: T) -> Result<Self> {
        Self {
            g_c: T::one(),
            tau_q,
            t_start: -T::lit(3.0) * tau_q,
            t_end: tau_q,
            j: T::one(),
            hbar: T::one(),
        }
        .validated()
    }

    pub fn with_window(mut self, t_start: T, t_end: T) -> Result<Self> {
        self.t_start = t_start;
        self.t_end = t_end;
        self.validated()
    }

    pub fn validated(self) -> Result<Self> {
        let finite = [
            self.g_c,
            self.tau_q,
            self.t_start,
            self.t_end,
            self.j,
            self.hbar,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidArgument(
                "quench protocol parameters must be finite".into(),
            ));
        }
        if self.tau_q <= T::zero() {
            return Err(Error::Domain {
                what: "tau_q",
                value: self.tau_q.to_f64_lossy(),
                domain: "(0, inf)",
            });
        }
        if self.t_start >= self.t_end {
            return Err(Error::InvalidArgument(format!(
                "t_start = {} must precede t_end = {}",
                self.t_start, self.t_end
            )));
        }
        if self.j <= T::zero() || self.hbar <= T::zero() {
            return Err(Error::InvalidArgument("J and hbar must be positive".into()));
        }
        Ok(self)
    }

    /// Dimensionless field at time `t`.
    pub fn field_at(&self, t: T) -> Result<T> {
        if t < self.t_start || t > self.t_end || t.is_nan() {
            return Err(Error::Domain {
                what: "t",
                value: t.to_f64_lossy(),
                domain: "[t_start, t_end]",
            });
        }
        Ok(self.field(t))
    }

    /// Unchecked ramp evaluation, used inside integrators.
    #[inline]
    pub(crate) fn field(&self, t: T) -> T {
        self.g_c * (T::one() - t / self.tau_q)
    }

    pub fn initial_field(&self) -> T {
        self.field(self.t_start)
    }

    pub fn final_field(&self) -> T {
        self.field(self.t_end)
    }

    /// `J tau_q / hbar`, the only combination entering the dynamics.
    pub fn dimensionless_quench_time(&self) -> T {
        self.j * self.tau_q / self.hbar
    }
}

/// Positive antiperiodic momenta `k = (2n + 1) pi / N`, `n = 0 .. N/2 - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid<T> {
    n_sites: usize,
    positive_modes: Vec<T>,
}

impl<T: Real> MomentumGrid<T> {
    pub fn new(n_sites: usize) -> Result<Self> {
        if n_sites == 0 || !n_sites.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "number of sites must be even and positive, got {n_sites}"
            )));
        }
        let n = T::from_usize_lossy(n_sites);
        let positive_modes = (0..n_sites / 2)
            .map(|i| T::from_usize_lossy(2 * i + 1) * T::PI() / n)
            .collect();
        Ok(Self {
            n_sites,
            positive_modes,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn modes(&self) -> &[T] {
        &self.positive_modes
    }

    pub fn len(&self) -> usize {
        self.positive_modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positive_modes.is_empty()
    }
}

/// Power-law pairing `kappa_{l,alpha}` of the long-range Kitaev chain.
#[derive(Debug, Clone, PartialEq)]
pub struct LongRangeSpec<T> {
    alpha: T,
    n_sites: usize,
    /// `kappa_{l,alpha}` for `l = 1 .. N-1` (index `l - 1`).
    coupling_table: Vec<T>,
    small_k_slope: T,
}

/// Momentum at which the small-k slope of the pairing function is sampled.
pub const SLOPE_PROBE_MOMENTUM: f64 = 1e-4;

impl<T: Real> LongRangeSpec<T> {
    pub fn new(alpha: T, n_sites: usize) -> Result<Self> {
        if !(alpha >= T::two()) {
            return Err(Error::UnsupportedRegime {
                alpha: alpha.to_f64_lossy(),
            });
        }
        if n_sites < 2 || !n_sites.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "number of sites must be even and at least 2, got {n_sites}"
            )));
        }
        let half = n_sites / 2;
        let coupling_table = (1..n_sites)
            .map(|l| {
                let d = if l <= half { l } else { n_sites - l };
                T::from_usize_lossy(d).powf(-alpha)
            })
            .collect();
        let mut spec = Self {
            alpha,
            n_sites,
            coupling_table,
            small_k_slope: T::zero(),
        };
        let h = T::lit(SLOPE_PROBE_MOMENTUM);
        spec.small_k_slope = (spec.pairing(h) - spec.pairing(-h)) / (T::two() * h);
        Ok(spec)
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// `kappa_{l,alpha}` for `1 <= l <= N - 1`.
    pub fn coupling(&self, l: usize) -> Option<T> {
        l.checked_sub(1)
            .and_then(|i| self.coupling_table.get(i))
            .copied()
    }

    pub fn coupling_table(&self) -> &[T] {
        &self.coupling_table
    }

    /// Finite-difference slope `xi` of `f_{alpha k} ~ xi k` near `k = 0`.
    pub fn small_k_slope(&self) -> T {
        self.small_k_slope
    }

    /// `(1/2) sum_l kappa_l sin(k d_l)` where bonds with `l > N/2` enter at
    /// their wrapped distance `d_l = l - N`, carrying the antiperiodic sign.
    /// On the antiperiodic grid this is identical to the plain `sin(k l)` sum.
    fn pairing(&self, k: T) -> T {
        let n = self.n_sites;
        let half = n / 2;
        let mut acc = T::zero();
        for (i, &kappa) in self.coupling_table.iter().enumerate() {
            let l = i + 1;
            let arg = if l <= half {
                T::from_usize_lossy(l)
            } else {
                T::from_usize_lossy(n - l)
            };
            acc += kappa * (k * arg).sin();
        }
        acc * T::half()
    }
}

/// Pairing structure of the chain: nearest-neighbour (`sin k`) or power-law.
#[derive(Debug, Clone, PartialEq)]
pub enum Pairing<T> {
    ShortRange,
    LongRange(LongRangeSpec<T>),
}

impl<T: Real> Pairing<T> {
    /// Small-k slope: exactly 1 for the short-range chain.
    pub fn small_k_slope(&self) -> T {
        match self {
            Pairing::ShortRange => T::one(),
            Pairing::LongRange(spec) => spec.small_k_slope(),
        }
    }
}

/// `f_{alpha k}`; `sin k` for the short-range chain.
pub fn pairing_function<T: Real>(pairing: &Pairing<T>, k: T) -> Result<T> {
    if !(k > -T::PI() && k < T::PI()) {
        return Err(Error::Domain {
            what: "k",
            value: k.to_f64_lossy(),
            domain: "(-pi, pi)",
        });
    }
    Ok(match pairing {
        Pairing::ShortRange => k.sin(),
        Pairing::LongRange(spec) => spec.pairing(k),
    })
}

/// Coefficients of the mode Hamiltonian `drive * tau_z + pairing * tau_y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeHamiltonianParams<T> {
    pub k: T,
    pub pairing: T,
    /// `g - cos k`.
    pub drive: T,
}

impl<T: Real> ModeHamiltonianParams<T> {
    pub fn at(g: T, k: T, pairing: T) -> Self {
        Self {
            k,
            pairing,
            drive: g - k.cos(),
        }
    }

    /// Half the single-mode gap in units of `2J`: `sqrt(pairing^2 + drive^2)`.
    pub fn magnitude(&self) -> T {
        self.drive.hypot(self.pairing)
    }

    /// Dense 2x2 matrix in the `{|0>, |k,-k>}` basis.
    pub fn matrix(&self) -> [[Complex<T>; 2]; 2] {
        let a = self.drive;
        let b = self.pairing;
        let z = T::zero();
        [
            [Complex::new(a, z), Complex::new(z, -b)],
            [Complex::new(z, b), Complex::new(-a, z)],
        ]
    }
}

/// Bogoliubov angle with `cos theta = (g - cos k)/E`, `sin theta = f/E`.
pub fn bogoliubov_angle<T: Real>(g: T, k: T, pairing: T) -> Result<T> {
    let params = ModeHamiltonianParams::at(g, k, pairing);
    if params.drive == T::zero() && params.pairing == T::zero() {
        return Err(Error::DegeneratePoint {
            g: g.to_f64_lossy(),
            k: k.to_f64_lossy(),
        });
    }
    Ok(params.pairing.atan2(params.drive))
}

/// Quasiparticle energy `eps_k = 2 J sqrt(f^2 + (g - cos k)^2)`.
pub fn spectrum<T: Real>(g: T, k: T, pairing: T, j: T) -> T {
    T::two() * j * ModeHamiltonianParams::at(g, k, pairing).magnitude()
}
