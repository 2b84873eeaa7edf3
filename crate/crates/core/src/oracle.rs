//! Exact real-space evolution of small periodic Ising chains, used as an
//! independent check of the momentum-space pipeline.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fcs::KinkPairDistribution;
use crate::model::QuenchProtocol;

/// Largest chain the oracle accepts.
pub const MAX_SITES: usize = 12;

const LANCZOS_DIM: usize = 60;
const LANCZOS_RESTARTS: usize = 20;
const GROUND_RESIDUAL: f64 = 1e-12;
const DEFAULT_STEPS_PER_TAU: f64 = 1e4;
const CONVERGENCE_TV: f64 = 1e-8;
const MAX_HALVINGS: usize = 8;

fn check_sites(n_sites: usize) -> Result<()> {
    if n_sites > MAX_SITES {
        return Err(Error::ResourceLimit {
            n_sites,
            max: MAX_SITES,
        });
    }
    if n_sites < 2 || !n_sites.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "chain length must be even and at least 2, got {n_sites}"
        )));
    }
    Ok(())
}

/// Number of domain walls of a σ^z product state on a ring; bit `l` set
/// means spin `l` points down.
pub fn domain_walls(basis: usize, n_sites: usize) -> usize {
    let mask = (1usize << n_sites) - 1;
    let rotated = ((basis >> 1) | (basis << (n_sites - 1))) & mask;
    (basis ^ rotated).count_ones() as usize
}

/// Eigenvalue of `K_N = (1/4) Σ (1 − σ^z_l σ^z_{l+1})` on a product state.
pub fn kink_pairs(basis: usize, n_sites: usize) -> usize {
    domain_walls(basis, n_sites) / 2
}

/// `2^N` amplitudes over the σ^z product basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinChainState {
    amplitudes: Vec<Complex64>,
    n_sites: usize,
}

impl SpinChainState {
    /// Wraps amplitudes, rejecting states whose norm deviates from one by
    /// more than `1e-10`.
    pub fn new(amplitudes: Vec<Complex64>, n_sites: usize) -> Result<Self> {
        check_sites(n_sites)?;
        if amplitudes.len() != 1 << n_sites {
            return Err(Error::InvalidArgument(format!(
                "{} amplitudes for {n_sites} sites",
                amplitudes.len()
            )));
        }
        let state = Self {
            amplitudes,
            n_sites,
        };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "state norm {norm} is not 1"
            )));
        }
        Ok(state)
    }

    pub fn basis(index: usize, n_sites: usize) -> Result<Self> {
        check_sites(n_sites)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_sites];
        *amplitudes
            .get_mut(index)
            .ok_or_else(|| Error::InvalidArgument(format!("basis index {index} out of range")))? =
            Complex64::new(1.0, 0.0);
        Ok(Self {
            amplitudes,
            n_sites,
        })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn overlap(&self, other: &Self) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// `H = −J Σ_l [g σ^x_l + σ^z_l σ^z_{l+1}]` on a ring, applied matrix-free.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinHamiltonian {
    pub g: f64,
    pub j: f64,
    n_sites: usize,
    walls: Vec<usize>,
}

impl SpinHamiltonian {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        1 << self.n_sites
    }

    fn zz_energy(&self, walls: usize) -> f64 {
        -self.j * (self.n_sites as f64 - 2.0 * walls as f64)
    }

    fn apply_real(&self, x: &[f64], out: &mut [f64]) {
        for (s, o) in out.iter_mut().enumerate() {
            *o = self.zz_energy(self.walls[s]) * x[s];
        }
        let coupling = -self.j * self.g;
        for l in 0..self.n_sites {
            let bit = 1 << l;
            for (s, o) in out.iter_mut().enumerate() {
                *o += coupling * x[s ^ bit];
            }
        }
    }

    /// Dense matrix, for inspection of small chains.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        let mut e = vec![0.0; dim];
        let mut col = vec![0.0; dim];
        for c in 0..dim {
            e[c] = 1.0;
            self.apply_real(&e, &mut col);
            m.set_column(c, &nalgebra::DVector::from_column_slice(&col));
            e[c] = 0.0;
        }
        m
    }
}

pub fn build_hamiltonian(g: f64, n_sites: usize, j: f64) -> Result<SpinHamiltonian> {
    check_sites(n_sites)?;
    Ok(SpinHamiltonian {
        g,
        j,
        n_sites,
        walls: (0..1usize << n_sites)
            .map(|s| domain_walls(s, n_sites))
            .collect(),
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    n
}

/// Lowest eigenpair by restarted Lanczos with full reorthogonalization,
/// seeded with the uniform (all spins along +x) state.
pub fn ground_state(h: &SpinHamiltonian) -> Result<(f64, SpinChainState)> {
    let dim = h.dim();
    let mut start = vec![1.0; dim];
    normalize(&mut start);
    let mut scratch = vec![0.0; dim];
    let mut residual = f64::INFINITY;
    for _ in 0..LANCZOS_RESTARTS {
        let mut basis: Vec<Vec<f64>> = vec![start.clone()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        for step in 0..LANCZOS_DIM.min(dim) {
            let mut w = vec![0.0; dim];
            h.apply_real(&basis[step], &mut w);
            alpha.push(dot(&basis[step], &w));
            for _ in 0..2 {
                for v in &basis {
                    let c = dot(v, &w);
                    w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
                }
            }
            let b = normalize(&mut w);
            if b < 1e-13 || step + 1 == LANCZOS_DIM.min(dim) {
                break;
            }
            beta.push(b);
            basis.push(w);
        }
        let m = alpha.len();
        let mut t = DMatrix::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let (idx, &energy) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty Krylov space");
        let mut x = vec![0.0; dim];
        for (i, v) in basis.iter().take(m).enumerate() {
            let c = eig.eigenvectors[(i, idx)];
            x.iter_mut().zip(v).for_each(|(a, b)| *a += c * b);
        }
        normalize(&mut x);
        h.apply_real(&x, &mut scratch);
        residual = scratch
            .iter()
            .zip(&x)
            .map(|(hx, xi)| (hx - energy * xi).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual < GROUND_RESIDUAL * energy.abs().max(1.0) {
            let amplitudes = x.into_iter().map(|a| Complex64::new(a, 0.0)).collect();
            return Ok((
                energy,
                SpinChainState {
                    amplitudes,
                    n_sites: h.n_sites,
                },
            ));
        }
        start = x;
    }
    Err(Error::OracleNonConvergence {
        halvings: LANCZOS_RESTARTS,
        change: residual,
    })
}

/// Splitting propagator: the coupling part carries the clock, the field
/// part acts at frozen time.
struct Propagator<'a> {
    protocol: &'a QuenchProtocol<f64>,
    h: SpinHamiltonian,
}

impl Propagator<'_> {
    fn coupling_flow(&self, psi: &mut [Complex64], t: &mut f64, dt: f64) {
        let hbar = self.protocol.hbar;
        let phases: Vec<Complex64> = (0..=self.h.n_sites)
            .map(|w| Complex64::from_polar(1.0, -dt * self.h.zz_energy(w) / hbar))
            .collect();
        for (a, &w) in psi.iter_mut().zip(&self.h.walls) {
            *a *= phases[w];
        }
        *t += dt;
    }

    fn field_flow(&self, psi: &mut [Complex64], t: f64, dt: f64) {
        let phi = self.protocol.j * self.protocol.field(t) * dt / self.protocol.hbar;
        let (c, s) = (phi.cos(), phi.sin());
        let is = Complex64::new(0.0, s);
        for l in 0..self.h.n_sites {
            let bit = 1 << l;
            for lo in 0..psi.len() {
                if lo & bit == 0 {
                    let hi = lo | bit;
                    let (a, b) = (psi[lo], psi[hi]);
                    psi[lo] = a * c + b * is;
                    psi[hi] = b * c + a * is;
                }
            }
        }
    }

    /// Fourth-order triple-jump composition of the symmetric splitting.
    fn step(&self, psi: &mut [Complex64], t: &mut f64, dt: f64) {
        let cbrt2 = 2f64.cbrt();
        let w1 = 1.0 / (2.0 - cbrt2);
        let w0 = -cbrt2 / (2.0 - cbrt2);
        for w in [w1, w0, w1] {
            let h = w * dt;
            self.coupling_flow(psi, t, 0.5 * h);
            self.field_flow(psi, *t, h);
            self.coupling_flow(psi, t, 0.5 * h);
        }
    }
}

/// Evolves the ground state of `H[g(t_start)]` to `t_end` with a fixed step
/// no larger than `dt`.
pub fn evolve_fixed_step(
    protocol: &QuenchProtocol<f64>,
    n_sites: usize,
    dt: f64,
) -> Result<SpinChainState> {
    let protocol = (*protocol).validated()?;
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "time step {dt} must be positive"
        )));
    }
    let h0 = build_hamiltonian(protocol.initial_field(), n_sites, protocol.j)?;
    let (_, mut state) = ground_state(&h0)?;
    let span = protocol.t_end - protocol.t_start;
    let steps = (span / dt).ceil().max(1.0) as usize;
    let h = span / steps as f64;
    let prop = Propagator {
        protocol: &protocol,
        h: h0,
    };
    let mut t = protocol.t_start;
    for _ in 0..steps {
        prop.step(&mut state.amplitudes, &mut t, h);
    }
    Ok(state)
}

/// Result of a self-converged exact evolution.
#[derive(Debug, Clone)]
pub struct ExactEvolution {
    pub state: SpinChainState,
    pub dt: f64,
    pub halvings: usize,
    /// Total-variation change of the kink distribution on the last halving.
    pub change: f64,
}

/// Evolves with step `dt` (default `τ_Q/10⁴`), halving until the kink-pair
/// distribution changes by less than `1e-8` in total variation.
pub fn evolve_exact(
    protocol: &QuenchProtocol<f64>,
    n_sites: usize,
    dt: Option<f64>,
) -> Result<ExactEvolution> {
    check_sites(n_sites)?;
    let mut dt = dt.unwrap_or(protocol.tau_q / DEFAULT_STEPS_PER_TAU);
    let mut coarse = evolve_fixed_step(protocol, n_sites, dt)?;
    let mut change = f64::INFINITY;
    for halvings in 1..=MAX_HALVINGS {
        dt *= 0.5;
        let fine = evolve_fixed_step(protocol, n_sites, dt)?;
        change = kink_pair_distribution_exact(&fine)
            .total_variation(&kink_pair_distribution_exact(&coarse));
        if change < CONVERGENCE_TV {
            return Ok(ExactEvolution {
                state: fine,
                dt,
                halvings,
                change,
            });
        }
        coarse = fine;
    }
    Err(Error::OracleNonConvergence {
        halvings: MAX_HALVINGS,
        change,
    })
}

/// Bins `|amplitude|²` by the kink-pair number of each basis state.
pub fn kink_pair_distribution_exact(state: &SpinChainState) -> KinkPairDistribution<f64> {
    let n = state.n_sites;
    let mut probs = vec![0.0; n / 2 + 1];
    for (s, a) in state.amplitudes.iter().enumerate() {
        probs[kink_pairs(s, n)] += a.norm_sqr();
    }
    KinkPairDistribution::from_parts(probs, n)
}
