// SPDX-License-Identifier: Apache-2.0

//! The one-qubit channel induced by unitary evolution of qubit ⊗ environment.
//!
//! Tensor order is qubit first: basis index `i = a·M + μ` for qubit state `a`
//! and environment state `μ` with `M` the environment dimension.
//!
//! Pauli transfer matrices use the basis order `(σx, σy, σz, 1)`, so index 3
//! is the identity. This differs from the common convention where index 0 is
//! the identity.

use nalgebra::{DVector, Matrix2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensembles::{self, CMatrix, Spectrum, UnitaryMatrix};
use crate::error::{Error, Result};
use crate::parallel;
use crate::rng;

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);
const I: C = C::new(0.0, 1.0);

/// Pauli matrix `k` in the order `(σx, σy, σz, 1)`.
pub fn pauli(k: usize) -> Matrix2<C> {
    match k {
        0 => Matrix2::new(ZERO, ONE, ONE, ZERO),
        1 => Matrix2::new(ZERO, -I, I, ZERO),
        2 => Matrix2::new(ONE, ZERO, ZERO, -ONE),
        3 => Matrix2::identity(),
        _ => panic!("Pauli index {k} out of range"),
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    /// Validates Hermiticity and trace (1e-12) and eigenvalues (>= -1e-10).
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::InvalidState(format!("density matrix must be square, got {}x{}", m.nrows(), m.ncols())));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("density matrix entries"));
        }
        let herm = (&m - m.adjoint()).iter().fold(0.0_f64, |a, z| a.max(z.norm()));
        if herm > 1e-12 {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:.3e})")));
        }
        let tr = m.trace();
        if (tr - ONE).norm() > 1e-12 {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min = nalgebra::SymmetricEigen::new(m.clone()).eigenvalues.min();
        if min < -1e-10 {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(DensityMatrix(m))
    }

    /// `|ψ><ψ|` for a normalized copy of `psi`.
    pub fn pure(psi: &DVector<C>) -> Result<Self> {
        let n = psi.norm();
        if !(n > 0.0) {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let v = psi / C::new(n, 0.0);
        DensityMatrix::new(&v * v.adjoint())
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        Ok(DensityMatrix(CMatrix::identity(dim, dim) * C::new(1.0 / dim as f64, 0.0)))
    }

    /// Qubit state `(1 + r·σ)/2`.
    pub fn from_bloch(r: [f64; 3]) -> Result<Self> {
        let mut m = pauli(3);
        for (k, &rk) in r.iter().enumerate() {
            m += pauli(k) * C::new(rk, 0.0);
        }
        let m = m * C::new(0.5, 0.0);
        DensityMatrix::new(CMatrix::from_fn(2, 2, |i, j| m[(i, j)]))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix(self.0.kronecker(&other.0))
    }
}

/// Initial state of the environment.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvironmentState {
    /// `|0><0|` on environment basis vector 0.
    Projector,
    /// `1/M`.
    MaximallyMixed,
    /// Equal mixture of the first `r` basis vectors.
    Rank(usize),
    Explicit(DensityMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentSpec {
    dim: usize,
    state: EnvironmentState,
}

impl EnvironmentSpec {
    pub fn new(dim: usize, state: EnvironmentState) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        match &state {
            EnvironmentState::Rank(r) if *r == 0 || *r > dim => {
                return Err(Error::InvalidState(format!("rank {r} outside 1..={dim}")));
            }
            EnvironmentState::Explicit(rho) if rho.dim() != dim => {
                return Err(Error::DimensionMismatch { expected: dim, found: rho.dim() });
            }
            _ => {}
        }
        Ok(EnvironmentSpec { dim, state })
    }

    pub fn projector(dim: usize) -> Result<Self> {
        Self::new(dim, EnvironmentState::Projector)
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        Self::new(dim, EnvironmentState::MaximallyMixed)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn state(&self) -> &EnvironmentState {
        &self.state
    }

    /// Rank of the environment state.
    pub fn rank(&self) -> usize {
        self.components().len()
    }

    /// Spectral decomposition `ρ_E = Σ p_r |e_r><e_r|` with `p_r > 0`.
    pub fn components(&self) -> Vec<(f64, EnvVector)> {
        match &self.state {
            EnvironmentState::Projector => vec![(1.0, EnvVector::Basis(0))],
            EnvironmentState::MaximallyMixed => {
                let p = 1.0 / self.dim as f64;
                (0..self.dim).map(|mu| (p, EnvVector::Basis(mu))).collect()
            }
            EnvironmentState::Rank(r) => {
                let p = 1.0 / *r as f64;
                (0..*r).map(|mu| (p, EnvVector::Basis(mu))).collect()
            }
            EnvironmentState::Explicit(rho) => {
                let eig = nalgebra::SymmetricEigen::new(rho.matrix().clone());
                (0..self.dim)
                    .filter(|&k| eig.eigenvalues[k] > 1e-14)
                    .map(|k| (eig.eigenvalues[k], EnvVector::Dense(eig.eigenvectors.column(k).into_owned())))
                    .collect()
            }
        }
    }

    /// The environment density matrix itself.
    pub fn density(&self) -> DensityMatrix {
        match &self.state {
            EnvironmentState::Explicit(rho) => rho.clone(),
            _ => {
                let mut m = CMatrix::zeros(self.dim, self.dim);
                for (p, v) in self.components() {
                    if let EnvVector::Basis(mu) = v {
                        m[(mu, mu)] = C::new(p, 0.0);
                    }
                }
                DensityMatrix(m)
            }
        }
    }
}

/// One pure component of the environment state.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvVector {
    Basis(usize),
    Dense(DVector<C>),
}

/// 4×4 real channel matrix `Λ_jk = ½ tr[σ^j Λ(σ^k)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliTransferMatrix {
    pub entries: [[f64; 4]; 4],
    pub time: f64,
}

impl PauliTransferMatrix {
    pub fn identity(time: f64) -> Self {
        let mut entries = [[0.0; 4]; 4];
        for (k, row) in entries.iter_mut().enumerate() {
            row[k] = 1.0;
        }
        PauliTransferMatrix { entries, time }
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.entries[j][k]
    }

    /// Max deviation of row 3 from `(0, 0, 0, 1)`.
    pub fn trace_preservation_error(&self) -> f64 {
        let r = &self.entries[3];
        r[0].abs().max(r[1].abs()).max(r[2].abs()).max((r[3] - 1.0).abs())
    }

    /// Applies the channel to a qubit operator through its Pauli coefficients
    /// `c_k = tr(σ^k ρ)`.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let coeff: Vec<C> = (0..4).map(|k| trace_product(&pauli(k), rho)).collect();
        let mut out = CMatrix::zeros(2, 2);
        for j in 0..4 {
            let cj: C = (0..4).map(|k| coeff[k] * self.entries[j][k]).sum();
            let p = pauli(j);
            for a in 0..2 {
                for b in 0..2 {
                    out[(a, b)] += 0.5 * cj * p[(a, b)];
                }
            }
        }
        out
    }

    /// Upper-left 3×3 block (the Bloch-vector action).
    pub fn bloch_block(&self) -> nalgebra::Matrix3<f64> {
        nalgebra::Matrix3::from_fn(|i, j| self.entries[i][j])
    }
}

fn trace_product(a: &Matrix2<C>, b: &CMatrix) -> C {
    let mut s = ZERO;
    for i in 0..2 {
        for j in 0..2 {
            s += a[(i, j)] * b[(j, i)];
        }
    }
    s
}

fn check_dims(w: &UnitaryMatrix, spec: &Spectrum) -> Result<()> {
    if w.dim() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), found: w.dim() });
    }
    Ok(())
}

/// `U^t = W diag(exp(-i E t)) W†`.
pub fn evolution_operator(w: &UnitaryMatrix, spec: &Spectrum, t: f64) -> Result<UnitaryMatrix> {
    check_dims(w, spec)?;
    let wm = w.matrix();
    let n = w.dim();
    let phases: Vec<C> = spec.energies().iter().map(|&e| C::cis(-e * t)).collect();
    let scaled = CMatrix::from_fn(n, n, |i, j| wm[(i, j)] * phases[j]);
    Ok(UnitaryMatrix::from_trusted(scaled * wm.adjoint()))
}

/// Traces out the environment (second tensor factor, dimension `env_dim`) of
/// an operator on qubit ⊗ environment.
pub fn partial_trace_env_operator(op: &CMatrix, env_dim: usize) -> Result<CMatrix> {
    let n = op.nrows();
    if env_dim == 0 || n != 2 * env_dim || !op.is_square() {
        return Err(Error::NotDivisible { dim: n, env: env_dim });
    }
    let mut out = CMatrix::zeros(2, 2);
    for c in 0..2 {
        for d in 0..2 {
            out[(c, d)] = (0..env_dim).map(|mu| op[(c * env_dim + mu, d * env_dim + mu)]).sum();
        }
    }
    Ok(out)
}

/// Reduced qubit state of a qubit ⊗ environment density matrix.
pub fn partial_trace_env(state: &DensityMatrix, env_dim: usize) -> Result<DensityMatrix> {
    let reduced = partial_trace_env_operator(state.matrix(), env_dim)?;
    Ok(DensityMatrix(reduced))
}

/// Precomputed channel for one `(W, spectrum, environment)` triple, evaluated
/// at many times in `O(N² · rank)` per time point.
#[derive(Debug, Clone)]
pub struct ChannelEvolution<'a> {
    w: &'a UnitaryMatrix,
    energies: &'a [f64],
    env_dim: usize,
    /// `(p_r, [W† |0,e_r>, W† |1,e_r>])`
    components: Vec<(f64, [DVector<C>; 2])>,
}

impl<'a> ChannelEvolution<'a> {
    pub fn new(w: &'a UnitaryMatrix, spec: &'a Spectrum, env: &EnvironmentSpec) -> Result<Self> {
        check_dims(w, spec)?;
        let n = w.dim();
        let m = env.dim();
        if n < 2 || n != 2 * m {
            return Err(Error::DimensionMismatch { expected: 2 * m, found: n });
        }
        let rho_e = env.density();
        let tr = rho_e.matrix().trace();
        if (tr - ONE).norm() > 1e-12 {
            return Err(Error::InvalidState(format!("environment state trace {tr} is not 1")));
        }
        let wm = w.matrix();
        let components = env
            .components()
            .into_iter()
            .map(|(p, v)| {
                let coeffs = [0usize, 1].map(|a| match &v {
                    EnvVector::Basis(mu) => wm.row(a * m + mu).adjoint(),
                    EnvVector::Dense(e) => {
                        let mut full = DVector::zeros(n);
                        full.rows_mut(a * m, m).copy_from(e);
                        wm.adjoint() * full
                    }
                });
                (p, coeffs)
            })
            .collect();
        Ok(ChannelEvolution { w, energies: spec.energies(), env_dim: m, components })
    }

    /// Blocks `Λ(|a><b|)` for `a, b ∈ {0, 1}` at time `t`.
    pub fn basis_images(&self, t: f64) -> [[Matrix2<C>; 2]; 2] {
        let m = self.env_dim;
        let phases: DVector<C> = DVector::from_iterator(self.energies.len(), self.energies.iter().map(|&e| C::cis(-e * t)));
        let mut images = [[Matrix2::<C>::zeros(); 2]; 2];
        for (p, coeffs) in &self.components {
            let v: [DVector<C>; 2] = [0, 1].map(|a| self.w.matrix() * coeffs[a].component_mul(&phases));
            for a in 0..2 {
                for b in a..2 {
                    let mut block = Matrix2::<C>::zeros();
                    for c in 0..2 {
                        for d in 0..2 {
                            let va = v[a].rows(c * m, m);
                            let vb = v[b].rows(d * m, m);
                            block[(c, d)] = va.dotc(&vb).conj();
                        }
                    }
                    images[a][b] += block * C::new(*p, 0.0);
                }
            }
        }
        images[1][0] = images[0][1].adjoint();
        images
    }

    /// Pauli transfer matrix at time `t`.
    pub fn ptm(&self, t: f64) -> PauliTransferMatrix {
        let images = self.basis_images(t);
        let mut entries = [[0.0; 4]; 4];
        for k in 0..4 {
            let sk = pauli(k);
            let mut out = Matrix2::<C>::zeros();
            for a in 0..2 {
                for b in 0..2 {
                    if sk[(a, b)] != ZERO {
                        out += images[a][b] * sk[(a, b)];
                    }
                }
            }
            for (j, row) in entries.iter_mut().enumerate() {
                row[k] = 0.5 * (pauli(j) * out).trace().re;
            }
        }
        PauliTransferMatrix { entries, time: t }
    }
}

/// Pauli transfer matrix of the induced channel at time `t`.
pub fn extract_ptm(w: &UnitaryMatrix, spec: &Spectrum, env: &EnvironmentSpec, t: f64) -> Result<PauliTransferMatrix> {
    Ok(ChannelEvolution::new(w, spec, env)?.ptm(t))
}

/// Exact Haar-averaged radius `α(t) = (N²|f(t)|² - 1)/(N² - 1)`.
pub fn alpha_from_spectrum(spec: &Spectrum, t: f64) -> Result<f64> {
    let n = spec.dim();
    if n < 2 {
        return Err(Error::UnsupportedDimension(n));
    }
    let f2 = ensembles::f_transform(spec, t).value.norm_sqr();
    Ok(alpha_from_f2(f2, n))
}

pub(crate) fn alpha_from_f2(f2: f64, n: usize) -> f64 {
    let n2 = (n * n) as f64;
    (n2 * f2 - 1.0) / (n2 - 1.0)
}

/// Channel matrices for `n_samples` Haar eigenvector draws at every time in
/// `times`. Draw `i` uses random stream `(seed, i)`; the outer vector is
/// indexed by draw, the inner by time.
pub fn sample_ptms(
    spec: &Spectrum,
    env: &EnvironmentSpec,
    times: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<Vec<PauliTransferMatrix>>> {
    let n = spec.dim();
    if n != 2 * env.dim() {
        return Err(Error::DimensionMismatch { expected: 2 * env.dim(), found: n });
    }
    parallel::map_indexed(n_samples, |i| {
        let w = ensembles::sample_haar_with(n, &mut rng::stream(seed, i as u64))?;
        let evo = ChannelEvolution::new(&w, spec, env)?;
        Ok(times.iter().map(|&t| evo.ptm(t)).collect())
    })
    .into_iter()
    .collect()
}

/// Mean and elementwise standard error of the channel matrix over Haar draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HaarAverage {
    pub mean: PauliTransferMatrix,
    pub stderr: [[f64; 4]; 4],
}

/// Haar average of the channel at time `t` for a fixed spectrum.
pub fn haar_average_ptm(spec: &Spectrum, env: &EnvironmentSpec, t: f64, n_samples: usize, seed: u64) -> Result<HaarAverage> {
    Ok(haar_average_ptm_grid(spec, env, &[t], n_samples, seed)?[0])
}

/// [`haar_average_ptm`] on a grid of times, sharing the Haar draws.
pub fn haar_average_ptm_grid(
    spec: &Spectrum,
    env: &EnvironmentSpec,
    times: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<HaarAverage>> {
    if n_samples < 2 {
        return Err(Error::TooFewSamples { required: 2, got: n_samples });
    }
    let draws = sample_ptms(spec, env, times, n_samples, seed)?;
    Ok(reduce_draws(&draws, times))
}

/// Ordered (draw-by-draw) reduction to mean and standard error.
pub fn reduce_draws(draws: &[Vec<PauliTransferMatrix>], times: &[f64]) -> Vec<HaarAverage> {
    let n = draws.len() as f64;
    times
        .iter()
        .enumerate()
        .map(|(ti, &t)| {
            let mut mean = [[0.0; 4]; 4];
            for d in draws {
                for j in 0..4 {
                    for k in 0..4 {
                        mean[j][k] += d[ti].entries[j][k];
                    }
                }
            }
            mean.iter_mut().flatten().for_each(|x| *x /= n);
            let mut var = [[0.0; 4]; 4];
            for d in draws {
                for j in 0..4 {
                    for k in 0..4 {
                        var[j][k] += (d[ti].entries[j][k] - mean[j][k]).powi(2);
                    }
                }
            }
            let stderr = var.map(|row| row.map(|v| (v / (n - 1.0) / n).sqrt()));
            HaarAverage { mean: PauliTransferMatrix { entries: mean, time: t }, stderr }
        })
        .collect()
}
