// SPDX-License-Identifier: Apache-2.0

//! Seeded ensembles: GUE Hamiltonians, Haar unitaries and flat uncorrelated
//! ("Poisson") spectra, plus the spectral Fourier transform `f(t)`.
//!
//! Energies are dimensionless with the GUE normalization `<|H_ij|²> = 1/N`,
//! which puts the spectrum on `[-2, 2]` for large `N`. The Poisson spectra
//! share that support so both models live on one time axis.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub type CMatrix = DMatrix<Complex64>;

const UNITARITY_TOL: f64 = 1e-10;
const HERMITICITY_TOL: f64 = 1e-12;

/// Sorted eigenenergies of one Hamiltonian (or one synthetic draw).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    energies: Vec<f64>,
}

impl Spectrum {
    /// Sorts the energies ascending; rejects empty or non-finite input.
    pub fn new(mut energies: Vec<f64>) -> Result<Self> {
        if energies.is_empty() {
            return Err(Error::InvalidDimension(0));
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFinite("spectrum energies"));
        }
        energies.sort_by(f64::total_cmp);
        Ok(Spectrum { energies })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Nearest-neighbour level spacings.
    pub fn spacings(&self) -> Vec<f64> {
        self.energies.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Hermitian matrix; the upper and lower triangles are exact conjugates.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Accepts a square matrix that is Hermitian within 1e-12 (max entry)
    /// and stores its exactly Hermitian part.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("hermitian matrix entries"));
        }
        let n = m.nrows();
        let mut h = m.clone();
        for i in 0..n {
            for j in i..n {
                let dev = (m[(i, j)] - m[(j, i)].conj()).norm();
                if dev > HERMITICITY_TOL * (1.0 + m[(i, j)].norm()) {
                    return Err(Error::InvalidArgument(format!(
                        "matrix is not Hermitian at ({i}, {j}): deviation {dev:.3e}"
                    )));
                }
                let z = 0.5 * (m[(i, j)] + m[(j, i)].conj());
                h[(i, j)] = z;
                h[(j, i)] = z.conj();
            }
            h[(i, i)].im = 0.0;
        }
        Ok(HermitianMatrix(h))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&x| Complex64::new(x, 0.0)));
        HermitianMatrix::new(CMatrix::from_diagonal(&d))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }
}

/// Unitary matrix (checked to 1e-10 on construction).
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix(CMatrix);

impl UnitaryMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        let dev = unitarity_deviation(&m);
        if !(dev <= UNITARITY_TOL) {
            return Err(Error::InvalidArgument(format!("matrix is not unitary: deviation {dev:.3e}")));
        }
        Ok(UnitaryMatrix(m))
    }

    pub fn identity(dim: usize) -> Self {
        UnitaryMatrix(CMatrix::identity(dim, dim))
    }

    pub(crate) fn from_trusted(m: CMatrix) -> Self {
        UnitaryMatrix(m)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// Max absolute entry of `U U† - 1`.
    pub fn deviation(&self) -> f64 {
        unitarity_deviation(&self.0)
    }
}

pub fn unitarity_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let p = m * m.adjoint();
    let mut dev = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((p[(i, j)] - Complex64::new(target, 0.0)).norm());
        }
    }
    dev
}

/// Value of `f(t)` at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralTransform {
    pub t: f64,
    pub value: Complex64,
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// GUE matrix with `<H_ii²> = 1/N` and `<|H_ij|²> = 1/N`.
pub fn sample_gue(dim: usize, seed: u64) -> Result<HermitianMatrix> {
    sample_gue_with(dim, &mut rng::stream(seed, 0))
}

pub fn sample_gue_with<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<HermitianMatrix> {
    if dim == 0 {
        return Err(Error::InvalidDimension(dim));
    }
    let var = 1.0 / dim as f64;
    let mut h = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        let d: f64 = rng.sample(StandardNormal);
        h[(i, i)] = Complex64::new(d * var.sqrt(), 0.0);
        for j in (i + 1)..dim {
            let z = complex_gaussian(rng, var);
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
        }
    }
    Ok(HermitianMatrix(h))
}

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the phases
/// of `R`'s diagonal moved into `Q`.
pub fn sample_haar(dim: usize, seed: u64) -> Result<UnitaryMatrix> {
    sample_haar_with(dim, &mut rng::stream(seed, 0))
}

pub fn sample_haar_with<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<UnitaryMatrix> {
    if dim == 0 {
        return Err(Error::InvalidDimension(dim));
    }
    let g = CMatrix::from_fn(dim, dim, |_, _| complex_gaussian(rng, 1.0));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let n = d.norm();
        let phase = if n > 0.0 { d / n } else { Complex64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    Ok(UnitaryMatrix(q))
}

/// `dim` i.i.d. energies uniform on `[-2, 2]`, sorted.
pub fn sample_poisson_spectrum(dim: usize, seed: u64) -> Result<Spectrum> {
    sample_poisson_spectrum_with(dim, &mut rng::stream(seed, 0))
}

pub fn sample_poisson_spectrum_with<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Spectrum> {
    if dim == 0 {
        return Err(Error::InvalidDimension(dim));
    }
    let energies = (0..dim).map(|_| rng.random_range(-2.0..=2.0)).collect();
    Spectrum::new(energies)
}

/// `H = W diag(E) W†` with `E` ascending and the columns of `W` matching.
pub fn eigen_decompose(h: &HermitianMatrix) -> Result<(Spectrum, UnitaryMatrix)> {
    let m = h.matrix();
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("hermitian matrix entries"));
    }
    let n = h.dim();
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let w = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);

    let scaled = CMatrix::from_fn(n, n, |i, j| w[(i, j)] * energies[j]);
    let residual = (scaled * w.adjoint() - m).iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
    let tolerance = 1e-9 * n as f64;
    if !(residual <= tolerance) {
        return Err(Error::Decomposition { residual, tolerance });
    }
    Ok((Spectrum { energies }, UnitaryMatrix(w)))
}

/// `f(t) = (1/N) Σ_j exp(-i E_j t)`.
pub fn f_transform(spec: &Spectrum, t: f64) -> SpectralTransform {
    let sum: Complex64 = spec.energies.iter().map(|&e| Complex64::cis(-e * t)).sum();
    SpectralTransform { t, value: sum / spec.dim() as f64 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_dimension_is_rejected() {
        assert_eq!(sample_gue(0, 1), Err(Error::InvalidDimension(0)));
        assert!(matches!(sample_haar(0, 1), Err(Error::InvalidDimension(0))));
        assert!(matches!(sample_poisson_spectrum(0, 1), Err(Error::InvalidDimension(0))));
    }

    #[test]
    fn gue_is_hermitian_and_reproducible() {
        let a = sample_gue(2, 99).unwrap();
        assert_eq!(a.matrix()[(0, 1)], a.matrix()[(1, 0)].conj());
        assert_eq!(a, sample_gue(2, 99).unwrap());
        assert_ne!(a, sample_gue(2, 100).unwrap());
    }

    #[test]
    fn gue_one_by_one_has_unit_variance() {
        let n = 100_000;
        let s: f64 = (0..n)
            .map(|seed| sample_gue(1, seed).unwrap().matrix()[(0, 0)].re.powi(2))
            .sum();
        let var = s / n as f64;
        assert!((var - 1.0).abs() < 0.02, "var = {var}");
    }

    #[test]
    fn gue_spectrum_fills_semicircle_support() {
        let h = sample_gue(256, 5).unwrap();
        let (spec, _) = eigen_decompose(&h).unwrap();
        let outside = spec.energies().iter().filter(|e| e.abs() > 2.1).count();
        assert!((outside as f64) < 0.01 * 256.0);
        assert!(spec.energies()[0] < -1.8 && spec.energies()[255] > 1.8);
    }

    #[test]
    fn haar_is_unitary() {
        for dim in [1, 2, 3, 8, 33] {
            let u = sample_haar(dim, dim as u64).unwrap();
            assert!(u.deviation() < 1e-10);
        }
        let u = sample_haar(1, 4).unwrap();
        assert!((u.matrix()[(0, 0)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn haar_second_moment() {
        let (n, dim) = (10_000, 8);
        let vals: Vec<f64> = (0..n)
            .map(|i| {
                let u = sample_haar_with(dim, &mut rng::stream(3, i)).unwrap();
                u.matrix()[(2, 5)].norm_sqr()
            })
            .collect();
        let mean = vals.iter().sum::<f64>() / n as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - 0.125).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn poisson_support_and_moments() {
        let s = sample_poisson_spectrum(4, 1).unwrap();
        assert!(s.energies().iter().all(|e| (-2.0..=2.0).contains(e)));
        let s = sample_poisson_spectrum(100_000, 2).unwrap();
        let n = s.dim() as f64;
        let mean = s.energies().iter().sum::<f64>() / n;
        let var = s.energies().iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 0.02);
        assert!((var - 4.0 / 3.0).abs() < 0.02);
    }

    #[test]
    fn poisson_spacings_are_exponential() {
        // no level repulsion: unfolded spacings follow exp(-s), so about
        // 1 - e^{-1/4} ≈ 22% lie below a quarter of the mean spacing
        // (GUE would give roughly 2%)
        let s = sample_poisson_spectrum(10_000, 8).unwrap();
        let sp = s.spacings();
        let mean = sp.iter().sum::<f64>() / sp.len() as f64;
        let small = sp.iter().filter(|&&x| x < 0.25 * mean).count() as f64 / sp.len() as f64;
        assert!((small - (1.0 - (-0.25f64).exp())).abs() < 0.02, "small = {small}");
        let large = sp.iter().filter(|&&x| x > 2.0 * mean).count() as f64 / sp.len() as f64;
        assert!((large - (-2.0f64).exp()).abs() < 0.02, "large = {large}");
    }

    #[test]
    fn eigen_decompose_small_cases() {
        let id = HermitianMatrix::from_real_diagonal(&[1.0, 1.0]).unwrap();
        let (s, w) = eigen_decompose(&id).unwrap();
        assert_eq!(s.energies(), &[1.0, 1.0]);
        assert!(w.deviation() < 1e-12);

        let d = HermitianMatrix::from_real_diagonal(&[1.0, -1.0]).unwrap();
        let (s, w) = eigen_decompose(&d).unwrap();
        assert_eq!(s.energies(), &[-1.0, 1.0]);
        assert!((w.matrix()[(1, 0)].norm() - 1.0).abs() < 1e-12);
        assert!((w.matrix()[(0, 1)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigen_decompose_reconstructs_gue() {
        let h = sample_gue(16, 11).unwrap();
        let (s, w) = eigen_decompose(&h).unwrap();
        let d = CMatrix::from_fn(16, 16, |i, j| if i == j { Complex64::new(s.energies()[i], 0.0) } else { Complex64::new(0.0, 0.0) });
        let r = w.matrix() * d * w.matrix().adjoint() - h.matrix();
        assert!(r.iter().all(|z| z.norm() < 1e-10));
        assert!(s.energies().windows(2).all(|p| p[0] <= p[1]));
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let mut m = CMatrix::identity(2, 2);
        m[(0, 0)] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(HermitianMatrix::new(m), Err(Error::NonFinite(_))));
        assert!(Spectrum::new(vec![0.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn f_transform_examples() {
        let s = Spectrum::new(vec![-1.0, 1.0]).unwrap();
        for t in [0.0, 0.3, 2.0, 17.0] {
            let v = f_transform(&s, t).value;
            assert!((v - Complex64::new(t.cos(), 0.0)).norm() < 1e-15);
        }
        let single = Spectrum::new(vec![0.7]).unwrap();
        let v = f_transform(&single, 3.0).value;
        assert!((v - Complex64::cis(-2.1)).norm() < 1e-15);
        assert!((v.norm() - 1.0).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn f_transform_is_bounded(energies in prop::collection::vec(-3.0f64..3.0, 1..40), t in -50.0f64..50.0) {
            let s = Spectrum::new(energies).unwrap();
            prop_assert!(f_transform(&s, t).value.norm() <= 1.0 + 1e-12);
            prop_assert!((f_transform(&s, 0.0).value - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }
}
