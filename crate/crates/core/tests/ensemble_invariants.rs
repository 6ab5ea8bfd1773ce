// SPDX-License-Identifier: Apache-2.0

use rmtchannel::ensembles::{self, CMatrix, HermitianMatrix};
use rmtchannel::stats::ks_two_sample;

const DRAWS: u64 = 1000;

#[test]
fn gue_spacings_are_invariant_under_conjugation() {
    let n = 6;
    let v = ensembles::sample_haar(n, 7).unwrap();
    let mid_spacing = |h: &HermitianMatrix| {
        let (spec, _) = ensembles::eigen_decompose(h).unwrap();
        spec.spacings()[n / 2 - 1]
    };
    let plain: Vec<f64> = (0..DRAWS).map(|s| mid_spacing(&ensembles::sample_gue(n, s).unwrap())).collect();
    let rotated: Vec<f64> = (0..DRAWS)
        .map(|s| {
            let h = ensembles::sample_gue(n, 100_000 + s).unwrap();
            let m: CMatrix = v.matrix() * h.matrix() * v.matrix().adjoint();
            mid_spacing(&HermitianMatrix::new(m).unwrap())
        })
        .collect();
    let (d, p) = ks_two_sample(&plain, &rotated);
    assert!(p > 0.01, "KS D = {d}, p = {p}");
}

#[test]
fn haar_is_left_invariant() {
    let n = 5;
    let v = ensembles::sample_haar(n, 11).unwrap();
    let plain: Vec<f64> = (0..DRAWS).map(|s| ensembles::sample_haar(n, s).unwrap().matrix()[(0, 0)].norm()).collect();
    let shifted: Vec<f64> = (0..DRAWS)
        .map(|s| (v.matrix() * ensembles::sample_haar(n, 50_000 + s).unwrap().matrix())[(0, 0)].norm())
        .collect();
    let (d, p) = ks_two_sample(&plain, &shifted);
    assert!(p > 0.01, "KS D = {d}, p = {p}");
}

#[test]
fn ks_detects_a_non_invariant_transform() {
    // sanity check of the test above: a fixed diagonal reweighting is not unitary
    let n = 5;
    let plain: Vec<f64> = (0..DRAWS).map(|s| ensembles::sample_haar(n, s).unwrap().matrix()[(0, 0)].norm()).collect();
    let skewed: Vec<f64> = (0..DRAWS)
        .map(|s| {
            let u = ensembles::sample_haar(n, 50_000 + s).unwrap();
            (1.5 * u.matrix()[(0, 0)].norm()).min(1.0)
        })
        .collect();
    assert!(ks_two_sample(&plain, &skewed).1 < 1e-6);
}

#[test]
fn f_transform_is_bounded_on_random_spectra() {
    for seed in 0..1000u64 {
        let n = 1 + (seed % 40) as usize;
        let spec = if seed % 2 == 0 {
            ensembles::sample_poisson_spectrum(n, seed).unwrap()
        } else {
            ensembles::eigen_decompose(&ensembles::sample_gue(n, seed).unwrap()).unwrap().0
        };
        assert!((ensembles::f_transform(&spec, 0.0).value - 1.0).norm() < 1e-14);
        for t in [0.3, 1.7, 12.0, 250.0] {
            assert!(ensembles::f_transform(&spec, t).value.norm() <= 1.0 + 1e-12);
        }
    }
}
