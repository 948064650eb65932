mod common;

use common::*;
use gcm::generator::{apply_factor, GenerationMeta};
use gcm::mpole::multipole_from_corr;
use gcm::verify::enumerate_subsets;
use gcm::{
    cholesky, column_stats, correlation_matrix, fit, generate, multipole, pearson, sample_noise,
    whiten, Blueprint, CorrMatrix, GcmConfig, GcmError, JitterPolicy, Matrix, Mode,
};
use statrs::distribution::{ContinuousCDF, Normal};

fn blueprint_rho(rho: f64) -> Blueprint {
    let d = mixed_dataset(50, 2, 0);
    let mut b = fit(&d).unwrap();
    b.corr =
        CorrMatrix::new(Matrix::from_rows(&[vec![1.0, rho], vec![rho, 1.0]]).unwrap()).unwrap();
    b
}

#[test]
fn noise_moments() {
    let z = sample_noise(1000, 1, 2024);
    let s = column_stats(&z).unwrap();
    assert!(s.means[0].abs() < 4.0 / 1000f64.sqrt());
    assert!((s.stds[0] - 1.0).abs() < 0.2);
}

#[test]
fn noise_passes_ks_against_standard_normal() {
    let z = sample_noise(100_000, 1, 31337);
    let mut x = z.column(0).to_vec();
    x.sort_by(f64::total_cmp);
    let phi = Normal::new(0.0, 1.0).unwrap();
    let m = x.len() as f64;
    let ks = x
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let f = phi.cdf(*v);
            (f - i as f64 / m).abs().max(((i + 1) as f64 / m - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.02, "KS statistic {ks}");
}

#[test]
fn whitened_noise_has_identity_correlation() {
    for seed in 0..10 {
        let z = sample_noise(40 + seed as usize, 6, seed);
        let w = whiten(&z).unwrap();
        let c = correlation_matrix(&w).unwrap();
        assert!(c.as_matrix().max_abs_diff(&Matrix::identity(6)) < 1e-12);
        let s = column_stats(&w).unwrap();
        for j in 0..6 {
            assert!(s.means[j].abs() < 1e-12);
            assert!((s.stds[j] - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn fit_shapes_and_invariance() {
    let d = mixed_dataset(80, 3, 1);
    let b = fit(&d).unwrap();
    assert_eq!(b.names.len(), 3);
    assert_eq!(b.stats.means.len(), 3);
    assert_eq!(b.corr.dim(), 3);
    assert_eq!(b.applied_jitter, 0.0);
    let bz = fit(&gcm::znormalize(&d).unwrap()).unwrap();
    assert!(b.corr.as_matrix().max_abs_diff(bz.corr.as_matrix()) < 1e-12);
    assert_ne!(b.stats, bz.stats);
}

#[test]
fn exact_mode_pairwise_and_moments() {
    for seed in 0..10 {
        let d = mixed_dataset(400, 6, seed);
        let b = fit(&d).unwrap();
        let g = generate(&b, &GcmConfig::new(64, seed)).unwrap();
        assert_eq!(g.data.names(), d.names());
        assert_eq!(g.data.n_rows(), 64);
        let c = correlation_matrix(&g.data).unwrap();
        assert!(c.as_matrix().max_abs_diff(b.corr.as_matrix()) <= 1e-8);
        let s = column_stats(&g.data).unwrap();
        assert!(max_abs_diff(&s.means, &b.stats.means) <= 1e-8);
        assert!(max_abs_diff(&s.stds, &b.stats.stds) <= 1e-8);
    }
}

#[test]
fn exact_mode_preserves_every_multipole() {
    let d = mixed_dataset(300, 7, 12);
    let b = fit(&d).unwrap();
    let g = generate(&b, &GcmConfig::new(100, 9)).unwrap();
    for k in 2..=5 {
        let (subsets, _) = enumerate_subsets(7, k, usize::MAX, 0).unwrap();
        for s in subsets {
            let target = multipole_from_corr(&b.corr, &s).unwrap().value;
            let got = multipole(&g.data, &s).unwrap().value;
            assert!((got - target).abs() <= 1e-7, "{s:?}: {got} vs {target}");
        }
    }
}

#[test]
fn expected_mode_converges_in_large_samples() {
    let b = blueprint_rho(0.8);
    let cfg = GcmConfig::new(1_000_000, 5).with_mode(Mode::Expected);
    let g = generate(&b, &cfg).unwrap();
    let r = pearson(g.data.column(0), g.data.column(1)).unwrap();
    assert!((r - 0.8).abs() < 3.0 / 1000.0, "{r}");
}

#[test]
fn exact_mode_two_columns() {
    let b = blueprint_rho(0.8);
    let g = generate(&b, &GcmConfig::new(100, 17)).unwrap();
    let r = pearson(g.data.column(0), g.data.column(1)).unwrap();
    assert!((r - 0.8).abs() < 1e-8);
}

#[test]
fn generation_is_deterministic() {
    let b = fit(&mixed_dataset(100, 4, 3)).unwrap();
    for mode in [Mode::Exact, Mode::Expected] {
        let cfg = GcmConfig::new(500, 42).with_mode(mode);
        let a = generate(&b, &cfg).unwrap();
        let c = generate(&b, &cfg).unwrap();
        assert_eq!(a, c);
    }
}

#[test]
fn affine_transformed_sources_give_same_structure() {
    for seed in 0..5 {
        let d = mixed_dataset(200, 5, seed);
        let t = affine(&d, seed + 1);
        let cfg = GcmConfig::new(300, seed);
        let a = generate(&fit(&d).unwrap(), &cfg).unwrap();
        let b = generate(&fit(&t).unwrap(), &cfg).unwrap();
        let ca = correlation_matrix(&a.data).unwrap();
        let cb = correlation_matrix(&b.data).unwrap();
        assert!(ca.as_matrix().max_abs_diff(cb.as_matrix()) <= 1e-10);
    }
}

#[test]
fn duplicated_column_applies_jitter_at_generation_only() {
    let d = mixed_dataset(100, 2, 8);
    let dup = gcm::Dataset::from_columns(
        vec!["a".into(), "b".into(), "a2".into()],
        vec![d.column(0).to_vec(), d.column(1).to_vec(), d.column(0).to_vec()],
    )
    .unwrap();
    let b = fit(&dup).unwrap();
    assert_eq!(b.applied_jitter, 0.0);
    let cfg = GcmConfig::new(200, 1);
    let g = generate(&b, &cfg).unwrap();
    assert!(g.applied_jitter > 0.0 && g.applied_jitter <= 1e-6);
    let meta = GenerationMeta::new(&cfg, &g);
    assert_eq!(meta.applied_jitter, g.applied_jitter);
    let c = correlation_matrix(&g.data).unwrap();
    assert!(c.as_matrix().max_abs_diff(b.corr.as_matrix()) <= g.applied_jitter * 3.0);
}

#[test]
fn invalid_correlation_fails_whole_ladder() {
    let mut b = blueprint_rho(0.0);
    b.names.push("c".into());
    b.stats.means.push(0.0);
    b.stats.stds.push(1.0);
    b.corr = CorrMatrix::new(
        Matrix::from_rows(&[
            vec![1.0, 0.9, -0.9],
            vec![0.9, 1.0, 0.9],
            vec![-0.9, 0.9, 1.0],
        ])
        .unwrap(),
    )
    .unwrap();
    assert!(matches!(
        generate(&b, &GcmConfig::new(50, 1)),
        Err(GcmError::NotPositiveSemiDefinite { .. })
    ));
}

#[test]
fn transform_uses_l_transpose_orientation() {
    // with whitened noise, cov(Z Lᵀ) = L Lᵀ = C; Z L would give Lᵀ L ≠ C
    let c = random_pd_corr(4, 3);
    let (l, _) = cholesky(&c, &JitterPolicy::default()).unwrap();
    let w = whiten(&sample_noise(500, 4, 2)).unwrap();
    let s = apply_factor(&w, &l);
    let got = correlation_matrix(&s).unwrap();
    assert!(got.as_matrix().max_abs_diff(c.as_matrix()) < 1e-12);
    let ltl = l.lower().transpose().matmul(l.lower());
    assert!(ltl.max_abs_diff(c.as_matrix()) > 1e-3);
}
