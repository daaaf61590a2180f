#![allow(dead_code)]

pub mod reference;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ris_anm::{CMatrix, CVector};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, r: usize, cols: usize) -> CMatrix<f64> {
    CMatrix::from_fn(r, cols, |_, _| c(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0))
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> CVector<f64> {
    CVector::from_fn(n, |_, _| c(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0))
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMatrix<f64> {
    let m = random_matrix(rng, n, n);
    (&m + m.adjoint()) * c(0.5, 0.0)
}

/// Haar-ish random unitary from the QR factor of a Gaussian-like matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMatrix<f64> {
    random_matrix(rng, n, n).qr().q()
}

pub fn max_abs_diff(a: &CMatrix<f64>, b: &CMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn column(v: &CVector<f64>) -> CMatrix<f64> {
    CMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}
