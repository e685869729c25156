//! Dense reference implementations built straight from the definitions,
//! against which the FFT-based operators are checked.

#![allow(dead_code)]

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use csradar_core::signal::{SamplingPattern, WaveformFrame};

/// Circulant matrix with unit-norm columns: column `j` holds the body
/// cyclically shifted down by `j`, scaled by `1 / ||body||`.
pub fn dense_circulant(frame: &WaveformFrame) -> DMatrix<Complex64> {
    let body = frame.body();
    let n = body.len();
    let scale = 1.0 / frame.body_norm();
    DMatrix::from_fn(n, n, |k, j| body[(k + n - j) % n] * scale)
}

/// Adjoint of the unitary DFT: entry `(k, f)` is `exp(+2πi k f / n) / sqrt(n)`.
pub fn dense_fourier_adjoint(n: usize) -> DMatrix<Complex64> {
    let scale = 1.0 / (n as f64).sqrt();
    DMatrix::from_fn(n, n, |k, f| {
        Complex64::from_polar(scale, std::f64::consts::TAU * (k * f) as f64 / n as f64)
    })
}

/// Stacks the per-transmitter circulant blocks (and optionally the Fourier
/// block), then keeps only the sampled rows.
pub fn dense_operator(
    frames: &[WaveformFrame],
    include_fourier: bool,
    pattern: &SamplingPattern,
) -> DMatrix<Complex64> {
    let n = frames[0].body().len();
    let mut blocks: Vec<DMatrix<Complex64>> = frames.iter().map(dense_circulant).collect();
    if include_fourier {
        blocks.push(dense_fourier_adjoint(n));
    }
    let stacked = DMatrix::from_fn(n, n * blocks.len(), |k, col| {
        blocks[col / n][(k, col % n)]
    });
    stacked.select_rows(pattern.omega())
}

pub fn apply_dense(mat: &DMatrix<Complex64>, v: &[Complex64]) -> Vec<Complex64> {
    (mat * DVector::from_column_slice(v)).as_slice().to_vec()
}

pub fn apply_dense_adjoint(mat: &DMatrix<Complex64>, v: &[Complex64]) -> Vec<Complex64> {
    (mat.adjoint() * DVector::from_column_slice(v))
        .as_slice()
        .to_vec()
}

/// Standard complex Gaussian vector (unit variance per component pair).
pub fn randn_complex(len: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let normal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).unwrap();
    (0..len)
        .map(|_| Complex64::new(normal.sample(rng), normal.sample(rng)))
        .collect()
}

pub fn unit_vector(mut v: Vec<Complex64>) -> Vec<Complex64> {
    let norm = l2(&v);
    if norm > 0.0 {
        for z in &mut v {
            *z /= norm;
        }
    }
    v
}

pub fn l2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Exhaustive combinatorial least squares: tries every support up to
/// `max_sparsity` columns and returns the best support with its residual.
pub fn best_support_least_squares(
    dense: &DMatrix<Complex64>,
    y: &[Complex64],
    max_sparsity: usize,
) -> (Vec<usize>, f64) {
    let y_vec = DVector::from_column_slice(y);
    let mut best: (Vec<usize>, f64) = (Vec::new(), l2(y));
    for s in 1..=max_sparsity {
        for support in (0..dense.ncols()).combinations(s) {
            let sub = dense.select_columns(&support);
            let svd = sub.svd(true, true);
            let coeffs = svd
                .solve(&y_vec, 1e-12)
                .expect("least-squares solve succeeds");
            let residual = (&y_vec
                - dense.select_columns(&support) * coeffs)
                .norm();
            if residual < best.1 - 1e-12 {
                best = (support, residual);
            }
        }
    }
    best
}

/// Indices whose magnitude stands above a relative floor, sorted ascending.
pub fn significant_support(v: &[Complex64], relative_floor: f64) -> Vec<usize> {
    let peak = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Vec::new();
    }
    v.iter()
        .enumerate()
        .filter(|(_, z)| z.norm() > relative_floor * peak)
        .map(|(i, _)| i)
        .collect()
}
