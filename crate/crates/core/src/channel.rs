//! Sparse multipath scenes and channel-tap synthesis.
//!
//! A scene is a short list of (amplitude, delay) paths. Integer delays place
//! all of a path's energy on a single tap; fractional delays leak energy onto
//! neighboring taps through the periodic-sinc (Dirichlet) interpolation
//! kernel, concentrated around the true delay.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// One propagation path: complex amplitude `alpha`, delay `tau` in samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenePath {
    pub alpha: Complex64,
    pub tau: f64,
}

/// A sparse scene bound to a channel length and cyclic-prefix budget.
///
/// Every delay must fall inside the prefix, otherwise the circulant receive
/// model stops holding.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    paths: Vec<ScenePath>,
    n: usize,
    cp_len: usize,
}

impl Scene {
    pub fn new(paths: Vec<ScenePath>, n: usize, cp_len: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Scene(format!("channel length {n} < 2")));
        }
        if cp_len == 0 || cp_len >= n {
            return Err(Error::InvalidCp { cp_len, n });
        }
        for (i, p) in paths.iter().enumerate() {
            if !p.tau.is_finite() || p.tau < 0.0 || p.tau >= cp_len as f64 {
                return Err(Error::Scene(format!(
                    "path {i}: delay {} outside [0, cp_len={cp_len})",
                    p.tau
                )));
            }
        }
        if paths.len() >= n {
            return Err(Error::Scene(format!(
                "{} paths is not sparse in a length-{n} channel",
                paths.len()
            )));
        }
        Ok(Scene { paths, n, cp_len })
    }

    /// Scene with no paths; samples to the zero channel.
    pub fn empty(n: usize, cp_len: usize) -> Result<Self> {
        Self::new(Vec::new(), n, cp_len)
    }

    pub fn paths(&self) -> &[ScenePath] {
        &self.paths
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cp_len(&self) -> usize {
        self.cp_len
    }

    pub fn targets(&self) -> usize {
        self.paths.len()
    }
}

/// Sampled channel taps plus the nearest-integer support used for scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseChannel {
    pub taps: Vec<Complex64>,
    pub true_support: Vec<usize>,
}

impl SparseChannel {
    pub fn norm(&self) -> f64 {
        self.taps.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Dirichlet interpolation of a unit impulse delayed by `tau`, evaluated at
/// tap `k`: `e^{i pi (n-1) d / n} sin(pi d) / (n sin(pi d / n))` with
/// `d = k - tau`. Integer `d` collapses to exactly 1 (d = 0) or 0.
fn dirichlet_tap(n: usize, tau: f64, k: usize) -> Complex64 {
    let d = k as f64 - tau;
    if d == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    if d.fract() == 0.0 {
        // |d| < n here, so sin(pi d) = 0 while the denominator is nonzero.
        return Complex64::default();
    }
    let nf = n as f64;
    let ratio = (std::f64::consts::PI * d).sin() / (nf * (std::f64::consts::PI * d / nf).sin());
    Complex64::from_polar(1.0, std::f64::consts::PI * (nf - 1.0) * d / nf) * ratio
}

/// Evaluates the scene's tap vector, summing each path's leakage kernel.
pub fn sample_channel(scene: &Scene) -> Result<SparseChannel> {
    let n = scene.n();
    let mut taps = vec![Complex64::default(); n];
    let mut true_support = Vec::with_capacity(scene.targets());
    for p in scene.paths() {
        if p.tau >= scene.cp_len() as f64 {
            return Err(Error::Scene(format!(
                "delay {} exceeds cyclic prefix {}",
                p.tau,
                scene.cp_len()
            )));
        }
        for (k, t) in taps.iter_mut().enumerate() {
            *t += p.alpha * dirichlet_tap(n, p.tau, k);
        }
        true_support.push(p.tau.round() as usize);
    }
    true_support.sort_unstable();
    true_support.dedup();
    Ok(SparseChannel { taps, true_support })
}

/// Noise variance for a target SNR; `+inf` dB means noiseless.
pub fn sigma2_from_snr(signal_power: f64, snr_db: f64) -> f64 {
    if snr_db.is_infinite() && snr_db > 0.0 {
        return 0.0;
    }
    signal_power / 10f64.powf(snr_db / 10.0)
}

/// Adds circularly symmetric complex Gaussian noise at the given SNR.
///
/// Per-sample variance is `signal_power / 10^(snr_db/10)`, split evenly
/// between the real and imaginary parts. `snr_db = +inf` returns the input
/// unchanged.
pub fn add_awgn(
    y: &[Complex64],
    snr_db: f64,
    signal_power: f64,
    seed: u64,
) -> Result<Vec<Complex64>> {
    if snr_db.is_infinite() && snr_db > 0.0 {
        return Ok(y.to_vec());
    }
    if signal_power <= 0.0 || !signal_power.is_finite() {
        return Err(Error::InvalidInput(format!(
            "signal power must be positive and finite, got {signal_power}"
        )));
    }
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let sigma2 = sigma2_from_snr(signal_power, snr_db);
    let noise = gaussian_noise(y.len(), sigma2, &mut rng);
    Ok(y.iter().zip(&noise).map(|(a, b)| a + b).collect())
}

/// Circularly symmetric complex Gaussian samples with per-sample variance
/// `sigma2`, drawn from the caller's stream.
pub fn gaussian_noise<R: Rng>(len: usize, sigma2: f64, rng: &mut R) -> Vec<Complex64> {
    if sigma2 == 0.0 {
        return vec![Complex64::default(); len];
    }
    let normal = Normal::new(0.0, (sigma2 / 2.0).sqrt()).expect("finite std dev");
    (0..len)
        .map(|_| Complex64::new(normal.sample(rng), normal.sample(rng)))
        .collect()
}

/// Converts tap indices to times of arrival in nanoseconds.
pub fn toa_from_support(support: &[usize], sample_period_ns: f64) -> Vec<f64> {
    support
        .iter()
        .map(|&k| k as f64 * sample_period_ns)
        .collect()
}

/// Draws a scene with `targets` distinct integer delays inside the prefix and
/// unit-magnitude amplitudes with uniform random phase.
pub fn random_scene<R: Rng>(
    n: usize,
    cp_len: usize,
    targets: usize,
    rng: &mut R,
) -> Result<Scene> {
    if targets > cp_len {
        return Err(Error::Scene(format!(
            "{targets} targets cannot have distinct delays inside cp_len {cp_len}"
        )));
    }
    let mut delays: Vec<usize> = rand::seq::index::sample(rng, cp_len, targets).into_vec();
    delays.sort_unstable();
    let paths = delays
        .into_iter()
        .map(|d| ScenePath {
            alpha: Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)),
            tau: d as f64,
        })
        .collect();
    Scene::new(paths, n, cp_len)
}
