//! Waveform framing, sub-sampling patterns, and the implicit measurement operator.
//!
//! The receive model is a circulant convolution of the probe waveform with a
//! sparse channel, restricted to a sub-Nyquist index set. The operator here
//! composes one circulant block per transmit waveform plus an optional
//! conjugate partial Fourier block for narrowband interference, and applies
//! forward and adjoint maps through length-`n` FFTs without ever materializing
//! a matrix.

use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fft::{unitary_idft, with_plans};

/// One periodic probe block plus its cyclic-prefix length.
///
/// The emitted frame is `[body[n-cp_len..] || body]`: the prefix is a verbatim
/// copy of the tail, which turns the channel's linear convolution into a
/// circulant one for delays shorter than the prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformFrame {
    body: Vec<Complex64>,
    cp_len: usize,
    seed: u64,
}

impl WaveformFrame {
    /// Builds a frame with a Rademacher (i.i.d. +-1) body.
    pub fn rademacher(n: usize, cp_len: usize, seed: u64) -> Result<Self> {
        let body = generate_rademacher(n, seed)?;
        Self::from_body(body, cp_len, seed)
    }

    /// Wraps an arbitrary body, validating the prefix bound.
    pub fn from_body(body: Vec<Complex64>, cp_len: usize, seed: u64) -> Result<Self> {
        let n = body.len();
        if n < 2 {
            return Err(Error::Dimension(format!("body length {n} < 2")));
        }
        if cp_len == 0 || cp_len >= n {
            return Err(Error::InvalidCp { cp_len, n });
        }
        Ok(WaveformFrame { body, cp_len, seed })
    }

    pub fn body(&self) -> &[Complex64] {
        &self.body
    }

    pub fn n(&self) -> usize {
        self.body.len()
    }

    pub fn cp_len(&self) -> usize {
        self.cp_len
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// l2 norm of the body; `sqrt(n)` for a Rademacher body.
    pub fn body_norm(&self) -> f64 {
        self.body.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// The transmitted frame `[tail || body]`, length `n + cp_len`.
    pub fn framed(&self) -> Vec<Complex64> {
        add_cyclic_prefix(&self.body, self.cp_len).expect("validated at construction")
    }
}

/// Generates an i.i.d. +-1 (real) sequence, deterministic in `seed`.
pub fn generate_rademacher(n: usize, seed: u64) -> Result<Vec<Complex64>> {
    if n < 2 {
        return Err(Error::Dimension(format!(
            "Rademacher length {n} < 2 is not a usable probe"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            Complex64::new(sign, 0.0)
        })
        .collect())
}

/// Prepends the tail copy: output is `[body[n-cp_len..] || body]`.
pub fn add_cyclic_prefix(body: &[Complex64], cp_len: usize) -> Result<Vec<Complex64>> {
    let n = body.len();
    if cp_len == 0 || cp_len >= n {
        return Err(Error::InvalidCp { cp_len, n });
    }
    let mut framed = Vec::with_capacity(n + cp_len);
    framed.extend_from_slice(&body[n - cp_len..]);
    framed.extend_from_slice(body);
    Ok(framed)
}

/// Circular convolution `y[k] = sum_j h[j] body[(k - j) mod n]` via length-`n` FFTs.
pub fn circulant_convolve(body: &[Complex64], h: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = body.len();
    if h.len() != n {
        return Err(Error::Dimension(format!(
            "channel length {} != waveform length {n}",
            h.len()
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut xs = body.to_vec();
    let mut hs = h.to_vec();
    with_plans(n, |p| {
        p.forward_unnorm(&mut xs);
        p.forward_unnorm(&mut hs);
        for (a, b) in xs.iter_mut().zip(&hs) {
            *a *= b;
        }
        p.inverse_unnorm(&mut xs);
    });
    let inv_n = 1.0 / n as f64;
    for v in &mut xs {
        *v *= inv_n;
    }
    Ok(xs)
}

/// Cyclic delay: `output[k] = y[(k - n_d) mod n]`.
pub fn cyclic_shift(y: &[Complex64], n_d: usize) -> Result<Vec<Complex64>> {
    let n = y.len();
    if n_d >= n {
        return Err(Error::Range(format!("shift {n_d} >= length {n}")));
    }
    let mut out = Vec::with_capacity(n);
    out.extend_from_slice(&y[n - n_d..]);
    out.extend_from_slice(&y[..n - n_d]);
    Ok(out)
}

/// How the sub-Nyquist index set was generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmegaMode {
    /// Uniformly random rows without replacement (the RIP-friendly choice).
    UniformRandom,
    /// Every `floor(n/m)`-th sample, matching a fixed-rate hardware ADC.
    RegularDecimation,
}

impl OmegaMode {
    pub fn label(&self) -> &'static str {
        match self {
            OmegaMode::UniformRandom => "uniform-random",
            OmegaMode::RegularDecimation => "regular-decimation",
        }
    }
}

impl std::str::FromStr for OmegaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "uniform_random" => Ok(OmegaMode::UniformRandom),
            "regular_decimation" => Ok(OmegaMode::RegularDecimation),
            other => Err(Error::Config(format!("unknown omega_mode '{other}'"))),
        }
    }
}

/// Index set Omega defining the row-restriction operator.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPattern {
    omega: Vec<usize>,
    n: usize,
    mode: OmegaMode,
}

impl SamplingPattern {
    /// `m` distinct indices drawn uniformly from `{0..n}`, sorted ascending.
    pub fn uniform_random(n: usize, m: usize, seed: u64) -> Result<Self> {
        if m > n {
            return Err(Error::Dimension(format!("m {m} > n {n}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut omega: Vec<usize> = rand::seq::index::sample(&mut rng, n, m).into_vec();
        omega.sort_unstable();
        Ok(SamplingPattern {
            omega,
            n,
            mode: OmegaMode::UniformRandom,
        })
    }

    /// `{0, k, 2k, ...}` with `k = floor(n/m)`.
    pub fn regular_decimation(n: usize, m: usize) -> Result<Self> {
        if m == 0 || m > n {
            return Err(Error::Dimension(format!(
                "decimation needs 1 <= m <= n, got m={m}, n={n}"
            )));
        }
        let k = n / m;
        Ok(SamplingPattern {
            omega: (0..m).map(|i| i * k).collect(),
            n,
            mode: OmegaMode::RegularDecimation,
        })
    }

    /// All `n` indices (full-rate sampling).
    pub fn full(n: usize) -> Self {
        SamplingPattern {
            omega: (0..n).collect(),
            n,
            mode: OmegaMode::RegularDecimation,
        }
    }

    /// Explicit index list; must be strictly increasing and within `[0, n)`.
    pub fn from_indices(omega: Vec<usize>, n: usize, mode: OmegaMode) -> Result<Self> {
        for w in omega.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Range(format!(
                    "indices not strictly increasing at {}..{}",
                    w[0], w[1]
                )));
            }
        }
        if let Some(&last) = omega.last() {
            if last >= n {
                return Err(Error::Range(format!("index {last} >= n {n}")));
            }
        }
        Ok(SamplingPattern { omega, n, mode })
    }

    pub fn generate(n: usize, m: usize, mode: OmegaMode, seed: u64) -> Result<Self> {
        match mode {
            OmegaMode::UniformRandom => Self::uniform_random(n, m, seed),
            OmegaMode::RegularDecimation => Self::regular_decimation(n, m),
        }
    }

    pub fn omega(&self) -> &[usize] {
        &self.omega
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.omega.len()
    }

    pub fn mode(&self) -> OmegaMode {
        self.mode
    }
}

/// Restriction `ybar[i] = y[omega[i]]`.
pub fn subsample(y: &[Complex64], pattern: &SamplingPattern) -> Result<Vec<Complex64>> {
    if y.len() != pattern.n {
        return Err(Error::Dimension(format!(
            "vector length {} != pattern ambient dimension {}",
            y.len(),
            pattern.n
        )));
    }
    Ok(pattern.omega.iter().map(|&i| y[i]).collect())
}

/// Applies the conjugate partial Fourier block: `R_Omega F^H j_f` with unitary `F`.
pub fn partial_fourier_adjoint(j_f: &[Complex64], pattern: &SamplingPattern) -> Result<Vec<Complex64>> {
    if j_f.len() != pattern.n {
        return Err(Error::Dimension(format!(
            "frequency vector length {} != pattern ambient dimension {}",
            j_f.len(),
            pattern.n
        )));
    }
    let full = unitary_idft(j_f);
    subsample(&full, pattern)
}

#[derive(Debug, Clone)]
enum Block {
    /// Row-restricted circulant of one waveform body, columns scaled to unit norm.
    /// `spectrum` is the unnormalized DFT of the scaled body.
    Circulant { spectrum: Vec<Complex64> },
    /// Row-restricted conjugate DFT matrix (unitary convention).
    PartialFourier,
}

/// Eigendecomposition of the operator Gram matrix `A A^H` (size `m x m`).
///
/// Computed once per operator and reused by every solve against it; this is
/// what makes the exact residual-ball projection in the solver cheap.
#[derive(Debug, Clone)]
pub struct GramSpectrum {
    eigenvalues: Vec<f64>,
    u: DMatrix<Complex64>,
    u_adjoint: DMatrix<Complex64>,
}

impl GramSpectrum {
    /// Eigenvalues of `A A^H`, ascending, clamped at zero.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Coordinates of `r` in the eigenbasis: `U^H r`.
    pub fn to_eigenbasis(&self, r: &[Complex64]) -> Vec<Complex64> {
        let v = DVector::from_column_slice(r);
        (&self.u_adjoint * v).as_slice().to_vec()
    }

    /// Back from eigenbasis coordinates: `U q`.
    pub fn from_eigenbasis(&self, q: &[Complex64]) -> Vec<Complex64> {
        let v = DVector::from_column_slice(q);
        (&self.u * v).as_slice().to_vec()
    }
}

/// Implicit measurement map `[X1bar X2bar ... | Fbar^H]` with forward and
/// adjoint application.
///
/// Immutable after construction; safe to share across threads. The Gram
/// spectrum is a write-once cache.
#[derive(Debug)]
pub struct MeasurementOperator {
    blocks: Vec<Block>,
    pattern: SamplingPattern,
    n: usize,
    in_dim: usize,
    out_dim: usize,
    gram: OnceLock<Arc<GramSpectrum>>,
}

/// Stacks the circulant blocks of `frames` (and optionally a partial Fourier
/// block) over a shared sampling pattern.
pub fn compose_operator(
    frames: &[WaveformFrame],
    include_nbi_block: bool,
    pattern: &SamplingPattern,
) -> Result<MeasurementOperator> {
    if frames.is_empty() {
        return Err(Error::Composition("no waveform frames given".into()));
    }
    let n = frames[0].n();
    for f in frames {
        if f.n() != n {
            return Err(Error::Composition(format!(
                "frame lengths differ: {} vs {n}",
                f.n()
            )));
        }
    }
    if pattern.n() != n {
        return Err(Error::Composition(format!(
            "pattern ambient dimension {} != frame length {n}",
            pattern.n()
        )));
    }

    let mut blocks = Vec::with_capacity(frames.len() + 1);
    for f in frames {
        let scale = 1.0 / f.body_norm();
        let mut spectrum: Vec<Complex64> = f.body().iter().map(|v| v * scale).collect();
        with_plans(n, |p| p.forward_unnorm(&mut spectrum));
        blocks.push(Block::Circulant { spectrum });
    }
    if include_nbi_block {
        blocks.push(Block::PartialFourier);
    }

    let in_dim = blocks.len() * n;
    Ok(MeasurementOperator {
        blocks,
        pattern: pattern.clone(),
        n,
        in_dim,
        out_dim: pattern.m(),
        gram: OnceLock::new(),
    })
}

impl MeasurementOperator {
    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    /// Ambient (full-rate) dimension shared by all blocks.
    pub fn block_len(&self) -> usize {
        self.n
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// True if the last block is the partial Fourier (NBI) block.
    pub fn has_fourier_block(&self) -> bool {
        matches!(self.blocks.last(), Some(Block::PartialFourier))
    }

    pub fn pattern(&self) -> &SamplingPattern {
        &self.pattern
    }

    /// Forward map `u -> A u`, length `in_dim` to `out_dim`.
    pub fn forward(&self, u: &[Complex64]) -> Result<Vec<Complex64>> {
        if u.len() != self.in_dim {
            return Err(Error::Dimension(format!(
                "forward input length {} != in_dim {}",
                u.len(),
                self.in_dim
            )));
        }
        let n = self.n;
        let sqrt_n = (n as f64).sqrt();
        // Accumulate all block contributions in the frequency domain, then run
        // a single inverse transform.
        let mut acc = vec![Complex64::default(); n];
        with_plans(n, |p| {
            let mut buf = vec![Complex64::default(); n];
            for (b, block) in self.blocks.iter().enumerate() {
                let sub = &u[b * n..(b + 1) * n];
                match block {
                    Block::Circulant { spectrum } => {
                        buf.copy_from_slice(sub);
                        p.forward_unnorm(&mut buf);
                        for k in 0..n {
                            acc[k] += spectrum[k] * buf[k];
                        }
                    }
                    Block::PartialFourier => {
                        // F^H j / sqrt(n) = ifft(j * sqrt(n)) / n
                        for k in 0..n {
                            acc[k] += sub[k] * sqrt_n;
                        }
                    }
                }
            }
            p.inverse_unnorm(&mut acc);
        });
        let inv_n = 1.0 / n as f64;
        Ok(self.pattern.omega.iter().map(|&i| acc[i] * inv_n).collect())
    }

    /// Adjoint map `v -> A^H v`, length `out_dim` to `in_dim`.
    pub fn adjoint(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.out_dim {
            return Err(Error::Dimension(format!(
                "adjoint input length {} != out_dim {}",
                v.len(),
                self.out_dim
            )));
        }
        let n = self.n;
        let inv_sqrt_n = 1.0 / (n as f64).sqrt();
        let inv_n = 1.0 / n as f64;
        // Scatter into the ambient grid, transform once, then apply each
        // block's conjugate spectrum.
        let mut up = vec![Complex64::default(); n];
        for (i, &w) in self.pattern.omega.iter().enumerate() {
            up[w] = v[i];
        }
        let mut out = vec![Complex64::default(); self.in_dim];
        with_plans(n, |p| {
            p.forward_unnorm(&mut up);
            let mut buf = vec![Complex64::default(); n];
            for (b, block) in self.blocks.iter().enumerate() {
                let dst = &mut out[b * n..(b + 1) * n];
                match block {
                    Block::Circulant { spectrum } => {
                        for k in 0..n {
                            buf[k] = spectrum[k].conj() * up[k];
                        }
                        p.inverse_unnorm(&mut buf);
                        for k in 0..n {
                            dst[k] = buf[k] * inv_n;
                        }
                    }
                    Block::PartialFourier => {
                        for k in 0..n {
                            dst[k] = up[k] * inv_sqrt_n;
                        }
                    }
                }
            }
        });
        Ok(out)
    }

    /// Eigendecomposition of `A A^H`, computed on first use.
    pub fn gram_spectrum(&self) -> Arc<GramSpectrum> {
        self.gram
            .get_or_init(|| {
                let m = self.out_dim;
                let mut g = DMatrix::<Complex64>::zeros(m, m);
                let mut e = vec![Complex64::default(); m];
                for i in 0..m {
                    e[i] = Complex64::new(1.0, 0.0);
                    let col = self
                        .forward(&self.adjoint(&e).expect("dims fixed"))
                        .expect("dims fixed");
                    for j in 0..m {
                        g[(j, i)] = col[j];
                    }
                    e[i] = Complex64::default();
                }
                // Hermitize against FFT roundoff before the eigensolve.
                let gh = g.adjoint();
                let g = (g + gh).scale(0.5);
                let eig = SymmetricEigen::new(g);
                let eigenvalues: Vec<f64> =
                    eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
                let u = eig.eigenvectors;
                let u_adjoint = u.adjoint();
                Arc::new(GramSpectrum {
                    eigenvalues,
                    u,
                    u_adjoint,
                })
            })
            .clone()
    }
}
