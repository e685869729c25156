//! Narrowband interference: synthesis, joint recovery, and two-stage
//! cancellation.
//!
//! An NBI source occupies a handful of DFT bins, so it is sparse in the
//! Fourier dictionary while the channel is sparse in the delay dictionary.
//! Joint recovery solves one BPDN program over the stacked dictionary
//! `[X1bar X2bar Fbar^H]`; two-stage recovery re-estimates the amplitudes of
//! the detected tone bins by least squares (the l1 stage shrinks them),
//! subtracts the refit interference, and re-solves a channel-only program on
//! the cleaned samples.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::fft::unitary_idft;
use crate::signal::{
    compose_operator, partial_fourier_adjoint, MeasurementOperator, SamplingPattern, WaveformFrame,
};
use crate::solver::{solve_bpdn_with, BpdnProblem, BpdnSolution, SolverOptions};

/// Stage-2 noise bound as a multiple of the stage-1 bound. The stage-1
/// solution is feasible, so on the cancelled observation the channel blocks
/// already fit within the stage-1 bound; that bound therefore covers noise
/// plus residual interference, and inflating it only costs weak targets.
pub const STAGE2_EPSILON_FACTOR: f64 = 1.0;

/// Cap on how many bins the cancellation stage will refit.
const MAX_REFIT_BINS: usize = 8;

/// One interference tone: DFT bin, relative magnitude, phase in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToneSpec {
    pub bin: usize,
    pub weight: f64,
    pub phase: f64,
}

/// Frequency-sparse interference, stored in the frequency domain.
#[derive(Debug, Clone, PartialEq)]
pub struct NbiSignal {
    pub freq_coeffs: Vec<Complex64>,
    pub tone_bins: Vec<usize>,
    pub sir_db: f64,
}

impl NbiSignal {
    /// Interference with no tones (zero everywhere).
    pub fn silent(n: usize) -> Self {
        NbiSignal {
            freq_coeffs: vec![Complex64::default(); n],
            tone_bins: Vec::new(),
            sir_db: f64::INFINITY,
        }
    }

    /// Mean per-sample power of the time-domain interference.
    pub fn mean_power(&self) -> f64 {
        if self.freq_coeffs.is_empty() {
            return 0.0;
        }
        self.freq_coeffs.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.freq_coeffs.len() as f64
    }
}

/// Builds the interference for a target SIR relative to `signal_power` (mean
/// per-sample powers on both sides). Returns the frequency-domain signal and
/// its time-domain samples (unitary inverse DFT).
///
/// Tone weights are relative; the total is rescaled so the interference power
/// is `signal_power / 10^(sir_db/10)`. Equal weights split power equally.
pub fn synthesize_nbi(
    tones: &[ToneSpec],
    n: usize,
    signal_power: f64,
    sir_db: f64,
) -> Result<(NbiSignal, Vec<Complex64>)> {
    if n < 2 {
        return Err(Error::Dimension(format!("block length {n} < 2")));
    }
    if tones.is_empty() || (sir_db.is_infinite() && sir_db > 0.0) {
        let silent = NbiSignal::silent(n);
        let time = vec![Complex64::default(); n];
        return Ok((silent, time));
    }
    if signal_power <= 0.0 || !signal_power.is_finite() {
        return Err(Error::InvalidInput(format!(
            "signal power must be positive and finite, got {signal_power}"
        )));
    }
    let mut bins: Vec<usize> = tones.iter().map(|t| t.bin).collect();
    bins.sort_unstable();
    if bins.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Tones("duplicate tone bins".into()));
    }
    if let Some(&worst) = bins.last() {
        if worst >= n {
            return Err(Error::Tones(format!("tone bin {worst} >= n {n}")));
        }
    }
    if tones.iter().any(|t| t.weight <= 0.0 || !t.weight.is_finite()) {
        return Err(Error::Tones("tone weights must be positive".into()));
    }

    let nbi_power = signal_power / 10f64.powf(sir_db / 10.0);
    // Unitary transforms preserve energy, so a mean time-domain power of
    // nbi_power needs total frequency-domain energy n * nbi_power.
    let weight_energy: f64 = tones.iter().map(|t| t.weight * t.weight).sum();
    let scale = (n as f64 * nbi_power / weight_energy).sqrt();

    let mut freq_coeffs = vec![Complex64::default(); n];
    for t in tones {
        freq_coeffs[t.bin] = Complex64::from_polar(t.weight * scale, t.phase);
    }
    let time = unitary_idft(&freq_coeffs);
    Ok((
        NbiSignal {
            freq_coeffs,
            tone_bins: bins,
            sir_db,
        },
        time,
    ))
}

/// Draws `count` distinct tone bins with unit weights and random phases.
pub fn random_tones<R: Rng>(count: usize, n: usize, rng: &mut R) -> Result<Vec<ToneSpec>> {
    if count > n {
        return Err(Error::Tones(format!("{count} tones > {n} bins")));
    }
    let mut bins: Vec<usize> = rand::seq::index::sample(rng, n, count).into_vec();
    bins.sort_unstable();
    Ok(bins
        .into_iter()
        .map(|bin| ToneSpec {
            bin,
            weight: 1.0,
            phase: rng.random_range(0.0..std::f64::consts::TAU),
        })
        .collect())
}

/// Views `coefficients` as consecutive length-`n` dictionary blocks.
pub fn solution_blocks(coefficients: &[Complex64], n: usize) -> Result<Vec<&[Complex64]>> {
    if n == 0 || coefficients.len() % n != 0 {
        return Err(Error::Dimension(format!(
            "coefficient length {} is not a multiple of block length {n}",
            coefficients.len()
        )));
    }
    Ok(coefficients.chunks_exact(n).collect())
}

/// Joint channel + NBI recovery on a prebuilt stacked operator.
pub fn joint_recover_on(
    op: &MeasurementOperator,
    observation: &[Complex64],
    epsilon_prime: f64,
    options: &SolverOptions,
) -> Result<BpdnSolution> {
    if !op.has_fourier_block() {
        return Err(Error::Composition(
            "joint recovery needs an operator with the Fourier block".into(),
        ));
    }
    let problem = BpdnProblem::new(op, observation.to_vec(), epsilon_prime)?;
    solve_bpdn_with(&problem, options)
}

/// Joint channel + NBI recovery; composes the stacked operator from scratch.
pub fn joint_recover(
    observation: &[Complex64],
    frames: &[WaveformFrame],
    pattern: &SamplingPattern,
    epsilon_prime: f64,
) -> Result<BpdnSolution> {
    let op = compose_operator(frames, true, pattern)?;
    joint_recover_on(&op, observation, epsilon_prime, &SolverOptions::default())
}

/// Subtracts an interference estimate: `ybar - R_Omega F^H jf_estimate`.
pub fn cancel_nbi(
    observation: &[Complex64],
    nbi_estimate: &[Complex64],
    pattern: &SamplingPattern,
) -> Result<Vec<Complex64>> {
    if observation.len() != pattern.m() {
        return Err(Error::Dimension(format!(
            "observation length {} != pattern size {}",
            observation.len(),
            pattern.m()
        )));
    }
    let projected = partial_fourier_adjoint(nbi_estimate, pattern)?;
    Ok(observation
        .iter()
        .zip(&projected)
        .map(|(a, b)| a - b)
        .collect())
}

/// Bins standing above a fifth of the strongest bin, strongest kept first
/// when truncating to `cap`, returned in ascending order.
fn detected_bins(spectrum: &[Complex64], cap: usize) -> Vec<usize> {
    let peak = spectrum.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if peak <= 0.0 {
        return Vec::new();
    }
    let mut bins: Vec<usize> = (0..spectrum.len())
        .filter(|&b| spectrum[b].norm() >= 0.2 * peak)
        .collect();
    bins.sort_by(|&a, &b| {
        spectrum[b]
            .norm()
            .partial_cmp(&spectrum[a].norm())
            .expect("tone magnitudes are finite")
    });
    bins.truncate(cap);
    bins.sort_unstable();
    bins
}

/// Least-squares amplitudes of the given bins against `target`, returned as a
/// full-length spectrum that is zero off the support.
fn refit_bins(
    target: &[Complex64],
    bins: &[usize],
    pattern: &SamplingPattern,
) -> Result<Vec<Complex64>> {
    let n = pattern.n();
    let omega = pattern.omega();
    let scale = 1.0 / (n as f64).sqrt();
    let basis = DMatrix::from_fn(omega.len(), bins.len(), |r, c| {
        Complex64::from_polar(
            scale,
            std::f64::consts::TAU * (omega[r] * bins[c]) as f64 / n as f64,
        )
    });
    let rhs = DVector::from_column_slice(target);
    let coeffs = basis
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::InvalidInput(format!("tone refit failed: {e}")))?;
    let mut spectrum = vec![Complex64::default(); n];
    for (i, &b) in bins.iter().enumerate() {
        spectrum[b] = coeffs[i];
    }
    Ok(spectrum)
}

/// Output of the two-stage pipeline; `stage2` holds the channel estimate that
/// reports should use.
#[derive(Debug, Clone)]
pub struct TwoStageResult {
    pub stage1: BpdnSolution,
    /// Interference spectrum actually subtracted: stage-1 support with
    /// least-squares amplitudes.
    pub nbi_estimate: Vec<Complex64>,
    pub cleaned: Vec<Complex64>,
    pub stage2: BpdnSolution,
    /// Energy of the stage-2 fit residual: leftover interference plus noise.
    pub residual_nbi_energy: f64,
}

/// Two-stage recovery on prebuilt operators sharing frames and pattern:
/// joint solve, interference subtraction, channel-only re-solve.
pub fn two_stage_recover_on(
    joint_op: &MeasurementOperator,
    channel_op: &MeasurementOperator,
    observation: &[Complex64],
    epsilon_prime: f64,
    epsilon_double_prime: f64,
    options: &SolverOptions,
) -> Result<TwoStageResult> {
    let n = joint_op.block_len();
    if !joint_op.has_fourier_block() || channel_op.has_fourier_block() {
        return Err(Error::Composition(
            "two-stage recovery needs a joint operator and a channel-only operator".into(),
        ));
    }
    if joint_op.in_dim() != channel_op.in_dim() + n
        || joint_op.out_dim() != channel_op.out_dim()
        || joint_op.pattern() != channel_op.pattern()
    {
        return Err(Error::Composition(
            "joint and channel-only operators disagree on shape".into(),
        ));
    }

    let stage1 = joint_recover_on(joint_op, observation, epsilon_prime, options)?;
    let chan_len = channel_op.in_dim();
    let nbi_block = &stage1.coefficients[chan_len..];
    let bins = detected_bins(nbi_block, MAX_REFIT_BINS);
    let nbi_estimate = if bins.is_empty() {
        nbi_block.to_vec()
    } else {
        let chan_fit = channel_op.forward(&stage1.coefficients[..chan_len])?;
        let residual: Vec<Complex64> = observation
            .iter()
            .zip(&chan_fit)
            .map(|(y, f)| y - f)
            .collect();
        refit_bins(&residual, &bins, joint_op.pattern())?
    };
    let cleaned = cancel_nbi(observation, &nbi_estimate, joint_op.pattern())?;

    let problem = BpdnProblem::new(channel_op, cleaned.clone(), epsilon_double_prime)?;
    let stage2 = solve_bpdn_with(&problem, options)?;
    let residual_nbi_energy = stage2.residual_norm * stage2.residual_norm;
    Ok(TwoStageResult {
        stage1,
        nbi_estimate,
        cleaned,
        stage2,
        residual_nbi_energy,
    })
}

/// Two-stage recovery; composes both operators from scratch.
pub fn two_stage_recover(
    observation: &[Complex64],
    frames: &[WaveformFrame],
    pattern: &SamplingPattern,
    epsilon_prime: f64,
    epsilon_double_prime: f64,
) -> Result<TwoStageResult> {
    let joint_op = compose_operator(frames, true, pattern)?;
    let channel_op = compose_operator(frames, false, pattern)?;
    two_stage_recover_on(
        &joint_op,
        &channel_op,
        observation,
        epsilon_prime,
        epsilon_double_prime,
        &SolverOptions::default(),
    )
}
