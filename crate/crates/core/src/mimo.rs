//! End-to-end 2x2 MIMO simulation and per-link channel recovery.
//!
//! Both transmitters fire simultaneously with independently seeded
//! Rademacher bodies. Each receive antenna sees the sum of two circulant
//! echoes plus interference and noise, sub-sampled to `m` of `n` samples.
//! Recovery is separable per receive antenna: one BPDN solve over the
//! stacked two-block (plain) or three-block (joint / two-stage) dictionary
//! yields both transmit channels and, when modeled, the NBI spectrum.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{gaussian_noise, sample_channel, sigma2_from_snr, Scene, SparseChannel};
use crate::error::{Error, Result};
use crate::nbi::{two_stage_recover_on, synthesize_nbi, NbiSignal, ToneSpec, STAGE2_EPSILON_FACTOR};
use crate::signal::{
    circulant_convolve, compose_operator, subsample, MeasurementOperator, OmegaMode,
    SamplingPattern, WaveformFrame,
};
use crate::solver::{epsilon_from_noise, solve_bpdn_with, BpdnProblem, BpdnSolution, SolverOptions};

pub const TX_COUNT: usize = 2;
pub const RX_COUNT: usize = 2;

/// Seed bundle controlling every random draw of a simulated trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seeds {
    pub waveform: u64,
    pub omega: u64,
    /// One noise seed per receive antenna, so the antennas' noise
    /// realizations can be varied independently.
    pub noise: [u64; RX_COUNT],
    pub nbi: u64,
    pub scene: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds {
            waveform: 1,
            omega: 2,
            noise: [3, 4],
            nbi: 5,
            scene: 6,
        }
    }
}

/// Interference settings: tone count or explicit bins, and target SIR.
#[derive(Debug, Clone, PartialEq)]
pub struct NbiConfig {
    pub tones: usize,
    /// Explicit DFT bins; `None` draws distinct random bins from the NBI seed.
    pub bins: Option<Vec<usize>>,
    pub sir_db: f64,
}

/// Static system parameters of one simulated receiver setup.
#[derive(Debug, Clone, PartialEq)]
pub struct MimoConfig {
    pub n: usize,
    pub cp_len: usize,
    pub m: usize,
    pub tx_count: usize,
    pub rx_count: usize,
    pub seeds: Seeds,
    pub snr_db: f64,
    pub nbi: Option<NbiConfig>,
    pub omega_mode: OmegaMode,
}

impl MimoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tx_count != TX_COUNT || self.rx_count != RX_COUNT {
            return Err(Error::Config(format!(
                "only the {TX_COUNT}x{RX_COUNT} configuration is supported, got {}x{}",
                self.tx_count, self.rx_count
            )));
        }
        if self.n < 2 {
            return Err(Error::Config(format!("block length {} < 2", self.n)));
        }
        if self.cp_len == 0 || self.cp_len >= self.n {
            return Err(Error::InvalidCp {
                cp_len: self.cp_len,
                n: self.n,
            });
        }
        if self.m == 0 || self.m > self.n {
            return Err(Error::Config(format!(
                "measurement count {} outside [1, {}]",
                self.m, self.n
            )));
        }
        if let Some(nbi) = &self.nbi {
            if let Some(bins) = &nbi.bins {
                if bins.len() != nbi.tones {
                    return Err(Error::Config(format!(
                        "nbi.tones = {} disagrees with {} explicit bins",
                        nbi.tones,
                        bins.len()
                    )));
                }
            }
        }
        Ok(())
    }

    /// The two transmit frames, seeded per transmitter.
    pub fn frames(&self) -> Result<Vec<WaveformFrame>> {
        (0..self.tx_count as u64)
            .map(|i| WaveformFrame::rademacher(self.n, self.cp_len, self.seeds.waveform + i))
            .collect()
    }

    pub fn pattern(&self) -> Result<SamplingPattern> {
        SamplingPattern::generate(self.n, self.m, self.omega_mode, self.seeds.omega)
    }
}

/// Output of a simulated receive pass; `observations` are the sub-sampled
/// antenna signals, the rest is ground truth kept for diagnostics.
#[derive(Debug, Clone)]
pub struct ReceiveOutput {
    pub observations: [Vec<Complex64>; RX_COUNT],
    pub full_rate: [Vec<Complex64>; RX_COUNT],
    pub nbi: [NbiSignal; RX_COUNT],
    pub signal_power: [f64; RX_COUNT],
    pub sigma2: [f64; RX_COUNT],
}

/// Sum of the circulant echoes seen by one antenna: `sum_i x_i (*) h_i`.
pub fn rx_echo(frames: &[WaveformFrame], channels: &[SparseChannel]) -> Result<Vec<Complex64>> {
    if frames.len() != channels.len() {
        return Err(Error::Dimension(format!(
            "{} frames vs {} channels",
            frames.len(),
            channels.len()
        )));
    }
    let n = frames[0].n();
    let mut acc = vec![Complex64::default(); n];
    for (f, c) in frames.iter().zip(channels) {
        let part = circulant_convolve(f.body(), &c.taps)?;
        for (a, b) in acc.iter_mut().zip(&part) {
            *a += b;
        }
    }
    Ok(acc)
}

/// Mean per-sample power; zero for an empty vector.
pub fn mean_power(v: &[Complex64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.iter().map(|x| x.norm_sqr()).sum::<f64>() / v.len() as f64
}

/// Simulates the 2x2 receive pass for four scenes ordered `[h_11, h_12,
/// h_21, h_22]` (receive antenna major).
pub fn simulate_receive(config: &MimoConfig, scenes: &[Scene; 4]) -> Result<ReceiveOutput> {
    config.validate()?;
    let frames = config.frames()?;
    let pattern = config.pattern()?;
    receive_with(config, &frames, &pattern, scenes)
}

fn receive_with(
    config: &MimoConfig,
    frames: &[WaveformFrame],
    pattern: &SamplingPattern,
    scenes: &[Scene; 4],
) -> Result<ReceiveOutput> {
    let n = config.n;
    for (idx, s) in scenes.iter().enumerate() {
        if s.n() != n || s.cp_len() != config.cp_len {
            return Err(Error::Scene(format!(
                "scene {idx} has (n, cp_len) = ({}, {}), config has ({n}, {})",
                s.n(),
                s.cp_len(),
                config.cp_len
            )));
        }
    }
    let channels: Vec<SparseChannel> = scenes
        .iter()
        .map(sample_channel)
        .collect::<Result<Vec<_>>>()?;

    let mut nbi_rng = ChaCha8Rng::seed_from_u64(config.seeds.nbi);
    let tone_bins: Vec<usize> = match &config.nbi {
        Some(cfg) => match &cfg.bins {
            Some(bins) => bins.clone(),
            None => {
                let mut bins: Vec<usize> =
                    rand::seq::index::sample(&mut nbi_rng, n, cfg.tones).into_vec();
                bins.sort_unstable();
                bins
            }
        },
        None => Vec::new(),
    };

    let mut observations = Vec::with_capacity(RX_COUNT);
    let mut full_rate = Vec::with_capacity(RX_COUNT);
    let mut nbi_out = Vec::with_capacity(RX_COUNT);
    let mut signal_power = [0.0; RX_COUNT];
    let mut sigma2 = [0.0; RX_COUNT];

    for j in 0..RX_COUNT {
        let echo = rx_echo(frames, &channels[j * TX_COUNT..(j + 1) * TX_COUNT])?;
        let p = mean_power(&echo);
        signal_power[j] = p;

        let tones: Vec<ToneSpec> = tone_bins
            .iter()
            .map(|&bin| ToneSpec {
                bin,
                weight: 1.0,
                phase: nbi_rng.random_range(0.0..std::f64::consts::TAU),
            })
            .collect();
        let (nbi_signal, nbi_time) = match &config.nbi {
            Some(cfg) if p > 0.0 && !tones.is_empty() => {
                synthesize_nbi(&tones, n, p, cfg.sir_db)?
            }
            _ => (NbiSignal::silent(n), vec![Complex64::default(); n]),
        };

        sigma2[j] = if p > 0.0 {
            sigma2_from_snr(p, config.snr_db)
        } else {
            0.0
        };
        let mut rng = ChaCha8Rng::seed_from_u64(config.seeds.noise[j]);
        let noise = gaussian_noise(n, sigma2[j], &mut rng);

        let full: Vec<Complex64> = (0..n)
            .map(|k| echo[k] + nbi_time[k] + noise[k])
            .collect();
        observations.push(subsample(&full, pattern)?);
        full_rate.push(full);
        nbi_out.push(nbi_signal);
    }

    Ok(ReceiveOutput {
        observations: observations.try_into().expect("two antennas"),
        full_rate: full_rate.try_into().expect("two antennas"),
        nbi: nbi_out.try_into().expect("two antennas"),
        signal_power,
        sigma2,
    })
}

/// Which recovery program to run per antenna.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecoveryMode {
    /// Channel-only BPDN, interference unmodeled.
    Plain,
    /// One solve over the NBI-augmented dictionary.
    Joint,
    /// Joint solve, interference subtraction, channel-only re-solve.
    TwoStage,
}

impl RecoveryMode {
    pub fn label(&self) -> &'static str {
        match self {
            RecoveryMode::Plain => "plain",
            RecoveryMode::Joint => "joint",
            RecoveryMode::TwoStage => "two_stage",
        }
    }

    pub fn uses_fourier_block(&self) -> bool {
        !matches!(self, RecoveryMode::Plain)
    }
}

impl std::str::FromStr for RecoveryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "plain" => Ok(RecoveryMode::Plain),
            "joint" => Ok(RecoveryMode::Joint),
            "two_stage" | "two-stage" | "twostage" => Ok(RecoveryMode::TwoStage),
            other => Err(Error::Config(format!("unknown recovery mode '{other}'"))),
        }
    }
}

/// Per-antenna noise bounds for the two solver stages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryEpsilons {
    pub prime: [f64; RX_COUNT],
    pub double_prime: [f64; RX_COUNT],
}

impl RecoveryEpsilons {
    /// Stage-1 bound from the per-antenna noise variance; stage-2 bound is a
    /// fixed multiple of it.
    pub fn from_noise(sigma2: [f64; RX_COUNT], m: usize) -> Result<Self> {
        let mut prime = [0.0; RX_COUNT];
        for (e, s2) in prime.iter_mut().zip(sigma2) {
            *e = epsilon_from_noise(s2, m)?;
        }
        Ok(RecoveryEpsilons {
            prime,
            double_prime: prime.map(|e| e * STAGE2_EPSILON_FACTOR),
        })
    }
}

/// Recovered per-link channels (physical scale) plus optional NBI spectra.
#[derive(Debug, Clone)]
pub struct MimoEstimates {
    pub mode: RecoveryMode,
    /// `[h_11, h_12, h_21, h_22]`, receive antenna major.
    pub channels: [Vec<Complex64>; 4],
    pub nbi_spectra: Option<[Vec<Complex64>; RX_COUNT]>,
    /// Per-antenna solver reports for the estimate in `channels` (stage 2
    /// when two-stage).
    pub solutions: [BpdnSolution; RX_COUNT],
    pub stage1: Option<[BpdnSolution; RX_COUNT]>,
}

fn scaled_block(coefficients: &[Complex64], n: usize, idx: usize, scale: f64) -> Vec<Complex64> {
    coefficients[idx * n..(idx + 1) * n]
        .iter()
        .map(|v| v * scale)
        .collect()
}

impl MimoEstimates {
    /// Physical-scale channels read from the stage-1 (joint) solutions of a
    /// two-stage run; the stage-1 program is exactly the joint program, so
    /// these are what joint-only recovery would have reported.
    pub fn stage1_channels(&self, frames: &[WaveformFrame]) -> Option<[Vec<Complex64>; 4]> {
        let stage1 = self.stage1.as_ref()?;
        let n = self.channels[0].len();
        let mut out = Vec::with_capacity(4);
        for sol in stage1 {
            for (i, f) in frames.iter().enumerate() {
                out.push(scaled_block(&sol.coefficients, n, i, 1.0 / f.body_norm()));
            }
        }
        Some(out.try_into().expect("four links"))
    }
}

fn recover_with_ops(
    chan_op: &MeasurementOperator,
    joint_op: Option<&MeasurementOperator>,
    frames: &[WaveformFrame],
    observations: &[Vec<Complex64>; RX_COUNT],
    mode: RecoveryMode,
    epsilons: &RecoveryEpsilons,
    options: &SolverOptions,
) -> Result<MimoEstimates> {
    let n = chan_op.block_len();
    // Dictionary columns are unit-normalized, so coefficients carry a factor
    // of the body norm relative to the physical taps.
    let scales: Vec<f64> = frames.iter().map(|f| 1.0 / f.body_norm()).collect();

    let mut channels = Vec::with_capacity(4);
    let mut spectra = Vec::with_capacity(RX_COUNT);
    let mut solutions = Vec::with_capacity(RX_COUNT);
    let mut stage1 = Vec::with_capacity(RX_COUNT);

    for j in 0..RX_COUNT {
        let obs = &observations[j];
        match mode {
            RecoveryMode::Plain => {
                let problem = BpdnProblem::new(chan_op, obs.clone(), epsilons.prime[j])?;
                let sol = solve_bpdn_with(&problem, options)?;
                for (i, &s) in scales.iter().enumerate() {
                    channels.push(scaled_block(&sol.coefficients, n, i, s));
                }
                solutions.push(sol);
            }
            RecoveryMode::Joint => {
                let op = joint_op.ok_or_else(|| {
                    Error::Composition("joint recovery without a joint operator".into())
                })?;
                let problem = BpdnProblem::new(op, obs.clone(), epsilons.prime[j])?;
                let sol = solve_bpdn_with(&problem, options)?;
                for (i, &s) in scales.iter().enumerate() {
                    channels.push(scaled_block(&sol.coefficients, n, i, s));
                }
                spectra.push(sol.coefficients[frames.len() * n..].to_vec());
                solutions.push(sol);
            }
            RecoveryMode::TwoStage => {
                let op = joint_op.ok_or_else(|| {
                    Error::Composition("two-stage recovery without a joint operator".into())
                })?;
                let result = two_stage_recover_on(
                    op,
                    chan_op,
                    obs,
                    epsilons.prime[j],
                    epsilons.double_prime[j],
                    options,
                )?;
                for (i, &s) in scales.iter().enumerate() {
                    channels.push(scaled_block(&result.stage2.coefficients, n, i, s));
                }
                spectra.push(result.nbi_estimate.clone());
                solutions.push(result.stage2);
                stage1.push(result.stage1);
            }
        }
    }

    Ok(MimoEstimates {
        mode,
        channels: channels.try_into().expect("four links"),
        nbi_spectra: if mode.uses_fourier_block() {
            Some(spectra.try_into().expect("two antennas"))
        } else {
            None
        },
        solutions: solutions.try_into().expect("two antennas"),
        stage1: if mode == RecoveryMode::TwoStage {
            Some(stage1.try_into().expect("two antennas"))
        } else {
            None
        },
    })
}

/// Recovers all four links from the two antenna observations.
pub fn recover_mimo(
    observations: &[Vec<Complex64>; RX_COUNT],
    frames: &[WaveformFrame],
    pattern: &SamplingPattern,
    mode: RecoveryMode,
    epsilons: &RecoveryEpsilons,
) -> Result<MimoEstimates> {
    let chan_op = compose_operator(frames, false, pattern)?;
    let joint_op = if mode.uses_fourier_block() {
        Some(compose_operator(frames, true, pattern)?)
    } else {
        None
    };
    recover_with_ops(
        &chan_op,
        joint_op.as_ref(),
        frames,
        observations,
        mode,
        epsilons,
        &SolverOptions::default(),
    )
}

/// Index of the largest-magnitude entry; `None` for an empty vector.
pub fn dominant_index(v: &[Complex64]) -> Option<usize> {
    v.iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .map(|(i, _)| i)
}

/// Detection outcome for one (rx, tx) link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectionEntry {
    pub recovered_support: Vec<usize>,
    pub true_support: Vec<usize>,
    pub hit: bool,
}

/// Detection outcomes for all four links of a trial.
#[derive(Debug, Clone)]
pub struct DetectionReport {
    /// `[(rx1,tx1), (rx1,tx2), (rx2,tx1), (rx2,tx2)]`.
    pub entries: [DetectionEntry; 4],
    pub overall_hit: bool,
    pub tolerance_taps: usize,
}

/// Scores one channel estimate: the top-`k` magnitudes must cover every true
/// tap within `tolerance_taps`, and every top-`k` tap must be near some true
/// tap.
pub fn detect_taps(
    estimate: &[Complex64],
    k: usize,
    tolerance_taps: usize,
    true_support: &[usize],
) -> Result<DetectionEntry> {
    if k == 0 {
        return Err(Error::InvalidInput("detection needs k >= 1".into()));
    }
    if k > estimate.len() {
        return Err(Error::InvalidInput(format!(
            "k {k} > estimate length {}",
            estimate.len()
        )));
    }
    let mut order: Vec<usize> = (0..estimate.len()).collect();
    order.sort_by(|&a, &b| {
        estimate[b]
            .norm()
            .total_cmp(&estimate[a].norm())
            .then(a.cmp(&b))
    });
    let mut recovered: Vec<usize> = order[..k].to_vec();
    recovered.sort_unstable();

    let near = |a: usize, b: usize| a.abs_diff(b) <= tolerance_taps;
    let covered = true_support
        .iter()
        .all(|&t| recovered.iter().any(|&r| near(r, t)));
    let clean = recovered
        .iter()
        .all(|&r| true_support.iter().any(|&t| near(r, t)));
    Ok(DetectionEntry {
        recovered_support: recovered,
        true_support: true_support.to_vec(),
        hit: covered && clean && !true_support.is_empty(),
    })
}

/// Scores all four links with `k` equal to each link's target count.
pub fn detection_report(
    channels: &[Vec<Complex64>; 4],
    true_supports: &[Vec<usize>; 4],
    tolerance_taps: usize,
) -> Result<DetectionReport> {
    let mut entries = Vec::with_capacity(4);
    for (est, truth) in channels.iter().zip(true_supports) {
        entries.push(detect_taps(est, truth.len().max(1), tolerance_taps, truth)?);
    }
    let overall_hit = entries.iter().all(|e| e.hit);
    Ok(DetectionReport {
        entries: entries.try_into().expect("four links"),
        overall_hit,
        tolerance_taps,
    })
}

/// Reusable simulation context: frames, pattern, and both operators built
/// once, shared by every trial against the same configuration.
#[derive(Debug)]
pub struct MimoSimulator {
    config: MimoConfig,
    frames: Vec<WaveformFrame>,
    pattern: SamplingPattern,
    chan_op: MeasurementOperator,
    joint_op: MeasurementOperator,
    options: SolverOptions,
}

impl MimoSimulator {
    pub fn new(config: MimoConfig) -> Result<Self> {
        Self::with_options(config, SolverOptions::default())
    }

    pub fn with_options(config: MimoConfig, options: SolverOptions) -> Result<Self> {
        config.validate()?;
        let frames = config.frames()?;
        let pattern = config.pattern()?;
        let chan_op = compose_operator(&frames, false, &pattern)?;
        let joint_op = compose_operator(&frames, true, &pattern)?;
        Ok(MimoSimulator {
            config,
            frames,
            pattern,
            chan_op,
            joint_op,
            options,
        })
    }

    pub fn config(&self) -> &MimoConfig {
        &self.config
    }

    pub fn frames(&self) -> &[WaveformFrame] {
        &self.frames
    }

    pub fn pattern(&self) -> &SamplingPattern {
        &self.pattern
    }

    pub fn channel_operator(&self) -> &MeasurementOperator {
        &self.chan_op
    }

    pub fn joint_operator(&self) -> &MeasurementOperator {
        &self.joint_op
    }

    pub fn options(&self) -> &SolverOptions {
        &self.options
    }

    pub fn receive(&self, scenes: &[Scene; 4]) -> Result<ReceiveOutput> {
        receive_with(&self.config, &self.frames, &self.pattern, scenes)
    }

    pub fn recover(
        &self,
        observations: &[Vec<Complex64>; RX_COUNT],
        mode: RecoveryMode,
        epsilons: &RecoveryEpsilons,
    ) -> Result<MimoEstimates> {
        recover_with_ops(
            &self.chan_op,
            Some(&self.joint_op),
            &self.frames,
            observations,
            mode,
            epsilons,
            &self.options,
        )
    }

    /// Noise bounds for this receiver geometry given per-antenna variances.
    pub fn epsilons(&self, sigma2: [f64; RX_COUNT]) -> Result<RecoveryEpsilons> {
        RecoveryEpsilons::from_noise(sigma2, self.pattern.m())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ScenePath;

    fn base_config(n: usize, cp: usize, m: usize) -> MimoConfig {
        MimoConfig {
            n,
            cp_len: cp,
            m,
            tx_count: TX_COUNT,
            rx_count: RX_COUNT,
            seeds: Seeds::default(),
            snr_db: f64::INFINITY,
            nbi: None,
            omega_mode: OmegaMode::UniformRandom,
        }
    }

    fn one_tap(n: usize, cp: usize, tap: f64, alpha: Complex64) -> Scene {
        Scene::new(vec![ScenePath { alpha, tau: tap }], n, cp).unwrap()
    }

    fn empty(n: usize, cp: usize) -> Scene {
        Scene::empty(n, cp).unwrap()
    }

    #[test]
    fn zero_scenes_give_zero_observation() {
        let config = base_config(64, 16, 24);
        let scenes = [
            empty(64, 16),
            empty(64, 16),
            empty(64, 16),
            empty(64, 16),
        ];
        let out = simulate_receive(&config, &scenes).unwrap();
        for j in 0..RX_COUNT {
            assert!(out.observations[j]
                .iter()
                .all(|v| *v == Complex64::default()));
            assert_eq!(out.signal_power[j], 0.0);
            assert_eq!(out.sigma2[j], 0.0);
        }
    }

    #[test]
    fn identity_channel_reproduces_waveform_body() {
        let n = 64;
        let mut config = base_config(n, 16, n);
        config.omega_mode = OmegaMode::RegularDecimation;
        let scenes = [
            one_tap(n, 16, 0.0, Complex64::new(1.0, 0.0)),
            empty(n, 16),
            empty(n, 16),
            empty(n, 16),
        ];
        let out = simulate_receive(&config, &scenes).unwrap();
        let body = config.frames().unwrap()[0].body().to_vec();
        for (a, b) in out.observations[0].iter().zip(&body) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn receive_is_deterministic() {
        let mut config = base_config(64, 16, 24);
        config.snr_db = 10.0;
        config.nbi = Some(NbiConfig {
            tones: 1,
            bins: None,
            sir_db: 0.0,
        });
        let scenes = [
            one_tap(64, 16, 3.0, Complex64::new(1.0, 0.0)),
            one_tap(64, 16, 7.0, Complex64::new(0.0, 1.0)),
            one_tap(64, 16, 2.0, Complex64::new(-1.0, 0.0)),
            one_tap(64, 16, 11.0, Complex64::new(0.5, 0.5)),
        ];
        let a = simulate_receive(&config, &scenes).unwrap();
        let b = simulate_receive(&config, &scenes).unwrap();
        assert_eq!(a.observations, b.observations);
        assert_eq!(a.nbi[0], b.nbi[0]);
    }

    #[test]
    fn scene_shape_mismatch_is_rejected() {
        let config = base_config(64, 16, 24);
        let scenes = [
            empty(32, 8),
            empty(64, 16),
            empty(64, 16),
            empty(64, 16),
        ];
        assert!(matches!(
            simulate_receive(&config, &scenes),
            Err(Error::Scene(_))
        ));
    }

    #[test]
    fn noiseless_four_link_recovery() {
        let n = 64;
        let config = base_config(n, 16, 32);
        let scenes = [
            one_tap(n, 16, 3.0, Complex64::new(1.0, 0.0)),
            one_tap(n, 16, 9.0, Complex64::new(0.2, -0.9)),
            one_tap(n, 16, 5.0, Complex64::new(-0.7, 0.1)),
            one_tap(n, 16, 14.0, Complex64::new(0.6, 0.6)),
        ];
        let sim = MimoSimulator::new(config).unwrap();
        let out = sim.receive(&scenes).unwrap();
        let eps = sim.epsilons(out.sigma2).unwrap();
        let est = sim
            .recover(&out.observations, RecoveryMode::Plain, &eps)
            .unwrap();
        let truths = [vec![3], vec![9], vec![5], vec![14]];
        let report = detection_report(&est.channels, &truths, 0).unwrap();
        assert!(report.overall_hit, "{:?}", report.entries);
        for (link, scene) in est.channels.iter().zip(&scenes) {
            let peak = dominant_index(link).unwrap();
            let alpha = scene.paths()[0].alpha;
            assert!(
                (link[peak] - alpha).norm() < 1e-5,
                "recovered {} vs {alpha}",
                link[peak]
            );
        }
    }

    #[test]
    fn zero_observations_give_zero_estimates() {
        let n = 32;
        let config = base_config(n, 8, 16);
        let sim = MimoSimulator::new(config).unwrap();
        let obs = [
            vec![Complex64::default(); 16],
            vec![Complex64::default(); 16],
        ];
        let eps = RecoveryEpsilons {
            prime: [0.1, 0.1],
            double_prime: [0.15, 0.15],
        };
        for mode in [RecoveryMode::Plain, RecoveryMode::Joint, RecoveryMode::TwoStage] {
            let est = sim.recover(&obs, mode, &eps).unwrap();
            for link in &est.channels {
                assert!(link.iter().all(|v| *v == Complex64::default()));
            }
        }
    }

    #[test]
    fn antenna_recovery_is_separable_in_noise_seeds() {
        let n = 32;
        let mut config = base_config(n, 8, 16);
        config.snr_db = 15.0;
        let scenes = [
            one_tap(n, 8, 2.0, Complex64::new(1.0, 0.0)),
            one_tap(n, 8, 5.0, Complex64::new(0.3, 0.8)),
            one_tap(n, 8, 1.0, Complex64::new(-0.5, 0.2)),
            one_tap(n, 8, 6.0, Complex64::new(0.9, -0.1)),
        ];
        let sim = MimoSimulator::new(config.clone()).unwrap();
        let out_a = sim.receive(&scenes).unwrap();

        config.seeds.noise[1] = 999;
        let sim_b = MimoSimulator::new(config).unwrap();
        let out_b = sim_b.receive(&scenes).unwrap();

        assert_eq!(out_a.observations[0], out_b.observations[0]);
        assert_ne!(out_a.observations[1], out_b.observations[1]);

        let eps_a = sim.epsilons(out_a.sigma2).unwrap();
        let eps_b = sim_b.epsilons(out_b.sigma2).unwrap();
        let est_a = sim
            .recover(&out_a.observations, RecoveryMode::Plain, &eps_a)
            .unwrap();
        let est_b = sim_b
            .recover(&out_b.observations, RecoveryMode::Plain, &eps_b)
            .unwrap();
        assert_eq!(est_a.channels[0], est_b.channels[0]);
        assert_eq!(est_a.channels[1], est_b.channels[1]);
    }

    #[test]
    fn detection_semantics() {
        let n = 16;
        let mut est = vec![Complex64::default(); n];
        est[3] = Complex64::new(1.0, 0.0);
        let entry = detect_taps(&est, 1, 1, &[3]).unwrap();
        assert!(entry.hit);
        assert_eq!(entry.recovered_support, vec![3]);

        let mut shifted = vec![Complex64::default(); n];
        shifted[4] = Complex64::new(1.0, 0.0);
        assert!(detect_taps(&shifted, 1, 1, &[3]).unwrap().hit);
        assert!(!detect_taps(&shifted, 1, 0, &[3]).unwrap().hit);

        let mut three = vec![Complex64::default(); n];
        three[2] = Complex64::new(0.9, 0.0);
        three[6] = Complex64::new(0.8, 0.0);
        three[11] = Complex64::new(0.7, 0.0);
        let entry = detect_taps(&three, 3, 1, &[1, 7, 11]).unwrap();
        assert!(entry.hit);

        // A spurious top-k tap far from every target is a miss even when all
        // targets are covered.
        let mut spur = three.clone();
        spur[14] = Complex64::new(0.95, 0.0);
        assert!(!detect_taps(&spur, 4, 1, &[1, 7, 11]).unwrap().hit);

        assert!(detect_taps(&est, 0, 1, &[3]).is_err());
        assert!(detect_taps(&est, n + 1, 1, &[3]).is_err());
    }

    #[test]
    fn mode_labels_parse_back() {
        for mode in [RecoveryMode::Plain, RecoveryMode::Joint, RecoveryMode::TwoStage] {
            let parsed: RecoveryMode = mode.label().parse().unwrap();
            assert_eq!(parsed, mode);
        }
        assert!("fancy".parse::<RecoveryMode>().is_err());
    }

    #[test]
    fn config_validation() {
        let mut config = base_config(64, 16, 24);
        config.tx_count = 3;
        assert!(config.validate().is_err());
        let mut config = base_config(64, 16, 80);
        assert!(config.validate().is_err());
        config.m = 24;
        config.nbi = Some(NbiConfig {
            tones: 2,
            bins: Some(vec![5]),
            sir_db: 0.0,
        });
        assert!(config.validate().is_err());
    }
}
