//! Monte Carlo detection-probability sweeps and the single-target demo.
//!
//! Every random draw of a trial comes from a ChaCha stream addressed by
//! `(point index, trial index, role)`, all derived from one master seed, so
//! results are identical no matter how trials are scheduled across threads.
//! Modes share draws within a trial (common random numbers), which pairs the
//! mode comparisons and sharply reduces the variance of their differences;
//! when both joint and two-stage modes are requested, the joint program is
//! solved once and reused as the two-stage first stage.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{gaussian_noise, random_scene, sample_channel, sigma2_from_snr, Scene};
use crate::error::{Error, Result};
use crate::mimo::{
    detection_report, dominant_index, mean_power, rx_echo, simulate_receive, MimoConfig,
    MimoEstimates, MimoSimulator, RecoveryEpsilons, RecoveryMode, RX_COUNT,
};
use crate::nbi::{synthesize_nbi, NbiSignal, ToneSpec};
use crate::signal::subsample;

const SCENE_ROLE: u64 = 0;
const NOISE_ROLE: [u64; RX_COUNT] = [1, 2];
const NBI_ROLE: u64 = 3;

/// Which axis the sweep walks; the other parameter stays at `fixed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    SirDb,
    SnrDb,
}

impl SweepAxis {
    pub fn label(&self) -> &'static str {
        match self {
            SweepAxis::SirDb => "sir_db",
            SweepAxis::SnrDb => "snr_db",
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sir_db" | "sir" => Ok(SweepAxis::SirDb),
            "snr_db" | "snr" => Ok(SweepAxis::SnrDb),
            other => Err(Error::Config(format!("unknown sweep axis '{other}'"))),
        }
    }
}

/// Full description of one sweep experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
    /// Value of the parameter not being swept.
    pub fixed: f64,
    pub trials_per_point: usize,
    pub modes: Vec<RecoveryMode>,
    pub targets: usize,
    pub nbi_tones: usize,
    pub tolerance_taps: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        if self.grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("sweep grid must be strictly increasing".into()));
        }
        if self.trials_per_point == 0 {
            return Err(Error::Config("trials_per_point must be >= 1".into()));
        }
        if self.trials_per_point >= 1 << 28 {
            return Err(Error::Config("trials_per_point exceeds the seed budget".into()));
        }
        if self.modes.is_empty() {
            return Err(Error::Config("no recovery modes requested".into()));
        }
        for (i, a) in self.modes.iter().enumerate() {
            if self.modes[i + 1..].contains(a) {
                return Err(Error::Config(format!("duplicate mode '{}'", a.label())));
            }
        }
        if self.targets == 0 {
            return Err(Error::Config("sweeps need at least one target".into()));
        }
        Ok(())
    }
}

/// One scored trial of one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub point_value: f64,
    pub trial_index: usize,
    pub mode: &'static str,
    pub hit: bool,
    /// Joint-stage hit when the mode is two-stage.
    pub stage1_hit: Option<bool>,
    /// Stream ids actually used: (scene, noise rx1, noise rx2, nbi).
    pub seeds: (u64, u64, u64, u64),
}

/// Aggregated detection counts for one `(point, mode)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PdCell {
    pub point: f64,
    pub mode: &'static str,
    pub trials: usize,
    pub hits: usize,
}

impl PdCell {
    pub fn pd(&self) -> f64 {
        self.hits as f64 / self.trials as f64
    }
}

/// Pd table in grid-major, then requested-mode order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PdTable {
    pub cells: Vec<PdCell>,
}

impl PdTable {
    pub fn pd(&self, point: f64, mode: &str) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.point == point && c.mode == mode)
            .map(PdCell::pd)
    }
}

/// A completed sweep: the aggregate table plus every trial record.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub table: PdTable,
    pub records: Vec<TrialRecord>,
}

fn stream_id(point_idx: usize, trial: usize, role: u64) -> u64 {
    ((point_idx as u64) << 32) | ((trial as u64) << 4) | role
}

fn stream_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

fn run_trial(
    sim: &MimoSimulator,
    spec: &SweepSpec,
    master_seed: u64,
    point_idx: usize,
    point: f64,
    trial: usize,
) -> Result<Vec<TrialRecord>> {
    let config = sim.config();
    let n = config.n;
    let (snr_db, sir_db) = match spec.axis {
        SweepAxis::SirDb => (spec.fixed, point),
        SweepAxis::SnrDb => (point, spec.fixed),
    };

    let streams = (
        stream_id(point_idx, trial, SCENE_ROLE),
        stream_id(point_idx, trial, NOISE_ROLE[0]),
        stream_id(point_idx, trial, NOISE_ROLE[1]),
        stream_id(point_idx, trial, NBI_ROLE),
    );

    let mut scene_rng = stream_rng(master_seed, streams.0);
    let mut scenes = Vec::with_capacity(4);
    let mut truths = Vec::with_capacity(4);
    let mut channels = Vec::with_capacity(4);
    for _ in 0..4 {
        let scene = random_scene(n, config.cp_len, spec.targets, &mut scene_rng)?;
        let ch = sample_channel(&scene)?;
        truths.push(ch.true_support.clone());
        channels.push(ch);
        scenes.push(scene);
    }
    let truths: [Vec<usize>; 4] = truths.try_into().expect("four links");

    let mut nbi_rng = stream_rng(master_seed, streams.3);
    let inject_nbi = spec.nbi_tones > 0 && !(sir_db.is_infinite() && sir_db > 0.0);
    let bins: Vec<usize> = if inject_nbi {
        let mut b: Vec<usize> =
            rand::seq::index::sample(&mut nbi_rng, n, spec.nbi_tones).into_vec();
        b.sort_unstable();
        b
    } else {
        Vec::new()
    };

    let mut observations = Vec::with_capacity(RX_COUNT);
    let mut sigma2 = [0.0; RX_COUNT];
    for j in 0..RX_COUNT {
        let echo = rx_echo(sim.frames(), &channels[j * 2..(j + 1) * 2])?;
        let p = mean_power(&echo);
        let tones: Vec<ToneSpec> = bins
            .iter()
            .map(|&bin| ToneSpec {
                bin,
                weight: 1.0,
                phase: nbi_rng.random_range(0.0..std::f64::consts::TAU),
            })
            .collect();
        let (_, nbi_time) = if !tones.is_empty() && p > 0.0 {
            synthesize_nbi(&tones, n, p, sir_db)?
        } else {
            (NbiSignal::silent(n), vec![Complex64::default(); n])
        };
        sigma2[j] = if p > 0.0 {
            sigma2_from_snr(p, snr_db)
        } else {
            0.0
        };
        let mut noise_rng = stream_rng(master_seed, if j == 0 { streams.1 } else { streams.2 });
        let noise = gaussian_noise(n, sigma2[j], &mut noise_rng);
        let full: Vec<Complex64> = (0..n)
            .map(|k| echo[k] + nbi_time[k] + noise[k])
            .collect();
        observations.push(subsample(&full, sim.pattern())?);
    }
    let observations: [Vec<Complex64>; RX_COUNT] =
        observations.try_into().expect("two antennas");
    let epsilons = sim.epsilons(sigma2)?;

    let wants_two_stage = spec.modes.contains(&RecoveryMode::TwoStage);
    let mut two_stage_hits: Option<(bool, bool)> = None;
    let mut joint_hit: Option<bool> = None;
    let mut records = Vec::with_capacity(spec.modes.len());
    for &mode in &spec.modes {
        let record = match mode {
            RecoveryMode::Plain => {
                let est = sim.recover(&observations, RecoveryMode::Plain, &epsilons)?;
                let hit = detection_report(&est.channels, &truths, spec.tolerance_taps)?
                    .overall_hit;
                TrialRecord {
                    point_value: point,
                    trial_index: trial,
                    mode: mode.label(),
                    hit,
                    stage1_hit: None,
                    seeds: streams,
                }
            }
            RecoveryMode::Joint => {
                let hit = if wants_two_stage {
                    let (_, s1) = two_stage_hits_for(
                        sim,
                        &observations,
                        &truths,
                        &epsilons,
                        spec.tolerance_taps,
                        &mut two_stage_hits,
                    )?;
                    s1
                } else {
                    match joint_hit {
                        Some(h) => h,
                        None => {
                            let est =
                                sim.recover(&observations, RecoveryMode::Joint, &epsilons)?;
                            let h = detection_report(&est.channels, &truths, spec.tolerance_taps)?
                                .overall_hit;
                            joint_hit = Some(h);
                            h
                        }
                    }
                };
                TrialRecord {
                    point_value: point,
                    trial_index: trial,
                    mode: mode.label(),
                    hit,
                    stage1_hit: None,
                    seeds: streams,
                }
            }
            RecoveryMode::TwoStage => {
                let (s2, s1) = two_stage_hits_for(
                    sim,
                    &observations,
                    &truths,
                    &epsilons,
                    spec.tolerance_taps,
                    &mut two_stage_hits,
                )?;
                TrialRecord {
                    point_value: point,
                    trial_index: trial,
                    mode: mode.label(),
                    hit: s2,
                    stage1_hit: Some(s1),
                    seeds: streams,
                }
            }
        };
        records.push(record);
    }
    Ok(records)
}

fn two_stage_hits_for(
    sim: &MimoSimulator,
    observations: &[Vec<Complex64>; RX_COUNT],
    truths: &[Vec<usize>; 4],
    epsilons: &RecoveryEpsilons,
    tolerance: usize,
    cache: &mut Option<(bool, bool)>,
) -> Result<(bool, bool)> {
    if let Some(hits) = *cache {
        return Ok(hits);
    }
    let est = sim.recover(observations, RecoveryMode::TwoStage, epsilons)?;
    let stage2_hit = detection_report(&est.channels, truths, tolerance)?.overall_hit;
    let stage1_channels = est
        .stage1_channels(sim.frames())
        .expect("two-stage estimates carry stage-1 solutions");
    let stage1_hit = detection_report(&stage1_channels, truths, tolerance)?.overall_hit;
    *cache = Some((stage2_hit, stage1_hit));
    Ok((stage2_hit, stage1_hit))
}

/// Runs the sweep; deterministic in `(spec, config, master_seed)` regardless
/// of thread count.
pub fn run_sweep(
    spec: &SweepSpec,
    config: &MimoConfig,
    master_seed: u64,
) -> Result<SweepOutcome> {
    spec.validate()?;
    config.validate()?;
    if spec.targets > config.cp_len {
        return Err(Error::Config(format!(
            "{} targets do not fit in cp_len {}",
            spec.targets, config.cp_len
        )));
    }
    let sim = MimoSimulator::new(config.clone())?;
    // Warm the Gram caches serially so parallel trials only read them.
    sim.channel_operator().gram_spectrum();
    if spec.modes.iter().any(|m| m.uses_fourier_block()) {
        sim.joint_operator().gram_spectrum();
    }

    let mut records = Vec::new();
    let mut cells = Vec::new();
    for (point_idx, &point) in spec.grid.iter().enumerate() {
        let point_records: Vec<Vec<TrialRecord>> = (0..spec.trials_per_point)
            .into_par_iter()
            .map(|trial| run_trial(&sim, spec, master_seed, point_idx, point, trial))
            .collect::<Result<_>>()?;
        for mode in &spec.modes {
            let hits = point_records
                .iter()
                .flatten()
                .filter(|r| r.mode == mode.label() && r.hit)
                .count();
            cells.push(PdCell {
                point,
                mode: mode.label(),
                trials: spec.trials_per_point,
                hits,
            });
        }
        records.extend(point_records.into_iter().flatten());
    }
    Ok(SweepOutcome {
        table: PdTable { cells },
        records,
    })
}

/// Artifacts of the single-target, single-tone demonstration.
#[derive(Debug, Clone)]
pub struct DemoBundle {
    /// Sub-sampled receive-antenna-1 observation.
    pub observation: Vec<Complex64>,
    /// Two-stage channel estimate for the (rx1, tx1) link, physical scale.
    pub channel: Vec<Complex64>,
    /// Stage-1 NBI spectrum estimate at receive antenna 1.
    pub nbi_spectrum: Vec<Complex64>,
    pub true_tap: usize,
    pub true_bins: Vec<usize>,
    pub dominant_tap: Option<usize>,
    pub dominant_bin: Option<usize>,
}

/// Runs one two-stage recovery of a single-path scene on the (rx1, tx1) link
/// and returns the plot-ready artifacts.
pub fn demo_single_target(config: &MimoConfig, scene: &Scene) -> Result<DemoBundle> {
    config.validate()?;
    if scene.targets() != 1 {
        return Err(Error::InvalidInput(format!(
            "demo expects a single-path scene, got {} paths",
            scene.targets()
        )));
    }
    if let Some(nbi) = &config.nbi {
        if nbi.tones > 1 {
            return Err(Error::InvalidInput(format!(
                "demo expects at most one NBI tone, got {}",
                nbi.tones
            )));
        }
    }
    let scenes = [
        scene.clone(),
        Scene::empty(config.n, config.cp_len)?,
        Scene::empty(config.n, config.cp_len)?,
        Scene::empty(config.n, config.cp_len)?,
    ];
    let out = simulate_receive(config, &scenes)?;
    let sim = MimoSimulator::new(config.clone())?;
    let epsilons = sim.epsilons(out.sigma2)?;
    let est: MimoEstimates =
        sim.recover(&out.observations, RecoveryMode::TwoStage, &epsilons)?;

    let channel = est.channels[0].clone();
    let nbi_spectrum = est.nbi_spectra.as_ref().expect("two-stage has spectra")[0].clone();
    let true_bins = out.nbi[0].tone_bins.clone();
    Ok(DemoBundle {
        observation: out.observations[0].clone(),
        dominant_tap: dominant_index(&channel),
        dominant_bin: dominant_index(&nbi_spectrum),
        channel,
        nbi_spectrum,
        true_tap: scene.paths()[0].tau.round() as usize,
        true_bins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ScenePath;
    use crate::mimo::{NbiConfig, Seeds};
    use crate::signal::OmegaMode;

    fn sweep_config(n: usize, cp: usize, m: usize) -> MimoConfig {
        MimoConfig {
            n,
            cp_len: cp,
            m,
            tx_count: 2,
            rx_count: 2,
            seeds: Seeds::default(),
            snr_db: f64::INFINITY,
            nbi: None,
            omega_mode: OmegaMode::UniformRandom,
        }
    }

    fn quick_spec(modes: Vec<RecoveryMode>, trials: usize) -> SweepSpec {
        SweepSpec {
            axis: SweepAxis::SirDb,
            grid: vec![0.0, 10.0],
            fixed: f64::INFINITY,
            trials_per_point: trials,
            modes,
            targets: 1,
            nbi_tones: 0,
            tolerance_taps: 1,
        }
    }

    #[test]
    fn noiseless_sweep_detects_everything() {
        let config = sweep_config(64, 16, 32);
        let spec = quick_spec(vec![RecoveryMode::Plain], 4);
        let out = run_sweep(&spec, &config, 7).unwrap();
        assert_eq!(out.table.cells.len(), 2);
        for cell in &out.table.cells {
            assert_eq!(cell.hits, cell.trials, "Pd < 1 at {}", cell.point);
            assert_eq!(cell.pd(), 1.0);
        }
    }

    #[test]
    fn sweep_is_reproducible_across_thread_counts() {
        let config = sweep_config(32, 8, 16);
        let mut spec = quick_spec(vec![RecoveryMode::Plain], 12);
        spec.fixed = 20.0;
        spec.axis = SweepAxis::SirDb;

        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| run_sweep(&spec, &config, 99).unwrap())
        };
        let a = run(1);
        let b = run(3);
        assert_eq!(a.table, b.table);
        assert_eq!(a.records, b.records);
    }

    #[test]
    fn table_matches_records() {
        let config = sweep_config(32, 8, 16);
        let mut spec = quick_spec(vec![RecoveryMode::Plain, RecoveryMode::Joint], 8);
        spec.fixed = 15.0;
        let out = run_sweep(&spec, &config, 3).unwrap();
        for cell in &out.table.cells {
            let counted = out
                .records
                .iter()
                .filter(|r| r.point_value == cell.point && r.mode == cell.mode && r.hit)
                .count();
            assert_eq!(counted, cell.hits);
            let total = out
                .records
                .iter()
                .filter(|r| r.point_value == cell.point && r.mode == cell.mode)
                .count();
            assert_eq!(total, cell.trials);
        }
    }

    #[test]
    fn joint_and_stage1_share_the_same_solve() {
        let mut config = sweep_config(32, 8, 16);
        config.snr_db = 20.0;
        let mut spec = quick_spec(
            vec![RecoveryMode::Joint, RecoveryMode::TwoStage],
            6,
        );
        spec.grid = vec![0.0];
        spec.nbi_tones = 1;
        let out = run_sweep(&spec, &config, 11).unwrap();
        for trial in 0..6 {
            let joint = out
                .records
                .iter()
                .find(|r| r.trial_index == trial && r.mode == "joint")
                .unwrap();
            let two = out
                .records
                .iter()
                .find(|r| r.trial_index == trial && r.mode == "two_stage")
                .unwrap();
            assert_eq!(Some(joint.hit), two.stage1_hit);
        }
    }

    #[test]
    fn spec_validation_rejects_bad_grids() {
        let config = sweep_config(32, 8, 16);
        let mut spec = quick_spec(vec![RecoveryMode::Plain], 4);
        spec.grid = vec![];
        assert!(run_sweep(&spec, &config, 0).is_err());
        spec.grid = vec![0.0, 0.0];
        assert!(run_sweep(&spec, &config, 0).is_err());
        spec.grid = vec![5.0, 0.0];
        assert!(run_sweep(&spec, &config, 0).is_err());
        spec.grid = vec![0.0];
        spec.modes = vec![RecoveryMode::Plain, RecoveryMode::Plain];
        assert!(run_sweep(&spec, &config, 0).is_err());
        spec.modes = vec![];
        assert!(run_sweep(&spec, &config, 0).is_err());
    }

    #[test]
    fn demo_places_tap_and_bin() {
        let config = MimoConfig {
            n: 128,
            cp_len: 32,
            m: 43,
            tx_count: 2,
            rx_count: 2,
            seeds: Seeds::default(),
            snr_db: 20.0,
            nbi: Some(NbiConfig {
                tones: 1,
                bins: Some(vec![45]),
                sir_db: 0.0,
            }),
            omega_mode: OmegaMode::UniformRandom,
        };
        let scene = Scene::new(
            vec![ScenePath {
                alpha: Complex64::new(1.0, 0.0),
                tau: 3.0,
            }],
            128,
            32,
        )
        .unwrap();
        let bundle = demo_single_target(&config, &scene).unwrap();
        assert_eq!(bundle.true_tap, 3);
        assert_eq!(bundle.true_bins, vec![45]);
        assert_eq!(bundle.dominant_tap, Some(3));
        assert_eq!(bundle.dominant_bin, Some(45));
        assert_eq!(bundle.observation.len(), 43);
    }

    #[test]
    fn demo_rejects_multi_target_scenes() {
        let config = sweep_config(64, 16, 24);
        let scene = Scene::new(
            vec![
                ScenePath {
                    alpha: Complex64::new(1.0, 0.0),
                    tau: 3.0,
                },
                ScenePath {
                    alpha: Complex64::new(1.0, 0.0),
                    tau: 7.0,
                },
            ],
            64,
            16,
        )
        .unwrap();
        assert!(demo_single_target(&config, &scene).is_err());
    }
}
