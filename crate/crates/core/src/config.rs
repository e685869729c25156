//! Flat key-value run configuration and scene files.
//!
//! Config lines are `key = value` with `#` comments; nesting uses dotted
//! keys (`nbi.tones`). Scene files use one `path = <re>,<im>,<tau>` line per
//! propagation path. Both formats are line-oriented and order-insensitive,
//! except that a repeated key takes its last value.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::channel::{Scene, ScenePath};
use crate::error::{Error, Result};
use crate::mimo::{MimoConfig, NbiConfig, RecoveryMode, Seeds, RX_COUNT, TX_COUNT};
use crate::signal::OmegaMode;
use crate::sweep::{SweepAxis, SweepSpec};

/// Everything a CLI run needs, assembled from one config file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mimo: MimoConfig,
    pub modes: Vec<RecoveryMode>,
    pub sweep: Option<SweepSpec>,
    pub trials: usize,
    pub master_seed: u64,
    pub scene_path: Option<PathBuf>,
    pub targets: usize,
    pub tolerance_taps: usize,
}

const KNOWN_KEYS: &[&str] = &[
    "n",
    "cp_len",
    "m",
    "omega_mode",
    "snr_db",
    "sir_db",
    "targets",
    "nbi.tones",
    "nbi.bins",
    "nbi.sir_db",
    "mode",
    "sweep.axis",
    "sweep.grid",
    "trials",
    "master_seed",
    "scene",
    "tolerance_taps",
];

/// Splits `key = value` lines into a map; `#` starts a comment.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(idx) => &raw[..idx],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "line {}: expected 'key = value', got '{line}'",
                lineno + 1
            )));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    match value.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        _ => value
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("{key}: '{value}' is not a number"))),
    }
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .parse::<usize>()
        .map_err(|_| Error::Config(format!("{key}: '{value}' is not a nonnegative integer")))
}

fn parse_u64(key: &str, value: &str) -> Result<u64> {
    value
        .parse::<u64>()
        .map_err(|_| Error::Config(format!("{key}: '{value}' is not an unsigned integer")))
}

fn parse_list<T, F>(key: &str, value: &str, f: F) -> Result<Vec<T>>
where
    F: Fn(&str, &str) -> Result<T>,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| f(key, s))
        .collect()
}

/// Builds a [`RunConfig`] from config text, seeding all generators from
/// `master_seed` (overridable by a `master_seed` key in the file).
pub fn parse_run_config(text: &str, default_master_seed: u64) -> Result<RunConfig> {
    let map = parse_key_values(text)?;
    for key in map.keys() {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!("unknown config key '{key}'")));
        }
    }
    let get = |key: &str| map.get(key).map(String::as_str);

    let n = get("n").map_or(Ok(128), |v| parse_usize("n", v))?;
    let cp_len = get("cp_len").map_or(Ok((n / 4).max(1)), |v| parse_usize("cp_len", v))?;
    let m = get("m").map_or(Ok(n.div_ceil(3)), |v| parse_usize("m", v))?;
    let omega_mode = get("omega_mode")
        .map_or(Ok(OmegaMode::UniformRandom), str::parse::<OmegaMode>)?;
    let snr_db = get("snr_db").map_or(Ok(20.0), |v| parse_f64("snr_db", v))?;
    let sir_db = match (get("nbi.sir_db"), get("sir_db")) {
        (Some(v), _) => parse_f64("nbi.sir_db", v)?,
        (None, Some(v)) => parse_f64("sir_db", v)?,
        (None, None) => 0.0,
    };
    let targets = get("targets").map_or(Ok(1), |v| parse_usize("targets", v))?;
    let trials = get("trials").map_or(Ok(500), |v| parse_usize("trials", v))?;
    let master_seed = match get("master_seed") {
        Some(v) => parse_u64("master_seed", v)?,
        None => default_master_seed,
    };
    let tolerance_taps =
        get("tolerance_taps").map_or(Ok(1), |v| parse_usize("tolerance_taps", v))?;

    let bins = match get("nbi.bins") {
        None => None,
        Some(v) if v.eq_ignore_ascii_case("random") => None,
        Some(v) => Some(parse_list("nbi.bins", v, parse_usize)?),
    };
    let tones = match get("nbi.tones") {
        Some(v) => parse_usize("nbi.tones", v)?,
        None => bins.as_ref().map_or(0, Vec::len),
    };
    let nbi = if tones > 0 {
        Some(NbiConfig {
            tones,
            bins,
            sir_db,
        })
    } else {
        None
    };

    let modes = match get("mode") {
        Some(v) => parse_list("mode", v, |_, s| s.parse::<RecoveryMode>())?,
        None => vec![RecoveryMode::TwoStage],
    };
    if modes.is_empty() {
        return Err(Error::Config("mode list is empty".into()));
    }

    let mimo = MimoConfig {
        n,
        cp_len,
        m,
        tx_count: TX_COUNT,
        rx_count: RX_COUNT,
        seeds: seeds_from_master(master_seed),
        snr_db,
        nbi,
        omega_mode,
    };
    mimo.validate()?;

    let sweep = match (get("sweep.axis"), get("sweep.grid")) {
        (None, None) => None,
        (Some(axis), Some(grid)) => {
            let axis: SweepAxis = axis.parse()?;
            let grid = parse_list("sweep.grid", grid, parse_f64)?;
            let fixed = match axis {
                SweepAxis::SirDb => snr_db,
                SweepAxis::SnrDb => sir_db,
            };
            let spec = SweepSpec {
                axis,
                grid,
                fixed,
                trials_per_point: trials,
                modes: modes.clone(),
                targets,
                nbi_tones: tones,
                tolerance_taps,
            };
            spec.validate()?;
            Some(spec)
        }
        _ => {
            return Err(Error::Config(
                "sweep.axis and sweep.grid must be given together".into(),
            ))
        }
    };

    Ok(RunConfig {
        mimo,
        modes,
        sweep,
        trials,
        master_seed,
        scene_path: get("scene").map(PathBuf::from),
        targets,
        tolerance_taps,
    })
}

/// Loads and parses a config file, naming the path in any error.
pub fn load_run_config(path: &Path, default_master_seed: u64) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Config(format!("cannot read config file '{}': {e}", path.display()))
    })?;
    parse_run_config(&text, default_master_seed)
}

/// Deterministic per-purpose seeds derived from one master seed.
pub fn seeds_from_master(master: u64) -> Seeds {
    Seeds {
        waveform: master.wrapping_add(0x5741_5645),
        omega: master.wrapping_add(0x4f4d_4547),
        noise: [
            master.wrapping_add(0x4e4f_4931),
            master.wrapping_add(0x4e4f_4932),
        ],
        nbi: master.wrapping_add(0x4a41_4d4d),
        scene: master.wrapping_add(0x5343_4e45),
    }
}

/// Parses a scene file: `path = <re>,<im>,<tau>` per line.
pub fn parse_scene(text: &str, n: usize, cp_len: usize) -> Result<Scene> {
    let mut paths = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(idx) => &raw[..idx],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Scene(format!(
                "line {}: expected 'path = re,im,tau'",
                lineno + 1
            )));
        };
        if key.trim() != "path" {
            return Err(Error::Scene(format!(
                "line {}: unknown scene key '{}'",
                lineno + 1,
                key.trim()
            )));
        }
        let parts: Vec<&str> = value.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::Scene(format!(
                "line {}: expected three comma-separated numbers",
                lineno + 1
            )));
        }
        let re = parse_f64("path re", parts[0])?;
        let im = parse_f64("path im", parts[1])?;
        let tau = parse_f64("path tau", parts[2])?;
        paths.push(ScenePath {
            alpha: Complex64::new(re, im),
            tau,
        });
    }
    Scene::new(paths, n, cp_len)
}

/// Loads a scene file, naming the path in any error.
pub fn load_scene(path: &Path, n: usize, cp_len: usize) -> Result<Scene> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Scene(format!("cannot read scene file '{}': {e}", path.display()))
    })?;
    parse_scene(&text, n, cp_len)
}
