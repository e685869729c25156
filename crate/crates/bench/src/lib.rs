//! Shared fixtures for the pipeline benchmarks.

use num_complex::Complex64;

use csradar_core::channel::{Scene, ScenePath};
use csradar_core::mimo::{MimoConfig, MimoSimulator, NbiConfig, ReceiveOutput, Seeds};
use csradar_core::signal::OmegaMode;

/// Paper-scale receiver: n = 128, cp = 32, m = 43, one jammer tone at SIR 0.
pub fn desk_scale_simulator() -> MimoSimulator {
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
    MimoSimulator::new(config).expect("benchmark config is valid")
}

/// One three-target observation at the benchmark geometry.
pub fn received(sim: &MimoSimulator) -> ReceiveOutput {
    let n = sim.config().n;
    let cp = sim.config().cp_len;
    let scene = |taps: &[usize]| {
        Scene::new(
            taps.iter()
                .map(|&t| ScenePath {
                    alpha: Complex64::new(1.0, 0.0),
                    tau: t as f64,
                })
                .collect(),
            n,
            cp,
        )
        .expect("benchmark scene is valid")
    };
    let scenes = [
        scene(&[3, 11, 26]),
        scene(&[5]),
        scene(&[9, 17]),
        scene(&[2, 30]),
    ];
    sim.receive(&scenes).expect("benchmark receive succeeds")
}
