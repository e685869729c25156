//! Channel recovery for a sub-Nyquist MIMO UWB radar receiver.
//!
//! A 2x2 MIMO ultra-wideband radar probes the scene with cyclic-prefixed
//! pseudorandom waveforms and digitizes each receive chain far below the
//! Nyquist rate. Because the sub-sampled receive matrix is a row-restricted
//! circulant (a compressive-sensing measurement ensemble), the sparse
//! delay-domain channels can still be recovered by basis-pursuit denoising,
//! and narrowband interference can be estimated jointly on an augmented
//! Fourier dictionary or cancelled in a two-stage pass.
//!
//! The crate is organized around:
//! - [`signal`]: waveform framing, sampling patterns, and the implicit
//!   measurement operator (forward/adjoint via FFTs);
//! - [`channel`]: sparse scene description, fractional-delay tap leakage,
//!   and noise injection;
//! - [`solver`]: basis-pursuit denoising for complex data;
//! - [`nbi`]: narrowband interference synthesis, joint recovery, and
//!   two-stage cancellation;
//! - [`mimo`]: the 2x2 transmit/receive simulation and per-link recovery;
//! - [`analysis`]: restricted-isometry diagnostics;
//! - [`sweep`]: reproducible Monte Carlo detection-probability sweeps;
//! - [`config`], [`io`], [`plot`]: run configuration, file formats, and
//!   SVG rendering used by the command-line simulator.

pub mod analysis;
pub mod channel;
pub mod config;
pub mod error;
pub mod fft;
pub mod io;
pub mod mimo;
pub mod nbi;
pub mod plot;
pub mod signal;
pub mod solver;
pub mod sweep;

pub use analysis::{estimate_ric, ric_concentration_probe, RicEstimate, RicMethod, RicSummary};
pub use channel::{
    add_awgn, random_scene, sample_channel, sigma2_from_snr, toa_from_support, Scene, ScenePath,
    SparseChannel,
};
pub use config::{
    load_run_config, load_scene, parse_run_config, parse_scene, seeds_from_master, RunConfig,
};
pub use error::{Error, Result};
pub use io::{
    read_csr1, ric_csv, sweep_csv, write_csr1, write_ric_csv, write_sweep_csv, Csr1Record,
    FLAG_FREQUENCY_DOMAIN, FLAG_SUBSAMPLED,
};
pub use mimo::{
    detect_taps, detection_report, dominant_index, recover_mimo, simulate_receive,
    DetectionEntry, DetectionReport, MimoConfig, MimoEstimates, MimoSimulator, NbiConfig,
    ReceiveOutput, RecoveryEpsilons, RecoveryMode, Seeds, RX_COUNT, TX_COUNT,
};
pub use nbi::{
    cancel_nbi, joint_recover, random_tones, synthesize_nbi, two_stage_recover, NbiSignal,
    ToneSpec, TwoStageResult, STAGE2_EPSILON_FACTOR,
};
pub use solver::{
    epsilon_from_noise, solve_bpdn, solve_bpdn_with, BpdnProblem, BpdnSolution, SolverOptions,
    FEASIBILITY_SLACK,
};
pub use plot::{pd_panel, render_panels, render_pd_plot, Panel, PanelKind, Series};
pub use sweep::{
    demo_single_target, run_sweep, DemoBundle, PdCell, PdTable, SweepAxis, SweepOutcome,
    SweepSpec, TrialRecord,
};
pub use signal::{
    add_cyclic_prefix, circulant_convolve, compose_operator, cyclic_shift, generate_rademacher,
    partial_fourier_adjoint, subsample, GramSpectrum, MeasurementOperator, OmegaMode,
    SamplingPattern, WaveformFrame,
};
