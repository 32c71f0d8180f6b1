//! Synthetic two-terminal feeder: phasor-based load and fault currents,
//! converter current limiting, measurement noise and channel skew.

pub mod config;
pub mod io;
pub mod phasor;
pub mod scenario;

pub use config::{FaultSpec, FeederParams, Impedance, ScenarioConfig, SourceMode};
pub use io::{read_truth, read_waveform_csv, write_truth, write_waveform_csv};
pub use scenario::{
    apply_comm_delay, healthy_training_set, scenario_grid, simulate, simulate_scenario, GridSpec,
    GroundTruth, Scenario,
};
