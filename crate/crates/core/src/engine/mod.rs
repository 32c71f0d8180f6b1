//! Online protection loop: window scoring, detection, classification.

pub mod classify;
pub mod score;
pub mod stream;

pub use classify::{
    classify_step, instantaneous_flags, map_fault_type, persistence_vote, z_scores, FlagSet,
    PhaseFlags,
};
pub use score::{detect, score_transformed, score_window, GVector};
pub use stream::{
    run_stream, DetectionEvent, Engine, EngineOptions, EventLog, LabelState, WindowEvent,
};
