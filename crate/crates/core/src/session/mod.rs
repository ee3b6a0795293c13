//! Forced-choice session engine: counterbalanced plans, the timed trial state machine
//! and the HTTP API consumed by the browser trial runner.

mod plan;
mod server;
mod state;

pub use plan::{build_plan, PhaseTimings, PlannedTrial, SessionPlan};
pub use server::{
    read_session_log, router, serve, ApiError, AppState, ConfigRef, CreateSession, NextTrial, SessionCreated, SessionHeader, TrialAck, TrialPost,
};
pub use state::{Event, Phase, ReportedTimings, SessionState, Status, TrialRecord, DEFAULT_REFRESH_HZ, TIMING_TOLERANCE_FRAMES};
