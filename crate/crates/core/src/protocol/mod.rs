//! End-to-end sessions: preparation, lane transmission, an optional
//! adversary, Bob's regrouping and measurement, and check-subset sifting.

mod config;
pub mod register;
mod relay;
mod session;

pub use config::SessionConfig;
pub use register::{ParticleId, Register, SparseBasis};
pub use relay::{multiparty_relay, RelayOutcome};
pub(crate) use session::regroup as session_regroup;
pub use session::{
    alice_prepare, bob_recover, detection_probability, run_session, run_session_threads,
    sift_and_check, AdversaryAction, CarrierUnit, ChannelLane, SessionTranscript, SiftOutcome,
    Transit, Verdict,
};
