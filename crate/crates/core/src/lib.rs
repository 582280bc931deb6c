//! Body and head orientation from low-resolution overhead LiDAR.
//!
//! The crate takes stitched point-cloud sessions of seated people recorded
//! by privacy-preserving ceiling sensors (a few thousand points per person,
//! centimetre-scale detail) and recovers, per frame:
//!
//! * body yaw, geometrically, from a direct ellipse fit of the projected
//!   upper body and a front/back disambiguation using the head cloud;
//! * head yaw, with a learned regressor (random-forest feature selection
//!   feeding an ensemble of small neural networks) over a fixed geometric
//!   feature schema;
//! * conversational attention statistics built on those yaw tracks:
//!   attention regions around each interviewer, Contact and Exclusion
//!   events, role-conditioned orientation tables, and group comparisons.
//!
//! A deterministic synthetic generator ([`synth`]) stands in for recordings
//! so the whole pipeline is testable end to end; command-line plumbing
//! lives in the `orientcloud` binary.
//!
//! Conventions used throughout: millimetres, room frame with z up; yaw in
//! degrees in `[-180, 180)` with 0 along +x and counter-clockwise positive
//! (see [`angle`]); subject-relative angles are positive to the subject's
//! left.

pub mod angle;
pub mod behavior;
pub mod config;
pub mod error;
pub mod features;
pub mod geometry;
pub mod learn;
pub mod pipeline;
pub mod preprocess;
pub mod report;
mod seeding;
pub mod session;
pub mod synth;
pub mod types;

pub use angle::{bearing, Angle};
pub use config::RunConfig;
pub use error::{Error, ErrorKind, Result};
pub use types::{Point3, PointCloudFrame, SensorExtrinsics, SessionRecording, SubjectDetection};
