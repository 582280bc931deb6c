//! Synthetic data generation.
//!
//! Everything the pipeline consumes can be fabricated here with known
//! ground truth: single labelled frames, the multi-subject yaw benchmark,
//! and scripted three-person conversations whose expected Contact and
//! Exclusion events are computed by independent reference scans.

mod conversation;
mod subject;

pub use conversation::{
    attention_script, generate_conversation, AttentionScript, Conversation, ConversationConfig,
    Focus, ScriptConfig, Segment, Target,
};
pub use subject::{
    generate_benchmark, generate_subject_frame, ArmPose, BenchmarkSubject, FrameLabel,
    GroundTruth, SubjectParams, SyntheticFrame, SENSOR_POSITIONS,
};
