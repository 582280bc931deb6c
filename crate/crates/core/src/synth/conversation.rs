//! Scripted three-person conversations.
//!
//! A conversation is driven by a list of segments, each holding a focus
//! instruction for the subject's gaze and the active speaker. From the
//! script this module derives the subject's frame-by-frame head yaw
//! (turn-rate limited between focus changes), the resulting attention
//! labels, and the Contact and Exclusion events those labels imply. The
//! events are computed here by deliberately naive scans, independent of
//! the detectors in [`crate::behavior`], so the two can be checked
//! against each other.
//!
//! Two focus styles matter:
//!
//! * [`Focus::Locked`] keeps the gaze glued to one target. A whole
//!   segment locked on one interviewer starves the other, so Exclusion
//!   windows fire nearly continuously.
//! * [`Focus::Engaged`] alternates a few frames on the target with brief
//!   returns to the midpoint. With the default 4-on / 2-off pattern every
//!   20-frame window holds at most 14 target frames, below the 15-frame
//!   quorum, so an engaged gaze produces Contacts but never Exclusions.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::angle::{bearing, Angle};
use crate::behavior::{
    ContactEvent, ExclusionEvent, ReferenceAngles, Region, RegionFrame, RoleRecord, Speaker,
};
use crate::config::{BehaviorConfig, SynthConfig};
use crate::error::{Error, Result};
use crate::types::{PointCloudFrame, SensorExtrinsics, SessionRecording};

use super::subject::{generate_subject_frame, mix_seed, SubjectParams};

/// Where the subject's gaze is aimed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    I1,
    I2,
    Midpoint,
}

/// How the subject's gaze behaves during a segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Focus {
    /// Stay on the target for the whole segment.
    Locked(Target),
    /// Alternate: a few frames on the target, a brief return to the
    /// midpoint, repeat.
    Engaged(Target),
}

/// One scripted stretch of conversation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub seconds: f64,
    pub focus: Focus,
    pub speaker: Speaker,
}

/// Script-level knobs, shared by the bare script generator and the full
/// cloud generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScriptConfig {
    /// Angular separation between the two interviewers as seen from the
    /// subject, degrees.
    pub separation_deg: f64,
    /// Maximum head turn rate, degrees per second.
    pub turn_rate_deg_s: f64,
    /// Engaged pattern: frames on target, then frames at the midpoint.
    pub engaged_on_frames: usize,
    pub engaged_off_frames: usize,
    pub fps: f64,
}

impl ScriptConfig {
    /// Interviewers 90 degrees apart (45 to each side).
    pub fn setup90() -> Self {
        ScriptConfig {
            separation_deg: 90.0,
            turn_rate_deg_s: 55.0,
            engaged_on_frames: 4,
            engaged_off_frames: 2,
            fps: 1.5,
        }
    }

    /// Interviewers 45 degrees apart (22.5 to each side).
    pub fn setup45() -> Self {
        ScriptConfig {
            separation_deg: 45.0,
            ..ScriptConfig::setup90()
        }
    }
}

/// A fully evaluated script: subject-relative yaw per frame plus the
/// attention labels and events that yaw implies.
#[derive(Debug, Clone)]
pub struct AttentionScript {
    /// Subject-relative references: interviewer 1 left, interviewer 2
    /// right, midpoint straight ahead.
    pub refs: ReferenceAngles,
    /// Subject-relative head yaw per frame.
    pub yaws: Vec<(f64, Angle)>,
    pub regions: Vec<RegionFrame>,
    pub roles: Vec<RoleRecord>,
    /// Expected events, computed by naive reference scans.
    pub contacts: Vec<ContactEvent>,
    pub exclusions: Vec<ExclusionEvent>,
}

/// Evaluate a script into yaw, labels and expected events.
pub fn attention_script(
    segments: &[Segment],
    sc: &ScriptConfig,
    bc: &BehaviorConfig,
) -> Result<AttentionScript> {
    let half = sc.separation_deg / 2.0;
    if sc.separation_deg <= 2.0 * bc.region_half_width_deg {
        return Err(Error::OverlappingRegions {
            a: half,
            b: -half,
            half_width: bc.region_half_width_deg,
        });
    }
    let refs = ReferenceAngles {
        to_i1: Angle::from_degrees(half),
        to_i2: Angle::from_degrees(-half),
        midpoint: Angle::ZERO,
    };
    let target_angle = |t: Target| match t {
        Target::I1 => refs.to_i1,
        Target::I2 => refs.to_i2,
        Target::Midpoint => refs.midpoint,
    };
    let max_step = sc.turn_rate_deg_s / sc.fps;

    let mut yaws: Vec<(f64, Angle)> = Vec::new();
    let mut roles: Vec<RoleRecord> = Vec::new();
    let mut yaw = refs.midpoint;
    let mut frame = 0usize;
    let cycle = sc.engaged_on_frames + sc.engaged_off_frames;
    for seg in segments {
        let n = (seg.seconds * sc.fps).round() as usize;
        for k in 0..n {
            let desired = match seg.focus {
                Focus::Locked(t) => target_angle(t),
                Focus::Engaged(t) => {
                    if cycle == 0 || k % cycle < sc.engaged_on_frames {
                        target_angle(t)
                    } else {
                        refs.midpoint
                    }
                }
            };
            let d = desired.signed_diff(yaw).clamp(-max_step, max_step);
            yaw = yaw.rotated(d);
            let t = frame as f64 / sc.fps;
            yaws.push((t, yaw));
            roles.push(RoleRecord {
                t,
                speaker: seg.speaker,
            });
            frame += 1;
        }
    }
    if yaws.is_empty() {
        return Err(Error::TooFewFrames { got: 0, need: 1 });
    }

    let regions: Vec<RegionFrame> = yaws
        .iter()
        .map(|&(t, y)| {
            let region = if y.abs_diff(refs.to_i1) <= bc.region_half_width_deg {
                Region::I1
            } else if y.abs_diff(refs.to_i2) <= bc.region_half_width_deg {
                Region::I2
            } else {
                Region::Neutral
            };
            RegionFrame { t, region }
        })
        .collect();

    let contacts = naive_contacts(&regions, bc.contact_min_frames);
    let exclusions = naive_exclusions(&regions, bc.exclusion_window, bc.exclusion_quorum);
    Ok(AttentionScript {
        refs,
        yaws,
        regions,
        roles,
        contacts,
        exclusions,
    })
}

/// Reference Contact scan: for every run start, walk to the run's end.
/// Quadratic and obvious on purpose.
fn naive_contacts(seq: &[RegionFrame], min_frames: usize) -> Vec<ContactEvent> {
    let mut events = Vec::new();
    let n = seq.len();
    for i in 0..n {
        let label = seq[i].region;
        if label == Region::Neutral {
            continue;
        }
        if i > 0 && seq[i - 1].region == label {
            continue; // not a run start
        }
        let mut j = i;
        while j + 1 < n && seq[j + 1].region == label {
            j += 1;
        }
        if j - i + 1 >= min_frames {
            events.push(ContactEvent {
                target: label,
                start: i,
                end: j,
                start_t: seq[i].t,
                end_t: seq[j].t,
            });
        }
    }
    events
}

/// Reference Exclusion scan: recount every window from scratch, then
/// merge overlapping fired windows by repeated pairwise merging until a
/// fixed point.
fn naive_exclusions(seq: &[RegionFrame], window: usize, quorum: usize) -> Vec<ExclusionEvent> {
    let n = seq.len();
    let mut events = Vec::new();
    if window == 0 || n < window {
        return events;
    }
    for (excluded, other) in [(Region::I1, Region::I2), (Region::I2, Region::I1)] {
        let mut intervals: Vec<(usize, usize)> = Vec::new();
        for s in 0..=n - window {
            let w = &seq[s..s + window];
            let n_other = w.iter().filter(|f| f.region == other).count();
            let n_self = w.iter().filter(|f| f.region == excluded).count();
            if n_other >= quorum && n_self == 0 {
                intervals.push((s, s + window - 1));
            }
        }
        let mut changed = true;
        while changed {
            changed = false;
            'scan: for i in 0..intervals.len() {
                for j in i + 1..intervals.len() {
                    let (a, b) = (intervals[i], intervals[j]);
                    if a.0 <= b.1 && b.0 <= a.1 {
                        intervals[i] = (a.0.min(b.0), a.1.max(b.1));
                        intervals.remove(j);
                        changed = true;
                        break 'scan;
                    }
                }
            }
        }
        for (s, e) in intervals {
            events.push(ExclusionEvent {
                excluded,
                start: s,
                end: e,
                start_t: seq[s].t,
                end_t: seq[e].t,
            });
        }
    }
    let party_rank = |r: Region| match r {
        Region::I1 => 0u8,
        Region::I2 => 1,
        Region::Neutral => 2,
    };
    events.sort_by_key(|e| (e.start, party_rank(e.excluded)));
    events
}

// ── Full conversations with point clouds ───────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConversationConfig {
    pub script: ScriptConfig,
    /// Subject-to-interviewer distance, mm.
    pub interviewer_distance_mm: f64,
    /// Point density for all three people (1.0 = full resolution).
    pub density: f64,
}

impl ConversationConfig {
    pub fn setup90() -> Self {
        ConversationConfig {
            script: ScriptConfig::setup90(),
            interviewer_distance_mm: 1600.0,
            density: 0.35,
        }
    }

    pub fn setup45() -> Self {
        ConversationConfig {
            script: ScriptConfig::setup45(),
            ..ConversationConfig::setup90()
        }
    }
}

/// A generated conversation: the recorded session plus every ground-truth
/// quantity the analysis stage should recover.
#[derive(Debug, Clone)]
pub struct Conversation {
    pub session: SessionRecording,
    pub subject_id: String,
    pub i1_id: String,
    pub i2_id: String,
    /// Torso axis positions, mm.
    pub subject_pos: (f64, f64),
    pub i1_pos: (f64, f64),
    pub i2_pos: (f64, f64),
    /// The subject's body yaw, fixed for the whole session.
    pub subject_body_yaw: Angle,
    /// Script truth in the subject-relative frame.
    pub script: AttentionScript,
    /// The subject's absolute head yaw per frame (room frame).
    pub true_room_yaws: Vec<(f64, Angle)>,
}

/// Generate a conversation session with full point clouds.
///
/// The subject sits at (0, -800) facing the table centre (+y); the
/// interviewers sit across the table at the configured angular
/// separation, facing the subject. All three bodies hold still while the
/// subject's head follows the script.
pub fn generate_conversation(
    segments: &[Segment],
    cc: &ConversationConfig,
    synth: &SynthConfig,
    bc: &BehaviorConfig,
    seed: u64,
) -> Result<Conversation> {
    let sc = ScriptConfig {
        fps: synth.fps,
        ..cc.script
    };
    let script = attention_script(segments, &sc, bc)?;

    let subject_pos = (0.0, -800.0);
    let body_yaw = Angle::from_degrees(90.0);
    let half = cc.script.separation_deg / 2.0;
    let place = |bearing_deg: f64| {
        let (dx, dy) = Angle::from_degrees(bearing_deg).direction();
        (
            subject_pos.0 + cc.interviewer_distance_mm * dx,
            subject_pos.1 + cc.interviewer_distance_mm * dy,
        )
    };
    let i1_pos = place(90.0 + half);
    let i2_pos = place(90.0 - half);

    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 7));
    let mut person = |id: &str, pos: (f64, f64), facing: Angle| -> SubjectParams {
        SubjectParams {
            z_head: rng.random_range(1180.0..1320.0),
            shoulder_half_width: rng.random_range(200.0..235.0),
            chest_half_depth: rng.random_range(100.0..125.0),
            head_radius: rng.random_range(88.0..104.0),
            body_yaw: facing,
            head_yaw: facing,
            noise_sigma: synth.noise_sigma_mm,
            outlier_fraction: synth.outlier_fraction,
            visibility_culling: synth.visibility_culling,
            density: cc.density,
            ..SubjectParams::seated(id, pos, 0)
        }
    };
    let subject_base = person("S", subject_pos, body_yaw);
    let i1_base = person("I1", i1_pos, bearing(i1_pos, subject_pos)?);
    let i2_base = person("I2", i2_pos, bearing(i2_pos, subject_pos)?);

    let mut frames = Vec::with_capacity(script.yaws.len());
    let mut true_room_yaws = Vec::with_capacity(script.yaws.len());
    for (i, &(t, rel_yaw)) in script.yaws.iter().enumerate() {
        let room_yaw = rel_yaw.rotated(body_yaw.degrees());
        let mut points = Vec::new();
        let mut detections = Vec::new();
        for (pi, base) in [&subject_base, &i1_base, &i2_base].into_iter().enumerate() {
            let params = SubjectParams {
                head_yaw: if pi == 0 { room_yaw } else { base.head_yaw },
                seed: mix_seed(seed, ((pi as u64 + 1) << 40) | i as u64),
                ..base.clone()
            };
            let f = generate_subject_frame(&params)?;
            points.extend(f.points);
            detections.push(f.detection);
        }
        frames.push(PointCloudFrame {
            t,
            points,
            detections,
        });
        true_room_yaws.push((t, room_yaw));
    }

    Ok(Conversation {
        session: SessionRecording {
            sensors: vec![SensorExtrinsics::identity("room")],
            frames,
        },
        subject_id: "S".into(),
        i1_id: "I1".into(),
        i2_id: "I2".into(),
        subject_pos,
        i1_pos,
        i2_pos,
        subject_body_yaw: body_yaw,
        script,
        true_room_yaws,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior;

    fn bc() -> BehaviorConfig {
        BehaviorConfig::default()
    }

    #[test]
    fn locked_session_excludes_the_other_interviewer() {
        let segments = [Segment {
            seconds: 40.0,
            focus: Focus::Locked(Target::I1),
            speaker: Speaker::I1,
        }];
        let s = attention_script(&segments, &ScriptConfig::setup90(), &bc()).unwrap();
        assert_eq!(s.yaws.len(), 60);
        // The first step already lands inside the region (36.67 of the 45
        // degrees), so every frame counts as interviewer 1.
        assert!(s.regions.iter().all(|f| f.region == Region::I1));
        assert_eq!(s.contacts.len(), 1);
        assert_eq!(s.contacts[0].frames(), 60);
        assert_eq!(s.exclusions.len(), 1);
        let e = s.exclusions[0];
        assert_eq!(e.excluded, Region::I2);
        assert_eq!((e.start, e.end), (0, 59));
    }

    #[test]
    fn engaged_session_makes_contacts_but_no_exclusions() {
        let segments = [Segment {
            seconds: 40.0,
            focus: Focus::Engaged(Target::I1),
            speaker: Speaker::I1,
        }];
        let s = attention_script(&segments, &ScriptConfig::setup90(), &bc()).unwrap();
        // 60 frames in 6-frame cycles: 4 on target, 2 neutral.
        let labels: Vec<Region> = s.regions.iter().map(|f| f.region).collect();
        for (i, &l) in labels.iter().enumerate() {
            let expect = if i % 6 < 4 { Region::I1 } else { Region::Neutral };
            assert_eq!(l, expect, "frame {i}");
        }
        assert_eq!(s.contacts.len(), 10);
        assert!(s.contacts.iter().all(|c| c.frames() == 4));
        assert!(s.exclusions.is_empty(), "engaged gaze must not exclude");
    }

    #[test]
    fn engaged_pattern_survives_narrow_separation() {
        let segments = [Segment {
            seconds: 20.0,
            focus: Focus::Engaged(Target::I2),
            speaker: Speaker::I2,
        }];
        let s = attention_script(&segments, &ScriptConfig::setup45(), &bc()).unwrap();
        let on: usize = s.regions.iter().filter(|f| f.region == Region::I2).count();
        assert_eq!(on, 20); // 30 frames, 4 of every 6 on target
        assert!(s.exclusions.is_empty());
    }

    #[test]
    fn oracles_agree_with_detectors_on_a_mixed_script() {
        let segments = [
            Segment {
                seconds: 12.0,
                focus: Focus::Engaged(Target::I1),
                speaker: Speaker::I1,
            },
            Segment {
                seconds: 20.0,
                focus: Focus::Locked(Target::I2),
                speaker: Speaker::I2,
            },
            Segment {
                seconds: 8.0,
                focus: Focus::Locked(Target::Midpoint),
                speaker: Speaker::Subject,
            },
            Segment {
                seconds: 16.0,
                focus: Focus::Engaged(Target::I2),
                speaker: Speaker::I2,
            },
        ];
        let cfg = bc();
        let s = attention_script(&segments, &ScriptConfig::setup90(), &cfg).unwrap();
        let contacts = behavior::detect_contacts(&s.regions, cfg.contact_min_frames).unwrap();
        assert_eq!(contacts, s.contacts);
        let exclusions =
            behavior::detect_exclusions(&s.regions, cfg.exclusion_window, cfg.exclusion_quorum)
                .unwrap();
        assert_eq!(exclusions, s.exclusions);
    }

    #[test]
    fn narrow_half_width_rejects_overlapping_setup() {
        let segments = [Segment {
            seconds: 10.0,
            focus: Focus::Locked(Target::I1),
            speaker: Speaker::I1,
        }];
        let sc = ScriptConfig {
            separation_deg: 28.0,
            ..ScriptConfig::setup90()
        };
        assert!(matches!(
            attention_script(&segments, &sc, &bc()),
            Err(Error::OverlappingRegions { .. })
        ));
    }

    #[test]
    fn empty_script_is_an_error() {
        assert!(matches!(
            attention_script(&[], &ScriptConfig::setup90(), &bc()),
            Err(Error::TooFewFrames { .. })
        ));
    }

    #[test]
    fn conversation_builds_three_person_frames() {
        let segments = [Segment {
            seconds: 6.0,
            focus: Focus::Locked(Target::I1),
            speaker: Speaker::I1,
        }];
        let conv = generate_conversation(
            &segments,
            &ConversationConfig {
                density: 0.25,
                ..ConversationConfig::setup90()
            },
            &SynthConfig::default(),
            &bc(),
            17,
        )
        .unwrap();
        assert_eq!(conv.session.frames.len(), 9);
        for f in &conv.session.frames {
            assert_eq!(f.detections.len(), 3);
            assert!(f.points.len() > 1000);
        }
        let ids = conv.session.subject_ids();
        assert!(ids.contains(&"S".to_string()));
        assert!(ids.contains(&"I1".to_string()));
        assert!(ids.contains(&"I2".to_string()));
        // Interviewer bearings from the subject, in room angles.
        let b1 = bearing(conv.subject_pos, conv.i1_pos).unwrap();
        let b2 = bearing(conv.subject_pos, conv.i2_pos).unwrap();
        assert!((b1.degrees() - 135.0).abs() < 1e-9);
        assert!((b2.degrees() - 45.0).abs() < 1e-9);
        // Relative script yaw plus body yaw gives the room yaw.
        for (i, &(_, room)) in conv.true_room_yaws.iter().enumerate() {
            let rel = conv.script.yaws[i].1;
            assert!((rel.rotated(90.0).signed_diff(room)).abs() < 1e-9);
        }
        // Frames differ between consecutive time steps (no stuck sensor).
        assert!(!conv.session.frames[0].same_points(&conv.session.frames[1]));
    }

    #[test]
    fn conversation_is_deterministic() {
        let segments = [Segment {
            seconds: 4.0,
            focus: Focus::Engaged(Target::I2),
            speaker: Speaker::I2,
        }];
        let cc = ConversationConfig {
            density: 0.2,
            ..ConversationConfig::setup90()
        };
        let a = generate_conversation(&segments, &cc, &SynthConfig::default(), &bc(), 5).unwrap();
        let b = generate_conversation(&segments, &cc, &SynthConfig::default(), &bc(), 5).unwrap();
        for (fa, fb) in a.session.frames.iter().zip(&b.session.frames) {
            assert!(fa.same_points(fb));
        }
    }
}
