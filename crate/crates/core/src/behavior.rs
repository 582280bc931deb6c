//! Conversational attention analytics over per-frame yaw tracks.
//!
//! The setting is a three-way conversation: a subject faces two
//! interviewers across a table. Reference angles locate each interviewer
//! from the subject's seat; an attention region is the closed band of
//! half-width `region_half_width_deg` around each reference. Every frame
//! then classifies as attending interviewer 1, interviewer 2, or neutral,
//! and two event families are derived from the label sequence:
//!
//! * Contact: a maximal run of at least `contact_min_frames` consecutive
//!   frames on one interviewer;
//! * Exclusion: a sliding window (step 1) in which one interviewer gets at
//!   least `exclusion_quorum` frames while the other gets none. Overlapping
//!   firing windows merge into episodes.
//!
//! Role-conditioned tables and the two-sample statistics used to compare
//! groups of sessions live here too.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::angle::{bearing, Angle};
use crate::error::{Error, Result};

// ── Reference angles and frame classification ──────────────────────────

/// Interviewer directions seen from the subject, in subject-relative
/// degrees (positive left), plus their circular midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceAngles {
    pub to_i1: Angle,
    pub to_i2: Angle,
    pub midpoint: Angle,
}

/// Compute reference angles from centroid positions (mm, room frame).
/// `zero` is the subject's zero-yaw direction; pass `Angle::ZERO` to stay
/// in room-frame angles. Positions closer than 100 mm pairwise are
/// degenerate seating and rejected.
pub fn reference_angles(
    subject: (f64, f64),
    i1: (f64, f64),
    i2: (f64, f64),
    zero: Angle,
) -> Result<ReferenceAngles> {
    let pairs = [
        ("subject/interviewer 1", subject, i1),
        ("subject/interviewer 2", subject, i2),
        ("interviewer 1/interviewer 2", i1, i2),
    ];
    for (what, a, b) in pairs {
        let d = (a.0 - b.0).hypot(a.1 - b.1);
        if d <= 100.0 {
            return Err(Error::DegenerateGeometry(format!(
                "{what} centroids only {d:.1} mm apart"
            )));
        }
    }
    let to_i1 = bearing(subject, i1)?.rotated(-zero.degrees());
    let to_i2 = bearing(subject, i2)?.rotated(-zero.degrees());
    let midpoint = Angle::circular_mean(&[to_i1, to_i2]);
    Ok(ReferenceAngles {
        to_i1,
        to_i2,
        midpoint,
    })
}

/// Attention label for one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    I1,
    I2,
    Neutral,
}

impl Region {
    fn other(self) -> Region {
        match self {
            Region::I1 => Region::I2,
            Region::I2 => Region::I1,
            Region::Neutral => Region::Neutral,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionFrame {
    pub t: f64,
    pub region: Region,
}

/// Classify per-frame yaw against the reference angles. Regions are closed
/// intervals, so a yaw exactly on the boundary counts as the interviewer.
/// Overlapping regions (references at most `2 * half_width` apart) are a
/// configuration error: every frame would be ambiguous.
pub fn classify_frames(
    yaws: &[(f64, Angle)],
    refs: &ReferenceAngles,
    half_width: f64,
) -> Result<Vec<RegionFrame>> {
    if refs.to_i1.abs_diff(refs.to_i2) <= 2.0 * half_width {
        return Err(Error::OverlappingRegions {
            a: refs.to_i1.degrees(),
            b: refs.to_i2.degrees(),
            half_width,
        });
    }
    Ok(yaws
        .iter()
        .map(|&(t, yaw)| {
            let region = if yaw.abs_diff(refs.to_i1) <= half_width {
                Region::I1
            } else if yaw.abs_diff(refs.to_i2) <= half_width {
                Region::I2
            } else {
                Region::Neutral
            };
            RegionFrame { t, region }
        })
        .collect())
}

// ── Contact events ─────────────────────────────────────────────────────

/// A maximal run of consecutive frames attending one interviewer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactEvent {
    pub target: Region,
    /// Inclusive frame index range.
    pub start: usize,
    pub end: usize,
    pub start_t: f64,
    pub end_t: f64,
}

impl ContactEvent {
    pub fn frames(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn duration(&self) -> f64 {
        self.end_t - self.start_t
    }
}

/// Find Contact events: maximal runs of one interviewer label with at
/// least `min_frames` frames. Shorter runs are glances and ignored.
pub fn detect_contacts(seq: &[RegionFrame], min_frames: usize) -> Result<Vec<ContactEvent>> {
    if seq.len() < min_frames {
        return Err(Error::TooFewFrames {
            got: seq.len(),
            need: min_frames,
        });
    }
    let mut events = Vec::new();
    let mut run_start: Option<(usize, Region)> = None;
    for i in 0..=seq.len() {
        let label = seq.get(i).map(|f| f.region);
        match (run_start, label) {
            (Some((s, r)), Some(l)) if l == r => {
                let _ = (s, r); // run continues
            }
            (prev, l) => {
                if let Some((s, r)) = prev {
                    let end = i - 1;
                    if r != Region::Neutral && end - s + 1 >= min_frames {
                        events.push(ContactEvent {
                            target: r,
                            start: s,
                            end,
                            start_t: seq[s].t,
                            end_t: seq[end].t,
                        });
                    }
                }
                run_start = l.map(|l| (i, l));
            }
        }
    }
    Ok(events)
}

/// Aggregate Contact statistics for one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactSummary {
    pub count: usize,
    pub mean_duration_s: f64,
    pub max_duration_s: f64,
    pub per_minute: f64,
    /// Share of session time inside Contact events, in percent.
    pub total_contact_pct: f64,
    /// Mean length of the non-contact gaps, session edges included (a
    /// session starting or ending mid-event contributes a zero gap).
    pub mean_gap_s: f64,
    pub session_seconds: f64,
}

pub fn summarize_contacts(seq: &[RegionFrame], events: &[ContactEvent]) -> ContactSummary {
    let span = match (seq.first(), seq.last()) {
        (Some(a), Some(b)) => b.t - a.t,
        _ => 0.0,
    };
    let minutes = span / 60.0;
    let total: f64 = events.iter().map(ContactEvent::duration).sum();
    let mut gaps = Vec::with_capacity(events.len() + 1);
    let mut cursor = seq.first().map_or(0.0, |f| f.t);
    for e in events {
        gaps.push(e.start_t - cursor);
        cursor = e.end_t;
    }
    gaps.push(seq.last().map_or(0.0, |f| f.t) - cursor);
    ContactSummary {
        count: events.len(),
        mean_duration_s: if events.is_empty() {
            0.0
        } else {
            total / events.len() as f64
        },
        max_duration_s: events.iter().map(ContactEvent::duration).fold(0.0, f64::max),
        per_minute: if minutes > 0.0 {
            events.len() as f64 / minutes
        } else {
            0.0
        },
        total_contact_pct: if span > 0.0 { 100.0 * total / span } else { 0.0 },
        mean_gap_s: gaps.iter().sum::<f64>() / gaps.len() as f64,
        session_seconds: span,
    }
}

// ── Exclusion events ───────────────────────────────────────────────────

/// An episode during which one interviewer is shut out: windows fired
/// where the other interviewer held at least the quorum of frames and the
/// excluded one had none. Overlapping firing windows are merged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExclusionEvent {
    pub excluded: Region,
    /// Inclusive frame index range covered by the merged windows.
    pub start: usize,
    pub end: usize,
    pub start_t: f64,
    pub end_t: f64,
}

impl ExclusionEvent {
    pub fn duration(&self) -> f64 {
        self.end_t - self.start_t
    }
}

/// Detect Exclusion episodes with a length-`window` sliding window
/// (step 1). A window fires against party P when the other interviewer has
/// at least `quorum` frames in it and P has none. Sequences shorter than
/// the window yield no events. Episodes for the same party never overlap;
/// back-to-back windows that share no frame stay separate episodes.
pub fn detect_exclusions(
    seq: &[RegionFrame],
    window: usize,
    quorum: usize,
) -> Result<Vec<ExclusionEvent>> {
    if window == 0 || quorum > window {
        return Err(Error::Config(format!(
            "exclusion window {window} and quorum {quorum} are inconsistent"
        )));
    }
    let mut events = Vec::new();
    if seq.len() < window {
        return Ok(events);
    }

    // Rolling counts of each interviewer label in the current window.
    let count = |r: Region, lo: usize, hi: usize| {
        seq[lo..hi].iter().filter(|f| f.region == r).count()
    };
    let mut n1 = count(Region::I1, 0, window);
    let mut n2 = count(Region::I2, 0, window);

    let mut fired: Vec<(Region, usize)> = Vec::new();
    let starts = seq.len() - window + 1;
    for s in 0..starts {
        if s > 0 {
            let out = seq[s - 1].region;
            let inn = seq[s + window - 1].region;
            match out {
                Region::I1 => n1 -= 1,
                Region::I2 => n2 -= 1,
                Region::Neutral => {}
            }
            match inn {
                Region::I1 => n1 += 1,
                Region::I2 => n2 += 1,
                Region::Neutral => {}
            }
        }
        if n2 >= quorum && n1 == 0 {
            fired.push((Region::I1, s));
        }
        if n1 >= quorum && n2 == 0 {
            fired.push((Region::I2, s));
        }
    }

    for party in [Region::I1, Region::I2] {
        let mut open: Option<(usize, usize)> = None;
        for &(p, s) in fired.iter().filter(|(p, _)| *p == party) {
            debug_assert_eq!(p, party);
            let (lo, hi) = (s, s + window - 1);
            match open {
                Some((a, b)) if lo <= b => open = Some((a, hi.max(b))),
                Some((a, b)) => {
                    events.push(make_exclusion(seq, party, a, b));
                    open = Some((lo, hi));
                    let _ = a;
                }
                None => open = Some((lo, hi)),
            }
        }
        if let Some((a, b)) = open {
            events.push(make_exclusion(seq, party, a, b));
        }
    }
    let party_rank = |r: Region| match r {
        Region::I1 => 0u8,
        Region::I2 => 1,
        Region::Neutral => 2,
    };
    events.sort_by_key(|e| (e.start, party_rank(e.excluded)));
    Ok(events)
}

fn make_exclusion(seq: &[RegionFrame], party: Region, start: usize, end: usize) -> ExclusionEvent {
    ExclusionEvent {
        excluded: party,
        start,
        end,
        start_t: seq[start].t,
        end_t: seq[end].t,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExclusionSummary {
    pub count: usize,
    pub max_duration_s: f64,
    pub per_minute: f64,
    /// Share of session time covered by the union of episode spans (both
    /// parties), in percent.
    pub total_exclusion_pct: f64,
    pub session_seconds: f64,
}

pub fn summarize_exclusions(seq: &[RegionFrame], events: &[ExclusionEvent]) -> ExclusionSummary {
    let span = match (seq.first(), seq.last()) {
        (Some(a), Some(b)) => b.t - a.t,
        _ => 0.0,
    };
    let minutes = span / 60.0;
    // Union of episode time spans across both parties.
    let mut spans: Vec<(f64, f64)> = events.iter().map(|e| (e.start_t, e.end_t)).collect();
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut union = 0.0;
    let mut open: Option<(f64, f64)> = None;
    for (lo, hi) in spans {
        match open {
            Some((a, b)) if lo <= b => open = Some((a, b.max(hi))),
            Some((a, b)) => {
                union += b - a;
                open = Some((lo, hi));
                let _ = a;
            }
            None => open = Some((lo, hi)),
        }
    }
    if let Some((a, b)) = open {
        union += b - a;
    }
    ExclusionSummary {
        count: events.len(),
        max_duration_s: events.iter().map(ExclusionEvent::duration).fold(0.0, f64::max),
        per_minute: if minutes > 0.0 {
            events.len() as f64 / minutes
        } else {
            0.0
        },
        total_exclusion_pct: if span > 0.0 { 100.0 * union / span } else { 0.0 },
        session_seconds: span,
    }
}

// ── Role-conditioned orientation tables ────────────────────────────────

/// Who is speaking in a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    Subject,
    I1,
    I2,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoleRecord {
    pub t: f64,
    pub speaker: Speaker,
}

/// Percentages for one table row; always sums to 100 within rounding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoleRow {
    /// While listening: % at the current speaker. While speaking: % at the
    /// interviewer who spoke last.
    pub at_active_pct: f64,
    pub neutral_pct: f64,
    pub at_other_pct: f64,
    pub n_frames: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleTables {
    pub listening: Option<RoleRow>,
    pub speaking: Option<RoleRow>,
    /// Frames with no matching role record.
    pub unknown_role_frames: usize,
    /// Subject-speaking frames before any interviewer had spoken.
    pub speaking_without_prior_frames: usize,
    /// Frames where nobody spoke.
    pub idle_frames: usize,
}

/// Cross the attention labels with a speaking-role timeline.
///
/// Role records pair with frames by timestamp (within 1e-6 s); frames
/// without a role are counted and excluded. "Listening" frames are those
/// where an interviewer speaks; "speaking" frames are the subject's, split
/// by the interviewer who spoke most recently.
pub fn role_distribution(seq: &[RegionFrame], roles: &[RoleRecord]) -> Result<RoleTables> {
    let mut li = [0usize; 3]; // at speaker, neutral, at other
    let mut sp = [0usize; 3]; // at last speaker, neutral, at other
    let mut unknown = 0usize;
    let mut without_prior = 0usize;
    let mut idle = 0usize;

    let mut last_iv: Option<Region> = None;
    let mut ri = 0usize;
    for frame in seq {
        while ri < roles.len() && roles[ri].t < frame.t - 1e-6 {
            // Keep the last-speaker state current across unmatched records.
            match roles[ri].speaker {
                Speaker::I1 => last_iv = Some(Region::I1),
                Speaker::I2 => last_iv = Some(Region::I2),
                _ => {}
            }
            ri += 1;
        }
        let role = match roles.get(ri) {
            Some(r) if (r.t - frame.t).abs() <= 1e-6 => {
                ri += 1;
                r.speaker
            }
            _ => {
                unknown += 1;
                continue;
            }
        };
        match role {
            Speaker::I1 | Speaker::I2 => {
                let speaker = if role == Speaker::I1 { Region::I1 } else { Region::I2 };
                let slot = if frame.region == speaker {
                    0
                } else if frame.region == Region::Neutral {
                    1
                } else {
                    2
                };
                li[slot] += 1;
                last_iv = Some(speaker);
            }
            Speaker::Subject => match last_iv {
                Some(last) => {
                    let slot = if frame.region == last {
                        0
                    } else if frame.region == Region::Neutral {
                        1
                    } else {
                        debug_assert_eq!(frame.region, last.other());
                        2
                    };
                    sp[slot] += 1;
                }
                None => without_prior += 1,
            },
            Speaker::None => idle += 1,
        }
    }

    let row = |c: [usize; 3]| {
        let n: usize = c.iter().sum();
        (n > 0).then(|| RoleRow {
            at_active_pct: 100.0 * c[0] as f64 / n as f64,
            neutral_pct: 100.0 * c[1] as f64 / n as f64,
            at_other_pct: 100.0 * c[2] as f64 / n as f64,
            n_frames: n,
        })
    };
    Ok(RoleTables {
        listening: row(li),
        speaking: row(sp),
        unknown_role_frames: unknown,
        speaking_without_prior_frames: without_prior,
        idle_frames: idle,
    })
}

// ── Group comparison ───────────────────────────────────────────────────

/// Which alternative hypothesis the p-value answers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    TwoSided,
    /// Mean of the first group greater.
    Greater,
    /// Mean of the first group smaller.
    Less,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupComparison {
    pub n_a: usize,
    pub n_b: usize,
    pub mean_a: f64,
    pub mean_b: f64,
    pub sd_a: f64,
    pub sd_b: f64,
    pub pooled_sd: f64,
    pub t: f64,
    pub df: f64,
    pub p: f64,
    pub cohens_d: f64,
    pub tail: Tail,
}

/// Pooled-variance two-sample t-test plus Cohen's d.
///
/// `d = (mean_a - mean_b) / pooled_sd`; the p-value comes from the
/// Student t distribution with `n_a + n_b - 2` degrees of freedom. Groups
/// need at least two values each, and a zero pooled variance (all values
/// identical) leaves both statistics undefined.
pub fn compare_groups(a: &[f64], b: &[f64], tail: Tail) -> Result<GroupComparison> {
    for g in [a, b] {
        if g.len() < 2 {
            return Err(Error::GroupTooSmall(g.len()));
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mean = |g: &[f64]| g.iter().sum::<f64>() / g.len() as f64;
    let (ma, mb) = (mean(a), mean(b));
    let ss = |g: &[f64], m: f64| g.iter().map(|x| (x - m) * (x - m)).sum::<f64>();
    let (ssa, ssb) = (ss(a, ma), ss(b, mb));
    let df = na + nb - 2.0;
    let pooled_var = (ssa + ssb) / df;
    if pooled_var <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let pooled_sd = pooled_var.sqrt();
    let t = (ma - mb) / (pooled_sd * (1.0 / na + 1.0 / nb).sqrt());
    let dist = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::Config(format!("t distribution: {e}")))?;
    let p = match tail {
        Tail::TwoSided => 2.0 * (1.0 - dist.cdf(t.abs())),
        Tail::Greater => 1.0 - dist.cdf(t),
        Tail::Less => dist.cdf(t),
    };
    Ok(GroupComparison {
        n_a: a.len(),
        n_b: b.len(),
        mean_a: ma,
        mean_b: mb,
        sd_a: (ssa / (na - 1.0)).sqrt(),
        sd_b: (ssb / (nb - 1.0)).sqrt(),
        pooled_sd,
        t,
        df,
        p,
        cohens_d: (ma - mb) / pooled_sd,
        tail,
    })
}
