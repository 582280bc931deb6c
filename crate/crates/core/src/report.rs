//! File formats for pipeline outputs and command-line plumbing.
//!
//! Every table the tool writes goes through here: per-frame yaw tracks,
//! benchmark label files, elimination traces, cross-validation reports,
//! event tables. Floats are written in shortest round-trip form so
//! identical runs produce identical bytes; none of the writers embed
//! timestamps or wall-clock durations for the same reason.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::angle::Angle;
use crate::behavior::{
    ContactEvent, ContactSummary, ExclusionEvent, ExclusionSummary, Region, RoleRecord, Speaker,
};
use crate::error::{Error, Result};
use crate::learn::{LosoReport, RfeTrace};
use crate::synth::FrameLabel;

/// Shortest representation that parses back to the same f64, with a
/// trailing `.0` so integral values still read as floats.
pub(crate) fn fmt_f64(v: f64) -> String {
    // `{}` on f64 is the shortest round-trip form in Rust.
    let mut buf = format!("{v}");
    if !buf.contains('.') && !buf.contains('e') && !buf.contains("inf") && !buf.contains("NaN") {
        buf.push_str(".0");
    }
    buf
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Dataset(format!("csv: {e}"))
}

/// Serialize any value as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)
        .map_err(|e| Error::Dataset(format!("{}: {e}", path.display())))?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let f = BufReader::new(File::open(path)?);
    serde_json::from_reader(f).map_err(|e| Error::Dataset(format!("{}: {e}", path.display())))
}

// ── Benchmark labels ───────────────────────────────────────────────────

/// Write ground-truth labels for a set of benchmark subjects.
pub fn write_labels_csv(labels: &[(String, Vec<FrameLabel>)], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record([
        "subject_id",
        "frame",
        "t",
        "body_yaw_deg",
        "head_yaw_deg",
        "z_head_mm",
        "corrupted",
    ])
    .map_err(csv_err)?;
    for (subject, frames) in labels {
        for l in frames {
            w.write_record([
                subject.as_str(),
                &l.frame.to_string(),
                &fmt_f64(l.t),
                &fmt_f64(l.body_yaw_deg),
                &fmt_f64(l.head_yaw_deg),
                &fmt_f64(l.z_head_mm),
                if l.corrupted { "1" } else { "0" },
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a label file back, grouped by subject in file order.
pub fn read_labels_csv(path: &Path) -> Result<Vec<(String, Vec<FrameLabel>)>> {
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let mut out: Vec<(String, Vec<FrameLabel>)> = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != 7 {
            return Err(Error::Dataset(format!(
                "{}: line {}: expected 7 columns, got {}",
                path.display(),
                line + 2,
                rec.len()
            )));
        }
        let parse = |i: usize| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .map_err(|e| Error::Dataset(format!("{}: line {}: {e}", path.display(), line + 2)))
        };
        let label = FrameLabel {
            frame: rec[1]
                .parse()
                .map_err(|e| Error::Dataset(format!("{}: line {}: {e}", path.display(), line + 2)))?,
            t: parse(2)?,
            body_yaw_deg: parse(3)?,
            head_yaw_deg: parse(4)?,
            z_head_mm: parse(5)?,
            corrupted: &rec[6] == "1",
        };
        let subject = rec[0].to_string();
        match out.last_mut() {
            Some((s, frames)) if *s == subject => frames.push(label),
            _ => out.push((subject, vec![label])),
        }
    }
    Ok(out)
}

// ── Per-frame yaw tracks ───────────────────────────────────────────────

/// One output row of `fit-body` or `infer`: either estimates or the
/// reason the frame produced none.
#[derive(Debug, Clone, PartialEq)]
pub struct YawRow {
    pub frame: usize,
    pub t: f64,
    /// `ok`, or a short drop tag (`rejected:<reason>` / `failed`).
    pub status: String,
    pub body_yaw_deg: Option<f64>,
    pub head_yaw_deg: Option<f64>,
}

pub fn write_yaw_csv(rows: &[YawRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["frame", "t", "status", "body_yaw_deg", "head_yaw_deg"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.frame.to_string(),
            fmt_f64(r.t),
            r.status.clone(),
            r.body_yaw_deg.map(fmt_f64).unwrap_or_default(),
            r.head_yaw_deg.map(fmt_f64).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a yaw track for event analysis: `ok` rows with a head yaw become
/// `(t, yaw)` samples, everything else is skipped and counted.
pub fn read_yaw_csv(path: &Path) -> Result<(Vec<(f64, Angle)>, usize)> {
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let headers = r.headers().map_err(csv_err)?.clone();
    let idx = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Dataset(format!("{}: missing column {name:?}", path.display())))
    };
    let (ti, si, yi) = (idx("t")?, idx("status")?, idx("head_yaw_deg")?);
    let mut yaws = Vec::new();
    let mut skipped = 0usize;
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if &rec[si] != "ok" || rec[yi].is_empty() {
            skipped += 1;
            continue;
        }
        let parse = |i: usize| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .map_err(|e| Error::Dataset(format!("{}: line {}: {e}", path.display(), line + 2)))
        };
        yaws.push((parse(ti)?, Angle::from_degrees(parse(yi)?)));
    }
    Ok((yaws, skipped))
}

// ── Elimination traces ─────────────────────────────────────────────────

/// Full elimination path, one row per round. `names` are the column
/// names of the dataset the trace was computed on.
pub fn write_rfe_csv(trace: &RfeTrace, names: &[String], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["step", "n_features", "val_mae_deg", "dropped_index", "dropped_name", "optimal"])
        .map_err(csv_err)?;
    for (i, s) in trace.steps.iter().enumerate() {
        let dropped_name = s
            .dropped
            .and_then(|d| names.get(d))
            .cloned()
            .unwrap_or_default();
        w.write_record([
            i.to_string(),
            s.n_features().to_string(),
            fmt_f64(s.val_mae),
            s.dropped.map(|d| d.to_string()).unwrap_or_default(),
            dropped_name,
            ((i == trace.optimal_step) as u8).to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Plot-ready curve: feature count ascending against validation error.
pub fn write_mae_vs_features_csv(trace: &RfeTrace, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["n_features", "val_mae_deg"]).map_err(csv_err)?;
    for s in trace.steps.iter().rev() {
        w.write_record([s.n_features().to_string(), fmt_f64(s.val_mae)])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

// ── Cross-validation reports ───────────────────────────────────────────

/// Per-subject MAE table plus a trailing mean row.
pub fn write_loso_csv(report: &LosoReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["subject_id", "n_test", "n_features", "ensemble_size", "test_mae_deg"])
        .map_err(csv_err)?;
    for f in &report.folds {
        w.write_record([
            f.subject.clone(),
            f.n_test.to_string(),
            f.rfe.optimal().n_features().to_string(),
            f.ensemble.members.len().to_string(),
            fmt_f64(f.test_mae),
        ])
        .map_err(csv_err)?;
    }
    let total: usize = report.folds.iter().map(|f| f.n_test).sum();
    w.write_record([
        "mean".to_string(),
        total.to_string(),
        String::new(),
        String::new(),
        fmt_f64(report.overall_mae),
    ])
    .map_err(csv_err)?;
    w.flush()?;
    Ok(())
}

/// JSON form of the cross-validation report. Wall-clock time is
/// deliberately omitted so identical runs write identical bytes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LosoJson {
    pub overall_mae_deg: f64,
    pub folds: Vec<LosoFoldJson>,
    pub excluded_subjects: Vec<ExcludedSubjectJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LosoFoldJson {
    pub subject_id: String,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub n_features: usize,
    pub feature_indices: Vec<usize>,
    pub ensemble_members: Vec<usize>,
    pub ensemble_val_mae_deg: f64,
    pub test_mae_deg: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExcludedSubjectJson {
    pub subject_id: String,
    pub rows: usize,
}

pub fn loso_to_json(report: &LosoReport) -> LosoJson {
    LosoJson {
        overall_mae_deg: report.overall_mae,
        folds: report
            .folds
            .iter()
            .map(|f| LosoFoldJson {
                subject_id: f.subject.clone(),
                n_train: f.n_train,
                n_val: f.n_val,
                n_test: f.n_test,
                n_features: f.rfe.optimal().n_features(),
                feature_indices: f.rfe.optimal().feature_indices.clone(),
                ensemble_members: f.ensemble.members.clone(),
                ensemble_val_mae_deg: f.ensemble.val_mae,
                test_mae_deg: f.test_mae,
            })
            .collect(),
        excluded_subjects: report
            .excluded
            .iter()
            .map(|(subject_id, rows)| ExcludedSubjectJson {
                subject_id: subject_id.clone(),
                rows: *rows,
            })
            .collect(),
    }
}

// ── Event tables ───────────────────────────────────────────────────────

fn region_tag(r: Region) -> &'static str {
    match r {
        Region::I1 => "i1",
        Region::I2 => "i2",
        Region::Neutral => "neutral",
    }
}

pub fn write_contacts_csv(events: &[ContactEvent], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["target", "start_frame", "end_frame", "start_t", "end_t", "frames", "duration_s"])
        .map_err(csv_err)?;
    for e in events {
        w.write_record([
            region_tag(e.target).to_string(),
            e.start.to_string(),
            e.end.to_string(),
            fmt_f64(e.start_t),
            fmt_f64(e.end_t),
            e.frames().to_string(),
            fmt_f64(e.duration()),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_exclusions_csv(events: &[ExclusionEvent], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["excluded", "start_frame", "end_frame", "start_t", "end_t", "duration_s"])
        .map_err(csv_err)?;
    for e in events {
        w.write_record([
            region_tag(e.excluded).to_string(),
            e.start.to_string(),
            e.end.to_string(),
            fmt_f64(e.start_t),
            fmt_f64(e.end_t),
            fmt_f64(e.duration()),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Combined session-level event summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventSummaryJson {
    pub frames_analyzed: usize,
    pub frames_skipped: usize,
    pub contacts: ContactSummary,
    pub exclusions: ExclusionSummary,
}

// ── Speaking-role timelines ────────────────────────────────────────────

fn speaker_tag(s: Speaker) -> &'static str {
    match s {
        Speaker::Subject => "subject",
        Speaker::I1 => "i1",
        Speaker::I2 => "i2",
        Speaker::None => "none",
    }
}

pub fn write_speakers_csv(roles: &[RoleRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["t", "speaker"]).map_err(csv_err)?;
    for r in roles {
        w.write_record([fmt_f64(r.t), speaker_tag(r.speaker).to_string()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_speakers_csv(path: &Path) -> Result<Vec<RoleRecord>> {
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let bad = |what: &str| {
            Error::Dataset(format!("{}: line {}: {what}", path.display(), line + 2))
        };
        if rec.len() != 2 {
            return Err(bad("expected 2 columns"));
        }
        let t = rec[0].parse::<f64>().map_err(|e| bad(&e.to_string()))?;
        let speaker = match &rec[1] {
            "subject" => Speaker::Subject,
            "i1" => Speaker::I1,
            "i2" => Speaker::I2,
            "none" => Speaker::None,
            other => return Err(bad(&format!("unknown speaker {other:?}"))),
        };
        out.push(RoleRecord { t, speaker });
    }
    Ok(out)
}

// ── Session metrics for group comparison ───────────────────────────────

/// Read a `session_id,group,value` table and split the values by group
/// label. Exactly two distinct labels are required; the first label to
/// appear becomes group A.
pub fn read_metrics_csv(path: &Path) -> Result<(String, Vec<f64>, String, Vec<f64>)> {
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let mut groups: Vec<(String, Vec<f64>)> = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != 3 {
            return Err(Error::Dataset(format!(
                "{}: line {}: expected 3 columns (session_id,group,value)",
                path.display(),
                line + 2
            )));
        }
        let value = rec[2]
            .parse::<f64>()
            .map_err(|e| Error::Dataset(format!("{}: line {}: {e}", path.display(), line + 2)))?;
        let label = rec[1].to_string();
        match groups.iter_mut().find(|(g, _)| *g == label) {
            Some((_, vals)) => vals.push(value),
            None => groups.push((label, vec![value])),
        }
    }
    if groups.len() != 2 {
        return Err(Error::Dataset(format!(
            "{}: need exactly 2 group labels, found {}",
            path.display(),
            groups.len()
        )));
    }
    let (gb, vb) = groups.pop().expect("two groups");
    let (ga, va) = groups.pop().expect("two groups");
    Ok((ga, va, gb, vb))
}

// ── Seating plans ──────────────────────────────────────────────────────

/// Input file for event analysis: where everyone sits (mm, room frame)
/// and which way the subject's zero yaw points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeatingPlan {
    pub subject: (f64, f64),
    pub interviewer1: (f64, f64),
    pub interviewer2: (f64, f64),
    /// The yaw value (degrees, room frame) that means "straight ahead"
    /// for the analyzed yaw track. Use 0 for tracks already in room frame
    /// when the subject's zero is +x.
    pub subject_zero_deg: f64,
}

impl SeatingPlan {
    pub fn load(path: &Path) -> Result<SeatingPlan> {
        read_json(path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(self, path)
    }
}
