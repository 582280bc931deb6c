//! Session recording format: newline-delimited JSON, UTF-8, LF endings.
//!
//! Line 1 is a header object:
//!
//! ```json
//! {"format":"orient-cloud/1","units":"mm","sensors":[{"id":"s1","rotation":[[1,0,0],[0,1,0],[0,0,1]],"translation":[0,0,0]}]}
//! ```
//!
//! Every following line is one frame:
//!
//! ```json
//! {"t":0.0,"points":[[x,y,z],...],"detections":[{"id":"S1","cx":0.0,"cy":0.0,"z1":1250.0,"z2":1248.0}]}
//! ```
//!
//! Parsing is tolerant of bad frame lines: a malformed or schema-violating
//! line is skipped and reported with its line number, never silently
//! dropped. A bad header or a session with no valid frames is a hard error.
//! Serialization uses the shortest round-tripping float representation, so
//! parse(serialize(s)) reproduces every coordinate bit for bit.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Point3, PointCloudFrame, SensorExtrinsics, SessionRecording, SubjectDetection};

pub const FORMAT_TAG: &str = "orient-cloud/1";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    units: String,
    sensors: Vec<SensorExtrinsics>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FrameLine {
    t: f64,
    points: Vec<[f64; 3]>,
    #[serde(default)]
    detections: Vec<SubjectDetection>,
}

/// One skipped input line and why it was skipped. Line numbers are 1-based.
#[derive(Debug, Clone, Serialize)]
pub struct RejectedLine {
    pub line: usize,
    pub reason: String,
}

/// Side channel of everything the parser skipped.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ParseReport {
    pub rejected: Vec<RejectedLine>,
}

/// Parse a session from a reader. Returns the recording plus a report of
/// rejected lines.
pub fn parse_session<R: BufRead>(reader: R) -> Result<(SessionRecording, ParseReport)> {
    let mut lines = reader.lines();
    let header_line = match lines.next() {
        Some(l) => l?,
        None => return Err(Error::EmptySession),
    };
    let header: Header = serde_json::from_str(&header_line).map_err(|e| Error::Header {
        line: 1,
        reason: e.to_string(),
    })?;
    if header.format != FORMAT_TAG {
        return Err(Error::Header {
            line: 1,
            reason: format!("unsupported format {:?}, expected {FORMAT_TAG:?}", header.format),
        });
    }
    if header.units != "mm" {
        return Err(Error::Header {
            line: 1,
            reason: format!("unsupported units {:?}, only \"mm\" is accepted", header.units),
        });
    }
    for s in &header.sensors {
        s.validate().map_err(|e| Error::Header {
            line: 1,
            reason: e.to_string(),
        })?;
    }

    let mut frames: Vec<PointCloudFrame> = Vec::new();
    let mut report = ParseReport::default();
    let reject = |report: &mut ParseReport, line: usize, reason: String| {
        report.rejected.push(RejectedLine { line, reason });
    };

    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: FrameLine = match serde_json::from_str(&line) {
            Ok(f) => f,
            Err(e) => {
                reject(&mut report, line_no, format!("malformed frame: {e}"));
                continue;
            }
        };
        if let Some(reason) = frame_violation(&parsed, frames.last().map(|f| f.t)) {
            reject(&mut report, line_no, reason);
            continue;
        }
        frames.push(PointCloudFrame {
            t: parsed.t,
            points: parsed
                .points
                .iter()
                .map(|&[x, y, z]| Point3::new(x, y, z))
                .collect(),
            detections: parsed.detections,
        });
    }

    if frames.is_empty() {
        return Err(Error::EmptySession);
    }
    Ok((
        SessionRecording {
            sensors: header.sensors,
            frames,
        },
        report,
    ))
}

fn frame_violation(frame: &FrameLine, prev_t: Option<f64>) -> Option<String> {
    if !frame.t.is_finite() {
        return Some("non-finite timestamp".into());
    }
    if let Some(prev) = prev_t {
        if frame.t <= prev {
            return Some(format!(
                "timestamp {} not strictly after previous frame at {}",
                frame.t, prev
            ));
        }
    }
    for (i, p) in frame.points.iter().enumerate() {
        if !p.iter().all(|c| c.is_finite()) {
            return Some(format!("non-finite coordinate in point {i}"));
        }
    }
    for (i, d) in frame.detections.iter().enumerate() {
        if !d.is_finite() {
            return Some(format!("non-finite value in detection {i}"));
        }
        if frame.detections[..i].iter().any(|o| o.subject_id == d.subject_id) {
            return Some(format!("duplicate detection for subject {:?}", d.subject_id));
        }
    }
    None
}

/// Write a session in the line format described above.
pub fn serialize_session<W: Write>(session: &SessionRecording, mut writer: W) -> Result<()> {
    let header = Header {
        format: FORMAT_TAG.to_string(),
        units: "mm".to_string(),
        sensors: session.sensors.clone(),
    };
    serde_json::to_writer(&mut writer, &header).map_err(io_err)?;
    writer.write_all(b"\n")?;
    for f in &session.frames {
        let line = FrameLine {
            t: f.t,
            points: f.points.iter().map(|p| [p.x, p.y, p.z]).collect(),
            detections: f.detections.clone(),
        };
        serde_json::to_writer(&mut writer, &line).map_err(io_err)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

fn io_err(e: serde_json::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

pub fn load_session(path: &std::path::Path) -> Result<(SessionRecording, ParseReport)> {
    let file = std::fs::File::open(path)?;
    parse_session(std::io::BufReader::new(file))
}

pub fn save_session(session: &SessionRecording, path: &std::path::Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    serialize_session(session, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Raw per-sensor capture for one frame, before stitching.
#[derive(Debug, Clone)]
pub struct SensorCloud {
    pub sensor_id: String,
    pub points: Vec<Point3>,
}

/// Merge per-sensor clouds into one room-frame cloud by applying each
/// sensor's extrinsics. Point order follows the input order.
pub fn stitch(clouds: &[SensorCloud], sensors: &[SensorExtrinsics]) -> Result<Vec<Point3>> {
    let mut merged = Vec::with_capacity(clouds.iter().map(|c| c.points.len()).sum());
    for cloud in clouds {
        let ext = sensors
            .iter()
            .find(|s| s.id == cloud.sensor_id)
            .ok_or_else(|| Error::UnknownSensor(cloud.sensor_id.clone()))?;
        ext.validate()?;
        merged.extend(cloud.points.iter().map(|&p| ext.apply(p)));
    }
    Ok(merged)
}
