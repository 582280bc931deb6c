//! Command-line front end.
//!
//! Every subcommand is deterministic given a config and seed, writes its
//! outputs plus a resolved-config snapshot into `--out-dir`, and reports
//! failures as machine-readable JSON on stderr with exit codes 0 (ok),
//! 1 (usage), 2 (data), 3 (numerical failure).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use orientcloud::angle::Angle;
use orientcloud::behavior::{
    classify_frames, compare_groups, detect_contacts, detect_exclusions, reference_angles,
    role_distribution, summarize_contacts, summarize_exclusions, Tail,
};
use orientcloud::config::RunConfig;
use orientcloud::error::{Error, ErrorKind, Result};
use orientcloud::features::FeatureSchema;
use orientcloud::geometry::body_orientation;
use orientcloud::learn::{full_rfe, run_loso, train_model, Dataset, ModelBundle};
use orientcloud::pipeline::{dataset_from_benchmark, process_session, DropReason};
use orientcloud::preprocess::{preprocess_subject, RejectReason};
use orientcloud::report::{
    self, loso_to_json, write_contacts_csv, write_exclusions_csv, write_json,
    write_labels_csv, write_loso_csv, write_mae_vs_features_csv, write_rfe_csv,
    write_speakers_csv, write_yaw_csv, EventSummaryJson, SeatingPlan, YawRow,
};
use orientcloud::session::{load_session, save_session};
use orientcloud::synth::{
    generate_benchmark, generate_conversation, BenchmarkSubject, ConversationConfig, Focus,
    Segment, Target,
};
use orientcloud::types::PointCloudFrame;

#[derive(Parser)]
#[command(
    name = "orientcloud",
    version,
    about = "Body/head yaw estimation and attention analytics for overhead LiDAR point clouds"
)]
struct Cli {
    /// Configuration file: JSON or flat `section.key=value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed, overriding the config value.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for training (0 = one per core). Parallelism never
    /// changes results.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    /// Directory all outputs are written to.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate synthetic data with ground truth.
    Synth {
        /// Multi-subject labelled yaw benchmark (sessions + labels.csv).
        #[arg(long, conflicts_with = "conversation")]
        benchmark: bool,
        /// Scripted three-person conversation: locked | engaged | mixed.
        #[arg(long)]
        conversation: Option<String>,
        /// Interviewer separation for conversations, degrees (90 or 45).
        #[arg(long, default_value_t = 90)]
        setup: u32,
    },
    /// Run the cleaning chain and report per-frame outcomes.
    Preprocess {
        #[arg(long)]
        session: PathBuf,
        #[arg(long)]
        subject: String,
    },
    /// Estimate body yaw per frame (geometry only, no model).
    FitBody {
        #[arg(long)]
        session: PathBuf,
        #[arg(long)]
        subject: String,
    },
    /// Build a labelled feature table from benchmark-style sessions.
    ExtractFeatures {
        /// Directory containing `<subject_id>.jsonl` sessions.
        #[arg(long)]
        sessions: PathBuf,
        /// Ground-truth labels CSV for those sessions.
        #[arg(long)]
        labels: PathBuf,
    },
    /// Feature elimination trace on a dataset (no model training).
    Rfe {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Train a deployable model on a dataset.
    Train {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Leave-one-subject-out evaluation plus a final trained model.
    Evaluate {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Per-frame yaw estimates for a session using a trained model.
    Infer {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        session: PathBuf,
        #[arg(long)]
        subject: String,
    },
    /// Contact/Exclusion events and related tables from a yaw track.
    Analyze {
        /// Yaw track CSV (`fit-body`/`infer` output, or ground truth).
        #[arg(long)]
        yaws: PathBuf,
        /// Seating plan JSON (positions + subject zero direction).
        #[arg(long)]
        seating: PathBuf,
        /// Optional speaking-role timeline for role tables.
        #[arg(long)]
        speakers: Option<PathBuf>,
        /// Optional per-session metrics CSV for a two-group comparison.
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Plot-ready summaries from an `evaluate` output directory.
    Report {
        #[arg(long)]
        evaluate_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(e.kind(), K::DisplayHelp | K::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            emit_error(ErrorKind::Usage, &e.to_string());
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e.kind();
            emit_error(kind, &e.to_string());
            ExitCode::from(match kind {
                ErrorKind::Usage => 1,
                ErrorKind::Data => 2,
                ErrorKind::Numeric => 3,
            })
        }
    }
}

fn emit_error(kind: ErrorKind, message: &str) {
    let tag = match kind {
        ErrorKind::Usage => "usage",
        ErrorKind::Data => "data",
        ErrorKind::Numeric => "numeric",
    };
    eprintln!(
        "{}",
        serde_json::json!({"error": {"kind": tag, "message": message}})
    );
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.workers > 0 {
        // Ignore "already initialized": only the first builder wins, which
        // can only happen in-process during tests.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global();
    }
    std::fs::create_dir_all(&cli.out_dir)?;
    std::fs::write(cli.out_dir.join("config.json"), cfg.snapshot())?;

    let out = cli.out_dir.as_path();
    match cli.cmd {
        Cmd::Synth {
            benchmark,
            conversation,
            setup,
        } => cmd_synth(&cfg, out, benchmark, conversation.as_deref(), setup),
        Cmd::Preprocess { session, subject } => cmd_preprocess(&cfg, out, &session, &subject),
        Cmd::FitBody { session, subject } => cmd_fit_body(&cfg, out, &session, &subject),
        Cmd::ExtractFeatures { sessions, labels } => {
            cmd_extract_features(&cfg, out, &sessions, &labels)
        }
        Cmd::Rfe { dataset } => cmd_rfe(&cfg, out, &dataset),
        Cmd::Train { dataset } => cmd_train(&cfg, out, &dataset),
        Cmd::Evaluate { dataset } => cmd_evaluate(&cfg, out, &dataset),
        Cmd::Infer {
            model,
            session,
            subject,
        } => cmd_infer(&cfg, out, &model, &session, &subject),
        Cmd::Analyze {
            yaws,
            seating,
            speakers,
            metrics,
        } => cmd_analyze(&cfg, out, &yaws, &seating, speakers.as_deref(), metrics.as_deref()),
        Cmd::Report { evaluate_dir } => cmd_report(out, &evaluate_dir),
    }
}

// ── synth ──────────────────────────────────────────────────────────────

fn cmd_synth(
    cfg: &RunConfig,
    out: &Path,
    benchmark: bool,
    conversation: Option<&str>,
    setup: u32,
) -> Result<()> {
    match (benchmark, conversation) {
        (true, None) => synth_benchmark(cfg, out),
        (false, Some(script)) => synth_conversation(cfg, out, script, setup),
        _ => Err(Error::Config(
            "synth needs exactly one of --benchmark or --conversation <script>".into(),
        )),
    }
}

fn synth_benchmark(cfg: &RunConfig, out: &Path) -> Result<()> {
    let bench = generate_benchmark(&cfg.synth, cfg.seed)?;
    let mut labels = Vec::with_capacity(bench.len());
    let mut frames = 0usize;
    for subject in &bench {
        save_session(
            &subject.session,
            &out.join(format!("{}.jsonl", subject.subject_id)),
        )?;
        frames += subject.session.frames.len();
        labels.push((subject.subject_id.clone(), subject.labels.clone()));
    }
    write_labels_csv(&labels, &out.join("labels.csv"))?;
    println!(
        "benchmark: {} subjects, {} frames -> {}",
        bench.len(),
        frames,
        out.display()
    );
    Ok(())
}

fn conversation_script(name: &str) -> Result<Vec<Segment>> {
    use orientcloud::behavior::Speaker;
    let seg = |seconds: f64, focus: Focus, speaker: Speaker| Segment {
        seconds,
        focus,
        speaker,
    };
    match name {
        "locked" => Ok(vec![seg(40.0, Focus::Locked(Target::I1), Speaker::I1)]),
        "engaged" => Ok(vec![seg(40.0, Focus::Engaged(Target::I1), Speaker::I1)]),
        "mixed" => Ok(vec![
            seg(16.0, Focus::Locked(Target::I1), Speaker::I1),
            seg(16.0, Focus::Engaged(Target::I2), Speaker::I2),
            seg(8.0, Focus::Locked(Target::Midpoint), Speaker::Subject),
            seg(40.0 / 3.0, Focus::Engaged(Target::I1), Speaker::I1),
        ]),
        other => Err(Error::Config(format!(
            "unknown conversation script {other:?} (locked | engaged | mixed)"
        ))),
    }
}

fn synth_conversation(cfg: &RunConfig, out: &Path, script: &str, setup: u32) -> Result<()> {
    let segments = conversation_script(script)?;
    let cc = match setup {
        90 => ConversationConfig::setup90(),
        45 => ConversationConfig::setup45(),
        other => {
            return Err(Error::Config(format!(
                "unsupported --setup {other} (90 or 45)"
            )))
        }
    };
    let conv = generate_conversation(&segments, &cc, &cfg.synth, &cfg.behavior, cfg.seed)?;

    save_session(&conv.session, &out.join("session.jsonl"))?;
    SeatingPlan {
        subject: conv.subject_pos,
        interviewer1: conv.i1_pos,
        interviewer2: conv.i2_pos,
        subject_zero_deg: conv.subject_body_yaw.degrees(),
    }
    .save(&out.join("seating.json"))?;
    write_speakers_csv(&conv.script.roles, &out.join("speakers.csv"))?;

    let rows: Vec<YawRow> = conv
        .true_room_yaws
        .iter()
        .enumerate()
        .map(|(i, &(t, yaw))| YawRow {
            frame: i,
            t,
            status: "ok".into(),
            body_yaw_deg: Some(conv.subject_body_yaw.degrees()),
            head_yaw_deg: Some(yaw.degrees()),
        })
        .collect();
    write_yaw_csv(&rows, &out.join("true_yaws.csv"))?;
    write_contacts_csv(&conv.script.contacts, &out.join("expected_contacts.csv"))?;
    write_exclusions_csv(&conv.script.exclusions, &out.join("expected_exclusions.csv"))?;
    println!(
        "conversation {script:?}: {} frames, {} contacts, {} exclusions -> {}",
        conv.session.frames.len(),
        conv.script.contacts.len(),
        conv.script.exclusions.len(),
        out.display()
    );
    Ok(())
}

// ── preprocess / fit-body ──────────────────────────────────────────────

fn reject_tag(r: RejectReason) -> &'static str {
    match r {
        RejectReason::Repeat => "rejected:repeat",
        RejectReason::XyDiscrepancy => "rejected:xy_discrepancy",
        RejectReason::ZDiscrepancy => "rejected:z_discrepancy",
    }
}

fn require_subject(rec: &orientcloud::SessionRecording, subject: &str) -> Result<()> {
    if !rec.subject_ids().iter().any(|s| s == subject) {
        return Err(Error::UnknownSubject(subject.to_string()));
    }
    Ok(())
}

fn cmd_preprocess(cfg: &RunConfig, out: &Path, session: &Path, subject: &str) -> Result<()> {
    let (rec, parse) = load_session(session)?;
    require_subject(&rec, subject)?;
    let mut w = csv::Writer::from_path(out.join("preprocess.csv"))
        .map_err(|e| Error::Dataset(format!("csv: {e}")))?;
    w.write_record([
        "frame",
        "t",
        "status",
        "roi_points",
        "denoise_removed",
        "head_points",
        "body_points",
        "head_x_mm",
        "head_y_mm",
        "z_head_mm",
        "center_fallback",
        "crest_fallback",
        "xy_discrepancy_mm",
        "z_discrepancy_mm",
    ])
    .map_err(|e| Error::Dataset(format!("csv: {e}")))?;

    let mut kept = 0usize;
    let mut prev: Option<&PointCloudFrame> = None;
    for (i, frame) in rec.frames.iter().enumerate() {
        let row: Vec<String> = match preprocess_subject(frame, prev, subject, &cfg.preprocess) {
            Ok(pre) => {
                let status = match pre.validation.reject {
                    None => {
                        kept += 1;
                        "ok".to_string()
                    }
                    Some(r) => reject_tag(r).to_string(),
                };
                vec![
                    i.to_string(),
                    fmt(frame.t),
                    status,
                    pre.roi_points.to_string(),
                    pre.denoise_removed.to_string(),
                    pre.head.len().to_string(),
                    pre.body.len().to_string(),
                    fmt(pre.head_position.x),
                    fmt(pre.head_position.y),
                    fmt(pre.head_position.z_head),
                    (pre.head_position.center_fallback as u8).to_string(),
                    (pre.head_position.crest_fallback as u8).to_string(),
                    fmt(pre.validation.xy_discrepancy_mm),
                    fmt(pre.validation.z_discrepancy_mm),
                ]
            }
            Err(e) => vec![
                i.to_string(),
                fmt(frame.t),
                format!("failed:{}", short_reason(&e)),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ],
        };
        w.write_record(&row)
            .map_err(|e| Error::Dataset(format!("csv: {e}")))?;
        prev = Some(frame);
    }
    w.flush()?;
    println!(
        "preprocess: {} frames, {} ok ({} lines skipped on load) -> {}",
        rec.frames.len(),
        kept,
        parse.rejected.len(),
        out.display()
    );
    Ok(())
}

fn cmd_fit_body(cfg: &RunConfig, out: &Path, session: &Path, subject: &str) -> Result<()> {
    let (rec, _) = load_session(session)?;
    require_subject(&rec, subject)?;
    let mut rows = Vec::with_capacity(rec.frames.len());
    let mut prev: Option<&PointCloudFrame> = None;
    for (i, frame) in rec.frames.iter().enumerate() {
        let row = match preprocess_subject(frame, prev, subject, &cfg.preprocess) {
            Ok(pre) if pre.validation.accepted() => match body_orientation(&pre.body, &pre.head) {
                Ok(body) => YawRow {
                    frame: i,
                    t: frame.t,
                    status: "ok".into(),
                    body_yaw_deg: Some(body.yaw.degrees()),
                    head_yaw_deg: None,
                },
                Err(e) => failed_row(i, frame.t, &e),
            },
            Ok(pre) => YawRow {
                frame: i,
                t: frame.t,
                status: reject_tag(pre.validation.reject.expect("rejected")).into(),
                body_yaw_deg: None,
                head_yaw_deg: None,
            },
            Err(e) => failed_row(i, frame.t, &e),
        };
        rows.push(row);
        prev = Some(frame);
    }
    write_yaw_csv(&rows, &out.join("body_yaws.csv"))?;
    let ok = rows.iter().filter(|r| r.status == "ok").count();
    println!("fit-body: {}/{} frames -> {}", ok, rows.len(), out.display());
    Ok(())
}

fn failed_row(frame: usize, t: f64, e: &Error) -> YawRow {
    YawRow {
        frame,
        t,
        status: format!("failed:{}", short_reason(e)),
        body_yaw_deg: None,
        head_yaw_deg: None,
    }
}

/// Compact machine-stable failure tag for per-frame status columns.
fn short_reason(e: &Error) -> &'static str {
    match e {
        Error::TooFewRoiPoints { .. } => "too_few_roi_points",
        Error::TooFewHeadPoints { .. } => "too_few_head_points",
        Error::EmptySplit(_) => "empty_split",
        Error::TooFewEllipsePoints { .. } | Error::DegenerateEllipse(_) => "degenerate_ellipse",
        Error::UnknownSubject(_) => "unknown_subject",
        _ => "pipeline",
    }
}

fn fmt(v: f64) -> String {
    let mut s = format!("{v}");
    if !s.contains('.') && !s.contains('e') {
        s.push_str(".0");
    }
    s
}

// ── extract-features ───────────────────────────────────────────────────

fn cmd_extract_features(cfg: &RunConfig, out: &Path, sessions: &Path, labels: &Path) -> Result<()> {
    let groups = report::read_labels_csv(labels)?;
    if groups.is_empty() {
        return Err(Error::Dataset(format!("{}: no labels", labels.display())));
    }
    let mut bench = Vec::with_capacity(groups.len());
    for (subject_id, labels) in groups {
        let path = sessions.join(format!("{subject_id}.jsonl"));
        let (session, _) = load_session(&path)?;
        bench.push(BenchmarkSubject {
            subject_id,
            session,
            labels,
        });
    }
    let schema = FeatureSchema::v1();
    let (ds, stats) = dataset_from_benchmark(&bench, &schema, &cfg.preprocess, &cfg.features)?;
    ds.save_csv(&out.join("dataset.csv"))?;
    println!(
        "extract-features: {} rows ({} rejected, {} flagged, {} failed) -> {}",
        stats.rows,
        stats.rejected,
        stats.flagged,
        stats.failed,
        out.display()
    );
    Ok(())
}

// ── rfe / train / evaluate ─────────────────────────────────────────────

fn cmd_rfe(cfg: &RunConfig, out: &Path, dataset: &Path) -> Result<()> {
    let ds = Dataset::load_csv(dataset)?;
    let trace = full_rfe(&ds, &cfg.learn, cfg.seed)?;
    write_trace_artifacts(&trace, &ds, out)?;
    let opt = trace.optimal();
    println!(
        "rfe: {} -> {} features, val MAE {:.2} deg -> {}",
        ds.n_features(),
        opt.n_features(),
        opt.val_mae,
        out.display()
    );
    Ok(())
}

fn write_trace_artifacts(
    trace: &orientcloud::learn::RfeTrace,
    ds: &Dataset,
    out: &Path,
) -> Result<()> {
    write_rfe_csv(trace, &ds.schema.names, &out.join("rfe_trace.csv"))?;
    write_mae_vs_features_csv(trace, &out.join("mae_vs_features.csv"))?;
    let opt = trace.optimal();
    let names: Vec<&str> = opt
        .feature_indices
        .iter()
        .map(|&i| ds.schema.names[i].as_str())
        .collect();
    write_json(
        &serde_json::json!({
            "n_features": opt.n_features(),
            "val_mae_deg": opt.val_mae,
            "feature_indices": opt.feature_indices,
            "feature_names": names,
        }),
        &out.join("selected_features.json"),
    )
}

fn cmd_train(cfg: &RunConfig, out: &Path, dataset: &Path) -> Result<()> {
    let ds = Dataset::load_csv(dataset)?;
    let (bundle, rep) = train_model(&ds, &cfg.learn, cfg.seed)?;
    write_train_artifacts(&bundle, &rep, &ds, out)?;
    println!(
        "train: {} features, {} members, val MAE {:.2} deg -> {}",
        bundle.feature_indices.len(),
        bundle.members.len(),
        bundle.val_mae,
        out.display()
    );
    Ok(())
}

fn write_train_artifacts(
    bundle: &ModelBundle,
    rep: &orientcloud::learn::TrainReport,
    ds: &Dataset,
    out: &Path,
) -> Result<()> {
    bundle.save(&out.join("model.json"))?;
    write_trace_artifacts(&rep.rfe, ds, out)?;
    write_json(
        &serde_json::json!({
            "n_train": rep.n_train,
            "n_val": rep.n_val,
            "excluded_subjects": rep.excluded,
            "pool_val_mae_deg": rep.ensemble.pool_val_mae,
            "ensemble_members": rep.ensemble.members,
            "ensemble_val_mae_deg": rep.ensemble.val_mae,
            "seed_val_mae_deg": rep.ensemble.seed_val_mae,
        }),
        &out.join("train_report.json"),
    )
}

fn cmd_evaluate(cfg: &RunConfig, out: &Path, dataset: &Path) -> Result<()> {
    let ds = Dataset::load_csv(dataset)?;
    let loso = run_loso(&ds, &cfg.learn, cfg.seed)?;
    write_loso_csv(&loso, &out.join("per_subject_mae.csv"))?;
    write_json(&loso_to_json(&loso), &out.join("loso_report.json"))?;

    // The deployable model, trained exactly as a standalone `train` run.
    let (bundle, rep) = train_model(&ds, &cfg.learn, cfg.seed)?;
    write_train_artifacts(&bundle, &rep, &ds, out)?;
    println!(
        "evaluate: overall MAE {:.2} deg over {} subjects -> {}",
        loso.overall_mae,
        loso.folds.len(),
        out.display()
    );
    Ok(())
}

// ── infer ──────────────────────────────────────────────────────────────

fn cmd_infer(
    cfg: &RunConfig,
    out: &Path,
    model: &Path,
    session: &Path,
    subject: &str,
) -> Result<()> {
    let bundle = ModelBundle::load(model)?;
    let (rec, _) = load_session(session)?;
    let schema = bundle.schema.clone();
    let processed = process_session(&rec, subject, &schema, &cfg.preprocess, &cfg.features)?;

    let mut rows: Vec<YawRow> = Vec::with_capacity(rec.frames.len());
    for (index, frame) in &processed.frames {
        let yaw = bundle.predict(&frame.features.values)?;
        rows.push(YawRow {
            frame: *index,
            t: frame.t,
            status: "ok".into(),
            body_yaw_deg: Some(frame.body.yaw.degrees()),
            head_yaw_deg: Some(yaw.degrees()),
        });
    }
    for d in &processed.dropped {
        rows.push(YawRow {
            frame: d.index,
            t: d.t,
            status: match &d.why {
                DropReason::Validation(r) => reject_tag(*r).to_string(),
                DropReason::Flagged => "flagged".to_string(),
                DropReason::Pipeline(_) => "failed:pipeline".to_string(),
            },
            body_yaw_deg: None,
            head_yaw_deg: None,
        });
    }
    rows.sort_by_key(|r| r.frame);
    write_yaw_csv(&rows, &out.join("yaws.csv"))?;
    let ok = rows.iter().filter(|r| r.status == "ok").count();
    println!("infer: {}/{} frames -> {}", ok, rows.len(), out.display());
    Ok(())
}

// ── analyze ────────────────────────────────────────────────────────────

fn cmd_analyze(
    cfg: &RunConfig,
    out: &Path,
    yaws: &Path,
    seating: &Path,
    speakers: Option<&Path>,
    metrics: Option<&Path>,
) -> Result<()> {
    let (track, skipped) = report::read_yaw_csv(yaws)?;
    let plan = SeatingPlan::load(seating)?;
    let refs = reference_angles(
        plan.subject,
        plan.interviewer1,
        plan.interviewer2,
        Angle::from_degrees(plan.subject_zero_deg),
    )?;
    let zero = Angle::from_degrees(plan.subject_zero_deg);
    let relative: Vec<(f64, Angle)> = track
        .iter()
        .map(|&(t, yaw)| (t, yaw.rotated(-zero.degrees())))
        .collect();
    let seq = classify_frames(&relative, &refs, cfg.behavior.region_half_width_deg)?;
    let contacts = detect_contacts(&seq, cfg.behavior.contact_min_frames)?;
    let exclusions = detect_exclusions(
        &seq,
        cfg.behavior.exclusion_window,
        cfg.behavior.exclusion_quorum,
    )?;
    write_contacts_csv(&contacts, &out.join("contacts.csv"))?;
    write_exclusions_csv(&exclusions, &out.join("exclusions.csv"))?;
    write_json(
        &EventSummaryJson {
            frames_analyzed: seq.len(),
            frames_skipped: skipped,
            contacts: summarize_contacts(&seq, &contacts),
            exclusions: summarize_exclusions(&seq, &exclusions),
        },
        &out.join("events.json"),
    )?;

    if let Some(path) = speakers {
        let roles = report::read_speakers_csv(path)?;
        let tables = role_distribution(&seq, &roles)?;
        write_json(&tables, &out.join("roles.json"))?;
    }
    if let Some(path) = metrics {
        let (ga, va, gb, vb) = report::read_metrics_csv(path)?;
        let cmp = compare_groups(&va, &vb, Tail::TwoSided)?;
        write_json(
            &serde_json::json!({"group_a": ga, "group_b": gb, "comparison": cmp}),
            &out.join("group_comparison.json"),
        )?;
    }
    println!(
        "analyze: {} frames, {} contacts, {} exclusions -> {}",
        seq.len(),
        contacts.len(),
        exclusions.len(),
        out.display()
    );
    Ok(())
}

// ── report ─────────────────────────────────────────────────────────────

fn cmd_report(out: &Path, evaluate_dir: &Path) -> Result<()> {
    let loso: report::LosoJson = report::read_json(&evaluate_dir.join("loso_report.json"))?;

    // Re-emit the elimination curve as plot data if the trace is present.
    let trace_path = evaluate_dir.join("rfe_trace.csv");
    let mut curve: Vec<(usize, f64)> = Vec::new();
    if trace_path.exists() {
        let mut r = csv::Reader::from_path(&trace_path)
            .map_err(|e| Error::Dataset(format!("csv: {e}")))?;
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::Dataset(format!("csv: {e}")))?;
            let n: usize = rec[1]
                .parse()
                .map_err(|e| Error::Dataset(format!("{}: {e}", trace_path.display())))?;
            let mae: f64 = rec[2]
                .parse()
                .map_err(|e| Error::Dataset(format!("{}: {e}", trace_path.display())))?;
            curve.push((n, mae));
        }
        curve.sort_by_key(|&(n, _)| n);
        let mut w = csv::Writer::from_path(out.join("mae_vs_features.csv"))
            .map_err(|e| Error::Dataset(format!("csv: {e}")))?;
        w.write_record(["n_features", "val_mae_deg"])
            .map_err(|e| Error::Dataset(format!("csv: {e}")))?;
        for (n, mae) in &curve {
            w.write_record([n.to_string(), fmt(*mae)])
                .map_err(|e| Error::Dataset(format!("csv: {e}")))?;
        }
        w.flush()?;
    }

    let best = loso
        .folds
        .iter()
        .min_by(|a, b| a.test_mae_deg.total_cmp(&b.test_mae_deg));
    let worst = loso
        .folds
        .iter()
        .max_by(|a, b| a.test_mae_deg.total_cmp(&b.test_mae_deg));
    write_json(
        &serde_json::json!({
            "overall_mae_deg": loso.overall_mae_deg,
            "n_subjects": loso.folds.len(),
            "best_subject": best.map(|f| (&f.subject_id, f.test_mae_deg)),
            "worst_subject": worst.map(|f| (&f.subject_id, f.test_mae_deg)),
            "per_subject": loso.folds.iter()
                .map(|f| serde_json::json!({"subject_id": f.subject_id, "test_mae_deg": f.test_mae_deg}))
                .collect::<Vec<_>>(),
            "elimination_curve_points": curve.len(),
        }),
        &out.join("summary.json"),
    )?;
    println!(
        "report: overall MAE {:.2} deg -> {}",
        loso.overall_mae_deg,
        out.display()
    );
    Ok(())
}
