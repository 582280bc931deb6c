//! Exercises the C ABI end to end from Rust: handle lifecycle, status
//! codes, error messages, and agreement with the underlying library.

use std::ffi::{CStr, CString};
use std::ptr;

use orientcloud::behavior::Speaker;
use orientcloud::config::{LearnConfig, RunConfig};
use orientcloud::features::FeatureSchema;
use orientcloud::learn::{ModelBundle, Network, Normalizer, MODEL_FORMAT};
use orientcloud::session::save_session;
use orientcloud::synth::{
    generate_conversation, ConversationConfig, Focus, Segment, Target,
};

use orientcloud_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(oc_last_error()) }
        .to_string_lossy()
        .into_owned()
}

/// A structurally valid bundle with arbitrary (untrained) weights.
fn tiny_bundle() -> ModelBundle {
    let schema = FeatureSchema::v1();
    let rows = vec![
        vec![0.0, 1.0, 2.0],
        vec![1.0, 3.0, 5.0],
        vec![2.0, 5.0, 8.0],
        vec![3.0, 7.0, 11.0],
    ];
    let labels = vec![-20.0, -5.0, 5.0, 20.0];
    let normalizer = Normalizer::fit(&rows, &labels).unwrap();
    let members = vec![
        Network::init(&[3, 6, 1], 71).unwrap(),
        Network::init(&[3, 6, 1], 72).unwrap(),
    ];
    ModelBundle {
        format: MODEL_FORMAT.to_string(),
        schema,
        feature_indices: vec![0, 5, 9],
        normalizer,
        members,
        member_pool_indices: vec![0, 1],
        val_mae: 1.0,
        seed: 7,
        trained_rows: 4,
        config: LearnConfig::default(),
    }
}

#[test]
fn version_is_a_static_semver_string() {
    let v = unsafe { CStr::from_ptr(oc_version()) }.to_str().unwrap();
    assert_eq!(v.split('.').count(), 3, "unexpected version {v:?}");
}

#[test]
fn null_arguments_are_reported_not_crashed() {
    let status = unsafe { oc_config_default(ptr::null_mut()) };
    assert_eq!(status, OcStatus::NullArgument);
    assert!(last_error().contains("null"));

    let mut out: *mut OcSession = ptr::null_mut();
    let status = unsafe { oc_session_load(ptr::null(), &mut out) };
    assert_eq!(status, OcStatus::NullArgument);
    assert!(out.is_null());
}

#[test]
fn config_lifecycle_and_key_errors() {
    let mut cfg: *mut OcConfig = ptr::null_mut();
    assert_eq!(unsafe { oc_config_default(&mut cfg) }, OcStatus::Ok);
    assert!(!cfg.is_null());

    let key = CString::new("learn.pool_size").unwrap();
    let value = CString::new("4").unwrap();
    assert_eq!(
        unsafe { oc_config_set(cfg, key.as_ptr(), value.as_ptr()) },
        OcStatus::Ok
    );

    let bad = CString::new("learn.no_such_knob").unwrap();
    assert_eq!(
        unsafe { oc_config_set(cfg, bad.as_ptr(), value.as_ptr()) },
        OcStatus::Usage
    );
    assert!(last_error().contains("no_such_knob"), "{}", last_error());

    unsafe { oc_config_free(cfg) };
    unsafe { oc_config_free(ptr::null_mut()) };
}

#[test]
fn config_load_reads_flat_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, "preprocess.crop_radius_mm=450\nseed=9\n").unwrap();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();

    let mut cfg: *mut OcConfig = ptr::null_mut();
    assert_eq!(
        unsafe { oc_config_load(cpath.as_ptr(), &mut cfg) },
        OcStatus::Ok
    );
    unsafe { oc_config_free(cfg) };

    let missing = CString::new("/no/such/file.cfg").unwrap();
    let mut cfg: *mut OcConfig = ptr::null_mut();
    assert_eq!(
        unsafe { oc_config_load(missing.as_ptr(), &mut cfg) },
        OcStatus::Data
    );
    assert!(cfg.is_null());
}

#[test]
fn model_predictions_match_the_library_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = tiny_bundle();
    let path = dir.path().join("model.json");
    bundle.save(&path).unwrap();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();

    let mut model: *mut OcModel = ptr::null_mut();
    assert_eq!(
        unsafe { oc_model_load(cpath.as_ptr(), &mut model) },
        OcStatus::Ok
    );

    let mut width = 0usize;
    assert_eq!(
        unsafe { oc_model_feature_count(model, &mut width) },
        OcStatus::Ok
    );
    assert_eq!(width, bundle.schema.names.len());

    let mut row = vec![0.0f64; width];
    row[0] = 1.5;
    row[5] = -2.0;
    row[9] = 4.25;
    let mut got = f64::NAN;
    assert_eq!(
        unsafe { oc_model_predict(model, row.as_ptr(), row.len(), &mut got) },
        OcStatus::Ok
    );
    let want = bundle.predict(&row).unwrap().degrees();
    assert_eq!(got.to_bits(), want.to_bits(), "C and Rust paths disagree");

    // A wrong-width row is a data error, not a crash.
    let mut out = 0.0f64;
    assert_eq!(
        unsafe { oc_model_predict(model, row.as_ptr(), 3, &mut out) },
        OcStatus::Data
    );

    unsafe { oc_model_free(model) };
}

#[test]
fn estimate_yaw_runs_the_full_chain_on_a_synthetic_session() {
    let dir = tempfile::tempdir().unwrap();
    let run = RunConfig::default();
    let segments = [Segment {
        seconds: 4.0,
        focus: Focus::Locked(Target::I1),
        speaker: Speaker::I1,
    }];
    let conv = generate_conversation(
        &segments,
        &ConversationConfig::setup90(),
        &run.synth,
        &run.behavior,
        3,
    )
    .unwrap();
    let session_path = dir.path().join("session.jsonl");
    save_session(&conv.session, &session_path).unwrap();

    let model_path = dir.path().join("model.json");
    tiny_bundle().save(&model_path).unwrap();

    unsafe {
        let mut cfg: *mut OcConfig = ptr::null_mut();
        assert_eq!(oc_config_default(&mut cfg), OcStatus::Ok);
        let mut model: *mut OcModel = ptr::null_mut();
        let mp = CString::new(model_path.to_str().unwrap()).unwrap();
        assert_eq!(oc_model_load(mp.as_ptr(), &mut model), OcStatus::Ok);
        let mut session: *mut OcSession = ptr::null_mut();
        let sp = CString::new(session_path.to_str().unwrap()).unwrap();
        assert_eq!(oc_session_load(sp.as_ptr(), &mut session), OcStatus::Ok);

        let mut n = 0usize;
        assert_eq!(oc_session_frame_count(session, &mut n), OcStatus::Ok);
        assert_eq!(n, conv.session.frames.len());

        let subject = CString::new(conv.subject_id.as_str()).unwrap();
        let (mut body, mut head) = (f64::NAN, f64::NAN);
        let status = oc_estimate_yaw(cfg, model, session, subject.as_ptr(), 0, &mut body, &mut head);
        assert_eq!(status, OcStatus::Ok, "{}", last_error());
        assert!(body.is_finite() && (-180.0..180.0).contains(&body));
        assert!(head.is_finite() && (-180.0..180.0).contains(&head));

        let status =
            oc_estimate_yaw(cfg, model, session, subject.as_ptr(), 9999, &mut body, &mut head);
        assert_eq!(status, OcStatus::Data);
        assert!(last_error().contains("out of range"));

        let ghost = CString::new("nobody").unwrap();
        let status =
            oc_estimate_yaw(cfg, model, session, ghost.as_ptr(), 0, &mut body, &mut head);
        assert_eq!(status, OcStatus::Data, "{}", last_error());

        oc_session_free(session);
        oc_model_free(model);
        oc_config_free(cfg);
    }
}
