use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use gvnn_kit::gvft::gvft;
use gvnn_kit::gvnn::{GvnnModel as CoreModel, ModelSpec};
use gvnn_kit::gvsa::{
    build_support_correlation, graph_variate_tensor, MultivariateSignal, NodeFunction, SupportMatrix,
};
use gvnn_kit::linalg::{Matrix, Rng};
use gvnn_kit::train::{forecast, Checkpoint, TrainConfig};
use gvnn_kit_ffi::*;

fn last_error() -> String {
    let p = gvnn_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn signal(values: &Matrix) -> *mut GvnnSignal {
    let mut out = ptr::null_mut();
    let st = unsafe { gvnn_signal_from_buffer(values.as_slice().as_ptr(), values.rows(), values.cols(), &mut out) };
    assert_eq!(st, GvnnStatus::Ok);
    out
}

#[test]
fn buffer_round_trip_and_dims() {
    let m = Rng::new(1).normal_matrix(3, 7);
    let s = signal(&m);
    let (mut n, mut t) = (0, 0);
    assert_eq!(unsafe { gvnn_signal_dims(s, &mut n, &mut t) }, GvnnStatus::Ok);
    assert_eq!((n, t), (3, 7));
    let mut back = vec![0.0; 21];
    assert_eq!(
        unsafe { gvnn_signal_copy_values(s, back.as_mut_ptr(), back.len()) },
        GvnnStatus::Ok
    );
    assert_eq!(back, m.as_slice());
    assert!(gvnn_last_error_message().is_null());
    unsafe { gvnn_signal_free(s) };
}

#[test]
fn null_and_short_buffers_are_rejected() {
    let mut out = ptr::null_mut();
    let st = unsafe { gvnn_signal_from_buffer(ptr::null(), 2, 2, &mut out) };
    assert_eq!(st, GvnnStatus::NullPointer);
    assert!(out.is_null());
    assert!(last_error().contains("values"));

    let s = signal(&Rng::new(2).normal_matrix(2, 3));
    let mut small = [0.0; 4];
    let st = unsafe { gvnn_signal_copy_values(s, small.as_mut_ptr(), small.len()) };
    assert_eq!(st, GvnnStatus::InvalidArgument);
    assert!(last_error().contains("6 required"));
    unsafe { gvnn_signal_free(s) };
    unsafe { gvnn_signal_free(ptr::null_mut()) };
}

#[test]
fn bad_strings_map_to_config_status() {
    let map = CString::new("duffing").unwrap();
    let mut out = ptr::null_mut();
    let st = unsafe { gvnn_signal_generate(map.as_ptr(), 0, 100, 1, &mut out) };
    assert_eq!(st, GvnnStatus::InvalidArgument);

    let s = signal(&Rng::new(3).normal_matrix(3, 5));
    let node_fn = CString::new("cubic").unwrap();
    let mut buf = vec![0.0; 45];
    let st = unsafe { gvnn_graph_variate_tensor(s, ptr::null(), node_fn.as_ptr(), false, false, buf.as_mut_ptr(), 45) };
    assert_eq!(st, GvnnStatus::InvalidArgument);
    unsafe { gvnn_signal_free(s) };
}

#[test]
fn generate_matches_core() {
    let map = CString::new("macarthur").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { gvnn_signal_generate(map.as_ptr(), 0, 120, 9, &mut out) },
        GvnnStatus::Ok
    );
    let mut cfg = gvnn_kit::data::MapConfig::new(gvnn_kit::data::MapKind::MacArthur, 9);
    cfg.length = 120;
    let want = cfg.simulate().unwrap();
    let mut got = vec![0.0; want.values().as_slice().len()];
    assert_eq!(
        unsafe { gvnn_signal_copy_values(out, got.as_mut_ptr(), got.len()) },
        GvnnStatus::Ok
    );
    assert_eq!(got, want.values().as_slice());
    unsafe { gvnn_signal_free(out) };
}

#[test]
fn tensor_and_gvft_match_core() {
    let m = Rng::new(5).normal_matrix(4, 6);
    let x = MultivariateSignal::new(m.clone()).unwrap();
    let s = signal(&m);
    let ic = CString::new("ic").unwrap();

    let w = Rng::new(6).uniform_matrix(4, 4, 0.0, 1.0).symmetrized().unwrap();
    let want = graph_variate_tensor(
        &x,
        &SupportMatrix::fixed(w.clone()).unwrap(),
        NodeFunction::ic(),
        true,
        true,
    )
    .unwrap();
    let mut got = vec![0.0; 96];
    let st =
        unsafe { gvnn_graph_variate_tensor(s, w.as_slice().as_ptr(), ic.as_ptr(), true, true, got.as_mut_ptr(), 96) };
    assert_eq!(st, GvnnStatus::Ok);
    assert_eq!(got, want.slices.as_slice());

    let corr = build_support_correlation(&x, true).unwrap();
    let want = gvft(&x, &corr, NodeFunction::ic()).unwrap();
    let mut got = vec![0.0; 24];
    assert_eq!(
        unsafe { gvnn_gvft(s, ptr::null(), ic.as_ptr(), got.as_mut_ptr(), 24) },
        GvnnStatus::Ok
    );
    assert_eq!(got, want.coefficients.as_slice());
    unsafe { gvnn_signal_free(s) };
}

#[test]
fn verify_reports_counts() {
    let (mut failed, mut total) = (usize::MAX, 0);
    assert_eq!(unsafe { gvnn_verify(3, 2, &mut failed, &mut total) }, GvnnStatus::Ok);
    assert_eq!(failed, 0);
    assert!(total > 0);
}

fn write_checkpoint(dir: &Path) -> (PathBuf, CoreModel) {
    let mut spec = ModelSpec::new(3, 4, SupportMatrix::dense(Matrix::identity(3)).unwrap());
    spec.hidden = vec![8];
    let model = CoreModel::init(&spec, &mut Rng::new(11)).unwrap();
    let path = dir.join("checkpoint.json");
    Checkpoint::new(model.clone(), TrainConfig::default())
        .save(&path)
        .unwrap();
    (path, model)
}

#[test]
fn model_predicts_like_core() {
    let dir = tempfile::tempdir().unwrap();
    let (path, model) = write_checkpoint(dir.path());
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    let mut handle = ptr::null_mut();
    assert_eq!(unsafe { gvnn_model_load(cpath.as_ptr(), &mut handle) }, GvnnStatus::Ok);
    let (mut n, mut w) = (0, 0);
    assert_eq!(unsafe { gvnn_model_dims(handle, &mut n, &mut w) }, GvnnStatus::Ok);
    assert_eq!((n, w), (3, 4));

    let window = Rng::new(12).normal_matrix(3, 4);
    let want = forecast(&model, &window).unwrap();
    let mut got = [0.0; 3];
    assert_eq!(
        unsafe { gvnn_model_predict(handle, window.as_slice().as_ptr(), got.as_mut_ptr(), 3) },
        GvnnStatus::Ok
    );
    assert_eq!(got.to_vec(), want);
    unsafe { gvnn_model_free(handle) };
}

#[test]
fn corrupt_checkpoint_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"format\": 1").unwrap();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    let mut handle = ptr::null_mut();
    assert_eq!(
        unsafe { gvnn_model_load(cpath.as_ptr(), &mut handle) },
        GvnnStatus::DataError
    );
    assert!(handle.is_null());
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(gvnn_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(root.join("include/gvnn_kit.h")).unwrap();
    for name in [
        "gvnn_version",
        "gvnn_last_error_message",
        "gvnn_signal_from_buffer",
        "gvnn_signal_generate",
        "gvnn_signal_load_csv",
        "gvnn_signal_dims",
        "gvnn_signal_copy_values",
        "gvnn_signal_free",
        "gvnn_graph_variate_tensor",
        "gvnn_gvft",
        "gvnn_verify",
        "gvnn_model_load",
        "gvnn_model_dims",
        "gvnn_model_predict",
        "gvnn_model_free",
        "GVNN_STATUS_VERIFICATION_FAILED = 5",
        "typedef struct GvnnSignal GvnnSignal",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

#[test]
fn c_program_links_against_static_library() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let profile_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let lib = profile_dir.join("libgvnn_kit_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no static library or C compiler");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(root.join("tests/c_smoke.c"))
        .arg("-I")
        .arg(root.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with(env!("CARGO_PKG_VERSION")));
}
