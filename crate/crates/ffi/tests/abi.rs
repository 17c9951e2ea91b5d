use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use photon_slh_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(ps_last_error()) }.to_string_lossy().into_owned()
}

fn two_level(kappa: f64, omega_c: f64) -> *mut PsModel {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { ps_model_two_level(kappa, omega_c, &mut m) }, PsStatus::Ok);
    m
}

const SWAP_JSON: &str = r#"{
  "levels": 2,
  "channels": 2,
  "S": [[[0, 0], [1, 0]], [[1, 0], [0, 0]]],
  "theta": [[0.8, 0], [0.5, 0]],
  "L0": [[[0, 0], [1, 0]], [[0, 0], [0, 0]]],
  "H0": [[[-0.5, 0], [0, 0]], [[0, 0], [0.5, 0]]]
}"#;

#[test]
fn model_json_round_trip() {
    let m = two_level(0.7, 1.3);
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(ps_model_to_json(m, &mut s), PsStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(ps_model_from_json(s, &mut back), PsStatus::Ok);
        let mut s2 = ptr::null_mut();
        assert_eq!(ps_model_to_json(back, &mut s2), PsStatus::Ok);
        assert_eq!(CStr::from_ptr(s), CStr::from_ptr(s2));
        ps_string_free(s);
        ps_string_free(s2);
        ps_model_free(back);
        ps_model_free(m);
    }
}

#[test]
fn parse_errors_carry_messages() {
    let bad = CString::new("{\"levels\": 2").unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { ps_model_from_json(bad.as_ptr(), &mut m) }, PsStatus::Parse);
    assert!(m.is_null());
    assert!(last_error().contains("line 1"), "{}", last_error());
    assert_eq!(unsafe { ps_model_from_json(ptr::null(), &mut m) }, PsStatus::NullPointer);
}

#[test]
fn single_emitter_is_all_pass() {
    let m = two_level(1.0, 0.5);
    unsafe {
        let mut ok = 0;
        assert_eq!(ps_model_validate(m, 1e-10, &mut ok), PsStatus::Ok);
        assert_eq!(ok, 1);
        let mut t = ptr::null_mut();
        assert_eq!(ps_transfer_from_model(m, 1e-10, &mut t), PsStatus::Ok);
        let mut n = 0;
        assert_eq!(ps_transfer_channels(t, &mut n), PsStatus::Ok);
        assert_eq!(n, 1);
        let mut g = [0.0; 2];
        for w in [-3.0, -0.5, 0.0, 2.0] {
            assert_eq!(ps_transfer_response(t, w, g.as_mut_ptr(), 2), PsStatus::Ok);
            assert!((g[0] * g[0] + g[1] * g[1] - 1.0).abs() < 1e-14);
        }
        // On resonance the emitter reflects with a sign flip.
        ps_transfer_response(t, -0.5, g.as_mut_ptr(), 2);
        assert!((g[0] + 1.0).abs() < 1e-15 && g[1].abs() < 1e-15);
        assert_eq!(ps_transfer_response(t, 0.0, g.as_mut_ptr(), 1), PsStatus::InvalidArgument);
        ps_transfer_free(t);
        ps_model_free(m);
    }
}

#[test]
fn series_on_one_emitter_adds_couplings() {
    // Both models act on the same atom, so the product is again a single
    // emitter with summed amplitudes and summed frequencies.
    let (ka, kb, wa, wb) = (0.6f64, 1.1f64, 0.2, -0.3);
    let a = two_level(ka, wa);
    let b = two_level(kb, wb);
    let merged = two_level((ka.sqrt() + kb.sqrt()).powi(2), wa + wb);
    unsafe {
        let mut ab = ptr::null_mut();
        assert_eq!(ps_model_series(a, b, &mut ab), PsStatus::Ok);
        let (mut tab, mut tm) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(ps_transfer_from_model(ab, 1e-10, &mut tab), PsStatus::Ok);
        ps_transfer_from_model(merged, 1e-10, &mut tm);
        let (mut x, mut y) = ([0.0; 2], [0.0; 2]);
        for w in [-1.0, 0.1, 0.7] {
            ps_transfer_response(tab, w, x.as_mut_ptr(), 2);
            ps_transfer_response(tm, w, y.as_mut_ptr(), 2);
            assert!((x[0] - y[0]).abs() < 1e-12 && (x[1] - y[1]).abs() < 1e-12);
        }
        ps_transfer_free(tab);
        ps_transfer_free(tm);
        for m in [a, b, ab, merged] {
            ps_model_free(m);
        }
    }
}

#[test]
fn transfer_cascade_multiplies_responses() {
    let a = two_level(0.6, 0.2);
    let b = two_level(1.1, -0.3);
    unsafe {
        let (mut ta, mut tb, mut cas) = (ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
        ps_transfer_from_model(a, 1e-10, &mut ta);
        ps_transfer_from_model(b, 1e-10, &mut tb);
        assert_eq!(ps_transfer_cascade(ta, tb, &mut cas), PsStatus::Ok);
        let (mut x, mut y, mut z) = ([0.0; 2], [0.0; 2], [0.0; 2]);
        for w in [-1.0, 0.1, 0.7] {
            ps_transfer_response(ta, w, x.as_mut_ptr(), 2);
            ps_transfer_response(tb, w, y.as_mut_ptr(), 2);
            ps_transfer_response(cas, w, z.as_mut_ptr(), 2);
            let (re, im) = (x[0] * y[0] - x[1] * y[1], x[0] * y[1] + x[1] * y[0]);
            assert!((z[0] - re).abs() < 1e-14 && (z[1] - im).abs() < 1e-14);
        }
        for t in [ta, tb, cas] {
            ps_transfer_free(t);
        }
        ps_model_free(a);
        ps_model_free(b);
    }
}

#[test]
fn feedback_reduction_and_singular_loop() {
    let json = CString::new(SWAP_JSON).unwrap();
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(ps_model_from_json(json.as_ptr(), &mut m), PsStatus::Ok);
        let (mut ch, mut lv) = (0, 0);
        ps_model_dims(m, &mut ch, &mut lv);
        assert_eq!((ch, lv), (2, 2));
        let mut red = ptr::null_mut();
        let mut delta = f64::NAN;
        assert_eq!(ps_model_feedback(m, &mut red, &mut delta), PsStatus::Ok);
        assert_eq!(delta, 0.0);
        ps_model_dims(red, &mut ch, ptr::null_mut());
        assert_eq!(ch, 1);
        let mut t = ptr::null_mut();
        assert_eq!(ps_transfer_from_model(red, 1e-10, &mut t), PsStatus::Ok);
        ps_transfer_free(t);
        ps_model_free(red);
        ps_model_free(m);

        let open = CString::new(SWAP_JSON.replace("[[[0, 0], [1, 0]], [[1, 0], [0, 0]]]", "[[[1, 0], [0, 0]], [[0, 0], [1, 0]]]")).unwrap();
        let mut m = ptr::null_mut();
        assert_eq!(ps_model_from_json(open.as_ptr(), &mut m), PsStatus::Ok);
        let mut red = ptr::null_mut();
        assert_eq!(ps_model_feedback(m, &mut red, ptr::null_mut()), PsStatus::SingularLoop);
        assert!(red.is_null());
        ps_model_free(m);
    }
}

#[test]
fn shaping_through_the_abi() {
    let m = two_level(1.0, 0.5);
    let len = 1usize << 13;
    let dt = 40.0 / len as f64;
    unsafe {
        let mut t = ptr::null_mut();
        ps_transfer_from_model(m, 1e-10, &mut t);
        let mut p = ptr::null_mut();
        assert_eq!(ps_pulse_gaussian(-20.0, dt, len, 1, 0, 0.0, 1.0, 0.0, &mut p), PsStatus::Ok);
        let mut norm = 0.0;
        ps_pulse_norm(p, &mut norm);
        assert!((norm - 1.0).abs() < 1e-10);

        let (mut fft, mut ode) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(ps_shape_fft(p, t, &mut fft), PsStatus::Ok);
        assert_eq!(ps_shape_ode(p, t, &mut ode), PsStatus::Ok);
        let (mut got_len, mut got_ch) = (0, 0);
        ps_pulse_dims(fft, &mut got_len, &mut got_ch);
        assert_eq!((got_len, got_ch), (len, 1));
        let mut a = vec![0.0; 2 * len];
        let mut b = vec![0.0; 2 * len];
        assert_eq!(ps_pulse_samples(fft, 0, a.as_mut_ptr(), a.len()), PsStatus::Ok);
        assert_eq!(ps_pulse_samples(ode, 0, b.as_mut_ptr(), b.len()), PsStatus::Ok);
        let diff: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() * dt;
        assert!(diff.sqrt() < 1e-4, "{}", diff.sqrt());
        assert_eq!(ps_pulse_samples(fft, 1, a.as_mut_ptr(), a.len()), PsStatus::InvalidArgument);

        // Round trip through raw samples.
        let mut q = ptr::null_mut();
        assert_eq!(ps_pulse_from_samples(-20.0, dt, len, 1, a.as_ptr(), &mut q), PsStatus::Ok);
        ps_pulse_norm(q, &mut norm);
        assert!((norm - 1.0).abs() < 1e-6);

        for x in [p, fft, ode, q] {
            ps_pulse_free(x);
        }
        ps_transfer_free(t);
        ps_model_free(m);
    }
}

#[test]
fn short_grid_is_reported() {
    let m = two_level(0.05, 0.0);
    unsafe {
        let mut t = ptr::null_mut();
        ps_transfer_from_model(m, 1e-10, &mut t);
        let mut p = ptr::null_mut();
        ps_pulse_gaussian(-5.0, 10.0 / 1024.0, 1024, 1, 0, 0.0, 1.0, 0.0, &mut p);
        let mut out = ptr::null_mut();
        assert_eq!(ps_shape_fft(p, t, &mut out), PsStatus::GridInsufficient);
        assert!(last_error().contains("use at least"));
        let mut np = ptr::null_mut();
        assert_eq!(ps_pulse_from_samples(0.0, 1.0, 3, 1, [0.0; 6].as_ptr(), &mut np), PsStatus::InvalidArgument);
        ps_pulse_free(p);
        ps_transfer_free(t);
        ps_model_free(m);
    }
}

#[test]
fn unstable_model_is_a_condition_failure() {
    let json = CString::new(SWAP_JSON.replace("\"theta\": [[0.8, 0], [0.5, 0]]", "\"theta\": [[0, 0], [0, 0]]")).unwrap();
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(ps_model_from_json(json.as_ptr(), &mut m), PsStatus::Ok);
        let mut t = ptr::null_mut();
        assert_eq!(ps_transfer_from_model(m, 1e-10, &mut t), PsStatus::Condition);
        ps_model_free(m);
    }
}

#[test]
fn version_and_null_free() {
    let v = unsafe { CStr::from_ptr(ps_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    unsafe {
        ps_model_free(ptr::null_mut());
        ps_transfer_free(ptr::null_mut());
        ps_pulse_free(ptr::null_mut());
        ps_string_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_the_abi() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/photon_slh.h");
    let header = std::fs::read_to_string(&path).unwrap();
    for name in [
        "ps_last_error",
        "ps_version",
        "ps_string_free",
        "ps_model_from_json",
        "ps_model_two_level",
        "ps_model_to_json",
        "ps_model_dims",
        "ps_model_validate",
        "ps_model_series",
        "ps_model_feedback",
        "ps_model_free",
        "ps_transfer_from_model",
        "ps_transfer_cascade",
        "ps_transfer_channels",
        "ps_transfer_response",
        "ps_transfer_free",
        "ps_pulse_from_samples",
        "ps_pulse_gaussian",
        "ps_pulse_dims",
        "ps_pulse_samples",
        "ps_pulse_norm",
        "ps_pulse_free",
        "ps_shape_fft",
        "ps_shape_ode",
    ] {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(header.contains("typedef struct PsModel PsModel;"));
    assert!(header.contains("PS_STATUS_SINGULAR_LOOP = 6"));

    // Compile the header as C when a compiler is around.
    if let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"]).arg(&path).output() {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
