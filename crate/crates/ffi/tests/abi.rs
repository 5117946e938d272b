use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use interdim_ffi::*;

fn parse(text: &str) -> *mut InterdimSpec {
    let c = CString::new(text).unwrap();
    let mut spec = ptr::null_mut();
    let status = unsafe { interdim_spec_parse(c.as_ptr(), &mut spec) };
    assert_eq!(status, InterdimStatus::Ok, "{text}");
    spec
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(interdim_last_error()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn formula_through_handle() {
    let spec = parse("family=concentric d=2 p=0.5");
    let mut v = 0.0;
    assert_eq!(unsafe { interdim_formula(spec, 1.0, &mut v) }, InterdimStatus::Ok);
    assert!((v - 4.0 / 3.0).abs() < 1e-12);
    assert_eq!(
        unsafe { interdim_formula(spec, 1.5, &mut v) },
        InterdimStatus::InvalidParameter
    );
    unsafe { interdim_spec_free(spec) };
}

#[test]
fn parse_errors_carry_message() {
    let c = CString::new("family=cantor").unwrap();
    let mut spec = ptr::null_mut();
    assert_eq!(
        unsafe { interdim_spec_parse(c.as_ptr(), &mut spec) },
        InterdimStatus::Parse
    );
    assert!(spec.is_null());
    assert!(last_error().contains("family=cantor"));
    assert_eq!(
        unsafe { interdim_spec_parse(ptr::null(), &mut spec) },
        InterdimStatus::NullPointer
    );
}

#[test]
fn estimates_and_rows() {
    let spec = parse("family=fp p=1");
    let deltas: Vec<f64> = (8..=16).map(|k| 2f64.powi(-k)).collect();
    let mut est = ptr::null_mut();
    let status = unsafe { interdim_estimate(spec, 1.0, deltas.as_ptr(), deltas.len(), 10_000_000, &mut est) };
    assert_eq!(status, InterdimStatus::Ok);
    let v = unsafe { interdim_estimate_value(est) };
    assert!((v - 0.5).abs() < 0.05, "{v}");
    assert_eq!(unsafe { interdim_estimate_len(est) }, deltas.len());
    let (mut d, mut s) = (0.0, 0.0);
    assert_eq!(
        unsafe { interdim_estimate_row(est, 0, &mut d, &mut s) },
        InterdimStatus::Ok
    );
    assert_eq!(d, deltas[0]);
    assert!((0.0..=1.0).contains(&s));
    assert_eq!(
        unsafe { interdim_estimate_row(est, 99, &mut d, &mut s) },
        InterdimStatus::IndexOutOfRange
    );
    unsafe { interdim_estimate_free(est) };

    let mut est = ptr::null_mut();
    let status = unsafe { interdim_estimate(spec, 1.0, deltas.as_ptr(), deltas.len(), 10, &mut est) };
    assert_eq!(status, InterdimStatus::BudgetTooSmall);
    assert!(est.is_null());
    unsafe { interdim_spec_free(spec) };
}

#[test]
fn covers_and_certificates() {
    let spec = parse("family=concentric d=2 p=0.5");
    let mut cost = 0.0;
    assert_eq!(
        unsafe { interdim_cover_cost(spec, 2f64.powi(-10), 0.5, 1.25, &mut cost) },
        InterdimStatus::Ok
    );
    assert!(cost > 0.0 && cost.is_finite());

    let deltas: Vec<f64> = (10..=13).map(|k| 2f64.powi(-k)).collect();
    let mut upper = ptr::null_mut();
    assert_eq!(
        unsafe { interdim_upper_estimate(spec, 0.5, deltas.as_ptr(), deltas.len(), &mut upper) },
        InterdimStatus::Ok
    );
    assert!(unsafe { interdim_estimate_value(upper) } >= 1.2 - 0.01);
    unsafe { interdim_estimate_free(upper) };

    let mut cert = InterdimCertificate::default();
    let status = unsafe { interdim_certify(spec, 0.5, 1.2, deltas.as_ptr(), deltas.len(), 1000, &mut cert) };
    assert_eq!(status, InterdimStatus::Ok);
    assert_eq!(cert.supported, 1);
    assert!(cert.ratio_max <= cert.cap && cert.total_mass_min >= cert.floor);
    unsafe { interdim_spec_free(spec) };

    let spiral = parse("family=spiral p=0.5");
    let status = unsafe { interdim_certify(spiral, 0.5, 1.2, deltas.as_ptr(), deltas.len(), 1000, &mut cert) };
    assert_eq!(status, InterdimStatus::Unsupported);
    unsafe { interdim_spec_free(spiral) };
}

#[test]
fn null_handles_are_harmless() {
    unsafe {
        interdim_spec_free(ptr::null_mut());
        interdim_estimate_free(ptr::null_mut());
        assert!(interdim_estimate_value(ptr::null()).is_nan());
        assert_eq!(interdim_estimate_len(ptr::null()), 0);
    }
    let v = unsafe { CStr::from_ptr(interdim_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/interdim.h");
    let text = std::fs::read_to_string(header).unwrap();
    for name in [
        "interdim_spec_parse",
        "interdim_estimate_row",
        "interdim_certify",
        "INTERDIM_STATUS_BUDGET_TOO_SMALL",
    ] {
        assert!(text.contains(name), "{name}");
    }
    let Ok(out) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", header])
        .output()
    else {
        eprintln!("no C compiler; syntax check skipped");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
