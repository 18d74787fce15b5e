//! Drive the C entry points the way a foreign caller would: through raw
//! pointers and status codes, checking agreement with the underlying
//! library and that the generated header is usable.

use std::os::raw::c_char;
use std::path::Path;
use std::process::Command;
use std::ptr;

use sel_lab::params::{classify, DomainKind, OperatorParams, Verdict};
use sel_lab::{bessel, radial};
use sel_lab_ffi::*;

fn last_error() -> String {
    let needed = unsafe { sel_last_error(ptr::null_mut(), 0) };
    let mut buf = vec![0u8; needed];
    let written = unsafe { sel_last_error(buf.as_mut_ptr() as *mut c_char, buf.len()) };
    assert_eq!(written, needed);
    let nul = buf.iter().position(|&b| b == 0).expect("NUL terminator");
    String::from_utf8(buf[..nul].to_vec()).expect("UTF-8 message")
}

fn new_params(dim: u32, alpha: f64, b: f64, c: f64) -> *mut SelParams {
    let mut handle: *mut SelParams = ptr::null_mut();
    let status = unsafe { sel_params_new(dim, alpha, b, c, &mut handle) };
    assert_eq!(status, SelStatus::Ok);
    assert!(!handle.is_null());
    handle
}

#[test]
fn classification_matches_library() {
    let handle = new_params(3, 0.0, 0.0, 0.0);
    let direct = OperatorParams::new(3, 0.0, 0.0, 0.0).unwrap();

    for (p, want) in [(4.0, SelVerdict::GeneratesMax), (2.0, SelVerdict::GeneratesIntOnly)] {
        let mut cls = unsafe { std::mem::zeroed::<SelClassification>() };
        let status = unsafe { sel_classify(handle, p, SelDomain::WholeSpace, &mut cls) };
        assert_eq!(status, SelStatus::Ok);
        assert_eq!(cls.verdict, want);

        let lib = classify(&direct, p, DomainKind::WholeSpace).unwrap();
        assert_eq!(cls.n_over_p, lib.n_over_p);
        assert_eq!(cls.int_eq_min, lib.int_eq_min);
        assert_eq!(cls.int_eq_max, lib.int_eq_max);
        let iv = lib.interval.expect("window exists for this fixture");
        assert!(cls.has_interval);
        assert_eq!((cls.lo, cls.hi), (iv.lo, iv.hi));
        assert_eq!((cls.lo_closed, cls.hi_closed), (iv.lo_closed, iv.hi_closed));
    }

    // selfadjoint tri-state: populated only at c = alpha, p = 2
    let mut cls = unsafe { std::mem::zeroed::<SelClassification>() };
    assert_eq!(unsafe { sel_classify(handle, 2.0, SelDomain::WholeSpace, &mut cls) }, SelStatus::Ok);
    assert_eq!(cls.selfadjoint, 0);
    assert_eq!(unsafe { sel_classify(handle, 4.0, SelDomain::WholeSpace, &mut cls) }, SelStatus::Ok);
    assert_eq!(cls.selfadjoint, -1);

    // scalar accessors agree with the library
    let mut v = 0.0f64;
    assert_eq!(unsafe { sel_params_discriminant(handle, &mut v) }, SelStatus::Ok);
    assert_eq!(v, direct.discriminant());
    assert_eq!(unsafe { sel_params_s0(handle, &mut v) }, SelStatus::Ok);
    assert_eq!(v, direct.s0());
    assert_eq!(unsafe { sel_params_f_eval(handle, 0.7, &mut v) }, SelStatus::Ok);
    assert_eq!(v, direct.f_eval(0.7));

    unsafe { sel_params_free(handle) };
}

#[test]
fn verdict_enum_covers_library() {
    // one fixture per verdict the whole-space table can produce
    let cases: [(u32, f64, f64, f64, f64, SelVerdict); 5] = [
        (3, 0.0, 0.0, 0.0, 1.5, SelVerdict::GeneratesMin),
        (3, 0.0, 0.0, 0.0, 4.0, SelVerdict::GeneratesMax),
        (3, 2.0, 1.0, 0.5, 2.0, SelVerdict::Alpha2AllP),
        (2, 3.0, 0.0, 0.0, 2.0, SelVerdict::NoRealizationGenerates),
        (3, 0.0, -1.0, 0.0, 2.0, SelVerdict::NegativeDiscriminant),
    ];
    for (dim, alpha, b, c, p, want) in cases {
        let handle = new_params(dim, alpha, b, c);
        let mut cls = unsafe { std::mem::zeroed::<SelClassification>() };
        let status = unsafe { sel_classify(handle, p, SelDomain::WholeSpace, &mut cls) };
        assert_eq!(status, SelStatus::Ok);
        assert_eq!(cls.verdict, want, "fixture ({dim}, {alpha}, {b}, {c}, {p})");
        unsafe { sel_params_free(handle) };
    }

    // the closed-endpoint double-root fixture reaches GeneratesMinAndMax
    let handle = new_params(6, 0.0, -4.0, 0.0);
    let direct = OperatorParams::new(6, 0.0, -4.0, 0.0).unwrap();
    let lib = classify(&direct, 2.0, DomainKind::WholeSpace).unwrap();
    let mut cls = unsafe { std::mem::zeroed::<SelClassification>() };
    assert_eq!(unsafe { sel_classify(handle, 2.0, SelDomain::WholeSpace, &mut cls) }, SelStatus::Ok);
    assert_eq!(
        cls.verdict,
        match lib.verdict {
            Verdict::GeneratesIntOnly => SelVerdict::GeneratesIntOnly,
            Verdict::GeneratesMinAndMax => SelVerdict::GeneratesMinAndMax,
            other => panic!("unexpected library verdict {other:?}"),
        }
    );
    unsafe { sel_params_free(handle) };
}

#[test]
fn null_and_invalid_inputs_are_reported() {
    let mut cls = unsafe { std::mem::zeroed::<SelClassification>() };
    let status = unsafe { sel_classify(ptr::null(), 2.0, SelDomain::WholeSpace, &mut cls) };
    assert_eq!(status, SelStatus::NullPointer);
    assert!(last_error().contains("must not be null"), "got: {}", last_error());

    let status = unsafe { sel_params_new(3, 0.0, 0.0, 0.0, ptr::null_mut()) };
    assert_eq!(status, SelStatus::NullPointer);

    let mut handle: *mut SelParams = ptr::null_mut();
    let status = unsafe { sel_params_new(0, 0.0, 0.0, 0.0, &mut handle) };
    assert_eq!(status, SelStatus::InvalidInput);
    assert!(handle.is_null());
    assert!(last_error().contains("dimension"), "got: {}", last_error());

    let status = unsafe { sel_params_new(3, f64::NAN, 0.0, 0.0, &mut handle) };
    assert_eq!(status, SelStatus::InvalidInput);
    assert!(last_error().contains("finite"), "got: {}", last_error());

    let params = new_params(3, 2.0, 1.0, 2.0);
    let mut v = 0.0f64;
    let status = unsafe { sel_growth_exponent(params, 1.0, &mut v) };
    assert_eq!(status, SelStatus::InvalidInput);
    assert!(last_error().contains("exponent"), "got: {}", last_error());
    let status = unsafe { sel_growth_exponent(params, 2.0, &mut v) };
    assert_eq!(status, SelStatus::Ok);
    assert_eq!(v, sel_lab::evolve::growth_exponent(&OperatorParams::new(3, 2.0, 1.0, 2.0).unwrap(), 2.0));

    // classify rejects a bad exponent through the same path
    let status = unsafe { sel_classify(params, 0.5, SelDomain::WholeSpace, &mut cls) };
    assert_eq!(status, SelStatus::InvalidInput);
    unsafe { sel_params_free(params) };

    // frees tolerate null
    unsafe { sel_params_free(ptr::null_mut()) };
    unsafe { sel_radial_pair_free(ptr::null_mut()) };
}

#[test]
fn bessel_agrees_with_library_and_flags_overflow() {
    let mut out = SelBessel { i: 0.0, k: 0.0, di: 0.0, dk: 0.0 };
    assert_eq!(unsafe { sel_bessel_ik(0.3, 2.0, false, &mut out) }, SelStatus::Ok);
    let lib = bessel::bessel_ik(0.3, 2.0).unwrap();
    assert_eq!(out.i, lib.value_i);
    assert_eq!(out.k, lib.value_k);
    assert_eq!(out.di, lib.deriv_i);
    assert_eq!(out.dk, lib.deriv_k);

    let status = unsafe { sel_bessel_ik(0.0, 800.0, false, &mut out) };
    assert_eq!(status, SelStatus::NumericFailure);
    assert!(last_error().contains("overflow"), "got: {}", last_error());

    assert_eq!(unsafe { sel_bessel_ik(0.0, 800.0, true, &mut out) }, SelStatus::Ok);
    let scaled = bessel::bessel_ik_scaled(0.0, 800.0).unwrap();
    assert_eq!(out.i, scaled.i);
    assert_eq!(out.k, scaled.k);
    assert!(out.i > 0.0 && out.k > 0.0);

    let status = unsafe { sel_bessel_ik(-1.0, 2.0, false, &mut out) };
    assert_eq!(status, SelStatus::InvalidInput);
    assert!(last_error().contains("order"), "got: {}", last_error());
}

#[test]
fn radial_pair_matches_library_through_handles() {
    let params = new_params(3, 0.5, 1.0, 0.0);
    let mut pair: *mut SelRadialPair = ptr::null_mut();
    assert_eq!(unsafe { sel_radial_pair_new(params, 2.0, &mut pair) }, SelStatus::Ok);

    let direct = OperatorParams::new(3, 0.5, 1.0, 0.0).unwrap();
    let lib_pair = radial::build_pair(&direct, 2.0).unwrap();
    for r in [0.3, 1.0, 4.7] {
        let mut out = SelPairEval { u1: 0.0, du1: 0.0, u2: 0.0, du2: 0.0 };
        assert_eq!(unsafe { sel_radial_pair_eval(pair, r, &mut out) }, SelStatus::Ok);
        let lib = lib_pair.eval(r).unwrap();
        assert_eq!(out.u1, lib.u1);
        assert_eq!(out.du1, lib.du1);
        assert_eq!(out.u2, lib.u2);
        assert_eq!(out.du2, lib.du2);
        assert!(out.u1 > 0.0 && out.u2 > 0.0);
    }

    // deep exponential regime overflows the plain values
    let mut out = SelPairEval { u1: 0.0, du1: 0.0, u2: 0.0, du2: 0.0 };
    let status = unsafe { sel_radial_pair_eval(pair, 4000.0, &mut out) };
    assert_eq!(status, SelStatus::NumericFailure);
    assert!(last_error().contains("overflow"), "got: {}", last_error());

    unsafe { sel_radial_pair_free(pair) };

    // construction rejects the oscillatory regime with a diagnostic
    let neg = new_params(3, 0.0, -1.0, 0.0);
    let mut pair2: *mut SelRadialPair = ptr::null_mut();
    let status = unsafe { sel_radial_pair_new(neg, 1.0, &mut pair2) };
    assert_eq!(status, SelStatus::InvalidInput);
    assert!(pair2.is_null());
    assert!(last_error().contains("discriminant"), "got: {}", last_error());
    unsafe { sel_params_free(neg) };
    unsafe { sel_params_free(params) };
}

#[test]
fn oscillation_witness_is_strictly_negative() {
    let params = new_params(3, 0.0, -1.0, 0.0);
    let mut w = SelWitness { s: 0.0, value: 0.0 };
    assert_eq!(unsafe { sel_oscillation_witness(params, 1.0, &mut w) }, SelStatus::Ok);
    assert!(w.value <= -1e-6, "witness value {} not negative enough", w.value);
    assert!(w.s.is_finite());
    unsafe { sel_params_free(params) };

    // positive-discriminant coefficients have nothing to witness
    let pos = new_params(3, 0.0, 0.0, 0.0);
    let status = unsafe { sel_oscillation_witness(pos, 1.0, &mut w) };
    assert_eq!(status, SelStatus::InvalidInput);
    unsafe { sel_params_free(pos) };
}

#[test]
fn header_is_generated_and_c_parseable() {
    let include_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let header = include_dir.join("sel_lab.h");
    let text = std::fs::read_to_string(&header).expect("header generated by the build script");
    for needle in [
        "SEL_LAB_H",
        "typedef struct SelParams SelParams;",
        "typedef struct SelRadialPair SelRadialPair;",
        "SelStatus_NumericFailure = 3",
        "enum SelStatus sel_classify(",
        "uintptr_t sel_last_error(",
    ] {
        assert!(text.contains(needle), "header is missing `{needle}`");
    }

    // if a C compiler is around, make it parse the header for real
    let scratch = std::env::temp_dir().join(format!("sel_lab_hdr_{}.c", std::process::id()));
    std::fs::write(
        &scratch,
        "#include \"sel_lab.h\"\nint main(void) { SelClassification c; (void)c; return SelStatus_Ok; }\n",
    )
    .unwrap();
    match Command::new("cc")
        .arg("-fsyntax-only")
        .arg("-I")
        .arg(&include_dir)
        .arg(&scratch)
        .output()
    {
        Ok(out) => {
            assert!(
                out.status.success(),
                "cc rejected the header:\n{}",
                String::from_utf8_lossy(&out.stderr)
            );
        }
        Err(_) => eprintln!("no C compiler on PATH; skipped the syntax check"),
    }
    let _ = std::fs::remove_file(&scratch);
}
