use std::ffi::CString;
use std::ptr;

use stefan_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 512];
    let n = unsafe { stefan_last_error(buf.as_mut_ptr(), buf.len()) };
    assert!(n >= 1);
    unsafe { std::ffi::CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn enthalpy_handle_round_trip() {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { stefan_enthalpy_new(1.0, 0.1, StefanKernel::Biweight, &mut h) }, StefanStatus::Ok);
    assert!(!h.is_null());
    for s in [-2.0, -0.05, 0.0, 0.03, 1.5] {
        let mut w = 0.0;
        let mut back = 0.0;
        let mut d = 0.0;
        unsafe {
            assert_eq!(stefan_enthalpy_beta(h, s, &mut w), StefanStatus::Ok);
            assert_eq!(stefan_enthalpy_invert(h, w, 1e-13, &mut back), StefanStatus::Ok);
            assert_eq!(stefan_enthalpy_beta_deriv(h, s, &mut d), StefanStatus::Ok);
        }
        assert!((back - s).abs() < 1e-10, "{s} -> {w} -> {back}");
        assert!(d >= 1.0);
    }
    // far from the regularization band β is s or s − ν
    let mut w = 0.0;
    unsafe { stefan_enthalpy_beta(h, -2.0, &mut w) };
    assert_eq!(w, -3.0);
    unsafe { stefan_enthalpy_free(h) };
    unsafe { stefan_enthalpy_free(ptr::null_mut()) };
}

#[test]
fn invalid_arguments_set_last_error() {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { stefan_enthalpy_new(1.0, 2.0, StefanKernel::Triweight, &mut h) }, StefanStatus::InvalidArgument);
    assert!(h.is_null());
    assert!(last_error().contains("mollification width"), "{}", last_error());
    assert_eq!(unsafe { stefan_enthalpy_beta(ptr::null(), 0.0, ptr::null_mut()) }, StefanStatus::NullPointer);
    assert!(last_error().contains("null"));
    let needed = unsafe { stefan_last_error(ptr::null_mut(), 0) };
    assert_eq!(needed, last_error().len() + 1);
}

#[test]
fn domain_build_and_certify() {
    let spec = CString::new(r#"{"shape": "l_shape", "size": 1.0}"#).unwrap();
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { stefan_domain_build(spec.as_ptr(), 1.0 / 64.0, &mut d) }, StefanStatus::Ok);
    let mut n = 0;
    unsafe { stefan_domain_len(d, &mut n) };
    assert_eq!(n, 3 * 32 * 32);
    let radii = [0.125];
    let (mut a, mut r) = (0.0, 0.0);
    assert_eq!(unsafe { stefan_domain_certify(d, radii.as_ptr(), 1, &mut a, &mut r) }, StefanStatus::Ok);
    assert!((a - 0.25).abs() <= 2.0 / 64.0 / 0.125, "{a}");
    assert_eq!(r, 0.125);
    unsafe { stefan_domain_free(d) };

    let bad = CString::new(r#"{"shape": "circle"}"#).unwrap();
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { stefan_domain_build(bad.as_ptr(), 0.1, &mut d) }, StefanStatus::ConfigInvalid);
    assert!(d.is_null());
}

#[test]
fn scalar_entry_points() {
    let mut lambda = 0.0;
    assert_eq!(unsafe { stefan_stefan1d_lambda(1.0, 1e-12, &mut lambda) }, StefanStatus::Ok);
    assert!((lambda - 0.6200626333).abs() < 1e-9);

    let mut conv = -1;
    assert_eq!(unsafe { stefan_degiorgi_verdict(2.0, 4.0, 1.0, 0.125, 60, &mut conv) }, StefanStatus::Ok);
    assert_eq!(conv, 1);
    assert_eq!(unsafe { stefan_degiorgi_verdict(2.0, 4.0, 1.0, 0.5, 60, &mut conv) }, StefanStatus::Ok);
    assert_eq!(conv, 0);

    let mut omega = vec![0.0; 101];
    assert_eq!(unsafe { stefan_type_ii_iterate(0.5, 1.0, 0.5, omega.as_mut_ptr(), omega.len()) }, StefanStatus::Ok);
    assert_eq!(omega[0], 0.5);
    assert_eq!(omega[1], 0.5 * (1.0 - 0.25));
    assert!(omega.windows(2).all(|w| w[1] < w[0]));

    let r: Vec<f64> = (4..=20).map(|k| 2f64.powi(-k)).collect();
    let osc: Vec<f64> = r.iter().map(|x| 2.0 * (1.0 / x).ln().powf(-0.5)).collect();
    let mut fit = StefanFit::default();
    assert_eq!(
        unsafe { stefan_fit_modulus(StefanModel::TypeII, r.as_ptr(), osc.as_ptr(), r.len(), 1.0, &mut fit) },
        StefanStatus::Ok
    );
    assert!((fit.c - 2.0).abs() < 1e-9 && (fit.exponent - 0.5).abs() < 1e-9);
    let zeros = vec![0.0; r.len()];
    assert_eq!(
        unsafe { stefan_fit_modulus(StefanModel::Hoelder, r.as_ptr(), zeros.as_ptr(), r.len(), 1.0, &mut fit) },
        StefanStatus::FitRejected
    );
}

#[test]
fn run_experiment_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    std::fs::write(
        &cfg_path,
        r#"{
            "problem": {
                "domain": {"shape": "interval", "a": 0.0, "b": 1.0},
                "p": 2.0, "nu": 1.0, "eps": 0.01,
                "boundary": {
                    "condition": {"kind": "dirichlet", "g": {"kind": "constant", "value": 0.5}},
                    "initial": {"kind": "constant", "value": -0.5}
                },
                "t_final": 0.05
            },
            "solver": {"h": 0.05, "dt": 0.01}
        }"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let c_cfg = CString::new(cfg_path.to_str().unwrap()).unwrap();
    let c_out = CString::new(out.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { stefan_run_experiment(c_cfg.as_ptr(), StefanCommand::Solve, c_out.as_ptr(), 7) }, StefanStatus::Ok);
    assert!(out.join("manifest.json").exists());
    assert!(out.join("steps.csv").exists());

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, std::fs::read_to_string(&cfg_path).unwrap().replace("\"p\": 2.0", "\"p\": 1.5")).unwrap();
    let c_bad = CString::new(bad.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { stefan_run_experiment(c_bad.as_ptr(), StefanCommand::Solve, c_out.as_ptr(), 7) }, StefanStatus::ConfigInvalid);
    assert!(last_error().contains("p must be >= 2"));
    assert_eq!(unsafe { stefan_run_experiment(ptr::null(), StefanCommand::Run, ptr::null(), 0) }, StefanStatus::NullPointer);
}
