use std::ffi::CStr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use glb_omd_ffi::*;

const LOGISTIC: u32 = GlbFamily::Logistic as u32;
const POISSON: u32 = GlbFamily::Poisson as u32;
const GAUSSIAN: u32 = GlbFamily::Gaussian as u32;
const PRACTICAL: u32 = GlbLambdaMode::Practical as u32;
const THEORY: u32 = GlbLambdaMode::Theory as u32;

fn last_error() -> String {
    unsafe { CStr::from_ptr(glb_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn new_policy(kind: GlbPolicyKind, family: u32, d: usize) -> *mut GlbPolicy {
    let mut p = ptr::null_mut();
    let st = unsafe {
        glb_policy_new(
            kind as u32,
            family,
            0.0,
            d,
            2.0,
            0.1,
            PRACTICAL,
            1.0,
            &mut p,
        )
    };
    assert_eq!(st, GlbStatus::Ok, "{}", last_error());
    assert!(!p.is_null());
    p
}

#[test]
fn policy_round_trip() {
    for kind in [
        GlbPolicyKind::GlbOmd,
        GlbPolicyKind::GlmUcb,
        GlbPolicyKind::Greedy,
    ] {
        let p = new_policy(kind, LOGISTIC, 2);
        let arms = [1.0, 0.0, 0.0, 1.0, -0.6, 0.8];
        let mut d = 0usize;
        unsafe {
            assert_eq!(glb_policy_dim(p, &mut d), GlbStatus::Ok);
            assert_eq!(d, 2);
            for t in 0..40 {
                let mut idx = usize::MAX;
                assert_eq!(
                    glb_policy_select(p, arms.as_ptr(), 3, &mut idx),
                    GlbStatus::Ok
                );
                assert!(idx < 3);
                let r = if t % 3 == 0 { 1.0 } else { 0.0 };
                assert_eq!(
                    glb_policy_observe(p, arms[2 * idx..].as_ptr(), 2, r),
                    GlbStatus::Ok
                );
            }
            let mut theta = [f64::NAN; 2];
            assert_eq!(glb_policy_estimate(p, theta.as_mut_ptr(), 2), GlbStatus::Ok);
            assert!(theta.iter().all(|v| v.is_finite()));
            let mut beta = -1.0;
            assert_eq!(glb_policy_beta(p, &mut beta), GlbStatus::Ok);
            if kind == GlbPolicyKind::Greedy {
                assert_eq!(beta, 0.0);
            } else {
                assert!(beta > 0.0);
            }
            glb_policy_free(p);
        }
    }
}

#[test]
fn error_codes() {
    let mut p = ptr::null_mut();
    unsafe {
        assert_eq!(
            glb_policy_new(0, 9, 0.0, 2, 1.0, 0.1, PRACTICAL, 1.0, &mut p),
            GlbStatus::InvalidArgument
        );
        assert!(last_error().contains("family"));
        assert!(p.is_null());
        assert_eq!(
            glb_policy_new(7, LOGISTIC, 0.0, 2, 1.0, 0.1, PRACTICAL, 1.0, &mut p),
            GlbStatus::InvalidArgument
        );
        assert_eq!(
            glb_policy_new(0, LOGISTIC, 0.0, 2, -1.0, 0.1, PRACTICAL, 1.0, &mut p),
            GlbStatus::Config
        );
        assert_eq!(
            glb_policy_new(0, LOGISTIC, 0.0, 2, 1.0, 2.0, PRACTICAL, 1.0, &mut p),
            GlbStatus::Config
        );
        assert_eq!(
            glb_policy_new(0, LOGISTIC, 0.0, 2, 1.0, 0.1, 5, 1.0, &mut p),
            GlbStatus::InvalidArgument
        );
        assert_eq!(
            glb_policy_new(
                0,
                LOGISTIC,
                0.0,
                2,
                1.0,
                0.1,
                PRACTICAL,
                1.0,
                ptr::null_mut()
            ),
            GlbStatus::NullPointer
        );

        let p = new_policy(GlbPolicyKind::GlbOmd, LOGISTIC, 2);
        let big = [2.0, 0.0];
        let mut idx = 0usize;
        assert_eq!(
            glb_policy_select(p, big.as_ptr(), 1, &mut idx),
            GlbStatus::Contract
        );
        assert!(last_error().contains("norm"));
        assert_eq!(
            glb_policy_select(p, big.as_ptr(), 0, &mut idx),
            GlbStatus::Contract
        );
        assert_eq!(
            glb_policy_select(p, ptr::null(), 1, &mut idx),
            GlbStatus::NullPointer
        );
        assert_eq!(
            glb_policy_select(ptr::null(), big.as_ptr(), 1, &mut idx),
            GlbStatus::NullPointer
        );
        let x = [0.5, 0.5];
        assert_eq!(
            glb_policy_observe(p, x.as_ptr(), 3, 1.0),
            GlbStatus::InvalidArgument
        );
        assert_eq!(
            glb_policy_observe(p, x.as_ptr(), 2, f64::NAN),
            GlbStatus::Contract
        );
        let mut buf = [0.0; 3];
        assert_eq!(
            glb_policy_estimate(p, buf.as_mut_ptr(), 3),
            GlbStatus::InvalidArgument
        );
        assert_eq!(glb_policy_observe(p, x.as_ptr(), 2, 1.0), GlbStatus::Ok);
        assert_eq!(last_error(), "");
        glb_policy_free(p);
        glb_policy_free(ptr::null_mut());
    }
}

#[test]
fn link_helpers() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(glb_link_mu(LOGISTIC, 0.0, 3.0, &mut v), GlbStatus::Ok);
        assert!((v - 0.952_574_126_822_433_2).abs() < 1e-15);
        assert_eq!(glb_link_mu_prime(LOGISTIC, 0.0, 3.0, &mut v), GlbStatus::Ok);
        assert!((v - 0.045_176_659_730_912_13).abs() < 1e-15);
        assert_eq!(glb_link_mu(POISSON, 0.0, 3.0, &mut v), GlbStatus::Ok);
        assert!((v - 20.085_536_923_187_668).abs() < 1e-12);
        assert_eq!(glb_kappa(LOGISTIC, 0.0, 3.0, &mut v), GlbStatus::Ok);
        assert!((v - 22.135_323_991_555_53).abs() < 1e-10);
        assert_eq!(glb_link_mu(GAUSSIAN, 4.0, 1.5, &mut v), GlbStatus::Ok);
        assert_eq!(v, 1.5);
        assert_eq!(glb_link_mu(LOGISTIC, 2.0, 0.0, &mut v), GlbStatus::Config);
        assert_eq!(
            glb_link_mu(LOGISTIC, 0.0, f64::NAN, &mut v),
            GlbStatus::Domain
        );
        assert_eq!(
            glb_link_mu(LOGISTIC, 0.0, 0.0, ptr::null_mut()),
            GlbStatus::NullPointer
        );
        assert_eq!(
            glb_beta_radius(LOGISTIC, 0.0, 2, 1.0, 0.1, THEORY, 100, &mut v),
            GlbStatus::Ok
        );
        assert!(v.is_finite() && v > 0.0);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(glb_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("include")
        .join("glb_omd.h")
}

#[test]
fn header_declares_the_api() {
    let text = std::fs::read_to_string(header()).unwrap();
    for name in [
        "glb_policy_new",
        "glb_policy_free",
        "glb_policy_dim",
        "glb_policy_select",
        "glb_policy_observe",
        "glb_policy_beta",
        "glb_policy_estimate",
        "glb_link_mu",
        "glb_link_mu_prime",
        "glb_kappa",
        "glb_beta_radius",
        "glb_last_error_message",
        "glb_version",
        "typedef struct GlbPolicy GlbPolicy;",
        "GLB_STATUS_OK = 0",
        "GLB_FAMILY_POISSON = 1",
        "GLB_POLICY_KIND_GLM_UCB = 1",
        "GLB_LAMBDA_MODE_PRACTICAL = 1",
    ] {
        assert!(text.contains(name), "header is missing {name}");
    }
}

/// Compiles and runs a C program against the header and the static library.
#[test]
fn c_program_links_and_runs() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler `{cc}` found; C smoke test not run");
        return;
    }
    let exe = std::env::current_exe().unwrap();
    let target_dir = exe.parent().unwrap().parent().unwrap();
    let lib = target_dir.join("libglb_omd_ffi.a");
    assert!(
        lib.exists(),
        "static library not found at {}",
        lib.display()
    );
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let src = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("smoke.c");
    let status = Command::new(&cc)
        .arg(&src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
