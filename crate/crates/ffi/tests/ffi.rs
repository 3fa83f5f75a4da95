use std::ffi::{CStr, CString};
use std::ptr;

use driftrate_ffi::*;

const EXP: &str = r#"
[model]
domain = [[0.0, inf]]
cost = [{ kind = "exponential", alpha = 1.0 }]
[params]
sigma2 = 1.0
b = 1.0
"#;

fn last_error() -> String {
    unsafe { CStr::from_ptr(dr_last_error_message()) }.to_string_lossy().into_owned()
}

fn model(toml: &str) -> Result<*mut DrModel, (DrStatus, String)> {
    let text = CString::new(toml).unwrap();
    let mut m = ptr::null_mut();
    match unsafe { dr_model_from_toml(text.as_ptr(), &mut m) } {
        DrStatus::Ok => Ok(m),
        s => Err((s, last_error())),
    }
}

fn solve(m: *const DrModel, p: f64) -> *mut DrSolution {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { dr_solve(m, 1.0, 1.0, p, 0, &mut s) }, DrStatus::Ok, "{}", last_error());
    s
}

#[test]
fn conjugate_queries() {
    let m = model(EXP).unwrap();
    let mut x = 0.0;
    unsafe {
        assert_eq!(dr_model_psi(m, std::f64::consts::E, &mut x), DrStatus::Ok);
        assert!((x - 1.0).abs() < 1e-15);
        assert_eq!(dr_model_phi(m, 2.0, &mut x), DrStatus::Ok);
        assert!((x - 0.386_294_361_119_890_6).abs() < 1e-15);
        assert_eq!(dr_model_p_zero(m, &mut x), DrStatus::Ok);
        assert!((x - 1.0).abs() < 1e-14);
        assert_eq!(dr_model_eval_cost(m, 1.0, &mut x), DrStatus::Ok);
        assert!((x - 1.718_281_828_459_045).abs() < 1e-15);
        assert!(last_error().is_empty());
        assert_eq!(dr_model_eval_cost(m, -1.0, &mut x), DrStatus::InvalidArgument);
        assert!(!last_error().is_empty());
        let (mut s2, mut b) = (0.0, 0.0);
        assert_eq!(dr_model_system(m, &mut s2, &mut b), DrStatus::Ok);
        assert_eq!((s2, b), (1.0, 1.0));
        dr_model_free(m);
    }
}

#[test]
fn solve_and_copy_grid() {
    let m = model(EXP).unwrap();
    let s = solve(m, 5.0);
    let mut sum = DrSummary::default();
    unsafe {
        assert_eq!(dr_solution_summary(s, &mut sum), DrStatus::Ok);
        assert!((sum.gamma - 1.723_351_199_867_109_8).abs() < 1e-9);
        assert!((sum.beta - 0.190_438_494_740_580_27).abs() < 1e-9);
        assert!(sum.residual_max <= 1e-6);
        assert_eq!(sum.n_z, 1025);

        let mut short = vec![0.0; 10];
        assert_eq!(
            dr_solution_grid(s, short.as_mut_ptr(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), 10),
            DrStatus::BufferTooSmall
        );
        let n = sum.n_z;
        let (mut z, mut v, mut th) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        assert_eq!(
            dr_solution_grid(s, z.as_mut_ptr(), v.as_mut_ptr(), ptr::null_mut(), th.as_mut_ptr(), n),
            DrStatus::Ok
        );
        assert_eq!((z[0], z[n - 1]), (0.0, 1.0));
        assert_eq!((v[0], v[n - 1]), (0.0, 5.0));
        assert!(th.windows(2).all(|w| w[1] >= w[0]));

        let mut t = 0.0;
        assert_eq!(dr_solution_policy(s, 1.0, &mut t), DrStatus::Ok);
        assert!((t - 5f64.ln()).abs() < 1e-9);
        assert_eq!(dr_solution_policy(s, 1.5, &mut t), DrStatus::InvalidArgument);
        dr_solution_free(s);
        dr_model_free(m);
    }
}

#[test]
fn constrained_round_trip_and_infeasible_budget() {
    let m = model(EXP).unwrap();
    let s = solve(m, 5.0);
    let mut sum = DrSummary::default();
    let mut d = DrDual::default();
    unsafe {
        dr_solution_summary(s, &mut sum);
        assert_eq!(dr_solve_pstar(m, 1.0, 1.0, sum.beta, &mut d), DrStatus::Ok);
        assert_eq!(d.binding, 1);
        assert!((d.p_star - 5.0).abs() <= 5e-6);
        dr_solution_free(s);
        dr_model_free(m);
    }
    let two = model(
        "[model]\ndomain = [0.0, 1.0]\ncost = [{ kind = \"constant\", value = 0.0 }, { kind = \"constant\", value = 0.5 }]\n\
         [params]\nsigma2 = 1.0\nb = 1.0\n",
    )
    .unwrap();
    unsafe {
        assert_eq!(dr_solve_pstar(two, 1.0, 1.0, 0.1, &mut d), DrStatus::Infeasible);
        assert!(last_error().contains("beta_hat"));
        dr_model_free(two);
    }
}

#[test]
fn configuration_errors() {
    let (s, msg) = model("[model\n").unwrap_err();
    assert_eq!(s, DrStatus::Parse, "{msg}");
    let (s, msg) = model(
        "[model]\ndomain = [[0.0, inf]]\ncost = [{ kind = \"linear\", slope = 1.0 }]\n[params]\nsigma2 = 1.0\nb = 1.0\n",
    )
    .unwrap_err();
    assert_eq!(s, DrStatus::Model);
    assert!(msg.contains("growth condition"), "{msg}");
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { dr_model_from_toml(ptr::null(), &mut m) }, DrStatus::NullPointer);
    assert_eq!(unsafe { dr_model_wireless(0.0, 0.2, 1.0, 1.0, 0.0, &mut m) }, DrStatus::InvalidArgument);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { dr_solve(ptr::null(), 1.0, 1.0, 1.0, 0, &mut s) }, DrStatus::NullPointer);
    // Freeing null is a no-op.
    unsafe {
        dr_model_free(ptr::null_mut());
        dr_solution_free(ptr::null_mut());
    }
}

#[test]
fn wireless_model_and_simulation() {
    let mut m = ptr::null_mut();
    let (mut s2, mut b) = (0.0, 0.0);
    unsafe {
        assert_eq!(dr_model_wireless(10.0, 0.2, 1.0, 1.0, 0.0, &mut m), DrStatus::Ok);
        assert_eq!(dr_model_system(m, &mut s2, &mut b), DrStatus::Ok);
        assert_eq!(s2, 1.0);
        assert!((b - 2.0).abs() < 1e-15);
        let mut s = ptr::null_mut();
        assert_eq!(dr_solve(m, s2, b, 3.0, 257, &mut s), DrStatus::Ok);
        let cfg = DrSimConfig { horizon: 2000.0, n_reps: 16, seed: 3, ..dr_sim_config_default() };
        let mut out = DrSimSummary::default();
        assert_eq!(dr_simulate(s, &cfg, &mut out), DrStatus::Ok);
        assert_eq!(out.passed, 1);
        assert!(out.avg_cost_se > 0.0);
        let bad = DrSimConfig { dt: 1.0, ..cfg };
        assert_eq!(dr_simulate(s, &bad, &mut out), DrStatus::InvalidArgument);
        dr_solution_free(s);
        dr_model_free(m);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(dr_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
