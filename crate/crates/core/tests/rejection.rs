mod common;

use common::frozen::*;
use common::*;
use driftrate::bellman::{solve, SolverSettings, SystemParams, EPS_RESIDUAL};
use driftrate::cost_model::CostModel;
use driftrate::policy::{ConstantPolicy, FnPolicy};
use driftrate::rejection::*;

fn unit() -> SystemParams {
    SystemParams::new(1.0, 1.0).unwrap()
}

fn beta_at(m: &CostModel, sys: &SystemParams, p: f64) -> f64 {
    let sol = solve(m, &sys.with_p(p).unwrap(), &SolverSettings::default()).unwrap();
    rejection_report(m, &sol).unwrap().beta
}

#[test]
fn constant_policy_examples() {
    let sys = unit();
    let r = analyze_policy(&ConstantPolicy(0.0), &sys, 1025, 1e-12).unwrap();
    assert!(rel(r.beta, 0.5) < 1e-12);
    let r = analyze_policy(&ConstantPolicy(1.0), &sys, 1025, 1e-12).unwrap();
    assert!(rel(r.beta, INV_E2_MINUS_1) < 1e-12);
    assert!(rel(constant_drift_rate(1.0, &sys), INV_E2_MINUS_1) < 1e-15);
    assert_eq!(constant_drift_rate(0.0, &sys), 0.5);

    for (theta, sigma2, b) in [(-3.0, 1.0, 1.0), (0.7, 0.4, 2.0), (40.0, 1.0, 1.0), (1e-10, 1.0, 1.0)] {
        let sys = SystemParams::new(sigma2, b).unwrap();
        let exact = constant_beta(theta, sigma2, b);
        assert!(rel(constant_drift_rate(theta, &sys), exact) < 1e-12, "θ={theta}");
        let r = analyze_policy(&ConstantPolicy(theta), &sys, 1025, 1e-12).unwrap();
        assert!(rel(r.beta, exact) < 1e-10, "θ={theta}: {} vs {exact}", r.beta);
    }
}

#[test]
fn strong_drift_does_not_overflow() {
    let sys = unit();
    let r = analyze_policy(&ConstantPolicy(500.0), &sys, 1025, 1e-12).unwrap();
    assert!(r.beta.is_finite() && r.beta >= 0.0);
    assert!(r.beta < 1e-300 || rel(r.beta, constant_beta(500.0, 1.0, 1.0)) < 1e-10);
    let r = analyze_policy(&ConstantPolicy(-500.0), &sys, 1025, 1e-12).unwrap();
    assert!(rel(r.beta, 500.0) < 1e-10);
}

#[test]
fn u_examples() {
    let sys = SystemParams::new(1.0, 2.0).unwrap();
    let r = analyze_policy(&ConstantPolicy(0.0), &sys, 257, 1e-12).unwrap();
    assert_eq!(r.u[0], 0.0);
    assert!((r.u.last().unwrap() - 1.0).abs() <= EPS_RESIDUAL);
    for (z, u) in r.z.iter().zip(&r.u) {
        assert!((u - z / 2.0).abs() < 1e-13);
    }
    let wavy = FnPolicy(|z: f64| (3.0 * z).sin());
    let r = analyze_policy(&wavy, &sys, 1025, 1e-12).unwrap();
    assert_eq!(r.u[0], 0.0);
    assert!((r.u.last().unwrap() - 1.0).abs() <= EPS_RESIDUAL);
    assert!(r.u_residual_max <= EPS_RESIDUAL);
}

#[test]
fn bound_examples() {
    let sys = unit();
    let (upper, lower) = beta_bounds(&exp_model(1.0, 0.0), &sys);
    assert_eq!(upper, 0.5);
    assert_eq!(lower, 0.0);

    let m = driftrate::cost_model::validate(
        &driftrate::cost_model::ActionSet::interval(1.0, 2.0),
        &driftrate::cost_model::CostSpec::new(vec![driftrate::cost_model::CostPiece::Linear {
            slope: 1.0,
            intercept: -1.0,
        }]),
    )
    .unwrap();
    let (upper, lower) = beta_bounds(&m, &sys);
    assert!(rel(lower, TWO_OVER_E4_MINUS_1) < 1e-14);
    assert!(rel(upper, INV_E2_MINUS_1) < 1e-14);

    let sys = SystemParams::new(0.5, 3.0).unwrap();
    assert_eq!(beta_bounds(&singleton(0.0), &sys).0, 0.5 / 6.0);
}

#[test]
fn duality_gap_examples() {
    let sys = unit();
    for theta in [-1.0, 0.0, 1.0] {
        for p in [0.5, 3.0] {
            let m = singleton(theta);
            let sol = solve(&m, &sys.with_p(p).unwrap(), &SolverSettings::default()).unwrap();
            let rep = rejection_report(&m, &sol).unwrap();
            assert!(rep.gap.abs() < 1e-9 * sol.gamma.abs().max(1.0), "θ={theta}, p={p}: {}", rep.gap);
        }
    }
    let m = exp_model(1.0, 0.0);
    for (p, _, _) in EXP_CASES.iter().skip(1) {
        let sol = solve(&m, &sys.with_p(*p).unwrap(), &SolverSettings::default()).unwrap();
        assert!(rejection_report(&m, &sol).unwrap().gap > 0.0);
    }
    assert!(check_duality_gap(1.0, 0.5, 2.0).is_ok());
    assert!(check_duality_gap(1.0, 0.6, 2.0).is_err());
}

#[test]
fn beta_matches_frozen_and_oracle_values() {
    let sys = unit();
    let m = exp_model(1.0, 0.0);
    for (p, gamma, beta) in EXP_CASES {
        let b = beta_at(&m, &sys, p);
        assert!(rel(b, beta) < 1e-9, "p={p}: {b} vs {beta}");
        let oracle = beta_oracle(|u| exp_phi(1.0, 0.0, u), &[1.0], gamma, p);
        assert!(rel(b, oracle) < 1e-9);
    }
    for m in [point_and_interval(), exp_model(2.0, -0.5)] {
        for p in [0.7, 3.0, 12.0] {
            let sol = solve(&m, &sys.with_p(p).unwrap(), &SolverSettings::default()).unwrap();
            let rep = rejection_report(&m, &sol).unwrap();
            let oracle = beta_oracle(|u| m.phi(u), m.breakpoints(), sol.gamma, p);
            assert!(rel(rep.beta, oracle) < 1e-8, "p={p}: {} vs {oracle}", rep.beta);
        }
    }
}

#[test]
fn report_invariants() {
    let sys = SystemParams::new(0.8, 1.5).unwrap();
    for m in [exp_model(1.0, 0.0), point_and_interval(), two_point(0.5), exp_model(0.5, -1.0)] {
        for p in [0.2, 2.0, 9.0] {
            let sol = solve(&m, &sys.with_p(p).unwrap(), &SolverSettings::default()).unwrap();
            let rep = rejection_report(&m, &sol).unwrap();
            assert_eq!(rep.u[0], 0.0);
            assert!((rep.u.last().unwrap() - 1.0).abs() <= EPS_RESIDUAL);
            assert!(rep.beta_lower <= rep.beta && rep.beta <= rep.beta_upper * (1.0 + 1e-12));
            assert!(sol.gamma - p * rep.beta >= -EPS_RESIDUAL * sol.gamma.abs().max(1.0));
            assert_eq!(rep.p0, m.p_zero());
        }
    }
}

#[test]
fn constant_theta_star_matches_upper_bound() {
    for (sigma2, b) in [(1.0, 1.0), (0.3, 2.0)] {
        let sys = SystemParams::new(sigma2, b).unwrap();
        for m in [exp_model(1.0, 0.4), point_and_interval(), exp_model(1.0, -2.0)] {
            let r = analyze_policy(&ConstantPolicy(m.theta_min()), &sys, 1025, 1e-12).unwrap();
            assert!((r.beta - beta_bounds(&m, &sys).0).abs() <= EPS_RESIDUAL);
        }
    }
}

#[test]
fn beta_nonincreasing_and_flat_below_p0() {
    let sys = unit();
    for m in [exp_model(1.0, 0.0), point_and_interval(), two_point(0.5)] {
        let p0 = m.p_zero();
        let (upper, _) = beta_bounds(&m, &sys);
        let mut prev = f64::INFINITY;
        for p in log_grid(1e-3, 1e3, 40) {
            let b = beta_at(&m, &sys, p);
            assert!(b <= prev * (1.0 + 1e-10), "β increased at p={p}");
            if p <= p0 {
                assert!(rel(b, upper) < 1e-10, "β not flat at p={p} ≤ p0");
            }
            prev = b;
        }
    }
}

#[test]
fn limits_approach_the_bounds() {
    let sys = unit();
    let m = exp_model(1.0, 0.0);
    let (upper, _) = beta_bounds(&m, &sys);
    assert!(rel(beta_at(&m, &sys, 1e-3), upper) < 0.01);

    // Bounded action set {0, 1}: β(10⁶) sits at θ* = 1.
    let m = two_point(0.5);
    let (upper, lower) = beta_bounds(&m, &sys);
    assert!(rel(beta_at(&m, &sys, 1e-3), upper) < 0.01);
    assert!(rel(beta_at(&m, &sys, 1e6), lower) < 0.01);
}
