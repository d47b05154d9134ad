use ctsched::controllers::{
    bcc_compute, integral_step, pi_step, psc_select, CascadeGains, ControllerState, PiState, SetPoints,
};
use ctsched::hartstone::baseline_set;
use ctsched::metrics::{busy_shares, OpCounts};
use ctsched::{run_simulation, PolicyConfig, SimConfig};

#[test]
fn pi_zero_error_holds_output() {
    let g = CascadeGains::default();
    let mut s = PiState {
        output_prev: 750.0,
        error_prev: 0.0,
    };
    for _ in 0..50 {
        let (next, u) = pi_step(s, 0.0, &g);
        assert_eq!(u, 750.0);
        s = next;
    }
}

#[test]
fn pi_unit_step_increments() {
    let g = CascadeGains::default();
    let (s1, u1) = pi_step(PiState::default(), 1.0, &g);
    let (_, u2) = pi_step(s1, 1.0, &g);
    assert!((u1 - 1.4).abs() < 1e-15);
    assert!((u2 - u1 - 0.168).abs() < 1e-12);
}

#[test]
fn pi_constant_error_slope() {
    let g = CascadeGains::default();
    let e = 3.0;
    let mut s = PiState::default();
    let mut prev = 0.0;
    let mut last_inc = 0.0;
    for _ in 0..100 {
        let (n, u) = pi_step(s, e, &g);
        last_inc = u - prev;
        prev = u;
        s = n;
    }
    assert!((last_inc - 0.168 * e).abs() < 1e-9);
}

#[test]
fn integral_accumulation_and_freeze() {
    let mut c = 0.0;
    let mut out = Vec::new();
    for _ in 0..3 {
        c = integral_step(c, 1.0, 0.25, false);
        out.push(c);
    }
    assert_eq!(out, vec![0.25, 0.5, 0.75]);

    let mut c = 0.0;
    let mut out = Vec::new();
    for clamped in [false, true, false] {
        c = integral_step(c, 1.0, 0.25, clamped);
        out.push(c);
    }
    assert_eq!(out, vec![0.25, 0.25, 0.5]);
    assert_eq!(integral_step(0.4, 0.0, 0.25, false), 0.4);
}

#[test]
fn feedforward_first_budgets() {
    let sp = SetPoints::new(1000.0, vec![0.5, 0.5]).unwrap();
    let mut st = ControllerState::new(&sp);
    let out = bcc_compute(&mut st, &sp, &CascadeGains::default(), None, &mut OpCounts::default());
    assert_eq!(out.budgets, vec![500, 500]);
}

#[test]
fn psc_rotation_examples() {
    let sp = SetPoints::new(10.0, vec![0.5, 0.25, 0.25]).unwrap();
    let mut st = ControllerState::new(&sp);
    let s = psc_select(&[3, 0, 5], &mut st, 0, &mut OpCounts::default());
    let order: Vec<(usize, i64)> = s.entries.iter().map(|e| (e.task, e.budget)).collect();
    assert_eq!(order, vec![(0, 3), (2, 5)]);
    let s = psc_select(&[3, 0, 5], &mut st, 1, &mut OpCounts::default());
    let order: Vec<(usize, i64)> = s.entries.iter().map(|e| (e.task, e.budget)).collect();
    assert_eq!(order, vec![(2, 5), (0, 3)]);
}

#[test]
fn baseline_settles_by_round_fifty() {
    let specs = baseline_set();
    let mut p = PolicyConfig::cascade(2000.0).build(&specs).unwrap();
    let trace = run_simulation(&specs, p.as_mut(), &SimConfig::new(2000 * 120)).unwrap();
    for r in &trace.records[49..100] {
        assert!((r.tau_r as f64 - 2000.0).abs() / 2000.0 < 0.01);
    }
    let shares = busy_shares(&trace.records, 49, 99);
    for s in shares {
        assert!((s - 0.2).abs() < 0.02);
    }
}

#[test]
fn budgets_never_negative_under_noise() {
    use ctsched::{DisturbanceMode, DisturbanceSpec};
    let specs = baseline_set();
    let mut cfg = SimConfig::new(200_000);
    cfg.disturbance = DisturbanceSpec {
        mode: DisturbanceMode::AdditiveNoise { amplitude: 300 },
        seed: 3,
    };
    let mut p = PolicyConfig::cascade(500.0).build(&specs).unwrap();
    let trace = run_simulation(&specs, p.as_mut(), &cfg).unwrap();
    for r in &trace.records {
        assert!(r.budgets().iter().all(|&b| b >= 0));
        assert!(r.tau_p.iter().all(|&t| t >= 0));
    }
    for snap in &trace.controller {
        assert!(snap.c.iter().all(|c| c.is_finite()));
    }
}

#[test]
fn invalid_set_points_rejected() {
    assert!(SetPoints::new(0.0, vec![1.0]).is_err());
    assert!(SetPoints::new(100.0, vec![0.6, 0.6]).is_err());
    assert!(SetPoints::new(100.0, vec![-0.5, 1.5]).is_err());
}
