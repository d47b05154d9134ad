use ctsched::compare::compare_traces;
use ctsched::hartstone::baseline_set;
use ctsched::metrics::OpCounts;
use ctsched::task::initial_states;
use ctsched::{run_simulation, PlantView, PolicyConfig, SimConfig, TaskSpec};

fn busy(n: usize) -> Vec<TaskSpec> {
    (1..=n).map(|i| TaskSpec::new(i, 100_000, 100_000)).collect()
}

#[test]
fn rr_round_of_five() {
    let specs = busy(5);
    let states = initial_states(&specs);
    let view = PlantView {
        round: 0,
        now: 0,
        specs: &specs,
        states: &states,
        last: None,
    };
    let mut rr = PolicyConfig::Rr { quantum: 10 }.build(&specs).unwrap();
    let s = rr.schedule(&view, &mut OpCounts::default()).unwrap();
    assert_eq!(s.entries.len(), 5);
    assert!(s.entries.iter().all(|e| e.budget == 10));
    let trace = run_simulation(&specs, rr.as_mut(), &SimConfig::new(500)).unwrap();
    assert!(trace.records.iter().all(|r| r.tau_r == 50));
}

#[test]
fn rr_skips_finished_tasks() {
    let mut specs = busy(3);
    specs[1].work = 0;
    let mut rr = PolicyConfig::Rr { quantum: 1 }.build(&specs).unwrap();
    let trace = run_simulation(&specs, rr.as_mut(), &SimConfig::new(100)).unwrap();
    assert!(trace.records.iter().all(|r| r.tau_p[1] == 0 && r.tau_r == 2));
}

#[test]
fn edf_runs_to_completion_or_release() {
    let specs = vec![TaskSpec::new(1, 100, 30), TaskSpec::new(2, 200, 120)];
    let mut edf = PolicyConfig::Edf.build(&specs).unwrap();
    let trace = run_simulation(&specs, edf.as_mut(), &SimConfig::new(200)).unwrap();
    assert_eq!(trace.records[0].tau_p, vec![30, 0]);
    // task 2 is cut at the release at t = 100
    assert_eq!(trace.records[1].tau_p, vec![0, 70]);
    assert_eq!(trace.records[1].t + trace.records[1].tau_r, 100);
    assert!(trace.misses.is_empty());
}

#[test]
fn llf_single_task_never_switches_after_start() {
    let specs = vec![TaskSpec::new(1, 1_000, 600)];
    let mut llf = PolicyConfig::Llf { tick: 1 }.build(&specs).unwrap();
    let trace = run_simulation(&specs, llf.as_mut(), &SimConfig::new(5_000)).unwrap();
    assert_eq!(trace.total_switches(), 1);
}

#[test]
fn llf_incumbent_keeps_running_on_ties() {
    let specs = vec![TaskSpec::new(1, 100, 10), TaskSpec::new(2, 100, 10)];
    let mut llf = PolicyConfig::Llf { tick: 1 }.build(&specs).unwrap();
    let trace = run_simulation(&specs, llf.as_mut(), &SimConfig::new(100)).unwrap();
    // task 1 starts (lowest id); while it runs task 2's laxity falls below it
    assert_eq!(trace.records[0].tau_p, vec![1, 0]);
    assert!(trace.misses.is_empty());
}

#[test]
fn llf_switches_far_more_than_edf() {
    let specs = ctsched::hartstone::apply_iteration(ctsched::hartstone::PhTest {
        kind: ctsched::hartstone::PhTestKind::IV,
        iteration: 5,
    })
    .unwrap();
    let run = |p: PolicyConfig| {
        let mut s = p.build(&specs).unwrap();
        run_simulation(&specs, s.as_mut(), &SimConfig::new(10_000)).unwrap().total_switches()
    };
    assert!(run(PolicyConfig::Llf { tick: 1 }) > 5 * run(PolicyConfig::Edf));
}

#[test]
fn srr_equal_rates_is_plain_rr() {
    let specs = busy(4);
    let run = |p: PolicyConfig| {
        let mut s = p.build(&specs).unwrap();
        run_simulation(&specs, s.as_mut(), &SimConfig::new(400)).unwrap().records
    };
    let srr = run(PolicyConfig::Srr {
        a: 1.0,
        b: 1.0,
        quantum: 10,
    });
    let rr = run(PolicyConfig::Rr { quantum: 10 });
    assert_eq!(srr.iter().map(|r| r.tau_r).collect::<Vec<_>>(), rr.iter().map(|r| r.tau_r).collect::<Vec<_>>());
}

#[test]
fn srr_zero_b_serves_runner_alone() {
    let specs = busy(3);
    let mut srr = PolicyConfig::Srr {
        a: 2.0,
        b: 0.0,
        quantum: 10,
    }
    .build(&specs)
    .unwrap();
    let trace = run_simulation(&specs, srr.as_mut(), &SimConfig::new(200)).unwrap();
    // all three arrive together and are admitted together; nobody new arrives
    assert!(trace.records.iter().all(|r| r.tau_r == 30));
}

#[test]
fn rr_quantum_ratio_of_switches() {
    let specs = baseline_set();
    let run = |q| {
        let mut s = PolicyConfig::Rr { quantum: q }.build(&specs).unwrap();
        run_simulation(&specs, s.as_mut(), &SimConfig::new(10_000)).unwrap().records
    };
    let diff = compare_traces(&run(1), &run(10)).unwrap();
    let ratio = 1.0 / diff.switch_ratio.unwrap();
    assert!((ratio - 10.0).abs() < 1.0, "ratio {ratio}");
}

#[test]
fn only_valid_task_ids() {
    let specs = baseline_set();
    for p in ctsched::policy::table2_policies() {
        let mut s = p.build(&specs).unwrap();
        let trace = run_simulation(&specs, s.as_mut(), &SimConfig::new(10_000)).unwrap();
        assert!(trace.records.iter().all(|r| r.tau_p.len() == 5));
    }
}
