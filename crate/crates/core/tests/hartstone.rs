use ctsched::hartstone::{
    apply_iteration, baseline_set, format_table, hyperperiod, run_grid, run_iteration, run_series, PhTest, PhTestKind,
    SeriesOptions,
};
use ctsched::policy::PolicyConfig;
use ctsched::task::utilization;

#[test]
fn baseline_utilization_by_hand() {
    // 800/10000 + 400/5000 + 200/2500 + 100/1250 + 50/625
    let by_hand = 0.08 * 5.0;
    assert!((utilization(&baseline_set()) - by_hand).abs() < 1e-12);
}

#[test]
fn kind_two_keeps_harmonic_ratios_up_to_rounding() {
    for it in 1..=20 {
        let s = apply_iteration(PhTest {
            kind: PhTestKind::II,
            iteration: it,
        })
        .unwrap();
        for w in s.windows(2) {
            let ratio = w[0].period as f64 / w[1].period as f64;
            assert!((ratio - 2.0).abs() < 0.01, "iteration {it}: ratio {ratio}");
        }
    }
}

#[test]
fn edf_kind_four_stops_at_utilization_limit() {
    let r = run_series(PhTestKind::IV, &PolicyConfig::Edf, &SeriesOptions::default()).unwrap();
    assert_eq!(r.passing(), 7);
    assert_eq!(r.first_miss, Some(8));
    let last_ok = &r.iterations[6];
    assert!(!last_ok.missed);
    assert_eq!(r.switches_last_pass, Some(last_ok.switches_last_hyperperiod));
}

#[test]
fn series_never_skips_iterations() {
    for kind in PhTestKind::ALL {
        let r = run_series(kind, &PolicyConfig::Rr { quantum: 5 }, &SeriesOptions::default()).unwrap();
        let f = r.first_miss.unwrap();
        assert_eq!(r.iterations.len() as u32, f);
        for (i, it) in r.iterations.iter().enumerate() {
            assert_eq!(it.iteration, i as u32 + 1);
            assert_eq!(it.missed, it.iteration == f);
        }
    }
}

#[test]
fn iteration_cap_reported() {
    let opts = SeriesOptions {
        hyperperiods: 2,
        iteration_cap: 3,
    };
    let r = run_series(PhTestKind::I, &PolicyConfig::Edf, &opts).unwrap();
    assert_eq!(r.first_miss, None);
    assert_eq!(r.passing(), 3);
    assert!(r.note.as_deref().unwrap().contains("cap"));
    assert!(format_table(&[r]).contains("3+"));
}

#[test]
fn window_covers_two_hyperperiods() {
    let it = run_iteration(
        PhTest {
            kind: PhTestKind::III,
            iteration: 1,
        },
        &PolicyConfig::Edf,
        &SeriesOptions::default(),
    )
    .unwrap();
    assert_eq!(it.hyperperiod, 10_000);
    assert_eq!(it.window, 20_000);
    assert_eq!(hyperperiod(&baseline_set()), 10_000);
}

#[test]
fn grid_is_deterministic_and_ordered() {
    let policies = vec![PolicyConfig::Edf, PolicyConfig::Rr { quantum: 10 }];
    let kinds = [PhTestKind::III, PhTestKind::IV];
    let a = run_grid(&policies, &kinds, &SeriesOptions::default(), true).unwrap();
    let b = run_grid(&policies, &kinds, &SeriesOptions::default(), false).unwrap();
    assert_eq!(a, b);
    let keys: Vec<(String, PhTestKind)> = a.iter().map(|r| (r.policy.clone(), r.test)).collect();
    assert_eq!(keys[0], ("EDF".to_string(), PhTestKind::III));
    assert_eq!(keys[3], ("RR q=10".to_string(), PhTestKind::IV));
}

#[test]
fn table_mentions_published_values() {
    let r = run_series(PhTestKind::IV, &PolicyConfig::Edf, &SeriesOptions::default()).unwrap();
    let t = format_table(&[r]);
    assert!(t.contains("published"));
    assert!(t.contains("7 (73)"));
}
