use fixedk::theory::{concentration_check, erlang_check, moment_bound, moment_bound_check, TailBound, TailSide};

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}

#[test]
fn erlang_ks_does_not_grow_with_n() {
    let trials = 1000;
    let ks = |n: usize| -> f64 {
        median((0..5).map(|s| erlang_check(n, 2, 2, trials, 100 + s).unwrap().ks_statistic).collect())
    };
    let small = ks(256);
    let large = ks(16384);
    // KS noise at this trial count is about 1.36 / sqrt(trials)
    let slack = 1.36 / (trials as f64).sqrt();
    assert!(large <= small + slack, "KS(256) = {small}, KS(16384) = {large}");
}

#[test]
fn erlang_discard_fraction_vanishes() {
    for n in [16, 256, 4096] {
        let rep = erlang_check(n, 1, 3, 400, 5).unwrap();
        assert_eq!(rep.trials_used + rep.trials_discarded, 400);
        assert!(rep.discarded_fraction() < 0.01, "n={n}");
    }
}

#[test]
fn erlang_detects_finite_sample_departure() {
    // n = k: T = n * max of n uniforms, bounded by n, far from Gamma(n, 1)
    let rep = erlang_check(4, 4, 1, 2000, 3).unwrap();
    assert!(rep.ks_statistic > 0.05, "{}", rep.ks_statistic);
}

#[test]
fn concentration_reports_skipped_sides() {
    let tb = TailBound::uniform_sup_norm(1000, 3, 2);
    let r_mid = 0.5 * (tb.lower_threshold() + tb.upper_threshold());
    assert!(tb.bound(TailSide::Upper, r_mid).is_none());
    assert!(tb.bound(TailSide::Lower, r_mid).is_none());
    let rep = concentration_check(1000, 3, 2, &[r_mid], 1000, 1).unwrap();
    assert_eq!(rep.valid_rows(TailSide::Upper) + rep.valid_rows(TailSide::Lower), 0);
    assert!(rep.passed());
}

#[test]
fn moment_bound_first_moment_value() {
    assert_eq!(moment_bound(100, 1, 1, 1.0).unwrap(), 0.02);
    assert!(moment_bound(100, 1, 1, -0.5).is_err());
    assert!(moment_bound(100, 1, 1, 0.0).is_err());
}

#[test]
fn moment_checks_are_deterministic() {
    let a = moment_bound_check(200, 2, 2, 1.5, 500, 42).unwrap();
    let b = moment_bound_check(200, 2, 2, 1.5, 500, 42).unwrap();
    assert_eq!(a, b);
    assert!(a.pass);
}
