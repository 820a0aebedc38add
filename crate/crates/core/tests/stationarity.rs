use bigjump_core::estimate::estimate_marginal_tail;
use bigjump_core::stats::{ks_critical_1pct, ks_statistic};
use bigjump_core::{
    marginal_tail_constant, simulate_path, FiniteLaw, McConfig, ProcessSpec, RegVarLaw, Side,
    Streams,
};

fn sym(a: f64) -> RegVarLaw {
    RegVarLaw::symmetric(a).unwrap()
}

#[test]
fn ma_marginals_agree_across_time() {
    let spec = ProcessSpec::moving_average(sym(1.5), 0, vec![1.0, 0.5]).unwrap();
    let s = Streams::new(24);
    let reps = 100_000;
    let (mut first, mut last) = (Vec::with_capacity(reps), Vec::with_capacity(reps));
    for r in 0..reps as u64 {
        let p = simulate_path(&spec, 100, 0, &mut s.stream(r), false)
            .unwrap()
            .path;
        first.push(p.get(1).unwrap());
        last.push(p.get(50).unwrap());
    }
    let d = ks_statistic(&first, &last);
    assert!(d < ks_critical_1pct(reps, reps), "KS distance {d}");
}

#[test]
fn doubling_the_sre_burn_in_changes_nothing() {
    // X_{B+1} of a simulated path has 2B steps of history; rerunning the
    // recursion from 0 at time 1 on the same noise gives the B-step version.
    let y = 0.9;
    let spec = ProcessSpec::sre(sym(1.5), FiniteLaw::constant(y).unwrap());
    let burn = spec.sre_burn_in().unwrap();
    let s = Streams::new(22);
    let reps = 20_000u64;
    let (mut long_hits, mut short_hits) = (0u64, 0u64);
    for r in 0..reps {
        let sim = simulate_path(&spec, burn + 1, 0, &mut s.stream(r), true).unwrap();
        let noise = sim.noise.unwrap();
        let mut x = 0.0;
        for k in 2..=burn as i64 + 1 {
            x = y * x + noise.get(k).unwrap();
        }
        long_hits += (sim.path.get(burn as i64 + 1).unwrap() > 10.0) as u64;
        short_hits += (x > 10.0) as u64;
    }
    let p = long_hits as f64 / reps as f64;
    let se = (p * (1.0 - p) / reps as f64).sqrt();
    let diff = (long_hits as f64 - short_hits as f64).abs() / reps as f64;
    assert!(
        p > 0.0 && diff < se,
        "P(X>10) {p} vs shorter burn-in differs by {diff} (se {se})"
    );
}

#[test]
fn volatility_scales_the_tail_by_v_to_the_alpha() {
    let alpha = 1.5;
    let y = FiniteLaw::constant(0.5).unwrap();
    let sv = |v: f64| {
        ProcessSpec::stoch_vol(sym(alpha), y.clone(), FiniteLaw::constant(v).unwrap()).unwrap()
    };
    let cfg = McConfig::new(0);
    let c1 = marginal_tail_constant(&sv(1.0), Side::Positive, &cfg)
        .unwrap()
        .value;
    let c2 = marginal_tail_constant(&sv(2.0), Side::Positive, &cfg)
        .unwrap()
        .value;
    assert!((c2 / c1 - 2f64.powf(alpha)).abs() < 1e-12);

    let s = Streams::new(23);
    let e1 = estimate_marginal_tail(&sv(1.0), 200.0, Side::Positive, 100, 20_000, &s).unwrap();
    let e2 = estimate_marginal_tail(&sv(2.0), 200.0, Side::Positive, 100, 20_000, &s).unwrap();
    let ratio = e2.value / e1.value;
    let se = ratio * ((e1.stderr / e1.value).powi(2) + (e2.stderr / e2.value).powi(2)).sqrt();
    let target = 2f64.powf(alpha);
    assert!(
        (ratio - target).abs() <= (4.0 * se).max(0.1 * target),
        "ratio {ratio} ± {se} vs {target}"
    );
}
