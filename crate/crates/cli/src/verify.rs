//! The verification battery: one [`CriterionResult`] per acceptance
//! criterion, each made of individual theory-vs-simulation checks.

use crate::run::with_workers;
use bigjump_core::estimate::{
    estimate_hitting, estimate_marginal_tail, estimate_order_stats, estimate_partial_sum,
    estimate_ruin, estimate_sum_exceedance, oracle_exact, plain_event_mc, tilted_estimator,
    OracleEvent, PathEvent,
};
use bigjump_core::rng::domain;
use bigjump_core::{
    empirical_f_mc, hitting_constant, limit_f_mc, make_plan, marginal_tail_constant,
    order_stat_constant, partial_sum_constant, ruin_constant, simulate_path, AnnulusTestFn,
    Estimate, FiniteLaw, LimitOptions, McConfig, MuInterval, ProcessSpec, RandomCoefLaw, RegVarLaw,
    Result, Side, Streams, TestFunctional,
};
use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Quick,
    Full,
}

/// Deliberate bugs for checking that the battery can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mutation {
    /// Limits ignore the sign split of the noise (`w` treated as 1).
    WrongSignWeight,
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub suite: Suite,
    pub seed: u64,
    /// Restrict to these criteria; empty runs all.
    pub only: Vec<u8>,
    pub mutation: Option<Mutation>,
}

impl VerifyOptions {
    pub fn new(suite: Suite, seed: u64) -> Self {
        VerifyOptions {
            suite,
            seed,
            only: Vec::new(),
            mutation: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub label: String,
    pub value: f64,
    pub stderr: f64,
    pub target: f64,
    pub z: f64,
    pub pass: bool,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {:.6} ± {:.2e} vs {:.6} (z = {:.2})",
            if self.pass { "ok  " } else { "FAIL" },
            self.label,
            self.value,
            self.stderr,
            self.target,
            self.z
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub pass: bool,
    pub max_abs_z: f64,
    pub checks: Vec<Check>,
    pub seconds: f64,
}

impl CriterionResult {
    /// The one-line summary row.
    pub fn summary(&self) -> String {
        let failed = self.checks.iter().filter(|c| !c.pass).count();
        format!(
            "criterion {}: {} | {} | checks {}/{} | max|z| = {:.2} | {:.1}s",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.title,
            self.checks.len() - failed,
            self.checks.len(),
            self.max_abs_z,
            self.seconds
        )
    }
}

fn finish(id: u8, title: &'static str, checks: Vec<Check>, seconds: f64) -> CriterionResult {
    let max_abs_z = checks
        .iter()
        .map(|c| c.z.abs())
        .filter(|z| !z.is_nan())
        .fold(0.0, f64::max);
    CriterionResult {
        id,
        title,
        pass: !checks.is_empty() && checks.iter().all(|c| c.pass),
        max_abs_z,
        checks,
        seconds,
    }
}

/// Within `k` standard errors, or within relative `rel` of the target.
fn tolerance_check(label: String, e: &Estimate, target: f64, k: f64, rel: f64) -> Check {
    let diff = (e.value - target).abs();
    let z = e.z_theory(target);
    Check {
        label,
        value: e.value,
        stderr: e.stderr,
        target,
        z,
        pass: diff <= k * e.stderr || diff <= rel * target.abs(),
    }
}

/// An exact (floating-point) identity, relative tolerance `rel`.
fn identity_check(label: String, value: f64, target: f64, rel: f64) -> Check {
    let pass =
        (value - target).abs() <= rel * target.abs().max(f64::MIN_POSITIVE) || value == target;
    Check {
        label,
        value,
        stderr: 0.0,
        target,
        z: if value == target { 0.0 } else { f64::NAN },
        pass,
    }
}

struct Sizes {
    noise_draws: u64,
    tail_chain_len: u64,
    pp_reps: u64,
    pp_limit_reps: u64,
    os_reps: u64,
    ps_reps: u64,
    ruin_reps: u64,
    oracle_reps: u64,
    tilt_reps: u64,
    constant_reps: u64,
}

impl Sizes {
    fn of(suite: Suite) -> Self {
        match suite {
            Suite::Full => Sizes {
                noise_draws: 1_000_000,
                tail_chain_len: 100_000,
                pp_reps: 100_000,
                pp_limit_reps: 1_000_000,
                os_reps: 1_000_000,
                ps_reps: 100_000,
                ruin_reps: 100_000,
                oracle_reps: 100_000_000,
                tilt_reps: 200_000,
                constant_reps: 100_000,
            },
            Suite::Quick => Sizes {
                noise_draws: 1_000_000,
                tail_chain_len: 10_000,
                pp_reps: 10_000,
                pp_limit_reps: 100_000,
                os_reps: 100_000,
                ps_reps: 10_000,
                ruin_reps: 10_000,
                oracle_reps: 10_000_000,
                tilt_reps: 20_000,
                constant_reps: 20_000,
            },
        }
    }
}

struct Ctx {
    sizes: Sizes,
    seed: u64,
    mutation: Option<Mutation>,
}

impl Ctx {
    fn streams(&self, criterion: u64) -> Streams {
        Streams::new(self.seed).domain(0xC0DE_0000 + criterion)
    }

    fn mc(&self, criterion: u64) -> McConfig {
        McConfig {
            reps: self.sizes.constant_reps,
            depth: None,
            streams: self.streams(criterion).domain(domain::COEFFS),
            force_mc: false,
        }
    }

    /// The spec limits are computed from, after any injected bug.
    fn theory_spec(&self, spec: &ProcessSpec) -> ProcessSpec {
        match self.mutation {
            None => spec.clone(),
            Some(Mutation::WrongSignWeight) => {
                let n = &spec.noise;
                let noise =
                    RegVarLaw::new(n.alpha(), 1.0, n.u0(), n.centered()).expect("valid noise");
                ProcessSpec {
                    noise,
                    ..spec.clone()
                }
            }
        }
    }
}

fn sym(alpha: f64) -> RegVarLaw {
    RegVarLaw::symmetric(alpha).expect("valid noise")
}

fn iid15() -> ProcessSpec {
    ProcessSpec::iid(sym(1.5))
}

fn ma15() -> ProcessSpec {
    ProcessSpec::moving_average(sym(1.5), 0, vec![1.0, 0.5]).expect("valid MA")
}

fn rcma15() -> ProcessSpec {
    let law = RandomCoefLaw::new(
        0,
        vec![vec![1.0, 0.5], vec![0.5, 1.0], vec![1.0, 1.0]],
        vec![0.3, 0.3, 0.4],
    )
    .expect("valid coefficient law");
    ProcessSpec::random_coef_ma(sym(1.5), law)
}

fn c1_noise(ctx: &Ctx) -> Result<Vec<Check>> {
    let law = sym(1.5);
    let n = ctx.sizes.noise_draws;
    let mut rng = ctx.streams(1).stream(0);
    let draws = law.sample(&mut rng, n as usize);
    let mut checks = Vec::new();
    for u in [2.0, 10.0, 50.0] {
        let hits = draws.iter().filter(|z| z.abs() > u).count() as f64;
        let p = hits / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        let e = Estimate::new(p, se, n, bigjump_core::Normalization::Raw);
        checks.push(tolerance_check(
            format!("P(|Z|>{u})"),
            &e,
            law.tail(u)?,
            4.0,
            0.0,
        ));
    }
    Ok(checks)
}

fn c2_marginal(ctx: &Ctx) -> Result<Vec<Check>> {
    let sre = ProcessSpec::sre(
        RegVarLaw::new(0.8, 1.0, 1.0, false)?,
        FiniteLaw::constant(0.5)?,
    );
    let mut checks = Vec::new();
    for (name, spec) in [("MA(1,0.5) a=1.5", ma15()), ("SRE Y=0.5 a=0.8 w=1", sre)] {
        let theory = marginal_tail_constant(&ctx.theory_spec(&spec), Side::Positive, &ctx.mc(2))?;
        let e = estimate_marginal_tail(
            &spec,
            50.0,
            Side::Positive,
            100,
            ctx.sizes.tail_chain_len,
            &ctx.streams(2),
        )?;
        checks.push(tolerance_check(
            format!("{name} x=50"),
            &e,
            theory.value,
            4.0,
            0.05,
        ));
    }
    Ok(checks)
}

/// Six `(g1, g2, ε1, ε2)` triples probing different radii, time windows
/// and cluster sizes.
pub fn annulus_battery() -> Vec<TestFunctional> {
    let g = |a, b, s0, s1| AnnulusTestFn::new(a, b, s0, s1, 1.0).expect("valid annulus");
    let t = |g1, g2, e1, e2| TestFunctional::new(g1, g2, e1, e2).expect("valid functional");
    vec![
        t(g(1.0, 2.0, 0.0, 1.0), g(1.0, 2.0, 0.0, 1.0), 0.5, 0.5),
        t(g(0.5, 1.0, 0.0, 1.0), g(2.0, 4.0, 0.0, 1.0), 0.2, 0.2),
        t(g(1.0, 3.0, 0.0, 0.5), g(1.0, 3.0, 0.0, 1.0), 0.1, 0.1),
        t(g(0.25, 0.5, 0.0, 1.0), g(0.5, 1.0, 0.0, 1.0), 0.5, 0.5),
        t(g(1.5, 5.0, 0.0, 1.0), g(0.3, 0.8, 0.0, 1.0), 0.3, 0.6),
        t(g(0.4, 1.6, 0.25, 0.75), g(0.4, 1.6, 0.25, 0.75), 1.2, 0.2),
    ]
}

fn c3_point_process(ctx: &Ctx) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let battery = annulus_battery();
    for (name, spec) in [("IID", iid15()), ("MA", ma15())] {
        let plan = make_plan(10_000, 1.0, &spec.noise)?;
        for q in [0usize, 1] {
            for (i, f) in battery.iter().enumerate() {
                let s = ctx.streams(3).domain((q as u64) << 8 | i as u64);
                let emp = empirical_f_mc(&spec, &plan, q, f, ctx.sizes.pp_reps, &s)?;
                let lim = limit_f_mc(
                    &ctx.theory_spec(&spec),
                    q,
                    f,
                    LimitOptions::default(),
                    ctx.sizes.pp_limit_reps,
                    &s,
                )?;
                let z = emp.z_against(&lim.estimate);
                let se = emp.stderr.hypot(lim.estimate.stderr);
                checks.push(Check {
                    label: format!("{name} q={q} triple {}", i + 1),
                    value: emp.value,
                    stderr: se,
                    target: lim.estimate.value,
                    z,
                    pass: (emp.value - lim.estimate.value).abs() <= 4.0 * se,
                });
            }
        }
    }
    Ok(checks)
}

fn c4_order_stats(ctx: &Ctx) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (name, spec, u) in [
        ("IID u=(1)", iid15(), vec![1.0]),
        ("MA u=(1,1)", ma15(), vec![1.0, 1.0]),
    ] {
        let plan = make_plan(10_000, 1.0, &spec.noise)?;
        let theory = order_stat_constant(&ctx.theory_spec(&spec), &u, &ctx.mc(4))?;
        let e = estimate_order_stats(&spec, &plan, &u, ctx.sizes.os_reps, &ctx.streams(4))?;
        checks.push(tolerance_check(
            name.to_string(),
            &e,
            theory.value,
            4.0,
            0.10,
        ));
    }
    Ok(checks)
}

fn c5_hitting(ctx: &Ctx) -> Result<Vec<Check>> {
    let spec = iid15();
    let plan = make_plan(10_000, 1.0, &spec.noise)?;
    let theory = hitting_constant(&ctx.theory_spec(&spec), 1.0, 2.0, &ctx.mc(5))?;
    let e = estimate_hitting(&spec, &plan, 1.0, 2.0, ctx.sizes.os_reps, &ctx.streams(5))?;
    Ok(vec![tolerance_check(
        "IID lambda=1 a=2".into(),
        &e,
        theory.value,
        4.0,
        0.10,
    )])
}

fn c6_partial_sums(ctx: &Ctx) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (name, spec) in [("IID rho=1", iid15()), ("MA rho=1", ma15())] {
        let plan = make_plan(10_000, 1.0, &spec.noise)?;
        let theory = partial_sum_constant(&ctx.theory_spec(&spec), 1.0, false, &ctx.mc(6))?;
        let e = estimate_partial_sum(&spec, &plan, 1.0, false, ctx.sizes.ps_reps, &ctx.streams(6))?;
        checks.push(tolerance_check(
            name.to_string(),
            &e.estimate,
            theory.value,
            4.0,
            0.10,
        ));
    }
    Ok(checks)
}

fn c7_ruin(ctx: &Ctx) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (name, spec, sensitivity) in [("IID", iid15(), true), ("MA", ma15(), false)] {
        let theory = ruin_constant(&ctx.theory_spec(&spec), 1.0, &ctx.mc(7))?;
        let r = estimate_ruin(&spec, 1000.0, 1.0, 20, ctx.sizes.ruin_reps, &ctx.streams(7))?;
        checks.push(tolerance_check(
            format!("{name} c=1 u=1e3 M=20"),
            &r.estimate,
            theory.value,
            0.0,
            0.25,
        ));
        if sensitivity {
            checks.push(Check {
                label: format!("{name} horizon M vs 2M"),
                value: r.estimate.value,
                stderr: r.estimate.stderr.hypot(r.estimate_2m.stderr),
                target: r.estimate_2m.value,
                z: r.sensitivity_z,
                pass: r.horizon_stable,
            });
        }
    }
    Ok(checks)
}

fn c8_oracle(ctx: &Ctx) -> Result<Vec<Check>> {
    let spec = iid15();
    let oracle = oracle_exact(&spec, 2, OracleEvent::Sum { s: 100.0 }, 1e-13)?;
    let e = estimate_sum_exceedance(&spec, 2, 100.0, ctx.sizes.oracle_reps, &ctx.streams(8))?;
    Ok(vec![tolerance_check(
        "IID P(S_2>100)".into(),
        &e,
        oracle.value,
        4.0,
        0.0,
    )])
}

fn c9_properties(ctx: &Ctx) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let alpha = 1.5;
    let law = RegVarLaw::new(alpha, 0.3, 1.0, false)?;

    // Homogeneity of the limit measure on intervals of both signs.
    let mut worst = 0.0f64;
    for (lo, hi) in [
        (0.5, 2.0),
        (1.0, f64::INFINITY),
        (-3.0, -0.25),
        (f64::NEG_INFINITY, -1.0),
    ] {
        for u in [0.1, 2.0, 7.5] {
            let scaled = law.mu_interval(MuInterval::new(u * lo, u * hi)?);
            let base = u.powf(-alpha) * law.mu_interval(MuInterval::new(lo, hi)?);
            worst = worst.max((scaled - base).abs() / base);
        }
    }
    checks.push(Check {
        label: "mu(uB) = u^-a mu(B), max rel err".into(),
        value: worst,
        stderr: 0.0,
        target: 0.0,
        z: 0.0,
        pass: worst <= 1e-12,
    });

    // Order-statistic constants scale exactly as s^-alpha.
    let u = [1.0, 0.5];
    for (name, spec) in [("MA", ma15()), ("RCMA", rcma15())] {
        let mc = ctx.mc(9);
        let base = order_stat_constant(&spec, &u, &mc)?;
        let s = 3.0;
        let scaled = order_stat_constant(&spec, &[s * u[0], s * u[1]], &mc)?;
        let target = s.powf(-alpha) * base.value;
        let se = scaled.stderr.hypot(s.powf(-alpha) * base.stderr);
        let diff = (scaled.value - target).abs();
        checks.push(Check {
            label: format!("{name} order-stat scaling s=3"),
            value: scaled.value,
            stderr: se,
            target,
            z: if se > 0.0 { diff / se } else { 0.0 },
            pass: diff <= (3.0 * se).max(1e-12 * target),
        });
    }

    // Y = 0 turns the recursion into its noise.
    let w_law = RegVarLaw::new(alpha, 0.3, 1.0, true)?;
    let sre0 = ProcessSpec::sre(w_law, FiniteLaw::constant(0.0)?);
    let iid = ProcessSpec::iid(w_law);
    let sim = simulate_path(&sre0, 500, 0, &mut ctx.streams(9).stream(1), true)?;
    let noise = sim.noise.expect("noise requested");
    let identical = (1..=500).all(|k| sim.path.get(k) == noise.get(k));
    checks.push(identity_check(
        "Y=0 path equals its noise".into(),
        identical as u8 as f64,
        1.0,
        0.0,
    ));
    let mc = ctx.mc(9);
    let pairs = [
        (
            "Y=0 marginal constant",
            marginal_tail_constant(&sre0, Side::Positive, &mc)?.value,
            w_law.w(),
        ),
        (
            "Y=0 order-stat constant",
            order_stat_constant(&sre0, &[1.0], &mc)?.value,
            order_stat_constant(&iid, &[1.0], &mc)?.value,
        ),
        (
            "Y=0 partial-sum constant",
            partial_sum_constant(&sre0, 1.0, false, &mc)?.value,
            partial_sum_constant(&iid, 1.0, false, &mc)?.value,
        ),
    ];
    for (label, v, t) in pairs {
        checks.push(identity_check(label.into(), v, t, 1e-14));
    }

    // Signed partial-sum constants never exceed the absolute ones.
    let neg_ma = ProcessSpec::moving_average(sym(1.5), 0, vec![1.0, -0.5])?;
    let sre = ProcessSpec::sre(sym(1.5), FiniteLaw::signed_bernoulli(0.5, 0.7)?);
    for (name, spec) in [
        ("IID", iid15()),
        ("MA(1,-0.5)", neg_ma),
        ("RCMA", rcma15()),
        ("SRE", sre),
    ] {
        let signed = partial_sum_constant(&spec, 1.0, false, &mc)?;
        let abs = partial_sum_constant(&spec, 1.0, true, &mc)?;
        let se = signed.stderr.hypot(abs.stderr);
        checks.push(Check {
            label: format!("{name} signed <= absolute partial-sum constant"),
            value: signed.value,
            stderr: se,
            target: abs.value,
            // Only a violation of the inequality counts as a deviation.
            z: if se > 0.0 {
                ((signed.value - abs.value) / se).max(0.0)
            } else {
                0.0
            },
            pass: signed.value <= abs.value + 3.0 * se,
        });
    }

    // The tilted estimator agrees with plain Monte Carlo.
    let spec = ma15();
    let plan = make_plan(200, 1.0, &spec.noise)?;
    let events = [
        PathEvent::OrderStats { u: vec![1.0, 1.0] },
        PathEvent::PartialSum { rho: 1.0 },
        PathEvent::Hitting {
            lambda: 1.0,
            a: 1.0,
        },
    ];
    for (i, ev) in events.iter().enumerate() {
        let s = ctx.streams(9).domain(100 + i as u64);
        let plain = plain_event_mc(&spec, &plan, ev, ctx.sizes.tilt_reps, &s)?;
        let tilted = tilted_estimator(&spec, &plan, ev, 1.0, ctx.sizes.tilt_reps, &s.domain(1))?;
        let z = tilted.z_against(&plain);
        checks.push(Check {
            label: format!("tilted vs plain, event {}", i + 1),
            value: tilted.value,
            stderr: tilted.stderr.hypot(plain.stderr),
            target: plain.value,
            z,
            pass: z.abs() <= 4.0,
        });
    }

    // Bit-identical results for any worker count.
    let plan = make_plan(2_000, 1.0, &spec.noise)?;
    let s = ctx.streams(9).domain(200);
    let probe = || -> Result<(u64, u64)> {
        let a = estimate_order_stats(&spec, &plan, &[1.0, 1.0], 10_000, &s)?;
        let b = estimate_partial_sum(&spec, &plan, 1.0, false, 5_000, &s)?;
        Ok((
            a.value.to_bits() ^ a.stderr.to_bits(),
            b.estimate.value.to_bits(),
        ))
    };
    let mut runs = Vec::new();
    for workers in [1usize, 2, 4] {
        runs.push(
            with_workers(workers, probe)
                .map_err(|e| bigjump_core::Error::Unsupported(format!("worker pool: {e}")))??,
        );
    }
    let same = runs.windows(2).all(|w| w[0] == w[1]);
    checks.push(identity_check(
        "identical across 1/2/4 workers".into(),
        same as u8 as f64,
        1.0,
        0.0,
    ));
    Ok(checks)
}

type CriterionFn = fn(&Ctx) -> Result<Vec<Check>>;

pub const CRITERIA: [(u8, &str); 9] = [
    (1, "noise tail"),
    (2, "marginal tail"),
    (3, "point-process limit"),
    (4, "order statistics"),
    (5, "hitting times"),
    (6, "partial sums"),
    (7, "ruin"),
    (8, "oracle equivalence"),
    (9, "property suites"),
];

const RUNNERS: [CriterionFn; 9] = [
    c1_noise,
    c2_marginal,
    c3_point_process,
    c4_order_stats,
    c5_hitting,
    c6_partial_sums,
    c7_ruin,
    c8_oracle,
    c9_properties,
];

/// Run one criterion; an error becomes a failing check rather than an abort.
pub fn run_criterion(id: u8, opts: &VerifyOptions) -> CriterionResult {
    let ctx = Ctx {
        sizes: Sizes::of(opts.suite),
        seed: opts.seed,
        mutation: opts.mutation,
    };
    let idx = (id as usize).checked_sub(1).filter(|i| *i < RUNNERS.len());
    let Some(idx) = idx else {
        return finish(id, "unknown criterion", Vec::new(), 0.0);
    };
    let started = std::time::Instant::now();
    let checks = match RUNNERS[idx](&ctx) {
        Ok(c) => c,
        Err(e) => vec![Check {
            label: format!("error: {e}"),
            value: f64::NAN,
            stderr: f64::NAN,
            target: f64::NAN,
            z: f64::NAN,
            pass: false,
        }],
    };
    finish(id, CRITERIA[idx].1, checks, started.elapsed().as_secs_f64())
}

/// Run the selected criteria, calling `on_result` as each finishes.
pub fn verify(
    opts: &VerifyOptions,
    mut on_result: impl FnMut(&CriterionResult),
) -> Vec<CriterionResult> {
    let ids: Vec<u8> = if opts.only.is_empty() {
        CRITERIA.iter().map(|c| c.0).collect()
    } else {
        opts.only.clone()
    };
    let mut out = Vec::new();
    for id in ids {
        let r = run_criterion(id, opts);
        on_result(&r);
        out.push(r);
    }
    out
}
