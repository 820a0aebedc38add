//! Monte Carlo estimators of the normalized rare-event probabilities.

pub mod quad;

use crate::error::{Error, Result};
use crate::limits::check_thresholds;
use crate::noise::{RegVarLaw, Side};
use crate::pointproc::NormalizationPlan;
use crate::process::{
    noise_count, simulate_sparse, simulate_with, LawNoise, NoiseSource, PathStream, ProcessKind,
    ProcessSpec,
};
use crate::rng::{domain, StreamRng, Streams};
use crate::stats::{map_chunks, map_chunks_sized, BatchMeans, CountAcc, MeanAcc};
use serde::Serialize;

/// Batches for batch-means standard errors.
pub const BATCHES: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Raw,
    /// Divided by `n·P(|Z| > γ_n)`.
    ByNPz,
    /// Divided by `u·P(|Z| > u)`.
    ByUPz,
    /// Divided by `P(|Z| > x)`.
    ByPz,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub reps: u64,
    pub ci95: (f64, f64),
    pub normalization: Normalization,
}

impl Estimate {
    pub fn new(value: f64, stderr: f64, reps: u64, normalization: Normalization) -> Self {
        Estimate {
            value,
            stderr,
            reps,
            ci95: (value - 1.96 * stderr, value + 1.96 * stderr),
            normalization,
        }
    }

    /// `(self - other) / combined stderr`; infinite when both stderrs vanish
    /// and the values differ.
    pub fn z_against(&self, other: &Estimate) -> f64 {
        z_score(self.value - other.value, self.stderr.hypot(other.stderr))
    }

    /// `(self - theory) / stderr`.
    pub fn z_theory(&self, theory: f64) -> f64 {
        z_score(self.value - theory, self.stderr)
    }
}

pub(crate) fn z_score(diff: f64, se: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else if se > 0.0 {
        diff / se
    } else {
        diff.signum() * f64::INFINITY
    }
}

fn need_reps(reps: u64) -> Result<()> {
    if reps < 1 {
        Err(Error::param("reps", "must be at least 1"))
    } else {
        Ok(())
    }
}

fn reduce_counts(chunks: Vec<Result<CountAcc>>) -> Result<CountAcc> {
    let mut acc = CountAcc::default();
    for c in chunks {
        acc.merge(&c?);
    }
    Ok(acc)
}

fn scaled_count(acc: &CountAcc, scale: f64, norm: Normalization) -> Estimate {
    Estimate::new(
        scale * acc.proportion(),
        scale * acc.stderr(),
        acc.trials,
        norm,
    )
}

/// Values of `X_1..X_len` above `level`, exactly in law, with the sparse
/// simulator for finite-memory processes.
fn values_above(
    spec: &ProcessSpec,
    len: usize,
    level: f64,
    rng: &mut StreamRng,
) -> Result<Vec<f64>> {
    if spec.finite_support().is_some() {
        let segs = simulate_sparse(spec, len, 0, level, rng)?;
        Ok(segs
            .iter()
            .flat_map(|s| s.values().iter().copied())
            .filter(|&x| x > level)
            .collect())
    } else {
        let sim = simulate_with(spec, len, 0, rng, &mut LawNoise, false);
        Ok(sim
            .path
            .values()
            .iter()
            .copied()
            .filter(|&x| x > level)
            .collect())
    }
}

fn order_event(mut above: Vec<f64>, gamma: f64, u: &[f64]) -> bool {
    if above.len() < u.len() {
        return false;
    }
    above.sort_by(|a, b| b.total_cmp(a));
    u.iter().zip(&above).all(|(ui, x)| *x > gamma * ui)
}

/// `P(X_{1:n} > γ_n u_1, …, X_{q:n} > γ_n u_q) / (n P(|Z| > γ_n))`.
pub fn estimate_order_stats(
    spec: &ProcessSpec,
    plan: &NormalizationPlan,
    u: &[f64],
    reps: u64,
    streams: &Streams,
) -> Result<Estimate> {
    need_reps(reps)?;
    check_thresholds(u)?;
    if !spec.nonnegative_coeffs() {
        return Err(Error::param(
            "nonnegative_coeffs",
            "order statistics need A >= 0",
        ));
    }
    crate::process::conditions::check_standing(spec)?;
    let level = plan.gamma_n * u.iter().copied().fold(f64::INFINITY, f64::min);
    let s = streams.domain(domain::PATHS);
    let counts = reduce_counts(map_chunks(reps, |range| {
        let mut acc = CountAcc::default();
        for r in range {
            let above = values_above(spec, plan.n, level, &mut s.stream(r))?;
            acc.push(order_event(above, plan.gamma_n, u));
        }
        Ok(acc)
    }))?;
    Ok(scaled_count(&counts, plan.r_n, Normalization::ByNPz))
}

fn hitting_len(plan: &NormalizationPlan, lambda: f64) -> Result<usize> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::param("lambda", "must be finite and non-negative"));
    }
    Ok((lambda * plan.n as f64).floor() as usize)
}

/// `P(τ_n ≤ λn) / (n P(|Z| > γ_n))` with `τ_n` the first `k` where
/// `X_k > a γ_n`.
pub fn estimate_hitting(
    spec: &ProcessSpec,
    plan: &NormalizationPlan,
    lambda: f64,
    a: f64,
    reps: u64,
    streams: &Streams,
) -> Result<Estimate> {
    need_reps(reps)?;
    if !(a > 0.0) {
        return Err(Error::param("a", "must be positive"));
    }
    if !spec.nonnegative_coeffs() {
        return Err(Error::param(
            "nonnegative_coeffs",
            "hitting times need A >= 0",
        ));
    }
    crate::process::conditions::check_standing(spec)?;
    let len = hitting_len(plan, lambda)?;
    if len == 0 {
        return Ok(Estimate::new(0.0, 0.0, reps, Normalization::ByNPz));
    }
    let level = a * plan.gamma_n;
    let s = streams.domain(domain::PATHS);
    let counts = reduce_counts(map_chunks(reps, |range| {
        let mut acc = CountAcc::default();
        for r in range {
            let above = values_above(spec, len, level, &mut s.stream(r))?;
            acc.push(!above.is_empty());
        }
        Ok(acc)
    }))?;
    Ok(scaled_count(&counts, plan.r_n, Normalization::ByNPz))
}

/// Long-run `E|X_0|` from independent stretches of the stationary path on
/// the auxiliary stream domain.
pub fn mean_abs_x(spec: &ProcessSpec, samples: u64, streams: &Streams) -> Result<Estimate> {
    need_reps(samples)?;
    crate::process::conditions::check_standing(spec)?;
    let s = streams.domain(domain::AUX);
    let chunk = samples.div_ceil(BATCHES).max(1);
    let batches = map_chunks_sized(samples, chunk, |range| {
        let mut rng = s.stream(range.start / chunk);
        let mut stream = PathStream::new(spec, 0, &mut rng, &mut LawNoise, false);
        let mut acc = MeanAcc::default();
        for _ in range {
            acc.push(stream.next(&mut rng, &mut LawNoise).abs());
        }
        acc
    });
    let bm = BatchMeans::from_batches(&batches);
    Ok(Estimate::new(
        bm.mean(),
        bm.stderr(),
        bm.count(),
        Normalization::Raw,
    ))
}

/// Samples behind the `E|X_0|` centering of the absolute partial sum.
pub const CENTERING_SAMPLES: u64 = 10_000_000;

/// Result of [`estimate_partial_sum`]; `centering` is the `E|X_0|` estimate
/// used for the absolute variant when `α > 1` and `β = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartialSumEstimate {
    pub estimate: Estimate,
    pub centering: Option<Estimate>,
}

/// `P(S_n > ρ γ_n) / (n P(|Z| > γ_n))`; the absolute variant uses
/// `S_n^abs = Σ|X_k|`, centered by `n E|X_0|` when `α > 1` and `γ_n = n`.
pub fn estimate_partial_sum(
    spec: &ProcessSpec,
    plan: &NormalizationPlan,
    rho: f64,
    absolute: bool,
    reps: u64,
    streams: &Streams,
) -> Result<PartialSumEstimate> {
    need_reps(reps)?;
    if !(rho > 0.0) {
        return Err(Error::param("rho", "must be positive"));
    }
    crate::process::conditions::check_standing(spec)?;
    let centering = if absolute && spec.alpha() > 1.0 && plan.beta == 1.0 {
        Some(mean_abs_x(spec, CENTERING_SAMPLES, streams)?)
    } else {
        None
    };
    let shift = centering.map_or(0.0, |c| c.value * plan.n as f64);
    let level = rho * plan.gamma_n;
    let n = plan.n;
    let s = streams.domain(domain::PATHS);
    let counts = reduce_counts(map_chunks(reps, |range| {
        let mut acc = CountAcc::default();
        for r in range {
            let mut rng = s.stream(r);
            let mut stream = PathStream::new(spec, 0, &mut rng, &mut LawNoise, false);
            let mut sum = 0.0;
            for _ in 0..n {
                let x = stream.next(&mut rng, &mut LawNoise);
                sum += if absolute { x.abs() } else { x };
            }
            acc.push(sum - shift > level);
        }
        Ok(acc)
    }))?;
    Ok(PartialSumEstimate {
        estimate: scaled_count(&counts, plan.r_n, Normalization::ByNPz),
        centering,
    })
}

/// Ruin estimates for horizons `⌈Mu⌉` and `⌈2Mu⌉` from the same paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RuinEstimate {
    pub estimate: Estimate,
    pub estimate_2m: Estimate,
    pub horizon: u64,
    /// `(ψ_M − ψ_2M)` over the combined standard error.
    pub sensitivity_z: f64,
    /// `|sensitivity_z| ≤ 2`.
    pub horizon_stable: bool,
}

/// `P(max_{k ≤ Mu}(S_k − ck) > u) / (u P(|Z| > u))`.
pub fn estimate_ruin(
    spec: &ProcessSpec,
    u: f64,
    c: f64,
    horizon_m: u64,
    reps: u64,
    streams: &Streams,
) -> Result<RuinEstimate> {
    need_reps(reps)?;
    if spec.alpha() <= 1.0 {
        return Err(Error::param("alpha", "ruin needs alpha > 1"));
    }
    if !(u > 0.0 && c > 0.0) {
        return Err(Error::param("u", "level and drift must be positive"));
    }
    if horizon_m < 1 {
        return Err(Error::param("horizon_m", "must be at least 1"));
    }
    crate::process::conditions::check_standing(spec)?;
    let h1 = (horizon_m as f64 * u).ceil() as u64;
    let h2 = (2.0 * horizon_m as f64 * u).ceil() as u64;
    let s = streams.domain(domain::PATHS);
    let chunks = map_chunks(reps, |range| {
        let (mut m1, mut m2) = (CountAcc::default(), CountAcc::default());
        for r in range {
            let mut rng = s.stream(r);
            let mut stream = PathStream::new(spec, 0, &mut rng, &mut LawNoise, false);
            let mut level = 0.0;
            let mut hit_at = None;
            for k in 1..=h2 {
                level += stream.next(&mut rng, &mut LawNoise) - c;
                if level > u {
                    hit_at = Some(k);
                    break;
                }
            }
            m1.push(hit_at.is_some_and(|k| k <= h1));
            m2.push(hit_at.is_some());
        }
        (m1, m2)
    });
    let (mut m1, mut m2) = (CountAcc::default(), CountAcc::default());
    for (a, b) in &chunks {
        m1.merge(a);
        m2.merge(b);
    }
    let scale = 1.0 / (u * spec.noise.tail(u)?);
    let e1 = scaled_count(&m1, scale, Normalization::ByUPz);
    let e2 = scaled_count(&m2, scale, Normalization::ByUPz);
    let z = e1.z_against(&e2);
    Ok(RuinEstimate {
        estimate: e1,
        estimate_2m: e2,
        horizon: h1,
        sensitivity_z: z,
        horizon_stable: z.abs() <= 2.0,
    })
}

/// Path events for the tilted estimator.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum PathEvent {
    OrderStats { u: Vec<f64> },
    PartialSum { rho: f64 },
    Hitting { lambda: f64, a: f64 },
}

impl PathEvent {
    fn validate(&self, spec: &ProcessSpec, plan: &NormalizationPlan) -> Result<usize> {
        match self {
            PathEvent::OrderStats { u } => {
                check_thresholds(u)?;
                if !spec.nonnegative_coeffs() {
                    return Err(Error::param(
                        "nonnegative_coeffs",
                        "order statistics need A >= 0",
                    ));
                }
                Ok(plan.n)
            }
            PathEvent::PartialSum { rho } => {
                if !(*rho > 0.0) {
                    return Err(Error::param("rho", "must be positive"));
                }
                Ok(plan.n)
            }
            PathEvent::Hitting { lambda, a } => {
                if !(*a > 0.0) {
                    return Err(Error::param("a", "must be positive"));
                }
                if !spec.nonnegative_coeffs() {
                    return Err(Error::param(
                        "nonnegative_coeffs",
                        "hitting times need A >= 0",
                    ));
                }
                hitting_len(plan, *lambda)
            }
        }
    }

    fn occurs(&self, path: &[f64], gamma: f64) -> bool {
        match self {
            PathEvent::OrderStats { u } => {
                let lo = gamma * u.iter().copied().fold(f64::INFINITY, f64::min);
                order_event(path.iter().copied().filter(|&x| x > lo).collect(), gamma, u)
            }
            PathEvent::PartialSum { rho } => path.iter().sum::<f64>() > rho * gamma,
            PathEvent::Hitting { a, .. } => path.iter().any(|&x| x > a * gamma),
        }
    }
}

/// Noise where coordinate `tilted` has Pareto index `tilt`; tracks
/// `ln Σ_i r_i` with `r_i` the density ratio of the tilted to the nominal
/// magnitude law at draw `i`.
struct TiltNoise {
    tilted: u64,
    tilt: f64,
    count: u64,
    ln_ratio_const: f64,
    index_gap: f64,
    lse_max: f64,
    lse_sum: f64,
}

impl TiltNoise {
    fn new(alpha: f64, tilt: f64, tilted: u64) -> Self {
        TiltNoise {
            tilted,
            tilt,
            count: 0,
            ln_ratio_const: (tilt / alpha).ln(),
            index_gap: alpha - tilt,
            lse_max: f64::NEG_INFINITY,
            lse_sum: 0.0,
        }
    }

    fn push_log(&mut self, l: f64) {
        if l <= self.lse_max {
            self.lse_sum += (l - self.lse_max).exp();
        } else {
            self.lse_sum = self.lse_sum * (self.lse_max - l).exp() + 1.0;
            self.lse_max = l;
        }
    }

    fn ln_sum(&self) -> f64 {
        self.lse_max + self.lse_sum.ln()
    }
}

impl NoiseSource for TiltNoise {
    #[inline]
    fn draw(&mut self, law: &RegVarLaw, rng: &mut StreamRng) -> f64 {
        let index = if self.count == self.tilted {
            self.tilt
        } else {
            law.alpha()
        };
        self.count += 1;
        let (z, ln_mag) = law.sample_indexed(rng, index);
        let l = if self.index_gap == 0.0 {
            0.0
        } else {
            self.ln_ratio_const + self.index_gap * ln_mag
        };
        self.push_log(l);
        z
    }
}

/// Defensive-mixture importance sampler: one noise coordinate, chosen
/// uniformly, is drawn with Pareto index `tilt_alpha`; the path weight is
/// `N / Σ_i r_i ≤ α/tilt_alpha`. With `tilt_alpha = α` every weight is 1 and
/// the draws coincide with [`plain_event_mc`]. Standard error by batch means.
pub fn tilted_estimator(
    spec: &ProcessSpec,
    plan: &NormalizationPlan,
    event: &PathEvent,
    tilt_alpha: f64,
    reps: u64,
    streams: &Streams,
) -> Result<Estimate> {
    let alpha = spec.alpha();
    if !(tilt_alpha > 0.0 && tilt_alpha <= alpha) {
        return Err(Error::param("tilt_alpha", "must lie in (0, alpha]"));
    }
    if reps < BATCHES {
        return Err(Error::param(
            "reps",
            "need at least one replication per batch",
        ));
    }
    crate::process::conditions::check_standing(spec)?;
    let len = event.validate(spec, plan)?;
    if len == 0 {
        return Ok(Estimate::new(0.0, 0.0, reps, Normalization::ByNPz));
    }
    let n_noise = noise_count(spec, len, 0) as u64;
    let ln_n = (n_noise as f64).ln();
    let paths = streams.domain(domain::PATHS);
    let picks = streams.domain(domain::TILT_INDEX);
    let batches = map_chunks_sized(reps, reps.div_ceil(BATCHES), |range| {
        let mut acc = MeanAcc::default();
        for r in range {
            let tilted = picks.stream(r).index(n_noise);
            let mut noise = TiltNoise::new(alpha, tilt_alpha, tilted);
            let sim = simulate_with(spec, len, 0, &mut paths.stream(r), &mut noise, false);
            let hit = event.occurs(sim.path.values(), plan.gamma_n);
            let weight = if hit {
                (ln_n - noise.ln_sum()).exp()
            } else {
                0.0
            };
            acc.push(weight);
        }
        acc
    });
    let bm = BatchMeans::from_batches(&batches);
    Ok(Estimate::new(
        plan.r_n * bm.mean(),
        plan.r_n * bm.stderr(),
        bm.count(),
        Normalization::ByNPz,
    ))
}

/// Plain full-path Monte Carlo for a [`PathEvent`], with the same streams
/// as the tilted estimator.
pub fn plain_event_mc(
    spec: &ProcessSpec,
    plan: &NormalizationPlan,
    event: &PathEvent,
    reps: u64,
    streams: &Streams,
) -> Result<Estimate> {
    need_reps(reps)?;
    crate::process::conditions::check_standing(spec)?;
    let len = event.validate(spec, plan)?;
    if len == 0 {
        return Ok(Estimate::new(0.0, 0.0, reps, Normalization::ByNPz));
    }
    let paths = streams.domain(domain::PATHS);
    let counts = reduce_counts(map_chunks(reps, |range| {
        let mut acc = CountAcc::default();
        for r in range {
            let sim = simulate_with(spec, len, 0, &mut paths.stream(r), &mut LawNoise, false);
            acc.push(event.occurs(sim.path.values(), plan.gamma_n));
        }
        Ok(acc)
    }))?;
    Ok(scaled_count(&counts, plan.r_n, Normalization::ByNPz))
}

/// Events for the exact small-`n` oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum OracleEvent {
    /// `max(Z_1, …, Z_n) > s`.
    Max { s: f64 },
    /// `Z_1 + ⋯ + Z_n > s`.
    Sum { s: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleValue {
    pub value: f64,
    pub abs_error: f64,
}

/// Exact probabilities for i.i.d. noise and `n ∈ {1, 2}`; the two-term sum
/// is integrated numerically over the first variable's uniform.
pub fn oracle_exact(
    spec: &ProcessSpec,
    n: usize,
    event: OracleEvent,
    tol: f64,
) -> Result<OracleValue> {
    if !matches!(spec.kind, ProcessKind::Iid) {
        return Err(Error::Unsupported(
            "the exact oracle covers i.i.d. noise only".into(),
        ));
    }
    if !(1..=2).contains(&n) {
        return Err(Error::param("n", "the exact oracle covers n = 1 and n = 2"));
    }
    let law = &spec.noise;
    let exact = |value| {
        Ok(OracleValue {
            value,
            abs_error: 0.0,
        })
    };
    match (n, event) {
        (1, OracleEvent::Max { s }) | (1, OracleEvent::Sum { s }) => exact(law.upper_tail(s)),
        (_, OracleEvent::Max { s }) => {
            let p = law.upper_tail(s);
            exact(1.0 - (1.0 - p) * (1.0 - p))
        }
        (_, OracleEvent::Sum { s }) => {
            // Z_1 = ±u0 U^{-1/α} − c; integrate P(Z_2 > s − Z_1) over U.
            let (u0, c, w, alpha) = (law.u0(), law.shift(), law.w(), law.alpha());
            let f = |u: f64| {
                if u <= 0.0 {
                    // |Y_1| = ∞: the positive branch always exceeds.
                    return w;
                }
                let y = u0 * u.powf(-1.0 / alpha);
                w * law.upper_tail(s + c - y) + (1.0 - w) * law.upper_tail(s + c + y)
            };
            let t = s + 2.0 * c;
            let cuts: Vec<f64> = [t - u0, t + u0, -t - u0, -t + u0]
                .into_iter()
                .filter(|&y| y > u0)
                .map(|y| (y / u0).powf(-alpha))
                .collect();
            let q = quad::integrate_split(f, 0.0, 1.0, &cuts, tol);
            Ok(OracleValue {
                value: q.value,
                abs_error: q.abs_error,
            })
        }
    }
}

/// Plain Monte Carlo of `P(Z_1 + ⋯ + Z_n > s)` for i.i.d. noise.
pub fn estimate_sum_exceedance(
    spec: &ProcessSpec,
    n: usize,
    s_level: f64,
    reps: u64,
    streams: &Streams,
) -> Result<Estimate> {
    need_reps(reps)?;
    if n < 1 {
        return Err(Error::param("n", "must be at least 1"));
    }
    crate::process::conditions::check_standing(spec)?;
    let s = streams.domain(domain::PATHS);
    let counts = reduce_counts(map_chunks(reps, |range| {
        let mut acc = CountAcc::default();
        for r in range {
            let mut rng = s.stream(r);
            let mut stream = PathStream::new(spec, 0, &mut rng, &mut LawNoise, false);
            let sum: f64 = (0..n).map(|_| stream.next(&mut rng, &mut LawNoise)).sum();
            acc.push(sum > s_level);
        }
        Ok(acc)
    }))?;
    Ok(scaled_count(&counts, 1.0, Normalization::Raw))
}

/// `P(±X_0 > x) / P(|Z| > x)` from `chains` independent stationary stretches
/// of `chain_len` consecutive values; batch means over the stretches.
pub fn estimate_marginal_tail(
    spec: &ProcessSpec,
    x: f64,
    side: Side,
    chains: u64,
    chain_len: u64,
    streams: &Streams,
) -> Result<Estimate> {
    if chains < 2 || chain_len < 1 {
        return Err(Error::param(
            "chains",
            "need at least two chains of positive length",
        ));
    }
    if !(x > 0.0) {
        return Err(Error::param("x", "must be positive"));
    }
    crate::process::conditions::check_standing(spec)?;
    let sign = match side {
        Side::Positive => 1.0,
        Side::Negative => -1.0,
    };
    let s = streams.domain(domain::PATHS);
    let batches = map_chunks_sized(chains, 1, |range| {
        let mut rng = s.stream(range.start);
        let mut stream = PathStream::new(spec, 0, &mut rng, &mut LawNoise, false);
        let mut acc = MeanAcc::default();
        for _ in 0..chain_len {
            let v = stream.next(&mut rng, &mut LawNoise);
            acc.push(if sign * v > x { 1.0 } else { 0.0 });
        }
        acc
    });
    let bm = BatchMeans::from_batches(&batches);
    let scale = 1.0 / spec.noise.tail(x)?;
    Ok(Estimate::new(
        scale * bm.mean(),
        scale * bm.stderr(),
        bm.count(),
        Normalization::ByPz,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointproc::make_plan;

    fn sym(a: f64) -> RegVarLaw {
        RegVarLaw::symmetric(a).unwrap()
    }

    fn within(e: &Estimate, theory: f64, rel: f64) -> bool {
        (e.value - theory).abs() <= (4.0 * e.stderr).max(rel * theory)
    }

    #[test]
    fn ci_is_symmetric() {
        let e = Estimate::new(1.0, 0.1, 10, Normalization::Raw);
        assert_eq!(e.ci95, (1.0 - 0.196, 1.0 + 0.196));
    }

    #[test]
    fn order_stats_iid() {
        let spec = ProcessSpec::iid(sym(1.5));
        let plan = make_plan(10_000, 1.0, &spec.noise).unwrap();
        let e = estimate_order_stats(&spec, &plan, &[1.0], 50_000, &Streams::new(1)).unwrap();
        assert!(within(&e, 0.5, 0.1), "{e:?}");
        let e = estimate_order_stats(&spec, &plan, &[1e12], 1000, &Streams::new(1)).unwrap();
        assert_eq!(e.value, 0.0);
        assert!(estimate_order_stats(&spec, &plan, &[1.0], 0, &Streams::new(1)).is_err());
    }

    #[test]
    fn certain_event_returns_r_n() {
        let spec = ProcessSpec::iid(sym(1.5));
        let plan = make_plan(300, 1.0, &spec.noise).unwrap();
        let e = estimate_order_stats(&spec, &plan, &[1e-300], 500, &Streams::new(2)).unwrap();
        assert_eq!(e.value, plan.r_n);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn hitting_edges() {
        let spec = ProcessSpec::iid(sym(1.5));
        let plan = make_plan(10_000, 1.0, &spec.noise).unwrap();
        let e = estimate_hitting(&spec, &plan, 0.0, 1.0, 100, &Streams::new(1)).unwrap();
        assert_eq!(e.value, 0.0);
        let e = estimate_hitting(&spec, &plan, 1.0, 1.0, 50_000, &Streams::new(4)).unwrap();
        assert!(within(&e, 0.5, 0.1), "{e:?}");
    }

    #[test]
    fn degenerate_tilt_is_plain_mc() {
        let spec = ProcessSpec::iid(sym(1.5));
        let plan = make_plan(200, 1.0, &spec.noise).unwrap();
        let st = Streams::new(7);
        for ev in [
            PathEvent::OrderStats { u: vec![0.5] },
            PathEvent::PartialSum { rho: 0.5 },
            PathEvent::Hitting {
                lambda: 0.5,
                a: 0.5,
            },
        ] {
            let t = tilted_estimator(&spec, &plan, &ev, 1.5, 2000, &st).unwrap();
            let p = plain_event_mc(&spec, &plan, &ev, 2000, &st).unwrap();
            assert_eq!(t.value, p.value, "{ev:?}");
        }
    }

    #[test]
    fn tilted_is_unbiased_for_order_stats() {
        let spec = ProcessSpec::iid(sym(1.5));
        let plan = make_plan(1000, 1.0, &spec.noise).unwrap();
        let ev = PathEvent::OrderStats { u: vec![1.0] };
        let t = tilted_estimator(&spec, &plan, &ev, 0.75, 20_000, &Streams::new(3)).unwrap();
        let p = plain_event_mc(&spec, &plan, &ev, 20_000, &Streams::new(4)).unwrap();
        assert!(t.z_against(&p).abs() < 4.0, "{t:?} {p:?}");
    }

    #[test]
    fn tilt_weights_are_bounded() {
        let law = sym(1.5);
        let mut noise = TiltNoise::new(1.5, 0.5, 3);
        let mut rng = Streams::new(1).stream(0);
        for _ in 0..1000 {
            noise.draw(&law, &mut rng);
        }
        let w = ((1000f64).ln() - noise.ln_sum()).exp();
        assert!(w > 0.0 && w <= 3.0 + 1e-12, "{w}");
    }

    #[test]
    fn oracle_closed_forms() {
        let spec = ProcessSpec::iid(RegVarLaw::new(1.5, 0.7, 1.0, false).unwrap());
        let v = oracle_exact(&spec, 1, OracleEvent::Max { s: 4.0 }, 1e-12).unwrap();
        assert_eq!(v.value, 0.7 * 4f64.powf(-1.5));
        let sym = ProcessSpec::iid(sym(1.5));
        let v = oracle_exact(&sym, 2, OracleEvent::Max { s: 9.0 }, 1e-12).unwrap();
        let p = 0.5 * 9f64.powf(-1.5);
        assert_eq!(v.value, 1.0 - (1.0 - p) * (1.0 - p));
        // Symmetry: P(Z_1 + Z_2 > 0) = 1/2.
        let v = oracle_exact(&sym, 2, OracleEvent::Sum { s: 0.0 }, 1e-12).unwrap();
        assert!((v.value - 0.5).abs() < 1e-10, "{v:?}");
        // Positive Pareto variables are at least 1 each.
        let pos = ProcessSpec::iid(RegVarLaw::new(1.5, 1.0, 1.0, false).unwrap());
        let v = oracle_exact(&pos, 2, OracleEvent::Sum { s: 1.99 }, 1e-12).unwrap();
        assert!((v.value - 1.0).abs() < 1e-10);
        assert!(oracle_exact(
            &ProcessSpec::moving_average(sym_law(), 0, vec![1.0]).unwrap(),
            2,
            OracleEvent::Sum { s: 1.0 },
            1e-9
        )
        .is_err());
    }

    fn sym_law() -> RegVarLaw {
        sym(1.5)
    }

    /// Independent check of the sum oracle: a 2-D tensor Gauss–Kronrod on
    /// both uniforms would be slow, so compare against `P(Y_1 + Y_2 > s)`
    /// for positive Pareto(1) noise, where the convolution is elementary:
    /// `P(Y_1 + Y_2 > s) = 2/s + 2 ln(s-1)/s^2` for `s ≥ 2`.
    #[test]
    fn oracle_sum_matches_pareto_one_convolution() {
        let spec = ProcessSpec::iid(RegVarLaw::new(1.0, 1.0, 1.0, false).unwrap());
        for s in [2.5f64, 10.0, 100.0] {
            let v = oracle_exact(&spec, 2, OracleEvent::Sum { s }, 1e-13).unwrap();
            let exact = 2.0 / s + 2.0 * (s - 1.0).ln() / (s * s);
            assert!(
                (v.value - exact).abs() < 1e-10,
                "s={s}: {} vs {exact}",
                v.value
            );
        }
    }

    #[test]
    fn oracle_sum_matches_mc() {
        let spec = ProcessSpec::iid(sym(1.5));
        let v = oracle_exact(&spec, 2, OracleEvent::Sum { s: 20.0 }, 1e-12).unwrap();
        let e = estimate_sum_exceedance(&spec, 2, 20.0, 1_000_000, &Streams::new(5)).unwrap();
        assert!(e.z_theory(v.value).abs() < 4.0, "{e:?} {v:?}");
    }

    #[test]
    fn ruin_drift_kills_probability() {
        let spec = ProcessSpec::iid(sym(1.5));
        let e = estimate_ruin(&spec, 50.0, 1e6, 2, 500, &Streams::new(1)).unwrap();
        assert_eq!(e.estimate.value, 0.0);
        assert_eq!(e.horizon, 100);
        let low = ProcessSpec::iid(sym(0.8));
        assert!(estimate_ruin(&low, 50.0, 1.0, 2, 10, &Streams::new(1)).is_err());
    }

    #[test]
    fn ruin_nested_horizons() {
        let spec = ProcessSpec::iid(sym(1.5));
        let e = estimate_ruin(&spec, 100.0, 1.0, 5, 5000, &Streams::new(2)).unwrap();
        assert!(e.estimate.value <= e.estimate_2m.value);
        assert!(within(&e.estimate_2m, 1.0, 0.3), "{e:?}");
    }

    #[test]
    fn partial_sum_small() {
        let spec = ProcessSpec::iid(sym(1.5));
        let plan = make_plan(1000, 1.0, &spec.noise).unwrap();
        let e = estimate_partial_sum(&spec, &plan, 1.0, false, 40_000, &Streams::new(3)).unwrap();
        assert!(within(&e.estimate, 0.5, 0.15), "{e:?}");
        assert!(e.centering.is_none());
    }

    #[test]
    fn marginal_tail_ma() {
        let spec = ProcessSpec::moving_average(sym(1.5), 0, vec![1.0, 0.5]).unwrap();
        let e = estimate_marginal_tail(&spec, 50.0, Side::Positive, 100, 20_000, &Streams::new(1))
            .unwrap();
        assert_eq!(e.normalization, Normalization::ByPz);
        assert!(within(&e, 0.676777, 0.05), "{e:?}");
    }

    #[test]
    fn mean_abs_of_iid_pareto() {
        // E|Z| = u0 α/(α-1) = 3 for the symmetric uncentered law.
        let spec = ProcessSpec::iid(sym(1.5));
        let e = mean_abs_x(&spec, 2_000_000, &Streams::new(2)).unwrap();
        assert!((e.value - 3.0).abs() < 5.0 * e.stderr.max(0.01), "{e:?}");
    }

    #[test]
    fn results_do_not_depend_on_worker_count() {
        let spec = ProcessSpec::moving_average(sym(1.5), 0, vec![1.0, 0.5]).unwrap();
        let plan = make_plan(2000, 1.0, &spec.noise).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    let ev = PathEvent::PartialSum { rho: 0.5 };
                    (
                        estimate_order_stats(&spec, &plan, &[1.0, 1.0], 10_000, &Streams::new(9))
                            .unwrap(),
                        tilted_estimator(&spec, &plan, &ev, 1.0, 3000, &Streams::new(9)).unwrap(),
                    )
                })
        };
        assert_eq!(run(1), run(3));
    }
}
