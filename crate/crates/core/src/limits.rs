//! Asymptotic constants: closed forms where the coefficient diagonal is
//! deterministic (or the recursion admits one), Monte Carlo over diagonal
//! draws otherwise.

use crate::error::{Error, Result};
use crate::noise::Side;
use crate::process::{coeff_sequence_sample, Diagonal, ProcessKind, ProcessSpec};
use crate::rng::{domain, Streams};
use crate::stats::{map_chunks, MeanAcc};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitConstant {
    pub value: f64,
    pub method: Method,
    pub stderr: f64,
    pub truncation_depth: usize,
}

impl LimitConstant {
    fn closed(value: f64, depth: usize) -> Self {
        LimitConstant {
            value,
            method: Method::ClosedForm,
            stderr: 0.0,
            truncation_depth: depth,
        }
    }

    fn scaled(self, s: f64) -> Self {
        LimitConstant {
            value: self.value * s,
            stderr: self.stderr * s,
            ..self
        }
    }
}

/// Monte Carlo settings for constants without a closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub reps: u64,
    pub depth: Option<usize>,
    pub streams: Streams,
    /// Use Monte Carlo even when a closed form exists.
    pub force_mc: bool,
}

impl McConfig {
    pub fn new(seed: u64) -> Self {
        McConfig {
            reps: 100_000,
            depth: None,
            streams: Streams::new(seed),
            force_mc: false,
        }
    }
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig::new(0)
    }
}

/// `E[f(diagonal)]`, exact when the diagonal is deterministic.
fn expect_diag<F>(spec: &ProcessSpec, cfg: &McConfig, f: F) -> Result<LimitConstant>
where
    F: Fn(&Diagonal) -> f64 + Sync,
{
    let depth = cfg.depth.unwrap_or_else(|| spec.default_depth());
    if !cfg.force_mc {
        if let Some(d) = spec.deterministic_diagonal(depth) {
            return Ok(LimitConstant::closed(f(&d), depth));
        }
    }
    if cfg.reps == 0 {
        return Err(Error::param("reps", "must be positive"));
    }
    let s = cfg.streams.domain(domain::COEFFS);
    let chunks = map_chunks(cfg.reps, |range| {
        let mut acc = MeanAcc::default();
        for r in range {
            acc.push(f(&coeff_sequence_sample(spec, depth, &mut s.stream(r))));
        }
        acc
    });
    let mut acc = MeanAcc::default();
    for c in &chunks {
        acc.merge(c);
    }
    Ok(LimitConstant {
        value: acc.mean(),
        method: Method::Mc,
        stderr: acc.stderr(),
        truncation_depth: depth,
    })
}

fn side_weight(w: f64, side: Side) -> (f64, f64) {
    match side {
        Side::Positive => (w, 1.0 - w),
        Side::Negative => (1.0 - w, w),
    }
}

fn convergent_recursion(spec: &ProcessSpec) -> Result<()> {
    if let Some(y) = spec.y_law() {
        let m = y.abs_moment(spec.alpha());
        if m >= 1.0 {
            return Err(Error::ConditionFailed {
                id: "CC1",
                reason: format!("E|Y|^alpha = {m} >= 1: the series diverges"),
            });
        }
    }
    Ok(())
}

/// `lim P(±X > x)/P(|Z| > x) = Σ_j E[|A_j|^α (w_± I{A_j>0} + w_∓ I{A_j<0})]`.
pub fn marginal_tail_constant(
    spec: &ProcessSpec,
    side: Side,
    cfg: &McConfig,
) -> Result<LimitConstant> {
    convergent_recursion(spec)?;
    let alpha = spec.alpha();
    let (same, opposite) = side_weight(spec.noise.w(), side);
    let term = move |a: f64| {
        if a > 0.0 {
            same * a.powf(alpha)
        } else if a < 0.0 {
            opposite * (-a).powf(alpha)
        } else {
            0.0
        }
    };
    if !cfg.force_mc {
        match &spec.kind {
            ProcessKind::RandomCoefMa(l) => {
                let v: f64 = l
                    .vectors()
                    .iter()
                    .zip(l.probs())
                    .map(|(vec, p)| p * vec.iter().map(|&a| term(a)).sum::<f64>())
                    .sum();
                let depth = l.jmin().abs().max(l.jmax().abs()) as usize;
                return Ok(LimitConstant::closed(v, depth));
            }
            ProcessKind::Sre { y } | ProcessKind::StochVol { y, .. } => {
                // p_j = E(A_j^+)^α and n_j = E(A_j^-)^α obey
                // (p, n)_{j+1} = [[a, b], [b, a]] (p, n)_j with a = E(Y^+)^α,
                // b = E(Y^-)^α; summing the geometric series gives
                // Σp = (1-a)/((1-a)^2 - b^2) and Σn = b/((1-a)^2 - b^2).
                let a = y.pos_moment(alpha);
                let b = y.neg_moment(alpha);
                let den = (1.0 - a) * (1.0 - a) - b * b;
                let mut v = (same * (1.0 - a) + opposite * b) / den;
                if let ProcessKind::StochVol { v: vlaw, .. } = &spec.kind {
                    v *= vlaw.abs_moment(alpha);
                }
                return Ok(LimitConstant::closed(v, 0));
            }
            _ => {}
        }
    }
    expect_diag(spec, cfg, move |d| {
        d.values().iter().map(|&a| term(a)).sum()
    })
}

fn check_nonnegative(spec: &ProcessSpec) -> Result<()> {
    if spec.nonnegative_coeffs() {
        Ok(())
    } else {
        Err(Error::param(
            "nonnegative_coeffs",
            "order statistics and hitting times need nonnegative coefficients",
        ))
    }
}

/// Descending nonzero diagonal values `A_1^* ≥ A_2^* ≥ …`.
fn ordered(d: &Diagonal) -> Vec<f64> {
    let mut v: Vec<f64> = d.values().iter().copied().filter(|&a| a != 0.0).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// `w E[min_i (A_i^*/u_i)^α]`.
///
/// Any positive thresholds are accepted: under a single big jump `z` the
/// event needs `A_i^* z > u_i` for every `i`, which is the same minimum
/// whether or not the `u_i` are ordered.
pub fn order_stat_constant(spec: &ProcessSpec, u: &[f64], cfg: &McConfig) -> Result<LimitConstant> {
    check_nonnegative(spec)?;
    convergent_recursion(spec)?;
    check_thresholds(u)?;
    let alpha = spec.alpha();
    let u = u.to_vec();
    let c = expect_diag(spec, cfg, move |d| {
        let a = ordered(d);
        u.iter()
            .enumerate()
            .map(|(i, ui)| a.get(i).map_or(0.0, |ai| (ai / ui).powf(alpha)))
            .fold(f64::INFINITY, f64::min)
    })?;
    Ok(c.scaled(spec.noise.w()))
}

pub(crate) fn check_thresholds(u: &[f64]) -> Result<()> {
    if u.is_empty() {
        return Err(Error::param("u", "need at least one threshold"));
    }
    if !u.iter().all(|&x| x > 0.0) {
        return Err(Error::param("u", "thresholds must be positive"));
    }
    Ok(())
}

/// `λ w a^{-α} E[(A_1^*)^α]`.
pub fn hitting_constant(
    spec: &ProcessSpec,
    lambda: f64,
    a: f64,
    cfg: &McConfig,
) -> Result<LimitConstant> {
    check_nonnegative(spec)?;
    convergent_recursion(spec)?;
    if !(lambda > 0.0) {
        return Err(Error::param("lambda", "must be positive"));
    }
    if !(a > 0.0) {
        return Err(Error::param("a", "must be positive"));
    }
    let alpha = spec.alpha();
    let c = expect_diag(spec, cfg, move |d| {
        ordered(d).first().map_or(0.0, |m| m.powf(alpha))
    })?;
    Ok(c.scaled(lambda * spec.noise.w() * a.powf(-alpha)))
}

/// Signed: `ρ^{-α}(w E[((ΣA)^+)^α] + (1-w) E[((ΣA)^-)^α])`;
/// absolute: `ρ^{-α} E[(Σ|A|)^α]`.
pub fn partial_sum_constant(
    spec: &ProcessSpec,
    rho: f64,
    absolute: bool,
    cfg: &McConfig,
) -> Result<LimitConstant> {
    convergent_recursion(spec)?;
    if !(rho > 0.0) {
        return Err(Error::param("rho", "must be positive"));
    }
    let alpha = spec.alpha();
    let w = spec.noise.w();
    let c = expect_diag(spec, cfg, move |d| {
        if absolute {
            d.values().iter().map(|a| a.abs()).sum::<f64>().powf(alpha)
        } else {
            let s: f64 = d.values().iter().sum();
            if s > 0.0 {
                w * s.powf(alpha)
            } else if s < 0.0 {
                (1.0 - w) * (-s).powf(alpha)
            } else {
                0.0
            }
        }
    })?;
    Ok(c.scaled(rho.powf(-alpha)))
}

/// Largest running sum `sup_j Σ_{k ≤ j} s·A_{k,k}` (zero for the empty sum).
fn running_sup(d: &Diagonal, sign: f64) -> f64 {
    let mut s = 0.0;
    let mut best = 0.0f64;
    for a in d.values() {
        s += sign * a;
        best = best.max(s);
    }
    best
}

/// `E[w (sup_j Σ_{k≤j} A_{k,k})_+^α + (1-w)(sup_j Σ_{k≤j} -A_{k,k})_+^α] / (c(α-1))`.
pub fn ruin_constant(spec: &ProcessSpec, c: f64, cfg: &McConfig) -> Result<LimitConstant> {
    let alpha = spec.alpha();
    if alpha <= 1.0 {
        return Err(Error::param("alpha", "ruin needs alpha > 1"));
    }
    if !(c > 0.0) {
        return Err(Error::param("c", "drift must be positive"));
    }
    convergent_recursion(spec)?;
    let w = spec.noise.w();
    let k = expect_diag(spec, cfg, move |d| {
        w * running_sup(d, 1.0).powf(alpha) + (1.0 - w) * running_sup(d, -1.0).powf(alpha)
    })?;
    // α − 1 is exact for α in [1, 2] (Sterbenz), so one rounding remains.
    let den = c * (alpha - 1.0);
    Ok(LimitConstant {
        value: k.value / den,
        stderr: k.stderr / den,
        ..k
    })
}
