//! Process definitions: iid noise, finite moving averages with deterministic
//! or random coefficients, the stochastic recurrence `X_k = Y_k X_{k-1} + Z_k`
//! and the stochastic volatility model `U_k = V_k X_k` built on it.
//!
//! All of them are random-coefficient linear processes
//! `X_k = Σ_j A_{k,j} Z_{k-j}`; the diagonal `A_{j,j}` is what the limit
//! constants and the limit point measure are built from.

pub(crate) mod conditions;
mod simulate;

pub use conditions::{validate_conditions, ConditionEntry, ConditionId, ConditionReport, Status};
pub(crate) use simulate::{noise_count, simulate_with, LawNoise, NoiseSource, PathStream};
pub use simulate::{simulate_path, simulate_sparse, Path, SimPath};

use crate::error::{Error, Result};
use crate::noise::RegVarLaw;
use crate::rng::StreamRng;
use serde::Serialize;

/// A law with finitely many atoms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteLaw {
    values: Vec<f64>,
    probs: Vec<f64>,
    #[serde(skip)]
    cum: Vec<f64>,
}

impl FiniteLaw {
    pub fn new(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() != probs.len() {
            return Err(Error::param(
                "law",
                "values and probabilities must be non-empty and of equal length",
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("law", "values must be finite"));
        }
        if probs.iter().any(|p| !(*p > 0.0)) {
            return Err(Error::param("law", "probabilities must be positive"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::param(
                "law",
                format!("probabilities sum to {total}, not 1"),
            ));
        }
        let probs: Vec<f64> = probs.iter().map(|p| p / total).collect();
        let mut cum = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cum.push(acc);
        }
        Ok(FiniteLaw { values, probs, cum })
    }

    pub fn constant(v: f64) -> Result<Self> {
        Self::new(vec![v], vec![1.0])
    }

    pub fn uniform(values: Vec<f64>) -> Result<Self> {
        let n = values.len().max(1);
        Self::new(values, vec![1.0 / n as f64; n])
    }

    /// `+scale` with probability `p_plus`, `-scale` otherwise.
    pub fn signed_bernoulli(scale: f64, p_plus: f64) -> Result<Self> {
        if p_plus == 1.0 {
            return Self::constant(scale);
        }
        if p_plus == 0.0 {
            return Self::constant(-scale);
        }
        Self::new(vec![scale, -scale], vec![p_plus, 1.0 - p_plus])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().copied().zip(self.probs.iter().copied())
    }

    /// The single value of a one-atom law.
    pub fn degenerate(&self) -> Option<f64> {
        (self.values.len() == 1).then(|| self.values[0])
    }

    /// Draws nothing from `rng` for a one-atom law.
    #[inline]
    pub fn sample(&self, rng: &mut StreamRng) -> f64 {
        if self.values.len() == 1 {
            return self.values[0];
        }
        let u = rng.uniform();
        let i = self
            .cum
            .partition_point(|&c| c <= u)
            .min(self.values.len() - 1);
        self.values[i]
    }

    fn moment(&self, s: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms()
            .map(|(v, p)| {
                let x = f(v);
                if x == 0.0 {
                    0.0
                } else {
                    p * x.powf(s)
                }
            })
            .sum()
    }

    /// `E|Y|^s` (atoms at 0 contribute 0 for s > 0).
    pub fn abs_moment(&self, s: f64) -> f64 {
        self.moment(s, f64::abs)
    }

    /// `E (Y^+)^s`.
    pub fn pos_moment(&self, s: f64) -> f64 {
        self.moment(s, |v| v.max(0.0))
    }

    /// `E (Y^-)^s`.
    pub fn neg_moment(&self, s: f64) -> f64 {
        self.moment(s, |v| (-v).max(0.0))
    }

    pub fn mean_abs(&self) -> f64 {
        self.atoms().map(|(v, p)| p * v.abs()).sum()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    pub fn is_positive(&self) -> bool {
        self.values.iter().all(|&v| v > 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `Y` and `-Y` have the same law.
    pub fn is_symmetric(&self) -> bool {
        self.atoms().all(|(v, p)| {
            let mirrored: f64 = self.atoms().filter(|(u, _)| *u == -v).map(|(_, q)| q).sum();
            let same: f64 = self.atoms().filter(|(u, _)| *u == v).map(|(_, q)| q).sum();
            (mirrored - same).abs() <= 1e-12 * (1.0 + p)
        })
    }
}

/// Deterministic coefficients `A_j`, `j = jmin..=jmax`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaCoeffs {
    jmin: i64,
    values: Vec<f64>,
}

impl MaCoeffs {
    pub fn new(jmin: i64, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::param(
                "coeffs",
                "moving average needs at least one coefficient",
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("coeffs", "coefficients must be finite"));
        }
        Ok(MaCoeffs { jmin, values })
    }

    pub fn jmin(&self) -> i64 {
        self.jmin
    }
    pub fn jmax(&self) -> i64 {
        self.jmin + self.values.len() as i64 - 1
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, j: i64) -> f64 {
        if j < self.jmin || j > self.jmax() {
            0.0
        } else {
            self.values[(j - self.jmin) as usize]
        }
    }
}

/// Coefficient vectors `(A_{k,jmin}, …, A_{k,jmax})` drawn i.i.d. over `k`
/// from a finite set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RandomCoefLaw {
    jmin: i64,
    vectors: Vec<Vec<f64>>,
    probs: Vec<f64>,
    #[serde(skip)]
    picker: FiniteLaw,
}

impl RandomCoefLaw {
    pub fn new(jmin: i64, vectors: Vec<Vec<f64>>, probs: Vec<f64>) -> Result<Self> {
        let len = vectors.first().map(Vec::len).unwrap_or(0);
        if len == 0 || vectors.iter().any(|v| v.len() != len) {
            return Err(Error::param(
                "coeff_law",
                "coefficient vectors must be non-empty and share one support",
            ));
        }
        if vectors.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::param("coeff_law", "coefficients must be finite"));
        }
        let idx = (0..vectors.len()).map(|i| i as f64).collect();
        let picker = FiniteLaw::new(idx, probs.clone())?;
        Ok(RandomCoefLaw {
            jmin,
            vectors,
            probs: picker.probs().to_vec(),
            picker,
        })
    }

    pub fn jmin(&self) -> i64 {
        self.jmin
    }
    pub fn jmax(&self) -> i64 {
        self.jmin + self.vectors[0].len() as i64 - 1
    }
    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn sample(&self, rng: &mut StreamRng) -> &[f64] {
        let i = self.picker.sample(rng) as usize;
        &self.vectors[i]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessKind {
    Iid,
    MovingAverage(MaCoeffs),
    RandomCoefMa(RandomCoefLaw),
    Sre { y: FiniteLaw },
    StochVol { y: FiniteLaw, v: FiniteLaw },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProcessSpec {
    pub noise: RegVarLaw,
    pub kind: ProcessKind,
}

/// Sampled diagonal `A_{j,j}` for `|j| ≤ depth`.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagonal {
    depth: usize,
    values: Vec<f64>,
}

impl Diagonal {
    pub fn zeros(depth: usize) -> Self {
        Diagonal {
            depth,
            values: vec![0.0; 2 * depth + 1],
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn get(&self, j: i64) -> f64 {
        let d = self.depth as i64;
        if j < -d || j > d {
            0.0
        } else {
            self.values[(j + d) as usize]
        }
    }

    fn set(&mut self, j: i64, v: f64) {
        let d = self.depth as i64;
        self.values[(j + d) as usize] = v;
    }

    /// Values ordered from `j = -depth` to `j = depth`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

const SRE_DEPTH_TOL: f64 = 1e-8;
const MAX_DEPTH: usize = 100_000;

impl ProcessSpec {
    pub fn iid(noise: RegVarLaw) -> Self {
        ProcessSpec {
            noise,
            kind: ProcessKind::Iid,
        }
    }

    pub fn moving_average(noise: RegVarLaw, jmin: i64, coeffs: Vec<f64>) -> Result<Self> {
        Ok(ProcessSpec {
            noise,
            kind: ProcessKind::MovingAverage(MaCoeffs::new(jmin, coeffs)?),
        })
    }

    pub fn random_coef_ma(noise: RegVarLaw, law: RandomCoefLaw) -> Self {
        ProcessSpec {
            noise,
            kind: ProcessKind::RandomCoefMa(law),
        }
    }

    pub fn sre(noise: RegVarLaw, y: FiniteLaw) -> Self {
        ProcessSpec {
            noise,
            kind: ProcessKind::Sre { y },
        }
    }

    pub fn stoch_vol(noise: RegVarLaw, y: FiniteLaw, v: FiniteLaw) -> Result<Self> {
        if !v.is_positive() {
            return Err(Error::param(
                "v_law",
                "volatility multipliers must be positive",
            ));
        }
        Ok(ProcessSpec {
            noise,
            kind: ProcessKind::StochVol { y, v },
        })
    }

    pub fn alpha(&self) -> f64 {
        self.noise.alpha()
    }

    /// Coefficient index range of a finite-memory process.
    pub fn finite_support(&self) -> Option<(i64, i64)> {
        match &self.kind {
            ProcessKind::Iid => Some((0, 0)),
            ProcessKind::MovingAverage(c) => Some((c.jmin(), c.jmax())),
            ProcessKind::RandomCoefMa(l) => Some((l.jmin(), l.jmax())),
            ProcessKind::Sre { .. } | ProcessKind::StochVol { .. } => None,
        }
    }

    /// Almost-sure bound on `Σ_j |A_{k,j}|` for finite-memory processes.
    pub fn abs_coeff_bound(&self) -> Option<f64> {
        match &self.kind {
            ProcessKind::Iid => Some(1.0),
            ProcessKind::MovingAverage(c) => Some(c.values().iter().map(|a| a.abs()).sum()),
            ProcessKind::RandomCoefMa(l) => Some(
                l.vectors()
                    .iter()
                    .map(|v| v.iter().map(|a| a.abs()).sum::<f64>())
                    .fold(0.0, f64::max),
            ),
            _ => None,
        }
    }

    /// Whether every `A_{k,j}` is almost surely nonnegative.
    pub fn nonnegative_coeffs(&self) -> bool {
        match &self.kind {
            ProcessKind::Iid => true,
            ProcessKind::MovingAverage(c) => c.values().iter().all(|&a| a >= 0.0),
            ProcessKind::RandomCoefMa(l) => l.vectors().iter().flatten().all(|&a| a >= 0.0),
            ProcessKind::Sre { y } | ProcessKind::StochVol { y, .. } => y.is_nonnegative(),
        }
    }

    pub fn y_law(&self) -> Option<&FiniteLaw> {
        match &self.kind {
            ProcessKind::Sre { y } | ProcessKind::StochVol { y, .. } => Some(y),
            _ => None,
        }
    }

    /// Burn-in for the recursion started at zero: geometric forgetting at
    /// rate `E|Y|^{min(1,α)}` pushed below `e^{-(α+50)}`, at least 1000 steps.
    pub fn sre_burn_in(&self) -> Option<usize> {
        let y = self.y_law()?;
        let rate = y.abs_moment(self.alpha().min(1.0));
        let steps = if rate <= 0.0 {
            0.0
        } else if rate >= 1.0 {
            f64::INFINITY
        } else {
            ((self.alpha() + 50.0) / -rate.ln()).ceil()
        };
        Some(if steps.is_finite() {
            (steps as usize).max(1000)
        } else {
            usize::MAX
        })
    }

    /// Default truncation depth for diagonal expectations: the support for
    /// finite-memory processes; for recursions the smallest `J` with
    /// `(E|Y|)^J < 1e-8`.
    pub fn default_depth(&self) -> usize {
        match self.finite_support() {
            Some((lo, hi)) => lo.unsigned_abs().max(hi.unsigned_abs()) as usize,
            None => {
                let y = self.y_law().expect("recursive kinds carry a Y law");
                let mut rate = y.mean_abs();
                if rate >= 1.0 {
                    // E|Y| ≥ 1 is possible for α < 1; decay then runs at E|Y|^α.
                    rate = y.abs_moment(self.alpha());
                }
                if rate <= 0.0 {
                    1
                } else if rate >= 1.0 {
                    MAX_DEPTH
                } else {
                    let j = (SRE_DEPTH_TOL.ln() / rate.ln()).floor() as usize + 1;
                    j.clamp(1, MAX_DEPTH)
                }
            }
        }
    }

    /// The diagonal when it does not depend on chance.
    pub fn deterministic_diagonal(&self, depth: usize) -> Option<Diagonal> {
        let mut d = Diagonal::zeros(depth);
        match &self.kind {
            ProcessKind::Iid => d.set(0, 1.0),
            ProcessKind::MovingAverage(c) => {
                for j in -(depth as i64)..=depth as i64 {
                    d.set(j, c.get(j));
                }
            }
            ProcessKind::RandomCoefMa(l) => {
                if l.vectors().len() != 1 {
                    return None;
                }
                let c = MaCoeffs::new(l.jmin(), l.vectors()[0].clone()).ok()?;
                for j in -(depth as i64)..=depth as i64 {
                    d.set(j, c.get(j));
                }
            }
            ProcessKind::Sre { y } => {
                let y = y.degenerate()?;
                let mut prod = 1.0;
                for j in 0..=depth as i64 {
                    d.set(j, prod);
                    prod *= y;
                }
            }
            ProcessKind::StochVol { y, v } => {
                let (y, v) = (y.degenerate()?, v.degenerate()?);
                let mut prod = 1.0;
                for j in 0..=depth as i64 {
                    d.set(j, v * prod);
                    prod *= y;
                }
            }
        }
        Some(d)
    }
}

/// One draw of the diagonal `A_{j,j}`, `|j| ≤ depth`.
pub fn coeff_sequence_sample(spec: &ProcessSpec, depth: usize, rng: &mut StreamRng) -> Diagonal {
    let mut d = Diagonal::zeros(depth);
    let dd = depth as i64;
    match &spec.kind {
        ProcessKind::Iid => d.set(0, 1.0),
        ProcessKind::MovingAverage(c) => {
            for j in -dd..=dd {
                d.set(j, c.get(j));
            }
        }
        ProcessKind::RandomCoefMa(l) => {
            for j in l.jmin().max(-dd)..=l.jmax().min(dd) {
                let v = l.sample(rng);
                d.set(j, v[(j - l.jmin()) as usize]);
            }
        }
        ProcessKind::Sre { y } => {
            let mut prod = 1.0;
            d.set(0, 1.0);
            for j in 1..=dd {
                prod *= y.sample(rng);
                d.set(j, prod);
            }
        }
        ProcessKind::StochVol { y, v } => {
            let mut prod = 1.0;
            d.set(0, 1.0);
            for j in 1..=dd {
                prod *= y.sample(rng);
                d.set(j, prod);
            }
            for j in 0..=dd {
                let vj = v.sample(rng);
                d.set(j, vj * d.get(j));
            }
        }
    }
    d
}
