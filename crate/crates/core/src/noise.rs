//! Two-sided Pareto noise with exact tails and its limit measure.
//!
//! The uncentered variable is `Y = ±u0·U^{-1/α}` with `+` chosen with
//! probability `w`, so `P(|Y| > u) = (u/u0)^{-α}` for `u ≥ u0`. A centered law
//! subtracts the constant `E Y`, which leaves the limit measure unchanged.

use crate::error::{Error, Result};
use crate::rng::StreamRng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RegVarLawRepr", into = "RegVarLawRepr")]
pub struct RegVarLaw {
    alpha: f64,
    w: f64,
    u0: f64,
    centered: bool,
    shift: f64,
    neg_inv_alpha: f64,
}

#[derive(Serialize, Deserialize)]
struct RegVarLawRepr {
    alpha: f64,
    w: f64,
    u0: f64,
    centered: bool,
}

impl TryFrom<RegVarLawRepr> for RegVarLaw {
    type Error = Error;
    fn try_from(r: RegVarLawRepr) -> Result<Self> {
        RegVarLaw::new(r.alpha, r.w, r.u0, r.centered)
    }
}

impl From<RegVarLaw> for RegVarLawRepr {
    fn from(l: RegVarLaw) -> Self {
        RegVarLawRepr {
            alpha: l.alpha,
            w: l.w,
            u0: l.u0,
            centered: l.centered,
        }
    }
}

impl RegVarLaw {
    pub fn new(alpha: f64, w: f64, u0: f64, centered: bool) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::param("alpha", format!("must be > 0, got {alpha}")));
        }
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::param("w", format!("must lie in [0,1], got {w}")));
        }
        if !(u0 > 0.0 && u0.is_finite()) {
            return Err(Error::param("u0", format!("must be > 0, got {u0}")));
        }
        if centered && alpha <= 1.0 {
            return Err(Error::param(
                "centered",
                format!("the mean does not exist for alpha = {alpha} <= 1"),
            ));
        }
        let shift = if centered {
            (2.0 * w - 1.0) * u0 * alpha / (alpha - 1.0)
        } else {
            0.0
        };
        Ok(RegVarLaw {
            alpha,
            w,
            u0,
            centered,
            shift,
            neg_inv_alpha: -1.0 / alpha,
        })
    }

    /// Symmetric uncentered law with unit scale.
    pub fn symmetric(alpha: f64) -> Result<Self> {
        Self::new(alpha, 0.5, 1.0, false)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn w(&self) -> f64 {
        self.w
    }
    pub fn u0(&self) -> f64 {
        self.u0
    }
    pub fn centered(&self) -> bool {
        self.centered
    }

    /// Constant subtracted from the uncentered variable (0 when uncentered).
    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn is_symmetric(&self) -> bool {
        self.w == 0.5
    }

    /// `E Z`, when it exists.
    pub fn mean(&self) -> Option<f64> {
        if self.alpha <= 1.0 {
            None
        } else {
            Some((2.0 * self.w - 1.0) * self.u0 * self.alpha / (self.alpha - 1.0) - self.shift)
        }
    }

    #[inline]
    pub(crate) fn magnitude(&self, u: f64, neg_inv_index: f64) -> f64 {
        self.u0 * u.powf(neg_inv_index)
    }

    /// One draw; consumes exactly two uniforms.
    #[inline]
    pub fn sample_one(&self, rng: &mut StreamRng) -> f64 {
        let u = rng.uniform_open();
        let s = rng.uniform();
        let mag = self.magnitude(u, self.neg_inv_alpha);
        let y = if s < self.w { mag } else { -mag };
        y - self.shift
    }

    /// Draw whose magnitude uses Pareto index `index` instead of `alpha`.
    /// Returns the value and `ln(|Y|/u0)`. With `index == alpha` the value is
    /// bit-identical to [`sample_one`](Self::sample_one).
    #[inline]
    pub(crate) fn sample_indexed(&self, rng: &mut StreamRng, index: f64) -> (f64, f64) {
        let u = rng.uniform_open();
        let s = rng.uniform();
        let neg_inv = if index == self.alpha {
            self.neg_inv_alpha
        } else {
            -1.0 / index
        };
        let mag = self.magnitude(u, neg_inv);
        let y = if s < self.w { mag } else { -mag };
        (y - self.shift, neg_inv * u.ln())
    }

    pub fn sample(&self, rng: &mut StreamRng, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.sample_one(rng)).collect()
    }

    /// `P(Y > x)` for the uncentered variable.
    fn surv_y(&self, x: f64) -> f64 {
        if x >= self.u0 {
            self.w * (x / self.u0).powf(-self.alpha)
        } else if x >= -self.u0 {
            self.w
        } else {
            self.w + (1.0 - self.w) * (1.0 - (-x / self.u0).powf(-self.alpha))
        }
    }

    /// `P(Y < x)` for the uncentered variable.
    fn cdf_y(&self, x: f64) -> f64 {
        if x <= -self.u0 {
            (1.0 - self.w) * (-x / self.u0).powf(-self.alpha)
        } else if x <= self.u0 {
            1.0 - self.w
        } else {
            1.0 - self.w * (x / self.u0).powf(-self.alpha)
        }
    }

    /// `P(Z > x)` for any real `x`.
    pub fn upper_tail(&self, x: f64) -> f64 {
        self.surv_y(x + self.shift)
    }

    /// `P(Z < x)` for any real `x`.
    pub fn lower_tail(&self, x: f64) -> f64 {
        self.cdf_y(x + self.shift)
    }

    /// Exact `P(|Z| > u)`.
    pub fn tail(&self, u: f64) -> Result<f64> {
        if !(u > 0.0) {
            return Err(Error::param("u", format!("tail needs u > 0, got {u}")));
        }
        Ok(self.tail_unchecked(u))
    }

    pub(crate) fn tail_unchecked(&self, u: f64) -> f64 {
        (self.surv_y(u + self.shift) + self.cdf_y(self.shift - u)).min(1.0)
    }

    /// `μ((a,∞))` or `μ((-∞,-a))`.
    pub fn mu_halfline(&self, a: f64, side: Side) -> Result<f64> {
        if !(a > 0.0) {
            return Err(Error::param(
                "a",
                format!("mu_halfline needs a > 0, got {a}"),
            ));
        }
        let weight = match side {
            Side::Positive => self.w,
            Side::Negative => 1.0 - self.w,
        };
        Ok(weight * a.powf(-self.alpha))
    }

    pub fn mu_interval(&self, iv: MuInterval) -> f64 {
        let p = |x: f64| {
            if x.is_infinite() {
                0.0
            } else {
                x.abs().powf(-self.alpha)
            }
        };
        if iv.lo > 0.0 {
            self.w * (p(iv.lo) - p(iv.hi))
        } else {
            (1.0 - self.w) * (p(iv.hi) - p(iv.lo))
        }
    }

    /// `μ{a < |z| < b}`; `b` may be infinite.
    pub fn mu_abs_between(&self, a: f64, b: f64) -> f64 {
        let tail_b = if b.is_infinite() {
            0.0
        } else {
            b.powf(-self.alpha)
        };
        a.powf(-self.alpha) - tail_b
    }

    /// Draw from `Z | |Z| > tau`.
    pub fn sample_big(&self, rng: &mut StreamRng, tau: f64) -> f64 {
        let p_hi = self.surv_y(tau + self.shift);
        let p_lo = self.cdf_y(self.shift - tau);
        let pick = rng.uniform() * (p_hi + p_lo);
        let v = rng.uniform_open();
        let y = if pick < p_hi {
            let s = v * p_hi;
            if s <= self.w {
                self.u0 * (s / self.w).powf(self.neg_inv_alpha)
            } else {
                -self.u0 * ((1.0 - s) / (1.0 - self.w)).powf(self.neg_inv_alpha)
            }
        } else {
            let f = v * p_lo;
            if f <= 1.0 - self.w {
                -self.u0 * (f / (1.0 - self.w)).powf(self.neg_inv_alpha)
            } else {
                self.u0 * ((1.0 - f) / self.w).powf(self.neg_inv_alpha)
            }
        };
        y - self.shift
    }

    /// Draw from `Z | |Z| ≤ tau` by rejection; callers keep `P(|Z| > tau)` small.
    pub fn sample_small(&self, rng: &mut StreamRng, tau: f64) -> f64 {
        loop {
            let z = self.sample_one(rng);
            if z.abs() <= tau {
                return z;
            }
        }
    }
}

/// An interval `(lo, hi)` of the real line whose closure avoids the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuInterval {
    lo: f64,
    hi: f64,
}

impl MuInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::param(
                "interval",
                format!("need lo < hi, got ({lo}, {hi})"),
            ));
        }
        if lo <= 0.0 && hi >= 0.0 {
            return Err(Error::param(
                "interval",
                format!("closure of ({lo}, {hi}) contains the origin"),
            ));
        }
        Ok(MuInterval { lo, hi })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Streams;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn construction_rules() {
        assert!(RegVarLaw::new(0.0, 0.5, 1.0, false).is_err());
        assert!(RegVarLaw::new(1.5, 1.1, 1.0, false).is_err());
        assert!(RegVarLaw::new(1.5, 0.5, 0.0, false).is_err());
        assert!(RegVarLaw::new(0.8, 0.5, 1.0, true).is_err());
        assert!(RegVarLaw::new(1.0, 0.5, 1.0, true).is_err());
        let sym = RegVarLaw::new(1.5, 0.5, 1.0, true).unwrap();
        assert_eq!(sym.shift(), 0.0);
    }

    #[test]
    fn pareto_quantile_inversion() {
        // u0·U^{-1/α} with U = 0.01, α = 1.5 is 0.01^{-2/3} = 10^{4/3}.
        let law = RegVarLaw::new(1.5, 1.0, 1.0, false).unwrap();
        let v = law.magnitude(0.01, -1.0 / 1.5);
        assert!(rel(v, 10f64.powf(4.0 / 3.0)) < 1e-14);
        assert!((v - 21.544).abs() < 1e-3);
    }

    #[test]
    fn empty_sample() {
        let law = RegVarLaw::symmetric(1.5).unwrap();
        assert!(law.sample(&mut Streams::new(0).stream(0), 0).is_empty());
    }

    #[test]
    fn tail_values() {
        let law = RegVarLaw::new(1.5, 0.3, 1.0, false).unwrap();
        assert!(rel(law.tail(10.0).unwrap(), 10f64.powf(-1.5)) < 1e-15);
        assert!((law.tail(10.0).unwrap() - 0.0316228).abs() < 1e-7);
        assert_eq!(law.tail(1.0).unwrap(), 1.0);
        assert_eq!(law.tail(0.5).unwrap(), 1.0);
        assert!(rel(law.tail(100.0).unwrap(), 1e-3) < 1e-14);
        assert!(
            rel(
                law.tail(100.0).unwrap(),
                law.tail(10.0).unwrap() * 10f64.powf(-1.5)
            ) < 1e-14
        );
        assert!(law.tail(0.0).is_err());
        assert!(law.tail(-1.0).is_err());
    }

    #[test]
    fn mu_values() {
        let law = RegVarLaw::symmetric(1.5).unwrap();
        let v = law.mu_halfline(2.0, Side::Positive).unwrap();
        assert!(rel(v, 0.5 * 2f64.powf(-1.5)) < 1e-15);
        assert!((v - 0.176777).abs() < 1e-6);
        let one_sided = RegVarLaw::new(1.5, 1.0, 1.0, false).unwrap();
        assert_eq!(one_sided.mu_halfline(1.0, Side::Negative).unwrap(), 0.0);
        assert!(law.mu_halfline(0.0, Side::Positive).is_err());
        for w in [0.0, 0.2, 0.5, 1.0] {
            let l = RegVarLaw::new(0.7, w, 1.0, false).unwrap();
            let tot = l.mu_halfline(1.0, Side::Positive).unwrap()
                + l.mu_halfline(1.0, Side::Negative).unwrap();
            assert!((tot - 1.0).abs() < 1e-15);
        }
        let iv = MuInterval::new(1.0, 2.0).unwrap();
        assert!((law.mu_interval(iv) - 0.5 * (1.0 - 2f64.powf(-1.5))).abs() < 1e-15);
        let neg = MuInterval::new(f64::NEG_INFINITY, -1.0).unwrap();
        assert!((law.mu_interval(neg) - 0.5).abs() < 1e-15);
        assert!(MuInterval::new(-1.0, 1.0).is_err());
        assert!(MuInterval::new(0.0, 1.0).is_err());
    }

    #[test]
    fn centered_tail_is_exact_piecewise() {
        // Brute-force check of the shifted tail against numerically
        // integrated mass of each branch.
        let law = RegVarLaw::new(1.5, 0.8, 1.0, true).unwrap();
        let m = law.shift();
        assert!((m - 0.6 * 3.0).abs() < 1e-15);
        for u in [0.5, 1.0, 2.0, 2.7, 5.0, 40.0] {
            let hi = u + m;
            let lo = m - u;
            let mut p = 0.0;
            if hi >= 1.0 {
                p += 0.8 * hi.powf(-1.5);
            } else {
                p += 0.8;
            }
            if lo <= -1.0 {
                p += 0.2 * (-lo).powf(-1.5);
            } else if lo > 1.0 {
                p += 0.2 + 0.8 * (1.0 - lo.powf(-1.5));
            } else {
                p += 0.2;
            }
            assert!((law.tail(u).unwrap() - p.min(1.0)).abs() < 1e-14, "u={u}");
        }
    }

    #[test]
    fn centered_tail_equivalence() {
        let c = RegVarLaw::new(1.5, 0.8, 1.0, true).unwrap();
        let unc = RegVarLaw::new(1.5, 0.8, 1.0, false).unwrap();
        let r = c.tail(1e3).unwrap() / unc.tail(1e3).unwrap();
        assert!((r - 1.0).abs() < 0.01, "ratio {r}");
    }

    #[test]
    fn symmetric_mean_near_zero() {
        let law = RegVarLaw::symmetric(1.5).unwrap();
        let mut rng = Streams::new(3).stream(0);
        let n = 1_000_000;
        let xs = law.sample(&mut rng, n);
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 3.0 * (var / n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn sampler_matches_tail() {
        let law = RegVarLaw::new(1.5, 0.3, 1.0, false).unwrap();
        let mut rng = Streams::new(4).stream(0);
        let n = 1_000_000;
        let xs = law.sample(&mut rng, n);
        for u in [2.0, 10.0, 50.0] {
            let p = law.tail(u).unwrap();
            let f = xs.iter().filter(|x| x.abs() > u).count() as f64 / n as f64;
            assert!(
                (f - p).abs() <= 4.0 * (p * (1.0 - p) / n as f64).sqrt(),
                "u={u}"
            );
        }
    }

    #[test]
    fn conditional_samplers_respect_threshold_and_law() {
        let law = RegVarLaw::new(1.5, 0.7, 1.0, true).unwrap();
        let mut rng = Streams::new(5).stream(0);
        let tau = 4.0;
        let n = 200_000;
        let big: Vec<f64> = (0..n).map(|_| law.sample_big(&mut rng, tau)).collect();
        assert!(big.iter().all(|z| z.abs() > tau));
        // P(Z > 10 | |Z| > tau) against exact.
        let p = law.upper_tail(10.0) / law.tail(tau).unwrap();
        let f = big.iter().filter(|&&z| z > 10.0).count() as f64 / n as f64;
        assert!((f - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt());
        let p = law.lower_tail(-10.0) / law.tail(tau).unwrap();
        let f = big.iter().filter(|&&z| z < -10.0).count() as f64 / n as f64;
        assert!((f - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt());
        assert!((0..1000).all(|_| law.sample_small(&mut rng, tau).abs() <= tau));
    }

    proptest! {
        #[test]
        fn mu_is_homogeneous(alpha in 0.1f64..4.0, w in 0.0f64..=1.0, a in 0.01f64..100.0, s in 0.01f64..100.0) {
            let law = RegVarLaw::new(alpha, w, 1.0, false).unwrap();
            for side in [Side::Positive, Side::Negative] {
                let lhs = law.mu_halfline(a * s, side).unwrap();
                let rhs = s.powf(-alpha) * law.mu_halfline(a, side).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
            }
        }

        #[test]
        fn tail_is_a_survival_function(alpha in 0.2f64..3.0, w in 0.0f64..=1.0, a in 0.1f64..50.0, b in 0.1f64..50.0) {
            let law = RegVarLaw::new(alpha, w, 1.0, alpha > 1.0).unwrap();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let (tl, th) = (law.tail(lo).unwrap(), law.tail(hi).unwrap());
            prop_assert!((0.0..=1.0).contains(&tl));
            prop_assert!(th <= tl + 1e-15);
        }
    }
}
