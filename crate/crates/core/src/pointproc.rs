//! Large-deviation point processes of lagged exceedances and their limit.

use crate::error::{Error, Result};
use crate::estimate::{Estimate, Normalization};
use crate::noise::RegVarLaw;
use crate::process::conditions::gamma_rule;
use crate::process::{
    coeff_sequence_sample, simulate_path, simulate_sparse, Diagonal, Path, ProcessSpec, Status,
};
use crate::rng::{domain, StreamRng, Streams};
use crate::stats::{map_chunks, MeanAcc};
use serde::{Deserialize, Serialize};

/// Draws used to estimate the reach of the coefficient diagonal.
const RHO_PILOT_DRAWS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalizationPlan {
    pub n: usize,
    pub beta: f64,
    pub gamma_n: f64,
    pub r_n: f64,
}

/// `γ_n = n^β` and `r_n = 1/(n P(|Z| > γ_n))`.
pub fn make_plan(n: usize, beta: f64, noise: &RegVarLaw) -> Result<NormalizationPlan> {
    if n < 1 {
        return Err(Error::param("n", "must be at least 1"));
    }
    let verdict = gamma_rule(noise.alpha(), beta);
    if verdict.status != Status::Holds {
        return Err(Error::ConditionFailed {
            id: "GAMMA",
            reason: verdict.evidence,
        });
    }
    let gamma_n = (n as f64).powf(beta);
    let r_n = 1.0 / (n as f64 * noise.tail(gamma_n)?);
    Ok(NormalizationPlan {
        n,
        beta,
        gamma_n,
        r_n,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub t: f64,
    pub x: Vec<f64>,
}

impl Point {
    pub fn norm(&self) -> f64 {
        self.x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Points `(k/n, X_k/γ_n, …, X_{k-q}/γ_n)` whose largest coordinate exceeds
/// the storage floor.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMeasure {
    q: usize,
    floor_tau: f64,
    points: Vec<Point>,
}

#[derive(Serialize, Deserialize)]
struct PointMeasureRepr {
    q: usize,
    floor: f64,
    points: Vec<Vec<f64>>,
}

impl PointMeasure {
    pub fn new(q: usize, floor_tau: f64, points: Vec<Point>) -> Result<Self> {
        if !(floor_tau > 0.0) {
            return Err(Error::param("floor_tau", "must be positive"));
        }
        for p in &points {
            if p.x.len() != q + 1 {
                return Err(Error::param("points", "every point needs q+1 coordinates"));
            }
            if !(0.0..=1.0).contains(&p.t) {
                return Err(Error::param("points", "time must lie in [0, 1]"));
            }
            if !p.x.iter().any(|v| v.abs() > floor_tau) {
                return Err(Error::param("points", "point below the storage floor"));
            }
        }
        Ok(PointMeasure {
            q,
            floor_tau,
            points,
        })
    }

    pub fn empty(q: usize, floor_tau: f64) -> Self {
        PointMeasure {
            q,
            floor_tau,
            points: Vec::new(),
        }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn floor_tau(&self) -> f64 {
        self.floor_tau
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn is_null(&self) -> bool {
        self.points.is_empty()
    }

    /// `ξ(g) = Σ g(t, |x|)`.
    pub fn integrate(&self, g: &AnnulusTestFn) -> f64 {
        self.points.iter().map(|p| g.eval(p.t, p.norm())).sum()
    }

    /// Build from the stretches of a sparse simulation; values outside the
    /// stretches are known to stay at or below `floor_tau·γ_n`.
    pub fn from_segments(
        segments: &[Path],
        plan: &NormalizationPlan,
        q: usize,
        floor_tau: f64,
    ) -> Result<Self> {
        let mut pm = PointMeasure::new(q, floor_tau, Vec::new())?;
        for seg in segments {
            let lo = (seg.start() + q as i64).max(1);
            let hi = seg.end().min(plan.n as i64);
            pm.push_range(seg, plan, lo, hi);
        }
        Ok(pm)
    }

    fn push_range(&mut self, path: &Path, plan: &NormalizationPlan, lo: i64, hi: i64) {
        let level = self.floor_tau * plan.gamma_n;
        let vals = path.values();
        let off = path.start();
        for k in lo..=hi {
            let base = (k - off) as usize;
            let window = &vals[base - self.q..=base];
            if window.iter().any(|v| v.abs() > level) {
                self.points.push(Point {
                    t: k as f64 / plan.n as f64,
                    x: window.iter().rev().map(|v| v / plan.gamma_n).collect(),
                });
            }
        }
    }

    /// Rows `t,x0,…,xq` with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for i in 0..=self.q {
            out.push_str(&format!(",x{i}"));
        }
        out.push('\n');
        for p in &self.points {
            out.push_str(&format!("{:.16e}", p.t));
            for v in &p.x {
                out.push_str(&format!(",{v:.16e}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, floor_tau: f64) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::param("csv", "missing header"))?;
        let cols = header.split(',').count();
        if cols < 2 || !header.starts_with('t') {
            return Err(Error::param("csv", "header must be t,x0,…"));
        }
        let q = cols - 2;
        let mut points = Vec::new();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let vals: std::result::Result<Vec<f64>, _> =
                line.split(',').map(|f| f.trim().parse::<f64>()).collect();
            let vals = vals.map_err(|e| Error::param("csv", format!("row {}: {e}", i + 1)))?;
            if vals.len() != cols {
                return Err(Error::param("csv", format!("row {}: wrong width", i + 1)));
            }
            points.push(Point {
                t: vals[0],
                x: vals[1..].to_vec(),
            });
        }
        PointMeasure::new(q, floor_tau, points)
    }

    /// `{"q": …, "floor": …, "points": [[t, x0, …], …]}`.
    pub fn to_json(&self) -> String {
        let repr = PointMeasureRepr {
            q: self.q,
            floor: self.floor_tau,
            points: self
                .points
                .iter()
                .map(|p| std::iter::once(p.t).chain(p.x.iter().copied()).collect())
                .collect(),
        };
        serde_json::to_string(&repr).expect("finite values serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let repr: PointMeasureRepr =
            serde_json::from_str(text).map_err(|e| Error::param("json", e.to_string()))?;
        let mut points = Vec::with_capacity(repr.points.len());
        for row in repr.points {
            if row.is_empty() {
                return Err(Error::param("json", "empty point"));
            }
            points.push(Point {
                t: row[0],
                x: row[1..].to_vec(),
            });
        }
        PointMeasure::new(repr.q, repr.floor, points)
    }
}

/// `N_n^q` from a path covering `X_{1-q}..X_n`.
pub fn build_point_measure(
    path: &Path,
    plan: &NormalizationPlan,
    q: usize,
    floor_tau: f64,
) -> Result<PointMeasure> {
    let need_from = 1 - q as i64;
    let need_to = plan.n as i64;
    if path.start() > need_from || path.end() < need_to {
        return Err(Error::MissingLagPrefix {
            need_from,
            need_to,
            have_from: path.start(),
            have_to: path.end(),
        });
    }
    let mut pm = PointMeasure::new(q, floor_tau, Vec::new())?;
    pm.push_range(path, plan, 1, need_to);
    Ok(pm)
}

/// Trapezoid on `[lo, hi]`: zero outside, one on the middle half, linear in
/// between. Sides flagged `open` have no ramp.
fn trapezoid(x: f64, lo: f64, hi: f64, ramp_lo: bool, ramp_hi: bool) -> f64 {
    if x < lo || x > hi {
        return 0.0;
    }
    let quarter = 0.25 * (hi - lo);
    let mut v: f64 = 1.0;
    if ramp_lo {
        v = v.min((x - lo) / quarter);
    }
    if ramp_hi {
        v = v.min((hi - x) / quarter);
    }
    v.max(0.0)
}

/// `g(t, x) = h · ramp(|x|; a, b) · ramp(t; s0, s1)`.
///
/// The time ramp is dropped at the ends of `[0, 1]`, so the full window
/// contributes a factor of one everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusTestFn {
    pub a: f64,
    pub b: f64,
    pub s0: f64,
    pub s1: f64,
    pub h: f64,
}

impl AnnulusTestFn {
    pub fn new(a: f64, b: f64, s0: f64, s1: f64, h: f64) -> Result<Self> {
        if !(a > 0.0 && b > a && b.is_finite()) {
            return Err(Error::param("annulus", "need 0 < a < b < inf"));
        }
        if !(0.0 <= s0 && s0 < s1 && s1 <= 1.0) {
            return Err(Error::param("annulus", "need 0 <= s0 < s1 <= 1"));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::param("annulus", "height must be positive"));
        }
        Ok(AnnulusTestFn { a, b, s0, s1, h })
    }

    /// Full time window, unit height.
    pub fn radial(a: f64, b: f64) -> Result<Self> {
        Self::new(a, b, 0.0, 1.0, 1.0)
    }

    pub fn eval(&self, t: f64, r: f64) -> f64 {
        let radial = trapezoid(r, self.a, self.b, true, true);
        if radial == 0.0 {
            return 0.0;
        }
        self.h * radial * trapezoid(t, self.s0, self.s1, self.s0 > 0.0, self.s1 < 1.0)
    }

    /// Radial plateau `[a + (b-a)/4, b - (b-a)/4]`.
    pub fn plateau(&self) -> (f64, f64) {
        let quarter = 0.25 * (self.b - self.a);
        (self.a + quarter, self.b - quarter)
    }

    pub fn lipschitz(&self) -> f64 {
        let radial = 4.0 / (self.b - self.a);
        let time = if self.s0 > 0.0 || self.s1 < 1.0 {
            4.0 / (self.s1 - self.s0)
        } else {
            0.0
        };
        self.h * radial.max(time)
    }
}

/// The two annuli and hinge levels of `F_{g1,g2,ε1,ε2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunctional {
    pub g1: AnnulusTestFn,
    pub g2: AnnulusTestFn,
    pub eps1: f64,
    pub eps2: f64,
}

impl TestFunctional {
    pub fn new(g1: AnnulusTestFn, g2: AnnulusTestFn, eps1: f64, eps2: f64) -> Result<Self> {
        if !(eps1 > 0.0 && eps2 > 0.0) {
            return Err(Error::param("eps", "hinge levels must be positive"));
        }
        Ok(TestFunctional { g1, g2, eps1, eps2 })
    }

    pub fn min_radius(&self) -> f64 {
        self.g1.a.min(self.g2.a)
    }

    /// Storage floor that leaves the functional unaffected.
    pub fn default_floor(&self) -> f64 {
        0.05 * self.min_radius()
    }

    #[inline]
    fn combine(&self, s1: f64, s2: f64) -> f64 {
        let f1 = -(-(s1 - self.eps1).max(0.0)).exp_m1();
        let f2 = -(-(s2 - self.eps2).max(0.0)).exp_m1();
        f1 * f2
    }
}

/// `(1 - e^{-(ξ(g1)-ε1)+})(1 - e^{-(ξ(g2)-ε2)+})`.
pub fn eval_f(xi: &PointMeasure, f: &TestFunctional) -> Result<f64> {
    if f.min_radius() <= xi.floor_tau {
        return Err(Error::BelowFloor {
            support: f.min_radius(),
            floor: xi.floor_tau,
        });
    }
    Ok(f.combine(xi.integrate(&f.g1), xi.integrate(&f.g2)))
}

/// Diagnostic distance `Σ_{i ≤ depth} 2^{-i} |Δ_i|/(1+|Δ_i|)` with
/// `Δ_i = ξ(h_i) − η(h_i)` and `h_i` the unit annulus on `[1/i, 2/i]`.
pub fn metric_d(xi: &PointMeasure, eta: &PointMeasure, family_depth: usize) -> Result<f64> {
    if xi.q != eta.q {
        return Err(Error::param("q", "measures must share q"));
    }
    let mut d = 0.0;
    for i in 1..=family_depth {
        let a = 1.0 / i as f64;
        let h = AnnulusTestFn::radial(a, 2.0 * a).expect("valid annulus");
        let diff = (xi.integrate(&h) - eta.integrate(&h)).abs();
        d += 0.5f64.powi(i as i32) * diff / (1.0 + diff);
    }
    Ok(d)
}

/// Largest Euclidean norm of a lag window `(A_{j,j}, …, A_{j-q,j-q})`.
fn max_window_norm(d: &Diagonal, q: usize) -> f64 {
    let depth = d.depth() as i64;
    (-depth..=depth + q as i64)
        .map(|j| {
            (0..=q as i64)
                .map(|i| d.get(j - i).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

/// Options for [`limit_f_mc`]; `None` selects the documented defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LimitOptions {
    pub rho: Option<f64>,
    pub depth: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitF {
    pub estimate: Estimate,
    pub rho: f64,
    pub depth: usize,
    /// Draws whose diagonal could carry noise below `rho` into the support.
    pub rho_violations: u64,
    /// Draws with a point norm exactly on an annulus radius.
    pub boundary_hits: u64,
    /// Every draw gave `F = 0`.
    pub degenerate: bool,
}

/// `ρ = 0.5·min a / (99.9% quantile of the largest lag-window norm)`.
pub fn default_rho(
    spec: &ProcessSpec,
    q: usize,
    f: &TestFunctional,
    depth: usize,
    streams: &Streams,
) -> Result<f64> {
    let reach = match spec.deterministic_diagonal(depth) {
        Some(d) => max_window_norm(&d, q),
        None => {
            let s = streams.domain(domain::RHO_PILOT);
            let mut norms: Vec<f64> = (0..RHO_PILOT_DRAWS)
                .map(|r| max_window_norm(&coeff_sequence_sample(spec, depth, &mut s.stream(r)), q))
                .collect();
            norms.sort_by(f64::total_cmp);
            norms[((norms.len() as f64) * 0.999) as usize]
        }
    };
    if !(reach > 0.0) {
        return Err(Error::Unsupported("coefficient diagonal vanishes".into()));
    }
    Ok(0.5 * f.min_radius() / reach)
}

/// Monte Carlo value of the limit measure `m^q(F)`: `(t, z)` from
/// `Leb × μ` restricted to `|z| > ρ`, pushed through the coefficient
/// diagonal, weighted by `μ{|z| > ρ} = ρ^{-α}`.
pub fn limit_f_mc(
    spec: &ProcessSpec,
    q: usize,
    f: &TestFunctional,
    opts: LimitOptions,
    reps: u64,
    streams: &Streams,
) -> Result<LimitF> {
    if reps == 0 {
        return Err(Error::param("reps", "must be positive"));
    }
    let depth = opts.depth.unwrap_or_else(|| spec.default_depth());
    if let Some((lo, hi)) = spec.finite_support() {
        if (depth as i64) < lo.abs().max(hi.abs()) {
            return Err(Error::param(
                "depth",
                "shorter than the coefficient support",
            ));
        }
    }
    let rho = match opts.rho {
        Some(r) if r > 0.0 => r,
        Some(_) => return Err(Error::param("rho", "must be positive")),
        None => default_rho(spec, q, f, depth, streams)?,
    };
    let law = &spec.noise;
    let restricted = RegVarLaw::new(law.alpha(), law.w(), rho, false)?;
    let fixed = spec.deterministic_diagonal(depth);
    let radii = [f.g1.a, f.g1.b, f.g2.a, f.g2.b];
    let min_a = f.min_radius();
    let s = streams.domain(domain::LIMIT);
    let dd = depth as i64;

    let chunks = map_chunks(reps, |range| {
        let mut acc = MeanAcc::default();
        let (mut viol, mut hits) = (0u64, 0u64);
        for r in range {
            let mut rng = s.stream(r);
            let t = rng.uniform();
            let z = restricted.sample_one(&mut rng);
            let drawn;
            let diag = match &fixed {
                Some(d) => d,
                None => {
                    drawn = coeff_sequence_sample(spec, depth, &mut rng);
                    &drawn
                }
            };
            if fixed.is_none() && rho * max_window_norm(diag, q) >= min_a {
                viol += 1;
            }
            let (mut s1, mut s2) = (0.0, 0.0);
            for j in -dd..=dd + q as i64 {
                let norm = z.abs()
                    * (0..=q as i64)
                        .map(|i| diag.get(j - i).powi(2))
                        .sum::<f64>()
                        .sqrt();
                if norm == 0.0 {
                    continue;
                }
                if radii.contains(&norm) {
                    hits += 1;
                }
                s1 += f.g1.eval(t, norm);
                s2 += f.g2.eval(t, norm);
            }
            acc.push(f.combine(s1, s2));
        }
        (acc, viol, hits)
    });
    let mut acc = MeanAcc::default();
    let (mut viol, mut hits) = (0, 0);
    for (a, v, h) in &chunks {
        acc.merge(a);
        viol += v;
        hits += h;
    }
    let weight = rho.powf(-law.alpha());
    Ok(LimitF {
        estimate: Estimate::new(
            weight * acc.mean(),
            weight * acc.stderr(),
            reps,
            Normalization::Raw,
        ),
        rho,
        depth,
        rho_violations: viol,
        boundary_hits: hits,
        degenerate: acc.mean() == 0.0,
    })
}

/// One replication of `N_n^q`, from the sparse simulator when the process
/// has finite memory.
pub fn sample_point_measure(
    spec: &ProcessSpec,
    plan: &NormalizationPlan,
    q: usize,
    floor_tau: f64,
    rng: &mut StreamRng,
) -> Result<PointMeasure> {
    if spec.finite_support().is_some() {
        let segs = simulate_sparse(spec, plan.n, q, floor_tau * plan.gamma_n, rng)?;
        PointMeasure::from_segments(&segs, plan, q, floor_tau)
    } else {
        let sim = simulate_path(spec, plan.n, q, rng, false)?;
        build_point_measure(&sim.path, plan, q, floor_tau)
    }
}

/// `m_n^q(F) = r_n E[F(N_n^q)]`.
pub fn empirical_f_mc(
    spec: &ProcessSpec,
    plan: &NormalizationPlan,
    q: usize,
    f: &TestFunctional,
    reps: u64,
    streams: &Streams,
) -> Result<Estimate> {
    if reps == 0 {
        return Err(Error::param("reps", "must be positive"));
    }
    let floor = f.default_floor();
    let s = streams.domain(domain::PATHS);
    let chunks = map_chunks(reps, |range| -> Result<MeanAcc> {
        let mut acc = MeanAcc::default();
        for r in range {
            let xi = sample_point_measure(spec, plan, q, floor, &mut s.stream(r))?;
            acc.push(eval_f(&xi, f)?);
        }
        Ok(acc)
    });
    let mut acc = MeanAcc::default();
    for c in chunks {
        acc.merge(&c?);
    }
    Ok(Estimate::new(
        plan.r_n * acc.mean(),
        plan.r_n * acc.stderr(),
        reps,
        Normalization::ByNPz,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::FiniteLaw;

    fn sym15() -> RegVarLaw {
        RegVarLaw::symmetric(1.5).unwrap()
    }

    #[test]
    fn plan_values() {
        let p = make_plan(10_000, 1.0, &sym15()).unwrap();
        assert_eq!(p.gamma_n, 1e4);
        assert!((p.r_n - 100.0).abs() < 1e-10);
        let p = make_plan(1, 1.0, &sym15()).unwrap();
        assert_eq!(p.r_n, 1.0);
        let law = RegVarLaw::new(0.8, 1.0, 1.0, false).unwrap();
        assert!(matches!(
            make_plan(1000, 1.2, &law),
            Err(Error::ConditionFailed { id: "GAMMA", .. })
        ));
        assert!(make_plan(0, 1.0, &sym15()).is_err());
    }

    fn plan(n: usize, gamma: f64) -> NormalizationPlan {
        NormalizationPlan {
            n,
            beta: 1.0,
            gamma_n: gamma,
            r_n: 1.0,
        }
    }

    #[test]
    fn point_measure_by_definition() {
        let path = Path::new(0, vec![0.0, 0.0, 20.0, 5.0, 0.0]);
        let pm = build_point_measure(&path, &plan(4, 10.0), 1, 0.1).unwrap();
        let got: Vec<(f64, Vec<f64>)> = pm.points().iter().map(|p| (p.t, p.x.clone())).collect();
        assert_eq!(
            got,
            vec![
                (0.5, vec![2.0, 0.0]),
                (0.75, vec![0.5, 2.0]),
                (1.0, vec![0.0, 0.5]),
            ]
        );
        let quiet = Path::new(0, vec![0.0, 0.5, -1.0, 0.2, 0.0]);
        assert!(build_point_measure(&quiet, &plan(4, 10.0), 1, 0.1)
            .unwrap()
            .is_null());
        let q0 = build_point_measure(&path, &plan(4, 10.0), 0, 0.1).unwrap();
        assert!(q0.points().iter().all(|p| p.x.len() == 1));
        assert_eq!(q0.points().len(), 2);
    }

    #[test]
    fn missing_prefix() {
        let path = Path::new(1, vec![1.0; 4]);
        assert!(matches!(
            build_point_measure(&path, &plan(4, 1.0), 1, 0.1),
            Err(Error::MissingLagPrefix { .. })
        ));
    }

    #[test]
    fn f_values() {
        let g = AnnulusTestFn::radial(1.0, 2.0).unwrap();
        let f = TestFunctional::new(g, g, 0.5, 0.5).unwrap();
        let empty = PointMeasure::empty(0, 0.05);
        assert_eq!(eval_f(&empty, &f).unwrap(), 0.0);
        let one = PointMeasure::new(
            0,
            0.05,
            vec![Point {
                t: 0.5,
                x: vec![1.5],
            }],
        )
        .unwrap();
        let expect = (1.0 - (-0.5f64).exp()).powi(2);
        assert!((eval_f(&one, &f).unwrap() - expect).abs() < 1e-15);
        assert!((expect - 0.154818).abs() < 1e-6);
        let hinge = TestFunctional::new(g, g, 1.0, 0.5).unwrap();
        assert_eq!(eval_f(&one, &hinge).unwrap(), 0.0);
        let low = PointMeasure::empty(0, 1.0);
        assert!(matches!(eval_f(&low, &f), Err(Error::BelowFloor { .. })));
    }

    #[test]
    fn metric_values() {
        let one = PointMeasure::new(
            0,
            0.01,
            vec![Point {
                t: 0.3,
                x: vec![1.5],
            }],
        )
        .unwrap();
        let empty = PointMeasure::empty(0, 0.01);
        assert_eq!(metric_d(&one, &one, 20).unwrap(), 0.0);
        let d = metric_d(&empty, &one, 20).unwrap();
        assert!(d >= 0.25);
        assert_eq!(d, metric_d(&one, &empty, 20).unwrap());
    }

    #[test]
    fn ramps() {
        let g = AnnulusTestFn::new(1.0, 3.0, 0.2, 0.6, 2.0).unwrap();
        assert_eq!(g.eval(0.4, 2.0), 2.0);
        assert_eq!(g.eval(0.4, 1.0), 0.0);
        assert_eq!(g.eval(0.4, 1.25), 1.0);
        assert!((g.eval(0.25, 2.0) - 1.0).abs() < 1e-12);
        assert_eq!(g.eval(0.7, 2.0), 0.0);
        let full = AnnulusTestFn::radial(1.0, 3.0).unwrap();
        assert_eq!(full.eval(0.0, 2.0), 1.0);
        assert_eq!(full.eval(1.0, 2.0), 1.0);
        assert_eq!(full.plateau(), (1.5, 2.5));
    }

    #[test]
    fn io_round_trip_bit_exact() {
        let pts = vec![
            Point {
                t: 0.1,
                x: vec![1.0 / 3.0, -2.0f64.sqrt()],
            },
            Point {
                t: 1.0,
                x: vec![f64::MIN_POSITIVE, 1e300],
            },
        ];
        let pm = PointMeasure::new(1, 1e-3, pts).unwrap();
        assert_eq!(PointMeasure::from_csv(&pm.to_csv(), 1e-3).unwrap(), pm);
        assert_eq!(PointMeasure::from_json(&pm.to_json()).unwrap(), pm);
    }

    #[test]
    fn limit_ma_has_three_points() {
        let spec = ProcessSpec::moving_average(sym15(), 0, vec![1.0, 0.5]).unwrap();
        let d = spec.deterministic_diagonal(spec.default_depth()).unwrap();
        let nonzero = (-1..=2)
            .filter(|&j| (0..=1).any(|i| d.get(j - i) != 0.0))
            .count();
        assert_eq!(nonzero, 3);
    }

    /// Independent oracle: for i.i.d. noise and q = 0 the limit is the
    /// one-dimensional integral of F against μ, done here by composite
    /// Simpson on each side.
    fn iid_limit_oracle(law: &RegVarLaw, f: &TestFunctional) -> f64 {
        let lo = f.min_radius();
        let hi = f.g1.b.max(f.g2.b);
        let m = 20_000;
        let h = (hi - lo) / m as f64;
        let dens = |z: f64| law.alpha() * z.powf(-law.alpha() - 1.0);
        let integrand = |z: f64| {
            let s1 = f.g1.eval(0.5, z);
            let s2 = f.g2.eval(0.5, z);
            f.combine(s1, s2) * dens(z)
        };
        let mut s = integrand(lo) + integrand(hi);
        for i in 1..m {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * integrand(lo + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn limit_iid_matches_quadrature() {
        let law = sym15();
        let spec = ProcessSpec::iid(law);
        let g = AnnulusTestFn::new(0.5, 2.5, 0.0, 1.0, 50.0).unwrap();
        let f = TestFunctional::new(g, g, 0.01, 0.01).unwrap();
        let oracle = iid_limit_oracle(&law, &f);
        let est = limit_f_mc(
            &spec,
            0,
            &f,
            LimitOptions::default(),
            200_000,
            &Streams::new(3),
        )
        .unwrap();
        let z = (est.estimate.value - oracle) / est.estimate.stderr;
        assert!(
            z.abs() < 3.0,
            "mc {} oracle {oracle} z {z}",
            est.estimate.value
        );
        assert_eq!(est.boundary_hits, 0);
        // The plateau [1, 2] alone carries μ{1 < |z| < 2} = 1 - 2^{-1.5}.
        assert!(oracle > 1.0 - 2f64.powf(-1.5));
    }

    #[test]
    fn degenerate_diagonal_reproduces_iid() {
        let g1 = AnnulusTestFn::radial(0.5, 2.5).unwrap();
        let g2 = AnnulusTestFn::new(1.0, 4.0, 0.0, 0.5, 3.0).unwrap();
        let f = TestFunctional::new(g1, g2, 0.2, 0.3).unwrap();
        let opts = LimitOptions {
            rho: Some(0.25),
            depth: Some(3),
        };
        let st = Streams::new(8);
        let iid = limit_f_mc(&ProcessSpec::iid(sym15()), 1, &f, opts, 20_000, &st).unwrap();
        let sre = ProcessSpec::sre(sym15(), FiniteLaw::constant(0.0).unwrap());
        let other = limit_f_mc(&sre, 1, &f, opts, 20_000, &st).unwrap();
        assert_eq!(iid.estimate, other.estimate);
    }

    #[test]
    fn halving_rho_is_consistent() {
        let spec = ProcessSpec::moving_average(sym15(), 0, vec![1.0, 0.5]).unwrap();
        let g = AnnulusTestFn::radial(0.5, 2.5).unwrap();
        let f = TestFunctional::new(g, g, 0.1, 0.1).unwrap();
        let st = Streams::new(11);
        let a = limit_f_mc(&spec, 1, &f, LimitOptions::default(), 100_000, &st).unwrap();
        let b = limit_f_mc(
            &spec,
            1,
            &f,
            LimitOptions {
                rho: Some(a.rho / 2.0),
                depth: None,
            },
            100_000,
            &st.domain(1),
        )
        .unwrap();
        assert!(a.estimate.z_against(&b.estimate).abs() < 3.0);
    }

    #[test]
    fn empirical_far_support_is_zero() {
        let spec = ProcessSpec::iid(sym15());
        let plan = make_plan(1000, 1.0, &spec.noise).unwrap();
        let g = AnnulusTestFn::radial(1e9, 2e9).unwrap();
        let f = TestFunctional::new(g, g, 0.1, 0.1).unwrap();
        let est = empirical_f_mc(&spec, &plan, 0, &f, 1000, &Streams::new(1)).unwrap();
        assert_eq!(est.value, 0.0);
        assert!(empirical_f_mc(&spec, &plan, 0, &f, 0, &Streams::new(1)).is_err());
    }

    #[test]
    fn sparse_and_full_measures_agree_in_law() {
        // Same functional via both simulators; different draws, same law.
        let spec = ProcessSpec::moving_average(sym15(), 0, vec![1.0, 0.5]).unwrap();
        let plan = make_plan(200, 1.0, &spec.noise).unwrap();
        let g = AnnulusTestFn::radial(0.3, 1.5).unwrap();
        let f = TestFunctional::new(g, g, 0.05, 0.05).unwrap();
        let floor = f.default_floor();
        let s = Streams::new(21);
        let mut sparse = MeanAcc::default();
        let mut full = MeanAcc::default();
        for r in 0..40_000 {
            let xi = sample_point_measure(&spec, &plan, 1, floor, &mut s.stream(r)).unwrap();
            sparse.push(eval_f(&xi, &f).unwrap());
            let sim = simulate_path(&spec, plan.n, 1, &mut s.domain(9).stream(r), false).unwrap();
            let xi = build_point_measure(&sim.path, &plan, 1, floor).unwrap();
            full.push(eval_f(&xi, &f).unwrap());
        }
        let z = (sparse.mean() - full.mean()) / sparse.stderr().hypot(full.stderr());
        assert!(z.abs() < 4.0, "z {z}");
    }
}
