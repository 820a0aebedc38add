use super::{ProcessKind, ProcessSpec};
use crate::error::{Error, Result};
use crate::noise::RegVarLaw;
use crate::rng::StreamRng;
use rand::seq::index;
use rand_distr::{Binomial, Distribution};
use std::collections::{BTreeMap, HashMap};

/// Sparse simulation falls back to the full path when the noise threshold
/// is exceeded this often.
const SPARSE_MAX_RATE: f64 = 0.25;

/// Contiguous stretch `X_start, X_{start+1}, …` of a path.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    start: i64,
    values: Vec<f64>,
}

impl Path {
    pub fn new(start: i64, values: Vec<f64>) -> Self {
        Path { start, values }
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    /// Last index covered (`start - 1` when empty).
    pub fn end(&self) -> i64 {
        self.start + self.values.len() as i64 - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, k: i64) -> Option<f64> {
        if k < self.start {
            return None;
        }
        self.values.get((k - self.start) as usize).copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimPath {
    /// `X_{1-lag}, …, X_n`.
    pub path: Path,
    /// The noise that drove the returned window, indexed by time.
    pub noise: Option<Path>,
}

pub(crate) trait NoiseSource {
    fn draw(&mut self, law: &RegVarLaw, rng: &mut StreamRng) -> f64;
}

pub(crate) struct LawNoise;

impl NoiseSource for LawNoise {
    #[inline]
    fn draw(&mut self, law: &RegVarLaw, rng: &mut StreamRng) -> f64 {
        law.sample_one(rng)
    }
}

/// Noise from a closure; used for deterministic impulse and constant inputs.
#[cfg(test)]
pub(crate) struct FnNoise<F>(pub F);

#[cfg(test)]
impl<F: FnMut() -> f64> NoiseSource for FnNoise<F> {
    fn draw(&mut self, _law: &RegVarLaw, _rng: &mut StreamRng) -> f64 {
        (self.0)()
    }
}

enum Engine<'a> {
    Iid,
    Linear {
        jmax: i64,
        coeffs: &'a [f64],
        random: Option<&'a super::RandomCoefLaw>,
        window: Vec<f64>,
    },
    Recursion {
        y: &'a super::FiniteLaw,
        v: Option<&'a super::FiniteLaw>,
        x: f64,
    },
}

/// Streaming generator of `X_{1-lag}, X_{2-lag}, …`.
pub(crate) struct PathStream<'a> {
    law: &'a RegVarLaw,
    engine: Engine<'a>,
    next_k: i64,
    noise_log: Option<Vec<f64>>,
    noise_start: i64,
}

impl<'a> PathStream<'a> {
    pub(crate) fn new<N: NoiseSource>(
        spec: &'a ProcessSpec,
        lag: usize,
        rng: &mut StreamRng,
        noise: &mut N,
        keep_noise: bool,
    ) -> Self {
        let first = 1 - lag as i64;
        let law = &spec.noise;
        let mut noise_log = keep_noise.then(Vec::new);
        let (engine, noise_start) = match &spec.kind {
            ProcessKind::Iid => (Engine::Iid, first),
            ProcessKind::MovingAverage(c) => {
                let mut window = Vec::with_capacity(c.values().len());
                for _ in 1..c.values().len() {
                    let z = noise.draw(law, rng);
                    window.push(z);
                    if let Some(log) = noise_log.as_mut() {
                        log.push(z);
                    }
                }
                (
                    Engine::Linear {
                        jmax: c.jmax(),
                        coeffs: c.values(),
                        random: None,
                        window,
                    },
                    first - c.jmax(),
                )
            }
            ProcessKind::RandomCoefMa(l) => {
                let len = l.vectors()[0].len();
                let mut window = Vec::with_capacity(len);
                for _ in 1..len {
                    let z = noise.draw(law, rng);
                    window.push(z);
                    if let Some(log) = noise_log.as_mut() {
                        log.push(z);
                    }
                }
                (
                    Engine::Linear {
                        jmax: l.jmax(),
                        coeffs: &[],
                        random: Some(l),
                        window,
                    },
                    first - l.jmax(),
                )
            }
            ProcessKind::Sre { y } | ProcessKind::StochVol { y, .. } => {
                let v = match &spec.kind {
                    ProcessKind::StochVol { v, .. } => Some(v),
                    _ => None,
                };
                let burn = spec.sre_burn_in().unwrap_or(0);
                let mut x = 0.0;
                for _ in 0..burn {
                    let yk = y.sample(rng);
                    x = yk * x + noise.draw(law, rng);
                }
                (Engine::Recursion { y, v, x }, first)
            }
        };
        PathStream {
            law,
            engine,
            next_k: first,
            noise_log,
            noise_start,
        }
    }

    /// Index of the value the next call returns.
    #[allow(dead_code)]
    pub(crate) fn next_index(&self) -> i64 {
        self.next_k
    }

    #[inline]
    pub(crate) fn next<N: NoiseSource>(&mut self, rng: &mut StreamRng, noise: &mut N) -> f64 {
        self.next_k += 1;
        match &mut self.engine {
            Engine::Iid => {
                let z = noise.draw(self.law, rng);
                if let Some(log) = self.noise_log.as_mut() {
                    log.push(z);
                }
                z
            }
            Engine::Linear {
                jmax,
                coeffs,
                random,
                window,
            } => {
                let z = noise.draw(self.law, rng);
                if let Some(log) = self.noise_log.as_mut() {
                    log.push(z);
                }
                window.push(z);
                // window[i] = Z_{k - jmax + i}, so it pairs with A_{jmax - i}.
                let a: &[f64] = match random {
                    Some(l) => l.sample(rng),
                    None => coeffs,
                };
                let len = a.len();
                let mut x = 0.0;
                for i in 0..len {
                    x += a[len - 1 - i] * window[i];
                }
                let _ = jmax;
                window.remove(0);
                x
            }
            Engine::Recursion { y, v, x } => {
                let yk = y.sample(rng);
                let z = noise.draw(self.law, rng);
                if let Some(log) = self.noise_log.as_mut() {
                    log.push(z);
                }
                *x = yk * *x + z;
                match v {
                    Some(v) => v.sample(rng) * *x,
                    None => *x,
                }
            }
        }
    }

    pub(crate) fn into_noise(self) -> Option<Path> {
        let start = self.noise_start;
        self.noise_log.map(|v| Path::new(start, v))
    }
}

/// Number of noise variables a path of `n` values with `lag` prefix consumes.
pub(crate) fn noise_count(spec: &ProcessSpec, n: usize, lag: usize) -> usize {
    match spec.finite_support() {
        Some((lo, hi)) => (hi - lo) as usize + lag + n,
        None => spec.sre_burn_in().unwrap_or(0) + lag + n,
    }
}

pub(crate) fn simulate_with<N: NoiseSource>(
    spec: &ProcessSpec,
    n: usize,
    lag: usize,
    rng: &mut StreamRng,
    noise: &mut N,
    keep_noise: bool,
) -> SimPath {
    let mut stream = PathStream::new(spec, lag, rng, noise, keep_noise);
    let values = (0..n + lag).map(|_| stream.next(rng, noise)).collect();
    SimPath {
        path: Path::new(1 - lag as i64, values),
        noise: stream.into_noise(),
    }
}

/// Simulate `X_{1-lag}, …, X_n` of the stationary process.
pub fn simulate_path(
    spec: &ProcessSpec,
    n: usize,
    lag: usize,
    rng: &mut StreamRng,
    return_noise: bool,
) -> Result<SimPath> {
    if n < 1 {
        return Err(Error::param("n", "path length must be at least 1"));
    }
    super::conditions::check_standing(spec)?;
    Ok(simulate_with(
        spec,
        n,
        lag,
        rng,
        &mut LawNoise,
        return_noise,
    ))
}

/// Exact simulation of the parts of `X_{1-lag}, …, X_n` that can exceed
/// `level` in magnitude, for finite-memory processes.
///
/// With `S = sup Σ_j |A_{k,j}|` and `τ = level / S`, a value `X_k` can only
/// exceed `level` if some `|Z_{k-j}| > τ`. The noise indices above `τ` are
/// drawn as a binomial count placed uniformly at random, their values from
/// `Z | |Z| > τ`; every other noise value the returned stretches need is
/// drawn lazily from `Z | |Z| ≤ τ`. Each returned stretch covers `lag`
/// values on both sides of everything a large noise value touches, so every
/// lag window `(X_k, …, X_{k-lag})` containing a value above `level` lies
/// inside one stretch. Values outside the stretches are at most `level` in
/// magnitude.
///
/// When `P(|Z| > τ)` is large the full path is returned as one stretch.
pub fn simulate_sparse(
    spec: &ProcessSpec,
    n: usize,
    lag: usize,
    level: f64,
    rng: &mut StreamRng,
) -> Result<Vec<Path>> {
    if n < 1 {
        return Err(Error::param("n", "path length must be at least 1"));
    }
    if !(level > 0.0) {
        return Err(Error::param("level", "sparse level must be positive"));
    }
    super::conditions::check_standing(spec)?;
    let (jmin, jmax) = spec.finite_support().ok_or_else(|| {
        Error::Unsupported("sparse simulation needs a finite-memory process".into())
    })?;
    let bound = spec.abs_coeff_bound().expect("finite support");
    let law = &spec.noise;
    if bound == 0.0 {
        return Ok(Vec::new());
    }
    let tau = level / bound;
    let p = law.tail_unchecked(tau);
    if p > SPARSE_MAX_RATE {
        return Ok(vec![
            simulate_with(spec, n, lag, rng, &mut LawNoise, false).path,
        ]);
    }

    let lag = lag as i64;
    let n = n as i64;
    let zlo = 1 - lag - jmax;
    let zhi = n - jmin;
    let width = (zhi - zlo + 1) as u64;
    let count = Binomial::new(width, p)
        .expect("valid binomial parameters")
        .sample(rng) as usize;
    let mut positions = index::sample(rng, width as usize, count).into_vec();
    positions.sort_unstable();
    let big: BTreeMap<i64, f64> = positions
        .into_iter()
        .map(|i| (zlo + i as i64, law.sample_big(rng, tau)))
        .collect();

    // Stretches of X indices, merged when they touch.
    let mut ranges: Vec<(i64, i64)> = Vec::new();
    for &i in big.keys() {
        let lo = (i + jmin - lag).max(1 - lag);
        let hi = (i + jmax + lag).min(n);
        if lo > hi {
            continue;
        }
        match ranges.last_mut() {
            Some(last) if lo <= last.1 + 1 => last.1 = last.1.max(hi),
            _ => ranges.push((lo, hi)),
        }
    }

    let mut small: HashMap<i64, f64> = HashMap::new();
    let mut coef_draws: HashMap<i64, Vec<f64>> = HashMap::new();
    let mut out = Vec::with_capacity(ranges.len());
    for (lo, hi) in ranges {
        let mut values = Vec::with_capacity((hi - lo + 1) as usize);
        for k in lo..=hi {
            let coeffs: Vec<f64> = match &spec.kind {
                ProcessKind::Iid => vec![1.0],
                ProcessKind::MovingAverage(c) => c.values().to_vec(),
                ProcessKind::RandomCoefMa(l) => coef_draws
                    .entry(k)
                    .or_insert_with(|| l.sample(rng).to_vec())
                    .clone(),
                _ => unreachable!("finite support checked above"),
            };
            let mut x = 0.0;
            for (off, a) in coeffs.iter().enumerate() {
                let j = jmin + off as i64;
                let idx = k - j;
                let z = match big.get(&idx) {
                    Some(&z) => z,
                    None => *small
                        .entry(idx)
                        .or_insert_with(|| law.sample_small(rng, tau)),
                };
                x += a * z;
            }
            values.push(x);
        }
        out.push(Path::new(lo, values));
    }
    Ok(out)
}
