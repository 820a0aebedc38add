//! Reproducible accumulators and the replication map-reduce driver.

use rayon::prelude::*;
use std::ops::Range;

/// Replications per parallel work item. Fixed so the reduction tree does
/// not depend on the worker count.
pub const CHUNK: u64 = 2048;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &NeumaierSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Mean and variance from compensated first and second moments.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanAcc {
    n: u64,
    sum: NeumaierSum,
    sumsq: NeumaierSum,
}

impl MeanAcc {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum.add(x);
        self.sumsq.add(x * x);
    }

    pub fn merge(&mut self, other: &MeanAcc) {
        self.n += other.n;
        self.sum.merge(&other.sum);
        self.sumsq.merge(&other.sumsq);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        self.sum.value() / self.n as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        let s = self.sum.value();
        ((self.sumsq.value() - s * s / n) / (n - 1.0)).max(0.0)
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        (self.variance() / self.n as f64).sqrt()
    }
}

/// Integer exceedance counter.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CountAcc {
    pub hits: u64,
    pub trials: u64,
}

impl CountAcc {
    #[inline]
    pub fn push(&mut self, hit: bool) {
        self.trials += 1;
        self.hits += hit as u64;
    }

    pub fn merge(&mut self, other: &CountAcc) {
        self.hits += other.hits;
        self.trials += other.trials;
    }

    pub fn proportion(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        self.hits as f64 / self.trials as f64
    }

    /// Binomial standard error of the proportion.
    pub fn stderr(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        let p = self.proportion();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Batch-means accumulator: the replications are cut into `batches`
/// contiguous groups and the standard error comes from the spread of the
/// group means. Robust when single observations are heavy-tailed.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchMeans {
    overall: MeanAcc,
    batch_means: MeanAcc,
}

impl BatchMeans {
    pub fn from_batches(batches: &[MeanAcc]) -> Self {
        let mut overall = MeanAcc::default();
        let mut batch_means = MeanAcc::default();
        for b in batches.iter().filter(|b| b.count() > 0) {
            overall.merge(b);
            batch_means.push(b.mean());
        }
        BatchMeans {
            overall,
            batch_means,
        }
    }

    pub fn mean(&self) -> f64 {
        self.overall.mean()
    }

    pub fn stderr(&self) -> f64 {
        self.batch_means.stderr()
    }

    pub fn count(&self) -> u64 {
        self.overall.count()
    }

    pub fn batches(&self) -> u64 {
        self.batch_means.count()
    }
}

/// Evaluate `f` on fixed replication chunks in parallel and return the
/// chunk results in replication order.
pub fn map_chunks<A, F>(reps: u64, f: F) -> Vec<A>
where
    A: Send,
    F: Fn(Range<u64>) -> A + Sync,
{
    map_chunks_sized(reps, CHUNK, f)
}

pub fn map_chunks_sized<A, F>(reps: u64, chunk: u64, f: F) -> Vec<A>
where
    A: Send,
    F: Fn(Range<u64>) -> A + Sync,
{
    let chunk = chunk.max(1);
    let n_chunks = reps.div_ceil(chunk);
    (0..n_chunks)
        .into_par_iter()
        .map(|c| f(c * chunk..((c + 1) * chunk).min(reps)))
        .collect()
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < x.len() && j < y.len() {
        let v = if x[i] <= y[j] { x[i] } else { y[j] };
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Asymptotic two-sample KS critical value at level 1%.
pub fn ks_critical_1pct(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    1.628 * ((n + m) / (n * m)).sqrt()
}
