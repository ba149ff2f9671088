use std::thread;

use serde::{Deserialize, Serialize};

use super::rng::StreamRng;
use crate::error::{invalid, Result};

/// How many draws to take and from which generator streams.
///
/// With `workers = k`, worker `j` draws from stream `stream + j` and takes
/// `samples / k` draws (the first `samples % k` workers take one more).
/// Results are therefore reproducible for fixed `(seed, stream, samples, k)`;
/// `k = 1` is the canonical mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sampling {
    pub samples: u64,
    pub seed: u64,
    pub stream: u64,
    pub workers: usize,
}

impl Sampling {
    pub fn new(samples: u64, seed: u64) -> Self {
        Self {
            samples,
            seed,
            stream: 0,
            workers: 1,
        }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }

    pub fn with_workers(self, workers: usize) -> Self {
        Self {
            workers: workers.max(1),
            ..self
        }
    }

    pub fn with_samples(self, samples: u64) -> Self {
        Self { samples, ..self }
    }

    /// A disjoint stream family for an auxiliary estimate made inside another
    /// estimator. Tags occupy the upper 32 bits of the stream word.
    pub fn derived(self, tag: u32) -> Self {
        Self {
            stream: self.stream.wrapping_add(u64::from(tag) << 32),
            ..self
        }
    }

    pub(crate) fn require_samples(&self) -> Result<()> {
        if self.samples == 0 {
            Err(invalid("at least one sample is required"))
        } else {
            Ok(())
        }
    }

    fn shares(&self) -> Vec<(u64, u64)> {
        let k = self.workers.max(1) as u64;
        let base = self.samples / k;
        let extra = self.samples % k;
        (0..k)
            .map(|j| (self.stream.wrapping_add(j), base + u64::from(j < extra)))
            .filter(|&(_, count)| count > 0)
            .collect()
    }
}

/// Streaming mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningMoments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningMoments {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Pairwise combination; merging in a fixed order keeps results
    /// reproducible.
    pub fn merge(&mut self, other: &Self) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let total = self.count + other.count;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / total as f64;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / total as f64;
        self.count = total;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample standard deviation (`n - 1` denominator); zero for one draw.
    pub fn std_dev(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0).sqrt()
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.std_dev() / (self.count as f64).sqrt()
        }
    }
}

/// A Monte Carlo point estimate with its provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorResult {
    pub estimate: f64,
    pub std_error: f64,
    pub ci95: [f64; 2],
    pub samples: u64,
    pub seed: u64,
    pub stream: u64,
}

impl EstimatorResult {
    pub fn new(estimate: f64, std_error: f64, samples: u64, sampling: &Sampling) -> Self {
        Self {
            estimate,
            std_error,
            ci95: [estimate - 1.96 * std_error, estimate + 1.96 * std_error],
            samples,
            seed: sampling.seed,
            stream: sampling.stream,
        }
    }

    pub fn from_moments(m: &RunningMoments, sampling: &Sampling) -> Self {
        Self::new(m.mean(), m.std_error(), m.count(), sampling)
    }

    pub fn covers(&self, value: f64) -> bool {
        self.ci95[0] <= value && value <= self.ci95[1]
    }

    /// `|estimate - value|` in units of the standard error.
    pub fn z_score(&self, value: f64) -> f64 {
        if self.std_error == 0.0 {
            if self.estimate == value {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.estimate - value).abs() / self.std_error
        }
    }
}

fn run_workers<T, W>(sampling: &Sampling, work: W) -> Vec<T>
where
    T: Send,
    W: Fn(StreamRng, u64) -> T + Sync,
{
    let shares = sampling.shares();
    if shares.len() <= 1 {
        return shares
            .into_iter()
            .map(|(stream, count)| work(StreamRng::new(sampling.seed, stream), count))
            .collect();
    }
    thread::scope(|scope| {
        let handles: Vec<_> = shares
            .into_iter()
            .map(|(stream, count)| {
                let work = &work;
                scope.spawn(move || work(StreamRng::new(sampling.seed, stream), count))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sampling worker panicked"))
            .collect()
    })
}

/// Runs `sampling.samples` draws of a `dim`-dimensional observation and
/// returns per-coordinate moments. `make` builds one observer per worker so
/// observers may own scratch buffers.
pub(crate) fn monte_carlo<M, F>(sampling: &Sampling, dim: usize, make: M) -> Vec<RunningMoments>
where
    M: Fn() -> F + Sync,
    F: FnMut(&mut StreamRng, &mut [f64]),
{
    let parts = run_workers(sampling, |mut rng, count| {
        let mut observe = make();
        let mut moments = vec![RunningMoments::default(); dim];
        let mut obs = vec![0.0; dim];
        for _ in 0..count {
            observe(&mut rng, &mut obs);
            for (m, &x) in moments.iter_mut().zip(&obs) {
                m.push(x);
            }
        }
        moments
    });
    let mut total = vec![RunningMoments::default(); dim];
    for part in &parts {
        for (t, m) in total.iter_mut().zip(part) {
            t.merge(m);
        }
    }
    total
}

/// Scalar convenience wrapper around [`monte_carlo`].
pub(crate) fn monte_carlo_scalar<M, F>(sampling: &Sampling, make: M) -> EstimatorResult
where
    M: Fn() -> F + Sync,
    F: FnMut(&mut StreamRng) -> f64,
{
    let moments = monte_carlo(sampling, 1, || {
        let mut draw = make();
        move |rng: &mut StreamRng, out: &mut [f64]| out[0] = draw(rng)
    });
    EstimatorResult::from_moments(&moments[0], sampling)
}

/// Collects `sampling.samples` scalar draws in worker order.
pub(crate) fn collect_draws<M, F>(sampling: &Sampling, make: M) -> Vec<f64>
where
    M: Fn() -> F + Sync,
    F: FnMut(&mut StreamRng) -> f64,
{
    run_workers(sampling, |mut rng, count| {
        let mut draw = make();
        (0..count).map(|_| draw(&mut rng)).collect::<Vec<_>>()
    })
    .concat()
}
