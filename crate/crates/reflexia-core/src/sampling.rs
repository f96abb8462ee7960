//! Seeded sampling utilities.
//!
//! All randomized checks in this crate draw their points through
//! [`BallSampler`] so that a fixed seed reproduces the exact same sample
//! stream, which is what makes report files byte-identical across runs.

use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Uniform sampler on the open ball of the given radius in `R^dim`.
pub struct BallSampler {
    rng: ChaCha8Rng,
    dim: usize,
    radius: f64,
}

impl BallSampler {
    pub fn new(seed: u64, dim: usize, radius: f64) -> Self {
        BallSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            dim,
            radius,
        }
    }

    /// Draws a point uniformly from the ball: gaussian direction plus a
    /// `u^(1/dim)`-distributed radius.
    pub fn draw(&mut self) -> DVector<f64> {
        if self.dim == 0 {
            return DVector::zeros(0);
        }
        let mut v = DVector::zeros(self.dim);
        loop {
            for i in 0..self.dim {
                v[i] = self.rng.sample(StandardNormal);
            }
            if v.norm() > 1e-12 {
                break;
            }
        }
        let u: f64 = self.rng.random();
        let r = self.radius * u.powf(1.0 / self.dim as f64);
        v.normalize_mut();
        v * r
    }

    pub fn draw_many(&mut self, count: usize) -> Vec<DVector<f64>> {
        (0..count).map(|_| self.draw()).collect()
    }
}

/// Thread cap for parallel sample evaluation, from `REFLEXIA_THREADS`.
///
/// Defaults to 1 (sequential). Values above 1 let [`map_samples`] fan work
/// out over that many scoped threads.
pub fn thread_cap() -> usize {
    std::env::var("REFLEXIA_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
}

/// Applies `f` to every input, preserving order.
///
/// Inputs are pre-generated, so the output is identical whatever the thread
/// count; parallelism only changes the wall clock.
pub fn map_samples<T, U, F>(inputs: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync,
{
    let threads = thread_cap().min(inputs.len().max(1));
    if threads <= 1 {
        return inputs.iter().map(&f).collect();
    }
    let chunk = inputs.len().div_ceil(threads);
    let mut results: Vec<Option<U>> = Vec::with_capacity(inputs.len());
    results.resize_with(inputs.len(), || None);
    std::thread::scope(|scope| {
        for (slot_chunk, input_chunk) in results.chunks_mut(chunk).zip(inputs.chunks(chunk)) {
            let f = &f;
            scope.spawn(move || {
                for (slot, input) in slot_chunk.iter_mut().zip(input_chunk) {
                    *slot = Some(f(input));
                }
            });
        }
    });
    results
        .into_iter()
        .map(|r| r.expect("filled slot"))
        .collect()
}
