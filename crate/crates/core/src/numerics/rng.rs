//! Deterministic random streams.
//!
//! A stream is identified by `(root_seed, stream_index)`. It is backed by
//! ChaCha8 keyed with `seed_from_u64(root_seed)` and the 64-bit ChaCha stream
//! id set to `stream_index`, so every replicate of a Monte Carlo experiment
//! gets its own generator without sequential jumping.
//!
//! Transforms:
//!
//! | draw | construction |
//! |------|--------------|
//! | uniform | top 53 bits of `next_u64`, times 2⁻⁵³, in `[0, 1)` |
//! | normal | Box–Muller on `(1 − U₁, U₂)`, cosine branch first, sine branch cached |
//! | categorical | inverse-CDF walk (binary search) over column-major cumulative sums |

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::pmf::BivariatePmf;

/// A reproducible random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    root_seed: u64,
    stream_index: u64,
    rng: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl RngStream {
    pub fn new(root_seed: u64, stream_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(root_seed);
        rng.set_stream(stream_index);
        Self { root_seed, stream_index, rng, spare_normal: None }
    }

    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// Root seed for a family of child streams belonging to `(root_seed, index)`.
    ///
    /// Uses the SplitMix64 finalizer, so nested experiments (replicate `k`
    /// owning its own bootstrap streams) stay reproducible.
    pub fn child_seed(root_seed: u64, index: u64) -> u64 {
        let mut z = root_seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare_normal = Some(radius * angle.sin());
        radius * angle.cos()
    }
}

/// Inverse-CDF sampler over the cells of a p.m.f.
///
/// Cells are visited in column-major order; draws return 0-based `(i, j)`.
#[derive(Debug, Clone)]
pub struct CategoricalSampler {
    r: usize,
    cumulative: Vec<f64>,
}

impl CategoricalSampler {
    pub fn new(pmf: &BivariatePmf) -> Self {
        let mut acc = 0.0;
        let cumulative = pmf
            .vec()
            .into_iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self { r: pmf.r(), cumulative }
    }

    /// Column-major index of one draw.
    pub fn sample_index(&self, stream: &mut RngStream) -> usize {
        let total = *self.cumulative.last().expect("nonempty pmf");
        let target = stream.uniform() * total;
        let k = self.cumulative.partition_point(|c| *c <= target);
        // Roundoff can leave the target above the last partial sum; fall back
        // to the last cell with positive mass.
        if k < self.cumulative.len() {
            k
        } else {
            let mut k = self.cumulative.len() - 1;
            while k > 0 && self.cumulative[k] == self.cumulative[k - 1] {
                k -= 1;
            }
            k
        }
    }

    pub fn sample(&self, stream: &mut RngStream) -> (usize, usize) {
        let k = self.sample_index(stream);
        (k % self.r, k / self.r)
    }

    /// Counts from `n` draws, as an `r × s` row-major grid.
    pub fn sample_counts(&self, stream: &mut RngStream, n: u64) -> Vec<u64> {
        let s = self.cumulative.len() / self.r;
        let mut counts = vec![0u64; self.r * s];
        for _ in 0..n {
            let (i, j) = self.sample(stream);
            counts[i * s + j] += 1;
        }
        counts
    }
}

/// Convenience wrapper over [`RngStream::standard_normal`].
pub fn standard_normal(stream: &mut RngStream) -> f64 {
    stream.standard_normal()
}

/// One draw from `pmf`, as 0-based `(i, j)`.
///
/// Builds the cumulative table on every call; use [`CategoricalSampler`] for
/// repeated draws.
pub fn categorical(stream: &mut RngStream, pmf: &BivariatePmf) -> (usize, usize) {
    CategoricalSampler::new(pmf).sample(stream)
}
