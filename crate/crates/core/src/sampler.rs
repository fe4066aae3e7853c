//! Hit-and-run walk over the state body of a family.
//!
//! Each step draws a uniform direction `d` on the unit sphere, then draws
//! `λ` uniformly from `[-r, r]` with `r = 2√(n-1)/√n`. A rejected `λ` cuts
//! the interval at `λ`, keeping the side that contains zero, and `λ` is
//! redrawn. Since the chord through the current point is an interval
//! containing zero, every accepted `λ` is uniform on the chord.
//!
//! The generator is ChaCha8 seeded with [`derive_chain_seed`]; its word
//! position is part of a [`ChainSnapshot`], so a restored chain continues
//! the exact stream of the original.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, CMatrix};
use crate::states::{BlochVector, DensityMatrix, StateFamily, EPS_PSD};

pub const DEFAULT_MAX_SHRINK_ITERATIONS: u32 = 10_000;

/// Half-length of the initial interval: twice the circumradius of the full
/// state body in dimension `n`, so it bounds every chord of every family.
pub fn chord_radius(n: usize) -> f64 {
    2.0 * ((n - 1) as f64).sqrt() / (n as f64).sqrt()
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of chain `index` in an experiment seeded with `seed`.
pub fn derive_chain_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index))
}

#[derive(Debug, Clone)]
pub struct HrConfig {
    pub family: Arc<StateFamily>,
    pub seed: u64,
    /// Steps discarded once, before the first emitted sample.
    pub burn_in: u64,
    /// Accepted steps per emitted sample.
    pub thinning: u64,
    pub max_shrink_iterations: u32,
}

impl HrConfig {
    pub fn new(family: Arc<StateFamily>, seed: u64) -> Self {
        Self {
            family,
            seed,
            burn_in: 0,
            thinning: 1,
            max_shrink_iterations: DEFAULT_MAX_SHRINK_ITERATIONS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.thinning < 1 {
            return Err(Error::Config("thinning must be at least 1".into()));
        }
        if self.max_shrink_iterations < 1 {
            return Err(Error::Config(
                "max_shrink_iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Serializable walk state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSnapshot {
    pub seed: u64,
    pub steps_taken: u64,
    pub burned_in: bool,
    /// ChaCha word position; a string because JSON numbers cannot hold u128.
    pub rng_word_pos: String,
    pub coords: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct HrChain {
    config: HrConfig,
    current: Vec<f64>,
    rng: ChaCha8Rng,
    steps_taken: u64,
    burned_in: bool,
    radius: f64,
    direction: Vec<f64>,
    base: CMatrix,
    along: CMatrix,
    trial: CMatrix,
}

impl HrChain {
    /// Starts at the maximally mixed state.
    pub fn new(config: HrConfig) -> Result<Self> {
        config.validate()?;
        let family = config.family.clone();
        let n = family.n();
        let d = family.dimension();
        let mut trial = CMatrix::zeros(n, n);
        family.assemble_into(&vec![0.0; d], &mut trial);
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            current: vec![0.0; d],
            steps_taken: 0,
            burned_in: false,
            radius: chord_radius(n),
            direction: vec![0.0; d],
            base: CMatrix::zeros(n, n),
            along: CMatrix::zeros(n, n),
            trial,
            config,
        })
    }

    pub fn restore(config: HrConfig, snapshot: &ChainSnapshot) -> Result<Self> {
        if snapshot.seed != config.seed {
            return Err(Error::Checkpoint(format!(
                "snapshot seed {} does not match configured seed {}",
                snapshot.seed, config.seed
            )));
        }
        let word_pos: u128 = snapshot
            .rng_word_pos
            .parse()
            .map_err(|_| Error::Checkpoint(format!("bad word position '{}'", snapshot.rng_word_pos)))?;
        let mut chain = Self::new(config)?;
        if snapshot.coords.len() != chain.current.len() {
            return Err(Error::DimensionMismatch {
                expected: chain.current.len(),
                got: snapshot.coords.len(),
            });
        }
        if !chain.config.family.is_state(&snapshot.coords) {
            return Err(Error::Checkpoint("snapshot point is not a state".into()));
        }
        chain.rng.set_word_pos(word_pos);
        chain.steps_taken = snapshot.steps_taken;
        chain.burned_in = snapshot.burned_in;
        chain.current.clone_from(&snapshot.coords);
        chain
            .config
            .family
            .assemble_into(&chain.current, &mut chain.trial);
        Ok(chain)
    }

    pub fn snapshot(&self) -> ChainSnapshot {
        ChainSnapshot {
            seed: self.config.seed,
            steps_taken: self.steps_taken,
            burned_in: self.burned_in,
            rng_word_pos: self.rng.get_word_pos().to_string(),
            coords: self.current.clone(),
        }
    }

    pub fn config(&self) -> &HrConfig {
        &self.config
    }

    pub fn family(&self) -> &Arc<StateFamily> {
        &self.config.family
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps_taken
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn current(&self) -> &[f64] {
        &self.current
    }

    pub fn current_vector(&self) -> BlochVector {
        BlochVector::new(self.config.family.clone(), self.current.clone())
            .expect("chain coordinates have the family dimension")
    }

    /// Matrix of the current point, as computed during its acceptance test.
    pub fn current_matrix(&self) -> &CMatrix {
        &self.trial
    }

    pub fn current_density_matrix(&self) -> DensityMatrix {
        let (n_a, n_b) = self.config.family.dims();
        DensityMatrix::new_unchecked(n_a, n_b, self.trial.clone())
    }

    /// Uniform direction on the unit sphere from normalized Gaussians.
    pub fn random_direction(&mut self) -> Vec<f64> {
        self.draw_direction();
        self.direction.clone()
    }

    fn draw_direction(&mut self) {
        loop {
            let mut norm_sq = 0.0;
            for x in self.direction.iter_mut() {
                *x = self.rng.sample(StandardNormal);
                norm_sq += *x * *x;
            }
            if norm_sq > 0.0 {
                let inv = 1.0 / norm_sq.sqrt();
                self.direction.iter_mut().for_each(|x| *x *= inv);
                return;
            }
        }
    }

    /// One hit-and-run move; returns the new point.
    pub fn step(&mut self) -> Result<&[f64]> {
        self.draw_direction();
        let family = self.config.family.clone();
        family.assemble_into(&self.current, &mut self.base);
        self.along.fill(crate::linalg::ZERO);
        family.add_combination(&self.direction, 1.0, &mut self.along);

        let norm_sq: f64 = self.current.iter().map(|a| a * a).sum();
        let dot: f64 = self
            .current
            .iter()
            .zip(&self.direction)
            .map(|(a, d)| a * d)
            .sum();
        let bound = family.purity_bound() + 1e-9;

        let (mut lo, mut hi) = (-self.radius, self.radius);
        for _ in 0..self.config.max_shrink_iterations {
            let lambda = if lo < hi {
                self.rng.random_range(lo..hi)
            } else {
                lo
            };
            // Points outside the pure-state sphere cannot be states.
            let inside = norm_sq + 2.0 * lambda * dot + lambda * lambda <= bound && {
                self.trial.copy_from(&self.base);
                self.trial.zip_apply(&self.along, |t, a| *t += a * lambda);
                min_eigenvalue(&self.trial) >= -EPS_PSD
            };
            if inside {
                self.current
                    .iter_mut()
                    .zip(&self.direction)
                    .for_each(|(a, d)| *a += lambda * d);
                self.steps_taken += 1;
                return Ok(&self.current);
            }
            if lambda > 0.0 {
                hi = lambda;
            } else {
                lo = lambda;
            }
        }
        // leave the chain on its last valid point
        self.trial.copy_from(&self.base);
        Err(Error::ShrinkLimitExceeded(self.config.max_shrink_iterations))
    }

    /// Next emitted point, applying burn-in (once) and thinning.
    pub fn next_sample(&mut self) -> Result<&[f64]> {
        if !self.burned_in {
            for _ in 0..self.config.burn_in {
                self.step()?;
            }
            self.burned_in = true;
        }
        for _ in 0..self.config.thinning {
            self.step()?;
        }
        Ok(&self.current)
    }

    pub fn sample(&mut self, count: usize) -> Samples<'_> {
        Samples {
            chain: self,
            remaining: count,
        }
    }
}

/// Iterator returned by [`HrChain::sample`].
pub struct Samples<'a> {
    chain: &'a mut HrChain,
    remaining: usize,
}

impl Iterator for Samples<'_> {
    type Item = Result<BlochVector>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        Some(
            self.chain
                .next_sample()
                .map(|_| ())
                .map(|()| self.chain.current_vector()),
        )
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}
