//! Ring-buffer replay memory with uniform sampling.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rl::policy::{ACTION_DIM, ACTOR_INPUT_DIM, RESIDUAL_DIM};

/// One step of the residual MDP as executed during data collection.
///
/// Besides the `(state, action, cost, next_state, terminal)` tuple, each
/// transition carries the innovation and the pre-compensation attitude error
/// observed at that step, which make the one-step objective differentiable
/// in the action during the actor update.
#[derive(Debug, Clone, Copy)]
pub struct Transition {
    /// Actor observation: previous residual, innovation, predicted
    /// measurement.
    pub observation: [f32; ACTOR_INPUT_DIM],
    /// Flattened gain as executed (exploration noise included).
    pub action: [f32; ACTION_DIM],
    /// Squared attitude error after compensation.
    pub cost: f32,
    /// Residual injected at this step (the next critic state).
    pub next_residual: [f32; RESIDUAL_DIM],
    pub terminal: bool,
    /// Stacked innovation the gain was applied to.
    pub innovation: [f32; 6],
    /// Attitude error (rotation vector) before compensation.
    pub pre_error: [f32; RESIDUAL_DIM],
}

impl Transition {
    /// Residual part of the observation, the critic's state.
    pub fn residual(&self) -> [f32; RESIDUAL_DIM] {
        [self.observation[0], self.observation[1], self.observation[2]]
    }
}

#[derive(Debug, Clone)]
pub struct ReplayMemory {
    data: Vec<Transition>,
    capacity: usize,
    write: usize,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Self {
        Self {
            data: Vec::with_capacity(capacity.min(1 << 20)),
            capacity,
            write: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.data.len() < self.capacity {
            self.data.push(t);
        } else {
            self.data[self.write] = t;
        }
        self.write = (self.write + 1) % self.capacity;
    }

    pub fn get(&self, index: usize) -> &Transition {
        &self.data[index]
    }

    /// Uniform batch of indices; requires at least `batch` stored
    /// transitions.
    pub fn sample_indices(&self, rng: &mut ChaCha8Rng, batch: usize) -> Result<Vec<usize>> {
        if self.data.len() < batch {
            return Err(Error::Config(format!(
                "replay memory holds {} transitions, need at least {batch} to sample",
                self.data.len()
            )));
        }
        Ok((0..batch)
            .map(|_| rng.random_range(0..self.data.len()))
            .collect())
    }
}
