//! The compensation policy: an actor network producing a bounded 3×6 gain
//! matrix, a critic estimating discounted cost-to-go from the residual, and
//! the critic's slowly-mixed target copy. Includes the binary policy file
//! format.
//!
//! The actor observes the previous injected residual together with the
//! current innovation and the predicted measurement it was computed against
//! (`ε = y − h`, so the pair `(ε, h)` is the full measurement-side picture).
//! The critic scores residual states in ℝ³.
//!
//! # File format
//!
//! ```text
//! magic      8 bytes  "RLCEKF01"
//! header     u32 actor size count, that many u32 layer sizes,
//!            u32 critic size count, that many u32 layer sizes,
//!            f64 u_max, f64 gamma              (all little-endian)
//! weights    f32 little-endian, networks in order actor, critic,
//!            target critic; per network layer order, each layer weights
//!            row-major then bias
//! trailer    u32 CRC32 of header + weights
//! ```

use std::path::Path;

use nalgebra::{SMatrix, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ekf::Vector6;
use crate::error::{Error, Result};
use crate::rl::mlp::Mlp;

pub const POLICY_MAGIC: &[u8; 8] = b"RLCEKF01";

/// Residual dimension (critic input).
pub const RESIDUAL_DIM: usize = 3;
/// Actor observation: previous residual, innovation, predicted measurement,
/// and the cross product of the two predicted direction blocks (completing
/// the estimated body frame, which makes the attitude-dependent gain a
/// low-order function of the inputs).
pub const ACTOR_INPUT_DIM: usize = RESIDUAL_DIM + 6 + 6 + 3;
/// Flattened gain dimension (3×6, row-major).
pub const ACTION_DIM: usize = 18;
/// Hidden width of both networks.
pub const HIDDEN_WIDTH: usize = 64;

pub type GainMatrix3x6 = SMatrix<f64, 3, 6>;

/// What the actor sees when producing a gain.
#[derive(Debug, Clone, Copy)]
pub struct PolicyInput {
    /// Residual injected at the previous step.
    pub prev_residual: Vector3<f64>,
    /// Post-correction innovation `ε = y − h(q̃)`.
    pub innovation: Vector6,
    /// Predicted measurement `h(q̃)` the innovation was formed against.
    pub predicted: Vector6,
}

impl PolicyInput {
    pub fn to_array(&self) -> [f32; ACTOR_INPUT_DIM] {
        let mut out = [0.0_f32; ACTOR_INPUT_DIM];
        for i in 0..3 {
            out[i] = self.prev_residual[i] as f32;
        }
        for i in 0..6 {
            out[3 + i] = self.innovation[i] as f32;
            out[9 + i] = self.predicted[i] as f32;
        }
        // Estimated body-frame gravity and field directions and their cross
        // product.
        let b1 = -Vector3::new(self.predicted[0], self.predicted[1], self.predicted[2]);
        let b2 = Vector3::new(self.predicted[3], self.predicted[4], self.predicted[5]);
        let b3 = b1.cross(&b2);
        for i in 0..3 {
            out[15 + i] = b3[i] as f32;
        }
        out
    }
}

/// Actor, critic and target critic with the gain bound and discount they
/// were trained under.
#[derive(Debug, Clone)]
pub struct CompensatorPolicy {
    pub actor: Mlp,
    pub critic: Mlp,
    pub target_critic: Mlp,
    /// Bound on every gain entry, applied as `u_max·tanh`.
    pub u_max: f64,
    pub gamma: f64,
}

impl CompensatorPolicy {
    pub fn actor_sizes() -> Vec<usize> {
        vec![ACTOR_INPUT_DIM, HIDDEN_WIDTH, HIDDEN_WIDTH, ACTION_DIM]
    }

    pub fn critic_sizes() -> Vec<usize> {
        vec![RESIDUAL_DIM, HIDDEN_WIDTH, HIDDEN_WIDTH, 1]
    }

    /// Fresh policy with Xavier hidden layers and a small-normal final actor
    /// layer so the initial compensation is near zero.
    pub fn new(seed: u64, u_max: f64, gamma: f64, actor_final_std: f32) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let actor = Mlp::new(&Self::actor_sizes(), &mut rng, Some(actor_final_std));
        let critic = Mlp::new(&Self::critic_sizes(), &mut rng, None);
        let target_critic = critic.clone();
        Self {
            actor,
            critic,
            target_critic,
            u_max,
            gamma,
        }
    }

    /// Policy whose actor output is exactly zero, recovering the plain EKF
    /// bit for bit.
    pub fn zeroed(u_max: f64, gamma: f64) -> Self {
        let mut p = Self::new(0, u_max, gamma, 0.0);
        p.actor.zero_final_layer();
        p
    }

    /// Raw (pre-squash) actor output.
    pub fn actor_raw(&self, observation: &[f32; ACTOR_INPUT_DIM]) -> Vec<f32> {
        self.actor.forward(observation)
    }

    /// Squash raw actor output into the bounded flattened gain.
    pub fn squash(&self, raw: &[f32]) -> [f32; ACTION_DIM] {
        let mut out = [0.0_f32; ACTION_DIM];
        for (o, z) in out.iter_mut().zip(raw) {
            *o = self.u_max as f32 * z.tanh();
        }
        out
    }

    /// Bounded flattened gain for an observation.
    pub fn gain_flat(&self, observation: &[f32; ACTOR_INPUT_DIM]) -> [f32; ACTION_DIM] {
        self.squash(&self.actor_raw(observation))
    }

    /// The 3×6 gain applied to the innovation, as used at inference time.
    pub fn gain(&self, input: &PolicyInput) -> GainMatrix3x6 {
        gain_from_flat(&self.gain_flat(&input.to_array()))
    }

    pub fn value(&self, residual: &[f32; RESIDUAL_DIM]) -> f32 {
        self.critic.forward(residual)[0]
    }

    pub fn target_value(&self, residual: &[f32; RESIDUAL_DIM]) -> f32 {
        self.target_critic.forward(residual)[0]
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::from_bytes(&bytes)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut payload = Vec::new();
        let write_sizes = |payload: &mut Vec<u8>, sizes: &[usize]| {
            payload.extend_from_slice(&(sizes.len() as u32).to_le_bytes());
            for s in sizes {
                payload.extend_from_slice(&(*s as u32).to_le_bytes());
            }
        };
        write_sizes(&mut payload, &self.actor.sizes);
        write_sizes(&mut payload, &self.critic.sizes);
        payload.extend_from_slice(&self.u_max.to_le_bytes());
        payload.extend_from_slice(&self.gamma.to_le_bytes());
        for net in [&self.actor, &self.critic, &self.target_critic] {
            for v in net.flatten() {
                payload.extend_from_slice(&v.to_le_bytes());
            }
        }
        let crc = crc32fast::hash(&payload);
        let mut out = Vec::with_capacity(POLICY_MAGIC.len() + payload.len() + 4);
        out.extend_from_slice(POLICY_MAGIC);
        out.extend_from_slice(&payload);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let err = |msg: &str| Error::Data(format!("policy file: {msg}"));
        if bytes.len() < POLICY_MAGIC.len() + 4 {
            return Err(err("truncated"));
        }
        if &bytes[..POLICY_MAGIC.len()] != POLICY_MAGIC {
            return Err(err("bad magic bytes"));
        }
        let payload = &bytes[POLICY_MAGIC.len()..bytes.len() - 4];
        let stored_crc = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap());
        if crc32fast::hash(payload) != stored_crc {
            return Err(err("checksum mismatch"));
        }

        let mut cursor = Cursor { data: payload, pos: 0 };
        let read_sizes = |cursor: &mut Cursor| -> Result<Vec<usize>> {
            let count = cursor.read_u32()? as usize;
            if !(2..=16).contains(&count) {
                return Err(err("implausible layer count"));
            }
            let mut sizes = Vec::with_capacity(count);
            for _ in 0..count {
                let s = cursor.read_u32()? as usize;
                if s == 0 || s > 4096 {
                    return Err(err("implausible layer size"));
                }
                sizes.push(s);
            }
            Ok(sizes)
        };
        let actor_sizes = read_sizes(&mut cursor)?;
        let critic_sizes = read_sizes(&mut cursor)?;
        if actor_sizes.first() != Some(&ACTOR_INPUT_DIM) || actor_sizes.last() != Some(&ACTION_DIM)
        {
            return Err(err("actor dimensions do not match the observation/gain interface"));
        }
        if critic_sizes.first() != Some(&RESIDUAL_DIM) || critic_sizes.last() != Some(&1) {
            return Err(err("critic dimensions do not match the residual/value interface"));
        }
        let u_max = cursor.read_f64()?;
        let gamma = cursor.read_f64()?;
        if !u_max.is_finite() || !gamma.is_finite() {
            return Err(err("non-finite header values"));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut actor = Mlp::new(&actor_sizes, &mut rng, None);
        let mut critic = Mlp::new(&critic_sizes, &mut rng, None);
        let mut target_critic = critic.clone();
        for net in [&mut actor, &mut critic, &mut target_critic] {
            let n = net.param_count();
            let mut data = Vec::with_capacity(n);
            for _ in 0..n {
                let v = cursor.read_f32()?;
                if !v.is_finite() {
                    return Err(err("non-finite weight"));
                }
                data.push(v);
            }
            net.unflatten(&data);
        }
        if cursor.pos != payload.len() {
            return Err(err("trailing bytes after weights"));
        }
        Ok(Self {
            actor,
            critic,
            target_critic,
            u_max,
            gamma,
        })
    }
}

/// Reshape a flattened row-major gain into the 3×6 matrix applied to the
/// stacked innovation.
pub fn gain_from_flat(flat: &[f32; ACTION_DIM]) -> GainMatrix3x6 {
    GainMatrix3x6::from_fn(|r, c| flat[r * 6 + c] as f64)
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.data.len() {
            return Err(Error::Data("policy file: truncated".into()));
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn read_u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn read_f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn read_f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
