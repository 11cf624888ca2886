//! Attitude estimation from inertial and magnetic measurements, with a
//! reinforcement-learning compensation stage on top of a quaternion EKF.
//!
//! The crate provides, bottom to top:
//!
//! * [`rotation`] — scalar-first quaternion algebra, exponential/log maps and
//!   their Jacobians.
//! * [`sim`] — ground-truth trajectory generation and a configurable IMU
//!   noise model producing reproducible measurement episodes.
//! * [`ekf`] — the quaternion-state extended Kalman filter: prediction,
//!   vector-observation correction, and normalization with a covariance
//!   Jacobian.
//! * [`baselines`] — gradient-descent complementary filter and raw gyro
//!   integration.
//! * [`rl`] — the residual-gain compensation policy (small MLPs trained with
//!   a replay-memory actor-critic), its binary file format, and the training
//!   loop.
//! * [`filters`] — uniform steppable drivers for all four estimators.
//! * [`bench`] — scenario benchmark harness, CSV dataset ingestion/export,
//!   RMSE reports.
//!
//! Everything is deterministic given a seed; see the `examples/` directory
//! for runnable walkthroughs of each layer.

pub mod baselines;
pub mod bench;
pub mod ekf;
pub mod error;
pub mod filters;
pub mod metrics;
pub mod rl;
pub mod rotation;
pub mod sim;

pub use error::{Error, Result};
pub use rotation::Quaternion;
