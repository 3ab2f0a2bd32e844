//! Riemannian stochastic optimisation with variance reduction and adaptive
//! outer-loop batch sizes.
//!
//! The crate is organised in four layers:
//!
//! - [`manifold`]: Grassmann and SPD geometry (retractions, inverse
//!   retractions, vector transports, metrics, distances).
//! - [`problems`]: finite-sum objectives (PCA, low-rank matrix completion,
//!   Karcher mean) with their synthetic data generators and a binary
//!   dataset container.
//! - [`optimizers`]: R-SD, R-SGD, R-SVRG / R-AbaSVRG, R-SRG / R-AbaSRG,
//!   R-SPIDER / R-AbaSPIDER and the restart wrappers for gradient-dominated
//!   objectives.
//! - [`trace`]: the per-iterate measurement rows every solver emits.
//!
//! ```
//! use rvr::manifold::{random_point, ManifoldDescriptor};
//! use rvr::optimizers::{run, Algorithm, OptimizerConfig, StepSizePolicy};
//! use rvr::problems::{gen_pca, PcaProblem};
//! use rand::SeedableRng;
//!
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
//! let data = gen_pca(400, 10, 2, &mut rng).unwrap();
//! let problem = PcaProblem::new(data).unwrap();
//! let x0 = random_point(ManifoldDescriptor::grassmann(2, 10).unwrap(), &mut rng).unwrap();
//!
//! let config = OptimizerConfig::new(Algorithm::RSvrg, StepSizePolicy::Fixed(1e-3))
//!     .with_inner_loop(20)
//!     .with_minibatch(20)
//!     .with_epochs(5);
//! let result = run(&problem, &x0, &config).unwrap();
//! let first = result.trace.records.first().unwrap().cost;
//! let last = result.trace.records.last().unwrap().cost;
//! assert!(last < first);
//! ```

pub mod error;
pub mod linalg;
pub mod manifold;
pub mod optimizers;
pub mod problems;
pub mod trace;

pub use error::{Error, Result};
