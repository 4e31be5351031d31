//! Sparse latent position models for nonnegative weighted networks.
//!
//! Each edge weight x_ij is exponential with rate (U_ik − V_jk)², where the
//! latent dimension k is drawn from a sparse finite mixture. This crate
//! fits the model by coordinate-ascent variational Bayes, initializes it
//! with nonmetric multidimensional scaling, simulates from it, and
//! evaluates fits.
//!
//! ```no_run
//! use slpm::{fit, initialize_state, FitConfig, Hyperparams, InitConfig, WeightMatrix};
//!
//! let data = WeightMatrix::from_rows(&[vec![1.0, 0.2], vec![0.1, 3.0]])?;
//! let hyper = Hyperparams::defaults(4)?;
//! let (init, _) = initialize_state(&data, &hyper, &InitConfig::default())?;
//! let (state, report) = fit(&data, &hyper, &init, &FitConfig::default())?;
//! println!("{} sweeps, mixing {:?}", report.iterations, report.sorted_mixing);
//! # let _ = state;
//! # Ok::<(), slpm::SlpmError>(())
//! ```

// `!(x > 0.0)` is used deliberately so that NaN is rejected too, and
// index loops over parallel per-component arrays read better than zips.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod eval;
pub mod inference;
pub mod init;
pub mod model;
pub mod par;
pub mod simulate;
pub mod special;

pub use error::{Result, SlpmError};
pub use eval::{estimate_dimensions, log_abs_loss, reconstruct, DimensionEstimate};
pub use simulate::{sample_network, SimulationConfig};
pub use inference::{fit, FitConfig, FitReport};
pub use init::{initialize_state, InitConfig, InitMethod};
pub use model::{free_energy, GenerativeParams, Hyperparams, Side, VariationalState, WeightMatrix};
