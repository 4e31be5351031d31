//! Coordinate-ascent variational inference.
//!
//! Closed-form updates for responsibilities, the Dirichlet and the Gamma
//! factors; natural-gradient steps with per-position backtracking for the
//! Gaussian position factors; and the outer fitting loop.

pub(crate) mod fit;
mod position;
pub(crate) mod updates;

pub use fit::{fit, FitConfig, FitReport};
pub use position::{natural_gradient_step, position_gradient, StepOutcome};
pub use updates::{mixing_proportions, update_dirichlet, update_gamma_params, update_responsibilities};
