//! Nonlinear least squares and model calibration.

mod lm;
mod model;

pub use lm::{lm_fit, numerical_jacobian, FitProblem, FitReport, FitStatus, LmConfig, TraceEntry, PENALTY_COST};
pub use model::{
    fit_general_model, fit_general_model_from, model_prices, price_scale, ModelBinding, ModelFit, ModelSpec, Target,
};
