//! Periodic seasonal state space model, Kalman filtering and smoothing,
//! maximum-likelihood variances and zero-sum seasonal adjustment.

mod optim;
pub mod periodic;
pub mod state_space;

pub use periodic::{
    build_periodic_model, build_periodic_model_with_prior, fit_variances, fit_variances_with,
    seasonal_adjust, seasonal_adjust_with, seasonal_disturbance_cov, smoothed_seasonal, FitOptions,
    PeriodicSeasonalSpec, SeasonalAdjustment, VarianceFit, DEFAULT_DIFFUSE_VARIANCE,
};
pub use state_space::{kalman_filter, kalman_smooth, log_likelihood, FilterOutput, StateSpaceModel};
