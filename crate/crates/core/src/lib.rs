//! Temporal benchmarking: make a noisy high-frequency series add up to a
//! trusted low-frequency total.
//!
//! Methods: Denton (first and second differences), Dagum–Cholette with AR(1)
//! errors, elementary wavelet benchmarking (unbalanced Haar coefficient
//! replacement) and the full wavelet pipeline, which also removes a zero-sum
//! periodic seasonal component and soft-thresholds the fine detail levels.
//! A simulator and the evaluation metrics for comparative studies are
//! included.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmark;
pub mod classical;
pub mod config;
pub mod error;
pub mod metrics;
pub mod par;
pub mod seasonal;
pub mod series;
pub mod shrinkage;
pub mod simulation;
pub mod study;
pub mod wavelet;

pub use error::{BenchError, Result};
pub use par::Execution;
pub use series::{aggregate, AggregationConstraint, BenchmarkResult, Method, TimeSeries};
