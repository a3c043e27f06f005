//! Forward and inverse discrete unbalanced Haar transform.
//!
//! Both directions run in O(n): the forward pass reads block sums from a
//! prefix-sum array, the inverse pass scatters step amplitudes into a
//! difference array.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::basis::UhBasis;
use crate::error::{BenchError, Result};
use crate::series::TimeSeries;

/// Father coefficient plus one detail coefficient per mother wavelet, keyed
/// by `(level, index)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletCoefficients {
    pub father: f64,
    pub details: BTreeMap<(usize, usize), f64>,
    /// `J_L` of the basis pair the coefficients came from, if any.
    pub split_level: Option<usize>,
}

impl WaveletCoefficients {
    /// Detail coefficients on one level, in index order.
    pub fn level(&self, level: usize) -> Vec<f64> {
        self.details
            .range((level, 0)..(level + 1, 0))
            .map(|(_, v)| *v)
            .collect()
    }

    /// True when `(level, _)` lies in the band shared with the low series.
    pub fn is_shared_level(&self, level: usize) -> bool {
        self.split_level.is_some_and(|j| level <= j)
    }
}

fn split_level_of(basis: &UhBasis) -> Option<usize> {
    basis.shared_levels().checked_sub(1)
}

/// Forward transform of raw values.
pub fn duht_values(values: &[f64], basis: &UhBasis) -> Result<WaveletCoefficients> {
    let n = basis.n();
    if values.len() != n {
        return Err(BenchError::dim(format!(
            "series of length {} cannot be transformed with a basis on {} points",
            values.len(),
            n
        )));
    }
    // prefix[t] = Y_1 + ... + Y_t
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in values {
        acc += v;
        prefix.push(acc);
    }
    let father = prefix[n] / (n as f64).sqrt();
    let details = basis
        .nodes()
        .iter()
        .map(|nd| {
            let (ap, an) = nd.amplitudes();
            let pos = prefix[nd.breakpoint] - prefix[nd.start - 1];
            let neg = prefix[nd.end] - prefix[nd.breakpoint];
            (nd.key(), ap * pos - an * neg)
        })
        .collect();
    Ok(WaveletCoefficients {
        father,
        details,
        split_level: split_level_of(basis),
    })
}

/// `w(j, k) = <Y, ψ_{j,k}>` for every basis function.
pub fn duht(series: &TimeSeries, basis: &UhBasis) -> Result<WaveletCoefficients> {
    duht_values(series.values(), basis)
}

/// Inverse transform to raw values.
pub fn iduht_values(coeffs: &WaveletCoefficients, basis: &UhBasis) -> Result<Vec<f64>> {
    let n = basis.n();
    if coeffs.details.len() != basis.nodes().len() {
        return Err(BenchError::dim(format!(
            "basis has {} wavelets but {} detail coefficients were supplied",
            basis.nodes().len(),
            coeffs.details.len()
        )));
    }
    let mut diff = vec![0.0; n + 1];
    let f = coeffs.father / (n as f64).sqrt();
    diff[0] += f;
    diff[n] -= f;
    for nd in basis.nodes() {
        let w = *coeffs.details.get(&nd.key()).ok_or_else(|| {
            BenchError::dim(format!(
                "no coefficient for wavelet (level {}, index {})",
                nd.level, nd.index
            ))
        })?;
        let (ap, an) = nd.amplitudes();
        diff[nd.start - 1] += w * ap;
        diff[nd.breakpoint] -= w * (ap + an);
        diff[nd.end] += w * an;
    }
    let mut out = Vec::with_capacity(n);
    let mut acc = 0.0;
    for d in &diff[..n] {
        acc += d;
        out.push(acc);
    }
    Ok(out)
}

/// Resynthesis from father and mother coefficients.
pub fn iduht(coeffs: &WaveletCoefficients, basis: &UhBasis) -> Result<TimeSeries> {
    TimeSeries::new(iduht_values(coeffs, basis)?)
}

/// Orthogonal matrix with the father function as row 0 and one row per
/// mother wavelet in [`UhBasis::nodes`] order.
pub fn basis_matrix(basis: &UhBasis) -> DMatrix<f64> {
    let n = basis.n();
    let mut w = DMatrix::zeros(n, n);
    let f = 1.0 / (n as f64).sqrt();
    for t in 0..n {
        w[(0, t)] = f;
    }
    for (row, nd) in basis.nodes().iter().enumerate() {
        for t in nd.start..=nd.end {
            w[(row + 1, t - 1)] = nd.value_at(t);
        }
    }
    w
}

/// Flattens coefficients into the row order of [`basis_matrix`].
pub fn coefficient_vector(coeffs: &WaveletCoefficients, basis: &UhBasis) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(basis.n());
    out.push(coeffs.father);
    for nd in basis.nodes() {
        out.push(*coeffs.details.get(&nd.key()).ok_or_else(|| {
            BenchError::dim(format!("missing coefficient ({}, {})", nd.level, nd.index))
        })?);
    }
    Ok(out)
}
