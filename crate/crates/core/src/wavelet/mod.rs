//! Unbalanced Haar wavelets: basis construction and the discrete transform.

pub mod basis;
pub mod transform;

pub use basis::{
    build_paired_bases, build_uh_basis, detail_levels, largest_dyadic_below, PairedBases, UhBasis,
    WaveletNode,
};
pub use transform::{
    basis_matrix, coefficient_vector, duht, duht_values, iduht, iduht_values, WaveletCoefficients,
};
