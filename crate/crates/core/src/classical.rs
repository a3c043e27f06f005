//! Reference benchmarking methods: additive Denton of order h and the
//! binding Dagum-Cholette regression with AR(1) errors.
//!
//! Both are equality-constrained generalised least squares problems
//!
//! ```text
//! minimise dᵀ Ω d   subject to   B'(y + d) = y_low
//! ```
//!
//! with `Ω = A = (Dʰ)'Dʰ` for Denton and `Ω = V⁻¹` for Dagum-Cholette. The
//! solution is `d = Ω⁻¹B (B'Ω⁻¹B)⁻¹ (y_low - B'y)`; neither method ever
//! forms `Ω⁻¹` explicitly.

use nalgebra::{DMatrix, DVector};

use crate::error::{BenchError, Result};
use crate::series::{block_sums, AggregationConstraint, BenchmarkResult, Method, TimeSeries};

/// Additive Denton of order `h` (movement preservation on h-th differences).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DentonConfig {
    order: usize,
}

impl DentonConfig {
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(BenchError::config("Denton order must be at least 1"));
        }
        Ok(Self { order })
    }

    pub fn order(&self) -> usize {
        self.order
    }
}

/// Binding Dagum-Cholette with AR(1) high-frequency errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DagumCholetteConfig {
    rho: f64,
    include_bias: bool,
}

impl DagumCholetteConfig {
    /// Default AR(1) parameter for quarterly series benchmarked to annual totals.
    pub const QUARTERLY_RHO: f64 = 0.729;
    /// Default AR(1) parameter for monthly series.
    pub const MONTHLY_RHO: f64 = 0.9;

    pub fn new(rho: f64, include_bias: bool) -> Result<Self> {
        if !rho.is_finite() || rho.abs() >= 1.0 {
            return Err(BenchError::domain(format!(
                "AR(1) parameter must satisfy |rho| < 1, got {rho}"
            )));
        }
        Ok(Self { rho, include_bias })
    }

    /// 0.9³ when four high periods make one low period, 0.9 otherwise.
    pub fn for_factor(k: usize) -> Self {
        let rho = if k == 4 {
            Self::QUARTERLY_RHO
        } else {
            Self::MONTHLY_RHO
        };
        Self {
            rho,
            include_bias: false,
        }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn include_bias(&self) -> bool {
        self.include_bias
    }
}

/// Block-diagonal n×m matrix of length-k one-vectors (B in the Denton normal equations).
pub fn aggregation_matrix(n: usize, m: usize) -> Result<DMatrix<f64>> {
    if m == 0 || !n.is_multiple_of(m) {
        return Err(BenchError::dim(format!(
            "cannot aggregate {n} high periods into {m} low periods"
        )));
    }
    let k = n / m;
    Ok(DMatrix::from_fn(n, m, |i, j| if i / k == j { 1.0 } else { 0.0 }))
}

/// Lower-bidiagonal first-difference matrix with first row `[1, 0, ..., 0]`.
pub fn difference_matrix(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else if i == j + 1 {
            -1.0
        } else {
            0.0
        }
    })
}

/// AR(1) covariance with unit innovation variance: `rho^|i-j| / (1 - rho²)`.
pub fn ar1_covariance(n: usize, rho: f64) -> Result<DMatrix<f64>> {
    if !rho.is_finite() || rho.abs() >= 1.0 {
        return Err(BenchError::domain(format!(
            "AR(1) parameter must satisfy |rho| < 1, got {rho}"
        )));
    }
    let scale = 1.0 / (1.0 - rho * rho);
    Ok(DMatrix::from_fn(n, n, |i, j| {
        scale * rho.powi(i.abs_diff(j) as i32)
    }))
}

/// Applies `D⁻¹` (a running sum) in place.
fn cumsum(v: &mut [f64]) {
    let mut acc = 0.0;
    for x in v.iter_mut() {
        acc += *x;
        *x = acc;
    }
}

/// Applies `(D')⁻¹` (a reverse running sum) in place.
fn rev_cumsum(v: &mut [f64]) {
    let mut acc = 0.0;
    for x in v.iter_mut().rev() {
        acc += *x;
        *x = acc;
    }
}

/// `Ω⁻¹B` for the Denton penalty, one column per low period.
fn denton_inverse_times_b(n: usize, k: usize, order: usize) -> DMatrix<f64> {
    let m = n / k;
    let mut out = DMatrix::zeros(n, m);
    let mut col = vec![0.0; n];
    for s in 0..m {
        col.iter_mut().for_each(|x| *x = 0.0);
        col[s * k..(s + 1) * k].iter_mut().for_each(|x| *x = 1.0);
        for _ in 0..order {
            rev_cumsum(&mut col);
        }
        for _ in 0..order {
            cumsum(&mut col);
        }
        out.column_mut(s).copy_from_slice(&col);
    }
    out
}

/// Sums the rows of `x` block-wise: returns `B'x`.
fn aggregate_rows(x: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let m = x.nrows() / k;
    DMatrix::from_fn(m, x.ncols(), |s, j| (s * k..(s + 1) * k).map(|i| x[(i, j)]).sum())
}

fn spd_solve(m: DMatrix<f64>, rhs: DVector<f64>, what: &str) -> Result<DVector<f64>> {
    let chol = m
        .cholesky()
        .ok_or_else(|| BenchError::numerical(format!("{what} is not numerically positive definite")))?;
    let sol = chol.solve(&rhs);
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(BenchError::numerical(format!("{what} solve produced non-finite values")));
    }
    Ok(sol)
}

/// Additive Denton benchmarking.
///
/// Returns `y + Ω⁻¹B(B'Ω⁻¹B)⁻¹(y_low - B'y)` with `Ω = (Dʰ)'Dʰ`. The first
/// row of `D` penalises the first discrepancy itself, so the adjustment is
/// not a flat shift even when the input is.
pub fn denton_benchmark(
    high: &TimeSeries,
    low: &TimeSeries,
    c: &AggregationConstraint,
    cfg: &DentonConfig,
) -> Result<BenchmarkResult> {
    c.check_pair(high, low)?;
    let k = c.factor();
    let n = high.len();
    let discrepancy = discrepancy(high, low, k);
    let x = denton_inverse_times_b(n, k, cfg.order());
    let gram = aggregate_rows(&x, k);
    let lambda = spd_solve(gram, discrepancy, "Denton normal matrix B'A⁻¹B")?;
    let adjustment = &x * lambda;
    let values: Vec<f64> = high
        .values()
        .iter()
        .zip(adjustment.iter())
        .map(|(y, d)| y + d)
        .collect();
    BenchmarkResult::assemble(
        high.relabel(values)?,
        low,
        c,
        Method::Denton { order: cfg.order() },
        None,
    )
}

fn discrepancy(high: &TimeSeries, low: &TimeSeries, k: usize) -> DVector<f64> {
    let agg = block_sums(high.values(), k);
    DVector::from_iterator(low.len(), low.values().iter().zip(agg).map(|(l, a)| l - a))
}

/// Binding Dagum-Cholette benchmarking with AR(1) errors.
///
/// Minimises `dᵀV⁻¹d` subject to the aggregation constraint, where `V` is
/// [`ar1_covariance`]. With `include_bias`, a constant bias `b` (H = 1) is
/// estimated by GLS first and removed from the observed series; the
/// benchmarked series excludes it.
pub fn dagum_cholette_benchmark(
    high: &TimeSeries,
    low: &TimeSeries,
    c: &AggregationConstraint,
    cfg: &DagumCholetteConfig,
) -> Result<BenchmarkResult> {
    c.check_pair(high, low)?;
    let k = c.factor();
    let n = high.len();
    let m = low.len();
    let v = ar1_covariance(n, cfg.rho())?;
    // V B: sum the columns of V block-wise.
    let vb = DMatrix::from_fn(n, m, |i, s| (s * k..(s + 1) * k).map(|j| v[(i, j)]).sum());
    let gram = aggregate_rows(&vb, k);
    let chol = gram.clone().cholesky().ok_or_else(|| {
        BenchError::numerical("Dagum-Cholette constraint matrix B'VB is singular")
    })?;

    let mut disc = discrepancy(high, low, k);
    let mut bias = 0.0;
    if cfg.include_bias() {
        // GLS of (B'y - y_low) on B'H = k·1 with weight (B'VB)⁻¹.
        let h = DVector::from_element(m, k as f64);
        let minv_h = chol.solve(&h);
        let denom = h.dot(&minv_h);
        if denom.abs() < f64::MIN_POSITIVE {
            return Err(BenchError::numerical("bias regression is degenerate"));
        }
        bias = -minv_h.dot(&disc) / denom;
        disc += &h * bias;
    }
    let lambda = chol.solve(&disc);
    if lambda.iter().any(|x| !x.is_finite()) {
        return Err(BenchError::numerical("Dagum-Cholette solve produced non-finite values"));
    }
    let adjustment = &vb * lambda;
    let values: Vec<f64> = high
        .values()
        .iter()
        .zip(adjustment.iter())
        .map(|(y, d)| y - bias + d)
        .collect();
    BenchmarkResult::assemble(
        high.relabel(values)?,
        low,
        c,
        Method::DagumCholette { rho: cfg.rho() },
        None,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(v: &[f64]) -> TimeSeries {
        TimeSeries::new(v.to_vec()).unwrap()
    }

    /// Dense KKT solve of min dᵀΩd s.t. B'd = r, via LU on the bordered system.
    fn kkt_oracle(omega: &DMatrix<f64>, b: &DMatrix<f64>, r: &DVector<f64>) -> DVector<f64> {
        let n = omega.nrows();
        let m = b.ncols();
        let mut kkt = DMatrix::zeros(n + m, n + m);
        kkt.view_mut((0, 0), (n, n)).copy_from(&(omega * 2.0));
        kkt.view_mut((0, n), (n, m)).copy_from(b);
        kkt.view_mut((n, 0), (m, n)).copy_from(&b.transpose());
        let mut rhs = DVector::zeros(n + m);
        rhs.rows_mut(n, m).copy_from(r);
        let sol = kkt.lu().solve(&rhs).unwrap();
        sol.rows(0, n).into_owned()
    }

    #[test]
    fn aggregation_matrix_examples() {
        let b = aggregation_matrix(4, 1).unwrap();
        assert_eq!(b, DMatrix::from_element(4, 1, 1.0));
        assert_eq!(aggregation_matrix(2, 2).unwrap(), DMatrix::identity(2, 2));
        let b = aggregation_matrix(6, 2).unwrap();
        let expect = DMatrix::from_row_slice(
            6,
            2,
            &[1., 0., 1., 0., 1., 0., 0., 1., 0., 1., 0., 1.],
        );
        assert_eq!(b, expect);
        assert!(aggregation_matrix(5, 2).is_err());
    }

    #[test]
    fn difference_matrix_examples() {
        let d = difference_matrix(3);
        let expect = DMatrix::from_row_slice(3, 3, &[1., 0., 0., -1., 1., 0., 0., -1., 1.]);
        assert_eq!(d, expect);
        assert_eq!(difference_matrix(1), DMatrix::from_element(1, 1, 1.0));
        let c = DVector::from_element(5, 2.5);
        let dc = difference_matrix(5) * c;
        assert_eq!(dc.as_slice(), &[2.5, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn running_sums_invert_difference_operators() {
        let d = difference_matrix(6);
        let v = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0, 0.0, 4.0]);
        let mut x = v.as_slice().to_vec();
        cumsum(&mut x);
        assert!((&d * DVector::from_vec(x) - &v).amax() < 1e-14);
        let mut y = v.as_slice().to_vec();
        rev_cumsum(&mut y);
        assert!((d.transpose() * DVector::from_vec(y) - &v).amax() < 1e-14);
    }

    #[test]
    fn ar1_covariance_examples() {
        assert_eq!(ar1_covariance(3, 0.0).unwrap(), DMatrix::identity(3, 3));
        let v = ar1_covariance(2, 0.5).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[4. / 3., 2. / 3., 2. / 3., 4. / 3.]);
        assert!((v - expect).amax() < 1e-15);
        assert!(ar1_covariance(64, 0.729).unwrap().cholesky().is_some());
        assert!(ar1_covariance(3, 1.0).is_err());
        assert!(ar1_covariance(3, -1.2).is_err());
    }

    #[test]
    fn denton_first_order_examples() {
        let c = AggregationConstraint::new(4).unwrap();
        let cfg = DentonConfig::new(1).unwrap();
        // KKT solution of min dᵀD'Dd s.t. 1ᵀd = 4: d = (4/30)·[4, 7, 9, 10].
        let out = denton_benchmark(&ts(&[1., 2., 3., 4.]), &ts(&[14.]), &c, &cfg).unwrap();
        let d = [4.0, 7.0, 9.0, 10.0].map(|x| x * 4.0 / 30.0);
        let expect: Vec<f64> = (0..4).map(|i| (i + 1) as f64 + d[i]).collect();
        for (a, b) in out.benchmarked.values().iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        let rounded: Vec<f64> = out
            .benchmarked
            .values()
            .iter()
            .map(|v| (v * 1e4).round() / 1e4)
            .collect();
        assert_eq!(rounded, vec![1.5333, 2.9333, 4.2, 5.3333]);

        let out = denton_benchmark(&ts(&[1.; 4]), &ts(&[8.]), &c, &cfg).unwrap();
        for (a, di) in out.benchmarked.values().iter().zip(d) {
            assert!((a - (1.0 + di)).abs() < 1e-12);
        }
    }

    #[test]
    fn dagum_cholette_white_noise_splits_evenly() {
        let c = AggregationConstraint::new(4).unwrap();
        let cfg = DagumCholetteConfig::new(0.0, false).unwrap();
        let out = dagum_cholette_benchmark(&ts(&[1.; 4]), &ts(&[8.]), &c, &cfg).unwrap();
        for v in out.benchmarked.values() {
            assert!((v - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn consistent_input_is_left_alone() {
        let high = ts(&[3., 1., 4., 1., 5., 9., 2., 6.]);
        let low = ts(&[9., 22.]);
        let c = AggregationConstraint::new(4).unwrap();
        for h in 1..=2 {
            let out = denton_benchmark(&high, &low, &c, &DentonConfig::new(h).unwrap()).unwrap();
            for (a, b) in out.benchmarked.values().iter().zip(high.values()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        for rho in [0.0, 0.5, 0.729] {
            let cfg = DagumCholetteConfig::new(rho, false).unwrap();
            let out = dagum_cholette_benchmark(&high, &low, &c, &cfg).unwrap();
            for (a, b) in out.benchmarked.values().iter().zip(high.values()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn denton_matches_kkt_oracle() {
        let n = 12;
        let k = 3;
        let high: Vec<f64> = (0..n).map(|i| ((i * 7 % 5) as f64) - 1.5 + i as f64 * 0.3).collect();
        let low = vec![4.0, -2.0, 10.0, 7.5];
        let c = AggregationConstraint::new(k).unwrap();
        let b = aggregation_matrix(n, n / k).unwrap();
        let r = DVector::from_vec(low.clone()) - b.transpose() * DVector::from_vec(high.clone());
        for h in 1..=2 {
            let d = difference_matrix(n);
            let mut dh = DMatrix::identity(n, n);
            for _ in 0..h {
                dh = &d * dh;
            }
            let omega = dh.transpose() * &dh;
            let oracle = kkt_oracle(&omega, &b, &r);
            let out = denton_benchmark(&ts(&high), &ts(&low), &c, &DentonConfig::new(h).unwrap())
                .unwrap();
            for i in 0..n {
                assert!((out.benchmarked.values()[i] - high[i] - oracle[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn bias_term_absorbs_constant_offset() {
        // A series that is consistent after removing a constant bias needs no
        // further adjustment once the bias is estimated.
        let truth = [2.0, 3.0, 1.0, 4.0, 5.0, 2.0, 6.0, 3.0];
        let high: Vec<f64> = truth.iter().map(|v| v + 1.5).collect();
        let low = [10.0, 16.0];
        let c = AggregationConstraint::new(4).unwrap();
        let cfg = DagumCholetteConfig::new(0.729, true).unwrap();
        let out = dagum_cholette_benchmark(&ts(&high), &ts(&low), &c, &cfg).unwrap();
        for (a, b) in out.benchmarked.values().iter().zip(truth) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        assert!(out.satisfies_constraint(&ts(&low)));
    }

    #[test]
    fn rejects_bad_dimensions_and_configs() {
        let c = AggregationConstraint::new(4).unwrap();
        let cfg = DentonConfig::new(1).unwrap();
        assert!(denton_benchmark(&ts(&[1.; 8]), &ts(&[1.]), &c, &cfg).is_err());
        assert!(denton_benchmark(&ts(&[1.; 6]), &ts(&[1.]), &c, &cfg).is_err());
        assert!(DentonConfig::new(0).is_err());
        assert!(DagumCholetteConfig::new(1.0, false).is_err());
        assert!(DagumCholetteConfig::new(f64::NAN, false).is_err());
    }

    #[test]
    fn movement_preservation_under_feasible_perturbations() {
        let high = [5.0, 7.0, 6.0, 9.0, 4.0, 8.0, 7.0, 3.0];
        let low = [30.0, 20.0];
        let c = AggregationConstraint::new(4).unwrap();
        let out =
            denton_benchmark(&ts(&high), &ts(&low), &c, &DentonConfig::new(1).unwrap()).unwrap();
        let d0: Vec<f64> = out
            .benchmarked
            .values()
            .iter()
            .zip(high)
            .map(|(a, b)| a - b)
            .collect();
        let objective = |d: &[f64]| {
            let dm = difference_matrix(d.len()) * DVector::from_column_slice(d);
            dm.norm_squared()
        };
        let base = objective(&d0);
        // Perturbations with zero block sums keep feasibility.
        let dirs = [
            [1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, 0.5, 0.5, -0.5, -0.5],
            [1.0, 0.0, 0.0, -1.0, -2.0, 0.0, 0.0, 2.0],
        ];
        for dir in dirs {
            for eps in [1e-3, -1e-3, 0.5, -0.5] {
                let d: Vec<f64> = d0.iter().zip(dir).map(|(a, b)| a + eps * b).collect();
                assert!(objective(&d) > base);
            }
        }
    }
}
