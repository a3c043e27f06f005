//! Time-series containers, the flow-sum aggregation relation and CSV ingestion.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{BenchError, Result};

/// Ordered, finite, real-valued observations.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    start_index: i64,
    freq_per_low: Option<usize>,
}

impl TimeSeries {
    /// Builds a series whose first period is labelled 1.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_start(values, 1)
    }

    pub fn with_start(values: Vec<f64>, start_index: i64) -> Result<Self> {
        if values.is_empty() {
            return Err(BenchError::dim("time series must be non-empty"));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(BenchError::domain(format!(
                "non-finite value {} at position {}",
                values[pos], pos
            )));
        }
        Ok(Self {
            values,
            start_index,
            freq_per_low: None,
        })
    }

    /// Attaches the descriptive "high periods per low period" tag.
    pub fn with_freq_per_low(mut self, k: usize) -> Self {
        self.freq_per_low = Some(k);
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn start_index(&self) -> i64 {
        self.start_index
    }

    pub fn freq_per_low(&self) -> Option<usize> {
        self.freq_per_low
    }

    /// The first `len` observations, keeping the start label.
    pub fn prefix(&self, len: usize) -> Result<Self> {
        if len == 0 || len > self.len() {
            return Err(BenchError::dim(format!(
                "prefix of length {} requested from series of length {}",
                len,
                self.len()
            )));
        }
        Ok(Self {
            values: self.values[..len].to_vec(),
            start_index: self.start_index,
            freq_per_low: self.freq_per_low,
        })
    }

    /// Same labels and tag, new values.
    pub(crate) fn relabel(&self, values: Vec<f64>) -> Result<Self> {
        let mut out = Self::with_start(values, self.start_index)?;
        out.freq_per_low = self.freq_per_low;
        Ok(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }
}

/// Flow-sum aggregation: each low-frequency value is the sum of `factor`
/// consecutive high-frequency values, with the first high observation
/// opening the first block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AggregationConstraint {
    factor: usize,
}

impl AggregationConstraint {
    pub fn new(factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(BenchError::domain("aggregation factor must be positive"));
        }
        Ok(Self { factor })
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    /// Number of low-frequency blocks covering `n` high-frequency points.
    pub fn blocks(&self, n: usize) -> Result<usize> {
        if !n.is_multiple_of(self.factor) {
            return Err(BenchError::dim(format!(
                "series length {} is not divisible by aggregation factor {}",
                n, self.factor
            )));
        }
        Ok(n / self.factor)
    }

    /// Checks `high.len() == k * low.len()` and returns the block count.
    pub fn check_pair(&self, high: &TimeSeries, low: &TimeSeries) -> Result<usize> {
        let m = self.blocks(high.len())?;
        if m != low.len() {
            return Err(BenchError::dim(format!(
                "high series of length {} needs {} low values at k = {}, got {}",
                high.len(),
                m,
                self.factor,
                low.len()
            )));
        }
        Ok(m)
    }
}

/// Block sums of `values` with block length `k`. Caller guarantees divisibility.
pub(crate) fn block_sums(values: &[f64], k: usize) -> Vec<f64> {
    values.chunks_exact(k).map(|c| c.iter().sum()).collect()
}

/// Sums each length-k block of `high` into one low-frequency value.
pub fn aggregate(high: &TimeSeries, c: &AggregationConstraint) -> Result<TimeSeries> {
    c.blocks(high.len())?;
    let sums = block_sums(high.values(), c.factor());
    TimeSeries::new(sums)
}

/// `low_s - aggregate(high)_s` for every low period.
pub fn constraint_residual(
    high: &TimeSeries,
    low: &TimeSeries,
    c: &AggregationConstraint,
) -> Result<Vec<f64>> {
    c.check_pair(high, low)?;
    Ok(block_sums(high.values(), c.factor())
        .into_iter()
        .zip(low.values())
        .map(|(agg, l)| l - agg)
        .collect())
}

/// Which estimator produced a [`BenchmarkResult`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Original,
    Denton { order: usize },
    DagumCholette { rho: f64 },
    ElementaryWavelet,
    Wavelet,
}

impl Method {
    /// Binding methods reproduce the low series exactly.
    pub fn is_binding(&self) -> bool {
        !matches!(self, Method::Original)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Original => write!(f, "Original"),
            Method::Denton { order } => write!(f, "Denton {order}"),
            Method::DagumCholette { .. } => write!(f, "Dagum and Cholette"),
            Method::ElementaryWavelet => write!(f, "Elementary Wavelet"),
            Method::Wavelet => write!(f, "Wavelet"),
        }
    }
}

/// Output shared by every benchmarking method.
#[derive(Debug, Clone)]
pub struct BenchmarkResult {
    pub benchmarked: TimeSeries,
    pub method: Method,
    /// `low_s - aggregate(benchmarked)_s`, one per low period.
    pub constraint_residual: Vec<f64>,
    pub seasonal: Option<TimeSeries>,
}

impl BenchmarkResult {
    pub(crate) fn assemble(
        benchmarked: TimeSeries,
        low: &TimeSeries,
        c: &AggregationConstraint,
        method: Method,
        seasonal: Option<TimeSeries>,
    ) -> Result<Self> {
        let constraint_residual = constraint_residual(&benchmarked, low, c)?;
        Ok(Self {
            benchmarked,
            method,
            constraint_residual,
            seasonal,
        })
    }

    /// The unadjusted high series, reported alongside the benchmarked ones.
    pub fn original(
        high: &TimeSeries,
        low: &TimeSeries,
        c: &AggregationConstraint,
    ) -> Result<Self> {
        Self::assemble(high.clone(), low, c, Method::Original, None)
    }

    pub fn max_abs_residual(&self) -> f64 {
        self.constraint_residual
            .iter()
            .fold(0.0_f64, |acc, r| acc.max(r.abs()))
    }

    /// Binding tolerance: `1e-8 * (1 + max |low|)`.
    pub fn satisfies_constraint(&self, low: &TimeSeries) -> bool {
        self.max_abs_residual() <= 1e-8 * (1.0 + low.max_abs())
    }
}

/// Reads a series from CSV with a required `value` column and an optional
/// integer `period` (or `t`) column. Periods, when present, must be consecutive.
pub fn read_series_csv<R: Read>(reader: R) -> Result<TimeSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| BenchError::Parse(format!("missing header row: {e}")))?
        .clone();
    let value_col = headers
        .iter()
        .position(|h| h == "value")
        .ok_or_else(|| BenchError::Parse("CSV header has no `value` column".into()))?;
    let period_col = headers.iter().position(|h| h == "period" || h == "t");

    let mut values = Vec::new();
    let mut periods = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| BenchError::Parse(format!("row {}: {e}", row + 2)))?;
        let field = record
            .get(value_col)
            .ok_or_else(|| BenchError::Parse(format!("row {}: missing value", row + 2)))?;
        let v: f64 = field
            .parse()
            .map_err(|_| BenchError::Parse(format!("row {}: bad number {field:?}", row + 2)))?;
        values.push(v);
        if let Some(pc) = period_col {
            let field = record
                .get(pc)
                .ok_or_else(|| BenchError::Parse(format!("row {}: missing period", row + 2)))?;
            let p: i64 = field
                .parse()
                .map_err(|_| BenchError::Parse(format!("row {}: bad period {field:?}", row + 2)))?;
            periods.push(p);
        }
    }
    if values.is_empty() {
        return Err(BenchError::Parse("CSV contains no observations".into()));
    }
    let start = match periods.first() {
        Some(&first) => {
            for (i, w) in periods.windows(2).enumerate() {
                if w[1] != w[0] + 1 {
                    return Err(BenchError::Parse(format!(
                        "row {}: periods must be consecutive ({} follows {})",
                        i + 3,
                        w[1],
                        w[0]
                    )));
                }
            }
            first
        }
        None => 1,
    };
    TimeSeries::with_start(values, start)
}

pub fn read_series_file(path: &Path) -> Result<TimeSeries> {
    let file = std::fs::File::open(path).map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_series_csv(file)
}

/// Writes `t,value` rows, labelling periods from the series' start index.
pub fn write_series_csv<W: Write>(series: &TimeSeries, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let map = |e: csv::Error| BenchError::Parse(format!("CSV write failed: {e}"));
    wtr.write_record(["t", "value"]).map_err(map)?;
    for (i, v) in series.values().iter().enumerate() {
        let t = series.start_index() + i as i64;
        wtr.write_record([t.to_string(), format_value(*v)])
            .map_err(map)?;
    }
    wtr.flush().map_err(|e| BenchError::Parse(format!("CSV flush failed: {e}")))?;
    Ok(())
}

/// Round-trip exact decimal rendering.
pub fn format_value(v: f64) -> String {
    format!("{v:?}")
}
