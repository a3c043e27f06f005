//! Unbalanced Haar bases for arbitrary series lengths.
//!
//! Every mother wavelet is a two-level step function on `[s, e]` with a jump
//! after the breakpoint `b`: positive on `[s, b]`, negative on `[b+1, e]`,
//! zero mean and unit norm. A segment whose length is a power of two is split
//! at its midpoint (classical Haar); any other segment of length `L` puts the
//! non-dyadic remainder `L - 2^⌊log₂ L⌋` first and the largest dyadic block
//! last. Positions are 1-based.

use crate::error::{BenchError, Result};

/// One mother wavelet: support `[start, end]`, positive part `[start, breakpoint]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WaveletNode {
    pub start: usize,
    pub breakpoint: usize,
    pub end: usize,
    /// Scale level, 0 for the root mother wavelet.
    pub level: usize,
    /// 1-based translation index; the children of `(j, k)` are `(j+1, 2k-1)` and `(j+1, 2k)`.
    pub index: usize,
}

impl WaveletNode {
    pub fn key(&self) -> (usize, usize) {
        (self.level, self.index)
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    /// Always false: a node spans at least two points.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn positive_len(&self) -> usize {
        self.breakpoint - self.start + 1
    }

    pub fn negative_len(&self) -> usize {
        self.end - self.breakpoint
    }

    /// Amplitudes `(a⁺, a⁻)`: the wavelet is `+a⁺` on the positive part and `-a⁻` on the negative part.
    pub fn amplitudes(&self) -> (f64, f64) {
        let total = self.len() as f64;
        let pos = self.positive_len() as f64;
        let neg = self.negative_len() as f64;
        ((1.0 / pos - 1.0 / total).sqrt(), (1.0 / neg - 1.0 / total).sqrt())
    }

    /// Value of the wavelet at 1-based position `t`.
    pub fn value_at(&self, t: usize) -> f64 {
        let (ap, an) = self.amplitudes();
        if t < self.start || t > self.end {
            0.0
        } else if t <= self.breakpoint {
            ap
        } else {
            -an
        }
    }
}

/// A complete orthonormal unbalanced Haar basis on `{1, ..., n}`: the
/// constant father function plus `n - 1` mother wavelets.
#[derive(Debug, Clone, PartialEq)]
pub struct UhBasis {
    n: usize,
    nodes: Vec<WaveletNode>,
    /// Levels `0..shared_levels` mirror a low-frequency basis (paired bases only).
    shared_levels: usize,
}

/// `2^⌊log₂ n⌋`.
pub fn largest_dyadic_below(n: usize) -> Result<usize> {
    if n == 0 {
        return Err(BenchError::domain("largest dyadic length is undefined for n = 0"));
    }
    Ok(1usize << (usize::BITS - 1 - n.leading_zeros()))
}

/// Breakpoint of the segment `[s, e]` under the splitting rule above.
fn split_point(s: usize, e: usize) -> usize {
    let len = e - s + 1;
    let dyadic = 1usize << (usize::BITS - 1 - len.leading_zeros());
    if dyadic == len {
        s + len / 2 - 1
    } else {
        s + (len - dyadic) - 1
    }
}

/// Recursively splits `[s, e]`, pushing nodes with levels offset by `level`
/// and heap indices derived from `index`.
fn grow(s: usize, e: usize, level: usize, index: usize, out: &mut Vec<WaveletNode>) {
    // Breadth-first so that nodes come out level by level.
    let mut queue = std::collections::VecDeque::from([(s, e, level, index)]);
    while let Some((s, e, level, index)) = queue.pop_front() {
        if e <= s {
            continue;
        }
        let b = split_point(s, e);
        out.push(WaveletNode {
            start: s,
            breakpoint: b,
            end: e,
            level,
            index,
        });
        queue.push_back((s, b, level + 1, 2 * index - 1));
        queue.push_back((b + 1, e, level + 1, 2 * index));
    }
}

/// Unbalanced Haar basis on `{1, ..., n}`. For `n = 2^J` this is the classical Haar basis.
pub fn build_uh_basis(n: usize) -> Result<UhBasis> {
    if n == 0 {
        return Err(BenchError::domain("basis length must be at least 1"));
    }
    let mut nodes = Vec::with_capacity(n.saturating_sub(1));
    grow(1, n, 0, 1, &mut nodes);
    Ok(UhBasis {
        n,
        nodes,
        shared_levels: 0,
    })
}

/// Paired bases for benchmarking `m` low-frequency values against `k·m`
/// high-frequency values.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedBases {
    pub low: UhBasis,
    pub high: UhBasis,
    /// Deepest level of the low basis (`J_L`); `None` when `m = 1` and the low basis has no mother wavelets.
    pub split_level: Option<usize>,
}

/// Builds the low basis on `m` points and a high basis on `k·m` points whose
/// first `J_L + 1` levels are the low wavelets stretched by `k`.
///
/// Within each length-k block the remaining wavelets follow the same
/// splitting rule and are numbered from level `J_L + 1`, so every level above
/// `J_L` lives inside single low-frequency blocks.
pub fn build_paired_bases(m: usize, k: usize) -> Result<PairedBases> {
    if m == 0 {
        return Err(BenchError::domain("low-frequency length must be at least 1"));
    }
    if k < 2 {
        return Err(BenchError::domain(format!(
            "paired bases need an aggregation factor of at least 2, got {k}"
        )));
    }
    let low = build_uh_basis(m)?;
    let split_level = low.max_level();
    let shared_levels = split_level.map_or(0, |j| j + 1);

    let mut nodes: Vec<WaveletNode> = low
        .nodes
        .iter()
        .map(|nd| WaveletNode {
            start: k * (nd.start - 1) + 1,
            breakpoint: k * nd.breakpoint,
            end: k * nd.end,
            level: nd.level,
            index: nd.index,
        })
        .collect();

    let mut block = Vec::new();
    grow(1, k, 0, 1, &mut block);
    // Emit block nodes level by level so the node list stays sorted by level.
    let depth = block.iter().map(|nd| nd.level + 1).max().unwrap_or(0);
    for d in 0..depth {
        for blk in 0..m {
            for nd in block.iter().filter(|nd| nd.level == d) {
                let offset = blk * k;
                nodes.push(WaveletNode {
                    start: nd.start + offset,
                    breakpoint: nd.breakpoint + offset,
                    end: nd.end + offset,
                    level: shared_levels + d,
                    index: blk * (1 << d) + nd.index,
                });
            }
        }
    }

    let high = UhBasis {
        n: k * m,
        nodes,
        shared_levels,
    };
    Ok(PairedBases {
        low,
        high,
        split_level,
    })
}

/// Number of wavelet levels inside one length-k block, `⌈log₂ k⌉`.
pub fn detail_levels(k: usize) -> usize {
    if k <= 1 {
        0
    } else {
        (usize::BITS - (k - 1).leading_zeros()) as usize
    }
}

impl UhBasis {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Mother wavelets ordered by level, then by position.
    pub fn nodes(&self) -> &[WaveletNode] {
        &self.nodes
    }

    /// Deepest level present, `None` when `n = 1`.
    pub fn max_level(&self) -> Option<usize> {
        self.nodes.iter().map(|nd| nd.level).max()
    }

    /// Levels below this index are shared with a paired low-frequency basis.
    pub fn shared_levels(&self) -> usize {
        self.shared_levels
    }

    pub fn is_shared(&self, node: &WaveletNode) -> bool {
        node.level < self.shared_levels
    }

    pub fn node(&self, level: usize, index: usize) -> Option<&WaveletNode> {
        self.nodes
            .iter()
            .find(|nd| nd.level == level && nd.index == index)
    }

    /// Distinct levels in increasing order.
    pub fn levels(&self) -> Vec<usize> {
        let mut lv: Vec<usize> = self.nodes.iter().map(|nd| nd.level).collect();
        lv.dedup();
        lv
    }

    /// Writes `level,index,s,b,e` rows.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let map = |e: csv::Error| BenchError::Parse(format!("CSV write failed: {e}"));
        wtr.write_record(["level", "index", "s", "b", "e"]).map_err(map)?;
        for nd in &self.nodes {
            wtr.write_record([
                nd.level.to_string(),
                nd.index.to_string(),
                nd.start.to_string(),
                nd.breakpoint.to_string(),
                nd.end.to_string(),
            ])
            .map_err(map)?;
        }
        wtr.flush()
            .map_err(|e| BenchError::Parse(format!("CSV flush failed: {e}")))?;
        Ok(())
    }
}
