//! Sparse symmetric pointwise mutual information matrix.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::corpus::CooccurrenceStats;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PmiMode {
    /// Values clamped at zero; zeros are not stored.
    #[default]
    Positive,
    /// Raw PMI on observed pairs.
    Raw,
}

impl std::str::FromStr for PmiMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive" => Ok(PmiMode::Positive),
            "raw" => Ok(PmiMode::Raw),
            other => Err(Error::Argument(format!("unknown PMI mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmiOptions {
    pub mode: PmiMode,
    /// Additive count applied to joint and marginal counts and to |D|.
    pub alpha: f64,
    /// Drop diagonal entries (ablation only).
    pub zero_diagonal: bool,
}

impl Default for PmiOptions {
    fn default() -> Self {
        Self {
            mode: PmiMode::Positive,
            alpha: 0.0,
            zero_diagonal: false,
        }
    }
}

/// Upper-triangular triplets `(i, j, value)` with `i ≤ j`, sorted by `(i, j)`.
/// Unstored pairs read as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PmiMatrix {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
    mode: PmiMode,
}

impl PmiMatrix {
    /// Builds a matrix from upper-triangular triplets. Lower-triangular
    /// coordinates are mirrored; zero values are dropped.
    pub fn from_triplets(n: usize, triplets: impl IntoIterator<Item = (usize, usize, f64)>, mode: PmiMode) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(Error::Argument(format!("entry ({i}, {j}) out of range for N={n}")));
            }
            if !v.is_finite() {
                return Err(Error::Argument(format!("entry ({i}, {j}) is not finite")));
            }
            if v != 0.0 {
                entries.push((i.min(j), i.max(j), v));
            }
        }
        entries.sort_by_key(|e| (e.0, e.1));
        if entries.windows(2).any(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::Argument("duplicate matrix entry".into()));
        }
        Ok(Self { n, entries, mode })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> PmiMode {
        self.mode
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let key = (i.min(j), i.max(j));
        self.entries
            .binary_search_by(|e| (e.0, e.1).cmp(&key))
            .map(|pos| self.entries[pos].2)
            .unwrap_or(0.0)
    }

    /// Dense row `i`, i.e. PMI of class `i` against every class.
    pub fn row(&self, i: usize) -> Vec<f64> {
        let mut row = vec![0.0; self.n];
        for &(a, b, v) in &self.entries {
            if a == i {
                row[b] = v;
            } else if b == i {
                row[a] = v;
            }
        }
        row
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for &(i, j, v) in &self.entries {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }

    /// `y = M·x`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for &(i, j, v) in &self.entries {
            y[i] += v * x[j];
            if i != j {
                y[j] += v * x[i];
            }
        }
    }
}

/// Computes `ln(p(i,j) / (p(i)·p(j)))` for every observed pair, with
/// `p(i,j) = (c_ij + α)/(|D| + α)` and `p(i) = (c_i + α)/(|D| + α)`.
fn pmi_value(joint_count: u64, p_i: f64, p_j: f64, total: f64, alpha: f64, mode: PmiMode) -> f64 {
    let joint = (joint_count as f64 + alpha) / total;
    let value = (joint / (p_i * p_j)).ln();
    match mode {
        PmiMode::Positive if value <= 0.0 => 0.0,
        _ => value,
    }
}

/// PMI of `target` against every label, for statistics that may not cover
/// the whole vocabulary. Labels never seen with `target` read 0.
pub fn pmi_row(stats: &CooccurrenceStats, target: usize, options: PmiOptions) -> Result<Vec<f64>> {
    let alpha = options.alpha;
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Argument(format!("smoothing must be a finite value >= 0, got {alpha}")));
    }
    if target >= stats.n() {
        return Err(Error::Argument(format!("label {target} out of range for {} labels", stats.n())));
    }
    if stats.marginal()[target] == 0 {
        return Err(Error::DegenerateStatistics(format!("label {target} never occurs")));
    }
    let total = stats.num_instances() as f64 + alpha;
    let prob = |c: u64| (c as f64 + alpha) / total;
    let p_t = prob(stats.marginal()[target]);
    Ok((0..stats.n())
        .map(|j| {
            let c = stats.pair(target, j);
            if c == 0 || (options.zero_diagonal && j == target) {
                0.0
            } else {
                pmi_value(c, p_t, prob(stats.marginal()[j]), total, alpha, options.mode)
            }
        })
        .collect())
}

pub fn compute_pmi(stats: &CooccurrenceStats, options: PmiOptions) -> Result<PmiMatrix> {
    let alpha = options.alpha;
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Argument(format!("smoothing must be a finite value >= 0, got {alpha}")));
    }
    if stats.num_instances() == 0 {
        return Err(Error::DegenerateStatistics("corpus has no instances".into()));
    }
    if let Some(i) = stats.marginal().iter().position(|&c| c == 0) {
        return Err(Error::DegenerateStatistics(format!("label {i} has zero marginal count")));
    }
    let total = stats.num_instances() as f64 + alpha;
    let prob: Vec<f64> = stats.marginal().iter().map(|&c| (c as f64 + alpha) / total).collect();

    let mut entries = Vec::with_capacity(stats.num_pairs());
    for ((i, j), c) in stats.pairs() {
        if options.zero_diagonal && i == j {
            continue;
        }
        let value = pmi_value(c, prob[i], prob[j], total, alpha, options.mode);
        if value != 0.0 {
            entries.push((i, j, value));
        }
    }
    Ok(PmiMatrix {
        n: stats.n(),
        entries,
        mode: options.mode,
    })
}
