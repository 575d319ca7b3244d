//! Encoding label sets, decoding vectors by cosine proximity, concept
//! arithmetic and zero-shot class insertion.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::factorize::EmbeddingMatrix;
use crate::par;

/// A point in embedding space; not normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedVector(Vec<f64>);

impl EmbeddedVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("embedded vector has non-finite components".into()));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        dot(&self.0, &self.0).sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|v| v * factor).collect())
    }
}

/// Labels ranked by non-increasing proximity; equal proximities are ordered
/// by ascending label index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankedPredictions {
    items: Vec<(usize, f64)>,
}

impl RankedPredictions {
    /// Sorts `(label, proximity)` pairs into ranking order. Duplicate labels
    /// are rejected.
    pub fn from_scores(mut items: Vec<(usize, f64)>) -> Result<Self> {
        items.sort_by(rank_order);
        if has_duplicate(&items) {
            return Err(Error::Argument("duplicate label in predictions".into()));
        }
        Ok(Self { items })
    }

    /// Takes labels in the given rank order, e.g. from a predictions file.
    /// Proximities are synthesized as strictly decreasing placeholders.
    pub fn from_ranked_labels(labels: &[usize]) -> Result<Self> {
        let items: Vec<(usize, f64)> = labels
            .iter()
            .enumerate()
            .map(|(rank, &l)| (l, 1.0 - rank as f64 / (labels.len() as f64 + 1.0)))
            .collect();
        if has_duplicate(&items) {
            return Err(Error::Argument("duplicate label in predictions".into()));
        }
        Ok(Self { items })
    }

    pub fn items(&self) -> &[(usize, f64)] {
        &self.items
    }

    pub fn labels(&self) -> impl Iterator<Item = usize> + '_ {
        self.items.iter().map(|&(l, _)| l)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn truncate(&mut self, p: usize) {
        self.items.truncate(p);
    }
}

fn has_duplicate(items: &[(usize, f64)]) -> bool {
    let mut labels: Vec<usize> = items.iter().map(|i| i.0).collect();
    labels.sort_unstable();
    labels.windows(2).any(|w| w[0] == w[1])
}

fn rank_order(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// Sum of the rows of `e` for the given labels. Repeated indices count once.
pub fn encode(label_indices: &[usize], e: &EmbeddingMatrix) -> Result<EmbeddedVector> {
    if label_indices.is_empty() {
        return Err(Error::Argument("cannot encode an empty label set".into()));
    }
    let mut set = label_indices.to_vec();
    set.sort_unstable();
    set.dedup();
    let mut sum = vec![0.0; e.k()];
    for &i in &set {
        if i >= e.n() {
            return Err(Error::Argument(format!("label index {i} out of range for N={}", e.n())));
        }
        for (s, v) in sum.iter_mut().zip(e.row(i)) {
            *s += v;
        }
    }
    EmbeddedVector::new(sum)
}

/// `(a·b)/(‖a‖·‖b‖)` clamped into `[-1, 1]`.
pub fn cosine_proximity(a: &EmbeddedVector, b: &EmbeddedVector) -> Result<f64> {
    cosine_slices(a.values(), b.values())
}

pub(crate) fn cosine_slices(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Argument(format!("dimension mismatch: {} vs {}", a.len(), b.len())));
    }
    let aa = dot(a, a);
    let bb = dot(b, b);
    if aa == 0.0 || bb == 0.0 {
        return Err(Error::DegenerateVector("zero-norm vector has no direction".into()));
    }
    Ok(proximity(dot(a, b), aa, bb))
}

/// Adding 0.0 folds -0.0 into 0.0 so orthogonal rows tie exactly.
fn proximity(ab: f64, aa: f64, bb: f64) -> f64 {
    (ab / (aa * bb).sqrt()).clamp(-1.0, 1.0) + 0.0
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The `p` rows of `e` closest to `v` by cosine proximity. Zero rows are
/// skipped.
pub fn decode(v: &EmbeddedVector, e: &EmbeddingMatrix, p: usize) -> Result<RankedPredictions> {
    decode_excluding(v, e, p, &[])
}

/// [`decode`] with the listed labels removed from the candidates.
pub fn decode_excluding(v: &EmbeddedVector, e: &EmbeddingMatrix, p: usize, exclude: &[usize]) -> Result<RankedPredictions> {
    if p == 0 {
        return Err(Error::Argument("p must be at least 1".into()));
    }
    if v.dim() != e.k() {
        return Err(Error::Argument(format!(
            "vector has dimension {}, embedding has {}",
            v.dim(),
            e.k()
        )));
    }
    let q = v.values();
    let qq = dot(q, q);
    if qq == 0.0 {
        return Err(Error::DegenerateVector("cannot decode the zero vector".into()));
    }
    let scores = par::map_range(e.n(), |i| {
        let row = e.row(i);
        let rr = dot(row, row);
        (rr > 0.0).then(|| (i, proximity(dot(q, row), qq, rr)))
    });
    let mut items: Vec<(usize, f64)> = scores.into_iter().flatten().filter(|(i, _)| !exclude.contains(i)).collect();
    if p < items.len() {
        items.select_nth_unstable_by(p - 1, rank_order);
        items.truncate(p);
    }
    items.sort_by(rank_order);
    Ok(RankedPredictions { items })
}

/// Decodes `Σ plus − Σ minus`, excluding the query labels from the results.
pub fn arithmetic_query(plus: &[usize], minus: &[usize], e: &EmbeddingMatrix, p: usize) -> Result<RankedPredictions> {
    if plus.is_empty() {
        return Err(Error::Argument("arithmetic query needs at least one positive label".into()));
    }
    let mut v = encode(plus, e)?.into_inner();
    if !minus.is_empty() {
        let neg = encode(minus, e)?;
        for (a, b) in v.iter_mut().zip(neg.values()) {
            *a -= b;
        }
    }
    let v = EmbeddedVector::new(v)?;
    let exclude: Vec<usize> = plus.iter().chain(minus).copied().collect();
    decode_excluding(&v, e, p, &exclude)
}

/// Places a new class from its measured PMI against the `N` known classes.
///
/// Solves `min ‖E·x − pmi‖₂` with the minimum-norm least-squares solution,
/// appends `x` as row `N` and returns the residual norm.
pub fn zero_shot_insert(e: &EmbeddingMatrix, pmi_with_known: &[f64]) -> Result<(EmbeddingMatrix, f64)> {
    if pmi_with_known.len() != e.n() {
        return Err(Error::Argument(format!(
            "PMI vector has length {}, expected {}",
            pmi_with_known.len(),
            e.n()
        )));
    }
    if pmi_with_known.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("PMI vector has non-finite entries".into()));
    }
    if pmi_with_known.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateStatistics(
            "new class has no measured PMI with any known class".into(),
        ));
    }
    let x = least_squares_min_norm(&e.to_matrix(), &DVector::from_column_slice(pmi_with_known))?;
    let fitted = e.to_matrix() * &x;
    let residual = fitted.iter().zip(pmi_with_known).map(|(f, t)| (f - t).powi(2)).sum::<f64>().sqrt();
    Ok((e.with_appended_row(x.as_slice()), residual))
}

fn least_squares_min_norm(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = a.clone().svd(true, true);
    let largest = svd.singular_values.iter().fold(0.0f64, |m, &s| m.max(s));
    if largest == 0.0 {
        return Ok(DVector::zeros(a.ncols()));
    }
    let eps = largest * f64::EPSILON * a.nrows().max(a.ncols()) as f64;
    svd.solve(b, eps)
        .map_err(|e| Error::DegenerateStatistics(format!("least-squares solve failed: {e}")))
}
