//! Class-weighted MAP@100.
//!
//! `P(k, n)` is the dataset-level precision of class `n` among predictions at
//! rank ≤ k: every instance that predicts `n` within its first `k` labels
//! contributes a true positive if its ground truth contains `n` and a false
//! positive otherwise. It is 0 when no instance predicts `n` that early.

use serde::Serialize;

use crate::embed::RankedPredictions;
use crate::error::{Error, Result};
use crate::par;

/// Number of cutoffs averaged by MAP@100.
pub const MAP_CUTOFF: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassWeights {
    weights: Vec<f64>,
    cap_min: f64,
    cap_max: f64,
}

impl ClassWeights {
    pub fn new(weights: Vec<f64>, cap_min: f64, cap_max: f64) -> Result<Self> {
        check_caps(cap_min, cap_max)?;
        if let Some(w) = weights.iter().find(|&&w| !(cap_min..=cap_max).contains(&w)) {
            return Err(Error::Argument(format!("weight {w} outside caps [{cap_min}, {cap_max}]")));
        }
        Ok(Self { weights, cap_min, cap_max })
    }

    /// Weight 1 for each of `n` classes.
    pub fn uniform(n: usize) -> Self {
        Self {
            weights: vec![1.0; n],
            cap_min: 1.0,
            cap_max: 1.0,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn cap_min(&self) -> f64 {
        self.cap_min
    }

    pub fn cap_max(&self) -> f64 {
        self.cap_max
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.weights.iter().map(|w| w * factor).collect(),
            self.cap_min * factor,
            self.cap_max * factor,
        )
    }
}

fn check_caps(cap_min: f64, cap_max: f64) -> Result<()> {
    if !(cap_min > 0.0 && cap_min.is_finite() && cap_max.is_finite() && cap_min <= cap_max) {
        return Err(Error::Argument(format!(
            "caps must satisfy 0 < cap_min <= cap_max, got ({cap_min}, {cap_max})"
        )));
    }
    Ok(())
}

/// `weights[i] = clamp(scale · frequency[i] / Σ frequency, cap_min, cap_max)`.
pub fn compute_class_weights(frequency: &[f64], cap_min: f64, cap_max: f64, scale: f64) -> Result<ClassWeights> {
    check_caps(cap_min, cap_max)?;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Argument(format!("scale must be positive, got {scale}")));
    }
    if frequency.iter().any(|&f| !(f >= 0.0 && f.is_finite())) {
        return Err(Error::Argument("frequencies must be finite and non-negative".into()));
    }
    let total: f64 = frequency.iter().sum();
    if total == 0.0 {
        return Err(Error::DegenerateStatistics("all class frequencies are zero".into()));
    }
    let weights = frequency.iter().map(|&f| (scale * f / total).clamp(cap_min, cap_max)).collect();
    ClassWeights::new(weights, cap_min, cap_max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalResult {
    pub weighted_map: f64,
    pub per_class_ap: Vec<f64>,
    /// Classes with at least one ground-truth positive.
    pub counted_classes: usize,
}

fn validate(predictions: &[RankedPredictions], truth: &[Vec<usize>], num_classes: usize) -> Result<()> {
    if predictions.len() != truth.len() {
        return Err(Error::Argument(format!(
            "{} prediction lists for {} ground-truth instances",
            predictions.len(),
            truth.len()
        )));
    }
    for labels in truth {
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::Argument(format!(
                "ground-truth label {bad} out of range for N={num_classes}"
            )));
        }
    }
    for p in predictions {
        if let Some(bad) = p.labels().find(|&l| l >= num_classes) {
            return Err(Error::Argument(format!("predicted label {bad} out of range for N={num_classes}")));
        }
    }
    Ok(())
}

fn contains(labels: &[usize], n: usize) -> bool {
    labels.contains(&n)
}

/// Precision of class `class` over predictions at rank ≤ `k`.
pub fn precision_at_cutoff(
    predictions: &[RankedPredictions],
    truth: &[Vec<usize>],
    num_classes: usize,
    class: usize,
    k: usize,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::Argument("cutoff must be at least 1".into()));
    }
    if class >= num_classes {
        return Err(Error::Argument(format!("class {class} out of range for N={num_classes}")));
    }
    validate(predictions, truth, num_classes)?;
    let (mut tp, mut fp) = (0u64, 0u64);
    for (pred, labels) in predictions.iter().zip(truth) {
        if pred.labels().take(k).any(|l| l == class) {
            if contains(labels, class) {
                tp += 1;
            } else {
                fp += 1;
            }
        }
    }
    Ok(if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 })
}

/// Per-class AP `Σ_{k=1..100} P(k, n)/100` and
/// `weighted_map = (1/N)·Σ_n weights[n]·AP[n]` with `N = weights.len()`.
pub fn weighted_map_at_100(predictions: &[RankedPredictions], truth: &[Vec<usize>], weights: &ClassWeights) -> Result<EvalResult> {
    let num_classes = weights.len();
    if truth.is_empty() {
        return Err(Error::Argument("no instances to evaluate".into()));
    }
    if num_classes == 0 {
        return Err(Error::Argument("evaluation vocabulary is empty".into()));
    }
    validate(predictions, truth, num_classes)?;
    if let Some(p) = predictions.iter().find(|p| p.len() > MAP_CUTOFF) {
        return Err(Error::Argument(format!(
            "prediction list of length {} exceeds {MAP_CUTOFF}",
            p.len()
        )));
    }

    // hits[n * CUTOFF + r]: (true, false) positives of class n at rank r
    const SHARD: usize = 512;
    let pairs: Vec<(&RankedPredictions, &Vec<usize>)> = predictions.iter().zip(truth).collect();
    let partials = par::map_chunks(&pairs, SHARD, |shard| {
        let mut hits = vec![(0u64, 0u64); num_classes * MAP_CUTOFF];
        let mut positives = vec![false; num_classes];
        for (pred, labels) in shard {
            for &l in labels.iter() {
                positives[l] = true;
            }
            for (rank, n) in pred.labels().enumerate() {
                let slot = &mut hits[n * MAP_CUTOFF + rank];
                if contains(labels, n) {
                    slot.0 += 1;
                } else {
                    slot.1 += 1;
                }
            }
        }
        (hits, positives)
    });
    let mut hits = vec![(0u64, 0u64); num_classes * MAP_CUTOFF];
    let mut positives = vec![false; num_classes];
    for (part, pos) in partials {
        for (h, p) in hits.iter_mut().zip(part) {
            h.0 += p.0;
            h.1 += p.1;
        }
        for (a, b) in positives.iter_mut().zip(pos) {
            *a |= b;
        }
    }

    let per_class_ap = par::map_range(num_classes, |n| {
        let (mut tp, mut fp) = (0u64, 0u64);
        let mut sum = 0.0;
        for &(t, f) in &hits[n * MAP_CUTOFF..(n + 1) * MAP_CUTOFF] {
            tp += t;
            fp += f;
            if tp + fp > 0 {
                sum += tp as f64 / (tp + fp) as f64;
            }
        }
        sum / MAP_CUTOFF as f64
    });
    let weighted_sum: f64 = per_class_ap.iter().zip(weights.weights()).map(|(ap, w)| ap * w).sum();
    Ok(EvalResult {
        weighted_map: weighted_sum / num_classes as f64,
        per_class_ap,
        counted_classes: positives.iter().filter(|&&p| p).count(),
    })
}
