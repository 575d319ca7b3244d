//! Cosine-proximity regression versus logistic regression on synthetic
//! multi-label data.
//!
//! Both arms train the same linear model with the same optimizer, seed and
//! batch schedule; only the output layer width and the loss differ.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::corpus::CooccurrenceStats;
use crate::embed::{self, cosine_slices, dot, EmbeddedVector, RankedPredictions};
use crate::error::{Error, Result};
use crate::eval::{self, MAP_CUTOFF};
use crate::factorize::{self, EmbeddingMatrix};
use crate::par;
use crate::pmi::{self, PmiOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub clusters: usize,
    pub labels_per_cluster: usize,
    /// Scales the per-label activation probability `1 − noise` of a cluster's labels.
    pub cooccurrence_strength: f64,
    /// Label noise: drop rate for cluster labels and rate of random distractors.
    pub noise: f64,
    pub feature_dim: usize,
    /// Standard deviation of cluster centroids.
    pub separation: f64,
    /// Standard deviation of per-instance feature noise.
    pub feature_noise: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            clusters: 20,
            labels_per_cluster: 5,
            cooccurrence_strength: 0.5,
            noise: 0.1,
            feature_dim: 16,
            separation: 0.7,
            feature_noise: 1.0,
        }
    }
}

impl SyntheticConfig {
    pub fn num_labels(&self) -> usize {
        self.clusters * self.labels_per_cluster
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Argument(format!("synthetic config: {m}")));
        if self.clusters == 0 {
            return bad("need at least one cluster");
        }
        if self.labels_per_cluster < 2 {
            return bad("need at least two labels per cluster");
        }
        if !(0.0..1.0).contains(&self.noise) {
            return bad("noise must lie in [0, 1)");
        }
        if !(self.cooccurrence_strength > 0.0 && self.cooccurrence_strength <= 1.0) {
            return bad("co-occurrence strength must lie in (0, 1]");
        }
        if self.feature_dim == 0 {
            return bad("feature dimension must be positive");
        }
        if !(self.separation >= 0.0 && self.feature_noise >= 0.0) {
            return bad("standard deviations must be non-negative");
        }
        Ok(())
    }
}

/// Instances with cluster-derived features and label sets.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub config: SyntheticConfig,
    pub seed: u64,
    /// Row-major `instances × feature_dim`.
    pub features: Vec<f64>,
    pub labelsets: Vec<Vec<usize>>,
    pub clusters: Vec<usize>,
}

impl SyntheticDataset {
    pub fn len(&self) -> usize {
        self.labelsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labelsets.is_empty()
    }

    pub fn num_labels(&self) -> usize {
        self.config.num_labels()
    }

    pub fn feature_dim(&self) -> usize {
        self.config.feature_dim
    }

    pub fn feature(&self, i: usize) -> &[f64] {
        let f = self.config.feature_dim;
        &self.features[i * f..(i + 1) * f]
    }

    /// Splits into the first `head` instances and the rest.
    pub fn split(&self, head: usize) -> (SyntheticDataset, SyntheticDataset) {
        let head = head.min(self.len());
        let f = self.config.feature_dim;
        let part = |range: std::ops::Range<usize>| SyntheticDataset {
            config: self.config.clone(),
            seed: self.seed,
            features: self.features[range.start * f..range.end * f].to_vec(),
            labelsets: self.labelsets[range.clone()].to_vec(),
            clusters: self.clusters[range].to_vec(),
        };
        (part(0..head), part(head..self.len()))
    }
}

/// Draws `instances` examples. Each picks a cluster uniformly, activates
/// each of the cluster's labels with probability `strength·(1 − noise)`
/// (redrawing until at least one is active), adds one uniformly random
/// distractor label per cluster slot with probability `noise`, and gets
/// features `centroid + N(0, feature_noise²)`.
pub fn generate_synthetic(config: &SyntheticConfig, instances: usize, seed: u64) -> Result<SyntheticDataset> {
    config.validate()?;
    if instances == 0 {
        return Err(Error::Argument("synthetic dataset needs at least one instance".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = config.feature_dim;
    let centroids: Vec<f64> = (0..config.clusters * f)
        .map(|_| config.separation * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let noise = Normal::new(0.0, config.feature_noise).map_err(|e| Error::Argument(format!("feature noise: {e}")))?;
    let keep = config.cooccurrence_strength * (1.0 - config.noise);
    let n = config.num_labels();
    let l = config.labels_per_cluster;

    let mut features = Vec::with_capacity(instances * f);
    let mut labelsets = Vec::with_capacity(instances);
    let mut clusters = Vec::with_capacity(instances);
    for _ in 0..instances {
        let c = rng.random_range(0..config.clusters);
        let mut labels: Vec<usize> = Vec::new();
        while labels.is_empty() {
            labels = (0..l).filter(|_| rng.random_bool(keep)).map(|j| c * l + j).collect();
        }
        for _ in 0..l {
            if rng.random_bool(config.noise) {
                labels.push(rng.random_range(0..n));
            }
        }
        labels.sort_unstable();
        labels.dedup();
        features.extend(centroids[c * f..(c + 1) * f].iter().map(|m| m + noise.sample(&mut rng)));
        labelsets.push(labels);
        clusters.push(c);
    }
    Ok(SyntheticDataset {
        config: config.clone(),
        seed,
        features,
        labelsets,
        clusters,
    })
}

/// `−(e/‖e‖)·(ẽ/‖ẽ‖)`.
pub fn cosine_loss(target: &[f64], prediction: &[f64]) -> Result<f64> {
    Ok(-cosine_slices(target, prediction)?)
}

/// Gradient of [`cosine_loss`] with respect to the prediction:
/// `−(e/(‖e‖‖ẽ‖) − (e·ẽ)·ẽ/(‖e‖‖ẽ‖³))`.
pub fn cosine_loss_grad(target: &[f64], prediction: &[f64]) -> Result<Vec<f64>> {
    if target.len() != prediction.len() {
        return Err(Error::Argument(format!(
            "dimension mismatch: {} vs {}",
            target.len(),
            prediction.len()
        )));
    }
    let ne = dot(target, target).sqrt();
    let np = dot(prediction, prediction).sqrt();
    if ne == 0.0 || np == 0.0 {
        return Err(Error::DegenerateVector("cosine loss is undefined for a zero vector".into()));
    }
    let ep = dot(target, prediction);
    let a = 1.0 / (ne * np);
    let b = ep / (ne * np * np * np);
    Ok(target.iter().zip(prediction).map(|(e, p)| -(a * e - b * p)).collect())
}

/// Mean sigmoid cross-entropy over classes and its gradient `(σ(z) − t)/N`.
pub fn sigmoid_cross_entropy(targets: &[f64], logits: &[f64]) -> Result<(f64, Vec<f64>)> {
    if targets.len() != logits.len() || targets.is_empty() {
        return Err(Error::Argument(format!(
            "need equal non-zero lengths, got {} targets and {} logits",
            targets.len(),
            logits.len()
        )));
    }
    let n = targets.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(targets.len());
    for (&t, &z) in targets.iter().zip(logits) {
        loss += z.max(0.0) - z * t + (-z.abs()).exp().ln_1p();
        grad.push((sigmoid(z) - t) / n);
    }
    Ok((loss / n, grad))
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    /// Regress the embedded label set under cosine loss.
    Cosine,
    /// One sigmoid per class under binary cross-entropy.
    Logistic,
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LossKind::Cosine => "cosine",
            LossKind::Logistic => "logistic",
        })
    }
}

/// `output = Wᵗ·x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    inputs: usize,
    outputs: usize,
    /// Row-major `inputs × outputs`.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl LinearModel {
    /// Gaussian weights with standard deviation `scale`, zero bias.
    pub fn new(inputs: usize, outputs: usize, scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = (0..inputs * outputs)
            .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        Self {
            inputs,
            outputs,
            weights,
            bias: vec![0.0; outputs],
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.bias.clone();
        for (xi, row) in x.iter().zip(self.weights.chunks_exact(self.outputs)) {
            for (o, w) in out.iter_mut().zip(row) {
                *o += xi * w;
            }
        }
        out
    }

    fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub eval_every: usize,
    pub seed: u64,
    /// Predictions kept per held-out instance.
    pub p: usize,
    pub cap_min: f64,
    pub cap_max: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 2000,
            batch_size: 32,
            learning_rate: 0.05,
            eval_every: 100,
            seed: 0,
            p: MAP_CUTOFF,
            cap_min: 0.1,
            cap_max: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistoryRecord {
    pub step: usize,
    /// Mean training loss over the whole training split.
    pub loss: f64,
    pub weighted_map: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub records: Vec<HistoryRecord>,
}

impl TrainHistory {
    pub fn last(&self) -> Option<&HistoryRecord> {
        self.records.last()
    }

    /// First recorded step whose held-out MAP reaches `target`.
    pub fn steps_to_reach(&self, target: f64) -> Option<usize> {
        self.records.iter().find(|r| r.weighted_map >= target).map(|r| r.step)
    }
}

/// Supervision for one arm.
#[derive(Debug, Clone, Copy)]
pub enum Supervision<'a> {
    Cosine(&'a EmbeddingMatrix),
    Logistic,
}

impl Supervision<'_> {
    pub fn kind(&self) -> LossKind {
        match self {
            Supervision::Cosine(_) => LossKind::Cosine,
            Supervision::Logistic => LossKind::Logistic,
        }
    }

    fn output_dim(&self, num_labels: usize) -> usize {
        match self {
            Supervision::Cosine(e) => e.k(),
            Supervision::Logistic => num_labels,
        }
    }

    fn targets(&self, labelsets: &[Vec<usize>], num_labels: usize) -> Result<Vec<Vec<f64>>> {
        labelsets
            .iter()
            .map(|labels| match self {
                Supervision::Cosine(e) => {
                    let t = embed::encode(labels, e)?;
                    if t.norm() == 0.0 {
                        return Err(Error::DegenerateVector("label set embeds to the zero vector".into()));
                    }
                    Ok(t.into_inner())
                }
                Supervision::Logistic => {
                    let mut t = vec![0.0; num_labels];
                    for &l in labels {
                        t[l] = 1.0;
                    }
                    Ok(t)
                }
            })
            .collect()
    }

    fn loss_and_grad(&self, target: &[f64], output: &[f64]) -> Result<(f64, Vec<f64>)> {
        match self {
            Supervision::Cosine(_) => Ok((cosine_loss(target, output)?, cosine_loss_grad(target, output)?)),
            Supervision::Logistic => sigmoid_cross_entropy(target, output),
        }
    }

    fn predict(&self, output: &[f64], p: usize) -> Result<RankedPredictions> {
        match self {
            Supervision::Cosine(e) => {
                let v = EmbeddedVector::new(output.to_vec())?;
                if v.norm() == 0.0 {
                    return Ok(RankedPredictions::default());
                }
                embed::decode(&v, e, p)
            }
            Supervision::Logistic => {
                let mut scored: Vec<(usize, f64)> = output.iter().copied().enumerate().collect();
                scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                scored.truncate(p);
                RankedPredictions::from_scores(scored)
            }
        }
    }
}

/// Mini-batch gradient descent with a fixed step size. Evaluates at step 0,
/// every `eval_every` steps and after the last step.
pub fn train(
    model: &mut LinearModel,
    train_set: &SyntheticDataset,
    test_set: &SyntheticDataset,
    supervision: Supervision<'_>,
    config: &TrainConfig,
) -> Result<TrainHistory> {
    let arm = supervision.kind();
    let n = train_set.num_labels();
    if config.batch_size == 0 || config.eval_every == 0 || config.p == 0 || config.p > MAP_CUTOFF {
        return Err(Error::Argument(format!(
            "batch size and evaluation cadence must be positive and p in [1, {MAP_CUTOFF}]"
        )));
    }
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
        return Err(Error::Argument("learning rate must be positive".into()));
    }
    if train_set.is_empty() || test_set.is_empty() {
        return Err(Error::Argument("training and held-out splits must be non-empty".into()));
    }
    if model.inputs() != train_set.feature_dim() || model.outputs() != supervision.output_dim(n) {
        return Err(Error::Argument(format!(
            "model is {}→{}, task needs {}→{}",
            model.inputs(),
            model.outputs(),
            train_set.feature_dim(),
            supervision.output_dim(n)
        )));
    }
    if let Supervision::Cosine(e) = supervision {
        if e.n() != n {
            return Err(Error::Argument(format!("embedding has {} classes, task has {n}", e.n())));
        }
    }

    let targets = supervision.targets(&train_set.labelsets, n)?;
    let frequency: Vec<f64> = {
        let mut f = vec![0.0; n];
        for labels in &train_set.labelsets {
            for &l in labels {
                f[l] += 1.0;
            }
        }
        f
    };
    let weights = eval::compute_class_weights(&frequency, config.cap_min, config.cap_max, n as f64)?;
    let p = config.p.min(n);

    let mut history = TrainHistory::default();
    let evaluate = |model: &LinearModel, step: usize| -> Result<HistoryRecord> {
        let losses = par::map_range(train_set.len(), |i| {
            let out = model.forward(train_set.feature(i));
            supervision.loss_and_grad(&targets[i], &out).map(|(l, _)| l)
        });
        let mut total = 0.0;
        for l in losses {
            total += l?;
        }
        let loss = total / train_set.len() as f64;
        if !loss.is_finite() {
            return Err(Error::TrainingFailure { arm, step });
        }
        let predictions = par::map_range(test_set.len(), |i| supervision.predict(&model.forward(test_set.feature(i)), p))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let result = eval::weighted_map_at_100(&predictions, &test_set.labelsets, &weights)?;
        Ok(HistoryRecord {
            step,
            loss,
            weighted_map: result.weighted_map,
        })
    };
    history.records.push(evaluate(model, 0)?);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut cursor = order.len();
    let f = model.inputs;
    let o = model.outputs;
    for step in 1..=config.steps {
        let mut batch = Vec::with_capacity(config.batch_size);
        while batch.len() < config.batch_size {
            if cursor == order.len() {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            batch.push(order[cursor]);
            cursor += 1;
        }
        let grads = par::map_slice(&batch, |&i| {
            let out = model.forward(train_set.feature(i));
            supervision.loss_and_grad(&targets[i], &out)
        });
        let mut grad_w = vec![0.0; f * o];
        let mut grad_b = vec![0.0; o];
        for (&i, g) in batch.iter().zip(grads) {
            let (loss, g) = match g {
                Ok(v) => v,
                Err(Error::DegenerateVector(_)) => return Err(Error::TrainingFailure { arm, step }),
                Err(e) => return Err(e),
            };
            if !loss.is_finite() {
                return Err(Error::TrainingFailure { arm, step });
            }
            for (x, row) in train_set.feature(i).iter().zip(grad_w.chunks_exact_mut(o)) {
                for (gw, gi) in row.iter_mut().zip(&g) {
                    *gw += x * gi;
                }
            }
            for (gb, gi) in grad_b.iter_mut().zip(&g) {
                *gb += gi;
            }
        }
        let rate = config.learning_rate / batch.len() as f64;
        for (w, g) in model.weights.iter_mut().zip(&grad_w) {
            *w -= rate * g;
        }
        for (b, g) in model.bias.iter_mut().zip(&grad_b) {
            *b -= rate * g;
        }
        if !model.is_finite() {
            return Err(Error::TrainingFailure { arm, step });
        }
        if step % config.eval_every == 0 || step == config.steps {
            history.records.push(evaluate(model, step)?);
        }
    }
    Ok(history)
}

/// Full configuration of the two-arm comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DemoConfig {
    pub data: SyntheticConfig,
    pub train: TrainConfig,
    pub train_instances: usize,
    pub test_instances: usize,
    /// Embedding dimension; clipped to the number of labels.
    pub k: usize,
    pub init_scale: f64,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self {
            data: SyntheticConfig::default(),
            train: TrainConfig::default(),
            train_instances: 2000,
            test_instances: 500,
            k: 32,
            init_scale: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonSummary {
    pub baseline_final_map: f64,
    pub cosine_final_map: f64,
    /// First evaluated step where each arm reaches the baseline's final MAP.
    pub cosine_steps_to_baseline: Option<usize>,
    pub logistic_steps_to_baseline: Option<usize>,
    pub explained_variance: f64,
    pub clamped_count: usize,
}

impl ComparisonSummary {
    /// True when the cosine arm reaches the baseline's final MAP strictly
    /// earlier than the baseline itself.
    pub fn cosine_faster(&self) -> bool {
        match (self.cosine_steps_to_baseline, self.logistic_steps_to_baseline) {
            (Some(c), Some(l)) => c < l,
            _ => false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub cosine: TrainHistory,
    pub logistic: TrainHistory,
    pub embedding: EmbeddingMatrix,
    pub summary: ComparisonSummary,
}

/// Generates the task, builds the label embedding from the training split's
/// positive PMI, and trains both arms with identical settings.
pub fn run_comparison(config: &DemoConfig) -> Result<Comparison> {
    let seed = config.train.seed;
    let data = generate_synthetic(&config.data, config.train_instances + config.test_instances, seed)?;
    if config.train_instances == 0 || config.test_instances == 0 {
        return Err(Error::Argument("both splits need at least one instance".into()));
    }
    let (train_set, test_set) = data.split(config.train_instances);
    let n = train_set.num_labels();

    let stats = CooccurrenceStats::from_label_sets(&train_set.labelsets, n)?;
    let pmi = pmi::compute_pmi(&stats, PmiOptions::default())?;
    let spectrum = factorize::eigendecompose(&pmi)?;
    let k = config.k.clamp(1, n);
    let embedding = factorize::build_embedding(&spectrum, k)?;
    let explained = factorize::explained_variance(&spectrum, k)?;

    let f = train_set.feature_dim();
    let mut cosine_model = LinearModel::new(f, k, config.init_scale, seed);
    let cosine = train(
        &mut cosine_model,
        &train_set,
        &test_set,
        Supervision::Cosine(&embedding),
        &config.train,
    )?;
    let mut logistic_model = LinearModel::new(f, n, config.init_scale, seed);
    let logistic = train(&mut logistic_model, &train_set, &test_set, Supervision::Logistic, &config.train)?;

    let baseline = logistic.last().map_or(0.0, |r| r.weighted_map);
    let summary = ComparisonSummary {
        baseline_final_map: baseline,
        cosine_final_map: cosine.last().map_or(0.0, |r| r.weighted_map),
        cosine_steps_to_baseline: cosine.steps_to_reach(baseline),
        logistic_steps_to_baseline: logistic.steps_to_reach(baseline),
        explained_variance: explained,
        clamped_count: embedding.clamped_count(),
    };
    Ok(Comparison {
        cosine,
        logistic,
        embedding,
        summary,
    })
}

/// Presence probability the model assigns to each of the three labels in
/// the continuity scenario (equal mass over three classes).
pub const EQUAL_PRESENCE: f64 = 1.0 / 3.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityReport {
    /// Relative change of sigmoid cross-entropy when a third label is added
    /// to a two-label target, prediction `EQUAL_PRESENCE` on all three.
    pub cross_entropy_delta: f64,
    /// Largest relative change of cosine loss over the three choices of
    /// dropped label, against a prediction equidistant from the three rows.
    pub cosine_delta: f64,
    pub pairwise_proximity: [f64; 3],
}

/// Relative cross-entropy change `|L(two labels) − L(three labels)| / L(two labels)`
/// for a prediction assigning `presence` to all three classes.
pub fn cross_entropy_delta(presence: f64) -> Result<f64> {
    if !(presence > 0.0 && presence < 1.0) {
        return Err(Error::Argument(format!("presence probability must lie in (0, 1), got {presence}")));
    }
    let logit = (presence / (1.0 - presence)).ln();
    let logits = [logit; 3];
    let (full, _) = sigmoid_cross_entropy(&[1.0, 1.0, 1.0], &logits)?;
    let (reduced, _) = sigmoid_cross_entropy(&[1.0, 1.0, 0.0], &logits)?;
    Ok((reduced - full).abs() / reduced)
}

/// Compares how much dropping one label of a tightly co-occurring triple
/// moves the cosine loss and the cross-entropy loss.
///
/// Fails with [`Error::InapplicableProbe`] unless every pairwise cosine
/// proximity of the three rows is at least `threshold`.
pub fn continuity_probe(e: &EmbeddingMatrix, triple: [usize; 3], threshold: f64) -> Result<ContinuityReport> {
    if let Some(&bad) = triple.iter().find(|&&i| i >= e.n()) {
        return Err(Error::Argument(format!("label index {bad} out of range for N={}", e.n())));
    }
    if triple[0] == triple[1] || triple[1] == triple[2] || triple[0] == triple[2] {
        return Err(Error::Argument("triple must hold three distinct labels".into()));
    }
    let rows: Vec<&[f64]> = triple.iter().map(|&i| e.row(i)).collect();
    if rows.iter().any(|r| r.iter().all(|&v| v == 0.0)) {
        return Err(Error::InapplicableProbe("a label of the triple has a zero embedding".into()));
    }
    let pairwise = [
        cosine_slices(rows[0], rows[1])?,
        cosine_slices(rows[0], rows[2])?,
        cosine_slices(rows[1], rows[2])?,
    ];
    if let Some(min) = pairwise.iter().copied().find(|&c| c < threshold) {
        return Err(Error::InapplicableProbe(format!(
            "pairwise cosine proximity {min:.4} is below the threshold {threshold}"
        )));
    }

    // Coefficients c = G⁺·1 over unit rows make the prediction's cosine to
    // each of the three rows equal.
    let k = e.k();
    let unit: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            let len = dot(r, r).sqrt();
            r.iter().map(|v| v / len).collect()
        })
        .collect();
    let gram = DMatrix::from_fn(3, 3, |a, b| dot(&unit[a], &unit[b]));
    let coeffs = gram.pseudo_inverse(1e-12).map_err(|m| Error::DegenerateVector(m.to_string()))? * DVector::from_element(3, 1.0);
    let mut prediction = vec![0.0; k];
    for (c, u) in coeffs.iter().zip(&unit) {
        for (p, v) in prediction.iter_mut().zip(u) {
            *p += c * v;
        }
    }

    let full = embed::encode(&triple, e)?;
    let full_loss = cosine_loss(full.values(), &prediction)?;
    let mut cosine_delta = 0.0f64;
    for drop in 0..3 {
        let kept: Vec<usize> = (0..3).filter(|&j| j != drop).map(|j| triple[j]).collect();
        let reduced = embed::encode(&kept, e)?;
        let reduced_loss = cosine_loss(reduced.values(), &prediction)?;
        cosine_delta = cosine_delta.max((reduced_loss - full_loss).abs() / reduced_loss.abs());
    }
    Ok(ContinuityReport {
        cross_entropy_delta: cross_entropy_delta(EQUAL_PRESENCE)?,
        cosine_delta,
        pairwise_proximity: pairwise,
    })
}
