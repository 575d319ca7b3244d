use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use labelsphere::corpus::{build_vocab, count_cooccurrences, read_annotations};
use labelsphere::embed::{arithmetic_query, decode, decode_excluding, encode, zero_shot_insert};
use labelsphere::eval::{compute_class_weights, weighted_map_at_100, MAP_CUTOFF};
use labelsphere::factorize::{build_embedding, eigendecompose, eigendecompose_top_k, explained_variance, LanczosOptions};
use labelsphere::io::{
    read_embedding, read_vocab, write_comparison_csv, write_embedding, write_history_csv, write_vocab, LabeledEmbedding,
};
use labelsphere::pmi::{compute_pmi, pmi_row};
use labelsphere::trainer::run_comparison;
use labelsphere::{ClassWeights, CooccurrenceStats, Error, LabelVocab, RankedPredictions, RawRecord};
use serde_json::json;

use crate::config::{PipelineConfig, Solver};

const DEFAULT_MAX_K: usize = 256;

fn require<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    path.as_deref().ok_or_else(|| Error::Argument(format!("missing --{flag}")).into())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn load_records(path: &Path) -> Result<Vec<RawRecord>> {
    read_annotations(open(path)?).with_context(|| format!("reading {}", path.display()))
}

fn load_embedding(path: &Path) -> Result<LabeledEmbedding> {
    read_embedding(open(path)?).with_context(|| format!("reading {}", path.display()))
}

fn load_vocab(path: &Path) -> Result<LabelVocab> {
    read_vocab(open(path)?).with_context(|| format!("reading {}", path.display()))
}

pub fn build(config: &PipelineConfig, out: &mut impl Write) -> Result<()> {
    let annotations = require(&config.annotations, "annotations")?;
    let embeddings = require(&config.embeddings, "embeddings")?;
    let vocab_path = config.vocab.clone().unwrap_or_else(|| embeddings.with_extension("vocab"));

    let records = load_records(annotations)?;
    let vocab = build_vocab(&records, config.min_count)?;
    let stats = count_cooccurrences(&records, &vocab)?;
    let pmi = compute_pmi(&stats, config.pmi_options())?;
    let n = vocab.len();
    let k = config.k.unwrap_or(n.min(DEFAULT_MAX_K));
    if k > n {
        return Err(Error::Argument(format!("k = {k} exceeds the vocabulary size {n}")).into());
    }
    let (spectrum, explained) = match config.solver {
        Solver::Dense => {
            let s = eigendecompose(&pmi)?;
            let ev = explained_variance(&s, k)?;
            (s, Some(ev))
        }
        Solver::Lanczos => {
            let opts = LanczosOptions {
                seed: config.seed,
                ..Default::default()
            };
            (eigendecompose_top_k(&pmi, k, opts)?, None)
        }
    };
    let embedding = build_embedding(&spectrum, k)?;
    let clamped = embedding.clamped_count();
    let zero_rows = embedding.zero_rows().len();

    let mut w = create(&vocab_path)?;
    write_vocab(&mut w, &vocab)?;
    w.flush()?;
    let file = LabeledEmbedding::new(vocab.labels().to_vec(), embedding)?;
    let mut w = create(embeddings)?;
    write_embedding(&mut w, &file)?;
    w.flush()?;

    let report = json!({
        "instances": stats.num_instances(),
        "n": n,
        "k": k,
        "explained_variance": explained,
        "clamped_count": clamped,
        "zero_rows": zero_rows,
    });
    writeln!(out, "{report}")?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Query {
    Nearest,
    EncodeDecode,
    Arithmetic,
}

pub fn query(config: &PipelineConfig, mode: Query, labels: &[String], minus: &[String], out: &mut impl Write) -> Result<()> {
    let file = load_embedding(require(&config.embeddings, "embeddings")?)?;
    let resolve = |names: &[String]| names.iter().map(|l| file.index_of(l)).collect::<labelsphere::Result<Vec<usize>>>();
    let plus = resolve(labels)?;
    let minus = resolve(minus)?;
    if mode != Query::Arithmetic && !minus.is_empty() {
        return Err(Error::Argument("--minus only applies to arithmetic mode".into()).into());
    }
    let e = &file.embedding;
    let ranked = match mode {
        Query::Nearest => {
            if plus.len() != 1 {
                return Err(Error::Argument("nearest mode takes exactly one --label".into()).into());
            }
            decode_excluding(&encode(&plus, e)?, e, config.p, &plus)?
        }
        Query::EncodeDecode => decode(&encode(&plus, e)?, e, config.p)?,
        Query::Arithmetic => arithmetic_query(&plus, &minus, e, config.p)?,
    };
    for &(i, proximity) in ranked.items() {
        writeln!(out, "{}", json!({ "label": file.labels[i], "proximity": proximity }))?;
    }
    Ok(())
}

fn class_weights(config: &PipelineConfig, scale: Option<f64>) -> Result<(Vec<String>, ClassWeights)> {
    let vocab = config.vocab.as_deref().map(load_vocab).transpose()?;
    let weights = config.weights.as_deref().map(load_vocab).transpose()?;
    let labels: Vec<String> = match (&vocab, &weights) {
        (Some(v), _) => v.labels().to_vec(),
        (None, Some(w)) => w.labels().to_vec(),
        (None, None) => return Err(Error::Argument("eval needs --vocab or --weights to define the classes".into()).into()),
    };
    let Some(w) = weights else {
        return Ok((labels.clone(), ClassWeights::uniform(labels.len())));
    };
    let mut missing: Vec<String> = labels.iter().filter(|l| w.index_of(l).is_none()).cloned().collect();
    let known: HashSet<&String> = labels.iter().collect();
    missing.extend(w.labels().iter().filter(|l| !known.contains(l)).cloned());
    if !missing.is_empty() {
        return Err(Error::Alignment(missing).into());
    }
    let freq: Vec<f64> = labels.iter().map(|l| w.counts()[w.index_of(l).unwrap()] as f64).collect();
    let n = labels.len() as f64;
    let cw = compute_class_weights(&freq, config.cap_min, config.cap_max, scale.unwrap_or(n))?;
    Ok((labels, cw))
}

pub fn eval(config: &PipelineConfig, predictions: &Path, truth: &Path, scale: Option<f64>, out: &mut impl Write) -> Result<()> {
    let (labels, weights) = class_weights(config, scale)?;
    let index: HashMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let truth_records = load_records(truth)?;
    let pred_records = load_records(predictions)?;

    let mut unknown = BTreeSet::new();
    let mut to_indices = |names: &[String]| -> Vec<usize> {
        names
            .iter()
            .filter_map(|l| {
                let i = index.get(l.as_str()).copied();
                if i.is_none() {
                    unknown.insert(l.clone());
                }
                i
            })
            .collect()
    };
    let mut seen = HashSet::new();
    let mut truth_sets = Vec::with_capacity(truth_records.len());
    for r in &truth_records {
        if !seen.insert(r.instance_id.as_str()) {
            return Err(Error::Argument(format!("instance `{}` repeated in the ground truth", r.instance_id)).into());
        }
        truth_sets.push(to_indices(&r.labels));
    }
    let mut ranked: HashMap<&str, Vec<usize>> = HashMap::new();
    for r in &pred_records {
        if !seen.contains(r.instance_id.as_str()) {
            return Err(Error::Argument(format!("prediction for instance `{}` absent from the ground truth", r.instance_id)).into());
        }
        let mut list = to_indices(&r.labels);
        list.truncate(MAP_CUTOFF);
        if ranked.insert(r.instance_id.as_str(), list).is_some() {
            return Err(Error::Argument(format!("instance `{}` repeated in the predictions", r.instance_id)).into());
        }
    }
    if !unknown.is_empty() {
        return Err(Error::Alignment(unknown.into_iter().collect()).into());
    }
    let preds = truth_records
        .iter()
        .map(|r| RankedPredictions::from_ranked_labels(ranked.get(r.instance_id.as_str()).map_or(&[][..], |v| v)))
        .collect::<labelsphere::Result<Vec<_>>>()?;
    let result = weighted_map_at_100(&preds, &truth_sets, &weights)?;
    writeln!(out, "{}", serde_json::to_string(&result)?)?;
    Ok(())
}

pub fn zero_shot(config: &PipelineConfig, label: &str, name: Option<&str>, output: &Path, out: &mut impl Write) -> Result<()> {
    let file = load_embedding(require(&config.embeddings, "embeddings")?)?;
    let records = load_records(require(&config.annotations, "annotations")?)?;
    let name = name.unwrap_or(label);
    if file.index_of(name).is_ok() {
        return Err(Error::Argument(format!("label `{name}` is already embedded; pick a new name with --as")).into());
    }
    let n = file.labels.len();
    let known: HashMap<&str, usize> = file.labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let sets: Vec<Vec<usize>> = records
        .iter()
        .map(|r| {
            let mut s: Vec<usize> = r.labels.iter().filter_map(|l| known.get(l.as_str()).copied()).collect();
            if r.labels.iter().any(|l| l == label) {
                s.push(n);
            }
            s
        })
        .collect();
    if !sets.iter().any(|s| s.last() == Some(&n)) {
        return Err(Error::DegenerateStatistics(format!("`{label}` does not occur in the annotations")).into());
    }
    let stats = CooccurrenceStats::from_label_sets(&sets, n + 1)?;
    let row = pmi_row(&stats, n, config.pmi_options())?;
    let (embedding, residual) = zero_shot_insert(&file.embedding, &row[..n])?;
    let mut labels = file.labels.clone();
    labels.push(name.to_string());
    let updated = LabeledEmbedding::new(labels, embedding)?;
    let mut w = create(output)?;
    write_embedding(&mut w, &updated)?;
    w.flush()?;
    writeln!(out, "{}", json!({ "label": name, "n": n + 1, "residual": residual }))?;
    Ok(())
}

pub fn train_demo(config: &PipelineConfig, out_dir: &Path, out: &mut impl Write) -> Result<()> {
    let demo = config.demo_config();
    let comparison = run_comparison(&demo)?;
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let write = |name: &str, f: &dyn Fn(&mut BufWriter<File>) -> labelsphere::Result<()>| -> Result<()> {
        let mut w = create(&out_dir.join(name))?;
        f(&mut w)?;
        w.flush()?;
        Ok(())
    };
    write("cosine.csv", &|w| write_history_csv(w, &comparison.cosine))?;
    write("logistic.csv", &|w| write_history_csv(w, &comparison.logistic))?;
    write("comparison.csv", &|w| {
        write_comparison_csv(w, &comparison.cosine, &comparison.logistic)
    })?;
    let summary = json!({
        "seed": demo.train.seed,
        "steps": demo.train.steps,
        "summary": comparison.summary,
        "cosine_faster": comparison.summary.cosine_faster(),
    });
    std::fs::write(out_dir.join("summary.json"), format!("{:#}\n", summary))?;
    std::fs::write(out_dir.join("config.toml"), config.to_toml()?)?;
    writeln!(out, "{summary}")?;
    Ok(())
}

pub fn stats(config: &PipelineConfig, out: &mut impl Write) -> Result<()> {
    let records = load_records(require(&config.annotations, "annotations")?)?;
    let vocab = build_vocab(&records, config.min_count)?;
    let stats = count_cooccurrences(&records, &vocab)?;
    let pmi = compute_pmi(&stats, config.pmi_options())?;
    let distinct: HashSet<&str> = records.iter().flat_map(|r| r.labels.iter().map(String::as_str)).collect();
    let assignments: u64 = stats.marginal().iter().sum();
    let report = json!({
        "records": records.len(),
        "instances": stats.num_instances(),
        "labels": vocab.len(),
        "dropped_labels": distinct.len() - vocab.len(),
        "label_assignments": assignments,
        "mean_labels_per_instance": assignments as f64 / stats.num_instances().max(1) as f64,
        "cooccurring_pairs": stats.pairs().filter(|((i, j), _)| i != j).count(),
        "pmi_nonzero_entries": pmi.nnz(),
        "pmi_mode": config.pmi_mode,
    });
    writeln!(out, "{report}")?;
    Ok(())
}
