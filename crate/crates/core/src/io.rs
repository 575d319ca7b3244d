//! Text file formats. Floats are written with 17 significant digits so every
//! value round-trips exactly.

use std::io::{BufRead, Write};

use crate::corpus::LabelVocab;
use crate::error::{Error, Result};
use crate::factorize::EmbeddingMatrix;
use crate::pmi::PmiMatrix;
use crate::trainer::TrainHistory;

pub const EMBEDDING_MAGIC: &str = "labelsphere v1";

/// 17 significant digits in scientific notation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.parse::<f64>().map_err(|_| Error::Parse {
        line,
        message: format!("`{s}` is not a number"),
    })
}

fn parse_usize(s: &str, line: usize) -> Result<usize> {
    s.parse::<usize>().map_err(|_| Error::Parse {
        line,
        message: format!("`{s}` is not a non-negative integer"),
    })
}

fn check_label(label: &str) -> Result<()> {
    if label.is_empty() || label.contains(['\t', '\n', '\r', ',']) || label.trim() != label {
        return Err(Error::Argument(format!(
            "label {label:?} cannot be written to a tab-separated file"
        )));
    }
    Ok(())
}

fn lines<R: BufRead>(reader: R) -> impl Iterator<Item = (usize, Result<String>)> {
    reader.split(b'\n').enumerate().map(|(i, raw)| {
        let line = i + 1;
        let text = raw.map_err(Error::from).and_then(|bytes| {
            String::from_utf8(bytes)
                .map(|s| s.trim_end_matches('\r').to_string())
                .map_err(|_| Error::Encoding { line })
        });
        (line, text)
    })
}

/// `label<TAB>index<TAB>count`, one line per label in index order.
pub fn write_vocab<W: Write>(mut out: W, vocab: &LabelVocab) -> Result<()> {
    for (i, label) in vocab.labels().iter().enumerate() {
        check_label(label)?;
        writeln!(out, "{label}\t{i}\t{}", vocab.counts()[i])?;
    }
    Ok(())
}

pub fn read_vocab<R: BufRead>(reader: R) -> Result<LabelVocab> {
    let mut labels = Vec::new();
    let mut counts = Vec::new();
    for (line, text) in lines(reader) {
        let text = text?;
        if text.is_empty() {
            continue;
        }
        let fields: Vec<&str> = text.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line,
                message: "expected `label<TAB>index<TAB>count`".into(),
            });
        }
        let index = parse_usize(fields[1], line)?;
        if index != labels.len() {
            return Err(Error::Parse {
                line,
                message: format!("index {index} out of sequence, expected {}", labels.len()),
            });
        }
        labels.push(fields[0].to_string());
        counts.push(parse_usize(fields[2], line)? as u64);
    }
    LabelVocab::from_parts(labels, counts)
}

/// `i<TAB>j<TAB>value` with `i ≤ j`.
pub fn write_pmi<W: Write>(mut out: W, m: &PmiMatrix) -> Result<()> {
    for &(i, j, v) in m.entries() {
        writeln!(out, "{i}\t{j}\t{}", fmt_f64(v))?;
    }
    Ok(())
}

/// Class embeddings together with their label names.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledEmbedding {
    pub labels: Vec<String>,
    pub embedding: EmbeddingMatrix,
}

impl LabeledEmbedding {
    pub fn new(labels: Vec<String>, embedding: EmbeddingMatrix) -> Result<Self> {
        if labels.len() != embedding.n() {
            return Err(Error::Argument(format!(
                "{} labels for {} embedding rows",
                labels.len(),
                embedding.n()
            )));
        }
        let mut sorted: Vec<&String> = labels.iter().collect();
        sorted.sort();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Argument(format!("duplicate label `{}`", w[0])));
        }
        Ok(Self { labels, embedding })
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }
}

/// Header `labelsphere v1 N=<n> K=<k>`, one `label<TAB>f1 ... fk` line per
/// class, then `eigenvalues<TAB>λ1 ... λk`.
pub fn write_embedding<W: Write>(mut out: W, file: &LabeledEmbedding) -> Result<()> {
    let e = &file.embedding;
    writeln!(out, "{EMBEDDING_MAGIC} N={} K={}", e.n(), e.k())?;
    for (label, row) in file.labels.iter().zip(e.rows()) {
        check_label(label)?;
        let values: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        writeln!(out, "{label}\t{}", values.join(" "))?;
    }
    let values: Vec<String> = e.retained_eigenvalues().iter().map(|&v| fmt_f64(v)).collect();
    writeln!(out, "eigenvalues\t{}", values.join(" "))?;
    Ok(())
}

pub fn read_embedding<R: BufRead>(reader: R) -> Result<LabeledEmbedding> {
    let mut it = lines(reader);
    let (_, header) = it.next().ok_or(Error::Parse {
        line: 1,
        message: "empty embedding file".into(),
    })?;
    let header = header?;
    let (n, k) = parse_header(&header).ok_or_else(|| Error::Parse {
        line: 1,
        message: format!("expected `{EMBEDDING_MAGIC} N=<n> K=<k>`"),
    })?;
    let parse_row = |text: &str, line: usize| -> Result<(String, Vec<f64>)> {
        let (label, values) = text.split_once('\t').ok_or(Error::Parse {
            line,
            message: "expected `label<TAB>values`".into(),
        })?;
        let values = values
            .split(' ')
            .filter(|s| !s.is_empty())
            .map(|s| parse_f64(s, line))
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != k {
            return Err(Error::Parse {
                line,
                message: format!("expected {k} values, found {}", values.len()),
            });
        }
        Ok((label.to_string(), values))
    };
    let mut labels = Vec::with_capacity(n);
    let mut rows = Vec::with_capacity(n * k);
    for _ in 0..n {
        let (line, text) = it.next().ok_or(Error::Parse {
            line: labels.len() + 2,
            message: format!("expected {n} embedding rows"),
        })?;
        let (label, values) = parse_row(&text?, line)?;
        labels.push(label);
        rows.extend(values);
    }
    let (line, footer) = it.next().ok_or(Error::Parse {
        line: n + 2,
        message: "missing eigenvalue footer".into(),
    })?;
    let (tag, eigenvalues) = parse_row(&footer?, line)?;
    if tag != "eigenvalues" {
        return Err(Error::Parse {
            line,
            message: "expected `eigenvalues<TAB>...` footer".into(),
        });
    }
    for (line, rest) in it {
        if !rest?.trim().is_empty() {
            return Err(Error::Parse {
                line,
                message: "unexpected content after the eigenvalue footer".into(),
            });
        }
    }
    let embedding = EmbeddingMatrix::from_rows(n, k, rows, eigenvalues, 0)?;
    LabeledEmbedding::new(labels, embedding)
}

fn parse_header(header: &str) -> Option<(usize, usize)> {
    let rest = header.strip_prefix(EMBEDDING_MAGIC)?.trim();
    let mut parts = rest.split(' ');
    let n = parts.next()?.strip_prefix("N=")?.parse().ok()?;
    let k = parts.next()?.strip_prefix("K=")?.parse().ok()?;
    parts.next().is_none().then_some((n, k))
}

/// CSV with header `step,loss,weighted_map`.
pub fn write_history_csv<W: Write>(mut out: W, history: &TrainHistory) -> Result<()> {
    writeln!(out, "step,loss,weighted_map")?;
    for r in &history.records {
        writeln!(out, "{},{},{}", r.step, fmt_f64(r.loss), fmt_f64(r.weighted_map))?;
    }
    Ok(())
}

/// Both arms side by side, one row per evaluated step.
pub fn write_comparison_csv<W: Write>(mut out: W, cosine: &TrainHistory, logistic: &TrainHistory) -> Result<()> {
    writeln!(out, "step,cosine_loss,cosine_map,logistic_loss,logistic_map")?;
    for (c, l) in cosine.records.iter().zip(&logistic.records) {
        if c.step != l.step {
            return Err(Error::Argument(format!("histories diverge at steps {} and {}", c.step, l.step)));
        }
        writeln!(
            out,
            "{},{},{},{},{}",
            c.step,
            fmt_f64(c.loss),
            fmt_f64(c.weighted_map),
            fmt_f64(l.loss),
            fmt_f64(l.weighted_map)
        )?;
    }
    Ok(())
}
