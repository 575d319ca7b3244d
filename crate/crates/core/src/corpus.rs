//! Annotation ingestion, label vocabulary and co-occurrence counting.

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::par;

/// One line of an annotation file before vocabulary resolution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    pub instance_id: String,
    pub labels: Vec<String>,
}

/// Streams `instance-id<TAB>label1,label2,...` records from `source`.
///
/// Labels are trimmed and empty fragments discarded, so `"id\t"` yields a
/// record with no labels. Blank lines are skipped.
pub fn load_annotations<R: BufRead>(source: R) -> Annotations<R> {
    Annotations {
        source,
        line: 0,
        buf: Vec::new(),
    }
}

pub struct Annotations<R> {
    source: R,
    line: usize,
    buf: Vec<u8>,
}

impl<R: BufRead> Iterator for Annotations<R> {
    type Item = Result<RawRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.source.read_until(b'\n', &mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e.into())),
            }
            self.line += 1;
            let line = self.line;
            let text = match std::str::from_utf8(&self.buf) {
                Ok(t) => t.trim_end_matches(['\n', '\r']),
                Err(_) => return Some(Err(Error::Encoding { line })),
            };
            if text.trim().is_empty() {
                continue;
            }
            return Some(parse_line(text, line));
        }
    }
}

fn parse_line(text: &str, line: usize) -> Result<RawRecord> {
    let (id, labels) = text.split_once('\t').ok_or_else(|| Error::Parse {
        line,
        message: "expected `instance-id<TAB>labels`".to_string(),
    })?;
    let labels = labels
        .split(',')
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect();
    Ok(RawRecord {
        instance_id: id.trim().to_string(),
        labels,
    })
}

/// Reads every record, failing on the first malformed line.
pub fn read_annotations<R: BufRead>(source: R) -> Result<Vec<RawRecord>> {
    load_annotations(source).collect()
}

/// Bidirectional label/index mapping with per-label instance counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVocab {
    labels: Vec<String>,
    index_of: HashMap<String, usize>,
    counts: Vec<u64>,
}

impl LabelVocab {
    /// Builds a vocabulary from labels already in index order.
    pub fn from_parts(labels: Vec<String>, counts: Vec<u64>) -> Result<Self> {
        if labels.len() != counts.len() {
            return Err(Error::Argument(format!("{} labels but {} counts", labels.len(), counts.len())));
        }
        let mut index_of = HashMap::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            if index_of.insert(label.clone(), i).is_some() {
                return Err(Error::Argument(format!("duplicate label `{label}`")));
            }
        }
        Ok(Self { labels, index_of, counts })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn label(&self, index: usize) -> Option<&str> {
        self.labels.get(index).map(String::as_str)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index_of.get(label).copied()
    }

    pub fn count(&self, index: usize) -> Option<u64> {
        self.counts.get(index).copied()
    }

    /// Resolves a record's labels to a sorted, deduplicated index set.
    /// Labels outside the vocabulary are dropped.
    pub fn resolve(&self, record: &RawRecord) -> AnnotationRecord {
        let mut indices: Vec<usize> = record.labels.iter().filter_map(|l| self.index_of(l)).collect();
        indices.sort_unstable();
        indices.dedup();
        AnnotationRecord {
            instance_id: record.instance_id.clone(),
            label_indices: indices,
        }
    }
}

/// Keeps labels present in at least `min_count` distinct instances. Index
/// order is descending count, ties broken lexicographically.
pub fn build_vocab(records: &[RawRecord], min_count: u64) -> Result<LabelVocab> {
    if min_count == 0 {
        return Err(Error::Argument("min_count must be at least 1".into()));
    }
    if records.is_empty() {
        return Err(Error::Argument("no annotation records".into()));
    }
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for record in records {
        if record.labels.is_empty() {
            return Err(Error::EmptyLabelSet(record.instance_id.clone()));
        }
        let mut seen: Vec<&str> = record.labels.iter().map(String::as_str).collect();
        seen.sort_unstable();
        seen.dedup();
        for label in seen {
            *counts.entry(label).or_default() += 1;
        }
    }
    let mut kept: Vec<(&str, u64)> = counts.into_iter().filter(|&(_, c)| c >= min_count).collect();
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary { min_count });
    }
    kept.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let (labels, counts) = kept.into_iter().map(|(l, c)| (l.to_string(), c)).unzip();
    LabelVocab::from_parts(labels, counts)
}

/// A record resolved against a vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationRecord {
    pub instance_id: String,
    /// Sorted, no duplicates.
    pub label_indices: Vec<usize>,
}

/// Instance count, marginal counts `c_i` and joint counts `c_ij` (i ≤ j).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CooccurrenceStats {
    num_instances: u64,
    marginal: Vec<u64>,
    pairs: BTreeMap<(usize, usize), u64>,
}

impl CooccurrenceStats {
    pub fn empty(n: usize) -> Self {
        Self {
            num_instances: 0,
            marginal: vec![0; n],
            pairs: BTreeMap::new(),
        }
    }

    /// Counts co-occurrences over label-index sets. Duplicate indices within
    /// a set are collapsed and empty sets are ignored.
    pub fn from_label_sets<S: AsRef<[usize]> + Sync>(sets: &[S], n: usize) -> Result<Self> {
        const SHARD: usize = 1024;
        let partials = par::map_chunks(sets, SHARD, |shard| {
            let mut stats = CooccurrenceStats::empty(n);
            for set in shard {
                stats.add_set(set.as_ref())?;
            }
            Ok::<_, Error>(stats)
        });
        let mut total = CooccurrenceStats::empty(n);
        for partial in partials {
            total.merge(&partial?)?;
        }
        Ok(total)
    }

    fn add_set(&mut self, set: &[usize]) -> Result<()> {
        let n = self.marginal.len();
        let mut set = set.to_vec();
        set.sort_unstable();
        set.dedup();
        if set.is_empty() {
            return Ok(());
        }
        if let Some(&bad) = set.iter().find(|&&i| i >= n) {
            return Err(Error::Argument(format!("label index {bad} out of range for N={n}")));
        }
        self.num_instances += 1;
        for (a, &i) in set.iter().enumerate() {
            self.marginal[i] += 1;
            for &j in &set[a..] {
                *self.pairs.entry((i, j)).or_default() += 1;
            }
        }
        Ok(())
    }

    /// Adds another set of counts over the same label space.
    pub fn merge(&mut self, other: &CooccurrenceStats) -> Result<()> {
        if other.marginal.len() != self.marginal.len() {
            return Err(Error::Argument(format!(
                "cannot merge stats of dimension {} into {}",
                other.marginal.len(),
                self.marginal.len()
            )));
        }
        self.num_instances += other.num_instances;
        for (m, o) in self.marginal.iter_mut().zip(&other.marginal) {
            *m += o;
        }
        for (&key, &count) in &other.pairs {
            *self.pairs.entry(key).or_default() += count;
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.marginal.len()
    }

    pub fn num_instances(&self) -> u64 {
        self.num_instances
    }

    pub fn marginal(&self) -> &[u64] {
        &self.marginal
    }

    /// Joint count for an unordered pair; `pair(i, i)` equals `marginal[i]`.
    pub fn pair(&self, i: usize, j: usize) -> u64 {
        let key = if i <= j { (i, j) } else { (j, i) };
        self.pairs.get(&key).copied().unwrap_or(0)
    }

    /// Observed pairs in ascending `(i, j)` order with `i ≤ j`.
    pub fn pairs(&self) -> impl Iterator<Item = ((usize, usize), u64)> + '_ {
        self.pairs.iter().map(|(&k, &c)| (k, c))
    }

    pub fn num_pairs(&self) -> usize {
        self.pairs.len()
    }
}

/// Counts co-occurrences of vocabulary labels. Labels missing from `vocab`
/// are dropped; instances left without labels are not counted.
pub fn count_cooccurrences(records: &[RawRecord], vocab: &LabelVocab) -> Result<CooccurrenceStats> {
    let sets: Vec<Vec<usize>> = records.iter().map(|r| vocab.resolve(r).label_indices).collect();
    CooccurrenceStats::from_label_sets(&sets, vocab.len())
}
