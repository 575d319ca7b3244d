//! Independent reference implementations used as test oracles. Nothing here
//! calls into the library's numeric code paths.
#![allow(dead_code, clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `records` non-empty label sets over `n` labels, every label used at least once.
pub fn random_corpus(rng: &mut ChaCha8Rng, n: usize, records: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (0..records)
        .map(|_| {
            let size = rng.random_range(1..=n.min(5));
            let mut set: Vec<usize> = (0..size).map(|_| rng.random_range(0..n)).collect();
            set.sort_unstable();
            set.dedup();
            set
        })
        .collect();
    for label in 0..n {
        if !out.iter().any(|s| s.contains(&label)) {
            let slot = rng.random_range(0..out.len());
            out[slot].push(label);
            out[slot].sort_unstable();
        }
    }
    out
}

/// Dense PMI by full scan over the records for every pair.
pub fn pmi_oracle(records: &[Vec<usize>], n: usize, alpha: f64, positive: bool) -> Vec<Vec<f64>> {
    let d = records.len() as f64;
    let count = |pred: &dyn Fn(&Vec<usize>) -> bool| records.iter().filter(|r| pred(r)).count() as f64;
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let cij = count(&|r| r.contains(&i) && r.contains(&j));
            if cij == 0.0 {
                continue;
            }
            let ci = count(&|r| r.contains(&i));
            let cj = count(&|r| r.contains(&j));
            let pij = (cij + alpha) / (d + alpha);
            let pi = (ci + alpha) / (d + alpha);
            let pj = (cj + alpha) / (d + alpha);
            let v = (pij / (pi * pj)).ln();
            m[i][j] = if positive { v.max(0.0) } else { v };
        }
    }
    m
}

/// Cyclic Jacobi eigensolver; eigenvalues descending, eigenvectors as columns
/// (`vectors[row][col]`).
pub fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[y][y].partial_cmp(&a[x][x]).unwrap());
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = (0..n).map(|r| order.iter().map(|&c| v[r][c]).collect()).collect();
    (values, vectors)
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = rng.random::<f64>() * 2.0 - 1.0;
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    m
}

pub fn frobenius(a: &[Vec<f64>]) -> f64 {
    a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

fn plain_cosine(a: &[f64], b: &[f64]) -> f64 {
    let ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let aa: f64 = a.iter().map(|x| x * x).sum();
    let bb: f64 = b.iter().map(|x| x * x).sum();
    (ab / (aa * bb).sqrt()).clamp(-1.0, 1.0)
}

/// Scores every non-zero row and fully sorts by (proximity desc, index asc).
pub fn decode_oracle(v: &[f64], rows: &[Vec<f64>], p: usize, exclude: &[usize]) -> Vec<(usize, f64)> {
    let mut scored: Vec<(usize, f64)> = rows
        .iter()
        .enumerate()
        .filter(|(i, r)| !exclude.contains(i) && r.iter().any(|&x| x != 0.0))
        .map(|(i, r)| (i, plain_cosine(v, r)))
        .collect();
    // insertion sort: deliberately not the library's select + sort path
    for a in 1..scored.len() {
        let mut b = a;
        while b > 0 && {
            let (x, y) = (scored[b - 1], scored[b]);
            y.1 > x.1 || (y.1 == x.1 && y.0 < x.0)
        } {
            scored.swap(b - 1, b);
            b -= 1;
        }
    }
    scored.truncate(p);
    scored
}

/// Brute-force class-weighted MAP@100: recounts TP/FP for every (k, n).
pub fn map_oracle(predictions: &[Vec<usize>], truth: &[Vec<usize>], weights: &[f64]) -> (f64, Vec<f64>) {
    let n = weights.len();
    let mut per_class = vec![0.0; n];
    for (class, ap) in per_class.iter_mut().enumerate() {
        for k in 1..=100 {
            let mut tp = 0.0;
            let mut fp = 0.0;
            for (pred, t) in predictions.iter().zip(truth) {
                let hit = pred.iter().take(k).any(|&l| l == class);
                if hit {
                    if t.contains(&class) {
                        tp += 1.0;
                    } else {
                        fp += 1.0;
                    }
                }
            }
            let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
            *ap += precision / 100.0;
        }
    }
    let total: f64 = per_class.iter().zip(weights).map(|(a, w)| a * w).sum();
    (total / n as f64, per_class)
}

/// Central differences of `f` at `x` with step `h`.
pub fn finite_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut up = x.to_vec();
            let mut down = x.to_vec();
            up[i] += h;
            down[i] -= h;
            (f(&up) - f(&down)) / (2.0 * h)
        })
        .collect()
}

/// `‖a − b‖ / max(‖a‖, ‖b‖, floor)`.
pub fn relative_error(a: &[f64], b: &[f64], floor: f64) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / na.max(nb).max(floor)
}

/// Label ids of the concept-arithmetic construction.
pub struct Concept {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub distractor: usize,
    pub n: usize,
}

/// A corpus where `c` co-occurs with `a` and with `b`, `a` and `b` each have
/// a companion that also occurs on its own, a distractor lives in its own
/// group, and background labels are sprinkled everywhere.
pub fn concept_corpus(seed: u64) -> (Vec<Vec<usize>>, Concept) {
    let mut rng = rng(seed);
    let (a, b, c, distractor, a_friend, b_friend) = (0, 1, 2, 3, 4, 5);
    let background = 6..16;
    let n = 16;
    let mut sets = Vec::new();
    let mut push = |rng: &mut ChaCha8Rng, base: &[usize], times: usize| {
        for _ in 0..times {
            let mut s = base.to_vec();
            if rng.random_bool(0.3) {
                s.push(rng.random_range(background.clone()));
            }
            sets.push(s);
        }
    };
    let mut count = |lo: usize, hi: usize| rng.random_range(lo..=hi);
    let plan = [
        (vec![a], count(20, 40)),
        (vec![b], count(20, 40)),
        (vec![a, c], count(15, 30)),
        (vec![b, c], count(15, 30)),
        (vec![a, a_friend], count(10, 20)),
        (vec![b, b_friend], count(10, 20)),
        (vec![c], count(5, 15)),
        (vec![a_friend], count(20, 40)),
        (vec![b_friend], count(20, 40)),
        (vec![distractor], count(20, 40)),
        (vec![distractor, 6], count(10, 20)),
    ];
    for (base, times) in plan {
        push(&mut rng, &base, times);
    }
    for label in 6..16 {
        push(&mut rng, &[label], 5);
    }
    (sets, Concept { a, b, c, distractor, n })
}
