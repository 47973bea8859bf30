// SPDX-License-Identifier: Apache-2.0
//! Identifiability metrics: per-vector output entropy across a population,
//! matching distances between traces, and ROC/AUC over within- and
//! between-chip distance distributions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exec::Exec;
use crate::netlist::{AdderInput, OutputWord};
use crate::timedsim::CapturedTrace;

/// Shannon entropy (bits) of the empirical distribution of `outputs`.
pub fn vector_entropy(outputs: &[OutputWord]) -> f64 {
    if outputs.is_empty() {
        return 0.0;
    }
    entropy_of_counts(counts(outputs).values().copied(), outputs.len())
}

fn counts(outputs: &[OutputWord]) -> BTreeMap<OutputWord, usize> {
    let mut map = BTreeMap::new();
    for &w in outputs {
        *map.entry(w).or_insert(0) += 1;
    }
    map
}

fn entropy_of_counts(counts: impl Iterator<Item = usize>, total: usize) -> f64 {
    let n = total as f64;
    let h: f64 = counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    // a single outcome gives -1 * log2(1) = -0.0
    h.max(0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyRecord {
    pub vector_index: usize,
    pub input: AdderInput,
    pub distribution: BTreeMap<OutputWord, usize>,
    pub entropy_bits: f64,
}

impl EntropyRecord {
    pub fn distinct_outputs(&self) -> usize {
        self.distribution.len()
    }
}

fn check_common_vectors(traces: &[CapturedTrace]) -> Result<usize> {
    let first = traces.first().ok_or_else(|| invalid("no traces"))?;
    let n = first.entries.len();
    for t in traces {
        if t.entries.len() != n
            || t.entries
                .iter()
                .zip(&first.entries)
                .any(|(x, y)| x.input != y.input)
        {
            return Err(invalid(format!(
                "trace of chip {} trial {} uses a different vector sequence",
                t.chip_id, t.trial_id
            )));
        }
    }
    Ok(n)
}

/// One record per vector, from one trace per chip over a shared vector set.
pub fn entropy_records(traces: &[CapturedTrace]) -> Result<Vec<EntropyRecord>> {
    let n = check_common_vectors(traces)?;
    let mut column = Vec::with_capacity(traces.len());
    Ok((0..n)
        .map(|k| {
            column.clear();
            column.extend(traces.iter().map(|t| t.entries[k].captured));
            let distribution = counts(&column);
            let entropy_bits = entropy_of_counts(distribution.values().copied(), column.len());
            EntropyRecord {
                vector_index: k,
                input: traces[0].entries[k].input,
                distribution,
                entropy_bits,
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropySummary {
    pub vectors: usize,
    pub chips: usize,
    pub mean_entropy: f64,
    /// Fraction of vectors that produced one output on every chip.
    pub pct_deterministic_vectors: f64,
    /// Over vectors that made at least one chip err, the mean fraction of
    /// chips that erred. Zero when no vector caused an error.
    pub mean_error_chip_fraction: f64,
    pub error_causing_vectors: usize,
}

pub fn summarize_entropy(
    records: &[EntropyRecord],
    traces: &[CapturedTrace],
) -> Result<EntropySummary> {
    if records.is_empty() || traces.is_empty() {
        return Err(invalid(
            "entropy summary needs at least one vector and one trace",
        ));
    }
    let n = check_common_vectors(traces)?;
    if n != records.len() {
        return Err(invalid(format!(
            "{} records for {} trace vectors",
            records.len(),
            n
        )));
    }
    let mean_entropy = records.iter().map(|r| r.entropy_bits).sum::<f64>() / n as f64;
    let deterministic = records.iter().filter(|r| r.distinct_outputs() == 1).count();
    let mut error_vectors = 0usize;
    let mut fraction_sum = 0.0;
    for k in 0..n {
        let erring = traces.iter().filter(|t| t.entries[k].is_error()).count();
        if erring > 0 {
            error_vectors += 1;
            fraction_sum += erring as f64 / traces.len() as f64;
        }
    }
    Ok(EntropySummary {
        vectors: n,
        chips: traces.len(),
        mean_entropy,
        pct_deterministic_vectors: deterministic as f64 / n as f64,
        mean_error_chip_fraction: if error_vectors > 0 {
            fraction_sum / error_vectors as f64
        } else {
            0.0
        },
        error_causing_vectors: error_vectors,
    })
}

/// Entropy records and summary straight from per-chip capture columns:
/// `captured[c][k]` is chip `c`'s word for `inputs[k]`. Equivalent to
/// [`entropy_records`] plus [`summarize_entropy`] without building traces.
pub fn entropy_study(
    inputs: &[AdderInput],
    golden: &[OutputWord],
    captured: &[&[OutputWord]],
) -> Result<(Vec<EntropyRecord>, EntropySummary)> {
    let n = inputs.len();
    if n == 0 || captured.is_empty() {
        return Err(invalid(
            "entropy summary needs at least one vector and one trace",
        ));
    }
    if golden.len() != n || captured.iter().any(|c| c.len() != n) {
        return Err(invalid("capture columns and vector list differ in length"));
    }
    let chips = captured.len();
    let mut column = Vec::with_capacity(chips);
    let mut records = Vec::with_capacity(n);
    let (mut deterministic, mut error_vectors, mut fraction_sum, mut entropy_sum) =
        (0usize, 0usize, 0.0, 0.0);
    for k in 0..n {
        column.clear();
        column.extend(captured.iter().map(|c| c[k]));
        let distribution = counts(&column);
        let entropy_bits = entropy_of_counts(distribution.values().copied(), chips);
        let erring = column.iter().filter(|&&w| w != golden[k]).count();
        if erring > 0 {
            error_vectors += 1;
            fraction_sum += erring as f64 / chips as f64;
        }
        deterministic += usize::from(distribution.len() == 1);
        entropy_sum += entropy_bits;
        records.push(EntropyRecord {
            vector_index: k,
            input: inputs[k],
            distribution,
            entropy_bits,
        });
    }
    let summary = EntropySummary {
        vectors: n,
        chips,
        mean_entropy: entropy_sum / n as f64,
        pct_deterministic_vectors: deterministic as f64 / n as f64,
        mean_error_chip_fraction: if error_vectors > 0 {
            fraction_sum / error_vectors as f64
        } else {
            0.0
        },
        error_causing_vectors: error_vectors,
    };
    Ok((records, summary))
}

/// Number of vectors on which two traces captured different words.
pub fn matching_distance(a: &CapturedTrace, b: &CapturedTrace) -> Result<u64> {
    if a.entries.len() != b.entries.len() {
        return Err(invalid(format!(
            "traces have {} and {} vectors",
            a.entries.len(),
            b.entries.len()
        )));
    }
    let mut d = 0;
    for (x, y) in a.entries.iter().zip(&b.entries) {
        if x.input != y.input {
            return Err(invalid("traces were driven by different vector sequences"));
        }
        d += (x.captured != y.captured) as u64;
    }
    Ok(d)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairClass {
    Within,
    Between,
}

impl PairClass {
    pub fn name(self) -> &'static str {
        match self {
            PairClass::Within => "within",
            PairClass::Between => "between",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchingRecord {
    /// (chip, trial) of each side.
    pub pair: ((u32, u32), (u32, u32)),
    pub distance: u64,
    pub class: PairClass,
}

/// Within-class pairs: every pair of a chip's first `trials_per_chip`
/// trials. Between-class pairs: the first trials of every two distinct
/// chips. Chips are ordered by id, trials by trial id.
pub fn pair_records(
    traces: &[CapturedTrace],
    trials_per_chip: usize,
    exec: Exec,
) -> Result<Vec<MatchingRecord>> {
    if trials_per_chip < 2 {
        return Err(invalid(
            "within-class pairs need at least 2 trials per chip",
        ));
    }
    let mut by_chip: BTreeMap<u32, Vec<&CapturedTrace>> = BTreeMap::new();
    for t in traces {
        by_chip.entry(t.chip_id).or_default().push(t);
    }
    for (chip, list) in by_chip.iter_mut() {
        list.sort_by_key(|t| t.trial_id);
        if list.len() < trials_per_chip {
            return Err(invalid(format!(
                "chip {chip} has {} trials, {trials_per_chip} required",
                list.len()
            )));
        }
        list.truncate(trials_per_chip);
    }
    let chips: Vec<&Vec<&CapturedTrace>> = by_chip.values().collect();
    let mut jobs: Vec<(&CapturedTrace, &CapturedTrace, PairClass)> = Vec::new();
    for list in &chips {
        for i in 0..list.len() {
            for j in i + 1..list.len() {
                jobs.push((list[i], list[j], PairClass::Within));
            }
        }
    }
    for i in 0..chips.len() {
        for j in i + 1..chips.len() {
            jobs.push((chips[i][0], chips[j][0], PairClass::Between));
        }
    }
    exec.map(&jobs, |&(a, b, class)| {
        Ok(MatchingRecord {
            pair: ((a.chip_id, a.trial_id), (b.chip_id, b.trial_id)),
            distance: matching_distance(a, b)?,
            class,
        })
    })
    .into_iter()
    .collect()
}

pub fn pair_distances(
    traces: &[CapturedTrace],
    trials_per_chip: usize,
    exec: Exec,
) -> Result<(Vec<u64>, Vec<u64>)> {
    let records = pair_records(traces, trials_per_chip, exec)?;
    let (within, between): (Vec<_>, Vec<_>) = records
        .into_iter()
        .partition(|r| r.class == PairClass::Within);
    Ok((
        within.into_iter().map(|r| r.distance).collect(),
        between.into_iter().map(|r| r.distance).collect(),
    ))
}

/// `(class, distance, count)` rows, within-class first, distances ascending.
pub fn histogram(within: &[u64], between: &[u64]) -> Vec<(PairClass, u64, usize)> {
    let mut rows = Vec::new();
    for (class, list) in [(PairClass::Within, within), (PairClass::Between, between)] {
        let mut map = BTreeMap::new();
        for &d in list {
            *map.entry(d).or_insert(0usize) += 1;
        }
        rows.extend(map.into_iter().map(|(d, c)| (class, d, c)));
    }
    rows
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// Accept as the same chip when distance <= threshold.
    pub threshold: i64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// Sweeps the threshold over -1 and every distinct observed distance.
/// TPR counts within-class pairs at or below the threshold, FPR counts
/// between-class pairs. AUC is the trapezoidal area under the points.
pub fn build_roc(within: &[u64], between: &[u64]) -> Result<RocCurve> {
    if within.is_empty() || between.is_empty() {
        return Err(invalid(
            "ROC needs at least one within-class and one between-class distance",
        ));
    }
    let mut w = within.to_vec();
    let mut b = between.to_vec();
    w.sort_unstable();
    b.sort_unstable();
    let mut thresholds: Vec<u64> = w.iter().chain(&b).copied().collect();
    thresholds.sort_unstable();
    thresholds.dedup();

    let (nw, nb) = (w.len() as f64, b.len() as f64);
    let mut points = vec![RocPoint {
        threshold: -1,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut iw, mut ib) = (0, 0);
    for &t in &thresholds {
        while iw < w.len() && w[iw] <= t {
            iw += 1;
        }
        while ib < b.len() && b[ib] <= t {
            ib += 1;
        }
        points.push(RocPoint {
            threshold: t as i64,
            fpr: ib as f64 / nb,
            tpr: iw as f64 / nw,
        });
    }
    let auc = points
        .windows(2)
        .map(|p| (p[1].fpr - p[0].fpr) * (p[1].tpr + p[0].tpr) * 0.5)
        .sum();
    Ok(RocCurve { points, auc })
}
