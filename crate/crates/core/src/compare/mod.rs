//! Cross-language cluster comparison.
//!
//! Each cluster is reduced to the set of its top keywords and compared with
//! every cluster of the other corpus by binary cosine similarity,
//! `|A ∩ B| / sqrt(|A| |B|)`. With 20 keywords on both sides every score
//! is a multiple of 1/20, so all threshold comparisons are done exactly on
//! the integer overlap counts.

mod jargon;

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ratio::Ratio;
use crate::topic::TopicCluster;

pub use jargon::{extract_jargon, write_jargon_report, ClusterRef, JargonCandidate};

pub const DEFAULT_HIGH_THRESHOLD: f64 = 0.35;
pub const DEFAULT_LOW_THRESHOLD: f64 = 0.2;
/// Histogram buckets are multiples of 1/HISTOGRAM_STEPS.
pub const HISTOGRAM_STEPS: u32 = 20;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CompareError {
    #[error("keyword set is empty")]
    EmptyKeywords,
    #[error("no {0} clusters to compare")]
    EmptySide(&'static str),
    #[error("{language} cluster {cluster_id} was dropped by the dictionary filter")]
    NotKept { language: String, cluster_id: usize },
    #[error("invalid thresholds: low {low} must not exceed high {high}")]
    InvalidThresholds { low: f64, high: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Relatedness {
    HighlyRelated,
    SomewhatRelated,
    NotRelated,
}

impl fmt::Display for Relatedness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relatedness::HighlyRelated => "Highly",
            Relatedness::SomewhatRelated => "Somewhat",
            Relatedness::NotRelated => "Not",
        })
    }
}

/// Relatedness cut-offs: above `high` is highly related, below `low` is
/// not related, anything in between (inclusive) is somewhat related.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub high: f64,
    pub low: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            high: DEFAULT_HIGH_THRESHOLD,
            low: DEFAULT_LOW_THRESHOLD,
        }
    }
}

impl Thresholds {
    fn exact(&self) -> Result<(Ratio, Ratio), CompareError> {
        let ok = self.low.is_finite() && self.high.is_finite() && 0.0 <= self.low && self.low <= self.high;
        if !ok {
            return Err(CompareError::InvalidThresholds {
                low: self.low,
                high: self.high,
            });
        }
        Ok((Ratio::from_f64(self.high), Ratio::from_f64(self.low)))
    }
}

/// Binary cosine similarity of two keyword sets, kept as integer counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordScore {
    pub shared: u32,
    pub len_a: u32,
    pub len_b: u32,
}

impl KeywordScore {
    pub fn value(&self) -> f64 {
        self.shared as f64 / (self.len_a as f64 * self.len_b as f64).sqrt()
    }

    /// Exact comparison of two scores.
    pub fn cmp_score(&self, other: &Self) -> Ordering {
        let lhs = (self.shared as u128).pow(2) * other.len_a as u128 * other.len_b as u128;
        let rhs = (other.shared as u128).pow(2) * self.len_a as u128 * self.len_b as u128;
        lhs.cmp(&rhs)
    }

    /// Nearest multiple of 1/20, as an integer step count.
    pub fn bucket(&self) -> u32 {
        (self.value() * HISTOGRAM_STEPS as f64).round() as u32
    }

    fn level(&self, high: Ratio, low: Ratio) -> Relatedness {
        let (a, b) = (self.len_a as u64, self.len_b as u64);
        if high.cmp_cosine(self.shared as u64, a, b) == Ordering::Greater {
            Relatedness::HighlyRelated
        } else if low.cmp_cosine(self.shared as u64, a, b) != Ordering::Less {
            Relatedness::SomewhatRelated
        } else {
            Relatedness::NotRelated
        }
    }

    pub fn classify(&self, thresholds: &Thresholds) -> Result<Relatedness, CompareError> {
        let (high, low) = thresholds.exact()?;
        Ok(self.level(high, low))
    }
}

pub fn keyword_cosine<'a, A, B>(a: A, b: B) -> Result<KeywordScore, CompareError>
where
    A: IntoIterator<Item = &'a str>,
    B: IntoIterator<Item = &'a str>,
{
    let a: HashSet<&str> = a.into_iter().collect();
    let b: HashSet<&str> = b.into_iter().collect();
    if a.is_empty() || b.is_empty() {
        return Err(CompareError::EmptyKeywords);
    }
    Ok(KeywordScore {
        shared: a.intersection(&b).count() as u32,
        len_a: a.len() as u32,
        len_b: b.len() as u32,
    })
}

/// Relatedness level of a score in [0, 1] under the default thresholds.
pub fn classify(score: f64) -> Relatedness {
    classify_with(score, &Thresholds::default()).expect("default thresholds are valid")
}

pub fn classify_with(score: f64, thresholds: &Thresholds) -> Result<Relatedness, CompareError> {
    let (high, low) = thresholds.exact()?;
    let s = Ratio::from_f64(score.clamp(0.0, 1.0));
    Ok(if s > high {
        Relatedness::HighlyRelated
    } else if s >= low {
        Relatedness::SomewhatRelated
    } else {
        Relatedness::NotRelated
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityRecord {
    pub russian_cluster_id: usize,
    pub english_cluster_id: usize,
    pub score: KeywordScore,
    pub level: Relatedness,
}

impl SimilarityRecord {
    pub fn value(&self) -> f64 {
        self.score.value()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    /// Score bucket in steps of 1/20.
    pub bucket: u32,
    pub level: Relatedness,
    pub pair_count: usize,
    /// Russian clusters whose best English match lands in this bucket.
    pub russian_max: usize,
    pub english_max: usize,
}

impl HistogramRow {
    pub fn score(&self) -> f64 {
        self.bucket as f64 / HISTOGRAM_STEPS as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelatednessReport {
    pub thresholds: Thresholds,
    pub russian_count: usize,
    pub english_count: usize,
    pub records: Vec<SimilarityRecord>,
    /// Highly related (russian id, english id) pairs.
    pub common_topics: Vec<(usize, usize)>,
    /// Clusters whose best counterpart is only somewhat related.
    pub somewhat_russian: Vec<usize>,
    pub somewhat_english: Vec<usize>,
    /// Pockets of knowledge: clusters not related to any counterpart.
    pub unique_russian: Vec<usize>,
    pub unique_english: Vec<usize>,
    /// Rows in descending score order, only buckets that occur.
    pub histogram: Vec<HistogramRow>,
}

fn check_kept(clusters: &[TopicCluster], side: &'static str) -> Result<(), CompareError> {
    if clusters.is_empty() {
        return Err(CompareError::EmptySide(side));
    }
    if let Some(c) = clusters.iter().find(|c| !c.kept) {
        return Err(CompareError::NotKept {
            language: side.to_string(),
            cluster_id: c.cluster_id,
        });
    }
    if clusters.iter().any(|c| c.keywords.is_empty()) {
        return Err(CompareError::EmptyKeywords);
    }
    Ok(())
}

/// Scores every Russian cluster against every English cluster.
pub fn compare_all(
    russian: &[TopicCluster],
    english: &[TopicCluster],
    thresholds: &Thresholds,
) -> Result<RelatednessReport, CompareError> {
    check_kept(russian, "russian")?;
    check_kept(english, "english")?;
    let (high, low) = thresholds.exact()?;

    let records: Vec<SimilarityRecord> = russian
        .par_iter()
        .flat_map_iter(|ru| {
            english.iter().map(move |en| {
                let score = keyword_cosine(ru.keyword_words(), en.keyword_words())
                    .expect("keyword sets checked non-empty");
                SimilarityRecord {
                    russian_cluster_id: ru.cluster_id,
                    english_cluster_id: en.cluster_id,
                    level: score.level(high, low),
                    score,
                }
            })
        })
        .collect();

    let e = english.len();
    let best = |scores: &mut dyn Iterator<Item = &SimilarityRecord>| -> KeywordScore {
        scores
            .map(|r| r.score)
            .max_by(KeywordScore::cmp_score)
            .expect("non-empty side")
    };
    let ru_best: Vec<KeywordScore> = (0..russian.len())
        .map(|i| best(&mut records[i * e..(i + 1) * e].iter()))
        .collect();
    let en_best: Vec<KeywordScore> = (0..e)
        .map(|j| best(&mut records.iter().skip(j).step_by(e)))
        .collect();

    let common_topics = records
        .iter()
        .filter(|r| r.level == Relatedness::HighlyRelated)
        .map(|r| (r.russian_cluster_id, r.english_cluster_id))
        .collect();

    let split = |clusters: &[TopicCluster], maxima: &[KeywordScore], level: Relatedness| -> Vec<usize> {
        clusters
            .iter()
            .zip(maxima)
            .filter(|(_, m)| m.level(high, low) == level)
            .map(|(c, _)| c.cluster_id)
            .collect()
    };

    let mut buckets: BTreeMap<u32, (usize, usize, usize)> = BTreeMap::new();
    for r in &records {
        buckets.entry(r.score.bucket()).or_default().0 += 1;
    }
    for m in &ru_best {
        buckets.entry(m.bucket()).or_default().1 += 1;
    }
    for m in &en_best {
        buckets.entry(m.bucket()).or_default().2 += 1;
    }
    let histogram = buckets
        .into_iter()
        .rev()
        .map(|(bucket, (pair_count, russian_max, english_max))| HistogramRow {
            bucket,
            level: KeywordScore {
                shared: bucket,
                len_a: HISTOGRAM_STEPS,
                len_b: HISTOGRAM_STEPS,
            }
            .level(high, low),
            pair_count,
            russian_max,
            english_max,
        })
        .collect();

    Ok(RelatednessReport {
        thresholds: *thresholds,
        russian_count: russian.len(),
        english_count: english.len(),
        common_topics,
        somewhat_russian: split(russian, &ru_best, Relatedness::SomewhatRelated),
        somewhat_english: split(english, &en_best, Relatedness::SomewhatRelated),
        unique_russian: split(russian, &ru_best, Relatedness::NotRelated),
        unique_english: split(english, &en_best, Relatedness::NotRelated),
        histogram,
        records,
    })
}

impl RelatednessReport {
    pub fn write_pairs<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "russian_cluster\tenglish_cluster\tshared\tscore\tlevel")?;
        for r in &self.records {
            writeln!(
                w,
                "{}\t{}\t{}\t{:.4}\t{}",
                r.russian_cluster_id,
                r.english_cluster_id,
                r.score.shared,
                r.value(),
                r.level
            )?;
        }
        Ok(())
    }

    pub fn write_histogram<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "label\ts\ttotal_pairs\tmax_score_russian\tmax_score_english")?;
        for row in &self.histogram {
            writeln!(
                w,
                "{}\t{:.2}\t{}\t{}\t{}",
                row.level,
                row.score(),
                row.pair_count,
                row.russian_max,
                row.english_max
            )?;
        }
        Ok(())
    }

    pub fn write_topics<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "kind\trussian_cluster\tenglish_cluster")?;
        for (ru, en) in &self.common_topics {
            writeln!(w, "common\t{ru}\t{en}")?;
        }
        for ru in &self.unique_russian {
            writeln!(w, "unique\t{ru}\t")?;
        }
        for en in &self.unique_english {
            writeln!(w, "unique\t\t{en}")?;
        }
        Ok(())
    }

    /// Per-level totals: (pairs, russian clusters at max, english clusters at max).
    pub fn level_totals(&self) -> BTreeMap<Relatedness, (usize, usize, usize)> {
        let mut out = BTreeMap::new();
        for row in &self.histogram {
            let t = out.entry(row.level).or_insert((0, 0, 0));
            t.0 += row.pair_count;
            t.1 += row.russian_max;
            t.2 += row.english_max;
        }
        out
    }
}
