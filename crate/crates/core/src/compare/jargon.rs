//! Dark-jargon candidates: cluster keywords that no supplied glossary
//! knows, together with the keywords they co-occur with.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::ingest::Language;
use crate::topic::TopicCluster;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClusterRef {
    pub language: Language,
    pub cluster_id: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JargonCandidate {
    pub term: String,
    pub source_clusters: Vec<ClusterRef>,
    /// Other keywords of the source clusters, first occurrence order.
    pub context_keywords: Vec<String>,
}

/// Pools the keywords of all kept clusters and keeps those absent from
/// every glossary. Ordinary dictionary words are not removed, since a
/// neologism can share its spelling with one. Candidates come back sorted
/// by term.
pub fn extract_jargon(clusters: &[TopicCluster], glossaries: &[HashSet<String>]) -> Vec<JargonCandidate> {
    let known = |w: &str| glossaries.iter().any(|g| g.contains(w));
    let mut pool: BTreeMap<&str, Vec<&TopicCluster>> = BTreeMap::new();
    for c in clusters.iter().filter(|c| c.kept) {
        for w in c.keyword_words() {
            let hosts = pool.entry(w).or_default();
            if !hosts.iter().any(|h| h.language == c.language && h.cluster_id == c.cluster_id) {
                hosts.push(c);
            }
        }
    }
    pool.into_iter()
        .filter(|(term, _)| !known(term))
        .map(|(term, hosts)| {
            let mut seen = HashSet::new();
            let context_keywords = hosts
                .iter()
                .flat_map(|c| c.keyword_words())
                .filter(|w| *w != term && seen.insert(*w))
                .map(str::to_string)
                .collect();
            let mut source_clusters: Vec<ClusterRef> = hosts
                .iter()
                .map(|c| ClusterRef {
                    language: c.language,
                    cluster_id: c.cluster_id,
                })
                .collect();
            source_clusters.sort();
            JargonCandidate {
                term: term.to_string(),
                source_clusters,
                context_keywords,
            }
        })
        .collect()
}

/// Tab-separated: term, source clusters, context keywords, and an empty
/// validation column for the analyst.
pub fn write_jargon_report<W: Write>(mut w: W, candidates: &[JargonCandidate]) -> std::io::Result<()> {
    writeln!(w, "term\tclusters\tcontext_keywords\tvalidation")?;
    for c in candidates {
        let clusters: Vec<String> = c
            .source_clusters
            .iter()
            .map(|r| format!("{}:{}", r.language, r.cluster_id))
            .collect();
        writeln!(
            w,
            "{}\t{}\t{}\t",
            c.term,
            clusters.join(","),
            c.context_keywords.join(" ")
        )?;
    }
    Ok(())
}
