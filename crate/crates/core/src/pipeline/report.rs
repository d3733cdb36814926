use std::collections::HashMap;
use std::fmt::Write;

use crate::compare::{JargonCandidate, RelatednessReport};
use crate::topic::TopicCluster;

fn index(clusters: &[TopicCluster]) -> HashMap<usize, &TopicCluster> {
    clusters.iter().map(|c| (c.cluster_id, c)).collect()
}

fn describe(c: Option<&&TopicCluster>) -> (String, String) {
    match c {
        Some(c) => (
            c.label_words.join(" "),
            c.keyword_words().collect::<Vec<_>>().join(", "),
        ),
        None => ("?".into(), String::new()),
    }
}

/// Markdown summary of a finished comparison: the score histogram, common
/// topics with both sides' labels and keywords, the pockets of knowledge
/// per language, and jargon candidates with their contexts.
pub fn render_report(
    report: &RelatednessReport,
    russian: &[TopicCluster],
    english: &[TopicCluster],
    jargon: Option<&[JargonCandidate]>,
) -> String {
    let ru = index(russian);
    let en = index(english);
    let mut s = String::new();

    let _ = writeln!(s, "# Cross-language topic report\n");
    let _ = writeln!(
        s,
        "Compared {} Russian and {} English clusters ({} pairs); highly related above {}, not related below {}.\n",
        report.russian_count,
        report.english_count,
        report.records.len(),
        report.thresholds.high,
        report.thresholds.low
    );

    let _ = writeln!(s, "## Similarity histogram\n");
    let _ = writeln!(s, "| Label | s | Total pairs | # max-score Russian | # max-score English |");
    let _ = writeln!(s, "|---|---|---|---|---|");
    for row in &report.histogram {
        let _ = writeln!(
            s,
            "| {} | {:.2} | {} | {} | {} |",
            row.level,
            row.score(),
            row.pair_count,
            row.russian_max,
            row.english_max
        );
    }
    let _ = writeln!(s);
    for (level, (pairs, ru_max, en_max)) in report.level_totals() {
        let _ = writeln!(s, "- {level}: {pairs} pairs, {ru_max} Russian and {en_max} English clusters at their maximum");
    }

    let _ = writeln!(s, "\n## Common topics\n");
    if report.common_topics.is_empty() {
        let _ = writeln!(s, "no common topics");
    }
    let scores: HashMap<(usize, usize), f64> = report
        .records
        .iter()
        .map(|r| ((r.russian_cluster_id, r.english_cluster_id), r.value()))
        .collect();
    for (r, e) in &report.common_topics {
        let (rl, rk) = describe(ru.get(r));
        let (el, ek) = describe(en.get(e));
        let _ = writeln!(
            s,
            "- Russian {r} [{rl}] / English {e} [{el}], s = {:.2}",
            scores.get(&(*r, *e)).copied().unwrap_or(f64::NAN)
        );
        let _ = writeln!(s, "  - Russian keywords: {rk}");
        let _ = writeln!(s, "  - English keywords: {ek}");
    }

    let _ = writeln!(s, "\n## Pockets of knowledge\n");
    for (name, ids, side) in [
        ("Russian", &report.unique_russian, &ru),
        ("English", &report.unique_english, &en),
    ] {
        let _ = writeln!(s, "### {name} ({})\n", ids.len());
        if ids.is_empty() {
            let _ = writeln!(s, "none");
        }
        for id in ids {
            let (label, keywords) = describe(side.get(id));
            let _ = writeln!(s, "- cluster {id} [{label}]: {keywords}");
        }
        let _ = writeln!(s);
    }

    if let Some(candidates) = jargon {
        let _ = writeln!(s, "## Jargon candidates ({})\n", candidates.len());
        for c in candidates {
            let hosts: Vec<String> = c
                .source_clusters
                .iter()
                .map(|r| format!("{}:{}", r.language.code(), r.cluster_id))
                .collect();
            let _ = writeln!(
                s,
                "- {} ({}): {}",
                c.term,
                hosts.join(", "),
                c.context_keywords.join(", ")
            );
        }
    }
    s
}
