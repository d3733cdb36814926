mod oracles;

use std::collections::{HashMap, HashSet};

use pocketlens::compare::{
    classify, compare_all, extract_jargon, keyword_cosine, Relatedness, Thresholds,
};
use pocketlens::embed::{cosine, embed_batch, hash_embed, normalize, EmbeddingVector, ProviderConfig};
use pocketlens::eval::{adjusted_rand_index, compare_models, rand_index};
use pocketlens::ingest::{
    build_corpus, exceeds_symbol_ratio, is_too_short_with, split_paragraphs, FilterParams, Language, Paragraph,
    RawPost, ScriptDetector,
};
use pocketlens::synth::{self, SynthSpec, TopicKind};
use pocketlens::topic::{
    filter_clusters, lda_keywords, review_sample, single_topic_distribution, EnrichedDictionary, Keyword, LdaParams,
    TopicCluster,
};
use pocketlens::translate::{TableTranslator, Translator};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn word() -> impl Strategy<Value = String> {
    "[a-z]{1,6}"
}

fn line() -> impl Strategy<Value = String> {
    prop_oneof![
        Just(String::new()),
        Just("   ".to_string()),
        "[a-zA-Zа-я0-9{};=() ]{1,40}",
    ]
}

fn post(headline: Option<String>, lines: Vec<String>) -> RawPost {
    RawPost {
        thread_id: "t".into(),
        post_id: "p".into(),
        author_id: "a".into(),
        position: if headline.is_some() { 0 } else { 1 },
        headline,
        body: lines.join("\n"),
        timestamp: None,
    }
}

fn paragraph(text: &str, is_headline: bool) -> Paragraph {
    Paragraph {
        thread_id: "t".into(),
        post_id: "p".into(),
        author_id: "a".into(),
        index_in_post: 0,
        text: text.into(),
        language: Language::English,
        is_headline,
        translated_text: None,
    }
}

proptest! {
    #[test]
    fn splitting_keeps_every_non_empty_line_in_order(
        headline in proptest::option::of("[a-z]{1,10}( [a-z]{1,10}){0,3}"),
        lines in proptest::collection::vec(line(), 0..12),
    ) {
        let p = post(headline.clone(), lines.clone());
        let out = split_paragraphs(&p);
        let body: Vec<&str> = out.iter().filter(|p| !p.is_headline).map(|p| p.text.as_str()).collect();
        let expected: Vec<&str> = lines.iter().map(String::as_str).filter(|l| !l.trim().is_empty()).collect();
        prop_assert_eq!(body, expected);
        prop_assert_eq!(out.first().map(|p| p.is_headline).unwrap_or(false), headline.is_some());
        for (i, para) in out.iter().enumerate() {
            prop_assert_eq!(para.index_in_post as usize, i);
        }
    }

    #[test]
    fn filters_commute(text in "[a-z{};= ]{0,60}", headline in any::<bool>()) {
        let p = paragraph(&text, headline);
        let noise = |p: &Paragraph| !exceeds_symbol_ratio(&p.text, 0.12);
        let length = |p: &Paragraph| !is_too_short_with(p, 5, 30);
        let a: Vec<&Paragraph> = [&p].into_iter().filter(|p| noise(p)).filter(|p| length(p)).collect();
        let b: Vec<&Paragraph> = [&p].into_iter().filter(|p| length(p)).filter(|p| noise(p)).collect();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn headlines_survive_the_length_filter(text in "[a-z]{0,5}") {
        prop_assert!(!is_too_short_with(&paragraph(&text, true), 5, 30));
    }

    #[test]
    fn symbol_ratio_test_matches_integer_arithmetic(text in "[a-zа-я0-9{};=()#\\- ]{0,80}") {
        let visible: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
        let symbols = visible.iter().filter(|c| !c.is_alphanumeric()).count();
        let oracle = !visible.is_empty() && 25 * symbols > 3 * visible.len();
        prop_assert_eq!(exceeds_symbol_ratio(&text, 0.12), oracle);
    }
}

#[test]
fn corpora_route_by_language() {
    let corpus = synth::generate(&SynthSpec {
        docs_per_topic: 30,
        ..SynthSpec::default()
    })
    .unwrap();
    // relaxed filters so every paragraph reaches routing
    let filters = FilterParams {
        noise_ratio: 1.0,
        min_spaces: 0,
        min_chars: 0,
    };
    let table: HashMap<String, String> = corpus.translation_table.iter().cloned().collect();
    let built = build_corpus(&corpus.posts, &ScriptDetector, &TableTranslator::new(table), &filters);
    assert!(!built.english.is_empty() && !built.russian.is_empty());
    assert!(built.english.iter().all(|p| p.language == Language::English));
    assert!(built.russian.iter().all(|p| p.language == Language::Russian && p.translated_text.is_some()));
}

proptest! {
    #[test]
    fn embedding_a_permuted_batch_permutes_the_output(
        texts in proptest::collection::vec(proptest::collection::vec(word(), 1..8), 2..12),
        seed in any::<u64>(),
    ) {
        let paragraphs: Vec<Paragraph> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| Paragraph { index_in_post: i as u32, ..paragraph(&t.join(" "), false) })
            .collect();
        let provider = ProviderConfig::hash(64, 3);
        let Ok(forward) = embed_batch(&paragraphs, &provider) else { return Ok(()) };
        let mut order: Vec<usize> = (0..paragraphs.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..order.len()).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        let permuted: Vec<Paragraph> = order.iter().map(|&i| paragraphs[i].clone()).collect();
        let backward = embed_batch(&permuted, &provider).unwrap();
        for (k, &i) in order.iter().enumerate() {
            prop_assert_eq!(&backward[k], &forward[i]);
        }
    }

    #[test]
    fn hash_vectors_have_unit_self_cosine(words in proptest::collection::vec(word(), 1..20), seed in any::<u64>()) {
        if let Ok(v) = hash_embed(&words.join(" "), 128, seed) {
            prop_assert!((cosine(&v, &v) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn normalize_is_idempotent(values in proptest::collection::vec(-100.0f64..100.0, 1..32)) {
        prop_assume!(values.iter().any(|v| v.abs() > 1e-6));
        let v = EmbeddingVector { id: "x".into(), values };
        let once = normalize(&v).unwrap();
        let twice = normalize(&once).unwrap();
        for (a, b) in once.values.iter().zip(&twice.values) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        prop_assert!((cosine(&v.values, &once.values) - 1.0).abs() < 1e-9);
    }
}

#[test]
fn token_disjoint_texts_are_nearly_orthogonal() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let a: Vec<String> = (0..rng.gen_range(10..40)).map(|j| format!("a{i}x{j}")).collect();
        let b: Vec<String> = (0..rng.gen_range(10..40)).map(|j| format!("b{i}y{j}")).collect();
        let va = hash_embed(&a.join(" "), 2048, 0).unwrap();
        let vb = hash_embed(&b.join(" "), 2048, 0).unwrap();
        worst = worst.max(cosine(&va, &vb).abs());
    }
    assert!(worst <= 0.5, "max |cos| {worst}");
}

fn docs_strategy() -> impl Strategy<Value = Vec<Vec<String>>> {
    proptest::collection::vec(proptest::collection::vec("[a-f]{1,2}", 1..15), 1..10)
}

proptest! {
    #[test]
    fn single_topic_ignores_seed_and_iterations(docs in docs_strategy(), seed in any::<u64>(), iterations in 1usize..50) {
        let base = lda_keywords(&docs, &LdaParams::default(), 20).unwrap();
        let other = lda_keywords(&docs, &LdaParams { seed, iterations, ..LdaParams::default() }, 20).unwrap();
        prop_assert_eq!(base, other);
    }

    #[test]
    fn phi_is_a_distribution(docs in docs_strategy(), beta in 0.001f64..1.0) {
        let phi = single_topic_distribution(&docs, beta).unwrap();
        let sum: f64 = phi.iter().map(|k| k.weight).sum();
        prop_assert!((sum - 1.0).abs() <= 1e-9);
        // a one-word vocabulary puts all mass on that word
        let upper = if phi.len() == 1 { 1.0 + 1e-12 } else { 1.0 };
        prop_assert!(phi.iter().all(|k| k.weight > 0.0 && k.weight < upper));
    }

    #[test]
    fn ranking_matches_term_frequency_and_survives_duplication(docs in docs_strategy(), beta in 0.001f64..1.0) {
        let params = LdaParams { beta, ..LdaParams::default() };
        let words = |k: Vec<Keyword>| k.into_iter().map(|k| k.word).collect::<Vec<_>>();
        let ranked = words(lda_keywords(&docs, &params, 20).unwrap());
        let oracle: Vec<String> = oracles::term_frequency_ranking(&docs).into_iter().take(20).map(|(w, _)| w).collect();
        prop_assert_eq!(&ranked, &oracle);
        let doubled: Vec<Vec<String>> = docs.iter().chain(&docs).cloned().collect();
        prop_assert_eq!(words(lda_keywords(&doubled, &params, 20).unwrap()), ranked);
    }
}

fn topic_cluster(id: usize, language: Language, label: &[&str], keywords: &[String]) -> TopicCluster {
    TopicCluster {
        cluster_id: id,
        language,
        members: vec![format!("t/p/{id}")],
        label_words: label.iter().map(|s| s.to_string()).collect(),
        keywords: keywords
            .iter()
            .map(|w| Keyword {
                word: w.clone(),
                weight: 0.05,
            })
            .collect(),
        kept: true,
        drop_reason: None,
    }
}

fn keyword_sets() -> impl Strategy<Value = Vec<Vec<String>>> {
    proptest::collection::vec(proptest::collection::hash_set("k[0-9]{1,2}", 1..20), 1..8)
        .prop_map(|sets| sets.into_iter().map(|s| s.into_iter().collect()).collect())
}

proptest! {
    #[test]
    fn filtering_only_touches_the_kept_flag(sets in keyword_sets(), known in proptest::collection::hash_set("k[0-9]{1,2}", 1..40)) {
        let dict = EnrichedDictionary::new(known).unwrap();
        let clusters: Vec<TopicCluster> = sets.iter().enumerate()
            .map(|(i, k)| topic_cluster(i, Language::English, &[k[0].as_str()], k))
            .collect();
        for (before, after) in clusters.iter().zip(filter_clusters(&clusters, &dict, 0.8)) {
            prop_assert_eq!(&before.keywords, &after.keywords);
            prop_assert_eq!(&before.label_words, &after.label_words);
            prop_assert_eq!(&before.members, &after.members);
            prop_assert_eq!(after.kept, after.drop_reason.is_none());
        }
    }

    #[test]
    fn review_sample_is_seeded(n in 1usize..60, seed in any::<u64>()) {
        let clusters: Vec<TopicCluster> = (0..n)
            .map(|i| TopicCluster { kept: i % 3 != 0, ..topic_cluster(i, Language::English, &["x"], &["x".into()]) })
            .collect();
        let a = review_sample(&clusters, 0.1, seed);
        prop_assert_eq!(&a, &review_sample(&clusters, 0.1, seed));
        let kept = clusters.iter().filter(|c| c.kept).count();
        prop_assert_eq!(a.len(), (kept as f64 * 0.1).ceil() as usize);
        prop_assert!(a.iter().all(|&id| clusters[id].kept));
    }

    #[test]
    fn keyword_cosine_is_symmetric(sets in keyword_sets()) {
        for a in &sets {
            for b in &sets {
                let ab = keyword_cosine(a.iter().map(String::as_str), b.iter().map(String::as_str)).unwrap();
                let ba = keyword_cosine(b.iter().map(String::as_str), a.iter().map(String::as_str)).unwrap();
                prop_assert_eq!(ab.value(), ba.value());
            }
        }
    }

    #[test]
    fn twenty_keywords_quantize_to_twentieths(shift in 0usize..=20) {
        let words: Vec<String> = (0..40).map(|i| format!("w{i}")).collect();
        let s = keyword_cosine(words[..20].iter().map(String::as_str), words[shift..shift + 20].iter().map(String::as_str)).unwrap();
        prop_assert_eq!(s.value() * 20.0, (20 - shift) as f64);
    }

    #[test]
    fn classify_partitions_the_unit_interval(s in 0.0f64..=1.0) {
        let expected = if s > 0.35 {
            Relatedness::HighlyRelated
        } else if s >= 0.2 {
            Relatedness::SomewhatRelated
        } else {
            Relatedness::NotRelated
        };
        prop_assert_eq!(classify(s), expected);
    }

    #[test]
    fn comparison_covers_every_pair_and_cluster(ru in keyword_sets(), en in keyword_sets()) {
        let side = |sets: &[Vec<String>], lang| -> Vec<TopicCluster> {
            sets.iter().enumerate().map(|(i, k)| topic_cluster(i, lang, &["x"], k)).collect()
        };
        let (r, e) = (side(&ru, Language::Russian), side(&en, Language::English));
        let report = compare_all(&r, &e, &Thresholds::default()).unwrap();
        prop_assert_eq!(report.records.len(), r.len() * e.len());
        let common_ru: HashSet<usize> = report.common_topics.iter().map(|p| p.0).collect();
        let common_en: HashSet<usize> = report.common_topics.iter().map(|p| p.1).collect();
        for (clusters, common, somewhat, unique) in [
            (&r, &common_ru, &report.somewhat_russian, &report.unique_russian),
            (&e, &common_en, &report.somewhat_english, &report.unique_english),
        ] {
            for c in clusters.iter() {
                let hits = [common.contains(&c.cluster_id), somewhat.contains(&c.cluster_id), unique.contains(&c.cluster_id)];
                prop_assert_eq!(hits.iter().filter(|&&h| h).count(), 1);
            }
        }
    }

    #[test]
    fn jargon_ignores_glossary_order_and_duplicates(sets in keyword_sets(), glossary in proptest::collection::vec("k[0-9]{1,2}", 0..30), split in 0usize..30) {
        let clusters: Vec<TopicCluster> = sets.iter().enumerate().map(|(i, k)| topic_cluster(i, Language::English, &["x"], k)).collect();
        let split = split.min(glossary.len());
        let one: Vec<HashSet<String>> = vec![glossary.iter().cloned().collect()];
        let mut reversed = glossary.clone();
        reversed.reverse();
        let many: Vec<HashSet<String>> = vec![
            reversed[..split].iter().cloned().collect(),
            reversed[split..].iter().cloned().collect(),
            glossary.iter().cloned().collect(),
        ];
        prop_assert_eq!(extract_jargon(&clusters, &one), extract_jargon(&clusters, &many));
    }
}

fn labels() -> impl Strategy<Value = Vec<i64>> {
    proptest::collection::vec(-1i64..4, 2..30)
}

proptest! {
    #[test]
    fn rand_index_is_symmetric_and_label_blind(a in labels(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b: Vec<i64> = a.iter().map(|_| rng.gen_range(-1..4)).collect();
        prop_assert_eq!(rand_index(&a, &b).unwrap(), rand_index(&b, &a).unwrap());
        prop_assert_eq!(rand_index(&a, &a).unwrap(), 1.0);
        let renamed: Vec<i64> = a.iter().map(|&l| if l < 0 { l } else { 10 + (l * 7) % 4 }).collect();
        prop_assert_eq!(rand_index(&renamed, &b).unwrap(), rand_index(&a, &b).unwrap());
        prop_assert_eq!(rand_index(&a, &b).unwrap(), oracles::pair_count_rand(&a, &b));
        prop_assert!(adjusted_rand_index(&a, &b).unwrap() <= 1.0 + 1e-12);
    }
}

#[test]
fn compare_models_is_reproducible() {
    let corpus = synth::generate(&SynthSpec {
        docs_per_topic: 40,
        ..SynthSpec::default()
    })
    .unwrap();
    let table: HashMap<String, String> = corpus.translation_table.iter().cloned().collect();
    let built = build_corpus(
        &corpus.posts,
        &ScriptDetector,
        &TableTranslator::new(table),
        &FilterParams::default(),
    );
    let mut paragraphs = built.english;
    paragraphs.extend(built.russian);
    let providers = [ProviderConfig::hash(256, 0), ProviderConfig::hash(2048, 7)];
    let params = pocketlens::cluster::ClusterParams::new(10);
    let a = compare_models(&paragraphs, &providers, &params, 3).unwrap();
    let b = compare_models(&paragraphs, &providers, &params, 3).unwrap();
    assert_eq!(a, b);
    assert!(a.iter().all(|s| s.avg_pairwise_rand == 1.0 && s.rand_evaluations == 3));
}

fn spec(seed: u64, noise: f64) -> SynthSpec {
    SynthSpec {
        shared_topic_count: 3,
        unique_russian_count: 2,
        unique_english_count: 2,
        docs_per_topic: 40,
        noise_fraction: noise,
        seed,
        ..SynthSpec::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn synth_structure_holds(seed in any::<u64>()) {
        let corpus = synth::generate(&spec(seed, 0.0)).unwrap();
        let truth = &corpus.truth;
        let mut seen = HashSet::new();
        for vocab in &truth.core_vocab {
            for w in vocab {
                prop_assert!(seen.insert(w.clone()), "{} is in two core vocabularies", w);
            }
        }
        for p in &corpus.posts {
            let lang = if p.thread_id.starts_with("ru-") { Language::Russian } else { Language::English };
            for para in split_paragraphs(p) {
                if let Some(t) = truth.topic_of(&para.id()) {
                    prop_assert!(truth.topics[t].languages().contains(&lang));
                    match truth.topics[t] {
                        TopicKind::UniqueRu => prop_assert_eq!(lang, Language::Russian),
                        TopicKind::UniqueEn => prop_assert_eq!(lang, Language::English),
                        TopicKind::Shared => {}
                    }
                }
            }
        }
        let table: HashMap<String, String> = corpus.translation_table.iter().cloned().collect();
        let translator = TableTranslator::new(table);
        for w in truth.core_vocab.iter().flatten() {
            prop_assert_eq!(&translator.translate(&synth::to_cyrillic(w), Language::Russian).unwrap(), w);
        }
        prop_assert_eq!(synth::generate(&spec(seed, 0.0)).unwrap().posts, corpus.posts);
    }
}

#[test]
fn injected_noise_rate_is_plausible() {
    let corpus = synth::generate(&SynthSpec {
        docs_per_topic: 250,
        noise_fraction: 0.2,
        ..spec(5, 0.2)
    })
    .unwrap();
    let truth = &corpus.truth;
    let body = truth.paragraphs.len() - corpus.posts.iter().filter(|p| p.headline.is_some()).count();
    let noise = truth.noise_count() as f64;
    // lines are geometric per post: expected noise share of body lines is p
    let share = noise / body as f64;
    let sd = (0.2 * 0.8 / body as f64).sqrt();
    assert!((share - 0.2).abs() < 5.0 * sd, "noise share {share:.4} (sd {sd:.4})");
    let noisy: HashSet<&String> = truth.paragraphs.iter().filter(|(_, t)| t.is_none()).map(|(id, _)| id).collect();
    for p in &corpus.posts {
        for para in split_paragraphs(p) {
            if noisy.contains(&para.id()) {
                assert!(exceeds_symbol_ratio(&para.text, 0.12), "{}", para.text);
            }
        }
    }
}
