//! Seeded synthetic bilingual forum corpora with planted structure.
//!
//! Every topic owns a disjoint core vocabulary of pseudo-words; all topics
//! share a background vocabulary. Documents are bags of 20 to 60 tokens,
//! 70% drawn from the topic core (Zipf-weighted) and 30% from the
//! background (uniform). Russian documents are written by transliterating
//! each token into Cyrillic letter by letter, and the emitted translation
//! table maps every Cyrillic token back to its Latin original, so
//! translation followed by analysis sees the same vocabulary in both
//! corpora.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ingest::{write_posts, Language, RawPost};
use crate::topic::Tokenizer;

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";
const CORE_SHARE: f64 = 0.7;
const DOC_TOKENS: std::ops::RangeInclusive<usize> = 20..=60;
const HEADLINE_TOKENS: std::ops::RangeInclusive<usize> = 4..=6;
const POSTS_PER_THREAD: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("the corpus needs at least one topic")]
    NoTopics,
    #[error("jargon term {term:?} names undefined host topic {host_topic}")]
    UnknownHost { term: String, host_topic: usize },
    #[error("invalid synthetic spec: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedJargon {
    pub term: String,
    pub host_topic: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub shared_topic_count: usize,
    pub unique_russian_count: usize,
    pub unique_english_count: usize,
    /// Documents per topic and per language the topic appears in.
    pub docs_per_topic: usize,
    pub vocab_per_topic: usize,
    pub background_vocab: usize,
    pub jargon_terms: Vec<PlantedJargon>,
    /// Expected share of code-like paragraphs among all body paragraphs.
    pub noise_fraction: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            shared_topic_count: 2,
            unique_russian_count: 1,
            unique_english_count: 1,
            docs_per_topic: 50,
            vocab_per_topic: 30,
            background_vocab: 200,
            jargon_terms: Vec::new(),
            noise_fraction: 0.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn topic_count(&self) -> usize {
        self.shared_topic_count + self.unique_russian_count + self.unique_english_count
    }

    pub fn topic_kind(&self, topic: usize) -> TopicKind {
        if topic < self.shared_topic_count {
            TopicKind::Shared
        } else if topic < self.shared_topic_count + self.unique_russian_count {
            TopicKind::UniqueRu
        } else {
            TopicKind::UniqueEn
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        if self.topic_count() == 0 {
            return Err(SynthError::NoTopics);
        }
        if !(0.0..1.0).contains(&self.noise_fraction) {
            return Err(SynthError::Invalid("noise_fraction must be in [0, 1)".into()));
        }
        if self.vocab_per_topic == 0 {
            return Err(SynthError::Invalid("vocab_per_topic must be positive".into()));
        }
        for j in &self.jargon_terms {
            if j.host_topic >= self.topic_count() {
                return Err(SynthError::UnknownHost {
                    term: j.term.clone(),
                    host_topic: j.host_topic,
                });
            }
            let ok = j.term.chars().count() > 1 && j.term.chars().all(|c| c.is_ascii_lowercase());
            if !ok {
                return Err(SynthError::Invalid(format!(
                    "jargon term {:?} must be lowercase ASCII letters",
                    j.term
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TopicKind {
    Shared,
    UniqueRu,
    UniqueEn,
}

impl TopicKind {
    pub fn languages(self) -> &'static [Language] {
        match self {
            TopicKind::Shared => &[Language::English, Language::Russian],
            TopicKind::UniqueRu => &[Language::Russian],
            TopicKind::UniqueEn => &[Language::English],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Paragraph id to planted topic; `None` marks an injected noise paragraph.
    pub paragraphs: BTreeMap<String, Option<usize>>,
    pub topics: Vec<TopicKind>,
    /// Core vocabulary of each topic, most frequent first (Latin form).
    pub core_vocab: Vec<Vec<String>>,
    pub jargon: Vec<PlantedJargon>,
}

impl GroundTruth {
    pub fn topic_of(&self, paragraph_id: &str) -> Option<usize> {
        self.paragraphs.get(paragraph_id).copied().flatten()
    }

    pub fn noise_count(&self) -> usize {
        self.paragraphs.values().filter(|t| t.is_none()).count()
    }
}

#[derive(Debug, Clone, Default)]
pub struct SynthCorpus {
    pub posts: Vec<RawPost>,
    pub truth: GroundTruth,
    /// Cyrillic token to Latin token.
    pub translation_table: Vec<(String, String)>,
    /// Every generated word except the planted terms, for the dictionary filter.
    pub dictionary: Vec<String>,
    /// Known-jargon list that deliberately omits the planted terms.
    pub glossary: Vec<String>,
    /// `(word, tag)` pairs for the labeler.
    pub lexicon: Vec<(String, &'static str)>,
}

pub fn to_cyrillic(word: &str) -> String {
    word.chars()
        .map(|c| match c {
            'a' => 'а',
            'b' => 'б',
            'c' => 'ц',
            'd' => 'д',
            'e' => 'е',
            'f' => 'ф',
            'g' => 'г',
            'h' => 'х',
            'i' => 'и',
            'j' => 'й',
            'k' => 'к',
            'l' => 'л',
            'm' => 'м',
            'n' => 'н',
            'o' => 'о',
            'p' => 'п',
            'q' => 'я',
            'r' => 'р',
            's' => 'с',
            't' => 'т',
            'u' => 'у',
            'v' => 'в',
            'w' => 'ш',
            'x' => 'ж',
            'y' => 'ы',
            'z' => 'з',
            other => other,
        })
        .collect()
}

struct WordMaker {
    used: HashSet<String>,
    stop: Tokenizer,
}

impl WordMaker {
    fn make(&mut self, rng: &mut ChaCha8Rng) -> String {
        loop {
            let syllables = rng.gen_range(2..=3);
            let mut w = String::new();
            for _ in 0..syllables {
                w.push(CONSONANTS[rng.gen_range(0..CONSONANTS.len())] as char);
                w.push(VOWELS[rng.gen_range(0..VOWELS.len())] as char);
            }
            if !self.stop.is_stopword(&w) && self.used.insert(w.clone()) {
                return w;
            }
        }
    }
}

fn noise_line(rng: &mut ChaCha8Rng) -> String {
    const IDENTS: &[&str] = &["buf", "ptr", "len", "ctx", "res", "tmp", "val", "idx", "cfg", "fd"];
    let pick = |rng: &mut ChaCha8Rng| IDENTS[rng.gen_range(0..IDENTS.len())];
    let statements = rng.gen_range(2..=4);
    let mut parts = Vec::new();
    for _ in 0..statements {
        let line = match rng.gen_range(0..3) {
            0 => format!("{} = {}({}, {});", pick(rng), pick(rng), pick(rng), rng.gen_range(0..256)),
            1 => format!("if ({} != NULL) {{ {}[{}] = 0x{:02x}; }}", pick(rng), pick(rng), rng.gen_range(0..64), rng.gen_range(0..256)),
            _ => format!("{}->{} += {};", pick(rng), pick(rng), pick(rng)),
        };
        parts.push(line);
    }
    parts.join(" ")
}

/// Generates posts and ground truth. The same spec always yields the same
/// output.
pub fn generate(spec: &SynthSpec) -> Result<SynthCorpus, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut maker = WordMaker {
        used: spec.jargon_terms.iter().map(|j| j.term.clone()).collect(),
        stop: Tokenizer::default(),
    };

    let topics = spec.topic_count();
    let mut core_vocab: Vec<Vec<String>> = (0..topics)
        .map(|_| (0..spec.vocab_per_topic).map(|_| maker.make(&mut rng)).collect())
        .collect();
    let background: Vec<String> = (0..spec.background_vocab).map(|_| maker.make(&mut rng)).collect();
    // planted terms go near the top of their host's frequency ranking
    let mut inserted = vec![0usize; topics];
    for j in &spec.jargon_terms {
        let at = (1 + inserted[j.host_topic]).min(core_vocab[j.host_topic].len());
        core_vocab[j.host_topic].insert(at, j.term.clone());
        inserted[j.host_topic] += 1;
    }

    let zipf: Vec<WeightedIndex<f64>> = core_vocab
        .iter()
        .map(|v| WeightedIndex::new((0..v.len()).map(|r| 1.0 / (r as f64 + 1.0))).expect("non-empty"))
        .collect();

    let pool = (spec.docs_per_topic / 5).max(1);
    let english_authors: Vec<String> = (0..pool).map(|i| format!("u{i}")).collect();
    let shift = pool - (pool * 3) / 10;
    let russian_authors: Vec<String> = (shift..shift + pool).map(|i| format!("u{i}")).collect();

    let mut truth = GroundTruth {
        topics: (0..topics).map(|t| spec.topic_kind(t)).collect(),
        core_vocab: core_vocab.clone(),
        jargon: spec.jargon_terms.clone(),
        ..Default::default()
    };
    let mut posts = Vec::new();
    let render = |tokens: Vec<&str>, lang: Language| -> String {
        match lang {
            Language::Russian => tokens.iter().map(|t| to_cyrillic(t)).collect::<Vec<_>>().join(" "),
            _ => tokens.join(" "),
        }
    };

    for (topic, vocab) in core_vocab.iter().enumerate() {
        for &lang in spec.topic_kind(topic).languages() {
            let authors = if lang == Language::Russian {
                &russian_authors
            } else {
                &english_authors
            };
            for doc in 0..spec.docs_per_topic {
                let thread_no = doc / POSTS_PER_THREAD;
                let position = doc % POSTS_PER_THREAD;
                let thread_id = format!("{}-t{topic}-{thread_no}", lang.code());
                let post_id = format!("p{position}");

                let mut para_index = 0usize;
                let headline = (position == 0).then(|| {
                    let n = rng.gen_range(HEADLINE_TOKENS);
                    let tokens: Vec<&str> = (0..n).map(|_| vocab[zipf[topic].sample(&mut rng)].as_str()).collect();
                    render(tokens, lang)
                });
                if headline.is_some() {
                    truth
                        .paragraphs
                        .insert(format!("{thread_id}/{post_id}/0"), Some(topic));
                    para_index = 1;
                }

                let mut lines = Vec::new();
                let mut body_line = |text: String, label: Option<usize>, idx: &mut usize| {
                    truth
                        .paragraphs
                        .insert(format!("{thread_id}/{post_id}/{}", *idx), label);
                    lines.push(text);
                    *idx += 1;
                };
                while spec.noise_fraction > 0.0 && rng.gen_bool(spec.noise_fraction) {
                    body_line(noise_line(&mut rng), None, &mut para_index);
                }
                let n = rng.gen_range(DOC_TOKENS);
                let tokens: Vec<&str> = (0..n)
                    .map(|_| {
                        if background.is_empty() || rng.gen_bool(CORE_SHARE) {
                            vocab[zipf[topic].sample(&mut rng)].as_str()
                        } else {
                            background[rng.gen_range(0..background.len())].as_str()
                        }
                    })
                    .collect();
                body_line(render(tokens, lang), Some(topic), &mut para_index);

                posts.push(RawPost {
                    thread_id,
                    post_id,
                    author_id: authors[rng.gen_range(0..authors.len())].clone(),
                    position: position as u32,
                    headline,
                    body: lines.join("\n"),
                    timestamp: Some(1_600_000_000 + posts.len() as i64 * 60),
                });
            }
        }
    }

    let planted: HashSet<&str> = spec.jargon_terms.iter().map(|j| j.term.as_str()).collect();
    let all_words: Vec<&String> = core_vocab.iter().flatten().chain(&background).collect();
    let translation_table = all_words
        .iter()
        .map(|w| (to_cyrillic(w), (*w).clone()))
        .collect();
    let dictionary: Vec<String> = all_words
        .iter()
        .filter(|w| !planted.contains(w.as_str()))
        .map(|w| (*w).clone())
        .collect();
    let glossary = background.iter().step_by(10).cloned().collect();
    let mut lexicon = Vec::new();
    for vocab in &core_vocab {
        let words: Vec<&String> = vocab.iter().filter(|w| !planted.contains(w.as_str())).collect();
        for (i, w) in words.iter().take(5).enumerate() {
            lexicon.push(((*w).clone(), if i == 1 { "V" } else { "N" }));
        }
    }

    Ok(SynthCorpus {
        posts,
        truth,
        translation_table,
        dictionary,
        glossary,
        lexicon,
    })
}

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const TRUTH_FILE: &str = "truth.json";
pub const TRANSLATION_FILE: &str = "translation.tsv";
pub const DICTIONARY_FILE: &str = "dictionary.txt";
pub const GLOSSARY_FILE: &str = "glossary.txt";
pub const LEXICON_FILE: &str = "lexicon.tsv";

impl SynthCorpus {
    /// Writes the corpus and its sidecar files into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<Vec<std::path::PathBuf>, SynthError> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut create = |name: &str| -> Result<std::io::BufWriter<std::fs::File>, SynthError> {
            let path = dir.join(name);
            written.push(path.clone());
            Ok(std::io::BufWriter::new(std::fs::File::create(path)?))
        };

        let mut w = create(CORPUS_FILE)?;
        write_posts(&mut w, &self.posts)?;
        w.flush()?;

        let mut w = create(TRUTH_FILE)?;
        serde_json::to_writer_pretty(&mut w, &self.truth)?;
        w.write_all(b"\n")?;
        w.flush()?;

        let mut w = create(TRANSLATION_FILE)?;
        for (ru, en) in &self.translation_table {
            writeln!(w, "{ru}\t{en}")?;
        }
        w.flush()?;

        let mut w = create(DICTIONARY_FILE)?;
        for word in &self.dictionary {
            writeln!(w, "{word}")?;
        }
        w.flush()?;

        let mut w = create(GLOSSARY_FILE)?;
        for word in &self.glossary {
            writeln!(w, "{word}")?;
        }
        w.flush()?;

        let mut w = create(LEXICON_FILE)?;
        for (word, tag) in &self.lexicon {
            writeln!(w, "{word}\t{tag}")?;
        }
        w.flush()?;
        Ok(written)
    }
}
