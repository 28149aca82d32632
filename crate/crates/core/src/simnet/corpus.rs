use std::collections::{BTreeMap, BTreeSet};

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::config::CorpusConfig;
use crate::annotation::{AttrId, AttributeRegistry, Dataset, Descriptor, StreamAnnotation};
use crate::sumtree::{EmbeddingSet, DEFAULT_EMBEDDING_DIM};

/// Spread of keyword vectors around their topic direction.
const TOPIC_SPREAD: f64 = 0.5;

const ATTRIBUTE_NAMES: [&str; 15] = [
    "type", "unit", "location", "provider", "sensor", "protocol", "format", "frequency",
    "accuracy", "owner", "domain", "platform", "status", "network", "license",
];

const TOPIC_STEMS: [&str; 14] = [
    "aqua", "therm", "volt", "lumin", "geo", "bio", "chem", "acou", "mech", "pluv", "vent",
    "agri", "medi", "traf",
];

const SYLLABLES: [&str; 24] = [
    "ra", "lo", "ne", "ti", "ka", "mu", "so", "ve", "di", "pa", "ri", "xo", "ba", "le", "mi",
    "no", "qu", "sa", "te", "vo", "za", "fe", "gi", "hu",
];

/// A generated corpus: streams plus the full per-attribute vocabulary.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub dataset: Dataset,
    /// Every keyword that may appear, per attribute, sorted.
    pub vocabulary: BTreeMap<AttrId, Vec<String>>,
    /// Keyword vectors that place keywords of one topic near a shared
    /// direction, standing in for learned word vectors.
    pub embeddings: EmbeddingSet,
}

fn gaussian_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

fn topic_embeddings(vocab: &[Vec<Vec<String>>], topics: usize, seed: u64) -> EmbeddingSet {
    let dim = DEFAULT_EMBEDDING_DIM;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xe3b0_c442_98fc_1c14);
    let centers: Vec<Vec<f64>> = (0..topics).map(|_| normalized(gaussian_vector(&mut rng, dim))).collect();
    let mut set = EmbeddingSet::new(dim);
    for attr in vocab {
        for (t, words) in attr.iter().enumerate() {
            for w in words {
                let noise = gaussian_vector(&mut rng, dim);
                let scale = TOPIC_SPREAD / (dim as f64).sqrt();
                let v = centers[t].iter().zip(&noise).map(|(c, n)| c + scale * n).collect();
                set.insert(w, normalized(v)).expect("fixed dimension");
            }
        }
    }
    set
}

fn topic_stem(t: usize) -> String {
    let base = TOPIC_STEMS[t % TOPIC_STEMS.len()];
    match t / TOPIC_STEMS.len() {
        0 => base.to_string(),
        round => format!("{base}{round}"),
    }
}

/// Topic keyword lists per attribute: stem plus a random syllable suffix, so
/// keywords of one topic share characters.
fn vocabulary(cfg: &CorpusConfig, rng: &mut ChaCha8Rng) -> Vec<Vec<Vec<String>>> {
    (0..cfg.attributes)
        .map(|a| {
            let mut seen = BTreeSet::new();
            let mut topics = vec![Vec::new(); cfg.topics];
            let attr_tag = &ATTRIBUTE_NAMES[a % ATTRIBUTE_NAMES.len()][..2];
            for i in 0..cfg.vocab {
                let t = i % cfg.topics;
                let stem = topic_stem(t);
                let mut len = 2;
                let word = loop {
                    let suffix: String = (0..len).map(|_| *SYLLABLES.choose(rng).unwrap()).collect();
                    let w = format!("{stem}{suffix}{attr_tag}");
                    if seen.insert(w.clone()) {
                        break w;
                    }
                    len += 1;
                };
                topics[t].push(word);
            }
            topics
        })
        .collect()
}

/// Generates a topic-structured annotation corpus.
///
/// Every stream has one topic. Each attribute is present with probability
/// `presence`; its value is a Zipf draw from the topic's keywords, or with
/// probability `noise` a uniform draw from the whole vocabulary.
pub fn generate_corpus(cfg: &CorpusConfig, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = vocabulary(cfg, &mut rng);
    let names: Vec<String> = (0..cfg.attributes)
        .map(|a| match ATTRIBUTE_NAMES.get(a) {
            Some(n) => n.to_string(),
            None => format!("attr{a}"),
        })
        .collect();
    let registry = AttributeRegistry::new(&names).expect("distinct generated names");

    let zipf: Vec<WeightedIndex<f64>> = (0..cfg.topics)
        .map(|t| {
            let n = vocab[0][t].len().max(1);
            WeightedIndex::new((0..n).map(|r| 1.0 / ((r + 1) as f64).powf(cfg.zipf))).unwrap()
        })
        .collect();

    let mut streams = Vec::with_capacity(cfg.streams);
    for s in 0..cfg.streams {
        let topic = rng.gen_range(0..cfg.topics);
        let mut descriptors = Vec::new();
        for (a, topics) in vocab.iter().enumerate() {
            if !rng.gen_bool(cfg.presence) {
                continue;
            }
            let value = if rng.gen_bool(cfg.noise) || topics[topic].is_empty() {
                let t = rng.gen_range(0..cfg.topics);
                match topics[t].choose(&mut rng) {
                    Some(v) => v.clone(),
                    None => continue,
                }
            } else {
                topics[topic][zipf[topic].sample(&mut rng)].clone()
            };
            descriptors.push(Descriptor::new(a as AttrId, &value).expect("generated values are valid"));
        }
        if descriptors.is_empty() {
            let a = rng.gen_range(0..cfg.attributes);
            let v = vocab[a][topic].first().or_else(|| vocab[a].iter().flatten().next()).unwrap();
            descriptors.push(Descriptor::new(a as AttrId, v).expect("generated values are valid"));
        }
        streams.push(StreamAnnotation::new(format!("s{s:06}"), descriptors).expect("one value per attribute"));
    }

    let embeddings = topic_embeddings(&vocab, cfg.topics, seed);
    let vocabulary = vocab
        .into_iter()
        .enumerate()
        .map(|(a, topics)| {
            let mut all: Vec<String> = topics.into_iter().flatten().collect();
            all.sort();
            (a as AttrId, all)
        })
        .collect();
    Corpus {
        dataset: Dataset { registry, streams },
        vocabulary,
        embeddings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simnet::Config;

    fn small() -> CorpusConfig {
        CorpusConfig {
            streams: 300,
            attributes: 5,
            vocab: 40,
            topics: 4,
            ..Config::default().corpus
        }
    }

    #[test]
    fn deterministic_and_consistent() {
        let a = generate_corpus(&small(), 7);
        let b = generate_corpus(&small(), 7);
        assert_eq!(a.dataset, b.dataset);
        assert_eq!(a.dataset.streams.len(), 300);
        assert_eq!(a.vocabulary.len(), 5);
        for (attr, words) in &a.vocabulary {
            assert_eq!(words.len(), 40);
            for kw in a.dataset.keywords(*attr) {
                assert!(words.binary_search(&kw).is_ok(), "{kw} outside the vocabulary");
            }
        }
        assert!(a.dataset.streams.iter().all(|s| !s.descriptors().is_empty()));
        assert_ne!(generate_corpus(&small(), 8).dataset, a.dataset);
        assert_eq!(a.embeddings, b.embeddings);
        assert_eq!(a.embeddings.len(), 5 * 40);
    }

    #[test]
    fn topic_keywords_are_closer_than_strangers() {
        let corpus = generate_corpus(&small(), 3);
        let words = &corpus.vocabulary[&0];
        let emb = &corpus.embeddings;
        let dot = |a: &str, b: &str| -> f64 {
            emb.get(a).unwrap().iter().zip(emb.get(b).unwrap()).map(|(x, y)| x * y).sum()
        };
        // keywords carry their topic stem as a prefix
        let stem = |w: &str| TOPIC_STEMS.iter().position(|s| w.starts_with(s)).unwrap();
        let (mut same, mut other) = (Vec::new(), Vec::new());
        for a in words {
            for b in words {
                if a < b {
                    if stem(a) == stem(b) { &mut same } else { &mut other }.push(dot(a, b));
                }
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(mean(&same) > 0.7, "{}", mean(&same));
        assert!(mean(&other) < 0.3, "{}", mean(&other));
    }

    #[test]
    fn round_trips_through_the_text_format() {
        let corpus = generate_corpus(&small(), 1);
        let text = corpus.dataset.to_string();
        assert_eq!(Dataset::parse(&text).unwrap(), corpus.dataset);
    }

    #[test]
    fn corpus_scale_vocabulary() {
        let cfg = CorpusConfig {
            streams: 10,
            vocab: 1500,
            ..Config::default().corpus
        };
        let corpus = generate_corpus(&cfg, 2);
        let total: usize = corpus.vocabulary.values().map(Vec::len).sum();
        assert_eq!(total, 15 * 1500);
    }
}
