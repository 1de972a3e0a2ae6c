//! Deterministic planted-topic corpora for tests, benches and demos.
//!
//! Layout: category 0 is the root. Each topic owns a category directly
//! under the root and a complete tree of `branching`-ary subcategories
//! below it, `depth` levels in total. Pages are dealt round-robin onto the
//! leaves of their topic tree. Page text mixes the topic's own vocabulary
//! with "noise" tokens from a shared vocabulary and from other topics, plus
//! optional rare tokens that repeat inside a page (high tfidf, off-topic).

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CategoryRecord, CorpusStore, PageRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub n_topics: usize,
    pub pages_per_topic: usize,
    pub vocab_per_topic: usize,
    /// Category levels below the root (1 = topic categories only).
    pub depth: usize,
    pub branching: usize,
    pub words_per_page: usize,
    pub shared_vocab: usize,
    /// Fraction of tokens drawn from outside the page's topic; half of them
    /// come from the shared vocabulary, half from other topics.
    pub noise: f64,
    pub rare_vocab: usize,
    /// Distinct rare words per page; each is repeated `rare_repeat` times.
    pub rare_words_per_page: usize,
    pub rare_repeat: usize,
    /// Probability that a page also joins a random leaf of another topic.
    pub cross_membership: f64,
    pub links_per_page: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: 0,
            n_topics: 4,
            pages_per_topic: 50,
            vocab_per_topic: 40,
            depth: 2,
            branching: 2,
            words_per_page: 60,
            shared_vocab: 30,
            noise: 0.3,
            rare_vocab: 0,
            rare_words_per_page: 0,
            rare_repeat: 3,
            cross_membership: 0.0,
            links_per_page: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticWiki {
    pub store: CorpusStore,
    /// Page id -> topic label (`topic<k>`).
    pub labels: BTreeMap<u64, String>,
}

/// Shorthand for [`SyntheticConfig::new`] + [`SyntheticConfig::generate`].
pub fn gen_synthetic_wiki(
    seed: u64,
    n_topics: usize,
    pages_per_topic: usize,
    vocab_per_topic: usize,
    depth: usize,
) -> SyntheticWiki {
    SyntheticConfig::new(seed, n_topics, pages_per_topic, vocab_per_topic, depth).generate()
}

pub fn topic_word(topic: usize, j: usize) -> String {
    format!("t{topic}w{j}")
}

pub fn topic_label(topic: usize) -> String {
    format!("topic{topic}")
}

impl SyntheticConfig {
    pub fn new(seed: u64, n_topics: usize, pages_per_topic: usize, vocab_per_topic: usize, depth: usize) -> Self {
        SyntheticConfig { seed, n_topics, pages_per_topic, vocab_per_topic, depth, ..SyntheticConfig::default() }
    }

    /// The evaluation corpus: 4 topics of 50 pages under three category
    /// levels, with 70% off-topic tokens, repeated rare words and a few
    /// cross-topic memberships. Centroid accuracy on plain vectors sits
    /// well below 1 here.
    pub fn planted_topics(seed: u64) -> Self {
        SyntheticConfig {
            noise: 0.7,
            rare_vocab: 400,
            rare_words_per_page: 3,
            rare_repeat: 4,
            cross_membership: 0.1,
            ..SyntheticConfig::new(seed, 4, 50, 40, 3)
        }
    }

    pub fn generate(&self) -> SyntheticWiki {
        let n_topics = self.n_topics.max(1);
        let depth = self.depth.max(1);
        let branching = self.branching.max(1);
        let vocab = self.vocab_per_topic.max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);

        let mut categories = vec![CategoryRecord { id: 0, title: "Root".into(), parents: vec![] }];
        let mut next_cat = 1u64;
        let mut leaves: Vec<Vec<u64>> = Vec::with_capacity(n_topics);
        for topic in 0..n_topics {
            let top = next_cat;
            next_cat += 1;
            categories.push(CategoryRecord { id: top, title: format!("Topic {topic}"), parents: vec![0] });
            let mut level = vec![(top, format!("Topic {topic}"))];
            for _ in 1..depth {
                let mut next = Vec::with_capacity(level.len() * branching);
                for (parent, title) in &level {
                    for b in 0..branching {
                        let id = next_cat;
                        next_cat += 1;
                        let t = format!("{title}/{b}");
                        categories.push(CategoryRecord { id, title: t.clone(), parents: vec![*parent] });
                        next.push((id, t));
                    }
                }
                level = next;
            }
            leaves.push(level.into_iter().map(|(id, _)| id).collect());
        }

        let zipf = WeightedIndex::new((0..vocab).map(|j| 1.0 / ((j + 1) as f64).powf(0.7)))
            .expect("non-empty positive weights");
        let n_pages = n_topics * self.pages_per_topic;
        let mut pages = Vec::with_capacity(n_pages);
        let mut labels = BTreeMap::new();
        for topic in 0..n_topics {
            for k in 0..self.pages_per_topic {
                let id = (topic * self.pages_per_topic + k) as u64;
                let mut words: Vec<String> = Vec::with_capacity(self.words_per_page);
                for _ in 0..self.words_per_page {
                    let w = if rng.random::<f64>() >= self.noise {
                        topic_word(topic, zipf.sample(&mut rng))
                    } else if n_topics == 1 || (self.shared_vocab > 0 && rng.random::<bool>()) {
                        if self.shared_vocab > 0 {
                            format!("shared{}", rng.random_range(0..self.shared_vocab))
                        } else {
                            topic_word(topic, zipf.sample(&mut rng))
                        }
                    } else {
                        let mut other = rng.random_range(0..n_topics - 1);
                        if other >= topic {
                            other += 1;
                        }
                        topic_word(other, zipf.sample(&mut rng))
                    };
                    words.push(w);
                }
                if self.rare_vocab > 0 {
                    for _ in 0..self.rare_words_per_page {
                        let r = format!("rare{}", rng.random_range(0..self.rare_vocab));
                        for _ in 0..self.rare_repeat.max(1) {
                            let at = rng.random_range(0..=words.len());
                            words.insert(at, r.clone());
                        }
                    }
                }

                let own = &leaves[topic];
                let mut cats = vec![own[k % own.len()]];
                if n_topics > 1 && rng.random::<f64>() < self.cross_membership {
                    let mut other = rng.random_range(0..n_topics - 1);
                    if other >= topic {
                        other += 1;
                    }
                    cats.push(*leaves[other].choose(&mut rng).expect("non-empty leaves"));
                }

                let mut links = Vec::with_capacity(self.links_per_page);
                if n_pages > 1 {
                    for _ in 0..self.links_per_page {
                        let target = if self.pages_per_topic > 1 && rng.random::<f64>() < 0.8 {
                            (topic * self.pages_per_topic + rng.random_range(0..self.pages_per_topic)) as u64
                        } else {
                            rng.random_range(0..n_pages) as u64
                        };
                        if target != id {
                            links.push(target);
                        }
                    }
                }

                pages.push(PageRecord {
                    id,
                    title: format!("Page {id}"),
                    text: words.join(" "),
                    categories: cats,
                    links,
                    link_basis: None,
                });
                labels.insert(id, topic_label(topic));
            }
        }

        let store = CorpusStore::new(0, pages, categories).expect("generator emits a valid corpus");
        SyntheticWiki { store, labels }
    }
}
