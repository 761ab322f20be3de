//! Seeded synthetic corpora with planted venue-topic structure.
//!
//! Each (venue, topic) pair owns a vocabulary sampled without replacement
//! from a synthetic lexicon. Part of every topic vocabulary can instead be a
//! random subset of a global theme pool. Each venue draws distinct themes, so
//! venues overlap on themes but never cover one twice. Topic sizes inside a
//! venue can be skewed. A shared noise vocabulary is mixed into every article. Authors belong to a venue pool and
//! stay loyal to it with a configurable probability.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Article, Corpus};
use crate::error::{Error, Result};

// Letters that no English suffix rule or stopword is built from, so every
// lexicon word survives analysis unchanged.
const CONSONANTS: &[u8] = b"bdfgkmpvz";
const VOWELS: &[u8] = b"aou";
const SYLLABLES_PER_WORD: u32 = 3;

fn lexicon_size() -> usize {
    (CONSONANTS.len() * VOWELS.len()).pow(SYLLABLES_PER_WORD)
}

fn lexicon_word(mut i: usize) -> String {
    let base = CONSONANTS.len() * VOWELS.len();
    let mut w = String::with_capacity(2 * SYLLABLES_PER_WORD as usize);
    for _ in 0..SYLLABLES_PER_WORD {
        let s = i % base;
        i /= base;
        w.push(CONSONANTS[s / VOWELS.len()] as char);
        w.push(VOWELS[s % VOWELS.len()] as char);
    }
    w
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_venues: usize,
    pub topics_per_venue: usize,
    pub vocab_per_topic: usize,
    pub shared_vocab_size: usize,
    /// Global themes shared across venues; 0 disables theme borrowing.
    pub n_themes: usize,
    /// Words in each theme pool.
    pub theme_vocab_size: usize,
    /// Fraction of each topic vocabulary taken from its theme pool.
    pub theme_share: f64,
    /// Mean training articles per (venue, topic).
    pub train_per_venue_topic: usize,
    pub test_per_venue_topic: usize,
    /// Topic `i` of a venue gets training mass proportional to
    /// `(1 - topic_skew)^i`; 0 keeps topics equal. Venue totals are unchanged.
    pub topic_skew: f64,
    pub tokens_per_article: usize,
    pub keywords_per_article: usize,
    /// Probability that a token comes from the shared noise vocabulary.
    pub noise: f64,
    pub authors_per_venue: usize,
    pub authors_per_article: usize,
    /// Probability that an author slot is filled from the article's own venue.
    pub loyalty: f64,
    pub train_year: i32,
    pub test_year: i32,
    pub seed: u64,
}

impl Default for SynthSpec {
    /// The acceptance corpus: 20 venues × 3 topics × (40 train + 5 test),
    /// 40 being the mean over the skewed topics of a venue.
    fn default() -> Self {
        Self {
            n_venues: 20,
            topics_per_venue: 3,
            vocab_per_topic: 30,
            shared_vocab_size: 300,
            n_themes: 8,
            theme_vocab_size: 40,
            theme_share: 0.9,
            train_per_venue_topic: 40,
            test_per_venue_topic: 5,
            topic_skew: 0.7,
            tokens_per_article: 60,
            keywords_per_article: 2,
            noise: 0.5,
            authors_per_venue: 40,
            authors_per_article: 3,
            loyalty: 0.6,
            train_year: 2015,
            test_year: 2016,
            seed: 2016,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_venues", self.n_venues),
            ("topics_per_venue", self.topics_per_venue),
            ("vocab_per_topic", self.vocab_per_topic),
            ("shared_vocab_size", self.shared_vocab_size),
            ("train_per_venue_topic", self.train_per_venue_topic),
            ("test_per_venue_topic", self.test_per_venue_topic),
            ("tokens_per_article", self.tokens_per_article),
            ("authors_per_venue", self.authors_per_venue),
            ("authors_per_article", self.authors_per_article),
        ];
        for (name, n) in counts {
            if n == 0 {
                return Err(Error::Synth(format!("{name} must be >= 1")));
            }
        }
        for (name, p) in [
            ("noise", self.noise),
            ("loyalty", self.loyalty),
            ("theme_share", self.theme_share),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Synth(format!("{name} must be in [0, 1], got {p}")));
            }
        }
        if !(0.0..1.0).contains(&self.topic_skew) {
            return Err(Error::Synth(format!(
                "topic_skew must be in [0, 1), got {}",
                self.topic_skew
            )));
        }
        if self.borrowed_per_topic() > 0 && self.n_themes < self.topics_per_venue {
            return Err(Error::Synth("n_themes must be >= topics_per_venue".into()));
        }
        if self.borrowed_per_topic() > self.theme_vocab_size {
            return Err(Error::Synth("theme pool smaller than the borrowed vocabulary".into()));
        }
        if self.keywords_per_article > self.vocab_per_topic {
            return Err(Error::Synth("keywords_per_article exceeds vocab_per_topic".into()));
        }
        if self.authors_per_article > self.authors_per_venue {
            return Err(Error::Synth("authors_per_article exceeds authors_per_venue".into()));
        }
        if self.test_year <= self.train_year {
            return Err(Error::Synth("test_year must be after train_year".into()));
        }
        let needed = self.words_needed();
        if needed > lexicon_size() {
            return Err(Error::Synth(format!(
                "vocabulary exhausted: need {needed} words, lexicon has {}",
                lexicon_size()
            )));
        }
        Ok(())
    }

    fn borrowed_per_topic(&self) -> usize {
        if self.n_themes == 0 {
            0
        } else {
            (self.theme_share * self.vocab_per_topic as f64).round() as usize
        }
    }

    fn words_needed(&self) -> usize {
        let borrowed = self.borrowed_per_topic();
        let own = self.vocab_per_topic - borrowed;
        self.n_venues * self.topics_per_venue * own
            + if borrowed > 0 {
                self.n_themes * self.theme_vocab_size
            } else {
                0
            }
            + self.shared_vocab_size
    }

    pub fn n_train(&self) -> usize {
        self.n_venues * self.topics_per_venue * self.train_per_venue_topic
    }

    pub fn n_test(&self) -> usize {
        self.n_venues * self.topics_per_venue * self.test_per_venue_topic
    }

    /// Training articles of each topic of a venue, summing to
    /// `topics_per_venue * train_per_venue_topic` (largest remainder).
    pub fn train_counts(&self) -> Vec<usize> {
        let total = self.topics_per_venue * self.train_per_venue_topic;
        let w: Vec<f64> = (0..self.topics_per_venue)
            .map(|i| (1.0 - self.topic_skew).powi(i as i32))
            .collect();
        let sum: f64 = w.iter().sum();
        let exact: Vec<f64> = w.iter().map(|x| x / sum * total as f64).collect();
        let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
        let mut order: Vec<usize> = (0..counts.len()).collect();
        order.sort_by(|&a, &b| {
            (exact[b] - exact[b].floor())
                .total_cmp(&(exact[a] - exact[a].floor()))
                .then(a.cmp(&b))
        });
        let missing = total - counts.iter().sum::<usize>();
        for &i in order.iter().take(missing) {
            counts[i] += 1;
        }
        counts
    }

    /// Boundary year for the train/test split of the generated corpus.
    pub fn boundary_year(&self) -> i32 {
        self.train_year
    }
}

pub fn venue_name(v: usize) -> String {
    format!("venue{v:03}")
}

pub fn author_name(venue: usize, idx: usize) -> String {
    format!("0000-0001-{venue:04}-{idx:04}")
}

/// Planted labels alongside the generated corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub corpus: Corpus,
    /// `(venue, topic)` of each article, aligned with `corpus.articles()`.
    pub planted: Vec<(usize, usize)>,
    /// Vocabulary of each `(venue, topic)`, indexed `venue * topics_per_venue + topic`.
    pub topic_vocab: Vec<Vec<String>>,
    /// Theme of each `(venue, topic)`, same indexing; empty without themes.
    pub topic_theme: Vec<usize>,
    pub shared_vocab: Vec<String>,
}

pub fn generate(spec: &SynthSpec) -> Result<SynthCorpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut ids: Vec<usize> = (0..lexicon_size()).collect();
    ids.shuffle(&mut rng);
    let mut words = ids.into_iter().map(lexicon_word);

    let borrowed = spec.borrowed_per_topic();
    let themes: Vec<Vec<String>> = if borrowed > 0 {
        (0..spec.n_themes)
            .map(|_| words.by_ref().take(spec.theme_vocab_size).collect())
            .collect()
    } else {
        Vec::new()
    };
    let n_slots = spec.n_venues * spec.topics_per_venue;
    let slot_theme: Vec<usize> = if borrowed > 0 {
        (0..spec.n_venues)
            .flat_map(|_| rand::seq::index::sample(&mut rng, themes.len(), spec.topics_per_venue).into_vec())
            .collect()
    } else {
        Vec::new()
    };
    let topic_vocab: Vec<Vec<String>> = (0..n_slots)
        .map(|slot| {
            let mut v: Vec<String> = words.by_ref().take(spec.vocab_per_topic - borrowed).collect();
            if borrowed > 0 {
                v.extend(themes[slot_theme[slot]].choose_multiple(&mut rng, borrowed).cloned());
            }
            v
        })
        .collect();
    let shared_vocab: Vec<String> = words.by_ref().take(spec.shared_vocab_size).collect();

    let mut articles = Vec::with_capacity(spec.n_train() + spec.n_test());
    let mut planted = Vec::with_capacity(articles.capacity());
    let train_counts = spec.train_counts();
    let test_counts = vec![spec.test_per_venue_topic; spec.topics_per_venue];
    for (split, counts, year) in [
        ("train", &train_counts, spec.train_year),
        ("test", &test_counts, spec.test_year),
    ] {
        for venue in 0..spec.n_venues {
            for (topic, &per_topic) in counts.iter().enumerate() {
                let vocab = &topic_vocab[venue * spec.topics_per_venue + topic];
                for i in 0..per_topic {
                    let text: Vec<&str> = (0..spec.tokens_per_article)
                        .map(|_| {
                            let pool = if rng.random_bool(spec.noise) {
                                &shared_vocab
                            } else {
                                vocab
                            };
                            pool.choose(&mut rng).unwrap().as_str()
                        })
                        .collect();
                    let keywords: Vec<String> = vocab
                        .choose_multiple(&mut rng, spec.keywords_per_article)
                        .cloned()
                        .collect();
                    let mut authors: Vec<String> = Vec::with_capacity(spec.authors_per_article);
                    while authors.len() < spec.authors_per_article {
                        let home = if spec.n_venues == 1 || rng.random_bool(spec.loyalty) {
                            venue
                        } else {
                            let other = rng.random_range(0..spec.n_venues - 1);
                            if other >= venue {
                                other + 1
                            } else {
                                other
                            }
                        };
                        let a = author_name(home, rng.random_range(0..spec.authors_per_venue));
                        if !authors.contains(&a) {
                            authors.push(a);
                        }
                    }
                    articles.push(Article {
                        article_id: format!("{split}-{venue:03}-{topic:02}-{i:04}"),
                        venue_id: venue_name(venue),
                        year,
                        title_abstract: text.join(" "),
                        keywords,
                        authors,
                    });
                    planted.push((venue, topic));
                }
            }
        }
    }
    Ok(SynthCorpus {
        corpus: Corpus::new(articles)?,
        planted,
        topic_vocab,
        topic_theme: slot_theme,
        shared_vocab,
    })
}
