//! The disambiguation models: lexical-preference ranking, exact sequence
//! decoding, and greedy dependency linking.

mod dependency;
mod trigram;

pub use dependency::{dependency_tag, dependency_tag_prepared, DependencyTagging};
pub use trigram::{trigram_tag, trigram_tag_prepared};

use std::collections::BTreeSet;

use crate::grammar::{Grammar, GrammarError, SupertagId};
use crate::tables::{OrdinalMode, UnigramTable, DEFAULT_PROB_FLOOR};

/// A word of the input: surface form plus its part-of-speech tag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputToken {
    pub form: String,
    pub pos: String,
}

impl InputToken {
    pub fn new(form: impl Into<String>, pos: impl Into<String>) -> Self {
        InputToken {
            form: form.into(),
            pos: pos.into(),
        }
    }
}

/// A word with its candidate set and (once tagged) the chosen supertag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedWord {
    pub form: String,
    pub pos: String,
    pub candidates: BTreeSet<SupertagId>,
    pub chosen: Option<SupertagId>,
}

/// An unlabeled head → dependent arc chosen by the dependency model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Link {
    pub head: usize,
    pub dependent: usize,
}

/// A tagged sentence: one supertag per word (possibly missing in partial
/// results), optional dependency links, and the accumulated log score.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggedSentence {
    pub words: Vec<TaggedWord>,
    pub links: Option<BTreeSet<Link>>,
    pub score: f64,
}

impl TaggedSentence {
    pub fn is_fully_tagged(&self) -> bool {
        self.words.iter().all(|w| w.chosen.is_some())
    }

    pub fn chosen_tags(&self) -> Vec<Option<&SupertagId>> {
        self.words.iter().map(|w| w.chosen.as_ref()).collect()
    }
}

/// An undirected arc between two word positions, stored with the smaller
/// endpoint first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Arc {
    lo: usize,
    hi: usize,
}

impl Arc {
    /// The endpoints must differ.
    pub fn new(a: usize, b: usize) -> Self {
        assert!(a != b, "an arc needs two distinct endpoints");
        Arc {
            lo: a.min(b),
            hi: a.max(b),
        }
    }

    pub fn endpoints(&self) -> (usize, usize) {
        (self.lo, self.hi)
    }
}

/// True when two arcs properly cross: with x = (a, c) and y = (b, d)
/// normalized, a < b < c < d or b < a < d < c. Nested and disjoint arcs,
/// and arcs sharing an endpoint, do not tangle.
pub fn kite_string_tangle(x: Arc, y: Arc) -> bool {
    let (a, c) = (x.lo, x.hi);
    let (b, d) = (y.lo, y.hi);
    (a < b && b < c && c < d) || (b < a && a < d && d < c)
}

/// Knobs for the decoders. Probabilities missing from a table are floored
/// at `prob_floor` (in probability space, applied before taking logs).
#[derive(Debug, Clone, Copy)]
pub struct DecodeConfig {
    pub prob_floor: f64,
    pub hypothesis_budget: usize,
    pub ordinal_mode: OrdinalMode,
    pub seed_order: SeedOrder,
}

/// Which unresolved position the dependency search commits to next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeedOrder {
    #[default]
    LeftToRight,
    /// Most confident first, by best unigram probability.
    BestUnigram,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            prob_floor: DEFAULT_PROB_FLOOR,
            hypothesis_budget: 1000,
            ordinal_mode: OrdinalMode::Candidate,
            seed_order: SeedOrder::LeftToRight,
        }
    }
}

/// Builds the per-word candidate sets for a sentence via lexicon lookup
/// with part-of-speech backoff.
pub fn prepare(tokens: &[InputToken], grammar: &Grammar) -> Result<Vec<TaggedWord>, GrammarError> {
    tokens
        .iter()
        .map(|t| {
            Ok(TaggedWord {
                form: t.form.clone(),
                pos: t.pos.clone(),
                candidates: grammar.candidates(&t.form, &t.pos)?.clone(),
                chosen: None,
            })
        })
        .collect()
}

/// Orders each word's candidates by unigram probability (descending,
/// ties broken by name) and keeps the top `n`.
pub fn unigram_rankings(
    words: &[TaggedWord],
    table: &UnigramTable,
    n: usize,
    floor: f64,
) -> Vec<Vec<SupertagId>> {
    words
        .iter()
        .map(|word| {
            let mut ranked: Vec<(f64, &SupertagId)> = word
                .candidates
                .iter()
                .map(|tag| (table.prob(&word.pos, tag).unwrap_or(floor), tag))
                .collect();
            ranked.sort_by(|(pa, ta), (pb, tb)| {
                pb.total_cmp(pa).then_with(|| ta.cmp(tb))
            });
            ranked.into_iter().take(n).map(|(_, t)| t.clone()).collect()
        })
        .collect()
}

/// Tags every word with its most preferred supertag. The score is the sum
/// of the chosen unigram log probabilities.
pub fn unigram_tag(
    tokens: &[InputToken],
    grammar: &Grammar,
    table: &UnigramTable,
    config: &DecodeConfig,
) -> Result<TaggedSentence, GrammarError> {
    Ok(unigram_tag_prepared(
        prepare(tokens, grammar)?,
        table,
        config,
    ))
}

/// Same tagger over words whose candidate sets are already built.
pub fn unigram_tag_prepared(
    mut words: Vec<TaggedWord>,
    table: &UnigramTable,
    config: &DecodeConfig,
) -> TaggedSentence {
    let rankings = unigram_rankings(&words, table, 1, config.prob_floor);
    let mut score = 0.0;
    for (word, ranking) in words.iter_mut().zip(&rankings) {
        let best = ranking.first().expect("candidate sets are nonempty");
        score += table.log_prob(&word.pos, best, config.prob_floor);
        word.chosen = Some(best.clone());
    }
    TaggedSentence {
        words,
        links: None,
        score,
    }
}

pub(crate) fn candidate_sets(words: &[TaggedWord]) -> Vec<BTreeSet<SupertagId>> {
    words.iter().map(|w| w.candidates.clone()).collect()
}

pub(crate) fn unigram_best(
    word: &TaggedWord,
    table: &UnigramTable,
    floor: f64,
) -> f64 {
    word.candidates
        .iter()
        .map(|tag| table.prob(&word.pos, tag).unwrap_or(floor))
        .fold(f64::NEG_INFINITY, f64::max)
}
