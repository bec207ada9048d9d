//! Evaluation protocols over gold-annotated corpora: top-n containment,
//! per-word supertag accuracy, and dependency link recall.

mod generate;

pub use generate::{generate_corpus, GenConfig, GenError};

use thiserror::Error;

use crate::corpus::{flatten, CorpusError, DerivationNode};
use crate::grammar::{Grammar, GrammarError};
use crate::models::{
    dependency_tag_prepared, unigram_rankings, DecodeConfig, DependencyTagging, InputToken,
    TaggedSentence, TaggedWord,
};
use crate::stitcher::stitch;
use crate::tables::{DependencyTable, UnigramTable};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
}

/// What counts as a top-n success for a sentence.
#[derive(Clone, Copy)]
pub enum TopnCriterion<'a> {
    /// Every word's gold supertag appears within its top-n list.
    GoldContainment,
    /// Gold containment, plus the top-n-restricted candidate sets must
    /// still link into a single stitched structure.
    Stitch { dependency: &'a DependencyTable },
}

/// Percentage of sentences whose top-n supertag selections succeed under
/// the given criterion.
pub fn topn_success(
    corpus: &[DerivationNode],
    grammar: &Grammar,
    unigram: &UnigramTable,
    n: usize,
    criterion: TopnCriterion<'_>,
    config: &DecodeConfig,
) -> Result<f64, EvalError> {
    if corpus.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let mut successes = 0usize;
    for derivation in corpus {
        let flat = flatten(derivation, grammar)?;
        let words = gold_words(&flat, grammar)?;
        let rankings = unigram_rankings(&words, unigram, n, config.prob_floor);
        let contained = flat
            .words
            .iter()
            .zip(&rankings)
            .all(|(w, ranking)| ranking.contains(&w.supertag));
        let success = match criterion {
            TopnCriterion::GoldContainment => contained,
            TopnCriterion::Stitch { dependency } => {
                contained && {
                    let restricted: Vec<TaggedWord> = words
                        .iter()
                        .zip(&rankings)
                        .map(|(w, ranking)| TaggedWord {
                            form: w.form.clone(),
                            pos: w.pos.clone(),
                            candidates: ranking.iter().cloned().collect(),
                            chosen: None,
                        })
                        .collect();
                    match dependency_tag_prepared(restricted, dependency, unigram, config) {
                        DependencyTagging::Complete(sentence) => stitch(&sentence, grammar)
                            .map(|out| out.is_single_parse())
                            .unwrap_or(false),
                        DependencyTagging::Partial(_) => false,
                    }
                }
            }
        };
        if success {
            successes += 1;
        }
    }
    Ok(100.0 * successes as f64 / corpus.len() as f64)
}

/// Percentage of words assigned their gold supertag by the tagger.
pub fn supertag_accuracy<F>(
    corpus: &[DerivationNode],
    grammar: &Grammar,
    mut tagger: F,
) -> Result<f64, EvalError>
where
    F: FnMut(&[InputToken]) -> TaggedSentence,
{
    if corpus.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let mut words = 0usize;
    let mut correct = 0usize;
    for derivation in corpus {
        let flat = flatten(derivation, grammar)?;
        let tagged = tagger(&inputs(&flat.words));
        debug_assert_eq!(tagged.words.len(), flat.words.len());
        for (gold, predicted) in flat.words.iter().zip(&tagged.words) {
            words += 1;
            if predicted.chosen.as_ref() == Some(&gold.supertag) {
                correct += 1;
            }
        }
    }
    Ok(100.0 * correct as f64 / words as f64)
}

/// Link and supertag scores of a dependency-model run, with the raw totals
/// the percentages come from. One headless root per sentence keeps
/// `gold_links = words - sentences`.
#[derive(Debug, Clone, PartialEq)]
pub struct DependencyScores {
    pub sentences: usize,
    pub words: usize,
    pub gold_links: usize,
    pub matched_links: usize,
    pub correct_supertags: usize,
    pub link_recall: f64,
    pub supertag_accuracy: f64,
}

/// Matches predicted links against gold as unordered word pairs and counts
/// per-word supertag accuracy for the same tagger output.
pub fn dependency_scores<F>(
    corpus: &[DerivationNode],
    grammar: &Grammar,
    mut tagger: F,
) -> Result<DependencyScores, EvalError>
where
    F: FnMut(&[InputToken]) -> TaggedSentence,
{
    if corpus.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let mut scores = DependencyScores {
        sentences: 0,
        words: 0,
        gold_links: 0,
        matched_links: 0,
        correct_supertags: 0,
        link_recall: 0.0,
        supertag_accuracy: 0.0,
    };
    for derivation in corpus {
        let flat = flatten(derivation, grammar)?;
        let tagged = tagger(&inputs(&flat.words));
        scores.sentences += 1;
        scores.words += flat.words.len();
        for (gold, predicted) in flat.words.iter().zip(&tagged.words) {
            if predicted.chosen.as_ref() == Some(&gold.supertag) {
                scores.correct_supertags += 1;
            }
        }
        let gold_pairs: std::collections::BTreeSet<(usize, usize)> = flat
            .links
            .iter()
            .map(|l| (l.head.min(l.dependent), l.head.max(l.dependent)))
            .collect();
        scores.gold_links += gold_pairs.len();
        if let Some(links) = &tagged.links {
            scores.matched_links += links
                .iter()
                .map(|l| (l.head.min(l.dependent), l.head.max(l.dependent)))
                .filter(|pair| gold_pairs.contains(pair))
                .count();
        }
    }
    scores.link_recall = 100.0 * scores.matched_links as f64 / scores.gold_links as f64;
    scores.supertag_accuracy = 100.0 * scores.correct_supertags as f64 / scores.words as f64;
    Ok(scores)
}

/// Part-of-speech-tagged input for the taggers, stripped of gold answers.
pub fn inputs(words: &[crate::corpus::FlatWord]) -> Vec<InputToken> {
    words
        .iter()
        .map(|w| InputToken::new(w.form.clone(), w.pos.clone()))
        .collect()
}

fn gold_words(
    flat: &crate::corpus::FlatSentence,
    grammar: &Grammar,
) -> Result<Vec<TaggedWord>, GrammarError> {
    flat.words
        .iter()
        .map(|w| {
            Ok(TaggedWord {
                form: w.form.clone(),
                pos: w.pos.clone(),
                candidates: grammar.candidates(&w.form, &w.pos)?.clone(),
                chosen: None,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_corpus;
    use crate::models::{trigram_tag, unigram_tag};
    use crate::tables::{train_trigram, train_unigram, TrainConfig};

    const TOY_GRAMMAR: &str = include_str!("../../../../data/toy.grammar");
    const TOY_CORPUS: &str = include_str!("../../../../data/toy.corpus");

    fn toy() -> (Grammar, Vec<DerivationNode>) {
        let grammar = Grammar::parse(TOY_GRAMMAR).unwrap();
        let corpus = parse_corpus(TOY_CORPUS, &grammar).unwrap();
        (grammar, corpus)
    }

    #[test]
    fn perfect_tagger_scores_100() {
        let (grammar, corpus) = toy();
        let gold = |tokens: &[InputToken]| -> TaggedSentence {
            // Echo the gold annotation for this toy corpus.
            let corpus = parse_corpus(TOY_CORPUS, &grammar).unwrap();
            for derivation in &corpus {
                let flat = flatten(derivation, &grammar).unwrap();
                if flat.words.len() == tokens.len()
                    && flat.words.iter().zip(tokens).all(|(w, t)| w.form == t.form)
                {
                    let words = flat
                        .words
                        .iter()
                        .map(|w| TaggedWord {
                            form: w.form.clone(),
                            pos: w.pos.clone(),
                            candidates: Default::default(),
                            chosen: Some(w.supertag.clone()),
                        })
                        .collect();
                    let links = flat
                        .links
                        .iter()
                        .map(|l| crate::models::Link {
                            head: l.head,
                            dependent: l.dependent,
                        })
                        .collect();
                    return TaggedSentence {
                        words,
                        links: Some(links),
                        score: 0.0,
                    };
                }
            }
            unreachable!("unknown sentence")
        };
        assert_eq!(supertag_accuracy(&corpus, &grammar, gold).unwrap(), 100.0);
        let scores = dependency_scores(&corpus, &grammar, gold).unwrap();
        assert_eq!(scores.link_recall, 100.0);
        assert_eq!(scores.supertag_accuracy, 100.0);
        assert_eq!(scores.gold_links, scores.words - scores.sentences);
    }

    #[test]
    fn topn_success_is_monotone_in_n() {
        let (grammar, corpus) = toy();
        let unigram = train_unigram(&corpus).unwrap();
        let config = DecodeConfig::default();
        let mut last = 0.0;
        for n in 1..=4 {
            let rate = topn_success(
                &corpus,
                &grammar,
                &unigram,
                n,
                TopnCriterion::GoldContainment,
                &config,
            )
            .unwrap();
            assert!(rate >= last, "success rate dropped from {last} to {rate}");
            assert!((0.0..=100.0).contains(&rate));
            last = rate;
        }
        assert_eq!(last, 100.0);
    }

    #[test]
    fn taggers_score_the_toy_corpus_they_trained_on() {
        let (grammar, corpus) = toy();
        let unigram = train_unigram(&corpus).unwrap();
        let trigram = train_trigram(&corpus, &grammar, &TrainConfig::default()).unwrap();
        let config = DecodeConfig::default();
        let uni_acc = supertag_accuracy(&corpus, &grammar, |tokens| {
            unigram_tag(tokens, &grammar, &unigram, &config).unwrap()
        })
        .unwrap();
        let tri_acc = supertag_accuracy(&corpus, &grammar, |tokens| {
            trigram_tag(tokens, &grammar, &trigram, &config).unwrap()
        })
        .unwrap();
        assert!(uni_acc > 0.0 && uni_acc <= 100.0);
        assert_eq!(tri_acc, 100.0, "memorized sequences decode exactly");
    }

    #[test]
    fn stitch_criterion_is_at_most_as_permissive_as_containment() {
        let (grammar, corpus) = toy();
        let unigram = train_unigram(&corpus).unwrap();
        let dependency =
            crate::tables::train_dependency(&corpus, &grammar, &TrainConfig::default()).unwrap();
        let config = DecodeConfig::default();
        for n in 1..=3 {
            let contained = topn_success(
                &corpus,
                &grammar,
                &unigram,
                n,
                TopnCriterion::GoldContainment,
                &config,
            )
            .unwrap();
            let stitched = topn_success(
                &corpus,
                &grammar,
                &unigram,
                n,
                TopnCriterion::Stitch {
                    dependency: &dependency,
                },
                &config,
            )
            .unwrap();
            assert!(stitched <= contained, "n={n}: {stitched} > {contained}");
        }
        // The toy corpus memorizes itself: top-1 already stitches.
        let strict = topn_success(
            &corpus,
            &grammar,
            &unigram,
            1,
            TopnCriterion::Stitch {
                dependency: &dependency,
            },
            &config,
        )
        .unwrap();
        assert_eq!(strict, 100.0);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let (grammar, _) = toy();
        let unigram = UnigramTable::default();
        assert!(matches!(
            topn_success(
                &[],
                &grammar,
                &unigram,
                1,
                TopnCriterion::GoldContainment,
                &DecodeConfig::default()
            ),
            Err(EvalError::EmptyCorpus)
        ));
    }
}
