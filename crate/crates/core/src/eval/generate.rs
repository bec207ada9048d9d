//! Seeded synthetic-corpus generator: samples complete derivations from a
//! grammar so models can be trained and evaluated without external data.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::{DerivationChild, DerivationNode, Operation};
use crate::grammar::{Grammar, NodeMark, SupertagId, TemplateKind, TreeTemplate};

#[derive(Debug, Clone)]
pub struct GenConfig {
    /// Maximum nesting depth of attachments.
    pub depth_cap: usize,
    /// Maximum sentence length in words; longer samples are redrawn.
    pub max_words: usize,
    /// Chance of adjoining at each eligible interior node.
    pub adjunction_prob: f64,
    /// Root label the sampled derivations must start from.
    pub start_label: String,
    /// Redraws allowed per sentence before giving up on the caps.
    pub max_attempts: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            depth_cap: 6,
            max_words: 15,
            adjunction_prob: 0.15,
            start_label: "S".to_string(),
            max_attempts: 100,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("grammar cannot produce any complete derivation rooted in {0}")]
    NoDerivations(String),
    #[error("no sample fit within {max_words} words after {attempts} attempts")]
    CapsUnsatisfiable { max_words: usize, attempts: usize },
}

/// Samples `size` complete derivations. Identical seeds produce identical
/// corpora.
pub fn generate_corpus(
    grammar: &Grammar,
    seed: u64,
    size: usize,
    config: &GenConfig,
) -> Result<Vec<DerivationNode>, GenError> {
    let sampler = Sampler::new(grammar, config);
    let starts = sampler.eligible_initial(&config.start_label, config.depth_cap);
    if starts.is_empty() {
        return Err(GenError::NoDerivations(config.start_label.clone()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut corpus = Vec::with_capacity(size);
    for _ in 0..size {
        let mut accepted = None;
        for _ in 0..config.max_attempts {
            let template = starts[rng.random_range(0..starts.len())];
            let derivation = sampler.build(template, config.depth_cap, &mut rng);
            if derivation.size() <= config.max_words {
                accepted = Some(derivation);
                break;
            }
        }
        match accepted {
            Some(derivation) => corpus.push(derivation),
            None => {
                return Err(GenError::CapsUnsatisfiable {
                    max_words: config.max_words,
                    attempts: config.max_attempts,
                })
            }
        }
    }
    Ok(corpus)
}

struct Sampler<'a> {
    config: &'a GenConfig,
    initial_by_label: BTreeMap<&'a str, Vec<&'a TreeTemplate>>,
    auxiliary_by_label: BTreeMap<&'a str, Vec<&'a TreeTemplate>>,
    words_for: BTreeMap<&'a SupertagId, Vec<(&'a str, &'a str)>>,
    min_depth: BTreeMap<&'a SupertagId, usize>,
}

impl<'a> Sampler<'a> {
    fn new(grammar: &'a Grammar, config: &'a GenConfig) -> Self {
        // Anchor words per template, from the word-level lexicon.
        let mut words_for: BTreeMap<&SupertagId, Vec<(&str, &str)>> = BTreeMap::new();
        for ((word, pos), set) in &grammar.lexicon().word_entries {
            for id in set {
                words_for
                    .entry(id)
                    .or_default()
                    .push((word.as_str(), pos.as_str()));
            }
        }

        let mut initial_by_label: BTreeMap<&str, Vec<&TreeTemplate>> = BTreeMap::new();
        let mut auxiliary_by_label: BTreeMap<&str, Vec<&TreeTemplate>> = BTreeMap::new();
        for template in grammar.templates() {
            if !words_for.contains_key(&template.id) {
                continue; // unanchorable: no word lists this template
            }
            let by_label = match template.kind {
                TemplateKind::Initial => &mut initial_by_label,
                TemplateKind::Auxiliary => &mut auxiliary_by_label,
            };
            by_label
                .entry(template.root.label.as_str())
                .or_default()
                .push(template);
        }

        // Fixpoint for the minimum attachment depth needed to complete
        // each template: 1 + the worst of its substitution-site labels.
        let mut min_depth: BTreeMap<&SupertagId, usize> = BTreeMap::new();
        let usable: Vec<&TreeTemplate> = initial_by_label
            .values()
            .chain(auxiliary_by_label.values())
            .flatten()
            .copied()
            .collect();
        loop {
            let mut changed = false;
            for template in &usable {
                let mut worst = 0usize;
                let mut feasible = true;
                for site in template.substitution_sites() {
                    let best = initial_by_label
                        .get(site.label.as_str())
                        .into_iter()
                        .flatten()
                        .filter_map(|t| min_depth.get(&t.id).copied())
                        .min();
                    match best {
                        Some(d) => worst = worst.max(d),
                        None => {
                            feasible = false;
                            break;
                        }
                    }
                }
                if feasible {
                    let depth = 1 + worst;
                    let entry = min_depth.entry(&template.id).or_insert(usize::MAX);
                    if depth < *entry {
                        *entry = depth;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }

        Sampler {
            config,
            initial_by_label,
            auxiliary_by_label,
            words_for,
            min_depth,
        }
    }

    fn eligible_initial(&self, label: &str, budget: usize) -> Vec<&'a TreeTemplate> {
        self.eligible(&self.initial_by_label, label, budget)
    }

    fn eligible_auxiliary(&self, label: &str, budget: usize) -> Vec<&'a TreeTemplate> {
        self.eligible(&self.auxiliary_by_label, label, budget)
    }

    fn eligible(
        &self,
        index: &BTreeMap<&'a str, Vec<&'a TreeTemplate>>,
        label: &str,
        budget: usize,
    ) -> Vec<&'a TreeTemplate> {
        index
            .get(label)
            .into_iter()
            .flatten()
            .filter(|t| {
                self.min_depth
                    .get(&t.id)
                    .is_some_and(|&d| d <= budget)
            })
            .copied()
            .collect()
    }

    fn build(
        &self,
        template: &'a TreeTemplate,
        budget: usize,
        rng: &mut ChaCha8Rng,
    ) -> DerivationNode {
        let anchors = &self.words_for[&template.id];
        let (word, pos) = anchors[rng.random_range(0..anchors.len())];
        let mut children = Vec::new();
        for site in template.substitution_sites() {
            let options = self.eligible_initial(&site.label, budget - 1);
            debug_assert!(!options.is_empty(), "depth accounting admits a filler");
            let choice = zipf_pick(&options, rng);
            children.push(DerivationChild {
                operation: Operation::Substitution,
                address: site.address.clone(),
                node: self.build(choice, budget - 1, rng),
                ambiguous: false,
            });
        }
        if budget > 1 {
            for node in template.root.walk() {
                if node.mark != NodeMark::Internal {
                    continue;
                }
                if rng.random::<f64>() >= self.config.adjunction_prob {
                    continue;
                }
                let options = self.eligible_auxiliary(&node.label, budget - 1);
                if options.is_empty() {
                    continue;
                }
                let choice = zipf_pick(&options, rng);
                children.push(DerivationChild {
                    operation: Operation::Adjunction,
                    address: node.address.clone(),
                    node: self.build(choice, budget - 1, rng),
                    ambiguous: false,
                });
            }
        }
        children.sort_by(|a, b| a.address.cmp(&b.address));
        DerivationNode {
            supertag: template.id.clone(),
            word: word.to_string(),
            pos: pos.to_string(),
            children,
        }
    }
}

/// Zipf-skewed choice over the name-sorted eligible templates: lexical
/// preference is never uniform in corpora, and models have nothing to
/// learn from a uniform one.
fn zipf_pick<'t>(options: &[&'t TreeTemplate], rng: &mut ChaCha8Rng) -> &'t TreeTemplate {
    let total: f64 = (1..=options.len()).map(|k| 1.0 / k as f64).sum();
    let mut draw = rng.random::<f64>() * total;
    for (k, template) in options.iter().enumerate() {
        draw -= 1.0 / (k + 1) as f64;
        if draw <= 0.0 {
            return template;
        }
    }
    options.last().expect("options are nonempty")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::Grammar;

    const TOY_GRAMMAR: &str = include_str!("../../../../data/toy.grammar");

    #[test]
    fn identical_seeds_give_identical_corpora() {
        let grammar = Grammar::parse(TOY_GRAMMAR).unwrap();
        let config = GenConfig::default();
        let a = generate_corpus(&grammar, 7, 100, &config).unwrap();
        let b = generate_corpus(&grammar, 7, 100, &config).unwrap();
        assert_eq!(a, b);
        let c = generate_corpus(&grammar, 8, 100, &config).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn size_zero_gives_an_empty_corpus() {
        let grammar = Grammar::parse(TOY_GRAMMAR).unwrap();
        let corpus = generate_corpus(&grammar, 1, 0, &GenConfig::default()).unwrap();
        assert!(corpus.is_empty());
        assert!(matches!(
            crate::tables::train_unigram(&corpus),
            Err(crate::tables::TableError::EmptyCorpus)
        ));
    }

    #[test]
    fn samples_validate_and_respect_caps() {
        let grammar = Grammar::parse(TOY_GRAMMAR).unwrap();
        let config = GenConfig::default();
        let corpus = generate_corpus(&grammar, 42, 500, &config).unwrap();
        for derivation in &corpus {
            let mut copy = derivation.clone();
            copy.validate(&grammar).expect("generated derivation is valid");
            assert!(copy.is_complete(&grammar));
            assert!(copy.size() <= config.max_words);
        }
    }

    #[test]
    fn unproducible_start_label_is_an_error() {
        let grammar = Grammar::parse(TOY_GRAMMAR).unwrap();
        let config = GenConfig {
            start_label: "XP".to_string(),
            ..GenConfig::default()
        };
        assert_eq!(
            generate_corpus(&grammar, 1, 5, &config),
            Err(GenError::NoDerivations("XP".to_string()))
        );
    }
}
