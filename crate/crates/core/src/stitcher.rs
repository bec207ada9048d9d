//! Combines a fully supertagged, dependency-linked sentence back into
//! derivation trees. Words without heads become forest roots; a forest of
//! one tree is a full parse, anything larger is the fragment case.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::corpus::{CorpusError, DerivationChild, DerivationNode, Operation};
use crate::grammar::{Grammar, GornAddress, SupertagId, TemplateKind};
use crate::models::TaggedSentence;

#[derive(Debug, Error)]
pub enum StitchError {
    #[error("word {position} has no chosen supertag")]
    MissingSupertag { position: usize },
    #[error("unknown template {0}")]
    UnknownTemplate(SupertagId),
    #[error("word {dependent} has more than one head")]
    MultipleHeads { dependent: usize },
    #[error("links form a cycle")]
    CyclicLinks,
    #[error(
        "unattachable link {head} -> {dependent}: no free {label}-labeled \
         attachment point in {template}"
    )]
    Unattachable {
        head: usize,
        dependent: usize,
        label: String,
        template: SupertagId,
    },
    #[error("stitched derivation failed validation: {0}")]
    InvalidResult(#[from] CorpusError),
}

/// The stitched forest plus how many attachments had more than one
/// label-compatible adjunction point (the chosen address may be wrong for
/// those; the corresponding derivation edges carry `ambiguous = true`).
#[derive(Debug, Clone, PartialEq)]
pub struct StitchOutput {
    pub forest: Vec<DerivationNode>,
    pub ambiguous_attachments: usize,
}

impl StitchOutput {
    pub fn is_single_parse(&self) -> bool {
        self.forest.len() == 1
    }
}

/// Stitches chosen supertags and head → dependent links into derivations.
///
/// Initial dependents substitute at the head template's substitution sites
/// with a matching label, assigned left to right by surface order.
/// Auxiliary dependents adjoin at the deepest, then leftmost interior node
/// with a matching label; when several nodes match, the attachment is
/// flagged ambiguous.
pub fn stitch(sentence: &TaggedSentence, grammar: &Grammar) -> Result<StitchOutput, StitchError> {
    let n = sentence.words.len();
    let mut tags: Vec<&SupertagId> = Vec::with_capacity(n);
    for (position, word) in sentence.words.iter().enumerate() {
        match &word.chosen {
            Some(tag) => tags.push(tag),
            None => return Err(StitchError::MissingSupertag { position }),
        }
    }

    let mut head_of: Vec<Option<usize>> = vec![None; n];
    let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); n];
    if let Some(links) = &sentence.links {
        for link in links {
            if head_of[link.dependent].replace(link.head).is_some() {
                return Err(StitchError::MultipleHeads {
                    dependent: link.dependent,
                });
            }
            dependents[link.head].push(link.dependent);
        }
    }
    for deps in &mut dependents {
        deps.sort_unstable();
    }
    // A dependency chain longer than the sentence revisits a word.
    for start in 0..n {
        let mut current = start;
        let mut steps = 0;
        while let Some(head) = head_of[current] {
            current = head;
            steps += 1;
            if steps > n {
                return Err(StitchError::CyclicLinks);
            }
        }
    }

    let mut ambiguous_attachments = 0;
    let mut forest = Vec::new();
    for (root, head) in head_of.iter().enumerate() {
        if head.is_none() {
            forest.push(build(
                root,
                sentence,
                &tags,
                &dependents,
                grammar,
                &mut ambiguous_attachments,
            )?);
        }
    }
    let mut output = StitchOutput {
        forest,
        ambiguous_attachments,
    };
    for root in &mut output.forest {
        root.validate(grammar)?;
    }
    Ok(output)
}

fn build(
    position: usize,
    sentence: &TaggedSentence,
    tags: &[&SupertagId],
    dependents: &[Vec<usize>],
    grammar: &Grammar,
    ambiguous_attachments: &mut usize,
) -> Result<DerivationNode, StitchError> {
    let tag = tags[position];
    let template = grammar
        .template(tag)
        .ok_or_else(|| StitchError::UnknownTemplate(tag.clone()))?;
    let word = &sentence.words[position];

    let mut used: BTreeMap<GornAddress, ()> = BTreeMap::new();
    let mut children = Vec::new();
    for &dependent in &dependents[position] {
        let dep_tag = tags[dependent];
        let dep_template = grammar
            .template(dep_tag)
            .ok_or_else(|| StitchError::UnknownTemplate(dep_tag.clone()))?;
        let label = &dep_template.root.label;
        let unattachable = || StitchError::Unattachable {
            head: position,
            dependent,
            label: label.clone(),
            template: tag.clone(),
        };
        let (operation, address, ambiguous) = match dep_template.kind {
            TemplateKind::Initial => {
                let site = template
                    .substitution_sites()
                    .into_iter()
                    .find(|s| s.label == *label && !used.contains_key(&s.address))
                    .ok_or_else(unattachable)?;
                (Operation::Substitution, site.address.clone(), false)
            }
            TemplateKind::Auxiliary => {
                let matching = template.adjunction_sites(label);
                let ambiguous = matching.len() > 1;
                let mut ranked: Vec<_> = matching
                    .into_iter()
                    .filter(|node| !used.contains_key(&node.address))
                    .collect();
                ranked.sort_by(|a, b| {
                    b.address
                        .depth()
                        .cmp(&a.address.depth())
                        .then_with(|| a.address.cmp(&b.address))
                });
                let node = ranked.first().ok_or_else(unattachable)?;
                if ambiguous {
                    *ambiguous_attachments += 1;
                }
                (Operation::Adjunction, node.address.clone(), ambiguous)
            }
        };
        used.insert(address.clone(), ());
        children.push(DerivationChild {
            operation,
            address,
            node: build(
                dependent,
                sentence,
                tags,
                dependents,
                grammar,
                ambiguous_attachments,
            )?,
            ambiguous,
        });
    }
    children.sort_by(|a, b| a.address.cmp(&b.address));
    Ok(DerivationNode {
        supertag: tag.clone(),
        word: word.form.clone(),
        pos: word.pos.clone(),
        children,
    })
}

/// Search-space shrinkage from candidate sets to the final assignment:
/// total candidates before, supertags kept after (one per word, or the
/// top-n sum when `n` is given), and their ratio.
pub fn ambiguity_reduction(sentence: &TaggedSentence, n: Option<usize>) -> (usize, usize, f64) {
    let before: usize = sentence.words.iter().map(|w| w.candidates.len()).sum();
    let after: usize = match n {
        Some(n) => sentence
            .words
            .iter()
            .map(|w| n.min(w.candidates.len()))
            .sum(),
        None => sentence.words.len(),
    };
    let factor = if after == 0 {
        0.0
    } else {
        before as f64 / after as f64
    };
    (before, after, factor)
}
