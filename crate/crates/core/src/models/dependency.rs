//! Greedy dependency-model decoder.
//!
//! Hypotheses fix supertags for a subset of positions and carry a set of
//! non-crossing arcs. The search repeatedly extends its current hypothesis
//! by the best-scoring alternative; the other alternatives go to a
//! max-score frontier, consulted only when the current hypothesis cannot
//! be extended. The first hypothesis in which every position is fixed and
//! every signature satisfied wins, so results are greedy, not optimal.
//! A budget on extensions bounds the backtracking.

use std::collections::{BTreeSet, BinaryHeap};

use crate::grammar::{Grammar, GrammarError, SupertagId};
use crate::tables::{
    resolve_ordinal, DependencyEntry, DependencyTable, LinkDirection, UnigramTable,
};

use super::{
    candidate_sets, kite_string_tangle, prepare, unigram_best, Arc, DecodeConfig, InputToken,
    Link, SeedOrder, TaggedSentence, TaggedWord,
};

/// Outcome of dependency tagging: either every position got a supertag
/// with all of its dependents, or the best partial hypothesis found.
#[derive(Debug, Clone, PartialEq)]
pub enum DependencyTagging {
    Complete(TaggedSentence),
    Partial(TaggedSentence),
}

impl DependencyTagging {
    pub fn is_complete(&self) -> bool {
        matches!(self, DependencyTagging::Complete(_))
    }

    pub fn sentence(&self) -> &TaggedSentence {
        match self {
            DependencyTagging::Complete(s) | DependencyTagging::Partial(s) => s,
        }
    }

    pub fn into_sentence(self) -> TaggedSentence {
        match self {
            DependencyTagging::Complete(s) | DependencyTagging::Partial(s) => s,
        }
    }
}

#[derive(Debug, Clone)]
struct Focus {
    position: usize,
    entry_index: usize,
    next_slot: usize,
    last_dependent: Option<usize>,
}

#[derive(Debug, Clone)]
struct Hypothesis {
    score: f64,
    seq: u64,
    tags: Vec<Option<SupertagId>>,
    head_of: Vec<Option<usize>>,
    links: Vec<Link>,
    processed: Vec<bool>,
    focus: Option<Focus>,
}

impl Hypothesis {
    fn is_complete(&self) -> bool {
        self.focus.is_none() && self.processed.iter().all(|&p| p)
    }

    /// Ranking for the fragment result: most positions satisfied, then
    /// most positions fixed, then score.
    fn partial_rank(&self) -> (usize, usize, f64) {
        let processed = self.processed.iter().filter(|&&p| p).count();
        let fixed = self.tags.iter().filter(|t| t.is_some()).count();
        (processed, fixed, self.score)
    }
}

struct Ranked(Hypothesis);

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.0.seq == other.0.seq
    }
}
impl Eq for Ranked {}
impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Max-heap: higher score first, earlier hypothesis on ties.
        self.0
            .score
            .total_cmp(&other.0.score)
            .then_with(|| other.0.seq.cmp(&self.0.seq))
    }
}

struct Search<'a> {
    words: &'a [TaggedWord],
    candidates: Vec<BTreeSet<SupertagId>>,
    table: &'a DependencyTable,
    unigram: &'a UnigramTable,
    config: &'a DecodeConfig,
    seq: u64,
}

/// Assigns one supertag per word by satisfying dependency requirements.
///
/// For each position and candidate supertag, the table's entry groups
/// (one per observed direction signature) describe which dependents to
/// look for and how far away. A slot is satisfied by locating the
/// ordinal-th word in the slot's direction whose candidate set contains
/// the dependent supertag; the new arc must not cross any existing arc,
/// and fixing a word's supertag adds its unigram log probability exactly
/// once. Entries whose dependent cannot be located are skipped.
pub fn dependency_tag(
    tokens: &[InputToken],
    grammar: &Grammar,
    table: &DependencyTable,
    unigram: &UnigramTable,
    config: &DecodeConfig,
) -> Result<DependencyTagging, GrammarError> {
    Ok(dependency_tag_prepared(
        prepare(tokens, grammar)?,
        table,
        unigram,
        config,
    ))
}

/// Same search over words whose candidate sets are already built.
pub fn dependency_tag_prepared(
    words: Vec<TaggedWord>,
    table: &DependencyTable,
    unigram: &UnigramTable,
    config: &DecodeConfig,
) -> DependencyTagging {
    if words.is_empty() {
        return DependencyTagging::Complete(TaggedSentence {
            words,
            links: Some(BTreeSet::new()),
            score: 0.0,
        });
    }
    let n = words.len();
    let mut search = Search {
        candidates: candidate_sets(&words),
        words: &words,
        table,
        unigram,
        config,
        seq: 0,
    };
    let root = Hypothesis {
        score: 0.0,
        seq: 0,
        tags: vec![None; n],
        head_of: vec![None; n],
        links: Vec::new(),
        processed: vec![false; n],
        focus: None,
    };
    let mut frontier = BinaryHeap::new();
    let mut best_partial = root.clone();
    let mut current = root;
    let mut extensions = 0usize;

    loop {
        if current.is_complete() {
            return DependencyTagging::Complete(search.to_sentence(current));
        }
        if current.partial_rank() > best_partial.partial_rank() {
            best_partial = current.clone();
        }
        if extensions >= search.config.hypothesis_budget {
            break;
        }
        extensions += 1;
        let mut children = search.expand(&current);
        children.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.seq.cmp(&b.seq)));
        let mut children = children.into_iter();
        match children.next() {
            Some(best) => {
                frontier.extend(children.map(Ranked));
                current = best;
            }
            // Dead end: back out to the best abandoned alternative.
            None => match frontier.pop() {
                Some(Ranked(hypothesis)) => current = hypothesis,
                None => break,
            },
        }
    }
    DependencyTagging::Partial(search.to_sentence(best_partial))
}

impl<'a> Search<'a> {
    fn expand(&mut self, hyp: &Hypothesis) -> Vec<Hypothesis> {
        match &hyp.focus {
            Some(focus) => self.expand_focus(hyp, &focus.clone()),
            None => self.expand_seed(hyp),
        }
    }

    /// Commits to the next position: branch over candidate supertags when
    /// the position is still open, then over the table's entry groups for
    /// the (part-of-speech, supertag) key.
    fn expand_seed(&mut self, hyp: &Hypothesis) -> Vec<Hypothesis> {
        let position = match self.next_position(hyp) {
            Some(p) => p,
            None => return Vec::new(),
        };
        let word = &self.words[position];
        let mut children = Vec::new();
        match &hyp.tags[position] {
            Some(tag) => {
                let tag = tag.clone();
                self.branch_entries(hyp, position, &tag, 0.0, &mut children);
            }
            None => {
                for tag in &self.candidates[position].clone() {
                    let gain = self
                        .unigram
                        .log_prob(&word.pos, tag, self.config.prob_floor);
                    self.branch_entries(hyp, position, tag, gain, &mut children);
                }
            }
        }
        children
    }

    fn branch_entries(
        &mut self,
        hyp: &Hypothesis,
        position: usize,
        tag: &SupertagId,
        gain: f64,
        children: &mut Vec<Hypothesis>,
    ) {
        let word = &self.words[position];
        let entries = self.table.entries_for(&word.pos, tag);
        let fix = |mut child: Hypothesis, seq: u64| -> Hypothesis {
            child.seq = seq;
            child.score += gain;
            child.tags[position] = Some(tag.clone());
            child
        };
        if entries.is_empty() {
            // Never observed as a head: no requirements to satisfy.
            self.seq += 1;
            let mut child = fix(hyp.clone(), self.seq);
            child.processed[position] = true;
            children.push(child);
            return;
        }
        for (entry_index, entry) in entries.iter().enumerate() {
            if !self.entry_feasible(hyp, position, entry) {
                continue;
            }
            self.seq += 1;
            let mut child = fix(hyp.clone(), self.seq);
            if entry.signature.is_empty() {
                child.processed[position] = true;
            } else {
                child.focus = Some(Focus {
                    position,
                    entry_index,
                    next_slot: 0,
                    last_dependent: None,
                });
            }
            children.push(child);
        }
    }

    /// Screens an entry at a position: every direction must offer at least
    /// as many distinct locatable, still-headless dependents as it has
    /// slots (crossings ignored). Heads are never released within a
    /// hypothesis's descendants, so entries that fail here can never
    /// complete and skipping them loses nothing.
    fn entry_feasible(&self, hyp: &Hypothesis, position: usize, entry: &DependencyEntry) -> bool {
        for direction in [LinkDirection::Left, LinkDirection::Right] {
            let need = entry
                .signature
                .directions()
                .iter()
                .filter(|&&d| d == direction)
                .count();
            if need == 0 {
                continue;
            }
            let mut targets = BTreeSet::new();
            for row in entry.rows_in(direction) {
                if let Some(w) = resolve_ordinal(
                    position,
                    direction,
                    row.magnitude(),
                    &row.dependent,
                    &self.candidates,
                    self.config.ordinal_mode,
                ) {
                    if hyp.head_of[w].is_none() {
                        targets.insert(w);
                    }
                }
            }
            if targets.len() < need {
                return false;
            }
        }
        true
    }

    /// A word may be fixed to a tag only if that tag can in turn satisfy
    /// some trained signature from the word's position.
    fn tag_viable(&self, hyp: &Hypothesis, position: usize, tag: &SupertagId) -> bool {
        let entries = self.table.entries_for(&self.words[position].pos, tag);
        entries.is_empty()
            || entries
                .iter()
                .any(|e| self.entry_feasible(hyp, position, e))
    }

    /// Satisfies the next slot of the focused signature: one child per
    /// locatable, non-crossing dependent row.
    fn expand_focus(&mut self, hyp: &Hypothesis, focus: &Focus) -> Vec<Hypothesis> {
        let position = focus.position;
        let word = &self.words[position];
        let tag = hyp.tags[position]
            .clone()
            .expect("focused position has a fixed tag");
        let entry = &self.table.entries_for(&word.pos, &tag)[focus.entry_index];
        let direction = entry.signature.directions()[focus.next_slot];
        let mut children = Vec::new();
        for row in entry.rows_in(direction) {
            let target = match resolve_ordinal(
                position,
                direction,
                row.magnitude(),
                &row.dependent,
                &self.candidates,
                self.config.ordinal_mode,
            ) {
                Some(t) => t,
                None => continue, // no such word: the entry is ignored
            };
            // Signature slots are listed in surface order, so fills must
            // advance left to right.
            if let Some(last) = focus.last_dependent {
                if target <= last {
                    continue;
                }
            }
            if hyp.head_of[target].is_some() {
                continue;
            }
            match &hyp.tags[target] {
                Some(existing) if *existing != row.dependent => continue,
                Some(_) => {}
                None => {
                    if !self.tag_viable(hyp, target, &row.dependent) {
                        continue;
                    }
                }
            }
            let arc = Arc::new(position, target);
            if hyp
                .links
                .iter()
                .any(|l| kite_string_tangle(arc, Arc::new(l.head, l.dependent)))
            {
                continue;
            }
            self.seq += 1;
            let mut child = hyp.clone();
            child.seq = self.seq;
            if child.tags[target].is_none() {
                child.tags[target] = Some(row.dependent.clone());
                child.score += self.unigram.log_prob(
                    &self.words[target].pos,
                    &row.dependent,
                    self.config.prob_floor,
                );
            }
            child.head_of[target] = Some(position);
            child.links.push(Link {
                head: position,
                dependent: target,
            });
            child.score += row.prob.ln();
            let next_slot = focus.next_slot + 1;
            if next_slot == entry.signature.len() {
                child.processed[position] = true;
                child.focus = None;
            } else {
                child.focus = Some(Focus {
                    position,
                    entry_index: focus.entry_index,
                    next_slot,
                    last_dependent: Some(target),
                });
            }
            children.push(child);
        }
        children
    }

    fn next_position(&self, hyp: &Hypothesis) -> Option<usize> {
        let open = (0..self.words.len()).filter(|&i| !hyp.processed[i]);
        match self.config.seed_order {
            SeedOrder::LeftToRight => open.min(),
            SeedOrder::BestUnigram => {
                let mut best: Option<(f64, usize)> = None;
                for i in open {
                    let confidence = match &hyp.tags[i] {
                        Some(tag) => self
                            .unigram
                            .prob(&self.words[i].pos, tag)
                            .unwrap_or(self.config.prob_floor),
                        None => unigram_best(
                            &self.words[i],
                            self.unigram,
                            self.config.prob_floor,
                        ),
                    };
                    let better = match best {
                        None => true,
                        Some((c, _)) => confidence > c,
                    };
                    if better {
                        best = Some((confidence, i));
                    }
                }
                best.map(|(_, i)| i)
            }
        }
    }

    fn to_sentence(&self, hyp: Hypothesis) -> TaggedSentence {
        let words = self
            .words
            .iter()
            .zip(&hyp.tags)
            .map(|(word, tag)| TaggedWord {
                form: word.form.clone(),
                pos: word.pos.clone(),
                candidates: word.candidates.clone(),
                chosen: tag.clone(),
            })
            .collect();
        TaggedSentence {
            words,
            links: Some(hyp.links.into_iter().collect()),
            score: hyp.score,
        }
    }
}
