//! Probability tables trained from derivation corpora: lexical-preference
//! (unigram), supertag-sequence (trigram + emission), and dependency
//! distance tables, plus their line-oriented file formats.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::corpus::{flatten, CorpusError, DerivationNode};
use crate::grammar::{Grammar, GrammarError, SupertagId};

pub const DEFAULT_SMOOTHING_K: f64 = 0.1;
pub const DEFAULT_PROB_FLOOR: f64 = 1e-6;

/// How dependency ordinals count intervening words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OrdinalMode {
    /// Count only words whose candidate set contains the dependent supertag.
    #[default]
    Candidate,
    /// Count every word on that side.
    Surface,
}

impl OrdinalMode {
    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "candidate" => Some(OrdinalMode::Candidate),
            "surface" => Some(OrdinalMode::Surface),
            _ => None,
        }
    }
}

impl fmt::Display for OrdinalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrdinalMode::Candidate => f.write_str("candidate"),
            OrdinalMode::Surface => f.write_str("surface"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TrainConfig {
    pub smoothing_k: f64,
    pub ordinal_mode: OrdinalMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            smoothing_k: DEFAULT_SMOOTHING_K,
            ordinal_mode: OrdinalMode::Candidate,
        }
    }
}

#[derive(Debug, Error)]
pub enum TableError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(
        "word `{word}` ({pos}): gold supertag {tag} is not in its own candidate set; \
         ordinals are undefined"
    )]
    GoldOutsideCandidates {
        word: String,
        pos: String,
        tag: SupertagId,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
}

// ---------------------------------------------------------------------------
// Unigram table
// ---------------------------------------------------------------------------

/// P(supertag | part-of-speech), trained as relative frequency.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UnigramTable {
    probs: BTreeMap<(String, SupertagId), f64>,
}

impl UnigramTable {
    pub fn prob(&self, pos: &str, tag: &SupertagId) -> Option<f64> {
        self.probs.get(&(pos.to_string(), tag.clone())).copied()
    }

    /// Log probability with the configured floor for unseen events.
    pub fn log_prob(&self, pos: &str, tag: &SupertagId, floor: f64) -> f64 {
        self.prob(pos, tag).unwrap_or(floor).ln()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(String, SupertagId), &f64)> {
        self.probs.iter()
    }

    pub fn serialize(&self) -> String {
        let mut out = String::from("# unigram table: u <pos> <supertag> <prob>\n");
        for ((pos, tag), prob) in &self.probs {
            out.push_str(&format!("u {pos} {tag} {prob}\n"));
        }
        out
    }

    pub fn parse(source: &str) -> Result<Self, TableError> {
        let mut probs = BTreeMap::new();
        for (line_no, fields) in records(source) {
            match fields.as_slice() {
                ["u", pos, tag, prob] => {
                    probs.insert(
                        (pos.to_string(), SupertagId::from(*tag)),
                        parse_prob(prob, line_no)?,
                    );
                }
                _ => {
                    return Err(TableError::Parse {
                        line: line_no,
                        message: "expected `u <pos> <supertag> <prob>`".to_string(),
                    })
                }
            }
        }
        Ok(UnigramTable { probs })
    }
}

/// Counts how often each part-of-speech anchors each supertag.
pub fn train_unigram(corpus: &[DerivationNode]) -> Result<UnigramTable, TableError> {
    if corpus.is_empty() {
        return Err(TableError::EmptyCorpus);
    }
    let mut counts: BTreeMap<(String, SupertagId), u64> = BTreeMap::new();
    let mut totals: BTreeMap<String, u64> = BTreeMap::new();
    for derivation in corpus {
        count_anchors(derivation, &mut counts, &mut totals);
    }
    let probs = counts
        .into_iter()
        .map(|((pos, tag), count)| {
            let total = totals[&pos];
            ((pos, tag), count as f64 / total as f64)
        })
        .collect();
    Ok(UnigramTable { probs })
}

fn count_anchors(
    node: &DerivationNode,
    counts: &mut BTreeMap<(String, SupertagId), u64>,
    totals: &mut BTreeMap<String, u64>,
) {
    *counts
        .entry((node.pos.clone(), node.supertag.clone()))
        .or_default() += 1;
    *totals.entry(node.pos.clone()).or_default() += 1;
    for child in &node.children {
        count_anchors(&child.node, counts, totals);
    }
}

// ---------------------------------------------------------------------------
// Trigram table
// ---------------------------------------------------------------------------

/// P(T_i | T_{i-2}, T_{i-1}) over gold supertag sequences padded with two
/// sentence-start sentinels and one sentence-end sentinel, plus
/// P(pos | supertag) emissions. Both are add-k smoothed over the observed
/// vocabulary.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrigramTable {
    transitions: BTreeMap<(SupertagId, SupertagId), BTreeMap<SupertagId, f64>>,
    emissions: BTreeMap<SupertagId, BTreeMap<String, f64>>,
}

impl TrigramTable {
    pub fn transition(&self, prev2: &SupertagId, prev1: &SupertagId, next: &SupertagId) -> Option<f64> {
        self.transitions
            .get(&(prev2.clone(), prev1.clone()))
            .and_then(|dist| dist.get(next))
            .copied()
    }

    pub fn transition_log_prob(
        &self,
        prev2: &SupertagId,
        prev1: &SupertagId,
        next: &SupertagId,
        floor: f64,
    ) -> f64 {
        self.transition(prev2, prev1, next).unwrap_or(floor).ln()
    }

    pub fn emission(&self, tag: &SupertagId, pos: &str) -> Option<f64> {
        self.emissions
            .get(tag)
            .and_then(|dist| dist.get(pos))
            .copied()
    }

    pub fn emission_log_prob(&self, tag: &SupertagId, pos: &str, floor: f64) -> f64 {
        self.emission(tag, pos).unwrap_or(floor).ln()
    }

    pub fn contexts(&self) -> usize {
        self.transitions.len()
    }

    pub fn transition_distributions(
        &self,
    ) -> impl Iterator<Item = (&(SupertagId, SupertagId), &BTreeMap<SupertagId, f64>)> {
        self.transitions.iter()
    }

    pub fn emission_distributions(
        &self,
    ) -> impl Iterator<Item = (&SupertagId, &BTreeMap<String, f64>)> {
        self.emissions.iter()
    }

    pub fn serialize(&self) -> String {
        let mut out = String::from(
            "# trigram table: t <prev2> <prev1> <next> <prob> / e <supertag> <pos> <prob>\n",
        );
        for ((prev2, prev1), dist) in &self.transitions {
            for (next, prob) in dist {
                out.push_str(&format!("t {prev2} {prev1} {next} {prob}\n"));
            }
        }
        for (tag, dist) in &self.emissions {
            for (pos, prob) in dist {
                out.push_str(&format!("e {tag} {pos} {prob}\n"));
            }
        }
        out
    }

    pub fn parse(source: &str) -> Result<Self, TableError> {
        let mut table = TrigramTable::default();
        for (line_no, fields) in records(source) {
            match fields.as_slice() {
                ["t", prev2, prev1, next, prob] => {
                    table
                        .transitions
                        .entry((SupertagId::from(*prev2), SupertagId::from(*prev1)))
                        .or_default()
                        .insert(SupertagId::from(*next), parse_prob(prob, line_no)?);
                }
                ["e", tag, pos, prob] => {
                    table
                        .emissions
                        .entry(SupertagId::from(*tag))
                        .or_default()
                        .insert(pos.to_string(), parse_prob(prob, line_no)?);
                }
                _ => {
                    return Err(TableError::Parse {
                        line: line_no,
                        message: "expected a `t` or `e` record".to_string(),
                    })
                }
            }
        }
        Ok(table)
    }
}

/// Trains transition and emission distributions from gold sequences.
pub fn train_trigram(
    corpus: &[DerivationNode],
    grammar: &Grammar,
    config: &TrainConfig,
) -> Result<TrigramTable, TableError> {
    if corpus.is_empty() {
        return Err(TableError::EmptyCorpus);
    }
    let bos = SupertagId::bos();
    let eos = SupertagId::eos();
    let mut transition_counts: BTreeMap<(SupertagId, SupertagId), BTreeMap<SupertagId, u64>> =
        BTreeMap::new();
    let mut emission_counts: BTreeMap<SupertagId, BTreeMap<String, u64>> = BTreeMap::new();
    let mut tag_vocab: BTreeSet<SupertagId> = BTreeSet::new();
    let mut pos_vocab: BTreeSet<String> = BTreeSet::new();

    for derivation in corpus {
        let flat = flatten(derivation, grammar)?;
        let mut context = (bos.clone(), bos.clone());
        for word in &flat.words {
            tag_vocab.insert(word.supertag.clone());
            pos_vocab.insert(word.pos.clone());
            *transition_counts
                .entry(context.clone())
                .or_default()
                .entry(word.supertag.clone())
                .or_default() += 1;
            *emission_counts
                .entry(word.supertag.clone())
                .or_default()
                .entry(word.pos.clone())
                .or_default() += 1;
            context = (context.1, word.supertag.clone());
        }
        *transition_counts
            .entry(context)
            .or_default()
            .entry(eos.clone())
            .or_default() += 1;
    }

    // Transition distributions range over every observed supertag plus the
    // end sentinel; emissions over every observed part-of-speech.
    let mut next_vocab = tag_vocab.clone();
    next_vocab.insert(eos);
    let k = config.smoothing_k;

    let transitions = transition_counts
        .into_iter()
        .map(|(context, counts)| {
            let total: u64 = counts.values().sum();
            let denom = total as f64 + k * next_vocab.len() as f64;
            let dist = next_vocab
                .iter()
                .filter_map(|tag| {
                    let count = counts.get(tag).copied().unwrap_or(0);
                    let p = (count as f64 + k) / denom;
                    (p > 0.0).then(|| (tag.clone(), p))
                })
                .collect();
            (context, dist)
        })
        .collect();

    let emissions = emission_counts
        .into_iter()
        .map(|(tag, counts)| {
            let total: u64 = counts.values().sum();
            let denom = total as f64 + k * pos_vocab.len() as f64;
            let dist = pos_vocab
                .iter()
                .filter_map(|pos| {
                    let count = counts.get(pos).copied().unwrap_or(0);
                    let p = (count as f64 + k) / denom;
                    (p > 0.0).then(|| (pos.clone(), p))
                })
                .collect();
            (tag, dist)
        })
        .collect();

    Ok(TrigramTable {
        transitions,
        emissions,
    })
}

// ---------------------------------------------------------------------------
// Dependency table
// ---------------------------------------------------------------------------

/// Side of a dependent relative to its head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LinkDirection {
    Left,
    Right,
}

impl fmt::Display for LinkDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinkDirection::Left => f.write_str("-"),
            LinkDirection::Right => f.write_str("+"),
        }
    }
}

/// The left/right pattern of a supertag's dependents, in surface order.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Signature(Vec<LinkDirection>);

impl Signature {
    pub fn new(directions: Vec<LinkDirection>) -> Self {
        Signature(directions)
    }

    pub fn empty() -> Self {
        Signature(Vec::new())
    }

    pub fn directions(&self) -> &[LinkDirection] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn parse(text: &str) -> Option<Self> {
        let inner = text.strip_prefix('(')?.strip_suffix(')')?;
        if inner.is_empty() {
            return Some(Signature::empty());
        }
        let mut directions = Vec::new();
        for part in inner.split(',') {
            match part {
                "-" => directions.push(LinkDirection::Left),
                "+" => directions.push(LinkDirection::Right),
                _ => return None,
            }
        }
        Some(Signature(directions))
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts = self
            .0
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(",");
        write!(f, "({parts})")
    }
}

/// One dependent alternative: which supertag, at which signed ordinal
/// position (sign = direction, magnitude = outward rank), how likely.
#[derive(Debug, Clone, PartialEq)]
pub struct DependencyRow {
    pub dependent: SupertagId,
    pub ordinal: i32,
    pub prob: f64,
}

impl DependencyRow {
    pub fn direction(&self) -> LinkDirection {
        if self.ordinal < 0 {
            LinkDirection::Left
        } else {
            LinkDirection::Right
        }
    }

    pub fn magnitude(&self) -> u32 {
        self.ordinal.unsigned_abs()
    }
}

/// All rows filed under one (part-of-speech, supertag, signature) key.
/// Row probabilities are normalized per direction within the entry.
#[derive(Debug, Clone, PartialEq)]
pub struct DependencyEntry {
    pub pos: String,
    pub supertag: SupertagId,
    pub signature: Signature,
    pub rows: Vec<DependencyRow>,
}

impl DependencyEntry {
    pub fn rows_in(&self, direction: LinkDirection) -> impl Iterator<Item = &DependencyRow> {
        self.rows.iter().filter(move |r| r.direction() == direction)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DependencyTable {
    entries: BTreeMap<(String, SupertagId), Vec<DependencyEntry>>,
}

impl DependencyTable {
    /// Entry groups for a key, one per observed signature. Empty when the
    /// key was never seen in training.
    pub fn entries_for(&self, pos: &str, tag: &SupertagId) -> &[DependencyEntry] {
        self.entries
            .get(&(pos.to_string(), tag.clone()))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn entries(&self) -> impl Iterator<Item = &DependencyEntry> {
        self.entries.values().flatten()
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn serialize(&self) -> String {
        let mut out = String::from(
            "# dependency table: sig <pos> <supertag> <signature> / \
             d <pos> <supertag> <signature> <dependent> <ordinal> <prob>\n",
        );
        for entry in self.entries() {
            out.push_str(&format!(
                "sig {} {} {}\n",
                entry.pos, entry.supertag, entry.signature
            ));
            for row in &entry.rows {
                out.push_str(&format!(
                    "d {} {} {} {} {} {}\n",
                    entry.pos, entry.supertag, entry.signature, row.dependent, row.ordinal, row.prob
                ));
            }
        }
        out
    }

    pub fn parse(source: &str) -> Result<Self, TableError> {
        let mut table = DependencyTable::default();
        for (line_no, fields) in records(source) {
            match fields.as_slice() {
                ["sig", pos, tag, sig] => {
                    let signature = Signature::parse(sig).ok_or_else(|| TableError::Parse {
                        line: line_no,
                        message: format!("malformed signature `{sig}`"),
                    })?;
                    table.group_mut(pos, tag, signature);
                }
                ["d", pos, tag, sig, dependent, ordinal, prob] => {
                    let signature = Signature::parse(sig).ok_or_else(|| TableError::Parse {
                        line: line_no,
                        message: format!("malformed signature `{sig}`"),
                    })?;
                    let ordinal: i32 =
                        ordinal.parse().map_err(|_| TableError::Parse {
                            line: line_no,
                            message: format!("malformed ordinal `{ordinal}`"),
                        })?;
                    if ordinal == 0 {
                        return Err(TableError::Parse {
                            line: line_no,
                            message: "ordinal must be nonzero".to_string(),
                        });
                    }
                    let prob = parse_prob(prob, line_no)?;
                    table.group_mut(pos, tag, signature).rows.push(DependencyRow {
                        dependent: SupertagId::from(*dependent),
                        ordinal,
                        prob,
                    });
                }
                _ => {
                    return Err(TableError::Parse {
                        line: line_no,
                        message: "expected a `sig` or `d` record".to_string(),
                    })
                }
            }
        }
        Ok(table)
    }

    fn group_mut(&mut self, pos: &str, tag: &str, signature: Signature) -> &mut DependencyEntry {
        let groups = self
            .entries
            .entry((pos.to_string(), SupertagId::from(tag)))
            .or_default();
        if let Some(idx) = groups.iter().position(|g| g.signature == signature) {
            return &mut groups[idx];
        }
        groups.push(DependencyEntry {
            pos: pos.to_string(),
            supertag: SupertagId::from(tag),
            signature,
            rows: Vec::new(),
        });
        groups.last_mut().unwrap()
    }
}

/// Rank of `dep` counted outward from `head`, restricted in candidate mode
/// to words whose candidate set contains `tag`. `None` when the rank is
/// undefined (the dependent itself never matches the scan).
pub fn ordinal_of(
    head: usize,
    dep: usize,
    tag: &SupertagId,
    candidates: &[BTreeSet<SupertagId>],
    mode: OrdinalMode,
) -> Option<u32> {
    let mut rank = 0u32;
    let positions: Box<dyn Iterator<Item = usize>> = if dep < head {
        Box::new((0..head).rev())
    } else {
        Box::new(head + 1..candidates.len())
    };
    for w in positions {
        let counts = match mode {
            OrdinalMode::Candidate => candidates[w].contains(tag),
            OrdinalMode::Surface => true,
        };
        if counts {
            rank += 1;
            if w == dep {
                return Some(rank);
            }
        } else if w == dep {
            return None;
        }
    }
    None
}

/// Position of the `ordinal`-th word in `direction` from `head` whose
/// candidate set contains `tag` (candidate mode) or at that surface
/// distance (surface mode). `None` when the sentence runs out first.
pub fn resolve_ordinal(
    head: usize,
    direction: LinkDirection,
    ordinal: u32,
    tag: &SupertagId,
    candidates: &[BTreeSet<SupertagId>],
    mode: OrdinalMode,
) -> Option<usize> {
    let positions: Box<dyn Iterator<Item = usize>> = match direction {
        LinkDirection::Left => Box::new((0..head).rev()),
        LinkDirection::Right => Box::new(head + 1..candidates.len()),
    };
    let mut rank = 0u32;
    for w in positions {
        let counts = match mode {
            OrdinalMode::Candidate => candidates[w].contains(tag),
            OrdinalMode::Surface => true,
        };
        if counts {
            rank += 1;
            if rank == ordinal {
                return Some(w);
            }
        }
    }
    None
}

/// Extracts dependency signatures and ordinal rows from gold derivations.
/// Ordinals are counted over the same candidate sets the decoder will see,
/// so training and decoding agree on what an ordinal means.
pub fn train_dependency(
    corpus: &[DerivationNode],
    grammar: &Grammar,
    config: &TrainConfig,
) -> Result<DependencyTable, TableError> {
    if corpus.is_empty() {
        return Err(TableError::EmptyCorpus);
    }
    type RowKey = (LinkDirection, SupertagId, u32);
    let mut counts: BTreeMap<(String, SupertagId, Signature), BTreeMap<RowKey, u64>> =
        BTreeMap::new();

    for derivation in corpus {
        let flat = flatten(derivation, grammar)?;
        let candidates: Vec<BTreeSet<SupertagId>> = flat
            .words
            .iter()
            .map(|w| Ok(grammar.candidates(&w.form, &w.pos)?.clone()))
            .collect::<Result<_, GrammarError>>()?;
        let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); flat.words.len()];
        for link in &flat.links {
            dependents[link.head].push(link.dependent);
        }
        for (head, deps) in dependents.iter_mut().enumerate() {
            deps.sort_unstable();
            let head_word = &flat.words[head];
            let signature = Signature::new(
                deps.iter()
                    .map(|&d| {
                        if d < head {
                            LinkDirection::Left
                        } else {
                            LinkDirection::Right
                        }
                    })
                    .collect(),
            );
            let group = counts
                .entry((
                    head_word.pos.clone(),
                    head_word.supertag.clone(),
                    signature,
                ))
                .or_default();
            for &dep in deps.iter() {
                let dep_word = &flat.words[dep];
                let direction = if dep < head {
                    LinkDirection::Left
                } else {
                    LinkDirection::Right
                };
                let ordinal = ordinal_of(
                    head,
                    dep,
                    &dep_word.supertag,
                    &candidates,
                    config.ordinal_mode,
                )
                .ok_or_else(|| TableError::GoldOutsideCandidates {
                    word: dep_word.form.clone(),
                    pos: dep_word.pos.clone(),
                    tag: dep_word.supertag.clone(),
                })?;
                *group
                    .entry((direction, dep_word.supertag.clone(), ordinal))
                    .or_default() += 1;
            }
        }
    }

    let mut table = DependencyTable::default();
    for ((pos, tag, signature), rows) in counts {
        let mut totals: BTreeMap<LinkDirection, u64> = BTreeMap::new();
        for ((direction, _, _), count) in &rows {
            *totals.entry(*direction).or_default() += count;
        }
        let entry = table.group_mut(&pos, tag.as_str(), signature);
        for ((direction, dependent, magnitude), count) in rows {
            let total = totals[&direction];
            let signed = match direction {
                LinkDirection::Left => -(magnitude as i32),
                LinkDirection::Right => magnitude as i32,
            };
            entry.rows.push(DependencyRow {
                dependent,
                ordinal: signed,
                prob: count as f64 / total as f64,
            });
        }
    }
    Ok(table)
}

// ---------------------------------------------------------------------------
// Shared parsing helpers
// ---------------------------------------------------------------------------

fn records(source: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    source.lines().enumerate().filter_map(|(idx, raw)| {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            None
        } else {
            Some((idx + 1, line.split_whitespace().collect()))
        }
    })
}

fn parse_prob(text: &str, line: usize) -> Result<f64, TableError> {
    let value: f64 = text.parse().map_err(|_| TableError::Parse {
        line,
        message: format!("malformed probability `{text}`"),
    })?;
    if !(0.0..=1.0).contains(&value) {
        return Err(TableError::Parse {
            line,
            message: format!("probability {value} outside [0, 1]"),
        });
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_corpus;

    const TOY_GRAMMAR: &str = include_str!("../../../data/toy.grammar");
    const TOY_CORPUS: &str = include_str!("../../../data/toy.corpus");

    fn toy() -> (Grammar, Vec<DerivationNode>) {
        let grammar = Grammar::parse(TOY_GRAMMAR).unwrap();
        let corpus = parse_corpus(TOY_CORPUS, &grammar).unwrap();
        (grammar, corpus)
    }

    #[test]
    fn unigram_counts_relative_frequencies() {
        let (_, corpus) = toy();
        let table = train_unigram(&corpus).unwrap();
        // Four verb tokens, all anchored by alpha_2.
        assert_eq!(table.prob("V", &SupertagId::from("alpha_2")), Some(1.0));
        // Twelve noun tokens, four each.
        let third = 4.0 / 12.0;
        for tag in ["alpha_8", "alpha_4", "alpha_6"] {
            let p = table.prob("N", &SupertagId::from(tag)).unwrap();
            assert!((p - third).abs() < 1e-12);
        }
        assert_eq!(table.prob("N", &SupertagId::from("beta_2")), None);
    }

    #[test]
    fn unigram_distributions_sum_to_one_per_pos() {
        let (_, corpus) = toy();
        let table = train_unigram(&corpus).unwrap();
        let mut sums: BTreeMap<&str, f64> = BTreeMap::new();
        for ((pos, _), prob) in table.iter() {
            *sums.entry(pos).or_default() += prob;
        }
        for (pos, sum) in sums {
            assert!((sum - 1.0).abs() < 1e-9, "{pos} sums to {sum}");
        }
    }

    #[test]
    fn single_token_corpus_gives_probability_one() {
        let (grammar, _) = toy();
        let corpus = parse_corpus("(alpha_8 John N)", &grammar).unwrap();
        let table = train_unigram(&corpus).unwrap();
        assert_eq!(table.prob("N", &SupertagId::from("alpha_8")), Some(1.0));
    }

    #[test]
    fn empty_corpus_is_rejected_by_all_trainers() {
        let (grammar, _) = toy();
        let config = TrainConfig::default();
        assert!(matches!(train_unigram(&[]), Err(TableError::EmptyCorpus)));
        assert!(matches!(
            train_trigram(&[], &grammar, &config),
            Err(TableError::EmptyCorpus)
        ));
        assert!(matches!(
            train_dependency(&[], &grammar, &config),
            Err(TableError::EmptyCorpus)
        ));
    }

    #[test]
    fn trigram_counts_single_sentence_paths() {
        let (grammar, _) = toy();
        // Two-word derivation: John's tree substitutes into the
        // intransitive verb tree.
        let corpus = parse_corpus(
            "(alpha_9 saw V (sub 1 (alpha_8 John N)))",
            &grammar,
        )
        .unwrap();
        let config = TrainConfig {
            smoothing_k: 0.0,
            ..TrainConfig::default()
        };
        let table = train_trigram(&corpus, &grammar, &config).unwrap();
        let bos = SupertagId::bos();
        let eos = SupertagId::eos();
        let john = SupertagId::from("alpha_8");
        let saw = SupertagId::from("alpha_9");
        assert_eq!(table.transition(&bos, &bos, &john), Some(1.0));
        assert_eq!(table.transition(&bos, &john, &saw), Some(1.0));
        assert_eq!(table.transition(&john, &saw, &eos), Some(1.0));
        assert_eq!(table.emission(&saw, "V"), Some(1.0));
    }

    #[test]
    fn trigram_distributions_sum_to_one_after_smoothing() {
        let (grammar, corpus) = toy();
        let table = train_trigram(&corpus, &grammar, &TrainConfig::default()).unwrap();
        for (context, dist) in table.transition_distributions() {
            let sum: f64 = dist.values().sum();
            assert!((sum - 1.0).abs() < 1e-9, "{context:?} sums to {sum}");
        }
        for (tag, dist) in table.emission_distributions() {
            let sum: f64 = dist.values().sum();
            assert!((sum - 1.0).abs() < 1e-9, "{tag} emissions sum to {sum}");
        }
    }

    #[test]
    fn dependency_rows_match_hand_counts() {
        let (grammar, corpus) = toy();
        let table = train_dependency(&corpus, &grammar, &TrainConfig::default()).unwrap();
        let verb = table.entries_for("V", &SupertagId::from("alpha_2"));
        assert_eq!(verb.len(), 1, "one signature for the transitive verb");
        let entry = &verb[0];
        assert_eq!(entry.signature.to_string(), "(-,+,+)");
        let left: Vec<_> = entry.rows_in(LinkDirection::Left).collect();
        let right: Vec<_> = entry.rows_in(LinkDirection::Right).collect();
        // Left: subject at ordinal -1; John's tree three times, man's once.
        assert_eq!(left.len(), 2);
        let john = left
            .iter()
            .find(|r| r.dependent.as_str() == "alpha_8")
            .unwrap();
        assert!((john.prob - 0.75).abs() < 1e-12);
        assert_eq!(john.ordinal, -1);
        // Right: object and prepositional modifier.
        let pp = right
            .iter()
            .find(|r| r.dependent.as_str() == "beta_8")
            .unwrap();
        assert!((pp.prob - 0.5).abs() < 1e-12);
        assert_eq!(pp.ordinal, 1);
    }

    #[test]
    fn dependency_probability_reflects_occurrence_fraction() {
        // The transitive verb takes its subject tree on the left at
        // ordinal 1 in 30% of its occurrences; the entry's probability is
        // exactly that fraction.
        let (grammar, _) = toy();
        let john_subject = "(alpha_2 saw V (sub 1 (alpha_8 John N)) \
                            (sub 2.2 (alpha_4 man N (sub 1 (alpha_3 a D)))))";
        let man_subject = "(alpha_2 saw V (sub 1 (alpha_4 man N (sub 1 (alpha_3 a D)))) \
                           (sub 2.2 (alpha_8 John N)))";
        let mut source = String::new();
        for _ in 0..3 {
            source.push_str(john_subject);
            source.push('\n');
        }
        for _ in 0..7 {
            source.push_str(man_subject);
            source.push('\n');
        }
        let corpus = parse_corpus(&source, &grammar).unwrap();
        let table = train_dependency(&corpus, &grammar, &TrainConfig::default()).unwrap();
        let entries = table.entries_for("V", &SupertagId::from("alpha_2"));
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].signature.to_string(), "(-,+)");
        let row = entries[0]
            .rows
            .iter()
            .find(|r| r.dependent.as_str() == "alpha_8" && r.ordinal == -1)
            .unwrap();
        assert!((row.prob - 0.300).abs() < 1e-12, "got {}", row.prob);
    }

    #[test]
    fn dependency_leaves_record_empty_signatures() {
        let (grammar, corpus) = toy();
        let table = train_dependency(&corpus, &grammar, &TrainConfig::default()).unwrap();
        let dets = table.entries_for("D", &SupertagId::from("alpha_3"));
        assert_eq!(dets.len(), 1);
        assert!(dets[0].signature.is_empty());
        assert!(dets[0].rows.is_empty());
    }

    #[test]
    fn dependency_per_direction_probabilities_sum_to_one() {
        let (grammar, corpus) = toy();
        let table = train_dependency(&corpus, &grammar, &TrainConfig::default()).unwrap();
        for entry in table.entries() {
            for direction in [LinkDirection::Left, LinkDirection::Right] {
                let sum: f64 = entry.rows_in(direction).map(|r| r.prob).sum();
                if entry.signature.directions().contains(&direction) {
                    assert!(
                        (sum - 1.0).abs() < 1e-9,
                        "{} {} {} sums to {sum}",
                        entry.pos,
                        entry.supertag,
                        entry.signature
                    );
                }
            }
        }
    }

    #[test]
    fn trainers_are_order_independent() {
        let (grammar, corpus) = toy();
        let mut reversed = corpus.clone();
        reversed.reverse();
        let config = TrainConfig::default();
        assert_eq!(
            train_unigram(&corpus).unwrap(),
            train_unigram(&reversed).unwrap()
        );
        assert_eq!(
            train_trigram(&corpus, &grammar, &config).unwrap(),
            train_trigram(&reversed, &grammar, &config).unwrap()
        );
        assert_eq!(
            train_dependency(&corpus, &grammar, &config).unwrap(),
            train_dependency(&reversed, &grammar, &config).unwrap()
        );
    }

    #[test]
    fn tables_round_trip_through_files() {
        let (grammar, corpus) = toy();
        let config = TrainConfig::default();
        let unigram = train_unigram(&corpus).unwrap();
        assert_eq!(UnigramTable::parse(&unigram.serialize()).unwrap(), unigram);
        let trigram = train_trigram(&corpus, &grammar, &config).unwrap();
        assert_eq!(TrigramTable::parse(&trigram.serialize()).unwrap(), trigram);
        let dependency = train_dependency(&corpus, &grammar, &config).unwrap();
        assert_eq!(
            DependencyTable::parse(&dependency.serialize()).unwrap(),
            dependency
        );
    }

    #[test]
    fn ordinal_resolution_skips_non_candidates() {
        let (grammar, corpus) = toy();
        let flat = flatten(&corpus[0], &grammar).unwrap();
        let candidates: Vec<BTreeSet<SupertagId>> = flat
            .words
            .iter()
            .map(|w| grammar.candidates(&w.form, &w.pos).unwrap().clone())
            .collect();
        // From `saw` (position 1), the first word to the right whose set
        // contains alpha_4 is `man` (position 3), skipping `a`.
        let tag = SupertagId::from("alpha_4");
        assert_eq!(
            resolve_ordinal(1, LinkDirection::Right, 1, &tag, &candidates, OrdinalMode::Candidate),
            Some(3)
        );
        assert_eq!(
            ordinal_of(1, 3, &tag, &candidates, OrdinalMode::Candidate),
            Some(1)
        );
        // Surface mode counts every word: `man` is the second word right.
        assert_eq!(
            ordinal_of(1, 3, &tag, &candidates, OrdinalMode::Surface),
            Some(2)
        );
        assert_eq!(
            resolve_ordinal(1, LinkDirection::Right, 2, &tag, &candidates, OrdinalMode::Surface),
            Some(3)
        );
    }
}
