//! Exact dynamic-programming decoder for the trigram model.

use crate::grammar::{Grammar, GrammarError, SupertagId};
use crate::tables::TrigramTable;

use super::{prepare, DecodeConfig, InputToken, TaggedSentence};

/// Finds the candidate-constrained supertag sequence maximizing
///
/// ```text
/// sum_i [ log P(T_i | T_{i-2}, T_{i-1}) + log P(pos_i | T_i) ]
///   + log P(end | T_{n-1}, T_n)
/// ```
///
/// with two start sentinels as left padding. The dynamic program is exact
/// over states (T_{i-1}, T_i); no pruning. Ties prefer the candidate that
/// sorts first.
pub fn trigram_tag(
    tokens: &[InputToken],
    grammar: &Grammar,
    table: &TrigramTable,
    config: &DecodeConfig,
) -> Result<TaggedSentence, GrammarError> {
    Ok(trigram_tag_prepared(prepare(tokens, grammar)?, table, config))
}

/// Same decoder over words whose candidate sets are already built.
pub fn trigram_tag_prepared(
    mut words: Vec<super::TaggedWord>,
    table: &TrigramTable,
    config: &DecodeConfig,
) -> TaggedSentence {
    if words.is_empty() {
        return TaggedSentence {
            words,
            links: None,
            score: 0.0,
        };
    }
    let floor = config.prob_floor;
    let bos = SupertagId::bos();
    let eos = SupertagId::eos();
    let candidates: Vec<Vec<SupertagId>> = words
        .iter()
        .map(|w| w.candidates.iter().cloned().collect())
        .collect();
    let n = words.len();

    // layer[p][c]: best score of any prefix ending in (candidate p at i-1,
    // candidate c at i). For i = 0 the previous tag is a start sentinel and
    // the layer is indexed [0][c].
    let mut layer: Vec<Vec<f64>> = vec![Vec::new(); 1];
    layer[0] = candidates[0]
        .iter()
        .map(|tag| {
            table.transition_log_prob(&bos, &bos, tag, floor)
                + table.emission_log_prob(tag, &words[0].pos, floor)
        })
        .collect();
    // back[i][p][c]: index of the best tag two positions back.
    let mut back: Vec<Vec<Vec<usize>>> = Vec::with_capacity(n);
    back.push(vec![vec![0; candidates[0].len()]]);

    for i in 1..n {
        let prev_cands = &candidates[i - 1];
        let cur_cands = &candidates[i];
        let mut next_layer = vec![vec![f64::NEG_INFINITY; cur_cands.len()]; prev_cands.len()];
        let mut next_back = vec![vec![0usize; cur_cands.len()]; prev_cands.len()];
        for (p, prev_tag) in prev_cands.iter().enumerate() {
            for (c, cur_tag) in cur_cands.iter().enumerate() {
                let emission = table.emission_log_prob(cur_tag, &words[i].pos, floor);
                let mut best = f64::NEG_INFINITY;
                let mut best_pp = 0usize;
                for (pp, score) in prev_prev_scores(&layer, p) {
                    let prev2_tag = if i == 1 { &bos } else { &candidates[i - 2][pp] };
                    let total = score
                        + table.transition_log_prob(prev2_tag, prev_tag, cur_tag, floor)
                        + emission;
                    if total > best {
                        best = total;
                        best_pp = pp;
                    }
                }
                next_layer[p][c] = best;
                next_back[p][c] = best_pp;
            }
        }
        layer = next_layer;
        back.push(next_back);
    }

    // Close the sequence with the end-sentinel transition.
    let mut best = f64::NEG_INFINITY;
    let mut best_state = (0usize, 0usize);
    for (p, row) in layer.iter().enumerate() {
        for (c, score) in row.iter().enumerate() {
            let prev_tag = if n == 1 { &bos } else { &candidates[n - 2][p] };
            let total = score
                + table.transition_log_prob(prev_tag, &candidates[n - 1][c], &eos, floor);
            if total > best {
                best = total;
                best_state = (p, c);
            }
        }
    }

    // Walk the backpointers.
    let mut chosen_indices = vec![0usize; n];
    let (mut p, mut c) = best_state;
    chosen_indices[n - 1] = c;
    if n >= 2 {
        chosen_indices[n - 2] = p;
        for i in (2..n).rev() {
            let pp = back[i][p][c];
            chosen_indices[i - 2] = pp;
            c = p;
            p = pp;
        }
    }
    for (i, word) in words.iter_mut().enumerate() {
        word.chosen = Some(candidates[i][chosen_indices[i]].clone());
    }
    TaggedSentence {
        words,
        links: None,
        score: best,
    }
}

/// Scores of layer states whose current tag is `p`, keyed by the tag two
/// positions back. The first layer has a single virtual predecessor.
fn prev_prev_scores(layer: &[Vec<f64>], p: usize) -> Vec<(usize, f64)> {
    if layer.len() == 1 {
        // First layer: indexed [0][current]; the predecessor is a sentinel.
        vec![(0, layer[0][p])]
    } else {
        layer.iter().enumerate().map(|(pp, row)| (pp, row[p])).collect()
    }
}
