//! Supertagging toolkit for lexicalized tree-adjoining grammars.
//!
//! Each word of a sentence anchors a set of elementary trees (supertags);
//! picking the right one per word almost parses the sentence, leaving only
//! the combining operations to run. This crate provides:
//!
//! - [`grammar`]: elementary tree templates and the syntactic lexicon;
//! - [`corpus`]: derivation-tree corpora and their dependency flattening;
//! - [`tables`]: unigram, trigram, and dependency tables with trainers;
//! - [`models`]: the three disambiguation models;
//! - [`stitcher`]: reassembly of tagged, linked sentences into derivations;
//! - [`eval`]: evaluation protocols and a seeded corpus generator.

pub mod corpus;
pub mod eval;
pub mod grammar;
pub mod models;
pub mod stitcher;
pub mod tables;

pub use corpus::{
    flatten, parse_corpus, serialize_corpus, serialize_derivation, CorpusError, DependencyLink,
    DerivationChild, DerivationNode, FlatSentence, FlatWord, Operation,
};
pub use eval::{
    dependency_scores, generate_corpus, supertag_accuracy, topn_success, DependencyScores,
    EvalError, GenConfig, GenError, TopnCriterion,
};
pub use grammar::{
    Grammar, GrammarError, GornAddress, Lexicon, NodeMark, SupertagId, TemplateKind, TreeNode,
    TreeTemplate,
};
pub use models::{
    dependency_tag, dependency_tag_prepared, kite_string_tangle, prepare, trigram_tag,
    trigram_tag_prepared, unigram_rankings, unigram_tag, unigram_tag_prepared, Arc, DecodeConfig,
    DependencyTagging, InputToken, Link, SeedOrder, TaggedSentence, TaggedWord,
};
pub use stitcher::{ambiguity_reduction, stitch, StitchError, StitchOutput};
pub use tables::{
    train_dependency, train_trigram, train_unigram, DependencyEntry, DependencyRow,
    DependencyTable, LinkDirection, OrdinalMode, Signature, TableError, TrainConfig, TrigramTable,
    UnigramTable, DEFAULT_PROB_FLOOR, DEFAULT_SMOOTHING_K,
};
