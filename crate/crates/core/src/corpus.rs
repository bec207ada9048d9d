//! Derivation-tree corpora: reading, writing, validation, and the
//! flattening of derivations into dependency-linked sentences.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::grammar::{self, GornAddress, Grammar, NodeMark, SupertagId, TemplateKind, TreeNode};

/// How one elementary tree attaches into another.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Operation {
    Substitution,
    Adjunction,
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operation::Substitution => f.write_str("sub"),
            Operation::Adjunction => f.write_str("adj"),
        }
    }
}

/// An attachment of a child derivation into its parent's template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivationChild {
    pub operation: Operation,
    pub address: GornAddress,
    pub node: DerivationNode,
    /// Set by the stitcher when the attachment address was not uniquely
    /// determined by labels. Parsed corpora always carry `false`.
    pub ambiguous: bool,
}

/// A node of a derivation tree: one anchored elementary tree plus the
/// attachments made into it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivationNode {
    pub supertag: SupertagId,
    pub word: String,
    pub pos: String,
    pub children: Vec<DerivationChild>,
}

/// One word of a flattened sentence with its gold supertag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatWord {
    pub form: String,
    pub pos: String,
    pub supertag: SupertagId,
}

/// A head → dependent arc induced by a substitution or adjunction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct DependencyLink {
    pub head: usize,
    pub dependent: usize,
    pub operation: Operation,
    pub address: GornAddress,
}

/// A derivation flattened to surface order: words with gold supertags and
/// the dependency graph induced by the attachments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatSentence {
    pub words: Vec<FlatWord>,
    pub links: BTreeSet<DependencyLink>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("derivation node {supertag}[{word}]: {message}")]
    Invalid {
        supertag: SupertagId,
        word: String,
        message: String,
    },
    #[error(transparent)]
    Grammar(#[from] grammar::GrammarError),
}

impl DerivationNode {
    /// Validates the node and its descendants against the grammar:
    /// addresses must resolve, substitution targets substitution sites with
    /// initial trees, adjunction targets interior nodes with auxiliary
    /// trees, labels must match, and no address is used twice. Children
    /// are reordered into canonical (address-sorted) order.
    pub fn validate(&mut self, grammar: &Grammar) -> Result<(), CorpusError> {
        let fail = |message: String| CorpusError::Invalid {
            supertag: self.supertag.clone(),
            word: self.word.clone(),
            message,
        };
        let template = grammar
            .template(&self.supertag)
            .ok_or_else(|| fail("unknown template".to_string()))?;
        let mut used: BTreeSet<&GornAddress> = BTreeSet::new();
        for child in &mut self.children {
            let target = template
                .node_at(&child.address)
                .ok_or_else(|| fail(format!("no node at address {}", child.address)))?;
            let child_template = grammar
                .template(&child.node.supertag)
                .ok_or_else(|| fail(format!("unknown template {}", child.node.supertag)))?;
            match child.operation {
                Operation::Substitution => {
                    if target.mark != NodeMark::SubstitutionSite {
                        return Err(fail(format!(
                            "substitution of {} at {} which is not a substitution site",
                            child.node.supertag, child.address
                        )));
                    }
                    if child_template.kind != TemplateKind::Initial {
                        return Err(fail(format!(
                            "substitution of auxiliary tree {}",
                            child.node.supertag
                        )));
                    }
                }
                Operation::Adjunction => {
                    if target.mark != NodeMark::Internal {
                        return Err(fail(format!(
                            "adjunction of {} at {} which is not an interior node",
                            child.node.supertag, child.address
                        )));
                    }
                    if child_template.kind != TemplateKind::Auxiliary {
                        return Err(fail(format!(
                            "adjunction of initial tree {}",
                            child.node.supertag
                        )));
                    }
                }
            }
            if child_template.root.label != target.label {
                return Err(fail(format!(
                    "root label {} of {} does not match node label {} at {}",
                    child_template.root.label, child.node.supertag, target.label, child.address
                )));
            }
            if !used.insert(&child.address) {
                return Err(fail(format!("address {} used twice", child.address)));
            }
        }
        self.children.sort_by(|a, b| a.address.cmp(&b.address));
        for child in &mut self.children {
            child.node.validate(grammar)?;
        }
        Ok(())
    }

    /// True when every substitution site of every template in the
    /// derivation is filled.
    pub fn is_complete(&self, grammar: &Grammar) -> bool {
        let template = match grammar.template(&self.supertag) {
            Some(t) => t,
            None => return false,
        };
        for site in template.substitution_sites() {
            let filled = self.children.iter().any(|c| {
                c.operation == Operation::Substitution && c.address == site.address
            });
            if !filled {
                return false;
            }
        }
        self.children.iter().all(|c| c.node.is_complete(grammar))
    }

    /// Number of derivation nodes (anchored words).
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(|c| c.node.size()).sum::<usize>()
    }

}

/// Parses a corpus: one parenthesized derivation per line, expressions may
/// span lines until their parentheses balance. `#` starts a comment.
pub fn parse_corpus(source: &str, grammar: &Grammar) -> Result<Vec<DerivationNode>, CorpusError> {
    let mut derivations = Vec::new();
    let mut buffer = String::new();
    let mut start_line = 0;
    for (idx, raw) in source.lines().enumerate() {
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if buffer.is_empty() {
            start_line = idx + 1;
        }
        buffer.push(' ');
        buffer.push_str(line);
        if balanced(&buffer) {
            let tokens = grammar::tokenize(&buffer);
            let mut pos = 0;
            let mut node = parse_derivation(&tokens, &mut pos, start_line)?;
            if pos != tokens.len() {
                return Err(CorpusError::Parse {
                    line: start_line,
                    message: "trailing input after derivation".to_string(),
                });
            }
            node.validate(grammar)?;
            derivations.push(node);
            buffer.clear();
        }
    }
    if !buffer.is_empty() {
        return Err(CorpusError::Parse {
            line: start_line,
            message: "unterminated derivation expression".to_string(),
        });
    }
    Ok(derivations)
}

/// Writes one derivation in the corpus line format.
pub fn serialize_derivation(node: &DerivationNode) -> String {
    let mut out = String::new();
    write_derivation(node, &mut out);
    out
}

/// Writes a whole corpus, one derivation per line.
pub fn serialize_corpus(corpus: &[DerivationNode]) -> String {
    let mut out = String::new();
    for node in corpus {
        write_derivation(node, &mut out);
        out.push('\n');
    }
    out
}

fn write_derivation(node: &DerivationNode, out: &mut String) {
    out.push('(');
    out.push_str(node.supertag.as_str());
    out.push(' ');
    out.push_str(&node.word);
    out.push(' ');
    out.push_str(&node.pos);
    for child in &node.children {
        out.push_str(&format!(" ({} {} ", child.operation, child.address));
        write_derivation(&child.node, out);
        out.push(')');
    }
    out.push(')');
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn balanced(text: &str) -> bool {
    let mut depth: i64 = 0;
    let mut seen = false;
    for c in text.chars() {
        match c {
            '(' => {
                depth += 1;
                seen = true;
            }
            ')' => depth -= 1,
            _ => {}
        }
        if depth < 0 {
            return true;
        }
    }
    seen && depth == 0
}

fn parse_derivation(
    tokens: &[String],
    pos: &mut usize,
    line: usize,
) -> Result<DerivationNode, CorpusError> {
    let fail = |message: String| CorpusError::Parse { line, message };
    if tokens.get(*pos).map(String::as_str) != Some("(") {
        return Err(fail("expected `(`".to_string()));
    }
    *pos += 1;
    let mut symbol = |what: &str| -> Result<String, CorpusError> {
        let token = tokens
            .get(*pos)
            .filter(|t| *t != "(" && *t != ")")
            .ok_or_else(|| CorpusError::Parse {
                line,
                message: format!("expected {what}"),
            })?;
        *pos += 1;
        Ok(token.clone())
    };
    let supertag = SupertagId::new(symbol("a supertag name")?);
    let word = symbol("a word form")?;
    let pos_tag = symbol("a part-of-speech")?;
    let mut children = Vec::new();
    loop {
        match tokens.get(*pos).map(String::as_str) {
            Some(")") => {
                *pos += 1;
                break;
            }
            Some("(") => {
                *pos += 1;
                let operation = match tokens.get(*pos).map(String::as_str) {
                    Some("sub") => Operation::Substitution,
                    Some("adj") => Operation::Adjunction,
                    other => {
                        return Err(fail(format!(
                            "expected `sub` or `adj`, found {:?}",
                            other.unwrap_or("<end>")
                        )))
                    }
                };
                *pos += 1;
                let address_text = tokens
                    .get(*pos)
                    .filter(|t| *t != "(" && *t != ")")
                    .ok_or_else(|| CorpusError::Parse {
                        line,
                        message: "expected a tree address".to_string(),
                    })?
                    .clone();
                *pos += 1;
                let address = GornAddress::parse(&address_text).map_err(|_| {
                    CorpusError::Parse {
                        line,
                        message: format!("malformed tree address `{address_text}`"),
                    }
                })?;
                let node = parse_derivation(tokens, pos, line)?;
                if tokens.get(*pos).map(String::as_str) != Some(")") {
                    return Err(fail("expected `)` after attachment".to_string()));
                }
                *pos += 1;
                children.push(DerivationChild {
                    operation,
                    address,
                    node,
                    ambiguous: false,
                });
            }
            Some(other) => {
                return Err(fail(format!("unexpected token `{other}` in derivation")))
            }
            None => return Err(fail("unterminated derivation expression".to_string())),
        }
    }
    Ok(DerivationNode {
        supertag,
        word,
        pos: pos_tag,
        children,
    })
}

/// The derived tree reduced to what linearization needs: anchors in
/// surface positions. `Pending` marks where aux-tree material will wrap
/// around host material.
enum Derived {
    Anchor(usize),
    Branch(Vec<Derived>),
    FootSlot,
}

/// Flattens a derivation to surface order. Words come out in the
/// left-to-right order produced by performing every substitution and
/// adjunction on the templates; each non-root derivation node yields one
/// head → dependent link.
pub fn flatten(root: &DerivationNode, grammar: &Grammar) -> Result<FlatSentence, CorpusError> {
    let mut nodes: Vec<&DerivationNode> = Vec::new();
    collect_nodes(root, &mut nodes);

    let mut next_id = 0usize;
    let derived = build_derived(root, grammar, &mut next_id)?;
    let mut order = Vec::new();
    collect_anchors(&derived, &mut order);

    let mut anchor_index = vec![usize::MAX; nodes.len()];
    for (surface, node_id) in order.iter().enumerate() {
        anchor_index[*node_id] = surface;
    }

    let mut words = vec![None; order.len()];
    for (node_id, node) in nodes.iter().enumerate() {
        let index = anchor_index[node_id];
        words[index] = Some(FlatWord {
            form: node.word.clone(),
            pos: node.pos.clone(),
            supertag: node.supertag.clone(),
        });
    }
    let words: Vec<FlatWord> = words.into_iter().map(|w| w.expect("every anchor placed")).collect();

    let mut links = BTreeSet::new();
    let mut id = 0usize;
    collect_links(root, &mut id, &anchor_index, &mut links);
    Ok(FlatSentence { words, links })
}

fn collect_nodes<'a>(node: &'a DerivationNode, out: &mut Vec<&'a DerivationNode>) {
    out.push(node);
    for child in &node.children {
        collect_nodes(&child.node, out);
    }
}

fn collect_links(
    node: &DerivationNode,
    id: &mut usize,
    anchor_index: &[usize],
    links: &mut BTreeSet<DependencyLink>,
) {
    let head_id = *id;
    *id += 1;
    for child in &node.children {
        let dependent_id = *id;
        links.insert(DependencyLink {
            head: anchor_index[head_id],
            dependent: anchor_index[dependent_id],
            operation: child.operation,
            address: child.address.clone(),
        });
        collect_links(&child.node, id, anchor_index, links);
    }
}

fn build_derived(
    node: &DerivationNode,
    grammar: &Grammar,
    next_id: &mut usize,
) -> Result<Derived, CorpusError> {
    let my_id = *next_id;
    *next_id += 1;
    let template = grammar.template(&node.supertag).ok_or_else(|| {
        CorpusError::Invalid {
            supertag: node.supertag.clone(),
            word: node.word.clone(),
            message: "unknown template".to_string(),
        }
    })?;
    build_tree_node(&template.root, node, my_id, grammar, next_id)
}

fn build_tree_node(
    tree_node: &TreeNode,
    derivation: &DerivationNode,
    my_id: usize,
    grammar: &Grammar,
    next_id: &mut usize,
) -> Result<Derived, CorpusError> {
    // Ids must be assigned in derivation pre-order with children visited in
    // address order, so an adjunction at this node is expanded before the
    // material below it (address a precedes a.k).
    let adjoined = match derivation
        .children
        .iter()
        .find(|c| c.operation == Operation::Adjunction && c.address == tree_node.address)
    {
        Some(child) => Some(build_derived(&child.node, grammar, next_id)?),
        None => None,
    };
    let inner = match tree_node.mark {
        NodeMark::Anchor => Derived::Anchor(my_id),
        NodeMark::Foot => Derived::FootSlot,
        NodeMark::SubstitutionSite => {
            match derivation
                .children
                .iter()
                .find(|c| c.operation == Operation::Substitution && c.address == tree_node.address)
            {
                Some(child) => build_derived(&child.node, grammar, next_id)?,
                None => Derived::Branch(Vec::new()),
            }
        }
        NodeMark::Internal => {
            let mut children = Vec::new();
            for child in &tree_node.children {
                children.push(build_tree_node(child, derivation, my_id, grammar, next_id)?);
            }
            Derived::Branch(children)
        }
    };
    match adjoined {
        Some(mut aux) => {
            let mut host = Some(inner);
            splice_foot(&mut aux, &mut host);
            debug_assert!(host.is_none(), "auxiliary derivation must expose a foot slot");
            Ok(aux)
        }
        None => Ok(inner),
    }
}

/// Replaces the unique foot slot with the host material.
fn splice_foot(derived: &mut Derived, host: &mut Option<Derived>) {
    if host.is_none() {
        return;
    }
    match derived {
        Derived::FootSlot => {
            *derived = host.take().expect("host checked above");
        }
        Derived::Anchor(_) => {}
        Derived::Branch(children) => {
            for child in children {
                splice_foot(child, host);
                if host.is_none() {
                    return;
                }
            }
        }
    }
}

fn collect_anchors(derived: &Derived, out: &mut Vec<usize>) {
    match derived {
        Derived::Anchor(id) => out.push(*id),
        Derived::FootSlot => {}
        Derived::Branch(children) => {
            for child in children {
                collect_anchors(child, out);
            }
        }
    }
}
