//! Elementary trees (supertags) and the syntactic lexicon.
//!
//! A grammar is a set of named tree templates plus a lexicon mapping
//! `(word, part-of-speech)` pairs to the templates the word can anchor.
//! Lookups back off from the word level to the part-of-speech level.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Name of an elementary tree, unique within a grammar (e.g. `alpha_2`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SupertagId(String);

impl SupertagId {
    pub fn new(name: impl Into<String>) -> Self {
        SupertagId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Sentence-start sentinel used as left context in sequence models.
    pub fn bos() -> Self {
        SupertagId("<s>".to_string())
    }

    /// Sentence-end sentinel predicted after the last word.
    pub fn eos() -> Self {
        SupertagId("</s>".to_string())
    }
}

impl fmt::Display for SupertagId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SupertagId {
    fn from(s: &str) -> Self {
        SupertagId(s.to_string())
    }
}

/// Path from a tree root to a node: the sequence of 1-based child indices.
/// The root is the empty sequence, written `0` in text formats.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GornAddress(Vec<usize>);

impl GornAddress {
    pub fn root() -> Self {
        GornAddress(Vec::new())
    }

    pub fn child(&self, index: usize) -> Self {
        debug_assert!(index >= 1, "child steps are 1-based");
        let mut steps = self.0.clone();
        steps.push(index);
        GornAddress(steps)
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn steps(&self) -> &[usize] {
        &self.0
    }

    pub fn parse(text: &str) -> Result<Self, GrammarError> {
        if text == "0" {
            return Ok(GornAddress::root());
        }
        let mut steps = Vec::new();
        for part in text.split('.') {
            let step: usize = part
                .parse()
                .map_err(|_| GrammarError::BadAddress(text.to_string()))?;
            if step == 0 {
                return Err(GrammarError::BadAddress(text.to_string()));
            }
            steps.push(step);
        }
        Ok(GornAddress(steps))
    }
}

impl fmt::Display for GornAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("0");
        }
        let text = self
            .0
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(".");
        f.write_str(&text)
    }
}

/// Role of a node within an elementary tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeMark {
    Internal,
    Anchor,
    SubstitutionSite,
    Foot,
}

/// A node of an elementary tree. Marked nodes are frontier leaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    pub label: String,
    pub mark: NodeMark,
    pub children: Vec<TreeNode>,
    pub address: GornAddress,
}

impl TreeNode {
    /// Depth-first, left-to-right walk over the node and its descendants.
    pub fn walk(&self) -> Vec<&TreeNode> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            out.push(node);
            for child in node.children.iter().rev() {
                stack.push(child);
            }
        }
        out
    }

    pub fn node_at(&self, address: &GornAddress) -> Option<&TreeNode> {
        let mut node = self;
        for &step in address.steps() {
            node = node.children.get(step - 1)?;
        }
        Some(node)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemplateKind {
    Initial,
    Auxiliary,
}

impl fmt::Display for TemplateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TemplateKind::Initial => f.write_str("initial"),
            TemplateKind::Auxiliary => f.write_str("auxiliary"),
        }
    }
}

/// An elementary tree: an anchored template combined into parses by
/// substitution (initial trees) or adjunction (auxiliary trees).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeTemplate {
    pub id: SupertagId,
    pub kind: TemplateKind,
    pub anchor_pos: String,
    pub root: TreeNode,
}

impl TreeTemplate {
    /// Validates the structural invariants of the template.
    pub fn validate(&self) -> Result<(), GrammarError> {
        let err = |msg: String| GrammarError::InvalidTemplate {
            id: self.id.clone(),
            reason: msg,
        };
        if self.id.as_str().is_empty() {
            return Err(err("empty template name".to_string()));
        }
        let mut anchors = 0;
        let mut feet = Vec::new();
        for node in self.root.walk() {
            let is_leaf = node.children.is_empty();
            match node.mark {
                NodeMark::Anchor => {
                    anchors += 1;
                    if !is_leaf {
                        return Err(err(format!("anchor node {} has children", node.address)));
                    }
                }
                NodeMark::SubstitutionSite => {
                    if !is_leaf {
                        return Err(err(format!(
                            "substitution site {} has children",
                            node.address
                        )));
                    }
                }
                NodeMark::Foot => {
                    feet.push(node);
                    if !is_leaf {
                        return Err(err(format!("foot node {} has children", node.address)));
                    }
                }
                NodeMark::Internal => {
                    if is_leaf {
                        return Err(err(format!(
                            "frontier node {} ({}) is unmarked; frontier nodes must be \
                             an anchor, substitution site, or foot",
                            node.address, node.label
                        )));
                    }
                }
            }
        }
        if anchors != 1 {
            return Err(err(format!("expected exactly one anchor, found {anchors}")));
        }
        match self.kind {
            TemplateKind::Initial => {
                if !feet.is_empty() {
                    return Err(err("initial tree must not contain a foot node".to_string()));
                }
            }
            TemplateKind::Auxiliary => {
                if feet.len() != 1 {
                    return Err(err(format!(
                        "auxiliary tree must contain exactly one foot node, found {}",
                        feet.len()
                    )));
                }
                if feet[0].label != self.root.label {
                    return Err(err(format!(
                        "foot label {} does not match root label {}",
                        feet[0].label, self.root.label
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn anchor(&self) -> &TreeNode {
        self.root
            .walk()
            .into_iter()
            .find(|n| n.mark == NodeMark::Anchor)
            .expect("validated template has an anchor")
    }

    /// Substitution sites in left-to-right frontier order.
    pub fn substitution_sites(&self) -> Vec<&TreeNode> {
        self.root
            .walk()
            .into_iter()
            .filter(|n| n.mark == NodeMark::SubstitutionSite)
            .collect()
    }

    pub fn foot(&self) -> Option<&TreeNode> {
        self.root
            .walk()
            .into_iter()
            .find(|n| n.mark == NodeMark::Foot)
    }

    /// Nodes an auxiliary tree with the given root label may adjoin to:
    /// internal nodes (including the root), never sites, feet, or anchors.
    pub fn adjunction_sites(&self, label: &str) -> Vec<&TreeNode> {
        self.root
            .walk()
            .into_iter()
            .filter(|n| n.mark == NodeMark::Internal && n.label == label)
            .collect()
    }

    pub fn node_at(&self, address: &GornAddress) -> Option<&TreeNode> {
        self.root.node_at(address)
    }
}

/// Word- and part-of-speech-level candidate sets.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    pub word_entries: BTreeMap<(String, String), BTreeSet<SupertagId>>,
    pub pos_entries: BTreeMap<String, BTreeSet<SupertagId>>,
}

impl Lexicon {
    /// Candidate supertags for a word, backing off to the part-of-speech
    /// level when the word itself is unknown. An unknown part-of-speech is
    /// a hard error.
    pub fn candidates(&self, word: &str, pos: &str) -> Result<&BTreeSet<SupertagId>, GrammarError> {
        if let Some(set) = self.word_entries.get(&(word.to_string(), pos.to_string())) {
            return Ok(set);
        }
        self.pos_entries
            .get(pos)
            .ok_or_else(|| GrammarError::UnknownPos(pos.to_string()))
    }
}

/// A validated grammar: immutable after load, safe for concurrent reads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grammar {
    templates: BTreeMap<SupertagId, TreeTemplate>,
    lexicon: Lexicon,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GrammarError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("template {id}: {reason}")]
    InvalidTemplate { id: SupertagId, reason: String },
    #[error("empty grammar")]
    EmptyGrammar,
    #[error("duplicate template {0}")]
    DuplicateTemplate(SupertagId),
    #[error("lexicon references unknown template {0}")]
    UnknownTemplate(SupertagId),
    #[error("unknown part-of-speech {0}")]
    UnknownPos(String),
    #[error("malformed tree address `{0}`")]
    BadAddress(String),
}

impl Grammar {
    pub fn new(
        templates: Vec<TreeTemplate>,
        mut lexicon: Lexicon,
    ) -> Result<Self, GrammarError> {
        if templates.is_empty() {
            return Err(GrammarError::EmptyGrammar);
        }
        let mut map = BTreeMap::new();
        for template in templates {
            template.validate()?;
            if map.contains_key(&template.id) {
                return Err(GrammarError::DuplicateTemplate(template.id));
            }
            map.insert(template.id.clone(), template);
        }
        for set in lexicon
            .word_entries
            .values()
            .chain(lexicon.pos_entries.values())
        {
            for id in set {
                if !map.contains_key(id) {
                    return Err(GrammarError::UnknownTemplate(id.clone()));
                }
            }
        }
        // The part-of-speech level aggregates the word level.
        for ((_, pos), set) in &lexicon.word_entries {
            lexicon
                .pos_entries
                .entry(pos.clone())
                .or_default()
                .extend(set.iter().cloned());
        }
        Ok(Grammar {
            templates: map,
            lexicon,
        })
    }

    pub fn template(&self, id: &SupertagId) -> Option<&TreeTemplate> {
        self.templates.get(id)
    }

    pub fn templates(&self) -> impl Iterator<Item = &TreeTemplate> {
        self.templates.values()
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn candidates(&self, word: &str, pos: &str) -> Result<&BTreeSet<SupertagId>, GrammarError> {
        self.lexicon.candidates(word, pos)
    }

    /// Parses the line-oriented grammar format. `#` starts a comment.
    ///
    /// ```text
    /// tree alpha_2 initial anchor-pos=V
    ///   (S (NP ↓) (VP (V @) (NP ↓)))
    /// lex saw V alpha_2,alpha_9
    /// pos V alpha_2,alpha_9
    /// ```
    pub fn parse(source: &str) -> Result<Self, GrammarError> {
        let mut templates: Vec<TreeTemplate> = Vec::new();
        let mut lexicon = Lexicon::default();
        let mut lines = source.lines().enumerate().peekable();
        while let Some((idx, raw)) = lines.next() {
            let line_no = idx + 1;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            match fields.next() {
                Some("tree") => {
                    let id = fields.next().ok_or_else(|| GrammarError::Parse {
                        line: line_no,
                        message: "tree record needs a name".to_string(),
                    })?;
                    let kind = match fields.next() {
                        Some("initial") => TemplateKind::Initial,
                        Some("auxiliary") => TemplateKind::Auxiliary,
                        other => {
                            return Err(GrammarError::Parse {
                                line: line_no,
                                message: format!(
                                    "expected `initial` or `auxiliary`, found {:?}",
                                    other.unwrap_or("<end of line>")
                                ),
                            })
                        }
                    };
                    let anchor = fields.next().unwrap_or("");
                    let anchor_pos = anchor.strip_prefix("anchor-pos=").ok_or_else(|| {
                        GrammarError::Parse {
                            line: line_no,
                            message: "tree record needs anchor-pos=<POS>".to_string(),
                        }
                    })?;
                    if anchor_pos.is_empty() {
                        return Err(GrammarError::Parse {
                            line: line_no,
                            message: "anchor-pos must not be empty".to_string(),
                        });
                    }
                    if let Some(extra) = fields.next() {
                        return Err(GrammarError::Parse {
                            line: line_no,
                            message: format!(
                                "unexpected `{extra}` after anchor-pos; the node \
                                 expression goes on the following line"
                            ),
                        });
                    }
                    // The node expression follows, possibly spanning lines.
                    let mut expr = String::new();
                    let mut expr_line = line_no;
                    loop {
                        match lines.peek() {
                            Some(&(next_idx, next_raw)) => {
                                let next = strip_comment(next_raw).trim();
                                if expr.is_empty() {
                                    expr_line = next_idx + 1;
                                }
                                if next.is_empty() && expr.is_empty() {
                                    lines.next();
                                    continue;
                                }
                                expr.push(' ');
                                expr.push_str(next);
                                lines.next();
                                if balanced(&expr) {
                                    break;
                                }
                            }
                            None => {
                                return Err(GrammarError::Parse {
                                    line: expr_line,
                                    message: format!("unterminated node expression for {id}"),
                                })
                            }
                        }
                    }
                    let root = parse_node_expr(&expr, expr_line)?;
                    templates.push(TreeTemplate {
                        id: SupertagId::new(id),
                        kind,
                        anchor_pos: anchor_pos.to_string(),
                        root,
                    });
                }
                Some("lex") => {
                    let (word, pos, ids) = parse_lexical_fields(&mut fields, line_no)?;
                    lexicon
                        .word_entries
                        .entry((word, pos))
                        .or_default()
                        .extend(ids);
                }
                Some("pos") => {
                    let pos = fields.next().ok_or_else(|| GrammarError::Parse {
                        line: line_no,
                        message: "pos record needs a part-of-speech".to_string(),
                    })?;
                    let ids = parse_id_list(fields.next(), line_no)?;
                    lexicon
                        .pos_entries
                        .entry(pos.to_string())
                        .or_default()
                        .extend(ids);
                }
                Some(other) => {
                    return Err(GrammarError::Parse {
                        line: line_no,
                        message: format!("unknown record type `{other}`"),
                    })
                }
                None => unreachable!(),
            }
        }
        Grammar::new(templates, lexicon)
    }

    /// Writes the grammar back out in its file format. Deterministic:
    /// templates and lexicon entries appear in sorted order.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for template in self.templates.values() {
            out.push_str(&format!(
                "tree {} {} anchor-pos={}\n  {}\n",
                template.id,
                template.kind,
                template.anchor_pos,
                node_expr(&template.root)
            ));
        }
        for ((word, pos), set) in &self.lexicon.word_entries {
            out.push_str(&format!("lex {} {} {}\n", word, pos, id_list(set)));
        }
        for (pos, set) in &self.lexicon.pos_entries {
            out.push_str(&format!("pos {} {}\n", pos, id_list(set)));
        }
        out
    }
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
            return true; // unbalanced close; let the parser report it
        }
    }
    seen && depth == 0
}

fn id_list(set: &BTreeSet<SupertagId>) -> String {
    set.iter()
        .map(|id| id.as_str())
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_lexical_fields(
    fields: &mut std::str::SplitWhitespace<'_>,
    line: usize,
) -> Result<(String, String, Vec<SupertagId>), GrammarError> {
    let word = fields.next().ok_or_else(|| GrammarError::Parse {
        line,
        message: "lex record needs a word".to_string(),
    })?;
    let pos = fields.next().ok_or_else(|| GrammarError::Parse {
        line,
        message: "lex record needs a part-of-speech".to_string(),
    })?;
    let ids = parse_id_list(fields.next(), line)?;
    Ok((word.to_string(), pos.to_string(), ids))
}

fn parse_id_list(field: Option<&str>, line: usize) -> Result<Vec<SupertagId>, GrammarError> {
    let field = field.ok_or_else(|| GrammarError::Parse {
        line,
        message: "expected a comma-separated supertag list".to_string(),
    })?;
    let ids: Vec<SupertagId> = field
        .split(',')
        .filter(|s| !s.is_empty())
        .map(SupertagId::from)
        .collect();
    if ids.is_empty() {
        return Err(GrammarError::Parse {
            line,
            message: "supertag list is empty".to_string(),
        });
    }
    Ok(ids)
}

/// Parses `(S (NP ↓) (VP (V @) (NP ↓)))` where `@` marks the anchor,
/// `↓` a substitution site, and `*` the foot.
fn parse_node_expr(text: &str, line: usize) -> Result<TreeNode, GrammarError> {
    let tokens = tokenize(text);
    let mut pos = 0;
    let node = parse_node(&tokens, &mut pos, GornAddress::root(), line)?;
    if pos != tokens.len() {
        return Err(GrammarError::Parse {
            line,
            message: format!("trailing input after node expression: {:?}", tokens[pos]),
        });
    }
    Ok(node)
}

pub(crate) fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        match c {
            '(' | ')' => {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
                tokens.push(c.to_string());
            }
            c if c.is_whitespace() => {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
            }
            _ => current.push(c),
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

fn parse_node(
    tokens: &[String],
    pos: &mut usize,
    address: GornAddress,
    line: usize,
) -> Result<TreeNode, GrammarError> {
    let fail = |message: String| GrammarError::Parse { line, message };
    if tokens.get(*pos).map(String::as_str) != Some("(") {
        return Err(fail("expected `(`".to_string()));
    }
    *pos += 1;
    let label = tokens
        .get(*pos)
        .filter(|t| *t != "(" && *t != ")")
        .ok_or_else(|| fail("expected a node label".to_string()))?
        .clone();
    *pos += 1;
    let mut mark = NodeMark::Internal;
    let mut children = Vec::new();
    loop {
        match tokens.get(*pos).map(String::as_str) {
            Some(")") => {
                *pos += 1;
                break;
            }
            Some("(") => {
                let child_address = address.child(children.len() + 1);
                children.push(parse_node(tokens, pos, child_address, line)?);
            }
            Some(marker) => {
                mark = match marker {
                    "@" => NodeMark::Anchor,
                    "↓" => NodeMark::SubstitutionSite,
                    "*" => NodeMark::Foot,
                    other => {
                        return Err(fail(format!(
                            "expected `@`, `↓`, `*`, or a child node, found `{other}`"
                        )))
                    }
                };
                *pos += 1;
            }
            None => return Err(fail("unterminated node expression".to_string())),
        }
    }
    if mark != NodeMark::Internal && !children.is_empty() {
        return Err(fail(format!("marked node {label} cannot have children")));
    }
    Ok(TreeNode {
        label,
        mark,
        children,
        address,
    })
}

fn node_expr(node: &TreeNode) -> String {
    let marker = match node.mark {
        NodeMark::Internal => "",
        NodeMark::Anchor => " @",
        NodeMark::SubstitutionSite => " ↓",
        NodeMark::Foot => " *",
    };
    let children = node
        .children
        .iter()
        .map(|c| format!(" {}", node_expr(c)))
        .collect::<String>();
    format!("({}{}{})", node.label, marker, children)
}
