//! Line formats for tagged sentences: a compact text form for pipelines
//! and a JSON form for machine consumers.
//!
//! Text records hold space-separated `form_POS/tag` tokens; `-` marks an
//! untagged word and `|` separates top-n alternatives. Optional fields
//! follow after tabs: `links=h>d,...`, `score=<float>`, `status=PARTIAL`.
//! The part-of-speech must not contain `_` and tags must not contain `/`;
//! the splits happen at the last occurrence of each separator.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use stk_core::{InputToken, Link, SupertagId, TaggedSentence};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JsonWord {
    pub form: String,
    pub pos: String,
    pub tags: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JsonRecord {
    pub words: Vec<JsonWord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub links: Option<Vec<(usize, usize)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    pub complete: bool,
}

/// One tagged sentence on its way in or out of the toolkit.
#[derive(Debug, Clone)]
pub struct TagRecord {
    /// Per word: surface form, part-of-speech, chosen tags (empty when
    /// unresolved, several in top-n mode).
    pub words: Vec<(String, String, Vec<String>)>,
    pub links: Option<Vec<(usize, usize)>>,
    pub score: Option<f64>,
    pub complete: bool,
}

impl TagRecord {
    pub fn from_sentence(sentence: &TaggedSentence, complete: bool) -> Self {
        TagRecord {
            words: sentence
                .words
                .iter()
                .map(|w| {
                    let tags = match &w.chosen {
                        Some(tag) => vec![tag.to_string()],
                        None => Vec::new(),
                    };
                    (w.form.clone(), w.pos.clone(), tags)
                })
                .collect(),
            links: sentence
                .links
                .as_ref()
                .map(|links| links.iter().map(|l| (l.head, l.dependent)).collect()),
            score: Some(sentence.score),
            complete,
        }
    }

    /// Rebuilds the pieces a stitcher needs. Top-n lists contribute their
    /// first tag.
    pub fn to_sentence(&self) -> Result<TaggedSentence> {
        let mut words = Vec::with_capacity(self.words.len());
        for (form, pos, tags) in &self.words {
            let chosen = match tags.first() {
                Some(tag) => Some(SupertagId::from(tag.as_str())),
                None => bail!("word `{form}` has no supertag"),
            };
            words.push(stk_core::TaggedWord {
                form: form.clone(),
                pos: pos.clone(),
                candidates: Default::default(),
                chosen,
            });
        }
        let links = self.links.as_ref().map(|links| {
            links
                .iter()
                .map(|&(head, dependent)| Link { head, dependent })
                .collect()
        });
        Ok(TaggedSentence {
            words,
            links,
            score: self.score.unwrap_or(0.0),
        })
    }

    pub fn to_text(&self) -> String {
        let mut line = self
            .words
            .iter()
            .map(|(form, pos, tags)| {
                let tag = if tags.is_empty() {
                    "-".to_string()
                } else {
                    tags.join("|")
                };
                format!("{form}_{pos}/{tag}")
            })
            .collect::<Vec<_>>()
            .join(" ");
        if let Some(links) = &self.links {
            let body = links
                .iter()
                .map(|(h, d)| format!("{h}>{d}"))
                .collect::<Vec<_>>()
                .join(",");
            line.push_str(&format!("\tlinks={body}"));
        }
        if let Some(score) = self.score {
            line.push_str(&format!("\tscore={score}"));
        }
        if !self.complete {
            line.push_str("\tstatus=PARTIAL");
        }
        line
    }

    pub fn to_json(&self) -> String {
        let record = JsonRecord {
            words: self
                .words
                .iter()
                .map(|(form, pos, tags)| JsonWord {
                    form: form.clone(),
                    pos: pos.clone(),
                    tags: tags.clone(),
                })
                .collect(),
            links: self.links.clone(),
            score: self.score,
            complete: self.complete,
        };
        serde_json::to_string(&record).expect("record serializes")
    }

    pub fn parse_text(line: &str) -> Result<Self> {
        let mut fields = line.split('\t');
        let tokens = fields.next().unwrap_or("");
        let mut words = Vec::new();
        for token in tokens.split_whitespace() {
            let (word_pos, tag_list) = token
                .rsplit_once('/')
                .with_context(|| format!("token `{token}` is missing its /tag part"))?;
            let (form, pos) = split_word_pos(word_pos)?;
            let tags: Vec<String> = if tag_list == "-" {
                Vec::new()
            } else {
                tag_list.split('|').map(str::to_string).collect()
            };
            words.push((form, pos, tags));
        }
        let mut record = TagRecord {
            words,
            links: None,
            score: None,
            complete: true,
        };
        for field in fields {
            if let Some(body) = field.strip_prefix("links=") {
                let mut links = Vec::new();
                for pair in body.split(',').filter(|p| !p.is_empty()) {
                    let (h, d) = pair
                        .split_once('>')
                        .with_context(|| format!("malformed link `{pair}`"))?;
                    links.push((h.parse()?, d.parse()?));
                }
                record.links = Some(links);
            } else if let Some(body) = field.strip_prefix("score=") {
                record.score = Some(body.parse().context("malformed score")?);
            } else if field == "status=PARTIAL" {
                record.complete = false;
            } else {
                bail!("unknown field `{field}`");
            }
        }
        Ok(record)
    }
}

/// Splits a `word_POS` token at its last underscore.
pub fn split_word_pos(token: &str) -> Result<(String, String)> {
    let (form, pos) = token
        .rsplit_once('_')
        .with_context(|| format!("token `{token}` is not of the form word_POS"))?;
    if form.is_empty() || pos.is_empty() {
        bail!("token `{token}` is not of the form word_POS");
    }
    Ok((form.to_string(), pos.to_string()))
}

/// Parses one input line of `word_POS` tokens.
pub fn parse_pos_tagged(line: &str) -> Result<Vec<InputToken>> {
    line.split_whitespace()
        .map(|token| {
            let (form, pos) = split_word_pos(token)?;
            Ok(InputToken::new(form, pos))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_record_round_trips() {
        let line = "John_N/alpha_8 saw_V/alpha_2\tlinks=1>0\tscore=-2.5";
        let record = TagRecord::parse_text(line).unwrap();
        assert_eq!(record.words.len(), 2);
        assert_eq!(record.words[0].0, "John");
        assert_eq!(record.words[1].2, vec!["alpha_2".to_string()]);
        assert_eq!(record.links.as_deref(), Some(&[(1usize, 0usize)][..]));
        assert_eq!(record.to_text(), line);
    }

    #[test]
    fn partial_records_survive() {
        let line = "a_D/- b_N/alpha_4\tstatus=PARTIAL";
        let record = TagRecord::parse_text(line).unwrap();
        assert!(!record.complete);
        assert!(record.words[0].2.is_empty());
        assert_eq!(record.to_text(), line);
    }

    #[test]
    fn underscored_forms_split_at_the_last_separator() {
        let (form, pos) = split_word_pos("vice_president_N").unwrap();
        assert_eq!(form, "vice_president");
        assert_eq!(pos, "N");
        assert!(split_word_pos("bare").is_err());
    }
}
