//! The five toolkit operations behind the command line.

use std::fs;
use std::io::Read;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use stk_core::{
    dependency_scores, dependency_tag_prepared, generate_corpus, parse_corpus, prepare,
    serialize_corpus, serialize_derivation, stitch, supertag_accuracy, topn_success,
    train_dependency, train_trigram, train_unigram, trigram_tag_prepared, unigram_rankings,
    unigram_tag_prepared, DecodeConfig, DependencyTable, DerivationNode, GenConfig, Grammar,
    OrdinalMode, TaggedSentence, TopnCriterion, TrainConfig, TrigramTable, UnigramTable,
};

use crate::records::{parse_pos_tagged, TagRecord};
use crate::{Format, Model};

pub const UNIGRAM_FILE: &str = "unigram.tbl";
pub const TRIGRAM_FILE: &str = "trigram.tbl";
pub const DEPENDENCY_FILE: &str = "dependency.tbl";

pub fn load_grammar(path: &Path) -> Result<Grammar> {
    let source = fs::read_to_string(path)
        .with_context(|| format!("cannot read grammar file {}", path.display()))?;
    Grammar::parse(&source).with_context(|| format!("invalid grammar in {}", path.display()))
}

fn read_input(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut buffer = String::new();
        std::io::stdin()
            .read_to_string(&mut buffer)
            .context("cannot read standard input")?;
        Ok(buffer)
    } else {
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
    }
}

fn write_output(path: &Path, content: &str) -> Result<()> {
    if path == Path::new("-") {
        print!("{content}");
        Ok(())
    } else {
        fs::write(path, content).with_context(|| format!("cannot write {}", path.display()))
    }
}

fn load_corpus(path: &Path, grammar: &Grammar) -> Result<Vec<DerivationNode>> {
    let source = read_input(path)?;
    parse_corpus(&source, grammar)
        .with_context(|| format!("invalid corpus in {}", path.display()))
}

pub struct Tables {
    pub unigram: Option<UnigramTable>,
    pub trigram: Option<TrigramTable>,
    pub dependency: Option<DependencyTable>,
}

fn load_tables(dir: &Path, model: Model) -> Result<Tables> {
    let read = |name: &str| -> Result<String> {
        let path = dir.join(name);
        fs::read_to_string(&path)
            .with_context(|| format!("cannot read model file {}", path.display()))
    };
    let mut tables = Tables {
        unigram: None,
        trigram: None,
        dependency: None,
    };
    if matches!(model, Model::Unigram | Model::Dependency | Model::All) {
        tables.unigram = Some(UnigramTable::parse(&read(UNIGRAM_FILE)?)?);
    }
    if matches!(model, Model::Trigram | Model::All) {
        tables.trigram = Some(TrigramTable::parse(&read(TRIGRAM_FILE)?)?);
    }
    if matches!(model, Model::Dependency | Model::All) {
        tables.dependency = Some(DependencyTable::parse(&read(DEPENDENCY_FILE)?)?);
    }
    Ok(tables)
}

pub fn run_train(
    grammar_path: &Path,
    corpus_path: &Path,
    model: Model,
    out_dir: &Path,
    smoothing_k: f64,
    ordinal_mode: OrdinalMode,
) -> Result<()> {
    let grammar = load_grammar(grammar_path)?;
    let corpus = load_corpus(corpus_path, &grammar)?;
    let config = TrainConfig {
        smoothing_k,
        ordinal_mode,
    };
    fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))?;
    if matches!(model, Model::Unigram | Model::All) {
        let table = train_unigram(&corpus)?;
        fs::write(out_dir.join(UNIGRAM_FILE), table.serialize())?;
        println!("unigram entries\t{}", table.len());
    }
    if matches!(model, Model::Trigram | Model::All) {
        let table = train_trigram(&corpus, &grammar, &config)?;
        fs::write(out_dir.join(TRIGRAM_FILE), table.serialize())?;
        println!("trigram contexts\t{}", table.contexts());
    }
    if matches!(model, Model::Dependency | Model::All) {
        let table = train_dependency(&corpus, &grammar, &config)?;
        fs::write(out_dir.join(DEPENDENCY_FILE), table.serialize())?;
        println!("dependency entries\t{}", table.len());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn run_tag(
    grammar_path: &Path,
    model_dir: &Path,
    model: Model,
    input: &Path,
    n: usize,
    format: Format,
    jobs: usize,
    ordinal_mode: OrdinalMode,
) -> Result<()> {
    if matches!(model, Model::All) {
        bail!("tagging needs one model: unigram, trigram, or dependency");
    }
    let grammar = load_grammar(grammar_path)?;
    let tables = load_tables(model_dir, model)?;
    let config = DecodeConfig {
        ordinal_mode,
        ..DecodeConfig::default()
    };
    let source = read_input(input)?;
    let lines: Vec<&str> = source.lines().collect();
    let tag_line = |line: &str| -> String {
        if line.trim().is_empty() {
            return String::new();
        }
        let record = match tag_one(line, &grammar, &tables, model, n, &config) {
            Ok(record) => record,
            Err(err) => {
                return match format {
                    Format::Text => format!("ERROR\t{err:#}"),
                    Format::Structured => format!("{{\"error\":{:?}}}", format!("{err:#}")),
                }
            }
        };
        match format {
            Format::Text => record.to_text(),
            Format::Structured => record.to_json(),
        }
    };
    let outputs: Vec<String> = in_pool(jobs, || lines.par_iter().map(|l| tag_line(l)).collect())?;
    for line in outputs {
        println!("{line}");
    }
    Ok(())
}

fn tag_one(
    line: &str,
    grammar: &Grammar,
    tables: &Tables,
    model: Model,
    n: usize,
    config: &DecodeConfig,
) -> Result<TagRecord> {
    let tokens = parse_pos_tagged(line)?;
    let words = prepare(&tokens, grammar)?;
    match model {
        Model::Unigram => {
            let unigram = tables.unigram.as_ref().expect("unigram table loaded");
            if n > 1 {
                let rankings = unigram_rankings(&words, unigram, n, config.prob_floor);
                let record_words = words
                    .iter()
                    .zip(&rankings)
                    .map(|(w, tags)| {
                        (
                            w.form.clone(),
                            w.pos.clone(),
                            tags.iter().map(|t| t.to_string()).collect(),
                        )
                    })
                    .collect();
                Ok(TagRecord {
                    words: record_words,
                    links: None,
                    score: None,
                    complete: true,
                })
            } else {
                let sentence = unigram_tag_prepared(words, unigram, config);
                Ok(TagRecord::from_sentence(&sentence, true))
            }
        }
        Model::Trigram => {
            let trigram = tables.trigram.as_ref().expect("trigram table loaded");
            let sentence = trigram_tag_prepared(words, trigram, config);
            Ok(TagRecord::from_sentence(&sentence, true))
        }
        Model::Dependency => {
            let dependency = tables.dependency.as_ref().expect("dependency table loaded");
            let unigram = tables.unigram.as_ref().expect("unigram table loaded");
            let result = dependency_tag_prepared(words, dependency, unigram, config);
            let complete = result.is_complete();
            Ok(TagRecord::from_sentence(result.sentence(), complete))
        }
        Model::All => unreachable!("rejected above"),
    }
}

pub fn run_eval(
    grammar_path: &Path,
    model_dir: &Path,
    model: Model,
    test_path: &Path,
    format: Format,
    jobs: usize,
    ordinal_mode: OrdinalMode,
) -> Result<()> {
    let grammar = load_grammar(grammar_path)?;
    let tables = load_tables(model_dir, model)?;
    let corpus = load_corpus(test_path, &grammar)?;
    let config = DecodeConfig {
        ordinal_mode,
        ..DecodeConfig::default()
    };

    let mut report: Vec<(String, String)> = vec![
        ("sentences".to_string(), corpus.len().to_string()),
        (
            "words".to_string(),
            corpus.iter().map(|d| d.size()).sum::<usize>().to_string(),
        ),
    ];
    in_pool(jobs, || -> Result<()> {
        if let Some(unigram) = &tables.unigram {
            if matches!(model, Model::Unigram | Model::All) {
                for n in 1..=3 {
                    let rate = topn_success(
                        &corpus,
                        &grammar,
                        unigram,
                        n,
                        TopnCriterion::GoldContainment,
                        &config,
                    )?;
                    report.push((format!("topn_success_n{n}"), format!("{rate:.4}")));
                }
                let accuracy = supertag_accuracy(&corpus, &grammar, |tokens| {
                    let words = prepare(tokens, &grammar).expect("gold words resolve");
                    unigram_tag_prepared(words, unigram, &config)
                })?;
                report.push(("unigram_top1_accuracy".to_string(), format!("{accuracy:.4}")));
            }
        }
        if let Some(trigram) = &tables.trigram {
            let accuracy = supertag_accuracy(&corpus, &grammar, |tokens| {
                let words = prepare(tokens, &grammar).expect("gold words resolve");
                trigram_tag_prepared(words, trigram, &config)
            })?;
            report.push(("trigram_accuracy".to_string(), format!("{accuracy:.4}")));
        }
        if let Some(dependency) = &tables.dependency {
            let unigram = tables.unigram.as_ref().expect("unigram table loaded");
            let scores = dependency_scores(&corpus, &grammar, |tokens| {
                let words = prepare(tokens, &grammar).expect("gold words resolve");
                dependency_tag_prepared(words, dependency, unigram, &config).into_sentence()
            })?;
            report.push(("gold_links".to_string(), scores.gold_links.to_string()));
            report.push(("matched_links".to_string(), scores.matched_links.to_string()));
            report.push((
                "dependency_link_recall".to_string(),
                format!("{:.4}", scores.link_recall),
            ));
            report.push((
                "dependency_supertag_accuracy".to_string(),
                format!("{:.4}", scores.supertag_accuracy),
            ));
        }
        Ok(())
    })??;

    match format {
        Format::Text => {
            for (metric, value) in &report {
                println!("{metric}\t{value}");
            }
        }
        Format::Structured => {
            let map: serde_json::Map<String, serde_json::Value> = report
                .into_iter()
                .map(|(k, v)| (k, serde_json::Value::String(v)))
                .collect();
            println!("{}", serde_json::Value::Object(map));
        }
    }
    Ok(())
}

pub fn run_stitch(grammar_path: &Path, input: &Path, format: Format) -> Result<()> {
    let grammar = load_grammar(grammar_path)?;
    let source = read_input(input)?;
    for line in source.lines() {
        if line.trim().is_empty() {
            println!();
            continue;
        }
        match stitch_line(line, &grammar) {
            Ok((expressions, ambiguous)) => match format {
                Format::Text => {
                    let mut out = expressions.join(" ");
                    if ambiguous > 0 {
                        out.push_str(&format!(" # {ambiguous} ambiguous attachment(s)"));
                    }
                    println!("{out}");
                }
                Format::Structured => {
                    println!(
                        "{}",
                        serde_json::json!({
                            "forest": expressions,
                            "ambiguous_attachments": ambiguous,
                        })
                    );
                }
            },
            Err(err) =>

                match err.downcast_ref::<stk_core::StitchError>() {
                    Some(stk_core::StitchError::InvalidResult(_)) => return Err(err),
                    _ => match format {
                        Format::Text => println!("ERROR\t{err:#}"),
                        Format::Structured => {
                            println!("{{\"error\":{:?}}}", format!("{err:#}"))
                        }
                    },
                },
        }
    }
    Ok(())
}

fn stitch_line(line: &str, grammar: &Grammar) -> Result<(Vec<String>, usize)> {
    let record = TagRecord::parse_text(line)?;
    if !record.complete {
        bail!("partial assignment cannot be stitched");
    }
    let sentence: TaggedSentence = record.to_sentence()?;
    let output = stitch(&sentence, grammar)?;
    let expressions = output
        .forest
        .iter()
        .map(serialize_derivation)
        .collect::<Vec<_>>();
    Ok((expressions, output.ambiguous_attachments))
}

pub fn run_gen(
    grammar_path: &Path,
    seed: u64,
    size: usize,
    out: &Path,
) -> Result<()> {
    let grammar = load_grammar(grammar_path)?;
    let corpus = generate_corpus(&grammar, seed, size, &GenConfig::default())?;
    write_output(out, &serialize_corpus(&corpus))?;
    eprintln!("generated {} derivations", corpus.len());
    Ok(())
}

fn in_pool<T, F>(jobs: usize, work: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("cannot build worker pool")?;
    Ok(pool.install(work))
}
