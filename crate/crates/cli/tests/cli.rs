//! End-to-end checks of the `stk` binary: each subcommand runs against the
//! bundled toy grammar and corpus through real files and pipes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn stk() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stk"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn run_with_stdin(mut command: Command, input: &str) -> Output {
    use std::io::Write;
    let mut child = command
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary spawns");
    child
        .stdin
        .as_mut()
        .unwrap()
        .write_all(input.as_bytes())
        .unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).to_string()
}

fn train_toy(dir: &Path) {
    let status = stk()
        .args(["train", "--grammar"])
        .arg(data("toy.grammar"))
        .arg(data("toy.corpus"))
        .arg(dir)
        .status()
        .unwrap();
    assert!(status.success());
}

#[test]
fn train_writes_three_deterministic_tables() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    train_toy(&first);
    train_toy(&second);
    for name in ["unigram.tbl", "trigram.tbl", "dependency.tbl"] {
        let a = fs::read(first.join(name)).unwrap();
        let b = fs::read(second.join(name)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{name} must be byte-identical across runs");
    }
}

#[test]
fn train_with_missing_corpus_exits_one_and_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let output = stk()
        .args(["train", "--grammar"])
        .arg(data("toy.grammar"))
        .arg(dir.path().join("no-such-corpus.txt"))
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("no-such-corpus.txt"), "{stderr}");
}

#[test]
fn dependency_tagging_recovers_the_classic_assignment() {
    let dir = tempfile::tempdir().unwrap();
    train_toy(dir.path());
    let mut command = stk();
    command
        .args(["tag", "--grammar"])
        .arg(data("toy.grammar"))
        .arg("--model-dir")
        .arg(dir.path())
        .args(["--model", "dependency"]);
    let output = run_with_stdin(command, "John_N saw_V a_D man_N with_P the_D telescope_N\n");
    assert!(output.status.success());
    let line = stdout(&output);
    let tags: Vec<&str> = line
        .split_whitespace()
        .take(7)
        .map(|token| token.rsplit_once('/').unwrap().1)
        .collect();
    assert_eq!(
        tags,
        ["alpha_8", "alpha_2", "alpha_3", "alpha_4", "beta_8", "alpha_5", "alpha_6"]
    );
    assert!(line.contains("links="), "{line}");
    assert!(line.contains("score="), "{line}");
    assert!(!line.contains("PARTIAL"), "{line}");
}

#[test]
fn empty_input_tags_to_empty_output() {
    let dir = tempfile::tempdir().unwrap();
    train_toy(dir.path());
    let mut command = stk();
    command
        .args(["tag", "--grammar"])
        .arg(data("toy.grammar"))
        .arg("--model-dir")
        .arg(dir.path())
        .args(["--model", "unigram"]);
    let output = run_with_stdin(command, "");
    assert!(output.status.success());
    assert!(stdout(&output).is_empty());
}

#[test]
fn unknown_pos_yields_error_record_and_processing_continues() {
    let dir = tempfile::tempdir().unwrap();
    train_toy(dir.path());
    let mut command = stk();
    command
        .args(["tag", "--grammar"])
        .arg(data("toy.grammar"))
        .arg("--model-dir")
        .arg(dir.path())
        .args(["--model", "unigram"]);
    let output = run_with_stdin(command, "John_XX saw_V\nJohn_N saw_V\n");
    assert!(output.status.success());
    let lines: Vec<String> = stdout(&output).lines().map(str::to_string).collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("ERROR\t"), "{}", lines[0]);
    assert!(lines[0].contains("XX"), "{}", lines[0]);
    assert!(lines[1].contains("saw_V/alpha_2"), "{}", lines[1]);
}

#[test]
fn top_n_mode_lists_ranked_candidates() {
    let dir = tempfile::tempdir().unwrap();
    train_toy(dir.path());
    let mut command = stk();
    command
        .args(["tag", "--grammar"])
        .arg(data("toy.grammar"))
        .arg("--model-dir")
        .arg(dir.path())
        .args(["--model", "unigram", "--n", "3"]);
    let output = run_with_stdin(command, "John_N\n");
    assert!(output.status.success());
    let line = stdout(&output);
    let tags = line.trim().rsplit_once('/').unwrap().1;
    let ranked: Vec<&str> = tags.split('|').collect();
    assert_eq!(ranked.len(), 3);
    assert_eq!(ranked[0], "alpha_8");
}

#[test]
fn tag_then_stitch_round_trips_to_the_attested_derivation() {
    let dir = tempfile::tempdir().unwrap();
    train_toy(dir.path());
    let mut tag = stk();
    tag.args(["tag", "--grammar"])
        .arg(data("toy.grammar"))
        .arg("--model-dir")
        .arg(dir.path())
        .args(["--model", "dependency"]);
    let tagged = run_with_stdin(tag, "John_N saw_V a_D man_N with_P the_D telescope_N\n");
    assert!(tagged.status.success());

    let mut stitch = stk();
    stitch
        .args(["stitch", "--grammar"])
        .arg(data("toy.grammar"));
    let output = run_with_stdin(stitch, &stdout(&tagged));
    assert!(output.status.success());
    let derivation = stdout(&output);
    let expected = fs::read_to_string(data("toy.corpus"))
        .unwrap()
        .lines()
        .find(|l| l.starts_with('('))
        .unwrap()
        .to_string();
    assert_eq!(derivation.trim(), expected);
}

#[test]
fn trigram_tagging_matches_the_attested_sequence() {
    let dir = tempfile::tempdir().unwrap();
    train_toy(dir.path());
    let mut command = stk();
    command
        .args(["tag", "--grammar"])
        .arg(data("toy.grammar"))
        .arg("--model-dir")
        .arg(dir.path())
        .args(["--model", "trigram", "--format", "structured"]);
    let output = run_with_stdin(command, "the_D man_N saw_V a_D telescope_N with_P John_N\n");
    assert!(output.status.success());
    let value: serde_json::Value = serde_json::from_str(stdout(&output).trim()).unwrap();
    let tags: Vec<&str> = value["words"]
        .as_array()
        .unwrap()
        .iter()
        .map(|w| w["tags"][0].as_str().unwrap())
        .collect();
    assert_eq!(
        tags,
        ["alpha_5", "alpha_4", "alpha_2", "alpha_3", "alpha_6", "beta_8", "alpha_8"]
    );
}

#[test]
fn gen_is_deterministic_and_validates_downstream() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.corpus");
    let b = dir.path().join("b.corpus");
    for out in [&a, &b] {
        let status = stk()
            .args(["gen", "--grammar"])
            .arg(data("toy.grammar"))
            .args(["--seed", "7", "--size", "50"])
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    // The generated corpus trains cleanly.
    let models = dir.path().join("models");
    let status = stk()
        .args(["train", "--grammar"])
        .arg(data("toy.grammar"))
        .arg(&a)
        .arg(&models)
        .status()
        .unwrap();
    assert!(status.success());
}

#[test]
fn gen_size_zero_gives_empty_corpus_and_trainers_reject_it() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.corpus");
    let status = stk()
        .args(["gen", "--grammar"])
        .arg(data("toy.grammar"))
        .args(["--seed", "1", "--size", "0"])
        .arg(&empty)
        .status()
        .unwrap();
    assert!(status.success());
    let output = stk()
        .args(["train", "--grammar"])
        .arg(data("toy.grammar"))
        .arg(&empty)
        .arg(dir.path().join("models"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("empty corpus"));
}

#[test]
fn eval_report_matches_direct_library_computation() {
    let dir = tempfile::tempdir().unwrap();
    let train_corpus = dir.path().join("train.corpus");
    let test_corpus = dir.path().join("test.corpus");
    for (out, seed, size) in [(&train_corpus, "3", "300"), (&test_corpus, "4", "100")] {
        let status = stk()
            .args(["gen", "--grammar"])
            .arg(data("toy.grammar"))
            .args(["--seed", seed, "--size", size])
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let models = dir.path().join("models");
    let status = stk()
        .args(["train", "--grammar"])
        .arg(data("toy.grammar"))
        .arg(&train_corpus)
        .arg(&models)
        .status()
        .unwrap();
    assert!(status.success());

    let output = stk()
        .args(["eval", "--grammar"])
        .arg(data("toy.grammar"))
        .arg("--model-dir")
        .arg(&models)
        .arg(&test_corpus)
        .output()
        .unwrap();
    assert!(output.status.success());
    let report: std::collections::BTreeMap<String, String> = stdout(&output)
        .lines()
        .map(|l| {
            let (k, v) = l.split_once('\t').unwrap();
            (k.to_string(), v.to_string())
        })
        .collect();

    // Recompute through the library and compare the printed values.
    let grammar = stk_core::Grammar::parse(&fs::read_to_string(data("toy.grammar")).unwrap()).unwrap();
    let corpus =
        stk_core::parse_corpus(&fs::read_to_string(&test_corpus).unwrap(), &grammar).unwrap();
    let training =
        stk_core::parse_corpus(&fs::read_to_string(&train_corpus).unwrap(), &grammar).unwrap();
    let config = stk_core::DecodeConfig::default();
    let unigram = stk_core::train_unigram(&training).unwrap();
    let trigram =
        stk_core::train_trigram(&training, &grammar, &stk_core::TrainConfig::default()).unwrap();
    let accuracy = stk_core::supertag_accuracy(&corpus, &grammar, |tokens| {
        let words = stk_core::prepare(tokens, &grammar).unwrap();
        stk_core::trigram_tag_prepared(words, &trigram, &config)
    })
    .unwrap();
    assert_eq!(report["trigram_accuracy"], format!("{accuracy:.4}"));
    let top1 = stk_core::topn_success(
        &corpus,
        &grammar,
        &unigram,
        1,
        stk_core::TopnCriterion::GoldContainment,
        &config,
    )
    .unwrap();
    assert_eq!(report["topn_success_n1"], format!("{top1:.4}"));
    assert_eq!(report["sentences"], "100");
    for key in ["gold_links", "matched_links", "dependency_link_recall"] {
        assert!(report.contains_key(key), "missing {key}");
    }
    // Monotone top-n series, all within [0, 100].
    let series: Vec<f64> = (1..=3)
        .map(|n| report[&format!("topn_success_n{n}")].parse().unwrap())
        .collect();
    assert!(series.windows(2).all(|w| w[0] <= w[1]));
    assert!(series.iter().all(|v| (0.0..=100.0).contains(v)));
}

#[test]
fn partial_stitch_input_yields_error_record() {
    let output = {
        let mut command = stk();
        command
            .args(["stitch", "--grammar"])
            .arg(data("toy.grammar"));
        run_with_stdin(command, "John_N/- saw_V/alpha_9\tstatus=PARTIAL\n")
    };
    assert!(output.status.success());
    assert!(stdout(&output).starts_with("ERROR\t"));
}

#[test]
fn flags_override_environment_variables() {
    let dir = tempfile::tempdir().unwrap();
    train_toy(dir.path());
    let mut command = stk();
    command
        .args(["tag", "--grammar"])
        .arg(data("toy.grammar"))
        .arg("--model-dir")
        .arg(dir.path())
        .args(["--model", "unigram", "--n", "2"])
        .env("STK_N", "1"); // the flag must win
    let output = run_with_stdin(command, "John_N\n");
    assert!(output.status.success());
    assert!(stdout(&output).contains('|'), "top-2 list expected");
}
