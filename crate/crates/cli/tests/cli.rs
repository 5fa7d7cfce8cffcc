use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use persuasion_core::corpus::{export_corpus, read_task_labels};
use persuasion_core::ensemble::{apply_threshold, EnsembleConfig, MemberSpec, Threshold};
use persuasion_core::model::read_scores;
use persuasion_core::synthetic::{gold_corpus, FIXTURE_TECHNIQUES};
use persuasion_core::{Corpus, Language};

fn persuade(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_persuade"))
        .current_dir(dir)
        .env_remove("PERSUADE_SEED")
        .env_remove("PERSUADE_OUT")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = persuade(dir, args);
    assert!(
        out.status.success(),
        "persuade {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn merged(parts: BTreeMap<Language, Corpus>) -> Corpus {
    Corpus::new(parts.into_values().flat_map(Corpus::into_paragraphs).collect()).unwrap()
}

const LANGS: [Language; 3] = [Language::En, Language::Fr, Language::Po];

fn write_fixtures(dir: &Path, seed: u64) {
    let gold = merged(gold_corpus(&LANGS, 16, &FIXTURE_TECHNIQUES, 2, seed));
    let dev = merged(gold_corpus(&LANGS, 8, &FIXTURE_TECHNIQUES, 2, seed + 1));
    export_corpus(&gold, &dir.join("gold.jsonl")).unwrap();
    export_corpus(&dev, &dir.join("dev.jsonl")).unwrap();
}

/// Every file below `dir`, relative path to contents.
fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn pipeline(dir: &Path) {
    write_fixtures(dir, 5);
    ok(dir, &["import", "--input", "gold.jsonl", "--out", "gold.canon.jsonl"]);
    ok(dir, &["augment", "--input", "gold.canon.jsonl", "--out", "aug"]);
    let sizes = ok(
        dir,
        &["assemble", "--gold", "gold.canon.jsonl", "--pool", "aug/augmented.jsonl", "--recipe", "+T+BT-sl", "--out", "sets"],
    );
    assert!(sizes.starts_with("language\tsize\n"), "{sizes}");
    ok(dir, &["assemble", "--gold", "gold.canon.jsonl", "--recipe", "gold", "--out", "gold-sets"]);
    for (name, train) in [("gold", "gold-sets/en.jsonl"), ("aug", "sets/en.jsonl")] {
        let model = format!("{name}.model.json");
        let scores = format!("{name}.scores.tsv");
        ok(dir, &["train", "--train", train, "--dev", "dev.jsonl", "--epochs", "3", "--out", &model]);
        ok(dir, &["predict", "--model", &model, "--corpus", "dev.jsonl", "--out", &scores]);
    }
    let tuned = ok(dir, &["tune", "--scores", "gold.scores.tsv", "--dev", "dev.jsonl", "--out", "tune.tsv"]);
    assert!(tuned.starts_with("theta\t0."), "{tuned}");

    let mut members = vec![MemberSpec::new("gold"), MemberSpec::new("aug")];
    members[0].scores = Some("gold.scores.tsv".into());
    members[1].scores = Some("aug.scores.tsv".into());
    fs::write(dir.join("ensemble.toml"), EnsembleConfig::new(members).to_toml()).unwrap();
    ok(
        dir,
        &["ensemble", "--config", "ensemble.toml", "--tune-dev", "dev.jsonl", "--save-config", "tuned.toml", "--out", "pred.tsv"],
    );
    let eval = ok(dir, &["evaluate", "--gold", "dev.jsonl", "--pred", "pred.tsv", "--out", "eval"]);
    assert!(eval.contains("micro-F1"), "{eval}");
    ok(
        dir,
        &["bleu", "--ledger", "aug/ledger.jsonl", "--originals", "gold.canon.jsonl", "--paraphrases", "aug/augmented.jsonl", "--out", "bleu"],
    );
    ok(dir, &["export", "--corpus", "dev.jsonl", "--out", "dev.labels.tsv"]);
}

#[test]
fn pipeline_rerun_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pipeline(a.path());
    pipeline(b.path());
    let (sa, sb) = (snapshot(a.path()), snapshot(b.path()));
    assert_eq!(sa.keys().collect::<Vec<_>>(), sb.keys().collect::<Vec<_>>());
    for (path, bytes) in &sa {
        assert!(bytes == &sb[path], "{} differs between runs", path.display());
    }
    for m in ["gold.canon.jsonl.manifest.json", "aug/manifest.json", "pred.tsv.manifest.json", "eval/manifest.json"] {
        assert!(sa.contains_key(Path::new(m)), "missing {m}");
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&sa[Path::new("eval/manifest.json")]).unwrap();
    assert_eq!(manifest["command"], "evaluate");
    assert_eq!(manifest["seed"], 42);
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = persuade(dir.path(), &["train", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn missing_out_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    write_fixtures(dir.path(), 1);
    let out = persuade(dir.path(), &["import", "--input", "gold.jsonl"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_data_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.jsonl"), "{\"id\": 3}\n").unwrap();
    let out = persuade(dir.path(), &["import", "--input", "bad.jsonl", "--out", "x.jsonl"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let out = persuade(dir.path(), &["import", "--input", "absent.jsonl", "--out", "x.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = persuade(dir.path(), &["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("ensemble"));
}

#[test]
fn taxonomy_export_lists_all_techniques() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(dir.path(), &["taxonomy", "export", "--format", "tsv"]);
    assert!(text.starts_with("technique\tcategory\n"));
    assert!(text.contains("Loaded Language\t"));
    assert!(text.contains("Red Herring\t"));
}

#[test]
fn environment_sets_options() {
    let dir = tempfile::tempdir().unwrap();
    write_fixtures(dir.path(), 2);
    let out = Command::new(env!("CARGO_BIN_EXE_persuade"))
        .current_dir(dir.path())
        .env("PERSUADE_OUT", "from-env.jsonl")
        .env("PERSUADE_SEED", "7")
        .args(["import", "--input", "gold.jsonl"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value = serde_json::from_slice(
        &fs::read(dir.path().join("from-env.jsonl.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["seed"], 7);
}

#[test]
fn single_member_ensemble_matches_its_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_fixtures(d, 3);
    ok(d, &["train", "--train", "gold.jsonl", "--dev", "dev.jsonl", "--epochs", "2", "--out", "m.json"]);
    ok(d, &["predict", "--model", "m.json", "--corpus", "dev.jsonl", "--out", "s.tsv"]);
    let mut member = MemberSpec::new("only");
    member.scores = Some("s.tsv".into());
    let mut config = EnsembleConfig::new(vec![member]);
    let theta = Threshold::from_tenths(3).unwrap();
    config.default_threshold = theta;
    fs::write(d.join("e.toml"), config.to_toml()).unwrap();
    ok(d, &["ensemble", "--config", "e.toml", "--corpus", "dev.jsonl", "--out", "p.tsv"]);

    let expected = apply_threshold(&read_scores(&d.join("s.tsv")).unwrap(), theta);
    let got: BTreeMap<_, _> = read_task_labels(&d.join("p.tsv")).unwrap().into_iter().collect();
    assert_eq!(got.len(), expected.len());
    for (id, labels) in &expected {
        assert_eq!(&got[id], labels, "{id}");
    }
}

#[test]
fn bridge_subprocess_refuses_undeclared_direction() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_persuade"))
        .args(["bridge-mock", "--direction", "en:fr"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stdin = child.stdin.take().unwrap();
    let mut stdout = BufReader::new(child.stdout.take().unwrap());
    let mut line = String::new();
    stdout.read_line(&mut line).unwrap();
    let handshake: serde_json::Value = serde_json::from_str(&line).unwrap();
    assert_eq!(handshake["directions"], serde_json::json!([["en", "fr"]]));

    line.clear();
    writeln!(stdin, r#"{{"text":"one two","source":"en","target":"fr"}}"#).unwrap();
    stdin.flush().unwrap();
    stdout.read_line(&mut line).unwrap();
    let reply: serde_json::Value = serde_json::from_str(&line).unwrap();
    assert!(reply["text"].as_str().is_some_and(|t| !t.is_empty()), "{line}");

    line.clear();
    writeln!(stdin, r#"{{"text":"un deux","source":"fr","target":"en"}}"#).unwrap();
    stdin.flush().unwrap();
    stdout.read_line(&mut line).unwrap();
    let reply: serde_json::Value = serde_json::from_str(&line).unwrap();
    assert!(reply["error"].as_str().is_some(), "{line}");

    line.clear();
    writeln!(stdin, "not json").unwrap();
    stdin.flush().unwrap();
    stdout.read_line(&mut line).unwrap();
    let reply: serde_json::Value = serde_json::from_str(&line).unwrap();
    assert!(reply["error"].as_str().is_some(), "{line}");

    drop(stdin);
    assert!(child.wait().unwrap().success());
}

#[test]
fn analyze_writes_anova_and_effects() {
    use persuasion_core::analysis::DESIGN_TRAINING_SETS;
    use persuasion_core::metrics::f1_multilabel;
    use persuasion_core::{PredictionSet, Technique};

    let dir = tempfile::tempdir().unwrap();
    let runs = dir.path().join("runs");
    fs::create_dir(&runs).unwrap();
    for (li, &lang) in Language::TRAINING.iter().enumerate() {
        let gold = &gold_corpus(&[lang], 60, &Technique::ALL, 3, li as u64)[&lang];
        for (si, set) in DESIGN_TRAINING_SETS.iter().enumerate() {
            let pred: PredictionSet = gold
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let mut labels = p.labels.clone();
                    if (i + 3 * si + li) % 4 == 0 {
                        labels.clear();
                    }
                    if i % 5 == si % 5 {
                        labels.insert(Technique::Doubt);
                    }
                    (p.id.clone(), labels)
                })
                .collect();
            let report = f1_multilabel(gold, &pred).unwrap();
            fs::write(
                runs.join(format!("{set}__{lang}.json")),
                serde_json::to_string(&report).unwrap(),
            )
            .unwrap();
        }
    }
    let text = ok(dir.path(), &["analyze", "--runs", "runs", "--out", "anova"]);
    assert!(text.contains("trainingSet:label"), "{text}");
    let effects = fs::read_to_string(dir.path().join("anova/effects.csv")).unwrap();
    assert!(effects.lines().count() > 1);

    fs::remove_file(runs.join("gold__po.json")).unwrap();
    let out = persuade(dir.path(), &["analyze", "--runs", "runs", "--out", "anova2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("(gold, po)"));
}

#[test]
fn humaneval_aggregates_ratings() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("ratings.csv"),
        "evaluation,target_language,source_language,fluency,fidelity,surface_variability,human_produced,label_ok,technique\n\
         translation,fr,en,4,,,yes,yes,Doubt\n\
         translation,fr,en,2,,,no,no,Doubt\n\
         back_translation,en,fr,5,4,3,,yes,Slogans\n",
    )
    .unwrap();
    ok(dir.path(), &["humaneval", "--ratings", "ratings.csv", "--out", "agg.csv"]);
    let agg = fs::read_to_string(dir.path().join("agg.csv")).unwrap();
    assert!(agg.lines().count() > 2, "{agg}");
    assert!(agg.contains("3"), "{agg}");

    fs::write(
        dir.path().join("bad.csv"),
        "evaluation,target_language,source_language,fluency,label_ok,technique\ntranslation,fr,en,9,yes,Doubt\n",
    )
    .unwrap();
    let out = persuade(dir.path(), &["humaneval", "--ratings", "bad.csv", "--out", "x.csv"]);
    assert_eq!(out.status.code(), Some(2));
}
