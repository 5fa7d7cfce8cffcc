use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use persuasion_core::analysis::{
    aggregate_ratings, anova_from_fit, build_table, effects, effects_csv, fit_ols, ratings_csv,
    read_ratings, ModelSpec, DESIGN_TRAINING_SETS,
};
use persuasion_core::augment::{
    augment_all, serve_bridge, AugmentationLedger, BridgeBackend, MockBackend, MockMode,
    TranslatorBackend,
};
use persuasion_core::corpus::{
    assemble, export_corpus, import_corpus, read_task_labels, write_task_labels, CorpusFormat,
    DatasetRecipe,
};
use persuasion_core::ensemble::{
    ensemble_predict, tune_member_thresholds, tune_threshold, tune_voting_threshold,
};
use persuasion_core::metrics::{bleu_by_pair, f1_multilabel};
use persuasion_core::model::{predict_scores, read_scores, train, write_scores, SelectionMetric, TrainConfig};
use persuasion_core::taxonomy::export_tsv;
use persuasion_core::{
    Corpus, EnsembleConfig, EvalReport, Language, OvrModel, PredictionSet, RecipeName,
};
use serde::Serialize;

use crate::cli::*;
use crate::manifest::Manifest;
use crate::UsageError;

pub struct Ctx {
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Ctx {
    fn out(&self, what: &str) -> Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| UsageError(format!("--out is required ({what})")).into())
    }

    fn out_dir(&self) -> Result<&Path> {
        let dir = self.out("output directory")?;
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(dir)
    }

    fn manifest(&self, command: &str, args: &impl Serialize) -> Result<Manifest> {
        Ok(Manifest::new(command, self.seed, serde_json::to_value(args)?))
    }
}

fn language(code: &str) -> Result<Language> {
    code.parse()
        .map_err(|_| UsageError(format!("unknown language code `{code}`")).into())
}

fn load(path: &Path) -> Result<Corpus> {
    Ok(import_corpus(path, &CorpusFormat::Canonical)?)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn mock_mode(mode: MockModeArg, k: usize) -> MockMode {
    match mode {
        MockModeArg::Tagging => MockMode::Tagging,
        MockModeArg::Lossy => MockMode::Lossy(k),
        MockModeArg::Identity => MockMode::Identity,
    }
}

pub fn run(ctx: &Ctx, command: Command) -> Result<()> {
    match command {
        Command::Import(a) => import(ctx, a),
        Command::Augment(a) => augment(ctx, a),
        Command::Assemble(a) => assemble_cmd(ctx, a),
        Command::Train(a) => train_cmd(ctx, a),
        Command::Predict(a) => predict(ctx, a),
        Command::Tune(a) => tune(ctx, a),
        Command::Ensemble(a) => ensemble(ctx, a),
        Command::Evaluate(a) => evaluate(ctx, a),
        Command::Bleu(a) => bleu(ctx, a),
        Command::Analyze(a) => analyze(ctx, a),
        Command::Humaneval(a) => humaneval(ctx, a),
        Command::Export(a) => export(ctx, a),
        Command::Taxonomy(a) => taxonomy(ctx, a),
        Command::BridgeMock(a) => bridge_mock(a),
    }
}

fn import(ctx: &Ctx, a: ImportArgs) -> Result<()> {
    let out = ctx.out("canonical corpus file")?;
    let format = match a.format {
        InputFormat::Canonical => CorpusFormat::Canonical,
        InputFormat::Task => {
            let lang = a
                .language
                .as_deref()
                .ok_or_else(|| UsageError("--format task needs --language".into()))?;
            let articles = a
                .articles
                .clone()
                .ok_or_else(|| UsageError("--format task needs --articles".into()))?;
            CorpusFormat::TaskLabels {
                language: language(lang)?,
                articles_dir: articles,
            }
        }
    };
    let corpus = import_corpus(&a.input, &format)?.sorted();
    export_corpus(&corpus, out)?;
    let mut m = ctx.manifest("import", &a)?;
    m.input(&a.input)?;
    if let Some(dir) = &a.articles {
        m.input(dir)?;
    }
    m.output(out)?;
    m.write_next_to(out)?;
    println!("{} paragraphs", corpus.len());
    Ok(())
}

fn augment(ctx: &Ctx, a: AugmentArgs) -> Result<()> {
    let dir = ctx.out_dir()?;
    let gold = load(&a.input)?;
    let backend: Box<dyn TranslatorBackend> = match a.backend {
        BackendKind::Mock => Box::new(MockBackend::new(mock_mode(a.mock_mode, a.lossy_k), ctx.seed)),
        BackendKind::Bridge => {
            let program = a
                .bridge
                .as_deref()
                .ok_or_else(|| UsageError("--backend bridge needs --bridge".into()))?;
            Box::new(BridgeBackend::spawn(program, &a.bridge_args)?)
        }
    };
    let (pool, ledger) = augment_all(&gold, backend.as_ref())?;
    let corpus_path = dir.join("augmented.jsonl");
    let ledger_path = dir.join("ledger.jsonl");
    export_corpus(&pool, &corpus_path)?;
    ledger.write_jsonl(&ledger_path)?;
    let mut m = ctx.manifest("augment", &a)?;
    m.input(&a.input)?;
    m.output(&corpus_path)?;
    m.output(&ledger_path)?;
    m.write_next_to(dir)?;
    println!(
        "{} paraphrases, {} skipped as uncovered, {} failures",
        pool.len(),
        ledger.skipped_uncovered,
        ledger.failures.len()
    );
    Ok(())
}

fn assemble_cmd(ctx: &Ctx, a: AssembleArgs) -> Result<()> {
    let dir = ctx.out_dir()?;
    let name: RecipeName = a
        .recipe
        .parse()
        .map_err(|_| UsageError(format!("unknown recipe `{}`", a.recipe)))?;
    let mut recipe = DatasetRecipe::new(name);
    recipe.low_frequency_only = a.low_frequency;
    if !a.family_group.is_empty() {
        recipe.family_group = Some(
            a.family_group
                .iter()
                .map(|l| language(l))
                .collect::<Result<_>>()?,
        );
    }
    let gold = load(&a.gold)?.by_language();
    let pool: Vec<Corpus> = a.pool.iter().map(|p| load(p)).collect::<Result<_>>()?;
    let sets = assemble(&recipe, &gold, &pool)?;
    let mut m = ctx.manifest("assemble", &a)?;
    m.input(&a.gold)?;
    for p in &a.pool {
        m.input(p)?;
    }
    let mut sizes = String::from("language\tsize\n");
    for (lang, corpus) in &sets {
        let path = dir.join(format!("{lang}.jsonl"));
        export_corpus(corpus, &path)?;
        m.output(&path)?;
        sizes.push_str(&format!("{lang}\t{}\n", corpus.len()));
    }
    let sizes_path = dir.join("sizes.tsv");
    write(&sizes_path, &sizes)?;
    m.output(&sizes_path)?;
    m.write_next_to(dir)?;
    print!("{sizes}");
    Ok(())
}

fn train_cmd(ctx: &Ctx, a: TrainArgs) -> Result<()> {
    let out = ctx.out("model file")?;
    let config = TrainConfig {
        learning_rate: a.learning_rate,
        epochs: a.epochs,
        batch_size: a.batch_size,
        seed: ctx.seed,
        selection: match a.selection {
            Selection::Micro => SelectionMetric::Micro,
            Selection::Macro => SelectionMetric::Macro,
        },
        ..Default::default()
    };
    let model = train(&load(&a.train)?, &load(&a.dev)?, &config)?;
    model.save(out)?;
    let mut m = ctx.manifest("train", &a)?;
    m.input(&a.train)?;
    m.input(&a.dev)?;
    m.output(out)?;
    m.write_next_to(out)?;
    let md = &model.metadata;
    println!(
        "best epoch {} of {}: dev micro-F1 {:.4}, macro-F1 {:.4}",
        md.best_epoch, md.epochs_run, md.best_dev_micro_f1, md.best_dev_macro_f1
    );
    Ok(())
}

fn predict(ctx: &Ctx, a: PredictArgs) -> Result<()> {
    let out = ctx.out("score file")?;
    let model = OvrModel::load(&a.model)?;
    let corpus = load(&a.corpus)?;
    let scores = predict_scores(&model, &corpus)?;
    write_scores(&scores, out)?;
    let mut m = ctx.manifest("predict", &a)?;
    m.input(&a.model)?;
    m.input(&a.corpus)?;
    m.output(out)?;
    m.write_next_to(out)?;
    println!("{} rows", scores.len());
    Ok(())
}

fn tune(ctx: &Ctx, a: TuneArgs) -> Result<()> {
    let scores = read_scores(&a.scores)?;
    let dev = load(&a.dev)?;
    let (theta, f1) = tune_threshold(&scores, &dev)?;
    let text = format!("theta\t{theta}\nmicro_f1\t{f1:.6}\n");
    print!("{text}");
    if let Some(out) = &ctx.out {
        write(out, &text)?;
        let mut m = ctx.manifest("tune", &a)?;
        m.input(&a.scores)?;
        m.input(&a.dev)?;
        m.output(out)?;
        m.write_next_to(out)?;
    }
    Ok(())
}

fn ensemble(ctx: &Ctx, a: EnsembleArgs) -> Result<()> {
    let out = ctx.out("prediction file")?;
    let mut config = EnsembleConfig::load(&a.config)?;
    let base = a.config.parent().unwrap_or(Path::new("."));
    let mut m = ctx.manifest("ensemble", &a)?;
    m.input(&a.config)?;
    let mut scores = Vec::new();
    for member in &config.members {
        let rel = member.scores.as_ref().ok_or_else(|| {
            persuasion_core::Error::Config(format!("member `{}` has no scores file", member.id))
        })?;
        let path = base.join(rel);
        scores.push(read_scores(&path)?);
        m.input(&path)?;
    }
    if let Some(dev_path) = &a.tune_dev {
        let dev = load(dev_path)?;
        m.input(dev_path)?;
        tune_member_thresholds(&mut config, &scores, &dev)?;
        let (v, f1) = tune_voting_threshold(&config, &scores, &dev)?;
        config.voting_threshold = v;
        println!("voting threshold {v}: dev micro-F1 {f1:.4}");
    }
    let corpus_path = a
        .corpus
        .clone()
        .or_else(|| a.tune_dev.clone())
        .or_else(|| config.corpus.as_ref().map(|c| base.join(c)))
        .ok_or_else(|| UsageError("no corpus: pass --corpus or set `corpus` in the config".into()))?;
    let corpus = load(&corpus_path)?;
    if a.tune_dev.as_ref() != Some(&corpus_path) {
        m.input(&corpus_path)?;
    }
    let pred = ensemble_predict(&config, &scores, &corpus)?;
    write_task_labels(out, corpus.iter().map(|p| (&p.id, &pred[&p.id])))?;
    m.output(out)?;
    if let Some(path) = &a.save_config {
        write(path, &config.to_toml())?;
        m.output(path)?;
    }
    m.write_next_to(out)?;
    Ok(())
}

fn read_predictions(path: &Path) -> Result<PredictionSet> {
    Ok(read_task_labels(path)?.into_iter().collect())
}

fn evaluate(ctx: &Ctx, a: EvaluateArgs) -> Result<()> {
    let dir = ctx.out_dir()?;
    let gold = load(&a.gold)?;
    let report = f1_multilabel(&gold, &read_predictions(&a.pred)?)?;
    let json = dir.join("report.json");
    let tsv = dir.join("per_label.tsv");
    write(&json, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    write(&tsv, &report.per_label_tsv())?;
    let mut m = ctx.manifest("evaluate", &a)?;
    m.input(&a.gold)?;
    m.input(&a.pred)?;
    m.output(&json)?;
    m.output(&tsv)?;
    m.write_next_to(dir)?;
    println!(
        "micro-F1 {:.4}\nmacro-F1 {:.4}",
        report.micro_f1, report.macro_f1
    );
    Ok(())
}

fn bleu(ctx: &Ctx, a: BleuArgs) -> Result<()> {
    let dir = ctx.out_dir()?;
    let ledger = AugmentationLedger::read_jsonl(&a.ledger)?;
    let report = bleu_by_pair(&ledger, &load(&a.originals)?, &load(&a.paraphrases)?)?;
    let pairs = dir.join("bleu.tsv");
    let averages = dir.join("averages.tsv");
    write(&pairs, &report.to_tsv())?;
    write(&averages, &report.averages_tsv())?;
    let mut m = ctx.manifest("bleu", &a)?;
    m.input(&a.ledger)?;
    m.input(&a.originals)?;
    m.input(&a.paraphrases)?;
    m.output(&pairs)?;
    m.output(&averages)?;
    m.write_next_to(dir)?;
    print!("{}", report.averages_tsv());
    Ok(())
}

fn analyze(ctx: &Ctx, a: AnalyzeArgs) -> Result<()> {
    let dir = ctx.out_dir()?;
    let sets: Vec<RecipeName> = if a.sets.is_empty() {
        DESIGN_TRAINING_SETS.to_vec()
    } else {
        a.sets
            .iter()
            .map(|s| {
                s.parse()
                    .map_err(|_| UsageError(format!("unknown training set `{s}`")).into())
            })
            .collect::<Result<_>>()?
    };
    let languages: Vec<Language> = if a.languages.is_empty() {
        Language::TRAINING.to_vec()
    } else {
        a.languages.iter().map(|l| language(l)).collect::<Result<_>>()?
    };
    let mut m = ctx.manifest("analyze", &a)?;
    let mut runs = BTreeMap::new();
    for &s in &sets {
        for &l in &languages {
            let path = a.runs.join(format!("{s}__{l}.json"));
            if !path.exists() {
                continue;
            }
            let text = fs::read_to_string(&path)
                .with_context(|| format!("reading {}", path.display()))?;
            let report: EvalReport = serde_json::from_str(&text)
                .map_err(|e| persuasion_core::Error::Config(format!("{}: {e}", path.display())))?;
            m.input(&path)?;
            runs.insert((s, l), report);
        }
    }
    let rows = build_table(&runs, &sets, &languages)?;
    let fit = fit_ols(&rows, &ModelSpec::full())?;
    let anova = anova_from_fit(&fit);
    let tsv = dir.join("anova.tsv");
    let json = dir.join("anova.json");
    let eff = dir.join("effects.csv");
    write(&tsv, &anova.to_tsv())?;
    write(&json, &(serde_json::to_string_pretty(&anova)? + "\n"))?;
    write(&eff, &effects_csv(&effects(&fit)?))?;
    for p in [&tsv, &json, &eff] {
        m.output(p)?;
    }
    m.write_next_to(dir)?;
    print!("{}", anova.to_tsv());
    println!("R2 {:.4}, adjusted R2 {:.4}", anova.r_squared, anova.adj_r_squared);
    Ok(())
}

fn humaneval(ctx: &Ctx, a: HumanevalArgs) -> Result<()> {
    let out = ctx.out("aggregate CSV")?;
    let rows = aggregate_ratings(&read_ratings(&a.ratings)?)?;
    write(out, &ratings_csv(&rows))?;
    let mut m = ctx.manifest("humaneval", &a)?;
    m.input(&a.ratings)?;
    m.output(out)?;
    m.write_next_to(out)?;
    Ok(())
}

fn export(ctx: &Ctx, a: ExportArgs) -> Result<()> {
    let out = ctx.out("task-labels file")?;
    let corpus = load(&a.corpus)?;
    write_task_labels(out, corpus.iter().map(|p| (&p.id, &p.labels)))?;
    let mut m = ctx.manifest("export", &a)?;
    m.input(&a.corpus)?;
    m.output(out)?;
    m.write_next_to(out)?;
    Ok(())
}

fn taxonomy(ctx: &Ctx, a: TaxonomyArgs) -> Result<()> {
    let TaxonomyAction::Export { format: TableFormat::Tsv } = a.action;
    let text = export_tsv();
    match &ctx.out {
        Some(out) => {
            write(out, &text)?;
            let mut m = ctx.manifest("taxonomy", &a)?;
            m.output(out)?;
            m.write_next_to(out)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn bridge_mock(a: BridgeMockArgs) -> Result<()> {
    let mut backend = MockBackend::new(mock_mode(a.mock_mode, a.lossy_k), 0);
    if !a.directions.is_empty() {
        let dirs = a
            .directions
            .iter()
            .map(|d| {
                let (s, t) = d
                    .split_once(':')
                    .ok_or_else(|| UsageError(format!("direction `{d}` is not source:target")))?;
                Ok((language(s)?, language(t)?))
            })
            .collect::<Result<Vec<_>>>()?;
        backend = backend.with_directions(dirs);
    }
    let stdin = io::stdin();
    let stdout = io::stdout();
    serve_bridge(&backend, stdin.lock(), stdout.lock())?;
    io::stdout().flush()?;
    Ok(())
}
