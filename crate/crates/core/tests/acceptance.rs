//! Acceptance suite: one PASS/FAIL/SKIP line per criterion, non-zero exit on
//! any failure. Built with `harness = false` so the lines are always shown.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use persuasion_core::analysis::{
    anova_from_fit, build_table, fit_ols, Factor, ModelSpec, RegressionRow, Term,
    DESIGN_TRAINING_SETS,
};
use persuasion_core::augment::{augment_all, MockBackend, MockMode};
use persuasion_core::corpus::{
    assemble, export_corpus, import_corpus, inject_spans, read_task_labels, stats,
    write_task_labels, CorpusFormat, DatasetRecipe,
};
use persuasion_core::ensemble::{
    apply_threshold, doubt_rules, ensemble_predict, member_votes, tune_member_thresholds,
    tune_threshold, tune_voting_threshold, MemberSpec, RuleAction,
};
use persuasion_core::metrics::{bleu_corpus, f1_multilabel, report_from_confusions};
use persuasion_core::model::{
    predict_scores, read_scores, train, write_scores, Example, LogisticHead, TrainConfig,
};
use persuasion_core::synthetic::{gold_corpus, FIXTURE_TECHNIQUES};
use persuasion_core::taxonomy::{is_covered, parse_technique};
use persuasion_core::{
    Corpus, EnsembleConfig, Language, Pipeline, PredictionSet, RecipeName, Technique, Threshold,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($fmt)+));
        }
    };
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

// ---------------------------------------------------------------------------

fn metric_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for case in 0..200 {
        let n = rng.gen_range(0..=50);
        let gold = common::random_gold(&mut rng, n, Language::En);
        let pred = common::random_pred(&mut rng, &gold);
        let report = f1_multilabel(&gold, &pred).map_err(err)?;
        let (micro, macro_) = common::oracle_f1(&gold, &pred);
        ensure!(
            report.micro_f1 == micro && report.macro_f1 == macro_,
            "case {case}: got ({}, {}), oracle ({micro}, {macro_})",
            report.micro_f1,
            report.macro_f1
        );
    }
    Ok("200 random instances match exactly".into())
}

fn bleu_correctness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let refs: Vec<String> = (0..20)
        .map(|_| common::random_sentence(&mut rng, 30, 4..15))
        .collect();
    let identity: Vec<(&str, &str)> = refs.iter().map(|r| (r.as_str(), r.as_str())).collect();
    let s = bleu_corpus(&identity, 4).map_err(err)?;
    ensure!(s.bleu == vec![100.0; 4], "identity corpus gave {:?}", s.bleu);

    // hand count: p1 = 5/7 ("the" clipped to 2), p2 = 3/6, c = 7 > r = 6 so BP = 1
    let worked = 100.0 * ((5.0f64 / 7.0).ln() / 2.0 + (3.0f64 / 6.0).ln() / 2.0).exp();
    ensure!((worked - 59.761_430_466_719_68).abs() < 1e-9, "oracle drifted");
    let s = bleu_corpus(&[("the cat sat on the mat", "the cat the cat on the mat")], 2)
        .map_err(err)?;
    ensure!(
        (s.bleu[1] - worked).abs() < 1e-6,
        "worked example BLEU-2 {} != {worked}",
        s.bleu[1]
    );

    for case in 0..50 {
        let mut pairs: Vec<(String, String)> = (0..rng.gen_range(1..12))
            .map(|_| {
                let r = common::random_sentence(&mut rng, 8, 3..12);
                let h = common::random_sentence(&mut rng, 8, 3..12);
                (r, h)
            })
            .collect();
        let a = bleu_corpus(&pairs, 4).map_err(err)?;
        pairs.shuffle(&mut rng);
        let b = bleu_corpus(&pairs, 4).map_err(err)?;
        ensure!(a == b, "case {case}: reordering changed BLEU");
        let oracle = common::oracle_bleu(&pairs, 4);
        ensure!(
            (a.bleu[3] - oracle).abs() < 1e-9,
            "case {case}: BLEU-4 {} vs oracle {oracle}",
            a.bleu[3]
        );
    }
    Ok(format!("identity 100, worked example {worked:.4}, 50 reorderings"))
}

fn coverage_fixture() -> Check {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/coverage_table2.tsv");
    let text = fs::read_to_string(&path).map_err(err)?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<Language> = lines
        .next()
        .ok_or("empty fixture")?
        .split('\t')
        .skip(1)
        .map(|c| c.parse().map_err(err))
        .collect::<Result<_, _>>()?;
    let mut cells = 0;
    let mut rows = 0;
    for line in lines {
        let mut fields = line.split('\t');
        let target: Language = fields.next().ok_or("row label")?.parse().map_err(err)?;
        rows += 1;
        for (source, cell) in header.iter().zip(fields) {
            if cell == "-" {
                ensure!(*source == target, "dash off the diagonal at {target}/{source}");
                for kind in [Pipeline::Translation, Pipeline::BackTranslation] {
                    ensure!(
                        is_covered(kind, *source, target).is_err(),
                        "same-language query {source}->{target} should be an error"
                    );
                }
                continue;
            }
            let marks: Vec<bool> = cell.chars().map(|c| c == 'Y').collect();
            for (kind, want) in [Pipeline::Translation, Pipeline::BackTranslation]
                .into_iter()
                .zip(marks)
            {
                let got = is_covered(kind, *source, target).map_err(err)?;
                ensure!(got == want, "{kind} {source}->{target}: got {got}, table says {want}");
                cells += 1;
            }
        }
    }
    ensure!(rows == 9 && cells == 96, "fixture shape {rows} rows, {cells} cells");
    ensure!(
        matches!(is_covered(Pipeline::Translation, Language::Po, Language::En), Ok(true))
            && matches!(is_covered(Pipeline::Translation, Language::En, Language::Po), Ok(false)),
        "po->en / en->po asymmetry lost"
    );
    for s in Language::SURPRISE {
        for t in Language::ALL.into_iter().filter(|&t| t != s) {
            ensure!(
                matches!(is_covered(Pipeline::Translation, s, t), Ok(false)),
                "surprise source {s} covered"
            );
        }
    }
    Ok("48 translation + 48 back-translation cells and 6 diagonals match".into())
}

fn id_multiset(c: &Corpus) -> Vec<String> {
    let mut v: Vec<String> = c.iter().map(|p| p.id.to_string()).collect();
    v.sort();
    v
}

fn is_sub(a: &Corpus, b: &Corpus) -> bool {
    let bs: BTreeSet<String> = id_multiset(b).into_iter().collect();
    id_multiset(a).iter().all(|id| bs.contains(id))
}

fn recipe_algebra() -> Check {
    let gold = gold_corpus(&Language::TRAINING, 5, &FIXTURE_TECHNIQUES, 2, 42);
    let all = Corpus::concat(gold.values()).map_err(err)?;
    let (pool, _) = augment_all(&all, &MockBackend::new(MockMode::Tagging, 42)).map_err(err)?;
    let build = |name| assemble(&DatasetRecipe::new(name), &gold, std::slice::from_ref(&pool));
    let mut sets = BTreeMap::new();
    for name in [
        RecipeName::Gold,
        RecipeName::T,
        RecipeName::Bt,
        RecipeName::BtSl,
        RecipeName::TBt,
        RecipeName::TBtSl,
        RecipeName::Span,
    ] {
        sets.insert(name, build(name).map_err(err)?);
    }
    use Language::*;
    // hand-enumerated from the coverage table: 5 gold paragraphs per language
    // plus 5 per covered training source (T) or pivot (BT)
    let expected: [(RecipeName, [usize; 9]); 5] = [
        (RecipeName::T, [30, 30, 15, 15, 25, 15, 25, 15, 0]),
        (RecipeName::Bt, [25, 25, 15, 15, 25, 20, 0, 0, 0]),
        (RecipeName::BtSl, [30, 35, 20, 20, 30, 20, 0, 0, 0]),
        (RecipeName::TBt, [50, 50, 25, 25, 45, 30, 0, 0, 0]),
        (RecipeName::TBtSl, [55, 60, 30, 30, 50, 30, 0, 0, 0]),
    ];
    let order = [En, Fr, It, Ru, Ge, Po, Es, El, Ka];
    for (name, sizes) in expected {
        for (lang, want) in order.iter().zip(sizes) {
            let got = sets[&name][lang].len();
            ensure!(got == want, "{name} {lang}: {got} paragraphs, expected {want}");
        }
    }
    for lang in Language::TRAINING {
        let g = &sets[&RecipeName::Gold][&lang];
        ensure!(g.len() == 5, "gold {lang} has {}", g.len());
        let chain = [
            g,
            &sets[&RecipeName::Bt][&lang],
            &sets[&RecipeName::BtSl][&lang],
        ];
        ensure!(
            chain.windows(2).all(|w| is_sub(w[0], w[1])),
            "gold ⊆ +BT ⊆ +BT-sl broken for {lang}"
        );
        let chain = [
            g,
            &sets[&RecipeName::T][&lang],
            &sets[&RecipeName::TBt][&lang],
            &sets[&RecipeName::TBtSl][&lang],
        ];
        ensure!(
            chain.windows(2).all(|w| is_sub(w[0], w[1])),
            "gold ⊆ +T ⊆ +T+BT ⊆ +T+BT-sl broken for {lang}"
        );
        let spanned = g.iter().filter(|p| !p.spans.is_empty()).count();
        let span = &sets[&RecipeName::Span][&lang];
        ensure!(
            span.len() == g.len() + spanned,
            "+span {lang}: {} != {} + {spanned}",
            span.len(),
            g.len()
        );
    }
    Ok("sizes, monotonicity chains and span law hold".into())
}

fn threshold_optimality() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for case in 0..100 {
        let n = rng.gen_range(1..=40);
        let gold = common::random_gold(&mut rng, n, Language::Fr);
        let scores = common::random_scores(&mut rng, &gold);
        let (theta, f1) = tune_threshold(&scores, &gold).map_err(err)?;
        let grid: Vec<f64> = (1..=9)
            .map(|t| common::oracle_threshold_f1(&scores, &gold, f64::from(t) / 10.0))
            .collect();
        let best = grid.iter().cloned().fold(f64::MIN, f64::max);
        let first = grid.iter().position(|&v| v == best).unwrap() + 1;
        ensure!(
            f1 == best && usize::from(theta.tenths()) == first,
            "case {case}: returned θ={theta} F1={f1}, oracle θ=0.{first} F1={best}"
        );
    }
    Ok("100 fixtures: maximal F1 with smallest θ".into())
}

fn random_member_scores(rng: &mut ChaCha8Rng, gold: &Corpus) -> persuasion_core::ScoreMatrix {
    common::random_scores(rng, gold)
}

fn ensemble_properties() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for case in 0..100 {
        let n = rng.gen_range(1..=30);
        let corpus = common::random_gold(&mut rng, n, Language::Ru);
        let scores: Vec<_> = (0..3).map(|_| random_member_scores(&mut rng, &corpus)).collect();
        let mut config = EnsembleConfig::new(
            ["a", "b", "c"].into_iter().map(MemberSpec::new).collect(),
        );
        for m in ["a", "b", "c"] {
            config.set_threshold(m, Language::Ru, Threshold::from_tenths(rng.gen_range(1..=9)).unwrap());
        }
        let votes: Vec<PredictionSet> = config
            .members
            .iter()
            .zip(&scores)
            .map(|(m, s)| member_votes(&config, m, s, &corpus))
            .collect::<Result<_, _>>()
            .map_err(err)?;
        let mut by_v = Vec::new();
        for v in 1..=3 {
            config.voting_threshold = v;
            by_v.push(ensemble_predict(&config, &scores, &corpus).map_err(err)?);
        }
        for p in &corpus {
            let sets: Vec<&BTreeSet<Technique>> = votes.iter().map(|v| &v[&p.id]).collect();
            let union: BTreeSet<Technique> = sets.iter().flat_map(|s| s.iter().copied()).collect();
            let inter: BTreeSet<Technique> = sets[0]
                .iter()
                .copied()
                .filter(|t| sets.iter().all(|s| s.contains(t)))
                .collect();
            ensure!(by_v[0][&p.id] == union, "case {case}: v=1 is not the union");
            ensure!(by_v[2][&p.id] == inter, "case {case}: v=3 is not the intersection");
            ensure!(
                by_v[1][&p.id].is_subset(&by_v[0][&p.id])
                    && by_v[2][&p.id].is_subset(&by_v[1][&p.id]),
                "case {case}: not monotone in v"
            );
        }
        let mut single = EnsembleConfig::new(vec![MemberSpec::new("a")]);
        let theta = config.threshold("a", Language::Ru);
        single.set_threshold("a", Language::Ru, theta);
        single.voting_threshold = 1;
        let solo = ensemble_predict(&single, &scores[..1], &corpus).map_err(err)?;
        ensure!(
            solo == apply_threshold(&scores[0], theta),
            "case {case}: single member differs from its thresholded output"
        );
    }
    Ok("union, intersection, monotonicity, identity on 100 fixtures".into())
}

fn alpha_rank<T: Copy>(items: &[T], name: impl Fn(T) -> String) -> BTreeMap<String, usize> {
    let mut names: Vec<String> = items.iter().map(|&t| name(t)).collect();
    names.sort();
    names.into_iter().enumerate().map(|(i, n)| (n, i)).collect()
}

fn full_rows(mut f: impl FnMut(RecipeName, Language, Technique) -> f64) -> Vec<RegressionRow> {
    let mut rows = Vec::new();
    for s in DESIGN_TRAINING_SETS {
        for l in Language::TRAINING {
            for t in Technique::ALL {
                rows.push(RegressionRow {
                    training_set: s,
                    test_language: l,
                    technique: t,
                    f1: f(s, l, t),
                });
            }
        }
    }
    rows
}

fn regression_recovery() -> Check {
    // planted additive effects; the alphabetically first level of each
    // factor gets 0, so treatment-coded coefficients equal the effects
    let tech_rank = alpha_rank(&Technique::ALL, |t| t.name().to_string());
    let set_rank = alpha_rank(&DESIGN_TRAINING_SETS, |s| s.as_str().to_string());
    let lang_rank = alpha_rank(&Language::TRAINING, |l| l.code().to_string());
    let a = |t: Technique| 0.01 * tech_rank[t.name()] as f64;
    let b = |s: RecipeName| -0.02 * set_rank[s.as_str()] as f64;
    let c = |l: Language| 0.015 * lang_rank[l.code()] as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let mut rows = full_rows(|s, l, t| 0.3 + a(t) + b(s) + c(l));
    for r in &mut rows {
        r.f1 += noise.sample(&mut rng);
    }
    let spec = ModelSpec::new(vec![
        Term::Main(Factor::Label),
        Term::Main(Factor::TrainingSet),
        Term::Main(Factor::TestLang),
    ])
    .map_err(err)?;
    let fit = fit_ols(&rows, &spec).map_err(err)?;
    let mut planted = BTreeMap::new();
    planted.insert("(Intercept)".to_string(), 0.3);
    for t in Technique::ALL {
        planted.insert(format!("label[{}]", t.name()), a(t));
    }
    for s in DESIGN_TRAINING_SETS {
        planted.insert(format!("trainingSet[{}]", s.as_str()), b(s));
    }
    for l in Language::TRAINING {
        planted.insert(format!("testLang[{}]", l.code()), c(l));
    }
    let mut worst: f64 = 0.0;
    for (k, col) in fit.columns().iter().enumerate() {
        let truth = planted[&col.name];
        let z = (fit.coefficients[k] - truth).abs() / fit.std_errors[k];
        worst = worst.max(z);
        ensure!(z <= 3.0, "{} off by {z:.2} SE", col.name);
    }

    let exact = full_rows(|_, _, t| 0.1 + 0.02 * t.index() as f64);
    let fit1 = fit_ols(&exact, &ModelSpec::new(vec![Term::Main(Factor::Label)]).map_err(err)?)
        .map_err(err)?;
    ensure!((fit1.r_squared - 1.0).abs() <= 1e-12, "zero-noise R² = {}", fit1.r_squared);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noisy = full_rows(|_, _, _| rng.gen_range(0.0..1.0));
    let mut runs = BTreeMap::new();
    for s in DESIGN_TRAINING_SETS {
        for l in Language::TRAINING {
            runs.insert((s, l), report_from_confusions(&[Default::default(); 23]));
        }
    }
    let table = build_table(&runs, &DESIGN_TRAINING_SETS, &Language::TRAINING).map_err(err)?;
    ensure!(table.len() == 828, "build_table gave {} rows", table.len());
    let full = fit_ols(&noisy, &ModelSpec::full()).map_err(err)?;
    let anova = anova_from_fit(&full);
    let ss: f64 = anova.terms.iter().map(|t| t.ss).sum::<f64>() + anova.residual_ss;
    ensure!(
        ((ss - anova.total_ss) / anova.total_ss).abs() <= 1e-9,
        "SS decomposition {ss} vs total {}",
        anova.total_ss
    );
    let mut dfs: Vec<(String, usize)> = anova.terms.iter().map(|t| (t.term.clone(), t.df)).collect();
    dfs.sort();
    let want = [
        ("label", 22),
        ("testLang", 5),
        ("testLang:trainingSet", 25),
        ("trainingSet", 5),
        ("trainingSet:label", 110),
    ];
    ensure!(
        dfs.iter().map(|(n, d)| (n.as_str(), *d)).eq(want.iter().copied()),
        "term dfs {dfs:?}"
    );
    Ok(format!("max |error| {worst:.2} SE; 828 rows; dfs 22/5/5/110/25"))
}

fn gradient_check() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let dim = rng.gen_range(1..=32);
        let head = LogisticHead {
            weights: (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            bias: rng.gen_range(-1.0..1.0),
        };
        let n = rng.gen_range(1..10);
        let xs: Vec<Example> = (0..n)
            .map(|_| {
                let mut idx: Vec<usize> = (0..dim).collect();
                idx.shuffle(&mut rng);
                idx.truncate(rng.gen_range(1..=dim));
                idx.sort();
                idx.into_iter().map(|i| (i, rng.gen_range(-1.0..1.0))).collect()
            })
            .collect();
        let ys: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        // loss against the textbook form
        let direct: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, &y)| {
                let z = head.bias + x.iter().map(|&(i, v)| head.weights[i] * v).sum::<f64>();
                let p = 1.0 / (1.0 + (-z).exp());
                -(if y { p.ln() } else { (1.0 - p).ln() })
            })
            .sum();
        ensure!(
            (direct - head.loss(&xs, &ys)).abs() <= 1e-10 * direct.max(1.0),
            "loss differs from -Σ log-likelihood"
        );
        let (gw, gb) = head.gradient(&xs, &ys);
        let h = 1e-5;
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-3);
        for (i, &analytic) in gw.iter().enumerate().take(dim) {
            let mut up = head.clone();
            up.weights[i] += h;
            let mut down = head.clone();
            down.weights[i] -= h;
            let numeric = (up.loss(&xs, &ys) - down.loss(&xs, &ys)) / (2.0 * h);
            let r = rel(analytic, numeric);
            worst = worst.max(r);
            ensure!(r <= 1e-5, "weight {i}: analytic {analytic} numeric {numeric}");
        }
        let mut up = head.clone();
        up.bias += h;
        let mut down = head.clone();
        down.bias -= h;
        let numeric = (up.loss(&xs, &ys) - down.loss(&xs, &ys)) / (2.0 * h);
        ensure!(rel(gb, numeric) <= 1e-5, "bias: analytic {gb} numeric {numeric}");
    }
    Ok(format!("50 random heads, worst relative error {worst:.1e}"))
}

// ---------------------------------------------------------------------------
// End-to-end smoke

fn run_pipeline(dir: &Path, seed: u64) -> Result<f64, String> {
    let gold = gold_corpus(&Language::TRAINING, 20, &FIXTURE_TECHNIQUES, 2, seed);
    let dev = Corpus::concat(gold_corpus(&Language::TRAINING, 8, &FIXTURE_TECHNIQUES, 2, seed + 1).values())
        .map_err(err)?;
    let all_gold = Corpus::concat(gold.values()).map_err(err)?;
    export_corpus(&all_gold, &dir.join("gold.jsonl")).map_err(err)?;
    export_corpus(&dev, &dir.join("dev.jsonl")).map_err(err)?;

    let backend = MockBackend::new(MockMode::Tagging, seed);
    let (pool, ledger) = augment_all(&all_gold, &backend).map_err(err)?;
    export_corpus(&pool, &dir.join("augmented.jsonl")).map_err(err)?;
    ledger.write_jsonl(&dir.join("ledger.jsonl")).map_err(err)?;

    // reread what was written so the files are what the rest consumes
    let pool = import_corpus(&dir.join("augmented.jsonl"), &CorpusFormat::Canonical).map_err(err)?;
    let sets = assemble(&DatasetRecipe::new(RecipeName::TBtSl), &gold, &[pool]).map_err(err)?;
    let aug_train = Corpus::concat(sets.values()).map_err(err)?;
    export_corpus(&aug_train, &dir.join("train-tbtsl.jsonl")).map_err(err)?;

    let config = TrainConfig {
        epochs: 5,
        seed,
        ..Default::default()
    };
    let mut members = Vec::new();
    let mut scores = Vec::new();
    for (id, train_set) in [("gold", &all_gold), ("tbtsl", &aug_train)] {
        let model = train(train_set, &dev, &config).map_err(err)?;
        model.save(&dir.join(format!("model-{id}.json"))).map_err(err)?;
        let path = dir.join(format!("scores-{id}.tsv"));
        write_scores(&predict_scores(&model, &dev).map_err(err)?, &path).map_err(err)?;
        scores.push(read_scores(&path).map_err(err)?);
        let mut m = MemberSpec::new(id);
        m.heuristics = id == "gold";
        members.push(m);
    }

    let mut ens = EnsembleConfig::new(members);
    ens.heuristics = doubt_rules(&Language::TRAINING, RuleAction::Assert).map_err(err)?;
    tune_member_thresholds(&mut ens, &scores, &dev).map_err(err)?;
    let (v, _) = tune_voting_threshold(&ens, &scores, &dev).map_err(err)?;
    ens.voting_threshold = v;
    fs::write(dir.join("ensemble.toml"), ens.to_toml()).map_err(err)?;

    let pred = ensemble_predict(&ens, &scores, &dev).map_err(err)?;
    for (lang, part) in dev.by_language() {
        let rows = part.iter().map(|p| (&p.id, &pred[&p.id]));
        write_task_labels(&dir.join(format!("pred-{lang}.txt")), rows).map_err(err)?;
    }
    let mut reread = PredictionSet::new();
    for lang in Language::TRAINING {
        for (id, labels) in read_task_labels(&dir.join(format!("pred-{lang}.txt"))).map_err(err)? {
            reread.insert(id, labels);
        }
    }
    ensure!(reread == pred, "task-format predictions do not round-trip");
    let report = f1_multilabel(&dev, &reread).map_err(err)?;
    fs::write(
        dir.join("report.json"),
        serde_json::to_string_pretty(&report).map_err(err)?,
    )
    .map_err(err)?;
    fs::write(dir.join("report-per-label.tsv"), report.per_label_tsv()).map_err(err)?;
    Ok(report.micro_f1)
}

fn dir_contents(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(err)? {
        let entry = entry.map_err(err)?;
        out.insert(
            entry.file_name().to_string_lossy().into_owned(),
            fs::read(entry.path()).map_err(err)?,
        );
    }
    Ok(out)
}

fn end_to_end() -> Check {
    let a = tempfile::tempdir().map_err(err)?;
    let b = tempfile::tempdir().map_err(err)?;
    let fa = run_pipeline(a.path(), 42)?;
    let fb = run_pipeline(b.path(), 42)?;
    let (ca, cb) = (dir_contents(a.path())?, dir_contents(b.path())?);
    ensure!(ca.len() >= 12, "only {} artifacts written", ca.len());
    ensure!(
        ca.keys().eq(cb.keys()),
        "artifact sets differ: {:?} vs {:?}",
        ca.keys(),
        cb.keys()
    );
    for (name, bytes) in &ca {
        ensure!(&cb[name] == bytes, "{name} differs between runs");
    }
    ensure!(fa == fb, "F1 differs between runs");
    ensure!(fa > 0.3, "dev micro-F1 {fa:.3} suspiciously low for cue-word data");
    Ok(format!("{} byte-identical artifacts, dev micro-F1 {fa:.3}", ca.len()))
}

// ---------------------------------------------------------------------------
// Dataset-conditional

const GOLD_DIR_VAR: &str = "PERSUADE_GOLD_DIR";

/// `<dir>/<lang>.jsonl`, or the shared-task layout
/// `<dir>/<lang>/<split>-labels-subtask-3.txt` with
/// `<dir>/<lang>/<split>-articles-subtask-3/`.
fn load_gold(dir: &Path, lang: Language) -> Result<Corpus, String> {
    let jsonl = dir.join(format!("{lang}.jsonl"));
    if jsonl.exists() {
        return import_corpus(&jsonl, &CorpusFormat::Canonical).map_err(err);
    }
    let lang_dir = dir.join(lang.code());
    let mut parts = Vec::new();
    let mut files: Vec<PathBuf> = fs::read_dir(&lang_dir)
        .map_err(|e| format!("{}: {e}", lang_dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.ends_with("-labels-subtask-3.txt"))
        })
        .collect();
    files.sort();
    for f in files {
        let name = f.file_name().unwrap().to_string_lossy().into_owned();
        let split = name.trim_end_matches("-labels-subtask-3.txt");
        let format = CorpusFormat::TaskLabels {
            language: lang,
            articles_dir: lang_dir.join(format!("{split}-articles-subtask-3")),
        };
        parts.push(import_corpus(&f, &format).map_err(err)?);
    }
    ensure!(!parts.is_empty(), "no gold files for {lang} in {}", dir.display());
    Corpus::concat(&parts).map_err(err)
}

fn gold_data() -> Outcome {
    let Some(dir) = std::env::var_os(GOLD_DIR_VAR) else {
        return Outcome::Skip(format!("{GOLD_DIR_VAR} not set"));
    };
    let dir = PathBuf::from(dir);
    let check = || -> Check {
        let sizes = [
            (Language::En, 3761, 7521),
            (Language::Fr, 1694, 3387),
            (Language::It, 1746, 3491),
            (Language::Ru, 1246, 2491),
            (Language::Ge, 1253, 2505),
            (Language::Po, 1233, 2465),
        ];
        let mut total = 0;
        let mut corpora = BTreeMap::new();
        for (lang, n, span) in sizes {
            let c = load_gold(&dir, lang)?;
            ensure!(c.len() == n, "{lang}: {} gold paragraphs, expected {n}", c.len());
            let s = inject_spans(&c).len();
            ensure!(s == span, "{lang}: +span {s}, expected {span}");
            total += c.len();
            corpora.insert(lang, c);
        }
        ensure!(total == 10_933, "total {total}");
        let ll = stats(&corpora[&Language::En])[&parse_technique("Loaded Language").map_err(err)?];
        ensure!(ll == 1809, "en Loaded Language {ll}, expected 1809");
        let rh = stats(&corpora[&Language::Ru])[&parse_technique("Red Herring").map_err(err)?];
        ensure!(rh == 2, "ru Red Herring {rh}, expected 2");
        Ok("gold, +span and label counts match".into())
    };
    match check() {
        Ok(d) => Outcome::Pass(d),
        Err(e) => Outcome::Fail(e),
    }
}

// ---------------------------------------------------------------------------

fn timed(check: fn() -> Check) -> impl Fn() -> Outcome {
    move || match check() {
        Ok(d) => Outcome::Pass(d),
        Err(e) => Outcome::Fail(e),
    }
}

fn main() {
    type Criterion = (&'static str, Option<u64>, Box<dyn Fn() -> Outcome>);
    let criteria: Vec<Criterion> = vec![
        ("metric oracle equivalence", Some(5), Box::new(timed(metric_oracle))),
        ("BLEU correctness", Some(5), Box::new(timed(bleu_correctness))),
        ("coverage fixture (Table 2)", None, Box::new(timed(coverage_fixture))),
        ("recipe algebra", Some(10), Box::new(timed(recipe_algebra))),
        ("threshold tuning optimality", None, Box::new(timed(threshold_optimality))),
        ("ensemble properties", None, Box::new(timed(ensemble_properties))),
        ("regression recovery", Some(10), Box::new(timed(regression_recovery))),
        ("gradient check", Some(5), Box::new(timed(gradient_check))),
        ("end-to-end smoke", Some(60), Box::new(timed(end_to_end))),
        ("gold data sizes (dataset-conditional)", None, Box::new(gold_data)),
    ];
    let mut failed = 0;
    for (name, budget, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let over = budget.is_some_and(|b| took > Duration::from_secs(b));
        let (status, detail) = match outcome {
            Outcome::Pass(_) if over => {
                ("FAIL", format!("runtime {took:.2?} over {}s budget", budget.unwrap()))
            }
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => ("FAIL", d),
            Outcome::Skip(d) => ("SKIP", d),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("{status} {name} [{:.2}s] {detail}", took.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
