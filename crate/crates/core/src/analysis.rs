//! Regression analysis of per-label F1 over training set, test language and
//! technique, plus aggregation of human ratings of augmented text.
//!
//! Factors are treatment coded with the alphabetically first level as
//! reference. The least-squares fit uses a Householder QR in column order, so
//! sequential (Type-I) sums of squares fall out of the rotated response:
//! each column contributes the square of its rotated component.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::corpus::RecipeName;
use crate::error::{Error, Result};
use crate::metrics::EvalReport;
use crate::taxonomy::{parse_technique, Language, Pipeline, Technique};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionRow {
    pub training_set: RecipeName,
    pub test_language: Language,
    pub technique: Technique,
    pub f1: f64,
}

/// Training sets of the full analysis design.
pub const DESIGN_TRAINING_SETS: [RecipeName; 6] = [
    RecipeName::Gold,
    RecipeName::T,
    RecipeName::Bt,
    RecipeName::BtSl,
    RecipeName::TBt,
    RecipeName::TBtSl,
];

/// One row per (training set, language, technique) from per-label F1.
pub fn build_table(
    runs: &BTreeMap<(RecipeName, Language), EvalReport>,
    training_sets: &[RecipeName],
    languages: &[Language],
) -> Result<Vec<RegressionRow>> {
    let missing: Vec<String> = training_sets
        .iter()
        .flat_map(|&s| languages.iter().map(move |&l| (s, l)))
        .filter(|k| !runs.contains_key(k))
        .map(|(s, l)| format!("({s}, {l})"))
        .collect();
    if !missing.is_empty() {
        return Err(Error::IncompleteDesign(missing));
    }
    let mut rows = Vec::with_capacity(training_sets.len() * languages.len() * 23);
    for &s in training_sets {
        for &l in languages {
            let report = &runs[&(s, l)];
            for t in Technique::ALL {
                rows.push(RegressionRow {
                    training_set: s,
                    test_language: l,
                    technique: t,
                    f1: report.per_label.get(&t).map_or(0.0, |r| r.f1),
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Factor {
    Label,
    TrainingSet,
    TestLang,
}

impl Factor {
    pub fn name(self) -> &'static str {
        match self {
            Factor::Label => "label",
            Factor::TrainingSet => "trainingSet",
            Factor::TestLang => "testLang",
        }
    }

    fn level(self, row: &RegressionRow) -> &'static str {
        match self {
            Factor::Label => row.technique.name(),
            Factor::TrainingSet => row.training_set.as_str(),
            Factor::TestLang => row.test_language.code(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Term {
    Main(Factor),
    Interaction(Factor, Factor),
}

impl Term {
    fn factors(self) -> Vec<Factor> {
        match self {
            Term::Main(f) => vec![f],
            Term::Interaction(a, b) => vec![a, b],
        }
    }

    fn involves_pair(self, a: Factor, b: Factor) -> bool {
        matches!(self, Term::Interaction(x, y) if (x == a && y == b) || (x == b && y == a))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Main(a) => f.write_str(a.name()),
            Term::Interaction(a, b) => write!(f, "{}:{}", a.name(), b.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub terms: Vec<Term>,
}

impl ModelSpec {
    pub fn new(terms: Vec<Term>) -> Result<Self> {
        let spec = ModelSpec { terms };
        spec.validate()?;
        Ok(spec)
    }

    /// label + trainingSet + testLang + trainingSet:label + testLang:trainingSet
    pub fn full() -> Self {
        use Factor::*;
        ModelSpec {
            terms: vec![
                Term::Main(Label),
                Term::Main(TrainingSet),
                Term::Main(TestLang),
                Term::Interaction(TrainingSet, Label),
                Term::Interaction(TestLang, TrainingSet),
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, t) in self.terms.iter().enumerate() {
            if self.terms[..i].contains(t) {
                return Err(Error::Config(format!("duplicate term {t}")));
            }
            if let Term::Interaction(a, b) = t {
                if a == b {
                    return Err(Error::Config(format!("{t} interacts a factor with itself")));
                }
                for f in [a, b] {
                    if !self.terms.contains(&Term::Main(*f)) {
                        return Err(Error::Config(format!(
                            "interaction {t} needs main effect {}",
                            f.name()
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    /// Index into the model's terms; `None` for the intercept.
    pub term: Option<usize>,
    /// (factor, level index) pairs whose indicators multiply into this column.
    dummies: Vec<(Factor, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Design {
    levels: BTreeMap<Factor, Vec<String>>,
    columns: Vec<Column>,
}

impl Design {
    fn new(rows: &[RegressionRow], spec: &ModelSpec) -> Self {
        let mut levels = BTreeMap::new();
        for t in &spec.terms {
            for f in t.factors() {
                levels.entry(f).or_insert_with(|| {
                    let mut ls: Vec<String> = rows.iter().map(|r| f.level(r).to_string()).collect();
                    ls.sort();
                    ls.dedup();
                    ls
                });
            }
        }
        let mut columns = vec![Column {
            name: "(Intercept)".into(),
            term: None,
            dummies: vec![],
        }];
        for (k, t) in spec.terms.iter().enumerate() {
            match *t {
                Term::Main(f) => {
                    for (i, l) in levels[&f].iter().enumerate().skip(1) {
                        columns.push(Column {
                            name: format!("{}[{l}]", f.name()),
                            term: Some(k),
                            dummies: vec![(f, i)],
                        });
                    }
                }
                Term::Interaction(a, b) => {
                    for (i, la) in levels[&a].iter().enumerate().skip(1) {
                        for (j, lb) in levels[&b].iter().enumerate().skip(1) {
                            columns.push(Column {
                                name: format!("{}[{la}]:{}[{lb}]", a.name(), b.name()),
                                term: Some(k),
                                dummies: vec![(a, i), (b, j)],
                            });
                        }
                    }
                }
            }
        }
        Design { levels, columns }
    }

    fn level_index(&self, f: Factor, level: &str) -> Option<usize> {
        self.levels[&f].iter().position(|l| l == level)
    }

    /// Design row for a cell given as level names.
    fn row_for(&self, cell: &BTreeMap<Factor, &str>) -> Option<Vec<f64>> {
        let idx: BTreeMap<Factor, usize> = self
            .levels
            .keys()
            .map(|&f| Some((f, self.level_index(f, cell.get(&f)?)?)))
            .collect::<Option<_>>()?;
        Some(
            self.columns
                .iter()
                .map(|c| {
                    if c.dummies.iter().all(|(f, i)| idx[f] == *i) {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect(),
        )
    }

    fn matrix(&self, rows: &[RegressionRow]) -> Vec<Vec<f64>> {
        // column-major
        let mut x = vec![vec![0.0; rows.len()]; self.columns.len()];
        for (r, row) in rows.iter().enumerate() {
            let cell: BTreeMap<Factor, &str> =
                self.levels.keys().map(|&f| (f, f.level(row))).collect();
            let values = self.row_for(&cell).expect("levels come from these rows");
            for (c, v) in values.into_iter().enumerate() {
                x[c][r] = v;
            }
        }
        x
    }
}

/// Householder QR of a column-major matrix, column order preserved.
struct Qr {
    /// Reflectors (v, beta) applied in order; v has length n - k.
    reflectors: Vec<(Vec<f64>, f64)>,
    /// Upper-triangular R, row-major p x p.
    r: Vec<Vec<f64>>,
}

fn householder_qr(mut x: Vec<Vec<f64>>, names: &[String]) -> Result<Qr> {
    let n = x.first().map_or(0, Vec::len);
    let p = x.len();
    let mut reflectors = Vec::with_capacity(p);
    let mut aliased = Vec::new();
    let col_norms: Vec<f64> = x.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    for j in 0..p {
        let k = reflectors.len();
        if k >= n {
            aliased.push(names[j].clone());
            continue;
        }
        let tail: f64 = x[j][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if tail <= 1e-10 * col_norms[j].max(1.0) {
            aliased.push(names[j].clone());
            continue;
        }
        let alpha = if x[j][k] > 0.0 { -tail } else { tail };
        let mut v: Vec<f64> = x[j][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|a| a * a).sum();
        let beta = 2.0 / vnorm2;
        for col in x.iter_mut().skip(j) {
            let dot: f64 = v.iter().zip(&col[k..]).map(|(a, b)| a * b).sum();
            let s = beta * dot;
            for (c, a) in col[k..].iter_mut().zip(&v) {
                *c -= s * a;
            }
        }
        reflectors.push((v, beta));
    }
    if !aliased.is_empty() {
        return Err(Error::RankDeficient(aliased));
    }
    let r = (0..p)
        .map(|i| (0..p).map(|j| if j >= i { x[j][i] } else { 0.0 }).collect())
        .collect();
    Ok(Qr { reflectors, r })
}

impl Qr {
    /// Qᵀ y
    fn rotate(&self, y: &[f64]) -> Vec<f64> {
        let mut y = y.to_vec();
        for (k, (v, beta)) in self.reflectors.iter().enumerate() {
            let dot: f64 = v.iter().zip(&y[k..]).map(|(a, b)| a * b).sum();
            let s = beta * dot;
            for (c, a) in y[k..].iter_mut().zip(v) {
                *c -= s * a;
            }
        }
        y
    }

    fn solve_upper(&self, b: &[f64]) -> Vec<f64> {
        let p = self.r.len();
        let mut x = vec![0.0; p];
        for i in (0..p).rev() {
            let s: f64 = (i + 1..p).map(|j| self.r[i][j] * x[j]).sum();
            x[i] = (b[i] - s) / self.r[i][i];
        }
        x
    }

    /// Diagonal of (RᵀR)⁻¹.
    fn inverse_gram_diag(&self) -> Vec<f64> {
        let p = self.r.len();
        // columns of R⁻¹ via back substitution on unit vectors
        let mut rinv = vec![vec![0.0; p]; p];
        for c in 0..p {
            let mut e = vec![0.0; p];
            e[c] = 1.0;
            let col = self.solve_upper(&e);
            for i in 0..p {
                rinv[i][c] = col[i];
            }
        }
        rinv.iter().map(|row| row.iter().map(|v| v * v).sum()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub spec: ModelSpec,
    design: Design,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub ss_total: f64,
    pub ss_residual: f64,
    pub df_residual: usize,
    /// Sequential sum of squares of every non-intercept column.
    column_ss: Vec<f64>,
}

impl OlsFit {
    pub fn columns(&self) -> &[Column] {
        &self.design.columns
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.design.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.design
            .columns
            .iter()
            .position(|c| c.name == name)
            .map(|k| self.coefficients[k])
    }

    /// Prediction for a cell given as factor -> level name. Factors absent
    /// from the model may be omitted.
    pub fn predict_cell(&self, cell: &BTreeMap<Factor, &str>) -> Option<f64> {
        let x = self.design.row_for(cell)?;
        Some(x.iter().zip(&self.coefficients).map(|(a, b)| a * b).sum())
    }

    pub fn levels(&self, f: Factor) -> Option<&[String]> {
        self.design.levels.get(&f).map(Vec::as_slice)
    }

    /// Design matrix columns (column-major), for diagnostics.
    pub fn design_matrix(&self, rows: &[RegressionRow]) -> Vec<Vec<f64>> {
        self.design.matrix(rows)
    }
}

/// Least-squares fit of `f1` on the model's terms.
pub fn fit_ols(rows: &[RegressionRow], spec: &ModelSpec) -> Result<OlsFit> {
    spec.validate()?;
    if rows.is_empty() {
        return Err(Error::Empty("regression table"));
    }
    let design = Design::new(rows, spec);
    let x = design.matrix(rows);
    let names: Vec<String> = design.columns.iter().map(|c| c.name.clone()).collect();
    let n = rows.len();
    let p = names.len();
    let qr = householder_qr(x.clone(), &names)?;
    let y: Vec<f64> = rows.iter().map(|r| r.f1).collect();
    let qty = qr.rotate(&y);
    let coefficients = qr.solve_upper(&qty[..p]);
    let fitted: Vec<f64> = (0..n)
        .map(|i| (0..p).map(|j| x[j][i] * coefficients[j]).sum())
        .collect();
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let mean = y.iter().sum::<f64>() / n as f64;
    let ss_total: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_residual: f64 = qty[p..].iter().map(|v| v * v).sum();
    let df_residual = n - p;
    let r_squared = if ss_total > 0.0 {
        1.0 - ss_residual / ss_total
    } else {
        1.0
    };
    let adj_r_squared = if df_residual > 0 {
        1.0 - (1.0 - r_squared) * (n as f64 - 1.0) / df_residual as f64
    } else {
        f64::NAN
    };
    let sigma2 = if df_residual > 0 {
        ss_residual / df_residual as f64
    } else {
        f64::NAN
    };
    let std_errors = qr
        .inverse_gram_diag()
        .into_iter()
        .map(|d| (sigma2 * d).sqrt())
        .collect();
    let column_ss = qty[..p].iter().map(|v| v * v).collect();
    Ok(OlsFit {
        spec: spec.clone(),
        design,
        coefficients,
        std_errors,
        fitted,
        residuals,
        r_squared,
        adj_r_squared,
        ss_total,
        ss_residual,
        df_residual,
        column_ss,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaRow {
    pub term: String,
    pub df: usize,
    pub ss: f64,
    /// 100 * ss / ss_total
    pub explvar: f64,
    pub f_stat: Option<f64>,
    pub p_value: Option<f64>,
    pub stars: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaTable {
    /// In model (sequential) order.
    pub terms: Vec<AnovaRow>,
    pub residual_df: usize,
    pub residual_ss: f64,
    pub total_ss: f64,
    pub r_squared: f64,
    pub adj_r_squared: f64,
}

pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

/// Sequential (Type-I) ANOVA from a fit.
pub fn anova_from_fit(fit: &OlsFit) -> AnovaTable {
    let ms_res = if fit.df_residual > 0 {
        fit.ss_residual / fit.df_residual as f64
    } else {
        0.0
    };
    let terms = fit
        .spec
        .terms
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let (df, ss) = fit
                .design
                .columns
                .iter()
                .zip(&fit.column_ss)
                .filter(|(c, _)| c.term == Some(k))
                .fold((0usize, 0.0), |(d, s), (_, v)| (d + 1, s + v));
            let explvar = if fit.ss_total > 0.0 {
                100.0 * ss / fit.ss_total
            } else {
                0.0
            };
            let (f_stat, p_value) = if fit.df_residual > 0 && ms_res > 0.0 && df > 0 {
                let f = (ss / df as f64) / ms_res;
                let p = FisherSnedecor::new(df as f64, fit.df_residual as f64)
                    .map(|d| d.sf(f))
                    .ok();
                (Some(f), p)
            } else {
                (None, None)
            };
            AnovaRow {
                term: t.to_string(),
                df,
                ss,
                explvar,
                f_stat,
                p_value,
                stars: p_value.map_or("", significance_stars).to_string(),
            }
        })
        .collect();
    AnovaTable {
        terms,
        residual_df: fit.df_residual,
        residual_ss: fit.ss_residual,
        total_ss: fit.ss_total,
        r_squared: fit.r_squared,
        adj_r_squared: fit.adj_r_squared,
    }
}

pub fn anova_sequential(rows: &[RegressionRow], spec: &ModelSpec) -> Result<AnovaTable> {
    Ok(anova_from_fit(&fit_ols(rows, spec)?))
}

impl AnovaTable {
    pub fn explained_variance(&self) -> f64 {
        self.terms.iter().map(|t| t.explvar).sum()
    }

    /// Terms ordered by decreasing explained variance.
    pub fn sorted_by_explvar(&self) -> Vec<&AnovaRow> {
        let mut rows: Vec<&AnovaRow> = self.terms.iter().collect();
        rows.sort_by(|a, b| b.explvar.total_cmp(&a.explvar));
        rows
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("term\tdf\tss\texplvar\tF\tp\tsign\n");
        let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |v| format!("{v:.6e}"));
        for r in self.sorted_by_explvar() {
            out.push_str(&format!(
                "{}\t{}\t{:.6}\t{:.2}\t{}\t{}\t{}\n",
                r.term,
                r.df,
                r.ss,
                r.explvar,
                opt(r.f_stat),
                opt(r.p_value),
                r.stars
            ));
        }
        out.push_str(&format!(
            "Residuals\t{}\t{:.6}\t\t\t\t\n",
            self.residual_df, self.residual_ss
        ));
        out.push_str(&format!(
            "total explained variance\t\t\t{:.2}\t\t\t\n",
            self.explained_variance()
        ));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectRow {
    pub training_set: RecipeName,
    pub technique: Technique,
    pub predicted_f1: f64,
}

/// Marginal predictions per (training set, technique), averaged with equal
/// weight over the test-language levels. Training sets are ordered by their
/// combined reference size.
pub fn effects(fit: &OlsFit) -> Result<Vec<EffectRow>> {
    if !fit
        .spec
        .terms
        .iter()
        .any(|t| t.involves_pair(Factor::TrainingSet, Factor::Label))
    {
        return Err(Error::MissingTerm("trainingSet:label".into()));
    }
    let mut sets: Vec<RecipeName> = fit.design.levels[&Factor::TrainingSet]
        .iter()
        .map(|s| s.parse())
        .collect::<Result<_>>()?;
    sets.sort_by_key(|s| s.reference_total_size());
    let mut techniques: Vec<Technique> = fit.design.levels[&Factor::Label]
        .iter()
        .map(|s| parse_technique(s))
        .collect::<Result<_>>()?;
    techniques.sort();
    let langs: Vec<Option<&str>> = match fit.design.levels.get(&Factor::TestLang) {
        Some(ls) => ls.iter().map(|l| Some(l.as_str())).collect(),
        None => vec![None],
    };
    let mut out = Vec::new();
    for &s in &sets {
        for &t in &techniques {
            let mut sum = 0.0;
            for l in &langs {
                let mut cell = BTreeMap::new();
                cell.insert(Factor::TrainingSet, s.as_str());
                cell.insert(Factor::Label, t.name());
                if let Some(l) = l {
                    cell.insert(Factor::TestLang, *l);
                }
                sum += fit.predict_cell(&cell).expect("levels from the fit");
            }
            out.push(EffectRow {
                training_set: s,
                technique: t,
                predicted_f1: sum / langs.len() as f64,
            });
        }
    }
    Ok(out)
}

pub fn effects_csv(rows: &[EffectRow]) -> String {
    let mut out = String::from("training_set,technique,predicted_f1\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.6}\n",
            r.training_set, r.technique, r.predicted_f1
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Human evaluation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub evaluation: Pipeline,
    pub target_language: Language,
    pub source_language: Language,
    pub fluency: u8,
    pub fidelity: Option<u8>,
    pub surface_variability: Option<u8>,
    pub human_produced: Option<bool>,
    pub label_ok: bool,
    pub technique: Technique,
}

impl RatingRecord {
    pub fn validate(&self) -> Result<()> {
        let scale = |name: &str, v: u8| {
            if (1..=5).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} rating {v} outside 1..=5")))
            }
        };
        scale("fluency", self.fluency)?;
        match self.evaluation {
            Pipeline::BackTranslation => {
                let (Some(fi), Some(sv)) = (self.fidelity, self.surface_variability) else {
                    return Err(Error::Config(
                        "back-translation rating needs fidelity and surface variability".into(),
                    ));
                };
                scale("fidelity", fi)?;
                scale("surface variability", sv)?;
                if self.human_produced.is_some() {
                    return Err(Error::Config(
                        "human_produced only applies to translations".into(),
                    ));
                }
            }
            Pipeline::Translation => {
                if self.human_produced.is_none() {
                    return Err(Error::Config("translation rating needs human_produced".into()));
                }
                if self.fidelity.is_some() || self.surface_variability.is_some() {
                    return Err(Error::Config(
                        "fidelity and surface variability only apply to back-translations".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RatingCsvRow {
    evaluation: String,
    target_language: String,
    source_language: String,
    fluency: u8,
    #[serde(default)]
    fidelity: Option<u8>,
    #[serde(default)]
    surface_variability: Option<u8>,
    #[serde(default)]
    human_produced: Option<String>,
    label_ok: String,
    technique: String,
}

fn parse_yes_no(s: &str) -> Result<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "yes" | "y" | "true" | "1" => Ok(true),
        "no" | "n" | "false" | "0" => Ok(false),
        other => Err(Error::Config(format!("expected yes/no, got `{other}`"))),
    }
}

pub fn read_ratings(path: &Path) -> Result<Vec<RatingRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<RatingCsvRow>().enumerate() {
        let line = i + 2;
        let at = |e: Error| Error::parse(path, line, e);
        let row = row.map_err(|e| Error::parse(path, line, e))?;
        let evaluation = match row.evaluation.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "translation" | "t" => Pipeline::Translation,
            "back_translation" | "backtranslation" | "bt" => Pipeline::BackTranslation,
            other => return Err(Error::parse(path, line, format!("unknown evaluation `{other}`"))),
        };
        let human_produced = match row.human_produced.as_deref().map(str::trim) {
            None | Some("") => None,
            Some(s) => Some(parse_yes_no(s).map_err(at)?),
        };
        let rec = RatingRecord {
            evaluation,
            target_language: row.target_language.trim().parse().map_err(at)?,
            source_language: row.source_language.trim().parse().map_err(at)?,
            fluency: row.fluency,
            fidelity: row.fidelity,
            surface_variability: row.surface_variability,
            human_produced,
            label_ok: parse_yes_no(&row.label_ok).map_err(at)?,
            technique: parse_technique(&row.technique).map_err(at)?,
        };
        rec.validate().map_err(at)?;
        out.push(rec);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingAggregate {
    pub evaluation: Pipeline,
    pub target_language: Language,
    /// `None` is the average over all source/pivot languages.
    pub source_language: Option<Language>,
    /// `None` covers all techniques.
    pub technique: Option<Technique>,
    pub n: usize,
    pub fluency_mean: f64,
    pub fidelity_mean: Option<f64>,
    pub surface_variability_mean: Option<f64>,
    pub human_produced_pct: Option<f64>,
    pub label_ok_pct: f64,
}

#[derive(Default)]
struct Acc {
    n: usize,
    fluency: u64,
    fidelity: (u64, usize),
    variability: (u64, usize),
    human: (usize, usize),
    label_ok: usize,
}

impl Acc {
    fn add(&mut self, r: &RatingRecord) {
        self.n += 1;
        self.fluency += u64::from(r.fluency);
        if let Some(v) = r.fidelity {
            self.fidelity.0 += u64::from(v);
            self.fidelity.1 += 1;
        }
        if let Some(v) = r.surface_variability {
            self.variability.0 += u64::from(v);
            self.variability.1 += 1;
        }
        if let Some(h) = r.human_produced {
            self.human.0 += usize::from(h);
            self.human.1 += 1;
        }
        self.label_ok += usize::from(r.label_ok);
    }
}

fn mean(sum: u64, n: usize) -> Option<f64> {
    (n > 0).then(|| sum as f64 / n as f64)
}

/// Means of each aspect and yes-percentages per target language, per
/// (target, source) cell, each also broken out per technique.
pub fn aggregate_ratings(records: &[RatingRecord]) -> Result<Vec<RatingAggregate>> {
    if records.is_empty() {
        return Err(Error::Empty("no ratings"));
    }
    type Key = (Pipeline, Language, Option<Language>, Option<Technique>);
    let mut groups: BTreeMap<Key, Acc> = BTreeMap::new();
    for r in records {
        for src in [None, Some(r.source_language)] {
            for tech in [None, Some(r.technique)] {
                groups
                    .entry((r.evaluation, r.target_language, src, tech))
                    .or_default()
                    .add(r);
            }
        }
    }
    Ok(groups
        .into_iter()
        .map(|((evaluation, target, source, technique), a)| RatingAggregate {
            evaluation,
            target_language: target,
            source_language: source,
            technique,
            n: a.n,
            fluency_mean: a.fluency as f64 / a.n as f64,
            fidelity_mean: mean(a.fidelity.0, a.fidelity.1),
            surface_variability_mean: mean(a.variability.0, a.variability.1),
            human_produced_pct: (a.human.1 > 0).then(|| 100.0 * a.human.0 as f64 / a.human.1 as f64),
            label_ok_pct: 100.0 * a.label_ok as f64 / a.n as f64,
        })
        .collect())
}

pub fn ratings_csv(rows: &[RatingAggregate]) -> String {
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.4}"));
    let mut out = String::from(
        "evaluation,target_language,source_language,technique,n,fluency,fidelity,surface_variability,human_produced_pct,label_ok_pct\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{:.4},{},{},{},{:.4}\n",
            match r.evaluation {
                Pipeline::Translation => "translation",
                Pipeline::BackTranslation => "back_translation",
            },
            r.target_language,
            r.source_language.map_or("Avg".to_string(), |l| l.to_string()),
            r.technique.map_or("all".to_string(), |t| t.to_string()),
            r.n,
            r.fluency_mean,
            opt(r.fidelity_mean),
            opt(r.surface_variability_mean),
            opt(r.human_produced_pct),
            r.label_ok_pct
        ));
    }
    out
}
