//! Stratified k-fold cross-validation over the representation models,
//! with pooled confusion matrices and micro/macro/weighted metrics.
//!
//! Resampling scope is explicit because it changes what the scores mean:
//! `per-fold` (the default) resamples training folds only, while `global`
//! resamples before folding, which lets duplicated minority documents
//! straddle train and test folds and inflates scores.
//!
//! Everything downstream of the one configured seed is deterministic,
//! including at different thread counts, so a report can be regenerated
//! bit-for-bit from its embedded config (wall-clock timing excepted; the
//! CSV suppresses it unless explicitly requested).

use std::hash::{Hash, Hasher};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::balance::{resample, BalanceError, SamplingRegime};
use crate::corpus::{LabeledSet, PolarityClass};
use crate::features::{build_vocabulary, vectorize, CountVector, FeatureError};
use crate::forest::{train_forest, ForestError, ForestParams};
use crate::lexicon::Lexicon;
use crate::represent::{transform, ModelKind};
use crate::seed::{derive_seed, FnvHasher};
use crate::textnorm::TokenSeq;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(
        "class {class} has {count} items; {k}-fold stratification needs at least {k} per class"
    )]
    Folds {
        class: PolarityClass,
        count: usize,
        k: usize,
    },
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Balance(#[from] BalanceError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Forest(#[from] ForestError),
}

// ---------------------------------------------------------------------------
// Confusion matrix and metrics
// ---------------------------------------------------------------------------

/// 3×3 counts; rows are gold classes, columns predicted classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ConfusionMatrix {
    cells: [[u64; 3]; 3],
}

impl ConfusionMatrix {
    pub fn new() -> ConfusionMatrix {
        ConfusionMatrix::default()
    }

    pub fn from_cells(cells: [[u64; 3]; 3]) -> ConfusionMatrix {
        ConfusionMatrix { cells }
    }

    pub fn add(&mut self, gold: PolarityClass, predicted: PolarityClass) {
        self.cells[gold.index()][predicted.index()] += 1;
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for g in 0..3 {
            for p in 0..3 {
                self.cells[g][p] += other.cells[g][p];
            }
        }
    }

    pub fn get(&self, gold: PolarityClass, predicted: PolarityClass) -> u64 {
        self.cells[gold.index()][predicted.index()]
    }

    pub fn cells(&self) -> &[[u64; 3]; 3] {
        &self.cells
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().flatten().sum()
    }

    pub fn diagonal(&self) -> u64 {
        (0..3).map(|i| self.cells[i][i]).sum()
    }

    pub fn row_sum(&self, gold: usize) -> u64 {
        self.cells[gold].iter().sum()
    }

    pub fn col_sum(&self, predicted: usize) -> u64 {
        (0..3).map(|g| self.cells[g][predicted]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision/recall/F1 under the three averaging schemes plus per class.
///
/// For single-label multiclass data, pooled (micro) precision, recall,
/// and F1 all equal accuracy; `compute_metrics` asserts the underlying
/// integer identity rather than comparing floats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub per_class: [ClassMetrics; 3],
    pub micro: ClassMetrics,
    pub macro_avg: ClassMetrics,
    pub weighted: ClassMetrics,
    pub accuracy: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1_of(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn compute_metrics(cm: &ConfusionMatrix) -> Result<Metrics, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::EmptyMatrix);
    }

    let mut per_class = [ClassMetrics {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    }; 3];
    let mut pooled_tp = 0u64;
    let mut pooled_fp = 0u64;
    let mut pooled_fn = 0u64;
    for (c, entry) in per_class.iter_mut().enumerate() {
        let tp = cm.cells[c][c];
        let col = cm.col_sum(c);
        let row = cm.row_sum(c);
        pooled_tp += tp;
        pooled_fp += col - tp;
        pooled_fn += row - tp;
        let p = ratio(tp, col);
        let r = ratio(tp, row);
        *entry = ClassMetrics {
            precision: p,
            recall: r,
            f1: f1_of(p, r),
        };
    }

    // Micro identity: pooled TP+FP and TP+FN both pool to the grand total,
    // so micro precision, recall, and F1 are all the accuracy.
    assert_eq!(pooled_tp + pooled_fp, total);
    assert_eq!(pooled_tp + pooled_fn, total);
    let accuracy = pooled_tp as f64 / total as f64;
    let micro = ClassMetrics {
        precision: accuracy,
        recall: accuracy,
        f1: accuracy,
    };

    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / 3.0;
    let macro_avg = ClassMetrics {
        precision: mean(|m| m.precision),
        recall: mean(|m| m.recall),
        f1: mean(|m| m.f1),
    };

    let weight = |f: fn(&ClassMetrics) -> f64| {
        (0..3)
            .map(|c| cm.row_sum(c) as f64 / total as f64 * f(&per_class[c]))
            .sum::<f64>()
    };
    let weighted = ClassMetrics {
        precision: weight(|m| m.precision),
        recall: weight(|m| m.recall),
        f1: weight(|m| m.f1),
    };

    Ok(Metrics {
        per_class,
        micro,
        macro_avg,
        weighted,
        accuracy,
    })
}

// ---------------------------------------------------------------------------
// Stratified folds
// ---------------------------------------------------------------------------

fn stable_hash<T: Hash>(seed: u64, item: &T) -> u64 {
    let mut hasher = FnvHasher::with_seed(seed);
    item.hash(&mut hasher);
    hasher.finish()
}

/// Deal the items of each class into k folds so per-class counts differ
/// from ideal by at most one.
///
/// Items are sorted by (class, seeded content hash) before dealing, so the
/// assignment is invariant to input order; ties between identical items
/// fall back to input position.
pub fn stratified_folds<T: Hash>(
    ds: &LabeledSet<T>,
    k: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>, EvalError> {
    if k < 2 {
        return Err(EvalError::InvalidConfig(format!(
            "k must be at least 2, got {k}"
        )));
    }
    let counts = ds.class_counts();
    for class in PolarityClass::ALL {
        if counts[class.index()] < k {
            return Err(EvalError::Folds {
                class,
                count: counts[class.index()],
                k,
            });
        }
    }

    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut start = 0usize;
    for class in PolarityClass::ALL {
        let mut members: Vec<(u64, usize)> = ds
            .items()
            .iter()
            .enumerate()
            .filter(|(_, (_, c))| *c == class)
            .map(|(i, (item, _))| (stable_hash(seed, item), i))
            .collect();
        members.sort_unstable();
        for (dealt, (_, index)) in members.iter().enumerate() {
            folds[(start + dealt) % k].push(*index);
        }
        start = (start + members.len()) % k;
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(folds)
}

/// Positions 0..n not present in `fold`. `fold` must be sorted.
fn train_positions(n: usize, fold: &[usize]) -> Vec<usize> {
    let mut in_fold = vec![false; n];
    for &p in fold {
        in_fold[p] = true;
    }
    (0..n).filter(|p| !in_fold[*p]).collect()
}

// ---------------------------------------------------------------------------
// Experiment configuration and report
// ---------------------------------------------------------------------------

/// Whether resampling happens before folding (mimicking protocols whose
/// duplicated documents can straddle train/test) or inside each fold's
/// training split only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResampleScope {
    #[serde(rename = "global")]
    Global,
    #[serde(rename = "per-fold")]
    PerFold,
}

impl std::str::FromStr for ResampleScope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "global" => Ok(ResampleScope::Global),
            "per-fold" => Ok(ResampleScope::PerFold),
            other => Err(format!(
                "unknown resample scope `{other}` (expected global or per-fold)"
            )),
        }
    }
}

/// Whether the vocabulary is rebuilt from each fold's training documents
/// or built once over the whole working set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VocabScope {
    #[serde(rename = "per-fold")]
    PerFold,
    #[serde(rename = "global")]
    Global,
}

impl std::str::FromStr for VocabScope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "global" => Ok(VocabScope::Global),
            "per-fold" => Ok(VocabScope::PerFold),
            other => Err(format!(
                "unknown vocab scope `{other}` (expected global or per-fold)"
            )),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalConfig {
    pub models: Vec<ModelKind>,
    pub regime: SamplingRegime,
    pub resample_scope: ResampleScope,
    pub vocab_scope: VocabScope,
    pub forest: ForestParams,
    pub k: usize,
    pub min_df: u32,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lexicon_path: Option<String>,
}

impl EvalConfig {
    pub fn new(models: Vec<ModelKind>, regime: SamplingRegime) -> EvalConfig {
        EvalConfig {
            models,
            regime,
            resample_scope: ResampleScope::PerFold,
            vocab_scope: VocabScope::PerFold,
            forest: ForestParams::default(),
            k: 10,
            min_df: 2,
            seed: 42,
            corpus_path: None,
            lexicon_path: None,
        }
    }

    fn validate(&self) -> Result<(), EvalError> {
        if self.models.is_empty() {
            return Err(EvalError::InvalidConfig("no models selected".to_string()));
        }
        if self.k < 2 {
            return Err(EvalError::InvalidConfig(format!(
                "k must be at least 2, got {}",
                self.k
            )));
        }
        if self.min_df == 0 {
            return Err(EvalError::InvalidConfig(
                "min_df must be at least 1".to_string(),
            ));
        }
        self.forest.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelReport {
    pub model: ModelKind,
    pub metrics: Metrics,
    pub confusion: ConfusionMatrix,
    /// Documents evaluated: the pooled confusion total.
    pub n_docs: u64,
    pub evaluated_class_counts: [u64; 3],
    pub fold_vocab_sizes: Vec<usize>,
    pub per_fold_micro_f1: Vec<f64>,
    /// Wall-clock time; not reproducible across runs, reported in JSON only.
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CellStatus {
    #[serde(rename = "ok")]
    Ok,
    #[serde(rename = "failed")]
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelCell {
    pub model: ModelKind,
    pub status: CellStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<ModelReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub config: EvalConfig,
    pub cells: Vec<ModelCell>,
    pub total_wall_seconds: f64,
}

/// Whether the CSV carries measured wall-clock seconds or a stable zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimingMode {
    Suppressed,
    Wall,
}

impl std::str::FromStr for TimingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(TimingMode::Suppressed),
            "wall" => Ok(TimingMode::Wall),
            other => Err(format!(
                "unknown timing mode `{other}` (expected none or wall)"
            )),
        }
    }
}

impl ExperimentReport {
    pub fn any_failed(&self) -> bool {
        self.cells.iter().any(|c| c.status == CellStatus::Failed)
    }

    /// One row per successful model cell, mirroring the summary table.
    pub fn to_csv(&self, timing: TimingMode) -> String {
        let mut out = String::from(
            "model,sampling,micro_p,micro_r,micro_f1,macro_f1,weighted_f1,n_docs,vocab_size,seconds\n",
        );
        for cell in &self.cells {
            let Some(report) = &cell.report else { continue };
            let m = &report.metrics;
            let vocab_mean = if report.fold_vocab_sizes.is_empty() {
                0
            } else {
                report.fold_vocab_sizes.iter().sum::<usize>() / report.fold_vocab_sizes.len()
            };
            let seconds = match timing {
                TimingMode::Suppressed => "0.000".to_string(),
                TimingMode::Wall => format!("{:.3}", report.wall_seconds),
            };
            out.push_str(&format!(
                "{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{},{},{}\n",
                cell.model.flag(),
                self.config.regime.flag(),
                m.micro.precision,
                m.micro.recall,
                m.micro.f1,
                m.macro_avg.f1,
                m.weighted.f1,
                report.n_docs,
                vocab_mean,
                seconds,
            ));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

// ---------------------------------------------------------------------------
// The experiment loop
// ---------------------------------------------------------------------------

struct FoldOutcome {
    confusion: ConfusionMatrix,
    vocab_size: usize,
    micro_f1: f64,
}

/// Run the full protocol for every configured model: transform, resample
/// per scope, build the training vocabulary, vectorize, train, and pool
/// test-fold confusions.
///
/// Fold assignment is computed once on the working set (stratified by
/// document content), so every model sees identical splits. A model whose
/// vocabulary collapses is reported as a failed cell; the report still
/// carries every other cell.
pub fn run_experiment(
    docs: &LabeledSet<TokenSeq>,
    lex: &Lexicon,
    cfg: &EvalConfig,
) -> Result<ExperimentReport, EvalError> {
    cfg.validate()?;
    let started = Instant::now();

    let base: LabeledSet<u32> = LabeledSet::new(
        docs.items()
            .iter()
            .enumerate()
            .map(|(i, (_, class))| (i as u32, *class))
            .collect(),
    );
    let working =
        if cfg.regime != SamplingRegime::Natural && cfg.resample_scope == ResampleScope::Global {
            resample(
                &base,
                cfg.regime,
                derive_seed(cfg.seed, "resample-global", 0),
            )?
        } else {
            base
        };

    // Folds are shared across models: stratify by document content.
    let fold_keys: LabeledSet<&TokenSeq> = LabeledSet::new(
        working
            .items()
            .iter()
            .map(|(i, class)| (&docs.items()[*i as usize].0, *class))
            .collect(),
    );
    let folds = stratified_folds(&fold_keys, cfg.k, derive_seed(cfg.seed, "folds", 0))?;

    let mut cells = Vec::with_capacity(cfg.models.len());
    for (model_index, model) in cfg.models.iter().copied().enumerate() {
        let cell_started = Instant::now();
        match evaluate_model(docs, lex, cfg, model, model_index, &working, &folds) {
            Ok(mut report) => {
                report.wall_seconds = cell_started.elapsed().as_secs_f64();
                cells.push(ModelCell {
                    model,
                    status: CellStatus::Ok,
                    error: None,
                    report: Some(report),
                });
            }
            Err(err) => cells.push(ModelCell {
                model,
                status: CellStatus::Failed,
                error: Some(err.to_string()),
                report: None,
            }),
        }
    }

    Ok(ExperimentReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: cfg.clone(),
        cells,
        total_wall_seconds: started.elapsed().as_secs_f64(),
    })
}

fn evaluate_model(
    docs: &LabeledSet<TokenSeq>,
    lex: &Lexicon,
    cfg: &EvalConfig,
    model: ModelKind,
    model_index: usize,
    working: &LabeledSet<u32>,
    folds: &[Vec<usize>],
) -> Result<ModelReport, EvalError> {
    let transformed: Vec<TokenSeq> = docs
        .items()
        .par_iter()
        .map(|(doc, _)| transform(doc, lex, model))
        .collect();

    let global_vocab = match cfg.vocab_scope {
        VocabScope::Global => {
            let all_docs: Vec<&TokenSeq> = working
                .items()
                .iter()
                .map(|(i, _)| &transformed[*i as usize])
                .collect();
            Some(build_vocabulary(&all_docs, cfg.min_df)?)
        }
        VocabScope::PerFold => None,
    };

    let outcomes: Vec<FoldOutcome> = (0..folds.len())
        .into_par_iter()
        .map(|f| -> Result<FoldOutcome, EvalError> {
            let mut train_items: Vec<(u32, PolarityClass)> =
                train_positions(working.len(), &folds[f])
                    .into_iter()
                    .map(|p| working.items()[p])
                    .collect();
            if cfg.regime != SamplingRegime::Natural && cfg.resample_scope == ResampleScope::PerFold
            {
                train_items = resample(
                    &LabeledSet::new(train_items),
                    cfg.regime,
                    derive_seed(cfg.seed, "resample-fold", f as u64),
                )?
                .into_items();
            }

            let train_docs: Vec<&TokenSeq> = train_items
                .iter()
                .map(|(i, _)| &transformed[*i as usize])
                .collect();
            let local_vocab;
            let vocab = match &global_vocab {
                Some(v) => v,
                None => {
                    local_vocab = build_vocabulary(&train_docs, cfg.min_df)?;
                    &local_vocab
                }
            };

            let x_train: Vec<CountVector> =
                train_docs.iter().map(|doc| vectorize(doc, vocab)).collect();
            let y_train: Vec<PolarityClass> = train_items.iter().map(|(_, c)| *c).collect();
            let params = ForestParams {
                seed: derive_seed(cfg.seed, "forest", ((model_index as u64) << 32) | f as u64),
                ..cfg.forest.clone()
            };
            let forest = train_forest(&x_train, &y_train, &params)?;

            let mut confusion = ConfusionMatrix::new();
            for &pos in &folds[f] {
                let (doc_index, gold) = working.items()[pos];
                let x = vectorize(&transformed[doc_index as usize], vocab);
                let predicted = forest.predict(&x)?;
                confusion.add(gold, predicted);
            }
            let micro_f1 = compute_metrics(&confusion)?.micro.f1;
            Ok(FoldOutcome {
                confusion,
                vocab_size: vocab.len(),
                micro_f1,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut pooled = ConfusionMatrix::new();
    for outcome in &outcomes {
        pooled.merge(&outcome.confusion);
    }
    let metrics = compute_metrics(&pooled)?;
    let evaluated_class_counts = [pooled.row_sum(0), pooled.row_sum(1), pooled.row_sum(2)];

    Ok(ModelReport {
        model,
        metrics,
        confusion: pooled,
        n_docs: pooled.total(),
        evaluated_class_counts,
        fold_vocab_sizes: outcomes.iter().map(|o| o.vocab_size).collect(),
        per_fold_micro_f1: outcomes.iter().map(|o| o.micro_f1).collect(),
        wall_seconds: 0.0,
    })
}
