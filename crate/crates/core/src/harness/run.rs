use serde::{Deserialize, Serialize};

use super::folds::{complement, stratified_folds};
use super::seeds::{test_seed, train_stream, DATA_STREAM, FOLD_STREAM, MODEL_STREAM};
use crate::domain::{ClassCounts, Dataset, DomainSpec};
use crate::metrics::{confusion, MetricBundle};
use crate::nn::{train, MlpConfig};
use crate::{Error, Result};

/// Decision threshold on the predicted probability of class 1.
pub const THRESHOLD: f64 = 0.5;

/// How a trained model is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regimen {
    /// k-fold stratified cross-validation on the generated training set.
    StratifiedCv { k: usize },
    /// Train on the full training set, score on the family's balanced test set.
    BalancedTest,
}

impl Regimen {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Regimen::StratifiedCv { k } if k < 2 => {
                Err(Error::param("k", format!("need at least 2 folds, got {k}")))
            }
            _ => Ok(()),
        }
    }
}

/// Optimiser settings shared by every run of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSchedule {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for TrainingSchedule {
    fn default() -> Self {
        TrainingSchedule {
            epochs: 300,
            learning_rate: 0.001,
            batch_size: 32,
        }
    }
}

impl TrainingSchedule {
    pub fn config(
        &self,
        input_dim: usize,
        depth: usize,
        hidden_units: usize,
        seed: u64,
    ) -> MlpConfig {
        MlpConfig {
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            ..MlpConfig::new(input_dim, depth, hidden_units, seed)
        }
    }
}

/// One hidden-unit candidate of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub hidden_units: usize,
    pub mean: MetricBundle,
    pub std: Option<MetricBundle>,
}

/// Outcome of one regimen run (or of the selected candidate of a sweep).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub domain: DomainSpec,
    pub depth: usize,
    pub hidden_units: usize,
    pub regimen: Regimen,
    /// Seed the run was derived from.
    pub seed: u64,
    /// Master seed of the grid replicate this cell belongs to, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    /// Class sizes of the generated training set.
    pub train_counts: ClassCounts,
    /// One bundle per fold, or a single bundle for balanced testing.
    pub evaluations: Vec<MetricBundle>,
    pub mean: MetricBundle,
    /// Sample standard deviation; present only with two or more evaluations.
    pub std: Option<MetricBundle>,
    /// Every candidate of a hidden-unit sweep; empty for single runs.
    #[serde(default)]
    pub audit: Vec<AuditEntry>,
}

/// Per-metric mean and, for two or more bundles, sample standard deviation.
pub fn summarize(bundles: &[MetricBundle]) -> (MetricBundle, Option<MetricBundle>) {
    let n = bundles.len();
    if n == 0 {
        return (MetricBundle::from_values([0.0; 10]), None);
    }
    let mut mean = [0.0; 10];
    for b in bundles {
        for (m, v) in mean.iter_mut().zip(b.values()) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    if n < 2 {
        return (MetricBundle::from_values(mean), None);
    }
    let mut var = [0.0; 10];
    for b in bundles {
        for ((s, v), m) in var.iter_mut().zip(b.values()).zip(mean) {
            *s += (v - m) * (v - m);
        }
    }
    let std = var.map(|s| (s / (n - 1) as f64).sqrt());
    (
        MetricBundle::from_values(mean),
        Some(MetricBundle::from_values(std)),
    )
}

fn check_config(domain: &DomainSpec, cfg: &MlpConfig) -> Result<()> {
    cfg.validate()?;
    if cfg.input_dim != domain.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: domain.input_dim(),
            actual: cfg.input_dim,
        });
    }
    Ok(())
}

/// Trains on `train_ds` and scores on `test_ds`; the weighted G-Mean uses
/// the training class sizes.
pub fn fit_and_score(
    cfg: &MlpConfig,
    train_ds: &Dataset,
    test_ds: &Dataset,
) -> Result<MetricBundle> {
    let (model, _) = train(cfg, train_ds)?;
    let pred = model.predict(test_ds.features(), THRESHOLD)?;
    let cm = confusion(test_ds.labels(), &pred)?;
    let counts = train_ds.class_counts();
    Ok(MetricBundle::from_confusion(
        &cm,
        counts.majority as u64,
        counts.minority as u64,
    ))
}

/// Training data and (for balanced testing) the test set of one run.
struct Prepared {
    train: Dataset,
    test: Option<Dataset>,
}

fn prepare(domain: &DomainSpec, regimen: Regimen, seed: u64) -> Prepared {
    let train = domain.generate(train_stream(seed, DATA_STREAM));
    let test = match regimen {
        Regimen::BalancedTest => {
            Some(domain.generate_testset(test_seed(domain.family(), domain.test_level())))
        }
        Regimen::StratifiedCv { .. } => None,
    };
    Prepared { train, test }
}

fn evaluate(
    data: &Prepared,
    regimen: Regimen,
    cfg: &MlpConfig,
    seed: u64,
) -> Result<Vec<MetricBundle>> {
    match regimen {
        Regimen::BalancedTest => {
            let test = data.test.as_ref().expect("balanced test set prepared");
            Ok(vec![fit_and_score(cfg, &data.train, test)?])
        }
        Regimen::StratifiedCv { k } => {
            let folds = stratified_folds(&data.train, k, train_stream(seed, FOLD_STREAM))?;
            (0..k)
                .map(|i| {
                    let fold_cfg = MlpConfig {
                        seed: train_stream(cfg.seed, i as u64),
                        ..*cfg
                    };
                    let train_part = data.train.subset(&complement(&folds, i));
                    let held_out = data.train.subset(&folds[i]);
                    fit_and_score(&fold_cfg, &train_part, &held_out)
                })
                .collect()
        }
    }
}

fn run_prepared(
    domain: &DomainSpec,
    data: &Prepared,
    regimen: Regimen,
    cfg: &MlpConfig,
    seed: u64,
) -> Result<ExperimentResult> {
    let evaluations = evaluate(data, regimen, cfg, seed)?;
    let (mean, std) = summarize(&evaluations);
    Ok(ExperimentResult {
        domain: *domain,
        depth: cfg.depth,
        hidden_units: cfg.hidden_units,
        regimen,
        seed,
        master_seed: None,
        train_counts: data.train.class_counts(),
        evaluations,
        mean,
        std,
        audit: Vec::new(),
    })
}

/// Runs one regimen for a fixed architecture. `seed` drives the training
/// data and fold assignment; `cfg.seed` drives initialisation and shuffling.
pub fn run_regimen(
    domain: &DomainSpec,
    cfg: &MlpConfig,
    regimen: Regimen,
    seed: u64,
) -> Result<ExperimentResult> {
    regimen.validate()?;
    check_config(domain, cfg)?;
    run_prepared(domain, &prepare(domain, regimen, seed), regimen, cfg, seed)
}

/// Stratified `k`-fold cross-validation: train on `k - 1` folds, score the
/// held-out fold, aggregate over folds.
pub fn run_cv(
    domain: &DomainSpec,
    cfg: &MlpConfig,
    k: usize,
    seed: u64,
) -> Result<ExperimentResult> {
    run_regimen(domain, cfg, Regimen::StratifiedCv { k }, seed)
}

/// Trains on the full generated training set and scores on the family's
/// balanced test set, whose seed is fixed per family and level.
pub fn run_balanced_test(
    domain: &DomainSpec,
    cfg: &MlpConfig,
    seed: u64,
) -> Result<ExperimentResult> {
    run_regimen(domain, cfg, Regimen::BalancedTest, seed)
}

/// Runs the regimen once per hidden-unit candidate and returns the one with
/// the highest mean macro G-Mean; ties go to fewer hidden units. Every
/// candidate is kept in the result's `audit` list.
pub fn sweep_hidden_units(
    domain: &DomainSpec,
    depth: usize,
    candidates: &[usize],
    regimen: Regimen,
    seed: u64,
    schedule: &TrainingSchedule,
) -> Result<ExperimentResult> {
    if candidates.is_empty() {
        return Err(Error::param(
            "candidates",
            "need at least one hidden-unit count",
        ));
    }
    regimen.validate()?;
    let mut ordered = candidates.to_vec();
    ordered.sort_unstable();
    ordered.dedup();

    let data = prepare(domain, regimen, seed);
    let model_seed = train_stream(seed, MODEL_STREAM);
    let mut best: Option<ExperimentResult> = None;
    let mut audit = Vec::with_capacity(ordered.len());
    for hu in ordered {
        let cfg = schedule.config(domain.input_dim(), depth, hu, model_seed);
        check_config(domain, &cfg)?;
        let result = run_prepared(domain, &data, regimen, &cfg, seed)?;
        audit.push(AuditEntry {
            hidden_units: hu,
            mean: result.mean,
            std: result.std,
        });
        let better = best
            .as_ref()
            .is_none_or(|b| result.mean.gmean_macro > b.mean.gmean_macro);
        if better {
            best = Some(result);
        }
    }
    let mut best = best.expect("at least one candidate ran");
    best.audit = audit;
    Ok(best)
}
