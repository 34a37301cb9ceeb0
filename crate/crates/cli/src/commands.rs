use std::fs;
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};

use imbdepth::domain::io::{load_dataset, save_with_manifest, DatasetOrigin};
use imbdepth::domain::{
    gen_backbone_testset, gen_gaussian_backbone_testset, gen_overlap_testset, Dataset,
};
use imbdepth::harness::{
    load_results, pivot, presets, render_table, run_grid, save_pivot_csv, save_results,
    write_timings, CellOutcome, ExperimentGrid, THRESHOLD,
};
use imbdepth::metrics::{confusion, ConfusionMatrix, MetricBundle};
use imbdepth::nn::train;
use imbdepth::{
    BackboneSpec, DomainSpec, Family, GaussianBackboneSpec, MlpConfig, MlpModel, OverlapSpec,
};
use serde::Serialize;

use crate::args::{ExperimentArgs, GenerateCommon, GenerateFamily, ReportArgs, TrainArgs};
use crate::{CliError, Result};

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: std::fmt::Arguments<'_>) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_fmt(text).and_then(|()| out.flush()) {
        Err(e) if e.kind() != ErrorKind::BrokenPipe => Err(CliError::io(Path::new("<stdout>"), e)),
        _ => Ok(()),
    }
}

macro_rules! say {
    ($($arg:tt)*) => {
        emit(format_args!($($arg)*))?
    };
}

macro_rules! sayln {
    ($($arg:tt)*) => {
        emit(format_args!("{}\n", format_args!($($arg)*)))?
    };
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(imbdepth::Error::from)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| usage(format!("missing {flag} (or pass --all)")))
}

fn reject_with_test<T>(value: Option<T>, flag: &str) -> Result<()> {
    match value {
        Some(_) => Err(usage(format!("{flag} is not used with --test"))),
        None => Ok(()),
    }
}

/// A balanced test set request: family, level and rows per unit.
struct TestRequest {
    family: Family,
    level: u8,
    per_unit: usize,
}

impl TestRequest {
    fn generate(&self, seed: u64) -> Result<Dataset> {
        let ds = match self.family {
            Family::Backbone => gen_backbone_testset(self.level, self.per_unit, seed),
            Family::Overlap => gen_overlap_testset(self.level, self.per_unit, seed),
            Family::GaussianBackbone => {
                gen_gaussian_backbone_testset(self.level, self.per_unit, seed)
            }
        };
        ds.map_err(|e| usage(format!("--per-unit: {e}")))
    }

    fn file_name(&self, seed: u64) -> String {
        let level = match self.family {
            Family::Backbone => "c",
            Family::Overlap => "k",
            Family::GaussianBackbone => "v",
        };
        format!("{}_test_{level}{}_seed{seed}.csv", self.family, self.level)
    }
}

fn default_per_unit(family: Family) -> usize {
    match family {
        Family::Overlap => 2000,
        Family::Backbone | Family::GaussianBackbone => 1000,
    }
}

pub fn generate(family: GenerateFamily) -> Result<()> {
    let (common, plan) = plan_generation(family)?;
    create_dir(&common.out)?;
    let mut written = 0;
    match plan {
        Plan::Train(domains) => {
            for domain in domains {
                let ds = domain.generate(common.seed);
                let path = common
                    .out
                    .join(format!("{}_seed{}.csv", domain.slug(), common.seed));
                save_with_manifest(&ds, DatasetOrigin::Train { domain }, common.seed, &path)?;
                written += 1;
            }
        }
        Plan::Test(requests) => {
            for req in requests {
                let ds = req.generate(common.seed)?;
                let path = common.out.join(req.file_name(common.seed));
                let origin = DatasetOrigin::Test {
                    family: req.family,
                    level: req.level,
                    per_unit: req.per_unit,
                };
                save_with_manifest(&ds, origin, common.seed, &path)?;
                written += 1;
            }
        }
    }
    sayln!("wrote {written} dataset(s) to {}", common.out.display());
    Ok(())
}

enum Plan {
    Train(Vec<DomainSpec>),
    Test(Vec<TestRequest>),
}

fn test_plan(common: &GenerateCommon, family: Family, levels: Vec<u8>) -> Plan {
    let per_unit = common.per_unit.unwrap_or_else(|| default_per_unit(family));
    Plan::Test(
        levels
            .into_iter()
            .map(|level| TestRequest {
                family,
                level,
                per_unit,
            })
            .collect(),
    )
}

fn plan_generation(family: GenerateFamily) -> Result<(GenerateCommon, Plan)> {
    match family {
        GenerateFamily::Backbone {
            c,
            s,
            b,
            all,
            common,
        } => {
            let plan = if common.test {
                reject_with_test(s, "--s")?;
                reject_with_test(b, "--b")?;
                let levels = if all {
                    (1..=5).collect()
                } else {
                    vec![require(c, "--c")?]
                };
                test_plan(&common, Family::Backbone, levels)
            } else if all {
                Plan::Train(BackboneSpec::all().map(Into::into).collect())
            } else {
                let (c, s, b) = (require(c, "--c")?, require(s, "--s")?, require(b, "--b")?);
                let spec = BackboneSpec::new(c, s, b).map_err(|e| usage(e.to_string()))?;
                Plan::Train(vec![spec.into()])
            };
            Ok((common, plan))
        }
        GenerateFamily::Overlap {
            level,
            minority_frac,
            total,
            all,
            common,
        } => {
            let plan = if common.test {
                reject_with_test(minority_frac, "--minority-frac")?;
                let levels = if all {
                    (1..=10).collect()
                } else {
                    vec![require(level, "--level")?]
                };
                test_plan(&common, Family::Overlap, levels)
            } else if all {
                let specs: imbdepth::Result<Vec<OverlapSpec>> = OverlapSpec::all()
                    .map(|s| OverlapSpec::with_total(s.k(), s.minority_frac(), total))
                    .collect();
                let specs = specs.map_err(|e| usage(format!("--total: {e}")))?;
                Plan::Train(specs.into_iter().map(Into::into).collect())
            } else {
                let k = require(level, "--level")?;
                let frac = require(minority_frac, "--minority-frac")?;
                let spec = OverlapSpec::with_total(k, frac, total).map_err(|e| {
                    let flag = match &e {
                        imbdepth::Error::InvalidParameter { name: "total", .. } => "--total",
                        _ => "--minority-frac",
                    };
                    usage(format!("{flag}: {e}"))
                })?;
                Plan::Train(vec![spec.into()])
            };
            Ok((common, plan))
        }
        GenerateFamily::GaussianBackbone { v, b, all, common } => {
            let plan = if common.test {
                reject_with_test(b, "--b")?;
                let levels = if all {
                    (1..=5).collect()
                } else {
                    vec![require(v, "--v")?]
                };
                test_plan(&common, Family::GaussianBackbone, levels)
            } else if all {
                Plan::Train(GaussianBackboneSpec::all().map(Into::into).collect())
            } else {
                let (v, b) = (require(v, "--v")?, require(b, "--b")?);
                let spec = GaussianBackboneSpec::new(v, b).map_err(|e| usage(e.to_string()))?;
                Plan::Train(vec![spec.into()])
            };
            Ok((common, plan))
        }
    }
}

#[derive(Serialize)]
struct SavedModel<'a> {
    config: &'a MlpConfig,
    epoch_losses: &'a [f64],
    optimizer_steps: u64,
    model: &'a MlpModel,
}

#[derive(Serialize)]
struct SavedMetrics {
    evaluated_on: String,
    rows: usize,
    confusion: ConfusionMatrix,
    metrics: MetricBundle,
}

pub fn train_command(args: TrainArgs) -> Result<()> {
    let train_ds = load_dataset(&args.data)?;
    let cfg = MlpConfig {
        learning_rate: args.learning_rate,
        epochs: args.epochs,
        batch_size: args.batch_size,
        ..MlpConfig::new(
            train_ds.dim(),
            args.depth.into(),
            args.hidden_units.into(),
            args.seed,
        )
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let (model, report) = train(&cfg, &train_ds)?;

    let (eval_path, eval_ds) = match &args.test {
        Some(path) => (path.clone(), load_dataset(path)?),
        None => (args.data.clone(), train_ds.clone()),
    };
    let pred = model.predict(eval_ds.features(), THRESHOLD)?;
    let cm = confusion(eval_ds.labels(), &pred)?;
    let counts = train_ds.class_counts();
    let metrics = MetricBundle::from_confusion(&cm, counts.majority as u64, counts.minority as u64);

    create_dir(&args.out)?;
    let saved = SavedModel {
        config: &cfg,
        epoch_losses: &report.epoch_losses,
        optimizer_steps: report.optimizer_steps,
        model: &model,
    };
    write_json(&args.out.join("model.json"), &saved)?;
    let summary = SavedMetrics {
        evaluated_on: eval_path.display().to_string(),
        rows: eval_ds.n_rows(),
        confusion: cm,
        metrics,
    };
    write_json(&args.out.join("metrics.json"), &summary)?;

    let last = report.epoch_losses.last().copied().unwrap_or(f64::NAN);
    sayln!("final training loss {last:.6}");
    sayln!(
        "macro G-Mean {:.4} on {} ({} rows)",
        metrics.gmean_macro,
        eval_path.display(),
        eval_ds.n_rows()
    );
    Ok(())
}

pub const RESULTS_FILE: &str = "results.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const TIMINGS_FILE: &str = "timings.csv";

fn experiment_grids(args: &ExperimentArgs) -> Result<Vec<ExperimentGrid>> {
    if let Some(name) = &args.preset {
        let seed = args
            .seed
            .ok_or_else(|| usage("--seed is required with --preset"))?;
        return presets::by_name(name, seed).ok_or_else(|| usage(format!("unknown preset {name}")));
    }
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| usage("pass --config or --preset"))?;
    let mut grid = ExperimentGrid::load(path)?;
    if let Some(seed) = args.seed {
        grid.seeds = vec![seed];
    }
    Ok(vec![grid])
}

pub fn experiment(args: ExperimentArgs) -> Result<()> {
    let grids = experiment_grids(&args)?;
    create_dir(&args.out)?;
    let mut timed = Vec::new();
    for grid in &grids {
        timed.extend(run_grid(grid, args.jobs.into())?);
    }
    let outcomes: Vec<CellOutcome> = timed.iter().map(|t| t.outcome.clone()).collect();

    save_results(args.out.join(RESULTS_FILE), &outcomes)?;
    save_pivot_csv(args.out.join(SUMMARY_FILE), &pivot(&outcomes))?;
    let timings_path = args.out.join(TIMINGS_FILE);
    let mut buf = Vec::new();
    write_timings(&timed, &mut buf)?;
    fs::write(&timings_path, buf).map_err(|e| CliError::io(&timings_path, e))?;

    let failed = outcomes.iter().filter(|o| o.result().is_none()).count();
    say!("{}", render_table(&pivot(&outcomes)));
    sayln!(
        "{} cell(s), {failed} failed; results in {}",
        outcomes.len(),
        args.out.join(RESULTS_FILE).display()
    );
    Ok(())
}

pub fn report(args: ReportArgs) -> Result<()> {
    let outcomes = load_results(&args.results)?;
    if outcomes.is_empty() {
        sayln!("no results in {}", args.results.display());
        return Ok(());
    }
    let rows = pivot(&outcomes);
    say!("{}", render_table(&rows));
    let failed = outcomes.iter().filter(|o| o.result().is_none()).count();
    if failed > 0 {
        sayln!("{failed} failed cell(s) left out");
    }
    let csv = args
        .csv
        .clone()
        .unwrap_or_else(|| sibling(&args.results, "plot.csv"));
    save_pivot_csv(&csv, &rows)?;
    sayln!("plot data written to {}", csv.display());
    Ok(())
}

fn sibling(path: &Path, name: &str) -> PathBuf {
    path.parent()
        .map(|p| p.join(name))
        .unwrap_or_else(|| PathBuf::from(name))
}
