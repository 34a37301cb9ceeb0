use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::run::{sweep_hidden_units, ExperimentResult, Regimen, TrainingSchedule};
use super::seeds::cell_seed;
use crate::domain::{
    BackboneSpec, DomainSpec, Family, GaussianBackboneSpec, OverlapSpec, MINORITY_FRACTIONS,
    OVERLAP_TOTAL,
};
use crate::nn::HIDDEN_UNIT_CHOICES;
use crate::{Error, Result};

fn default_total() -> usize {
    OVERLAP_TOTAL
}

/// Parameter ranges of one domain family; the grid is their Cartesian product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainGrid {
    Backbone {
        c: Vec<u8>,
        s: Vec<u8>,
        b: Vec<u8>,
    },
    Overlap {
        k: Vec<u8>,
        minority_frac: Vec<f64>,
        #[serde(default = "default_total")]
        total: usize,
    },
    GaussianBackbone {
        v: Vec<u8>,
        b: Vec<u8>,
    },
}

impl DomainGrid {
    pub fn family(&self) -> Family {
        match self {
            DomainGrid::Backbone { .. } => Family::Backbone,
            DomainGrid::Overlap { .. } => Family::Overlap,
            DomainGrid::GaussianBackbone { .. } => Family::GaussianBackbone,
        }
    }

    /// Every domain of the grid, validated and sorted.
    pub fn domains(&self) -> Result<Vec<DomainSpec>> {
        let at = |field: &str, i: usize, e: Error| Error::Config {
            path: format!("domain.{field}[{i}]"),
            reason: e.to_string(),
        };
        let mut out: Vec<DomainSpec> = Vec::new();
        match self {
            DomainGrid::Backbone { c, s, b } => {
                non_empty("domain.c", c)?;
                non_empty("domain.s", s)?;
                non_empty("domain.b", b)?;
                for (ci, &cv) in c.iter().enumerate() {
                    BackboneSpec::new(cv, 1, 1).map_err(|e| at("c", ci, e))?;
                    for (si, &sv) in s.iter().enumerate() {
                        BackboneSpec::new(1, sv, 1).map_err(|e| at("s", si, e))?;
                        for (bi, &bv) in b.iter().enumerate() {
                            let spec = BackboneSpec::new(cv, sv, bv).map_err(|e| at("b", bi, e))?;
                            out.push(spec.into());
                        }
                    }
                }
            }
            DomainGrid::Overlap {
                k,
                minority_frac,
                total,
            } => {
                non_empty("domain.k", k)?;
                non_empty("domain.minority_frac", minority_frac)?;
                for (ki, &kv) in k.iter().enumerate() {
                    OverlapSpec::with_total(kv, MINORITY_FRACTIONS[0], *total)
                        .map_err(|e| at("k", ki, e))?;
                    for (fi, &f) in minority_frac.iter().enumerate() {
                        let spec = OverlapSpec::with_total(kv, f, *total)
                            .map_err(|e| at("minority_frac", fi, e))?;
                        out.push(spec.into());
                    }
                }
            }
            DomainGrid::GaussianBackbone { v, b } => {
                non_empty("domain.v", v)?;
                non_empty("domain.b", b)?;
                for (vi, &vv) in v.iter().enumerate() {
                    GaussianBackboneSpec::new(vv, 1).map_err(|e| at("v", vi, e))?;
                    for (bi, &bv) in b.iter().enumerate() {
                        let spec = GaussianBackboneSpec::new(vv, bv).map_err(|e| at("b", bi, e))?;
                        out.push(spec.into());
                    }
                }
            }
        }
        out.sort_by_key(|a| a.sort_key());
        out.dedup();
        Ok(out)
    }
}

fn non_empty<T>(path: &str, values: &[T]) -> Result<()> {
    if values.is_empty() {
        Err(Error::Config {
            path: path.to_owned(),
            reason: "must not be empty".to_owned(),
        })
    } else {
        Ok(())
    }
}

/// A full experiment: domains × depths × seeds, each cell sweeping the
/// hidden-unit candidates under one regimen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentGrid {
    pub domain: DomainGrid,
    pub depths: Vec<usize>,
    #[serde(default = "default_candidates")]
    pub hidden_unit_candidates: Vec<usize>,
    pub seeds: Vec<u64>,
    pub regimen: Regimen,
    #[serde(default)]
    pub schedule: TrainingSchedule,
}

fn default_candidates() -> Vec<usize> {
    HIDDEN_UNIT_CHOICES.to_vec()
}

/// One unit of work in a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub domain: DomainSpec,
    pub depth: usize,
    /// The grid seed this cell replicates.
    pub master_seed: u64,
    /// Seed derived from the master seed and the domain.
    pub seed: u64,
}

/// Why a cell produced no result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub domain: DomainSpec,
    pub depth: usize,
    pub master_seed: u64,
    pub seed: u64,
    pub error: String,
}

/// One line of a results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum CellOutcome {
    Ok(ExperimentResult),
    Failed(CellFailure),
}

impl CellOutcome {
    pub fn result(&self) -> Option<&ExperimentResult> {
        match self {
            CellOutcome::Ok(r) => Some(r),
            CellOutcome::Failed(_) => None,
        }
    }

    pub fn domain(&self) -> &DomainSpec {
        match self {
            CellOutcome::Ok(r) => &r.domain,
            CellOutcome::Failed(f) => &f.domain,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            CellOutcome::Ok(r) => r.depth,
            CellOutcome::Failed(f) => f.depth,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            CellOutcome::Ok(r) => r.seed,
            CellOutcome::Failed(f) => f.seed,
        }
    }
}

/// A cell outcome together with its wall time.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedOutcome {
    pub outcome: CellOutcome,
    pub runtime_secs: f64,
}

impl ExperimentGrid {
    /// Parses a JSON config, reporting the path of the first bad field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let grid: ExperimentGrid = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Config {
                path,
                reason: e.into_inner().to_string(),
            }
        })?;
        grid.validate()?;
        Ok(grid)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let config = |path: String, reason: String| Error::Config { path, reason };
        self.domain.domains()?;
        non_empty("depths", &self.depths)?;
        for (i, &d) in self.depths.iter().enumerate() {
            if !(1..=5).contains(&d) {
                return Err(config(
                    format!("depths[{i}]"),
                    format!("must be in 1..=5, got {d}"),
                ));
            }
        }
        non_empty("hidden_unit_candidates", &self.hidden_unit_candidates)?;
        for (i, &h) in self.hidden_unit_candidates.iter().enumerate() {
            if h == 0 {
                return Err(config(
                    format!("hidden_unit_candidates[{i}]"),
                    "must be at least 1".into(),
                ));
            }
        }
        non_empty("seeds", &self.seeds)?;
        self.regimen
            .validate()
            .map_err(|e| config("regimen.k".into(), e.to_string()))?;
        let cfg = self.schedule.config(1, 1, 1, 0);
        cfg.validate()
            .map_err(|e| config("schedule".into(), e.to_string()))?;
        Ok(())
    }

    /// All cells, ordered by domain, then depth, then master seed.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        let mut depths = self.depths.clone();
        depths.sort_unstable();
        depths.dedup();
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        let mut cells = Vec::new();
        for domain in self.domain.domains()? {
            for &depth in &depths {
                for &master_seed in &seeds {
                    cells.push(Cell {
                        domain,
                        depth,
                        master_seed,
                        seed: cell_seed(master_seed, &domain),
                    });
                }
            }
        }
        Ok(cells)
    }

    /// Runs one cell; failures are captured rather than propagated.
    pub fn run_cell(&self, cell: &Cell) -> TimedOutcome {
        let started = Instant::now();
        let outcome = match sweep_hidden_units(
            &cell.domain,
            cell.depth,
            &self.hidden_unit_candidates,
            self.regimen,
            cell.seed,
            &self.schedule,
        ) {
            Ok(mut result) => {
                result.master_seed = Some(cell.master_seed);
                CellOutcome::Ok(result)
            }
            Err(e) => CellOutcome::Failed(CellFailure {
                domain: cell.domain,
                depth: cell.depth,
                master_seed: cell.master_seed,
                seed: cell.seed,
                error: e.to_string(),
            }),
        };
        TimedOutcome {
            outcome,
            runtime_secs: started.elapsed().as_secs_f64(),
        }
    }
}

/// Runs every cell of `grid` on `jobs` worker threads. Output order is the
/// cell order regardless of `jobs`.
pub fn run_grid(grid: &ExperimentGrid, jobs: usize) -> Result<Vec<TimedOutcome>> {
    grid.validate()?;
    let cells = grid.cells()?;
    if jobs <= 1 {
        return Ok(cells.iter().map(|c| grid.run_cell(c)).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::param("jobs", e.to_string()))?;
    Ok(pool.install(|| cells.par_iter().map(|c| grid.run_cell(c)).collect()))
}

/// Named grids reproducing the study's figures.
pub mod presets {
    use super::*;

    pub const NAMES: [&str; 5] = ["fig2", "fig3", "fig4", "fig6", "sup-cv"];

    fn levels() -> Vec<u8> {
        (1..=5).collect()
    }

    fn backbone(s: u8, depths: Vec<usize>, regimen: Regimen, seed: u64) -> ExperimentGrid {
        ExperimentGrid {
            domain: DomainGrid::Backbone {
                c: levels(),
                s: vec![s],
                b: levels(),
            },
            depths,
            hidden_unit_candidates: default_candidates(),
            seeds: vec![seed],
            regimen,
            schedule: TrainingSchedule::default(),
        }
    }

    fn overlap(depths: Vec<usize>, regimen: Regimen, seed: u64) -> ExperimentGrid {
        ExperimentGrid {
            domain: DomainGrid::Overlap {
                k: (1..=10).collect(),
                minority_frac: MINORITY_FRACTIONS.to_vec(),
                total: OVERLAP_TOTAL,
            },
            depths,
            hidden_unit_candidates: default_candidates(),
            seeds: vec![seed],
            regimen,
            schedule: TrainingSchedule::default(),
        }
    }

    /// Backbone, size 1, balanced testing, depths 1..=5.
    pub fn fig2(seed: u64) -> ExperimentGrid {
        backbone(1, (1..=5).collect(), Regimen::BalancedTest, seed)
    }

    /// Backbone, size 5, balanced testing, depths 1..=5.
    pub fn fig3(seed: u64) -> ExperimentGrid {
        backbone(5, (1..=5).collect(), Regimen::BalancedTest, seed)
    }

    /// Overlap, all levels and fractions, balanced testing, depths 1 and 5.
    pub fn fig4(seed: u64) -> ExperimentGrid {
        overlap(vec![1, 5], Regimen::BalancedTest, seed)
    }

    /// Gaussian backbone, balanced testing, depths 1..=5.
    pub fn fig6(seed: u64) -> ExperimentGrid {
        ExperimentGrid {
            domain: DomainGrid::GaussianBackbone {
                v: levels(),
                b: levels(),
            },
            depths: (1..=5).collect(),
            hidden_unit_candidates: default_candidates(),
            seeds: vec![seed],
            regimen: Regimen::BalancedTest,
            schedule: TrainingSchedule::default(),
        }
    }

    /// 10-fold stratified cross-validation at depths 1 and 5 on the backbone
    /// (sizes 1 and 5) and overlap families.
    pub fn sup_cv(seed: u64) -> Vec<ExperimentGrid> {
        let cv = Regimen::StratifiedCv { k: 10 };
        vec![
            backbone(1, vec![1, 5], cv, seed),
            backbone(5, vec![1, 5], cv, seed),
            overlap(vec![1, 5], cv, seed),
        ]
    }

    /// Looks a preset up by name.
    pub fn by_name(name: &str, seed: u64) -> Option<Vec<ExperimentGrid>> {
        match name {
            "fig2" => Some(vec![fig2(seed)]),
            "fig3" => Some(vec![fig3(seed)]),
            "fig4" => Some(vec![fig4(seed)]),
            "fig6" => Some(vec![fig6(seed)]),
            "sup-cv" => Some(sup_cv(seed)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(seeds: Vec<u64>) -> ExperimentGrid {
        ExperimentGrid {
            domain: DomainGrid::Backbone {
                c: vec![2, 1],
                s: vec![1],
                b: vec![5, 1],
            },
            depths: vec![2, 1],
            hidden_unit_candidates: vec![2, 4],
            seeds,
            regimen: Regimen::BalancedTest,
            schedule: TrainingSchedule {
                epochs: 5,
                ..TrainingSchedule::default()
            },
        }
    }

    #[test]
    fn preset_cell_counts() {
        assert_eq!(presets::fig2(0).cells().unwrap().len(), 125);
        assert_eq!(presets::fig3(0).cells().unwrap().len(), 125);
        assert_eq!(presets::fig4(0).cells().unwrap().len(), 240);
        assert_eq!(presets::fig6(0).cells().unwrap().len(), 125);
        let cv: usize = presets::sup_cv(0)
            .iter()
            .map(|g| g.cells().unwrap().len())
            .sum();
        assert_eq!(cv, 50 + 50 + 240);
        assert!(presets::by_name("fig5", 0).is_none());
        for name in presets::NAMES {
            assert!(presets::by_name(name, 0).is_some());
        }
    }

    #[test]
    fn cells_are_lexicographic() {
        let cells = tiny(vec![9, 3]).cells().unwrap();
        assert_eq!(cells.len(), 16);
        let keys: Vec<_> = cells
            .iter()
            .map(|c| (c.domain.sort_key(), c.depth, c.master_seed))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        // the data seed depends on the domain and master seed, not the depth
        assert_eq!(cells[0].seed, cells[2].seed);
        assert_ne!(cells[0].seed, cells[1].seed);
    }

    #[test]
    fn parallel_and_serial_runs_agree() {
        let grid = tiny(vec![1]);
        let serial: Vec<_> = run_grid(&grid, 1)
            .unwrap()
            .into_iter()
            .map(|t| t.outcome)
            .collect();
        let parallel: Vec<_> = run_grid(&grid, 3)
            .unwrap()
            .into_iter()
            .map(|t| t.outcome)
            .collect();
        assert_eq!(serial, parallel);
        assert!(serial.iter().all(|o| o.result().is_some()));
    }

    #[test]
    fn failing_cells_do_not_abort_the_grid() {
        // 20 rows at 1% minority round to no minority rows at all, which
        // stratified folds reject; the 50% cells still run
        let grid = ExperimentGrid {
            domain: DomainGrid::Overlap {
                k: vec![3],
                minority_frac: vec![0.01, 0.5],
                total: 20,
            },
            depths: vec![1],
            hidden_unit_candidates: vec![2],
            seeds: vec![0],
            regimen: Regimen::StratifiedCv { k: 2 },
            schedule: TrainingSchedule {
                epochs: 2,
                ..TrainingSchedule::default()
            },
        };
        let out = run_grid(&grid, 1).unwrap();
        assert_eq!(out.len(), 2);
        match &out[0].outcome {
            CellOutcome::Failed(f) => assert!(f.error.contains("no rows"), "{}", f.error),
            other => panic!("expected failure, got {other:?}"),
        }
        assert!(out[1].outcome.result().is_some());
    }

    #[test]
    fn config_errors_name_the_field() {
        let cases = [
            (
                r#"{"domain":{"family":"backbone","c":[1],"s":[1],"b":[1]},"depths":[1],"seeds":[1],"regimen":{"kind":"balanced_test"},"schedule":{"epochs":"ten"}}"#,
                "schedule.epochs",
            ),
            (
                r#"{"domain":{"family":"overlap","k":[11],"minority_frac":[0.5]},"depths":[1],"seeds":[1],"regimen":{"kind":"balanced_test"}}"#,
                "domain.k[0]",
            ),
            (
                r#"{"domain":{"family":"backbone","c":[1],"s":[1],"b":[1]},"depths":[1, 6],"seeds":[1],"regimen":{"kind":"balanced_test"}}"#,
                "depths[1]",
            ),
            (
                r#"{"domain":{"family":"backbone","c":[1],"s":[1],"b":[1]},"depths":[1],"seeds":[],"regimen":{"kind":"balanced_test"}}"#,
                "seeds",
            ),
            (
                r#"{"domain":{"family":"backbone","c":[1],"s":[1],"b":[1]},"depths":[1],"seeds":[1],"regimen":{"kind":"stratified_cv","k":1}}"#,
                "regimen.k",
            ),
        ];
        for (text, want) in cases {
            match ExperimentGrid::from_json(text) {
                Err(Error::Config { path, .. }) => assert_eq!(path, want, "{text}"),
                other => panic!("{text}: expected config error, got {other:?}"),
            }
        }
    }

    #[test]
    fn config_round_trips() {
        let grid = presets::fig4(3);
        let text = serde_json::to_string(&grid).unwrap();
        assert_eq!(ExperimentGrid::from_json(&text).unwrap(), grid);
        let minimal = r#"{"domain":{"family":"gaussian_backbone","v":[1],"b":[2]},"depths":[3],"seeds":[4],"regimen":{"kind":"balanced_test"}}"#;
        let g = ExperimentGrid::from_json(minimal).unwrap();
        assert_eq!(g.hidden_unit_candidates, [2, 4, 8, 16]);
        assert_eq!(g.schedule, TrainingSchedule::default());
    }
}
