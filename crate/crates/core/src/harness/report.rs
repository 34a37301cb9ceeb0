use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use super::grid::{CellOutcome, TimedOutcome};
use crate::domain::{DomainSpec, Family};
use crate::{Error, Result};

/// Header of the pivot CSV.
pub const PIVOT_HEADER: &str =
    "family,depth,size,level,balance,gmean_macro,gmean_macro_std,replicates";

/// Writes one JSON object per line.
pub fn write_results<'a, W: Write>(
    outcomes: impl IntoIterator<Item = &'a CellOutcome>,
    mut out: W,
) -> Result<()> {
    for outcome in outcomes {
        let line = serde_json::to_string(outcome)?;
        writeln!(out, "{line}").map_err(|e| Error::io("<results>", e))?;
    }
    Ok(())
}

pub fn save_results<'a>(
    path: impl AsRef<Path>,
    outcomes: impl IntoIterator<Item = &'a CellOutcome>,
) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_results(outcomes, &mut buf)?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Parses a results file; blank lines are skipped and the first bad line is
/// reported by number.
pub fn parse_results(text: &str, origin: &Path) -> Result<Vec<CellOutcome>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let outcome = serde_json::from_str(line).map_err(|e| Error::Malformed {
            path: origin.to_path_buf(),
            line: i as u64 + 1,
            reason: e.to_string(),
        })?;
        out.push(outcome);
    }
    Ok(out)
}

pub fn load_results(path: impl AsRef<Path>) -> Result<Vec<CellOutcome>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_results(&text, path)
}

/// Per-cell wall times, kept apart from the reproducible results file.
pub fn write_timings<W: Write>(timed: &[TimedOutcome], mut out: W) -> Result<()> {
    let io = |e| Error::io("<timings>", e);
    writeln!(out, "domain,depth,master_seed,status,runtime_secs").map_err(io)?;
    for t in timed {
        let (master, status) = match &t.outcome {
            CellOutcome::Ok(r) => (r.master_seed.unwrap_or(r.seed), "ok"),
            CellOutcome::Failed(f) => (f.master_seed, "failed"),
        };
        writeln!(
            out,
            "{},{},{},{},{:.3}",
            t.outcome.domain().slug(),
            t.outcome.depth(),
            master,
            status,
            t.runtime_secs
        )
        .map_err(io)?;
    }
    Ok(())
}

/// Macro G-Mean of one (family, depth, size, level, balance) cell, averaged
/// over replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct PivotRow {
    pub family: Family,
    pub depth: usize,
    /// Size level `s` for the backbone, total rows for overlap, none for the
    /// gaussian backbone.
    pub size: Option<u64>,
    /// `c`, `k` or `v`.
    pub level: u8,
    /// `b`, or the minority fraction for overlap.
    pub balance: f64,
    pub gmean_macro: f64,
    /// Sample standard deviation over replicates, when there are two or more.
    pub gmean_macro_std: Option<f64>,
    pub replicates: usize,
}

fn coordinates(domain: &DomainSpec) -> (Option<u64>, u8, f64) {
    match domain {
        DomainSpec::Backbone(s) => (Some(s.s().into()), s.c(), s.b().into()),
        DomainSpec::Overlap(s) => (Some(s.total() as u64), s.k(), s.minority_frac()),
        DomainSpec::GaussianBackbone(s) => (None, s.v(), s.b().into()),
    }
}

type PivotKey = (Family, usize, Option<u64>, u8, u64);

/// Groups successful cells and averages the selected macro G-Mean over
/// replicates. Failed cells are left out. Rows are sorted by family, depth,
/// size, level and balance.
pub fn pivot(outcomes: &[CellOutcome]) -> Vec<PivotRow> {
    let mut groups: BTreeMap<PivotKey, Vec<f64>> = BTreeMap::new();
    for r in outcomes.iter().filter_map(CellOutcome::result) {
        let (size, level, balance) = coordinates(&r.domain);
        // balances are non-negative, so their bit patterns sort numerically
        let key = (r.domain.family(), r.depth, size, level, balance.to_bits());
        groups.entry(key).or_default().push(r.mean.gmean_macro);
    }
    groups
        .into_iter()
        .map(|((family, depth, size, level, balance), values)| {
            let n = values.len();
            let mean = values.iter().sum::<f64>() / n as f64;
            let std = (n >= 2).then(|| {
                let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
                (ss / (n - 1) as f64).sqrt()
            });
            PivotRow {
                family,
                depth,
                size,
                level,
                balance: f64::from_bits(balance),
                gmean_macro: mean,
                gmean_macro_std: std,
                replicates: n,
            }
        })
        .collect()
}

pub fn write_pivot_csv<W: Write>(rows: &[PivotRow], mut out: W) -> Result<()> {
    let io = |e| Error::io("<pivot>", e);
    writeln!(out, "{PIVOT_HEADER}").map_err(io)?;
    for r in rows {
        let size = r.size.map(|s| s.to_string()).unwrap_or_default();
        let std = r
            .gmean_macro_std
            .map(|s| format!("{s:.6}"))
            .unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{:.6},{},{}",
            r.family, r.depth, size, r.level, r.balance, r.gmean_macro, std, r.replicates
        )
        .map_err(io)?;
    }
    Ok(())
}

pub fn save_pivot_csv(path: impl AsRef<Path>, rows: &[PivotRow]) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_pivot_csv(rows, &mut buf)?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

fn level_name(family: Family) -> &'static str {
    match family {
        Family::Backbone => "c",
        Family::Overlap => "k",
        Family::GaussianBackbone => "v",
    }
}

fn balance_label(family: Family, balance: f64) -> String {
    match family {
        Family::Overlap => format!("{balance}"),
        _ => format!("b={balance}"),
    }
}

/// Renders the pivot as text: one block per (family, size, depth) with
/// levels as rows and balance levels as columns. Missing cells print `-`.
pub fn render_table(rows: &[PivotRow]) -> String {
    let mut blocks: BTreeMap<(Family, Option<u64>, usize), Vec<&PivotRow>> = BTreeMap::new();
    for r in rows {
        blocks
            .entry((r.family, r.size, r.depth))
            .or_default()
            .push(r);
    }
    let mut text = String::new();
    for ((family, size, depth), block) in blocks {
        let mut balances: Vec<u64> = block.iter().map(|r| r.balance.to_bits()).collect();
        balances.sort_unstable();
        balances.dedup();
        let mut levels: Vec<u8> = block.iter().map(|r| r.level).collect();
        levels.sort_unstable();
        levels.dedup();

        let size_note = match (family, size) {
            (Family::Backbone, Some(s)) => format!(", size {s}"),
            (Family::Overlap, Some(n)) => format!(", {n} rows"),
            _ => String::new(),
        };
        let _ = writeln!(text, "{family}{size_note}, depth {depth} (macro G-Mean)");
        let _ = write!(text, "{:>6}", "");
        for &b in &balances {
            let _ = write!(text, " {:>8}", balance_label(family, f64::from_bits(b)));
        }
        text.push('\n');
        for &level in &levels {
            let _ = write!(text, "{:>6}", format!("{}={level}", level_name(family)));
            for &b in &balances {
                let cell = block
                    .iter()
                    .find(|r| r.level == level && r.balance.to_bits() == b)
                    .map(|r| format!("{:.3}", r.gmean_macro))
                    .unwrap_or_else(|| "-".to_owned());
                let _ = write!(text, " {cell:>8}");
            }
            text.push('\n');
        }
        text.push('\n');
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{BackboneSpec, ClassCounts, OverlapSpec};
    use crate::harness::grid::CellFailure;
    use crate::harness::run::{ExperimentResult, Regimen};
    use crate::metrics::MetricBundle;

    fn ok(domain: DomainSpec, depth: usize, seed: u64, g: f64) -> CellOutcome {
        let mut m = MetricBundle::from_values([0.5; 10]);
        m.gmean_macro = g;
        CellOutcome::Ok(ExperimentResult {
            domain,
            depth,
            hidden_units: 4,
            regimen: Regimen::BalancedTest,
            seed,
            master_seed: Some(seed),
            train_counts: ClassCounts {
                majority: 10,
                minority: 2,
            },
            evaluations: vec![m],
            mean: m,
            std: None,
            audit: Vec::new(),
        })
    }

    fn bb(c: u8, b: u8) -> DomainSpec {
        BackboneSpec::new(c, 1, b).unwrap().into()
    }

    #[test]
    fn results_round_trip() {
        let outcomes = vec![
            ok(bb(1, 2), 3, u64::MAX >> 1, 0.75),
            CellOutcome::Failed(CellFailure {
                domain: OverlapSpec::new(2, 0.05).unwrap().into(),
                depth: 1,
                master_seed: 1,
                seed: 2,
                error: "boom".into(),
            }),
        ];
        let mut buf = Vec::new();
        write_results(&outcomes, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(!text.contains("runtime"));
        let back = parse_results(&text, Path::new("r.jsonl")).unwrap();
        assert_eq!(back.len(), 2);
        match &back[0] {
            CellOutcome::Ok(r) => {
                assert_eq!(r.seed, u64::MAX >> 1);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(back[1], outcomes[1]);
    }

    #[test]
    fn corrupt_line_is_numbered() {
        let good = serde_json::to_string(&ok(bb(1, 1), 1, 0, 0.5)).unwrap();
        let text = format!("{good}\n\n{{\"status\": \"ok\"\n");
        match parse_results(&text, Path::new("r.jsonl")) {
            Err(Error::Malformed { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(parse_results("", Path::new("r.jsonl")).unwrap().is_empty());
    }

    #[test]
    fn pivot_averages_replicates() {
        let outcomes = vec![
            ok(bb(2, 1), 1, 1, 0.2),
            ok(bb(2, 1), 1, 2, 0.4),
            ok(bb(1, 1), 1, 1, 1.0),
            ok(bb(1, 1), 2, 1, 0.9),
        ];
        let rows = pivot(&outcomes);
        assert_eq!(rows.len(), 3);
        assert_eq!((rows[0].depth, rows[0].level), (1, 1));
        assert_eq!((rows[1].depth, rows[1].level), (1, 2));
        assert!((rows[1].gmean_macro - 0.3).abs() < 1e-15);
        assert!((rows[1].gmean_macro_std.unwrap() - 0.02f64.sqrt()).abs() < 1e-15);
        assert_eq!(rows[1].replicates, 2);
        assert!(rows[0].gmean_macro_std.is_none());

        let mut buf = Vec::new();
        write_pivot_csv(&rows, &mut buf).unwrap();
        let csv = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], PIVOT_HEADER);
        assert_eq!(lines[1], "backbone,1,1,1,1,1.000000,,1");
        assert_eq!(lines[2], "backbone,1,1,2,1,0.300000,0.141421,2");
    }

    #[test]
    fn table_has_one_block_per_depth() {
        let mut outcomes = Vec::new();
        for depth in 1..=2 {
            for c in 1..=3 {
                for b in 1..=2 {
                    outcomes.push(ok(bb(c, b), depth, 0, 0.5));
                }
            }
        }
        outcomes.pop();
        let table = render_table(&pivot(&outcomes));
        assert_eq!(table.matches("depth").count(), 2);
        assert!(table.contains("backbone, size 1, depth 2"));
        assert!(table.contains("b=2"));
        // the removed cell shows up as missing
        assert_eq!(table.matches(" -").count(), 1);
    }
}
