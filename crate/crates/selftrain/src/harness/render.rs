//! Table and series rendering of a result grid.
//!
//! The table mirrors the usual strategy-comparison layout: one row per |D|,
//! a T(D) baseline column, then one column per (strategy, K, |U|) group
//! showing mean accuracy (in percent) with the delta against the baseline
//! in parentheses; the best cell of each row is starred in the text output
//! and flagged in the CSV. CSV numbers are written with full round-trip
//! precision.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::harness::grid::{mean, std_dev, Aggregate, AggregateKey, Axis, ResultGrid};

/// Column identity in the rendered table.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct ColumnKey {
    strategy: String,
    k: usize,
    u_size: usize,
}

fn column_label(col: &ColumnKey, multi_u: bool) -> String {
    let strategy_label = crate::strategies::StrategyKind::parse(&col.strategy)
        .map(|k| k.label().to_string())
        .unwrap_or_else(|| col.strategy.clone());
    let mut label = if col.k == 0 {
        format!("{strategy_label} D'=U")
    } else {
        format!("{strategy_label} K={}", col.k)
    };
    if multi_u {
        write!(label, " U={}", col.u_size).expect("write to string");
    }
    label
}

/// Renders the aggregated grid as a fixed-width text table and a CSV.
pub fn render_table(grid: &ResultGrid) -> Result<(String, String)> {
    if grid.ok_records().next().is_none() {
        return Err(Error::EmptyDataset);
    }
    let aggregates = grid.aggregate();

    let d_sizes: BTreeSet<usize> = aggregates.keys().map(|k| k.d_size).collect();
    let columns: BTreeSet<ColumnKey> = aggregates
        .keys()
        .map(|k| ColumnKey {
            strategy: k.strategy.clone(),
            k: k.k,
            u_size: k.u_size,
        })
        .collect();
    let multi_u = columns.iter().map(|c| c.u_size).collect::<BTreeSet<_>>().len() > 1;

    let lookup = |d: usize, col: &ColumnKey| -> Option<&Aggregate> {
        aggregates.get(&AggregateKey {
            strategy: col.strategy.clone(),
            d_size: d,
            k: col.k,
            u_size: col.u_size,
        })
    };

    // text table
    let mut text = String::new();
    let width = 22usize;
    write!(text, "{:>8}  {:>10}", "|D|", "T(D)").expect("write to string");
    for col in &columns {
        write!(text, "  {:>width$}", column_label(col, multi_u)).expect("write to string");
    }
    text.push('\n');
    for &d in &d_sizes {
        let baseline = grid.row_baseline(d).expect("row has ok records");
        write!(text, "{:>8}  {:>10.2}", d, baseline * 100.0).expect("write to string");
        let best = columns
            .iter()
            .filter_map(|c| lookup(d, c))
            .map(|a| a.student_mean)
            .fold(f64::NEG_INFINITY, f64::max);
        for col in &columns {
            let cell = match lookup(d, col) {
                Some(agg) => {
                    let value = agg.student_mean * 100.0;
                    let delta = (agg.student_mean - baseline) * 100.0;
                    let marker = if agg.student_mean == best { "*" } else { "" };
                    format!("{marker}{value:.2}{marker} ({delta:+.2})")
                }
                None => "--".to_string(),
            };
            write!(text, "  {cell:>width$}").expect("write to string");
        }
        text.push('\n');
    }

    // csv with full-precision values
    let mut csv = String::from(
        "d_size,strategy,k,u_size,n_seeds,student_mean,student_std,teacher_mean,baseline,delta,best_in_row\n",
    );
    for &d in &d_sizes {
        let baseline = grid.row_baseline(d).expect("row has ok records");
        let best = columns
            .iter()
            .filter_map(|c| lookup(d, c))
            .map(|a| a.student_mean)
            .fold(f64::NEG_INFINITY, f64::max);
        for col in &columns {
            if let Some(agg) = lookup(d, col) {
                let delta = agg.student_mean - baseline;
                writeln!(
                    csv,
                    "{d},{},{},{},{},{},{},{},{},{},{}",
                    col.strategy,
                    col.k,
                    col.u_size,
                    agg.n,
                    agg.student_mean,
                    agg.student_std,
                    agg.teacher_mean,
                    baseline,
                    delta,
                    agg.student_mean == best
                )
                .expect("write to string");
            }
        }
    }
    Ok((text, csv))
}

/// One (x, mean, stdev) series per strategy along the chosen axis, points
/// ascending in x. Requires at least two distinct x values.
pub fn render_series(grid: &ResultGrid, axis: Axis) -> Result<String> {
    let xs = grid.axis_values(axis);
    if xs.len() < 2 {
        return Err(Error::AxisDegenerate {
            axis: axis.name().to_string(),
        });
    }
    let strategies: BTreeSet<String> = grid
        .ok_records()
        .map(|r| r.key.strategy.clone())
        .collect();

    let mut csv = format!("strategy,{},mean,stdev\n", axis.name());
    for strategy in &strategies {
        for &x in &xs {
            let values: Vec<f64> = grid
                .ok_records()
                .filter(|r| &r.key.strategy == strategy)
                .flat_map(|r| match axis {
                    Axis::DSize => (r.key.d_size as u64 == x)
                        .then_some(r.student_acc)
                        .flatten()
                        .into_iter()
                        .collect::<Vec<f64>>(),
                    Axis::K => (r.key.k as u64 == x)
                        .then_some(r.student_acc)
                        .flatten()
                        .into_iter()
                        .collect(),
                    Axis::USize => (r.key.u_size as u64 == x)
                        .then_some(r.student_acc)
                        .flatten()
                        .into_iter()
                        .collect(),
                    Axis::Iteration => r
                        .iteration_accs
                        .get((x - 1) as usize)
                        .copied()
                        .into_iter()
                        .collect(),
                })
                .collect();
            if values.is_empty() {
                continue;
            }
            writeln!(csv, "{strategy},{x},{},{}", mean(&values), std_dev(&values))
                .expect("write to string");
        }
    }
    Ok(csv)
}
