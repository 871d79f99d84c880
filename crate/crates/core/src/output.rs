//! Result files: per-segment CSV, strategy-weight trajectory and SVG plots.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sim::RunOutput;

pub const RESULTS_FILE: &str = "results.csv";
pub const STRATEGY_WEIGHTS_FILE: &str = "strategy_weights.csv";
pub const OVERLAP_SVG: &str = "overlap_heatmap.svg";
pub const TAU_SVG: &str = "tau_heatmap.svg";
pub const WEIGHTS_SVG: &str = "weights.svg";

pub fn results_header(out: &RunOutput) -> Vec<String> {
    let mut header: Vec<String> = ["segment", "iteration", "queried"].map(String::from).to_vec();
    header.push(format!("overlap_top{}", out.top_n));
    header.extend(["kendall_tau", "queries_cum"].map(String::from));
    header.extend(out.systems.iter().map(|s| format!("w_{s}")));
    header
}

/// `results.csv` as a string, one row per segment.
pub fn results_csv(out: &RunOutput) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Config(format!("csv: {e}"));
    w.write_record(results_header(out)).map_err(csv_err)?;
    for r in &out.records {
        let mut row = vec![
            r.segment.to_string(),
            r.iteration.to_string(),
            u8::from(r.queried).to_string(),
            r.overlap_top_n.to_string(),
            r.kendall_tau.to_string(),
            r.queries_cum.to_string(),
        ];
        row.extend(r.ensemble_shares.iter().map(f64::to_string));
        w.write_record(row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// `strategy_weights.csv`: the starting shares at iteration 0, then the shares
/// after every query event. Header only when no combiner ran.
pub fn strategy_weights_csv(out: &RunOutput) -> String {
    let mut s = String::from("iteration,strategy,weight_share\n");
    if out.strategies.is_empty() {
        return s;
    }
    let mut emit = |iteration: usize, shares: &[f64]| {
        for (kind, share) in out.strategies.iter().zip(shares) {
            writeln!(s, "{iteration},{kind},{share}").expect("writing to a String");
        }
    };
    emit(0, &out.initial_strategy_shares);
    for r in out.records.iter().filter(|r| r.queried) {
        emit(r.iteration, &r.strategy_shares);
    }
    s
}

const WIDTH: f64 = 800.0;
const STRIP_HEIGHT: f64 = 40.0;
const PLOT_HEIGHT: f64 = 300.0;
const MARGIN: f64 = 40.0;
const PALETTE: [&str; 12] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    "#393b79", "#637939",
];

/// Maps `t` in [0, 1] from red through yellow to green.
fn heat_color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let (r, g) = if t < 0.5 { (255.0, 510.0 * t) } else { (510.0 * (1.0 - t), 255.0) };
    format!("#{:02x}{:02x}40", r.round() as u8, g.round() as u8)
}

fn svg_open(width: f64, height: f64, title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n\
         <title>{title}</title>\n\
         <text x=\"{MARGIN}\" y=\"20\" font-family=\"sans-serif\" font-size=\"12\">{title}</text>\n"
    )
}

/// One colored cell per query event, in order.
pub fn heatmap_svg(title: &str, values: &[f64], min: f64, max: f64) -> String {
    let height = STRIP_HEIGHT + 2.0 * MARGIN;
    let mut s = svg_open(WIDTH + 2.0 * MARGIN, height, title);
    writeln!(
        s,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{WIDTH}\" height=\"{STRIP_HEIGHT}\" fill=\"none\" stroke=\"#444\"/>"
    )
    .unwrap();
    if !values.is_empty() {
        let cell = WIDTH / values.len() as f64;
        for (i, &v) in values.iter().enumerate() {
            let x = MARGIN + i as f64 * cell;
            writeln!(
                s,
                "<rect x=\"{x:.3}\" y=\"{MARGIN}\" width=\"{cell:.3}\" height=\"{STRIP_HEIGHT}\" fill=\"{}\"/>",
                heat_color((v - min) / (max - min))
            )
            .unwrap();
        }
    }
    writeln!(
        s,
        "<text x=\"{MARGIN}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\">queries: {}</text>",
        MARGIN + STRIP_HEIGHT + 15.0,
        values.len()
    )
    .unwrap();
    s.push_str("</svg>\n");
    s
}

/// One line per strategy, weight share against query events.
pub fn weights_svg(out: &RunOutput) -> String {
    let height = PLOT_HEIGHT + 2.0 * MARGIN;
    let mut s = svg_open(WIDTH + 2.0 * MARGIN + 120.0, height, "strategy weight shares");
    writeln!(
        s,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{WIDTH}\" height=\"{PLOT_HEIGHT}\" fill=\"none\" stroke=\"#444\"/>"
    )
    .unwrap();
    let mut series: Vec<&[f64]> = vec![&out.initial_strategy_shares];
    series.extend(out.records.iter().filter(|r| r.queried).map(|r| r.strategy_shares.as_slice()));
    let steps = (series.len() - 1).max(1) as f64;
    let ymax = series
        .iter()
        .flat_map(|v| v.iter().copied())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    for (k, kind) in out.strategies.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let points: Vec<String> = series
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let x = MARGIN + WIDTH * i as f64 / steps;
                let y = MARGIN + PLOT_HEIGHT * (1.0 - v[k] / ymax);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        writeln!(
            s,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
            points.join(" ")
        )
        .unwrap();
        writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" fill=\"{color}\">{kind}</text>",
            MARGIN + WIDTH + 10.0,
            MARGIN + 12.0 * (k + 1) as f64
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(path, e))
}

/// Writes every result file into `dir`, creating it if needed.
pub fn write_results(out: &RunOutput, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(dir, RESULTS_FILE, &results_csv(out)?)?;
    write(dir, STRATEGY_WEIGHTS_FILE, &strategy_weights_csv(out))?;
    let queried: Vec<_> = out.records.iter().filter(|r| r.queried).collect();
    let overlap: Vec<f64> = queried.iter().map(|r| r.overlap_top_n).collect();
    let tau: Vec<f64> = queried.iter().map(|r| r.kendall_tau).collect();
    write(dir, OVERLAP_SVG, &heatmap_svg(&format!("overlap top-{}", out.top_n), &overlap, 0.0, 1.0))?;
    write(dir, TAU_SVG, &heatmap_svg("kendall tau", &tau, -1.0, 1.0))?;
    write(dir, WEIGHTS_SVG, &weights_svg(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::IterationRecord;
    use crate::strategies::StrategyKind;

    fn output(records: Vec<IterationRecord>, strategies: Vec<StrategyKind>) -> RunOutput {
        RunOutput {
            systems: vec!["a".into(), "b".into()],
            initial_strategy_shares: vec![1.0 / strategies.len().max(1) as f64; strategies.len()],
            strategies,
            records,
            top_n: 3,
            final_probabilities: vec![0.5, 0.5],
        }
    }

    fn record(segment: usize, queried: bool, q: usize) -> IterationRecord {
        IterationRecord {
            segment,
            iteration: q,
            queried,
            overlap_top_n: 1.0 / 3.0,
            kendall_tau: 0.0,
            queries_cum: q,
            chosen: 0,
            ensemble_shares: vec![0.25, 0.75],
            strategy_shares: vec![0.5, 0.5],
        }
    }

    #[test]
    fn empty_run_gives_headers() {
        let out = output(vec![], vec![]);
        assert_eq!(
            results_csv(&out).unwrap(),
            "segment,iteration,queried,overlap_top3,kendall_tau,queries_cum,w_a,w_b\n"
        );
        assert_eq!(strategy_weights_csv(&out), "iteration,strategy,weight_share\n");
        assert!(heatmap_svg("t", &[], 0.0, 1.0).contains("queries: 0"));
        assert!(weights_svg(&out).ends_with("</svg>\n"));
    }

    #[test]
    fn rows_and_trajectory() {
        let recs = vec![record(4, true, 1), record(2, false, 1), record(0, true, 2)];
        let out = output(recs, vec![StrategyKind::DivJac, StrategyKind::Random]);
        let csv = results_csv(&out).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "4,1,1,0.3333333333333333,0,1,0.25,0.75");
        assert_eq!(lines[2], "2,1,0,0.3333333333333333,0,1,0.25,0.75");
        let w = strategy_weights_csv(&out);
        assert_eq!(w.lines().count(), 1 + 2 * 3);
        assert!(w.contains("0,DivJac,0.5\n"));
        assert!(w.contains("2,Random,0.5\n"));
    }

    #[test]
    fn heat_colors() {
        assert_eq!(heat_color(0.0), "#ff0040");
        assert_eq!(heat_color(1.0), "#00ff40");
        assert_eq!(heat_color(0.5), "#ffff40");
    }
}
