//! Result files: `config.json`, `regret.csv`, `trajectory.csv` (ODE runs),
//! `fit.json`, `summary.json`, and optionally `regret.svg` and per-replication
//! CSVs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::run::ExperimentResult;
use crate::error::{Error, Result};

pub const REGRET_HEADER: [&str; 5] = ["time", "mean_rg", "mean_Rg", "std_Rg", "theorem_bound"];

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(io_err(path))
}

fn write_csv(
    path: &Path,
    header: &[String],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut writer = csv::Writer::from_path(path).map_err(csv_err)?;
    writer.write_record(header).map_err(csv_err)?;
    for row in rows {
        writer.write_record(&row).map_err(csv_err)?;
    }
    writer.flush().map_err(io_err(path))
}

/// Writes every result file into `output_dir`, data before the fit.
/// Returns the paths written.
pub fn emit_outputs(result: &ExperimentResult, output_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(output_dir).map_err(io_err(output_dir))?;
    let mut written = Vec::new();

    let config_path = output_dir.join("config.json");
    write_file(&config_path, &(result.config.to_json()? + "\n"))?;
    written.push(config_path);

    let regret_path = output_dir.join("regret.csv");
    write_csv(
        &regret_path,
        &REGRET_HEADER.map(String::from),
        result.rows.iter().map(|r| {
            vec![
                r.time.to_string(),
                r.mean_rg.to_string(),
                r.mean_regret.to_string(),
                r.std_regret.to_string(),
                r.theorem_bound.map(|b| b.to_string()).unwrap_or_default(),
            ]
        }),
    )?;
    written.push(regret_path);

    if result.config.algorithm.is_ode() {
        let path = output_dir.join("trajectory.csv");
        let n = result.n_arms();
        let mut header = vec!["time".to_string()];
        header.extend((0..n).map(|a| format!("p_{a}")));
        header.push("rg".into());
        header.push("Rg".into());
        let samples = result
            .trajectory
            .as_ref()
            .map(|t| t.samples.as_slice())
            .unwrap_or_default();
        write_csv(
            &path,
            &header,
            samples.iter().map(|s| {
                let mut row = vec![s.time.to_string()];
                row.extend(s.probs.iter().map(|p| p.to_string()));
                row.push(s.rg.to_string());
                row.push(s.cumulative_regret.to_string());
                row
            }),
        )?;
        written.push(path);
    }

    if result.config.per_rep && !result.replications.is_empty() {
        let dir = output_dir.join("replications");
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        for rep in &result.replications {
            let path = dir.join(format!("rep_{:04}.csv", rep.replication));
            write_csv(
                &path,
                &["time", "rg", "Rg"].map(String::from),
                rep.ledger
                    .samples
                    .iter()
                    .zip(&rep.regret)
                    .map(|((t, rg), regret)| {
                        vec![t.to_string(), rg.to_string(), regret.to_string()]
                    }),
            )?;
            written.push(path);
        }
    }

    if result.config.plot {
        let path = output_dir.join("regret.svg");
        write_file(&path, &render_svg(result))?;
        written.push(path);
    }

    let summary_path = output_dir.join("summary.json");
    write_file(
        &summary_path,
        &(serde_json::to_string_pretty(&result.diagnostics)? + "\n"),
    )?;
    written.push(summary_path);

    let fit_path = output_dir.join("fit.json");
    write_file(
        &fit_path,
        &(serde_json::to_string_pretty(&result.fit)? + "\n"),
    )?;
    written.push(fit_path);

    Ok(written)
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;

/// Regret against `log10 T`, with the analytic bound dashed when present.
pub fn render_svg(result: &ExperimentResult) -> String {
    let regret: Vec<(f64, f64)> = result
        .rows
        .iter()
        .filter(|r| r.time > 0.0)
        .map(|r| (r.time.log10(), r.mean_regret))
        .collect();
    let bound: Vec<(f64, f64)> = result
        .rows
        .iter()
        .filter(|r| r.time > 0.0)
        .filter_map(|r| r.theorem_bound.map(|b| (r.time.log10(), b)))
        .collect();

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="14">{:?}: cumulative regret vs log10 T</text>"#,
        WIDTH / 2.0,
        result.config.algorithm
    );
    if regret.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }

    let all = regret.iter().chain(&bound);
    let (x_lo, x_hi) = all
        .clone()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.0), hi.max(p.0))
        });
    let y_hi = all.fold(0.0f64, |hi, p| hi.max(p.1));
    let x_span = if x_hi > x_lo { x_hi - x_lo } else { 1.0 };
    let y_span = if y_hi > 0.0 { y_hi } else { 1.0 };
    let sx = |x: f64| MARGIN + (x - x_lo) / x_span * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - y / y_span * (HEIGHT - 2.0 * MARGIN);

    let _ = writeln!(
        svg,
        r#"<polyline fill="none" stroke="black" points="{m},{t} {m},{b} {r},{b}"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    let label = |svg: &mut String, x: f64, y: f64, anchor: &str, text: String| {
        let _ = writeln!(
            svg,
            r#"<text x="{x:.1}" y="{y:.1}" text-anchor="{anchor}" font-family="sans-serif" font-size="11">{text}</text>"#
        );
    };
    label(
        &mut svg,
        sx(x_lo),
        HEIGHT - MARGIN + 16.0,
        "middle",
        format!("{x_lo:.2}"),
    );
    label(
        &mut svg,
        sx(x_hi),
        HEIGHT - MARGIN + 16.0,
        "middle",
        format!("{x_hi:.2}"),
    );
    label(&mut svg, MARGIN - 6.0, sy(0.0), "end", "0".into());
    label(
        &mut svg,
        MARGIN - 6.0,
        sy(y_span),
        "end",
        format!("{y_span:.3}"),
    );

    let polyline = |svg: &mut String, pts: &[(f64, f64)], style: &str| {
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" {style} points="{}"/>"#,
            coords.join(" ")
        );
    };
    polyline(&mut svg, &regret, r#"stroke="steelblue" stroke-width="2""#);
    if !bound.is_empty() {
        polyline(
            &mut svg,
            &bound,
            r#"stroke="firebrick" stroke-width="1.5" stroke-dasharray="6 4""#,
        );
    }
    svg.push_str("</svg>\n");
    svg
}
