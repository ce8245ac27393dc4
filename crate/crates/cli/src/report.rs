//! Writing a finished run to disk and summarising it on stdout.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::Format;
use crate::output::{self, g17, table_csv, trajectory_csv, Cell};
use crate::run::RunReport;

/// Write every output file; returns the file names in creation order.
pub fn emit(report: &RunReport, config_text: &str, dir: &Path, format: Format) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut files = Vec::new();
    let mut put = |name: String, contents: String| -> Result<()> {
        output::write(dir, &name, &contents)?;
        files.push(name);
        Ok(())
    };
    put("config.toml".into(), config_text.to_string())?;

    let ext = match format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let mut plotted = Vec::new();
    for m in &report.microstates {
        let n = m.index;
        for (route, rows) in &m.data {
            if rows.is_empty() {
                continue;
            }
            let name = format!("ms{n}_{}.{ext}", route.name());
            let body = match format {
                Format::Csv => trajectory_csv(rows),
                Format::Json => output::json(rows)?,
            };
            put(name.clone(), body)?;
            if format == Format::Csv {
                plotted.push((name, format!("ms{n} {}", route.name())));
            }
        }
        if let Some(pair) = &m.basis {
            let xs: Vec<f64> = pair.grid().points().collect();
            let name = format!("ms{n}_basis.{ext}");
            let body = match format {
                Format::Csv => {
                    let rows: Vec<Vec<Cell>> = (0..xs.len())
                        .map(|i| {
                            [xs[i], pair.theta1()[i], pair.theta1_prime()[i], pair.theta2()[i], pair.theta2_prime()[i]]
                                .map(|v| Cell::Num(Some(v)))
                                .into()
                        })
                        .collect();
                    table_csv(&["x", "theta1", "theta1_prime", "theta2", "theta2_prime"], &rows)
                }
                Format::Json => {
                    #[derive(Serialize)]
                    struct Basis<'a> {
                        x: &'a [f64],
                        theta1: &'a [f64],
                        theta1_prime: &'a [f64],
                        theta2: &'a [f64],
                        theta2_prime: &'a [f64],
                    }
                    output::json(&Basis {
                        x: &xs,
                        theta1: pair.theta1(),
                        theta1_prime: pair.theta1_prime(),
                        theta2: pair.theta2(),
                        theta2_prime: pair.theta2_prime(),
                    })?
                }
            };
            put(name, body)?;
        }
        if let Some(limit) = &m.limit {
            let name = format!("ms{n}_limit.{ext}");
            let body = match format {
                Format::Csv => {
                    let rows: Vec<Vec<Cell>> = limit
                        .samples
                        .iter()
                        .map(|s| vec![Cell::Num(Some(s.halvings as f64)), Cell::Num(Some(s.hbar)), Cell::Num(Some(s.average)), Cell::Num(Some(s.ratio))])
                        .collect();
                    table_csv(&["halvings", "hbar", "average", "ratio"], &rows)
                }
                Format::Json => output::json(limit)?,
            };
            put(name, body)?;
        }
    }

    match format {
        Format::Json => put("report.json".into(), output::json(report)?)?,
        Format::Csv => {
            put("report.csv".into(), routes_table(report))?;
            put("checks.csv".into(), checks_table(report))?;
            if report.microstates.iter().any(|m| m.probe.is_some()) {
                put("probe.csv".into(), probe_table(report))?;
            }
            if report.microstates.iter().any(|m| !m.comparisons.is_empty()) {
                put("comparisons.csv".into(), comparison_table(report))?;
            }
        }
    }
    put("plot.gp".into(), output::gnuplot_script(&plotted))?;
    Ok(files)
}

fn text(s: impl Into<String>) -> Cell {
    Cell::Text(s.into())
}

fn num(v: Option<f64>) -> Cell {
    Cell::Num(v)
}

fn routes_table(report: &RunReport) -> String {
    let rows: Vec<Vec<Cell>> = report
        .microstates
        .iter()
        .flat_map(|m| {
            m.routes.iter().map(move |r| {
                vec![
                    num(Some(m.index as f64)),
                    text(r.route.name()),
                    text(r.status),
                    num(Some(r.points as f64)),
                    num(r.start.map(|s| s[0])),
                    num(r.start.map(|s| s[1])),
                    num(r.end.map(|s| s[0])),
                    num(r.end.map(|s| s[1])),
                    num(r.max_conservation),
                    num(r.max_fiqnl),
                    text(r.message.clone().unwrap_or_default()),
                ]
            })
        })
        .collect();
    table_csv(
        &["microstate", "route", "status", "points", "t_start", "x_start", "t_end", "x_end", "max_conservation", "max_fiqnl", "message"],
        &rows,
    )
}

fn checks_table(report: &RunReport) -> String {
    let rows: Vec<Vec<Cell>> = report
        .microstates
        .iter()
        .flat_map(|m| {
            m.checks
                .iter()
                .map(move |c| vec![num(Some(m.index as f64)), text(c.name.clone()), num(c.value), num(c.bound), text(if c.pass { "pass" } else { "fail" })])
                .chain(m.errors.iter().map(move |e| vec![num(Some(m.index as f64)), text("error"), num(None), num(None), text(e.clone())]))
        })
        .collect();
    table_csv(&["microstate", "check", "value", "bound", "result"], &rows)
}

fn probe_table(report: &RunReport) -> String {
    let rows: Vec<Vec<Cell>> = report
        .microstates
        .iter()
        .filter_map(|m| m.probe.as_ref().map(|p| (m.index, p)))
        .flat_map(|(n, p)| {
            p.times.iter().map(move |t| vec![num(Some(n as f64)), num(Some(p.x)), text(t.route.name()), num(t.t), text(t.error.clone().unwrap_or_default())])
        })
        .collect();
    table_csv(&["microstate", "x", "route", "t", "error"], &rows)
}

fn comparison_table(report: &RunReport) -> String {
    let rows: Vec<Vec<Cell>> = report
        .microstates
        .iter()
        .flat_map(|m| {
            m.comparisons.iter().map(move |c| {
                vec![
                    num(Some(m.index as f64)),
                    text(c.routes[0].name()),
                    text(c.routes[1].name()),
                    num(Some(c.t_range[0])),
                    num(Some(c.t_range[1])),
                    num(Some(c.max_dx)),
                ]
            })
        })
        .collect();
    table_csv(&["microstate", "route_a", "route_b", "t_from", "t_to", "max_dx"], &rows)
}

/// Human-readable summary for stdout.
pub fn summary(report: &RunReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "qtraj {}: {} microstate(s)", report.command, report.microstates.len());
    for m in &report.microstates {
        let ms = &m.microstate;
        let _ = writeln!(s, "microstate {} (E = {}, a = {}, b = {}, lambda = {})", m.index, g17(ms.energy), g17(ms.a), g17(ms.b), g17(ms.lambda));
        for e in &m.errors {
            let _ = writeln!(s, "  error: {e}");
        }
        for r in &m.routes {
            match (&r.message, r.end) {
                (Some(msg), _) => {
                    let _ = writeln!(s, "  {:<12} {}: {msg}", r.route.name(), r.status);
                }
                (None, Some([t, x])) => {
                    let _ = writeln!(s, "  {:<12} {} points, ends at t = {}, x = {}", r.route.name(), r.points, g17(t), g17(x));
                }
                (None, None) => {
                    let _ = writeln!(s, "  {:<12} {} points", r.route.name(), r.points);
                }
            }
        }
        if let Some(p) = &m.probe {
            let _ = writeln!(s, "  times at x = {}:", g17(p.x));
            for t in &p.times {
                match t.t {
                    Some(v) => {
                        let _ = writeln!(s, "    {:<12} {}", t.route.name(), g17(v));
                    }
                    None => {
                        let _ = writeln!(s, "    {:<12} n/a ({})", t.route.name(), t.error.as_deref().unwrap_or(""));
                    }
                }
            }
        }
        for c in &m.comparisons {
            let _ = writeln!(s, "  max |dx| {} vs {}: {:.3e}", c.routes[0].name(), c.routes[1].name(), c.max_dx);
        }
        if let Some(l) = &m.limit {
            let _ = writeln!(s, "  classical slope {}", g17(l.classical));
            for x in &l.samples {
                let _ = writeln!(s, "    halvings {}  hbar {:<10}  average {:.9}  ratio {:.6}", x.halvings, g17(x.hbar), x.average, x.ratio);
            }
        }
        for c in &m.checks {
            let bound = c.bound.map(|b| format!(" <= {b:.1e}")).unwrap_or_default();
            let value = c.value.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "n/a".into());
            let verdict = match (c.bound, c.pass) {
                (None, _) => "info",
                (_, true) => "pass",
                (_, false) => "FAIL",
            };
            let _ = writeln!(s, "  [{verdict}] {} = {value}{bound}", c.name);
        }
    }
    let _ = writeln!(
        s,
        "{}: {} check(s) failed, {} failure(s)",
        if report.success { "ok" } else { "bounds not met" },
        report.checks_failed,
        report.failures
    );
    s
}
