//! File writers: fixed-column CSV, JSON, and a gnuplot script.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use qtraj_core::{Diagnostics, TrajectoryState};
use serde::Serialize;

pub const TRAJECTORY_COLUMNS: [&str; 7] = ["t", "x", "v", "acc", "jerk", "conservation_residual", "fiqnl_residual"];

/// `printf("%.17g", x)`: 17 significant digits, trailing zeros removed,
/// scientific notation when the exponent is below -4 or at least 17.
pub fn g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let decimals = (16 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(g17).unwrap_or_default()
}

/// One output row. Quantities a route does not define stay empty.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct Row {
    pub t: Option<f64>,
    pub x: Option<f64>,
    pub v: Option<f64>,
    pub acc: Option<f64>,
    pub jerk: Option<f64>,
    pub conservation_residual: Option<f64>,
    pub fiqnl_residual: Option<f64>,
}

impl Row {
    pub fn from_state(s: &TrajectoryState, d: &Diagnostics) -> Self {
        Self {
            t: Some(s.t),
            x: Some(s.x),
            v: Some(s.v),
            acc: Some(s.acc),
            jerk: s.jerk,
            conservation_residual: d.conservation,
            fiqnl_residual: d.fiqnl,
        }
    }

    fn cells(&self) -> [Option<f64>; 7] {
        [self.t, self.x, self.v, self.acc, self.jerk, self.conservation_residual, self.fiqnl_residual]
    }
}

pub fn trajectory_csv(rows: &[Row]) -> String {
    let mut out = TRAJECTORY_COLUMNS.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.cells().map(cell).join(","));
        out.push('\n');
    }
    out
}

/// Generic CSV table with `%.17g` numbers and bare strings.
pub fn table_csv(header: &[&str], rows: &[Vec<Cell>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(Cell::render).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub enum Cell {
    Num(Option<f64>),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Self::Num(v) => cell(*v),
            Self::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Self::Text(s) => s.clone(),
        }
    }
}

pub fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

/// gnuplot script plotting x against t for every trajectory file.
pub fn gnuplot_script(files: &[(String, String)]) -> String {
    let mut s = String::new();
    s.push_str("# Regenerate with: gnuplot -persist plot.gp\n");
    s.push_str("set datafile separator ','\nset key autotitle columnhead\nset xlabel 't'\nset ylabel 'x'\nset grid\n");
    if files.is_empty() {
        s.push_str("# no trajectory files were produced\n");
        return s;
    }
    s.push_str("plot ");
    let parts: Vec<String> = files
        .iter()
        .map(|(file, title)| format!("'{file}' using 1:2 with lines title '{}'", title.replace('\'', "")))
        .collect();
    let _ = write!(s, "{}", parts.join(", \\\n     "));
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g17() {
        let cases = [
            (0.1, "0.10000000000000001"),
            (0.5, "0.5"),
            (1.0, "1"),
            (-2.5, "-2.5"),
            (1e-5, "1.0000000000000001e-05"),
            (1e20, "1e+20"),
            (123456.0, "123456"),
            (1e16, "10000000000000000"),
            (1e17, "1e+17"),
            (0.0001, "0.0001"),
            (std::f64::consts::PI, "3.1415926535897931"),
            (2f64.atan(), "1.1071487177940904"),
            (0.0, "0"),
            (-1.5e-300, "-1.5000000000000001e-300"),
        ];
        for (x, expected) in cases {
            assert_eq!(g17(x), expected, "{x:e}");
        }
    }

    #[test]
    fn g17_round_trips() {
        for x in [0.1, 1.0 / 3.0, 6.02214076e23, 1e-310, -7.25e-3] {
            assert_eq!(g17(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn missing_quantities_are_empty() {
        let csv = trajectory_csv(&[Row { t: Some(0.5), x: Some(1.0), ..Row::default() }]);
        assert_eq!(csv, "t,x,v,acc,jerk,conservation_residual,fiqnl_residual\n0.5,1,,,,,\n");
    }
}
