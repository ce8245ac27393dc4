//! Run configuration: a flat TOML file with dotted section names.
//!
//! ```toml
//! units.hbar = 1.0
//! potential.kind = "harmonic"
//! potential.stiffness = 1.0
//! grid.x_min = -1.5
//! grid.x_max = 1.5
//! grid.points = 3001
//! microstates.energy = 0.5
//! microstates.list = [[2.0, 0.0], { mu = 0.5, nu = 1.0 }]
//! ```

use std::fmt;

use qtraj_core::{convert_mu_nu, Convention, Grid, Potential, Stencil, Tolerances, Units};
use serde::Serialize;
use thiserror::Error;
use toml::{Table, Value};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Parse(ParseError),
    #[error("invalid configuration: {0}")]
    Validation(String),
}

#[derive(Debug)]
pub struct ParseError {
    pub line: Option<usize>,
    pub message: String,
    pub context: Option<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message)?,
            None => write!(f, "{}", self.message)?,
        }
        if let (Some(line), Some(ctx)) = (self.line, &self.context) {
            write!(f, "\n  {line} | {ctx}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteKind {
    Quadrature,
    Fiqnl,
    Floyd,
    ClosedForm,
    Classical,
}

impl RouteKind {
    pub const ALL: [RouteKind; 5] = [Self::Quadrature, Self::Fiqnl, Self::Floyd, Self::ClosedForm, Self::Classical];

    pub fn name(self) -> &'static str {
        match self {
            Self::Quadrature => "quadrature",
            Self::Fiqnl => "fiqnl",
            Self::Floyd => "floyd",
            Self::ClosedForm => "closed_form",
            Self::Classical => "classical",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(Self::Csv),
            "json" => Some(Self::Json),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MicrostateSpec {
    pub energy: f64,
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
    /// Set when the entry was given as (mu, nu); the basis is then recombined
    /// as (theta1, mu theta1 + theta2).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Span {
    pub x_start: f64,
    pub x_end: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    /// Output samples for routes that are evaluated pointwise.
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Bounds {
    /// Conservation bound relative to |E|.
    pub conservation_rel: f64,
    pub fiqnl: f64,
    /// QSHJE bound relative to max(|E|, 1).
    pub qshje_rel: f64,
    pub wronskian_drift: f64,
    /// Allowed relative gap between the last cycle average and the classical slope.
    pub limit_rel: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub units: Units,
    pub potential: Potential,
    pub grid: Grid,
    pub convention: Convention,
    pub microstates: Vec<MicrostateSpec>,
    pub routes: Vec<RouteKind>,
    pub tolerances: Tolerances,
    pub span: Span,
    pub stencil: Stencil,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe_x: Option<f64>,
    pub limit_halvings: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit_centre: Option<f64>,
    pub bounds: Bounds,
    pub out_dir: String,
    pub format: Format,
}

const SCHEMA: &[(&str, &[&str])] = &[
    ("units", &["hbar", "mass"]),
    ("potential", &["kind", "slope", "stiffness", "xs", "values"]),
    ("grid", &["x_min", "x_max", "points"]),
    ("basis", &["convention"]),
    ("microstates", &["energy", "list"]),
    ("routes", &["enabled"]),
    ("tolerances", &["quad_tol", "ode_tol", "turning_rel", "energy_step_rel"]),
    ("span", &["x_start", "x_end", "t_end", "samples"]),
    ("floyd", &["stencil"]),
    ("probe", &["x"]),
    ("limit", &["halvings", "centre"]),
    ("bounds", &["conservation_rel", "fiqnl", "qshje_rel", "wronskian_drift", "limit_rel"]),
    ("output", &["dir", "format"]),
];

pub fn parse_str(text: &str) -> Result<RunConfig, ConfigError> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| {
        let line = e.span().map(|s| line_of(text, s.start));
        ConfigError::Parse(ParseError {
            line,
            message: e.message().to_string(),
            context: line.and_then(|l| text.lines().nth(l - 1)).map(str::to_string),
        })
    })?;
    let doc = Doc { text, table };
    doc.check_keys()?;
    doc.build()
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn suggestion<'a>(word: &str, candidates: impl Iterator<Item = &'a str>) -> Option<&'a str> {
    candidates
        .map(|c| (strsim::levenshtein(word, c), c))
        .filter(|(d, c)| *d <= 2.max(c.len() / 3))
        .min_by_key(|(d, _)| *d)
        .map(|(_, c)| c)
}

struct Doc<'a> {
    text: &'a str,
    table: Table,
}

impl Doc<'_> {
    /// First line that mentions `key` as a key, either dotted or under its
    /// section header.
    fn locate(&self, section: &str, key: Option<&str>) -> Option<usize> {
        let mut current = String::new();
        for (i, raw) in self.text.lines().enumerate() {
            let line = raw.trim();
            if let Some(header) = line.strip_prefix('[').and_then(|l| l.split(']').next()) {
                current = header.trim().to_string();
                if key.is_none() && current == section {
                    return Some(i + 1);
                }
                continue;
            }
            let lhs: String = line.split('=').next().unwrap_or("").chars().filter(|c| !c.is_whitespace()).collect();
            let full = match key {
                Some(k) => format!("{section}.{k}"),
                None => section.to_string(),
            };
            let qualified = if current.is_empty() { lhs.clone() } else { format!("{current}.{lhs}") };
            if qualified == full || (key.is_none() && qualified.starts_with(&format!("{section}."))) {
                return Some(i + 1);
            }
        }
        None
    }

    fn parse_error(&self, section: &str, key: Option<&str>, message: String) -> ConfigError {
        let line = self.locate(section, key);
        ConfigError::Parse(ParseError {
            line,
            message,
            context: line.and_then(|l| self.text.lines().nth(l - 1)).map(|s| s.trim().to_string()),
        })
    }

    fn check_keys(&self) -> Result<(), ConfigError> {
        for (section, value) in &self.table {
            let Some((_, keys)) = SCHEMA.iter().find(|(s, _)| s == section) else {
                let hint = suggestion(section, SCHEMA.iter().map(|(s, _)| *s))
                    .map(|s| format!("; did you mean `{s}`?"))
                    .unwrap_or_default();
                return Err(self.parse_error(section, None, format!("unknown key `{section}`{hint}")));
            };
            let Value::Table(inner) = value else {
                return Err(self.parse_error(section, None, format!("`{section}` must be a section, e.g. `{section}.{} = ...`", keys[0])));
            };
            for key in inner.keys() {
                if !keys.contains(&key.as_str()) {
                    let hint = suggestion(key, keys.iter().copied()).map(|s| format!("; did you mean `{section}.{s}`?")).unwrap_or_default();
                    return Err(self.parse_error(section, Some(key), format!("unknown key `{section}.{key}`{hint}")));
                }
            }
        }
        Ok(())
    }

    fn get(&self, section: &str, key: &str) -> Option<&Value> {
        self.table.get(section).and_then(Value::as_table).and_then(|t| t.get(key))
    }

    fn type_error(&self, section: &str, key: &str, expected: &str) -> ConfigError {
        self.parse_error(section, Some(key), format!("`{section}.{key}` must be {expected}"))
    }

    fn float(&self, section: &str, key: &str) -> Result<Option<f64>, ConfigError> {
        self.get(section, key).map(|v| as_float(v).ok_or_else(|| self.type_error(section, key, "a number"))).transpose()
    }

    fn float_or(&self, section: &str, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.float(section, key)?.unwrap_or(default))
    }

    fn count(&self, section: &str, key: &str) -> Result<Option<u64>, ConfigError> {
        self.get(section, key)
            .map(|v| v.as_integer().and_then(|i| u64::try_from(i).ok()).ok_or_else(|| self.type_error(section, key, "a non-negative integer")))
            .transpose()
    }

    fn string(&self, section: &str, key: &str) -> Result<Option<&str>, ConfigError> {
        self.get(section, key).map(|v| v.as_str().ok_or_else(|| self.type_error(section, key, "a string"))).transpose()
    }

    fn floats(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        self.get(section, key)
            .map(|v| {
                v.as_array()
                    .and_then(|a| a.iter().map(as_float).collect::<Option<Vec<_>>>())
                    .ok_or_else(|| self.type_error(section, key, "an array of numbers"))
            })
            .transpose()
    }

    fn build(&self) -> Result<RunConfig, ConfigError> {
        let invalid = |e: qtraj_core::Error| ConfigError::Validation(e.to_string());

        let units = Units::new(self.float_or("units", "hbar", 1.0)?, self.float_or("units", "mass", 1.0)?).map_err(invalid)?;

        let potential = match self.string("potential", "kind")?.unwrap_or("free") {
            "free" => Potential::Free,
            "linear" => Potential::linear(self.require("potential", "slope")?).map_err(invalid)?,
            "harmonic" => Potential::harmonic(self.require("potential", "stiffness")?).map_err(invalid)?,
            "tabulated" => {
                let xs = self.floats("potential", "xs")?.ok_or_else(|| self.missing("potential", "xs"))?;
                let values = self.floats("potential", "values")?.ok_or_else(|| self.missing("potential", "values"))?;
                Potential::tabulated(xs, values).map_err(invalid)?
            }
            other => {
                let kinds = ["free", "linear", "harmonic", "tabulated"];
                let hint = suggestion(other, kinds.into_iter()).map(|s| format!("; did you mean `{s}`?")).unwrap_or_default();
                return Err(self.parse_error("potential", Some("kind"), format!("unknown potential kind `{other}`{hint}")));
            }
        };

        let points = self.count("grid", "points")?.unwrap_or(6001);
        let grid = Grid::new(self.float_or("grid", "x_min", 0.0)?, self.float_or("grid", "x_max", 6.0)?, points as usize).map_err(invalid)?;

        let convention = match self.string("basis", "convention")?.unwrap_or("slope_one") {
            "slope_one" => Convention::SlopeOne,
            "floyd_wave" => Convention::FloydWave,
            other => {
                return Err(self.parse_error("basis", Some("convention"), format!("unknown convention `{other}` (slope_one or floyd_wave)")))
            }
        };

        let energy = self.float_or("microstates", "energy", 0.5)?;
        let microstates = self.microstates(energy)?;

        let routes = match self.get("routes", "enabled") {
            None => RouteKind::ALL.to_vec(),
            Some(v) => {
                let names = v.as_array().ok_or_else(|| self.type_error("routes", "enabled", "an array of route names"))?;
                let mut routes = Vec::new();
                for name in names {
                    let s = name.as_str().ok_or_else(|| self.type_error("routes", "enabled", "an array of route names"))?;
                    let route = RouteKind::parse(s).ok_or_else(|| {
                        let hint = suggestion(s, RouteKind::ALL.iter().map(|r| r.name())).map(|h| format!("; did you mean `{h}`?")).unwrap_or_default();
                        self.parse_error("routes", Some("enabled"), format!("unknown route `{s}`{hint}"))
                    })?;
                    if !routes.contains(&route) {
                        routes.push(route);
                    }
                }
                routes
            }
        };

        let d = Tolerances::default();
        let tolerances = Tolerances {
            quad_tol: self.float_or("tolerances", "quad_tol", d.quad_tol)?,
            ode_tol: self.float_or("tolerances", "ode_tol", d.ode_tol)?,
            turning_rel: self.float_or("tolerances", "turning_rel", d.turning_rel)?,
            energy_step_rel: self.float_or("tolerances", "energy_step_rel", d.energy_step_rel)?,
        };
        for (name, v) in [
            ("quad_tol", tolerances.quad_tol),
            ("ode_tol", tolerances.ode_tol),
            ("turning_rel", tolerances.turning_rel),
            ("energy_step_rel", tolerances.energy_step_rel),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::Validation(format!("tolerances.{name} must be positive, got {v}")));
            }
        }

        let span = Span {
            x_start: self.float_or("span", "x_start", grid.x_min())?,
            x_end: self.float_or("span", "x_end", grid.x_max())?,
            t_end: self.float("span", "t_end")?,
            samples: self.count("span", "samples")?.unwrap_or(61) as usize,
        };

        let stencil = match self.string("floyd", "stencil")?.unwrap_or("three_point") {
            "three_point" => Stencil::ThreePoint,
            "five_point" => Stencil::FivePoint,
            other => return Err(self.parse_error("floyd", Some("stencil"), format!("unknown stencil `{other}` (three_point or five_point)"))),
        };

        let bounds = Bounds {
            conservation_rel: self.float_or("bounds", "conservation_rel", 10.0 * tolerances.ode_tol)?,
            fiqnl: self.float_or("bounds", "fiqnl", 10.0 * tolerances.ode_tol)?,
            qshje_rel: self.float_or("bounds", "qshje_rel", 1e-6)?,
            wronskian_drift: self.float_or("bounds", "wronskian_drift", 1e-6)?,
            limit_rel: self.float_or("bounds", "limit_rel", 0.01)?,
        };

        let format = match self.string("output", "format")? {
            None => Format::Csv,
            Some(s) => Format::parse(s).ok_or_else(|| self.parse_error("output", Some("format"), format!("unknown format `{s}` (csv or json)")))?,
        };

        let config = RunConfig {
            units,
            potential,
            grid,
            convention,
            microstates,
            routes,
            tolerances,
            span,
            stencil,
            probe_x: self.float("probe", "x")?,
            limit_halvings: self.count("limit", "halvings")?.unwrap_or(4) as u32,
            limit_centre: self.float("limit", "centre")?,
            bounds,
            out_dir: self.string("output", "dir")?.unwrap_or("qtraj-out").to_string(),
            format,
        };
        validate(&config)?;
        Ok(config)
    }

    fn require(&self, section: &str, key: &str) -> Result<f64, ConfigError> {
        self.float(section, key)?.ok_or_else(|| self.missing(section, key))
    }

    fn missing(&self, section: &str, key: &str) -> ConfigError {
        self.parse_error(section, None, format!("`{section}.{key}` is required here"))
    }

    fn microstates(&self, default_energy: f64) -> Result<Vec<MicrostateSpec>, ConfigError> {
        let Some(list) = self.get("microstates", "list") else {
            return Ok(Vec::new());
        };
        let entries = list.as_array().ok_or_else(|| self.type_error("microstates", "list", "an array"))?;
        let shape = "an array of [a, b], [a, b, lambda] or inline tables with a, b or mu, nu (plus optional energy, lambda)";
        let mut out = Vec::with_capacity(entries.len());
        for (i, entry) in entries.iter().enumerate() {
            let n = i + 1;
            let spec = match entry {
                Value::Array(items) => {
                    let nums: Vec<f64> = items.iter().map(as_float).collect::<Option<_>>().ok_or_else(|| self.type_error("microstates", "list", shape))?;
                    if !(2..=3).contains(&nums.len()) {
                        return Err(self.type_error("microstates", "list", shape));
                    }
                    MicrostateSpec { energy: default_energy, a: nums[0], b: nums[1], lambda: nums.get(2).copied().unwrap_or(0.0), mu: None, nu: None }
                }
                Value::Table(t) => {
                    let allowed = ["a", "b", "mu", "nu", "lambda", "energy"];
                    if let Some(bad) = t.keys().find(|k| !allowed.contains(&k.as_str())) {
                        let hint = suggestion(bad, allowed.into_iter()).map(|s| format!("; did you mean `{s}`?")).unwrap_or_default();
                        return Err(self.parse_error("microstates", Some("list"), format!("microstate {n}: unknown key `{bad}`{hint}")));
                    }
                    let num = |k: &str| -> Result<Option<f64>, ConfigError> {
                        t.get(k).map(|v| as_float(v).ok_or_else(|| self.type_error("microstates", "list", shape))).transpose()
                    };
                    let energy = num("energy")?.unwrap_or(default_energy);
                    let lambda = num("lambda")?.unwrap_or(0.0);
                    match (num("a")?, num("b")?, num("mu")?, num("nu")?) {
                        (Some(a), Some(b), None, None) => MicrostateSpec { energy, a, b, lambda, mu: None, nu: None },
                        (None, None, Some(mu), Some(nu)) => {
                            let conv = convert_mu_nu(energy, mu, nu).map_err(|_| {
                                ConfigError::Validation(format!(
                                    "microstate {n}: mu * nu = 1 (mu = {mu}, nu = {nu}) leaves the two solutions dependent; mu * nu must differ from 1"
                                ))
                            })?;
                            MicrostateSpec { energy, a: conv.microstate.a, b: conv.microstate.b, lambda, mu: Some(mu), nu: Some(nu) }
                        }
                        _ => return Err(self.parse_error("microstates", Some("list"), format!("microstate {n}: give either a and b, or mu and nu"))),
                    }
                }
                _ => return Err(self.type_error("microstates", "list", shape)),
            };
            out.push(spec);
        }
        Ok(out)
    }
}

fn as_float(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn validate(c: &RunConfig) -> Result<(), ConfigError> {
    let v = |msg: String| Err(ConfigError::Validation(msg));
    let (lo, hi) = (c.grid.x_min(), c.grid.x_max());
    for (name, x) in [("span.x_start", c.span.x_start), ("span.x_end", c.span.x_end)] {
        if !(lo..=hi).contains(&x) {
            return v(format!("{name} = {x} lies outside the grid [{lo}, {hi}]"));
        }
    }
    if c.span.x_start == c.span.x_end {
        return v("span.x_start and span.x_end coincide".into());
    }
    if let Some(t) = c.span.t_end {
        if !(t > 0.0 && t.is_finite()) {
            return v(format!("span.t_end must be positive, got {t}"));
        }
    }
    if c.span.samples < 2 {
        return v(format!("span.samples must be at least 2, got {}", c.span.samples));
    }
    if let Some(x) = c.probe_x {
        if !(lo..=hi).contains(&x) {
            return v(format!("probe.x = {x} lies outside the grid [{lo}, {hi}]"));
        }
    }
    let v_min = c.potential.min_on(lo, hi);
    for (i, m) in c.microstates.iter().enumerate() {
        let n = i + 1;
        if !(m.energy.is_finite() && m.a.is_finite() && m.b.is_finite() && m.lambda.is_finite()) {
            return v(format!("microstate {n}: constants must be finite"));
        }
        if m.a == 0.0 {
            return v(format!("microstate {n}: a = 0 makes phi2 a multiple of phi1, so the action is undefined; a must be nonzero"));
        }
        if m.energy <= v_min {
            return v(format!("microstate {n}: E = {} does not exceed min V = {v_min} on the grid, so there is no allowed region", m.energy));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_err(text: &str) -> ParseError {
        match parse_str(text) {
            Err(ConfigError::Parse(p)) => p,
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_str("potential.kind = \"free\"\nmicrostates.list = [[1, 0]]\n").unwrap();
        assert_eq!(c.units, Units::default());
        assert_eq!(c.tolerances, Tolerances::default());
        assert_eq!(c.microstates.len(), 1);
        assert_eq!(c.microstates[0].energy, 0.5);
        assert_eq!(c.routes, RouteKind::ALL.to_vec());
        assert_eq!(c.convention, Convention::SlopeOne);
    }

    #[test]
    fn dotted_and_sectioned_forms_agree() {
        let dotted = parse_str("grid.x_max = 3.0\ngrid.points = 301\n").unwrap();
        let sectioned = parse_str("[grid]\nx_max = 3.0\npoints = 301\n").unwrap();
        assert_eq!(dotted.grid, sectioned.grid);
    }

    #[test]
    fn misspelled_section_suggests_the_right_one() {
        let e = parse_err("units.hbar = 1.0\npotentail.kind = \"free\"\n");
        assert_eq!(e.line, Some(2));
        assert!(e.message.contains("did you mean `potential`"), "{}", e.message);
        assert_eq!(e.context.as_deref(), Some("potentail.kind = \"free\""));
    }

    #[test]
    fn misspelled_key_in_a_section_header() {
        let e = parse_err("[grid]\nx_min = 0\npionts = 10\n");
        assert_eq!(e.line, Some(3));
        assert!(e.message.contains("grid.points"));
    }

    #[test]
    fn zero_a_is_a_validation_error() {
        let err = parse_str("microstates.list = [[0.0, 1.0]]\n").unwrap_err();
        assert!(matches!(&err, ConfigError::Validation(m) if m.contains("a = 0")), "{err}");
    }

    #[test]
    fn mu_nu_of_one_is_rejected() {
        let err = parse_str("microstates.list = [{ mu = 2.0, nu = 0.5 }]\n").unwrap_err();
        assert!(matches!(&err, ConfigError::Validation(m) if m.contains("mu * nu")), "{err}");
    }

    #[test]
    fn mu_nu_maps_to_a_b() {
        let c = parse_str("microstates.list = [{ mu = 0.5, nu = 1.0 }]\n").unwrap();
        assert_eq!((c.microstates[0].a, c.microstates[0].b), (0.5, 1.0));
    }

    #[test]
    fn energy_below_the_potential_is_rejected() {
        let text = "potential.kind = \"harmonic\"\npotential.stiffness = 1.0\ngrid.x_min = 1.0\ngrid.x_max = 2.0\nmicrostates.energy = 0.4\nmicrostates.list = [[1, 0]]\n";
        let err = parse_str(text).unwrap_err();
        assert!(matches!(&err, ConfigError::Validation(m) if m.contains("min V")), "{err}");
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        let e = parse_err("units.hbar = 1.0\ngrid.x_min = = 2\n");
        assert_eq!(e.line, Some(2));
    }

    #[test]
    fn unknown_route_is_named() {
        let e = parse_err("routes.enabled = [\"quadrature\", \"flyod\"]\n");
        assert!(e.message.contains("did you mean `floyd`"), "{}", e.message);
    }
}
