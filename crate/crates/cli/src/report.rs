use std::io::Write;
use std::path::Path;

use serde::Serialize;

/// How `computed` is compared with `expected`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `|computed − expected| <= tolerance·|expected|`
    Relative,
    /// `|computed − expected| <= tolerance`
    Absolute,
    /// `computed < expected`; the tolerance is unused.
    Below,
    /// `computed >= expected`; the tolerance is unused.
    AtLeast,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub anchor: &'static str,
    pub computed: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub pass: bool,
}

impl Check {
    pub fn new(
        name: impl Into<String>,
        anchor: &'static str,
        comparison: Comparison,
        computed: f64,
        expected: f64,
        tolerance: f64,
    ) -> Self {
        let pass = match comparison {
            Comparison::Relative => (computed - expected).abs() <= tolerance * expected.abs(),
            Comparison::Absolute => (computed - expected).abs() <= tolerance,
            Comparison::Below => computed < expected,
            Comparison::AtLeast => computed >= expected,
        };
        Self {
            name: name.into(),
            anchor,
            computed,
            expected,
            tolerance,
            comparison,
            pass,
        }
    }

    pub fn relative(name: impl Into<String>, anchor: &'static str, computed: f64, expected: f64, tol: f64) -> Self {
        Self::new(name, anchor, Comparison::Relative, computed, expected, tol)
    }

    pub fn absolute(name: impl Into<String>, anchor: &'static str, computed: f64, expected: f64, tol: f64) -> Self {
        Self::new(name, anchor, Comparison::Absolute, computed, expected, tol)
    }

    pub fn below(name: impl Into<String>, anchor: &'static str, computed: f64, bound: f64) -> Self {
        Self::new(name, anchor, Comparison::Below, computed, bound, 0.0)
    }

    pub fn at_least(name: impl Into<String>, anchor: &'static str, computed: f64, bound: f64) -> Self {
        Self::new(name, anchor, Comparison::AtLeast, computed, bound, 0.0)
    }

    /// A check that could not be evaluated.
    pub fn failed(name: impl Into<String>, anchor: &'static str) -> Self {
        Self::new(name, anchor, Comparison::Absolute, f64::NAN, 0.0, 0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Environment {
    pub sigma: f64,
    pub c: f64,
    pub grid: crate::config::GridConfig,
    pub quadrature: gdnls_core::QuadratureSpec,
    pub seed: u64,
    pub version: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: &'static str,
    pub environment: Environment,
    pub checks: Vec<Check>,
    /// Command-specific payload.
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub data: serde_json::Value,
}

impl Report {
    pub fn new(command: &'static str, cfg: &crate::config::RunConfig) -> Self {
        Self {
            command,
            environment: Environment {
                sigma: cfg.sigma,
                c: cfg.c,
                grid: cfg.grid.clone(),
                quadrature: cfg.quadrature,
                seed: cfg.seed,
                version: env!("CARGO_PKG_VERSION"),
            },
            checks: Vec::new(),
            data: serde_json::Value::Null,
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut f = std::fs::File::create(dir.join("report.json"))?;
        serde_json::to_writer_pretty(&mut f, self)?;
        writeln!(f)
    }
}

/// Full-precision scientific notation: 17 significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<Option<f64>>>) -> std::io::Result<()> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(|v| v.map(fmt_num).unwrap_or_default()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_num(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_num(-3.0), "-3.0000000000000000e0");
        let v = 7.101_417_574_312_345;
        assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn pass_is_a_function_of_the_numbers() {
        assert!(Check::relative("a", "x", 1.0 + 1e-7, 1.0, 1e-6).pass);
        assert!(!Check::relative("a", "x", 1.1, 1.0, 1e-6).pass);
        assert!(Check::below("b", "x", -1.0, 0.0).pass);
        assert!(!Check::failed("c", "x").pass);
    }
}
