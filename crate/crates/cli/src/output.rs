//! Run directories: every file carries the config hash and is listed in
//! `metadata.toml`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use inclusion_core::geometry::Grid;
use inclusion_core::io::{write_scalar_grid, Table};
use inclusion_core::solver::SolverOptions;
use serde::Serialize;

use crate::config::Tolerances;
use crate::CliError;

/// One pass/fail line of a verification.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: String,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, limit: format!("<= {limit:e}"), pass: value <= limit }
    }

    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, limit: format!(">= {limit}"), pass: value >= limit }
    }

    pub fn within(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Check { name: name.into(), value, limit: format!("in [{lo}, {hi}]"), pass: (lo..=hi).contains(&value) }
    }

    pub fn holds(name: &str, pass: bool) -> Self {
        Check { name: name.into(), value: if pass { 1.0 } else { 0.0 }, limit: "true".into(), pass }
    }
}

#[derive(Debug, Serialize)]
struct Metadata<'a> {
    command: &'a str,
    config: String,
    config_hash: &'a str,
    resolution: usize,
    tolerances: &'a Tolerances,
    solver: &'a SolverOptions,
    residuals: &'a BTreeMap<String, f64>,
    results: &'a BTreeMap<String, f64>,
    checks: &'a [Check],
    files: &'a [String],
}

/// Collects the artifacts of one command.
#[derive(Debug)]
pub struct RunDir {
    dir: PathBuf,
    hash: String,
    files: Vec<String>,
    pub residuals: BTreeMap<String, f64>,
    pub results: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
}

impl RunDir {
    pub fn create(dir: &Path, hash: &str) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(RunDir {
            dir: dir.to_path_buf(),
            hash: hash.to_string(),
            files: Vec::new(),
            residuals: BTreeMap::new(),
            results: BTreeMap::new(),
            checks: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn csv(&mut self, name: &str, table: &Table) -> Result<(), CliError> {
        table.write_csv(&self.dir.join(name), Some(&self.hash))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn grid(&mut self, name: &str, grid: &Grid, field: &str, values: &[f64]) -> Result<(), CliError> {
        write_scalar_grid(&self.dir.join(name), grid, field, values, Some(&self.hash))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Records a residual, keeping the largest value under one key.
    pub fn residual(&mut self, key: &str, value: f64) {
        let e = self.residuals.entry(key.to_string()).or_insert(0.0);
        *e = e.max(value);
    }

    pub fn result(&mut self, key: &str, value: f64) {
        self.results.insert(key.to_string(), value);
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    /// Writes `checks.csv` (when any check ran) and `metadata.toml`.
    pub fn finish(
        mut self,
        command: &str,
        config: &Path,
        resolution: usize,
        tolerances: &Tolerances,
        solver: &SolverOptions,
    ) -> Result<Vec<Check>, CliError> {
        if !self.checks.is_empty() {
            let mut t = Table::new(&["check", "value", "limit", "pass"]);
            for c in &self.checks {
                t.push(vec![c.name.clone(), c.value.to_string(), c.limit.clone(), c.pass.to_string()])?;
            }
            self.csv("checks.csv", &t)?;
        }
        let meta = Metadata {
            command,
            config: config.display().to_string(),
            config_hash: &self.hash,
            resolution,
            tolerances,
            solver,
            residuals: &self.residuals,
            results: &self.results,
            checks: &self.checks,
            files: &self.files,
        };
        let text = toml::to_string(&meta).map_err(|e| CliError::Config(format!("cannot serialize metadata: {e}")))?;
        fs::write(self.dir.join("metadata.toml"), text)?;
        Ok(self.checks)
    }
}
