//! Run configuration: one TOML file describing the object, the flow window,
//! initial data, outputs, and tolerance overrides.
//!
//! The object section points at either a catalog spray by name, a constant
//! quadratic coefficient table, or coefficient/fiber expressions — inline or
//! in a separate text file (one expression per line, `#` comments). Paths in
//! the file resolve relative to the config's own directory.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::catalog::{quadratic_spray, spray_by_name};
use crate::error::{Error, Result};
use crate::flow::FlowSpec;
use crate::lifts::VectorField;
use crate::spray::{Semispray, SprayFlags};
use crate::tower::Fill;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectKind {
    Field,
    Spray,
    Loop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FillKind {
    Zeros,
    Random,
}

impl Default for FillKind {
    fn default() -> Self {
        FillKind::Zeros
    }
}

fn default_depth() -> usize {
    3
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectConfig {
    pub kind: ObjectKind,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub expressions: Option<Vec<String>>,
    #[serde(default)]
    pub expr_file: Option<PathBuf>,
    #[serde(default)]
    pub gamma: Option<Vec<f64>>,
    pub base_dim: usize,
    /// Bundle level for expression-defined fields; sprays are always read
    /// at level 1.
    #[serde(default)]
    pub level: usize,
    #[serde(default = "default_depth")]
    pub depth: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    #[serde(default)]
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default)]
    pub position: Option<Vec<f64>>,
    #[serde(default)]
    pub velocity: Option<Vec<f64>>,
    #[serde(default)]
    pub state: Option<Vec<f64>>,
    #[serde(default)]
    pub fill: FillKind,
}

fn default_n_samples() -> usize {
    8
}

fn default_loop_seed() -> u64 {
    7
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopConfig {
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
    #[serde(default = "default_loop_seed")]
    pub seed: u64,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            n_samples: default_n_samples(),
            seed: default_loop_seed(),
        }
    }
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_thin() -> usize {
    1
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_thin")]
    pub thin: usize,
    #[serde(default = "default_true")]
    pub write_json: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: default_out_dir(),
            thin: default_thin(),
            write_json: true,
        }
    }
}

fn default_structural_tol() -> f64 {
    1e-12
}

fn default_conjugation_tol() -> f64 {
    1e-10
}

fn default_homogeneity_tol() -> f64 {
    1e-10
}

fn default_fd_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    #[serde(default = "default_structural_tol")]
    pub structural: f64,
    #[serde(default = "default_conjugation_tol")]
    pub conjugation: f64,
    #[serde(default = "default_homogeneity_tol")]
    pub homogeneity: f64,
    #[serde(default = "default_fd_tol")]
    pub fd: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            structural: default_structural_tol(),
            conjugation: default_conjugation_tol(),
            homogeneity: default_homogeneity_tol(),
            fd: default_fd_tol(),
        }
    }
}

fn default_run_seed() -> u64 {
    42
}

fn default_run_samples() -> usize {
    100
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_run_seed")]
    pub seed: u64,
    #[serde(default = "default_run_samples")]
    pub samples: usize,
    #[serde(default)]
    pub check_conjugation: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            seed: default_run_seed(),
            samples: default_run_samples(),
            check_conjugation: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub object: ObjectConfig,
    #[serde(default)]
    pub flow: Option<FlowConfig>,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default, rename = "loop")]
    pub loop_cfg: LoopConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub run: RunSection,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    /// Load and validate a config file; relative paths inside it become
    /// relative to the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut config = Self::parse(&text)?;
        if let Some(dir) = path.parent() {
            if let Some(file) = config.object.expr_file.take() {
                config.object.expr_file = Some(if file.is_absolute() {
                    file
                } else {
                    dir.join(file)
                });
            }
        }
        if let Some(file) = &config.object.expr_file {
            if !file.exists() {
                return Err(Error::Config(format!(
                    "expression file {} does not exist",
                    file.display()
                )));
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let o = &self.object;
        if o.base_dim == 0 {
            return Err(Error::Config("base_dim must be at least 1".into()));
        }
        let sources = [
            o.name.is_some(),
            o.expressions.is_some(),
            o.expr_file.is_some(),
            o.gamma.is_some(),
        ]
        .iter()
        .filter(|&&b| b)
        .count();
        if sources != 1 {
            return Err(Error::Config(
                "object needs exactly one of: name, expressions, expr_file, gamma".into(),
            ));
        }
        if o.kind == ObjectKind::Field && (o.name.is_some() || o.gamma.is_some()) {
            return Err(Error::Config(
                "fields are defined by expressions; name/gamma are spray-only".into(),
            ));
        }
        if self.output.thin == 0 {
            return Err(Error::Config("output thinning factor must be positive".into()));
        }
        if self.loop_cfg.n_samples < 3 {
            return Err(Error::Config("loops need at least 3 samples".into()));
        }
        if self.run.samples == 0 {
            return Err(Error::Config("run needs at least one sample".into()));
        }
        Ok(())
    }

    /// Apply command-line overrides on top of the file contents.
    pub fn apply_overrides(
        &mut self,
        depth: Option<usize>,
        seed: Option<u64>,
        out: Option<PathBuf>,
        tol: Option<f64>,
    ) {
        if let Some(d) = depth {
            self.object.depth = d;
        }
        if let Some(s) = seed {
            self.run.seed = s;
        }
        if let Some(dir) = out {
            self.output.dir = dir;
        }
        if let Some(t) = tol {
            self.tolerances.structural = t;
        }
    }

    fn expression_strings(&self) -> Result<Vec<String>> {
        if let Some(exprs) = &self.object.expressions {
            return Ok(exprs.clone());
        }
        if let Some(file) = &self.object.expr_file {
            let text = std::fs::read_to_string(file).map_err(|e| {
                Error::Config(format!("cannot read expression file {}: {e}", file.display()))
            })?;
            let lines: Vec<String> = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_string)
                .collect();
            if lines.is_empty() {
                return Err(Error::Config(format!(
                    "expression file {} holds no expressions",
                    file.display()
                )));
            }
            return Ok(lines);
        }
        Err(Error::Config("object defines no expressions".into()))
    }

    /// Build the configured semispray (kinds `spray` and `loop`).
    pub fn build_spray(&self) -> Result<Semispray> {
        if self.object.kind == ObjectKind::Field {
            return Err(Error::Config("this command needs a spray object".into()));
        }
        if let Some(name) = &self.object.name {
            return spray_by_name(name, self.object.base_dim);
        }
        if let Some(gamma) = &self.object.gamma {
            return quadratic_spray(self.object.base_dim, gamma);
        }
        let strings = self.expression_strings()?;
        let refs: Vec<&str> = strings.iter().map(String::as_str).collect();
        Semispray::parse(self.object.base_dim, &refs, SprayFlags::none())
    }

    /// Build the configured vector field. Sprays yield their induced field.
    pub fn build_field(&self) -> Result<VectorField> {
        match self.object.kind {
            ObjectKind::Field => {
                let strings = self.expression_strings()?;
                let refs: Vec<&str> = strings.iter().map(String::as_str).collect();
                VectorField::parse(self.object.level, self.object.base_dim, &refs)
            }
            _ => Ok(self.build_spray()?.as_field()),
        }
    }

    pub fn flow_spec(&self) -> Result<FlowSpec> {
        let flow = self
            .flow
            .ok_or_else(|| Error::Config("this command needs a [flow] section".into()))?;
        FlowSpec::new(flow.t0, flow.t1, flow.dt)
    }

    pub fn fill(&self) -> Fill {
        match self.initial.fill {
            FillKind::Zeros => Fill::Zeros,
            FillKind::Random => Fill::Random {
                seed: self.run.seed,
            },
        }
    }

    pub fn position(&self) -> Result<&[f64]> {
        self.initial
            .position
            .as_deref()
            .ok_or_else(|| Error::Config("missing [initial] position".into()))
    }

    pub fn velocity(&self) -> Result<&[f64]> {
        self.initial
            .velocity
            .as_deref()
            .ok_or_else(|| Error::Config("missing [initial] velocity".into()))
    }

    pub fn state(&self) -> Result<&[f64]> {
        self.initial
            .state
            .as_deref()
            .ok_or_else(|| Error::Config("missing [initial] state".into()))
    }
}
