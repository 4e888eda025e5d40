//! Run specs and their execution: build a family or kernel, do one command,
//! write its output files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::diagnostics::{
    check_covariance_reconstruction, check_discrete_parseval, check_eigenvalue_asymptotics,
    check_nonconvex_failure, check_nystrom_nonnegative, check_ou_h_norm, check_sup_norm_decay,
    eigen_table, DiagnosticsConfig, DiagnosticsReport,
};
use crate::error::{Error, Result};
use crate::expansions::{ExpansionFamily, FamilySpec};
use crate::grid::GridSpec;
use crate::kernels::Kernel;
use crate::montecarlo::{estimate_remainder, fit_rate, sample_paths, SamplerConfig};
use crate::specialfn::QuadratureConfig;
use crate::VERSION;

pub const DEFAULT_OUTPUT: &str = "gaussframe-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Expand,
    Sample,
    Remainder,
    Verify,
    Eigs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    CovarianceReconstruction,
    DiscreteParseval,
    SupNormDecay,
    OuHNorm,
    NystromNonnegative,
    EigenvalueAsymptotics,
    NonconvexFailure,
}

/// A run as written by the user; omitted fields take defaults during resolution.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub command: Command,
    #[serde(default)]
    pub family: Option<FamilySpec>,
    #[serde(default)]
    pub kernel: Option<Kernel>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub n_terms: Option<usize>,
    #[serde(default)]
    pub truncations: Option<Vec<usize>>,
    #[serde(default)]
    pub n_replicates: Option<usize>,
    #[serde(default)]
    pub log_power: Option<f64>,
    #[serde(default)]
    pub checks: Option<Vec<CheckName>>,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// The run with every default filled in; this is what outputs echo.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedSpec {
    pub command: Command,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySpec>,
    pub kernel: Kernel,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_terms: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncations: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_replicates: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_power: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<CheckName>>,
    pub quadrature: QuadratureConfig,
    pub diagnostics: DiagnosticsConfig,
}

/// Finished run without an error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Success,
    ChecksFailed,
}

/// 0 success, 1 failed check, 2 bad input, 3 numerical failure.
pub fn exit_code(result: &Result<Outcome>) -> u8 {
    match result {
        Ok(Outcome::Success) => 0,
        Ok(Outcome::ChecksFailed) => 1,
        Err(e) if e.is_numerical() => 3,
        Err(_) => 2,
    }
}

impl RunSpec {
    pub fn from_json(text: &str) -> Result<RunSpec> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("run spec: {e}")))
    }

    pub fn from_value(value: Value) -> Result<RunSpec> {
        serde_json::from_value(value).map_err(|e| Error::Parse(format!("run spec: {e}")))
    }
}

fn default_truncations(size: usize) -> Vec<usize> {
    let cap = (size / 4).min(1024);
    let mut out: Vec<usize> = std::iter::successors(Some(32usize), |n| Some(n * 2))
        .take_while(|n| *n <= cap)
        .collect();
    if out.is_empty() {
        out.push((size / 2).max(1));
    }
    out
}

fn default_grid(kernel: &Kernel) -> GridSpec {
    let dim = kernel.dim();
    let horizon = match kernel {
        Kernel::Tensor { axes } => axes.iter().map(Kernel::horizon).fold(f64::INFINITY, f64::min),
        k => k.horizon(),
    };
    GridSpec { horizon, n_points: if dim == 1 { 65 } else { 17 }, dim }
}

fn default_checks(family: Option<&ExpansionFamily>, kernel: &Kernel, cfg: &DiagnosticsConfig) -> Vec<CheckName> {
    let mut checks = Vec::new();
    if let Some(f) = family {
        checks.push(CheckName::CovarianceReconstruction);
        checks.push(CheckName::DiscreteParseval);
        if f.rate_params().is_some() && f.len() >= cfg.decay_min_terms.max(4) {
            checks.push(CheckName::SupNormDecay);
        }
        if matches!(f.spec(), FamilySpec::TrigFrameFou { rho, .. } if *rho == 1.0) {
            checks.push(CheckName::OuHNorm);
        }
    }
    match kernel {
        Kernel::FractionalOu { rho, .. } if *rho > 1.0 => checks.push(CheckName::NonconvexFailure),
        Kernel::FractionalOu { .. } => {
            checks.push(CheckName::NystromNonnegative);
            checks.push(CheckName::EigenvalueAsymptotics);
        }
        k if k.dim() == 1 => checks.push(CheckName::NystromNonnegative),
        _ => {}
    }
    checks
}

/// Builds the family (if any) and fills every default.
pub fn resolve(spec: &RunSpec) -> Result<(ResolvedSpec, Option<ExpansionFamily>)> {
    spec.quadrature.validate()?;
    let family = match (&spec.family, &spec.kernel) {
        (Some(_), Some(_)) => return Err(Error::invalid("give either a family or a kernel, not both")),
        (Some(f), None) => Some(f.build(&spec.quadrature)?),
        (None, _) => None,
    };
    let kernel = match (&family, &spec.kernel) {
        (Some(f), _) => f.kernel().clone(),
        (None, Some(k)) => k.clone().validated()?,
        (None, None) => return Err(Error::invalid("run spec needs a family or a kernel")),
    };
    let needs_family = matches!(spec.command, Command::Expand | Command::Sample | Command::Remainder);
    if needs_family && family.is_none() {
        return Err(Error::invalid(format!("{:?} needs a family", spec.command).to_lowercase()));
    }
    let size = family.as_ref().map_or(0, ExpansionFamily::len);
    let mut out = ResolvedSpec {
        command: spec.command,
        family: family.as_ref().map(|f| f.spec().clone()),
        kernel: kernel.clone(),
        seed: spec.seed,
        grid: None,
        n_terms: None,
        truncations: None,
        n_replicates: None,
        log_power: None,
        checks: None,
        quadrature: spec.quadrature,
        diagnostics: spec.diagnostics.clone(),
    };
    let log_power = || {
        spec.log_power
            .unwrap_or_else(|| family.as_ref().and_then(|f| f.rate_params()).map_or(0.0, |r| r.gamma))
    };
    match spec.command {
        Command::Expand => {}
        Command::Sample => {
            out.grid = Some(spec.grid.unwrap_or_else(|| default_grid(&kernel)));
            out.n_terms = Some(spec.n_terms.unwrap_or(size));
            out.n_replicates = Some(spec.n_replicates.unwrap_or(8));
        }
        Command::Remainder => {
            out.grid = Some(spec.grid.unwrap_or_else(|| default_grid(&kernel)));
            out.truncations = Some(spec.truncations.clone().unwrap_or_else(|| default_truncations(size)));
            out.n_replicates = Some(spec.n_replicates.unwrap_or(2000));
            out.log_power = Some(log_power());
        }
        Command::Verify => {
            let checks = spec
                .checks
                .clone()
                .unwrap_or_else(|| default_checks(family.as_ref(), &kernel, &spec.diagnostics));
            if checks.is_empty() {
                return Err(Error::invalid("no checks to run"));
            }
            if family.is_some() {
                out.grid = Some(spec.grid.unwrap_or_else(|| default_grid(&kernel)));
                out.n_terms = Some(spec.n_terms.unwrap_or(size));
            }
            out.checks = Some(checks);
        }
        Command::Eigs => {}
    }
    Ok((out, family))
}

fn header(spec_json: &str) -> String {
    format!("# gaussframe {VERSION}\n# spec {spec_json}\n")
}

fn num(x: f64) -> String {
    let mut buf = ryu::Buffer::new();
    buf.format(x).to_string()
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn json_document(spec: &Value, key: &str, body: Value) -> String {
    let mut doc = serde_json::Map::new();
    doc.insert("version".into(), Value::String(VERSION.into()));
    doc.insert("spec".into(), spec.clone());
    doc.insert(key.into(), body);
    let mut text = serde_json::to_string_pretty(&Value::Object(doc)).expect("document serializes");
    text.push('\n');
    text
}

fn run_checks(
    spec: &ResolvedSpec,
    family: Option<&ExpansionFamily>,
) -> Result<DiagnosticsReport> {
    let cfg = &spec.diagnostics;
    let needs = |name: CheckName| -> Result<&ExpansionFamily> {
        family.ok_or_else(|| Error::invalid(format!("check {name:?} needs a family")))
    };
    let mut checks = Vec::new();
    for &name in spec.checks.as_deref().unwrap_or(&[]) {
        match name {
            CheckName::CovarianceReconstruction => {
                let f = needs(name)?;
                let grid = spec.grid.expect("resolved").build()?;
                let n = spec.n_terms.expect("resolved");
                checks.push(check_covariance_reconstruction(f, &grid, n, cfg.reconstruction_tol)?);
            }
            CheckName::DiscreteParseval => {
                let f = needs(name)?;
                let grid = spec.grid.expect("resolved").build()?;
                let n = spec.n_terms.expect("resolved");
                checks.push(check_discrete_parseval(
                    f,
                    &grid,
                    n,
                    cfg.parseval_tol,
                    spec.seed,
                    cfg.parseval_vectors,
                )?);
            }
            CheckName::SupNormDecay => {
                checks.push(check_sup_norm_decay(needs(name)?, cfg.decay_slack, cfg.decay_min_terms)?);
            }
            CheckName::OuHNorm => {
                checks.push(check_ou_h_norm(needs(name)?, cfg.hnorm_j_max, cfg.hnorm_tol, &spec.quadrature)?);
            }
            CheckName::NystromNonnegative => {
                checks.push(check_nystrom_nonnegative(&spec.kernel, cfg.nystrom_points, cfg.eigen_floor)?);
            }
            CheckName::EigenvalueAsymptotics => checks.push(check_eigenvalue_asymptotics(
                &spec.kernel,
                cfg.nystrom_points,
                cfg.eigen_j_min,
                cfg.eigen_j_max,
                cfg.eigen_tol,
            )?),
            CheckName::NonconvexFailure => {
                let Kernel::FractionalOu { rho, alpha, horizon } = spec.kernel else {
                    return Err(Error::invalid("nonconvex check needs a fractional_ou kernel"));
                };
                checks.extend(check_nonconvex_failure(
                    rho,
                    alpha,
                    horizon,
                    cfg.nonconvex_j_max,
                    cfg.negative_threshold,
                    &spec.quadrature,
                )?);
            }
        }
    }
    Ok(DiagnosticsReport::new(checks))
}

/// Executes `spec`, writing its outputs under `out_dir`.
pub fn run(spec: &RunSpec, out_dir: &Path) -> Result<Outcome> {
    let (resolved, family) = resolve(spec)?;
    let spec_value = serde_json::to_value(&resolved)?;
    let spec_line = serde_json::to_string(&spec_value)?;
    fs::create_dir_all(out_dir)?;
    let family_ref = family.as_ref();

    match resolved.command {
        Command::Expand => {
            let f = family_ref.expect("resolved");
            write_file(out_dir, "family.json", &json_document(&spec_value, "family", f.to_json_value()))?;
        }
        Command::Sample => {
            let f = family_ref.expect("resolved");
            let grid = resolved.grid.expect("resolved").build()?;
            let n_replicates = resolved.n_replicates.expect("resolved");
            let cfg = SamplerConfig::new(resolved.seed, n_replicates, grid.clone())?;
            let paths = sample_paths(f, &cfg, resolved.n_terms.expect("resolved"))?;
            let mut csv = header(&spec_line);
            let coords: Vec<String> = if grid.dim() == 1 {
                vec!["t".into()]
            } else {
                (1..=grid.dim()).map(|i| format!("t{i}")).collect()
            };
            csv.push_str(&coords.join(","));
            for r in 0..n_replicates {
                write!(csv, ",r{r}").expect("string write");
            }
            csv.push('\n');
            for p in 0..grid.len() {
                let point = grid.point(p);
                let cells: Vec<String> = point
                    .iter()
                    .copied()
                    .chain((0..n_replicates).map(|r| paths[(r, p)]))
                    .map(num)
                    .collect();
                csv.push_str(&cells.join(","));
                csv.push('\n');
            }
            write_file(out_dir, "paths.csv", &csv)?;
        }
        Command::Remainder => {
            let f = family_ref.expect("resolved");
            let grid = resolved.grid.expect("resolved").build()?;
            let cfg = SamplerConfig::new(resolved.seed, resolved.n_replicates.expect("resolved"), grid)?;
            let mut curve = estimate_remainder(f, &cfg, resolved.truncations.as_deref().expect("resolved"))?;
            if curve.truncations.len() >= 4 {
                curve.fit = Some(fit_rate(&curve, resolved.log_power.expect("resolved"))?);
            }
            let mut csv = header(&spec_line);
            csv.push_str("n,estimate,stderr\n");
            for i in 0..curve.truncations.len() {
                writeln!(csv, "{},{},{}", curve.truncations[i], num(curve.estimates[i]), num(curve.stderrs[i]))
                    .expect("string write");
            }
            write_file(out_dir, "remainder.csv", &csv)?;
            write_file(out_dir, "remainder.json", &json_document(&spec_value, "curve", serde_json::to_value(&curve)?))?;
        }
        Command::Verify => {
            let report = run_checks(&resolved, family_ref)?;
            let body = serde_json::to_value(&report)?;
            write_file(out_dir, "report.json", &json_document(&spec_value, "report", body))?;
            if !report.passed() {
                return Ok(Outcome::ChecksFailed);
            }
        }
        Command::Eigs => {
            let cfg = &resolved.diagnostics;
            let rows = eigen_table(&resolved.kernel, cfg.nystrom_points, cfg.eigen_j_max)?;
            let mut csv = header(&spec_line);
            csv.push_str("j,lambda,asymptote,ratio\n");
            for r in rows {
                writeln!(csv, "{},{},{},{}", r.j, num(r.lambda), num(r.asymptote), num(r.ratio))
                    .expect("string write");
            }
            write_file(out_dir, "eigs.csv", &csv)?;
        }
    }
    Ok(Outcome::Success)
}

/// Parses a spec document and executes it; `out_dir` overrides the spec's `output`.
pub fn run_json(text: &str, out_dir: Option<&Path>) -> Result<Outcome> {
    let spec = RunSpec::from_json(text)?;
    let dir = out_dir
        .map(Path::to_path_buf)
        .or_else(|| spec.output.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT));
    run(&spec, &dir)
}

/// Applies command-line overrides to a spec document.
pub fn apply_overrides(mut doc: Value, overrides: &[(&str, Value)]) -> Result<Value> {
    let map = doc
        .as_object_mut()
        .ok_or_else(|| Error::Parse("run spec must be a JSON object".into()))?;
    for (key, value) in overrides {
        map.insert((*key).to_string(), value.clone());
    }
    Ok(doc)
}

/// Empty spec object used when no document is given.
pub fn empty_spec() -> Value {
    json!({})
}
