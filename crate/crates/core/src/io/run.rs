//! Run orchestration: one command, its artifacts, and a manifest.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::config::{Command, RunConfig};
use super::output::{
    profile_csv, sha256_hex, spectrum_csv, to_json_with_hex, vtk_structured_points, write_text,
};
use crate::axisym::{
    lift_to_3d, lifted_energy, lifted_trace_residual, lifted_weak_divergence, lifted_weak_residual, solve_sectors,
    CylinderQuadrature, ReducedFunctional, Sector, SectorTable, SymmetricReport,
};
use crate::energy::{EnergyContext, FieldEnergy};
use crate::error::{Error, Result};
use crate::nehari::{ground_state, oracle_dense, OracleReport, SolverReport};
use crate::nonlinearity::{check_conditions, Potential};
use crate::spectral::{curl_at, synthesize, BoxDomain, GridSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_REFUSAL: i32 = 2;

pub fn exit_code(err: &Error) -> i32 {
    if err.is_refusal() {
        EXIT_REFUSAL
    } else {
        EXIT_INTERNAL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub threads: usize,
    /// `lambda` after any physics translation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Effective configuration with every default filled in.
    pub config: RunConfig,
    /// The same configuration as a document accepted by `--config`.
    pub config_toml: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis_fingerprint: Option<String>,
    pub timings: Vec<StageTiming>,
    pub wall_clock_seconds: f64,
    pub artifacts: Vec<Artifact>,
    /// Sources of any fixture values baked into the run.
    pub provenance: Vec<String>,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundOutput {
    pub basis_fingerprint: String,
    pub n_divfree: usize,
    pub n_gradient: usize,
    pub report: SolverReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleOutput {
    pub basis_fingerprint: String,
    pub oracle: OracleReport,
    pub descent_c0: f64,
    pub relative_gap: f64,
}

/// Cross-checks of the unrestricted symmetric ground state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftDiagnostics {
    pub reduced_energy: f64,
    pub lifted: FieldEnergy,
    pub relative_discrepancy: f64,
    pub trace_residual: f64,
    pub weak_divergence: f64,
    pub weak_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricOutput {
    pub table: SectorTable,
    pub diagnostics: LiftDiagnostics,
    pub reports: Vec<SymmetricReport>,
}

/// Outcome of [`run`]: the manifest is always written when the output
/// directory is usable.
#[derive(Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub manifest: RunManifest,
    pub error: Option<Error>,
}

struct Recorder {
    out_dir: PathBuf,
    timings: Vec<StageTiming>,
    artifacts: Vec<Artifact>,
    fingerprint: Option<String>,
}

impl Recorder {
    fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t0 = Instant::now();
        let out = f();
        self.timings.push(StageTiming {
            stage: name.into(),
            seconds: t0.elapsed().as_secs_f64(),
        });
        out
    }

    fn emit(&mut self, file: &str, text: &str) -> Result<()> {
        write_text(&self.out_dir.join(file), text)?;
        self.artifacts.push(Artifact {
            file: file.into(),
            sha256: sha256_hex(text.as_bytes()),
        });
        Ok(())
    }
}

/// Execute the configured command and write artifacts into `out_dir`.
pub fn run(config: &RunConfig, out_dir: &Path, threads: usize) -> RunOutcome {
    let t0 = Instant::now();
    let mut rec = Recorder {
        out_dir: out_dir.to_path_buf(),
        timings: Vec::new(),
        artifacts: Vec::new(),
        fingerprint: None,
    };
    let result = std::fs::create_dir_all(out_dir)
        .map_err(Error::from)
        .and_then(|_| execute(config, &mut rec));
    let error = result.err();
    let code = error.as_ref().map_or(EXIT_OK, exit_code);
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: config.command().map_or("none", |c| c.name()).into(),
        seed: config.seed,
        threads,
        lambda: config.lambda().ok(),
        config: config.clone(),
        config_toml: config.to_toml().unwrap_or_default(),
        basis_fingerprint: rec.fingerprint.clone(),
        timings: rec.timings.clone(),
        wall_clock_seconds: t0.elapsed().as_secs_f64(),
        artifacts: rec.artifacts.clone(),
        provenance: Vec::new(),
        exit_code: code,
        error: error.as_ref().map(|e| e.to_string()),
    };
    let mut outcome = RunOutcome {
        exit_code: code,
        manifest,
        error,
    };
    let written = serde_json::to_string_pretty(&outcome.manifest)
        .map_err(Error::from)
        .and_then(|s| write_text(&out_dir.join("manifest.json"), &(s + "\n")));
    if let Err(e) = written {
        if outcome.error.is_none() {
            outcome.exit_code = EXIT_INTERNAL;
            outcome.error = Some(e);
        }
    }
    outcome
}

fn execute(config: &RunConfig, rec: &mut Recorder) -> Result<()> {
    let command = config
        .command()
        .ok_or_else(|| Error::InvalidParameter("no command given".into()))?;
    match command {
        Command::Eigs => {
            let basis = rec.stage("basis", || config.basis())?;
            rec.fingerprint = Some(basis.fingerprint());
            rec.emit("spectrum.csv", &spectrum_csv(&basis))
        }
        Command::Ground => {
            let basis = rec.stage("basis", || config.basis())?;
            rec.fingerprint = Some(basis.fingerprint());
            let ctx = rec.stage("energy setup", || {
                EnergyContext::new(basis, config.lambda()?, config.nonlinearity()?)
            })?;
            let cfg = config.solver_config();
            let report = rec.stage("ground state", || ground_state(&ctx, &cfg))?;
            let out = GroundOutput {
                basis_fingerprint: ctx.basis.fingerprint(),
                n_divfree: ctx.n_divfree(),
                n_gradient: ctx.n_gradient(),
                report,
            };
            rec.emit("report.json", &to_json_with_hex(&out)?)?;
            let vtk = rec.stage("field export", || {
                let edges = config.basis_domain()?.edges();
                let grid = GridSpec::uniform_on([0.0; 3], edges, config.output.vtk_points)?;
                let field = synthesize(&out.report.state, &ctx.basis, &grid)?;
                let curl: Vec<[f64; 3]> = grid.nodes().iter().map(|&x| curl_at(&out.report.state, &ctx.basis, x)).collect();
                vtk_structured_points(&field, Some(&curl), "ground state E")
            })?;
            rec.emit("field.vtk", &vtk)
        }
        Command::Symmetric => {
            let (domain, grid) = config.cylinder()?;
            let lambda = config.lambda()?;
            let nl = config.nonlinearity()?;
            let cfg = config.solver_config();
            let (table, reports) = rec.stage("sector solves", || solve_sectors(&domain, &grid, lambda, &nl, &cfg))?;
            let all = reports
                .iter()
                .find(|r| r.sector == Sector::All)
                .ok_or_else(|| Error::InvalidParameter("unrestricted sector missing".into()))?;
            let quad = CylinderQuadrature::default();
            let target = GridSpec::uniform_on(
                [-domain.radius, -domain.radius, 0.0],
                [2.0 * domain.radius, 2.0 * domain.radius, domain.height],
                config.output.vtk_points,
            )?;
            let (diagnostics, lifted) = rec.stage("lift diagnostics", || {
                let f = ReducedFunctional::new(domain, grid, lambda, nl.clone())?;
                let reduced = f.energy(&all.state.alpha);
                let lifted_e = lifted_energy(&all.state, &domain, &grid, lambda, &nl, &quad)?;
                let field = lift_to_3d(&all.state, &domain, &grid, &target)?;
                let d = LiftDiagnostics {
                    reduced_energy: reduced,
                    relative_discrepancy: (reduced - lifted_e.total).abs() / (1.0 + reduced.abs()),
                    lifted: lifted_e,
                    trace_residual: lifted_trace_residual(&field, &domain, config.output.trace_samples)?,
                    weak_divergence: lifted_weak_divergence(&all.state, &domain, &grid, &quad)?,
                    weak_residual: lifted_weak_residual(&all.state, &domain, &grid, lambda, &nl, &quad, 3)?,
                };
                Ok((d, field))
            })?;
            rec.emit("profile.csv", &profile_csv(&all.state, &domain, &grid))?;
            rec.emit("lifted.vtk", &vtk_structured_points(&lifted, None, "lifted azimuthal field E")?)?;
            let out = SymmetricOutput {
                table,
                diagnostics,
                reports,
            };
            rec.emit("sectors.json", &to_json_with_hex(&out)?)
        }
        Command::CheckNonlinearity => {
            let sampler = config.sampler_config();
            let report = rec.stage("condition check", || {
                if let Some(series) = config.series() {
                    check_conditions(&series as &dyn Potential, &sampler)
                } else {
                    let spec = config.nonlinearity()?;
                    check_conditions(&spec as &dyn Potential, &sampler)
                }
            })?;
            rec.emit("conditions.json", &to_json_with_hex(&report)?)
        }
        Command::Oracle => {
            let basis = rec.stage("basis", || config.basis())?;
            rec.fingerprint = Some(basis.fingerprint());
            let ctx = rec.stage("energy setup", || {
                EnergyContext::new(basis, config.lambda()?, config.nonlinearity()?)
            })?;
            let cfg = config.solver_config();
            let oracle = rec.stage("oracle", || oracle_dense(&ctx, &cfg))?;
            let descent = rec.stage("ground state", || ground_state(&ctx, &cfg))?;
            let out = OracleOutput {
                basis_fingerprint: ctx.basis.fingerprint(),
                relative_gap: (descent.c0 - oracle.c0_oracle).abs() / descent.c0.abs(),
                descent_c0: descent.c0,
                oracle,
            };
            rec.emit("oracle.json", &to_json_with_hex(&out)?)
        }
    }
}

impl RunConfig {
    fn basis_domain(&self) -> Result<BoxDomain> {
        let b = self
            .box_block
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("a [box] block is required".into()))?;
        BoxDomain::new(b.edges)
    }
}
