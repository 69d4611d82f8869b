//! Run configuration: a TOML document with flat sections.
//!
//! ```toml
//! command = "ground"        # eigs | ground | symmetric | check-nonlinearity | oracle
//! seed = 7
//! lambda = -1.0             # or a [physics] block
//!
//! [box]                     # or [cylinder]
//! edges = [3.141592653589793, 3.141592653589793, 3.141592653589793]
//! cutoff = 6.5
//!
//! [[term]]                  # F = sum Gamma(x) |M u|^p / p
//! p = 4.0
//! gamma = { kind = "constant", value = 1.0 }
//!
//! [solver]
//! restarts = 4
//! ```

use serde::{Deserialize, Serialize};
use std::ops::Range;
use toml::Spanned;

use crate::axisym::{CylinderDomain, MeridianGrid};
use crate::error::{Error, Result};
use crate::nehari::SolverConfig;
use crate::nonlinearity::{kerr_from_physics, CoefficientField, NonlinearitySpec, PowerTerm, RadialSeries, SamplerConfig};
use crate::spectral::{enumerate_modes, BoxDomain, ModeBasis, ModeIndex, ModeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Eigs,
    Ground,
    Symmetric,
    CheckNonlinearity,
    Oracle,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Eigs => "eigs",
            Command::Ground => "ground",
            Command::Symmetric => "symmetric",
            Command::CheckNonlinearity => "check-nonlinearity",
            Command::Oracle => "oracle",
        }
    }

    fn needs_box(&self) -> bool {
        matches!(self, Command::Eigs | Command::Ground | Command::Oracle)
    }

    fn needs_lambda(&self) -> bool {
        matches!(self, Command::Ground | Command::Symmetric | Command::Oracle)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSelect {
    pub k: [u32; 3],
    #[serde(default = "divfree")]
    pub kind: ModeKind,
    #[serde(default)]
    pub polarization: u8,
}

fn divfree() -> ModeKind {
    ModeKind::DivFree
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxBlock {
    pub edges: [f64; 3],
    pub cutoff: f64,
    /// Keep only these modes of the truncated basis.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub select: Vec<ModeSelect>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderBlock {
    pub radius: f64,
    pub height: f64,
    pub nr: usize,
    pub nz: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsBlock {
    pub epsilon: f64,
    pub mu: f64,
    pub omega: f64,
    #[serde(default = "unit_coefficient")]
    pub alpha: CoefficientField,
}

fn unit_coefficient() -> CoefficientField {
    CoefficientField::constant(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermBlock {
    pub p: Spanned<f64>,
    #[serde(default = "unit_coefficient")]
    pub gamma: CoefficientField,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<[[f64; 3]; 3]>,
}

/// `F(u) = sum c |u|^e` for the condition checker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesBlock {
    /// `[exponent, coefficient]` pairs.
    pub terms: Vec<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerBlock {
    pub n_samples: usize,
    pub radius: f64,
    pub force_sampling: bool,
}

impl Default for SamplerBlock {
    fn default() -> Self {
        SamplerBlock {
            n_samples: 4000,
            radius: 10.0,
            force_sampling: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    /// Samples per axis of exported VTK fields.
    pub vtk_points: [usize; 3],
    /// Boundary samples per surface for the lifted-field trace check.
    pub trace_samples: usize,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            vtk_points: [24, 24, 24],
            trace_samples: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Spanned<Command>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Spanned<f64>>,
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    pub box_block: Option<BoxBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cylinder: Option<CylinderBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physics: Option<PhysicsBlock>,
    #[serde(default, rename = "term", skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<TermBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<SeriesBlock>,
    #[serde(default)]
    pub sampler: SamplerBlock,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputBlock,
}

/// 1-based line and column of a byte offset.
fn position(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(offset, |nl| offset - nl - 1) + 1;
    (line, column)
}

fn config_error(text: &str, span: Option<Range<usize>>, message: impl Into<String>, refusal: bool) -> Error {
    let (line, column) = span.map_or((1, 1), |s| position(text, s.start));
    Error::Config {
        line,
        column,
        message: message.into(),
        refusal,
    }
}

impl RunConfig {
    pub fn command(&self) -> Option<Command> {
        self.command.as_ref().map(|c| *c.get_ref())
    }

    /// Effective lambda: the `lambda` key or the Kerr translation of `[physics]`.
    pub fn lambda(&self) -> Result<f64> {
        if let Some(p) = &self.physics {
            return Ok(kerr_from_physics(p.epsilon, p.mu, p.omega, &p.alpha)?.lambda);
        }
        Ok(self.lambda.as_ref().map_or(0.0, |l| *l.get_ref()))
    }

    pub fn nonlinearity(&self) -> Result<NonlinearitySpec> {
        if let Some(p) = &self.physics {
            return Ok(kerr_from_physics(p.epsilon, p.mu, p.omega, &p.alpha)?.spec);
        }
        if self.terms.is_empty() {
            return Ok(NonlinearitySpec::zero());
        }
        NonlinearitySpec::new(
            self.terms
                .iter()
                .map(|t| PowerTerm {
                    gamma: t.gamma.clone(),
                    matrix: t.matrix.unwrap_or([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]),
                    p: *t.p.get_ref(),
                })
                .collect(),
        )
    }

    pub fn series(&self) -> Option<RadialSeries> {
        self.series.as_ref().map(|s| RadialSeries {
            terms: s.terms.clone(),
            declared_p: s.declared_p,
        })
    }

    pub fn basis(&self) -> Result<ModeBasis> {
        let b = self
            .box_block
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("a [box] block is required".into()))?;
        let full = enumerate_modes(&BoxDomain::new(b.edges)?, b.cutoff)?;
        if b.select.is_empty() {
            return Ok(full);
        }
        let picks = b
            .select
            .iter()
            .map(|s| ModeIndex::new(s.k, s.kind, s.polarization))
            .collect::<Result<Vec<_>>>()?;
        full.select(&picks)
    }

    pub fn cylinder(&self) -> Result<(CylinderDomain, MeridianGrid)> {
        let c = self
            .cylinder
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("a [cylinder] block is required".into()))?;
        Ok((CylinderDomain::new(c.radius, c.height)?, MeridianGrid::new(c.nr, c.nz)?))
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            seed: self.seed,
            ..self.solver.clone()
        }
    }

    pub fn sampler_config(&self) -> SamplerConfig {
        let mut cfg = SamplerConfig {
            n_samples: self.sampler.n_samples,
            radius: self.sampler.radius,
            seed: self.seed,
            region: [std::f64::consts::PI; 3],
            force_sampling: self.sampler.force_sampling,
        };
        if let Some(b) = &self.box_block {
            cfg.region = b.edges;
        }
        cfg
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidParameter(format!("config serialization failed: {e}")))
    }
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_for(text, None)
}

/// Parse with the command given outside the document; a `command` key, if
/// present, must agree with it.
pub fn parse_config_for(text: &str, command: Option<Command>) -> Result<RunConfig> {
    let mut cfg: RunConfig = toml::from_str(text).map_err(|e| config_error(text, e.span(), e.message(), false))?;
    if let Some(c) = command {
        match &cfg.command {
            Some(given) if *given.get_ref() != c => {
                return Err(config_error(
                    text,
                    Some(given.span()),
                    format!("document says `{}` but `{}` was requested", given.get_ref().name(), c.name()),
                    false,
                ));
            }
            Some(_) => {}
            None => cfg.command = Some(Spanned::new(0..0, c)),
        }
    }
    validate(&cfg, text)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig, text: &str) -> Result<()> {
    let err = |span: Option<Range<usize>>, msg: String| config_error(text, span, msg, false);
    let command = cfg
        .command
        .as_ref()
        .ok_or_else(|| err(None, "missing mandatory key `command`".into()))?;
    let cmd = *command.get_ref();
    let cmd_span = Some(command.span());
    match (&cfg.box_block, &cfg.cylinder) {
        (Some(_), Some(_)) => return Err(err(cmd_span, "give exactly one domain block, [box] or [cylinder]".into())),
        (None, _) if cmd.needs_box() => {
            return Err(err(cmd_span, format!("command `{}` needs a [box] block", cmd.name())))
        }
        (_, None) if cmd == Command::Symmetric => {
            return Err(err(cmd_span, "command `symmetric` needs a [cylinder] block".into()))
        }
        _ => {}
    }
    if cfg.lambda.is_some() && cfg.physics.is_some() {
        let span = cfg.lambda.as_ref().map(|l| l.span());
        return Err(err(span, "give either `lambda` or a [physics] block, not both".into()));
    }
    if cfg.physics.is_some() && !cfg.terms.is_empty() {
        let span = Some(cfg.terms[0].p.span());
        return Err(err(span, "[physics] fixes the Kerr nonlinearity; remove the [[term]] blocks".into()));
    }
    if cmd.needs_lambda() && cfg.lambda.is_none() && cfg.physics.is_none() {
        return Err(err(cmd_span, format!("command `{}` needs `lambda` or a [physics] block", cmd.name())));
    }
    if let Some(l) = &cfg.lambda {
        let v = *l.get_ref();
        if !v.is_finite() {
            return Err(err(Some(l.span()), "lambda must be finite".into()));
        }
        if v > 0.0 && matches!(cmd, Command::Ground | Command::Oracle) {
            return Err(config_error(
                text,
                Some(l.span()),
                format!("lambda = {v} > 0: the ground-state theorem assumes lambda <= 0"),
                true,
            ));
        }
    }
    for t in &cfg.terms {
        let p = *t.p.get_ref();
        if !(p > 2.0 && p < 6.0) {
            return Err(config_error(
                text,
                Some(t.p.span()),
                format!("exponent p = {p} outside (2, 6): subcritical superquadratic growth is required"),
                true,
            ));
        }
    }
    match cmd {
        Command::Ground | Command::Symmetric | Command::Oracle if cfg.terms.is_empty() && cfg.physics.is_none() => {
            return Err(err(cmd_span, format!("command `{}` needs [[term]] blocks or [physics]", cmd.name())));
        }
        Command::CheckNonlinearity => {
            let sources = usize::from(!cfg.terms.is_empty()) + usize::from(cfg.series.is_some()) + usize::from(cfg.physics.is_some());
            if sources != 1 {
                return Err(err(
                    cmd_span,
                    "check-nonlinearity needs exactly one of [[term]], [series] or [physics]".into(),
                ));
            }
        }
        _ => {}
    }
    if cfg.output.vtk_points.iter().any(|&n| n == 0) {
        return Err(err(None, "output.vtk_points must be positive".into()));
    }
    // semantic checks of the blocks, reported against the command key
    let semantic = |r: Result<()>| r.map_err(|e| err(cmd_span.clone(), e.to_string()));
    semantic(cfg.solver.validate())?;
    if cfg.box_block.is_some() {
        semantic(cfg.basis().map(|_| ()))?;
    }
    if cfg.cylinder.is_some() {
        semantic(cfg.cylinder().map(|_| ()))?;
    }
    semantic(cfg.lambda().map(|_| ()))?;
    let nl = cfg.nonlinearity().map_err(|e| err(cmd_span.clone(), e.to_string()))?;
    if !nl.is_zero() {
        semantic(nl.validate())?;
    }
    if let Some(s) = cfg.series() {
        semantic(s.validate())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
command = "ground"
lambda = 0.0

[box]
edges = [3.141592653589793, 3.141592653589793, 3.141592653589793]
cutoff = 3.5

[[term]]
p = 4.0
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.command(), Some(Command::Ground));
        assert_eq!(c.solver, SolverConfig::default());
        assert_eq!(c.seed, 0);
        assert_eq!(c.nonlinearity().unwrap(), NonlinearitySpec::power(1.0, 4.0).unwrap());
        let echo = c.to_toml().unwrap();
        assert!(echo.contains("tol_outer"));
    }

    #[test]
    fn round_trip() {
        let text = format!(
            "{MINIMAL}\n[[term]]\np = 3.0\nmatrix = [[2.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]\ngamma = {{ kind = \"step\", axis = 2, threshold = 1.5, below = 1.0, above = 2.0 }}\n"
        );
        let c = parse_config(&text).unwrap();
        let again = parse_config(&c.to_toml().unwrap()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn positive_lambda_with_ground_is_a_refusal_at_the_key() {
        let text = MINIMAL.replace("lambda = 0.0", "lambda = 0.5");
        match parse_config(&text) {
            Err(e @ Error::Config { line, column, refusal, .. }) => {
                assert!(refusal && e.is_refusal());
                assert_eq!((line, column), (3, 10));
                assert!(e.to_string().contains("lambda <= 0"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn exponent_outside_range_is_refused() {
        for p in ["2.0", "6.0", "7.5"] {
            let text = MINIMAL.replace("p = 4.0", &format!("p = {p}"));
            let e = parse_config(&text).unwrap_err();
            assert!(e.is_refusal(), "{e}");
            assert!(matches!(e, Error::Config { line: 10, .. }));
        }
    }

    #[test]
    fn unknown_key_is_a_located_error() {
        let text = MINIMAL.replace("cutoff = 3.5", "cutoff = 3.5\ncutof = 4.0");
        match parse_config(&text) {
            Err(Error::Config { line, refusal, message, .. }) => {
                assert_eq!(line, 8);
                assert!(!refusal);
                assert!(message.contains("cutof"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_command_and_domain_are_errors() {
        assert!(matches!(
            parse_config(&MINIMAL.replace("command = \"ground\"", "")),
            Err(Error::Config { refusal: false, .. })
        ));
        let no_box = "command = \"ground\"\nlambda = 0.0\n[[term]]\np = 4.0\n";
        assert!(matches!(parse_config(no_box), Err(Error::Config { refusal: false, .. })));
    }

    #[test]
    fn physics_block_routes_through_kerr() {
        let text = r#"
command = "ground"
[box]
edges = [3.141592653589793, 3.141592653589793, 3.141592653589793]
cutoff = 3.5
[physics]
epsilon = 1.0
mu = 1.0
omega = 1.0
"#;
        let c = parse_config(text).unwrap();
        assert_eq!(c.lambda().unwrap(), -1.0);
        assert_eq!(c.nonlinearity().unwrap(), NonlinearitySpec::power(1.0, 4.0).unwrap());
    }

    #[test]
    fn command_from_outside_fills_or_must_agree() {
        let bare = MINIMAL.replace("command = \"ground\"", "");
        let c = parse_config_for(&bare, Some(Command::Ground)).unwrap();
        assert_eq!(c.command(), Some(Command::Ground));
        assert!(matches!(
            parse_config_for(MINIMAL, Some(Command::Eigs)),
            Err(Error::Config { line: 2, .. })
        ));
    }

    #[test]
    fn positions_are_one_based() {
        assert_eq!(position("ab\ncd", 0), (1, 1));
        assert_eq!(position("ab\ncd", 4), (2, 2));
    }
}
