//! Configuration parsing, run orchestration and file output.

mod config;
mod output;
mod run;

pub use config::{
    parse_config, parse_config_for, BoxBlock, Command, CylinderBlock, ModeSelect, OutputBlock, PhysicsBlock, RunConfig, SamplerBlock,
    SeriesBlock, TermBlock,
};
pub use output::{
    hex_float, parse_hex_float, profile_csv, sha256_hex, spectrum_csv, to_json_with_hex, vtk_structured_points,
    with_hex,
};
pub use run::{
    exit_code, run, Artifact, GroundOutput, LiftDiagnostics, OracleOutput, RunManifest, RunOutcome, StageTiming,
    SymmetricOutput, EXIT_INTERNAL, EXIT_OK, EXIT_REFUSAL,
};
