//! Experiment configuration, dispatch, persistence and the acceptance suite.

mod acceptance;
mod config;
mod fixture;
mod record;
mod run;

pub use acceptance::{
    acceptance_suite, acceptance_suite_reporting, acceptance_suite_with, AcceptanceOptions,
    AcceptanceReport, Check, CriterionOutcome,
};
pub use config::{required_level, Experiment, ExperimentConfig, GeometryKind, Tier};
pub use fixture::{
    check_fixture, default_fixture_path, generate_fixture, reference_keys, sha256_hex,
    FixtureCheck, REFERENCE_DRAWS, REFERENCE_SEED,
};
pub use record::{rows_from_csv, rows_to_csv, Provenance, Row, RunMetadata, RunRecord, CSV_COLUMNS};
pub use run::{execute, provenance, run_experiment, PZ_THETA};
