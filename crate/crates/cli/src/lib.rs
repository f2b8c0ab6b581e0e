//! Experiment harness around `mnno-core`: declarative TOML configs, the two
//! structure-preservation experiments, report rendering, and the `mnno`
//! command-line tool.
//!
//! Exit-code contract of the binary: 0 on success, 1 for validation
//! problems (bad flags, configs, or input files), 2 for failures during the
//! computation itself.

pub mod commands;
pub mod config;
pub mod error;
pub mod exp1;
pub mod exp2;
pub mod report;

pub use config::{
    load_config, DatasetSection, Direction, EmbeddingsSection, Exp1Config, Exp2Config,
    ExperimentSection, GridSection, ModelKind, ModelSection, PlantedSpec, ProbeSection,
    ReplicateMode, SplitSection, SynthCmdConfig, TrainCmdConfig,
};
pub use error::{CliError, CliResult};
pub use exp1::run_experiment1;
pub use exp2::run_experiment2;
pub use report::{
    probe_to_csv, probe_to_markdown, Exp1Report, Exp1Row, ReportFormat, RowStatus,
};
