use fluidq::{FluidError, HarnessError, SimError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<FluidError> for CliError {
    fn from(e: FluidError) -> Self {
        match e {
            FluidError::NotOverloaded(_)
            | FluidError::ExceedsMaxDeadline { .. }
            | FluidError::OutsideBand { .. }
            | FluidError::InitialMeasure(_) => CliError::Precondition(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            // a replay list that runs dry is a property of the supplied data
            SimError::Law { .. } | SimError::Config(_) => CliError::Config(e.to_string()),
            SimError::TimeOutOfRange { .. } => CliError::Precondition(e.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Plan(msg) => CliError::Config(msg),
            HarnessError::Sim(e) => e.into(),
            HarnessError::Fluid(e) => e.into(),
            HarnessError::Measure(e) => CliError::Config(e.to_string()),
        }
    }
}
