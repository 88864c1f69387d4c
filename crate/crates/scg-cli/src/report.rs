//! Run reports and error-to-exit-code mapping.
//!
//! A report embeds a content hash of the input game so regression fixtures
//! detect silent drift, the seed when one was used, the tool version, and a
//! per-command payload. Identical inputs and seed produce identical payload
//! bytes; only `wall_time_ms` varies between runs.

use std::time::Instant;

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use scg_core::gamefile::GameFileError;
use scg_core::{EquilibriumError, ModelError, SearchError};

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    /// SHA-256 hex digest of the input game description.
    pub input: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub version: String,
    pub payload: serde_json::Value,
    pub wall_time_ms: u64,
}

impl RunReport {
    pub fn new(
        command: &str,
        input_text: &str,
        seed: Option<u64>,
        payload: serde_json::Value,
        started: Instant,
    ) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(input_text.as_bytes());
        let digest = hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect::<String>();
        RunReport {
            command: command.to_string(),
            input: digest,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            payload,
            wall_time_ms: started.elapsed().as_millis() as u64,
        }
    }

    pub fn print(&self) {
        println!(
            "{}",
            serde_json::to_string_pretty(self).expect("report serializes")
        );
    }
}

/// CLI error carrying its exit code: 1 for domain errors, 2 for usage and
/// parse errors.
#[derive(Debug)]
pub struct CliError {
    code: String,
    message: String,
    usage: bool,
    quiet: bool,
}

impl CliError {
    pub fn usage(message: String) -> Self {
        CliError {
            code: "usage".to_string(),
            message,
            usage: true,
            quiet: false,
        }
    }

    pub fn domain(code: &str, message: impl Into<String>) -> Self {
        CliError {
            code: code.to_string(),
            message: message.into(),
            usage: false,
            quiet: false,
        }
    }

    /// Domain error whose details were already printed as a report.
    pub fn quiet_domain(code: &str, message: impl Into<String>) -> Self {
        CliError {
            quiet: true,
            ..CliError::domain(code, message)
        }
    }

    pub fn is_quiet(&self) -> bool {
        self.quiet
    }

    pub fn from_gamefile(err: GameFileError) -> Self {
        let code = match &err {
            GameFileError::Parse { .. } => "parse_error",
            GameFileError::Invalid(_) => "invalid_game",
            GameFileError::Validation { .. } => "validation_error",
        };
        CliError {
            code: code.to_string(),
            message: err.to_string(),
            usage: true,
            quiet: false,
        }
    }

    pub fn from_model(err: ModelError) -> Self {
        CliError::domain("model_error", err.to_string())
    }

    pub fn from_equilibrium(err: EquilibriumError) -> Self {
        let code = match &err {
            EquilibriumError::NoRationalOutcome { .. } => "no_rational_outcome",
            EquilibriumError::ProfileSpaceTooLarge { .. } => "profile_space_too_large",
            _ => "equilibrium_error",
        };
        CliError::domain(code, err.to_string())
    }

    pub fn from_search(err: SearchError) -> Self {
        let code = match &err {
            SearchError::CandidateSpaceTooLarge { .. } => "candidate_space_too_large",
            SearchError::CandidateFailed { .. } => "candidate_failed",
            _ => "search_error",
        };
        CliError::domain(code, err.to_string())
    }

    pub fn exit_code(&self) -> u8 {
        if self.usage {
            2
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&json!({
            "error": { "code": self.code, "message": self.message }
        }))
        .expect("error serializes")
    }
}
