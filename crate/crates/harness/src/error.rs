use thiserror::Error;

/// Process exit codes of the `rvr` binary.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const OTHER: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const DIVERGENCE: i32 = 3;
    pub const ORACLE: i32 = 4;
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] rvr::error::Error),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot parse configuration: {0}")]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("oracle certificate failed: gradient norm {grad_norm:e} exceeds {limit:e}")]
    Certificate { grad_norm: f64, limit: f64 },

    #[error("gradient check failed: max relative error {max:e} exceeds {limit:e}")]
    GradientCheck { max: f64, limit: f64 },

    #[error("{0} run(s) diverged")]
    Diverged(usize),
}

impl HarnessError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.as_ref().display().to_string(), source }
    }

    pub fn exit_code(&self) -> i32 {
        use rvr::error::Error as E;
        match self {
            HarnessError::Config(_) | HarnessError::Toml(_) | HarnessError::Core(E::Config(_)) => exit::CONFIG,
            HarnessError::Core(E::Divergence { .. }) | HarnessError::Diverged(_) => exit::DIVERGENCE,
            HarnessError::Certificate { .. }
            | HarnessError::GradientCheck { .. }
            | HarnessError::Core(E::DegenerateSpectrum { .. } | E::Convergence { .. }) => exit::ORACLE,
            _ => exit::OTHER,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

#[cfg(test)]
mod tests {
    use super::*;
    use rvr::error::Error as E;

    #[test]
    fn exit_codes() {
        assert_eq!(HarnessError::Config("x".into()).exit_code(), exit::CONFIG);
        assert_eq!(HarnessError::Core(E::Config("x".into())).exit_code(), exit::CONFIG);
        assert_eq!(HarnessError::Diverged(2).exit_code(), exit::DIVERGENCE);
        assert_eq!(HarnessError::Certificate { grad_norm: 1.0, limit: 1e-8 }.exit_code(), exit::ORACLE);
        assert_eq!(HarnessError::GradientCheck { max: 1.0, limit: 1e-5 }.exit_code(), exit::ORACLE);
        assert_eq!(HarnessError::Core(E::Convergence { iterations: 1, residual: 1.0 }).exit_code(), exit::ORACLE);
        let io = HarnessError::io("missing.toml", std::io::Error::from(std::io::ErrorKind::NotFound));
        assert_eq!(io.exit_code(), exit::OTHER);
        assert!(io.to_string().contains("missing.toml"));
    }

    #[test]
    fn toml_errors_are_config_errors() {
        let e: HarnessError = toml::from_str::<toml::Table>("a = ").unwrap_err().into();
        assert_eq!(e.exit_code(), exit::CONFIG);
    }
}
