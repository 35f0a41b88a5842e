use std::path::PathBuf;

/// Errors from file handling, configuration and the numerical core.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] trmv_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Exit status reported by the command-line tool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Usage = 2,
    Data = 3,
    Numerical = 4,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Format {
            what,
            detail: detail.into(),
        }
    }

    pub fn kind(&self) -> ExitKind {
        use trmv_core::Error as C;
        match self {
            Error::Core(C::NoConvergence(_) | C::NotPositiveDefinite(_)) => ExitKind::Numerical,
            Error::Core(C::InvalidParameter(_) | C::RankExceedsDimension { .. }) => ExitKind::Usage,
            Error::Core(_) => ExitKind::Data,
            Error::Config(_) => ExitKind::Usage,
            Error::Io { .. } | Error::Format { .. } | Error::Json(_) | Error::Csv(_) => ExitKind::Data,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_kinds() {
        use trmv_core::Error as C;
        assert_eq!(Error::from(C::NoConvergence("admm")).kind(), ExitKind::Numerical);
        assert_eq!(Error::from(C::NotPositiveDefinite(1e-4)).kind(), ExitKind::Numerical);
        assert_eq!(Error::from(C::EmptyMask).kind(), ExitKind::Data);
        assert_eq!(Error::from(C::InvalidParameter("x".into())).kind(), ExitKind::Usage);
        assert_eq!(Error::format("tensor", "bad magic").kind(), ExitKind::Data);
        assert_eq!(Error::Config("x".into()).kind(), ExitKind::Usage);
        assert_eq!(ExitKind::Numerical as u8, 4);
    }
}
