use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] kzm_ldt::Error),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 usage, 3 numerical failure, 4 resource limit.
    pub fn exit_code(&self) -> u8 {
        use kzm_ldt::Error as E;
        match self {
            Self::Usage(_) | Self::Io(_) => 2,
            Self::Core(E::ResourceLimit { .. }) => 4,
            Self::Core(E::Domain { .. } | E::InvalidArgument(_) | E::UnsupportedRegime { .. }) => 2,
            Self::Core(_) => 3,
        }
    }
}
