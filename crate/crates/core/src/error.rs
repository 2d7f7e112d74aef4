use alloc::string::String;

use crate::se3::Se3Error;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate scene: {0}")]
    DegenerateScene(&'static str),
    #[error("singular pneumatic network")]
    SingularNetwork,
    #[error(transparent)]
    Se3(#[from] Se3Error),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
