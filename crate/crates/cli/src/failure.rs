use std::fmt::Display;

/// Exit status classes: bad input or a failed check (1) and estimation
/// that could not be carried out on valid input (2).
#[derive(Debug)]
pub enum Failure {
    Validation(anyhow::Error),
    Estimation(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Estimation(_) => 2,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Validation(e) | Failure::Estimation(e) => e,
        }
    }

    pub fn invalid(msg: impl Display) -> Self {
        Failure::Validation(anyhow::anyhow!("{msg}"))
    }
}

pub trait Classify<T> {
    fn invalid(self, context: &str) -> Result<T, Failure>;
    fn estimation(self, context: &str) -> Result<T, Failure>;
}

impl<T, E> Classify<T> for Result<T, E>
where
    E: std::error::Error + Send + Sync + 'static,
{
    fn invalid(self, context: &str) -> Result<T, Failure> {
        self.map_err(|e| Failure::Validation(anyhow::Error::new(e).context(context.to_string())))
    }

    fn estimation(self, context: &str) -> Result<T, Failure> {
        self.map_err(|e| Failure::Estimation(anyhow::Error::new(e).context(context.to_string())))
    }
}
