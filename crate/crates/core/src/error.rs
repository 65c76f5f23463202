use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("variable spaces differ")]
    VariableMismatch,
    #[error("grading violated: {0}")]
    Grading(String),
    #[error("no solution: residual {residual:?}")]
    Inconsistent { residual: Vec<String> },
    #[error("singular linear part: {0}")]
    Singular(String),
    #[error("hbar window exhausted: exponent {exponent} outside [{lo}, {hi}]")]
    WindowExhausted { exponent: i32, lo: i32, hi: i32 },
    #[error("obstructed at order {order}: obstruction {class}")]
    Obstructed { order: u32, class: String },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("axiom failed: {axiom}: {witness}")]
    Axiom { axiom: String, witness: String },
    #[error("freeness failure: {0}")]
    Freeness(String),
    #[error("transversality failure: {0}")]
    Transversality(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("{stage}: {source}")]
    Stage { stage: String, source: Box<Error> },
}

impl Error {
    /// Labels an error with the pipeline stage that produced it.
    pub fn at(self, stage: &str) -> Error {
        Error::Stage { stage: stage.to_string(), source: Box::new(self) }
    }

    /// The innermost error, with stage labels removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stages_nest() {
        let e = Error::Obstructed { order: 2, class: "t1*t2*(z)".into() }.at("mc_solve");
        assert_eq!(e.to_string(), "mc_solve: obstructed at order 2: obstruction t1*t2*(z)");
        assert_eq!(e.at("run").root(), &Error::Obstructed { order: 2, class: "t1*t2*(z)".into() });
    }
}
