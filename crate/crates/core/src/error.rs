use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),

    #[error("invalid probability table: {0}")]
    InvalidTable(String),

    #[error("variable sets must be disjoint; `{0}` appears in more than one")]
    OverlappingSets(String),

    #[error("table needs {cells} cells, above the cap of {cap}")]
    TableTooLarge { cells: u128, cap: usize },

    #[error("information quantity {0:e} is negative beyond round-off")]
    NegativeInformation(f64),

    #[error(
        "unique-information solver stopped after {iterations} iterations: best {best:.9} bits, gap bound {gap:e}"
    )]
    SolverNotConverged {
        best: f64,
        gap: f64,
        iterations: usize,
    },

    #[error("brute-force oracle supports at most 4 free coupling parameters, got {0}; use the solver")]
    TooManyFreeParameters(usize),

    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("expression error in `{context}`: {message}")]
    Expr { context: String, message: String },

    #[error("assignment graph is not acyclic: {0}")]
    Cycle(String),

    #[error("invalid model: {0}")]
    InvalidScm(String),

    #[error("unknown scenario `{name}`; available: {catalog}")]
    UnknownScenario { name: String, catalog: String },

    #[error("{count} latents exceed the bipartition cap of {cap}; prune latents that cannot reach the output")]
    TooManyLatents { count: usize, cap: usize },

    #[error("estimator: {0}")]
    Estimator(String),

    #[error("training diverged; last finite epoch {last_finite_epoch}")]
    Diverged { last_finite_epoch: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("role binding: {0}")]
    Binding(String),

    #[error("column `{0}` not found in input")]
    MissingColumn(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Binding(_) | Error::Config(_) => 1,
            Error::NegativeInformation(_)
            | Error::SolverNotConverged { .. }
            | Error::Diverged { .. }
            | Error::TooManyFreeParameters(_)
            | Error::Estimator(_) => 3,
            _ => 2,
        }
    }
}
