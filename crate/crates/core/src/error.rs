use thiserror::Error;

/// Failures raised while loading or validating an explicit graph.
#[derive(Debug, Error)]
pub enum GraphError {
    #[error("could not read graph file: {0}")]
    Io(#[from] std::io::Error),
    #[error("graph document does not match the schema: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("vertex `{0}` is declared more than once")]
    DuplicateVertex(String),
    #[error("edge refers to unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("self-loop at vertex `{0}`: edge weights must have zero diagonal")]
    SelfLoop(String),
    #[error("asymmetric edge weights between `{a}` and `{b}`: {forward} vs {backward}")]
    Asymmetric {
        a: String,
        b: String,
        forward: f64,
        backward: f64,
    },
    #[error("non-positive edge weight {weight} between `{a}` and `{b}`")]
    NonPositiveWeight { a: String, b: String, weight: f64 },
    #[error("non-positive node measure {mu} at vertex `{vertex}`")]
    NonPositiveMeasure { vertex: String, mu: f64 },
    #[error("metric table: {0}")]
    Metric(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("stencil incomplete: function has no value at vertex {vertex}")]
    StencilIncomplete { vertex: String },
    #[error("vertex budget of {budget} exceeded after exploring {explored} vertices")]
    BudgetExceeded { budget: usize, explored: usize },
    #[error("vertex {vertex} lies outside the generated part of the graph")]
    OutsideDomain { vertex: String },
    #[error("invalid parameters: {0}")]
    Spec(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("contract violated: {0}")]
    Contract(String),
    #[error("potential must be positive, found v = {value} at vertex {vertex}")]
    PotentialNotPositive { vertex: String, value: f64 },
    #[error(
        "subcritical exponent: sigma = {sigma} does not exceed N/(N-2) = {critical} for N = {dim}; \
         no positive supersolution exists in this regime, so the construction is refused"
    )]
    Subcritical { dim: usize, sigma: f64, critical: f64 },
    #[error("profile does not match the tree it is bound to: {0}")]
    Binding(String),
    #[error("tuning failed: {0}")]
    Tuning(String),
    #[error("bisection bracket does not separate outcomes: {0}")]
    Bracket(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
