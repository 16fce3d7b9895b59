use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("duplicate API record `{0}`")]
    DuplicateApi(String),
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("invalid relation template `{0}`")]
    InvalidTemplate(String),
    #[error("schema violation: {head_kind} -[{relation}]-> {tail_kind}")]
    SchemaViolation {
        head_kind: &'static str,
        relation: &'static str,
        tail_kind: &'static str,
    },
    #[error("graph has no entities")]
    EmptyGraph,
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("empty resource value")]
    EmptyResource,
    #[error("trace has no calls")]
    EmptyTrace,
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("invalid timestamp `{0}`")]
    InvalidTimestamp(String),
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("class with family {0} has a single member")]
    InsufficientClass(u32),
    #[error("non-finite gradient")]
    NonFiniteGradient,
    #[error("no training samples in the requested period")]
    EmptyTrain,
    #[error("empty selection pool")]
    EmptyPool,
    #[error("invalid labelling budget")]
    InvalidBudget,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("distribution does not sum to one")]
    NotNormalized,
    #[error("family {0} has fewer than ten samples")]
    TooFewSamples(u32),
    #[error("graph has no replaced_by or shared-prototype edges")]
    MissingEdges,
    #[error("empty dataset")]
    EmptyDataset,
}
