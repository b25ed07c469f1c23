use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("square root mismatch: root^2 differs from casimir/2 by {residual:e}")]
    RootMismatch { residual: f64 },
    #[error("group element is not unimodular (|det - 1| = {residual:e})")]
    NotUnimodular { residual: f64 },

    #[error("point is off its quadric (residual {residual:e})")]
    OffQuadric { residual: f64 },
    #[error("affine component is zero and no projective direction was given")]
    MissingDirection,
    #[error("projective direction is off the nilpotent cone (residual {residual:e})")]
    ConeViolation { residual: f64 },
    #[error("chart is singular at this point")]
    ChartSingular,
    #[error("no representation of the orbit form is evaluable here")]
    FormSingular,
    #[error("variation is not tangent to the quadric (residual {residual:e})")]
    NotTangent { residual: f64 },

    #[error("eigen-direction is numerically zero; select another partner")]
    DegenerateDirection,
    #[error("chart condition violated")]
    ChartConditionViolated,
    #[error("no accompanying-basis chart covers this configuration")]
    NoChartFound,
    #[error("configuration is simultaneously triangularizable")]
    RestrictionViolated,
    #[error("reference elements are linearly dependent")]
    DegenerateReference,
    #[error("point is not on the blow-up divisor")]
    NotOnDivisor,

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
    #[error("invalid reduced point: {0}")]
    InvalidReducedPoint(String),

    #[error("pole collision: |lambda_{i} - lambda_{j}| = {gap:e}")]
    PoleCollision { i: usize, j: usize, gap: f64 },
    #[error("configuration has no pole positions attached")]
    MissingLambdas,
    #[error("step size underflow at path parameter {at}")]
    StepUnderflow { at: f64 },
    #[error("conservation drift alarm: {what} drift {drift:e} exceeds {limit:e}")]
    DriftAlarm { what: &'static str, drift: f64, limit: f64 },
    #[error("invalid flow parameters: {0}")]
    InvalidParams(String),
}

pub type Result<T> = std::result::Result<T, Error>;
