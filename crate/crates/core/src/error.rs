use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("radius must be positive and finite, got {0}")]
    BadRadius(f64),
    #[error("axis direction must have unit norm (norm = {0})")]
    AxisNotUnit(f64),
    #[error("capped cylinder endpoints coincide (length {0})")]
    DegenerateCylinder(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MergeError {
    #[error("Rvachev exponent must exceed 1, got {0}")]
    BadExponent(f64),
    #[error("a merged obstacle needs at least one member")]
    NoMembers,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("tuning parameter k must be at least 1")]
    BadK,
    #[error("point lies inside obstacle {index} (beta = {value})")]
    InsideObstacle { index: usize, value: f64 },
    #[error("the base potential is singular on the free-space boundary")]
    BoundarySingularity,
    #[error("gradient norm {norm} exceeds the critical-point tolerance {tol}")]
    NotCritical { norm: f64, tol: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("target lies inside or on obstacle {0}")]
    TargetNotFree(usize),
    #[error("target lies inside or on the obstacle")]
    TargetInsideObstacle,
    #[error("shell thickness must be positive, got {0}")]
    BadThickness(f64),
    #[error("shell sampling found no points near obstacle {0}")]
    EmptyShell(usize),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("robot radius {radius} must be non-negative and smaller than the workspace radius {outer}")]
    BadRadius { radius: f64, outer: f64 },
    #[error("joint angle {0} rad is outside (0, pi]")]
    BadAngle(f64),
    #[error("cylinders {0} and {1} are closer than twice the robot radius and do not share a ball joint")]
    CloseCylinders(usize, usize),
    #[error("obstacles {0}, {1} and {2} form a cluster closer than twice the robot radius")]
    Cluster(usize, usize, usize),
    #[error("ball joint {0} is malformed: {1}")]
    BadJoint(usize, &'static str),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("start point is not in free space (obstacle {index}, beta = {value})")]
    StartNotFree { index: usize, value: f64 },
    #[error("invalid simulation settings: {0}")]
    BadConfig(&'static str),
    #[error(transparent)]
    Field(#[from] FieldError),
}
