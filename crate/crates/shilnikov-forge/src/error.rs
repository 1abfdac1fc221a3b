use thiserror::Error;

/// Which leg of the shooting problem failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Leg {
    Stable,
    Unstable,
}

impl std::fmt::Display for Leg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Leg::Stable => f.write_str("stable"),
            Leg::Unstable => f.write_str("unstable"),
        }
    }
}

#[derive(Debug, Error)]
pub enum ForgeError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("transform is singular: {0}")]
    SingularTransform(String),

    #[error("step size underflow at t = {t} (problem too stiff for the explicit scheme)")]
    Stiffness { t: f64 },

    #[error("state norm exceeded the bound at t = {t}")]
    BlowUp { t: f64 },

    #[error("no section crossing before t = {t}")]
    NoCrossing { t: f64 },

    #[error("equilibrium is not a saddle-focus")]
    NotSaddleFocus,

    #[error("degenerate spectrum: {0}")]
    Degenerate(String),

    #[error("expected exactly one equilibrium in the window, found {found}")]
    EquilibriumWindow { found: usize },

    #[error("{0} outside the domain")]
    Domain(String),

    #[error("shooting failed on the {leg} manifold: {source}")]
    Shooting {
        leg: Leg,
        #[source]
        source: Box<ForgeError>,
    },

    #[error("evaluation failed in column {column}: {source}")]
    Column {
        column: usize,
        #[source]
        source: Box<ForgeError>,
    },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("continuation stalled at step size {h:e} after {accepted} points")]
    Stalled { h: f64, accepted: usize },

    #[error("parameter path stopped at eps = {eps}: {reason}")]
    PathStopped { eps: f64, reason: String },

    #[error("no bracket: {0}")]
    NoBracket(String),

    #[error("point lies on the stable manifold; the local map is undefined")]
    OnStableManifold,

    #[error("rank-deficient fit")]
    RankDeficient,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, ForgeError>;
