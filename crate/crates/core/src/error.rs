use thiserror::Error;

/// Errors shared by the modeling, simulation, and exploration layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A scenario field is out of range or inconsistent. `field` names the
    /// offending input so callers can point at the right line of a scenario.
    #[error("invalid scenario field `{field}`: {message}")]
    InvalidSpec { field: String, message: String },

    /// No execution mode can hold the hash table in memory on this design.
    #[error("design infeasible: {reason}")]
    Infeasible { reason: String },

    /// The calibration sample set cannot support a fit.
    #[error("insufficient calibration data: {reason}")]
    InsufficientData { reason: String },

    /// Every candidate design was infeasible or below the performance floor.
    #[error("no feasible design satisfies the requested constraints")]
    NoFeasibleDesign,

    /// The simulator reached a state where pending work exists but no
    /// resource can serve it, which indicates an internal modeling bug.
    #[error("simulation stalled at t={time_s}s with {pending} unfinished work units")]
    NoProgress { time_s: f64, pending: usize },
}
