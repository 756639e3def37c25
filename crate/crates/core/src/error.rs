use thiserror::Error;

use crate::state::State;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("potential hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("derivative order {0} out of range (0..=5)")]
    OrderOutOfRange(usize),

    #[error("invalid forcing symbol: {0}")]
    InvalidForcing(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("energy increased by {increase:e} at t = {time} (tolerance {tolerance:e})")]
    EnergyIncrease {
        time: f64,
        increase: f64,
        tolerance: f64,
    },

    #[error("blow-up at t = {time}: {quantity} = {value:e}")]
    BlowUp {
        time: f64,
        quantity: &'static str,
        value: f64,
        /// Last finite state before the blow-up, for a diagnostic checkpoint.
        last_state: Box<State>,
    },

    #[error("experiment failed: {0}")]
    Experiment(String),

    #[error("checkpoint format: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
