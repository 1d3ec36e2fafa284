use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("elapsed time must be positive")]
    DegenerateTime,

    #[error("harmonic action has a focal point at omega*t = {omega_t:.6} (need 0 < omega*t < pi)")]
    FocalPoint { omega_t: f64 },

    #[error("unsupported: {0}")]
    Unsupported(&'static str),

    #[error("action is +inf everywhere")]
    AllInfinite,

    #[error("characteristics crossed near t = {time:.6}; the classical density is multivalued")]
    CausticDetected { time: f64 },

    #[error("initial packet loses {tail_mass:.3e} of its mass outside the grid")]
    PacketClipped { tail_mass: f64 },

    #[error("potential phase per step {phase_per_step:.3} rad exceeds 0.5; reduce dt")]
    StabilityWarning { phase_per_step: f64 },

    #[error("wavefunction support splits into {regions} disconnected regions")]
    DisconnectedSupport { regions: usize },

    #[error("too few samples: expected count per bin is {expected:.2} (need at least 5)")]
    TooFewSamples { expected: f64 },

    #[error("spin components separated by only {separation_sigma:.2} sigma at the screen (need > 4)")]
    UnresolvedSpots { separation_sigma: f64 },

    #[error("no measurement records")]
    EmptyRecords,

    #[error("grid cannot resolve the wavelength at hbar = {hbar:.3e}: {wavelength:.3e} < 4 cells of {spacing:.3e}")]
    GridTooCoarse { hbar: f64, wavelength: f64, spacing: f64 },

    #[error("initial preparation depends on hbar; the semiclassical limit needs an hbar-independent rho0 and S0")]
    HbarDependentPreparation,

    #[error("local density below floor; velocity undefined")]
    VelocityUndefined,
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, alloc::format!("must be positive and finite, got {value}")))
    }
}
