use thiserror::Error;

/// Failure modes shared by every numerical routine in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CpsfError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("mechanical frequencies must equal the effective detuning (omega_m = {omega_m}, omega_d = {omega_d}, delta_0 = {delta_0})")]
    DetunedMechanics {
        omega_m: f64,
        omega_d: f64,
        delta_0: f64,
    },

    #[error("linear system near-singular at omega = {omega} (condition estimate {condition:.3e})")]
    NearSingular { omega: f64, condition: f64 },

    #[error("{what} denominator vanishes at omega = {omega}")]
    PoleProximity { what: &'static str, omega: f64 },

    #[error("modulation xi_{mode} = {xi} is within 1e-9 of the removable singularity xi = 1")]
    CriticalModulation { mode: &'static str, xi: f64 },

    #[error("{0} denominator vanishes")]
    VanishingDenominator(&'static str),

    #[error("system is not stable (max Re eig = {max_real_part:.3e})")]
    Unstable { max_real_part: f64 },

    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, CpsfError>;
