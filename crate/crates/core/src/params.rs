//! Model parameters of the linearized two-oscillator optomechanical system.
//!
//! [`SystemParams`] holds dimensional rates and couplings. [`DimensionlessParams`]
//! holds the cooperativities and paramp amplitudes that every closed form is
//! written in. The conversion between the two uses κ as the unit of frequency.

use serde::{Deserialize, Serialize};

use crate::error::{CpsfError, Result};
use crate::Complex64;

/// Tolerance on the resonance condition ω_m = ω_d = Δ₀ (relative).
const RESONANCE_RTOL: f64 = 1e-12;

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(CpsfError::InvalidParameter {
            name,
            reason: format!("must be finite and > 0, got {value}"),
        })
    }
}

fn check_non_negative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(CpsfError::InvalidParameter {
            name,
            reason: format!("must be finite and >= 0, got {value}"),
        })
    }
}

fn check_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(CpsfError::InvalidParameter {
            name,
            reason: format!("must be finite, got {value}"),
        })
    }
}

/// Dimensional rates and couplings of the linearized model.
///
/// The modulation amplitudes are stored in polar form: `lambda_m` is |λ_m|
/// and `phi_m` its phase, so λ_m = |λ_m| e^{iφ_m}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    pub kappa: f64,
    pub gamma_m: f64,
    pub gamma_d: f64,
    pub g: f64,
    #[serde(rename = "G")]
    pub big_g: f64,
    pub lambda_m: f64,
    pub lambda_d: f64,
    #[serde(default)]
    pub phi_m: f64,
    #[serde(default)]
    pub phi_d: f64,
}

impl SystemParams {
    /// Real-paramp constructor (φ_m = φ_d = 0).
    pub fn new(
        kappa: f64,
        gamma_m: f64,
        gamma_d: f64,
        g: f64,
        big_g: f64,
        lambda_m: f64,
        lambda_d: f64,
    ) -> Result<Self> {
        let p = Self {
            kappa,
            gamma_m,
            gamma_d,
            g,
            big_g,
            lambda_m,
            lambda_d,
            phi_m: 0.0,
            phi_d: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    /// Same rates with modulation phases attached.
    pub fn with_phases(mut self, phi_m: f64, phi_d: f64) -> Self {
        self.phi_m = phi_m;
        self.phi_d = phi_d;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("kappa", self.kappa)?;
        check_positive("gamma_m", self.gamma_m)?;
        check_positive("gamma_d", self.gamma_d)?;
        check_non_negative("g", self.g)?;
        check_non_negative("G", self.big_g)?;
        check_non_negative("lambda_m", self.lambda_m)?;
        check_non_negative("lambda_d", self.lambda_d)?;
        check_finite("phi_m", self.phi_m)?;
        check_finite("phi_d", self.phi_d)?;
        Ok(())
    }

    /// Complex modulation amplitude λ_m.
    pub fn lambda_m_c(&self) -> Complex64 {
        Complex64::from_polar(self.lambda_m, self.phi_m)
    }

    /// Complex modulation amplitude λ_d.
    pub fn lambda_d_c(&self) -> Complex64 {
        Complex64::from_polar(self.lambda_d, self.phi_d)
    }

    /// True when both λ are real (phases 0 or π up to rounding).
    pub fn has_real_paramps(&self) -> bool {
        let real = |l: Complex64| l.im.abs() <= 1e-14 * l.norm().max(f64::MIN_POSITIVE);
        real(self.lambda_m_c()) && real(self.lambda_d_c())
    }

    /// All rates divided by κ, so that κ = 1.
    pub fn normalized(&self) -> Self {
        let k = self.kappa;
        Self {
            kappa: 1.0,
            gamma_m: self.gamma_m / k,
            gamma_d: self.gamma_d / k,
            g: self.g / k,
            big_g: self.big_g / k,
            lambda_m: self.lambda_m / k,
            lambda_d: self.lambda_d / k,
            phi_m: self.phi_m,
            phi_d: self.phi_d,
        }
    }

    /// Every rate multiplied by `factor`; phases untouched.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            kappa: self.kappa * factor,
            gamma_m: self.gamma_m * factor,
            gamma_d: self.gamma_d * factor,
            g: self.g * factor,
            big_g: self.big_g * factor,
            lambda_m: self.lambda_m * factor,
            lambda_d: self.lambda_d * factor,
            phi_m: self.phi_m,
            phi_d: self.phi_d,
        }
    }

    /// Cooperativities and paramp amplitudes. Phases are dropped.
    pub fn to_dimensionless(&self) -> Result<DimensionlessParams> {
        self.validate()?;
        Ok(DimensionlessParams {
            c0: 4.0 * self.g * self.g / (self.kappa * self.gamma_m),
            c1: 4.0 * self.big_g * self.big_g / (self.kappa * self.gamma_d),
            xi_m: 2.0 * self.lambda_m / self.gamma_m,
            xi_d: 2.0 * self.lambda_d / self.gamma_d,
            kappa_over_gamma_m: self.kappa / self.gamma_m,
            gamma_ratio: self.gamma_m / self.gamma_d,
        })
    }

    /// Builds parameters from a physical drive at the red-detuned resonance.
    ///
    /// Fails with [`CpsfError::DetunedMechanics`] unless ω_m = ω_d = Δ₀.
    pub fn from_drive(
        drive: &PhysicalDrive,
        kappa: f64,
        gamma_m: f64,
        gamma_d: f64,
        lambda_m: f64,
        lambda_d: f64,
    ) -> Result<Self> {
        drive.check_resonance()?;
        let (g, big_g) = drive.enhanced_coupling(kappa)?;
        Self::new(kappa, gamma_m, gamma_d, g, big_g, lambda_m, lambda_d)
    }
}

/// Cooperativities C₀, C₁, paramps ξ_m, ξ_d and the two rate ratios that fix
/// the dimensional model once κ = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensionlessParams {
    pub c0: f64,
    pub c1: f64,
    pub xi_m: f64,
    pub xi_d: f64,
    pub kappa_over_gamma_m: f64,
    pub gamma_ratio: f64,
}

impl DimensionlessParams {
    pub fn new(
        c0: f64,
        c1: f64,
        xi_m: f64,
        xi_d: f64,
        kappa_over_gamma_m: f64,
        gamma_ratio: f64,
    ) -> Result<Self> {
        let d = Self {
            c0,
            c1,
            xi_m,
            xi_d,
            kappa_over_gamma_m,
            gamma_ratio,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        check_non_negative("c0", self.c0)?;
        check_non_negative("c1", self.c1)?;
        check_non_negative("xi_m", self.xi_m)?;
        check_non_negative("xi_d", self.xi_d)?;
        check_positive("kappa_over_gamma_m", self.kappa_over_gamma_m)?;
        check_positive("gamma_ratio", self.gamma_ratio)?;
        Ok(())
    }

    /// Copy with the paramps replaced.
    pub fn with_paramps(&self, xi_m: f64, xi_d: f64) -> Self {
        Self { xi_m, xi_d, ..*self }
    }

    /// Dimensional parameters in κ = 1 units with real paramps.
    pub fn to_system(&self) -> Result<SystemParams> {
        self.validate()?;
        let kappa = 1.0;
        let gamma_m = kappa / self.kappa_over_gamma_m;
        let gamma_d = gamma_m / self.gamma_ratio;
        SystemParams::new(
            kappa,
            gamma_m,
            gamma_d,
            (self.c0 * kappa * gamma_m / 4.0).sqrt(),
            (self.c1 * kappa * gamma_d / 4.0).sqrt(),
            self.xi_m * gamma_m / 2.0,
            self.xi_d * gamma_d / 2.0,
        )
    }
}

/// Physical drive quantities from which the enhanced couplings follow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalDrive {
    pub g0: f64,
    #[serde(rename = "G0")]
    pub big_g0: f64,
    #[serde(rename = "E_L")]
    pub e_l: f64,
    #[serde(rename = "Delta_0")]
    pub delta_0: f64,
    pub omega_m: f64,
    pub omega_d: f64,
}

/// Steady-state mean fields (ā, b̄, d̄).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFields {
    pub a: f64,
    pub b: f64,
    pub d: f64,
}

impl PhysicalDrive {
    pub fn validate(&self) -> Result<()> {
        check_finite("g0", self.g0)?;
        check_finite("G0", self.big_g0)?;
        check_non_negative("E_L", self.e_l)?;
        check_finite("Delta_0", self.delta_0)?;
        check_positive("omega_m", self.omega_m)?;
        check_positive("omega_d", self.omega_d)?;
        Ok(())
    }

    /// Intracavity mean amplitude ā = E_L / √(κ²/4 + Δ₀²).
    pub fn mean_amplitude(&self, kappa: f64) -> Result<f64> {
        check_positive("kappa", kappa)?;
        check_non_negative("E_L", self.e_l)?;
        Ok(self.e_l / (kappa * kappa / 4.0 + self.delta_0 * self.delta_0).sqrt())
    }

    /// Enhanced couplings (g, G) = (g₀ ā, G₀ ā).
    pub fn enhanced_coupling(&self, kappa: f64) -> Result<(f64, f64)> {
        let a = self.mean_amplitude(kappa)?;
        Ok((self.g0 * a, self.big_g0 * a))
    }

    pub fn mean_fields(&self, kappa: f64) -> Result<MeanFields> {
        self.validate()?;
        let a = self.mean_amplitude(kappa)?;
        Ok(MeanFields {
            a,
            b: self.g0 * a * a / self.omega_m,
            d: -self.big_g0 * a * a / self.omega_d,
        })
    }

    /// Bare cavity detuning Δ_c = Δ₀ + 2g₀b̄ + 2G₀d̄ consistent with the mean fields.
    pub fn bare_detuning(&self, kappa: f64) -> Result<f64> {
        let mf = self.mean_fields(kappa)?;
        Ok(self.delta_0 + 2.0 * self.g0 * mf.b + 2.0 * self.big_g0 * mf.d)
    }

    /// The linearized model only covers ω_m = ω_d = Δ₀.
    pub fn check_resonance(&self) -> Result<()> {
        self.validate()?;
        let close = |x: f64, y: f64| (x - y).abs() <= RESONANCE_RTOL * x.abs().max(y.abs());
        if close(self.omega_m, self.omega_d) && close(self.omega_m, self.delta_0) {
            Ok(())
        } else {
            Err(CpsfError::DetunedMechanics {
                omega_m: self.omega_m,
                omega_d: self.omega_d,
                delta_0: self.delta_0,
            })
        }
    }
}
