//! Detuned degenerate parametric amplifier, the frequency-independent
//! reference model for spectral-function negativity.
//!
//! With ω_± = ω ± Δ_p the susceptibility is
//!
//! ```text
//! χ(ω) = [κ/2 − iω₋, λ; λ*, κ/2 − iω₊] / ((κ/2 − iω₊)(κ/2 − iω₋) − |λ|²)
//! ```
//!
//! and the spectral function is a(ω) = κF(ω)/([κ²/4 − |λ|² − (ω² − Δ_p²)]² + ω²κ²)
//! with F(ω) = ω² − 2Δ_pω + S, S = κ²/4 + Δ_p² − |λ|².

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{CpsfError, Result};
use crate::{Complex64, I};

const POLE_RTOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpaParams {
    pub kappa: f64,
    /// Pump amplitude |λ|.
    pub lambda: f64,
    /// Pump detuning Δ_p.
    pub delta_p: f64,
    /// Pump phase; only [`opa_susceptibility`] uses it.
    #[serde(default)]
    pub phase: f64,
}

impl OpaParams {
    pub fn new(kappa: f64, lambda: f64, delta_p: f64) -> Result<Self> {
        let o = Self {
            kappa,
            lambda,
            delta_p,
            phase: 0.0,
        };
        o.validate()?;
        Ok(o)
    }

    /// From ξ_k = 2λ/κ and Δ_k = Δ_p/κ.
    pub fn from_normalized(kappa: f64, xi_k: f64, delta_k: f64) -> Result<Self> {
        Self::new(kappa, xi_k * kappa / 2.0, delta_k * kappa)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| {
            Err(CpsfError::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return bad("kappa", "must be finite and > 0");
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad("lambda", "must be finite and >= 0");
        }
        if !self.delta_p.is_finite() {
            return bad("delta_p", "must be finite");
        }
        if !self.phase.is_finite() {
            return bad("phase", "must be finite");
        }
        Ok(())
    }

    /// |λ|² < κ²/4 + Δ_p².
    pub fn is_stable(&self) -> bool {
        self.lambda * self.lambda < self.kappa * self.kappa / 4.0 + self.delta_p * self.delta_p
    }

    /// S = κ²/4 + Δ_p² − |λ|².
    pub fn s(&self) -> f64 {
        self.kappa * self.kappa / 4.0 + self.delta_p * self.delta_p - self.lambda * self.lambda
    }

    fn lambda_c(&self) -> Complex64 {
        Complex64::from_polar(self.lambda, self.phase)
    }
}

pub fn opa_susceptibility(o: &OpaParams, omega: f64) -> Result<Matrix2<Complex64>> {
    o.validate()?;
    let half = Complex64::new(o.kappa / 2.0, 0.0);
    let plus = half - I * (omega + o.delta_p);
    let minus = half - I * (omega - o.delta_p);
    let lam = o.lambda_c();
    let det = plus * minus - lam.norm_sqr();
    if det.norm() < POLE_RTOL * o.kappa * o.kappa {
        return Err(CpsfError::PoleProximity { what: "OPA", omega });
    }
    Ok(Matrix2::new(minus, lam, lam.conj(), plus) / det)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OpaSample {
    pub omega: f64,
    /// a(ω)
    pub a: f64,
    /// F(ω)
    pub f: f64,
}

/// a(ω) and F(ω) for a stable amplifier.
pub fn opa_cpsf(o: &OpaParams, omega: f64) -> Result<OpaSample> {
    o.validate()?;
    if !o.is_stable() {
        return Err(CpsfError::Unstable {
            max_real_part: opa_max_real_part(o),
        });
    }
    Ok(opa_cpsf_unchecked(o, omega))
}

/// a(ω) and F(ω) without the stability check.
pub fn opa_cpsf_unchecked(o: &OpaParams, omega: f64) -> OpaSample {
    let k = o.kappa;
    let dp = o.delta_p;
    let l2 = o.lambda * o.lambda;
    let f = omega * omega - 2.0 * dp * omega + o.s();
    let x = k * k / 4.0 - l2 - (omega * omega - dp * dp);
    OpaSample {
        omega,
        a: k * f / (x * x + omega * omega * k * k),
        f,
    }
}

/// Largest real part of the drift eigenvalues, −κ/2 + Re √(|λ|² − Δ_p²).
pub fn opa_max_real_part(o: &OpaParams) -> f64 {
    let q = o.lambda * o.lambda - o.delta_p * o.delta_p;
    -o.kappa / 2.0 + q.max(0.0).sqrt()
}

/// Endpoints Δ_p ∓ √(|λ|² − κ²/4) of the interval where F(ω) < 0, or `None`
/// when |λ| ≤ κ/2. Stability is not checked.
pub fn negativity_window(o: &OpaParams) -> Option<(f64, f64)> {
    let q = o.lambda * o.lambda - o.kappa * o.kappa / 4.0;
    if q <= 0.0 {
        return None;
    }
    let half_width = q.sqrt();
    Some((o.delta_p - half_width, o.delta_p + half_width))
}

/// Σ = i(0, λ; λ*, 0); frequency independent, so κ_eff = κ.
pub fn opa_self_energy(o: &OpaParams) -> Matrix2<Complex64> {
    let lam = o.lambda_c();
    let zero = Complex64::new(0.0, 0.0);
    Matrix2::new(zero, I * lam, I * lam.conj(), zero)
}

/// Inverse bare susceptibility diag(κ/2 − iω₊, κ/2 − iω₋).
pub fn opa_bare_inverse(o: &OpaParams, omega: f64) -> Matrix2<Complex64> {
    let half = Complex64::new(o.kappa / 2.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    Matrix2::new(
        half - I * (omega + o.delta_p),
        zero,
        zero,
        half - I * (omega - o.delta_p),
    )
}
