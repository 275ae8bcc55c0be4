//! Closed-form frequency-domain response of the cavity mode.
//!
//! Eliminating both mechanical modes leaves a single-mode problem in which the
//! cavity sees a frequency-dependent self-energy Σ_a(ω) and an induced,
//! frequency-dependent squeezing coefficient λ̃_a(ω). Everything below is
//! built from those two functions:
//!
//! ```text
//! iΣ_a(ω) = g² (γ_m/2 − iω)/D_m(ω) + G² (γ_d/2 − iω)/D_d(ω)
//! λ̃_a(ω)  = g² λ_m/D_m(ω)          + G² λ_d/D_d(ω)
//! D_j(ω)  = (γ_j/2 − iω)² − |λ_j|²
//!
//! M(ω)  = λ̃_a(ω) / (κ/2 − i(ω + Σ_a*(−ω)))
//! Σ̃_a(ω) = Σ_a(ω) − λ̃_a(ω) λ̃_a*(−ω) / (iκ/2 + ω + Σ_a*(−ω))
//! χ_aa(ω) = i / (iκ/2 + ω − Σ̃_a(ω))
//! ```
//!
//! The retarded Green's function is G^R_{aa†} = −iχ_aa, the cavity photon
//! spectral function (CPSF) is 𝒜 = −2 Im G^R_{aa†}, and the effective cavity
//! damping rate is κ_eff = κ − 2 Im Σ̃_a.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CpsfError, Result};
use crate::params::{DimensionlessParams, SystemParams};
use crate::{Complex64, I};

/// Relative size below which a mechanical denominator counts as a pole.
const MECH_POLE_RTOL: f64 = 1e-12;
/// Relative size (in κ) below which a cavity denominator counts as a pole.
const CAVITY_POLE_RTOL: f64 = 1e-14;
/// Paramps closer than this to 1 are rejected by the on-resonance forms.
pub const CRITICAL_XI_TOL: f64 = 1e-9;
/// |A_D| below this is treated as a vanishing denominator.
const AD_TOL: f64 = 1e-14;

/// Evenly spaced frequency grid including both endpoints.
pub fn frequency_grid(omega_min: f64, omega_max: f64, n_points: usize) -> Result<Vec<f64>> {
    if !(omega_min.is_finite() && omega_max.is_finite()) || omega_min >= omega_max {
        return Err(CpsfError::InvalidArgument(format!(
            "frequency range must satisfy omega_min < omega_max, got [{omega_min}, {omega_max}]"
        )));
    }
    if n_points < 2 {
        return Err(CpsfError::InvalidArgument(format!(
            "need at least 2 frequency points, got {n_points}"
        )));
    }
    let step = (omega_max - omega_min) / (n_points - 1) as f64;
    Ok((0..n_points)
        .map(|i| {
            if i == n_points - 1 {
                omega_max
            } else {
                omega_min + step * i as f64
            }
        })
        .collect())
}

/// One mechanical mode as seen by the cavity.
#[derive(Clone, Copy)]
struct MechMode {
    coupling: f64,
    gamma: f64,
    lambda: Complex64,
    name: &'static str,
}

impl MechMode {
    fn of(p: &SystemParams) -> [MechMode; 2] {
        [
            MechMode {
                coupling: p.g,
                gamma: p.gamma_m,
                lambda: p.lambda_m_c(),
                name: "mechanical mode m",
            },
            MechMode {
                coupling: p.big_g,
                gamma: p.gamma_d,
                lambda: p.lambda_d_c(),
                name: "mechanical mode d",
            },
        ]
    }

    fn loss(&self, omega: f64) -> Complex64 {
        Complex64::new(self.gamma / 2.0, -omega)
    }

    /// (γ/2 − iω)² − |λ|², or `None` for an uncoupled mode.
    fn denominator(&self, omega: f64) -> Result<Option<Complex64>> {
        if self.coupling == 0.0 {
            return Ok(None);
        }
        let l = self.loss(omega);
        let den = l * l - self.lambda.norm_sqr();
        if den.norm() < MECH_POLE_RTOL * self.gamma * self.gamma {
            return Err(CpsfError::PoleProximity {
                what: self.name,
                omega,
            });
        }
        Ok(Some(den))
    }
}

/// Σ_a(ω) and λ̃_a(ω) at one frequency.
fn bare_terms(p: &SystemParams, omega: f64) -> Result<(Complex64, Complex64)> {
    let mut i_sigma = Complex64::new(0.0, 0.0);
    let mut lambda_tilde = Complex64::new(0.0, 0.0);
    for mode in MechMode::of(p) {
        if let Some(den) = mode.denominator(omega)? {
            let g2 = mode.coupling * mode.coupling;
            i_sigma += g2 * mode.loss(omega) / den;
            lambda_tilde += g2 * mode.lambda / den;
        }
    }
    Ok((-I * i_sigma, lambda_tilde))
}

/// Self-energies and squeezing coefficients at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelfEnergySample {
    pub omega: f64,
    /// Σ_a(ω)
    pub sigma_a: Complex64,
    /// λ̃_a(ω)
    pub lambda_tilde: Complex64,
    /// Σ̃_a(ω)
    pub sigma_tilde: Complex64,
    /// M(ω)
    pub m_coeff: Complex64,
}

/// Bare terms at ±ω plus the conjugate-cavity denominator κ/2 − i(ω + Σ_a*(−ω)).
struct Dressing {
    omega: f64,
    sigma_a: Complex64,
    lambda_tilde: Complex64,
    lambda_neg: Complex64,
    dressed: Complex64,
}

impl Dressing {
    fn new(p: &SystemParams, omega: f64) -> Result<Self> {
        let (sigma_a, lambda_tilde) = bare_terms(p, omega)?;
        let (sigma_neg, lambda_neg) = bare_terms(p, -omega)?;
        let dressed = Complex64::new(p.kappa / 2.0, 0.0) - I * (omega + sigma_neg.conj());
        Ok(Self {
            omega,
            sigma_a,
            lambda_tilde,
            lambda_neg: lambda_neg.conj(),
            dressed,
        })
    }

    /// M(ω); unbounded where `dressed` vanishes.
    fn m_coeff(&self) -> Complex64 {
        self.lambda_tilde / self.dressed
    }

    /// Σ̃_a(ω); unbounded where `dressed` vanishes.
    fn sigma_tilde(&self) -> Complex64 {
        self.sigma_a - self.lambda_tilde * self.lambda_neg / (I * self.dressed)
    }

    /// (χ_aa, χ_aa†) without dividing by `dressed`.
    ///
    /// With c = iκ/2 + ω − Σ_a and d = `dressed`, χ_aa = −d/(icd + λ̃λ̃*(−ω))
    /// and χ_aa† = −λ̃/(icd + λ̃λ̃*(−ω)). This stays finite where M(ω) has a
    /// removable pole, e.g. ω = 0 at the single-oscillator negativity onset.
    fn cavity_pair(&self, kappa: f64) -> Result<(Complex64, Complex64)> {
        let c = Complex64::new(self.omega, kappa / 2.0) - self.sigma_a;
        let den = I * c * self.dressed + self.lambda_tilde * self.lambda_neg;
        if den.norm() < CAVITY_POLE_RTOL * kappa * kappa {
            return Err(CpsfError::PoleProximity {
                what: "cavity",
                omega: self.omega,
            });
        }
        Ok((-self.dressed / den, -self.lambda_tilde / den))
    }
}

pub fn self_energy(p: &SystemParams, omega: f64) -> Result<SelfEnergySample> {
    let dr = Dressing::new(p, omega)?;
    if dr.dressed.norm() < CAVITY_POLE_RTOL * p.kappa {
        return Err(CpsfError::PoleProximity {
            what: "conjugate cavity",
            omega,
        });
    }
    Ok(SelfEnergySample {
        omega,
        sigma_a: dr.sigma_a,
        lambda_tilde: dr.lambda_tilde,
        sigma_tilde: dr.sigma_tilde(),
        m_coeff: dr.m_coeff(),
    })
}

/// Cavity row of the susceptibility matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiElements {
    pub aa: Complex64,
    pub aa_dag: Complex64,
    pub ab: Complex64,
    pub ab_dag: Complex64,
    pub ad: Complex64,
    pub ad_dag: Complex64,
}

impl ChiElements {
    /// In basis order (δa, δa†, δb, δb†, δd, δd†).
    pub fn to_array(&self) -> [Complex64; 6] {
        [self.aa, self.aa_dag, self.ab, self.ab_dag, self.ad, self.ad_dag]
    }
}

pub fn chi_elements(p: &SystemParams, omega: f64) -> Result<ChiElements> {
    let dr = Dressing::new(p, omega)?;
    let (aa, aa_dag) = dr.cavity_pair(p.kappa)?;
    let zero = Complex64::new(0.0, 0.0);

    // χ_ab = ig[(γ/2 − iω)χ_aa − λ*χ_aa†]/D, χ_ab† = ig[λχ_aa − (γ/2 − iω)χ_aa†]/D
    let [mode_m, mode_d] = MechMode::of(p);
    let mech_pair = |mode: MechMode| -> Result<(Complex64, Complex64)> {
        match mode.denominator(omega)? {
            None => Ok((zero, zero)),
            Some(den) => {
                let l = mode.loss(omega);
                let pre = I * mode.coupling / den;
                Ok((
                    pre * (l * aa - mode.lambda.conj() * aa_dag),
                    pre * (mode.lambda * aa - l * aa_dag),
                ))
            }
        }
    };
    let (ab, ab_dag) = mech_pair(mode_m)?;
    let (ad, ad_dag) = mech_pair(mode_d)?;

    Ok(ChiElements {
        aa,
        aa_dag,
        ab,
        ab_dag,
        ad,
        ad_dag,
    })
}

/// Retarded Green's functions, CPSF and effective damping at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreensSample {
    pub omega: f64,
    /// G^R_{aa†}(ω)
    pub g_ret_aad: Complex64,
    /// G^R_{aa}(ω)
    pub g_ret_aa: Complex64,
    /// 𝒜(ω) = −2 Im G^R_{aa†}(ω)
    pub cpsf: f64,
    /// κ_eff(ω) = κ − 2 Im Σ̃_a(ω)
    pub kappa_eff: f64,
}

/// κ_eff is not finite where M(ω) has its removable pole; 𝒜 stays finite there.
pub fn greens(p: &SystemParams, omega: f64) -> Result<GreensSample> {
    let dr = Dressing::new(p, omega)?;
    let (aa, aa_dag) = dr.cavity_pair(p.kappa)?;
    let g_ret_aad = -I * aa;
    Ok(GreensSample {
        omega,
        g_ret_aad,
        g_ret_aa: -I * aa_dag,
        cpsf: -2.0 * g_ret_aad.im,
        kappa_eff: p.kappa - 2.0 * dr.sigma_tilde().im,
    })
}

/// [`greens`] over a frequency grid, evaluated in parallel, returned in grid order.
pub fn greens_sweep(p: &SystemParams, omegas: &[f64]) -> Result<Vec<GreensSample>> {
    omegas.par_iter().map(|&w| greens(p, w)).collect()
}

/// On-resonance (ω = 0) cooperativity algebra in κ = 1 units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OnResonanceAlgebra {
    /// 𝒞_a = C₀/(1−ξ_m²) + C₁/(1−ξ_d²), with Im Σ_a(0) = −(κ/2)𝒞_a.
    pub c_a: f64,
    /// 𝒞′_a = C₀ξ_m/(1−ξ_m²) + C₁ξ_d/(1−ξ_d²), with λ̃_a(0) = (κ/2)𝒞′_a.
    pub c_a_prime: f64,
    /// 𝒞″_a = 𝒞_a − 𝒞′_a²/(1+𝒞_a), with Im Σ̃_a(0) = −(κ/2)𝒞″_a. Not finite
    /// when 1 + 𝒞_a = 0.
    pub c_a_dprime: f64,
    /// 𝒜(0) in units of 1/κ.
    pub a0: f64,
    /// M = κ𝒜(0).
    pub m_negativity: f64,
    pub a_n: f64,
    pub a_d: f64,
}

impl OnResonanceAlgebra {
    /// κ_eff(0)/κ = 1 + 𝒞″_a.
    pub fn kappa_eff_ratio(&self) -> f64 {
        1.0 + self.c_a_dprime
    }

    /// λ̃_a(0)/κ.
    pub fn lambda_tilde0(&self) -> f64 {
        self.c_a_prime / 2.0
    }

    /// 𝒜(0) of a non-detuned parametric amplifier with damping κ(1+𝒞_a) and
    /// pump λ̃_a(0), i.e. κ̄/(κ̄²/4 − λ̃²).
    pub fn opa_mapped_a0(&self) -> f64 {
        let kbar = 1.0 + self.c_a;
        let lt = self.lambda_tilde0();
        kbar / (kbar * kbar / 4.0 - lt * lt)
    }
}

/// Numerator A_N and denominator A_D of κ𝒜(0) = 4A_N/A_D.
pub fn on_resonance_ratio(c0: f64, c1: f64, xi_m: f64, xi_d: f64) -> (f64, f64) {
    let sm = xi_m * xi_m - 1.0;
    let sd = xi_d * xi_d - 1.0;
    let a_n = sm * sd - c0 * sd - c1 * sm;
    let a_d = sm * sd
        - 2.0 * c0 * c1 * (xi_m * xi_d - 1.0)
        - c0 * (c0 + 2.0) * sd
        - c1 * (c1 + 2.0) * sm;
    (a_n, a_d)
}

pub fn cpsf_on_resonance(d: &DimensionlessParams) -> Result<OnResonanceAlgebra> {
    d.validate()?;
    for (mode, xi) in [("m", d.xi_m), ("d", d.xi_d)] {
        if (xi - 1.0).abs() < CRITICAL_XI_TOL {
            return Err(CpsfError::CriticalModulation { mode, xi });
        }
    }
    let (a_n, a_d) = on_resonance_ratio(d.c0, d.c1, d.xi_m, d.xi_d);
    if a_d.abs() < AD_TOL {
        return Err(CpsfError::VanishingDenominator("on-resonance CPSF (A_D)"));
    }
    let qm = 1.0 - d.xi_m * d.xi_m;
    let qd = 1.0 - d.xi_d * d.xi_d;
    let c_a = d.c0 / qm + d.c1 / qd;
    let c_a_prime = d.c0 * d.xi_m / qm + d.c1 * d.xi_d / qd;
    // ±∞ where 1 + 𝒞_a = 0 (κ_eff diverges, 𝒜(0) = 0)
    let c_a_dprime = c_a - c_a_prime * c_a_prime / (1.0 + c_a);
    let a0 = 4.0 * a_n / a_d;
    Ok(OnResonanceAlgebra {
        c_a,
        c_a_prime,
        c_a_dprime,
        a0,
        m_negativity: a0,
        a_n,
        a_d,
    })
}
