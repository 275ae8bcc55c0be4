//! Input noise, the Keldysh Green's function, the effective temperature,
//! the cavity scattering block and the probe reflectivity.
//!
//! For white Markovian baths the stationary spectra of u(ω) = χ(ω)u_in(ω)
//! follow from χ(ω)·D·χ†(ω), where D is diagonal in the ordered basis
//! (δa, δa†, δb, δb†, δd, δd†). Symmetrizing the cavity correlator gives
//! −iG^k(ω); the commutator gives the spectral function 𝒜(ω) again.

use nalgebra::{Matrix2, Matrix6};
use serde::{Deserialize, Serialize};

use crate::error::{CpsfError, Result};
use crate::linsys::{eigen_stability, susceptibility_numeric, CMatrix6};
use crate::params::SystemParams;
use crate::response::{chi_elements, greens};
use crate::{Complex64, I};

/// |𝒜| below this leaves T_eff undefined.
pub const CPSF_GUARD: f64 = 1e-12;
/// |ratio| within this of 1 is reported as the vacuum limit T_eff = 0.
pub const VACUUM_RATIO_TOL: f64 = 1e-12;
/// Above this fraction of κ the probe is no longer weak.
pub const WEAK_PROBE_LIMIT: f64 = 0.01;

/// Mean thermal occupations of the cavity and the two mechanical baths.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathOccupations {
    #[serde(default)]
    pub n_c: f64,
    #[serde(default)]
    pub n_m: f64,
    #[serde(default)]
    pub n_d: f64,
}

impl BathOccupations {
    pub fn new(n_c: f64, n_m: f64, n_d: f64) -> Result<Self> {
        let b = Self { n_c, n_m, n_d };
        b.validate()?;
        Ok(b)
    }

    pub fn vacuum() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("n_c", self.n_c), ("n_m", self.n_m), ("n_d", self.n_d)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(CpsfError::InvalidParameter {
                    name,
                    reason: format!("must be finite and >= 0, got {v}"),
                });
            }
        }
        Ok(())
    }
}

/// Bose occupation 1/(e^{ω/T} − 1) with ħ = k_B = 1.
pub fn thermal_occupation(omega: f64, temperature: f64) -> f64 {
    1.0 / (omega / temperature).exp_m1()
}

/// ⟨σ_z⟩ = −tanh(ω/(2T)) of a two-level system at temperature T.
pub fn qubit_population_inversion(omega: f64, t_eff: f64) -> f64 {
    -(omega / (2.0 * t_eff)).tanh()
}

/// Diagonal diffusion matrix of the input noise, normal-ordered weights
/// κ(1+n_c), κn_c, γ_m(1+n_m), γ_m n_m, γ_d(1+n_d), γ_d n_d.
pub fn noise_covariance(b: &BathOccupations, p: &SystemParams) -> Result<Matrix6<f64>> {
    b.validate()?;
    let w = [
        p.kappa * (1.0 + b.n_c),
        p.kappa * b.n_c,
        p.gamma_m * (1.0 + b.n_m),
        p.gamma_m * b.n_m,
        p.gamma_d * (1.0 + b.n_d),
        p.gamma_d * b.n_d,
    ];
    Ok(Matrix6::from_diagonal(&w.into()))
}

/// D + D' and D − D', with D' swapping each (o, o†) pair of weights.
fn symmetrized_and_commutator(d: &Matrix6<f64>) -> ([f64; 6], [f64; 6]) {
    let mut sym = [0.0; 6];
    let mut com = [0.0; 6];
    for k in (0..6).step_by(2) {
        let (x, y) = (d[(k, k)], d[(k + 1, k + 1)]);
        sym[k] = x + y;
        sym[k + 1] = x + y;
        com[k] = x - y;
        com[k + 1] = y - x;
    }
    (sym, com)
}

fn cavity_quadratic_form(chi: &CMatrix6, w: &[f64; 6]) -> f64 {
    (0..6).map(|k| chi[(0, k)].norm_sqr() * w[k]).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KeldyshSample {
    pub omega: f64,
    /// G^k(ω), purely imaginary.
    pub g_keldysh: Complex64,
    /// 𝒜(ω) from the commutator of the same spectra.
    pub cpsf: f64,
    /// −iG^k/𝒜; NaN when |𝒜| < [`CPSF_GUARD`].
    pub ratio: f64,
    /// ω/(2 arccoth(ratio)); `None` when undefined.
    pub t_eff: Option<f64>,
}

fn ensure_stable(p: &SystemParams) -> Result<()> {
    let v = eigen_stability(p);
    if !v.stable {
        return Err(CpsfError::Unstable {
            max_real_part: v.max_real_part,
        });
    }
    Ok(())
}

/// T_eff from ω and −iG^k/𝒜.
///
/// |ratio| ≤ 1 has no real solution; |ratio| → 1 is the vacuum limit T = 0.
pub fn effective_temperature(omega: f64, ratio: f64) -> Option<f64> {
    if !ratio.is_finite() {
        return None;
    }
    if (ratio.abs() - 1.0).abs() < VACUUM_RATIO_TOL {
        return Some(0.0);
    }
    if ratio.abs() < 1.0 {
        return None;
    }
    let acoth = 0.5 * ((ratio + 1.0) / (ratio - 1.0)).ln();
    Some(omega / (2.0 * acoth))
}

pub fn keldysh_and_teff(p: &SystemParams, b: &BathOccupations, omega: f64) -> Result<KeldyshSample> {
    ensure_stable(p)?;
    keldysh_unchecked(p, b, omega)
}

fn keldysh_unchecked(p: &SystemParams, b: &BathOccupations, omega: f64) -> Result<KeldyshSample> {
    let (sym, com) = symmetrized_and_commutator(&noise_covariance(b, p)?);
    let chi = susceptibility_numeric(p, omega)?.entries;
    let minus_i_gk = cavity_quadratic_form(&chi, &sym);
    let cpsf = cavity_quadratic_form(&chi, &com);
    let ratio = if cpsf.abs() < CPSF_GUARD {
        f64::NAN
    } else {
        minus_i_gk / cpsf
    };
    Ok(KeldyshSample {
        omega,
        g_keldysh: I * minus_i_gk,
        cpsf,
        ratio,
        t_eff: effective_temperature(omega, ratio),
    })
}

/// Cavity scattering block and probe reflectivity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scattering {
    pub omega: f64,
    /// I₂ − κ[χ_aa, χ_aa†; χ_a†a, χ_a†a†], row-major.
    pub s: [[Complex64; 2]; 2],
    /// 1 − κ′𝒜(ω).
    pub reflectivity: f64,
    /// κ′ > 0.01κ: the weak-probe expression is not reliable.
    pub probe_warning: bool,
}

pub fn scattering_and_reflectivity(
    p: &SystemParams,
    kappa_probe: f64,
    omega: f64,
) -> Result<Scattering> {
    if !(kappa_probe.is_finite() && kappa_probe >= 0.0) {
        return Err(CpsfError::InvalidParameter {
            name: "kappa_probe",
            reason: format!("must be finite and >= 0, got {kappa_probe}"),
        });
    }
    let pos = chi_elements(p, omega)?;
    let neg = chi_elements(p, -omega)?;
    // χ_a†a(ω) = χ_aa†(−ω)*, χ_a†a†(ω) = χ_aa(−ω)*
    let block = Matrix2::new(pos.aa, pos.aa_dag, neg.aa_dag.conj(), neg.aa.conj());
    let s = Matrix2::identity() - block * Complex64::new(p.kappa, 0.0);
    let cpsf = 2.0 * pos.aa.re;
    Ok(Scattering {
        omega,
        s: [[s[(0, 0)], s[(0, 1)]], [s[(1, 0)], s[(1, 1)]]],
        reflectivity: 1.0 - kappa_probe * cpsf,
        probe_warning: kappa_probe > WEAK_PROBE_LIMIT * p.kappa,
    })
}

/// All noise-layer outputs at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseSpectrumSample {
    pub omega: f64,
    pub g_keldysh: Complex64,
    pub cpsf: f64,
    pub ratio: f64,
    pub t_eff: Option<f64>,
    pub reflectivity: f64,
    pub s_matrix: [[Complex64; 2]; 2],
    pub probe_warning: bool,
}

pub fn noise_spectrum(
    p: &SystemParams,
    b: &BathOccupations,
    kappa_probe: f64,
    omegas: &[f64],
) -> Result<Vec<NoiseSpectrumSample>> {
    use rayon::prelude::*;
    ensure_stable(p)?;
    omegas
        .par_iter()
        .map(|&w| {
            let k = keldysh_unchecked(p, b, w)?;
            let s = scattering_and_reflectivity(p, kappa_probe, w)?;
            Ok(NoiseSpectrumSample {
                omega: w,
                g_keldysh: k.g_keldysh,
                cpsf: k.cpsf,
                ratio: k.ratio,
                t_eff: k.t_eff,
                reflectivity: s.reflectivity,
                s_matrix: s.s,
                probe_warning: s.probe_warning,
            })
        })
        .collect()
}

/// Coefficients of Â_in(ω) on (a_in, a_in†, b_in, b_in†, d_in, d_in†).
pub fn generalized_input_noise(p: &SystemParams, omega: f64) -> Result<[Complex64; 6]> {
    let mut c = [Complex64::new(0.0, 0.0); 6];
    c[0] = Complex64::new(1.0, 0.0);
    let modes = [
        (p.g, p.gamma_m, p.lambda_m_c(), 2),
        (p.big_g, p.gamma_d, p.lambda_d_c(), 4),
    ];
    for (coupling, gamma, lambda, k) in modes {
        if coupling == 0.0 {
            continue;
        }
        let l = Complex64::new(gamma / 2.0, -omega);
        let den = l * l - lambda.norm_sqr();
        if den.norm() < 1e-12 * gamma * gamma {
            return Err(CpsfError::PoleProximity {
                what: "input noise",
                omega,
            });
        }
        let pre = I * coupling * (gamma / p.kappa).sqrt() / den;
        c[k] = pre * l;
        c[k + 1] = pre * lambda;
    }
    Ok(c)
}

/// Consistency of δa = √κ χ_aa (Â_in + M Â_in†) with the cavity row of χ:
/// the largest coefficient mismatch on the six input operators.
pub fn input_noise_mismatch(p: &SystemParams, omega: f64) -> Result<f64> {
    let pos = generalized_input_noise(p, omega)?;
    let neg = generalized_input_noise(p, -omega)?;
    let se = crate::response::self_energy(p, omega)?;
    let chi = chi_elements(p, omega)?;
    let row = chi.to_array();
    let rates = [p.kappa, p.kappa, p.gamma_m, p.gamma_m, p.gamma_d, p.gamma_d];
    let root_k = p.kappa.sqrt();
    let mut worst: f64 = 0.0;
    for k in 0..6 {
        let partner = k ^ 1;
        let dagger = neg[partner].conj();
        let lhs = root_k * chi.aa * (pos[k] + se.m_coeff * dagger);
        let rhs = row[k] * rates[k].sqrt();
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

/// 𝒜(ω) from the retarded function, for cross-checks against [`KeldyshSample::cpsf`].
pub fn cpsf_retarded(p: &SystemParams, omega: f64) -> Result<f64> {
    Ok(greens(p, omega)?.cpsf)
}
