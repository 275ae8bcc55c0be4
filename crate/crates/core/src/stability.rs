//! Closed-form stability bounds, the two-condition negativity test and the
//! search for paramps reaching a prescribed on-resonance negativity.
//!
//! The collective cooperativity of one mode is the bare cooperativity dressed
//! by the other, modulated, oscillator:
//!
//! ```text
//! 𝒞_m = C₀(1+C₁−ξ_d²) / ((1+C₁−ξ_d²)² − ξ_d²C₁²)
//! ξ_m ≤ ξ_m^max = 1 + 𝒞_m
//! ```
//!
//! and symmetrically for d. Each maximum is evaluated at the other mode's
//! operating paramp.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CpsfError, Result};
use crate::linsys::{eigen_stability, StabilityVerdict};
use crate::params::DimensionlessParams;
use crate::response::on_resonance_ratio;

/// Number of rays θ ∈ [0, π/2] scanned by the optimizer.
pub const RAY_COUNT: usize = 1025;
/// Agreement required between κ𝒜(0) and the target at a returned optimum.
pub const TARGET_TOL: f64 = 1e-6;
/// Norms closer than this are treated as ties (smaller ξ_d wins).
const TIE_TOL: f64 = 1e-8;
const DENOM_TOL: f64 = 1e-14;

/// Collective cooperativities (𝒞_m, 𝒞_d).
pub fn collective_cooperativities(d: &DimensionlessParams) -> Result<(f64, f64)> {
    d.validate()?;
    let dressed = |c_self: f64, c_other: f64, xi_other: f64, what| {
        let q = 1.0 + c_other - xi_other * xi_other;
        let den = q * q - xi_other * xi_other * c_other * c_other;
        if den.abs() < DENOM_TOL {
            return Err(CpsfError::VanishingDenominator(what));
        }
        Ok(c_self * q / den)
    };
    Ok((
        dressed(d.c0, d.c1, d.xi_d, "collective cooperativity C_m")?,
        dressed(d.c1, d.c0, d.xi_m, "collective cooperativity C_d")?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityReport {
    pub c_m: f64,
    pub c_d: f64,
    pub xi_m_max: f64,
    pub xi_d_max: f64,
    /// ξ_m ≤ ξ_m^max and ξ_d ≤ ξ_d^max.
    pub stable_closed_form: bool,
    pub stable_eigen: bool,
    /// min(ξ_m^max − ξ_m, ξ_d^max − ξ_d).
    pub margin: f64,
    pub eigen: StabilityVerdict,
}

pub fn stability_report(d: &DimensionlessParams) -> Result<StabilityReport> {
    let (c_m, c_d) = collective_cooperativities(d)?;
    let xi_m_max = 1.0 + c_m;
    let xi_d_max = 1.0 + c_d;
    let margin = (xi_m_max - d.xi_m).min(xi_d_max - d.xi_d);
    let eigen = eigen_stability(&d.to_system()?);
    Ok(StabilityReport {
        c_m,
        c_d,
        xi_m_max,
        xi_d_max,
        stable_closed_form: margin >= 0.0,
        stable_eigen: eigen.stable,
        margin,
        eigen,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NegativityCheck {
    /// κ𝒜(0).
    pub m: f64,
    pub negative: bool,
    /// Both the closed-form inequalities and the eigenvalue test hold.
    pub stable: bool,
}

pub fn negativity_check(d: &DimensionlessParams) -> Result<NegativityCheck> {
    let (a_n, a_d) = on_resonance_ratio(d.c0, d.c1, d.xi_m, d.xi_d);
    if a_d.abs() < DENOM_TOL {
        return Err(CpsfError::VanishingDenominator("on-resonance CPSF (A_D)"));
    }
    let m = 4.0 * a_n / a_d;
    let report = stability_report(d)?;
    Ok(NegativityCheck {
        m,
        negative: m < 0.0,
        stable: report.stable_closed_form && report.stable_eigen,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NegativityResult {
    pub target_m: f64,
    /// NaN when infeasible.
    pub xi_m_opt: f64,
    pub xi_d_opt: f64,
    pub achieved_m: f64,
    pub feasible: bool,
}

impl NegativityResult {
    fn infeasible(target_m: f64) -> Self {
        Self {
            target_m,
            xi_m_opt: f64::NAN,
            xi_d_opt: f64::NAN,
            achieved_m: f64::NAN,
            feasible: false,
        }
    }
}

/// Quadratic a₂u² + a₁u + a₀ in u = r² along the ray (ξ_m, ξ_d) = r(cos θ, sin θ).
#[derive(Debug, Clone, Copy)]
struct Quad(f64, f64, f64);

impl Quad {
    fn eval(&self, u: f64) -> f64 {
        (self.0 * u + self.1) * u + self.2
    }

    fn deriv(&self, u: f64) -> f64 {
        2.0 * self.0 * u + self.1
    }

    /// Positive real roots in increasing order.
    fn positive_roots(&self) -> Vec<f64> {
        let Quad(a2, a1, a0) = *self;
        let scale = a2.abs().max(a1.abs()).max(a0.abs());
        let mut roots = Vec::with_capacity(2);
        if a2.abs() <= 1e-15 * scale {
            if a1 != 0.0 {
                roots.push(-a0 / a1);
            }
        } else {
            let disc = a1 * a1 - 4.0 * a2 * a0;
            if disc >= 0.0 {
                let q = -0.5 * (a1 + a1.signum() * disc.sqrt());
                if q != 0.0 {
                    roots.push(q / a2);
                    roots.push(a0 / q);
                } else {
                    roots.push(0.0);
                }
            }
        }
        roots.retain(|u| u.is_finite() && *u > 0.0);
        roots.sort_by(f64::total_cmp);
        roots
    }
}

/// (A_N, A_D) as quadratics in u along direction θ.
fn ray_polynomials(c0: f64, c1: f64, theta: f64) -> (Quad, Quad) {
    let (s, c) = theta.sin_cos();
    let (c2, s2) = (c * c, s * s);
    let lead = c2 * s2;
    let a_n = Quad(lead, -(1.0 + c0 * s2 + c1 * c2), 1.0 + c0 + c1);
    let a_d = Quad(
        lead,
        -(1.0 + 2.0 * c0 * c1 * c * s + c0 * (c0 + 2.0) * s2 + c1 * (c1 + 2.0) * c2),
        (1.0 + c0 + c1) * (1.0 + c0 + c1),
    );
    (a_n, a_d)
}

/// Closed-form and strict eigenvalue stability at one point.
fn feasible_point(d: &DimensionlessParams) -> bool {
    let (_, a_d) = on_resonance_ratio(d.c0, d.c1, d.xi_m, d.xi_d);
    if a_d <= 0.0 {
        return false;
    }
    match stability_report(d) {
        Ok(r) => r.stable_closed_form && r.eigen.strictly_stable(),
        Err(_) => false,
    }
}

/// Smallest feasible r on ray θ with κ𝒜(0) = target.
fn solve_ray(d: &DimensionlessParams, target: f64, theta: f64) -> Option<(f64, f64, f64)> {
    let (a_n, a_d) = ray_polynomials(d.c0, d.c1, theta);
    let f = Quad(
        4.0 * a_n.0 - target * a_d.0,
        4.0 * a_n.1 - target * a_d.1,
        4.0 * a_n.2 - target * a_d.2,
    );
    let (s, c) = theta.sin_cos();
    for mut u in f.positive_roots() {
        // Newton polish against cancellation in the quadratic formula
        for _ in 0..3 {
            let fp = f.deriv(u);
            if fp == 0.0 {
                break;
            }
            let next = u - f.eval(u) / fp;
            if !(next.is_finite() && next > 0.0) {
                break;
            }
            u = next;
        }
        let r = u.sqrt();
        let (xi_m, xi_d) = (r * c, r * s);
        let (n, den) = on_resonance_ratio(d.c0, d.c1, xi_m, xi_d);
        let m = 4.0 * n / den;
        if (m - target).abs() > TARGET_TOL * target.abs().max(1.0) {
            continue;
        }
        if feasible_point(&d.with_paramps(xi_m, xi_d)) {
            return Some((xi_m, xi_d, m));
        }
    }
    None
}

fn better(a: (f64, f64, f64), b: (f64, f64, f64)) -> bool {
    let na = a.0.hypot(a.1);
    let nb = b.0.hypot(b.1);
    if (na - nb).abs() <= TIE_TOL {
        a.1 < b.1
    } else {
        na < nb
    }
}

/// Minimum-norm paramps (ξ_m, ξ_d) with κ𝒜(0) = `target_m` that pass both
/// stability tests. The paramps in `d` are ignored.
///
/// Rays through the origin are scanned on a fixed grid; on each ray the
/// equation 4A_N − target·A_D = 0 is a quadratic in r², so the roots are
/// exact. The best ray is then refined by golden-section search on the
/// neighbouring grid interval.
pub fn optimize_paramps(d: &DimensionlessParams, target_m: f64) -> Result<NegativityResult> {
    d.validate()?;
    if !(target_m.is_finite() && target_m < 0.0) {
        return Err(CpsfError::InvalidArgument(format!(
            "target negativity must be finite and < 0, got {target_m}"
        )));
    }
    let thetas: Vec<f64> = (0..RAY_COUNT)
        .map(|k| FRAC_PI_2 * k as f64 / (RAY_COUNT - 1) as f64)
        .collect();
    let per_ray: Vec<Option<(f64, f64, f64)>> = thetas
        .par_iter()
        .map(|&t| solve_ray(d, target_m, t))
        .collect();

    let mut best: Option<(usize, (f64, f64, f64))> = None;
    for (k, sol) in per_ray.iter().enumerate() {
        if let Some(s) = *sol {
            if best.is_none_or(|(_, b)| better(s, b)) {
                best = Some((k, s));
            }
        }
    }
    let Some((k, mut sol)) = best else {
        return Ok(NegativityResult::infeasible(target_m));
    };

    let lo = thetas[k.saturating_sub(1)];
    let hi = thetas[(k + 1).min(RAY_COUNT - 1)];
    if let Some(refined) = golden_refine(d, target_m, lo, hi) {
        if better(refined, sol) {
            sol = refined;
        }
    }
    Ok(NegativityResult {
        target_m,
        xi_m_opt: sol.0,
        xi_d_opt: sol.1,
        achieved_m: sol.2,
        feasible: true,
    })
}

fn golden_refine(
    d: &DimensionlessParams,
    target: f64,
    mut a: f64,
    mut b: f64,
) -> Option<(f64, f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let norm = |t: f64| {
        solve_ray(d, target, t).map_or(f64::INFINITY, |(x, y, _)| x.hypot(y))
    };
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (norm(x1), norm(x2));
    for _ in 0..80 {
        if b - a < 1e-13 {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = norm(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = norm(x2);
        }
    }
    let t = if f1 <= f2 { x1 } else { x2 };
    solve_ray(d, target, t)
}

/// Most negative κ𝒜(0) found on the scanned ray family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NegativityBound {
    pub m_max: f64,
    pub xi_m: f64,
    pub xi_d: f64,
}

/// Estimate of the maximum achievable negativity M_max.
///
/// On each ray the last strictly stable point before the first zero of A_D
/// is located by a coarse march followed by bisection; κ𝒜(0) there is taken
/// as the ray's extreme value. The estimate is only as good as the ray grid.
pub fn max_negativity(d: &DimensionlessParams) -> Result<NegativityBound> {
    d.validate()?;
    let cap = 10.0 * (1.0 + d.c0 + d.c1) + 10.0;
    let per_ray: Vec<Option<NegativityBound>> = (0..RAY_COUNT)
        .into_par_iter()
        .map(|k| {
            let theta = FRAC_PI_2 * k as f64 / (RAY_COUNT - 1) as f64;
            ray_extreme(d, theta, cap)
        })
        .collect();
    per_ray
        .into_iter()
        .flatten()
        .fold(None, |acc: Option<NegativityBound>, b| match acc {
            Some(a) if a.m_max <= b.m_max => Some(a),
            _ => Some(b),
        })
        .ok_or_else(|| CpsfError::InvalidArgument("no stable point found on any ray".into()))
}

fn ray_extreme(d: &DimensionlessParams, theta: f64, cap: f64) -> Option<NegativityBound> {
    let (s, c) = theta.sin_cos();
    let (_, a_d) = ray_polynomials(d.c0, d.c1, theta);
    let r_end = a_d
        .positive_roots()
        .first()
        .map_or(cap, |u| u.sqrt().min(cap));
    let ok = |r: f64| feasible_point(&d.with_paramps(r * c, r * s));
    if !ok(0.0) {
        return None;
    }
    const STEPS: usize = 64;
    let mut lo = 0.0;
    let mut hi = r_end;
    for k in 1..=STEPS {
        let r = r_end * k as f64 / STEPS as f64;
        if ok(r) {
            lo = r;
        } else {
            hi = r;
            break;
        }
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (n, den) = on_resonance_ratio(d.c0, d.c1, lo * c, lo * s);
    Some(NegativityBound {
        m_max: 4.0 * n / den,
        xi_m: lo * c,
        xi_d: lo * s,
    })
}
