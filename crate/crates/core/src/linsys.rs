//! Drift matrix of the linearized Langevin equations and the numeric
//! susceptibility χ(ω) = (−iωI − χ₀)⁻¹.
//!
//! This is the direct route: a 6×6 complex LU solve per frequency. The closed
//! forms in [`crate::response`] are checked against it.

use nalgebra::{Matrix6, Schur};
use serde::Serialize;

use crate::error::{CpsfError, Result};
use crate::params::SystemParams;
use crate::{Complex64, I};

/// Basis index of δa in u = (δa, δa†, δb, δb†, δd, δd†).
pub const A: usize = 0;
pub const A_DAG: usize = 1;
pub const B: usize = 2;
pub const B_DAG: usize = 3;
pub const D: usize = 4;
pub const D_DAG: usize = 5;

/// Condition estimate above which a solve is reported as near-singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

/// |max Re eig| below this (in units of κ) is reported as the stability boundary.
pub const BOUNDARY_TOL: f64 = 1e-9;

pub type CMatrix6 = Matrix6<Complex64>;

/// Drift matrix χ₀ in the basis (δa, δa†, δb, δb†, δd, δd†).
#[derive(Debug, Clone, PartialEq)]
pub struct DriftMatrix(pub CMatrix6);

impl DriftMatrix {
    pub fn build(p: &SystemParams) -> Self {
        let c = |x: f64| Complex64::new(x, 0.0);
        let (lm, ld) = (p.lambda_m_c(), p.lambda_d_c());
        let mut m = CMatrix6::zeros();
        m[(A, A)] = c(-p.kappa / 2.0);
        m[(A_DAG, A_DAG)] = c(-p.kappa / 2.0);
        m[(B, B)] = c(-p.gamma_m / 2.0);
        m[(B_DAG, B_DAG)] = c(-p.gamma_m / 2.0);
        m[(D, D)] = c(-p.gamma_d / 2.0);
        m[(D_DAG, D_DAG)] = c(-p.gamma_d / 2.0);

        m[(A, B)] = I * p.g;
        m[(A, D)] = I * p.big_g;
        m[(A_DAG, B_DAG)] = -I * p.g;
        m[(A_DAG, D_DAG)] = -I * p.big_g;

        m[(B, A)] = I * p.g;
        m[(B, B_DAG)] = lm;
        m[(B_DAG, A_DAG)] = -I * p.g;
        m[(B_DAG, B)] = lm.conj();

        m[(D, A)] = I * p.big_g;
        m[(D, D_DAG)] = ld;
        m[(D_DAG, A_DAG)] = -I * p.big_g;
        m[(D_DAG, D)] = ld.conj();
        Self(m)
    }

    /// Eigenvalues via complex Schur decomposition.
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        Schur::new(self.0)
            .eigenvalues()
            .expect("complex Schur form is triangular")
            .iter()
            .copied()
            .collect()
    }
}

/// Free-function form of [`DriftMatrix::build`].
pub fn build_drift(p: &SystemParams) -> DriftMatrix {
    DriftMatrix::build(p)
}

/// χ(ω) at one real frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct SusceptibilityMatrix {
    pub omega: f64,
    pub entries: CMatrix6,
    /// 1-norm condition number of −iωI − χ₀.
    pub condition: f64,
}

impl SusceptibilityMatrix {
    /// ‖(−iωI − χ₀)·χ − I‖_F.
    pub fn residual(&self, drift: &DriftMatrix) -> f64 {
        let lhs = resolvent_operator(drift, self.omega) * self.entries;
        (lhs - CMatrix6::identity()).norm()
    }

    /// Upper-left 2×2 cavity block [χ_aa, χ_aa†; χ_a†a, χ_a†a†].
    pub fn cavity_block(&self) -> nalgebra::Matrix2<Complex64> {
        self.entries.fixed_view::<2, 2>(0, 0).into_owned()
    }
}

fn resolvent_operator(drift: &DriftMatrix, omega: f64) -> CMatrix6 {
    CMatrix6::identity() * Complex64::new(0.0, -omega) - drift.0
}

fn norm1(m: &CMatrix6) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// χ(ω) = (−iωI − χ₀)⁻¹ for a prebuilt drift matrix.
pub fn susceptibility_from_drift(drift: &DriftMatrix, omega: f64) -> Result<SusceptibilityMatrix> {
    let op = resolvent_operator(drift, omega);
    let singular = |condition| CpsfError::NearSingular { omega, condition };
    let inv = op.lu().try_inverse().ok_or(singular(f64::INFINITY))?;
    let condition = norm1(&op) * norm1(&inv);
    if !condition.is_finite() || condition > SINGULAR_CONDITION {
        return Err(singular(condition));
    }
    Ok(SusceptibilityMatrix {
        omega,
        entries: inv,
        condition,
    })
}

pub fn susceptibility_numeric(p: &SystemParams, omega: f64) -> Result<SusceptibilityMatrix> {
    susceptibility_from_drift(&DriftMatrix::build(p), omega)
}

/// Eigenvalue stability of χ₀.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityVerdict {
    /// max Re(eig χ₀) < 0.
    pub stable: bool,
    /// |max Re(eig χ₀)| < [`BOUNDARY_TOL`]·κ.
    pub on_boundary: bool,
    pub max_real_part: f64,
}

impl StabilityVerdict {
    /// Stable and not within the boundary band.
    pub fn strictly_stable(&self) -> bool {
        self.stable && !self.on_boundary
    }
}

pub fn eigen_stability(p: &SystemParams) -> StabilityVerdict {
    let max_real_part = DriftMatrix::build(p)
        .eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    StabilityVerdict {
        stable: max_real_part < 0.0,
        on_boundary: max_real_part.abs() < BOUNDARY_TOL * p.kappa,
        max_real_part,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::DimensionlessParams;

    fn decoupled() -> SystemParams {
        SystemParams::new(1.0, 0.3, 0.1, 0.0, 0.0, 0.0, 0.0).unwrap()
    }

    fn operating_point() -> SystemParams {
        DimensionlessParams::new(2.0, 0.25, 1.390, 0.931, 1e4, 1.0)
            .unwrap()
            .to_system()
            .unwrap()
    }

    #[test]
    fn decoupled_drift_is_diagonal() {
        let p = decoupled();
        let m = build_drift(&p).0;
        let diag = [-0.5, -0.5, -0.15, -0.15, -0.05, -0.05];
        for i in 0..6 {
            for j in 0..6 {
                let want = if i == j { diag[i] } else { 0.0 };
                assert_eq!(m[(i, j)], Complex64::new(want, 0.0));
            }
        }
    }

    #[test]
    fn drift_layout_matches_documented_positions() {
        let p = operating_point();
        let m = build_drift(&p).0;
        // (row, col) 1-based: (3,1) = ig, (3,4) = λ_m, (5,6) = λ_d
        assert_eq!(m[(2, 0)], I * p.g);
        assert_eq!(m[(2, 3)], Complex64::new(p.lambda_m, 0.0));
        assert_eq!(m[(4, 5)], Complex64::new(p.lambda_d, 0.0));
        assert_eq!(m[(0, 2)], I * p.g);
        assert_eq!(m[(1, 5)], -I * p.big_g);
        assert_eq!(m[(3, 1)], -I * p.g);
        assert_eq!(m[(5, 4)], Complex64::new(p.lambda_d, 0.0));
        let nonzero = m.iter().filter(|z| **z != Complex64::new(0.0, 0.0)).count();
        assert_eq!(nonzero, 6 + 8 + 4);
        // entries are exactly the from_dimensionless outputs
        let q = DimensionlessParams::new(2.0, 0.25, 1.390, 0.931, 1e4, 1.0)
            .unwrap()
            .to_system()
            .unwrap();
        assert_eq!(m, build_drift(&q).0);
        assert_eq!(m[(2, 2)].re, -q.gamma_m / 2.0);
    }

    #[test]
    fn decoupled_susceptibility_is_lorentzian() {
        let p = decoupled();
        for &w in &[-3.0, -0.2, 0.0, 0.7, 4.0] {
            let chi = susceptibility_numeric(&p, w).unwrap();
            let want = Complex64::new(1.0, 0.0) / Complex64::new(0.5, -w);
            assert!((chi.entries[(0, 0)] - want).norm() < 1e-15);
            for j in 1..6 {
                assert_eq!(chi.entries[(0, j)], Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn residual_is_small() {
        let p = operating_point();
        let drift = build_drift(&p);
        for &w in &[-1.0, -1e-4, 0.0, 3e-5, 0.5] {
            let chi = susceptibility_from_drift(&drift, w).unwrap();
            assert!(chi.residual(&drift) < 1e-10, "{}", chi.residual(&drift));
        }
    }

    #[test]
    fn no_modulation_on_resonance_value() {
        let p = DimensionlessParams::new(2.0, 0.0, 0.0, 0.0, 1e4, 1.0)
            .unwrap()
            .to_system()
            .unwrap();
        let chi = susceptibility_numeric(&p, 0.0).unwrap();
        let a0 = -2.0 * (-I * chi.entries[(0, 0)]).im;
        assert!((a0 - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn operating_point_is_negative_on_resonance() {
        let chi = susceptibility_numeric(&operating_point(), 0.0).unwrap();
        let m = -2.0 * (-I * chi.entries[(0, 0)]).im;
        assert!((m + 3.0).abs() < 0.1, "{m}");
    }

    #[test]
    fn singular_operator_is_reported() {
        // single oscillator exactly at the boundary: zero eigenvalue at ω = 0
        let p = DimensionlessParams::new(2.0, 0.0, 3.0, 0.0, 1e4, 1.0)
            .unwrap()
            .to_system()
            .unwrap();
        assert!(matches!(
            susceptibility_numeric(&p, 0.0),
            Err(CpsfError::NearSingular { .. })
        ));
    }

    #[test]
    fn eigen_stability_examples() {
        let v = eigen_stability(&decoupled());
        assert!(v.stable && !v.on_boundary);
        assert!((v.max_real_part + 0.05).abs() < 1e-15);

        let p = DimensionlessParams::new(2.0, 0.0, 3.0, 0.0, 1e4, 1.0)
            .unwrap()
            .to_system()
            .unwrap();
        let v = eigen_stability(&p);
        assert!(v.max_real_part.abs() < 1e-8, "{}", v.max_real_part);
        assert!(v.on_boundary);

        let v = eigen_stability(&operating_point());
        assert!(v.stable && v.strictly_stable());
    }

    #[test]
    fn spectrum_closed_under_conjugation() {
        let e = build_drift(&operating_point()).eigenvalues();
        for z in &e {
            let nearest = e
                .iter()
                .map(|w| (z.conj() - w).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(nearest < 1e-12);
        }
    }
}
