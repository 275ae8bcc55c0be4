//! C ABI for `cpsf-core`.
//!
//! Models are opaque handles created by `cpsf_model_new_*` and released with
//! [`cpsf_model_free`]. Every call returns a [`CpsfStatus`]; on failure the
//! message is available from [`cpsf_last_error_message`] on the same thread
//! until the next failing call. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use cpsf_core::noise::{self, BathOccupations};
use cpsf_core::opa::{self, OpaParams};
use cpsf_core::{response, stability, CpsfError, DimensionlessParams, SystemParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpsfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    /// Pole, near-singular solve or vanishing denominator.
    Numerical = 3,
    Unstable = 4,
    Panic = 5,
}

/// Opaque model handle.
pub struct CpsfModel {
    system: SystemParams,
    dimensionless: DimensionlessParams,
}

/// Dimensional parameters; `lambda_*` are moduli and `phi_*` phases.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CpsfSystemParams {
    pub kappa: f64,
    pub gamma_m: f64,
    pub gamma_d: f64,
    pub g: f64,
    pub big_g: f64,
    pub lambda_m: f64,
    pub lambda_d: f64,
    pub phi_m: f64,
    pub phi_d: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CpsfGreens {
    pub omega: f64,
    pub g_ret_aad_re: f64,
    pub g_ret_aad_im: f64,
    pub g_ret_aa_re: f64,
    pub g_ret_aa_im: f64,
    pub cpsf: f64,
    pub kappa_eff: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CpsfOnResonance {
    pub c_a: f64,
    pub c_a_prime: f64,
    pub c_a_dprime: f64,
    /// κ𝒜(0)
    pub m: f64,
    pub kappa_eff_ratio: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CpsfStability {
    pub c_m: f64,
    pub c_d: f64,
    pub xi_m_max: f64,
    pub xi_d_max: f64,
    pub margin: f64,
    pub max_real_part: f64,
    pub stable_closed_form: bool,
    pub stable_eigen: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CpsfOptimum {
    pub xi_m: f64,
    pub xi_d: f64,
    pub achieved_m: f64,
    pub feasible: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CpsfKeldysh {
    /// −iG^k(ω)
    pub keldysh: f64,
    pub cpsf: f64,
    pub ratio: f64,
    /// NaN unless `t_eff_defined`.
    pub t_eff: f64,
    pub t_eff_defined: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &CpsfError) -> CpsfStatus {
    match e {
        CpsfError::InvalidParameter { .. }
        | CpsfError::InvalidArgument(_)
        | CpsfError::DetunedMechanics { .. }
        | CpsfError::CriticalModulation { .. } => CpsfStatus::InvalidParameter,
        CpsfError::Unstable { .. } => CpsfStatus::Unstable,
        CpsfError::NearSingular { .. }
        | CpsfError::PoleProximity { .. }
        | CpsfError::VanishingDenominator(_) => CpsfStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (CpsfStatus, String)>) -> CpsfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CpsfStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CpsfStatus::Panic
        }
    }
}

fn core_err(e: CpsfError) -> (CpsfStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (CpsfStatus, String) {
    (CpsfStatus::NullPointer, format!("{what} is null"))
}

unsafe fn model_ref<'a>(m: *const CpsfModel) -> Result<&'a CpsfModel, (CpsfStatus, String)> {
    m.as_ref().ok_or_else(|| null("model"))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), (CpsfStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

/// Creates a model in κ = 1 units from cooperativities and paramps.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn cpsf_model_new_dimensionless(
    c0: f64,
    c1: f64,
    xi_m: f64,
    xi_d: f64,
    kappa_over_gamma_m: f64,
    gamma_ratio: f64,
    out: *mut *mut CpsfModel,
) -> CpsfStatus {
    guard(|| {
        let d = DimensionlessParams::new(c0, c1, xi_m, xi_d, kappa_over_gamma_m, gamma_ratio)
            .map_err(core_err)?;
        let system = d.to_system().map_err(core_err)?;
        let model = Box::new(CpsfModel {
            system,
            dimensionless: d,
        });
        write_out(out, Box::into_raw(model))
    })
}

/// Creates a model from dimensional parameters.
///
/// # Safety
/// `params` must point to a valid struct and `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn cpsf_model_new_system(
    params: *const CpsfSystemParams,
    out: *mut *mut CpsfModel,
) -> CpsfStatus {
    guard(|| {
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        let system = SystemParams::new(
            p.kappa, p.gamma_m, p.gamma_d, p.g, p.big_g, p.lambda_m, p.lambda_d,
        )
        .map_err(core_err)?
        .with_phases(p.phi_m, p.phi_d);
        system.validate().map_err(core_err)?;
        let dimensionless = system.to_dimensionless().map_err(core_err)?;
        write_out(
            out,
            Box::into_raw(Box::new(CpsfModel {
                system,
                dimensionless,
            })),
        )
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from a `cpsf_model_new_*` call and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cpsf_model_free(model: *mut CpsfModel) {
    if !model.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(model))));
    }
}

/// Retarded Green's functions, CPSF and effective damping at one frequency.
///
/// # Safety
/// `model` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn cpsf_greens(
    model: *const CpsfModel,
    omega: f64,
    out: *mut CpsfGreens,
) -> CpsfStatus {
    guard(|| {
        let m = model_ref(model)?;
        let g = response::greens(&m.system, omega).map_err(core_err)?;
        write_out(
            out,
            CpsfGreens {
                omega,
                g_ret_aad_re: g.g_ret_aad.re,
                g_ret_aad_im: g.g_ret_aad.im,
                g_ret_aa_re: g.g_ret_aa.re,
                g_ret_aa_im: g.g_ret_aa.im,
                cpsf: g.cpsf,
                kappa_eff: g.kappa_eff,
            },
        )
    })
}

/// 𝒜(ω) at `n` frequencies, written to `cpsf_out[0..n]`.
///
/// # Safety
/// `omegas` must be readable and `cpsf_out` writable for `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn cpsf_spectrum(
    model: *const CpsfModel,
    omegas: *const f64,
    n: usize,
    cpsf_out: *mut f64,
) -> CpsfStatus {
    guard(|| {
        let m = model_ref(model)?;
        if n == 0 {
            return Ok(());
        }
        if omegas.is_null() {
            return Err(null("omegas"));
        }
        if cpsf_out.is_null() {
            return Err(null("cpsf_out"));
        }
        let w = std::slice::from_raw_parts(omegas, n);
        let samples = response::greens_sweep(&m.system, w).map_err(core_err)?;
        let out = std::slice::from_raw_parts_mut(cpsf_out, n);
        for (o, s) in out.iter_mut().zip(samples) {
            *o = s.cpsf;
        }
        Ok(())
    })
}

/// On-resonance cooperativity algebra.
///
/// # Safety
/// `model` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn cpsf_on_resonance(
    model: *const CpsfModel,
    out: *mut CpsfOnResonance,
) -> CpsfStatus {
    guard(|| {
        let m = model_ref(model)?;
        let a = response::cpsf_on_resonance(&m.dimensionless).map_err(core_err)?;
        write_out(
            out,
            CpsfOnResonance {
                c_a: a.c_a,
                c_a_prime: a.c_a_prime,
                c_a_dprime: a.c_a_dprime,
                m: a.m_negativity,
                kappa_eff_ratio: a.kappa_eff_ratio(),
            },
        )
    })
}

/// Closed-form and eigenvalue stability.
///
/// # Safety
/// `model` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn cpsf_stability(
    model: *const CpsfModel,
    out: *mut CpsfStability,
) -> CpsfStatus {
    guard(|| {
        let m = model_ref(model)?;
        let r = stability::stability_report(&m.dimensionless).map_err(core_err)?;
        write_out(
            out,
            CpsfStability {
                c_m: r.c_m,
                c_d: r.c_d,
                xi_m_max: r.xi_m_max,
                xi_d_max: r.xi_d_max,
                margin: r.margin,
                max_real_part: r.eigen.max_real_part,
                stable_closed_form: r.stable_closed_form,
                stable_eigen: r.stable_eigen,
            },
        )
    })
}

/// Minimum-norm stable paramps with κ𝒜(0) = `target_m`. An unreachable
/// target returns `Ok` with `feasible = false`.
///
/// # Safety
/// `model` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn cpsf_optimize(
    model: *const CpsfModel,
    target_m: f64,
    out: *mut CpsfOptimum,
) -> CpsfStatus {
    guard(|| {
        let m = model_ref(model)?;
        let r = stability::optimize_paramps(&m.dimensionless, target_m).map_err(core_err)?;
        write_out(
            out,
            CpsfOptimum {
                xi_m: r.xi_m_opt,
                xi_d: r.xi_d_opt,
                achieved_m: r.achieved_m,
                feasible: r.feasible,
            },
        )
    })
}

/// Keldysh function and effective temperature for thermal baths.
///
/// # Safety
/// `model` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn cpsf_keldysh(
    model: *const CpsfModel,
    n_c: f64,
    n_m: f64,
    n_d: f64,
    omega: f64,
    out: *mut CpsfKeldysh,
) -> CpsfStatus {
    guard(|| {
        let m = model_ref(model)?;
        let b = BathOccupations::new(n_c, n_m, n_d).map_err(core_err)?;
        let k = noise::keldysh_and_teff(&m.system, &b, omega).map_err(core_err)?;
        write_out(
            out,
            CpsfKeldysh {
                keldysh: k.g_keldysh.im,
                cpsf: k.cpsf,
                ratio: k.ratio,
                t_eff: k.t_eff.unwrap_or(f64::NAN),
                t_eff_defined: k.t_eff.is_some(),
            },
        )
    })
}

/// Spectral function a(ω) and F(ω) of a stable detuned parametric amplifier.
///
/// # Safety
/// `a_out` and `f_out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn cpsf_opa_cpsf(
    kappa: f64,
    lambda: f64,
    delta_p: f64,
    omega: f64,
    a_out: *mut f64,
    f_out: *mut f64,
) -> CpsfStatus {
    guard(|| {
        let o = OpaParams::new(kappa, lambda, delta_p).map_err(core_err)?;
        let s = opa::opa_cpsf(&o, omega).map_err(core_err)?;
        write_out(a_out, s.a)?;
        write_out(f_out, s.f)
    })
}

/// Message of the last failing call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cpsf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cpsf_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}
