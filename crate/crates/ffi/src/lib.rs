//! C ABI for sivtool.
//!
//! Model objects cross the boundary as opaque handles created by `*_new`
//! and released by the matching `*_free`. Every fallible call returns a
//! [`SivtoolStatus`]; the message of the most recent failure on the calling
//! thread is available from [`sivtool_last_error`]. Panics never unwind
//! into C.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use sivtool::ctl::{transition_level, ChargeStateRecord};
use sivtool::schrodinger::{tunneling_splitting, PotentialCurve, SolveOptions};
use sivtool::spectro::{hf_levels, linear_calibration, radiative_rate, RadiativeInput};
use sivtool::units::{AxisKind, PjtParams, StrainLabel, StrainSeries};
use sivtool::vibronic::observables::{ham_factors, jt_energies, solve_spectrum, vibronic_gap, VibronicConfig};
use sivtool::Error;

/// Result codes. Values 2 and 3 match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SivtoolStatus {
    Ok = 0,
    NullPointer = 1,
    Validation = 2,
    NonConvergence = 3,
    Domain = 4,
    Panic = 5,
}

/// Opaque product Jahn-Teller parameter set.
pub struct SivtoolParams(PjtParams);

/// Opaque sampled 1D potential.
pub struct SivtoolPotential(PotentialCurve);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SivtoolStatus {
    match e {
        _ if e.is_numerical() => SivtoolStatus::NonConvergence,
        Error::Domain(_) | Error::MissingLabel(_) | Error::BoundaryDecay { .. } => SivtoolStatus::Domain,
        _ => SivtoolStatus::Validation,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), SivtoolStatusOr>) -> SivtoolStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SivtoolStatus::Ok,
        Ok(Err(SivtoolStatusOr::Null(what))) => {
            set_error(format!("null pointer passed for `{what}`"));
            SivtoolStatus::NullPointer
        }
        Ok(Err(SivtoolStatusOr::Lib(e))) => {
            let s = status_of(&e);
            set_error(e.to_string());
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            SivtoolStatus::Panic
        }
    }
}

enum SivtoolStatusOr {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for SivtoolStatusOr {
    fn from(e: Error) -> Self {
        SivtoolStatusOr::Lib(e)
    }
}

fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, SivtoolStatusOr> {
    // SAFETY: the caller guarantees that a non-null `p` is valid for writes.
    unsafe { p.as_mut() }.ok_or(SivtoolStatusOr::Null(what))
}

fn input<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, SivtoolStatusOr> {
    // SAFETY: the caller guarantees that a non-null `p` points to a live value.
    unsafe { p.as_ref() }.ok_or(SivtoolStatusOr::Null(what))
}

fn slice<'a>(p: *const f64, n: usize, what: &'static str) -> Result<&'a [f64], SivtoolStatusOr> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(SivtoolStatusOr::Null(what));
    }
    // SAFETY: the caller guarantees `n` readable values at `p`.
    Ok(unsafe { std::slice::from_raw_parts(p, n) })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sivtool_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (truncated,
/// always NUL-terminated) and returns the full message length in bytes,
/// or 0 when no error has been recorded.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn sivtool_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            // SAFETY: `buf` holds at least `len` bytes per the contract.
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Creates a parameter set labeled by pressure in GPa. Energies in meV.
///
/// # Safety
/// `out_params` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sivtool_params_new(
    pressure_gpa: f64,
    f_g: f64,
    f_u: f64,
    hbar_omega: f64,
    lambda: f64,
    xi: f64,
    out_params: *mut *mut SivtoolParams,
) -> SivtoolStatus {
    guard(|| {
        let slot = out(out_params, "out_params")?;
        let p = PjtParams::new(StrainLabel::PressureGpa(pressure_gpa), f_g, f_u, hbar_omega, lambda, xi)?;
        *slot = Box::into_raw(Box::new(SivtoolParams(p)));
        Ok(())
    })
}

/// Releases a parameter set; null is ignored.
///
/// # Safety
/// `params` must come from [`sivtool_params_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sivtool_params_free(params: *mut SivtoolParams) {
    if !params.is_null() {
        // SAFETY: ownership returns from the caller per the contract.
        drop(unsafe { Box::from_raw(params) });
    }
}

/// Closed-form Jahn-Teller stabilization energies (meV).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sivtool_jt_energies(
    params: *const SivtoolParams,
    out_e_jt1: *mut f64,
    out_e_jt2: *mut f64,
) -> SivtoolStatus {
    guard(|| {
        let p = input(params, "params")?;
        let (a, b) = jt_energies(&p.0);
        *out(out_e_jt1, "out_e_jt1")? = a.0;
        *out(out_e_jt2, "out_e_jt2")? = b.0;
        Ok(())
    })
}

/// Dark-bright vibronic gap (meV) and Ham factors from a truncated
/// diagonalization with `n_max` bosons and `k` eigenpairs.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sivtool_vibronic_gap(
    params: *const SivtoolParams,
    n_max: usize,
    k: usize,
    tol: f64,
    out_delta_mev: *mut f64,
    out_p_u: *mut f64,
    out_p_g: *mut f64,
) -> SivtoolStatus {
    guard(|| {
        let p = input(params, "params")?;
        let cfg = VibronicConfig {
            n_max,
            k,
            tol,
            ..VibronicConfig::default()
        };
        let (spec, _) = solve_spectrum(&p.0, &cfg)?;
        let delta = vibronic_gap(&spec)?;
        let ham = ham_factors(&spec)?;
        *out(out_delta_mev, "out_delta_mev")? = delta.0;
        *out(out_p_u, "out_p_u")? = ham.p_u;
        *out(out_p_g, "out_p_g")? = ham.p_g;
        Ok(())
    })
}

/// Builds a potential from `n` uniform samples (Angstrom sqrt(amu), meV).
///
/// # Safety
/// `q` and `v` must hold `n` values; `out_potential` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sivtool_potential_new(
    q: *const f64,
    v: *const f64,
    n: usize,
    mass_amu: f64,
    out_potential: *mut *mut SivtoolPotential,
) -> SivtoolStatus {
    guard(|| {
        let slot = out(out_potential, "out_potential")?;
        let curve = PotentialCurve::new(slice(q, n, "q")?.to_vec(), slice(v, n, "v")?.to_vec())?.with_mass(mass_amu)?;
        *slot = Box::into_raw(Box::new(SivtoolPotential(curve)));
        Ok(())
    })
}

/// Releases a potential; null is ignored.
///
/// # Safety
/// `potential` must come from [`sivtool_potential_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sivtool_potential_free(potential: *mut SivtoolPotential) {
    if !potential.is_null() {
        // SAFETY: ownership returns from the caller per the contract.
        drop(unsafe { Box::from_raw(potential) });
    }
}

/// Tunneling splitting (meV) and rate (GHz) of a symmetric double well.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sivtool_tunneling_splitting(
    potential: *const SivtoolPotential,
    out_delta_mev: *mut f64,
    out_nu_ghz: *mut f64,
) -> SivtoolStatus {
    guard(|| {
        let v = input(potential, "potential")?;
        let t = tunneling_splitting(&v.0, &SolveOptions::default())?;
        *out(out_delta_mev, "out_delta_mev")? = t.delta_e_mev;
        *out(out_nu_ghz, "out_nu_ghz")? = t.nu_ghz;
        Ok(())
    })
}

/// Radiative rate (1/s) and lifetime (ns; +infinity for a zero dipole).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sivtool_radiative_rate(
    e_zpl_ev: f64,
    refractive_index: f64,
    mu_debye: f64,
    out_gamma: *mut f64,
    out_tau_ns: *mut f64,
) -> SivtoolStatus {
    guard(|| {
        let r = radiative_rate(&RadiativeInput::new(e_zpl_ev, refractive_index, mu_debye)?)?;
        *out(out_gamma, "out_gamma")? = r.gamma;
        *out(out_tau_ns, "out_tau_ns")? = r.tau_ns.unwrap_or(f64::INFINITY);
        Ok(())
    })
}

/// Six zero-field hyperfine levels (MHz, ascending) for S = 1, I = 1/2.
///
/// # Safety
/// `out_levels` must be valid for 6 writes.
#[no_mangle]
pub unsafe extern "C" fn sivtool_hf_levels(a_par: f64, a_perp: f64, out_levels: *mut f64) -> SivtoolStatus {
    guard(|| {
        if out_levels.is_null() {
            return Err(SivtoolStatusOr::Null("out_levels"));
        }
        let l = hf_levels(a_par, a_perp);
        // SAFETY: six writable values per the contract.
        unsafe { std::ptr::copy_nonoverlapping(l.energies.as_ptr(), out_levels, 6) };
        Ok(())
    })
}

/// Ordinary least squares over `n` points.
///
/// # Safety
/// `x` and `y` must hold `n` values; outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn sivtool_linear_calibration(
    x: *const f64,
    y: *const f64,
    n: usize,
    out_slope: *mut f64,
    out_intercept: *mut f64,
    out_r_squared: *mut f64,
) -> SivtoolStatus {
    guard(|| {
        let pts = slice(x, n, "x")?.iter().copied().zip(slice(y, n, "y")?.iter().copied()).collect();
        let c = linear_calibration(&StrainSeries::new(AxisKind::PressureGpa, "", pts)?)?;
        *out(out_slope, "out_slope")? = c.slope;
        *out(out_intercept, "out_intercept")? = c.intercept;
        *out(out_r_squared, "out_r_squared")? = c.r_squared;
        Ok(())
    })
}

/// Charge transition level (eV above the VBM) between charges q_a and q_b.
///
/// # Safety
/// `out_level` must be valid.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn sivtool_transition_level(
    q_a: i32,
    e_tot_a: f64,
    e_el_a: f64,
    delta_v_a: f64,
    q_b: i32,
    e_tot_b: f64,
    e_el_b: f64,
    delta_v_b: f64,
    e_vbm: f64,
    out_level: *mut f64,
) -> SivtoolStatus {
    guard(|| {
        let a = ChargeStateRecord::new(q_a, e_tot_a, e_el_a, delta_v_a)?;
        let b = ChargeStateRecord::new(q_b, e_tot_b, e_el_b, delta_v_b)?;
        *out(out_level, "out_level")? = transition_level(&a, &b, e_vbm)?;
        Ok(())
    })
}
