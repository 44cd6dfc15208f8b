//! C ABI over the memoheat core: kernels, mode solves, spectra, and
//! Laplace-domain symbols behind opaque handles with status-code errors.
//!
//! Conventions:
//! * Constructors write a heap handle through an out-pointer and return
//!   [`MhStatus::Ok`]; every other status leaves out-pointers untouched.
//! * Each `*_free` accepts null (no-op). Handles must be freed exactly once
//!   with their own `*_free` function.
//! * All functions are panic-safe: a caught panic maps to
//!   [`MhStatus::Internal`].

use std::panic::{catch_unwind, AssertUnwindSafe};

use memoheat::error::Error;
use memoheat::kernel::Kernel;
use memoheat::laplace::{symbol, SymbolKind};
use memoheat::modes::{solve_mode, Method, ModeForcing, ModeTrajectory, TimeGrid};
use memoheat::num_complex::Complex64;
use memoheat::spectrum::{compute_spectrum, SpectrumResult};

/// Status code of every fallible API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MhStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Validation = 3,
    PoleHit = 4,
    SpectrumPoint = 5,
    SolverFailure = 6,
    NotCertified = 7,
    Internal = 8,
}

/// Which time-domain scheme `mh_solve_mode` uses.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MhMethod {
    Ode = 0,
    Volterra = 1,
}

/// Laplace-domain symbol selector for `mh_symbol`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MhSymbol {
    G = 0,
    G0 = 1,
    InvG = 2,
    InvG0 = 3,
    Theta = 4,
    D = 5,
}

/// Opaque validated kernel handle.
pub struct MhKernel(Kernel);

/// Opaque solved-mode handle.
pub struct MhTrajectory(ModeTrajectory);

/// Opaque certified-spectrum handle.
pub struct MhSpectrum(SpectrumResult);

fn status_of(err: &Error) -> MhStatus {
    match err {
        Error::EmptyKernel
        | Error::LengthMismatch { .. }
        | Error::NegativeAmplitude { .. }
        | Error::NonIncreasingRates { .. }
        | Error::BadGenerator { .. } => MhStatus::Validation,
        Error::NegativeTime(_) | Error::BadOrder(_) | Error::BadGrid { .. } => {
            MhStatus::InvalidArgument
        }
        Error::PoleHit { .. } | Error::PoleOnLine { .. } => MhStatus::PoleHit,
        Error::SpectrumPointHit { .. } => MhStatus::SpectrumPoint,
        Error::RootsNotCertified { .. } => MhStatus::NotCertified,
        _ => MhStatus::SolverFailure,
    }
}

fn guarded<F: FnOnce() -> MhStatus>(f: F) -> MhStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(MhStatus::Internal)
}

/// Human-readable description of a status code (static storage).
#[no_mangle]
pub extern "C" fn mh_status_message(status: MhStatus) -> *const core::ffi::c_char {
    let msg: &'static [u8] = match status {
        MhStatus::Ok => b"ok\0",
        MhStatus::NullPointer => b"null pointer argument\0",
        MhStatus::InvalidArgument => b"invalid argument\0",
        MhStatus::Validation => b"kernel validation failed\0",
        MhStatus::PoleHit => b"evaluation point hits a kernel pole\0",
        MhStatus::SpectrumPoint => b"evaluation point is a spectrum point\0",
        MhStatus::SolverFailure => b"solver failure\0",
        MhStatus::NotCertified => b"root residuals exceed the certification tolerance\0",
        MhStatus::Internal => b"internal error\0",
    };
    msg.as_ptr() as *const core::ffi::c_char
}

/// Builds a validated kernel from `len` amplitude/rate pairs.
///
/// # Safety
/// `amplitudes` and `rates` must point to `len` readable doubles and
/// `out` to a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn mh_kernel_new(
    amplitudes: *const f64,
    rates: *const f64,
    len: usize,
    out: *mut *mut MhKernel,
) -> MhStatus {
    if amplitudes.is_null() || rates.is_null() || out.is_null() {
        return MhStatus::NullPointer;
    }
    let a = std::slice::from_raw_parts(amplitudes, len).to_vec();
    let b = std::slice::from_raw_parts(rates, len).to_vec();
    guarded(|| match Kernel::new(a, b) {
        Ok(kernel) => {
            *out = Box::into_raw(Box::new(MhKernel(kernel)));
            MhStatus::Ok
        }
        Err(e) => status_of(&e),
    })
}

/// Frees a kernel handle; accepts null.
///
/// # Safety
/// `kernel` must come from `mh_kernel_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mh_kernel_free(kernel: *mut MhKernel) {
    if !kernel.is_null() {
        drop(Box::from_raw(kernel));
    }
}

/// Number of exponential terms M.
///
/// # Safety
/// `kernel` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mh_kernel_len(kernel: *const MhKernel) -> usize {
    if kernel.is_null() {
        return 0;
    }
    (*kernel).0.len()
}

/// k(t) = Σ aₖ e^{−bₖt}.
///
/// # Safety
/// `kernel` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mh_kernel_eval_k(
    kernel: *const MhKernel,
    t: f64,
    out: *mut f64,
) -> MhStatus {
    if kernel.is_null() || out.is_null() {
        return MhStatus::NullPointer;
    }
    guarded(|| match (*kernel).0.eval_k(t) {
        Ok(v) => {
            *out = v;
            MhStatus::Ok
        }
        Err(e) => status_of(&e),
    })
}

/// q(t) = ∫₀ᵗ k.
///
/// # Safety
/// `kernel` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mh_kernel_eval_q(
    kernel: *const MhKernel,
    t: f64,
    out: *mut f64,
) -> MhStatus {
    if kernel.is_null() || out.is_null() {
        return MhStatus::NullPointer;
    }
    guarded(|| match (*kernel).0.eval_q(t) {
        Ok(v) => {
            *out = v;
            MhStatus::Ok
        }
        Err(e) => status_of(&e),
    })
}

/// Moment sums α = Σaₖ, β = Σaₖbₖ, γ = Σaₖbₖ², and Σaₖ/bₖ (+∞ when a
/// zero-rate term carries amplitude). Any out-pointer may be null.
///
/// # Safety
/// `kernel` must be a live handle; non-null out-pointers writable.
#[no_mangle]
pub unsafe extern "C" fn mh_kernel_moments(
    kernel: *const MhKernel,
    alpha: *mut f64,
    beta: *mut f64,
    gamma: *mut f64,
    c0_sum: *mut f64,
) -> MhStatus {
    if kernel.is_null() {
        return MhStatus::NullPointer;
    }
    let m = (*kernel).0.moments();
    if !alpha.is_null() {
        *alpha = m.alpha;
    }
    if !beta.is_null() {
        *beta = m.beta;
    }
    if !gamma.is_null() {
        *gamma = m.gamma;
    }
    if !c0_sum.is_null() {
        *c0_sum = m.c0_sum;
    }
    MhStatus::Ok
}

/// K(z) = Σ aₖ/(z+bₖ) at z = re + i·im.
///
/// # Safety
/// `kernel` must be a live handle; `out_re`, `out_im` writable.
#[no_mangle]
pub unsafe extern "C" fn mh_kernel_laplace(
    kernel: *const MhKernel,
    re: f64,
    im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> MhStatus {
    if kernel.is_null() || out_re.is_null() || out_im.is_null() {
        return MhStatus::NullPointer;
    }
    guarded(|| match (*kernel).0.laplace(Complex64::new(re, im)) {
        Ok(v) => {
            *out_re = v.re;
            *out_im = v.im;
            MhStatus::Ok
        }
        Err(e) => status_of(&e),
    })
}

/// Laplace-domain symbol (G, G⁰, their reciprocals, Θ for unit datum, or D)
/// for mode n at z = re + i·im.
///
/// # Safety
/// `kernel` must be a live handle; `out_re`, `out_im` writable.
#[no_mangle]
pub unsafe extern "C" fn mh_symbol(
    kernel: *const MhKernel,
    n: u32,
    kind: MhSymbol,
    re: f64,
    im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> MhStatus {
    if kernel.is_null() || out_re.is_null() || out_im.is_null() {
        return MhStatus::NullPointer;
    }
    let kind = match kind {
        MhSymbol::G => SymbolKind::G,
        MhSymbol::G0 => SymbolKind::G0,
        MhSymbol::InvG => SymbolKind::InvG,
        MhSymbol::InvG0 => SymbolKind::InvG0,
        MhSymbol::Theta => SymbolKind::Theta,
        MhSymbol::D => SymbolKind::D,
    };
    guarded(
        || match symbol(&(*kernel).0, n, Complex64::new(re, im), kind) {
            Ok(v) => {
                *out_re = v.re;
                *out_im = v.im;
                MhStatus::Ok
            }
            Err(e) => status_of(&e),
        },
    )
}

/// Solves one mode with zero forcing on the uniform grid [0, t_end] and
/// returns a trajectory handle.
///
/// # Safety
/// `kernel` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mh_solve_mode(
    kernel: *const MhKernel,
    n: u32,
    xi_n: f64,
    t_end: f64,
    step: f64,
    method: MhMethod,
    out: *mut *mut MhTrajectory,
) -> MhStatus {
    if kernel.is_null() || out.is_null() {
        return MhStatus::NullPointer;
    }
    let method = match method {
        MhMethod::Ode => Method::Ode,
        MhMethod::Volterra => Method::Volterra,
    };
    guarded(|| {
        let grid = match TimeGrid::new(t_end, step) {
            Ok(g) => g,
            Err(e) => return status_of(&e),
        };
        match solve_mode(&(*kernel).0, n, xi_n, &ModeForcing::Zero, &grid, method) {
            Ok(traj) => {
                *out = Box::into_raw(Box::new(MhTrajectory(traj)));
                MhStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Number of samples (grid points) in a trajectory.
///
/// # Safety
/// `traj` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mh_trajectory_len(traj: *const MhTrajectory) -> usize {
    if traj.is_null() {
        return 0;
    }
    (*traj).0.theta().len()
}

/// Whether the solve satisfied the n·√α·step resolution certificate.
///
/// # Safety
/// `traj` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mh_trajectory_step_certified(traj: *const MhTrajectory) -> bool {
    if traj.is_null() {
        return false;
    }
    (*traj).0.step_certified
}

/// Copies up to `cap` samples of t, θ, θ' into the caller's buffers (any of
/// which may be null to skip) and returns the number written.
///
/// # Safety
/// `traj` must be a live handle; non-null buffers must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn mh_trajectory_copy(
    traj: *const MhTrajectory,
    t_out: *mut f64,
    theta_out: *mut f64,
    theta_dot_out: *mut f64,
    cap: usize,
) -> usize {
    if traj.is_null() {
        return 0;
    }
    let traj = &(*traj).0;
    let len = traj.theta().len().min(cap);
    for j in 0..len {
        if !t_out.is_null() {
            *t_out.add(j) = traj.grid().time(j);
        }
        if !theta_out.is_null() {
            *theta_out.add(j) = traj.theta()[j];
        }
        if !theta_dot_out.is_null() {
            *theta_dot_out.add(j) = traj.theta_dot()[j];
        }
    }
    len
}

/// Frees a trajectory handle; accepts null.
///
/// # Safety
/// `traj` must come from `mh_solve_mode` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mh_trajectory_free(traj: *mut MhTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Computes the certified spectrum of mode n (all zeros of Gₙ) with the
/// requested residual tolerance.
///
/// # Safety
/// `kernel` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mh_spectrum_compute(
    kernel: *const MhKernel,
    n: u32,
    tol: f64,
    out: *mut *mut MhSpectrum,
) -> MhStatus {
    if kernel.is_null() || out.is_null() {
        return MhStatus::NullPointer;
    }
    if !(tol > 0.0) {
        return MhStatus::InvalidArgument;
    }
    guarded(|| match compute_spectrum(&(*kernel).0, n, tol) {
        Ok(spec) => {
            *out = Box::into_raw(Box::new(MhSpectrum(spec)));
            MhStatus::Ok
        }
        Err(e) => status_of(&e),
    })
}

/// Number of certified roots (with multiplicity).
///
/// # Safety
/// `spectrum` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mh_spectrum_len(spectrum: *const MhSpectrum) -> usize {
    if spectrum.is_null() {
        return 0;
    }
    (*spectrum).0.roots.len()
}

/// Root `idx` and its residual |Gₙ(root)|; out-pointers may be null.
///
/// # Safety
/// `spectrum` must be a live handle; non-null out-pointers writable.
#[no_mangle]
pub unsafe extern "C" fn mh_spectrum_get(
    spectrum: *const MhSpectrum,
    idx: usize,
    out_re: *mut f64,
    out_im: *mut f64,
    out_residual: *mut f64,
) -> MhStatus {
    if spectrum.is_null() {
        return MhStatus::NullPointer;
    }
    let spec = &(*spectrum).0;
    if idx >= spec.roots.len() {
        return MhStatus::InvalidArgument;
    }
    if !out_re.is_null() {
        *out_re = spec.roots[idx].re;
    }
    if !out_im.is_null() {
        *out_im = spec.roots[idx].im;
    }
    if !out_residual.is_null() {
        *out_residual = spec.residuals[idx];
    }
    MhStatus::Ok
}

/// Frees a spectrum handle; accepts null.
///
/// # Safety
/// `spectrum` must come from `mh_spectrum_compute` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mh_spectrum_free(spectrum: *mut MhSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_roundtrip_through_abi() {
        unsafe {
            let a = [1.0f64];
            let b = [2.0f64];
            let mut k: *mut MhKernel = std::ptr::null_mut();
            assert_eq!(mh_kernel_new(a.as_ptr(), b.as_ptr(), 1, &mut k), MhStatus::Ok);
            assert_eq!(mh_kernel_len(k), 1);
            let mut v = 0.0;
            assert_eq!(mh_kernel_eval_k(k, 0.0, &mut v), MhStatus::Ok);
            assert_eq!(v, 1.0);
            assert_eq!(mh_kernel_eval_q(k, 0.0, &mut v), MhStatus::Ok);
            assert_eq!(v, 0.0);
            assert_eq!(mh_kernel_eval_k(k, -1.0, &mut v), MhStatus::InvalidArgument);
            let (mut alpha, mut beta, mut gamma, mut c0) = (0.0, 0.0, 0.0, 0.0);
            assert_eq!(
                mh_kernel_moments(k, &mut alpha, &mut beta, &mut gamma, &mut c0),
                MhStatus::Ok
            );
            assert_eq!((alpha, beta, gamma, c0), (1.0, 2.0, 4.0, 0.5));
            let (mut re, mut im) = (0.0, 0.0);
            assert_eq!(mh_kernel_laplace(k, 2.0, 0.0, &mut re, &mut im), MhStatus::Ok);
            assert_eq!((re, im), (0.25, 0.0));
            assert_eq!(
                mh_kernel_laplace(k, -2.0, 0.0, &mut re, &mut im),
                MhStatus::PoleHit
            );
            mh_kernel_free(k);
        }
    }

    #[test]
    fn validation_maps_to_status() {
        unsafe {
            let a = [1.0f64, -1.0];
            let b = [1.0f64, 2.0];
            let mut k: *mut MhKernel = std::ptr::null_mut();
            assert_eq!(
                mh_kernel_new(a.as_ptr(), b.as_ptr(), 2, &mut k),
                MhStatus::Validation
            );
            assert!(k.is_null());
            assert_eq!(
                mh_kernel_new(std::ptr::null(), b.as_ptr(), 2, &mut k),
                MhStatus::NullPointer
            );
        }
    }

    #[test]
    fn solve_and_copy_trajectory() {
        unsafe {
            let a = [1.0f64];
            let b = [0.0f64];
            let mut k: *mut MhKernel = std::ptr::null_mut();
            assert_eq!(mh_kernel_new(a.as_ptr(), b.as_ptr(), 1, &mut k), MhStatus::Ok);
            let mut traj: *mut MhTrajectory = std::ptr::null_mut();
            assert_eq!(
                mh_solve_mode(k, 5, 1.0, 1.0, 1e-3, MhMethod::Ode, &mut traj),
                MhStatus::Ok
            );
            let len = mh_trajectory_len(traj);
            assert_eq!(len, 1001);
            assert!(mh_trajectory_step_certified(traj));
            let mut t = vec![0.0; len];
            let mut th = vec![0.0; len];
            let copied =
                mh_trajectory_copy(traj, t.as_mut_ptr(), th.as_mut_ptr(), std::ptr::null_mut(), len);
            assert_eq!(copied, len);
            // cos(5t) to scheme accuracy
            for (j, &v) in th.iter().enumerate() {
                assert!((v - (5.0 * t[j]).cos()).abs() < 1e-3);
            }
            mh_trajectory_free(traj);
            mh_kernel_free(k);
        }
    }

    #[test]
    fn spectrum_through_abi() {
        unsafe {
            let a = [1.0f64];
            let b = [2.0f64];
            let mut k: *mut MhKernel = std::ptr::null_mut();
            assert_eq!(mh_kernel_new(a.as_ptr(), b.as_ptr(), 1, &mut k), MhStatus::Ok);
            let mut spec: *mut MhSpectrum = std::ptr::null_mut();
            assert_eq!(mh_spectrum_compute(k, 2, 1e-10, &mut spec), MhStatus::Ok);
            assert_eq!(mh_spectrum_len(spec), 2);
            let (mut re, mut im, mut res) = (0.0, 0.0, 0.0);
            assert_eq!(
                mh_spectrum_get(spec, 0, &mut re, &mut im, &mut res),
                MhStatus::Ok
            );
            assert!((re + 1.0).abs() < 1e-10);
            assert!((im.abs() - 3f64.sqrt()).abs() < 1e-10);
            assert!(res <= 1e-10);
            assert_eq!(
                mh_spectrum_get(spec, 9, &mut re, &mut im, &mut res),
                MhStatus::InvalidArgument
            );
            mh_spectrum_free(spec);
            mh_kernel_free(k);
        }
    }

    #[test]
    fn symbol_through_abi() {
        unsafe {
            let a = [1.0f64];
            let b = [0.0f64];
            let mut k: *mut MhKernel = std::ptr::null_mut();
            assert_eq!(mh_kernel_new(a.as_ptr(), b.as_ptr(), 1, &mut k), MhStatus::Ok);
            let (mut re, mut im) = (1.0, 1.0);
            // G₃(3i) = 0 for the pure-memory kernel
            assert_eq!(
                mh_symbol(k, 3, MhSymbol::G, 0.0, 3.0, &mut re, &mut im),
                MhStatus::Ok
            );
            assert!(re.abs() < 1e-14 && im.abs() < 1e-14);
            assert_eq!(
                mh_symbol(k, 3, MhSymbol::InvG, 0.0, 3.0, &mut re, &mut im),
                MhStatus::SpectrumPoint
            );
            mh_kernel_free(k);
        }
    }

    #[test]
    fn status_messages_are_c_strings() {
        for status in [
            MhStatus::Ok,
            MhStatus::NullPointer,
            MhStatus::InvalidArgument,
            MhStatus::Validation,
            MhStatus::PoleHit,
            MhStatus::SpectrumPoint,
            MhStatus::SolverFailure,
            MhStatus::NotCertified,
            MhStatus::Internal,
        ] {
            let ptr = mh_status_message(status);
            assert!(!ptr.is_null());
            let s = unsafe { std::ffi::CStr::from_ptr(ptr) };
            assert!(!s.to_str().unwrap().is_empty());
        }
    }
}
