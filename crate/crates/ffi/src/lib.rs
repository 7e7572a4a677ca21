//! C ABI over the `revival` library.
//!
//! States and spectra are opaque heap handles created by `*_new`-style
//! functions and released with the matching `*_free`. Every fallible call
//! returns a [`RevivalStatus`]; on failure a message is available from
//! [`revival_last_error_message`] on the same thread. Results go through out
//! pointers, which are left untouched on failure.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use revival::bell::{chsh_s, horodecki_smax, optimize_chsh_linear, AngleSet};
use revival::channels::{bell_phi_plus, dephase, state_maximal, state_partial, KappaParam, Mode};
use revival::entanglement::{concurrence, degree_of_polarization, gamma};
use revival::qcore::{fidelity, DensityMatrix4, Mat4, C64};
use revival::spectrum::{kernel, kernel_gaussian, GaussianEnvelope, SpectralLine, Spectrum};
use revival::tomography::{mle_reconstruct, simulate_counts, CountRecord, N_SETTINGS};
use revival::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RevivalStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidState = 3,
    NonPhysicalChannel = 4,
    DegenerateConditioning = 5,
    NumericFailure = 6,
    Protocol = 7,
    Panic = 8,
}

/// Two-qubit density matrix in the `{HH, HV, VH, VV}` basis.
pub struct RevivalState {
    inner: DensityMatrix4,
}

/// Normalized list of Gaussian spectral lines.
pub struct RevivalSpectrum {
    inner: Spectrum,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(RevivalStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Config(_) | Error::Parse { .. } | Error::Io { .. } => RevivalStatus::InvalidArgument,
            Error::NonPhysicalChannel(_) => RevivalStatus::NonPhysicalChannel,
            Error::InvalidState(_) => RevivalStatus::InvalidState,
            Error::DegenerateConditioning(_) => RevivalStatus::DegenerateConditioning,
            Error::EigenNonConvergence(_) | Error::NonConvergence { .. } => RevivalStatus::NumericFailure,
            Error::Protocol(_) => RevivalStatus::Protocol,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(RevivalStatus::NullPointer, format!("{what} is null"))
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|cell| *cell.borrow_mut() = text);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RevivalStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            RevivalStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            RevivalStatus::Panic
        }
    }
}

unsafe fn state_ref<'a>(p: *const RevivalState) -> Result<&'a DensityMatrix4, Failure> {
    p.as_ref().map(|s| &s.inner).ok_or_else(|| null("state"))
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn write_state(out: *mut *mut RevivalState, inner: DensityMatrix4) -> Result<(), Failure> {
    write(out, Box::into_raw(Box::new(RevivalState { inner })))
}

fn kappa(re: f64, im: f64) -> Result<KappaParam, Failure> {
    Ok(KappaParam::new(C64::new(re, im))?)
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message for the most recent failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn revival_last_error_message() -> *const c_char {
    LAST_ERROR.with(|cell| cell.borrow().as_ptr())
}

/// Library version as a NUL-terminated string with static lifetime.
#[no_mangle]
pub extern "C" fn revival_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// State from row-major real and imaginary parts (16 entries each); validated.
///
/// # Safety
/// `re` and `im` must point to 16 readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn revival_state_from_parts(
    re: *const f64,
    im: *const f64,
    out: *mut *mut RevivalState,
) -> RevivalStatus {
    guard(|| {
        let re = slice(re, 16, "re")?;
        let im = slice(im, 16, "im")?;
        let m = Mat4::from_fn(|r, c| C64::new(re[4 * r + c], im[4 * r + c]));
        write_state(out, DensityMatrix4::new(m)?)
    })
}

/// `|Φ⁺⟩ = (|HH⟩ + |VV⟩)/√2`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn revival_state_bell(out: *mut *mut RevivalState) -> RevivalStatus {
    guard(|| write_state(out, bell_phi_plus()))
}

/// Maximally entangled input with mode b dephased by `κ_b`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn revival_state_maximal(kb_re: f64, kb_im: f64, out: *mut *mut RevivalState) -> RevivalStatus {
    guard(|| write_state(out, state_maximal(kappa(kb_re, kb_im)?)))
}

/// Partially entangled family with coherences `κ_a` and `κ_b`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn revival_state_partial(
    ka_re: f64,
    ka_im: f64,
    kb_re: f64,
    kb_im: f64,
    out: *mut *mut RevivalState,
) -> RevivalStatus {
    guard(|| write_state(out, state_partial(kappa(ka_re, ka_im)?, kappa(kb_re, kb_im)?)))
}

/// Dephases one photon (`mode` 0 for a, 1 for b) into a new state.
///
/// # Safety
/// `state` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn revival_state_dephase(
    state: *const RevivalState,
    k_re: f64,
    k_im: f64,
    mode: u32,
    out: *mut *mut RevivalState,
) -> RevivalStatus {
    guard(|| {
        let rho = state_ref(state)?;
        let mode = match mode {
            0 => Mode::A,
            1 => Mode::B,
            m => {
                return Err(Failure(
                    RevivalStatus::InvalidArgument,
                    format!("mode {m} is not 0 or 1"),
                ))
            }
        };
        write_state(out, dephase(rho, kappa(k_re, k_im)?, mode))
    })
}

/// Entry `(row, col)` of the density matrix.
///
/// # Safety
/// `state` must be a live handle; `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn revival_state_entry(
    state: *const RevivalState,
    row: usize,
    col: usize,
    re: *mut f64,
    im: *mut f64,
) -> RevivalStatus {
    guard(|| {
        let rho = state_ref(state)?;
        if row >= 4 || col >= 4 {
            return Err(Failure(
                RevivalStatus::InvalidArgument,
                format!("entry ({row}, {col}) out of range"),
            ));
        }
        if re.is_null() || im.is_null() {
            return Err(null("output pointer"));
        }
        let z = rho.entry(row, col);
        write(re, z.re)?;
        write(im, z.im)
    })
}

/// Releases a state handle. Null is ignored.
///
/// # Safety
/// `state` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn revival_state_free(state: *mut RevivalState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

unsafe fn scalar(
    state: *const RevivalState,
    out: *mut f64,
    f: impl FnOnce(&DensityMatrix4) -> revival::Result<f64>,
) -> RevivalStatus {
    guard(|| {
        let value = f(state_ref(state)?)?;
        write(out, value)
    })
}

/// Signed Wootters quantity `√χ₁ − √χ₂ − √χ₃ − √χ₄`.
///
/// # Safety
/// `state` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn revival_gamma(state: *const RevivalState, out: *mut f64) -> RevivalStatus {
    scalar(state, out, gamma)
}

/// Concurrence `max(0, Γ)`.
///
/// # Safety
/// `state` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn revival_concurrence(state: *const RevivalState, out: *mut f64) -> RevivalStatus {
    scalar(state, out, concurrence)
}

/// Degree of polarization of photon b heralded by `H` on photon a.
///
/// # Safety
/// `state` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn revival_degree_of_polarization(state: *const RevivalState, out: *mut f64) -> RevivalStatus {
    scalar(state, out, degree_of_polarization)
}

/// Root fidelity `Tr √(√ρ σ √ρ)`.
///
/// # Safety
/// Both handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn revival_fidelity(
    rho: *const RevivalState,
    sigma: *const RevivalState,
    out: *mut f64,
) -> RevivalStatus {
    guard(|| {
        let value = fidelity(state_ref(rho)?, state_ref(sigma)?)?;
        write(out, value)
    })
}

/// CHSH value at analyzer angles `{θ₁, θ₁′, θ₂, θ₂′}` in degrees.
///
/// # Safety
/// `state` must be a live handle; `angles_deg` must point to 4 doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn revival_chsh(
    state: *const RevivalState,
    angles_deg: *const f64,
    out: *mut f64,
) -> RevivalStatus {
    guard(|| {
        let rho = state_ref(state)?;
        let a = slice(angles_deg, 4, "angles")?;
        let angles = AngleSet::new(a[0], a[1], a[2], a[3]);
        if !angles.is_finite() {
            return Err(Failure(RevivalStatus::InvalidArgument, "non-finite angle".into()));
        }
        write(out, chsh_s(rho, &angles))
    })
}

/// Largest CHSH value over linear-polarization analyzers, and the angles attaining it.
///
/// # Safety
/// `state` must be a live handle; `angles_out` must hold 4 doubles; `s_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn revival_chsh_optimize(
    state: *const RevivalState,
    angles_out: *mut f64,
    s_out: *mut f64,
) -> RevivalStatus {
    guard(|| {
        let rho = state_ref(state)?;
        if angles_out.is_null() || s_out.is_null() {
            return Err(null("output pointer"));
        }
        let (a, s) = optimize_chsh_linear(rho);
        let values = [a.theta1, a.theta1_prime, a.theta2, a.theta2_prime];
        ptr::copy_nonoverlapping(values.as_ptr(), angles_out, 4);
        write(s_out, s)
    })
}

/// Maximal CHSH value over all projective measurements.
///
/// # Safety
/// `state` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn revival_horodecki_smax(state: *const RevivalState, out: *mut f64) -> RevivalStatus {
    scalar(state, out, |rho| Ok(horodecki_smax(rho)))
}

/// Spectrum from `n` lines; amplitudes are renormalized to sum to one.
///
/// # Safety
/// The three arrays must hold `n` doubles each; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn revival_spectrum_new(
    n: usize,
    amplitudes: *const f64,
    centers_nm: *const f64,
    widths_nm: *const f64,
    lambda0_nm: f64,
    out: *mut *mut RevivalSpectrum,
) -> RevivalStatus {
    guard(|| {
        let a = slice(amplitudes, n, "amplitudes")?;
        let c = slice(centers_nm, n, "centers")?;
        let w = slice(widths_nm, n, "widths")?;
        let lines = (0..n)
            .map(|i| SpectralLine::new(a[i], c[i], w[i]))
            .collect::<revival::Result<Vec<_>>>()?;
        let inner = Spectrum::normalized(lines, lambda0_nm)?;
        write(out, Box::into_raw(Box::new(RevivalSpectrum { inner })))
    })
}

/// Releases a spectrum handle. Null is ignored.
///
/// # Safety
/// `spectrum` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn revival_spectrum_free(spectrum: *mut RevivalSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

/// Dephasing kernel `κ(x)` of a spectrum at delay `x` (units of `λ₀`).
///
/// # Safety
/// `spectrum` must be a live handle; `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn revival_kernel(
    spectrum: *const RevivalSpectrum,
    x: f64,
    re: *mut f64,
    im: *mut f64,
) -> RevivalStatus {
    guard(|| {
        let s = spectrum.as_ref().ok_or_else(|| null("spectrum"))?;
        if re.is_null() || im.is_null() {
            return Err(null("output pointer"));
        }
        let k = kernel(&s.inner, x);
        write(re, k.re)?;
        write(im, k.im)
    })
}

/// Kernel of a single Gaussian envelope.
///
/// # Safety
/// `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn revival_kernel_gaussian(
    center_nm: f64,
    width_nm: f64,
    lambda0_nm: f64,
    x: f64,
    re: *mut f64,
    im: *mut f64,
) -> RevivalStatus {
    guard(|| {
        let e = GaussianEnvelope::new(center_nm, width_nm)?;
        if re.is_null() || im.is_null() {
            return Err(null("output pointer"));
        }
        let k = kernel_gaussian(&e, lambda0_nm, x);
        write(re, k.re)?;
        write(im, k.im)
    })
}

/// Simulated coincidence counts for the 16 settings `{H,V,D,R}²`, id `4a + b`.
///
/// # Safety
/// `state` must be a live handle; `counts_out` must hold 16 `uint64_t`.
#[no_mangle]
pub unsafe extern "C" fn revival_simulate_counts(
    state: *const RevivalState,
    n_per_setting: u64,
    seed: u64,
    noiseless: bool,
    counts_out: *mut u64,
) -> RevivalStatus {
    guard(|| {
        let rho = state_ref(state)?;
        if counts_out.is_null() {
            return Err(null("counts_out"));
        }
        let counts = simulate_counts(rho, n_per_setting, seed, noiseless)?;
        for rec in counts {
            counts_out.add(rec.setting_id).write(rec.count);
        }
        Ok(())
    })
}

/// Maximum-likelihood state from 16 counts ordered by setting id.
///
/// # Safety
/// `counts` must hold 16 `uint64_t`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn revival_tomography_mle(counts: *const u64, out: *mut *mut RevivalState) -> RevivalStatus {
    guard(|| {
        let c = slice(counts, N_SETTINGS, "counts")?;
        let records: Vec<CountRecord> = c
            .iter()
            .enumerate()
            .map(|(setting_id, &count)| CountRecord { setting_id, count })
            .collect();
        let rec = mle_reconstruct(&records)?;
        write_state(out, rec.state)
    })
}
