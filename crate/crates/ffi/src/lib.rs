//! C interface to `tfpr`.
//!
//! Every fallible function returns a [`TfprStatus`]; on failure the message
//! is available from [`tfpr_last_error_message`] on the same thread.
//! Coefficient arrays are split into real and imaginary parts, frame-major,
//! `M/2 + 1` channels per frame.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;
use std::sync::Arc;

use tfpr::harness::sweep::cell_system;
use tfpr::phase::{self, FglaConfig, PghiConfig, PrResult};
use tfpr::windows::{grid_matched_lambda, window_for_lambda, WindowFamily};
use tfpr::{ComplexStft, Complex64, Error, Gabor, MagnitudeStft, SignalBuffer, SnrMsConfig, StftGrid};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TfprStatus {
    Ok = 0,
    InvalidArgument = 1,
    InvalidGrid = 2,
    Dimension = 3,
    NonFinite = 4,
    NotAFrame = 5,
    Numerical = 6,
    Data = 7,
    NullPointer = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TfprWindow {
    Gaussian = 0,
    Hann = 1,
    Blackman = 2,
    Bartlett = 3,
}

impl From<TfprWindow> for WindowFamily {
    fn from(w: TfprWindow) -> Self {
        match w {
            TfprWindow::Gaussian => WindowFamily::Gaussian,
            TfprWindow::Hann => WindowFamily::Hann,
            TfprWindow::Blackman => WindowFamily::Blackman,
            TfprWindow::Bartlett => WindowFamily::Bartlett,
        }
    }
}

/// Analysis window, dual window and lattice for one signal length.
pub struct TfprSystem {
    gabor: Arc<Gabor>,
    lambda: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> TfprStatus {
    match err {
        Error::InvalidArgument(_) | Error::DegenerateWindow => TfprStatus::InvalidArgument,
        Error::InvalidGrid(_) | Error::SupportTooLarge { .. } | Error::PeriodizationTooWide { .. } => {
            TfprStatus::InvalidGrid
        }
        Error::Dimension(_) => TfprStatus::Dimension,
        Error::NonFinite(_) => TfprStatus::NonFinite,
        Error::NotAFrame { .. } => TfprStatus::NotAFrame,
        Error::Numerical { .. } => TfprStatus::Numerical,
        Error::Data { .. } | Error::Io(_) => TfprStatus::Data,
    }
}

enum Failure {
    Lib(Error),
    Null(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TfprStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TfprStatus::Ok,
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            TfprStatus::NullPointer
        }
        Err(_) => {
            set_error("internal panic".into());
            TfprStatus::Panic
        }
    }
}

unsafe fn input<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    // SAFETY: the caller guarantees `len` readable elements at `p`.
    Ok(unsafe { slice::from_raw_parts(p, len) })
}

unsafe fn output<'a, T>(p: *mut T, len: usize, what: &'static str) -> Result<&'a mut [T], Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    // SAFETY: the caller guarantees `len` writable elements at `p`.
    Ok(unsafe { slice::from_raw_parts_mut(p, len) })
}

unsafe fn system<'a>(p: *const TfprSystem) -> Result<&'a TfprSystem, Failure> {
    if p.is_null() {
        return Err(Failure::Null("system"));
    }
    // SAFETY: non-null handles come from `tfpr_system_new*`.
    Ok(unsafe { &*p })
}

fn expect_len(got: usize, want: usize, what: &str) -> Result<(), Failure> {
    if got != want {
        return Err(Failure::Lib(Error::Dimension(format!(
            "{what} has {got} elements, expected {want}"
        ))));
    }
    Ok(())
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tfpr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// System for a requested λ and redundancy. The lattice is chosen among the
/// divisors of `len`; the realized λ is available from
/// [`tfpr_system_lambda`].
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn tfpr_system_new(
    window: TfprWindow,
    lambda: f64,
    redundancy: usize,
    len: usize,
    sample_rate: u32,
    out: *mut *mut TfprSystem,
) -> TfprStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let cell = cell_system(window.into(), lambda, redundancy, len, sample_rate)?;
        let handle = Box::new(TfprSystem {
            gabor: cell.system,
            lambda: cell.lambda_realized,
        });
        // SAFETY: checked non-null above.
        unsafe { *out = Box::into_raw(handle) };
        Ok(())
    })
}

/// System on an explicit lattice, window matched to it (λ = aM/ξ_s).
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn tfpr_system_new_grid(
    window: TfprWindow,
    hop: usize,
    channels: usize,
    len: usize,
    sample_rate: u32,
    out: *mut *mut TfprSystem,
) -> TfprStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        if sample_rate == 0 {
            return Err(Error::InvalidArgument("sample rate must be positive".into()).into());
        }
        let grid = StftGrid::new(hop, channels, len)?;
        let lambda = grid_matched_lambda(&grid, sample_rate).value;
        let g = window_for_lambda(window.into(), lambda, sample_rate, len)?;
        let handle = Box::new(TfprSystem {
            gabor: Arc::new(Gabor::new(grid, g, sample_rate)?),
            lambda,
        });
        // SAFETY: checked non-null above.
        unsafe { *out = Box::into_raw(handle) };
        Ok(())
    })
}

/// # Safety
/// `sys` must be null or a handle from `tfpr_system_new*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tfpr_system_free(sys: *mut TfprSystem) {
    if !sys.is_null() {
        // SAFETY: ownership returns from the caller.
        drop(unsafe { Box::from_raw(sys) });
    }
}

fn with_system<T: Default>(sys: *const TfprSystem, f: impl FnOnce(&TfprSystem) -> T) -> T {
    // SAFETY: callers pass null or a live handle.
    unsafe { sys.as_ref() }.map_or_else(T::default, f)
}

/// Hop size `a`. Zero for a null handle.
///
/// # Safety
/// `sys` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tfpr_system_hop(sys: *const TfprSystem) -> usize {
    with_system(sys, |s| s.gabor.grid().hop())
}

/// Channel count `M`. Zero for a null handle.
///
/// # Safety
/// `sys` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tfpr_system_channels(sys: *const TfprSystem) -> usize {
    with_system(sys, |s| s.gabor.grid().channels())
}

/// Signal length `L`. Zero for a null handle.
///
/// # Safety
/// `sys` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tfpr_system_len(sys: *const TfprSystem) -> usize {
    with_system(sys, |s| s.gabor.grid().len())
}

/// Frame count `L / a`. Zero for a null handle.
///
/// # Safety
/// `sys` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tfpr_system_frames(sys: *const TfprSystem) -> usize {
    with_system(sys, |s| s.gabor.grid().frames())
}

/// Stored channels per frame, `M/2 + 1`. Zero for a null handle.
///
/// # Safety
/// `sys` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tfpr_system_half_channels(sys: *const TfprSystem) -> usize {
    with_system(sys, |s| s.gabor.grid().half_channels())
}

/// Length of coefficient and magnitude arrays. Zero for a null handle.
///
/// # Safety
/// `sys` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tfpr_system_coeff_count(sys: *const TfprSystem) -> usize {
    with_system(sys, |s| s.gabor.grid().half_size())
}

/// Time-frequency ratio of the window. Zero for a null handle.
///
/// # Safety
/// `sys` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tfpr_system_lambda(sys: *const TfprSystem) -> f64 {
    with_system(sys, |s| s.lambda)
}

fn coeffs_from(sys: &TfprSystem, re: &[f64], im: &[f64]) -> Result<ComplexStft, Failure> {
    let c = re.iter().zip(im).map(|(&r, &i)| Complex64::new(r, i)).collect();
    Ok(ComplexStft::new(*sys.gabor.grid(), sys.gabor.sample_rate(), c)?)
}

/// Forward STFT of `len` samples into `count` coefficients.
///
/// # Safety
/// Pointers must reference arrays of the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn tfpr_stft(
    sys: *const TfprSystem,
    signal: *const f64,
    len: usize,
    out_re: *mut f64,
    out_im: *mut f64,
    count: usize,
) -> TfprStatus {
    guard(|| {
        let sys = unsafe { system(sys) }?;
        let grid = sys.gabor.grid();
        expect_len(len, grid.len(), "signal")?;
        expect_len(count, grid.half_size(), "coefficient arrays")?;
        let signal = unsafe { input(signal, len, "signal") }?;
        let re = unsafe { output(out_re, count, "out_re") }?;
        let im = unsafe { output(out_im, count, "out_im") }?;
        let c = sys
            .gabor
            .analyze(&SignalBuffer::new(signal.to_vec(), sys.gabor.sample_rate())?)?;
        for ((r, i), v) in re.iter_mut().zip(im.iter_mut()).zip(c.coeffs()) {
            *r = v.re;
            *i = v.im;
        }
        Ok(())
    })
}

/// Inverse STFT with the canonical dual window.
///
/// # Safety
/// Pointers must reference arrays of the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn tfpr_istft(
    sys: *const TfprSystem,
    re: *const f64,
    im: *const f64,
    count: usize,
    out_signal: *mut f64,
    len: usize,
) -> TfprStatus {
    guard(|| {
        let sys = unsafe { system(sys) }?;
        let grid = sys.gabor.grid();
        expect_len(count, grid.half_size(), "coefficient arrays")?;
        expect_len(len, grid.len(), "output signal")?;
        let re = unsafe { input(re, count, "re") }?;
        let im = unsafe { input(im, count, "im") }?;
        let out = unsafe { output(out_signal, len, "out_signal") }?;
        let s = sys.gabor.synthesize(&coeffs_from(sys, re, im)?)?;
        out.copy_from_slice(s.samples());
        Ok(())
    })
}

unsafe fn run_pr(
    sys: *const TfprSystem,
    mags: *const f64,
    count: usize,
    out_signal: *mut f64,
    len: usize,
    out_phase: *mut f64,
    algo: impl FnOnce(&MagnitudeStft, &TfprSystem) -> tfpr::Result<PrResult>,
) -> TfprStatus {
    guard(|| {
        let sys = unsafe { system(sys) }?;
        let grid = *sys.gabor.grid();
        expect_len(count, grid.half_size(), "magnitudes")?;
        expect_len(len, grid.len(), "output signal")?;
        let mags = unsafe { input(mags, count, "mags") }?;
        let out = unsafe { output(out_signal, len, "out_signal") }?;
        let mags = MagnitudeStft::new(grid, sys.gabor.sample_rate(), mags.to_vec())?;
        let r = algo(&mags, sys)?;
        out.copy_from_slice(r.reconstructed.samples());
        if !out_phase.is_null() {
            let ph = unsafe { output(out_phase, count, "out_phase") }?;
            ph.copy_from_slice(&r.estimated_phase);
        }
        Ok(())
    })
}

/// Phase gradient heap integration. `out_phase` may be null.
///
/// # Safety
/// Pointers must reference arrays of the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn tfpr_pghi(
    sys: *const TfprSystem,
    mags: *const f64,
    count: usize,
    rel_tolerance: f64,
    seed: u64,
    out_signal: *mut f64,
    len: usize,
    out_phase: *mut f64,
) -> TfprStatus {
    unsafe {
        run_pr(sys, mags, count, out_signal, len, out_phase, |m, s| {
            let cfg = PghiConfig {
                rel_tolerance,
                seed,
                ..Default::default()
            };
            phase::pghi(m, &s.gabor, s.lambda, &cfg)
        })
    }
}

/// Fast Griffin-Lim from zero phase. `out_phase` may be null.
///
/// # Safety
/// Pointers must reference arrays of the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn tfpr_fgla(
    sys: *const TfprSystem,
    mags: *const f64,
    count: usize,
    alpha: f64,
    iterations: usize,
    out_signal: *mut f64,
    len: usize,
    out_phase: *mut f64,
) -> TfprStatus {
    unsafe {
        run_pr(sys, mags, count, out_signal, len, out_phase, |m, s| {
            let cfg = FglaConfig {
                alpha,
                iterations,
                record_every: 0,
            };
            phase::fgla(m, &s.gabor, &cfg)
        })
    }
}

/// Single-pass spectrogram inversion. `out_phase` may be null.
///
/// # Safety
/// Pointers must reference arrays of the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn tfpr_spsi(
    sys: *const TfprSystem,
    mags: *const f64,
    count: usize,
    out_signal: *mut f64,
    len: usize,
    out_phase: *mut f64,
) -> TfprStatus {
    unsafe {
        run_pr(sys, mags, count, out_signal, len, out_phase, |m, s| {
            phase::spsi(m, &s.gabor)
        })
    }
}

/// Spectrogram SNR in dB on the fixed reference analysis; `+inf` for a
/// perfect match.
///
/// # Safety
/// Pointers must reference arrays of the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn tfpr_snr_ms(
    original: *const f64,
    reconstructed: *const f64,
    len: usize,
    sample_rate: u32,
    out_db: *mut f64,
) -> TfprStatus {
    guard(|| {
        let a = unsafe { input(original, len, "original") }?;
        let b = unsafe { input(reconstructed, len, "reconstructed") }?;
        if out_db.is_null() {
            return Err(Failure::Null("out_db"));
        }
        let v = tfpr::snr_ms(
            &SignalBuffer::new(a.to_vec(), sample_rate)?,
            &SignalBuffer::new(b.to_vec(), sample_rate)?,
            SnrMsConfig::default(),
        )?;
        // SAFETY: checked non-null above.
        unsafe { *out_db = v };
        Ok(())
    })
}
