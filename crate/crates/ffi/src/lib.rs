//! C ABI over the `kaczmarz` crate.
//!
//! Objects are opaque handles created by `kz_*` constructors and released
//! with the matching `kz_*_free`. Every fallible call returns a [`KzStatus`];
//! on failure `kz_last_error_message` describes the error for the calling
//! thread. Output buffers are caller-allocated with explicit lengths.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use kaczmarz::bounds::{self, BoundKind};
use kaczmarz::linalg::{DenseMatrix, DenseVector};
use kaczmarz::problems::{self, LinearSystem, NoisySystem, Spacing, SpectrumSpec};
use kaczmarz::rk::{self, RkConfig, Trajectory};
use kaczmarz::Error;

/// A consistent noiseless system `A x = b`.
pub struct KzSystem(LinearSystem);

/// A noisy counterpart `Ã x ≈ b̃` together with its base system.
pub struct KzNoisySystem(NoisySystem);

/// Squared-error records of a multi-trial RK run.
pub struct KzTrajectory(Trajectory);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KzStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    /// A mathematical precondition of a bound or construction failed.
    Hypothesis = 4,
    Unreachable = 5,
    BufferTooSmall = 6,
    Io = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KzSpacing {
    Even = 0,
    RandomDistinct = 1,
    TwoLevel = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KzBoundKind {
    Strohmer = 0,
    ZouziasRhsNoise = 1,
    PerturbDoubly = 2,
    PerturbPartial = 3,
    MainAdditive = 4,
    MainMultiplicative = 5,
    MultiplicativePerturb = 6,
}

impl From<KzSpacing> for Spacing {
    fn from(s: KzSpacing) -> Self {
        match s {
            KzSpacing::Even => Spacing::Even,
            KzSpacing::RandomDistinct => Spacing::RandomDistinct,
            KzSpacing::TwoLevel => Spacing::TwoLevel,
        }
    }
}

impl From<KzBoundKind> for BoundKind {
    fn from(k: KzBoundKind) -> Self {
        match k {
            KzBoundKind::Strohmer => BoundKind::Strohmer,
            KzBoundKind::ZouziasRhsNoise => BoundKind::ZouziasRhsNoise,
            KzBoundKind::PerturbDoubly => BoundKind::PerturbDoubly,
            KzBoundKind::PerturbPartial => BoundKind::PerturbPartial,
            KzBoundKind::MainAdditive => BoundKind::MainAdditive,
            KzBoundKind::MainMultiplicative => BoundKind::MainMultiplicative,
            KzBoundKind::MultiplicativePerturb => BoundKind::MultiplicativePerturb,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(KzStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Dimension(_) => KzStatus::Dimension,
            Error::Unreachable => KzStatus::Unreachable,
            Error::Io(_) => KzStatus::Io,
            _ if e.is_hypothesis() => KzStatus::Hypothesis,
            _ => KzStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(KzStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> KzStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KzStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("panic inside kaczmarz".into());
            KzStatus::Panic
        }
    }
}

/// # Safety
/// `p` must be null or valid for reads of `T`.
unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

/// # Safety
/// `p` must be null or valid for `len` reads.
unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return if len == 0 { Ok(&[]) } else { Err(null(what)) };
    }
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

/// # Safety
/// `out` must be null or valid for `len` writes.
unsafe fn copy_out<T: Copy>(src: &[T], out: *mut T, len: usize) -> Result<(), Failure> {
    if len < src.len() {
        return Err(Failure(KzStatus::BufferTooSmall, format!("buffer holds {len}, need {}", src.len())));
    }
    if out.is_null() {
        return Err(null("output buffer"));
    }
    unsafe { ptr::copy_nonoverlapping(src.as_ptr(), out, src.len()) };
    Ok(())
}

/// # Safety
/// `out` must be null or valid for a write of `T`.
unsafe fn write<T>(out: *mut T, v: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    unsafe { out.write(v) };
    Ok(())
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn kz_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn kz_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Generates `A = U Σ Vᵀ` with the requested spectrum and `b = A z`.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn kz_system_generate(
    m: usize,
    n: usize,
    r: usize,
    sigma_min: f64,
    sigma_max: f64,
    spacing: KzSpacing,
    seed: u64,
    out: *mut *mut KzSystem,
) -> KzStatus {
    guard(|| {
        let spec = SpectrumSpec::new(m, n, r, sigma_min, sigma_max, spacing.into());
        let sys = problems::generate_system(&spec, seed)?;
        unsafe { write(out, Box::into_raw(Box::new(KzSystem(sys)))) }
    })
}

/// Wraps a caller-supplied consistent system; `a` is row-major `rows × cols`.
///
/// # Safety
/// `a` must hold `rows * cols` values, `b` must hold `rows`, `out` must be
/// valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn kz_system_from_dense(
    rows: usize,
    cols: usize,
    a: *const f64,
    b: *const f64,
    out: *mut *mut KzSystem,
) -> KzStatus {
    guard(|| {
        let len = rows.checked_mul(cols).ok_or_else(|| Failure(KzStatus::Dimension, "size overflow".into()))?;
        let a = DenseMatrix::new(rows, cols, unsafe { slice(a, len, "a") }?.to_vec())?;
        let b = DenseVector::new(unsafe { slice(b, rows, "b") }?.to_vec())?;
        let sys = LinearSystem::new(a, b)?;
        unsafe { write(out, Box::into_raw(Box::new(KzSystem(sys)))) }
    })
}

/// # Safety
/// `sys` must be null or a handle from a `kz_system_*` constructor, freed once.
#[no_mangle]
pub unsafe extern "C" fn kz_system_free(sys: *mut KzSystem) {
    if !sys.is_null() {
        drop(unsafe { Box::from_raw(sys) });
    }
}

/// # Safety
/// `sys` must be a live handle; `rows` and `cols` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kz_system_dims(sys: *const KzSystem, rows: *mut usize, cols: *mut usize) -> KzStatus {
    guard(|| {
        let s = unsafe { deref(sys, "system") }?;
        unsafe {
            write(rows, s.0.rows())?;
            write(cols, s.0.cols())
        }
    })
}

/// `R = ‖A‖_F² / σ_min²(A)`.
///
/// # Safety
/// `sys` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn kz_system_scaled_condition(sys: *const KzSystem, out: *mut f64) -> KzStatus {
    guard(|| {
        let s = unsafe { deref(sys, "system") }?;
        unsafe { write(out, s.0.scaled_condition()) }
    })
}

/// Copies `x_LS` into `out`, which must hold at least `cols` values.
///
/// # Safety
/// `sys` must be a live handle; `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn kz_system_x_ls(sys: *const KzSystem, out: *mut f64, len: usize) -> KzStatus {
    guard(|| {
        let s = unsafe { deref(sys, "system") }?;
        unsafe { copy_out(&s.0.x_ls, out, len) }
    })
}

fn noisy_out(out: *mut *mut KzNoisySystem, noisy: NoisySystem) -> Result<(), Failure> {
    unsafe { write(out, Box::into_raw(Box::new(KzNoisySystem(noisy)))) }
}

/// `Ã = A + σ_A E`, `b̃ = b + σ_B ε`.
///
/// # Safety
/// `sys` must be a live handle; `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn kz_noise_additive(
    sys: *const KzSystem,
    sigma_a: f64,
    sigma_b: f64,
    seed: u64,
    out: *mut *mut KzNoisySystem,
) -> KzStatus {
    guard(|| {
        let s = unsafe { deref(sys, "system") }?;
        noisy_out(out, problems::additive_noise(&s.0, sigma_a, sigma_b, seed)?)
    })
}

/// `Ã = (I + σ_A E) A (I + σ_A F)`; either factor can be switched off.
///
/// # Safety
/// `sys` must be a live handle; `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn kz_noise_multiplicative(
    sys: *const KzSystem,
    sigma_a: f64,
    sigma_b: f64,
    use_e: bool,
    use_f: bool,
    seed: u64,
    out: *mut *mut KzNoisySystem,
) -> KzStatus {
    guard(|| {
        let s = unsafe { deref(sys, "system") }?;
        noisy_out(out, problems::multiplicative_noise(&s.0, sigma_a, sigma_b, use_e, use_f, seed)?)
    })
}

/// `Ã = A (I + M)` with `‖A†‖‖AM‖ = strength`, keeping `Ã x = b` consistent.
///
/// # Safety
/// `sys` must be a live handle; `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn kz_noise_partial(
    sys: *const KzSystem,
    strength: f64,
    sigma_b: f64,
    seed: u64,
    out: *mut *mut KzNoisySystem,
) -> KzStatus {
    guard(|| {
        let s = unsafe { deref(sys, "system") }?;
        noisy_out(out, problems::partial_consistent_noise_with_rhs(&s.0, strength, sigma_b, seed)?)
    })
}

/// Lifts the smallest singular value of `A` to the next one.
///
/// # Safety
/// `sys` must be a live handle; `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn kz_noise_preconditioner(sys: *const KzSystem, out: *mut *mut KzNoisySystem) -> KzStatus {
    guard(|| {
        let s = unsafe { deref(sys, "system") }?;
        noisy_out(out, problems::preconditioner_noise(&s.0)?)
    })
}

/// # Safety
/// `noisy` must be null or a handle from a `kz_noise_*` constructor, freed once.
#[no_mangle]
pub unsafe extern "C" fn kz_noisy_free(noisy: *mut KzNoisySystem) {
    if !noisy.is_null() {
        drop(unsafe { Box::from_raw(noisy) });
    }
}

/// Copies `Ã` row-major into `out` (at least `rows * cols` values).
///
/// # Safety
/// `noisy` must be a live handle; `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn kz_noisy_a_tilde(noisy: *const KzNoisySystem, out: *mut f64, len: usize) -> KzStatus {
    guard(|| {
        let n = unsafe { deref(noisy, "noisy system") }?;
        unsafe { copy_out(n.0.a_tilde.as_slice(), out, len) }
    })
}

/// Runs `trials` RK trials of `max_iterations` steps. A `record_stride` of 0
/// picks one automatically.
///
/// # Safety
/// `noisy` must be a live handle; `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn kz_solve(
    noisy: *const KzNoisySystem,
    max_iterations: usize,
    trials: usize,
    record_stride: usize,
    seed: u64,
    out: *mut *mut KzTrajectory,
) -> KzStatus {
    guard(|| {
        let n = unsafe { deref(noisy, "noisy system") }?;
        let mut cfg = RkConfig::new(max_iterations, trials, seed);
        if record_stride > 0 {
            cfg = cfg.with_stride(record_stride);
        }
        let traj = rk::solve(&n.0, &cfg)?;
        unsafe { write(out, Box::into_raw(Box::new(KzTrajectory(traj)))) }
    })
}

/// # Safety
/// `traj` must be null or a handle from [`kz_solve`], freed once.
#[no_mangle]
pub unsafe extern "C" fn kz_trajectory_free(traj: *mut KzTrajectory) {
    if !traj.is_null() {
        drop(unsafe { Box::from_raw(traj) });
    }
}

/// Number of records; 0 for a null handle.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kz_trajectory_len(traj: *const KzTrajectory) -> usize {
    unsafe { traj.as_ref() }.map_or(0, |t| t.0.recorded_iterations.len())
}

/// # Safety
/// `traj` must be a live handle; `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn kz_trajectory_iterations(traj: *const KzTrajectory, out: *mut usize, len: usize) -> KzStatus {
    guard(|| {
        let t = unsafe { deref(traj, "trajectory") }?;
        unsafe { copy_out(&t.0.recorded_iterations, out, len) }
    })
}

/// Mean over trials of `‖x_k − x_LS‖²` at each record.
///
/// # Safety
/// `traj` must be a live handle; `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn kz_trajectory_mean(traj: *const KzTrajectory, out: *mut f64, len: usize) -> KzStatus {
    guard(|| {
        let t = unsafe { deref(traj, "trajectory") }?;
        unsafe { copy_out(&t.0.mean_squared_error, out, len) }
    })
}

/// Evaluates a bound at the trajectory's records, averaged over its start
/// points. `out_horizon` may be null.
///
/// # Safety
/// Handles must be live; `out` valid for `len` writes; `out_horizon` null or
/// valid for a write.
#[no_mangle]
pub unsafe extern "C" fn kz_bound_curve(
    noisy: *const KzNoisySystem,
    traj: *const KzTrajectory,
    kind: KzBoundKind,
    out: *mut f64,
    len: usize,
    out_horizon: *mut f64,
) -> KzStatus {
    guard(|| {
        let n = unsafe { deref(noisy, "noisy system") }?;
        let t = unsafe { deref(traj, "trajectory") }?;
        let curve = bounds::evaluate_over_starts(kind.into(), &n.0, &t.0.starts, &t.0.recorded_iterations)?;
        unsafe { copy_out(&curve.values, out, len) }?;
        if !out_horizon.is_null() {
            unsafe { out_horizon.write(curve.horizon) };
        }
        Ok(())
    })
}

/// Horizon of a bound for the noisy system, independent of any start point.
///
/// # Safety
/// `noisy` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn kz_bound_horizon(noisy: *const KzNoisySystem, kind: KzBoundKind, out: *mut f64) -> KzStatus {
    guard(|| {
        let n = unsafe { deref(noisy, "noisy system") }?;
        let x0 = DenseVector::zeros(n.0.a_tilde.cols());
        let curve = bounds::evaluate(kind.into(), &n.0, &x0, &[0])?;
        unsafe { write(out, curve.horizon) }
    })
}

/// Smallest `K` with `(1 − 1/r)^K · init ≤ tau − tau0`; [`KzStatus::Unreachable`]
/// when `tau ≤ tau0`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn kz_iterations_to_tolerance(r: f64, init: f64, tau: f64, tau0: f64, out: *mut u64) -> KzStatus {
    guard(|| {
        let k = bounds::iterations_to_tolerance(r, init, tau, tau0)?;
        unsafe { write(out, k) }
    })
}
