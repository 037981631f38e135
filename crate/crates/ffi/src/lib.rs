//! C ABI over `keplerwave`.
//!
//! Objects cross the boundary as opaque handles created by `kw_*_new`/`kw_*_build`
//! functions and released by the matching `kw_*_free`. Every fallible call returns
//! a [`KwStatus`]; on failure, [`kw_last_error_message`] describes the cause for
//! the calling thread. Output pointers are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use keplerwave::classical::classical_period;
use keplerwave::ess::{
    ess_build, ess_eval, expand, reconstruct, runge_lenz_analytic, EssParams, PhysicalSpec, SpectralState,
};
use keplerwave::sqdt::{sqdt_build, sqdt_expand, EnergyTarget, QuantumDefectTable};
use keplerwave::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KwStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Argument outside the domain of the operation.
    InvalidArgument = 2,
    /// A nonlinear solve did not converge or has no solution.
    Solver = 3,
    /// The expansion window hit its largest principal quantum number.
    Truncation = 4,
    /// An error estimate exceeded its tolerance.
    Accuracy = 5,
    /// Internal numerical failure.
    Numerical = 6,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 7,
    /// A caller-provided buffer is too small.
    BufferTooSmall = 8,
    /// Rust panicked; the handle arguments should be considered unusable.
    Panic = 9,
}

impl From<&Error> for KwStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Solver { .. } => KwStatus::Solver,
            Error::Truncation { .. } => KwStatus::Truncation,
            Error::Accuracy { .. } => KwStatus::Accuracy,
            Error::Numerical(_) => KwStatus::Numerical,
            _ => KwStatus::InvalidArgument,
        }
    }
}

/// Packet parameters (opaque).
pub struct KwEss {
    inner: EssParams,
}

/// Windowed eigenstate expansion (opaque).
pub struct KwSpectral {
    inner: SpectralState,
}

/// Quantum-defect table (opaque).
pub struct KwDefectTable {
    inner: QuantumDefectTable,
}

/// Plain copy of a packet's five parameters.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KwEssParams {
    pub alpha: f64,
    pub beta: i64,
    pub gamma0: f64,
    pub gamma1: f64,
    pub delta: f64,
}

/// One expansion coefficient.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KwCoefficient {
    pub n: i64,
    pub l: i64,
    pub re: f64,
    pub im: f64,
    pub energy: f64,
}

/// Runge–Lenz uncertainties at `t = 0`.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KwRungeLenz {
    pub mean_ax: f64,
    pub mean_ay: f64,
    pub d_ax: f64,
    pub d_ay: f64,
    pub product: f64,
    pub hl: f64,
    pub z: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

enum Failure {
    Status(KwStatus, String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn null(what: &str) -> Failure {
    Failure::Status(KwStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status and the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> KwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            KwStatus::Ok
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(&e.to_string());
            KwStatus::from(&e)
        }
        Ok(Err(Failure::Status(s, msg))) => {
            set_last_error(&msg);
            s
        }
        Err(_) => {
            set_last_error("internal panic");
            KwStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    // SAFETY: the caller guarantees `p` is null or a live handle from this library.
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn write<T>(out: *mut T, v: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    // SAFETY: non-null and, per the contract, valid for writes.
    unsafe { out.write(v) };
    Ok(())
}

/// Message of the last failed call on this thread, or an empty string.
/// The pointer stays valid until the next `kw_*` call on the same thread.
#[no_mangle]
pub extern "C" fn kw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Classical period `2π(n̄ − ½)³` in atomic units.
#[no_mangle]
pub extern "C" fn kw_classical_period(n_bar: f64) -> f64 {
    classical_period(n_bar)
}

/// Builds the packet for `(n̄, l̄, ΔL)` and stores a new handle in `*out`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kw_ess_build(n_bar: f64, l_bar: i64, dl: f64, out: *mut *mut KwEss) -> KwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = ess_build(&PhysicalSpec::new(n_bar, l_bar, dl)?)?;
        unsafe { write(out, Box::into_raw(Box::new(KwEss { inner: p })), "out") }
    })
}

/// Creates a packet from explicit parameters.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kw_ess_new(params: KwEssParams, out: *mut *mut KwEss) -> KwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = EssParams::new(params.alpha, params.beta, params.gamma0, params.gamma1, params.delta)?;
        unsafe { write(out, Box::into_raw(Box::new(KwEss { inner: p })), "out") }
    })
}

/// Copies the parameters of `ess` into `*out`.
///
/// # Safety
/// `ess` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kw_ess_params(ess: *const KwEss, out: *mut KwEssParams) -> KwStatus {
    guard(|| {
        let p = unsafe { deref(ess, "ess") }?.inner;
        let v =
            KwEssParams { alpha: p.alpha(), beta: p.beta(), gamma0: p.gamma0(), gamma1: p.gamma1(), delta: p.delta() };
        unsafe { write(out, v, "out") }
    })
}

/// Amplitude `Ψ(r, φ)` at `t = 0`.
///
/// # Safety
/// `ess` must be a live handle; `re` and `im` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kw_ess_eval(ess: *const KwEss, r: f64, phi: f64, re: *mut f64, im: *mut f64) -> KwStatus {
    guard(|| {
        let p = unsafe { deref(ess, "ess") }?;
        if re.is_null() || im.is_null() {
            return Err(null("re/im"));
        }
        let v = ess_eval(&p.inner, r, phi)?;
        unsafe {
            write(re, v.re, "re")?;
            write(im, v.im, "im")
        }
    })
}

/// Runge–Lenz uncertainties of the packet at `t = 0` (closed form).
///
/// # Safety
/// `ess` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kw_ess_runge_lenz(ess: *const KwEss, out: *mut KwRungeLenz) -> KwStatus {
    guard(|| {
        let rl = runge_lenz_analytic(&unsafe { deref(ess, "ess") }?.inner)?;
        let v = KwRungeLenz {
            mean_ax: rl.mean_ax,
            mean_ay: rl.mean_ay,
            d_ax: rl.d_ax,
            d_ay: rl.d_ay,
            product: rl.product,
            hl: rl.hl,
            z: rl.z,
        };
        unsafe { write(out, v, "out") }
    })
}

/// Releases a packet handle; null is ignored.
///
/// # Safety
/// `ess` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kw_ess_free(ess: *mut KwEss) {
    if !ess.is_null() {
        // SAFETY: created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(ess) });
    }
}

/// Table with every defect zero.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kw_defect_table_zero(out: *mut *mut KwDefectTable) -> KwStatus {
    guard(|| {
        let t = Box::new(KwDefectTable { inner: QuantumDefectTable::zero() });
        unsafe { write(out, Box::into_raw(t), "out") }
    })
}

/// Parses a table such as `{"defects": {"0": 0.40, "1": 0.05}}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kw_defect_table_from_json(json: *const c_char, out: *mut *mut KwDefectTable) -> KwStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: non-null and NUL-terminated per the contract.
        let text = unsafe { CStr::from_ptr(json) }
            .to_str()
            .map_err(|e| Failure::Status(KwStatus::InvalidUtf8, e.to_string()))?;
        let t = QuantumDefectTable::from_json(text)?;
        unsafe { write(out, Box::into_raw(Box::new(KwDefectTable { inner: t })), "out") }
    })
}

/// Releases a defect table; null is ignored.
///
/// # Safety
/// `table` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kw_defect_table_free(table: *mut KwDefectTable) {
    if !table.is_null() {
        // SAFETY: created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(table) });
    }
}

/// Builds the defect packet for `(n̄, l̄, ΔL)` against the expansion-weighted energy target.
///
/// # Safety
/// `table` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kw_sqdt_build(
    n_bar: f64,
    l_bar: i64,
    dl: f64,
    table: *const KwDefectTable,
    out: *mut *mut KwEss,
) -> KwStatus {
    guard(|| {
        let t = unsafe { deref(table, "table") }?;
        if out.is_null() {
            return Err(null("out"));
        }
        let p = sqdt_build(&PhysicalSpec::new(n_bar, l_bar, dl)?, &t.inner, EnergyTarget::Expansion)?;
        unsafe { write(out, Box::into_raw(Box::new(KwEss { inner: p })), "out") }
    })
}

/// Hydrogenic expansion of `ess` with tail mass at most `tol`.
///
/// # Safety
/// `ess` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kw_spectral_expand(ess: *const KwEss, tol: f64, out: *mut *mut KwSpectral) -> KwStatus {
    guard(|| {
        let p = unsafe { deref(ess, "ess") }?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = expand(&p.inner, tol)?;
        unsafe { write(out, Box::into_raw(Box::new(KwSpectral { inner: s })), "out") }
    })
}

/// Expansion of `ess` in the defect eigenbasis of `table`.
///
/// # Safety
/// `ess` and `table` must be live handles; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kw_sqdt_expand(
    ess: *const KwEss,
    table: *const KwDefectTable,
    tol: f64,
    out: *mut *mut KwSpectral,
) -> KwStatus {
    guard(|| {
        let p = unsafe { deref(ess, "ess") }?;
        let t = unsafe { deref(table, "table") }?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = sqdt_expand(&p.inner, &t.inner, tol)?;
        unsafe { write(out, Box::into_raw(Box::new(KwSpectral { inner: s })), "out") }
    })
}

/// Number of retained coefficients.
///
/// # Safety
/// `s` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kw_spectral_len(s: *const KwSpectral, out: *mut usize) -> KwStatus {
    guard(|| {
        let n = unsafe { deref(s, "spectral") }?.inner.coefficients().len();
        unsafe { write(out, n, "out") }
    })
}

/// Coefficient `index` in `(n, l)` order.
///
/// # Safety
/// `s` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kw_spectral_coefficient(
    s: *const KwSpectral,
    index: usize,
    out: *mut KwCoefficient,
) -> KwStatus {
    guard(|| {
        let coeffs = unsafe { deref(s, "spectral") }?.inner.coefficients();
        let c = coeffs.get(index).ok_or_else(|| {
            Failure::Status(KwStatus::InvalidArgument, format!("index {index} out of range ({})", coeffs.len()))
        })?;
        let v = KwCoefficient { n: c.n, l: c.l, re: c.c.re, im: c.c.im, energy: c.energy };
        unsafe { write(out, v, "out") }
    })
}

/// Time of the state and `Σ|c|²`.
///
/// # Safety
/// `s` must be a live handle; `t` and `norm` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kw_spectral_info(s: *const KwSpectral, t: *mut f64, norm: *mut f64) -> KwStatus {
    guard(|| {
        let st = &unsafe { deref(s, "spectral") }?.inner;
        if t.is_null() || norm.is_null() {
            return Err(null("t/norm"));
        }
        unsafe {
            write(t, st.t(), "t")?;
            write(norm, st.norm(), "norm")
        }
    })
}

/// New state advanced by `dt` atomic units; `s` is unchanged.
///
/// # Safety
/// `s` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kw_spectral_evolve(s: *const KwSpectral, dt: f64, out: *mut *mut KwSpectral) -> KwStatus {
    guard(|| {
        let st = unsafe { deref(s, "spectral") }?;
        if !dt.is_finite() {
            return Err(Failure::Status(KwStatus::InvalidArgument, format!("dt must be finite, got {dt}")));
        }
        let next = Box::new(KwSpectral { inner: st.inner.evolve(dt) });
        unsafe { write(out, Box::into_raw(next), "out") }
    })
}

/// `|⟨Ψ(t)|Ψ(t+τ)⟩|²`.
///
/// # Safety
/// `s` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kw_spectral_autocorrelation(s: *const KwSpectral, tau: f64, out: *mut f64) -> KwStatus {
    guard(|| {
        let v = unsafe { deref(s, "spectral") }?.inner.autocorrelation(tau);
        unsafe { write(out, v, "out") }
    })
}

/// Writes `r|Ψ|²` on the polar grid into `values` (row-major, `n_r * n_phi` entries).
///
/// # Safety
/// `s` must be a live handle; `r` and `phi` must point to `n_r` and `n_phi`
/// readable values; `values` must hold `capacity` writable values.
#[no_mangle]
pub unsafe extern "C" fn kw_spectral_reconstruct(
    s: *const KwSpectral,
    r: *const f64,
    n_r: usize,
    phi: *const f64,
    n_phi: usize,
    values: *mut f64,
    capacity: usize,
) -> KwStatus {
    guard(|| {
        let st = unsafe { deref(s, "spectral") }?;
        if r.is_null() || phi.is_null() || values.is_null() {
            return Err(null("r/phi/values"));
        }
        let needed = n_r
            .checked_mul(n_phi)
            .ok_or_else(|| Failure::Status(KwStatus::InvalidArgument, "grid too large".into()))?;
        if capacity < needed {
            return Err(Failure::Status(
                KwStatus::BufferTooSmall,
                format!("values holds {capacity} entries, {needed} needed"),
            ));
        }
        // SAFETY: lengths per the contract.
        let (rs, ps) = unsafe { (std::slice::from_raw_parts(r, n_r), std::slice::from_raw_parts(phi, n_phi)) };
        let g = reconstruct(&st.inner, rs, ps)?;
        // SAFETY: capacity checked above.
        unsafe { ptr::copy_nonoverlapping(g.values.as_ptr(), values, needed) };
        Ok(())
    })
}

/// Releases an expansion; null is ignored.
///
/// # Safety
/// `s` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kw_spectral_free(s: *mut KwSpectral) {
    if !s.is_null() {
        // SAFETY: created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(s) });
    }
}
