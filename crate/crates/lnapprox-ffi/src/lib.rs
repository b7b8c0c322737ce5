//! C ABI for `lnapprox`.
//!
//! Networks are exposed as the opaque handle [`LnaNet`], created by the
//! `lna_net_from_json`, `lna_compile_*` and `lna_sobolev_build` functions and
//! released with [`lna_net_free`]. Every fallible function returns an
//! [`LnaStatus`]; on failure a description is available from
//! [`lna_last_error_message`] on the same thread. Panics never cross the
//! boundary and are reported as [`LnaStatus::Panic`].

#![allow(clippy::too_many_arguments)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use lnapprox::construct::{compile_deep_phi_net_to_pln, compile_phi_to_ln, compile_shallow_phi_net_to_pln, compile_sign_to_ln};
use lnapprox::kernels::{apply_ln, apply_ln_delta, apply_ls, apply_pq_norm, phi_pq, validate_pq};
use lnapprox::netir::NetIR;
use lnapprox::sobolev::{build_sobolev_approximator, target_by_name, SobolevConfig};
use lnapprox::Error;

/// Signature shared by the single-unit compilers.
type SingleUnitCompiler = fn(&[f64], f64, &[f64], &[f64], usize) -> lnapprox::Result<NetIR>;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LnaStatus {
    Ok = 0,
    InvalidArgument = 1,
    Dimension = 2,
    Hypothesis = 3,
    Unbounded = 4,
    Internal = 5,
    Serde = 6,
    NullPointer = 7,
    InvalidUtf8 = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Opaque network handle.
pub struct LnaNet {
    net: NetIR,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let text = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

fn fail(status: LnaStatus, msg: impl Into<String>) -> LnaStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> LnaStatus {
    let status = match e {
        Error::InvalidArgument(_) => LnaStatus::InvalidArgument,
        Error::Dimension { .. } => LnaStatus::Dimension,
        Error::Hypothesis(_) => LnaStatus::Hypothesis,
        Error::Unbounded(_) => LnaStatus::Unbounded,
        Error::Internal(_) => LnaStatus::Internal,
        Error::Serde(_) => LnaStatus::Serde,
    };
    fail(status, e.to_string())
}

/// Runs `body`, converting panics and errors into status codes.
fn guard(body: impl FnOnce() -> Result<(), LnaStatus>) -> LnaStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => LnaStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(LnaStatus::Panic, "internal panic"),
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, LnaStatus>;
}

impl<T> OrStatus<T> for lnapprox::Result<T> {
    fn or_status(self) -> Result<T, LnaStatus> {
        self.map_err(from_error)
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), LnaStatus> {
    if p.is_null() {
        Err(fail(LnaStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

/// # Safety
/// `p` must be null only if `n == 0`, otherwise valid for `n` reads.
unsafe fn input<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], LnaStatus> {
    if n == 0 {
        return Ok(&[]);
    }
    non_null(p, what)?;
    Ok(slice::from_raw_parts(p, n))
}

/// # Safety
/// `p` must be valid for `n` writes when `n > 0`.
unsafe fn output<'a>(p: *mut f64, n: usize, what: &str) -> Result<&'a mut [f64], LnaStatus> {
    if n == 0 {
        return Ok(&mut []);
    }
    non_null(p, what)?;
    Ok(slice::from_raw_parts_mut(p, n))
}

fn copy_out(values: &[f64], out: &mut [f64]) -> Result<(), LnaStatus> {
    if out.len() != values.len() {
        return Err(fail(LnaStatus::Dimension, format!("output buffer holds {}, result has {}", out.len(), values.len())));
    }
    out.copy_from_slice(values);
    Ok(())
}

/// # Safety
/// `out` must be a valid pointer to a handle slot.
unsafe fn emit(net: NetIR, out: *mut *mut LnaNet) -> Result<(), LnaStatus> {
    non_null(out, "output handle")?;
    *out = Box::into_raw(Box::new(LnaNet { net }));
    Ok(())
}

/// # Safety
/// `net` must be null or a live handle.
unsafe fn handle<'a>(net: *const LnaNet) -> Result<&'a NetIR, LnaStatus> {
    non_null(net, "net handle")?;
    Ok(&(*net).net)
}

/// # Safety
/// `s` must be null or a NUL-terminated string.
unsafe fn string<'a>(s: *const c_char, what: &str) -> Result<&'a str, LnaStatus> {
    non_null(s, what)?;
    CStr::from_ptr(s).to_str().map_err(|_| fail(LnaStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lna_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Length in bytes (without the terminating NUL) of the last error message
/// on this thread, or 0 if there is none.
#[no_mangle]
pub extern "C" fn lna_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(0, |s| s.as_bytes().len()))
}

/// Copies the last error message, NUL-terminated, into `buf` of size `len`.
///
/// # Safety
/// `buf` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn lna_last_error_message(buf: *mut c_char, len: usize) -> LnaStatus {
    if buf.is_null() {
        return LnaStatus::NullPointer;
    }
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_ref().map_or(&[0u8][..], |s| s.as_bytes_with_nul());
        if bytes.len() > len {
            return LnaStatus::BufferTooSmall;
        }
        ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, bytes.len());
        LnaStatus::Ok
    })
}

/// Parses a NetIR JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn lna_net_from_json(json: *const c_char, out: *mut *mut LnaNet) -> LnaStatus {
    guard(|| {
        let text = string(json, "json")?;
        emit(NetIR::from_json(text).or_status()?, out)
    })
}

/// Serializes a net to a newly allocated JSON string; release it with
/// [`lna_string_free`].
///
/// # Safety
/// `net` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lna_net_to_json(net: *const LnaNet, out: *mut *mut c_char) -> LnaStatus {
    guard(|| {
        let text = handle(net)?.to_json().or_status()?;
        non_null(out, "output string")?;
        *out = CString::new(text).map_err(|_| fail(LnaStatus::Internal, "JSON contains NUL"))?.into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string obtained from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lna_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Releases a net handle. Null is ignored.
///
/// # Safety
/// `net` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lna_net_free(net: *mut LnaNet) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Input and output dimensions, number of hidden layers and maximal hidden
/// width. Any output pointer may be null.
///
/// # Safety
/// `net` must be a live handle; non-null outputs must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lna_net_shape(net: *const LnaNet, input_dim: *mut usize, output_dim: *mut usize, depth: *mut usize, width: *mut usize) -> LnaStatus {
    guard(|| {
        let n = handle(net)?;
        for (slot, value) in [(input_dim, n.input_dim()), (output_dim, n.output_dim()), (depth, n.depth()), (width, n.width())] {
            if !slot.is_null() {
                *slot = value;
            }
        }
        Ok(())
    })
}

/// Evaluates the net at `x` (length `n_in`) into `y` (length `n_out`).
///
/// # Safety
/// `x` and `y` must be valid for `n_in` reads and `n_out` writes.
#[no_mangle]
pub unsafe extern "C" fn lna_net_eval(net: *const LnaNet, x: *const f64, n_in: usize, y: *mut f64, n_out: usize) -> LnaStatus {
    guard(|| {
        let values = handle(net)?.eval(input(x, n_in, "x")?).or_status()?;
        copy_out(&values, output(y, n_out, "y")?)
    })
}

/// As [`lna_net_eval`], carrying double-double precision through all layers.
///
/// # Safety
/// `x` and `y` must be valid for `n_in` reads and `n_out` writes.
#[no_mangle]
pub unsafe extern "C" fn lna_net_eval_extended(net: *const LnaNet, x: *const f64, n_in: usize, y: *mut f64, n_out: usize) -> LnaStatus {
    guard(|| {
        let values = handle(net)?.eval_extended(input(x, n_in, "x")?).or_status()?;
        copy_out(&values, output(y, n_out, "y")?)
    })
}

/// Layer normalization of `h` (length `n`) into `out` (length `n`).
///
/// # Safety
/// `h` and `out` must be valid for `n` elements.
#[no_mangle]
pub unsafe extern "C" fn lna_apply_ln(h: *const f64, n: usize, out: *mut f64) -> LnaStatus {
    guard(|| copy_out(&apply_ln(input(h, n, "h")?).or_status()?, output(out, n, "out")?))
}

/// RMS normalization of `h` into `out`.
///
/// # Safety
/// `h` and `out` must be valid for `n` elements.
#[no_mangle]
pub unsafe extern "C" fn lna_apply_ls(h: *const f64, n: usize, out: *mut f64) -> LnaStatus {
    guard(|| copy_out(&apply_ls(input(h, n, "h")?).or_status()?, output(out, n, "out")?))
}

/// Stabilized layer normalization (h − μ)/(σ + δ).
///
/// # Safety
/// `h` and `out` must be valid for `n` elements.
#[no_mangle]
pub unsafe extern "C" fn lna_apply_ln_delta(h: *const f64, n: usize, delta: f64, out: *mut f64) -> LnaStatus {
    guard(|| copy_out(&apply_ln_delta(input(h, n, "h")?, delta).or_status()?, output(out, n, "out")?))
}

/// (p,q)-normalization of `h` into `out`.
///
/// # Safety
/// `h` and `out` must be valid for `n` elements.
#[no_mangle]
pub unsafe extern "C" fn lna_apply_pq_norm(h: *const f64, n: usize, p: u32, q: u32, out: *mut f64) -> LnaStatus {
    guard(|| copy_out(&apply_pq_norm(input(h, n, "h")?, p, q).or_status()?, output(out, n, "out")?))
}

/// φ_{p,q}(x).
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn lna_phi_pq(p: u32, q: u32, x: f64, out: *mut f64) -> LnaStatus {
    guard(|| {
        validate_pq(p, q).or_status()?;
        non_null(out, "out")?;
        *out = phi_pq(p, q, x);
        Ok(())
    })
}

/// # Safety
/// Pointer arguments as documented on the public compile functions.
#[allow(clippy::too_many_arguments)]
unsafe fn compile_neuron(
    w1: *const f64,
    d: usize,
    b1: f64,
    w2: *const f64,
    b2: *const f64,
    m: usize,
    ns: usize,
    out: *mut *mut LnaNet,
    f: SingleUnitCompiler,
) -> LnaStatus {
    guard(|| {
        let net = f(input(w1, d, "w1")?, b1, input(w2, m, "w2")?, input(b2, m, "b2")?, ns).or_status()?;
        emit(net, out)
    })
}

/// LN-net with one group of size `ns` equal to x ↦ w2·sign(w1ᵀx + b1) + b2,
/// with `w1` of length `d` and `w2`, `b2` of length `m`.
///
/// # Safety
/// Arrays must be valid for the given lengths; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn lna_compile_sign_to_ln(
    w1: *const f64,
    d: usize,
    b1: f64,
    w2: *const f64,
    b2: *const f64,
    m: usize,
    ns: usize,
    out: *mut *mut LnaNet,
) -> LnaStatus {
    compile_neuron(w1, d, b1, w2, b2, m, ns, out, compile_sign_to_ln)
}

/// LN-net with one group of size `ns` equal to x ↦ w2·Sat(w1ᵀx + b1) + b2.
///
/// # Safety
/// Arrays must be valid for the given lengths; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn lna_compile_phi_to_ln(
    w1: *const f64,
    d: usize,
    b1: f64,
    w2: *const f64,
    b2: *const f64,
    m: usize,
    ns: usize,
    out: *mut *mut LnaNet,
) -> LnaStatus {
    compile_neuron(w1, d, b1, w2, b2, m, ns, out, compile_phi_to_ln)
}

/// Compiles a Sat-net of any depth into a PLN-net with group size `ns`.
///
/// # Safety
/// `src` must be a live handle and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn lna_compile_phi_net_to_pln(src: *const LnaNet, ns: usize, out: *mut *mut LnaNet) -> LnaStatus {
    guard(|| {
        let net = handle(src)?;
        let compiled = if net.depth() == 1 { compile_shallow_phi_net_to_pln(net, ns) } else { compile_deep_phi_net_to_pln(net, ns) };
        emit(compiled.or_status()?, out)
    })
}

/// Builds the two-hidden-layer φ_{p,q} approximator of a named target
/// (`sin2pi`, `const` or `gauss`) on [0, 1]^d.
///
/// # Safety
/// `target` must be a NUL-terminated string and `out` a valid handle slot.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn lna_sobolev_build(
    target: *const c_char,
    d: usize,
    s: usize,
    k: usize,
    n: usize,
    delta: f64,
    p: u32,
    q: u32,
    out: *mut *mut LnaNet,
) -> LnaStatus {
    guard(|| {
        let f = target_by_name(string(target, "target")?, d).or_status()?;
        let built = build_sobolev_approximator(f.as_ref(), SobolevConfig { d, s, k, n, delta, p, q }).or_status()?;
        emit(built.net, out)
    })
}
