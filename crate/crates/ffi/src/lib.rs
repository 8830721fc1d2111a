//! C interface to `gpswf`.
//!
//! Every entry point returns a [`GpswfStatus`]. On failure a description is
//! kept per thread and can be read with [`gpswf_last_error`]. Panics are caught
//! at the boundary and reported as `GPSWF_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gpswf::approx::{expand, reconstruct, CoefficientSet, VolumeSamples};
use gpswf::basis::{eval_basis, truncation_set, GridSpec, TruncationSet};
use gpswf::radial::{solve_band, BandSpec, RadialSpectrum, SpectrumOptions};
use gpswf::specfun;
use gpswf::Error;
use num_complex::Complex64;

/// Result of a call across the C boundary.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GpswfStatus {
    Ok = 0,
    /// A required pointer argument was null.
    Null = 1,
    /// An argument lies outside the domain of the operation.
    Domain = 2,
    /// The sampling constraint `c <= pi L` is violated.
    Constraint = 3,
    /// The radial quadrature could not resolve the bandlimit.
    Resolution = 4,
    /// The computed spectrum does not cover the requested threshold.
    Coverage = 5,
    Io = 6,
    /// Input data is inconsistent or malformed.
    Format = 7,
    /// An internal panic was caught.
    Panic = 8,
}

/// Wavefunctions admitted by a concentration threshold, with their radial
/// eigensystems. Opaque to C.
pub struct GpswfBasis {
    spectrum: RadialSpectrum,
    set: TruncationSet,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> GpswfStatus {
    match e {
        Error::Domain(_) | Error::Size(_) | Error::Fit(_) => GpswfStatus::Domain,
        Error::Constraint(_) => GpswfStatus::Constraint,
        Error::Resolution(_) => GpswfStatus::Resolution,
        Error::Coverage(_) => GpswfStatus::Coverage,
        Error::Io(_) => GpswfStatus::Io,
        Error::Input(_) | Error::Format(_) | Error::Json(_) | Error::Csv(_) => GpswfStatus::Format,
    }
}

struct Failure(GpswfStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(GpswfStatus::Null, format!("{name} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> GpswfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GpswfStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            GpswfStatus::Panic
        }
    }
}

unsafe fn out_ref<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn basis_ref<'a>(p: *const GpswfBasis) -> Result<&'a GpswfBasis, Failure> {
    p.as_ref().ok_or_else(|| null("basis"))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn check_len(name: &str, got: usize, want: usize) -> Result<(), Failure> {
    if got != want {
        return Err(Failure(GpswfStatus::Format, format!("{name} holds {got} entries, expected {want}")));
    }
    Ok(())
}

/// Message of the last failed call on this thread. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gpswf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Solves the radial problems for bandlimit `c` and keeps every index whose
/// concentration ratio exceeds `t`. Free the result with [`gpswf_basis_free`].
///
/// # Safety
/// `out` must be null or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn gpswf_basis_new(c: f64, t: f64, out: *mut *mut GpswfBasis) -> GpswfStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let spectrum = solve_band(BandSpec::new(c)?, SpectrumOptions::default())?;
        let set = truncation_set(&spectrum, t)?;
        *out = Box::into_raw(Box::new(GpswfBasis { spectrum, set }));
        Ok(())
    })
}

/// Releases a basis. Null is ignored.
///
/// # Safety
/// `basis` must be null or a pointer returned by [`gpswf_basis_new`] that has
/// not been freed.
#[no_mangle]
pub unsafe extern "C" fn gpswf_basis_free(basis: *mut GpswfBasis) {
    if !basis.is_null() {
        drop(Box::from_raw(basis));
    }
}

/// Number of wavefunctions in the basis.
///
/// # Safety
/// `basis` must be a live handle; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gpswf_basis_len(basis: *const GpswfBasis, out_len: *mut usize) -> GpswfStatus {
    guard(|| {
        *out_ref(out_len, "out_len")? = basis_ref(basis)?.set.len();
        Ok(())
    })
}

/// Index `(N, m, n)` and concentration `alpha~` of entry `i`.
///
/// # Safety
/// `basis` must be a live handle; every output pointer must be writable.
#[no_mangle]
pub unsafe extern "C" fn gpswf_basis_index(
    basis: *const GpswfBasis,
    i: usize,
    out_degree: *mut u32,
    out_order: *mut i32,
    out_radial: *mut u32,
    out_alpha_tilde: *mut f64,
) -> GpswfStatus {
    guard(|| {
        let b = basis_ref(basis)?;
        let index = *b.set.indices().get(i).ok_or_else(|| {
            Failure(GpswfStatus::Domain, format!("entry {i} is out of range for a basis of {}", b.set.len()))
        })?;
        *out_ref(out_degree, "out_degree")? = index.degree;
        *out_ref(out_order, "out_order")? = index.order;
        *out_ref(out_radial, "out_radial")? = index.radial;
        *out_ref(out_alpha_tilde, "out_alpha_tilde")? = b.set.alpha_tilde(index).expect("index in set");
        Ok(())
    })
}

/// `psi(x)` for entry `i` at a point `x[3]` of the closed unit ball.
///
/// # Safety
/// `basis` must be a live handle, `x` must point to 3 doubles and the outputs
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn gpswf_basis_eval(
    basis: *const GpswfBasis,
    i: usize,
    x: *const f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> GpswfStatus {
    guard(|| {
        let b = basis_ref(basis)?;
        let index = *b.set.indices().get(i).ok_or_else(|| {
            Failure(GpswfStatus::Domain, format!("entry {i} is out of range for a basis of {}", b.set.len()))
        })?;
        let x = slice(x, 3, "x")?;
        let sys = b.spectrum.system(index.degree).expect("admitted degrees are solved");
        let v = eval_basis(index, sys, [x[0], x[1], x[2]])?;
        *out_ref(out_re, "out_re")? = v.re;
        *out_ref(out_im, "out_im")? = v.im;
        Ok(())
    })
}

/// Expansion coefficients `a^` of real samples on the `(2L+1)^3` grid with
/// spacing `1/L`, laid out with the last coordinate fastest. Writes one
/// coefficient per basis entry into `out_re` and `out_im`.
///
/// # Safety
/// `basis` must be a live handle, `values` must hold `values_len` doubles and
/// each output must hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gpswf_expand_real(
    basis: *const GpswfBasis,
    l: u32,
    values: *const f64,
    values_len: usize,
    out_re: *mut f64,
    out_im: *mut f64,
    out_len: usize,
) -> GpswfStatus {
    guard(|| {
        let b = basis_ref(basis)?;
        let grid = GridSpec::new(l)?;
        check_len("values", values_len, grid.len())?;
        check_len("output", out_len, b.set.len())?;
        let values = slice(values, values_len, "values")?;
        let (re, im) = (slice_mut(out_re, out_len, "out_re")?, slice_mut(out_im, out_len, "out_im")?);
        let volume = VolumeSamples::from_real(grid, values.to_vec())?;
        let coeffs = expand(&volume, &b.set, &b.spectrum)?;
        for (k, a) in coeffs.a_hat().iter().enumerate() {
            re[k] = a.re;
            im[k] = a.im;
        }
        Ok(())
    })
}

/// Evaluates `sum a^ psi` at `n_points` points (`points[3 * j .. 3 * j + 3]`)
/// of the closed unit ball, given one coefficient per basis entry.
///
/// # Safety
/// `basis` must be a live handle; `coeff_re` and `coeff_im` must hold
/// `n_coeffs` doubles, `points` `3 * n_points` doubles, and each output
/// `n_points` doubles.
#[no_mangle]
pub unsafe extern "C" fn gpswf_reconstruct(
    basis: *const GpswfBasis,
    coeff_re: *const f64,
    coeff_im: *const f64,
    n_coeffs: usize,
    points: *const f64,
    n_points: usize,
    out_re: *mut f64,
    out_im: *mut f64,
) -> GpswfStatus {
    guard(|| {
        let b = basis_ref(basis)?;
        check_len("coefficients", n_coeffs, b.set.len())?;
        let (cre, cim) = (slice(coeff_re, n_coeffs, "coeff_re")?, slice(coeff_im, n_coeffs, "coeff_im")?);
        let coords = slice(points, 3 * n_points, "points")?;
        let (re, im) = (slice_mut(out_re, n_points, "out_re")?, slice_mut(out_im, n_points, "out_im")?);
        let indices = b.set.indices().to_vec();
        let alpha_tilde: Vec<f64> = indices.iter().map(|&i| b.set.alpha_tilde(i).expect("index in set")).collect();
        let a_hat: Vec<Complex64> = cre.iter().zip(cim).map(|(&r, &i)| Complex64::new(r, i)).collect();
        let b_hat = indices
            .iter()
            .zip(&a_hat)
            .map(|(&i, a)| a / b.set.alpha(i).expect("index in set"))
            .collect();
        // the grid rate only labels the coefficients and plays no part in evaluation
        let coeffs = CoefficientSet::from_parts(
            b.set.band(),
            1,
            b.set.t(),
            false,
            indices,
            alpha_tilde,
            b_hat,
            a_hat,
        )?;
        let pts: Vec<[f64; 3]> = coords.chunks_exact(3).map(|p| [p[0], p[1], p[2]]).collect();
        let rec = reconstruct(&coeffs, &b.spectrum, &pts)?;
        for (j, v) in rec.values.iter().enumerate() {
            re[j] = v.re;
            im[j] = v.im;
        }
        Ok(())
    })
}

/// The besinc kernel `h_c(x)` at `x[3]`.
///
/// # Safety
/// `x` must point to 3 doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gpswf_besinc(c: f64, x: *const f64, out: *mut f64) -> GpswfStatus {
    guard(|| {
        let x = slice(x, 3, "x")?;
        *out_ref(out, "out")? = specfun::besinc(c, [x[0], x[1], x[2]])?;
        Ok(())
    })
}

/// The spherical Bessel function `j_n(z)` for `z >= 0`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gpswf_spherical_bessel(n: u32, z: f64, out: *mut f64) -> GpswfStatus {
    guard(|| {
        *out_ref(out, "out")? = specfun::spherical_bessel(n, z)?;
        Ok(())
    })
}
