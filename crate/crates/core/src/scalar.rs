//! Scalar abstraction shared by every numeric routine.
//!
//! All matrix code is generic over [`Real`], implemented for `f32` and `f64`.
//! Hermitian eigendecompositions are delegated to LAPACK (`cheevr`/`zheevr`),
//! which is the only place where the two precisions diverge.

use std::fmt::{Debug, Display, LowerExp};
use std::os::raw::{c_char, c_int};

use lapack_sys::__BindgenComplex;
use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Which eigenpairs a Hermitian eigen-solve should return.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EigRange<T> {
    All,
    /// Eigenvalues in the half-open interval `(lower, +inf)`.
    Above(T),
    /// Eigenvalues with ascending zero-based indices `lo..=hi`.
    Index(usize, usize),
}

/// Raw LAPACK Hermitian eigen-solver hook.
pub trait HermitianEig: Sized {
    /// Eigenpairs of the column-major Hermitian `n x n` matrix in `a`
    /// (lower triangle referenced, contents destroyed).
    ///
    /// Returns ascending eigenvalues and, when `vectors` is set, the
    /// corresponding eigenvectors as a column-major `n x m` buffer.
    fn heevr(
        a: &mut [Complex<Self>],
        n: usize,
        range: EigRange<Self>,
        vectors: bool,
    ) -> Result<(Vec<Self>, Vec<Complex<Self>>), i32>;
}

/// Real floating-point scalar used throughout the crate.
pub trait Real:
    RealField
    + Copy
    + Default
    + FromPrimitive
    + ToPrimitive
    + Display
    + LowerExp
    + Debug
    + Send
    + Sync
    + HermitianEig
    + 'static
{
    /// Converts an `f64` literal into this precision.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 is representable")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count is representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Machine epsilon of this precision.
    fn epsilon() -> Self;
}

impl Real for f32 {
    fn epsilon() -> Self {
        f32::EPSILON
    }
}

impl Real for f64 {
    fn epsilon() -> Self {
        f64::EPSILON
    }
}

macro_rules! impl_heevr {
    ($t:ty, $func:path) => {
        impl HermitianEig for $t {
            fn heevr(
                a: &mut [Complex<$t>],
                n: usize,
                range: EigRange<$t>,
                vectors: bool,
            ) -> Result<(Vec<$t>, Vec<Complex<$t>>), i32> {
                assert_eq!(a.len(), n * n, "buffer does not hold an n x n matrix");
                if n == 0 {
                    return Ok((Vec::new(), Vec::new()));
                }
                let jobz = if vectors { b'V' } else { b'N' } as c_char;
                let uplo = b'L' as c_char;
                let (rng, vl, vu, il, iu) = match range {
                    EigRange::All => (b'A', 0.0, 0.0, 1, n as c_int),
                    EigRange::Above(lower) => (b'V', lower, <$t>::MAX, 1, n as c_int),
                    EigRange::Index(lo, hi) => {
                        assert!(lo <= hi && hi < n, "eigen index range out of bounds");
                        (b'I', 0.0, 0.0, lo as c_int + 1, hi as c_int + 1)
                    }
                };
                let rng = rng as c_char;
                let nn = n as c_int;
                let abstol: $t = 0.0;
                let mut m: c_int = 0;
                let mut w = vec![0.0 as $t; n];
                let ncols = match range {
                    EigRange::Index(lo, hi) => hi - lo + 1,
                    _ => n,
                };
                let mut z = vec![Complex::<$t>::new(0.0, 0.0); if vectors { n * ncols } else { 1 }];
                let ldz = if vectors { nn } else { 1 };
                let mut isuppz = vec![0 as c_int; 2 * n];
                let mut info: c_int = 0;

                let mut work_q = [Complex::<$t>::new(0.0, 0.0)];
                let mut rwork_q = [0.0 as $t];
                let mut iwork_q = [0 as c_int];
                let query: c_int = -1;
                // SAFETY: all pointers reference live buffers sized per the LAPACK
                // contract; Complex<T> and __BindgenComplex<T> are both repr(C) {re, im}.
                unsafe {
                    $func(
                        &jobz,
                        &rng,
                        &uplo,
                        &nn,
                        a.as_mut_ptr() as *mut __BindgenComplex<$t>,
                        &nn,
                        &vl,
                        &vu,
                        &il,
                        &iu,
                        &abstol,
                        &mut m,
                        w.as_mut_ptr(),
                        z.as_mut_ptr() as *mut __BindgenComplex<$t>,
                        &ldz,
                        isuppz.as_mut_ptr(),
                        work_q.as_mut_ptr() as *mut __BindgenComplex<$t>,
                        &query,
                        rwork_q.as_mut_ptr(),
                        &query,
                        iwork_q.as_mut_ptr(),
                        &query,
                        &mut info,
                    );
                }
                if info != 0 {
                    return Err(info);
                }
                let lwork = (work_q[0].re as c_int).max(2 * n as c_int);
                let lrwork = (rwork_q[0] as c_int).max(24 * n as c_int);
                let liwork = iwork_q[0].max(10 * n as c_int);
                let mut work = vec![Complex::<$t>::new(0.0, 0.0); lwork as usize];
                let mut rwork = vec![0.0 as $t; lrwork as usize];
                let mut iwork = vec![0 as c_int; liwork as usize];
                // SAFETY: as above, with workspaces sized from the query.
                unsafe {
                    $func(
                        &jobz,
                        &rng,
                        &uplo,
                        &nn,
                        a.as_mut_ptr() as *mut __BindgenComplex<$t>,
                        &nn,
                        &vl,
                        &vu,
                        &il,
                        &iu,
                        &abstol,
                        &mut m,
                        w.as_mut_ptr(),
                        z.as_mut_ptr() as *mut __BindgenComplex<$t>,
                        &ldz,
                        isuppz.as_mut_ptr(),
                        work.as_mut_ptr() as *mut __BindgenComplex<$t>,
                        &lwork,
                        rwork.as_mut_ptr(),
                        &lrwork,
                        iwork.as_mut_ptr(),
                        &liwork,
                        &mut info,
                    );
                }
                if info != 0 {
                    return Err(info);
                }
                let m = m as usize;
                w.truncate(m);
                if vectors {
                    z.truncate(n * m);
                } else {
                    z.clear();
                }
                Ok((w, z))
            }
        }
    };
}

impl_heevr!(f32, lapack_sys::cheevr_);
impl_heevr!(f64, lapack_sys::zheevr_);

/// `e^{j theta}`.
#[inline]
pub fn cis<T: Real>(theta: T) -> Complex<T> {
    let (s, c) = theta.sin_cos();
    Complex::new(c, s)
}
