//! Algebraic substrate: steering vectors, DFT matrices, Kronecker and
//! Khatri-Rao products, vectorization, and projections onto the multi-level
//! Toeplitz subspace and the PSD cone.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{dim_err, Error, Result};
use crate::scalar::{cis, EigRange, Real};

/// Dense complex matrix, column-major.
pub type CMatrix<T> = DMatrix<Complex<T>>;
/// Dense complex column vector.
pub type CVector<T> = DVector<Complex<T>>;

/// Normalized spatial frequency `nu`, kept wrapped into `[-1, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct SpatialFrequency<T>(T);

impl<T: Real> SpatialFrequency<T> {
    pub fn new(nu: T) -> Self {
        Self(wrap_frequency(nu))
    }

    /// `nu = cos(theta)` for a ULA steering direction in degrees.
    pub fn from_angle_deg(theta_deg: T) -> Self {
        Self::new(theta_deg.to_radians_real().cos())
    }

    /// Composite frequency of a RIS path pair, `cos(theta_ru) - cos(phi_br)`.
    pub fn composite_deg(theta_ru_deg: T, phi_br_deg: T) -> Self {
        Self::new(theta_ru_deg.to_radians_real().cos() - phi_br_deg.to_radians_real().cos())
    }

    pub fn value(self) -> T {
        self.0
    }
}

/// Wraps a frequency into `[-1, 1)` modulo 2.
pub fn wrap_frequency<T: Real>(nu: T) -> T {
    let two = T::lit(2.0);
    let shifted = nu + T::one();
    let w = shifted - two * (shifted / two).floor() - T::one();
    // Rounding can land exactly on +1 for inputs just below an odd integer.
    if w >= T::one() {
        w - two
    } else {
        w
    }
}

/// Wrapped distance between two frequencies on the circle of circumference 2.
pub fn frequency_distance<T: Real>(a: T, b: T) -> T {
    let d = (a - b).abs();
    let d = d - T::lit(2.0) * (d / T::lit(2.0)).floor();
    d.min(T::lit(2.0) - d)
}

pub(crate) trait DegreesExt {
    fn to_radians_real(self) -> Self;
}

impl<T: Real> DegreesExt for T {
    fn to_radians_real(self) -> Self {
        self * T::pi() / T::lit(180.0)
    }
}

/// Level structure of a multi-level Toeplitz matrix, outermost level first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToeplitzLevels {
    sizes: Vec<usize>,
    hermitian: bool,
}

impl ToeplitzLevels {
    pub fn new(sizes: Vec<usize>, hermitian: bool) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(dim_err(format!("toeplitz level sizes must be non-empty and positive, got {sizes:?}")));
        }
        Ok(Self { sizes, hermitian })
    }

    /// Hermitian multi-level Toeplitz structure.
    pub fn hermitian(sizes: &[usize]) -> Result<Self> {
        Self::new(sizes.to_vec(), true)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Side length of the structured matrix.
    pub fn dim(&self) -> usize {
        self.sizes.iter().product()
    }
}

/// Steering vector `[1, e^{j pi nu}, ..., e^{j pi (M-1) nu}]^T`.
pub fn steering_vector<T: Real>(nu: SpatialFrequency<T>, m: usize) -> Result<CVector<T>> {
    if m == 0 {
        return Err(dim_err("steering vector needs at least one antenna"));
    }
    let nu = nu.value();
    Ok(CVector::from_fn(m, |i, _| {
        // Reduce m*nu modulo 2 before scaling by pi to keep phases accurate.
        let phase = T::pi() * wrap_frequency(T::from_count(i) * nu);
        cis(phase)
    }))
}

/// Steering vector for a direction given in degrees.
pub fn steering_vector_deg<T: Real>(theta_deg: T, m: usize) -> Result<CVector<T>> {
    steering_vector(SpatialFrequency::from_angle_deg(theta_deg), m)
}

/// `N x N` DFT matrix with entries `e^{+j 2 pi m n / N}`.
pub fn dft_matrix<T: Real>(n: usize) -> Result<CMatrix<T>> {
    if n == 0 {
        return Err(dim_err("DFT size must be positive"));
    }
    let nf = T::from_count(n);
    Ok(CMatrix::from_fn(n, n, |r, c| {
        let k = (r * c) % n;
        cis(T::two_pi() * T::from_count(k) / nf)
    }))
}

/// Kronecker product `A ⊗ B`.
pub fn kron_product<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = CMatrix::zeros(ra * rb, ca * cb);
    for j in 0..ca {
        for i in 0..ra {
            let s = a[(i, j)];
            out.view_mut((i * rb, j * cb), (rb, cb)).zip_apply(b, |o, x| *o = s * x);
        }
    }
    out
}

/// Column-wise Kronecker (Khatri-Rao) product `A ⋄ B`.
pub fn khatri_rao_product<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> Result<CMatrix<T>> {
    if a.ncols() != b.ncols() {
        return Err(dim_err(format!(
            "Khatri-Rao product needs equal column counts, got {} and {}",
            a.ncols(),
            b.ncols()
        )));
    }
    let (ra, rb) = (a.nrows(), b.nrows());
    let mut out = CMatrix::zeros(ra * rb, a.ncols());
    for k in 0..a.ncols() {
        for i in 0..ra {
            let s = a[(i, k)];
            for l in 0..rb {
                out[(i * rb + l, k)] = s * b[(l, k)];
            }
        }
    }
    Ok(out)
}

/// Column-stacking vectorization.
pub fn vec_mat<T: Real>(a: &CMatrix<T>) -> CVector<T> {
    CVector::from_column_slice(a.as_slice())
}

/// Inverse of [`vec_mat`] for a declared shape.
pub fn unvec<T: Real>(v: &CVector<T>, rows: usize, cols: usize) -> Result<CMatrix<T>> {
    if rows * cols != v.len() {
        return Err(dim_err(format!("cannot reshape a length-{} vector into {rows}x{cols}", v.len())));
    }
    Ok(CMatrix::from_column_slice(rows, cols, v.as_slice()))
}

/// Hermitian part `(M + M^H) / 2`.
pub fn hermitize<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    let half = T::lit(0.5);
    let n = m.nrows();
    CMatrix::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()).scale(half))
}

/// Precomputed displacement classes for repeated Toeplitz projections.
#[derive(Clone, Debug)]
pub struct ToeplitzProjector {
    levels: ToeplitzLevels,
    n: usize,
    /// Displacement class of every entry, column-major.
    keys: Vec<u32>,
    /// Entry count of every displacement class.
    counts: Vec<u32>,
}

impl ToeplitzProjector {
    pub fn new(levels: ToeplitzLevels) -> Self {
        let n = levels.dim();
        let sizes = levels.sizes();
        let nclass: usize = sizes.iter().map(|&s| 2 * s - 1).product();
        // Mixed-radix digits of every row/column index, outermost level first.
        let digits: Vec<Vec<usize>> = (0..n)
            .map(|mut idx| {
                let mut d = vec![0; sizes.len()];
                for (lvl, &s) in sizes.iter().enumerate().rev() {
                    d[lvl] = idx % s;
                    idx /= s;
                }
                d
            })
            .collect();
        let mut keys = vec![0u32; n * n];
        let mut counts = vec![0u32; nclass];
        for j in 0..n {
            for i in 0..n {
                let mut key = 0usize;
                for (lvl, &s) in sizes.iter().enumerate() {
                    let disp = digits[i][lvl] + s - 1 - digits[j][lvl];
                    key = key * (2 * s - 1) + disp;
                }
                keys[j * n + i] = key as u32;
                counts[key] += 1;
            }
        }
        Self { levels, n, keys, counts }
    }

    pub fn levels(&self) -> &ToeplitzLevels {
        &self.levels
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Frobenius-nearest matrix in the multi-level Toeplitz subspace.
    pub fn project<T: Real>(&self, m: &CMatrix<T>) -> Result<CMatrix<T>> {
        if m.shape() != (self.n, self.n) {
            return Err(dim_err(format!("toeplitz projection expects {n}x{n}, got {:?}", m.shape(), n = self.n)));
        }
        let nclass = self.counts.len();
        let mut sums = vec![Complex::<T>::new(T::zero(), T::zero()); nclass];
        for (x, &k) in m.as_slice().iter().zip(&self.keys) {
            sums[k as usize] += *x;
        }
        let values: Vec<Complex<T>> = if self.levels.is_hermitian() {
            // Reversing every displacement digit maps class k to nclass - 1 - k.
            (0..nclass)
                .map(|k| {
                    let mirror = nclass - 1 - k;
                    let total = self.counts[k] + self.counts[mirror];
                    (sums[k] + sums[mirror].conj()).unscale(T::lit(total as f64))
                })
                .collect()
        } else {
            (0..nclass).map(|k| sums[k].unscale(T::lit(self.counts[k] as f64))).collect()
        };
        let data: Vec<Complex<T>> = self.keys.iter().map(|&k| values[k as usize]).collect();
        Ok(CMatrix::from_vec(self.n, self.n, data))
    }

    /// Frobenius distance from `m` to the Toeplitz subspace.
    pub fn distance<T: Real>(&self, m: &CMatrix<T>) -> Result<T> {
        Ok((m - self.project(m)?).norm())
    }
}

/// Frobenius-nearest multi-level Toeplitz matrix.
pub fn project_multilevel_toeplitz<T: Real>(m: &CMatrix<T>, levels: &ToeplitzLevels) -> Result<CMatrix<T>> {
    ToeplitzProjector::new(levels.clone()).project(m)
}

/// Ascending eigenvalues and eigenvectors of the Hermitian part of `m`.
pub fn hermitian_eigen<T: Real>(m: &CMatrix<T>) -> Result<(DVector<T>, CMatrix<T>)> {
    let (w, z) = eigen_raw(m, EigRange::All, true)?;
    let k = w.len();
    Ok((DVector::from_vec(w), CMatrix::from_vec(m.nrows(), k, z)))
}

/// Ascending eigenvalues of the Hermitian part of `m`.
pub fn eigenvalues<T: Real>(m: &CMatrix<T>) -> Result<DVector<T>> {
    Ok(DVector::from_vec(eigen_raw(m, EigRange::All, false)?.0))
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_eigenvalue<T: Real>(m: &CMatrix<T>) -> Result<T> {
    let (w, _) = eigen_raw(m, EigRange::Index(0, 0), false)?;
    w.first().copied().ok_or_else(|| dim_err("empty matrix has no eigenvalues"))
}

fn eigen_raw<T: Real>(m: &CMatrix<T>, range: EigRange<T>, vectors: bool) -> Result<(Vec<T>, Vec<Complex<T>>)> {
    if !m.is_square() {
        return Err(dim_err(format!("eigen-solve needs a square matrix, got {:?}", m.shape())));
    }
    let mut a = hermitize(m);
    let n = a.nrows();
    T::heevr(a.as_mut_slice(), n, range, vectors).map_err(Error::Eigen)
}

/// Nearest PSD matrix in Frobenius norm: negative eigenvalues clamped to zero.
pub fn psd_project<T: Real>(m: &CMatrix<T>) -> Result<CMatrix<T>> {
    let n = m.nrows();
    let (w, z) = eigen_raw(m, EigRange::Above(T::zero()), true)?;
    let k = w.len();
    let mut out = CMatrix::zeros(n, n);
    if k == 0 {
        return Ok(out);
    }
    let v = CMatrix::from_vec(n, k, z);
    let mut scaled = v.clone();
    for (c, &lam) in w.iter().enumerate() {
        scaled.column_mut(c).scale_mut(lam);
    }
    out.gemm(Complex::new(T::one(), T::zero()), &scaled, &v.adjoint(), Complex::new(T::zero(), T::zero()));
    Ok(hermitize(&out))
}
