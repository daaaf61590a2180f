//! The three atomic-norm denoising problems: assembly from captures,
//! regularization weights, and recovery of the effective channel.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::beamtrain::{vectorize_la, ArrayDims, CaptureMode, FrameCapture, PilotConfig};
use crate::error::{dim_err, Error, Result};
use crate::scalar::Real;
use crate::sdpsolver::AdmmStats;
use crate::tensorops::{kron_product, unvec, CMatrix, CVector, ToeplitzLevels};

/// Noise amplitude substituted into the regularization weights for
/// noiseless captures.
pub const SIGMA_FLOOR: f64 = 1e-12;

/// Which atomic set the effective channel is denoised over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AnmMode {
    /// Non-location-aware, MMV over the RIS dimension.
    #[serde(rename = "1d")]
    OneDMmv,
    /// Location-aware, MMV over the joint BS/UE dimension.
    #[serde(rename = "2d")]
    TwoDMmv,
    /// Location-aware, SMV over all three dimensions.
    #[serde(rename = "3d")]
    ThreeDSmv,
}

impl AnmMode {
    pub const ALL: [AnmMode; 3] = [AnmMode::OneDMmv, AnmMode::TwoDMmv, AnmMode::ThreeDSmv];

    pub fn capture_mode(self) -> CaptureMode {
        match self {
            AnmMode::OneDMmv => CaptureMode::Nla,
            AnmMode::TwoDMmv | AnmMode::ThreeDSmv => CaptureMode::La,
        }
    }

    /// Whether the mode trains with the widened-beam codebook.
    pub fn adapted_codebook(self) -> bool {
        !matches!(self, AnmMode::TwoDMmv)
    }

    /// Toeplitz level sizes, outermost first.
    pub fn levels(self, dims: &ArrayDims) -> Result<ToeplitzLevels> {
        match self {
            AnmMode::OneDMmv => ToeplitzLevels::hermitian(&[dims.m_r]),
            AnmMode::TwoDMmv => ToeplitzLevels::hermitian(&[dims.m_b, dims.m_u]),
            AnmMode::ThreeDSmv => ToeplitzLevels::hermitian(&[dims.m_r, dims.m_b, dims.m_u]),
        }
    }

    /// Training frames `B` for a given symbol budget.
    pub fn frames_for_symbols(self, symbols: usize, dims: &ArrayDims) -> Result<usize> {
        let per_frame = match self.capture_mode() {
            CaptureMode::Nla => dims.p_b() * dims.p_u(),
            CaptureMode::La => dims.p_u(),
        };
        if symbols == 0 || symbols % per_frame != 0 {
            return Err(Error::InvalidConfig(format!(
                "{symbols} training symbols is not a positive multiple of {per_frame} for {self}"
            )));
        }
        let b = symbols / per_frame;
        let ok = if self.adapted_codebook() { b < dims.m_r } else { b == dims.m_r };
        if !ok {
            let need = if self.adapted_codebook() { "B < M_R" } else { "B = M_R" };
            return Err(Error::InvalidConfig(format!(
                "{self} with {symbols} symbols gives B = {b}, but the mode needs {need} (M_R = {})",
                dims.m_r
            )));
        }
        Ok(b)
    }
}

impl fmt::Display for AnmMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnmMode::OneDMmv => "1d",
            AnmMode::TwoDMmv => "2d",
            AnmMode::ThreeDSmv => "3d",
        })
    }
}

impl FromStr for AnmMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "1d" | "1d-mmv" | "oned" => Ok(AnmMode::OneDMmv),
            "2d" | "2d-mmv" | "twod" => Ok(AnmMode::TwoDMmv),
            "3d" | "3d-smv" | "threed" => Ok(AnmMode::ThreeDSmv),
            other => Err(Error::InvalidConfig(format!("unknown ANM mode '{other}'"))),
        }
    }
}

/// `min (tau/(2 n)) Tr T + (tau/2) Tr P + 0.5 ||G - A Z||_F^2` subject to
/// `[[T, Z], [Z^H, P]] ⪰ 0` with `T` multi-level Toeplitz.
#[derive(Clone, Debug)]
pub struct AnmProblem<T: Real> {
    /// Observation, `rows(A) x width`.
    pub g: CMatrix<T>,
    /// Sensing map `A`, `rows x dim_T`.
    pub sense: CMatrix<T>,
    pub levels: ToeplitzLevels,
    pub tau: T,
    pub mode: AnmMode,
}

impl<T: Real> AnmProblem<T> {
    pub fn new(g: CMatrix<T>, sense: CMatrix<T>, levels: ToeplitzLevels, tau: T, mode: AnmMode) -> Result<Self> {
        if sense.ncols() != levels.dim() {
            return Err(dim_err(format!(
                "sensing map has {} columns but the Toeplitz block is {}",
                sense.ncols(),
                levels.dim()
            )));
        }
        if g.nrows() != sense.nrows() || g.ncols() == 0 {
            return Err(dim_err(format!(
                "observation is {:?} but the sensing map has {} rows",
                g.shape(),
                sense.nrows()
            )));
        }
        if !(tau > T::zero()) {
            return Err(Error::InvalidInput("regularization weight must be positive".into()));
        }
        Ok(Self { g, sense, levels, tau, mode })
    }

    /// Side of the Toeplitz block, the trace weight denominator.
    pub fn dim_t(&self) -> usize {
        self.levels.dim()
    }

    /// Number of measurement vectors (side of the `P` block).
    pub fn width(&self) -> usize {
        self.g.ncols()
    }

    /// Objective value at `(T, Z, P)`.
    pub fn objective(&self, t: &CMatrix<T>, z: &CMatrix<T>, p: &CMatrix<T>) -> T {
        let half = T::lit(0.5);
        let n = T::from_count(self.dim_t());
        let tr_t = t.diagonal().iter().fold(T::zero(), |a, x| a + x.re);
        let tr_p = p.diagonal().iter().fold(T::zero(), |a, x| a + x.re);
        let resid = &self.g - &self.sense * z;
        self.tau * half * tr_t / n + self.tau * half * tr_p + half * resid.norm_squared()
    }
}

/// Solver output.
#[derive(Clone, Debug)]
pub struct AnmSolution<T: Real> {
    pub z_hat: CMatrix<T>,
    pub t_hat: CMatrix<T>,
    pub p_hat: CMatrix<T>,
    /// Multiplier of the PSD constraint on the full block matrix.
    pub dual: CMatrix<T>,
    pub stats: AdmmStats,
}

impl<T: Real> AnmSolution<T> {
    /// `[[T, Z], [Z^H, P]]`.
    pub fn block(&self) -> CMatrix<T> {
        assemble_block(&self.t_hat, &self.z_hat, &self.p_hat)
    }
}

pub(crate) fn assemble_block<T: Real>(t: &CMatrix<T>, z: &CMatrix<T>, p: &CMatrix<T>) -> CMatrix<T> {
    let n = t.nrows();
    let w = p.nrows();
    let mut out = CMatrix::zeros(n + w, n + w);
    out.view_mut((0, 0), (n, n)).copy_from(t);
    out.view_mut((0, n), (n, w)).copy_from(z);
    out.view_mut((n, 0), (w, n)).copy_from(&z.adjoint());
    out.view_mut((n, n), (w, w)).copy_from(p);
    out
}

/// Regularization weight of the mode for noise amplitude `cfg.sigma`.
pub fn regularization_tau<T: Real>(mode: AnmMode, cfg: &PilotConfig<T>, dims: &ArrayDims) -> Result<T> {
    if cfg.sigma == T::zero() {
        return Err(Error::ZeroNoise);
    }
    cfg.validate()?;
    dims.validate()?;
    let pi = T::pi();
    let one = T::one();
    let two = T::lit(2.0);
    let d = T::from_count(cfg.d_samples);
    let base = cfg.sigma * cfg.p_tx.sqrt();
    let mmv = |outer: T, inner: T, norm: T| -> T {
        // outer: dimension inside the log-weight; inner: MMV width.
        let alpha = T::lit(8.0) * pi * outer * outer.ln();
        let la = (alpha * inner).ln();
        let bracket = inner + la + (two * inner * la).sqrt() + (pi * inner / two).sqrt() + one;
        base / norm.sqrt() * (one + one / outer.ln()).sqrt() * bracket.sqrt()
    };
    let m_b = T::from_count(dims.m_b);
    let m_r = T::from_count(dims.m_r);
    let m_u = T::from_count(dims.m_u);
    Ok(match mode {
        AnmMode::OneDMmv => mmv(m_r, m_b * m_u, d * T::from_count(dims.n_b)),
        AnmMode::TwoDMmv => mmv(m_b * m_u, m_r, d * m_r),
        AnmMode::ThreeDSmv => {
            let m = m_b * m_r * m_u;
            let lm = m.ln();
            base / d.sqrt() * (one + one / lm) * (m * lm + m * (T::lit(4.0) * pi * lm).ln()).sqrt()
        }
    })
}

/// [`regularization_tau`] with [`SIGMA_FLOOR`] substituted for zero noise.
pub fn regularization_tau_floored<T: Real>(mode: AnmMode, cfg: &PilotConfig<T>, dims: &ArrayDims) -> Result<T> {
    let mut cfg = *cfg;
    if cfg.sigma == T::zero() {
        cfg.sigma = T::lit(SIGMA_FLOOR);
    }
    regularization_tau(mode, &cfg, dims)
}

/// Builds the denoising problem of `mode` from a capture.
pub fn assemble_problem<T: Real>(fc: &FrameCapture<T>, mode: AnmMode) -> Result<AnmProblem<T>> {
    let dims = &fc.dims;
    if fc.mode != mode.capture_mode() || fc.codebook.adapted != mode.adapted_codebook() {
        return Err(Error::InvalidConfig(format!(
            "{mode} needs a {:?} capture with {} codebook",
            mode.capture_mode(),
            if mode.adapted_codebook() { "an adapted" } else { "the full" }
        )));
    }
    let levels = mode.levels(dims)?;
    let tau = regularization_tau_floored(mode, &fc.pilot, dims)?;
    let w = &fc.codebook.w;
    let (g, sense) = match mode {
        AnmMode::OneDMmv => {
            // (F^T ⊗ C^H) is unitary, so G = ((F^T ⊗ C^H)^H Y)^H = Y^H (F^T ⊗ C^H).
            let k = kron_product(&fc.precoder.transpose(), &fc.combiner.adjoint());
            (fc.data.adjoint() * k, w.adjoint())
        }
        AnmMode::TwoDMmv => {
            let w_inv = w.adjoint().map(|x| x.unscale(T::from_count(dims.m_r)));
            let q = kron_product(&fc.precoder.transpose(), &fc.combiner.adjoint());
            (&fc.data * w_inv, q)
        }
        AnmMode::ThreeDSmv => {
            let y = vectorize_la(fc)?;
            let q = kron_product(&fc.precoder.transpose(), &fc.combiner.adjoint());
            let r = kron_product(&w.transpose(), &q);
            (CMatrix::from_column_slice(y.len(), 1, y.as_slice()), r)
        }
    };
    AnmProblem::new(g, sense, levels, tau, mode)
}

/// The ground-truth `Z` block implied by an effective channel.
pub fn true_z<T: Real>(h_eff: &CMatrix<T>, mode: AnmMode, cfg: &PilotConfig<T>, dims: &ArrayDims) -> CMatrix<T> {
    match mode {
        AnmMode::OneDMmv => h_eff.adjoint().map(|x| x.scale(cfg.p_tx / T::from_count(dims.n_b))),
        AnmMode::TwoDMmv => h_eff.map(|x| x.scale(cfg.p_tx)),
        AnmMode::ThreeDSmv => CMatrix::from_column_slice(h_eff.len(), 1, h_eff.as_slice()).map(|x| x.scale(cfg.p_tx)),
    }
}

/// Maps a solved `Z` block back to an `(M_B M_U) x M_R` channel estimate.
pub fn recover_effective_channel<T: Real>(
    sol: &AnmSolution<T>,
    mode: AnmMode,
    cfg: &PilotConfig<T>,
    dims: &ArrayDims,
) -> Result<CMatrix<T>> {
    let rows = dims.m_b * dims.m_u;
    let z = &sol.z_hat;
    match mode {
        AnmMode::OneDMmv => {
            if z.shape() != (dims.m_r, rows) {
                return Err(dim_err(format!("1d solution is {:?}, expected {}x{}", z.shape(), dims.m_r, rows)));
            }
            let s = T::from_count(dims.n_b) / cfg.p_tx;
            Ok(z.adjoint().map(|x| x.scale(s)))
        }
        AnmMode::TwoDMmv => {
            if z.shape() != (rows, dims.m_r) {
                return Err(dim_err(format!("2d solution is {:?}, expected {}x{}", z.shape(), rows, dims.m_r)));
            }
            Ok(z.map(|x| x.unscale(cfg.p_tx)))
        }
        AnmMode::ThreeDSmv => {
            if z.shape() != (rows * dims.m_r, 1) {
                return Err(dim_err(format!("3d solution is {:?}, expected {}x1", z.shape(), rows * dims.m_r)));
            }
            let v = CVector::from_column_slice(z.as_slice()).map(|x| x.unscale(cfg.p_tx));
            unvec(&v, rows, dims.m_r)
        }
    }
}

/// Phase-only RIS configuration from the principal right singular vector
/// of the effective channel.
pub fn ris_config_from_heff<T: Real>(h: &CMatrix<T>) -> Result<CVector<T>> {
    if h.is_empty() || h.iter().all(|x| x.re == T::zero() && x.im == T::zero()) {
        return Err(Error::DegenerateInput("effective channel is zero".into()));
    }
    let gram = h.adjoint() * h;
    let n = gram.nrows();
    let (_, vecs) = crate::tensorops::hermitian_eigen(&gram)?;
    let v = vecs.column(n - 1);
    Ok(CVector::from_fn(n, |i, _| {
        let x = v[i];
        let r = x.norm_sqr().sqrt();
        if r > T::zero() {
            x.unscale(r)
        } else {
            num_complex::Complex::new(T::one(), T::zero())
        }
    }))
}
