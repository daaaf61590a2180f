//! Pilot-level simulation of the two beam-training protocols, organization
//! of the captures into estimation-ready matrices, and the beam-training
//! efficiency metric.

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::channel::{cascaded_channel, effective_channel, ChannelPair};
use crate::error::{dim_err, Error, Result};
use crate::scalar::Real;
use crate::tensorops::{dft_matrix, kron_product, steering_vector_deg, vec_mat, CMatrix, CVector};

/// Antenna and RF-chain counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayDims {
    pub m_b: usize,
    pub m_r: usize,
    pub m_u: usize,
    pub n_b: usize,
    pub n_u: usize,
}

impl Default for ArrayDims {
    fn default() -> Self {
        Self { m_b: 4, m_r: 16, m_u: 4, n_b: 2, n_u: 2 }
    }
}

impl ArrayDims {
    pub fn validate(&self) -> Result<()> {
        if [self.m_b, self.m_r, self.m_u, self.n_b, self.n_u].contains(&0) {
            return Err(Error::InvalidConfig("array and RF-chain counts must be positive".into()));
        }
        if self.m_b % self.n_b != 0 {
            return Err(Error::InvalidConfig(format!("M_B = {} is not divisible by N_B = {}", self.m_b, self.n_b)));
        }
        if self.m_u % self.n_u != 0 {
            return Err(Error::InvalidConfig(format!("M_U = {} is not divisible by N_U = {}", self.m_u, self.n_u)));
        }
        Ok(())
    }

    /// Number of BS precoder groups.
    pub fn p_b(&self) -> usize {
        self.m_b / self.n_b
    }

    /// Number of UE combiner groups.
    pub fn p_u(&self) -> usize {
        self.m_u / self.n_u
    }
}

/// Per-frame RIS control vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct RisCodebook<T: Real> {
    /// `M_R x B`.
    pub w: CMatrix<T>,
    /// Beamwidth-adapted (partially deactivated) codebook.
    pub adapted: bool,
}

impl<T: Real> RisCodebook<T> {
    /// Number of training frames `B`.
    pub fn frames(&self) -> usize {
        self.w.ncols()
    }

    pub fn m_r(&self) -> usize {
        self.w.nrows()
    }

    /// Narrow beams: the first `b` columns of the full DFT codebook.
    pub fn dft_subset(m_r: usize, b: usize) -> Result<Self> {
        if b == 0 || b > m_r {
            return Err(Error::InvalidConfig(format!("cannot take {b} of {m_r} DFT beams")));
        }
        let full = dft_matrix::<T>(m_r)?;
        Ok(Self { w: full.columns(0, b).into_owned(), adapted: false })
    }
}

/// Full DFT codebook (`adapted = false`, `B = M_R`) or the widened-beam
/// codebook `[Psi_B; 0]` (`adapted = true`, `B < M_R`).
pub fn make_codebook<T: Real>(m_r: usize, b: usize, adapted: bool) -> Result<RisCodebook<T>> {
    if m_r == 0 || b == 0 {
        return Err(Error::InvalidConfig("codebook dimensions must be positive".into()));
    }
    if adapted {
        if b >= m_r {
            return Err(Error::InvalidConfig(format!("adapted codebook needs B < M_R, got B = {b}, M_R = {m_r}")));
        }
        let mut w = CMatrix::zeros(m_r, b);
        w.view_mut((0, 0), (b, b)).copy_from(&dft_matrix::<T>(b)?);
        Ok(RisCodebook { w, adapted })
    } else {
        if b != m_r {
            return Err(Error::InvalidConfig(format!("full codebook needs B = M_R, got B = {b}, M_R = {m_r}")));
        }
        Ok(RisCodebook { w: dft_matrix(m_r)?, adapted })
    }
}

/// Pilot length, transmit power, and noise amplitude.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PilotConfig<T> {
    pub d_samples: usize,
    /// Linear transmit power, mW.
    pub p_tx: T,
    /// Noise amplitude.
    pub sigma: T,
}

impl<T: Real> PilotConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.d_samples == 0 {
            return Err(Error::InvalidConfig("pilot length must be positive".into()));
        }
        if !(self.p_tx > T::zero()) {
            return Err(Error::InvalidConfig("transmit power must be positive".into()));
        }
        if !(self.sigma >= T::zero()) {
            return Err(Error::InvalidConfig("noise amplitude must be non-negative".into()));
        }
        Ok(())
    }
}

/// Orthogonal pilot rows with `S S^H / D = (P_Tx / n) I`.
pub fn pilot_matrix<T: Real>(n_streams: usize, cfg: &PilotConfig<T>) -> Result<CMatrix<T>> {
    cfg.validate()?;
    if n_streams == 0 || cfg.d_samples < n_streams {
        return Err(dim_err(format!("{} pilot samples cannot carry {n_streams} orthogonal streams", cfg.d_samples)));
    }
    let psi = dft_matrix::<T>(cfg.d_samples)?;
    let amp = (cfg.p_tx / T::from_count(n_streams)).sqrt();
    Ok(psi.rows(0, n_streams).map(|x| x * amp))
}

/// Beam-training protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaptureMode {
    /// Non-location-aware: full BS precoder sweep.
    Nla,
    /// Location-aware: the BS beam is steered at the RIS.
    La,
}

/// Filtered and organized training observations.
#[derive(Clone, Debug)]
pub struct FrameCapture<T: Real> {
    pub mode: CaptureMode,
    /// `(M_B M_U) x B` for NLA, `M_U x B` for LA.
    pub data: CMatrix<T>,
    pub codebook: RisCodebook<T>,
    /// `F` (`M_B x M_B`) for NLA, `f` (`M_B x 1`) for LA.
    pub precoder: CMatrix<T>,
    /// `C` (`M_U x M_U`).
    pub combiner: CMatrix<T>,
    pub pilot: PilotConfig<T>,
    pub dims: ArrayDims,
    /// Total number of training symbols spent.
    pub symbols: usize,
}

/// `Psi_N / sqrt(N)`.
pub fn unitary_dft<T: Real>(n: usize) -> Result<CMatrix<T>> {
    let scale = T::from_count(n).sqrt();
    Ok(dft_matrix::<T>(n)?.map(|x| x.unscale(scale)))
}

fn check_inputs<T: Real>(
    c: &ChannelPair<T>,
    cb: &RisCodebook<T>,
    cfg: &PilotConfig<T>,
    dims: &ArrayDims,
) -> Result<()> {
    dims.validate()?;
    cfg.validate()?;
    if (c.m_b(), c.m_r(), c.m_u()) != (dims.m_b, dims.m_r, dims.m_u) || c.h_ru.ncols() != dims.m_r {
        return Err(dim_err("channel shape does not match the array dimensions"));
    }
    if cb.m_r() != dims.m_r || cb.frames() == 0 {
        return Err(dim_err("codebook does not match M_R"));
    }
    Ok(())
}

fn complex_noise<T: Real, R: Rng + ?Sized>(rows: usize, cols: usize, sigma: T, rng: &mut R) -> CMatrix<T> {
    let s = sigma.as_f64() / std::f64::consts::SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex::new(T::lit(s * re), T::lit(s * im))
    })
}

/// Simulates the non-location-aware protocol symbol by symbol and organizes
/// the filtered outputs into `(M_B M_U) x B`.
pub fn capture_nla<T: Real, R: Rng + ?Sized>(
    c: &ChannelPair<T>,
    cb: &RisCodebook<T>,
    cfg: &PilotConfig<T>,
    dims: &ArrayDims,
    rng: &mut R,
) -> Result<FrameCapture<T>> {
    check_inputs(c, cb, cfg, dims)?;
    let f = unitary_dft::<T>(dims.m_b)?;
    let comb = unitary_dft::<T>(dims.m_u)?;
    let s = pilot_matrix(dims.n_b, cfg)?;
    let d = T::from_count(cfg.d_samples);
    let filter = s.adjoint().map(|x| x.unscale(d));
    let noisy = cfg.sigma > T::zero();

    let b_frames = cb.frames();
    let mut data = CMatrix::zeros(dims.m_b * dims.m_u, b_frames);
    for b in 0..b_frames {
        let h_b = cascaded_channel(c, &cb.w.column(b).into_owned())?;
        let mut y_b = CMatrix::zeros(dims.m_u, dims.m_b);
        for i in 0..dims.p_b() {
            let f_i = f.columns(i * dims.n_b, dims.n_b);
            let tx = &h_b * f_i * &s;
            for j in 0..dims.p_u() {
                let c_j = comb.columns(j * dims.n_u, dims.n_u);
                let mut x = c_j.adjoint() * &tx;
                if noisy {
                    x += complex_noise(dims.n_u, cfg.d_samples, cfg.sigma, rng);
                }
                let y_ij = x * &filter;
                y_b.view_mut((j * dims.n_u, i * dims.n_b), (dims.n_u, dims.n_b)).copy_from(&y_ij);
            }
        }
        data.column_mut(b).copy_from(&vec_mat(&y_b));
    }
    Ok(FrameCapture {
        mode: CaptureMode::Nla,
        data,
        codebook: cb.clone(),
        precoder: f,
        combiner: comb,
        pilot: *cfg,
        dims: *dims,
        symbols: b_frames * dims.p_b() * dims.p_u(),
    })
}

/// Simulates the location-aware protocol with the BS beam `a(theta_br)/sqrt(M_B)`
/// and organizes the filtered outputs into `M_U x B`.
pub fn capture_la<T: Real, R: Rng + ?Sized>(
    c: &ChannelPair<T>,
    cb: &RisCodebook<T>,
    cfg: &PilotConfig<T>,
    theta_br_deg: T,
    dims: &ArrayDims,
    rng: &mut R,
) -> Result<FrameCapture<T>> {
    check_inputs(c, cb, cfg, dims)?;
    let f = steering_vector_deg(theta_br_deg, dims.m_b)?.unscale(T::from_count(dims.m_b).sqrt());
    let f = CMatrix::from_column_slice(dims.m_b, 1, f.as_slice());
    let comb = unitary_dft::<T>(dims.m_u)?;
    let s = pilot_matrix(1, cfg)?;
    let d = T::from_count(cfg.d_samples);
    let filter = s.adjoint().map(|x| x.unscale(d));
    let noisy = cfg.sigma > T::zero();

    let b_frames = cb.frames();
    let mut data = CMatrix::zeros(dims.m_u, b_frames);
    for b in 0..b_frames {
        let h_b = cascaded_channel(c, &cb.w.column(b).into_owned())?;
        let tx = &h_b * &f * &s;
        for i in 0..dims.p_u() {
            let c_i = comb.columns(i * dims.n_u, dims.n_u);
            let mut x = c_i.adjoint() * &tx;
            if noisy {
                x += complex_noise(dims.n_u, cfg.d_samples, cfg.sigma, rng);
            }
            let j_i = x * &filter;
            data.view_mut((i * dims.n_u, b), (dims.n_u, 1)).copy_from(&j_i);
        }
    }
    Ok(FrameCapture {
        mode: CaptureMode::La,
        data,
        codebook: cb.clone(),
        precoder: f,
        combiner: comb,
        pilot: *cfg,
        dims: *dims,
        symbols: b_frames * dims.p_u(),
    })
}

/// `vec` of a location-aware capture, length `B M_U`.
pub fn vectorize_la<T: Real>(fc: &FrameCapture<T>) -> Result<CVector<T>> {
    if fc.mode != CaptureMode::La {
        return Err(Error::InvalidInput("vectorization applies to location-aware captures".into()));
    }
    Ok(vec_mat(&fc.data))
}

/// The sensing operator applied to `H_eff W`: `(P/N_B)(F^T ⊗ C^H)` for NLA
/// and `P (f^T ⊗ C^H)` for LA.
pub fn sensing_operator<T: Real>(fc: &FrameCapture<T>) -> CMatrix<T> {
    let kron = kron_product(&fc.precoder.transpose(), &fc.combiner.adjoint());
    let gain = match fc.mode {
        CaptureMode::Nla => fc.pilot.p_tx / T::from_count(fc.dims.n_b),
        CaptureMode::La => fc.pilot.p_tx,
    };
    kron.map(|x| x.scale(gain))
}

/// Noise-free capture implied by the true channel.
pub fn signal_part<T: Real>(fc: &FrameCapture<T>, c: &ChannelPair<T>) -> Result<CMatrix<T>> {
    let h_eff = effective_channel(c)?;
    if h_eff.ncols() != fc.codebook.m_r() {
        return Err(dim_err("channel does not match the capture codebook"));
    }
    Ok(sensing_operator(fc) * h_eff * &fc.codebook.w)
}

/// Beam-training efficiency in dB: signal energy over noise energy of the
/// capture. Noiseless captures report `+inf`.
pub fn beam_training_efficiency<T: Real>(fc: &FrameCapture<T>, c: &ChannelPair<T>) -> Result<T> {
    if fc.pilot.sigma == T::zero() {
        return Ok(T::lit(f64::INFINITY));
    }
    let signal = signal_part(fc, c)?;
    let noise = &fc.data - &signal;
    let ratio = signal.norm_squared() / noise.norm_squared();
    Ok(T::lit(10.0) * ratio.log10())
}

/// Reflect pattern `|a(theta)^H diag(omega) a(phi_bar)|`.
pub fn ris_pattern<T: Real>(theta_deg: T, phi_bar_deg: T, omega: &CVector<T>) -> T {
    let m = omega.len();
    if m == 0 {
        return T::zero();
    }
    let a_in = steering_vector_deg(theta_deg, m).expect("non-empty array");
    let a_out = steering_vector_deg(phi_bar_deg, m).expect("non-empty array");
    let mut acc = Complex::new(T::zero(), T::zero());
    for k in 0..m {
        acc += a_in[k].conj() * omega[k] * a_out[k];
    }
    acc.norm_sqr().sqrt()
}

/// Worst-case best-beam pattern level: the minimum over a uniform grid of
/// steering directions in `(0, 180)` of the maximum over codebook beams.
pub fn coverage_level<T: Real>(cb: &RisCodebook<T>, theta_deg: T, step_deg: T) -> T {
    let mut worst = T::lit(f64::INFINITY);
    let mut k = 1usize;
    loop {
        let phi = step_deg * T::from_count(k);
        if phi >= T::lit(180.0) {
            break;
        }
        k += 1;
        let best = (0..cb.frames())
            .map(|b| ris_pattern(theta_deg, phi, &cb.w.column(b).into_owned()))
            .fold(T::zero(), |a, x| a.max(x));
        worst = worst.min(best);
    }
    worst
}
