//! Checks behind `harness::selftest`. Each runs in well under a second.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::anm::{regularization_tau, AnmMode};
use crate::beamtrain::{capture_la, capture_nla, coverage_level, make_codebook, signal_part, ArrayDims, PilotConfig};
use crate::channel::{build_channels, ChannelModelParams};
use crate::error::Result;
use crate::harness::{run_trial, SelfTestCheck, SimConfig};
use crate::sdpsolver::{solve_anm_denoise, AdmmSettings};
use crate::tensorops::{
    dft_matrix, khatri_rao_product, kron_product, min_eigenvalue, psd_project, CMatrix, ToeplitzLevels,
    ToeplitzProjector,
};
use crate::AnmProblem;

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMatrix<f64> {
    CMatrix::from_fn(r, c, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

fn check(name: &str, f: impl FnOnce() -> Result<(bool, String)>) -> SelfTestCheck {
    match f() {
        Ok((passed, detail)) => SelfTestCheck { name: name.into(), passed, detail },
        Err(e) => SelfTestCheck { name: name.into(), passed: false, detail: format!("error: {e}") },
    }
}

pub(crate) fn run_all() -> Vec<SelfTestCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e1f);
    let mut out = Vec::new();

    out.push(check("dft_unitary", || {
        let f = dft_matrix::<f64>(16)?;
        let err = (f.adjoint() * &f / Complex64::new(16.0, 0.0) - CMatrix::identity(16, 16)).norm();
        Ok((err < 1e-10, format!("||F^H F / n - I|| = {err:.2e}")))
    }));

    let (a, b) = (random_matrix(&mut rng, 3, 4), random_matrix(&mut rng, 5, 4));
    out.push(check("khatri_rao_columns", || {
        let kr = khatri_rao_product(&a, &b)?;
        let mut err: f64 = 0.0;
        for j in 0..4 {
            let col = kron_product(&a.columns(j, 1).into_owned(), &b.columns(j, 1).into_owned());
            err = err.max((kr.columns(j, 1) - col).norm());
        }
        Ok((err < 1e-12, format!("max column error {err:.2e}")))
    }));

    let m = random_matrix(&mut rng, 18, 18);
    out.push(check("toeplitz_projection_idempotent", || {
        let proj = ToeplitzProjector::new(ToeplitzLevels::hermitian(&[3, 2, 3])?);
        let once = proj.project(&m)?;
        let err = (proj.project(&once)? - &once).norm();
        Ok((err < 1e-12, format!("||P(P(M)) - P(M)|| = {err:.2e}")))
    }));

    out.push(check("psd_projection", || {
        let h = &m + m.adjoint();
        let p = psd_project(&h)?;
        let lmin = min_eigenvalue(&p)?;
        let err = (psd_project(&p)? - &p).norm();
        Ok((lmin > -1e-10 && err < 1e-10, format!("min eig {lmin:.2e}, idempotence {err:.2e}")))
    }));

    out.push(check("noiseless_capture_identity", || {
        let dims = ArrayDims::default();
        let pilot = PilotConfig { d_samples: 100, p_tx: 1000.0, sigma: 0.0 };
        let params = ChannelModelParams::default();
        let g = crate::channel::Geometry::new([0.0, 0.0], [50.0, 40.0], [80.0, 0.0])?;
        let br = crate::channel::sample_br_paths(&g, &params, &mut rng)?;
        let ru = crate::channel::sample_ru_paths(&g, &params, &mut rng)?;
        let ch = build_channels(&br, &ru, dims.m_b, dims.m_r, dims.m_u)?;
        let cb1 = make_codebook::<f64>(dims.m_r, 8, true)?;
        let nla = capture_nla(&ch, &cb1, &pilot, &dims, &mut rng)?;
        let cb0 = make_codebook::<f64>(dims.m_r, dims.m_r, false)?;
        let la = capture_la(&ch, &cb0, &pilot, 38.0, &dims, &mut rng)?;
        let rel = |fc: &crate::beamtrain::FrameCapture<f64>| -> Result<f64> {
            let s = signal_part(fc, &ch)?;
            Ok((&fc.data - &s).norm() / s.norm())
        };
        let (e1, e2) = (rel(&nla)?, rel(&la)?);
        Ok((e1 < 1e-9 && e2 < 1e-9, format!("NLA {e1:.2e}, LA {e2:.2e}")))
    }));

    out.push(check("tau_positive_and_ordered", || {
        let dims = ArrayDims::default();
        let pilot = PilotConfig { d_samples: 100, p_tx: 1000.0, sigma: 1e-5 };
        let t: Vec<f64> = AnmMode::ALL.iter().map(|&m| regularization_tau(m, &pilot, &dims)).collect::<Result<_>>()?;
        let ok = t.iter().all(|x| *x > 0.0 && x.is_finite());
        Ok((ok, format!("tau = {t:?}")))
    }));

    out.push(check("zero_data_solve", || {
        let levels = ToeplitzLevels::hermitian(&[4])?;
        let p = AnmProblem::new(CMatrix::zeros(3, 2), random_matrix(&mut rng, 3, 4), levels, 0.1, AnmMode::OneDMmv)?;
        let sol = solve_anm_denoise(&p, &AdmmSettings::default())?;
        let n = sol.z_hat.norm() + sol.t_hat.norm() + sol.p_hat.norm();
        Ok((n == 0.0 && sol.stats.converged, format!("solution norm {n:.2e}")))
    }));

    out.push(check("noiseless_2d_recovery", || {
        let mut cfg = SimConfig::default();
        cfg.pilot.sigma = 0.0;
        cfg.channel.l_ru_range = [2, 2];
        cfg.channel.min_cos_separation = Some(2.0 / cfg.dims.m_r as f64);
        let r = run_trial(&cfg, AnmMode::TwoDMmv, 7)?;
        let e = r.nmse.unwrap_or(f64::NAN);
        Ok((e < 1e-6, format!("NMSE {e:.2e}")))
    }));

    out.push(check("adapted_codebook_coverage", || {
        let (m_r, b) = (16, 10);
        let cb = make_codebook::<f64>(m_r, b, true)?;
        let level = coverage_level(&cb, 38.66, 0.5);
        let bound = 1.0 / (std::f64::consts::PI / (2.0 * b as f64)).sin();
        Ok((level >= bound - 1e-9, format!("worst-case best beam {level:.4}, crossover bound {bound:.4}")))
    }));

    out
}
