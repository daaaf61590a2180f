use super::{c, random_matrix, rng};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use ris_anm::{AnmMode, AnmProblem, ToeplitzLevels};

/// Random 3 x 4 sensing map with a 3 x 2 observation over levels [4].
pub fn tiny_problem(seed: u64, tau: f64) -> AnmProblem<f64> {
    let mut r = rng(seed);
    let a = random_matrix(&mut r, 3, 4);
    let g = random_matrix(&mut r, 3, 2);
    AnmProblem::new(g, a, ToeplitzLevels::hermitian(&[4]).unwrap(), tau, AnmMode::OneDMmv).unwrap()
}

/// Interior-point reference for the tiny instance (levels [4], width 2): a
/// log-barrier path-following method over a real parametrization of
/// `(T, Z, P)`, with exact Newton steps.
pub struct BarrierReference {
    basis: Vec<DMatrix<Complex64>>,
    z_basis: Vec<DMatrix<Complex64>>,
    lin: DVector<f64>,
    hess_f: DMatrix<f64>,
    grad_f0: DVector<f64>,
    g_norm2: f64,
}

impl BarrierReference {
    pub fn new(p: &AnmProblem<f64>) -> Self {
        let (n, w) = (4usize, 2usize);
        let dim = n + w;
        let mut basis = Vec::new();
        let mut z_basis = Vec::new();
        let mut lin = Vec::new();
        let zero_z = DMatrix::<Complex64>::zeros(n, w);
        // T: t0 real, then real and imaginary parts of t1..t3.
        let mut b = DMatrix::zeros(dim, dim);
        for i in 0..n {
            b[(i, i)] = c(1.0, 0.0);
        }
        basis.push(b);
        z_basis.push(zero_z.clone());
        lin.push(p.tau / (2.0 * n as f64) * n as f64);
        for k in 1..n {
            for part in [c(1.0, 0.0), c(0.0, 1.0)] {
                let mut b = DMatrix::zeros(dim, dim);
                for i in 0..n - k {
                    b[(i + k, i)] = part;
                    b[(i, i + k)] = part.conj();
                }
                basis.push(b);
                z_basis.push(zero_z.clone());
                lin.push(0.0);
            }
        }
        // Z: real and imaginary part of each entry.
        for i in 0..n {
            for j in 0..w {
                for part in [c(1.0, 0.0), c(0.0, 1.0)] {
                    let mut b = DMatrix::zeros(dim, dim);
                    b[(i, n + j)] = part;
                    b[(n + j, i)] = part.conj();
                    basis.push(b);
                    let mut zb = zero_z.clone();
                    zb[(i, j)] = part;
                    z_basis.push(zb);
                    lin.push(0.0);
                }
            }
        }
        // P: two real diagonal entries and one complex off-diagonal.
        for j in 0..w {
            let mut b = DMatrix::zeros(dim, dim);
            b[(n + j, n + j)] = c(1.0, 0.0);
            basis.push(b);
            z_basis.push(zero_z.clone());
            lin.push(p.tau / 2.0);
        }
        for part in [c(1.0, 0.0), c(0.0, 1.0)] {
            let mut b = DMatrix::zeros(dim, dim);
            b[(n + 1, n)] = part;
            b[(n, n + 1)] = part.conj();
            basis.push(b);
            z_basis.push(zero_z.clone());
            lin.push(0.0);
        }
        let m = basis.len();
        let az: Vec<DMatrix<Complex64>> = z_basis.iter().map(|zb| &p.sense * zb).collect();
        let inner = |x: &DMatrix<Complex64>, y: &DMatrix<Complex64>| {
            x.iter().zip(y.iter()).map(|(a, b)| (a.conj() * b).re).sum::<f64>()
        };
        let hess_f = DMatrix::from_fn(m, m, |i, j| inner(&az[i], &az[j]));
        let grad_f0 = DVector::from_fn(m, |i, _| -inner(&az[i], &p.g));
        Self { basis, z_basis, lin: DVector::from_vec(lin), hess_f, grad_f0, g_norm2: p.g.norm_squared() }
    }

    fn theta(&self, x: &DVector<f64>) -> DMatrix<Complex64> {
        let dim = self.basis[0].nrows();
        self.basis.iter().zip(x.iter()).fold(DMatrix::zeros(dim, dim), |acc, (b, &xi)| acc + b * c(xi, 0.0))
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        self.lin.dot(x) + self.grad_f0.dot(x) + 0.5 * x.dot(&(&self.hess_f * x)) + 0.5 * self.g_norm2
    }

    pub fn z_of(&self, x: &DVector<f64>) -> DMatrix<Complex64> {
        self.z_basis.iter().zip(x.iter()).fold(DMatrix::zeros(4, 2), |acc, (b, &xi)| acc + b * c(xi, 0.0))
    }

    /// Barrier value, or `None` outside the interior.
    fn phi(&self, t: f64, x: &DVector<f64>) -> Option<f64> {
        let chol = self.theta(x).cholesky()?;
        let logdet: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.re.ln()).sum();
        Some(t * self.objective(x) - logdet)
    }

    pub fn solve(&self) -> DVector<f64> {
        let m = self.basis.len();
        let mut x = DVector::zeros(m);
        x[0] = 1.0;
        x[m - 4] = 1.0;
        x[m - 3] = 1.0;
        let mut t = 1.0;
        let barrier_params = 6.0;
        while barrier_params / t > 1e-14 {
            for _ in 0..200 {
                let inv = self.theta(&x).try_inverse().unwrap();
                let ib: Vec<DMatrix<Complex64>> = self.basis.iter().map(|b| &inv * b).collect();
                let grad_b = DVector::from_fn(m, |i, _| -ib[i].trace().re);
                let hess_b = DMatrix::from_fn(m, m, |i, j| (&ib[i] * &ib[j]).trace().re);
                let grad = (&self.lin + &self.grad_f0 + &self.hess_f * &x) * t + grad_b;
                let hess = &self.hess_f * t + hess_b;
                let step = -hess.clone().cholesky().unwrap().solve(&grad);
                let decrement = -grad.dot(&step);
                if decrement / 2.0 < 1e-15 {
                    break;
                }
                let f0 = self.phi(t, &x).unwrap();
                let mut s = 1.0;
                loop {
                    let cand = &x + &step * s;
                    if let Some(f) = self.phi(t, &cand) {
                        if f <= f0 - 0.25 * s * decrement {
                            x = cand;
                            break;
                        }
                    }
                    s *= 0.5;
                    assert!(s > 1e-20, "line search failed");
                }
            }
            t *= 8.0;
        }
        x
    }
}
