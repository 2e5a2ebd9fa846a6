//! Small dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;
pub type RMat = DMatrix<f64>;

/// Relative eigenvalue floor below which a covariance is rejected as not PSD.
pub const PSD_CLIP_REL: f64 = 1e-12;
/// Largest accepted condition number for Hermitian solves.
pub const MAX_CONDITION: f64 = 1e12;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `exp(j * phase)`.
pub fn cis(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| c(x, 0.0))
}

/// `tr(A B)` without forming the product.
pub fn trace_of_product(a: &CMat, b: &CMat) -> Complex64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = ZERO;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// `D M Dᴴ` for `D = diag(d)`.
pub fn diag_congruence(d: &CVec, m: &CMat) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| d[i] * m[(i, j)] * d[j].conj())
}

/// Largest entrywise deviation from Hermitian symmetry, relative to the largest entry.
pub fn hermitian_defect(m: &CMat) -> f64 {
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst / scale
}

/// `(M + M^H) / 2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let mut ev: Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Square-root factor `F` with `F F^H = cov`, via eigendecomposition.
///
/// Negative eigenvalues down to `-PSD_CLIP_REL * max_eig` are treated as
/// roundoff and clipped to zero; anything more negative is an error.
pub fn psd_factor(cov: &CMat) -> Result<CMat> {
    let n = cov.nrows();
    if cov.ncols() != n {
        return Err(Error::Dimension(format!("covariance is {}x{}", n, cov.ncols())));
    }
    let eig = hermitian_part(cov).symmetric_eigen();
    let max_eig = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if max_eig == 0.0 && min_eig >= 0.0 {
        return Ok(CMat::zeros(n, n));
    }
    if min_eig < -PSD_CLIP_REL * max_eig.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::NotPsd { min_eig, max_eig });
    }
    let mut f = eig.eigenvectors;
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        f.column_mut(j).scale_mut(s);
    }
    Ok(f)
}

/// Real symmetric version of [`psd_factor`].
pub fn psd_factor_real(cov: &RMat) -> Result<RMat> {
    let n = cov.nrows();
    if cov.ncols() != n {
        return Err(Error::Dimension(format!("covariance is {}x{}", n, cov.ncols())));
    }
    let sym = (cov + cov.transpose()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let max_eig = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if max_eig == 0.0 && min_eig >= 0.0 {
        return Ok(RMat::zeros(n, n));
    }
    if min_eig < -PSD_CLIP_REL * max_eig {
        return Err(Error::NotPsd { min_eig, max_eig });
    }
    let mut f = eig.eigenvectors;
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        f.column_mut(j).scale_mut(lam.max(0.0).sqrt());
    }
    Ok(f)
}

/// One `CN(0, I_n)` vector.
pub fn standard_cn<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVec {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CVec::from_fn(n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(s * re, s * im)
    })
}

/// One draw of `CN(0, F F^H)` given the factor `F`.
pub fn sample_cn<R: Rng + ?Sized>(factor: &CMat, rng: &mut R) -> CVec {
    let w = standard_cn(factor.ncols(), rng);
    factor * w
}

/// Cholesky-backed solver for Hermitian positive definite systems.
pub struct HpdSolver {
    chol: nalgebra::Cholesky<Complex64, nalgebra::Dyn>,
    pub condition: f64,
}

impl HpdSolver {
    pub fn new(m: &CMat) -> Result<Self> {
        let h = hermitian_part(m);
        let ev = hermitian_eigenvalues(&h);
        let (lo, hi) = (ev[0], ev[ev.len() - 1]);
        if lo <= 0.0 {
            return Err(Error::IllConditioned(f64::INFINITY));
        }
        let condition = hi / lo;
        if condition > MAX_CONDITION {
            return Err(Error::IllConditioned(condition));
        }
        let chol = h.cholesky().ok_or(Error::IllConditioned(condition))?;
        Ok(Self { chol, condition })
    }

    pub fn solve(&self, b: &CMat) -> CMat {
        self.chol.solve(b)
    }

    pub fn solve_vec(&self, b: &CVec) -> CVec {
        self.chol.solve(b)
    }
}

/// Copy of the `(row_block, col_block)` block of size `size x size`.
pub fn block(m: &CMat, row_block: usize, col_block: usize, size: usize) -> CMat {
    m.view((row_block * size, col_block * size), (size, size)).into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{purpose, substream};

    fn random_psd(n: usize, rank: usize, seed: u64) -> CMat {
        let mut rng = substream(seed, &[purpose::TEST]);
        let mut g = CMat::zeros(n, rank);
        for j in 0..rank {
            g.set_column(j, &standard_cn(n, &mut rng));
        }
        &g * g.adjoint()
    }

    #[test]
    fn factor_reproduces_covariance() {
        for (n, rank) in [(1, 1), (4, 4), (6, 2)] {
            let cov = random_psd(n, rank, n as u64);
            let f = psd_factor(&cov).unwrap();
            let back = &f * f.adjoint();
            assert!((back - &cov).norm() <= 1e-12 * cov.norm());
        }
    }

    #[test]
    fn factor_rejects_indefinite() {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![c(1.0, 0.0), c(-0.5, 0.0)]));
        assert!(matches!(psd_factor(&m), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn factor_of_zero_is_zero() {
        let f = psd_factor(&CMat::zeros(3, 3)).unwrap();
        assert_eq!(f, CMat::zeros(3, 3));
    }

    #[test]
    fn trace_of_product_matches_product() {
        let a = random_psd(4, 4, 11);
        let b = random_psd(4, 2, 12);
        let direct = (&a * &b).trace();
        assert!((trace_of_product(&a, &b) - direct).norm() < 1e-12 * direct.norm());
    }

    #[test]
    fn diag_congruence_matches_product() {
        let m = random_psd(5, 3, 21);
        let d = standard_cn(5, &mut substream(22, &[purpose::TEST]));
        let dm = CMat::from_diagonal(&d);
        let want = &dm * &m * dm.adjoint();
        assert!((diag_congruence(&d, &m) - want).norm() < 1e-12 * m.norm());
    }

    #[test]
    fn hpd_solver_rejects_singular() {
        let m = random_psd(4, 2, 3);
        assert!(HpdSolver::new(&m).is_err());
        let good = m + CMat::identity(4, 4);
        let s = HpdSolver::new(&good).unwrap();
        let b = CMat::identity(4, 4);
        let x = s.solve(&b);
        assert!((&good * x - b).norm() < 1e-10);
    }
}
