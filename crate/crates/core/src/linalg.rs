//! Dense complex linear-algebra helpers used throughout the crate.
//!
//! Everything here is small and dense; problem sizes are bounded by a few
//! hundred rows even at the full simulation scale, so no effort is made to
//! exploit sparsity outside of the binary lifting operators in [`crate::polar`].

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type Cx = Complex64;
pub type CMat = DMatrix<Cx>;
pub type CVec = DVector<Cx>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

/// Column-major vectorization of a matrix.
pub fn vec_mat(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

pub fn vec_mat_real(m: &RMat) -> RVec {
    RVec::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_mat`]: reshape a vector into an `rows x cols` matrix.
pub fn unvec(v: &CVec, rows: usize, cols: usize) -> CMat {
    assert_eq!(v.len(), rows * cols, "unvec length mismatch");
    CMat::from_column_slice(rows, cols, v.as_slice())
}

/// Promote a real matrix to complex.
pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| Cx::new(x, 0.0))
}

pub fn re_mat(m: &CMat) -> RMat {
    m.map(|z| z.re)
}

/// Hermitian symmetrization `(A + A^H)/2`; applied after every covariance
/// assembly to stop rounding drift.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * Cx::new(0.5, 0.0)
}

pub fn symmetric_part(m: &RMat) -> RMat {
    (m + m.transpose()) * 0.5
}

/// Real part of the trace.
pub fn trace_re(m: &CMat) -> f64 {
    m.trace().re
}

/// `Re Tr(A^H B)`, the real inner product of two complex matrices.
pub fn inner_re(a: &CMat, b: &CMat) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvals_h(m: &CMat) -> RVec {
    let sym = nalgebra::SymmetricEigen::new(hermitian_part(m));
    let mut v: Vec<f64> = sym.eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    RVec::from_vec(v)
}

/// Largest eigenvalue of a Hermitian matrix.
pub fn max_eig_h(m: &CMat) -> f64 {
    let sym = nalgebra::SymmetricEigen::new(hermitian_part(m));
    sym.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub fn max_eig_sym(m: &RMat) -> f64 {
    let sym = nalgebra::SymmetricEigen::new(symmetric_part(m));
    sym.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Project a (nearly) Hermitian matrix onto the PSD cone by clipping
/// negative eigenvalues at zero.
pub fn psd_project(m: &CMat) -> CMat {
    let sym = nalgebra::SymmetricEigen::new(hermitian_part(m));
    let n = m.nrows();
    let mut out = CMat::zeros(n, n);
    for (k, &lam) in sym.eigenvalues.iter().enumerate() {
        if lam > 0.0 {
            let u = sym.eigenvectors.column(k);
            out += (u * u.adjoint()) * Cx::new(lam, 0.0);
        }
    }
    hermitian_part(&out)
}

/// Inverse of a Hermitian PSD matrix through its eigendecomposition, with
/// eigenvalues floored at `floor` (ridge behaviour for rank-deficient input).
pub fn herm_inv_floor(m: &CMat, floor: f64) -> CMat {
    let sym = nalgebra::SymmetricEigen::new(hermitian_part(m));
    let n = m.nrows();
    let mut out = CMat::zeros(n, n);
    for (k, &lam) in sym.eigenvalues.iter().enumerate() {
        let l = lam.max(floor);
        let u = sym.eigenvectors.column(k);
        out += (u * u.adjoint()) * Cx::new(1.0 / l, 0.0);
    }
    hermitian_part(&out)
}

/// Solve `A X = B` for Hermitian positive-definite `A` via Cholesky,
/// falling back to LU when the factorization fails.
pub fn herm_solve(a: &CMat, b: &CMat) -> Option<CMat> {
    if let Some(chol) = a.clone().cholesky() {
        return Some(chol.solve(b));
    }
    a.clone().lu().solve(b)
}

/// Factor `Sigma = F F^H` for a Hermitian PSD matrix (eigen square root;
/// robust to exact rank deficiency, unlike Cholesky).
pub fn psd_factor(sigma: &CMat) -> CMat {
    let sym = nalgebra::SymmetricEigen::new(hermitian_part(sigma));
    let n = sigma.nrows();
    let mut f = CMat::zeros(n, n);
    for (k, &lam) in sym.eigenvalues.iter().enumerate() {
        if lam > 0.0 {
            f.column_mut(k)
                .copy_from(&(sym.eigenvectors.column(k) * Cx::new(lam.sqrt(), 0.0)));
        }
    }
    f
}

/// Standard circularly-symmetric complex Gaussian scalar, unit variance.
pub fn randn_c<R: Rng + ?Sized>(rng: &mut R) -> Cx {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Cx::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draw `x ~ CN(0, Sigma)` given a factor `F` with `Sigma = F F^H`.
pub fn sample_cn<R: Rng + ?Sized>(rng: &mut R, factor: &CMat) -> CVec {
    let n = factor.ncols();
    let w = CVec::from_fn(n, |_, _| randn_c(rng));
    factor * w
}

/// Random Hermitian PSD matrix (for tests and oracles).
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| randn_c(rng));
    hermitian_part(&(&g * g.adjoint()))
}

/// Random complex matrix with i.i.d. CN(0,1) entries.
pub fn random_cmat<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| randn_c(rng))
}

/// First `rows` rows of the unitary DFT matrix of size `l`, scaled so the
/// rows are orthonormal (`S S^H = I_rows`). Used as a deterministic codebook
/// with exact sample covariance.
pub fn dft_codebook(rows: usize, l: usize) -> CMat {
    assert!(rows <= l, "codebook needs at least as many columns as rows");
    let scale = 1.0 / (l as f64).sqrt();
    CMat::from_fn(rows, l, |r, c| {
        let phase = -2.0 * std::f64::consts::PI * (r as f64) * (c as f64) / (l as f64);
        Cx::from_polar(scale, phase)
    })
}

/// dBm (or dB) to linear power.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear power ratio to dB.
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hermitian_eigen_matches_quadratic_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_psd(&mut rng, 5);
        let evs = eigvals_h(&a);
        assert!(evs[0] >= -1e-12);
        // trace equals eigenvalue sum
        assert!((trace_re(&a) - evs.sum()).abs() < 1e-10);
        // max eigenvalue dominates Rayleigh quotients
        let lam = max_eig_h(&a);
        for _ in 0..20 {
            let x = CVec::from_fn(5, |_, _| randn_c(&mut rng));
            let quad = (x.adjoint() * &a * &x)[(0, 0)].re / x.norm_squared();
            assert!(quad <= lam + 1e-10);
        }
    }

    #[test]
    fn herm_inv_floor_inverts_pd() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut a = random_psd(&mut rng, 4);
        for i in 0..4 {
            a[(i, i)] += Cx::new(1.0, 0.0);
        }
        let inv = herm_inv_floor(&a, 0.0);
        let id = &a * &inv;
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)] - Cx::new(want, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn psd_factor_reproduces_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let sigma = random_psd(&mut rng, 4);
        let f = psd_factor(&sigma);
        let diff = &sigma - &f * f.adjoint();
        assert!(diff.norm() < 1e-10 * sigma.norm());
    }

    #[test]
    fn dft_codebook_rows_orthonormal() {
        let s = dft_codebook(4, 8);
        let g = &s * s.adjoint();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - Cx::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn vec_unvec_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let m = random_cmat(&mut rng, 3, 5);
        let v = vec_mat(&m);
        let back = unvec(&v, 3, 5);
        assert_eq!(m, back);
    }
}
