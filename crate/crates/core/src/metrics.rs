//! Sensing and communication performance metrics.
//!
//! The measurement operator maps the vectorized target depolarization
//! parameter to the noiseless radar echo; the LMMSE estimator and its error
//! covariance give the sensing MSE objective, and the trace forms of the
//! target SINR plus the per-user SINR complete the objective set consumed by
//! both optimizers.

use crate::linalg::{
    dft_codebook, hermitian_part, herm_inv_floor, herm_solve, to_complex, trace_re, CMat, CVec,
    Cx, RMat,
};
use crate::polar::{pbar, PolBlockMatrix};
use crate::scene::Scene;
use crate::{Error, Result};

/// Dual-function precoder: the first `n_comm` columns carry user streams,
/// the rest orthogonal sensing codewords.
#[derive(Debug, Clone)]
pub struct Waveform {
    f: CMat,
    n_comm: usize,
    l: usize,
    rho_t: f64,
}

impl Waveform {
    pub fn new(f: CMat, n_comm: usize, l: usize, rho_t: f64) -> Result<Self> {
        if n_comm > f.ncols() {
            return Err(Error::Shape(format!(
                "{n_comm} communication columns but precoder has only {}",
                f.ncols()
            )));
        }
        if l < f.ncols() {
            return Err(Error::Domain(format!(
                "codeword length {l} shorter than the {} precoder columns",
                f.ncols()
            )));
        }
        let power = f.norm_squared();
        if (power - rho_t).abs() > 1e-6 * rho_t.max(1.0) {
            return Err(Error::Domain(format!(
                "precoder power {power} does not meet the budget {rho_t}"
            )));
        }
        Ok(Self { f, n_comm, l, rho_t })
    }

    /// Number of transmit signal dimensions (RF chains).
    pub fn n_sig(&self) -> usize {
        self.f.nrows()
    }

    pub fn n_comm(&self) -> usize {
        self.n_comm
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn rho_t(&self) -> f64 {
        self.rho_t
    }

    pub fn precoder(&self) -> &CMat {
        &self.f
    }

    pub fn comm_column(&self, k: usize) -> CVec {
        self.f.column(k).into_owned()
    }

    /// Sample transmit covariance `R_x = F F^H`.
    pub fn r_x(&self) -> CMat {
        hermitian_part(&(&self.f * self.f.adjoint()))
    }

    /// Deterministic codeword realization `X = F S` with `S S^H = I`, so the
    /// sample covariance `X X^H` equals `F F^H` exactly.
    pub fn codeword_matrix(&self) -> CMat {
        &self.f * dft_codebook(self.f.ncols(), self.l)
    }

    /// Uniform-power waveform: orthogonal beams across all signal
    /// dimensions, first `n_comm` of them treated as user streams.
    pub fn uniform(n_sig: usize, n_comm: usize, l: usize, rho_t: f64) -> Result<Self> {
        let f = CMat::identity(n_sig, n_sig) * Cx::new((rho_t / n_sig as f64).sqrt(), 0.0);
        Self::new(f, n_comm, l, rho_t)
    }
}

/// The linear operator mapping the vectorized depolarization parameter to
/// the noiseless vectorized echo, `M = X^T P_t^T ⊗ P_r^T`. Held in factored
/// form; the dense realization is materialized on demand.
#[derive(Debug, Clone)]
pub struct MeasurementOperator {
    /// Transmit codeword matrix (`n_sig x L`).
    x: CMat,
    /// `P_t` (`2 N_t x N_t`), identity for dual-polarized arrays.
    p_t: CMat,
    /// `P_r` (`2 N_r x N_r`), identity for dual-polarized arrays.
    p_r: CMat,
}

/// Entry budget above which the dense `M` is not materialized.
const DENSE_M_LIMIT: usize = 1_000_000;

impl MeasurementOperator {
    pub fn new(x: &CMat, p_t: &PolBlockMatrix, p_r: &PolBlockMatrix) -> Result<Self> {
        if x.nrows() != p_t.n() {
            return Err(Error::Shape(format!(
                "codeword matrix has {} rows but P_t has {} blocks",
                x.nrows(),
                p_t.n()
            )));
        }
        Ok(Self { x: x.clone(), p_t: p_t.stacked_c(), p_r: p_r.stacked_c() })
    }

    /// Operator for a dual-polarized array: every port is an RF chain, so
    /// both polarization factors are identities (`M = X^T ⊗ I_{n_obs}`).
    pub fn dual(x: &CMat, n_obs: usize) -> Self {
        Self {
            x: x.clone(),
            p_t: CMat::identity(x.nrows(), x.nrows()),
            p_r: CMat::identity(n_obs, n_obs),
        }
    }

    /// Observation dimension per snapshot (receiver outputs).
    pub fn n_obs(&self) -> usize {
        self.p_r.ncols()
    }

    pub fn rows(&self) -> usize {
        self.x.ncols() * self.n_obs()
    }

    pub fn cols(&self) -> usize {
        self.p_t.nrows() * self.p_r.nrows()
    }

    /// `Xbar = X^* ⊗ I_{n_obs}`.
    pub fn xbar(&self) -> CMat {
        self.x.conjugate().kronecker(&CMat::identity(self.n_obs(), self.n_obs()))
    }

    /// `Pbar = P_t ⊗ P_r`.
    pub fn pbar(&self) -> CMat {
        self.p_t.kronecker(&self.p_r)
    }

    /// Dense `M = (X^T P_t^T) ⊗ P_r^T`.
    pub fn dense(&self) -> Result<CMat> {
        if self.rows() * self.cols() > DENSE_M_LIMIT {
            return Err(Error::Shape(format!(
                "dense measurement matrix would hold {} entries; use the factored form",
                self.rows() * self.cols()
            )));
        }
        let left = self.x.transpose() * self.p_t.transpose();
        Ok(left.kronecker(&self.p_r.transpose()))
    }
}

/// LMMSE estimation outcome for the target depolarization parameter.
#[derive(Debug, Clone)]
pub struct EstimationResult {
    /// Optimal linear combiner (`L n_obs x 4`).
    pub combiner: CMat,
    /// Error covariance `Z_e` (4x4 Hermitian).
    pub error_cov: CMat,
    /// `Tr(Z_e)`.
    pub mse: f64,
    /// `10 log10(mse / Tr(Sigma0))`.
    pub nmse_db: f64,
}

/// LMMSE combiner and error covariance from explicit response statistics.
///
/// `omega` is the covariance of the vectorized total response, `a0` the
/// target mapping with `Omega_0 = beta0^2 a0 Sigma0 a0^H`.
pub fn lmmse_combiner_raw(
    m: &MeasurementOperator,
    omega: &CMat,
    a0: &CMat,
    sigma0: &CMat,
    beta0: f64,
    sigma_s2: f64,
) -> Result<EstimationResult> {
    let xbar = m.xbar();
    let pb = m.pbar();
    // M Omega M^H = Xbar^H (Pbar^T Omega Pbar) Xbar, small in the barred space
    let omega_bar = hermitian_part(&(pb.transpose() * omega * &pb));
    let mut e = hermitian_part(&(xbar.adjoint() * &omega_bar * &xbar));
    for i in 0..e.nrows() {
        e[(i, i)] += Cx::new(sigma_s2, 0.0);
    }
    // B = M A0 Sigma0
    let b = xbar.adjoint() * pb.transpose() * a0 * sigma0;
    let einv_b = herm_solve(&e, &b).ok_or_else(|| {
        Error::Conditioning("normal matrix of the LMMSE combiner is singular".into())
    })?;
    let error_cov = hermitian_part(
        &(sigma0 - b.adjoint() * &einv_b * Cx::new(beta0 * beta0, 0.0)),
    );
    let mse = trace_re(&error_cov);
    Ok(EstimationResult {
        combiner: einv_b * Cx::new(beta0, 0.0),
        error_cov,
        mse,
        nmse_db: nmse_db(mse, sigma0),
    })
}

/// LMMSE combiner for a reconfigurable-array scene.
pub fn lmmse_combiner(m: &MeasurementOperator, scene: &Scene) -> Result<EstimationResult> {
    lmmse_combiner_raw(
        m,
        &scene.omega,
        &scene.a0,
        &scene.target.sigma0,
        scene.target.beta0,
        scene.sigma_s2,
    )
}

/// Normalized MSE in decibels, `10 log10(mse / Tr(Sigma0))`.
pub fn nmse_db(mse: f64, sigma0: &CMat) -> f64 {
    10.0 * (mse / trace_re(sigma0)).log10()
}

/// Everything the waveform designs need once the polarization is fixed: the
/// response statistics projected through `Pbar = P_t ⊗ P_r`. For the
/// dual-polarized benchmarks `Pbar` is the identity and the "barred"
/// quantities coincide with the raw ones.
#[derive(Debug, Clone)]
pub struct SensingView {
    /// Transmit signal dimension (RF chains).
    pub n_sig: usize,
    /// Receiver output dimension per snapshot.
    pub n_obs: usize,
    /// `Pbar^T A_0` (`n_sig n_obs x 4`).
    pub abar0: CMat,
    /// `Pbar^T Omega_0 Pbar`.
    pub omega0_bar: CMat,
    /// `Pbar^T Omega_c Pbar`.
    pub omegac_bar: CMat,
    /// `Pbar^T Omega Pbar`, unregularized.
    pub omega_bar: CMat,
    /// Ridge applied before inversion (0 when already well conditioned).
    pub kappa: f64,
    /// `(omega_bar + kappa I)^{-1}`.
    pub omega_bar_inv: CMat,
    /// Whitened range basis `U Lambda^{1/2}` of `omega_bar`
    /// (`n_sig n_obs x r`, `r` the numerical rank).
    pub whitened_basis: CMat,
    /// Whitened target map `Lambda^{-1/2} U^H Abar0 Sigma0` (`r x 4`).
    pub whitened_target: CMat,
    pub sigma0: CMat,
    pub beta0: f64,
    pub sigma_s2: f64,
}

impl SensingView {
    pub fn from_parts(
        n_sig: usize,
        n_obs: usize,
        a0: &CMat,
        omega0: &CMat,
        omega_c: &CMat,
        pbar_m: Option<&RMat>,
        sigma0: &CMat,
        beta0: f64,
        sigma_s2: f64,
    ) -> Self {
        let (abar0, omega0_bar, omegac_bar) = match pbar_m {
            Some(p) => {
                let pc = to_complex(p);
                (
                    pc.transpose() * a0,
                    hermitian_part(&(pc.transpose() * omega0 * &pc)),
                    hermitian_part(&(pc.transpose() * omega_c * &pc)),
                )
            }
            None => (a0.clone(), omega0.clone(), omega_c.clone()),
        };
        let omega_bar = hermitian_part(&(&omega0_bar + &omegac_bar));
        let dim = omega_bar.nrows();
        let evs = crate::linalg::eigvals_h(&omega_bar);
        let max_ev = evs[dim - 1].max(0.0);
        // ridge rank-deficient projections per the regularization rule
        // kappa = 1e-6 Tr(omega_bar) / (4 N_t N_r)
        let kappa = if evs[0] <= 1e-10 * max_ev.max(1e-300) {
            1e-6 * trace_re(&omega_bar) / (4.0 * (n_sig * n_obs) as f64)
        } else {
            0.0
        };
        let mut reg = omega_bar.clone();
        for i in 0..dim {
            reg[(i, i)] += Cx::new(kappa, 0.0);
        }
        let omega_bar_inv = herm_inv_floor(&reg, 0.0);

        // whitened range basis of omega_bar: columns of U sqrt(Lambda) for
        // eigenvalues above a relative floor; exact up to rounding since the
        // response covariances have low rank by construction
        let eig = nalgebra::SymmetricEigen::new(omega_bar.clone());
        let floor = 1e-12 * max_ev.max(1e-300);
        let kept: Vec<usize> = (0..dim).filter(|&i| eig.eigenvalues[i] > floor).collect();
        let r = kept.len();
        let mut whitened_basis = CMat::zeros(dim, r);
        let mut white_inv = CMat::zeros(r, dim);
        for (col, &i) in kept.iter().enumerate() {
            let lam = eig.eigenvalues[i];
            whitened_basis
                .column_mut(col)
                .copy_from(&(eig.eigenvectors.column(i) * Cx::new(lam.sqrt(), 0.0)));
            white_inv
                .row_mut(col)
                .copy_from(&(eig.eigenvectors.column(i).adjoint() * Cx::new(1.0 / lam.sqrt(), 0.0)));
        }
        let whitened_target = &white_inv * &abar0 * sigma0;

        Self {
            n_sig,
            n_obs,
            abar0,
            omega0_bar,
            omegac_bar,
            omega_bar,
            kappa,
            omega_bar_inv,
            whitened_basis,
            whitened_target,
            sigma0: sigma0.clone(),
            beta0,
            sigma_s2,
        }
    }

    /// View of a reconfigurable-array scene under fixed polarization.
    pub fn reconfigurable(scene: &Scene, p_t: &PolBlockMatrix, p_r: &PolBlockMatrix) -> Self {
        let pb = pbar(p_t, p_r);
        Self::from_parts(
            scene.nt,
            scene.nr,
            &scene.a0,
            &scene.omega0,
            &scene.omega_c,
            Some(&pb),
            &scene.target.sigma0,
            scene.target.beta0,
            scene.sigma_s2,
        )
    }

    /// Regularized `omega_bar + kappa I`.
    pub fn omega_bar_reg(&self) -> CMat {
        let mut m = self.omega_bar.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += Cx::new(self.kappa, 0.0);
        }
        m
    }

    /// `Rbar_x = R_x^* ⊗ I_{n_obs}`.
    pub fn rbar(&self, r_x: &CMat) -> CMat {
        r_x.conjugate().kronecker(&CMat::identity(self.n_obs, self.n_obs))
    }

    /// Sensing MSE evaluated through the matrix-inversion-lemma form:
    /// `Tr(Sigma0) - beta0^2 Tr(Sigma0 Abar0^H G Abar0 Sigma0)` with
    /// `G = W - sigma_s^2 W (Rbar_x + sigma_s^2 W)^{-1} W`, `W = omega_bar_inv`.
    pub fn mse_inversion_lemma(&self, r_x: &CMat) -> Result<f64> {
        let w = &self.omega_bar_inv;
        let inner = self.rbar(r_x) + w * Cx::new(self.sigma_s2, 0.0);
        let inv_w = herm_solve(&inner, w).ok_or_else(|| {
            Error::Conditioning("inner matrix of the inversion-lemma form is singular".into())
        })?;
        let g = hermitian_part(&(w - w * inv_w * Cx::new(self.sigma_s2, 0.0)));
        let s = self.sigma0.adjoint() * self.abar0.adjoint() * g * &self.abar0 * &self.sigma0;
        Ok(trace_re(&self.sigma0) - self.beta0 * self.beta0 * trace_re(&s))
    }

    /// Exact MSE through the whitened low-rank route (no regularization):
    /// with `Y = U~^H (R_x^* ⊗ I) U~` and `D` the whitened target map,
    /// `mse = Tr(Sigma0) - beta0^2 sigma^{-2} (Tr(D^H Y D) - Tr(D^H Y (sigma^2 I + Y)^{-1} Y D))`.
    pub fn mse_whitened(&self, r_x: &CMat) -> Result<f64> {
        let u = &self.whitened_basis;
        let y = hermitian_part(&(u.adjoint() * self.rbar(r_x) * u));
        let d = &self.whitened_target;
        let yd = &y * d;
        let mut inner = y.clone();
        for i in 0..inner.nrows() {
            inner[(i, i)] += Cx::new(self.sigma_s2, 0.0);
        }
        let sol = herm_solve(&inner, &yd).ok_or_else(|| {
            Error::Conditioning("whitened inner matrix is singular".into())
        })?;
        let lin = (d.adjoint() * &yd).trace().re;
        let frac = (yd.adjoint() * sol).trace().re;
        let b2 = self.beta0 * self.beta0;
        Ok(trace_re(&self.sigma0) - b2 / self.sigma_s2 * (lin - frac))
    }

    /// Left-hand route of the same identity, evaluated from an explicit
    /// codeword matrix: `G = Xbar (Xbar^H omega_reg Xbar + sigma^2 I)^{-1} Xbar^H`.
    pub fn mse_lemma_lhs(&self, x: &CMat) -> Result<f64> {
        let xbar = x.conjugate().kronecker(&CMat::identity(self.n_obs, self.n_obs));
        let mut e = hermitian_part(&(xbar.adjoint() * self.omega_bar_reg() * &xbar));
        for i in 0..e.nrows() {
            e[(i, i)] += Cx::new(self.sigma_s2, 0.0);
        }
        let einv_xh = herm_solve(&e, &xbar.adjoint()).ok_or_else(|| {
            Error::Conditioning("lemma left-hand normal matrix is singular".into())
        })?;
        let g = hermitian_part(&(&xbar * einv_xh));
        let s = self.sigma0.adjoint() * self.abar0.adjoint() * g * &self.abar0 * &self.sigma0;
        Ok(trace_re(&self.sigma0) - self.beta0 * self.beta0 * trace_re(&s))
    }

    /// Target SINR `Tr(Q0 Rbar) / (Tr(Qc Rbar) + sigma_s^2)` with
    /// `Q = Pbar^T Omega Pbar` and `Rbar = R_x^* ⊗ I`.
    pub fn target_sinr(&self, r_x: &CMat) -> f64 {
        let num = kron_weight_inner(&self.omega0_bar, r_x, self.n_obs);
        let den = kron_weight_inner(&self.omegac_bar, r_x, self.n_obs) + self.sigma_s2;
        (num / den).max(0.0)
    }
}

/// `Tr(Q (R^* ⊗ I_{n_obs}))` without forming the Kronecker product: the
/// partial trace of `Q` over the observation index contracts against `R^*`.
pub fn kron_weight_inner(q: &CMat, r: &CMat, n_obs: usize) -> f64 {
    let n_sig = r.nrows();
    debug_assert_eq!(q.nrows(), n_sig * n_obs);
    let mut acc = Cx::new(0.0, 0.0);
    for a in 0..n_sig {
        for b in 0..n_sig {
            let mut block_tr = Cx::new(0.0, 0.0);
            for s in 0..n_obs {
                block_tr += q[(a * n_obs + s, b * n_obs + s)];
            }
            acc += block_tr * r[(b, a)].conj();
        }
    }
    acc.re
}

/// Coefficient matrix `C` (Hermitian, `n_sig x n_sig`) with
/// `Tr(Q (R^* ⊗ I)) = Re Tr(C^H R)` for Hermitian `Q`, used to express the
/// Kronecker-weighted trace as a linear functional of `R`.
pub fn kron_weight_coeff(q: &CMat, n_sig: usize, n_obs: usize) -> CMat {
    debug_assert_eq!(q.nrows(), n_sig * n_obs);
    let mut c = CMat::zeros(n_sig, n_sig);
    for a in 0..n_sig {
        for b in 0..n_sig {
            let mut block_tr = Cx::new(0.0, 0.0);
            for s in 0..n_obs {
                block_tr += q[(a * n_obs + s, b * n_obs + s)];
            }
            // Tr(Q (R^*⊗I)) = sum_{a,b} Tr(Q_{ab}) R^*_{ba} = Re Tr(C^H R)
            // with C_{ab} = conj(Tr(Q_{ab}))
            c[(a, b)] = block_tr.conj();
        }
    }
    hermitian_part(&c)
}

/// SINR of user `k`: useful power over interference from every other
/// precoder column (communication and sensing) plus noise.
pub fn user_sinr(h_k: &CVec, f: &CMat, sigma_c2: f64, k: usize) -> f64 {
    let mut useful = 0.0;
    let mut interf = 0.0;
    for j in 0..f.ncols() {
        let g = (h_k.adjoint() * f.column(j))[(0, 0)].norm_sqr();
        if j == k {
            useful = g;
        } else {
            interf += g;
        }
    }
    useful / (interf + sigma_c2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_cmat, randn_c, sample_cn, psd_factor};
    use crate::polar::PolVector;
    use crate::scene::{
        sigma0_estimation, sigma_clutter_iso, ClutterPatch, Scene, TargetSpec,
    };
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scene_nc(nt: usize, nr: usize, clutter: bool) -> Scene {
        let target = TargetSpec::new(0.0, 0.1, sigma0_estimation()).unwrap();
        let patches = if clutter {
            vec![
                ClutterPatch::new(-0.7, 0.01, sigma_clutter_iso(0.2)).unwrap(),
                ClutterPatch::new(0.5, 0.01, sigma_clutter_iso(0.2)).unwrap(),
                ClutterPatch::new(1.0, 0.01, sigma_clutter_iso(0.2)).unwrap(),
                ClutterPatch::new(-1.2, 0.01, sigma_clutter_iso(0.2)).unwrap(),
            ]
        } else {
            vec![]
        };
        Scene::new(nt, nr, 0.5, 0.1, target, patches, 1.0).unwrap()
    }

    #[test]
    fn trivial_measurement_matrix() {
        let x = CMat::identity(1, 1);
        let pt = PolBlockMatrix::uniform(1, PolVector::horizontal()).unwrap();
        let pr = PolBlockMatrix::uniform(1, PolVector::horizontal()).unwrap();
        let m = MeasurementOperator::new(&x, &pt, &pr).unwrap().dense().unwrap();
        assert_eq!(m.shape(), (1, 4));
        assert!((m[(0, 0)] - Cx::new(1.0, 0.0)).norm() < 1e-15);
        for j in 1..4 {
            assert!(m[(0, j)].norm() < 1e-15);
        }
    }

    #[test]
    fn measurement_dual_construction_agrees() {
        // Kronecker form (X^T P_t^T) ⊗ P_r^T against Xbar^H Pbar^T
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let (nt, nr, l) = (2, 2, 4);
        let x = random_cmat(&mut rng, nt, l);
        let pt = PolBlockMatrix::alternating(nt).unwrap();
        let pr = PolBlockMatrix::alternating(nr).unwrap();
        let op = MeasurementOperator::new(&x, &pt, &pr).unwrap();
        let dense = op.dense().unwrap();
        let alt = op.xbar().adjoint() * op.pbar().transpose();
        assert!((&dense - &alt).norm() < 1e-12 * dense.norm());

        // linearity in X
        let op2 = MeasurementOperator::new(&(&x * Cx::new(2.0, 0.0)), &pt, &pr).unwrap();
        let dense2 = op2.dense().unwrap();
        assert!((&dense2 - &dense * Cx::new(2.0, 0.0)).norm() < 1e-12 * dense2.norm());
    }

    #[test]
    fn scalar_wiener_closed_form() {
        // all dimensions 1, no clutter: G = beta s2 x^* / (beta^2 s2 |x|^2 + sn)
        let sigma2 = 0.8;
        let beta = 0.6;
        let sn = 0.3;
        let xval = Cx::new(1.3, -0.4);

        let target = TargetSpec::new(0.0, beta, CMat::identity(4, 4) * Cx::new(sigma2, 0.0)).unwrap();
        let scene = Scene::new(1, 1, 0.5, 0.0, target, vec![], sn).unwrap();
        let pt = PolBlockMatrix::uniform(1, PolVector::horizontal()).unwrap();
        let pr = PolBlockMatrix::uniform(1, PolVector::horizontal()).unwrap();
        let x = CMat::from_element(1, 1, xval);
        let op = MeasurementOperator::new(&x, &pt, &pr).unwrap();
        let est = lmmse_combiner(&op, &scene).unwrap();

        // only the HH component is observed; the other three stay at prior.
        // G is applied as G^H y, so the combiner entry itself is unconjugated
        let denom = beta * beta * sigma2 * xval.norm_sqr() + sn;
        let g_want = xval * Cx::new(beta * sigma2 / denom, 0.0);
        assert!((est.combiner[(0, 0)] - g_want).norm() < 1e-12);
        let ze_want = sigma2 * sn / denom;
        assert!((est.error_cov[(0, 0)].re - ze_want).abs() < 1e-12);
        assert!((est.mse - (ze_want + 3.0 * sigma2)).abs() < 1e-12);
    }

    #[test]
    fn noiseless_identifiable_mse_vanishes() {
        // sigma_s^2 -> 0 with full-column-rank M and no clutter
        let target = TargetSpec::new(0.1, 0.5, sigma0_estimation()).unwrap();
        let scene = Scene::new(2, 2, 0.5, 0.1, target, vec![], 1e-12).unwrap();
        let pt = PolBlockMatrix::alternating(2).unwrap();
        let pr = PolBlockMatrix::alternating(2).unwrap();
        let wf = Waveform::uniform(2, 0, 8, 100.0).unwrap();
        let op = MeasurementOperator::new(&wf.codeword_matrix(), &pt, &pr).unwrap();
        let est = lmmse_combiner(&op, &scene).unwrap();
        let prior = trace_re(&scene.target.sigma0);
        assert!(est.mse <= 1e-8 * prior, "mse {} vs prior {prior}", est.mse);
    }

    #[test]
    fn mse_monotone_in_noise() {
        let scene0 = scene_nc(2, 2, true);
        let pt = PolBlockMatrix::alternating(2).unwrap();
        let pr = PolBlockMatrix::alternating(2).unwrap();
        let wf = Waveform::uniform(2, 0, 4, 10.0).unwrap();
        let x = wf.codeword_matrix();
        let mut last = 0.0;
        for sigma in [1e-3, 1e-2, 0.1, 1.0, 10.0] {
            let scene = Scene::new(
                2,
                2,
                0.5,
                0.1,
                scene0.target.clone(),
                scene0.clutter.clone(),
                sigma,
            )
            .unwrap();
            let op = MeasurementOperator::new(&x, &pt, &pr).unwrap();
            let est = lmmse_combiner(&op, &scene).unwrap();
            assert!(est.mse >= last - 1e-12, "mse not monotone in noise");
            assert!(est.mse >= 0.0 && est.mse <= trace_re(&scene.target.sigma0) + 1e-12);
            last = est.mse;
        }
    }

    #[test]
    fn zero_measurement_returns_prior() {
        let scene = scene_nc(2, 2, false);
        let pt = PolBlockMatrix::alternating(2).unwrap();
        let pr = PolBlockMatrix::alternating(2).unwrap();
        let x = CMat::zeros(2, 4);
        let op = MeasurementOperator::new(&x, &pt, &pr).unwrap();
        let est = lmmse_combiner(&op, &scene).unwrap();
        let prior = trace_re(&scene.target.sigma0);
        assert!((est.mse - prior).abs() < 1e-12);
        assert!(est.nmse_db.abs() < 1e-9);
    }

    #[test]
    fn lemma_equivalence_pd_case() {
        // with full-rank omega_bar (4 clutter patches), the inversion-lemma
        // route equals the direct combiner route exactly
        let scene = scene_nc(2, 2, true);
        let pt = PolBlockMatrix::alternating(2).unwrap();
        let pr = PolBlockMatrix::alternating(2).unwrap();
        let view = SensingView::reconfigurable(&scene, &pt, &pr);
        assert_eq!(view.kappa, 0.0, "expected PD omega_bar in this construction");

        let wf = Waveform::uniform(2, 0, 4, 10.0).unwrap();
        let x = wf.codeword_matrix();
        let op = MeasurementOperator::new(&x, &pt, &pr).unwrap();
        let direct = lmmse_combiner(&op, &scene).unwrap().mse;
        let lemma = view.mse_inversion_lemma(&wf.r_x()).unwrap();
        assert!(
            (direct - lemma).abs() <= 1e-9 * direct.max(1e-12),
            "direct {direct} vs lemma {lemma}"
        );
        let lhs = view.mse_lemma_lhs(&x).unwrap();
        assert!((lhs - lemma).abs() <= 1e-9 * lemma.max(1e-12));
    }

    #[test]
    fn kappa_sweep_deviation_is_order_kappa() {
        let scene = scene_nc(2, 2, true);
        let pt = PolBlockMatrix::alternating(2).unwrap();
        let pr = PolBlockMatrix::alternating(2).unwrap();
        let wf = Waveform::uniform(2, 0, 4, 10.0).unwrap();
        let r_x = wf.r_x();

        let base = SensingView::reconfigurable(&scene, &pt, &pr);
        let exact = base.mse_inversion_lemma(&r_x).unwrap();
        let mut prev_dev = f64::INFINITY;
        for kappa in [1e-2, 1e-3, 1e-4, 1e-5] {
            let mut v = base.clone();
            v.kappa = kappa;
            v.omega_bar_inv = herm_inv_floor(&v.omega_bar_reg(), 0.0);
            let got = v.mse_inversion_lemma(&r_x).unwrap();
            let dev = (got - exact).abs();
            assert!(dev <= prev_dev + 1e-15, "deviation must shrink with kappa");
            assert!(dev <= 10.0 * kappa, "deviation {dev} not O(kappa={kappa})");
            prev_dev = dev;
        }
    }

    #[test]
    fn lmmse_matches_monte_carlo() {
        // Tr(Z_e) against the empirical MSE of the optimal combiner
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let target = TargetSpec::new(0.0, 0.3, sigma0_estimation()).unwrap();
        let patch = ClutterPatch::new(0.8, 0.05, sigma_clutter_iso(0.2)).unwrap();
        let scene = Scene::new(1, 2, 0.5, 0.1, target, vec![patch], 0.5).unwrap();
        let pt = PolBlockMatrix::uniform(1, PolVector::horizontal()).unwrap();
        let pr = PolBlockMatrix::alternating(2).unwrap();
        let wf = Waveform::uniform(1, 0, 4, 4.0).unwrap();
        let x = wf.codeword_matrix();
        let op = MeasurementOperator::new(&x, &pt, &pr).unwrap();
        let est = lmmse_combiner(&op, &scene).unwrap();

        let m = op.dense().unwrap();
        let f0 = psd_factor(&scene.target.sigma0);
        let fq = psd_factor(&scene.clutter[0].sigma_mat);
        let aq = &scene.a_clutter[0];
        let mut acc = 0.0;
        let draws = 100_000;
        for _ in 0..draws {
            let phi0 = sample_cn(&mut rng, &f0);
            let bq = randn_c(&mut rng) * scene.clutter[0].sigma2.sqrt();
            let phiq = sample_cn(&mut rng, &fq);
            let noise = CVec::from_fn(m.nrows(), |_, _| {
                randn_c(&mut rng) * scene.sigma_s2.sqrt()
            });
            let y = &m * (&scene.a0 * &phi0) * Cx::new(scene.target.beta0, 0.0)
                + &m * (aq * phiq) * bq
                + noise;
            let err = &phi0 - est.combiner.adjoint() * y;
            acc += err.norm_squared();
        }
        let empirical = acc / draws as f64;
        assert!(
            (empirical - est.mse).abs() <= 0.02 * est.mse,
            "empirical {empirical} vs analytic {}",
            est.mse
        );
    }

    #[test]
    fn target_sinr_three_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let scene = scene_nc(2, 2, true);
        let pt = PolBlockMatrix::alternating(2).unwrap();
        let pr = PolBlockMatrix::alternating(2).unwrap();
        let view = SensingView::reconfigurable(&scene, &pt, &pr);

        for _ in 0..10 {
            let f = random_cmat(&mut rng, 2, 2);
            let rho = f.norm_squared();
            let wf = Waveform::new(f.clone(), 1, 4, rho).unwrap();
            let r_x = wf.r_x();
            let x = wf.codeword_matrix();

            // form 1: Tr(M Omega0 M^H) / (Tr(M Omega_c M^H) + sigma^2)
            let m = MeasurementOperator::new(&x, &pt, &pr).unwrap().dense().unwrap();
            let num1 = trace_re(&(&m * &scene.omega0 * m.adjoint()));
            let den1 = trace_re(&(&m * &scene.omega_c * m.adjoint())) + scene.sigma_s2;
            let form1 = num1 / den1;

            // form 2: partial-trace route on R_x
            let form2 = view.target_sinr(&r_x);

            // form 3: Fbar^H Q Fbar traces
            let fbar = f.conjugate().kronecker(&CMat::identity(2, 2));
            let num3 = trace_re(&(fbar.adjoint() * &view.omega0_bar * &fbar));
            let den3 = trace_re(&(fbar.adjoint() * &view.omegac_bar * &fbar)) + scene.sigma_s2;
            let form3 = num3 / den3;

            let scale = form1.abs().max(1e-12);
            assert!((form1 - form2).abs() / scale < 1e-10, "{form1} vs {form2}");
            assert!((form1 - form3).abs() / scale < 1e-10, "{form1} vs {form3}");
            assert!(form1 >= 0.0);
        }

        // zero waveform gives zero SINR
        assert_eq!(view.target_sinr(&CMat::zeros(2, 2)), 0.0);
    }

    #[test]
    fn kron_weight_coeff_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let (n_sig, n_obs) = (3, 2);
        let q = crate::linalg::random_psd(&mut rng, n_sig * n_obs);
        let r = crate::linalg::random_psd(&mut rng, n_sig);
        let dense = trace_re(&(&q * r.conjugate().kronecker(&CMat::identity(n_obs, n_obs))));
        let quick = kron_weight_inner(&q, &r, n_obs);
        assert!((dense - quick).abs() < 1e-10 * dense.abs().max(1.0));
        let c = kron_weight_coeff(&q, n_sig, n_obs);
        let lin = crate::linalg::inner_re(&c, &r);
        assert!((dense - lin).abs() < 1e-10 * dense.abs().max(1.0));
    }

    #[test]
    fn user_sinr_basics() {
        // single user, h = f = e1, unit noise -> SINR 1
        let h = CVec::from_vec(vec![Cx::new(1.0, 0.0), Cx::new(0.0, 0.0)]);
        let f = CMat::identity(2, 1);
        assert!((user_sinr(&h, &f, 1.0, 0) - 1.0).abs() < 1e-15);

        // orthogonal interference does not count
        let mut f2 = CMat::zeros(2, 2);
        f2[(0, 0)] = Cx::new(1.0, 0.0);
        f2[(1, 1)] = Cx::new(5.0, 0.0);
        assert!((user_sinr(&h, &f2, 1.0, 0) - 1.0).abs() < 1e-15);

        // global phase on f_k is irrelevant
        let f3 = &f2 * Cx::from_polar(1.0, 1.1);
        assert!((user_sinr(&h, &f3, 1.0, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn waveform_validation() {
        assert!(Waveform::uniform(2, 0, 1, 4.0).is_err()); // L too short
        let f = CMat::identity(3, 3);
        assert!(Waveform::new(f.clone(), 4, 8, 3.0).is_err()); // n_comm too big
        assert!(Waveform::new(f.clone(), 1, 8, 5.0).is_err()); // power mismatch
        let wf = Waveform::new(f, 1, 8, 3.0).unwrap();
        let x = wf.codeword_matrix();
        assert!((&x * x.adjoint() - wf.r_x()).norm() < 1e-10);
    }

    #[test]
    fn nmse_reference_points() {
        let sigma0 = CMat::identity(4, 4);
        assert!((nmse_db(4.0, &sigma0) - 0.0).abs() < 1e-12);
        assert!((nmse_db(0.4, &sigma0) + 10.0).abs() < 1e-12);
    }
}
