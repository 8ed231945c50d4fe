//! Targets, clutter patches, sensing covariances and synthetic multipath
//! communication channels.
//!
//! The sensing geometry is a colocated pair of ULAs. A single stationary
//! target sits at angle `theta0` with depolarization covariance `Sigma0`;
//! clutter patches contribute independent reflections with their own angles
//! and depolarization statistics. Communication channels follow the same
//! structural form as the target response (per-path depolarization plus a
//! random orientation rotation at the user), generated synthetically from a
//! seeded RNG so every experiment is reproducible.

use crate::linalg::{
    eigvals_h, hermitian_part, psd_project, randn_c, to_complex, CMat, CVec, Cx, RMat,
};
use crate::polar::{pbar, stacked_response, steering_ula, PolBlockMatrix, PolVector, XpdMatrix};
use crate::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Point target: angle, propagation loss (linear amplitude scale) and the
/// covariance of its vectorized 2x2 depolarization matrix.
#[derive(Debug, Clone)]
pub struct TargetSpec {
    pub theta0: f64,
    pub beta0: f64,
    pub sigma0: CMat,
}

impl TargetSpec {
    pub fn new(theta0: f64, beta0: f64, sigma0: CMat) -> Result<Self> {
        if beta0 <= 0.0 || !beta0.is_finite() {
            return Err(Error::Domain(format!("propagation loss must be positive, got {beta0}")));
        }
        if sigma0.shape() != (4, 4) {
            return Err(Error::Shape("depolarization covariance must be 4x4".into()));
        }
        Ok(Self { theta0, beta0, sigma0: validate_psd(&sigma0)? })
    }
}

/// Stationary clutter patch with random reflection gain of variance
/// `sigma2` and depolarization covariance `sigma_mat`.
#[derive(Debug, Clone)]
pub struct ClutterPatch {
    pub theta: f64,
    pub sigma2: f64,
    pub sigma_mat: CMat,
}

impl ClutterPatch {
    pub fn new(theta: f64, sigma2: f64, sigma_mat: CMat) -> Result<Self> {
        if sigma2 < 0.0 || !sigma2.is_finite() {
            return Err(Error::Domain(format!(
                "clutter variance must be nonnegative, got {sigma2}"
            )));
        }
        if sigma_mat.shape() != (4, 4) {
            return Err(Error::Shape("clutter depolarization covariance must be 4x4".into()));
        }
        Ok(Self { theta, sigma2, sigma_mat: validate_psd(&sigma_mat)? })
    }
}

/// Clip tiny negative eigenvalues (covariances quoted in the literature are
/// not always exactly PSD); reject anything indefinite beyond tolerance.
fn validate_psd(m: &CMat) -> Result<CMat> {
    let evs = eigvals_h(m);
    let max = evs[evs.len() - 1].max(0.0);
    let min = evs[0];
    if min < -1e-6 * max.max(1.0) {
        return Err(Error::Conditioning(format!(
            "covariance has eigenvalue {min}, too negative to project"
        )));
    }
    if min < 0.0 {
        Ok(psd_project(m))
    } else {
        Ok(hermitian_part(m))
    }
}

/// 2x2 orthogonal rotation by `psi`.
pub fn rotation(psi: f64) -> RMat {
    RMat::from_row_slice(2, 2, &[psi.cos(), -psi.sin(), psi.sin(), psi.cos()])
}

/// Target depolarization covariance used in the estimation study.
pub fn sigma0_estimation() -> CMat {
    sigma0_from_diag(&[0.2, 0.6, 0.3, 0.9])
}

/// Target depolarization covariance used in the detection study (strong
/// vertical co-polar return, clearly separated from isotropic clutter).
pub fn sigma0_detection() -> CMat {
    sigma0_from_diag(&[0.1, 0.3, 0.1, 0.9])
}

fn sigma0_from_diag(diag: &[f64; 4]) -> CMat {
    let e = Cx::new(1.0, 1.0);
    let mut m = CMat::zeros(4, 4);
    for (i, d) in diag.iter().enumerate() {
        m[(i, i)] = Cx::new(*d, 0.0);
    }
    let upper = [
        (0, 1, 0.06),
        (0, 2, 0.05),
        (0, 3, 0.04),
        (1, 2, 0.03),
        (1, 3, 0.03),
        (2, 3, 0.03),
    ];
    for (i, j, c) in upper {
        m[(i, j)] = e * c;
        m[(j, i)] = e.conj() * c;
    }
    m
}

/// Isotropic clutter depolarization covariance `c I_4`.
pub fn sigma_clutter_iso(c: f64) -> CMat {
    CMat::identity(4, 4) * Cx::new(c, 0.0)
}

/// A full sensing scene: arrays, target, clutter and the derived response
/// covariances. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Scene {
    pub nt: usize,
    pub nr: usize,
    pub spacing: f64,
    pub xpd: XpdMatrix,
    pub target: TargetSpec,
    pub clutter: Vec<ClutterPatch>,
    pub sigma_s2: f64,
    /// Stacked transmit response `A_t(theta0)` of size `2N_t x 2`.
    pub at0: CMat,
    /// Stacked receive response `A_r(theta0)` of size `2N_r x 2`.
    pub ar0: CMat,
    /// `A_0 = A_t(theta0) ⊗ A_r(theta0)`, size `4 N_t N_r x 4`.
    pub a0: CMat,
    /// Per-patch `A_q = A_t(theta_q) ⊗ A_r(theta_q)`.
    pub a_clutter: Vec<CMat>,
    /// Target response covariance `beta0^2 A_0 Sigma0 A_0^H`.
    pub omega0: CMat,
    /// Clutter response covariance `sum_q sigma_q^2 A_q Sigma_q A_q^H`.
    pub omega_c: CMat,
    /// `Omega = Omega0 + OmegaC`.
    pub omega: CMat,
}

impl Scene {
    pub fn new(
        nt: usize,
        nr: usize,
        spacing: f64,
        chi_ant: f64,
        target: TargetSpec,
        clutter: Vec<ClutterPatch>,
        sigma_s2: f64,
    ) -> Result<Self> {
        if sigma_s2 < 0.0 {
            return Err(Error::Domain("noise power must be nonnegative".into()));
        }
        let xpd = XpdMatrix::new(chi_ant)?;
        let at0 = stacked_response(&steering_ula(nt, target.theta0, spacing)?, &xpd);
        let ar0 = stacked_response(&steering_ula(nr, target.theta0, spacing)?, &xpd);
        let a0 = at0.kronecker(&ar0);

        let mut a_clutter = Vec::with_capacity(clutter.len());
        for p in &clutter {
            let at = stacked_response(&steering_ula(nt, p.theta, spacing)?, &xpd);
            let ar = stacked_response(&steering_ula(nr, p.theta, spacing)?, &xpd);
            a_clutter.push(at.kronecker(&ar));
        }

        let b2 = Cx::new(target.beta0 * target.beta0, 0.0);
        let omega0 = hermitian_part(&(&a0 * &target.sigma0 * a0.adjoint() * b2));
        let dim = 4 * nt * nr;
        let mut omega_c = CMat::zeros(dim, dim);
        for (p, aq) in clutter.iter().zip(&a_clutter) {
            omega_c += aq * &p.sigma_mat * aq.adjoint() * Cx::new(p.sigma2, 0.0);
        }
        let omega_c = hermitian_part(&omega_c);
        let omega = hermitian_part(&(&omega0 + &omega_c));

        for (name, m) in [("omega0", &omega0), ("omega_c", &omega_c), ("omega", &omega)] {
            let evs = eigvals_h(m);
            let max = evs[evs.len() - 1].max(0.0);
            if evs[0] < -1e-9 * max.max(1.0) {
                return Err(Error::Conditioning(format!(
                    "{name} lost positive semidefiniteness: min eigenvalue {}",
                    evs[0]
                )));
            }
        }

        Ok(Self {
            nt,
            nr,
            spacing,
            xpd,
            target,
            clutter,
            sigma_s2,
            at0,
            ar0,
            a0,
            a_clutter,
            omega0,
            omega_c,
            omega,
        })
    }

    /// Stacked transmit response at an arbitrary angle.
    pub fn at(&self, theta: f64) -> CMat {
        stacked_response(&steering_ula(self.nt, theta, self.spacing).unwrap(), &self.xpd)
    }

    /// Stacked receive response at an arbitrary angle.
    pub fn ar(&self, theta: f64) -> CMat {
        stacked_response(&steering_ula(self.nr, theta, self.spacing).unwrap(), &self.xpd)
    }

    /// Dimension of the vectorized response space, `4 N_t N_r`.
    pub fn response_dim(&self) -> usize {
        4 * self.nt * self.nr
    }
}

/// Target response matrix `T = beta0 P_r^T A_r(theta0) Phi0 A_t^T(theta0) P_t`
/// for one realization `phi0 = vec(Phi0)`.
pub fn target_response(
    scene: &Scene,
    p_t: &PolBlockMatrix,
    p_r: &PolBlockMatrix,
    phi0: &CVec,
) -> Result<CMat> {
    if p_t.n() != scene.nt || p_r.n() != scene.nr {
        return Err(Error::Shape("polarization matrices do not match scene arrays".into()));
    }
    if phi0.len() != 4 {
        return Err(Error::Shape("depolarization parameter must have 4 entries".into()));
    }
    let phi = CMat::from_column_slice(2, 2, phi0.as_slice());
    Ok(p_r.stacked_c().transpose()
        * &scene.ar0
        * phi
        * scene.at0.transpose()
        * p_t.stacked_c()
        * Cx::new(scene.target.beta0, 0.0))
}

/// Clutter response `C = sum_q beta_q P_r^T A_r(theta_q) Phi_q A_t^T(theta_q) P_t`
/// for explicit per-patch draws `(beta_q, phi_q)`.
pub fn clutter_response(
    scene: &Scene,
    p_t: &PolBlockMatrix,
    p_r: &PolBlockMatrix,
    draws: &[(Cx, CVec)],
) -> Result<CMat> {
    if draws.len() != scene.clutter.len() {
        return Err(Error::Shape(format!(
            "got {} draws for {} clutter patches",
            draws.len(),
            scene.clutter.len()
        )));
    }
    let mut c = CMat::zeros(scene.nr, scene.nt);
    for (patch_idx, (beta, phi)) in draws.iter().enumerate() {
        if phi.len() != 4 {
            return Err(Error::Shape(
                "clutter depolarization parameter must have 4 entries".into(),
            ));
        }
        let patch = &scene.clutter[patch_idx];
        let at = scene.at(patch.theta);
        let ar = scene.ar(patch.theta);
        let phi_m = CMat::from_column_slice(2, 2, phi.as_slice());
        c += p_r.stacked_c().transpose() * ar * phi_m * at.transpose() * p_t.stacked_c() * *beta;
    }
    Ok(c)
}

/// Vectorized target response `vec(T) = beta0 Pbar^T A_0 phi0`; the compact
/// route used by the optimizers. Agrees with [`target_response`] reshaped.
pub fn target_response_vec(
    scene: &Scene,
    p_t: &PolBlockMatrix,
    p_r: &PolBlockMatrix,
    phi0: &CVec,
) -> CVec {
    let pb = to_complex(&pbar(p_t, p_r));
    pb.transpose() * &scene.a0 * phi0 * Cx::new(scene.target.beta0, 0.0)
}

/// One user's synthetic downlink channel before polarization combining.
#[derive(Debug, Clone)]
pub struct UserChannel {
    /// `H_up` of size `2 x n_ports` (`n_ports = 2 N_t` for the
    /// reconfigurable array).
    pub h_up: CMat,
    /// Receive polarization combiner at the user.
    pub p_u: PolVector,
    /// Orientation mismatch angle.
    pub psi: f64,
    /// Channel cross-polar power leakage.
    pub chi_user: f64,
    /// Per-path angles of departure.
    pub aods: Vec<f64>,
    /// Per-path complex gains.
    pub gains: Vec<Cx>,
}

/// The set of downlink user channels plus the common receiver noise power.
#[derive(Debug, Clone)]
pub struct CommChannelSet {
    pub users: Vec<UserChannel>,
    pub sigma_c2: f64,
}

impl CommChannelSet {
    pub fn k(&self) -> usize {
        self.users.len()
    }

    /// Effective channels `h_k = P_t^T H_up^H p_u` for the current transmit
    /// polarization.
    pub fn effective(&self, p_t: &PolBlockMatrix) -> Vec<CVec> {
        self.users.iter().map(|u| effective_user_channel(&u.h_up, &u.p_u, p_t)).collect()
    }
}

/// Configuration of the synthetic channel generator.
#[derive(Debug, Clone)]
pub struct ChannelConfig {
    pub k_users: usize,
    pub paths_per_user: usize,
    /// AoDs drawn uniformly in `[-spread, spread]` (radians).
    pub angle_spread: f64,
    /// Channel cross-polar power leakage `chi_k`.
    pub chi_user: f64,
    /// XPD of the user's dual-polarized antenna pair.
    pub user_xpd: f64,
    pub sigma_c2: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            k_users: 2,
            paths_per_user: 4,
            angle_spread: 60f64.to_radians(),
            chi_user: 0.1,
            user_xpd: 0.1,
            sigma_c2: 1.0,
        }
    }
}

/// Per-path user depolarization matrix: unit-modulus phase entries with
/// cross-polar power leakage `chi`.
pub fn user_depolarization<R: Rng + ?Sized>(chi: f64, rng: &mut R) -> CMat {
    let s = 1.0 / (1.0 + chi).sqrt();
    let r = chi.sqrt() * s;
    let mut ph = [0.0; 4];
    for p in &mut ph {
        *p = rng.random::<f64>() * std::f64::consts::TAU;
    }
    CMat::from_row_slice(
        2,
        2,
        &[
            Cx::from_polar(s, ph[0]),
            Cx::from_polar(r, ph[1]),
            Cx::from_polar(r, ph[2]),
            Cx::from_polar(s, ph[3]),
        ],
    )
}

/// Generate the user channels against an arbitrary stacked transmit
/// response builder (reconfigurable or dual-polarized array).
pub fn sample_comm_channels_with<R, F>(
    cfg: &ChannelConfig,
    rng: &mut R,
    transmit_response: F,
) -> Result<CommChannelSet>
where
    R: Rng + ?Sized,
    F: Fn(f64) -> CMat,
{
    if cfg.k_users == 0 || cfg.paths_per_user == 0 {
        return Err(Error::Domain("need at least one user and one path".into()));
    }
    let v_u = to_complex(XpdMatrix::new(cfg.user_xpd)?.matrix());
    // i.i.d. CN(0, 2/M) gains keep E||h_k||^2 at the order of N_t after the
    // polarization projections halve the captured energy on average
    let gain_std = (2.0 / cfg.paths_per_user as f64).sqrt();
    let mut users = Vec::with_capacity(cfg.k_users);
    for k in 0..cfg.k_users {
        let psi = rng.random::<f64>() * std::f64::consts::TAU;
        let q = to_complex(&rotation(psi));
        let phi = user_depolarization(cfg.chi_user, rng);
        let mut aods = Vec::with_capacity(cfg.paths_per_user);
        let mut gains = Vec::with_capacity(cfg.paths_per_user);
        let mut h_up: Option<CMat> = None;
        for _ in 0..cfg.paths_per_user {
            let theta = (rng.random::<f64>() * 2.0 - 1.0) * cfg.angle_spread;
            let beta = randn_c(rng) * gain_std;
            let at = transmit_response(theta);
            let term = &v_u * &phi * &q * at.transpose() * beta;
            h_up = Some(match h_up {
                Some(h) => h + term,
                None => term,
            });
            aods.push(theta);
            gains.push(beta);
        }
        // odd-indexed users (1-based) vertical, even horizontal, mirroring
        // the static antenna pattern
        let p_u = if k % 2 == 0 { PolVector::vertical() } else { PolVector::horizontal() };
        users.push(UserChannel {
            h_up: h_up.unwrap(),
            p_u,
            psi,
            chi_user: cfg.chi_user,
            aods,
            gains,
        });
    }
    Ok(CommChannelSet { users, sigma_c2: cfg.sigma_c2 })
}

/// Generate user channels for the reconfigurable array of `scene`.
pub fn sample_comm_channels(
    scene: &Scene,
    cfg: &ChannelConfig,
    seed: u64,
) -> Result<CommChannelSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_comm_channels_with(cfg, &mut rng, |theta| scene.at(theta))
}

/// Effective user channel `h_k` with `h_k^H = p_u^T H_up P_t`.
pub fn effective_user_channel(h_up: &CMat, p_u: &PolVector, p_t: &PolBlockMatrix) -> CVec {
    let h_tilde = user_pre_channel(h_up, p_u);
    p_t.stacked_c().transpose() * h_tilde
}

/// Pre-polarization user channel `h~_k = H_up^H p_u` (`h~_k^H = p_u^T H_up`).
pub fn user_pre_channel(h_up: &CMat, p_u: &PolVector) -> CVec {
    let pu = CVec::from_vec(vec![Cx::new(p_u.h(), 0.0), Cx::new(p_u.v(), 0.0)]);
    h_up.adjoint() * pu
}

/// Draw one realization of the vectorized scene responses:
/// `phi0 ~ CN(0, Sigma0)` and per-patch `(beta_q, phi_q)` with
/// `beta_q ~ CN(0, sigma_q^2)`, `phi_q ~ CN(0, Sigma_q)`.
pub fn draw_scene_realization<R: Rng + ?Sized>(
    scene: &Scene,
    rng: &mut R,
) -> (CVec, Vec<(Cx, CVec)>) {
    let f0 = crate::linalg::psd_factor(&scene.target.sigma0);
    let phi0 = crate::linalg::sample_cn(rng, &f0);
    let draws = scene
        .clutter
        .iter()
        .map(|p| {
            let beta = randn_c(rng) * p.sigma2.sqrt();
            let f = crate::linalg::psd_factor(&p.sigma_mat);
            (beta, crate::linalg::sample_cn(rng, &f))
        })
        .collect();
    (phi0, draws)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{psd_factor, random_cmat, sample_cn, vec_mat, RVec};
    use nalgebra::SymmetricEigen;

    pub(crate) fn small_scene(nt: usize, nr: usize) -> Scene {
        let target = TargetSpec::new(0.0, 0.1, sigma0_estimation()).unwrap();
        let clutter = vec![
            ClutterPatch::new((-45f64).to_radians(), 0.01, sigma_clutter_iso(0.2)).unwrap(),
            ClutterPatch::new(30f64.to_radians(), 0.01, sigma_clutter_iso(0.2)).unwrap(),
        ];
        Scene::new(nt, nr, 0.5, 0.1, target, clutter, 1.0).unwrap()
    }

    #[test]
    fn quoted_sigma0_is_clipped_psd() {
        let s = sigma0_estimation();
        let evs = eigvals_h(&s);
        let t = TargetSpec::new(0.0, 1.0, s).unwrap();
        let evs2 = eigvals_h(&t.sigma0);
        assert!(evs2[0] >= -1e-12, "clipped min eigenvalue {}", evs2[0]);
        // trace essentially preserved by the clip
        assert!((t.sigma0.trace().re - 2.0).abs() < 0.05, "eigs before clip {evs:?}");
    }

    #[test]
    fn rotation_is_orthogonal() {
        for psi in [0.0, 0.4, 1.7, -2.2] {
            let q = rotation(psi) * rotation(-psi);
            assert!((&q - RMat::identity(2, 2)).abs().max() < 1e-15);
        }
    }

    #[test]
    fn trivial_target_response_passthrough() {
        // single antenna, perfect XPD, co-polar everything: T = beta0 * Phi(0,0)
        let target = TargetSpec::new(0.0, 0.7, CMat::identity(4, 4)).unwrap();
        let scene = Scene::new(1, 1, 0.5, 0.0, target, vec![], 1.0).unwrap();
        let ph = PolBlockMatrix::uniform(1, PolVector::horizontal()).unwrap();
        let pv = PolBlockMatrix::uniform(1, PolVector::vertical()).unwrap();

        let phi0 = CVec::from_vec(vec![
            Cx::new(1.0, 0.0),
            Cx::new(0.0, 0.0),
            Cx::new(0.0, 0.0),
            Cx::new(1.0, 0.0),
        ]); // vec(I_2)
        let t = target_response(&scene, &ph, &ph, &phi0).unwrap();
        assert!((t[(0, 0)] - Cx::new(0.7, 0.0)).norm() < 1e-14);

        // cross-polar receive picks Phi(2,1) = 0 for the identity matrix
        let t = target_response(&scene, &ph, &pv, &phi0).unwrap();
        assert!(t[(0, 0)].norm() < 1e-14);
    }

    #[test]
    fn matrix_and_vectorized_target_response_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let scene = small_scene(2, 2);
        let pt = PolBlockMatrix::alternating(2).unwrap();
        let pr = PolBlockMatrix::alternating(2).unwrap();
        for _ in 0..5 {
            let phi0 = random_cmat(&mut rng, 4, 1).column(0).into_owned();
            let t = target_response(&scene, &pt, &pr, &phi0).unwrap();
            let v = target_response_vec(&scene, &pt, &pr, &phi0);
            let diff = (vec_mat(&t) - v).norm();
            assert!(diff < 1e-12, "vectorization mismatch {diff}");
        }
    }

    #[test]
    fn clutter_superposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let target = TargetSpec::new(0.0, 0.1, sigma0_estimation()).unwrap();
        let patches: Vec<ClutterPatch> = [-1.2f64, -0.4, 0.5, 1.0]
            .iter()
            .map(|&th| ClutterPatch::new(th, 0.01, sigma_clutter_iso(0.2)).unwrap())
            .collect();
        let scene = Scene::new(3, 2, 0.5, 0.1, target.clone(), patches.clone(), 1.0).unwrap();
        let pt = PolBlockMatrix::alternating(3).unwrap();
        let pr = PolBlockMatrix::alternating(2).unwrap();

        let draws: Vec<(Cx, CVec)> = (0..4)
            .map(|_| (randn_c(&mut rng), random_cmat(&mut rng, 4, 1).column(0).into_owned()))
            .collect();
        let total = clutter_response(&scene, &pt, &pr, &draws).unwrap();

        let mut acc = CMat::zeros(2, 3);
        for q in 0..4 {
            let single =
                Scene::new(3, 2, 0.5, 0.1, target.clone(), vec![patches[q].clone()], 1.0).unwrap();
            acc += clutter_response(&single, &pt, &pr, &[draws[q].clone()]).unwrap();
        }
        assert!((&total - &acc).norm() < 1e-12 * total.norm().max(1.0));

        // zero patches -> zero matrix
        let empty = Scene::new(3, 2, 0.5, 0.1, target, vec![], 1.0).unwrap();
        let z = clutter_response(&empty, &pt, &pr, &[]).unwrap();
        assert!(z.norm() == 0.0);
    }

    #[test]
    fn clutter_patch_at_target_matches_target_response() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let target = TargetSpec::new(0.2, 0.1, sigma0_estimation()).unwrap();
        let patch = ClutterPatch::new(0.2, 0.01, sigma_clutter_iso(0.2)).unwrap();
        let scene = Scene::new(2, 2, 0.5, 0.1, target, vec![patch], 1.0).unwrap();
        let pt = PolBlockMatrix::alternating(2).unwrap();
        let pr = PolBlockMatrix::alternating(2).unwrap();
        let phi = random_cmat(&mut rng, 4, 1).column(0).into_owned();
        let t = target_response(&scene, &pt, &pr, &phi).unwrap();
        let c = clutter_response(&scene, &pt, &pr, &[(Cx::new(0.1, 0.0), phi.clone())]).unwrap();
        assert!((&t - &c).norm() < 1e-12 * t.norm());
    }

    #[test]
    fn covariances_are_psd_and_additive() {
        let scene = small_scene(2, 3);
        let dim = scene.response_dim();
        assert_eq!(scene.omega.shape(), (dim, dim));
        assert!((&scene.omega - (&scene.omega0 + &scene.omega_c)).norm() < 1e-12);
        for m in [&scene.omega0, &scene.omega_c, &scene.omega] {
            let evs = eigvals_h(m);
            assert!(evs[0] >= -1e-9 * evs[evs.len() - 1].max(1.0));
        }
        // no clutter -> omega_c = 0
        let target = TargetSpec::new(0.0, 0.1, sigma0_estimation()).unwrap();
        let empty = Scene::new(2, 2, 0.5, 0.1, target, vec![], 1.0).unwrap();
        assert!(empty.omega_c.norm() == 0.0);
    }

    #[test]
    fn identity_cov_single_antenna_omega_is_a0a0h() {
        let target = TargetSpec::new(0.3, 1.0, CMat::identity(4, 4)).unwrap();
        let scene = Scene::new(1, 1, 0.5, 0.0, target, vec![], 1.0).unwrap();
        let want = &scene.a0 * scene.a0.adjoint();
        assert!((&scene.omega0 - &want).norm() < 1e-12);
    }

    #[test]
    fn monte_carlo_covariance_matches_omega() {
        // sample covariance of beta A phi draws against the analytic Omega
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let target = TargetSpec::new(0.0, 0.1, sigma0_estimation()).unwrap();
        let patch = ClutterPatch::new(0.5, 0.01, sigma_clutter_iso(0.2)).unwrap();
        let scene = Scene::new(1, 1, 0.5, 0.1, target, vec![patch], 1.0).unwrap();

        let n = scene.response_dim();
        let mut acc = CMat::zeros(n, n);
        let f0 = psd_factor(&scene.target.sigma0);
        let fq = psd_factor(&scene.clutter[0].sigma_mat);
        let draws = 100_000;
        for _ in 0..draws {
            let phi0 = sample_cn(&mut rng, &f0);
            let bq = randn_c(&mut rng) * scene.clutter[0].sigma2.sqrt();
            let phiq = sample_cn(&mut rng, &fq);
            let v = &scene.a0 * phi0 * Cx::new(scene.target.beta0, 0.0)
                + &scene.a_clutter[0] * phiq * bq;
            acc += &v * v.adjoint();
        }
        let sample = acc / Cx::new(draws as f64, 0.0);

        let want = SymmetricEigen::new(scene.omega.clone()).eigenvalues;
        let got = SymmetricEigen::new(hermitian_part(&sample)).eigenvalues;
        let mut want: Vec<f64> = want.iter().copied().collect();
        let mut got: Vec<f64> = got.iter().copied().collect();
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let scale = want.last().unwrap().max(1e-12);
        for (w, g) in want.iter().zip(&got) {
            assert!((w - g).abs() <= 0.02 * scale, "eig {w} vs MC {g}");
        }
    }

    #[test]
    fn channel_generation_is_deterministic() {
        let scene = small_scene(2, 2);
        let cfg = ChannelConfig::default();
        let a = sample_comm_channels(&scene, &cfg, 99).unwrap();
        let b = sample_comm_channels(&scene, &cfg, 99).unwrap();
        for (ua, ub) in a.users.iter().zip(&b.users) {
            assert_eq!(ua.h_up, ub.h_up);
            assert_eq!(ua.psi, ub.psi);
        }
    }

    #[test]
    fn zero_leakage_channel_has_diagonal_depolarization() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let phi = user_depolarization(0.0, &mut rng);
        assert!(phi[(0, 1)].norm() < 1e-15);
        assert!(phi[(1, 0)].norm() < 1e-15);
        assert!((phi[(0, 0)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn channel_frobenius_moment_matches_analytic() {
        // E||H_up||_F^2 = 2 N_t sum_m E|beta_m|^2 after averaging the
        // rotation and the depolarization phases
        let scene = small_scene(3, 2);
        let cfg = ChannelConfig { k_users: 2, paths_per_user: 3, ..Default::default() };
        let trials = 10_000;
        let mut acc = 0.0;
        for seed in 0..trials {
            let set = sample_comm_channels(&scene, &cfg, seed).unwrap();
            acc += set.users[0].h_up.norm_squared();
        }
        let got = acc / trials as f64;
        let want = 2.0 * scene.nt as f64 * 2.0; // sum_m E|beta|^2 = 2
        assert!((got - want).abs() < 0.05 * want, "Frobenius moment {got} vs analytic {want}");
    }

    #[test]
    fn effective_channel_matches_dense_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let nt = 2;
        let h_up = random_cmat(&mut rng, 2, 2 * nt);
        let p_u = PolVector::from_direction(0.6, 0.8).unwrap();
        let p_t = PolBlockMatrix::alternating(nt).unwrap();
        let h = effective_user_channel(&h_up, &p_u, &p_t);

        // h^H = p_u^T H_up P_t, entrywise
        let pu = RVec::from_vec(vec![p_u.h(), p_u.v()]);
        for j in 0..nt {
            let mut want = Cx::new(0.0, 0.0);
            for a in 0..2 {
                for b in 0..2 * nt {
                    want +=
                        Cx::new(pu[a], 0.0) * h_up[(a, b)] * Cx::new(p_t.stacked()[(b, j)], 0.0);
                }
            }
            assert!((h[j].conj() - want).norm() < 1e-12);
        }

        // row selection: a channel with a single nonzero entry picks the
        // matching polarization row
        let mut hsel = CMat::zeros(2, 2 * nt);
        hsel[(0, 1)] = Cx::new(2.0, -1.0);
        let h = effective_user_channel(&hsel, &PolVector::horizontal(), &p_t);
        // block 0 is vertical in the alternating pattern: row 1 of column 0
        assert!((h[0].conj() - hsel[(0, 1)] * Cx::new(p_t.stacked()[(1, 0)], 0.0)).norm() < 1e-14);
    }

    #[test]
    fn vec_identity_for_user_channel() {
        // h~^H P_t f = (f^T ⊗ h~^H) vec(P_t)
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..10 {
            let nt = 3;
            let h_up = random_cmat(&mut rng, 2, 2 * nt);
            let p_u = PolVector::from_direction(1.0, -2.0).unwrap();
            let p_t = PolBlockMatrix::alternating(nt).unwrap();
            let f = random_cmat(&mut rng, nt, 1);

            let h_tilde = user_pre_channel(&h_up, &p_u);
            let lhs = (h_tilde.adjoint() * p_t.stacked_c() * &f)[(0, 0)];

            let vec_pt = vec_mat(&p_t.stacked_c());
            let kron = f.transpose().kronecker(&h_tilde.adjoint());
            let rhs = (kron * vec_pt)[(0, 0)];
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }
}
