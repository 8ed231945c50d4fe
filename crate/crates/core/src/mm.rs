//! Majorization-minimization polarization optimization.
//!
//! With the waveform fixed, both design objectives are nonconvex in the
//! per-antenna polarization gains because of the unit-norm constraint on
//! every 2-vector block. The strategy, for either objective:
//!
//! 1. majorize the objective by a function that is *linear* in the stacked
//!    polarization matrix `Pbar` (touching at the current iterate),
//! 2. rewrite that linear form as `p_t^T d` (or `p_r^T q`) through the
//!    vec/Kronecker lifting operators,
//! 3. replace each user-SINR constraint by an inner linear approximation
//!    `p_t^T u_k + r_k <= 0` that is tight at the iterate,
//! 4. solve the resulting "linear objective over per-block unit spheres"
//!    problem globally through its dual: a coordinate-ascent bisection over
//!    the `K` Lagrange multipliers with a closed-form primal,
//! 5. update the receive gains blockwise in closed form, the user combiners
//!    by a 2x2 generalized eigenvector, and (for the detection objective)
//!    the Dinkelbach level by the achieved target SINR.
//!
//! The outer alternation interleaves these polarization passes with the SDP
//! waveform designs of [`crate::waveform`].

use crate::linalg::{
    hermitian_part, herm_solve, max_eig_h, max_eig_sym, re_mat, symmetric_part, to_complex,
    trace_re, CMat, CVec, Cx, RMat, RVec,
};
use crate::metrics::{user_sinr, SensingView, Waveform};
use crate::polar::{
    build_lift_operators, pbar, pbar_r_wide, pbar_t_wide, LiftOperators, PolBlockMatrix,
    PolVector,
};
use crate::scene::{user_pre_channel, CommChannelSet, Scene};
#[cfg(test)]
use crate::scene::effective_user_channel;
use crate::waveform::{solve_mse_waveform, solve_sinr_waveform, WaveformSolution};
use crate::conic::SolverOptions;
use crate::{Error, Result};

/// Which polarization variables an experiment is allowed to touch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UpdateMask {
    pub tx: bool,
    pub rx: bool,
    pub user: bool,
}

impl UpdateMask {
    pub const STATIC: Self = Self { tx: false, rx: false, user: false };
    pub const TX_ONLY: Self = Self { tx: true, rx: false, user: false };
    pub const RX_ONLY: Self = Self { tx: false, rx: true, user: false };
    pub const TX_RX: Self = Self { tx: true, rx: true, user: true };

    pub fn any(&self) -> bool {
        self.tx || self.rx || self.user
    }
}

/// Stopping thresholds and iteration caps of the polarization loops.
#[derive(Debug, Clone)]
pub struct MmOptions {
    /// Relative dual-value tolerance of the multiplier search.
    pub eps1: f64,
    /// Infeasibility margin of the multiplier search.
    pub eps2: f64,
    /// Constraint/complementary-slackness tolerance at the search exit.
    pub eps3: f64,
    /// Relative objective tolerance of the polarization loop.
    pub eps4: f64,
    /// Iteration cap of the polarization loop.
    pub i_max: usize,
}

impl Default for MmOptions {
    fn default() -> Self {
        Self { eps1: 1e-5, eps2: 1e-6, eps3: 1e-6, eps4: 1e-5, i_max: 50 }
    }
}

/// Majorizer of the estimation objective at one polarization iterate.
///
/// The negated estimation gain `-Tr(B^H E^{-1} B)` (equal to the MSE up to
/// constants) is bounded above by `Tr(Pbar^T Lambda) + const`, tight at the
/// expansion point; `d` and `q` are its exact linear coefficients in the
/// transmit and receive gain vectors.
#[derive(Debug, Clone)]
pub struct MseMajorizerState {
    /// `E_i = Xbar^H Pbar^T Omega Pbar Xbar + sigma_s^2 I`.
    pub e_mat: CMat,
    /// `B_i = Xbar^H Pbar^T A_0 Sigma0`.
    pub b_mat: CMat,
    /// Real linear coefficient matrix of the majorizer.
    pub lambda: RMat,
    /// Largest eigenvalue of `Omega` used in the curvature completion.
    pub lambda_omega: f64,
    /// Linear coefficients over the transmit gains (length `2 N_t`).
    pub d: RVec,
    /// Linear coefficients over the receive gains (length `2 N_r`).
    pub q: RVec,
    /// `-Tr(B^H E^{-1} B)` at the expansion point.
    pub objective: f64,
    /// Constant aligning the surrogate with the objective at expansion.
    pub offset: f64,
}

/// Negated estimation gain at an arbitrary polarization (the quantity the
/// majorizer bounds); smaller is better and differs from the MSE by
/// scene-constant terms only.
pub fn mse_objective(
    x: &CMat,
    p_t: &PolBlockMatrix,
    p_r: &PolBlockMatrix,
    scene: &Scene,
) -> Result<f64> {
    let xbar = x.conjugate().kronecker(&CMat::identity(scene.nr, scene.nr));
    let pb = to_complex(&pbar(p_t, p_r));
    let omega_bar = hermitian_part(&(pb.transpose() * &scene.omega * &pb));
    let mut e = hermitian_part(&(xbar.adjoint() * omega_bar * &xbar));
    for i in 0..e.nrows() {
        e[(i, i)] += Cx::new(scene.sigma_s2, 0.0);
    }
    let b = xbar.adjoint() * pb.transpose() * &scene.a0 * &scene.target.sigma0;
    let einv_b = herm_solve(&e, &b)
        .ok_or_else(|| Error::Conditioning("estimation normal matrix is singular".into()))?;
    Ok(-(b.adjoint() * einv_b)[(0, 0)].re - {
        // trace over the remaining columns
        let mut acc = 0.0;
        let prod = b.adjoint() * herm_solve(&e, &b).unwrap();
        for i in 1..prod.nrows() {
            acc += prod[(i, i)].re;
        }
        acc
    })
}

/// Build the majorizer state at the iterate `(p_t, p_r)` for codeword
/// matrix `x`.
pub fn mse_majorizer(
    x: &CMat,
    p_t: &PolBlockMatrix,
    p_r: &PolBlockMatrix,
    scene: &Scene,
    ops: &LiftOperators,
) -> Result<MseMajorizerState> {
    let nr = scene.nr;
    let xbar = x.conjugate().kronecker(&CMat::identity(nr, nr));
    let pb = to_complex(&pbar(p_t, p_r));
    let omega_bar = hermitian_part(&(pb.transpose() * &scene.omega * &pb));
    let mut e_mat = hermitian_part(&(xbar.adjoint() * omega_bar * &xbar));
    for i in 0..e_mat.nrows() {
        e_mat[(i, i)] += Cx::new(scene.sigma_s2, 0.0);
    }
    let a0s = &scene.a0 * &scene.target.sigma0;
    let b_mat = xbar.adjoint() * pb.transpose() * &a0s;
    let einv_b = herm_solve(&e_mat, &b_mat)
        .ok_or_else(|| Error::Conditioning("majorizer normal matrix is singular".into()))?;
    let objective = -(b_mat.adjoint() * &einv_b).trace().re;

    let lambda_omega = max_eig_h(&scene.omega);
    // D_i = Pbar Xbar E^{-1} B and W = B^H E^{-1} Xbar^H
    let d_i = &pb * (&xbar * &einv_b);
    let w = einv_b.adjoint() * xbar.adjoint();
    let shifted = &scene.omega * &d_i - &d_i * Cx::new(lambda_omega, 0.0);
    let lambda_c = (shifted - &a0s) * &w;
    let lambda = re_mat(&lambda_c) * 2.0;

    let d = ops.pt_gradient(&(pbar_r_wide(p_r, scene.nt).transpose() * &lambda));
    let q = ops.pr_gradient(&(pbar_t_wide(p_t, scene.nr).transpose() * &lambda));

    // surrogate(P) = Tr(Pbar(P)^T Lambda) + offset, touching at the iterate
    let at_iterate = (pbar(p_t, p_r).transpose() * &lambda).trace();
    let offset = objective - at_iterate;

    Ok(MseMajorizerState { e_mat, b_mat, lambda, lambda_omega, d, q, objective, offset })
}

impl MseMajorizerState {
    /// Surrogate value at an arbitrary polarization.
    pub fn surrogate(&self, p_t: &PolBlockMatrix, p_r: &PolBlockMatrix) -> f64 {
        (pbar(p_t, p_r).transpose() * &self.lambda).trace() + self.offset
    }
}

/// Surrogate state of the detection objective at one iterate: the
/// Dinkelbach level, the shifted covariance `Xi = nu (Omega_c +
/// (sigma^2/N_r) I) - Omega_0` and the linear coefficients of its convex
/// upper bound.
#[derive(Debug, Clone)]
pub struct SinrSurrogateState {
    pub nu: f64,
    pub xi: CMat,
    pub lambda_xi: f64,
    /// Linear coefficients over the transmit gains (already includes the
    /// factor 2 of the expansion).
    pub g: RVec,
    /// Linear coefficients over the receive gains.
    pub v: RVec,
    /// Real coefficient matrix `Re((Xi - lambda I) Pbar_i Rbar_x)`.
    pub lambda_mat: RMat,
    /// Constant part of the surrogate.
    pub offset: f64,
}

/// The exact trace objective the surrogate majorizes,
/// `Tr(Pbar^T Xi Pbar Rbar_x)`.
pub fn sinr_trace_objective(
    xi: &CMat,
    p_t: &PolBlockMatrix,
    p_r: &PolBlockMatrix,
    r_x: &CMat,
    nr: usize,
) -> f64 {
    let pb = to_complex(&pbar(p_t, p_r));
    let rbar = r_x.conjugate().kronecker(&CMat::identity(nr, nr));
    (pb.transpose() * xi * &pb * &rbar).trace().re
}

/// Build the detection-objective surrogate at iterate `(p_t, p_r)`.
pub fn sinr_surrogate(
    nu: f64,
    p_t: &PolBlockMatrix,
    p_r: &PolBlockMatrix,
    r_x: &CMat,
    scene: &Scene,
    ops: &LiftOperators,
) -> SinrSurrogateState {
    let dim = scene.response_dim();
    let mut xi = &scene.omega_c * Cx::new(nu, 0.0) - &scene.omega0;
    let ridge = nu * scene.sigma_s2 / scene.nr as f64;
    for i in 0..dim {
        xi[(i, i)] += Cx::new(ridge, 0.0);
    }
    let xi = hermitian_part(&xi);
    let lambda_xi = max_eig_h(&xi);

    let pb_i = to_complex(&pbar(p_t, p_r));
    let rbar = r_x.conjugate().kronecker(&CMat::identity(scene.nr, scene.nr));
    let shifted = {
        let mut s = xi.clone();
        for i in 0..dim {
            s[(i, i)] -= Cx::new(lambda_xi, 0.0);
        }
        s
    };
    let lambda_mat = re_mat(&(shifted * &pb_i * &rbar));

    let g = ops.pt_gradient(&(pbar_r_wide(p_r, scene.nt).transpose() * &lambda_mat)) * 2.0;
    let v = ops.pr_gradient(&(pbar_t_wide(p_t, scene.nr).transpose() * &lambda_mat)) * 2.0;

    // constants of the expansion: Tr(Pbar_i^T (lambda I - Xi) Pbar_i Rbar)
    // plus the curvature completion lambda * N_r * Tr(R_x)
    let minus_shifted = -&lambda_mat;
    let const_term = (pbar(p_t, p_r).transpose() * minus_shifted).trace();
    let offset = const_term + lambda_xi * scene.nr as f64 * trace_re(r_x);

    SinrSurrogateState { nu, xi, lambda_xi, g, v, lambda_mat, offset }
}

impl SinrSurrogateState {
    /// Surrogate value at an arbitrary polarization:
    /// `2 Tr(Pbar^T Lambda) + offset`.
    pub fn surrogate(&self, p_t: &PolBlockMatrix, p_r: &PolBlockMatrix) -> f64 {
        2.0 * (pbar(p_t, p_r).transpose() * &self.lambda_mat).trace() + self.offset
    }
}

/// Quadratic form of one user's SINR constraint over the transmit gains:
/// `p_t^T PsiBar_k p_t + gamma_th sigma_c^2 <= 0` is equivalent to
/// `gamma_k >= gamma_th`. Interference counts every other precoder column,
/// communication and sensing alike, matching the SINR definition.
#[derive(Debug, Clone)]
pub struct UserConstraintQuadratic {
    pub psi_bar: RMat,
    pub gamma_th: f64,
    pub sigma_c2: f64,
}

/// Linearized (inner) form `p_t^T u + r <= 0` of a user constraint.
#[derive(Debug, Clone)]
pub struct UserConstraintLinear {
    pub u: RVec,
    pub r: f64,
}

/// Build the quadratic constraint forms for all users at the current user
/// combiners.
pub fn user_constraint_quadratic(
    channels: &CommChannelSet,
    f: &CMat,
    gamma_th: f64,
) -> Vec<UserConstraintQuadratic> {
    let nt = f.nrows();
    channels
        .users
        .iter()
        .enumerate()
        .map(|(k, user)| {
            let h_tilde = user_pre_channel(&user.h_up, &user.p_u); // 2 N_t
            // G = gamma sum_{j != k} f_j^* f_j^T - f_k^* f_k^T
            let mut gmat = CMat::zeros(nt, nt);
            for j in 0..f.ncols() {
                let fj = f.column(j).conjugate();
                let outer = &fj * fj.adjoint().conjugate(); // f^* f^T
                if j == k {
                    gmat -= &outer;
                } else {
                    gmat += outer * Cx::new(gamma_th, 0.0);
                }
            }
            let hh = &h_tilde * h_tilde.adjoint(); // 2N_t x 2N_t
            // PsiBar[2a+alpha, 2b+beta] = G[a,b] * HH[2a+alpha, 2b+beta]
            let mut psi = RMat::zeros(2 * nt, 2 * nt);
            for a in 0..nt {
                for b in 0..nt {
                    for alpha in 0..2 {
                        for beta in 0..2 {
                            let z = gmat[(a, b)] * hh[(2 * a + alpha, 2 * b + beta)];
                            psi[(2 * a + alpha, 2 * b + beta)] = z.re;
                        }
                    }
                }
            }
            UserConstraintQuadratic {
                psi_bar: symmetric_part(&psi),
                gamma_th,
                sigma_c2: channels.sigma_c2,
            }
        })
        .collect()
}

impl UserConstraintQuadratic {
    /// Quadratic constraint value at `p_t` (feasible when `<= 0`).
    pub fn value(&self, p_t: &RVec) -> f64 {
        (p_t.transpose() * &self.psi_bar * p_t)[(0, 0)] + self.gamma_th * self.sigma_c2
    }
}

/// Inner linearization of the quadratic constraint at the iterate `p_t_i`.
pub fn linearize_user_constraint(
    quad: &UserConstraintQuadratic,
    p_t_i: &RVec,
) -> UserConstraintLinear {
    let n_t = p_t_i.len() / 2;
    let lam = max_eig_sym(&quad.psi_bar);
    let shifted = &quad.psi_bar - RMat::identity(2 * n_t, 2 * n_t) * lam;
    let u = &shifted * p_t_i * 2.0;
    let r = quad.gamma_th * quad.sigma_c2 + lam * n_t as f64
        - (p_t_i.transpose() * shifted * p_t_i)[(0, 0)];
    UserConstraintLinear { u, r }
}

/// How the multiplier search ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStatus {
    /// KKT conditions met at the returned point.
    Converged,
    /// Some constraint cannot gain slack even as its multiplier grows; the
    /// search stops and the caller keeps its previous (feasible) iterate.
    Stalled,
}

/// Result of the multiplier search: the multipliers, the constraint values
/// at the recovered point, and the recovered transmit gains.
#[derive(Debug, Clone)]
pub struct KBisectionOutcome {
    pub mu: RVec,
    pub g_values: RVec,
    pub p_t: PolBlockMatrix,
    pub dual_value: f64,
    pub status: SearchStatus,
}

fn closed_form_pt(
    d: &RVec,
    constraints: &[UserConstraintLinear],
    mu: &RVec,
    prev: &PolBlockMatrix,
) -> PolBlockMatrix {
    let n = prev.n();
    let mut vectors = Vec::with_capacity(n);
    for b in 0..n {
        let mut dir = [d[2 * b], d[2 * b + 1]];
        for (k, c) in constraints.iter().enumerate() {
            dir[0] += mu[k] * c.u[2 * b];
            dir[1] += mu[k] * c.u[2 * b + 1];
        }
        let norm = (dir[0] * dir[0] + dir[1] * dir[1]).sqrt();
        if norm < 1e-12 {
            // direction vanished: the inner problem is indifferent, keep
            // the previous block
            vectors.push(prev.vectors()[b]);
        } else {
            vectors.push(PolVector::from_direction(-dir[0] / norm, -dir[1] / norm).unwrap());
        }
    }
    PolBlockMatrix::new(vectors).unwrap()
}

fn constraint_value(c: &UserConstraintLinear, p: &PolBlockMatrix) -> f64 {
    p.concat().dot(&c.u) + c.r
}

fn dual_value(
    d: &RVec,
    constraints: &[UserConstraintLinear],
    mu: &RVec,
    n_blocks: usize,
) -> f64 {
    let mut acc = 0.0;
    for b in 0..n_blocks {
        let mut dir = [d[2 * b], d[2 * b + 1]];
        for (k, c) in constraints.iter().enumerate() {
            dir[0] += mu[k] * c.u[2 * b];
            dir[1] += mu[k] * c.u[2 * b + 1];
        }
        acc -= (dir[0] * dir[0] + dir[1] * dir[1]).sqrt();
    }
    for (k, c) in constraints.iter().enumerate() {
        acc += mu[k] * c.r;
    }
    acc
}

/// Coordinate-ascent bisection over the Lagrange multipliers of the
/// linearized transmit-gain problem. Returns the closed-form primal point;
/// `feasible = false` flags a constraint that stays violated even as its
/// multiplier grows without bound.
pub fn k_bisection(
    d: &RVec,
    constraints: &[UserConstraintLinear],
    prev: &PolBlockMatrix,
    opts: &MmOptions,
) -> KBisectionOutcome {
    let n_blocks = prev.n();
    let k = constraints.len();
    let mut mu = RVec::zeros(k);

    if k == 0 {
        let p_t = closed_form_pt(d, constraints, &mu, prev);
        let dual = dual_value(d, constraints, &mu, n_blocks);
        return KBisectionOutcome {
            mu,
            g_values: RVec::zeros(0),
            p_t,
            dual_value: dual,
            status: SearchStatus::Converged,
        };
    }

    let g_at = |mu: &RVec| -> RVec {
        let p = closed_form_pt(d, constraints, mu, prev);
        RVec::from_fn(k, |i, _| constraint_value(&constraints[i], &p))
    };

    let mut gbar_prev = f64::INFINITY;
    let mut status = SearchStatus::Converged;
    const MAX_SWEEPS: usize = 200;
    'outer: for _sweep in 0..MAX_SWEEPS {
        for kk in 0..k {
            // constraint satisfied without enforcement?
            mu[kk] = 0.0;
            let g0 = g_at(&mu)[kk];
            if g0 <= 0.0 {
                continue;
            }
            // the limit of g_k as mu_k grows alone is r_k - sum_n ||u_{k,n}||;
            // when that limit cannot clear the margin the bisection has no
            // bracket, so the search stops (tight constraints at the current
            // iterate land here, and the caller keeps that iterate)
            let mut lim = constraints[kk].r;
            for b in 0..n_blocks {
                let u = [constraints[kk].u[2 * b], constraints[kk].u[2 * b + 1]];
                lim -= (u[0] * u[0] + u[1] * u[1]).sqrt();
            }
            if lim > -opts.eps2 {
                status = SearchStatus::Stalled;
                break 'outer;
            }
            // bracket by doubling, then bisect
            let mut hi = 1.0;
            let mut lo = 0.0;
            loop {
                mu[kk] = hi;
                if g_at(&mu)[kk] <= 0.0 {
                    break;
                }
                lo = hi;
                hi *= 2.0;
                if hi > 1e12 {
                    status = SearchStatus::Stalled;
                    break 'outer;
                }
            }
            // drive g_k into (-tol, 0] with tol shrunk by the multiplier so
            // that complementary slackness |mu_k g_k| stays below eps3
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                mu[kk] = mid;
                let g = g_at(&mu)[kk];
                if g > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                    let tol = opts.eps3 / mu[kk].max(1.0);
                    if -g < tol {
                        break;
                    }
                }
            }
            mu[kk] = hi;
        }
        let gvals = g_at(&mu);
        let gbar = dual_value(d, constraints, &mu, n_blocks)
            + (0..k).map(|i| mu[i] * gvals[i]).sum::<f64>();
        if gbar_prev.is_finite()
            && (gbar - gbar_prev).abs() <= opts.eps1 * gbar_prev.abs().max(1e-12)
        {
            break;
        }
        gbar_prev = gbar;
    }

    let p_t = closed_form_pt(d, constraints, &mu, prev);
    let g_values = RVec::from_fn(k, |i, _| constraint_value(&constraints[i], &p_t));
    let dual = dual_value(d, constraints, &mu, n_blocks);
    KBisectionOutcome { mu, g_values, p_t, dual_value: dual, status }
}

/// Blockwise closed-form receive-gain update: each 2-vector minimizes its
/// independent linear term, `p_{r,n} = -q_n / ||q_n||` (previous block kept
/// when the coefficient vanishes).
pub fn update_pr(q: &RVec, prev: &PolBlockMatrix) -> PolBlockMatrix {
    let n = prev.n();
    assert_eq!(q.len(), 2 * n);
    let mut vectors = Vec::with_capacity(n);
    for b in 0..n {
        let dir = [q[2 * b], q[2 * b + 1]];
        let norm = (dir[0] * dir[0] + dir[1] * dir[1]).sqrt();
        if norm < 1e-12 {
            vectors.push(prev.vectors()[b]);
        } else {
            vectors.push(PolVector::from_direction(-dir[0] / norm, -dir[1] / norm).unwrap());
        }
    }
    PolBlockMatrix::new(vectors).unwrap()
}

/// Optimal real user combiner: the top generalized eigenvector of the 2x2
/// pair `(Re Huseful, Re Hinterf)`; for real combiners the real parts carry
/// the exact quadratic forms.
pub fn update_pu(
    h_up: &CMat,
    p_t: &PolBlockMatrix,
    f: &CMat,
    k: usize,
    sigma_c2: f64,
) -> PolVector {
    let hp = h_up * p_t.stacked_c(); // 2 x N_t
    let fk = f.column(k);
    let useful_vec = &hp * fk; // 2-vector
    let useful = &useful_vec * useful_vec.adjoint();
    let mut interf = CMat::identity(2, 2) * Cx::new(sigma_c2, 0.0);
    for j in 0..f.ncols() {
        if j == k {
            continue;
        }
        let v = &hp * f.column(j);
        interf += &v * v.adjoint();
    }
    let a = symmetric_part(&re_mat(&useful));
    let b = symmetric_part(&re_mat(&interf));

    // whiten with the Cholesky factor of the PD denominator
    let l11 = b[(0, 0)].sqrt();
    let l21 = b[(1, 0)] / l11;
    let l22 = (b[(1, 1)] - l21 * l21).max(1e-300).sqrt();
    // C = L^{-1} A L^{-T}
    let inv = RMat::from_row_slice(2, 2, &[1.0 / l11, 0.0, -l21 / (l11 * l22), 1.0 / l22]);
    let c = symmetric_part(&(&inv * a * inv.transpose()));
    let eig = nalgebra::SymmetricEigen::new(c);
    let top = if eig.eigenvalues[0] >= eig.eigenvalues[1] { 0 } else { 1 };
    let w = eig.eigenvectors.column(top);
    let p = inv.transpose() * w;
    PolVector::from_direction(p[0], p[1]).unwrap_or(PolVector::horizontal())
}

/// Dinkelbach level update: the target SINR achieved by the current
/// iterate.
pub fn update_nu(view: &SensingView, r_x: &CMat) -> f64 {
    view.target_sinr(r_x)
}

/// Which objective the polarization loop descends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Minimize the depolarization-estimate MSE.
    Mse,
    /// Maximize the target SINR (Dinkelbach + MM).
    Sinr,
}

/// Outcome of one polarization optimization pass.
#[derive(Debug, Clone)]
pub struct PolarizationOutcome {
    pub p_t: PolBlockMatrix,
    pub p_r: PolBlockMatrix,
    pub p_u: Vec<PolVector>,
    /// Per-iteration true objective (MSE, or target SINR).
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub feasible: bool,
}

/// Alternating MM updates of `(p_t, p_r, p_u)` for a fixed waveform.
///
/// Iterations preserve user-SINR feasibility (the transmit step uses the
/// inner approximation, the user step can only raise each user's SINR) and
/// are monotone in the chosen objective.
#[allow(clippy::too_many_arguments)]
pub fn optimize_polarization(
    objective: Objective,
    scene: &Scene,
    channels: &mut CommChannelSet,
    waveform: &Waveform,
    gamma_th: f64,
    p_t0: &PolBlockMatrix,
    p_r0: &PolBlockMatrix,
    mask: UpdateMask,
    opts: &MmOptions,
) -> Result<PolarizationOutcome> {
    let ops = build_lift_operators(scene.nt, scene.nr)?;
    let mut p_t = p_t0.clone();
    let mut p_r = p_r0.clone();
    let x = waveform.codeword_matrix();
    let r_x = waveform.r_x();
    let f = waveform.precoder();

    let eval = |p_t: &PolBlockMatrix, p_r: &PolBlockMatrix| -> f64 {
        let view = SensingView::reconfigurable(scene, p_t, p_r);
        match objective {
            Objective::Mse => view
                .mse_inversion_lemma(&r_x)
                .unwrap_or(f64::INFINITY),
            Objective::Sinr => view.target_sinr(&r_x),
        }
    };

    let mut trace = vec![eval(&p_t, &p_r)];
    let mut iterations = 0;

    for _ in 0..opts.i_max {
        iterations += 1;
        // linear majorizer coefficients at the current iterate
        let (d_vec, lambda_for_q): (RVec, RMat) = match objective {
            Objective::Mse => {
                let st = mse_majorizer(&x, &p_t, &p_r, scene, &ops)?;
                (st.d, st.lambda)
            }
            Objective::Sinr => {
                let view = SensingView::reconfigurable(scene, &p_t, &p_r);
                let nu = update_nu(&view, &r_x);
                let st = sinr_surrogate(nu, &p_t, &p_r, &r_x, scene, &ops);
                (st.g, st.lambda_mat * 2.0)
            }
        };

        if mask.tx {
            let lins: Vec<UserConstraintLinear> = if gamma_th > 0.0 && channels.k() > 0 {
                let quads = user_constraint_quadratic(channels, f, gamma_th);
                let pt_now = p_t.concat();
                quads.iter().map(|qd| linearize_user_constraint(qd, &pt_now)).collect()
            } else {
                Vec::new()
            };
            let out = k_bisection(&d_vec, &lins, &p_t, opts);
            if out.status == SearchStatus::Converged {
                p_t = out.p_t;
            }
            // a stalled search keeps the previous feasible transmit gains;
            // the receive/user stages still make progress
        }

        if mask.rx {
            // re-lift against the updated transmit gains so the same
            // surrogate keeps decreasing
            let q = ops.pr_gradient(&(pbar_t_wide(&p_t, scene.nr).transpose() * &lambda_for_q));
            p_r = update_pr(&q, &p_r);
        }

        if mask.user {
            for k in 0..channels.k() {
                let user = &channels.users[k];
                let p_u = update_pu(&user.h_up, &p_t, f, k, channels.sigma_c2);
                channels.users[k].p_u = p_u;
            }
        }

        let now = eval(&p_t, &p_r);
        let prev = *trace.last().unwrap();
        trace.push(now);
        let rel = (now - prev).abs() / prev.abs().max(1e-15);
        if rel <= opts.eps4 {
            break;
        }
    }

    // feasibility of the final iterate is checked directly on the true
    // per-user SINRs rather than inferred from the search path
    let feasible = if gamma_th > 0.0 {
        channels
            .effective(&p_t)
            .iter()
            .enumerate()
            .all(|(k, h)| user_sinr(h, f, channels.sigma_c2, k) >= gamma_th * (1.0 - 1e-6))
    } else {
        true
    };

    Ok(PolarizationOutcome {
        p_t,
        p_r,
        p_u: channels.users.iter().map(|u| u.p_u).collect(),
        trace,
        iterations,
        feasible,
    })
}

/// Stage label of an alternation trace entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Waveform,
    Polarization,
}

#[derive(Debug, Clone)]
pub struct TraceEntry {
    pub outer: usize,
    pub stage: Stage,
    /// True objective after the stage (MSE, or target SINR).
    pub objective: f64,
}

/// Full result of one joint waveform + polarization design run.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub trace: Vec<TraceEntry>,
    pub mse: f64,
    pub nmse_db: f64,
    pub target_sinr: f64,
    pub user_sinr: Vec<f64>,
    pub p_t: PolBlockMatrix,
    pub p_r: PolBlockMatrix,
    pub p_u: Vec<PolVector>,
    pub waveform: Waveform,
    pub outer_iters: usize,
    pub feasible: bool,
}

/// Options of the outer alternation.
#[derive(Debug, Clone)]
pub struct AlternationOptions {
    pub mm: MmOptions,
    pub solver: SolverOptions,
    pub outer_iters: usize,
    pub outer_tol: f64,
    /// Codeword length for recovered waveforms.
    pub l: usize,
}

impl Default for AlternationOptions {
    fn default() -> Self {
        Self {
            mm: MmOptions::default(),
            solver: SolverOptions::default(),
            outer_iters: 20,
            outer_tol: 1e-4,
            l: 16,
        }
    }
}

/// Alternate the SDP waveform stage and the MM polarization stage until the
/// objective settles. The mask selects which polarization variables move;
/// an all-false mask reduces to a single waveform solve at the initial
/// polarization.
#[allow(clippy::too_many_arguments)]
pub fn alternate_full(
    objective: Objective,
    scene: &Scene,
    channels: &mut CommChannelSet,
    gamma_th: f64,
    rho_t: f64,
    p_t0: &PolBlockMatrix,
    p_r0: &PolBlockMatrix,
    mask: UpdateMask,
    opts: &AlternationOptions,
) -> Result<SolveReport> {
    let mut p_t = p_t0.clone();
    let mut p_r = p_r0.clone();
    let mut trace = Vec::new();
    let mut last_obj = f64::NAN;
    let mut outer_done = 0;
    let mut feasible = true;
    let mut final_sol: Option<WaveformSolution> = None;

    for outer in 1..=opts.outer_iters {
        outer_done = outer;
        let view = SensingView::reconfigurable(scene, &p_t, &p_r);
        let h: Vec<CVec> = channels.effective(&p_t);
        let sol = match objective {
            Objective::Mse => solve_mse_waveform(
                &view,
                &h,
                gamma_th,
                channels.sigma_c2,
                rho_t,
                opts.l,
                &opts.solver,
            )?,
            Objective::Sinr => solve_sinr_waveform(
                &view,
                &h,
                gamma_th,
                channels.sigma_c2,
                rho_t,
                opts.l,
                &opts.solver,
            )?,
        };
        let obj_now = match objective {
            Objective::Mse => view.mse_inversion_lemma(&sol.r_x)?,
            Objective::Sinr => view.target_sinr(&sol.r_x),
        };
        trace.push(TraceEntry { outer, stage: Stage::Waveform, objective: obj_now });

        let mut obj_after = obj_now;
        if mask.any() {
            let pol = optimize_polarization(
                objective,
                scene,
                channels,
                &sol.waveform,
                gamma_th,
                &p_t,
                &p_r,
                mask,
                &opts.mm,
            )?;
            feasible &= pol.feasible;
            p_t = pol.p_t;
            p_r = pol.p_r;
            obj_after = *pol.trace.last().unwrap();
            trace.push(TraceEntry { outer, stage: Stage::Polarization, objective: obj_after });
        }

        final_sol = Some(sol);
        if mask.any() {
            if last_obj.is_finite() {
                let rel = (obj_after - last_obj).abs() / last_obj.abs().max(1e-15);
                if rel < opts.outer_tol {
                    break;
                }
            }
            last_obj = obj_after;
        } else {
            break;
        }
    }

    let sol = final_sol.expect("at least one waveform stage ran");
    let view = SensingView::reconfigurable(scene, &p_t, &p_r);
    let mse = view.mse_inversion_lemma(&sol.r_x)?;
    let target_sinr = view.target_sinr(&sol.r_x);
    let h: Vec<CVec> = channels.effective(&p_t);
    let user_sinr: Vec<f64> = h
        .iter()
        .enumerate()
        .map(|(k, hk)| user_sinr(hk, sol.waveform.precoder(), channels.sigma_c2, k))
        .collect();
    let nmse_db = crate::metrics::nmse_db(mse, &scene.target.sigma0);
    Ok(SolveReport {
        trace,
        mse,
        nmse_db,
        target_sinr,
        user_sinr,
        p_t,
        p_r,
        p_u: channels.users.iter().map(|u| u.p_u).collect(),
        waveform: sol.waveform,
        outer_iters: outer_done,
        feasible,
    })
}
