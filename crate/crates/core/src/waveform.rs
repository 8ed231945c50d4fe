//! SDP waveform designs under fixed polarization.
//!
//! Two rank-relaxed covariance programs over the conic layer:
//!
//! * MSE minimization: the estimation error enters through a matrix-inverse
//!   expression in `R_x`; an auxiliary PSD variable and a Schur complement
//!   turn it into an LMI, per-user SINR constraints become scalar rows in
//!   the `(R_x, R_k)` covariances, and the rank-one constraints on the user
//!   covariances are dropped.
//! * Target-SINR maximization: the linear-fractional objective is lifted to
//!   a single convex SDP by the Charnes-Cooper substitution
//!   `(R~, t) = (t R, 1 / denominator)`.
//!
//! Precoders are recovered from the optimal covariances column by column;
//! the recovery preserves every user's useful and interference power, so no
//! rank-one tightness assumption is needed.

use crate::conic::{
    ConicProblem, ConstraintCounts, MatVar, ScalarVar, SolveStatus, SolverOptions,
};
use crate::linalg::{eigvals_h, hermitian_part, trace_re, CMat, CVec, Cx};
use crate::metrics::{kron_weight_coeff, user_sinr, SensingView, Waveform};
use crate::{Error, Result};

/// Outcome of one waveform design solve.
#[derive(Debug, Clone)]
pub struct WaveformSolution {
    pub r_x: CMat,
    pub r_k: Vec<CMat>,
    /// Auxiliary PSD variable of the MSE problem.
    pub j_mat: Option<CMat>,
    /// Charnes-Cooper scale of the SINR problem.
    pub t: Option<f64>,
    /// Solver objective: `Tr(J)` for the MSE design, the achieved target
    /// SINR for the SINR design.
    pub objective: f64,
    pub status: SolveStatus,
    /// Recovered precoder (communication columns first).
    pub waveform: Waveform,
    /// Power left for sensing, `Tr(R_x) - sum_k Tr(R_k)`.
    pub sensing_power: f64,
}

/// A built MSE program with its variable handles, so callers can audit the
/// structure and extract the blocks after solving.
pub struct MseSdp {
    pub problem: ConicProblem,
    pub j_var: MatVar,
    pub rx_var: MatVar,
    pub rk_vars: Vec<MatVar>,
}

impl MseSdp {
    pub fn constraint_counts(&self) -> ConstraintCounts {
        self.problem.constraint_counts()
    }
}

/// Charnes-Cooper SINR program with variable handles.
pub struct SinrSdp {
    pub problem: ConicProblem,
    pub rx_var: MatVar,
    pub rk_vars: Vec<MatVar>,
    pub t_var: ScalarVar,
}

/// Build the Schur-complement MSE program for fixed polarization.
///
/// `channels` holds the effective user channels `h_k`; a nonpositive
/// `gamma_th` disables the user constraints.
pub fn build_mse_sdp(
    view: &SensingView,
    channels: &[CVec],
    gamma_th: f64,
    sigma_c2: f64,
    rho_t: f64,
) -> Result<MseSdp> {
    let n = view.n_sig;
    let dim_bar = view.abar0.nrows();
    for h in channels {
        if h.len() != n {
            return Err(Error::Shape(format!(
                "user channel has {} entries, expected {n}",
                h.len()
            )));
        }
    }
    let mut prob = ConicProblem::new();
    let j_var = prob.hermitian_var(4);
    let rx_var = prob.hermitian_var(n);
    let rk_vars: Vec<MatVar> = channels.iter().map(|_| prob.hermitian_var(n)).collect();

    // The matrix-fractional MSE term is carried in the whitened range basis
    // of omega_bar: with Y = U~^H (R_x^* ⊗ I) U~ (r x r, affine in R_x) and
    // D the whitened target map, the error is, up to constants,
    //   Tr(D^H Y (sigma^2 I + Y)^{-1} Y D) - Tr(D^H Y D),
    // so minimizing Tr(J) - Tr(D^H Y D) under the Schur complement
    //   [[J, D^H Y], [Y D, sigma^2 I + Y]] >= 0
    // reproduces the original program on an LMI of side 4 + rank(omega_bar)
    // with well-scaled data, independent of the array dimensions.
    let u = &view.whitened_basis;
    let d = &view.whitened_target;
    let r = u.ncols();
    let mut lmi = prob.lmi(4 + r);
    let mut constant = CMat::zeros(4 + r, 4 + r);
    constant
        .view_mut((4, 4), (r, r))
        .copy_from(&(CMat::identity(r, r) * Cx::new(view.sigma_s2, 0.0)));
    lmi.add_constant(&constant);
    lmi.add_var(&j_var, 0, 1.0);
    lmi.add_var_kron_sandwich(&rx_var, view.n_obs, u, None, 4, 4, 1.0);
    let dh = d.adjoint();
    lmi.add_var_kron_sandwich(&rx_var, view.n_obs, u, Some(&dh), 0, 4, 1.0);
    prob.push_lmi(lmi);

    // objective: Tr(J) - Tr(D^H Y D); the linear term is a Kronecker-
    // weighted trace of R_x with coefficient built from U~ D
    prob.obj_herm(&j_var, &CMat::identity(4, 4), 1.0);
    let ud = u * d;
    let q_lin = &ud * ud.adjoint();
    let c_lin = kron_weight_coeff(&q_lin, n, view.n_obs);
    prob.obj_herm(&rx_var, &c_lin, -1.0);
    let _ = dim_bar;

    // per-user rows: h^H (R_x - (1 + 1/gamma) R_k) h + sigma_c^2 <= 0
    if gamma_th > 0.0 {
        for (k, h) in channels.iter().enumerate() {
            let hh = h * h.adjoint();
            let row = prob
                .row()
                .herm(&rx_var, &hh, 1.0)
                .herm(&rk_vars[k], &hh, -(1.0 + 1.0 / gamma_th));
            prob.push_le(row, -sigma_c2);
        }
    }

    // R_x >= sum_k R_k and R_k >= 0
    let mut split = prob.lmi(n);
    split.add_var(&rx_var, 0, 1.0);
    for rk in &rk_vars {
        split.add_var(rk, 0, -1.0);
    }
    prob.push_lmi(split);
    for rk in &rk_vars {
        prob.require_psd(rk);
    }

    // transmit power budget
    let row = prob.row().herm(&rx_var, &CMat::identity(n, n), 1.0);
    prob.push_eq(row, rho_t);

    Ok(MseSdp { problem: prob, j_var, rx_var, rk_vars })
}

/// Build the Charnes-Cooper target-SINR program for fixed polarization.
pub fn build_sinr_sdp(
    view: &SensingView,
    channels: &[CVec],
    gamma_th: f64,
    sigma_c2: f64,
    rho_t: f64,
) -> Result<SinrSdp> {
    let n = view.n_sig;
    for h in channels {
        if h.len() != n {
            return Err(Error::Shape(format!(
                "user channel has {} entries, expected {n}",
                h.len()
            )));
        }
    }
    let mut prob = ConicProblem::new();
    let rx_var = prob.hermitian_var(n);
    let rk_vars: Vec<MatVar> = channels.iter().map(|_| prob.hermitian_var(n)).collect();
    let t_var = prob.scalar_var();

    // maximize Tr(Q0 (R~^* ⊗ I)) -> minimize the negated linear functional
    let c0 = kron_weight_coeff(&view.omega0_bar, n, view.n_obs);
    prob.obj_herm(&rx_var, &c0, -1.0);

    // denominator normalization: Tr(Qc (R~^* ⊗ I)) + t sigma_s^2 = 1
    let cc = kron_weight_coeff(&view.omegac_bar, n, view.n_obs);
    let row = prob.row().herm(&rx_var, &cc, 1.0).scalar(&t_var, view.sigma_s2);
    prob.push_eq(row, 1.0);

    // user rows with the scaled noise term t sigma_c^2
    if gamma_th > 0.0 {
        for (k, h) in channels.iter().enumerate() {
            let hh = h * h.adjoint();
            let row = prob
                .row()
                .herm(&rx_var, &hh, 1.0)
                .herm(&rk_vars[k], &hh, -(1.0 + 1.0 / gamma_th))
                .scalar(&t_var, sigma_c2);
            prob.push_le(row, 0.0);
        }
    }

    // R~ >= sum R~_k, R~_k >= 0
    let mut split = prob.lmi(n);
    split.add_var(&rx_var, 0, 1.0);
    for rk in &rk_vars {
        split.add_var(rk, 0, -1.0);
    }
    prob.push_lmi(split);
    for rk in &rk_vars {
        prob.require_psd(rk);
    }

    // scaled power budget Tr(R~) = t rho_t and t >= 0
    let row = prob.row().herm(&rx_var, &CMat::identity(n, n), 1.0).scalar(&t_var, -rho_t);
    prob.push_eq(row, 0.0);
    let row = prob.row().scalar(&t_var, -1.0);
    prob.push_le(row, 0.0);

    Ok(SinrSdp { problem: prob, rx_var, rk_vars, t_var })
}

/// Recover the precoder from optimal covariances: user columns
/// `f_k = R_k h_k / sqrt(h_k^H R_k h_k)`, sensing columns from an
/// eigen-factorization of the residual `R_x - sum_k f_k f_k^H`.
pub fn recover_precoders(
    r_x: &CMat,
    r_k: &[CMat],
    channels: &[CVec],
    rho_t: f64,
) -> Result<CMat> {
    let n = r_x.nrows();
    if r_k.len() != channels.len() {
        return Err(Error::Shape("covariance/channel count mismatch".into()));
    }
    let mut columns: Vec<CVec> = Vec::new();
    let mut residual = hermitian_part(r_x);
    for (rk, h) in r_k.iter().zip(channels) {
        let useful = (h.adjoint() * rk * h)[(0, 0)].re;
        if useful <= 1e-12 * rho_t.max(1.0) {
            return Err(Error::Recovery(format!(
                "user column has no useful power ({useful}); cannot normalize"
            )));
        }
        let f = rk * h * Cx::new(1.0 / useful.sqrt(), 0.0);
        residual -= &f * f.adjoint();
        columns.push(f);
    }
    let residual = hermitian_part(&residual);
    let evs = eigvals_h(&residual);
    let scale = evs[evs.len() - 1].max(rho_t);
    if evs[0] < -1e-7 * scale {
        return Err(Error::Recovery(format!(
            "residual sensing covariance is indefinite (min eigenvalue {})",
            evs[0]
        )));
    }
    // keep every direction that carries nonnegligible power
    let sym = nalgebra::SymmetricEigen::new(residual);
    for (i, &lam) in sym.eigenvalues.iter().enumerate() {
        if lam > 1e-8 * rho_t {
            columns.push(sym.eigenvectors.column(i) * Cx::new(lam.sqrt(), 0.0));
        }
    }
    let mut f = CMat::zeros(n, columns.len());
    for (j, col) in columns.iter().enumerate() {
        f.column_mut(j).copy_from(col);
    }
    Ok(f)
}

/// Solve the MSE waveform design and recover the precoder.
pub fn solve_mse_waveform(
    view: &SensingView,
    channels: &[CVec],
    gamma_th: f64,
    sigma_c2: f64,
    rho_t: f64,
    l: usize,
    opts: &SolverOptions,
) -> Result<WaveformSolution> {
    let sdp = build_mse_sdp(view, channels, gamma_th, sigma_c2, rho_t)?;
    let sol = sdp.problem.solve(opts)?;
    match sol.status {
        s if s.is_ok() => {}
        SolveStatus::Infeasible => {
            return Err(Error::Infeasible(
                "user SINR constraints cannot be met at this power budget".into(),
            ))
        }
        s => return Err(Error::Solver(format!("MSE waveform solve ended with {s:?}"))),
    }
    let r_x = hermitian_part(&sdp.problem.extract_mat(&sdp.rx_var, &sol));
    let r_k: Vec<CMat> = sdp
        .rk_vars
        .iter()
        .map(|v| hermitian_part(&sdp.problem.extract_mat(v, &sol)))
        .collect();
    let j_mat = hermitian_part(&sdp.problem.extract_mat(&sdp.j_var, &sol));
    let f = recover_precoders(&r_x, &r_k, channels, rho_t)?;
    let sensing_power = trace_re(&r_x) - r_k.iter().map(trace_re).sum::<f64>();
    let waveform = Waveform::new(f, channels.len(), l, rho_t)?;
    Ok(WaveformSolution {
        r_x,
        r_k,
        j_mat: Some(j_mat),
        t: None,
        objective: sol.obj,
        status: sol.status,
        waveform,
        sensing_power,
    })
}

/// Solve the Charnes-Cooper target-SINR design and recover the precoder.
pub fn solve_sinr_waveform(
    view: &SensingView,
    channels: &[CVec],
    gamma_th: f64,
    sigma_c2: f64,
    rho_t: f64,
    l: usize,
    opts: &SolverOptions,
) -> Result<WaveformSolution> {
    let sdp = build_sinr_sdp(view, channels, gamma_th, sigma_c2, rho_t)?;
    let sol = sdp.problem.solve(opts)?;
    match sol.status {
        s if s.is_ok() => {}
        SolveStatus::Infeasible => {
            return Err(Error::Infeasible(
                "user SINR constraints cannot be met at this power budget".into(),
            ))
        }
        s => return Err(Error::Solver(format!("SINR waveform solve ended with {s:?}"))),
    }
    let t = sdp.problem.extract_scalar(&sdp.t_var, &sol);
    if t <= 1e-12 {
        return Err(Error::Solver(format!(
            "Charnes-Cooper scale degenerated to {t}; cannot invert the transform"
        )));
    }
    let inv_t = Cx::new(1.0 / t, 0.0);
    let r_x = hermitian_part(&(sdp.problem.extract_mat(&sdp.rx_var, &sol) * inv_t));
    let r_k: Vec<CMat> = sdp
        .rk_vars
        .iter()
        .map(|v| hermitian_part(&(sdp.problem.extract_mat(v, &sol) * inv_t)))
        .collect();
    let f = recover_precoders(&r_x, &r_k, channels, rho_t)?;
    let sensing_power = trace_re(&r_x) - r_k.iter().map(trace_re).sum::<f64>();
    let waveform = Waveform::new(f, channels.len(), l, rho_t)?;
    Ok(WaveformSolution {
        r_x: r_x.clone(),
        r_k,
        j_mat: None,
        t: Some(t),
        // report the achieved ratio rather than the raw numerator
        objective: view.target_sinr(&r_x),
        status: sol.status,
        waveform,
        sensing_power,
    })
}

/// Residuals of an independent feasibility re-check of a solution; every
/// field should be small (constraint satisfaction up to solver tolerance).
#[derive(Debug, Clone)]
pub struct SolutionAudit {
    /// `|Tr(R_x) - rho_t| / rho_t`.
    pub power_residual: f64,
    /// Most negative eigenvalue of `R_x - sum R_k`, scaled by `||R_x||`.
    pub split_residual: f64,
    /// Worst user shortfall `max_k (gamma_th - gamma_k) / gamma_th` from
    /// the recovered precoder (negative when all users clear the bar).
    pub worst_user_shortfall: f64,
    /// Most negative eigenvalue of the Schur residual
    /// `J - Sigma0 Abar0^H W (Rbar + sigma^2 W)^{-1} W Abar0 Sigma0`
    /// (MSE designs only), scaled by `||J||`.
    pub schur_residual: Option<f64>,
}

pub fn audit_solution(
    view: &SensingView,
    sol: &WaveformSolution,
    channels: &[CVec],
    gamma_th: f64,
    sigma_c2: f64,
    rho_t: f64,
) -> SolutionAudit {
    let power_residual = (trace_re(&sol.r_x) - rho_t).abs() / rho_t;

    let mut split = sol.r_x.clone();
    for rk in &sol.r_k {
        split -= rk;
    }
    let evs = eigvals_h(&split);
    let split_residual = (-evs[0] / sol.r_x.norm().max(1e-300)).max(0.0);

    let worst_user_shortfall = if gamma_th > 0.0 && !channels.is_empty() {
        channels
            .iter()
            .enumerate()
            .map(|(k, h)| {
                let g = user_sinr(h, sol.waveform.precoder(), sigma_c2, k);
                (gamma_th - g) / gamma_th
            })
            .fold(f64::NEG_INFINITY, f64::max)
    } else {
        f64::NEG_INFINITY
    };

    let schur_residual = sol.j_mat.as_ref().map(|j| {
        // J >= D^H Y (sigma^2 I + Y)^{-1} Y D at the solution, the Schur
        // complement of the whitened LMI
        let u = &view.whitened_basis;
        let y = hermitian_part(&(u.adjoint() * view.rbar(&sol.r_x) * u));
        let yd = &y * &view.whitened_target;
        let mut inner = y.clone();
        for i in 0..inner.nrows() {
            inner[(i, i)] += Cx::new(view.sigma_s2, 0.0);
        }
        let sol_inner =
            crate::linalg::herm_solve(&inner, &yd).expect("Schur audit inner solve");
        let tail = yd.adjoint() * sol_inner;
        let resid = hermitian_part(&(j - tail));
        let evs = eigvals_h(&resid);
        (-evs[0] / j.norm().max(1e-300)).max(0.0)
    });

    SolutionAudit { power_residual, split_residual, worst_user_shortfall, schur_residual }
}
