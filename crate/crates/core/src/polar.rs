//! Polarization-aware array algebra.
//!
//! Models single-port polarization-reconfigurable arrays: each antenna feeds
//! two orthogonally polarized elements through one RF chain, combined with a
//! real unit-norm gain pair `p = [p_H, p_V]`. The module provides the antenna
//! XPD matrix, ULA steering vectors, net array responses, the block-diagonal
//! polarization matrices and the vec/Kronecker/commutation lifting operators
//! used by the polarization optimizers.

use crate::linalg::{to_complex, vec_mat_real, CMat, CVec, Cx, RMat, RVec};
use crate::{Error, Result};

/// Antenna cross-polarization discrimination matrix.
///
/// `V = (1+chi)^{-1/2} [[1, sqrt(chi)], [sqrt(chi), 1]]`. `chi = 0` gives
/// perfect isolation between co- and cross-polarization; `chi = 1` gives a
/// rank-one matrix (unpolarized antennas).
#[derive(Debug, Clone)]
pub struct XpdMatrix {
    chi: f64,
    v: RMat,
}

impl XpdMatrix {
    pub fn new(chi: f64) -> Result<Self> {
        if !chi.is_finite() || !(0.0..=1.0).contains(&chi) {
            return Err(Error::Domain(format!(
                "XPD leakage must lie in [0,1], got {chi}"
            )));
        }
        let s = 1.0 / (1.0 + chi).sqrt();
        let r = chi.sqrt() * s;
        let v = RMat::from_row_slice(2, 2, &[s, r, r, s]);
        Ok(Self { chi, v })
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    /// The 2x2 real symmetric leakage matrix.
    pub fn matrix(&self) -> &RMat {
        &self.v
    }

    pub fn matrix_c(&self) -> CMat {
        to_complex(&self.v)
    }

    /// Eigenvalues `(1 ± sqrt(chi)) / sqrt(1+chi)`, both nonnegative.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let d = (1.0 + self.chi).sqrt();
        ((1.0 - self.chi.sqrt()) / d, (1.0 + self.chi.sqrt()) / d)
    }
}

/// Tolerated deviation from unit norm before construction rejects the input.
/// Iterative updates accumulate rounding, so near-unit vectors are
/// renormalized instead of rejected.
const UNIT_NORM_TOL: f64 = 1e-9;

/// Unit-norm real polarization gain pair `[p_H, p_V]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolVector {
    h: f64,
    v: f64,
}

impl PolVector {
    /// Construct from components that are already unit norm up to rounding.
    pub fn new(h: f64, v: f64) -> Result<Self> {
        let norm = (h * h + v * v).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::Domain(format!(
                "polarization vector norm {norm} is not within {UNIT_NORM_TOL} of 1"
            )));
        }
        Ok(Self { h: h / norm, v: v / norm })
    }

    /// Normalize an arbitrary nonzero direction onto the unit circle.
    pub fn from_direction(h: f64, v: f64) -> Result<Self> {
        let norm = (h * h + v * v).sqrt();
        if !norm.is_finite() || norm < 1e-300 {
            return Err(Error::Domain("cannot normalize zero direction".into()));
        }
        Ok(Self { h: h / norm, v: v / norm })
    }

    pub fn horizontal() -> Self {
        Self { h: 1.0, v: 0.0 }
    }

    pub fn vertical() -> Self {
        Self { h: 0.0, v: 1.0 }
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn as_rvec(&self) -> RVec {
        RVec::from_vec(vec![self.h, self.v])
    }
}

/// Block-diagonal polarization matrix `P = blkdiag(p_1, ..., p_N)` of size
/// `2N x N` with `P^T P = I_N`.
#[derive(Debug, Clone)]
pub struct PolBlockMatrix {
    vectors: Vec<PolVector>,
    stacked: RMat,
}

impl PolBlockMatrix {
    pub fn new(vectors: Vec<PolVector>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::Domain("need at least one polarization vector".into()));
        }
        let n = vectors.len();
        let mut stacked = RMat::zeros(2 * n, n);
        for (k, p) in vectors.iter().enumerate() {
            stacked[(2 * k, k)] = p.h();
            stacked[(2 * k + 1, k)] = p.v();
        }
        Ok(Self { vectors, stacked })
    }

    /// Every antenna set to the same polarization.
    pub fn uniform(n: usize, p: PolVector) -> Result<Self> {
        Self::new(vec![p; n])
    }

    /// Alternating pattern: odd-indexed antennas (1-based) vertical, even
    /// horizontal, so the array samples both polarizations equally.
    pub fn alternating(n: usize) -> Result<Self> {
        Self::new(
            (0..n)
                .map(|k| if k % 2 == 0 { PolVector::vertical() } else { PolVector::horizontal() })
                .collect(),
        )
    }

    /// Rebuild from the concatenated gain vector `[p_1^T, ..., p_N^T]^T`.
    pub fn from_concat(p: &RVec) -> Result<Self> {
        if p.len() % 2 != 0 {
            return Err(Error::Shape(format!(
                "concatenated polarization vector has odd length {}",
                p.len()
            )));
        }
        let vectors = (0..p.len() / 2)
            .map(|k| PolVector::from_direction(p[2 * k], p[2 * k + 1]))
            .collect::<Result<Vec<_>>>()?;
        Self::new(vectors)
    }

    pub fn n(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[PolVector] {
        &self.vectors
    }

    /// The `2N x N` block-diagonal matrix.
    pub fn stacked(&self) -> &RMat {
        &self.stacked
    }

    pub fn stacked_c(&self) -> CMat {
        to_complex(&self.stacked)
    }

    /// Concatenated gain vector of length `2N`.
    pub fn concat(&self) -> RVec {
        let mut v = RVec::zeros(2 * self.n());
        for (k, p) in self.vectors.iter().enumerate() {
            v[2 * k] = p.h();
            v[2 * k + 1] = p.v();
        }
        v
    }
}

/// Steering vector of an `n`-element uniform linear array, phase-referenced
/// at element 1: `a_m = exp(j 2 pi spacing (m-1) sin(theta))`.
pub fn steering_ula(n: usize, theta: f64, spacing_wavelengths: f64) -> Result<CVec> {
    if n == 0 {
        return Err(Error::Domain("steering vector needs at least one element".into()));
    }
    let k = 2.0 * std::f64::consts::PI * spacing_wavelengths * theta.sin();
    Ok(CVec::from_fn(n, |m, _| Cx::from_polar(1.0, k * m as f64)))
}

/// Net array response of a polarization-reconfigurable array at one angle.
#[derive(Debug, Clone)]
pub struct NetArrayResponse {
    /// Plain steering vector `a(theta)`.
    pub steering: CVec,
    /// Stacked response `A(theta) = a(theta) ⊗ V` of size `2N x 2`.
    pub stacked: CMat,
    /// Net response `A_net = P^T A(theta)` of size `N x 2`; row `n` equals
    /// `a_n(theta) (p_n^T V)`.
    pub net: CMat,
}

/// Stacked per-element response `A(theta) = a(theta) ⊗ V`.
pub fn stacked_response(a: &CVec, xpd: &XpdMatrix) -> CMat {
    let av = CMat::from_column_slice(a.len(), 1, a.as_slice());
    av.kronecker(&xpd.matrix_c())
}

pub fn net_array_response(
    a: &CVec,
    p: &PolBlockMatrix,
    xpd: &XpdMatrix,
) -> Result<NetArrayResponse> {
    if a.len() != p.n() {
        return Err(Error::Shape(format!(
            "steering vector has {} elements but polarization matrix has {} blocks",
            a.len(),
            p.n()
        )));
    }
    let stacked = stacked_response(a, xpd);
    let net = p.stacked_c().transpose() * &stacked;
    Ok(NetArrayResponse { steering: a.clone(), stacked, net })
}

/// Commutation matrix `K_{m,n}` with `K vec(A) = vec(A^T)` for every
/// `m x n` matrix `A`.
pub fn commutation_matrix(m: usize, n: usize) -> RMat {
    let mut k = RMat::zeros(m * n, m * n);
    for c in 0..n {
        for r in 0..m {
            // entry (r, c) of A sits at c*m + r in vec(A) and at r*n + c in vec(A^T)
            k[(r * n + c, c * m + r)] = 1.0;
        }
    }
    k
}

/// Sparse binary matrix in which every row holds at most a single one.
/// Covers the selection and Kronecker-lifting operators, which are pure
/// gathers; dense materialization is only used for testing.
#[derive(Debug, Clone)]
pub struct BinaryLift {
    rows: usize,
    cols: usize,
    /// `row_map[i] = Some(j)` when entry `(i, j)` is one.
    row_map: Vec<Option<usize>>,
}

impl BinaryLift {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// `y = L x`.
    pub fn apply(&self, x: &RVec) -> RVec {
        assert_eq!(x.len(), self.cols);
        RVec::from_fn(self.rows, |i, _| self.row_map[i].map_or(0.0, |j| x[j]))
    }

    /// `y = L^T x` (gather-sum).
    pub fn apply_transpose(&self, x: &RVec) -> RVec {
        assert_eq!(x.len(), self.rows);
        let mut y = RVec::zeros(self.cols);
        for (i, m) in self.row_map.iter().enumerate() {
            if let Some(j) = m {
                y[*j] += x[i];
            }
        }
        y
    }

    pub fn to_dense(&self) -> RMat {
        let mut d = RMat::zeros(self.rows, self.cols);
        for (i, m) in self.row_map.iter().enumerate() {
            if let Some(j) = m {
                d[(i, *j)] = 1.0;
            }
        }
        d
    }
}

/// The vectorization-lifting operators connecting the stacked polarization
/// matrices to their concatenated gain vectors:
///
/// * `vec(P_t) = Theta_t p_t` and `vec(P_r) = Theta_r p_r`,
/// * `vec(P_t ⊗ I_{N_r}) = Ibar_t vec(P_t)`,
/// * `vec(I_{N_t} ⊗ P_r) = Ibar_r vec(P_r)`.
#[derive(Debug, Clone)]
pub struct LiftOperators {
    pub nt: usize,
    pub nr: usize,
    pub theta_t: BinaryLift,
    pub theta_r: BinaryLift,
    pub ibar_t: BinaryLift,
    pub ibar_r: BinaryLift,
    /// Commutation matrix `K_{N_r, 2N_t}` appearing in the closed-form lift.
    pub k_comm: RMat,
}

/// Selection operator with `vec(P) = Theta p` for a block-diagonal `2N x N`
/// polarization matrix.
fn build_theta(n: usize) -> BinaryLift {
    let rows = 2 * n * n;
    let mut row_map = vec![None; rows];
    for j1 in 0..n {
        for off in 0..2 {
            let i1 = 2 * j1 + off;
            row_map[j1 * 2 * n + i1] = Some(2 * j1 + off);
        }
    }
    BinaryLift { rows, cols: 2 * n, row_map }
}

/// Lift with `vec(P_t ⊗ I_{nr}) = L vec(P_t)` for `P_t` of size `2nt x nt`.
fn build_ibar_t(nt: usize, nr: usize) -> BinaryLift {
    let w_rows = 2 * nt * nr;
    let rows = w_rows * nt * nr;
    let mut row_map = vec![None; rows];
    for j1 in 0..nt {
        for j2 in 0..nr {
            for i1 in 0..2 * nt {
                let v = (j1 * nr + j2) * w_rows + (i1 * nr + j2);
                row_map[v] = Some(j1 * 2 * nt + i1);
            }
        }
    }
    BinaryLift { rows, cols: 2 * nt * nt, row_map }
}

/// Lift with `vec(I_{nt} ⊗ P_r) = L vec(P_r)` for `P_r` of size `2nr x nr`.
fn build_ibar_r(nt: usize, nr: usize) -> BinaryLift {
    let w_rows = nt * 2 * nr;
    let rows = w_rows * nt * nr;
    let mut row_map = vec![None; rows];
    for j1 in 0..nt {
        for j2 in 0..nr {
            for i2 in 0..2 * nr {
                let v = (j1 * nr + j2) * w_rows + (j1 * 2 * nr + i2);
                row_map[v] = Some(j2 * 2 * nr + i2);
            }
        }
    }
    BinaryLift { rows, cols: 2 * nr * nr, row_map }
}

pub fn build_lift_operators(nt: usize, nr: usize) -> Result<LiftOperators> {
    if nt == 0 || nr == 0 {
        return Err(Error::Domain("lift operators need nt, nr >= 1".into()));
    }
    Ok(LiftOperators {
        nt,
        nr,
        theta_t: build_theta(nt),
        theta_r: build_theta(nr),
        ibar_t: build_ibar_t(nt, nr),
        ibar_r: build_ibar_r(nt, nr),
        k_comm: commutation_matrix(nr, 2 * nt),
    })
}

impl LiftOperators {
    /// Gradient lift onto the transmit gains: `Theta_t^T Ibar_t^T vec(m)`
    /// for `m` of size `2 N_t N_r x N_t N_r` (for example `Pbar_r^T Lambda`).
    pub fn pt_gradient(&self, m: &RMat) -> RVec {
        assert_eq!(m.nrows(), 2 * self.nt * self.nr);
        assert_eq!(m.ncols(), self.nt * self.nr);
        self.theta_t.apply_transpose(&self.ibar_t.apply_transpose(&vec_mat_real(m)))
    }

    /// Gradient lift onto the receive gains: `Theta_r^T Ibar_r^T vec(m)`
    /// for `m` of size `2 N_t N_r x N_t N_r` (for example `Pbar_t^T Lambda`).
    pub fn pr_gradient(&self, m: &RMat) -> RVec {
        assert_eq!(m.nrows(), 2 * self.nt * self.nr);
        assert_eq!(m.ncols(), self.nt * self.nr);
        self.theta_r.apply_transpose(&self.ibar_r.apply_transpose(&vec_mat_real(m)))
    }
}

/// `Pbar = P_t ⊗ P_r`, the joint lift of both polarization matrices
/// (`4 N_t N_r x N_t N_r`, orthonormal columns).
pub fn pbar(pt: &PolBlockMatrix, pr: &PolBlockMatrix) -> RMat {
    pt.stacked().kronecker(pr.stacked())
}

/// Wide transmit factor `P_t ⊗ I_{2 N_r}` used in the receive-gain lift.
pub fn pbar_t_wide(pt: &PolBlockMatrix, nr: usize) -> RMat {
    pt.stacked().kronecker(&RMat::identity(2 * nr, 2 * nr))
}

/// Wide receive factor `I_{2 N_t} ⊗ P_r` used in the transmit-gain lift.
pub fn pbar_r_wide(pr: &PolBlockMatrix, nt: usize) -> RMat {
    RMat::identity(2 * nt, 2 * nt).kronecker(pr.stacked())
}
