//! Canonical conic-program layer.
//!
//! Problems are expressed over Hermitian PSD matrix variables and
//! nonnegative scalars with linear objective/rows and LMI constraints, then
//! lowered to a real sparse cone program. Complex Hermitian blocks are
//! realified through the standard `[[Re, -Im], [Im, Re]]` embedding, whose
//! PSD-ness is equivalent to that of the complex matrix. The backend is the
//! Clarabel interior-point solver; this module owns the lowering, the
//! solution extraction and an optional dump to the text-based conic
//! benchmark interchange format for external cross-checking.

use crate::linalg::{CMat, Cx};
use crate::{Error, Result};
use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use std::io::Write;

/// Termination status of a conic solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    AlmostOptimal,
    Infeasible,
    Unbounded,
    MaxIter,
    Numerical,
}

impl SolveStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::AlmostOptimal)
    }
}

/// Handle to a Hermitian matrix variable.
#[derive(Debug, Clone, Copy)]
pub struct MatVar {
    n: usize,
    offset: usize,
}

impl MatVar {
    pub fn dim(&self) -> usize {
        self.n
    }

    fn n_params(&self) -> usize {
        self.n * self.n
    }
}

/// Handle to a scalar variable.
#[derive(Debug, Clone, Copy)]
pub struct ScalarVar {
    offset: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ConeKind {
    Zero,
    NonNeg,
    /// Side length of the REAL symmetric matrix (twice the complex side).
    PsdTriangle(usize),
}

struct ConeBlock {
    cone: ConeKind,
    rows: usize,
    /// `(row within block, parameter column, value)`.
    triplets: Vec<(usize, usize, f64)>,
    b: Vec<f64>,
}

/// Tally of constraint blocks by type, used by construction audits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConstraintCounts {
    pub zero_rows: usize,
    pub nonneg_rows: usize,
    pub psd_blocks: usize,
}

/// A conic problem in canonical form: minimize `q^T x` over the parameter
/// vector of all registered variables, subject to cone constraints.
pub struct ConicProblem {
    n_params: usize,
    obj: Vec<f64>,
    blocks: Vec<ConeBlock>,
}

impl Default for ConicProblem {
    fn default() -> Self {
        Self::new()
    }
}

/// Parameter order of a Hermitian variable: column-major upper triangle,
/// diagonal entries real, off-diagonals contributing (re, im) pairs.
fn herm_param_iter(n: usize) -> impl Iterator<Item = (usize, usize, bool)> {
    // (i, j, is_imaginary_part)
    (0..n).flat_map(move |j| {
        (0..=j).flat_map(move |i| {
            if i == j {
                vec![(i, j, false)]
            } else {
                vec![(i, j, false), (i, j, true)]
            }
        })
    })
}

impl ConicProblem {
    pub fn new() -> Self {
        Self { n_params: 0, obj: Vec::new(), blocks: Vec::new() }
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    /// Register an `n x n` Hermitian matrix variable (no implicit PSD
    /// constraint; call [`ConicProblem::require_psd`] if needed).
    pub fn hermitian_var(&mut self, n: usize) -> MatVar {
        let v = MatVar { n, offset: self.n_params };
        self.n_params += v.n_params();
        self.obj.resize(self.n_params, 0.0);
        v
    }

    /// Register a free scalar variable.
    pub fn scalar_var(&mut self) -> ScalarVar {
        let v = ScalarVar { offset: self.n_params };
        self.n_params += 1;
        self.obj.resize(self.n_params, 0.0);
        v
    }

    /// Add `scale * Re<C, X>` to the objective (`C` Hermitian).
    pub fn obj_herm(&mut self, var: &MatVar, c: &CMat, scale: f64) {
        for (p, coef) in herm_functional(var, c) {
            self.obj[p] += scale * coef;
        }
    }

    pub fn obj_scalar(&mut self, var: &ScalarVar, coef: f64) {
        self.obj[var.offset] += coef;
    }

    /// Begin a linear row `sum of terms (+ constant) {==, <=} rhs`.
    pub fn row(&self) -> LinRow {
        LinRow { coeffs: Vec::new(), constant: 0.0 }
    }

    pub fn push_eq(&mut self, row: LinRow, rhs: f64) {
        self.push_lin(row, rhs, ConeKind::Zero);
    }

    pub fn push_le(&mut self, row: LinRow, rhs: f64) {
        self.push_lin(row, rhs, ConeKind::NonNeg);
    }

    fn push_lin(&mut self, row: LinRow, rhs: f64, cone: ConeKind) {
        // merge into an existing trailing block of the same kind so that
        // consecutive scalar rows share one cone
        let b_val = rhs - row.constant;
        let reuse = matches!(
            self.blocks.last(),
            Some(last) if last.cone == cone && !matches!(cone, ConeKind::PsdTriangle(_))
        );
        if !reuse {
            self.blocks.push(ConeBlock { cone, rows: 0, triplets: Vec::new(), b: Vec::new() });
        }
        let block = self.blocks.last_mut().unwrap();
        let r = block.rows;
        for (col, val) in row.coeffs {
            block.triplets.push((r, col, val));
        }
        block.b.push(b_val);
        block.rows += 1;
    }

    /// Begin an LMI `F0 + sum_p x_p G_p >= 0` of complex dimension `dim`.
    pub fn lmi(&self, dim: usize) -> LmiBuilder {
        LmiBuilder { dim, constant: CMat::zeros(dim, dim), terms: Vec::new() }
    }

    /// `X >= 0` for a Hermitian variable.
    pub fn require_psd(&mut self, var: &MatVar) {
        let mut lmi = self.lmi(var.n);
        lmi.add_var(var, 0, 1.0);
        self.push_lmi(lmi);
    }

    /// Finalize an LMI into a PSD cone block.
    pub fn push_lmi(&mut self, lmi: LmiBuilder) {
        let m = lmi.dim;
        let side = 2 * m;
        let svec_len = side * (side + 1) / 2;
        let mut triplets = Vec::new();
        for (param, entries) in &lmi.terms {
            // realified, svec'd column with the PSD-cone sign convention
            for (row, val) in svec_entries(m, entries) {
                triplets.push((row, *param, -val));
            }
        }
        let mut b = vec![0.0; svec_len];
        let const_entries: Vec<(usize, usize, Cx)> = lmi
            .constant
            .iter()
            .enumerate()
            .filter(|(_, z)| z.norm_sqr() > 0.0)
            .map(|(idx, z)| (idx % m, idx / m, *z))
            .collect();
        for (row, val) in svec_entries(m, &const_entries) {
            b[row] = val;
        }
        self.blocks.push(ConeBlock {
            cone: ConeKind::PsdTriangle(side),
            rows: svec_len,
            triplets,
            b,
        });
    }

    pub fn constraint_counts(&self) -> ConstraintCounts {
        let mut c = ConstraintCounts { zero_rows: 0, nonneg_rows: 0, psd_blocks: 0 };
        for b in &self.blocks {
            match b.cone {
                ConeKind::Zero => c.zero_rows += b.rows,
                ConeKind::NonNeg => c.nonneg_rows += b.rows,
                ConeKind::PsdTriangle(_) => c.psd_blocks += 1,
            }
        }
        c
    }

    fn assemble(&self) -> (CscMatrix<f64>, Vec<f64>, Vec<SupportedConeT<f64>>) {
        let mut rows_so_far = 0usize;
        let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
        let mut b = Vec::new();
        let mut cones = Vec::new();
        for block in &self.blocks {
            for (r, c, v) in &block.triplets {
                triplets.push((rows_so_far + r, *c, *v));
            }
            b.extend_from_slice(&block.b);
            cones.push(match block.cone {
                ConeKind::Zero => SupportedConeT::ZeroConeT(block.rows),
                ConeKind::NonNeg => SupportedConeT::NonnegativeConeT(block.rows),
                ConeKind::PsdTriangle(side) => SupportedConeT::PSDTriangleConeT(side),
            });
            rows_so_far += block.rows;
        }
        let a = triplets_to_csc(rows_so_far, self.n_params, &mut triplets);
        (a, b, cones)
    }

    /// Solve with the interior-point backend.
    pub fn solve(&self, opts: &SolverOptions) -> Result<ConicSolution> {
        if let Some(dir) = &opts.dump_dir {
            let seq = DUMP_SEQ.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
            let path = dir.join(format!("problem_{seq:05}.cbf"));
            let dump = std::fs::File::create(&path)
                .and_then(|mut f| self.write_cbf(&mut f));
            if let Err(e) = dump {
                return Err(Error::Solver(format!(
                    "cannot dump conic problem to {}: {e}",
                    path.display()
                )));
            }
        }
        let (a, b, cones) = self.assemble();
        let p = CscMatrix::zeros((self.n_params, self.n_params));
        let settings = DefaultSettings {
            verbose: opts.verbose,
            tol_gap_abs: opts.tol,
            tol_gap_rel: opts.tol,
            tol_feas: opts.tol,
            max_iter: opts.max_iter,
            ..DefaultSettings::default()
        };
        let mut solver = DefaultSolver::new(&p, &self.obj, &a, &b, &cones, settings)
            .map_err(|e| Error::Solver(format!("solver rejected the problem: {e:?}")))?;
        solver.solve();
        let status = match solver.solution.status {
            SolverStatus::Solved => SolveStatus::Optimal,
            SolverStatus::AlmostSolved => SolveStatus::AlmostOptimal,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                SolveStatus::Infeasible
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                SolveStatus::Unbounded
            }
            SolverStatus::MaxIterations | SolverStatus::MaxTime => SolveStatus::MaxIter,
            _ => SolveStatus::Numerical,
        };
        Ok(ConicSolution { status, x: solver.solution.x.clone(), obj: solver.solution.obj_val })
    }

    /// Recover a Hermitian matrix variable from the solution vector.
    pub fn extract_mat(&self, var: &MatVar, sol: &ConicSolution) -> CMat {
        let mut m = CMat::zeros(var.n, var.n);
        for (p, (i, j, imag)) in herm_param_iter(var.n).enumerate() {
            let v = sol.x[var.offset + p];
            if i == j {
                m[(i, i)] = Cx::new(v, 0.0);
            } else if !imag {
                m[(i, j)] += Cx::new(v, 0.0);
                m[(j, i)] += Cx::new(v, 0.0);
            } else {
                m[(i, j)] += Cx::new(0.0, v);
                m[(j, i)] += Cx::new(0.0, -v);
            }
        }
        m
    }

    pub fn extract_scalar(&self, var: &ScalarVar, sol: &ConicSolution) -> f64 {
        sol.x[var.offset]
    }

    /// Dump in conic benchmark format (CBF v3): free scalar variables,
    /// scalar rows as L=/L+ constraints, LMIs as PSDCON blocks over the
    /// realified matrices.
    pub fn write_cbf<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "VER\n3\n")?;
        writeln!(w, "OBJSENSE\nMIN\n")?;
        writeln!(w, "VAR\n{} 1\nF {}\n", self.n_params, self.n_params)?;

        let obj_nnz: Vec<(usize, f64)> = self
            .obj
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, v)| (j, *v))
            .collect();
        if !obj_nnz.is_empty() {
            writeln!(w, "OBJACOORD\n{}", obj_nnz.len())?;
            for (j, v) in obj_nnz {
                writeln!(w, "{j} {v:.17e}")?;
            }
            writeln!(w)?;
        }

        // scalar rows: our form is b - Ax in cone; CBF rows are Ax + b in cone
        let lin_blocks: Vec<&ConeBlock> = self
            .blocks
            .iter()
            .filter(|blk| !matches!(blk.cone, ConeKind::PsdTriangle(_)))
            .collect();
        let total_rows: usize = lin_blocks.iter().map(|blk| blk.rows).sum();
        if total_rows > 0 {
            writeln!(w, "CON\n{} {}", total_rows, lin_blocks.len())?;
            for blk in &lin_blocks {
                let tag = match blk.cone {
                    ConeKind::Zero => "L=",
                    ConeKind::NonNeg => "L+",
                    ConeKind::PsdTriangle(_) => unreachable!(),
                };
                writeln!(w, "{tag} {}", blk.rows)?;
            }
            writeln!(w)?;
            let mut acoord = Vec::new();
            let mut bcoord = Vec::new();
            let mut base = 0usize;
            for blk in &lin_blocks {
                for (r, c, v) in &blk.triplets {
                    acoord.push((base + r, *c, -v));
                }
                for (r, bv) in blk.b.iter().enumerate() {
                    if *bv != 0.0 {
                        bcoord.push((base + r, *bv));
                    }
                }
                base += blk.rows;
            }
            writeln!(w, "ACOORD\n{}", acoord.len())?;
            for (r, c, v) in acoord {
                writeln!(w, "{r} {c} {v:.17e}")?;
            }
            writeln!(w)?;
            writeln!(w, "BCOORD\n{}", bcoord.len())?;
            for (r, v) in bcoord {
                writeln!(w, "{r} {v:.17e}")?;
            }
            writeln!(w)?;
        }

        // PSD constraints: F_i(x) = D_i + sum_j x_j H_ij >= 0
        let psd_blocks: Vec<&ConeBlock> = self
            .blocks
            .iter()
            .filter(|blk| matches!(blk.cone, ConeKind::PsdTriangle(_)))
            .collect();
        if !psd_blocks.is_empty() {
            writeln!(w, "PSDCON\n{}", psd_blocks.len())?;
            for blk in &psd_blocks {
                if let ConeKind::PsdTriangle(side) = blk.cone {
                    writeln!(w, "{side}")?;
                }
            }
            writeln!(w)?;
            let mut hcoord = Vec::new();
            let mut dcoord = Vec::new();
            for (ci, blk) in psd_blocks.iter().enumerate() {
                let side = match blk.cone {
                    ConeKind::PsdTriangle(s) => s,
                    _ => unreachable!(),
                };
                for (r, c, v) in &blk.triplets {
                    let (i, j, scale) = svec_row_to_entry(side, *r);
                    hcoord.push((ci, *c, i, j, -v / scale));
                }
                for (r, bv) in blk.b.iter().enumerate() {
                    if *bv != 0.0 {
                        let (i, j, scale) = svec_row_to_entry(side, r);
                        dcoord.push((ci, i, j, bv / scale));
                    }
                }
            }
            writeln!(w, "HCOORD\n{}", hcoord.len())?;
            for (ci, c, i, j, v) in hcoord {
                writeln!(w, "{ci} {c} {i} {j} {v:.17e}")?;
            }
            writeln!(w)?;
            writeln!(w, "DCOORD\n{}", dcoord.len())?;
            for (ci, i, j, v) in dcoord {
                writeln!(w, "{ci} {i} {j} {v:.17e}")?;
            }
        }
        Ok(())
    }
}

/// Backend options; the defaults pin primal/dual tolerances at `1e-8`.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: u32,
    pub verbose: bool,
    /// When set, every solved problem is also dumped to this directory in
    /// conic benchmark format (`problem_<seq>.cbf`).
    pub dump_dir: Option<std::path::PathBuf>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 200, verbose: false, dump_dir: None }
    }
}

static DUMP_SEQ: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(0);

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub obj: f64,
}

/// One scalar linear expression under construction.
pub struct LinRow {
    coeffs: Vec<(usize, f64)>,
    constant: f64,
}

impl LinRow {
    /// Add `scale * Re<C, X>`.
    pub fn herm(mut self, var: &MatVar, c: &CMat, scale: f64) -> Self {
        for (p, coef) in herm_functional(var, c) {
            self.coeffs.push((p, scale * coef));
        }
        self
    }

    pub fn scalar(mut self, var: &ScalarVar, coef: f64) -> Self {
        self.coeffs.push((var.offset, coef));
        self
    }

    pub fn constant(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }
}

/// Coefficients of `Re<C, X>` over the parameters of `var`.
fn herm_functional(var: &MatVar, c: &CMat) -> Vec<(usize, f64)> {
    assert_eq!(c.nrows(), var.n, "coefficient matrix does not match variable size");
    let mut out = Vec::with_capacity(var.n_params());
    for (p, (i, j, imag)) in herm_param_iter(var.n).enumerate() {
        let coef = if i == j {
            c[(i, i)].re
        } else if !imag {
            2.0 * c[(i, j)].re
        } else {
            2.0 * c[(i, j)].im
        };
        if coef != 0.0 {
            out.push((var.offset + p, coef));
        }
    }
    out
}

/// An affine Hermitian matrix expression destined for the PSD cone.
pub struct LmiBuilder {
    dim: usize,
    constant: CMat,
    /// Per parameter column: complex entries of its coefficient matrix.
    terms: Vec<(usize, Vec<(usize, usize, Cx)>)>,
}

impl LmiBuilder {
    /// Add a constant Hermitian matrix (accumulates).
    pub fn add_constant(&mut self, m: &CMat) {
        assert_eq!(m.nrows(), self.dim);
        self.constant += m;
    }

    /// Place `scale * X` on the diagonal block starting at `r0`.
    pub fn add_var(&mut self, var: &MatVar, r0: usize, scale: f64) {
        assert!(r0 + var.n <= self.dim);
        for (p, (i, j, imag)) in herm_param_iter(var.n).enumerate() {
            let mut entries = Vec::new();
            if i == j {
                entries.push((r0 + i, r0 + i, Cx::new(scale, 0.0)));
            } else if !imag {
                entries.push((r0 + i, r0 + j, Cx::new(scale, 0.0)));
                entries.push((r0 + j, r0 + i, Cx::new(scale, 0.0)));
            } else {
                entries.push((r0 + i, r0 + j, Cx::new(0.0, scale)));
                entries.push((r0 + j, r0 + i, Cx::new(0.0, -scale)));
            }
            self.terms.push((var.offset + p, entries));
        }
    }

    /// Add the sandwiched Kronecker map `u^H (X^* ⊗ I_{n_obs}) u` of a
    /// Hermitian variable (an `r x r` Hermitian affine image for `u` of
    /// shape `(n n_obs) x r`), optionally left-multiplied by a constant,
    /// placed at block `(r0, c0)`; off-diagonal placements are mirrored by
    /// the adjoint so the LMI stays Hermitian. Whitened bases like `u` keep
    /// the constraint data well scaled regardless of covariance rank.
    pub fn add_var_kron_sandwich(
        &mut self,
        var: &MatVar,
        n_obs: usize,
        u: &CMat,
        left: Option<&CMat>,
        r0: usize,
        c0: usize,
        scale: f64,
    ) {
        let dim = var.n * n_obs;
        assert_eq!(u.nrows(), dim);
        let r = u.ncols();
        let rows_out = left.map_or(r, |l| l.nrows());
        assert!(r0 + rows_out <= self.dim && c0 + r <= self.dim);
        if r0 != c0 {
            assert!(r0 + rows_out <= c0 || c0 + r <= r0, "mirrored blocks must not overlap");
        }
        // row-block slices R_a = u[a n_obs .. (a+1) n_obs, :];
        // then u^H (E_ab ⊗ I) u = R_a^H R_b
        let slices: Vec<CMat> =
            (0..var.n).map(|a| u.view((a * n_obs, 0), (n_obs, r)).into_owned()).collect();
        for (p, (i, j, imag)) in herm_param_iter(var.n).enumerate() {
            let rij = slices[i].adjoint() * &slices[j];
            let m = if i == j {
                rij
            } else if !imag {
                // d/d re: (E_ij + E_ji)^* ⊗ I
                &rij + rij.adjoint()
            } else {
                // d/d im: (i E_ij - i E_ji)^* ⊗ I = -i E_ij ⊗ I + i E_ji ⊗ I
                let t = rij * Cx::new(0.0, -1.0);
                &t + t.adjoint()
            };
            let placed = match left {
                Some(l) => l * &m,
                None => m,
            };
            let mut entries: Vec<(usize, usize, Cx)> = placed
                .iter()
                .enumerate()
                .filter(|(_, z)| z.norm_sqr() > 0.0)
                .map(|(idx, z)| {
                    (r0 + idx % placed.nrows(), c0 + idx / placed.nrows(), *z * scale)
                })
                .collect();
            if r0 != c0 {
                let mirror: Vec<(usize, usize, Cx)> = placed
                    .iter()
                    .enumerate()
                    .filter(|(_, z)| z.norm_sqr() > 0.0)
                    .map(|(idx, z)| {
                        (c0 + idx / placed.nrows(), r0 + idx % placed.nrows(), z.conj() * scale)
                    })
                    .collect();
                entries.extend(mirror);
            }
            self.terms.push((var.offset + p, entries));
        }
    }

    /// Place `scale * (X^* ⊗ I_{n_obs})` on the diagonal block starting at
    /// `r0` (the conjugate-Kronecker block of the Schur LMI).
    pub fn add_var_kron_conj(&mut self, var: &MatVar, n_obs: usize, r0: usize, scale: f64) {
        assert!(r0 + var.n * n_obs <= self.dim);
        for (p, (i, j, imag)) in herm_param_iter(var.n).enumerate() {
            let mut entries = Vec::new();
            for s in 0..n_obs {
                let (ri, rj) = (r0 + i * n_obs + s, r0 + j * n_obs + s);
                if i == j {
                    entries.push((ri, ri, Cx::new(scale, 0.0)));
                } else if !imag {
                    // conj leaves the real part untouched
                    entries.push((ri, rj, Cx::new(scale, 0.0)));
                    entries.push((rj, ri, Cx::new(scale, 0.0)));
                } else {
                    // conj flips the sign of the imaginary part
                    entries.push((ri, rj, Cx::new(0.0, -scale)));
                    entries.push((rj, ri, Cx::new(0.0, scale)));
                }
            }
            self.terms.push((var.offset + p, entries));
        }
    }
}

/// Realify a complex Hermitian entry list into the svec (column-major upper
/// triangle, off-diagonals scaled by sqrt 2) of `[[Re, -Im], [Im, Re]]`.
fn svec_entries(m: usize, entries: &[(usize, usize, Cx)]) -> Vec<(usize, f64)> {
    let mut out = Vec::with_capacity(entries.len() * 3);
    let mut push = |i: usize, j: usize, v: f64| {
        if v == 0.0 {
            return;
        }
        // sit in the upper triangle
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let row = j * (j + 1) / 2 + i;
        let val = if i == j { v } else { v * std::f64::consts::SQRT_2 };
        out.push((row, val));
    };
    for (i, j, z) in entries {
        // top-left Re block; emit only the upper triangle (i <= j); the
        // Hermitian mirror entry (j, i) is supplied by the caller
        if i <= j {
            push(*i, *j, z.re);
            // bottom-right Re block
            push(m + i, m + j, z.re);
        }
        // top-right -Im block (full block lands in the upper triangle)
        push(*i, m + j, -z.im);
    }
    // merge duplicate rows (diagonal Im entries of Hermitian matrices are
    // zero, but var blocks may emit overlapping coordinates)
    out.sort_by_key(|(r, _)| *r);
    let mut merged: Vec<(usize, f64)> = Vec::with_capacity(out.len());
    for (r, v) in out {
        if let Some(last) = merged.last_mut() {
            if last.0 == r {
                last.1 += v;
                continue;
            }
        }
        merged.push((r, v));
    }
    merged.retain(|(_, v)| *v != 0.0);
    merged
}

/// Inverse of the svec row index: `(i, j, scale)` with `scale = sqrt 2` on
/// off-diagonals. Linear scan is fine at dump time.
fn svec_row_to_entry(side: usize, row: usize) -> (usize, usize, f64) {
    let mut r = row;
    for j in 0..side {
        if r <= j {
            let scale = if r == j { 1.0 } else { std::f64::consts::SQRT_2 };
            // CBF wants the lower-triangle coordinate
            return (j, r, scale);
        }
        r -= j + 1;
    }
    panic!("svec row {row} out of range for side {side}");
}

fn triplets_to_csc(m: usize, n: usize, triplets: &mut Vec<(usize, usize, f64)>) -> CscMatrix<f64> {
    triplets.sort_by_key(|(r, c, _)| (*c, *r));
    let mut colptr = vec![0usize; n + 1];
    let mut rowval = Vec::with_capacity(triplets.len());
    let mut nzval: Vec<f64> = Vec::with_capacity(triplets.len());
    let mut last: Option<(usize, usize)> = None;
    for &(r, c, v) in triplets.iter() {
        if last == Some((c, r)) {
            *nzval.last_mut().unwrap() += v;
        } else {
            rowval.push(r);
            nzval.push(v);
            colptr[c + 1] += 1;
            last = Some((c, r));
        }
    }
    for c in 0..n {
        colptr[c + 1] += colptr[c];
    }
    CscMatrix::new(m, n, colptr, rowval, nzval)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigvals_h, hermitian_part, inner_re, random_psd, trace_re};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn min_trace_above_identity() {
        // min Tr(X) s.t. X >= I (complex 2x2) -> 2
        let mut prob = ConicProblem::new();
        let x = prob.hermitian_var(2);
        prob.obj_herm(&x, &CMat::identity(2, 2), 1.0);
        let mut lmi = prob.lmi(2);
        lmi.add_var(&x, 0, 1.0);
        lmi.add_constant(&(CMat::identity(2, 2) * Cx::new(-1.0, 0.0)));
        prob.push_lmi(lmi);
        let sol = prob.solve(&SolverOptions::default()).unwrap();
        assert!(sol.status.is_ok());
        assert!((sol.obj - 2.0).abs() < 1e-7);
        let xm = prob.extract_mat(&x, &sol);
        assert!((xm - CMat::identity(2, 2)).norm() < 1e-6);
    }

    #[test]
    fn min_inner_product_on_density_matrices_is_min_eigenvalue() {
        // min Re<C, X> s.t. Tr(X) = 1, X >= 0 has optimum lambda_min(C);
        // exercises complex off-diagonal data end to end
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for n in [2usize, 3, 4] {
            let c = random_psd(&mut rng, n);
            let mut prob = ConicProblem::new();
            let x = prob.hermitian_var(n);
            prob.obj_herm(&x, &c, 1.0);
            prob.require_psd(&x);
            let row = prob.row().herm(&x, &CMat::identity(n, n), 1.0);
            prob.push_eq(row, 1.0);
            let sol = prob.solve(&SolverOptions::default()).unwrap();
            assert!(sol.status.is_ok());
            let want = eigvals_h(&c)[0];
            assert!((sol.obj - want).abs() < 1e-6, "n={n}: obj {} vs {}", sol.obj, want);

            let xm = prob.extract_mat(&x, &sol);
            assert!((trace_re(&xm) - 1.0).abs() < 1e-6);
            assert!(eigvals_h(&xm)[0] > -1e-7);
            assert!((inner_re(&c, &xm) - want).abs() < 1e-6);
        }
    }

    #[test]
    fn hand_computed_2x2_sdp() {
        // min x11 + x22 s.t. x12 = 1 (real part), X >= 0.
        // KKT: optimum at X = [[t, 1], [1, 1/t]] with t = 1 -> obj 2.
        let mut prob = ConicProblem::new();
        let x = prob.hermitian_var(2);
        prob.obj_herm(&x, &CMat::identity(2, 2), 1.0);
        prob.require_psd(&x);
        let mut sel = CMat::zeros(2, 2);
        sel[(0, 1)] = Cx::new(0.5, 0.0);
        sel[(1, 0)] = Cx::new(0.5, 0.0);
        let row = prob.row().herm(&x, &sel, 1.0);
        prob.push_eq(row, 1.0);
        let sol = prob.solve(&SolverOptions::default()).unwrap();
        assert!(sol.status.is_ok());
        assert!((sol.obj - 2.0).abs() < 1e-6, "obj {}", sol.obj);
    }

    #[test]
    fn infeasible_toy_is_flagged() {
        // Tr(X) = -1 with X >= 0 is infeasible
        let mut prob = ConicProblem::new();
        let x = prob.hermitian_var(2);
        prob.require_psd(&x);
        let row = prob.row().herm(&x, &CMat::identity(2, 2), 1.0);
        prob.push_eq(row, -1.0);
        let sol = prob.solve(&SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn kron_conj_block_matches_dense_identity() {
        // pin X to a random Hermitian target with equality rows and require
        // (X^* ⊗ I) - kron(target) + ridge I >= 0: feasible exactly when the
        // kron block is assembled consistently with the dense product
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let xfix = random_psd(&mut rng, 2);
        let n_obs = 2;

        let build = |margin: f64| {
            let mut prob = ConicProblem::new();
            let x = prob.hermitian_var(2);
            for (i, j) in [(0usize, 0usize), (1, 1), (0, 1)] {
                if i == j {
                    let mut sel = CMat::zeros(2, 2);
                    sel[(i, i)] = Cx::new(1.0, 0.0);
                    let row = prob.row().herm(&x, &sel, 1.0);
                    prob.push_eq(row, xfix[(i, i)].re);
                } else {
                    let mut sel = CMat::zeros(2, 2);
                    sel[(i, j)] = Cx::new(0.5, 0.0);
                    sel[(j, i)] = Cx::new(0.5, 0.0);
                    let row = prob.row().herm(&x, &sel, 1.0);
                    prob.push_eq(row, xfix[(i, j)].re);
                    let mut seli = CMat::zeros(2, 2);
                    seli[(i, j)] = Cx::new(0.0, 0.5);
                    seli[(j, i)] = Cx::new(0.0, -0.5);
                    let row = prob.row().herm(&x, &seli, 1.0);
                    prob.push_eq(row, xfix[(i, j)].im);
                }
            }
            let mut lmi = prob.lmi(2 * n_obs);
            lmi.add_var_kron_conj(&x, n_obs, 0, 1.0);
            let dense = xfix.conjugate().kronecker(&CMat::identity(n_obs, n_obs));
            lmi.add_constant(&(dense * Cx::new(-1.0, 0.0)));
            lmi.add_constant(&(CMat::identity(2 * n_obs, 2 * n_obs) * Cx::new(margin, 0.0)));
            prob.push_lmi(lmi);
            (prob, x)
        };

        // small positive margin: feasible, X pinned
        let (prob, x) = build(1e-6);
        let sol = prob.solve(&SolverOptions::default()).unwrap();
        assert!(sol.status.is_ok(), "status {:?}", sol.status);
        let got = prob.extract_mat(&x, &sol);
        assert!((got - &xfix).norm() < 1e-5, "X was not pinned to the target");

        // negative margin: the pinned LMI value is -margin I, infeasible
        let (prob, _) = build(-1e-3);
        let sol = prob.solve(&SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn constraint_counts_audit() {
        let mut prob = ConicProblem::new();
        let x = prob.hermitian_var(2);
        let y = prob.hermitian_var(2);
        prob.require_psd(&x);
        prob.require_psd(&y);
        let row = prob.row().herm(&x, &CMat::identity(2, 2), 1.0);
        prob.push_eq(row, 1.0);
        let row = prob.row().herm(&y, &CMat::identity(2, 2), 1.0);
        prob.push_le(row, 3.0);
        let counts = prob.constraint_counts();
        assert_eq!(
            counts,
            ConstraintCounts { zero_rows: 1, nonneg_rows: 1, psd_blocks: 2 }
        );
    }

    #[test]
    fn realified_embedding_preserves_psdness() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        // check svec round trip numerically: assemble an LMI of a PSD
        // constant and confirm the b vector decodes back to the matrix
        let m = random_psd(&mut rng, 3);
        let mut prob = ConicProblem::new();
        let mut lmi = prob.lmi(3);
        lmi.add_constant(&m);
        prob.push_lmi(lmi);
        let block = prob.blocks.last().unwrap();
        // reconstruct the realified matrix from svec
        let side = 6;
        let mut t = nalgebra::DMatrix::<f64>::zeros(side, side);
        let mut idx = 0;
        for j in 0..side {
            for i in 0..=j {
                let v = block.b[idx];
                if i == j {
                    t[(i, j)] = v;
                } else {
                    t[(i, j)] = v / std::f64::consts::SQRT_2;
                    t[(j, i)] = t[(i, j)];
                }
                idx += 1;
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                assert!((t[(i, j)] - m[(i, j)].re).abs() < 1e-14);
                assert!((t[(i + 3, j + 3)] - m[(i, j)].re).abs() < 1e-14);
                assert!((t[(i, j + 3)] + m[(i, j)].im).abs() < 1e-14);
                assert!((t[(i + 3, j)] - m[(i, j)].im).abs() < 1e-14);
            }
        }
        // symmetric embedding
        assert!((t.transpose() - &t).abs().max() < 1e-14);
        let cem = hermitian_part(&m);
        let t_eigs = nalgebra::SymmetricEigen::new(t).eigenvalues;
        let c_eigs = eigvals_h(&cem);
        // realified spectrum is the complex spectrum doubled
        assert!(t_eigs.iter().copied().fold(f64::INFINITY, f64::min) >= c_eigs[0] - 1e-12);
    }

    #[test]
    fn cbf_dump_has_expected_sections() {
        let mut prob = ConicProblem::new();
        let x = prob.hermitian_var(2);
        prob.obj_herm(&x, &CMat::identity(2, 2), 1.0);
        prob.require_psd(&x);
        let row = prob.row().herm(&x, &CMat::identity(2, 2), 1.0);
        prob.push_eq(row, 1.0);
        let mut buf = Vec::new();
        prob.write_cbf(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        for section in ["VER", "OBJSENSE", "VAR", "OBJACOORD", "CON", "PSDCON", "HCOORD"] {
            assert!(text.contains(section), "missing {section} in CBF dump:\n{text}");
        }
    }
}
