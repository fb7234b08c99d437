//! Dense bounded-variable simplex used as the LP relaxation oracle.
//!
//! The branch-and-cut engine and the column-generation master need four
//! operations from an LP backend: solve the relaxation, read row duals,
//! change variable bounds, and warm-start after rows or columns are added.
//! [`LpBackend`] captures that contract and [`DenseSimplex`] implements it
//! with an explicit basis inverse, a primal simplex for restoring optimality
//! after new columns, and a dual simplex for re-solving after new rows or
//! bound changes.
//!
//! The implementation assumes non-negative objective coefficients (true for
//! every model in this crate: travel costs, recourse variables, fleet
//! selectors, column costs), which makes the all-slack basis dual feasible
//! and removes the need for a phase-one procedure.

use thiserror::Error;

pub const FEAS_TOL: f64 = 1e-7;
pub const DUAL_TOL: f64 = 1e-7;
const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: u32 = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("LP is unbounded below")]
    Unbounded,
    #[error("iteration limit {0} exceeded")]
    IterationLimit(usize),
    #[error("basis matrix is numerically singular")]
    SingularBasis,
    #[error("negative objective coefficient {coeff} on variable {var}; this backend requires non-negative costs")]
    NegativeCost { var: usize, coeff: f64 },
    #[error("no usable pivot found (numerical trouble)")]
    NoPivot,
}

/// Identifier of a structural variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

/// Identifier of a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowId(pub usize);

/// The contract the engine and the column-generation master rely on.
pub trait LpBackend {
    fn add_var(&mut self, obj: f64, lb: f64, ub: f64) -> VarId;
    /// Adds a variable together with its coefficients in existing rows
    /// (column generation).
    fn add_column(&mut self, obj: f64, lb: f64, ub: f64, coeffs: &[(RowId, f64)]) -> VarId;
    fn add_row(&mut self, coeffs: &[(VarId, f64)], sense: RowSense, rhs: f64) -> RowId;
    fn set_var_bounds(&mut self, var: VarId, lb: f64, ub: f64);
    fn var_bounds(&self, var: VarId) -> (f64, f64);
    /// Solves the relaxation, warm-starting from the previous basis.
    fn solve(&mut self) -> Result<LpStatus, LpError>;
    fn objective_value(&self) -> f64;
    fn var_value(&self, var: VarId) -> f64;
    /// Dual multiplier of a row at the last optimal solve.
    fn row_dual(&self, row: RowId) -> f64;
    fn num_vars(&self) -> usize;
    fn num_rows(&self) -> usize;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Basic(usize),
    AtLower,
    AtUpper,
}

/// Dense revised simplex over `a x + s = b` with bounded structural variables
/// and sign-constrained slacks.
pub struct DenseSimplex {
    // Structural columns: rows they appear in. Slack columns are implicit.
    cols: Vec<Vec<(usize, f64)>>,
    obj: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    // One entry per row.
    rows: Vec<Vec<(usize, f64)>>,
    sense: Vec<RowSense>,
    rhs: Vec<f64>,
    // Basis: one variable index per row; slack i has index n_struct() + i.
    basis: Vec<usize>,
    status: Vec<Status>,
    binv: Vec<f64>,
    x_basic: Vec<f64>,
    duals: Vec<f64>,
    pivots_since_refactor: u32,
    factor_valid: bool,
    /// Cumulative iteration/refactor counters, for performance inspection.
    pub stat_iterations: u64,
    pub stat_refactors: u64,
    pub stat_solves: u64,
    pub stat_worst_solve: u64,
    pub stat_dual_iters: u64,
    pub stat_primal_iters: u64,
}

impl Default for DenseSimplex {
    fn default() -> Self {
        Self::new()
    }
}

impl DenseSimplex {
    pub fn new() -> Self {
        Self {
            cols: Vec::new(),
            obj: Vec::new(),
            lb: Vec::new(),
            ub: Vec::new(),
            rows: Vec::new(),
            sense: Vec::new(),
            rhs: Vec::new(),
            basis: Vec::new(),
            status: Vec::new(),
            binv: Vec::new(),
            x_basic: Vec::new(),
            duals: Vec::new(),
            pivots_since_refactor: 0,
            factor_valid: false,
            stat_iterations: 0,
            stat_refactors: 0,
            stat_solves: 0,
            stat_worst_solve: 0,
            stat_dual_iters: 0,
            stat_primal_iters: 0,
        }
    }

    fn n_struct(&self) -> usize {
        self.cols.len()
    }

    fn n_total(&self) -> usize {
        self.n_struct() + self.rows.len()
    }

    fn m(&self) -> usize {
        self.rows.len()
    }

    fn var_lb(&self, j: usize) -> f64 {
        if j < self.n_struct() {
            self.lb[j]
        } else {
            match self.sense[j - self.n_struct()] {
                RowSense::Le => 0.0,
                RowSense::Ge => f64::NEG_INFINITY,
                RowSense::Eq => 0.0,
            }
        }
    }

    fn var_ub(&self, j: usize) -> f64 {
        if j < self.n_struct() {
            self.ub[j]
        } else {
            match self.sense[j - self.n_struct()] {
                RowSense::Le => f64::INFINITY,
                RowSense::Ge => 0.0,
                RowSense::Eq => 0.0,
            }
        }
    }

    fn var_obj(&self, j: usize) -> f64 {
        if j < self.n_struct() {
            self.obj[j]
        } else {
            0.0
        }
    }

    /// Value of a nonbasic variable: the bound it sits at.
    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.status[j] {
            Status::AtLower => self.var_lb(j),
            Status::AtUpper => self.var_ub(j),
            Status::Basic(p) => self.x_basic[p],
        }
    }

    /// Dense column of variable `j` scattered into `out` (must be zeroed).
    fn scatter_column(&self, j: usize, out: &mut [f64]) {
        if j < self.n_struct() {
            for &(r, a) in &self.cols[j] {
                out[r] = a;
            }
        } else {
            out[j - self.n_struct()] = 1.0;
        }
    }

    fn column_iter(&self, j: usize) -> ColumnIter<'_> {
        if j < self.n_struct() {
            ColumnIter::Struct(self.cols[j].iter())
        } else {
            ColumnIter::Slack(Some(j - self.n_struct()))
        }
    }

    /// Rebuilds the basis inverse from scratch by Gauss-Jordan elimination
    /// with partial pivoting, then recomputes the basic values.
    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m();
        let mut mat = vec![0.0f64; m * m];
        let mut scratch = vec![0.0f64; m];
        for (pos, &j) in self.basis.iter().enumerate() {
            scratch.iter_mut().for_each(|v| *v = 0.0);
            self.scatter_column(j, &mut scratch);
            for r in 0..m {
                mat[r * m + pos] = scratch[r];
            }
        }
        let mut inv = vec![0.0f64; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            // Partial pivoting.
            let mut best = col;
            let mut best_abs = mat[col * m + col].abs();
            for r in (col + 1)..m {
                let a = mat[r * m + col].abs();
                if a > best_abs {
                    best_abs = a;
                    best = r;
                }
            }
            if best_abs < 1e-12 {
                return Err(LpError::SingularBasis);
            }
            if best != col {
                for k in 0..m {
                    mat.swap(col * m + k, best * m + k);
                    inv.swap(col * m + k, best * m + k);
                }
            }
            let piv = mat[col * m + col];
            for k in 0..m {
                mat[col * m + k] /= piv;
                inv[col * m + k] /= piv;
            }
            for r in 0..m {
                if r == col {
                    continue;
                }
                let f = mat[r * m + col];
                if f != 0.0 {
                    for k in 0..m {
                        mat[r * m + k] -= f * mat[col * m + k];
                        inv[r * m + k] -= f * inv[col * m + k];
                    }
                }
            }
        }
        self.binv = inv;
        self.pivots_since_refactor = 0;
        self.factor_valid = true;
        self.stat_refactors += 1;
        self.recompute_basics();
        Ok(())
    }

    /// x_B = Binv (b - sum over nonbasic of a_j x_j).
    fn recompute_basics(&mut self) {
        let m = self.m();
        let mut resid = self.rhs.clone();
        for j in 0..self.n_total() {
            match self.status[j] {
                Status::Basic(_) => {}
                _ => {
                    let v = self.nonbasic_value(j);
                    if v != 0.0 {
                        match self.column_iter(j) {
                            ColumnIter::Struct(it) => {
                                for &(r, a) in it {
                                    resid[r] -= a * v;
                                }
                            }
                            ColumnIter::Slack(Some(r)) => resid[r] -= v,
                            ColumnIter::Slack(None) => {}
                        }
                    }
                }
            }
        }
        let mut xb = vec![0.0f64; m];
        for r in 0..m {
            let row = &self.binv[r * m..(r + 1) * m];
            let mut acc = 0.0;
            for k in 0..m {
                acc += row[k] * resid[k];
            }
            xb[r] = acc;
        }
        self.x_basic = xb;
    }

    /// d = Binv * a_j (FTRAN).
    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m();
        let mut d = vec![0.0f64; m];
        match self.column_iter(j) {
            ColumnIter::Struct(it) => {
                for &(r, a) in it {
                    if a != 0.0 {
                        for row in 0..m {
                            d[row] += self.binv[row * m + r] * a;
                        }
                    }
                }
            }
            ColumnIter::Slack(Some(r)) => {
                for row in 0..m {
                    d[row] = self.binv[row * m + r];
                }
            }
            ColumnIter::Slack(None) => {}
        }
        d
    }

    /// y = c_B Binv.
    fn compute_duals(&mut self) {
        let m = self.m();
        let mut y = vec![0.0f64; m];
        for (pos, &j) in self.basis.iter().enumerate() {
            let c = self.var_obj(j);
            if c != 0.0 {
                let row = &self.binv[pos * m..(pos + 1) * m];
                for k in 0..m {
                    y[k] += c * row[k];
                }
            }
        }
        self.duals = y;
    }

    fn reduced_cost(&self, j: usize) -> f64 {
        let mut rc = self.var_obj(j);
        match self.column_iter(j) {
            ColumnIter::Struct(it) => {
                for &(r, a) in it {
                    rc -= self.duals[r] * a;
                }
            }
            ColumnIter::Slack(Some(r)) => rc -= self.duals[r],
            ColumnIter::Slack(None) => {}
        }
        rc
    }

    /// Replaces the basic variable at position `r` with variable `q`, using
    /// the FTRAN column `d` of `q`.
    fn update_basis_inverse(&mut self, r: usize, d: &[f64]) -> Result<(), LpError> {
        let m = self.m();
        let piv = d[r];
        if piv.abs() < PIVOT_TOL {
            return Err(LpError::NoPivot);
        }
        // Row r scales by 1/piv; every other row i subtracts d[i]/piv times it.
        let inv_piv = 1.0 / piv;
        let pivot_row: Vec<f64> =
            self.binv[r * m..(r + 1) * m].iter().map(|v| v * inv_piv).collect();
        for i in 0..m {
            if i == r {
                continue;
            }
            let f = d[i];
            if f != 0.0 {
                let base = i * m;
                for k in 0..m {
                    self.binv[base + k] -= f * pivot_row[k];
                }
            }
        }
        self.binv[r * m..(r + 1) * m].copy_from_slice(&pivot_row);
        self.pivots_since_refactor += 1;
        Ok(())
    }

    fn reset_to_slack_basis(&mut self) -> Result<(), LpError> {
        for j in 0..self.n_total() {
            self.status[j] = if self.var_lb(j).is_finite() {
                Status::AtLower
            } else {
                Status::AtUpper
            };
        }
        let n = self.n_struct();
        self.basis = (0..self.m()).map(|i| n + i).collect();
        for (pos, &j) in self.basis.clone().iter().enumerate() {
            self.status[j] = Status::Basic(pos);
        }
        self.refactor()
    }

    fn primal_infeasibility(&self) -> (f64, Option<usize>) {
        let mut worst = 0.0;
        let mut row = None;
        for (pos, &j) in self.basis.iter().enumerate() {
            let v = self.x_basic[pos];
            let viol = (self.var_lb(j) - v).max(v - self.var_ub(j));
            if viol > worst {
                worst = viol;
                row = Some(pos);
            }
        }
        (worst, row)
    }

    /// Steepest-edge row choice: maximize violation^2 / ||Binv row||^2. The
    /// explicit inverse makes the exact weights a row-norm scan.
    fn steepest_infeasible_row(&self) -> (f64, Option<usize>) {
        let m = self.m();
        let mut worst = 0.0f64;
        let mut best_score = 0.0f64;
        let mut row = None;
        for (pos, &j) in self.basis.iter().enumerate() {
            let v = self.x_basic[pos];
            let viol = (self.var_lb(j) - v).max(v - self.var_ub(j));
            if viol > worst {
                worst = viol;
            }
            if viol <= FEAS_TOL {
                continue;
            }
            let norm_sq: f64 =
                self.binv[pos * m..(pos + 1) * m].iter().map(|x| x * x).sum::<f64>().max(1e-12);
            let score = viol * viol / norm_sq;
            if score > best_score {
                best_score = score;
                row = Some(pos);
            }
        }
        (worst, row)
    }

    /// Dual simplex: restores primal feasibility while keeping reduced-cost
    /// signs. Requires a dual-feasible basis.
    fn dual_simplex(&mut self, iteration_budget: &mut usize) -> Result<LpStatus, LpError> {
        let m = self.m();
        let mut stall = 0u32;
        loop {
            let (worst, row) = self.steepest_infeasible_row();
            if worst <= FEAS_TOL {
                return Ok(LpStatus::Optimal);
            }
            if *iteration_budget == 0 {
                return Err(LpError::IterationLimit(0));
            }
            *iteration_budget -= 1;
            self.stat_iterations += 1;
            self.stat_dual_iters += 1;
            let r = row.unwrap();
            let leaving = self.basis[r];
            let v = self.x_basic[r];
            let (beta, below) = if v < self.var_lb(leaving) - FEAS_TOL {
                (self.var_lb(leaving), true)
            } else {
                (self.var_ub(leaving), false)
            };
            self.compute_duals();
            // Row r of Binv.
            let w: Vec<f64> = self.binv[r * m..(r + 1) * m].to_vec();
            // Entering candidate by a two-pass ratio test: find the tightest
            // dual ratio with a tolerance slack, then take the largest pivot
            // among candidates inside the slack. Large pivots fight the
            // degenerate stalling these masters are prone to.
            let bland = stall > (2 * m as u32 + 20);
            let mut candidates: Vec<(f64, f64, usize)> = Vec::new(); // (ratio, |alpha|, j)
            for j in 0..self.n_total() {
                let at_lower = match self.status[j] {
                    Status::AtLower => true,
                    Status::AtUpper => false,
                    Status::Basic(_) => continue,
                };
                let (jlb, jub) = (self.var_lb(j), self.var_ub(j));
                if jub - jlb < 1e-12 {
                    continue; // fixed, cannot move
                }
                let mut alpha = 0.0;
                match self.column_iter(j) {
                    ColumnIter::Struct(it) => {
                        for &(rr, a) in it {
                            alpha += w[rr] * a;
                        }
                    }
                    ColumnIter::Slack(Some(rr)) => alpha = w[rr],
                    ColumnIter::Slack(None) => {}
                }
                let ok = if below {
                    (at_lower && alpha < -PIVOT_TOL) || (!at_lower && alpha > PIVOT_TOL)
                } else {
                    (at_lower && alpha > PIVOT_TOL) || (!at_lower && alpha < -PIVOT_TOL)
                };
                if !ok {
                    continue;
                }
                let rc = self.reduced_cost(j);
                // Clamp tolerance-level dual infeasibility to zero.
                let rc_mag = if at_lower { rc.max(0.0) } else { (-rc).max(0.0) };
                candidates.push((rc_mag / alpha.abs(), alpha.abs(), j));
            }
            if candidates.is_empty() {
                // No entering candidate: the row cannot be repaired.
                return Ok(LpStatus::Infeasible);
            }
            let q = if bland {
                candidates.iter().map(|&(_, _, j)| j).min().unwrap()
            } else {
                let mut best = candidates[0];
                for &c in &candidates[1..] {
                    if c.0 < best.0 - 1e-12 || (c.0 < best.0 + 1e-12 && c.1 > best.1) {
                        best = c;
                    }
                }
                best.2
            };
            let d = self.ftran(q);
            if (d[r]).abs() < PIVOT_TOL {
                // Factorization drift; rebuild and retry once.
                self.refactor()?;
                continue;
            }
            let delta = (v - beta) / d[r];
            // Move basics, install entering at position r.
            for i in 0..m {
                if i != r {
                    self.x_basic[i] -= delta * d[i];
                }
            }
            let q_val = self.nonbasic_value(q) + delta;
            self.update_basis_inverse(r, &d)?;
            self.status[leaving] = if below { Status::AtLower } else { Status::AtUpper };
            self.status[q] = Status::Basic(r);
            self.basis[r] = q;
            self.x_basic[r] = q_val;
            if delta.abs() < 1e-10 {
                stall += 1;
            } else {
                stall = 0;
            }
            if self.pivots_since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
        }
    }

    /// Primal simplex: assumes primal feasibility, restores optimality.
    fn primal_simplex(&mut self, iteration_budget: &mut usize) -> Result<LpStatus, LpError> {
        let m = self.m();
        let mut stall = 0u32;
        loop {
            if *iteration_budget == 0 {
                return Err(LpError::IterationLimit(0));
            }
            *iteration_budget -= 1;
            self.stat_iterations += 1;
            self.stat_primal_iters += 1;
            self.compute_duals();
            let bland = stall > (2 * m as u32 + 20);
            let mut best: Option<(f64, usize, bool)> = None; // (violation, j, at_lower)
            for j in 0..self.n_total() {
                let at_lower = match self.status[j] {
                    Status::AtLower => true,
                    Status::AtUpper => false,
                    Status::Basic(_) => continue,
                };
                let (jlb, jub) = (self.var_lb(j), self.var_ub(j));
                if jub - jlb < 1e-12 {
                    continue;
                }
                let rc = self.reduced_cost(j);
                let viol = if at_lower { -rc } else { rc };
                if viol > DUAL_TOL {
                    let better = match best {
                        None => true,
                        Some((bv, bj, _)) => {
                            if bland {
                                j < bj
                            } else {
                                viol > bv
                            }
                        }
                    };
                    if better {
                        best = Some((viol, j, at_lower));
                        if bland {
                            break;
                        }
                    }
                }
            }
            let Some((_, q, at_lower)) = best else {
                return Ok(LpStatus::Optimal);
            };
            let sigma = if at_lower { 1.0 } else { -1.0 };
            let d = self.ftran(q);
            // Ratio test with bound flip; ties resolved toward the largest
            // pivot for stability.
            let flip_limit = self.var_ub(q) - self.var_lb(q); // may be inf
            let mut t_star = flip_limit;
            let mut leaving: Option<(usize, f64, bool)> = None; // (pos, |d|, hits_lower)
            for i in 0..m {
                let sd = sigma * d[i];
                let bi = self.basis[i];
                let (t, hits_lower) = if sd > PIVOT_TOL {
                    let lbi = self.var_lb(bi);
                    if !lbi.is_finite() {
                        continue;
                    }
                    ((self.x_basic[i] - lbi) / sd, true)
                } else if sd < -PIVOT_TOL {
                    let ubi = self.var_ub(bi);
                    if !ubi.is_finite() {
                        continue;
                    }
                    ((self.x_basic[i] - ubi) / sd, false)
                } else {
                    continue;
                };
                let better = t < t_star - 1e-12
                    || (t < t_star + 1e-12
                        && leaving.as_ref().map_or(true, |&(_, bd, _)| sd.abs() > bd));
                if better {
                    t_star = t.max(0.0);
                    leaving = Some((i, sd.abs(), hits_lower));
                }
            }
            if !t_star.is_finite() {
                return Err(LpError::Unbounded);
            }
            match leaving {
                None => {
                    // Bound flip: q runs to its other bound.
                    for i in 0..m {
                        self.x_basic[i] -= sigma * t_star * d[i];
                    }
                    self.status[q] =
                        if at_lower { Status::AtUpper } else { Status::AtLower };
                    stall = 0;
                }
                Some((r, _, hits_lower)) => {
                    let leaving_var = self.basis[r];
                    for i in 0..m {
                        if i != r {
                            self.x_basic[i] -= sigma * t_star * d[i];
                        }
                    }
                    let q_val = self.nonbasic_value(q) + sigma * t_star;
                    self.update_basis_inverse(r, &d)?;
                    self.status[leaving_var] =
                        if hits_lower { Status::AtLower } else { Status::AtUpper };
                    self.status[q] = Status::Basic(r);
                    self.basis[r] = q;
                    self.x_basic[r] = q_val;
                    if t_star < 1e-10 {
                        stall += 1;
                    } else {
                        stall = 0;
                    }
                    if self.pivots_since_refactor >= REFACTOR_EVERY {
                        self.refactor()?;
                    }
                }
            }
        }
    }
}

enum ColumnIter<'a> {
    Struct(std::slice::Iter<'a, (usize, f64)>),
    Slack(Option<usize>),
}

impl LpBackend for DenseSimplex {
    fn add_var(&mut self, obj: f64, lb: f64, ub: f64) -> VarId {
        self.add_column(obj, lb, ub, &[])
    }

    fn add_column(&mut self, obj: f64, lb: f64, ub: f64, coeffs: &[(RowId, f64)]) -> VarId {
        debug_assert!(lb <= ub);
        let id = self.cols.len();
        let mut col = Vec::with_capacity(coeffs.len());
        for &(RowId(r), a) in coeffs {
            if a != 0.0 {
                col.push((r, a));
                self.rows[r].push((id, a));
            }
        }
        self.cols.push(col);
        self.obj.push(obj);
        self.lb.push(lb);
        self.ub.push(ub);
        // The new variable enters nonbasic at its lower bound. Slack indices
        // shift by one; the insert moves their statuses along, only the basis
        // index list needs the shift applied.
        self.status.insert(id, Status::AtLower);
        for b in &mut self.basis {
            if *b >= id {
                *b += 1;
            }
        }
        VarId(id)
    }

    fn add_row(&mut self, coeffs: &[(VarId, f64)], sense: RowSense, rhs: f64) -> RowId {
        let m = self.m();
        let row_idx = m;
        let mut row = Vec::with_capacity(coeffs.len());
        for &(VarId(j), a) in coeffs {
            if a != 0.0 {
                row.push((j, a));
                self.cols[j].push((row_idx, a));
            }
        }
        self.rows.push(row);
        self.sense.push(sense);
        self.rhs.push(rhs);
        // The new slack enters the basis; the inverse grows by one bordered
        // row/column without a refactor.
        let slack = self.n_struct() + row_idx;
        self.status.push(Status::Basic(row_idx));
        self.basis.push(slack);
        if self.factor_valid && m > 0 {
            let mm = m + 1;
            let mut grown = vec![0.0f64; mm * mm];
            for r in 0..m {
                grown[r * mm..r * mm + m].copy_from_slice(&self.binv[r * m..(r + 1) * m]);
            }
            // Last row: -(coefficients of the new row on basic columns) * Binv.
            let mut w = vec![0.0f64; m];
            for &(j, a) in &self.rows[row_idx] {
                if let Status::Basic(pos) = self.status[j] {
                    if pos < m {
                        w[pos] = a;
                    }
                }
            }
            for k in 0..m {
                let mut acc = 0.0;
                for p in 0..m {
                    if w[p] != 0.0 {
                        acc += w[p] * self.binv[p * m + k];
                    }
                }
                grown[m * mm + k] = -acc;
            }
            grown[m * mm + m] = 1.0;
            self.binv = grown;
            // Slack value keeps the new equation satisfied at the current point.
            let mut activity = 0.0;
            for &(j, a) in &self.rows[row_idx] {
                let v = match self.status[j] {
                    Status::Basic(pos) => self.x_basic[pos],
                    _ => self.nonbasic_value(j),
                };
                activity += a * v;
            }
            self.x_basic.push(rhs - activity);
        } else if self.factor_valid {
            // First row ever with a valid (empty) factorization.
            self.binv = vec![1.0];
            let mut activity = 0.0;
            for &(j, a) in &self.rows[row_idx] {
                activity += a * self.nonbasic_value(j);
            }
            self.x_basic.push(rhs - activity);
        }
        RowId(row_idx)
    }

    fn set_var_bounds(&mut self, var: VarId, lb: f64, ub: f64) {
        debug_assert!(lb <= ub);
        self.lb[var.0] = lb;
        self.ub[var.0] = ub;
        // A nonbasic variable must keep sitting on an existing bound.
        match self.status[var.0] {
            Status::AtLower if !lb.is_finite() => self.status[var.0] = Status::AtUpper,
            Status::AtUpper if !ub.is_finite() => self.status[var.0] = Status::AtLower,
            _ => {}
        }
    }

    fn var_bounds(&self, var: VarId) -> (f64, f64) {
        (self.lb[var.0], self.ub[var.0])
    }

    fn solve(&mut self) -> Result<LpStatus, LpError> {
        for (j, &c) in self.obj.iter().enumerate() {
            if c < 0.0 {
                return Err(LpError::NegativeCost { var: j, coeff: c });
            }
        }
        self.stat_solves += 1;
        if self.m() == 0 {
            // Bounds-only problem: everything sits at its lower bound.
            return Ok(LpStatus::Optimal);
        }
        if !self.factor_valid {
            self.reset_to_slack_basis()?;
        } else {
            self.recompute_basics();
        }
        let mut budget = 50_000 + 200 * self.m();
        let original_budget = budget;
        let iters_before = self.stat_iterations;
        let run = |this: &mut Self, budget: &mut usize| -> Result<LpStatus, LpError> {
            // The incremental inverse drifts over long pivot sequences; a
            // claimed optimum is only accepted once it survives a residual
            // check against a fresh factorization.
            for _attempt in 0..6 {
                let (infeas, _) = this.primal_infeasibility();
                if infeas > FEAS_TOL {
                    match this.dual_simplex(budget)? {
                        LpStatus::Infeasible => return Ok(LpStatus::Infeasible),
                        LpStatus::Optimal => {}
                    }
                }
                this.primal_simplex(budget)?;
                if this.equation_residual() <= 1e-7 {
                    let (infeas, _) = this.primal_infeasibility();
                    if infeas <= FEAS_TOL {
                        return Ok(LpStatus::Optimal);
                    }
                }
                this.refactor()?;
            }
            Err(LpError::NoPivot)
        };
        let outcome = match run(self, &mut budget) {
            Ok(s) => Ok(s),
            Err(LpError::IterationLimit(_)) => Err(LpError::IterationLimit(original_budget)),
            Err(LpError::NoPivot) | Err(LpError::SingularBasis) => {
                // One full restart from the slack basis before giving up.
                self.reset_to_slack_basis()?;
                let mut retry_budget = original_budget;
                run(self, &mut retry_budget)
            }
            Err(e) => Err(e),
        };
        self.stat_worst_solve = self.stat_worst_solve.max(self.stat_iterations - iters_before);
        outcome
    }

    fn objective_value(&self) -> f64 {
        let mut total = 0.0;
        for j in 0..self.n_struct() {
            total += self.obj[j] * self.var_value(VarId(j));
        }
        total
    }

    fn var_value(&self, var: VarId) -> f64 {
        match self.status[var.0] {
            Status::Basic(pos) => self.x_basic[pos],
            Status::AtLower => self.lb[var.0],
            Status::AtUpper => self.ub[var.0],
        }
    }

    fn row_dual(&self, row: RowId) -> f64 {
        self.duals.get(row.0).copied().unwrap_or(0.0)
    }

    fn num_vars(&self) -> usize {
        self.n_struct()
    }

    fn num_rows(&self) -> usize {
        self.m()
    }
}

impl DenseSimplex {
    /// Refreshes the dual vector for the current basis. `solve` leaves duals
    /// from its last pricing pass; callers that read duals right after a
    /// solve can rely on them, this is for callers that changed nothing but
    /// want duals recomputed explicitly.
    pub fn refresh_duals(&mut self) {
        if self.factor_valid {
            self.compute_duals();
        }
    }

    /// Largest violation of `a x + s = b` at the current point, measured
    /// against the original column data rather than the maintained inverse.
    fn equation_residual(&self) -> f64 {
        let m = self.m();
        let mut activity = vec![0.0f64; m];
        for j in 0..self.n_total() {
            let v = match self.status[j] {
                Status::Basic(pos) => self.x_basic[pos],
                _ => self.nonbasic_value(j),
            };
            if v != 0.0 {
                match self.column_iter(j) {
                    ColumnIter::Struct(it) => {
                        for &(r, a) in it {
                            activity[r] += a * v;
                        }
                    }
                    ColumnIter::Slack(Some(r)) => activity[r] += v,
                    ColumnIter::Slack(None) => {}
                }
            }
        }
        let mut worst = 0.0f64;
        for r in 0..m {
            worst = worst.max((activity[r] - self.rhs[r]).abs());
        }
        worst
    }
}
