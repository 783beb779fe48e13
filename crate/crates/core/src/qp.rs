//! Small dense strictly convex QP solver.
//!
//! Problems have the form
//!
//! ```text
//! minimize   1/2 x' H x + g' x        (H positive-definite diagonal)
//! subject to a_j' x >= b_j            (inequality rows only)
//! ```
//!
//! and are solved with a dual active-set iteration: start at the
//! unconstrained minimum, repeatedly add the most violated row (ties broken
//! by lowest index), taking partial steps that drop blocking rows whose
//! multipliers would go negative. The objective never decreases along the
//! way, every intermediate iterate is dual feasible, and infeasibility shows
//! up as an unbounded dual step. Problems here are tiny (a handful of
//! variables, at most [`MAX_ROWS`] rows), so each step re-solves the KKT
//! system densely instead of updating factorizations.
//!
//! [`brute_force_solve`] enumerates active subsets independently and is the
//! testing oracle for the iterative path.

use crate::real::{lit, Real};

/// Hard cap on constraint rows per problem.
pub const MAX_ROWS: usize = 32;
/// Iteration cap before giving up with [`QpStatus::DegenerateFallback`].
pub const MAX_ITER: usize = 200;

/// One inequality row `a' x >= b`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintRow<T> {
    pub a: Vec<T>,
    pub b: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QpProblem<T> {
    /// Diagonal of `H`; strictly positive.
    pub h_diag: Vec<T>,
    /// Linear term `g`.
    pub g: Vec<T>,
    pub rows: Vec<ConstraintRow<T>>,
}

impl<T: Real> QpProblem<T> {
    pub fn n(&self) -> usize {
        self.h_diag.len()
    }

    pub fn objective(&self, x: &[T]) -> T {
        let half = lit::<T>(0.5);
        let mut obj = T::zero();
        for (i, xi) in x.iter().enumerate().take(self.n()) {
            obj += half * self.h_diag[i] * *xi * *xi + self.g[i] * *xi;
        }
        obj
    }

    fn assert_valid(&self) {
        let n = self.n();
        assert_eq!(self.g.len(), n, "g length must match h_diag");
        assert!(
            self.rows.len() <= MAX_ROWS,
            "row count {} exceeds cap {}",
            self.rows.len(),
            MAX_ROWS
        );
        assert!(
            self.h_diag.iter().all(|h| *h > T::zero() && h.is_finite()),
            "H must be positive definite"
        );
        for row in &self.rows {
            assert_eq!(row.a.len(), n, "row width must match decision dimension");
            assert!(
                row.a.iter().all(|v| v.is_finite()) && row.b.is_finite(),
                "rows must be finite"
            );
        }
        assert!(self.g.iter().all(|v| v.is_finite()), "g must be finite");
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QpStatus {
    Optimal,
    /// The rows admit no common point.
    Infeasible,
    /// Iteration cap hit; the solution carries the best iterate seen.
    DegenerateFallback,
}

impl QpStatus {
    pub fn name(&self) -> &'static str {
        match self {
            QpStatus::Optimal => "optimal",
            QpStatus::Infeasible => "infeasible",
            QpStatus::DegenerateFallback => "degenerate_fallback",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KktResiduals<T> {
    /// `|H x + g - sum mu_j a_j|_inf`
    pub stationarity: T,
    /// `max_j max(0, b_j - a_j' x)`
    pub primal: T,
    /// `max_j |mu_j (a_j' x - b_j)|`
    pub complementarity: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QpSolution<T> {
    pub x: Vec<T>,
    /// One multiplier per row, zero on inactive rows.
    pub multipliers: Vec<T>,
    /// Indices of active rows, ascending.
    pub active_set: Vec<usize>,
    pub kkt: KktResiduals<T>,
    pub status: QpStatus,
    pub objective: T,
    pub iterations: usize,
}

/// KKT residual triple for a candidate primal/dual pair.
pub fn kkt_residuals<T: Real>(p: &QpProblem<T>, x: &[T], multipliers: &[T]) -> KktResiduals<T> {
    let n = p.n();
    let mut stationarity = T::zero();
    for (i, xi) in x.iter().enumerate().take(n) {
        let mut lhs = p.h_diag[i] * *xi + p.g[i];
        for (j, row) in p.rows.iter().enumerate() {
            lhs -= multipliers[j] * row.a[i];
        }
        stationarity = stationarity.max(lhs.abs());
    }
    let mut primal = T::zero();
    let mut complementarity = T::zero();
    for (j, row) in p.rows.iter().enumerate() {
        let slack = dot(&row.a, x) - row.b;
        primal = primal.max(-slack);
        complementarity = complementarity.max((multipliers[j] * slack).abs());
    }
    KktResiduals {
        stationarity,
        primal: primal.max(T::zero()),
        complementarity,
    }
}

#[inline]
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (x, y) in a.iter().zip(b) {
        acc += *x * *y;
    }
    acc
}

/// Dense LU solve with partial pivoting and one pass of iterative
/// refinement; `mat` is row-major `dim x dim`. Returns `None` on a
/// numerically singular pivot.
fn lu_solve<T: Real>(mat: &[T], rhs: &[T], dim: usize) -> Option<Vec<T>> {
    let mut lu = mat.to_vec();
    let mut piv = vec![0usize; dim];
    let mut scale = T::zero();
    for v in &lu {
        scale = scale.max(v.abs());
    }
    let tol = scale * T::epsilon() * lit::<T>(64.0) + T::min_positive_value();
    for col in 0..dim {
        let mut p = col;
        let mut best = lu[col * dim + col].abs();
        for r in (col + 1)..dim {
            let v = lu[r * dim + col].abs();
            if v > best {
                best = v;
                p = r;
            }
        }
        if best <= tol {
            return None;
        }
        piv[col] = p;
        if p != col {
            for c in 0..dim {
                lu.swap(col * dim + c, p * dim + c);
            }
        }
        let d = lu[col * dim + col];
        for r in (col + 1)..dim {
            let factor = lu[r * dim + col] / d;
            lu[r * dim + col] = factor;
            if factor == T::zero() {
                continue;
            }
            for c in (col + 1)..dim {
                let v = lu[col * dim + c];
                lu[r * dim + c] -= factor * v;
            }
        }
    }

    let substitute = |b: &[T]| -> Vec<T> {
        let mut y = b.to_vec();
        // The stored L has its rows in the final pivot order, so every
        // interchange must hit the right-hand side before forward
        // substitution starts.
        for (col, &target) in piv.iter().enumerate() {
            y.swap(col, target);
        }
        for col in 0..dim {
            let yc = y[col];
            if yc == T::zero() {
                continue;
            }
            for r in (col + 1)..dim {
                y[r] -= lu[r * dim + col] * yc;
            }
        }
        for col in (0..dim).rev() {
            let mut v = y[col];
            for c in (col + 1)..dim {
                v -= lu[col * dim + c] * y[c];
            }
            y[col] = v / lu[col * dim + col];
        }
        y
    };

    let mut x = substitute(rhs);
    // single refinement pass against the unfactored matrix
    let mut residual = vec![T::zero(); dim];
    for r in 0..dim {
        let mut acc = rhs[r];
        for c in 0..dim {
            acc -= mat[r * dim + c] * x[c];
        }
        residual[r] = acc;
    }
    let correction = substitute(&residual);
    for i in 0..dim {
        x[i] += correction[i];
    }
    Some(x)
}

/// Solve the equality-constrained subproblem with the rows in `active` held
/// at equality. Returns `(x, mu)` or `None` when the active normals are
/// linearly dependent.
fn eqp_solve<T: Real>(p: &QpProblem<T>, active: &[usize]) -> Option<(Vec<T>, Vec<T>)> {
    let n = p.n();
    let k = active.len();
    let dim = n + k;
    let mut mat = vec![T::zero(); dim * dim];
    let mut rhs = vec![T::zero(); dim];
    for i in 0..n {
        mat[i * dim + i] = p.h_diag[i];
        rhs[i] = -p.g[i];
    }
    for (s, &j) in active.iter().enumerate() {
        let row = &p.rows[j];
        for i in 0..n {
            mat[i * dim + n + s] = -row.a[i];
            mat[(n + s) * dim + i] = row.a[i];
        }
        rhs[n + s] = row.b;
    }
    let sol = lu_solve(&mat, &rhs, dim)?;
    Some((sol[..n].to_vec(), sol[n..].to_vec()))
}

/// Step direction when activating the row with normal `a_p`:
/// `H z + A' r = a_p`, `A z = 0`.
fn step_direction<T: Real>(
    p: &QpProblem<T>,
    active: &[usize],
    a_p: &[T],
) -> Option<(Vec<T>, Vec<T>)> {
    let n = p.n();
    let k = active.len();
    let dim = n + k;
    let mut mat = vec![T::zero(); dim * dim];
    let mut rhs = vec![T::zero(); dim];
    for i in 0..n {
        mat[i * dim + i] = p.h_diag[i];
        rhs[i] = a_p[i];
    }
    for (s, &j) in active.iter().enumerate() {
        let row = &p.rows[j];
        for i in 0..n {
            mat[i * dim + n + s] = row.a[i];
            mat[(n + s) * dim + i] = row.a[i];
        }
    }
    let sol = lu_solve(&mat, &rhs, dim)?;
    Some((sol[..n].to_vec(), sol[n..].to_vec()))
}

/// Dual active-set solver with warm starting across calls.
///
/// One instance per simulation run; the warm-start state is just the row
/// index set that was active at the previous solution, so it carries over
/// whenever consecutive problems share their row layout.
#[derive(Clone, Debug, Default)]
pub struct ActiveSetSolver {
    warm: Vec<usize>,
}

impl ActiveSetSolver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Drop the warm-start set; the next solve starts cold.
    pub fn reset(&mut self) {
        self.warm.clear();
    }

    pub fn solve<T: Real>(&mut self, p: &QpProblem<T>) -> QpSolution<T> {
        p.assert_valid();
        let n = p.n();
        let m = p.rows.len();
        let feas_tol = lit::<T>(1e-10).max(T::epsilon() * lit::<T>(32.0));
        // Dependence decisions use sqrt(eps): a direction produced purely by
        // roundoff sits many orders below this, a genuine one many orders
        // above. Rows are normalized to unit inf-norm first so the test has
        // a fixed scale.
        let eps_dep = T::epsilon().sqrt();
        let h_min = p.h_diag.iter().fold(T::infinity(), |acc, h| acc.min(*h));

        // unconstrained minimum; exact for diagonal H
        let mut x: Vec<T> = (0..n).map(|i| -p.g[i] / p.h_diag[i]).collect();

        // Normalize each row to |a|_inf = 1; multipliers are rescaled at the
        // end. A zero row is vacuous when b <= 0 and makes the whole problem
        // infeasible otherwise.
        let mut scales = vec![T::one(); m];
        let mut zero_row_infeasible = false;
        let rows_norm: Vec<ConstraintRow<T>> = p
            .rows
            .iter()
            .enumerate()
            .map(|(j, row)| {
                let s = row.a.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
                if s <= T::min_positive_value() {
                    if row.b > feas_tol {
                        zero_row_infeasible = true;
                    }
                    row.clone()
                } else {
                    scales[j] = s;
                    ConstraintRow {
                        a: row.a.iter().map(|v| *v / s).collect(),
                        b: row.b / s,
                    }
                }
            })
            .collect();
        let pn = QpProblem {
            h_diag: p.h_diag.clone(),
            g: p.g.clone(),
            rows: rows_norm,
        };
        if zero_row_infeasible {
            let full_mu = vec![T::zero(); m];
            let kkt = kkt_residuals(p, &x, &full_mu);
            let objective = p.objective(&x);
            self.warm.clear();
            return QpSolution {
                x,
                multipliers: full_mu,
                active_set: Vec::new(),
                kkt,
                status: QpStatus::Infeasible,
                objective,
                iterations: 0,
            };
        }

        let mut active: Vec<usize> = Vec::new();
        let mut mu: Vec<T> = Vec::new();
        let mut iterations = 0usize;

        // Warm start: re-solve the previous active set, then shed rows whose
        // multipliers come out negative so the dual-feasibility invariant
        // holds before the main loop.
        let warm_ok = !self.warm.is_empty()
            && self.warm.len() <= n
            && self.warm.iter().all(|&j| j < m)
            && self.warm.windows(2).all(|w| w[0] < w[1]);
        if warm_ok {
            let mut trial = self.warm.clone();
            loop {
                if trial.is_empty() {
                    break;
                }
                match eqp_solve(&pn, &trial) {
                    None => {
                        trial.clear();
                        break;
                    }
                    Some((xw, muw)) => {
                        let mut worst = T::zero();
                        let mut worst_at = usize::MAX;
                        for (s, &v) in muw.iter().enumerate() {
                            if v < worst {
                                worst = v;
                                worst_at = s;
                            }
                        }
                        if worst_at == usize::MAX {
                            x = xw;
                            mu = muw;
                            active = trial;
                            break;
                        }
                        trial.remove(worst_at);
                    }
                }
            }
        }

        let x_scale = |x: &[T]| x.iter().fold(T::one(), |acc: T, v| acc.max(v.abs()));
        let mut best_feasible: Option<(Vec<T>, T)> = None;
        let mut note_iterate = |x: &[T]| {
            let mut worst = T::zero();
            for row in &pn.rows {
                worst = worst.max(row.b - dot(&row.a, x));
            }
            if worst <= feas_tol * x_scale(x) {
                let obj = p.objective(x);
                if best_feasible.as_ref().is_none_or(|(_, o)| obj < *o) {
                    best_feasible = Some((x.to_vec(), obj));
                }
            }
        };
        note_iterate(&x);

        let mut refined = false;
        let status = 'outer: loop {
            // most violated row outside the active set, lowest index on
            // ties; the threshold scales with the iterate so roundoff on a
            // large vertex never reads as a violation
            let mut violation = feas_tol * x_scale(&x);
            let mut entering = usize::MAX;
            for (j, row) in pn.rows.iter().enumerate() {
                if active.contains(&j) {
                    continue;
                }
                let v = row.b - dot(&row.a, &x);
                if v > violation {
                    violation = v;
                    entering = j;
                }
            }
            if entering == usize::MAX {
                // Candidate optimum. The incremental updates accumulate
                // roundoff, so re-solve the final working set once and
                // re-verify before declaring optimality.
                if !refined && !active.is_empty() {
                    refined = true;
                    if let Some((xr, mur)) = eqp_solve(&pn, &active) {
                        x = xr;
                        mu = mur;
                        note_iterate(&x);
                        continue;
                    }
                }
                break 'outer QpStatus::Optimal;
            }
            refined = false;
            let a_p = pn.rows[entering].a.clone();
            let b_p = pn.rows[entering].b;
            let mut mu_entering = T::zero();

            loop {
                iterations += 1;
                if iterations > MAX_ITER {
                    break 'outer QpStatus::DegenerateFallback;
                }
                let Some((z, r)) = step_direction(&pn, &active, &a_p) else {
                    // dependent active normals from accumulated roundoff;
                    // shed the most recent row and retry
                    if active.pop().is_some() {
                        mu.pop();
                        continue;
                    }
                    break 'outer QpStatus::DegenerateFallback;
                };
                let apz = dot(&a_p, &z);
                let z_inf = z.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
                let r_scale = r.iter().fold(T::one(), |acc, v| acc.max(v.abs()));

                // blocking active row: first index reaching mu = 0
                let mut t_block = T::infinity();
                let mut blocker = usize::MAX;
                for (s, rv) in r.iter().enumerate() {
                    if *rv > eps_dep * r_scale {
                        let cand = mu[s] / *rv;
                        if cand < t_block {
                            t_block = cand;
                            blocker = s;
                        }
                    }
                }

                // `a_p` has unit inf-norm, so a genuine step direction obeys
                // |z| >= (component outside span of active normals) / |H|;
                // anything at sqrt(eps) scale is numerically dependent.
                if z_inf * h_min.min(T::one()) <= eps_dep + T::min_positive_value() {
                    // no primal progress possible: the entering normal lies
                    // in the span of the active ones
                    if blocker == usize::MAX {
                        break 'outer QpStatus::Infeasible;
                    }
                    for (s, rv) in r.iter().enumerate() {
                        mu[s] -= t_block * *rv;
                    }
                    mu_entering += t_block;
                    active.remove(blocker);
                    mu.remove(blocker);
                    continue;
                }

                let t_full = ((b_p - dot(&a_p, &x)) / apz).max(T::zero());
                if t_block < t_full {
                    for i in 0..n {
                        x[i] += t_block * z[i];
                    }
                    for (s, rv) in r.iter().enumerate() {
                        mu[s] -= t_block * *rv;
                    }
                    mu_entering += t_block;
                    active.remove(blocker);
                    mu.remove(blocker);
                    note_iterate(&x);
                } else {
                    for i in 0..n {
                        x[i] += t_full * z[i];
                    }
                    for (s, rv) in r.iter().enumerate() {
                        mu[s] -= t_full * *rv;
                    }
                    mu_entering += t_full;
                    active.push(entering);
                    mu.push(mu_entering);
                    note_iterate(&x);
                    break;
                }
            }
        };

        if status == QpStatus::DegenerateFallback {
            if let Some((bx, _)) = &best_feasible {
                x = bx.clone();
            }
        }

        // map multipliers onto rows (undoing the row normalization), sort
        // the active set for reporting
        let mut order: Vec<usize> = (0..active.len()).collect();
        order.sort_by_key(|&s| active[s]);
        let mut full_mu = vec![T::zero(); m];
        let mut sorted_active = Vec::with_capacity(active.len());
        for &s in &order {
            sorted_active.push(active[s]);
            full_mu[active[s]] = (mu[s] / scales[active[s]]).max(T::zero());
        }
        self.warm = sorted_active.clone();

        let kkt = kkt_residuals(p, &x, &full_mu);
        let objective = p.objective(&x);
        QpSolution {
            x,
            multipliers: full_mu,
            active_set: sorted_active,
            kkt,
            status,
            objective,
            iterations,
        }
    }
}

/// Exhaustive reference solver: try every active subset of size at most `n`,
/// keep the feasible candidate with nonnegative multipliers and lowest
/// objective. Intended as a test oracle; capped at 12 rows.
pub fn brute_force_solve<T: Real>(p: &QpProblem<T>) -> QpSolution<T> {
    p.assert_valid();
    assert!(p.rows.len() <= 12, "brute force capped at 12 rows");
    let n = p.n();
    let m = p.rows.len();
    let tol = lit::<T>(1e-9);

    let mut best: Option<(Vec<T>, Vec<T>, u32, T)> = None;
    for mask in 0u32..(1u32 << m) {
        if (mask.count_ones() as usize) > n {
            continue;
        }
        let subset: Vec<usize> = (0..m).filter(|j| mask & (1 << j) != 0).collect();
        let Some((x, mu)) = gauss_jordan_eqp(p, &subset) else {
            continue;
        };
        // tolerances scale with the candidate so ill-conditioned vertices
        // are judged relative to their own magnitude
        let scale = x
            .iter()
            .chain(mu.iter())
            .fold(T::one(), |acc: T, v| acc.max(v.abs()));
        if mu.iter().any(|v| *v < -tol * scale) {
            continue;
        }
        let feasible = p
            .rows
            .iter()
            .all(|row| dot(&row.a, &x) >= row.b - tol * scale);
        if !feasible {
            continue;
        }
        let obj = p.objective(&x);
        if best.as_ref().is_none_or(|(_, _, _, o)| obj < *o) {
            let mut full_mu = vec![T::zero(); m];
            for (s, &j) in subset.iter().enumerate() {
                full_mu[j] = mu[s].max(T::zero());
            }
            best = Some((x, full_mu, mask, obj));
        }
    }

    match best {
        Some((x, full_mu, mask, objective)) => {
            let active_set: Vec<usize> = (0..m).filter(|j| mask & (1 << j) != 0).collect();
            let kkt = kkt_residuals(p, &x, &full_mu);
            QpSolution {
                x,
                multipliers: full_mu,
                active_set,
                kkt,
                status: QpStatus::Optimal,
                objective,
                iterations: 0,
            }
        }
        None => {
            let x: Vec<T> = (0..n).map(|i| -p.g[i] / p.h_diag[i]).collect();
            let full_mu = vec![T::zero(); m];
            let kkt = kkt_residuals(p, &x, &full_mu);
            let objective = p.objective(&x);
            QpSolution {
                x,
                multipliers: full_mu,
                active_set: Vec::new(),
                kkt,
                status: QpStatus::Infeasible,
                objective,
                iterations: 0,
            }
        }
    }
}

/// Equality-constrained solve used only by the brute-force oracle; kept as a
/// separate Gauss-Jordan elimination so the oracle shares no code with the
/// iterative path.
fn gauss_jordan_eqp<T: Real>(p: &QpProblem<T>, subset: &[usize]) -> Option<(Vec<T>, Vec<T>)> {
    let n = p.n();
    let k = subset.len();
    let dim = n + k;
    let mut aug = vec![T::zero(); dim * (dim + 1)];
    let width = dim + 1;
    for i in 0..n {
        aug[i * width + i] = p.h_diag[i];
        aug[i * width + dim] = -p.g[i];
    }
    for (s, &j) in subset.iter().enumerate() {
        for i in 0..n {
            aug[i * width + n + s] = -p.rows[j].a[i];
            aug[(n + s) * width + i] = p.rows[j].a[i];
        }
        aug[(n + s) * width + dim] = p.rows[j].b;
    }
    let mut scale = T::zero();
    for r in 0..dim {
        for c in 0..dim {
            scale = scale.max(aug[r * width + c].abs());
        }
    }
    let tol = scale * T::epsilon() * lit::<T>(64.0) + T::min_positive_value();
    for col in 0..dim {
        let mut piv = col;
        let mut bestv = aug[col * width + col].abs();
        for r in (col + 1)..dim {
            let v = aug[r * width + col].abs();
            if v > bestv {
                bestv = v;
                piv = r;
            }
        }
        if bestv <= tol {
            return None;
        }
        if piv != col {
            for c in 0..width {
                aug.swap(col * width + c, piv * width + c);
            }
        }
        let d = aug[col * width + col];
        for c in 0..width {
            aug[col * width + c] /= d;
        }
        for r in 0..dim {
            if r == col {
                continue;
            }
            let f = aug[r * width + col];
            if f == T::zero() {
                continue;
            }
            for c in 0..width {
                let v = aug[col * width + c];
                aug[r * width + c] -= f * v;
            }
        }
    }
    let x = (0..n).map(|i| aug[i * width + dim]).collect();
    let mu = (0..k).map(|s| aug[(n + s) * width + dim]).collect();
    Some((x, mu))
}
