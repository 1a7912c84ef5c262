//! Small dense linear programs.
//!
//! A two-phase tableau simplex with Dantzig pricing and a switch to Bland's rule
//! after a streak of degenerate pivots. Every row gets an artificial column so
//! that the simplex multipliers can be read off the final tableau.
//!
//! Cutting-plane models are tall: a handful of variables and many rows. For
//! those the solver works on the dual tableau instead, whose row count is the
//! number of variables. [`Strategy::Auto`] picks the cheaper of the two.

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-10;
const DEGENERATE_STREAK: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Strategy {
    #[default]
    Auto,
    Primal,
    Dual,
}

#[derive(Clone, Debug)]
struct Row {
    coefs: Vec<(usize, f64)>,
    relation: Relation,
    rhs: f64,
}

#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rows: Vec<Row>,
    strategy: Strategy,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Sensitivity of the optimal objective to each row's right-hand side.
    pub row_duals: Vec<f64>,
}

#[derive(Clone, Debug)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a variable with bounds `lower <= x <= upper`; either bound may be infinite.
    pub fn add_var(&mut self, lower: f64, upper: f64, cost: f64) -> usize {
        assert!(lower <= upper, "empty variable range [{lower}, {upper}]");
        assert!(lower < f64::INFINITY && upper > f64::NEG_INFINITY);
        self.cost.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.cost.len() - 1
    }

    pub fn add_free_var(&mut self, cost: f64) -> usize {
        self.add_var(f64::NEG_INFINITY, f64::INFINITY, cost)
    }

    pub fn add_nonneg_var(&mut self, cost: f64) -> usize {
        self.add_var(0.0, f64::INFINITY, cost)
    }

    pub fn set_cost(&mut self, var: usize, cost: f64) {
        self.cost[var] = cost;
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_row(&mut self, coefs: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> usize {
        assert!(rhs.is_finite(), "row right-hand side must be finite");
        debug_assert!(coefs
            .iter()
            .all(|&(j, a)| j < self.cost.len() && a.is_finite()));
        self.rows.push(Row {
            coefs,
            relation,
            rhs,
        });
        self.rows.len() - 1
    }

    pub fn set_strategy(&mut self, strategy: Strategy) {
        self.strategy = strategy;
    }

    pub fn minimize(&self) -> LpOutcome {
        let use_dual = match self.strategy {
            Strategy::Primal => false,
            Strategy::Dual => true,
            Strategy::Auto => self.dual_is_cheaper(),
        };
        if use_dual && !self.cost.is_empty() {
            match self.solve_dual() {
                Some(outcome) => outcome,
                None => self.solve_primal(),
            }
        } else {
            self.solve_primal()
        }
    }

    pub fn maximize(&self) -> LpOutcome {
        let mut neg = self.clone();
        neg.cost.iter_mut().for_each(|c| *c = -*c);
        match neg.minimize() {
            LpOutcome::Optimal(mut s) => {
                s.objective = -s.objective;
                s.row_duals.iter_mut().for_each(|y| *y = -*y);
                LpOutcome::Optimal(s)
            }
            other => other,
        }
    }

    fn objective_at(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    fn dual_is_cheaper(&self) -> bool {
        let n = self.cost.len();
        let mut primal_cols = 0usize;
        let mut box_rows = 0usize;
        let mut finite_bounds = 0usize;
        for j in 0..n {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            match (lo.is_finite(), hi.is_finite()) {
                (true, true) => {
                    primal_cols += 1;
                    box_rows += 1;
                    finite_bounds += 2;
                }
                (true, false) | (false, true) => {
                    primal_cols += 1;
                    finite_bounds += 1;
                }
                (false, false) => primal_cols += 2,
            }
        }
        let eq_rows = self
            .rows
            .iter()
            .filter(|r| r.relation == Relation::Eq)
            .count();
        let m_p = (self.rows.len() + box_rows) as f64;
        let n_p = (primal_cols + self.rows.len() - eq_rows + box_rows) as f64;
        let m_d = n as f64;
        let n_d = (self.rows.len() + eq_rows + finite_bounds) as f64;
        m_d * m_d * (n_d + m_d) < m_p * m_p * (n_p + m_p)
    }

    fn solve_primal(&self) -> LpOutcome {
        enum Map {
            Shift(usize, f64),
            Reflect(usize, f64),
            Split(usize, usize),
        }
        let n = self.cost.len();
        let mut maps = Vec::with_capacity(n);
        let mut ncols = 0;
        let mut box_rows = Vec::new();
        for j in 0..n {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo.is_finite() {
                maps.push(Map::Shift(ncols, lo));
                if hi.is_finite() {
                    box_rows.push((ncols, hi - lo));
                }
                ncols += 1;
            } else if hi.is_finite() {
                maps.push(Map::Reflect(ncols, hi));
                ncols += 1;
            } else {
                maps.push(Map::Split(ncols, ncols + 1));
                ncols += 2;
            }
        }
        let slacks = self
            .rows
            .iter()
            .filter(|r| r.relation != Relation::Eq)
            .count()
            + box_rows.len();
        let m = self.rows.len() + box_rows.len();
        let width = ncols + slacks;
        let mut a = vec![0.0; m * width];
        let mut b = vec![0.0; m];
        let mut slack = ncols;
        for (r, row) in self.rows.iter().enumerate() {
            let mut rhs = row.rhs;
            for &(j, coef) in &row.coefs {
                match maps[j] {
                    Map::Shift(col, lo) => {
                        a[r * width + col] += coef;
                        rhs -= coef * lo;
                    }
                    Map::Reflect(col, hi) => {
                        a[r * width + col] -= coef;
                        rhs -= coef * hi;
                    }
                    Map::Split(p, q) => {
                        a[r * width + p] += coef;
                        a[r * width + q] -= coef;
                    }
                }
            }
            match row.relation {
                Relation::Le => {
                    a[r * width + slack] = 1.0;
                    slack += 1;
                }
                Relation::Ge => {
                    a[r * width + slack] = -1.0;
                    slack += 1;
                }
                Relation::Eq => {}
            }
            b[r] = rhs;
        }
        for (k, &(col, range)) in box_rows.iter().enumerate() {
            let r = self.rows.len() + k;
            a[r * width + col] = 1.0;
            a[r * width + slack] = 1.0;
            slack += 1;
            b[r] = range;
        }
        let mut c = vec![0.0; width];
        for (j, map) in maps.iter().enumerate() {
            match *map {
                Map::Shift(col, _) => c[col] = self.cost[j],
                Map::Reflect(col, _) => c[col] = -self.cost[j],
                Map::Split(p, q) => {
                    c[p] = self.cost[j];
                    c[q] = -self.cost[j];
                }
            }
        }
        match solve_standard(m, width, a, b, &c) {
            StandardOutcome::Optimal { y, duals } => {
                let x: Vec<f64> = maps
                    .iter()
                    .map(|map| match *map {
                        Map::Shift(col, lo) => lo + y[col],
                        Map::Reflect(col, hi) => hi - y[col],
                        Map::Split(p, q) => y[p] - y[q],
                    })
                    .collect();
                let objective = self.objective_at(&x);
                let row_duals = duals[..self.rows.len()].to_vec();
                LpOutcome::Optimal(LpSolution {
                    x,
                    objective,
                    row_duals,
                })
            }
            StandardOutcome::Infeasible => LpOutcome::Infeasible,
            StandardOutcome::Unbounded => LpOutcome::Unbounded,
            StandardOutcome::IterationLimit => LpOutcome::IterationLimit,
        }
    }

    /// Solves the dual tableau. `None` means the dual is infeasible, which leaves
    /// the primal either unbounded or infeasible; the caller then falls back to
    /// the primal tableau to tell the two apart.
    fn solve_dual(&self) -> Option<LpOutcome> {
        enum Source {
            Row(usize, f64),
            Bound,
        }
        let n = self.cost.len();
        // Columns of the dual: (coefficients over primal vars, right-hand side, origin).
        let mut cols: Vec<(Vec<(usize, f64)>, f64, Source)> = Vec::new();
        for (r, row) in self.rows.iter().enumerate() {
            match row.relation {
                Relation::Ge => cols.push((row.coefs.clone(), row.rhs, Source::Row(r, 1.0))),
                Relation::Le => {
                    let neg = row.coefs.iter().map(|&(j, a)| (j, -a)).collect();
                    cols.push((neg, -row.rhs, Source::Row(r, -1.0)));
                }
                Relation::Eq => {
                    let neg = row.coefs.iter().map(|&(j, a)| (j, -a)).collect();
                    cols.push((row.coefs.clone(), row.rhs, Source::Row(r, 1.0)));
                    cols.push((neg, -row.rhs, Source::Row(r, -1.0)));
                }
            }
        }
        for j in 0..n {
            if self.lower[j].is_finite() {
                cols.push((vec![(j, 1.0)], self.lower[j], Source::Bound));
            }
            if self.upper[j].is_finite() {
                cols.push((vec![(j, -1.0)], -self.upper[j], Source::Bound));
            }
        }
        let width = cols.len();
        let mut a = vec![0.0; n * width];
        let mut c = vec![0.0; width];
        for (k, (coefs, rhs, _)) in cols.iter().enumerate() {
            for &(j, v) in coefs {
                a[j * width + k] += v;
            }
            c[k] = -rhs;
        }
        match solve_standard(n, width, a, self.cost.clone(), &c) {
            StandardOutcome::Optimal { y, duals } => {
                let x: Vec<f64> = duals.iter().map(|p| -p).collect();
                let mut row_duals = vec![0.0; self.rows.len()];
                for (k, (_, _, src)) in cols.iter().enumerate() {
                    if let Source::Row(r, sign) = *src {
                        row_duals[r] += sign * y[k];
                    }
                }
                let objective = self.objective_at(&x);
                Some(LpOutcome::Optimal(LpSolution {
                    x,
                    objective,
                    row_duals,
                }))
            }
            StandardOutcome::Unbounded => Some(LpOutcome::Infeasible),
            StandardOutcome::Infeasible => None,
            StandardOutcome::IterationLimit => Some(LpOutcome::IterationLimit),
        }
    }
}

enum StandardOutcome {
    Optimal { y: Vec<f64>, duals: Vec<f64> },
    Infeasible,
    Unbounded,
    IterationLimit,
}

struct Tableau {
    rows: usize,
    width: usize,
    t: Vec<f64>,
    z: Vec<f64>,
    basis: Vec<usize>,
    pivot_row: Vec<f64>,
}

enum Run {
    Optimal,
    Unbounded,
    IterationLimit,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.t[r * self.width + self.width - 1]
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let w = self.width;
        let piv = self.t[r * w + j];
        for k in 0..w {
            self.t[r * w + k] /= piv;
        }
        self.t[r * w + j] = 1.0;
        self.pivot_row.clear();
        self.pivot_row
            .extend_from_slice(&self.t[r * w..(r + 1) * w]);
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.t[i * w + j];
            if f != 0.0 {
                let row = &mut self.t[i * w..(i + 1) * w];
                for (v, p) in row.iter_mut().zip(&self.pivot_row) {
                    *v -= f * p;
                }
                row[j] = 0.0;
            }
        }
        let f = self.z[j];
        if f != 0.0 {
            for (v, p) in self.z.iter_mut().zip(&self.pivot_row) {
                *v -= f * p;
            }
            self.z[j] = 0.0;
        }
        self.basis[r] = j;
    }

    /// Runs simplex pivots with entering candidates restricted to `0..allowed`.
    fn run(&mut self, allowed: usize, max_iter: usize, iter: &mut usize) -> Run {
        let w = self.width;
        let mut degenerate = 0usize;
        loop {
            if *iter >= max_iter {
                return Run::IterationLimit;
            }
            let bland = degenerate > DEGENERATE_STREAK;
            let mut enter = None;
            let mut best = -COST_TOL;
            for j in 0..allowed {
                let d = self.z[j];
                if d < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(j) = enter else { return Run::Optimal };
            let mut leave: Option<(usize, f64, f64)> = None;
            for r in 0..self.rows {
                let a = self.t[r * w + j];
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(r).max(0.0) / a;
                leave = match leave {
                    None => Some((r, ratio, a)),
                    Some((br, bratio, ba)) => {
                        let tie = (ratio - bratio).abs() <= 1e-12 * bratio.max(1.0);
                        let better = if tie {
                            if bland {
                                self.basis[r] < self.basis[br]
                            } else {
                                a > ba
                            }
                        } else {
                            ratio < bratio
                        };
                        if better {
                            Some((r, ratio, a))
                        } else {
                            Some((br, bratio, ba))
                        }
                    }
                };
            }
            let Some((r, ratio, _)) = leave else {
                return Run::Unbounded;
            };
            if ratio <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, j);
            *iter += 1;
        }
    }
}

/// `min c.y  s.t.  A y = b, y >= 0` with `A` dense row-major `m x n`.
fn solve_standard(
    m: usize,
    n: usize,
    mut a: Vec<f64>,
    mut b: Vec<f64>,
    c: &[f64],
) -> StandardOutcome {
    let mut factor = vec![1.0; m];
    for r in 0..m {
        let row = &mut a[r * n..(r + 1) * n];
        let scale = row.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let mut f = if scale > 0.0 { 1.0 / scale } else { 1.0 };
        if b[r] * f < 0.0 {
            f = -f;
        }
        row.iter_mut().for_each(|v| *v *= f);
        b[r] *= f;
        factor[r] = f;
    }
    let width = n + m + 1;
    let mut t = vec![0.0; m * width];
    for r in 0..m {
        t[r * width..r * width + n].copy_from_slice(&a[r * n..(r + 1) * n]);
        t[r * width + n + r] = 1.0;
        t[r * width + width - 1] = b[r];
    }
    let mut z = vec![0.0; width];
    for r in 0..m {
        for k in 0..n {
            z[k] -= t[r * width + k];
        }
        z[width - 1] -= b[r];
    }
    let mut tab = Tableau {
        rows: m,
        width,
        t,
        z,
        basis: (n..n + m).collect(),
        pivot_row: Vec::new(),
    };
    let max_iter = 50 * (m + n) + 1000;
    let mut iter = 0;

    match tab.run(n, max_iter, &mut iter) {
        Run::Optimal => {}
        Run::IterationLimit => return StandardOutcome::IterationLimit,
        Run::Unbounded => unreachable!("phase one is bounded below by zero"),
    }
    let bmax = b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if -tab.z[width - 1] > 1e-9 * (1.0 + bmax) {
        return StandardOutcome::Infeasible;
    }
    for r in 0..m {
        if tab.basis[r] < n {
            continue;
        }
        let mut best = None;
        let mut best_abs = PIVOT_TOL;
        for k in 0..n {
            let v = tab.t[r * width + k].abs();
            if v > best_abs {
                best_abs = v;
                best = Some(k);
            }
        }
        if let Some(k) = best {
            tab.pivot(r, k);
        }
    }

    tab.z.iter_mut().for_each(|v| *v = 0.0);
    tab.z[..n].copy_from_slice(c);
    for r in 0..m {
        let j = tab.basis[r];
        let cb = if j < n { c[j] } else { 0.0 };
        if cb != 0.0 {
            for k in 0..width {
                tab.z[k] -= cb * tab.t[r * width + k];
            }
        }
    }
    for r in 0..m {
        let j = tab.basis[r];
        tab.z[j] = 0.0;
    }
    match tab.run(n, max_iter, &mut iter) {
        Run::Optimal => {}
        Run::Unbounded => return StandardOutcome::Unbounded,
        Run::IterationLimit => return StandardOutcome::IterationLimit,
    }
    let mut y = vec![0.0; n];
    for r in 0..m {
        if tab.basis[r] < n {
            y[tab.basis[r]] = tab.rhs(r).max(0.0);
        }
    }
    let duals = (0..m).map(|r| -tab.z[n + r] * factor[r]).collect();
    StandardOutcome::Optimal { y, duals }
}
