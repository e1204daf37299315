//! A thin builder over the Clarabel interior-point solver.
//!
//! Constraints are written as affine expressions placed in cones; the builder
//! turns them into Clarabel's `A x + s = b, s ∈ K` form.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};

use crate::error::{Error, Result};

/// An affine expression `c + Σ a_i x_i`.
#[derive(Clone, Debug, Default)]
pub(crate) struct Affine {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl Affine {
    pub fn var(i: usize) -> Self {
        Self { terms: vec![(i, 1.0)], constant: 0.0 }
    }

    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Kind {
    Zero,
    Nonneg,
}

pub(crate) struct ConicProgram {
    n: usize,
    q: Vec<f64>,
    rows_i: Vec<usize>,
    rows_j: Vec<usize>,
    rows_v: Vec<f64>,
    b: Vec<f64>,
    cones: Vec<SupportedConeT<f64>>,
    last: Option<Kind>,
}

pub(crate) struct ConicSolution {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub objective: f64,
    pub accurate: bool,
}

impl ConicProgram {
    pub fn new() -> Self {
        Self {
            n: 0,
            q: Vec::new(),
            rows_i: Vec::new(),
            rows_j: Vec::new(),
            rows_v: Vec::new(),
            b: Vec::new(),
            cones: Vec::new(),
            last: None,
        }
    }

    /// Adds `k` variables with zero cost; returns the first index.
    pub fn add_vars(&mut self, k: usize) -> usize {
        let first = self.n;
        self.n += k;
        self.q.resize(self.n, 0.0);
        first
    }

    pub fn set_cost(&mut self, i: usize, c: f64) {
        self.q[i] = c;
    }

    /// Appends a row with slack `s = e(x)`, returning its index.
    fn push_row(&mut self, e: &Affine) -> usize {
        let r = self.b.len();
        for &(j, a) in &e.terms {
            self.rows_i.push(r);
            self.rows_j.push(j);
            self.rows_v.push(-a);
        }
        self.b.push(e.constant);
        r
    }

    fn push_scalar(&mut self, e: &Affine, kind: Kind) -> usize {
        let r = self.push_row(e);
        match (self.last, self.cones.last_mut()) {
            (Some(k), Some(SupportedConeT::ZeroConeT(n))) if k == kind && kind == Kind::Zero => *n += 1,
            (Some(k), Some(SupportedConeT::NonnegativeConeT(n))) if k == kind && kind == Kind::Nonneg => *n += 1,
            _ => {
                self.cones.push(match kind {
                    Kind::Zero => SupportedConeT::ZeroConeT(1),
                    Kind::Nonneg => SupportedConeT::NonnegativeConeT(1),
                });
                self.last = Some(kind);
            }
        }
        r
    }

    /// `e(x) = 0`.
    pub fn eq(&mut self, e: Affine) -> usize {
        self.push_scalar(&e, Kind::Zero)
    }

    /// `e(x) >= 0`.
    pub fn nonneg(&mut self, e: Affine) -> usize {
        self.push_scalar(&e, Kind::Nonneg)
    }

    /// `e_0 >= ‖(e_1, …)‖_2`.
    pub fn soc(&mut self, es: &[Affine]) {
        for e in es {
            self.push_row(e);
        }
        self.cones.push(SupportedConeT::SecondOrderConeT(es.len()));
        self.last = None;
    }

    /// `a^α b^{1-α} >= |c|` with `a, b >= 0`.
    pub fn pow(&mut self, a: Affine, b: Affine, c: Affine, alpha: f64) {
        self.push_row(&a);
        self.push_row(&b);
        self.push_row(&c);
        self.cones.push(SupportedConeT::PowerConeT(alpha));
        self.last = None;
    }

    /// Minimizes `q·x` over the constraints.
    pub fn solve(&self, tolerance: f64) -> Result<ConicSolution> {
        let m = self.b.len();
        let a = CscMatrix::new_from_triplets(m, self.n, self.rows_i.clone(), self.rows_j.clone(), self.rows_v.clone());
        let p = CscMatrix::zeros((self.n, self.n));
        let settings = DefaultSettings {
            verbose: false,
            max_iter: 200,
            tol_gap_abs: tolerance,
            tol_gap_rel: tolerance,
            tol_feas: tolerance,
            presolve_enable: false,
            ..DefaultSettings::default()
        };
        let mut solver = DefaultSolver::new(&p, &self.q, &a, &self.b, &self.cones, settings)
            .map_err(|e| Error::Solver(format!("{e:?}")))?;
        solver.solve();
        let sol = &solver.solution;
        let accurate = matches!(sol.status, SolverStatus::Solved);
        if !matches!(sol.status, SolverStatus::Solved | SolverStatus::AlmostSolved) {
            return Err(Error::Solver(format!("status {:?}", sol.status)));
        }
        Ok(ConicSolution { x: sol.x.clone(), z: sol.z.clone(), objective: sol.obj_val, accurate })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lp() {
        // max x + y s.t. x + 2y <= 4, 3x + y <= 6, x, y >= 0
        let mut prog = ConicProgram::new();
        let x = prog.add_vars(2);
        prog.set_cost(x, -1.0);
        prog.set_cost(x + 1, -1.0);
        let r0 = prog.nonneg(Affine { terms: vec![(x, -1.0), (x + 1, -2.0)], constant: 4.0 });
        let r1 = prog.nonneg(Affine { terms: vec![(x, -3.0), (x + 1, -1.0)], constant: 6.0 });
        prog.nonneg(Affine::var(x));
        prog.nonneg(Affine::var(x + 1));
        let sol = prog.solve(1e-9).unwrap();
        assert!((sol.objective + 2.8).abs() < 1e-7, "{}", sol.objective);
        // both constraints active, duals are the LP shadow prices 0.4 and 0.2
        assert!((sol.z[r0] - 0.4).abs() < 1e-6 && (sol.z[r1] - 0.2).abs() < 1e-6, "{:?}", sol.z);
    }

    #[test]
    fn power_cone_norm() {
        // min t s.t. ‖(3, 4)‖_3 <= t via ρ_i with Σ ρ_i = t, (ρ_i, t, a_i) in K_pow(1/3)
        let mut prog = ConicProgram::new();
        let t = prog.add_vars(1);
        let rho = prog.add_vars(2);
        prog.set_cost(t, 1.0);
        prog.eq(Affine { terms: vec![(rho, 1.0), (rho + 1, 1.0), (t, -1.0)], constant: 0.0 });
        for (i, a) in [3.0, 4.0].into_iter().enumerate() {
            prog.pow(Affine::var(rho + i), Affine::var(t), Affine::constant(a), 1.0 / 3.0);
        }
        let sol = prog.solve(1e-9).unwrap();
        let want = (27.0_f64 + 64.0).powf(1.0 / 3.0);
        assert!((sol.objective - want).abs() < 1e-6, "{} vs {want}", sol.objective);
    }

    #[test]
    fn second_order_cone() {
        let mut prog = ConicProgram::new();
        let t = prog.add_vars(1);
        prog.set_cost(t, 1.0);
        prog.soc(&[Affine::var(t), Affine::constant(3.0), Affine::constant(4.0)]);
        let sol = prog.solve(1e-9).unwrap();
        assert!((sol.objective - 5.0).abs() < 1e-6);
    }
}
