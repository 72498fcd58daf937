//! Exact linear feasibility and optimization over `Ax = b, x >= 0`.
//!
//! Dense two-phase simplex on rationals with Bland's rule. An infeasible
//! system comes back with a Farkas certificate `y` (`Aᵀy <= 0`, `bᵀy > 0`)
//! read off the final phase-one tableau.

use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::model::Distribution;
use crate::rational::{format_rational, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("row {row} has {found} coefficients, expected {expected}")]
    DimensionMismatch { row: usize, expected: usize, found: usize },
    #[error("objective has {found} coefficients, expected {expected}")]
    ObjectiveMismatch { expected: usize, found: usize },
    #[error("the system is infeasible")]
    Infeasible,
    #[error("the objective is unbounded")]
    Unbounded,
    #[error("distributions live on different domains: {0:?} vs {1:?}")]
    DomainMismatch(Vec<usize>, Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub coeffs: Vec<Rational>,
    pub rhs: Rational,
    pub label: String,
}

/// Equality constraints over nonnegative variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearSystem {
    num_vars: usize,
    rows: Vec<Row>,
}

impl LinearSystem {
    pub fn new(num_vars: usize) -> Self {
        LinearSystem { num_vars, rows: Vec::new() }
    }

    pub fn from_rows(num_vars: usize, rows: Vec<(Vec<Rational>, Rational)>) -> Result<Self, LpError> {
        let mut s = LinearSystem::new(num_vars);
        for (coeffs, rhs) in rows {
            s.add_row(coeffs, rhs)?;
        }
        Ok(s)
    }

    pub fn add_row(&mut self, coeffs: Vec<Rational>, rhs: Rational) -> Result<(), LpError> {
        let label = format!("r{}", self.rows.len());
        self.add_labeled_row(coeffs, rhs, label)
    }

    pub fn add_labeled_row(&mut self, coeffs: Vec<Rational>, rhs: Rational, label: String) -> Result<(), LpError> {
        if coeffs.len() != self.num_vars {
            return Err(LpError::DimensionMismatch {
                row: self.rows.len(),
                expected: self.num_vars,
                found: coeffs.len(),
            });
        }
        self.rows.push(Row { coeffs, rhs, label });
        Ok(())
    }

    /// Row with the given variables at coefficient one.
    pub fn add_indicator_row(&mut self, vars: &[usize], rhs: Rational, label: String) {
        let mut coeffs = vec![Rational::zero(); self.num_vars];
        for &v in vars {
            coeffs[v] += Rational::one();
        }
        self.rows.push(Row { coeffs, rhs, label });
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    /// Exact check that `x` is a nonnegative solution.
    pub fn is_solution(&self, x: &[Rational]) -> bool {
        x.len() == self.num_vars
            && x.iter().all(|v| !v.is_negative())
            && self.rows.iter().all(|r| dot(&r.coeffs, x) == r.rhs)
    }

    /// Exact check of a Farkas certificate: `Aᵀy <= 0` and `bᵀy > 0`.
    pub fn is_infeasibility_certificate(&self, y: &[Rational]) -> bool {
        if y.len() != self.rows.len() {
            return false;
        }
        let by = self.rows.iter().zip(y).fold(Rational::zero(), |acc, (r, yi)| acc + &r.rhs * yi);
        if !by.is_positive() {
            return false;
        }
        (0..self.num_vars).all(|j| {
            let s = self.rows.iter().zip(y).fold(Rational::zero(), |acc, (r, yi)| acc + &r.coeffs[j] * yi);
            !s.is_positive()
        })
    }

    /// Plain-text dump: the variable count, then one `c1 c2 ... = b` line per row.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.num_vars);
        for r in &self.rows {
            let cs: Vec<String> = r.coeffs.iter().map(format_rational).collect();
            let _ = writeln!(out, "{} = {}", cs.join(" "), format_rational(&r.rhs));
        }
        out
    }
}

fn dot(a: &[Rational], x: &[Rational]) -> Rational {
    a.iter().zip(x).filter(|(c, _)| !c.is_zero()).fold(Rational::zero(), |acc, (c, v)| acc + c * v)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibilityResult {
    pub feasible: bool,
    /// A nonnegative solution, present iff feasible.
    pub witness: Option<Vec<Rational>>,
    /// Farkas multipliers, present iff infeasible.
    pub certificate: Option<Vec<Rational>>,
}

struct Tableau {
    m: usize,
    n: usize,
    /// m rows of n + m coefficients followed by the right-hand side.
    t: Vec<Vec<Rational>>,
    /// Reduced costs, same width as a row; the last entry is minus the objective.
    d: Vec<Rational>,
    basis: Vec<usize>,
    sign: Vec<bool>,
}

impl Tableau {
    fn phase_one(sys: &LinearSystem) -> Tableau {
        let m = sys.rows.len();
        let n = sys.num_vars;
        let width = n + m + 1;
        let mut t = Vec::with_capacity(m);
        let mut sign = Vec::with_capacity(m);
        for (i, r) in sys.rows.iter().enumerate() {
            let neg = r.rhs.is_negative();
            let mut row = vec![Rational::zero(); width];
            for (j, c) in r.coeffs.iter().enumerate() {
                if !c.is_zero() {
                    row[j] = if neg { -c } else { c.clone() };
                }
            }
            row[n + i] = Rational::one();
            row[width - 1] = if neg { -&r.rhs } else { r.rhs.clone() };
            t.push(row);
            sign.push(neg);
        }
        let mut d = vec![Rational::zero(); width];
        for i in n..n + m {
            d[i] = Rational::one();
        }
        for row in &t {
            for (j, v) in row.iter().enumerate() {
                if !v.is_zero() {
                    d[j] -= v;
                }
            }
        }
        Tableau { m, n, t, d, basis: (n..n + m).collect(), sign }
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let width = self.n + self.m + 1;
        let p = self.t[r][e].clone();
        if !p.is_one() {
            for v in self.t[r].iter_mut() {
                if !v.is_zero() {
                    *v /= &p;
                }
            }
        }
        let nz: Vec<usize> = (0..width).filter(|&j| !self.t[r][j].is_zero()).collect();
        let prow: Vec<(usize, Rational)> = nz.iter().map(|&j| (j, self.t[r][j].clone())).collect();
        for i in 0..self.m {
            if i == r || self.t[i][e].is_zero() {
                continue;
            }
            let f = self.t[i][e].clone();
            for (j, v) in &prow {
                let delta = &f * v;
                self.t[i][*j] -= delta;
            }
        }
        if !self.d[e].is_zero() {
            let f = self.d[e].clone();
            for (j, v) in &prow {
                let delta = &f * v;
                self.d[*j] -= delta;
            }
        }
        self.basis[r] = e;
    }

    /// Runs Bland's rule over columns `< limit` until optimal.
    fn optimize(&mut self, limit: usize) -> Result<(), LpError> {
        let rhs = self.n + self.m;
        loop {
            let Some(e) = (0..limit).find(|&j| self.d[j].is_negative()) else {
                return Ok(());
            };
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..self.m {
                let a = &self.t[i][e];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.t[i][rhs] / a;
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, e),
                None => return Err(LpError::Unbounded),
            }
        }
    }

    fn objective(&self) -> Rational {
        -self.d[self.n + self.m].clone()
    }

    fn primal(&self) -> Vec<Rational> {
        let rhs = self.n + self.m;
        let mut x = vec![Rational::zero(); self.n];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n {
                x[b] = self.t[i][rhs].clone();
            }
        }
        x
    }

    fn farkas(&self) -> Vec<Rational> {
        (0..self.m)
            .map(|i| {
                let y = Rational::one() - &self.d[self.n + i];
                if self.sign[i] {
                    -y
                } else {
                    y
                }
            })
            .collect()
    }
}

/// Decides feasibility of `Ax = b, x >= 0` exactly.
pub fn feasible(sys: &LinearSystem) -> FeasibilityResult {
    let mut tab = Tableau::phase_one(sys);
    tab.optimize(tab.n + tab.m).expect("phase one is bounded below by zero");
    if tab.objective().is_zero() {
        let x = tab.primal();
        debug_assert!(sys.is_solution(&x));
        FeasibilityResult { feasible: true, witness: Some(x), certificate: None }
    } else {
        let y = tab.farkas();
        debug_assert!(sys.is_infeasibility_certificate(&y));
        FeasibilityResult { feasible: false, witness: None, certificate: Some(y) }
    }
}

/// Maximizes `objective · x` over the system; returns the optimum and an
/// optimal point.
pub fn maximize(sys: &LinearSystem, objective: &[Rational]) -> Result<(Rational, Vec<Rational>), LpError> {
    if objective.len() != sys.num_vars {
        return Err(LpError::ObjectiveMismatch { expected: sys.num_vars, found: objective.len() });
    }
    let mut tab = Tableau::phase_one(sys);
    tab.optimize(tab.n + tab.m).expect("phase one is bounded below by zero");
    if !tab.objective().is_zero() {
        return Err(LpError::Infeasible);
    }
    let n = tab.n;
    for i in 0..tab.m {
        if tab.basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| !tab.t[i][j].is_zero()) {
                tab.pivot(i, j);
            }
        }
    }
    let width = n + tab.m + 1;
    let cost = |j: usize| -> Rational {
        if j < n {
            -objective[j].clone()
        } else {
            Rational::zero()
        }
    };
    let mut d: Vec<Rational> = (0..width).map(|j| if j < width - 1 { cost(j) } else { Rational::zero() }).collect();
    for (i, &b) in tab.basis.iter().enumerate() {
        let cb = cost(b);
        if cb.is_zero() {
            continue;
        }
        for (j, v) in tab.t[i].iter().enumerate() {
            if !v.is_zero() {
                d[j] -= &cb * v;
            }
        }
    }
    tab.d = d;
    tab.optimize(n)?;
    let x = tab.primal();
    let value = dot(objective, &x);
    Ok((value, x))
}

fn same_domain(d1: &Distribution, d2: &Distribution) -> Result<(), LpError> {
    if d1.shape() != d2.shape() {
        return Err(LpError::DomainMismatch(d1.shape().to_vec(), d2.shape().to_vec()));
    }
    Ok(())
}

/// Total variation distance, half the L1 distance.
pub fn tv_distance(d1: &Distribution, d2: &Distribution) -> Result<Rational, LpError> {
    same_domain(d1, d2)?;
    let mut sum = Rational::zero();
    for (k, w) in d1.iter() {
        sum += (w - d2.get(k)).abs();
    }
    for (k, w) in d2.iter() {
        if d1.get(k).is_zero() {
            sum += w.abs();
        }
    }
    Ok(sum / Rational::from_integer(2.into()))
}

/// Largest achievable Pr[X = Y] over couplings of the two distributions.
pub fn max_agreement(d1: &Distribution, d2: &Distribution) -> Result<Rational, LpError> {
    same_domain(d1, d2)?;
    Ok(d1.iter().map(|(k, w)| w.clone().min(d2.get(k))).fold(Rational::zero(), |a, b| a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn sys(n: usize, rows: &[(&[i64], i64)]) -> LinearSystem {
        LinearSystem::from_rows(n, rows.iter().map(|(c, b)| (c.iter().map(|&v| int(v)).collect(), int(*b))).collect())
            .unwrap()
    }

    #[test]
    fn balanced_pair_is_feasible() {
        let s = sys(2, &[(&[1, 1], 1), (&[1, -1], 0)]);
        let r = feasible(&s);
        assert!(r.feasible);
        assert_eq!(r.witness.unwrap(), vec![ratio(1, 2), ratio(1, 2)]);
    }

    #[test]
    fn contradictory_rows_are_infeasible_with_certificate() {
        let s = sys(2, &[(&[1, 1], 1), (&[1, 1], 2)]);
        let r = feasible(&s);
        assert!(!r.feasible);
        assert!(s.is_infeasibility_certificate(&r.certificate.unwrap()));
    }

    #[test]
    fn negative_rhs_rows_are_flipped() {
        let s = sys(2, &[(&[-1, -1], -1), (&[1, 0], 2)]);
        let r = feasible(&s);
        assert!(!r.feasible);
        assert!(s.is_infeasibility_certificate(&r.certificate.unwrap()));
    }

    #[test]
    fn simplex_objective() {
        let s = sys(2, &[(&[1, 1], 1)]);
        let (v, x) = maximize(&s, &[int(1), int(0)]).unwrap();
        assert_eq!(v, int(1));
        assert_eq!(x, vec![int(1), int(0)]);
    }

    #[test]
    fn redundant_rows_survive_phase_two() {
        let s = sys(3, &[(&[1, 1, 1], 1), (&[2, 2, 2], 2), (&[1, 0, 0], 0)]);
        let (v, _) = maximize(&s, &[int(0), int(1), int(3)]).unwrap();
        assert_eq!(v, int(3));
    }

    #[test]
    fn unbounded_objective_is_reported() {
        let s = sys(2, &[(&[1, -1], 0)]);
        assert_eq!(maximize(&s, &[int(1), int(1)]), Err(LpError::Unbounded));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let err = LinearSystem::from_rows(2, vec![(vec![int(1)], int(1))]).unwrap_err();
        assert!(matches!(err, LpError::DimensionMismatch { .. }));
    }

    #[test]
    fn text_dump_format() {
        let s = sys(2, &[(&[1, 1], 1)]);
        assert_eq!(s.to_text(), "2\n1 1 = 1\n");
    }

    #[test]
    fn tv_and_agreement() {
        let a = Distribution::from_weights(vec![2], [(vec![0], int(1))]);
        let b = Distribution::from_weights(vec![2], [(vec![1], int(1))]);
        assert_eq!(tv_distance(&a, &b).unwrap(), int(1));
        assert_eq!(max_agreement(&a, &b).unwrap(), int(0));
        let u = Distribution::from_weights(vec![2], [(vec![0], ratio(1, 2)), (vec![1], ratio(1, 2))]);
        assert_eq!(tv_distance(&u, &u).unwrap(), int(0));
        assert_eq!(max_agreement(&u, &u).unwrap(), int(1));
        let c = Distribution::from_weights(vec![3], []);
        assert!(tv_distance(&a, &c).is_err());
    }
}
