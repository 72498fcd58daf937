//! Fourier–Motzkin elimination over exact rationals, used as an independent
//! oracle for the simplex code. Equalities are eliminated by substitution
//! before any pairing of inequalities, and Chernikov's rule (an inequality
//! derived from more than k + 1 originals after k pairing rounds is
//! redundant) keeps the pairing rounds small.

use std::collections::HashSet;

use contextuality::lp::LinearSystem;
use contextuality::rational::Rational;
use num_traits::{Signed, Zero};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum Kind {
    Eq,
    Le,
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
struct Constraint {
    kind: Kind,
    a: Vec<Rational>,
    b: Rational,
    /// Original inequalities this one was combined from.
    hist: u64,
}

impl Constraint {
    /// Scales so the first nonzero coefficient has absolute value one
    /// (sign kept for inequalities), making duplicates comparable.
    fn normalized(mut self) -> Self {
        if let Some(p) = self.a.iter().find(|v| !v.is_zero()).cloned() {
            let s = match self.kind {
                Kind::Eq => p,
                Kind::Le => p.abs(),
            };
            self.a.iter_mut().for_each(|v| *v /= &s);
            self.b /= &s;
        }
        self
    }

    fn is_trivial(&self) -> bool {
        self.a.iter().all(Zero::is_zero)
    }

    fn holds_trivially(&self) -> bool {
        match self.kind {
            Kind::Eq => self.b.is_zero(),
            Kind::Le => !self.b.is_negative(),
        }
    }
}

/// `self + k * other`, both read as `a·v (op) b`.
fn combine(x: &Constraint, k: &Rational, y: &Constraint, kind: Kind) -> Constraint {
    Constraint {
        kind,
        a: x.a.iter().zip(&y.a).map(|(u, v)| u + k * v).collect(),
        b: &x.b + k * &y.b,
        hist: x.hist | y.hist,
    }
}

struct Problem {
    cons: Vec<Constraint>,
    rounds: u32,
}

impl Problem {
    /// `Ax = b`, `x >= 0` on the system's variables, plus `extra` free
    /// variables appended at the end with zero coefficients.
    fn of(sys: &LinearSystem, extra: usize) -> Self {
        let n = sys.num_vars() + extra;
        let mut cons = Vec::new();
        for r in sys.rows() {
            let mut a = r.coeffs.clone();
            a.resize(n, Rational::zero());
            cons.push(Constraint { kind: Kind::Eq, a, b: r.rhs.clone(), hist: 0 });
        }
        for j in 0..sys.num_vars() {
            let mut a = vec![Rational::zero(); n];
            a[j] = Rational::from_integer((-1).into());
            cons.push(Constraint { kind: Kind::Le, a, b: Rational::zero(), hist: 1 << j });
        }
        Problem { cons, rounds: 0 }
    }

    fn eliminate(&mut self, j: usize) {
        if let Some(pos) = self.cons.iter().position(|c| c.kind == Kind::Eq && !c.a[j].is_zero()) {
            let e = self.cons.swap_remove(pos);
            let next = self
                .cons
                .iter()
                .map(|c| if c.a[j].is_zero() { c.clone() } else { combine(c, &(-&c.a[j] / &e.a[j]), &e, c.kind) })
                .collect();
            self.cons = next;
        } else {
            let (mut pos, mut neg, mut rest) = (Vec::new(), Vec::new(), Vec::new());
            for c in self.cons.drain(..) {
                if c.a[j].is_positive() {
                    pos.push(c);
                } else if c.a[j].is_negative() {
                    neg.push(c);
                } else {
                    rest.push(c);
                }
            }
            self.rounds += 1;
            for p in &pos {
                for q in &neg {
                    if (p.hist | q.hist).count_ones() > self.rounds + 1 {
                        continue;
                    }
                    // p / p_j + q / |q_j| cancels v_j.
                    let k = &p.a[j] / -&q.a[j];
                    rest.push(combine(p, &k, q, Kind::Le));
                }
            }
            self.cons = rest;
        }
        self.tidy();
    }

    /// Among `vars`, the one whose elimination creates the fewest new rows.
    fn cheapest(&self, vars: &[usize]) -> usize {
        let cost = |j: usize| {
            if self.cons.iter().any(|c| c.kind == Kind::Eq && !c.a[j].is_zero()) {
                return 0;
            }
            let p = self.cons.iter().filter(|c| c.a[j].is_positive()).count();
            let n = self.cons.iter().filter(|c| c.a[j].is_negative()).count();
            1 + p * n
        };
        *vars.iter().min_by_key(|&&j| cost(j)).unwrap()
    }

    fn eliminate_all(&mut self, n: usize) {
        let mut left: Vec<usize> = (0..n).collect();
        while !left.is_empty() && !self.contradictory() {
            let j = self.cheapest(&left);
            left.retain(|&x| x != j);
            self.eliminate(j);
        }
    }

    fn tidy(&mut self) {
        let mut seen = HashSet::new();
        let cons = std::mem::take(&mut self.cons);
        for c in cons {
            let c = c.normalized();
            if c.is_trivial() && c.holds_trivially() {
                continue;
            }
            if seen.insert((c.kind, c.a.clone(), c.b.clone())) {
                self.cons.push(c);
            }
        }
    }

    fn contradictory(&self) -> bool {
        self.cons.iter().any(|c| c.is_trivial() && !c.holds_trivially())
    }
}

/// Whether `Ax = b, x >= 0` has a solution.
pub fn feasible(sys: &LinearSystem) -> bool {
    let mut p = Problem::of(sys, 0);
    p.tidy();
    p.eliminate_all(sys.num_vars());
    !p.contradictory()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Optimum {
    Infeasible,
    Unbounded,
    Value(Rational),
}

/// Supremum of `c·x` over the system, by projecting onto `t = c·x`.
pub fn maximize(sys: &LinearSystem, c: &[Rational]) -> Optimum {
    if !feasible(sys) {
        return Optimum::Infeasible;
    }
    let n = sys.num_vars();
    let mut p = Problem::of(sys, 1);
    let mut a: Vec<Rational> = c.iter().map(|v| -v).collect();
    a.push(Rational::from_integer(1.into()));
    p.cons.push(Constraint { kind: Kind::Eq, a, b: Rational::zero(), hist: 0 });
    p.tidy();
    p.eliminate_all(n);
    let mut best: Option<Rational> = None;
    for con in &p.cons {
        let at = &con.a[n];
        let bound = &con.b / at;
        match con.kind {
            Kind::Eq => return Optimum::Value(bound),
            Kind::Le if at.is_positive() => {
                best = Some(match best {
                    Some(v) if v < bound => v,
                    _ => bound,
                })
            }
            Kind::Le => {}
        }
    }
    best.map_or(Optimum::Unbounded, Optimum::Value)
}
