//! Shift-operator algebra for the sinh-Gordon L-operator on functions of
//! `(v_1, ..., v_n)`, the monodromy matrix, and the separated eigenstates of
//! `B_n(lambda)` for chains of length two and three.
//!
//! `u_k` acts as `psi(..., v_k, ...) -> psi(..., q v_k, ...)`. Operator
//! coefficients are kept as products of symbolic factors so that composition
//! only shifts their arguments; evaluation is exact apart from the factor values.

use crate::error::{FbaError, Result};
use crate::qspecial::{br, efun_raw, kappa_cg, kappa_const, sigma, QParams};
use crate::quadrature::{family_integral, PoleFamilies};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Monodromy chains are capped at this length (entries have `2^(n-1)` terms each).
pub const MAX_CHAIN: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Factor {
    /// `[lambda (q^qpow v_site)]`, or `[lambda / (q^qpow v_site)]` when `inverse`.
    Bracket { site: usize, lambda: C64, inverse: bool, qpow: i32 },
    /// `E(s, q^qpow v_site)`.
    Efun { site: usize, qpow: i32 },
}

impl Factor {
    fn shifted(self, shifts: &[i32]) -> Self {
        match self {
            Factor::Bracket { site, lambda, inverse, qpow } => {
                Factor::Bracket { site, lambda, inverse, qpow: qpow + shifts[site] }
            }
            Factor::Efun { site, qpow } => Factor::Efun { site, qpow: qpow + shifts[site] },
        }
    }

    fn eval(&self, v: &[C64], p: &QParams) -> C64 {
        match *self {
            Factor::Bracket { site, lambda, inverse, qpow } => {
                let x = p.q.powi(qpow) * v[site];
                if inverse {
                    br(lambda / x)
                } else {
                    br(lambda * x)
                }
            }
            Factor::Efun { site, qpow } => efun_raw(p.s, p.q.powi(qpow) * v[site], p.q),
        }
    }
}

/// `scalar * prod(factors) * u_1^{shifts_1} ... u_n^{shifts_n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftTerm {
    pub scalar: C64,
    pub factors: Vec<Factor>,
    pub shifts: Vec<i32>,
}

impl ShiftTerm {
    pub fn coeff(&self, v: &[C64], p: &QParams) -> C64 {
        self.factors.iter().fold(self.scalar, |acc, f| acc * f.eval(v, p))
    }

    fn compose(&self, rhs: &ShiftTerm) -> ShiftTerm {
        let mut factors = self.factors.clone();
        factors.extend(rhs.factors.iter().map(|f| f.shifted(&self.shifts)));
        let shifts = self.shifts.iter().zip(&rhs.shifts).map(|(a, b)| a + b).collect();
        ShiftTerm { scalar: self.scalar * rhs.scalar, factors, shifts }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorExpr {
    pub n: usize,
    pub terms: Vec<ShiftTerm>,
}

impl OperatorExpr {
    pub fn zero(n: usize) -> Self {
        Self { n, terms: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self::single(n, C64::new(1.0, 0.0), Vec::new(), vec![0; n])
    }

    fn single(n: usize, scalar: C64, factors: Vec<Factor>, shifts: Vec<i32>) -> Self {
        Self { n, terms: vec![ShiftTerm { scalar, factors, shifts }] }
    }

    /// `u_site^k`.
    pub fn shift(n: usize, site: usize, k: i32) -> Self {
        let mut s = vec![0; n];
        s[site] = k;
        Self::single(n, C64::new(1.0, 0.0), Vec::new(), s)
    }

    /// Multiplication by `[lambda v_site]` (or `[lambda / v_site]`).
    pub fn bracket(n: usize, site: usize, lambda: C64, inverse: bool) -> Self {
        Self::single(n, C64::new(1.0, 0.0), vec![Factor::Bracket { site, lambda, inverse, qpow: 0 }], vec![0; n])
    }

    /// Multiplication by `E(s, v_site)`.
    pub fn efun(n: usize, site: usize) -> Self {
        Self::single(n, C64::new(1.0, 0.0), vec![Factor::Efun { site, qpow: 0 }], vec![0; n])
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.scalar *= c;
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.n, rhs.n, "chain lengths differ");
        let mut terms = self.terms.clone();
        terms.extend(rhs.terms.iter().cloned());
        Self { n: self.n, terms }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.scale(C64::new(-1.0, 0.0)))
    }

    /// Operator product `self * rhs` (`rhs` acts first).
    pub fn compose(&self, rhs: &Self) -> Self {
        assert_eq!(self.n, rhs.n, "chain lengths differ");
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for a in &self.terms {
            for b in &rhs.terms {
                terms.push(a.compose(b));
            }
        }
        Self { n: self.n, terms }
    }

    /// `sum_terms coeff(v) f(q^shifts v)`.
    pub fn apply<F>(&self, f: F, point: &[C64], p: &QParams) -> Result<C64>
    where
        F: Fn(&[C64]) -> Result<C64>,
    {
        if point.len() != self.n {
            return Err(FbaError::InvalidParams(format!("point has {} sites, operator {}", point.len(), self.n)));
        }
        let mut acc = C64::new(0.0, 0.0);
        let mut w = point.to_vec();
        for t in &self.terms {
            for (k, &e) in t.shifts.iter().enumerate() {
                w[k] = point[k] * p.q.powi(e);
            }
            acc += t.coeff(point, p) * f(&w)?;
        }
        Ok(acc)
    }
}

/// 2x2 matrix of operators, `[[A, B], [C, D]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OpMatrix {
    pub entries: [[OperatorExpr; 2]; 2],
}

impl OpMatrix {
    pub fn a(&self) -> &OperatorExpr {
        &self.entries[0][0]
    }
    pub fn b(&self) -> &OperatorExpr {
        &self.entries[0][1]
    }
    pub fn c(&self) -> &OperatorExpr {
        &self.entries[1][0]
    }
    pub fn d(&self) -> &OperatorExpr {
        &self.entries[1][1]
    }

    pub fn mul(&self, rhs: &OpMatrix) -> OpMatrix {
        let e = |i: usize, j: usize| {
            self.entries[i][0].compose(&rhs.entries[0][j]).add(&self.entries[i][1].compose(&rhs.entries[1][j]))
        };
        OpMatrix { entries: [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]] }
    }

    /// `A + D`.
    pub fn trace(&self) -> OperatorExpr {
        self.a().add(self.d())
    }
}

/// `L(lambda) = [[ [lambda v], u ], [ E(s, v) u^{-1}, [lambda / v] ]]` on `site` of an `n`-chain.
pub fn lax(lambda: C64, site: usize, n: usize) -> Result<OpMatrix> {
    if lambda == C64::new(0.0, 0.0) {
        return Err(FbaError::Domain("lax at lambda = 0".into()));
    }
    if site >= n {
        return Err(FbaError::InvalidParams(format!("site {site} outside chain of length {n}")));
    }
    let a = OperatorExpr::bracket(n, site, lambda, false);
    let b = OperatorExpr::shift(n, site, 1);
    let c = OperatorExpr::efun(n, site).compose(&OperatorExpr::shift(n, site, -1));
    let d = OperatorExpr::bracket(n, site, lambda, true);
    Ok(OpMatrix { entries: [[a, b], [c, d]] })
}

/// `M_n(lambda) = L_1(lambda) ... L_n(lambda)`.
pub fn monodromy(n: usize, lambda: C64) -> Result<OpMatrix> {
    if !(2..=MAX_CHAIN).contains(&n) {
        return Err(FbaError::SizeCap(format!("monodromy supports 2 <= n <= {MAX_CHAIN}, got {n}")));
    }
    let mut m = lax(lambda, 0, n)?;
    for site in 1..n {
        m = m.mul(&lax(lambda, site, n)?);
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpsilonPair {
    pub eps: i32,
    pub eps_prime: i32,
}

/// `eps_2 = eps_2' = 1`, `eps_{n+1} = eps_n'`, `eps_{n+1}' = (-1)^{n+1} eps_n`.
pub fn epsilon_seq(n: usize) -> Result<EpsilonPair> {
    if n < 2 {
        return Err(FbaError::InvalidParams("epsilon sequence starts at n = 2".into()));
    }
    let (mut e, mut ep) = (1, 1);
    for k in 2..n {
        let sign = if (k + 1) % 2 == 0 { 1 } else { -1 };
        (e, ep) = (ep, sign * e);
    }
    Ok(EpsilonPair { eps: e, eps_prime: ep })
}

/// `(v_1 ... v_n)^m`, the Fourier-charge multiplier of a separated state.
pub fn charge_factor(v: &[C64], m: i32) -> C64 {
    v.iter().product::<C64>().powi(m)
}

/// Two-site separated state `Omega_2(x) = kappa(x v1, v2 / x)`.
pub fn omega2(x: C64, v1: C64, v2: C64, p: &QParams) -> Result<C64> {
    kappa_cg(x * v1, v2 / x, p)
}

/// Pole families in the integration variable of [`omega3`].
pub fn omega3_families(y1: C64, y2: C64, v: &[C64; 3], p: &QParams) -> PoleFamilies {
    let (q, s) = (p.q, p.s);
    PoleFamilies {
        inner: vec![v[1], -q / (v[0] * v[1] * v[2]), y1, y2],
        outer: vec![v[0].inv(), y1 * y2 / v[2], s.inv(), -s / q],
    }
}

/// Three-site separated state, built left to right:
/// `(1/kappa_s) \oint dx/x kappa(x v1, v2/x) kappa(y1 y2 v1 v2, x v3/(y1 y2))
///  sigma(s x)/sigma(s/x) sigma(y1/x) sigma(y2/x)`.
pub fn omega3(y1: C64, y2: C64, v: &[C64; 3], p: &QParams, nodes: usize) -> Result<C64> {
    let (q, s) = (p.q, p.s);
    let y12 = y1 * y2;
    let f = |x: C64| -> Result<C64> {
        Ok(kappa_cg(x * v[0], v[1] / x, p)?
            * kappa_cg(y12 * v[0] * v[1], x * v[2] / y12, p)?
            * sigma(s * x, p)?
            * sigma(-q * x / s, p)?
            * sigma(y1 / x, p)?
            * sigma(y2 / x, p)?)
    };
    Ok(family_integral(f, &omega3_families(y1, y2, v, p), q, nodes)? / kappa_const(p))
}

/// The same state built right to left:
/// `J(s,y1) J(s,y2) (1/kappa_s) \oint dx/x kappa(y1 y2 v1/x, v2 v3/(y1 y2)) kappa(x v2, v3/x)
///  sigma(s/x)/sigma(s x) sigma(x/y1) sigma(x/y2)`.
pub fn omega3_rl(y1: C64, y2: C64, v: &[C64; 3], p: &QParams, nodes: usize) -> Result<C64> {
    let (q, s) = (p.q, p.s);
    let y12 = y1 * y2;
    let fam = PoleFamilies {
        inner: vec![y12 * v[0], v[2], s, -q / s],
        outer: vec![-v[0] * v[1] * v[2] / q, v[1].inv(), y1, y2],
    };
    let f = |x: C64| -> Result<C64> {
        Ok(kappa_cg(y12 * v[0] / x, v[1] * v[2] / y12, p)?
            * kappa_cg(x * v[1], v[2] / x, p)?
            * sigma(s / x, p)?
            * sigma(-q / (s * x), p)?
            * sigma(x / y1, p)?
            * sigma(x / y2, p)?)
    };
    let pref = crate::qspecial::jfun(s, y1, p)? * crate::qspecial::jfun(s, y2, p)?;
    Ok(pref * family_integral(f, &fam, q, nodes)? / kappa_const(p))
}

/// Relative residuals of the three separated-state relations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateResiduals {
    pub b_residual: f64,
    pub a_residual: f64,
    pub d_residual: f64,
}

impl StateResiduals {
    pub fn max(&self) -> f64 {
        self.b_residual.max(self.a_residual).max(self.d_residual)
    }
}

/// `|x| + 1/|x|`: size of the two terms of `[x]`, used to scale the `B` residuals
/// so that they stay meaningful when the eigenvalue itself nearly cancels.
fn bracket_scale(x: C64) -> f64 {
    x.norm() + 1.0 / x.norm()
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Checks on `Omega_2(x)`:
/// `B_2(lambda) Omega_2 = [lambda/x] Omega_2`,
/// `A_2(x) Omega_2(x) = E(s, 1/x) Omega_2(q x)`,
/// `D_2(x) Omega_2(x) = E(s, x) Omega_2(x/q)`.
pub fn statement1_n2(x: C64, v: &[C64; 2], lambda: C64, p: &QParams) -> Result<StateResiduals> {
    let q = p.q;
    let state = |xx: C64| move |w: &[C64]| omega2(xx, w[0], w[1], p);
    let m = monodromy(2, lambda)?;
    let b = m.b().apply(state(x), v, p)?;
    let om = omega2(x, v[0], v[1], p)?;
    let b_rhs = br(lambda / x) * om;
    let b_scale = bracket_scale(lambda / x) * om.norm();
    let mx = monodromy(2, x)?;
    let a = mx.a().apply(state(x), v, p)?;
    let a_rhs = efun_raw(p.s, x.inv(), q) * omega2(q * x, v[0], v[1], p)?;
    let d = mx.d().apply(state(x), v, p)?;
    let d_rhs = efun_raw(p.s, x, q) * omega2(x / q, v[0], v[1], p)?;
    Ok(StateResiduals { b_residual: (b - b_rhs).norm() / b_scale, a_residual: rel(a, a_rhs), d_residual: rel(d, d_rhs) })
}

/// Checks on `Omega_3(y1, y2)` with the signs `eps_3` and `eps_3'`:
/// `B_3(lambda) Omega_3 = eps_3 [lambda/y1][lambda/y2] Omega_3`,
/// `A_3(y1) Omega_3 = eps_3' E(s, 1/y1) Omega_3(q y1, y2)`,
/// `D_3(y1) Omega_3 = eps_2 E(s, y1)^2 Omega_3(y1/q, y2)`.
pub fn statement1_n3(y: [C64; 2], v: &[C64; 3], lambda: C64, p: &QParams, nodes: usize) -> Result<StateResiduals> {
    let q = p.q;
    let eps3 = epsilon_seq(3)?;
    let eps2 = epsilon_seq(2)?;
    let state = |y1: C64, y2: C64| move |w: &[C64]| omega3(y1, y2, &[w[0], w[1], w[2]], p, nodes);
    let om = omega3(y[0], y[1], v, p, nodes)?;
    let m = monodromy(3, lambda)?;
    let b = m.b().apply(state(y[0], y[1]), v, p)?;
    let b_rhs = eps3.eps as f64 * br(lambda / y[0]) * br(lambda / y[1]) * om;
    let b_scale = bracket_scale(lambda / y[0]) * bracket_scale(lambda / y[1]) * om.norm();
    let my = monodromy(3, y[0])?;
    let a = my.a().apply(state(y[0], y[1]), v, p)?;
    let a_rhs = eps3.eps_prime as f64 * efun_raw(p.s, y[0].inv(), q) * omega3(q * y[0], y[1], v, p, nodes)?;
    let d = my.d().apply(state(y[0], y[1]), v, p)?;
    let e = efun_raw(p.s, y[0], q);
    let d_rhs = eps2.eps as f64 * e * e * omega3(y[0] / q, y[1], v, p, nodes)?;
    Ok(StateResiduals { b_residual: (b - b_rhs).norm() / b_scale, a_residual: rel(a, a_rhs), d_residual: rel(d, d_rhs) })
}
