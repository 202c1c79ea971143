//! Entire solutions of the Baxter TQ equation
//!
//! `T(z) H(z) = (-1)^n (1 - s z)^n (1 + q z/s)^n H(q z) + (1 - s/z)^n (1 + q/(s z))^n H(z/q)`
//!
//! built from the holomorphic pair `chi_+` (series in `z^2`) and `chi_-`
//! (series in `z^-2`). Quantization is the requirement that the ratio
//! `C(z) = H_+(z)/H_-(z)` takes one common value at all zeros of the
//! Wronskian `W_chi`, which makes `H = (H_+ - C H_-)/V` entire.

use crate::error::{FbaError, Result};
use crate::laurent::LaurentPoly;
use crate::qspecial::{br, qp, sigma, theta_h, QParams};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Serialize, Serializer};
use std::f64::consts::PI;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

fn pair<S: Serializer>(c: &C64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [c.re, c.im].serialize(s)
}

fn pairs<S: Serializer>(cs: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
    cs.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>().serialize(s)
}

/// `q^(m/2)` on the principal branch.
pub fn q_half_power(q: C64, m: u32) -> C64 {
    q.sqrt().powi(m as i32)
}

/// Transfer-matrix eigenvalue `T(z) = sum_j t_j z^j`, `j in {-n, -n+2, ..., n}`,
/// with pinned edges `t_n = v + 1/v`, `t_{-n} = (-1)^n (v + 1/v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferPoly {
    pub n: usize,
    pub m_charge: u32,
    pub v_total: C64,
    coeffs: Vec<C64>,
}

impl TransferPoly {
    /// Sector with total `v`; `interior` holds `t_{-n+2}, ..., t_{n-2}`.
    pub fn new(n: usize, m_charge: u32, v_total: C64, interior: &[C64]) -> Result<Self> {
        if n < 1 {
            return Err(FbaError::InvalidParams("chain length must be positive".into()));
        }
        if interior.len() != n - 1 {
            return Err(FbaError::InvalidParams(format!("{} interior coefficients for n = {n}", interior.len())));
        }
        let edge = v_total + v_total.inv();
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let mut coeffs = Vec::with_capacity(n + 1);
        coeffs.push(sign * edge);
        coeffs.extend_from_slice(interior);
        coeffs.push(edge);
        Ok(Self { n, m_charge, v_total, coeffs })
    }

    /// Unitary ground sector `v = 1`.
    pub fn ground(n: usize, interior: &[C64]) -> Result<Self> {
        Self::new(n, 0, ONE, interior)
    }

    /// Dual sector `v = q^(m/2)`.
    pub fn dual(n: usize, m: u32, q: C64, interior: &[C64]) -> Result<Self> {
        Self::new(n, m, q_half_power(q, m), interior)
    }

    /// `t_j` (zero off the parity lattice).
    pub fn coeff(&self, j: i32) -> C64 {
        let n = self.n as i32;
        if j < -n || j > n || (j + n) % 2 != 0 {
            return ZERO;
        }
        self.coeffs[((j + n) / 2) as usize]
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn interior(&self) -> &[C64] {
        &self.coeffs[1..self.n]
    }

    pub fn with_interior(&self, interior: &[C64]) -> Result<Self> {
        Self::new(self.n, self.m_charge, self.v_total, interior)
    }

    pub fn eval(&self, z: C64) -> C64 {
        if z.norm() > 1.0 {
            self.eval_lowered(z) * z.powi(self.n as i32)
        } else {
            self.eval_raised(z) * z.powi(-(self.n as i32))
        }
    }

    /// `z^n T(z)`, a polynomial in `z^2`.
    pub fn eval_raised(&self, z: C64) -> C64 {
        let z2 = z * z;
        self.coeffs.iter().rev().fold(ZERO, |acc, c| acc * z2 + c)
    }

    /// `z^-n T(z)`, a polynomial in `z^-2`.
    pub fn eval_lowered(&self, z: C64) -> C64 {
        let w = (z * z).inv();
        self.coeffs.iter().fold(ZERO, |acc, c| acc * w + c)
    }

    pub fn to_laurent(&self) -> LaurentPoly {
        let n = self.n as i32;
        let mut c = vec![ZERO; 2 * self.n + 1];
        for (i, t) in self.coeffs.iter().enumerate() {
            c[2 * i] = *t;
        }
        LaurentPoly::from_coeffs(-n, c)
    }
}

/// Evaluators for `chi_+` and `chi_-` of a given `T`.
#[derive(Debug, Clone)]
pub struct HolomorphicPair {
    pub t: TransferPoly,
    pub p: QParams,
    pub margin: usize,
    qm2: C64,
    qm: C64,
}

/// Factors kept beyond the point where the tail drops below `trunc_tol`.
pub const DEFAULT_MARGIN: usize = 3;

impl HolomorphicPair {
    pub fn new(t: TransferPoly, p: QParams) -> Self {
        Self::with_margin(t, p, DEFAULT_MARGIN)
    }

    pub fn with_margin(t: TransferPoly, p: QParams, margin: usize) -> Self {
        let qm2 = q_half_power(p.q, t.m_charge);
        let qm = p.q.powi(t.m_charge as i32);
        Self { t, p, margin, qm2, qm }
    }

    /// Number of factors `K` for `chi_+` at `z`: the product starts at `q^K z`,
    /// which must satisfy `|q^K z|^2 < trunc_tol`.
    fn depth_at(&self, z: C64) -> usize {
        let need = -0.5 * self.p.trunc_tol.ln() + z.norm().ln();
        let k = (need / -self.p.q.norm().ln()).ceil().max(0.0) as usize;
        k + self.margin
    }

    /// `(chi_+(z/q), chi_+(z))` from the truncated product `L(z) L(q z) ... L(q^K z) (1, 1)`.
    pub fn chi_plus_pair(&self, z: C64) -> (C64, C64) {
        let (q, s, n) = (self.p.q, self.p.s, self.t.n as i32);
        let k = self.depth_at(z);
        let (mut a, mut b) = (ONE, ONE);
        let mut x = z * q.powi(k as i32);
        for _ in 0..=k {
            let p = if n % 2 == 0 { ONE } else { -ONE } * self.qm2 * self.t.eval_raised(x);
            let x2 = x * x;
            let r = ((1.0 - s * s * x2) * (1.0 - q * q * x2 / (s * s))).powi(n);
            (a, b) = (p * a - self.qm * r * b, a);
            x /= q;
        }
        (a, b)
    }

    /// `(chi_-(q z), chi_-(z))` from `M(z) M(z/q) ... M(z/q^K) (1, 1)`.
    pub fn chi_minus_pair(&self, z: C64) -> (C64, C64) {
        let (q, s, n) = (self.p.q, self.p.s, self.t.n as i32);
        let k = self.depth_at(z.inv());
        let (mut a, mut b) = (ONE, ONE);
        let mut x = z / q.powi(k as i32);
        for _ in 0..=k {
            let p = self.qm2 * self.t.eval_lowered(x);
            let x2 = x * x;
            let r = ((1.0 - s * s / x2) * (1.0 - q * q / (s * s * x2))).powi(n);
            (a, b) = (p * a - self.qm * r * b, a);
            x *= q;
        }
        (a, b)
    }

    pub fn chi_plus(&self, z: C64) -> C64 {
        self.chi_plus_pair(z).1
    }

    pub fn chi_minus(&self, z: C64) -> C64 {
        self.chi_minus_pair(z).1
    }

    /// `W_chi(z) = chi_+(z/q) chi_-(z) - q^(n+m) [z/s]^n [q/(s z)]^n chi_+(z) chi_-(z/q)`.
    pub fn wronskian(&self, z: C64) -> C64 {
        let (q, s, n) = (self.p.q, self.p.s, self.t.n as i32);
        let (cp_down, cp) = self.chi_plus_pair(z);
        let (cm, cm_down) = self.chi_minus_pair(z / q);
        let b = (br(z / s) * br(q / (s * z))).powi(n);
        cp_down * cm - q.powi(n) * self.qm * b * cp * cm_down
    }

    /// Prefactor ratio of `H_+/H_-` without the `chi` factors.
    fn ratio_prefactor(&self, z: C64) -> Result<C64> {
        let n = self.t.n as i32;
        let sig = sigma(self.p.s * z, &self.p)? * sigma(-self.p.q * z / self.p.s, &self.p)?;
        let mono = if self.t.m_charge == 0 { (-z).powi(n) } else { z.powi(n + self.t.m_charge as i32) };
        Ok(mono * sig.powi(n))
    }

    /// `C(z) = H_+(z)/H_-(z)`.
    pub fn c_ratio(&self, z: C64) -> Result<C64> {
        let cm = self.chi_minus(z);
        if cm.norm() < f64::MIN_POSITIVE {
            return Err(FbaError::Domain(format!("chi_- vanishes at {z}")));
        }
        Ok(self.ratio_prefactor(z)? * self.chi_plus(z) / cm)
    }
}

pub fn chi_plus_eval(z: C64, t: &TransferPoly, p: &QParams, margin: usize) -> Result<C64> {
    let hp = HolomorphicPair::with_margin(t.clone(), *p, margin);
    let (down, here) = hp.chi_plus_pair(z);
    // gluing: the first component is the value one step further out
    let shifted = hp.chi_plus(z / p.q);
    if !here.is_finite() || (down - shifted).norm() > 1e-8 * (1.0 + shifted.norm()) {
        return Err(FbaError::NoConvergence(format!("chi_+ gluing mismatch at {z}")));
    }
    Ok(here)
}

pub fn chi_minus_eval(z: C64, t: &TransferPoly, p: &QParams, margin: usize) -> Result<C64> {
    let hp = HolomorphicPair::with_margin(t.clone(), *p, margin);
    let (up, here) = hp.chi_minus_pair(z);
    let shifted = hp.chi_minus(z * p.q);
    if !here.is_finite() || (up - shifted).norm() > 1e-8 * (1.0 + shifted.norm()) {
        return Err(FbaError::NoConvergence(format!("chi_- gluing mismatch at {z}")));
    }
    Ok(here)
}

pub fn wronskian_chi(z: C64, hp: &HolomorphicPair) -> C64 {
    hp.wronskian(z)
}

pub fn c_ratio(z: C64, hp: &HolomorphicPair) -> Result<C64> {
    hp.c_ratio(z)
}

/// Representative of `w` under `w -> q w` with `|w|` in `(|q|^(1/2), |q|^(-1/2)]`.
pub fn fundamental_domain(w: C64, q: C64) -> C64 {
    let r = q.norm().sqrt();
    let mut w = w;
    for _ in 0..200 {
        if w.norm() <= r {
            w /= q;
        } else if w.norm() > 1.0 / r {
            w *= q;
        } else {
            break;
        }
    }
    w
}

fn min_separation(w: &[C64]) -> f64 {
    let mut d = f64::INFINITY;
    for i in 0..w.len() {
        for j in i + 1..w.len() {
            d = d.min((w[i] - w[j]).norm());
        }
    }
    d
}

fn newton_zero<F: Fn(C64) -> C64>(f: &F, z0: C64) -> Result<C64> {
    let mut z = z0;
    for _ in 0..60 {
        let h = 1e-7 * z.norm().max(1.0);
        let fz = f(z);
        let d = (f(z + h) - f(z - h)) / (2.0 * h);
        if !(d.is_finite() && fz.is_finite()) || d.norm() == 0.0 {
            return Err(FbaError::NoConvergence(format!("Wronskian Newton stalled near {z}")));
        }
        let dz = fz / d;
        z -= dz;
        if dz.norm() < 1e-14 * z.norm().max(1.0) {
            return Ok(z);
        }
    }
    // limit cycles at the rounding floor are accepted if the residual is small
    let scale = f(z * 1.01).norm().max(f(z * 0.99).norm());
    if f(z).norm() <= 1e-10 * scale {
        Ok(z)
    } else {
        Err(FbaError::NoConvergence(format!("Wronskian zero near {z0}")))
    }
}

/// Newton-polished zeros of `W_chi`, one per seed, mapped to the fundamental domain.
pub fn find_wronskian_zeros(hp: &HolomorphicPair, seeds: &[C64]) -> Result<Vec<C64>> {
    let f = |z: C64| hp.wronskian(z);
    let mut out = Vec::with_capacity(seeds.len());
    for &s0 in seeds {
        // W is even, so a root landing on the mirror -w of another is a collision too
        let hit = |z: C64| {
            out.iter().flat_map(|w: &C64| [*w, -*w]).find(|c| (fundamental_domain(*c, hp.p.q) - z).norm() < 1e-8 * (1.0 + z.norm()))
        };
        let mut z = fundamental_domain(newton_zero(&f, s0)?, hp.p.q);
        if hit(z).is_some() {
            // off the quantization locus a colliding pair can split along the
            // symmetry axis; deflate the taken zero and look for its partner
            let raw = newton_zero(&f, s0)?;
            let g = |x: C64| f(x) / (x - raw);
            let start = if (s0 - raw).norm() > 1e-6 { s0 } else { s0 * C64::new(1.0, 1e-3) };
            z = fundamental_domain(newton_zero(&g, start)?, hp.p.q);
            if let Some(other) = hit(z) {
                return Err(FbaError::ZeroCollision(format!("{other}")));
            }
        }
        out.push(z);
    }
    Ok(out)
}

/// Bethe equations at a candidate `T`.
#[derive(Debug, Clone)]
pub struct BetheResidual {
    /// `C(w_j)/C(w_n) - 1` for `j < n`.
    pub equations: Vec<C64>,
    pub roots: Vec<C64>,
    pub c_values: Vec<C64>,
}

impl BetheResidual {
    pub fn moduli(&self) -> Vec<f64> {
        self.equations.iter().map(|e| e.norm()).collect()
    }

    pub fn max(&self) -> f64 {
        self.equations.iter().map(|e| e.norm()).fold(0.0, f64::max)
    }
}

pub fn bethe_equations(hp: &HolomorphicPair, seeds: &[C64]) -> Result<BetheResidual> {
    let roots = find_wronskian_zeros(hp, seeds)?;
    let c_values = roots.iter().map(|&w| hp.c_ratio(w)).collect::<Result<Vec<_>>>()?;
    let last = *c_values.last().ok_or_else(|| FbaError::InvalidParams("no roots".into()))?;
    let equations = c_values[..c_values.len() - 1].iter().map(|c| c / last - 1.0).collect();
    Ok(BetheResidual { equations, roots, c_values })
}

/// `|C(w_j) - C(w_n)| / |C(w_n)|`, zeros tracked from `seeds`.
pub fn bethe_residual(t: &TransferPoly, p: &QParams, margin: usize, seeds: &[C64]) -> Result<Vec<f64>> {
    let hp = HolomorphicPair::with_margin(t.clone(), *p, margin);
    Ok(bethe_equations(&hp, seeds)?.moduli())
}

/// Roots of the ground state at `q = 0`: `(s - w_k)/(1 - s w_k) = e^{2 pi i (k+1/2)/n}`.
pub fn tropical_roots(n: usize, s: C64) -> Vec<C64> {
    (0..n)
        .map(|k| {
            let t = C64::from_polar(1.0, 2.0 * PI * (k as f64 + 0.5) / n as f64);
            (s - t) / (1.0 - s * t)
        })
        .collect()
}

/// Ground-state `T_0` at `q = 0` from
/// `(-z)^n T_0(z) = (1 - s^{2n}) prod (1 - z^2/w_k^2) + (1 - s^2 z^2)^n + (s^2 - z^2)^n`.
pub fn tropical_transfer(n: usize, s: C64) -> TransferPoly {
    let w = tropical_roots(n, s);
    let mut prod = LaurentPoly::constant(1.0);
    for wk in &w {
        prod = &prod * &LaurentPoly::from_coeffs(0, vec![ONE, ZERO, -1.0 / (wk * wk)]);
    }
    let s2 = s * s;
    let a = prod.scale(1.0 - s2.powi(n as i32));
    let b = LaurentPoly::from_coeffs(0, vec![ONE, ZERO, -s2]).pow(n as u32);
    let c = LaurentPoly::from_coeffs(0, vec![s2, ZERO, -ONE]).pow(n as u32);
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let t = (&(&a + &b) + &c).shift(-(n as i32)).scale(sign);
    let interior: Vec<C64> = (1..n).map(|i| t.coeff(-(n as i32) + 2 * i as i32)).collect();
    TransferPoly::ground(n, &interior).expect("interior length matches")
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificates {
    pub baxter_grid_residual: f64,
    pub pole_residuals: Vec<f64>,
    pub wronskian_scatter: f64,
}

/// A quantized transfer polynomial together with its roots and certificates.
#[derive(Debug, Clone, Serialize)]
pub struct BetheSolution {
    pub n: usize,
    #[serde(serialize_with = "pair")]
    pub q: C64,
    #[serde(serialize_with = "pair")]
    pub s: C64,
    pub m: u32,
    #[serde(serialize_with = "pair")]
    pub v: C64,
    #[serde(serialize_with = "pairs")]
    pub t: Vec<C64>,
    #[serde(serialize_with = "pairs")]
    pub w: Vec<C64>,
    #[serde(rename = "C", serialize_with = "pair")]
    pub c: C64,
    pub residuals: Vec<f64>,
    #[serde(serialize_with = "pair")]
    pub wronskian_const: C64,
    pub certificates: Certificates,
    #[serde(skip)]
    pub transfer: TransferPoly,
    #[serde(skip)]
    pub params: QParams,
}

impl BetheSolution {
    pub fn root_product(&self) -> C64 {
        self.w.iter().product()
    }
}

/// Solver controls for [`solve_ground_with`].
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub q_start: f64,
    pub q_steps: usize,
    pub tol: f64,
    pub max_newton: usize,
    pub fd_step: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { q_start: 1e-6, q_steps: 16, tol: 1e-12, max_newton: 50, fd_step: 1e-7 }
    }
}

/// A stalled Newton iteration is accepted within this factor of the tolerance.
const STALL_FLOOR: f64 = 100.0;

struct NewtonState {
    t: TransferPoly,
    res: BetheResidual,
}

fn solve_linear(j: &DMatrix<C64>, f: &DVector<C64>) -> Option<DVector<C64>> {
    let d = j.clone().lu().solve(f)?;
    d.iter().all(|x| x.is_finite()).then_some(d)
}

fn newton_at(p: &QParams, start: NewtonState, opts: &SolveOptions) -> Result<NewtonState> {
    let mut st = start;
    let nfree = st.t.n - 1;
    let mut r = st.res.max();
    for _ in 0..opts.max_newton {
        if r < opts.tol {
            return Ok(st);
        }
        let hp_roots = st.res.roots.clone();
        let sep = min_separation(&hp_roots);
        let f0 = DVector::from_vec(st.res.equations.clone());
        let mut jac = DMatrix::from_element(nfree, nfree, ZERO);
        for i in 0..nfree {
            let mut x = st.t.interior().to_vec();
            let h = opts.fd_step * x[i].norm().max(1.0);
            x[i] += h;
            let hp = HolomorphicPair::new(st.t.with_interior(&x)?, *p);
            let fi = bethe_equations(&hp, &hp_roots)?;
            for k in 0..nfree {
                jac[(k, i)] = (fi.equations[k] - f0[k]) / h;
            }
        }
        let d = solve_linear(&jac, &f0).ok_or(FbaError::Singular)?;
        let mut lam = 1.0;
        let mut accepted = None;
        while lam > 1.0 / 64.0 {
            let x: Vec<C64> = st.t.interior().iter().zip(d.iter()).map(|(a, b)| a - lam * b).collect();
            let t = st.t.with_interior(&x)?;
            let hp = HolomorphicPair::new(t.clone(), *p);
            if let Ok(res) = bethe_equations(&hp, &hp_roots) {
                let moved = res.roots.iter().zip(&hp_roots).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                let rn = res.max();
                if rn.is_finite() && rn < r && moved < 0.25 * sep {
                    accepted = Some(NewtonState { t, res });
                    break;
                }
            }
            lam *= 0.5;
        }
        match accepted {
            Some(next) => {
                r = next.res.max();
                st = next;
            }
            // stalled at the rounding floor
            None if r < STALL_FLOOR * opts.tol => return Ok(st),
            None => return Err(FbaError::NoConvergence(format!("damped Newton stalled at residual {r:.3e}"))),
        }
    }
    if r < opts.tol {
        Ok(st)
    } else {
        Err(FbaError::NoConvergence(format!("Newton budget exhausted at residual {r:.3e}")))
    }
}

/// Ground state (`v = 1`, `m = 0`) by continuation in `q` from the tropical seed.
pub fn solve_ground(n: usize, p: &QParams, q_steps: usize) -> Result<BetheSolution> {
    solve_ground_with(n, p, &SolveOptions { q_steps, ..Default::default() })
}

pub fn solve_ground_with(n: usize, p: &QParams, opts: &SolveOptions) -> Result<BetheSolution> {
    if n < 2 {
        return Err(FbaError::InvalidParams("solve_ground needs n >= 2".into()));
    }
    let qt = p.q;
    if !(qt.norm() > 0.0 && qt.norm() <= 0.3) {
        return Err(FbaError::InvalidParams(format!("|q| = {} outside (0, 0.3]", qt.norm())));
    }
    let dir = qt / qt.norm();
    let (l0, l1) = (opts.q_start.min(qt.norm()).ln(), qt.norm().ln());
    let mut t = tropical_transfer(n, p.s);
    let mut roots = tropical_roots(n, p.s);
    let mut cur = l0;
    let mut step = if l1 > l0 { (l1 - l0) / opts.q_steps.max(1) as f64 } else { 0.0 };
    let mut first = true;
    let mut jumped = false;
    let mut last_good = 0.0;
    let mut state: Option<NewtonState> = None;
    while first || cur < l1 - 1e-14 {
        let next = if first { l0 } else { (cur + step).min(l1) };
        let pq = p.rebase(dir * next.exp(), p.s)?;
        let attempt = (|| -> Result<NewtonState> {
            let hp = HolomorphicPair::new(t.clone(), pq);
            let res = bethe_equations(&hp, &roots)?;
            let moved = res.roots.iter().zip(&roots).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            if moved > 0.25 * min_separation(&roots) {
                return Err(FbaError::NoConvergence("root tracking jump".into()));
            }
            let st = newton_at(&pq, NewtonState { t: t.clone(), res }, opts)?;
            spot_check(&st, pq)?;
            Ok(st)
        })();
        match attempt {
            Ok(st) => {
                t = st.t.clone();
                roots = st.res.roots.clone();
                cur = next;
                last_good = next.exp();
                state = Some(st);
                if !first {
                    step *= 1.5;
                }
                first = false;
                jumped = false;
            }
            Err(e) => {
                if first {
                    return Err(FbaError::Homotopy { last_good_q: 0.0, reason: e.to_string() });
                }
                // a root meeting the mirror of another (a double zero of the even W)
                // is crossed by stepping past it; shrinking only lands closer
                if jumped {
                    step *= 0.5;
                } else {
                    step *= 3.0;
                    jumped = true;
                }
                if step < 1e-4 {
                    return Err(FbaError::Homotopy { last_good_q: last_good, reason: e.to_string() });
                }
            }
        }
    }
    let st = state.expect("at least one continuation step");
    certify(st.t, *p, st.res)
}

/// Cheap Baxter check on 8 points: rejects a quantization that satisfies the
/// Bethe equations with the wrong root labelling.
fn spot_check(st: &NewtonState, p: QParams) -> Result<()> {
    let c = *st.res.c_values.last().ok_or_else(|| FbaError::InvalidParams("no roots".into()))?;
    let h = EntireH { hp: HolomorphicPair::new(st.t.clone(), p), roots: st.res.roots.clone(), c };
    for k in 0..8 {
        let z = C64::from_polar(if k % 2 == 0 { 0.9 } else { 1.1 }, 2.0 * PI * (k as f64 + 0.27) / 8.0);
        let e = h.baxter_residual_at(z);
        if !(e <= CERT_TOL) {
            return Err(FbaError::NoConvergence(format!("spurious quantization (Baxter residual {e:.2e})")));
        }
    }
    Ok(())
}

/// Certificates above this mark a spurious quantization.
pub const CERT_TOL: f64 = 1e-8;

fn certify(t: TransferPoly, p: QParams, res: BetheResidual) -> Result<BetheSolution> {
    let c = *res.c_values.last().unwrap();
    let hp = HolomorphicPair::new(t.clone(), p);
    let h = EntireH { hp: hp.clone(), roots: res.roots.clone(), c };
    let pole_residuals = h.pole_residuals()?;
    let baxter = h.baxter_grid_residual()?;
    if baxter > CERT_TOL || pole_residuals.iter().any(|r| *r > CERT_TOL) {
        return Err(FbaError::NoConvergence(format!("quantized T fails its certificate (Baxter residual {baxter:.3e})")));
    }
    let (wconst, scatter) = if t.m_charge == 0 { wronskian_fit(|z| h.eval(z), t.n, &p)? } else { (ZERO, f64::NAN) };
    Ok(BetheSolution {
        n: t.n,
        q: p.q,
        s: p.s,
        m: t.m_charge,
        v: t.v_total,
        t: t.coeffs().to_vec(),
        w: res.roots.clone(),
        c,
        residuals: res.moduli(),
        wronskian_const: wconst,
        certificates: Certificates { baxter_grid_residual: baxter, pole_residuals, wronskian_scatter: scatter },
        transfer: t,
        params: p,
    })
}

/// `H(z) = (H_+(z) - C H_-(z)) / V(z)` for a quantized `T`.
///
/// In a charged sector the monomial `z^(-m/2)` common to `H_+` and `H_-` is
/// stripped, so the stored function is `z^(m/2) H(z)`.
#[derive(Debug, Clone)]
pub struct EntireH {
    pub hp: HolomorphicPair,
    pub roots: Vec<C64>,
    pub c: C64,
}

impl EntireH {
    pub fn from_solution(sol: &BetheSolution) -> Self {
        Self { hp: HolomorphicPair::new(sol.transfer.clone(), sol.params), roots: sol.w.clone(), c: sol.c }
    }

    fn parts(&self, z: C64) -> (C64, C64, C64) {
        let p = &self.hp.p;
        let (q, s, tol) = (p.q, p.s, p.trunc_tol);
        let n = self.hp.t.n as i32;
        let m = self.hp.t.m_charge as i32;
        let mono = if m == 0 { (-z).powi(n) } else { z.powi(n + m) };
        let hplus = mono * (qp(s / z, q, tol) * qp(-q / (s * z), q, tol)).powi(n) * self.hp.chi_plus(z);
        let hminus = (qp(s * z, q, tol) * qp(-q * z / s, q, tol)).powi(n) * self.hp.chi_minus(z);
        let v: C64 = self.roots.iter().map(|w| qp(z / w, q, tol) * qp(q * w / z, q, tol)).product();
        (hplus, hminus, v)
    }

    pub fn eval(&self, z: C64) -> C64 {
        let (hp, hm, v) = self.parts(z);
        (hp - self.c * hm) / v
    }

    /// `H_+` alone over `V`: solves the Baxter equation but is not entire.
    pub fn eval_plus_only(&self, z: C64) -> C64 {
        let (hp, _, v) = self.parts(z);
        hp / v
    }

    /// `|C(w_k) - C| / |C|`.
    pub fn pole_residuals(&self) -> Result<Vec<f64>> {
        self.roots.iter().map(|&w| Ok((self.hp.c_ratio(w)? - self.c).norm() / self.c.norm())).collect()
    }

    /// Relative residual of the Baxter equation at `z`.
    pub fn baxter_residual_at(&self, z: C64) -> f64 {
        let p = &self.hp.p;
        let (q, s) = (p.q, p.s);
        let n = self.hp.t.n as i32;
        let qm2 = q_half_power(q, self.hp.t.m_charge);
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let a = sign * ((1.0 - s * z) * (1.0 + q * z / s)).powi(n) / qm2;
        let d = ((1.0 - s / z) * (1.0 + q / (s * z))).powi(n) * qm2;
        let lhs = self.hp.t.eval(z) * self.eval(z);
        let r1 = a * self.eval(q * z);
        let r2 = d * self.eval(z / q);
        (lhs - r1 - r2).norm() / (lhs.norm() + r1.norm() + r2.norm())
    }

    /// Maximum relative Baxter residual on 64 points (4 radii x 16 angles).
    pub fn baxter_grid_residual(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for r in [0.7, 0.9, 1.1, 1.3] {
            for k in 0..16 {
                let z = C64::from_polar(r, 2.0 * PI * (k as f64 + 0.29) / 16.0);
                let e = self.baxter_residual_at(z);
                if !e.is_finite() {
                    return Err(FbaError::NonFinite(format!("Baxter residual at {z}")));
                }
                worst = worst.max(e);
            }
        }
        Ok(worst)
    }
}

pub fn build_h(sol: &BetheSolution) -> Result<(EntireH, Vec<f64>)> {
    let h = EntireH::from_solution(sol);
    let r = h.pole_residuals()?;
    Ok((h, r))
}

/// Least-squares constant `W` in
/// `(1 - z/s)^n (1 + q/(s z))^n H(z/q) H(-z) - (1 + z/s)^n (1 - q/(s z))^n H(z) H(-z/q)
///  = W (h(z/s)^n h(-s z)^n - h(-z/s)^n h(s z)^n)`
/// over 32 points of `|z| = 0.9`, with the relative rms misfit.
pub fn wronskian_fit<F: Fn(C64) -> C64>(h: F, n: usize, p: &QParams) -> Result<(C64, f64)> {
    let (q, s) = (p.q, p.s);
    let n = n as i32;
    let mut lhs = Vec::with_capacity(32);
    let mut rhs = Vec::with_capacity(32);
    for k in 0..32 {
        let z = C64::from_polar(0.9, 2.0 * PI * (k as f64 + 0.41) / 32.0);
        let l = ((1.0 - z / s) * (1.0 + q / (s * z))).powi(n) * h(z / q) * h(-z)
            - ((1.0 + z / s) * (1.0 - q / (s * z))).powi(n) * h(z) * h(-z / q);
        let r = (theta_h(z / s, p)? * theta_h(-s * z, p)?).powi(n) - (theta_h(-z / s, p)? * theta_h(s * z, p)?).powi(n);
        lhs.push(l);
        rhs.push(r);
    }
    let num: C64 = lhs.iter().zip(&rhs).map(|(l, r)| r.conj() * l).sum();
    let den: f64 = rhs.iter().map(|r| r.norm_sqr()).sum();
    let w = num / den;
    let err: f64 = lhs.iter().zip(&rhs).map(|(l, r)| (l - w * r).norm_sqr()).sum();
    let scale: f64 = rhs.iter().map(|r| (w * r).norm_sqr()).sum();
    Ok((w, (err / scale).sqrt()))
}

pub fn wronskian_q_check(sol: &BetheSolution) -> Result<(C64, f64)> {
    let h = EntireH::from_solution(sol);
    wronskian_fit(|z| h.eval(z), sol.n, &sol.params)
}
