//! q-series special functions: the bracket, infinite q-Pochhammer products,
//! the quantum dilogarithm-type function `sigma`, the Clebsch-Gordan weight
//! `kappa_cg`, the ratio functions `jfun`/`efun` and the theta function `h`.
//!
//! All functions take `q` as a complex number; the physical regime `-1 < q < 0`
//! is not special-cased.

use crate::error::{FbaError, Result};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Magnitude below which a product factor counts as an exact zero.
pub const POLE_EPS: f64 = 1e3 * f64::EPSILON;

const MAX_FACTORS: usize = 100_000;

/// Global parameter record: nome `q`, spectral parameter `s`, truncation policy
/// and default circle resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QParams {
    pub q: C64,
    pub s: C64,
    pub trunc_tol: f64,
    pub quad_nodes: usize,
}

impl QParams {
    pub fn new(q: impl Into<C64>, s: impl Into<C64>) -> Result<Self> {
        Self::with_policy(q, s, 1e-17, 256)
    }

    pub fn with_policy(
        q: impl Into<C64>,
        s: impl Into<C64>,
        trunc_tol: f64,
        quad_nodes: usize,
    ) -> Result<Self> {
        let q = q.into();
        let s = s.into();
        if !(q.norm() < 1.0) {
            return Err(FbaError::InvalidParams(format!("|q| = {} must be < 1", q.norm())));
        }
        if !(q.norm() < s.norm() && s.norm() < 1.0) {
            return Err(FbaError::InvalidParams(format!(
                "need |q| < |s| < 1, got |q| = {}, |s| = {}",
                q.norm(),
                s.norm()
            )));
        }
        if !(trunc_tol > 0.0) {
            return Err(FbaError::InvalidParams("trunc_tol must be positive".into()));
        }
        if quad_nodes < 16 {
            return Err(FbaError::InvalidParams("quad_nodes must be >= 16".into()));
        }
        Ok(Self { q, s, trunc_tol, quad_nodes })
    }

    pub fn with_nodes(mut self, nodes: usize) -> Result<Self> {
        if nodes < 16 {
            return Err(FbaError::InvalidParams("quad_nodes must be >= 16".into()));
        }
        self.quad_nodes = nodes;
        Ok(self)
    }

    /// Same policy, different `q` and `s`.
    pub fn rebase(&self, q: impl Into<C64>, s: impl Into<C64>) -> Result<Self> {
        Self::with_policy(q, s, self.trunc_tol, self.quad_nodes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub terms_used: usize,
    pub last_term_magnitude: f64,
    pub converged: bool,
}

/// `[x] = x - 1/x`.
pub fn bracket(x: C64) -> Result<C64> {
    if x == C64::new(0.0, 0.0) {
        return Err(FbaError::Domain("bracket at x = 0".into()));
    }
    Ok(x - x.inv())
}

#[inline]
pub(crate) fn br(x: C64) -> C64 {
    x - x.inv()
}

/// `(x; p)_inf`, truncated at the first `k` with `|p|^k |x| < tol`.
pub fn qpoch_inf(x: C64, base: C64, tol: f64) -> Result<(C64, TruncationReport)> {
    let pn = base.norm();
    if !(pn < 1.0) {
        return Err(FbaError::Divergence(pn));
    }
    let mut prod = C64::new(1.0, 0.0);
    let mut term = x;
    let mut k = 0;
    while term.norm() >= tol && k < MAX_FACTORS {
        prod *= C64::new(1.0, 0.0) - term;
        term *= base;
        k += 1;
    }
    let last = term.norm();
    Ok((prod, TruncationReport { terms_used: k, last_term_magnitude: last, converged: last < tol }))
}

/// Truncated `(x; q)_inf` without a report; caller guarantees `|q| < 1`.
#[inline]
pub(crate) fn qp(x: C64, q: C64, tol: f64) -> C64 {
    let mut prod = C64::new(1.0, 0.0);
    let mut term = x;
    let mut k = 0;
    while term.norm_sqr() >= tol * tol && k < MAX_FACTORS {
        prod *= 1.0 - term;
        term *= q;
        k += 1;
    }
    prod
}

/// `sigma(v) = (-q/v; q)_inf / (v; q)_inf`.
pub fn sigma(v: C64, p: &QParams) -> Result<C64> {
    sigma_nudged(v, 0.0, p)
}

/// `sigma(v e^{-eps})`: the radial nudge used to move poles off a contour.
pub fn sigma_nudged(v: C64, eps: f64, p: &QParams) -> Result<C64> {
    if v == C64::new(0.0, 0.0) {
        return Err(FbaError::Domain("sigma at v = 0".into()));
    }
    let v = if eps != 0.0 { v * (-eps).exp() } else { v };
    let q = p.q;
    let tol2 = p.trunc_tol * p.trunc_tol;
    let mut num = C64::new(1.0, 0.0);
    let mut den = C64::new(1.0, 0.0);
    let mut a = -q / v;
    let mut b = v;
    let mut k = 0;
    while (a.norm_sqr() >= tol2 || b.norm_sqr() >= tol2) && k < MAX_FACTORS {
        let fd = 1.0 - b;
        if fd.norm() < POLE_EPS {
            return Err(FbaError::Pole(format!("sigma({v})")));
        }
        num *= 1.0 - a;
        den *= fd;
        a *= q;
        b *= q;
        k += 1;
    }
    Ok(num / den)
}

/// `kappa_s = (-q; q)_inf / (q; q)_inf`.
pub fn kappa_const(p: &QParams) -> C64 {
    qp(-p.q, p.q, p.trunc_tol) / qp(p.q, p.q, p.trunc_tol)
}

/// Clebsch-Gordan weight `kappa(v1, v2) = sigma(v1) sigma(v2) / sigma(v1 v2)`.
pub fn kappa_cg(v1: C64, v2: C64, p: &QParams) -> Result<C64> {
    // 1/sigma(x) = sigma(-q/x) keeps every factor a finite product
    Ok(sigma(v1, p)? * sigma(v2, p)? * sigma(-p.q / (v1 * v2), p)?)
}

/// `J(s, v) = sigma(s v) / sigma(s / v)`.
pub fn jfun(s: C64, v: C64, p: &QParams) -> Result<C64> {
    Ok(sigma(s * v, p)? * sigma(-p.q * v / s, p)?)
}

/// `E(s, v) = [v/s][q/(s v)]`.
pub fn efun(s: C64, v: C64, p: &QParams) -> Result<C64> {
    if s == C64::new(0.0, 0.0) || v == C64::new(0.0, 0.0) {
        return Err(FbaError::Domain("efun needs s, v != 0".into()));
    }
    Ok(br(v / s) * br(p.q / (s * v)))
}

#[inline]
pub(crate) fn efun_raw(s: C64, v: C64, q: C64) -> C64 {
    br(v / s) * br(q / (s * v))
}

/// Jacobi theta in product form, `h(z) = (z; q)_inf (q/z; q)_inf`.
pub fn theta_h(z: C64, p: &QParams) -> Result<C64> {
    if z == C64::new(0.0, 0.0) {
        return Err(FbaError::Domain("theta_h at z = 0".into()));
    }
    Ok(qp(z, p.q, p.trunc_tol) * qp(p.q / z, p.q, p.trunc_tol))
}

/// `(q^2 x^2; q^2)_inf / (q^2 x^{-2}; q^2)_inf` evaluated as `-x^{-1} sigma(1/x) / sigma(x)`.
pub fn theta_ratio_sigma(x: C64, p: &QParams) -> Result<C64> {
    Ok(-x.inv() * sigma(x.inv(), p)? / sigma(x, p)?)
}

/// Principal-branch logarithm of `sigma`, summed factor by factor.
pub fn log_sigma(v: C64, p: &QParams) -> Result<C64> {
    if v == C64::new(0.0, 0.0) {
        return Err(FbaError::Domain("log_sigma at v = 0".into()));
    }
    let q = p.q;
    let tol2 = p.trunc_tol * p.trunc_tol;
    let mut acc = C64::new(0.0, 0.0);
    let mut a = -q / v;
    let mut b = v;
    let mut k = 0;
    while (a.norm_sqr() >= tol2 || b.norm_sqr() >= tol2) && k < MAX_FACTORS {
        let fd = 1.0 - b;
        if fd.norm() < POLE_EPS {
            return Err(FbaError::Pole(format!("log_sigma({v})")));
        }
        acc += (1.0 - a).ln() - fd.ln();
        a *= q;
        b *= q;
        k += 1;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn bracket_values() {
        assert_eq!(bracket(c(2.0, 0.0)).unwrap(), c(1.5, 0.0));
        assert_eq!(bracket(c(1.0, 0.0)).unwrap(), c(0.0, 0.0));
        assert!((bracket(c(0.0, 1.0)).unwrap() - c(0.0, 2.0)).norm() < 1e-15);
        assert!(bracket(c(0.0, 0.0)).is_err());
    }

    #[test]
    fn qpoch_edge_cases() {
        let (v, r) = qpoch_inf(c(0.0, 0.0), c(0.5, 0.0), 1e-15).unwrap();
        assert_eq!(v, c(1.0, 0.0));
        assert!(r.converged);
        let (v, _) = qpoch_inf(c(1.0, 0.0), c(0.3, 0.0), 1e-15).unwrap();
        assert_eq!(v, c(0.0, 0.0));
        assert!(matches!(qpoch_inf(c(0.5, 0.0), c(1.0, 0.0), 1e-15), Err(FbaError::Divergence(_))));
    }

    /// Euler's pentagonal-number theorem: (p;p) = sum_k (-1)^k p^{k(3k-1)/2}.
    fn pentagonal(p: C64) -> C64 {
        let mut acc = c(1.0, 0.0);
        for k in 1..60i64 {
            let sgn = if k % 2 == 0 { 1.0 } else { -1.0 };
            for e in [k * (3 * k - 1) / 2, k * (3 * k + 1) / 2] {
                acc += sgn * p.powi(e as i32);
            }
        }
        acc
    }

    #[test]
    fn euler_function_matches_pentagonal_series() {
        for p in [c(0.5, 0.0), c(0.1, 0.0), c(-0.2, 0.0), c(0.3, 0.4)] {
            let (v, _) = qpoch_inf(p, p, 1e-17).unwrap();
            assert!((v - pentagonal(p)).norm() < 1e-13, "{p}");
        }
    }

    #[test]
    fn kappa_const_log_series() {
        for q in [0.5, 0.1, -0.2] {
            let p = QParams::new(q, 0.9).unwrap();
            let mut lg = 0.0;
            let mut qk: f64 = q;
            for _ in 0..400 {
                lg += (1.0 + qk).ln() - (1.0 - qk).ln();
                qk *= q;
            }
            assert!((kappa_const(&p) - c(lg.exp(), 0.0)).norm() < 1e-13);
        }
        let p = QParams::new(1e-12, 0.5).unwrap();
        assert!((kappa_const(&p) - 1.0).norm() < 1e-11);
    }

    #[test]
    fn sigma_zero_and_pole() {
        let p = QParams::new(0.1, 0.5).unwrap();
        assert!(sigma(c(-0.1, 0.0), &p).unwrap().norm() < 1e-15);
        assert!(matches!(sigma(c(1.0, 0.0), &p), Err(FbaError::Pole(_))));
        assert!(matches!(sigma(c(10.0, 0.0), &p), Err(FbaError::Pole(_))));
        assert!(kappa_cg(c(1.0, 0.0), c(0.3, 0.1), &p).is_err());
    }

    #[test]
    fn sigma_shift_and_reflection_examples() {
        let p = QParams::new(0.1, 0.5).unwrap();
        let v = c(2.0, 0.0);
        let r = sigma(p.q * v, &p).unwrap() / sigma(v, &p).unwrap();
        assert!((r - c(-1.5, 0.0)).norm() < 1e-13);
        let p = QParams::new(0.15, 0.5).unwrap();
        let v = c(0.4, 0.2);
        let r = sigma(v, &p).unwrap() * sigma(-p.q / v, &p).unwrap();
        assert!((r - 1.0).norm() < 1e-14);
    }

    #[test]
    fn efun_zeros_and_j_ratio() {
        let p = QParams::new(0.1, 0.5).unwrap();
        let s = p.s;
        assert!(efun(s, s, &p).unwrap().norm() < 1e-15);
        assert!(efun(s, p.q / s, &p).unwrap().norm() < 1e-15);
        let v = C64::from_polar(0.8, 0.4);
        let lhs = jfun(s, v, &p).unwrap() / jfun(s, v / p.q, &p).unwrap();
        assert!((lhs - efun(s, v, &p).unwrap()).norm() < 1e-12 * lhs.norm());
    }

    #[test]
    fn kappa_cg_direct_composition() {
        let p = QParams::new(0.2, 0.5).unwrap();
        let v1 = C64::from_polar(0.5, 0.3);
        let v2 = C64::from_polar(0.7, -1.1);
        let direct = sigma(v1, &p).unwrap() * sigma(v2, &p).unwrap() / sigma(v1 * v2, &p).unwrap();
        let k = kappa_cg(v1, v2, &p).unwrap();
        assert!((k - direct).norm() < 1e-14 * direct.norm());
        assert_eq!(k, kappa_cg(v2, v1, &p).unwrap());
    }

    #[test]
    fn theta_zeros_and_quasi_periodicity() {
        let p = QParams::new(0.3, 0.5).unwrap();
        assert_eq!(theta_h(c(1.0, 0.0), &p).unwrap(), c(0.0, 0.0));
        assert!(theta_h(p.q, &p).unwrap().norm() < 1e-16);
        let z = c(0.7, 0.4);
        let lhs = theta_h(p.q * z, &p).unwrap();
        let rhs = -theta_h(z, &p).unwrap() / z;
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn theta_ratio_identity() {
        let p = QParams::new(-0.2, 0.5).unwrap();
        let q2 = p.q * p.q;
        for x in [c(0.6, 0.3), c(1.2, -0.4), C64::from_polar(1.0, 0.9)] {
            let lhs = qp(q2 * x * x, q2, 1e-18) / qp(q2 / (x * x), q2, 1e-18);
            let rhs = theta_ratio_sigma(x, &p).unwrap();
            assert!((lhs - rhs).norm() < 1e-13 * lhs.norm(), "{x}");
        }
    }

    #[test]
    fn log_sigma_exponentiates() {
        let p = QParams::new(-0.1, 0.5).unwrap();
        let v = C64::from_polar(0.9, 2.0);
        let a = log_sigma(v, &p).unwrap().exp();
        let b = sigma(v, &p).unwrap();
        assert!((a - b).norm() < 1e-14 * b.norm());
    }

    #[test]
    fn nudge_moves_pole() {
        let p = QParams::new(0.2, 0.5).unwrap();
        assert!(sigma(c(1.0, 0.0), &p).is_err());
        let v = sigma_nudged(c(1.0, 0.0), 1e-6, &p).unwrap();
        assert!(v.norm() > 1e5);
    }

    #[test]
    fn params_validation() {
        assert!(QParams::new(1.0, 0.5).is_err());
        assert!(QParams::new(0.5, 0.4).is_err());
        assert!(QParams::new(0.1, 1.0).is_err());
        assert!(QParams::with_policy(0.1, 0.5, 0.0, 64).is_err());
        assert!(QParams::with_policy(0.1, 0.5, 1e-16, 8).is_err());
    }
}
