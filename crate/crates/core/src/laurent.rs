//! Finite Laurent polynomials with complex coefficients.

use num_complex::Complex64 as C64;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

/// `sum_k c_k z^k` for `k` in `low .. low + coeffs.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentPoly {
    low: i32,
    coeffs: Vec<C64>,
}

impl LaurentPoly {
    pub fn zero() -> Self {
        Self { low: 0, coeffs: Vec::new() }
    }

    pub fn constant(c: impl Into<C64>) -> Self {
        Self::from_coeffs(0, vec![c.into()])
    }

    /// `c z^k`.
    pub fn monomial(k: i32, c: impl Into<C64>) -> Self {
        Self::from_coeffs(k, vec![c.into()])
    }

    /// `a + b z`.
    pub fn linear(a: impl Into<C64>, b: impl Into<C64>) -> Self {
        Self::from_coeffs(0, vec![a.into(), b.into()])
    }

    pub fn from_coeffs(low: i32, coeffs: Vec<C64>) -> Self {
        let mut p = Self { low, coeffs };
        p.trim();
        p
    }

    pub fn from_map(map: &BTreeMap<i32, C64>) -> Self {
        match (map.keys().next(), map.keys().next_back()) {
            (Some(&lo), Some(&hi)) => {
                let mut c = vec![C64::new(0.0, 0.0); (hi - lo + 1) as usize];
                for (&k, &v) in map {
                    c[(k - lo) as usize] = v;
                }
                Self::from_coeffs(lo, c)
            }
            _ => Self::zero(),
        }
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(|c| *c == C64::new(0.0, 0.0)) {
            self.coeffs.pop();
        }
        let lead = self.coeffs.iter().take_while(|c| **c == C64::new(0.0, 0.0)).count();
        if lead == self.coeffs.len() {
            self.coeffs.clear();
            self.low = 0;
        } else if lead > 0 {
            self.coeffs.drain(..lead);
            self.low += lead as i32;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Lowest exponent with a nonzero coefficient.
    pub fn low_degree(&self) -> Option<i32> {
        (!self.is_zero()).then_some(self.low)
    }

    pub fn high_degree(&self) -> Option<i32> {
        (!self.is_zero()).then_some(self.low + self.coeffs.len() as i32 - 1)
    }

    pub fn coeff(&self, k: i32) -> C64 {
        let i = k - self.low;
        if i < 0 || i as usize >= self.coeffs.len() {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[i as usize]
        }
    }

    /// Nonzero terms as `(exponent, coefficient)`, ascending.
    pub fn terms(&self) -> impl Iterator<Item = (i32, C64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != C64::new(0.0, 0.0))
            .map(move |(i, c)| (self.low + i as i32, *c))
    }

    pub fn eval(&self, z: C64) -> C64 {
        if self.is_zero() {
            return C64::new(0.0, 0.0);
        }
        let mut acc = C64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc * z.powi(self.low)
    }

    pub fn scale(&self, c: impl Into<C64>) -> Self {
        let c = c.into();
        Self::from_coeffs(self.low, self.coeffs.iter().map(|x| x * c).collect())
    }

    /// Multiply by `z^k`.
    pub fn shift(&self, k: i32) -> Self {
        Self { low: self.low + k, coeffs: self.coeffs.clone() }
    }

    /// `p(c z)`.
    pub fn substitute_scale(&self, c: C64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, x)| x * c.powi(self.low + i as i32))
            .collect();
        Self::from_coeffs(self.low, coeffs)
    }

    /// `p(-z)`.
    pub fn reflect(&self) -> Self {
        self.substitute_scale(C64::new(-1.0, 0.0))
    }

    /// `p(1/z)`.
    pub fn invert(&self) -> Self {
        match self.high_degree() {
            None => Self::zero(),
            Some(hi) => Self::from_coeffs(-hi, self.coeffs.iter().rev().copied().collect()),
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::constant(1.0);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Largest coefficient modulus.
    pub fn sup_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest coefficient modulus of `self - other`.
    pub fn max_deviation(&self, other: &Self) -> f64 {
        (self - other).sup_norm()
    }

    pub fn to_map(&self) -> BTreeMap<i32, C64> {
        self.terms().collect()
    }

    /// Nonzero roots (with multiplicity) by Aberth-Ehrlich iteration.
    pub fn roots(&self) -> Vec<C64> {
        let c = &self.coeffs;
        let lead = c.iter().take_while(|x| x.norm() == 0.0).count();
        let c = &c[lead..];
        let deg = c.len().saturating_sub(1);
        if deg == 0 {
            return Vec::new();
        }
        let p = |z: C64| c.iter().rev().fold(C64::new(0.0, 0.0), |a, b| a * z + b);
        let dp = |z: C64| {
            c.iter().enumerate().skip(1).rev().fold(C64::new(0.0, 0.0), |a, (k, b)| a * z + b * k as f64)
        };
        // Cauchy-type radius for the initial ring
        let r = 1.0 + c[..deg].iter().map(|x| x.norm() / c[deg].norm()).fold(0.0, f64::max);
        let mut z: Vec<C64> =
            (0..deg).map(|k| C64::from_polar(0.5 * r, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / deg as f64)).collect();
        for _ in 0..500 {
            let mut moved: f64 = 0.0;
            for i in 0..deg {
                let ratio = p(z[i]) / dp(z[i]);
                let rep: C64 = (0..deg).filter(|&j| j != i).map(|j| (z[i] - z[j]).inv()).sum();
                let step = ratio / (1.0 - ratio * rep);
                if step.is_finite() {
                    z[i] -= step;
                    moved = moved.max(step.norm() / z[i].norm().max(1e-300));
                }
            }
            if moved < 1e-15 {
                break;
            }
        }
        z
    }
}

impl Add for &LaurentPoly {
    type Output = LaurentPoly;
    fn add(self, rhs: &LaurentPoly) -> LaurentPoly {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let lo = self.low.min(rhs.low);
        let hi = self.high_degree().unwrap().max(rhs.high_degree().unwrap());
        let coeffs = (lo..=hi).map(|k| self.coeff(k) + rhs.coeff(k)).collect();
        LaurentPoly::from_coeffs(lo, coeffs)
    }
}

impl Neg for &LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        self.scale(-1.0)
    }
}

impl Sub for &LaurentPoly {
    type Output = LaurentPoly;
    fn sub(self, rhs: &LaurentPoly) -> LaurentPoly {
        self + &(-rhs)
    }
}

impl Mul for &LaurentPoly {
    type Output = LaurentPoly;
    fn mul(self, rhs: &LaurentPoly) -> LaurentPoly {
        if self.is_zero() || rhs.is_zero() {
            return LaurentPoly::zero();
        }
        let mut c = vec![C64::new(0.0, 0.0); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        LaurentPoly::from_coeffs(self.low + rhs.low, c)
    }
}

macro_rules! owned_ops {
    ($tr:ident, $f:ident) => {
        impl $tr for LaurentPoly {
            type Output = LaurentPoly;
            fn $f(self, rhs: LaurentPoly) -> LaurentPoly {
                (&self).$f(&rhs)
            }
        }
    };
}
owned_ops!(Add, add);
owned_ops!(Sub, sub);
owned_ops!(Mul, mul);

/// Serialized as a map from exponent (string key) to `[re, im]`.
impl Serialize for LaurentPoly {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let terms: Vec<_> = self.terms().collect();
        let mut m = s.serialize_map(Some(terms.len()))?;
        for (k, c) in terms {
            m.serialize_entry(&k.to_string(), &[c.re, c.im])?;
        }
        m.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn binomial_square() {
        let p = LaurentPoly::linear(1.0, 2.0).pow(2);
        assert_eq!(p.coeff(0), c(1.0));
        assert_eq!(p.coeff(1), c(4.0));
        assert_eq!(p.coeff(2), c(4.0));
        assert_eq!(p.high_degree(), Some(2));
    }

    #[test]
    fn cancellation_trims() {
        let p = LaurentPoly::from_coeffs(-2, vec![c(1.0), c(0.0), c(3.0)]);
        let d = &p - &p;
        assert!(d.is_zero());
        assert_eq!(d.low_degree(), None);
        let q = &p - &LaurentPoly::monomial(-2, 1.0);
        assert_eq!(q.low_degree(), Some(0));
    }

    #[test]
    fn roots_of_cubic() {
        // (z - 1)(z + 2)(z - 0.5i) times z^-1
        let p = &(&LaurentPoly::linear(-1.0, 1.0) * &LaurentPoly::linear(2.0, 1.0)) * &LaurentPoly::linear(C64::new(0.0, -0.5), 1.0);
        let mut r = p.shift(-1).roots();
        r.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        let expect = [c(-2.0), C64::new(0.0, 0.5), c(1.0)];
        for (a, b) in r.iter().zip(expect) {
            assert!((a - b).norm() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn invert_and_reflect() {
        let p = LaurentPoly::from_coeffs(-1, vec![c(1.0), c(2.0), c(3.0)]);
        let z = C64::new(0.3, 0.7);
        assert!((p.invert().eval(z) - p.eval(z.inv())).norm() < 1e-14);
        assert!((p.reflect().eval(z) - p.eval(-z)).norm() < 1e-14);
        assert!((p.substitute_scale(C64::new(0.0, 2.0)).eval(z) - p.eval(z * C64::new(0.0, 2.0))).norm() < 1e-13);
    }

    fn arb_poly() -> impl Strategy<Value = LaurentPoly> {
        (-4i32..4, prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..6))
            .prop_map(|(lo, v)| LaurentPoly::from_coeffs(lo, v.into_iter().map(|(a, b)| C64::new(a, b)).collect()))
    }

    proptest! {
        #[test]
        fn product_evaluates_pointwise(a in arb_poly(), b in arb_poly(), r in 0.5f64..1.5, t in 0.0f64..std::f64::consts::TAU) {
            let z = C64::from_polar(r, t);
            let lhs = (&a * &b).eval(z);
            let rhs = a.eval(z) * b.eval(z);
            prop_assert!((lhs - rhs).norm() <= 1e-11 * (1.0 + rhs.norm()));
        }

        #[test]
        fn sum_evaluates_pointwise(a in arb_poly(), b in arb_poly(), t in 0.0f64..std::f64::consts::TAU) {
            let z = C64::from_polar(0.9, t);
            prop_assert!(((&a + &b).eval(z) - a.eval(z) - b.eval(z)).norm() < 1e-12);
        }
    }
}
