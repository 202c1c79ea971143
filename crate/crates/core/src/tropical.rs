//! Order-`q^0` ("tropical") seed states and their exact verification.
//!
//! A seed is the leading Laurent polynomial `H0` of `H(z)` together with the
//! leading parts of `H(z/q)` and `H(q z)`. Those shifted parts carry powers of
//! `q` and, in the dual sector with odd `m`, a half-integer power of `z`; both
//! are kept as metadata in [`ScaledPoly`] so every stored object is a genuine
//! Laurent polynomial.

use crate::error::{FbaError, Result};
use crate::laurent::LaurentPoly;
use num_complex::Complex64 as C64;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use std::collections::BTreeSet;
use std::f64::consts::PI;

const ONE: C64 = C64::new(1.0, 0.0);

fn sgn(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `q^(q_half/2) z^(z_half/2) poly(z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledPoly {
    pub poly: LaurentPoly,
    pub q_half: i32,
    pub z_half: i32,
}

impl ScaledPoly {
    pub fn plain(poly: LaurentPoly) -> Self {
        Self { poly, q_half: 0, z_half: 0 }
    }

    pub fn new(poly: LaurentPoly, q_half: i32, z_half: i32) -> Self {
        Self { poly, q_half, z_half }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self { poly: &self.poly * &other.poly, q_half: self.q_half + other.q_half, z_half: self.z_half + other.z_half }
    }

    pub fn mul_poly(&self, p: &LaurentPoly) -> Self {
        Self { poly: &self.poly * p, ..self.clone() }
    }

    fn same_prefactor(&self, other: &Self) -> bool {
        self.poly.is_zero() || other.poly.is_zero() || (self.q_half == other.q_half && self.z_half == other.z_half)
    }

    /// `p(-z)`; only defined without a half-integer power of `z`.
    pub fn reflect(&self) -> Option<Self> {
        (self.z_half % 2 == 0).then(|| Self { poly: self.poly.reflect().scale(sgn((self.z_half / 2).unsigned_abs() as usize)), ..self.clone() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sector {
    UnitaryV,
    DualQ,
}

impl Serialize for Sector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(match self {
            Sector::UnitaryV => "unitary-v",
            Sector::DualQ => "dual-q^{m/2}",
        })
    }
}

/// Tropical seed. `w0` is the coefficient of `q^(-m)` in the Wronskian constant
/// (for the ground sector simply `W0`); `None` where the Wronskian relation is
/// not applicable.
#[derive(Debug, Clone)]
pub struct SeedState {
    pub n: usize,
    pub m: usize,
    pub s: C64,
    pub sector: Sector,
    pub h0: ScaledPoly,
    pub h0_down: ScaledPoly,
    pub h0_up: ScaledPoly,
    pub k: C64,
    pub kprime: C64,
    pub k_branch: Option<C64>,
    pub v: Option<C64>,
    pub subset: Vec<usize>,
    pub t0: ScaledPoly,
    pub w0: Option<C64>,
    /// Bethe roots at `q = 0` where the construction provides them.
    pub roots: Vec<C64>,
}

fn cpair(c: &C64) -> [f64; 2] {
    [c.re, c.im]
}

#[derive(Serialize)]
struct Prefactor {
    q_power: f64,
    z_power: f64,
}

impl Serialize for SeedState {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pre = |p: &ScaledPoly| Prefactor { q_power: p.q_half as f64 / 2.0, z_power: p.z_half as f64 / 2.0 };
        let mut st = s.serialize_struct("SeedState", 14)?;
        st.serialize_field("n", &self.n)?;
        st.serialize_field("m", &self.m)?;
        st.serialize_field("sector", &self.sector)?;
        st.serialize_field("H0", &self.h0.poly)?;
        st.serialize_field("H0_down", &self.h0_down.poly)?;
        st.serialize_field("H0_up", &self.h0_up.poly)?;
        st.serialize_field("K", &cpair(&self.k))?;
        st.serialize_field("Kprime", &cpair(&self.kprime))?;
        st.serialize_field("k_branch", &self.k_branch.as_ref().map(cpair))?;
        st.serialize_field("subset", &self.subset)?;
        st.serialize_field("T0", &self.t0.poly)?;
        st.serialize_field("W0", &self.w0.as_ref().map(cpair))?;
        st.serialize_field(
            "prefactors",
            &[("H0", pre(&self.h0)), ("H0_down", pre(&self.h0_down)), ("H0_up", pre(&self.h0_up)), ("T0", pre(&self.t0))]
                .into_iter()
                .collect::<std::collections::BTreeMap<_, _>>(),
        )?;
        st.serialize_field("roots", &self.roots.iter().map(cpair).collect::<Vec<_>>())?;
        st.end()
    }
}

fn lin(a: C64, b: C64) -> LaurentPoly {
    LaurentPoly::linear(a, b)
}

/// Ground seed of the unitary sector with total `v`.
pub fn ground_seed(n: usize, v: C64, s: C64) -> Result<SeedState> {
    if n < 1 {
        return Err(FbaError::InvalidParams("n must be positive".into()));
    }
    let sn = s.powi(n as i32);
    let (d1, d2) = (1.0 - sn * v, 1.0 - sn / v);
    if d1.norm() < 1e-12 || d2.norm() < 1e-12 {
        return Err(FbaError::Resonance(format!("1 - s^n v^(+-1) vanishes for v = {v}")));
    }
    let k = -v / d1 - v.inv() / d2;
    let den = 1.0 - sn * k;
    if den.norm() < 1e-12 {
        return Err(FbaError::Resonance("1 - s^n K vanishes".into()));
    }
    let nn = n as u32;
    // H0(z/q) = ((1 + s z)^n - (s + z)^n K)/(1 - s^n K)
    let down = (&lin(ONE, s).pow(nn) - &lin(s, ONE).pow(nn).scale(k)).scale(den.inv());
    // H0(q z) = ((1 + s/z)^n - (s + 1/z)^n K')/(1 - s^n K'), K' = K
    let up = down.invert();
    let a = LaurentPoly::linear(ONE, -s).pow(nn).scale(sgn(n)); // (-)^n (1 - s z)^n
    let d = LaurentPoly::from_coeffs(-1, vec![-s, ONE]).pow(nn); // (1 - s/z)^n
    let t0 = &(&a * &up) + &(&d * &down);
    Ok(SeedState {
        n,
        m: 0,
        s,
        sector: Sector::UnitaryV,
        h0: ScaledPoly::plain(LaurentPoly::constant(1.0)),
        h0_down: ScaledPoly::plain(down),
        h0_up: ScaledPoly::plain(up),
        k,
        kprime: k,
        k_branch: None,
        v: Some(v),
        subset: Vec::new(),
        t0: ScaledPoly::plain(t0),
        w0: Some(den.inv()),
        roots: Vec::new(),
    })
}

/// `(v^k - v^-k)/(v - v^-1)` as the finite sum `sum_j v^(k-1-2j)`, regular at `v = +-1`.
pub fn chebyshev_ratio(k: usize, v: C64) -> C64 {
    (0..k).map(|j| v.powi(k as i32 - 1 - 2 * j as i32)).sum()
}

/// Leading parts of `H(q^-k z)` and `H(q^k z)` for a ground seed; both carry the
/// prefactor `q^(-n k (k-1)/2)`.
pub fn perimeter_coeffs(k: usize, seed: &SeedState) -> Result<(ScaledPoly, ScaledPoly)> {
    let v = match (seed.sector, seed.v) {
        (Sector::UnitaryV, Some(v)) => v,
        _ => return Err(FbaError::InvalidParams("perimeter_coeffs needs a ground seed".into())),
    };
    if k == 0 {
        return Err(FbaError::InvalidParams("k must be >= 1".into()));
    }
    let (n, s) = (seed.n as i32, seed.s);
    let (uk, uk1) = (chebyshev_ratio(k, v), chebyshev_ratio(k - 1, v));
    let down = seed.h0_down.poly.scale(uk) - lin(s, ONE).pow(n as u32).scale(uk1);
    let up = seed.h0_up.poly.scale(uk) - LaurentPoly::from_coeffs(-1, vec![ONE, s]).pow(n as u32).scale(uk1);
    let qh = -n * (k * (k - 1)) as i32;
    let shift = n * (k as i32 - 1);
    Ok((ScaledPoly::new(down.shift(shift), qh, 0), ScaledPoly::new(up.shift(-shift), qh, 0)))
}

/// Gluing defect between consecutive perimeter layers: the lowest coefficient of
/// the `k`-th bracket against the highest of the `(k-1)`-th (`H0` itself for `k = 1`).
pub fn gluing_defect(k: usize, seed: &SeedState) -> Result<f64> {
    let bracket = |k: usize| -> Result<LaurentPoly> {
        if k == 0 {
            return Ok(seed.h0.poly.clone());
        }
        let shift = seed.n as i32 * (k as i32 - 1);
        Ok(perimeter_coeffs(k, seed)?.0.poly.shift(-shift))
    };
    let (hi, lo) = (bracket(k - 1)?, bracket(k)?);
    let top = hi.coeff(hi.high_degree().unwrap_or(0));
    let bottom = lo.coeff(lo.low_degree().unwrap_or(0));
    Ok((top - bottom).norm())
}

fn omega(n: usize, j: i64) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64)
}

/// One-particle seed in the dual sector `m = 1` with momentum label `j`.
pub fn one_particle_seed(n: usize, s: C64, j: i64) -> Result<SeedState> {
    if n < 1 {
        return Err(FbaError::InvalidParams("n must be positive".into()));
    }
    let om = omega(n, j.rem_euclid(n as i64));
    if (s - om).norm() < 1e-12 {
        return Err(FbaError::Resonance(format!("s coincides with omega^{j}")));
    }
    let c = (1.0 - om * s) / (s - om);
    let cc = sgn(n + 1) * c;
    let nn = n as u32;
    // P(z) = z (z - s)^n + C (1 - s z)^n
    let p = &LaurentPoly::monomial(1, 1.0) * &lin(-s, ONE).pow(nn) + lin(ONE, -s).pow(nn).scale(cc);
    let mut all = p.roots();
    let w0 = sgn(n + 1) * cc;
    let idx = (0..all.len())
        .min_by(|&a, &b| (all[a] - w0).norm().partial_cmp(&(all[b] - w0).norm()).unwrap())
        .ok_or_else(|| FbaError::NoConvergence("root finding".into()))?;
    all.remove(idx);
    let roots = all;
    let mut prod_down = LaurentPoly::constant(1.0);
    let mut prod_up = LaurentPoly::constant(1.0);
    let mut t = LaurentPoly::constant(1.0);
    for w in &roots {
        prod_down = &prod_down * &lin(ONE, w.inv());
        prod_up = &prod_up * &LaurentPoly::from_coeffs(-1, vec![*w, ONE]);
        t = &t * &LaurentPoly::from_coeffs(0, vec![ONE, C64::new(0.0, 0.0), -(w * w).inv()]);
    }
    let h0 = lin(c, -ONE).scale(sgn(n + 1));
    let down = prod_down.shift(1).scale(sgn(n));
    let up = prod_up.scale(cc);
    let t0 = t.shift(-(n as i32)).scale(sgn(n));
    Ok(SeedState {
        n,
        m: 1,
        s,
        sector: Sector::DualQ,
        h0: ScaledPoly::new(h0, 0, -1),
        h0_down: ScaledPoly::new(down, -1, -1),
        h0_up: ScaledPoly::new(up, -1, -1),
        k: cc,
        kprime: cc,
        k_branch: None,
        v: None,
        subset: vec![j.rem_euclid(n as i64) as usize],
        t0: ScaledPoly::new(t0, -1, 0),
        w0: None,
        roots,
    })
}

/// The two branches allowed for `k`: `1` and `omega^(1/2) = e^{i pi/n}`.
pub fn k_branches(n: usize) -> [C64; 2] {
    [ONE, C64::from_polar(1.0, PI / n as f64)]
}

/// The two expressions for `q^m W0 (1 - k^n s^n)`, from `I` and from its complement.
pub fn even_normalization_pair(n: usize, s: C64, subset: &[usize], k: C64) -> (C64, C64) {
    let m = subset.len() / 2;
    let r = |j: usize| (s - k * omega(n, j as i64)) / (1.0 - k * s * omega(n, j as i64));
    let inside: C64 = subset.iter().map(|&j| r(j)).product();
    let outside: C64 = (0..n).filter(|j| !subset.contains(j)).map(|j| r(j).inv()).product();
    let sm = sgn(m);
    (sm * inside, -sm * k.powi(n as i32) * outside)
}

/// Seed with `2m` excitations labelled by `subset` in the dual sector `v = q^(m/2)`.
pub fn even_seed(n: usize, m: usize, s: C64, subset: &[usize], k: C64) -> Result<SeedState> {
    let set: BTreeSet<usize> = subset.iter().copied().collect();
    if set.len() != 2 * m || subset.len() != 2 * m || set.iter().any(|&j| j >= n) {
        return Err(FbaError::Constraint(format!("subset must hold {} distinct labels below {n}", 2 * m)));
    }
    if 2 * m >= n {
        return Err(FbaError::Constraint("need 2m < n".into()));
    }
    if (k.powi(2 * n as i32) - 1.0).norm() > 1e-12 {
        return Err(FbaError::Constraint(format!("branch {k} violates k^(2n) = 1")));
    }
    let subset: Vec<usize> = set.into_iter().collect();
    let kn = k.powi(n as i32);
    let denom = 1.0 - kn * s.powi(n as i32);
    if denom.norm() < 1e-12 {
        return Err(FbaError::Resonance("1 - k^n s^n vanishes".into()));
    }
    let r: Vec<C64> = (0..n).map(|j| (s - k * omega(n, j as i64)) / (1.0 - k * s * omega(n, j as i64))).collect();
    if r.iter().any(|x| !x.is_finite() || x.norm() < 1e-12) {
        return Err(FbaError::Resonance("degenerate momentum factor".into()));
    }
    let (x, _) = even_normalization_pair(n, s, &subset, k);
    let comp: Vec<usize> = (0..n).filter(|j| !subset.contains(j)).collect();
    let mut h0 = LaurentPoly::constant(sgn(m));
    for &j in &subset {
        h0 = &h0 * &lin(ONE, -r[j]);
    }
    let h0 = h0.shift(-(m as i32));
    let mut ap = LaurentPoly::constant(x);
    let mut am = LaurentPoly::constant(-x / kn);
    let mut t0 = LaurentPoly::constant(denom);
    for &j in &comp {
        ap = &ap * &lin(ONE, r[j]);
        am = &am * &LaurentPoly::from_coeffs(-1, vec![ONE, r[j]]);
        t0 = &t0 * &LaurentPoly::from_coeffs(-1, vec![-r[j].inv(), C64::new(0.0, 0.0), r[j]]);
    }
    let mi = m as i32;
    Ok(SeedState {
        n,
        m,
        s,
        sector: Sector::DualQ,
        h0: ScaledPoly::plain(h0),
        h0_down: ScaledPoly::new(ap.shift(mi), -2 * mi, 0),
        h0_up: ScaledPoly::new(am.shift(-mi), -2 * mi, 0),
        k: kn,
        kprime: kn.inv(),
        k_branch: Some(k),
        v: None,
        subset,
        t0: ScaledPoly::new(t0, -2 * mi, 0),
        w0: Some(x / denom),
        roots: Vec::new(),
    })
}

/// Coefficientwise deviations of the tropical Baxter and Wronskian identities.
#[derive(Debug, Clone, Serialize)]
pub struct SeedReport {
    pub baxter_deviation: f64,
    pub wronskian_deviation: Option<f64>,
    /// `|t_n - (v + 1/v)|` and its mirror, for unitary seeds.
    pub edge_deviation: Option<f64>,
    pub prefactors_consistent: bool,
    pub passed: bool,
}

pub const SEED_TOL: f64 = 1e-12;

/// Coefficientwise deviation relative to the larger coefficient scale (at least 1).
fn deviation(a: &ScaledPoly, b: &ScaledPoly) -> Option<f64> {
    let scale = a.poly.sup_norm().max(b.poly.sup_norm()).max(1.0);
    a.same_prefactor(b).then(|| a.poly.max_deviation(&b.poly) / scale)
}

/// Checks `T0 H0 = (-)^n (1 - s z)^n H0(q z) + (1 - s/z)^n H0(z/q)` and
/// `(1 - z/s)^n H0(z/q) H0(-z) - (1 + z/s)^n H0(z) H0(-z/q)
///   = W0 ((1 - z/s)^n (1 + s z)^n - (1 + z/s)^n (1 - s z)^n)`.
pub fn verify_seed(seed: &SeedState) -> SeedReport {
    let (n, s) = (seed.n as u32, seed.s);
    let a = LaurentPoly::linear(ONE, -s).pow(n).scale(sgn(seed.n));
    let d = LaurentPoly::from_coeffs(-1, vec![-s, ONE]).pow(n);
    let lhs = seed.t0.mul(&seed.h0);
    let r1 = seed.h0_up.mul_poly(&a);
    let r2 = seed.h0_down.mul_poly(&d);
    let mut consistent = r1.same_prefactor(&r2);
    let rhs = ScaledPoly { poly: &r1.poly + &r2.poly, ..r1.clone() };
    let baxter = deviation(&lhs, &rhs).unwrap_or_else(|| {
        consistent = false;
        f64::INFINITY
    });

    let wronskian = seed.w0.and_then(|w0| {
        let (h0m, downm) = (seed.h0.reflect()?, seed.h0_down.reflect()?);
        let zs = LaurentPoly::linear(ONE, -s.inv()).pow(n);
        let zsp = LaurentPoly::linear(ONE, s.inv()).pow(n);
        let l1 = seed.h0_down.mul(&h0m).mul_poly(&zs);
        let l2 = seed.h0.mul(&downm).mul_poly(&zsp);
        if !l1.same_prefactor(&l2) {
            return Some(f64::INFINITY);
        }
        let lhs = ScaledPoly { poly: &l1.poly - &l2.poly, ..l1.clone() };
        let bracket = &zs * &LaurentPoly::linear(ONE, s).pow(n) - &zsp * &LaurentPoly::linear(ONE, -s).pow(n);
        let rhs = ScaledPoly { poly: bracket.scale(w0), q_half: seed.h0_down.q_half, z_half: 0 };
        Some(deviation(&lhs, &rhs).unwrap_or(f64::INFINITY))
    });

    let edge = seed.v.map(|v| {
        let e = v + v.inv();
        let hi = seed.t0.poly.coeff(seed.n as i32);
        let lo = seed.t0.poly.coeff(-(seed.n as i32));
        (hi - e).norm().max((lo - sgn(seed.n) * e).norm())
    });
    let passed = consistent
        && baxter <= SEED_TOL
        && wronskian.is_none_or(|w| w <= SEED_TOL)
        && edge.is_none_or(|e| e <= SEED_TOL);
    SeedReport {
        baxter_deviation: baxter,
        wronskian_deviation: wronskian,
        edge_deviation: edge,
        prefactors_consistent: consistent,
        passed,
    }
}
