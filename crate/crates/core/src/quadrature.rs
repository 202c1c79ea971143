//! Circle quadrature and the integral identities of the q-series calculus:
//! the pentagon beta-integral, its 6j rewriting and the inversion relation
//! tested in Fourier-mode space.
//!
//! Contours whose poles cannot be separated by a circle are handled by
//! [`family_integral`]: the integral is taken on a circle placed in a wide pole
//! gap, then corrected by the residues of poles that sit on the wrong side.
//! This realizes the limit of the radial nudge prescription exactly.

use crate::error::{FbaError, Result};
use crate::qspecial::{kappa_cg, kappa_const, sigma, QParams};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleContour {
    pub radius: f64,
    pub nodes: usize,
}

impl CircleContour {
    pub fn new(radius: f64, nodes: usize) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(FbaError::InvalidParams(format!("contour radius {radius}")));
        }
        if nodes < 16 {
            return Err(FbaError::InvalidParams("contour needs >= 16 nodes".into()));
        }
        Ok(Self { radius, nodes })
    }

    /// Geometric mean of the annulus bounds.
    pub fn in_annulus(lo: f64, hi: f64, nodes: usize) -> Result<Self> {
        if !(lo < hi) {
            return Err(FbaError::ContourInfeasible(format!("empty annulus ({lo}, {hi})")));
        }
        Self::new((lo * hi).sqrt(), nodes)
    }

    pub fn unit(nodes: usize) -> Result<Self> {
        Self::new(1.0, nodes)
    }

    /// Node `k` sits at angle `2 pi (k + 1/2) / nodes`.
    pub fn node(&self, k: usize) -> C64 {
        C64::from_polar(self.radius, 2.0 * PI * (k as f64 + 0.5) / self.nodes as f64)
    }
}

/// Sum in a fixed pairwise tree; the order depends only on the length.
pub fn pairwise_sum(xs: &[C64]) -> C64 {
    match xs.len() {
        0 => C64::new(0.0, 0.0),
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// `(1/2 pi i) \oint f(v) dv/v` on `c`: the mean of `f` over the nodes.
pub fn circle_integral<F>(f: F, c: &CircleContour) -> Result<C64>
where
    F: Fn(C64) -> Result<C64>,
{
    let mut vals = Vec::with_capacity(c.nodes);
    for k in 0..c.nodes {
        let v = c.node(k);
        let y = f(v)?;
        if !y.is_finite() {
            return Err(FbaError::NonFinite(format!("{v}")));
        }
        vals.push(y);
    }
    Ok(pairwise_sum(&vals) / c.nodes as f64)
}

/// Pole layout of an integrand in the variable `x`.
///
/// Each inner base `p` stands for the poles `p q^k` (k >= 0) that the contour
/// must enclose; each outer base `p` stands for the poles `p q^{-k}` that must
/// stay outside.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleFamilies {
    pub inner: Vec<C64>,
    pub outer: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyPlan {
    pub radius: f64,
    /// Poles whose residues are added (`+1`) or subtracted (`-1`).
    pub corrections: Vec<(C64, f64)>,
    pub residue_radii: Vec<f64>,
}

const RESIDUE_NODES: usize = 64;

fn family_poles(fam: &PoleFamilies, q: C64, lo: f64, hi: f64) -> Vec<(C64, bool)> {
    let aq = q.norm();
    let mut out = Vec::new();
    for &p in &fam.inner {
        let mut x = p;
        while x.norm() >= lo && x.norm() > 0.0 {
            if x.norm() <= hi {
                out.push((x, true));
            }
            x *= q;
            if aq == 0.0 {
                break;
            }
        }
    }
    for &p in &fam.outer {
        let mut x = p;
        while x.norm() <= hi {
            if x.norm() >= lo {
                out.push((x, false));
            }
            if aq == 0.0 {
                break;
            }
            x /= q;
        }
    }
    out
}

/// Circle radius and residue corrections for an integrand with the given
/// pole families.
pub fn plan_families(fam: &PoleFamilies, q: C64) -> Result<FamilyPlan> {
    let aq = q.norm();
    let m_in = fam.inner.iter().map(|p| p.norm()).fold(0.0, f64::max);
    let m_out = fam.outer.iter().map(|p| p.norm()).fold(f64::INFINITY, f64::min);
    if fam.inner.iter().chain(fam.outer.iter()).any(|p| !p.is_finite() || p.norm() == 0.0) {
        return Err(FbaError::ContourInfeasible("degenerate pole family base".into()));
    }
    // a separating circle is used only when it keeps a clear distance from both families
    let radius = if m_in * 1.5 < m_out || fam.inner.is_empty() || fam.outer.is_empty() {
        if fam.inner.is_empty() && fam.outer.is_empty() {
            1.0
        } else if fam.inner.is_empty() {
            m_out * aq.sqrt()
        } else if fam.outer.is_empty() {
            m_in / aq.sqrt()
        } else {
            (m_in * m_out).sqrt()
        }
    } else {
        // widest log-gap in the overlap region
        let lo = m_out * aq;
        let hi = m_in / aq;
        let mut lm: Vec<f64> = family_poles(fam, q, lo * aq, hi / aq)
            .iter()
            .map(|(x, _)| x.norm().ln())
            .collect();
        lm.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let (llo, lhi) = (m_out.ln(), m_in.ln());
        let mut best = (f64::NEG_INFINITY, 0.0);
        for w in lm.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            if mid < llo + aq.ln() || mid > lhi - aq.ln() {
                continue;
            }
            // prefer wide gaps, then radii close to the unit circle
            let score = (w[1] - w[0]) - 1e-3 * mid.abs();
            if score > best.0 {
                best = (score, mid);
            }
        }
        if !best.0.is_finite() || best.0 < 1e-8 {
            return Err(FbaError::ContourInfeasible("no pole gap for the contour".into()));
        }
        best.1.exp()
    };

    let mut corrections: Vec<(C64, f64)> = Vec::new();
    for &p in &fam.inner {
        let mut x = p;
        while x.norm() > radius {
            corrections.push((x, 1.0));
            x *= q;
        }
    }
    for &p in &fam.outer {
        let mut x = p;
        while x.norm() < radius {
            corrections.push((x, -1.0));
            x /= q;
        }
    }
    // coincident poles of the same kind are one higher-order pole
    let mut merged: Vec<(C64, f64)> = Vec::new();
    for (x, sgn) in corrections {
        if let Some(&(_, s0)) = merged.iter().find(|(y, _)| (x - *y).norm() < 1e-10 * (1.0 + x.norm())) {
            if s0 != sgn {
                return Err(FbaError::ContourInfeasible(format!("pinched pole at {x}")));
            }
        } else {
            merged.push((x, sgn));
        }
    }
    let all = family_poles(fam, q, radius * aq * aq * 1e-2, radius / (aq * aq) * 1e2);
    let mut radii = Vec::with_capacity(merged.len());
    for &(x, _) in &merged {
        let mut d = 0.3 * x.norm();
        for &(y, _) in &all {
            let dist = (x - y).norm();
            if dist > 1e-10 * (1.0 + x.norm()) {
                d = d.min(0.3 * dist);
            }
        }
        d = d.min(0.3 * (x.norm() - radius).abs());
        radii.push(d);
    }
    Ok(FamilyPlan { radius, corrections: merged, residue_radii: radii })
}

/// `(1/2 pi i) \oint f(x) dx/x` over a small circle around `pole`.
pub fn residue_dx_over_x<F>(f: &F, pole: C64, rho: f64, nodes: usize) -> Result<C64>
where
    F: Fn(C64) -> Result<C64>,
{
    let mut vals = Vec::with_capacity(nodes);
    for k in 0..nodes {
        let e = C64::from_polar(rho, 2.0 * PI * (k as f64 + 0.5) / nodes as f64);
        let x = pole + e;
        vals.push(f(x)? * e / x);
    }
    Ok(pairwise_sum(&vals) / nodes as f64)
}

/// Contour integral `(1/2 pi i) \oint f(x) dx/x` along the contour that
/// separates inner from outer pole families.
pub fn family_integral<F>(f: F, fam: &PoleFamilies, q: C64, nodes: usize) -> Result<C64>
where
    F: Fn(C64) -> Result<C64>,
{
    let plan = plan_families(fam, q)?;
    family_integral_with(&f, &plan, nodes)
}

pub fn family_integral_with<F>(f: &F, plan: &FamilyPlan, nodes: usize) -> Result<C64>
where
    F: Fn(C64) -> Result<C64>,
{
    let c = CircleContour::new(plan.radius, nodes)?;
    let mut total = circle_integral(f, &c)?;
    for (&(x, sgn), &rho) in plan.corrections.iter().zip(plan.residue_radii.iter()) {
        total += sgn * residue_dx_over_x(f, x, rho, RESIDUE_NODES)?;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub lhs: C64,
    pub rhs: C64,
    pub relerr: f64,
}

impl IdentityCheck {
    pub fn new(lhs: C64, rhs: C64) -> Self {
        Self { lhs, rhs, relerr: (lhs - rhs).norm() / rhs.norm().max(f64::MIN_POSITIVE) }
    }
}

/// Bounds `(max |q/b_j|, min 1/|a_j|)` of the pentagon contour annulus.
pub fn pentagon_annulus(a: &[C64; 3], b: &[C64; 3], q: C64) -> (f64, f64) {
    let lo = b.iter().map(|bj| (q / bj).norm()).fold(0.0, f64::max);
    let hi = a.iter().map(|aj| 1.0 / aj.norm()).fold(f64::INFINITY, f64::min);
    (lo, hi)
}

/// Beta-integral for the pentagon equation:
/// `(1/kappa_s) \oint prod sigma(a_j v)/sigma(b_j v) = prod_{j,k} 1/sigma(b_j/a_k)`
/// under `b1 b2 b3 = q^2 a1 a2 a3`.
pub fn pentagon_check(a: &[C64; 3], b: &[C64; 3], p: &QParams, c: &CircleContour) -> Result<IdentityCheck> {
    let q2 = p.q * p.q;
    let ratio = b[0] * b[1] * b[2] / (a[0] * a[1] * a[2]);
    if (ratio - q2).norm() > 1e-12 * q2.norm() {
        return Err(FbaError::Constraint(format!("b1b2b3/(a1a2a3) = {ratio}, expected q^2 = {q2}")));
    }
    let (lo, hi) = pentagon_annulus(a, b, p.q);
    if !(lo < hi) {
        return Err(FbaError::ContourInfeasible(format!("empty annulus ({lo}, {hi})")));
    }
    if !(lo < c.radius && c.radius < hi) {
        return Err(FbaError::ContourInfeasible(format!("radius {} outside ({lo}, {hi})", c.radius)));
    }
    let integrand = |v: C64| -> Result<C64> {
        let mut acc = C64::new(1.0, 0.0);
        for j in 0..3 {
            acc *= sigma(a[j] * v, p)? * sigma(-p.q / (b[j] * v), p)?;
        }
        Ok(acc)
    };
    let lhs = circle_integral(integrand, c)? / kappa_const(p);
    let mut rhs = C64::new(1.0, 0.0);
    for bj in b {
        for ak in a {
            rhs *= sigma(-p.q * ak / bj, p)?;
        }
    }
    Ok(IdentityCheck::new(lhs, rhs))
}

/// Pole families (in `x'`) of the 6j integrand.
pub fn sixj_families(v: &[C64; 3], x: C64, y: C64, q: C64) -> PoleFamilies {
    PoleFamilies {
        inner: vec![v[1], -q / (v[0] * v[1] * v[2]), y / x],
        outer: vec![v[0].inv(), y / v[2], x.inv()],
    }
}

/// The 6j form of the pentagon identity:
/// `(1/kappa_s) \oint dx'/x' kappa(x'v1, v2/x') kappa(y v1 v2, x' v3/y) kappa(y/(x x'), x x')
///  = kappa(y v1/x, v2 v3/y) kappa(x v2, v3/x)`.
pub fn sixj_check(v: &[C64; 3], x: C64, y: C64, p: &QParams, nodes: usize) -> Result<IdentityCheck> {
    let fam = sixj_families(v, x, y, p.q);
    let integrand = |xp: C64| -> Result<C64> {
        Ok(kappa_cg(xp * v[0], v[1] / xp, p)?
            * kappa_cg(y * v[0] * v[1], xp * v[2] / y, p)?
            * kappa_cg(y / (x * xp), x * xp, p)?)
    };
    let lhs = family_integral(integrand, &fam, p.q, nodes)? / kappa_const(p);
    let rhs = kappa_cg(y * v[0] / x, v[1] * v[2] / y, p)? * kappa_cg(x * v[1], v[2] / x, p)?;
    Ok(IdentityCheck::new(lhs, rhs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionReport {
    pub pairing: C64,
    pub expected: C64,
    pub relerr: f64,
    /// Set when the node count is below `4|m|`.
    pub resolution_warning: bool,
}

/// Inversion relation of the CG weights paired against `x''^m`:
/// `(1/kappa_s) \oint dx'/x' kappa(y/(x x'), x x') \oint dx''/x'' x''^m kappa(x' x''/y, 1/(x' x''))`
/// must equal `kappa_s x^m`, the mode-space image of `2 pi kappa_s delta(phi_x - phi_x'')`.
pub fn inversion_check(x: C64, y: C64, m: i32, p: &QParams, c: &CircleContour) -> Result<InversionReport> {
    if m.abs() > 20 {
        return Err(FbaError::InvalidParams(format!("mode {m} exceeds |m| <= 20")));
    }
    let q = p.q;
    let inner = |xp: C64| -> Result<C64> {
        let fam = PoleFamilies { inner: vec![xp.inv()], outer: vec![y / xp] };
        let g = |xpp: C64| -> Result<C64> { Ok(xpp.powi(m) * kappa_cg(xp * xpp / y, (xp * xpp).inv(), p)?) };
        family_integral(g, &fam, q, c.nodes)
    };
    let outer = |xp: C64| -> Result<C64> { Ok(kappa_cg(y / (x * xp), x * xp, p)? * inner(xp)?) };
    let fam = PoleFamilies { inner: vec![y / x], outer: vec![x.inv()] };
    let ks = kappa_const(p);
    let pairing = family_integral(outer, &fam, q, c.nodes)? / ks;
    let expected = ks * x.powi(m);
    Ok(InversionReport {
        pairing,
        expected,
        relerr: (pairing - expected).norm() / expected.norm(),
        resolution_warning: c.nodes < 4 * m.unsigned_abs() as usize,
    })
}

/// Tanh-sinh rule on `(a, b)` with step `2^-level`; nodes are generated as
/// offsets from the nearer endpoint so endpoint singularities are resolved.
pub fn tanh_sinh<F>(f: F, a: f64, b: f64, level: u32) -> Result<C64>
where
    F: Fn(f64) -> Result<C64>,
{
    let h = 0.5f64.powi(level as i32);
    let half = 0.5 * (b - a);
    let tmax = 4.0;
    let kmax = (tmax / h).ceil() as i64;
    let mut vals = Vec::with_capacity(2 * kmax as usize + 1);
    for k in -kmax..=kmax {
        let t = k as f64 * h;
        let u = 0.5 * PI * t.sinh();
        let ch = u.cosh();
        let w = 0.5 * PI * t.cosh() / (ch * ch);
        // distance to the nearer endpoint, (b-a)/(1+e^{2|u|})
        let off = (b - a) / (1.0 + (2.0 * u.abs()).exp());
        if off <= 0.0 {
            continue;
        }
        let x = if t < 0.0 { a + off } else if t > 0.0 { b - off } else { a + half };
        if x <= a.min(b) || x >= a.max(b) {
            continue;
        }
        let y = f(x)?;
        if !y.is_finite() {
            return Err(FbaError::NonFinite(format!("tanh-sinh node {x}")));
        }
        vals.push(y * w);
    }
    Ok(pairwise_sum(&vals) * half * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_basics() {
        let c = CircleContour::new(0.8, 64).unwrap();
        let one = circle_integral(|_| Ok(C64::new(1.0, 0.0)), &c).unwrap();
        assert!((one - 1.0).norm() < 1e-15);
        for k in [-5, -1, 1, 3, 31] {
            let v = circle_integral(|z: C64| Ok(z.powi(k)), &c).unwrap();
            assert!(v.norm() < 1e-14, "k={k}: {v}");
        }
        let a = C64::new(0.5, 0.3);
        let v = circle_integral(|z: C64| Ok(1.0 / (1.0 - a * z)), &c).unwrap();
        assert!((v - 1.0).norm() < 1e-14);
    }

    #[test]
    fn laurent_constant_term() {
        let c = CircleContour::new(1.0, 64).unwrap();
        let coeffs = [(-3, C64::new(0.2, 1.0)), (0, C64::new(-1.5, 0.25)), (7, C64::new(4.0, 0.0))];
        let v = circle_integral(|z: C64| Ok(coeffs.iter().map(|&(k, a)| a * z.powi(k)).sum()), &c).unwrap();
        assert!((v - coeffs[1].1).norm() < 1e-14);
    }

    #[test]
    fn family_integral_matches_partial_fractions() {
        // f(x) = 1/((1 - a/x)(1 - x/b)) has mean 1 on any separating circle;
        // a pole family {a q^k} with a outside the forced circle is corrected.
        let q = C64::new(0.3, 0.0);
        let a = C64::new(0.6, 0.2);
        let b = C64::new(1.1, -0.3);
        let f = |x: C64| Ok(1.0 / ((1.0 - a / x) * (1.0 - x / b)));
        let fam = PoleFamilies { inner: vec![a], outer: vec![b] };
        let direct = family_integral(f, &fam, q, 128).unwrap();
        assert!((direct - 1.0 / (1.0 - a / b)).norm() < 1e-13, "{direct}");
        let swapped = PoleFamilies { inner: vec![b * 1.0], outer: vec![a] };
        let plan = plan_families(&swapped, q).unwrap();
        assert!(!plan.corrections.is_empty());
        let g = |x: C64| Ok(1.0 / ((1.0 - b / x) * (1.0 - x / a)));
        let v = family_integral_with(&g, &plan, 128).unwrap();
        assert!((v - 1.0 / (1.0 - b / a)).norm() < 1e-12, "{v}");
    }

    #[test]
    fn tanh_sinh_log_endpoint() {
        let v = tanh_sinh(|x| Ok(C64::new(x.ln(), 0.0)), 0.0, 1.0, 6).unwrap();
        assert!((v + 1.0).norm() < 1e-13, "{v}");
        let v = tanh_sinh(|x| Ok(C64::new(1.0 / x.sqrt(), 0.0)), 0.0, 4.0, 6).unwrap();
        assert!((v - 4.0).norm() < 1e-12, "{v}");
    }

    #[test]
    fn pentagon_rejects_broken_constraint() {
        let p = QParams::new(0.2, 0.5).unwrap();
        let a = [C64::new(0.5, 0.1), C64::new(0.45, -0.2), C64::new(0.6, 0.0)];
        let mut b = [C64::new(0.17, 0.0), C64::new(0.05, 0.17), C64::new(0.18, -0.02)];
        let prod = a[0] * a[1] * a[2] * p.q * p.q / (b[0] * b[1]);
        b[2] = prod;
        let (lo, hi) = pentagon_annulus(&a, &b, p.q);
        let c = CircleContour::in_annulus(lo, hi, 512).unwrap();
        assert!(pentagon_check(&a, &b, &p, &c).is_ok());
        b[2] *= 1.01;
        assert!(matches!(pentagon_check(&a, &b, &p, &c), Err(FbaError::Constraint(_))));
    }

    #[test]
    fn pentagon_empty_annulus() {
        let p = QParams::new(0.2, 0.5).unwrap();
        let a = [C64::new(0.9, 0.0), C64::new(0.9, 0.0), C64::new(0.9, 0.0)];
        let b = [C64::new(0.02, 0.0), C64::new(0.9 * 0.9 * 0.9 * 0.04 / (0.02 * 0.5), 0.0), C64::new(0.5, 0.0)];
        let c = CircleContour::new(1.0, 64).unwrap();
        assert!(matches!(pentagon_check(&a, &b, &p, &c), Err(FbaError::ContourInfeasible(_))));
    }

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Admissible pentagon data: |a_j| in [0.4, 0.7], b_j near the
    /// geometric scale fixed by the constraint.
    pub(crate) fn random_pentagon(rng: &mut ChaCha8Rng, q: C64) -> ([C64; 3], [C64; 3]) {
        let a = [0; 3].map(|_| C64::from_polar(rng.gen_range(0.4..0.7), rng.gen_range(0.0..std::f64::consts::TAU)));
        let scale = (q.norm().powi(2) * a.iter().map(|x| x.norm()).product::<f64>()).cbrt();
        let b0 = C64::from_polar(scale * rng.gen_range(0.9..1.1), rng.gen_range(0.0..std::f64::consts::TAU));
        let b1 = C64::from_polar(scale * rng.gen_range(0.9..1.1), rng.gen_range(0.0..std::f64::consts::TAU));
        let b2 = q * q * a[0] * a[1] * a[2] / (b0 * b1);
        (a, [b0, b1, b2])
    }

    #[test]
    fn pentagon_random_sets() {
        let p = QParams::new(0.2, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..5 {
            let (a, b) = random_pentagon(&mut rng, p.q);
            let (lo, hi) = pentagon_annulus(&a, &b, p.q);
            let c = CircleContour::in_annulus(lo, hi, 512).unwrap();
            let r = pentagon_check(&a, &b, &p, &c).unwrap();
            assert!(r.relerr < 1e-10, "{r:?}");
            // radius independence inside the annulus
            let c2 = CircleContour::new(lo.powf(0.3) * hi.powf(0.7), 512).unwrap();
            let r2 = pentagon_check(&a, &b, &p, &c2).unwrap();
            assert!((r2.lhs - r.lhs).norm() < 1e-10 * r.lhs.norm());
        }
    }

    #[test]
    fn sixj_unimodular() {
        let p = QParams::new(0.2, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..3 {
            let v = [0; 3].map(|_| C64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU)));
            let x = C64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
            let y = C64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
            let r = sixj_check(&v, x, y, &p, 256).unwrap();
            assert!(r.relerr < 1e-10, "{r:?}");
        }
    }

    #[test]
    fn inversion_modes() {
        let p = QParams::new(0.2, 0.5).unwrap();
        let x = C64::from_polar(1.0, 0.7);
        let y = C64::from_polar(1.0, -1.9);
        let c = CircleContour::unit(64).unwrap();
        for m in [0, 3, -2] {
            let r = inversion_check(x, y, m, &p, &c).unwrap();
            assert!(r.relerr < 1e-10, "m={m}: {r:?}");
            assert!(!r.resolution_warning);
        }
        let r = inversion_check(x, y, 5, &p, &CircleContour::unit(16).unwrap()).unwrap();
        assert!(r.resolution_warning);
    }
}
