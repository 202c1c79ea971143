//! Thermodynamic limit: density of Bethe roots on the unit circle and the
//! free energy per site, with a spacing-based estimate from finite root sets.
//!
//! The density is
//! `P(w) = 1 + sum_{m>=1} p_m (w^m + w^-m)`, `p_m = (s^m + (-q/s)^m)/(1 + (-q)^m)`,
//! which at `q = 0` resums to `(1 - s^2)/|1 - s w|^2` for real `s`.

use crate::error::{FbaError, Result};
use crate::qspecial::{log_sigma, QParams};
use crate::quadrature::tanh_sinh;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Truncation target for the Fourier series.
pub const SERIES_TOL: f64 = 1e-12;

/// Tanh-sinh refinement level used for the circle integrals.
const TS_LEVEL: u32 = 7;

fn terms_for(rho: f64, what: &str) -> Result<usize> {
    if !(rho < 1.0) {
        return Err(FbaError::Tail(format!("{what}: geometric ratio {rho} >= 1")));
    }
    if rho == 0.0 {
        return Ok(1);
    }
    // tail 4 rho^(M+1)/(1 - rho) < tol: two modes w^(+-m), two geometric pieces each
    let m = ((0.25 * SERIES_TOL * (1.0 - rho)).ln() / rho.ln()).ceil().max(1.0);
    if m > 1e6 {
        return Err(FbaError::Tail(format!("{what}: {m} terms needed")));
    }
    Ok(m as usize)
}

#[derive(Debug, Clone, Copy)]
pub struct DensityModel {
    pub s: C64,
    pub q: C64,
    pub terms: usize,
}

impl DensityModel {
    pub fn new(s: impl Into<C64>, q: impl Into<C64>) -> Result<Self> {
        let (s, q) = (s.into(), q.into());
        let rho = s.norm().max((q / s).norm());
        if q.norm() >= 1.0 {
            return Err(FbaError::InvalidParams("|q| must be < 1".into()));
        }
        Ok(Self { s, q, terms: terms_for(rho, "density")? })
    }

    /// Fourier coefficient `p_m` (`p_0 = 1`).
    pub fn mode(&self, m: usize) -> C64 {
        if m == 0 {
            return C64::new(1.0, 0.0);
        }
        let mi = m as i32;
        (self.s.powi(mi) + (-self.q / self.s).powi(mi)) / (1.0 + (-self.q).powi(mi))
    }

    fn params(&self) -> Result<QParams> {
        QParams::new(self.q, self.s)
    }
}

/// Complex value of the truncated series at unimodular `w`.
pub fn density_complex(w: C64, dm: &DensityModel) -> Result<C64> {
    if (w.norm() - 1.0).abs() > 1e-12 {
        return Err(FbaError::Domain(format!("density needs |w| = 1, got {}", w.norm())));
    }
    let (mut acc, mut wm) = (C64::new(1.0, 0.0), C64::new(1.0, 0.0));
    for m in 1..=dm.terms {
        wm *= w;
        acc += dm.mode(m) * (wm + wm.inv());
    }
    Ok(acc)
}

/// `P(w)`; errors if the series value is not real.
pub fn density(w: C64, dm: &DensityModel) -> Result<f64> {
    let v = density_complex(w, dm)?;
    if v.im.abs() > SERIES_TOL * v.norm().max(1.0) {
        return Err(FbaError::Domain(format!("density has imaginary part {}", v.im)));
    }
    Ok(v.re)
}

/// `q = 0` closed form `1 + s w/(1 - s w) + s w^-1/(1 - s w^-1)`.
pub fn density_tropical(w: C64, s: C64) -> C64 {
    1.0 + s * w / (1.0 - s * w) + s / w / (1.0 - s / w)
}

/// Constant Fourier mode of the series, by trapezoid quadrature on `nodes` points.
pub fn density_mean(dm: &DensityModel, nodes: usize) -> Result<C64> {
    let vals = (0..nodes)
        .map(|k| density_complex(C64::from_polar(1.0, 2.0 * PI * (k as f64 + 0.5) / nodes as f64), dm))
        .collect::<Result<Vec<_>>>()?;
    Ok(crate::quadrature::pairwise_sum(&vals) / nodes as f64)
}

/// `(1/2 pi) int f(z e^{i theta}) d theta`, split at `theta = 0` where the
/// integrands below have a log singularity or a branch jump.
fn circle_mean_split<F: Fn(C64) -> Result<C64>>(z: C64, f: F) -> Result<C64> {
    // nodes this close to the singular endpoint carry weights far below the tolerance
    let g = |t: f64| if t.abs() < 1e-12 { Ok(C64::new(0.0, 0.0)) } else { f(z * C64::from_polar(1.0, t)) };
    let left = tanh_sinh(g, -PI, 0.0, TS_LEVEL)?;
    let right = tanh_sinh(g, 0.0, PI, TS_LEVEL)?;
    Ok((left + right) / (2.0 * PI))
}

/// Left side of the defining equation of the density at `z`:
/// `log sigma(s z)/sigma(s/z) + (1/2 pi i) oint dw/w P(w) log sigma(w/z)/sigma(z/w)`,
/// with `P` supplied by the caller.
pub fn density_equation_lhs<P: Fn(C64) -> Result<C64>>(z: C64, s: C64, q: C64, density: P) -> Result<C64> {
    let p = QParams::new(q, s)?;
    let free = log_sigma(s * z, &p)? - log_sigma(s / z, &p)?;
    let integral = circle_mean_split(z, |w| Ok(density(w)? * (log_sigma(w / z, &p)? - log_sigma(z / w, &p)?)))?;
    Ok(free + integral)
}

/// Sample points on `|z| = 1`, offset from the real axis.
pub fn sample_points(count: usize) -> Vec<C64> {
    (0..count).map(|k| C64::from_polar(1.0, 2.0 * PI * (k as f64 + 0.37) / count as f64)).collect()
}

/// Maximum modulus of [`density_equation_lhs`] over `samples` points of the unit circle.
pub fn density_functional_residual(dm: &DensityModel, samples: usize) -> Result<f64> {
    functional_residual_with(dm, samples, |w| density_complex(w, dm))
}

pub fn functional_residual_with<P: Fn(C64) -> Result<C64> + Copy>(
    dm: &DensityModel,
    samples: usize,
    density: P,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for z in sample_points(samples) {
        worst = worst.max(density_equation_lhs(z, dm.s, dm.q, density)?.norm());
    }
    Ok(worst)
}

/// Free energy per site from its Fourier series
/// `sum_m (-q)^m (s^-m - s^m)(z^m + z^-m) / (m (1 - q^m)(1 + (-q)^m))`.
pub fn partition_per_site(z: C64, dm: &DensityModel) -> Result<C64> {
    let (s, q) = (dm.s, dm.q);
    let r = z.norm().max(1.0 / z.norm());
    let terms = terms_for((q / s).norm() * r, "partition series")?;
    let mut acc = C64::new(0.0, 0.0);
    for m in 1..=terms {
        let mi = m as i32;
        let num = (-q).powi(mi) * (s.powi(-mi) - s.powi(mi)) * (z.powi(mi) + z.powi(-mi));
        let den = m as f64 * (1.0 - q.powi(mi)) * (1.0 + (-q).powi(mi));
        acc += num / den;
    }
    Ok(acc)
}

/// Integral form `-log sigma(s z) + (1/2 pi i) oint dw/w P(w) log sigma(z/w)` on `|z| = 1`.
pub fn partition_integral(z: C64, dm: &DensityModel) -> Result<C64> {
    let p = dm.params()?;
    let free = -log_sigma(dm.s * z, &p)?;
    let integral = circle_mean_split(z, |w| Ok(density_complex(w, dm)? * log_sigma(z / w, &p)?))?;
    Ok(free + integral)
}

/// Spacing estimate `P(phi_mid) = 2 pi/(n dphi)` from unimodular roots.
#[derive(Debug, Clone)]
pub struct EmpiricalDensity {
    pub midpoints: Vec<f64>,
    pub values: Vec<f64>,
    pub bandwidth: f64,
}

fn wrap(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

impl EmpiricalDensity {
    /// Periodic linear interpolation of the midpoint values, or a periodic
    /// Gaussian smoothing when `bandwidth > 0`.
    pub fn eval(&self, phi: f64) -> f64 {
        let n = self.midpoints.len();
        if self.bandwidth > 0.0 {
            let (mut num, mut den) = (0.0, 0.0);
            for (m, v) in self.midpoints.iter().zip(&self.values) {
                let d = wrap(phi - m);
                let k = (-0.5 * (d / self.bandwidth).powi(2)).exp();
                num += k * v;
                den += k;
            }
            return num / den;
        }
        let i = self.midpoints.partition_point(|m| *m <= phi);
        let (a, b) = ((i + n - 1) % n, i % n);
        let span = wrap(self.midpoints[b] - self.midpoints[a]).rem_euclid(2.0 * PI);
        let t = if span > 0.0 { wrap(phi - self.midpoints[a]).rem_euclid(2.0 * PI) / span } else { 0.0 };
        self.values[a] * (1.0 - t) + self.values[b] * t
    }
}

pub fn empirical_density(roots: &[C64], bandwidth: f64) -> Result<EmpiricalDensity> {
    let n = roots.len();
    if n < 2 {
        return Err(FbaError::InvalidParams("need at least two roots".into()));
    }
    if let Some(w) = roots.iter().find(|w| (w.norm() - 1.0).abs() > 1e-6) {
        return Err(FbaError::Domain(format!("root {w} is not unimodular")));
    }
    let mut phi: Vec<f64> = roots.iter().map(|w| w.arg()).collect();
    phi.sort_by(|a, b| a.total_cmp(b));
    let mut mids = Vec::with_capacity(n);
    let mut vals = Vec::with_capacity(n);
    for k in 0..n {
        let (a, b) = (phi[k], if k + 1 < n { phi[k + 1] } else { phi[0] + 2.0 * PI });
        let d = b - a;
        if d < 1e-12 {
            return Err(FbaError::ZeroCollision(format!("duplicate root at angle {a}")));
        }
        mids.push(wrap(0.5 * (a + b)));
        vals.push(2.0 * PI / (n as f64 * d));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| mids[i].total_cmp(&mids[j]));
    Ok(EmpiricalDensity {
        midpoints: order.iter().map(|&i| mids[i]).collect(),
        values: order.iter().map(|&i| vals[i]).collect(),
        bandwidth,
    })
}

/// Largest deviation of the spacing estimate from the `q = 0` closed form,
/// measured at the spacing midpoints.
pub fn empirical_sup_error(roots: &[C64], s: C64) -> Result<f64> {
    let e = empirical_density(roots, 0.0)?;
    Ok(e.midpoints
        .iter()
        .zip(&e.values)
        .map(|(m, v)| (v - density_tropical(C64::from_polar(1.0, *m), s).re).abs())
        .fold(0.0, f64::max))
}
