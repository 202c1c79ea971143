use fba_core::baxterflow::tropical_roots;
use fba_core::thermo::{
    density, density_functional_residual, density_mean, empirical_sup_error, partition_integral, partition_per_site,
    DensityModel,
};
use fba_core::C64;
use proptest::prelude::*;
use std::f64::consts::TAU;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `sum_{m>=1} x^m (w^m + w^-m)` summed in closed form.
fn kernel(x: C64, w: C64) -> C64 {
    x * w / (1.0 - x * w) + x / w / (1.0 - x / w)
}

/// Density with `1/(1 + (-q)^m)` expanded geometrically: a sum of Poisson kernels.
fn density_resummed(w: C64, s: C64, q: C64) -> C64 {
    let mut acc = c(1.0);
    let mut g = c(1.0);
    for k in 0..200 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * (kernel(s * g, w) + kernel(-q / s * g, w));
        g *= -q;
        if g.norm() < 1e-18 {
            break;
        }
    }
    acc
}

/// Partition series with both denominators expanded: a double sum of logarithms.
fn partition_resummed(z: C64, s: C64, q: C64) -> C64 {
    let log_pair = |x: C64| -(1.0 - x * z).ln() - (1.0 - x / z).ln();
    let mut acc = C64::new(0.0, 0.0);
    for a in 0..120 {
        for b in 0..120 {
            let g = q.powi(a) * (-q).powi(b);
            if g.norm() < 1e-18 {
                break;
            }
            let sign = if b % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * (log_pair(-q * g / s) - log_pair(-q * g * s));
        }
    }
    acc
}

#[test]
fn partition_series_matches_log_resummation() {
    for (s, q) in [(0.5, -0.1), (0.3, 0.2), (0.6, -0.25)] {
        let dm = DensityModel::new(s, q).unwrap();
        for k in 0..8 {
            let z = C64::from_polar(1.0, TAU * (k as f64 + 0.2) / 8.0);
            let a = partition_per_site(z, &dm).unwrap();
            let b = partition_resummed(z, c(s), c(q));
            assert!((a - b).norm() < 1e-12, "s={s} q={q}: {a} vs {b}");
        }
    }
}

#[test]
fn functional_equation_and_partition_integral() {
    let dm = DensityModel::new(0.5, -0.1).unwrap();
    assert!(density_functional_residual(&dm, 6).unwrap() < 1e-8);
    let z = C64::from_polar(1.0, 0.9);
    let (a, b) = (partition_per_site(z, &dm).unwrap(), partition_integral(z, &dm).unwrap());
    assert!((a - b).norm() < 1e-8, "{a} vs {b}");
}

#[test]
fn spacing_estimate_converges() {
    let s = c(0.5);
    let e32 = empirical_sup_error(&tropical_roots(32, s), s).unwrap();
    let e64 = empirical_sup_error(&tropical_roots(64, s), s).unwrap();
    assert!(e32 < 0.15 && e64 < e32 / 3.0, "{e32} {e64}");
}

#[test]
fn series_divergence_reported() {
    assert!(DensityModel::new(1.2, 0.1).is_err());
    assert!(DensityModel::new(0.05, 0.2).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn density_matches_resummation(s in 0.2..0.8f64, qr in -0.9..0.9f64, phi in 0.0..TAU) {
        // keep |q/s| < 1 with room to spare
        let q = qr * s * s;
        let dm = DensityModel::new(s, q).unwrap();
        let w = C64::from_polar(1.0, phi);
        let a = density(w, &dm).unwrap();
        let b = density_resummed(w, c(s), c(q));
        prop_assert!((a - b.re).abs() < 1e-11 && b.im.abs() < 1e-11, "{a} vs {b}");
        prop_assert!(a > 0.0);
    }

    #[test]
    fn density_normalized(s in 0.2..0.8f64, qr in -0.9..0.9f64) {
        let dm = DensityModel::new(s, qr * s * s).unwrap();
        prop_assert!((density_mean(&dm, 256).unwrap() - 1.0).norm() < 1e-13);
    }
}
