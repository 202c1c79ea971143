use fba_core::baxterflow::tropical_transfer;
use fba_core::tropical::{
    even_normalization_pair, even_seed, gluing_defect, ground_seed, k_branches, one_particle_seed, verify_seed, SEED_TOL,
};
use fba_core::C64;
use proptest::prelude::*;
use std::f64::consts::TAU;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

#[test]
fn ground_seed_reproduces_tropical_transfer() {
    // two unrelated constructions: the seed recursion and the closed-form roots
    for n in 1..=8 {
        let s = c(0.45);
        let seed = ground_seed(n, c(1.0), s).unwrap();
        if n >= 2 {
            let direct = tropical_transfer(n, s).to_laurent();
            assert!(seed.t0.poly.max_deviation(&direct) < 1e-12, "n={n}");
        }
        let sn = s.powi(n as i32);
        let w0 = (1.0 - sn) / (1.0 + sn);
        assert!((seed.w0.unwrap() - w0).norm() < 1e-14, "n={n}");
    }
}

#[test]
fn perimeter_layers_glue() {
    for n in 1..=6 {
        for phase in [0.3, 1.7, 2.9] {
            let seed = ground_seed(n, C64::from_polar(1.0, phase), c(0.6)).unwrap();
            for k in 1..=4 {
                assert!(gluing_defect(k, &seed).unwrap() < 1e-12, "n={n} k={k}");
            }
        }
    }
}

#[test]
fn one_particle_roots_solve_their_polynomial() {
    for n in 2..=8 {
        let s = c(0.35);
        for j in 0..n as i64 {
            let seed = one_particle_seed(n, s, j).unwrap();
            assert_eq!(seed.roots.len(), n);
            let om = C64::from_polar(1.0, TAU * j as f64 / n as f64);
            let sign = if n % 2 == 0 { -1.0 } else { 1.0 };
            let cc = sign * (1.0 - om * s) / (s - om);
            for w in &seed.roots {
                let p = w * (w - s).powi(n as i32) + cc * (1.0 - s * w).powi(n as i32);
                let scale = (w * (w - s).powi(n as i32)).norm() + (cc * (1.0 - s * w).powi(n as i32)).norm();
                assert!(p.norm() < 1e-12 * scale, "n={n} j={j}");
            }
            assert!(verify_seed(&seed).passed);
        }
    }
}

#[test]
fn even_seed_zeros_sit_at_momentum_factors() {
    let (n, s) = (6, c(0.4));
    for k in k_branches(n) {
        assert!((k.powi(2 * n as i32) - 1.0).norm() < 1e-14);
        let seed = even_seed(n, 2, s, &[0, 1, 3, 4], k).unwrap();
        for j in [0usize, 1, 3, 4] {
            let om = C64::from_polar(1.0, TAU * j as f64 / n as f64);
            // H0 carries the factors (1 - r_j z)
            let r = (s - k * om) / (1.0 - k * s * om);
            assert!(seed.h0.poly.eval(r.inv()).norm() < 1e-13);
        }
        let (a, b) = even_normalization_pair(n, s, &seed.subset, k);
        assert!((a - b).norm() < 1e-12 * a.norm());
        assert!(verify_seed(&seed).passed);
    }
}

#[test]
fn invalid_even_data_rejected() {
    let s = c(0.4);
    assert!(even_seed(4, 1, s, &[0], c(1.0)).is_err());
    assert!(even_seed(4, 1, s, &[0, 0], c(1.0)).is_err());
    assert!(even_seed(4, 2, s, &[0, 1, 2, 3], c(1.0)).is_err());
    assert!(even_seed(4, 1, s, &[0, 1], C64::from_polar(1.0, 0.3)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ground_seed_identities(n in 1usize..=8, phase in 0.0..TAU, s in 0.15..0.85f64) {
        let seed = ground_seed(n, C64::from_polar(1.0, phase), c(s)).unwrap();
        let rep = verify_seed(&seed);
        prop_assert!(rep.passed, "{rep:?}");
        prop_assert!(rep.baxter_deviation <= SEED_TOL);
    }

    #[test]
    fn even_normalizations_agree(n in 3usize..=8, s in 0.15..0.85f64, pick in any::<u64>(), branch in 0usize..2) {
        let m = (pick as usize % ((n - 1) / 2)) + 1;
        // deterministic subset of size 2m from the bits of `pick`
        let mut labels: Vec<usize> = (0..n).collect();
        let mut x = pick;
        for i in (1..n).rev() {
            labels.swap(i, (x % (i as u64 + 1)) as usize);
            x /= i as u64 + 1;
        }
        let subset = &labels[..2 * m];
        let k = k_branches(n)[branch];
        let (a, b) = even_normalization_pair(n, c(s), subset, k);
        prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
        let seed = even_seed(n, m, c(s), subset, k).unwrap();
        prop_assert!(verify_seed(&seed).passed);
    }
}
