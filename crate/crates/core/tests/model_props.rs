use std::f64::consts::PI;

use nrlimit::model::{
    gradient_sq, inner, make_grid, norm_h1, norm_hhalf, norm_l2, spectral_shift, to_physical,
    to_spectral, Grid, RealField,
};
use proptest::prelude::*;

/// Sum of a few low Fourier modes; exactly representable on the grid.
fn band_limited(grid: &Grid, modes: &[(i32, i32, f64, f64)]) -> RealField {
    let k0 = 2.0 * PI / grid.length();
    grid.sample(|x| {
        modes
            .iter()
            .map(|&(a, b, ac, as_)| {
                let ph = k0 * (a as f64 * x[0] + b as f64 * x[1]);
                ac * ph.cos() + as_ * ph.sin()
            })
            .sum()
    })
}

fn mode_strategy() -> impl Strategy<Value = Vec<(i32, i32, f64, f64)>> {
    prop::collection::vec((-7i32..=7, -7i32..=7, -1.0..1.0f64, -1.0..1.0f64), 1..6)
}

fn values_strategy(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transform_round_trip(vals in values_strategy(32 * 32), len in 4.0..40.0f64) {
        let g = make_grid(2, len, 32).unwrap();
        let f = RealField::new(&g, vals).unwrap();
        let back = to_physical(&to_spectral(&f));
        let d = back.sub(&f).unwrap().max_abs();
        prop_assert!(d <= 1e-12 * f.max_abs().max(1e-300), "{d}");
    }

    #[test]
    fn parseval(vals in values_strategy(16 * 16 * 16), len in 4.0..40.0f64) {
        let g = make_grid(3, len, 16).unwrap();
        let f = RealField::new(&g, vals).unwrap();
        let phys = norm_l2(&f).powi(2);
        let spec = to_spectral(&f).weighted_sq_sum(|_| 1.0);
        prop_assert!((phys - spec).abs() <= 1e-12 * phys);
    }

    #[test]
    fn h1_splits_into_l2_and_gradient(modes in mode_strategy(), len in 8.0..40.0f64) {
        let g = make_grid(2, len, 32).unwrap();
        let f = band_limited(&g, &modes);
        let l2 = norm_l2(&f).powi(2);
        prop_assume!(l2 > 1e-6);
        let grad = gradient_sq(&f);
        let h1 = norm_h1(&f).powi(2);
        prop_assert!((h1 - l2 - grad).abs() <= 1e-10 * h1);
        // closed form: each real mode contributes (1 + |k|²)(a² + b²) L²/2, or L² for k = 0
        let k0 = 2.0 * PI / len;
        let mut coeffs = std::collections::BTreeMap::new();
        for &(a, b, ac, as_) in &modes {
            let key = if (a, b) < (-a, -b) { (-a, -b) } else { (a, b) };
            let flip = if key == (a, b) { 1.0 } else { -1.0 };
            let e = coeffs.entry(key).or_insert((0.0, 0.0));
            e.0 += ac;
            e.1 += flip * as_;
        }
        let want: f64 = coeffs
            .iter()
            .map(|(&(a, b), &(ac, as_))| {
                let ksq = k0 * k0 * (a * a + b * b) as f64;
                if (a, b) == (0, 0) {
                    ac * ac * len * len
                } else {
                    (1.0 + ksq) * (ac * ac + as_ * as_) * len * len / 2.0
                }
            })
            .sum();
        prop_assert!((h1 - want).abs() <= 1e-10 * want.max(1e-12), "{h1} {want}");
    }

    #[test]
    fn hhalf_between_l2_and_h1(vals in values_strategy(32 * 32), len in 4.0..40.0f64) {
        let g = make_grid(2, len, 32).unwrap();
        let f = RealField::new(&g, vals).unwrap();
        let (l2, hh, h1) = (norm_l2(&f), norm_hhalf(&f), norm_h1(&f));
        prop_assert!(l2 <= hh * (1.0 + 1e-12));
        prop_assert!(hh <= h1 * (1.0 + 1e-12));
    }

    #[test]
    fn inner_product_is_symmetric(
        a in values_strategy(16 * 16),
        b in values_strategy(16 * 16),
    ) {
        let g = make_grid(2, 10.0, 16).unwrap();
        let f = RealField::new(&g, a).unwrap();
        let h = RealField::new(&g, b).unwrap();
        prop_assert_eq!(inner(&f, &h).unwrap(), inner(&h, &f).unwrap());
    }

    #[test]
    fn integer_shifts_preserve_norms(
        vals in values_strategy(32 * 32),
        sx in -16i32..16,
        sy in -16i32..16,
    ) {
        let g = make_grid(2, 16.0, 32).unwrap();
        let f = RealField::new(&g, vals).unwrap();
        let h = g.spacing();
        let s = spectral_shift(&f, &[sx as f64 * h, sy as f64 * h]);
        let (a, b) = (norm_h1(&f), norm_h1(&s));
        prop_assert!((a - b).abs() <= 1e-12 * a);
        let back = spectral_shift(&s, &[-(sx as f64) * h, -(sy as f64) * h]);
        prop_assert!(back.sub(&f).unwrap().max_abs() <= 1e-12);
    }
}
