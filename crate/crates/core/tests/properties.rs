//! Randomized invariants: algebraic identities that must hold for every
//! admissible input, checked over proptest-generated fields, symbols, and
//! atom measures.

use std::f64::consts::PI;

use proptest::prelude::*;

use nwl_core::spectral::multiply_dealiased;
use nwl_core::symbols::difference;
use nwl_core::{
    apply_l, bessel, build_kernel, cm_test, fkdv, from_atoms, galilean_shift, symmetry_defect,
    whitham, MeasureAtoms, PeriodicGrid, SpectralField, Symbol, WaveProfile,
};

const N: usize = 64;

/// Real band-limited field from random cosine/sine amplitudes (modes
/// 1..=kmax, plus a mean).
fn band_limited(grid: PeriodicGrid, mean: f64, amps: &[(f64, f64)]) -> SpectralField {
    SpectralField::from_fn(grid, |x| {
        let mut v = mean;
        for (k, &(a, b)) in amps.iter().enumerate() {
            let kf = (k + 1) as f64;
            v += a * (kf * x).cos() + b * (kf * x).sin();
        }
        v
    })
}

fn amp() -> impl Strategy<Value = (f64, f64)> {
    ((-1.0..1.0f64), (-1.0..1.0f64))
}

fn arb_symbol() -> impl Strategy<Value = Symbol> {
    prop_oneof![
        (-2.0..-0.25f64).prop_map(|r| fkdv(r).unwrap()),
        Just(whitham()),
        (-2.0..-0.25f64).prop_map(bessel),
    ]
}

fn arb_atoms() -> impl Strategy<Value = MeasureAtoms> {
    proptest::collection::vec(((0.05..0.95f64), (0.1..2.0f64)), 1..=5)
        .prop_map(|a| MeasureAtoms::new(a).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Parseval: mean of values^2 equals the coefficient energy.
    #[test]
    fn parseval(mean in -1.0..1.0f64, amps in proptest::collection::vec(amp(), 1..20)) {
        let g = PeriodicGrid::new(N).unwrap();
        let f = band_limited(g, mean, &amps);
        let physical: f64 =
            f.values().iter().map(|v| v * v).sum::<f64>() / N as f64;
        // each signed frequency occupies one bin; k = -n/2+1 ..= n/2 covers
        // all n of them exactly once
        let spectral: f64 = (-(N as i64) / 2 + 1..=(N as i64) / 2)
            .map(|k| f.coeff(k).norm_sqr())
            .sum();
        let scale = physical.abs().max(1.0);
        prop_assert!((physical - spectral).abs() <= 1e-10 * scale,
            "physical {physical:.12e} vs spectral {spectral:.12e}");
    }

    /// Dealiased product equals the brute-force coefficient convolution
    /// for fields band-limited to |k| <= n/3.
    #[test]
    fn dealiased_product_is_exact(
        a in proptest::collection::vec(amp(), 1..=20),
        b in proptest::collection::vec(amp(), 1..=20),
    ) {
        let g = PeriodicGrid::new(N).unwrap();
        let f = band_limited(g, 0.0, &a);
        let h = band_limited(g, 0.0, &b);
        let prod = multiply_dealiased(&f, &h).unwrap();
        // brute-force convolution of the signed-frequency coefficients
        let half = (N / 2) as i64;
        for k in -half + 1..half {
            let mut conv = num_complex::Complex64::new(0.0, 0.0);
            for l in -half + 1..half {
                let m = k - l;
                if m.abs() >= half {
                    continue;
                }
                conv += f.coeff(l) * h.coeff(m);
            }
            let got = prod.coeff(k);
            prop_assert!((got - conv).norm() <= 1e-12 * (1.0 + conv.norm()),
                "mode {k}: {got} vs {conv}");
        }
    }

    /// apply_l is linear.
    #[test]
    fn multiplier_is_linear(
        s in arb_symbol(),
        a in proptest::collection::vec(amp(), 1..=10),
        b in proptest::collection::vec(amp(), 1..=10),
        alpha in -2.0..2.0f64,
        beta in -2.0..2.0f64,
    ) {
        let g = PeriodicGrid::new(N).unwrap();
        // zero mean keeps homogeneous symbols in-domain
        let f = band_limited(g, 0.0, &a);
        let h = band_limited(g, 0.0, &b);
        let combo = f.scale(alpha).add(&h.scale(beta));
        let lhs = apply_l(&s, &combo).unwrap();
        let rhs = apply_l(&s, &f).unwrap().scale(alpha)
            .add(&apply_l(&s, &h).unwrap().scale(beta));
        let scale = rhs.max_abs().max(1.0);
        prop_assert!(lhs.sub(&rhs).max_abs() <= 1e-12 * scale);
    }

    /// Built-in symbols are even in k, exactly.
    #[test]
    fn symbol_evenness(s in arb_symbol(), k in 0i64..1000) {
        prop_assert_eq!(s.eval(k).unwrap(), s.eval(-k).unwrap());
    }

    /// Binomial difference formula agrees with the recursive definition.
    #[test]
    fn difference_matches_recursion(s in arb_symbol(), n in 0usize..=8, k in 1i64..60) {
        fn recursive(s: &Symbol, n: usize, k: i64) -> f64 {
            if n == 0 {
                return s.eval(k).unwrap();
            }
            recursive(s, n - 1, k + 1) - recursive(s, n - 1, k)
        }
        let b = difference(&s, n, k).unwrap();
        let r = recursive(&s, n, k);
        prop_assert!((b - r).abs() <= 1e-12 * (1.0 + b.abs().max(r.abs())));
    }

    /// Moment sequences of atom measures are completely monotone, strictly
    /// positive, and strictly decreasing.
    #[test]
    fn atom_sequences_are_cm(a in arb_atoms()) {
        let s = from_atoms(a);
        // the CM sequence is the moment sequence n_k = m(sqrt k) = sum w t^k
        let seq = |k: u64| s.eval_real((k as f64).sqrt()).unwrap();
        let rep = cm_test(&seq, 8, 50, 0).unwrap();
        prop_assert!(rep.passed);
        prop_assert!(rep.min_signed_difference >= -1e-12);
        for k in 1..50 {
            prop_assert!(seq(k) > 0.0);
            prop_assert!(seq(k + 1) < seq(k));
        }
    }

    /// Kernels of atom symbols are even on mirrored grid points.
    #[test]
    fn kernel_evenness(a in arb_atoms()) {
        let g = PeriodicGrid::new(N).unwrap();
        let s = from_atoms(a);
        let kt = build_kernel(&s, &g, 10_000).unwrap();
        let scale = kt.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for j in 1..N {
            let d = (kt.values()[j] - kt.values()[N - j]).abs();
            prop_assert!(d <= 1e-12 * scale, "j={j}: asymmetry {d:.3e}");
        }
    }

    /// Shift by a grid multiple then back restores the field exactly
    /// (including the Nyquist mode).
    #[test]
    fn shift_roundtrip(
        a in proptest::collection::vec(amp(), 1..=20),
        cells in 1usize..N,
    ) {
        let g = PeriodicGrid::new(N).unwrap();
        let f = band_limited(g, 0.3, &a);
        let delta = cells as f64 * g.spacing();
        let back = f.shift(delta).shift(-delta);
        prop_assert!(f.sub(&back).max_abs() <= 1e-13 * f.max_abs().max(1.0));
    }

    /// Galilean shift then its inverse restores the profile.
    #[test]
    fn galilean_roundtrip(gamma in -0.5..0.5f64, amp1 in 0.01..0.2f64) {
        let g = PeriodicGrid::new(N).unwrap();
        let p = WaveProfile::from_parts(
            SpectralField::from_fn(g, |x| amp1 * x.cos()),
            1.2,
            0.0,
            whitham(),
        ).unwrap();
        let back = galilean_shift(&galilean_shift(&p, gamma).unwrap(), -gamma).unwrap();
        prop_assert!(p.phi.sub(&back.phi).max_abs() <= 1e-13);
        prop_assert!((p.c - back.c).abs() <= 1e-13);
        prop_assert!((p.b - back.b).abs() <= 1e-13);
    }

    /// The symmetry defect of an even field vanishes, whatever its modes.
    #[test]
    fn even_fields_have_zero_defect(
        cos_amps in proptest::collection::vec(-1.0..1.0f64, 1..=10),
    ) {
        let g = PeriodicGrid::new(N).unwrap();
        let p = WaveProfile::from_parts(
            SpectralField::from_fn(g, |x| {
                cos_amps.iter().enumerate()
                    .map(|(k, a)| a * ((k + 1) as f64 * x).cos())
                    .sum()
            }),
            1.0,
            0.0,
            whitham(),
        ).unwrap();
        let osc = p.phi.max() - p.phi.min();
        if osc < 1e-3 {
            return Ok(()); // degenerate near-constant draw
        }
        let (defect, axis) = symmetry_defect(&p);
        prop_assert!(defect <= 1e-10 * osc.max(1.0), "defect {defect:.3e}");
        // the detected axis is a multiple of the half-period up to grid snap
        let snapped = (axis / PI).round() * PI;
        prop_assert!((axis - snapped).abs() <= 2.0 * g.spacing());
    }
}
