//! Invariants checked on random inputs.

use proptest::prelude::*;

use simplechar::fields::{
    dft_full, idft_full, rotate_resample, rotation_matrix_2d, GridField, GridSpec,
};
use simplechar::multipliers::bump;
use simplechar::ode::{solve_first_order, FirstOrderProblem, Quadrature, SolveOptions};
use simplechar::poly::{discriminant_at, eval_univariate, MultiPoly};
use simplechar::roots::{partial_fractions, roots_of};
use simplechar::C64;

fn c64() -> impl Strategy<Value = C64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| C64::new(a, b))
}

fn separated_roots() -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec(c64(), 2..=6).prop_filter("simple roots", |rs| {
        rs.iter()
            .enumerate()
            .all(|(i, a)| rs[..i].iter().all(|b| (a - b).norm() > 0.2))
    })
}

fn expand(rs: &[C64]) -> Vec<C64> {
    let mut c = vec![C64::new(1.0, 0.0)];
    for r in rs {
        let mut next = vec![C64::default(); c.len() + 1];
        for (i, a) in c.iter().enumerate() {
            next[i + 1] += a;
            next[i] -= a * r;
        }
        c = next;
    }
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partial_fractions_invert_p(rs in separated_roots(), tau in c64()) {
        prop_assume!(rs.iter().all(|r| (r - tau).norm() > 0.05));
        let c = expand(&rs);
        let pf = partial_fractions(&roots_of(&c).unwrap()).unwrap();
        let exact = 1.0 / eval_univariate(&c, tau);
        prop_assert!((pf.eval(tau) - exact).norm() <= 1e-8 * exact.norm());
    }

    #[test]
    fn discriminant_shift_invariant(
        a in c64(), b in c64(), k in 0.5..3.0f64, t0 in -1.0..1.0f64, t1 in -1.0..1.0f64, r in -2.0..2.0f64,
    ) {
        prop_assume!(t0.abs() + t1.abs() > 0.2);
        let p = MultiPoly::parse(&format!("{k} - x1^2 - x2^2 + 0.5 * x1 * x2")).unwrap();
        let theta = [C64::new(t0, 0.0), C64::new(t1, 0.0)];
        let d0 = discriminant_at(&p, &theta, &[a, b]).unwrap();
        let d1 = discriminant_at(&p, &theta, &[a + theta[0] * r, b + theta[1] * r]).unwrap();
        prop_assert!((d0 - d1).norm() <= 1e-8 * d0.norm().max(1e-300));
    }

    #[test]
    fn dft_round_trip_and_plancherel(vals in prop::collection::vec(c64(), 64)) {
        let grid = GridSpec::cube(2, 8, 4.0);
        let f = GridField { grid, space: simplechar::fields::Space::Physical, data: vals };
        let fh = dft_full(&f).unwrap();
        prop_assert!((fh.l2_norm() - f.l2_norm()).abs() <= 1e-12 * f.l2_norm().max(1.0));
        let back = idft_full(&fh).unwrap();
        prop_assert!(back.sub(&f).unwrap().l2_norm() <= 1e-12 * f.l2_norm().max(1.0));
    }

    #[test]
    fn bump_is_a_cutoff(t in -10.0..10.0f64, eps in 0.01..2.0f64) {
        let v = bump(t, eps);
        prop_assert!((0.0..=1.0).contains(&v));
        if t.abs() <= eps { prop_assert_eq!(v, 0.0); }
        if t.abs() >= 2.0 * eps { prop_assert_eq!(v, 1.0); }
    }

    #[test]
    fn first_order_sup_bounded_by_l1(
        vals in prop::collection::vec(c64(), 16 * 8),
        re in -3.0..3.0f64, im in -2.0..2.0f64,
    ) {
        // g supported in the middle half of each line along axis 0
        let grid = GridSpec::cube(2, 16, 8.0);
        let mut g = GridField::zeros(grid.clone(), simplechar::fields::Space::Mixed(0));
        let mut idx = [0usize; 2];
        let mut k = 0;
        for i in 0..grid.len() {
            grid.unravel(i, &mut idx);
            if (4..12).contains(&idx[0]) {
                g.data[i] = vals[k];
                k += 1;
            }
        }
        let q = vec![C64::new(re, im); 16];
        let prob = FirstOrderProblem { q, p_prime: vec![C64::new(1.0, 0.0); 16], g };
        let opts = SolveOptions { quadrature: Quadrature::PiecewiseConstant, ..Default::default() };
        let (_, rep) = solve_first_order(&prob, &opts).unwrap();
        prop_assert!(rep.sup_over_l1 <= 1.0 + 1e-12);
        prop_assert!(rep.mixed_residual < 1e-12);
    }

    #[test]
    fn rotation_round_trip_of_gaussian(theta in 0.0..std::f64::consts::TAU, cx in -1.0..1.0f64, cy in -1.0..1.0f64) {
        // h = 0.25; at h = 0.5 this Gaussian aliases to ~3e-8 near 45 degrees
        let grid = GridSpec::cube(2, 128, 32.0);
        let f = GridField::from_fn(grid, |x| C64::new((-((x[0] - cx).powi(2) + (x[1] - cy).powi(2)) / 2.0).exp(), 0.0));
        let r = rotate_resample(&f, &rotation_matrix_2d(theta)).unwrap();
        prop_assert!(r.residual < 1e-8);
        prop_assert!((r.field.l2_norm() - f.l2_norm()).abs() < 1e-8 * f.l2_norm());
    }
}
