use paraproduct_core::function_norms::{luxembourg_norm, modular, LogOrlicz, PowerOrlicz};
use paraproduct_core::martingale_ops::{
    conditional_square_function, expand, paraproducts, square_function, BaseConvention,
};
use paraproduct_core::measure_space::{conditional_expectation, restrict_space};
use paraproduct_core::verify::{martingale_on, random_filtration, trial_rng, Fixture, MartingaleKind, Shape};
use paraproduct_core::{Func, MeasureSpace};
use proptest::prelude::*;

fn fixture(seed: u64, n: usize, ragged: bool) -> (Fixture, Func, Func) {
    let mut rng = trial_rng(seed, n as u64);
    let shape = if ragged { Shape::Ragged } else { Shape::Balanced };
    let fx = random_filtration(&mut rng, n, 8, shape).unwrap();
    let f = martingale_on(&mut rng, &fx.space, &fx.filtration, MartingaleKind::Gaussian).unwrap();
    let g = martingale_on(&mut rng, &fx.space, &fx.filtration, MartingaleKind::Rademacher).unwrap();
    (fx, f, g)
}

fn close(a: &Func, b: &Func, scale: f64) -> bool {
    a.max_diff(b) <= 1e-12 * (1.0 + scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tower_and_projection(seed: u64, n in 2usize..80, ragged: bool) {
        let (fx, f, _) = fixture(seed, n, ragged);
        let (s, filt) = (&fx.space, &fx.filtration);
        let conds: Vec<Func> = filt.levels().iter().map(|p| conditional_expectation(s, p, &f).unwrap()).collect();
        for i in 0..filt.num_levels() {
            for j in i..filt.num_levels() {
                let tower = conditional_expectation(s, filt.at(i), &conds[j]).unwrap();
                prop_assert!(close(&tower, &conds[i], f.max_abs()));
                let proj = conditional_expectation(s, filt.at(j), &conds[i]).unwrap();
                prop_assert!(close(&proj, &conds[i], f.max_abs()));
            }
        }
    }

    #[test]
    fn conditional_expectation_preserves_integrals(seed: u64, n in 2usize..80, ragged: bool) {
        let (fx, f, _) = fixture(seed, n, ragged);
        let total = fx.space.integral(&f);
        for part in fx.filtration.levels() {
            let c = conditional_expectation(&fx.space, part, &f).unwrap();
            prop_assert!((fx.space.integral(&c) - total).abs() <= 1e-12 * (1.0 + f.max_abs()));
        }
    }

    #[test]
    fn differences_telescope(seed: u64, n in 2usize..80, ragged: bool) {
        let (fx, f, _) = fixture(seed, n, ragged);
        for conv in [BaseConvention::Zero, BaseConvention::Expectation] {
            let exp = expand(&fx.space, &fx.filtration, &f, conv).unwrap();
            let sum = exp.diffs().iter().fold(exp.base().clone(), |acc, d| acc.add(d));
            prop_assert!(close(&sum, &f, f.max_abs()));
        }
    }

    #[test]
    fn paraproducts_swap_roles(seed: u64, n in 2usize..80, ragged: bool) {
        let (fx, f, g) = fixture(seed, n, ragged);
        let fg = paraproducts(&fx.space, &fx.filtration, &f, &g).unwrap();
        let gf = paraproducts(&fx.space, &fx.filtration, &g, &f).unwrap();
        let scale = f.max_abs() * g.max_abs();
        prop_assert!(close(&fg.pi1, &gf.pi1, scale));
        prop_assert!(close(&fg.pi2, &gf.pi3, scale));
        prop_assert!(close(&fg.pi3, &gf.pi2, scale));
        prop_assert!(fg.residual(&f, &g) <= 1e-12 * (1.0 + scale));
    }

    #[test]
    fn square_functions_have_equal_energy(seed: u64, n in 2usize..80, ragged: bool) {
        let (fx, f, _) = fixture(seed, n, ragged);
        let exp = expand(&fx.space, &fx.filtration, &f, BaseConvention::Zero).unwrap();
        let big = square_function(&exp);
        let small = conditional_square_function(&fx.space, &fx.filtration, &exp).unwrap();
        let e_big = fx.space.integral(&big.mul(&big));
        let e_small = fx.space.integral(&small.mul(&small));
        prop_assert!((e_big - e_small).abs() <= 1e-10 * e_big.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn luxembourg_norm_solves_the_modular(
        values in prop::collection::vec(-1e3f64..1e3, 1..40),
        c in 1e-2f64..1e2,
    ) {
        prop_assume!(values.iter().any(|v| *v != 0.0));
        let s = MeasureSpace::uniform(values.len()).unwrap();
        let norm = luxembourg_norm(&s, &LogOrlicz, &values).unwrap();
        prop_assert!((modular(&s, &LogOrlicz, &values, norm) - 1.0).abs() <= 1e-8);
        let scaled: Vec<f64> = values.iter().map(|v| c * v).collect();
        let again = luxembourg_norm(&s, &LogOrlicz, &scaled).unwrap();
        prop_assert!((again - c * norm).abs() <= 1e-9 * c * norm);
        // For t^2 the Luxembourg norm is the L^2 norm.
        let l2 = luxembourg_norm(&s, &PowerOrlicz(2.0), &values).unwrap();
        let direct = (s.integral(&values.iter().map(|v| v * v).collect::<Vec<_>>())).sqrt();
        prop_assert!((l2 - direct).abs() <= 1e-9 * direct);
    }

    #[test]
    fn restriction_commutes_with_conditioning(seed: u64, n in 2usize..80, ragged: bool, pick: usize) {
        let (fx, f, _) = fixture(seed, n, ragged);
        let filt = &fx.filtration;
        let idx = pick % filt.num_levels();
        let part = filt.at(idx);
        let block = part.block(pick % part.len()).to_vec();
        let r = restrict_space(&fx.space, filt, filt.k_min() + idx as i32, &block).unwrap();
        prop_assert!((r.space.total_mass() - 1.0).abs() <= 1e-12);
        let local = r.restrict(&f);
        for j in 0..r.filtration.num_levels() {
            let lhs = conditional_expectation(&r.space, r.filtration.at(j), &local).unwrap();
            let full = conditional_expectation(&fx.space, filt.at(idx + j), &f).unwrap();
            prop_assert!(close(&lhs, &r.restrict(&full), f.max_abs()));
        }
    }
}
