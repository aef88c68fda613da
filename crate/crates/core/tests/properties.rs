use proptest::prelude::*;

use gspear::geometry::{comparison_modulus, default_t_grid, gnorm_dominance_check, RankOneFunctional};
use gspear::gnorm::{delta_profile, default_delta_grid, random_operators, GContext, Method};
use gspear::hilbert::partial_isometry_verdict;
use gspear::indices::{estimate_index, index_chain_check, IndexKind};
use gspear::linalg::{c, C64};
use gspear::numrange::{nu_g, v_range_sample};
use gspear::operators::{attainment_set, is_partial_isometry, normalize, op_norm, svd_decompose};
use gspear::rng::{gaussian_matrix, rng};
use gspear::spear::{relative_spear_check, spear_check, Verdict};
use gspear::{Field, Matrix, OperatorSpec, SolverBudget, SpaceSpec, Vector};

fn budget() -> SolverBudget {
    SolverBudget::default()
}

fn ctx(g: &OperatorSpec) -> GContext {
    GContext::new(g, 1e-8, &budget()).unwrap()
}

fn p_strategy() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![1.0, 2.0, f64::INFINITY])
}

fn random_g(s: &SpaceSpec, seed: u64) -> OperatorSpec {
    let m = gaussian_matrix(&mut rng(seed), s.dim(), s.dim(), s.field());
    normalize(&OperatorSpec::on(s, m).unwrap(), &budget()).unwrap()
}

fn signed_swap(s: &SpaceSpec, sign: f64) -> OperatorSpec {
    let m = Matrix::from_real_rows(&[vec![0.0, sign], vec![1.0, 0.0]]).unwrap();
    OperatorSpec::on(s, m).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn support_functionals_are_norming(p in p_strategy(), x in prop::collection::vec(-3.0f64..3.0, 3)) {
        prop_assume!(x.iter().any(|v| v.abs() > 1e-3));
        let s = SpaceSpec::real_lp(p, 3);
        let x = Vector(x.into_iter().map(c).collect());
        for f in s.support_functionals(&x, 1e-9).unwrap() {
            prop_assert!((s.dual_norm_eval(&f).unwrap() - 1.0).abs() <= 1e-9);
            let fx: C64 = f.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
            prop_assert!((fx.re - s.norm(&x)).abs() <= 1e-9 && fx.im.abs() <= 1e-9);
        }
    }

    #[test]
    fn attainment_points_attain(p in p_strategy(), n in 2usize..4, seed in 0u64..500) {
        let s = SpaceSpec::real_lp(p, n);
        let g = random_g(&s, seed);
        let a = attainment_set(&g, 1e-8, &budget()).unwrap();
        for x in a.representatives() {
            prop_assert!(g.image_norm(&x) >= a.norm - a.tol - 1e-12);
            prop_assert!((s.norm(&x) - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn euclidean_op_norm_is_top_singular_value(n in 1usize..5, seed in 0u64..500) {
        let s = SpaceSpec::real_lp(2.0, n);
        let t = OperatorSpec::on(&s, gaussian_matrix(&mut rng(seed), n, n, Field::Real)).unwrap();
        let sv = svd_decompose(&t).unwrap().singular_values[0];
        prop_assert!((op_norm(&t, &budget()).unwrap().value - sv).abs() <= 1e-10);
    }

    #[test]
    fn partial_isometries_reproduce(d in prop::collection::vec(prop::sample::select(vec![0.0, 1.0]), 3), seed in 0u64..500) {
        let s = SpaceSpec::real_lp(2.0, 3);
        let q = svd_decompose(&OperatorSpec::on(&s, gaussian_matrix(&mut rng(seed), 3, 3, Field::Real)).unwrap()).unwrap();
        let u = Matrix::from_cols(&q.left_vectors);
        let a = u.mul(&Matrix::diag(&d)).mul(&u.adjoint());
        let op = OperatorSpec::on(&s, a.clone()).unwrap();
        let tol = 1e-9;
        prop_assert!(is_partial_isometry(&op, tol).unwrap());
        let res = a.mul(&a.adjoint()).mul(&a).sub(&a).frobenius();
        prop_assert!(res <= 3.0 * tol * a.frobenius() + 1e-15);
    }

    #[test]
    fn gnorm_is_a_seminorm(p in p_strategy(), seed in 0u64..500) {
        let s = SpaceSpec::real_lp(p, 2);
        let cx = ctx(&random_g(&s, seed));
        let ts = random_operators(cx.g(), 2, seed + 1);
        let sum = ts[0].with_matrix(ts[0].matrix().add(ts[1].matrix())).unwrap();
        let v = |t: &OperatorSpec| cx.g_norm(t, Method::Auto).unwrap().value;
        prop_assert!(v(&sum) <= v(&ts[0]) + v(&ts[1]) + 1e-8);
    }

    #[test]
    fn delta_profile_decreases_to_gnorm(n in 2usize..4, seed in 0u64..500) {
        let s = SpaceSpec::real_lp(2.0, n);
        let g = random_g(&s, seed);
        let t = random_operators(&g, 1, seed + 7).remove(0);
        let prof = delta_profile(&t, &g, &default_delta_grid(), &budget()).unwrap();
        let exact = ctx(&g).g_norm(&t, Method::HilbertExact).unwrap().value;
        for w in prof.entries.windows(2) {
            prop_assert!(w[0].1 >= w[1].1 - 1e-8);
        }
        for &(_, sd) in &prof.entries {
            prop_assert!(sd >= exact - 1e-8);
        }
    }

    #[test]
    fn nu_is_unitarily_invariant_for_identity(n in 2usize..4, seed in 0u64..500) {
        let s = SpaceSpec::lp(2.0, n, Field::Complex).unwrap();
        let cx = ctx(&OperatorSpec::identity(&s));
        let t = random_operators(cx.g(), 1, seed).remove(0);
        let q = svd_decompose(&OperatorSpec::on(&s, gaussian_matrix(&mut rng(seed + 3), n, n, Field::Complex)).unwrap()).unwrap();
        let u = Matrix::from_cols(&q.left_vectors);
        let conj = t.with_matrix(u.mul(t.matrix()).mul(&u.adjoint())).unwrap();
        let (a, b) = (nu_g(&t, &cx).unwrap().value, nu_g(&conj, &cx).unwrap().value);
        prop_assert!((a - b).abs() <= 1e-8, "{} vs {}", a, b);
    }

    #[test]
    fn sampled_range_within_radius(p in p_strategy(), seed in 0u64..500) {
        let s = SpaceSpec::real_lp(p, 2);
        let cx = ctx(&random_g(&s, seed));
        let t = random_operators(cx.g(), 1, seed + 5).remove(0);
        let nu = nu_g(&t, &cx).unwrap();
        prop_assume!(nu.certified);
        let gn = cx.g_norm(&t, Method::Auto).unwrap().value;
        prop_assert!(nu.value <= gn + 1e-8);
        for pt in v_range_sample(&t, &cx, 20, seed).unwrap().points {
            prop_assert!(pt.value.norm() <= nu.value + 1e-8);
        }
    }

    #[test]
    fn spears_are_relative_spears(sign in prop::sample::select(vec![-1.0, 1.0]), p in prop::sample::select(vec![1.0, f64::INFINITY]), seed in 0u64..100) {
        let s = SpaceSpec::real_lp(p, 2);
        let g = signed_swap(&s, sign);
        let sp = spear_check(&g, 10, seed, 1e-8, &budget()).unwrap();
        let rel = relative_spear_check(&ctx(&g), 10, seed).unwrap();
        if sp.verdict == Verdict::PlausibleYes {
            prop_assert_eq!(rel.verdict, Verdict::PlausibleYes);
        }
    }

    #[test]
    fn composition_with_isometry_keeps_relative_spear(sign in prop::sample::select(vec![-1.0, 1.0]), seed in 0u64..100) {
        let s = SpaceSpec::real_lp(1.0, 2);
        let g = OperatorSpec::on(&s, Matrix::from_real_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap()).unwrap();
        prop_assert_eq!(relative_spear_check(&ctx(&g), 10, seed).unwrap().verdict, Verdict::PlausibleYes);
        let ug = g.with_matrix(signed_swap(&s, sign).matrix().mul(g.matrix())).unwrap();
        prop_assert_eq!(relative_spear_check(&ctx(&ug), 10, seed).unwrap().verdict, Verdict::PlausibleYes);
    }

    #[test]
    fn relative_spear_hilbert_g_is_partial_isometry(s in prop::sample::select(vec![0.0, 0.3, 0.7, 1.0]), seed in 0u64..100) {
        let sp = SpaceSpec::real_lp(2.0, 2);
        let g = OperatorSpec::on(&sp, Matrix::diag(&[1.0, s])).unwrap();
        let cx = ctx(&g);
        if relative_spear_check(&cx, 10, seed).unwrap().verdict == Verdict::PlausibleYes {
            prop_assert!(partial_isometry_verdict(&cx, 1e-8).unwrap().is_pi);
        }
    }

    #[test]
    fn functional_ignores_joint_sign(x in prop::collection::vec(-2.0f64..2.0, 2), y in prop::collection::vec(-2.0f64..2.0, 2)) {
        let (xc, yc): (Vec<C64>, Vec<C64>) = (x.iter().map(|&v| c(v)).collect(), y.iter().map(|&v| c(v)).collect());
        let neg = |v: &[C64]| v.iter().map(|z| -z).collect::<Vec<_>>();
        prop_assert_eq!(RankOneFunctional::new(xc.clone(), yc.clone()).w, RankOneFunctional::new(neg(&xc), neg(&yc)).w);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn index_estimates_are_antitone_in_deck_size(p in p_strategy(), seed in 0u64..100) {
        let s = SpaceSpec::real_lp(p, 2);
        let cx = GContext::new(&random_g(&s, seed), 1e-9, &budget()).unwrap();
        for kind in IndexKind::ALL {
            let small = estimate_index(&cx, kind, 4, seed).unwrap().value;
            let large = estimate_index(&cx, kind, 12, seed).unwrap().value;
            prop_assert!(large <= small + 1e-12, "{}: {} > {}", kind, large, small);
        }
    }

    #[test]
    fn identity_chain(p in p_strategy(), seed in 0u64..100) {
        let s = SpaceSpec::real_lp(p, 2);
        let ch = index_chain_check(&GContext::new(&OperatorSpec::identity(&s), 1e-9, &budget()).unwrap(), 6, seed).unwrap();
        prop_assert_eq!(ch.n1.value, 1.0);
        prop_assert!((ch.ng.value - ch.n2.value).abs() <= 1e-12);
    }

    #[test]
    fn limit_implies_dominance(p in p_strategy(), seed in 0u64..100) {
        let s = SpaceSpec::real_lp(p, 2);
        let g1 = random_g(&s, seed);
        let g2 = random_g(&s, seed + 1000);
        for (a, b) in [(&g1, &g1), (&g1, &g2)] {
            let (c1, c2) = (ctx(a), ctx(b));
            let m = comparison_modulus(&c1, b, &default_t_grid(), seed).unwrap();
            let d = gnorm_dominance_check(&c1, &c2, &default_t_grid(), 8, seed).unwrap();
            if m.limit_ok {
                prop_assert!(d.dominance_ok, "excess {}", d.max_excess);
            }
        }
    }
}
