use afc_core::estimation::{compute_moments, wald_ci};
use afc_core::model::{log_likelihood, rho_max};
use afc_core::quadrature::{mixed_partial, verify_shift_identity};
use afc_core::{AfcModel, Direction, FamilyKind, Observation, QuadratureSpec};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = FamilyKind> {
    prop::sample::select(FamilyKind::DEPENDENT.to_vec())
}

fn direction() -> impl Strategy<Value = Direction> {
    prop::sample::select(vec![Direction::Positive, Direction::Negative])
}

prop_compose! {
    fn model()(
        family in family(),
        direction in direction(),
        alpha in 0.2f64..3.0,
        beta in 0.2f64..4.0,
        lambda in 0.3f64..6.0,
        gamma in -10.0f64..10.0,
        tau in 0.0f64..=1.0,
    ) -> AfcModel {
        let direction = if family == FamilyKind::Gumbel { Direction::Positive } else { direction };
        AfcModel::from_params(family, alpha, beta, lambda, gamma, tau, direction).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn joint_survival_is_a_survival_function(m in model(), x in 0.01f64..5.0, y in -30.0f64..30.0, dx in 0.0f64..2.0, dy in 0.0f64..5.0) {
        let s = m.joint_survival(x, y).unwrap();
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert!(m.joint_survival(x + dx, y).unwrap() <= s);
        prop_assert!(m.joint_survival(x, y + dy).unwrap() <= s);
        prop_assert!(s <= m.marginal().survival(x).unwrap());
        prop_assert!(s <= m.y_survival(y) + 1e-15);
    }

    #[test]
    fn density_is_non_negative(m in model(), x in 0.01f64..5.0, y in -40.0f64..40.0) {
        prop_assert!(m.joint_density(x, y).unwrap() >= 0.0);
    }

    #[test]
    fn density_matches_mixed_partial(m in model(), q in 0.05f64..0.95, t in -3.0f64..3.0) {
        let x = m.marginal().quantile(q);
        let y = m.mu(x) + m.beta() * t;
        prop_assume!(x > 1e-3);
        // keep the stencil off the Laplace ridge
        prop_assume!(m.family() != FamilyKind::Laplace || t.abs() > 0.01);
        let exact = m.joint_density(x, y).unwrap();
        // step scaled to the fastest local rate of change of the survival surface
        let rate = 1.0 / x + m.marginal().hazard(x).unwrap() + (m.mu_deriv(x).abs() + 1.0) / m.beta();
        let fd = mixed_partial(&m, x, y, 2e-3 / rate).unwrap();
        prop_assert!((fd - exact).abs() <= 1e-4 * exact.abs() + 1e-9, "{} vs {}", fd, exact);
    }

    #[test]
    fn r_ratio_is_tau_to_lambda(m in model(), x in 0.01f64..10.0) {
        let r = m.r_ratio(x).unwrap();
        prop_assert!((r - m.tau().powf(m.lambda())).abs() <= 1e-12);
    }

    #[test]
    fn correlation_within_bound(m in model()) {
        prop_assume!(m.family() != FamilyKind::Cauchy);
        let rho = m.correlation().unwrap();
        let bound = rho_max(m.family(), m.lambda()).unwrap();
        prop_assert!(rho.abs() <= bound + 1e-12);
        if rho != 0.0 {
            prop_assert_eq!(rho > 0.0, m.direction() == Direction::Positive);
        }
    }

    #[test]
    fn moments_satisfy_cauchy_schwarz(pairs in prop::collection::vec((0.01f64..10.0, -50.0f64..50.0), 2..60)) {
        let data: Vec<Observation> = pairs.iter().map(|&(x, y)| Observation { x, y }).collect();
        let m = compute_moments(&data).unwrap();
        prop_assert!(m.s1 >= 0.0 && m.s2 >= 0.0);
        prop_assert!(m.s12.abs() <= (m.s1 * m.s2).sqrt() + 1e-12);
    }

    #[test]
    fn wald_interval_is_symmetric(est in -100.0f64..100.0, se in 0.0f64..10.0, level in 0.01f64..0.99) {
        let (lo, hi) = wald_ci(est, se, level).unwrap();
        prop_assert!(lo <= est && est <= hi);
        prop_assert!(((est - lo) - (hi - est)).abs() <= 1e-9 * (1.0 + se));
    }

    #[test]
    fn log_likelihood_is_additive(m in model(), pairs in prop::collection::vec((0.05f64..3.0, -8.0f64..8.0), 1..20)) {
        let data: Vec<Observation> = pairs.iter().map(|&(x, y)| Observation { x, y: m.gamma() + y }).collect();
        let total = log_likelihood(&m, &data).unwrap();
        prop_assume!(total > -1e299);
        let parts: f64 = data.iter().map(|o| log_likelihood(&m, std::slice::from_ref(o)).unwrap()).sum();
        prop_assert!((total - parts).abs() <= 1e-9 * (1.0 + total.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn shift_identity_holds(k in prop::sample::select(FamilyKind::ALL.to_vec()), beta in 0.2f64..5.0, mu in -10.0f64..10.0, gamma in -10.0f64..10.0) {
        let r = verify_shift_identity(k, beta, mu, gamma, &QuadratureSpec::default()).unwrap();
        prop_assert!(r.abs() <= 1e-6, "{}", r);
    }
}
