use afc_core::estimation::{aic_compare, mle, mme, robust_init};
use afc_core::harness::{simulate_dataset, StudyDesign};
use afc_core::model::log_likelihood;
use afc_core::optim::{nelder_mead, NelderMeadOptions};
use afc_core::sampler::{run_chain, ChainConfig};
use afc_core::{AfcModel, Direction, FamilyKind, Observation};
use rand::seq::SliceRandom;
use rand::SeedableRng;

fn sim(family: FamilyKind) -> AfcModel {
    AfcModel::from_params(family, 1.0, 2.0, 3.0, -4.0, 0.5, Direction::Positive).unwrap()
}

fn dataset(model: &AfcModel, n: usize, seed: u64) -> Vec<Observation> {
    run_chain(
        model,
        &ChainConfig::new(n, seed).with_burn_in(2000).with_thin(5),
    )
    .unwrap()
    .draws
}

const TRUTH: [f64; 5] = [1.0, 2.0, 3.0, -4.0, 0.5];

#[test]
fn logistic_mle_within_three_reference_ses() {
    // n = 1000 standard errors for (α, β, λ, γ, τ)
    let se = [0.012, 0.056, 0.080, 0.116, 0.094];
    let d = dataset(&sim(FamilyKind::Logistic), 1000, 11);
    let fit = mle(&d, FamilyKind::Logistic, Direction::Positive, None).unwrap();
    assert!(fit.converged);
    for j in 0..5 {
        let est = fit.params.params()[j];
        assert!((est - TRUTH[j]).abs() <= 3.0 * se[j], "param {j}: {est}");
    }
}

#[test]
fn cauchy_mle_from_default_init() {
    let se = [0.012, 0.090, 0.080, 0.091, 0.216];
    let d = dataset(&sim(FamilyKind::Cauchy), 1000, 12);
    assert!(mme(&d, FamilyKind::Cauchy, Direction::Positive).is_err());
    let init = robust_init(&d, FamilyKind::Cauchy, Direction::Positive).unwrap();
    assert_eq!(init.tau(), 0.5);
    let fit = mle(&d, FamilyKind::Cauchy, Direction::Positive, None).unwrap();
    assert!(fit.converged);
    assert!(fit.rho_hat.is_none());
    for j in 0..5 {
        let est = fit.params.params()[j];
        assert!((est - TRUTH[j]).abs() <= 3.0 * se[j], "param {j}: {est}");
    }
}

/// Maximizes a one-block log-likelihood by Nelder–Mead on log-scales.
fn max_loglik(f: impl Fn(&[f64]) -> f64, x0: &[f64]) -> f64 {
    let opts = NelderMeadOptions {
        f_tol: 1e-14,
        x_tol: 1e-10,
        ..Default::default()
    };
    -nelder_mead(|t| -f(t), x0, &opts).value
}

#[test]
fn independent_data_factorizes() {
    let truth = sim(FamilyKind::Logistic).independent();
    let d = dataset(&truth, 400, 13);
    // fit in the direction opposite to the sample covariance so the
    // likelihood peaks on the τ = 0 boundary
    let s12 = afc_core::estimation::compute_moments(&d).unwrap().s12;
    let direction = if s12 > 0.0 {
        Direction::Negative
    } else {
        Direction::Positive
    };
    let fit = mle(&d, FamilyKind::Logistic, direction, None).unwrap();
    assert!(fit.params.tau() < 0.05, "tau {}", fit.params.tau());

    let weibull = max_loglik(
        |t| {
            let (a, l) = (t[0].exp(), t[1].exp());
            d.iter()
                .map(|o| {
                    let ax = a * o.x;
                    l.ln() + a.ln() + (l - 1.0) * ax.ln() - ax.powf(l)
                })
                .sum()
        },
        &[0.0, 1.0],
    );
    let logistic = max_loglik(
        |t| {
            let (g, b) = (t[0], t[1].exp());
            d.iter()
                .map(|o| {
                    let z = (o.y - g) / b;
                    -z.abs() - 2.0 * (-z.abs()).exp().ln_1p() - b.ln()
                })
                .sum()
        },
        &[-4.0, 0.5],
    );
    let separate = weibull + logistic;
    assert!(
        (fit.loglik - separate).abs() <= 1e-6,
        "{} vs {separate}",
        fit.loglik
    );
}

#[test]
fn mle_improves_on_initializer_and_aic_identity() {
    for (i, family) in FamilyKind::DEPENDENT.into_iter().enumerate() {
        let d = dataset(&sim(family), 300, 40 + i as u64);
        let fit = mle(&d, family, Direction::Positive, None).unwrap();
        assert_eq!(fit.aic + 2.0 * fit.loglik, 10.0);
        if fit.converged {
            assert!(fit.loglik >= fit.init_loglik.unwrap() - 1e-9);
        }
        if family != FamilyKind::Cauchy {
            let start = mme(&d, family, Direction::Positive).unwrap();
            assert!(fit.loglik >= start.loglik - 1e-9);
        }
    }
}

#[test]
fn selection_invariant_under_permutation() {
    let d = dataset(&sim(FamilyKind::Laplace), 500, 50);
    let mut shuffled = d.clone();
    shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(1));
    let rank = |data: &[Observation]| {
        let fits: Vec<_> = [
            FamilyKind::Logistic,
            FamilyKind::Laplace,
            FamilyKind::Cauchy,
        ]
        .into_iter()
        .map(|f| mle(data, f, Direction::Positive, None).unwrap())
        .collect();
        let r = aic_compare(&fits).unwrap();
        r.iter().find(|e| e.selected).unwrap().family
    };
    assert_eq!(rank(&d), rank(&shuffled));
    let m = sim(FamilyKind::Laplace);
    let a = log_likelihood(&m, &d).unwrap();
    let b = log_likelihood(&m, &shuffled).unwrap();
    assert!((a - b).abs() <= 1e-9 * a.abs());
}

#[test]
fn consistency_trend_median_absolute_error() {
    let model = sim(FamilyKind::Logistic);
    let design = StudyDesign::new(model, vec![100, 1000], 2718);
    let mut errs = vec![[Vec::new(), Vec::new()]; 5];
    for r in 0..50 {
        for (k, &n) in [100usize, 1000].iter().enumerate() {
            let d = simulate_dataset(&design, n, r).unwrap();
            let fit = mle(&d, FamilyKind::Logistic, Direction::Positive, None).unwrap();
            for j in 0..5 {
                errs[j][k].push((fit.params.params()[j] - TRUTH[j]).abs());
            }
        }
    }
    let median = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        0.5 * (v[v.len() / 2 - 1] + v[v.len() / 2])
    };
    for (j, pair) in errs.iter_mut().enumerate() {
        let small = median(&mut pair[0]);
        let large = median(&mut pair[1]);
        assert!(large < small, "param {j}: {large} !< {small}");
    }
}

#[test]
fn aic_prefers_laplace_on_laplace_data() {
    let model = sim(FamilyKind::Laplace);
    let mut design = StudyDesign::new(model, vec![2000], 31_337);
    design.replicates = 100;
    let mut wins = 0;
    for r in 0..design.replicates {
        let d = simulate_dataset(&design, 2000, r).unwrap();
        let fits: Vec<_> = [
            FamilyKind::Logistic,
            FamilyKind::Laplace,
            FamilyKind::Cauchy,
        ]
        .into_iter()
        .map(|f| mle(&d, f, Direction::Positive, None).unwrap())
        .collect();
        let ranking = aic_compare(&fits).unwrap();
        if ranking[0].family == FamilyKind::Laplace {
            wins += 1;
        }
    }
    assert!(wins >= 60, "Laplace selected in {wins}/100");
}
