//! Exact-enumeration checks of the estimator and variance formulas.

use sampler_core::designs::Design;
use sampler_core::estimators::{multinomial_variance, poisson_variance, var_ht_exact};
use sampler_core::oracle::{distribution_moments, enumerate_distribution, exact_inclusion};
use sampler_core::{Population, ProbabilityVector};

fn pop(y: &[f64]) -> Population {
    Population::from_values(y.to_vec()).unwrap()
}

#[test]
fn poisson_enumeration_is_unbiased_with_formula_variance() {
    let p = pop(&[1.0, 1.0]);
    let pv = ProbabilityVector::new(vec![0.5, 0.5]).unwrap();
    let out = enumerate_distribution(Design::Poisson, &p, &pv).unwrap();
    let (mass, mean, var) = distribution_moments(&out);
    assert_eq!(mass, 1.0);
    assert_eq!(mean, 2.0);
    assert_eq!(var, poisson_variance(&pv, p.y()).unwrap());
}

#[test]
fn srs_variance_matches_enumeration() {
    let p = pop(&[1.0, 2.0, 3.0, 4.0]);
    let pv = ProbabilityVector::uniform(4, 2).unwrap();
    let out = enumerate_distribution(Design::Srswor, &p, &pv).unwrap();
    assert_eq!(out.len(), 6);
    let (_, mean, var) = distribution_moments(&out);
    assert!((mean - 10.0).abs() < 1e-12);
    // t̂ = 2 (y_k + y_l): {6, 8, 10, 10, 12, 14}, variance 20/3
    assert!((var - 20.0 / 3.0).abs() < 1e-12);
    let pkl = exact_inclusion(Design::Srswor, &pv).unwrap();
    assert!((var_ht_exact(&pv, &pkl, p.y()).unwrap() - var).abs() < 1e-12);
}

#[test]
fn srs_joint_inclusion_matches_enumeration() {
    let p = pop(&[0.0; 5]);
    let pv = ProbabilityVector::uniform(5, 3).unwrap();
    let out = enumerate_distribution(Design::Srswor, &p, &pv).unwrap();
    let pkl = exact_inclusion(Design::Srswor, &pv).unwrap();
    for k in 0..5 {
        for l in k + 1..5 {
            let joint: f64 = out
                .iter()
                .filter(|o| o.counts.0[k] == 1 && o.counts.0[l] == 1)
                .map(|o| o.probability)
                .sum();
            assert!((joint - pkl.joint(k, l)).abs() < 1e-15);
        }
    }
}

#[test]
fn multinomial_variance_matches_enumeration() {
    let p = pop(&[1.0, 2.0]);
    let pv = ProbabilityVector::new(vec![1.0, 1.0]).unwrap();
    let out = enumerate_distribution(Design::Multinomial, &p, &pv).unwrap();
    let (_, mean, var) = distribution_moments(&out);
    assert_eq!(mean, 3.0);
    assert_eq!(var, multinomial_variance(&pv, p.y()).unwrap());

    let p = pop(&[0.3, -1.2, 2.5, 0.7]);
    let pv = ProbabilityVector::new(vec![0.5, 0.75, 1.0, 0.75]).unwrap();
    let out = enumerate_distribution(Design::Multinomial, &p, &pv).unwrap();
    let (mass, mean, var) = distribution_moments(&out);
    assert!((mass - 1.0).abs() < 1e-12);
    assert!((mean - p.total()).abs() < 1e-12);
    assert!((var - multinomial_variance(&pv, p.y()).unwrap()).abs() < 1e-12);
}
