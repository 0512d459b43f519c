mod common;

use cam::datagen::{gen_toy, ToySpec};
use cam::preprocess::preprocess;
use cam::stability::{analyze_fold, min_avg_angle, nmi_from_terms, stability_select, stability_select_with};
use cam::unmix::mixing_from_rays;
use cam::{CamConfig, Matrix64};
use rand::seq::index::sample;

fn small_config() -> CamConfig {
    CamConfig { sectors: 10, restarts: 3, ..Default::default() }
}

fn toy_preprocessed(seed: u64) -> Matrix64 {
    let d = gen_toy(&ToySpec::default(), seed).unwrap();
    preprocess(&d.x, 0.5).unwrap().0
}

#[test]
fn profile_is_deterministic_and_recomputable() {
    let x = toy_preprocessed(1);
    let p = stability_select(&x, 4, 4, &small_config(), 11).unwrap();
    assert_eq!(p, stability_select(&x, 4, 4, &small_config(), 11).unwrap());
    assert_eq!(p.k_range, vec![2, 3, 4]);
    assert_eq!(p.per_trial_angles.len(), 4);
    assert!(p.nmi.iter().all(|&v| v >= 0.0));
    assert_eq!(nmi_from_terms(&p.per_trial_angles, &p.per_trial_random_angles, 3), p.nmi);
    // Independent recomputation of the index from the stored terms.
    for (i, &nmi) in p.nmi.iter().enumerate() {
        let num: f64 = p.per_trial_angles.iter().map(|t| t[i]).sum();
        let den: f64 = p.per_trial_random_angles.iter().map(|t| t[i][0] + t[i][1]).sum();
        assert!((2.0 * num / den - nmi).abs() < 1e-12);
    }
    let best = p.k_range[p.nmi.iter().enumerate().fold(0, |b, (i, &v)| if v < p.nmi[b] { i } else { b })];
    assert_eq!(p.recommended_k, best);
}

#[test]
fn identical_folds_give_zero_instability() {
    let half = toy_preprocessed(2);
    let n = half.cols();
    let cols: Vec<Vec<f64>> = half.columns().chain(half.columns()).map(|c| c.to_vec()).collect();
    let doubled = Matrix64::from_columns(3, &cols).unwrap();
    let p = stability_select_with(&doubled, 4, 3, &small_config(), 5, |_| ((0..n).collect(), (n..2 * n).collect())).unwrap();
    assert!(p.nmi.iter().all(|&v| v == 0.0), "{:?}", p.nmi);
}

#[test]
fn fold_smaller_than_sector_count_is_reported() {
    let x = toy_preprocessed(3).select_columns(&(0..30).collect::<Vec<_>>());
    let err = stability_select(&x, 3, 1, &CamConfig { sectors: 20, restarts: 1, ..Default::default() }, 0).unwrap_err();
    assert_eq!(err, cam::CamError::FoldTooSmall { fold_size: 15, sectors: 20 });
}

#[test]
fn random_draws_against_random_draws_give_nmi_near_one() {
    // Monte Carlo self-consistency: with fold estimates replaced by random ray
    // draws, numerator and denominator terms share one distribution.
    let config = small_config();
    let x = toy_preprocessed(4);
    let mut rng = cam::rng::child_rng(4, "self-consistency", &[]);
    let draw = |rays: &Matrix64, k: usize, rng: &mut cam::rng::CamRng| {
        let mut p = sample(rng, rays.cols(), k).into_vec();
        p.sort_unstable();
        mixing_from_rays(rays, &p)
    };
    let mut nmis = Vec::new();
    for k in 2..=4 {
        let (mut num, mut den) = (0.0, 0.0);
        for trial in 0..20u64 {
            let (f1, f2) = cam::stability::random_folds(x.cols(), 9, trial as usize);
            let a1 = analyze_fold(&x.select_columns(&f1), &[k], &config, trial).unwrap();
            let a2 = analyze_fold(&x.select_columns(&f2), &[k], &config, trial).unwrap();
            let (e1, e2) = (draw(&a1.rays, k, &mut rng), draw(&a2.rays, k, &mut rng));
            let (r1, r2) = (draw(&a1.rays, k, &mut rng), draw(&a2.rays, k, &mut rng));
            num += min_avg_angle(&e1, &e2).unwrap().0;
            den += min_avg_angle(&e1, &r2).unwrap().0 + min_avg_angle(&r1, &e2).unwrap().0;
        }
        nmis.push(2.0 * num / den);
    }
    let mean = nmis.iter().sum::<f64>() / nmis.len() as f64;
    assert!((0.8..=1.2).contains(&mean), "{nmis:?}");
}

#[test]
fn min_avg_angle_matches_enumeration() {
    let mut rng = cam::rng::child_rng(12, "enumeration", &[]);
    for k in 1..=6 {
        for _ in 0..10 {
            let u = common::random_matrix(&mut rng, 5, k, -1.0, 1.0);
            let w = common::random_matrix(&mut rng, 5, k, -1.0, 1.0);
            assert_eq!(min_avg_angle(&u, &w).unwrap(), common::min_avg_angle_brute(&u, &w));
        }
    }
}

#[test]
fn arguments_are_validated() {
    let x = toy_preprocessed(5);
    assert!(stability_select(&x, 1, 3, &small_config(), 0).is_err());
    assert!(stability_select(&x, 3, 0, &small_config(), 0).is_err());
    assert!(stability_select(&x, 12, 1, &small_config(), 0).is_err());
}
