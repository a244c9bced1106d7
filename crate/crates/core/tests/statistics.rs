//! Seeded statistical checks. Each asserts a rate over fixed seeds, so the
//! outcome is deterministic.

use rand::Rng;
use rand_distr::{StandardNormal, Uniform};
use sensordiff::rng::seeded;
use sensordiff::*;

fn normal_rows(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = seeded(seed);
    (0..n)
        .map(|_| {
            (0..d)
                .map(|j| 5.0 + (j + 1) as f64 * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect()
}

fn target_mse(model: &EbmModel, rows: &[Vec<f64>], targets: &[f64]) -> f64 {
    rows.iter()
        .zip(targets)
        .map(|(r, t)| (model.raw_energy(r).unwrap() - t).powi(2))
        .sum::<f64>()
        / rows.len() as f64
}

#[test]
fn wider_ebm_fits_targets_better() {
    let mut wins = 0;
    for seed in 0..50u64 {
        let rows = normal_rows(500, 1, 100 + seed);
        let targets = gaussian_log_density_target(&rows).unwrap();
        let fit = |layers| {
            let config = EbmConfig {
                layers,
                seed,
                ..EbmConfig::default()
            };
            target_mse(&ebm_train(&rows, &config).unwrap(), &rows, &targets)
        };
        if fit(64) < fit(4) {
            wins += 1;
        }
    }
    assert!(wins >= 45, "L=64 beat L=4 on {wins}/50 seeds");
}

#[test]
fn energy_peaks_at_the_mean() {
    let mut ok = 0;
    for seed in 0..50u64 {
        let rows = normal_rows(300, 2, 900 + seed);
        let model = ebm_train(
            &rows,
            &EbmConfig {
                layers: 32,
                seed,
                ..EbmConfig::default()
            },
        )
        .unwrap();
        let d = rows[0].len();
        let n = rows.len() as f64;
        let mean: Vec<f64> = (0..d)
            .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n)
            .collect();
        let sd: Vec<f64> = (0..d)
            .map(|j| {
                (rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            })
            .collect();
        let far: Vec<f64> = mean.iter().zip(&sd).map(|(m, s)| m + 4.0 * s).collect();
        if ebm_energy(&model, &mean).unwrap() >= ebm_energy(&model, &far).unwrap() {
            ok += 1;
        }
    }
    assert!(ok >= 45, "mean row more probable on {ok}/50 seeds");
}

#[test]
fn normal_samples_mostly_accepted() {
    let accepted = (0..100u64)
        .filter(|&seed| {
            let mut rng = seeded(7000 + seed);
            let x: Vec<f64> = (0..100).map(|_| rng.sample(StandardNormal)).collect();
            sw_statistic(&x).unwrap().p_value > 0.05
        })
        .count();
    assert!(accepted >= 90, "{accepted}/100");
}

#[test]
fn brownian_paths_keep_normal_increments() {
    let kept = (0..100u64)
        .filter(|&seed| {
            let path = simulate_brownian(199, 1.0, 300 + seed).unwrap();
            !sw_test_increments(&path, 0, 0.05).unwrap().reject_normality
        })
        .count();
    assert!(kept >= 90, "{kept}/100");
}

#[test]
fn uniform_walks_are_rejected() {
    let rejected = (0..100u64)
        .filter(|&seed| {
            let mut rng = seeded(8000 + seed);
            let step = Uniform::new(-1.0, 1.0).unwrap();
            let mut x = 0.0;
            let values: Vec<f64> = (0..200)
                .map(|_| {
                    x += rng.sample(step);
                    x
                })
                .collect();
            let series =
                SampleSeries::from_column((0..200).map(f64::from).collect(), values, "v").unwrap();
            sw_test_increments(&series, 0, 0.05)
                .unwrap()
                .reject_normality
        })
        .count();
    assert!(rejected >= 90, "{rejected}/100");
}

#[test]
fn fitted_sigma2_tracks_the_simulation() {
    for (dt, seed) in [(1.0, 1u64), (0.01, 2), (5.0, 3)] {
        let path = simulate_brownian(20_000, dt, seed).unwrap();
        let t = path.times().to_vec();
        let v = path.column(0).unwrap();
        let raw = SmoothedSeries::from_parts(t, v).unwrap();
        let s2 = fit_sigma2(&raw).unwrap();
        assert!((s2 - 1.0).abs() < 0.05, "dt {dt}: {s2}");
    }
}

#[test]
fn sampled_paths_match_forecast_moments() {
    let m = SmoothedSeries::from_parts(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 3.0]).unwrap();
    let f = forecast(&m, 4.0, 0.5)
        .unwrap()
        .with_paths(8, 4000, 11)
        .unwrap();
    let finals: Vec<f64> = f
        .paths
        .as_ref()
        .unwrap()
        .iter()
        .map(|p| *p.last().unwrap())
        .collect();
    let n = finals.len() as f64;
    let mean = finals.iter().sum::<f64>() / n;
    let var = finals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!(
        (mean - f.mean).abs() < 4.0 * (f.variance / n).sqrt(),
        "{mean}"
    );
    assert!((var / f.variance - 1.0).abs() < 0.1, "{var}");
}
