//! Monte Carlo checks of the price, arrival and noise simulators against
//! closed-form moments.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use ttsv::rng::stream;
use ttsv::sampling::{cts_grid, returns_from_grid};
use ttsv::sim::{
    contaminate, default_curves, simulate_arrivals, simulate_ou, simulate_prices, Leverage, OuSpec,
    TRADING_DAY_SECONDS,
};
use ttsv::{simulate_day, IntensityCurve, NoiseSpec, SimConfig, TickSeries};

/// Sample mean and its standard error.
fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn assert_within_3se(value: f64, target: f64, se: f64, what: &str) {
    assert!(
        (value - target).abs() <= 3.0 * se,
        "{what}: {value} vs {target} (3 SE = {})",
        3.0 * se
    );
}

#[test]
fn ou_terminal_variance_matches_ar1_formula() {
    let spec = OuSpec::lambda_default();
    let steps = 23_400;
    let finals: Vec<f64> = (0..2000u64)
        .into_par_iter()
        .map(|r| *simulate_ou(&spec, steps, &mut stream(11, r)).unwrap().values.last().unwrap())
        .collect();
    let a: f64 = 1.0 - spec.mean_reversion;
    let target = (1.0 - a.powi(2 * steps as i32)) / (1.0 - a * a);
    let n = finals.len() as f64;
    let var = finals.iter().map(|x| x * x).sum::<f64>() / n;
    // Known zero mean: the SE of the second moment of a Gaussian is var * sqrt(2/n).
    assert_within_3se(var, target, target * (2.0 / n).sqrt(), "OU terminal variance");
}

#[test]
fn poisson_count_mean() {
    let lambda = IntensityCurve::constant(0.0, 1.0, 11, 100.0).unwrap();
    let counts: Vec<f64> = (0..5000u64)
        .map(|r| simulate_arrivals(&lambda, &mut stream(12, r)).unwrap().len() as f64)
        .collect();
    let (m, _) = mean_se(&counts);
    assert_within_3se(m, 100.0, (100.0f64 / 5000.0).sqrt(), "Poisson mean");
}

#[test]
fn near_zero_intensity_has_no_arrivals() {
    let lambda = IntensityCurve::constant(0.0, 1.0, 3, 1e-9).unwrap();
    let total: usize = (0..1000u64)
        .map(|r| simulate_arrivals(&lambda, &mut stream(13, r)).unwrap().len())
        .sum();
    assert_eq!(total, 0);
}

#[test]
fn linear_intensity_arrival_cdf() {
    // λ(t) ∝ t on [0, 1] gives F(t) = t².
    let lambda = IntensityCurve::from_fn(0.0, 1.0, 1001, |t| (2000.0 * t).max(1e-12)).unwrap();
    let mut pooled: Vec<f64> = Vec::new();
    let mut r = 0;
    while pooled.len() < 100_000 {
        pooled.extend(simulate_arrivals(&lambda, &mut stream(14, r)).unwrap());
        r += 1;
    }
    pooled.sort_by(f64::total_cmp);
    let n = pooled.len() as f64;
    let ks = pooled
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let f = t * t;
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.02, "KS distance {ks}");
}

#[test]
fn constant_tick_volatility_gives_n_c_squared() {
    let n = 200;
    let c = 0.01;
    let arrivals: Vec<f64> = (1..=n).map(|i| i as f64 / (n + 1) as f64).collect();
    let vs = IntensityCurve::constant(0.0, 1.0, 5, c).unwrap();
    let finals: Vec<f64> = (0..10_000u64)
        .map(|r| {
            simulate_prices(&arrivals, &vs, None, &mut stream(15, r))
                .unwrap()
                .close_price()
        })
        .collect();
    let reps = finals.len() as f64;
    let var = finals.iter().map(|x| x * x).sum::<f64>() / reps;
    let target = n as f64 * c * c;
    assert_within_3se(var, target, target * (2.0 / reps).sqrt(), "terminal price variance");
}

/// Fixed arrivals and a non-constant ς used by the conditional checks.
fn fixed_path() -> (Vec<f64>, IntensityCurve) {
    let t = 1000.0;
    let lambda = IntensityCurve::from_fn(0.0, t, 1001, |s| 0.3 + 0.4 * (s / t - 0.5).powi(2)).unwrap();
    let arrivals = simulate_arrivals(&lambda, &mut stream(16, 0)).unwrap();
    let vs = IntensityCurve::from_fn(0.0, t, 1001, |s| 0.01 * (1.0 + 0.5 * (6.0 * s / t).sin())).unwrap();
    (arrivals, vs)
}

#[test]
fn conditional_increment_variance_is_sum_of_tick_variances() {
    let (arrivals, vs) = fixed_path();
    let windows = [(0.0, 1000.0), (100.0, 350.0), (400.0, 900.0), (730.0, 760.0)];
    let paths: Vec<TickSeries> = (0..10_000u64)
        .map(|r| simulate_prices(&arrivals, &vs, None, &mut stream(17, r)).unwrap())
        .collect();
    let price_at = |ticks: &TickSeries, s: f64| {
        let k = ticks.times().partition_point(|&t| t <= s);
        if k == 0 {
            0.0
        } else {
            ticks.log_prices()[k - 1]
        }
    };
    for (s, t) in windows {
        let target: f64 = arrivals
            .iter()
            .filter(|&&a| a > s && a <= t)
            .map(|&a| vs.value_at(a).powi(2))
            .sum();
        let sq: Vec<f64> = paths
            .iter()
            .map(|p| (price_at(p, t) - price_at(p, s)).powi(2))
            .collect();
        let (m, se) = mean_se(&sq);
        assert_within_3se(m, target, se, &format!("window ({s}, {t}]"));
    }
}

#[test]
fn tick_level_squared_increments_average_to_riv() {
    let (arrivals, vs) = fixed_path();
    let riv: f64 = arrivals.iter().map(|&a| vs.value_at(a).powi(2)).sum();
    let sums: Vec<f64> = (0..10_000u64)
        .map(|r| {
            let p = simulate_prices(&arrivals, &vs, None, &mut stream(18, r)).unwrap();
            let mut prev = 0.0;
            p.log_prices()
                .iter()
                .map(|&x| {
                    let d = x - prev;
                    prev = x;
                    d * d
                })
                .sum()
        })
        .collect();
    let (m, se) = mean_se(&sums);
    assert_within_3se(m, riv, se, "sum of squared tick increments");
}

#[test]
fn short_window_increment_variance_is_spot_variance() {
    let (lambda, vs) = default_curves(TRADING_DAY_SECONDS, 23_401).unwrap();
    let delta = 60.0;
    for (k, frac) in [0.25, 0.5, 0.75].into_iter().enumerate() {
        let t = frac * TRADING_DAY_SECONDS;
        // Arrivals in (t, t + δ] form a Poisson process with the restricted intensity.
        let lam_w = IntensityCurve::from_fn(t, t + delta, 61, |s| lambda.value_at(s)).unwrap();
        let vs_w = IntensityCurve::from_fn(t, t + delta, 61, |s| vs.value_at(s)).unwrap();
        let sq: Vec<f64> = (0..100_000u64)
            .into_par_iter()
            .map(|r| {
                let mut rng = stream(19 + k as u64, r);
                let arrivals = simulate_arrivals(&lam_w, &mut rng).unwrap();
                let p = simulate_prices(&arrivals, &vs_w, None, &mut rng).unwrap();
                p.close_price().powi(2)
            })
            .collect();
        let (m, _) = mean_se(&sq);
        let spot = vs.value_at(t).powi(2) * lambda.value_at(t);
        let rel = (m / delta - spot).abs() / spot;
        assert!(rel < 0.05, "t = {t}: relative error {rel}");
    }
}

#[test]
fn daily_squared_return_is_unbiased_for_iv() {
    let cfg = SimConfig::default();
    let diffs: Vec<f64> = (0..2000u64)
        .into_par_iter()
        .map(|d| {
            let p = simulate_day(&cfg, 21, d).unwrap();
            p.ticks_clean.close_price().powi(2) - p.iv
        })
        .collect();
    let (m, se) = mean_se(&diffs);
    assert!((m / se).abs() < 3.0, "t-stat {}", m / se);
}

#[test]
fn leverage_correlates_tick_innovations_with_factor() {
    let n = 20_000;
    let rho = -0.5;
    let vs = IntensityCurve::constant(0.0, n as f64, n + 1, 1.0).unwrap();
    let mut rng = stream(22, 0);
    let innovations: Vec<f64> = (0..n).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
    // One Euler step ends inside every inter-arrival interval after the first.
    let arrivals: Vec<f64> = (0..n).map(|k| k as f64 + 0.5).collect();
    let lev = Leverage {
        rho,
        innovations: &innovations,
        innovation_sd: 2.0,
    };
    let p = simulate_prices(&arrivals, &vs, Some(lev), &mut rng).unwrap();
    let u: Vec<f64> = p.log_prices().windows(2).map(|w| w[1] - w[0]).collect();
    let z: Vec<f64> = innovations[..u.len()].iter().map(|e| e / 2.0).collect();
    let m = u.len() as f64;
    let (mu, mz) = (u.iter().sum::<f64>() / m, z.iter().sum::<f64>() / m);
    let cov = u.iter().zip(&z).map(|(a, b)| (a - mu) * (b - mz)).sum::<f64>();
    let su = u.iter().map(|a| (a - mu).powi(2)).sum::<f64>().sqrt();
    let sz = z.iter().map(|b| (b - mz).powi(2)).sum::<f64>().sqrt();
    let corr = cov / (su * sz);
    assert!((corr - rho).abs() < 3.0 * (1.0 - rho * rho) / m.sqrt(), "corr {corr}");
}

fn dense_ticks() -> TickSeries {
    let cfg = SimConfig::default();
    simulate_day(&cfg, 23, 0).unwrap().ticks_clean
}

#[test]
fn iid_noise_variance() {
    let ticks = dense_ticks();
    let spec = NoiseSpec::iid(1.2e-4);
    let per_day: Vec<f64> = (0..500u64)
        .into_par_iter()
        .map(|r| {
            let noisy = contaminate(&ticks, &spec, &mut stream(24, r)).unwrap();
            noisy
                .log_prices()
                .iter()
                .zip(ticks.log_prices())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                / ticks.len() as f64
        })
        .collect();
    let (m, se) = mean_se(&per_day);
    assert_within_3se(m, 1.2e-4, se, "iid noise variance");
}

#[test]
fn noise_adds_two_m_omega2_to_squared_returns() {
    let ticks = dense_ticks();
    let omega2 = 1.2e-4;
    let spec = NoiseSpec::iid(omega2);
    for m in [78, 390] {
        let grid = cts_grid(ticks.day_length(), m).unwrap();
        let clean = returns_from_grid(&ticks, &grid);
        let sums: Vec<f64> = (0..2000u64)
            .into_par_iter()
            .map(|r| {
                let noisy = contaminate(&ticks, &spec, &mut stream(25, r)).unwrap();
                returns_from_grid(&noisy, &grid)
                    .iter()
                    .zip(&clean)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
            })
            .collect();
        let (mean, se) = mean_se(&sums);
        assert_within_3se(mean, 2.0 * m as f64 * omega2, se, &format!("noise RV at M = {m}"));
    }
}

#[test]
fn diurnal_arma_noise_averages_to_target_variance() {
    let ticks = dense_ticks();
    let omega2 = 1.2e-4;
    let spec = NoiseSpec::diurnal_arma(omega2);
    let per_day: Vec<f64> = (0..2000u64)
        .into_par_iter()
        .map(|r| {
            let noisy = contaminate(&ticks, &spec, &mut stream(26, r)).unwrap();
            noisy
                .log_prices()
                .iter()
                .zip(ticks.log_prices())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                / ticks.len() as f64
        })
        .collect();
    let (m, se) = mean_se(&per_day);
    assert_within_3se(m, omega2, se, "diurnal ARMA average variance");

    // Ticks near the open are noisier than ticks around midday.
    let day = ticks.day_length();
    let pick = |keep: &dyn Fn(f64) -> bool| -> Vec<usize> {
        (0..ticks.len()).filter(|&i| keep(ticks.times()[i])).collect()
    };
    let first = pick(&|t| t < 0.05 * day);
    let mid = pick(&|t| (t - 0.5 * day).abs() < 0.05 * day);
    let noisy: Vec<TickSeries> = (0..300u64)
        .map(|r| contaminate(&ticks, &spec, &mut stream(27, r)).unwrap())
        .collect();
    let avg = |idx: &[usize]| {
        let mut s = 0.0;
        for p in &noisy {
            for &i in idx {
                s += (p.log_prices()[i] - ticks.log_prices()[i]).powi(2);
            }
        }
        s / (idx.len() * noisy.len()) as f64
    };
    let (open, midday) = (avg(&first), avg(&mid));
    assert!(open > 1.5 * midday, "open {open}, midday {midday}");
}

#[test]
fn day_panels_do_not_depend_on_evaluation_order() {
    let cfg = SimConfig::default();
    let seq: Vec<_> = (0..6u64).map(|d| simulate_day(&cfg, 28, d).unwrap()).collect();
    let par: Vec<_> = (0..6u64)
        .rev()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|d| simulate_day(&cfg, 28, d).unwrap())
        .collect();
    for (a, b) in seq.iter().zip(par.iter().rev()) {
        assert_eq!(a.ticks_clean, b.ticks_clean);
        assert_eq!(a.ticks_noisy, b.ticks_noisy);
        assert_eq!(a.iv.to_bits(), b.iv.to_bits());
        assert_eq!(a.lambda_curve.values(), b.lambda_curve.values());
    }
}
