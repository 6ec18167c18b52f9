use super::*;
use crate::solver::GridSpec;
use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn kp() -> KernelParams {
    KernelParams::new(1, 1.5).unwrap()
}

/// Replica `r` holds `value(r, k, j)` at saved row `k`, cell `j`.
fn synthetic<F: Fn(usize, usize, usize) -> f64>(replicas: usize, rows: usize, n_x: usize, value: F) -> Vec<Trajectory> {
    let grid = GridSpec {
        half_width: 4.0,
        n_x,
        horizon: 1.0,
        n_t: rows - 1,
    };
    (0..replicas)
        .map(|r| Trajectory {
            grid,
            seed: 0,
            replica: r as u64,
            steps: (0..rows).collect(),
            fields: (0..rows).flat_map(|k| (0..n_x).map(move |j| (k, j))).map(|(k, j)| value(r, k, j)).collect(),
        })
        .collect()
}

#[test]
fn deterministic_and_symmetric_values() {
    let two = synthetic(8, 3, 4, |_, _, _| 2.0);
    for agg in [Aggregator::Mean, Aggregator::default_for(1.6)] {
        let e = moment_estimate(&two, &kp(), 1.5, 1, &[0, 3], agg).unwrap();
        assert_relative_eq!(e[0].mean, 2f64.powf(1.5), max_relative = 1e-15);
        assert!(e[1].se < 1e-14);
    }
    let pm = synthetic(64, 2, 4, |r, _, _| if r % 2 == 0 { 1.0 } else { -1.0 });
    let e = moment_estimate(&pm, &kp(), 2.0, 0, &[2], Aggregator::Mean).unwrap();
    assert_eq!((e[0].mean, e[0].se), (1.0, 0.0));
    assert!(matches!(
        moment_estimate(&two[..1], &kp(), 1.5, 0, &[0], Aggregator::Mean),
        Err(Error::TooFewReplicas { needed: 2, got: 1 })
    ));
    assert!(moment_estimate(&two, &kp(), 2.5, 0, &[0], Aggregator::Mean).is_err());
}

#[test]
fn se_shrinks_with_replicas() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let vals: Vec<f64> = (0..8000).map(|_| StandardNormal.sample(&mut rng)).collect();
    for agg in [Aggregator::Mean, Aggregator::MedianOfMeans { blocks: 16 }] {
        let a = aggregate(&vals[..4000], agg).unwrap();
        let b = aggregate(&vals, agg).unwrap();
        let ratio = b.se / a.se;
        assert!((ratio * 2f64.sqrt() - 1.0).abs() < 0.2, "{agg:?}: {ratio}");
    }
}

#[test]
fn series_and_certificate() {
    let tr = synthetic(4, 5, 8, |r, k, j| (1.0 + j as f64) * (k as f64 + 1.0) + 0.01 * r as f64);
    let s = moment_series(&tr, &kp(), 1.0, Aggregator::Mean).unwrap();
    assert!(s.certified);
    assert!(s.sup_mean.iter().zip(&s.inf_mean).all(|(a, b)| a >= b));
    assert_relative_eq!(s.inf_mean[0], 1.015, max_relative = 1e-12);
    let heavy = moment_series(&tr, &kp(), 2.5, Aggregator::Mean).unwrap();
    assert!(!heavy.certified);
}

fn exact_series(times: Vec<f64>, f: impl Fn(f64) -> f64) -> MomentSeries {
    let vals: Vec<f64> = times.iter().map(|&t| f(t)).collect();
    MomentSeries {
        p: 2.0,
        replicas: 10,
        aggregator: Aggregator::Mean,
        sup_se: vec![0.0; times.len()],
        inf_se: vec![0.0; times.len()],
        sup_mean: vals.clone(),
        inf_mean: vals,
        times,
        certified: true,
    }
}

#[test]
fn lyapunov_synthetic() {
    let times: Vec<f64> = (0..=50).map(|i| i as f64 * 0.2).collect();
    let s = exact_series(times.clone(), |t| (3.0 * t).exp());
    let f = lyapunov_fit(&s, 0.0, 10.0).unwrap();
    assert!((f.upper.slope - 3.0).abs() < 1e-10 && (f.lower.slope - 3.0).abs() < 1e-10);
    let long: Vec<f64> = (1..=400).map(|i| i as f64 * 0.5).collect();
    let sq = exact_series(long, |t| t * t);
    let slopes: Vec<f64> = [10.0, 50.0, 200.0].iter().map(|&end| lyapunov_fit(&sq, end / 2.0, end).unwrap().upper.slope).collect();
    assert!(slopes[0] > slopes[1] && slopes[1] > slopes[2] && slopes[2] < 0.02, "{slopes:?}");
    assert!(lyapunov_fit(&s, 0.0, 0.5).is_err());
    let mut bad = s.clone();
    bad.inf_mean[3] = 0.0;
    assert!(matches!(lyapunov_fit(&bad, 0.0, 10.0), Err(Error::NonPositiveMoment { index: 3, .. })));
}

#[test]
fn growth_scan_synthetic_surface() {
    let times: Vec<f64> = (0..=40).map(|i| i as f64 * 0.1).collect();
    let xs: Vec<f64> = (0..4096).map(|j| -100.0 + (j as f64 + 0.5) * 200.0 / 4096.0).collect();
    let surf: Vec<Vec<f64>> = times.iter().map(|&t| xs.iter().map(|x| t.exp() * (1.0 + x.abs()).powi(-2)).collect()).collect();
    let etas: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
    let scan = growth_index_scan_surface(&times, &xs, &surf, &etas, 1.0, None).unwrap();
    for i in 0..etas.len() {
        for k in 0..times.len() {
            if let (Some(a), Some(b)) = (scan.values[i][k], scan.values.get(i + 1).and_then(|v| v[k])) {
                assert!(b <= a);
            }
        }
        let s = scan.slopes[i].unwrap();
        assert!((s.slope - (1.0 - 2.0 * etas[i])).abs() < 0.02, "eta {}: {}", etas[i], s.slope);
    }
    // eta = 0 is the unrestricted sup
    for (k, row) in surf.iter().enumerate() {
        assert_eq!(scan.values[0][k], Some(row.iter().cloned().fold(0.0, f64::max)));
    }
    let (lo, hi) = (scan.eta_low.unwrap(), scan.eta_high.unwrap());
    assert!(lo <= 0.5 && hi >= 0.5 && hi - lo <= 0.2 + 1e-12, "{lo} {hi}");
    // far regions leave the torus: e^{4 eta} - 1 > 100 for eta >= 1.2
    let far = growth_index_scan_surface(&times, &xs, &surf, &[1.2], 1.0, None).unwrap();
    assert!(far.empty(0, times.len() - 1) && !far.empty(0, 0));
}

#[test]
fn renewal_check_self_consistency() {
    let dt = 1e-3;
    let w: Vec<f64> = (0..=5000).map(|k| (-(k as f64) * dt).exp()).collect();
    let times: Vec<f64> = (0..=50).map(|i| i as f64 * 0.1).collect();
    let exact = exact_series(times.clone(), |t| 1.0 + t);
    let chk = renewal_check(&exact, &w, dt, 1.0, 1.0).unwrap();
    assert!(chk.margin.iter().all(|m| m.abs() < 1e-6), "{:?}", chk.margin);
    assert!(chk.ordered);
    let flat = renewal_check(&exact, &w, dt, 1.0, 0.0).unwrap();
    for (m, t) in flat.margin.iter().zip(&times) {
        assert_relative_eq!(*m, *t, epsilon = 1e-12);
    }
    let cal = calibrate_renewal(&exact, &w, dt).unwrap();
    assert_eq!(cal.c3, 1.0);
    // I(0.1) = 1.1 = 1 + c4 (1 - e^{-0.1})
    assert_relative_eq!(cal.c4, 0.1 / (1.0 - (-0.1f64).exp()), max_relative = 1e-6);
    let short: Vec<f64> = w[..100].to_vec();
    assert!(renewal_check(&exact, &short, dt, 1.0, 1.0).is_err());
}

#[test]
fn tail_slope_of_power_field() {
    let grid_half = 4.0;
    let tr = synthetic(3, 2, 64, |_, _, j| {
        let x = -grid_half + (j as f64 + 0.5) * 2.0 * grid_half / 64.0;
        (1.0 + x.abs()).powf(-0.5)
    });
    let f = spatial_tail_slope(&tr, &kp(), 2.0, 1, 0.5, 4.0, Aggregator::Mean).unwrap();
    assert_relative_eq!(f.slope, -1.0, max_relative = 1e-10);
}

proptest! {
    #[test]
    fn median_of_means_within_range(vals in proptest::collection::vec(0.0f64..100.0, 2..200), b in 2usize..20) {
        let e = aggregate(&vals, Aggregator::MedianOfMeans { blocks: b }).unwrap();
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(0.0, f64::max);
        prop_assert!(e.mean >= lo - 1e-12 && e.mean <= hi + 1e-12);
        prop_assert!(e.se.is_finite());
    }

    #[test]
    fn scan_nonincreasing(vals in proptest::collection::vec(0.0f64..10.0, 6 * 16), e1 in 0.0f64..1.0, de in 0.0f64..1.0) {
        let times: Vec<f64> = (0..6).map(|k| k as f64 * 0.5).collect();
        let xs: Vec<f64> = (0..16).map(|j| -8.0 + j as f64 + 0.5).collect();
        let surf: Vec<Vec<f64>> = vals.chunks(16).map(|c| c.to_vec()).collect();
        let scan = growth_index_scan_surface(&times, &xs, &surf, &[e1, e1 + de], 1.0, None).unwrap();
        for k in 0..times.len() {
            if let (Some(a), Some(b)) = (scan.values[0][k], scan.values[1][k]) {
                prop_assert!(b <= a);
            }
        }
        if let (Some(lo), Some(hi)) = (scan.eta_low, scan.eta_high) {
            prop_assert!(lo <= hi);
        }
    }
}
