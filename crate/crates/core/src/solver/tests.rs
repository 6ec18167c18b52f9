use super::*;
use crate::analytics::{ConstantsConfig, InitialSpec, SigmaSpec};
use crate::kernel::{q_density, KernelParams};
use crate::noise::{LevyMeasureSpec, NoiseGrid};
use approx::assert_relative_eq;
use proptest::prelude::*;

fn model(alpha: f64, sigma: SigmaSpec, u0: InitialSpec) -> ModelSpec {
    ModelSpec {
        kp: KernelParams::new(1, alpha).unwrap(),
        rho: 0.0,
        levy: LevyMeasureSpec::symmetric_unit_atoms(),
        sigma,
        u0,
    }
}

fn zero_sigma() -> SigmaSpec {
    SigmaSpec::Linear { kappa: 0.0 }
}

fn bump() -> InitialSpec {
    InitialSpec::PolyDecay { c0: 1.0, decay: 0.9 }
}

fn quiet_noise(grid: &GridSpec) -> IncrementField {
    let ng = grid.noise_grid(0, 0);
    IncrementField {
        grid: ng,
        jump_sum: vec![0.0; ng.n_t * ng.n_x],
        compensator: 0.0,
        gaussian: Vec::new(),
        rho: 0.0,
    }
}

#[test]
fn initial_fields() {
    let grid = GridSpec {
        half_width: 16.0,
        n_x: 32,
        ..GridSpec::default()
    };
    let ones = initial_field(&model(1.5, zero_sigma(), InitialSpec::Constant { value: 1.0 }), &grid);
    assert!(ones.iter().all(|&v| v == 1.0));
    let u0 = InitialSpec::PolyDecay { c0: 1.0, decay: 0.5 };
    assert_eq!(u0.eval(3.0), 0.5);
    let f = initial_field(&model(1.5, zero_sigma(), u0), &grid);
    for j in 0..32 {
        assert_eq!(f[j], f[31 - j]);
    }
    assert_eq!(f[18], 3.5f64.powf(-0.5));
}

#[test]
fn cauchy_cell_masses() {
    let grid = GridSpec::default();
    let kp = KernelParams::new(1, 1.0).unwrap();
    let dt = 0.01;
    let dk = build_discrete_kernel(&kp, &grid, dt).unwrap();
    let dx = grid.dx();
    let n = grid.n_x;
    for m in 0..n {
        let o = if m < n / 2 { m as f64 } else { m as f64 - n as f64 };
        let exact = (((o + 0.5) * dx / dt).atan() - ((o - 0.5) * dx / dt).atan()) / std::f64::consts::PI;
        assert!((dk.direct[m] - exact).abs() < 1e-6, "{m}: {} vs {exact}", dk.direct[m]);
    }
    let total: f64 = dk.weights.iter().sum();
    assert!((total - 1.0).abs() < 4.0 * f64::EPSILON);
    assert!(dk.weights.iter().all(|&w| w >= 0.0));
    // total mass outside the window is about 2 dt / (pi L)
    let outside = 2.0 * dt / (std::f64::consts::PI * grid.half_width);
    assert_relative_eq!(dk.image_mass, outside, max_relative = 0.05);
    assert_relative_eq!(dk.raw_sum, 1.0, max_relative = 1e-10);
}

#[test]
fn central_weight_order() {
    let grid = GridSpec::default();
    for alpha in [0.6, 1.0, 1.5] {
        let kp = KernelParams::new(1, alpha).unwrap();
        for dt in [1e-3, 1e-2, 0.1] {
            let dk = build_discrete_kernel(&kp, &grid, dt).unwrap();
            let mid = (q_density(&kp, dt, &[0.0]).unwrap() * grid.dx()).min(1.0);
            let r = dk.weights[0] / mid;
            assert!(r > 0.5 && r <= 1.0 + 1e-12, "alpha {alpha} dt {dt}: ratio {r}");
        }
    }
}

#[test]
fn heat_step_identities() {
    let grid = GridSpec::default();
    let kp = KernelParams::new(1, 1.5).unwrap();
    let dk = build_discrete_kernel(&kp, &grid, 0.01).unwrap();
    let ones = heat_step(&vec![1.0; grid.n_x], &dk);
    assert!(ones.iter().all(|v| (v - 1.0).abs() < 1e-14));
    let j0 = 37;
    let mut delta = vec![0.0; grid.n_x];
    delta[j0] = 1.0;
    let out = heat_step(&delta, &dk);
    for i in 0..grid.n_x {
        let w = dk.weights[(i + grid.n_x - j0) % grid.n_x];
        assert!((out[i] - w).abs() < 1e-15, "{i}");
    }
}

#[test]
fn semigroup_two_half_steps() {
    let grid = GridSpec::default();
    let ms = model(1.5, zero_sigma(), bump());
    let u = initial_field(&ms, &grid);
    let dt = grid.dt();
    let k1 = build_discrete_kernel(&ms.kp, &grid, dt).unwrap();
    let k2 = build_discrete_kernel(&ms.kp, &grid, 2.0 * dt).unwrap();
    let twice = heat_step(&heat_step(&u, &k1), &k1);
    let once = heat_step(&u, &k2);
    let diff = twice.iter().zip(&once).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(diff <= 1e-3, "{diff}");
}

#[test]
fn unit_jump_response() {
    let grid = GridSpec {
        n_t: 4,
        ..GridSpec::default()
    };
    let ms = model(1.5, SigmaSpec::Affine { slope: 0.0, offset: 1.0 }, InitialSpec::Constant { value: 0.0 });
    let dk = build_discrete_kernel(&ms.kp, &grid, grid.dt()).unwrap();
    let mut noise = quiet_noise(&grid);
    let j0 = 100;
    noise.jump_sum[j0] = 1.0;
    let x1 = mild_step(&vec![0.0; grid.n_x], &dk, &ms, &noise, 0, BLOWUP_THRESHOLD).unwrap();
    for i in 0..grid.n_x {
        let w = dk.weights[(i + grid.n_x - j0) % grid.n_x] / grid.dx();
        assert!((x1[i] - w).abs() < 1e-14 * (1.0 + w), "{i}");
    }
    // no noise: plain heat step
    let u = initial_field(&model(1.5, zero_sigma(), bump()), &grid);
    let quiet = quiet_noise(&grid);
    assert_eq!(mild_step(&u, &dk, &ms, &quiet, 1, BLOWUP_THRESHOLD).unwrap(), heat_step(&u, &dk));
}

#[test]
fn blowup_guard() {
    let grid = GridSpec {
        n_t: 2,
        ..GridSpec::default()
    };
    let ms = model(1.5, SigmaSpec::Linear { kappa: 1.0 }, InitialSpec::Constant { value: 1.0 });
    let dk = build_discrete_kernel(&ms.kp, &grid, grid.dt()).unwrap();
    let mut noise = quiet_noise(&grid);
    noise.jump_sum[5] = 1e14;
    match mild_step(&vec![1.0; grid.n_x], &dk, &ms, &noise, 0, BLOWUP_THRESHOLD) {
        Err(Error::BlowUp { step, .. }) => assert_eq!(step, 1),
        other => panic!("expected blow-up, got {other:?}"),
    }
}

#[test]
fn zero_sigma_conserves_mean() {
    let grid = GridSpec::default();
    let ms = model(1.2, zero_sigma(), bump());
    let dk = build_discrete_kernel(&ms.kp, &grid, grid.dt()).unwrap();
    let tr = simulate(&ms, &grid, &dk, 11, 0, &SimOptions::default()).unwrap();
    let mean0: f64 = tr.row(0).iter().sum::<f64>() / grid.n_x as f64;
    for r in 0..tr.n_rows() {
        let m: f64 = tr.row(r).iter().sum::<f64>() / grid.n_x as f64;
        assert!((m - mean0).abs() < 1e-13, "row {r}");
        assert!(tr.row(r).iter().all(|&v| v > -1e-15));
    }
}

/// Max difference between the endpoint on `grid` and on the grid refined
/// twice in both x and t (fine pairs averaged onto coarse cells), `sigma = 0`.
fn refinement_gap(alpha: f64, grid: GridSpec) -> f64 {
    let fine = GridSpec {
        n_x: 2 * grid.n_x,
        n_t: 2 * grid.n_t,
        ..grid
    };
    let ms = model(alpha, zero_sigma(), bump());
    let run = |g: &GridSpec| {
        let dk = build_discrete_kernel(&ms.kp, g, g.dt()).unwrap();
        let tr = simulate(&ms, g, &dk, 1, 0, &SimOptions::default()).unwrap();
        tr.row(tr.n_rows() - 1).to_vec()
    };
    let (a, b) = (run(&grid), run(&fine));
    a.iter()
        .enumerate()
        .map(|(j, v)| (v - 0.5 * (b[2 * j] + b[2 * j + 1])).abs())
        .fold(0.0, f64::max)
}

#[test]
fn refinement_consistency() {
    for alpha in [0.8, 1.0] {
        let gap = refinement_gap(alpha, GridSpec::default());
        assert!(gap <= 1e-3, "alpha {alpha}: {gap}");
    }
    // the kink of u_0 at 0 limits the rate to dx^{2-alpha} for alpha > 1
    let g1 = refinement_gap(1.5, GridSpec::default());
    let g2 = refinement_gap(1.5, GridSpec { n_x: 512, n_t: 200, ..GridSpec::default() });
    let rate = (g1 / g2).log2();
    assert!(rate > 0.4 && g1 < 3e-3, "gaps {g1} {g2}");
}

#[test]
fn determinism_and_linearity() {
    let grid = GridSpec {
        half_width: 8.0,
        n_x: 64,
        horizon: 0.5,
        n_t: 50,
    };
    let lin = SigmaSpec::Linear { kappa: 1.0 };
    let ms = model(1.5, lin.clone(), bump());
    let dk = build_discrete_kernel(&ms.kp, &grid, grid.dt()).unwrap();
    let opts = SimOptions::default();
    let a = simulate(&ms, &grid, &dk, 5, 3, &opts).unwrap();
    let b = simulate(&ms, &grid, &dk, 5, 3, &opts).unwrap();
    assert_eq!(a, b);
    let doubled = model(1.5, lin, InitialSpec::PolyDecay { c0: 2.0, decay: 0.9 });
    let c = simulate(&doubled, &grid, &dk, 5, 3, &opts).unwrap();
    assert!(a.fields.iter().zip(&c.fields).all(|(x, y)| 2.0 * x == *y));
    let reps = simulate_replicas(&ms, &grid, &dk, 5, 4, &opts).unwrap();
    assert_eq!(reps[3], a);
    let sparse = simulate(&ms, &grid, &dk, 5, 3, &SimOptions { save_every: 20, ..opts }).unwrap();
    assert_eq!(sparse.steps, vec![0, 20, 40, 50]);
    assert_eq!(sparse.row(3), a.row(50));
}

#[test]
fn trajectory_dumps() {
    let grid = GridSpec {
        half_width: 2.0,
        n_x: 4,
        horizon: 0.1,
        n_t: 2,
    };
    let ms = model(1.5, zero_sigma(), bump());
    let dk = build_discrete_kernel(&ms.kp, &grid, grid.dt()).unwrap();
    let tr = simulate(&ms, &grid, &dk, 0, 0, &SimOptions::default()).unwrap();
    let mut csv = Vec::new();
    tr.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 4);
    let mut bin = Vec::new();
    tr.write_binary(&mut bin, 42).unwrap();
    assert_eq!(bin.len(), 8 + 7 * 8 + 3 * 8 + 12 * 8);
    assert_eq!(&bin[..8], b"FSHETRJ1");
}

#[test]
fn grid_checks() {
    assert!(GridSpec { n_x: 100, ..GridSpec::default() }.validate().is_err());
    assert!(GridSpec::default().containment_warning(1.5).is_none());
    assert!(GridSpec { half_width: 2.0, ..GridSpec::default() }.containment_warning(0.5).is_some());
    let g = GridSpec::default();
    let ng: NoiseGrid = g.noise_grid(1, 2);
    assert_eq!((ng.n_t, ng.n_x, ng.replica_index), (100, 256, 2));
}

fn picard_grid() -> GridSpec {
    GridSpec {
        half_width: 8.0,
        n_x: 64,
        horizon: 0.5,
        n_t: 50,
    }
}

fn noises(ms: &ModelSpec, grid: &GridSpec, replicas: u64) -> Vec<IncrementField> {
    (0..replicas)
        .map(|r| crate::noise::sample_increments(&ms.levy, &grid.noise_grid(9, r), ms.rho).unwrap())
        .collect()
}

#[test]
fn picard_trivial_cases() {
    let grid = picard_grid();
    let k = ConstantsConfig::default();
    let opts = PicardOptions {
        n_iter: 3,
        beta: 50.0,
        c: 0.0,
        p: 1.0,
        ..PicardOptions::default()
    };
    let ms = model(1.5, zero_sigma(), bump());
    let dk = build_discrete_kernel(&ms.kp, &grid, grid.dt()).unwrap();
    let rep = picard_solve(&ms, &k, &grid, &dk, &noises(&ms, &grid, 4), &opts).unwrap();
    assert!(rep.distances().iter().all(|&d| d == 0.0));
    let lin = model(1.5, SigmaSpec::Linear { kappa: 1.0 }, bump());
    let rep = picard_solve(&lin, &k, &grid, &dk, &[quiet_noise(&grid)], &opts).unwrap();
    assert_eq!(rep.distances()[0], 0.0);
}

#[test]
fn picard_contracts_above_beta0() {
    let grid = picard_grid();
    let k = ConstantsConfig::default();
    let ms = model(1.5, SigmaSpec::Linear { kappa: 1.0 }, InitialSpec::Constant { value: 1.0 });
    let b0 = crate::analytics::beta0(&ms, &k, 0.0, 1.0).unwrap();
    let opts = PicardOptions {
        n_iter: 5,
        beta: 2.0 * b0,
        c: 0.0,
        p: 1.0,
        ..PicardOptions::default()
    };
    let dk = build_discrete_kernel(&ms.kp, &grid, grid.dt()).unwrap();
    let rep = picard_solve(&ms, &k, &grid, &dk, &noises(&ms, &grid, 8), &opts).unwrap();
    assert!(rep.checked);
    assert!(rep.contraction_ok(), "{rep:?}");
    assert!(rep.log_distances[0].is_finite());
    assert!(rep.ratios().iter().all(|&r| r < 0.5), "{:?}", rep.log_distances);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn heat_step_preserves_positivity_and_mean(vals in proptest::collection::vec(0.0f64..10.0, 64), alpha in 0.3f64..1.9) {
        let grid = GridSpec { half_width: 8.0, n_x: 64, ..GridSpec::default() };
        let kp = KernelParams::new(1, alpha).unwrap();
        let dk = build_discrete_kernel(&kp, &grid, 0.05).unwrap();
        let out = heat_step(&vals, &dk);
        let m0: f64 = vals.iter().sum();
        let m1: f64 = out.iter().sum();
        prop_assert!((m0 - m1).abs() <= 1e-12 * m0.max(1.0));
        let top = vals.iter().cloned().fold(0.0, f64::max);
        prop_assert!(out.iter().all(|&v| v >= -1e-14 * top.max(1.0)));
    }
}
