//! Subcommand pipelines. Each writes its artifacts into the output directory
//! and returns the JSON report, which `main` prints.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use fshe::analytics::{beta0, bounds_report, renewal_solve, renewal_weight, RenewalProblem};
use fshe::estimator::{calibrate_renewal, growth_index_scan, lyapunov_fit, moment_series, renewal_check, MomentSeries};
use fshe::kernel::verify_lemmas;
use fshe::solver::{build_discrete_kernel, simulate_replicas, Trajectory};
use fshe::specfun::{bessel_k, beta_fn, gamma_fn, hurwitz_zeta, ln_gamma, mittag_leffler, BesselQuery, MLQuery};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::{num, p_tag, write_csv, write_report, Report};

/// Later times of the renewal ordering check start at this saved index.
pub const RENEWAL_LATER_FROM: usize = 2;

pub fn verify(cfg: &ExperimentConfig, dir: &Path) -> Result<String, CliError> {
    let kp = cfg.kernel()?;
    let rep = verify_lemmas(kp, &cfg.lemma_grid())?;
    let mut r = Report::new("verify-lemmas", &cfg.hash(), cfg.constants.all_assumptions());
    r.set("d", rep.d);
    r.set("alpha", rep.alpha);
    r.set("grid", cfg.lemma_grid());
    r.set("records", &rep.records);
    r.set("passed", rep.passed());
    let json = write_report(dir, "verify_lemmas.json", &r)?;
    if !rep.passed() {
        let failed: Vec<&str> = rep
            .records
            .iter()
            .filter(|x| x.status == fshe::kernel::LemmaStatus::Fail)
            .map(|x| x.lemma_id.as_str())
            .collect();
        return Err(CliError::Assertion {
            message: format!("lemma checks failed: {}", failed.join(", ")),
            report: json,
        });
    }
    Ok(json)
}

pub fn bounds(cfg: &ExperimentConfig, dir: &Path) -> Result<String, CliError> {
    let ms = cfg.model_spec()?;
    if cfg.run.p.is_empty() {
        return Err(CliError::Validation("run.p: at least one moment order is needed".into()));
    }
    let mut reports = Vec::new();
    let mut assumptions = BTreeSet::new();
    for &p in &cfg.run.p {
        let b = bounds_report(&ms, &cfg.constants, cfg.run.weight_c, p)?;
        assumptions.extend(b.assumptions.iter().cloned());
        reports.push(b);
    }
    let mut r = Report::new("bounds", &cfg.hash(), assumptions.into_iter().collect());
    r.set("config", cfg);
    r.set("reports", &reports);
    write_report(dir, "bounds.json", &r)
}

struct SimRun {
    trajs: Vec<Trajectory>,
    warnings: Vec<String>,
}

fn run_simulation(cfg: &ExperimentConfig) -> Result<SimRun, CliError> {
    cfg.validate()?;
    let ms = cfg.model_spec()?;
    let grid = cfg.grid_spec()?;
    let dk = build_discrete_kernel(&ms.kp, &grid, grid.dt())?;
    let trajs = simulate_replicas(&ms, &grid, &dk, cfg.run.seed, cfg.run.replicas, &cfg.sim_options())?;
    let warnings = grid.containment_warning(ms.kp.alpha()).into_iter().collect();
    Ok(SimRun { trajs, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Dump {
    None,
    Csv,
    Binary,
}

/// First 8 bytes of the config hash, as the trajectory header's model hash.
fn model_hash(cfg: &ExperimentConfig) -> u64 {
    u64::from_str_radix(&cfg.hash()[..16], 16).expect("hex digest")
}

pub fn simulate(cfg: &ExperimentConfig, dir: &Path, dump: Dump) -> Result<String, CliError> {
    let run = run_simulation(cfg)?;
    let mut files = Vec::new();
    for t in &run.trajs {
        match dump {
            Dump::None => {}
            Dump::Csv => {
                let name = format!("trajectory_r{:04}.csv", t.replica);
                t.write_csv(BufWriter::new(File::create(dir.join(&name))?))?;
                files.push(name);
            }
            Dump::Binary => {
                let name = format!("trajectory_r{:04}.bin", t.replica);
                t.write_binary(BufWriter::new(File::create(dir.join(&name))?), model_hash(cfg))?;
                files.push(name);
            }
        }
    }
    let last = |t: &Trajectory| t.row(t.n_rows() - 1).to_vec();
    let final_sup: Vec<f64> = run.trajs.iter().map(|t| last(t).iter().fold(0.0f64, |m, v| m.max(v.abs()))).collect();
    let final_mean: Vec<f64> = run
        .trajs
        .iter()
        .map(|t| {
            let row = last(t);
            row.iter().sum::<f64>() / row.len() as f64
        })
        .collect();
    let mut r = Report::new("simulate", &cfg.hash(), cfg.constants.all_assumptions());
    r.set("config", cfg);
    r.set("replicas", run.trajs.len());
    r.set("saved_times", run.trajs[0].times());
    r.set("final_sup_abs", final_sup);
    r.set("final_spatial_mean", final_mean);
    r.set("files", files);
    r.set("warnings", run.warnings);
    write_report(dir, "simulate.json", &r)
}

#[derive(Serialize)]
struct MomentsEntry {
    p: f64,
    file: String,
    aggregator: fshe::estimator::Aggregator,
    certified: bool,
    window: (f64, f64),
    lyapunov: Option<fshe::estimator::LyapunovFit>,
    /// `p beta_0` from the bounds module.
    lyap_upper_bound: Option<f64>,
    notes: Vec<String>,
}

fn series_rows(s: &MomentSeries) -> Vec<Vec<String>> {
    (0..s.times.len())
        .map(|i| vec![num(s.times[i]), num(s.sup_mean[i]), num(s.sup_se[i]), num(s.inf_mean[i]), num(s.inf_se[i])])
        .collect()
}

pub const MOMENTS_HEADER: [&str; 5] = ["t", "sup_mean", "sup_se", "inf_mean", "inf_se"];

pub fn moments(cfg: &ExperimentConfig, dir: &Path) -> Result<String, CliError> {
    let run = run_simulation(cfg)?;
    let ms = cfg.model_spec()?;
    let (lo, hi) = cfg.fit_window();
    let mut entries = Vec::new();
    for &p in &cfg.run.p {
        let agg = cfg.aggregator(p);
        let s = moment_series(&run.trajs, &ms.kp, p, agg)?;
        let file = format!("moments_p{}.csv", p_tag(p));
        write_csv(&dir.join(&file), &MOMENTS_HEADER, series_rows(&s))?;
        let mut notes = Vec::new();
        let lyapunov = lyapunov_fit(&s, lo, hi).map_err(|e| notes.push(format!("no Lyapunov fit: {e}"))).ok();
        let lyap_upper_bound = beta0(&ms, &cfg.constants, cfg.run.weight_c, p)
            .map(|b| p * b)
            .map_err(|e| notes.push(format!("no upper bound: {e}")))
            .ok();
        entries.push(MomentsEntry {
            p,
            file,
            aggregator: agg,
            certified: s.certified,
            window: (lo, hi),
            lyapunov,
            lyap_upper_bound,
            notes,
        });
    }
    let mut r = Report::new("moments", &cfg.hash(), cfg.constants.all_assumptions());
    r.set("config", cfg);
    r.set("series", entries);
    r.set("warnings", run.warnings);
    write_report(dir, "moments.json", &r)
}

pub fn growth_scan(cfg: &ExperimentConfig, dir: &Path) -> Result<String, CliError> {
    if cfg.run.etas.is_empty() || cfg.run.etas.iter().any(|e| !(*e >= 0.0)) {
        return Err(CliError::Validation("run.etas: need at least one eta, all >= 0".into()));
    }
    let run = run_simulation(cfg)?;
    let window = cfg.fit_window();
    let mut scans = Vec::new();
    for &p in &cfg.run.p {
        let scan = growth_index_scan(&run.trajs, p, &cfg.run.etas, cfg.run.scan_r, cfg.aggregator(p), Some(window))?;
        let file = format!("growth_scan_p{}.csv", p_tag(p));
        let mut rows = Vec::new();
        for (i, &eta) in scan.etas.iter().enumerate() {
            for (k, &t) in scan.times.iter().enumerate() {
                let v = scan.values[i][k].unwrap_or(f64::NAN);
                rows.push(vec![num(eta), num(t), num(v), (scan.empty(i, k) as u8).to_string()]);
            }
        }
        write_csv(&dir.join(&file), &["eta", "t", "value", "empty_flag"], rows)?;
        scans.push(serde_json::json!({
            "p": p,
            "file": file,
            "r": scan.r,
            "window": scan.window,
            "slopes": scan.slopes,
            "eta_low": scan.eta_low,
            "eta_high": scan.eta_high,
        }));
    }
    let mut r = Report::new("growth-scan", &cfg.hash(), cfg.constants.all_assumptions());
    r.set("config", cfg);
    r.set("scans", scans);
    r.set("warnings", run.warnings);
    write_report(dir, "growth_scan.json", &r)
}

/// Reads a `moments` CSV back into a series.
pub fn read_series(path: &Path, cfg: &ExperimentConfig, p: f64) -> Result<MomentSeries, CliError> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let headers = rd.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Validation(format!("series {}: missing column {name}", path.display())))
    };
    let idx: Vec<usize> = MOMENTS_HEADER.iter().map(|h| col(h)).collect::<Result<_, _>>()?;
    let mut cols: [Vec<f64>; 5] = Default::default();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec?;
        for (c, &i) in idx.iter().enumerate() {
            let v: f64 = rec
                .get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| CliError::Validation(format!("series row {}: bad {}", line + 2, MOMENTS_HEADER[c])))?;
            cols[c].push(v);
        }
    }
    let [times, sup_mean, sup_se, inf_mean, inf_se] = cols;
    if times.len() < 2 {
        return Err(CliError::Validation("series needs at least two rows".into()));
    }
    Ok(MomentSeries {
        p,
        replicas: 0,
        aggregator: cfg.aggregator(p),
        times,
        sup_mean,
        sup_se,
        inf_mean,
        inf_se,
        certified: true,
    })
}

pub fn renewal(cfg: &ExperimentConfig, dir: &Path, series_path: Option<&Path>) -> Result<String, CliError> {
    let rs = &cfg.renewal;
    let kp = cfg.kernel()?;
    let p = rs.p.or(cfg.run.p.first().copied()).ok_or_else(|| CliError::Validation("renewal.p: no moment order".into()))?;
    if !(rs.dt > 0.0) {
        return Err(CliError::Validation("renewal.dt: must be positive".into()));
    }
    let series = series_path.map(|sp| read_series(sp, cfg, p)).transpose()?;
    let horizon = match &series {
        Some(s) => *s.times.last().expect("two rows"),
        None => rs.horizon.unwrap_or(cfg.grid.horizon),
    };
    if !(horizon > 0.0) {
        return Err(CliError::Validation("renewal.horizon: must be positive".into()));
    }
    let n_steps = (horizon / rs.dt - 1e-9).ceil().max(1.0) as usize;
    let w = renewal_weight(&kp, &cfg.levy, p, rs.eps, cfg.constants.delta, rs.dt, n_steps)?;
    let mut r = Report::new("renewal", &cfg.hash(), cfg.constants.assumptions(&["delta"]));
    let mut assumptions = cfg.constants.assumptions(&["delta"]);
    let (c3, c4) = match (&series, rs.c3, rs.c4) {
        (Some(s), None, None) => {
            let cal = calibrate_renewal(s, &w.values, rs.dt)?;
            assumptions.push(format!("c3 = {}, c4 = {} ({})", cal.c3, cal.c4, cal.note));
            (cal.c3, cal.c4)
        }
        _ => {
            let c3 = rs.c3.unwrap_or(cfg.constants.c3);
            let c4 = rs.c4.unwrap_or(1.0);
            if rs.c3.is_none() {
                assumptions.extend(cfg.constants.assumptions(&["c3"]));
            }
            if rs.c4.is_none() {
                assumptions.push(format!("c4 = {c4} (configured, not derived)"));
            }
            (c3, c4)
        }
    };
    r.set("assumptions", &assumptions);
    let sol = renewal_solve(&RenewalProblem {
        c3,
        c4,
        weight: w.values.clone(),
        dt: rs.dt,
    })?;
    let rows = sol.times().zip(&sol.f).map(|(t, &f)| {
        let scaled = sol.beta1.map_or(f64::NAN, |b| (-b * t).exp() * f);
        vec![num(t), num(f), num(scaled)]
    });
    write_csv(&dir.join("renewal.csv"), &["t", "f", "exp_neg_beta1_t_f"], rows)?;
    r.set("config", cfg);
    r.set("p", p);
    r.set("c3", c3);
    r.set("c4", c4);
    r.set("beta1", sol.beta1);
    r.set("limit_check", sol.limit_check);
    r.set("weight_integral", w.integral);
    r.set("weight_prefactor", w.prefactor);
    r.set("warnings", &sol.warnings);
    let mut failure = None;
    if let Some(s) = &series {
        let chk = renewal_check(s, &w.values, rs.dt, c3, c4)?;
        let later = chk.ordered_from(RENEWAL_LATER_FROM);
        r.set("check", &chk);
        r.set("ordered_later", later);
        if !later {
            failure = Some("estimated inf moment falls below the renewal solution by more than 2 SE".to_string());
        }
    }
    let json = write_report(dir, "renewal.json", &r)?;
    match failure {
        Some(message) => Err(CliError::Assertion { message, report: json }),
        None => Ok(json),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SpecFn {
    Gamma,
    LnGamma,
    Beta,
    MittagLeffler,
    BesselK,
    Hurwitz,
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct SpecArgs {
    /// Main argument; repeat for several evaluations.
    #[arg(long, allow_negative_numbers = true)]
    pub x: Vec<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub nu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub q: Option<f64>,
}

/// One value per line, 17 significant digits.
pub fn specfun_eval(f: SpecFn, args: &SpecArgs) -> Result<String, CliError> {
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| CliError::Usage(format!("--{name} is required for {f:?}")));
    if args.x.is_empty() {
        return Err(CliError::Usage("at least one --x is required".into()));
    }
    let mut out = Vec::new();
    for &x in &args.x {
        let v = match f {
            SpecFn::Gamma => gamma_fn(x)?,
            SpecFn::LnGamma => ln_gamma(x)?,
            SpecFn::Beta => beta_fn(x, need(args.q, "q")?)?,
            SpecFn::MittagLeffler => mittag_leffler(MLQuery::new(need(args.a, "a")?, need(args.b, "b")?, x)?)?.value,
            SpecFn::BesselK => bessel_k(BesselQuery::new(need(args.nu, "nu")?, x)?)?,
            SpecFn::Hurwitz => hurwitz_zeta(x, need(args.q, "q")?)?,
        };
        out.push(num(v));
    }
    Ok(out.join("\n"))
}
