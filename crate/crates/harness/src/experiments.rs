//! Experiment drivers. Each driver writes its artifacts under `cfg.out` and
//! returns the in-memory rows.
//!
//! Trials are independent tasks in a rayon pool. Trial `t` of cell `c` draws
//! from `trial_rng(seed, c, t)` only, and results are collected in task order,
//! so output is identical for any thread count.

use std::path::{Path, PathBuf};
use std::time::Instant;

use mvhl_core::certify::{diagnose, GolfingOptions, PowerOptions};
use mvhl_core::lifting::Lift;
use mvhl_core::measurement::{
    add_noise, forward, gen_sources, gen_sources_2d, gen_subspaces, relative_error, snr_db, synthesize_target,
    synthesize_target_2d, ChannelSources2D,
};
use mvhl_core::music::{match_sources, match_sources_2d, Music, Music2D};
use mvhl_core::rng::{trial_rng, trial_stream, TrialRng};
use mvhl_core::solver::solve;
use mvhl_core::{LiftShape, LiftShape2D, Matrix, MvhlError, SolverConfig, SolverResult, Subspace, Vector};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{error_code, HarnessError, Result};
use crate::instance::{Instance, LiftSpec};
use crate::records::{
    summarize, write_csv, write_manifest, CertificateRow, EstimateRow, GolfingRow, Record, Summary, TimingRow,
    CERTIFICATE_HEADER, ESTIMATE_HEADER, GOLFING_HEADER, RECORD_HEADER, SUMMARY_HEADER, TIMING_HEADER, TOOL_VERSION,
};
use crate::svg;

/// Rows produced by a recovery experiment.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<Record>,
    pub summaries: Vec<Summary>,
    /// Channel demo only: one row per true source.
    pub estimates: Vec<EstimateRow>,
}

#[derive(Debug, Clone)]
pub struct DiagnoseOutput {
    pub certificates: Vec<CertificateRow>,
    pub golfing: Vec<GolfingRow>,
}

#[derive(Debug, Clone)]
pub struct RecoverOutput {
    pub result: SolverResult<f64>,
    pub rel_error: Option<f64>,
    /// Per channel: estimated `(tau, nu)`; `nu` is zero for 1D instances.
    pub locations: Vec<Vec<(f64, f64)>>,
}

/// One `(n, s, r)` cell of a sweep.
#[derive(Debug, Clone, Copy)]
struct Cell {
    index: u32,
    n: usize,
    s: usize,
    r: usize,
}

fn cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for &n in &cfg.n {
        for &s in &cfg.s {
            for &r in &cfg.r {
                out.push(Cell { index: out.len() as u32, n, s, r });
            }
        }
    }
    out
}

/// Maps `items` through `f` on a pool of `threads` workers, preserving order.
fn ordered_map<I: Sync, O: Send>(threads: usize, items: &[I], f: impl Fn(&I) -> O + Sync) -> Result<Vec<O>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| items.par_iter().map(&f).collect()))
}

fn prepare_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

fn write_text(path: PathBuf, text: &str) -> Result<()> {
    std::fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))
}

fn provenance(cfg: &ExperimentConfig) -> String {
    format!("mvhl {TOOL_VERSION}; experiment {}; seed {}; see manifest.toml", cfg.experiment, cfg.seed)
}

fn solver_for(cfg: &ExperimentConfig, delta: f64) -> SolverConfig {
    SolverConfig { noise_delta: delta, ..cfg.solver() }
}

fn base_record(cfg: &ExperimentConfig, n: usize, s: usize, r: String, eps: f64, cell: u32, trial: u32) -> Record {
    Record {
        experiment: cfg.experiment.to_string(),
        n,
        k: cfg.k,
        s,
        r,
        model: cfg.model.to_string(),
        eps,
        trial: trial as usize,
        seed: cfg.seed,
        stream: trial_stream(cell, trial),
        rel_error: None,
        success: false,
        iterations: None,
        converged: None,
        max_tau_error: None,
        error: String::new(),
    }
}

fn fill_solve(rec: &mut Record, res: &SolverResult<f64>, truth: &[Matrix], threshold: f64) -> std::result::Result<(), MvhlError> {
    let err = relative_error(&res.estimates, truth)?;
    rec.rel_error = Some(err);
    rec.success = err <= threshold;
    rec.iterations = Some(res.iterations);
    rec.converged = Some(res.converged);
    Ok(())
}

/// A drawn 1D instance before noise.
struct Drawn1D {
    shape: LiftShape,
    subspaces: Vec<Subspace<f64>>,
    truth: Vec<Matrix>,
    taus: Vec<Vec<f64>>,
    y: Vector,
}

fn draw_1d(cfg: &ExperimentConfig, n: usize, s: usize, r: usize, rng: &mut TrialRng) -> mvhl_core::Result<Drawn1D> {
    let shape = LiftShape::balanced(s, n)?;
    let sources = gen_sources::<f64, _>(cfg.k, r, s, cfg.separation, rng)?;
    let subspaces = gen_subspaces(cfg.k, n, s, cfg.model, rng)?;
    let truth = synthesize_target(&sources, n);
    let y = forward(&subspaces, &truth)?;
    let taus = sources.channels.iter().map(|c| c.taus.clone()).collect();
    Ok(Drawn1D { shape, subspaces, truth, taus, y })
}

/// Noise draw, solve, error and localisation for one noise level. The noise
/// generator continues the trial stream, so every level sees the same
/// instance and the same noise direction.
fn run_level(cfg: &ExperimentConfig, inst: &Drawn1D, eps: f64, noise_rng: &mut TrialRng, rec: &mut Record) -> std::result::Result<(), MvhlError> {
    let y = add_noise(&inst.y, eps, noise_rng)?;
    let res = solve(&inst.subspaces, &y, &inst.shape, &solver_for(cfg, eps * inst.y.norm()))?;
    fill_solve(rec, &res, &inst.truth, cfg.success_threshold)?;
    let r = inst.taus[0].len();
    let tol = 2.0 / cfg.grid as f64;
    let mut worst: f64 = 0.0;
    for (est, taus) in res.estimates.iter().zip(&inst.taus) {
        let found = Music::new(est, &inst.shape, r).and_then(|m| m.estimate(cfg.grid));
        match found.and_then(|f| match_sources(&f.taus, taus, tol)) {
            Ok(m) => worst = worst.max(m.max_error),
            Err(e) => {
                rec.error = format!("music-{}", error_code(&e));
                return Ok(());
            }
        }
    }
    rec.max_tau_error = Some(worst);
    Ok(())
}

fn run_trial_1d(cfg: &ExperimentConfig, cell: &Cell, trial: u32) -> Vec<(Record, f64)> {
    let mut rng = trial_rng(cfg.seed, cell.index, trial);
    let base = |eps| base_record(cfg, cell.n, cell.s, cell.r.to_string(), eps, cell.index, trial);
    let inst = match draw_1d(cfg, cell.n, cell.s, cell.r, &mut rng) {
        Ok(inst) => inst,
        Err(e) => {
            return cfg
                .eps
                .iter()
                .map(|&eps| {
                    let mut rec = base(eps);
                    rec.error = error_code(&e).to_string();
                    (rec, 0.0)
                })
                .collect()
        }
    };
    cfg.eps
        .iter()
        .map(|&eps| {
            let start = Instant::now();
            let mut rec = base(eps);
            let mut noise_rng = rng.clone();
            if let Err(e) = run_level(cfg, &inst, eps, &mut noise_rng, &mut rec) {
                rec.error = error_code(&e).to_string();
            }
            (rec, start.elapsed().as_secs_f64() * 1e3)
        })
        .collect()
}

/// Runs every `(n, s, r)` cell for `trials` trials at each noise level.
/// Records are ordered by cell, then noise level, then trial.
fn run_sweep(cfg: &ExperimentConfig) -> Result<(Vec<Record>, Vec<TimingRow>)> {
    let cells = cells(cfg);
    let tasks: Vec<(Cell, u32)> = cells.iter().flat_map(|c| (0..cfg.trials as u32).map(move |t| (*c, t))).collect();
    let results = ordered_map(cfg.threads, &tasks, |(cell, trial)| run_trial_1d(cfg, cell, *trial))?;
    let mut records = Vec::with_capacity(results.len() * cfg.eps.len());
    let mut timing = Vec::with_capacity(records.capacity());
    for c in 0..cells.len() {
        for e in 0..cfg.eps.len() {
            for t in 0..cfg.trials {
                let (rec, ms) = &results[c * cfg.trials + t][e];
                timing.push(TimingRow {
                    experiment: rec.experiment.clone(),
                    n: rec.n,
                    s: rec.s,
                    r: rec.r.clone(),
                    eps: rec.eps,
                    trial: rec.trial,
                    wall_ms: *ms,
                });
                records.push(rec.clone());
            }
        }
    }
    Ok((records, timing))
}

fn write_common(cfg: &ExperimentConfig, records: &[Record], summaries: &[Summary], timing: &[TimingRow]) -> Result<()> {
    write_csv(&cfg.out.join("records.csv"), RECORD_HEADER, records)?;
    write_csv(&cfg.out.join("summary.csv"), SUMMARY_HEADER, summaries)?;
    write_csv(&cfg.out.join("timing.csv"), TIMING_HEADER, timing)?;
    write_manifest(&cfg.out, cfg, &[])
}

/// Success rate over the `(s, r)` grid for each `n`.
pub fn run_phase_transition(cfg: &ExperimentConfig) -> Result<RunOutput> {
    prepare_out(&cfg.out)?;
    let (records, timing) = run_sweep(cfg)?;
    let summaries = summarize(&records);
    write_common(cfg, &records, &summaries, &timing)?;
    if cfg.svg {
        for &n in &cfg.n {
            for &eps in &cfg.eps {
                let rate = |s: usize, r: usize| {
                    summaries
                        .iter()
                        .find(|x| x.n == n && x.s == s && x.r == r.to_string() && x.eps == eps)
                        .map_or(0.0, |x| x.success_rate)
                };
                let values: Vec<Vec<f64>> = cfg.s.iter().map(|&s| cfg.r.iter().map(|&r| rate(s, r)).collect()).collect();
                let suffix = if cfg.eps.len() > 1 { format!("_eps{eps:e}") } else { String::new() };
                let text = svg::heatmap(
                    &format!("Success rate, n = {n}, K = {}", cfg.k),
                    &provenance(cfg),
                    &cfg.s.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
                    &cfg.r.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
                    &values,
                    "r (sources per channel)",
                    "s (subspace dimension)",
                );
                write_text(cfg.out.join(format!("heatmap_n{n}{suffix}.svg")), &text)?;
            }
        }
    }
    Ok(RunOutput { records, summaries, estimates: Vec::new() })
}

/// Mean relative error against the noise level for each `n`.
pub fn run_noise_sweep(cfg: &ExperimentConfig) -> Result<RunOutput> {
    prepare_out(&cfg.out)?;
    let (records, timing) = run_sweep(cfg)?;
    let summaries = summarize(&records);
    write_common(cfg, &records, &summaries, &timing)?;
    if cfg.svg {
        let mut series = Vec::new();
        for &n in &cfg.n {
            for &s in &cfg.s {
                for &r in &cfg.r {
                    let pts: Vec<(f64, f64)> = summaries
                        .iter()
                        .filter(|x| x.n == n && x.s == s && x.r == r.to_string() && x.eps > 0.0)
                        .filter_map(|x| x.mean_rel_error.map(|m| (snr_db(x.eps), m)))
                        .collect();
                    series.push((format!("n={n}, s={s}, r={r}"), pts));
                }
            }
        }
        let text = svg::log_line_plot("Mean relative error vs SNR", &provenance(cfg), &series, "SNR (dB)", "mean relative error");
        write_text(cfg.out.join("error_vs_snr.svg"), &text)?;
    }
    Ok(RunOutput { records, summaries, estimates: Vec::new() })
}

fn draw_channels(cfg: &ExperimentConfig, rng: &mut TrialRng) -> mvhl_core::Result<Vec<ChannelSources2D<f64>>> {
    let mut channels = gen_sources_2d::<f64, _>(&cfg.targets, cfg.s[0], rng)?;
    let mut taus = cfg.fixed_tau.iter();
    let mut nus = cfg.fixed_nu.iter();
    for ch in &mut channels {
        for i in 0..ch.delays.len() {
            if let Some(&t) = taus.next() {
                ch.delays[i] = t;
            }
            if let Some(&v) = nus.next() {
                ch.dopplers[i] = v;
            }
        }
    }
    Ok(channels)
}

fn run_channel_trial(cfg: &ExperimentConfig, trial: u32) -> (Record, Vec<EstimateRow>, f64) {
    let start = Instant::now();
    let s = cfg.s[0];
    let n = cfg.big_n * cfg.p;
    let r_label = cfg.targets.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(";");
    let eps = cfg.eps[0];
    let mut rec = base_record(cfg, n, s, r_label, eps, 0, trial);
    let mut rows = Vec::new();
    let mut rng = trial_rng(cfg.seed, 0, trial);
    let outcome = (|| -> mvhl_core::Result<()> {
        let shape = LiftShape2D::balanced(s, cfg.big_n, cfg.p)?;
        let channels = draw_channels(cfg, &mut rng)?;
        let subspaces = gen_subspaces(cfg.k, n, s, cfg.model, &mut rng)?;
        let truth = synthesize_target_2d(&channels, cfg.big_n, cfg.p);
        let y_clean = forward(&subspaces, &truth)?;
        let y = add_noise(&y_clean, eps, &mut rng)?;
        let res = solve(&subspaces, &y, &shape, &solver_for(cfg, eps * y_clean.norm()))?;
        fill_solve(&mut rec, &res, &truth, cfg.success_threshold)?;
        let tol = 2.0 / cfg.grid_2d as f64;
        let mut worst: f64 = 0.0;
        for (c, (est, ch)) in res.estimates.iter().zip(&channels).enumerate() {
            let truth_pts: Vec<(f64, f64)> = ch.delays.iter().copied().zip(ch.dopplers.iter().copied()).collect();
            let found = Music2D::new(est, &shape, truth_pts.len())?.estimate(cfg.grid_2d, cfg.grid_2d)?;
            let m = match_sources_2d(&found.points, &truth_pts, tol)?;
            worst = worst.max(m.max_error);
            for (i, &(tt, tn)) in truth_pts.iter().enumerate() {
                let (et, en) = found.points[m.assignment[i]];
                rows.push(EstimateRow {
                    trial: trial as usize,
                    channel: c,
                    source: i,
                    true_tau: tt,
                    true_nu: tn,
                    est_tau: Some(et),
                    est_nu: Some(en),
                    error: Some(m.errors[i]),
                    matched: m.errors[i] <= tol,
                });
            }
        }
        rec.max_tau_error = Some(worst);
        Ok(())
    })();
    if let Err(e) = outcome {
        rec.error = error_code(&e).to_string();
        // MUSIC or matching failed after the solve: keep any solve results.
        rows.clear();
    }
    (rec, rows, start.elapsed().as_secs_f64() * 1e3)
}

/// Two-level (delay-Doppler) demixing followed by 2D MUSIC per channel.
pub fn run_channel_demo(cfg: &ExperimentConfig) -> Result<RunOutput> {
    prepare_out(&cfg.out)?;
    let trials: Vec<u32> = (0..cfg.trials as u32).collect();
    let results = ordered_map(cfg.threads, &trials, |&t| run_channel_trial(cfg, t))?;
    let mut records = Vec::new();
    let mut estimates = Vec::new();
    let mut timing = Vec::new();
    for (rec, rows, ms) in results {
        timing.push(TimingRow {
            experiment: rec.experiment.clone(),
            n: rec.n,
            s: rec.s,
            r: rec.r.clone(),
            eps: rec.eps,
            trial: rec.trial,
            wall_ms: ms,
        });
        records.push(rec);
        estimates.extend(rows);
    }
    let summaries = summarize(&records);
    write_common(cfg, &records, &summaries, &timing)?;
    write_csv(&cfg.out.join("estimates.csv"), ESTIMATE_HEADER, &estimates)?;
    if cfg.svg {
        let first: Vec<&EstimateRow> = estimates.iter().filter(|e| e.trial == 0).collect();
        let truth: Vec<(f64, f64)> = first.iter().map(|e| (e.true_tau, e.true_nu)).collect();
        let est: Vec<(f64, f64)> = first.iter().filter_map(|e| Some((e.est_tau?, e.est_nu?))).collect();
        let text = svg::scatter("Delay-Doppler estimates (trial 0)", &provenance(cfg), &truth, &est, "delay tau", "Doppler nu");
        write_text(cfg.out.join("scatter.svg"), &text)?;
    }
    Ok(RunOutput { records, summaries, estimates })
}

fn max_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    values.reduce(f64::max)
}

fn run_diagnose_trial(cfg: &ExperimentConfig, cell: &Cell, trial: u32) -> (CertificateRow, Vec<GolfingRow>) {
    let mut row = CertificateRow {
        n: cell.n,
        k: cfg.k,
        s: cell.s,
        r: cell.r,
        model: cfg.model.to_string(),
        trial: trial as usize,
        seed: cfg.seed,
        stream: trial_stream(cell.index, trial),
        t0: None,
        mu0: None,
        mu1_max: None,
        concentration_max: None,
        concentration_ok: None,
        cross_mu: None,
        cross_threshold: None,
        cross_ok: None,
        cond_f_max: None,
        cond_f_threshold: None,
        cond_f_ok: None,
        cond_op_max: None,
        cond_op_ok: None,
        recursion_gap: None,
        range_residual: None,
        error: String::new(),
    };
    let mut rng = trial_rng(cfg.seed, cell.index, trial);
    let golf = GolfingOptions { t0: cfg.t0, partition: cfg.partition_spec() };
    let power = PowerOptions { max_iter: cfg.power_iters, ..PowerOptions::default() };
    let report = draw_1d(cfg, cell.n, cell.s, cell.r, &mut rng)
        .and_then(|inst| diagnose(&inst.truth, &inst.subspaces, &inst.shape, cell.r, &golf, &power));
    let report = match report {
        Ok(r) => r,
        Err(e) => {
            row.error = error_code(&e).to_string();
            return (row, Vec::new());
        }
    };
    let g = &report.golfing;
    row.t0 = Some(g.t0);
    row.mu0 = Some(report.mu0);
    row.mu1_max = max_of(report.mu1.iter().copied());
    row.concentration_max = max_of(report.concentration.iter().map(|c| c.value));
    row.concentration_ok = Some(report.concentration.iter().all(|c| c.satisfied));
    row.cross_mu = Some(report.cross_mu.value);
    row.cross_threshold = Some(report.cross_mu.threshold);
    row.cross_ok = Some(report.cross_mu.satisfied);
    row.cond_f_max = max_of(g.cond_f.iter().map(|c| c.value));
    row.cond_f_threshold = g.cond_f.first().map(|c| c.threshold);
    row.cond_f_ok = Some(g.cond_f.iter().all(|c| c.satisfied));
    row.cond_op_max = max_of(g.cond_op.iter().map(|c| c.value));
    row.cond_op_ok = Some(g.cond_op.iter().all(|c| c.satisfied));
    row.recursion_gap = Some(g.recursion_gap);
    row.range_residual = Some(g.range_residual);
    let hist = g
        .cond_f_history
        .iter()
        .enumerate()
        .flat_map(|(c, h)| {
            h.iter().enumerate().map(move |(step, &v)| GolfingRow { trial: trial as usize, channel: c, step, cond_f: v })
        })
        .collect();
    (row, hist)
}

/// Certificate diagnostics for seeded ground-truth instances.
pub fn run_diagnose(cfg: &ExperimentConfig) -> Result<DiagnoseOutput> {
    prepare_out(&cfg.out)?;
    let cells = cells(cfg);
    let tasks: Vec<(Cell, u32)> = cells.iter().flat_map(|c| (0..cfg.trials as u32).map(move |t| (*c, t))).collect();
    let results = ordered_map(cfg.threads, &tasks, |(cell, t)| run_diagnose_trial(cfg, cell, *t))?;
    let mut certificates = Vec::new();
    let mut golfing = Vec::new();
    for (row, hist) in results {
        certificates.push(row);
        golfing.extend(hist);
    }
    write_csv(&cfg.out.join("certificates.csv"), CERTIFICATE_HEADER, &certificates)?;
    write_csv(&cfg.out.join("golfing.csv"), GOLFING_HEADER, &golfing)?;
    write_manifest(&cfg.out, cfg, &[])?;
    Ok(DiagnoseOutput { certificates, golfing })
}

/// Draws one seeded instance (cell 0, trial 0) from the first `n`, `s`, `r`
/// and `eps` of the configuration, with its ground truth.
pub fn generate_instance(cfg: &ExperimentConfig) -> Result<Instance> {
    let mut rng = trial_rng(cfg.seed, 0, 0);
    let inst = draw_1d(cfg, cfg.n[0], cfg.s[0], cfg.r[0], &mut rng)?;
    let eps = cfg.eps[0];
    let y = add_noise(&inst.y, eps, &mut rng)?;
    Ok(Instance {
        lift: LiftSpec::OneD(inst.shape),
        r: Some(cfg.r[0]),
        delta: eps * inst.y.norm(),
        y,
        subspaces: inst.subspaces,
        truth: Some(inst.truth),
    })
}

/// Writes `instance.txt` and the manifest into `cfg.out`.
pub fn run_generate(cfg: &ExperimentConfig) -> Result<PathBuf> {
    prepare_out(&cfg.out)?;
    let inst = generate_instance(cfg)?;
    let path = cfg.out.join("instance.txt");
    inst.write(&path)?;
    write_manifest(&cfg.out, cfg, &[])?;
    Ok(path)
}

fn solve_instance<L: Lift>(inst: &Instance, lift: &L, cfg: &ExperimentConfig) -> Result<SolverResult<f64>> {
    Ok(solve(&inst.subspaces, &inst.y, lift, &solver_for(cfg, inst.delta))?)
}

/// Solves the instance in `input`; writes `recovered.txt` (the instance with
/// the estimates as its `[X_k]` sections), `solve.csv` and, when the model
/// order is known, `locations.csv`.
pub fn run_recover(input: &Path, cfg: &ExperimentConfig) -> Result<RecoverOutput> {
    let inst = Instance::read(input)?;
    prepare_out(&cfg.out)?;
    let result = match &inst.lift {
        LiftSpec::OneD(shape) => solve_instance(&inst, shape, cfg)?,
        LiftSpec::TwoD(shape) => solve_instance(&inst, shape, cfg)?,
    };
    let rel_error = inst.truth.as_ref().map(|t| relative_error(&result.estimates, t)).transpose()?;
    let mut locations = Vec::new();
    if let Some(r) = inst.r {
        for est in &result.estimates {
            let found = match &inst.lift {
                LiftSpec::OneD(shape) => Music::new(est, shape, r)?.estimate(cfg.grid)?.taus.into_iter().map(|t| (t, 0.0)).collect(),
                LiftSpec::TwoD(shape) => Music2D::new(est, shape, r)?.estimate(cfg.grid_2d, cfg.grid_2d)?.points,
            };
            locations.push(found);
        }
    }
    let recovered = Instance { truth: Some(result.estimates.clone()), ..inst.clone() };
    recovered.write(&cfg.out.join("recovered.txt"))?;
    #[derive(serde::Serialize)]
    struct SolveRow {
        iterations: usize,
        converged: bool,
        objective: f64,
        feasibility: f64,
        final_rho: f64,
        rel_error: Option<f64>,
    }
    let row = SolveRow {
        iterations: result.iterations,
        converged: result.converged,
        objective: result.objective,
        feasibility: result.feasibility,
        final_rho: result.final_rho,
        rel_error,
    };
    write_csv(&cfg.out.join("solve.csv"), "iterations,converged,objective,feasibility,final_rho,rel_error", &[row])?;
    if !locations.is_empty() {
        #[derive(serde::Serialize)]
        struct LocRow {
            channel: usize,
            source: usize,
            tau: f64,
            nu: f64,
        }
        let rows: Vec<LocRow> = locations
            .iter()
            .enumerate()
            .flat_map(|(c, l)| l.iter().enumerate().map(move |(i, &(tau, nu))| LocRow { channel: c, source: i, tau, nu }))
            .collect();
        write_csv(&cfg.out.join("locations.csv"), "channel,source,tau,nu", &rows)?;
    }
    write_manifest(&cfg.out, cfg, &[("input", input.display().to_string())])?;
    Ok(RecoverOutput { result, rel_error, locations })
}

/// Dispatches a non-file experiment.
pub fn run(cfg: &ExperimentConfig) -> Result<()> {
    match cfg.experiment {
        ExperimentKind::PhaseTransition => run_phase_transition(cfg).map(|_| ()),
        ExperimentKind::NoiseSweep => run_noise_sweep(cfg).map(|_| ()),
        ExperimentKind::ChannelDemo => run_channel_demo(cfg).map(|_| ()),
        ExperimentKind::Diagnose => run_diagnose(cfg).map(|_| ()),
        ExperimentKind::Generate => run_generate(cfg).map(|_| ()),
        ExperimentKind::Recover => Err(HarnessError::Config("recover needs an input file".into())),
    }
}
