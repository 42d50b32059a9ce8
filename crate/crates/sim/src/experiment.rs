//! Monte Carlo sweeps.
//!
//! Every `(method, K, L, P, Q, trial)` combination is one job. The channel
//! of trial `t` is drawn from `derive(master_seed, t)` with user `k` on the
//! sub-stream `derive(·, k)`, so all methods, user counts and sweep points
//! see the same channels (single-user methods use user 0). Jobs run on a
//! rayon pool and are collected in job order, so the output does not depend
//! on the thread count.

use std::time::Instant;

use rayon::prelude::*;
use rcmimo_core::{
    channels::{clustered, rayleigh, ChannelRealization},
    geometry::{ConstraintSet, RegionSpec},
    mu::{backoff_scale, select_mu_codebook, solve_bd, solve_mu_sumrate, sum_rate, SumRateSolution},
    rng::derive,
    su::{capacity, modify_codebook, random_codebook, select_su_codebook, solve_su_optimal, su_backoff, waterfill_power_only, Codebook},
    units::{dbm_to_mw, mw_to_dbm},
    CMat, Error,
};

use crate::{
    codebook::{read_codebook, CodebookFileError},
    config::{ChannelConfig, Method, SampleGrid, ScenarioConfig},
    output::{ExperimentResult, Status},
    probe::probe_boundary,
};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    CodebookFile(#[from] CodebookFileError),
    #[error("codebook does not match the scenario: {0}")]
    CodebookShape(String),
    #[error("cannot build region constraints: {0}")]
    Constraints(Error),
    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

/// Runtime knobs that do not change results.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads; rayon's default when `None`.
    pub threads: Option<usize>,
}

/// Constraint sets and boundary regions for one `(L, Q)` point.
struct Point {
    regions: Vec<RegionSpec>,
    constraints: ConstraintSet,
}

#[derive(Debug, Clone, Copy)]
struct Job {
    method: Method,
    k: usize,
    grid: usize,
    p: usize,
    q: usize,
    trial: usize,
}

/// A design and its solver diagnostics.
struct Design {
    precoders: Vec<CMat>,
    outer: Option<usize>,
    inner: Option<usize>,
    chi: Option<f64>,
    status: Status,
    trace: Vec<f64>,
}

impl Design {
    fn plain(precoders: Vec<CMat>) -> Self {
        Self { precoders, outer: None, inner: None, chi: None, status: Status::Ok, trace: Vec::new() }
    }
}

pub fn status_of(e: &Error) -> Status {
    match e {
        Error::DualNonConvergence { .. } => Status::DualNonconverged,
        Error::BdInfeasible { .. } => Status::BdInfeasible,
        Error::CodebookEntry { .. } => Status::CodebookFailed,
        Error::OuterNonConvergence { .. } => Status::OuterNonconverged,
        _ => Status::Error,
    }
}

pub fn draw_channels(cfg: &ScenarioConfig, trial: usize, users: usize) -> rcmimo_core::Result<ChannelRealization> {
    let seed = derive(cfg.experiment.master_seed, trial as u64);
    let m_r = cfg.experiment.m_r;
    match &cfg.channel {
        ChannelConfig::Rayleigh => rayleigh(seed, users, m_r, cfg.array.elements()),
        ChannelConfig::Clustered(params) => clustered(seed, params, &cfg.array, users, m_r),
    }
}

/// Base codebook: from the configured file, else drawn from `bits`/`seed`.
pub fn base_codebook(cfg: &ScenarioConfig) -> Result<Codebook, RunError> {
    let cb = match &cfg.codebook.file {
        Some(path) => read_codebook(path)?,
        None => random_codebook(cfg.codebook.bits, cfg.array.elements(), cfg.experiment.streams, cfg.codebook.seed)
            .map_err(|e| RunError::CodebookShape(e.to_string()))?,
    };
    if cb.m_t() != cfg.array.elements() || cb.streams() != cfg.experiment.streams {
        return Err(RunError::CodebookShape(format!(
            "entries are {}x{}, scenario needs {}x{}",
            cb.m_t(),
            cb.streams(),
            cfg.array.elements(),
            cfg.experiment.streams
        )));
    }
    Ok(cb)
}

fn sum_rate_design(sol: SumRateSolution, status: Status) -> Design {
    let chi = sol.precoders.duals.as_ref().map(|d| d.chi);
    Design {
        precoders: sol.precoders.per_user,
        outer: Some(sol.outer_iterations),
        inner: Some(sol.inner_iterations),
        chi,
        status,
        trace: sol.rate_trace,
    }
}

fn run_sum_rate(hs: &[CMat], p: f64, cons: &ConstraintSet, cfg: &ScenarioConfig) -> Result<Design, Error> {
    match solve_mu_sumrate(hs, p, cons, cfg.sigma2, &cfg.solver, &cfg.outer) {
        Ok(sol) => Ok(sum_rate_design(sol, Status::Ok)),
        Err(Error::OuterNonConvergence { last, .. }) => Ok(sum_rate_design(*last, Status::OuterNonconverged)),
        Err(e) => Err(e),
    }
}

fn run_bd(hs: &[CMat], p: f64, cons: &ConstraintSet, cfg: &ScenarioConfig) -> Result<Design, Error> {
    let set = solve_bd(hs, p, cons, cfg.sigma2, cfg.experiment.streams, &cfg.solver, None)?;
    let (inner, chi) = match &set.duals {
        Some(d) => (Some(d.iterations), Some(d.chi)),
        None => (None, None),
    };
    Ok(Design { precoders: set.per_user, outer: None, inner, chi, status: Status::Ok, trace: Vec::new() })
}

fn design(
    method: Method,
    hs: &[CMat],
    p: f64,
    cons: &ConstraintSet,
    codebook: Option<&Result<Codebook, Error>>,
    cfg: &ScenarioConfig,
) -> Result<Design, Error> {
    let (sigma2, streams) = (cfg.sigma2, cfg.experiment.streams);
    let free = ConstraintSet::empty(cfg.array.elements());
    let modified = || match codebook {
        Some(Ok(cb)) => Ok(cb),
        Some(Err(e)) => Err(e.clone()),
        None => Err(Error::InvalidArgument("no codebook prepared".into())),
    };
    let h = &hs[0];
    Ok(match method {
        Method::SuOptimal => {
            let (f, state) = solve_su_optimal(h, p, cons, sigma2, streams, &cfg.solver, None)?;
            Design { inner: Some(state.iterations), chi: Some(state.chi), ..Design::plain(vec![f]) }
        }
        Method::SuUnconstrained => Design::plain(vec![waterfill_power_only(h, p, sigma2, streams)]),
        Method::SuCodebook => Design::plain(vec![select_su_codebook(h, &modified()?.entries, sigma2)?.1]),
        Method::SuBackoff => Design::plain(vec![su_backoff(h, p, cons, sigma2, streams)?.0]),
        Method::MuSumrate => run_sum_rate(hs, p, cons, cfg)?,
        Method::MuSumrateUnconstrained => run_sum_rate(hs, p, &free, cfg)?,
        Method::MuBd => run_bd(hs, p, cons, cfg)?,
        Method::MuBdUnconstrained => run_bd(hs, p, &free, cfg)?,
        Method::MuCodebook => Design::plain(select_mu_codebook(hs, modified()?, sigma2)?.0.per_user),
        Method::MuBackoffBd | Method::MuBackoffSumrate => {
            let base = if method == Method::MuBackoffBd { run_bd(hs, p, &free, cfg)? } else { run_sum_rate(hs, p, &free, cfg)? };
            let (set, _) = backoff_scale(rcmimo_core::PrecoderSet::new(base.precoders), cons);
            Design { precoders: set.per_user, chi: None, ..base }
        }
    })
}

struct Prepared<'a> {
    cfg: &'a ScenarioConfig,
    grids: Vec<Option<SampleGrid>>,
    /// `points[grid][q]`.
    points: Vec<Vec<Point>>,
    /// `codebooks[grid][p][q]`, when a codebook method is configured.
    codebooks: Option<Vec<Vec<Vec<Result<Codebook, Error>>>>>,
    timing: bool,
}

impl Prepared<'_> {
    fn run(&self, job: Job) -> ExperimentResult {
        let cfg = self.cfg;
        let e = &cfg.experiment;
        let (p_dbm, q_dbm) = (e.p_dbm[job.p], e.q_dbm[job.q]);
        let point = &self.points[job.grid][job.q];
        let mut row = ExperimentResult {
            method: job.method,
            p_dbm,
            q_dbm,
            k: job.k,
            samples: cfg.samples_per_region(self.grids[job.grid]),
            trial: job.trial,
            seed: derive(e.master_seed, job.trial as u64),
            rate: None,
            worst_sample_interference_dbm: None,
            worst_probe_interference_dbm: None,
            outer_iterations: None,
            inner_iterations: None,
            kkt_residual: None,
            wall_time_ms: None,
            status: Status::Ok,
            rate_trace: Vec::new(),
        };
        let channels = match draw_channels(cfg, job.trial, job.k) {
            Ok(c) => c,
            Err(err) => {
                row.status = status_of(&err);
                return row;
            }
        };
        let codebook = self.codebooks.as_ref().map(|c| &c[job.grid][job.p][job.q]);
        let start = Instant::now();
        let result = design(job.method, &channels.per_user, dbm_to_mw(p_dbm), &point.constraints, codebook, cfg);
        let elapsed = start.elapsed();
        let d = match result {
            Ok(d) => d,
            Err(err) => {
                row.status = status_of(&err);
                return row;
            }
        };
        if self.timing {
            row.wall_time_ms = Some(elapsed.as_secs_f64() * 1e3);
        }
        let rate = if job.method.single_user() {
            Ok(capacity(&channels.per_user[0], &d.precoders[0], cfg.sigma2))
        } else {
            sum_rate(&channels.per_user, &d.precoders, cfg.sigma2)
        };
        match rate {
            Ok(r) => row.rate = Some(r),
            Err(err) => {
                row.status = status_of(&err);
                return row;
            }
        }
        if !point.constraints.is_empty() {
            row.worst_sample_interference_dbm = Some(mw_to_dbm(point.constraints.worst_load(&d.precoders)));
        }
        if e.probe_points > 0 && !point.regions.is_empty() {
            let seed = derive(e.probe_seed, job.trial as u64);
            match probe_boundary(&point.regions, &cfg.array, &d.precoders, e.probe_points, seed) {
                Ok(mw) => row.worst_probe_interference_dbm = Some(mw_to_dbm(mw)),
                Err(err) => row.status = status_of(&err),
            }
        }
        row.outer_iterations = d.outer;
        row.inner_iterations = d.inner;
        row.kkt_residual = d.chi;
        row.rate_trace = d.trace;
        if row.status == Status::Ok {
            row.status = d.status;
        }
        row
    }
}

fn jobs(cfg: &ScenarioConfig, grids: usize) -> Vec<Job> {
    let e = &cfg.experiment;
    let mut out = Vec::new();
    for &method in &e.methods {
        let ks: &[usize] = if method.single_user() { &[1] } else { &e.users };
        for &k in ks {
            for grid in 0..grids {
                for p in 0..e.p_dbm.len() {
                    for q in 0..e.q_dbm.len() {
                        for trial in 0..e.trials {
                            out.push(Job { method, k, grid, p, q, trial });
                        }
                    }
                }
            }
        }
    }
    out
}

fn prepare(cfg: &ScenarioConfig) -> Result<Prepared<'_>, RunError> {
    let e = &cfg.experiment;
    let grids = cfg.sample_grids();
    let points = grids
        .iter()
        .map(|&g| {
            e.q_dbm
                .iter()
                .map(|&q| {
                    let regions = cfg.regions_at(q, g);
                    let constraints = ConstraintSet::build(&regions, &cfg.array).map_err(RunError::Constraints)?;
                    Ok(Point { regions, constraints })
                })
                .collect::<Result<Vec<_>, RunError>>()
        })
        .collect::<Result<Vec<_>, RunError>>()?;

    let codebooks = if e.methods.iter().any(|m| m.uses_codebook()) {
        let base = base_codebook(cfg)?;
        let (np, nq) = (e.p_dbm.len(), e.q_dbm.len());
        let mut flat = (0..grids.len() * np * nq)
            .into_par_iter()
            .map(|i| {
                let (g, p, q) = (i / (np * nq), (i / nq) % np, i % nq);
                modify_codebook(&base, dbm_to_mw(e.p_dbm[p]), &points[g][q].constraints, &cfg.solver)
            })
            .collect::<Vec<_>>()
            .into_iter();
        let built = (0..grids.len())
            .map(|_| (0..np).map(|_| flat.by_ref().take(nq).collect()).collect())
            .collect();
        Some(built)
    } else {
        None
    };
    Ok(Prepared { cfg, grids, points, codebooks, timing: e.timing })
}

/// Runs the configured sweep. Rows come out ordered by
/// `(method, K, L, P, Q, trial)`, methods in config order.
pub fn run_experiment(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<Vec<ExperimentResult>, RunError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = opts.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build()?;
    pool.install(|| {
        let prepared = prepare(cfg)?;
        let jobs = jobs(cfg, prepared.grids.len());
        Ok(jobs.into_par_iter().map(|j| prepared.run(j)).collect())
    })
}

/// Share of rows with a hard failure.
pub fn failure_rate(results: &[ExperimentResult]) -> f64 {
    if results.is_empty() {
        return 0.0;
    }
    results.iter().filter(|r| r.status.is_failure()).count() as f64 / results.len() as f64
}
