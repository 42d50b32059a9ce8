//! Multi-user designs: iterative sum-rate maximization with MMSE decoders,
//! block diagonalization, codebook selection, and back-off; plus the MMSE
//! decoder, MSE matrix and sum-rate evaluation they share.

use alloc::{vec, vec::Vec};

#[cfg(not(feature = "std"))]
use num_traits::Float;
use crate::{
    dual::{subgradient_search, DualState, SolverOptions},
    error::invalid,
    geometry::ConstraintSet,
    linalg::{cholesky, ln_det_hpd, null_space, waterfill, whitened_waterfill},
    su::{backoff_factor, capacity, Codebook},
    CMat, Error, PrecoderSet, Result, C64,
};

/// Per-user receive filters `G_k` (`M × M_r`).
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderSet {
    pub per_user: Vec<CMat>,
}

fn check_users(channels: &[CMat], precoders: &[CMat]) -> Result<()> {
    if channels.len() != precoders.len() {
        return Err(Error::DimensionMismatch { expected: channels.len(), got: precoders.len() });
    }
    for (h, f) in channels.iter().zip(precoders) {
        if h.ncols() != f.nrows() {
            return Err(Error::DimensionMismatch { expected: h.ncols(), got: f.nrows() });
        }
    }
    Ok(())
}

/// `σ²I + H (Σ_{m ≠ skip} F_m F_mᴴ) Hᴴ`.
pub fn received_covariance(h: &CMat, precoders: &[CMat], skip: Option<usize>, sigma2: f64) -> CMat {
    let m_r = h.nrows();
    let mut c = CMat::identity(m_r, m_r) * C64::new(sigma2, 0.0);
    for (m, f) in precoders.iter().enumerate() {
        if Some(m) == skip || f.ncols() == 0 {
            continue;
        }
        let hf = h * f;
        c += &hf * hf.adjoint();
    }
    c
}

fn hpd_solve(a: &CMat, b: &CMat) -> Result<CMat> {
    Ok(cholesky(a)?.solve(b))
}

/// MMSE decoder `G_k = F_kᴴH_kᴴ (H_k (Σ_m F_mF_mᴴ) H_kᴴ + σ²I)^{-1}`.
pub fn mmse_decoder(h_k: &CMat, precoders: &[CMat], k: usize, sigma2: f64) -> Result<CMat> {
    let c = received_covariance(h_k, precoders, None, sigma2);
    // G = (C^{-1} H F_k)ᴴ since C is Hermitian.
    Ok(hpd_solve(&c, &(h_k * &precoders[k]))?.adjoint())
}

/// The same decoder through the matrix inversion lemma:
/// `G_k = E_k F_kᴴ H_kᴴ C_k^{-1}` with interference-plus-noise `C_k`.
pub fn mmse_decoder_lemma(h_k: &CMat, precoders: &[CMat], k: usize, sigma2: f64) -> Result<CMat> {
    let ck = received_covariance(h_k, precoders, Some(k), sigma2);
    let e = mse_matrix(h_k, precoders, k, sigma2)?;
    let t = hpd_solve(&ck, &(h_k * &precoders[k]))?.adjoint();
    Ok(e * t)
}

/// MSE matrix at the MMSE decoder,
/// `E_k = (I + F_kᴴH_kᴴ C_k^{-1} H_k F_k)^{-1}`.
pub fn mse_matrix(h_k: &CMat, precoders: &[CMat], k: usize, sigma2: f64) -> Result<CMat> {
    let ck = received_covariance(h_k, precoders, Some(k), sigma2);
    let hf = h_k * &precoders[k];
    let m = hf.ncols();
    let inner = CMat::identity(m, m) + hf.adjoint() * hpd_solve(&ck, &hf)?;
    let e = hpd_solve(&inner, &CMat::identity(m, m))?;
    Ok(crate::linalg::hermitian_part(&e))
}

/// MSE matrix of user `k` for an arbitrary decoder `g`:
/// `(G H F_k - I)(G H F_k - I)ᴴ + Σ_{m≠k} G H F_m F_mᴴ Hᴴ Gᴴ + σ² G Gᴴ`.
pub fn mse_for_decoder(h_k: &CMat, precoders: &[CMat], k: usize, g: &CMat, sigma2: f64) -> CMat {
    let m = precoders[k].ncols();
    let d = g * h_k * &precoders[k] - CMat::identity(m, m);
    let mut e = &d * d.adjoint() + (g * g.adjoint()) * C64::new(sigma2, 0.0);
    for (j, f) in precoders.iter().enumerate() {
        if j != k {
            let t = g * h_k * f;
            e += &t * t.adjoint();
        }
    }
    e
}

/// Rate of user `k`: `log2 det(E_k^{-1}) = log2 det(C_full) - log2 det(C_k)`.
pub fn user_rate(h_k: &CMat, precoders: &[CMat], k: usize, sigma2: f64) -> Result<f64> {
    let full = received_covariance(h_k, precoders, None, sigma2);
    let rest = received_covariance(h_k, precoders, Some(k), sigma2);
    Ok(((ln_det_hpd(&full)? - ln_det_hpd(&rest)?) / core::f64::consts::LN_2).max(0.0))
}

/// Sum-rate `Σ_k log2 det(E_k^{-1})`.
pub fn sum_rate(channels: &[CMat], precoders: &[CMat], sigma2: f64) -> Result<f64> {
    check_users(channels, precoders)?;
    let mut total = 0.0;
    for (k, h) in channels.iter().enumerate() {
        total += user_rate(h, precoders, k, sigma2)?;
    }
    Ok(total)
}

/// Outer-loop controls of the iterative sum-rate design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterOptions {
    /// Stop once the sum-rate changes by at most this many bits/s/Hz.
    pub epsilon: f64,
    pub max_outer: usize,
}

impl Default for OuterOptions {
    fn default() -> Self {
        Self { epsilon: 1e-4, max_outer: 100 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SumRateSolution {
    pub precoders: PrecoderSet,
    pub decoders: DecoderSet,
    /// Sum-rate after every precoder update.
    pub rate_trace: Vec<f64>,
    pub outer_iterations: usize,
    /// Total dual-search iterations over all outer iterations.
    pub inner_iterations: usize,
    /// True when the loop stopped because an update lowered the sum-rate
    /// (the previous iterate is returned).
    pub stopped_on_decrease: bool,
}

fn initial_precoders(channels: &[CMat], p_cap: f64) -> Vec<CMat> {
    let k = channels.len() as f64;
    channels
        .iter()
        .map(|h| {
            let t = crate::linalg::frob2(h);
            let s = if t > 0.0 { (p_cap / (t * k)).sqrt() } else { 0.0 };
            h.adjoint() * C64::new(s, 0.0)
        })
        .collect()
}

/// Iterative sum-rate maximization: MMSE decoders, MSE weights, then the
/// constrained weighted-MMSE precoder update
/// `F_k = (Σ_m H_mᴴG_mᴴW_mG_mH_m + Σ λ_j R_j + μI)^{-1} H_kᴴG_kᴴW_k`
/// with `W_m = E_m^{-1}` and multipliers from the dual search.
pub fn solve_mu_sumrate(
    channels: &[CMat],
    p_cap: f64,
    constraints: &ConstraintSet,
    sigma2: f64,
    opts: &SolverOptions,
    outer: &OuterOptions,
) -> Result<SumRateSolution> {
    if channels.is_empty() {
        return Err(invalid("need at least one user"));
    }
    let m_t = channels[0].ncols();
    let m_r = channels[0].nrows();
    if channels.iter().any(|h| h.shape() != (m_r, m_t)) {
        return Err(invalid("all users need channels of one shape"));
    }
    if channels.len() * m_r > m_t {
        return Err(invalid("K*M exceeds the transmit antenna count"));
    }
    if !constraints.is_empty() && constraints.m_t() != m_t {
        return Err(Error::DimensionMismatch { expected: constraints.m_t(), got: m_t });
    }
    let mut current = initial_precoders(channels, p_cap);
    let mut current_decoders = decoders_for(channels, &current, sigma2)?;
    let mut duals: Option<DualState> = None;
    let mut trace: Vec<f64> = Vec::new();
    let mut inner = 0;
    for tau in 1..=outer.max_outer {
        let decoders = decoders_for(channels, &current, sigma2)?;
        let mut a = CMat::zeros(m_t, m_t);
        let mut b = CMat::zeros(m_t, channels.len() * m_r);
        for (k, h) in channels.iter().enumerate() {
            let e = mse_matrix(h, &current, k, sigma2)?;
            let w = hpd_solve(&e, &CMat::identity(m_r, m_r))?;
            let gh = &decoders.per_user[k] * h;
            a += gh.adjoint() * &w * &gh;
            b.columns_mut(k * m_r, m_r).copy_from(&(gh.adjoint() * &w));
        }
        let a = crate::linalg::hermitian_part(&a);
        let users = channels.len();
        let map = |d: &DualState| {
            let m = &a + constraints.weighted_sum(&d.lambda, d.mu);
            let fcat = hpd_solve(&m, &b)?;
            Ok((0..users).map(|k| fcat.columns(k * m_r, m_r).into_owned()).collect())
        };
        let (set, state) = subgradient_search(map, constraints, Some(p_cap), opts, duals.as_ref())?;
        inner += state.iterations;
        let rate = sum_rate(channels, &set.per_user, sigma2)?;
        if let Some(&prev) = trace.last() {
            if rate < prev - 1e-8 {
                return Ok(SumRateSolution {
                    precoders: PrecoderSet { per_user: current, duals },
                    decoders: current_decoders,
                    rate_trace: trace,
                    outer_iterations: tau,
                    inner_iterations: inner,
                    stopped_on_decrease: true,
                });
            }
        }
        let change = trace.last().map(|&p| (rate - p).abs());
        trace.push(rate);
        current = set.per_user;
        current_decoders = decoders;
        duals = Some(state);
        if let Some(c) = change {
            if c <= outer.epsilon {
                let decoders = decoders_for(channels, &current, sigma2)?;
                return Ok(SumRateSolution {
                    precoders: PrecoderSet { per_user: current, duals },
                    decoders,
                    rate_trace: trace,
                    outer_iterations: tau,
                    inner_iterations: inner,
                    stopped_on_decrease: false,
                });
            }
        }
    }
    let n = trace.len();
    let last_change = if n >= 2 { (trace[n - 1] - trace[n - 2]).abs() } else { f64::INFINITY };
    let decoders = decoders_for(channels, &current, sigma2)?;
    let last = SumRateSolution {
        precoders: PrecoderSet { per_user: current, duals },
        decoders,
        rate_trace: trace,
        outer_iterations: outer.max_outer,
        inner_iterations: inner,
        stopped_on_decrease: false,
    };
    Err(Error::OuterNonConvergence { iterations: outer.max_outer, last_change, last: alloc::boxed::Box::new(last) })
}

fn decoders_for(channels: &[CMat], precoders: &[CMat], sigma2: f64) -> Result<DecoderSet> {
    let per_user = channels
        .iter()
        .enumerate()
        .map(|(k, h)| mmse_decoder(h, precoders, k, sigma2))
        .collect::<Result<Vec<_>>>()?;
    Ok(DecoderSet { per_user })
}

/// Orthonormal basis of the null space of the other users' stacked channels
/// (singular values below `1e-10 ×` the largest count as zero).
pub fn bd_nullspace(channels: &[CMat], k: usize, streams: usize) -> Result<CMat> {
    let m_t = channels[k].ncols();
    let rows: usize = channels.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, h)| h.nrows()).sum();
    if rows == 0 {
        return Ok(CMat::identity(m_t, m_t));
    }
    let mut stacked = CMat::zeros(rows, m_t);
    let mut r = 0;
    for (j, h) in channels.iter().enumerate() {
        if j != k {
            stacked.rows_mut(r, h.nrows()).copy_from(h);
            r += h.nrows();
        }
    }
    let (basis, _) = null_space(&stacked, 1e-10);
    if basis.ncols() < streams {
        return Err(Error::BdInfeasible { user: k, available: basis.ncols(), needed: streams });
    }
    Ok(basis)
}

/// Null-space bases, effective channels `H_k V̄_k` and projected constraint
/// factors `V̄_kᴴ r_j`, computed once per channel draw.
struct BdSetup {
    bases: Vec<CMat>,
    effective: Vec<CMat>,
    projected: Vec<CMat>,
}

fn bd_setup(channels: &[CMat], constraints: &ConstraintSet, streams: usize) -> Result<BdSetup> {
    let mut bases = Vec::with_capacity(channels.len());
    let mut effective = Vec::with_capacity(channels.len());
    let mut projected = Vec::with_capacity(channels.len());
    for (k, h) in channels.iter().enumerate() {
        let v = bd_nullspace(channels, k, streams)?;
        effective.push(h * &v);
        projected.push(if constraints.is_empty() { CMat::zeros(v.ncols(), 0) } else { v.adjoint() * constraints.factors() });
        bases.push(v);
    }
    Ok(BdSetup { bases, effective, projected })
}

fn bd_map(setup: &BdSetup, d: &DualState, sigma2: f64, streams: usize) -> Result<Vec<CMat>> {
    let active: Vec<usize> = (0..d.lambda.len()).filter(|&j| d.lambda[j] > 0.0).collect();
    let mut out = Vec::with_capacity(setup.bases.len());
    for k in 0..setup.bases.len() {
        let n = setup.bases[k].ncols();
        let mut z = CMat::identity(n, n) * C64::new(d.mu, 0.0);
        if !active.is_empty() {
            let pk = &setup.projected[k];
            let c = CMat::from_fn(n, active.len(), |r, c| pk[(r, active[c])] * d.lambda[active[c]].sqrt());
            z += &c * c.adjoint();
        }
        let chol = cholesky(&z)?;
        let ft = whitened_waterfill(&setup.effective[k], &chol, sigma2, streams);
        out.push(&setup.bases[k] * ft);
    }
    Ok(out)
}

/// Block diagonalization under power and region constraints: each user's
/// precoder lives in the null space of the other users' channels and
/// waterfills over its whitened effective channel; one dual search couples
/// the users.
pub fn solve_bd(
    channels: &[CMat],
    p_cap: f64,
    constraints: &ConstraintSet,
    sigma2: f64,
    streams: usize,
    opts: &SolverOptions,
    warm: Option<&DualState>,
) -> Result<PrecoderSet> {
    if channels.is_empty() {
        return Err(invalid("need at least one user"));
    }
    if !(sigma2 > 0.0) {
        return Err(invalid("noise power must be positive"));
    }
    let setup = bd_setup(channels, constraints, streams)?;
    let map = |d: &DualState| bd_map(&setup, d, sigma2, streams);
    let (set, _) = subgradient_search(map, constraints, Some(p_cap), opts, warm)?;
    Ok(set)
}

/// Reference BD without region constraints: per-user SVD of `H_k V̄_k` and
/// one waterfilling pass over all users' gains.
pub fn bd_power_only_reference(channels: &[CMat], p_cap: f64, sigma2: f64, streams: usize) -> Result<PrecoderSet> {
    let mut dirs = Vec::new();
    let mut gains = Vec::new();
    for (k, h) in channels.iter().enumerate() {
        let v = bd_nullspace(channels, k, streams)?;
        let svd = (h * &v).svd(false, true);
        let v_t = svd.v_t.expect("v_t requested");
        for (i, s) in svd.singular_values.iter().enumerate().take(streams) {
            dirs.push((k, &v * v_t.row(i).adjoint()));
            gains.push(s * s);
        }
    }
    let powers = waterfill(&gains, sigma2, p_cap);
    let m_t = channels[0].ncols();
    let mut per_user: Vec<CMat> = (0..channels.len()).map(|_| CMat::zeros(m_t, 0)).collect();
    for ((k, d), p) in dirs.into_iter().zip(powers) {
        let col = d * C64::new(p.sqrt(), 0.0);
        let f = &per_user[k];
        let mut grown = CMat::zeros(m_t, f.ncols() + 1);
        grown.columns_mut(0, f.ncols()).copy_from(f);
        grown.set_column(f.ncols(), &col);
        per_user[k] = grown;
    }
    Ok(PrecoderSet::new(per_user))
}

/// Greedy codebook assignment: entries scaled by `1/sqrt(K)`, users in index
/// order, each taking the untaken entry with the best single-user capacity
/// (lowest index on ties). Returns the precoders and the chosen indices.
pub fn select_mu_codebook(channels: &[CMat], codebook: &Codebook, sigma2: f64) -> Result<(PrecoderSet, Vec<usize>)> {
    let users = channels.len();
    if codebook.len() < users {
        return Err(Error::CodebookTooSmall { entries: codebook.len(), users });
    }
    let scale = C64::new(1.0 / (users as f64).sqrt(), 0.0);
    let entries: Vec<CMat> = codebook.entries.iter().map(|e| e * scale).collect();
    let mut taken = vec![false; entries.len()];
    let mut chosen = Vec::with_capacity(users);
    for h in channels {
        let mut best: Option<(usize, f64)> = None;
        for (i, e) in entries.iter().enumerate() {
            if taken[i] {
                continue;
            }
            let c = capacity(h, e, sigma2);
            if best.is_none_or(|(_, b)| c > b) {
                best = Some((i, c));
            }
        }
        let (i, _) = best.expect("enough entries checked above");
        taken[i] = true;
        chosen.push(i);
    }
    let per_user = chosen.iter().map(|&i| entries[i].clone()).collect();
    Ok((PrecoderSet::new(per_user), chosen))
}

/// Base design used by the multi-user back-off.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackoffBase {
    Bd,
    SumRate,
}

/// Power-only design scaled by `√α`, `α = min(1, min_j Q_j/Δ_j)`.
#[allow(clippy::too_many_arguments)]
pub fn mu_backoff(
    channels: &[CMat],
    p_cap: f64,
    constraints: &ConstraintSet,
    sigma2: f64,
    base: BackoffBase,
    streams: usize,
    opts: &SolverOptions,
    outer: &OuterOptions,
) -> Result<(PrecoderSet, f64)> {
    let m_t = channels.first().map_or(0, |h| h.ncols());
    let free = ConstraintSet::empty(m_t);
    let set = match base {
        BackoffBase::Bd => solve_bd(channels, p_cap, &free, sigma2, streams, opts, None)?,
        BackoffBase::SumRate => solve_mu_sumrate(channels, p_cap, &free, sigma2, opts, outer)?.precoders,
    };
    Ok(backoff_scale(set, constraints))
}

/// Scales a precoder set by `sqrt(α)` so its worst region load meets the
/// threshold; `α = 1` when it already does.
pub fn backoff_scale(set: PrecoderSet, constraints: &ConstraintSet) -> (PrecoderSet, f64) {
    let alpha = backoff_factor(&constraints.loads(&set.per_user), constraints);
    (set.scaled(alpha.sqrt()), alpha)
}
