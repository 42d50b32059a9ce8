//! Single-user designs: waterfilling with region constraints, the
//! region-aware codebook, and adaptive power back-off.

use alloc::{boxed::Box, vec, vec::Vec};

#[cfg(not(feature = "std"))]
use num_traits::Float;
use crate::{
    dual::{kkt_residual, polish_from, subgradient_search, DualState, SolverOptions},
    error::invalid,
    geometry::ConstraintSet,
    linalg::{cholesky, frob2, log2_det_i_plus_gram, orthonormalize_columns, waterfill, whitened_waterfill},
    rng::{complex_gaussian, stream},
    CMat, Error, Result, C64,
};

/// `log2 det(I + H F Fᴴ Hᴴ / σ²)`.
pub fn capacity(h: &CMat, f: &CMat, sigma2: f64) -> f64 {
    if f.ncols() == 0 {
        return 0.0;
    }
    log2_det_i_plus_gram(&(h * f), sigma2).max(0.0)
}

/// Classical waterfilling over the singular values of `h` with total power
/// `p_cap`, `streams` columns.
pub fn waterfill_power_only(h: &CMat, p_cap: f64, sigma2: f64, streams: usize) -> CMat {
    let m_t = h.ncols();
    let svd = h.clone().svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    order.truncate(streams);
    let gains: Vec<f64> = order.iter().map(|&i| svd.singular_values[i].powi(2)).collect();
    let powers = waterfill(&gains, sigma2, p_cap);
    let mut f = CMat::zeros(m_t, streams);
    for (m, (&i, &p)) in order.iter().zip(&powers).enumerate() {
        let s = p.sqrt();
        for r in 0..m_t {
            f[(r, m)] = v_t[(i, r)].conj() * s;
        }
    }
    f
}

/// Precoder minimizing the Lagrangian for fixed multipliers:
/// `F = Z^{-1/2} V Λ^{1/2}` with `Z = μI + Σ λ_j R_j`, computed through the
/// Cholesky factor of `Z`.
pub fn su_precoder_for_duals(h: &CMat, constraints: &ConstraintSet, duals: &DualState, sigma2: f64, streams: usize) -> Result<CMat> {
    let z = constraints.weighted_sum(&duals.lambda, duals.mu);
    let chol = cholesky(&z)?;
    Ok(whitened_waterfill(h, &chol, sigma2, streams))
}

/// Optimal precoder under power and region constraints.
pub fn solve_su_optimal(
    h: &CMat,
    p_cap: f64,
    constraints: &ConstraintSet,
    sigma2: f64,
    streams: usize,
    opts: &SolverOptions,
    warm: Option<&DualState>,
) -> Result<(CMat, DualState)> {
    check_dims(h, constraints)?;
    if !(sigma2 > 0.0) {
        return Err(invalid("noise power must be positive"));
    }
    let map = |d: &DualState| Ok(vec![su_precoder_for_duals(h, constraints, d, sigma2, streams)?]);
    let (set, state) = subgradient_search(map, constraints, Some(p_cap), opts, warm)?;
    Ok((set.per_user.into_iter().next().expect("one user"), state))
}

/// Natural-log Lagrangian `ln det(I + HFFᴴHᴴ/σ²) - tr(FᴴZF) + μP + Σ λ_j Q_j`.
/// At the Lagrangian-minimizing precoder this is the dual function.
pub fn su_lagrangian(h: &CMat, f: &CMat, duals: &DualState, constraints: &ConstraintSet, p_cap: f64, sigma2: f64) -> f64 {
    let rate = capacity(h, f, sigma2) * core::f64::consts::LN_2;
    let z = constraints.weighted_sum(&duals.lambda, duals.mu);
    let penalty = (f.adjoint() * z * f).trace().re;
    let offset: f64 = duals.mu * p_cap
        + duals.lambda.iter().zip(constraints.thresholds()).map(|(l, q)| l * q).sum::<f64>();
    rate - penalty + offset
}

fn check_dims(h: &CMat, constraints: &ConstraintSet) -> Result<()> {
    if !constraints.is_empty() && constraints.m_t() != h.ncols() {
        return Err(Error::DimensionMismatch { expected: constraints.m_t(), got: h.ncols() });
    }
    Ok(())
}

/// A set of `2^bits` precoders.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub bits: u32,
    pub seed: u64,
    pub entries: Vec<CMat>,
}

impl Codebook {
    pub fn new(bits: u32, seed: u64, entries: Vec<CMat>) -> Result<Self> {
        if bits >= 32 || entries.len() != 1usize << bits {
            return Err(invalid("codebook must hold exactly 2^bits entries"));
        }
        if let Some(first) = entries.first() {
            if entries.iter().any(|e| e.shape() != first.shape()) {
                return Err(invalid("codebook entries differ in shape"));
            }
        }
        Ok(Self { bits, seed, entries })
    }

    pub fn m_t(&self) -> usize {
        self.entries.first().map_or(0, |e| e.nrows())
    }

    pub fn streams(&self) -> usize {
        self.entries.first().map_or(0, |e| e.ncols())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Every entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let entries = self.entries.iter().map(|e| e * C64::new(factor, 0.0)).collect();
        Self { bits: self.bits, seed: self.seed, entries }
    }

    /// Binary form: a header of four little-endian `u64` (`M_t`, `M`, `B`,
    /// seed), then every entry row-major as `(re, im)` little-endian `f64`
    /// pairs.
    pub fn to_bytes(&self) -> Vec<u8> {
        let (m_t, m) = (self.m_t(), self.streams());
        let mut out = Vec::with_capacity(32 + 16 * m_t * m * self.len());
        for v in [m_t as u64, m as u64, u64::from(self.bits), self.seed] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for e in &self.entries {
            for r in 0..m_t {
                for c in 0..m {
                    out.extend_from_slice(&e[(r, c)].re.to_le_bytes());
                    out.extend_from_slice(&e[(r, c)].im.to_le_bytes());
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let word = |i: usize| -> Result<[u8; 8]> {
            bytes
                .get(8 * i..8 * i + 8)
                .map(|b| b.try_into().expect("eight bytes"))
                .ok_or_else(|| invalid("codebook data is truncated"))
        };
        let m_t = u64::from_le_bytes(word(0)?) as usize;
        let m = u64::from_le_bytes(word(1)?) as usize;
        let bits = u64::from_le_bytes(word(2)?);
        let seed = u64::from_le_bytes(word(3)?);
        if bits >= 32 || m == 0 || m > m_t {
            return Err(invalid("codebook header is inconsistent"));
        }
        let count = 1usize << bits;
        let expected = m_t
            .checked_mul(m)
            .and_then(|x| x.checked_mul(count))
            .and_then(|x| x.checked_mul(2))
            .and_then(|x| x.checked_add(4))
            .ok_or_else(|| invalid("codebook header is inconsistent"))?;
        if bytes.len() != 8 * expected {
            return Err(invalid("codebook data length does not match its header"));
        }
        let mut idx = 4;
        let mut next = || {
            let v = f64::from_le_bytes(bytes[8 * idx..8 * idx + 8].try_into().expect("eight bytes"));
            idx += 1;
            v
        };
        let entries = (0..count)
            .map(|_| {
                let mut e = CMat::zeros(m_t, m);
                for r in 0..m_t {
                    for c in 0..m {
                        let re = next();
                        let im = next();
                        e[(r, c)] = C64::new(re, im);
                    }
                }
                e
            })
            .collect();
        Codebook::new(bits as u32, seed, entries)
    }
}

/// Random codebook: each entry is an `m_t × m` i.i.d. complex Gaussian matrix
/// (column-major draw order) with orthonormalized columns. Entry `i` draws
/// from the stream seeded by `derive(seed, i)`.
pub fn random_codebook(bits: u32, m_t: usize, m: usize, seed: u64) -> Result<Codebook> {
    if m == 0 || m > m_t || bits >= 32 {
        return Err(invalid("codebook needs 0 < m <= m_t and bits < 32"));
    }
    let entries = (0..1u64 << bits)
        .map(|i| {
            let mut rng = stream(crate::rng::derive(seed, i));
            let g = CMat::from_fn(m_t, m, |_, _| complex_gaussian(&mut rng));
            orthonormalize_columns(&g)
        })
        .collect();
    Codebook::new(bits, seed, entries)
}

/// `Z^{-1/2} F` for `Z = I + C Cᴴ`, using the thin SVD of `C`:
/// `Z^{-1/2} = I + U ((1 + s²)^{-1/2} - 1) Uᴴ`.
pub fn apply_inv_sqrt_identity_plus_gram(c: &CMat, f: &CMat) -> CMat {
    if c.ncols() == 0 {
        return f.clone();
    }
    let svd = c.clone().svd(true, false);
    let u = svd.u.expect("u requested");
    let mut coef = u.adjoint() * f;
    for (i, s) in svd.singular_values.iter().enumerate() {
        let w = 1.0 / (1.0 + s * s).sqrt() - 1.0;
        for col in 0..coef.ncols() {
            coef[(i, col)] *= w;
        }
    }
    f + u * coef
}

/// One entry of the region-aware codebook for multipliers `lambda`:
/// `sqrt(P / ‖Z^{-1/2}F_ζ‖²) Z^{-1/2} F_ζ` with `Z = I + Σ λ_j R_j`.
pub fn modified_entry(entry: &CMat, constraints: &ConstraintSet, lambda: &[f64], p_cap: f64) -> CMat {
    let active: Vec<usize> = (0..lambda.len()).filter(|&j| lambda[j] > 0.0).collect();
    let c = constraints.scaled_factors(lambda, &active);
    let g = apply_inv_sqrt_identity_plus_gram(&c, entry);
    let norm2 = frob2(&g);
    if norm2 > 0.0 {
        g * C64::new((p_cap / norm2).sqrt(), 0.0)
    } else {
        g
    }
}

/// Region-aware version of a single codebook entry, with its multipliers.
///
/// Iterates `z_j ← z_j c_j / Q_j` on the scaled multipliers
/// `z_j = λ_j tr(R_j)`, whose fixed points are exactly the slackness
/// solutions, and every `POLISH_EVERY` steps tries the complementarity
/// polish from the current point. The subgradient steps alone stall here on
/// nearly collinear neighbouring samples.
pub fn modify_entry(entry: &CMat, p_cap: f64, constraints: &ConstraintSet, opts: &SolverOptions) -> Result<(CMat, DualState)> {
    const POLISH_EVERY: usize = 50;
    opts.validate()?;
    let n = constraints.len();
    let qs: Vec<f64> = constraints.thresholds().collect();
    let norms: Vec<f64> = constraints
        .items()
        .iter()
        .map(|c| {
            let t = c.matrix.trace();
            if t > 0.0 { t } else { 1.0 }
        })
        .collect();
    let mut state = DualState::zeros(n);
    let mut z = vec![0.0; n];
    let mut chi = f64::INFINITY;
    let mut evaluations = 0;
    for iter in 0..=opts.max_iterations {
        for j in 0..n {
            state.lambda[j] = z[j] / norms[j];
        }
        let f = modified_entry(entry, constraints, &state.lambda, p_cap);
        evaluations += 1;
        let loads = constraints.loads(core::slice::from_ref(&f));
        chi = if z.iter().all(|&v| v == 0.0) { 0.0 } else { kkt_residual(core::slice::from_ref(&f), &state, constraints, None) };
        let feasible = loads.iter().zip(&qs).all(|(c, q)| *c <= q * (1.0 + opts.feasibility_tol));
        let converged = feasible && chi <= opts.epsilon;
        if opts.polish && (converged || (iter > 0 && iter % POLISH_EVERY == 0)) {
            let map = |d: &DualState| Ok(vec![modified_entry(entry, constraints, &d.lambda, p_cap)]);
            if let Some((set, mut st)) = polish_from(map, constraints, None, opts, &state)? {
                st.iterations += iter;
                st.evaluations += evaluations;
                return Ok((set.per_user.into_iter().next().expect("one entry"), st));
            }
        }
        if converged {
            state.chi = chi;
            state.iterations = iter;
            state.evaluations = evaluations;
            return Ok((f, state));
        }
        for j in 0..n {
            let r = loads[j] / qs[j];
            if z[j] > 0.0 {
                z[j] *= r;
                if z[j] < 1e-12 {
                    z[j] = 0.0;
                }
            } else if r > 1.0 {
                z[j] = 1.0;
            }
        }
    }
    Err(Error::DualNonConvergence { iterations: opts.max_iterations, chi })
}

/// Region-aware codebook: every entry reshaped so that it has power `P` and
/// meets every region constraint.
pub fn modify_codebook(codebook: &Codebook, p_cap: f64, constraints: &ConstraintSet, opts: &SolverOptions) -> Result<Codebook> {
    if !(p_cap > 0.0) {
        return Err(invalid("power cap must be positive"));
    }
    let entries = codebook
        .entries
        .iter()
        .enumerate()
        .map(|(index, e)| {
            modify_entry(e, p_cap, constraints, opts)
                .map(|(f, _)| f)
                .map_err(|source| Error::CodebookEntry { index, source: Box::new(source) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Codebook { bits: codebook.bits, seed: codebook.seed, entries })
}

/// Capacity-maximizing entry (lowest index on ties).
pub fn select_su_codebook(h: &CMat, entries: &[CMat], sigma2: f64) -> Result<(usize, CMat)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, f) in entries.iter().enumerate() {
        let c = capacity(h, f, sigma2);
        if best.is_none_or(|(_, b)| c > b) {
            best = Some((i, c));
        }
    }
    let (i, _) = best.ok_or_else(|| invalid("empty codebook"))?;
    Ok((i, entries[i].clone()))
}

/// Back-off factor `α = min(1, min_j Q_j / Δ_j)` for given interference
/// levels `Δ_j`.
pub fn backoff_factor(loads: &[f64], constraints: &ConstraintSet) -> f64 {
    loads
        .iter()
        .zip(constraints.thresholds())
        .filter(|(&d, _)| d > 0.0)
        .map(|(&d, q)| q / d)
        .fold(1.0, f64::min)
}

/// Waterfilling on the power constraint alone, then scaled down by `√α` so
/// that the worst sample sits exactly at its threshold. Returns the precoder
/// and `α`.
pub fn su_backoff(h: &CMat, p_cap: f64, constraints: &ConstraintSet, sigma2: f64, streams: usize) -> Result<(CMat, f64)> {
    check_dims(h, constraints)?;
    let f0 = waterfill_power_only(h, p_cap, sigma2, streams);
    let alpha = backoff_factor(&constraints.loads(core::slice::from_ref(&f0)), constraints);
    Ok((f0 * C64::new(alpha.sqrt(), 0.0), alpha))
}
