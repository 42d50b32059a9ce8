//! Dual search for precoder designs of the form "precoder minimizing the
//! Lagrangian for given multipliers".
//!
//! The caller supplies a map from dual variables `(λ, μ)` to precoders; the
//! search adjusts the multipliers until the KKT conditions hold. Two phases:
//!
//! 1. projected subgradient steps on normalized subgradients
//!    `(P - p)/P` and `(Q_j - c_j)/Q_j`, in coordinates where each `λ_j` is
//!    measured in units of `μ_ref / ‖r_j‖²`;
//! 2. a polish that solves the complementarity conditions between the
//!    scaled multipliers and the log-slacks `ln(Q_j/c_j)`, `ln(P/p)` by
//!    projected Levenberg-Marquardt.
//!
//! Phase 2 runs periodically; whenever its result satisfies the stopping rule
//! the search ends. The stopping rule is `χ ≤ ε` together with primal
//! feasibility within `feasibility_tol`.

use alloc::{vec, vec::Vec};

use nalgebra::{DMatrix, DVector};

#[cfg(not(feature = "std"))]
use num_traits::Float;
use crate::{
    error::invalid,
    geometry::ConstraintSet,
    linalg::{frob2, solve_real},
    CMat, Error, PrecoderSet, Result,
};

/// Dual variables, residual and iteration counts of a search.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DualState {
    /// One multiplier per sampled constraint, in [`ConstraintSet`] order.
    pub lambda: Vec<f64>,
    /// Power multiplier. Zero when the power constraint is inactive or absent.
    pub mu: f64,
    pub chi: f64,
    pub iterations: usize,
    /// Number of precoder-map evaluations.
    pub evaluations: usize,
}

impl DualState {
    pub fn zeros(constraints: usize) -> Self {
        Self { lambda: vec![0.0; constraints], ..Self::default() }
    }

    /// Indices and values of the strictly positive multipliers.
    pub fn active(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.lambda.iter().copied().enumerate().filter(|&(_, l)| l > 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub step_mu: f64,
    pub step_lambda: f64,
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Lower bound on `μ` while it is active; keeps `μI + Σ λR` definite.
    pub mu_floor: f64,
    /// Iteration after which steps shrink as `step/sqrt(iter)`.
    pub diminishing_after: usize,
    pub polish: bool,
    /// Relative primal slack accepted on the power and region constraints.
    pub feasibility_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            step_mu: 0.1,
            step_lambda: 0.1,
            epsilon: 1e-6,
            max_iterations: 5000,
            mu_floor: 1e-12,
            diminishing_after: 1000,
            polish: true,
            feasibility_tol: 1e-6,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_mu > 0.0) || !(self.step_lambda > 0.0) {
            return Err(invalid("step sizes must be positive"));
        }
        if !(self.epsilon > 0.0) || !(self.feasibility_tol > 0.0) {
            return Err(invalid("tolerances must be positive"));
        }
        if !(self.mu_floor >= 0.0) {
            return Err(invalid("mu_floor must be non-negative"));
        }
        Ok(())
    }
}

/// Normalized KKT residual
/// `χ = (Σ_j |λ_j (c_j - Q_j)| + |μ (p - P)|) / (μP + Σ_j λ_j Q_j + ε_mach)`.
/// Without a power cap the `μ` terms are left out.
pub fn kkt_residual(precoders: &[CMat], duals: &DualState, constraints: &ConstraintSet, power_cap: Option<f64>) -> f64 {
    let loads = constraints.loads(precoders);
    let power: f64 = precoders.iter().map(frob2).sum();
    residual_from(&loads, power, duals, constraints, power_cap)
}

fn residual_from(loads: &[f64], power: f64, duals: &DualState, constraints: &ConstraintSet, power_cap: Option<f64>) -> f64 {
    let mut num = 0.0;
    let mut den = f64::EPSILON;
    for ((&l, &c), q) in duals.lambda.iter().zip(loads).zip(constraints.thresholds()) {
        num += (l * (c - q)).abs();
        den += l * q;
    }
    if let Some(p_cap) = power_cap {
        num += (duals.mu * (power - p_cap)).abs();
        den += duals.mu * p_cap;
    }
    num / den
}

struct Eval {
    precoders: Vec<CMat>,
    power: f64,
    loads: Vec<f64>,
}

struct Search<'a, F> {
    map: F,
    cons: &'a ConstraintSet,
    cap: Option<f64>,
    opts: &'a SolverOptions,
    /// `‖r_j‖²`, the natural scale of constraint `j`.
    norms: Vec<f64>,
    /// Reference multiplier scale (`μ` after initialization, or 1).
    zscale: f64,
    scratch: DualState,
    evaluations: usize,
}

const TINY: f64 = 1e-300;
/// Accepted polish steps between finite-difference Jacobians on retries.
const REFRESH_EVERY: usize = 5;

impl<'a, F> Search<'a, F>
where
    F: FnMut(&DualState) -> Result<Vec<CMat>>,
{
    fn new(map: F, constraints: &'a ConstraintSet, power_cap: Option<f64>, opts: &'a SolverOptions) -> Result<Self> {
        opts.validate()?;
        if let Some(p) = power_cap {
            if !(p > 0.0) {
                return Err(invalid("power cap must be positive"));
            }
        }
        if constraints.thresholds().any(|q| !(q > 0.0)) {
            return Err(invalid("region thresholds must be positive"));
        }
        let n = constraints.len();
        let norms = constraints
            .items()
            .iter()
            .map(|c| {
                let t = c.matrix.trace();
                if t > 0.0 { t } else { 1.0 }
            })
            .collect();
        Ok(Search {
            map,
            cons: constraints,
            cap: power_cap,
            opts,
            norms,
            zscale: 1.0,
            scratch: DualState::zeros(n),
            evaluations: 0,
        })
    }

    fn eval(&mut self, lambda: &[f64], mu: f64) -> Result<Eval> {
        self.scratch.lambda.clear();
        self.scratch.lambda.extend_from_slice(lambda);
        self.scratch.mu = if self.cap.is_some() { mu.max(self.opts.mu_floor) } else { mu };
        self.evaluations += 1;
        let precoders = (self.map)(&self.scratch)?;
        let power = precoders.iter().map(frob2).sum();
        let loads = self.cons.loads(&precoders);
        Ok(Eval { precoders, power, loads })
    }

    fn feasible(&self, e: &Eval) -> bool {
        let tol = self.opts.feasibility_tol;
        if let Some(p) = self.cap {
            if e.power > p * (1.0 + tol) {
                return false;
            }
        }
        e.loads.iter().zip(self.cons.thresholds()).all(|(&c, q)| c <= q * (1.0 + tol))
    }

    fn chi(&self, lambda: &[f64], mu: f64, e: &Eval) -> f64 {
        let state = DualState { lambda: lambda.to_vec(), mu, ..DualState::default() };
        residual_from(&e.loads, e.power, &state, self.cons, self.cap)
    }

    fn done(&self, lambda: &[f64], mu: f64, e: &Eval) -> Option<f64> {
        let chi = self.chi(lambda, mu, e);
        (chi <= self.opts.epsilon && self.feasible(e)).then_some(chi)
    }

    /// Power-only multiplier: solves `p(μ) = P` with the given `λ` by a
    /// safeguarded secant in `ln μ`. Returns 0 when no `μ` above the floor
    /// makes the power constraint tight.
    fn initial_mu(&mut self, lambda: &[f64], p_cap: f64) -> Result<f64> {
        let target = p_cap.ln();
        let floor_x = self.opts.mu_floor.max(TINY).ln();
        let mut x = (1.0 / p_cap).ln();
        let mut above: Option<(f64, f64)> = None;
        let mut below: Option<(f64, f64)> = None;
        for it in 0..80 {
            let e = self.eval(lambda, x.exp())?;
            if e.power <= 0.0 {
                if it == 0 {
                    // Maybe only a tiny multiplier produces any power.
                    below = Some((x, -1e3));
                    x -= 20.0;
                    continue;
                }
                below = Some((x, -1e3));
            } else {
                let f = e.power.ln() - target;
                if f.abs() <= 1e-3 {
                    return Ok(x.exp());
                }
                if f > 0.0 {
                    above = Some((x, f));
                } else {
                    below = Some((x, f));
                }
            }
            x = match (above, below) {
                (Some((xa, fa)), Some((xb, fb))) => {
                    let mid = 0.5 * (xa + xb);
                    if it % 3 == 2 || fb <= -1e3 {
                        mid
                    } else {
                        let xs = xa - fa * (xb - xa) / (fb - fa);
                        if xs.is_finite() && (xs - xa) * (xs - xb) < 0.0 { xs } else { mid }
                    }
                }
                (Some((xa, fa)), None) => xa + fa.clamp(0.25, 10.0),
                (None, Some((xb, fb))) => {
                    if xb <= floor_x {
                        return Ok(0.0);
                    }
                    (xb + fb.clamp(-10.0, -0.25)).max(floor_x)
                }
                (None, None) => unreachable!(),
            };
        }
        Ok(x.exp())
    }

    /// Scaled variables `z`: `μ/zscale` first (with a power cap), then
    /// `λ_j ‖r_j‖² / zscale`.
    fn to_z(&self, lambda: &[f64], mu: f64) -> DVector<f64> {
        let off = usize::from(self.cap.is_some());
        DVector::from_fn(off + lambda.len(), |i, _| {
            if i < off { mu / self.zscale } else { lambda[i - off] * self.norms[i - off] / self.zscale }
        })
    }

    fn from_z(&self, z: &DVector<f64>) -> (Vec<f64>, f64) {
        let off = usize::from(self.cap.is_some());
        let mu = if off == 1 { z[0] * self.zscale } else { 0.0 };
        let lambda = (0..self.cons.len()).map(|j| z[off + j] * self.zscale / self.norms[j]).collect();
        (lambda, mu)
    }

    /// Log-slacks `b`: `ln(P/p)` and `ln(Q_j/c_j)`, non-negative when feasible.
    fn slacks(&self, e: &Eval) -> DVector<f64> {
        let off = usize::from(self.cap.is_some());
        DVector::from_fn(off + self.cons.len(), |i, _| match (i, self.cap) {
            (0, Some(p)) => (p / e.power.max(TINY)).ln(),
            _ => (self.cons.items()[i - off].threshold / e.loads[i - off].max(TINY)).ln(),
        })
    }

    fn slack_jacobian(&mut self, z: &DVector<f64>, b0: &DVector<f64>) -> Result<DMatrix<f64>> {
        let n = z.len();
        let mut jac = DMatrix::zeros(n, n);
        for i in 0..n {
            let h = 1e-6 * z[i].max(1e-2);
            let mut zp = z.clone();
            zp[i] += h;
            let (lam, mu) = self.from_z(&zp);
            let e = self.eval(&lam, mu)?;
            jac.set_column(i, &((self.slacks(&e) - b0) / h));
        }
        Ok(jac)
    }

    /// Complementarity polish. The KKT conditions `z ≥ 0, b ≥ 0, z·b = 0`
    /// are written as `Φ(z) = 0` with the Fischer-Burmeister function
    /// `φ(a, b) = a + b - sqrt(a² + b²)` and solved by projected
    /// Levenberg-Marquardt. The slack Jacobian comes from finite differences
    /// and is kept current with Broyden updates, recomputed every `refresh`
    /// accepted steps when `refresh > 0`. Returns the final point when it
    /// satisfies the stopping rule.
    fn polish(&mut self, lambda_in: &[f64], mu_in: f64, refresh: usize) -> Result<Option<(Vec<f64>, f64, Eval, usize)>> {
        const MAX_ITER: usize = 200;
        let fb = |z: &DVector<f64>, b: &DVector<f64>| {
            DVector::from_fn(z.len(), |i, _| z[i] + b[i] - z[i].hypot(b[i]))
        };
        let mut z = self.to_z(lambda_in, mu_in);
        let n = z.len();
        let (lam, mu) = self.from_z(&z);
        let mut e = self.eval(&lam, mu)?;
        let mut b = self.slacks(&e);
        let mut phi = fb(&z, &b);
        let mut jb: Option<DMatrix<f64>> = None;
        let mut fresh = false;
        let mut nu = 1e-4;
        let mut iterations = 0;
        while iterations < MAX_ITER && phi.amax() > 1e-12 {
            iterations += 1;
            if jb.is_none() {
                jb = Some(self.slack_jacobian(&z, &b)?);
                fresh = true;
            }
            let j = {
                let jbm = jb.as_ref().expect("jacobian set above");
                let mut j = jbm.clone();
                for i in 0..n {
                    let rho = z[i].hypot(b[i]);
                    let (da, db) = if rho > 1e-14 {
                        (1.0 - z[i] / rho, 1.0 - b[i] / rho)
                    } else {
                        (1.0 - core::f64::consts::FRAC_1_SQRT_2, 1.0 - core::f64::consts::FRAC_1_SQRT_2)
                    };
                    for k in 0..n {
                        j[(i, k)] *= db;
                    }
                    j[(i, i)] += da;
                }
                // Column scaling by the multiplier size keeps the damping
                // comparable across large and small multipliers.
                for k in 0..n {
                    let sk = z[k].max(1.0);
                    for i in 0..n {
                        j[(i, k)] *= sk;
                    }
                }
                j
            };
            let jtj = j.transpose() * &j;
            let g = j.transpose() * &phi;
            let merit = phi.norm_squared();
            let mut accepted = false;
            for _ in 0..10 {
                let mut a = jtj.clone();
                let damp = nu * merit.sqrt().max(1e-12);
                for d in 0..n {
                    a[(d, d)] += damp + 1e-12 * jtj[(d, d)];
                }
                let Some(mut dz) = solve_real(a, &(-&g)) else {
                    nu *= 10.0;
                    continue;
                };
                for k in 0..n {
                    dz[k] *= z[k].max(1.0);
                }
                let zn = (&z + &dz).map(|v| v.max(0.0));
                let (lam, mu) = self.from_z(&zn);
                let Ok(trial) = self.eval(&lam, mu) else {
                    nu *= 10.0;
                    continue;
                };
                let bn = self.slacks(&trial);
                let phin = fb(&zn, &bn);
                let merit_new = phin.norm_squared();
                if merit_new < merit {
                    let step = &zn - &z;
                    let denom = step.norm_squared();
                    if denom > 0.0 {
                        let jbm = jb.as_mut().expect("jacobian set above");
                        let corr = (&bn - &b - &*jbm * &step) / denom;
                        *jbm += corr * step.transpose();
                    }
                    z = zn;
                    b = bn;
                    phi = phin;
                    e = trial;
                    nu = (nu / 10.0).max(1e-8);
                    accepted = true;
                    fresh = false;
                    if refresh > 0 && iterations % refresh == 0 {
                        jb = None;
                    }
                    break;
                }
                nu *= 10.0;
            }
            if !accepted {
                if fresh {
                    break;
                }
                jb = None;
                nu = 1e-4;
            }
        }
        // Multipliers that ended up at round-off level on slack constraints
        // are set to exactly zero when that keeps the stopping rule.
        let snapped = z.map(|v| if v <= 1e-10 { 0.0 } else { v });
        if snapped != z {
            let (lam, mu) = self.from_z(&snapped);
            let es = self.eval(&lam, mu)?;
            if self.done(&lam, mu, &es).is_some() {
                return Ok(Some((lam, mu, es, iterations)));
            }
        }
        let (lam, mu) = self.from_z(&z);
        Ok(self.done(&lam, mu, &e).is_some().then_some((lam, mu, e, iterations)))
    }
}

/// Projected subgradient search with complementarity polish.
///
/// `map` returns the Lagrangian-minimizing precoders for the multipliers in
/// the given state (`state.mu` is already clamped to `mu_floor` when a power
/// cap is present). `power_cap = None` drops the power constraint entirely;
/// `warm` restarts from an earlier solution.
pub fn subgradient_search<F>(
    map: F,
    constraints: &ConstraintSet,
    power_cap: Option<f64>,
    opts: &SolverOptions,
    warm: Option<&DualState>,
) -> Result<(PrecoderSet, DualState)>
where
    F: FnMut(&DualState) -> Result<Vec<CMat>>,
{
    let mut s = Search::new(map, constraints, power_cap, opts)?;
    let n = constraints.len();

    let (mut lambda, mut mu, first_polish) = match warm {
        Some(w) if w.lambda.len() == n => {
            let mu = if power_cap.is_some() { w.mu.max(0.0) } else { 0.0 };
            if mu > 0.0 {
                s.zscale = mu;
            } else if let Some(p) = power_cap {
                s.zscale = s.initial_mu(&w.lambda, p)?.max(opts.mu_floor).max(TINY);
            }
            (w.lambda.clone(), mu, 0)
        }
        _ => {
            let zero = vec![0.0; n];
            let mu = match power_cap {
                Some(p) => s.initial_mu(&zero, p)?,
                None => 0.0,
            };
            if mu > 0.0 {
                s.zscale = mu;
            }
            // Feasible already with no region multipliers?
            let e = s.eval(&zero, mu)?;
            if let Some(chi) = s.done(&zero, mu, &e) {
                let state = DualState { lambda: zero, mu, chi, iterations: 0, evaluations: s.evaluations };
                return Ok((PrecoderSet::with_duals(e.precoders, state.clone()), state));
            }
            (zero, mu, 10)
        }
    };

    let mut e = s.eval(&lambda, mu)?;
    let mut polish_iters = 0;
    for iter in 0..=opts.max_iterations {
        if let Some(chi) = s.done(&lambda, mu, &e) {
            let state = DualState { lambda, mu, chi, iterations: iter + polish_iters, evaluations: s.evaluations };
            return Ok((PrecoderSet::with_duals(e.precoders, state.clone()), state));
        }
        if opts.polish && (iter == first_polish || (iter > first_polish && iter % 100 == 0)) {
            // Broyden alone stalls on strongly degenerate active sets; later
            // attempts pay for periodic fresh Jacobians.
            let refresh = if iter == first_polish { 0 } else { REFRESH_EVERY };
            if let Some((l2, m2, e2, its)) = s.polish(&lambda, mu, refresh)? {
                let chi = s.chi(&l2, m2, &e2);
                let state = DualState { lambda: l2, mu: m2, chi, iterations: iter + polish_iters + its, evaluations: s.evaluations };
                return Ok((PrecoderSet::with_duals(e2.precoders, state.clone()), state));
            }
            polish_iters += 1;
        }
        if iter == opts.max_iterations {
            break;
        }
        let shrink = if iter >= opts.diminishing_after { 1.0 / (iter as f64).sqrt() } else { 1.0 };
        let zscale = s.zscale;
        for (j, l) in lambda.iter_mut().enumerate() {
            let q = constraints.items()[j].threshold;
            let w = (q - e.loads[j]) / q;
            let scaled = *l * s.norms[j] / zscale - opts.step_lambda * shrink * w;
            *l = scaled.max(0.0) * zscale / s.norms[j];
        }
        if let Some(p) = power_cap {
            let w = (p - e.power) / p;
            mu = (mu - opts.step_mu * shrink * zscale * w).max(opts.mu_floor);
        }
        e = s.eval(&lambda, mu)?;
    }
    let chi = s.chi(&lambda, mu, &e);
    Err(Error::DualNonConvergence { iterations: opts.max_iterations, chi })
}

/// Complementarity polish alone, started from `start`. `None` when it does
/// not reach the stopping rule.
pub fn polish_from<F>(
    map: F,
    constraints: &ConstraintSet,
    power_cap: Option<f64>,
    opts: &SolverOptions,
    start: &DualState,
) -> Result<Option<(PrecoderSet, DualState)>>
where
    F: FnMut(&DualState) -> Result<Vec<CMat>>,
{
    let mut s = Search::new(map, constraints, power_cap, opts)?;
    if start.lambda.len() != constraints.len() {
        return Err(invalid("one multiplier per constraint expected"));
    }
    let mu = if power_cap.is_some() { start.mu.max(opts.mu_floor) } else { 0.0 };
    if mu > 0.0 {
        s.zscale = mu;
    }
    Ok(s.polish(&start.lambda, mu, 0)?.map(|(lambda, mu, e, its)| {
        let chi = s.chi(&lambda, mu, &e);
        let state = DualState { lambda, mu, chi, iterations: its, evaluations: s.evaluations };
        (PrecoderSet::with_duals(e.precoders, state.clone()), state)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{geometry::ConstraintSet, CVec, C64};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    /// Scalar channel `h`, scalar constraint gain `g`, single stream: the
    /// waterfilling map is `|f|² = (1/(μ + λg) - σ²/|h|²)^+`.
    fn scalar_map(h: f64, g: f64) -> impl FnMut(&DualState) -> Result<Vec<CMat>> {
        move |d: &DualState| {
            let z = d.mu + d.lambda[0] * g;
            let p = (1.0 / z - 1.0 / (h * h)).max(0.0);
            Ok(vec![CMat::from_element(1, 1, c(p.sqrt()))])
        }
    }

    #[test]
    fn inactive_constraints_keep_power_tight() {
        let cons = ConstraintSet::single(CVec::from_element(1, c(1.0)), 1e9);
        let (f, st) = subgradient_search(scalar_map(2.0, 1.0), &cons, Some(10.0), &SolverOptions::default(), None).unwrap();
        assert_eq!(st.lambda, vec![0.0]);
        assert!((f.power() - 10.0).abs() <= 1e-6 * 10.0);
        assert!(st.chi <= 1e-6);
    }

    #[test]
    fn scalar_constraint_binds_to_threshold() {
        // Interference g|f|² with g = 0.5, P = 10, Q = 1: unconstrained power
        // would give 5 > Q.
        let g: f64 = 0.5;
        let cons = ConstraintSet::single(CVec::from_element(1, c(g.sqrt())), 1.0);
        let (f, st) = subgradient_search(scalar_map(2.0, g), &cons, Some(10.0), &SolverOptions::default(), None).unwrap();
        let load = cons.loads(&f.per_user)[0];
        assert!((load - 1.0).abs() <= 1e-6, "{load}");
        assert!(st.lambda[0] > 0.0);
        // Bisection oracle on the scalar KKT system: power slack (μ = 0) and
        // g·(1/(λg) - 1/4) = 1.
        let (mut lo, mut hi) = (1e-6f64, 1e6f64);
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            let load = g * (1.0 / (mid * g) - 0.25).max(0.0);
            if load > 1.0 { lo = mid } else { hi = mid }
        }
        let lambda_oracle = (lo * hi).sqrt();
        assert!((st.lambda[0] - lambda_oracle).abs() <= 1e-5 * lambda_oracle);
        assert!(st.mu <= 1e-9);
    }

    #[test]
    fn power_subgradient_vanishes_at_cap() {
        let cons = ConstraintSet::single(CVec::from_element(1, c(1.0)), 1.0);
        let f = CMat::from_element(1, 1, c(2.0));
        let st = DualState { lambda: vec![0.0], mu: 1.0, ..DualState::default() };
        assert_eq!(kkt_residual(&[f], &st, &cons, Some(4.0)), 0.0);
    }

    #[test]
    fn residual_zero_duals() {
        let cons = ConstraintSet::single(CVec::from_element(2, c(1.0)), 1.0);
        let f = CMat::from_element(2, 1, c(3.0));
        assert_eq!(kkt_residual(&[f], &DualState::zeros(1), &cons, Some(1.0)), 0.0);
    }

    #[test]
    fn residual_matches_direct_sum() {
        use crate::geometry::{BoundarySample, CharacteristicMatrix, RegionConstraint};
        let g = crate::arrays::ArrayGeometry::new(2, 2, 0.5).unwrap();
        let items: Vec<_> = (0..5)
            .map(|l| {
                let point = BoundarySample { d: 10.0 + l as f64, theta: 1.0 + 0.1 * l as f64, phi: 0.3 * l as f64 };
                RegionConstraint {
                    region: 0,
                    sample: l,
                    threshold: 0.01 * (l + 1) as f64,
                    point,
                    matrix: CharacteristicMatrix::new(&g, &point, 2.0),
                }
            })
            .collect();
        let cons = ConstraintSet::from_items(4, items);
        let f = CMat::from_fn(4, 2, |r, k| C64::new((r + k) as f64 * 0.3, 0.1 * r as f64 - 0.2));
        let st = DualState { lambda: vec![0.5, 0.0, 2.0, 1.0, 0.25], mu: 0.7, ..DualState::default() };
        let p_cap = 3.0;
        let mut num = (0.7 * (frob2(&f) - p_cap)).abs();
        let mut den = 0.7 * p_cap + f64::EPSILON;
        for (j, item) in cons.items().iter().enumerate() {
            let r = item.matrix.matrix();
            let load = (f.adjoint() * r * &f).trace().re;
            num += (st.lambda[j] * (load - item.threshold)).abs();
            den += st.lambda[j] * item.threshold;
        }
        let got = kkt_residual(core::slice::from_ref(&f), &st, &cons, Some(p_cap));
        assert!((got - num / den).abs() <= 1e-12 * (num / den));
    }

    #[test]
    fn rejects_bad_inputs() {
        let cons = ConstraintSet::single(CVec::from_element(1, c(1.0)), 1.0);
        assert!(subgradient_search(scalar_map(1.0, 1.0), &cons, Some(0.0), &SolverOptions::default(), None).is_err());
        let bad = SolverOptions { step_mu: 0.0, ..SolverOptions::default() };
        assert!(subgradient_search(scalar_map(1.0, 1.0), &cons, Some(1.0), &bad, None).is_err());
    }
}
