//! Seeded channel draws: i.i.d. Rayleigh and the clustered (correlated)
//! model with `M_s` scatterers around a mean angle of departure.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use crate::{
    arrays::{ula_response, upa_response, ArrayGeometry},
    error::invalid,
    rng::{complex_gaussian, derive, standard_normal, stream, uniform, StreamRng},
    CMat, Result,
};

/// Per-user channel matrices (`M_r × M_t`) for one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub per_user: Vec<CMat>,
    pub seed: u64,
}

impl ChannelRealization {
    pub fn users(&self) -> usize {
        self.per_user.len()
    }

    pub fn m_t(&self) -> usize {
        self.per_user.first().map_or(0, |h| h.ncols())
    }

    pub fn m_r(&self) -> usize {
        self.per_user.first().map_or(0, |h| h.nrows())
    }
}

/// Rectangular `θ × φ` range of mean departure angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AodBox {
    pub theta: (f64, f64),
    pub phi: (f64, f64),
}

/// Mean angle of departure `(θ̄, φ̄)` of a cluster.
#[derive(Debug, Clone, PartialEq)]
pub enum MeanAod {
    Fixed { theta: f64, phi: f64 },
    /// One box picked uniformly per draw, then a uniform point inside it.
    Boxes(Vec<AodBox>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterParams {
    pub m_s: usize,
    /// Variance of the azimuth perturbation.
    pub xi1: f64,
    /// Variance of the elevation perturbation.
    pub xi2: f64,
    pub mean_aod: MeanAod,
    /// When true all users share one mean AoD; otherwise each user draws its
    /// own.
    pub shared_mean: bool,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            m_s: 20,
            xi1: 0.02,
            xi2: 0.05,
            mean_aod: MeanAod::Fixed { theta: PI / 2.0, phi: PI / 2.0 },
            shared_mean: false,
        }
    }
}

impl ClusterParams {
    pub fn validate(&self) -> Result<()> {
        if self.m_s == 0 {
            return Err(invalid("cluster needs at least one scatterer"));
        }
        if !(self.xi1 >= 0.0) || !(self.xi2 >= 0.0) {
            return Err(invalid("angular perturbation variances must be non-negative"));
        }
        if let MeanAod::Boxes(boxes) = &self.mean_aod {
            if boxes.is_empty() {
                return Err(invalid("AoD box list is empty"));
            }
            for b in boxes {
                if !(b.theta.1 >= b.theta.0) || !(b.phi.1 >= b.phi.0) {
                    return Err(invalid("AoD box bounds are reversed"));
                }
            }
        }
        Ok(())
    }
}

fn user_stream(seed: u64, user: usize) -> StreamRng {
    stream(derive(seed, user as u64))
}

/// I.i.d. unit-variance complex Gaussian entries. User `k` draws from the
/// stream `derive(seed, k)`, row-major.
pub fn rayleigh(seed: u64, users: usize, m_r: usize, m_t: usize) -> Result<ChannelRealization> {
    if users == 0 || m_r == 0 || m_t == 0 {
        return Err(invalid("channel dimensions must be positive"));
    }
    let per_user = (0..users)
        .map(|k| {
            let mut rng = user_stream(seed, k);
            let mut h = CMat::zeros(m_r, m_t);
            for r in 0..m_r {
                for c in 0..m_t {
                    h[(r, c)] = complex_gaussian(&mut rng);
                }
            }
            h
        })
        .collect();
    Ok(ChannelRealization { per_user, seed })
}

fn draw_mean(rng: &mut StreamRng, aod: &MeanAod) -> (f64, f64) {
    match aod {
        MeanAod::Fixed { theta, phi } => (*theta, *phi),
        MeanAod::Boxes(boxes) => {
            let pick = if boxes.len() > 1 {
                (uniform(rng, 0.0, boxes.len() as f64) as usize).min(boxes.len() - 1)
            } else {
                0
            };
            let b = &boxes[pick];
            let t = uniform(rng, b.theta.0, b.theta.1);
            let p = uniform(rng, b.phi.0, b.phi.1);
            (t, p)
        }
    }
}

/// One clustered channel `H = M_s^{-1/2} Σ_q α_q a_r(φ_{q,r}) a_t(θ_q, φ_q)ᴴ`.
pub fn clustered_single(
    rng: &mut StreamRng,
    mean: (f64, f64),
    params: &ClusterParams,
    array: &ArrayGeometry,
    m_r: usize,
) -> Result<CMat> {
    let m_t = array.elements();
    let mut h = CMat::zeros(m_r, m_t);
    let (theta_bar, phi_bar) = mean;
    let (sd_az, sd_el) = (params.xi1.sqrt(), params.xi2.sqrt());
    for _ in 0..params.m_s {
        let alpha = complex_gaussian(rng);
        let phi_t = phi_bar + sd_az * standard_normal(rng);
        let theta_t = theta_bar + sd_el * standard_normal(rng);
        let phi_r = uniform(rng, 0.0, 2.0 * PI);
        let a_r = ula_response(m_r, phi_r)?;
        let a_t = upa_response(array, theta_t, phi_t);
        h += (a_r * a_t.adjoint()) * alpha;
    }
    Ok(h.unscale((params.m_s as f64).sqrt()))
}

/// Clustered channels for `users` users. Each user draws its own mean AoD
/// (from the box, if one is given) and its own scatterers from the stream
/// `derive(seed, k)`.
pub fn clustered(
    seed: u64,
    params: &ClusterParams,
    array: &ArrayGeometry,
    users: usize,
    m_r: usize,
) -> Result<ChannelRealization> {
    params.validate()?;
    array.validate()?;
    if users == 0 || m_r == 0 {
        return Err(invalid("channel dimensions must be positive"));
    }
    let shared = if params.shared_mean {
        let mut rng = stream(derive(seed, u64::MAX));
        Some(draw_mean(&mut rng, &params.mean_aod))
    } else {
        None
    };
    let per_user = (0..users)
        .map(|k| {
            let mut rng = user_stream(seed, k);
            let mean = match shared {
                Some(m) => m,
                None => draw_mean(&mut rng, &params.mean_aod),
            };
            clustered_single(&mut rng, mean, params, array, m_r)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChannelRealization { per_user, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;
    use alloc::vec;

    fn rank(m: &CMat) -> usize {
        let sv = m.clone().singular_values();
        let top = sv.iter().cloned().fold(0.0, f64::max);
        sv.iter().filter(|&&s| s > 1e-10 * top).count()
    }

    #[test]
    fn rayleigh_is_deterministic() {
        let a = rayleigh(99, 2, 2, 36).unwrap();
        let b = rayleigh(99, 2, 2, 36).unwrap();
        for (x, y) in a.per_user.iter().zip(&b.per_user) {
            for (p, q) in x.iter().zip(y.iter()) {
                assert_eq!(p.re.to_bits(), q.re.to_bits());
                assert_eq!(p.im.to_bits(), q.im.to_bits());
            }
        }
        assert_ne!(rayleigh(100, 1, 2, 36).unwrap().per_user[0], a.per_user[0]);
    }

    #[test]
    fn rayleigh_moments_and_independence() {
        // 10^6 entries per user.
        let ch = rayleigh(5, 2, 1000, 1000).unwrap();
        let n = 1_000_000.0;
        let power: f64 = ch.per_user[0].iter().map(|z| z.norm_sqr()).sum::<f64>() / n;
        assert!((power - 1.0).abs() < 0.01, "{power}");
        let cross: C64 = ch.per_user[0].iter().zip(ch.per_user[1].iter()).map(|(a, b)| a * b.conj()).sum::<C64>() / n;
        assert!(cross.norm() < 0.01, "{cross}");
    }

    #[test]
    fn single_scatterer_is_rank_one() {
        let params = ClusterParams { m_s: 1, ..ClusterParams::default() };
        let ch = clustered(3, &params, &ArrayGeometry::default(), 1, 2).unwrap();
        assert_eq!(rank(&ch.per_user[0]), 1);
    }

    #[test]
    fn zero_spread_has_one_transmit_direction() {
        let params = ClusterParams { m_s: 20, xi1: 0.0, xi2: 0.0, ..ClusterParams::default() };
        let g = ArrayGeometry::default();
        let ch = clustered(8, &params, &g, 1, 2).unwrap();
        let h = &ch.per_user[0];
        assert!(rank(h) <= 1);
        let a_t = upa_response(&g, PI / 2.0, PI / 2.0);
        // Every row is a multiple of a_tᴴ.
        for r in 0..2 {
            let row = h.row(r).transpose();
            let coef = a_t.iter().zip(row.iter()).map(|(a, x)| a * x).sum::<C64>() / a_t.norm_squared();
            let resid = &row - a_t.conjugate() * coef;
            assert!(resid.norm() <= 1e-10 * row.norm().max(1.0));
        }
    }

    #[test]
    fn clustered_frobenius_moment() {
        let g = ArrayGeometry::default();
        let params = ClusterParams {
            mean_aod: MeanAod::Boxes(vec![AodBox { theta: (0.5, 1.5), phi: (0.0, 3.0) }]),
            ..ClusterParams::default()
        };
        let draws = 10_000;
        let mut total = 0.0;
        for t in 0..draws {
            let ch = clustered(crate::rng::derive(11, t), &params, &g, 1, 2).unwrap();
            total += ch.per_user[0].norm_squared();
        }
        let mean = total / draws as f64;
        assert!((mean - 72.0).abs() <= 0.05 * 72.0, "{mean}");
    }

    #[test]
    fn box_choice_covers_every_box() {
        let boxes = vec![
            AodBox { theta: (0.1, 0.2), phi: (0.0, 0.1) },
            AodBox { theta: (1.0, 1.1), phi: (2.0, 2.1) },
        ];
        let aod = MeanAod::Boxes(boxes);
        let mut hits = [0usize; 2];
        let mut rng = stream(4);
        for _ in 0..400 {
            let (t, p) = draw_mean(&mut rng, &aod);
            if t < 0.5 {
                assert!((0.1..=0.2).contains(&t) && (0.0..=0.1).contains(&p));
                hits[0] += 1;
            } else {
                assert!((1.0..=1.1).contains(&t) && (2.0..=2.1).contains(&p));
                hits[1] += 1;
            }
        }
        assert!(hits[0] > 150 && hits[1] > 150, "{hits:?}");
    }

    #[test]
    fn rejects_bad_params() {
        let bad = ClusterParams { m_s: 0, ..ClusterParams::default() };
        assert!(clustered(0, &bad, &ArrayGeometry::default(), 1, 2).is_err());
        assert!(rayleigh(0, 0, 2, 2).is_err());
    }
}
