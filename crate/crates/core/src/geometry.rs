//! Protected regions, their boundaries in polar form, and the rank-one
//! characteristic matrices obtained by sampling those boundaries.
//!
//! The base station sits at the origin. A region is described by its 2-D
//! footprint boundary in the `c3 = 0` plane (line segments or a circle)
//! extruded vertically over `[c3_min, c3_max]`. Only the boundary part facing
//! the base station is sampled: received power decays with distance, so the
//! nearest boundary is the worst case.

use alloc::{format, vec::Vec};
use core::f64::consts::{FRAC_PI_2, PI};

#[cfg(not(feature = "std"))]
use num_traits::Float;
use crate::{
    arrays::{upa_response, ArrayGeometry},
    error::invalid,
    CMat, CVec, Error, Result, C64,
};

const SPAN_TOL: f64 = 1e-12;

/// One straight boundary piece `ω1·c1 + ω2·c2 = ω3` between two endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub omega: [f64; 3],
    pub start: (f64, f64),
    pub end: (f64, f64),
    /// Whether this piece is constrained (sampled). Pieces hidden behind a
    /// nearer one can be left out.
    pub facing: bool,
}

impl Segment {
    pub fn new(omega: [f64; 3], start: (f64, f64), end: (f64, f64)) -> Result<Self> {
        let s = Self { omega, start, end, facing: true };
        s.validate()?;
        Ok(s)
    }

    /// Segment through two points, with the line coefficients derived.
    pub fn through(start: (f64, f64), end: (f64, f64)) -> Result<Self> {
        let (x0, y0) = start;
        let (x1, y1) = end;
        let w1 = y1 - y0;
        let w2 = x0 - x1;
        let w3 = w1 * x0 + w2 * y0;
        Self::new([w1, w2, w3], start, end)
    }

    pub fn validate(&self) -> Result<()> {
        let [w1, w2, w3] = self.omega;
        if w1 == 0.0 && w2 == 0.0 {
            return Err(invalid("segment line coefficients (w1, w2) are both zero"));
        }
        for &(x, y) in &[self.start, self.end] {
            let lhs = w1 * x + w2 * y;
            let scale = w3.abs().max((w1 * x).abs() + (w2 * y).abs()).max(f64::MIN_POSITIVE);
            if (lhs - w3).abs() > 1e-9 * scale {
                return Err(Error::InvalidRegion(format!(
                    "endpoint ({x}, {y}) is off the line {w1}*c1 + {w2}*c2 = {w3}"
                )));
            }
            if x == 0.0 && y == 0.0 {
                return Err(Error::InvalidRegion("segment passes through the base station".into()));
            }
        }
        Ok(())
    }

    /// Azimuth span `[φ_min, φ_max]` covered by the segment as seen from the
    /// origin. The upper end may exceed π when the segment straddles the
    /// negative `c1` axis.
    pub fn phi_span(&self) -> (f64, f64) {
        let a = self.start.1.atan2(self.start.0);
        let b = self.end.1.atan2(self.end.0);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if hi - lo > PI {
            (hi, lo + 2.0 * PI)
        } else {
            (lo, hi)
        }
    }
}

/// Footprint boundary of a region.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Polyline(Vec<Segment>),
    Circle { center: (f64, f64), radius: f64 },
}

/// A protected region with its interference cap and sampling density.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSpec {
    pub shape: Shape,
    /// Interference cap `Q` in linear milliwatts.
    pub q_threshold: f64,
    /// `(c3_min, c3_max)` in meters.
    pub height_span: (f64, f64),
    pub n_azimuth: usize,
    pub n_elevation: usize,
    pub pathloss_gamma: f64,
}

/// Polar coordinates of one boundary sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySample {
    pub d: f64,
    pub theta: f64,
    pub phi: f64,
}

/// Rank-one characteristic matrix `R = r rᴴ`, stored by its factor
/// `r = a(θ, φ) / sqrt(4π d^γ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicMatrix {
    pub factor: CVec,
}

impl CharacteristicMatrix {
    pub fn new(array: &ArrayGeometry, sample: &BoundarySample, gamma: f64) -> Self {
        let scale = 1.0 / (4.0 * PI * sample.d.powf(gamma)).sqrt();
        Self { factor: upa_response(array, sample.theta, sample.phi).scale(scale) }
    }

    /// `R = r rᴴ`, materialized.
    pub fn matrix(&self) -> CMat {
        &self.factor * self.factor.adjoint()
    }

    /// `trace(R) = ‖r‖²`.
    pub fn trace(&self) -> f64 {
        self.factor.norm_squared()
    }
}

/// `d(φ) = ω3 / (ω1 cos φ + ω2 sin φ)` for a line segment.
pub fn line_distance(segment: &Segment, phi: f64) -> Result<f64> {
    let (lo, hi) = segment.phi_span();
    let p = wrap_into(phi, lo);
    if p < lo - SPAN_TOL || p > hi + SPAN_TOL {
        return Err(Error::AngleOutOfSpan { value: phi, min: lo, max: hi });
    }
    let [w1, w2, w3] = segment.omega;
    let denom = w1 * p.cos() + w2 * p.sin();
    let d = w3 / denom;
    if !(denom != 0.0) || !(d > 0.0) || !d.is_finite() {
        return Err(Error::DegenerateGeometry(format!(
            "line {w1}*c1 + {w2}*c2 = {w3} gives no positive distance at phi = {phi}"
        )));
    }
    Ok(d)
}

/// Azimuth span of the circle's tangent lines seen from the origin.
pub fn circle_phi_span(center: (f64, f64), radius: f64) -> Result<(f64, f64)> {
    let dist = center.0.hypot(center.1);
    if !(radius > 0.0) || dist <= radius {
        return Err(Error::InvalidRegion("circle must have positive radius and exclude the base station".into()));
    }
    let mid = center.1.atan2(center.0);
    let half = (radius / dist).asin();
    Ok((mid - half, mid + half))
}

/// Near-side intersection of the ray at azimuth `phi` with the circle:
/// `b - sqrt(r² - |c|² + b²)` with `b = ω1 cos φ + ω2 sin φ`.
pub fn circle_distance(center: (f64, f64), radius: f64, phi: f64) -> Result<f64> {
    let (w1, w2) = center;
    let b = w1 * phi.cos() + w2 * phi.sin();
    let mut disc = radius * radius - (w1 * w1 + w2 * w2) + b * b;
    // Tangent directions land on zero up to rounding.
    if disc < 0.0 && disc > -1e-9 * radius * radius {
        disc = 0.0;
    }
    if disc < 0.0 || b <= 0.0 {
        return Err(Error::AngleOutOfSpan { value: phi, min: f64::NAN, max: f64::NAN });
    }
    let d = b - disc.sqrt();
    if !(d > 0.0) {
        return Err(Error::DegenerateGeometry("circle contains the base station".into()));
    }
    Ok(d)
}

/// Elevation span `[θ_min, θ_max]` of the boundary surface above a footprint
/// point at horizontal distance `d_phi`.
pub fn elevation_span(d_phi: f64, c3_min: f64, c3_max: f64) -> (f64, f64) {
    let theta_max = if c3_min == 0.0 { FRAC_PI_2 } else { (d_phi / c3_min).atan() };
    let theta_min = (d_phi / c3_max).atan();
    (theta_min, theta_max)
}

/// Slant distance `d(φ) / sin θ`.
pub fn elevation_distance(d_phi: f64, theta: f64) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(Error::AngleOutOfSpan { value: theta, min: 0.0, max: FRAC_PI_2 });
    }
    Ok(d_phi / theta.sin())
}

fn wrap_into(phi: f64, lo: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut p = phi;
    while p < lo - SPAN_TOL {
        p += two_pi;
    }
    while p >= lo + two_pi - SPAN_TOL {
        p -= two_pi;
    }
    p
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| {
        if n == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * (i as f64) / ((n - 1) as f64)
        }
    })
}

impl RegionSpec {
    pub fn validate(&self) -> Result<()> {
        match &self.shape {
            Shape::Polyline(segments) => {
                if segments.is_empty() {
                    return Err(Error::InvalidRegion("polyline has no segments".into()));
                }
                if !segments.iter().any(|s| s.facing) {
                    return Err(Error::InvalidRegion("polyline has no facing segment".into()));
                }
                for s in segments {
                    s.validate()?;
                }
            }
            Shape::Circle { center, radius } => {
                circle_phi_span(*center, *radius)?;
            }
        }
        let (lo, hi) = self.height_span;
        if !(hi > lo) || !(lo >= 0.0) {
            return Err(Error::InvalidRegion("height span needs c3_max > c3_min >= 0".into()));
        }
        if !(self.q_threshold > 0.0) {
            return Err(Error::InvalidRegion("interference threshold must be positive".into()));
        }
        if self.n_azimuth == 0 || self.n_elevation == 0 {
            return Err(Error::InvalidRegion("sample counts must be positive".into()));
        }
        if !(self.pathloss_gamma >= 0.0) {
            return Err(Error::InvalidRegion("pathloss exponent must be non-negative".into()));
        }
        Ok(())
    }

    /// Azimuth span of the sampled boundary.
    pub fn azimuth_span(&self) -> Result<(f64, f64)> {
        match &self.shape {
            Shape::Circle { center, radius } => circle_phi_span(*center, *radius),
            Shape::Polyline(segments) => {
                let mut facing = segments.iter().filter(|s| s.facing);
                let first = facing.next().ok_or_else(|| Error::InvalidRegion("no facing segment".into()))?;
                let (mut lo, mut hi) = first.phi_span();
                for s in facing {
                    let (a, b) = s.phi_span();
                    let a2 = wrap_into(a, lo - PI);
                    lo = lo.min(a2);
                    hi = hi.max(a2 + (b - a));
                }
                Ok((lo, hi))
            }
        }
    }

    /// Horizontal distance `d(φ)` from the base station to the nearest
    /// sampled boundary point at azimuth `phi`.
    pub fn boundary_distance(&self, phi: f64) -> Result<f64> {
        match &self.shape {
            Shape::Circle { center, radius } => circle_distance(*center, *radius, phi),
            Shape::Polyline(segments) => {
                let mut best: Option<f64> = None;
                let mut last_err = None;
                for s in segments.iter().filter(|s| s.facing) {
                    match line_distance(s, phi) {
                        Ok(d) => best = Some(best.map_or(d, |b: f64| b.min(d))),
                        Err(e) => last_err = Some(e),
                    }
                }
                best.ok_or_else(|| last_err.unwrap_or_else(|| Error::InvalidRegion("no facing segment".into())))
            }
        }
    }

    /// Boundary point at `(phi, theta)`.
    pub fn point(&self, phi: f64, theta: f64) -> Result<BoundarySample> {
        let d_phi = self.boundary_distance(phi)?;
        Ok(BoundarySample { d: elevation_distance(d_phi, theta)?, theta, phi })
    }

    /// The sampling grid: `n_azimuth` equally spaced azimuths over the span
    /// and, for each, `n_elevation` equally spaced elevations over that
    /// azimuth's own `[θ_min(φ), θ_max(φ)]`. Endpoints are included.
    pub fn sample_points(&self) -> Result<Vec<BoundarySample>> {
        self.validate()?;
        let (lo, hi) = self.azimuth_span()?;
        let (c3_min, c3_max) = self.height_span;
        let mut out = Vec::with_capacity(self.n_azimuth * self.n_elevation);
        for phi in linspace(lo, hi, self.n_azimuth) {
            let d_phi = self.boundary_distance(phi)?;
            let (t_lo, t_hi) = elevation_span(d_phi, c3_min, c3_max);
            for theta in linspace(t_lo, t_hi, self.n_elevation) {
                out.push(BoundarySample { d: elevation_distance(d_phi, theta)?, theta, phi });
            }
        }
        Ok(out)
    }
}

/// Characteristic matrices for every sample of the region boundary.
pub fn sample_boundary(region: &RegionSpec, array: &ArrayGeometry) -> Result<Vec<CharacteristicMatrix>> {
    array.validate()?;
    Ok(region
        .sample_points()?
        .iter()
        .map(|s| CharacteristicMatrix::new(array, s, region.pathloss_gamma))
        .collect())
}

/// Average received power `Σ_k trace(F_kᴴ R F_k) = Σ_k ‖F_kᴴ r‖²`.
pub fn interference(precoders: &[CMat], r: &CharacteristicMatrix) -> Result<f64> {
    let mut total = 0.0;
    for f in precoders {
        if f.nrows() != r.factor.len() {
            return Err(Error::DimensionMismatch { expected: r.factor.len(), got: f.nrows() });
        }
        total += (f.adjoint() * &r.factor).norm_squared();
    }
    Ok(total)
}

/// One sampled region constraint `Σ_k ‖F_kᴴ r‖² ≤ threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionConstraint {
    pub region: usize,
    pub sample: usize,
    pub threshold: f64,
    pub point: BoundarySample,
    pub matrix: CharacteristicMatrix,
}

/// All sampled constraints of a scenario, with the factors packed
/// column-wise for batched evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    m_t: usize,
    items: Vec<RegionConstraint>,
    factors: CMat,
}

impl ConstraintSet {
    pub fn empty(m_t: usize) -> Self {
        Self { m_t, items: Vec::new(), factors: CMat::zeros(m_t, 0) }
    }

    pub fn build(regions: &[RegionSpec], array: &ArrayGeometry) -> Result<Self> {
        let mut items = Vec::new();
        for (i, region) in regions.iter().enumerate() {
            for (l, point) in region.sample_points()?.into_iter().enumerate() {
                items.push(RegionConstraint {
                    region: i,
                    sample: l,
                    threshold: region.q_threshold,
                    matrix: CharacteristicMatrix::new(array, &point, region.pathloss_gamma),
                    point,
                });
            }
        }
        Ok(Self::from_items(array.elements(), items))
    }

    pub fn from_items(m_t: usize, items: Vec<RegionConstraint>) -> Self {
        let factors = CMat::from_fn(m_t, items.len(), |r, c| items[c].matrix.factor[r]);
        Self { m_t, items, factors }
    }

    /// Single constraint with an explicit factor; handy for small problems.
    pub fn single(factor: CVec, threshold: f64) -> Self {
        let m_t = factor.len();
        Self::from_items(
            m_t,
            alloc::vec![RegionConstraint {
                region: 0,
                sample: 0,
                threshold,
                point: BoundarySample { d: 1.0, theta: FRAC_PI_2, phi: 0.0 },
                matrix: CharacteristicMatrix { factor },
            }],
        )
    }

    pub fn m_t(&self) -> usize {
        self.m_t
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[RegionConstraint] {
        &self.items
    }

    pub fn thresholds(&self) -> impl Iterator<Item = f64> + '_ {
        self.items.iter().map(|c| c.threshold)
    }

    /// `M_t × L` matrix whose columns are the factors `r_j`.
    pub fn factors(&self) -> &CMat {
        &self.factors
    }

    /// `shift·I + Σ_j λ_j r_j r_jᴴ`, summing only the positive multipliers.
    pub fn weighted_sum(&self, lambda: &[f64], shift: f64) -> CMat {
        let active: Vec<usize> = (0..self.items.len()).filter(|&j| lambda[j] > 0.0).collect();
        let mut z = if active.is_empty() {
            CMat::zeros(self.m_t, self.m_t)
        } else {
            let c = self.scaled_factors(lambda, &active);
            &c * c.adjoint()
        };
        for i in 0..self.m_t {
            z[(i, i)] += C64::new(shift, 0.0);
        }
        z
    }

    /// Columns `sqrt(λ_j) r_j` for the listed constraints.
    pub fn scaled_factors(&self, lambda: &[f64], active: &[usize]) -> CMat {
        CMat::from_fn(self.m_t, active.len(), |r, c| {
            let j = active[c];
            self.factors[(r, j)] * lambda[j].sqrt()
        })
    }

    /// Same constraints with every threshold multiplied by `scale`.
    pub fn with_threshold_scale(&self, scale: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.items {
            c.threshold *= scale;
        }
        out
    }

    /// Interference at every sample for a set of precoders.
    pub fn loads(&self, precoders: &[CMat]) -> Vec<f64> {
        let mut loads = alloc::vec![0.0; self.items.len()];
        if self.items.is_empty() {
            return loads;
        }
        for f in precoders {
            if f.ncols() == 0 {
                continue;
            }
            let y = self.factors.adjoint() * f;
            for (j, load) in loads.iter_mut().enumerate() {
                *load += y.row(j).iter().map(|z: &C64| z.norm_sqr()).sum::<f64>();
            }
        }
        loads
    }

    /// `max_j load_j / threshold_j` (0 when there are no constraints).
    pub fn worst_ratio(&self, precoders: &[CMat]) -> f64 {
        self.loads(precoders)
            .iter()
            .zip(self.thresholds())
            .map(|(l, q)| l / q)
            .fold(0.0, f64::max)
    }

    /// Largest absolute interference over all samples, in milliwatts.
    pub fn worst_load(&self, precoders: &[CMat]) -> f64 {
        self.loads(precoders).into_iter().fold(0.0, f64::max)
    }
}
