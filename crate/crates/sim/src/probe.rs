//! Worst-case interference at random points of the region boundaries.

use rcmimo_core::{
    arrays::ArrayGeometry,
    geometry::{elevation_span, interference, CharacteristicMatrix, RegionSpec},
    rng::{stream, uniform},
    CMat, Result,
};

/// Largest interference (milliwatts) over `n_points` random boundary points
/// per region. Each point takes `φ` uniform over the region's azimuth span
/// and `θ` uniform over `[θ_min(φ), θ_max(φ)]`, and gets a fresh
/// characteristic matrix. Zero precoders give 0.
pub fn probe_boundary(
    regions: &[RegionSpec],
    array: &ArrayGeometry,
    precoders: &[CMat],
    n_points: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = stream(seed);
    let mut worst: f64 = 0.0;
    for region in regions {
        let (lo, hi) = region.azimuth_span()?;
        let (c3_min, c3_max) = region.height_span;
        for _ in 0..n_points {
            let phi = uniform(&mut rng, lo, hi);
            let d_phi = region.boundary_distance(phi)?;
            let (t_lo, t_hi) = elevation_span(d_phi, c3_min, c3_max);
            let theta = uniform(&mut rng, t_lo, t_hi);
            let point = region.point(phi, theta)?;
            let r = CharacteristicMatrix::new(array, &point, region.pathloss_gamma);
            worst = worst.max(interference(precoders, &r)?);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rcmimo_core::{geometry::Shape, C64};

    fn circle() -> RegionSpec {
        RegionSpec {
            shape: Shape::Circle { center: (-6000.0, 4000.0), radius: 800.0 },
            q_threshold: 1e-8,
            height_span: (0.0, 1500.0),
            n_azimuth: 10,
            n_elevation: 5,
            pathloss_gamma: 2.0,
        }
    }

    #[test]
    fn zero_precoder_probes_zero() {
        let g = ArrayGeometry::default();
        let f = CMat::zeros(36, 2);
        assert_eq!(probe_boundary(&[circle()], &g, &[f], 50, 1).unwrap(), 0.0);
    }

    #[test]
    fn deterministic_and_bounded_by_beam_gain() {
        let g = ArrayGeometry::default();
        let f = CMat::from_fn(36, 1, |i, _| C64::new(if i == 0 { 1.0 } else { 0.0 }, 0.0));
        let a = probe_boundary(&[circle()], &g, &[f.clone()], 200, 9).unwrap();
        let b = probe_boundary(&[circle()], &g, &[f], 200, 9).unwrap();
        assert_eq!(a, b);
        // One active element: |a_0|² = 1, so the load is 1/(4π d²) with d at
        // least the distance to the circle's near edge.
        let d_min = (6000f64.hypot(4000.0) - 800.0).powi(2);
        assert!(a > 0.0 && a <= 1.0 / (4.0 * std::f64::consts::PI * d_min) * (1.0 + 1e-12));
    }
}
