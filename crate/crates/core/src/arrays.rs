//! Steering vectors for the base-station uniform planar array (UPA) and the
//! user-side uniform linear array (ULA).
//!
//! The UPA sits in the `c2 = 0` plane with `m1` elements along the vertical
//! axis and `m2` along `c1`. Elevation `theta` is measured from the zenith,
//! azimuth `phi` from the `c1` axis.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use crate::{error::invalid, CVec, Result, C64};

/// Base-station planar array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    /// Vertical element count.
    pub m1: usize,
    /// Horizontal element count.
    pub m2: usize,
    /// Element spacing over wavelength.
    pub spacing_ratio: f64,
}

impl Default for ArrayGeometry {
    fn default() -> Self {
        Self { m1: 6, m2: 6, spacing_ratio: 0.5 }
    }
}

impl ArrayGeometry {
    pub fn new(m1: usize, m2: usize, spacing_ratio: f64) -> Result<Self> {
        let g = Self { m1, m2, spacing_ratio };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m1 == 0 || self.m2 == 0 {
            return Err(invalid("array needs at least one element per axis"));
        }
        if !(self.spacing_ratio > 0.0) || !self.spacing_ratio.is_finite() {
            return Err(invalid("spacing ratio must be positive"));
        }
        Ok(())
    }

    /// Total element count `M_t = m1 * m2`.
    pub fn elements(&self) -> usize {
        self.m1 * self.m2
    }

    /// Phase increments `(psi1, psi2)` for a departure direction.
    pub fn phases(&self, theta: f64, phi: f64) -> (f64, f64) {
        let k = 2.0 * PI * self.spacing_ratio;
        (k * theta.cos(), k * theta.sin() * phi.cos())
    }
}

fn progression(n: usize, psi: f64) -> Vec<C64> {
    (0..n).map(|i| C64::from_polar(1.0, -(i as f64) * psi)).collect()
}

/// UPA response `ã(psi2) ⊗ ã(psi1)`: the vertical index runs fastest, which
/// is the column-stacking of the `m1 × m2` response matrix.
pub fn upa_response(array: &ArrayGeometry, theta: f64, phi: f64) -> CVec {
    let (psi1, psi2) = array.phases(theta, phi);
    let vertical = progression(array.m1, psi1);
    let horizontal = progression(array.m2, psi2);
    CVec::from_fn(array.elements(), |idx, _| {
        horizontal[idx / array.m1] * vertical[idx % array.m1]
    })
}

/// Receive ULA response `[1, e^{-jπcosφ/2}, …, e^{-j(m_r-1)πcosφ/2}]`.
pub fn ula_response(m_r: usize, phi: f64) -> Result<CVec> {
    if m_r == 0 {
        return Err(invalid("receive array needs at least one element"));
    }
    let step = PI * phi.cos() / 2.0;
    Ok(CVec::from_vec(progression(m_r, step)))
}
