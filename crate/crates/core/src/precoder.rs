use alloc::vec::Vec;

use crate::{
    dual::DualState,
    geometry::{interference, CharacteristicMatrix, ConstraintSet},
    linalg::frob2,
    CMat, Result,
};

/// Per-user precoders `F_k` (`M_t × M`) and the duals that produced them,
/// when a dual search was involved.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet {
    pub per_user: Vec<CMat>,
    pub duals: Option<DualState>,
}

impl PrecoderSet {
    pub fn new(per_user: Vec<CMat>) -> Self {
        Self { per_user, duals: None }
    }

    pub fn with_duals(per_user: Vec<CMat>, duals: DualState) -> Self {
        Self { per_user, duals: Some(duals) }
    }

    pub fn users(&self) -> usize {
        self.per_user.len()
    }

    /// `Σ_k trace(F_kᴴ F_k)`.
    pub fn power(&self) -> f64 {
        self.per_user.iter().map(frob2).sum()
    }

    pub fn interference(&self, r: &CharacteristicMatrix) -> Result<f64> {
        interference(&self.per_user, r)
    }

    /// Largest interference over the sampled constraints.
    pub fn worst_load(&self, constraints: &ConstraintSet) -> f64 {
        constraints.worst_load(&self.per_user)
    }

    /// Scale every precoder by `factor` (amplitude).
    pub fn scaled(mut self, factor: f64) -> Self {
        for f in &mut self.per_user {
            *f *= crate::C64::new(factor, 0.0);
        }
        self
    }
}
