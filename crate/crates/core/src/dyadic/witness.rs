use serde::Serialize;

use super::{DyadicFunction, DyadicSet};
use crate::error::{Error, Result};

/// A sign together with its support, mean and (when known) image norm.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignWitness {
    sign: DyadicFunction,
    support: DyadicSet,
    mean: f64,
    image_norm: Option<f64>,
}

impl SignWitness {
    /// Validates that `sign` takes values in `{-1, 0, 1}`.
    pub fn new(sign: DyadicFunction, image_norm: Option<f64>) -> Result<Self> {
        if !sign.is_sign() {
            return Err(Error::Format("witness values must be -1, 0 or 1".into()));
        }
        Ok(Self {
            support: sign.support(),
            mean: sign.mean(),
            sign,
            image_norm,
        })
    }

    pub fn sign(&self) -> &DyadicFunction {
        &self.sign
    }

    pub fn into_sign(self) -> DyadicFunction {
        self.sign
    }

    pub fn support(&self) -> &DyadicSet {
        &self.support
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn image_norm(&self) -> Option<f64> {
        self.image_norm
    }

    pub fn with_image_norm(mut self, norm: f64) -> Self {
        self.image_norm = Some(norm);
        self
    }

    /// `‖T x‖ / ‖x‖_p`, if the image norm is known and the sign is nonzero.
    pub fn ratio(&self, p: f64) -> Option<f64> {
        let norm = self.sign.lp_norm(p).ok()?;
        self.image_norm.filter(|_| norm > 0.0).map(|t| t / norm)
    }
}
