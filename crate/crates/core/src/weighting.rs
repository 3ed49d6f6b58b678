//! Classic exponential and probabilistic patch weights.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{
    build_distribution_table, center_pixel_weight, DistributionTable, Offset, PatchGeometry,
};

/// `exp(-ssd / h)`.
pub fn classic_weight(ssd: f64, h: f64) -> Result<f64> {
    if !(ssd >= 0.0) {
        return Err(Error::Domain {
            func: "classic_weight",
            value: ssd,
        });
    }
    if !(h > 0.0) {
        return Err(Error::Domain {
            func: "classic_weight",
            value: h,
        });
    }
    Ok((-ssd / h).exp())
}

/// Which weight function to build, before the noise level is known.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum WeightKind {
    /// `h = h_factor · |P| · σ̂²`
    Classic { h_factor: f64 },
    /// Argument of the density is divided by `rho²`.
    Probabilistic { rho: f64 },
}

impl WeightKind {
    pub fn is_probabilistic(&self) -> bool {
        matches!(self, WeightKind::Probabilistic { .. })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassicModel {
    pub h: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilisticModel {
    pub rho: f64,
    pub sigma_hat: f64,
    pub table: Arc<DistributionTable>,
    pub cpw: f64,
}

impl ProbabilisticModel {
    /// `D̂ = ssd / 2σ̂²`
    #[inline]
    pub fn d_hat(&self, ssd: f64) -> f64 {
        ssd / (2.0 * self.sigma_hat * self.sigma_hat)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum WeightModel {
    ClassicExponential(ClassicModel),
    Probabilistic(ProbabilisticModel),
}

impl WeightModel {
    /// Weight given to the target pixel itself.
    pub fn center_weight(&self) -> f64 {
        match self {
            WeightModel::ClassicExponential(_) => 1.0,
            WeightModel::Probabilistic(m) => m.cpw,
        }
    }

    pub fn as_probabilistic(&self) -> Option<&ProbabilisticModel> {
        match self {
            WeightModel::Probabilistic(m) => Some(m),
            WeightModel::ClassicExponential(_) => None,
        }
    }

    /// Weight for a candidate at `offset` whose patch differs by `ssd`
    /// (sum of squared intensity differences).
    pub fn weight_from_ssd(&self, ssd: f64, offset: Offset) -> Result<f64> {
        match self {
            WeightModel::ClassicExponential(m) => {
                if offset.is_zero() {
                    Ok(1.0)
                } else {
                    classic_weight(ssd, m.h)
                }
            }
            WeightModel::Probabilistic(m) => probabilistic_weight(m.d_hat(ssd), offset, m),
        }
    }
}

/// Density of `D` at `offset` evaluated at `d_hat / rho²`; the center returns the CPW.
pub fn probabilistic_weight(d_hat: f64, offset: Offset, model: &ProbabilisticModel) -> Result<f64> {
    if offset.is_zero() {
        return Ok(model.cpw);
    }
    let dist = model.table.get(offset)?;
    dist.pdf(d_hat / (model.rho * model.rho))
}

pub fn build_weight_model(
    kind: WeightKind,
    geometry: &PatchGeometry,
    sigma_hat: f64,
) -> Result<WeightModel> {
    if !(sigma_hat > 0.0) || !sigma_hat.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "noise level must be positive, got {sigma_hat}"
        )));
    }
    match kind {
        WeightKind::Classic { h_factor } => {
            if !(h_factor > 0.0) || !h_factor.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "h factor must be positive, got {h_factor}"
                )));
            }
            Ok(WeightModel::ClassicExponential(ClassicModel {
                h: h_factor * geometry.patch_area() as f64 * sigma_hat * sigma_hat,
            }))
        }
        WeightKind::Probabilistic { rho } => {
            if !(rho > 0.0) || !rho.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "rho must be positive, got {rho}"
                )));
            }
            Ok(WeightModel::Probabilistic(ProbabilisticModel {
                rho,
                sigma_hat,
                table: Arc::new(build_distribution_table(geometry)),
                cpw: center_pixel_weight(geometry),
            }))
        }
    }
}
