//! Dispatch from a set class to its exact maximum-weight set oracle.

use crate::closure::{max_weight_down_set, max_weight_up_set, SetSelection, WeightedInstance};
use crate::convex::max_weight_convex_subset_2d;
use crate::error::{Error, Result};
use crate::model::{ClassKind, DominancePoset, PointCloud, SetClassDescriptor};

/// Maximizes `sum_{i in C} w_i` over the class traces on a fixed cloud.
/// Returned selections always hold sample point indices.
pub struct SetOracle<'a> {
    cloud: &'a PointCloud,
    class: SetClassDescriptor,
    poset: Option<DominancePoset>,
}

impl<'a> SetOracle<'a> {
    pub fn new(cloud: &'a PointCloud, class: SetClassDescriptor) -> Result<Self> {
        if class.dim != cloud.dim() {
            return Err(Error::Unsupported(format!(
                "class is {}-dimensional but the cloud has d = {}",
                class.dim,
                cloud.dim()
            )));
        }
        let poset = match class.kind {
            ClassKind::LowerSets | ClassKind::UpperSets => Some(DominancePoset::build(cloud)),
            ClassKind::ConvexBodies2D => {
                if cloud.dim() != 2 {
                    return Err(Error::Unsupported(format!(
                        "convex bodies need d = 2 (got d = {})",
                        cloud.dim()
                    )));
                }
                None
            }
        };
        Ok(Self {
            cloud,
            class,
            poset,
        })
    }

    pub fn class(&self) -> SetClassDescriptor {
        self.class
    }

    pub fn cloud(&self) -> &PointCloud {
        self.cloud
    }

    pub fn poset(&self) -> Option<&DominancePoset> {
        self.poset.as_ref()
    }

    /// Best class member (the empty set is always admissible).
    pub fn maximize(&self, point_weights: &[f64]) -> Result<SetSelection> {
        match (&self.poset, self.class.kind) {
            (Some(poset), kind) => {
                let inst = WeightedInstance::from_point_weights(poset, point_weights)?;
                let sel = if kind == ClassKind::LowerSets {
                    max_weight_down_set(&inst, true)?
                } else {
                    max_weight_up_set(&inst, true)?
                };
                let indices = poset.expand(&sel.indices);
                let objective_value = indices.iter().map(|&i| point_weights[i]).sum();
                Ok(SetSelection {
                    indices,
                    kind: sel.kind,
                    objective_value,
                })
            }
            (None, _) => max_weight_convex_subset_2d(self.cloud, point_weights),
        }
    }
}
