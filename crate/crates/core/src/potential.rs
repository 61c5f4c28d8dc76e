//! Classical potential sourced by the uniform spheres.
//!
//! The single-sphere profile carries the half-strength normalization used by
//! the interaction vertices: outside the support it is `G M / (2 r)`, and the
//! interior continuation solves the same field equation with the uniform
//! density, matching value and slope at `r = R`.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::model::{Branch, Object, PhysicalParams, SetupGeometry, BRANCHES, OBJECTS};

/// Potential of one sphere of mass `params.mass` centered at `center`.
///
/// Interior (`r <= R`): `(G M / 2) (3 / (2R) - r^2 / (2 R^3))`.
/// Exterior: `G M / (2 r)`. Continuous with continuous derivative at `r = R`.
pub fn sphere_potential(center: &Vector3<f64>, params: &PhysicalParams, x: &Vector3<f64>) -> f64 {
    let r = (x - center).norm();
    let gm = params.g * params.mass;
    let radius = params.radius;
    if r <= radius {
        gm / (2.0 * radius) * (1.5 - 0.5 * r * r / (radius * radius))
    } else {
        gm / (2.0 * r)
    }
}

/// Which placements source the field.
#[derive(Clone, Copy, Debug)]
pub enum Sourcing {
    /// Only the named placement sources the field. This is the convention
    /// used by the amplitude vertices: each vertex weight sees the potential
    /// of the sphere it sits in.
    SingleSource { object: Object, branch: Branch },
    /// Weighted sum over all four placements, for sensitivity studies.
    /// Weights are indexed `[object][branch]` and must be non-negative and
    /// sum to one.
    AllBranches { weights: [[f64; 2]; 2] },
}

/// A potential field bound to one geometry and parameter set.
#[derive(Clone, Debug)]
pub struct PotentialField<'a> {
    pub geometry: &'a SetupGeometry,
    pub params: &'a PhysicalParams,
    pub sourcing: Sourcing,
}

impl<'a> PotentialField<'a> {
    pub fn single_source(
        geometry: &'a SetupGeometry,
        params: &'a PhysicalParams,
        object: Object,
        branch: Branch,
    ) -> Self {
        Self {
            geometry,
            params,
            sourcing: Sourcing::SingleSource { object, branch },
        }
    }

    pub fn all_branches(
        geometry: &'a SetupGeometry,
        params: &'a PhysicalParams,
        weights: [[f64; 2]; 2],
    ) -> Result<Self> {
        let mut total = 0.0;
        for row in &weights {
            for &w in row {
                if !(w.is_finite() && w >= 0.0) {
                    return Err(Error::Validation {
                        field: "branch_weights",
                        message: format!("weights must be finite and non-negative, got {w}"),
                    });
                }
                total += w;
            }
        }
        // Weight normalization keeps the summed field comparable to a single
        // physical source.
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Validation {
                field: "branch_weights",
                message: format!("weights must sum to 1, got {total}"),
            });
        }
        Ok(Self {
            geometry,
            params,
            sourcing: Sourcing::AllBranches { weights },
        })
    }

    /// Field value at `x`.
    pub fn evaluate(&self, x: &Vector3<f64>) -> f64 {
        match self.sourcing {
            Sourcing::SingleSource { object, branch } => {
                sphere_potential(&self.geometry.center(object, branch), self.params, x)
            }
            Sourcing::AllBranches { weights } => {
                let mut sum = 0.0;
                for object in OBJECTS {
                    for branch in BRANCHES {
                        let w = weights[object.index()][branch.index()];
                        if w != 0.0 {
                            sum += w
                                * sphere_potential(
                                    &self.geometry.center(object, branch),
                                    self.params,
                                    x,
                                );
                        }
                    }
                }
                sum
            }
        }
    }
}
