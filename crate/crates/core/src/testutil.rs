//! Shared fixtures for unit tests.

use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::model::{PhysicalParams, SetupGeometry, UnitSystem};

/// Natural-unit parameters with G = hbar = c = m = 1.
pub fn natural_params(n: u64, radius: f64, duration: f64) -> PhysicalParams {
    PhysicalParams::derive(1.0, 1.0, 1.0, 1.0, n, radius, duration, UnitSystem::Natural).unwrap()
}

/// Collinear reference placement: centers at 0, 1, 2, 3 on the x axis.
pub fn collinear_geometry(radius: f64) -> SetupGeometry {
    SetupGeometry::new(
        Vector3::new(0.0, 0.0, 0.0),
        Vector3::new(1.0, 0.0, 0.0),
        Vector3::new(2.0, 0.0, 0.0),
        Vector3::new(3.0, 0.0, 0.0),
        radius,
    )
    .unwrap()
}

/// Draws a valid random geometry: four centers in a box of side `span`,
/// resampled until every pair clears the `2R` separation requirement.
pub fn random_geometry(rng: &mut ChaCha8Rng, radius: f64, span: f64) -> SetupGeometry {
    loop {
        let mut pts = [Vector3::zeros(); 4];
        for p in &mut pts {
            *p = Vector3::new(
                rng.random::<f64>() * span,
                rng.random::<f64>() * span,
                rng.random::<f64>() * span,
            );
        }
        if let Ok(geom) = SetupGeometry::new(pts[0], pts[1], pts[2], pts[3], radius) {
            return geom;
        }
    }
}
