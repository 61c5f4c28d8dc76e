//! Physical parameters, branch geometry, and the shared amplitude containers.
//!
//! Everything downstream works with one parameter set and one geometry: two
//! uniform spheres (objects 1 and 2), each delocalized over a left and a
//! right branch, giving four possible sphere placements.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::C64;

/// Superposition branch of one object.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    L,
    R,
}

/// Both branches in fixed iteration order.
pub const BRANCHES: [Branch; 2] = [Branch::L, Branch::R];

impl Branch {
    pub fn index(self) -> usize {
        match self {
            Branch::L => 0,
            Branch::R => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Branch::L => "L",
            Branch::R => "R",
        }
    }
}

/// Which of the two delocalized objects a sphere belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Object {
    One,
    Two,
}

pub const OBJECTS: [Object; 2] = [Object::One, Object::Two];

impl Object {
    pub fn index(self) -> usize {
        match self {
            Object::One => 0,
            Object::Two => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Object::One => "1",
            Object::Two => "2",
        }
    }
}

/// Unit convention the raw inputs are expressed in. The tag travels with the
/// parameters so reports can state it; no conversion is performed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnitSystem {
    Natural,
    Si,
}

impl UnitSystem {
    pub fn label(self) -> &'static str {
        match self {
            UnitSystem::Natural => "natural",
            UnitSystem::Si => "SI",
        }
    }
}

/// Input constants plus the quantities derived from them.
///
/// `mass` and `mode_volume` are always recomputed from `m`, `n`, and
/// `radius`; they are stored so every consumer agrees on the same values.
#[derive(Clone, Debug)]
pub struct PhysicalParams {
    /// Gravitational constant.
    pub g: f64,
    /// Reduced Planck constant.
    pub hbar: f64,
    /// Speed of light.
    pub c: f64,
    /// Constituent particle mass.
    pub m: f64,
    /// Number of constituents per sphere.
    pub n: u64,
    /// Total sphere mass, `n * m`.
    pub mass: f64,
    /// Sphere radius.
    pub radius: f64,
    /// Packet mode volume, identified with the sphere volume `4 pi R^3 / 3`.
    pub mode_volume: f64,
    /// Elapsed interaction time.
    pub duration: f64,
    pub units: UnitSystem,
}

impl PhysicalParams {
    /// Validates the raw constants and fills in the derived fields.
    ///
    /// `duration = 0` is accepted; it makes every fourth-order amplitude
    /// vanish and downstream verdicts report a degenerate state.
    pub fn derive(
        g: f64,
        hbar: f64,
        c: f64,
        m: f64,
        n: u64,
        radius: f64,
        duration: f64,
        units: UnitSystem,
    ) -> Result<Self> {
        let positive = [
            ("G", g),
            ("hbar", hbar),
            ("c", c),
            ("m", m),
            ("R", radius),
        ];
        for (field, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Validation {
                    field,
                    message: format!("must be finite and positive, got {value}"),
                });
            }
        }
        if n == 0 {
            return Err(Error::Validation {
                field: "N",
                message: "at least one constituent is required".into(),
            });
        }
        if !(duration.is_finite() && duration >= 0.0) {
            return Err(Error::Validation {
                field: "t",
                message: format!("must be finite and non-negative, got {duration}"),
            });
        }
        let mass = n as f64 * m;
        let mode_volume = 4.0 * std::f64::consts::PI * radius.powi(3) / 3.0;
        Ok(Self {
            g,
            hbar,
            c,
            m,
            n,
            mass,
            radius,
            mode_volume,
            duration,
            units,
        })
    }

    /// Inverse reduced Compton wavelength `m c / hbar` of one constituent.
    pub fn gamma(&self) -> f64 {
        self.m * self.c / self.hbar
    }

    /// Mode-normalization prefactor `m^6 N^2 / (4 pi^2 V^2 hbar^6)`.
    pub fn lambda(&self) -> f64 {
        let num = self.m.powi(6) * (self.n as f64).powi(2);
        let den = 4.0 * std::f64::consts::PI.powi(2) * self.mode_volume.powi(2) * self.hbar.powi(6);
        num / den
    }

    /// Fourth-order exchange scale
    /// `kappa = -36 G^4 m^4 M^6 R^2 t^2 / (625 hbar^6)`.
    ///
    /// Always real and non-positive; computed as `-(x^2)` with
    /// `x = 6 G^2 m^2 M^3 R t / (25 hbar^3)` so the sign is exact.
    pub fn kappa(&self) -> C64 {
        let x = 6.0 * self.g.powi(2) * self.m.powi(2) * self.mass.powi(3) * self.radius
            * self.duration
            / (25.0 * self.hbar.powi(3));
        C64::new(-(x * x), 0.0)
    }

    /// `ln |kappa|`, usable where `kappa` itself underflows an `f64`
    /// (SI inputs push it below 1e-300 easily). The phase is always `pi`.
    pub fn kappa_ln_mag(&self) -> f64 {
        36f64.ln() + 4.0 * self.g.ln() + 4.0 * self.m.ln() + 6.0 * self.mass.ln()
            + 2.0 * self.radius.ln()
            + 2.0 * self.duration.ln()
            - 625f64.ln()
            - 6.0 * self.hbar.ln()
    }
}

/// Sphere centers for the four placements, plus the common radius.
///
/// Validity means every pair of placements is separated by more than `2R`,
/// so no two sphere supports overlap in any branch combination.
#[derive(Clone, Debug)]
pub struct SetupGeometry {
    /// Centers indexed by `[object][branch]`.
    pub centers: [[Vector3<f64>; 2]; 2],
    /// Common sphere radius.
    pub radius: f64,
}

impl SetupGeometry {
    pub fn new(
        x_1l: Vector3<f64>,
        x_1r: Vector3<f64>,
        x_2l: Vector3<f64>,
        x_2r: Vector3<f64>,
        radius: f64,
    ) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Validation {
                field: "R",
                message: format!("must be finite and positive, got {radius}"),
            });
        }
        let centers = [[x_1l, x_1r], [x_2l, x_2r]];
        for row in &centers {
            for center in row {
                if !center.iter().all(|v| v.is_finite()) {
                    return Err(Error::Validation {
                        field: "centers",
                        message: "all center coordinates must be finite".into(),
                    });
                }
            }
        }
        let geometry = Self { centers, radius };
        let labels = geometry.placement_labels();
        let points = geometry.placements();
        for a in 0..4 {
            for b in (a + 1)..4 {
                let dist = (points[a] - points[b]).norm();
                if dist <= 2.0 * radius {
                    return Err(Error::Overlap(format!(
                        "spheres {} and {} are {dist:.6e} apart, need more than {:.6e}",
                        labels[a],
                        labels[b],
                        2.0 * radius
                    )));
                }
            }
        }
        Ok(geometry)
    }

    /// Center of the sphere for `object` in `branch`.
    pub fn center(&self, object: Object, branch: Branch) -> Vector3<f64> {
        self.centers[object.index()][branch.index()]
    }

    /// All four centers in label order `1L, 1R, 2L, 2R`.
    pub fn placements(&self) -> [Vector3<f64>; 4] {
        [
            self.centers[0][0],
            self.centers[0][1],
            self.centers[1][0],
            self.centers[1][1],
        ]
    }

    pub fn placement_labels(&self) -> [&'static str; 4] {
        ["1L", "1R", "2L", "2R"]
    }

    /// Cross-object distance table `d[i][k] = |X_1i - X_2k|`.
    ///
    /// Validity of the geometry guarantees every entry exceeds `2R`.
    pub fn branch_distances(&self) -> [[f64; 2]; 2] {
        let mut d = [[0.0; 2]; 2];
        for i in BRANCHES {
            for k in BRANCHES {
                d[i.index()][k.index()] =
                    (self.center(Object::One, i) - self.center(Object::Two, k)).norm();
            }
        }
        d
    }

    /// Smallest cross-object branch distance.
    pub fn min_branch_distance(&self) -> f64 {
        let d = self.branch_distances();
        d.iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// How a 2x2 coefficient matrix was assembled from the exchange tensor, or
/// which first-quantized pipeline produced it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AssemblyMode {
    /// Keep only the tensor diagonal `(m, k) = (i, j)`.
    Diagonal,
    /// Sum all sixteen tensor entries into each coefficient.
    Full,
    /// Keep the largest-magnitude piece per coefficient.
    Dominant,
    /// Full assembly evaluated from the closed-form far-field amplitudes.
    FarfieldAnalytic,
    /// First-quantized symmetrized two-packet assembly.
    FirstqIdentical,
    /// First-quantized assembly without symmetrization.
    FirstqDistinguishable,
}

impl AssemblyMode {
    pub fn label(self) -> &'static str {
        match self {
            AssemblyMode::Diagonal => "diagonal",
            AssemblyMode::Full => "full",
            AssemblyMode::Dominant => "dominant",
            AssemblyMode::FarfieldAnalytic => "farfield-analytic",
            AssemblyMode::FirstqIdentical => "firstq-identical",
            AssemblyMode::FirstqDistinguishable => "firstq-distinguishable",
        }
    }
}

/// Scale convention for amplitude values.
///
/// `KappaUnits` reports each fourth-order amplitude divided by `kappa`, which
/// keeps every entry order one regardless of how extreme the physical
/// constants are; in the far field an entry is exactly `1 / (d_ik d_mj)` in
/// the geometry's length unit. `Absolute` keeps raw physical values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scale {
    Absolute,
    KappaUnits,
}

impl Scale {
    pub fn label(self) -> &'static str {
        match self {
            Scale::Absolute => "absolute",
            Scale::KappaUnits => "kappa-units",
        }
    }
}

/// 2x2 branch coefficient matrix, indexed `[branch of 1][branch of 2]`.
#[derive(Clone, Debug)]
pub struct AmplitudeMatrix {
    pub entries: [[C64; 2]; 2],
    pub mode: AssemblyMode,
    pub scale: Scale,
    /// Set per entry when dominant assembly found two pieces within relative
    /// 1e-9 of the winning magnitude; always false for other modes.
    pub dominant_ties: [[bool; 2]; 2],
}

impl AmplitudeMatrix {
    pub fn new(entries: [[C64; 2]; 2], mode: AssemblyMode, scale: Scale) -> Result<Self> {
        for (i, row) in entries.iter().enumerate() {
            for (j, value) in row.iter().enumerate() {
                if !value.re.is_finite() || !value.im.is_finite() {
                    return Err(Error::NonFinite {
                        location: format!("amplitude matrix entry ({i}, {j})"),
                        detail: format!("{value}"),
                    });
                }
            }
        }
        Ok(Self {
            entries,
            mode,
            scale,
            dominant_ties: [[false; 2]; 2],
        })
    }

    pub fn get(&self, i: Branch, j: Branch) -> C64 {
        self.entries[i.index()][j.index()]
    }

    /// Frobenius norm of the entries.
    pub fn frobenius(&self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Fourth-order exchange tensor `beta[i][j][m][k]`, the amplitude piece in
/// which object 1 takes branch `i`, object 2 takes branch `j`, and the two
/// interaction vertices connect placements `(1i, 2k)` and `(1m, 2j)`.
#[derive(Clone, Debug)]
pub struct ExchangeTensor {
    pub entries: [[[[C64; 2]; 2]; 2]; 2],
    pub scale: Scale,
}

impl ExchangeTensor {
    pub fn get(&self, i: Branch, j: Branch, m: Branch, k: Branch) -> C64 {
        self.entries[i.index()][j.index()][m.index()][k.index()]
    }
}
