//! Pair-exchange amplitudes and the fourth-order exchange tensor.
//!
//! The scalar building block is
//! `V_ij = i * integral of Phi(x) Phi(y) theta_1i(x) theta_2j(y) / |x - y|`,
//! the vertex amplitude connecting object 1 in branch `i` with object 2 in
//! branch `j`. Because both vertex weights are spherically symmetric about
//! their own centers, the monopole (far-field) form
//! `V_ij = i * 16 pi^2 G^2 M^2 R^4 / (25 d_ij)` is exact for separated
//! supports up to quadrature error; the far-field route simply evaluates it
//! directly.
//!
//! The fourth-order tensor combines two vertices,
//! `beta[i][j][m][k] = Lambda t^2 V_ik V_mj`, and the 2x2 coefficient
//! matrices are assembled from it in three conventions (diagonal, full,
//! dominant).

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::model::{
    AmplitudeMatrix, AssemblyMode, Branch, ExchangeTensor, Object, PhysicalParams, Scale,
    SetupGeometry, BRANCHES,
};
use crate::potential::sphere_potential;
use crate::quadrature::{ball_pair_coulomb, mc_oracle, Ball, Method, QuadratureSpec};
use crate::C64;

/// Relative magnitude gap below which two dominant-assembly candidates are
/// reported as tied.
pub const DOMINANT_TIE_TOLERANCE: f64 = 1e-9;

/// How the `V` entries were obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Quadrature,
    Farfield,
}

impl Provenance {
    pub fn label(self) -> &'static str {
        match self {
            Provenance::Quadrature => "quadrature",
            Provenance::Farfield => "farfield",
        }
    }
}

/// Field sourcing for the vertex weights.
#[derive(Clone, Copy, Debug)]
pub enum VFieldMode {
    /// Each vertex sees the potential of the sphere it sits in. This is the
    /// physical convention for the exchange amplitudes.
    SelfSourced,
    /// Both vertices see the weighted all-placement field, for sensitivity
    /// studies. Weights indexed `[object][branch]`, non-negative, summing
    /// to one.
    AllBranches([[f64; 2]; 2]),
}

/// 2x2 matrix of vertex amplitudes `V_ij` with their provenance.
#[derive(Clone, Debug)]
pub struct VMatrix {
    pub entries: [[C64; 2]; 2],
    pub provenance: Provenance,
    /// Set where the far-field form was used below `5 R` separation.
    pub near_field_flags: [[bool; 2]; 2],
}

impl VMatrix {
    pub fn get(&self, i: Branch, j: Branch) -> C64 {
        self.entries[i.index()][j.index()]
    }
}

pub(crate) fn check_radius_consistency(
    geometry: &SetupGeometry,
    params: &PhysicalParams,
) -> Result<()> {
    let rel = (geometry.radius - params.radius).abs() / params.radius;
    if rel > 1e-12 {
        return Err(Error::Usage(format!(
            "geometry radius {} disagrees with parameter radius {}",
            geometry.radius, params.radius
        )));
    }
    Ok(())
}

/// Monopole normalization `16 pi^2 G^2 M^2 R^4 / 25`; `V_ij` divided by
/// `i` times this is dimensionally an inverse distance.
pub fn farfield_unit(params: &PhysicalParams) -> f64 {
    16.0 * std::f64::consts::PI.powi(2) * params.g.powi(2) * params.mass.powi(2)
        * params.radius.powi(4)
        / 25.0
}

fn integrate_pair<F, G>(f: F, g: G, a: &Ball, b: &Ball, spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(&Vector3<f64>) -> f64 + Sync,
    G: Fn(&Vector3<f64>) -> f64 + Sync,
{
    match spec.method {
        Method::GaussProduct => ball_pair_coulomb(f, g, a, b, spec),
        Method::MonteCarlo => Ok(mc_oracle(f, g, a, b, spec)?.0),
    }
}

/// Single vertex amplitude by numerical integration (Gauss product rule or
/// Monte Carlo, per `spec.method`).
pub fn compute_vij(
    geometry: &SetupGeometry,
    params: &PhysicalParams,
    i: Branch,
    j: Branch,
    field: VFieldMode,
    spec: &QuadratureSpec,
) -> Result<C64> {
    check_radius_consistency(geometry, params)?;
    let ball_a = Ball {
        center: geometry.center(Object::One, i),
        radius: params.radius,
    };
    let ball_b = Ball {
        center: geometry.center(Object::Two, j),
        radius: params.radius,
    };
    let integral = match field {
        VFieldMode::SelfSourced => {
            let ca = ball_a.center;
            let cb = ball_b.center;
            integrate_pair(
                move |x: &Vector3<f64>| sphere_potential(&ca, params, x),
                move |y: &Vector3<f64>| sphere_potential(&cb, params, y),
                &ball_a,
                &ball_b,
                spec,
            )?
        }
        VFieldMode::AllBranches(weights) => {
            let field = crate::potential::PotentialField::all_branches(geometry, params, weights)?;
            let field2 = field.clone();
            integrate_pair(
                move |x: &Vector3<f64>| field.evaluate(x),
                move |y: &Vector3<f64>| field2.evaluate(y),
                &ball_a,
                &ball_b,
                spec,
            )?
        }
    };
    Ok(C64::new(0.0, integral))
}

/// All four vertex amplitudes by quadrature.
pub fn compute_vmatrix(
    geometry: &SetupGeometry,
    params: &PhysicalParams,
    field: VFieldMode,
    spec: &QuadratureSpec,
) -> Result<VMatrix> {
    let mut entries = [[C64::new(0.0, 0.0); 2]; 2];
    for i in BRANCHES {
        for j in BRANCHES {
            entries[i.index()][j.index()] = compute_vij(geometry, params, i, j, field, spec)?;
        }
    }
    Ok(VMatrix {
        entries,
        provenance: Provenance::Quadrature,
        near_field_flags: [[false; 2]; 2],
    })
}

/// Far-field vertex amplitude `i * 16 pi^2 G^2 M^2 R^4 / (25 d_ij)` and a
/// flag set when `d_ij < 5 R`, where the discarded interior corrections stop
/// being negligible at the default tolerances.
pub fn farfield_vij(
    geometry: &SetupGeometry,
    params: &PhysicalParams,
    i: Branch,
    j: Branch,
) -> Result<(C64, bool)> {
    check_radius_consistency(geometry, params)?;
    let d = geometry.branch_distances()[i.index()][j.index()];
    let value = C64::new(0.0, farfield_unit(params) / d);
    Ok((value, d < 5.0 * params.radius))
}

/// All four far-field amplitudes.
pub fn farfield_vmatrix(geometry: &SetupGeometry, params: &PhysicalParams) -> Result<VMatrix> {
    let mut entries = [[C64::new(0.0, 0.0); 2]; 2];
    let mut flags = [[false; 2]; 2];
    for i in BRANCHES {
        for j in BRANCHES {
            let (value, warn) = farfield_vij(geometry, params, i, j)?;
            entries[i.index()][j.index()] = value;
            flags[i.index()][j.index()] = warn;
        }
    }
    Ok(VMatrix {
        entries,
        provenance: Provenance::Farfield,
        near_field_flags: flags,
    })
}

/// Fourth-order exchange tensor from the vertex amplitudes.
///
/// `Absolute` scale stores `Lambda t^2 V_ik V_mj` directly and fails if the
/// physical magnitudes leave `f64` range (use [`exchange_tensor_ln`] or
/// kappa units there). `KappaUnits` stores the same tensor divided by
/// `kappa`, which cancels every physical prefactor; with far-field
/// amplitudes an entry is exactly `1 / (d_ik d_mj)`.
pub fn exchange_tensor(
    v: &VMatrix,
    params: &PhysicalParams,
    scale: Scale,
) -> Result<ExchangeTensor> {
    let mut entries = [[[[C64::new(0.0, 0.0); 2]; 2]; 2]; 2];
    match scale {
        Scale::Absolute => {
            let pref = params.lambda() * params.duration.powi(2);
            if !pref.is_finite() {
                return Err(Error::NonFinite {
                    location: "exchange tensor prefactor".into(),
                    detail: format!(
                        "Lambda t^2 = {pref}; use kappa units or the log pipeline"
                    ),
                });
            }
            for i in BRANCHES {
                for j in BRANCHES {
                    for m in BRANCHES {
                        for k in BRANCHES {
                            let value = pref * v.get(i, k) * v.get(m, j);
                            if !value.re.is_finite() || !value.im.is_finite() {
                                return Err(Error::NonFinite {
                                    location: format!(
                                        "exchange tensor entry ({}{}; {}{})",
                                        i.label(),
                                        j.label(),
                                        m.label(),
                                        k.label()
                                    ),
                                    detail:
                                        "absolute scale out of f64 range; use kappa units or the log pipeline"
                                            .into(),
                                });
                            }
                            entries[i.index()][j.index()][m.index()][k.index()] = value;
                        }
                    }
                }
            }
        }
        Scale::KappaUnits => {
            // w_ab = V_ab / (i * farfield_unit); the tensor entry
            // w_ik * w_mj equals Lambda t^2 V_ik V_mj / kappa identically.
            let unit = farfield_unit(params);
            let mut w = [[C64::new(0.0, 0.0); 2]; 2];
            for a in BRANCHES {
                for b in BRANCHES {
                    w[a.index()][b.index()] = v.get(a, b) * C64::new(0.0, -1.0) / unit;
                }
            }
            for i in BRANCHES {
                for j in BRANCHES {
                    for m in BRANCHES {
                        for k in BRANCHES {
                            entries[i.index()][j.index()][m.index()][k.index()] =
                                w[i.index()][k.index()] * w[m.index()][j.index()];
                        }
                    }
                }
            }
        }
    }
    Ok(ExchangeTensor { entries, scale })
}

/// Collapses the tensor into a 2x2 coefficient matrix.
///
/// `Diagonal` keeps `(m, k) = (i, j)`; `Full` and `FarfieldAnalytic` sum all
/// four pieces per coefficient; `Dominant` keeps the largest-magnitude piece
/// and flags near-ties.
pub fn beta_matrix(tensor: &ExchangeTensor, mode: AssemblyMode) -> Result<AmplitudeMatrix> {
    let mut entries = [[C64::new(0.0, 0.0); 2]; 2];
    let mut ties = [[false; 2]; 2];
    for i in BRANCHES {
        for j in BRANCHES {
            let value = match mode {
                AssemblyMode::Diagonal => tensor.get(i, j, i, j),
                AssemblyMode::Full | AssemblyMode::FarfieldAnalytic => {
                    let mut sum = C64::new(0.0, 0.0);
                    for m in BRANCHES {
                        for k in BRANCHES {
                            sum += tensor.get(i, j, m, k);
                        }
                    }
                    sum
                }
                AssemblyMode::Dominant => {
                    let mut best = C64::new(0.0, 0.0);
                    let mut best_mag = -1.0;
                    let mut second_mag = -1.0;
                    for m in BRANCHES {
                        for k in BRANCHES {
                            let piece = tensor.get(i, j, m, k);
                            let mag = piece.norm();
                            if mag > best_mag {
                                second_mag = best_mag;
                                best_mag = mag;
                                best = piece;
                            } else if mag > second_mag {
                                second_mag = mag;
                            }
                        }
                    }
                    if second_mag >= 0.0
                        && best_mag > 0.0
                        && (best_mag - second_mag) <= DOMINANT_TIE_TOLERANCE * best_mag
                    {
                        ties[i.index()][j.index()] = true;
                    }
                    best
                }
                AssemblyMode::FirstqIdentical | AssemblyMode::FirstqDistinguishable => {
                    return Err(Error::Usage(
                        "first-quantized modes are assembled by the firstq module".into(),
                    ));
                }
            };
            entries[i.index()][j.index()] = value;
        }
    }
    let mut matrix = AmplitudeMatrix::new(entries, mode, tensor.scale)?;
    matrix.dominant_ties = ties;
    Ok(matrix)
}

/// Complex value stored as `ln |z|` and `arg z`, for absolute-scale products
/// whose magnitudes leave `f64` range.
#[derive(Clone, Copy, Debug)]
pub struct LogComplex {
    pub ln_mag: f64,
    pub phase: f64,
}

impl LogComplex {
    pub fn from_c64(z: C64) -> Self {
        Self {
            ln_mag: z.norm().ln(),
            phase: z.arg(),
        }
    }

    pub fn mul(self, other: Self) -> Self {
        Self {
            ln_mag: self.ln_mag + other.ln_mag,
            phase: self.phase + other.phase,
        }
    }

    pub fn scale_ln(self, ln_factor: f64, extra_phase: f64) -> Self {
        Self {
            ln_mag: self.ln_mag + ln_factor,
            phase: self.phase + extra_phase,
        }
    }

    /// Sum of log-represented terms, computed against the largest magnitude
    /// so intermediate ratios never overflow.
    pub fn sum(terms: &[LogComplex]) -> LogComplex {
        let max = terms
            .iter()
            .map(|t| t.ln_mag)
            .fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return LogComplex {
                ln_mag: f64::NEG_INFINITY,
                phase: 0.0,
            };
        }
        let mut acc = C64::new(0.0, 0.0);
        for t in terms {
            acc += C64::from_polar((t.ln_mag - max).exp(), t.phase);
        }
        LogComplex {
            ln_mag: max + acc.norm().ln(),
            phase: acc.arg(),
        }
    }

    /// Value relative to a reference magnitude: `z / e^(ln_reference)`.
    pub fn to_c64_scaled(self, ln_reference: f64) -> C64 {
        C64::from_polar((self.ln_mag - ln_reference).exp(), self.phase)
    }
}

/// Absolute-scale exchange tensor in log representation. Usable for any
/// finite positive inputs, however extreme; the SI regime where
/// `|kappa| < 1e-300` goes through here.
pub struct LnExchangeTensor {
    pub entries: [[[[LogComplex; 2]; 2]; 2]; 2],
}

pub fn exchange_tensor_ln(v: &VMatrix, params: &PhysicalParams) -> Result<LnExchangeTensor> {
    // ln(Lambda t^2) assembled term by term; each factor is finite whenever
    // the inputs are finite and positive.
    let ln_pref = 6.0 * params.m.ln() + 2.0 * (params.n as f64).ln()
        - (4.0 * std::f64::consts::PI.powi(2)).ln()
        - 2.0 * params.mode_volume.ln()
        - 6.0 * params.hbar.ln()
        + 2.0 * params.duration.ln();
    let mut entries = [[[[LogComplex {
        ln_mag: f64::NEG_INFINITY,
        phase: 0.0,
    }; 2]; 2]; 2]; 2];
    let lv: Vec<Vec<LogComplex>> = (0..2)
        .map(|a| (0..2).map(|b| LogComplex::from_c64(v.entries[a][b])).collect())
        .collect();
    for i in 0..2 {
        for j in 0..2 {
            for m in 0..2 {
                for k in 0..2 {
                    entries[i][j][m][k] = lv[i][k].mul(lv[m][j]).scale_ln(ln_pref, 0.0);
                }
            }
        }
    }
    Ok(LnExchangeTensor { entries })
}

/// Coefficient matrix from the log-scale tensor, returned together with the
/// natural log of the common magnitude that was divided out.
pub struct LnAmplitudeMatrix {
    pub matrix: AmplitudeMatrix,
    /// True entries are `matrix.entries * exp(ln_scale)`.
    pub ln_scale: f64,
}

pub fn beta_matrix_ln(tensor: &LnExchangeTensor, mode: AssemblyMode) -> Result<LnAmplitudeMatrix> {
    let mut log_entries = [[LogComplex {
        ln_mag: f64::NEG_INFINITY,
        phase: 0.0,
    }; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let pieces: Vec<LogComplex> = (0..2)
                .flat_map(|m| (0..2).map(move |k| (m, k)))
                .map(|(m, k)| tensor.entries[i][j][m][k])
                .collect();
            log_entries[i][j] = match mode {
                AssemblyMode::Diagonal => tensor.entries[i][j][i][j],
                AssemblyMode::Full | AssemblyMode::FarfieldAnalytic => LogComplex::sum(&pieces),
                AssemblyMode::Dominant => pieces
                    .iter()
                    .copied()
                    .max_by(|a, b| a.ln_mag.total_cmp(&b.ln_mag))
                    .unwrap(),
                AssemblyMode::FirstqIdentical | AssemblyMode::FirstqDistinguishable => {
                    return Err(Error::Usage(
                        "first-quantized modes are assembled by the firstq module".into(),
                    ));
                }
            };
        }
    }
    let ln_scale = log_entries
        .iter()
        .flatten()
        .map(|t| t.ln_mag)
        .fold(f64::NEG_INFINITY, f64::max);
    if ln_scale == f64::NEG_INFINITY {
        return Err(Error::DegenerateState(
            "all log-scale coefficients vanish".into(),
        ));
    }
    let mut entries = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            entries[i][j] = log_entries[i][j].to_c64_scaled(ln_scale);
        }
    }
    Ok(LnAmplitudeMatrix {
        matrix: AmplitudeMatrix::new(entries, mode, Scale::Absolute)?,
        ln_scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::UnitSystem;
    use crate::testutil::{collinear_geometry, natural_params};
    use approx::assert_relative_eq;
    use nalgebra::Vector3;

    fn collinear_setup() -> (SetupGeometry, PhysicalParams) {
        (collinear_geometry(0.1), natural_params(2, 0.1, 1.0))
    }

    #[test]
    fn farfield_entries_follow_inverse_distance() {
        let (geometry, params) = collinear_setup();
        let v = farfield_vmatrix(&geometry, &params).unwrap();
        let unit = farfield_unit(&params);
        let d = geometry.branch_distances();
        for i in 0..2 {
            for j in 0..2 {
                let entry = v.entries[i][j];
                assert_eq!(entry.re, 0.0);
                assert_relative_eq!(entry.im, unit / d[i][j], max_relative = 1e-14);
                assert!(!v.near_field_flags[i][j]);
            }
        }
        // Doubling the distance halves the amplitude.
        assert_relative_eq!(
            v.entries[0][0].im,
            0.5 * v.entries[1][0].im,
            max_relative = 1e-14
        );
    }

    #[test]
    fn near_field_flag_raises_below_five_radii() {
        let geometry = SetupGeometry::new(
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(10.0, 0.0, 0.0),
            Vector3::new(0.4, 0.0, 0.0),
            Vector3::new(20.0, 0.0, 0.0),
            0.1,
        )
        .unwrap();
        let params = natural_params(2, 0.1, 1.0);
        let v = farfield_vmatrix(&geometry, &params).unwrap();
        assert!(v.near_field_flags[0][0]);
        assert!(!v.near_field_flags[0][1]);
    }

    #[test]
    fn quadrature_matches_farfield_at_ten_radii() {
        // The monopole form is exact here, so the comparison measures pure
        // quadrature error; at the default rule it is far below 1e-2.
        let params = natural_params(1, 1.0, 1.0);
        let geometry = SetupGeometry::new(
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(0.0, 50.0, 0.0),
            Vector3::new(10.0, 0.0, 0.0),
            Vector3::new(0.0, 80.0, 0.0),
            1.0,
        )
        .unwrap();
        let spec = QuadratureSpec::default();
        let quad = compute_vij(
            &geometry,
            &params,
            Branch::L,
            Branch::L,
            VFieldMode::SelfSourced,
            &spec,
        )
        .unwrap();
        let (far, _) = farfield_vij(&geometry, &params, Branch::L, Branch::L).unwrap();
        assert!(quad.im > 0.0);
        assert_eq!(quad.re, 0.0);
        assert_relative_eq!(quad.im, 0.631_654_681_669_718_9, max_relative = 1e-7);
        assert!((quad.im / far.im - 1.0).abs() < 1e-2);
    }

    #[test]
    fn kappa_units_tensor_reproduces_inverse_distance_products() {
        let (geometry, params) = collinear_setup();
        let v = farfield_vmatrix(&geometry, &params).unwrap();
        let tensor = exchange_tensor(&v, &params, Scale::KappaUnits).unwrap();
        let d = geometry.branch_distances();
        for i in BRANCHES {
            for j in BRANCHES {
                for m in BRANCHES {
                    for k in BRANCHES {
                        let expected = 1.0 / (d[i.index()][k.index()] * d[m.index()][j.index()]);
                        let got = tensor.get(i, j, m, k);
                        assert_relative_eq!(got.re, expected, max_relative = 1e-12);
                        assert!(got.im.abs() < 1e-15 * expected);
                    }
                }
            }
        }
    }

    #[test]
    fn kappa_units_cancel_the_absolute_prefactor() {
        // Absolute tensor divided by kappa must equal the kappa-units tensor.
        let (geometry, params) = collinear_setup();
        let v = farfield_vmatrix(&geometry, &params).unwrap();
        let abs = exchange_tensor(&v, &params, Scale::Absolute).unwrap();
        let reduced = exchange_tensor(&v, &params, Scale::KappaUnits).unwrap();
        let kappa = params.kappa();
        for i in BRANCHES {
            for j in BRANCHES {
                for m in BRANCHES {
                    for k in BRANCHES {
                        let ratio = abs.get(i, j, m, k) / kappa;
                        assert_relative_eq!(
                            ratio.re,
                            reduced.get(i, j, m, k).re,
                            max_relative = 1e-12
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn diagonal_assembly_collinear_reference() {
        let (geometry, params) = collinear_setup();
        let v = farfield_vmatrix(&geometry, &params).unwrap();
        let tensor = exchange_tensor(&v, &params, Scale::KappaUnits).unwrap();
        let beta = beta_matrix(&tensor, AssemblyMode::Diagonal).unwrap();
        let expected = [[0.25, 1.0 / 9.0], [1.0, 0.25]];
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(beta.entries[i][j].re, expected[i][j], max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn dominant_assembly_collinear_reference() {
        let (geometry, params) = collinear_setup();
        let v = farfield_vmatrix(&geometry, &params).unwrap();
        let tensor = exchange_tensor(&v, &params, Scale::KappaUnits).unwrap();
        let beta = beta_matrix(&tensor, AssemblyMode::Dominant).unwrap();
        let expected = [[0.5, 0.25], [1.0, 0.5]];
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(beta.entries[i][j].re, expected[i][j], max_relative = 1e-12);
                assert!(!beta.dominant_ties[i][j]);
            }
        }
        // Dominant equals the outer product of (1/d_LL, 1/d_RL) and
        // (1/d_RL, 1/d_RR) here, hence exactly factorized.
        let det = beta.entries[0][0] * beta.entries[1][1] - beta.entries[0][1] * beta.entries[1][0];
        assert!(det.norm() < 1e-15);
    }

    #[test]
    fn full_assembly_collinear_is_rank_one() {
        let (geometry, params) = collinear_setup();
        let v = farfield_vmatrix(&geometry, &params).unwrap();
        let tensor = exchange_tensor(&v, &params, Scale::KappaUnits).unwrap();
        let beta = beta_matrix(&tensor, AssemblyMode::Full).unwrap();
        // Row sums of w are (5/6, 3/2); column sums are (3/2, 5/6).
        assert_relative_eq!(beta.entries[0][0].re, 1.25, max_relative = 1e-12);
        assert_relative_eq!(beta.entries[0][1].re, 25.0 / 36.0, max_relative = 1e-12);
        assert_relative_eq!(beta.entries[1][0].re, 2.25, max_relative = 1e-12);
        assert_relative_eq!(beta.entries[1][1].re, 1.25, max_relative = 1e-12);
        let det = beta.entries[0][0] * beta.entries[1][1] - beta.entries[0][1] * beta.entries[1][0];
        assert!(det.norm() <= 1e-12 * beta.frobenius().powi(2));
    }

    #[test]
    fn dominant_tie_is_flagged() {
        // 1L equidistant from 2L and 2R: the two leading pieces of the LL
        // coefficient have identical magnitude.
        let geometry = SetupGeometry::new(
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(3.0, 1.0, 0.0),
            Vector3::new(3.0, -1.0, 0.0),
            0.1,
        )
        .unwrap();
        let params = natural_params(2, 0.1, 1.0);
        let v = farfield_vmatrix(&geometry, &params).unwrap();
        let tensor = exchange_tensor(&v, &params, Scale::KappaUnits).unwrap();
        let beta = beta_matrix(&tensor, AssemblyMode::Dominant).unwrap();
        assert!(beta.dominant_ties[0][0]);
    }

    #[test]
    fn tensor_scale_invariance_under_uniform_dilation() {
        // Scaling every length by lambda (R included) leaves the absolute
        // far-field tensor unchanged: kappa grows as lambda^2 while the
        // distance product shrinks as lambda^-2.
        let lambda = 2.0;
        let base_geom = collinear_geometry(0.1);
        let base_params = natural_params(2, 0.1, 1.0);
        let scaled_geom = SetupGeometry::new(
            lambda * base_geom.centers[0][0],
            lambda * base_geom.centers[0][1],
            lambda * base_geom.centers[1][0],
            lambda * base_geom.centers[1][1],
            lambda * 0.1,
        )
        .unwrap();
        let scaled_params = PhysicalParams::derive(
            1.0,
            1.0,
            1.0,
            1.0,
            2,
            lambda * 0.1,
            1.0,
            UnitSystem::Natural,
        )
        .unwrap();
        let t0 = exchange_tensor(
            &farfield_vmatrix(&base_geom, &base_params).unwrap(),
            &base_params,
            Scale::Absolute,
        )
        .unwrap();
        let t1 = exchange_tensor(
            &farfield_vmatrix(&scaled_geom, &scaled_params).unwrap(),
            &scaled_params,
            Scale::Absolute,
        )
        .unwrap();
        for i in BRANCHES {
            for j in BRANCHES {
                assert_relative_eq!(
                    t0.get(i, j, i, j).re,
                    t1.get(i, j, i, j).re,
                    max_relative = 1e-12
                );
            }
        }
        // V itself scales as lambda^3.
        let v0 = farfield_vmatrix(&base_geom, &base_params).unwrap();
        let v1 = farfield_vmatrix(&scaled_geom, &scaled_params).unwrap();
        assert_relative_eq!(
            v1.entries[0][0].im,
            lambda.powi(3) * v0.entries[0][0].im,
            max_relative = 1e-12
        );
    }

    #[test]
    fn log_pipeline_matches_direct_values_in_range() {
        let (geometry, params) = collinear_setup();
        let v = farfield_vmatrix(&geometry, &params).unwrap();
        let direct = exchange_tensor(&v, &params, Scale::Absolute).unwrap();
        let ln_tensor = exchange_tensor_ln(&v, &params).unwrap();
        for mode in [AssemblyMode::Diagonal, AssemblyMode::Full, AssemblyMode::Dominant] {
            let direct_beta = beta_matrix(&direct, mode).unwrap();
            let ln_beta = beta_matrix_ln(&ln_tensor, mode).unwrap();
            let scale = ln_beta.ln_scale.exp();
            for i in 0..2 {
                for j in 0..2 {
                    let reconstructed = ln_beta.matrix.entries[i][j] * scale;
                    assert_relative_eq!(
                        reconstructed.re,
                        direct_beta.entries[i][j].re,
                        max_relative = 1e-10
                    );
                    assert!(
                        (reconstructed.im - direct_beta.entries[i][j].im).abs()
                            <= 1e-10 * direct_beta.entries[i][j].norm()
                    );
                }
            }
        }
    }

    #[test]
    fn log_pipeline_survives_absolute_underflow() {
        // Magnitudes chosen so the absolute coefficient scale sits below the
        // f64 range (|kappa| ~ 1e-362) while every V entry stays normal.
        // The absolute pipeline then underflows to exact zeros with no error
        // signal at all; kappa units and the log pipeline must both keep the
        // correct coefficient pattern, and the log pipeline must also recover
        // the out-of-range overall magnitude as a finite logarithm.
        let params = PhysicalParams::derive(
            1e-11,
            1e-34,
            2.998e8,
            1e-48,
            1,
            1e-20,
            1.0,
            UnitSystem::Si,
        )
        .unwrap();
        assert_eq!(params.kappa().norm(), 0.0, "expected kappa to underflow");
        assert!(params.kappa_ln_mag().is_finite());
        let geometry = SetupGeometry::new(
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1e-18, 0.0, 0.0),
            Vector3::new(2e-18, 0.0, 0.0),
            Vector3::new(3e-18, 0.0, 0.0),
            1e-20,
        )
        .unwrap();
        let v = farfield_vmatrix(&geometry, &params).unwrap();

        // Silent failure mode of the absolute scale: all sixteen products
        // round to zero, so the assembled matrix carries no information.
        let absolute = exchange_tensor(&v, &params, Scale::Absolute).unwrap();
        for i in BRANCHES {
            for j in BRANCHES {
                for m in BRANCHES {
                    for k in BRANCHES {
                        assert_eq!(absolute.get(i, j, m, k).norm(), 0.0);
                    }
                }
            }
        }

        // Kappa units are immune: entries depend only on the geometry.
        let scaled = exchange_tensor(&v, &params, Scale::KappaUnits).unwrap();
        let beta = beta_matrix(&scaled, AssemblyMode::Diagonal).unwrap();
        let d = 1e-18;
        assert_relative_eq!(
            beta.entries[1][0].re,
            1.0 / (d * d),
            max_relative = 1e-12
        );

        let ln_tensor = exchange_tensor_ln(&v, &params).unwrap();
        let ln_beta = beta_matrix_ln(&ln_tensor, AssemblyMode::Diagonal).unwrap();
        // Normalized diagonal coefficients keep the 1/d^2 pattern of the
        // collinear layout: [[1/4, 1/9], [1, 1/4]] over the largest entry.
        let m = &ln_beta.matrix.entries;
        assert_relative_eq!(m[1][0].norm(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(m[0][0].norm(), 0.25, max_relative = 1e-10);
        assert_relative_eq!(m[0][1].norm(), 1.0 / 9.0, max_relative = 1e-10);
        assert_relative_eq!(m[1][1].norm(), 0.25, max_relative = 1e-10);
        // The divided-out magnitude is ln|beta_RL| = ln|kappa| - 2 ln d_RL,
        // a number whose exponential is far below f64 range.
        let expected_ln = params.kappa_ln_mag() - 2.0 * d.ln();
        assert_relative_eq!(ln_beta.ln_scale, expected_ln, max_relative = 1e-12);
        assert!(ln_beta.ln_scale < f64::MIN_POSITIVE.ln());
    }

    #[test]
    fn radius_mismatch_is_a_usage_error() {
        let geometry = collinear_geometry(0.1);
        let params = natural_params(2, 0.2, 1.0);
        assert!(matches!(
            farfield_vmatrix(&geometry, &params),
            Err(Error::Usage(_))
        ));
    }
}
