//! Schmidt analysis of the 2x2 branch coefficient matrices and the
//! factorized/entangled verdicts.
//!
//! For a normalized coefficient matrix `c`, the two Schmidt coefficients are
//! the singular values and the concurrence is `2 |det c|`. The state
//! factorizes exactly when `det c = 0`, so the verdict is a tolerance test on
//! the concurrence.

use crate::amplitudes::{
    beta_matrix, beta_matrix_ln, compute_vmatrix, exchange_tensor, exchange_tensor_ln,
    farfield_vmatrix, VFieldMode,
};
use crate::error::{Error, Result};
use crate::model::{AmplitudeMatrix, AssemblyMode, PhysicalParams, Scale, SetupGeometry};
use crate::quadrature::QuadratureSpec;
use crate::C64;

/// Default factorization tolerance on the concurrence.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

/// Frobenius-normalized two-qubit pure state over the branch basis.
#[derive(Clone, Debug)]
pub struct PureState2x2 {
    pub c: [[C64; 2]; 2],
}

/// Normalizes a coefficient matrix into a state.
///
/// A zero matrix carries no state and is rejected; this is what every
/// assembly produces at `t = 0`.
pub fn state_from_beta(beta: &AmplitudeMatrix) -> Result<PureState2x2> {
    for (i, row) in beta.entries.iter().enumerate() {
        for (j, z) in row.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite {
                    location: format!("coefficient ({i}, {j})"),
                    detail: format!("{z}"),
                });
            }
        }
    }
    // Two-stage normalization: dividing by the largest magnitude first keeps
    // the Frobenius sum in range even when entries sit near the edges of f64.
    let max_mag = beta
        .entries
        .iter()
        .flatten()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if max_mag == 0.0 {
        return Err(Error::DegenerateState(
            "all four coefficients vanish; no state to analyze".into(),
        ));
    }
    let mut c = beta.entries;
    for row in &mut c {
        for z in row.iter_mut() {
            *z /= max_mag;
        }
    }
    let frob = c
        .iter()
        .flatten()
        .map(|z| z.norm_sqr())
        .sum::<f64>()
        .sqrt();
    for row in &mut c {
        for z in row.iter_mut() {
            *z /= frob;
        }
    }
    Ok(PureState2x2 { c })
}

/// Schmidt data and verdict for one assembled state.
#[derive(Clone, Debug)]
pub struct EntanglementReport {
    pub mode: AssemblyMode,
    /// Determinant of the normalized coefficient matrix.
    pub det: C64,
    /// Singular values, descending. Their squares sum to one.
    pub schmidt: [f64; 2],
    /// `2 |det|`, in `[0, 1]`; zero exactly for product states.
    pub concurrence: f64,
    pub tolerance: f64,
    pub factorized: bool,
}

/// Computes Schmidt coefficients and concurrence in closed form.
///
/// For a 2x2 matrix the singular values follow from the Frobenius norm `t`
/// and `|det|`: `s1^2 = (t^2 + sqrt(t^4 - 4 |det|^2)) / 2` and
/// `s2 = |det| / s1`, which stays accurate when `s2` is near zero.
pub fn schmidt_analysis(
    state: &PureState2x2,
    tolerance: f64,
    mode: AssemblyMode,
) -> EntanglementReport {
    let c = &state.c;
    let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
    let frob2: f64 = c.iter().flatten().map(|z| z.norm_sqr()).sum();
    let det_mag = det.norm();
    let disc = (frob2 * frob2 - 4.0 * det_mag * det_mag).max(0.0);
    let s1 = ((frob2 + disc.sqrt()) / 2.0).sqrt();
    let s2 = if s1 > 0.0 { det_mag / s1 } else { 0.0 };
    let concurrence = (2.0 * det_mag).min(1.0);
    EntanglementReport {
        mode,
        det,
        schmidt: [s1, s2],
        concurrence,
        tolerance,
        factorized: concurrence <= tolerance,
    }
}

/// Result for one assembly mode inside a suite run.
#[derive(Clone, Debug)]
pub enum Outcome {
    Evaluated {
        beta: AmplitudeMatrix,
        /// Present on the absolute-scale log pipeline: true coefficients are
        /// `beta.entries * exp(ln_scale)`.
        ln_scale: Option<f64>,
        report: EntanglementReport,
    },
    Degenerate { reason: String },
}

#[derive(Clone, Debug)]
pub struct ModeResult {
    pub mode: AssemblyMode,
    pub outcome: Outcome,
}

/// Cross-mode consistency summary: the full and dominant assemblies must
/// factorize; the diagonal assembly is generically entangled.
#[derive(Clone, Copy, Debug)]
pub struct ConclusionCheck {
    pub full_factorized: bool,
    pub dominant_factorized: bool,
    pub diagonal_entangled: bool,
}

impl ConclusionCheck {
    pub fn consistent(&self) -> bool {
        self.full_factorized && self.dominant_factorized
    }
}

#[derive(Clone, Debug)]
pub struct VerdictSuite {
    pub modes: Vec<ModeResult>,
    pub conclusion: Option<ConclusionCheck>,
}

impl VerdictSuite {
    pub fn find(&self, mode: AssemblyMode) -> Option<&ModeResult> {
        self.modes.iter().find(|m| m.mode == mode)
    }
}

/// Runs the three tensor assemblies on integrated amplitudes plus the
/// closed-form far-field assembly, and reports a verdict per mode.
///
/// `t = 0` zeroes every fourth-order amplitude, so all modes come back
/// degenerate rather than as a spurious verdict.
pub fn verdict_suite(
    geometry: &SetupGeometry,
    params: &PhysicalParams,
    field: VFieldMode,
    spec: &QuadratureSpec,
    scale: Scale,
    tolerance: f64,
) -> Result<VerdictSuite> {
    if !(tolerance.is_finite() && tolerance >= 0.0) {
        return Err(Error::Validation {
            field: "tolerance",
            message: format!("must be finite and non-negative, got {tolerance}"),
        });
    }
    let assembly_modes = [
        AssemblyMode::Diagonal,
        AssemblyMode::Full,
        AssemblyMode::Dominant,
        AssemblyMode::FarfieldAnalytic,
    ];
    if params.duration == 0.0 {
        return Ok(VerdictSuite {
            modes: assembly_modes
                .iter()
                .map(|&mode| ModeResult {
                    mode,
                    outcome: Outcome::Degenerate {
                        reason: "t = 0: every fourth-order coefficient vanishes".into(),
                    },
                })
                .collect(),
            conclusion: None,
        });
    }
    let v_integrated = compute_vmatrix(geometry, params, field, spec)?;
    let v_farfield = farfield_vmatrix(geometry, params)?;
    let mut modes = Vec::with_capacity(assembly_modes.len());
    for &mode in &assembly_modes {
        let v = if mode == AssemblyMode::FarfieldAnalytic {
            &v_farfield
        } else {
            &v_integrated
        };
        let (beta, ln_scale) = match scale {
            Scale::KappaUnits => (beta_matrix(&exchange_tensor(v, params, scale)?, mode)?, None),
            Scale::Absolute => {
                // The log pipeline tolerates physical magnitudes far outside
                // f64 range; the verdict only needs the normalized matrix.
                let ln = beta_matrix_ln(&exchange_tensor_ln(v, params)?, mode)?;
                (ln.matrix, Some(ln.ln_scale))
            }
        };
        let outcome = match state_from_beta(&beta) {
            Ok(state) => Outcome::Evaluated {
                report: schmidt_analysis(&state, tolerance, mode),
                beta,
                ln_scale,
            },
            Err(Error::DegenerateState(reason)) => Outcome::Degenerate { reason },
            Err(other) => return Err(other),
        };
        modes.push(ModeResult { mode, outcome });
    }
    let verdict_of = |mode: AssemblyMode| -> Option<bool> {
        modes.iter().find(|m| m.mode == mode).and_then(|m| match &m.outcome {
            Outcome::Evaluated { report, .. } => Some(report.factorized),
            Outcome::Degenerate { .. } => None,
        })
    };
    let conclusion = match (
        verdict_of(AssemblyMode::Full),
        verdict_of(AssemblyMode::Dominant),
        verdict_of(AssemblyMode::Diagonal),
    ) {
        (Some(full), Some(dominant), Some(diagonal)) => Some(ConclusionCheck {
            full_factorized: full,
            dominant_factorized: dominant,
            diagonal_entangled: !diagonal,
        }),
        _ => None,
    };
    Ok(VerdictSuite { modes, conclusion })
}
