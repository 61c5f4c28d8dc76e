//! Strict TOML run configuration: unknown keys are fatal, physics fields are
//! explicit, and everything else defaults to the documented values. The
//! fully defaulted structure is echoed back into every JSON report.

use gravexch::model::{
    AssemblyMode, PhysicalParams, Scale, SetupGeometry, UnitSystem,
};
use gravexch::quadrature::{Method, QuadratureSpec};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: ParamsConfig,
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    /// Assembly modes the verdict and sweep subcommands report.
    #[serde(default = "default_modes")]
    pub modes: Vec<String>,
    #[serde(default)]
    pub fock: FockConfig,
    #[serde(default)]
    pub firstq: FirstqConfig,
    #[serde(default)]
    pub integral: IntegralConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub g: f64,
    pub hbar: f64,
    pub c: f64,
    pub m: f64,
    pub n: u64,
    pub radius: f64,
    pub duration: f64,
    #[serde(default = "default_unit_system")]
    pub unit_system: String,
    /// Amplitude scale for reports: "kappa-units" keeps entries order one,
    /// "absolute" reports raw values through the log pipeline.
    #[serde(default = "default_scale")]
    pub scale: String,
    /// Concurrence at or below this counts as factorized.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub x_1l: [f64; 3],
    pub x_1r: [f64; 3],
    pub x_2l: [f64; 3],
    pub x_2r: [f64; 3],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default = "default_nodes")]
    pub radial_nodes: usize,
    #[serde(default = "default_nodes")]
    pub angular_nodes: usize,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FockConfig {
    #[serde(default = "default_fock_d")]
    pub d: usize,
    #[serde(default = "default_momenta")]
    pub momenta: Vec<f64>,
    #[serde(default = "default_fock_n")]
    pub n: usize,
    #[serde(default = "default_fock_n_max")]
    pub n_max: usize,
    #[serde(default = "default_fock_duration")]
    pub duration: f64,
    #[serde(default)]
    pub pair_coupling: bool,
    /// Multiplies every kernel in the pair-production demo so the truncated
    /// space keeps headroom.
    #[serde(default = "default_pair_scale")]
    pub pair_scale: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FirstqConfig {
    #[serde(default = "default_max_order")]
    pub max_order: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegralConfig {
    /// Center separations for the integral sweep, in units of the radius.
    #[serde(default = "default_ratios")]
    pub ratios: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Multipliers applied to every center coordinate, one verdict row set
    /// per value.
    #[serde(default = "default_sweep_scales")]
    pub scales: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub directory: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

fn default_modes() -> Vec<String> {
    vec![
        "diagonal".into(),
        "full".into(),
        "dominant".into(),
        "farfield-analytic".into(),
    ]
}
fn default_unit_system() -> String {
    "natural".into()
}
fn default_scale() -> String {
    "kappa-units".into()
}
fn default_tolerance() -> f64 {
    1e-10
}
fn default_method() -> String {
    "gauss-product".into()
}
fn default_nodes() -> usize {
    12
}
fn default_mc_samples() -> u64 {
    1_000_000
}
fn default_seed() -> u64 {
    1
}
fn default_fock_d() -> usize {
    3
}
fn default_momenta() -> Vec<f64> {
    vec![0.0, 0.7, 1.3]
}
fn default_fock_n() -> usize {
    2
}
fn default_fock_n_max() -> usize {
    4
}
fn default_fock_duration() -> f64 {
    1.0
}
fn default_pair_scale() -> f64 {
    1e-3
}
fn default_max_order() -> usize {
    4
}
fn default_ratios() -> Vec<f64> {
    vec![5.0, 10.0, 20.0, 50.0]
}
fn default_sweep_scales() -> Vec<f64> {
    vec![1.0, 1.25, 1.5, 2.0]
}
fn default_out_dir() -> String {
    "out".into()
}
fn default_formats() -> Vec<String> {
    vec!["csv".into(), "json".into()]
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty quadrature block must default")
    }
}
impl Default for FockConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty fock block must default")
    }
}
impl Default for FirstqConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty firstq block must default")
    }
}
impl Default for IntegralConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty integral block must default")
    }
}
impl Default for SweepConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty sweep block must default")
    }
}
impl Default for OutputConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty output block must default")
    }
}

/// Validated domain inputs plus the defaulted config echo.
#[derive(Debug)]
pub struct Resolved {
    pub params: PhysicalParams,
    pub geometry: SetupGeometry,
    pub spec: QuadratureSpec,
    pub modes: Vec<AssemblyMode>,
    pub scale: Scale,
    pub tolerance: f64,
    pub echo: RunConfig,
}

fn semantic(field: &str, message: String) -> String {
    format!("config error at `{field}`: {message}")
}

pub fn parse_config(text: &str) -> Result<Resolved, String> {
    let config: RunConfig =
        toml::from_str(text).map_err(|e| format!("config syntax error: {e}"))?;
    resolve(config)
}

fn resolve(config: RunConfig) -> Result<Resolved, String> {
    let units = match config.params.unit_system.as_str() {
        "natural" => UnitSystem::Natural,
        "si" | "SI" => UnitSystem::Si,
        other => {
            return Err(semantic(
                "params.unit_system",
                format!("expected \"natural\" or \"si\", got \"{other}\""),
            ))
        }
    };
    let scale = match config.params.scale.as_str() {
        "kappa-units" => Scale::KappaUnits,
        "absolute" => Scale::Absolute,
        other => {
            return Err(semantic(
                "params.scale",
                format!("expected \"kappa-units\" or \"absolute\", got \"{other}\""),
            ))
        }
    };
    if !(config.params.tolerance.is_finite() && config.params.tolerance >= 0.0) {
        return Err(semantic(
            "params.tolerance",
            format!("must be finite and non-negative, got {}", config.params.tolerance),
        ));
    }
    let params = PhysicalParams::derive(
        config.params.g,
        config.params.hbar,
        config.params.c,
        config.params.m,
        config.params.n,
        config.params.radius,
        config.params.duration,
        units,
    )
    .map_err(|e| semantic("params", e.to_string()))?;

    let to_vec = |v: [f64; 3]| Vector3::new(v[0], v[1], v[2]);
    let geometry = SetupGeometry::new(
        to_vec(config.geometry.x_1l),
        to_vec(config.geometry.x_1r),
        to_vec(config.geometry.x_2l),
        to_vec(config.geometry.x_2r),
        config.params.radius,
    )
    .map_err(|e| semantic("geometry", e.to_string()))?;

    let method = match config.quadrature.method.as_str() {
        "gauss-product" => Method::GaussProduct,
        "monte-carlo" => Method::MonteCarlo,
        other => {
            return Err(semantic(
                "quadrature.method",
                format!("expected \"gauss-product\" or \"monte-carlo\", got \"{other}\""),
            ))
        }
    };
    let spec = QuadratureSpec {
        method,
        radial_nodes: config.quadrature.radial_nodes,
        angular_nodes: config.quadrature.angular_nodes,
        mc_samples: config.quadrature.mc_samples,
        rng_seed: config.quadrature.seed,
    };
    spec.validate().map_err(|e| semantic("quadrature", e.to_string()))?;

    let mut modes = Vec::new();
    for label in &config.modes {
        let mode = match label.as_str() {
            "diagonal" => AssemblyMode::Diagonal,
            "full" => AssemblyMode::Full,
            "dominant" => AssemblyMode::Dominant,
            "farfield-analytic" => AssemblyMode::FarfieldAnalytic,
            other => {
                return Err(semantic(
                    "modes",
                    format!(
                        "expected \"diagonal\", \"full\", \"dominant\", or \
                         \"farfield-analytic\", got \"{other}\""
                    ),
                ))
            }
        };
        if !modes.contains(&mode) {
            modes.push(mode);
        }
    }
    if modes.is_empty() {
        return Err(semantic("modes", "need at least one assembly mode".into()));
    }

    if config.fock.momenta.len() != config.fock.d {
        return Err(semantic(
            "fock.momenta",
            format!(
                "length {} disagrees with fock.d = {}",
                config.fock.momenta.len(),
                config.fock.d
            ),
        ));
    }
    if config.fock.n_max < config.fock.n {
        return Err(semantic(
            "fock.n_max",
            format!(
                "truncation {} cannot hold the {}-particle initial state",
                config.fock.n_max, config.fock.n
            ),
        ));
    }
    if !(config.fock.pair_scale.is_finite() && config.fock.pair_scale > 0.0) {
        return Err(semantic(
            "fock.pair_scale",
            format!("must be finite and positive, got {}", config.fock.pair_scale),
        ));
    }
    if config.firstq.max_order > 4 {
        return Err(semantic(
            "firstq.max_order",
            format!("propagator orders stop at 2 per particle, so 4 is the cap, got {}",
                config.firstq.max_order),
        ));
    }
    if config.integral.ratios.is_empty()
        || config.integral.ratios.iter().any(|r| !(r.is_finite() && *r > 2.0))
    {
        return Err(semantic(
            "integral.ratios",
            "need a non-empty list of finite separations above 2 radii".into(),
        ));
    }
    if config.sweep.scales.is_empty()
        || config.sweep.scales.iter().any(|s| !(s.is_finite() && *s > 0.0))
    {
        return Err(semantic(
            "sweep.scales",
            "need a non-empty list of finite positive multipliers".into(),
        ));
    }
    for format in &config.output.formats {
        if format != "csv" && format != "json" {
            return Err(semantic(
                "output.formats",
                format!("expected \"csv\" or \"json\", got \"{format}\""),
            ));
        }
    }

    Ok(Resolved {
        params,
        geometry,
        spec,
        modes,
        scale,
        tolerance: config.params.tolerance,
        echo: config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [params]
        g = 1.0
        hbar = 1.0
        c = 1.0
        m = 1.0
        n = 1
        radius = 0.1
        duration = 1.0

        [geometry]
        x_1l = [0.0, 0.0, 0.0]
        x_1r = [1.0, 0.0, 0.0]
        x_2l = [2.0, 0.0, 0.0]
        x_2r = [3.0, 0.0, 0.0]
    "#;

    #[test]
    fn minimal_config_fills_documented_defaults() {
        let resolved = parse_config(MINIMAL).unwrap();
        assert_eq!(resolved.spec.method, Method::GaussProduct);
        assert_eq!(resolved.spec.radial_nodes, 12);
        assert_eq!(resolved.spec.angular_nodes, 12);
        assert_eq!(resolved.modes.len(), 4);
        assert_eq!(resolved.scale, Scale::KappaUnits);
        assert_eq!(resolved.echo.output.directory, "out");
        assert_eq!(resolved.echo.output.formats, vec!["csv", "json"]);
    }

    #[test]
    fn unknown_keys_are_fatal() {
        let text = format!("{MINIMAL}\n[quadrature]\nspeling_mistake = 3\n");
        let error = parse_config(&text).unwrap_err();
        assert!(error.contains("speling_mistake"), "{error}");
    }

    #[test]
    fn overlapping_spheres_name_the_pair() {
        let text = MINIMAL.replace("x_1r = [1.0, 0.0, 0.0]", "x_1r = [0.05, 0.0, 0.0]");
        let error = parse_config(&text).unwrap_err();
        assert!(error.contains("geometry"), "{error}");
        assert!(error.contains("1L") && error.contains("1R"), "{error}");
    }

    #[test]
    fn semantic_errors_name_field_and_constraint() {
        let text = MINIMAL.replace("duration = 1.0", "duration = -2.0");
        let error = parse_config(&text).unwrap_err();
        assert!(error.contains("params") && error.contains("-2"), "{error}");

        let text = format!("{MINIMAL}\nmodes = [\"diagnoal\"]\n");
        let error = parse_config(&text).unwrap_err();
        assert!(error.contains("modes") && error.contains("diagnoal"), "{error}");
    }
}
