//! Configuration files, sweeps and table output for the `cpsf` binary.
//!
//! A run reads one TOML or JSON configuration (or a bundled preset), applies
//! command-line overrides and writes a CSV or JSON table. Flags always win
//! over file values.
//!
//! ```toml
//! version = 1
//! kappa_probe = 0.01
//!
//! [sweep]
//! omega_min = -1e-3
//! omega_max = 1e-3
//! n_points = 2001
//! outputs = ["cpsf", "kappa_eff"]
//! format = "csv"
//!
//! [bath]
//! n_c = 0.0
//!
//! [[curve]]
//! label = "xi_m=0"
//! c0 = 2.0
//! xi_m = 0.0
//! kappa_over_gamma_m = 1e4
//! ```
//!
//! A curve is either dimensionless (`c0`, `c1`, `xi_m`, `xi_d`,
//! `kappa_over_gamma_m`, `gamma_ratio`) or dimensional (`kappa`, `gamma_m`,
//! `gamma_d`, `g`, `G`, `lambda_m`, `lambda_d`, `phi_m`, `phi_d`), never both.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::CpsfError;
use crate::noise::{self, BathOccupations};
use crate::opa::{self, OpaParams};
use crate::params::{DimensionlessParams, SystemParams};
use crate::response::{self, frequency_grid};
use crate::stability::{self, NegativityCheck};
use crate::Complex64;

pub const CONFIG_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

/// Bundled figure presets, by name.
pub const PRESETS: &[(&str, &str)] = &[
    ("fig2a", include_str!("../presets/fig2a.toml")),
    ("fig2b", include_str!("../presets/fig2b.toml")),
    ("fig3a", include_str!("../presets/fig3a.toml")),
    ("fig3b", include_str!("../presets/fig3b.toml")),
    ("fig4", include_str!("../presets/fig4.toml")),
    ("fig5", include_str!("../presets/fig5.toml")),
];

/// Column groups accepted in `sweep.outputs`, with the columns each adds.
pub const OUTPUT_GROUPS: &[(&str, &[&str])] = &[
    ("cpsf", &["cpsf"]),
    ("kappa_eff", &["kappa_eff"]),
    (
        "greens",
        &["g_ret_aad_re", "g_ret_aad_im", "g_ret_aa_re", "g_ret_aa_im"],
    ),
    (
        "chi",
        &[
            "chi_aa_re",
            "chi_aa_im",
            "chi_aad_re",
            "chi_aad_im",
            "chi_ab_re",
            "chi_ab_im",
            "chi_abd_re",
            "chi_abd_im",
            "chi_ad_re",
            "chi_ad_im",
            "chi_add_re",
            "chi_add_im",
        ],
    ),
    (
        "self_energy",
        &[
            "sigma_a_re",
            "sigma_a_im",
            "lambda_tilde_re",
            "lambda_tilde_im",
            "sigma_tilde_re",
            "sigma_tilde_im",
            "m_re",
            "m_im",
        ],
    ),
    ("t_eff", &["keldysh_im", "ratio", "t_eff"]),
    ("reflectivity", &["reflectivity"]),
    ("opa", &["opa_mapped_cpsf"]),
];

const DEFAULT_OUTPUTS: &[&str] = &["cpsf", "kappa_eff"];

const NOISE_COLUMNS: &[&str] = &[
    "cpsf",
    "keldysh_im",
    "ratio",
    "t_eff",
    "sigma_z",
    "reflectivity",
    "s_aa_re",
    "s_aa_im",
    "s_aad_re",
    "s_aad_im",
    "s_ada_re",
    "s_ada_im",
    "s_adad_re",
    "s_adad_im",
];

const OPA_COLUMNS: &[&str] = &["a", "f", "window_lo", "window_hi"];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
            CliError::Runtime(_) => EXIT_FAILURE,
        }
    }
}

impl From<CpsfError> for CliError {
    fn from(e: CpsfError) -> Self {
        match e {
            CpsfError::InvalidParameter { .. }
            | CpsfError::InvalidArgument(_)
            | CpsfError::DetunedMechanics { .. } => CliError::Config(e.to_string()),
            CpsfError::Unstable { .. } => CliError::Infeasible(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "cpsf", version, about = "Cavity photon spectral function of a parametrically driven optomechanical system")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub args: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Frequency sweep of the CPSF and related columns.
    Spectrum,
    /// Paramps reaching a target on-resonance negativity.
    Optimize,
    /// Detuned parametric amplifier spectra.
    Opa,
    /// Stability bounds and the negativity test per curve.
    Stability,
    /// Keldysh function, effective temperature and reflectivity sweep.
    Noise,
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct CommonArgs {
    /// TOML or JSON configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Bundled configuration (fig2a, fig2b, fig3a, fig3b, fig4, fig5).
    #[arg(long, global = true, conflicts_with = "config")]
    pub preset: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[arg(long, global = true)]
    pub format: Option<Format>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub omega_min: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub omega_max: Option<f64>,
    #[arg(long, global = true)]
    pub points: Option<usize>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub target_m: Option<f64>,
    #[arg(long, global = true)]
    pub c0: Option<f64>,
    #[arg(long, global = true)]
    pub c1: Option<f64>,
    #[arg(long, global = true)]
    pub xi_m: Option<f64>,
    #[arg(long, global = true)]
    pub xi_d: Option<f64>,
    #[arg(long, global = true)]
    pub kappa_over_gamma_m: Option<f64>,
    #[arg(long, global = true)]
    pub gamma_ratio: Option<f64>,
    #[arg(long, global = true)]
    pub n_c: Option<f64>,
    #[arg(long, global = true)]
    pub n_m: Option<f64>,
    #[arg(long, global = true)]
    pub n_d: Option<f64>,
    #[arg(long, global = true)]
    pub kappa_probe: Option<f64>,
}

impl CommonArgs {
    fn has_dimensionless_override(&self) -> bool {
        [
            self.c0,
            self.c1,
            self.xi_m,
            self.xi_d,
            self.kappa_over_gamma_m,
            self.gamma_ratio,
        ]
        .iter()
        .any(Option::is_some)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub omega_min: Option<f64>,
    pub omega_max: Option<f64>,
    pub n_points: Option<usize>,
    pub outputs: Option<Vec<String>>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub label: Option<String>,
    pub c0: Option<f64>,
    pub c1: Option<f64>,
    pub xi_m: Option<f64>,
    pub xi_d: Option<f64>,
    pub kappa_over_gamma_m: Option<f64>,
    pub gamma_ratio: Option<f64>,
    pub kappa: Option<f64>,
    pub gamma_m: Option<f64>,
    pub gamma_d: Option<f64>,
    pub g: Option<f64>,
    #[serde(rename = "G")]
    pub big_g: Option<f64>,
    pub lambda_m: Option<f64>,
    pub lambda_d: Option<f64>,
    pub phi_m: Option<f64>,
    pub phi_d: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpaSpec {
    pub label: Option<String>,
    pub xi_k: f64,
    #[serde(default)]
    pub delta_k: f64,
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferencePoint {
    pub xi_m: f64,
    pub xi_d: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub version: Option<u32>,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub bath: BathOccupations,
    pub kappa_probe: Option<f64>,
    pub target_m: Option<f64>,
    pub reference: Option<ReferencePoint>,
    #[serde(default, rename = "curve")]
    pub curves: Vec<CurveSpec>,
    #[serde(default, rename = "opa")]
    pub opa: Vec<OpaSpec>,
}

impl Config {
    /// Parses TOML, or JSON when `json` is set. Errors carry line and column.
    pub fn parse(text: &str, json: bool, origin: &str) -> CliResult<Self> {
        let cfg: Config = if json {
            serde_json::from_str(text).map_err(|e| {
                CliError::Config(format!("{origin}:{}:{}: {e}", e.line(), e.column()))
            })?
        } else {
            toml::from_str(text).map_err(|e| {
                let at = e
                    .span()
                    .map(|s| {
                        let (line, col) = line_col(text, s.start);
                        format!(":{line}:{col}")
                    })
                    .unwrap_or_default();
                CliError::Config(format!("{origin}{at}: {}", e.message()))
            })?
        };
        if let Some(v) = cfg.version {
            if v != CONFIG_VERSION {
                return Err(CliError::Config(format!(
                    "{origin}: unsupported config version {v} (expected {CONFIG_VERSION})"
                )));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let json = path.extension().is_some_and(|x| x.eq_ignore_ascii_case("json"));
        Self::parse(&text, json, &path.display().to_string())
    }

    pub fn preset(name: &str) -> CliResult<Self> {
        let text = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| *t)
            .ok_or_else(|| {
                let names: Vec<_> = PRESETS.iter().map(|(n, _)| *n).collect();
                CliError::Config(format!(
                    "unknown preset `{name}` (available: {})",
                    names.join(", ")
                ))
            })?;
        Self::parse(text, false, &format!("preset {name}"))
    }

    /// Applies command-line overrides in place.
    pub fn apply(&mut self, a: &CommonArgs) -> CliResult<()> {
        let s = &mut self.sweep;
        s.omega_min = a.omega_min.or(s.omega_min);
        s.omega_max = a.omega_max.or(s.omega_max);
        s.n_points = a.points.or(s.n_points);
        s.format = a.format.or(s.format);
        self.target_m = a.target_m.or(self.target_m);
        self.kappa_probe = a.kappa_probe.or(self.kappa_probe);
        self.bath.n_c = a.n_c.unwrap_or(self.bath.n_c);
        self.bath.n_m = a.n_m.unwrap_or(self.bath.n_m);
        self.bath.n_d = a.n_d.unwrap_or(self.bath.n_d);

        if a.has_dimensionless_override() {
            if self.curves.is_empty() {
                self.curves.push(CurveSpec::default());
            }
            for (i, c) in self.curves.iter_mut().enumerate() {
                if c.is_system() {
                    return Err(CliError::Config(format!(
                        "curve {} is dimensional; dimensionless flags cannot override it",
                        i + 1
                    )));
                }
                c.c0 = a.c0.or(c.c0);
                c.c1 = a.c1.or(c.c1);
                c.xi_m = a.xi_m.or(c.xi_m);
                c.xi_d = a.xi_d.or(c.xi_d);
                c.kappa_over_gamma_m = a.kappa_over_gamma_m.or(c.kappa_over_gamma_m);
                c.gamma_ratio = a.gamma_ratio.or(c.gamma_ratio);
            }
        }
        Ok(())
    }

    fn grid(&self) -> CliResult<Vec<f64>> {
        let s = &self.sweep;
        let missing = |f: &str| CliError::Config(format!("sweep.{f} is required"));
        Ok(frequency_grid(
            s.omega_min.ok_or_else(|| missing("omega_min"))?,
            s.omega_max.ok_or_else(|| missing("omega_max"))?,
            s.n_points.ok_or_else(|| missing("n_points"))?,
        )?)
    }

    fn format(&self) -> Format {
        self.sweep.format.unwrap_or(Format::Csv)
    }

    fn resolved_curves(&self) -> CliResult<Vec<Curve>> {
        if self.curves.is_empty() {
            return Err(CliError::Config("no [[curve]] entries and no --c0".into()));
        }
        self.curves
            .iter()
            .enumerate()
            .map(|(i, c)| c.resolve(i))
            .collect()
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |p| p + 1) + 1;
    (line, col)
}

/// One resolved parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub system: SystemParams,
    /// Dimensionless view; phases are dropped for dimensional curves.
    pub dimensionless: DimensionlessParams,
    /// Paramps given explicitly in the configuration.
    pub explicit_paramps: bool,
}

impl CurveSpec {
    fn is_system(&self) -> bool {
        [
            self.kappa,
            self.gamma_m,
            self.gamma_d,
            self.g,
            self.big_g,
            self.lambda_m,
            self.lambda_d,
            self.phi_m,
            self.phi_d,
        ]
        .iter()
        .any(Option::is_some)
    }

    fn is_dimensionless(&self) -> bool {
        [
            self.c0,
            self.c1,
            self.xi_m,
            self.xi_d,
            self.kappa_over_gamma_m,
            self.gamma_ratio,
        ]
        .iter()
        .any(Option::is_some)
    }

    fn resolve(&self, index: usize) -> CliResult<Curve> {
        let label = self
            .label
            .clone()
            .unwrap_or_else(|| format!("curve{}", index + 1));
        let ctx = |e: CpsfError| CliError::Config(format!("curve `{label}`: {e}"));
        match (self.is_dimensionless(), self.is_system()) {
            (true, true) => Err(CliError::Config(format!(
                "curve `{label}` mixes dimensionless and dimensional fields"
            ))),
            (false, false) => Err(CliError::Config(format!(
                "curve `{label}` has no parameters"
            ))),
            (true, false) => {
                let c0 = self
                    .c0
                    .ok_or_else(|| CliError::Config(format!("curve `{label}`: c0 is required")))?;
                let d = DimensionlessParams::new(
                    c0,
                    self.c1.unwrap_or(0.0),
                    self.xi_m.unwrap_or(0.0),
                    self.xi_d.unwrap_or(0.0),
                    self.kappa_over_gamma_m.unwrap_or(1e4),
                    self.gamma_ratio.unwrap_or(1.0),
                )
                .map_err(ctx)?;
                let system = d.to_system().map_err(ctx)?;
                Ok(Curve {
                    label,
                    system,
                    dimensionless: d,
                    explicit_paramps: self.xi_m.is_some() || self.xi_d.is_some(),
                })
            }
            (false, true) => {
                let need = |v: Option<f64>, name: &str| {
                    v.ok_or_else(|| CliError::Config(format!("curve `{label}`: {name} is required")))
                };
                let p = SystemParams::new(
                    need(self.kappa, "kappa")?,
                    need(self.gamma_m, "gamma_m")?,
                    need(self.gamma_d, "gamma_d")?,
                    need(self.g, "g")?,
                    self.big_g.unwrap_or(0.0),
                    self.lambda_m.unwrap_or(0.0),
                    self.lambda_d.unwrap_or(0.0),
                )
                .map_err(ctx)?
                .with_phases(self.phi_m.unwrap_or(0.0), self.phi_d.unwrap_or(0.0));
                p.validate().map_err(ctx)?;
                let dimensionless = p.to_dimensionless().map_err(ctx)?;
                Ok(Curve {
                    label,
                    dimensionless,
                    system: p,
                    explicit_paramps: self.lambda_m.is_some() || self.lambda_d.is_some(),
                })
            }
        }
    }
}

/// Labelled numeric rows sharing one header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// Columns after `curve` and `omega`.
    pub columns: Vec<String>,
    pub rows: Vec<(String, f64, Vec<f64>)>,
}

/// `{:.16e}`, i.e. 17 significant digits, or `NaN`/`inf`/`-inf`.
pub fn format_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

impl Table {
    pub fn to_csv(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io_err = |e: csv::Error| CliError::Runtime(e.to_string());
        let mut header = vec!["curve".to_string(), "omega".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header).map_err(io_err)?;
        for (label, omega, values) in &self.rows {
            let mut rec = vec![label.clone(), format_number(*omega)];
            rec.extend(values.iter().map(|v| format_number(*v)));
            w.write_record(&rec).map_err(io_err)?;
        }
        w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))
    }

    pub fn to_json(&self) -> Value {
        let num = |v: f64| if v.is_finite() { json!(v) } else { Value::Null };
        let mut columns = vec!["curve".to_string(), "omega".to_string()];
        columns.extend(self.columns.iter().cloned());
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|(label, omega, values)| {
                let mut r = vec![json!(label), num(*omega)];
                r.extend(values.iter().map(|v| num(*v)));
                Value::Array(r)
            })
            .collect();
        json!({ "columns": columns, "rows": rows })
    }

    pub fn render(&self, format: Format) -> CliResult<Vec<u8>> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => {
                let mut out = serde_json::to_vec_pretty(&self.to_json())
                    .map_err(|e| CliError::Runtime(e.to_string()))?;
                out.push(b'\n');
                Ok(out)
            }
        }
    }
}

fn selected_groups(cfg: &Config) -> CliResult<Vec<&'static str>> {
    let requested: Vec<String> = match &cfg.sweep.outputs {
        Some(o) => o.clone(),
        None => DEFAULT_OUTPUTS.iter().map(|s| s.to_string()).collect(),
    };
    if requested.is_empty() {
        return Err(CliError::Config("sweep.outputs is empty".into()));
    }
    let mut groups = Vec::new();
    for name in &requested {
        let g = OUTPUT_GROUPS
            .iter()
            .find(|(n, _)| n == name)
            .map(|(n, _)| *n)
            .ok_or_else(|| {
                let known: Vec<_> = OUTPUT_GROUPS.iter().map(|(n, _)| *n).collect();
                CliError::Config(format!(
                    "unknown output `{name}` (known: {})",
                    known.join(", ")
                ))
            })?;
        if !groups.contains(&g) {
            groups.push(g);
        }
    }
    Ok(groups)
}

fn group_columns(group: &str) -> &'static [&'static str] {
    OUTPUT_GROUPS
        .iter()
        .find(|(n, _)| *n == group)
        .map(|(_, c)| *c)
        .unwrap_or(&[])
}

fn complex_pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn nan_row(n: usize) -> Vec<f64> {
    vec![f64::NAN; n]
}

/// Values of one column group; pole errors become NaN cells.
fn group_values(
    group: &str,
    curve: &Curve,
    cfg: &Config,
    omega: f64,
    opa_map: Option<OpaParams>,
) -> Vec<f64> {
    let p = &curve.system;
    let n = group_columns(group).len();
    let values: Result<Vec<f64>, CpsfError> = match group {
        "cpsf" => response::greens(p, omega).map(|g| vec![g.cpsf]),
        "kappa_eff" => response::greens(p, omega).map(|g| vec![g.kappa_eff]),
        "greens" => response::greens(p, omega).map(|g| {
            [complex_pair(g.g_ret_aad), complex_pair(g.g_ret_aa)].concat()
        }),
        "chi" => response::chi_elements(p, omega)
            .map(|c| c.to_array().iter().flat_map(|z| complex_pair(*z)).collect()),
        "self_energy" => response::self_energy(p, omega).map(|s| {
            [
                complex_pair(s.sigma_a),
                complex_pair(s.lambda_tilde),
                complex_pair(s.sigma_tilde),
                complex_pair(s.m_coeff),
            ]
            .concat()
        }),
        "t_eff" => noise::keldysh_and_teff(p, &cfg.bath, omega)
            .map(|k| vec![k.g_keldysh.im, k.ratio, k.t_eff.unwrap_or(f64::NAN)]),
        "reflectivity" => {
            noise::scattering_and_reflectivity(p, cfg.kappa_probe.unwrap_or(0.0), omega)
                .map(|s| vec![s.reflectivity])
        }
        "opa" => Ok(vec![opa_map.map_or(f64::NAN, |o| {
            opa::opa_cpsf_unchecked(&o, omega).a
        })]),
        _ => Ok(nan_row(n)),
    };
    values.unwrap_or_else(|_| nan_row(n))
}

/// Non-detuned amplifier with damping κ(1+𝒞_a) and pump |λ̃_a(0)|.
fn mapped_opa(curve: &Curve) -> Option<OpaParams> {
    let alg = response::cpsf_on_resonance(&curve.dimensionless).ok()?;
    let kappa = curve.system.kappa;
    Some(OpaParams {
        kappa: kappa * (1.0 + alg.c_a),
        lambda: (kappa * alg.lambda_tilde0()).abs(),
        delta_p: 0.0,
        phase: 0.0,
    })
}

fn check_stable(curve: &Curve) -> CliResult<()> {
    let v = crate::linsys::eigen_stability(&curve.system);
    if v.stable {
        Ok(())
    } else {
        Err(CliError::Infeasible(format!(
            "curve `{}` is unstable (max Re eig = {:.3e})",
            curve.label, v.max_real_part
        )))
    }
}

pub fn cmd_spectrum(cfg: &Config) -> CliResult<Table> {
    let grid = cfg.grid()?;
    let groups = selected_groups(cfg)?;
    let curves = cfg.resolved_curves()?;
    if let Some(k) = cfg.kappa_probe {
        if !(k.is_finite() && k >= 0.0) {
            return Err(CliError::Config(format!("kappa_probe must be >= 0, got {k}")));
        }
    }
    cfg.bath.validate()?;
    if groups.contains(&"t_eff") {
        for c in &curves {
            check_stable(c)?;
        }
    }
    let columns: Vec<String> = groups
        .iter()
        .flat_map(|g| group_columns(g).iter().map(|s| s.to_string()))
        .collect();
    let mut rows = Vec::with_capacity(curves.len() * grid.len());
    for curve in &curves {
        let opa_map = mapped_opa(curve);
        let block: Vec<(String, f64, Vec<f64>)> = grid
            .par_iter()
            .map(|&w| {
                let values = groups
                    .iter()
                    .flat_map(|g| group_values(g, curve, cfg, w, opa_map))
                    .collect();
                (curve.label.clone(), w, values)
            })
            .collect();
        rows.extend(block);
    }
    Ok(Table { columns, rows })
}

pub fn cmd_noise(cfg: &Config) -> CliResult<Table> {
    let grid = cfg.grid()?;
    let curves = cfg.resolved_curves()?;
    let kappa_probe = cfg.kappa_probe.unwrap_or(0.0);
    let mut rows = Vec::new();
    for curve in &curves {
        check_stable(curve)?;
        let samples = noise::noise_spectrum(&curve.system, &cfg.bath, kappa_probe, &grid)?;
        if samples.first().is_some_and(|s| s.probe_warning) {
            eprintln!(
                "warning: kappa_probe = {kappa_probe} exceeds {}·kappa for curve `{}`",
                noise::WEAK_PROBE_LIMIT,
                curve.label
            );
        }
        for s in samples {
            let t = s.t_eff.unwrap_or(f64::NAN);
            let mut v = vec![
                s.cpsf,
                s.g_keldysh.im,
                s.ratio,
                t,
                noise::qubit_population_inversion(s.omega, t),
                s.reflectivity,
            ];
            for row in s.s_matrix {
                for z in row {
                    v.extend(complex_pair(z));
                }
            }
            rows.push((curve.label.clone(), s.omega, v));
        }
    }
    Ok(Table {
        columns: NOISE_COLUMNS.iter().map(|s| s.to_string()).collect(),
        rows,
    })
}

/// Relative slack on |λ|² − κ²/4 − Δ_p² accepted as the stability boundary.
const OPA_MARGINAL_RTOL: f64 = 1e-12;

pub fn cmd_opa(cfg: &Config) -> CliResult<Table> {
    let grid = cfg.grid()?;
    if cfg.opa.is_empty() {
        return Err(CliError::Config("no [[opa]] entries".into()));
    }
    let mut rows = Vec::new();
    for (i, spec) in cfg.opa.iter().enumerate() {
        let label = spec
            .label
            .clone()
            .unwrap_or_else(|| format!("opa{}", i + 1));
        let o = OpaParams::from_normalized(spec.kappa.unwrap_or(1.0), spec.xi_k, spec.delta_k)
            .map_err(|e| CliError::Config(format!("opa `{label}`: {e}")))?;
        if !o.is_stable() {
            if o.s() < -OPA_MARGINAL_RTOL * o.kappa * o.kappa {
                return Err(CliError::Infeasible(format!(
                    "opa `{label}` is unstable (max Re eig = {:.3e})",
                    opa::opa_max_real_part(&o)
                )));
            }
            eprintln!("warning: opa `{label}` is on the stability boundary");
        }
        let (lo, hi) = opa::negativity_window(&o).unwrap_or((f64::NAN, f64::NAN));
        let block: Vec<_> = grid
            .par_iter()
            .map(|&w| {
                let s = opa::opa_cpsf_unchecked(&o, w);
                (label.clone(), w, vec![s.a, s.f, lo, hi])
            })
            .collect();
        rows.extend(block);
    }
    Ok(Table {
        columns: OPA_COLUMNS.iter().map(|s| s.to_string()).collect(),
        rows,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveStability {
    pub label: String,
    pub params: DimensionlessParams,
    pub report: stability::StabilityReport,
    pub negativity: NegativityCheck,
    pub on_resonance: Option<response::OnResonanceAlgebra>,
}

pub fn cmd_stability(cfg: &Config) -> CliResult<Vec<CurveStability>> {
    cfg.resolved_curves()?
        .into_iter()
        .map(|c| {
            let d = c.dimensionless;
            Ok(CurveStability {
                report: stability::stability_report(&d)?,
                negativity: stability::negativity_check(&d)?,
                on_resonance: response::cpsf_on_resonance(&d).ok(),
                params: d,
                label: c.label,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ReferenceCheck {
    pub xi_m: f64,
    pub xi_d: f64,
    pub check: NegativityCheck,
    /// |m − target| ≤ 5 % of |target| and stable.
    pub verified: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizeReport {
    pub label: String,
    pub c0: f64,
    pub c1: f64,
    pub kappa_over_gamma_m: f64,
    pub gamma_ratio: f64,
    pub result: stability::NegativityResult,
    pub verification: Option<NegativityCheck>,
    pub reference: Option<ReferenceCheck>,
    /// Estimated most negative reachable κ𝒜(0); only computed when infeasible.
    pub m_max_estimate: Option<stability::NegativityBound>,
}

/// Relative tolerance used to verify a reference point against the target.
pub const REFERENCE_RTOL: f64 = 0.05;

pub fn cmd_optimize(cfg: &Config) -> CliResult<OptimizeReport> {
    let target = cfg
        .target_m
        .ok_or_else(|| CliError::Config("target_m (or --target-m) is required".into()))?;
    let curves = cfg.resolved_curves()?;
    let curve = &curves[0];
    let d = curve.dimensionless;
    let result = stability::optimize_paramps(&d, target)?;
    let verification = if result.feasible {
        Some(stability::negativity_check(
            &d.with_paramps(result.xi_m_opt, result.xi_d_opt),
        )?)
    } else {
        None
    };
    let reference_point = cfg.reference.or_else(|| {
        curve.explicit_paramps.then_some(ReferencePoint {
            xi_m: d.xi_m,
            xi_d: d.xi_d,
        })
    });
    let reference = match reference_point {
        Some(r) => {
            let check = stability::negativity_check(&d.with_paramps(r.xi_m, r.xi_d))?;
            Some(ReferenceCheck {
                xi_m: r.xi_m,
                xi_d: r.xi_d,
                verified: check.stable
                    && (check.m - target).abs() <= REFERENCE_RTOL * target.abs(),
                check,
            })
        }
        None => None,
    };
    let m_max_estimate = if result.feasible {
        None
    } else {
        stability::max_negativity(&d).ok()
    };
    Ok(OptimizeReport {
        label: curve.label.clone(),
        c0: d.c0,
        c1: d.c1,
        kappa_over_gamma_m: d.kappa_over_gamma_m,
        gamma_ratio: d.gamma_ratio,
        result,
        verification,
        reference,
        m_max_estimate,
    })
}

fn json_bytes<T: Serialize>(v: &T) -> CliResult<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(v).map_err(|e| CliError::Runtime(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    let io = |e: io::Error| CliError::Runtime(format!("cannot write output: {e}"));
    match path {
        Some(p) => fs::write(p, bytes).map_err(io),
        None => {
            let mut out = io::stdout().lock();
            match out.write_all(bytes).and_then(|_| out.flush()) {
                Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
                r => r.map_err(io),
            }
        }
    }
}

/// Loads the configuration named by the arguments and applies the overrides.
pub fn load_config(args: &CommonArgs) -> CliResult<Config> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), _) => Config::load(path)?,
        (None, Some(name)) => Config::preset(name)?,
        (None, None) => Config::default(),
    };
    cfg.apply(args)?;
    Ok(cfg)
}

/// Output bytes of one command, plus the failure to report after writing
/// them (an infeasible optimization still prints its report).
pub fn execute(command: Command, cfg: &Config) -> CliResult<(Vec<u8>, Option<CliError>)> {
    let bytes = match command {
        Command::Spectrum => cmd_spectrum(cfg)?.render(cfg.format())?,
        Command::Noise => cmd_noise(cfg)?.render(cfg.format())?,
        Command::Opa => cmd_opa(cfg)?.render(cfg.format())?,
        Command::Stability => json_bytes(&json!({ "curves": cmd_stability(cfg)? }))?,
        Command::Optimize => {
            let report = cmd_optimize(cfg)?;
            let bytes = json_bytes(&report)?;
            if !report.result.feasible {
                let e = CliError::Infeasible(format!(
                    "target M = {} is not reachable with stable paramps",
                    report.result.target_m
                ));
                return Ok((bytes, Some(e)));
            }
            bytes
        }
    };
    Ok((bytes, None))
}

/// Entry point used by the binary; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let outcome = load_config(&cli.args)
        .and_then(|cfg| execute(cli.command, &cfg))
        .and_then(|(bytes, failure)| {
            write_output(cli.args.output.as_deref(), &bytes)?;
            failure.map_or(Ok(()), Err)
        });
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("cpsf: {e}");
            e.exit_code()
        }
    }
}
