//! Flat `key = value` run configuration with dotted section keys.
//!
//! ```text
//! # flat unit disk, constant boundary slope
//! metric.family = flat
//! metric.R = 1.0
//! mesh.n_r = 32
//! mesh.n_theta = 64
//! boundary_phi = const(0.1)
//! initial_u0 = linear(0.2)
//! translator.eps_schedule = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3]
//! ```
//!
//! Unknown keys, repeated keys and malformed values are errors.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::flow::{FlowConfig, TimeScheme};
use crate::geometry::MetricDescriptor;
use crate::mesh::{DiskMesh, ScalarField};
use crate::translator::{
    validate_schedule, EllipticOptions, DEFAULT_EPS_SCHEDULE, DEFAULT_TOL_ELL,
};

/// Boundary data `φ(θ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PhiSpec {
    Const(f64),
    /// `a·cos(kθ)`.
    Cosine {
        a: f64,
        k: f64,
    },
}

impl PhiSpec {
    pub fn eval(&self, theta: f64) -> f64 {
        match *self {
            PhiSpec::Const(a) => a,
            PhiSpec::Cosine { a, k } => a * (k * theta).cos(),
        }
    }

    pub fn sample(&self, mesh: &DiskMesh) -> Vec<f64> {
        mesh.boundary_from_fn(|t| self.eval(t))
    }
}

impl fmt::Display for PhiSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhiSpec::Const(a) => write!(f, "const({a:?})"),
            PhiSpec::Cosine { a, k } => write!(f, "cosine({a:?}, {k:?})"),
        }
    }
}

/// Initial surface `u₀`.
#[derive(Clone, Debug, PartialEq)]
pub enum U0Spec {
    Zero,
    /// `a·r·cos θ`.
    Linear(f64),
    /// Field file in the `r,theta,value` format on the configured mesh.
    CustomFile(PathBuf),
}

impl U0Spec {
    pub fn build(&self, mesh: &DiskMesh) -> Result<ScalarField> {
        match self {
            U0Spec::Zero => Ok(mesh.zeros()),
            U0Spec::Linear(a) => Ok(mesh.field_from_fn(|p| a * p.r() * p.theta().cos())),
            U0Spec::CustomFile(path) => crate::io::read_field(path, mesh),
        }
    }
}

impl fmt::Display for U0Spec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            U0Spec::Zero => write!(f, "zero"),
            U0Spec::Linear(a) => write!(f, "linear({a:?})"),
            U0Spec::CustomFile(p) => write!(f, "custom-file({})", p.display()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyTag {
    Flat,
    SphereCap,
    CustomSinh,
}

impl FamilyTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            FamilyTag::Flat => "flat",
            FamilyTag::SphereCap => "sphere-cap",
            FamilyTag::CustomSinh => "custom-sinh",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricSpec {
    pub family: FamilyTag,
    pub params: Vec<f64>,
    pub radius: f64,
}

impl MetricSpec {
    pub fn build(&self) -> Result<MetricDescriptor> {
        match self.family {
            FamilyTag::Flat => Ok(MetricDescriptor::flat()),
            FamilyTag::SphereCap => MetricDescriptor::sphere_cap(self.params[0]),
            FamilyTag::CustomSinh => MetricDescriptor::hyperbolic(self.params[0]),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub metric: MetricSpec,
    pub n_r: usize,
    pub n_theta: usize,
    pub boundary_phi: PhiSpec,
    pub initial_u0: U0Spec,
    pub flow: FlowConfig,
    pub eps_schedule: Vec<f64>,
    pub tol_ell: f64,
    /// Values of `a` in `φ ≡ a` for the sweep command.
    pub sweep_a: Vec<f64>,
    pub output_dir: PathBuf,
}

pub const DEFAULT_SWEEP: [f64; 7] = [-0.2, -0.1, -0.05, 0.0, 0.05, 0.1, 0.2];

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            metric: MetricSpec {
                family: FamilyTag::Flat,
                params: Vec::new(),
                radius: 1.0,
            },
            n_r: 32,
            n_theta: 64,
            boundary_phi: PhiSpec::Const(0.0),
            initial_u0: U0Spec::Zero,
            flow: FlowConfig::default(),
            eps_schedule: DEFAULT_EPS_SCHEDULE.to_vec(),
            tol_ell: DEFAULT_TOL_ELL,
            sweep_a: DEFAULT_SWEEP.to_vec(),
            output_dir: PathBuf::from("out"),
        }
    }
}

const KEYS: &[&str] = &[
    "metric.family",
    "metric.params",
    "metric.R",
    "mesh.n_r",
    "mesh.n_theta",
    "boundary_phi",
    "initial_u0",
    "flow.t_max",
    "flow.tol_translate",
    "flow.c_cfl",
    "flow.snapshot_stride",
    "flow.monitor_stride",
    "flow.scheme",
    "flow.dt",
    "flow.refactor_every",
    "flow.repair_compat",
    "translator.eps_schedule",
    "translator.tol_ell",
    "sweep.a",
    "output_dir",
];

fn invalid(field: &str, message: impl Into<String>) -> Error {
    Error::ConfigValidation {
        field: field.to_string(),
        message: message.into(),
    }
}

fn real(field: &str, s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| invalid(field, format!("`{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(invalid(field, "must be finite"));
    }
    Ok(v)
}

fn positive(field: &str, s: &str) -> Result<f64> {
    let v = real(field, s)?;
    if v <= 0.0 {
        return Err(invalid(field, "must be positive"));
    }
    Ok(v)
}

fn count(field: &str, s: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| invalid(field, format!("`{s}` is not a non-negative integer")))
}

fn list(field: &str, s: &str) -> Result<Vec<f64>> {
    let s = s.trim();
    let inner = s
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .unwrap_or(s);
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner.split(',').map(|x| real(field, x)).collect()
}

/// `name(arg, ...)` or a bare `name`.
fn call<'a>(field: &str, s: &'a str) -> Result<(&'a str, Vec<&'a str>)> {
    let s = s.trim();
    match s.find('(') {
        None => Ok((s, Vec::new())),
        Some(open) => {
            let body = s[open + 1..]
                .strip_suffix(')')
                .ok_or_else(|| invalid(field, format!("unbalanced parentheses in `{s}`")))?;
            let args = if body.trim().is_empty() {
                Vec::new()
            } else {
                body.split(',').map(str::trim).collect()
            };
            Ok((s[..open].trim(), args))
        }
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_relative() && base != Path::new("") && base != Path::new(".") {
        base.join(p)
    } else {
        p.to_path_buf()
    }
}

fn parse_phi(s: &str) -> Result<PhiSpec> {
    const F: &str = "boundary_phi";
    match call(F, s)? {
        ("const", a) if a.len() == 1 => Ok(PhiSpec::Const(real(F, a[0])?)),
        ("cosine", a) if a.len() == 2 => Ok(PhiSpec::Cosine {
            a: real(F, a[0])?,
            k: real(F, a[1])?,
        }),
        _ => Err(invalid(
            F,
            format!("expected const(a) or cosine(a, k), got `{s}`"),
        )),
    }
}

fn parse_u0(s: &str, base: &Path) -> Result<U0Spec> {
    const F: &str = "initial_u0";
    match call(F, s)? {
        ("zero", a) if a.is_empty() => Ok(U0Spec::Zero),
        ("linear", a) if a.len() == 1 => Ok(U0Spec::Linear(real(F, a[0])?)),
        ("custom-file", a) if a.len() == 1 && !a[0].is_empty() => {
            Ok(U0Spec::CustomFile(resolve(base, Path::new(a[0]))))
        }
        _ => Err(invalid(
            F,
            format!("expected zero, linear(a) or custom-file(path), got `{s}`"),
        )),
    }
}

/// Splits text into `key → (value, line)`, rejecting unknown or repeated keys.
fn entries(text: &str) -> Result<BTreeMap<String, (String, usize)>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::ConfigParse {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(Error::ConfigParse {
                line,
                message: format!("unknown key `{key}`"),
            });
        }
        if out
            .insert(key.to_string(), (value.trim().to_string(), line))
            .is_some()
        {
            return Err(Error::ConfigParse {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
    }
    Ok(out)
}

impl RunConfig {
    /// Parses config text; relative paths resolve against `base`.
    pub fn parse_str(text: &str, base: &Path) -> Result<Self> {
        let kv = entries(text)?;
        let get = |k: &str| kv.get(k).map(|(v, _)| v.as_str());
        let mut c = RunConfig::default();

        let family = get("metric.family").ok_or_else(|| invalid("metric.family", "required"))?;
        c.metric.family = match family {
            "flat" => FamilyTag::Flat,
            "sphere-cap" => FamilyTag::SphereCap,
            "custom-sinh" => FamilyTag::CustomSinh,
            other => {
                return Err(invalid(
                    "metric.family",
                    format!("unknown family `{other}` (flat, sphere-cap, custom-sinh)"),
                ))
            }
        };
        if let Some(v) = get("metric.params") {
            c.metric.params = list("metric.params", v)?;
        }
        let want = usize::from(c.metric.family != FamilyTag::Flat);
        if c.metric.params.is_empty() && want == 1 {
            c.metric.params = vec![1.0];
        }
        if c.metric.params.len() != want {
            return Err(invalid(
                "metric.params",
                format!("{} takes {want} parameter(s)", c.metric.family.as_str()),
            ));
        }
        if c.metric.params.iter().any(|p| *p <= 0.0) {
            return Err(invalid("metric.params", "must be positive"));
        }
        if let Some(v) = get("metric.R") {
            c.metric.radius = positive("metric.R", v)?;
        }
        let r_max = c.metric.build()?.validity_radius();
        if c.metric.radius >= r_max {
            return Err(invalid(
                "metric.R",
                format!("must be below the chart limit {r_max}"),
            ));
        }

        if let Some(v) = get("mesh.n_r") {
            c.n_r = count("mesh.n_r", v)?;
        }
        if let Some(v) = get("mesh.n_theta") {
            c.n_theta = count("mesh.n_theta", v)?;
        }
        if c.n_r < crate::mesh::MIN_RADIAL_CELLS {
            return Err(invalid(
                "mesh.n_r",
                format!("must be at least {}", crate::mesh::MIN_RADIAL_CELLS),
            ));
        }
        if c.n_theta < crate::mesh::MIN_ANGULAR_CELLS || c.n_theta % 2 != 0 {
            return Err(invalid(
                "mesh.n_theta",
                format!(
                    "must be even and at least {}",
                    crate::mesh::MIN_ANGULAR_CELLS
                ),
            ));
        }

        if let Some(v) = get("boundary_phi") {
            c.boundary_phi = parse_phi(v)?;
        }
        if let Some(v) = get("initial_u0") {
            c.initial_u0 = parse_u0(v, base)?;
        }

        let f = &mut c.flow;
        if let Some(v) = get("flow.t_max") {
            f.t_max = positive("flow.t_max", v)?;
        }
        if let Some(v) = get("flow.tol_translate") {
            f.tol_translate = positive("flow.tol_translate", v)?;
        }
        if let Some(v) = get("flow.c_cfl") {
            f.c_cfl = positive("flow.c_cfl", v)?;
        }
        if let Some(v) = get("flow.snapshot_stride") {
            f.snapshot_stride = count("flow.snapshot_stride", v)?.max(1);
        }
        if let Some(v) = get("flow.monitor_stride") {
            f.monitor_stride = count("flow.monitor_stride", v)?.max(1);
        }
        if let Some(v) = get("flow.repair_compat") {
            f.repair_compatibility = match v {
                "true" => true,
                "false" => false,
                _ => return Err(invalid("flow.repair_compat", "expected true or false")),
            };
        }
        let (mut dt, mut refactor) = match TimeScheme::default() {
            TimeScheme::SemiImplicit { dt, refactor_every } => (dt, refactor_every),
            TimeScheme::ExplicitRk2 => unreachable!(),
        };
        if let Some(v) = get("flow.dt") {
            dt = positive("flow.dt", v)?;
        }
        if let Some(v) = get("flow.refactor_every") {
            refactor = count("flow.refactor_every", v)?.max(1);
        }
        f.scheme = match get("flow.scheme").unwrap_or("semi-implicit") {
            "semi-implicit" => TimeScheme::SemiImplicit {
                dt,
                refactor_every: refactor,
            },
            "explicit-rk2" => TimeScheme::ExplicitRk2,
            other => {
                return Err(invalid(
                    "flow.scheme",
                    format!("unknown scheme `{other}` (semi-implicit, explicit-rk2)"),
                ))
            }
        };

        if let Some(v) = get("translator.eps_schedule") {
            c.eps_schedule = list("translator.eps_schedule", v)?;
        }
        validate_schedule(&c.eps_schedule)
            .map_err(|e| invalid("translator.eps_schedule", e.to_string()))?;
        if let Some(v) = get("translator.tol_ell") {
            c.tol_ell = positive("translator.tol_ell", v)?;
        }
        if let Some(v) = get("sweep.a") {
            c.sweep_a = list("sweep.a", v)?;
            if c.sweep_a.is_empty() {
                return Err(invalid("sweep.a", "empty grid"));
            }
        }
        if let Some(v) = get("output_dir") {
            if v.is_empty() {
                return Err(invalid("output_dir", "empty path"));
            }
            c.output_dir = resolve(base, Path::new(v));
        }
        Ok(c)
    }

    pub fn mesh(&self) -> Result<DiskMesh> {
        DiskMesh::build(
            &self.metric.build()?,
            self.metric.radius,
            self.n_r,
            self.n_theta,
        )
    }

    pub fn elliptic_options(&self) -> EllipticOptions {
        EllipticOptions {
            tol_ell: self.tol_ell,
            ..EllipticOptions::default()
        }
    }

    /// Canonical `key = value` text; parsing it gives back the same config.
    pub fn to_text(&self) -> String {
        self.echo()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// `(key, value)` pairs in a fixed order.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        let fmt_list = |v: &[f64]| {
            format!(
                "[{}]",
                v.iter()
                    .map(|x| format!("{x:?}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            )
        };
        let mut out = vec![
            ("metric.family", self.metric.family.as_str().to_string()),
            ("metric.params", fmt_list(&self.metric.params)),
            ("metric.R", format!("{:?}", self.metric.radius)),
            ("mesh.n_r", self.n_r.to_string()),
            ("mesh.n_theta", self.n_theta.to_string()),
            ("boundary_phi", self.boundary_phi.to_string()),
            ("initial_u0", self.initial_u0.to_string()),
            ("flow.t_max", format!("{:?}", self.flow.t_max)),
            (
                "flow.tol_translate",
                format!("{:?}", self.flow.tol_translate),
            ),
            ("flow.c_cfl", format!("{:?}", self.flow.c_cfl)),
            (
                "flow.snapshot_stride",
                self.flow.snapshot_stride.to_string(),
            ),
            ("flow.monitor_stride", self.flow.monitor_stride.to_string()),
        ];
        match self.flow.scheme {
            TimeScheme::SemiImplicit { dt, refactor_every } => {
                out.push(("flow.scheme", "semi-implicit".into()));
                out.push(("flow.dt", format!("{dt:?}")));
                out.push(("flow.refactor_every", refactor_every.to_string()));
            }
            TimeScheme::ExplicitRk2 => out.push(("flow.scheme", "explicit-rk2".into())),
        }
        out.extend([
            (
                "flow.repair_compat",
                self.flow.repair_compatibility.to_string(),
            ),
            ("translator.eps_schedule", fmt_list(&self.eps_schedule)),
            ("translator.tol_ell", format!("{:?}", self.tol_ell)),
            ("sweep.a", fmt_list(&self.sweep_a)),
            ("output_dir", self.output_dir.display().to_string()),
        ]);
        out
    }
}

/// Reads and validates a config file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    RunConfig::parse_str(&text, base)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        RunConfig::parse_str(text, Path::new("."))
    }

    #[test]
    fn minimal_file_fills_defaults() {
        let c = parse("metric.family = flat\n").unwrap();
        assert_eq!(c.flow.c_cfl, 0.2);
        assert_eq!(c.flow.tol_translate, 1e-7);
        assert_eq!(c.eps_schedule, DEFAULT_EPS_SCHEDULE.to_vec());
        assert_eq!(c.metric.radius, 1.0);
    }

    #[test]
    fn increasing_schedule_rejected() {
        let e =
            parse("metric.family = flat\ntranslator.eps_schedule = [1e-3, 1e-2]\n").unwrap_err();
        assert!(
            matches!(e, Error::ConfigValidation { ref field, .. } if field == "translator.eps_schedule")
        );
    }

    #[test]
    fn unknown_key_reports_line() {
        let e = parse("metric.family = flat\n\n# c\nflow.tmax = 3\n").unwrap_err();
        assert!(matches!(e, Error::ConfigParse { line: 4, .. }), "{e}");
        let e = parse("metric.family = flat\nmetric.family = flat\n").unwrap_err();
        assert!(matches!(e, Error::ConfigParse { line: 2, .. }));
        let e = parse("metric.family flat\n").unwrap_err();
        assert!(matches!(e, Error::ConfigParse { line: 1, .. }));
    }

    #[test]
    fn cosine_data_sampled_on_ring() {
        let c = parse("metric.family = flat\nboundary_phi = cosine(0.1, 1)\nmesh.n_r = 8\nmesh.n_theta = 16\n").unwrap();
        let mesh = c.mesh().unwrap();
        let phi = c.boundary_phi.sample(&mesh);
        for (j, p) in phi.iter().enumerate() {
            let t = j as f64 * mesh.dtheta();
            assert_eq!(*p, 0.1 * t.cos());
        }
    }

    #[test]
    fn validation_names_field() {
        for (text, field) in [
            ("metric.family = torus\n", "metric.family"),
            ("metric.family = sphere-cap\nmetric.R = 4\n", "metric.R"),
            ("metric.family = flat\nmesh.n_theta = 17\n", "mesh.n_theta"),
            ("metric.family = flat\nflow.t_max = nan\n", "flow.t_max"),
            (
                "metric.family = flat\nboundary_phi = sin(1)\n",
                "boundary_phi",
            ),
            (
                "metric.family = flat\ninitial_u0 = linear()\n",
                "initial_u0",
            ),
            (
                "metric.family = flat\nmetric.params = [1]\n",
                "metric.params",
            ),
        ] {
            match parse(text) {
                Err(Error::ConfigValidation { field: f, .. }) => assert_eq!(f, field, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn echo_round_trips() {
        let text = "metric.family = sphere-cap\nmetric.params = 1.5\nmetric.R = 1\nboundary_phi = cosine(0.05, 2)\n\
                    initial_u0 = linear(0.2)\nflow.scheme = explicit-rk2\nsweep.a = [0, 0.1]\n";
        let c = parse(text).unwrap();
        let d = parse(&c.to_text()).unwrap();
        assert_eq!(c.to_text(), d.to_text());
        assert_eq!(d.metric.params, vec![1.5]);
        assert_eq!(d.flow.scheme, TimeScheme::ExplicitRk2);
    }
}
