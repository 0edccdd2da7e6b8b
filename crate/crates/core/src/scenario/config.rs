//! Scenario configuration files.
//!
//! Grammar (one item per line, surrounding whitespace ignored):
//!
//! ```text
//! file     := line*
//! line     := blank | comment | section | entry
//! comment  := ('#' | ';') any-text
//! section  := '[' name ']'
//! entry    := key '=' value
//! ```
//!
//! Keys are unique within a section, every entry belongs to a section, and
//! unknown sections or keys are errors. A value may end with a comment
//! introduced by ` #`. Numbers accept `pi`, `pi/x` and `x*pi`; lists are
//! comma-separated; booleans are `true` or `false`.
//!
//! | section         | keys                                                                 |
//! |-----------------|----------------------------------------------------------------------|
//! | `[scenario]`    | `id`                                                                 |
//! | `[shape]`       | `name` or `file`; `radius center a b c rho delta r0 r1 refine`       |
//! | `[density]`     | `preset` (`zero`, `linear`, `quadratic`), `a`                        |
//! | `[tensors]`     | `t`, `s`: `identity`, `scaled_identity(c)`, `newton(r)`, `file(path)` |
//! | `[problems]`    | `closed`, `steklov` (booleans), `wentzell` (list of `b`)             |
//! | `[checks]`      | `bounds`, `identities`: `all` or a list of ids                       |
//! | `[tolerances]`  | `equality_tol hold_tol identity_tol pointwise_margin`                |
//! | `[output]`      | `dir`                                                                |

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::bounds::{BoundId, IdentityId, Tolerances};
use crate::curvature::TensorKind;
use crate::error::{Error, Result};
use crate::mesh::{DensityPreset, ShapeKind};

pub const MAX_REFINEMENT: u32 = 8;
pub const DEFAULT_REFINEMENT: u32 = 4;

/// Raw `key = value` entries by section, each with its line number.
pub type Sections = BTreeMap<String, BTreeMap<String, (usize, String)>>;

const KNOWN: &[(&str, &[&str])] = &[
    ("scenario", &["id"]),
    ("shape", &["name", "file", "radius", "center", "a", "b", "c", "rho", "delta", "r0", "r1", "refine"]),
    ("density", &["preset", "a"]),
    ("tensors", &["t", "s"]),
    ("problems", &["closed", "steklov", "wentzell"]),
    ("checks", &["bounds", "identities"]),
    ("tolerances", &["equality_tol", "hold_tol", "identity_tol", "pointwise_margin"]),
    ("output", &["dir"]),
];

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

pub fn parse_sections(text: &str) -> Result<Sections> {
    let mut out = Sections::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split_once(" #").map_or(raw, |(b, _)| b).trim();
        if body.is_empty() || body.starts_with('#') || body.starts_with(';') {
            continue;
        }
        if let Some(name) = body.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| parse_err(line, "unterminated section header"))?.trim();
            let keys = KNOWN.iter().find(|(s, _)| *s == name).map(|(_, k)| k);
            if keys.is_none() {
                return Err(parse_err(line, format!("unknown section [{name}]")));
            }
            if out.contains_key(name) {
                return Err(parse_err(line, format!("section [{name}] appears twice")));
            }
            out.insert(name.to_string(), BTreeMap::new());
            current = Some(name.to_string());
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| parse_err(line, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        let section = current.as_ref().ok_or_else(|| parse_err(line, "entry before any section header"))?;
        let keys = KNOWN.iter().find(|(s, _)| s == section).map(|(_, k)| *k).unwrap_or(&[]);
        if !keys.contains(&key) {
            return Err(parse_err(line, format!("unknown key `{key}` in [{section}]")));
        }
        if value.is_empty() {
            return Err(parse_err(line, format!("empty value for `{key}`")));
        }
        let entries = out.get_mut(section).expect("section inserted at its header");
        if entries.insert(key.to_string(), (line, value.to_string())).is_some() {
            return Err(parse_err(line, format!("duplicate key `{key}` in [{section}]")));
        }
    }
    Ok(out)
}

pub fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    let v = if s == "pi" {
        PI
    } else if let Some(d) = s.strip_prefix("pi/") {
        PI / d.trim().parse::<f64>().ok()?
    } else if let Some(m) = s.strip_suffix("*pi") {
        m.trim().parse::<f64>().ok()? * PI
    } else {
        s.parse().ok()?
    };
    v.is_finite().then_some(v)
}

/// Look-up helper over one section.
pub struct Entries<'a> {
    section: &'a str,
    map: Option<&'a BTreeMap<String, (usize, String)>>,
}

impl<'a> Entries<'a> {
    pub fn new(sections: &'a Sections, section: &'a str) -> Self {
        Self { section, map: sections.get(section) }
    }

    pub fn from_map(section: &'a str, map: &'a BTreeMap<String, (usize, String)>) -> Self {
        Self { section, map: Some(map) }
    }

    pub fn raw(&self, key: &str) -> Option<(usize, &'a str)> {
        self.map.and_then(|m| m.get(key)).map(|(l, v)| (*l, v.as_str()))
    }

    pub fn number(&self, key: &str) -> Result<Option<f64>> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => parse_number(v)
                .map(Some)
                .ok_or_else(|| parse_err(line, format!("`{key}` in [{}] is not a number: `{v}`", self.section))),
        }
    }

    pub fn required(&self, key: &str, what: &str) -> Result<f64> {
        self.number(key)?.ok_or_else(|| Error::Config(format!("{what} needs `{key}` in [{}]", self.section)))
    }

    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split(',')
                .map(|x| parse_number(x).ok_or_else(|| parse_err(line, format!("`{key}`: `{}` is not a number", x.trim()))))
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }

    pub fn boolean(&self, key: &str) -> Result<Option<bool>> {
        match self.raw(key) {
            None => Ok(None),
            Some((_, "true")) => Ok(Some(true)),
            Some((_, "false")) => Ok(Some(false)),
            Some((line, v)) => Err(parse_err(line, format!("`{key}` must be true or false, got `{v}`"))),
        }
    }
}

/// Builtin shape from its name and parameters.
pub fn shape_from_params(name: &str, p: &Entries) -> Result<ShapeKind> {
    let geodesic = |default_delta: f64| -> Result<(f64, f64)> {
        Ok((p.required("rho", name)?, p.number("delta")?.unwrap_or(default_delta)))
    };
    Ok(match name {
        "round_sphere" => ShapeKind::RoundSphere {
            radius: p.number("radius")?.unwrap_or(1.0),
            center: p.list("center")?.unwrap_or_default(),
        },
        "ellipsoid" => ShapeKind::Ellipsoid {
            a: p.required("a", name)?,
            b: p.required("b", name)?,
            c: p.required("c", name)?,
        },
        "flat_disk" => ShapeKind::FlatDisk { radius: p.number("radius")?.unwrap_or(1.0) },
        "hemisphere" => ShapeKind::Hemisphere,
        "annulus" => ShapeKind::Annulus { r0: p.required("r0", name)?, r1: p.required("r1", name)? },
        "geodesic_sphere_in_S3" => {
            let (rho, delta) = geodesic(1.0)?;
            ShapeKind::GeodesicSphereS3 { rho, delta }
        }
        "geodesic_sphere_in_H3" => {
            let (rho, delta) = geodesic(-1.0)?;
            ShapeKind::GeodesicSphereH3 { rho, delta }
        }
        "spherical_cap_in_S3" => {
            let (rho, delta) = geodesic(1.0)?;
            ShapeKind::SphericalCapS3 { rho, delta }
        }
        other => return Err(Error::Config(format!("unknown shape `{other}`"))),
    })
}

pub fn parse_tensor(value: &str, line: usize) -> Result<TensorKind> {
    let v = value.trim();
    let arg = |prefix: &str| v.strip_prefix(prefix).and_then(|r| r.strip_suffix(')')).map(str::trim);
    if v == "identity" {
        Ok(TensorKind::ScaledIdentity { c: 1.0 })
    } else if let Some(c) = arg("scaled_identity(") {
        let c = parse_number(c).ok_or_else(|| parse_err(line, format!("bad scale in `{v}`")))?;
        if !(c > 0.0) {
            return Err(parse_err(line, format!("tensor scale must be positive, got {c}")));
        }
        Ok(TensorKind::ScaledIdentity { c })
    } else if let Some(r) = arg("newton(") {
        let r = r.parse().map_err(|_| parse_err(line, format!("bad order in `{v}`")))?;
        Ok(TensorKind::Newton { r })
    } else if let Some(path) = arg("file(") {
        Ok(TensorKind::File { path: path.to_string() })
    } else {
        Err(parse_err(line, format!("unknown tensor `{v}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ShapeSource {
    Builtin { shape: ShapeKind },
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Problems {
    pub closed: bool,
    pub steklov: bool,
    pub wentzell: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub id: String,
    pub shape: ShapeSource,
    pub refinement: u32,
    /// `None` keeps the density stored in a mesh file (zero for builtins).
    pub density: Option<DensityPreset>,
    pub t: TensorKind,
    pub s: TensorKind,
    /// `None` selects the closed problem on closed meshes and Steklov otherwise.
    pub problems: Option<Problems>,
    pub bounds: Option<Vec<BoundId>>,
    pub identities: Option<Vec<IdentityId>>,
    pub tolerances: Tolerances,
    pub output_dir: Option<PathBuf>,
}

fn id_list<T: serde::de::DeserializeOwned>(e: &Entries, key: &str) -> Result<Option<Vec<T>>> {
    match e.raw(key) {
        None | Some((_, "all")) => Ok(None),
        Some((line, v)) => v
            .split(',')
            .map(|x| {
                serde_json::from_value(serde_json::Value::String(x.trim().to_string()))
                    .map_err(|_| parse_err(line, format!("unknown id `{}` in `{key}`", x.trim())))
            })
            .collect::<Result<Vec<T>>>()
            .map(Some),
    }
}

impl ScenarioConfig {
    /// Parse a configuration; relative paths resolve against `base_dir`.
    pub fn parse(text: &str, default_id: &str, base_dir: &Path) -> Result<Self> {
        let sections = parse_sections(text)?;
        let scenario = Entries::new(&sections, "scenario");
        let id = scenario.raw("id").map_or(default_id.to_string(), |(_, v)| v.to_string());
        if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(Error::Config(format!("scenario id `{id}` must be alphanumeric, `_` or `-`")));
        }

        let shape_e = Entries::new(&sections, "shape");
        let shape = match (shape_e.raw("name"), shape_e.raw("file")) {
            (Some(_), Some((line, _))) => return Err(parse_err(line, "give either `name` or `file`, not both")),
            (Some((_, name)), None) => ShapeSource::Builtin { shape: shape_from_params(name, &shape_e)? },
            (None, Some((_, path))) => ShapeSource::File { path: base_dir.join(path) },
            (None, None) => return Err(Error::Config("[shape] needs `name` or `file`".into())),
        };
        let refinement = match shape_e.number("refine")? {
            None => DEFAULT_REFINEMENT,
            Some(r) if r >= 0.0 && r.fract() == 0.0 && r <= MAX_REFINEMENT as f64 => r as u32,
            Some(r) => return Err(Error::Config(format!("refine must be an integer in [0, {MAX_REFINEMENT}], got {r}"))),
        };

        let density_e = Entries::new(&sections, "density");
        let density = match density_e.raw("preset") {
            None => None,
            Some((_, "zero")) => Some(DensityPreset::Zero),
            Some((line, "linear")) => {
                let a = density_e.list("a")?.ok_or_else(|| parse_err(line, "linear density needs `a`"))?;
                Some(DensityPreset::Linear { a })
            }
            Some((line, "quadratic")) => {
                let a = density_e.number("a")?.ok_or_else(|| parse_err(line, "quadratic density needs `a`"))?;
                Some(DensityPreset::Quadratic { a })
            }
            Some((line, other)) => return Err(parse_err(line, format!("unknown density preset `{other}`"))),
        };

        let tensors = Entries::new(&sections, "tensors");
        let tensor = |key: &str| -> Result<TensorKind> {
            match tensors.raw(key) {
                None => Ok(TensorKind::ScaledIdentity { c: 1.0 }),
                Some((line, v)) => match parse_tensor(v, line)? {
                    TensorKind::File { path } => {
                        Ok(TensorKind::File { path: base_dir.join(path).to_string_lossy().into_owned() })
                    }
                    k => Ok(k),
                },
            }
        };
        let (t, s) = (tensor("t")?, tensor("s")?);

        let problems = if sections.contains_key("problems") {
            let p = Entries::new(&sections, "problems");
            let wentzell = p.list("wentzell")?.unwrap_or_default();
            if let Some(b) = wentzell.iter().find(|&&b| !(b > 0.0)) {
                let line = p.raw("wentzell").map_or(0, |(l, _)| l);
                return Err(parse_err(line, format!("Wentzell parameter b must be positive, got {b}")));
            }
            Some(Problems {
                closed: p.boolean("closed")?.unwrap_or(false),
                steklov: p.boolean("steklov")?.unwrap_or(false),
                wentzell,
            })
        } else {
            None
        };

        let checks = Entries::new(&sections, "checks");
        let bounds = id_list::<BoundId>(&checks, "bounds")?;
        let identities = id_list::<IdentityId>(&checks, "identities")?;

        let tol_e = Entries::new(&sections, "tolerances");
        let defaults = Tolerances::default();
        let positive = |key: &str, default: f64| -> Result<f64> {
            match tol_e.number(key)? {
                None => Ok(default),
                Some(v) if v > 0.0 => Ok(v),
                Some(v) => Err(Error::Config(format!("tolerance `{key}` must be positive, got {v}"))),
            }
        };
        let tolerances = Tolerances {
            equality_tol: positive("equality_tol", defaults.equality_tol)?,
            hold_tol: positive("hold_tol", defaults.hold_tol)?,
            identity_tol: positive("identity_tol", defaults.identity_tol)?,
            pointwise_margin: positive("pointwise_margin", defaults.pointwise_margin)?,
        };
        let output_dir = Entries::new(&sections, "output").raw("dir").map(|(_, d)| base_dir.join(d));

        Ok(Self { id, shape, refinement, density, t, s, problems, bounds, identities, tolerances, output_dir })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, stem, base)
    }

    fn builtin(id: &str, shape: ShapeKind) -> Self {
        Self {
            id: id.into(),
            shape: ShapeSource::Builtin { shape },
            refinement: DEFAULT_REFINEMENT,
            density: None,
            t: TensorKind::ScaledIdentity { c: 1.0 },
            s: TensorKind::ScaledIdentity { c: 1.0 },
            problems: None,
            bounds: None,
            identities: None,
            tolerances: Tolerances::default(),
            output_dir: None,
        }
    }
}

/// The shipped scenario matrix run by `--suite paper`.
pub fn paper_suite() -> Vec<ScenarioConfig> {
    let unit = || ShapeKind::RoundSphere { radius: 1.0, center: vec![] };
    let scaled = |c: f64| TensorKind::ScaledIdentity { c };
    let weighted = |id: &str, density: DensityPreset, c: f64| {
        let mut s = ScenarioConfig::builtin(id, unit());
        s.density = Some(density);
        s.t = scaled(c);
        s.s = scaled(c);
        s
    };
    let linear = || DensityPreset::Linear { a: vec![0.0, 0.0, 1.0] };
    let quadratic = || DensityPreset::Quadratic { a: 0.5 };
    let boundary = |id: &str, shape: ShapeKind, wentzell: Vec<f64>| {
        let mut s = ScenarioConfig::builtin(id, shape);
        s.problems = Some(Problems { closed: false, steklov: true, wentzell });
        s
    };
    let mut ellipsoid = ScenarioConfig::builtin("ellipsoid", ShapeKind::Ellipsoid { a: 1.0, b: 1.0, c: 1.5 });
    ellipsoid.t = TensorKind::Newton { r: 1 };
    vec![
        ScenarioConfig::builtin("unit_sphere", unit()),
        ellipsoid,
        ScenarioConfig::builtin("geodesic_sphere_s3", ShapeKind::GeodesicSphereS3 { rho: PI / 6.0, delta: 1.0 }),
        ScenarioConfig::builtin("geodesic_sphere_h3", ShapeKind::GeodesicSphereH3 { rho: 0.5, delta: -1.0 }),
        weighted("sphere_linear_density", linear(), 1.0),
        weighted("sphere_linear_density_scaled", linear(), 2.0),
        weighted("sphere_quadratic_density", quadratic(), 1.0),
        weighted("sphere_quadratic_density_scaled", quadratic(), 2.0),
        boundary("flat_disk", ShapeKind::FlatDisk { radius: 1.0 }, vec![0.5, 2.0]),
        boundary("hemisphere", ShapeKind::Hemisphere, vec![1.0]),
        boundary("spherical_cap_s3", ShapeKind::SphericalCapS3 { rho: PI / 6.0, delta: 1.0 }, vec![]),
        ScenarioConfig::builtin("translated_sphere", ShapeKind::RoundSphere { radius: 1.0, center: vec![0.3, -0.2, 0.5] }),
    ]
}
