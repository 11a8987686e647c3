//! Flat `key=value` run configuration.
//!
//! Pairs are separated by whitespace or newlines, `#` starts a comment.
//! Recognized keys:
//!
//! | key | meaning |
//! |-----|---------|
//! | `example` | `ex1`, `ex21`, `ex22`, `ex31`, `ex32-mcf`, `ex4-heleshaw`, `ex5-ale` or `custom` (`ex32`, `ex4`, `ex5` are accepted too) |
//! | `level` | refinement level of the initial mesh |
//! | `c_tau`, `alpha`, `epsilon` | time step factor, inverse diffusion constant, smoothing weight |
//! | `t_adapt` | adaptation interval; `off` disables adaptation |
//! | `sigma` | surface tension (`ex4-heleshaw`) |
//! | `D`, `diffusivity` | diffusion constant (`ex5-ale`) |
//! | `T`, `t_end` | end time |
//! | `deturck` | `true` or `false`; `false` runs the baseline scheme |
//! | `output` | output directory |
//! | `snapshot_interval` | time between mesh snapshots, default `T/20` |
//! | `deform_amplitude`, `deform_frequency`, `deform_power` | stand-in deformation of `ex1` |
//! | `input`, `manifold`, `dynamics` | mesh file, reference manifold (`half-sphere`, `cylinder`) and motion (`redistribute`, `mcf`) of `custom` |

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::deturck::DeTurckConfig;
use crate::error::{Error, Result};
use crate::problems::fields::Example1Deformation;
use crate::problems::{Example, ExampleParams};
use crate::reference::ReferenceManifold;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExampleId {
    Builtin(Example),
    Custom,
}

impl ExampleId {
    fn parse(s: &str) -> Result<Self> {
        let canonical = match s {
            "custom" => return Ok(ExampleId::Custom),
            "ex32" => "ex32-mcf",
            "ex4" => "ex4-heleshaw",
            "ex5" => "ex5-ale",
            other => other,
        };
        canonical
            .parse()
            .map(ExampleId::Builtin)
            .map_err(|_| unknown_example(s))
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExampleId::Builtin(e) => write!(f, "{e}"),
            ExampleId::Custom => f.write_str("custom"),
        }
    }
}

fn valid_ids() -> String {
    let mut ids: Vec<&str> = Example::ALL.iter().map(|e| e.id()).collect();
    ids.push("custom");
    ids.join(", ")
}

fn unknown_example(s: &str) -> Error {
    Error::Config(format!("unknown example '{s}', expected one of {}", valid_ids()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CustomDynamics {
    /// Zero material velocity; only the reparametrization moves vertices.
    Redistribute,
    MeanCurvature,
}

impl FromStr for CustomDynamics {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "redistribute" => Ok(CustomDynamics::Redistribute),
            "mcf" => Ok(CustomDynamics::MeanCurvature),
            _ => Err(Error::Config(format!(
                "unknown dynamics '{s}', expected redistribute or mcf"
            ))),
        }
    }
}

fn parse_manifold(s: &str) -> Result<ReferenceManifold> {
    match s {
        "half-sphere" => Ok(ReferenceManifold::HalfSphere),
        "cylinder" => Ok(ReferenceManifold::Cylinder),
        _ => Err(Error::Config(format!(
            "unknown manifold '{s}', expected half-sphere or cylinder"
        ))),
    }
}

/// Input of the `custom` example: a VTK mesh carrying a `reference` point
/// vector field with the reference map values.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomInput {
    pub input: PathBuf,
    pub manifold: ReferenceManifold,
    pub dynamics: CustomDynamics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub example: ExampleId,
    pub level: usize,
    pub c_tau: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub t_adapt: Option<f64>,
    pub sigma: f64,
    pub diffusivity: f64,
    pub t_end: f64,
    pub deturck: bool,
    pub output: PathBuf,
    pub snapshot_interval: f64,
    pub deformation: Example1Deformation,
    pub custom: Option<CustomInput>,
}

/// Refinement level used when the configuration does not set one.
pub fn default_level(example: Example) -> usize {
    match example {
        Example::Ex4HeleShaw => 5,
        _ => 4,
    }
}

impl RunConfig {
    /// Published parameters of `example`.
    pub fn defaults(example: ExampleId) -> Self {
        let base = match example {
            ExampleId::Builtin(e) => e,
            ExampleId::Custom => Example::Ex1,
        };
        let params = ExampleParams::published(base, default_level(base));
        let (_, _, _, t_end) = base.parameters();
        RunConfig {
            example,
            level: params.level,
            c_tau: params.config.c_tau,
            alpha: params.config.alpha,
            epsilon: params.config.epsilon,
            t_adapt: params.t_adapt,
            sigma: params.sigma,
            diffusivity: params.diffusivity,
            t_end,
            deturck: true,
            output: PathBuf::from("output"),
            snapshot_interval: t_end / 20.0,
            deformation: params.deformation,
            custom: None,
        }
    }

    /// Parses `key=value` pairs in order; later pairs override earlier
    /// ones. `origin` names the source in error messages.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let pairs = tokenize(text, origin)?;
        Self::from_pairs(&pairs)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Builds a configuration from already split pairs.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let example = pairs
            .iter()
            .rev()
            .find(|(k, _)| k == "example")
            .ok_or_else(|| Error::Config(format!("missing 'example', expected one of {}", valid_ids())))?;
        let mut config = RunConfig::defaults(ExampleId::parse(&example.1)?);
        let mut interval = None;
        let (mut input, mut manifold, mut dynamics) = (None, None, CustomDynamics::Redistribute);
        for (key, value) in pairs {
            match key.as_str() {
                "example" => {}
                "level" => config.level = number(key, value)?,
                "c_tau" => config.c_tau = number(key, value)?,
                "alpha" => config.alpha = number(key, value)?,
                "epsilon" => config.epsilon = number(key, value)?,
                "t_adapt" => {
                    config.t_adapt = match value.as_str() {
                        "off" | "none" => None,
                        _ => Some(number(key, value)?),
                    }
                }
                "sigma" => config.sigma = number(key, value)?,
                "D" | "diffusivity" => config.diffusivity = number(key, value)?,
                "T" | "t_end" => config.t_end = number(key, value)?,
                "deturck" => config.deturck = number(key, value)?,
                "output" => config.output = PathBuf::from(value),
                "snapshot_interval" => interval = Some(number(key, value)?),
                "deform_amplitude" => config.deformation.amplitude = number(key, value)?,
                "deform_frequency" => config.deformation.frequency = number(key, value)?,
                "deform_power" => config.deformation.power = number(key, value)?,
                "input" => input = Some(PathBuf::from(value)),
                "manifold" => manifold = Some(parse_manifold(value)?),
                "dynamics" => dynamics = value.parse()?,
                _ => return Err(Error::Config(format!("unknown key '{key}'"))),
            }
        }
        config.snapshot_interval = interval.unwrap_or(config.t_end / 20.0);
        if config.example == ExampleId::Custom {
            let input = input.ok_or_else(|| Error::Config("custom example needs 'input'".into()))?;
            let manifold = manifold.ok_or_else(|| Error::Config("custom example needs 'manifold'".into()))?;
            config.custom = Some(CustomInput {
                input,
                manifold,
                dynamics,
            });
        } else if input.is_some() || manifold.is_some() {
            return Err(Error::Config(
                "'input' and 'manifold' apply to the custom example only".into(),
            ));
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.deturck_config().validate()?;
        let positive = [
            ("t_end", self.t_end),
            ("snapshot_interval", self.snapshot_interval),
            ("sigma", self.sigma),
            ("D", self.diffusivity),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(t) = self.t_adapt {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("t_adapt must be positive, got {t}")));
            }
        }
        if self.deformation.frequency == 0 {
            return Err(Error::Config("deform_frequency must be positive".into()));
        }
        Ok(())
    }

    pub fn deturck_config(&self) -> DeTurckConfig {
        DeTurckConfig {
            c_tau: self.c_tau,
            alpha: self.alpha,
            epsilon: self.epsilon,
            ..DeTurckConfig::default()
        }
    }

    /// Parameters for the built-in examples.
    pub fn example_params(&self) -> ExampleParams {
        ExampleParams {
            level: self.level,
            config: self.deturck_config(),
            t_adapt: self.t_adapt,
            deturck: self.deturck,
            sigma: self.sigma,
            diffusivity: self.diffusivity,
            deformation: self.deformation,
        }
    }
}

fn number<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("invalid value '{value}' for '{key}': {e}")))
}

/// Splits `text` into `key=value` pairs.
pub fn tokenize(text: &str, origin: &Path) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        for token in line.split_whitespace() {
            let Some((k, v)) = token.split_once('=') else {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    line: i + 1,
                    message: format!("expected key=value, got '{token}'"),
                });
            };
            if k.is_empty() || v.is_empty() {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    line: i + 1,
                    message: format!("empty key or value in '{token}'"),
                });
            }
            pairs.push((k.to_string(), v.to_string()));
        }
    }
    Ok(pairs)
}
