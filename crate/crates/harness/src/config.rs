//! Experiment configuration files.
//!
//! A config names one experiment kind with its parameters, the `eps` and
//! `delta` lists it is run over, the ensemble size and seed, and where the
//! results go. Models can be given inline or as a path to a JSON file,
//! resolved relative to the config file.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use nearelastic_core::billiard2d::{Coefficient, DiffusionControl, Diffusivity, SectionPoint, SectionQuadrature, Shape, WallSpec};
use nearelastic_core::model1d::{FlatModelSpec, ModelSpec};
use nearelastic_core::noise::NoiseLaw;
use nearelastic_core::regularize::{Fig6Geometry, InitDensity};
use nearelastic_core::walk::AlternatingWalk;
use serde::de::value::MapAccessDeserializer;
use serde::de::{self, DeserializeOwned, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default = "one")]
    pub replicas: u64,
    #[serde(default)]
    pub eps: Vec<f64>,
    #[serde(default)]
    pub delta: Vec<f64>,
    /// Width of the reported intervals in standard deviations.
    #[serde(default = "three")]
    pub z: f64,
    /// Failing records make the run fail.
    #[serde(default)]
    pub assert: bool,
    pub experiment: Experiment,
    #[serde(default)]
    pub output: Output,
}

fn one() -> u64 {
    1
}

fn three() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    /// Directory for all files; the command line `--out` overrides it.
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default = "results_json")]
    pub results: String,
    #[serde(default = "results_csv")]
    pub summary: String,
    /// Write raw data tables next to the results.
    #[serde(default = "yes")]
    pub tables: bool,
}

fn results_json() -> String {
    "results.json".into()
}

fn results_csv() -> String {
    "results.csv".into()
}

fn yes() -> bool {
    true
}

impl Default for Output {
    fn default() -> Self {
        Output {
            dir: None,
            results: results_json(),
            summary: results_csv(),
            tables: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    #[serde(rename = "averaging-1d")]
    Averaging1d(Averaging),
    BranchingInit(BranchingInit),
    BranchingDyn(BranchingDyn),
    Fig6(Fig6),
    WalkParity(WalkParity),
    StripRatio(StripRatio),
    BilliardDecay(BilliardDecay),
    BilliardBranching(BilliardBranching),
    LiouvilleCheck(LiouvilleCheck),
    IntegralGeometry(IntegralGeometry),
}

const KINDS: &[&str] = &[
    "averaging-1d",
    "branching-init",
    "branching-dyn",
    "fig6",
    "walk-parity",
    "strip-ratio",
    "billiard-decay",
    "billiard-branching",
    "liouville-check",
    "integral-geometry",
];

fn variant<'de, D: Deserializer<'de>>(kind: &str, d: D) -> Result<Experiment, D::Error> {
    Ok(match kind {
        "averaging-1d" => Experiment::Averaging1d(Deserialize::deserialize(d)?),
        "branching-init" => Experiment::BranchingInit(Deserialize::deserialize(d)?),
        "branching-dyn" => Experiment::BranchingDyn(Deserialize::deserialize(d)?),
        "fig6" => Experiment::Fig6(Deserialize::deserialize(d)?),
        "walk-parity" => Experiment::WalkParity(Deserialize::deserialize(d)?),
        "strip-ratio" => Experiment::StripRatio(Deserialize::deserialize(d)?),
        "billiard-decay" => Experiment::BilliardDecay(Deserialize::deserialize(d)?),
        "billiard-branching" => Experiment::BilliardBranching(Deserialize::deserialize(d)?),
        "liouville-check" => Experiment::LiouvilleCheck(Deserialize::deserialize(d)?),
        "integral-geometry" => Experiment::IntegralGeometry(Deserialize::deserialize(d)?),
        other => return Err(de::Error::unknown_variant(other, KINDS)),
    })
}

// When `kind` comes first the body is streamed straight into the variant, so
// errors keep their field path and source position.
impl<'de> Deserialize<'de> for Experiment {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Experiment;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("an experiment object with a `kind` field")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Experiment, A::Error> {
                let first: Option<String> = map.next_key()?;
                match first.as_deref() {
                    Some("kind") => {
                        let kind: String = map.next_value()?;
                        variant(&kind, MapAccessDeserializer::new(map))
                    }
                    None => Err(de::Error::missing_field("kind")),
                    Some(k) => {
                        let mut body = serde_json::Map::new();
                        let v: serde_json::Value = map.next_value()?;
                        body.insert(k.to_string(), v);
                        while let Some((k, v)) = map.next_entry::<String, serde_json::Value>()? {
                            body.insert(k, v);
                        }
                        let kind = match body.remove("kind") {
                            Some(serde_json::Value::String(s)) => s,
                            Some(_) => return Err(de::Error::custom("`kind` must be a string")),
                            None => return Err(de::Error::missing_field("kind")),
                        };
                        variant(&kind, serde_json::Value::Object(body)).map_err(de::Error::custom)
                    }
                }
            }
        }
        d.deserialize_map(V)
    }
}

impl Experiment {
    pub fn id(&self) -> &'static str {
        match self {
            Experiment::Averaging1d(_) => "averaging-1d",
            Experiment::BranchingInit(_) => "branching-init",
            Experiment::BranchingDyn(_) => "branching-dyn",
            Experiment::Fig6(_) => "fig6",
            Experiment::WalkParity(_) => "walk-parity",
            Experiment::StripRatio(_) => "strip-ratio",
            Experiment::BilliardDecay(_) => "billiard-decay",
            Experiment::BilliardBranching(_) => "billiard-branching",
            Experiment::LiouvilleCheck(_) => "liouville-check",
            Experiment::IntegralGeometry(_) => "integral-geometry",
        }
    }

    fn needs_eps(&self) -> bool {
        matches!(
            self,
            Experiment::Averaging1d(_)
                | Experiment::BranchingInit(_)
                | Experiment::BranchingDyn(_)
                | Experiment::StripRatio(_)
                | Experiment::BilliardDecay(_)
                | Experiment::BilliardBranching(_)
        )
    }

    fn needs_delta(&self) -> bool {
        matches!(
            self,
            Experiment::BranchingInit(_)
                | Experiment::BranchingDyn(_)
                | Experiment::Fig6(_)
                | Experiment::BilliardDecay(_)
                | Experiment::BilliardBranching(_)
                | Experiment::LiouvilleCheck(_)
        )
    }

    fn models_mut(&mut self) -> Vec<&mut ModelRef> {
        match self {
            Experiment::Averaging1d(a) => vec![&mut a.model],
            Experiment::BranchingInit(b) => vec![&mut b.model],
            Experiment::BranchingDyn(b) => vec![&mut b.model],
            Experiment::StripRatio(s) => vec![&mut s.model],
            _ => Vec::new(),
        }
    }
}

/// A model given inline or by file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    File { path: PathBuf },
    Inline(ModelSpec),
}

impl ModelRef {
    pub fn spec(&self) -> Result<&ModelSpec> {
        match self {
            ModelRef::Inline(s) => Ok(s),
            ModelRef::File { path } => bail!("model file {} was not loaded", path.display()),
        }
    }

    pub fn flat(&self) -> Result<&FlatModelSpec> {
        match self.spec()? {
            ModelSpec::Flat(s) => Ok(s),
            ModelSpec::Potential(_) => bail!("this experiment needs a flat model"),
        }
    }
}

/// Table shape and optional interior wall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    #[serde(flatten)]
    pub shape: Shape,
    #[serde(default)]
    pub wall: Option<WallSpec>,
}

/// Per-wall noise laws, or one law for every wall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NoiseSpec {
    PerWall(Vec<NoiseLaw>),
    Shared(NoiseLaw),
}

impl NoiseSpec {
    pub fn laws(&self, walls: usize) -> Vec<NoiseLaw> {
        match self {
            NoiseSpec::PerWall(v) => v.clone(),
            NoiseSpec::Shared(l) => vec![*l; walls],
        }
    }
}

/// Rescaled energy path against the limiting edge ODE, and the time the
/// path needs to reach the vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Averaging {
    pub model: ModelRef,
    pub x0: [f64; 2],
    /// Fraction of the vertex time over which the sup error is taken.
    #[serde(default = "window")]
    pub window: f64,
    /// Bound on the sup error.
    #[serde(default = "two_percent")]
    pub tolerance: f64,
    /// Relative bound on the vertex-time error.
    #[serde(default = "two_percent")]
    pub time_tolerance: f64,
    /// Evaluation points on top of the path's own breakpoints.
    #[serde(default = "grid")]
    pub grid: usize,
}

fn window() -> f64 {
    0.9
}

fn two_percent() -> f64 {
    0.02
}

fn grid() -> usize {
    2000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchingInit {
    pub model: ModelRef,
    pub x0: [f64; 2],
    #[serde(default)]
    pub density: InitDensity,
    /// Leaf whose frequency is reported.
    #[serde(default)]
    pub well: usize,
    /// Overrides the limit-process prediction.
    #[serde(default)]
    pub target: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchingDyn {
    pub model: ModelRef,
    pub x0: [f64; 2],
    pub noise: NoiseSpec,
    #[serde(default)]
    pub well: usize,
    #[serde(default)]
    pub target: Option<f64>,
    /// Also estimate the frequency from the log-speed random walk.
    #[serde(default)]
    pub walk_check: bool,
}

/// The three-well counterexample under both noise schemes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig6 {
    pub geometry: Fig6Geometry,
    pub x0: [f64; 2],
    /// Admissible hit counts; each gives one `eps`.
    pub hits: Vec<u32>,
    #[serde(default)]
    pub density: InitDensity,
    /// Law of the restitution noise.
    pub noise: NoiseLaw,
    #[serde(default = "min_swing")]
    pub min_swing: f64,
}

fn min_swing() -> f64 {
    0.8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkParity {
    pub walk: AlternatingWalk,
    #[serde(default)]
    pub target: Option<f64>,
    /// Extra values of `n` for a convergence table.
    #[serde(default)]
    pub scan: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StripRatio {
    pub model: ModelRef,
    pub x0: [f64; 2],
    pub radius: f64,
    /// Relative tolerance on the ratio.
    #[serde(default = "one_percent")]
    pub tolerance: f64,
}

fn one_percent() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BilliardDecay {
    pub domain: DomainSpec,
    pub coefficient: Coefficient,
    pub x0: SectionPoint,
    pub h0: f64,
    /// The check stops once the energy falls below `cutoff * h0`.
    #[serde(default = "quarter")]
    pub cutoff: f64,
    #[serde(default = "five_percent")]
    pub tolerance: f64,
    #[serde(default)]
    pub diffusivity: Diffusivity,
    #[serde(default)]
    pub control: DiffusionControl,
}

fn quarter() -> f64 {
    0.25
}

fn five_percent() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BilliardBranching {
    pub domain: DomainSpec,
    pub coefficient: Coefficient,
    pub x0: SectionPoint,
    pub h0: f64,
    /// Exact value of the predicted split, checked against the quadrature.
    #[serde(default)]
    pub target: Option<f64>,
    #[serde(default)]
    pub diffusivity: Diffusivity,
    #[serde(default)]
    pub control: DiffusionControl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiouvilleCheck {
    pub domain: DomainSpec,
    /// Random section points for the Jacobian test.
    #[serde(default = "points")]
    pub points: usize,
    #[serde(default = "fd_step")]
    pub step: f64,
    #[serde(default = "micro")]
    pub jacobian_tolerance: f64,
    pub x0: SectionPoint,
    /// Chain steps in total, split over `chains` independent chains.
    #[serde(default = "million")]
    pub chain_steps: usize,
    #[serde(default = "one")]
    pub chains: u64,
    #[serde(default = "burn_in")]
    pub burn_in: usize,
    #[serde(default = "one_percent")]
    pub ks_tolerance: f64,
    #[serde(default)]
    pub diffusivity: Diffusivity,
    /// Coefficient for the loss-rate consistency check.
    #[serde(default = "unit_coefficient")]
    pub coefficient: Coefficient,
    #[serde(default = "micro")]
    pub rhs_tolerance: f64,
    #[serde(default = "ten")]
    pub rhs_points: usize,
}

fn points() -> usize {
    1000
}

fn fd_step() -> f64 {
    1e-5
}

fn micro() -> f64 {
    1e-6
}

fn million() -> usize {
    1_000_000
}

fn burn_in() -> usize {
    100
}

fn ten() -> usize {
    10
}

fn unit_coefficient() -> Coefficient {
    Coefficient::Constant { c: 1.0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegralGeometry {
    pub domains: Vec<NamedShape>,
    #[serde(default)]
    pub quadrature: SectionQuadrature,
    /// Dilation factor for the scaling check.
    #[serde(default)]
    pub dilation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedShape {
    pub name: String,
    #[serde(flatten)]
    pub shape: Shape,
    pub tolerance: f64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicas < 1 {
            bail!("replicas: must be at least 1");
        }
        if !(self.z > 0.0 && self.z.is_finite()) {
            bail!("z: must be positive");
        }
        for (name, list) in [("eps", &self.eps), ("delta", &self.delta)] {
            if let Some((i, v)) = list.iter().enumerate().find(|(_, &v)| !(v > 0.0 && v < 1.0)) {
                bail!("{name}[{i}] = {v}: must lie in (0, 1)");
            }
        }
        if self.experiment.needs_eps() && self.eps.is_empty() {
            bail!("eps: {} needs at least one value", self.experiment.id());
        }
        if self.experiment.needs_delta() && self.delta.is_empty() {
            bail!("delta: {} needs at least one value", self.experiment.id());
        }
        match &self.experiment {
            Experiment::Averaging1d(a) if !(a.window > 0.0 && a.window <= 1.0) => {
                bail!("experiment.window: must lie in (0, 1]")
            }
            Experiment::Fig6(f) if f.hits.is_empty() && self.eps.is_empty() => {
                bail!("experiment.hits: fig6 needs hit counts or an eps list")
            }
            Experiment::BilliardDecay(b) if !(b.cutoff > 0.0 && b.cutoff < 1.0) => {
                bail!("experiment.cutoff: must lie in (0, 1)")
            }
            Experiment::LiouvilleCheck(l) if l.chains == 0 || l.chain_steps == 0 => {
                bail!("experiment.chain_steps: needs at least one chain and one step")
            }
            Experiment::IntegralGeometry(g) if g.domains.is_empty() => {
                bail!("experiment.domains: needs at least one domain")
            }
            _ => Ok(()),
        }
    }
}

/// Deserializes JSON, naming the offending field and position on error.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." || path.is_empty() {
            anyhow!("{inner}")
        } else {
            anyhow!("field `{path}`: {inner}")
        }
    })
}

/// Parses and validates a config; model files are resolved against `base`.
pub fn parse(text: &str, base: &Path) -> Result<ExperimentConfig> {
    let mut cfg: ExperimentConfig = parse_json(text)?;
    for m in cfg.experiment.models_mut() {
        if let ModelRef::File { path } = m {
            let full = base.join(&*path);
            let body = std::fs::read_to_string(&full).with_context(|| format!("reading model {}", full.display()))?;
            let spec: ModelSpec = parse_json(&body).with_context(|| format!("in model {}", full.display()))?;
            *m = ModelRef::Inline(spec);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse(&text, base).with_context(|| format!("in config {}", path.display()))
}
