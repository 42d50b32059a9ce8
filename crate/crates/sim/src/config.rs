//! Scenario configuration files.
//!
//! Configs are TOML. Powers are given in dBm and converted to milliwatts
//! here; everything downstream works in linear units. See
//! `configs/paper_fig4.cfg` for a fully spelled-out example.

use std::{fmt, path::{Path, PathBuf}};

use rcmimo_core::{
    arrays::ArrayGeometry,
    channels::{AodBox, ClusterParams, MeanAod},
    dual::SolverOptions,
    geometry::{RegionSpec, Segment, Shape},
    mu::OuterOptions,
};
use serde::{Deserialize, Serialize};

/// Mean AoD box used for channels pointed away from every region when the
/// config does not list one.
pub const AWAY_BOX: AodBox = AodBox { theta: (0.5, 0.9), phi: (1.2, 1.9) };

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {path}: {source}")]
    Parse { path: PathBuf, source: Box<toml::de::Error> },
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    SuOptimal,
    /// Power-only waterfilling, the no-region-constraint reference.
    SuUnconstrained,
    SuCodebook,
    SuBackoff,
    MuSumrate,
    MuSumrateUnconstrained,
    MuBd,
    MuBdUnconstrained,
    MuCodebook,
    MuBackoffBd,
    MuBackoffSumrate,
}

impl Method {
    pub const ALL: [Method; 11] = [
        Method::SuOptimal,
        Method::SuUnconstrained,
        Method::SuCodebook,
        Method::SuBackoff,
        Method::MuSumrate,
        Method::MuSumrateUnconstrained,
        Method::MuBd,
        Method::MuBdUnconstrained,
        Method::MuCodebook,
        Method::MuBackoffBd,
        Method::MuBackoffSumrate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::SuOptimal => "su_optimal",
            Method::SuUnconstrained => "su_unconstrained",
            Method::SuCodebook => "su_codebook",
            Method::SuBackoff => "su_backoff",
            Method::MuSumrate => "mu_sumrate",
            Method::MuSumrateUnconstrained => "mu_sumrate_unconstrained",
            Method::MuBd => "mu_bd",
            Method::MuBdUnconstrained => "mu_bd_unconstrained",
            Method::MuCodebook => "mu_codebook",
            Method::MuBackoffBd => "mu_backoff_bd",
            Method::MuBackoffSumrate => "mu_backoff_sumrate",
        }
    }

    pub fn single_user(self) -> bool {
        matches!(self, Method::SuOptimal | Method::SuUnconstrained | Method::SuCodebook | Method::SuBackoff)
    }

    /// Whether the design is meant to respect the region constraints.
    pub fn constrained(self) -> bool {
        !matches!(self, Method::SuUnconstrained | Method::MuSumrateUnconstrained | Method::MuBdUnconstrained)
    }

    pub fn uses_codebook(self) -> bool {
        matches!(self, Method::SuCodebook | Method::MuCodebook)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| format!("unknown method '{s}'"))
    }
}

// ---- raw file layout -------------------------------------------------------

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    array: RawArray,
    #[serde(default = "one")]
    sigma2: f64,
    #[serde(default)]
    regions: Vec<RawRegion>,
    #[serde(default)]
    channel: RawChannel,
    experiment: RawExperiment,
    #[serde(default)]
    solver: RawSolver,
    #[serde(default)]
    codebook: RawCodebook,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawArray {
    m1: usize,
    m2: usize,
    spacing_ratio: f64,
}

impl Default for RawArray {
    fn default() -> Self {
        let g = ArrayGeometry::default();
        Self { m1: g.m1, m2: g.m2, spacing_ratio: g.spacing_ratio }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ShapeKind {
    Polyline,
    Circle,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSegment {
    /// `ω1 c1 + ω2 c2 = ω3`; derived from the endpoints when left out.
    omega: Option<[f64; 3]>,
    start: [f64; 2],
    end: [f64; 2],
    #[serde(default = "yes")]
    facing: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegion {
    shape: ShapeKind,
    #[serde(default)]
    segments: Vec<RawSegment>,
    center: Option<[f64; 2]>,
    radius: Option<f64>,
    #[serde(default = "default_height")]
    height_span: [f64; 2],
    #[serde(default = "default_n_azimuth")]
    n_azimuth: usize,
    #[serde(default = "default_n_elevation")]
    n_elevation: usize,
    #[serde(default = "default_gamma")]
    pathloss_gamma: f64,
}

fn default_height() -> [f64; 2] {
    [0.0, 1500.0]
}
fn default_n_azimuth() -> usize {
    10
}
fn default_n_elevation() -> usize {
    5
}
fn default_gamma() -> f64 {
    2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ChannelModel {
    #[default]
    Rayleigh,
    Clustered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
enum AodMode {
    /// Mean AoD drawn inside one of the regions' angular boxes.
    Toward,
    /// Mean AoD drawn inside a box clear of every region.
    Away,
    /// The `boxes` list as given.
    Boxes,
    /// Broadside, `θ = φ = π/2`.
    #[default]
    Broadside,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBox {
    theta: [f64; 2],
    phi: [f64; 2],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    #[serde(default)]
    model: ChannelModel,
    #[serde(default = "default_m_s")]
    m_s: usize,
    #[serde(default = "default_xi1")]
    xi1: f64,
    #[serde(default = "default_xi2")]
    xi2: f64,
    #[serde(default)]
    aod: AodMode,
    #[serde(default)]
    boxes: Vec<RawBox>,
    #[serde(default)]
    shared_mean: bool,
}

fn default_m_s() -> usize {
    20
}
fn default_xi1() -> f64 {
    0.02
}
fn default_xi2() -> f64 {
    0.05
}

impl Default for RawChannel {
    fn default() -> Self {
        Self {
            model: ChannelModel::Rayleigh,
            m_s: default_m_s(),
            xi1: default_xi1(),
            xi2: default_xi2(),
            aod: AodMode::default(),
            boxes: Vec::new(),
            shared_mean: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    methods: Vec<Method>,
    #[serde(default = "default_users")]
    users: Vec<usize>,
    #[serde(default = "default_m_r")]
    m_r: usize,
    streams: Option<usize>,
    p_dbm: Vec<f64>,
    q_dbm: Vec<f64>,
    /// `[n_azimuth, n_elevation]` grids applied to every region in turn.
    samples: Option<Vec<[usize; 2]>>,
    trials: usize,
    #[serde(default)]
    master_seed: u64,
    #[serde(default)]
    probe_points: usize,
    #[serde(default)]
    probe_seed: u64,
    #[serde(default = "default_failure_rate")]
    max_failure_rate: f64,
    #[serde(default)]
    timing: bool,
}

fn default_users() -> Vec<usize> {
    vec![1]
}
fn default_m_r() -> usize {
    2
}
fn default_failure_rate() -> f64 {
    0.05
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    step_mu: Option<f64>,
    step_lambda: Option<f64>,
    epsilon: Option<f64>,
    max_iterations: Option<usize>,
    mu_floor: Option<f64>,
    diminishing_after: Option<usize>,
    polish: Option<bool>,
    feasibility_tol: Option<f64>,
    outer_epsilon: Option<f64>,
    max_outer: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCodebook {
    #[serde(default = "default_bits")]
    bits: u32,
    #[serde(default = "default_codebook_seed")]
    seed: u64,
    /// Base codebook written by `make-codebook`; drawn from `bits`/`seed`
    /// when absent.
    file: Option<PathBuf>,
}

fn default_bits() -> u32 {
    7
}
fn default_codebook_seed() -> u64 {
    1
}

impl Default for RawCodebook {
    fn default() -> Self {
        Self { bits: default_bits(), seed: default_codebook_seed(), file: None }
    }
}

// ---- validated scenario ----------------------------------------------------

/// Region sampling grid `(n_azimuth, n_elevation)`.
pub type SampleGrid = (usize, usize);

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub methods: Vec<Method>,
    /// User counts swept by the multi-user methods.
    pub users: Vec<usize>,
    pub m_r: usize,
    pub streams: usize,
    pub p_dbm: Vec<f64>,
    pub q_dbm: Vec<f64>,
    /// `None` keeps each region's own grid.
    pub samples: Option<Vec<SampleGrid>>,
    pub trials: usize,
    pub master_seed: u64,
    /// Random boundary points per region for the probe; 0 disables it.
    pub probe_points: usize,
    pub probe_seed: u64,
    /// Largest tolerated share of hard solver failures.
    pub max_failure_rate: f64,
    /// Fill `wall_time_ms`. Off by default so that output is reproducible.
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodebookConfig {
    pub bits: u32,
    pub seed: u64,
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelConfig {
    Rayleigh,
    Clustered(ClusterParams),
}

/// Validated configuration. Region thresholds are placeholders; the Q sweep
/// sets them per run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub array: ArrayGeometry,
    pub sigma2: f64,
    pub regions: Vec<RegionSpec>,
    pub channel: ChannelConfig,
    pub experiment: ExperimentConfig,
    pub solver: SolverOptions,
    pub outer: OuterOptions,
    pub codebook: CodebookConfig,
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            ConfigError::Parse { source, .. } => ConfigError::Parse { path: path.to_owned(), source },
            other => other,
        })?;
        // Relative codebook paths are relative to the config file.
        if let Some(f) = &cfg.codebook.file {
            if f.is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.codebook.file = Some(dir.join(f));
                }
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse { path: PathBuf::from("<string>"), source: Box::new(e) })?;
        raw.validate()
    }

    /// Regions with every threshold set to `q_dbm` and, if given, the
    /// sampling grid replaced.
    pub fn regions_at(&self, q_dbm: f64, grid: Option<SampleGrid>) -> Vec<RegionSpec> {
        let q = rcmimo_core::units::dbm_to_mw(q_dbm);
        self.regions
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r.q_threshold = q;
                if let Some((a, e)) = grid {
                    r.n_azimuth = a;
                    r.n_elevation = e;
                }
                r
            })
            .collect()
    }

    /// Grids to sweep: the configured list, or the regions' own (`None`).
    pub fn sample_grids(&self) -> Vec<Option<SampleGrid>> {
        match &self.experiment.samples {
            Some(list) => list.iter().copied().map(Some).collect(),
            None => vec![None],
        }
    }

    /// Samples per region for a grid (`L`); with mixed per-region grids, the
    /// first region's.
    pub fn samples_per_region(&self, grid: Option<SampleGrid>) -> usize {
        match grid {
            Some((a, e)) => a * e,
            None => self.regions.first().map_or(0, |r| r.n_azimuth * r.n_elevation),
        }
    }
}

fn finite(name: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(format!("{name} must be finite")))
    }
}

/// Angular box of a region: its azimuth span and, over its sampled
/// boundary, `[min θ, max θ]`.
pub fn region_box(region: &RegionSpec) -> Result<AodBox, ConfigError> {
    let phi = region.azimuth_span().map_err(|e| invalid(e.to_string()))?;
    let points = region.sample_points().map_err(|e| invalid(e.to_string()))?;
    let lo = points.iter().map(|p| p.theta).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.theta).fold(f64::NEG_INFINITY, f64::max);
    Ok(AodBox { theta: (lo, hi), phi })
}

impl RawConfig {
    fn validate(self) -> Result<ScenarioConfig, ConfigError> {
        let array = ArrayGeometry::new(self.array.m1, self.array.m2, self.array.spacing_ratio)
            .map_err(|e| invalid(format!("array: {e}")))?;
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() {
            return Err(invalid("sigma2 must be positive"));
        }
        let regions = self
            .regions
            .iter()
            .enumerate()
            .map(|(i, r)| r.to_spec().map_err(|e| invalid(format!("region {i}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;

        let channel = match self.channel.model {
            ChannelModel::Rayleigh => ChannelConfig::Rayleigh,
            ChannelModel::Clustered => {
                let c = &self.channel;
                let mean_aod = match c.aod {
                    AodMode::Broadside => {
                        MeanAod::Fixed { theta: std::f64::consts::FRAC_PI_2, phi: std::f64::consts::FRAC_PI_2 }
                    }
                    AodMode::Toward => {
                        if regions.is_empty() {
                            return Err(invalid("aod = \"toward\" needs at least one region"));
                        }
                        MeanAod::Boxes(regions.iter().map(region_box).collect::<Result<_, _>>()?)
                    }
                    AodMode::Away => {
                        if c.boxes.is_empty() {
                            MeanAod::Boxes(vec![AWAY_BOX])
                        } else {
                            MeanAod::Boxes(c.boxes.iter().map(|b| b.to_box()).collect())
                        }
                    }
                    AodMode::Boxes => MeanAod::Boxes(c.boxes.iter().map(|b| b.to_box()).collect()),
                };
                let params = ClusterParams { m_s: c.m_s, xi1: c.xi1, xi2: c.xi2, mean_aod, shared_mean: c.shared_mean };
                params.validate().map_err(|e| invalid(format!("channel: {e}")))?;
                ChannelConfig::Clustered(params)
            }
        };

        let e = self.experiment;
        if e.methods.is_empty() {
            return Err(invalid("experiment.methods is empty"));
        }
        if e.p_dbm.is_empty() || e.q_dbm.is_empty() {
            return Err(invalid("p_dbm and q_dbm sweeps must be non-empty"));
        }
        for &p in &e.p_dbm {
            finite("p_dbm", p)?;
        }
        for &q in &e.q_dbm {
            finite("q_dbm", q)?;
        }
        if e.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if e.m_r == 0 {
            return Err(invalid("m_r must be positive"));
        }
        let streams = e.streams.unwrap_or(e.m_r);
        if streams == 0 || streams > array.elements() {
            return Err(invalid("streams must be in 1..=M_t"));
        }
        let multi = e.methods.iter().any(|m| !m.single_user());
        if multi {
            if e.users.is_empty() || e.users.contains(&0) {
                return Err(invalid("users must list positive user counts"));
            }
            if let Some(&k) = e.users.iter().find(|&&k| k * e.m_r > array.elements()) {
                return Err(invalid(format!("K = {k} users with m_r = {} exceed M_t = {}", e.m_r, array.elements())));
            }
        }
        if let Some(grids) = &e.samples {
            if grids.is_empty() || grids.iter().any(|g| g[0] == 0 || g[1] == 0) {
                return Err(invalid("samples must list positive [n_azimuth, n_elevation] grids"));
            }
        }
        if !(0.0..=1.0).contains(&e.max_failure_rate) {
            return Err(invalid("max_failure_rate must be in [0, 1]"));
        }

        let d = SolverOptions::default();
        let s = self.solver;
        let solver = SolverOptions {
            step_mu: s.step_mu.unwrap_or(d.step_mu),
            step_lambda: s.step_lambda.unwrap_or(d.step_lambda),
            epsilon: s.epsilon.unwrap_or(d.epsilon),
            max_iterations: s.max_iterations.unwrap_or(d.max_iterations),
            mu_floor: s.mu_floor.unwrap_or(d.mu_floor),
            diminishing_after: s.diminishing_after.unwrap_or(d.diminishing_after),
            polish: s.polish.unwrap_or(d.polish),
            feasibility_tol: s.feasibility_tol.unwrap_or(d.feasibility_tol),
        };
        solver.validate().map_err(|e| invalid(format!("solver: {e}")))?;
        let od = OuterOptions::default();
        let outer = OuterOptions {
            epsilon: s.outer_epsilon.unwrap_or(od.epsilon),
            max_outer: s.max_outer.unwrap_or(od.max_outer),
        };
        if !(outer.epsilon > 0.0) || outer.max_outer == 0 {
            return Err(invalid("solver: outer_epsilon must be positive and max_outer at least 1"));
        }

        let cb = self.codebook;
        if cb.bits >= 32 {
            return Err(invalid("codebook bits must be below 32"));
        }
        let needs_entries = if e.methods.contains(&Method::MuCodebook) { e.users.iter().copied().max().unwrap_or(1) } else { 1 };
        if cb.file.is_none() && (1usize << cb.bits) < needs_entries {
            return Err(invalid("codebook has fewer entries than users"));
        }

        Ok(ScenarioConfig {
            array,
            sigma2: self.sigma2,
            regions,
            channel,
            experiment: ExperimentConfig {
                methods: e.methods,
                users: e.users,
                m_r: e.m_r,
                streams,
                p_dbm: e.p_dbm,
                q_dbm: e.q_dbm,
                samples: e.samples.map(|v| v.into_iter().map(|g| (g[0], g[1])).collect()),
                trials: e.trials,
                master_seed: e.master_seed,
                probe_points: e.probe_points,
                probe_seed: e.probe_seed,
                max_failure_rate: e.max_failure_rate,
                timing: e.timing,
            },
            solver,
            outer,
            codebook: CodebookConfig { bits: cb.bits, seed: cb.seed, file: cb.file },
        })
    }
}

impl RawBox {
    fn to_box(&self) -> AodBox {
        AodBox { theta: (self.theta[0], self.theta[1]), phi: (self.phi[0], self.phi[1]) }
    }
}

impl RawRegion {
    fn to_spec(&self) -> Result<RegionSpec, String> {
        let shape = match self.shape {
            ShapeKind::Polyline => {
                if self.center.is_some() || self.radius.is_some() {
                    return Err("polyline regions take segments, not center/radius".into());
                }
                let segments = self
                    .segments
                    .iter()
                    .map(|s| {
                        let start = (s.start[0], s.start[1]);
                        let end = (s.end[0], s.end[1]);
                        let mut seg = match s.omega {
                            Some(w) => Segment::new(w, start, end),
                            None => Segment::through(start, end),
                        }
                        .map_err(|e| e.to_string())?;
                        seg.facing = s.facing;
                        Ok(seg)
                    })
                    .collect::<Result<Vec<_>, String>>()?;
                Shape::Polyline(segments)
            }
            ShapeKind::Circle => {
                if !self.segments.is_empty() {
                    return Err("circle regions take center/radius, not segments".into());
                }
                let c = self.center.ok_or("circle needs a center")?;
                let radius = self.radius.ok_or("circle needs a radius")?;
                Shape::Circle { center: (c[0], c[1]), radius }
            }
        };
        let spec = RegionSpec {
            shape,
            // Placeholder; the Q sweep sets the real value.
            q_threshold: 1.0,
            height_span: (self.height_span[0], self.height_span[1]),
            n_azimuth: self.n_azimuth,
            n_elevation: self.n_elevation,
            pathloss_gamma: self.pathloss_gamma,
        };
        spec.validate().map_err(|e| e.to_string())?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [[regions]]
        shape = "circle"
        center = [-6000.0, 4000.0]
        radius = 800.0

        [experiment]
        methods = ["su_optimal"]
        p_dbm = [40.0]
        q_dbm = [-80.0]
        trials = 3
    "#;

    #[test]
    fn defaults_fill_in() {
        let c = ScenarioConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.array, ArrayGeometry::default());
        assert_eq!(c.sigma2, 1.0);
        assert_eq!(c.experiment.streams, 2);
        assert_eq!(c.experiment.users, vec![1]);
        assert_eq!(c.regions[0].n_azimuth * c.regions[0].n_elevation, 50);
        assert_eq!(c.solver, SolverOptions::default());
        assert_eq!(c.codebook.bits, 7);
        assert_eq!(c.channel, ChannelConfig::Rayleigh);
    }

    #[test]
    fn rejects_bad_values() {
        for (from, to) in [
            ("trials = 3", "trials = 0"),
            ("p_dbm = [40.0]", "p_dbm = []"),
            ("q_dbm = [-80.0]", "q_dbm = [nan]"),
            ("radius = 800.0", "radius = -1.0"),
            ("methods = [\"su_optimal\"]", "methods = [\"nope\"]"),
            ("trials = 3", "trials = 3\nunknown_key = 1"),
        ] {
            let text = MINIMAL.replace(from, to);
            assert!(ScenarioConfig::parse(&text).is_err(), "accepted: {to}");
        }
    }

    #[test]
    fn too_many_users_rejected() {
        let text = MINIMAL.replace("methods = [\"su_optimal\"]", "methods = [\"mu_bd\"]\nusers = [19]");
        assert!(ScenarioConfig::parse(&text).is_err());
    }

    #[test]
    fn regions_at_sets_threshold_and_grid() {
        let c = ScenarioConfig::parse(MINIMAL).unwrap();
        let r = c.regions_at(-80.0, Some((2, 2)));
        assert!((r[0].q_threshold - 1e-8).abs() < 1e-20);
        assert_eq!((r[0].n_azimuth, r[0].n_elevation), (2, 2));
        assert_eq!(c.samples_per_region(Some((2, 2))), 4);
        assert_eq!(c.samples_per_region(None), 50);
    }

    #[test]
    fn toward_boxes_cover_each_region() {
        let text = MINIMAL.replace("[experiment]", "[channel]\nmodel = \"clustered\"\naod = \"toward\"\n\n[experiment]");
        let c = ScenarioConfig::parse(&text).unwrap();
        let ChannelConfig::Clustered(p) = c.channel else { panic!("clustered expected") };
        let MeanAod::Boxes(b) = p.mean_aod else { panic!("boxes expected") };
        assert_eq!(b.len(), 1);
        let (lo, hi) = c.regions[0].azimuth_span().unwrap();
        assert_eq!(b[0].phi, (lo, hi));
        assert!((b[0].theta.1 - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!(b[0].theta.0 > 1.0 && b[0].theta.0 < b[0].theta.1);
    }

    #[test]
    fn away_box_default() {
        let text = MINIMAL.replace("[experiment]", "[channel]\nmodel = \"clustered\"\naod = \"away\"\n\n[experiment]");
        let c = ScenarioConfig::parse(&text).unwrap();
        let ChannelConfig::Clustered(p) = c.channel else { panic!("clustered expected") };
        assert_eq!(p.mean_aod, MeanAod::Boxes(vec![AWAY_BOX]));
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
    }
}
