//! Flat `section.key = value` run configuration.
//!
//! The parser is strict: unknown keys, duplicates and malformed values are
//! errors that carry the offending line. [`RunConfig::to_text`] writes the
//! canonical form with every default spelled out, and parsing that text
//! gives back an identical configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::schemes::{Extrapolation, Variant};

#[derive(Debug, Clone, PartialEq)]
pub enum ModelChoice {
    AllenCahn { alpha: f64, lambda: f64 },
    CahnHilliard { alpha: f64, m0: f64, lambda: f64 },
    Pfc { epsilon: f64, beta: f64, mobility: f64, shift: bool },
    /// Volume and area targets default to the measures of the initial field.
    Vesicle {
        epsilon: f64,
        sigma1: f64,
        sigma2: f64,
        mobility: f64,
        volume: Option<f64>,
        area: Option<f64>,
    },
}

impl ModelChoice {
    pub fn name(&self) -> &'static str {
        match self {
            ModelChoice::AllenCahn { .. } => "allen-cahn",
            ModelChoice::CahnHilliard { .. } => "cahn-hilliard",
            ModelChoice::Pfc { .. } => "pfc",
            ModelChoice::Vesicle { .. } => "vesicle",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub choice: ModelChoice,
    /// Overrides the default energy shift.
    pub c0: Option<f64>,
    pub split_weight: f64,
    /// Adds the source term that makes the manufactured solution exact.
    pub manufactured: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub modes: Vec<usize>,
    pub lengths: Vec<f64>,
    pub origin: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchConfig {
    pub center: [f64; 2],
    pub side: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitConfig {
    Star { alpha: f64 },
    Crystal { mean: f64, c1: f64, c2: f64, patches: Vec<PatchConfig> },
    Spheres { centers: Vec<Vec<f64>>, radii: Vec<f64>, epsilon: f64 },
    /// Uniform noise drawn from the run seed.
    Random { mean: f64, amplitude: f64 },
    Constant { value: f64 },
    /// The manufactured solution at the start time.
    Manufactured,
}

impl InitConfig {
    pub fn name(&self) -> &'static str {
        match self {
            InitConfig::Star { .. } => "star",
            InitConfig::Crystal { .. } => "crystal",
            InitConfig::Spheres { .. } => "spheres",
            InitConfig::Random { .. } => "random",
            InitConfig::Constant { .. } => "constant",
            InitConfig::Manufactured => "manufactured",
        }
    }
}

/// How the BDF history is filled before the first step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartMode {
    /// Lower orders first, then the configured one.
    Ramp,
    /// Exact manufactured samples at the first `k` time levels.
    Exact,
}

impl StartMode {
    pub fn name(self) -> &'static str {
        match self {
            StartMode::Ramp => "ramp",
            StartMode::Exact => "exact",
        }
    }
}

impl FromStr for StartMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ramp" => Ok(StartMode::Ramp),
            "exact" => Ok(StartMode::Exact),
            _ => Err(Error::UnknownName {
                kind: "start mode",
                name: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSection {
    pub variant: Variant,
    pub order: usize,
    pub dt: f64,
    pub t_end: f64,
    pub gamma: f64,
    pub eps_k: f64,
    pub eta_exponent: Option<u32>,
    pub start: StartMode,
    pub extrapolation: Extrapolation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: Option<String>,
    pub snapshots: Vec<f64>,
    pub flush_every: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            snapshots: Vec::new(),
            flush_every: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorNorm {
    L2,
    H2,
}

impl ErrorNorm {
    pub fn name(self) -> &'static str {
        match self {
            ErrorNorm::L2 => "l2",
            ErrorNorm::H2 => "h2",
        }
    }
}

impl FromStr for ErrorNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l2" => Ok(ErrorNorm::L2),
            "h2" => Ok(ErrorNorm::H2),
            _ => Err(Error::UnknownName {
                kind: "error norm",
                name: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceConfig {
    pub variants: Vec<Variant>,
    pub orders: Vec<usize>,
    pub dts: Vec<f64>,
    pub norm: ErrorNorm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareConfig {
    pub variants: Vec<Variant>,
    pub dts: Vec<f64>,
    pub t_end: f64,
    pub reference_variant: Variant,
    pub reference_order: usize,
    pub reference_dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub grid: GridConfig,
    pub init: InitConfig,
    pub scheme: SchemeSection,
    pub output: OutputConfig,
    pub seed: u64,
    pub convergence: Option<ConvergenceConfig>,
    pub compare: Option<CompareConfig>,
}

/// Key/value pairs left to consume, with their source lines.
struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

fn config_err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| config_err(line, format!("expected `key = value`, found `{content}`")))?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(config_err(line, format!("malformed key `{key}`")));
            }
            if value.is_empty() {
                return Err(config_err(line, format!("key `{key}` has no value")));
            }
            if let Some((first, _)) = map.insert(key.to_string(), (line, value.to_string())) {
                return Err(config_err(line, format!("duplicate key `{key}` (first set on line {first})")));
            }
        }
        Ok(Self { map })
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.map.remove(key)
    }

    fn has_section(&self, prefix: &str) -> bool {
        self.map.keys().any(|k| k.starts_with(prefix))
    }

    fn parsed<V: FromStr>(&mut self, key: &str) -> Result<Option<V>>
    where
        V::Err: std::fmt::Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse::<V>()
                .map(Some)
                .map_err(|e| config_err(line, format!("`{key}`: cannot parse `{v}`: {e}"))),
        }
    }

    fn required<V: FromStr>(&mut self, key: &str) -> Result<V>
    where
        V::Err: std::fmt::Display,
    {
        self.parsed(key)?
            .ok_or_else(|| config_err(0, format!("missing required key `{key}`")))
    }

    fn or<V: FromStr>(&mut self, key: &str, default: V) -> Result<V>
    where
        V::Err: std::fmt::Display,
    {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    fn list<V: FromStr>(&mut self, key: &str) -> Result<Option<Vec<V>>>
    where
        V::Err: std::fmt::Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split(',')
                .map(|item| {
                    let item = item.trim();
                    item.parse::<V>()
                        .map_err(|e| config_err(line, format!("`{key}`: cannot parse `{item}`: {e}")))
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }

    /// `a b c; d e f` style lists of tuples.
    fn groups(&mut self, key: &str, width: usize) -> Result<Option<Vec<Vec<f64>>>> {
        let Some((line, v)) = self.take(key) else {
            return Ok(None);
        };
        let mut out = Vec::new();
        for group in v.split(';') {
            let nums = group
                .split_whitespace()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|e| config_err(line, format!("`{key}`: cannot parse `{s}`: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            if width > 0 && nums.len() != width {
                return Err(config_err(
                    line,
                    format!("`{key}`: each group needs {width} numbers, found {}", nums.len()),
                ));
            }
            out.push(nums);
        }
        Ok(Some(out))
    }

    fn finish(self) -> Result<()> {
        match self.map.into_iter().next() {
            None => Ok(()),
            Some((key, (line, _))) => Err(config_err(line, format!("unknown key `{key}`"))),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut e = Entries::parse(text)?;
        let model = parse_model(&mut e)?;
        let grid = GridConfig {
            modes: e.list("grid.n")?.ok_or_else(|| config_err(0, "missing required key `grid.n`"))?,
            lengths: e
                .list("grid.length")?
                .ok_or_else(|| config_err(0, "missing required key `grid.length`"))?,
            origin: e.list("grid.origin")?,
        };
        let init = parse_init(&mut e)?;
        let scheme = SchemeSection {
            variant: e.required("scheme.variant")?,
            order: e.required("scheme.order")?,
            dt: e.required("scheme.dt")?,
            t_end: e.required("scheme.t_end")?,
            gamma: e.or("scheme.gamma", 0.95)?,
            eps_k: e.or("scheme.eps_k", 1e-14)?,
            eta_exponent: e.parsed("scheme.eta_exponent")?,
            start: e.or("scheme.start", StartMode::Ramp)?,
            extrapolation: e.or("scheme.extrapolation", Extrapolation::Intermediate)?,
        };
        let output = OutputConfig {
            dir: e.parsed("output.dir")?,
            snapshots: e.list("output.snapshots")?.unwrap_or_default(),
            flush_every: e.or("output.flush_every", 100)?,
        };
        let seed = e.or("seed", 0)?;
        let convergence = if e.has_section("convergence.") {
            Some(ConvergenceConfig {
                variants: e
                    .list("convergence.variants")?
                    .ok_or_else(|| config_err(0, "missing required key `convergence.variants`"))?,
                orders: e
                    .list("convergence.orders")?
                    .ok_or_else(|| config_err(0, "missing required key `convergence.orders`"))?,
                dts: e
                    .list("convergence.dts")?
                    .ok_or_else(|| config_err(0, "missing required key `convergence.dts`"))?,
                norm: e.or("convergence.norm", ErrorNorm::L2)?,
            })
        } else {
            None
        };
        let compare = if e.has_section("compare.") {
            Some(CompareConfig {
                variants: e
                    .list("compare.variants")?
                    .ok_or_else(|| config_err(0, "missing required key `compare.variants`"))?,
                dts: e
                    .list("compare.dts")?
                    .ok_or_else(|| config_err(0, "missing required key `compare.dts`"))?,
                t_end: e.required("compare.t_end")?,
                reference_variant: e.or("compare.reference_variant", Variant::SemiImplicit)?,
                reference_order: e.or("compare.reference_order", 2)?,
                reference_dt: e.required("compare.reference_dt")?,
            })
        } else {
            None
        };
        e.finish()?;
        let cfg = RunConfig {
            model,
            grid,
            init,
            scheme,
            output,
            seed,
            convergence,
            compare,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks the cross-field rules; parameter ranges of the model itself
    /// are checked when it is built.
    pub fn validate(&self) -> Result<()> {
        let s = &self.scheme;
        let dim = self.grid.modes.len();
        if dim == 0 || dim > 3 || self.grid.lengths.len() != dim {
            return Err(Error::param("grid.n", "grid.n and grid.length need 1 to 3 matching entries"));
        }
        if self.grid.origin.as_ref().is_some_and(|o| o.len() != dim) {
            return Err(Error::param("grid.origin", "needs one entry per dimension"));
        }
        if !(s.dt > 0.0 && s.dt.is_finite()) {
            return Err(Error::param("scheme.dt", format!("must be > 0, got {}", s.dt)));
        }
        if !(s.t_end >= s.dt) {
            return Err(Error::param("scheme.t_end", "must be at least one step"));
        }
        if !(1..=s.variant.max_order()).contains(&s.order) {
            return Err(Error::param(
                "scheme.order",
                format!("{} supports orders 1..={}", s.variant, s.variant.max_order()),
            ));
        }
        if s.start == StartMode::Exact && !self.model.manufactured {
            return Err(Error::param("scheme.start", "exact seeding needs model.forcing = manufactured"));
        }
        if self.model.manufactured && self.init != InitConfig::Manufactured {
            return Err(Error::param("init.name", "a manufactured forcing needs init.name = manufactured"));
        }
        if self.output.flush_every == 0 {
            return Err(Error::param("output.flush_every", "must be >= 1"));
        }
        if let Some(t) = self.output.snapshots.iter().find(|t| !(**t >= 0.0)) {
            return Err(Error::param("output.snapshots", format!("negative time {t}")));
        }
        if let Some(c) = &self.convergence {
            if !self.model.manufactured {
                return Err(Error::param("convergence", "needs model.forcing = manufactured"));
            }
            if c.dts.len() < 3 || c.dts.windows(2).any(|w| !(w[1] < w[0])) || c.dts.iter().any(|d| !(*d > 0.0)) {
                return Err(Error::param("convergence.dts", "needs at least 3 positive, strictly decreasing steps"));
            }
            if c.variants.is_empty() || c.orders.is_empty() {
                return Err(Error::param("convergence", "variants and orders must not be empty"));
            }
        }
        if let Some(c) = &self.compare {
            if c.dts.is_empty() || c.variants.is_empty() {
                return Err(Error::param("compare", "variants and dts must not be empty"));
            }
            let finest = c.dts.iter().cloned().fold(f64::INFINITY, f64::min);
            if !(finest > 0.0) {
                return Err(Error::param("compare.dts", "steps must be positive"));
            }
            if !(c.reference_dt > 0.0 && c.reference_dt <= finest / 10.0 * (1.0 + 1e-12)) {
                return Err(Error::param(
                    "compare.reference_dt",
                    format!("must be positive and at most a tenth of the finest step {finest}"),
                ));
            }
            if !(c.t_end > 0.0) {
                return Err(Error::param("compare.t_end", "must be > 0"));
            }
        }
        Ok(())
    }

    /// Canonical text with every key present. Floats use the shortest
    /// representation that parses back to the same value.
    pub fn to_text(&self) -> String {
        let mut o = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(o, "{k} = {v}");
        };
        let m = &self.model;
        kv("model.name", m.choice.name().into());
        match &m.choice {
            ModelChoice::AllenCahn { alpha, lambda } => {
                kv("model.alpha", alpha.to_string());
                kv("model.lambda", lambda.to_string());
            }
            ModelChoice::CahnHilliard { alpha, m0, lambda } => {
                kv("model.alpha", alpha.to_string());
                kv("model.m0", m0.to_string());
                kv("model.lambda", lambda.to_string());
            }
            ModelChoice::Pfc {
                epsilon,
                beta,
                mobility,
                shift,
            } => {
                kv("model.epsilon", epsilon.to_string());
                kv("model.beta", beta.to_string());
                kv("model.mobility", mobility.to_string());
                kv("model.shift", shift.to_string());
            }
            ModelChoice::Vesicle {
                epsilon,
                sigma1,
                sigma2,
                mobility,
                volume,
                area,
            } => {
                kv("model.epsilon", epsilon.to_string());
                kv("model.sigma1", sigma1.to_string());
                kv("model.sigma2", sigma2.to_string());
                kv("model.mobility", mobility.to_string());
                if let Some(v) = volume {
                    kv("model.volume", v.to_string());
                }
                if let Some(a) = area {
                    kv("model.area", a.to_string());
                }
            }
        }
        if let Some(c0) = m.c0 {
            kv("model.c0", c0.to_string());
        }
        kv("model.split_weight", m.split_weight.to_string());
        kv("model.forcing", if m.manufactured { "manufactured" } else { "none" }.into());

        kv("grid.n", join(&self.grid.modes));
        kv("grid.length", join(&self.grid.lengths));
        if let Some(origin) = &self.grid.origin {
            kv("grid.origin", join(origin));
        }

        kv("init.name", self.init.name().into());
        match &self.init {
            InitConfig::Star { alpha } => kv("init.alpha", alpha.to_string()),
            InitConfig::Crystal { mean, c1, c2, patches } => {
                kv("init.mean", mean.to_string());
                kv("init.c1", c1.to_string());
                kv("init.c2", c2.to_string());
                let groups: Vec<String> = patches
                    .iter()
                    .map(|p| format!("{} {} {} {}", p.center[0], p.center[1], p.side, p.theta))
                    .collect();
                kv("init.patches", groups.join("; "));
            }
            InitConfig::Spheres {
                centers,
                radii,
                epsilon,
            } => {
                let groups: Vec<String> = centers
                    .iter()
                    .map(|c| c.iter().map(f64::to_string).collect::<Vec<_>>().join(" "))
                    .collect();
                kv("init.centers", groups.join("; "));
                kv("init.radii", join(radii));
                kv("init.epsilon", epsilon.to_string());
            }
            InitConfig::Random { mean, amplitude } => {
                kv("init.mean", mean.to_string());
                kv("init.amplitude", amplitude.to_string());
            }
            InitConfig::Constant { value } => kv("init.value", value.to_string()),
            InitConfig::Manufactured => {}
        }

        let s = &self.scheme;
        kv("scheme.variant", s.variant.to_string());
        kv("scheme.order", s.order.to_string());
        kv("scheme.dt", s.dt.to_string());
        kv("scheme.t_end", s.t_end.to_string());
        kv("scheme.gamma", s.gamma.to_string());
        kv("scheme.eps_k", s.eps_k.to_string());
        if let Some(p) = s.eta_exponent {
            kv("scheme.eta_exponent", p.to_string());
        }
        kv("scheme.start", s.start.name().into());
        kv("scheme.extrapolation", s.extrapolation.to_string());

        if let Some(dir) = &self.output.dir {
            kv("output.dir", dir.clone());
        }
        if !self.output.snapshots.is_empty() {
            kv("output.snapshots", join(&self.output.snapshots));
        }
        kv("output.flush_every", self.output.flush_every.to_string());
        kv("seed", self.seed.to_string());

        if let Some(c) = &self.convergence {
            kv("convergence.variants", join(&c.variants));
            kv("convergence.orders", join(&c.orders));
            kv("convergence.dts", join(&c.dts));
            kv("convergence.norm", c.norm.name().into());
        }
        if let Some(c) = &self.compare {
            kv("compare.variants", join(&c.variants));
            kv("compare.dts", join(&c.dts));
            kv("compare.t_end", c.t_end.to_string());
            kv("compare.reference_variant", c.reference_variant.to_string());
            kv("compare.reference_order", c.reference_order.to_string());
            kv("compare.reference_dt", c.reference_dt.to_string());
        }
        o
    }
}

fn join<V: ToString>(items: &[V]) -> String {
    items.iter().map(V::to_string).collect::<Vec<_>>().join(", ")
}

fn parse_model(e: &mut Entries) -> Result<ModelConfig> {
    let (line, name) = e
        .take("model.name")
        .ok_or_else(|| config_err(0, "missing required key `model.name`"))?;
    let choice = match name.as_str() {
        "allen-cahn" => ModelChoice::AllenCahn {
            alpha: e.required("model.alpha")?,
            lambda: e.or("model.lambda", 0.0)?,
        },
        "cahn-hilliard" => ModelChoice::CahnHilliard {
            alpha: e.required("model.alpha")?,
            m0: e.required("model.m0")?,
            lambda: e.or("model.lambda", 0.0)?,
        },
        "pfc" => ModelChoice::Pfc {
            epsilon: e.required("model.epsilon")?,
            beta: e.or("model.beta", 1.0)?,
            mobility: e.or("model.mobility", 1.0)?,
            shift: e.or("model.shift", false)?,
        },
        "vesicle" => ModelChoice::Vesicle {
            epsilon: e.required("model.epsilon")?,
            sigma1: e.required("model.sigma1")?,
            sigma2: e.required("model.sigma2")?,
            mobility: e.or("model.mobility", 1.0)?,
            volume: e.parsed("model.volume")?,
            area: e.parsed("model.area")?,
        },
        other => return Err(config_err(line, format!("unknown model `{other}`"))),
    };
    let manufactured = match e.take("model.forcing") {
        None => false,
        Some((_, v)) if v == "none" => false,
        Some((_, v)) if v == "manufactured" => true,
        Some((line, v)) => return Err(config_err(line, format!("unknown forcing `{v}`"))),
    };
    Ok(ModelConfig {
        choice,
        c0: e.parsed("model.c0")?,
        split_weight: e.or("model.split_weight", 0.5)?,
        manufactured,
    })
}

fn parse_init(e: &mut Entries) -> Result<InitConfig> {
    let (line, name) = e
        .take("init.name")
        .ok_or_else(|| config_err(0, "missing required key `init.name`"))?;
    Ok(match name.as_str() {
        "star" => InitConfig::Star {
            alpha: e.required("init.alpha")?,
        },
        "crystal" => {
            let groups = e
                .groups("init.patches", 4)?
                .ok_or_else(|| config_err(0, "missing required key `init.patches`"))?;
            InitConfig::Crystal {
                mean: e.required("init.mean")?,
                c1: e.required("init.c1")?,
                c2: e.required("init.c2")?,
                patches: groups
                    .into_iter()
                    .map(|g| PatchConfig {
                        center: [g[0], g[1]],
                        side: g[2],
                        theta: g[3],
                    })
                    .collect(),
            }
        }
        "spheres" => InitConfig::Spheres {
            centers: e
                .groups("init.centers", 0)?
                .ok_or_else(|| config_err(0, "missing required key `init.centers`"))?,
            radii: e
                .list("init.radii")?
                .ok_or_else(|| config_err(0, "missing required key `init.radii`"))?,
            epsilon: e.required("init.epsilon")?,
        },
        "random" => InitConfig::Random {
            mean: e.required("init.mean")?,
            amplitude: e.required("init.amplitude")?,
        },
        "constant" => InitConfig::Constant {
            value: e.required("init.value")?,
        },
        "manufactured" => InitConfig::Manufactured,
        other => return Err(config_err(line, format!("unknown initial condition `{other}`"))),
    })
}
