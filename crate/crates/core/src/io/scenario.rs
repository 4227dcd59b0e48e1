//! Scenario files: schema, cross-reference resolution and validation.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::functionals::{CatalogEntry, EntropyFunction};
use crate::lattice::{FiniteSpace, LatticeVector, PositiveMeasure};
use crate::ot::{CostMatrix, GroundCost, Transport, UotProblem};

pub const SUPPORTED_VERSIONS: &[&str] = &["1"];

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("validation error at {pointer}: {message}")]
    Validation { pointer: String, message: String },
}

impl LoadError {
    fn at(pointer: impl Into<String>, message: impl std::fmt::Display) -> Self {
        Self::Validation { pointer: pointer.into(), message: message.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io { .. } | Self::Parse { .. } => 2,
            Self::Validation { .. } => 3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub version: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub spaces: BTreeMap<String, SpaceSpec>,
    #[serde(default)]
    pub costs: BTreeMap<String, CostSpec>,
    #[serde(default)]
    pub measures: BTreeMap<String, MeasureSpec>,
    pub scenarios: Vec<Scenario>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub functional: f64,
    pub balanced: f64,
    pub unbalanced: f64,
    pub jko: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { functional: 1e-9, balanced: 1e-6, unbalanced: 1e-5, jko: 1e-6 }
    }
}

impl Tolerances {
    pub fn uniform(tol: f64) -> Self {
        Self { functional: tol, balanced: tol, unbalanced: tol, jko: tol }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceSpec {
    /// Unlabelled points without coordinates.
    Abstract { n: usize },
    Line { n: usize, #[serde(default = "unit")] spacing: f64 },
    Points { coords: Vec<Vec<f64>> },
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundSpec {
    SqEuclidean,
    Euclidean,
    ZeroDiagonalIndicator,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostSpec {
    Ground {
        rows: String,
        #[serde(default)]
        cols: Option<String>,
        ground: GroundSpec,
        #[serde(default)]
        lp: Option<f64>,
    },
    Table {
        #[serde(default)]
        rows: Option<String>,
        #[serde(default)]
        cols: Option<String>,
        values: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub space: String,
    pub values: Vec<f64>,
}

/// Either the name of a declared measure or inline values.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeasureRef {
    Name(String),
    Inline(Vec<f64>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TransportSpec {
    Exact,
    Entropic {
        eps: f64,
        #[serde(default)]
        alpha: Option<MeasureRef>,
        #[serde(default)]
        beta: Option<MeasureRef>,
    },
    Unbalanced { h0: EntropyFunction, h1: EntropyFunction },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expect {
    Pass,
    Fail,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalCheckKind {
    PDominance,
    QDominance,
    TotallySubstitutable,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    #[serde(default)]
    pub comparable: bool,
    #[serde(default)]
    pub snap: Option<f64>,
    #[serde(default)]
    pub corner_rate: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialCheckKind {
    Comparison,
    Standard,
    MaxPrinciple,
    SingleMaxPrinciple,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JkoCheckKind {
    Step,
    Stationarity,
    Comparison,
    TvContraction,
    MaxPrinciple,
    Flow,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Scenario {
    FunctionalCheck {
        #[serde(default)]
        name: Option<String>,
        check: FunctionalCheckKind,
        functional: CatalogEntry,
        /// Second functional of a dominance pair; defaults to `functional`.
        #[serde(default)]
        functional2: Option<CatalogEntry>,
        sampler: SamplerSpec,
        #[serde(default)]
        pairs: Option<usize>,
        #[serde(default)]
        expect: Option<Expect>,
    },
    OtSolve {
        #[serde(default)]
        name: Option<String>,
        transport: TransportSpec,
        cost: String,
        mu: MeasureRef,
        nu: MeasureRef,
        #[serde(default)]
        expect_cost: Option<f64>,
        #[serde(default)]
        expect: Option<Expect>,
    },
    PotentialComparison {
        #[serde(default)]
        name: Option<String>,
        check: PotentialCheckKind,
        transport: TransportSpec,
        cost: String,
        mu1: MeasureRef,
        #[serde(default)]
        mu2: Option<MeasureRef>,
        nu: MeasureRef,
        #[serde(default)]
        u: Vec<usize>,
        #[serde(default)]
        expect: Option<Expect>,
    },
    JkoCheck {
        #[serde(default)]
        name: Option<String>,
        check: JkoCheckKind,
        transport: TransportSpec,
        cost: String,
        #[serde(default)]
        f: Option<EntropyFunction>,
        m: MeasureRef,
        #[serde(default)]
        v: Option<Vec<f64>>,
        #[serde(default)]
        cost_scale: Option<f64>,
        #[serde(default)]
        mu: Option<MeasureRef>,
        #[serde(default)]
        mu2: Option<MeasureRef>,
        /// Multiple of `m` used as the input of a stationarity check.
        #[serde(default)]
        k: Option<f64>,
        #[serde(default)]
        c0: Option<f64>,
        #[serde(default)]
        c1: Option<f64>,
        #[serde(default)]
        steps: Option<usize>,
        #[serde(default)]
        expect: Option<Expect>,
    },
}

impl Scenario {
    pub fn type_tag(&self) -> &'static str {
        match self {
            Self::FunctionalCheck { .. } => "functional_check",
            Self::OtSolve { .. } => "ot_solve",
            Self::PotentialComparison { .. } => "potential_comparison",
            Self::JkoCheck { .. } => "jko_check",
        }
    }

    pub fn name(&self) -> Option<&str> {
        match self {
            Self::FunctionalCheck { name, .. }
            | Self::OtSolve { name, .. }
            | Self::PotentialComparison { name, .. }
            | Self::JkoCheck { name, .. } => name.as_deref(),
        }
    }

    pub fn expect(&self) -> Option<Expect> {
        match self {
            Self::FunctionalCheck { expect, .. }
            | Self::OtSolve { expect, .. }
            | Self::PotentialComparison { expect, .. }
            | Self::JkoCheck { expect, .. } => *expect,
        }
    }

    /// Descriptive tag of the property a verdict certifies.
    pub fn property_tag(&self) -> &'static str {
        match self {
            Self::FunctionalCheck { check: FunctionalCheckKind::PDominance, .. } => "p-dominance (submodularity)",
            Self::FunctionalCheck { check: FunctionalCheckKind::QDominance, .. } => "q-dominance (substitutability)",
            Self::FunctionalCheck { check: FunctionalCheckKind::TotallySubstitutable, .. } => "total substitutability",
            Self::OtSolve { .. } => "kantorovich duality",
            Self::PotentialComparison { check, .. } => match check {
                PotentialCheckKind::Comparison => "comparison principle for potentials",
                PotentialCheckKind::Standard => "standard comparison principle",
                PotentialCheckKind::MaxPrinciple => "maximum principle for potential differences",
                PotentialCheckKind::SingleMaxPrinciple => "maximum principle for a single potential",
            },
            Self::JkoCheck { check, .. } => match check {
                JkoCheckKind::Step => "unique proximal minimizer",
                JkoCheckKind::Stationarity => "stationary densities",
                JkoCheckKind::Comparison => "comparison principle for proximal steps",
                JkoCheckKind::TvContraction => "total-variation contraction",
                JkoCheckKind::MaxPrinciple => "maximum principle for proximal steps",
                JkoCheckKind::Flow => "minimizing movement",
            },
        }
    }
}

/// Fully resolved data of one scenario.
#[derive(Debug, Clone)]
pub enum Resolved {
    Functional,
    Ot { transport: Transport, cost: CostMatrix<f64>, mu: PositiveMeasure<f64>, nu: PositiveMeasure<f64> },
    Potential {
        transport: Transport,
        cost: CostMatrix<f64>,
        mu1: PositiveMeasure<f64>,
        mu2: Option<PositiveMeasure<f64>>,
        nu: PositiveMeasure<f64>,
    },
    Jko {
        transport: Transport,
        cost: CostMatrix<f64>,
        m: PositiveMeasure<f64>,
        v: LatticeVector<f64>,
        mu: Option<PositiveMeasure<f64>>,
        mu2: Option<PositiveMeasure<f64>>,
    },
}

#[derive(Debug, Clone)]
pub struct LoadedFile {
    pub file: ScenarioFile,
    pub resolved: Vec<Resolved>,
    /// JSON pointers of fields filled with defaults, with the value used.
    pub defaults: Vec<String>,
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { .. } | Segment::Unknown => {}
        }
    }
    if out.is_empty() {
        "/".into()
    } else {
        out
    }
}

pub fn load_scenario(path: &Path) -> Result<LoadedFile, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|e| LoadError::Io { path: path.display().to_string(), source: e })?;
    parse_scenario(&text)
}

pub fn parse_scenario(text: &str) -> Result<LoadedFile, LoadError> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| LoadError::Parse { line: e.line(), column: e.column(), message: e.to_string() })?;
    let top = file_level_defaults(&value);
    let file: ScenarioFile = serde_path_to_error::deserialize(value).map_err(|e| {
        let pointer = json_pointer(e.path());
        LoadError::at(pointer, e.into_inner())
    })?;
    let mut loaded = resolve(file)?;
    loaded.defaults.splice(0..0, top);
    Ok(loaded)
}

/// Top-level keys the file leaves to their defaults.
fn file_level_defaults(value: &serde_json::Value) -> Vec<String> {
    let Some(obj) = value.as_object() else { return Vec::new() };
    let mut out = Vec::new();
    if !obj.contains_key("seed") {
        out.push("/seed = 0".to_string());
    }
    let given = obj.get("tolerances").and_then(|t| t.as_object());
    let d = Tolerances::default();
    for (key, v) in [("functional", d.functional), ("balanced", d.balanced), ("unbalanced", d.unbalanced), ("jko", d.jko)] {
        if !given.is_some_and(|t| t.contains_key(key)) {
            out.push(format!("/tolerances/{key} = {v:e}"));
        }
    }
    out
}

struct Ctx {
    spaces: BTreeMap<String, Arc<FiniteSpace>>,
    costs: BTreeMap<String, CostMatrix<f64>>,
    measures: BTreeMap<String, PositiveMeasure<f64>>,
}

fn build_space(spec: &SpaceSpec) -> crate::error::Result<Arc<FiniteSpace>> {
    match spec {
        SpaceSpec::Abstract { n } => FiniteSpace::new(*n),
        SpaceSpec::Line { n, spacing } => FiniteSpace::line(*n, *spacing),
        SpaceSpec::Points { coords } => FiniteSpace::with_coords(coords.clone()),
    }
}

fn measure_error(ptr: &str, e: Error) -> LoadError {
    match e {
        Error::Negative { index, value } => LoadError::at(format!("{ptr}/{index}"), format!("negative mass {value}")),
        Error::NonFinite(index) => LoadError::at(format!("{ptr}/{index}"), "non-finite value"),
        other => LoadError::at(ptr, other),
    }
}

impl Ctx {
    fn space(&self, name: &str, ptr: &str) -> Result<Arc<FiniteSpace>, LoadError> {
        self.spaces.get(name).cloned().ok_or_else(|| LoadError::at(ptr, format!("unknown space `{name}`")))
    }

    fn cost(&self, name: &str, ptr: &str) -> Result<CostMatrix<f64>, LoadError> {
        self.costs.get(name).cloned().ok_or_else(|| LoadError::at(ptr, format!("unknown cost `{name}`")))
    }

    fn measure(&self, r: &MeasureRef, space: &Arc<FiniteSpace>, ptr: &str) -> Result<PositiveMeasure<f64>, LoadError> {
        let m = match r {
            MeasureRef::Name(name) => {
                self.measures.get(name).cloned().ok_or_else(|| LoadError::at(ptr, format!("unknown measure `{name}`")))?
            }
            MeasureRef::Inline(values) => {
                if values.len() != space.n_points {
                    return Err(LoadError::at(ptr, format!("expected {} entries, got {}", space.n_points, values.len())));
                }
                PositiveMeasure::new(space.clone(), values.clone()).map_err(|e| measure_error(ptr, e))?
            }
        };
        if m.len() != space.n_points {
            return Err(LoadError::at(ptr, format!("measure lives on {} points, expected {}", m.len(), space.n_points)));
        }
        // Named measures are declared on their own space; rebind to the cost's.
        PositiveMeasure::new(space.clone(), m.values().to_vec()).map_err(|e| measure_error(ptr, e))
    }

    fn transport(&self, t: &TransportSpec, cost: &CostMatrix<f64>, ptr: &str) -> Result<Transport, LoadError> {
        Ok(match t {
            TransportSpec::Exact => Transport::Exact,
            TransportSpec::Entropic { eps, alpha, beta } => {
                if !(*eps > 0.0 && eps.is_finite()) {
                    return Err(LoadError::at(format!("{ptr}/eps"), "eps must be positive"));
                }
                let ones = |s: &Arc<FiniteSpace>| PositiveMeasure::new(s.clone(), vec![1.0; s.n_points]);
                let alpha = match alpha {
                    Some(r) => self.measure(r, cost.rows(), &format!("{ptr}/alpha"))?,
                    None => ones(cost.rows()).map_err(|e| LoadError::at(ptr, e))?,
                };
                let beta = match beta {
                    Some(r) => self.measure(r, cost.cols(), &format!("{ptr}/beta"))?,
                    None => ones(cost.cols()).map_err(|e| LoadError::at(ptr, e))?,
                };
                Transport::Entropic { eps: *eps, alpha, beta }
            }
            TransportSpec::Unbalanced { h0, h1 } => {
                Transport::Unbalanced(UotProblem::new(*h0, *h1).map_err(|e| LoadError::at(ptr, e))?)
            }
        })
    }
}

fn resolve(file: ScenarioFile) -> Result<LoadedFile, LoadError> {
    if !SUPPORTED_VERSIONS.contains(&file.version.as_str()) {
        return Err(LoadError::at("/version", format!("unsupported version `{}`; supported: {:?}", file.version, SUPPORTED_VERSIONS)));
    }
    let mut ctx = Ctx { spaces: BTreeMap::new(), costs: BTreeMap::new(), measures: BTreeMap::new() };
    for (name, spec) in &file.spaces {
        let s = build_space(spec).map_err(|e| LoadError::at(format!("/spaces/{name}"), e))?;
        ctx.spaces.insert(name.clone(), s);
    }
    for (name, spec) in &file.measures {
        let ptr = format!("/measures/{name}");
        let space = ctx.space(&spec.space, &format!("{ptr}/space"))?;
        if spec.values.len() != space.n_points {
            return Err(LoadError::at(format!("{ptr}/values"), format!("expected {} entries, got {}", space.n_points, spec.values.len())));
        }
        let m = PositiveMeasure::new(space, spec.values.clone()).map_err(|e| measure_error(&format!("{ptr}/values"), e))?;
        ctx.measures.insert(name.clone(), m);
    }
    for (name, spec) in &file.costs {
        let ptr = format!("/costs/{name}");
        let c = match spec {
            CostSpec::Ground { rows, cols, ground, lp } => {
                let r = ctx.space(rows, &format!("{ptr}/rows"))?;
                let c = match cols {
                    Some(c) => ctx.space(c, &format!("{ptr}/cols"))?,
                    None => r.clone(),
                };
                let g = match (ground, lp) {
                    (_, Some(q)) => GroundCost::Lp(*q),
                    (GroundSpec::SqEuclidean, None) => GroundCost::SqEuclidean,
                    (GroundSpec::Euclidean, None) => GroundCost::Euclidean,
                    (GroundSpec::ZeroDiagonalIndicator, None) => GroundCost::ZeroDiagonalIndicator,
                };
                CostMatrix::from_ground(r, c, g)
            }
            CostSpec::Table { rows, cols, values } => {
                let n = values.len();
                let m = values.first().map_or(0, Vec::len);
                let r = match rows {
                    Some(s) => ctx.space(s, &format!("{ptr}/rows"))?,
                    None => FiniteSpace::new(n).map_err(|e| LoadError::at(&ptr, e))?,
                };
                let c = match cols {
                    Some(s) => ctx.space(s, &format!("{ptr}/cols"))?,
                    None if rows.is_some() && n == m => r.clone(),
                    None => FiniteSpace::new(m).map_err(|e| LoadError::at(&ptr, e))?,
                };
                CostMatrix::from_rows(r, c, values.clone())
            }
        }
        .map_err(|e| LoadError::at(&ptr, e))?;
        ctx.costs.insert(name.clone(), c);
    }
    let mut defaults = Vec::new();
    let mut resolved = Vec::with_capacity(file.scenarios.len());
    for (k, sc) in file.scenarios.iter().enumerate() {
        let ptr = format!("/scenarios/{k}");
        resolved.push(resolve_one(&ctx, sc, &ptr, &mut defaults)?);
    }
    Ok(LoadedFile { file, resolved, defaults })
}

pub const DEFAULT_PAIRS: usize = 1000;

fn resolve_one(ctx: &Ctx, sc: &Scenario, ptr: &str, defaults: &mut Vec<String>) -> Result<Resolved, LoadError> {
    match sc {
        Scenario::FunctionalCheck { functional, functional2, sampler, pairs, .. } => {
            let f = crate::functionals::build_catalog::<f64>(functional).map_err(|e| LoadError::at(format!("{ptr}/functional"), e))?;
            if let Some(f2) = functional2 {
                let g = crate::functionals::build_catalog::<f64>(f2).map_err(|e| LoadError::at(format!("{ptr}/functional2"), e))?;
                if g.dim != f.dim {
                    return Err(LoadError::at(format!("{ptr}/functional2"), "dimension differs from functional"));
                }
            }
            if sampler.lo.len() != f.dim || sampler.hi.len() != f.dim {
                return Err(LoadError::at(format!("{ptr}/sampler"), format!("sampler box must have dimension {}", f.dim)));
            }
            crate::functionals::BoxSampler::new(sampler.lo.clone(), sampler.hi.clone(), 0)
                .map_err(|e| LoadError::at(format!("{ptr}/sampler"), e))?;
            if pairs.is_none() {
                defaults.push(format!("{ptr}/pairs = {DEFAULT_PAIRS}"));
            }
            Ok(Resolved::Functional)
        }
        Scenario::OtSolve { transport, cost, mu, nu, .. } => {
            let c = ctx.cost(cost, &format!("{ptr}/cost"))?;
            let mu = ctx.measure(mu, c.rows(), &format!("{ptr}/mu"))?;
            let nu = ctx.measure(nu, c.cols(), &format!("{ptr}/nu"))?;
            let t = ctx.transport(transport, &c, &format!("{ptr}/transport"))?;
            Ok(Resolved::Ot { transport: t, cost: c, mu, nu })
        }
        Scenario::PotentialComparison { check, transport, cost, mu1, mu2, nu, u, .. } => {
            let c = ctx.cost(cost, &format!("{ptr}/cost"))?;
            let mu1 = ctx.measure(mu1, c.rows(), &format!("{ptr}/mu1"))?;
            let mu2 = mu2.as_ref().map(|r| ctx.measure(r, c.rows(), &format!("{ptr}/mu2"))).transpose()?;
            let nu = ctx.measure(nu, c.cols(), &format!("{ptr}/nu"))?;
            let t = ctx.transport(transport, &c, &format!("{ptr}/transport"))?;
            if *check != PotentialCheckKind::SingleMaxPrinciple && mu2.is_none() {
                return Err(LoadError::at(format!("{ptr}/mu2"), "required by this check"));
            }
            if let Some(&i) = u.iter().find(|&&i| i >= c.n_rows()) {
                return Err(LoadError::at(format!("{ptr}/u"), format!("index {i} out of range")));
            }
            Ok(Resolved::Potential { transport: t, cost: c, mu1, mu2, nu })
        }
        Scenario::JkoCheck { check, transport, cost, m, v, mu, mu2, c0, c1, k, steps, f, cost_scale, .. } => {
            let c = ctx.cost(cost, &format!("{ptr}/cost"))?;
            let m = ctx.measure(m, c.cols(), &format!("{ptr}/m"))?;
            let v = match v {
                Some(v) => LatticeVector::new(c.cols().clone(), v.clone()).map_err(|e| LoadError::at(format!("{ptr}/v"), e))?,
                None => LatticeVector::zeros(c.cols().clone()),
            };
            let mu = mu.as_ref().map(|r| ctx.measure(r, c.rows(), &format!("{ptr}/mu"))).transpose()?;
            let mu2 = mu2.as_ref().map(|r| ctx.measure(r, c.rows(), &format!("{ptr}/mu2"))).transpose()?;
            let t = ctx.transport(transport, &c, &format!("{ptr}/transport"))?;
            let need = |ok: bool, field: &str| if ok { Ok(()) } else { Err(LoadError::at(format!("{ptr}/{field}"), "required by this check")) };
            match check {
                JkoCheckKind::Step | JkoCheckKind::Flow => need(mu.is_some(), "mu")?,
                JkoCheckKind::Stationarity => need(k.is_some(), "k")?,
                JkoCheckKind::Comparison | JkoCheckKind::TvContraction => {
                    need(mu.is_some(), "mu")?;
                    need(mu2.is_some(), "mu2")?;
                }
                JkoCheckKind::MaxPrinciple => {
                    need(mu.is_some(), "mu")?;
                    need(c0.is_some(), "c0")?;
                    need(c1.is_some(), "c1")?;
                }
            }
            if f.is_none() {
                defaults.push(format!("{ptr}/f = boltzmann"));
            }
            if cost_scale.is_none() {
                defaults.push(format!("{ptr}/cost_scale = 1"));
            }
            if *check == JkoCheckKind::Flow && steps.is_none() {
                defaults.push(format!("{ptr}/steps = 1"));
            }
            Ok(Resolved::Jko { transport: t, cost: c, m, v, mu, mu2 })
        }
    }
}
