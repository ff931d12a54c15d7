//! TOML experiment configuration. Unknown keys are rejected so typos fail
//! loudly instead of silently falling back to defaults.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use loadcoord::contracts::{BipartiteFamily, Family, LaneLevelFamily, RegionalFamily};
use loadcoord::instance::Instance;
use loadcoord::pricing::{LogisticStaticOracle, Oracle, UniformStaticOracle};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub instance: InstanceSection,
    pub oracle: OracleSection,
    #[serde(default)]
    pub dfw: DfwSection,
    #[serde(default)]
    pub eval: EvalSection,
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSection {
    pub capacity: u64,
    pub nu: Option<f64>,
    /// Uniform alternate cost applied to every load...
    pub alternate_cost: Option<f64>,
    /// ...or an explicit per-load vector (exactly one must be given).
    pub alternate_costs: Option<Vec<f64>>,
    pub family: FamilySection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySection {
    /// "lane", "bipartite", or "regional".
    pub kind: String,
    pub num_loads: Option<usize>,
    pub n_left: Option<usize>,
    pub n_right: Option<usize>,
    /// Path (relative to the config file) of a text file with one
    /// "left right" index pair per line; `#` starts a comment.
    pub edge_file: Option<String>,
    pub num_slots: Option<usize>,
    pub colors: Option<Vec<usize>>,
    pub intervals: Option<Vec<[usize; 2]>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    /// "uniform" or "logistic".
    pub kind: String,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub k: Option<f64>,
    pub x0: Option<f64>,
    pub price_lo: Option<f64>,
    pub price_hi: Option<f64>,
    pub step: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DfwSection {
    pub epsilon: Option<f64>,
    pub max_iterations: Option<usize>,
}

impl Default for DfwSection {
    fn default() -> Self {
        Self { epsilon: None, max_iterations: None }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub delta: Option<f64>,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self { samples: None, seed: None, delta: None }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// "capacity" or "alternate_cost".
    pub axis: String,
    pub values: Vec<f64>,
}

pub struct LoadedConfig {
    pub cfg: ExperimentConfig,
    /// Directory of the config file; relative paths resolve against it.
    pub dir: PathBuf,
}

pub fn load_config(path: &Path) -> anyhow::Result<LoadedConfig> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let cfg: ExperimentConfig =
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    Ok(LoadedConfig { cfg, dir })
}

pub fn parse_edge_file(path: &Path, n_left: usize, n_right: usize) -> anyhow::Result<BipartiteFamily> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading edge file {}", path.display()))?;
    let mut edges = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let (a, b) = (it.next(), it.next());
        if it.next().is_some() {
            bail!("{}:{}: expected two indices per line", path.display(), lineno + 1);
        }
        let (Some(a), Some(b)) = (a, b) else {
            bail!("{}:{}: expected two indices per line", path.display(), lineno + 1);
        };
        let i: usize = a
            .parse()
            .with_context(|| format!("{}:{}: bad left index", path.display(), lineno + 1))?;
        let j: usize = b
            .parse()
            .with_context(|| format!("{}:{}: bad right index", path.display(), lineno + 1))?;
        if i >= n_left || j >= n_right {
            bail!(
                "{}:{}: edge ({i}, {j}) outside {n_left} x {n_right}",
                path.display(),
                lineno + 1
            );
        }
        // Left loads occupy 0..n_left, right loads n_left..n_left+n_right.
        edges.push((i, n_left + j));
    }
    let family = BipartiteFamily::new(
        (0..n_left).collect(),
        (n_left..n_left + n_right).collect(),
        edges,
    )?;
    Ok(family)
}

pub fn build_family(section: &FamilySection, dir: &Path) -> anyhow::Result<Family> {
    match section.kind.as_str() {
        "lane" => {
            let num_loads = section
                .num_loads
                .context("family.num_loads is required for kind = \"lane\"")?;
            Ok(Family::Lane(LaneLevelFamily { num_loads }))
        }
        "bipartite" => {
            let n_left = section.n_left.context("family.n_left is required")?;
            let n_right = section.n_right.context("family.n_right is required")?;
            let edge_file = section
                .edge_file
                .as_ref()
                .context("family.edge_file is required for kind = \"bipartite\"")?;
            let family = parse_edge_file(&dir.join(edge_file), n_left, n_right)?;
            Ok(Family::Bipartite(family))
        }
        "regional" => {
            let num_slots = section.num_slots.context("family.num_slots is required")?;
            let colors = section.colors.clone().context("family.colors is required")?;
            let intervals: Vec<(usize, usize)> = section
                .intervals
                .clone()
                .context("family.intervals is required")?
                .into_iter()
                .map(|[s, e]| (s, e))
                .collect();
            Ok(Family::Regional(RegionalFamily::new(num_slots, colors, intervals)?))
        }
        other => bail!("unknown family kind {other:?} (expected lane, bipartite, or regional)"),
    }
}

pub fn build_oracle(section: &OracleSection) -> anyhow::Result<Oracle> {
    match section.kind.as_str() {
        "uniform" => {
            let lo = section.lo.context("oracle.lo is required for kind = \"uniform\"")?;
            let hi = section.hi.context("oracle.hi is required for kind = \"uniform\"")?;
            Ok(Oracle::Uniform(UniformStaticOracle::new(lo, hi)?))
        }
        "logistic" => {
            let k = section.k.context("oracle.k is required for kind = \"logistic\"")?;
            let x0 = section.x0.context("oracle.x0 is required for kind = \"logistic\"")?;
            let lo = section.price_lo.unwrap_or(0.0);
            let hi = section.price_hi.context("oracle.price_hi is required")?;
            Ok(Oracle::Logistic(LogisticStaticOracle::new(k, x0, lo, hi, section.step)?))
        }
        other => bail!("unknown oracle kind {other:?} (expected uniform or logistic)"),
    }
}

pub fn build_instance(loaded: &LoadedConfig) -> anyhow::Result<Instance> {
    let cfg = &loaded.cfg;
    let family = build_family(&cfg.instance.family, &loaded.dir)?;
    let l = family.num_loads();
    let alternate_costs = match (&cfg.instance.alternate_cost, &cfg.instance.alternate_costs) {
        (Some(a), None) => vec![*a; l],
        (None, Some(v)) => {
            if v.len() != l {
                bail!("alternate_costs has {} entries but the family has {l} loads", v.len());
            }
            v.clone()
        }
        (Some(_), Some(_)) => bail!("give either alternate_cost or alternate_costs, not both"),
        (None, None) => bail!("one of alternate_cost or alternate_costs is required"),
    };
    let oracle = build_oracle(&cfg.oracle)?;
    let mut inst = Instance::new(
        alternate_costs,
        cfg.instance.capacity,
        family,
        vec![oracle; l],
    )?;
    if let Some(nu) = cfg.instance.nu {
        inst = inst.with_nu(nu)?;
    }
    Ok(inst)
}
