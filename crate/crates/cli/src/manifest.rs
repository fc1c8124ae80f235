//! Run manifests: defaults, config-file keys, and flag overrides.
//!
//! The config file is flat `key = value` text with `#` comments. Keys
//! mirror the flags of `regnet run` (kebab-case, without the leading
//! dashes); explicit flags win over file values.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use regnet::{ExperimentConfig, GenKind, GrammarVariant};

use crate::{CliError, RunArgs};

#[derive(Debug, Clone)]
pub enum GraphSource {
    File(PathBuf),
    Gen { kind: GenKind, e: Option<usize> },
}

/// Everything a run (or every member of a sweep) needs.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub grammar: GrammarVariant,
    pub epsilon: f64,
    pub beta: f64,
    pub seed: u64,
    pub steps: u64,
    pub metrics_every: u64,
    pub alpha_every: Option<u64>,
    pub snapshot_every: Option<u64>,
    pub n: Option<usize>,
    pub source: GraphSource,
    /// Pinned topology seed; sweep members otherwise use their run seed,
    /// making the starting graphs independent.
    pub topology_seed: Option<u64>,
    pub out_dir: PathBuf,
    pub dot: bool,
    pub seeds: Option<(u64, u64)>,
}

impl RunManifest {
    pub fn config_for(&self, n: usize, seed: u64) -> ExperimentConfig {
        let mut config = ExperimentConfig::new(n, self.grammar, self.epsilon, self.beta, seed);
        config.max_steps = self.steps;
        config.metrics_every = self.metrics_every;
        config.alpha_every = self.alpha_every;
        config.snapshot_every = self.snapshot_every;
        config
    }
}

#[derive(Debug, Default)]
struct Overlay {
    grammar: Option<GrammarVariant>,
    epsilon: Option<f64>,
    beta: Option<f64>,
    seed: Option<u64>,
    steps: Option<u64>,
    metrics_every: Option<u64>,
    alpha_every: Option<Option<u64>>,
    snapshot_every: Option<Option<u64>>,
    kind: Option<GenKind>,
    n: Option<usize>,
    e: Option<usize>,
    topology_seed: Option<u64>,
    graph: Option<PathBuf>,
    out_dir: Option<PathBuf>,
    dot: Option<bool>,
    seeds: Option<(u64, u64)>,
}

fn parse_num<T: FromStr>(value: &str) -> Result<T, String>
where
    T::Err: Display,
{
    value
        .parse()
        .map_err(|err| format!("bad value {value:?}: {err}"))
}

/// A cadence of 0 means "off".
fn cadence(value: u64) -> Option<u64> {
    (value != 0).then_some(value)
}

pub fn parse_seed_range(text: &str) -> Result<(u64, u64), String> {
    let (lo, hi) = text
        .split_once("..")
        .ok_or_else(|| format!("bad seed range {text:?}: expected `lo..hi`"))?;
    let lo = parse_num(lo.trim())?;
    let hi = parse_num(hi.trim())?;
    if lo > hi {
        return Err(format!("bad seed range {text:?}: {lo} > {hi}"));
    }
    Ok((lo, hi))
}

impl Overlay {
    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "grammar" => self.grammar = Some(value.parse()?),
            "epsilon" => self.epsilon = Some(parse_num(value)?),
            "beta" => self.beta = Some(parse_num(value)?),
            "seed" => self.seed = Some(parse_num(value)?),
            "steps" => self.steps = Some(parse_num(value)?),
            "metrics-every" => self.metrics_every = Some(parse_num(value)?),
            "alpha-every" => self.alpha_every = Some(cadence(parse_num(value)?)),
            "snapshot-every" => self.snapshot_every = Some(cadence(parse_num(value)?)),
            "kind" => self.kind = Some(value.parse()?),
            "n" => self.n = Some(parse_num(value)?),
            "e" => self.e = Some(parse_num(value)?),
            "topology-seed" => self.topology_seed = Some(parse_num(value)?),
            "graph" => self.graph = Some(PathBuf::from(value)),
            "out-dir" => self.out_dir = Some(PathBuf::from(value)),
            "dot" => {
                self.dot = Some(match value {
                    "true" => true,
                    "false" => false,
                    other => return Err(format!("bad value {other:?}: expected true or false")),
                })
            }
            "seeds" => self.seeds = Some(parse_seed_range(value)?),
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }
}

fn parse_file(path: &Path) -> Result<Overlay, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|err| CliError::Runtime(format!("{}: {err}", path.display())))?;
    let mut overlay = Overlay::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = |msg: String| CliError::Usage(format!("{}:{}: {msg}", path.display(), lineno + 1));
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| at("expected `key = value`".into()))?;
        overlay.set(key.trim(), value.trim()).map_err(at)?;
    }
    Ok(overlay)
}

pub fn resolve(args: &RunArgs) -> Result<RunManifest, CliError> {
    if args.seed.is_some() && args.seeds.is_some() {
        return Err(CliError::Usage(
            "--seed and --seeds are mutually exclusive".into(),
        ));
    }
    let mut o = match &args.config {
        Some(path) => parse_file(path)?,
        None => Overlay::default(),
    };

    if let Some(v) = &args.grammar {
        o.grammar = Some(v.parse().map_err(CliError::Usage)?);
    }
    if let Some(v) = args.epsilon {
        o.epsilon = Some(v);
    }
    if let Some(v) = args.beta {
        o.beta = Some(v);
    }
    if let Some(v) = args.seed {
        o.seed = Some(v);
        // An explicit single seed drops any sweep the file configured.
        o.seeds = None;
    }
    if let Some(v) = args.steps {
        o.steps = Some(v);
    }
    if let Some(v) = args.metrics_every {
        o.metrics_every = Some(v);
    }
    if let Some(v) = args.alpha_every {
        o.alpha_every = Some(cadence(v));
    }
    if let Some(v) = args.snapshot_every {
        o.snapshot_every = Some(cadence(v));
    }
    if let Some(v) = &args.kind {
        o.kind = Some(v.parse().map_err(CliError::Usage)?);
    }
    if let Some(v) = args.n {
        o.n = Some(v);
    }
    if let Some(v) = args.e {
        o.e = Some(v);
    }
    if let Some(v) = args.topology_seed {
        o.topology_seed = Some(v);
    }
    if let Some(v) = &args.graph {
        o.graph = Some(v.clone());
    }
    if args.out_dir != Path::new("out") || o.out_dir.is_none() {
        o.out_dir = Some(args.out_dir.clone());
    }
    if args.dot {
        o.dot = Some(true);
    }
    if let Some(v) = &args.seeds {
        o.seeds = Some(parse_seed_range(v).map_err(CliError::Usage)?);
    }

    let source = match (o.graph, o.kind) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "pass either a graph file or a topology kind, not both".into(),
            ))
        }
        (Some(path), None) => GraphSource::File(path),
        (None, Some(kind)) => GraphSource::Gen { kind, e: o.e },
        (None, None) => {
            return Err(CliError::Usage(
                "no starting graph: pass --graph, or --kind with --n".into(),
            ))
        }
    };
    if let (GraphSource::Gen { kind, .. }, None) = (&source, o.n) {
        match kind {
            GenKind::Prism | GenKind::CompleteBipartite33 | GenKind::Barbell => {}
            _ => return Err(CliError::Usage("--kind requires --n".into())),
        }
    }

    let manifest = RunManifest {
        grammar: o.grammar.unwrap_or(GrammarVariant::PhiStar),
        epsilon: o.epsilon.unwrap_or(0.1),
        beta: o.beta.unwrap_or(0.1),
        seed: o.seed.unwrap_or(0),
        steps: o.steps.unwrap_or(100_000),
        metrics_every: o.metrics_every.unwrap_or(100),
        alpha_every: o.alpha_every.unwrap_or(Some(100)),
        snapshot_every: o.snapshot_every.unwrap_or(None),
        n: o.n,
        source,
        topology_seed: o.topology_seed,
        out_dir: o.out_dir.unwrap_or_else(|| PathBuf::from("out")),
        dot: o.dot.unwrap_or(false),
        seeds: o.seeds,
    };
    // Engine validation needs a node count; probe with a placeholder when
    // the graph comes from a file.
    manifest
        .config_for(manifest.n.unwrap_or(2), manifest.seed)
        .validate()?;
    Ok(manifest)
}
