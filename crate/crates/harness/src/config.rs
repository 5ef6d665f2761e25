//! Experiment configuration files.
//!
//! A config is one JSON object with a top-level `kind` of `"ber-sweep"` or
//! `"rendezvous"`. Unknown fields are rejected. Every problem is reported
//! with the dotted path of the offending field.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::Deserialize;
use serde_json::Value;

use evocomm_core::detectors::SaelmConfig;
use evocomm_core::evolution::GaConfig;
use evocomm_core::phy::MIN_BER_SYMBOLS;
use evocomm_core::rendezvous::{contiguous_clusters, SeqlConfig, SwarmConfig};

use crate::error::{HarnessError, Result};

/// Smallest dataset that still leaves a usable training, validation and test split.
pub const MIN_SAMPLES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    BerSweep,
    Rendezvous,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 2] = [ExperimentKind::BerSweep, ExperimentKind::Rendezvous];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::BerSweep => "ber-sweep",
            ExperimentKind::Rendezvous => "rendezvous",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExperimentConfig {
    BerSweep(BerSweepConfig),
    Rendezvous(RendezvousConfig),
}

impl ExperimentConfig {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            ExperimentConfig::BerSweep(_) => ExperimentKind::BerSweep,
            ExperimentConfig::Rendezvous(_) => ExperimentKind::Rendezvous,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ExperimentConfig::BerSweep(c) => c.seed,
            ExperimentConfig::Rendezvous(c) => c.seed,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            ExperimentConfig::BerSweep(c) => c.seed = seed,
            ExperimentConfig::Rendezvous(c) => c.seed = seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ExperimentConfig::BerSweep(c) => c.plan().map(drop),
            ExperimentConfig::Rendezvous(c) => c.plan().map(drop),
        }
    }
}

/// Detectors of a BER sweep. Declared in name order, so sorting by the
/// enum sorts by the CSV `method` column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    /// Closed-form Rayleigh BPSK BER; no simulation.
    Analytic,
    Elm,
    Saelm,
    Zf,
}

impl DetectorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DetectorKind::Analytic => "analytic",
            DetectorKind::Elm => "elm",
            DetectorKind::Saelm => "saelm",
            DetectorKind::Zf => "zf",
        }
    }

    pub fn is_learned(self) -> bool {
        matches!(self, DetectorKind::Elm | DetectorKind::Saelm)
    }
}

/// Size preset for a BER sweep.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// 50 hidden neurons, 20k samples, 1e5 BER symbols.
    #[default]
    Desk,
    /// 1000 hidden neurons, 100k samples, 1e6 BER symbols.
    Paper,
}

impl Scale {
    pub fn hidden_neurons(self) -> usize {
        match self {
            Scale::Desk => 50,
            Scale::Paper => 1000,
        }
    }

    pub fn samples(self) -> usize {
        match self {
            Scale::Desk => 20_000,
            Scale::Paper => 100_000,
        }
    }

    pub fn symbols(self) -> usize {
        match self {
            Scale::Desk => 100_000,
            Scale::Paper => 1_000_000,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SadeOverrides {
    pub population_size: Option<usize>,
    pub generations: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BerSweepConfig {
    pub seed: u64,
    pub repetitions: usize,
    pub snr_db: Vec<f64>,
    pub detectors: Vec<DetectorKind>,
    #[serde(default)]
    pub scale: Scale,
    /// Overrides the scale preset.
    pub hidden_neurons: Option<usize>,
    /// Overrides the scale preset.
    pub samples: Option<usize>,
    /// Overrides the scale preset.
    pub symbols: Option<usize>,
    #[serde(default)]
    pub sade: SadeOverrides,
}

/// A validated BER sweep with presets and overrides resolved.
#[derive(Clone, Debug)]
pub struct BerPlan {
    pub seed: u64,
    pub repetitions: usize,
    pub snr_db: Vec<f64>,
    pub detectors: Vec<DetectorKind>,
    pub hidden_neurons: usize,
    pub samples: usize,
    pub symbols: usize,
    pub saelm: SaelmConfig,
}

impl BerSweepConfig {
    pub fn plan(&self) -> Result<BerPlan> {
        check_repetitions(self.repetitions)?;
        check_grid("snr_db", &self.snr_db, |_| true, "finite")?;
        check_unique("detectors", &self.detectors)?;
        let hidden_neurons = self.hidden_neurons.unwrap_or(self.scale.hidden_neurons());
        let samples = self.samples.unwrap_or(self.scale.samples());
        let symbols = self.symbols.unwrap_or(self.scale.symbols());
        if hidden_neurons == 0 {
            return Err(HarnessError::invalid("hidden_neurons", "must be >= 1"));
        }
        if samples < MIN_SAMPLES {
            return Err(HarnessError::invalid(
                "samples",
                format!("must be >= {MIN_SAMPLES}, got {samples}"),
            ));
        }
        if symbols < MIN_BER_SYMBOLS {
            return Err(HarnessError::invalid(
                "symbols",
                format!("must be >= {MIN_BER_SYMBOLS}, got {symbols}"),
            ));
        }
        let mut saelm = SaelmConfig::new(hidden_neurons);
        if let Some(p) = self.sade.population_size {
            saelm.sade.population_size = p;
        }
        if let Some(g) = self.sade.generations {
            saelm.sade.generations = g;
        }
        saelm.validate().map_err(|e| from_core("", e))?;
        Ok(BerPlan {
            seed: self.seed,
            repetitions: self.repetitions,
            snr_db: self.snr_db.clone(),
            detectors: self.detectors.clone(),
            hidden_neurons,
            samples,
            symbols,
            saelm,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RendezvousMethod {
    Ql,
    Seql,
}

impl RendezvousMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            RendezvousMethod::Ql => "ql",
            RendezvousMethod::Seql => "seql",
        }
    }
}

/// Overrides of the default swarm; field names follow [`SwarmConfig`].
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwarmOverrides {
    pub n_uavs: Option<usize>,
    pub n_channels: Option<usize>,
    pub region: Option<f64>,
    pub cell: Option<f64>,
    /// Explicit UAV partition; defaults to three contiguous clusters.
    pub clusters: Option<Vec<Vec<usize>>>,
    pub episode_len: Option<usize>,
    pub lr: Option<f64>,
    pub gamma: Option<f64>,
    pub epsilon_start: Option<f64>,
    pub epsilon_end: Option<f64>,
    pub episode_budget: Option<usize>,
    pub convergence_window: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaOverrides {
    pub population_size: Option<usize>,
    pub generations: Option<usize>,
    pub crossover_rate: Option<f64>,
    pub mutation_rate: Option<f64>,
    pub elitism_count: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeqlOverrides {
    pub round_episodes: Option<usize>,
    #[serde(default)]
    pub ga: GaOverrides,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RendezvousConfig {
    pub seed: u64,
    pub repetitions: usize,
    pub sensing_ranges_m: Vec<f64>,
    pub methods: Vec<RendezvousMethod>,
    #[serde(default)]
    pub swarm: SwarmOverrides,
    #[serde(default)]
    pub seql: SeqlOverrides,
}

/// A validated rendezvous comparison.
#[derive(Clone, Debug)]
pub struct RendezvousPlan {
    pub seed: u64,
    pub repetitions: usize,
    pub sensing_ranges_m: Vec<f64>,
    pub methods: Vec<RendezvousMethod>,
    /// Swarm settings; `sensing_range` is replaced per grid point.
    pub swarm: SwarmConfig,
    pub seql: SeqlConfig,
}

impl RendezvousPlan {
    pub fn swarm_at(&self, sensing_range: f64) -> SwarmConfig {
        SwarmConfig {
            sensing_range,
            ..self.swarm.clone()
        }
    }
}

impl RendezvousConfig {
    pub fn plan(&self) -> Result<RendezvousPlan> {
        check_repetitions(self.repetitions)?;
        check_grid(
            "sensing_ranges_m",
            &self.sensing_ranges_m,
            |r| r > 0.0,
            "positive",
        )?;
        check_unique("methods", &self.methods)?;

        let o = &self.swarm;
        let d = SwarmConfig::default();
        let n_uavs = o.n_uavs.unwrap_or(d.n_uavs);
        let clusters = match (&o.clusters, o.n_uavs) {
            (Some(c), _) => c.clone(),
            (None, Some(n)) => contiguous_clusters(n, d.clusters.len().min(n)),
            (None, None) => d.clusters.clone(),
        };
        let swarm = SwarmConfig {
            n_uavs,
            n_channels: o.n_channels.unwrap_or(d.n_channels),
            region: o.region.unwrap_or(d.region),
            cell: o.cell.unwrap_or(d.cell),
            sensing_range: d.sensing_range,
            clusters,
            episode_len: o.episode_len.unwrap_or(d.episode_len),
            lr: o.lr.unwrap_or(d.lr),
            gamma: o.gamma.unwrap_or(d.gamma),
            epsilon_start: o.epsilon_start.unwrap_or(d.epsilon_start),
            epsilon_end: o.epsilon_end.unwrap_or(d.epsilon_end),
            episode_budget: o.episode_budget.unwrap_or(d.episode_budget),
            convergence_window: o.convergence_window.unwrap_or(d.convergence_window),
        };
        swarm.validate().map_err(|e| from_core("", e))?;

        let ds = SeqlConfig::default();
        let g = &self.seql.ga;
        let seql = SeqlConfig {
            round_episodes: self.seql.round_episodes.unwrap_or(ds.round_episodes),
            ga: GaConfig {
                population_size: g.population_size.unwrap_or(ds.ga.population_size),
                generations: g.generations.unwrap_or(ds.ga.generations),
                crossover_rate: g.crossover_rate.unwrap_or(ds.ga.crossover_rate),
                mutation_rate: g.mutation_rate.unwrap_or(ds.ga.mutation_rate),
                elitism_count: g.elitism_count.unwrap_or(ds.ga.elitism_count),
            },
        };
        seql.validate().map_err(|e| from_core("seql.", e))?;
        if self.methods.contains(&RendezvousMethod::Seql)
            && seql.round_episodes < swarm.convergence_window
        {
            return Err(HarnessError::invalid(
                "seql.round_episodes",
                format!(
                    "must be >= swarm.convergence_window ({}), got {}",
                    swarm.convergence_window, seql.round_episodes
                ),
            ));
        }
        Ok(RendezvousPlan {
            seed: self.seed,
            repetitions: self.repetitions,
            sensing_ranges_m: self.sensing_ranges_m.clone(),
            methods: self.methods.clone(),
            swarm,
            seql,
        })
    }
}

fn check_repetitions(repetitions: usize) -> Result<()> {
    if repetitions == 0 {
        return Err(HarnessError::invalid("repetitions", "must be >= 1"));
    }
    Ok(())
}

fn check_grid(field: &str, values: &[f64], ok: impl Fn(f64) -> bool, what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(HarnessError::invalid(field, "must not be empty"));
    }
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() || !ok(v) {
            return Err(HarnessError::invalid(
                format!("{field}[{i}]"),
                format!("must be {what}, got {v}"),
            ));
        }
        if values[..i].contains(&v) {
            return Err(HarnessError::invalid(
                format!("{field}[{i}]"),
                format!("duplicate value {v}"),
            ));
        }
    }
    Ok(())
}

fn check_unique<T: Eq + std::hash::Hash + fmt::Debug>(field: &str, values: &[T]) -> Result<()> {
    if values.is_empty() {
        return Err(HarnessError::invalid(field, "must not be empty"));
    }
    let mut seen = HashSet::new();
    for (i, v) in values.iter().enumerate() {
        if !seen.insert(v) {
            return Err(HarnessError::invalid(
                format!("{field}[{i}]"),
                format!("duplicate entry {v:?}"),
            ));
        }
    }
    Ok(())
}

/// Splits a core message such as `"swarm.n_uavs must be >= 1"` into field and reason.
fn from_core(prefix: &str, err: evocomm_core::Error) -> HarnessError {
    let msg = match err {
        evocomm_core::Error::Config(m) => m,
        other => return HarnessError::invalid(prefix.trim_end_matches('.'), other.to_string()),
    };
    let end = msg.find([' ', ':']).unwrap_or(msg.len());
    let (field, rest) = msg.split_at(end);
    let rest = rest.trim_start_matches(':').trim_start();
    HarnessError::invalid(format!("{prefix}{field}"), rest)
}

/// Parses and validates config text; `origin` only labels error messages.
pub fn parse_config(text: &str, origin: &Path) -> Result<ExperimentConfig> {
    let value: Value = serde_json::from_str(text).map_err(|e| HarnessError::ConfigParse {
        path: origin.to_path_buf(),
        message: e.to_string(),
    })?;
    let Value::Object(mut map) = value else {
        return Err(HarnessError::invalid(
            "(top level)",
            "expected a JSON object",
        ));
    };
    let expected = "expected \"ber-sweep\" or \"rendezvous\"";
    let kind = match map.remove("kind") {
        None => {
            return Err(HarnessError::invalid(
                "kind",
                format!("missing; {expected}"),
            ))
        }
        Some(Value::String(s)) => ExperimentKind::parse(&s).ok_or_else(|| {
            HarnessError::invalid(
                "kind",
                format!("unknown experiment kind \"{s}\"; {expected}"),
            )
        })?,
        Some(other) => {
            return Err(HarnessError::invalid(
                "kind",
                format!("must be a string, got {other}"),
            ))
        }
    };
    let body = Value::Object(map);
    let config = match kind {
        ExperimentKind::BerSweep => ExperimentConfig::BerSweep(typed(body)?),
        ExperimentKind::Rendezvous => ExperimentConfig::Rendezvous(typed(body)?),
    };
    config.validate()?;
    Ok(config)
}

fn typed<T: serde::de::DeserializeOwned>(body: Value) -> Result<T> {
    serde_path_to_error::deserialize(body).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." {
            "(top level)".to_string()
        } else {
            path
        };
        HarnessError::invalid(field, e.into_inner().to_string())
    })
}

/// Reads, parses and validates a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::ConfigRead {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, path)
}
