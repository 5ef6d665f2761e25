use crate::numerics::RngStream;
use crate::{Error, Result};

/// Swarm geometry, clustering and learning constants.
#[derive(Clone, Debug, PartialEq)]
pub struct SwarmConfig {
    pub n_uavs: usize,
    pub n_channels: usize,
    /// Side of the square region in meters.
    pub region: f64,
    /// Grid resolution in meters; must divide `region`.
    pub cell: f64,
    pub sensing_range: f64,
    /// Partition of `0..n_uavs`.
    pub clusters: Vec<Vec<usize>>,
    pub episode_len: usize,
    pub lr: f64,
    pub gamma: f64,
    /// Exploration rate at the first episode, decayed linearly to `epsilon_end`
    /// at the last episode of the budget.
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub episode_budget: usize,
    /// Consecutive fully connected greedy episodes required for convergence.
    pub convergence_window: usize,
}

impl Default for SwarmConfig {
    /// 15 UAVs in 3 clusters of 5, 3 channels, 100 m region, 5 m cells, 25 m range.
    fn default() -> Self {
        Self {
            n_uavs: 15,
            n_channels: 3,
            region: 100.0,
            cell: 5.0,
            sensing_range: 25.0,
            clusters: contiguous_clusters(15, 3),
            episode_len: 100,
            lr: 0.85,
            gamma: 0.99,
            epsilon_start: 0.3,
            epsilon_end: 0.01,
            episode_budget: 5000,
            convergence_window: 10,
        }
    }
}

/// Splits `0..n_uavs` into `n_clusters` runs of consecutive ids, sizes
/// differing by at most one.
pub fn contiguous_clusters(n_uavs: usize, n_clusters: usize) -> Vec<Vec<usize>> {
    if n_clusters == 0 {
        return Vec::new();
    }
    let base = n_uavs / n_clusters;
    let extra = n_uavs % n_clusters;
    let mut next = 0;
    (0..n_clusters)
        .map(|k| {
            let size = base + usize::from(k < extra);
            let c: Vec<usize> = (next..next + size).collect();
            next += size;
            c
        })
        .collect()
}

impl SwarmConfig {
    /// Cells per side.
    pub fn grid_size(&self) -> usize {
        (self.region / self.cell).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        if self.n_uavs == 0 {
            return err("swarm.n_uavs must be >= 1".into());
        }
        if self.n_channels == 0 {
            return err("swarm.n_channels must be >= 1".into());
        }
        if !(self.region.is_finite() && self.region > 0.0) {
            return err(format!(
                "swarm.region must be positive, got {}",
                self.region
            ));
        }
        if !(self.cell.is_finite() && self.cell > 0.0) {
            return err(format!("swarm.cell must be positive, got {}", self.cell));
        }
        let ratio = self.region / self.cell;
        if ratio < 1.0 || (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return err(format!(
                "swarm.cell ({}) must divide swarm.region ({})",
                self.cell, self.region
            ));
        }
        if !(self.sensing_range.is_finite() && self.sensing_range > 0.0) {
            return err(format!(
                "swarm.sensing_range must be positive, got {}",
                self.sensing_range
            ));
        }
        let mut seen = vec![false; self.n_uavs];
        for (k, cluster) in self.clusters.iter().enumerate() {
            if cluster.is_empty() {
                return err(format!("swarm.clusters[{k}] is empty"));
            }
            for &u in cluster {
                if u >= self.n_uavs {
                    return err(format!(
                        "swarm.clusters[{k}] names UAV {u}, but n_uavs is {}",
                        self.n_uavs
                    ));
                }
                if std::mem::replace(&mut seen[u], true) {
                    return err(format!("swarm.clusters: UAV {u} appears more than once"));
                }
            }
        }
        if let Some(u) = seen.iter().position(|s| !s) {
            return err(format!("swarm.clusters: UAV {u} is in no cluster"));
        }
        if self.episode_len == 0 {
            return err("swarm.episode_len must be >= 1".into());
        }
        if !(self.lr > 0.0 && self.lr <= 1.0) {
            return err(format!("swarm.lr must lie in (0, 1], got {}", self.lr));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return err(format!(
                "swarm.gamma must lie in [0, 1), got {}",
                self.gamma
            ));
        }
        for (name, e) in [
            ("epsilon_start", self.epsilon_start),
            ("epsilon_end", self.epsilon_end),
        ] {
            if !(0.0..=1.0).contains(&e) {
                return err(format!("swarm.{name} must lie in [0, 1], got {e}"));
            }
        }
        if self.episode_budget == 0 {
            return err("swarm.episode_budget must be >= 1".into());
        }
        if self.convergence_window == 0 {
            return err("swarm.convergence_window must be >= 1".into());
        }
        Ok(())
    }

    /// Exploration rate for the 0-based global episode index.
    pub fn epsilon_at(&self, episode: usize) -> f64 {
        if self.episode_budget <= 1 {
            return self.epsilon_start;
        }
        let t = (episode.min(self.episode_budget - 1)) as f64 / (self.episode_budget - 1) as f64;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * t
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Uav {
    pub x: usize,
    pub y: usize,
    pub channel: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SwarmState {
    pub uavs: Vec<Uav>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Move {
    Stay,
    North,
    South,
    East,
    West,
}

impl Move {
    pub const ALL: [Move; 5] = [Move::Stay, Move::North, Move::South, Move::East, Move::West];
}

/// Joint move and channel choice of one UAV.
///
/// Its table index is `move_index * n_channels + channel`, so index 0 is
/// "stay on channel 0".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Action {
    pub movement: Move,
    pub channel: usize,
}

impl Action {
    pub fn index(self, n_channels: usize) -> usize {
        let m = Move::ALL
            .iter()
            .position(|&m| m == self.movement)
            .unwrap_or(0);
        m * n_channels + self.channel
    }

    pub fn from_index(index: usize, n_channels: usize) -> Action {
        Action {
            movement: Move::ALL[index / n_channels],
            channel: index % n_channels,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub next_state: SwarmState,
    /// Connected same-cluster peers per UAV.
    pub rewards: Vec<f64>,
    pub connected_pairs: usize,
}

/// Validated swarm environment: clusters, pair lists and range test.
#[derive(Clone, Debug)]
pub struct SwarmEnv {
    config: SwarmConfig,
    grid: usize,
    cluster_of: Vec<usize>,
    /// All unordered same-cluster pairs `(a, b)` with `a < b`.
    pairs: Vec<(usize, usize)>,
    /// Squared sensing range in cell units.
    range_sq_cells: f64,
}

/// Validates `config` and draws a uniform initial state.
pub fn env_create(config: SwarmConfig, rng: &mut RngStream) -> Result<(SwarmEnv, SwarmState)> {
    let env = SwarmEnv::new(config)?;
    let state = env.random_state(rng);
    Ok((env, state))
}

impl SwarmEnv {
    pub fn new(config: SwarmConfig) -> Result<Self> {
        config.validate()?;
        let grid = config.grid_size();
        let mut cluster_of = vec![0; config.n_uavs];
        let mut pairs = Vec::new();
        for (k, cluster) in config.clusters.iter().enumerate() {
            let mut members = cluster.clone();
            members.sort_unstable();
            for (i, &a) in members.iter().enumerate() {
                cluster_of[a] = k;
                for &b in &members[i + 1..] {
                    pairs.push((a, b));
                }
            }
        }
        pairs.sort_unstable();
        let r = config.sensing_range / config.cell;
        Ok(Self {
            config,
            grid,
            cluster_of,
            pairs,
            range_sq_cells: r * r,
        })
    }

    pub fn config(&self) -> &SwarmConfig {
        &self.config
    }

    pub fn grid_size(&self) -> usize {
        self.grid
    }

    pub fn n_actions(&self) -> usize {
        Move::ALL.len() * self.config.n_channels
    }

    /// Local states per UAV: `grid² × n_channels`.
    pub fn n_local_states(&self) -> usize {
        self.grid * self.grid * self.config.n_channels
    }

    pub fn cluster_of(&self, uav: usize) -> usize {
        self.cluster_of[uav]
    }

    /// Unordered same-cluster pairs.
    pub fn intra_cluster_pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn random_uav(&self, rng: &mut RngStream) -> Uav {
        Uav {
            x: rng.below(self.grid),
            y: rng.below(self.grid),
            channel: rng.below(self.config.n_channels),
        }
    }

    pub fn random_state(&self, rng: &mut RngStream) -> SwarmState {
        SwarmState {
            uavs: (0..self.config.n_uavs)
                .map(|_| self.random_uav(rng))
                .collect(),
        }
    }

    pub fn check_state(&self, state: &SwarmState) -> Result<()> {
        if state.uavs.len() != self.config.n_uavs {
            return Err(Error::Contract(format!(
                "state has {} UAVs, environment has {}",
                state.uavs.len(),
                self.config.n_uavs
            )));
        }
        for (u, s) in state.uavs.iter().enumerate() {
            if s.x >= self.grid || s.y >= self.grid || s.channel >= self.config.n_channels {
                return Err(Error::Contract(format!(
                    "UAV {u} state {s:?} is outside the grid"
                )));
            }
        }
        Ok(())
    }

    /// Index of UAV `uav`'s own (cell, channel) in its Q-table.
    #[inline]
    pub fn local_state(&self, state: &SwarmState, uav: usize) -> usize {
        let s = state.uavs[uav];
        (s.x * self.grid + s.y) * self.config.n_channels + s.channel
    }

    /// Same channel and cell centers within sensing range. Cluster membership
    /// is not checked here.
    #[inline]
    pub fn in_contact(&self, a: Uav, b: Uav) -> bool {
        let dx = a.x.abs_diff(b.x) as f64;
        let dy = a.y.abs_diff(b.y) as f64;
        a.channel == b.channel && dx * dx + dy * dy <= self.range_sq_cells
    }

    /// Whether `a` and `b` are in the same cluster and in contact.
    pub fn connected(&self, state: &SwarmState, a: usize, b: usize) -> bool {
        a != b
            && self.cluster_of[a] == self.cluster_of[b]
            && self.in_contact(state.uavs[a], state.uavs[b])
    }

    pub fn connected_pairs(&self, state: &SwarmState) -> usize {
        self.pairs
            .iter()
            .filter(|&&(a, b)| self.in_contact(state.uavs[a], state.uavs[b]))
            .count()
    }

    /// Every cluster fully connected (vacuously true without pairs).
    pub fn fully_connected(&self, state: &SwarmState) -> bool {
        self.pairs
            .iter()
            .all(|&(a, b)| self.in_contact(state.uavs[a], state.uavs[b]))
    }

    /// Per-UAV rewards written into `rewards`; returns connected pairs.
    pub(crate) fn score_into(&self, state: &SwarmState, rewards: &mut [f64]) -> usize {
        rewards.fill(0.0);
        let mut pairs = 0;
        for &(a, b) in &self.pairs {
            if self.in_contact(state.uavs[a], state.uavs[b]) {
                rewards[a] += 1.0;
                rewards[b] += 1.0;
                pairs += 1;
            }
        }
        pairs
    }

    /// Applies one action to one UAV, clamping at the border.
    #[inline]
    pub(crate) fn apply(&self, uav: &mut Uav, action: Action) {
        let last = self.grid - 1;
        match action.movement {
            Move::Stay => {}
            Move::North => uav.y = (uav.y + 1).min(last),
            Move::South => uav.y = uav.y.saturating_sub(1),
            Move::East => uav.x = (uav.x + 1).min(last),
            Move::West => uav.x = uav.x.saturating_sub(1),
        }
        uav.channel = action.channel;
    }

    pub fn step(&self, state: &SwarmState, actions: &[Action]) -> Result<StepOutcome> {
        self.check_state(state)?;
        if actions.len() != self.config.n_uavs {
            return Err(Error::Contract(format!(
                "expected {} actions, got {}",
                self.config.n_uavs,
                actions.len()
            )));
        }
        if let Some((u, a)) = actions
            .iter()
            .enumerate()
            .find(|(_, a)| a.channel >= self.config.n_channels)
        {
            return Err(Error::Contract(format!(
                "UAV {u} action selects channel {} of {}",
                a.channel, self.config.n_channels
            )));
        }
        let mut next = state.clone();
        for (uav, &a) in next.uavs.iter_mut().zip(actions) {
            self.apply(uav, a);
        }
        let mut rewards = vec![0.0; self.config.n_uavs];
        let connected_pairs = self.score_into(&next, &mut rewards);
        Ok(StepOutcome {
            next_state: next,
            rewards,
            connected_pairs,
        })
    }
}
