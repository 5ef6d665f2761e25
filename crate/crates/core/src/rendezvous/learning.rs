use super::env::{Action, SwarmEnv, SwarmState};
use crate::numerics::RngStream;
use crate::{Error, Result};

/// Independent tabular action values, one table per UAV.
#[derive(Clone, Debug, PartialEq)]
pub struct QTable {
    n_uavs: usize,
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    /// All-zero tables.
    pub fn new(n_uavs: usize, n_states: usize, n_actions: usize) -> Self {
        Self {
            n_uavs,
            n_states,
            n_actions,
            values: vec![0.0; n_uavs * n_states * n_actions],
        }
    }

    pub fn for_env(env: &SwarmEnv) -> Self {
        Self::new(env.config().n_uavs, env.n_local_states(), env.n_actions())
    }

    pub fn n_uavs(&self) -> usize {
        self.n_uavs
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    fn offset(&self, uav: usize, state: usize) -> usize {
        debug_assert!(uav < self.n_uavs && state < self.n_states);
        (uav * self.n_states + state) * self.n_actions
    }

    /// Action values of `uav` in local state `state`.
    #[inline]
    pub fn row(&self, uav: usize, state: usize) -> &[f64] {
        let o = self.offset(uav, state);
        &self.values[o..o + self.n_actions]
    }

    pub fn get(&self, uav: usize, state: usize, action: usize) -> f64 {
        self.row(uav, state)[action]
    }

    pub fn set(&mut self, uav: usize, state: usize, action: usize, value: f64) {
        let o = self.offset(uav, state);
        self.values[o + action] = value;
    }

    /// Every stored value, UAV-major.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `Q(s,a) += lr (r + gamma max_a' Q(s',a') - Q(s,a))`; touches only `(s, a)`.
    #[inline]
    #[allow(clippy::too_many_arguments)]
    pub fn update(
        &mut self,
        uav: usize,
        s: usize,
        a: usize,
        reward: f64,
        s_next: usize,
        lr: f64,
        gamma: f64,
    ) {
        let future = self
            .row(uav, s_next)
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let o = self.offset(uav, s) + a;
        let q = self.values[o];
        self.values[o] = q + lr * (reward + gamma * future - q);
    }

    /// Greedy action; ties go to the lowest index.
    #[inline]
    pub fn greedy(&self, uav: usize, state: usize) -> usize {
        let row = self.row(uav, state);
        let mut best = 0;
        for (i, &v) in row.iter().enumerate().skip(1) {
            if v > row[best] {
                best = i;
            }
        }
        best
    }

    /// Epsilon-greedy choice. Always consumes one uniform draw, plus one
    /// more when exploring.
    #[inline]
    pub fn select_action(
        &self,
        uav: usize,
        state: usize,
        epsilon: f64,
        rng: &mut RngStream,
    ) -> usize {
        if rng.bernoulli(epsilon) {
            rng.below(self.n_actions)
        } else {
            self.greedy(uav, state)
        }
    }
}

/// Episode window of one learning round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RoundPlan {
    /// Learning episodes this round may use.
    pub max_episodes: usize,
    /// Global index of the round's first episode (drives the epsilon schedule).
    pub episode_offset: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundResult {
    pub initial_state: SwarmState,
    /// State at the end of the last learning episode.
    pub final_state: SwarmState,
    pub episodes_used: usize,
    /// Mean connected same-cluster pairs per step, one entry per learning episode.
    pub throughput_trace: Vec<f64>,
    pub converged: bool,
}

/// Outcome of one rollout.
struct Rollout {
    final_state: SwarmState,
    mean_pairs: f64,
}

/// Reusable buffers for rollouts.
struct Scratch {
    states: Vec<usize>,
    actions: Vec<usize>,
    rewards: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            states: vec![0; n],
            actions: vec![0; n],
            rewards: vec![0.0; n],
        }
    }
}

fn learning_episode(
    env: &SwarmEnv,
    initial: &SwarmState,
    q: &mut QTable,
    epsilon: f64,
    scratch: &mut Scratch,
    rng: &mut RngStream,
) -> Rollout {
    let cfg = env.config();
    let n_ch = cfg.n_channels;
    let mut state = initial.clone();
    let mut pair_sum = 0usize;
    for _ in 0..cfg.episode_len {
        for u in 0..cfg.n_uavs {
            let s = env.local_state(&state, u);
            scratch.states[u] = s;
            scratch.actions[u] = q.select_action(u, s, epsilon, rng);
        }
        for (uav, &a) in state.uavs.iter_mut().zip(&scratch.actions) {
            env.apply(uav, Action::from_index(a, n_ch));
        }
        pair_sum += env.score_into(&state, &mut scratch.rewards);
        for u in 0..cfg.n_uavs {
            let s_next = env.local_state(&state, u);
            q.update(
                u,
                scratch.states[u],
                scratch.actions[u],
                scratch.rewards[u],
                s_next,
                cfg.lr,
                cfg.gamma,
            );
        }
    }
    Rollout {
        final_state: state,
        mean_pairs: pair_sum as f64 / cfg.episode_len as f64,
    }
}

/// Greedy rollout without learning; returns the final state.
pub fn greedy_rollout(env: &SwarmEnv, initial: &SwarmState, q: &QTable) -> SwarmState {
    let cfg = env.config();
    let mut state = initial.clone();
    for _ in 0..cfg.episode_len {
        for u in 0..cfg.n_uavs {
            let a = q.greedy(u, env.local_state(&state, u));
            env.apply(&mut state.uavs[u], Action::from_index(a, cfg.n_channels));
        }
    }
    state
}

fn check_table(env: &SwarmEnv, q: &QTable) -> Result<()> {
    let want = (env.config().n_uavs, env.n_local_states(), env.n_actions());
    let got = (q.n_uavs(), q.n_states(), q.n_actions());
    if want != got {
        return Err(Error::Contract(format!(
            "Q-table shape {got:?} does not match environment {want:?}"
        )));
    }
    Ok(())
}

/// Runs learning episodes from `initial` until convergence or the plan's
/// episode limit.
///
/// Each learning episode restarts at `initial`, acts epsilon-greedily and
/// updates every UAV's table after every step. After each one, a greedy
/// rollout from `initial` is checked: the round converges once
/// `convergence_window` consecutive greedy rollouts end fully connected.
pub fn ql_run_round(
    env: &SwarmEnv,
    initial: &SwarmState,
    q: &mut QTable,
    plan: RoundPlan,
    rng: &mut RngStream,
) -> Result<RoundResult> {
    env.check_state(initial)?;
    check_table(env, q)?;
    let cfg = env.config();
    let mut scratch = Scratch::new(cfg.n_uavs);
    let mut trace = Vec::with_capacity(plan.max_episodes.min(cfg.episode_budget));
    let mut final_state = initial.clone();
    let mut streak = 0;
    let mut converged = false;
    for e in 0..plan.max_episodes {
        let epsilon = cfg.epsilon_at(plan.episode_offset + e);
        let ep = learning_episode(env, initial, q, epsilon, &mut scratch, rng);
        trace.push(ep.mean_pairs);
        final_state = ep.final_state;
        if env.fully_connected(&greedy_rollout(env, initial, q)) {
            streak += 1;
        } else {
            streak = 0;
        }
        if streak >= cfg.convergence_window {
            converged = true;
            break;
        }
    }
    Ok(RoundResult {
        initial_state: initial.clone(),
        final_state,
        episodes_used: trace.len(),
        throughput_trace: trace,
        converged,
    })
}

/// Whole-budget learning from one initial state, as a single round.
#[derive(Clone, Debug, PartialEq)]
pub struct QlOutcome {
    pub round: RoundResult,
    /// Episodes used when converged, otherwise the budget.
    pub episodes_to_convergence: usize,
    pub converged: bool,
    pub qtable: QTable,
}

/// Plain Q-learning baseline.
pub fn ql_run(env: &SwarmEnv, initial: &SwarmState, rng: &mut RngStream) -> Result<QlOutcome> {
    let mut q = QTable::for_env(env);
    let plan = RoundPlan {
        max_episodes: env.config().episode_budget,
        episode_offset: 0,
    };
    let round = ql_run_round(env, initial, &mut q, plan, rng)?;
    let converged = round.converged;
    Ok(QlOutcome {
        episodes_to_convergence: if converged {
            round.episodes_used
        } else {
            env.config().episode_budget
        },
        converged,
        round,
        qtable: q,
    })
}

/// Per-episode throughput in `[0, 1]`: mean connected pairs per step over
/// the number of same-cluster pairs. Without any pairs every episode
/// counts as fully connected.
pub fn measure_throughput(trace: &[f64], intra_cluster_pairs: usize) -> Result<Vec<f64>> {
    if trace.is_empty() {
        return Err(Error::Domain("throughput of an empty trace".into()));
    }
    if intra_cluster_pairs == 0 {
        return Ok(vec![1.0; trace.len()]);
    }
    Ok(trace
        .iter()
        .map(|&p| p / intra_cluster_pairs as f64)
        .collect())
}
