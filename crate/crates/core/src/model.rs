//! Domain types and the single-agent decision rule.
//!
//! An agent's opinion of item α is `γ·s + (1−γ)·l`, where `s` is the fraction
//! of observed neighbors that already consumed α and `l` is the agent's fixed
//! liking. Each step the agent consumes the unconsumed item of highest opinion.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::topology::{SocialGraph, TopologySpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentId(usize);

impl AgentId {
    pub fn new(index: usize) -> Self {
        AgentId(index)
    }

    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ItemId(usize);

impl ItemId {
    pub fn new(index: usize) -> Self {
        ItemId(index)
    }

    pub fn index(self) -> usize {
        self.0
    }
}

/// Complete description of a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub n_agents: usize,
    pub n_items: usize,
    /// Number of steps T.
    pub horizon: usize,
    /// γ
    pub social_pressure: f64,
    /// σ
    pub intra_item_deviation: f64,
    pub topology: TopologySpec,
    pub master_seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            n_agents: 100,
            n_items: 100,
            horizon: 20,
            social_pressure: 0.0,
            intra_item_deviation: 1.0,
            topology: TopologySpec::Complete,
            master_seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_agents == 0 {
            return Err(Error::InvalidConfig("number of agents must be positive".into()));
        }
        if self.n_items == 0 {
            return Err(Error::InvalidConfig("number of items must be positive".into()));
        }
        if self.horizon > self.n_items {
            return Err(Error::InvalidConfig(format!(
                "steps T={} exceed items M={}; T <= M is required so every agent \
                 can find an unconsumed item",
                self.horizon, self.n_items
            )));
        }
        check_gamma(self.social_pressure)?;
        let sigma = self.intra_item_deviation;
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "sigma must be finite and non-negative, got {sigma}"
            )));
        }
        self.topology.validate(self.n_agents)
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        ModelConfig {
            social_pressure: gamma,
            ..self.clone()
        }
    }

    pub fn with_sigma(&self, sigma: f64) -> Self {
        ModelConfig {
            intra_item_deviation: sigma,
            ..self.clone()
        }
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidConfig(format!(
            "gamma must lie in [0, 1], got {gamma}"
        )));
    }
    Ok(())
}

/// Fixed N×M liking values, row-major by agent.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceMatrix {
    n_agents: usize,
    n_items: usize,
    values: Vec<f64>,
}

impl PreferenceMatrix {
    pub fn from_rows(n_agents: usize, n_items: usize, values: Vec<f64>) -> Result<Self> {
        if n_agents == 0 || n_items == 0 {
            return Err(Error::InvalidInput("preference matrix must be non-empty".into()));
        }
        if values.len() != n_agents * n_items {
            return Err(Error::InvalidInput(format!(
                "expected {}x{} = {} liking values, got {}",
                n_agents,
                n_items,
                n_agents * n_items,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite liking value at agent {}, item {}",
                pos / n_items,
                pos % n_items
            )));
        }
        Ok(PreferenceMatrix {
            n_agents,
            n_items,
            values,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn liking(&self, agent: AgentId, item: ItemId) -> f64 {
        self.values[agent.index() * self.n_items + item.index()]
    }

    pub fn row(&self, agent: AgentId) -> &[f64] {
        let start = agent.index() * self.n_items;
        &self.values[start..start + self.n_items]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Applies `f` to every liking value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        PreferenceMatrix::from_rows(
            self.n_agents,
            self.n_items,
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }
}

/// Consumption record: who consumed what, per-item counts and the step counter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarketState {
    n_agents: usize,
    n_items: usize,
    consumed: Vec<bool>,
    per_item_count: Vec<u32>,
    step: usize,
}

impl MarketState {
    /// Nothing consumed, step 0.
    pub fn new(n_agents: usize, n_items: usize) -> Self {
        MarketState {
            n_agents,
            n_items,
            consumed: vec![false; n_agents * n_items],
            per_item_count: vec![0; n_items],
            step: 0,
        }
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn has_consumed(&self, agent: AgentId, item: ItemId) -> bool {
        self.consumed[agent.index() * self.n_items + item.index()]
    }

    /// The consumed flags of one agent, indexed by item.
    pub fn consumed_row(&self, agent: AgentId) -> &[bool] {
        let start = agent.index() * self.n_items;
        &self.consumed[start..start + self.n_items]
    }

    /// The full N×M consumption grid, row-major by agent.
    pub fn consumption_grid(&self) -> &[bool] {
        &self.consumed
    }

    pub fn per_item_count(&self) -> &[u32] {
        &self.per_item_count
    }

    pub fn consumed_by(&self, agent: AgentId) -> usize {
        self.consumed_row(agent).iter().filter(|&&c| c).count()
    }

    /// Marks `item` consumed by `agent`. Consuming twice is a logic error.
    pub(crate) fn record(&mut self, agent: AgentId, item: ItemId) {
        let cell = &mut self.consumed[agent.index() * self.n_items + item.index()];
        debug_assert!(!*cell, "agent {} consumed item {} twice", agent.0, item.0);
        *cell = true;
        self.per_item_count[item.index()] += 1;
    }

    pub(crate) fn advance_step(&mut self) {
        self.step += 1;
    }

    /// Checks the count and row-sum invariants. Used by tests and debug builds.
    pub fn is_consistent(&self) -> bool {
        let counts_match = (0..self.n_items).all(|a| {
            let col = (0..self.n_agents)
                .filter(|&i| self.consumed[i * self.n_items + a])
                .count();
            col == self.per_item_count[a] as usize
        });
        let rows_match =
            (0..self.n_agents).all(|i| self.consumed_by(AgentId(i)) == self.step);
        counts_match && rows_match
    }
}

/// Fraction of the agents observed by `agent` that have consumed `item`.
/// Zero for an agent that observes nobody.
pub fn social_pressure(agent: AgentId, item: ItemId, state: &MarketState, graph: &SocialGraph) -> f64 {
    let neighbors = graph.neighbors(agent);
    if neighbors.is_empty() {
        return 0.0;
    }
    let adopters = neighbors
        .iter()
        .filter(|&&j| state.has_consumed(AgentId(j), item))
        .count();
    adopters as f64 / neighbors.len() as f64
}

/// `γ·s + (1−γ)·l` for the given agent and item.
pub fn opinion(agent: AgentId, item: ItemId, s: f64, prefs: &PreferenceMatrix, gamma: f64) -> f64 {
    opinion_value(s, prefs.liking(agent, item), gamma)
}

#[inline]
pub(crate) fn opinion_value(s: f64, liking: f64, gamma: f64) -> f64 {
    gamma * s + (1.0 - gamma) * liking
}

/// Picks the unconsumed item with the highest opinion.
///
/// `frozen_pressures[α]` is the agent's social pressure for item α. Exact
/// ties are broken uniformly at random with one draw from `tie_rng`; no draw
/// happens when the maximum is unique.
pub fn select_item(
    agent: AgentId,
    frozen_pressures: &[f64],
    prefs: &PreferenceMatrix,
    state: &MarketState,
    gamma: f64,
    tie_rng: &mut RandomStream,
) -> Result<ItemId> {
    let mut ties = Vec::new();
    select_with_scratch(
        frozen_pressures,
        prefs.row(agent),
        state.consumed_row(agent),
        gamma,
        tie_rng,
        &mut ties,
    )
    .ok_or(Error::ExhaustedMarket {
        agent: agent.index(),
        step: state.step(),
    })
}

/// Argmax over unconsumed items with uniform tie-breaking; `ties` is reusable scratch.
#[allow(clippy::float_cmp)]
pub(crate) fn select_with_scratch(
    pressures: &[f64],
    likings: &[f64],
    consumed: &[bool],
    gamma: f64,
    tie_rng: &mut RandomStream,
    ties: &mut Vec<usize>,
) -> Option<ItemId> {
    ties.clear();
    let mut best = f64::NEG_INFINITY;
    for (alpha, ((&s, &l), &done)) in pressures.iter().zip(likings).zip(consumed).enumerate() {
        if done {
            continue;
        }
        let o = opinion_value(s, l, gamma);
        if ties.is_empty() || o > best {
            best = o;
            ties.clear();
            ties.push(alpha);
        } else if o == best {
            ties.push(alpha);
        }
    }
    match ties.len() {
        0 => None,
        1 => Some(ItemId(ties[0])),
        n => Some(ItemId(ties[tie_rng.random_range(0..n)])),
    }
}
