//! Synchronized simulation of one market.
//!
//! Each step freezes every agent's social pressure from the incoming state,
//! lets agents choose in ascending index order against those frozen values,
//! and only then applies all choices. No choice made within a step is visible
//! to another agent in the same step.

use crate::error::{Error, Result};
use crate::model::{
    check_gamma, select_with_scratch, social_pressure, AgentId, ItemId, MarketState, ModelConfig,
    PreferenceMatrix,
};
use crate::preferences::{quality, sample_preferences, QualityVector};
use crate::rng::{run_seed, RandomStream, Substream};
use crate::topology::SocialGraph;

/// Outcome of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub final_state: MarketState,
    /// Market shares after each step, `T` rows of `M` values; only when requested.
    pub share_trajectory: Option<Vec<Vec<f64>>>,
    pub qualities: QualityVector,
    pub config: ModelConfig,
    pub run_index: u64,
    pub run_seed: u64,
}

impl RunResult {
    pub fn shares(&self) -> Vec<f64> {
        crate::metrics::market_shares(&self.final_state)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub record_trajectory: bool,
}

/// Advances `state` by one synchronized step.
///
/// Pressures are recomputed from scratch with [`social_pressure`]; the run
/// loop uses an incremental equivalent.
pub fn step(
    state: &MarketState,
    graph: &SocialGraph,
    prefs: &PreferenceMatrix,
    gamma: f64,
    tie_rng: &mut RandomStream,
) -> Result<MarketState> {
    let order: Vec<AgentId> = (0..state.n_agents()).map(AgentId::new).collect();
    step_in_order(state, graph, prefs, gamma, tie_rng, &order)
}

/// [`step`] with an explicit agent processing order.
///
/// Order only matters for which agent consumes which tie-break draw.
pub fn step_in_order(
    state: &MarketState,
    graph: &SocialGraph,
    prefs: &PreferenceMatrix,
    gamma: f64,
    tie_rng: &mut RandomStream,
    order: &[AgentId],
) -> Result<MarketState> {
    check_shapes(state, graph, prefs)?;
    let n = state.n_agents();
    let m = state.n_items();
    let frozen: Vec<f64> = (0..n)
        .flat_map(|i| {
            (0..m).map(move |a| social_pressure(AgentId::new(i), ItemId::new(a), state, graph))
        })
        .collect();

    let mut ties = Vec::new();
    let mut choices = vec![None; n];
    for &agent in order {
        let i = agent.index();
        let choice = select_with_scratch(
            &frozen[i * m..(i + 1) * m],
            prefs.row(agent),
            state.consumed_row(agent),
            gamma,
            tie_rng,
            &mut ties,
        )
        .ok_or(Error::ExhaustedMarket {
            agent: i,
            step: state.step(),
        })?;
        choices[i] = Some(choice);
    }

    let mut next = state.clone();
    for (i, choice) in choices.into_iter().enumerate() {
        let item = choice.ok_or_else(|| {
            Error::InvalidInput(format!("agent order skipped agent {i}"))
        })?;
        next.record(AgentId::new(i), item);
    }
    next.advance_step();
    Ok(next)
}

fn check_shapes(state: &MarketState, graph: &SocialGraph, prefs: &PreferenceMatrix) -> Result<()> {
    if graph.n_agents() != state.n_agents() || prefs.n_agents() != state.n_agents() {
        return Err(Error::InvalidInput(format!(
            "agent counts disagree: state {}, graph {}, preferences {}",
            state.n_agents(),
            graph.n_agents(),
            prefs.n_agents()
        )));
    }
    if prefs.n_items() != state.n_items() {
        return Err(Error::InvalidInput(format!(
            "item counts disagree: state {}, preferences {}",
            state.n_items(),
            prefs.n_items()
        )));
    }
    Ok(())
}

/// Run-loop state that keeps per-agent adopter counts up to date incrementally.
///
/// `adopters[i*M + α]` counts the agents observed by `i` that consumed α, so
/// a step costs O(N·M + N·k) instead of O(N·M·k).
pub struct Simulation<'a> {
    graph: &'a SocialGraph,
    prefs: &'a PreferenceMatrix,
    observers: Vec<Vec<usize>>,
    gamma: f64,
    state: MarketState,
    adopters: Vec<u32>,
    tie_rng: RandomStream,
    pressures: Vec<f64>,
    choices: Vec<usize>,
    ties: Vec<usize>,
}

impl<'a> Simulation<'a> {
    pub fn new(
        graph: &'a SocialGraph,
        prefs: &'a PreferenceMatrix,
        gamma: f64,
        tie_rng: RandomStream,
    ) -> Result<Self> {
        check_gamma(gamma)?;
        let state = MarketState::new(prefs.n_agents(), prefs.n_items());
        check_shapes(&state, graph, prefs)?;
        let n = prefs.n_agents();
        let m = prefs.n_items();
        Ok(Simulation {
            graph,
            prefs,
            observers: graph.observers(),
            gamma,
            state,
            adopters: vec![0; n * m],
            tie_rng,
            pressures: vec![0.0; m],
            choices: vec![0; n],
            ties: Vec::with_capacity(m),
        })
    }

    pub fn state(&self) -> &MarketState {
        &self.state
    }

    pub fn into_state(self) -> MarketState {
        self.state
    }

    /// One synchronized step.
    pub fn advance(&mut self) -> Result<()> {
        let n = self.state.n_agents();
        let m = self.state.n_items();
        for i in 0..n {
            let agent = AgentId::new(i);
            let degree = self.graph.degree(agent);
            let counts = &self.adopters[i * m..(i + 1) * m];
            if degree == 0 {
                self.pressures.fill(0.0);
            } else {
                let degree = degree as f64;
                for (s, &c) in self.pressures.iter_mut().zip(counts) {
                    *s = c as f64 / degree;
                }
            }
            let choice = select_with_scratch(
                &self.pressures,
                self.prefs.row(agent),
                self.state.consumed_row(agent),
                self.gamma,
                &mut self.tie_rng,
                &mut self.ties,
            )
            .ok_or(Error::ExhaustedMarket {
                agent: i,
                step: self.state.step(),
            })?;
            self.choices[i] = choice.index();
        }
        for (i, &alpha) in self.choices.iter().enumerate() {
            self.state.record(AgentId::new(i), ItemId::new(alpha));
            for &o in &self.observers[i] {
                self.adopters[o * m + alpha] += 1;
            }
        }
        self.state.advance_step();
        debug_assert_eq!(
            self.state.per_item_count().iter().map(|&c| c as usize).sum::<usize>(),
            n * self.state.step()
        );
        Ok(())
    }
}

/// Builds the graph and preference matrix for run `run_index`.
pub fn realize(config: &ModelConfig, run_index: u64) -> Result<(SocialGraph, PreferenceMatrix)> {
    config.validate()?;
    let seed = run_seed(config.master_seed, run_index);
    let graph = config
        .topology
        .build(config.n_agents, &mut RandomStream::substream(seed, Substream::Topology))?;
    let prefs = sample_preferences(
        config.n_agents,
        config.n_items,
        config.intra_item_deviation,
        &mut RandomStream::substream(seed, Substream::Preferences),
    )?;
    Ok((graph, prefs))
}

/// Runs the model on a prepared graph and preference matrix.
///
/// `config.social_pressure` and `config.horizon` drive the dynamics; the
/// tie-break stream is derived from `(config.master_seed, run_index)`.
pub fn simulate(
    config: &ModelConfig,
    graph: &SocialGraph,
    prefs: &PreferenceMatrix,
    run_index: u64,
    options: RunOptions,
) -> Result<RunResult> {
    if config.horizon > prefs.n_items() {
        return Err(Error::InvalidConfig(format!(
            "steps T={} exceed items M={}",
            config.horizon,
            prefs.n_items()
        )));
    }
    let seed = run_seed(config.master_seed, run_index);
    let mut sim = Simulation::new(
        graph,
        prefs,
        config.social_pressure,
        RandomStream::substream(seed, Substream::Ties),
    )?;
    let mut trajectory = options
        .record_trajectory
        .then(|| Vec::with_capacity(config.horizon));
    for _ in 0..config.horizon {
        sim.advance()?;
        if let Some(rows) = trajectory.as_mut() {
            rows.push(crate::metrics::market_shares(sim.state()));
        }
    }
    Ok(RunResult {
        final_state: sim.into_state(),
        share_trajectory: trajectory,
        qualities: quality(prefs),
        config: config.clone(),
        run_index,
        run_seed: seed,
    })
}

/// One complete run, fully determined by `(config, run_index)`.
pub fn run(config: &ModelConfig, run_index: u64) -> Result<RunResult> {
    run_with_options(config, run_index, RunOptions::default())
}

pub fn run_with_options(config: &ModelConfig, run_index: u64, options: RunOptions) -> Result<RunResult> {
    let (graph, prefs) = realize(config, run_index)?;
    simulate(config, &graph, &prefs, run_index, options)
}

/// A run on an externally supplied preference matrix; only the graph is
/// drawn from the run's topology substream.
pub fn run_with_preferences(
    config: &ModelConfig,
    prefs: &PreferenceMatrix,
    run_index: u64,
    options: RunOptions,
) -> Result<RunResult> {
    let config = ModelConfig {
        n_agents: prefs.n_agents(),
        n_items: prefs.n_items(),
        ..config.clone()
    };
    config.validate()?;
    let seed = run_seed(config.master_seed, run_index);
    let graph = config
        .topology
        .build(config.n_agents, &mut RandomStream::substream(seed, Substream::Topology))?;
    simulate(&config, &graph, prefs, run_index, options)
}

/// Runs every γ on the same graph and preference matrix.
///
/// Each γ starts from a fresh copy of the run's tie-break stream, so two
/// equal γ values give identical results.
pub fn run_paired(config: &ModelConfig, gammas: &[f64], run_index: u64) -> Result<Vec<RunResult>> {
    for &g in gammas {
        check_gamma(g)?;
    }
    let (graph, prefs) = realize(config, run_index)?;
    gammas
        .iter()
        .map(|&g| simulate(&config.with_gamma(g), &graph, &prefs, run_index, RunOptions::default()))
        .collect()
}
