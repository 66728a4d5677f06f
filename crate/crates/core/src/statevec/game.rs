//! The generic pipeline: initial state, one strategy per player applied in
//! player order, a terminal measurement, and a payoff lookup on the outcome.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::expm::exp_antihermitian;
use super::measure::{sample_measurement, MeasurementRecord};
use super::operator::{apply, Operator};
use super::state::StateVector;
use super::NORM_TOL;
use crate::error::{Error, Result};

/// Permissible operations of one player: finitely many labelled unitaries,
/// plus one-parameter families `exp(−iθG)` for labelled hermitian generators.
#[derive(Debug, Clone, Default)]
pub struct StrategySet {
    fixed: BTreeMap<String, Operator>,
    families: BTreeMap<String, Operator>,
}

impl StrategySet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_unitary(mut self, label: impl Into<String>, op: Operator) -> Result<Self> {
        if !op.is_unitary() {
            return Err(Error::OperatorProperty("unitary"));
        }
        self.fixed.insert(label.into(), op);
        Ok(self)
    }

    pub fn with_family(mut self, label: impl Into<String>, generator: Operator) -> Result<Self> {
        if !generator.is_hermitian() {
            return Err(Error::OperatorProperty("hermitian"));
        }
        self.families.insert(label.into(), generator);
        Ok(self)
    }

    fn operators(&self) -> impl Iterator<Item = &Operator> {
        self.fixed.values().chain(self.families.values())
    }

    fn resolve(&self, player: usize, choice: &StrategyChoice) -> Result<Operator> {
        let not_permitted = |label: &str| Error::StrategyNotPermitted { player, label: label.to_string() };
        match choice {
            StrategyChoice::Fixed(label) => self.fixed.get(label).cloned().ok_or_else(|| not_permitted(label)),
            StrategyChoice::Family { label, theta } => {
                let g = self.families.get(label).ok_or_else(|| not_permitted(label))?;
                exp_antihermitian(&g.scale(Complex64::new(0.0, -theta)))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StrategyChoice {
    Fixed(String),
    Family { label: String, theta: f64 },
}

impl StrategyChoice {
    pub fn fixed(label: impl Into<String>) -> Self {
        StrategyChoice::Fixed(label.into())
    }
}

#[derive(Debug, Clone)]
pub struct GameDefinition {
    initial: StateVector,
    players: Vec<StrategySet>,
    /// `payoff[outcome][player]`.
    payoff: Vec<Vec<f64>>,
}

impl GameDefinition {
    pub fn new(initial: StateVector, players: Vec<StrategySet>, payoff: Vec<Vec<f64>>) -> Result<Self> {
        let dim = initial.dim();
        if !initial.is_normalized_within(NORM_TOL) {
            return Err(Error::NotNormalized { norm: initial.norm() });
        }
        for op in players.iter().flat_map(StrategySet::operators) {
            if op.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, actual: op.dim() });
            }
        }
        if payoff.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, actual: payoff.len() });
        }
        if let Some(row) = payoff.iter().find(|row| row.len() != players.len()) {
            return Err(Error::DimensionMismatch { expected: players.len(), actual: row.len() });
        }
        Ok(Self { initial, players, payoff })
    }

    pub fn dim(&self) -> usize {
        self.initial.dim()
    }

    pub fn players(&self) -> usize {
        self.players.len()
    }

    pub fn initial(&self) -> &StateVector {
        &self.initial
    }

    pub fn payoff(&self, outcome: usize) -> &[f64] {
        &self.payoff[outcome]
    }

    /// The state just before measurement.
    pub fn evolve(&self, choices: &[StrategyChoice]) -> Result<StateVector> {
        if choices.len() != self.players.len() {
            return Err(Error::DimensionMismatch { expected: self.players.len(), actual: choices.len() });
        }
        let mut psi = self.initial.clone();
        for (player, (set, choice)) in self.players.iter().zip(choices).enumerate() {
            let op = set.resolve(player, choice)?;
            psi = apply(&op, &psi)?;
        }
        Ok(psi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameOutcome {
    pub payoffs: Vec<f64>,
    pub record: MeasurementRecord,
}

pub fn play_game(game: &GameDefinition, choices: &[StrategyChoice], seed: u64) -> Result<GameOutcome> {
    let psi = game.evolve(choices)?;
    let sampling = sample_measurement(&psi, 1, seed)?;
    let record = sampling.records[0];
    Ok(GameOutcome { payoffs: game.payoff(record.outcome).to_vec(), record })
}
