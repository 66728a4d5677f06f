//! Two-mode bosonic market.
//!
//! Mode 0 counts sellers and mode 1 counts buyers. Each trading round
//! displaces both modes by `ξⱼ` (a feedback function of the last log-return),
//! measures the occupations, and moves the log-price by the normalized
//! buy/sell imbalance.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{derive_seed, seeded, SimRngExt};
use crate::statevec::{apply_factor, basis_state, born_index, cumulative, exp_antihermitian, Operator, StateVector};

pub const DEFAULT_N_MAX: usize = 16;
pub const DEFAULT_LEAK_CAP: f64 = 1e-4;

/// Annihilation and creation operators on one mode truncated at `n_max`.
pub fn ladder_operators(n_max: usize) -> Result<(Operator, Operator)> {
    if n_max < 1 {
        return Err(invalid("n_max must be at least 1"));
    }
    let d = n_max + 1;
    let mut rows = vec![Complex64::new(0.0, 0.0); d * d];
    for n in 1..d {
        // a|n> = sqrt(n)|n-1>
        rows[(n - 1) * d + n] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    let a = Operator::from_rows(d, &rows)?;
    let a_dag = a.adjoint();
    Ok((a, a_dag))
}

/// `ξa† − ξ*a` on a single mode.
fn displacement_generator(xi: Complex64, n_max: usize) -> Result<Operator> {
    let (a, a_dag) = ladder_operators(n_max)?;
    a_dag.scale(xi).add(&a.scale(-xi.conj()))
}

/// The two-mode generator `Σⱼ (ξⱼ a†ⱼ − ξⱼ* aⱼ)` with `a₀ = a ⊗ I`, `a₁ = I ⊗ a`.
pub fn two_mode_generator(xi0: Complex64, xi1: Complex64, n_max: usize) -> Result<Operator> {
    let id = Operator::identity(n_max + 1);
    let g0 = displacement_generator(xi0, n_max)?.kron(&id);
    let g1 = id.kron(&displacement_generator(xi1, n_max)?);
    g0.add(&g1)
}

fn check_guard(xi: Complex64, n_max: usize) -> Result<()> {
    let limit = n_max as f64 / 4.0;
    let xi_sq = xi.norm_sqr();
    if !(xi_sq <= limit) {
        return Err(Error::TruncationGuard { xi_sq, limit });
    }
    Ok(())
}

/// The round unitary `exp(Σⱼ (ξⱼ a†ⱼ − ξⱼ* aⱼ))` on `(n_max+1)²` dimensions.
///
/// The two mode generators commute, so the exponential factorises exactly
/// into `D(ξ₀) ⊗ D(ξ₁)`; each single-mode factor is exponentiated separately.
pub fn round_unitary(xi0: Complex64, xi1: Complex64, n_max: usize) -> Result<Operator> {
    let (d0, d1) = round_factors(xi0, xi1, n_max)?;
    Ok(d0.kron(&d1))
}

/// The single-mode factors `(D(ξ₀), D(ξ₁))` of [`round_unitary`].
pub fn round_factors(xi0: Complex64, xi1: Complex64, n_max: usize) -> Result<(Operator, Operator)> {
    check_guard(xi0, n_max)?;
    check_guard(xi1, n_max)?;
    let d0 = exp_antihermitian(&displacement_generator(xi0, n_max)?)?;
    let d1 = exp_antihermitian(&displacement_generator(xi1, n_max)?)?;
    Ok((d0, d1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiPolicy {
    pub beta: [Complex64; 2],
    pub gamma: [f64; 2],
    pub phase: [f64; 2],
}

impl XiPolicy {
    pub fn constant(beta: [Complex64; 2]) -> Self {
        Self { beta, gamma: [0.0; 2], phase: [0.0; 2] }
    }

    fn is_finite(&self) -> bool {
        self.beta.iter().all(|b| b.re.is_finite() && b.im.is_finite())
            && self.gamma.iter().chain(&self.phase).all(|x| x.is_finite())
    }
}

/// `ξⱼ = (βⱼ + γⱼ·r) · √τ · e^{iφⱼ}`, with `r` the last log-return (0 in round 0).
pub fn xi_policy_eval(policy: &XiPolicy, k: usize, history: &PriceSeries, tau_k: f64) -> [Complex64; 2] {
    let r = history.return_before(k);
    let scale = tau_k.sqrt();
    std::array::from_fn(|j| {
        (policy.beta[j] + policy.gamma[j] * r) * scale * Complex64::from_polar(1.0, policy.phase[j])
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GGConfig {
    pub n_max: usize,
    pub rounds: usize,
    pub tau: Vec<f64>,
    pub policy: XiPolicy,
    pub lambda: f64,
    pub p0: f64,
    pub reset_each_round: bool,
    pub seed: u64,
    pub leak_cap: f64,
}

impl GGConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_max < 1 {
            return Err(invalid("n_max must be at least 1"));
        }
        if self.tau.len() != self.rounds {
            return Err(invalid(format!("expected {} round durations, got {}", self.rounds, self.tau.len())));
        }
        if self.tau.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(invalid("round durations must be finite and non-negative"));
        }
        if !self.lambda.is_finite() {
            return Err(invalid("lambda must be finite"));
        }
        if !(self.p0 > 0.0 && self.p0.is_finite()) {
            return Err(invalid("p0 must be positive"));
        }
        if !self.policy.is_finite() {
            return Err(invalid("xi policy entries must be finite"));
        }
        Ok(())
    }
}

/// Flat JSON form of [`GGConfig`].
///
/// `tau` may be a single number (used for every round) or one value per round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GGConfigFile {
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    pub rounds: usize,
    #[serde(default = "default_tau")]
    pub tau: TauSpec,
    #[serde(default)]
    pub beta0_re: f64,
    #[serde(default)]
    pub beta0_im: f64,
    #[serde(default)]
    pub beta1_re: f64,
    #[serde(default)]
    pub beta1_im: f64,
    #[serde(default)]
    pub gamma0: f64,
    #[serde(default)]
    pub gamma1: f64,
    #[serde(default)]
    pub phase0: f64,
    #[serde(default)]
    pub phase1: f64,
    pub lambda: f64,
    #[serde(default = "default_p0")]
    pub p0: f64,
    #[serde(default)]
    pub reset_each_round: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_leak_cap")]
    pub leak_cap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TauSpec {
    Uniform(f64),
    PerRound(Vec<f64>),
}

fn default_n_max() -> usize {
    DEFAULT_N_MAX
}
fn default_tau() -> TauSpec {
    TauSpec::Uniform(1.0)
}
fn default_p0() -> f64 {
    1.0
}
fn default_leak_cap() -> f64 {
    DEFAULT_LEAK_CAP
}

impl GGConfigFile {
    pub fn into_config(self) -> Result<GGConfig> {
        let tau = match self.tau {
            TauSpec::Uniform(t) => vec![t; self.rounds],
            TauSpec::PerRound(v) => v,
        };
        let config = GGConfig {
            n_max: self.n_max,
            rounds: self.rounds,
            tau,
            policy: XiPolicy {
                beta: [Complex64::new(self.beta0_re, self.beta0_im), Complex64::new(self.beta1_re, self.beta1_im)],
                gamma: [self.gamma0, self.gamma1],
                phase: [self.phase0, self.phase1],
            },
            lambda: self.lambda,
            p0: self.p0,
            reset_each_round: self.reset_each_round,
            seed: self.seed,
            leak_cap: self.leak_cap,
        };
        config.validate()?;
        Ok(config)
    }
}

/// Truncated two-mode Fock state; basis index `n₀·(n_max+1) + n₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeState {
    pub n_max: usize,
    pub state: StateVector,
    /// Probability on levels with `n₀ = n_max` or `n₁ = n_max` seen before
    /// the last measurement.
    pub edge_mass: f64,
    pub leak_warning: bool,
}

impl TwoModeState {
    pub fn vacuum(n_max: usize) -> Result<Self> {
        Self::occupation(n_max, 0, 0)
    }

    pub fn occupation(n_max: usize, n0: usize, n1: usize) -> Result<Self> {
        let d = n_max + 1;
        if n0 >= d || n1 >= d {
            return Err(Error::IndexOutOfRange { index: n0.max(n1), dim: d });
        }
        Ok(Self { n_max, state: basis_state(d * d, n0 * d + n1)?, edge_mass: 0.0, leak_warning: false })
    }

    pub fn split_index(&self, index: usize) -> (usize, usize) {
        (index / (self.n_max + 1), index % (self.n_max + 1))
    }

    /// Probability mass on the truncation edge.
    pub fn edge_probability(&self) -> f64 {
        edge_mass(&self.state, self.n_max)
    }

    /// Mean occupations `(⟨n₀⟩, ⟨n₁⟩)`.
    pub fn mean_occupations(&self) -> (f64, f64) {
        let mut m = (0.0, 0.0);
        for (i, p) in self.state.probabilities().into_iter().enumerate() {
            let (n0, n1) = self.split_index(i);
            m.0 += p * n0 as f64;
            m.1 += p * n1 as f64;
        }
        m
    }
}

fn edge_mass(psi: &StateVector, n_max: usize) -> f64 {
    let d = n_max + 1;
    psi.probabilities()
        .iter()
        .enumerate()
        .filter(|(i, _)| i / d == n_max || i % d == n_max)
        .map(|(_, p)| p)
        .sum()
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PriceSeries {
    /// `rounds + 1` entries; `log_prices[0] = ln p0`.
    pub log_prices: Vec<f64>,
    /// Measured `(n₀, n₁)` per round.
    pub occupations: Vec<(usize, usize)>,
    /// Largest pre-measurement truncation-edge mass seen in any round.
    pub max_edge_mass: f64,
    /// Number of rounds whose edge mass exceeded the configured cap.
    pub leak_warnings: usize,
}

impl PriceSeries {
    pub fn new(p0: f64) -> Self {
        Self { log_prices: vec![p0.ln()], ..Self::default() }
    }

    /// The log-return realised in round `k − 1`, or 0 for `k = 0`.
    fn return_before(&self, k: usize) -> f64 {
        if k == 0 || k >= self.log_prices.len() {
            return 0.0;
        }
        self.log_prices[k] - self.log_prices[k - 1]
    }

    pub fn returns(&self) -> Vec<f64> {
        self.log_prices.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// CSV with columns `round, log_price, n0, n1`. Row `k` holds the log-price
    /// after `k` rounds and the occupations measured in round `k − 1`; row 0
    /// leaves the occupation columns empty.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| invalid(e.to_string());
        w.write_record(["round", "log_price", "n0", "n1"]).map_err(io)?;
        for (k, lp) in self.log_prices.iter().enumerate() {
            let (n0, n1) = match k.checked_sub(1).and_then(|i| self.occupations.get(i)) {
                Some(&(a, b)) => (a.to_string(), b.to_string()),
                None => (String::new(), String::new()),
            };
            w.write_record([k.to_string(), lp.to_string(), n0, n1]).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| invalid(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| invalid(e.to_string()))
    }

    /// Parses the CSV written by [`PriceSeries::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let mut series = PriceSeries::default();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| invalid(e.to_string()))?;
            let field = |i: usize| rec.get(i).unwrap_or("").trim();
            let lp: f64 = field(1).parse().map_err(|_| invalid(format!("row {row}: bad log_price")))?;
            series.log_prices.push(lp);
            if row > 0 {
                let n0 = field(2).parse().map_err(|_| invalid(format!("row {row}: bad n0")))?;
                let n1 = field(3).parse().map_err(|_| invalid(format!("row {row}: bad n1")))?;
                series.occupations.push((n0, n1));
            }
        }
        if series.log_prices.is_empty() {
            return Err(invalid("price series CSV has no rows"));
        }
        Ok(series)
    }
}

/// `log_price + λ·(n₁ − n₀)/(1 + n₀ + n₁)`; the step is bounded by `|λ|`.
pub fn price_update(n0: usize, n1: usize, log_price: f64, lambda: f64) -> f64 {
    let imbalance = n1 as f64 - n0 as f64;
    log_price + lambda * imbalance / (1.0 + n0 as f64 + n1 as f64)
}

/// One trading round: displace, check truncation leakage, measure.
pub fn step_round(
    state: &TwoModeState,
    k: usize,
    history: &PriceSeries,
    config: &GGConfig,
    seed: u64,
) -> Result<(TwoModeState, (usize, usize))> {
    if !state.state.is_normalized() {
        return Err(Error::NotNormalized { norm: state.state.norm() });
    }
    let tau_k = *config.tau.get(k).ok_or_else(|| invalid(format!("no duration for round {k}")))?;
    let [xi0, xi1] = xi_policy_eval(&config.policy, k, history, tau_k);
    let (d0, d1) = round_factors(xi0, xi1, config.n_max)?;
    let d = config.n_max + 1;
    let evolved = apply_factor(&d1, &apply_factor(&d0, &state.state, 1, d)?, d, 1)?;
    let edge = edge_mass(&evolved, config.n_max);

    let cum = cumulative(&evolved.probabilities());
    let index = born_index(&cum, seeded(seed).unit());
    let occupation = state.split_index(index);

    let next = if config.reset_each_round {
        TwoModeState::vacuum(config.n_max)?
    } else {
        TwoModeState::occupation(config.n_max, occupation.0, occupation.1)?
    };
    Ok((
        TwoModeState { edge_mass: edge, leak_warning: edge > config.leak_cap, ..next },
        occupation,
    ))
}

/// Runs all rounds from the vacuum; deterministic in `config.seed`.
pub fn run_market(config: &GGConfig) -> Result<PriceSeries> {
    config.validate()?;
    let mut series = PriceSeries::new(config.p0);
    let mut state = TwoModeState::vacuum(config.n_max)?;
    for k in 0..config.rounds {
        let (next, (n0, n1)) = step_round(&state, k, &series, config, derive_seed(config.seed, k as u64))?;
        let last = *series.log_prices.last().expect("non-empty");
        series.log_prices.push(price_update(n0, n1, last, config.lambda));
        series.occupations.push((n0, n1));
        series.max_edge_mass = series.max_edge_mass.max(next.edge_mass);
        if next.leak_warning {
            series.leak_warnings += 1;
        }
        state = next;
    }
    Ok(series)
}
