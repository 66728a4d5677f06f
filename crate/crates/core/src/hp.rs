//! Qubit-encoded combinatorial auction.
//!
//! Each bidder owns a register of `p = p_item + p_price` qubits: the bundle
//! bitmask in the high bits, the price level in the low bits. A bid is a
//! superposition of `(bundle, level)` terms; the all-zeros register means
//! "no win". The joint state is the tensor product of the bidders' bid
//! vectors (bidder 0 most significant), and winner determination is a
//! simulated adiabatic search toward the revenue-maximizing feasible outcome.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{derive_seed, seeded, SimRngExt};
use crate::statevec::{born_index, cumulative, tensor, Operator, StateVector, NORM_TOL};

/// Largest joint register simulated, in qubits.
pub const MAX_JOINT_QUBITS: u32 = 16;
/// Largest number of combinations the brute-force oracle enumerates.
pub const MAX_ENUMERATION: u128 = 10_000_000;
/// Largest joint register addressable by a basis index.
const MAX_INDEX_BITS: u32 = 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BidderRegister {
    pub p_item: u32,
    pub p_price: u32,
}

impl BidderRegister {
    pub fn new(p_item: u32, p_price: u32) -> Result<Self> {
        let r = Self { p_item, p_price };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p_item < 1 || self.p_price < 1 {
            return Err(invalid("register needs at least one item bit and one price bit"));
        }
        if self.bits() > MAX_JOINT_QUBITS {
            return Err(Error::DimensionGuard { bits: self.bits(), limit: MAX_JOINT_QUBITS });
        }
        Ok(())
    }

    pub fn bits(&self) -> u32 {
        self.p_item + self.p_price
    }

    pub fn dim(&self) -> usize {
        1 << self.bits()
    }

    pub fn price_levels(&self) -> u32 {
        1 << self.p_price
    }

    /// Splits a register index into `(bundle, price_level)`.
    pub fn decode(&self, index: usize) -> (u32, u32) {
        let index = index as u32;
        (index >> self.p_price, index & (self.price_levels() - 1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BidTerm {
    pub bundle: u32,
    pub price_level: u32,
    pub amplitude: Complex64,
}

/// Basis index of a term: `bundle · 2^p_price + price_level`.
pub fn encode_term(t: &BidTerm, r: &BidderRegister) -> Result<usize> {
    if t.bundle >= 1 << r.p_item {
        return Err(invalid(format!("bundle {:#b} does not fit in {} item bits", t.bundle, r.p_item)));
    }
    if t.price_level >= r.price_levels() {
        return Err(invalid(format!("price level {} does not fit in {} price bits", t.price_level, r.p_price)));
    }
    Ok(((t.bundle << r.p_price) | t.price_level) as usize)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BidSuperposition {
    pub bidder_id: String,
    pub register: BidderRegister,
    terms: Vec<BidTerm>,
}

impl BidSuperposition {
    /// Validates ranges, distinct `(bundle, level)` pairs and `Σ|α|² = 1 ± 1e−9`.
    pub fn new(bidder_id: impl Into<String>, register: BidderRegister, terms: Vec<BidTerm>) -> Result<Self> {
        register.validate()?;
        if terms.is_empty() {
            return Err(invalid("a bid needs at least one term"));
        }
        let mut seen = BTreeSet::new();
        for t in &terms {
            if !(t.amplitude.re.is_finite() && t.amplitude.im.is_finite()) {
                return Err(invalid("bid amplitudes must be finite"));
            }
            let idx = encode_term(t, &register)?;
            if !seen.insert(idx) {
                return Err(invalid(format!(
                    "duplicate term (bundle {:#b}, level {})",
                    t.bundle, t.price_level
                )));
            }
        }
        let norm: f64 = terms.iter().map(|t| t.amplitude.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm: norm.sqrt() });
        }
        Ok(Self { bidder_id: bidder_id.into(), register, terms })
    }

    pub fn terms(&self) -> &[BidTerm] {
        &self.terms
    }

    /// `Σ αⱼ |bundleⱼ⟩ ⊗ |priceⱼ⟩` as a state on the bidder's register.
    pub fn bid_vector(&self) -> StateVector {
        let mut amps = vec![Complex64::new(0.0, 0.0); self.register.dim()];
        for t in &self.terms {
            amps[encode_term(t, &self.register).expect("validated")] += t.amplitude;
        }
        StateVector::from_amplitudes(amps).expect("non-empty register")
    }
}

/// A unitary on the bidder's register whose first column is the bid vector.
///
/// Built as `φ·R`, where `φ` is the phase of the bid's `|0…0⟩` amplitude and
/// `R` the Householder reflection exchanging `φ|0⟩` and the bid vector.
pub fn bidder_unitary(b: &BidSuperposition) -> Result<Operator> {
    let v = b.bid_vector();
    let dim = v.dim();
    let v0 = v.amp(0);
    let phase = if v0.norm() > 0.0 { v0 / v0.norm() } else { Complex64::new(1.0, 0.0) };
    let mut u: Vec<Complex64> = v.amplitudes().iter().map(|x| -x).collect();
    u[0] += phase;
    let u_norm_sqr: f64 = u.iter().map(|x| x.norm_sqr()).sum();
    let matrix = if u_norm_sqr < 1e-30 {
        DMatrix::from_diagonal_element(dim, dim, phase)
    } else {
        DMatrix::from_fn(dim, dim, |r, c| {
            let id = if r == c { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            phase * (id - u[r] * u[c].conj() * (2.0 / u_norm_sqr))
        })
    };
    Operator::dense(matrix)?.into_unitary()
}

fn check_shapes(bids: &[BidSuperposition], instance: &AuctionInstance) -> Result<()> {
    if bids.len() != instance.bidders {
        return Err(Error::DimensionMismatch { expected: instance.bidders, actual: bids.len() });
    }
    if let Some(b) = bids.iter().find(|b| b.register != instance.register) {
        return Err(invalid(format!("register shape of bidder {:?} does not match the auction", b.bidder_id)));
    }
    let item_mask = instance.item_mask();
    for b in bids {
        if let Some(t) = b.terms.iter().find(|t| t.bundle & !item_mask != 0) {
            return Err(invalid(format!(
                "bidder {:?} bids on bundle {:#b} beyond the {} auctioned items",
                b.bidder_id, t.bundle, instance.items
            )));
        }
    }
    Ok(())
}

/// Tensor product of the bid vectors, bidder 0 most significant.
pub fn joint_initial(bids: &[BidSuperposition]) -> Result<StateVector> {
    let first = bids.first().ok_or_else(|| invalid("at least one bid is required"))?;
    if bids.iter().any(|b| b.register != first.register) {
        return Err(invalid("all bidders must share one register shape"));
    }
    let bits = first.register.bits() * bids.len() as u32;
    if bits > MAX_JOINT_QUBITS {
        return Err(Error::DimensionGuard { bits, limit: MAX_JOINT_QUBITS });
    }
    let mut psi = first.bid_vector();
    for b in &bids[1..] {
        psi = tensor(&psi, &b.bid_vector());
    }
    Ok(psi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuctionInstance {
    pub items: u32,
    pub register: BidderRegister,
    pub bidders: usize,
    /// Money per price level.
    pub tick: f64,
    /// Energy assigned to infeasible outcomes.
    pub penalty: f64,
}

impl AuctionInstance {
    /// `penalty` defaults to `n·2^p_price·tick + 1`.
    pub fn new(items: u32, register: BidderRegister, bidders: usize, tick: f64, penalty: Option<f64>) -> Result<Self> {
        let penalty = penalty.unwrap_or_else(|| Self::default_penalty(register, bidders, tick));
        let inst = Self { items, register, bidders, tick, penalty };
        inst.validate()?;
        Ok(inst)
    }

    pub fn default_penalty(register: BidderRegister, bidders: usize, tick: f64) -> f64 {
        bidders as f64 * register.price_levels() as f64 * tick + 1.0
    }

    pub fn validate(&self) -> Result<()> {
        self.register.validate()?;
        if self.bidders == 0 {
            return Err(invalid("an auction needs at least one bidder"));
        }
        if self.items == 0 || self.items > self.register.p_item {
            return Err(invalid(format!("items must be in 1..={}", self.register.p_item)));
        }
        if !(self.tick > 0.0 && self.tick.is_finite()) {
            return Err(invalid("tick must be positive"));
        }
        let bound = self.register.price_levels() as f64 * self.tick * self.bidders as f64;
        if !(self.penalty > bound && self.penalty.is_finite()) {
            return Err(invalid(format!("penalty {} must exceed the revenue bound {bound}", self.penalty)));
        }
        let bits = self.joint_bits();
        if bits > MAX_INDEX_BITS {
            return Err(Error::DimensionGuard { bits, limit: MAX_INDEX_BITS });
        }
        Ok(())
    }

    /// Rejects instances whose joint state is too large to simulate.
    pub fn check_simulable(&self) -> Result<()> {
        let bits = self.joint_bits();
        if bits > MAX_JOINT_QUBITS {
            return Err(Error::DimensionGuard { bits, limit: MAX_JOINT_QUBITS });
        }
        Ok(())
    }

    pub fn joint_bits(&self) -> u32 {
        (self.register.bits() as u64 * self.bidders as u64).min(u32::MAX as u64) as u32
    }

    pub fn joint_dim(&self) -> usize {
        1 << self.joint_bits()
    }

    fn item_mask(&self) -> u32 {
        (1 << self.items) - 1
    }

    fn register_index(&self, joint: usize, bidder: usize) -> usize {
        let shift = self.register.bits() as usize * (self.bidders - 1 - bidder);
        (joint >> shift) & (self.register.dim() - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub bundle: u32,
    pub price_level: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    /// `None` is the all-zeros register (no win).
    pub allocations: Vec<Option<Allocation>>,
    pub feasible: bool,
    /// Pay-your-bid revenue; reported as 0 for infeasible outcomes.
    pub revenue: f64,
}

impl Outcome {
    pub fn winners(&self) -> impl Iterator<Item = (usize, Allocation)> + '_ {
        self.allocations.iter().enumerate().filter_map(|(i, a)| a.map(|a| (i, a)))
    }
}

/// Decodes a joint basis index into per-bidder allocations.
///
/// Feasible iff the winning bundles are pairwise disjoint and only name
/// auctioned items.
pub fn outcome_of_index(index: usize, instance: &AuctionInstance) -> Outcome {
    let allocations: Vec<Option<Allocation>> = (0..instance.bidders)
        .map(|b| match instance.register_index(index, b) {
            0 => None,
            reg => {
                let (bundle, price_level) = instance.register.decode(reg);
                Some(Allocation { bundle, price_level })
            }
        })
        .collect();
    let mut used = 0u32;
    let mut feasible = true;
    for a in allocations.iter().flatten() {
        if a.bundle & used != 0 || a.bundle & !instance.item_mask() != 0 {
            feasible = false;
        }
        used |= a.bundle;
    }
    let revenue = if feasible {
        allocations.iter().flatten().map(|a| instance.tick * a.price_level as f64).sum()
    } else {
        0.0
    };
    Outcome { allocations, feasible, revenue }
}

/// Diagonal energy: `−revenue` for feasible outcomes, `+penalty` otherwise.
pub fn problem_hamiltonian(instance: &AuctionInstance) -> Result<Operator> {
    instance.validate()?;
    instance.check_simulable()?;
    let diag: Vec<f64> = (0..instance.joint_dim())
        .map(|i| {
            let o = outcome_of_index(i, instance);
            if o.feasible {
                -o.revenue
            } else {
                instance.penalty
            }
        })
        .collect();
    Operator::real_diagonal(&diag)?.into_hermitian()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub steps: usize,
    pub dt: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub runs: usize,
}

fn one() -> usize {
    1
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 1 {
            return Err(invalid("search needs at least one step"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0 && (self.steps as f64 * self.dt).is_finite()) {
            return Err(invalid("dt must be positive and finite"));
        }
        if self.runs < 1 {
            return Err(invalid("runs must be at least 1"));
        }
        Ok(())
    }
}

/// Final state of the annealing schedule with integrity diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    pub state: StateVector,
    /// Largest probability mass outside the support of the initial state, over all steps.
    pub max_outside_support: f64,
    /// Largest `|‖ψ‖ − 1|` over all steps.
    pub max_norm_drift: f64,
}

/// Applies `exp(−i·H·dt)` to `v` for hermitian `H` given as a matvec, by a
/// Lanczos projection onto a Krylov space of at most `max_dim` vectors.
fn krylov_expm<F>(apply_h: F, v: &[Complex64], dt: f64, max_dim: usize) -> Vec<Complex64>
where
    F: Fn(&[Complex64], &mut [Complex64]),
{
    let dim = v.len();
    let beta0 = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if beta0 == 0.0 {
        return v.to_vec();
    }
    let mut basis: Vec<Vec<Complex64>> = vec![v.iter().map(|x| x / beta0).collect()];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    let m_max = max_dim.min(dim);
    loop {
        let j = basis.len() - 1;
        apply_h(&basis[j], &mut w);
        let a: f64 = basis[j].iter().zip(&w).map(|(q, x)| (q.conj() * x).re).sum();
        alpha.push(a);
        // full reorthogonalisation against the whole basis
        for q in &basis {
            let proj: Complex64 = q.iter().zip(&w).map(|(qi, xi)| qi.conj() * xi).sum();
            w.iter_mut().zip(q).for_each(|(x, qi)| *x -= proj * qi);
        }
        let b = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if basis.len() >= m_max || b < 1e-14 * (1.0 + a.abs()) {
            break;
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }

    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |r, c| {
        if r == c {
            alpha[r]
        } else if r + 1 == c {
            beta[r]
        } else if c + 1 == r {
            beta[c]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    // y = S·exp(−iΛdt)·Sᵀ·e₁
    let coeffs: Vec<Complex64> = (0..m)
        .map(|r| {
            (0..m)
                .map(|k| {
                    let s = eig.eigenvectors[(r, k)] * eig.eigenvectors[(0, k)];
                    Complex64::from_polar(s, -eig.eigenvalues[k] * dt)
                })
                .sum()
        })
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); dim];
    for (q, y) in basis.iter().zip(&coeffs) {
        out.iter_mut().zip(q).for_each(|(o, qi)| *o += beta0 * y * qi);
    }
    out
}

/// Evolves `ψ₀ = joint_initial(bids)` under `H(s) = (1−s)·(I − |ψ₀⟩⟨ψ₀|) + s·H_P/‖H_P‖_max`
/// with `ψ ← exp(−i·H(s_k)·dt)·ψ` for `s_k = k/T`, `k = 1..=T`.
pub fn evolve(bids: &[BidSuperposition], instance: &AuctionInstance, steps: usize, dt: f64) -> Result<Evolution> {
    instance.validate()?;
    instance.check_simulable()?;
    check_shapes(bids, instance)?;
    let psi0 = joint_initial(bids)?;
    let hp = problem_hamiltonian(instance)?;
    let diag: Vec<f64> = hp.diagonal_entries().expect("diagonal").iter().map(|x| x.re).collect();
    let scale = diag.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let diag: Vec<f64> = diag.iter().map(|x| x / scale).collect();
    let support: Vec<bool> = psi0.amplitudes().iter().map(|a| a.norm_sqr() > 0.0).collect();
    let p0 = psi0.amplitudes();

    // ‖H(s)‖ ≤ 2, so sub-steps of length ≤ 1/2 keep each Krylov step short
    let substeps = (2.0 * dt).ceil().max(1.0) as usize;
    let h = dt / substeps as f64;

    let mut psi = p0.to_vec();
    let mut max_outside = 0.0f64;
    let mut max_drift = 0.0f64;
    for k in 1..=steps {
        let s = k as f64 / steps as f64;
        let apply_h = |v: &[Complex64], out: &mut [Complex64]| {
            let overlap: Complex64 = p0.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
            for i in 0..v.len() {
                out[i] = (1.0 - s) * (v[i] - p0[i] * overlap) + s * diag[i] * v[i];
            }
        };
        for _ in 0..substeps {
            psi = krylov_expm(apply_h, &psi, h, 30);
        }
        let outside: f64 = psi.iter().zip(&support).filter(|(_, &inside)| !inside).map(|(a, _)| a.norm_sqr()).sum();
        let norm = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        max_outside = max_outside.max(outside);
        max_drift = max_drift.max((norm - 1.0).abs());
    }
    Ok(Evolution {
        state: StateVector::from_amplitudes(psi)?,
        max_outside_support: max_outside,
        max_norm_drift: max_drift,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub index: usize,
    pub outcome: Outcome,
    pub evolution: Evolution,
}

fn sample_index(state: &StateVector, seed: u64) -> usize {
    born_index(&cumulative(&state.probabilities()), seeded(seed).unit())
}

/// One annealing run followed by a single Born measurement with `cfg.seed`.
pub fn adiabatic_search(bids: &[BidSuperposition], instance: &AuctionInstance, cfg: &SearchConfig) -> Result<SearchResult> {
    cfg.validate()?;
    let evolution = evolve(bids, instance, cfg.steps, cfg.dt)?;
    let index = sample_index(&evolution.state, cfg.seed);
    Ok(SearchResult { index, outcome: outcome_of_index(index, instance), evolution })
}

/// Exhaustive winner determination over "one term or no win" per bidder.
///
/// Ties go to the lexicographically smallest vector of per-bidder register
/// indices (no win = 0), which is the smallest joint index.
pub fn brute_force_wda(bids: &[BidSuperposition], instance: &AuctionInstance) -> Result<(Outcome, f64)> {
    instance.validate()?;
    check_shapes(bids, instance)?;
    let count: u128 = bids.iter().map(|b| b.terms.len() as u128 + 1).product();
    if count > MAX_ENUMERATION {
        return Err(Error::EnumerationLimit { count, limit: MAX_ENUMERATION });
    }
    // per-bidder candidate register indices, sorted so enumeration is lexicographic
    let choices: Vec<Vec<usize>> = bids
        .iter()
        .map(|b| {
            let mut c: BTreeSet<usize> =
                b.terms.iter().map(|t| encode_term(t, &b.register).expect("validated")).collect();
            c.insert(0);
            c.into_iter().collect()
        })
        .collect();
    let bits = instance.register.bits() as usize;
    let mut best: Option<(f64, usize)> = None;
    let mut cursor = vec![0usize; choices.len()];
    loop {
        let joint = cursor.iter().zip(&choices).fold(0usize, |acc, (&c, opts)| (acc << bits) | opts[c]);
        let o = outcome_of_index(joint, instance);
        if o.feasible && best.is_none_or(|(r, _)| o.revenue > r) {
            best = Some((o.revenue, joint));
        }
        // odometer increment, last bidder fastest
        let mut pos = choices.len();
        loop {
            if pos == 0 {
                let (rev, joint) = best.expect("all-no-win outcome is feasible");
                return Ok((outcome_of_index(joint, instance), rev));
            }
            pos -= 1;
            cursor[pos] += 1;
            if cursor[pos] < choices[pos].len() {
                break;
            }
            cursor[pos] = 0;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeFrequency {
    pub index: usize,
    pub outcome: Outcome,
    pub count: usize,
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuctionStats {
    pub runs: usize,
    pub seed: u64,
    pub frequencies: Vec<OutcomeFrequency>,
    /// Fraction of runs whose sample attains the oracle's optimal revenue.
    pub success_rate: f64,
    pub feasible_rate: f64,
    /// Mean revenue over all runs, infeasible samples counting as 0.
    pub mean_revenue: f64,
    pub oracle_revenue: f64,
    pub oracle_outcome: Outcome,
    /// Joint index sampled in each run, in run order.
    pub samples: Vec<usize>,
    pub max_outside_support: f64,
    pub max_norm_drift: f64,
}

impl AuctionStats {
    /// Highest-revenue feasible sample, earliest run first on ties.
    pub fn best_feasible(&self, instance: &AuctionInstance) -> Option<(usize, Outcome)> {
        let mut best: Option<(usize, Outcome)> = None;
        for &idx in &self.samples {
            let o = outcome_of_index(idx, instance);
            if o.feasible && best.as_ref().is_none_or(|(_, b)| o.revenue > b.revenue) {
                best = Some((idx, o));
            }
        }
        best
    }
}

/// Repeats the search `cfg.runs` times; run `r` measures with seed
/// `derive_seed(cfg.seed, r)`. The schedule is deterministic, so the state is
/// evolved once and only the measurement is repeated.
pub fn run_auction(bids: &[BidSuperposition], instance: &AuctionInstance, cfg: &SearchConfig) -> Result<AuctionStats> {
    cfg.validate()?;
    let (oracle_outcome, oracle_revenue) = brute_force_wda(bids, instance)?;
    let evolution = evolve(bids, instance, cfg.steps, cfg.dt)?;
    let samples: Vec<usize> =
        (0..cfg.runs).map(|r| sample_index(&evolution.state, derive_seed(cfg.seed, r as u64))).collect();

    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    let (mut successes, mut feasible, mut revenue) = (0usize, 0usize, 0.0);
    for &idx in &samples {
        *counts.entry(idx).or_default() += 1;
        let o = outcome_of_index(idx, instance);
        if o.feasible {
            feasible += 1;
            revenue += o.revenue;
            if (o.revenue - oracle_revenue).abs() <= 1e-9 * (1.0 + oracle_revenue.abs()) {
                successes += 1;
            }
        }
    }
    let runs = cfg.runs as f64;
    let mut frequencies: Vec<OutcomeFrequency> = counts
        .into_iter()
        .map(|(index, count)| OutcomeFrequency {
            index,
            outcome: outcome_of_index(index, instance),
            count,
            frequency: count as f64 / runs,
        })
        .collect();
    frequencies.sort_by(|a, b| b.count.cmp(&a.count).then(a.index.cmp(&b.index)));
    Ok(AuctionStats {
        runs: cfg.runs,
        seed: cfg.seed,
        frequencies,
        success_rate: successes as f64 / runs,
        feasible_rate: feasible as f64 / runs,
        mean_revenue: revenue / runs,
        oracle_revenue,
        oracle_outcome,
        samples,
        max_outside_support: evolution.max_outside_support,
        max_norm_drift: evolution.max_norm_drift,
    })
}

/// Bundle given either as an integer bitmask or a binary string such as `"01"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BundleSpec {
    Mask(u32),
    Bits(String),
}

impl BundleSpec {
    pub fn mask(&self) -> Result<u32> {
        match self {
            BundleSpec::Mask(m) => Ok(*m),
            BundleSpec::Bits(s) => u32::from_str_radix(s.trim_start_matches("0b"), 2)
                .map_err(|_| invalid(format!("bundle {s:?} is not a binary string"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermSpec {
    pub bundle: BundleSpec,
    pub level: u32,
    pub amp: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BidSpec {
    pub id: String,
    pub terms: Vec<TermSpec>,
}

impl BidSpec {
    pub fn build(&self, register: BidderRegister) -> Result<BidSuperposition> {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                Ok(BidTerm {
                    bundle: t.bundle.mask()?,
                    price_level: t.level,
                    amplitude: Complex64::new(t.amp[0], t.amp[1]),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        BidSuperposition::new(self.id.clone(), register, terms)
    }
}

/// JSON auction document: register shape, tick, bids and (optionally) the
/// item count, penalty and search schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuctionFile {
    pub register: BidderRegister,
    #[serde(default)]
    pub items: Option<u32>,
    pub tick: f64,
    #[serde(default)]
    pub penalty: Option<f64>,
    pub bidders: Vec<BidSpec>,
    #[serde(default)]
    pub search: Option<SearchConfig>,
}

pub const DEFAULT_SEARCH: SearchConfig = SearchConfig { steps: 200, dt: 0.5, seed: 0, runs: 200 };

impl AuctionFile {
    pub fn build(&self) -> Result<(Vec<BidSuperposition>, AuctionInstance)> {
        let instance = AuctionInstance::new(
            self.items.unwrap_or(self.register.p_item),
            self.register,
            self.bidders.len(),
            self.tick,
            self.penalty,
        )?;
        let mut ids = BTreeSet::new();
        let bids = self
            .bidders
            .iter()
            .map(|b| {
                if !ids.insert(b.id.as_str()) {
                    return Err(invalid(format!("duplicate bidder id {:?}", b.id)));
                }
                b.build(self.register)
            })
            .collect::<Result<Vec<_>>>()?;
        check_shapes(&bids, &instance)?;
        Ok((bids, instance))
    }

    pub fn search_config(&self) -> SearchConfig {
        self.search.unwrap_or(DEFAULT_SEARCH)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevec::{apply_factor, basis_state};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn term(bundle: u32, level: u32, amp: Complex64) -> BidTerm {
        BidTerm { bundle, price_level: level, amplitude: amp }
    }

    fn reg22() -> BidderRegister {
        BidderRegister::new(2, 2).unwrap()
    }

    #[test]
    fn encode_examples() {
        let r = reg22();
        assert_eq!(encode_term(&term(0, 0, c(1.)), &r).unwrap(), 0);
        assert_eq!(encode_term(&term(0b10, 3, c(1.)), &r).unwrap(), 11);
        assert!(encode_term(&term(0, 4, c(1.)), &r).is_err());
        assert!(encode_term(&term(0b100, 0, c(1.)), &r).is_err());
        assert_eq!(r.decode(11), (0b10, 3));
    }

    #[test]
    fn bid_validation() {
        let r = reg22();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(BidSuperposition::new("a", r, vec![]).is_err());
        assert!(BidSuperposition::new("a", r, vec![term(1, 1, c(0.5)), term(2, 1, c(0.5))]).is_err());
        assert!(BidSuperposition::new("a", r, vec![term(1, 1, c(h)), term(1, 1, c(h))]).is_err());
        assert!(BidSuperposition::new("a", r, vec![term(1, 1, c(h)), term(2, 1, Complex64::new(0., h))]).is_ok());
        assert!(BidderRegister::new(0, 2).is_err());
    }

    #[test]
    fn single_term_at_origin_gives_identity() {
        let b = BidSuperposition::new("a", reg22(), vec![term(0, 0, c(1.))]).unwrap();
        let u = bidder_unitary(&b).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_eq!(u.entry(i, j), c(want));
            }
        }
    }

    #[test]
    fn unitary_first_column_is_bid() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let b = BidSuperposition::new("a", reg22(), vec![term(1, 3, c(h)), term(2, 1, c(h))]).unwrap();
        let u = bidder_unitary(&b).unwrap();
        let v = b.bid_vector();
        for i in 0..16 {
            assert!((u.entry(i, 0) - v.amp(i)).norm() < 1e-15);
        }
        assert!(u.unitarity_defect() < 1e-10);

        // with a non-trivial phase on |0>
        let b = BidSuperposition::new("a", reg22(), vec![term(0, 0, Complex64::new(0., 0.6)), term(2, 1, c(0.8))]).unwrap();
        let u = bidder_unitary(&b).unwrap();
        assert!((u.entry(0, 0) - Complex64::new(0., 0.6)).norm() < 1e-15);
        assert!((u.entry(9, 0) - c(0.8)).norm() < 1e-15);
    }

    #[test]
    fn joint_initial_properties() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let a = BidSuperposition::new("a", reg22(), vec![term(1, 3, c(h)), term(2, 1, c(h))]).unwrap();
        let b = BidSuperposition::new("b", reg22(), vec![term(2, 2, c(0.6)), term(1, 1, Complex64::new(0., 0.8))]).unwrap();
        assert_eq!(joint_initial(std::slice::from_ref(&a)).unwrap(), a.bid_vector());
        let joint = joint_initial(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(joint.dim(), 256);
        let ia = encode_term(&a.terms()[0], &a.register).unwrap();
        let ib = encode_term(&b.terms()[1], &b.register).unwrap();
        assert!((joint.amp(ia * 16 + ib) - c(h) * Complex64::new(0., 0.8)).norm() < 1e-15);

        // same state as U_a ⊗ U_b applied to |0...0>
        let mut psi = basis_state(256, 0).unwrap();
        psi = apply_factor(&bidder_unitary(&a).unwrap(), &psi, 1, 16).unwrap();
        psi = apply_factor(&bidder_unitary(&b).unwrap(), &psi, 16, 1).unwrap();
        for i in 0..256 {
            assert!((psi.amp(i) - joint.amp(i)).norm() < 1e-14);
        }

        let other = BidSuperposition::new("c", BidderRegister::new(1, 2).unwrap(), vec![term(1, 1, c(1.))]).unwrap();
        assert!(joint_initial(&[a, other]).is_err());
    }

    #[test]
    fn outcome_examples() {
        let inst = AuctionInstance::new(2, reg22(), 2, 1.0, None).unwrap();
        let idx = |bundle: u32, level: u32| ((bundle << 2) | level) as usize;
        let o = outcome_of_index(idx(0b01, 2) * 16 + idx(0b10, 1), &inst);
        assert!(o.feasible);
        assert_eq!(o.revenue, 3.0);
        let o = outcome_of_index(idx(0b01, 2) * 16 + idx(0b01, 1), &inst);
        assert!(!o.feasible);
        assert_eq!(o.revenue, 0.0);
        let o = outcome_of_index(0, &inst);
        assert!(o.feasible && o.revenue == 0.0 && o.allocations == vec![None, None]);

        let hp = problem_hamiltonian(&inst).unwrap();
        assert_eq!(hp.entry(idx(0b01, 2) * 16 + idx(0b10, 1), idx(0b01, 2) * 16 + idx(0b10, 1)), c(-3.));
        let w = idx(0b01, 2) * 16 + idx(0b01, 1);
        assert_eq!(hp.entry(w, w), c(inst.penalty));
        assert_eq!(hp.entry(0, 0), c(0.));
    }

    #[test]
    fn penalty_dominance_enforced() {
        assert!(AuctionInstance::new(2, reg22(), 2, 1.0, Some(8.0)).is_err());
        assert_eq!(AuctionInstance::new(2, reg22(), 2, 1.0, None).unwrap().penalty, 9.0);
        assert!(AuctionInstance::new(3, reg22(), 2, 1.0, None).is_err());
    }

    #[test]
    fn empty_bundle_bids_earn_nothing() {
        let inst = AuctionInstance::new(2, reg22(), 2, 1.0, None).unwrap();
        let a = BidSuperposition::new("a", reg22(), vec![term(0, 0, c(1.))]).unwrap();
        let b = BidSuperposition::new("b", reg22(), vec![term(0, 0, c(1.))]).unwrap();
        assert_eq!(brute_force_wda(&[a, b], &inst).unwrap().1, 0.0);
    }

    #[test]
    fn same_item_competition() {
        let r = BidderRegister::new(1, 2).unwrap();
        let inst = AuctionInstance::new(1, r, 2, 1.0, None).unwrap();
        let a = BidSuperposition::new("a", r, vec![term(1, 3, c(1.))]).unwrap();
        let b = BidSuperposition::new("b", r, vec![term(1, 2, c(1.))]).unwrap();
        let (o, rev) = brute_force_wda(&[a.clone(), b], &inst).unwrap();
        assert_eq!(rev, 3.0);
        assert_eq!(o.allocations, vec![Some(Allocation { bundle: 1, price_level: 3 }), None]);

        // equal prices: the smaller index vector (0, idx_b) beats (idx_a, 0)
        let b = BidSuperposition::new("b", r, vec![term(1, 3, c(1.))]).unwrap();
        let (o, rev) = brute_force_wda(&[a, b], &inst).unwrap();
        assert_eq!(rev, 3.0);
        assert_eq!(o.allocations, vec![None, Some(Allocation { bundle: 1, price_level: 3 })]);
    }

    #[test]
    fn single_bidder_single_term_is_certain() {
        let r = reg22();
        let inst = AuctionInstance::new(2, r, 1, 1.0, None).unwrap();
        let a = BidSuperposition::new("a", r, vec![term(0b11, 2, Complex64::new(0., 1.))]).unwrap();
        for steps in [1, 7, 50] {
            let res = adiabatic_search(std::slice::from_ref(&a), &inst, &SearchConfig { steps, dt: 0.5, seed: 3, runs: 1 }).unwrap();
            assert_eq!(res.index, encode_term(&a.terms()[0], &r).unwrap());
            assert!(res.evolution.max_norm_drift < 1e-12);
        }
    }

    #[test]
    fn krylov_matches_dense_exponential() {
        use crate::rng::seeded;
        use crate::statevec::{apply, exp_antihermitian, random_hermitian};
        let mut rng = seeded(4);
        let h = random_hermitian(40, 0.3, &mut rng).unwrap();
        let psi = crate::statevec::superpose(40, &[(0, c(1.)), (7, Complex64::new(0.3, 0.4)), (39, c(-0.5))]).unwrap();
        let dense = h.to_dense();
        let out = krylov_expm(
            |v, o| {
                for r in 0..40 {
                    o[r] = (0..40).map(|k| dense[(r, k)] * v[k]).sum();
                }
            },
            psi.amplitudes(),
            0.5,
            30,
        );
        let u = exp_antihermitian(&h.scale(Complex64::new(0., -0.5))).unwrap();
        let want = apply(&u, &psi).unwrap();
        for (a, b) in out.iter().zip(want.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn auction_file_parses_bitstrings() {
        let json = r#"{"register": {"p_item": 2, "p_price": 2}, "tick": 1,
            "bidders": [{"id": "A", "terms": [{"bundle": "01", "level": 3, "amp": [1, 0]}]},
                        {"id": "B", "terms": [{"bundle": 2, "level": 2, "amp": [0, 1]}]}]}"#;
        let f: AuctionFile = serde_json::from_str(json).unwrap();
        let (bids, inst) = f.build().unwrap();
        assert_eq!(bids[0].terms()[0].bundle, 1);
        assert_eq!(bids[1].terms()[0].bundle, 2);
        assert_eq!(inst.items, 2);
        assert_eq!(f.search_config(), DEFAULT_SEARCH);
    }
}
