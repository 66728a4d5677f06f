//! Quantum bargaining over log-prices.
//!
//! A buyer's strategy is a wavefunction `⟨q|ψ⟩` over the log-price `q`; a
//! seller's is `⟨p|ψ⟩` over the conjugate variable `p`, where selling at
//! price `c` corresponds to `p ≤ ln(1/c)`. Both are sampled on a uniform
//! [`LogPriceGrid`] and integrated with the trapezoidal rule.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{derive_seed, seeded, SimRngExt};

pub const BOUNDARY_MASS_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogPriceGrid {
    #[serde(rename = "qmin")]
    pub q_min: f64,
    #[serde(rename = "qmax")]
    pub q_max: f64,
    pub n: usize,
}

impl Default for LogPriceGrid {
    fn default() -> Self {
        Self { q_min: -8.0, q_max: 8.0, n: 4096 }
    }
}

impl LogPriceGrid {
    pub fn new(q_min: f64, q_max: f64, n: usize) -> Result<Self> {
        let g = Self { q_min, q_max, n };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q_min.is_finite() && self.q_max.is_finite() && self.q_min < self.q_max) {
            return Err(invalid("grid requires finite q_min < q_max"));
        }
        if self.n < 16 {
            return Err(invalid("grid requires at least 16 points"));
        }
        Ok(())
    }

    pub fn dq(&self) -> f64 {
        (self.q_max - self.q_min) / (self.n - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.q_min + i as f64 * self.dq()
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.point(i))
    }

    /// Trapezoidal quadrature weight of node `i`.
    fn weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.n {
            self.dq() / 2.0
        } else {
            self.dq()
        }
    }

    /// Index of the node nearest to `x`, if `x` lies within the grid.
    pub fn nearest(&self, x: f64) -> Option<usize> {
        if !(x >= self.q_min && x <= self.q_max) {
            return None;
        }
        Some((((x - self.q_min) / self.dq()).round() as usize).min(self.n - 1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Buyer,
    Seller,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Buyer => "buyer",
            Side::Seller => "seller",
        }
    }
}

/// A trader's sampled wavefunction: `⟨q|ψ⟩` for buyers, `⟨p|ψ⟩` for sellers.
#[derive(Debug, Clone, PartialEq)]
pub struct TraderStrategy {
    pub id: String,
    pub side: Side,
    pub grid: LogPriceGrid,
    psi: Vec<Complex64>,
}

impl TraderStrategy {
    /// Validates grid length, a finite positive norm, and that the state is
    /// contained in the grid.
    pub fn new(id: impl Into<String>, side: Side, grid: LogPriceGrid, psi: Vec<Complex64>) -> Result<Self> {
        grid.validate()?;
        if psi.len() != grid.n {
            return Err(Error::DimensionMismatch { expected: grid.n, actual: psi.len() });
        }
        let t = Self { id: id.into(), side, grid, psi };
        let norm = t.norm_sqr();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::ZeroVector);
        }
        t.check_boundary()?;
        Ok(t)
    }

    /// Real Gaussian amplitude whose density `|ψ|²` is normal with the given
    /// mean and standard deviation.
    pub fn gaussian(id: impl Into<String>, side: Side, grid: LogPriceGrid, mean: f64, std: f64) -> Result<Self> {
        if !(std > 0.0 && std.is_finite() && mean.is_finite()) {
            return Err(invalid("gaussian strategy needs finite mean and positive std"));
        }
        let amp = (2.0 * std::f64::consts::PI * std * std).powf(-0.25);
        let psi = grid
            .points()
            .map(|x| Complex64::new(amp * (-(x - mean).powi(2) / (4.0 * std * std)).exp(), 0.0))
            .collect();
        Self::new(id, side, grid, psi)
    }

    pub fn psi(&self) -> &[Complex64] {
        &self.psi
    }

    /// `∫|ψ|²` by the trapezoidal rule.
    pub fn norm_sqr(&self) -> f64 {
        self.psi.iter().enumerate().map(|(i, a)| self.grid.weight(i) * a.norm_sqr()).sum()
    }

    fn boundary_fraction(&self) -> f64 {
        let ends = self.psi[0].norm_sqr() + self.psi[self.grid.n - 1].norm_sqr();
        ends * self.grid.dq() / self.norm_sqr()
    }

    fn check_boundary(&self) -> Result<()> {
        let fraction = self.boundary_fraction();
        if !(fraction < BOUNDARY_MASS_LIMIT) {
            return Err(Error::BoundaryMass { fraction });
        }
        Ok(())
    }

    fn require_side(&self, side: Side) -> Result<()> {
        if self.side != side {
            return Err(Error::WrongSide { expected: side.name() });
        }
        Ok(())
    }

    /// Central-difference slope of the density `|ψ|²` at every node.
    fn density_slopes(&self, f: &[f64]) -> Vec<f64> {
        let dq = self.grid.dq();
        let n = f.len();
        (0..n)
            .map(|i| match i {
                0 => (f[1] - f[0]) / dq,
                _ if i == n - 1 => (f[n - 1] - f[n - 2]) / dq,
                _ => (f[i + 1] - f[i - 1]) / (2.0 * dq),
            })
            .collect()
    }

    /// Normalized cumulative distribution at every node: trapezoidal sums
    /// with the Euler–Maclaurin slope correction, so the error is O(dq⁴).
    fn node_cdf(&self) -> Vec<f64> {
        let f: Vec<f64> = self.psi.iter().map(|a| a.norm_sqr()).collect();
        let d = self.density_slopes(&f);
        let dq = self.grid.dq();
        let mut cdf = Vec::with_capacity(f.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for (i, w) in f.windows(2).enumerate() {
            acc += 0.5 * dq * (w[0] + w[1]);
            cdf.push(acc - dq * dq / 12.0 * (d[i + 1] - d[0]));
        }
        let total = *cdf.last().expect("grid has at least two nodes");
        cdf.iter_mut().for_each(|c| *c /= total);
        cdf
    }

    /// Unnormalized mass of the full grid under the same rule as [`Self::node_cdf`].
    fn corrected_mass(&self, f: &[f64], d: &[f64]) -> f64 {
        let dq = self.grid.dq();
        let trap: f64 = f.windows(2).map(|w| 0.5 * dq * (w[0] + w[1])).sum();
        trap - dq * dq / 12.0 * (d[d.len() - 1] - d[0])
    }

    /// Mass inside cell `i` from its left node to offset `h`, integrating the
    /// cubic Hermite interpolant of the density. Over a whole cell this is the
    /// corrected trapezoid, and splitting a cell at any point is additive.
    fn partial_cell(&self, f: &[f64], d: &[f64], i: usize, h: f64) -> f64 {
        let dq = self.grid.dq();
        let s = h / dq;
        let (s2, s3, s4) = (s * s, s * s * s, s * s * s * s);
        dq * (f[i] * (s4 / 2.0 - s3 + s) + f[i + 1] * (s3 - s4 / 2.0))
            + dq * dq * (d[i] * (s4 / 4.0 - 2.0 * s3 / 3.0 + s2 / 2.0) + d[i + 1] * (s4 / 4.0 - s3 / 3.0))
    }

    /// Probability mass below coordinate `x`.
    pub fn mass_below(&self, x: f64) -> f64 {
        let g = &self.grid;
        if x <= g.q_min {
            return 0.0;
        }
        if x >= g.q_max {
            return 1.0;
        }
        let f: Vec<f64> = self.psi.iter().map(|a| a.norm_sqr()).collect();
        let d = self.density_slopes(&f);
        let cdf = self.node_cdf();
        let total = self.corrected_mass(&f, &d);
        let i = (((x - g.q_min) / g.dq()).floor() as usize).min(g.n - 2);
        let h = x - g.point(i);
        (cdf[i] + self.partial_cell(&f, &d, i, h) / total).clamp(0.0, 1.0)
    }

    /// Inverse-CDF sample of the grid coordinate for a uniform `u ∈ [0, 1)`.
    fn inverse_cdf(&self, u: f64) -> f64 {
        let cdf = self.node_cdf();
        let f: Vec<f64> = self.psi.iter().map(|a| a.norm_sqr()).collect();
        let total = self.corrected_mass(&f, &self.density_slopes(&f));
        let dq = self.grid.dq();
        let i = cdf.partition_point(|&c| c <= u).clamp(1, self.grid.n - 1) - 1;
        // solve f0·h + (f1 − f0)·h²/(2dq) = residual mass inside cell i
        let t = (u - cdf[i]) * total;
        let f0 = self.psi[i].norm_sqr();
        let f1 = self.psi[i + 1].norm_sqr();
        let a = (f1 - f0) / (2.0 * dq);
        let disc = (f0 * f0 + 4.0 * a * t).max(0.0);
        let denom = f0 + disc.sqrt();
        let h = if denom > 0.0 { 2.0 * t / denom } else { 0.0 };
        self.grid.point(i) + h.clamp(0.0, dq)
    }

    pub fn sample_coordinate(&self, seed: u64) -> f64 {
        self.inverse_cdf(seeded(seed).unit())
    }
}

/// Probability that a buyer trades at price `c` or lower: `∫_{−∞}^{ln c} |⟨q|ψ⟩|² dq / ⟨ψ|ψ⟩`.
pub fn buy_probability(t: &TraderStrategy, c: f64) -> Result<f64> {
    t.require_side(Side::Buyer)?;
    if !(c > 0.0) {
        return Err(invalid("price must be positive"));
    }
    Ok(t.mass_below(c.ln()))
}

/// Probability that a seller trades at price `c` or greater: `∫_{−∞}^{ln(1/c)} |⟨p|ψ⟩|² dp / ⟨ψ|ψ⟩`.
pub fn sell_probability(t: &TraderStrategy, c: f64) -> Result<f64> {
    t.require_side(Side::Seller)?;
    if !(c > 0.0) {
        return Err(invalid("price must be positive"));
    }
    Ok(t.mass_below(-c.ln()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskParams {
    pub m: f64,
    pub theta: f64,
}

impl RiskParams {
    pub fn new(m: f64, theta: f64) -> Result<Self> {
        if !(m > 0.0 && theta > 0.0 && m.is_finite() && theta.is_finite()) {
            return Err(invalid("risk parameters m and theta must be positive"));
        }
        Ok(Self { m, theta })
    }

    pub fn omega(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.theta
    }
}

impl Default for RiskParams {
    fn default() -> Self {
        Self { m: 1.0, theta: 2.0 * std::f64::consts::PI }
    }
}

/// Variances of the grid coordinate and of its conjugate `−i d/dx`.
fn coordinate_variances(t: &TraderStrategy) -> (f64, f64) {
    let g = &t.grid;
    let dq = g.dq();
    let psi = &t.psi;
    let n = g.n;
    let norm = t.norm_sqr();

    let mean_x = (0..n).map(|i| g.weight(i) * g.point(i) * psi[i].norm_sqr()).sum::<f64>() / norm;
    let var_x = (0..n).map(|i| g.weight(i) * (g.point(i) - mean_x).powi(2) * psi[i].norm_sqr()).sum::<f64>() / norm;

    let deriv = |i: usize| -> Complex64 {
        if i == 0 {
            (-3.0 * psi[0] + 4.0 * psi[1] - psi[2]) / (2.0 * dq)
        } else if i + 1 == n {
            (3.0 * psi[n - 1] - 4.0 * psi[n - 2] + psi[n - 3]) / (2.0 * dq)
        } else {
            (psi[i + 1] - psi[i - 1]) / (2.0 * dq)
        }
    };
    let minus_i = Complex64::new(0.0, -1.0);
    let mut mean_k = 0.0;
    let mut mean_k2 = 0.0;
    for i in 0..n {
        let d = deriv(i);
        mean_k += g.weight(i) * (psi[i].conj() * minus_i * d).re;
        mean_k2 += g.weight(i) * d.norm_sqr();
    }
    mean_k /= norm;
    mean_k2 /= norm;
    (var_x, mean_k2 - mean_k * mean_k)
}

/// `⟨H⟩` for `H = (𝒫 − p₀)²/2m + mω²(𝒬 − q₀)²/2` with `p₀`, `q₀` the state's
/// own normalized expectations, i.e. `Var(𝒫)/2m + mω²·Var(𝒬)/2`.
///
/// For buyers `𝒬` is the grid coordinate and `𝒫 = −i d/dq` (central
/// differences); sellers are represented in `p`, so the roles swap.
pub fn risk_inclination(t: &TraderStrategy, rp: &RiskParams) -> Result<f64> {
    t.check_boundary()?;
    let (var_coord, var_conj) = coordinate_variances(t);
    let (var_q, var_p) = match t.side {
        Side::Buyer => (var_coord, var_conj),
        Side::Seller => (var_conj, var_coord),
    };
    let w = rp.omega();
    Ok(var_p / (2.0 * rp.m) + rp.m * w * w * var_q / 2.0)
}

/// Split of the traders into buyers `{k_d}` and sellers `{k_s}`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Division {
    pub buyers: BTreeSet<String>,
    pub sellers: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trade {
    pub buyer: String,
    pub seller: String,
    pub price: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ClearingOutcome {
    /// Uniform clearing price; absent when nothing trades.
    pub price: Option<f64>,
    pub trades: Vec<Trade>,
    /// Signed capital flow per matched trader: buyers pay, sellers receive.
    pub flows: BTreeMap<String, f64>,
    /// Sampled coordinate per trader: reservation `q` for buyers, `p` for sellers.
    pub collapsed: BTreeMap<String, f64>,
}

impl ClearingOutcome {
    /// Sum of all flows. Inflows and outflows are accumulated separately so
    /// that equal and opposite legs cancel without rounding residue.
    pub fn flow_total(&self) -> f64 {
        let inflow: f64 = self.flows.values().filter(|v| **v > 0.0).sum();
        let outflow: f64 = self.flows.values().filter(|v| **v < 0.0).map(|v| -v).sum();
        inflow - outflow
    }
}

fn check_ids(traders: &[TraderStrategy]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for t in traders {
        if !seen.insert(t.id.as_str()) {
            return Err(invalid(format!("duplicate trader id {:?}", t.id)));
        }
    }
    Ok(())
}

/// Clears at given sampled coordinates (`q` for buyers, `p` for sellers).
///
/// Buyers are ranked by reservation `q` descending, sellers by ask `−p`
/// ascending (ties by id), and pairs are matched while reservation ≥ ask. All
/// matched pairs trade at `exp` of the midpoint of the marginal pair.
pub fn clear_at(traders: &[TraderStrategy], coords: &BTreeMap<String, f64>) -> Result<(Division, ClearingOutcome)> {
    if traders.is_empty() {
        return Err(invalid("clearing needs at least one trader"));
    }
    check_ids(traders)?;
    let mut division = Division::default();
    let mut bids = Vec::new();
    let mut asks = Vec::new();
    for t in traders {
        let x = *coords.get(&t.id).ok_or_else(|| invalid(format!("no sampled coordinate for {:?}", t.id)))?;
        match t.side {
            Side::Buyer => {
                division.buyers.insert(t.id.clone());
                bids.push((x, t.id.as_str()));
            }
            Side::Seller => {
                division.sellers.insert(t.id.clone());
                asks.push((-x, t.id.as_str()));
            }
        }
    }
    bids.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    asks.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));

    let matched = bids.iter().zip(&asks).take_while(|(b, a)| b.0 >= a.0).count();
    let mut outcome = ClearingOutcome { collapsed: coords.clone(), ..Default::default() };
    outcome.collapsed.retain(|id, _| traders.iter().any(|t| &t.id == id));
    if matched > 0 {
        let (bid, ask) = (bids[matched - 1].0, asks[matched - 1].0);
        let price = (0.5 * (bid + ask)).exp();
        outcome.price = Some(price);
        for ((_, buyer), (_, seller)) in bids.iter().zip(&asks).take(matched) {
            outcome.trades.push(Trade { buyer: buyer.to_string(), seller: seller.to_string(), price });
            outcome.flows.insert(buyer.to_string(), -price);
            outcome.flows.insert(seller.to_string(), price);
        }
    }
    Ok((division, outcome))
}

/// Samples every trader's coordinate (trader `i` uses `derive_seed(seed, i)`)
/// and clears the market with [`clear_at`].
pub fn clearing(traders: &[TraderStrategy], seed: u64) -> Result<(Division, ClearingOutcome)> {
    if traders.is_empty() {
        return Err(invalid("clearing needs at least one trader"));
    }
    let coords = traders
        .iter()
        .enumerate()
        .map(|(i, t)| (t.id.clone(), t.sample_coordinate(derive_seed(seed, i as u64))))
        .collect();
    clear_at(traders, &coords)
}

/// Collapses the strategy onto the grid node nearest `sampled_coord`.
pub fn transaction_projection(t: &TraderStrategy, sampled_coord: f64) -> Result<TraderStrategy> {
    let k = t
        .grid
        .nearest(sampled_coord)
        .ok_or_else(|| invalid(format!("coordinate {sampled_coord} outside the grid")))?;
    let mut psi = vec![Complex64::new(0.0, 0.0); t.grid.n];
    psi[k] = Complex64::new(1.0 / t.grid.weight(k).sqrt(), 0.0);
    Ok(TraderStrategy { id: t.id.clone(), side: t.side, grid: t.grid, psi })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub division: Division,
    #[serde(flatten)]
    pub outcome: ClearingOutcome,
    /// Risk inclination of each trader's pre-round strategy.
    pub risk_inclination: BTreeMap<String, f64>,
}

/// One transaction round: clear, then project every matched trader onto its
/// sampled coordinate. Unmatched traders are returned unchanged.
pub fn market_round(
    traders: &[TraderStrategy],
    rp: &RiskParams,
    seed: u64,
) -> Result<(RoundReport, Vec<TraderStrategy>)> {
    let risk = traders
        .iter()
        .map(|t| Ok((t.id.clone(), risk_inclination(t, rp)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let (division, outcome) = clearing(traders, seed)?;
    let updated = traders
        .iter()
        .map(|t| {
            if outcome.flows.contains_key(&t.id) {
                transaction_projection(t, outcome.collapsed[&t.id])
            } else {
                Ok(t.clone())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((RoundReport { division, outcome, risk_inclination: risk }, updated))
}

/// JSON trader-ensemble document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleFile {
    #[serde(default)]
    pub grid: LogPriceGrid,
    pub traders: Vec<TraderSpec>,
    #[serde(default)]
    pub risk: Option<RiskParams>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraderSpec {
    pub id: String,
    pub side: Side,
    #[serde(flatten)]
    pub shape: StrategyShape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyShape {
    Psi(Vec<[f64; 2]>),
    Gaussian { mean: f64, std: f64 },
}

impl TraderSpec {
    pub fn build(&self, grid: LogPriceGrid) -> Result<TraderStrategy> {
        match &self.shape {
            StrategyShape::Psi(pairs) => {
                let psi = pairs.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
                TraderStrategy::new(self.id.clone(), self.side, grid, psi)
            }
            StrategyShape::Gaussian { mean, std } => {
                TraderStrategy::gaussian(self.id.clone(), self.side, grid, *mean, *std)
            }
        }
    }
}

impl EnsembleFile {
    pub fn build(&self) -> Result<Vec<TraderStrategy>> {
        self.grid.validate()?;
        let traders = self.traders.iter().map(|t| t.build(self.grid)).collect::<Result<Vec<_>>>()?;
        check_ids(&traders)?;
        Ok(traders)
    }

    pub fn risk_params(&self) -> Result<RiskParams> {
        let rp = self.risk.unwrap_or_default();
        RiskParams::new(rp.m, rp.theta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> LogPriceGrid {
        LogPriceGrid::default()
    }

    #[test]
    fn symmetric_gaussians_split_at_one() {
        let b = TraderStrategy::gaussian("b", Side::Buyer, grid(), 0.0, 0.7).unwrap();
        assert!((buy_probability(&b, 1.0).unwrap() - 0.5).abs() < 1e-6);
        let s = TraderStrategy::gaussian("s", Side::Seller, grid(), 0.0, 0.7).unwrap();
        assert!((sell_probability(&s, 1.0).unwrap() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn full_mass_beyond_grid() {
        let b = TraderStrategy::gaussian("b", Side::Buyer, grid(), 0.5, 1.0).unwrap();
        assert_eq!(buy_probability(&b, 9f64.exp()).unwrap(), 1.0);
        assert_eq!(buy_probability(&b, (-9f64).exp()).unwrap(), 0.0);
        let s = TraderStrategy::gaussian("s", Side::Seller, grid(), 0.5, 1.0).unwrap();
        assert_eq!(sell_probability(&s, (-8.5f64).exp()).unwrap(), 1.0);
    }

    #[test]
    fn probability_argument_errors() {
        let b = TraderStrategy::gaussian("b", Side::Buyer, grid(), 0.0, 1.0).unwrap();
        assert!(buy_probability(&b, 0.0).is_err());
        assert!(buy_probability(&b, -1.0).is_err());
        assert_eq!(sell_probability(&b, 1.0), Err(Error::WrongSide { expected: "seller" }));
    }

    #[test]
    fn boundary_mass_rejected() {
        let g = LogPriceGrid::new(-2.0, 2.0, 64).unwrap();
        assert!(matches!(
            TraderStrategy::gaussian("b", Side::Buyer, g, 0.0, 1.0),
            Err(Error::BoundaryMass { .. })
        ));
        assert!(TraderStrategy::new("z", Side::Buyer, g, vec![Complex64::new(0., 0.); 64]).is_err());
        assert!(LogPriceGrid::new(0.0, 1.0, 8).is_err());
    }

    #[test]
    fn real_wavefunction_momentum_variance() {
        let std = 0.8;
        let b = TraderStrategy::gaussian("b", Side::Buyer, grid(), 0.3, std).unwrap();
        let (_, var_p) = coordinate_variances(&b);
        // real psi: <P> = 0, so Var(P) = ∫|ψ'|² / ∫|ψ|²
        let g = b.grid;
        let dq = g.dq();
        let psi = b.psi();
        let grad: f64 = (1..g.n - 1)
            .map(|i| ((psi[i + 1] - psi[i - 1]) / (2.0 * dq)).norm_sqr() * dq)
            .sum::<f64>()
            / b.norm_sqr();
        assert!((var_p - grad).abs() < 1e-6);
        assert!((var_p - 1.0 / (4.0 * std * std)).abs() < 1e-5);
    }

    #[test]
    fn projection_properties() {
        let b = TraderStrategy::gaussian("b", Side::Buyer, grid(), 0.0, 1.0).unwrap();
        let once = transaction_projection(&b, 0.2).unwrap();
        assert!((once.norm_sqr() - 1.0).abs() < 1e-12);
        assert!((buy_probability(&once, 0.25f64.exp()).unwrap() - 1.0).abs() < 1e-12);
        let twice = transaction_projection(&once, 0.2).unwrap();
        assert_eq!(once, twice);
        assert!(transaction_projection(&b, 8.5).is_err());
    }

    #[test]
    fn one_sided_market_has_no_trades() {
        let b = TraderStrategy::gaussian("b", Side::Buyer, grid(), 0.0, 1.0).unwrap();
        let (div, out) = clearing(&[b], 3).unwrap();
        assert_eq!(div.buyers.len(), 1);
        assert!(out.trades.is_empty() && out.flows.is_empty() && out.price.is_none());
        assert!(clearing(&[], 0).is_err());
    }

    #[test]
    fn no_crossing_no_trades() {
        // buyer reservation near -2, seller ask near +2 (p near -2)
        let b = TraderStrategy::gaussian("b", Side::Buyer, grid(), -2.0, 0.1).unwrap();
        let s = TraderStrategy::gaussian("s", Side::Seller, grid(), -2.0, 0.1).unwrap();
        for seed in 0..10 {
            let (_, out) = clearing(&[b.clone(), s.clone()], seed).unwrap();
            assert!(out.trades.is_empty());
        }
    }

    #[test]
    fn hand_traced_clearing() {
        let g = grid();
        let traders = vec![
            TraderStrategy::gaussian("b1", Side::Buyer, g, 0.4, 1.0).unwrap(),
            TraderStrategy::gaussian("b2", Side::Buyer, g, 0.1, 1.0).unwrap(),
            TraderStrategy::gaussian("s1", Side::Seller, g, 0.0, 1.0).unwrap(),
        ];
        let coords: BTreeMap<String, f64> =
            [("b1".to_string(), 0.4), ("b2".to_string(), 0.1), ("s1".to_string(), 0.0)].into();
        let (div, out) = clear_at(&traders, &coords).unwrap();
        assert_eq!(div.buyers, ["b1".to_string(), "b2".to_string()].into());
        assert_eq!(div.sellers, ["s1".to_string()].into());
        let c = 0.2f64.exp();
        assert_eq!(out.price, Some(c));
        assert_eq!(out.trades, vec![Trade { buyer: "b1".into(), seller: "s1".into(), price: c }]);
        assert_eq!(out.flows["b1"], -c);
        assert_eq!(out.flows["s1"], c);
        assert!(!out.flows.contains_key("b2"));
        assert_eq!(out.flow_total(), 0.0);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let b = TraderStrategy::gaussian("x", Side::Buyer, grid(), 0.0, 1.0).unwrap();
        let s = TraderStrategy::gaussian("x", Side::Seller, grid(), 0.0, 1.0).unwrap();
        assert!(clearing(&[b, s], 0).is_err());
    }

    #[test]
    fn sampled_coordinates_follow_density() {
        let b = TraderStrategy::gaussian("b", Side::Buyer, grid(), 1.5, 0.5).unwrap();
        let xs: Vec<f64> = (0..4000).map(|s| b.sample_coordinate(s)).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!((mean - 1.5).abs() < 0.03, "mean {mean}");
        assert!((var.sqrt() - 0.5).abs() < 0.03, "std {}", var.sqrt());
    }

    #[test]
    fn market_round_updates_only_matched() {
        let g = grid();
        let traders = vec![
            TraderStrategy::gaussian("b", Side::Buyer, g, 2.0, 0.2).unwrap(),
            TraderStrategy::gaussian("s", Side::Seller, g, 2.0, 0.2).unwrap(),
            TraderStrategy::gaussian("lonely", Side::Buyer, g, -3.0, 0.2).unwrap(),
        ];
        let (report, updated) = market_round(&traders, &RiskParams::default(), 5).unwrap();
        assert_eq!(report.outcome.trades.len(), 1);
        assert_eq!(report.outcome.flow_total(), 0.0);
        assert_eq!(updated[2], traders[2]);
        assert_eq!(updated[0].psi().iter().filter(|a| a.norm() > 0.0).count(), 1);
        assert_eq!(report.risk_inclination.len(), 3);
    }

    #[test]
    fn ensemble_json() {
        let json = r#"{"grid": {"qmin": -8, "qmax": 8, "n": 512},
            "traders": [{"id": "a", "side": "buyer", "gaussian": {"mean": 0.2, "std": 1.0}},
                        {"id": "b", "side": "seller", "gaussian": {"mean": 0.0, "std": 0.5}}]}"#;
        let f: EnsembleFile = serde_json::from_str(json).unwrap();
        let traders = f.build().unwrap();
        assert_eq!(traders.len(), 2);
        assert_eq!(traders[1].side, Side::Seller);
        assert_eq!(f.risk_params().unwrap(), RiskParams::default());
    }
}
