//! Analytic error tracking through multi-round factories.
//!
//! Module checking: a level-`l` module takes `n_l` successful level-`(l-1)`
//! branches and runs `N_l` blocks, qubit `j` of branch `i` feeding block `j`
//! at input `i`. An undetected error needs `d_l` identical corrupt branches
//! placed on an undetected weight-`d_l` pattern, so the leading coefficient
//! obeys `C_l = prod_j sum_v eta_j(v)^(d_{j+1} ... d_l)` and the minimum
//! weight of a level-`l` failure is `w_l = d_1 ... d_l`. With
//! `r_l = C_l eps^w_l / (1-eps)^w_l` the success probability of a level-`l`
//! module given successful inputs is `(1 + r_l) / (1 + r_{l-1})^{n_l}` for
//! `l >= 2` and `(1-eps)^{n_1} (1 + r_1)` at the first level, and the error
//! of an accepted branch is `r_l / (1 + r_l)`.
//!
//! Block checking: every block is checked on its own and the per-output
//! error is propagated through independent rounds.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::codes::{eta, sum_eta_power, BlockSpectra, EtaFunction, ProtocolCode, ProtocolKind, Species};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CheckingMode {
    Block,
    Module,
}

impl FromStr for CheckingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "block" => Ok(CheckingMode::Block),
            "module" => Ok(CheckingMode::Module),
            other => Err(Error::InvalidConfig(format!("unknown checking mode {other:?}"))),
        }
    }
}

impl fmt::Display for CheckingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckingMode::Block => "block",
            CheckingMode::Module => "module",
        })
    }
}

/// One round of a factory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Round {
    pub kind: ProtocolKind,
    /// Attempts allowed per slot before the round is declared failed.
    pub attempts: usize,
}

/// Ordered rounds sharing one checking mode.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FactorySpec {
    pub rounds: Vec<Round>,
    pub mode: CheckingMode,
}

impl FactorySpec {
    pub fn new(kinds: &[ProtocolKind], mode: CheckingMode) -> Result<Self> {
        let spec = Self { rounds: kinds.iter().map(|&kind| Round { kind, attempts: 1 }).collect(), mode };
        spec.validate()?;
        Ok(spec)
    }

    /// Parses a comma-separated round list such as `bh:10,bh:10,tof`.
    pub fn parse(rounds: &str, mode: CheckingMode) -> Result<Self> {
        let kinds = parse_rounds(rounds)?;
        Self::new(&kinds, mode)
    }

    pub fn kinds(&self) -> Vec<ProtocolKind> {
        self.rounds.iter().map(|r| r.kind).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds.is_empty() {
            return Err(Error::InvalidConfig("a factory needs at least one round".into()));
        }
        let mut species = Species::T;
        for r in &self.rounds {
            if let ProtocolKind::Bh { k } = r.kind {
                if k < 2 || k % 2 != 0 {
                    return Err(Error::InvalidCode(format!("the 3k+8 family needs even k >= 2, got {k}")));
                }
            }
            if r.attempts == 0 {
                return Err(Error::InvalidConfig("attempts per round must be positive".into()));
            }
            species = r.kind.output_species(species)?;
        }
        Ok(())
    }

    /// Species of the factory output.
    pub fn output_species(&self) -> Species {
        self.rounds.iter().fold(Species::T, |s, r| r.kind.output_species(s).unwrap_or(s))
    }

    /// Magic states delivered by one successful run.
    pub fn units_out(&self) -> usize {
        self.rounds.iter().map(|r| r.kind.units_out()).product()
    }
}

impl fmt::Display for FactorySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.rounds.iter().map(|r| r.kind.to_string()).collect();
        write!(f, "{} ({})", names.join(","), self.mode)
    }
}

pub fn parse_rounds(s: &str) -> Result<Vec<ProtocolKind>> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(|t| t.parse()).collect()
}

/// Statistics of the accepted output of one level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: usize,
    pub protocol: String,
    /// Success probability of one module (or block) given successful inputs.
    pub p_success: f64,
    /// Probability that an accepted output branch carries any error.
    pub global_error: f64,
    /// Error per output magic state.
    pub unit_error: f64,
    /// Magic states per output branch.
    pub branch_units: usize,
    /// Qubits per output branch.
    pub branch_qubits: usize,
    /// Leading coefficient `C_l` (module checking only), exact.
    pub coefficient: Option<String>,
    /// Minimum input weight of an undetected failure at this level.
    pub min_weight: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackingReport {
    pub mode: CheckingMode,
    pub eps: f64,
    pub levels: Vec<LevelReport>,
}

impl TrackingReport {
    pub fn final_level(&self) -> &LevelReport {
        self.levels.last().expect("at least one level")
    }

    /// `key = value` lines, one block per level separated by blank lines.
    pub fn to_key_values(&self) -> String {
        let mut out = format!("mode = {}\neps = {:e}\n", self.mode, self.eps);
        for l in &self.levels {
            out.push('\n');
            out.push_str(&format!("level = {}\n", l.level));
            out.push_str(&format!("protocol = {}\n", l.protocol));
            out.push_str(&format!("p_success = {:.6e}\n", l.p_success));
            out.push_str(&format!("global_error = {:.6e}\n", l.global_error));
            out.push_str(&format!("unit_error = {:.6e}\n", l.unit_error));
            out.push_str(&format!("branch_units = {}\n", l.branch_units));
            out.push_str(&format!("branch_qubits = {}\n", l.branch_qubits));
            out.push_str(&format!("min_weight = {}\n", l.min_weight));
            if let Some(c) = &l.coefficient {
                out.push_str(&format!("coefficient = {c}\n"));
            }
        }
        out
    }
}

/// Per-round code data reused by the trackers.
#[derive(Clone, Debug)]
pub struct RoundData {
    pub kind: ProtocolKind,
    pub code: ProtocolCode,
    pub eta: EtaFunction,
    pub spectra: BlockSpectra,
}

impl RoundData {
    pub fn new(kind: ProtocolKind) -> Result<Self> {
        let code = ProtocolCode::from_kind(kind)?;
        let eta = eta(&code);
        let spectra = BlockSpectra::new(&code)?;
        Ok(Self { kind, code, eta, spectra })
    }

    /// Leading coefficient `a` in `unit_error ~ a * p^order` for block checking.
    pub fn unit_coefficient(&self) -> f64 {
        match self.kind {
            ProtocolKind::Toffoli => self.eta.total() as f64,
            _ => self.eta.weighted_total() as f64 / self.code.k() as f64,
        }
    }

    /// Exact error per output unit of one accepted block at input error `p`.
    pub fn unit_error(&self, p: f64) -> f64 {
        match self.kind {
            ProtocolKind::Toffoli => self.spectra.global_error(p),
            _ => self.spectra.mean_marginal(p),
        }
    }
}

/// Exact leading coefficients `C_1 ... C_L` for module checking.
pub fn module_coefficients(etas: &[&EtaFunction]) -> Vec<BigUint> {
    (1..=etas.len())
        .map(|l| {
            let mut c = BigUint::one();
            for j in 0..l {
                let m: u32 = etas[j + 1..l].iter().map(|e| e.order as u32).product();
                c *= sum_eta_power(etas[j], m);
            }
            c
        })
        .collect()
}

fn biguint_to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}

/// Module-checked tracking from the exact leading coefficients.
pub fn track_module_checked(kinds: &[ProtocolKind], eps: f64) -> Result<TrackingReport> {
    let data: Vec<RoundData> = kinds.iter().map(|&k| RoundData::new(k)).collect::<Result<_>>()?;
    track_module_with(&data, eps)
}

pub fn track_module_with(data: &[RoundData], eps: f64) -> Result<TrackingReport> {
    check_eps(eps)?;
    FactorySpec::new(&data.iter().map(|d| d.kind).collect::<Vec<_>>(), CheckingMode::Module)?;
    let etas: Vec<&EtaFunction> = data.iter().map(|d| &d.eta).collect();
    let coeffs = module_coefficients(&etas);
    let mut levels = Vec::with_capacity(data.len());
    let mut prev_r = 0.0f64;
    let mut min_weight = 1usize;
    let mut branch_qubits = 1usize;
    let mut branch_units = 1usize;
    let ln_ratio = if eps > 0.0 { eps.ln() - (-eps).ln_1p() } else { f64::NEG_INFINITY };
    for (l, d) in data.iter().enumerate() {
        min_weight *= d.eta.order;
        let ln_c = biguint_to_f64(&coeffs[l]).ln();
        let r = (ln_c + min_weight as f64 * ln_ratio).exp();
        let n = d.code.n() as f64;
        let p_success = if l == 0 {
            (n * (-eps).ln_1p() + r.ln_1p()).exp()
        } else {
            (r.ln_1p() - n * prev_r.ln_1p()).exp()
        };
        let global_error = r / (1.0 + r);
        branch_qubits *= d.code.k();
        branch_units *= d.kind.units_out();
        levels.push(LevelReport {
            level: l + 1,
            protocol: d.kind.to_string(),
            p_success,
            global_error,
            unit_error: global_error / branch_units as f64,
            branch_units,
            branch_qubits,
            coefficient: Some(coeffs[l].to_string()),
            min_weight,
        });
        prev_r = r;
    }
    Ok(TrackingReport { mode: CheckingMode::Module, eps, levels })
}

/// How the block-checked per-output error is propagated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockEstimate {
    /// Exact accepted-block statistics from weight counts.
    Exact,
    /// `a p^order` with `a` from the eta function.
    LeadingOrder,
}

pub fn track_block_checked(kinds: &[ProtocolKind], eps: f64, how: BlockEstimate) -> Result<TrackingReport> {
    let data: Vec<RoundData> = kinds.iter().map(|&k| RoundData::new(k)).collect::<Result<_>>()?;
    track_block_with(&data, eps, how)
}

pub fn track_block_with(data: &[RoundData], eps: f64, how: BlockEstimate) -> Result<TrackingReport> {
    check_eps(eps)?;
    FactorySpec::new(&data.iter().map(|d| d.kind).collect::<Vec<_>>(), CheckingMode::Block)?;
    let mut p = eps;
    let mut levels = Vec::with_capacity(data.len());
    let mut branch_units = 1usize;
    let mut branch_qubits = 1usize;
    let mut min_weight = 1usize;
    for (l, d) in data.iter().enumerate() {
        let p_success = d.spectra.p_success(p);
        p = match how {
            BlockEstimate::Exact => d.unit_error(p),
            BlockEstimate::LeadingOrder => d.unit_coefficient() * p.powi(d.eta.order as i32),
        };
        branch_units *= d.kind.units_out();
        branch_qubits *= d.code.k();
        min_weight *= d.eta.order;
        let global_error = -(branch_units as f64 * (-p).ln_1p()).exp_m1();
        levels.push(LevelReport {
            level: l + 1,
            protocol: d.kind.to_string(),
            p_success,
            global_error,
            unit_error: p,
            branch_units,
            branch_qubits,
            coefficient: None,
            min_weight,
        });
    }
    Ok(TrackingReport { mode: CheckingMode::Block, eps, levels })
}

pub fn track(spec: &FactorySpec, eps: f64) -> Result<TrackingReport> {
    spec.validate()?;
    match spec.mode {
        CheckingMode::Module => track_module_checked(&spec.kinds(), eps),
        CheckingMode::Block => track_block_checked(&spec.kinds(), eps, BlockEstimate::Exact),
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if (0.0..0.5).contains(&eps) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("noise strength {eps} outside [0, 0.5)")))
    }
}

/// Raw states consumed per output state: `prod_i n_i / (k_i P_i)`.
pub fn cost(kinds: &[ProtocolKind], eps: f64, mode: CheckingMode) -> Result<f64> {
    let report = match mode {
        CheckingMode::Module => track_module_checked(kinds, eps)?,
        CheckingMode::Block => track_block_checked(kinds, eps, BlockEstimate::Exact)?,
    };
    Ok(cost_from_report(kinds, &report))
}

pub fn cost_from_report(kinds: &[ProtocolKind], report: &TrackingReport) -> f64 {
    kinds
        .iter()
        .zip(&report.levels)
        .map(|(k, l)| k.units_in() as f64 / (k.units_out() as f64 * l.p_success))
        .product()
}

/// `(prod_i k_i) * unit_error / eps^(w_L)` at leading order for block
/// checking, i.e. the union bound on the global error over the outputs.
pub fn union_bound_coefficient(kinds: &[ProtocolKind]) -> Result<f64> {
    let mut ln_coef = 0.0f64;
    let mut units = 1.0f64;
    for &k in kinds {
        let d = RoundData::new(k)?;
        ln_coef = d.unit_coefficient().ln() + d.eta.order as f64 * ln_coef;
        units *= k.units_out() as f64;
    }
    Ok(units * ln_coef.exp())
}

/// Largest `eps` (found by bisection in log space) below which the
/// module-checked global error falls strictly from each level to the next.
pub fn improvement_threshold(kinds: &[ProtocolKind]) -> Result<f64> {
    let data: Vec<RoundData> = kinds.iter().map(|&k| RoundData::new(k)).collect::<Result<_>>()?;
    let improves = |eps: f64| -> bool {
        let Ok(rep) = track_module_with(&data, eps) else { return false };
        rep.levels.windows(2).all(|w| w[1].global_error < w[0].global_error)
    };
    let (mut lo, mut hi) = (1e-12f64, 0.49f64);
    if !improves(lo) {
        return Err(Error::Infeasible("no improvement even at 1e-12".into()));
    }
    if improves(hi) {
        return Ok(hi);
    }
    for _ in 0..80 {
        let mid = (lo * hi).sqrt();
        if improves(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::block_distribution;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn bh(k: usize) -> ProtocolKind {
        ProtocolKind::Bh { k }
    }

    #[test]
    fn coefficient_three_levels_of_ten() {
        let rep = track_module_checked(&[bh(10), bh(10), bh(10)], 1e-3).unwrap();
        assert_eq!(rep.levels[2].coefficient.as_deref(), Some("228282619"));
        assert_eq!(rep.levels[1].coefficient.as_deref(), Some("58519"));
        let g = rep.final_level().global_error;
        assert!((g - 2.3e-16).abs() < 0.05e-16, "{g}");
    }

    #[test]
    fn single_level_reduces_to_eta_sum() {
        let eps = 1e-6;
        let rep = track_module_checked(&[bh(6)], eps).unwrap();
        assert_relative_eq!(rep.levels[0].global_error, 49.0 * eps * eps, max_relative = 1e-4);
    }

    #[test]
    fn single_level_success_close_to_exact() {
        let eps = 1e-3;
        let rep = track_module_checked(&[bh(2)], eps).unwrap();
        let d = block_distribution(&ProtocolCode::bh(2).unwrap(), eps, Default::default()).unwrap();
        assert_relative_eq!(rep.levels[0].p_success, d.p_success, max_relative = 1e-5);
    }

    #[test]
    fn block_leading_order_bh2() {
        let eps = 1e-6;
        let rep = track_block_checked(&[bh(2)], eps, BlockEstimate::Exact).unwrap();
        assert_relative_eq!(rep.levels[0].unit_error, 7.0 * eps * eps, max_relative = 1e-4);
        let lo = track_block_checked(&[bh(2)], eps, BlockEstimate::LeadingOrder).unwrap();
        assert_relative_eq!(lo.levels[0].unit_error, 7.0 * eps * eps, max_relative = 1e-12);
    }

    #[test]
    fn block_three_levels_of_ten_is_worse() {
        let eps = 1e-3;
        let block = track_block_checked(&[bh(10), bh(10), bh(10)], eps, BlockEstimate::Exact).unwrap();
        let module = track_module_checked(&[bh(10), bh(10), bh(10)], eps).unwrap();
        let g = block.final_level().global_error;
        assert!(g > 1e-12 && g < 1e-10, "{g}");
        assert!(module.final_level().global_error < g);
    }

    #[test]
    fn costs_of_single_rounds() {
        assert_relative_eq!(cost(&[ProtocolKind::Rm15], 0.0, CheckingMode::Block).unwrap(), 15.0);
        let eps = 0.01;
        let d = block_distribution(&ProtocolCode::bh(2).unwrap(), eps, Default::default()).unwrap();
        let c = cost(&[bh(2)], eps, CheckingMode::Block).unwrap();
        assert_relative_eq!(c, 14.0 / (2.0 * d.p_success), max_relative = 1e-12);
    }

    #[test]
    fn mixed_species_validation() {
        assert!(FactorySpec::parse("tof,bh:10", CheckingMode::Module).is_ok());
        assert!(FactorySpec::parse("tof,tof", CheckingMode::Module).is_err());
        assert!(FactorySpec::parse("bh:3", CheckingMode::Module).is_err());
        assert!(FactorySpec::parse("", CheckingMode::Module).is_err());
    }

    #[test]
    fn key_value_rendering() {
        let rep = track_module_checked(&[bh(2), bh(2)], 1e-3).unwrap();
        let text = rep.to_key_values();
        assert!(text.contains("level = 2"));
        assert!(text.contains("coefficient = 343"));
    }

    #[test]
    fn union_bound_two_levels() {
        // k1 k2 (3k2+1)(3k1+1)^2 at leading order.
        let u = union_bound_coefficient(&[bh(10), bh(10)]).unwrap();
        assert_relative_eq!(u, 100.0 * 31.0 * 31.0 * 31.0, max_relative = 1e-12);
    }

    #[test]
    fn threshold_is_meaningful() {
        let t = improvement_threshold(&[bh(10), bh(10)]).unwrap();
        assert!(t > 1e-3 && t < 0.2, "{t}");
    }

    proptest! {
        #[test]
        fn module_never_worse_than_union_bound(k1 in 1usize..13, k2 in 1usize..13, le in -5.0f64..-2.5) {
            let kinds = [bh(2 * k1), bh(2 * k2)];
            let eps = 10f64.powf(le);
            let m = track_module_checked(&kinds, eps).unwrap();
            let b = track_block_checked(&kinds, eps, BlockEstimate::Exact).unwrap();
            prop_assert!(m.final_level().global_error <= b.final_level().branch_units as f64 * b.final_level().unit_error);
        }

        #[test]
        fn module_error_decreases_below_threshold(k in 1usize..8, frac in 0.01f64..0.9) {
            let kinds = [bh(2 * k), bh(2 * k), bh(2 * k)];
            let t = improvement_threshold(&kinds).unwrap();
            let rep = track_module_checked(&kinds, t * frac).unwrap();
            let errs: Vec<f64> = rep.levels.iter().map(|l| l.global_error).collect();
            prop_assert!(errs.windows(2).all(|w| w[1] < w[0]));
        }
    }
}
