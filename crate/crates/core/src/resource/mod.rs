//! Surface-code overhead of distillation factories: code distances per
//! round, round timing, spacetime volume per output state, factory search
//! and time-optimal sizing.
//!
//! Times are in surface-code cycles unless a field says otherwise, and
//! volumes are in physical qubit-rounds.

mod curves;
mod optimize;
mod shor;

pub use curves::{
    fit_log_power, frontier, scaling_curve, spacetime_curve, t_to_cnot_ratio, yield_curve, FrontierPoint, PowerFit,
    ScalingPoint, SpacetimePoint, YieldPoint,
};
pub use optimize::{design_grid, Candidate, Optimizer, SearchSpace, TimeOptimal};
pub use shor::{format_duration, ShorTask, ShorRow};

use serde::{Deserialize, Serialize};

use crate::codes::{ProtocolKind, Species};
use crate::error::{Error, Result};
use crate::tracking::{CheckingMode, RoundData, TrackingReport};

/// Largest distance scanned before giving up.
const MAX_DISTANCE: usize = 10_001;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceParams {
    /// Physical gate error rate.
    pub p_g: f64,
    /// Duration of one surface-code cycle in seconds.
    pub t_sc: f64,
    /// Measurement plus feed-forward time in seconds.
    pub t_meas_ff: f64,
    /// Raw magic-state error as a multiple of `p_g`.
    pub eps_in_factor: f64,
    /// Required success probability of the whole algorithm.
    pub p_suc_alg: f64,
}

impl ResourceParams {
    pub fn new(p_g: f64, t_sc: f64) -> Self {
        Self { p_g, t_sc, t_meas_ff: 0.1 * t_sc, eps_in_factor: 0.4, p_suc_alg: 0.9 }
    }

    pub fn eps_in(&self) -> f64 {
        self.eps_in_factor * self.p_g
    }

    /// Magic states consumed per surface-code cycle by a computation that
    /// applies one gate per measurement and feed-forward.
    pub fn time_optimal_rate(&self) -> f64 {
        self.t_sc / self.t_meas_ff
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.p_g > 0.0
            && self.p_g < 1e-2
            && self.t_sc > 0.0
            && self.t_meas_ff > 0.0
            && self.eps_in() < 0.5
            && self.p_suc_alg > 0.0
            && self.p_suc_alg < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("resource parameters out of range: {self:?}")))
        }
    }

    /// Parses `key = value` lines (`#` starts a comment). Missing keys keep
    /// the defaults derived from `p_g` and `t_sc`.
    pub fn from_key_values(text: &str) -> Result<Self> {
        let mut map = std::collections::BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected key = value", i + 1)))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("line {}: bad number {:?}", i + 1, v.trim())))?;
            map.insert(k.trim().to_string(), v);
        }
        let get = |k: &str, d: f64| map.get(k).copied().unwrap_or(d);
        let mut p = Self::new(get("p_g", 1e-3), get("t_sc", 1e-3));
        p.t_meas_ff = get("t_meas_ff", p.t_meas_ff);
        p.eps_in_factor = get("eps_in_factor", p.eps_in_factor);
        p.p_suc_alg = get("p_suc_alg", p.p_suc_alg);
        for k in map.keys() {
            if !["p_g", "t_sc", "t_meas_ff", "eps_in_factor", "p_suc_alg"].contains(&k.as_str()) {
                return Err(Error::InvalidConfig(format!("unknown parameter {k:?}")));
            }
        }
        p.validate()?;
        Ok(p)
    }

    pub fn to_key_values(&self) -> String {
        format!(
            "p_g = {:e}\nt_sc = {:e}\nt_meas_ff = {:e}\neps_in_factor = {}\np_suc_alg = {}\n",
            self.p_g, self.t_sc, self.t_meas_ff, self.eps_in_factor, self.p_suc_alg
        )
    }
}

/// Logical error per qubit and logical time step, `d (100 p_g)^((d+1)/2)`.
pub fn logical_error(d: usize, p_g: f64) -> f64 {
    d as f64 * (100.0 * p_g).powf((d as f64 + 1.0) / 2.0)
}

/// Smallest odd distance `d >= 3` with `logical_error(d, p_g) <= p_target`.
pub fn required_distance(p_target: f64, p_g: f64) -> Result<usize> {
    if !(p_g > 0.0 && p_g < 1e-2) {
        return Err(Error::Unachievable(format!("gate error {p_g} is not below threshold")));
    }
    if !(p_target > 0.0) {
        return Err(Error::Unachievable(format!("logical error target {p_target}")));
    }
    // Compare in log space so tiny targets do not underflow.
    let ln_t = p_target.ln();
    let ln_x = (100.0 * p_g).ln();
    let mut d = 3;
    while (d as f64).ln() + (d as f64 + 1.0) / 2.0 * ln_x > ln_t {
        d += 2;
        if d > MAX_DISTANCE {
            return Err(Error::Unachievable(format!("target {p_target:e} needs distance above {MAX_DISTANCE}")));
        }
    }
    Ok(d)
}

/// Per-iteration error allowed for `iterations` runs to all succeed with
/// probability `p_suc_alg`: `1 - p_suc_alg^(1/iterations)`.
pub fn epsilon_target(p_suc_alg: f64, iterations: f64) -> f64 {
    -(p_suc_alg.ln() / iterations).exp_m1()
}

/// Probability that each of `slots` independent slots succeeds within
/// `attempts` tries of success probability `p`.
pub fn round_success_probability(p: f64, attempts: u32, slots: f64) -> f64 {
    let miss = (1.0 - p).powi(attempts as i32);
    (slots * (-miss).ln_1p()).exp()
}

/// Round duration in units of `d` surface-code cycles.
pub fn stage_cycles(kind: ProtocolKind) -> usize {
    match kind {
        ProtocolKind::Bh { .. } => 11,
        ProtocolKind::Toffoli => 12,
        ProtocolKind::Rm15 => 13,
    }
}

/// Logical qubits of one block (data plus measurement ancillas). A block
/// acting on Toffoli states holds three qubits per input unit.
pub fn block_logical_qubits(kind: ProtocolKind, input: Species) -> usize {
    let base = match kind {
        ProtocolKind::Bh { k } => 6 * k + 14,
        ProtocolKind::Rm15 => 25,
        ProtocolKind::Toffoli => 12,
    };
    match (kind, input) {
        (ProtocolKind::Toffoli, _) | (_, Species::T) => base,
        (_, Species::Toffoli) => 3 * base,
    }
}

/// A factory to cost: rounds, checking mode and attempts per round.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Design {
    pub kinds: Vec<ProtocolKind>,
    pub mode: CheckingMode,
    pub attempts: Vec<u32>,
}

impl std::fmt::Display for Design {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let names: Vec<String> = self.kinds.iter().map(|k| k.to_string()).collect();
        let t: Vec<String> = self.attempts.iter().map(|t| t.to_string()).collect();
        write!(f, "{} {} t={}", names.join(","), self.mode, t.join(","))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundLayout {
    pub kind: ProtocolKind,
    pub distance: usize,
    /// Blocks per factory iteration.
    pub blocks: f64,
    /// Logical qubits of all blocks in the round.
    pub logical_qubits: f64,
    pub attempts: u32,
    /// Independent slots that must all succeed (modules or blocks).
    pub slots: f64,
    pub p_slot: f64,
    pub p_round: f64,
    /// Round time `tau_i t_i` in surface-code cycles.
    pub cycles: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactoryLayout {
    pub design: Design,
    pub rounds: Vec<RoundLayout>,
    /// Output units (T or Toffoli states) of one successful iteration.
    pub units_out: f64,
    pub output: Species,
    pub global_error: f64,
    pub eps_target: f64,
    /// Physical qubit-rounds per output unit.
    pub volume: f64,
    /// Physical data qubits of one factory copy.
    pub physical_qubits: f64,
    /// Longest round in surface-code cycles; a pipelined factory completes
    /// one iteration per period.
    pub period: f64,
}

impl FactoryLayout {
    pub fn distances(&self) -> Vec<usize> {
        self.rounds.iter().map(|r| r.distance).collect()
    }

    pub fn success_probability(&self) -> f64 {
        self.rounds.iter().map(|r| r.p_round).product()
    }

    /// Expected output units per surface-code cycle of one copy.
    pub fn rate(&self) -> f64 {
        self.units_out * self.success_probability() / self.period
    }
}

/// Per-round structure of a design independent of attempts.
#[derive(Clone, Debug)]
pub(crate) struct Skeleton {
    pub kinds: Vec<ProtocolKind>,
    pub mode: CheckingMode,
    pub distances: Vec<usize>,
    pub blocks: Vec<f64>,
    pub qubits: Vec<f64>,
    pub slots: Vec<f64>,
    pub p_slot: Vec<f64>,
    pub units_out: f64,
    pub output: Species,
    pub global_error: f64,
    pub eps_target: f64,
}

/// Distances, qubit counts and slot statistics for one validated factory.
///
/// `report` must track `kinds` at the raw error of `params`. `states` is
/// the number of output units the computation needs.
pub(crate) fn skeleton(
    kinds: &[ProtocolKind],
    data: &[&RoundData],
    report: &TrackingReport,
    params: &ResourceParams,
    states: f64,
) -> Result<Skeleton> {
    let r = kinds.len();
    let units: Vec<f64> = kinds.iter().map(|k| k.units_out() as f64).collect();
    let inputs: Vec<f64> = kinds.iter().map(|k| k.units_in() as f64).collect();
    let units_out: f64 = units.iter().product();
    let eps_target = epsilon_target(params.p_suc_alg, states / units_out);
    let global_error = report.final_level().global_error;
    if !(global_error <= eps_target) {
        return Err(Error::FactoryInvalid { global_error, target: eps_target });
    }

    let mut species = Vec::with_capacity(r);
    let mut s = Species::T;
    for k in kinds {
        species.push(s);
        s = k.output_species(s)?;
    }
    let q_blk: Vec<f64> = kinds.iter().zip(&species).map(|(&k, &sp)| block_logical_qubits(k, sp) as f64).collect();

    let mut distances = vec![0usize; r];
    match report.mode {
        CheckingMode::Module => {
            // Intermediate outputs are encoded well below their correlated
            // error; the last round is encoded for the per-output target.
            let mut width = 1.0;
            for i in 0..r {
                width *= units[i];
                let g = if i + 1 == r { eps_target } else { report.levels[i].global_error };
                distances[i] = required_distance(0.1 * g / width, params.p_g)?;
            }
        }
        CheckingMode::Block => {
            // Work back from the per-output target: each block's logical
            // failures stay below a tenth of its output error target.
            let mut p = -(-eps_target).ln_1p() / units_out;
            for i in (0..r).rev() {
                let v = q_blk[i] * stage_cycles(kinds[i]) as f64;
                distances[i] = required_distance(0.1 * p / v, params.p_g)?;
                let d = data[i];
                p = (p / d.unit_coefficient()).powf(1.0 / d.eta.order as f64).min(0.5);
            }
        }
    }
    for i in 1..r {
        distances[i] = distances[i].max(distances[i - 1]);
    }

    let mut blocks = vec![0.0; r];
    let mut slots = vec![0.0; r];
    for i in 0..r {
        let below: f64 = units[..i].iter().product();
        let above: f64 = inputs[i + 1..].iter().product();
        blocks[i] = below * above;
        slots[i] = match report.mode {
            CheckingMode::Module => above,
            CheckingMode::Block => blocks[i],
        };
    }
    let qubits: Vec<f64> = blocks.iter().zip(&q_blk).map(|(b, q)| b * q).collect();
    let p_slot = report.levels.iter().map(|l| l.p_success).collect();
    Ok(Skeleton {
        kinds: kinds.to_vec(),
        mode: report.mode,
        distances,
        blocks,
        qubits,
        slots,
        p_slot,
        units_out,
        output: s,
        global_error,
        eps_target,
    })
}

impl Skeleton {
    pub(crate) fn layout(&self, attempts: &[u32]) -> FactoryLayout {
        let mut rounds = Vec::with_capacity(self.kinds.len());
        let mut numer = 0.0;
        let mut p_all = 1.0;
        let mut physical = 0.0;
        let mut period: f64 = 0.0;
        for i in 0..self.kinds.len() {
            let d = self.distances[i] as f64;
            let t = attempts[i];
            let cycles = stage_cycles(self.kinds[i]) as f64 * d * t as f64;
            let p_round = round_success_probability(self.p_slot[i], t, self.slots[i]);
            numer += self.qubits[i] * cycles * d * d;
            physical += self.qubits[i] * d * d;
            period = period.max(cycles);
            p_all *= p_round;
            rounds.push(RoundLayout {
                kind: self.kinds[i],
                distance: self.distances[i],
                blocks: self.blocks[i],
                logical_qubits: self.qubits[i],
                attempts: t,
                slots: self.slots[i],
                p_slot: self.p_slot[i],
                p_round,
                cycles,
            });
        }
        FactoryLayout {
            design: Design { kinds: self.kinds.clone(), mode: self.mode, attempts: attempts.to_vec() },
            rounds,
            units_out: self.units_out,
            output: self.output,
            global_error: self.global_error,
            eps_target: self.eps_target,
            volume: numer / (self.units_out * p_all),
            physical_qubits: physical,
            period,
        }
    }
}

/// Costs one design for a computation needing `states` output units.
pub fn evaluate(design: &Design, params: &ResourceParams, states: f64) -> Result<FactoryLayout> {
    params.validate()?;
    if design.attempts.len() != design.kinds.len() || design.attempts.contains(&0) {
        return Err(Error::InvalidConfig("one positive attempt count per round is required".into()));
    }
    let data: Vec<RoundData> = design.kinds.iter().map(|&k| RoundData::new(k)).collect::<Result<_>>()?;
    let report = match design.mode {
        CheckingMode::Module => crate::tracking::track_module_with(&data, params.eps_in())?,
        CheckingMode::Block => {
            crate::tracking::track_block_with(&data, params.eps_in(), crate::tracking::BlockEstimate::Exact)?
        }
    };
    let refs: Vec<&RoundData> = data.iter().collect();
    Ok(skeleton(&design.kinds, &refs, &report, params, states)?.layout(&design.attempts))
}
