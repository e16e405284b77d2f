use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{skeleton, FactoryLayout, ResourceParams, Skeleton};
use crate::codes::{ProtocolKind, Species};
use crate::error::{Error, Result};
use crate::tracking::{track_block_with, track_module_with, BlockEstimate, CheckingMode, FactorySpec, RoundData, TrackingReport};

/// T states spent per Toffoli gate on the route without Toffoli states.
pub const T_PER_TOFFOLI: f64 = 7.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub kinds: Vec<ProtocolKind>,
    pub max_rounds: usize,
    pub modes: Vec<CheckingMode>,
    pub attempts: Vec<u32>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        let mut kinds: Vec<ProtocolKind> = (2..=50).step_by(4).map(|k| ProtocolKind::Bh { k }).collect();
        kinds.push(ProtocolKind::Rm15);
        kinds.push(ProtocolKind::Toffoli);
        Self { kinds, max_rounds: 3, modes: vec![CheckingMode::Block, CheckingMode::Module], attempts: (1..=4).collect() }
    }
}

impl SearchSpace {
    /// Only the `3k+8` family, as used for raw-state cost comparisons.
    pub fn bh_only() -> Self {
        let mut s = Self::default();
        s.kinds.retain(|k| matches!(k, ProtocolKind::Bh { .. }));
        s
    }
}

/// All species-consistent round sequences of the space, with each mode.
pub fn design_grid(space: &SearchSpace) -> Vec<(Vec<ProtocolKind>, CheckingMode)> {
    let mut seqs: Vec<Vec<ProtocolKind>> = vec![vec![]];
    let mut out = Vec::new();
    for _ in 0..space.max_rounds {
        seqs = seqs
            .iter()
            .flat_map(|s| {
                space.kinds.iter().map(move |&k| {
                    let mut v = s.clone();
                    v.push(k);
                    v
                })
            })
            .filter(|s| FactorySpec::new(s, CheckingMode::Block).is_ok())
            .collect();
        for s in &seqs {
            for &m in &space.modes {
                out.push((s.clone(), m));
            }
        }
    }
    out
}

/// A costed factory serving a request for some species.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub layout: FactoryLayout,
    /// Each requested Toffoli gate is built from seven T states.
    pub seven_t: bool,
}

impl Candidate {
    fn multiplier(&self) -> f64 {
        if self.seven_t {
            T_PER_TOFFOLI
        } else {
            1.0
        }
    }

    /// Qubit-rounds per requested unit.
    pub fn volume(&self) -> f64 {
        self.layout.volume * self.multiplier()
    }
}

/// Smallest factory keeping up with one gate per measurement cycle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeOptimal {
    pub candidate: Candidate,
    pub copies: f64,
    /// Physical data qubits of all copies.
    pub physical_qubits: f64,
}

struct Entry {
    kinds: Vec<ProtocolKind>,
    report: TrackingReport,
}

/// Factory search at a fixed raw error rate. Tracking is done once per
/// round sequence; queries for different demand reuse it.
pub struct Optimizer {
    pub params: ResourceParams,
    pub space: SearchSpace,
    data: HashMap<ProtocolKind, RoundData>,
    entries: Vec<Entry>,
}

#[derive(Clone, Copy)]
struct Metrics {
    volume: f64,
    physical: f64,
    period: f64,
    yield_per_period: f64,
}

impl Skeleton {
    fn metrics(&self, attempts: &[u32]) -> Metrics {
        let mut numer = 0.0;
        let mut p_all = 1.0;
        let mut physical = 0.0;
        let mut period: f64 = 0.0;
        for i in 0..self.kinds.len() {
            let d = self.distances[i] as f64;
            let cycles = super::stage_cycles(self.kinds[i]) as f64 * d * attempts[i] as f64;
            numer += self.qubits[i] * cycles * d * d;
            physical += self.qubits[i] * d * d;
            period = period.max(cycles);
            p_all *= super::round_success_probability(self.p_slot[i], attempts[i], self.slots[i]);
        }
        Metrics { volume: numer / (self.units_out * p_all), physical, period, yield_per_period: self.units_out * p_all }
    }
}

fn attempt_vectors(choices: &[u32], rounds: usize) -> Vec<Vec<u32>> {
    let mut out: Vec<Vec<u32>> = vec![vec![]];
    for _ in 0..rounds {
        out = out.iter().flat_map(|v| choices.iter().map(move |&t| [v.as_slice(), &[t]].concat())).collect();
    }
    out
}

impl Optimizer {
    pub fn new(params: ResourceParams, space: SearchSpace) -> Result<Self> {
        params.validate()?;
        if space.attempts.is_empty() || space.attempts.contains(&0) || space.max_rounds == 0 {
            return Err(Error::InvalidConfig("empty search space".into()));
        }
        let data: HashMap<ProtocolKind, RoundData> = space
            .kinds
            .par_iter()
            .map(|&k| RoundData::new(k).map(|d| (k, d)))
            .collect::<Result<_>>()?;
        let eps = params.eps_in();
        let entries = design_grid(&space)
            .into_par_iter()
            .filter_map(|(kinds, mode)| {
                let rd: Vec<RoundData> = kinds.iter().map(|k| data[k].clone()).collect();
                let report = match mode {
                    CheckingMode::Module => track_module_with(&rd, eps),
                    CheckingMode::Block => track_block_with(&rd, eps, BlockEstimate::Exact),
                }
                .ok()?;
                report.levels.iter().all(|l| l.global_error.is_finite()).then_some(Entry { kinds, report })
            })
            .collect();
        Ok(Self { params, space, data, entries })
    }

    /// Validated skeletons for a request of `states` units of `want`,
    /// tagged with whether they use the seven-T route.
    fn skeletons(&self, states: f64, want: Species) -> Vec<(Skeleton, bool)> {
        self.entries
            .par_iter()
            .filter_map(|e| {
                let output = FactorySpec::new(&e.kinds, e.report.mode).ok()?.output_species();
                let seven_t = match (want, output) {
                    (Species::T, Species::T) | (Species::Toffoli, Species::Toffoli) => false,
                    (Species::Toffoli, Species::T) => true,
                    (Species::T, Species::Toffoli) => return None,
                };
                let demand = if seven_t { states * T_PER_TOFFOLI } else { states };
                let data: Vec<&RoundData> = e.kinds.iter().map(|k| &self.data[k]).collect();
                let sk = skeleton(&e.kinds, &data, &e.report, &self.params, demand).ok()?;
                Some((sk, seven_t))
            })
            .collect()
    }

    fn scan<T, F, R>(&self, states: f64, want: Species, mode: Option<CheckingMode>, pick: F, better: R) -> Option<(T, Candidate)>
    where
        T: Copy + Send,
        F: Fn(&Metrics, &Skeleton, bool) -> Option<T> + Sync,
        R: Fn(&T, &T) -> bool + Sync,
    {
        let best = self
            .skeletons(states, want)
            .into_par_iter()
            .filter(|(sk, _)| mode.map_or(true, |m| sk.mode == m))
            .filter_map(|(sk, seven)| {
                let mut local: Option<(T, Vec<u32>)> = None;
                for t in attempt_vectors(&self.space.attempts, sk.kinds.len()) {
                    let m = sk.metrics(&t);
                    if !m.volume.is_finite() {
                        continue;
                    }
                    if let Some(score) = pick(&m, &sk, seven) {
                        if local.as_ref().map_or(true, |(s, _)| better(&score, s)) {
                            local = Some((score, t));
                        }
                    }
                }
                local.map(|(s, t)| (s, sk, t, seven))
            })
            .reduce_with(|a, b| if better(&b.0, &a.0) { b } else { a })?;
        let (score, sk, t, seven_t) = best;
        Some((score, Candidate { layout: sk.layout(&t), seven_t }))
    }

    /// Lowest spacetime volume per requested unit. Ties go to fewer
    /// physical qubits, then fewer rounds.
    pub fn best(&self, states: f64, want: Species, mode: Option<CheckingMode>) -> Result<Candidate> {
        let key = |m: &Metrics, sk: &Skeleton, seven: bool| {
            let mult = if seven { T_PER_TOFFOLI } else { 1.0 };
            Some((m.volume * mult, m.physical, sk.kinds.len()))
        };
        let better = |a: &(f64, f64, usize), b: &(f64, f64, usize)| {
            let same = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(y.abs());
            if !same(a.0, b.0) {
                a.0 < b.0
            } else if !same(a.1, b.1) {
                a.1 < b.1
            } else {
                a.2 < b.2
            }
        };
        self.scan(states, want, mode, key, better)
            .map(|(_, c)| c)
            .ok_or_else(|| Error::NoValidFactory(format!("{states:e} {want:?} states at p_g = {:e}", self.params.p_g)))
    }

    /// Smallest total hardware producing on average one requested unit per
    /// measurement cycle.
    pub fn time_optimal(&self, states: f64, want: Species) -> Result<TimeOptimal> {
        let rate = self.params.time_optimal_rate();
        let key = |m: &Metrics, _: &Skeleton, seven: bool| {
            let mult = if seven { T_PER_TOFFOLI } else { 1.0 };
            let copies = (rate * mult * m.period / m.yield_per_period).ceil().max(1.0);
            Some((copies * m.physical, m.volume * mult))
        };
        let better = |a: &(f64, f64), b: &(f64, f64)| a.0 < b.0 || (a.0 == b.0 && a.1 < b.1);
        let (score, candidate) = self
            .scan(states, want, None, key, better)
            .ok_or_else(|| Error::NoValidFactory(format!("{states:e} {want:?} states at p_g = {:e}", self.params.p_g)))?;
        let copies = (score.0 / candidate.layout.physical_qubits).round();
        Ok(TimeOptimal { candidate, copies, physical_qubits: score.0 })
    }

    /// Every valid layout's (physical qubits, output rate, volume), reduced
    /// to the Pareto frontier of fewest qubits for a given rate.
    pub fn frontier_points(&self, states: f64, want: Species) -> Vec<(f64, f64, f64, String)> {
        let mut pts: Vec<(f64, f64, f64, String)> = self
            .skeletons(states, want)
            .into_par_iter()
            .flat_map_iter(|(sk, seven)| {
                let mult = if seven { T_PER_TOFFOLI } else { 1.0 };
                attempt_vectors(&self.space.attempts, sk.kinds.len())
                    .into_iter()
                    .filter_map(|t| {
                        let m = sk.metrics(&t);
                        let rate = m.yield_per_period / m.period / mult;
                        (m.volume.is_finite() && rate > 0.0).then(|| {
                            let label = format!("{}{}", sk.layout(&t).design, if seven { " (7T)" } else { "" });
                            (m.physical, rate, m.volume * mult, label)
                        })
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
        let mut front = Vec::new();
        let mut best_rate = 0.0;
        for p in pts {
            if p.1 > best_rate {
                best_rate = p.1;
                front.push(p);
            }
        }
        front
    }

    /// Number of tracked round sequences (for reporting).
    pub fn sequences(&self) -> usize {
        self.entries.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_space() -> SearchSpace {
        SearchSpace {
            kinds: vec![ProtocolKind::Bh { k: 2 }, ProtocolKind::Bh { k: 10 }, ProtocolKind::Rm15, ProtocolKind::Toffoli],
            max_rounds: 2,
            modes: vec![CheckingMode::Block, CheckingMode::Module],
            attempts: vec![1, 2, 3],
        }
    }

    #[test]
    fn grid_respects_species() {
        let g = design_grid(&small_space());
        assert!(g.iter().all(|(k, _)| k.iter().filter(|x| **x == ProtocolKind::Toffoli).count() <= 1));
        assert!(!g.iter().any(|(k, _)| k == &[ProtocolKind::Toffoli, ProtocolKind::Toffoli]));
        // 4 + (4 * 4 - 1) sequences, two modes each.
        assert_eq!(g.len(), 2 * (4 + 15));
    }

    #[test]
    fn best_is_no_worse_than_any_neighbour() {
        let params = ResourceParams::new(1e-3, 1e-3);
        let opt = Optimizer::new(params, small_space()).unwrap();
        let states = 1e10;
        let best = opt.best(states, Species::T, None).unwrap();
        let v = best.volume();
        // Neighbours: change one attempt count by one.
        for i in 0..best.layout.design.attempts.len() {
            for delta in [-1i64, 1] {
                let t = best.layout.design.attempts[i] as i64 + delta;
                if !(1..=3).contains(&t) {
                    continue;
                }
                let mut d = best.layout.design.clone();
                d.attempts[i] = t as u32;
                let other = super::super::evaluate(&d, &params, states).unwrap();
                assert!(v <= other.volume * (1.0 + 1e-9));
            }
        }
        assert!(best.layout.global_error <= best.layout.eps_target);
        let dist = best.layout.distances();
        assert!(dist.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn toffoli_request_compares_both_routes() {
        let params = ResourceParams::new(1e-3, 1e-3);
        let opt = Optimizer::new(params, small_space()).unwrap();
        let best = opt.best(1e9, Species::Toffoli, None).unwrap();
        let via_t = opt.best(1e9 * T_PER_TOFFOLI, Species::T, None).unwrap();
        assert!(best.volume() <= T_PER_TOFFOLI * via_t.layout.volume * (1.0 + 1e-9));
    }

    #[test]
    fn impossible_demand_has_no_factory() {
        let space = SearchSpace { kinds: vec![ProtocolKind::Bh { k: 50 }], max_rounds: 1, ..small_space() };
        let opt = Optimizer::new(ResourceParams::new(1e-3, 1e-3), space).unwrap();
        assert!(matches!(opt.best(1e20, Species::T, None), Err(Error::NoValidFactory(_))));
    }

    #[test]
    fn time_optimal_meets_rate() {
        let params = ResourceParams::new(1e-4, 1e-3);
        let opt = Optimizer::new(params, small_space()).unwrap();
        let t = opt.time_optimal(1e10, Species::T).unwrap();
        let rate = t.candidate.layout.rate() * t.copies;
        assert!(rate >= params.time_optimal_rate() * (1.0 - 1e-9));
        let front = opt.frontier_points(1e10, Species::T);
        assert!(front.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 < w[1].1));
    }
}
