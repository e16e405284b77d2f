use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{epsilon_target, required_distance, Optimizer, ResourceParams};
use crate::codes::{ProtocolKind, Species};
use crate::error::{Error, Result};
use crate::tracking::{cost_from_report, track_block_with, track_module_with, BlockEstimate, CheckingMode, RoundData};

/// Cheapest BH sequence reaching a per-output error target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct YieldPoint {
    pub target: f64,
    pub mode: CheckingMode,
    /// Raw states consumed per output state.
    pub cost: f64,
    pub unit_error: f64,
    pub design: String,
}

/// Raw-state cost against target error for BH sequences of up to
/// `max_rounds` rounds, once per checking mode. Targets no sequence reaches
/// are omitted.
pub fn yield_curve(eps: f64, targets: &[f64], ks: &[usize], max_rounds: usize) -> Result<Vec<YieldPoint>> {
    let data: Vec<RoundData> = ks.iter().map(|&k| RoundData::new(ProtocolKind::Bh { k })).collect::<Result<_>>()?;
    let mut seqs: Vec<Vec<usize>> = vec![];
    let mut layer: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..max_rounds {
        layer = layer.iter().flat_map(|s| (0..data.len()).map(move |i| [s.as_slice(), &[i]].concat())).collect();
        seqs.extend(layer.iter().cloned());
    }
    // (mode, cost, unit error, label) for every sequence that improves on eps.
    let tracked: Vec<(CheckingMode, f64, f64, String)> = seqs
        .par_iter()
        .flat_map_iter(|s| {
            let rd: Vec<RoundData> = s.iter().map(|&i| data[i].clone()).collect();
            let kinds: Vec<ProtocolKind> = rd.iter().map(|d| d.kind).collect();
            let label = kinds.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(",");
            [CheckingMode::Block, CheckingMode::Module].into_iter().filter_map(move |mode| {
                let report = match mode {
                    CheckingMode::Module => track_module_with(&rd, eps),
                    CheckingMode::Block => track_block_with(&rd, eps, BlockEstimate::Exact),
                }
                .ok()?;
                let unit = report.final_level().unit_error;
                let cost = cost_from_report(&kinds, &report);
                (unit.is_finite() && cost.is_finite()).then(|| (mode, cost, unit, label.clone()))
            })
        })
        .collect();
    let mut out = vec![];
    for &target in targets {
        for mode in [CheckingMode::Block, CheckingMode::Module] {
            let best = tracked
                .iter()
                .filter(|t| t.0 == mode && t.2 <= target)
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.3.cmp(&b.3)));
            if let Some(b) = best {
                out.push(YieldPoint { target, mode, cost: b.1, unit_error: b.2, design: b.3.clone() });
            }
        }
    }
    Ok(out)
}

/// Best spacetime volume at one demand, overall and per checking mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpacetimePoint {
    pub states: f64,
    /// `None` for the unrestricted optimum.
    pub mode: Option<CheckingMode>,
    pub volume: f64,
    pub design: String,
}

pub fn spacetime_curve(opt: &Optimizer, states: &[f64], want: Species) -> Vec<SpacetimePoint> {
    let mut out = vec![];
    for &n in states {
        for mode in [None, Some(CheckingMode::Block), Some(CheckingMode::Module)] {
            if let Ok(c) = opt.best(n, want, mode) {
                let d: Vec<String> = c.layout.distances().iter().map(|d| d.to_string()).collect();
                out.push(SpacetimePoint {
                    states: n,
                    mode,
                    volume: c.volume(),
                    design: format!("{} d={}{}", c.layout.design, d.join(","), if c.seven_t { " (7T)" } else { "" }),
                });
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub physical_qubits: f64,
    /// Requested units per surface-code cycle.
    pub rate: f64,
    pub volume: f64,
    pub design: String,
}

/// Fewest physical qubits for each achievable output rate.
pub fn frontier(opt: &Optimizer, states: f64, want: Species) -> Vec<FrontierPoint> {
    opt.frontier_points(states, want)
        .into_iter()
        .map(|(physical_qubits, rate, volume, design)| FrontierPoint { physical_qubits, rate, volume, design })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub states: f64,
    pub volume: f64,
    /// Qubit-rounds of one logical CNOT at the same error budget.
    pub cnot_volume: f64,
    pub ratio: f64,
}

/// Volume of a lattice-surgery CNOT sized so a computation of `states`
/// gates fails with probability at most `1 - p_suc_alg`: two patches of
/// distance `d` for `d` rounds.
pub fn cnot_volume(params: &ResourceParams, states: f64) -> Result<f64> {
    let target = epsilon_target(params.p_suc_alg, states);
    let d = required_distance(target / 2.0, params.p_g)? as f64;
    Ok(2.0 * d.powi(3))
}

pub fn t_to_cnot_ratio(params: &ResourceParams, states: f64, t_volume: f64) -> Result<f64> {
    Ok(t_volume / cnot_volume(params, states)?)
}

/// Best T-state volume over a grid of demands, with the CNOT comparison.
pub fn scaling_curve(opt: &Optimizer, states: &[f64]) -> Result<Vec<ScalingPoint>> {
    states
        .iter()
        .map(|&n| {
            let volume = opt.best(n, Species::T, None)?.volume();
            let cnot = cnot_volume(&opt.params, n)?;
            Ok(ScalingPoint { states: n, volume, cnot_volume: cnot, ratio: volume / cnot })
        })
        .collect()
}

/// Least-squares fit of `a log10(N)^b + c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub rss: f64,
}

impl PowerFit {
    pub fn eval(&self, states: f64) -> f64 {
        self.a * states.log10().powf(self.b) + self.c
    }
}

/// For each exponent on a fine grid the other two parameters are linear, so
/// they are solved exactly and the exponent with least residual is kept.
/// Points with `N <= 1` are excluded.
pub fn fit_log_power(points: &[(f64, f64)]) -> Result<PowerFit> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|p| p.0 > 1.0).map(|&(n, v)| (n.log10(), v)).collect();
    if pts.len() < 3 {
        return Err(Error::InvalidConfig("need at least three points with N > 1".into()));
    }
    let fit_at = |b: f64| -> Option<PowerFit> {
        let m = pts.len() as f64;
        let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        for &(l, v) in &pts {
            let x = l.powf(b);
            sx += x;
            sy += v;
            sxx += x * x;
            sxy += x * v;
        }
        let det = m * sxx - sx * sx;
        if det.abs() <= 1e-12 * (m * sxx).abs() {
            return None;
        }
        let a = (m * sxy - sx * sy) / det;
        let c = (sy - a * sx) / m;
        let rss = pts.iter().map(|&(l, v)| (a * l.powf(b) + c - v).powi(2)).sum();
        Some(PowerFit { a, b, c, rss })
    };
    let best = (1..=8000)
        .filter_map(|i| fit_at(i as f64 * 1e-3))
        .min_by(|x, y| x.rss.total_cmp(&y.rss))
        .ok_or_else(|| Error::InvalidConfig("degenerate fit".into()))?;
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_exact_curve() {
        let pts: Vec<(f64, f64)> = (10..=30).map(|e| (10f64.powi(e), 7.0 * (e as f64).powf(2.75) + 300.0)).collect();
        let f = fit_log_power(&pts).unwrap();
        assert!((f.b - 2.75).abs() < 1e-9, "{f:?}");
        assert!((f.a - 7.0).abs() < 1e-6);
        assert!((f.c - 300.0).abs() < 1e-3);
    }

    #[test]
    fn fit_skips_degenerate_point() {
        let mut pts: Vec<(f64, f64)> = (10..=20).map(|e| (10f64.powi(e), (e as f64).powi(3))).collect();
        pts.push((1.0, 1e9));
        assert!((fit_log_power(&pts).unwrap().b - 3.0).abs() < 1e-9);
        assert!(fit_log_power(&pts[..2]).is_err());
    }

    #[test]
    fn cnot_volume_grows_with_demand() {
        let p = ResourceParams::new(1e-3, 1e-5);
        let a = cnot_volume(&p, 1e10).unwrap();
        let b = cnot_volume(&p, 1e20).unwrap();
        assert!(b > a);
        assert_eq!(a, 2.0 * (required_distance(epsilon_target(0.9, 1e10) / 2.0, 1e-3).unwrap() as f64).powi(3));
    }

    #[test]
    fn yield_targets_are_met_and_costs_grow() {
        let targets = [1e-5, 1e-7, 1e-9];
        let pts = yield_curve(1e-3, &targets, &[2, 6, 10], 2).unwrap();
        assert_eq!(pts.len(), 6);
        for p in &pts {
            assert!(p.unit_error <= p.target);
        }
        for mode in [CheckingMode::Block, CheckingMode::Module] {
            let c: Vec<f64> = pts.iter().filter(|p| p.mode == mode).map(|p| p.cost).collect();
            assert!(c.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
