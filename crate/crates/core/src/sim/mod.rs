//! Monte Carlo simulation of module-checked factories.
//!
//! Errors are tracked as sparse position lists. A branch of width `W`
//! leaving a level-`l` module holds output `r` of block `t` at position
//! `r * N + t`, where `N` is the width of the module's input branches.
//!
//! Every trial draws from its own ChaCha stream selected by the trial index,
//! so results depend on the seed and trial count but not on threading.

mod module;

pub use module::{firewall_shuffle, run_module, ModuleOutcome, ShufflePolicy};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codes::{ProtocolCode, ProtocolKind};
use crate::error::{Error, Result};
use crate::math::{binomial_tail, ConditionalBinomial};

/// Sorted error positions within a branch.
pub type Branch = Vec<u32>;

/// Upper limit on rejected attempts while building one corrupt branch.
const MAX_REJECTIONS: u64 = 50_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SimMethod {
    /// Every raw state sampled; intermediate failures restart the trial.
    Brute,
    /// Top-level inputs preselected to hold at least two corrupt branches.
    Rare,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub kinds: Vec<ProtocolKind>,
    pub eps: f64,
    pub trials: u64,
    pub seed: u64,
    pub shuffle: ShufflePolicy,
}

impl SimConfig {
    pub fn new(kinds: &[ProtocolKind], eps: f64, trials: u64, seed: u64) -> Self {
        Self { kinds: kinds.to_vec(), eps, trials, seed, shuffle: ShufflePolicy::Canonical }
    }
}

/// Outcome tallies of the top-level module.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SimCounts {
    pub trials: u64,
    pub success: u64,
    pub fail: u64,
    pub error: u64,
    /// Modules that passed with exactly two corrupt inputs whose patterns,
    /// after shuffling, differ. Always zero for distance-2 codes.
    pub firewall_violations: u64,
    /// Error rate of the branches entering the top level (rare method).
    pub input_error_rate: f64,
    pub input_error_stderr: f64,
}

impl SimCounts {
    fn merge(mut self, o: SimCounts) -> SimCounts {
        self.trials += o.trials;
        self.success += o.success;
        self.fail += o.fail;
        self.error += o.error;
        self.firewall_violations += o.firewall_violations;
        self
    }
}

/// Estimated statistics of the accepted output of one level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    pub level: usize,
    pub method: SimMethod,
    pub p_success: f64,
    pub global_error: f64,
    pub stderr: f64,
    /// One-sided 95% bound when no error was observed.
    pub upper_95: Option<f64>,
    /// Probability of at least two corrupt inputs (rare method).
    pub p_preselect: f64,
    pub counts: SimCounts,
}

impl SimEstimate {
    pub fn relative_stderr(&self) -> f64 {
        if self.global_error > 0.0 {
            self.stderr / self.global_error
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Clone, Debug)]
struct Level {
    code: ProtocolCode,
    /// Input branch width.
    width: usize,
    clean_prob: f64,
    nonzero: Option<ConditionalBinomial>,
}

#[derive(Clone, Debug)]
struct Factory {
    levels: Vec<Level>,
    shuffle: ShufflePolicy,
}

impl Factory {
    fn new(cfg: &SimConfig) -> Result<Self> {
        if !(0.0..0.5).contains(&cfg.eps) {
            return Err(Error::InvalidConfig(format!("noise strength {} outside [0, 0.5)", cfg.eps)));
        }
        crate::tracking::FactorySpec::new(&cfg.kinds, crate::tracking::CheckingMode::Module)?;
        let mut width = 1usize;
        let mut levels = Vec::new();
        for (i, &kind) in cfg.kinds.iter().enumerate() {
            let code = ProtocolCode::from_kind(kind)?;
            let n = code.n();
            let (clean_prob, nonzero) = if i == 0 {
                ((n as f64 * (-cfg.eps).ln_1p()).exp(), ConditionalBinomial::new(n, cfg.eps, 1))
            } else {
                (1.0, None)
            };
            let next = width.checked_mul(kind.units_out()).filter(|&w| w <= u32::MAX as usize);
            levels.push(Level { code, width, clean_prob, nonzero });
            width = next.ok_or_else(|| Error::TooLarge("branch width overflow".into()))?;
        }
        Ok(Self { levels, shuffle: cfg.shuffle })
    }

    /// One accepted first-level block, retried until its checks pass.
    fn accepted_block<R: Rng>(&self, rng: &mut R) -> Branch {
        let lvl = &self.levels[0];
        let n = lvl.code.n();
        loop {
            let u: f64 = rng.random();
            if u < lvl.clean_prob {
                return Vec::new();
            }
            let Some(nz) = &lvl.nonzero else { return Vec::new() };
            let w = nz.sample(rng);
            let pos = sample(rng, n, w);
            let (syn, y) = pos.iter().fold((0u64, 0u64), |(s, o), i| (s ^ lvl.code.g0_col(i), o ^ lvl.code.g1_col(i)));
            if syn == 0 {
                return match lvl.code.kind() {
                    Some(ProtocolKind::Toffoli) => if y != 0 { vec![0] } else { Vec::new() },
                    _ => bits_to_branch(y),
                };
            }
        }
    }

    fn eval<R: Rng>(&self, level: usize, inputs: &[Branch], rng: &mut R, violations: &mut u64) -> ModuleOutcome {
        let lvl = &self.levels[level];
        let out = run_module(&lvl.code, inputs, lvl.width, self.shuffle, rng);
        if out.passed && out.corrupt_inputs == 2 && out.distinct_patterns {
            *violations += 1;
        }
        out
    }

    /// A full trial following the brute-force procedure.
    fn brute_trial<R: Rng>(&self, rng: &mut R, violations: &mut u64) -> Outcome {
        let depth = self.levels.len();
        let needed: usize = self.levels[1..].iter().map(|l| l.code.n()).product();
        'restart: loop {
            let mut branches: Vec<Branch> = (0..needed).map(|_| self.accepted_block(rng)).collect();
            if depth == 1 {
                return classify(true, &branches[0]);
            }
            for l in 1..depth - 1 {
                let n = self.levels[l].code.n();
                let mut next = Vec::with_capacity(branches.len() / n);
                for chunk in branches.chunks(n) {
                    let o = self.eval(l, chunk, rng, violations);
                    if !o.passed {
                        continue 'restart;
                    }
                    next.push(o.output);
                }
                branches = next;
            }
            let o = self.eval(depth - 1, &branches, rng, violations);
            return classify(o.passed, &o.output);
        }
    }

    /// Inputs for a level-`l` module with at least two corrupt branches.
    fn preselected_inputs<R: Rng>(
        &self,
        l: usize,
        rates: &[Option<ConditionalBinomial>],
        rng: &mut R,
        violations: &mut u64,
    ) -> Result<Vec<Branch>> {
        let n = self.levels[l].code.n();
        let dist = rates[l].as_ref().ok_or(Error::InvalidPreselection(0))?;
        let c = dist.sample(rng);
        if c < 2 {
            return Err(Error::InvalidPreselection(c));
        }
        let mut inputs = vec![Vec::new(); n];
        for i in sample(rng, n, c).iter() {
            inputs[i] = self.corrupt_branch(l, rates, rng, violations)?;
        }
        Ok(inputs)
    }

    /// An accepted output of level `l - 1` (0 meaning a raw state) carrying an error.
    fn corrupt_branch<R: Rng>(
        &self,
        l: usize,
        rates: &[Option<ConditionalBinomial>],
        rng: &mut R,
        violations: &mut u64,
    ) -> Result<Branch> {
        if l == 0 {
            return Ok(vec![0]);
        }
        let below = l - 1;
        for _ in 0..MAX_REJECTIONS {
            let inputs = self.preselected_inputs(below, rates, rng, violations)?;
            let o = self.eval(below, &inputs, rng, violations);
            if o.passed && !o.output.is_empty() {
                return Ok(o.output);
            }
        }
        Err(Error::Infeasible(format!("no corrupt level-{l} branch after {MAX_REJECTIONS} attempts")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Outcome {
    Success,
    Fail,
    Error,
}

fn classify(passed: bool, output: &Branch) -> Outcome {
    match (passed, output.is_empty()) {
        (false, _) => Outcome::Fail,
        (true, true) => Outcome::Success,
        (true, false) => Outcome::Error,
    }
}

fn bits_to_branch(y: u64) -> Branch {
    (0..64).filter(|r| y >> r & 1 == 1).collect()
}

/// Stream for one trial.
fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn run_trials<F>(trials: u64, seed: u64, f: F) -> Result<SimCounts>
where
    F: Fn(&mut ChaCha8Rng, &mut u64) -> Result<Outcome> + Sync,
{
    const CHUNK: u64 = 4096;
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut counts = SimCounts::default();
            for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                let mut rng = trial_rng(seed, t);
                let outcome = f(&mut rng, &mut counts.firewall_violations)?;
                counts.trials += 1;
                match outcome {
                    Outcome::Success => counts.success += 1,
                    Outcome::Fail => counts.fail += 1,
                    Outcome::Error => counts.error += 1,
                }
            }
            Ok(counts)
        })
        .try_reduce(SimCounts::default, |a, b| Ok(a.merge(b)))
}

/// Direct simulation: all raw states sampled, intermediate failures restart
/// the whole trial, and the top module is classified.
pub fn simulate_brute(cfg: &SimConfig) -> Result<SimCounts> {
    let f = Factory::new(cfg)?;
    run_trials(cfg.trials, cfg.seed, |rng, v| Ok(f.brute_trial(rng, v)))
}

/// Preselected simulation of the top level of `cfg.kinds`.
///
/// `lower[j]` must hold the estimate for level `j + 1`, for every level below
/// the top. Each trial draws the number of corrupt inputs from a binomial
/// conditioned on at least two, fills them with accepted corrupt branches
/// built the same way one level down, and classifies the top module.
pub fn simulate_rare(cfg: &SimConfig, lower: &[SimEstimate]) -> Result<SimCounts> {
    let f = Factory::new(cfg)?;
    let depth = f.levels.len();
    if lower.len() + 1 != depth {
        return Err(Error::InvalidConfig(format!(
            "{} lower-level estimates given for a {depth}-level factory",
            lower.len()
        )));
    }
    let mut rates = vec![(cfg.eps, 0.0)];
    rates.extend(lower.iter().map(|e| (e.global_error, e.stderr)));
    let (q, q_err) = rates[depth - 1];
    let samplers: Vec<Option<ConditionalBinomial>> = f
        .levels
        .iter()
        .zip(&rates)
        .map(|(lvl, &(q, _))| ConditionalBinomial::new(lvl.code.n(), q, 2))
        .collect();
    if samplers[depth - 1].is_none() {
        return Ok(SimCounts { input_error_rate: q, input_error_stderr: q_err, ..Default::default() });
    }
    let mut counts = run_trials(cfg.trials, cfg.seed, |rng, v| {
        let inputs = f.preselected_inputs(depth - 1, &samplers, rng, v)?;
        let o = f.eval(depth - 1, &inputs, rng, v);
        Ok(classify(o.passed, &o.output))
    })?;
    counts.input_error_rate = q;
    counts.input_error_stderr = q_err;
    Ok(counts)
}

/// Turns brute-force tallies into level statistics.
pub fn estimate_brute(counts: &SimCounts, level: usize) -> SimEstimate {
    let accepted = counts.success + counts.error;
    let p_success = if counts.trials > 0 { accepted as f64 / counts.trials as f64 } else { 1.0 };
    let (global_error, stderr, upper_95) = if accepted == 0 {
        (0.0, 0.0, None)
    } else {
        let g = counts.error as f64 / accepted as f64;
        let se = (g * (1.0 - g) / accepted as f64).sqrt();
        let ub = (counts.error == 0).then(|| 3.0 / accepted as f64);
        (g, se, ub)
    };
    SimEstimate {
        level,
        method: SimMethod::Brute,
        p_success,
        global_error,
        stderr,
        upper_95,
        p_preselect: 1.0,
        counts: counts.clone(),
    }
}

/// Rare-event estimator for a level with `n` input branches:
/// `p_suc = (1-q)^n + p_num (a + b)` and `eps_glo = b p_num / p_suc`, where
/// `p_num` is the probability of at least two corrupt inputs and `a`, `b`
/// are the preselected SUCCESS and ERROR fractions.
pub fn estimate_rare(counts: &SimCounts, n: usize, level: usize) -> SimEstimate {
    let q = counts.input_error_rate;
    let t = counts.trials.max(1) as f64;
    let (a, b) = (counts.success as f64 / t, counts.error as f64 / t);
    let eval = |a: f64, b: f64, q: f64| -> (f64, f64, f64) {
        let q = q.clamp(0.0, 1.0);
        let p_num = binomial_tail(n, q, 2);
        let p_suc = (n as f64 * (-q).ln_1p()).exp() + p_num * (a + b);
        (p_num, p_suc, b * p_num / p_suc)
    };
    let (p_num, p_success, g) = eval(a, b, q);
    // Delta method over the multinomial (a, b) and the input rate.
    let var_a = a * (1.0 - a) / t;
    let var_b = b * (1.0 - b) / t;
    let cov_ab = -a * b / t;
    let h = |x: f64| (x.abs() * 1e-4).max(1e-300);
    let da = (eval(a + h(a), b, q).2 - eval(a - h(a), b, q).2) / (2.0 * h(a));
    let db = (eval(a, b + h(b), q).2 - eval(a, b - h(b), q).2) / (2.0 * h(b));
    let dq = if q > 0.0 { (eval(a, b, q + h(q)).2 - eval(a, b, q - h(q)).2) / (2.0 * h(q)) } else { 0.0 };
    let var = da * da * var_a + db * db * var_b + 2.0 * da * db * cov_ab + dq * dq * counts.input_error_stderr.powi(2);
    let upper_95 = (counts.error == 0 && p_num > 0.0).then(|| 3.0 / t * p_num / p_success);
    SimEstimate {
        level,
        method: SimMethod::Rare,
        p_success,
        global_error: g,
        stderr: var.max(0.0).sqrt(),
        upper_95,
        p_preselect: p_num,
        counts: counts.clone(),
    }
}

/// Level-by-level rare-event estimates, each level using the one below.
pub fn estimate_levels(cfg: &SimConfig, trials_per_level: &[u64]) -> Result<Vec<SimEstimate>> {
    if trials_per_level.len() != cfg.kinds.len() {
        return Err(Error::InvalidConfig("one trial count per level is required".into()));
    }
    let mut out: Vec<SimEstimate> = Vec::new();
    for (l, &trials) in trials_per_level.iter().enumerate() {
        let sub = SimConfig {
            kinds: cfg.kinds[..=l].to_vec(),
            trials,
            seed: cfg.seed.wrapping_add(l as u64),
            ..cfg.clone()
        };
        let counts = simulate_rare(&sub, &out)?;
        out.push(estimate_rare(&counts, cfg.kinds[l].units_in(), l + 1));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bh(k: usize) -> ProtocolKind {
        ProtocolKind::Bh { k }
    }

    #[test]
    fn zero_noise_always_succeeds() {
        let cfg = SimConfig::new(&[bh(2), bh(2)], 0.0, 500, 1);
        let c = simulate_brute(&cfg).unwrap();
        assert_eq!((c.trials, c.success), (500, 500));
        let r = simulate_rare(&SimConfig::new(&[bh(2)], 0.0, 10, 1), &[]).unwrap();
        assert_eq!(r.trials, 0);
        let e = estimate_rare(&r, 14, 1);
        assert_eq!((e.global_error, e.p_success), (0.0, 1.0));
    }

    #[test]
    fn zero_trials_is_empty() {
        let c = simulate_brute(&SimConfig::new(&[bh(2)], 0.01, 0, 1)).unwrap();
        assert_eq!(c, SimCounts::default());
        let e = estimate_brute(&c, 1);
        assert_eq!(e.global_error, 0.0);
    }

    #[test]
    fn seeded_runs_repeat() {
        let cfg = SimConfig::new(&[bh(2), bh(2)], 0.02, 3000, 42);
        assert_eq!(simulate_brute(&cfg).unwrap(), simulate_brute(&cfg).unwrap());
        let other = SimConfig { seed: 43, ..cfg.clone() };
        assert_ne!(simulate_brute(&cfg).unwrap(), simulate_brute(&other).unwrap());
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let cfg = SimConfig::new(&[bh(2), bh(2)], 0.02, 20_000, 7);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| simulate_brute(&cfg).unwrap());
        let b = four.install(|| simulate_brute(&cfg).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn lower_estimates_must_match_depth() {
        let cfg = SimConfig::new(&[bh(2), bh(2)], 0.01, 10, 1);
        assert!(matches!(simulate_rare(&cfg, &[]), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn single_level_rare_matches_exact() {
        let eps = 0.01;
        let cfg = SimConfig::new(&[bh(2)], eps, 200_000, 3);
        let e = &estimate_levels(&cfg, &[200_000]).unwrap()[0];
        let exact = crate::codes::BlockSpectra::new(&ProtocolCode::bh(2).unwrap()).unwrap();
        let g = exact.global_error(eps);
        assert!((e.global_error - g).abs() < 4.0 * e.stderr, "{} vs {g} (se {})", e.global_error, e.stderr);
        assert!((e.p_success - exact.p_success(eps)).abs() < 1e-3);
    }

    #[test]
    fn brute_single_level_matches_exact() {
        let eps = 0.05;
        let c = simulate_brute(&SimConfig::new(&[bh(2)], eps, 400_000, 5)).unwrap();
        let e = estimate_brute(&c, 1);
        let exact = crate::codes::BlockSpectra::new(&ProtocolCode::bh(2).unwrap()).unwrap();
        // Brute trials retry the block until it passes, so p_success is 1 here.
        assert!((e.global_error - exact.global_error(eps)).abs() < 4.0 * e.stderr);
    }

    #[test]
    fn firewall_holds_in_simulation() {
        let cfg = SimConfig::new(&[bh(6), bh(6)], 3e-3, 20_000, 9);
        let lower = estimate_levels(&SimConfig::new(&[bh(6)], 3e-3, 20_000, 9), &[20_000]).unwrap();
        let c = simulate_rare(&cfg, &lower).unwrap();
        assert_eq!(c.firewall_violations, 0);
        assert!(c.error > 0);
    }
}
