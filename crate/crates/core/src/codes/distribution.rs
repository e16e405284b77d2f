use std::collections::BTreeMap;

use rayon::prelude::*;

use super::ProtocolCode;
use crate::error::{Error, Result};
use crate::math::{binomial_tail, ln_binomial_term};

/// Default largest input weight enumerated in truncated mode.
pub const DEFAULT_WEIGHT_CUTOFF: usize = 6;

/// Inputs up to this size are enumerated exhaustively by default.
const EXHAUSTIVE_MAX_N: usize = 26;

/// Cap on the number of enumerated inputs in truncated mode.
const MAX_ENUMERATED: f64 = 4.0e9;

#[derive(Clone, Copy, Debug)]
pub struct DistributionOptions {
    /// Largest input weight to enumerate. `None` enumerates all `2^n` inputs
    /// when `n <= 26` and falls back to [`DEFAULT_WEIGHT_CUTOFF`] otherwise.
    pub max_weight: Option<usize>,
    /// Largest acceptable probability mass of the skipped heavy inputs.
    pub tail_tolerance: f64,
}

impl Default for DistributionOptions {
    fn default() -> Self {
        Self { max_weight: None, tail_tolerance: 1e-6 }
    }
}

/// Output statistics of one block under i.i.d. Z noise of strength `eps`.
#[derive(Clone, Debug)]
pub struct OutputDistribution {
    pub n: usize,
    pub k: usize,
    pub eps: f64,
    /// Probability that the checks pass.
    pub p_success: f64,
    /// Output error distribution conditioned on passing. Sums to one.
    pub p_out: BTreeMap<u64, f64>,
    /// Largest weight enumerated (`n` for exhaustive runs).
    pub max_weight: usize,
    /// Probability mass of inputs heavier than `max_weight`.
    pub tail: f64,
    /// Accepted inputs by output pattern and input weight; evaluation at any
    /// other noise strength reuses these counts.
    pub counts: BTreeMap<u64, Vec<u64>>,
}

impl OutputDistribution {
    pub fn exhaustive(&self) -> bool {
        self.max_weight == self.n
    }

    /// Probability of a nonzero output error given success.
    pub fn global_error(&self) -> f64 {
        self.p_out.iter().filter(|(&y, _)| y != 0).map(|(_, p)| p).sum()
    }

    /// Probability that output `q` is wrong given success.
    pub fn marginal(&self, q: usize) -> f64 {
        self.p_out.iter().filter(|(&y, _)| y >> q & 1 == 1).map(|(_, p)| p).sum()
    }

    /// Average of [`Self::marginal`] over all outputs.
    pub fn mean_marginal(&self) -> f64 {
        (0..self.k).map(|q| self.marginal(q)).sum::<f64>() / self.k as f64
    }

    /// Unnormalized probability of passing with output error `y`.
    pub fn joint(&self, y: u64) -> f64 {
        self.p_out.get(&y).copied().unwrap_or(0.0) * self.p_success
    }
}

/// Output error distribution of a block, by enumeration of input errors.
pub fn block_distribution(code: &ProtocolCode, eps: f64, opts: DistributionOptions) -> Result<OutputDistribution> {
    if !(0.0..=0.5).contains(&eps) {
        return Err(Error::InvalidConfig(format!("noise strength {eps} outside [0, 0.5]")));
    }
    let n = code.n();
    let max_weight = match opts.max_weight {
        Some(w) => w.min(n),
        None if n <= EXHAUSTIVE_MAX_N => n,
        None => DEFAULT_WEIGHT_CUTOFF.min(n),
    };
    let tail = if max_weight >= n { 0.0 } else { binomial_tail(n, eps, max_weight + 1) };
    if tail > opts.tail_tolerance {
        return Err(Error::TailTooLarge { tail, tolerance: opts.tail_tolerance });
    }
    let counts = if max_weight == n {
        if n > 40 {
            return Err(Error::TooLarge(format!("exhaustive enumeration of 2^{n} inputs")));
        }
        count_exhaustive(code)
    } else {
        let total: f64 = (0..=max_weight).map(|w| ln_binomial_term(n, w).exp()).sum();
        if total > MAX_ENUMERATED {
            return Err(Error::TooLarge(format!("{total:.2e} inputs up to weight {max_weight}")));
        }
        count_truncated(code, max_weight)
    };

    let mut joint: BTreeMap<u64, f64> = BTreeMap::new();
    for (&y, per_w) in &counts {
        let p: f64 = per_w
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(w, &c)| c as f64 * prob_of_weight(n, w, eps))
            .sum();
        if p > 0.0 {
            joint.insert(y, p);
        }
    }
    let p_success: f64 = joint.values().sum();
    let p_out = if p_success > 0.0 {
        joint.into_iter().map(|(y, p)| (y, p / p_success)).collect()
    } else {
        BTreeMap::new()
    };
    Ok(OutputDistribution { n, k: code.k(), eps, p_success, p_out, max_weight, tail, counts })
}

/// `eps^w (1 - eps)^(n - w)` with the edge cases at `eps = 0` handled.
pub(crate) fn prob_of_weight(n: usize, w: usize, eps: f64) -> f64 {
    if eps == 0.0 {
        return if w == 0 { 1.0 } else { 0.0 };
    }
    (w as f64 * eps.ln() + (n - w) as f64 * (-eps).ln_1p()).exp()
}

type Counts = BTreeMap<u64, Vec<u64>>;

fn merge(mut a: Counts, b: Counts) -> Counts {
    for (y, v) in b {
        let e = a.entry(y).or_insert_with(|| vec![0; v.len()]);
        for (x, c) in e.iter_mut().zip(v) {
            *x += c;
        }
    }
    a
}

/// Gray-code walk over all inputs, split on the top bits for parallelism.
fn count_exhaustive(code: &ProtocolCode) -> Counts {
    let n = code.n();
    let g0 = code.g0_cols();
    let g1 = code.g1_cols();
    let hi = n.min(6);
    let lo = n - hi;
    (0u64..1 << hi)
        .into_par_iter()
        .map(|prefix| {
            let mut syn = 0u64;
            let mut out = 0u64;
            let mut weight = 0usize;
            for b in 0..hi {
                if prefix >> b & 1 == 1 {
                    syn ^= g0[lo + b];
                    out ^= g1[lo + b];
                    weight += 1;
                }
            }
            let mut local: Counts = BTreeMap::new();
            let bump = |syn: u64, out: u64, weight: usize, local: &mut Counts| {
                if syn == 0 {
                    local.entry(out).or_insert_with(|| vec![0; n + 1])[weight] += 1;
                }
            };
            bump(syn, out, weight, &mut local);
            let mut gray = 0u64;
            for step in 1u64..1 << lo {
                let bit = step.trailing_zeros() as usize;
                gray ^= 1 << bit;
                syn ^= g0[bit];
                out ^= g1[bit];
                if gray >> bit & 1 == 1 {
                    weight += 1;
                } else {
                    weight -= 1;
                }
                bump(syn, out, weight, &mut local);
            }
            local
        })
        .reduce(BTreeMap::new, merge)
}

/// Depth-first walk over all inputs of weight at most `max_weight`.
fn count_truncated(code: &ProtocolCode, max_weight: usize) -> Counts {
    let n = code.n();
    let g0 = code.g0_cols();
    let g1 = code.g1_cols();
    let mut base: Counts = BTreeMap::new();
    base.insert(0, {
        let mut v = vec![0; n + 1];
        v[0] = 1;
        v
    });
    if max_weight == 0 {
        return base;
    }
    let rest = (0..n)
        .into_par_iter()
        .map(|first| {
            let mut local: Counts = BTreeMap::new();
            walk(first, g0[first], g1[first], 1, max_weight, n, g0, g1, &mut local);
            local
        })
        .reduce(BTreeMap::new, merge);
    merge(base, rest)
}

#[allow(clippy::too_many_arguments)]
fn walk(last: usize, syn: u64, out: u64, weight: usize, max_weight: usize, n: usize, g0: &[u64], g1: &[u64], acc: &mut Counts) {
    if syn == 0 {
        acc.entry(out).or_insert_with(|| vec![0; n + 1])[weight] += 1;
    }
    if weight == max_weight {
        return;
    }
    for i in last + 1..n {
        walk(i, syn ^ g0[i], out ^ g1[i], weight + 1, max_weight, n, g0, g1, acc);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_noise_is_deterministic_success() {
        let d = block_distribution(&ProtocolCode::bh(2).unwrap(), 0.0, Default::default()).unwrap();
        assert_eq!(d.p_success, 1.0);
        assert_eq!(d.p_out, BTreeMap::from([(0, 1.0)]));
    }

    #[test]
    fn exhaustive_counts_cover_accepted_inputs() {
        let code = ProtocolCode::bh(2).unwrap();
        let d = block_distribution(&code, 0.01, Default::default()).unwrap();
        assert!(d.exhaustive());
        // 2^(14 - 3) inputs pass the three checks.
        let total: u64 = d.counts.values().flatten().sum();
        assert_eq!(total, 1 << 11);
        assert_eq!(d.counts[&0b11][2], 7);
        assert_relative_eq!(d.p_out.values().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn truncated_agrees_with_exhaustive_at_low_noise() {
        let code = ProtocolCode::bh(6).unwrap();
        let full = block_distribution(&code, 1e-3, Default::default()).unwrap();
        let opts = DistributionOptions { max_weight: Some(6), tail_tolerance: 1e-6 };
        let cut = block_distribution(&code, 1e-3, opts).unwrap();
        assert!(!cut.exhaustive());
        assert_relative_eq!(full.global_error(), cut.global_error(), max_relative = 1e-6);
    }

    #[test]
    fn heavy_tail_is_rejected() {
        let code = ProtocolCode::bh(50).unwrap();
        let opts = DistributionOptions { max_weight: Some(2), tail_tolerance: 1e-9 };
        assert!(matches!(block_distribution(&code, 0.01, opts), Err(Error::TailTooLarge { .. })));
    }

    #[test]
    fn rejects_bad_noise() {
        let code = ProtocolCode::toffoli();
        assert!(block_distribution(&code, 0.7, Default::default()).is_err());
    }

    #[test]
    fn low_noise_leading_order() {
        let code = ProtocolCode::bh(2).unwrap();
        let eps = 1e-5;
        let d = block_distribution(&code, eps, Default::default()).unwrap();
        assert_relative_eq!(d.global_error(), 7.0 * eps * eps, max_relative = 1e-3);
    }
}
