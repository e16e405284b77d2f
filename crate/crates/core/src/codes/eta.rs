use std::collections::{BTreeMap, HashMap};

use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::ProtocolCode;

/// Lowest-weight undetected errors of a block, grouped by the output error
/// they cause.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EtaFunction {
    /// Weight of the counted input errors (2 for the `3k+8` and Toffoli
    /// blocks, 3 for the 15-to-1 block).
    pub order: usize,
    /// Nonzero output pattern `y` to the number of weight-`order` inputs
    /// with `G0 x = 0` and `G1 x = y`. `y = 0` is never stored.
    pub counts: BTreeMap<u64, u64>,
}

impl EtaFunction {
    pub fn get(&self, y: u64) -> u64 {
        self.counts.get(&y).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Expected number of erroneous outputs at leading order, summed over
    /// outputs: `sum_y eta(y) |y|`.
    pub fn weighted_total(&self) -> u64 {
        self.counts.iter().map(|(y, c)| c * y.count_ones() as u64).sum()
    }
}

/// Counts undetected input errors of the smallest weight that has any.
///
/// Weights up to 4 are searched; a code whose undetected errors all have
/// larger weight yields an empty map with `order = 5`.
pub fn eta(code: &ProtocolCode) -> EtaFunction {
    let n = code.n();
    let g0 = code.g0_cols();
    let g1 = code.g1_cols();

    for order in 1..=4usize {
        let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
        match order {
            1 => {
                for i in 0..n {
                    if g0[i] == 0 && g1[i] != 0 {
                        *counts.entry(g1[i]).or_default() += 1;
                    }
                }
            }
            2 => {
                for i in 0..n {
                    for j in i + 1..n {
                        if g0[i] == g0[j] {
                            let y = g1[i] ^ g1[j];
                            if y != 0 {
                                *counts.entry(y).or_default() += 1;
                            }
                        }
                    }
                }
            }
            _ => {
                // Index columns by syndrome so the last element is a lookup.
                let mut by_syn: HashMap<u64, Vec<usize>> = HashMap::new();
                for (i, &s) in g0.iter().enumerate() {
                    by_syn.entry(s).or_default().push(i);
                }
                let mut stack = Vec::with_capacity(order);
                collect(order, 0, 0, 0, &mut stack, g0, g1, &by_syn, &mut counts);
            }
        }
        if !counts.is_empty() {
            return EtaFunction { order, counts };
        }
    }
    EtaFunction { order: 5, counts: BTreeMap::new() }
}

#[allow(clippy::too_many_arguments)]
fn collect(
    order: usize,
    start: usize,
    syn: u64,
    out: u64,
    stack: &mut Vec<usize>,
    g0: &[u64],
    g1: &[u64],
    by_syn: &HashMap<u64, Vec<usize>>,
    counts: &mut BTreeMap<u64, u64>,
) {
    if stack.len() + 1 == order {
        if let Some(cands) = by_syn.get(&syn) {
            for &c in cands.iter().filter(|&&c| c >= start) {
                let y = out ^ g1[c];
                if y != 0 {
                    *counts.entry(y).or_default() += 1;
                }
            }
        }
        return;
    }
    for i in start..g0.len() {
        stack.push(i);
        collect(order, i + 1, syn ^ g0[i], out ^ g1[i], stack, g0, g1, by_syn, counts);
        stack.pop();
    }
}

/// `sum_y eta(y)^m` as an exact integer.
pub fn sum_eta_power(eta: &EtaFunction, m: u32) -> BigUint {
    eta.counts.values().fold(BigUint::zero(), |acc, &c| {
        let mut p = BigUint::one();
        let b = BigUint::from(c);
        for _ in 0..m {
            p *= &b;
        }
        acc + p
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::BinaryMatrix;

    /// Independent count through explicit matrix products over all weight-`w` inputs.
    fn brute_eta(code: &ProtocolCode, w: usize) -> BTreeMap<u64, u64> {
        let n = code.n();
        let mut counts = BTreeMap::new();
        let mut idx: Vec<usize> = (0..w).collect();
        loop {
            let mut x = BinaryMatrix::zeros(n, 1);
            for &i in &idx {
                x.set(i, 0, true);
            }
            if code.g0().mul(&x).unwrap().is_zero() {
                let y = code.g1().mul(&x).unwrap();
                let bits = (0..code.k()).filter(|&r| y.get(r, 0)).fold(0u64, |a, r| a | 1 << r);
                if bits != 0 {
                    *counts.entry(bits).or_default() += 1;
                }
            }
            // next combination
            let mut p = w;
            while p > 0 && idx[p - 1] == n - w + p - 1 {
                p -= 1;
            }
            if p == 0 {
                break;
            }
            idx[p - 1] += 1;
            for q in p..w {
                idx[q] = idx[q - 1] + 1;
            }
        }
        counts
    }

    #[test]
    fn bh2_has_single_pattern() {
        let e = eta(&ProtocolCode::bh(2).unwrap());
        assert_eq!(e.order, 2);
        assert_eq!(e.counts, BTreeMap::from([(0b11, 7)]));
    }

    #[test]
    fn bh_closed_form() {
        for k in [6usize, 10] {
            let e = eta(&ProtocolCode::bh(k).unwrap());
            let all = (1u64 << k) - 1;
            for (&y, &c) in &e.counts {
                match y.count_ones() as usize {
                    2 => assert_eq!(c, 3),
                    w if w == k => assert_eq!((y, c), (all, 4)),
                    w => panic!("unexpected output weight {w}"),
                }
            }
            assert_eq!(e.counts.len(), k * (k - 1) / 2 + 1);
            assert_eq!(e.weighted_total(), (k * (3 * k + 1)) as u64);
        }
    }

    #[test]
    fn matches_brute_force() {
        for code in [ProtocolCode::bh(2).unwrap(), ProtocolCode::bh(6).unwrap(), ProtocolCode::toffoli()] {
            assert_eq!(eta(&code).counts, brute_eta(&code, 2));
        }
        let rm = ProtocolCode::rm15();
        assert!(brute_eta(&rm, 2).is_empty());
        assert_eq!(eta(&rm).counts, brute_eta(&rm, 3));
    }

    #[test]
    fn toffoli_and_rm_totals() {
        let t = eta(&ProtocolCode::toffoli());
        assert_eq!(t.counts.len(), 7);
        assert!(t.counts.values().all(|&c| c == 4));
        let rm = eta(&ProtocolCode::rm15());
        assert_eq!((rm.order, rm.total()), (3, 35));
    }

    #[test]
    fn eta_power_sums() {
        let t = eta(&ProtocolCode::toffoli());
        assert_eq!(sum_eta_power(&t, 2), BigUint::from(7u32 * 16));
        let b = eta(&ProtocolCode::bh(10).unwrap());
        assert_eq!(sum_eta_power(&b, 1), BigUint::from(139u32));
        assert_eq!(sum_eta_power(&b, 2), BigUint::from(421u32));
        assert_eq!(sum_eta_power(&b, 4), BigUint::from(3901u32));
    }
}
