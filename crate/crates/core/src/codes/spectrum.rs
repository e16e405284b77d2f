//! Exact error probabilities from weight distributions.
//!
//! The number of inputs `x` of weight `w` with `H x = s` follows from the
//! weight distribution of the row span of `H` through Krawtchouk
//! polynomials. Working with these exact integer counts keeps every
//! probability a sum of positive terms, so tiny error rates are evaluated
//! without cancellation.

use num_bigint::{BigInt, Sign};
use num_traits::{ToPrimitive, Zero};

use super::distribution::prob_of_weight;
use super::{ProtocolCode, ProtocolKind};
use crate::error::{Error, Result};
use crate::gf2::BinaryMatrix;

/// Number of inputs of each weight `0..=n` in some set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightSpectrum {
    pub n: usize,
    pub counts: Vec<BigInt>,
}

impl WeightSpectrum {
    /// Probability of the set under i.i.d. flips with probability `eps`.
    pub fn probability(&self, eps: f64) -> f64 {
        if eps == 0.0 {
            return self.counts[0].to_f64().unwrap_or(0.0);
        }
        let (le, l1) = (eps.ln(), (-eps).ln_1p());
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(w, c)| {
                let (sign, mag) = (c.sign(), c.magnitude());
                let v = (biguint_ln(mag) + w as f64 * le + (self.n - w) as f64 * l1).exp();
                if sign == Sign::Minus { -v } else { v }
            })
            .sum()
    }

    /// Probability restricted to a single weight.
    pub fn term(&self, w: usize, eps: f64) -> f64 {
        self.counts[w].to_f64().unwrap_or(f64::INFINITY) * prob_of_weight(self.n, w, eps)
    }

    pub fn sub(&self, other: &WeightSpectrum) -> WeightSpectrum {
        assert_eq!(self.n, other.n);
        let counts = self.counts.iter().zip(&other.counts).map(|(a, b)| a - b).collect();
        WeightSpectrum { n: self.n, counts }
    }

    pub fn add(&self, other: &WeightSpectrum) -> WeightSpectrum {
        assert_eq!(self.n, other.n);
        let counts = self.counts.iter().zip(&other.counts).map(|(a, b)| a + b).collect();
        WeightSpectrum { n: self.n, counts }
    }

    /// Lowest weight with a nonzero count.
    pub fn min_weight(&self) -> Option<usize> {
        self.counts.iter().position(|c| !c.is_zero())
    }
}

fn biguint_ln(x: &num_bigint::BigUint) -> f64 {
    match x.to_f64() {
        Some(v) if v.is_finite() => v.ln(),
        _ => {
            let bits = x.bits();
            let shift = bits.saturating_sub(60);
            let top = (x >> shift).to_f64().unwrap_or(1.0);
            top.ln() + shift as f64 * std::f64::consts::LN_2
        }
    }
}

/// Turns signed counts of span elements by weight into counts of the
/// matching coset of the dual: `2^-r sum_i c_i K_w(i)` for every `w`.
fn macwilliams(n: usize, coeffs: &[BigInt], r: usize) -> WeightSpectrum {
    // sum_i c_i (1 - z)^i (1 + z)^(n - i), evaluated by Horner in (1 - z).
    let mut vpow: Vec<Vec<BigInt>> = Vec::with_capacity(n + 1);
    vpow.push(vec![BigInt::from(1)]);
    for m in 1..=n {
        let prev = &vpow[m - 1];
        let mut next = vec![BigInt::zero(); m + 1];
        for (j, c) in prev.iter().enumerate() {
            next[j] += c;
            next[j + 1] += c;
        }
        vpow.push(next);
    }
    let mut acc: Vec<BigInt> = vec![BigInt::zero(); n + 1];
    for i in (0..=n).rev() {
        // acc <- acc * (1 - z)
        for j in (1..=n).rev() {
            let prev = acc[j - 1].clone();
            acc[j] -= prev;
        }
        if !coeffs[i].is_zero() {
            for (j, v) in vpow[n - i].iter().enumerate() {
                acc[j] += &coeffs[i] * v;
            }
        }
    }
    let counts = acc
        .into_iter()
        .map(|c| {
            let q: BigInt = &c >> r;
            debug_assert_eq!(&q << r, c, "counts must be divisible by 2^r");
            q
        })
        .collect();
    WeightSpectrum { n, counts }
}

/// Weight distribution of `{x : H x = s}`; `H` must have independent rows.
pub fn coset_spectrum(h: &BinaryMatrix, s: u64) -> Result<WeightSpectrum> {
    let r = h.rows();
    if r > 26 {
        return Err(Error::TooLarge(format!("span of {r} generators")));
    }
    let n = h.cols();
    let mut coeffs = vec![BigInt::zero(); n + 1];
    let rows: Vec<Vec<u64>> = (0..r).map(|i| h.row_words(i).to_vec()).collect();
    let mut cur = vec![0u64; rows.first().map_or(1, |x| x.len())];
    let mut gray = 0u64;
    for step in 0u64..1 << r {
        if step > 0 {
            let bit = step.trailing_zeros() as usize;
            gray ^= 1 << bit;
            for (c, w) in cur.iter_mut().zip(&rows[bit]) {
                *c ^= *w;
            }
        }
        let weight: usize = cur.iter().map(|w| w.count_ones() as usize).sum();
        if (gray & s).count_ones() % 2 == 0 {
            coeffs[weight] += 1;
        } else {
            coeffs[weight] -= 1;
        }
    }
    Ok(macwilliams(n, &coeffs, r))
}

/// Weight distribution of the row span of `G` for the `3k+8` block.
///
/// Grouping span elements by how many output rows they contain (`m`) and by
/// their check component gives four binomial families:
/// `2 C(k,m)` at weight `3m+4` for odd `m`, `C(k,2m)` at `6m` and at `6m+8`,
/// and `6 C(k,m)` at `2k-m+4`.
pub fn bh_span_distribution(k: usize) -> Vec<u64> {
    let n = 3 * k + 8;
    let mut a = vec![0u64; n + 1];
    // Exact Pascal row; the total is 2^(k+3) so u64 holds it for k <= 60.
    let mut row = vec![0u64; k + 1];
    row[0] = 1;
    for i in 0..k {
        for j in (1..=i + 1).rev() {
            row[j] += row[j - 1];
        }
    }
    let choose = |m: usize| row[m];
    for m in (1..=k).step_by(2) {
        a[3 * m + 4] += 2 * choose(m);
    }
    for m in 0..=k / 2 {
        a[6 * m] += choose(2 * m);
        a[6 * m + 8] += choose(2 * m);
    }
    for m in 0..=k {
        a[2 * k - m + 4] += 6 * choose(m);
    }
    a
}

/// Undetected-error statistics of one `3k+8` block, evaluated directly from
/// the weight enumerators of the check span and the full span.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnumeratorEstimate {
    pub p_success: f64,
    /// Probability of passing with a nonzero output error.
    pub p_undetected: f64,
    /// `p_undetected / p_success`.
    pub global_error: f64,
}

/// Evaluates `2^-3 W0(1-2eps) - 2^-(k+3) W(1-2eps)` term by term.
///
/// Accurate to roughly `1e-16 / eps^2` relative error; [`BlockSpectra`]
/// gives the same quantity without cancellation.
pub fn weight_enumerator_undetected(k: usize, eps: f64) -> Result<EnumeratorEstimate> {
    if k < 2 || k % 2 != 0 {
        return Err(Error::InvalidCode(format!("the 3k+8 family needs even k >= 2, got {k}")));
    }
    let x = 1.0 - 2.0 * eps;
    let a = bh_span_distribution(k);
    let w: f64 = a.iter().enumerate().filter(|(_, &c)| c > 0).map(|(i, &c)| c as f64 * x.powi(i as i32)).sum();
    let w0 = 1.0 + x.powi(8) + 6.0 * x.powi(2 * k as i32 + 4);
    let p_success = w0 / 8.0;
    let p_clean = w / 2f64.powi(k as i32 + 3);
    let p_undetected = p_success - p_clean;
    Ok(EnumeratorEstimate { p_success, p_undetected, global_error: p_undetected / p_success })
}

/// Exact per-weight input counts for one block.
#[derive(Clone, Debug)]
pub struct BlockSpectra {
    pub n: usize,
    pub k: usize,
    /// Inputs passing the checks.
    pub accept: WeightSpectrum,
    /// Inputs passing the checks with a nonzero output error.
    pub undetected: WeightSpectrum,
    /// Sum over outputs `q` of the inputs passing with output `q` wrong.
    pub marginal_sum: WeightSpectrum,
}

impl BlockSpectra {
    pub fn new(code: &ProtocolCode) -> Result<Self> {
        let (n, k) = (code.n(), code.k());
        let g0 = code.g0();
        let accept = coset_spectrum(g0, 0)?;
        let clean = match code.kind() {
            Some(ProtocolKind::Bh { k }) => {
                let a: Vec<BigInt> = bh_span_distribution(k).into_iter().map(BigInt::from).collect();
                macwilliams(n, &a, k + 3)
            }
            _ => coset_spectrum(&code.g(), 0)?,
        };
        let undetected = accept.sub(&clean);
        let flag = 1u64 << g0.rows();
        let mut marginal_sum = WeightSpectrum { n, counts: vec![BigInt::zero(); n + 1] };
        for q in 0..k {
            let h = g0.vstack(&code.g1().row(q))?;
            marginal_sum = marginal_sum.add(&coset_spectrum(&h, flag)?);
        }
        Ok(Self { n, k, accept, undetected, marginal_sum })
    }

    pub fn p_success(&self, eps: f64) -> f64 {
        self.accept.probability(eps)
    }

    /// Probability of any output error given success.
    pub fn global_error(&self, eps: f64) -> f64 {
        self.undetected.probability(eps) / self.p_success(eps)
    }

    /// Average probability that one output is wrong given success.
    pub fn mean_marginal(&self, eps: f64) -> f64 {
        self.marginal_sum.probability(eps) / (self.k as f64 * self.p_success(eps))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::block_distribution;
    use approx::assert_relative_eq;

    #[test]
    fn span_distribution_is_exact_for_large_k() {
        let a = bh_span_distribution(50);
        assert_eq!(a.iter().sum::<u64>(), 1u64 << 53);
        // Weight 79 collects m = 25 from both the odd-m and the check families.
        assert_eq!(a[79], 8 * 126_410_606_437_752);
    }

    #[test]
    fn span_distribution_k2() {
        let a = bh_span_distribution(2);
        let mut expect = vec![0u64; 15];
        expect[0] = 1;
        expect[6] = 7;
        expect[7] = 16;
        expect[8] = 7;
        expect[14] = 1;
        assert_eq!(a, expect);
    }

    #[test]
    fn span_distribution_matches_enumeration() {
        for k in [2usize, 6, 10] {
            let code = ProtocolCode::bh(k).unwrap();
            let mut counted = vec![0u64; code.n() + 1];
            for v in code.g().span_elements() {
                counted[v.row_weight(0)] += 1;
            }
            assert_eq!(bh_span_distribution(k), counted, "k = {k}");
        }
    }

    #[test]
    fn coset_spectrum_counts_solutions() {
        let code = ProtocolCode::bh(2).unwrap();
        let s = coset_spectrum(code.g0(), 0).unwrap();
        let total: BigInt = s.counts.iter().sum();
        assert_eq!(total, BigInt::from(1 << 11));
        assert_eq!(s.counts[1], BigInt::zero());
        assert_eq!(s.min_weight(), Some(0));
    }

    #[test]
    fn four_sum_form_matches_exhaustive() {
        for (k, eps) in [(2usize, 0.01), (6, 0.01), (2, 0.1)] {
            let code = ProtocolCode::bh(k).unwrap();
            let d = block_distribution(&code, eps, Default::default()).unwrap();
            let w = weight_enumerator_undetected(k, eps).unwrap();
            assert!((w.p_success - d.p_success).abs() < 1e-12);
            assert!((w.p_undetected - d.global_error() * d.p_success).abs() < 1e-12);
        }
    }

    #[test]
    fn spectra_match_exhaustive() {
        for code in [ProtocolCode::bh(2).unwrap(), ProtocolCode::bh(6).unwrap(), ProtocolCode::toffoli(), ProtocolCode::rm15()] {
            let sp = BlockSpectra::new(&code).unwrap();
            for eps in [1e-4, 1e-2, 0.05] {
                let d = block_distribution(&code, eps, Default::default()).unwrap();
                assert_relative_eq!(sp.p_success(eps), d.p_success, max_relative = 1e-12);
                assert_relative_eq!(sp.global_error(eps), d.global_error(), max_relative = 1e-9);
                assert_relative_eq!(sp.mean_marginal(eps), d.mean_marginal(), max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn spectra_tiny_noise_leading_order() {
        let sp = BlockSpectra::new(&ProtocolCode::bh(10).unwrap()).unwrap();
        let eps = 1e-9;
        assert_relative_eq!(sp.global_error(eps), 139.0 * eps * eps, max_relative = 1e-6);
        assert_relative_eq!(sp.mean_marginal(eps), 31.0 * eps * eps, max_relative = 1e-6);
        let rm = BlockSpectra::new(&ProtocolCode::rm15()).unwrap();
        assert_relative_eq!(rm.global_error(1e-6), 35.0 * 1e-18, max_relative = 1e-4);
    }
}
