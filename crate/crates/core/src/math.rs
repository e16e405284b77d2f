//! Small numeric helpers shared across modules.

use rand::Rng;

/// `ln C(n, w)`.
pub fn ln_choose(n: usize, w: usize) -> f64 {
    if w > n {
        return f64::NEG_INFINITY;
    }
    let w = w.min(n - w);
    (0..w).map(|i| ((n - i) as f64 / (i + 1) as f64).ln()).sum()
}

/// Alias kept for readability at call sites counting enumerated inputs.
pub fn ln_binomial_term(n: usize, w: usize) -> f64 {
    ln_choose(n, w)
}

/// Binomial probability mass `C(n, w) p^w (1-p)^(n-w)`.
pub fn binomial_pmf(n: usize, w: usize, p: f64) -> f64 {
    if p == 0.0 {
        return if w == 0 { 1.0 } else { 0.0 };
    }
    if p == 1.0 {
        return if w == n { 1.0 } else { 0.0 };
    }
    (ln_choose(n, w) + w as f64 * p.ln() + (n - w) as f64 * (-p).ln_1p()).exp()
}

/// `P(W >= from)` for `W ~ Binomial(n, p)`, summed term by term so small
/// tails keep full relative precision.
pub fn binomial_tail(n: usize, p: f64, from: usize) -> f64 {
    if from == 0 {
        return 1.0;
    }
    if from > n {
        return 0.0;
    }
    if p > 0.5 {
        return 1.0 - (0..from).map(|w| binomial_pmf(n, w, p)).sum::<f64>();
    }
    let mut sum = 0.0;
    for w in from..=n {
        let t = binomial_pmf(n, w, p);
        sum += t;
        if t < sum * 1e-18 && (w as f64) > n as f64 * p {
            break;
        }
    }
    sum
}

/// Inverse-CDF sampler for `Binomial(n, p)` conditioned on `W >= min`.
#[derive(Clone, Debug)]
pub struct ConditionalBinomial {
    min: usize,
    cdf: Vec<f64>,
}

impl ConditionalBinomial {
    pub fn new(n: usize, p: f64, min: usize) -> Option<Self> {
        if min > n || p <= 0.0 {
            return None;
        }
        let mut cdf = Vec::with_capacity(n + 1 - min);
        let mut acc = 0.0;
        for w in min..=n {
            acc += binomial_pmf(n, w, p);
            cdf.push(acc);
        }
        if acc <= 0.0 || !acc.is_finite() {
            return None;
        }
        for c in &mut cdf {
            *c /= acc;
        }
        Some(Self { min, cdf })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let i = self.cdf.partition_point(|&c| c <= u);
        self.min + i.min(self.cdf.len() - 1)
    }
}

/// Rounds `x` to `sig` significant figures.
pub fn round_sig(x: f64, sig: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let mag = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(sig - 1 - mag);
    (x * scale).round() / scale
}
