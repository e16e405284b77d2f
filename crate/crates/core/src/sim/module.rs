use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Branch;
use crate::codes::{ProtocolCode, ProtocolKind};

/// How input branches are spread over the blocks of a module.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShufflePolicy {
    /// Position `t` of every input goes to block `t`.
    #[default]
    Canonical,
    /// Each input is permuted independently before interleaving.
    Random,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModuleOutcome {
    pub passed: bool,
    /// Output error positions; empty when the module failed.
    pub output: Branch,
    /// Inputs carrying at least one error.
    pub corrupt_inputs: usize,
    /// True when the corrupt inputs hit different sets of blocks.
    pub distinct_patterns: bool,
}

/// For every input, the blocks its errors land in.
pub fn firewall_shuffle<R: Rng>(inputs: &[Branch], width: usize, policy: ShufflePolicy, rng: &mut R) -> Vec<Vec<u32>> {
    inputs
        .iter()
        .map(|b| match policy {
            ShufflePolicy::Canonical => b.clone(),
            ShufflePolicy::Random => {
                // Only the images of the error positions matter, and for a
                // uniform permutation those are a uniform ordered sample.
                let mut img: Vec<u32> = sample(rng, width, b.len()).iter().map(|t| t as u32).collect();
                img.sort_unstable();
                img
            }
        })
        .collect()
}

/// Runs one module of `width` blocks of `code`. Input `i` is branch `i`;
/// block `t` reads position `t` of every input.
pub fn run_module<R: Rng>(
    code: &ProtocolCode,
    inputs: &[Branch],
    width: usize,
    policy: ShufflePolicy,
    rng: &mut R,
) -> ModuleOutcome {
    debug_assert_eq!(inputs.len(), code.n());
    let mapped = firewall_shuffle(inputs, width, policy, rng);
    let corrupt: Vec<&Vec<u32>> = mapped.iter().filter(|b| !b.is_empty()).collect();
    let distinct_patterns = corrupt.windows(2).any(|w| w[0] != w[1]);

    let mut hits: Vec<(u32, usize)> =
        mapped.iter().enumerate().flat_map(|(i, b)| b.iter().map(move |&t| (t, i))).collect();
    hits.sort_unstable();

    let collapse = matches!(code.kind(), Some(ProtocolKind::Toffoli));
    let mut output = Vec::new();
    let mut passed = true;
    for group in hits.chunk_by(|a, b| a.0 == b.0) {
        let t = group[0].0;
        let (syn, y) = group.iter().fold((0u64, 0u64), |(s, o), &(_, i)| (s ^ code.g0_col(i), o ^ code.g1_col(i)));
        if syn != 0 {
            passed = false;
            output.clear();
            break;
        }
        if y == 0 {
            continue;
        }
        if collapse {
            // A Toffoli state is one unit for the rounds after it.
            output.push(t);
        } else {
            output.extend((0..code.k() as u32).filter(|r| y >> r & 1 == 1).map(|r| r * width as u32 + t));
        }
    }
    output.sort_unstable();
    ModuleOutcome { passed, output, corrupt_inputs: corrupt.len(), distinct_patterns }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0)
    }

    #[test]
    fn clean_inputs_pass() {
        let code = ProtocolCode::bh(2).unwrap();
        let inputs = vec![Vec::new(); 14];
        let o = run_module(&code, &inputs, 4, ShufflePolicy::Canonical, &mut rng());
        assert!(o.passed && o.output.is_empty());
    }

    #[test]
    fn matching_pair_on_undetected_columns_corrupts_outputs() {
        let code = ProtocolCode::bh(2).unwrap();
        // Find a weight-2 undetected error of the block.
        let (a, b) = (0..14)
            .flat_map(|a| (a + 1..14).map(move |b| (a, b)))
            .find(|&(a, b)| code.g0_col(a) == code.g0_col(b) && code.g1_col(a) != code.g1_col(b))
            .unwrap();
        let y = code.g1_col(a) ^ code.g1_col(b);
        let mut inputs = vec![Vec::new(); 14];
        inputs[a] = vec![3];
        inputs[b] = vec![3];
        let o = run_module(&code, &inputs, 5, ShufflePolicy::Canonical, &mut rng());
        assert!(o.passed);
        let expect: Vec<u32> = (0..2).filter(|r| y >> r & 1 == 1).map(|r| r * 5 + 3).collect();
        assert_eq!(o.output, expect);
    }

    #[test]
    fn toffoli_outputs_collapse_to_one_unit() {
        let code = ProtocolCode::toffoli();
        let mut inputs = vec![Vec::new(); 8];
        inputs[0] = vec![2];
        inputs[1] = vec![2];
        let o = run_module(&code, &inputs, 6, ShufflePolicy::Canonical, &mut rng());
        assert!(o.passed);
        assert_eq!(o.output, vec![2]);
    }

    proptest! {
        // Two corrupt inputs with different patterns always leave some block
        // with a single error, which every column of the checks detects.
        #[test]
        fn two_distinct_patterns_are_caught(
            k in prop::sample::select(vec![2usize, 6, 10]),
            width in 2usize..12,
            seed in any::<u64>(),
        ) {
            let code = ProtocolCode::bh(k).unwrap();
            let n = code.n();
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            let pick = sample(&mut r, n, 2);
            let mut inputs = vec![Vec::new(); n];
            for i in pick.iter() {
                let w = r.random_range(1..=width);
                let mut b: Vec<u32> = sample(&mut r, width, w).iter().map(|x| x as u32).collect();
                b.sort_unstable();
                inputs[i] = b;
            }
            for policy in [ShufflePolicy::Canonical, ShufflePolicy::Random] {
                let o = run_module(&code, &inputs, width, policy, &mut r);
                prop_assert!(!(o.passed && o.distinct_patterns));
            }
        }

        #[test]
        fn single_corrupt_input_is_detected(width in 1usize..20, seed in any::<u64>()) {
            let code = ProtocolCode::rm15();
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            let mut inputs = vec![Vec::new(); 15];
            inputs[r.random_range(0..15)] = vec![r.random_range(0..width as u32)];
            let o = run_module(&code, &inputs, width, ShufflePolicy::Random, &mut r);
            prop_assert!(!o.passed);
        }
    }
}
