//! Distillation blocks described by a pair of binary matrices.
//!
//! A block with matrices `G0` (checks) and `G1` (outputs) on `n` noisy
//! inputs accepts the Z-error pattern `x` iff `G0 x = 0`, and then leaves the
//! output error `y = G1 x` on its `k` outputs. Output bit `r` of `y` lives in
//! bit `r` of a `u64`, so `k` is limited to 64 in the bit-level routines.

mod distribution;
mod eta;
mod spectrum;

pub use distribution::{block_distribution, DistributionOptions, OutputDistribution, DEFAULT_WEIGHT_CUTOFF};
pub use eta::{eta, sum_eta_power, EtaFunction};
pub use spectrum::{
    bh_span_distribution, coset_spectrum, weight_enumerator_undetected, BlockSpectra, EnumeratorEstimate, WeightSpectrum,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::{solve_linear, BinaryMatrix, Side};

/// Which kind of magic state a block consumes or produces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Species {
    T,
    Toffoli,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProtocolKind {
    /// The `3k+8 -> k` triorthogonal family (k even).
    Bh { k: usize },
    /// The 15-to-1 protocol from the punctured Reed-Muller code.
    Rm15,
    /// 8 T states to one Toffoli state.
    Toffoli,
}

impl ProtocolKind {
    /// Magic states produced per block, counting a Toffoli state as one.
    pub fn units_out(&self) -> usize {
        match *self {
            ProtocolKind::Bh { k } => k,
            ProtocolKind::Rm15 | ProtocolKind::Toffoli => 1,
        }
    }

    /// Magic states consumed per block.
    pub fn units_in(&self) -> usize {
        match *self {
            ProtocolKind::Bh { k } => 3 * k + 8,
            ProtocolKind::Rm15 => 15,
            ProtocolKind::Toffoli => 8,
        }
    }

    /// Species this block produces when fed `input`.
    pub fn output_species(&self, input: Species) -> Result<Species> {
        match (self, input) {
            (ProtocolKind::Toffoli, Species::T) => Ok(Species::Toffoli),
            (ProtocolKind::Toffoli, Species::Toffoli) => {
                Err(Error::InvalidConfig("the Toffoli block consumes T states".into()))
            }
            (_, s) => Ok(s),
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProtocolKind::Bh { k } => write!(f, "bh:{k}"),
            ProtocolKind::Rm15 => write!(f, "rm"),
            ProtocolKind::Toffoli => write!(f, "tof"),
        }
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (name, arg) = match s.split_once(':') {
            Some((a, b)) => (a.to_string(), Some(b.to_string())),
            None => (s.clone(), None),
        };
        match (name.as_str(), arg) {
            ("bh", Some(k)) => {
                let k: usize = k.parse().map_err(|_| Error::InvalidConfig(format!("bad k in {s:?}")))?;
                Ok(ProtocolKind::Bh { k })
            }
            ("bh", None) => Err(Error::InvalidConfig("bh needs a size, e.g. bh:10".into())),
            ("rm" | "rm15", None) => Ok(ProtocolKind::Rm15),
            ("tof" | "toffoli", None) => Ok(ProtocolKind::Toffoli),
            _ => Err(Error::InvalidConfig(format!("unknown protocol {s:?}"))),
        }
    }
}

/// A block protocol: check matrix `G0` and output matrix `G1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtocolCode {
    kind: Option<ProtocolKind>,
    g0: BinaryMatrix,
    g1: BinaryMatrix,
    g0_cols: Vec<u64>,
    g1_cols: Vec<u64>,
}

impl ProtocolCode {
    /// Wraps user-supplied matrices after checking they describe a usable block.
    pub fn from_matrices(g0: BinaryMatrix, g1: BinaryMatrix) -> Result<Self> {
        Self::build(None, g0, g1)
    }

    fn build(kind: Option<ProtocolKind>, g0: BinaryMatrix, g1: BinaryMatrix) -> Result<Self> {
        if g0.cols() != g1.cols() {
            return Err(Error::InvalidCode(format!(
                "G0 has {} columns but G1 has {}",
                g0.cols(),
                g1.cols()
            )));
        }
        if g1.rows() == 0 {
            return Err(Error::InvalidCode("G1 has no rows".into()));
        }
        if g0.rows() > 64 || g1.rows() > 64 {
            return Err(Error::InvalidCode("at most 64 check rows and 64 outputs are supported".into()));
        }
        let g = g0.vstack(&g1)?;
        if g.rank() != g.rows() {
            return Err(Error::InvalidCode("rows of G0 and G1 are not linearly independent".into()));
        }
        let g0_cols = column_masks(&g0);
        let g1_cols = column_masks(&g1);
        Ok(Self { kind, g0, g1, g0_cols, g1_cols })
    }

    pub fn from_kind(kind: ProtocolKind) -> Result<Self> {
        match kind {
            ProtocolKind::Bh { k } => Self::bh(k),
            ProtocolKind::Rm15 => Ok(Self::rm15()),
            ProtocolKind::Toffoli => Ok(Self::toffoli()),
        }
    }

    /// The `3k+8 -> k` block, split out of the dual of [`bh_g_perp`].
    pub fn bh(k: usize) -> Result<Self> {
        let parts = bh_parts(k)?;
        Self::build(Some(ProtocolKind::Bh { k }), parts.g0, parts.g1)
    }

    pub fn rm15() -> Self {
        let g0: BinaryMatrix = "111111110000000\n111100001111000\n110011001100110\n101010101010101"
            .parse()
            .expect("literal");
        let g1: BinaryMatrix = "111111111111111".parse().expect("literal");
        Self::build(Some(ProtocolKind::Rm15), g0, g1).expect("valid literal code")
    }

    pub fn toffoli() -> Self {
        let g0: BinaryMatrix = "11111111".parse().expect("literal");
        let g1: BinaryMatrix = "11110000\n11001100\n10101010".parse().expect("literal");
        Self::build(Some(ProtocolKind::Toffoli), g0, g1).expect("valid literal code")
    }

    pub fn kind(&self) -> Option<ProtocolKind> {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.g0.cols()
    }

    /// Output qubits per block (3 for the Toffoli block).
    pub fn k(&self) -> usize {
        self.g1.rows()
    }

    pub fn g0(&self) -> &BinaryMatrix {
        &self.g0
    }

    pub fn g1(&self) -> &BinaryMatrix {
        &self.g1
    }

    /// `G0` stacked over `G1`.
    pub fn g(&self) -> BinaryMatrix {
        self.g0.vstack(&self.g1).expect("same width")
    }

    /// Column `i` of `G0` as a bit mask over check rows.
    pub fn g0_col(&self, i: usize) -> u64 {
        self.g0_cols[i]
    }

    /// Column `i` of `G1` as a bit mask over outputs.
    pub fn g1_col(&self, i: usize) -> u64 {
        self.g1_cols[i]
    }

    pub fn g0_cols(&self) -> &[u64] {
        &self.g0_cols
    }

    pub fn g1_cols(&self) -> &[u64] {
        &self.g1_cols
    }

    /// Check syndrome and output error for an error given by its positions.
    pub fn apply(&self, positions: &[usize]) -> (u64, u64) {
        positions.iter().fold((0, 0), |(s, y), &i| (s ^ self.g0_cols[i], y ^ self.g1_cols[i]))
    }

    /// True if every row pair and triple of `G` has even overlap, except that
    /// `G1` rows may have odd weight.
    pub fn is_triorthogonal(&self) -> bool {
        let g = self.g();
        let rows: Vec<BinaryMatrix> = (0..g.rows()).map(|r| g.row(r)).collect();
        let and = |a: &BinaryMatrix, b: &BinaryMatrix| -> BinaryMatrix {
            let mut out = BinaryMatrix::zeros(1, a.cols());
            for c in 0..a.cols() {
                out.set(0, c, a.get(0, c) && b.get(0, c));
            }
            out
        };
        let r0 = self.g0.rows();
        for (i, ri) in rows.iter().enumerate() {
            if i < r0 && ri.row_weight(0) % 2 != 0 {
                return false;
            }
            for (j, rj) in rows.iter().enumerate().skip(i + 1) {
                let ij = and(ri, rj);
                if ij.row_weight(0) % 2 != 0 {
                    return false;
                }
                for rk in rows.iter().skip(j + 1) {
                    if and(&ij, rk).row_weight(0) % 2 != 0 {
                        return false;
                    }
                }
            }
        }
        true
    }
}

fn column_masks(m: &BinaryMatrix) -> Vec<u64> {
    (0..m.cols())
        .map(|c| (0..m.rows()).filter(|&r| m.get(r, c)).fold(0u64, |acc, r| acc | (1u64 << r)))
        .collect()
}

/// Output positions (0-based) of the `3k+8` layout: columns `5 + 3j`.
pub fn bh_output_columns(k: usize) -> Vec<usize> {
    (1..=k).map(|j| 5 + 3 * j).collect()
}

/// Stabilizer generator matrix of the `3k+8` layout, `(2k+5) x (3k+8)`.
///
/// Six fixed weight-4 rows on the first 14 qubits; two weight-4 rows per
/// additional output repeating with period 3; one long row that ties the
/// output columns together.
pub fn bh_g_perp(k: usize) -> Result<BinaryMatrix> {
    if k < 2 || k % 2 != 0 {
        return Err(Error::InvalidCode(format!("the 3k+8 family needs even k >= 2, got {k}")));
    }
    let n = 3 * k + 8;
    // 1-based supports, shifted to 0-based below.
    let mut rows: Vec<Vec<usize>> = vec![
        vec![1, 4, 6, 7],
        vec![2, 4, 5, 7],
        vec![3, 4, 5, 6],
        vec![5, 8, 9, 10],
        vec![6, 8, 9, 11],
        vec![7, 8, 10, 11],
    ];
    for c in 1..k {
        let a = 6 + 3 * c;
        rows.push(vec![a, a + 1, a + 3, a + 4]);
        rows.push(vec![a + 1, a + 2, a + 4, a + 5]);
    }
    let mut last = vec![3, 7];
    last.extend((1..=k).map(|c| 6 + 3 * c));
    rows.push(last);
    let rows: Vec<Vec<usize>> = rows.into_iter().map(|r| r.into_iter().map(|i| i - 1).collect()).collect();
    Ok(BinaryMatrix::from_supports(n, &rows))
}

pub(crate) struct BhParts {
    pub g_perp: BinaryMatrix,
    pub g0: BinaryMatrix,
    pub g1: BinaryMatrix,
    /// Indicator rows `e_1 + e_2 + e_{out_j}`.
    pub w: BinaryMatrix,
    /// `Q G_perp = G1 + W`.
    pub q: BinaryMatrix,
}

pub(crate) fn bh_parts(k: usize) -> Result<BhParts> {
    let g_perp = bh_g_perp(k)?;
    let n = g_perp.cols();
    let dual = g_perp.nullspace();
    // span(G_perp) ∩ span(dual): annihilator of the stacked annihilators.
    let stacked = dual.nullspace().vstack(&dual)?;
    let g0 = stacked.nullspace().row_basis();
    let out = bh_output_columns(k);
    let mut w = BinaryMatrix::zeros(k, n);
    for (j, &o) in out.iter().enumerate() {
        w.set(j, 0, true);
        w.set(j, 1, true);
        w.set(j, o, true);
    }
    // Find c with G_perp (w + c G_perp)^T = 0, i.e. (G_perp G_perp^T) c^T = G_perp w^T.
    let gram = g_perp.mul(&g_perp.transpose())?;
    let rhs = g_perp.mul(&w.transpose())?;
    let q = solve_linear(&gram, &rhs, Side::Right)
        .map_err(|_| Error::InvalidCode(format!("no output representatives for k = {k}")))?
        .transpose();
    let g1 = w.add(&q.mul(&g_perp)?)?;
    Ok(BhParts { g_perp, g0, g1, w, q })
}

#[cfg(test)]
mod tests {
    use super::*;

    const GPERP_K2: &str = "\
10010110000000
01011010000000
00111100000000
00001001110000
00000101101000
00000011011000
00000000110110
00000000011011
00100010100100
";

    #[test]
    fn g_perp_k2_matches_layout() {
        assert_eq!(bh_g_perp(2).unwrap(), GPERP_K2.parse().unwrap());
    }

    #[test]
    fn bh_dimensions() {
        for k in [2, 6, 10, 14, 50] {
            let code = ProtocolCode::bh(k).unwrap();
            assert_eq!(code.n(), 3 * k + 8);
            assert_eq!(code.k(), k);
            assert_eq!(code.g0().rows(), 3);
            assert_eq!(bh_g_perp(k).unwrap().rank(), 2 * k + 5);
        }
    }

    #[test]
    fn bh_is_triorthogonal_and_dual_to_g_perp() {
        for k in [2, 6, 10] {
            let code = ProtocolCode::bh(k).unwrap();
            assert!(code.is_triorthogonal(), "k = {k}");
            let gp = bh_g_perp(k).unwrap();
            assert!(code.g().mul(&gp.transpose()).unwrap().is_zero());
            assert!(gp.span_contains(code.g0()));
        }
    }

    #[test]
    fn odd_k_rejected() {
        assert!(matches!(ProtocolCode::bh(3), Err(Error::InvalidCode(_))));
        assert!(matches!(ProtocolCode::bh(0), Err(Error::InvalidCode(_))));
    }

    #[test]
    fn small_codes_are_triorthogonal() {
        assert!(ProtocolCode::rm15().is_triorthogonal());
        assert!(ProtocolCode::toffoli().g0().rank() == 1);
    }

    #[test]
    fn dependent_rows_rejected() {
        let g0: BinaryMatrix = "1100\n0011".parse().unwrap();
        let g1: BinaryMatrix = "1111".parse().unwrap();
        assert!(matches!(ProtocolCode::from_matrices(g0, g1), Err(Error::InvalidCode(_))));
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("bh:10".parse::<ProtocolKind>().unwrap(), ProtocolKind::Bh { k: 10 });
        assert_eq!("RM".parse::<ProtocolKind>().unwrap(), ProtocolKind::Rm15);
        assert_eq!("tof".parse::<ProtocolKind>().unwrap(), ProtocolKind::Toffoli);
        assert!("bh".parse::<ProtocolKind>().is_err());
        assert_eq!(ProtocolKind::Bh { k: 6 }.to_string(), "bh:6");
    }

    #[test]
    fn apply_matches_matrix_product() {
        let code = ProtocolCode::bh(6).unwrap();
        let pos = [0usize, 7, 19];
        let mut x = BinaryMatrix::zeros(1, code.n());
        for &p in &pos {
            x.set(0, p, true);
        }
        let s = code.g0().mul(&x.transpose()).unwrap();
        let y = code.g1().mul(&x.transpose()).unwrap();
        let (sm, ym) = code.apply(&pos);
        for r in 0..code.g0().rows() {
            assert_eq!(s.get(r, 0), sm >> r & 1 == 1);
        }
        for r in 0..code.k() {
            assert_eq!(y.get(r, 0), ym >> r & 1 == 1);
        }
    }
}
