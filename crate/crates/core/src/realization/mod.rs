//! Low-depth realizations of block protocols: sparse stabilizer generators,
//! the measurement plan of the `3k+8` gauge construction, gate schedules and
//! block timing.
//!
//! Qubit indices in [`IndexSets`] and plan listings are 1-based to match the
//! usual layout tables; matrices are 0-based.

mod coloring;

pub use coloring::{color_bipartite, edge_color_schedule, ColoredSchedule, ScheduledEdge};

use serde::{Deserialize, Serialize};

use crate::codes::{bh_g_perp, bh_output_columns, bh_parts, ProtocolCode, ProtocolKind};
use crate::error::{Error, Result};
use crate::gf2::{solve_linear, BinaryMatrix, Side};

/// Sparse dual generators of the 15-to-1 code: row weight at most 4,
/// column weight at most 5.
pub const RM_G_PERP: &str = "\
000011110000000
000000001111000
000000001100110
000000001010101
111100000000000
110011000000000
101010100000000
011000000110000
001010000010100
100010001000100
";

/// Weight-4 generators of the Toffoli block's Z stabilizers.
const TOF_G_PERP: &str = "\
11110000
11001100
10101010
00001111
";

/// Target depth of each measurement stage.
pub fn target_depth(kind: ProtocolKind) -> usize {
    match kind {
        ProtocolKind::Bh { .. } | ProtocolKind::Toffoli => 4,
        ProtocolKind::Rm15 => 5,
    }
}

/// Generators used for the Z-type measurements of a block.
pub fn build_g_perp(kind: ProtocolKind) -> Result<BinaryMatrix> {
    match kind {
        ProtocolKind::Bh { k } => bh_g_perp(k),
        ProtocolKind::Rm15 => Ok(RM_G_PERP.parse()?),
        ProtocolKind::Toffoli => Ok(TOF_G_PERP.parse()?),
    }
}

/// Ancilla wiring and schedules of both measurement stages of one block.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeasurementLayout {
    pub kind: ProtocolKind,
    pub data_qubits: usize,
    /// Data qubits touched by each ancilla in the Z stage. A long row is
    /// split over a cat state, one ancilla qubit per data qubit.
    pub z_wiring: Vec<Vec<usize>>,
    pub z_schedule: ColoredSchedule,
    pub x_schedule: ColoredSchedule,
    /// Extra time steps after the X-stage gates (cat merges that cannot run
    /// concurrently).
    pub x_merge_steps: usize,
    pub ancillas: usize,
}

impl MeasurementLayout {
    pub fn z_depth(&self) -> usize {
        self.z_schedule.depth
    }

    pub fn x_depth(&self) -> usize {
        self.x_schedule.depth + self.x_merge_steps
    }

    /// Entangling-gate steps of one block.
    pub fn gate_steps(&self) -> usize {
        self.z_depth() + self.x_depth()
    }

    /// Logical qubits of one block, data plus ancillas.
    pub fn logical_qubits(&self) -> usize {
        self.data_qubits + self.ancillas
    }
}

/// One ancilla per row, except that rows in `cat_rows` are measured through
/// a cat state with one ancilla qubit per data qubit.
fn wiring(g_perp: &BinaryMatrix, cat_rows: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for r in 0..g_perp.rows() {
        let sup = g_perp.row_support(r);
        if !cat_rows.contains(&r) {
            out.push(sup);
        } else {
            out.extend(sup.into_iter().map(|q| vec![q]));
        }
    }
    out
}

/// Measurement layout for one block kind, failing with `DepthExceeded`
/// when a stage cannot be scheduled in its target depth.
pub fn measurement_layout(kind: ProtocolKind) -> Result<MeasurementLayout> {
    let g_perp = build_g_perp(kind)?;
    let n = g_perp.cols();
    let target = target_depth(kind);
    // The long row of the 3k+8 layout always uses a cat state.
    let cat_rows = match kind {
        ProtocolKind::Bh { .. } => vec![g_perp.rows() - 1],
        _ => Vec::new(),
    };
    let z_wiring = wiring(&g_perp, &cat_rows);
    let z_schedule = edge_color_schedule(&z_wiring, n, target)?;
    let (x_schedule, x_merge_steps) = match kind {
        // The X stage repeats the Z-stage pattern on the same ancillas.
        ProtocolKind::Bh { .. } | ProtocolKind::Rm15 => (z_schedule.clone(), 0),
        // One weight-8 check split over two ancillas, merged afterwards.
        ProtocolKind::Toffoli => {
            let halves = vec![(0..4).collect(), (4..8).collect()];
            (edge_color_schedule(&halves, n, 4)?, 1)
        }
    };
    let ancillas = z_wiring.len();
    Ok(MeasurementLayout { kind, data_qubits: n, z_wiring, z_schedule, x_schedule, x_merge_steps, ancillas })
}

/// Output, X-measured and Z-measured qubits (1-based).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexSets {
    pub output: Vec<usize>,
    pub x: Vec<usize>,
    pub z: Vec<usize>,
}

impl IndexSets {
    pub fn new(k: usize) -> Self {
        let output = (1..=k).map(|j| 6 + 3 * j).collect();
        let mut z = vec![4, 5, 6, 7, 8];
        for j in 1..=k {
            z.push(7 + 3 * j);
            z.push(8 + 3 * j);
        }
        Self { output, x: vec![1, 2, 3], z }
    }
}

/// `R` with `G_perp R = 1`, `M` with `M G_perp = G0` and `Q` with
/// `Q G_perp = G1 + W`.
pub fn derive_rmq(g_perp: &BinaryMatrix, g0: &BinaryMatrix, g1: &BinaryMatrix, w: &BinaryMatrix) -> Result<(BinaryMatrix, BinaryMatrix, BinaryMatrix)> {
    let rank_err = |what: &str| Error::RankDeficient(format!("no {what} for this generator matrix"));
    let id = BinaryMatrix::identity(g_perp.rows());
    let r = solve_linear(g_perp, &id, Side::Right).map_err(|_| rank_err("right inverse"))?;
    let m = solve_linear(g_perp, g0, Side::Left).map_err(|_| rank_err("check combination"))?;
    let q = solve_linear(g_perp, &g1.add(w)?, Side::Left).map_err(|_| rank_err("output correction"))?;
    Ok((r, m, q))
}

/// One line of an exported plan.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanStep {
    pub step: usize,
    pub operation: String,
    pub qubits: Vec<usize>,
    pub color: Option<usize>,
}

/// The measurement plan of the `3k+8` block.
#[derive(Clone, Debug)]
pub struct RealizationPlan {
    pub code: ProtocolCode,
    pub g_perp: BinaryMatrix,
    pub r: BinaryMatrix,
    pub m: BinaryMatrix,
    pub q: BinaryMatrix,
    pub w: BinaryMatrix,
    pub sets: IndexSets,
    /// `k x |Z|`: X corrections from the Z-basis outcomes.
    pub h_z: BinaryMatrix,
    /// `k x |X|`: Z corrections from the X-basis outcomes.
    pub h_x: BinaryMatrix,
    pub layout: MeasurementLayout,
}

/// Builds the full plan for the `3k+8` block.
pub fn gauge_msd_plan(k: usize) -> Result<RealizationPlan> {
    let parts = bh_parts(k)?;
    let code = ProtocolCode::bh(k)?;
    let (r, m, q) = derive_rmq(&parts.g_perp, &parts.g0, &parts.g1, &parts.w)?;
    debug_assert_eq!(q, parts.q);
    let sets = IndexSets::new(k);
    let mut h_z = BinaryMatrix::zeros(k, sets.z.len());
    for j in 0..k {
        // Columns 5..8 of the layout, then the pair of cell j.
        for c in 1..5 {
            h_z.set(j, c, true);
        }
        h_z.set(j, 5 + 2 * j, true);
        h_z.set(j, 6 + 2 * j, true);
    }
    let mut h_x = BinaryMatrix::zeros(k, 3);
    for j in 0..k {
        h_x.set(j, 0, true);
        h_x.set(j, 1, true);
    }
    let layout = measurement_layout(ProtocolKind::Bh { k })?;
    Ok(RealizationPlan { code, g_perp: parts.g_perp, r, m, q, w: parts.w, sets, h_z, h_x, layout })
}

fn embed(row: &BinaryMatrix, r: usize, cols: &[usize], n: usize) -> BinaryMatrix {
    let mut v = BinaryMatrix::zeros(1, n);
    for (i, &c) in cols.iter().enumerate() {
        if row.get(r, i) {
            v.set(0, c - 1, true);
        }
    }
    v
}

impl RealizationPlan {
    pub fn k(&self) -> usize {
        self.code.k()
    }

    /// Detection bits `M (G_perp x)` and output flips
    /// `x_O + H_X x_X + Q (G_perp x)` for Z errors at `positions` (0-based).
    pub fn classical_action(&self, positions: &[usize]) -> (u64, u64) {
        let n = self.code.n();
        let mut x = BinaryMatrix::zeros(1, n);
        for &p in positions {
            x.set(0, p, !x.get(0, p));
        }
        let gamma = self.g_perp.mul(&x.transpose()).expect("shapes fixed at construction");
        let detect = self.m.mul(&gamma).expect("shapes fixed at construction");
        let qg = self.q.mul(&gamma).expect("shapes fixed at construction");
        let mut syn = 0u64;
        for r in 0..detect.rows() {
            syn |= (detect.get(r, 0) as u64) << r;
        }
        let mut out = 0u64;
        for j in 0..self.k() {
            let mut bit = x.get(0, self.sets.output[j] - 1) ^ qg.get(j, 0);
            for (i, &c) in self.sets.x.iter().enumerate() {
                bit ^= self.h_x.get(j, i) & x.get(0, c - 1);
            }
            out |= (bit as u64) << j;
        }
        (syn, out)
    }

    /// Checks that each logical operator, times the correction pattern on
    /// the measured qubits, reduces to its output qubit modulo stabilizers.
    pub fn corrections_localize(&self) -> bool {
        let n = self.code.n();
        (0..self.k()).all(|j| {
            let l = self.code.g1().row(j);
            let mut out = BinaryMatrix::zeros(1, n);
            out.set(0, self.sets.output[j] - 1, true);
            let base = l.add(&out).expect("same width");
            let via_z = base.add(&embed(&self.h_z, j, &self.sets.z, n)).expect("same width");
            let via_x = base.add(&embed(&self.h_x, j, &self.sets.x, n)).expect("same width");
            self.g_perp.span_contains(&via_z) && self.g_perp.span_contains(&via_x)
        })
    }

    /// Exported schedule: the seven protocol steps with qubits and, for
    /// entangling gates, their time slot.
    pub fn listing(&self) -> Vec<PlanStep> {
        let mut steps = Vec::new();
        let step = |s: usize, op: &str, qubits: Vec<usize>, color: Option<usize>| PlanStep {
            step: s,
            operation: op.to_string(),
            qubits,
            color,
        };
        for (stage, op) in [(1, "CZ"), (3, "CX")] {
            let sched = if stage == 1 { &self.layout.z_schedule } else { &self.layout.x_schedule };
            let mut edges = sched.edges.clone();
            edges.sort_by_key(|e| (e.color, e.ancilla, e.data));
            for e in edges {
                steps.push(step(stage, op, vec![self.code.n() + e.ancilla + 1, e.data + 1], Some(e.color)));
            }
            let kind = if stage == 1 { "measure Z" } else { "measure X" };
            for r in 0..self.g_perp.rows() {
                steps.push(step(stage, kind, self.g_perp.row_support(r).iter().map(|q| q + 1).collect(), None));
            }
            if stage == 1 {
                steps.push(step(2, "apply A[R mu]", (1..=self.code.n()).collect(), None));
            }
        }
        steps.push(step(4, "postselect M gamma = 0", Vec::new(), None));
        steps.push(step(5, "measure X", self.sets.x.clone(), None));
        steps.push(step(5, "measure Z", self.sets.z.clone(), None));
        steps.push(step(6, "retain", self.sets.output.clone(), None));
        steps.push(step(7, "correct X[H_Z m_Z] Z[H_X m_X + Q gamma]", self.sets.output.clone(), None));
        steps
    }
}

/// Durations entering the block time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingParams {
    pub t_g: f64,
    pub t_a: f64,
    pub t_prep: f64,
    pub t_meas: f64,
    pub t_sc: f64,
    pub d: usize,
}

impl TimingParams {
    /// Only the surface-code cycle contributes.
    pub fn asymptotic(t_sc: f64, d: usize) -> Self {
        Self { t_g: 0.0, t_a: 0.0, t_prep: 0.0, t_meas: 0.0, t_sc, d }
    }

    pub fn t_cnot(&self) -> f64 {
        self.t_g + self.d as f64 * self.t_sc
    }
}

/// Time of one block: entangling steps of both stages plus the magic
/// correction, two preparations and three measurement layers.
pub fn block_time(p: &TimingParams, layout: &MeasurementLayout) -> f64 {
    layout.gate_steps() as f64 * p.t_cnot() + p.t_a + 2.0 * p.t_prep + 3.0 * p.t_meas
}

/// Leading-order block time, `steps * d * t_sc`.
pub fn asymptotic_block_time(p: &TimingParams, layout: &MeasurementLayout) -> f64 {
    layout.gate_steps() as f64 * p.d as f64 * p.t_sc
}

/// Physical data qubits of one block at distance `d`.
pub fn physical_qubits(layout: &MeasurementLayout, d: usize) -> usize {
    layout.logical_qubits() * d * d
}

/// Output columns for the `3k+8` layout, 1-based.
pub fn output_qubits(k: usize) -> Vec<usize> {
    bh_output_columns(k).into_iter().map(|c| c + 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sets_partition_the_block() {
        for k in [2, 6, 10] {
            let s = IndexSets::new(k);
            let mut all: Vec<usize> = s.output.iter().chain(&s.x).chain(&s.z).copied().collect();
            all.sort();
            assert_eq!(all, (1..=3 * k + 8).collect::<Vec<_>>());
            assert_eq!(s.output, output_qubits(k));
        }
    }

    #[test]
    fn identities_hold() {
        for k in (2..=42).step_by(4) {
            let p = gauge_msd_plan(k).unwrap();
            let n = 3 * k + 8;
            assert_eq!(p.g_perp.mul(&p.r).unwrap(), BinaryMatrix::identity(2 * k + 5), "k = {k}");
            assert_eq!(&p.m.mul(&p.g_perp).unwrap(), p.code.g0());
            assert_eq!(p.w.add(&p.q.mul(&p.g_perp).unwrap()).unwrap(), *p.code.g1());
            assert_eq!(p.g_perp.rank(), n - k - 3);
            assert!(p.corrections_localize(), "k = {k}");
        }
    }

    #[test]
    fn outputs_are_not_gauge_operators() {
        for k in [2, 6, 14] {
            let p = gauge_msd_plan(k).unwrap();
            let stacked = p.g_perp.vstack(p.code.g1()).unwrap();
            assert_eq!(stacked.rank(), p.g_perp.rank() + k);
        }
    }

    #[test]
    fn classical_action_matches_block_up_to_weight_two() {
        for k in [2, 6, 10] {
            let p = gauge_msd_plan(k).unwrap();
            let reference = ProtocolCode::bh(k).unwrap();
            let n = 3 * k + 8;
            for a in 0..n {
                for b in a..n {
                    let pos: Vec<usize> = if a == b { vec![a] } else { vec![a, b] };
                    let (s, y) = p.classical_action(&pos);
                    let (s_ref, y_ref) = reference.apply(&pos);
                    assert_eq!((s == 0, y), (s_ref == 0, y_ref), "k = {k}, x = {pos:?}");
                }
            }
        }
    }

    #[test]
    fn k2_classical_action_is_exact_on_all_inputs() {
        let p = gauge_msd_plan(2).unwrap();
        for x in 0u32..1 << 14 {
            let pos: Vec<usize> = (0..14).filter(|i| x >> i & 1 == 1).collect();
            assert_eq!(p.classical_action(&pos), p.code.apply(&pos));
        }
    }

    #[test]
    fn depths_match_targets() {
        for k in (2..=42).step_by(4) {
            let l = measurement_layout(ProtocolKind::Bh { k }).unwrap();
            assert_eq!((l.z_depth(), l.gate_steps()), (4, 8), "k = {k}");
            assert!(l.z_schedule.is_proper());
            assert_eq!(l.logical_qubits(), 6 * k + 14);
        }
        let rm = measurement_layout(ProtocolKind::Rm15).unwrap();
        assert_eq!((rm.z_depth(), rm.logical_qubits()), (5, 25));
        let tof = measurement_layout(ProtocolKind::Toffoli).unwrap();
        assert_eq!((tof.z_depth(), tof.x_depth(), tof.logical_qubits()), (4, 5, 12));
    }

    #[test]
    fn rm_generators_are_dual() {
        let g = build_g_perp(ProtocolKind::Rm15).unwrap();
        let code = ProtocolCode::rm15();
        assert!(code.g().mul(&g.transpose()).unwrap().is_zero());
        assert_eq!(g.rank(), 10);
        assert_eq!((0..10).map(|r| g.row_weight(r)).max(), Some(4));
        assert_eq!((0..15).map(|c| g.col_weight(c)).max(), Some(5));
        let tof = build_g_perp(ProtocolKind::Toffoli).unwrap();
        assert!(ProtocolCode::toffoli().g().mul(&tof.transpose()).unwrap().is_zero());
    }

    #[test]
    fn block_time_examples() {
        let l = measurement_layout(ProtocolKind::Bh { k: 2 }).unwrap();
        let p = TimingParams::asymptotic(1e-3, 15);
        assert_relative_eq!(block_time(&p, &l), 0.12, max_relative = 1e-12);
        assert_relative_eq!(asymptotic_block_time(&p, &l), 8.0 * 15.0 * 1e-3, max_relative = 1e-12);
        assert_eq!(physical_qubits(&l, 15), 26 * 225);
        let full = TimingParams { t_g: 1e-6, t_a: 2e-6, t_prep: 3e-6, t_meas: 4e-6, t_sc: 1e-3, d: 15 };
        assert_relative_eq!(block_time(&full, &l), 8.0 * (1e-6 + 15e-3) + 2e-6 + 6e-6 + 12e-6, max_relative = 1e-12);
    }

    #[test]
    fn listing_covers_all_steps() {
        let p = gauge_msd_plan(2).unwrap();
        let steps = p.listing();
        for s in 1..=7 {
            assert!(steps.iter().any(|x| x.step == s));
        }
        assert_eq!(steps.iter().filter(|s| s.operation == "measure Z" && s.step == 1).count(), 9);
        assert_eq!(steps.iter().filter(|s| s.operation == "measure X" && s.step == 3).count(), 9);
        assert_eq!(p.m.rows(), 3);
    }
}
