use anyhow::Result;
use distill_core::codes::eta;
use distill_core::resource::{format_duration, Optimizer, ResourceParams, SearchSpace, ShorTask, ShorRow};
use distill_core::tracking::{module_coefficients, union_bound_coefficient};
use distill_core::{ProtocolCode, ProtocolKind};
use num_bigint::BigUint;

use crate::commands::{params, resource_params};
use crate::output::{sci, Csv, Outputs};
use crate::{OutArgs, ResourceArgs};

const BITS: [u32; 3] = [1000, 2000, 4000];
const GATE_ERRORS: [f64; 2] = [1e-3, 1e-4];
const CYCLE_TIMES: [f64; 2] = [1e-3, 1e-5];
const REF_VOLUME: [[f64; 3]; 2] = [[1.41e7, 1.66e7, 1.94e7], [5.35e5, 5.71e5, 6.12e5]];
const REF_FACTORY: [[f64; 3]; 2] = [[1.73e8, 2.18e8, 2.50e8], [6.30e6, 6.97e6, 7.69e6]];
const REF_RUNTIME: [[&str; 2]; 3] = [["6.6 weeks", "11 hours"], ["53 weeks", "3.7 days"], ["8 years", "4.2 weeks"]];
const REF_LOG_COUNT: [f64; 3] = [10.60, 11.51, 12.41];

/// Shor resource table beside reference values. Gate errors and cycle
/// times are fixed; the parameter file sets everything else.
pub fn shor_table(r: &ResourceArgs, out: &OutArgs) -> Result<()> {
    let base = resource_params(r)?;
    let optimizers: Vec<Optimizer> = GATE_ERRORS
        .iter()
        .map(|&pg| Optimizer::new(ResourceParams { p_g: pg, ..base }, SearchSpace::default()))
        .collect::<distill_core::Result<_>>()?;
    let tasks = BITS.map(|bits| ShorTask { bits });
    let rows = ShorRow::compute(&tasks, &optimizers, &CYCLE_TIMES)?;
    let mut t = Csv::new(&["bits", "quantity", "setting", "reference", "computed", "ratio", "design"]);
    for (i, row) in rows.iter().enumerate() {
        t.row(&[
            row.bits.to_string(),
            "log10_toffoli_count".into(),
            String::new(),
            format!("{:.2}", REF_LOG_COUNT[i]),
            format!("{:.2}", row.log10_count),
            sci(row.log10_count / REF_LOG_COUNT[i]),
            String::new(),
        ]);
        for (j, pg) in GATE_ERRORS.iter().enumerate() {
            t.row(&[
                row.bits.to_string(),
                "volume_per_toffoli".into(),
                format!("p_g={}", sci(*pg)),
                sci(REF_VOLUME[j][i]),
                sci(row.volume[j]),
                sci(row.volume[j] / REF_VOLUME[j][i]),
                row.volume_designs[j].replace(',', " "),
            ]);
            t.row(&[
                row.bits.to_string(),
                "factory_qubits".into(),
                format!("p_g={}", sci(*pg)),
                sci(REF_FACTORY[j][i]),
                sci(row.factory_qubits[j]),
                sci(row.factory_qubits[j] / REF_FACTORY[j][i]),
                row.factory_designs[j].replace(',', " "),
            ]);
        }
        for (j, tsc) in CYCLE_TIMES.iter().enumerate() {
            let p = ResourceParams { t_sc: *tsc, t_meas_ff: base.t_meas_ff / base.t_sc * tsc, ..base };
            let secs = tasks[i].runtime_seconds(&p);
            t.row(&[
                row.bits.to_string(),
                "runtime".into(),
                format!("t_sc={}", sci(*tsc)),
                REF_RUNTIME[i][j].into(),
                format_duration(secs),
                String::new(),
                format!("{} s", sci(secs)),
            ]);
        }
    }
    let csv = t.into_string();
    print!("{csv}");
    let mut o = Outputs::new(out.out.as_deref())?;
    o.write("shor_table.csv", &csv)?;
    let rec = params([
        ("t_meas_ff_ratio", sci(base.t_meas_ff / base.t_sc)),
        ("eps_in_factor", sci(base.eps_in_factor)),
        ("p_suc_alg", sci(base.p_suc_alg)),
    ]);
    o.finish("shor-table", &rec, None)
}

fn coefficient(kinds: &[ProtocolKind]) -> Result<BigUint> {
    let etas = kinds
        .iter()
        .map(|&k| ProtocolCode::from_kind(k).map(|c| eta(&c)))
        .collect::<distill_core::Result<Vec<_>>>()?;
    Ok(module_coefficients(&etas.iter().collect::<Vec<_>>()).pop().unwrap_or_default())
}

/// Closed-form factor of a level whose eta sum enters with power `m`. A
/// k = 2 level has a single pattern of count 7 and contributes `7^m`.
fn level_factor(k: u64, m: u32) -> BigUint {
    if k == 2 {
        return BigUint::from(7u64.pow(m));
    }
    // (4^m + 3^m k(k-1)/2), kept integral by k(k-1) being even.
    BigUint::from(4u64.pow(m) + 3u64.pow(m) * k * (k - 1) / 2)
}

struct Row {
    name: &'static str,
    kinds: Vec<ProtocolKind>,
    closed_form: BigUint,
}

fn rows() -> Vec<Row> {
    let ks = [2u64, 6, 10, 14];
    let bh = |k: u64| ProtocolKind::Bh { k: k as usize };
    let tof = ProtocolKind::Toffoli;
    let mut out = vec![];
    for &a in &ks {
        out.push(Row { name: "Tof BH", kinds: vec![tof, bh(a)], closed_form: level_factor(a, 1) * 112u32 });
        out.push(Row { name: "BH Tof", kinds: vec![bh(a), tof], closed_form: level_factor(a, 2) * 28u32 });
        for &b in &ks {
            out.push(Row { name: "BH BH", kinds: vec![bh(a), bh(b)], closed_form: level_factor(a, 2) * level_factor(b, 1) });
            out.push(Row {
                name: "Tof BH BH",
                kinds: vec![tof, bh(a), bh(b)],
                closed_form: level_factor(a, 2) * level_factor(b, 1) * 1792u32,
            });
            out.push(Row {
                name: "BH BH Tof",
                kinds: vec![bh(a), bh(b), tof],
                closed_form: level_factor(a, 4) * level_factor(b, 2) * 28u32,
            });
            for &c in &ks {
                out.push(Row {
                    name: "BH BH BH",
                    kinds: vec![bh(a), bh(b), bh(c)],
                    closed_form: level_factor(a, 4) * level_factor(b, 2) * level_factor(c, 1),
                });
            }
        }
    }
    out
}

/// Leading coefficients from the eta maps beside the closed-form
/// polynomials, plus the large-k asymptotes at k = 50.
pub fn coefficients(out: &OutArgs) -> Result<()> {
    let mut t = Csv::new(&["rows", "protocols", "closed_form", "computed", "exact_match"]);
    let mut mismatches = 0;
    for r in rows() {
        let got = coefficient(&r.kinds)?;
        let names: Vec<String> = r.kinds.iter().map(|k| k.to_string()).collect();
        let ok = got == r.closed_form;
        mismatches += usize::from(!ok);
        t.row(&[
            r.name.to_string(),
            names.join(" "),
            r.closed_form.to_string(),
            got.to_string(),
            if ok { "yes" } else { "no" }.to_string(),
        ]);
    }
    let k = 50usize;
    let kf = k as f64;
    let bh = ProtocolKind::Bh { k };
    let tof = ProtocolKind::Toffoli;
    let as_f64 = |x: BigUint| x.to_string().parse::<f64>().unwrap_or(f64::INFINITY);
    let mut lim = Csv::new(&["quantity", "protocols", "asymptote", "computed_k50", "ratio"]);
    let cases: Vec<(&str, Vec<ProtocolKind>, f64, f64)> = vec![
        ("BH BH", vec![bh, bh], 27.0 / 4.0 * kf.powi(4), 27.0 * kf.powi(5)),
        ("Tof BH", vec![tof, bh], 168.0 * kf.powi(2), 2352.0 * kf.powi(2)),
        ("BH Tof", vec![bh, tof], 126.0 * kf.powi(2), 252.0 * kf.powi(3)),
        ("BH BH BH", vec![bh, bh, bh], 273.375 * kf.powi(6), 2187.0 * kf.powi(10)),
        ("Tof BH BH", vec![tof, bh, bh], 12096.0 * kf.powi(4), 28f64.powi(4) * 27.0 * kf.powi(5)),
        ("BH BH Tof", vec![bh, bh, tof], 5013.0 * kf.powi(4), 20412.0 * kf.powi(8)),
    ];
    for (name, kinds, c_lim, u_lim) in cases {
        let c = as_f64(coefficient(&kinds)?);
        let u = union_bound_coefficient(&kinds)?;
        lim.row(&["coefficient".to_string(), name.to_string(), sci(c_lim), sci(c), sci(c / c_lim)]);
        lim.row(&["union_bound".to_string(), name.to_string(), sci(u_lim), sci(u), sci(u / u_lim)]);
    }
    let csv = t.into_string();
    let lim = lim.into_string();
    print!("{csv}{lim}");
    println!("{mismatches} mismatches");
    let mut o = Outputs::new(out.out.as_deref())?;
    o.write("coefficients.csv", &csv)?;
    o.write("coefficient_limits.csv", &lim)?;
    o.finish("coefficients", &params([("k_values", "2 6 10 14".to_string()), ("limit_k", k.to_string())]), None)
}
