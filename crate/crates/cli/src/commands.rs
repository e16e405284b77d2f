use std::collections::BTreeMap;
use std::fs;

use anyhow::{bail, Context, Result};
use distill_core::codes::{eta as eta_of, sum_eta_power};
use distill_core::realization::{build_g_perp, gauge_msd_plan, measurement_layout};
use distill_core::resource::{
    fit_log_power, frontier, scaling_curve, spacetime_curve, yield_curve, Optimizer, ResourceParams, SearchSpace,
};
use distill_core::sim::{estimate_brute, estimate_levels, simulate_brute, ShufflePolicy, SimConfig};
use distill_core::tracking::parse_rounds;
use distill_core::{CheckingMode, FactorySpec, ProtocolCode, ProtocolKind, Species};

use crate::output::{sci, Csv, Outputs};
use crate::{Method, Mode, OutArgs, Protocol, ProtocolArgs, ResourceArgs, Shuffle, Want};

/// Invalid command-line input detected outside the core library.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub type Params = BTreeMap<String, String>;

pub fn params<const N: usize>(pairs: [(&str, String); N]) -> Params {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

pub fn protocol_kind(p: &ProtocolArgs) -> Result<ProtocolKind> {
    let kind = match (p.protocol, p.k) {
        (Protocol::Bh, Some(k)) => ProtocolKind::Bh { k },
        (Protocol::Bh, None) => bail!(Usage("--k is required for the bh protocol".into())),
        (Protocol::Rm, None) => ProtocolKind::Rm15,
        (Protocol::Toffoli, None) => ProtocolKind::Toffoli,
        (_, Some(_)) => bail!(Usage("--k applies to the bh protocol only".into())),
    };
    ProtocolCode::from_kind(kind)?;
    Ok(kind)
}

pub fn checking_mode(m: Mode) -> CheckingMode {
    match m {
        Mode::Block => CheckingMode::Block,
        Mode::Module => CheckingMode::Module,
    }
}

pub fn resource_params(r: &ResourceArgs) -> Result<ResourceParams> {
    let mut p = match &r.params {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ResourceParams::from_key_values(&text)?
        }
        None => ResourceParams::new(1e-3, 1e-3),
    };
    if let Some(pg) = r.pg {
        p.p_g = pg;
    }
    if let Some(tsc) = r.tsc {
        // Keep the measurement time proportional unless it was set explicitly.
        let ratio = p.t_meas_ff / p.t_sc;
        p.t_sc = tsc;
        p.t_meas_ff = ratio * tsc;
    }
    p.validate()?;
    Ok(p)
}

fn resource_record(p: &ResourceParams, into: &mut Params) {
    into.insert("p_g".into(), sci(p.p_g));
    into.insert("t_sc".into(), sci(p.t_sc));
    into.insert("t_meas_ff".into(), sci(p.t_meas_ff));
    into.insert("eps_in_factor".into(), sci(p.eps_in_factor));
    into.insert("p_suc_alg".into(), sci(p.p_suc_alg));
}

/// Output pattern as one character per output, first output first.
fn pattern(y: u64, k: usize) -> String {
    (0..k).map(|q| if y >> q & 1 == 1 { '1' } else { '0' }).collect()
}

pub fn eta(p: &ProtocolArgs, out: &OutArgs) -> Result<()> {
    let kind = protocol_kind(p)?;
    let code = ProtocolCode::from_kind(kind)?;
    let e = eta_of(&code);
    let mut table = Csv::new(&["y", "weight", "count"]);
    for (&y, &c) in &e.counts {
        table.row(&[pattern(y, code.k()), y.count_ones().to_string(), c.to_string()]);
    }
    let mut sums = Csv::new(&["m", "sum"]);
    for m in 1..=4 {
        sums.row(&[m.to_string(), sum_eta_power(&e, m).to_string()]);
    }
    let table = table.into_string();
    print!("{table}");
    println!("order = {}, total = {}", e.order, e.total());
    let mut o = Outputs::new(out.out.as_deref())?;
    o.write("eta.csv", &table)?;
    o.write("eta_power_sums.csv", &sums.into_string())?;
    o.finish("eta", &params([("protocol", kind.to_string())]), None)
}

pub fn track_csv(report: &distill_core::tracking::TrackingReport) -> String {
    let mut t = Csv::new(&[
        "level",
        "protocol",
        "p_success",
        "global_error",
        "unit_error",
        "branch_units",
        "branch_qubits",
        "coefficient",
        "min_weight",
    ]);
    for l in &report.levels {
        t.row(&[
            l.level.to_string(),
            l.protocol.clone(),
            sci(l.p_success),
            sci(l.global_error),
            sci(l.unit_error),
            l.branch_units.to_string(),
            l.branch_qubits.to_string(),
            l.coefficient.clone().unwrap_or_default(),
            l.min_weight.to_string(),
        ]);
    }
    t.into_string()
}

pub fn track(rounds: &str, eps: f64, mode: Mode, out: &OutArgs) -> Result<()> {
    let spec = FactorySpec::parse(rounds, checking_mode(mode))?;
    let report = distill_core::tracking::track(&spec, eps)?;
    let csv = track_csv(&report);
    print!("{csv}");
    println!("global error = {:.2e}", report.final_level().global_error);
    let mut o = Outputs::new(out.out.as_deref())?;
    o.write("track.csv", &csv)?;
    let p = params([("rounds", rounds.to_string()), ("eps", sci(eps)), ("mode", spec.mode.to_string())]);
    o.finish("track", &p, None)
}

pub fn simulate(
    rounds: &str,
    eps: f64,
    trials: u64,
    seed: u64,
    method: Method,
    shuffle: Shuffle,
    out: &OutArgs,
) -> Result<()> {
    let kinds = parse_rounds(rounds)?;
    FactorySpec::new(&kinds, CheckingMode::Module)?;
    let mut cfg = SimConfig::new(&kinds, eps, trials, seed);
    cfg.shuffle = match shuffle {
        Shuffle::Canonical => ShufflePolicy::Canonical,
        Shuffle::Random => ShufflePolicy::Random,
    };
    let estimates = match method {
        Method::Rare => estimate_levels(&cfg, &vec![trials; kinds.len()])?,
        Method::Brute => vec![estimate_brute(&simulate_brute(&cfg)?, kinds.len())],
    };
    let analytic = distill_core::tracking::track(&FactorySpec::new(&kinds, CheckingMode::Module)?, eps)?;
    let mut t = Csv::new(&[
        "level",
        "method",
        "trials",
        "success",
        "error",
        "p_success",
        "global_error",
        "stderr",
        "upper_95",
        "p_preselect",
        "firewall_violations",
        "analytic_global_error",
    ]);
    for e in &estimates {
        t.row(&[
            e.level.to_string(),
            format!("{:?}", e.method).to_lowercase(),
            e.counts.trials.to_string(),
            e.counts.success.to_string(),
            e.counts.error.to_string(),
            sci(e.p_success),
            sci(e.global_error),
            sci(e.stderr),
            e.upper_95.map(sci).unwrap_or_default(),
            sci(e.p_preselect),
            e.counts.firewall_violations.to_string(),
            sci(analytic.levels[e.level - 1].global_error),
        ]);
    }
    let csv = t.into_string();
    print!("{csv}");
    let mut o = Outputs::new(out.out.as_deref())?;
    o.write("simulate.csv", &csv)?;
    let p = params([
        ("rounds", rounds.to_string()),
        ("eps", sci(eps)),
        ("trials", trials.to_string()),
        ("method", format!("{method:?}").to_lowercase()),
        ("shuffle", format!("{shuffle:?}").to_lowercase()),
    ]);
    o.finish("simulate", &p, Some(seed))
}

pub fn realize(p: &ProtocolArgs, out: &OutArgs) -> Result<()> {
    let kind = protocol_kind(p)?;
    let layout = measurement_layout(kind)?;
    let mut o = Outputs::new(out.out.as_deref())?;
    o.write("g_perp.txt", &format!("{}\n", build_g_perp(kind)?))?;
    let mut sched = Csv::new(&["stage", "ancilla", "data", "color"]);
    for (stage, s) in [("z", &layout.z_schedule), ("x", &layout.x_schedule)] {
        let mut edges = s.edges.clone();
        edges.sort_by_key(|e| (e.color, e.ancilla, e.data));
        for e in edges {
            sched.row(&[stage.to_string(), e.ancilla.to_string(), (e.data + 1).to_string(), e.color.to_string()]);
        }
    }
    o.write("schedule.csv", &sched.into_string())?;
    if let ProtocolKind::Bh { k } = kind {
        let plan = gauge_msd_plan(k)?;
        if !plan.corrections_localize() {
            bail!("internal: corrections do not localize for k = {k}");
        }
        for (name, m) in [("r", &plan.r), ("m", &plan.m), ("q", &plan.q), ("h_z", &plan.h_z), ("h_x", &plan.h_x)] {
            o.write(&format!("{name}.txt"), &format!("{m}\n"))?;
        }
        let mut steps = Csv::new(&["step", "operation", "qubits", "color"]);
        for s in plan.listing() {
            let q: Vec<String> = s.qubits.iter().map(|q| q.to_string()).collect();
            steps.row(&[s.step.to_string(), s.operation.replace(',', ";"), q.join(" "), s.color.map(|c| c.to_string()).unwrap_or_default()]);
        }
        o.write("plan.csv", &steps.into_string())?;
    }
    let mut summary = Csv::new(&["key", "value"]);
    for (key, v) in [
        ("data_qubits", layout.data_qubits),
        ("ancillas", layout.ancillas),
        ("logical_qubits", layout.logical_qubits()),
        ("z_depth", layout.z_depth()),
        ("x_depth", layout.x_depth()),
        ("gate_steps", layout.gate_steps()),
    ] {
        summary.row(&[key.to_string(), v.to_string()]);
    }
    let summary = summary.into_string();
    print!("{summary}");
    o.write("layout.csv", &summary)?;
    o.finish("realize", &params([("protocol", kind.to_string())]), None)
}

fn want_species(w: Want) -> Species {
    match w {
        Want::T => Species::T,
        Want::Toffoli => Species::Toffoli,
    }
}

pub fn optimize(states: f64, want: Want, mode: Option<Mode>, r: &ResourceArgs, out: &OutArgs) -> Result<()> {
    if !(states >= 1.0) {
        bail!(Usage(format!("--states must be at least 1, got {states}")));
    }
    let p = resource_params(r)?;
    let species = want_species(want);
    let opt = Optimizer::new(p, SearchSpace::default())?;
    let best = opt.best(states, species, mode.map(checking_mode))?;
    let fast = opt.time_optimal(states, species)?;
    let mut rounds = Csv::new(&[
        "factory", "round", "protocol", "distance", "blocks", "logical_qubits", "attempts", "slots", "p_round", "cycles",
    ]);
    for (label, c) in [("lowest_volume", &best), ("time_optimal", &fast.candidate)] {
        for (i, r) in c.layout.rounds.iter().enumerate() {
            rounds.row(&[
                label.to_string(),
                (i + 1).to_string(),
                r.kind.to_string(),
                r.distance.to_string(),
                sci(r.blocks),
                sci(r.logical_qubits),
                r.attempts.to_string(),
                sci(r.slots),
                sci(r.p_round),
                sci(r.cycles),
            ]);
        }
    }
    let mut summary = Csv::new(&["factory", "design", "seven_t", "global_error", "eps_target", "volume", "physical_qubits", "copies"]);
    for (label, c, phys, copies) in [
        ("lowest_volume", &best, best.layout.physical_qubits, 1.0),
        ("time_optimal", &fast.candidate, fast.physical_qubits, fast.copies),
    ] {
        summary.row(&[
            label.to_string(),
            c.layout.design.to_string().replace(',', " "),
            c.seven_t.to_string(),
            sci(c.layout.global_error),
            sci(c.layout.eps_target),
            sci(c.volume()),
            sci(phys),
            copies.to_string(),
        ]);
    }
    let summary = summary.into_string();
    print!("{summary}");
    let mut o = Outputs::new(out.out.as_deref())?;
    o.write("rounds.csv", &rounds.into_string())?;
    o.write("summary.csv", &summary)?;
    let mut rec = params([
        ("states", sci(states)),
        ("want", format!("{want:?}").to_lowercase()),
        ("mode", mode.map(|m| format!("{m:?}").to_lowercase()).unwrap_or_else(|| "any".into())),
    ]);
    resource_record(&p, &mut rec);
    o.finish("optimize", &rec, None)
}

pub fn curves(states: f64, r: &ResourceArgs, out: &OutArgs) -> Result<()> {
    let p = resource_params(r)?;
    let opt = Optimizer::new(p, SearchSpace::default())?;
    let mut o = Outputs::new(out.out.as_deref())?;

    let targets: Vec<f64> = (4..=30).map(|e| 10f64.powi(-e)).collect();
    let ks: Vec<usize> = (2..=50).step_by(4).collect();
    let mut y = Csv::new(&["target", "mode", "cost", "unit_error", "design"]);
    for pt in yield_curve(p.eps_in(), &targets, &ks, 3)? {
        y.row(&[sci(pt.target), pt.mode.to_string(), sci(pt.cost), sci(pt.unit_error), pt.design.replace(',', " ")]);
    }
    o.write("yield.csv", &y.into_string())?;

    let ns: Vec<f64> = (10..=30).map(|e| 10f64.powi(e)).collect();
    let mut s = Csv::new(&["states", "mode", "volume", "design"]);
    for pt in spacetime_curve(&opt, &ns, Species::T) {
        let mode = pt.mode.map(|m| m.to_string()).unwrap_or_else(|| "any".into());
        s.row(&[sci(pt.states), mode, sci(pt.volume), pt.design.replace(',', " ")]);
    }
    o.write("spacetime.csv", &s.into_string())?;

    let mut f = Csv::new(&["physical_qubits", "rate_per_cycle", "volume", "design"]);
    for pt in frontier(&opt, states, Species::Toffoli) {
        f.row(&[sci(pt.physical_qubits), sci(pt.rate), sci(pt.volume), pt.design.replace(',', " ")]);
    }
    o.write("frontier.csv", &f.into_string())?;

    let curve = scaling_curve(&opt, &ns)?;
    let mut sc = Csv::new(&["states", "volume", "cnot_volume", "t_to_cnot_ratio"]);
    for pt in &curve {
        sc.row(&[sci(pt.states), sci(pt.volume), sci(pt.cnot_volume), sci(pt.ratio)]);
    }
    o.write("scaling.csv", &sc.into_string())?;
    let fit = fit_log_power(&curve.iter().map(|p| (p.states, p.volume)).collect::<Vec<_>>())?;
    let mut fc = Csv::new(&["a", "b", "c", "rss"]);
    fc.row(&[sci(fit.a), sci(fit.b), sci(fit.c), sci(fit.rss)]);
    o.write("scaling_fit.csv", &fc.into_string())?;
    println!("scaling fit: V = {:.3e} log10(N)^{:.3} + {:.3e}", fit.a, fit.b, fit.c);

    let mut rec = params([("frontier_states", sci(states))]);
    resource_record(&p, &mut rec);
    o.finish("curves", &rec, None)
}
