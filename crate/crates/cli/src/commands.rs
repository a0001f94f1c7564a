use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use qnp_core::fabric::{initialize, reference_state, FabricKind, FabricSpec, PiGate, Strategy};
use qnp_core::gates::{decompositions, reference_matrix, GateKind};
use qnp_core::gradients::{classify_generator, make_shift_rule, shift_gradient, RuleClass};
use qnp_core::hamiltonian::{fci_ground_state, from_integrals, model_hamiltonian, read_fcidump, ModelKind, ModelParams};
use qnp_core::objective::Objective;
use qnp_core::optimize::{EpochRecord, LbfgsConfig};
use qnp_core::sim::PauliSum;
use qnp_core::symmetry::{classify_edge_case, enumerate_irreps, haar_random_irrep_state, irrep_dimension, IrrepKey};
use qnp_core::vqe::{amplitude_spectrum, depth_sweep_runs, minimize, SpectrumOrder, SweepProblem};

use crate::{invalid, Classify, CliResult, Context, GatesArgs, GradArgs, HaarArgs, HamiltonianArgs, MArgs, VqeArgs};

/// Largest orbital count the dense statevector is allowed to reach.
const MAX_ORBITALS: usize = 12;

fn parse_name<T: for<'de> Deserialize<'de>>(what: &str, s: &str) -> CliResult<T> {
    serde_json::from_value(Value::String(s.to_string()))
        .map_err(|_| crate::Failure { code: 1, error: anyhow::anyhow!("unknown {what} {s:?}") })
}

fn parse_strategy(s: &str) -> CliResult<Strategy> {
    match s.trim().to_ascii_uppercase().as_str() {
        "A" => Ok(Strategy::A),
        "B" => Ok(Strategy::B),
        _ => invalid(format!("unknown strategy {s:?}; expected A or B")),
    }
}

fn parse_irrep(s: &str, m: usize) -> CliResult<IrrepKey> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let nums: Option<Vec<usize>> = parts.iter().map(|p| p.parse().ok()).collect();
    match nums.as_deref() {
        Some(&[na, nb, s]) => {
            let key = IrrepKey::new(m, na, nb, s);
            key.validate().invalid()?;
            Ok(key)
        }
        _ => invalid(format!("irrep must be `Nα,Nβ,S`, got {s:?}")),
    }
}

fn check_m(m: usize) -> CliResult<()> {
    if m == 0 || m > MAX_ORBITALS {
        return invalid(format!("M = {m} outside 1..={MAX_ORBITALS}"));
    }
    Ok(())
}

/// Hamiltonian, orbital count, irrep and a short description of the source.
fn hamiltonian(a: &HamiltonianArgs, seed: u64) -> CliResult<(PauliSum, IrrepKey, String)> {
    let (h, m, default_key, what) = if let Some(path) = &a.fcidump {
        if a.model.is_some() {
            return invalid("--model and --fcidump are mutually exclusive");
        }
        let ints = read_fcidump(path).invalid()?;
        if a.m.is_some_and(|m| m != ints.m) {
            return invalid(format!("--M {} disagrees with NORB = {}", a.m.unwrap_or(0), ints.m));
        }
        check_m(ints.m)?;
        let key = match (ints.n_electrons, ints.ms2) {
            (Some(n), ms2) => {
                let ms2 = ms2.unwrap_or((n % 2) as i64);
                let na = (n as i64 + ms2) / 2;
                let nb = (n as i64 - ms2) / 2;
                (na >= 0 && nb >= 0).then(|| IrrepKey::new(ints.m, na as usize, nb as usize, ms2.unsigned_abs() as usize))
            }
            _ => None,
        };
        let h = from_integrals(&ints).invalid()?;
        (h, ints.m, key, format!("fcidump:{}", path.display()))
    } else {
        let kind: ModelKind = a.model.as_deref().unwrap_or("hubbard_chain").parse().invalid()?;
        let Some(m) = a.m else {
            return invalid("--M is required for model Hamiltonians");
        };
        check_m(m)?;
        let d = ModelParams::default();
        let p =
            ModelParams { t: a.t.unwrap_or(d.t), u: a.u.unwrap_or(d.u), g: a.g.unwrap_or(d.g), spacing: a.spacing.unwrap_or(d.spacing) };
        let h = model_hamiltonian(kind, m, &p, seed).invalid()?;
        (h, m, None, format!("{kind:?}"))
    };
    let key = match (&a.irrep, default_key) {
        (Some(s), _) => parse_irrep(s, m)?,
        (None, Some(k)) => {
            k.validate().invalid()?;
            k
        }
        (None, None) => IrrepKey::new(m, m / 2, m / 2, 0),
    };
    Ok((h, key, what))
}

fn optimizer(base: Option<LbfgsConfig>, max_epochs: Option<usize>, g_tol: Option<f64>) -> CliResult<LbfgsConfig> {
    let mut c = base.unwrap_or_default();
    if let Some(e) = max_epochs {
        c.max_epochs = e;
    }
    if let Some(g) = g_tol {
        c.g_tol = g;
    }
    c.validate().invalid()?;
    Ok(c)
}

fn fabric_kind(s: Option<&str>) -> CliResult<FabricKind> {
    parse_name("fabric", s.unwrap_or("Q"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IrrepRow {
    #[serde(rename = "M")]
    pub m: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
    #[serde(rename = "S")]
    pub s: usize,
    pub dimension: usize,
    pub universal_for_q: bool,
    pub unconstrained_m: usize,
    pub unconstrained_n_alpha: usize,
    pub unconstrained_n_beta: usize,
}

pub(crate) fn irreps(ctx: &Context, a: MArgs, only_edge_cases: bool) -> CliResult<()> {
    let Some(m) = a.m else {
        return invalid("--M is required");
    };
    if m == 0 || m > 64 {
        return invalid(format!("M = {m} outside 1..=64"));
    }
    let mut rows = Vec::new();
    for (k, dimension) in enumerate_irreps(m) {
        let e = classify_edge_case(&k).runtime()?;
        if only_edge_cases && e.universal_for_q {
            continue;
        }
        rows.push(IrrepRow {
            m,
            n_alpha: k.n_alpha,
            n_beta: k.n_beta,
            s: k.s,
            dimension,
            universal_for_q: e.universal_for_q,
            unconstrained_m: e.unconstrained.m,
            unconstrained_n_alpha: e.unconstrained.n_alpha,
            unconstrained_n_beta: e.unconstrained.n_beta,
        });
    }
    let total: usize = rows.iter().map(|r| r.dimension).sum();
    let doc = json!({ "M": m, "count": rows.len(), "total_dimension": total, "irreps": rows });
    ctx.sink.emit(None, &rows, &doc)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateRow {
    pub gate: String,
    pub arity: usize,
    pub n_params: usize,
    pub rule_class: Option<RuleClass>,
    pub eigenvalues: Option<String>,
    pub variant: Option<String>,
    pub primary: Option<bool>,
    pub two_qubit_count: Option<usize>,
    pub depth: Option<usize>,
    pub max_error: Option<f64>,
}

pub(crate) fn gates(ctx: &Context, a: GatesArgs) -> CliResult<()> {
    let samples = a.samples.unwrap_or(25);
    let mut rng = ChaCha20Rng::seed_from_u64(ctx.seed);
    let mut rows = Vec::new();
    for &kind in GateKind::ALL.iter() {
        let report = (kind.n_params() == 1).then(|| classify_generator(kind)).transpose().runtime()?;
        let eig = report
            .as_ref()
            .map(|r| r.eigenvalues.iter().map(|e| format!("{:.6}", if e.abs() < 5e-7 { 0.0 } else { *e })).collect::<Vec<_>>().join(";"));
        let base = GateRow {
            gate: kind.name().to_string(),
            arity: kind.arity(),
            n_params: kind.n_params(),
            rule_class: report.as_ref().map(|r| r.rule_class),
            eigenvalues: eig,
            variant: None,
            primary: None,
            two_qubit_count: None,
            depth: None,
            max_error: None,
        };
        let decs = decompositions(kind);
        if decs.is_empty() {
            rows.push(base);
            continue;
        }
        for (i, d) in decs.iter().enumerate() {
            let mut worst: f64 = 0.0;
            for _ in 0..samples {
                let p: Vec<f64> = (0..kind.n_params()).map(|_| rng.gen_range(-PI..PI)).collect();
                let r = reference_matrix(kind, &p).runtime()?;
                worst = worst.max((d.expand(&p) - r).amax());
            }
            rows.push(GateRow {
                variant: Some(d.variant.clone()),
                primary: Some(i == 0),
                two_qubit_count: Some(d.two_qubit_count),
                depth: Some(d.depth),
                max_error: Some(worst),
                ..base.clone()
            });
        }
    }
    let doc = json!({ "samples": samples, "seed": ctx.seed, "gates": rows });
    ctx.sink.emit(None, &rows, &doc)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradRow {
    pub slot: usize,
    pub gate: String,
    pub layer: Option<usize>,
    pub position: Option<usize>,
    pub local: usize,
    pub value: f64,
    pub adjoint: f64,
    pub finite_difference: f64,
    pub rule: String,
    pub shift: Option<f64>,
    pub fd_error: f64,
    pub shift_error: Option<f64>,
}

pub(crate) fn gradcheck(ctx: &Context, a: GradArgs) -> CliResult<()> {
    let mut ham = a.hamiltonian.clone();
    if ham.fcidump.is_none() && ham.model.is_none() {
        ham.model = Some("random_symmetric".into());
        ham.m.get_or_insert(3);
    }
    let (h, key, what) = hamiltonian(&ham, ctx.seed)?;
    let kind = fabric_kind(a.fabric.as_deref())?;
    let pi: PiGate = parse_name("pi gate", a.pi.as_deref().unwrap_or("identity"))?;
    let layers = a.layers.unwrap_or(2);
    let step = a.fd_step.unwrap_or(1e-5);
    if !(step > 0.0) {
        return invalid("--fd-step must be positive");
    }
    let spec = FabricSpec::new(kind, key.m, layers).with_pi(pi);
    spec.validate().invalid()?;
    let p = spec.random_params(ctx.seed, PI).invalid()?;
    let (circuit, values, layout) = if a.decompose.unwrap_or(false) {
        let (c, v) = spec.circuit().invalid()?.decompose(&p.values).runtime()?;
        (c, v, None)
    } else {
        (spec.circuit().invalid()?, p.values.clone(), Some(p.layout.clone()))
    };
    let reference = reference_state(key.m, key.n_alpha, key.n_beta).invalid()?;
    let obj = Objective::energy(circuit, h, reference).runtime()?;
    let (_, adjoint) = obj.value_and_gradient(&values).runtime()?;
    let fd = obj.finite_difference_gradient(&values, step).runtime()?;
    let mut rows = Vec::with_capacity(values.len());
    for slot in 0..values.len() {
        let readers: Vec<_> = obj.circuit.gates.iter().filter(|g| g.slots().contains(&slot)).collect();
        let gate = readers.first().map(|g| g.kind);
        let local = readers.first().map_or(0, |g| slot - g.slots().start);
        let class = match gate {
            Some(k) if k.n_params() == 1 && readers.len() == 1 => Some(classify_generator(k).runtime()?.rule_class),
            _ => None,
        };
        let shift = match class {
            Some(c @ (RuleClass::TwoTerm | RuleClass::FourTerm)) => {
                let rule = make_shift_rule(c, 0.0, None, true).runtime()?;
                Some(shift_gradient(&obj, &values, slot, &rule, false).runtime()?)
            }
            _ => None,
        };
        let meta = layout.as_ref().map(|l| l[slot]);
        rows.push(GradRow {
            slot,
            gate: gate.map_or("-".into(), |k| k.name().to_string()),
            layer: meta.map(|m| m.layer),
            position: meta.map(|m| m.position),
            local: meta.map_or(local, |m| m.local),
            value: values[slot],
            adjoint: adjoint[slot],
            finite_difference: fd[slot],
            rule: match class {
                Some(RuleClass::TwoTerm) => "two_term".into(),
                Some(RuleClass::FourTerm) => "four_term".into(),
                _ => "analytic".into(),
            },
            shift,
            fd_error: (adjoint[slot] - fd[slot]).abs(),
            shift_error: shift.map(|s| (s - adjoint[slot]).abs()),
        });
    }
    let max_fd = rows.iter().map(|r| r.fd_error).fold(0.0, f64::max);
    let max_shift = rows.iter().filter_map(|r| r.shift_error).fold(0.0, f64::max);
    let doc = json!({
        "hamiltonian": what,
        "fabric": kind,
        "layers": layers,
        "irrep": key,
        "decomposed": layout.is_none(),
        "n_params": values.len(),
        "max_fd_error": max_fd,
        "max_shift_error": max_shift,
        "slots": rows,
    });
    ctx.sink.emit(None, &rows, &doc)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub layers: usize,
    pub strategy: String,
    pub seed: u64,
    pub epoch: usize,
    pub value: f64,
    pub error: f64,
    pub grad_inf_norm: f64,
    pub digest: String,
}

fn trace_rows(layers: usize, strategy: &str, seed: u64, floor: f64, records: &[EpochRecord]) -> Vec<TraceRow> {
    records
        .iter()
        .map(|r| TraceRow {
            layers,
            strategy: strategy.to_string(),
            seed,
            epoch: r.epoch,
            value: r.value,
            error: r.value - floor,
            grad_inf_norm: r.grad_inf_norm,
            digest: r.digest.clone(),
        })
        .collect()
}

pub(crate) fn haar(ctx: &Context, a: HaarArgs) -> CliResult<()> {
    let (Some(m), Some(na), Some(nb), Some(s)) = (a.m, a.na, a.nb, a.s) else {
        return invalid("haar needs --M, --na, --nb and --S");
    };
    if m == 0 || m > 7 {
        return invalid(format!("haar supports M in 1..=7, got {m}"));
    }
    let key = IrrepKey::new(m, na, nb, s);
    key.validate().invalid()?;
    let dimension = irrep_dimension(&key).invalid()?;
    let kind = fabric_kind(a.fabric.as_deref())?;
    let layers = a.layers.unwrap_or(4);
    let base = FabricSpec::new(kind, m, layers);
    base.validate().invalid()?;
    let strategy =
        a.strategy.clone().unwrap_or_else(|| if matches!(kind, FabricKind::Q | FabricKind::F) { "A".into() } else { "random".into() });
    let (spec, init) = if strategy.eq_ignore_ascii_case("random") {
        let p = base.random_params(ctx.seed.wrapping_add(1), PI).invalid()?;
        (base, p.values)
    } else {
        let (spec, p) = initialize(&base, parse_strategy(&strategy)?).invalid()?;
        (spec, p.values)
    };
    let target = haar_random_irrep_state(&key, ctx.seed).runtime()?;
    let obj = Objective::fabric_overlap(&spec, target, reference_state(m, na, nb).invalid()?).runtime()?;
    let cfg = optimizer(a.optimizer, a.max_epochs, None)?;
    let (_, trace) = minimize(&obj, &init, &cfg).runtime()?;
    let rows = trace_rows(layers, &strategy, ctx.seed, 0.0, &trace.records);
    let edge = classify_edge_case(&key).runtime()?;
    let doc = json!({
        "irrep": key,
        "dimension": dimension,
        "universal_for_q": edge.universal_for_q,
        "fabric": kind,
        "layers": layers,
        "n_params": init.len(),
        "strategy": strategy,
        "seed": ctx.seed,
        "status": trace.status,
        "final_infidelity": trace.final_value(),
        "epochs": trace.epochs(),
        "trace": rows,
    });
    ctx.sink.emit(None, &rows, &doc)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VqeRow {
    pub layers: usize,
    pub n_params: usize,
    pub strategy: String,
    pub seed: u64,
    pub energy: f64,
    pub e_exact: Option<f64>,
    pub error: Option<f64>,
    pub epochs: usize,
    pub status: String,
    pub digest: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub rank: usize,
    pub index: usize,
    pub occupation: String,
    pub probability: f64,
    pub exact_probability: Option<f64>,
    pub seniority: usize,
}

fn strategy_name(s: Strategy) -> &'static str {
    match s {
        Strategy::A => "A",
        Strategy::B => "B",
    }
}

pub(crate) fn vqe(ctx: &Context, a: VqeArgs) -> CliResult<()> {
    let (h, key, what) = hamiltonian(&a.hamiltonian, ctx.seed)?;
    let kind = fabric_kind(a.fabric.as_deref())?;
    let cfg = optimizer(a.optimizer, a.max_epochs, a.g_tol)?;
    let strategies = match &a.strategy {
        Some(v) => v.iter().map(|s| parse_strategy(s)).collect::<CliResult<Vec<_>>>()?,
        None => vec![Strategy::A],
    };
    let seeds = a.seeds.clone().unwrap_or_else(|| vec![ctx.seed]);
    if strategies.is_empty() || seeds.is_empty() {
        return invalid("need at least one strategy and one seed");
    }
    let exact = match a.reference_energy {
        Some(e) => Some((e, None)),
        None if key.m <= 7 => {
            let (e, psi) = fci_ground_state(&h, &key).invalid()?;
            Some((e, Some(psi)))
        }
        None => None,
    };
    let layers = match &a.layers {
        Some(l) if l.is_empty() || l.contains(&0) => return invalid("--layers entries must be positive"),
        Some(l) => l.clone(),
        None => {
            let dim = irrep_dimension(&key).invalid()?;
            let mut l = 1;
            while FabricSpec::new(kind, key.m, l).n_params().invalid()? < dim && l < 100_000 {
                l += 1;
            }
            vec![l]
        }
    };
    FabricSpec::new(kind, key.m, layers[0]).validate().invalid()?;
    let problem = SweepProblem {
        kind,
        pi_gate: PiGate::Identity,
        key,
        target: qnp_core::objective::Target::Energy(h),
        perturbation: a.perturbation.unwrap_or(0.0),
    };
    let floor = exact.as_ref().map_or(f64::NAN, |e| e.0);
    let runs = depth_sweep_runs(&problem, &layers, &strategies, &seeds, &cfg, Some(floor)).runtime()?;
    let e_exact = exact.as_ref().map(|e| e.0);
    let rows: Vec<VqeRow> = runs
        .iter()
        .map(|r| VqeRow {
            layers: r.row.layers,
            n_params: r.row.n_params,
            strategy: strategy_name(r.row.strategy).into(),
            seed: r.row.seed,
            energy: r.row.value,
            e_exact,
            error: e_exact.map(|_| r.row.error),
            epochs: r.row.epochs,
            status: serde_json::to_value(r.row.status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
            digest: r.row.digest.clone(),
        })
        .collect();
    if let Some(path) = &a.trace {
        let trace: Vec<TraceRow> = runs
            .iter()
            .flat_map(|r| trace_rows(r.row.layers, strategy_name(r.row.strategy), r.row.seed, floor, &r.trace.records))
            .collect();
        ctx.sink.emit(Some(path), &trace, &json!({ "trace": trace }))?;
    }
    if let Some(path) = &a.spectrum {
        let best = runs.iter().min_by(|x, y| x.row.value.total_cmp(&y.row.value)).expect("at least one run");
        let psi = problem.objective(&best.spec).runtime()?.state(&best.params).runtime()?;
        let exact_state = exact.as_ref().and_then(|e| e.1.as_ref());
        let order = exact_state.map_or(SpectrumOrder::SortedDesc, SpectrumOrder::Consistent);
        let entries = amplitude_spectrum(&psi, order, 0.0).runtime()?;
        let width = 2 * key.m;
        let spectrum: Vec<SpectrumRow> = entries
            .iter()
            .enumerate()
            .map(|(rank, e)| SpectrumRow {
                rank,
                index: e.index,
                occupation: format!("{:0width$b}", e.index),
                probability: e.probability,
                exact_probability: exact_state.map(|s| s.amplitudes()[e.index].powi(2)),
                seniority: e.seniority,
            })
            .collect();
        ctx.sink.emit(Some(path), &spectrum, &json!({ "layers": best.row.layers, "spectrum": spectrum }))?;
    }
    let doc = json!({
        "hamiltonian": what,
        "irrep": key,
        "fabric": kind,
        "e_exact": e_exact,
        "optimizer": cfg,
        "runs": rows,
    });
    ctx.sink.emit(None, &rows, &doc)
}
