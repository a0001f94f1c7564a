//! VQE / overlap driver: minimization, depth sweeps and amplitude spectra.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fabric::{initialize, reference_state, FabricKind, FabricSpec, PiGate, Strategy};
use crate::hamiltonian::fci_ground_state;
use crate::objective::{Objective, Target};
use crate::optimize::{lbfgs, ConvergenceTrace, EpochRecord, LbfgsConfig, TerminalStatus};
use crate::sim::{PauliSum, StateVector};
use crate::symmetry::IrrepKey;

pub fn minimize(obj: &Objective, init: &[f64], config: &LbfgsConfig) -> Result<(Vec<f64>, ConvergenceTrace)> {
    minimize_observed(obj, init, config, |_, _| Ok(()))
}

pub fn minimize_observed<O>(obj: &Objective, init: &[f64], config: &LbfgsConfig, observe: O) -> Result<(Vec<f64>, ConvergenceTrace)>
where
    O: FnMut(&EpochRecord, &[f64]) -> Result<()>,
{
    if init.len() != obj.n_params() {
        return Err(Error::ParamCount { kind: "objective".into(), expected: obj.n_params(), got: init.len() });
    }
    lbfgs(|x| obj.value_and_gradient(x), init, config, observe)
}

/// Best of `1 + n_restarts` runs; restarts add uniform noise of width
/// `perturbation` to `init`.
pub fn minimize_with_restarts(
    obj: &Objective,
    init: &[f64],
    config: &LbfgsConfig,
    n_restarts: usize,
    perturbation: f64,
    seed: u64,
) -> Result<(Vec<f64>, ConvergenceTrace)> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut best = minimize(obj, init, config)?;
    for _ in 0..n_restarts {
        let start: Vec<f64> = init.iter().map(|v| v + rng.gen_range(-perturbation..=perturbation)).collect();
        let run = minimize(obj, &start, config)?;
        if run.1.final_value() < best.1.final_value() {
            best = run;
        }
    }
    Ok(best)
}

/// Problem family for depth sweeps.
#[derive(Clone, Debug)]
pub struct SweepProblem {
    pub kind: FabricKind,
    pub pi_gate: PiGate,
    pub key: IrrepKey,
    pub target: Target,
    /// Uniform noise width added to the strategy initialization, seeded per run.
    pub perturbation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub layers: usize,
    pub n_params: usize,
    pub strategy: Strategy,
    pub seed: u64,
    pub value: f64,
    pub error: f64,
    pub epochs: usize,
    pub status: TerminalStatus,
    pub digest: String,
}

impl SweepProblem {
    /// Value the error is measured from: FCI energy of the irrep, or 0 for
    /// overlap problems.
    pub fn floor(&self) -> Result<f64> {
        match &self.target {
            Target::Energy(h) => Ok(fci_ground_state(h, &self.key)?.0),
            Target::Overlap(_) => Ok(0.0),
        }
    }

    pub fn objective(&self, spec: &FabricSpec) -> Result<Objective> {
        let r = reference_state(self.key.m, self.key.n_alpha, self.key.n_beta)?;
        match &self.target {
            Target::Energy(h) => Objective::fabric_energy(spec, h.clone(), r),
            Target::Overlap(a) => Objective::fabric_overlap(spec, a.clone(), r),
        }
    }

    pub fn run(&self, layers: usize, strategy: Strategy, seed: u64, floor: f64, config: &LbfgsConfig) -> Result<SweepRun> {
        let base = FabricSpec::new(self.kind, self.key.m, layers).with_pi(self.pi_gate);
        let (spec, mut p) = match self.kind {
            FabricKind::Q | FabricKind::F => initialize(&base, strategy)?,
            _ => (base.clone(), base.zero_params()?),
        };
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        if self.perturbation > 0.0 {
            p.values.iter_mut().for_each(|v| *v += rng.gen_range(-self.perturbation..=self.perturbation));
        }
        let obj = self.objective(&spec)?;
        let (x, trace) = minimize(&obj, &p.values, config)?;
        let value = trace.final_value();
        let row = SweepRow {
            layers,
            n_params: x.len(),
            strategy,
            seed,
            value,
            error: value - floor,
            epochs: trace.epochs(),
            status: trace.status,
            digest: trace.records.last().map(|r| r.digest.clone()).unwrap_or_default(),
        };
        Ok(SweepRun { row, spec, params: x, trace })
    }
}

/// A sweep row with the fabric, optimized parameters and trace behind it.
#[derive(Clone, Debug)]
pub struct SweepRun {
    pub row: SweepRow,
    pub spec: FabricSpec,
    pub params: Vec<f64>,
    pub trace: ConvergenceTrace,
}

/// One minimization per `(layers, strategy, seed)`, run in parallel on the
/// current rayon pool; runs come back in input order. `floor` defaults to
/// [`SweepProblem::floor`].
pub fn depth_sweep_runs(
    problem: &SweepProblem,
    depths: &[usize],
    strategies: &[Strategy],
    seeds: &[u64],
    config: &LbfgsConfig,
    floor: Option<f64>,
) -> Result<Vec<SweepRun>> {
    let floor = match floor {
        Some(f) => f,
        None => problem.floor()?,
    };
    let jobs: Vec<(usize, Strategy, u64)> =
        depths.iter().flat_map(|&d| strategies.iter().flat_map(move |&s| seeds.iter().map(move |&seed| (d, s, seed)))).collect();
    jobs.par_iter().map(|&(d, s, seed)| problem.run(d, s, seed, floor, config)).collect()
}

pub fn depth_sweep(
    problem: &SweepProblem,
    depths: &[usize],
    strategies: &[Strategy],
    seeds: &[u64],
    config: &LbfgsConfig,
) -> Result<Vec<SweepRow>> {
    Ok(depth_sweep_runs(problem, depths, strategies, seeds, config, None)?.into_iter().map(|r| r.row).collect())
}

/// Energy problem helper.
pub fn energy_problem(kind: FabricKind, pi_gate: PiGate, key: IrrepKey, h: PauliSum) -> SweepProblem {
    SweepProblem { kind, pi_gate, key, target: Target::Energy(h), perturbation: 0.0 }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeEntry {
    pub index: usize,
    pub probability: f64,
    pub seniority: usize,
}

#[derive(Clone, Copy, Debug)]
pub enum SpectrumOrder<'a> {
    SortedDesc,
    /// Order by the reference state's probabilities.
    Consistent(&'a StateVector),
}

/// Number of singly occupied spatial orbitals of basis state `index`.
pub fn seniority(index: usize, m: usize) -> usize {
    (0..m).filter(|p| (index >> (2 * p) & 1) != (index >> (2 * p + 1) & 1)).count()
}

/// Basis-state probabilities above `cutoff` in the requested order.
pub fn amplitude_spectrum(state: &StateVector, order: SpectrumOrder, cutoff: f64) -> Result<Vec<AmplitudeEntry>> {
    let m = state.n_qubits() / 2;
    let probs: Vec<f64> = state.amplitudes().iter().map(|a| a * a).collect();
    let entry = |i: usize| AmplitudeEntry { index: i, probability: probs[i], seniority: seniority(i, m) };
    let mut idx: Vec<usize>;
    match order {
        SpectrumOrder::SortedDesc => {
            idx = (0..probs.len()).filter(|&i| probs[i] > cutoff).collect();
            idx.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
        }
        SpectrumOrder::Consistent(r) => {
            if r.n_qubits() != state.n_qubits() {
                return Err(Error::Dimension { left: r.n_qubits(), right: state.n_qubits() });
            }
            let rp: Vec<f64> = r.amplitudes().iter().map(|a| a * a).collect();
            idx = (0..probs.len()).filter(|&i| probs[i] > cutoff || rp[i] > cutoff).collect();
            idx.sort_by(|&a, &b| rp[b].total_cmp(&rp[a]).then(a.cmp(&b)));
        }
    }
    Ok(idx.into_iter().map(entry).collect())
}
