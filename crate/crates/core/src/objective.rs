//! Energy and overlap objectives over a circuit, with an adjoint gradient.

use std::collections::BTreeMap;

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::fabric::FabricSpec;
use crate::gates::reference_matrix;
use crate::sim::{apply_local, PauliSum, StateVector};

/// A real Pauli sum folded into one diagonal per distinct X-mask, so that
/// `O|ψ⟩ = Σ_x X^x D_x |ψ⟩`.
#[derive(Clone, Debug)]
pub struct CompiledOperator {
    n_qubits: usize,
    blocks: Vec<(usize, Vec<f64>)>,
}

impl CompiledOperator {
    pub fn new(op: &PauliSum, n_qubits: usize) -> Result<Self> {
        op.validate()?;
        if op.n_qubits > n_qubits {
            return Err(Error::Dimension { left: op.n_qubits, right: n_qubits });
        }
        let dim = 1usize << n_qubits;
        let mut by_mask: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for &(c, p) in &op.terms {
            let d = by_mask.entry(p.x as usize).or_insert_with(|| vec![0.0; dim]);
            for (i, v) in d.iter_mut().enumerate() {
                *v += c * p.sign(i);
            }
        }
        let blocks = by_mask.into_iter().filter(|(_, d)| d.iter().any(|&v| v != 0.0)).collect();
        Ok(Self { n_qubits, blocks })
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.n_qubits() != self.n_qubits {
            return Err(Error::Dimension { left: state.n_qubits(), right: self.n_qubits });
        }
        let a = state.amplitudes();
        let mut out = vec![0.0; a.len()];
        for (x, d) in &self.blocks {
            for (i, (&ai, &di)) in a.iter().zip(d).enumerate() {
                out[i ^ x] += di * ai;
            }
        }
        StateVector::from_amplitudes(self.n_qubits, out)
    }

    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        Ok(state.dot(&self.apply(state)?))
    }
}

/// Largest number of stored diagonal entries before falling back to
/// term-by-term application.
const COMPILE_LIMIT: usize = 1 << 25;

#[derive(Clone, Debug)]
pub enum Target {
    /// Minimize `⟨ψ|H|ψ⟩`.
    Energy(PauliSum),
    /// Minimize the infidelity `1 − ⟨A|ψ⟩²` against `A`.
    Overlap(StateVector),
}

#[derive(Clone, Debug)]
pub struct Objective {
    pub target: Target,
    pub circuit: Circuit,
    pub reference: StateVector,
    compiled: Option<CompiledOperator>,
}

impl Objective {
    pub fn energy(circuit: Circuit, h: PauliSum, reference: StateVector) -> Result<Self> {
        check_reference(&circuit, &reference)?;
        h.validate()?;
        let masks: std::collections::HashSet<u64> = h.terms.iter().map(|(_, p)| p.x).collect();
        let compiled =
            if masks.len() << circuit.n_qubits <= COMPILE_LIMIT { Some(CompiledOperator::new(&h, circuit.n_qubits)?) } else { None };
        Ok(Self { target: Target::Energy(h), circuit, reference, compiled })
    }

    pub fn overlap(circuit: Circuit, target: StateVector, reference: StateVector) -> Result<Self> {
        check_reference(&circuit, &reference)?;
        if target.n_qubits() != circuit.n_qubits {
            return Err(Error::Dimension { left: target.n_qubits(), right: circuit.n_qubits });
        }
        Ok(Self { target: Target::Overlap(target), circuit, reference, compiled: None })
    }

    pub fn fabric_energy(spec: &FabricSpec, h: PauliSum, reference: StateVector) -> Result<Self> {
        Self::energy(spec.circuit()?, h, reference)
    }

    pub fn fabric_overlap(spec: &FabricSpec, target: StateVector, reference: StateVector) -> Result<Self> {
        Self::overlap(spec.circuit()?, target, reference)
    }

    /// Same objective over another circuit on the same register.
    pub fn with_circuit(&self, circuit: Circuit) -> Result<Self> {
        if circuit.n_qubits != self.circuit.n_qubits {
            return Err(Error::Dimension { left: circuit.n_qubits, right: self.circuit.n_qubits });
        }
        Ok(Self { circuit, ..self.clone() })
    }

    pub fn n_params(&self) -> usize {
        self.circuit.n_params
    }

    pub fn state(&self, params: &[f64]) -> Result<StateVector> {
        self.circuit.run(&self.reference, params)
    }

    pub fn value_of_state(&self, psi: &StateVector) -> Result<f64> {
        match (&self.target, &self.compiled) {
            (Target::Energy(_), Some(op)) => op.expectation(psi),
            (Target::Energy(h), None) => crate::sim::expectation(psi, h),
            (Target::Overlap(a), _) => {
                let o = a.dot(psi);
                Ok(1.0 - o * o)
            }
        }
    }

    pub fn evaluate(&self, params: &[f64]) -> Result<f64> {
        self.value_of_state(&self.state(params)?)
    }

    /// `∂f/∂ψ` at `psi`, as a real vector.
    fn costate(&self, psi: &StateVector) -> Result<StateVector> {
        match (&self.target, &self.compiled) {
            (Target::Energy(_), Some(op)) => {
                let mut l = op.apply(psi)?;
                l.scale(2.0);
                Ok(l)
            }
            (Target::Energy(h), None) => {
                let mut l = h.apply(psi)?;
                l.scale(2.0);
                Ok(l)
            }
            (Target::Overlap(a), _) => {
                let mut l = a.clone();
                l.scale(-2.0 * a.dot(psi));
                Ok(l)
            }
        }
    }

    /// Objective value and its exact gradient from one forward and one
    /// backward sweep.
    pub fn value_and_gradient(&self, params: &[f64]) -> Result<(f64, Vec<f64>)> {
        let c = &self.circuit;
        let mats = c.matrices(params);
        let mut psi = self.reference.clone();
        c.apply(&mut psi, params)?;
        let value = self.value_of_state(&psi)?;
        let mut lambda = self.costate(&psi)?;
        let mut grad = vec![0.0; c.n_params];
        for (g, m) in c.gates.iter().zip(&mats).rev() {
            let mt = m.transpose();
            apply_local(&mut psi, &mt, &g.qubits)?;
            for slot in g.slots() {
                let d = c.gate_derivative(g, params, slot)?;
                let mut dpsi = psi.clone();
                apply_local(&mut dpsi, &d, &g.qubits)?;
                grad[slot] += lambda.dot(&dpsi);
            }
            apply_local(&mut lambda, &mt, &g.qubits)?;
        }
        Ok((value, grad))
    }

    /// Central finite differences with step `h`.
    pub fn finite_difference_gradient(&self, params: &[f64], h: f64) -> Result<Vec<f64>> {
        let mut p = params.to_vec();
        (0..params.len())
            .map(|i| {
                p[i] = params[i] + h;
                let up = self.evaluate(&p)?;
                p[i] = params[i] - h;
                let down = self.evaluate(&p)?;
                p[i] = params[i];
                Ok((up - down) / (2.0 * h))
            })
            .collect()
    }
}

fn check_reference(circuit: &Circuit, reference: &StateVector) -> Result<()> {
    if reference.n_qubits() != circuit.n_qubits {
        return Err(Error::Dimension { left: reference.n_qubits(), right: circuit.n_qubits });
    }
    Ok(())
}

/// Sanity helper: the gate matrices of a circuit are all orthogonal, which
/// the backward sweep relies on.
pub fn max_orthogonality_defect(circuit: &Circuit, params: &[f64]) -> f64 {
    circuit
        .gates
        .iter()
        .map(|g| reference_matrix(g.kind, &g.params(params)).map(|m| crate::sim::orthogonality_defect(&m)).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max)
}
