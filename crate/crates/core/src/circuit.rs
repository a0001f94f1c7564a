//! Gate instances bound to qubits, flat-parameter circuits and gate/depth
//! accounting.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{decomposition, derivative_matrix, reference_matrix, schedule, GateKind};
use crate::sim::{apply_local, StateVector};

/// A gate bound to an ordered qubit tuple. Parametrized gates read
/// `kind.n_params()` consecutive slots starting at `param_slot`, or a single
/// `fixed_value`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateInstance {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param_slot: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_value: Option<f64>,
}

impl GateInstance {
    pub fn constant(kind: GateKind, qubits: Vec<usize>) -> Self {
        Self { kind, qubits, param_slot: None, fixed_value: None }
    }

    pub fn slotted(kind: GateKind, qubits: Vec<usize>, slot: usize) -> Self {
        Self { kind, qubits, param_slot: Some(slot), fixed_value: None }
    }

    pub fn fixed(kind: GateKind, qubits: Vec<usize>, value: f64) -> Self {
        Self { kind, qubits, param_slot: None, fixed_value: Some(value) }
    }

    pub fn validate(&self, n_qubits: usize, n_params: usize) -> Result<()> {
        let k = self.kind;
        if self.qubits.len() != k.arity() {
            return Err(Error::Arity { expected: k.arity(), got: self.qubits.len() });
        }
        let mut seen = 0u64;
        for &q in &self.qubits {
            if q >= n_qubits || seen >> q & 1 == 1 {
                return Err(Error::Qubits { qubits: self.qubits.clone(), n_qubits });
            }
            seen |= 1 << q;
        }
        let ok = match (k.n_params(), self.param_slot, self.fixed_value) {
            (0, None, None) => true,
            (1, Some(_), None) | (1, None, Some(_)) => true,
            (n, Some(_), None) if n > 1 => true,
            _ => false,
        };
        if !ok {
            return Err(Error::Invalid(format!("{k}: exactly one of param_slot/fixed_value required for parametrized kinds")));
        }
        if let Some(s) = self.param_slot {
            if s + k.n_params() > n_params {
                return Err(Error::ParamCount { kind: k.name().into(), expected: s + k.n_params(), got: n_params });
            }
        }
        Ok(())
    }

    pub fn params(&self, values: &[f64]) -> Vec<f64> {
        match (self.param_slot, self.fixed_value) {
            (Some(s), _) => values[s..s + self.kind.n_params()].to_vec(),
            (None, Some(v)) => vec![v],
            _ => Vec::new(),
        }
    }

    /// Flat parameter indices this gate reads.
    pub fn slots(&self) -> std::ops::Range<usize> {
        match self.param_slot {
            Some(s) => s..s + self.kind.n_params(),
            None => 0..0,
        }
    }

    fn local_qubits(&self) -> &[usize] {
        &self.qubits
    }
}

/// An ordered gate list over a flat parameter vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub n_qubits: usize,
    pub n_params: usize,
    pub gates: Vec<GateInstance>,
}

impl Circuit {
    pub fn new(n_qubits: usize, n_params: usize, gates: Vec<GateInstance>) -> Result<Self> {
        for g in &gates {
            g.validate(n_qubits, n_params)?;
        }
        Ok(Self { n_qubits, n_params, gates })
    }

    fn check(&self, state: &StateVector, values: &[f64]) -> Result<()> {
        if values.len() != self.n_params {
            return Err(Error::ParamCount { kind: "circuit".into(), expected: self.n_params, got: values.len() });
        }
        if state.n_qubits() != self.n_qubits {
            return Err(Error::Dimension { left: state.n_qubits(), right: self.n_qubits });
        }
        Ok(())
    }

    /// Gate matrices at the given parameters, in application order.
    pub fn matrices(&self, values: &[f64]) -> Vec<DMatrix<f64>> {
        self.gates.iter().map(|g| reference_matrix(g.kind, &g.params(values)).expect("validated gate")).collect()
    }

    pub fn apply(&self, state: &mut StateVector, values: &[f64]) -> Result<()> {
        self.check(state, values)?;
        for (g, m) in self.gates.iter().zip(self.matrices(values)) {
            apply_local(state, &m, g.local_qubits())?;
        }
        Ok(())
    }

    /// `U(values)|input⟩`.
    pub fn run(&self, input: &StateVector, values: &[f64]) -> Result<StateVector> {
        let mut s = input.clone();
        self.apply(&mut s, values)?;
        Ok(s)
    }

    /// Same circuit with gate `index` removed.
    pub fn without_gate(&self, index: usize) -> Circuit {
        let mut c = self.clone();
        c.gates.remove(index);
        c
    }

    /// `∂U_gate/∂values[slot]` local matrix for a gate that reads `slot`.
    pub fn gate_derivative(&self, gate: &GateInstance, values: &[f64], slot: usize) -> Result<DMatrix<f64>> {
        let j = gate.slots().position(|s| s == slot).ok_or_else(|| Error::Invalid(format!("gate does not read slot {slot}")))?;
        derivative_matrix(gate.kind, &gate.params(values), j)
    }

    pub fn stats(&self, decompose: bool) -> CircuitStats {
        circuit_stats(&self.gates, decompose)
    }

    /// Rewrites every gate with a catalogued decomposition into elementary
    /// gates. Each parametrized elementary gate gets its own slot, initialized
    /// to the angle it takes at `values`. Gates without a decomposition keep
    /// their parameters in fresh slots.
    pub fn decompose(&self, values: &[f64]) -> Result<(Circuit, Vec<f64>)> {
        let mut gates = Vec::new();
        let mut out = Vec::new();
        for g in &self.gates {
            for (kind, qubits, params) in flatten(g.kind, &g.qubits, &g.params(values)) {
                if kind.n_params() == 0 {
                    gates.push(GateInstance::constant(kind, qubits));
                } else {
                    gates.push(GateInstance::slotted(kind, qubits, out.len()));
                    out.extend(params);
                }
            }
        }
        Ok((Circuit::new(self.n_qubits, out.len(), gates)?, out))
    }
}

/// Recursively expands a gate into elementary gates where a decomposition is
/// catalogued; leaves `F` and `Hamming8` intact.
fn flatten(kind: GateKind, qubits: &[usize], params: &[f64]) -> Vec<(GateKind, Vec<usize>, Vec<f64>)> {
    if kind.is_elementary() {
        return vec![(kind, qubits.to_vec(), params.to_vec())];
    }
    let Ok(dec) = decomposition(kind) else {
        return vec![(kind, qubits.to_vec(), params.to_vec())];
    };
    dec.steps
        .iter()
        .flat_map(|s| {
            let q: Vec<usize> = s.wires.iter().map(|&w| qubits[w]).collect();
            let a: Vec<f64> = s.angle.iter().map(|a| a.eval(params)).collect();
            flatten(s.kind, &q, &a)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitStats {
    pub depth: usize,
    pub two_qubit_count: usize,
    pub one_qubit_count: usize,
}

/// Greedy ASAP depth and gate counts, optionally after expanding every gate
/// into its primary decomposition. Gates of arity ≥ 2 count as multi-qubit.
pub fn circuit_stats(gates: &[GateInstance], decompose: bool) -> CircuitStats {
    let wires: Vec<Vec<usize>> = if decompose {
        gates
            .iter()
            .flat_map(|g| {
                let zeros = vec![0.0; g.kind.n_params()];
                flatten(g.kind, &g.qubits, &zeros).into_iter().map(|(_, q, _)| q)
            })
            .collect()
    } else {
        gates.iter().map(|g| g.qubits.clone()).collect()
    };
    let n = wires.iter().flatten().map(|&q| q + 1).max().unwrap_or(0);
    let (depth, two_qubit_count, one_qubit_count) = schedule(n, wires.iter().map(|w| w.as_slice()));
    CircuitStats { depth, two_qubit_count, one_qubit_count }
}
