//! Layered gate fabrics: expansion to gate lists, reference states and the
//! two standard initializations.
//!
//! Fermionic fabrics act on `2M` interleaved qubits (`2p = pα`, `2p+1 = pβ`).
//! A gate on spatial orbitals `(p, p+1)` reads qubits `(2p, 2p+1, 2p+2, 2p+3)`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, GateInstance};
use crate::error::{Error, Result};
use crate::gates::GateKind;
use crate::sim::StateVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FabricKind {
    Q,
    F,
    #[serde(rename = "OR_only")]
    OrOnly,
    #[serde(rename = "PX_only")]
    PxOnly,
    #[serde(rename = "SO4")]
    So4,
    HammingGivens,
    Hamming8,
}

impl FabricKind {
    pub fn is_fermionic(self) -> bool {
        matches!(self, FabricKind::Q | FabricKind::F | FabricKind::OrOnly | FabricKind::PxOnly)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PiGate {
    #[default]
    #[serde(rename = "identity")]
    Identity,
    #[serde(rename = "OR_pi")]
    OrPi,
    #[serde(rename = "OFSWAP")]
    Ofswap,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateRole {
    #[serde(rename = "Pi")]
    Pi,
    #[serde(rename = "PX")]
    Px,
    #[serde(rename = "OR")]
    Or,
}

fn default_order() -> [GateRole; 3] {
    [GateRole::Pi, GateRole::Px, GateRole::Or]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FabricSpec {
    pub kind: FabricKind,
    /// Spatial orbitals for fermionic kinds, qubits otherwise.
    #[serde(rename = "M")]
    pub m: usize,
    pub n_layers: usize,
    #[serde(default)]
    pub pi_gate: PiGate,
    #[serde(default = "default_order")]
    pub gate_order: [GateRole; 3],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    A,
    B,
}

/// Position of one flat parameter inside the fabric.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub layer: usize,
    pub position: usize,
    pub local: usize,
    pub kind: GateKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub values: Vec<f64>,
    pub layout: Vec<Slot>,
}

impl ParamVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Flat index of `(layer, position, local)`.
    pub fn index(&self, layer: usize, position: usize, local: usize) -> Option<usize> {
        self.layout.iter().position(|s| s.layer == layer && s.position == position && s.local == local)
    }

    /// Flat indices whose gate is `kind` and local slot is `local`.
    pub fn slots_of(&self, kind: GateKind, local: usize) -> Vec<usize> {
        self.layout.iter().enumerate().filter(|(_, s)| s.kind == kind && s.local == local).map(|(i, _)| i).collect()
    }
}

impl FabricSpec {
    pub fn new(kind: FabricKind, m: usize, n_layers: usize) -> Self {
        Self { kind, m, n_layers, pi_gate: PiGate::Identity, gate_order: default_order() }
    }

    pub fn with_pi(mut self, pi: PiGate) -> Self {
        self.pi_gate = pi;
        self
    }

    pub fn n_qubits(&self) -> usize {
        if self.kind.is_fermionic() {
            2 * self.m
        } else {
            self.m
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_layers == 0 {
            return Err(Error::Fabric("n_layers must be at least 1".into()));
        }
        let min = match self.kind {
            FabricKind::Hamming8 => 3,
            _ => 2,
        };
        if self.m < min {
            return Err(Error::Fabric(format!("{:?} needs M >= {min}, got {}", self.kind, self.m)));
        }
        if self.n_qubits() > 24 {
            return Err(Error::Fabric(format!("{} qubits exceeds the simulator bound", self.n_qubits())));
        }
        if self.pi_gate != PiGate::Identity && !matches!(self.kind, FabricKind::Q | FabricKind::F) {
            return Err(Error::Fabric(format!("pi_gate applies only to Q and F fabrics, not {:?}", self.kind)));
        }
        let mut order = self.gate_order.to_vec();
        order.sort_by_key(|r| *r as u8);
        order.dedup();
        if order.len() != 3 {
            return Err(Error::Fabric("gate_order must be a permutation of (Pi, PX, OR)".into()));
        }
        Ok(())
    }

    /// Starting units (orbitals or qubits) of each gate in layer `l`.
    fn starts(&self, layer: usize) -> Vec<usize> {
        let n = self.m;
        let (width, offset) = match self.kind {
            FabricKind::Hamming8 => (3, layer % 3),
            _ => (2, layer % 2),
        };
        let mut out: Vec<usize> = (offset..).step_by(width).take_while(|s| s + width <= n).collect();
        if out.is_empty() {
            // two units admit a single placement; every layer reuses it
            out.push(0);
        }
        out
    }

    fn element(&self, first: usize, next_slot: &mut usize) -> Vec<GateInstance> {
        let mut slot = |k: GateKind| {
            let s = *next_slot;
            *next_slot += k.n_params();
            s
        };
        let quad = || (2 * first..2 * first + 4).collect::<Vec<_>>();
        let pi = || match self.pi_gate {
            PiGate::Identity => None,
            PiGate::OrPi => Some(GateInstance::fixed(GateKind::QnpOr, quad(), PI)),
            PiGate::Ofswap => Some(GateInstance::constant(GateKind::Ofswap, quad())),
        };
        match self.kind {
            FabricKind::Q => {
                let theta = slot(GateKind::QnpPx);
                let phi = slot(GateKind::QnpOr);
                let mut out = Vec::new();
                for role in self.gate_order {
                    match role {
                        GateRole::Pi => out.extend(pi()),
                        GateRole::Px => out.push(GateInstance::slotted(GateKind::QnpPx, quad(), theta)),
                        GateRole::Or => out.push(GateInstance::slotted(GateKind::QnpOr, quad(), phi)),
                    }
                }
                out
            }
            FabricKind::F => {
                let f = GateInstance::slotted(GateKind::F, quad(), slot(GateKind::F));
                if self.gate_order[0] == GateRole::Pi {
                    pi().into_iter().chain([f]).collect()
                } else {
                    std::iter::once(f).chain(pi()).collect()
                }
            }
            FabricKind::OrOnly => vec![GateInstance::slotted(GateKind::QnpOr, quad(), slot(GateKind::QnpOr))],
            FabricKind::PxOnly => vec![GateInstance::slotted(GateKind::QnpPx, quad(), slot(GateKind::QnpPx))],
            FabricKind::So4 => vec![GateInstance::slotted(GateKind::So4, vec![first, first + 1], slot(GateKind::So4))],
            FabricKind::HammingGivens => {
                vec![GateInstance::slotted(GateKind::HammingGivens, vec![first, first + 1], slot(GateKind::HammingGivens))]
            }
            FabricKind::Hamming8 => {
                vec![GateInstance::slotted(GateKind::Hamming8, vec![first, first + 1, first + 2], slot(GateKind::Hamming8))]
            }
        }
    }

    /// Gate list with parameter layout.
    pub fn expand_with_layout(&self) -> Result<(Vec<GateInstance>, Vec<Slot>)> {
        self.validate()?;
        let mut gates = Vec::new();
        let mut layout = Vec::new();
        let mut next = 0;
        for layer in 0..self.n_layers {
            for (position, first) in self.starts(layer).into_iter().enumerate() {
                for g in self.element(first, &mut next) {
                    for (local, idx) in g.slots().enumerate() {
                        let slot = Slot { layer, position, local: local + local_offset(self.kind, g.kind), kind: g.kind };
                        if layout.len() <= idx {
                            layout.resize(idx + 1, slot);
                        }
                        layout[idx] = slot;
                    }
                    gates.push(g);
                }
            }
        }
        Ok((gates, layout))
    }

    pub fn expand(&self) -> Result<Vec<GateInstance>> {
        Ok(self.expand_with_layout()?.0)
    }

    pub fn circuit(&self) -> Result<Circuit> {
        let (gates, layout) = self.expand_with_layout()?;
        Circuit::new(self.n_qubits(), layout.len(), gates)
    }

    pub fn n_params(&self) -> Result<usize> {
        Ok(self.expand_with_layout()?.1.len())
    }

    pub fn zero_params(&self) -> Result<ParamVector> {
        let (_, layout) = self.expand_with_layout()?;
        Ok(ParamVector { values: vec![0.0; layout.len()], layout })
    }

    /// Uniform parameters in `[-scale, scale]`.
    pub fn random_params(&self, seed: u64, scale: f64) -> Result<ParamVector> {
        let mut p = self.zero_params()?;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        p.values.iter_mut().for_each(|v| *v = rng.gen_range(-scale..=scale));
        Ok(p)
    }
}

/// Q elements carry (θ, φ) as local slots 0 and 1 even though they are
/// emitted as separate gates.
fn local_offset(fabric: FabricKind, gate: GateKind) -> usize {
    match (fabric, gate) {
        (FabricKind::Q, GateKind::QnpOr) => 1,
        _ => 0,
    }
}

/// Determinant with the `n_alpha` lowest α and `n_beta` lowest β orbitals
/// occupied.
pub fn reference_state(m: usize, n_alpha: usize, n_beta: usize) -> Result<StateVector> {
    if n_alpha > m || n_beta > m {
        return Err(Error::Invalid(format!("occupations ({n_alpha}, {n_beta}) exceed M = {m}")));
    }
    if 2 * m > 24 {
        return Err(Error::Invalid(format!("M = {m} exceeds the simulator bound")));
    }
    Ok(StateVector::basis(2 * m, reference_index(n_alpha, n_beta)))
}

pub fn reference_index(n_alpha: usize, n_beta: usize) -> usize {
    (0..n_alpha).map(|p| 1 << (2 * p)).sum::<usize>() + (0..n_beta).map(|p| 1 << (2 * p + 1)).sum::<usize>()
}

/// Strategy A: θ = 0, φ = π/2, Π = QNP_OR(π). Strategy B: θ = 0, φ = π,
/// Π = identity. F gates start at the point where they equal QNP_OR(φ).
/// Returns the spec with Π forced accordingly.
pub fn initialize(spec: &FabricSpec, strategy: Strategy) -> Result<(FabricSpec, ParamVector)> {
    let (phi, pi) = match strategy {
        Strategy::A => (FRAC_PI_2, PiGate::OrPi),
        Strategy::B => (PI, PiGate::Identity),
    };
    if !matches!(spec.kind, FabricKind::Q | FabricKind::F) {
        return Err(Error::Fabric(format!("initialization strategies are defined for Q and F fabrics, not {:?}", spec.kind)));
    }
    let spec = FabricSpec { pi_gate: pi, ..spec.clone() };
    let mut p = spec.zero_params()?;
    let f_point = [phi, phi, 0.0, phi * FRAC_1_SQRT_2, -phi * FRAC_1_SQRT_2];
    for (v, s) in p.values.iter_mut().zip(&p.layout) {
        *v = match s.kind {
            GateKind::QnpOr => phi,
            GateKind::F => f_point[s.local],
            _ => 0.0,
        };
    }
    Ok((spec, p))
}
