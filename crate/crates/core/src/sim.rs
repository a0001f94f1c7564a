//! Real-amplitude statevectors, dense small-gate application and real Pauli
//! operators.
//!
//! Basis index bit `k` is the occupation of qubit `k`. A gate acting on the
//! qubit tuple `(q0, q1, ..)` reads `q0` as the most significant bit of its
//! local index.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest gate arity handled by the stride kernel.
pub const MAX_ARITY: usize = 4;

/// Terms with smaller magnitude are dropped when a [`PauliSum`] is canonicalized.
pub const ZERO_CUTOFF: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<f64>,
}

impl StateVector {
    pub fn zero(n_qubits: usize) -> Self {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let mut amplitudes = vec![0.0; 1 << n_qubits];
        amplitudes[index] = 1.0;
        Self { n_qubits, amplitudes }
    }

    pub fn from_amplitudes(n_qubits: usize, amplitudes: Vec<f64>) -> Result<Self> {
        if amplitudes.len() != 1 << n_qubits {
            return Err(Error::Dimension { left: amplitudes.len(), right: 1 << n_qubits });
        }
        Ok(Self { n_qubits, amplitudes })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [f64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<f64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.amplitudes.iter_mut().for_each(|a| *a /= n);
        }
    }

    pub fn dot(&self, other: &StateVector) -> f64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a * b).sum()
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: f64, other: &StateVector) {
        for (a, b) in self.amplitudes.iter_mut().zip(&other.amplitudes) {
            *a += c * b;
        }
    }

    pub fn scale(&mut self, c: f64) {
        self.amplitudes.iter_mut().for_each(|a| *a *= c);
    }
}

/// A real orthogonal gate matrix on at most [`MAX_ARITY`] qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct GateMatrix {
    arity: usize,
    m: DMatrix<f64>,
}

impl GateMatrix {
    /// Wraps `m`, checking shape and `MᵀM = I` within 1e-12.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let arity = arity_of(&m)?;
        let dev = orthogonality_defect(&m);
        if dev > 1e-12 {
            return Err(Error::NotOrthogonal(dev));
        }
        Ok(Self { arity, m })
    }

    pub fn identity(arity: usize) -> Self {
        Self { arity, m: DMatrix::identity(1 << arity, 1 << arity) }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn transpose(&self) -> Self {
        Self { arity: self.arity, m: self.m.transpose() }
    }
}

pub fn orthogonality_defect(m: &DMatrix<f64>) -> f64 {
    let p = m.transpose() * m;
    (p - DMatrix::identity(m.nrows(), m.ncols())).amax()
}

fn arity_of(m: &DMatrix<f64>) -> Result<usize> {
    let d = m.nrows();
    if d != m.ncols() || !d.is_power_of_two() || d < 2 {
        return Err(Error::Dimension { left: m.nrows(), right: m.ncols() });
    }
    let k = d.trailing_zeros() as usize;
    if k > MAX_ARITY {
        return Err(Error::Arity { expected: MAX_ARITY, got: k });
    }
    Ok(k)
}

fn check_qubits(qubits: &[usize], n_qubits: usize) -> Result<()> {
    let mut seen = 0u64;
    for &q in qubits {
        if q >= n_qubits || seen & (1 << q) != 0 {
            return Err(Error::Qubits { qubits: qubits.to_vec(), n_qubits });
        }
        seen |= 1 << q;
    }
    Ok(())
}

/// Applies an orthogonal gate in place.
pub fn apply_gate(state: &mut StateVector, gate: &GateMatrix, qubits: &[usize]) -> Result<()> {
    if gate.arity != qubits.len() {
        return Err(Error::Arity { expected: gate.arity, got: qubits.len() });
    }
    apply_local(state, &gate.m, qubits)
}

/// Applies an arbitrary real `2^k × 2^k` matrix to the listed qubits in place.
/// Used for gates and for their parameter derivatives.
pub fn apply_local(state: &mut StateVector, m: &DMatrix<f64>, qubits: &[usize]) -> Result<()> {
    let k = arity_of(m)?;
    if k != qubits.len() {
        return Err(Error::Arity { expected: k, got: qubits.len() });
    }
    check_qubits(qubits, state.n_qubits)?;
    let dim = 1usize << k;
    let mut offsets = [0usize; 1 << MAX_ARITY];
    let mut mask = 0usize;
    for (l, off) in offsets.iter_mut().enumerate().take(dim) {
        for (i, &q) in qubits.iter().enumerate() {
            if (l >> (k - 1 - i)) & 1 == 1 {
                *off |= 1 << q;
            }
        }
    }
    for &q in qubits {
        mask |= 1 << q;
    }
    let mut buf_in = [0.0f64; 1 << MAX_ARITY];
    let amps = &mut state.amplitudes;
    for base in 0..amps.len() {
        if base & mask != 0 {
            continue;
        }
        for l in 0..dim {
            buf_in[l] = amps[base | offsets[l]];
        }
        for r in 0..dim {
            let mut acc = 0.0;
            for c in 0..dim {
                acc += m[(r, c)] * buf_in[c];
            }
            amps[base | offsets[r]] = acc;
        }
    }
    Ok(())
}

pub fn overlap(a: &StateVector, b: &StateVector) -> Result<f64> {
    if a.n_qubits != b.n_qubits {
        return Err(Error::Dimension { left: a.n_qubits, right: b.n_qubits });
    }
    Ok(a.dot(b))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

/// Tensor product of single-qubit Paulis, stored as X and Z bit masks
/// (Y sets both bits).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PauliString {
    pub x: u64,
    pub z: u64,
}

impl PauliString {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn from_factors(factors: &[(usize, Pauli)]) -> Self {
        let mut s = Self::default();
        for &(q, p) in factors {
            s = s.with(q, p);
        }
        s
    }

    /// Replaces the factor on qubit `q`.
    pub fn with(mut self, q: usize, p: Pauli) -> Self {
        let b = 1u64 << q;
        self.x &= !b;
        self.z &= !b;
        match p {
            Pauli::X => self.x |= b,
            Pauli::Y => {
                self.x |= b;
                self.z |= b
            }
            Pauli::Z => self.z |= b,
        }
        self
    }

    pub fn factors(&self) -> BTreeMap<usize, Pauli> {
        let mut out = BTreeMap::new();
        let support = self.x | self.z;
        for q in 0..64 {
            if support >> q & 1 == 1 {
                let p = match (self.x >> q & 1, self.z >> q & 1) {
                    (1, 0) => Pauli::X,
                    (1, 1) => Pauli::Y,
                    _ => Pauli::Z,
                };
                out.insert(q, p);
            }
        }
        out
    }

    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    pub fn max_qubit(&self) -> Option<usize> {
        let s = self.x | self.z;
        (s != 0).then(|| 63 - s.leading_zeros() as usize)
    }

    /// `P|j⟩ = sign · |i⟩`, returned as `(i, sign)`, for an even-Y string.
    #[inline]
    pub fn act(&self, j: usize) -> (usize, f64) {
        (j ^ self.x as usize, self.sign(j))
    }

    /// Real sign of `⟨i ⊕ x| P |i⟩` for an even-Y string.
    #[inline]
    pub fn sign(&self, index: usize) -> f64 {
        let parity = ((index as u64) & self.z).count_ones() + self.y_count() / 2;
        if parity % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let factors = self.factors();
        if factors.is_empty() {
            return write!(f, "I");
        }
        let parts: Vec<String> = factors.iter().map(|(q, p)| format!("{p:?}{q}")).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Real linear combination of Pauli strings.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PauliSum {
    pub n_qubits: usize,
    pub terms: Vec<(f64, PauliString)>,
}

impl PauliSum {
    pub fn new(n_qubits: usize) -> Self {
        Self { n_qubits, terms: Vec::new() }
    }

    pub fn identity(n_qubits: usize, c: f64) -> Self {
        let mut s = Self::new(n_qubits);
        s.push(c, PauliString::identity());
        s
    }

    pub fn push(&mut self, c: f64, p: PauliString) {
        self.terms.push((c, p));
    }

    pub fn add(&mut self, other: &PauliSum) {
        self.n_qubits = self.n_qubits.max(other.n_qubits);
        self.terms.extend_from_slice(&other.terms);
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { n_qubits: self.n_qubits, terms: self.terms.iter().map(|&(a, p)| (a * c, p)).collect() }
    }

    /// Merges duplicate strings and drops negligible coefficients; terms are
    /// left sorted by string.
    pub fn canonicalize(&mut self) {
        let mut acc: BTreeMap<PauliString, f64> = BTreeMap::new();
        for &(c, p) in &self.terms {
            *acc.entry(p).or_insert(0.0) += c;
        }
        self.terms = acc.into_iter().filter(|(_, c)| c.abs() > ZERO_CUTOFF).map(|(p, c)| (c, p)).collect();
    }

    pub fn canonical(mut self) -> Self {
        self.canonicalize();
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (_, p) in &self.terms {
            if p.y_count() % 2 == 1 {
                return Err(Error::OddY(p.to_string()));
            }
            if let Some(q) = p.max_qubit() {
                if q >= self.n_qubits {
                    return Err(Error::Qubits { qubits: vec![q], n_qubits: self.n_qubits });
                }
            }
        }
        Ok(())
    }

    /// Returns `O|ψ⟩`.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        self.validate()?;
        if self.n_qubits > state.n_qubits {
            return Err(Error::Dimension { left: self.n_qubits, right: state.n_qubits });
        }
        let amps = state.amplitudes();
        let mut out = vec![0.0; amps.len()];
        for &(c, p) in &self.terms {
            let xm = p.x as usize;
            for (i, &a) in amps.iter().enumerate() {
                if a != 0.0 {
                    out[i ^ xm] += c * p.sign(i) * a;
                }
            }
        }
        StateVector::from_amplitudes(state.n_qubits, out)
    }

    /// Dense matrix on `n` qubits; intended for small-system checks.
    pub fn to_dense(&self, n: usize) -> Result<DMatrix<f64>> {
        self.validate()?;
        let d = 1usize << n;
        let mut m = DMatrix::zeros(d, d);
        for &(c, p) in &self.terms {
            for i in 0..d {
                m[(i ^ p.x as usize, i)] += c * p.sign(i);
            }
        }
        Ok(m)
    }

    /// Matrix of `O` restricted to the span of the listed basis states
    /// (rows and columns in list order). Off-list images are dropped.
    pub fn restricted(&self, basis: &[usize]) -> Result<DMatrix<f64>> {
        self.validate()?;
        let pos: std::collections::HashMap<usize, usize> = basis.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let n = basis.len();
        let mut m = DMatrix::zeros(n, n);
        for (col, &j) in basis.iter().enumerate() {
            for &(c, p) in &self.terms {
                let (i, s) = p.act(j);
                if let Some(&row) = pos.get(&i) {
                    m[(row, col)] += c * s;
                }
            }
        }
        Ok(m)
    }

    /// Matrix element `⟨i|O|j⟩`.
    pub fn element(&self, i: usize, j: usize) -> f64 {
        self.terms.iter().filter(|(_, p)| j ^ p.x as usize == i).map(|&(c, p)| c * p.sign(j)).sum()
    }

    pub fn identity_coefficient(&self) -> f64 {
        self.terms.iter().filter(|(_, p)| p.x == 0 && p.z == 0).map(|(c, _)| c).sum()
    }
}

/// `⟨ψ|O|ψ⟩`.
pub fn expectation(state: &StateVector, op: &PauliSum) -> Result<f64> {
    op.validate()?;
    let amps = state.amplitudes();
    let mut total = 0.0;
    for &(c, p) in &op.terms {
        let xm = p.x as usize;
        let mut acc = 0.0;
        for (i, &a) in amps.iter().enumerate() {
            if a != 0.0 {
                acc += amps[i ^ xm] * p.sign(i) * a;
            }
        }
        total += c * acc;
    }
    Ok(total)
}
