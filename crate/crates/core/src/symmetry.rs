//! Number and total-spin operators, per-sector CSF bases, irrep counting,
//! Haar-random in-irrep states and the edge-case classifier for Q fabrics.
//!
//! `S` is twice the physical spin: `Ŝ²` has eigenvalue `S/2 (S/2 + 1)`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{Pauli, PauliString, PauliSum, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Spin {
    Alpha,
    Beta,
}

pub fn alpha_qubit(p: usize) -> usize {
    2 * p
}

pub fn beta_qubit(p: usize) -> usize {
    2 * p + 1
}

/// `N̂σ = (M/2) I − Σ_p Z_pσ / 2`.
pub fn number_operator(m: usize, spin: Spin) -> PauliSum {
    let mut op = PauliSum::identity(2 * m, m as f64 / 2.0);
    for p in 0..m {
        let q = match spin {
            Spin::Alpha => alpha_qubit(p),
            Spin::Beta => beta_qubit(p),
        };
        op.push(-0.5, PauliString::from_factors(&[(q, Pauli::Z)]));
    }
    op
}

const HOPPING_SIGNS: [([Pauli; 4], f64); 8] = {
    use Pauli::{X, Y};
    [
        ([X, X, X, X], -1.0),
        ([X, X, Y, Y], -1.0),
        ([X, Y, X, Y], -1.0),
        ([X, Y, Y, X], 1.0),
        ([Y, X, X, Y], 1.0),
        ([Y, X, Y, X], -1.0),
        ([Y, Y, X, X], -1.0),
        ([Y, Y, Y, Y], -1.0),
    ]
};

/// Pauli expansion of `Ŝ²` under α-then-β Jordan-Wigner strings. The four
/// factors of each exchange term sit on `(pα, qα, pβ, qβ)` with `Z` on the
/// intervening same-spin qubits.
pub fn s_squared_pauli(m: usize) -> PauliSum {
    let n = 2 * m;
    let z = |qs: &[usize]| PauliString::from_factors(&qs.iter().map(|&q| (q, Pauli::Z)).collect::<Vec<_>>());
    let mut op = PauliSum::identity(n, 3.0 * m as f64 / 8.0);
    for p in 0..m {
        op.push(-3.0 / 8.0, z(&[alpha_qubit(p), beta_qubit(p)]));
    }
    for p in 0..m {
        for q in p + 1..m {
            op.push(0.125, z(&[alpha_qubit(p), alpha_qubit(q)]));
            op.push(0.125, z(&[beta_qubit(p), beta_qubit(q)]));
            op.push(-0.125, z(&[alpha_qubit(p), beta_qubit(q)]));
            op.push(-0.125, z(&[beta_qubit(p), alpha_qubit(q)]));
            let mut interior = PauliString::identity();
            for r in p + 1..q {
                interior = interior.with(alpha_qubit(r), Pauli::Z).with(beta_qubit(r), Pauli::Z);
            }
            for (f, sign) in HOPPING_SIGNS {
                let s = interior.with(alpha_qubit(p), f[0]).with(alpha_qubit(q), f[1]).with(beta_qubit(p), f[2]).with(beta_qubit(q), f[3]);
                op.push(sign * 0.125, s);
            }
        }
    }
    op.canonical()
}

/// `S/2 (S/2 + 1)`.
pub fn s_squared_eigenvalue(s: usize) -> f64 {
    let h = s as f64 / 2.0;
    h * (h + 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IrrepKey {
    #[serde(rename = "M")]
    pub m: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
    #[serde(rename = "S")]
    pub s: usize,
}

impl IrrepKey {
    pub fn new(m: usize, n_alpha: usize, n_beta: usize, s: usize) -> Self {
        Self { m, n_alpha, n_beta, s }
    }

    pub fn n_electrons(&self) -> usize {
        self.n_alpha + self.n_beta
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_electrons();
        let bad = |why: &str| Err(Error::Irrep(format!("{self:?}: {why}")));
        if self.m == 0 {
            return bad("M must be positive");
        }
        if self.n_alpha > self.m || self.n_beta > self.m {
            return bad("occupation exceeds M");
        }
        if self.s % 2 != n % 2 {
            return bad("S and N must have equal parity");
        }
        if self.s < self.n_alpha.abs_diff(self.n_beta) {
            return bad("S below |Nα − Nβ|");
        }
        if self.s > n.min(2 * self.m - n) {
            return bad("S exceeds the open-shell bound");
        }
        Ok(())
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

/// Number of CSFs in an irrep:
/// `(S+1)/(M+1) · C(M+1, (N−S)/2) · C(M+1, (N+S)/2 + 1)`.
pub fn irrep_dimension(key: &IrrepKey) -> Result<usize> {
    key.validate()?;
    let (m, n, s) = (key.m, key.n_electrons(), key.s);
    let d = (s as u128 + 1) * binomial(m + 1, (n - s) / 2) * binomial(m + 1, (n + s) / 2 + 1) / (m as u128 + 1);
    usize::try_from(d).map_err(|_| Error::Irrep(format!("{key:?}: dimension overflows")))
}

/// All nonempty `(Nα, Nβ, S)` keys for `M` orbitals with their dimensions,
/// ordered by `(Nα, Nβ, S)`.
pub fn enumerate_irreps(m: usize) -> Vec<(IrrepKey, usize)> {
    let mut out = Vec::new();
    for na in 0..=m {
        for nb in 0..=m {
            let n = na + nb;
            let mut s = na.abs_diff(nb);
            while s <= n.min(2 * m - n) {
                let key = IrrepKey::new(m, na, nb, s);
                if let Ok(d) = irrep_dimension(&key) {
                    if d > 0 {
                        out.push((key, d));
                    }
                }
                s += 2;
            }
        }
    }
    out
}

/// Sorted basis indices with `n_alpha` α and `n_beta` β electrons.
pub fn sector_dets(m: usize, n_alpha: usize, n_beta: usize) -> Vec<usize> {
    let amask: usize = (0..m).map(|p| 1 << alpha_qubit(p)).sum();
    let bmask: usize = (0..m).map(|p| 1 << beta_qubit(p)).sum();
    (0..1usize << (2 * m))
        .filter(|&i| (i & amask).count_ones() as usize == n_alpha && (i & bmask).count_ones() as usize == n_beta)
        .collect()
}

/// CSFs of one `(Nα, Nβ)` sector grouped by `S`. Each block's columns are
/// vectors over `det_indices`.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorBasis {
    pub m: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
    pub det_indices: Vec<usize>,
    pub csf_blocks: BTreeMap<usize, DMatrix<f64>>,
}

impl SectorBasis {
    pub fn block(&self, s: usize) -> Result<&DMatrix<f64>> {
        self.csf_blocks.get(&s).ok_or_else(|| Error::Irrep(format!("no S = {s} states in sector ({}, {})", self.n_alpha, self.n_beta)))
    }

    /// Embeds sector coefficients into a full statevector.
    pub fn embed(&self, coeffs: &DVector<f64>) -> StateVector {
        let mut out = vec![0.0; 1 << (2 * self.m)];
        for (&i, &c) in self.det_indices.iter().zip(coeffs.iter()) {
            out[i] = c;
        }
        StateVector::from_amplitudes(2 * self.m, out).expect("length matches")
    }

    /// Sector coefficients of a full statevector.
    pub fn restrict(&self, state: &StateVector) -> DVector<f64> {
        DVector::from_iterator(self.det_indices.len(), self.det_indices.iter().map(|&i| state.amplitudes()[i]))
    }

    pub fn dimensions(&self) -> BTreeMap<usize, usize> {
        self.csf_blocks.iter().map(|(&s, b)| (s, b.ncols())).collect()
    }
}

/// Orthonormal basis of the column space of a projector by pivoted
/// Gram-Schmidt (largest residual first, lowest index on ties).
fn projector_basis(p: &DMatrix<f64>, rank: usize) -> DMatrix<f64> {
    let d = p.nrows();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(rank);
    let mut residual: Vec<DVector<f64>> = (0..d).map(|j| p.column(j).into_owned()).collect();
    for _ in 0..rank {
        let (j, _) =
            residual
                .iter()
                .enumerate()
                .map(|(j, r)| (j, r.norm()))
                .fold((0, -1.0), |best, cur| if cur.1 > best.1 + 1e-12 { cur } else { best });
        let v = &residual[j] / residual[j].norm();
        for r in residual.iter_mut() {
            let c = v.dot(r);
            r.axpy(-c, &v, 1.0);
        }
        basis.push(v);
    }
    // reorthogonalize once and fix signs
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(rank);
    for mut v in basis {
        for u in &out {
            let c = u.dot(&v);
            v.axpy(-c, u, 1.0);
        }
        v /= v.norm();
        out.push(fix_sign(v));
    }
    out.sort_by_key(|v| v.iter().position(|x| x.abs() > 1e-10).unwrap_or(d));
    DMatrix::from_columns(&out)
}

/// Largest-magnitude component made positive (first such on ties).
pub fn fix_sign(mut v: DVector<f64>) -> DVector<f64> {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() + 1e-12 {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.neg_mut();
    }
    v
}

pub fn csf_basis(m: usize, n_alpha: usize, n_beta: usize) -> Result<SectorBasis> {
    if m > 7 {
        return Err(Error::Irrep(format!("dense sector diagonalization is limited to M <= 7, got {m}")));
    }
    let dets = sector_dets(m, n_alpha, n_beta);
    if dets.is_empty() {
        return Err(Error::Irrep(format!("sector ({n_alpha}, {n_beta}) is empty for M = {m}")));
    }
    let s2 = s_squared_pauli(m).restricted(&dets)?;
    let eig = s2.symmetric_eigen();
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        let s = ((1.0 + 4.0 * lam).max(0.0).sqrt() - 1.0).round() as usize;
        groups.entry(s).or_default().push(k);
    }
    let mut csf_blocks = BTreeMap::new();
    for (s, cols) in groups {
        let v = DMatrix::from_columns(&cols.iter().map(|&k| eig.eigenvectors.column(k)).collect::<Vec<_>>());
        let p = &v * v.transpose();
        csf_blocks.insert(s, projector_basis(&p, cols.len()));
    }
    Ok(SectorBasis { m, n_alpha, n_beta, det_indices: dets, csf_blocks })
}

/// Gaussian coefficients in the CSF basis, normalized and mapped back to
/// determinants. ChaCha20 seeded with `seed`.
pub fn haar_random_irrep_state(key: &IrrepKey, seed: u64) -> Result<StateVector> {
    key.validate()?;
    let basis = csf_basis(key.m, key.n_alpha, key.n_beta)?;
    let block = basis.block(key.s)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut c = DVector::from_iterator(block.ncols(), (0..block.ncols()).map(|_| StandardNormal.sample(&mut rng)));
    c /= c.norm();
    Ok(basis.embed(&(block * c)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeCase {
    pub universal_for_q: bool,
    pub unconstrained: IrrepKey,
}

/// Removes the `S` unpaired electrons (larger spin count first, then pairs)
/// to get the unconstrained singlet irrep on `M − S` orbitals, and flags
/// irreps whose unconstrained image is all holes or all particles.
pub fn classify_edge_case(key: &IrrepKey) -> Result<EdgeCase> {
    key.validate()?;
    let (mut a, mut b) = (key.n_alpha, key.n_beta);
    let mut left = key.s;
    while left > 0 {
        if a > b {
            a -= 1;
            left -= 1;
        } else if b > a {
            b -= 1;
            left -= 1;
        } else {
            a -= 1;
            b -= 1;
            left -= 2;
        }
    }
    let rest = key.m - key.s;
    let unconstrained = IrrepKey::new(rest, a, b, 0);
    let edge = a == 0 || a == rest;
    let universal_for_q = !(key.s >= 2 && rest >= 2 && edge);
    Ok(EdgeCase { universal_for_q, unconstrained })
}
