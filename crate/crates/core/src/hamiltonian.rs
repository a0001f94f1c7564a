//! Fermion operators under the α-then-β Jordan-Wigner mapping, integral-based
//! Hamiltonians, model Hamiltonians and the per-irrep exact ground state.
//!
//! JW position of `pα` is `p`, of `pβ` is `M + p`; the qubit of `pα` is `2p`
//! and of `pβ` is `2p + 1`.

use std::collections::{BTreeMap, HashMap};
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{PauliString, PauliSum, StateVector};
use crate::symmetry::{alpha_qubit, beta_qubit, csf_basis, fix_sign, IrrepKey, Spin};

pub use crate::fcidump::{read_fcidump, write_fcidump};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ladder {
    pub orbital: usize,
    pub spin: Spin,
    pub dagger: bool,
}

impl Ladder {
    pub fn create(orbital: usize, spin: Spin) -> Self {
        Self { orbital, spin, dagger: true }
    }
    pub fn annihilate(orbital: usize, spin: Spin) -> Self {
        Self { orbital, spin, dagger: false }
    }
}

/// Real linear combination of ladder-operator products (leftmost factor acts
/// last).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FermionOp {
    pub terms: Vec<(f64, Vec<Ladder>)>,
}

impl FermionOp {
    pub fn push(&mut self, c: f64, ops: Vec<Ladder>) {
        self.terms.push((c, ops));
    }

    /// `Σσ a†_pσ a_qσ` summed over both spins.
    pub fn excitation(p: usize, q: usize) -> Self {
        let mut f = FermionOp::default();
        for s in [Spin::Alpha, Spin::Beta] {
            f.push(1.0, vec![Ladder::create(p, s), Ladder::annihilate(q, s)]);
        }
        f
    }

    pub fn extend(&mut self, other: FermionOp) {
        self.terms.extend(other.terms);
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        for (_, ops) in &self.terms {
            let mut balance = [0i64; 2];
            for l in ops {
                if l.orbital >= m {
                    return Err(Error::Invalid(format!("orbital {} out of range for M = {m}", l.orbital)));
                }
                balance[(l.spin == Spin::Beta) as usize] += if l.dagger { 1 } else { -1 };
            }
            if balance != [0, 0] {
                return Err(Error::Invalid("fermion term does not conserve per-spin particle number".into()));
            }
        }
        Ok(())
    }
}

/// Pauli string with complex weight; `(x, z)` denotes the Hermitian tensor
/// product with `Y` where both bits are set.
type ComplexTerms = HashMap<PauliString, Complex64>;

fn i_pow(e: i64) -> Complex64 {
    match e.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// `P1 · P2 = phase · P3`.
fn pauli_product(a: PauliString, b: PauliString) -> (Complex64, PauliString) {
    let c = PauliString { x: a.x ^ b.x, z: a.z ^ b.z };
    let e = (a.x & a.z).count_ones() as i64 + (b.x & b.z).count_ones() as i64 + 2 * (a.z & b.x).count_ones() as i64
        - (c.x & c.z).count_ones() as i64;
    (i_pow(e), c)
}

fn ladder_terms(l: Ladder, m: usize) -> [(Complex64, PauliString); 2] {
    let (pos, qubit) = match l.spin {
        Spin::Alpha => (l.orbital, alpha_qubit(l.orbital)),
        Spin::Beta => (m + l.orbital, beta_qubit(l.orbital)),
    };
    let jw_qubit = |j: usize| if j < m { alpha_qubit(j) } else { beta_qubit(j - m) };
    let z: u64 = (0..pos).map(|j| 1u64 << jw_qubit(j)).sum();
    let b = 1u64 << qubit;
    let xs = PauliString { x: b, z };
    let ys = PauliString { x: b, z: z | b };
    // (X ∓ iY)/2 for creation/annihilation
    let s = if l.dagger { -0.5 } else { 0.5 };
    [(Complex64::new(0.5, 0.0), xs), (Complex64::new(0.0, s), ys)]
}

pub fn jordan_wigner(op: &FermionOp, m: usize) -> Result<PauliSum> {
    op.validate(m)?;
    let mut acc: ComplexTerms = HashMap::new();
    for (c, ops) in &op.terms {
        let mut cur: Vec<(Complex64, PauliString)> = vec![(Complex64::new(*c, 0.0), PauliString::identity())];
        for &l in ops {
            let f = ladder_terms(l, m);
            let mut next = Vec::with_capacity(cur.len() * 2);
            for &(ca, pa) in &cur {
                for &(cb, pb) in &f {
                    let (ph, p) = pauli_product(pa, pb);
                    next.push((ca * cb * ph, p));
                }
            }
            cur = next;
        }
        for (c, p) in cur {
            *acc.entry(p).or_default() += c;
        }
    }
    to_real(acc, 2 * m)
}

fn to_real(acc: ComplexTerms, n_qubits: usize) -> Result<PauliSum> {
    let sorted: BTreeMap<PauliString, Complex64> = acc.into_iter().collect();
    let mut out = PauliSum::new(n_qubits);
    for (p, c) in sorted {
        if c.norm() <= 1e-12 {
            continue;
        }
        if c.im.abs() > 1e-12 || p.y_count() % 2 == 1 {
            return Err(Error::OddY(format!("{p} (coefficient {c}); operator is not real symmetric")));
        }
        out.push(c.re, p);
    }
    Ok(out.canonical())
}

/// `Ŝ² = Ŝ₋Ŝ₊ + Ŝz + Ŝz²` as a fermion operator.
pub fn s_squared_fermion(m: usize) -> FermionOp {
    use Spin::{Alpha, Beta};
    let mut f = FermionOp::default();
    let n = |p, s| vec![Ladder::create(p, s), Ladder::annihilate(p, s)];
    for p in 0..m {
        for q in 0..m {
            f.push(1.0, vec![Ladder::create(q, Beta), Ladder::annihilate(q, Alpha), Ladder::create(p, Alpha), Ladder::annihilate(p, Beta)]);
            for (sa, sb, sign) in [(Alpha, Alpha, 1.0), (Beta, Beta, 1.0), (Alpha, Beta, -1.0), (Beta, Alpha, -1.0)] {
                f.push(0.25 * sign, [n(p, sa), n(q, sb)].concat());
            }
        }
        f.push(0.5, n(p, Alpha));
        f.push(-0.5, n(p, Beta));
    }
    f
}

/// One- and two-electron integrals in chemist notation, `g[p,q,r,s] = (pq|rs)`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegralSet {
    pub m: usize,
    pub h: DMatrix<f64>,
    pub g: Vec<f64>,
    pub e_core: f64,
    pub n_electrons: Option<usize>,
    pub ms2: Option<i64>,
}

impl IntegralSet {
    pub fn zeros(m: usize) -> Self {
        Self { m, h: DMatrix::zeros(m, m), g: vec![0.0; m.pow(4)], e_core: 0.0, n_electrons: None, ms2: None }
    }

    #[inline]
    pub fn idx(&self, p: usize, q: usize, r: usize, s: usize) -> usize {
        ((p * self.m + q) * self.m + r) * self.m + s
    }

    pub fn g(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.g[self.idx(p, q, r, s)]
    }

    /// Sets `(pq|rs)` and its seven symmetry images.
    pub fn set_g(&mut self, p: usize, q: usize, r: usize, s: usize, v: f64) {
        for (a, b, c, d) in [(p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r), (r, s, p, q), (s, r, p, q), (r, s, q, p), (s, r, q, p)]
        {
            let i = self.idx(a, b, c, d);
            self.g[i] = v;
        }
    }

    pub fn set_h(&mut self, p: usize, q: usize, v: f64) {
        self.h[(p, q)] = v;
        self.h[(q, p)] = v;
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.m;
        if self.h.shape() != (m, m) || self.g.len() != m.pow(4) {
            return Err(Error::Invalid("integral array shapes do not match M".into()));
        }
        if (&self.h - self.h.transpose()).amax() > 1e-10 {
            return Err(Error::Symmetry((&self.h - self.h.transpose()).amax()));
        }
        for p in 0..m {
            for q in 0..m {
                for r in 0..m {
                    for s in 0..m {
                        let v = self.g(p, q, r, s);
                        for w in [self.g(q, p, r, s), self.g(p, q, s, r), self.g(r, s, p, q)] {
                            if (v - w).abs() > 1e-10 {
                                return Err(Error::Symmetry((v - w).abs()));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Integrals in the rotated orbital basis `φ'_p = Σ_a C[a,p] φ_a`.
    pub fn rotated(&self, c: &DMatrix<f64>) -> IntegralSet {
        let m = self.m;
        let mut out = IntegralSet { h: c.transpose() * &self.h * c, g: vec![0.0; m.pow(4)], ..self.clone() };
        // four quarter transformations
        let mut t = self.g.clone();
        for axis in 0..4 {
            let mut u = vec![0.0; m.pow(4)];
            for idx in 0..m.pow(4) {
                let mut digits = [idx / (m * m * m), idx / (m * m) % m, idx / m % m, idx % m];
                let target = digits[axis];
                let mut acc = 0.0;
                for a in 0..m {
                    digits[axis] = a;
                    acc += c[(a, target)] * t[((digits[0] * m + digits[1]) * m + digits[2]) * m + digits[3]];
                }
                u[idx] = acc;
            }
            t = u;
        }
        out.g = t;
        out
    }
}

/// `H = E_core + Σ h_pq a†_pσ a_qσ + ½ Σ (pq|rs) a†_pσ a†_rτ a_sτ a_qσ`.
pub fn from_integrals(ints: &IntegralSet) -> Result<PauliSum> {
    ints.validate()?;
    let m = ints.m;
    let mut f = FermionOp::default();
    let spins = [Spin::Alpha, Spin::Beta];
    for p in 0..m {
        for q in 0..m {
            let h = ints.h[(p, q)];
            if h != 0.0 {
                for s in spins {
                    f.push(h, vec![Ladder::create(p, s), Ladder::annihilate(q, s)]);
                }
            }
        }
    }
    for p in 0..m {
        for q in 0..m {
            for r in 0..m {
                for s in 0..m {
                    let g = ints.g(p, q, r, s);
                    if g == 0.0 {
                        continue;
                    }
                    for a in spins {
                        for b in spins {
                            if a == b && (p == r || q == s) {
                                continue;
                            }
                            f.push(
                                0.5 * g,
                                vec![Ladder::create(p, a), Ladder::create(r, b), Ladder::annihilate(s, b), Ladder::annihilate(q, a)],
                            );
                        }
                    }
                }
            }
        }
    }
    let mut h = jordan_wigner(&f, m)?;
    if ints.e_core != 0.0 {
        h.push(ints.e_core, PauliString::identity());
        h = h.canonical();
    }
    Ok(h)
}

/// Lowest eigenpair of `h` within an irrep.
pub fn fci_ground_state(h: &PauliSum, key: &IrrepKey) -> Result<(f64, StateVector)> {
    let (vals, vecs, basis) = irrep_eigensystem(h, key)?;
    let k = vals.iter().enumerate().fold(0, |b, (i, v)| if *v < vals[b] - 1e-12 { i } else { b });
    let c = fix_sign(vecs.column(k).into_owned());
    let block = basis.block(key.s)?;
    Ok((vals[k], basis.embed(&(block * c))))
}

/// All eigenvalues of `h` in an irrep, ascending.
pub fn irrep_spectrum(h: &PauliSum, key: &IrrepKey) -> Result<Vec<f64>> {
    let (mut vals, _, _) = irrep_eigensystem(h, key)?;
    vals.sort_by(|a, b| a.total_cmp(b));
    Ok(vals)
}

fn irrep_eigensystem(h: &PauliSum, key: &IrrepKey) -> Result<(Vec<f64>, DMatrix<f64>, crate::symmetry::SectorBasis)> {
    key.validate()?;
    let basis = csf_basis(key.m, key.n_alpha, key.n_beta)?;
    let leak = sector_leak(h, &basis.det_indices)?;
    if leak > 1e-8 {
        return Err(Error::Symmetry(leak));
    }
    let hs = h.restricted(&basis.det_indices)?;
    let block = basis.block(key.s)?;
    let hb = &hs * block;
    let hc = block.transpose() * &hb;
    let spin_leak = (&hb - block * &hc).amax();
    if spin_leak > 1e-8 {
        return Err(Error::Symmetry(spin_leak));
    }
    let hc = (&hc + hc.transpose()) * 0.5;
    let eig = hc.symmetric_eigen();
    Ok((eig.eigenvalues.iter().copied().collect(), eig.eigenvectors, basis))
}

/// Largest amplitude `h` sends from the listed basis states to states outside
/// the list.
pub fn sector_leak(h: &PauliSum, dets: &[usize]) -> Result<f64> {
    h.validate()?;
    let inside: std::collections::HashSet<usize> = dets.iter().copied().collect();
    let mut worst: f64 = 0.0;
    for &j in dets {
        let mut out: HashMap<usize, f64> = HashMap::new();
        for &(c, p) in &h.terms {
            let (i, s) = p.act(j);
            if !inside.contains(&i) {
                *out.entry(i).or_default() += c * s;
            }
        }
        worst = out.values().fold(worst, |w, v| w.max(v.abs()));
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    HubbardChain,
    Pairing,
    RandomSymmetric,
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hubbard_chain" => Ok(ModelKind::HubbardChain),
            "pairing" => Ok(ModelKind::Pairing),
            "random_symmetric" => Ok(ModelKind::RandomSymmetric),
            _ => Err(Error::Invalid(format!("unknown model Hamiltonian {s}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    /// Hopping amplitude.
    pub t: f64,
    /// On-site repulsion.
    #[serde(rename = "U")]
    pub u: f64,
    /// Pair-scattering strength.
    pub g: f64,
    /// Pairing-model level spacing, `ε_p = spacing · p`.
    pub spacing: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { t: 1.0, u: 4.0, g: 1.0, spacing: 1.0 }
    }
}

pub fn hubbard_integrals(m: usize, t: f64, u: f64) -> IntegralSet {
    let mut ints = IntegralSet::zeros(m);
    for p in 0..m.saturating_sub(1) {
        ints.set_h(p, p + 1, -t);
    }
    for p in 0..m {
        ints.set_g(p, p, p, p, u);
    }
    ints
}

/// `Σ_p ε_p n_p − g Σ_pq P†_p P_q` with `P†_p = a†_pα a†_pβ`.
pub fn pairing_operator(m: usize, spacing: f64, g: f64) -> FermionOp {
    use Spin::{Alpha, Beta};
    let mut f = FermionOp::default();
    for p in 0..m {
        for s in [Alpha, Beta] {
            f.push(spacing * p as f64, vec![Ladder::create(p, s), Ladder::annihilate(p, s)]);
        }
        for q in 0..m {
            f.push(-g, vec![Ladder::create(p, Alpha), Ladder::create(p, Beta), Ladder::annihilate(q, Beta), Ladder::annihilate(q, Alpha)]);
        }
    }
    f
}

/// Random real integrals with full permutational symmetry:
/// `h` Gaussian symmetric, `(pq|rs) = Σ_k L^k_pq L^k_rs / M` with symmetric
/// Gaussian `L^k`.
pub fn random_integrals(m: usize, seed: u64) -> IntegralSet {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let mut ints = IntegralSet::zeros(m);
    for p in 0..m {
        for q in p..m {
            ints.set_h(p, q, normal());
        }
    }
    let ls: Vec<DMatrix<f64>> = (0..m)
        .map(|_| {
            let a = DMatrix::from_fn(m, m, |_, _| normal());
            (&a + a.transpose()) * 0.5
        })
        .collect();
    for p in 0..m {
        for q in 0..m {
            for r in 0..m {
                for s in 0..m {
                    let v: f64 = ls.iter().map(|l| l[(p, q)] * l[(r, s)]).sum::<f64>() / m as f64;
                    let i = ints.idx(p, q, r, s);
                    ints.g[i] = v;
                }
            }
        }
    }
    ints
}

pub fn model_hamiltonian(kind: ModelKind, m: usize, params: &ModelParams, seed: u64) -> Result<PauliSum> {
    if m == 0 || m > 7 {
        return Err(Error::Invalid(format!("model Hamiltonians support 1 <= M <= 7, got {m}")));
    }
    match kind {
        ModelKind::HubbardChain => from_integrals(&hubbard_integrals(m, params.t, params.u)),
        ModelKind::Pairing => jordan_wigner(&pairing_operator(m, params.spacing, params.g), m),
        ModelKind::RandomSymmetric => from_integrals(&random_integrals(m, seed)),
    }
}

/// Lowest eigenvalue of `h` on the seniority-zero determinants with
/// `n_pairs` doubly occupied orbitals.
pub fn seniority_zero_ground_energy(h: &PauliSum, m: usize, n_pairs: usize) -> Result<f64> {
    let dets: Vec<usize> = (0..1usize << m)
        .filter(|i| i.count_ones() as usize == n_pairs)
        .map(|occ| (0..m).filter(|p| occ >> p & 1 == 1).map(|p| 3usize << (2 * p)).sum())
        .collect();
    let hm = h.restricted(&dets)?;
    let eig = ((&hm + hm.transpose()) * 0.5).symmetric_eigenvalues();
    Ok(eig.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Dense `‖[A, B]‖_max` on the full space; small systems only.
pub fn dense_commutator_norm(a: &PauliSum, b: &PauliSum, n_qubits: usize) -> Result<f64> {
    let (a, b) = (a.to_dense(n_qubits)?, b.to_dense(n_qubits)?);
    Ok((&a * &b - &b * &a).amax())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{expectation, Pauli};
    use crate::symmetry::{number_operator, s_squared_pauli};
    use rand::Rng;

    fn p(f: &[(usize, Pauli)]) -> PauliString {
        PauliString::from_factors(f)
    }

    #[test]
    fn number_term() {
        let mut f = FermionOp::default();
        f.push(1.0, vec![Ladder::create(0, Spin::Alpha), Ladder::annihilate(0, Spin::Alpha)]);
        let h = jordan_wigner(&f, 2).unwrap();
        let mut want = PauliSum::identity(4, 0.5);
        want.push(-0.5, p(&[(0, Pauli::Z)]));
        assert_eq!(h, want.canonical());
    }

    #[test]
    fn hopping_term_has_alpha_only_interior() {
        let mut f = FermionOp::default();
        f.push(1.0, vec![Ladder::create(0, Spin::Alpha), Ladder::annihilate(1, Spin::Alpha)]);
        f.push(1.0, vec![Ladder::create(1, Spin::Alpha), Ladder::annihilate(0, Spin::Alpha)]);
        let h = jordan_wigner(&f, 2).unwrap();
        let mut want = PauliSum::new(4);
        want.push(0.5, p(&[(0, Pauli::X), (2, Pauli::X)]));
        want.push(0.5, p(&[(0, Pauli::Y), (2, Pauli::Y)]));
        assert_eq!(h, want.canonical());
        let mut f = FermionOp::default();
        f.push(1.0, vec![Ladder::create(0, Spin::Beta), Ladder::annihilate(2, Spin::Beta)]);
        f.push(1.0, vec![Ladder::create(2, Spin::Beta), Ladder::annihilate(0, Spin::Beta)]);
        let h = jordan_wigner(&f, 3).unwrap();
        let mut want = PauliSum::new(6);
        want.push(0.5, p(&[(1, Pauli::X), (3, Pauli::Z), (5, Pauli::X)]));
        want.push(0.5, p(&[(1, Pauli::Y), (3, Pauli::Z), (5, Pauli::Y)]));
        assert_eq!(h, want.canonical());
    }

    #[test]
    fn total_number_counts_bits() {
        let mut f = FermionOp::default();
        for q in 0..3 {
            f.extend(FermionOp::excitation(q, q));
        }
        let n = jordan_wigner(&f, 3).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..20 {
            let i = rng.gen_range(0..64usize);
            assert_eq!(expectation(&StateVector::basis(6, i), &n).unwrap(), i.count_ones() as f64);
        }
    }

    #[test]
    fn imbalanced_and_out_of_range_terms_rejected() {
        let mut f = FermionOp::default();
        f.push(1.0, vec![Ladder::create(0, Spin::Alpha), Ladder::annihilate(0, Spin::Beta)]);
        assert!(jordan_wigner(&f, 2).is_err());
        let mut f = FermionOp::default();
        f.push(1.0, vec![Ladder::create(2, Spin::Alpha), Ladder::annihilate(0, Spin::Alpha)]);
        assert!(jordan_wigner(&f, 2).is_err());
    }

    #[test]
    fn two_routes_to_s_squared() {
        for m in 1..=4 {
            let a = jordan_wigner(&s_squared_fermion(m), m).unwrap();
            let b = s_squared_pauli(m);
            assert_eq!(a.terms.len(), b.terms.len(), "M = {m}");
            for ((ca, pa), (cb, pb)) in a.terms.iter().zip(&b.terms) {
                assert_eq!(pa, pb);
                assert!((ca - cb).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn integral_examples() {
        let mut ints = IntegralSet::zeros(2);
        ints.h = DMatrix::identity(2, 2);
        let h = from_integrals(&ints).unwrap();
        let mut n = number_operator(2, Spin::Alpha);
        n.add(&number_operator(2, Spin::Beta));
        assert!(dense_commutator_norm(&h, &h, 4).unwrap() == 0.0);
        assert!((h.to_dense(4).unwrap() - n.to_dense(4).unwrap()).amax() < 1e-14);
        assert!((expectation(&StateVector::basis(4, 3), &h).unwrap() - 2.0).abs() < 1e-14);

        let t = 0.7;
        let mut ints = IntegralSet::zeros(2);
        ints.set_h(0, 1, t);
        let h = from_integrals(&ints).unwrap();
        let (e, _) = fci_ground_state(&h, &IrrepKey::new(2, 1, 1, 0)).unwrap();
        assert!((e + 2.0 * t).abs() < 1e-12);
    }

    #[test]
    fn integral_hamiltonians_commute_with_symmetries() {
        for m in 1..=3 {
            let h = from_integrals(&random_integrals(m, 7 + m as u64)).unwrap();
            let n = 2 * m;
            for op in [number_operator(m, Spin::Alpha), number_operator(m, Spin::Beta), s_squared_pauli(m)] {
                assert!(dense_commutator_norm(&h, &op, n).unwrap() < 1e-10);
            }
        }
        let h = from_integrals(&random_integrals(5, 3)).unwrap();
        assert!(sector_leak(&h, &crate::symmetry::sector_dets(5, 2, 3)).unwrap() < 1e-12);
    }

    #[test]
    fn asymmetric_integrals_rejected() {
        let mut ints = IntegralSet::zeros(2);
        ints.h[(0, 1)] = 1.0;
        assert!(from_integrals(&ints).is_err());
        let mut ints = IntegralSet::zeros(2);
        let i = ints.idx(0, 1, 0, 0);
        ints.g[i] = 1.0;
        assert!(from_integrals(&ints).is_err());
    }

    #[test]
    fn hubbard_dimer() {
        let h = model_hamiltonian(ModelKind::HubbardChain, 2, &ModelParams::default(), 0).unwrap();
        let (e, s) = fci_ground_state(&h, &IrrepKey::new(2, 1, 1, 0)).unwrap();
        let want = (4.0 - (16.0f64 + 16.0).sqrt()) / 2.0;
        assert!((e - want).abs() < 1e-12);
        assert!((expectation(&s, &s_squared_pauli(2)).unwrap()).abs() < 1e-10);
        assert!((expectation(&s, &h).unwrap() - e).abs() < 1e-12);
    }

    #[test]
    fn number_operator_fci_and_state_spin() {
        let mut h = number_operator(2, Spin::Alpha);
        h.add(&number_operator(2, Spin::Beta));
        let (e, _) = fci_ground_state(&h, &IrrepKey::new(2, 1, 1, 0)).unwrap();
        assert!((e - 2.0).abs() < 1e-12);
        let h = model_hamiltonian(ModelKind::RandomSymmetric, 3, &ModelParams::default(), 4).unwrap();
        for key in [IrrepKey::new(3, 2, 1, 1), IrrepKey::new(3, 1, 2, 3), IrrepKey::new(3, 2, 2, 2)] {
            let (e, s) = fci_ground_state(&h, &key).unwrap();
            let s2 = crate::symmetry::s_squared_eigenvalue(key.s);
            assert!((expectation(&s, &s_squared_pauli(3)).unwrap() - s2).abs() < 1e-10);
            assert!((expectation(&s, &h).unwrap() - e).abs() < 1e-10);
        }
    }

    #[test]
    fn fci_rejects_symmetry_breaking_operator() {
        let mut h = PauliSum::new(4);
        h.push(1.0, p(&[(0, Pauli::X)]));
        assert!(matches!(fci_ground_state(&h, &IrrepKey::new(2, 1, 1, 0)), Err(Error::Symmetry(_))));
        let mut h = PauliSum::new(4);
        h.push(1.0, p(&[(0, Pauli::Z)]));
        assert!(matches!(fci_ground_state(&h, &IrrepKey::new(2, 1, 1, 0)), Err(Error::Symmetry(_))));
    }

    #[test]
    fn fci_is_orbital_rotation_invariant() {
        let ints = random_integrals(3, 11);
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let a = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
        let c = a.qr().q();
        let key = IrrepKey::new(3, 2, 1, 1);
        let e0 = fci_ground_state(&from_integrals(&ints).unwrap(), &key).unwrap().0;
        let e1 = fci_ground_state(&from_integrals(&ints.rotated(&c)).unwrap(), &key).unwrap().0;
        assert!((e0 - e1).abs() < 1e-10, "{e0} vs {e1}");
    }

    #[test]
    fn models_are_deterministic_and_symmetric() {
        let a = model_hamiltonian(ModelKind::RandomSymmetric, 3, &ModelParams::default(), 9).unwrap();
        let b = model_hamiltonian(ModelKind::RandomSymmetric, 3, &ModelParams::default(), 9).unwrap();
        assert_eq!(a, b);
        let pair = model_hamiltonian(ModelKind::Pairing, 3, &ModelParams::default(), 0).unwrap();
        assert!(dense_commutator_norm(&pair, &s_squared_pauli(3), 6).unwrap() < 1e-12);
        assert!("heisenberg".parse::<ModelKind>().is_err());
    }
}
