//! Gate catalog: reference matrices, parameter derivatives and elementary-gate
//! decompositions.
//!
//! Matrices use the local index convention of the circuit diagrams: wire 0 is
//! the most significant bit. On the four-qubit QNP gates the wires are
//! `(0α, 0β, 1α, 1β)`, so local `#3` is orbital 1 doubly occupied and `#12`
//! is orbital 0 doubly occupied. All one-parameter rotations use half angles,
//! `c = cos(θ/2)`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_8};
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{apply_local, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GateKind {
    #[serde(rename = "RY")]
    Ry,
    H,
    X,
    #[serde(rename = "CNOT")]
    Cnot,
    #[serde(rename = "CZ")]
    Cz,
    #[serde(rename = "CRY")]
    Cry,
    #[serde(rename = "SWAP")]
    Swap,
    #[serde(rename = "FSWAP")]
    Fswap,
    G,
    #[serde(rename = "QNP_OR")]
    QnpOr,
    #[serde(rename = "QNP_PX")]
    QnpPx,
    #[serde(rename = "QNP_1p")]
    Qnp1p,
    #[serde(rename = "QNP_1h")]
    Qnp1h,
    #[serde(rename = "QNP_A1B0")]
    QnpA1B0,
    #[serde(rename = "QNP_A0B1")]
    QnpA0B1,
    #[serde(rename = "QNP_A2B1")]
    QnpA2B1,
    #[serde(rename = "QNP_A1B2")]
    QnpA1B2,
    #[serde(rename = "QNP_PBU")]
    QnpPbu,
    #[serde(rename = "QNP_PBL")]
    QnpPbl,
    #[serde(rename = "OFSWAP")]
    Ofswap,
    F,
    Q,
    #[serde(rename = "SO4")]
    So4,
    HammingGivens,
    Hamming8,
}

use GateKind::*;

impl GateKind {
    pub const ALL: [GateKind; 25] = [
        Ry,
        H,
        X,
        Cnot,
        Cz,
        Cry,
        Swap,
        Fswap,
        G,
        QnpOr,
        QnpPx,
        Qnp1p,
        Qnp1h,
        QnpA1B0,
        QnpA0B1,
        QnpA2B1,
        QnpA1B2,
        QnpPbu,
        QnpPbl,
        Ofswap,
        F,
        Q,
        So4,
        HammingGivens,
        Hamming8,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Ry => "RY",
            H => "H",
            X => "X",
            Cnot => "CNOT",
            Cz => "CZ",
            Cry => "CRY",
            Swap => "SWAP",
            Fswap => "FSWAP",
            G => "G",
            QnpOr => "QNP_OR",
            QnpPx => "QNP_PX",
            Qnp1p => "QNP_1p",
            Qnp1h => "QNP_1h",
            QnpA1B0 => "QNP_A1B0",
            QnpA0B1 => "QNP_A0B1",
            QnpA2B1 => "QNP_A2B1",
            QnpA1B2 => "QNP_A1B2",
            QnpPbu => "QNP_PBU",
            QnpPbl => "QNP_PBL",
            Ofswap => "OFSWAP",
            F => "F",
            Q => "Q",
            So4 => "SO4",
            HammingGivens => "HammingGivens",
            Hamming8 => "Hamming8",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Ry | H | X => 1,
            Cnot | Cz | Cry | Swap | Fswap | G | So4 | HammingGivens => 2,
            Hamming8 => 3,
            _ => 4,
        }
    }

    pub fn n_params(self) -> usize {
        match self {
            X | H | Cnot | Cz | Swap | Fswap | Ofswap => 0,
            Q => 2,
            F => 5,
            So4 | Hamming8 => 6,
            _ => 1,
        }
    }

    /// Commutes with the per-spin number operators and total spin on its
    /// four wires.
    pub fn is_qnp(self) -> bool {
        matches!(self, QnpOr | QnpPx | Qnp1p | Qnp1h | QnpA1B0 | QnpA0B1 | QnpA2B1 | QnpA1B2 | QnpPbu | QnpPbl | Ofswap | F | Q)
    }

    /// Gates that decompositions bottom out in.
    pub fn is_elementary(self) -> bool {
        matches!(self, Ry | H | X | Cnot | Cz | Cry)
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        GateKind::ALL
            .iter()
            .copied()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Invalid(format!("unknown gate kind {s}")))
    }
}

fn check_params(kind: GateKind, params: &[f64]) -> Result<()> {
    if params.len() != kind.n_params() {
        return Err(Error::ParamCount { kind: kind.name().into(), expected: kind.n_params(), got: params.len() });
    }
    Ok(())
}

type Vector = Vec<(usize, f64)>;

/// A rotation by `θ/2` in the plane spanned by orthonormal `u`, `v`, with
/// `⟨u|U|v⟩ = +sin(θ/2)`.
struct Plane {
    u: Vector,
    v: Vector,
}

fn e(i: usize) -> Vector {
    vec![(i, 1.0)]
}

fn singlet() -> Vector {
    vec![(6, FRAC_1_SQRT_2), (9, FRAC_1_SQRT_2)]
}

fn planes(kind: GateKind) -> Option<Vec<Plane>> {
    let p = |u: Vector, v: Vector| Plane { u, v };
    Some(match kind {
        Ry => vec![p(e(1), e(0))],
        Cry => vec![p(e(3), e(2))],
        G | HammingGivens => vec![p(e(1), e(2))],
        QnpPx => vec![p(e(3), e(12))],
        QnpA0B1 => vec![p(e(1), e(4))],
        QnpA1B0 => vec![p(e(2), e(8))],
        QnpA2B1 => vec![p(e(11), e(14))],
        QnpA1B2 => vec![p(e(7), e(13))],
        Qnp1p => vec![p(e(1), e(4)), p(e(2), e(8))],
        Qnp1h => vec![p(e(11), e(14)), p(e(7), e(13))],
        QnpPbu => vec![p(e(3), singlet())],
        QnpPbl => vec![p(e(12), singlet())],
        _ => return None,
    })
}

fn plane_matrix(dim: usize, planes: &[Plane], theta: f64, derivative: bool) -> DMatrix<f64> {
    let (s, c) = (theta / 2.0).sin_cos();
    let (a, b, mut m) = if derivative { (-s / 2.0, c / 2.0, DMatrix::zeros(dim, dim)) } else { (c - 1.0, s, DMatrix::identity(dim, dim)) };
    for pl in planes {
        for &(i, ui) in &pl.u {
            for &(j, uj) in &pl.u {
                m[(i, j)] += a * ui * uj;
            }
            for &(j, vj) in &pl.v {
                m[(i, j)] += b * ui * vj;
                m[(j, i)] -= b * ui * vj;
            }
        }
        for &(i, vi) in &pl.v {
            for &(j, vj) in &pl.v {
                m[(i, j)] += a * vi * vj;
            }
        }
    }
    m
}

fn constant_matrix(kind: GateKind) -> Option<DMatrix<f64>> {
    let r = FRAC_1_SQRT_2;
    Some(match kind {
        X => DMatrix::from_row_slice(2, 2, &[0., 1., 1., 0.]),
        H => DMatrix::from_row_slice(2, 2, &[r, r, r, -r]),
        Cnot => permutation(&[0, 1, 3, 2]),
        Cz => DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1., 1., 1., -1.])),
        Swap => permutation(&[0, 2, 1, 3]),
        Fswap => {
            let mut m = permutation(&[0, 2, 1, 3]);
            m[(3, 3)] = -1.0;
            m
        }
        Ofswap => {
            let f = constant_matrix(Fswap).unwrap();
            embed(4, &f, &[0, 2]) * embed(4, &f, &[1, 3])
        }
        _ => return None,
    })
}

fn permutation(target: &[usize]) -> DMatrix<f64> {
    let n = target.len();
    let mut m = DMatrix::zeros(n, n);
    for (col, &row) in target.iter().enumerate() {
        m[(row, col)] = 1.0;
    }
    m
}

/// Places a `2^k` matrix on the listed wires of an `arity`-wire register.
/// Non-orthogonal inputs (derivatives) are allowed.
pub fn embed(arity: usize, m: &DMatrix<f64>, wires: &[usize]) -> DMatrix<f64> {
    let d = 1 << arity;
    let qubits: Vec<usize> = wires.iter().map(|&w| arity - 1 - w).collect();
    let mut out = DMatrix::zeros(d, d);
    for col in 0..d {
        let mut s = StateVector::basis(arity, col);
        apply_local(&mut s, m, &qubits).expect("embed: wires checked by caller");
        out.set_column(col, &nalgebra::DVector::from_column_slice(s.amplitudes()));
    }
    out
}

fn hat(x: &[f64]) -> Matrix3<f64> {
    Matrix3::new(0.0, x[0], x[1], -x[0], 0.0, x[2], -x[1], -x[2], 0.0)
}

/// `exp(x̂)` for the antisymmetric matrix holding `x` in its upper triangle
/// (Rodrigues' formula).
pub fn so3_exp(x: &[f64]) -> Matrix3<f64> {
    let k = hat(x);
    let t2 = x.iter().map(|a| a * a).sum::<f64>();
    let t = t2.sqrt();
    let (a, b) =
        if t < 1e-4 { (1.0 - t2 / 6.0 + t2 * t2 / 120.0, 0.5 - t2 / 24.0 + t2 * t2 / 720.0) } else { (t.sin() / t, (1.0 - t.cos()) / t2) };
    Matrix3::identity() + k * a + k * k * b
}

/// `∂ exp(x̂) / ∂x_j`, read off the upper-right block of a 6×6 exponential.
pub fn so3_exp_derivative(x: &[f64], j: usize) -> Matrix3<f64> {
    let k = hat(x);
    let mut dx = [0.0; 3];
    dx[j] = 1.0;
    let ek = hat(&dx);
    let mut big = DMatrix::zeros(6, 6);
    for r in 0..3 {
        for c in 0..3 {
            big[(r, c)] = k[(r, c)];
            big[(r + 3, c + 3)] = k[(r, c)];
            big[(r, c + 3)] = ek[(r, c)];
        }
    }
    let ex = big.exp();
    Matrix3::from_fn(|r, c| ex[(r, c + 3)])
}

/// Fixed determinant-to-CSF transform on local states `(#3, #6, #9, #12)`:
/// rows are the closed shells `#3`, `#12`, the open-shell singlet and the
/// `M_S = 0` triplet.
fn csf_transform() -> DMatrix<f64> {
    let r = FRAC_1_SQRT_2;
    DMatrix::from_row_slice(4, 4, &[1., 0., 0., 0., 0., 0., 0., 1., 0., r, r, 0., 0., r, -r, 0.])
}

/// `Tᵀ diag(v, t) T` scattered into the 16×16 identity (or zero matrix for
/// derivatives, where `t = 0`).
fn singlet_block(v: &Matrix3<f64>, derivative: bool) -> DMatrix<f64> {
    let t = csf_transform();
    let mut inner = DMatrix::zeros(4, 4);
    for r in 0..3 {
        for c in 0..3 {
            inner[(r, c)] = v[(r, c)];
        }
    }
    inner[(3, 3)] = if derivative { 0.0 } else { 1.0 };
    let u = t.transpose() * inner * t;
    let idx = [3, 6, 9, 12];
    let mut m = if derivative { DMatrix::zeros(16, 16) } else { DMatrix::identity(16, 16) };
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate() {
            m[(i, j)] = u[(a, b)];
        }
    }
    m
}

fn hamming_block(v: &Matrix3<f64>, idx: [usize; 3], base: DMatrix<f64>) -> DMatrix<f64> {
    let mut m = base;
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate() {
            m[(i, j)] = v[(a, b)];
        }
    }
    m
}

const W1: [usize; 3] = [1, 2, 4];
const W2: [usize; 3] = [3, 5, 6];

/// Builds `U(params)` when `deriv` is `None`, otherwise `∂U/∂params[j]`.
fn build(kind: GateKind, params: &[f64], deriv: Option<usize>) -> DMatrix<f64> {
    let dim = 1 << kind.arity();
    if let Some(pl) = planes(kind) {
        return plane_matrix(dim, &pl, params[0], deriv.is_some());
    }
    if let Some(m) = constant_matrix(kind) {
        return if deriv.is_some() { DMatrix::zeros(dim, dim) } else { m };
    }
    match kind {
        QnpOr => {
            let g = build(G, params, None);
            let (ga, gb) = (embed(4, &g, &[0, 2]), embed(4, &g, &[1, 3]));
            match deriv {
                None => ga * gb,
                Some(_) => {
                    let dg = build(G, params, Some(0));
                    embed(4, &dg, &[0, 2]) * gb + ga * embed(4, &dg, &[1, 3])
                }
            }
        }
        Q => {
            let (px, or) = (build(QnpPx, &params[..1], None), build(QnpOr, &params[1..], None));
            match deriv {
                None => or * px,
                Some(0) => or * build(QnpPx, &params[..1], Some(0)),
                Some(_) => build(QnpOr, &params[1..], Some(0)) * px,
            }
        }
        F => {
            let part = |j: usize| -> DMatrix<f64> {
                let d = deriv == Some(j) || (j == 2 && matches!(deriv, Some(2..=4)));
                match j {
                    0 => build(Qnp1p, &params[0..1], d.then_some(0)),
                    1 => build(Qnp1h, &params[1..2], d.then_some(0)),
                    _ => {
                        let v = match deriv {
                            Some(k @ 2..=4) => so3_exp_derivative(&params[2..5], k - 2),
                            _ => so3_exp(&params[2..5]),
                        };
                        singlet_block(&v, d)
                    }
                }
            };
            part(0) * part(1) * part(2)
        }
        So4 => {
            let ry = |j: usize| build(Ry, &params[j..j + 1], (deriv == Some(j)).then_some(0));
            let layer = |a: usize| embed(2, &ry(a), &[0]) * embed(2, &ry(a + 1), &[1]);
            let cz = constant_matrix(Cz).unwrap();
            layer(4) * &cz * layer(2) * &cz * layer(0)
        }
        Hamming8 => {
            let (x1, x2) = (&params[0..3], &params[3..6]);
            match deriv {
                None => {
                    let m = hamming_block(&so3_exp(x1), W1, DMatrix::identity(8, 8));
                    hamming_block(&so3_exp(x2), W2, m)
                }
                Some(j) if j < 3 => hamming_block(&so3_exp_derivative(x1, j), W1, DMatrix::zeros(8, 8)),
                Some(j) => hamming_block(&so3_exp_derivative(x2, j - 3), W2, DMatrix::zeros(8, 8)),
            }
        }
        _ => unreachable!("every kind is covered"),
    }
}

/// Exact matrix of a gate kind at the given parameters.
pub fn reference_matrix(kind: GateKind, params: &[f64]) -> Result<DMatrix<f64>> {
    check_params(kind, params)?;
    Ok(build(kind, params, None))
}

/// `∂U/∂params[j]`.
pub fn derivative_matrix(kind: GateKind, params: &[f64], j: usize) -> Result<DMatrix<f64>> {
    check_params(kind, params)?;
    if j >= kind.n_params() {
        return Err(Error::Invalid(format!("{kind} has no parameter {j}")));
    }
    Ok(build(kind, params, Some(j)))
}

/// Angle `coeff · params[param] + offset` of a decomposition step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Angle {
    pub param: usize,
    pub coeff: f64,
    pub offset: f64,
}

impl Angle {
    pub fn eval(&self, params: &[f64]) -> f64 {
        self.coeff * params.get(self.param).copied().unwrap_or(0.0) + self.offset
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub kind: GateKind,
    pub wires: Vec<usize>,
    pub angle: Option<Angle>,
}

impl Step {
    pub fn matrix(&self, params: &[f64]) -> DMatrix<f64> {
        let a: Vec<f64> = self.angle.iter().map(|a| a.eval(params)).collect();
        build(self.kind, &a, None)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub target: GateKind,
    pub variant: String,
    pub steps: Vec<Step>,
    pub two_qubit_count: usize,
    pub depth: usize,
}

impl Decomposition {
    fn new(target: GateKind, variant: &str, steps: Vec<Step>) -> Self {
        let (depth, two_qubit_count, _) = schedule(target.arity(), steps.iter().map(|s| s.wires.as_slice()));
        Self { target, variant: variant.into(), steps, two_qubit_count, depth }
    }

    /// Product of the step matrices, first step applied first.
    pub fn expand(&self, params: &[f64]) -> DMatrix<f64> {
        let n = self.target.arity();
        let mut u = DMatrix::identity(1 << n, 1 << n);
        for s in &self.steps {
            u = embed(n, &s.matrix(params), &s.wires) * u;
        }
        u
    }
}

/// Greedy ASAP layering: returns (depth, multi-qubit count, single-qubit count).
pub fn schedule<'a>(n_wires: usize, gates: impl Iterator<Item = &'a [usize]>) -> (usize, usize, usize) {
    let mut level = vec![0usize; n_wires];
    let (mut depth, mut two, mut one) = (0, 0, 0);
    for w in gates {
        let l = 1 + w.iter().map(|&q| level[q]).max().unwrap_or(0);
        for &q in w {
            level[q] = l;
        }
        depth = depth.max(l);
        if w.len() >= 2 {
            two += 1;
        } else {
            one += 1;
        }
    }
    (depth, two, one)
}

fn st(kind: GateKind, wires: &[usize], angle: Option<Angle>) -> Step {
    Step { kind, wires: wires.to_vec(), angle }
}
fn ry(w: usize, coeff: f64) -> Step {
    st(Ry, &[w], Some(Angle { param: 0, coeff, offset: 0.0 }))
}
fn ryp(w: usize, param: usize, coeff: f64) -> Step {
    st(Ry, &[w], Some(Angle { param, coeff, offset: 0.0 }))
}
fn ryc(w: usize, offset: f64) -> Step {
    st(Ry, &[w], Some(Angle { param: 0, coeff: 0.0, offset }))
}
fn cry(c: usize, t: usize, coeff: f64) -> Step {
    st(Cry, &[c, t], Some(Angle { param: 0, coeff, offset: 0.0 }))
}
fn cryc(c: usize, t: usize, offset: f64) -> Step {
    st(Cry, &[c, t], Some(Angle { param: 0, coeff: 0.0, offset }))
}
fn cx(c: usize, t: usize) -> Step {
    st(Cnot, &[c, t], None)
}
fn cz(a: usize, b: usize) -> Step {
    st(Cz, &[a, b], None)
}
fn x(w: usize) -> Step {
    st(X, &[w], None)
}
fn h(w: usize) -> Step {
    st(H, &[w], None)
}

fn with_param(steps: Vec<Step>, param: usize) -> Vec<Step> {
    steps
        .into_iter()
        .map(|mut s| {
            if let Some(a) = s.angle.as_mut() {
                a.param = param;
            }
            s
        })
        .collect()
}

fn on_wires(steps: Vec<Step>, map: &[usize]) -> Vec<Step> {
    steps
        .into_iter()
        .map(|mut s| {
            s.wires.iter_mut().for_each(|w| *w = map[*w]);
            s
        })
        .collect()
}

fn g_steps(variant: &str) -> Vec<Step> {
    match variant {
        "hcz" => vec![h(0), h(1), cz(0, 1), ry(0, 0.5), ry(1, -0.5), cz(0, 1), h(0), h(1)],
        "cry" => vec![cx(1, 0), cry(0, 1, 1.0), cx(1, 0)],
        "cnot" => vec![cx(1, 0), ry(1, 0.5), cx(0, 1), ry(1, -0.5), cx(0, 1), cx(1, 0)],
        _ => vec![h(0), cx(0, 1), ry(0, 0.5), ry(1, 0.5), cx(0, 1), h(0)],
    }
}

fn or_steps(variant: &str) -> Vec<Step> {
    match variant {
        "cry" => vec![cx(2, 0), cry(0, 2, 1.0), cx(2, 0), cx(3, 1), cry(1, 3, 1.0), cx(3, 1)],
        "cnot" => vec![
            cx(2, 0),
            cx(3, 1),
            ry(2, 0.5),
            ry(3, 0.5),
            cx(0, 2),
            cx(1, 3),
            ry(2, -0.5),
            ry(3, -0.5),
            cx(0, 2),
            cx(2, 0),
            cx(1, 3),
            cx(3, 1),
        ],
        _ => vec![h(0), h(1), cx(0, 2), cx(1, 3), ry(0, 0.5), ry(2, 0.5), ry(1, 0.5), ry(3, 0.5), cx(0, 2), h(0), cx(1, 3), h(1)],
    }
}

fn px_steps(variant: &str) -> Vec<Step> {
    let q = 0.25;
    let r = 0.125;
    match variant {
        "standard" => vec![
            cx(1, 0),
            cx(3, 1),
            cz(0, 1),
            h(3),
            cx(3, 2),
            ry(3, -r),
            ry(2, r),
            cz(0, 3),
            ry(3, -r),
            cx(0, 2),
            ry(2, r),
            cx(1, 2),
            cx(1, 3),
            ry(3, r),
            ry(2, -r),
            cx(0, 2),
            cz(0, 3),
            ry(2, -r),
            ry(3, r),
            cx(3, 2),
            cx(1, 3),
            h(3),
            cx(3, 1),
            cx(1, 0),
        ],
        _ => vec![
            cx(1, 0),
            cx(3, 2),
            x(0),
            cx(3, 1),
            cry(0, 3, q),
            cx(0, 2),
            cry(2, 3, q),
            cx(0, 2),
            cry(2, 3, -q),
            cz(1, 3),
            cry(0, 3, -q),
            cx(0, 2),
            cry(2, 3, -q),
            cx(0, 2),
            cry(2, 3, q),
            x(0),
            cz(1, 3),
            cx(3, 1),
            cx(3, 2),
            cx(1, 0),
        ],
    }
}

/// The single-excitation gates share one controlled-rotation skeleton. `t` is
/// the rotated wire, `c` its same-spin partner, `o` the opposite-spin wire on
/// the same orbital as `t`, `p` the remaining wire; `signs` gives the sign of
/// each of the eight `RY(θ/8)` factors.
fn single_excitation(t: usize, c: usize, o: usize, p: usize, signs: [f64; 8], interleaved_cz: bool) -> Vec<Step> {
    let r = 0.125;
    let mut s = vec![cx(t, c)];
    if interleaved_cz {
        // hole variants: parity checks before the mid-circuit CZ pair
        s.extend([ry(t, signs[0] * r), cx(o, t), ry(t, signs[1] * r), cx(p, t), ry(t, signs[2] * r), cx(o, t)]);
        s.extend([ry(t, signs[3] * r), cz(c, t), cz(p, c), ry(t, signs[4] * r)]);
    } else {
        s.extend([ry(t, signs[0] * r), cx(o, t), ry(t, signs[1] * r), cx(p, t), ry(t, signs[2] * r), cz(p, c)]);
        s.extend([cx(o, t), ry(t, signs[3] * r), cz(c, t), ry(t, signs[4] * r)]);
    }
    s.extend([cx(o, t), ry(t, signs[5] * r), cx(p, t), ry(t, signs[6] * r), cx(o, t), ry(t, signs[7] * r)]);
    s.extend([cz(c, t), cx(t, c)]);
    s
}

const PARTICLE_SIGNS: [f64; 8] = [1., 1., 1., 1., -1., -1., -1., -1.];
const HOLE_SIGNS: [f64; 8] = [1., -1., 1., -1., 1., -1., 1., -1.];

fn pair_bridge_prefix() -> Vec<Step> {
    let p = FRAC_PI_8;
    vec![
        cx(3, 0),
        cx(2, 1),
        x(0),
        cx(2, 3),
        cryc(0, 2, p),
        cx(0, 1),
        cryc(1, 2, p),
        cx(0, 1),
        cryc(1, 2, -p),
        cz(3, 2),
        cryc(0, 2, -p),
        cx(0, 1),
        cryc(1, 2, -p),
        cx(0, 1),
        cryc(1, 2, p),
    ]
}

fn pair_bridge_mirror() -> Vec<Step> {
    let p = FRAC_PI_8;
    vec![
        cryc(0, 2, -p),
        cx(0, 1),
        cryc(1, 2, -p),
        cx(0, 1),
        cryc(1, 2, p),
        cz(3, 2),
        cryc(0, 2, p),
        cx(0, 1),
        cryc(1, 2, p),
        cx(0, 1),
        cryc(1, 2, -p),
    ]
}

fn pbl_steps() -> Vec<Step> {
    let q = 0.25;
    let mut s = pair_bridge_prefix();
    s.extend([cz(3, 2), cx(2, 3), cx(2, 0), x(0), cx(1, 2)]);
    s.extend([
        cry(0, 1, q),
        cx(0, 3),
        cry(3, 1, q),
        cx(0, 3),
        cry(3, 1, -q),
        cz(2, 1),
        cry(0, 1, -q),
        cx(0, 3),
        cry(3, 1, -q),
        cx(0, 3),
        cry(3, 1, q),
    ]);
    s.extend([x(0), cz(2, 1), cx(1, 2), cx(2, 0), cx(2, 3)]);
    s.extend(pair_bridge_mirror());
    s.extend([x(0), cz(3, 2), cx(2, 3), cx(2, 1), cx(3, 0)]);
    s
}

fn pbu_steps() -> Vec<Step> {
    let q = 0.25;
    let mut s = pair_bridge_prefix();
    s.extend([cz(3, 2), cx(2, 3), cx(3, 0), cx(3, 1)]);
    s.extend([
        cry(0, 3, q),
        cx(0, 2),
        cry(2, 3, -q),
        cx(0, 2),
        cry(2, 3, q),
        cz(1, 3),
        cry(0, 3, q),
        cx(0, 2),
        cry(2, 3, -q),
        cx(0, 2),
        cry(2, 3, q),
    ]);
    s.extend([cz(1, 3), cx(3, 1), cx(3, 0), cx(2, 3)]);
    s.extend(pair_bridge_mirror());
    s.extend([cz(3, 2), cx(2, 3), cx(2, 1), cx(3, 0), x(0)]);
    s
}

fn fswap_steps() -> Vec<Step> {
    vec![st(Swap, &[0, 1], None), cz(0, 1)]
}

/// All catalogued decompositions of `kind`; the first entry is the primary
/// variant. Elementary kinds decompose to themselves.
pub fn decompositions(kind: GateKind) -> Vec<Decomposition> {
    let d = |v: &str, s: Vec<Step>| Decomposition::new(kind, v, s);
    match kind {
        Ry => vec![d("elementary", vec![ry(0, 1.0)])],
        Cry => vec![d("elementary", vec![cry(0, 1, 1.0)])],
        H | X | Cnot | Cz => {
            let wires: Vec<usize> = (0..kind.arity()).collect();
            vec![d("elementary", vec![st(kind, &wires, None)])]
        }
        Swap => vec![d("cnot", vec![cx(0, 1), cx(1, 0), cx(0, 1)])],
        Fswap => vec![d("swap_cz", fswap_steps())],
        Ofswap => {
            let mut s = on_wires(fswap_steps(), &[0, 2]);
            s.extend(on_wires(fswap_steps(), &[1, 3]));
            vec![d("fswap_pair", s)]
        }
        G => ["hcz", "cry", "cnot", "hcnot"].iter().map(|v| d(v, g_steps(v))).collect(),
        HammingGivens => vec![d(
            "cz",
            vec![ryc(0, FRAC_PI_2), ryc(1, FRAC_PI_2), cz(0, 1), ry(0, 0.5), ry(1, -0.5), cz(0, 1), ryc(0, -FRAC_PI_2), ryc(1, -FRAC_PI_2)],
        )],
        QnpOr => ["primary", "cry", "cnot"].iter().map(|v| d(v, or_steps(v))).collect(),
        QnpPx => ["cry", "standard"].iter().map(|v| d(v, px_steps(v))).collect(),
        QnpA1B0 => vec![d("cry", single_excitation(2, 0, 3, 1, PARTICLE_SIGNS, false))],
        QnpA0B1 => vec![d("cry", single_excitation(3, 1, 2, 0, PARTICLE_SIGNS, false))],
        QnpA1B2 => vec![d("cry", single_excitation(2, 0, 3, 1, HOLE_SIGNS, true))],
        QnpA2B1 => vec![d("cry", single_excitation(3, 1, 2, 0, HOLE_SIGNS, true))],
        Qnp1p => {
            let mut s = single_excitation(2, 0, 3, 1, PARTICLE_SIGNS, false);
            s.extend(single_excitation(3, 1, 2, 0, PARTICLE_SIGNS, false));
            vec![d("a1b0_a0b1", s)]
        }
        Qnp1h => {
            let mut s = single_excitation(2, 0, 3, 1, HOLE_SIGNS, true);
            s.extend(single_excitation(3, 1, 2, 0, HOLE_SIGNS, true));
            vec![d("a1b2_a2b1", s)]
        }
        QnpPbl => vec![d("cry", pbl_steps())],
        QnpPbu => vec![d("cry", pbu_steps())],
        Q => {
            let mut s = px_steps("cry");
            s.extend(with_param(or_steps("primary"), 1));
            vec![d("px_or", s)]
        }
        So4 => {
            let mut s = Vec::new();
            for (layer, a) in [0usize, 2, 4].into_iter().enumerate() {
                if layer > 0 {
                    s.push(cz(0, 1));
                }
                s.push(ryp(0, a, 1.0));
                s.push(ryp(1, a + 1, 1.0));
            }
            vec![d("ry_cz", s)]
        }
        F | Hamming8 => Vec::new(),
    }
}

/// Primary decomposition of `kind`.
pub fn decomposition(kind: GateKind) -> Result<Decomposition> {
    decompositions(kind).into_iter().next().ok_or_else(|| Error::NoDecomposition(kind.name().into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use std::f64::consts::PI;

    fn max_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).amax()
    }

    fn rand_params(rng: &mut ChaCha20Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-PI..PI)).collect()
    }

    #[test]
    fn counts_and_arity() {
        for k in GateKind::ALL {
            let expect = match k.name() {
                "X" | "H" | "CNOT" | "CZ" | "SWAP" | "FSWAP" | "OFSWAP" => 0,
                "Q" => 2,
                "F" => 5,
                "SO4" | "Hamming8" => 6,
                _ => 1,
            };
            assert_eq!(k.n_params(), expect, "{k}");
            assert_eq!(k.name().parse::<GateKind>().unwrap(), k);
        }
        assert_eq!(So4.arity(), 2);
        assert_eq!(Hamming8.arity(), 3);
        assert!(reference_matrix(QnpPx, &[]).is_err());
    }

    #[test]
    fn all_matrices_orthogonal() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for k in GateKind::ALL {
            for _ in 0..20 {
                let m = reference_matrix(k, &rand_params(&mut rng, k.n_params())).unwrap();
                assert!(crate::sim::orthogonality_defect(&m) < 1e-12, "{k}");
            }
        }
    }

    #[test]
    fn px_examples() {
        assert!(max_diff(&reference_matrix(QnpPx, &[0.0]).unwrap(), &DMatrix::identity(16, 16)) < 1e-15);
        let t = 0.83;
        let m = reference_matrix(QnpPx, &[t]).unwrap();
        // local #12 is global |0011⟩ when applied to qubits (0,1,2,3)
        assert!((m[(12, 12)] - (t / 2.0).cos()).abs() < 1e-15);
        assert!((m[(3, 12)] - (t / 2.0).sin()).abs() < 1e-15);
        assert!((m[(12, 3)] + (t / 2.0).sin()).abs() < 1e-15);
    }

    /// Printed 16×16 orbital rotation table, with the one non-orthogonal entry
    /// `[2][8]` taken with the sign its symmetric partner requires.
    fn printed_or(phi: f64) -> DMatrix<f64> {
        let (s, c) = (phi / 2.0).sin_cos();
        let mut m = DMatrix::zeros(16, 16);
        for i in [0, 5, 10, 15] {
            m[(i, i)] = 1.0;
        }
        let rows: [(usize, &[(usize, f64)]); 12] = [
            (1, &[(1, c), (4, s)]),
            (2, &[(2, c), (8, s)]),
            (3, &[(3, c * c), (6, c * s), (9, c * s), (12, s * s)]),
            (4, &[(1, -s), (4, c)]),
            (6, &[(3, -c * s), (6, c * c), (9, -s * s), (12, c * s)]),
            (7, &[(7, c), (13, s)]),
            (8, &[(2, -s), (8, c)]),
            (9, &[(3, -c * s), (6, -s * s), (9, c * c), (12, c * s)]),
            (11, &[(11, c), (14, s)]),
            (12, &[(3, s * s), (6, -c * s), (9, -c * s), (12, c * c)]),
            (13, &[(7, -s), (13, c)]),
            (14, &[(11, -s), (14, c)]),
        ];
        for (r, entries) in rows {
            for &(col, v) in entries {
                m[(r, col)] = v;
            }
        }
        m
    }

    #[test]
    fn or_matches_printed_table_and_givens_pair() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        for _ in 0..25 {
            let phi = rng.gen_range(-PI..PI);
            let or = reference_matrix(QnpOr, &[phi]).unwrap();
            assert!(max_diff(&or, &printed_or(phi)) < 1e-14);
            let g = reference_matrix(G, &[phi]).unwrap();
            let pair = embed(4, &g, &[0, 2]) * embed(4, &g, &[1, 3]);
            assert!(max_diff(&or, &pair) < 1e-14);
        }
    }

    #[test]
    fn or_and_px_do_not_commute() {
        let a = reference_matrix(QnpOr, &[0.7]).unwrap();
        let b = reference_matrix(QnpPx, &[1.1]).unwrap();
        assert!((&a * &b - &b * &a).norm() > 1e-3);
    }

    #[test]
    fn ofswap_relation() {
        let z = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -1.0]));
        let zz = embed(4, &z, &[0]) * embed(4, &z, &[1]);
        let of = reference_matrix(Ofswap, &[]).unwrap();
        let or_pi = reference_matrix(QnpOr, &[PI]).unwrap();
        assert!(max_diff(&(&zz * &of), &or_pi) < 1e-15);
        assert!(max_diff(&(&of * &zz), &or_pi) > 0.5);
    }

    #[test]
    fn composite_products() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..25 {
            let t = rng.gen_range(-PI..PI);
            let p1 = reference_matrix(QnpA0B1, &[t]).unwrap() * reference_matrix(QnpA1B0, &[t]).unwrap();
            assert!(max_diff(&reference_matrix(Qnp1p, &[t]).unwrap(), &p1) < 1e-15);
            let h1 = reference_matrix(QnpA2B1, &[t]).unwrap() * reference_matrix(QnpA1B2, &[t]).unwrap();
            assert!(max_diff(&reference_matrix(Qnp1h, &[t]).unwrap(), &h1) < 1e-15);
        }
    }

    #[test]
    fn f_special_cases() {
        let r = FRAC_1_SQRT_2;
        for &t in &[0.3, -1.2, 2.9] {
            let f_or = reference_matrix(F, &[t, t, 0.0, t * r, -t * r]).unwrap();
            assert!(max_diff(&f_or, &reference_matrix(QnpOr, &[t]).unwrap()) < 1e-14);
            let cases = [
                ([0.0, 0.0, t / 2.0, 0.0, 0.0], QnpPx),
                ([0.0, 0.0, 0.0, t / 2.0, 0.0], QnpPbu),
                ([0.0, 0.0, 0.0, 0.0, t / 2.0], QnpPbl),
                ([t, 0.0, 0.0, 0.0, 0.0], Qnp1p),
                ([0.0, t, 0.0, 0.0, 0.0], Qnp1h),
            ];
            for (p, k) in cases {
                let a = reference_matrix(F, &p).unwrap();
                assert!(max_diff(&a, &reference_matrix(k, &[t]).unwrap()) < 1e-14, "{k}");
            }
        }
    }

    #[test]
    fn rodrigues_matches_matrix_exponential() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        for _ in 0..50 {
            let x = rand_params(&mut rng, 3);
            let k = hat(&x);
            let dense = DMatrix::from_fn(3, 3, |r, c| k[(r, c)]).exp();
            let rod = so3_exp(&x);
            for r in 0..3 {
                for c in 0..3 {
                    assert!((dense[(r, c)] - rod[(r, c)]).abs() < 1e-13);
                }
            }
        }
        let small = so3_exp(&[1e-6, -2e-6, 3e-7]);
        let k = hat(&[1e-6, -2e-6, 3e-7]);
        assert!((small - (Matrix3::identity() + k + k * k / 2.0)).amax() < 1e-17);
    }

    #[test]
    fn derivatives_match_central_differences() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let h = 1e-6;
        for k in GateKind::ALL.into_iter().filter(|k| k.n_params() > 0) {
            let p = rand_params(&mut rng, k.n_params());
            for j in 0..k.n_params() {
                let (mut a, mut b) = (p.clone(), p.clone());
                a[j] += h;
                b[j] -= h;
                let fd = (reference_matrix(k, &a).unwrap() - reference_matrix(k, &b).unwrap()) / (2.0 * h);
                let d = derivative_matrix(k, &p, j).unwrap();
                assert!(max_diff(&fd, &d) < 1e-8, "{k} slot {j}: {}", max_diff(&fd, &d));
            }
        }
    }

    #[test]
    fn decompositions_match_reference() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        for k in GateKind::ALL {
            for dec in decompositions(k) {
                for _ in 0..25 {
                    let p = rand_params(&mut rng, k.n_params());
                    let diff = max_diff(&dec.expand(&p), &reference_matrix(k, &p).unwrap());
                    assert!(diff < 1e-12, "{k}/{}: {diff:e}", dec.variant);
                }
            }
        }
    }

    #[test]
    fn printed_gate_and_depth_counts() {
        let or = decomposition(QnpOr).unwrap();
        assert_eq!((or.two_qubit_count, or.depth), (4, 5));
        let px = decompositions(QnpPx);
        let std = px.iter().find(|d| d.variant == "standard").unwrap();
        assert_eq!((std.two_qubit_count, std.depth), (14, 18));
        let cry = px.iter().find(|d| d.variant == "cry").unwrap();
        assert_eq!((cry.two_qubit_count, cry.depth), (18, 16));
        let ors = decompositions(QnpOr);
        assert_eq!((ors[1].two_qubit_count, ors[1].depth), (6, 3));
        assert_eq!((ors[2].two_qubit_count, ors[2].depth), (8, 6));
        assert!(matches!(decomposition(F), Err(Error::NoDecomposition(_))));
    }

    #[test]
    fn printed_one_sided_circuit_variants_need_rescaling() {
        // As drawn, the Hamming-weight Givens circuit uses ±π/4 outer rotations
        // and the first pair-Givens sketch uses ±λ inner rotations; neither
        // reproduces the printed half-angle Givens matrix.
        let t = 0.8;
        let g = reference_matrix(G, &[t]).unwrap();
        let build = |outer: f64, inner: f64| {
            let steps = vec![ryc(0, outer), ryc(1, outer), cz(0, 1), ry(0, inner), ry(1, -inner), cz(0, 1), ryc(0, -outer), ryc(1, -outer)];
            Decomposition::new(G, "probe", steps).expand(&[t])
        };
        assert!(max_diff(&build(PI / 4.0, 0.5), &g) > 1e-2);
        assert!(max_diff(&build(PI / 2.0, 1.0), &g) > 1e-2);
        assert!(max_diff(&build(PI / 2.0, 0.5), &g) < 1e-14);
    }
}
