//! Analytic and parameter-shift gradients, generator classification and the
//! shot-noise variance model.

use std::f64::consts::{FRAC_PI_2, SQRT_2};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{derivative_matrix, reference_matrix, GateKind};
use crate::objective::Objective;

const SPECTRUM_TOL: f64 = 1e-10;

/// Exact gradient of the objective at `params` (adjoint sweep).
pub fn analytic_gradient(obj: &Objective, params: &[f64]) -> Result<Vec<f64>> {
    Ok(obj.value_and_gradient(params)?.1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleClass {
    TwoTerm,
    FourTerm,
    Unsupported,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorReport {
    pub kind: GateKind,
    pub eigenvalues: Vec<f64>,
    pub shift_c: f64,
    pub scale_a: f64,
    pub rule_class: RuleClass,
}

/// Generator `Q = 2i·U(0)ᵀ·∂U/∂θ(0)` of a one-parameter gate, so that
/// `U(θ) = U(0)·exp(−iθQ/2)`, centered by its trace and tested for
/// `Q̄² = a²I` and then `Q̄³ = a²Q̄`.
pub fn classify_generator(kind: GateKind) -> Result<GeneratorReport> {
    if kind.n_params() != 1 {
        return Err(Error::ShiftRule(format!("{kind} has {} parameters; classification needs exactly one", kind.n_params())));
    }
    let u0 = reference_matrix(kind, &[0.0])?;
    let a = u0.transpose() * derivative_matrix(kind, &[0.0], 0)?;
    let dim = a.nrows();
    let q: DMatrix<Complex64> = a.map(|x| Complex64::new(0.0, 2.0 * x));
    let shift_c = q.trace().re / dim as f64;
    let qbar = &q - DMatrix::<Complex64>::identity(dim, dim) * Complex64::new(shift_c, 0.0);
    let mut eigenvalues: Vec<f64> = qbar.clone().symmetric_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    let q2 = &qbar * &qbar;
    let a2 = q2.trace().re / dim as f64;
    let max_abs = |m: &DMatrix<Complex64>| m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let eye = DMatrix::<Complex64>::identity(dim, dim);
    let a2_top = eigenvalues.iter().map(|e| e * e).fold(0.0, f64::max);
    let (rule_class, scale) = if a2 > SPECTRUM_TOL && max_abs(&(&q2 - &eye * Complex64::new(a2, 0.0))) < SPECTRUM_TOL {
        (RuleClass::TwoTerm, a2.sqrt())
    } else if a2_top > SPECTRUM_TOL
        && max_abs(&(&q2 * &qbar - &qbar * Complex64::new(a2_top, 0.0))) < SPECTRUM_TOL
        && eigenvalues.iter().any(|e| e.abs() < SPECTRUM_TOL)
    {
        (RuleClass::FourTerm, a2_top.sqrt())
    } else {
        (RuleClass::Unsupported, eigenvalues.iter().map(|e| e.abs()).fold(0.0, f64::max))
    };
    Ok(GeneratorReport { kind, eigenvalues, shift_c, scale_a: scale, rule_class })
}

/// Classification of every one-parameter kind in the catalog.
pub fn classify_catalog() -> Vec<GeneratorReport> {
    GateKind::ALL.iter().filter(|k| k.n_params() == 1).map(|&k| classify_generator(k).expect("one-parameter kind")).collect()
}

/// `∂f = Σ d·f(θ + s)` over `terms = [(d, s)]`, for a unit-scale generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftRule {
    pub class: RuleClass,
    pub terms: Vec<(f64, f64)>,
}

impl ShiftRule {
    /// `(d₁, α, d₂, β)` of a four-term rule, `(d, α, 0, 0)` of a two-term one.
    pub fn coefficients(&self) -> (f64, f64, f64, f64) {
        match self.class {
            RuleClass::FourTerm => (self.terms[0].0, self.terms[0].1, -self.terms[2].0, self.terms[2].1),
            _ => (self.terms[0].0, self.terms[0].1, 0.0, 0.0),
        }
    }
}

fn two_term(alpha: f64) -> Result<ShiftRule> {
    let s = alpha.sin();
    if s.abs() < 1e-12 {
        return Err(Error::ShiftRule(format!("two-term shift α = {alpha} lies in πℤ")));
    }
    let d = 1.0 / (2.0 * s);
    Ok(ShiftRule { class: RuleClass::TwoTerm, terms: vec![(d, alpha), (-d, -alpha)] })
}

fn four_term_from(d1: f64, alpha: f64, d2: f64, beta: f64) -> ShiftRule {
    ShiftRule { class: RuleClass::FourTerm, terms: vec![(d1, alpha), (-d1, -alpha), (-d2, beta), (d2, -beta)] }
}

/// Solves `1/4 = d₁ sin(α/2) − d₂ sin(β/2)`, `1/2 = d₁ sin α − d₂ sin β`.
fn four_term(alpha: f64, beta: f64) -> Result<ShiftRule> {
    let (a11, a12, a21, a22) = ((alpha / 2.0).sin(), -(beta / 2.0).sin(), alpha.sin(), -beta.sin());
    let det = a11 * a22 - a12 * a21;
    if det.abs() < 1e-12 {
        return Err(Error::ShiftRule(format!("degenerate four-term angles α = {alpha}, β = {beta}")));
    }
    let d1 = (0.25 * a22 - a12 * 0.5) / det;
    let d2 = (a11 * 0.5 - a21 * 0.25) / det;
    Ok(four_term_from(d1, alpha, d2, beta))
}

pub fn make_shift_rule(class: RuleClass, alpha: f64, beta: Option<f64>, variance_optimal: bool) -> Result<ShiftRule> {
    match (class, variance_optimal) {
        (RuleClass::TwoTerm, true) => two_term(FRAC_PI_2),
        (RuleClass::TwoTerm, false) => two_term(alpha),
        (RuleClass::FourTerm, true) => {
            let d1 = (SQRT_2 + 1.0) / (4.0 * SQRT_2);
            let d2 = (SQRT_2 - 1.0) / (4.0 * SQRT_2);
            Ok(four_term_from(d1, FRAC_PI_2, d2, 3.0 * FRAC_PI_2))
        }
        (RuleClass::FourTerm, false) => {
            let beta = beta.ok_or_else(|| Error::ShiftRule("four-term rule needs a second angle β".into()))?;
            four_term(alpha, beta)
        }
        (RuleClass::Unsupported, _) => Err(Error::ShiftRule("no shift rule for an unsupported generator".into())),
    }
}

/// Shift rule from a list of distinct positive shift angles: one angle gives
/// the two-term rule, two give the four-term rule. Other counts have no
/// known solution and are rejected.
pub fn solve_shift_rule(angles: &[f64]) -> Result<ShiftRule> {
    match *angles {
        [a] => two_term(a),
        [a, b] => four_term(a, b),
        _ => Err(Error::ShiftRule(format!("no {}-shift rule is available; use 1 or 2 shift angles", angles.len()))),
    }
}

/// `Σ d·f(θ + s)` together with the gate count of each evaluated circuit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftEvaluation {
    pub gradient: f64,
    pub terms: Vec<ShiftTerm>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftTerm {
    pub coefficient: f64,
    pub shift: f64,
    pub value: f64,
    pub gate_count: usize,
}

/// The unique gate reading `slot`, with its generator report.
fn slot_gate(obj: &Objective, slot: usize) -> Result<(usize, GeneratorReport)> {
    let readers: Vec<usize> = obj.circuit.gates.iter().enumerate().filter(|(_, g)| g.slots().contains(&slot)).map(|(i, _)| i).collect();
    let &[gi] = readers.as_slice() else {
        return Err(Error::ShiftRule(format!("slot {slot} is read by {} gates; shift rules need exactly one", readers.len())));
    };
    let kind = obj.circuit.gates[gi].kind;
    Ok((gi, classify_generator(kind)?))
}

/// Terms `(d, s)` with `s` already divided by the generator scale; the
/// result must be multiplied by the scale.
pub fn shift_evaluation(obj: &Objective, params: &[f64], slot: usize, rule: &ShiftRule, elide_gate: bool) -> Result<ShiftEvaluation> {
    if slot >= params.len() {
        return Err(Error::ParamCount { kind: "slot".into(), expected: slot + 1, got: params.len() });
    }
    let (gi, report) = slot_gate(obj, slot)?;
    if report.rule_class != rule.class {
        return Err(Error::ShiftRule(format!("{} generator is {:?} but the rule is {:?}", report.kind, report.rule_class, rule.class)));
    }
    let a = report.scale_a;
    let theta = params[slot];
    let rule = if elide_gate {
        if (a * theta).sin().abs() < 1e-12 {
            return Err(Error::ShiftRule(format!("gate elision needs θ ∉ πℤ, got θ = {theta}")));
        }
        match rule.class {
            RuleClass::TwoTerm => two_term(-a * theta)?,
            RuleClass::FourTerm => four_term(-a * theta, rule.coefficients().3)?,
            RuleClass::Unsupported => unreachable!("rejected above"),
        }
    } else {
        rule.clone()
    };
    let elided = obj.with_circuit(obj.circuit.without_gate(gi))?;
    let mut p = params.to_vec();
    let mut terms = Vec::with_capacity(rule.terms.len());
    let mut gradient = 0.0;
    for (k, &(d, s)) in rule.terms.iter().enumerate() {
        let (value, gate_count) = if elide_gate && k == 0 {
            (elided.evaluate(params)?, elided.circuit.gates.len())
        } else {
            p[slot] = theta + s / a;
            (obj.evaluate(&p)?, obj.circuit.gates.len())
        };
        gradient += d * value;
        terms.push(ShiftTerm { coefficient: d, shift: s / a, value, gate_count });
    }
    Ok(ShiftEvaluation { gradient: gradient * a, terms })
}

pub fn shift_gradient(obj: &Objective, params: &[f64], slot: usize, rule: &ShiftRule, elide_gate: bool) -> Result<f64> {
    Ok(shift_evaluation(obj, params, slot, rule, elide_gate)?.gradient)
}

/// Variance of the shift-rule estimator under a constant per-shot variance
/// `v` and `n` shots split in proportion to `|dᵢ|`, and that split.
pub fn shot_noise_variance(rule: &ShiftRule, v: f64, n: f64) -> (f64, Vec<f64>) {
    let total: f64 = rule.terms.iter().map(|(d, _)| d.abs()).sum();
    let alloc = rule.terms.iter().map(|(d, _)| n * d.abs() / total).collect();
    (total * total * v / n, alloc)
}

/// `λ* = (1 + V/(N g²))⁻¹`, 0 for `g = 0`.
pub fn biased_prefactor(grad_estimate: f64, v: f64, n: f64) -> f64 {
    if grad_estimate == 0.0 {
        return 0.0;
    }
    1.0 / (1.0 + v / (n * grad_estimate * grad_estimate))
}

/// Shot-noise Monte Carlo: every term value gets Gaussian noise of variance
/// `v / nᵢ` under the optimal allocation. Returns one estimate per trial.
#[allow(clippy::too_many_arguments)]
pub fn sample_shift_estimates(
    obj: &Objective,
    params: &[f64],
    slot: usize,
    rule: &ShiftRule,
    v: f64,
    n: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let eval = shift_evaluation(obj, params, slot, rule, false)?;
    let (_, alloc) = shot_noise_variance(rule, v, n);
    let a = classify_generator(obj.circuit.gates[slot_gate(obj, slot)?.0].kind)?.scale_a;
    let sd: Vec<f64> = alloc.iter().map(|ni| (v / ni).sqrt()).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    Ok((0..trials)
        .map(|_| {
            a * eval
                .terms
                .iter()
                .zip(&sd)
                .map(|(t, s)| {
                    let xi: f64 = StandardNormal.sample(&mut rng);
                    t.coefficient * (t.value + s * xi)
                })
                .sum::<f64>()
        })
        .collect())
}

/// Sample mean and unbiased sample variance.
pub fn mean_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MseReport {
    pub exact: f64,
    pub lambda: f64,
    pub mse_unbiased: f64,
    pub mse_biased: f64,
}

/// Mean-squared error of the plain and the `λ*`-scaled estimator, with
/// `λ*` formed from the exact gradient.
#[allow(clippy::too_many_arguments)]
pub fn biased_mse(
    obj: &Objective,
    params: &[f64],
    slot: usize,
    rule: &ShiftRule,
    v: f64,
    n: f64,
    trials: usize,
    seed: u64,
) -> Result<MseReport> {
    let exact = analytic_gradient(obj, params)?[slot];
    let xs = sample_shift_estimates(obj, params, slot, rule, v, n, trials, seed)?;
    let lambda = biased_prefactor(exact, v, n);
    let mse = |l: f64| xs.iter().map(|x| (l * x - exact).powi(2)).sum::<f64>() / xs.len() as f64;
    Ok(MseReport { exact, lambda, mse_unbiased: mse(1.0), mse_biased: mse(lambda) })
}
