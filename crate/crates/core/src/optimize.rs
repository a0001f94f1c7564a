//! Limited-memory BFGS with a strong-Wolfe line search.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LbfgsConfig {
    pub history: usize,
    pub g_tol: f64,
    pub f_tol: f64,
    pub max_epochs: usize,
    pub c1: f64,
    pub c2: f64,
    pub max_line_search: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self { history: 10, g_tol: 1e-10, f_tol: 0.0, max_epochs: 10_000, c1: 1e-4, c2: 0.9, max_line_search: 40 }
    }
}

impl LbfgsConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.history > 0
            && self.g_tol >= 0.0
            && self.f_tol >= 0.0
            && 0.0 < self.c1
            && self.c1 < self.c2
            && self.c2 < 1.0
            && self.max_line_search > 0;
        if !ok {
            return Err(Error::Invalid(format!("invalid optimizer settings {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalStatus {
    Converged,
    MaxEpochs,
    Stalled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub value: f64,
    pub grad_inf_norm: f64,
    pub digest: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub records: Vec<EpochRecord>,
    pub status: TerminalStatus,
    pub evaluations: usize,
}

impl ConvergenceTrace {
    pub fn final_value(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.value)
    }

    pub fn epochs(&self) -> usize {
        self.records.last().map_or(0, |r| r.epoch)
    }
}

/// FNV-1a over the little-endian bytes of `x`.
pub fn digest(x: &[f64]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in x.iter().flat_map(|v| v.to_le_bytes()) {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("{h:016x}")
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn step(x: &[f64], d: &[f64], a: f64) -> Vec<f64> {
    x.iter().zip(d).map(|(x, d)| x + a * d).collect()
}

struct Point {
    a: f64,
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
    dphi: f64,
}

/// Minimizer of the cubic through `(a, fa, da)` and `(b, fb, db)`,
/// safeguarded to the middle 80% of the bracket.
fn cubic(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> f64 {
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    let (lo, hi) = (a.min(b), a.max(b));
    let w = hi - lo;
    let mid = 0.5 * (a + b);
    if disc < 0.0 || !disc.is_finite() {
        return mid;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
    if t.is_finite() && t > lo + 0.1 * w && t < hi - 0.1 * w {
        t
    } else {
        mid
    }
}

struct Search<'a, F> {
    f: &'a mut F,
    x: &'a [f64],
    d: &'a [f64],
    f0: f64,
    dphi0: f64,
    cfg: &'a LbfgsConfig,
    evals: usize,
    best: Option<Point>,
}

impl<F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>> Search<'_, F> {
    fn eval(&mut self, a: f64) -> Result<Point> {
        let x = step(self.x, self.d, a);
        let (f, g) = (self.f)(&x)?;
        self.evals += 1;
        let dphi = dot(&g, self.d);
        let p = Point { a, x, f, g, dphi };
        if p.f.is_finite() && p.f < self.best.as_ref().map_or(self.f0, |b| b.f) {
            self.best = Some(Point { a, x: p.x.clone(), f: p.f, g: p.g.clone(), dphi });
        }
        Ok(p)
    }

    fn armijo(&self, p: &Point) -> bool {
        p.f <= self.f0 + self.cfg.c1 * p.a * self.dphi0
    }

    fn curvature(&self, p: &Point) -> bool {
        p.dphi.abs() <= -self.cfg.c2 * self.dphi0
    }

    fn run(&mut self, a0: f64) -> Result<Option<Point>> {
        let mut prev = Point { a: 0.0, x: self.x.to_vec(), f: self.f0, g: Vec::new(), dphi: self.dphi0 };
        let mut a = a0;
        for i in 0..self.cfg.max_line_search {
            let p = self.eval(a)?;
            if !p.f.is_finite() {
                a = 0.5 * (prev.a + a);
                continue;
            }
            if !self.armijo(&p) || (i > 0 && p.f >= prev.f) {
                return self.zoom(prev, p);
            }
            if self.curvature(&p) {
                return Ok(Some(p));
            }
            if p.dphi >= 0.0 {
                return self.zoom(p, prev);
            }
            a = 2.0 * p.a;
            prev = p;
        }
        Ok(None)
    }

    fn zoom(&mut self, mut lo: Point, mut hi: Point) -> Result<Option<Point>> {
        for _ in 0..self.cfg.max_line_search {
            if (hi.a - lo.a).abs() <= 1e-16 * lo.a.abs().max(1.0) {
                break;
            }
            let a = cubic(lo.a, lo.f, lo.dphi, hi.a, hi.f, hi.dphi);
            let p = self.eval(a)?;
            if !self.armijo(&p) || p.f >= lo.f {
                hi = p;
            } else {
                if self.curvature(&p) {
                    return Ok(Some(p));
                }
                if p.dphi * (hi.a - lo.a) >= 0.0 {
                    hi = lo;
                }
                lo = p;
            }
        }
        Ok(None)
    }
}

/// Minimizes `f` from `x0`. `f` returns the value and gradient. `observe`
/// sees every accepted iterate (including the start).
pub fn lbfgs<F, O>(mut f: F, x0: &[f64], cfg: &LbfgsConfig, mut observe: O) -> Result<(Vec<f64>, ConvergenceTrace)>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    O: FnMut(&EpochRecord, &[f64]) -> Result<()>,
{
    cfg.validate()?;
    let mut x = x0.to_vec();
    let (mut fx, mut g) = f(&x)?;
    let mut evaluations = 1;
    let mut records = Vec::new();
    let mut record = |epoch: usize, x: &[f64], fx: f64, g: &[f64], records: &mut Vec<EpochRecord>| -> Result<()> {
        let r = EpochRecord { epoch, value: fx, grad_inf_norm: inf_norm(g), digest: digest(x) };
        observe(&r, x)?;
        records.push(r);
        Ok(())
    };
    record(0, &x, fx, &g, &mut records)?;
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut status = TerminalStatus::MaxEpochs;
    if !fx.is_finite() {
        status = TerminalStatus::Stalled;
    }
    for epoch in 1..=cfg.max_epochs {
        if status == TerminalStatus::Stalled {
            break;
        }
        if inf_norm(&g) < cfg.g_tol || x.is_empty() {
            status = TerminalStatus::Converged;
            break;
        }
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = rho * dot(s, &d);
            d.iter_mut().zip(y).for_each(|(d, y)| *d -= a * y);
            alphas.push(a);
        }
        if let Some((s, y, _)) = hist.back() {
            let gamma = dot(s, y) / dot(y, y);
            d.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &d);
            d.iter_mut().zip(s).for_each(|(d, s)| *d += (a - b) * s);
        }
        let mut dphi0 = dot(&g, &d);
        if !(dphi0 < 0.0) {
            hist.clear();
            d = g.iter().map(|v| -v).collect();
            dphi0 = dot(&g, &d);
        }
        let a0 = if hist.is_empty() { (1.0 / inf_norm(&g)).min(1.0) } else { 1.0 };
        let mut search = Search { f: &mut f, x: &x, d: &d, f0: fx, dphi0, cfg, evals: 0, best: None };
        let found = search.run(a0)?;
        evaluations += search.evals;
        let next = match found {
            Some(p) => p,
            None => match search.best.take() {
                Some(p) if p.f < fx => p,
                _ => {
                    status = TerminalStatus::Stalled;
                    break;
                }
            },
        };
        let s: Vec<f64> = next.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if hist.len() == cfg.history {
                hist.pop_front();
            }
            hist.push_back((s, y, 1.0 / sy));
        }
        let f_prev = fx;
        x = next.x;
        fx = next.f;
        g = next.g;
        record(epoch, &x, fx, &g, &mut records)?;
        if cfg.f_tol > 0.0 && (f_prev - fx).abs() <= cfg.f_tol * f_prev.abs().max(fx.abs()).max(1.0) {
            status = TerminalStatus::Converged;
            break;
        }
        if inf_norm(&g) < cfg.g_tol {
            status = TerminalStatus::Converged;
            break;
        }
    }
    Ok((x, ConvergenceTrace { records, status, evaluations }))
}
