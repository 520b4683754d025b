//! Search for post-selected Bell detectors.
//!
//! The network over `M = 2 + ancillas` modes is a triangular mesh of
//! `M(M-1)/2` adjacent two-mode blocks, each
//! `[[cos t, sin t], [sin t e^{i p}, -cos t e^{i p}]]`. Output phases only
//! rephase whole detector patterns, so they are left out. The objective
//! `|g_0|^2 - w sum_{m>0} |g_m|^2` is maximized by multi-start Nelder-Mead
//! with a growing penalty weight `w`, followed by a Gauss-Newton polish that
//! drives the cross-talk residuals to zero with minimal-norm steps.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bell::{equivalence_deviation, DetectorDesign};
use crate::fock::{random_state, Occupation};
use crate::optics::{transition_amplitude, BeamSplitterSpec, ModeUnitary, OpticalElement};
use crate::resources::omega;
use crate::{Complex, Error, Result};

pub const DEFAULT_CROSS_TALK_TOLERANCE: f64 = 1e-8;

/// Success probabilities below this do not count as a working detector.
pub const MIN_SUCCESS_PROBABILITY: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub restarts: usize,
    /// Nelder-Mead iterations per penalty round.
    pub max_iterations: usize,
    pub initial_penalty: f64,
    pub penalty_growth: f64,
    pub penalty_rounds: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            restarts: 8,
            max_iterations: 2000,
            initial_penalty: 10.0,
            penalty_growth: 10.0,
            penalty_rounds: 6,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignProblem {
    pub n_tilde: u32,
    pub ancillas: usize,
    pub accept: Vec<u32>,
    #[serde(default = "default_tolerance")]
    pub cross_talk_tolerance: f64,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
}

fn default_tolerance() -> f64 {
    DEFAULT_CROSS_TALK_TOLERANCE
}

#[derive(Deserialize)]
struct ProblemDoc {
    n_tilde: u32,
    #[serde(default)]
    ancillas: usize,
    accept: Option<Vec<u32>>,
    #[serde(default = "default_tolerance")]
    cross_talk_tolerance: f64,
    #[serde(default)]
    optimizer: OptimizerConfig,
}

impl DesignProblem {
    /// Problem with the default accept pattern: one photon in each of the
    /// last `N~` ports.
    pub fn new(n_tilde: u32, ancillas: usize) -> Result<Self> {
        let ports = ancillas + 2;
        if n_tilde as usize > ports {
            return Err(Error::domain(format!(
                "no default accept pattern puts {n_tilde} single photons on {ports} ports"
            )));
        }
        let mut accept = vec![0; ports];
        for a in accept.iter_mut().rev().take(n_tilde as usize) {
            *a = 1;
        }
        Self::with_accept(n_tilde, ancillas, accept)
    }

    pub fn with_accept(n_tilde: u32, ancillas: usize, accept: Vec<u32>) -> Result<Self> {
        let p = DesignProblem {
            n_tilde,
            ancillas,
            accept,
            cross_talk_tolerance: DEFAULT_CROSS_TALK_TOLERANCE,
            optimizer: OptimizerConfig::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.accept.len() != self.ports() {
            return Err(Error::domain(format!(
                "accept pattern covers {} ports, problem has {}",
                self.accept.len(),
                self.ports()
            )));
        }
        let total: u32 = self.accept.iter().sum();
        if total != self.n_tilde {
            return Err(Error::domain(format!("accept pattern holds {total} photons, expected {}", self.n_tilde)));
        }
        if !(self.cross_talk_tolerance > 0.0) {
            return Err(Error::domain("cross_talk_tolerance must be positive"));
        }
        let c = &self.optimizer;
        if c.restarts == 0 || c.penalty_rounds == 0 || !(c.initial_penalty > 0.0) || !(c.penalty_growth >= 1.0) {
            return Err(Error::domain(
                "optimizer needs restarts >= 1, penalty_rounds >= 1, initial_penalty > 0, penalty_growth >= 1",
            ));
        }
        Ok(())
    }

    pub fn ports(&self) -> usize {
        self.ancillas + 2
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let doc: ProblemDoc = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let mut p = match doc.accept {
            Some(a) => Self::with_accept(doc.n_tilde, doc.ancillas, a)?,
            None => Self::new(doc.n_tilde, doc.ancillas)?,
        };
        p.cross_talk_tolerance = doc.cross_talk_tolerance;
        p.optimizer = doc.optimizer;
        p.validate()?;
        Ok(p)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("problem serializes")
    }
}

/// One block of the mesh, acting on adjacent modes `(mode, mode + 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshBlock {
    pub mode: usize,
    pub theta: f64,
    pub phi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub n_tilde: u32,
    pub ancillas: usize,
    pub accept: Vec<u32>,
    pub feasible: bool,
    pub success_probability: f64,
    pub max_cross_talk: f64,
    pub cross_talk_tolerance: f64,
    pub seed: u64,
    pub restarts: usize,
    pub evaluations: usize,
    pub best_restart: Option<usize>,
    /// Best feasible `|g_0|^2` found after each restart.
    pub history: Vec<f64>,
    #[serde(default)]
    pub block: Vec<MeshBlock>,
}

impl DesignReport {
    pub fn ports(&self) -> usize {
        self.ancillas + 2
    }

    /// Network as canonical beam splitters and phase shifters.
    pub fn elements(&self) -> Result<Vec<OpticalElement<f64>>> {
        let mut out = Vec::new();
        for b in &self.block {
            let (c, s) = (b.theta.cos(), b.theta.sin());
            let xi = Complex::from_polar(1.0, b.phi);
            let eta = Complex::new(-1.0, 0.0);
            let modes = (b.mode, b.mode + 1);
            if c < 0.0 {
                // -1 on both modes flips the sign of the whole block
                out.push(OpticalElement::PhaseShifter { mode: modes.0, phi: PI });
                out.push(OpticalElement::PhaseShifter { mode: modes.1, phi: PI });
                out.push(OpticalElement::BeamSplitter(BeamSplitterSpec::new(-c, -s, eta, xi, modes)?));
            } else {
                out.push(OpticalElement::BeamSplitter(BeamSplitterSpec::new(c, s, eta, xi, modes)?));
            }
        }
        Ok(out)
    }

    /// Detector built from the report, without re-checking cross-talk
    /// against the stricter design-validity tolerance.
    pub fn to_detector(&self) -> Result<DetectorDesign<f64>> {
        DetectorDesign::build_unchecked(self.n_tilde, self.ancillas, self.elements()?, self.accept.clone())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Adjacent-mode positions of the triangular mesh.
fn mesh_layout(ports: usize) -> Vec<usize> {
    let mut modes = Vec::new();
    for diag in 1..ports {
        for j in (0..diag).rev() {
            modes.push(j);
        }
    }
    modes
}

fn block_unitary(ports: usize, mode: usize, theta: f64, phi: f64) -> ModeUnitary<f64> {
    let (c, s) = (Complex::new(theta.cos(), 0.0), Complex::new(theta.sin(), 0.0));
    let e = Complex::from_polar(1.0, phi);
    let mut rows = ModeUnitary::<f64>::identity(ports).rows();
    rows[mode][mode] = c;
    rows[mode][mode + 1] = s;
    rows[mode + 1][mode] = s * e;
    rows[mode + 1][mode + 1] = -c * e;
    ModeUnitary::from_rows(rows).expect("mesh block is unitary")
}

/// Evaluates `g_m` for mesh parameters.
struct Evaluator {
    n_tilde: u32,
    ports: usize,
    layout: Vec<usize>,
    inputs: Vec<Occupation>,
    accept: Occupation,
    phases: Vec<Vec<Complex<f64>>>,
    calls: std::cell::Cell<usize>,
}

impl Evaluator {
    fn new(problem: &DesignProblem) -> Self {
        let ports = problem.ports();
        let n = problem.n_tilde;
        let inputs = (0..=n)
            .map(|k| {
                let mut occ = vec![0; ports];
                occ[0] = n - k;
                occ[1] = k;
                Occupation::new(occ)
            })
            .collect();
        let w: Complex<f64> = omega::<f64>(n).conj();
        let norm = ((n + 1) as f64).sqrt();
        let phases = (0..=n)
            .map(|m| (0..=n).map(|k| w.powu(m * k % (n + 1)) / norm).collect())
            .collect();
        Evaluator {
            n_tilde: n,
            ports,
            layout: mesh_layout(ports),
            inputs,
            accept: Occupation::new(problem.accept.clone()),
            phases,
            calls: std::cell::Cell::new(0),
        }
    }

    fn dim(&self) -> usize {
        2 * self.layout.len()
    }

    fn unitary(&self, x: &[f64]) -> ModeUnitary<f64> {
        self.layout
            .iter()
            .enumerate()
            .fold(ModeUnitary::identity(self.ports), |u, (k, &mode)| {
                u.compose(&block_unitary(self.ports, mode, x[2 * k], x[2 * k + 1]))
                    .expect("matching dimensions")
            })
    }

    fn g(&self, x: &[f64]) -> Vec<Complex<f64>> {
        self.calls.set(self.calls.get() + 1);
        let u = self.unitary(x);
        let amps: Vec<Complex<f64>> = self
            .inputs
            .iter()
            .map(|inp| transition_amplitude(&u, inp, &self.accept).expect("photon numbers match"))
            .collect();
        self.phases
            .iter()
            .map(|row| row.iter().zip(&amps).map(|(p, a)| p * a).sum())
            .collect()
    }

    fn objective(&self, x: &[f64], penalty: f64) -> f64 {
        let g = self.g(x);
        -g[0].norm_sqr() + penalty * g[1..].iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    fn residuals(&self, x: &[f64]) -> Vec<f64> {
        self.g(x)[1..].iter().flat_map(|z| [z.re, z.im]).collect()
    }

    fn score(&self, x: &[f64]) -> (f64, f64) {
        let g = self.g(x);
        let ct = g[1..].iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
        (g[0].norm_sqr(), ct)
    }

    /// Gauss-Newton on the cross-talk residuals with minimal-norm steps
    /// `dx = -J^T (J J^T + mu I)^{-1} r`, which moves `g_0` as little as
    /// possible.
    fn polish(&self, x: &mut Vec<f64>) {
        if self.n_tilde == 0 {
            return;
        }
        let h = 1e-7;
        let mu = 1e-14;
        for _ in 0..40 {
            let r = self.residuals(x);
            let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if rn < 1e-15 {
                return;
            }
            let jac: Vec<Vec<f64>> = (0..x.len())
                .map(|i| {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[i] += h;
                    xm[i] -= h;
                    let (rp, rm) = (self.residuals(&xp), self.residuals(&xm));
                    rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * h)).collect()
                })
                .collect();
            // jac[i][k] = d r_k / d x_i
            let nr = r.len();
            let mut a = vec![vec![0.0; nr]; nr];
            for (k, row) in a.iter_mut().enumerate() {
                for (l, v) in row.iter_mut().enumerate() {
                    *v = jac.iter().map(|col| col[k] * col[l]).sum::<f64>() + if k == l { mu } else { 0.0 };
                }
            }
            let Some(y) = solve(a, r.clone()) else { return };
            let step: Vec<f64> = jac.iter().map(|col| col.iter().zip(&y).map(|(j, y)| j * y).sum()).collect();
            let trial: Vec<f64> = x.iter().zip(&step).map(|(xi, d)| xi - d).collect();
            let rt = self.residuals(&trial).iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(rt < rn) {
                return;
            }
            *x = trial;
        }
    }
}

/// Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Nelder-Mead minimization from `x0` with initial simplex edge `step`.
fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: f64, max_iter: usize) -> Vec<f64> {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let v = f(&x);
        simplex.push((x, v));
    }
    let towards = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> { a.iter().zip(b).map(|(a, b)| a + t * (b - a)).collect() };
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        if spread.abs() < 1e-15 {
            break;
        }
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let worst = simplex[n].0.clone();
        let reflected = towards(&centroid, &worst, -1.0);
        let fr = f(&reflected);
        if fr < simplex[0].1 {
            let expanded = towards(&centroid, &worst, -2.0);
            let fe = f(&expanded);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let contracted = if fr < simplex[n].1 {
                towards(&centroid, &reflected, 0.5)
            } else {
                towards(&centroid, &worst, 0.5)
            };
            let fc = f(&contracted);
            if fc < fr.min(simplex[n].1) {
                simplex[n] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for (x, v) in simplex.iter_mut().skip(1) {
                    *x = towards(&best, x, 0.5);
                    *v = f(x);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0).0
}

/// Multi-start search; deterministic for a fixed problem and seed.
pub fn design(problem: &DesignProblem) -> DesignReport {
    let cfg = &problem.optimizer;
    let mut report = DesignReport {
        n_tilde: problem.n_tilde,
        ancillas: problem.ancillas,
        accept: problem.accept.clone(),
        feasible: false,
        success_probability: 0.0,
        max_cross_talk: f64::INFINITY,
        cross_talk_tolerance: problem.cross_talk_tolerance,
        seed: cfg.seed,
        restarts: 0,
        evaluations: 0,
        best_restart: None,
        history: Vec::new(),
        block: Vec::new(),
    };
    let ev = Evaluator::new(problem);
    if ev.dim() == 0 || problem.n_tilde == 0 {
        let x = vec![0.0; ev.dim()];
        let (p, ct) = ev.score(&x);
        report.feasible = ct < problem.cross_talk_tolerance && p > MIN_SUCCESS_PROBABILITY;
        report.success_probability = p;
        report.max_cross_talk = ct;
        report.evaluations = ev.calls.get();
        // the identity needs no elements
        report.block = Vec::new();
        return report;
    }

    // (feasible, probability, -cross-talk) of the best restart so far
    let mut best: Option<((bool, f64, f64), Vec<f64>)> = None;
    let mut best_feasible = 0.0;
    for restart in 0..cfg.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(restart as u64));
        let mut x: Vec<f64> = (0..ev.dim()).map(|_| rng.gen_range(0.0..TAU)).collect();
        let mut penalty = cfg.initial_penalty;
        for _ in 0..cfg.penalty_rounds {
            x = nelder_mead(&|y| ev.objective(y, penalty), &x, 0.3, cfg.max_iterations);
            ev.polish(&mut x);
            if ev.score(&x).1 < problem.cross_talk_tolerance {
                break;
            }
            penalty *= cfg.penalty_growth;
        }
        let (p, ct) = ev.score(&x);
        let feasible = ct < problem.cross_talk_tolerance && p > MIN_SUCCESS_PROBABILITY;
        if feasible && p > best_feasible {
            best_feasible = p;
        }
        report.history.push(best_feasible);
        let key = (feasible, p, -ct);
        let better = match &best {
            None => true,
            Some((k, _)) if key.0 != k.0 => key.0,
            // feasible restarts compete on |g_0|^2, the others on cross-talk
            Some((k, _)) if key.0 => key.1 > k.1,
            Some((k, _)) => key.2 > k.2,
        };
        if better {
            best = Some((key, x));
            report.best_restart = Some(restart);
        }
        report.restarts += 1;
    }
    let (_, x) = best.expect("at least one restart");
    let (p, ct) = ev.score(&x);
    report.feasible = ct < problem.cross_talk_tolerance && p > MIN_SUCCESS_PROBABILITY;
    report.success_probability = p;
    report.max_cross_talk = ct;
    report.evaluations = ev.calls.get();
    report.block = blocks(&ev, &x);
    report
}

fn blocks(ev: &Evaluator, x: &[f64]) -> Vec<MeshBlock> {
    ev.layout
        .iter()
        .enumerate()
        .map(|(k, &mode)| MeshBlock {
            mode,
            theta: x[2 * k].rem_euclid(TAU),
            phi: x[2 * k + 1].rem_euclid(TAU),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub trials: usize,
    pub max_deviation: f64,
}

/// Compares `design` against `p(N~)` times the ideal projector on random
/// three-mode inputs, measuring the first two modes.
pub fn verify_design(design: &DetectorDesign<f64>, trials: usize, seed: u64) -> Result<VerifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let state = random_state::<f64, _>(3, design.n_tilde() + 2, &mut rng);
        worst = worst.max(equivalence_deviation(&state, (0, 1), design)?);
    }
    Ok(VerifyReport {
        trials,
        max_deviation: worst,
    })
}
