//! Teleportation-based photon-number manipulation.
//!
//! Teleporting mode `j` of an input through a two-mode resource with a
//! number-sum Bell measurement onto `|N~, 0>` rewrites its number
//! amplitudes:
//!
//! * number-difference resource `sum_k d_k |k,k>`:
//!   `c_n -> d_n c_{N~-n} / sqrt(N~+1)` for `0 <= n <= N~`;
//! * number-sum resource `sum_k d_k |N-k,k>`:
//!   `c_n -> d_n c_{n+dN} / sqrt(N~+1)` for `n0 <= n <= N`, with
//!   `dN = N~ - N` and `n0 = max(0, -dN)`.
//!
//! Out-of-window amplitudes contribute nothing. Outputs are always
//! renormalized; every dropped factor is booked as a stage probability.

use std::fmt;

use crate::bell::SuccessModel;
use crate::fock::{Conditional, PureState};
use crate::resources::{
    custom_epr, generalized_bell, photon_subtracted_truncated, preparation_probability, squeezed_vacuum,
    squeezed_vacuum_truncated, tail_cutoff, AmplitudeProfile, EprKind, GeneralizedBellSpec, SqueezeParams,
    DEFAULT_TAIL_EPSILON,
};
use crate::{Error, Real, Result};

/// Simulated and closed-form stage probabilities must agree this closely.
pub const ANALYTIC_TOLERANCE: f64 = 1e-10;

/// Below this gap `|1 - r^2|` the scaling normalization uses its `r = 1`
/// limit.
const UNIT_RATIO_GAP: f64 = 1e-9;

/// One teleportation through a resource.
#[derive(Clone, Debug, PartialEq)]
pub enum ManipulationStep<T: Real> {
    /// (a) `c_n -> lambda^n c_{N~-n}` with the squeezed vacuum `|lambda>`.
    ReversalScaling { lambda: T, n_tilde: u32 },
    /// (b) `c_n -> (n+1) lambda^n c_{N~-n}` with the photon-subtracted
    /// state `|lambda, -1>`.
    ReversalDerivative { lambda: T, n_tilde: u32 },
    /// (c) `c_n -> c_{n+dN}` with `|N, 0>`; `lambda` (with `lambda' =
    /// lambda`) books the resource's swapping preparation.
    NumberShift { n: u32, n_tilde: u32, lambda: Option<T> },
    /// (d) `c_n -> r^n c_n` with `|N, 0, r>` and `N~ = N`; `squeeze` books
    /// the swapping preparation and must reproduce `r`.
    Scaling {
        n: u32,
        r: T,
        squeeze: Option<SqueezeParams<T>>,
    },
    /// Teleportation through an arbitrary resource profile.
    Custom {
        kind: EprKind,
        profile: AmplitudeProfile<T>,
        n_tilde: u32,
    },
}

impl<T: Real> ManipulationStep<T> {
    pub fn reversal_scaling(lambda: T, n_tilde: u32) -> Result<Self> {
        Self::ReversalScaling { lambda, n_tilde }.validated()
    }

    pub fn reversal_derivative(lambda: T, n_tilde: u32) -> Result<Self> {
        Self::ReversalDerivative { lambda, n_tilde }.validated()
    }

    pub fn number_shift(n: u32, n_tilde: u32, lambda: Option<T>) -> Result<Self> {
        Self::NumberShift { n, n_tilde, lambda }.validated()
    }

    /// (d) with a bare `|N, 0, r>` resource.
    pub fn scaling(n: u32, r: T) -> Result<Self> {
        Self::Scaling { n, r, squeeze: None }.validated()
    }

    /// (d) with `r = lambda' / lambda` from a squeezer pair.
    pub fn scaling_from_squeeze(n: u32, params: SqueezeParams<T>) -> Result<Self> {
        Self::Scaling {
            n,
            r: params.ratio()?,
            squeeze: Some(params),
        }
        .validated()
    }

    pub fn custom(kind: EprKind, profile: AmplitudeProfile<T>, n_tilde: u32) -> Result<Self> {
        Self::Custom { kind, profile, n_tilde }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        let unit = |name: &str, l: T| {
            if l >= T::zero() && l < T::one() {
                Ok(())
            } else {
                Err(Error::domain(format!("{name} = {l} must lie in [0, 1)")))
            }
        };
        match &self {
            Self::ReversalScaling { lambda, .. } | Self::ReversalDerivative { lambda, .. } => unit("lambda", *lambda)?,
            Self::NumberShift { lambda, .. } => {
                if let Some(l) = lambda {
                    unit("lambda", *l)?;
                    if *l == T::zero() {
                        return Err(Error::domain("lambda = 0 cannot prepare a number-sum resource"));
                    }
                }
            }
            Self::Scaling { r, squeeze, .. } => {
                if !(*r > T::zero() && r.is_finite()) {
                    return Err(Error::domain(format!("r = {r} must be positive and finite")));
                }
                if let Some(p) = squeeze {
                    let ratio = p.ratio()?;
                    if (ratio - *r).abs() > T::tolerance() * r.max(T::one()) {
                        return Err(Error::domain(format!(
                            "r = {r} does not match lambda'/lambda = {ratio}"
                        )));
                    }
                }
            }
            Self::Custom { kind, profile, .. } => {
                custom_epr(*kind, profile)?;
            }
        }
        Ok(self)
    }

    /// Number sum of the Bell measurement.
    pub fn n_tilde(&self) -> u32 {
        match self {
            Self::ReversalScaling { n_tilde, .. }
            | Self::ReversalDerivative { n_tilde, .. }
            | Self::NumberShift { n_tilde, .. }
            | Self::Custom { n_tilde, .. } => *n_tilde,
            Self::Scaling { n, .. } => *n,
        }
    }

    /// Short tag: `a`, `b`, `c`, `d` or `custom`.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::ReversalScaling { .. } => "a",
            Self::ReversalDerivative { .. } => "b",
            Self::NumberShift { .. } => "c",
            Self::Scaling { .. } => "d",
            Self::Custom { .. } => "custom",
        }
    }

    /// The two-mode resource, truncated at `tail_epsilon` but never below
    /// the measured window.
    pub fn resource(&self, tail_epsilon: T) -> Result<PureState<T>> {
        match self {
            Self::ReversalScaling { lambda, n_tilde } => {
                squeezed_vacuum_truncated(*lambda, tail_cutoff(*lambda, tail_epsilon)?.max(*n_tilde))
            }
            Self::ReversalDerivative { lambda, n_tilde } => {
                let mut kmax = *n_tilde;
                while crate::resources::photon_subtracted_tail(*lambda, kmax) >= tail_epsilon {
                    kmax += 1;
                }
                photon_subtracted_truncated(*lambda, kmax)
            }
            Self::NumberShift { n, .. } => generalized_bell(&GeneralizedBellSpec::new(*n, 0, T::one())?),
            Self::Scaling { n, r, squeeze } => match squeeze {
                Some(p) => generalized_bell(&GeneralizedBellSpec::from_squeeze(*n, 0, *p)?),
                None => generalized_bell(&GeneralizedBellSpec::new(*n, 0, *r)?),
            },
            Self::Custom { kind, profile, .. } => custom_epr(*kind, profile),
        }
    }

    /// Squeezer pair and number sum of the swapping preparation, if booked.
    pub fn preparation(&self) -> Result<Option<(u32, SqueezeParams<T>)>> {
        Ok(match self {
            Self::NumberShift { n, lambda: Some(l), .. } => Some((*n, SqueezeParams::new(*l, *l)?)),
            Self::Scaling { n, squeeze: Some(p), .. } => Some((*n, *p)),
            _ => None,
        })
    }

    /// Projection probability from the target mode's photon-number weights
    /// `w_n`, excluding detector and preparation factors.
    pub fn analytic_projection(&self, weights: &[T]) -> T {
        let w = |n: usize| weights.get(n).copied().unwrap_or_else(T::zero);
        let nt = self.n_tilde();
        let inv = T::one() / T::from_usize_lossy(nt as usize + 1);
        match self {
            Self::ReversalScaling { lambda, .. } => {
                let x = *lambda * *lambda;
                let s = (0..=nt).fold(T::zero(), |acc, n| acc + x.powi(n as i32) * w((nt - n) as usize));
                (T::one() - x) * inv * s
            }
            Self::ReversalDerivative { lambda, .. } => {
                let x = *lambda * *lambda;
                let s = (0..=nt).fold(T::zero(), |acc, n| {
                    let k = T::from_usize_lossy(n as usize + 1);
                    acc + k * k * x.powi(n as i32) * w((nt - n) as usize)
                });
                (T::one() - x).powi(3) / (T::one() + x) * inv * s
            }
            Self::NumberShift { n, .. } => sum_kind_projection(*n, nt, T::one(), &w),
            Self::Scaling { n, r, .. } => sum_kind_projection(*n, nt, *r, &w),
            Self::Custom { kind, profile, .. } => match kind {
                EprKind::NumberDifference => (0..=nt as usize).fold(T::zero(), |acc, k| {
                    acc + profile.get(k).norm_sqr() * w(nt as usize - k)
                }) * inv,
                EprKind::NumberSum(n) => {
                    let (n, nt) = (*n as i64, nt as i64);
                    let n0 = (n - nt).max(0);
                    (n0..=n).fold(T::zero(), |acc, k| {
                        acc + profile.get(k as usize).norm_sqr() * w((k + nt - n) as usize)
                    }) * inv
                }
            },
        }
    }

    /// Closed-form success probability for the uniform input
    /// `|c_n|^2 = 1/(N~+1)`, `n <= N~`, including `p(N~)` but not the
    /// resource preparation.
    pub fn uniform_probability(&self, p: T) -> T {
        let nt = self.n_tilde();
        let base = p / T::from_usize_lossy((nt as usize + 1).pow(2));
        match self {
            Self::ReversalScaling { lambda, .. } => base * (T::one() - lambda.powi(2 * (nt as i32 + 1))),
            Self::ReversalDerivative { lambda, .. } => {
                let x = *lambda * *lambda;
                let s = (0..=nt).fold(T::zero(), |acc, n| {
                    let k = T::from_usize_lossy(n as usize + 1);
                    acc + k * k * x.powi(n as i32)
                });
                base * (T::one() - x).powi(3) / (T::one() + x) * s
            }
            Self::NumberShift { n, .. } => {
                let n0 = n.saturating_sub(nt);
                base * (T::one() - T::from_usize_lossy(n0 as usize) / T::from_usize_lossy(*n as usize + 1))
            }
            Self::Scaling { .. } => base,
            Self::Custom { .. } => {
                let w = vec![T::one() / T::from_usize_lossy(nt as usize + 1); nt as usize + 1];
                p * self.analytic_projection(&w)
            }
        }
    }
}

/// `(1-r^2)/(1-r^{2(N+1)}) sum_{n=n0}^{N} r^{2n} w_{n+dN} / (N~+1)`.
fn sum_kind_projection<T: Real>(n: u32, nt: u32, r: T, w: &dyn Fn(usize) -> T) -> T {
    let x = r * r;
    let norm = if (T::one() - x).abs() < T::lit(UNIT_RATIO_GAP) {
        T::one() / T::from_usize_lossy(n as usize + 1)
    } else {
        (T::one() - x) / (T::one() - x.powi(n as i32 + 1))
    };
    let (ni, nti) = (n as i64, nt as i64);
    let n0 = (ni - nti).max(0);
    let s = (n0..=ni).fold(T::zero(), |acc, k| acc + x.powi(k as i32) * w((k + nti - ni) as usize));
    norm * s / T::from_usize_lossy(nt as usize + 1)
}

impl<T: Real> fmt::Display for ManipulationStep<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ReversalScaling { lambda, n_tilde } => write!(f, "(a) reversal+scaling lambda={lambda} N~={n_tilde}"),
            Self::ReversalDerivative { lambda, n_tilde } => {
                write!(f, "(b) reversal+derivative lambda={lambda} N~={n_tilde}")
            }
            Self::NumberShift { n, n_tilde, .. } => write!(f, "(c) number shift N={n} N~={n_tilde}"),
            Self::Scaling { n, r, .. } => write!(f, "(d) scaling N={n} r={r}"),
            Self::Custom { kind, n_tilde, .. } => match kind {
                EprKind::NumberSum(n) => write!(f, "custom number-sum N={n} N~={n_tilde}"),
                EprKind::NumberDifference => write!(f, "custom number-difference N~={n_tilde}"),
            },
        }
    }
}

/// Teleports mode `input_mode` of `input` through `epr`, measuring the
/// number sum `n_tilde` with `model`. The output replaces the input mode;
/// other input modes are untouched. The probability includes `p(N~)`.
pub fn teleport<T: Real>(
    input: &PureState<T>,
    input_mode: usize,
    epr: &PureState<T>,
    n_tilde: u32,
    model: &SuccessModel<T>,
) -> Result<Conditional<T>> {
    if input_mode >= input.modes() {
        return Err(Error::ModeOutOfRange {
            mode: input_mode,
            modes: input.modes(),
        });
    }
    if epr.modes() != 2 {
        return Err(Error::ModeMismatch {
            expected: 2,
            found: epr.modes(),
        });
    }
    let m = input.modes();
    let joint = input.tensor(epr);
    let out = model.measure(&joint, (input_mode, m), n_tilde)?;
    let state = match out.state {
        // remaining order: input modes without `input_mode`, then Bob's mode
        Some(s) => {
            let mut order: Vec<usize> = (0..m - 1).collect();
            order.insert(input_mode, m - 1);
            Some(s.permute(&order)?)
        }
        None => None,
    };
    Ok(Conditional {
        state,
        probability: out.probability,
    })
}

/// Closed-form probability of one stage, factor by factor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyticBreakdown<T: Real> {
    /// `P(N, lambda, lambda')` of the resource's swapping preparation.
    pub preparation: Option<T>,
    /// `p(N)` of the preparation's Bell measurement.
    pub preparation_detector: Option<T>,
    /// `p(N~)` of the teleportation's Bell measurement.
    pub detector: T,
    pub projection: T,
}

impl<T: Real> AnalyticBreakdown<T> {
    pub fn total(&self) -> T {
        self.preparation.unwrap_or_else(T::one)
            * self.preparation_detector.unwrap_or_else(T::one)
            * self.detector
            * self.projection
    }
}

/// Closed-form success probability of `step` acting on mode `mode` of
/// `input`.
pub fn analytic_probability<T: Real>(
    step: &ManipulationStep<T>,
    input: &PureState<T>,
    mode: usize,
    model: &SuccessModel<T>,
) -> Result<AnalyticBreakdown<T>> {
    let weights = input.marginal(mode)?;
    let norm = input.norm_sqr();
    let weights: Vec<T> = weights.into_iter().map(|w| w / norm).collect();
    let prep = step.preparation()?;
    Ok(AnalyticBreakdown {
        preparation: prep.map(|(n, p)| preparation_probability(n, &p)),
        preparation_detector: prep.map(|(n, _)| model.factor(n)).transpose()?,
        detector: model.factor(step.n_tilde())?,
        projection: step.analytic_projection(&weights),
    })
}

/// A step applied to one mode of the running state.
#[derive(Clone, Debug, PartialEq)]
pub struct Stage<T: Real> {
    pub step: ManipulationStep<T>,
    pub mode: usize,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Pipeline<T: Real> {
    pub stages: Vec<Stage<T>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions<T: Real> {
    pub tail_epsilon: T,
    /// Allowed gap between simulated and closed-form stage probabilities.
    pub tolerance: T,
}

impl<T: Real> Default for RunOptions<T> {
    fn default() -> Self {
        RunOptions {
            tail_epsilon: T::lit(DEFAULT_TAIL_EPSILON),
            tolerance: T::lit(ANALYTIC_TOLERANCE),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageProbability<T: Real> {
    pub label: String,
    pub probability: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineResult<T: Real> {
    /// Normalized output state.
    pub output: PureState<T>,
    pub stages: Vec<StageProbability<T>>,
    /// Product of all stage probabilities.
    pub net: T,
}

impl<T: Real> Pipeline<T> {
    pub fn new() -> Self {
        Pipeline { stages: Vec::new() }
    }

    pub fn single(step: ManipulationStep<T>) -> Self {
        Self::new().then(step, 0)
    }

    pub fn then(mut self, step: ManipulationStep<T>, mode: usize) -> Self {
        self.stages.push(Stage { step, mode });
        self
    }

    pub fn chain(mut self, other: Pipeline<T>) -> Self {
        self.stages.extend(other.stages);
        self
    }

    /// Moves every stage onto `mode`.
    pub fn on_mode(mut self, mode: usize) -> Self {
        for s in &mut self.stages {
            s.mode = mode;
        }
        self
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    /// Runs every stage, checking each simulated probability against its
    /// closed form. A stage that cannot succeed aborts the run with
    /// [`Error::ZeroProbability`].
    pub fn run(&self, input: &PureState<T>, model: &SuccessModel<T>, opts: &RunOptions<T>) -> Result<PipelineResult<T>> {
        let mut state = input.clone().normalize();
        let mut stages = Vec::new();
        for (i, stage) in self.stages.iter().enumerate() {
            let name = format!("{}: {}", i + 1, stage.step);
            let analytic = analytic_probability(&stage.step, &state, stage.mode, model)?;
            if let (Some(prep), Some(det)) = (analytic.preparation, analytic.preparation_detector) {
                stages.push(StageProbability {
                    label: format!("{name}: resource preparation"),
                    probability: prep,
                });
                stages.push(StageProbability {
                    label: format!("{name}: preparation detector"),
                    probability: det,
                });
            }
            let epr = stage.step.resource(opts.tail_epsilon)?;
            let out = teleport(&state, stage.mode, &epr, stage.step.n_tilde(), model)?;
            let expected = analytic.detector * analytic.projection;
            if (out.probability - expected).abs() > opts.tolerance {
                return Err(Error::AnalyticMismatch {
                    stage: name,
                    simulated: out.probability.to_f64_lossy(),
                    analytic: expected.to_f64_lossy(),
                });
            }
            let next = match out.state {
                Some(s) if out.probability > T::zero() && analytic.detector > T::zero() => s,
                _ => return Err(Error::ZeroProbability { stage: name }),
            };
            stages.push(StageProbability {
                label: format!("{name}: detector"),
                probability: analytic.detector,
            });
            stages.push(StageProbability {
                label: format!("{name}: projection"),
                probability: out.probability / analytic.detector,
            });
            state = next;
        }
        let net = stages.iter().fold(T::one(), |acc, s| acc * s.probability);
        Ok(PipelineResult {
            output: state,
            stages,
            net,
        })
    }
}

pub fn run_pipeline<T: Real>(
    input: &PureState<T>,
    pipeline: &Pipeline<T>,
    model: &SuccessModel<T>,
) -> Result<PipelineResult<T>> {
    pipeline.run(input, model, &RunOptions::default())
}

/// Truncation to `0..=N`: (c) with `N~ = N`.
pub fn scissors<T: Real>(n: u32, lambda: Option<T>) -> Result<Pipeline<T>> {
    Ok(Pipeline::single(ManipulationStep::number_shift(n, n, lambda)?))
}

/// Keeps the window `n1..=n2`: (c) with `(N, N~) = (n2-n1, n2)`, then
/// `(n2, n2-n1)`.
pub fn two_sided_scissors<T: Real>(n1: u32, n2: u32, lambda: Option<T>) -> Result<Pipeline<T>> {
    if n1 > n2 {
        return Err(Error::domain(format!("window [{n1}, {n2}] is empty")));
    }
    Ok(Pipeline::new()
        .then(ManipulationStep::number_shift(n2 - n1, n2, lambda)?, 0)
        .then(ManipulationStep::number_shift(n2, n2 - n1, lambda)?, 0))
}

/// Passes only `|N>`.
pub fn extractor<T: Real>(n: u32, lambda: Option<T>) -> Result<Pipeline<T>> {
    two_sided_scissors(n, n, lambda)
}

/// `|0> -> |N>`: (c) with `N~ = 0`.
pub fn n_photon_source<T: Real>(n: u32, lambda: T) -> Result<Pipeline<T>> {
    Ok(Pipeline::single(ManipulationStep::number_shift(n, 0, Some(lambda))?))
}

/// Squeezer pair oriented so that `lambda'/lambda = target`, if either
/// orientation matches.
fn cancelling_pair<T: Real>(params: SqueezeParams<T>, target: T) -> Result<SqueezeParams<T>> {
    let tol = T::tolerance() * target.max(T::one());
    for p in [params, params.swapped()] {
        if let Ok(r) = p.ratio() {
            if (r - target).abs() <= tol {
                return Ok(p);
            }
        }
    }
    Err(Error::domain(format!(
        "squeezing parameters ({}, {}) cannot give the ratio {target}",
        params.lambda(),
        params.lambda_prime()
    )))
}

/// Reversal of `0..=N~`: (a)[lambda''] then (d)[r = 1/lambda''] with the
/// squeezer pair oriented to give that ratio.
pub fn reversal<T: Real>(n_tilde: u32, squeeze: SqueezeParams<T>, lambda2: T) -> Result<Pipeline<T>> {
    if !(lambda2 > T::zero()) {
        return Err(Error::domain("lambda'' must be positive to be cancelled"));
    }
    let pair = cancelling_pair(squeeze, T::one() / lambda2)?;
    Ok(Pipeline::new()
        .then(ManipulationStep::reversal_scaling(lambda2, n_tilde)?, 0)
        .then(ManipulationStep::scaling_from_squeeze(n_tilde, pair)?, 0))
}

/// `c_n -> (n+1) lambda^n c_{n+1}` on `0..=N~-1`: (c) shift by one, reversal
/// on `0..=N~-1`, then (b)[lambda].
pub fn differentiate<T: Real>(
    n_tilde: u32,
    lambda: T,
    squeeze: SqueezeParams<T>,
    lambda2: T,
    shift_lambda: Option<T>,
) -> Result<Pipeline<T>> {
    if n_tilde == 0 {
        return Err(Error::domain("differentiation needs N~ >= 1"));
    }
    let n = n_tilde - 1;
    Ok(Pipeline::single(ManipulationStep::number_shift(n, n_tilde, shift_lambda)?)
        .chain(reversal(n, squeeze, lambda2)?)
        .then(ManipulationStep::reversal_derivative(lambda, n)?, 0))
}

/// Input `|lambda>` and the pipeline turning it into
/// `sum_{n<=N} |n,n> / sqrt(N+1)`: (d)[r = lambda''/lambda' = 1/lambda] on
/// the second mode.
pub fn truncated_maximal_epr<T: Real>(
    n: u32,
    lambda: T,
    lambda_prime: T,
    lambda2: T,
    tail_epsilon: T,
) -> Result<(PureState<T>, Pipeline<T>)> {
    if !(lambda > T::zero()) {
        return Err(Error::domain("lambda must be positive to be cancelled"));
    }
    let input = squeezed_vacuum(lambda, tail_epsilon)?;
    let pair = cancelling_pair(SqueezeParams::new(lambda_prime, lambda2)?, T::one() / lambda)?;
    Ok((input, Pipeline::new().then(ManipulationStep::scaling_from_squeeze(n, pair)?, 1)))
}

/// `sum_{n1<=n<=n2} |n,n>`: the truncated maximal state with its first mode
/// cut to the window.
pub fn truncated_maximal_epr_window<T: Real>(
    n1: u32,
    n2: u32,
    lambda: T,
    lambda_prime: T,
    lambda2: T,
    shift_lambda: Option<T>,
    tail_epsilon: T,
) -> Result<(PureState<T>, Pipeline<T>)> {
    let (input, p) = truncated_maximal_epr(n2, lambda, lambda_prime, lambda2, tail_epsilon)?;
    Ok((input, p.chain(two_sided_scissors(n1, n2, shift_lambda)?.on_mode(0))))
}

/// Suppresses `|n1>` within `0..=N`: a flat number-sum resource with
/// `d_{n1} = 0`.
pub fn filter<T: Real>(n1: u32, n: u32) -> Result<Pipeline<T>> {
    if n1 > n || n == 0 {
        return Err(Error::domain(format!("filter needs n1 <= N and N >= 1 (n1 = {n1}, N = {n})")));
    }
    let amp = T::one() / T::from_usize_lossy(n as usize).sqrt();
    let d: Vec<T> = (0..=n).map(|k| if k == n1 { T::zero() } else { amp }).collect();
    let profile = AmplitudeProfile::real(&d)?;
    Ok(Pipeline::single(ManipulationStep::custom(EprKind::NumberSum(n), profile, n)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::phase_distance;
    use crate::resources::number_phase_bell;
    use crate::Complex;

    type S = PureState<f64>;

    fn amps(s: &S) -> Vec<f64> {
        s.single_mode_amplitudes().unwrap().iter().map(|z| z.re).collect()
    }

    #[test]
    fn n_photon_source_from_vacuum() {
        for n in 0..4 {
            let epr = number_phase_bell(n, 0).unwrap();
            let out = teleport(&S::basis(&[0]).unwrap(), 0, &epr, 0, &SuccessModel::Ideal).unwrap();
            assert_eq!(out.state.unwrap(), S::basis(&[n]).unwrap());
            assert!((out.probability - 1.0 / (n as f64 + 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn squeezed_resource_example() {
        let input = S::from_real_amplitudes(&[1.0, 0.5]).unwrap().normalize();
        let epr = squeezed_vacuum(0.7, 1e-12).unwrap();
        let out = teleport(&input, 0, &epr, 1, &SuccessModel::Ideal).unwrap();
        assert!((out.probability - 0.15096).abs() < 1e-12);
        let a = amps(&out.state.unwrap());
        assert!((a[1] / a[0] - 0.7 / 0.5).abs() < 1e-12);
    }

    #[test]
    fn unreachable_input() {
        let epr = number_phase_bell(1, 0).unwrap();
        let out = teleport(&S::basis(&[2]).unwrap(), 0, &epr, 1, &SuccessModel::Ideal).unwrap();
        assert_eq!(out.probability, 0.0);
        assert!(out.state.is_none());
        assert!(teleport(&S::basis(&[2]).unwrap(), 1, &epr, 1, &SuccessModel::Ideal).is_err());
        assert!(teleport(&S::basis(&[2]).unwrap(), 0, &S::basis(&[1]).unwrap(), 1, &SuccessModel::Ideal).is_err());
    }

    #[test]
    fn output_takes_input_slot() {
        let input = S::basis(&[3, 0, 5]).unwrap();
        let epr = number_phase_bell(2, 0).unwrap();
        let out = teleport(&input, 1, &epr, 0, &SuccessModel::Ideal).unwrap();
        assert_eq!(out.state.unwrap(), S::basis(&[3, 2, 5]).unwrap());
    }

    #[test]
    fn uniform_closed_forms() {
        let p = 0.375f64;
        let nt = 2;
        let w = vec![1.0 / 3.0; 3];
        let steps = [
            ManipulationStep::reversal_scaling(0.6, nt).unwrap(),
            ManipulationStep::reversal_derivative(0.6, nt).unwrap(),
            ManipulationStep::number_shift(4, nt, None).unwrap(),
            ManipulationStep::number_shift(1, nt, None).unwrap(),
            ManipulationStep::scaling(nt, 1.7).unwrap(),
        ];
        for s in &steps {
            assert!((p * s.analytic_projection(&w) - s.uniform_probability(p)).abs() < 1e-15, "{s}");
        }
        assert!((steps[4].uniform_probability(p) - 0.375 / 9.0).abs() < 1e-16);
        let scissors = ManipulationStep::<f64>::number_shift(2, 2, None).unwrap();
        assert!((scissors.uniform_probability(p) - 0.375 / 9.0).abs() < 1e-16);
    }

    #[test]
    fn step_validation() {
        assert!(ManipulationStep::reversal_scaling(1.2, 1).is_err());
        assert!(ManipulationStep::scaling(1, -1.0).is_err());
        let p = SqueezeParams::new(0.5, 0.25).unwrap();
        assert!(ManipulationStep::Scaling { n: 1, r: 2.0, squeeze: Some(p) }.validated().is_err());
        assert!(ManipulationStep::scaling_from_squeeze(1, p).is_ok());
        let bad = AmplitudeProfile::real(&[1.0, 1.0]).unwrap();
        assert!(ManipulationStep::custom(EprKind::NumberSum(1), bad, 1).is_err());
    }

    #[test]
    fn empty_pipeline_is_identity() {
        let input = S::from_real_amplitudes(&[3.0, 4.0]).unwrap();
        let out = run_pipeline(&input, &Pipeline::new(), &SuccessModel::Ideal).unwrap();
        assert_eq!(out.net, 1.0);
        assert!(out.stages.is_empty());
        assert!(phase_distance(&out.output, &input.normalize()).unwrap() < 1e-15);
    }

    #[test]
    fn stage_ledger_multiplies() {
        let input = S::from_real_amplitudes(&[1.0, 0.5]).unwrap();
        let p = SqueezeParams::new(0.49, 0.7).unwrap();
        let pipe = reversal(1, p, 0.7).unwrap();
        let out = run_pipeline(&input, &pipe, &SuccessModel::Ideal).unwrap();
        let prod: f64 = out.stages.iter().map(|s| s.probability).product();
        assert_eq!(prod, out.net);
        assert_eq!(out.stages.len(), 6);
        let a = amps(&out.output);
        assert!((a[0] / a[1] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn scissors_truncates() {
        let input = S::from_real_amplitudes(&[0.5, 0.5, 0.5, 0.5]).unwrap();
        let out = run_pipeline(&input, &scissors(1, None).unwrap(), &SuccessModel::Ideal).unwrap();
        let a = amps(&out.output);
        assert_eq!(a.len(), 2);
        assert!((a[0] - a[1]).abs() < 1e-15);
        // kept weight 1/2, times 1/(N+1) from the resource and 1/(N~+1)
        assert!((out.net - 0.5 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn two_sided_window() {
        let input = S::from_real_amplitudes(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let out = run_pipeline(&input, &two_sided_scissors(1, 3, None).unwrap(), &SuccessModel::Ideal).unwrap();
        let a = amps(&out.output);
        let want = S::from_real_amplitudes(&[0.0, 2.0, 3.0, 4.0]).unwrap().normalize();
        assert!(phase_distance(&out.output, &want).unwrap() < 1e-12, "{a:?}");
    }

    #[test]
    fn extractor_dichotomy() {
        let input = S::from_real_amplitudes(&[1.0, 1.0, 1.0]).unwrap();
        let out = run_pipeline(&input, &extractor(2, None).unwrap(), &SuccessModel::Ideal).unwrap();
        assert_eq!(out.output, S::basis(&[2]).unwrap());
        let input = S::from_real_amplitudes(&[1.0, 1.0, 0.0, 1.0]).unwrap();
        let err = run_pipeline(&input, &extractor(2, None).unwrap(), &SuccessModel::Ideal).unwrap_err();
        assert!(matches!(err, Error::ZeroProbability { .. }));
    }

    #[test]
    fn differentiation() {
        let c = [1.0, 0.5, 0.25];
        let input = S::from_real_amplitudes(&c).unwrap();
        let lam = 0.6;
        let pipe = differentiate(2, lam, SqueezeParams::new(0.49, 0.7).unwrap(), 0.7, None).unwrap();
        let out = run_pipeline(&input, &pipe, &SuccessModel::Ideal).unwrap();
        let want: Vec<f64> = (0..2).map(|n| (n as f64 + 1.0) * lam.powi(n as i32) * c[n + 1]).collect();
        let want = S::from_real_amplitudes(&want).unwrap().normalize();
        assert!(phase_distance(&out.output, &want).unwrap() < 1e-10);
    }

    #[test]
    fn maximal_epr_and_window() {
        let (input, pipe) = truncated_maximal_epr(2, 0.7, 0.49, 0.7, 1e-12).unwrap();
        let out = run_pipeline(&input, &pipe, &SuccessModel::Ideal).unwrap();
        let h = 1.0 / 3f64.sqrt();
        for n in 0..3 {
            assert!((out.output.amplitude_of(&[n, n]).norm() - h).abs() < 1e-10);
        }
        assert_eq!(out.output.len(), 3);

        let (input, pipe) = truncated_maximal_epr_window(1, 2, 0.7, 0.49, 0.7, None, 1e-12).unwrap();
        let out = run_pipeline(&input, &pipe, &SuccessModel::Ideal).unwrap();
        assert_eq!(out.output.len(), 2);
        assert!((out.output.amplitude_of(&[1, 1]).norm() - 0.5f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn filter_removes_component() {
        let input = S::from_real_amplitudes(&[1.0, 1.0, 1.0]).unwrap();
        let out = run_pipeline(&input, &filter(1, 2).unwrap(), &SuccessModel::Ideal).unwrap();
        assert_eq!(out.output.amplitude_of(&[1]), Complex::new(0.0, 0.0));
        assert!((out.output.amplitude_of(&[0]).norm() - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(filter::<f64>(3, 2).is_err());
    }

    #[test]
    fn optical_model_runs() {
        let input = S::from_real_amplitudes(&[1.0, 0.5, 0.25]).unwrap();
        let p = SqueezeParams::new(0.7, 0.49).unwrap();
        let pipe = reversal(2, p, 0.7).unwrap();
        let optical = SuccessModel::optical().unwrap();
        let a = run_pipeline(&input, &pipe, &optical).unwrap();
        let b = run_pipeline(&input, &pipe, &SuccessModel::Ideal).unwrap();
        assert!(phase_distance(&a.output, &b.output).unwrap() < 1e-10);
        let p2 = optical.factor(2).unwrap();
        assert!((a.net - b.net * p2.powi(3)).abs() < 1e-15);
    }
}
