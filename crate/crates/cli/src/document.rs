//! Pipeline and option documents (TOML).
//!
//! ```toml
//! [input]
//! amplitudes = [1.0, 0.5]        # or [[re, im], ...], basis = [..], or resource = ".."
//!
//! [[step]]
//! kind = "reversal"
//! n_tilde = 1
//! squeeze = [0.49, 0.7]
//! lambda2 = 0.7
//!
//! [options]
//! tail_epsilon = 1e-12
//! tolerance = 1e-10
//! detector = "reference"          # ideal | reference | optical | path to a design file
//! ```

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use fockport_core::bell::{DetectorDesign, SuccessModel};
use fockport_core::resources::{
    number_phase_bell, photon_subtracted, squeezed_vacuum, AmplitudeProfile, EprKind, SqueezeParams,
};
use fockport_core::teleport::{self, ManipulationStep, Pipeline, RunOptions};
use fockport_core::{Complex, State};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineDocument {
    pub input: InputDoc,
    #[serde(default, rename = "step")]
    pub steps: Vec<StepDoc>,
    #[serde(default)]
    pub options: OptionsDoc,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct InputDoc {
    pub amplitudes: Option<Vec<Amplitude>>,
    pub basis: Option<Vec<u32>>,
    /// `vacuum`, `squeezed_vacuum`, `photon_subtracted` or `number_phase_bell`.
    pub resource: Option<String>,
    pub lambda: Option<f64>,
    pub n: Option<u32>,
    pub m: Option<i64>,
}

/// A real amplitude or a `[re, im]` pair.
#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Amplitude {
    Real(f64),
    Complex([f64; 2]),
}

impl Amplitude {
    fn value(self) -> Complex<f64> {
        match self {
            Amplitude::Real(x) => Complex::new(x, 0.0),
            Amplitude::Complex([re, im]) => Complex::new(re, im),
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct StepDoc {
    pub kind: String,
    #[serde(default)]
    pub mode: usize,
    pub lambda: Option<f64>,
    pub lambda2: Option<f64>,
    pub shift_lambda: Option<f64>,
    pub n: Option<u32>,
    pub n1: Option<u32>,
    pub n2: Option<u32>,
    pub n_tilde: Option<u32>,
    pub r: Option<f64>,
    pub squeeze: Option<[f64; 2]>,
    /// `number_sum` or `number_difference` for custom resources.
    pub epr: Option<String>,
    pub profile: Option<Vec<Amplitude>>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OptionsDoc {
    pub tail_epsilon: Option<f64>,
    pub tolerance: Option<f64>,
    pub detector: Option<String>,
    pub seed: Option<u64>,
}

/// Command-line overrides; `None` keeps the document's value.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub tail_epsilon: Option<f64>,
    pub tolerance: Option<f64>,
    pub detector: Option<String>,
    pub seed: Option<u64>,
}

/// A fully parsed pipeline, ready to run.
#[derive(Clone, Debug)]
pub struct Job {
    pub input: State,
    pub pipeline: Pipeline<f64>,
    pub model: SuccessModel<f64>,
    pub detector: String,
    pub options: RunOptions<f64>,
    pub seed: u64,
}

impl PipelineDocument {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| anyhow!("{e}"))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Builds the job. Relative detector paths resolve against `base`.
    pub fn resolve(&self, overrides: &Overrides, base: Option<&Path>) -> Result<Job> {
        let defaults = RunOptions::<f64>::default();
        let options = RunOptions {
            tail_epsilon: overrides.tail_epsilon.or(self.options.tail_epsilon).unwrap_or(defaults.tail_epsilon),
            tolerance: overrides.tolerance.or(self.options.tolerance).unwrap_or(defaults.tolerance),
        };
        check_positive("tail_epsilon", options.tail_epsilon)?;
        check_positive("tolerance", options.tolerance)?;
        let input = self.input.build_with(options.tail_epsilon).context("input")?;
        let mut pipeline = Pipeline::new();
        for (i, step) in self.steps.iter().enumerate() {
            let stages = step.build().with_context(|| format!("step {} ({})", i + 1, step.kind))?;
            if let Some(bad) = stages.stages.iter().find(|s| s.mode >= input.modes()) {
                bail!(
                    "step {} ({}): mode = {} but the input has {} mode(s)",
                    i + 1,
                    step.kind,
                    bad.mode,
                    input.modes()
                );
            }
            pipeline = pipeline.chain(stages);
        }
        let detector = overrides
            .detector
            .clone()
            .or_else(|| self.options.detector.clone())
            .unwrap_or_else(|| "reference".into());
        let model = load_model(&detector, base).context("detector")?;
        Ok(Job {
            input,
            pipeline,
            model,
            detector,
            options,
            seed: overrides.seed.or(self.options.seed).unwrap_or(0),
        })
    }
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        bail!("{name} = {x} must be positive")
    }
}

/// `ideal`, `reference` (declared `p(2) = 3/8`), `optical` (built-in
/// networks), or a detector design file added to the optical bank.
pub fn load_model(spec: &str, base: Option<&Path>) -> Result<SuccessModel<f64>> {
    match spec {
        "ideal" => Ok(SuccessModel::Ideal),
        "reference" => Ok(SuccessModel::reference()),
        "optical" => Ok(SuccessModel::optical()?),
        path => {
            let mut p = PathBuf::from(path);
            if p.is_relative() {
                if let Some(b) = base {
                    p = b.join(p);
                }
            }
            let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
            let design = DetectorDesign::from_toml(&text).with_context(|| format!("parsing {}", p.display()))?;
            Ok(SuccessModel::optical()?.with_design(design))
        }
    }
}

impl InputDoc {
    pub fn build(&self) -> Result<State> {
        self.build_with(fockport_core::resources::DEFAULT_TAIL_EPSILON)
    }

    /// Squeezed resources are cut where their tail weight drops below `eps`.
    pub fn build_with(&self, eps: f64) -> Result<State> {
        let given = [self.amplitudes.is_some(), self.basis.is_some(), self.resource.is_some()];
        if given.iter().filter(|&&g| g).count() != 1 {
            bail!("give exactly one of amplitudes, basis or resource");
        }
        if let Some(amps) = &self.amplitudes {
            let c: Vec<_> = amps.iter().map(|a| a.value()).collect();
            let s = State::from_amplitudes(&c).context("amplitudes")?;
            return Ok(s.normalize());
        }
        if let Some(b) = &self.basis {
            return Ok(State::basis(b)?);
        }
        let name = self.resource.as_deref().unwrap_or_default();
        let lambda = || self.lambda.ok_or_else(|| anyhow!("resource `{name}` needs lambda"));
        Ok(match name {
            "vacuum" => State::vacuum(1)?,
            "squeezed_vacuum" => squeezed_vacuum(lambda()?, eps).context("lambda")?,
            "photon_subtracted" => photon_subtracted(lambda()?, eps).context("lambda")?,
            "number_phase_bell" => number_phase_bell(
                self.n.ok_or_else(|| anyhow!("resource `{name}` needs n"))?,
                self.m.unwrap_or(0),
            )?,
            other => bail!("unknown resource `{other}`"),
        })
    }
}

impl StepDoc {
    fn need<T: Copy>(&self, value: Option<T>, field: &str) -> Result<T> {
        value.ok_or_else(|| anyhow!("missing field `{field}`"))
    }

    fn squeeze(&self) -> Result<SqueezeParams<f64>> {
        let [l, lp] = self.need(self.squeeze, "squeeze")?;
        SqueezeParams::new(l, lp).context("squeeze")
    }

    /// Expands the step into one or more stages on `mode`.
    pub fn build(&self) -> Result<Pipeline<f64>> {
        let lambda = || self.need(self.lambda, "lambda");
        let n = || self.need(self.n, "n");
        let n_tilde = || self.need(self.n_tilde, "n_tilde");
        let single = |s: fockport_core::Result<ManipulationStep<f64>>| Ok::<_, anyhow::Error>(Pipeline::single(s?));
        let p = match self.kind.as_str() {
            "reversal_scaling" | "a" => single(ManipulationStep::reversal_scaling(lambda()?, n_tilde()?))?,
            "reversal_derivative" | "b" => single(ManipulationStep::reversal_derivative(lambda()?, n_tilde()?))?,
            "number_shift" | "c" => single(ManipulationStep::number_shift(n()?, n_tilde()?, self.lambda))?,
            "scaling" | "d" => match (self.r, self.squeeze) {
                (Some(r), None) => single(ManipulationStep::scaling(n()?, r))?,
                (None, Some(_)) => single(ManipulationStep::scaling_from_squeeze(n()?, self.squeeze()?))?,
                _ => bail!("scaling needs exactly one of `r` or `squeeze`"),
            },
            "custom" => {
                let profile = self.need(self.profile.as_ref(), "profile")?;
                let entries = profile.iter().map(|a| a.value()).collect();
                let profile = AmplitudeProfile::new(entries).context("profile")?;
                let kind = match self.epr.as_deref() {
                    Some("number_sum") => EprKind::NumberSum(n()?),
                    Some("number_difference") => EprKind::NumberDifference,
                    Some(other) => bail!("epr = `{other}`: expected number_sum or number_difference"),
                    None => bail!("missing field `epr`"),
                };
                single(ManipulationStep::custom(kind, profile, n_tilde()?))?
            }
            "scissors" => teleport::scissors(n()?, self.lambda)?,
            "window" => teleport::two_sided_scissors(self.need(self.n1, "n1")?, self.need(self.n2, "n2")?, self.lambda)?,
            "extractor" => teleport::extractor(n()?, self.lambda)?,
            "source" => teleport::n_photon_source(n()?, lambda()?)?,
            "reversal" => teleport::reversal(n_tilde()?, self.squeeze()?, self.need(self.lambda2, "lambda2")?)?,
            "differentiate" => teleport::differentiate(
                n_tilde()?,
                lambda()?,
                self.squeeze()?,
                self.need(self.lambda2, "lambda2")?,
                self.shift_lambda,
            )?,
            "filter" => teleport::filter(self.need(self.n1, "n1")?, n()?)?,
            other => bail!("unknown step kind `{other}`"),
        };
        Ok(p.on_mode(self.mode))
    }
}
