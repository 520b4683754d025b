//! Number-sum Bell measurements.
//!
//! [`ideal_bell_project`] is the reference projector onto `|N~, 0>`. The
//! physical models post-select on detector patterns after a linear-optical
//! network: [`fifty_fifty_measure`] resolves every Bell state with number
//! sum 0 or 1, and a [`DetectorDesign`] conditionally resolves `|N~, 0>`
//! with success probability `|g_0|^2`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::fock::{phase_distance, Conditional, Occupation, PureState};
use crate::optics::{apply_on, circuit_unitary, BeamSplitterSpec, ModeUnitary, OpticalElement};
use crate::resources::{number_phase_bell, prepare_via_swapping, SqueezeParams};
use crate::{Complex, Error, Real, Result};

/// Cross-talk amplitudes above this make a detector design invalid.
pub const CROSS_TALK_TOLERANCE: f64 = 1e-10;

/// `|N~, 0> = sum_l |N~-l, l> / sqrt(N~+1)`.
pub fn bell_state<T: Real>(n_tilde: u32) -> PureState<T> {
    number_phase_bell(n_tilde, 0).expect("number-phase Bell state is always valid")
}

fn pair(modes: (usize, usize)) -> [usize; 2] {
    [modes.0, modes.1]
}

/// Projects `modes` onto `|N~, m>`. The conditional state is `None` when
/// nothing remains or the outcome is impossible.
pub fn ideal_bell_project_phase<T: Real>(
    state: &PureState<T>,
    modes: (usize, usize),
    n_tilde: u32,
    m: i64,
) -> Result<Conditional<T>> {
    let bra = number_phase_bell::<T>(n_tilde, m)?;
    state.contract(&pair(modes), &bra)
}

pub fn ideal_bell_project<T: Real>(
    state: &PureState<T>,
    modes: (usize, usize),
    n_tilde: u32,
) -> Result<Conditional<T>> {
    ideal_bell_project_phase(state, modes, n_tilde, 0)
}

/// Projects `modes` onto a basis pattern, also when no modes remain.
fn project_pattern<T: Real>(state: &PureState<T>, modes: &[usize], pattern: &[u32]) -> Result<Conditional<T>> {
    if modes.len() == state.modes() {
        Ok(Conditional {
            state: None,
            probability: state.pattern_probability(modes, pattern)?,
        })
    } else {
        state.project_modes(modes, pattern)
    }
}

/// Outcome distribution of the 50/50 beam-splitter Bell measurement.
#[derive(Clone, Debug)]
pub struct FiftyFiftyOutcome<T: Real> {
    /// Pattern (0,0): `|0,0>`.
    pub vacuum: Conditional<T>,
    /// Pattern (1,0): `|1,0>_B = (|1,0> + |0,1>)/sqrt 2`.
    pub plus: Conditional<T>,
    /// Pattern (0,1): `|1,1>_B = (|1,0> - |0,1>)/sqrt 2`.
    pub minus: Conditional<T>,
    /// Weight of every other detector pattern.
    pub other: T,
}

impl<T: Real> FiftyFiftyOutcome<T> {
    pub fn bell_total(&self) -> T {
        self.vacuum.probability + self.plus.probability + self.minus.probability
    }

    pub fn total(&self) -> T {
        self.bell_total() + self.other
    }
}

/// Mixes `modes` on a 50/50 beam splitter and reads out 0/1-photon
/// detectors behind it.
pub fn fifty_fifty_measure<T: Real>(state: &PureState<T>, modes: (usize, usize)) -> Result<FiftyFiftyOutcome<T>> {
    let measured = pair(modes);
    state.mode_mask(&measured)?;
    let bs = ModeUnitary::beam_splitter(&BeamSplitterSpec::fifty_fifty(0, 1)?, 2)?;
    let zero = || Conditional {
        state: None,
        probability: T::zero(),
    };
    // Only the sectors with at most one photon produce Bell patterns, so the
    // rest never has to pass through the beam splitter.
    let vacuum = match state.restrict_sector(&measured, 0)? {
        Some(s) => project_pattern(&s, &measured, &[0, 0])?,
        None => zero(),
    };
    let (plus, minus) = match state.restrict_sector(&measured, 1)? {
        Some(s) => {
            let out = apply_on(&bs, &s, &measured)?;
            (
                project_pattern(&out, &measured, &[1, 0])?,
                project_pattern(&out, &measured, &[0, 1])?,
            )
        }
        None => (zero(), zero()),
    };
    let bell = vacuum.probability + plus.probability + minus.probability;
    let other = (state.norm_sqr() - bell).max(T::zero());
    Ok(FiftyFiftyOutcome {
        vacuum,
        plus,
        minus,
        other,
    })
}

/// A post-selected linear-optical detector for `|N~, 0>`.
///
/// The two measured modes are followed by `ancillas` vacuum modes; the
/// network acts on all of them and the run is accepted when the output
/// ports show `accept`.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectorDesign<T: Real> {
    n_tilde: u32,
    ancillas: usize,
    elements: Vec<OpticalElement<T>>,
    unitary: ModeUnitary<T>,
    accept: Vec<u32>,
    g: Vec<Complex<T>>,
}

impl<T: Real> DetectorDesign<T> {
    /// Builds a design and checks that it only accepts `|N~, 0>`.
    pub fn build(n_tilde: u32, ancillas: usize, elements: Vec<OpticalElement<T>>, accept: Vec<u32>) -> Result<Self> {
        Self::build_unchecked(n_tilde, ancillas, elements, accept)?.validated()
    }

    pub fn from_unitary(n_tilde: u32, unitary: ModeUnitary<T>, accept: Vec<u32>) -> Result<Self> {
        Self::from_unitary_unchecked(n_tilde, unitary, accept)?.validated()
    }

    /// Builds a design without the cross-talk check, e.g. to audit a
    /// corrupted or candidate network.
    pub fn build_unchecked(
        n_tilde: u32,
        ancillas: usize,
        elements: Vec<OpticalElement<T>>,
        accept: Vec<u32>,
    ) -> Result<Self> {
        let unitary = circuit_unitary(&elements, ancillas + 2)?;
        let mut d = Self::from_unitary_unchecked(n_tilde, unitary, accept)?;
        d.elements = elements;
        Ok(d)
    }

    pub fn from_unitary_unchecked(n_tilde: u32, unitary: ModeUnitary<T>, accept: Vec<u32>) -> Result<Self> {
        let ports = unitary.dim();
        if ports < 2 {
            return Err(Error::InvalidDesign("network needs at least the two measured modes".into()));
        }
        if accept.len() != ports {
            return Err(Error::InvalidDesign(format!(
                "accept pattern covers {} ports, network has {ports}",
                accept.len()
            )));
        }
        let total: u32 = accept.iter().sum();
        if total != n_tilde {
            return Err(Error::InvalidDesign(format!(
                "accept pattern holds {total} photons, expected {n_tilde}"
            )));
        }
        let mut d = DetectorDesign {
            n_tilde,
            ancillas: ports - 2,
            elements: Vec::new(),
            unitary,
            accept,
            g: Vec::new(),
        };
        d.g = (0..=n_tilde as i64)
            .map(|m| d.pattern_amplitude(m, &d.accept.clone()))
            .collect::<Result<_>>()?;
        Ok(d)
    }

    fn validated(self) -> Result<Self> {
        let tol = T::lit(CROSS_TALK_TOLERANCE);
        let worst = self.max_cross_talk();
        if !(worst < tol) {
            return Err(Error::InvalidDesign(format!("cross-talk amplitude {worst:e} exceeds {tol:e}")));
        }
        let p = self.success_probability();
        if !(p > T::zero() && p <= T::one() + T::tolerance()) {
            return Err(Error::InvalidDesign(format!("success probability {p} outside (0, 1]")));
        }
        Ok(self)
    }

    /// Amplitude of `pattern` after the network for input `|N~, m> (x) |0..0>`.
    pub fn pattern_amplitude(&self, m: i64, pattern: &[u32]) -> Result<Complex<T>> {
        let input = number_phase_bell::<T>(self.n_tilde, m)?;
        let input = if self.ancillas > 0 {
            input.tensor(&PureState::vacuum(self.ancillas)?)
        } else {
            input
        };
        let modes: Vec<usize> = (0..self.ports()).collect();
        let out = apply_on(&self.unitary, &input, &modes)?;
        Ok(out.amplitude_of(pattern))
    }

    /// Identity network for `N~ = 0`: accept the empty pattern.
    pub fn trivial() -> Self {
        Self::from_unitary(0, ModeUnitary::identity(2), vec![0, 0]).expect("vacuum detector is valid")
    }

    /// 50/50 beam splitter accepting one photon in the first port.
    pub fn fifty_fifty() -> Self {
        let bs = BeamSplitterSpec::fifty_fifty(0, 1).expect("valid 50/50 splitter");
        Self::build(1, 0, vec![OpticalElement::BeamSplitter(bs)], vec![1, 0]).expect("50/50 detector is valid")
    }

    pub fn n_tilde(&self) -> u32 {
        self.n_tilde
    }

    pub fn ancillas(&self) -> usize {
        self.ancillas
    }

    pub fn ports(&self) -> usize {
        self.ancillas + 2
    }

    pub fn elements(&self) -> &[OpticalElement<T>] {
        &self.elements
    }

    pub fn unitary(&self) -> &ModeUnitary<T> {
        &self.unitary
    }

    pub fn accept(&self) -> &[u32] {
        &self.accept
    }

    /// `g_m` for `m = 0..=N~`.
    pub fn g(&self) -> &[Complex<T>] {
        &self.g
    }

    pub fn success_probability(&self) -> T {
        self.g[0].norm_sqr()
    }

    pub fn max_cross_talk(&self) -> T {
        self.g[1..].iter().fold(T::zero(), |acc, g| acc.max(g.norm()))
    }

    /// Amplitudes of every output pattern with `N~` photons, for each `m`.
    pub fn pattern_table(&self) -> Result<Vec<(Vec<u32>, Vec<Complex<T>>)>> {
        let modes: Vec<usize> = (0..self.ports()).collect();
        let outs = (0..=self.n_tilde as i64)
            .map(|m| {
                let input = number_phase_bell::<T>(self.n_tilde, m)?;
                let input = if self.ancillas > 0 {
                    input.tensor(&PureState::vacuum(self.ancillas)?)
                } else {
                    input
                };
                apply_on(&self.unitary, &input, &modes)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut patterns: Vec<Occupation> = outs.iter().flat_map(|s| s.terms().map(|(o, _)| o.clone())).collect();
        patterns.sort();
        patterns.dedup();
        Ok(patterns
            .into_iter()
            .map(|p| {
                let amps = outs.iter().map(|s| s.amplitude(&p)).collect();
                (p.counts().to_vec(), amps)
            })
            .collect())
    }

    /// Text document with the network, accept pattern and measured `g`.
    pub fn to_toml(&self) -> String {
        let pair = |z: Complex<T>| [z.re.to_f64_lossy(), z.im.to_f64_lossy()];
        let doc = DesignDoc {
            n_tilde: self.n_tilde,
            ancillas: self.ancillas,
            accept: self.accept.clone(),
            success_probability: Some(self.success_probability().to_f64_lossy()),
            max_cross_talk: Some(self.max_cross_talk().to_f64_lossy()),
            g: self.g.iter().map(|&z| pair(z)).collect(),
            unitary: if self.elements.is_empty() {
                Some(self.unitary.rows().into_iter().map(|r| r.into_iter().map(pair).collect()).collect())
            } else {
                None
            },
            element: self.elements.iter().map(ElementDoc::from_element).collect(),
        };
        toml::to_string(&doc).expect("design document serializes")
    }

    /// Parses a design document. `g` is recomputed from the network and the
    /// cross-talk check is applied.
    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_unchecked(text)?.validated()
    }

    pub fn from_toml_unchecked(text: &str) -> Result<Self> {
        let doc: DesignDoc = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let c = |p: [f64; 2]| Complex::new(T::lit(p[0]), T::lit(p[1]));
        match doc.unitary {
            Some(rows) if doc.element.is_empty() => {
                let u = ModeUnitary::from_rows(rows.into_iter().map(|r| r.into_iter().map(c).collect()).collect())?;
                if u.dim() != doc.ancillas + 2 {
                    return Err(Error::InvalidDesign("unitary size does not match ancilla count".into()));
                }
                Self::from_unitary_unchecked(doc.n_tilde, u, doc.accept)
            }
            Some(_) => Err(Error::Parse("give either `unitary` or `element` entries, not both".into())),
            None => {
                let elements = doc.element.iter().map(ElementDoc::to_element).collect::<Result<Vec<_>>>()?;
                Self::build_unchecked(doc.n_tilde, doc.ancillas, elements, doc.accept)
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
struct DesignDoc {
    n_tilde: u32,
    ancillas: usize,
    accept: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    success_probability: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_cross_talk: Option<f64>,
    #[serde(default)]
    g: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    unitary: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default)]
    element: Vec<ElementDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ElementDoc {
    BeamSplitter {
        modes: [usize; 2],
        c: f64,
        s: f64,
        eta: [f64; 2],
        xi: [f64; 2],
    },
    PhaseShifter {
        mode: usize,
        phi: f64,
    },
}

impl ElementDoc {
    fn from_element<T: Real>(e: &OpticalElement<T>) -> Self {
        let f = |x: T| x.to_f64_lossy();
        match e {
            OpticalElement::BeamSplitter(s) => ElementDoc::BeamSplitter {
                modes: [s.modes().0, s.modes().1],
                c: f(s.c()),
                s: f(s.s()),
                eta: [f(s.eta().re), f(s.eta().im)],
                xi: [f(s.xi().re), f(s.xi().im)],
            },
            OpticalElement::PhaseShifter { mode, phi } => ElementDoc::PhaseShifter {
                mode: *mode,
                phi: f(*phi),
            },
        }
    }

    fn to_element<T: Real>(&self) -> Result<OpticalElement<T>> {
        let c = |p: [f64; 2]| Complex::new(T::lit(p[0]), T::lit(p[1]));
        Ok(match *self {
            ElementDoc::BeamSplitter { modes, c: cc, s, eta, xi } => OpticalElement::BeamSplitter(
                BeamSplitterSpec::new(T::lit(cc), T::lit(s), c(eta), c(xi), (modes[0], modes[1]))?,
            ),
            ElementDoc::PhaseShifter { mode, phi } => OpticalElement::PhaseShifter { mode, phi: T::lit(phi) },
        })
    }
}

/// Three-element detector for `N~ = 2` on modes (0, 1, a): splitters on
/// (0,a), (1,a), (0,1) in that optical order.
pub fn n2_detector<T: Real>(specs: [(T, T, Complex<T>, Complex<T>); 3], accept: Vec<u32>) -> Result<DetectorDesign<T>> {
    let modes = [(0, 2), (1, 2), (0, 1)];
    let elements = specs
        .iter()
        .zip(modes)
        .map(|(&(c, s, eta, xi), m)| BeamSplitterSpec::new(c, s, eta, xi, m).map(OpticalElement::BeamSplitter))
        .collect::<Result<Vec<_>>>()?;
    DetectorDesign::build(2, 1, elements, accept)
}

/// Reference parameter triples for the `N~ = 2` detector.
pub fn reference_n2_parameters<T: Real>() -> [(T, T, Complex<T>, Complex<T>); 3] {
    let r = |x: f64| T::lit(x);
    let one = Complex::new(T::one(), T::zero());
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let t = 10f64.sqrt();
    [
        (r(h), r(h), one, one),
        (r((2.0f64 / 3.0).sqrt()), r(1.0 / 3f64.sqrt()), one, Complex::new(r(h), r(h))),
        (r(0.375f64.sqrt()), r(-(0.625f64.sqrt())), one, Complex::new(r(3.0 / t), r(1.0 / t))),
    ]
}

/// The reference `N~ = 2` detector accepting (0, 1, 1).
pub fn reference_n2_detector<T: Real>() -> Result<DetectorDesign<T>> {
    n2_detector(reference_n2_parameters(), vec![0, 1, 1])
}

/// Runs `state` through `design` on `modes` and post-selects the accept
/// pattern. The conditional state lives on the remaining modes in their
/// original order.
pub fn conditional_bell_measure<T: Real>(
    state: &PureState<T>,
    modes: (usize, usize),
    design: &DetectorDesign<T>,
) -> Result<Conditional<T>> {
    let measured = pair(modes);
    state.mode_mask(&measured)?;
    // Sectors other than N~ cannot produce an N~-photon pattern.
    let sector = match state.restrict_sector(&measured, design.n_tilde)? {
        Some(s) => s,
        None => {
            return Ok(Conditional {
                state: None,
                probability: T::zero(),
            })
        }
    };
    let base = sector.modes();
    let (joint, ports) = if design.ancillas > 0 {
        let ports: Vec<usize> = measured.iter().copied().chain(base..base + design.ancillas).collect();
        (sector.tensor(&PureState::vacuum(design.ancillas)?), ports)
    } else {
        (sector, measured.to_vec())
    };
    let out = apply_on(&design.unitary, &joint, &ports)?;
    project_pattern(&out, &ports, &design.accept)
}

/// How number-sum Bell measurements succeed.
#[derive(Clone, Debug, PartialEq)]
pub enum SuccessModel<T: Real> {
    /// Exact projector, success factor 1.
    Ideal,
    /// Exact projector times a declared success factor per `N~`; sums
    /// without an entry use factor 1.
    Declared(BTreeMap<u32, T>),
    /// Linear-optical detectors, one per `N~`.
    Optical(BTreeMap<u32, DetectorDesign<T>>),
}

impl<T: Real> SuccessModel<T> {
    /// Ideal projection with `p(2) = 3/8`.
    pub fn reference() -> Self {
        SuccessModel::Declared(BTreeMap::from([(2, T::lit(0.375))]))
    }

    /// Detectors for `N~ = 0, 1, 2`: identity, 50/50, and the reference
    /// three-mode network.
    pub fn optical() -> Result<Self> {
        Ok(SuccessModel::Optical(BTreeMap::from([
            (0, DetectorDesign::trivial()),
            (1, DetectorDesign::fifty_fifty()),
            (2, reference_n2_detector()?),
        ])))
    }

    pub fn with_design(self, design: DetectorDesign<T>) -> Self {
        match self {
            SuccessModel::Optical(mut bank) => {
                bank.insert(design.n_tilde, design);
                SuccessModel::Optical(bank)
            }
            _ => SuccessModel::Optical(BTreeMap::from([(design.n_tilde, design)])),
        }
    }

    fn design(&self, n_tilde: u32) -> Result<&DetectorDesign<T>> {
        match self {
            SuccessModel::Optical(bank) => bank
                .get(&n_tilde)
                .ok_or_else(|| Error::InvalidDesign(format!("no detector available for number sum {n_tilde}"))),
            _ => unreachable!("only optical models hold designs"),
        }
    }

    /// `p(N~)`.
    pub fn factor(&self, n_tilde: u32) -> Result<T> {
        match self {
            SuccessModel::Ideal => Ok(T::one()),
            SuccessModel::Declared(p) => Ok(p.get(&n_tilde).copied().unwrap_or_else(T::one)),
            SuccessModel::Optical(_) => Ok(self.design(n_tilde)?.success_probability()),
        }
    }

    /// Measures `modes` for the outcome `|N~, 0>`.
    pub fn measure(&self, state: &PureState<T>, modes: (usize, usize), n_tilde: u32) -> Result<Conditional<T>> {
        match self {
            SuccessModel::Optical(_) => conditional_bell_measure(state, modes, self.design(n_tilde)?),
            _ => {
                let mut out = ideal_bell_project(state, modes, n_tilde)?;
                out.probability *= self.factor(n_tilde)?;
                Ok(out)
            }
        }
    }

    /// Measures `modes` for the outcome `|N~, m>`. Optical models shift the
    /// phase of the second mode and reuse the `m = 0` detector.
    pub fn measure_phase(
        &self,
        state: &PureState<T>,
        modes: (usize, usize),
        n_tilde: u32,
        m: i64,
    ) -> Result<Conditional<T>> {
        match self {
            SuccessModel::Optical(_) => {
                let phi = T::TAU() * T::lit(m as f64) / T::from_usize_lossy(n_tilde as usize + 1);
                let shifted = apply_on(&ModeUnitary::phase_shifter(phi, 0, 1)?, state, &[modes.1])?;
                self.measure(&shifted, modes, n_tilde)
            }
            _ => {
                let mut out = ideal_bell_project_phase(state, modes, n_tilde, m)?;
                out.probability *= self.factor(n_tilde)?;
                Ok(out)
            }
        }
    }

    /// Swapping preparation of `|N, m, r>` with this measurement model on
    /// the swapped modes.
    pub fn prepare(&self, params: &SqueezeParams<T>, n: u32, m: i64, tail_epsilon: T) -> Result<Conditional<T>> {
        match self {
            SuccessModel::Optical(_) => {
                let kmax = |l: T| crate::resources::tail_cutoff(l, tail_epsilon).map(|k| k.max(n));
                let a = crate::resources::squeezed_vacuum_truncated(params.lambda(), kmax(params.lambda())?)?;
                let b =
                    crate::resources::squeezed_vacuum_truncated(params.lambda_prime(), kmax(params.lambda_prime())?)?;
                // modes 1, 3, 2, 4; the swap measures 3 and 4 for |N, -m>
                self.measure_phase(&a.tensor(&b), (1, 3), n, -m)
            }
            _ => {
                let mut out = prepare_via_swapping(params, n, m, tail_epsilon)?;
                out.probability *= self.factor(n)?;
                Ok(out)
            }
        }
    }
}

/// Deviation of a detector from `p(N~)` times the ideal projector on one
/// input: the larger of the conditional-state distance (up to global phase)
/// and the probability mismatch.
pub fn equivalence_deviation<T: Real>(
    state: &PureState<T>,
    modes: (usize, usize),
    design: &DetectorDesign<T>,
) -> Result<T> {
    let ideal = ideal_bell_project(state, modes, design.n_tilde)?;
    let real = conditional_bell_measure(state, modes, design)?;
    let dp = (real.probability - design.success_probability() * ideal.probability).abs();
    let ds = match (&ideal.state, &real.state) {
        (Some(a), Some(b)) => phase_distance(a, b)?,
        (None, None) => T::zero(),
        _ if ideal.probability < T::tolerance() && real.probability < T::tolerance() => T::zero(),
        _ => T::one(),
    };
    Ok(dp.max(ds))
}

/// `|<a|b>|` for normalized states; 1 means equal up to global phase.
pub fn overlap<T: Real>(a: &PureState<T>, b: &PureState<T>) -> Result<T> {
    Ok(a.inner(b)?.norm())
}
