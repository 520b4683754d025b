//! Sparse multimode photon-number states.
//!
//! A [`PureState`] maps occupation patterns to complex amplitudes. Terms are
//! kept in a `BTreeMap`, so iteration (and therefore every serialized form)
//! follows lexicographic pattern order. Amplitudes below the prune threshold
//! are dropped whenever a state is assembled.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;

use crate::{Complex, Error, Real, Result};

/// Per-mode photon cap assigned to states that do not specify one.
pub const DEFAULT_CUTOFF: u32 = 32;

/// Photon counts, one per mode.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Occupation(Vec<u32>);

impl Occupation {
    pub fn new(counts: Vec<u32>) -> Self {
        Occupation(counts)
    }

    pub fn vacuum(modes: usize) -> Self {
        Occupation(vec![0; modes])
    }

    /// Builds a pattern from signed input, rejecting negative counts.
    pub fn from_signed(counts: &[i64]) -> Result<Self> {
        counts
            .iter()
            .enumerate()
            .map(|(mode, &n)| {
                u32::try_from(n).map_err(|_| {
                    Error::domain(format!("photon count {n} in mode {mode} is not a valid count"))
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(Occupation)
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn modes(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn get(&self, mode: usize) -> u32 {
        self.0[mode]
    }

    pub fn concat(&self, other: &Occupation) -> Occupation {
        let mut counts = self.0.clone();
        counts.extend_from_slice(&other.0);
        Occupation(counts)
    }

    fn select<'a>(&'a self, modes: &'a [usize]) -> impl Iterator<Item = u32> + 'a {
        modes.iter().map(move |&m| self.0[m])
    }

    fn without(&self, measured: &[bool]) -> Occupation {
        Occupation(
            self.0
                .iter()
                .zip(measured)
                .filter(|(_, &gone)| !gone)
                .map(|(&n, _)| n)
                .collect(),
        )
    }
}

impl From<Vec<u32>> for Occupation {
    fn from(counts: Vec<u32>) -> Self {
        Occupation(counts)
    }
}

impl From<&[u32]> for Occupation {
    fn from(counts: &[u32]) -> Self {
        Occupation(counts.to_vec())
    }
}

impl fmt::Display for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{n}")?;
        }
        Ok(())
    }
}

/// Outcome of a projective measurement on part of a state.
///
/// `state` is the normalized conditional state on the unmeasured modes. It is
/// `None` when the outcome has zero probability or no modes remain.
#[derive(Clone, Debug)]
pub struct Conditional<T: Real> {
    pub state: Option<PureState<T>>,
    pub probability: T,
}

impl<T: Real> Conditional<T> {
    fn from_unnormalized(state: Option<PureState<T>>) -> Self {
        match state {
            Some(s) => {
                let probability = s.norm_sqr();
                Conditional {
                    state: Some(s.normalize()),
                    probability,
                }
            }
            None => Conditional {
                state: None,
                probability: T::zero(),
            },
        }
    }

    pub fn is_zero(&self) -> bool {
        self.probability == T::zero()
    }
}

/// Sparse pure state of `modes` bosonic modes.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState<T: Real> {
    modes: usize,
    terms: BTreeMap<Occupation, Complex<T>>,
    cutoff: u32,
    prune: T,
    normalized: bool,
}

impl<T: Real> PureState<T> {
    /// Single basis ket with unit amplitude.
    pub fn basis(counts: &[u32]) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::domain("a state needs at least one mode"));
        }
        let cutoff = DEFAULT_CUTOFF.max(counts.iter().copied().max().unwrap_or(0));
        let mut terms = BTreeMap::new();
        terms.insert(Occupation::from(counts), Complex::new(T::one(), T::zero()));
        Self::assemble(counts.len(), terms, cutoff, T::prune_threshold())
    }

    /// Basis ket from signed counts; negative entries are a domain error.
    pub fn basis_signed(counts: &[i64]) -> Result<Self> {
        let occ = Occupation::from_signed(counts)?;
        Self::basis(occ.counts())
    }

    pub fn vacuum(modes: usize) -> Result<Self> {
        Self::basis(&vec![0; modes])
    }

    /// Sums the given terms; duplicate patterns add, cancelled terms are
    /// pruned.
    pub fn superpose<I>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Occupation, Complex<T>)>,
    {
        Self::superpose_with(terms, T::prune_threshold())
    }

    pub fn superpose_with<I>(terms: I, prune: T) -> Result<Self>
    where
        I: IntoIterator<Item = (Occupation, Complex<T>)>,
    {
        let mut modes = None;
        let mut cutoff = DEFAULT_CUTOFF;
        let mut map: BTreeMap<Occupation, Complex<T>> = BTreeMap::new();
        for (occ, amp) in terms {
            if !(amp.re.is_finite() && amp.im.is_finite()) {
                return Err(Error::domain("amplitudes must be finite"));
            }
            match modes {
                None => modes = Some(occ.modes()),
                Some(m) if m != occ.modes() => {
                    return Err(Error::ModeMismatch {
                        expected: m,
                        found: occ.modes(),
                    })
                }
                _ => {}
            }
            cutoff = cutoff.max(occ.counts().iter().copied().max().unwrap_or(0));
            *map.entry(occ).or_insert_with(Complex::zero) += amp;
        }
        let modes = modes.ok_or(Error::EmptyState)?;
        if modes == 0 {
            return Err(Error::domain("a state needs at least one mode"));
        }
        Self::assemble(modes, map, cutoff, prune)
    }

    /// Shared constructor: prunes, checks the cutoff and sets the
    /// normalization flag.
    fn assemble(
        modes: usize,
        mut terms: BTreeMap<Occupation, Complex<T>>,
        cutoff: u32,
        prune: T,
    ) -> Result<Self> {
        terms.retain(|_, a| a.norm() >= prune);
        if terms.is_empty() {
            return Err(Error::EmptyState);
        }
        for occ in terms.keys() {
            if let Some((mode, &count)) = occ.counts().iter().enumerate().find(|(_, &n)| n > cutoff) {
                return Err(Error::CutoffExceeded { mode, count, cutoff });
            }
        }
        let norm_sqr = terms.values().fold(T::zero(), |acc, a| acc + a.norm_sqr());
        let normalized = (norm_sqr - T::one()).abs() <= T::tolerance();
        Ok(PureState {
            modes,
            terms,
            cutoff,
            prune,
            normalized,
        })
    }

    /// Same as [`assemble`](Self::assemble) but maps an empty result to
    /// `None`.
    fn assemble_opt(
        modes: usize,
        terms: BTreeMap<Occupation, Complex<T>>,
        cutoff: u32,
        prune: T,
    ) -> Result<Option<Self>> {
        match Self::assemble(modes, terms, cutoff, prune) {
            Ok(s) => Ok(Some(s)),
            Err(Error::EmptyState) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Internal constructor for operations whose output must fit the
    /// given cutoff; used by the optics and resource modules.
    pub(crate) fn from_map(
        modes: usize,
        terms: BTreeMap<Occupation, Complex<T>>,
        cutoff: u32,
        prune: T,
    ) -> Result<Option<Self>> {
        Self::assemble_opt(modes, terms, cutoff, prune)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    pub fn prune_threshold(&self) -> T {
        self.prune
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in lexicographic pattern order.
    pub fn terms(&self) -> impl Iterator<Item = (&Occupation, &Complex<T>)> {
        self.terms.iter()
    }

    pub fn amplitude(&self, occ: &Occupation) -> Complex<T> {
        self.terms.get(occ).copied().unwrap_or_else(Complex::zero)
    }

    pub fn amplitude_of(&self, counts: &[u32]) -> Complex<T> {
        self.amplitude(&Occupation::from(counts))
    }

    pub fn norm_sqr(&self) -> T {
        self.terms.values().fold(T::zero(), |acc, a| acc + a.norm_sqr())
    }

    /// Largest total photon number among the stored terms.
    pub fn max_photons(&self) -> u32 {
        self.terms.keys().map(Occupation::total).max().unwrap_or(0)
    }

    /// Raises or lowers the per-mode cutoff; fails if a stored term no
    /// longer fits.
    pub fn with_cutoff(self, cutoff: u32) -> Result<Self> {
        Self::assemble(self.modes, self.terms, cutoff, self.prune)
    }

    pub fn with_prune(self, prune: T) -> Result<Self> {
        Self::assemble(self.modes, self.terms, self.cutoff, prune)
    }

    /// Rescales to unit norm.
    pub fn normalize(self) -> Self {
        let inv = T::one() / self.norm_sqr().sqrt();
        let terms = self.terms.into_iter().map(|(k, a)| (k, a * inv)).collect();
        PureState {
            modes: self.modes,
            terms,
            cutoff: self.cutoff,
            prune: self.prune,
            normalized: true,
        }
    }

    pub fn scale(&self, factor: Complex<T>) -> Result<Self> {
        let terms = self.terms.iter().map(|(k, &a)| (k.clone(), a * factor)).collect();
        Self::assemble(self.modes, terms, self.cutoff, self.prune)
    }

    fn check_same_modes(&self, other: &Self) -> Result<()> {
        if self.modes != other.modes {
            return Err(Error::ModeMismatch {
                expected: self.modes,
                found: other.modes,
            });
        }
        Ok(())
    }

    /// `<self|other>`: conjugate-linear in `self`, linear in `other`.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        self.check_same_modes(other)?;
        let (small, large, flip) = if self.len() <= other.len() {
            (self, other, false)
        } else {
            (other, self, true)
        };
        let mut acc = Complex::zero();
        for (occ, a) in &small.terms {
            if let Some(b) = large.terms.get(occ) {
                acc += if flip { b.conj() * a } else { a.conj() * b };
            }
        }
        Ok(acc)
    }

    /// Tensor product; the modes of `other` follow those of `self`.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut terms = BTreeMap::new();
        for (oa, a) in &self.terms {
            for (ob, b) in &other.terms {
                terms.insert(oa.concat(ob), a * b);
            }
        }
        let prune = self.prune.min(other.prune);
        let kept: BTreeMap<_, _> = terms
            .iter()
            .filter(|(_, a)| a.norm() >= prune)
            .map(|(k, &a)| (k.clone(), a))
            .collect();
        // Both factors are nonempty, so only pathological underflow can
        // prune everything; keep the raw product in that case.
        if !kept.is_empty() {
            terms = kept;
        }
        let norm_sqr = terms.values().fold(T::zero(), |acc, a: &Complex<T>| acc + a.norm_sqr());
        PureState {
            modes: self.modes + other.modes,
            normalized: (norm_sqr - T::one()).abs() <= T::tolerance(),
            terms,
            cutoff: self.cutoff.max(other.cutoff),
            prune,
        }
    }

    /// Validates a list of distinct, in-range mode indices and returns the
    /// measured-mode mask.
    pub(crate) fn mode_mask(&self, modes: &[usize]) -> Result<Vec<bool>> {
        let mut mask = vec![false; self.modes];
        for &m in modes {
            if m >= self.modes {
                return Err(Error::ModeOutOfRange {
                    mode: m,
                    modes: self.modes,
                });
            }
            if mask[m] {
                return Err(Error::domain(format!("mode {m} listed twice")));
            }
            mask[m] = true;
        }
        Ok(mask)
    }

    /// Projects `modes` onto the basis pattern `pattern`.
    ///
    /// At least one mode must remain unmeasured; use
    /// [`pattern_probability`](Self::pattern_probability) to measure all of
    /// them.
    pub fn project_modes(&self, modes: &[usize], pattern: &[u32]) -> Result<Conditional<T>> {
        let mask = self.mode_mask(modes)?;
        if modes.len() != pattern.len() {
            return Err(Error::ModeMismatch {
                expected: modes.len(),
                found: pattern.len(),
            });
        }
        if modes.len() == self.modes {
            return Err(Error::domain(
                "projection leaves no modes; use pattern_probability",
            ));
        }
        let terms = self
            .terms
            .iter()
            .filter(|(occ, _)| occ.select(modes).eq(pattern.iter().copied()))
            .map(|(occ, &a)| (occ.without(&mask), a))
            .collect();
        let rest = Self::assemble_opt(self.modes - modes.len(), terms, self.cutoff, self.prune)?;
        Ok(Conditional::from_unnormalized(rest))
    }

    /// Probability of observing `pattern` on `modes`, which may cover every
    /// mode of the state.
    pub fn pattern_probability(&self, modes: &[usize], pattern: &[u32]) -> Result<T> {
        self.mode_mask(modes)?;
        if modes.len() != pattern.len() {
            return Err(Error::ModeMismatch {
                expected: modes.len(),
                found: pattern.len(),
            });
        }
        Ok(self
            .terms
            .iter()
            .filter(|(occ, _)| occ.select(modes).eq(pattern.iter().copied()))
            .fold(T::zero(), |acc, (_, a)| acc + a.norm_sqr()))
    }

    /// Projects `modes` onto the (not necessarily normalized) state `bra`,
    /// i.e. applies `<bra|` to those modes in the listed order.
    ///
    /// Measuring every mode is allowed here; the conditional state is then
    /// `None` and only the probability is reported.
    pub fn contract(&self, modes: &[usize], bra: &Self) -> Result<Conditional<T>> {
        let mask = self.mode_mask(modes)?;
        if bra.modes != modes.len() {
            return Err(Error::ModeMismatch {
                expected: modes.len(),
                found: bra.modes,
            });
        }
        if modes.len() == self.modes {
            let amp = self
                .terms
                .iter()
                .fold(Complex::zero(), |acc, (occ, a)| {
                    acc + bra.amplitude(occ).conj() * a
                });
            return Ok(Conditional {
                state: None,
                probability: amp.norm_sqr(),
            });
        }
        let mut terms: BTreeMap<Occupation, Complex<T>> = BTreeMap::new();
        let mut key = Vec::with_capacity(modes.len());
        for (occ, a) in &self.terms {
            key.clear();
            key.extend(occ.select(modes));
            let b = bra.amplitude_of(&key);
            if b.is_zero() {
                continue;
            }
            *terms.entry(occ.without(&mask)).or_insert_with(Complex::zero) += b.conj() * a;
        }
        let rest = Self::assemble_opt(self.modes - modes.len(), terms, self.cutoff, self.prune)?;
        Ok(Conditional::from_unnormalized(rest))
    }

    /// Keeps only the terms whose photon count summed over `modes` equals
    /// `total`. The result is not renormalized.
    pub fn restrict_sector(&self, modes: &[usize], total: u32) -> Result<Option<Self>> {
        self.mode_mask(modes)?;
        let terms = self
            .terms
            .iter()
            .filter(|(occ, _)| occ.select(modes).sum::<u32>() == total)
            .map(|(k, &a)| (k.clone(), a))
            .collect();
        Self::assemble_opt(self.modes, terms, self.cutoff, self.prune)
    }

    /// Reorders modes: mode `k` of the result is mode `order[k]` of `self`.
    pub fn permute(&self, order: &[usize]) -> Result<Self> {
        let mask = self.mode_mask(order)?;
        if order.len() != self.modes || mask.iter().any(|m| !m) {
            return Err(Error::domain("mode order must be a permutation"));
        }
        let terms = self
            .terms
            .iter()
            .map(|(occ, &a)| (Occupation(occ.select(order).collect()), a))
            .collect();
        Self::assemble(self.modes, terms, self.cutoff, self.prune)
    }

    /// Photon-number distribution of one mode: entry `n` is the weight of
    /// all terms with `n` photons there.
    pub fn marginal(&self, mode: usize) -> Result<Vec<T>> {
        self.mode_mask(&[mode])?;
        let mut weights = Vec::new();
        for (occ, a) in &self.terms {
            let n = occ.get(mode) as usize;
            if weights.len() <= n {
                weights.resize(n + 1, T::zero());
            }
            weights[n] += a.norm_sqr();
        }
        Ok(weights)
    }

    /// Single-mode amplitudes indexed by photon number.
    pub fn single_mode_amplitudes(&self) -> Result<Vec<Complex<T>>> {
        if self.modes != 1 {
            return Err(Error::ModeMismatch {
                expected: 1,
                found: self.modes,
            });
        }
        let mut amps = vec![Complex::zero(); self.max_photons() as usize + 1];
        for (occ, &a) in &self.terms {
            amps[occ.get(0) as usize] = a;
        }
        Ok(amps)
    }

    /// Single-mode state from amplitudes indexed by photon number.
    pub fn from_amplitudes(amps: &[Complex<T>]) -> Result<Self> {
        Self::superpose(
            amps.iter()
                .enumerate()
                .map(|(n, &a)| (Occupation(vec![n as u32]), a)),
        )
    }

    pub fn from_real_amplitudes(amps: &[T]) -> Result<Self> {
        let c: Vec<_> = amps.iter().map(|&a| Complex::new(a, T::zero())).collect();
        Self::from_amplitudes(&c)
    }

    /// Canonical text form: one line per term, `n1 .. nM  re  im`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (occ, a) in &self.terms {
            out.push_str(&format!("{occ}  {}  {}\n", a.re, a.im));
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() < 3 {
                return Err(Error::Parse(format!(
                    "line {}: expected counts followed by re and im",
                    lineno + 1
                )));
            }
            let (counts, amp) = fields.split_at(fields.len() - 2);
            let parse_f = |s: &str| {
                s.parse::<f64>()
                    .map(T::lit)
                    .map_err(|e| Error::Parse(format!("line {}: `{s}`: {e}", lineno + 1)))
            };
            let counts = counts
                .iter()
                .map(|s| {
                    s.parse::<i64>()
                        .map_err(|e| Error::Parse(format!("line {}: `{s}`: {e}", lineno + 1)))
                })
                .collect::<Result<Vec<_>>>()?;
            let occ = Occupation::from_signed(&counts)?;
            terms.push((occ, Complex::new(parse_f(amp[0])?, parse_f(amp[1])?)));
        }
        Self::superpose(terms)
    }
}

impl<T: Real> fmt::Display for PureState<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Normalized state with independent uniform random amplitudes on every
/// pattern of `modes` modes holding at most `max_total` photons.
pub fn random_state<T: Real, R: rand::Rng + ?Sized>(modes: usize, max_total: u32, rng: &mut R) -> PureState<T> {
    let mut terms = Vec::new();
    let mut occ = vec![0u32; modes];
    loop {
        if occ.iter().sum::<u32>() <= max_total {
            let re = T::lit(rng.gen::<f64>() - 0.5);
            let im = T::lit(rng.gen::<f64>() - 0.5);
            terms.push((Occupation(occ.clone()), Complex::new(re, im)));
        }
        let mut k = 0;
        loop {
            if k == modes {
                return PureState::superpose(terms)
                    .expect("random amplitudes are nonzero")
                    .normalize();
            }
            occ[k] += 1;
            if occ[k] > max_total {
                occ[k] = 0;
                k += 1;
            } else {
                break;
            }
        }
    }
}

/// Distance between two states after the best global phase alignment:
/// `min_phi |a - e^{i phi} b|`.
pub fn phase_distance<T: Real>(a: &PureState<T>, b: &PureState<T>) -> Result<T> {
    // Summing |a_k - e^{i phi} b_k|^2 termwise avoids the cancellation in
    // |a|^2 + |b|^2 - 2|<a|b>|.
    let overlap = b.inner(a)?;
    let phase = if overlap.norm() > T::zero() {
        overlap / overlap.norm()
    } else {
        Complex::new(T::one(), T::zero())
    };
    let mut d2 = T::zero();
    for (occ, x) in &a.terms {
        d2 += (x - phase * b.amplitude(occ)).norm_sqr();
    }
    for (occ, y) in &b.terms {
        if !a.terms.contains_key(occ) {
            d2 += y.norm_sqr();
        }
    }
    Ok(d2.sqrt())
}
