//! Mode unitaries built from beam splitters and phase shifters, and their
//! exact action on Fock states.
//!
//! Convention: a [`ModeUnitary`] `U` expresses input creation operators in
//! terms of output ones, `a_i^dag = sum_j U[i][j] b_j^dag`. Under this
//! convention `first.compose(second)` is the plain matrix product
//! `first * second`, and the element listed first is the one the light meets
//! first. The three-element detector `U = U(0a) U(1a) U(01)` therefore
//! sends light through `U(0a)` first; that order is the one for which the
//! reference parameters cancel the cross-talk amplitudes.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use rand::Rng;

use crate::fock::{Occupation, PureState};
use crate::{Complex, Error, Real, Result};

/// One two-mode element: the 2x2 block `[[c, -s eta], [s xi, c eta xi]]`
/// on modes `(i, j)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamSplitterSpec<T: Real> {
    c: T,
    s: T,
    eta: Complex<T>,
    xi: Complex<T>,
    modes: (usize, usize),
}

impl<T: Real> BeamSplitterSpec<T> {
    /// Validates and canonicalizes an element.
    ///
    /// A negative `s` is folded into the phases (`s -> -s`, `eta -> -eta`,
    /// `xi -> -xi`), which leaves the block unchanged. A negative `c` cannot
    /// be absorbed that way and is rejected.
    pub fn new(c: T, s: T, eta: Complex<T>, xi: Complex<T>, modes: (usize, usize)) -> Result<Self> {
        let tol = T::tolerance();
        if modes.0 == modes.1 {
            return Err(Error::InvalidElement(format!(
                "beam splitter needs two distinct modes, got ({}, {})",
                modes.0, modes.1
            )));
        }
        if !(c.is_finite() && s.is_finite()) {
            return Err(Error::InvalidElement("c and s must be finite".into()));
        }
        if (c * c + s * s - T::one()).abs() > tol {
            return Err(Error::InvalidElement(format!(
                "c^2 + s^2 = {} differs from 1",
                c * c + s * s
            )));
        }
        if (eta.norm() - T::one()).abs() > tol || (xi.norm() - T::one()).abs() > tol {
            return Err(Error::InvalidElement("eta and xi must have unit modulus".into()));
        }
        if c < -tol {
            return Err(Error::InvalidElement(format!(
                "negative transmission amplitude c = {c} has no canonical form"
            )));
        }
        let (s, eta, xi) = if s < T::zero() { (-s, -eta, -xi) } else { (s, eta, xi) };
        Ok(BeamSplitterSpec {
            c: c.max(T::zero()),
            s,
            eta,
            xi,
            modes,
        })
    }

    /// Real phases variant: `eta = e^{i phi_eta}`, `xi = e^{i phi_xi}`.
    pub fn from_angles(theta: T, phi_eta: T, phi_xi: T, modes: (usize, usize)) -> Result<Self> {
        Self::new(
            theta.cos(),
            theta.sin(),
            Complex::from_polar(T::one(), phi_eta),
            Complex::from_polar(T::one(), phi_xi),
            modes,
        )
    }

    /// The balanced splitter `(c, s, xi, eta) = (1/sqrt2, 1/sqrt2, 1, 1)`.
    pub fn fifty_fifty(i: usize, j: usize) -> Result<Self> {
        let h = T::FRAC_1_SQRT_2();
        Self::new(h, h, Complex::one(), Complex::one(), (i, j))
    }

    pub fn transmissive(i: usize, j: usize) -> Result<Self> {
        Self::new(T::one(), T::zero(), Complex::one(), Complex::one(), (i, j))
    }

    pub fn c(&self) -> T {
        self.c
    }

    pub fn s(&self) -> T {
        self.s
    }

    pub fn eta(&self) -> Complex<T> {
        self.eta
    }

    pub fn xi(&self) -> Complex<T> {
        self.xi
    }

    pub fn modes(&self) -> (usize, usize) {
        self.modes
    }

    pub fn block(&self) -> [[Complex<T>; 2]; 2] {
        let c = Complex::new(self.c, T::zero());
        let s = Complex::new(self.s, T::zero());
        [
            [c, -s * self.eta],
            [s * self.xi, c * self.eta * self.xi],
        ]
    }

    /// The inverse element, which has the same canonical form:
    /// `(c, s, -xi*, -eta*)`.
    pub fn adjoint(&self) -> Self {
        BeamSplitterSpec {
            c: self.c,
            s: self.s,
            eta: -self.xi.conj(),
            xi: -self.eta.conj(),
            modes: self.modes,
        }
    }
}

/// Dense `dim x dim` complex matrix acting on creation operators.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeUnitary<T: Real> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> ModeUnitary<T> {
    pub fn identity(dim: usize) -> Self {
        let mut data = vec![Complex::zero(); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = Complex::one();
        }
        ModeUnitary { dim, data }
    }

    /// Builds from rows, checking that the matrix is square and unitary.
    pub fn from_rows(rows: Vec<Vec<Complex<T>>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidElement("matrix must be square and nonempty".into()));
        }
        let u = ModeUnitary {
            dim,
            data: rows.into_iter().flatten().collect(),
        };
        let err = u.unitarity_error();
        if !(err <= T::tolerance()) {
            return Err(Error::InvalidElement(format!(
                "matrix is not unitary (max |U^dag U - I| = {err})"
            )));
        }
        Ok(u)
    }

    pub fn beam_splitter(spec: &BeamSplitterSpec<T>, total_modes: usize) -> Result<Self> {
        let (i, j) = spec.modes;
        for m in [i, j] {
            if m >= total_modes {
                return Err(Error::ModeOutOfRange {
                    mode: m,
                    modes: total_modes,
                });
            }
        }
        let mut u = Self::identity(total_modes);
        let b = spec.block();
        u.set(i, i, b[0][0]);
        u.set(i, j, b[0][1]);
        u.set(j, i, b[1][0]);
        u.set(j, j, b[1][1]);
        Ok(u)
    }

    pub fn phase_shifter(phi: T, mode: usize, total_modes: usize) -> Result<Self> {
        if mode >= total_modes {
            return Err(Error::ModeOutOfRange {
                mode,
                modes: total_modes,
            });
        }
        let mut u = Self::identity(total_modes);
        u.set(mode, mode, Complex::from_polar(T::one(), phi));
        Ok(u)
    }

    pub fn diagonal(phases: &[T]) -> Self {
        let mut u = Self::identity(phases.len());
        for (i, &p) in phases.iter().enumerate() {
            u.set(i, i, Complex::from_polar(T::one(), p));
        }
        u
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.data[i * self.dim + j]
    }

    fn set(&mut self, i: usize, j: usize, v: Complex<T>) {
        self.data[i * self.dim + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<Complex<T>>> {
        self.data.chunks(self.dim).map(<[_]>::to_vec).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::identity(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.set(i, j, self.get(j, i).conj());
            }
        }
        out
    }

    fn product(&self, rhs: &Self) -> Self {
        let n = self.dim;
        let mut data = vec![Complex::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    data[i * n + j] += a * rhs.get(k, j);
                }
            }
        }
        ModeUnitary { dim: n, data }
    }

    /// Optical sequence: light meets `self` first, then `second`.
    pub fn compose(&self, second: &Self) -> Result<Self> {
        if self.dim != second.dim {
            return Err(Error::ModeMismatch {
                expected: self.dim,
                found: second.dim,
            });
        }
        Ok(self.product(second))
    }

    /// Largest entrywise deviation of `U^dag U` from the identity.
    pub fn unitarity_error(&self) -> T {
        let p = self.adjoint().product(self);
        let mut err = T::zero();
        for i in 0..self.dim {
            for j in 0..self.dim {
                let target = if i == j { Complex::one() } else { Complex::zero() };
                err = err.max((p.get(i, j) - target).norm());
            }
        }
        err
    }

    /// Largest entrywise difference to another matrix of the same size.
    pub fn max_deviation(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).norm()))
    }

    /// Row-major text, one row per line, entries as `re+imi`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for row in self.data.chunks(self.dim) {
            let line: Vec<String> = row
                .iter()
                .map(|z| format!("{:+.16e}{:+.16e}i", z.re.to_f64_lossy(), z.im.to_f64_lossy()))
                .collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

impl<T: Real> fmt::Display for ModeUnitary<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// A linear-optical element placed in a mode set of fixed size.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OpticalElement<T: Real> {
    BeamSplitter(BeamSplitterSpec<T>),
    PhaseShifter { mode: usize, phi: T },
}

impl<T: Real> OpticalElement<T> {
    pub fn unitary(&self, total_modes: usize) -> Result<ModeUnitary<T>> {
        match self {
            OpticalElement::BeamSplitter(spec) => ModeUnitary::beam_splitter(spec, total_modes),
            OpticalElement::PhaseShifter { mode, phi } => {
                ModeUnitary::phase_shifter(*phi, *mode, total_modes)
            }
        }
    }
}

/// Composes elements in optical order.
pub fn circuit_unitary<T: Real>(elements: &[OpticalElement<T>], total_modes: usize) -> Result<ModeUnitary<T>> {
    elements
        .iter()
        .try_fold(ModeUnitary::identity(total_modes), |acc, e| {
            acc.compose(&e.unitary(total_modes)?)
        })
}

fn factorials<T: Real>(n: u32) -> Vec<T> {
    let mut f = vec![T::one(); n as usize + 1];
    for k in 1..=n as usize {
        f[k] = f[k - 1] * T::from_usize_lossy(k);
    }
    f
}

/// Calls `visit` with every split of `n` photons over `parts` output modes.
fn for_each_composition(n: u32, parts: usize, buf: &mut Vec<u32>, visit: &mut dyn FnMut(&[u32])) {
    if parts == 1 {
        buf.push(n);
        visit(buf);
        buf.pop();
        return;
    }
    for k in 0..=n {
        buf.push(k);
        for_each_composition(n - k, parts - 1, buf, visit);
        buf.pop();
    }
}

/// Applies `U` to every mode of `state`.
pub fn apply<T: Real>(u: &ModeUnitary<T>, state: &PureState<T>) -> Result<PureState<T>> {
    let modes: Vec<usize> = (0..state.modes()).collect();
    apply_on(u, state, &modes)
}

/// Applies `U` to the listed modes (row/column `p` of `U` acts on mode
/// `modes[p]`), leaving the others untouched.
///
/// Each basis term `prod_i (a_i^dag)^{n_i} / sqrt(n_i!) |0>` is expanded
/// multinomially after the substitution `a_i^dag -> sum_j U[i][j] b_j^dag`.
pub fn apply_on<T: Real>(u: &ModeUnitary<T>, state: &PureState<T>, modes: &[usize]) -> Result<PureState<T>> {
    state.mode_mask(modes)?;
    if u.dim() != modes.len() {
        return Err(Error::ModeMismatch {
            expected: modes.len(),
            found: u.dim(),
        });
    }
    let k = modes.len();
    let fact: Vec<T> = factorials(state.max_photons());
    let mut out: BTreeMap<Occupation, Complex<T>> = BTreeMap::new();

    for (occ, &amp) in state.terms() {
        // monomials over the listed output modes -> coefficient
        let mut poly: BTreeMap<Vec<u32>, Complex<T>> = BTreeMap::new();
        poly.insert(vec![0; k], amp);
        let mut inv_norm = T::one();
        for (p, &mode) in modes.iter().enumerate() {
            let n = occ.get(mode);
            if n == 0 {
                continue;
            }
            inv_norm /= fact[n as usize].sqrt();
            let mut next: BTreeMap<Vec<u32>, Complex<T>> = BTreeMap::new();
            let mut buf = Vec::with_capacity(k);
            for_each_composition(n, k, &mut buf, &mut |split| {
                let mut w = Complex::new(fact[n as usize], T::zero());
                for (q, &kq) in split.iter().enumerate() {
                    if kq == 0 {
                        continue;
                    }
                    let uq = u.get(p, q);
                    if uq.is_zero() {
                        return;
                    }
                    w = w * uq.powu(kq) / fact[kq as usize];
                }
                for (mono, &coef) in &poly {
                    let key: Vec<u32> = mono.iter().zip(split).map(|(a, b)| a + b).collect();
                    *next.entry(key).or_insert_with(Complex::zero) += coef * w;
                }
            });
            poly = next;
        }
        for (mono, coef) in poly {
            let mut counts = occ.counts().to_vec();
            let mut norm = inv_norm;
            for (q, &m) in mono.iter().enumerate() {
                counts[modes[q]] = m;
                norm *= fact[m as usize].sqrt();
            }
            *out.entry(Occupation::new(counts)).or_insert_with(Complex::zero) += coef * norm;
        }
    }
    PureState::from_map(state.modes(), out, state.cutoff(), state.prune_threshold())?
        .ok_or(Error::EmptyState)
}

/// Permanent by Ryser's inclusion-exclusion formula.
fn permanent<T: Real>(m: &[Vec<Complex<T>>]) -> Complex<T> {
    let n = m.len();
    if n == 0 {
        return Complex::one();
    }
    let mut total = Complex::zero();
    for subset in 1u64..(1u64 << n) {
        let mut prod = Complex::one();
        for row in m {
            let mut s = Complex::zero();
            for (j, &x) in row.iter().enumerate() {
                if subset & (1 << j) != 0 {
                    s += x;
                }
            }
            prod *= s;
        }
        let sign = if (n - subset.count_ones() as usize).is_multiple_of(2) { T::one() } else { -T::one() };
        total += prod * sign;
    }
    total
}

/// Amplitude `<output| U |input>` through the permanent of the photon-indexed
/// submatrix; independent of the expansion used by [`apply`].
pub fn transition_amplitude<T: Real>(u: &ModeUnitary<T>, input: &Occupation, output: &Occupation) -> Result<Complex<T>> {
    if input.modes() != u.dim() || output.modes() != u.dim() {
        return Err(Error::ModeMismatch {
            expected: u.dim(),
            found: input.modes().max(output.modes()),
        });
    }
    if input.total() != output.total() {
        return Ok(Complex::zero());
    }
    let expand = |o: &Occupation| -> Vec<usize> {
        o.counts()
            .iter()
            .enumerate()
            .flat_map(|(m, &n)| std::iter::repeat_n(m, n as usize))
            .collect()
    };
    let rows = expand(input);
    let cols = expand(output);
    let sub: Vec<Vec<Complex<T>>> = rows
        .iter()
        .map(|&i| cols.iter().map(|&j| u.get(i, j)).collect())
        .collect();
    let fact: Vec<T> = factorials(input.total());
    let mut norm = T::one();
    for &n in input.counts().iter().chain(output.counts()) {
        norm *= fact[n as usize];
    }
    Ok(permanent(&sub) / norm.sqrt())
}

/// Factorization `U = B_1 B_2 ... B_K D` into nearest-neighbour two-mode
/// blocks followed by a diagonal phase layer.
#[derive(Clone, Debug)]
pub struct ReckFactors<T: Real> {
    pub blocks: Vec<BeamSplitterSpec<T>>,
    pub phases: Vec<T>,
}

impl<T: Real> ReckFactors<T> {
    pub fn unitary(&self) -> Result<ModeUnitary<T>> {
        let dim = self.phases.len();
        let mut u = ModeUnitary::identity(dim);
        for b in &self.blocks {
            u = u.compose(&ModeUnitary::beam_splitter(b, dim)?)?;
        }
        u.compose(&ModeUnitary::diagonal(&self.phases))
    }
}

/// Givens-style elimination: column by column, from the bottom row up, each
/// sub-diagonal entry is cleared by a block acting on rows `(i-1, i)`. The
/// resulting `T_K ... T_1 U` is unitary and upper triangular, hence
/// diagonal, so `U = T_1^dag ... T_K^dag D`.
pub fn reck_decompose<T: Real>(u: &ModeUnitary<T>) -> Result<ReckFactors<T>> {
    let dim = u.dim();
    let tiny = T::prune_threshold();
    let mut w = u.clone();
    let mut blocks = Vec::new();
    for col in 0..dim.saturating_sub(1) {
        for row in (col + 1..dim).rev() {
            let x = w.get(row - 1, col);
            let y = w.get(row, col);
            if y.norm() <= tiny {
                continue;
            }
            let rho = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let (c, s, eta) = if x.norm() <= tiny {
                (T::zero(), T::one(), Complex::one())
            } else {
                let eta = -(x * y.norm()) / (y * x.norm());
                (x.norm() / rho, y.norm() / rho, eta / eta.norm())
            };
            let spec = BeamSplitterSpec {
                c,
                s,
                eta,
                xi: Complex::one(),
                modes: (row - 1, row),
            };
            w = ModeUnitary::beam_splitter(&spec, dim)?.product(&w);
            blocks.push(spec.adjoint());
        }
    }
    let phases = (0..dim).map(|i| w.get(i, i).arg()).collect();
    Ok(ReckFactors { blocks, phases })
}

/// Random unitary built from a random mesh of beam splitters and phases.
pub fn random_unitary<T: Real, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ModeUnitary<T> {
    let two_pi = std::f64::consts::TAU;
    let mut u = ModeUnitary::identity(dim);
    for _ in 0..dim * dim {
        if dim < 2 {
            break;
        }
        let i = rng.gen_range(0..dim);
        let mut j = rng.gen_range(0..dim - 1);
        if j >= i {
            j += 1;
        }
        let spec = BeamSplitterSpec::from_angles(
            T::lit(rng.gen_range(0.0..std::f64::consts::FRAC_PI_2)),
            T::lit(rng.gen_range(0.0..two_pi)),
            T::lit(rng.gen_range(0.0..two_pi)),
            (i, j),
        )
        .expect("angles give a valid element");
        u = u.product(&ModeUnitary::beam_splitter(&spec, dim).expect("modes in range"));
    }
    let phases: Vec<T> = (0..dim).map(|_| T::lit(rng.gen_range(0.0..two_pi))).collect();
    u.product(&ModeUnitary::diagonal(&phases))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    type S = PureState<f64>;
    type U = ModeUnitary<f64>;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn bell(sign: f64) -> S {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        S::superpose([
            (Occupation::from(&[1u32, 0][..]), c(h, 0.0)),
            (Occupation::from(&[0u32, 1][..]), c(sign * h, 0.0)),
        ])
        .unwrap()
    }

    #[test]
    fn fifty_fifty_matrix() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let u = U::beam_splitter(&BeamSplitterSpec::fifty_fifty(0, 1).unwrap(), 2).unwrap();
        let expect = U::from_rows(vec![vec![c(h, 0.0), c(-h, 0.0)], vec![c(h, 0.0), c(h, 0.0)]]).unwrap();
        assert!(u.max_deviation(&expect) < 1e-15);

        let id = U::beam_splitter(&BeamSplitterSpec::transmissive(0, 1).unwrap(), 2).unwrap();
        assert!(id.max_deviation(&U::identity(2)) < 1e-15);
    }

    #[test]
    fn negative_s_is_canonicalized() {
        let (cc, ss) = ((3.0f64 / 8.0).sqrt(), -(5.0f64 / 8.0).sqrt());
        let xi = c(3.0, 1.0) / 10f64.sqrt();
        let spec = BeamSplitterSpec::new(cc, ss, c(1.0, 0.0), xi, (0, 1)).unwrap();
        assert!(spec.s() > 0.0);
        let b = spec.block();
        let expected = [[c(cc, 0.0), -c(ss, 0.0)], [xi * ss, xi * cc]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((b[i][j] - expected[i][j]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn invalid_elements() {
        let one = c(1.0, 0.0);
        assert!(BeamSplitterSpec::new(0.5, 0.5, one, one, (0, 1)).is_err());
        assert!(BeamSplitterSpec::new(1.0, 0.0, c(2.0, 0.0), one, (0, 1)).is_err());
        assert!(BeamSplitterSpec::new(1.0, 0.0, one, one, (1, 1)).is_err());
        assert!(BeamSplitterSpec::new(-1.0, 0.0, one, one, (0, 1)).is_err());
        let spec = BeamSplitterSpec::fifty_fifty(0, 3).unwrap();
        assert!(matches!(U::beam_splitter(&spec, 3), Err(Error::ModeOutOfRange { .. })));
        assert!(U::phase_shifter(0.1, 2, 2).is_err());
    }

    #[test]
    fn phase_shifter_behaviour() {
        assert!(U::phase_shifter(0.0, 0, 2).unwrap().max_deviation(&U::identity(2)) < 1e-15);

        let flipped = apply(&U::phase_shifter(std::f64::consts::PI, 0, 2).unwrap(), &bell(1.0)).unwrap();
        assert!((flipped.inner(&bell(-1.0)).unwrap() + c(1.0, 0.0)).norm() < 1e-12);

        let a = U::phase_shifter(0.3, 1, 2).unwrap();
        let b = U::phase_shifter(0.9, 1, 2).unwrap();
        let ab = U::phase_shifter(1.2, 1, 2).unwrap();
        assert!(a.compose(&b).unwrap().max_deviation(&ab) < 1e-15);
    }

    #[test]
    fn fifty_fifty_on_bell_states() {
        let bs = U::beam_splitter(&BeamSplitterSpec::fifty_fifty(0, 1).unwrap(), 2).unwrap();
        let plus = apply(&bs, &bell(1.0)).unwrap();
        assert!((plus.amplitude_of(&[1, 0]) - c(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(plus.len(), 1);

        let minus = apply(&bs, &bell(-1.0)).unwrap();
        assert!((minus.amplitude_of(&[0, 1]) - c(-1.0, 0.0)).norm() < 1e-15);
        assert_eq!(minus.len(), 1);
    }

    #[test]
    fn hong_ou_mandel() {
        // (a0'^dag - a1'^dag)(a0'^dag + a1'^dag)/2 |0> = (|2,0> - |0,2>)/sqrt2
        let bs = U::beam_splitter(&BeamSplitterSpec::fifty_fifty(0, 1).unwrap(), 2).unwrap();
        let out = apply(&bs, &S::basis(&[1, 1]).unwrap()).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((out.amplitude_of(&[2, 0]) - c(h, 0.0)).norm() < 1e-15);
        assert!((out.amplitude_of(&[0, 2]) - c(-h, 0.0)).norm() < 1e-15);
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn dimension_and_cutoff_errors() {
        let s = S::basis(&[1, 0, 0]).unwrap();
        assert!(matches!(apply(&U::identity(2), &s), Err(Error::ModeMismatch { .. })));

        let tight = S::basis(&[1, 1]).unwrap().with_cutoff(1).unwrap();
        let bs = U::beam_splitter(&BeamSplitterSpec::fifty_fifty(0, 1).unwrap(), 2).unwrap();
        assert!(matches!(apply(&bs, &tight), Err(Error::CutoffExceeded { .. })));
    }

    #[test]
    fn apply_matches_permanent_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u: U = random_unitary(3, &mut rng);
        for input in [[2u32, 1, 0], [1, 1, 1], [0, 0, 3]] {
            let out = apply(&u, &S::basis(&input).unwrap()).unwrap();
            for (occ, amp) in out.terms() {
                let alt = transition_amplitude(&u, &Occupation::from(&input[..]), occ).unwrap();
                assert!((alt - amp).norm() < 1e-12, "{occ}: {amp} vs {alt}");
            }
        }
    }

    #[test]
    fn reck_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for dim in 2..=4 {
            let u: U = random_unitary(dim, &mut rng);
            let f = reck_decompose(&u).unwrap();
            assert!(f.blocks.len() <= dim * (dim - 1) / 2);
            assert!(f.unitary().unwrap().max_deviation(&u) < 1e-10);
        }
    }

    #[test]
    fn unitarity_check() {
        assert!(U::from_rows(vec![vec![c(1.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]]).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u: U = random_unitary(4, &mut rng);
        assert!(u.unitarity_error() < 1e-12);
        assert!(u.compose(&U::identity(4)).unwrap().max_deviation(&u) < 1e-15);
    }

    #[test]
    fn text_format() {
        let t = U::identity(2).to_text();
        assert_eq!(t.lines().count(), 2);
        assert!(t.starts_with("+1.0000000000000000e0+0.0000000000000000e0i"));
    }
}
