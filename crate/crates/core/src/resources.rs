//! Two-mode entanglement resources.
//!
//! Number-difference resources `sum_k d_k |k,k>` (squeezed vacuum,
//! photon-subtracted squeezed vacuum) and number-sum resources
//! `sum_k d_k |N-k,k>` (number-phase Bell states and their `r`-scaled
//! generalisations). Infinite series are truncated once the discarded
//! probability drops below a tail tolerance; truncated states are left
//! sub-normalized so every kept amplitude is exact.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::fock::{Conditional, Occupation, PureState, DEFAULT_CUTOFF};
use crate::{Complex, Error, Real, Result};

pub const DEFAULT_TAIL_EPSILON: f64 = 1e-12;

/// Below this gap in `lambda^2` the normalization `K` uses its analytic
/// `lambda = lambda'` limit.
pub const DEGENERATE_SQUEEZE_GAP: f64 = 1e-9;

/// Profiles must be normalized to this accuracy to serve as resources.
pub const PROFILE_NORM_TOLERANCE: f64 = 1e-10;

fn check_lambda<T: Real>(name: &str, lambda: T) -> Result<()> {
    if !(lambda >= T::zero() && lambda < T::one()) {
        return Err(Error::domain(format!("{name} = {lambda} must lie in [0, 1)")));
    }
    Ok(())
}

/// A pair of squeezing parameters; `r = lambda' / lambda`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SqueezeParams<T: Real> {
    lambda: T,
    lambda_prime: T,
}

impl<T: Real> SqueezeParams<T> {
    pub fn new(lambda: T, lambda_prime: T) -> Result<Self> {
        check_lambda("lambda", lambda)?;
        check_lambda("lambda'", lambda_prime)?;
        Ok(SqueezeParams { lambda, lambda_prime })
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn lambda_prime(&self) -> T {
        self.lambda_prime
    }

    pub fn ratio(&self) -> Result<T> {
        if self.lambda == T::zero() {
            return Err(Error::domain("r = lambda'/lambda is undefined for lambda = 0"));
        }
        Ok(self.lambda_prime / self.lambda)
    }

    pub fn swapped(&self) -> Self {
        SqueezeParams {
            lambda: self.lambda_prime,
            lambda_prime: self.lambda,
        }
    }
}

/// Smallest `K` whose discarded squeezed-vacuum tail `lambda^{2(K+1)}`
/// is below `eps`.
pub fn tail_cutoff<T: Real>(lambda: T, eps: T) -> Result<u32> {
    check_lambda("lambda", lambda)?;
    if !(eps > T::zero()) {
        return Err(Error::domain("tail tolerance must be positive"));
    }
    let x = lambda * lambda;
    let mut k = 0u32;
    let mut tail = x;
    while tail >= eps {
        k += 1;
        tail *= x;
    }
    Ok(k)
}

fn diagonal_state<T: Real>(amps: impl Iterator<Item = (u32, T)>, kmax: u32) -> Result<PureState<T>> {
    let terms: BTreeMap<Occupation, Complex<T>> = amps
        .map(|(k, a)| (Occupation::new(vec![k, k]), Complex::new(a, T::zero())))
        .collect();
    PureState::from_map(2, terms, DEFAULT_CUTOFF.max(kmax), T::prune_threshold())?.ok_or(Error::EmptyState)
}

/// `(1 - lambda^2)^{1/2} sum_{k <= kmax} lambda^k |k,k>`.
pub fn squeezed_vacuum_truncated<T: Real>(lambda: T, kmax: u32) -> Result<PureState<T>> {
    check_lambda("lambda", lambda)?;
    let pre = (T::one() - lambda * lambda).sqrt();
    diagonal_state((0..=kmax).map(|k| (k, pre * lambda.powi(k as i32))), kmax)
}

/// Two-mode squeezed vacuum truncated at [`tail_cutoff`].
pub fn squeezed_vacuum<T: Real>(lambda: T, tail_epsilon: T) -> Result<PureState<T>> {
    squeezed_vacuum_truncated(lambda, tail_cutoff(lambda, tail_epsilon)?)
}

fn subtracted_weight<T: Real>(lambda: T, k: u32) -> T {
    let x = lambda * lambda;
    let pre = (T::one() - x).powi(3) / (T::one() + x);
    let n = T::from_usize_lossy(k as usize + 1);
    pre * n * n * x.powi(k as i32)
}

/// Probability discarded by truncating the photon-subtracted state after
/// `kmax`, summed directly from the series.
pub fn photon_subtracted_tail<T: Real>(lambda: T, kmax: u32) -> T {
    let mut tail = T::zero();
    let mut k = kmax + 1;
    loop {
        let w = subtracted_weight(lambda, k);
        tail += w;
        if w <= tail * T::epsilon() || w == T::zero() {
            return tail;
        }
        k += 1;
    }
}

/// `sqrt((1-lambda^2)^3/(1+lambda^2)) sum_{k <= kmax} (k+1) lambda^k |k,k>`.
pub fn photon_subtracted_truncated<T: Real>(lambda: T, kmax: u32) -> Result<PureState<T>> {
    check_lambda("lambda", lambda)?;
    let x = lambda * lambda;
    let pre = ((T::one() - x).powi(3) / (T::one() + x)).sqrt();
    diagonal_state(
        (0..=kmax).map(|k| (k, pre * T::from_usize_lossy(k as usize + 1) * lambda.powi(k as i32))),
        kmax,
    )
}

pub fn photon_subtracted<T: Real>(lambda: T, tail_epsilon: T) -> Result<PureState<T>> {
    check_lambda("lambda", lambda)?;
    if !(tail_epsilon > T::zero()) {
        return Err(Error::domain("tail tolerance must be positive"));
    }
    let mut kmax = 0;
    while photon_subtracted_tail(lambda, kmax) >= tail_epsilon {
        kmax += 1;
    }
    photon_subtracted_truncated(lambda, kmax)
}

/// `omega_{N+1} = exp(2 pi i / (N+1))`.
pub fn omega<T: Real>(n: u32) -> Complex<T> {
    Complex::from_polar(T::one(), T::TAU() / T::from_usize_lossy(n as usize + 1))
}

/// Phase-difference eigenvalue `2 pi m / (N+1)`.
pub fn phase_eigenvalue<T: Real>(n: u32, m: u32) -> T {
    T::TAU() * T::from_usize_lossy(m as usize) / T::from_usize_lossy(n as usize + 1)
}

/// `K(lambda, lambda', N)^2 = (lambda^{2(N+1)} - lambda'^{2(N+1)}) / (lambda^2 - lambda'^2)`,
/// with the limit `(N+1) lambda^{2N}` near `lambda = lambda'`.
pub fn k_factor_sqr<T: Real>(lambda: T, lambda_prime: T, n: u32) -> T {
    let (x, y) = (lambda * lambda, lambda_prime * lambda_prime);
    let e = n as i32 + 1;
    if (x - y).abs() < T::lit(DEGENERATE_SQUEEZE_GAP) {
        T::from_usize_lossy(n as usize + 1) * x.powi(n as i32)
    } else {
        (x.powi(e) - y.powi(e)) / (x - y)
    }
}

/// Probability `P(N, lambda, lambda')` of obtaining `|N, m, r>` by the
/// swapping measurement, for any single `m`.
pub fn preparation_probability<T: Real>(n: u32, params: &SqueezeParams<T>) -> T {
    let (l, lp) = (params.lambda, params.lambda_prime);
    (T::one() - l * l) * (T::one() - lp * lp) * k_factor_sqr(l, lp, n) / T::from_usize_lossy(n as usize + 1)
}

/// Labels of a (generalized) number-sum Bell state `|N, m, r>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneralizedBellSpec<T: Real> {
    n: u32,
    m: u32,
    r: T,
    squeeze: Option<SqueezeParams<T>>,
}

impl<T: Real> GeneralizedBellSpec<T> {
    /// `m` is taken mod `N+1`, so `|N, -1> == |N, N>`.
    pub fn new(n: u32, m: i64, r: T) -> Result<Self> {
        if !(r >= T::zero() && r.is_finite()) {
            return Err(Error::domain(format!("scaling ratio r = {r} must be finite and non-negative")));
        }
        Ok(GeneralizedBellSpec {
            n,
            m: m.rem_euclid(n as i64 + 1) as u32,
            r,
            squeeze: None,
        })
    }

    pub fn from_squeeze(n: u32, m: i64, params: SqueezeParams<T>) -> Result<Self> {
        let mut spec = Self::new(n, m, params.ratio()?)?;
        spec.squeeze = Some(params);
        Ok(spec)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn r(&self) -> T {
        self.r
    }

    pub fn squeeze(&self) -> Option<SqueezeParams<T>> {
        self.squeeze
    }

    pub fn omega(&self) -> Complex<T> {
        omega(self.n)
    }

    pub fn phase(&self) -> T {
        phase_eigenvalue(self.n, self.m)
    }

    pub fn k_factor(&self) -> Option<T> {
        self.squeeze
            .map(|p| k_factor_sqr(p.lambda, p.lambda_prime, self.n).sqrt())
    }

    /// Normalized amplitudes on `|N-k, k>`, `k = 0..=N`.
    pub fn amplitudes(&self) -> Vec<Complex<T>> {
        let w = self.omega().conj();
        let phase = |k: u32| w.powu((self.m as u64 * k as u64 % (self.n as u64 + 1)) as u32);
        match self.squeeze {
            Some(p) => {
                let k = self.k_factor().expect("squeeze present");
                (0..=self.n)
                    .map(|j| {
                        phase(j)
                            * (p.lambda.powi((self.n - j) as i32) * p.lambda_prime.powi(j as i32) / k)
                    })
                    .collect()
            }
            None => {
                let norm = (0..=self.n)
                    .fold(T::zero(), |acc, j| acc + self.r.powi(2 * j as i32))
                    .sqrt();
                (0..=self.n)
                    .map(|j| phase(j) * (self.r.powi(j as i32) / norm))
                    .collect()
            }
        }
    }
}

fn sum_state<T: Real>(n: u32, amps: &[Complex<T>]) -> Result<PureState<T>> {
    let terms: BTreeMap<Occupation, Complex<T>> = amps
        .iter()
        .enumerate()
        .map(|(k, &a)| (Occupation::new(vec![n - k as u32, k as u32]), a))
        .collect();
    PureState::from_map(2, terms, DEFAULT_CUTOFF.max(n), T::prune_threshold())?.ok_or(Error::EmptyState)
}

/// `|N, m> = sum_k (omega*)^{mk} / sqrt(N+1) |N-k, k>`.
pub fn number_phase_bell<T: Real>(n: u32, m: i64) -> Result<PureState<T>> {
    generalized_bell(&GeneralizedBellSpec::new(n, m, T::one())?)
}

/// `|N, m, r>`; equals [`number_phase_bell`] at `r = 1`.
pub fn generalized_bell<T: Real>(spec: &GeneralizedBellSpec<T>) -> Result<PureState<T>> {
    sum_state(spec.n, &spec.amplitudes())
}

/// Amplitude distribution `d` of a custom resource.
#[derive(Clone, Debug, PartialEq)]
pub struct AmplitudeProfile<T: Real> {
    entries: Vec<Complex<T>>,
}

impl<T: Real> AmplitudeProfile<T> {
    pub fn new(entries: Vec<Complex<T>>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::domain("amplitude profile is empty"));
        }
        if entries.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::domain("amplitude profile entries must be finite"));
        }
        Ok(AmplitudeProfile { entries })
    }

    pub fn real(entries: &[T]) -> Result<Self> {
        Self::new(entries.iter().map(|&x| Complex::new(x, T::zero())).collect())
    }

    pub fn entries(&self) -> &[Complex<T>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, k: usize) -> Complex<T> {
        self.entries.get(k).copied().unwrap_or_else(Complex::zero)
    }

    pub fn norm_sqr(&self) -> T {
        self.entries.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
    }
}

/// Shape of a custom resource: `sum_k d_k |N-k,k>` or `sum_k d_k |k,k>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EprKind {
    NumberSum(u32),
    NumberDifference,
}

pub fn custom_epr<T: Real>(kind: EprKind, profile: &AmplitudeProfile<T>) -> Result<PureState<T>> {
    let norm = profile.norm_sqr();
    if (norm - T::one()).abs() > T::lit(PROFILE_NORM_TOLERANCE) {
        return Err(Error::domain(format!("amplitude profile has squared norm {norm}, expected 1")));
    }
    match kind {
        EprKind::NumberSum(n) => {
            if profile.len() != n as usize + 1 {
                return Err(Error::domain(format!(
                    "number-sum resource with N = {n} needs {} amplitudes, got {}",
                    n + 1,
                    profile.len()
                )));
            }
            sum_state(n, profile.entries())
        }
        EprKind::NumberDifference => {
            let kmax = profile.len() as u32 - 1;
            let terms: BTreeMap<Occupation, Complex<T>> = profile
                .entries()
                .iter()
                .enumerate()
                .map(|(k, &a)| (Occupation::new(vec![k as u32, k as u32]), a))
                .collect();
            PureState::from_map(2, terms, DEFAULT_CUTOFF.max(kmax), T::prune_threshold())?
                .ok_or(Error::EmptyState)
        }
    }
}

/// Simulates the swapping preparation: `|lambda>_13 |lambda'>_24` with modes
/// 3 and 4 projected onto `|N, -m>`. Returns the normalized state of modes
/// (1, 2), which is `|N, m, r>`, and the ideal projection probability.
pub fn prepare_via_swapping<T: Real>(
    params: &SqueezeParams<T>,
    n: u32,
    m: i64,
    tail_epsilon: T,
) -> Result<Conditional<T>> {
    let kmax = |l: T| tail_cutoff(l, tail_epsilon).map(|k| k.max(n));
    let a = squeezed_vacuum_truncated(params.lambda, kmax(params.lambda)?)?;
    let b = squeezed_vacuum_truncated(params.lambda_prime, kmax(params.lambda_prime)?)?;
    // mode order after the tensor product: 1, 3, 2, 4
    let joint = a.tensor(&b);
    let bra = number_phase_bell::<T>(n, -m)?;
    joint.contract(&[1, 3], &bra)
}
