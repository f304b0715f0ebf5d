//! Chi states `|chi^a> = m^{-1/2} sum_r zeta_m^{a r} |g^r>`: direct
//! construction, the measure-and-retry preparation procedure, and the
//! `D^alpha` copy/power mapping `|chi^b>|chi^c> -> |chi^{b + alpha c}>|chi^c>`.

use std::sync::Arc;

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{gcd, Exponent, GroupSpec};
use crate::options::SimOptions;
use crate::qstate::{Label, QState, Register, RegisterLayout};
use crate::scalar::{root_of_unity, Real};
use crate::transforms::{qft_apply, Direction, DivisionPermutation};

/// `|chi^alpha>` evaluated straight from its definition.
///
/// `alpha` is taken as a raw integer so that `alpha = m` and `alpha = 0`
/// can be compared; it is reduced mod `m` inside the phase.
pub fn chi_reference<T: Real>(spec: &Arc<GroupSpec>, alpha: u64) -> Result<QState<T>> {
    let layout = RegisterLayout::group(spec)?;
    let m = spec.order();
    let scale = T::one() / T::from_count(spec.dim()).sqrt();
    let mut amplitudes = vec![Complex::new(T::zero(), T::zero()); spec.dim()];
    for r in 0..m {
        let idx = spec.index_of(spec.gen_pow(r)).expect("powers of g are elements");
        let k = ((alpha as u128 * r as u128) % m as u128) as u64;
        amplitudes[idx] = root_of_unity::<T>(k, m) * scale;
    }
    QState::from_amplitudes(layout, amplitudes)
}

/// A single group register holding (or claimed to hold) `|chi^power>`.
#[derive(Clone, Debug)]
pub struct ChiHandle<T> {
    spec: Arc<GroupSpec>,
    power: Exponent,
    state: QState<T>,
    verified: bool,
}

impl<T: Real> ChiHandle<T> {
    /// Wraps a state without checking it. Call [`ChiHandle::verify`] before use.
    pub fn unverified(spec: &Arc<GroupSpec>, power: Exponent, state: QState<T>) -> Result<Self> {
        let layout = state.layout();
        if layout.len() != 1 || layout.register(0) != &Register::Group(spec.clone()) {
            return Err(Error::LayoutMismatch);
        }
        let power = Exponent::from_u64(power.value(), spec.order());
        Ok(ChiHandle { spec: spec.clone(), power, state, verified: false })
    }

    /// The reference state itself, verified by construction.
    pub fn reference(spec: &Arc<GroupSpec>, power: Exponent) -> Result<Self> {
        let state = chi_reference(spec, power.value())?;
        let mut handle = Self::unverified(spec, power, state)?;
        handle.verified = true;
        Ok(handle)
    }

    pub fn spec(&self) -> &Arc<GroupSpec> {
        &self.spec
    }

    pub fn power(&self) -> Exponent {
        self.power
    }

    pub fn state(&self) -> &QState<T> {
        &self.state
    }

    pub fn is_verified(&self) -> bool {
        self.verified
    }

    /// Fidelity against the reference `|chi^power>`.
    pub fn reference_fidelity(&self) -> Result<T> {
        self.state.fidelity(&chi_reference(&self.spec, self.power.value())?)
    }

    /// Marks the handle verified iff its fidelity is within tolerance of 1.
    pub fn verify(&mut self) -> Result<T> {
        let f = self.reference_fidelity()?;
        self.verified = f >= T::one() - T::tolerance();
        Ok(f)
    }

    pub(crate) fn replace_state(&mut self, state: QState<T>) {
        self.state = state;
    }

    /// Header line plus the state dump.
    pub fn to_dump(&self) -> String {
        format!("{}\n{}", self.header(), self.state.dump())
    }

    pub fn header(&self) -> String {
        format!(
            "chi m={} power={} n={} g={}",
            self.spec.order(),
            self.power.value(),
            self.spec.modulus().unwrap_or(0),
            self.spec.generator().label()
        )
    }

    /// Parses a dump written by [`ChiHandle::to_dump`] for a known group.
    /// The returned handle is unverified.
    pub fn from_dump(spec: &Arc<GroupSpec>, text: &str) -> Result<Self> {
        let (header, body) = text.split_once('\n').unwrap_or((text, ""));
        let h = ChiHeader::parse(header)?;
        let n = spec.modulus().unwrap_or(0);
        if h.m != spec.order() || h.n != n || h.g != spec.generator().label() {
            return Err(Error::ArtifactMismatch(format!(
                "dump has m={} n={} g={}, expected m={} n={} g={}",
                h.m,
                h.n,
                h.g,
                spec.order(),
                n,
                spec.generator().label()
            )));
        }
        let state = QState::parse_dump(RegisterLayout::group(spec)?, body)?;
        Self::unverified(spec, spec.exponent(h.power as i64), state)
    }
}

/// Parsed `chi m=<m> power=<a> n=<n> g=<g>` header. `n = 0` marks a table group.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChiHeader {
    pub m: u64,
    pub power: u64,
    pub n: u64,
    pub g: u64,
}

impl ChiHeader {
    pub fn parse(line: &str) -> Result<Self> {
        let err = || Error::Parse(format!("bad chi header {line:?}"));
        let mut parts = line.split_whitespace();
        if parts.next() != Some("chi") {
            return Err(err());
        }
        let mut field = |name: &str| -> Result<u64> {
            let part = parts.next().ok_or_else(err)?;
            let value = part.strip_prefix(name).and_then(|r| r.strip_prefix('=')).ok_or_else(err)?;
            value.parse().map_err(|_| err())
        };
        let header = ChiHeader { m: field("m")?, power: field("power")?, n: field("n")?, g: field("g")? };
        if parts.next().is_some() {
            return Err(err());
        }
        Ok(header)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrepMode {
    /// Measure the `s` register by seeded sampling.
    Sampled { seed: u64 },
    /// Compute the exact acceptance probability and continue with the
    /// smallest `s` coprime to `m`.
    Exhaustive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrepStats {
    pub attempts: usize,
    pub observed_s: Vec<u64>,
    pub success_s: u64,
    pub acceptance_probability: Option<f64>,
}

/// Prepares `|chi>` by the measure-and-retry procedure:
///
/// 1. `|0, 1> -> m^{-1/2} sum_r |r, g^r>` (Fourier on the left, then the power oracle)
/// 2. Fourier on the left register, giving `m^{-1/2} sum_s |s, chi^s>`
/// 3. measure `s`; start over unless `gcd(s, m) = 1`
/// 4. replace the `s` register by the uniform superposition `|chi^0>`
/// 5. apply `D^{1/s}` to reach `|chi^1, chi^s>` and drop the right register
pub fn prepare_chi<T: Real>(spec: &Arc<GroupSpec>, mode: PrepMode, opts: &SimOptions) -> Result<(ChiHandle<T>, PrepStats)> {
    let m = spec.order();
    let verify = opts.verify.enabled(m);
    let exp_layout = RegisterLayout::with_cap(vec![Register::Exponent { dim: spec.dim() }], opts.dim_cap)?;
    let group_layout = RegisterLayout::with_cap(vec![Register::Group(spec.clone())], opts.dim_cap)?;
    // fail on the cap before any m^2 allocation
    RegisterLayout::with_cap(
        vec![Register::Exponent { dim: spec.dim() }, Register::Group(spec.clone())],
        opts.dim_cap,
    )?;
    let oracle = DivisionPermutation::power_oracle(spec)?;
    let mut rng = match mode {
        PrepMode::Sampled { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        PrepMode::Exhaustive => None,
    };

    let mut observed_s = Vec::new();
    let mut acceptance_probability = None;
    let (s, chi_s) = loop {
        if observed_s.len() >= opts.retry_cap {
            return Err(Error::RetryCapExceeded(observed_s.len()));
        }
        // step 1
        let mut left = QState::<T>::basis_state(exp_layout.clone(), &[Label::Exponent(0)])?;
        qft_apply(&mut left, 0, Direction::Forward, opts.fourier)?;
        let right = QState::<T>::basis_state(group_layout.clone(), &[spec.identity().into()])?;
        let mut joint = left.tensor(&right)?;
        oracle.apply(&mut joint)?;
        // step 2
        qft_apply(&mut joint, 0, Direction::Forward, opts.fourier)?;
        if verify {
            check_fourier_stage(spec, &joint)?;
        }
        // step 3
        let (s, post) = match rng.as_mut() {
            Some(rng) => {
                let outcome = joint.measure(0, rng)?;
                (outcome.observed.value(), outcome.post_state)
            }
            None => {
                let marginal = joint.marginal_distribution(0);
                let accept = marginal
                    .iter()
                    .enumerate()
                    .filter(|(s, _)| gcd(*s as u64, m) == 1)
                    .fold(T::zero(), |acc, (_, p)| acc + *p);
                acceptance_probability = accept.to_f64();
                let s = (0..m).find(|&s| gcd(s, m) == 1).expect("1 is coprime to every m");
                (s, joint.project(0, s as usize)?.1)
            }
        };
        observed_s.push(s);
        if gcd(s, m) != 1 {
            continue;
        }
        let s_basis = QState::<T>::basis_state(exp_layout.clone(), &[Label::Exponent(s)])?;
        break (s, post.factor_out(0, &s_basis)?);
    };
    assert_eq!(gcd(s, m), 1, "accepted s must be a unit mod m");

    // step 4
    let uniform = QState::<T>::uniform(group_layout);
    let mut joint = uniform.tensor(&chi_s)?;
    // step 5
    let inverse = Exponent::from_u64(s, m).inverse()?;
    DivisionPermutation::d_alpha(spec, inverse)?.apply(&mut joint)?;
    let chi = joint.factor_out(1, &chi_s)?;

    let mut handle = ChiHandle::unverified(spec, spec.exponent(1), chi)?;
    let fidelity = handle.verify()?;
    if !handle.is_verified() {
        return Err(Error::VerificationFailed(format!("prepared chi state has fidelity {fidelity:e}")));
    }
    let stats = PrepStats { attempts: observed_s.len(), observed_s, success_s: s, acceptance_probability };
    Ok((handle, stats))
}

/// Checks that the post-Fourier state equals `m^{-1/2} sum_s |s> (x) |chi^s>`.
fn check_fourier_stage<T: Real>(spec: &Arc<GroupSpec>, state: &QState<T>) -> Result<()> {
    let m = spec.order();
    let layout = state.layout();
    let inv_m = T::one() / T::from_count(spec.dim());
    let mut worst = T::zero();
    for r in 0..m {
        let iy = spec.index_of(spec.gen_pow(r)).expect("powers of g are elements");
        for s in 0..m {
            let want = root_of_unity::<T>(s * r % m, m) * inv_m;
            let got = state.amplitudes()[layout.join(s as usize, iy)];
            worst = worst.max((got - want).norm());
        }
    }
    if worst > T::tolerance() {
        return Err(Error::VerificationFailed(format!(
            "post-Fourier preparation state deviates from sum_s |s, chi^s> by {worst:e}"
        )));
    }
    Ok(())
}

/// Applies `D^alpha` to `|chi^b> (x) |chi^c>` and splits the result back
/// into two handles with powers `b + alpha c` and `c`.
pub fn chi_map<T: Real>(
    left: &ChiHandle<T>,
    right: &ChiHandle<T>,
    alpha: Exponent,
) -> Result<(ChiHandle<T>, ChiHandle<T>)> {
    let spec = &left.spec;
    if **spec != *right.spec {
        return Err(Error::LayoutMismatch);
    }
    let alpha = Exponent::from_u64(alpha.value(), spec.order());
    let mut joint = left.state.tensor(&right.state)?;
    DivisionPermutation::d_alpha(spec, alpha)?.apply(&mut joint)?;
    let new_left_state = joint.factor_out(1, &right.state)?;
    let new_right_state = joint.factor_out(0, &new_left_state)?;

    let mut new_left = ChiHandle::unverified(spec, left.power.add(alpha.mul(right.power)), new_left_state)?;
    let mut new_right = ChiHandle::unverified(spec, right.power, new_right_state)?;
    new_left.verify()?;
    new_right.verify()?;
    Ok((new_left, new_right))
}

/// Produces `|chi^{alpha c}>` from a verified `|chi^c>` handle, which is
/// updated in place with its post-operation state.
pub fn chi_power_from<T: Real>(source: &mut ChiHandle<T>, alpha: Exponent) -> Result<ChiHandle<T>> {
    if !source.verified {
        return Err(Error::UnverifiedChi { power: source.power.value() });
    }
    let zero = ChiHandle::reference(&source.spec, source.spec.exponent(0))?;
    let (out, after) = chi_map(&zero, source, alpha)?;
    if !after.verified {
        return Err(Error::VerificationFailed("source chi state changed under D^alpha".into()));
    }
    source.state = after.state;
    Ok(out)
}
