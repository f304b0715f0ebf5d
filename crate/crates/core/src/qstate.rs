//! Dense state vectors over one or two dimension-`m` registers.
//!
//! The joint basis index is little-endian over registers read left to
//! right: for registers `(r0, r1)` with dimensions `(d0, d1)` the basis state
//! `|i0, i1>` lives at `i0 + d0 * i1`.

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex;
use rand::Rng;

use crate::error::{Error, Result};
use crate::group::{Exponent, GroupElement, GroupSpec};
use crate::scalar::Real;

/// Default cap on the number of amplitudes in a state.
pub const DEFAULT_DIM_CAP: usize = 1 << 24;

/// A register of dimension `m`: either over `Z/mZ` or over the group elements.
#[derive(Clone, Debug, PartialEq)]
pub enum Register {
    Exponent { dim: usize },
    Group(Arc<GroupSpec>),
}

impl Register {
    pub fn dim(&self) -> usize {
        match self {
            Register::Exponent { dim } => *dim,
            Register::Group(spec) => spec.dim(),
        }
    }

    pub fn is_exponent(&self) -> bool {
        matches!(self, Register::Exponent { .. })
    }

    pub fn group(&self) -> Option<&Arc<GroupSpec>> {
        match self {
            Register::Group(spec) => Some(spec),
            Register::Exponent { .. } => None,
        }
    }
}

/// A basis label for one register.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Label {
    Exponent(u64),
    Element(GroupElement),
}

impl Label {
    pub fn value(self) -> u64 {
        match self {
            Label::Exponent(v) => v,
            Label::Element(e) => e.label(),
        }
    }
}

impl From<Exponent> for Label {
    fn from(e: Exponent) -> Self {
        Label::Exponent(e.value())
    }
}

impl From<GroupElement> for Label {
    fn from(e: GroupElement) -> Self {
        Label::Element(e)
    }
}

#[derive(Clone, Debug)]
pub struct RegisterLayout {
    registers: Vec<Register>,
    total_dim: usize,
    cap: usize,
}

impl PartialEq for RegisterLayout {
    fn eq(&self, other: &Self) -> bool {
        self.registers == other.registers
    }
}

impl RegisterLayout {
    pub fn new(registers: Vec<Register>) -> Result<Self> {
        Self::with_cap(registers, DEFAULT_DIM_CAP)
    }

    pub fn with_cap(registers: Vec<Register>, cap: usize) -> Result<Self> {
        assert!(
            (1..=2).contains(&registers.len()),
            "layouts hold one or two registers"
        );
        let total_dim = registers
            .iter()
            .try_fold(1usize, |acc, r| acc.checked_mul(r.dim()))
            .unwrap_or(usize::MAX);
        if total_dim > cap {
            return Err(Error::CapExceeded { requested: total_dim, cap });
        }
        Ok(RegisterLayout { registers, total_dim, cap })
    }

    pub fn exponent(m: usize) -> Result<Self> {
        Self::new(vec![Register::Exponent { dim: m }])
    }

    pub fn group(spec: &Arc<GroupSpec>) -> Result<Self> {
        Self::new(vec![Register::Group(spec.clone())])
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn register(&self, index: usize) -> &Register {
        &self.registers[index]
    }

    pub fn len(&self) -> usize {
        self.registers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.registers.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    /// Basis index of `label` within register `register`.
    pub fn label_index(&self, register: usize, label: Label) -> Result<usize> {
        let bad = Error::BadLabel { register, label: label.value() };
        match (&self.registers[register], label) {
            (Register::Exponent { dim }, Label::Exponent(v)) if (v as usize) < *dim => Ok(v as usize),
            (Register::Group(spec), Label::Element(e)) => spec.index_of(e).ok_or(bad),
            _ => Err(bad),
        }
    }

    pub fn label_at(&self, register: usize, index: usize) -> Label {
        match &self.registers[register] {
            Register::Exponent { .. } => Label::Exponent(index as u64),
            Register::Group(spec) => Label::Element(spec.element(index)),
        }
    }

    /// Splits a joint index into per-register indices.
    pub fn split(&self, joint: usize) -> (usize, usize) {
        let d0 = self.registers[0].dim();
        (joint % d0, joint / d0)
    }

    pub fn join(&self, i0: usize, i1: usize) -> usize {
        i0 + self.registers[0].dim() * i1
    }

    /// (inner stride, block count, block stride) for iterating one register.
    fn strides(&self, register: usize) -> (usize, usize, usize) {
        let d0 = self.registers[0].dim();
        match (register, self.registers.len()) {
            (0, 1) => (1, 1, 0),
            (0, _) => (1, self.registers[1].dim(), d0),
            (1, _) => (d0, d0, 1),
            _ => panic!("register index {register} out of range"),
        }
    }
}

/// A dense `dim x dim` complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn new(dim: usize, data: Vec<Complex<T>>) -> Self {
        assert_eq!(data.len(), dim * dim, "matrix data has the wrong size");
        DenseMatrix { dim, data }
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for row in 0..dim {
            for col in 0..dim {
                data.push(f(row, col));
            }
        }
        DenseMatrix { dim, data }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |r, c| if r == c { Complex::new(T::one(), T::zero()) } else { Complex::new(T::zero(), T::zero()) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.data[row * self.dim + col]
    }

    pub fn row(&self, row: usize) -> &[Complex<T>] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self.get(c, r).conj())
    }

    /// `max |(U U^dagger - I)_{ij}|`.
    pub fn unitarity_defect(&self) -> T {
        let n = self.dim;
        let mut worst = T::zero();
        for i in 0..n {
            let ri = self.row(i);
            for j in i..n {
                let rj = self.row(j);
                let mut acc = Complex::new(T::zero(), T::zero());
                for k in 0..n {
                    acc += ri[k] * rj[k].conj();
                }
                if i == j {
                    acc.re -= T::one();
                }
                worst = worst.max(acc.norm());
            }
        }
        worst
    }

    pub fn check_unitary(&self, tol: T) -> Result<()> {
        let defect = self.unitarity_defect();
        if defect <= tol {
            Ok(())
        } else {
            Err(Error::NotUnitary(defect.to_f64().unwrap_or(f64::NAN)))
        }
    }
}

/// A verified bijection on joint basis indices: basis state `i` maps to `table[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    table: Vec<usize>,
}

impl Permutation {
    pub fn new(table: Vec<usize>) -> Result<Self> {
        let mut hit = vec![false; table.len()];
        for &t in &table {
            if t >= table.len() || std::mem::replace(&mut hit[t], true) {
                return Err(Error::NotBijective);
            }
        }
        Ok(Permutation { table })
    }

    pub fn identity(len: usize) -> Self {
        Permutation { table: (0..len).collect() }
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn image(&self, index: usize) -> usize {
        self.table[index]
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.table.len()];
        for (i, &t) in self.table.iter().enumerate() {
            inv[t] = i;
        }
        Permutation { table: inv }
    }

    pub fn then(&self, next: &Permutation) -> Self {
        assert_eq!(self.len(), next.len());
        Permutation { table: self.table.iter().map(|&t| next.table[t]).collect() }
    }
}

#[derive(Clone, Debug)]
pub struct MeasurementOutcome<T> {
    pub register_index: usize,
    pub observed: Label,
    pub probability: T,
    pub post_state: QState<T>,
}

/// A normalized complex amplitude vector over a [`RegisterLayout`].
#[derive(Clone, Debug, PartialEq)]
pub struct QState<T> {
    layout: RegisterLayout,
    amplitudes: Vec<Complex<T>>,
}

fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

impl<T: Real> QState<T> {
    /// Amplitude 1 on the basis state named by `labels`.
    pub fn basis_state(layout: RegisterLayout, labels: &[Label]) -> Result<Self> {
        assert_eq!(labels.len(), layout.len(), "one label per register");
        let i0 = layout.label_index(0, labels[0])?;
        let i1 = if labels.len() > 1 { layout.label_index(1, labels[1])? } else { 0 };
        let mut amplitudes = vec![czero(); layout.total_dim()];
        amplitudes[layout.join(i0, i1)] = Complex::new(T::one(), T::zero());
        Ok(QState { layout, amplitudes })
    }

    /// Equal-weight superposition of every basis state.
    pub fn uniform(layout: RegisterLayout) -> Self {
        let a = T::one() / T::from_count(layout.total_dim()).sqrt();
        let amplitudes = vec![Complex::new(a, T::zero()); layout.total_dim()];
        QState { layout, amplitudes }
    }

    /// Wraps raw amplitudes, rejecting non-finite or unnormalized input.
    pub fn from_amplitudes(layout: RegisterLayout, amplitudes: Vec<Complex<T>>) -> Result<Self> {
        if amplitudes.len() != layout.total_dim() {
            return Err(Error::LayoutMismatch);
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::DegenerateNorm(f64::NAN));
        }
        let state = QState { layout, amplitudes };
        let norm = state.norm_sqr();
        if (norm - T::one()).abs() > T::tolerance() {
            return Err(Error::DegenerateNorm(norm.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(state)
    }

    #[cfg(test)]
    pub(crate) fn from_parts_unchecked(layout: RegisterLayout, amplitudes: Vec<Complex<T>>) -> Self {
        debug_assert_eq!(amplitudes.len(), layout.total_dim());
        QState { layout, amplitudes }
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn amplitude(&self, labels: &[Label]) -> Result<Complex<T>> {
        let i0 = self.layout.label_index(0, labels[0])?;
        let i1 = if labels.len() > 1 { self.layout.label_index(1, labels[1])? } else { 0 };
        Ok(self.amplitudes[self.layout.join(i0, i1)])
    }

    pub fn norm_sqr(&self) -> T {
        self.amplitudes.iter().fold(T::zero(), |acc, a| acc + a.norm_sqr())
    }

    /// Applies `u` to one register. With `verify`, `u` is first checked for unitarity.
    pub fn apply_register_unitary(&mut self, register: usize, u: &DenseMatrix<T>, verify: bool) -> Result<()> {
        let dim = self.layout.register(register).dim();
        if u.dim() != dim {
            return Err(Error::LayoutMismatch);
        }
        if verify {
            u.check_unitary(T::tolerance())?;
        }
        let (stride, blocks, block_stride) = self.layout.strides(register);
        let mut column = vec![czero::<T>(); dim];
        for b in 0..blocks {
            let base = b * block_stride;
            for (k, c) in column.iter_mut().enumerate() {
                *c = self.amplitudes[base + k * stride];
            }
            for y in 0..dim {
                let row = u.row(y);
                let mut acc = czero::<T>();
                for (uk, ck) in row.iter().zip(&column) {
                    acc += *uk * *ck;
                }
                self.amplitudes[base + y * stride] = acc;
            }
        }
        Ok(())
    }

    /// Runs `f` over every length-`dim` fibre of one register, in place.
    pub(crate) fn for_each_fibre(&mut self, register: usize, mut f: impl FnMut(&mut [Complex<T>])) {
        let dim = self.layout.register(register).dim();
        let (stride, blocks, block_stride) = self.layout.strides(register);
        if stride == 1 {
            for b in 0..blocks {
                let base = b * block_stride;
                f(&mut self.amplitudes[base..base + dim]);
            }
        } else {
            let mut column = vec![czero::<T>(); dim];
            for b in 0..blocks {
                let base = b * block_stride;
                for (k, c) in column.iter_mut().enumerate() {
                    *c = self.amplitudes[base + k * stride];
                }
                f(&mut column);
                for (k, c) in column.iter().enumerate() {
                    self.amplitudes[base + k * stride] = *c;
                }
            }
        }
    }

    /// Moves the amplitude of basis state `i` to `perm.image(i)`. Exact.
    pub fn apply_basis_permutation(&mut self, perm: &Permutation) -> Result<()> {
        if perm.len() != self.amplitudes.len() {
            return Err(Error::LayoutMismatch);
        }
        let mut out = vec![czero::<T>(); self.amplitudes.len()];
        for (i, a) in self.amplitudes.iter().enumerate() {
            out[perm.image(i)] = *a;
        }
        self.amplitudes = out;
        Ok(())
    }

    /// Exact outcome probabilities for one register.
    pub fn marginal_distribution(&self, register: usize) -> Vec<T> {
        let mut out = vec![T::zero(); self.layout.register(register).dim()];
        for (joint, a) in self.amplitudes.iter().enumerate() {
            let (i0, i1) = self.layout.split(joint);
            let idx = if register == 0 { i0 } else { i1 };
            out[idx] += a.norm_sqr();
        }
        out
    }

    /// Collapses `register` onto basis index `index`, renormalizing.
    pub fn project(&self, register: usize, index: usize) -> Result<(T, QState<T>)> {
        let mut amplitudes = self.amplitudes.clone();
        let mut mass = T::zero();
        for (joint, a) in amplitudes.iter_mut().enumerate() {
            let (i0, i1) = self.layout.split(joint);
            let idx = if register == 0 { i0 } else { i1 };
            if idx == index {
                mass += a.norm_sqr();
            } else {
                *a = czero();
            }
        }
        if mass < T::corruption_tolerance() {
            return Err(Error::DegenerateNorm(mass.to_f64().unwrap_or(f64::NAN)));
        }
        let scale = T::one() / mass.sqrt();
        for a in amplitudes.iter_mut() {
            *a = *a * scale;
        }
        let total = self.norm_sqr();
        Ok((mass / total, QState { layout: self.layout.clone(), amplitudes }))
    }

    /// Samples one register by inverse CDF over its marginal.
    pub fn measure<R: Rng + ?Sized>(&self, register: usize, rng: &mut R) -> Result<MeasurementOutcome<T>> {
        let total = self.norm_sqr();
        if total < T::corruption_tolerance() {
            return Err(Error::DegenerateNorm(total.to_f64().unwrap_or(f64::NAN)));
        }
        let marginal = self.marginal_distribution(register);
        let u = T::lit(rng.gen::<f64>()) * total;
        let mut cumulative = T::zero();
        let mut chosen = None;
        for (i, p) in marginal.iter().enumerate() {
            if *p <= T::zero() {
                continue;
            }
            cumulative += *p;
            chosen = Some(i);
            if u < cumulative {
                break;
            }
        }
        let index = chosen.expect("positive total norm implies a nonzero marginal");
        let (probability, post_state) = self.project(register, index)?;
        Ok(MeasurementOutcome {
            register_index: register,
            observed: self.layout.label_at(register, index),
            probability,
            post_state,
        })
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &QState<T>) -> Result<Complex<T>> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch);
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .fold(czero(), |acc, (a, b)| acc + a.conj() * *b))
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &QState<T>) -> Result<T> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// `max_i |self_i - other_i|`, for amplitude-wise comparisons.
    pub fn max_deviation(&self, other: &QState<T>) -> Result<T> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch);
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).norm())))
    }

    pub fn scaled(&self, factor: Complex<T>) -> QState<T> {
        QState {
            layout: self.layout.clone(),
            amplitudes: self.amplitudes.iter().map(|a| *a * factor).collect(),
        }
    }

    /// `self (x) other`, with `self` as the left register.
    pub fn tensor(&self, other: &QState<T>) -> Result<QState<T>> {
        if self.layout.len() != 1 || other.layout.len() != 1 {
            return Err(Error::WrongLayout { expected: "two single-register states" });
        }
        let layout = RegisterLayout::with_cap(
            vec![self.layout.register(0).clone(), other.layout.register(0).clone()],
            self.layout.cap().min(other.layout.cap()),
        )?;
        let mut amplitudes = Vec::with_capacity(layout.total_dim());
        for b in &other.amplitudes {
            for a in &self.amplitudes {
                amplitudes.push(*a * *b);
            }
        }
        Ok(QState { layout, amplitudes })
    }

    /// Removes `register`, which must hold `expected` up to a global phase,
    /// and returns the state of the remaining register.
    pub fn factor_out(&self, register: usize, expected: &QState<T>) -> Result<QState<T>> {
        if self.layout.len() != 2 || expected.layout.len() != 1 {
            return Err(Error::WrongLayout { expected: "two-register state and one-register factor" });
        }
        if self.layout.register(register) != expected.layout.register(0) {
            return Err(Error::LayoutMismatch);
        }
        let keep = 1 - register;
        let keep_layout = RegisterLayout::with_cap(vec![self.layout.register(keep).clone()], self.layout.cap())?;
        let keep_dim = keep_layout.total_dim();
        // remaining_j = sum_i conj(expected_i) * psi(i, j)
        let mut remaining = vec![czero::<T>(); keep_dim];
        for (joint, a) in self.amplitudes.iter().enumerate() {
            let (i0, i1) = self.layout.split(joint);
            let (i, j) = if register == 0 { (i0, i1) } else { (i1, i0) };
            remaining[j] += expected.amplitudes[i].conj() * *a;
        }
        let mut residual = T::zero();
        for (joint, a) in self.amplitudes.iter().enumerate() {
            let (i0, i1) = self.layout.split(joint);
            let (i, j) = if register == 0 { (i0, i1) } else { (i1, i0) };
            residual += (*a - remaining[j] * expected.amplitudes[i]).norm_sqr();
        }
        let residual = residual.sqrt();
        if residual > T::tolerance() {
            return Err(Error::NotAProductState(residual.to_f64().unwrap_or(f64::NAN)));
        }
        let norm = remaining.iter().fold(T::zero(), |acc, a| acc + a.norm_sqr()).sqrt();
        if norm < T::corruption_tolerance() {
            return Err(Error::DegenerateNorm(norm.to_f64().unwrap_or(f64::NAN)));
        }
        for a in remaining.iter_mut() {
            *a = *a / norm;
        }
        Ok(QState { layout: keep_layout, amplitudes: remaining })
    }

    /// Text dump: one `index re im` line per amplitude, 17 significant digits.
    pub fn dump(&self) -> String {
        let mut out = String::with_capacity(self.amplitudes.len() * 52);
        for (i, a) in self.amplitudes.iter().enumerate() {
            writeln!(out, "{} {:.16e} {:.16e}", i, a.re, a.im).unwrap();
        }
        out
    }

    /// Parses [`QState::dump`] output against a known layout.
    pub fn parse_dump(layout: RegisterLayout, text: &str) -> Result<Self> {
        let mut amplitudes = vec![czero::<T>(); layout.total_dim()];
        let mut seen = vec![false; layout.total_dim()];
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let err = || Error::Parse(format!("line {}: expected `index re im`, got {line:?}", lineno + 1));
            let mut parts = line.split_whitespace();
            let (Some(i), Some(re), Some(im), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
                return Err(err());
            };
            let i: usize = i.parse().map_err(|_| err())?;
            let re: f64 = re.parse().map_err(|_| err())?;
            let im: f64 = im.parse().map_err(|_| err())?;
            if i >= amplitudes.len() || seen[i] {
                return Err(err());
            }
            seen[i] = true;
            amplitudes[i] = Complex::new(T::lit(re), T::lit(im));
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Parse("dump does not cover every basis index".into()));
        }
        QState::from_amplitudes(layout, amplitudes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::validate_group;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn dft(m: usize) -> DenseMatrix<f64> {
        DenseMatrix::from_fn(m, |y, x| crate::scalar::root_of_unity::<f64>((x * y) as u64, m as u64) / (m as f64).sqrt())
    }

    #[test]
    fn basis_states() {
        let s = QState::<f64>::basis_state(RegisterLayout::exponent(4).unwrap(), &[Label::Exponent(0)]).unwrap();
        assert_eq!(s.amplitudes(), &[c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)]);

        let spec = Arc::new(validate_group(3, 2, true).unwrap());
        let layout = RegisterLayout::new(vec![Register::Exponent { dim: 2 }, Register::Group(spec.clone())]).unwrap();
        let s = QState::<f64>::basis_state(layout.clone(), &[Label::Exponent(1), spec.identity().into()]).unwrap();
        let hot = layout.join(1, spec.index_of(spec.identity()).unwrap());
        assert_eq!(s.amplitudes()[hot], c(1., 0.));
        assert_eq!(s.norm_sqr(), 1.0);

        let err = QState::<f64>::basis_state(RegisterLayout::exponent(6).unwrap(), &[Label::Exponent(6)]).unwrap_err();
        assert_eq!(err, Error::BadLabel { register: 0, label: 6 });
        let err = QState::<f64>::basis_state(layout, &[Label::Exponent(0), Label::Element(GroupElement::new(0))])
            .unwrap_err();
        assert_eq!(err, Error::BadLabel { register: 1, label: 0 });
    }

    #[test]
    fn cap_is_enforced() {
        let err = RegisterLayout::with_cap(vec![Register::Exponent { dim: 10 }, Register::Exponent { dim: 10 }], 99)
            .unwrap_err();
        assert_eq!(err, Error::CapExceeded { requested: 100, cap: 99 });
    }

    #[test]
    fn register_unitaries() {
        let layout = RegisterLayout::exponent(4).unwrap();
        let mut s = QState::<f64>::basis_state(layout.clone(), &[Label::Exponent(2)]).unwrap();
        let before = s.clone();
        s.apply_register_unitary(0, &DenseMatrix::identity(4), true).unwrap();
        assert_eq!(s, before);

        let mut s = QState::<f64>::basis_state(RegisterLayout::exponent(2).unwrap(), &[Label::Exponent(0)]).unwrap();
        s.apply_register_unitary(0, &dft(2), true).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert!((s.amplitudes()[0] - c(h, 0.)).norm() < 1e-15);
        assert!((s.amplitudes()[1] - c(h, 0.)).norm() < 1e-15);

        // F_4 |1> = (|0> + i|1> - |2> - i|3>)/2
        let mut s = QState::<f64>::basis_state(layout, &[Label::Exponent(1)]).unwrap();
        s.apply_register_unitary(0, &dft(4), true).unwrap();
        let want = [c(0.5, 0.), c(0., 0.5), c(-0.5, 0.), c(0., -0.5)];
        for (a, w) in s.amplitudes().iter().zip(want) {
            assert!((a - w).norm() < 1e-12);
        }
    }

    #[test]
    fn non_unitary_rejected_in_verify_mode() {
        let mut s = QState::<f64>::basis_state(RegisterLayout::exponent(2).unwrap(), &[Label::Exponent(0)]).unwrap();
        let bad = DenseMatrix::new(2, vec![c(1., 0.), c(1., 0.), c(0., 0.), c(1., 0.)]);
        assert!(matches!(s.apply_register_unitary(0, &bad, true), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn unitary_on_second_register() {
        let layout = RegisterLayout::new(vec![Register::Exponent { dim: 3 }, Register::Exponent { dim: 2 }]).unwrap();
        let mut s = QState::<f64>::basis_state(layout, &[Label::Exponent(2), Label::Exponent(1)]).unwrap();
        s.apply_register_unitary(1, &dft(2), false).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert!((s.amplitude(&[Label::Exponent(2), Label::Exponent(0)]).unwrap() - c(h, 0.)).norm() < 1e-15);
        assert!((s.amplitude(&[Label::Exponent(2), Label::Exponent(1)]).unwrap() - c(-h, 0.)).norm() < 1e-15);
    }

    #[test]
    fn permutations() {
        assert_eq!(Permutation::new(vec![0, 0, 1]).unwrap_err(), Error::NotBijective);
        assert_eq!(Permutation::new(vec![0, 3]).unwrap_err(), Error::NotBijective);

        let layout = RegisterLayout::exponent(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let amps: Vec<Complex<f64>> = (0..4).map(|_| c(rng.gen(), rng.gen())).collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let s = QState::from_amplitudes(layout.clone(), amps.iter().map(|a| a / norm).collect()).unwrap();

        let mut t = s.clone();
        t.apply_basis_permutation(&Permutation::identity(4)).unwrap();
        assert_eq!(t, s);

        let swap = Permutation::new(vec![0, 2, 1, 3]).unwrap();
        t.apply_basis_permutation(&swap).unwrap();
        assert_ne!(t, s);
        t.apply_basis_permutation(&swap).unwrap();
        assert_eq!(t, s);

        let shift = Permutation::new(vec![1, 2, 3, 0]).unwrap();
        let mut z = QState::<f64>::basis_state(layout, &[Label::Exponent(0)]).unwrap();
        z.apply_basis_permutation(&shift).unwrap();
        assert_eq!(z.amplitudes()[1], c(1., 0.));
    }

    #[test]
    fn measurement_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = QState::<f64>::basis_state(RegisterLayout::exponent(5).unwrap(), &[Label::Exponent(3)]).unwrap();
        let out = s.measure(0, &mut rng).unwrap();
        assert_eq!(out.observed, Label::Exponent(3));
        assert_eq!(out.probability, 1.0);
        assert_eq!(out.post_state, s);

        let u = QState::<f64>::uniform(RegisterLayout::exponent(4).unwrap());
        for p in u.marginal_distribution(0) {
            assert!((p - 0.25).abs() < 1e-9);
        }
        let u5 = QState::<f64>::uniform(RegisterLayout::exponent(5).unwrap());
        for p in u5.marginal_distribution(0) {
            assert!((p - 0.2).abs() < 1e-9);
        }
        let out = u.measure(0, &mut rng).unwrap();
        assert!((out.probability - 0.25).abs() < 1e-9);
        assert!((out.post_state.norm_sqr() - 1.0).abs() < 1e-12);

        let dead = QState::<f64>::from_parts_unchecked(RegisterLayout::exponent(2).unwrap(), vec![c(1e-4, 0.), c(0., 0.)]);
        assert!(matches!(dead.measure(0, &mut rng), Err(Error::DegenerateNorm(_))));
    }

    #[test]
    fn measurement_frequencies_match_marginals() {
        let layout = RegisterLayout::exponent(5).unwrap();
        let weights = [0.1, 0.25, 0.05, 0.4, 0.2];
        let amps = weights.iter().enumerate().map(|(i, w)| Complex::from_polar(f64::sqrt(*w), i as f64)).collect();
        let s = QState::from_amplitudes(layout, amps).unwrap();
        let marginal = s.marginal_distribution(0);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let shots = 100_000;
        let mut counts = [0usize; 5];
        for _ in 0..shots {
            counts[s.measure(0, &mut rng).unwrap().observed.value() as usize] += 1;
        }
        for (k, p) in marginal.iter().enumerate() {
            let sigma = (shots as f64 * p * (1.0 - p)).sqrt();
            let dev = (counts[k] as f64 - shots as f64 * p).abs();
            assert!(dev <= 4.0 * sigma, "label {k}: deviation {dev} > 4 sigma {sigma}");
        }
    }

    #[test]
    fn fidelity_and_layouts() {
        let l = RegisterLayout::exponent(3).unwrap();
        let a = QState::<f64>::basis_state(l.clone(), &[Label::Exponent(0)]).unwrap();
        let b = QState::<f64>::basis_state(l, &[Label::Exponent(1)]).unwrap();
        assert_eq!(a.fidelity(&a).unwrap(), 1.0);
        assert_eq!(a.fidelity(&b).unwrap(), 0.0);
        let other = QState::<f64>::uniform(RegisterLayout::exponent(4).unwrap());
        assert_eq!(a.fidelity(&other).unwrap_err(), Error::LayoutMismatch);
    }

    #[test]
    fn tensor_and_factor() {
        let l2 = RegisterLayout::exponent(2).unwrap();
        let zero = QState::<f64>::basis_state(l2.clone(), &[Label::Exponent(0)]).unwrap();
        let one = QState::<f64>::basis_state(l2, &[Label::Exponent(1)]).unwrap();
        let joint = zero.tensor(&one).unwrap();
        assert_eq!(joint.amplitude(&[Label::Exponent(0), Label::Exponent(1)]).unwrap(), c(1., 0.));

        let phased = one.scaled(Complex::from_polar(1.0, 0.7));
        let left = joint.factor_out(1, &phased).unwrap();
        assert!((left.fidelity(&zero).unwrap() - 1.0).abs() < 1e-12);

        let bell = QState::from_amplitudes(
            joint.layout().clone(),
            vec![c(0.5f64.sqrt(), 0.), c(0., 0.), c(0., 0.), c(0.5f64.sqrt(), 0.)],
        )
        .unwrap();
        assert!(matches!(bell.factor_out(1, &one), Err(Error::NotAProductState(_))));
    }

    #[test]
    fn dump_round_trip() {
        let spec = Arc::new(validate_group(7, 3, true).unwrap());
        let layout = RegisterLayout::group(&spec).unwrap();
        let amps: Vec<Complex<f64>> = (0..6).map(|r| Complex::from_polar(1.0 / 6f64.sqrt(), r as f64 * 0.3)).collect();
        let s = QState::from_amplitudes(layout.clone(), amps).unwrap();
        let text = s.dump();
        assert_eq!(text.lines().count(), 6);
        assert!(text.lines().next().unwrap().starts_with("0 4.0824829046386307e-1 "));
        let back = QState::<f64>::parse_dump(layout.clone(), &text).unwrap();
        assert_eq!(back, s);
        assert!(matches!(QState::<f64>::parse_dump(layout, "0 1 0\n"), Err(Error::Parse(_))));
    }
}
