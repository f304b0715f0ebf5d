//! The Fourier transform over `Z/mZ`, the division operators `D^alpha` and
//! `D_x`, and the power oracle `|r, y> -> |r, y g^r>`.

use std::sync::{Arc, OnceLock};

use num_complex::Complex;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::group::{Exponent, GroupElement, GroupSpec};
use crate::qstate::{DenseMatrix, Permutation, QState, Register, RegisterLayout};
use crate::scalar::{root_of_unity, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Inverse,
}

/// How the Fourier transform is evaluated.
///
/// `Dense` multiplies by the explicit matrix and is the reference. `Fast`
/// runs a mixed-radix FFT and must agree with it to within tolerance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FourierPath {
    #[default]
    Dense,
    Fast,
}

/// `F: |x> -> m^{-1/2} sum_y zeta_m^{xy} |y>`, or its adjoint.
#[derive(Debug)]
pub struct FourierSpec<T> {
    m: usize,
    direction: Direction,
    matrix: OnceLock<DenseMatrix<T>>,
}

impl<T: Real> FourierSpec<T> {
    pub fn new(m: usize, direction: Direction) -> Self {
        assert!(m > 0, "Fourier dimension must be positive");
        FourierSpec { m, direction, matrix: OnceLock::new() }
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// Entry `(y, x)` is `zeta_m^{+-xy} / sqrt(m)`, with `xy` reduced mod `m`.
    pub fn matrix(&self) -> &DenseMatrix<T> {
        self.matrix.get_or_init(|| {
            let m = self.m as u64;
            let scale = T::one() / T::from_count(self.m).sqrt();
            DenseMatrix::from_fn(self.m, |y, x| {
                let k = (x as u64 * y as u64) % m;
                let k = match self.direction {
                    Direction::Forward => k,
                    Direction::Inverse => (m - k) % m,
                };
                root_of_unity::<T>(k, m) * scale
            })
        })
    }

    pub fn apply(&self, state: &mut QState<T>, register: usize, path: FourierPath) -> Result<()> {
        match state.layout().register(register) {
            Register::Exponent { dim } if *dim == self.m => {}
            Register::Exponent { .. } => return Err(Error::LayoutMismatch),
            Register::Group(_) => return Err(Error::WrongRegisterKind(register)),
        }
        match path {
            FourierPath::Dense => state.apply_register_unitary(register, self.matrix(), false),
            FourierPath::Fast => {
                // rustfft's forward transform uses exp(-2 pi i / m), i.e. our inverse
                let dir = match self.direction {
                    Direction::Forward => FftDirection::Inverse,
                    Direction::Inverse => FftDirection::Forward,
                };
                let fft = FftPlanner::<T>::new().plan_fft(self.m, dir);
                let scale = T::one() / T::from_count(self.m).sqrt();
                let mut scratch = vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
                state.for_each_fibre(register, |fibre| {
                    fft.process_with_scratch(fibre, &mut scratch);
                    for a in fibre.iter_mut() {
                        *a = *a * scale;
                    }
                });
                Ok(())
            }
        }
    }
}

/// Applies `F` (or `F^dagger`) to an exponent register.
pub fn qft_apply<T: Real>(state: &mut QState<T>, register: usize, direction: Direction, path: FourierPath) -> Result<()> {
    let m = state.layout().register(register).dim();
    FourierSpec::new(m, direction).apply(state, register, path)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DivisionKind {
    /// `D^alpha: |x, y> -> |x, y / x^alpha>` on two group registers.
    DAlpha(Exponent),
    /// `D_x: |alpha, y> -> |alpha, y / x^alpha>` on exponent (x) group.
    DX(GroupElement),
    /// `|r, y> -> |r, y g^r>` on exponent (x) group.
    PowerOracle,
}

/// One of the group-arithmetic basis permutations, as an explicit index table.
#[derive(Clone, Debug)]
pub struct DivisionPermutation {
    kind: DivisionKind,
    spec: Arc<GroupSpec>,
    table: Permutation,
}

impl DivisionPermutation {
    pub fn d_alpha(spec: &Arc<GroupSpec>, alpha: Exponent) -> Result<Self> {
        let m = spec.dim();
        let alpha = Exponent::from_u64(alpha.value(), spec.order());
        let mut table = vec![0; m * m];
        for (ix, &x) in spec.elements().iter().enumerate() {
            let shift = spec.pow(x, -(alpha.value() as i64));
            for (iy, &y) in spec.elements().iter().enumerate() {
                let target = spec.index_of(spec.mul(y, shift)).expect("closed under multiplication");
                table[ix + m * iy] = ix + m * target;
            }
        }
        Self::build(DivisionKind::DAlpha(alpha), spec, table)
    }

    pub fn d_x(spec: &Arc<GroupSpec>, x: GroupElement) -> Result<Self> {
        spec.check(x)?;
        let m = spec.dim();
        let mut table = vec![0; m * m];
        for alpha in 0..m {
            let shift = spec.pow(x, -(alpha as i64));
            for (iy, &y) in spec.elements().iter().enumerate() {
                let target = spec.index_of(spec.mul(y, shift)).expect("closed under multiplication");
                table[alpha + m * iy] = alpha + m * target;
            }
        }
        Self::build(DivisionKind::DX(x), spec, table)
    }

    pub fn power_oracle(spec: &Arc<GroupSpec>) -> Result<Self> {
        let m = spec.dim();
        let mut table = vec![0; m * m];
        for r in 0..m {
            let shift = spec.gen_pow(r as u64);
            for (iy, &y) in spec.elements().iter().enumerate() {
                let target = spec.index_of(spec.mul(y, shift)).expect("closed under multiplication");
                table[r + m * iy] = r + m * target;
            }
        }
        Self::build(DivisionKind::PowerOracle, spec, table)
    }

    fn build(kind: DivisionKind, spec: &Arc<GroupSpec>, table: Vec<usize>) -> Result<Self> {
        Ok(DivisionPermutation { kind, spec: spec.clone(), table: Permutation::new(table)? })
    }

    pub fn kind(&self) -> DivisionKind {
        self.kind
    }

    pub fn permutation(&self) -> &Permutation {
        &self.table
    }

    /// The layout this operator acts on.
    pub fn layout(&self) -> Result<RegisterLayout> {
        let left = match self.kind {
            DivisionKind::DAlpha(_) => Register::Group(self.spec.clone()),
            DivisionKind::DX(_) | DivisionKind::PowerOracle => Register::Exponent { dim: self.spec.dim() },
        };
        RegisterLayout::new(vec![left, Register::Group(self.spec.clone())])
    }

    pub fn apply<T: Real>(&self, state: &mut QState<T>) -> Result<()> {
        let regs = state.layout().registers();
        let ok = regs.len() == 2
            && regs[1].group().is_some_and(|g| **g == *self.spec)
            && match self.kind {
                DivisionKind::DAlpha(_) => regs[0].group().is_some_and(|g| **g == *self.spec),
                DivisionKind::DX(_) | DivisionKind::PowerOracle => {
                    regs[0] == Register::Exponent { dim: self.spec.dim() }
                }
            };
        if !ok {
            let expected = match self.kind {
                DivisionKind::DAlpha(_) => "(group register, group register) over the operator's group",
                _ => "(exponent register, group register) over the operator's group",
            };
            return Err(Error::WrongLayout { expected });
        }
        state.apply_basis_permutation(&self.table)
    }
}

pub fn div_alpha_apply<T: Real>(state: &mut QState<T>, spec: &Arc<GroupSpec>, alpha: Exponent) -> Result<()> {
    DivisionPermutation::d_alpha(spec, alpha)?.apply(state)
}

pub fn div_x_apply<T: Real>(state: &mut QState<T>, spec: &Arc<GroupSpec>, x: GroupElement) -> Result<()> {
    DivisionPermutation::d_x(spec, x)?.apply(state)
}

pub fn power_oracle_apply<T: Real>(state: &mut QState<T>, spec: &Arc<GroupSpec>) -> Result<()> {
    DivisionPermutation::power_oracle(spec)?.apply(state)
}
