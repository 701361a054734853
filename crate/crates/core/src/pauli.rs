// SPDX-License-Identifier: Apache-2.0

//! Two-qubit Pauli strings and words of Pauli rotations.
//!
//! A rotation about a Hermitian Pauli string `P` with exponent `a` is the
//! operator `P^a = exp(i·a·π·P/2)`, so `X1^1 = iσ₁ˣ` and
//! `(X1X2)^(1/2) = (1 + iσ₁ˣσ₂ˣ)/√2`. Words are stored in time order: the
//! first rotation acts first, so the unitary of a word is the right-to-left
//! product of its elements.

use std::fmt;
use std::ops::{Mul, Neg};
use std::str::FromStr;

use num_complex::Complex;
use num_rational::Rational64;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::linalg::{kron, phase_distance, Mat2, Mat4};
use crate::scalar::{lit, Scalar};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PauliError {
    #[error("rotation {index} has exponent {exponent}, which is not a multiple of 1/2")]
    NonCliffordExponent { index: usize, exponent: Rational64 },
    #[error("rotation axis {0} is not Hermitian")]
    NonHermitianAxis(PauliString),
    #[error("cannot parse rotation token `{token}`: {reason}")]
    Parse { token: String, reason: String },
}

/// Single-qubit Pauli operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Pauli {
        Self::ALL[i & 3]
    }

    /// `self · other = i^k · result`.
    pub fn product(self, other: Pauli) -> (Phase, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (Phase::ONE, p),
            (a, b) if a == b => (Phase::ONE, I),
            (X, Y) => (Phase::I, Z),
            (Y, Z) => (Phase::I, X),
            (Z, X) => (Phase::I, Y),
            (Y, X) => (Phase::MINUS_I, Z),
            (Z, Y) => (Phase::MINUS_I, X),
            (X, Z) => (Phase::MINUS_I, Y),
            _ => unreachable!(),
        }
    }

    pub fn matrix<T: Scalar>(self) -> Mat2<T> {
        let o = Complex::new(T::zero(), T::zero());
        let l = Complex::new(T::one(), T::zero());
        let i = Complex::new(T::zero(), T::one());
        match self {
            Pauli::I => Mat2::new(l, o, o, l),
            Pauli::X => Mat2::new(o, l, l, o),
            Pauli::Y => Mat2::new(o, -i, i, o),
            Pauli::Z => Mat2::new(l, o, o, -l),
        }
    }

    fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Fourth root of unity `i^k`, `k ∈ {0,1,2,3}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn power(self) -> u8 {
        self.0
    }

    pub fn is_real(self) -> bool {
        self.0.is_multiple_of(2)
    }

    pub fn to_complex<T: Scalar>(self) -> Complex<T> {
        match self.0 {
            0 => Complex::new(T::one(), T::zero()),
            1 => Complex::new(T::zero(), T::one()),
            2 => Complex::new(-T::one(), T::zero()),
            _ => Complex::new(T::zero(), -T::one()),
        }
    }
}

impl Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

impl Neg for Phase {
    type Output = Phase;
    fn neg(self) -> Phase {
        self * Phase::MINUS_ONE
    }
}

/// `phase · (first ⊗ second)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    pub phase: Phase,
    pub first: Pauli,
    pub second: Pauli,
}

impl PauliString {
    pub const fn new(phase: Phase, first: Pauli, second: Pauli) -> Self {
        Self {
            phase,
            first,
            second,
        }
    }

    /// Unit-phase string `first ⊗ second`.
    pub const fn unit(first: Pauli, second: Pauli) -> Self {
        Self::new(Phase::ONE, first, second)
    }

    pub const fn identity() -> Self {
        Self::unit(Pauli::I, Pauli::I)
    }

    /// `p` acting on `qubit` (1 or 2), identity on the other.
    pub fn single(qubit: u8, p: Pauli) -> Self {
        match qubit {
            1 => Self::unit(p, Pauli::I),
            _ => Self::unit(Pauli::I, p),
        }
    }

    /// The fifteen non-identity unit-phase strings in canonical order:
    /// `XI YI ZI IX IY IZ XX XY XZ YX YY YZ ZX ZY ZZ`.
    pub fn basis() -> [PauliString; 15] {
        std::array::from_fn(Self::from_basis_index)
    }

    /// All sixteen unit-phase strings, identity first.
    pub fn all_unit() -> impl Iterator<Item = PauliString> {
        (0..16).map(|k| Self::unit(Pauli::from_index(k / 4), Pauli::from_index(k % 4)))
    }

    /// Position in [`PauliString::basis`], ignoring phase. `None` for the
    /// identity.
    pub fn basis_index(&self) -> Option<usize> {
        use Pauli::I;
        match (self.first, self.second) {
            (I, I) => None,
            (p, I) => Some(p.index() - 1),
            (I, q) => Some(q.index() + 2),
            (p, q) => Some(6 + 3 * (p.index() - 1) + (q.index() - 1)),
        }
    }

    pub fn from_basis_index(i: usize) -> PauliString {
        match i {
            0..=2 => Self::unit(Pauli::from_index(i + 1), Pauli::I),
            3..=5 => Self::unit(Pauli::I, Pauli::from_index(i - 2)),
            _ => {
                let k = i - 6;
                Self::unit(Pauli::from_index(k / 3 + 1), Pauli::from_index(k % 3 + 1))
            }
        }
    }

    pub fn is_identity(&self) -> bool {
        self.first == Pauli::I && self.second == Pauli::I
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase.is_real()
    }

    /// The same string with phase reset to +1.
    pub fn unsigned(&self) -> PauliString {
        Self::unit(self.first, self.second)
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let anti = |a: Pauli, b: Pauli| a != Pauli::I && b != Pauli::I && a != b;
        anti(self.first, other.first) == anti(self.second, other.second)
    }

    pub fn matrix<T: Scalar>(&self) -> Mat4<T> {
        kron(&self.first.matrix(), &self.second.matrix()) * self.phase.to_complex::<T>()
    }
}

impl Default for PauliString {
    fn default() -> Self {
        Self::identity()
    }
}

impl Mul for PauliString {
    type Output = PauliString;
    fn mul(self, rhs: PauliString) -> PauliString {
        let (p1, first) = self.first.product(rhs.first);
        let (p2, second) = self.second.product(rhs.second);
        PauliString::new(self.phase * rhs.phase * p1 * p2, first, second)
    }
}

impl Neg for PauliString {
    type Output = PauliString;
    fn neg(self) -> PauliString {
        PauliString::new(-self.phase, self.first, self.second)
    }
}

/// Standard Pauli group product.
pub fn pauli_multiply(a: PauliString, b: PauliString) -> PauliString {
    a * b
}

fn write_axis(f: &mut fmt::Formatter<'_>, first: Pauli, second: Pauli) -> fmt::Result {
    if first == Pauli::I && second == Pauli::I {
        return f.write_str("I");
    }
    if first != Pauli::I {
        write!(f, "{}1", first.letter())?;
    }
    if second != Pauli::I {
        write!(f, "{}2", second.letter())?;
    }
    Ok(())
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.phase.0 {
            0 => "",
            1 => "i",
            2 => "-",
            _ => "-i",
        })?;
        write_axis(f, self.first, self.second)
    }
}

/// Parses an axis name such as `X1`, `Z2` or `X1X2`.
fn parse_axis(s: &str) -> Option<PauliString> {
    let bytes = s.as_bytes();
    if bytes.is_empty() || !bytes.len().is_multiple_of(2) {
        return None;
    }
    let mut factors = [Pauli::I, Pauli::I];
    let mut seen = [false, false];
    for pair in bytes.chunks(2) {
        let p = match pair[0] {
            b'X' => Pauli::X,
            b'Y' => Pauli::Y,
            b'Z' => Pauli::Z,
            _ => return None,
        };
        let q = match pair[1] {
            b'1' => 0,
            b'2' => 1,
            _ => return None,
        };
        if seen[q] {
            return None;
        }
        seen[q] = true;
        factors[q] = p;
    }
    Some(PauliString::unit(factors[0], factors[1]))
}

/// `cos(a·π/2)` and `sin(a·π/2)`, exact at multiples of 1/2.
fn half_turn_trig<T: Scalar>(a: Rational64) -> (T, T) {
    let twice = a * 2;
    if twice.is_integer() {
        let s: T = lit(std::f64::consts::FRAC_1_SQRT_2);
        let o = T::zero();
        let l = T::one();
        let n = twice.to_integer().rem_euclid(8);
        let cos = [l, s, o, -s, -l, -s, o, s][n as usize];
        let sin = [o, s, l, s, o, -s, -l, -s][n as usize];
        (cos, sin)
    } else {
        let angle = lit::<T>(a.to_f64().unwrap_or(f64::NAN)) * T::frac_pi_2();
        (angle.cos(), angle.sin())
    }
}

/// One factor `axis^exponent` of a rotation word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rotation {
    axis: PauliString,
    exponent: Rational64,
}

impl Rotation {
    /// A `-1` axis phase is folded into the exponent; imaginary phases are
    /// rejected.
    pub fn new(axis: PauliString, exponent: Rational64) -> Result<Self, PauliError> {
        if !axis.is_hermitian() {
            return Err(PauliError::NonHermitianAxis(axis));
        }
        let exponent = if axis.phase == Phase::MINUS_ONE {
            -exponent
        } else {
            exponent
        };
        Ok(Self {
            axis: axis.unsigned(),
            exponent,
        })
    }

    /// Convenience constructor for `axis^(num/den)` with a unit-phase axis.
    pub fn of(axis: PauliString, num: i64, den: i64) -> Self {
        Self::new(axis, Rational64::new(num, den)).expect("unit-phase axis")
    }

    pub fn axis(&self) -> PauliString {
        self.axis
    }

    pub fn exponent(&self) -> Rational64 {
        self.exponent
    }

    pub fn is_clifford(&self) -> bool {
        (self.exponent * 2).is_integer()
    }

    pub fn inverse(&self) -> Rotation {
        Rotation {
            axis: self.axis,
            exponent: -self.exponent,
        }
    }

    /// `exp(i·a·π·P/2) = cos(aπ/2)·1 + i·sin(aπ/2)·P`.
    pub fn unitary<T: Scalar>(&self) -> Mat4<T> {
        let (c, s) = half_turn_trig::<T>(self.exponent);
        Mat4::identity() * Complex::new(c, T::zero())
            + self.axis.matrix::<T>() * Complex::new(T::zero(), s)
    }

    /// `R p R†` for a Clifford rotation.
    fn conjugate(&self, p: PauliString) -> PauliString {
        if self.axis.commutes_with(&p) {
            return p;
        }
        // R p R† = exp(i·a·π·P)·p for anticommuting p.
        let twice = (self.exponent * 2).to_integer();
        if twice % 2 == 0 {
            if (twice / 2) % 2 == 0 {
                p
            } else {
                -p
            }
        } else {
            // sin(aπ) = ±1 when 2a is odd.
            let sign = if (twice - 1).rem_euclid(4) == 0 {
                Phase::I
            } else {
                Phase::MINUS_I
            };
            let rotated = self.axis * p;
            PauliString::new(sign * rotated.phase, rotated.first, rotated.second)
        }
    }
}

impl fmt::Display for Rotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_axis(f, self.axis.first, self.axis.second)?;
        write!(f, "^{}/{}", self.exponent.numer(), self.exponent.denom())
    }
}

impl FromStr for Rotation {
    type Err = PauliError;

    /// `<axis>^<num>/<den>`; a bare integer exponent is also accepted.
    fn from_str(token: &str) -> Result<Self, PauliError> {
        let err = |reason: &str| PauliError::Parse {
            token: token.to_string(),
            reason: reason.to_string(),
        };
        let (axis, exp) = token.split_once('^').ok_or_else(|| err("missing `^`"))?;
        let axis = parse_axis(axis).ok_or_else(|| err("unknown axis"))?;
        let (num, den) = match exp.split_once('/') {
            Some((n, d)) => (n, d),
            None => (exp, "1"),
        };
        let num: i64 = num.parse().map_err(|_| err("bad numerator"))?;
        let den: i64 = den.parse().map_err(|_| err("bad denominator"))?;
        if den == 0 {
            return Err(err("zero denominator"));
        }
        Rotation::new(axis, Rational64::new(num, den))
    }
}

/// Time-ordered product of Pauli rotations.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct RotationWord(Vec<Rotation>);

impl RotationWord {
    pub fn new(rotations: Vec<Rotation>) -> Self {
        Self(rotations)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn rotations(&self) -> &[Rotation] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, r: Rotation) {
        self.0.push(r);
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Rotation> {
        self.0.iter()
    }

    pub fn is_clifford(&self) -> bool {
        self.0.iter().all(Rotation::is_clifford)
    }

    /// Word whose unitary is the inverse of this one.
    pub fn inverse(&self) -> RotationWord {
        Self(self.0.iter().rev().map(Rotation::inverse).collect())
    }

    /// Element-wise conjugation `q w q†` by a Pauli string: every axis that
    /// anticommutes with `q` has its exponent negated.
    pub fn conjugated_by(&self, q: &PauliString) -> RotationWord {
        Self(
            self.0
                .iter()
                .map(|r| {
                    if r.axis.commutes_with(q) {
                        *r
                    } else {
                        r.inverse()
                    }
                })
                .collect(),
        )
    }

    pub fn unitary<T: Scalar>(&self) -> Mat4<T> {
        self.0
            .iter()
            .fold(Mat4::identity(), |acc, r| r.unitary::<T>() * acc)
    }

    /// `U p U†` where `U` is the unitary of this word.
    pub fn conjugate(&self, p: PauliString) -> Result<PauliString, PauliError> {
        if let Some((index, r)) = self.0.iter().enumerate().find(|(_, r)| !r.is_clifford()) {
            return Err(PauliError::NonCliffordExponent {
                index,
                exponent: r.exponent,
            });
        }
        Ok(self.0.iter().fold(p, |acc, r| r.conjugate(acc)))
    }
}

impl FromIterator<Rotation> for RotationWord {
    fn from_iter<I: IntoIterator<Item = Rotation>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl fmt::Display for RotationWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

impl FromStr for RotationWord {
    type Err = PauliError;

    fn from_str(s: &str) -> Result<Self, PauliError> {
        s.split_whitespace().map(str::parse).collect()
    }
}

/// `word_unitary(w)`.
pub fn word_unitary<T: Scalar>(w: &RotationWord) -> Mat4<T> {
    w.unitary()
}

/// `conjugate_pauli(w, p)`.
pub fn conjugate_pauli(w: &RotationWord, p: PauliString) -> Result<PauliString, PauliError> {
    w.conjugate(p)
}

const X1: PauliString = PauliString::unit(Pauli::X, Pauli::I);
const Y1: PauliString = PauliString::unit(Pauli::Y, Pauli::I);
const Z1: PauliString = PauliString::unit(Pauli::Z, Pauli::I);
const X2: PauliString = PauliString::unit(Pauli::I, Pauli::X);
const Z2: PauliString = PauliString::unit(Pauli::I, Pauli::Z);
const XX: PauliString = PauliString::unit(Pauli::X, Pauli::X);
const ZZ: PauliString = PauliString::unit(Pauli::Z, Pauli::Z);

/// The entangling rotation `(X1X2)^(1/2)` followed by `(Z1Z2)^(-1/2)`.
/// The factors commute.
pub fn build_d() -> RotationWord {
    RotationWord::new(vec![Rotation::of(XX, 1, 2), Rotation::of(ZZ, -1, 2)])
}

/// `X2^1/2 Y1^1/2 X1X2^1/2 Y1^-1/2 Z1^1/2` in time order; equals CNOT with
/// qubit 1 as control, up to a global phase.
pub fn build_cnot_word() -> RotationWord {
    RotationWord::new(vec![
        Rotation::of(X2, 1, 2),
        Rotation::of(Y1, 1, 2),
        Rotation::of(XX, 1, 2),
        Rotation::of(Y1, -1, 2),
        Rotation::of(Z1, 1, 2),
    ])
}

/// Generators tracked in the Heisenberg table of a two-qubit Clifford.
pub fn heisenberg_generators() -> [PauliString; 4] {
    [Z1, X1, Z2, X2]
}

/// Images `U p U†` of [`heisenberg_generators`].
pub fn heisenberg_table(w: &RotationWord) -> Result<[PauliString; 4], PauliError> {
    let g = heisenberg_generators();
    Ok([
        w.conjugate(g[0])?,
        w.conjugate(g[1])?,
        w.conjugate(g[2])?,
        w.conjugate(g[3])?,
    ])
}

/// CNOT with qubit 1 as control.
pub fn cnot_matrix<T: Scalar>() -> Mat4<T> {
    let mut m = Mat4::zeros();
    let one = Complex::new(T::one(), T::zero());
    m[(0, 0)] = one;
    m[(1, 1)] = one;
    m[(2, 3)] = one;
    m[(3, 2)] = one;
    m
}

/// True iff `min_φ max|U − e^{iφ}V| ≤ tol`.
pub fn equal_up_to_global_phase<T: Scalar>(u: &Mat4<T>, v: &Mat4<T>, tol: T) -> bool {
    phase_distance(u, v) <= tol
}

/// Is `exponent` an integer multiple of 1/2?
pub fn is_half_multiple(exponent: Rational64) -> bool {
    (exponent * 2).is_integer()
}

/// Exponent helper used by the compiler: `±1/2` from a sign.
pub fn half(sign: i64) -> Rational64 {
    Rational64::new(sign.signum(), 2)
}

/// Rotation angle `exponent·π` of `exp(i·exponent·π·P/2)`, doubled to the
/// Bloch-sphere angle.
pub fn exponent_angle(exponent: Rational64) -> f64 {
    exponent.to_f64().unwrap_or(f64::NAN) * std::f64::consts::PI
}
