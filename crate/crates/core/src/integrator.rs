// SPDX-License-Identifier: Apache-2.0

//! Time evolution of the two-qubit density operator under the full lab-frame
//! Hamiltonian, with no rotating-wave approximation.
//!
//! The primary route integrates the von Neumann equation in the Pauli basis
//! (fifteen real coefficients) with classic fixed-step RK4. The oracle route
//! propagates the density matrix with exact 4×4 exponentials of a
//! fourth-order commutator-free splitting and doubles its substep count until
//! the result stops changing. Both routes share the same knot schedule, so
//! neither ever steps across a segment edge, flip, envelope corner or
//! frame change.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{cis, expm_hermitian, hermitian_eigen, kron, orthonormalize, re, trace_distance, Ket, Mat2, Mat4};
use crate::model::{DriveSnapshot, Hamiltonian, PulseSequence, Qubit, SystemParams};
use crate::pauli::PauliString;
use crate::scalar::{lit, to_f64, Scalar};

#[derive(Debug, Error)]
pub enum IntegratorError {
    #[error("local error estimate {estimate:.3e} per unit time at t={t:.6} exceeds {limit:.1e}; increase steps per period")]
    StepTooCoarse { estimate: f64, t: f64, limit: f64 },
    #[error("oracle did not converge: trace distance {distance:.3e} after {substeps} substeps per period")]
    NoConvergence { substeps: usize, distance: f64 },
    #[error("expected a lab-frame trajectory")]
    WrongFrame,
    #[error("invalid density state: {0}")]
    InvalidState(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// `dc_α/dt = Σ h_β T[α,β,γ] c_γ` for `H = ½Σ h_β P_β`.
///
/// Only anticommuting pairs contribute, with `T = −iφ ∈ {±1}` where
/// `P_β P_γ = φ P_α`.
#[derive(Debug, Clone)]
pub struct StructureConstants {
    entries: Vec<(u8, u8, u8, i8)>,
}

impl StructureConstants {
    pub fn new() -> Self {
        let basis = PauliString::basis();
        let mut entries = Vec::with_capacity(120);
        for (b, pb) in basis.iter().enumerate() {
            for (g, pg) in basis.iter().enumerate() {
                if pb.commutes_with(pg) {
                    continue;
                }
                let prod = *pb * *pg;
                let a = prod.basis_index().expect("anticommuting product is not the identity");
                let sign = match prod.phase.power() {
                    1 => 1,
                    3 => -1,
                    k => unreachable!("anticommuting product has phase i^{k}"),
                };
                entries.push((a as u8, b as u8, g as u8, sign));
            }
        }
        entries.sort_unstable();
        Self { entries }
    }

    /// Nonzero entries `(α, β, γ, T)`.
    pub fn entries(&self) -> &[(u8, u8, u8, i8)] {
        &self.entries
    }

    pub fn get(&self, alpha: usize, beta: usize, gamma: usize) -> i8 {
        self.entries
            .iter()
            .find(|e| (e.0 as usize, e.1 as usize, e.2 as usize) == (alpha, beta, gamma))
            .map_or(0, |e| e.3)
    }

    /// Time derivative of the coefficients under `H`.
    pub fn derivative<T: Scalar>(&self, h: &Hamiltonian<T>, c: &[T; 15]) -> [T; 15] {
        let mut out = [T::zero(); 15];
        for &(a, b, g, s) in &self.entries {
            let hb = h.coeffs[b as usize];
            if hb == T::zero() {
                continue;
            }
            let term = hb * c[g as usize];
            if s > 0 {
                out[a as usize] += term;
            } else {
                out[a as usize] -= term;
            }
        }
        // `coeffs` multiply P directly, i.e. h_β = 2·coeffs_β.
        for v in out.iter_mut() {
            *v *= lit(2.0);
        }
        out
    }
}

impl Default for StructureConstants {
    fn default() -> Self {
        Self::new()
    }
}

/// `ρ = ¼(1 + Σ c_α P_α)` over the canonical Pauli basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityState<T> {
    pub c: [T; 15],
}

impl<T: Scalar> DensityState<T> {
    pub fn maximally_mixed() -> Self {
        Self { c: [T::zero(); 15] }
    }

    /// Computational basis state `|k⟩`, `k` in `0..4` (`|q1 q2⟩`).
    pub fn basis(k: usize) -> Self {
        let z1 = if k & 2 == 0 { T::one() } else { -T::one() };
        let z2 = if k & 1 == 0 { T::one() } else { -T::one() };
        Self::product([T::zero(), T::zero(), z1], [T::zero(), T::zero(), z2])
    }

    /// `ρ₁ ⊗ ρ₂` from two Bloch vectors.
    pub fn product(b1: [T; 3], b2: [T; 3]) -> Self {
        let mut c = [T::zero(); 15];
        c[..3].copy_from_slice(&b1);
        c[3..6].copy_from_slice(&b2);
        for i in 0..3 {
            for j in 0..3 {
                c[6 + 3 * i + j] = b1[i] * b2[j];
            }
        }
        Self { c }
    }

    pub fn from_ket(psi: &Ket<T>) -> Self {
        let c = std::array::from_fn(|a| {
            let p = PauliString::from_basis_index(a).matrix::<T>();
            (psi.adjoint() * p * psi)[(0, 0)].re
        });
        Self { c }
    }

    /// Coefficients `Tr(ρ P_α)` of a Hermitian matrix.
    pub fn from_matrix(rho: &Mat4<T>) -> Self {
        let c = std::array::from_fn(|a| {
            let p = PauliString::from_basis_index(a).matrix::<T>();
            (rho * p).trace().re
        });
        Self { c }
    }

    pub fn matrix(&self) -> Mat4<T> {
        let mut m = Mat4::identity();
        for (a, &ca) in self.c.iter().enumerate() {
            if ca != T::zero() {
                m += PauliString::from_basis_index(a).matrix::<T>() * re(ca);
            }
        }
        m * re(lit(0.25))
    }

    pub fn coefficient(&self, p: PauliString) -> T {
        p.basis_index().map_or(T::one(), |i| self.c[i])
    }

    /// `Tr ρ² = (1 + Σ c²)/4`.
    pub fn purity(&self) -> T {
        (T::one() + self.c.iter().fold(T::zero(), |acc, &x| acc + x * x)) * lit(0.25)
    }

    pub fn min_eigenvalue(&self) -> T {
        hermitian_eigen(&self.matrix()).0[0]
    }

    pub fn eigenvalues(&self) -> [T; 4] {
        let v = hermitian_eigen(&self.matrix()).0;
        [v[0], v[1], v[2], v[3]]
    }

    pub fn validate(&self) -> Result<(), IntegratorError> {
        if self.c.iter().any(|x| !x.is_finite()) {
            return Err(IntegratorError::InvalidState("non-finite coefficient".into()));
        }
        let tol: T = lit(1e-9);
        if self.purity() > T::one() + tol {
            return Err(IntegratorError::InvalidState(format!(
                "purity {} exceeds 1",
                to_f64(self.purity())
            )));
        }
        let min = self.min_eigenvalue();
        if min < -tol {
            return Err(IntegratorError::InvalidState(format!(
                "negative eigenvalue {}",
                to_f64(min)
            )));
        }
        Ok(())
    }

    pub fn trace_distance(&self, other: &Self) -> T {
        trace_distance(&self.matrix(), &other.matrix())
    }

    /// `U ρ U†`.
    pub fn transformed(&self, u: &Mat4<T>) -> Self {
        Self::from_matrix(&(u * self.matrix() * u.adjoint()))
    }

    /// `V(t) ρ V(t)†` with `V(t) = exp(it(ω₁ᶻσ₁ᶻ + ω₂ᶻσ₂ᶻ)/2)`.
    pub fn to_rotating_frame(&self, p: &SystemParams<T>, t: T) -> Self {
        self.transformed(&frame_operator(p, t))
    }
}

/// `V(t) = exp(it(ω₁ᶻσ₁ᶻ + ω₂ᶻσ₂ᶻ)/2)`, the lab-to-rotating map.
pub fn frame_operator<T: Scalar>(p: &SystemParams<T>, t: T) -> Mat4<T> {
    let half: T = lit(0.5);
    let z = |w: T| Mat2::from_diagonal(&nalgebra::Vector2::new(cis(w * t * half), cis(-w * t * half)));
    kron(&z(p.w1z()), &z(p.w2z()))
}

/// `exp(iθσᶻ_q/2)` on one qubit.
pub fn z_rotation<T: Scalar>(q: Qubit, theta: T) -> Mat4<T> {
    let half: T = lit(0.5);
    let z = Mat2::from_diagonal(&nalgebra::Vector2::new(cis(theta * half), cis(-theta * half)));
    match q {
        Qubit::One => kron(&z, &Mat2::identity()),
        Qubit::Two => kron(&Mat2::identity(), &z),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "frame", rename_all = "lowercase")]
pub enum Frame {
    Lab,
    /// Frame rotating at the two Larmor frequencies.
    Rotating { w1z: f64, w2z: f64 },
}

impl Frame {
    pub fn label(&self) -> &'static str {
        match self {
            Frame::Lab => "lab",
            Frame::Rotating { .. } => "rotating",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub frame: Frame,
    pub times: Vec<T>,
    pub states: Vec<DensityState<T>>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn final_state(&self) -> &DensityState<T> {
        self.states.last().expect("trajectory holds at least the initial state")
    }

    pub fn final_time(&self) -> T {
        *self.times.last().expect("trajectory holds at least the initial time")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (T, &DensityState<T>)> {
        self.times.iter().copied().zip(self.states.iter())
    }

    pub fn to_rotating_frame(&self, p: &SystemParams<T>) -> Result<Self, IntegratorError> {
        if self.frame != Frame::Lab {
            return Err(IntegratorError::WrongFrame);
        }
        Ok(Self {
            frame: Frame::Rotating {
                w1z: to_f64(p.w1z()),
                w2z: to_f64(p.w2z()),
            },
            times: self.times.clone(),
            states: self.iter().map(|(t, s)| s.to_rotating_frame(p, t)).collect(),
        })
    }

    /// CSV with header `t,frame,cx1,cy1,cz1,cx2,cy2,cz2` and, when `full`,
    /// the nine correlation coefficients `c_xx … c_zz`.
    pub fn write_csv<W: Write>(&self, mut w: W, full: bool) -> std::io::Result<()> {
        write!(w, "t,frame,cx1,cy1,cz1,cx2,cy2,cz2")?;
        if full {
            for a in ["x", "y", "z"] {
                for b in ["x", "y", "z"] {
                    write!(w, ",c_{a}{b}")?;
                }
            }
        }
        writeln!(w)?;
        let cols = if full { 15 } else { 6 };
        for (t, s) in self.iter() {
            write!(w, "{},{}", format_g(to_f64(t)), self.frame.label())?;
            for c in &s.c[..cols] {
                write!(w, ",{}", format_g(to_f64(*c)))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Formats like C's `%.12g`.
pub fn format_g(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-4..DIGITS).contains(&exp) {
        let m = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        trim_fraction(&format!("{:.*}", (DIGITS - 1 - exp) as usize, x)).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Fixed-step settings for [`evolve`] and [`propagator_of_sequence`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPolicy {
    /// Steps per period of the fastest carrier.
    pub steps_per_period: usize,
    /// Uniform samples per `t_o^sync`, on top of the segment boundaries.
    /// Zero keeps only the boundaries.
    pub samples_per_sync: usize,
    /// Step-halving error check on every step.
    pub richardson: bool,
}

impl Default for StepPolicy {
    fn default() -> Self {
        Self {
            steps_per_period: 200,
            samples_per_sync: 8,
            richardson: false,
        }
    }
}

impl StepPolicy {
    pub fn with_steps(steps_per_period: usize) -> Self {
        Self {
            steps_per_period,
            ..Self::default()
        }
    }
}

/// Richardson estimate threshold, per unit time.
pub const RICHARDSON_LIMIT: f64 = 1e-8;

/// Settings for [`evolve_oracle`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OraclePolicy {
    /// Starting substeps per period of the fastest carrier.
    pub substeps: usize,
    pub max_doublings: usize,
    /// Convergence threshold on the trace distance between successive runs.
    pub tol: f64,
    pub samples_per_sync: usize,
}

impl Default for OraclePolicy {
    fn default() -> Self {
        Self {
            substeps: 16,
            max_doublings: 7,
            tol: 1e-9,
            samples_per_sync: 8,
        }
    }
}

/// Sample times and step boundaries: `0`, the end time, every breakpoint of
/// the sequence and a uniform grid of `samples_per_sync` per `t_o^sync`.
pub fn knots<T: Scalar>(p: &SystemParams<T>, seq: &PulseSequence<T>, samples_per_sync: usize) -> Vec<T> {
    let end = seq.duration();
    let mut out = vec![T::zero(), end];
    out.extend(seq.breakpoints().into_iter().filter(|t| *t > T::zero() && *t < end));
    if samples_per_sync > 0 {
        let dt = p.t0_sync() / lit(samples_per_sync as f64);
        let mut k = 1usize;
        loop {
            let t = dt * lit(k as f64);
            if t >= end {
                break;
            }
            out.push(t);
            k += 1;
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let eps = lit::<T>(1e-12) * end.max(T::one());
    out.dedup_by(|b, a| (*b - *a).abs() <= eps);
    if let Some(last) = out.last_mut() {
        *last = end;
    }
    out
}

/// Walks the knot schedule, calling `step(snapshot, t, h, state)` for each
/// substep of length at most `period/steps_per_period` and `sample` at every
/// knot.
fn march<T, S, E>(
    p: &SystemParams<T>,
    seq: &PulseSequence<T>,
    knots: &[T],
    steps_per_period: usize,
    state: &mut S,
    mut step: impl FnMut(&DriveSnapshot<T>, T, T, &mut S) -> Result<(), E>,
    mut sample: impl FnMut(T, &S),
) -> Result<(), E>
where
    T: Scalar,
{
    let h_max = p.smallest_carrier_period() / lit(steps_per_period.max(1) as f64);
    sample(knots[0], state);
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let span = b - a;
        if span > T::zero() {
            let n = to_f64(span / h_max).ceil().max(1.0) as usize;
            let h = span / lit(n as f64);
            let snap = seq.snapshot((a + b) * lit(0.5));
            for k in 0..n {
                step(&snap, a + h * lit(k as f64), h, state)?;
            }
        }
        sample(b, state);
    }
    Ok(())
}

fn rk4_step<T: Scalar>(
    sc: &StructureConstants,
    p: &SystemParams<T>,
    snap: &DriveSnapshot<T>,
    t: T,
    h: T,
    c: &[T; 15],
) -> [T; 15] {
    let half: T = lit(0.5);
    let f = |tt: T, y: &[T; 15]| sc.derivative(&snap.hamiltonian(p, tt), y);
    let axpy = |y: &[T; 15], k: &[T; 15], s: T| -> [T; 15] { std::array::from_fn(|i| y[i] + k[i] * s) };
    let k1 = f(t, c);
    let k2 = f(t + h * half, &axpy(c, &k1, h * half));
    let k3 = f(t + h * half, &axpy(c, &k2, h * half));
    let k4 = f(t + h, &axpy(c, &k3, h));
    let sixth = h / lit(6.0);
    std::array::from_fn(|i| c[i] + (k1[i] + (k2[i] + k3[i]) * lit(2.0) + k4[i]) * sixth)
}

/// RK4 integration of the Pauli-basis von Neumann equation, lab frame.
pub fn evolve<T: Scalar>(
    p: &SystemParams<T>,
    seq: &PulseSequence<T>,
    rho0: &DensityState<T>,
    policy: StepPolicy,
) -> Result<Trajectory<T>, IntegratorError> {
    rho0.validate()?;
    let sc = StructureConstants::new();
    let ks = knots(p, seq, policy.samples_per_sync);
    let mut traj = Trajectory {
        frame: Frame::Lab,
        times: Vec::with_capacity(ks.len()),
        states: Vec::with_capacity(ks.len()),
    };
    let mut c = rho0.c;
    let limit: T = lit(RICHARDSON_LIMIT);
    march(
        p,
        seq,
        &ks,
        policy.steps_per_period,
        &mut c,
        |snap, t, h, c| {
            let full = rk4_step(&sc, p, snap, t, h, c);
            if policy.richardson {
                let half = h * lit(0.5);
                let mid = rk4_step(&sc, p, snap, t, half, c);
                let fine = rk4_step(&sc, p, snap, t + half, half, &mid);
                let diff = full
                    .iter()
                    .zip(fine.iter())
                    .fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).abs()));
                let estimate = diff * lit(16.0 / 15.0) / h;
                if estimate > limit {
                    return Err(IntegratorError::StepTooCoarse {
                        estimate: to_f64(estimate),
                        t: to_f64(t),
                        limit: RICHARDSON_LIMIT,
                    });
                }
                *c = fine;
            } else {
                *c = full;
            }
            Ok(())
        },
        |t, c| {
            traj.times.push(t);
            traj.states.push(DensityState { c: *c });
        },
    )?;
    Ok(traj)
}

/// Gauss-node weights of the fourth-order commutator-free exponential
/// splitting `U = exp(−ih(a₂H₁ + a₁H₂))·exp(−ih(a₁H₁ + a₂H₂))`.
fn cf4_nodes<T: Scalar>() -> (T, T, T, T) {
    let r3: T = lit(3.0f64.sqrt());
    let c1 = lit::<T>(0.5) - r3 / lit(6.0);
    let c2 = lit::<T>(0.5) + r3 / lit(6.0);
    let a1 = lit::<T>(0.25) + r3 / lit(6.0);
    let a2 = lit::<T>(0.25) - r3 / lit(6.0);
    (c1, c2, a1, a2)
}

fn cf4_step<T: Scalar>(p: &SystemParams<T>, snap: &DriveSnapshot<T>, t: T, h: T) -> Mat4<T> {
    let (c1, c2, a1, a2) = cf4_nodes::<T>();
    let h1 = snap.hamiltonian(p, t + c1 * h).matrix();
    let h2 = snap.hamiltonian(p, t + c2 * h).matrix();
    let first = expm_hermitian(&(h1 * re(a1) + h2 * re(a2)), h);
    let second = expm_hermitian(&(h1 * re(a2) + h2 * re(a1)), h);
    second * first
}

fn oracle_run<T: Scalar>(
    p: &SystemParams<T>,
    seq: &PulseSequence<T>,
    ks: &[T],
    rho0: &Mat4<T>,
    substeps: usize,
) -> Vec<Mat4<T>> {
    let mut rho = *rho0;
    let mut out = Vec::with_capacity(ks.len());
    let _ = march::<T, Mat4<T>, std::convert::Infallible>(
        p,
        seq,
        ks,
        substeps,
        &mut rho,
        |snap, t, h, rho| {
            let u = cf4_step(p, snap, t, h);
            *rho = u * *rho * u.adjoint();
            Ok(())
        },
        |_, rho| out.push(*rho),
    );
    out
}

/// Independent evolution by exact matrix exponentials, refined by doubling
/// the substep count until successive runs agree to `policy.tol` in trace
/// distance at every sample.
pub fn evolve_oracle<T: Scalar>(
    p: &SystemParams<T>,
    seq: &PulseSequence<T>,
    rho0: &DensityState<T>,
    policy: OraclePolicy,
) -> Result<Trajectory<T>, IntegratorError> {
    rho0.validate()?;
    let ks = knots(p, seq, policy.samples_per_sync);
    let m0 = rho0.matrix();
    let mut substeps = policy.substeps.max(1);
    let mut prev = oracle_run(p, seq, &ks, &m0, substeps);
    let mut distance = f64::INFINITY;
    for _ in 0..policy.max_doublings {
        substeps *= 2;
        let next = oracle_run(p, seq, &ks, &m0, substeps);
        distance = prev
            .iter()
            .zip(next.iter())
            .map(|(a, b)| to_f64(trace_distance(a, b)))
            .fold(0.0, f64::max);
        prev = next;
        if distance < policy.tol {
            return Ok(Trajectory {
                frame: Frame::Lab,
                times: ks,
                states: prev.iter().map(DensityState::from_matrix).collect(),
            });
        }
    }
    Err(IntegratorError::NoConvergence { substeps, distance })
}

/// Lab-frame unitary from `t = 0` to the end of the sequence, built from
/// exact exponential substeps (`policy.steps_per_period` per carrier period).
pub fn propagator_of_sequence<T: Scalar>(p: &SystemParams<T>, seq: &PulseSequence<T>, policy: StepPolicy) -> Mat4<T> {
    let ks = knots(p, seq, 0);
    let mut u = Mat4::identity();
    let _ = march::<T, Mat4<T>, std::convert::Infallible>(
        p,
        seq,
        &ks,
        policy.steps_per_period,
        &mut u,
        |snap, t, h, u| {
            *u = orthonormalize(&(cf4_step(p, snap, t, h) * *u));
            Ok(())
        },
        |_, _| {},
    );
    u
}

/// Propagator in the frame rotating at the Larmor frequencies:
/// `V(T)·U_lab`, with `V(0) = 1`.
pub fn rotating_propagator<T: Scalar>(p: &SystemParams<T>, seq: &PulseSequence<T>, policy: StepPolicy) -> Mat4<T> {
    let u = propagator_of_sequence(p, seq, policy);
    frame_operator(p, seq.duration()) * u
}

/// Rotating-frame propagator with the virtual-Z ledger applied:
/// `Z(θ₁,θ₂)·V(T)·U_lab`. This is the operation the sequence implements
/// on the logical qubits.
pub fn logical_propagator<T: Scalar>(p: &SystemParams<T>, seq: &PulseSequence<T>, policy: StepPolicy) -> Mat4<T> {
    ledger_rotation(seq) * rotating_propagator(p, seq, policy)
}

/// `exp(iθ₁σ₁ᶻ/2)·exp(iθ₂σ₂ᶻ/2)` for the total ledger angles.
pub fn ledger_rotation<T: Scalar>(seq: &PulseSequence<T>) -> Mat4<T> {
    z_rotation(Qubit::One, seq.total_frame_angle(Qubit::One)) * z_rotation(Qubit::Two, seq.total_frame_angle(Qubit::Two))
}

/// Evolves a pure state through the logical propagator; convenience for
/// gate-level checks.
pub fn apply_logical<T: Scalar>(
    p: &SystemParams<T>,
    seq: &PulseSequence<T>,
    psi: &Ket<T>,
    policy: StepPolicy,
) -> DensityState<T> {
    let out = logical_propagator(p, seq, policy) * psi;
    DensityState::from_ket(&out)
}
