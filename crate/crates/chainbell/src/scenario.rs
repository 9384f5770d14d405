//! The chained Bell scenario: reference two-qubit realization, Bell
//! operator, classical and quantum bounds, correlation evaluation.
//!
//! Settings are 1-based in the public API; storage is 0-based. The boundary
//! wrap A_{n+1} = -A_1 is applied where operators are combined, never stored
//! as an extra observable.

use num_complex::Complex64;
use rand::Rng;

use crate::qmath::{CMat, CVec};
use crate::{tol, Error, Result};

/// Which party an observable belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Party {
    Alice,
    Bob,
}

impl std::fmt::Display for Party {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Party::Alice => write!(f, "A"),
            Party::Bob => write!(f, "B"),
        }
    }
}

/// Number of settings per party and local Hilbert-space dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainScenario {
    pub n: usize,
    pub dim: usize,
}

impl ChainScenario {
    pub fn new(n: usize, dim: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 settings per party, got {n}"
            )));
        }
        if dim != 2 && dim != 4 {
            return Err(Error::Unsupported(format!(
                "local dimension {dim} not supported (use 2 or 4)"
            )));
        }
        Ok(Self { n, dim })
    }
}

/// A ±1-outcome observable: Hermitian and involutory.
#[derive(Clone, Debug)]
pub struct Observable {
    matrix: CMat,
    label: String,
}

impl Observable {
    /// Validates Hermiticity and involution before wrapping.
    pub fn dichotomic(matrix: CMat, party: Party, index: usize) -> Result<Self> {
        let dev = matrix.herm_deviation();
        if dev > tol::HERM_CONSTRUCTED {
            return Err(Error::NotHermitian {
                deviation: dev,
                tolerance: tol::HERM_CONSTRUCTED,
            });
        }
        let sq = matrix.matmul(&matrix)?;
        let inv_dev = sq.max_abs_diff(&CMat::identity(matrix.rows()));
        if inv_dev > tol::INVOLUTION {
            return Err(Error::InvalidArgument(format!(
                "observable {party}{index} is not involutory (|M² - 1| = {inv_dev:.3e})"
            )));
        }
        Ok(Self {
            matrix,
            label: format!("{party}{index}"),
        })
    }

    /// Wraps a Hermitian matrix without the involution check. Noisy
    /// observables are Hermitian but not dichotomic.
    pub fn hermitian(matrix: CMat, label: String) -> Result<Self> {
        let dev = matrix.herm_deviation();
        if dev > tol::HERM_INPUT {
            return Err(Error::NotHermitian {
                deviation: dev,
                tolerance: tol::HERM_INPUT,
            });
        }
        Ok(Self { matrix, label })
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Deviation from M² = 1.
    pub fn involution_deviation(&self) -> f64 {
        let sq = self.matrix.matmul(&self.matrix).unwrap();
        sq.max_abs_diff(&CMat::identity(self.matrix.rows()))
    }
}

/// A pure bipartite state together with n observables per party.
#[derive(Clone, Debug)]
pub struct Realization {
    pub scenario: ChainScenario,
    pub state: CVec,
    pub alice: Vec<Observable>,
    pub bob: Vec<Observable>,
}

impl Realization {
    pub fn new(
        scenario: ChainScenario,
        state: CVec,
        alice: Vec<Observable>,
        bob: Vec<Observable>,
    ) -> Result<Self> {
        if alice.len() != scenario.n || bob.len() != scenario.n {
            return Err(Error::DimensionMismatch(format!(
                "expected {} observables per party, got {} / {}",
                scenario.n,
                alice.len(),
                bob.len()
            )));
        }
        if state.dim() != scenario.dim * scenario.dim {
            return Err(Error::DimensionMismatch(format!(
                "state dimension {} does not match dim² = {}",
                state.dim(),
                scenario.dim * scenario.dim
            )));
        }
        if (state.norm() - 1.0).abs() > tol::VEC_NORM {
            return Err(Error::InvalidArgument(format!(
                "state is not normalized (‖ψ‖ = {})",
                state.norm()
            )));
        }
        for obs in alice.iter().chain(bob.iter()) {
            if obs.matrix().rows() != scenario.dim {
                return Err(Error::DimensionMismatch(format!(
                    "observable {} is {}x{}, expected {}x{}",
                    obs.label(),
                    obs.matrix().rows(),
                    obs.matrix().cols(),
                    scenario.dim,
                    scenario.dim
                )));
            }
        }
        Ok(Self {
            scenario,
            state,
            alice,
            bob,
        })
    }

    pub fn n(&self) -> usize {
        self.scenario.n
    }

    pub fn dim(&self) -> usize {
        self.scenario.dim
    }

    /// Alice's i-th observable, 1-based, with A_{n+1} = -A_1 and A_0 = -A_n.
    pub fn alice_wrapped(&self, i: isize) -> CMat {
        wrapped(&self.alice, self.n(), i)
    }

    /// Bob's i-th observable, 1-based, with B_0 = -B_n and B_{n+1} = -B_1.
    pub fn bob_wrapped(&self, i: isize) -> CMat {
        wrapped(&self.bob, self.n(), i)
    }

    /// Random realization: involutory observables from the sign function of
    /// Gaussian Hermitian matrices, plus a random normalized state.
    pub fn random<R: Rng>(n: usize, dim: usize, rng: &mut R) -> Result<Self> {
        let scenario = ChainScenario::new(n, dim)?;
        let alice = (1..=n)
            .map(|i| Observable::dichotomic(random_dichotomic_matrix(dim, rng), Party::Alice, i))
            .collect::<Result<Vec<_>>>()?;
        let bob = (1..=n)
            .map(|i| Observable::dichotomic(random_dichotomic_matrix(dim, rng), Party::Bob, i))
            .collect::<Result<Vec<_>>>()?;
        let state = random_state(dim * dim, rng);
        Self::new(scenario, state, alice, bob)
    }
}

fn wrapped(list: &[Observable], n: usize, i: isize) -> CMat {
    if i >= 1 && i <= n as isize {
        list[(i - 1) as usize].matrix().clone()
    } else if i == 0 {
        list[n - 1].matrix().scale_re(-1.0)
    } else if i == n as isize + 1 {
        list[0].matrix().scale_re(-1.0)
    } else {
        panic!("setting index {i} outside the wrap convention for n = {n}");
    }
}

/// Hermitian involutory matrix drawn as herm_sign of a Gaussian Hermitian.
pub fn random_dichotomic_matrix<R: Rng>(dim: usize, rng: &mut R) -> CMat {
    let mut m = CMat::zeros(dim, dim);
    for r in 0..dim {
        for c in 0..dim {
            m[(r, c)] = Complex64::new(standard_normal(rng), standard_normal(rng));
        }
    }
    m.hermitized().herm_sign().expect("hermitized input")
}

/// Random normalized complex vector with Gaussian entries.
pub fn random_state<R: Rng>(dim: usize, rng: &mut R) -> CVec {
    loop {
        let v = CVec::new(
            (0..dim)
                .map(|_| Complex64::new(standard_normal(rng), standard_normal(rng)))
                .collect(),
        );
        if let Ok(n) = v.normalized() {
            return n;
        }
    }
}

/// Box-Muller standard normal; keeps the RNG dependency to plain `Rng`.
fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// The maximally entangled two-qubit state (|00⟩ + |11⟩)/√2.
pub fn phi_plus() -> CVec {
    CVec::from_real(&[1.0, 0.0, 0.0, 1.0]).normalized().unwrap()
}

/// Bloch-plane observable sin(angle)·σ_x + cos(angle)·σ_z.
pub fn bloch_xz(angle: f64) -> CMat {
    CMat::pauli_x()
        .scale_re(angle.sin())
        .add(&CMat::pauli_z().scale_re(angle.cos()))
}

/// The two-qubit realization that attains the optimal violation:
/// A_i and B_i in the σ_x/σ_z plane at angles (i-1)π/n and (2i-1)π/(2n),
/// measured on |φ+⟩.
pub fn reference_realization(n: usize) -> Result<Realization> {
    let scenario = ChainScenario::new(n, 2)?;
    let nf = n as f64;
    let alice = (1..=n)
        .map(|i| {
            let theta = (i as f64 - 1.0) * std::f64::consts::PI / nf;
            Observable::dichotomic(bloch_xz(theta), Party::Alice, i)
        })
        .collect::<Result<Vec<_>>>()?;
    let bob = (1..=n)
        .map(|i| {
            let phi = (2.0 * i as f64 - 1.0) * std::f64::consts::PI / (2.0 * nf);
            Observable::dichotomic(bloch_xz(phi), Party::Bob, i)
        })
        .collect::<Result<Vec<_>>>()?;
    Realization::new(scenario, phi_plus(), alice, bob)
}

/// Σ_i (A_i + A_{i+1}) ⊗ B_i with the A_{n+1} = -A_1 wrap.
pub fn bell_operator(r: &Realization) -> CMat {
    bell_operator_from(
        &r.alice.iter().map(|o| o.matrix().clone()).collect::<Vec<_>>(),
        &r.bob.iter().map(|o| o.matrix().clone()).collect::<Vec<_>>(),
    )
}

/// Bell operator from raw observable matrices (see-saw works on these
/// before they are wrapped in a Realization).
pub fn bell_operator_from(alice: &[CMat], bob: &[CMat]) -> CMat {
    let n = alice.len();
    let dim = alice[0].rows();
    let mut op = CMat::zeros(dim * dim, dim * dim);
    for i in 0..n {
        let next = if i + 1 < n {
            alice[i + 1].clone()
        } else {
            alice[0].scale_re(-1.0)
        };
        op = op.add(&alice[i].add(&next).kron(&bob[i]));
    }
    op
}

/// ⟨ψ| C_n |ψ⟩, real part (the imaginary part is checked to vanish).
pub fn bell_value(r: &Realization) -> f64 {
    let e = bell_operator(r).expectation(&r.state).unwrap();
    debug_assert!(e.im.abs() <= 1e-12 * (1.0 + e.re.abs()));
    e.re
}

/// Local-realist bound 2n - 2.
pub fn classical_bound(n: usize) -> f64 {
    2.0 * n as f64 - 2.0
}

/// Optimal quantum value 2n·cos(π/2n).
pub fn quantum_optimum(n: usize) -> f64 {
    let nf = n as f64;
    2.0 * nf * (std::f64::consts::PI / (2.0 * nf)).cos()
}

/// ⟨ψ| A_i ⊗ B_j |ψ⟩ for 1-based setting indices.
pub fn correlation(r: &Realization, i: usize, j: usize) -> Result<f64> {
    let n = r.n();
    if i < 1 || i > n || j < 1 || j > n {
        return Err(Error::IndexOutOfRange(format!(
            "settings ({i}, {j}) outside 1..={n}"
        )));
    }
    let op = r.alice[i - 1].matrix().kron(r.bob[j - 1].matrix());
    let e = op.expectation(&r.state).unwrap();
    debug_assert!(e.im.abs() <= 1e-12);
    Ok(e.re)
}

/// Closed-form ⟨A_i ⊗ B_{i+x}⟩ at the optimum:
/// (cos(πx/n) + cos(π(x+1)/n)) / (2cos(π/2n)).
pub fn predicted_correlation(n: usize, x: isize) -> Result<f64> {
    if x.unsigned_abs() > n {
        return Err(Error::IndexOutOfRange(format!(
            "offset {x} outside -{n}..={n}"
        )));
    }
    let nf = n as f64;
    let xf = x as f64;
    let pi = std::f64::consts::PI;
    Ok(((pi * xf / nf).cos() + (pi * (xf + 1.0) / nf).cos()) / (2.0 * (pi / (2.0 * nf)).cos()))
}

/// Expectation helper used across modules: real part of ⟨ψ|M|ψ⟩.
pub(crate) fn expval(m: &CMat, state: &CVec) -> f64 {
    let e = m.expectation(state).unwrap();
    e.re
}

/// Builds I ⊗ m on a dim² space.
pub(crate) fn on_bob(m: &CMat) -> CMat {
    CMat::identity(m.rows()).kron(m)
}

/// Builds m ⊗ I on a dim² space.
pub(crate) fn on_alice(m: &CMat) -> CMat {
    m.kron(&CMat::identity(m.rows()))
}
