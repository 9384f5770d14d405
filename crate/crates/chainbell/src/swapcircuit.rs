//! Swap observables and the local isometry that transfers the self-tested
//! qubit pair onto a fresh two-qubit ancilla.
//!
//! The isometry is evaluated through its closed-form four-term expansion
//! rather than a gate-level circuit; the output vector is identical. Parity
//! matters: odd n uses Z-projectors with X-controls and junk (1+Z_A)/√2·|ψ⟩,
//! even n uses X-projectors with Z-controls and junk (1+X_A)/√2·|ψ⟩. With
//! that role swap the ancilla Pauli dictionary swaps too: odd n maps the
//! swap-X operators to σ_x on the ancilla and swap-Z to σ_z, even n the
//! other way around.

use crate::certify::script_a;
use crate::qmath::{cr, CMat, CVec};
use crate::scenario::{expval, on_alice, on_bob, phi_plus, Party, Realization};
use crate::{tol, Error, Result};

/// The four operators driving the swap isometry.
#[derive(Clone, Debug)]
pub struct SwapObservables {
    pub z_a: CMat,
    pub x_a: CMat,
    pub z_b: CMat,
    pub x_b: CMat,
}

/// Residuals of the compatibility relations the swap observables satisfy on
/// the state at the optimum.
#[derive(Clone, Debug, serde::Serialize)]
pub struct SwapRelationReport {
    /// ‖(Z_A - Z_B)|ψ⟩‖.
    pub z_mismatch: f64,
    /// ‖(X_A - X_B)|ψ⟩‖.
    pub x_mismatch: f64,
    /// ‖{Z_A, X_A}|ψ⟩‖.
    pub alice_anticomm: f64,
    /// ‖{Z_B, X_B}|ψ⟩‖.
    pub bob_anticomm: f64,
}

/// What gets routed through the isometry alongside the state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Insertion {
    /// Plain state test.
    Identity,
    /// A swap observable X_m extended to the joint space.
    SwapX(Party),
    /// A swap observable Z_m extended to the joint space.
    SwapZ(Party),
    /// A_i ⊗ 1, 1-based setting index.
    Alice(usize),
    /// 1 ⊗ B_j.
    Bob(usize),
    /// A_i ⊗ B_j.
    AliceBob(usize, usize),
}

/// Output of the isometry on `inserted · |ψ⟩ ⊗ |00⟩`.
#[derive(Clone, Debug)]
pub struct SwapOutput {
    /// Joint vector on H_A ⊗ H_B ⊗ C² ⊗ C² (system major, ancilla minor).
    pub joint: CVec,
    /// Reduced density matrix of the two ancilla qubits (unnormalized;
    /// its trace is ‖joint‖²).
    pub ancilla_state: CMat,
    /// Dominant system-side factor from the Schmidt split of `joint`,
    /// scaled by its singular value.
    pub junk_candidate: CVec,
    /// Tail singular mass ‖joint - (dominant rank-1 term)‖₂.
    pub factorization_residual: f64,
    /// ⟨target|ρ̂_anc|target⟩ against the predicted ancilla target, with the
    /// reduced state normalized to unit trace.
    pub ancilla_fidelity: f64,
}

/// Builds the parity-appropriate swap observables from a realization.
pub fn swap_observables(r: &Realization) -> Result<SwapObservables> {
    let n = r.n();
    if n % 2 == 1 {
        let mid = (n + 1) / 2;
        let z_a = script_a(r, mid)?;
        let z_b = r.bob[mid - 1].matrix().clone();
        let half = n / 2;
        let mut x_a = CMat::zeros(r.dim(), r.dim());
        let mut x_b = CMat::zeros(r.dim(), r.dim());
        for i in 1..=half {
            let ai = script_a(r, i)?;
            let aj = script_a(r, n + 1 - i)?;
            x_a = x_a.add(&normalized_pair(&ai, &aj, r, true, Party::Alice)?);
            let bi = r.bob[i - 1].matrix();
            let bj = r.bob[n - i].matrix();
            x_b = x_b.add(&normalized_pair(bi, bj, r, true, Party::Bob)?);
        }
        let scale = 1.0 / half as f64;
        Ok(SwapObservables {
            z_a,
            x_a: x_a.scale_re(scale),
            z_b,
            x_b: x_b.scale_re(scale),
        })
    } else {
        let half = n / 2;
        let mut z_a = CMat::zeros(r.dim(), r.dim());
        let mut x_a = CMat::zeros(r.dim(), r.dim());
        let mut z_b = CMat::zeros(r.dim(), r.dim());
        let mut x_b = CMat::zeros(r.dim(), r.dim());
        for i in 1..=half {
            let ai = script_a(r, i)?;
            let aj = script_a(r, n + 1 - i)?;
            z_a = z_a.add(&normalized_pair(&ai, &aj, r, false, Party::Alice)?);
            x_a = x_a.add(&normalized_pair(&ai, &aj, r, true, Party::Alice)?);
            let bi = r.bob[i - 1].matrix();
            let bj = r.bob[n - i].matrix();
            z_b = z_b.add(&normalized_pair(bi, bj, r, false, Party::Bob)?);
            x_b = x_b.add(&normalized_pair(bi, bj, r, true, Party::Bob)?);
        }
        let scale = 2.0 / n as f64;
        Ok(SwapObservables {
            z_a: z_a.scale_re(scale),
            x_a: x_a.scale_re(scale),
            z_b: z_b.scale_re(scale),
            x_b: x_b.scale_re(scale),
        })
    }
}

/// (M ∓ N)/√(2 ∓ ⟨{M, N}⟩) with the anticommutator expectation taken on the
/// party the pair belongs to; `minus` picks the sign pair.
fn normalized_pair(
    m: &CMat,
    other: &CMat,
    r: &Realization,
    minus: bool,
    party: Party,
) -> Result<CMat> {
    let anti = m.anticommutator(other)?;
    let lifted = match party {
        Party::Alice => on_alice(&anti),
        Party::Bob => on_bob(&anti),
    };
    let e = expval(&lifted, &r.state);
    let denom_sq = if minus { 2.0 - e } else { 2.0 + e };
    if denom_sq <= tol::NORMALIZER_FLOOR * tol::NORMALIZER_FLOOR {
        return Err(Error::DegenerateNorm(format!(
            "swap normalizer 2 {} ⟨{{·,·}}⟩ = {denom_sq:.3e} is degenerate",
            if minus { "-" } else { "+" }
        )));
    }
    let combined = if minus { m.sub(other) } else { m.add(other) };
    Ok(combined.scale_re(1.0 / denom_sq.sqrt()))
}

/// Residuals of the swap compatibility relations on the state.
pub fn check_swap_relations(r: &Realization, s: &SwapObservables) -> Result<SwapRelationReport> {
    let psi = &r.state;
    let z_mismatch = on_alice(&s.z_a).sub(&on_bob(&s.z_b)).apply(psi)?.norm();
    let x_mismatch = on_alice(&s.x_a).sub(&on_bob(&s.x_b)).apply(psi)?.norm();
    let alice_anticomm = on_alice(&s.z_a.anticommutator(&s.x_a)?).apply(psi)?.norm();
    let bob_anticomm = on_bob(&s.z_b.anticommutator(&s.x_b)?).apply(psi)?.norm();
    Ok(SwapRelationReport {
        z_mismatch,
        x_mismatch,
        alice_anticomm,
        bob_anticomm,
    })
}

impl Insertion {
    /// The joint-space matrix this insertion denotes.
    pub fn matrix(&self, r: &Realization, s: &SwapObservables) -> Result<CMat> {
        let n = r.n();
        let check = |i: usize| -> Result<()> {
            if i < 1 || i > n {
                return Err(Error::IndexOutOfRange(format!(
                    "setting {i} outside 1..={n}"
                )));
            }
            Ok(())
        };
        Ok(match self {
            Insertion::Identity => CMat::identity(r.dim() * r.dim()),
            Insertion::SwapX(Party::Alice) => on_alice(&s.x_a),
            Insertion::SwapX(Party::Bob) => on_bob(&s.x_b),
            Insertion::SwapZ(Party::Alice) => on_alice(&s.z_a),
            Insertion::SwapZ(Party::Bob) => on_bob(&s.z_b),
            Insertion::Alice(i) => {
                check(*i)?;
                on_alice(r.alice[i - 1].matrix())
            }
            Insertion::Bob(j) => {
                check(*j)?;
                on_bob(r.bob[j - 1].matrix())
            }
            Insertion::AliceBob(i, j) => {
                check(*i)?;
                check(*j)?;
                r.alice[i - 1].matrix().kron(r.bob[j - 1].matrix())
            }
        })
    }

    /// Predicted ancilla output, built from the single-qubit images of the
    /// swap observables. Parity swaps the Pauli dictionary.
    pub fn ancilla_target(&self, r: &Realization) -> CVec {
        let odd = r.n() % 2 == 1;
        let (img_z, img_x) = if odd {
            (CMat::pauli_z(), CMat::pauli_x())
        } else {
            (CMat::pauli_x(), CMat::pauli_z())
        };
        let primed_alice = |i: usize| {
            let theta = (i as f64 - 1.0) * std::f64::consts::PI / r.n() as f64;
            img_z.scale_re(theta.sin()).add(&img_x.scale_re(theta.cos()))
        };
        let primed_bob = |j: usize| {
            let phi = (2.0 * j as f64 - 1.0) * std::f64::consts::PI / (2.0 * r.n() as f64);
            img_z.scale_re(phi.sin()).add(&img_x.scale_re(phi.cos()))
        };
        let id = CMat::identity(2);
        let op = match self {
            Insertion::Identity => id.kron(&id),
            Insertion::SwapX(Party::Alice) => img_x.kron(&id),
            Insertion::SwapX(Party::Bob) => id.kron(&img_x),
            Insertion::SwapZ(Party::Alice) => img_z.kron(&id),
            Insertion::SwapZ(Party::Bob) => id.kron(&img_z),
            Insertion::Alice(i) => primed_alice(*i).kron(&id),
            Insertion::Bob(j) => id.kron(&primed_bob(*j)),
            Insertion::AliceBob(i, j) => primed_alice(*i).kron(&primed_bob(*j)),
        };
        op.apply(&phi_plus()).unwrap()
    }
}

/// Raw four-term isometry expansion on an arbitrary input vector:
/// (1/4)·Σ_ab controls^{a,b} (1 + (-1)^a P_A)(1 + (-1)^b P_B)·v ⊗ |ab⟩.
/// Odd parity projects with Z and controls with X; even parity the reverse.
/// Exposed separately so the robustness module can run it with noisy swap
/// observables.
pub fn isometry_output(s: &SwapObservables, input: &CVec, odd: bool) -> Result<CVec> {
    let dim_sq = input.dim();
    let id = CMat::identity(dim_sq);
    let (proj_a, proj_b, ctrl_a, ctrl_b) = if odd {
        (
            on_alice(&s.z_a),
            on_bob(&s.z_b),
            on_alice(&s.x_a),
            on_bob(&s.x_b),
        )
    } else {
        (
            on_alice(&s.x_a),
            on_bob(&s.x_b),
            on_alice(&s.z_a),
            on_bob(&s.z_b),
        )
    };

    let mut joint = CVec::zeros(dim_sq * 4);
    for a in 0..2usize {
        for b in 0..2usize {
            let sign_a = if a == 0 { 1.0 } else { -1.0 };
            let sign_b = if b == 0 { 1.0 } else { -1.0 };
            let mut term = id.add(&proj_b.scale_re(sign_b)).apply(input)?;
            term = id.add(&proj_a.scale_re(sign_a)).apply(&term)?;
            if b == 1 {
                term = ctrl_b.apply(&term)?;
            }
            if a == 1 {
                term = ctrl_a.apply(&term)?;
            }
            let ancilla = CVec::basis(4, a * 2 + b);
            joint = joint.add(&term.tensor(&ancilla).scale(cr(0.25)));
        }
    }
    Ok(joint)
}

/// Runs the isometry on `inserted · |ψ⟩ ⊗ |00⟩` and reports the ancilla
/// extraction against the predicted target.
pub fn apply_isometry(
    r: &Realization,
    s: &SwapObservables,
    inserted: &Insertion,
) -> Result<SwapOutput> {
    let matrix = inserted.matrix(r, s)?;
    let input = matrix.apply(&r.state)?;
    let joint = isometry_output(s, &input, r.n() % 2 == 1)?;
    let target = inserted.ancilla_target(r);
    analyze_joint(r.dim() * r.dim(), joint, &target)
}

/// Schmidt-splits the joint vector across system|ancilla and scores the
/// ancilla against the target.
fn analyze_joint(dim_sq: usize, joint: CVec, target: &CVec) -> Result<SwapOutput> {
    // Reshape to a (dim², 4) matrix M with M[s][t] the amplitude of |s⟩|t⟩.
    let mut m = CMat::zeros(dim_sq, 4);
    for s_idx in 0..dim_sq {
        for t in 0..4 {
            m[(s_idx, t)] = joint[s_idx * 4 + t];
        }
    }
    // The Gram matrix M†M carries the right singular vectors and squared
    // singular values; the reduced ancilla density matrix is its entrywise
    // conjugate (ρ[t,t'] = Σ_s c_{s,t}·c̄_{s,t'}).
    let gram = m.adjoint().matmul(&m)?;
    let ancilla_state = gram.conj();
    let eig = gram.hermitian_eig()?;
    let v_top = eig.vector(0);
    let junk_candidate = m.apply(&v_top)?;
    // Tail singular mass via explicit rank-1 subtraction; summing the tail
    // eigenvalues of the Gram matrix instead would bottom out at √(machine
    // epsilon).
    let tail = m.sub(&junk_candidate.outer(&v_top)).frobenius_norm();

    let trace = ancilla_state.trace().re;
    let ancilla_fidelity = if trace > 1e-300 {
        let t_norm = target.normalized()?;
        (ancilla_state.expectation(&t_norm)?.re / trace).clamp(0.0, 1.0)
    } else {
        0.0
    };

    Ok(SwapOutput {
        joint,
        ancilla_state,
        junk_candidate,
        factorization_residual: tail,
        ancilla_fidelity,
    })
}
