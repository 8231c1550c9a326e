//! Unitary recovery operations `U_alpha` with `U_alpha L_alpha |C = sqrt(lambda) 1 |C`.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::error::{domain, Error, Result};
use crate::jumpcodes::JumpCode;
use crate::lindblad::{lindblad_op, DecayModel};
use crate::qstate::{SparseOperator, StateVector};

const ORTHONORMAL_TOL: f64 = 1e-10;

/// A recovery unitary for a detected jump at one position.
#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryOp {
    pub alpha: usize,
    pub unitary: SparseOperator,
    pub code_label: String,
}

/// Result of [`verify_recovery`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecoveryCheck {
    /// `max_i ||(U L_alpha / sqrt(lambda) - 1) |c_i>||`.
    pub residual: f64,
    /// `||U^dagger U - 1||_max`.
    pub unitarity_defect: f64,
}

fn jump_weight(code: &JumpCode, l: &SparseOperator) -> Result<f64> {
    Ok(l.apply(code.codeword(0))?.norm_sqr())
}

/// Builds `U` as the involution exchanging `|c_i>` and `|d_i> = L_alpha |c_i> / sqrt(lambda)`
/// and acting as the identity on the orthogonal complement of both spans.
pub fn synthesize_recovery(
    code: &JumpCode,
    alpha: usize,
    model: &DecayModel,
) -> Result<RecoveryOp> {
    let n = code.n_qubits();
    if model.n_qubits() != n {
        return domain(format!(
            "decay model has {} qubits, code has {n}",
            model.n_qubits()
        ));
    }
    let l = lindblad_op(model, alpha)?;
    let lambda = jump_weight(code, &l)?;
    if lambda <= 1e-14 {
        return Err(Error::Condition(format!(
            "lambda({{{alpha}}}) = {lambda:e}: a jump at {alpha} never affects the code"
        )));
    }
    let scale = C64::new(1.0 / lambda.sqrt(), 0.0);
    let jumped: Vec<StateVector> = code
        .codewords()
        .iter()
        .map(|c| l.apply(c).map(|v| &v * scale))
        .collect::<Result<_>>()?;
    for i in 0..jumped.len() {
        for j in 0..jumped.len() {
            let g = jumped[i].inner(&jumped[j])?;
            let expected = if i == j { 1.0 } else { 0.0 };
            if (g - C64::new(expected, 0.0)).norm() > ORTHONORMAL_TOL {
                return Err(Error::Condition(format!(
                    "jumped code words {i} and {j} at position {alpha} are not orthonormal (<d_i|d_j> = {g}): the code does not correct this jump"
                )));
            }
        }
        for c in code.codewords() {
            let g = c.inner(&jumped[i])?;
            if g.norm() > ORTHONORMAL_TOL {
                return Err(Error::Condition(format!(
                    "jumped code word {i} overlaps the code space (<c|d_{i}> = {g})"
                )));
            }
        }
    }

    // U = 1 - sum_i (|c_i><c_i| + |d_i><d_i|) + sum_i (|c_i><d_i| + |d_i><c_i|)
    let mut entries: BTreeMap<(usize, usize), C64> = (0..code.codewords()[0].dim())
        .map(|r| ((r, r), C64::new(1.0, 0.0)))
        .collect();
    let mut add_outer = |ket: &StateVector, bra: &StateVector, sign: f64| {
        for (k, a) in ket.support() {
            for (b, z) in bra.support() {
                *entries.entry((k.index(), b.index())).or_default() += a * z.conj() * sign;
            }
        }
    };
    for (c, d) in code.codewords().iter().zip(&jumped) {
        add_outer(c, c, -1.0);
        add_outer(d, d, -1.0);
        add_outer(c, d, 1.0);
        add_outer(d, c, 1.0);
    }
    let unitary = SparseOperator::from_entries(
        n,
        entries
            .into_iter()
            .filter(|(_, v)| v.norm() > 1e-15)
            .map(|((r, c), v)| (r, c, v)),
    )?;
    Ok(RecoveryOp {
        alpha,
        unitary,
        code_label: code.label().to_string(),
    })
}

/// `max_i ||(U L_beta / sqrt(lambda_beta) - 1) |c_i>||`: how well `rec` undoes a jump at `beta`.
pub fn residual_after_jump(
    rec: &RecoveryOp,
    code: &JumpCode,
    model: &DecayModel,
    beta: usize,
) -> Result<f64> {
    let l = lindblad_op(model, beta)?;
    let lambda = jump_weight(code, &l)?;
    if lambda <= 0.0 {
        return domain(format!("a jump at {beta} annihilates the code"));
    }
    let scale = C64::new(1.0 / lambda.sqrt(), 0.0);
    let mut worst: f64 = 0.0;
    for c in code.codewords() {
        let restored = &rec.unitary.apply(&l.apply(c)?)? * scale;
        worst = worst.max((&restored - c).norm_sqr().sqrt());
    }
    Ok(worst)
}

pub fn unitarity_defect(u: &SparseOperator) -> Result<f64> {
    let product = u.adjoint().compose(u)?;
    Ok(product.max_abs_diff(&SparseOperator::identity(u.n_qubits())?))
}

pub fn verify_recovery(
    rec: &RecoveryOp,
    code: &JumpCode,
    model: &DecayModel,
) -> Result<RecoveryCheck> {
    if rec.unitary.n_qubits() != code.n_qubits() || model.n_qubits() != code.n_qubits() {
        return domain("recovery, code and decay model disagree on the qubit count");
    }
    Ok(RecoveryCheck {
        residual: residual_after_jump(rec, code, model, rec.alpha)?,
        unitarity_defect: unitarity_defect(&rec.unitary)?,
    })
}

/// Recovery operators for every position of one code, built once and shared.
#[derive(Clone, Debug)]
pub struct RecoveryTable {
    ops: Vec<RecoveryOp>,
}

impl RecoveryTable {
    pub fn build(code: &JumpCode, model: &DecayModel) -> Result<Self> {
        let ops = (1..=code.n_qubits())
            .map(|alpha| synthesize_recovery(code, alpha, model))
            .collect::<Result<_>>()?;
        Ok(RecoveryTable { ops })
    }

    /// Rates cancel out of `U_alpha`, so a unit-rate model serves every physical model.
    pub fn for_code(code: &JumpCode) -> Result<Self> {
        Self::build(code, &DecayModel::uniform(code.n_qubits(), 1.0)?)
    }

    pub fn get(&self, alpha: usize) -> Option<&RecoveryOp> {
        alpha.checked_sub(1).and_then(|i| self.ops.get(i))
    }

    pub fn unitary(&self, alpha: usize) -> Option<&SparseOperator> {
        self.get(alpha).map(|r| &r.unitary)
    }

    pub fn ops(&self) -> &[RecoveryOp] {
        &self.ops
    }

    /// Position-indexed unitaries in the form used by the master equation dressing.
    pub fn unitaries(&self) -> BTreeMap<usize, SparseOperator> {
        self.ops
            .iter()
            .map(|r| (r.alpha, r.unitary.clone()))
            .collect()
    }
}
