//! Spontaneous-decay channels and the master equation
//! `drho/dt = -i (H_eff rho - rho H_eff^dagger) + sum_alpha A_alpha rho A_alpha^dagger`.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::error::{domain, numeric, Result};
use crate::qstate::{position_mask, DensityMatrix, SparseOperator, MAX_QUBITS};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Independent spontaneous decay of each qubit with rate `kappa_alpha`.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayModel {
    kappas: Vec<f64>,
}

impl DecayModel {
    pub fn new(kappas: Vec<f64>) -> Result<Self> {
        if kappas.is_empty() || kappas.len() > MAX_QUBITS {
            return domain(format!(
                "decay model needs 1..={MAX_QUBITS} rates, got {}",
                kappas.len()
            ));
        }
        if let Some(k) = kappas.iter().find(|k| !(k.is_finite() && **k >= 0.0)) {
            return domain(format!(
                "decay rates must be finite and non-negative, got {k}"
            ));
        }
        Ok(DecayModel { kappas })
    }

    pub fn uniform(n_qubits: usize, kappa: f64) -> Result<Self> {
        Self::new(vec![kappa; n_qubits])
    }

    pub fn n_qubits(&self) -> usize {
        self.kappas.len()
    }

    pub fn kappas(&self) -> &[f64] {
        &self.kappas
    }

    /// Rate of position `alpha` (1-based).
    pub fn kappa(&self, alpha: usize) -> f64 {
        self.kappas[alpha - 1]
    }

    pub fn kappa_max(&self) -> f64 {
        self.kappas.iter().copied().fold(0.0, f64::max)
    }

    pub fn equal_rates(&self) -> bool {
        let lo = self.kappas.iter().copied().fold(f64::INFINITY, f64::min);
        self.kappa_max() - lo < 1e-12
    }

    fn check_position(&self, alpha: usize) -> Result<()> {
        if alpha == 0 || alpha > self.n_qubits() {
            return domain(format!("position {alpha} outside 1..={}", self.n_qubits()));
        }
        Ok(())
    }
}

/// A set of distinct jump positions, kept in increasing order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JumpSet {
    positions: Vec<usize>,
}

impl JumpSet {
    /// Positions may be given in any order; repeats are rejected because a
    /// qubit cannot decay twice without re-excitation.
    pub fn new(n_qubits: usize, positions: &[usize]) -> Result<Self> {
        let mut sorted = positions.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return domain(format!("jump set {positions:?} repeats a position"));
        }
        if let Some(&a) = sorted.iter().find(|&&a| a == 0 || a > n_qubits) {
            return domain(format!("jump position {a} outside 1..={n_qubits}"));
        }
        Ok(JumpSet { positions: sorted })
    }

    pub fn empty() -> Self {
        JumpSet {
            positions: Vec::new(),
        }
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Bit mask of the positions in an `n_qubits` register.
    pub fn mask(&self, n_qubits: usize) -> u32 {
        self.positions
            .iter()
            .fold(0, |m, &a| m | position_mask(n_qubits, a))
    }

    /// Every jump set with at most `d` positions, ordered by size and then
    /// lexicographically.
    pub fn all_up_to(n_qubits: usize, d: usize) -> Vec<JumpSet> {
        let mut out = Vec::new();
        for k in 0..=d.min(n_qubits) {
            let mut combo: Vec<usize> = (1..=k).collect();
            loop {
                out.push(JumpSet {
                    positions: combo.clone(),
                });
                // advance to the next k-combination of 1..=n
                let mut i = k;
                while i > 0 && combo[i - 1] == n_qubits - k + i {
                    i -= 1;
                }
                if i == 0 {
                    break;
                }
                combo[i - 1] += 1;
                for j in i..k {
                    combo[j] = combo[j - 1] + 1;
                }
            }
        }
        out
    }
}

/// `L_alpha = sqrt(kappa_alpha) |0><1|_alpha` tensored with the identity elsewhere.
pub fn lindblad_op(model: &DecayModel, alpha: usize) -> Result<SparseOperator> {
    model.check_position(alpha)?;
    let n = model.n_qubits();
    let m = position_mask(n, alpha);
    let amp = C64::new(model.kappa(alpha).sqrt(), 0.0);
    SparseOperator::from_entries(
        n,
        (0..1u32 << n)
            .filter(|x| x & m != 0)
            .map(|x| ((x & !m) as usize, x as usize, amp)),
    )
}

/// `sum_alpha L_alpha^dagger L_alpha`, diagonal in the computational basis.
pub fn decay_sum(model: &DecayModel) -> Result<SparseOperator> {
    let n = model.n_qubits();
    let diag: Vec<C64> = (0..1u32 << n)
        .map(|x| {
            let rate: f64 = (1..=n)
                .filter(|&a| x & position_mask(n, a) != 0)
                .map(|a| model.kappa(a))
                .sum();
            C64::new(rate, 0.0)
        })
        .collect();
    SparseOperator::diagonal(n, &diag)
}

/// `H_eff = H - (i/2) sum_alpha L_alpha^dagger L_alpha`.
pub fn effective_hamiltonian(h: &SparseOperator, model: &DecayModel) -> Result<SparseOperator> {
    if h.n_qubits() != model.n_qubits() {
        return domain("Hamiltonian and decay model act on registers of different size");
    }
    let defect = h.hermiticity_defect();
    if defect > 1e-10 {
        return domain(format!("Hamiltonian is not Hermitian (defect {defect:e})"));
    }
    h.plus(&decay_sum(model)?.scaled(C64::new(0.0, -0.5)))
}

/// `J_E = L_{alpha_1} ... L_{alpha_n}`; the factors act on distinct qubits and commute.
pub fn jump_product(model: &DecayModel, set: &JumpSet) -> Result<SparseOperator> {
    let n = model.n_qubits();
    if let Some(&a) = set.positions().iter().find(|&&a| a > n) {
        return domain(format!("jump position {a} outside 1..={n}"));
    }
    let m = set.mask(n);
    let amp: f64 = set
        .positions()
        .iter()
        .map(|&a| model.kappa(a).sqrt())
        .product();
    let amp = C64::new(amp, 0.0);
    SparseOperator::from_entries(
        n,
        (0..1u32 << n)
            .filter(|x| x & m == m)
            .map(|x| ((x & !m) as usize, x as usize, amp)),
    )
}

/// How each jump operator enters the dissipator.
#[derive(Clone, Debug, Default)]
pub enum JumpDressing {
    /// `A_alpha = L_alpha`.
    #[default]
    Bare,
    /// `A_alpha = U_alpha L_alpha` for listed positions (instantaneous recovery).
    Unitary(BTreeMap<usize, SparseOperator>),
    /// Position `alpha` is followed by `U` with the listed probabilities, giving
    /// the channels `p * (U L_alpha) rho (U L_alpha)^dagger`.
    Mixture(BTreeMap<usize, Vec<(f64, SparseOperator)>>),
}

/// Time-independent Lindblad generator with precomputed operators.
#[derive(Clone, Debug)]
pub struct MasterEquation {
    dim: usize,
    n_qubits: usize,
    h_eff: SparseOperator,
    channels: Vec<(f64, SparseOperator)>,
}

impl MasterEquation {
    pub fn new(h: &SparseOperator, model: &DecayModel, dressing: &JumpDressing) -> Result<Self> {
        let h_eff = effective_hamiltonian(h, model)?;
        let n = model.n_qubits();
        let mut channels = Vec::new();
        for alpha in 1..=n {
            if model.kappa(alpha) == 0.0 {
                continue;
            }
            let l = lindblad_op(model, alpha)?;
            match dressing {
                JumpDressing::Bare => channels.push((1.0, l)),
                JumpDressing::Unitary(map) => match map.get(&alpha) {
                    Some(u) => channels.push((1.0, u.compose(&l)?)),
                    None => channels.push((1.0, l)),
                },
                JumpDressing::Mixture(map) => match map.get(&alpha) {
                    Some(list) => {
                        let total: f64 = list.iter().map(|(p, _)| p).sum();
                        if (total - 1.0).abs() > 1e-12 || list.iter().any(|(p, _)| *p < 0.0) {
                            return domain(format!(
                                "dressing weights for position {alpha} sum to {total}"
                            ));
                        }
                        for (p, u) in list {
                            if *p > 0.0 {
                                channels.push((*p, u.compose(&l)?));
                            }
                        }
                    }
                    None => channels.push((1.0, l)),
                },
            }
        }
        Ok(MasterEquation {
            dim: 1 << n,
            n_qubits: n,
            h_eff,
            channels,
        })
    }

    pub fn effective_hamiltonian(&self) -> &SparseOperator {
        &self.h_eff
    }

    /// `out = L(rho)`.
    fn rhs(&self, rho: &[C64], out: &mut [C64], tmp: &mut [C64]) {
        let n = self.dim;
        out.iter_mut().for_each(|z| *z = ZERO);
        let minus_i = C64::new(0.0, -1.0);
        let plus_i = C64::new(0.0, 1.0);
        // -i H rho
        for r in 0..n {
            for &(k, h) in self.h_eff.row(r) {
                let f = minus_i * h;
                let (src, dst) = (&rho[k * n..(k + 1) * n], &mut out[r * n..(r + 1) * n]);
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += f * s;
                }
            }
        }
        // +i rho H^dagger
        for j in 0..n {
            for &(k, h) in self.h_eff.row(j) {
                let f = plus_i * h.conj();
                for i in 0..n {
                    out[i * n + j] += rho[i * n + k] * f;
                }
            }
        }
        for (w, a) in &self.channels {
            tmp.iter_mut().for_each(|z| *z = ZERO);
            for r in 0..n {
                for &(k, v) in a.row(r) {
                    let (src, dst) = (&rho[k * n..(k + 1) * n], &mut tmp[r * n..(r + 1) * n]);
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += v * s;
                    }
                }
            }
            for j in 0..n {
                for &(k, v) in a.row(j) {
                    let f = v.conj() * *w;
                    for i in 0..n {
                        out[i * n + j] += tmp[i * n + k] * f;
                    }
                }
            }
        }
    }

    /// Fixed-step classical RK4 from `rho0` to `t_final`.
    ///
    /// The step count is `ceil(t_final / dt)` so the run ends exactly at
    /// `t_final`. Fails when the trace drifts by more than `1e-4`.
    pub fn evolve(&self, rho0: &DensityMatrix, t_final: f64, dt: f64) -> Result<DensityMatrix> {
        if rho0.n_qubits() != self.n_qubits {
            return domain("initial density matrix acts on a register of different size");
        }
        if !(dt.is_finite() && dt > 0.0) {
            return domain(format!("step must be positive, got {dt}"));
        }
        if !(t_final.is_finite() && t_final >= 0.0) {
            return domain(format!(
                "final time must be finite and non-negative, got {t_final}"
            ));
        }
        let mut rho = rho0.clone();
        let steps = (t_final / dt).ceil() as usize;
        if steps == 0 {
            return Ok(rho);
        }
        let h = t_final / steps as f64;
        let len = self.dim * self.dim;
        let (mut k1, mut k2, mut k3, mut k4) = (
            vec![ZERO; len],
            vec![ZERO; len],
            vec![ZERO; len],
            vec![ZERO; len],
        );
        let mut stage = vec![ZERO; len];
        let mut tmp = vec![ZERO; len];
        let tr0 = rho.trace().re;
        for step in 0..steps {
            let y = rho.data();
            self.rhs(y, &mut k1, &mut tmp);
            for i in 0..len {
                stage[i] = y[i] + k1[i] * (0.5 * h);
            }
            self.rhs(&stage, &mut k2, &mut tmp);
            for i in 0..len {
                stage[i] = y[i] + k2[i] * (0.5 * h);
            }
            self.rhs(&stage, &mut k3, &mut tmp);
            for i in 0..len {
                stage[i] = y[i] + k3[i] * h;
            }
            self.rhs(&stage, &mut k4, &mut tmp);
            let y = rho.data_mut();
            for i in 0..len {
                y[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
            }
            if step % 64 == 63 || step + 1 == steps {
                let tr = rho.trace().re;
                if !tr.is_finite() || (tr - tr0).abs() > 1e-4 {
                    return numeric(format!(
                        "trace drifted from {tr0} to {tr} after {} RK4 steps of size {h:e}; reduce dt",
                        step + 1
                    ));
                }
            }
        }
        Ok(rho)
    }
}

/// Default RK4 step `1e-3 / max(||H||_1, kappa_max)`.
pub fn default_step(h: &SparseOperator, model: &DecayModel) -> f64 {
    let scale = h.one_norm().max(model.kappa_max());
    if scale > 0.0 {
        1e-3 / scale
    } else {
        1e-3
    }
}

/// Integrates the master equation with the given jump dressing.
pub fn integrate_master(
    rho0: &DensityMatrix,
    h: &SparseOperator,
    model: &DecayModel,
    dressing: &JumpDressing,
    t_final: f64,
    dt: f64,
) -> Result<DensityMatrix> {
    MasterEquation::new(h, model, dressing)?.evolve(rho0, t_final, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{expm_apply, weight_subspace, BasisState, StateVector};

    fn ket(s: &str) -> StateVector {
        StateVector::basis(BasisState::parse(s).unwrap())
    }

    #[test]
    fn single_qubit_lowering() {
        let model = DecayModel::uniform(1, 4.0).unwrap();
        let l = lindblad_op(&model, 1).unwrap();
        assert_eq!(l.apply(&ket("1")).unwrap(), &ket("0") * C64::new(2.0, 0.0));
        assert_eq!(l.apply(&ket("0")).unwrap().norm_sqr(), 0.0);
        assert!(lindblad_op(&model, 2).is_err());
        assert!(lindblad_op(&model, 0).is_err());
    }

    #[test]
    fn lowering_acts_on_named_position() {
        let model = DecayModel::uniform(4, 1.0).unwrap();
        let l2 = lindblad_op(&model, 2).unwrap();
        assert_eq!(l2.nnz(), 8);
        assert_eq!(l2.apply(&ket("1100")).unwrap(), ket("1000"));
        assert_eq!(l2.apply(&ket("0110")).unwrap(), ket("0010"));
    }

    #[test]
    fn lowering_square_is_excited_projector() {
        let model = DecayModel::new(vec![0.3, 1.7, 2.0]).unwrap();
        for alpha in 1..=3 {
            let l = lindblad_op(&model, alpha).unwrap();
            let llt = l.adjoint().compose(&l).unwrap();
            let m = position_mask(3, alpha);
            let diag: Vec<C64> = (0..8u32)
                .map(|x| C64::new(if x & m != 0 { model.kappa(alpha) } else { 0.0 }, 0.0))
                .collect();
            assert!(llt.max_abs_diff(&SparseOperator::diagonal(3, &diag).unwrap()) < 1e-15);
        }
    }

    #[test]
    fn decay_sum_counts_weight_for_equal_rates() {
        let model = DecayModel::uniform(5, 0.7).unwrap();
        let sum = decay_sum(&model).unwrap();
        for x in 0..32u32 {
            assert!(
                (sum.get(x as usize, x as usize).re - 0.7 * x.count_ones() as f64).abs() < 1e-14
            );
        }
        let via_ops = (1..=5)
            .map(|a| {
                let l = lindblad_op(&model, a).unwrap();
                l.adjoint().compose(&l).unwrap()
            })
            .fold(SparseOperator::zero(5).unwrap(), |acc, x| {
                acc.plus(&x).unwrap()
            });
        assert!(via_ops.max_abs_diff(&sum) < 1e-14);
    }

    #[test]
    fn effective_hamiltonian_eigenvalues() {
        let model = DecayModel::uniform(4, 1.2).unwrap();
        let h0 = SparseOperator::zero(4).unwrap();
        let heff = effective_hamiltonian(&h0, &model).unwrap();
        for b in weight_subspace(4, 3).unwrap() {
            let v = heff.get(b.index(), b.index());
            assert!((v - C64::new(0.0, -0.5 * 3.0 * 1.2)).norm() < 1e-14);
        }
        let silent = effective_hamiltonian(&h0, &DecayModel::uniform(4, 0.0).unwrap()).unwrap();
        assert_eq!(silent.nnz(), 0);

        let unequal = DecayModel::new(vec![0.4, 0.9]).unwrap();
        let heff = effective_hamiltonian(&SparseOperator::zero(2).unwrap(), &unequal).unwrap();
        assert!((heff.get(0b10, 0b10) - C64::new(0.0, -0.2)).norm() < 1e-15);
        assert!((heff.get(0b01, 0b01) - C64::new(0.0, -0.45)).norm() < 1e-15);
    }

    #[test]
    fn effective_hamiltonian_rejects_non_hermitian() {
        let h = SparseOperator::from_entries(1, [(0, 1, C64::new(1.0, 0.0))]).unwrap();
        assert!(effective_hamiltonian(&h, &DecayModel::uniform(1, 1.0).unwrap()).is_err());
    }

    #[test]
    fn jump_product_examples() {
        let model = DecayModel::uniform(4, 1.0).unwrap();
        let empty = jump_product(&model, &JumpSet::empty()).unwrap();
        assert!(empty.max_abs_diff(&SparseOperator::identity(4).unwrap()) < 1e-15);
        let j12 = jump_product(&model, &JumpSet::new(4, &[1, 2]).unwrap()).unwrap();
        assert_eq!(j12.apply(&ket("1100")).unwrap(), ket("0000"));
        assert_eq!(j12.apply(&ket("1010")).unwrap().norm_sqr(), 0.0);
    }

    #[test]
    fn jump_product_matches_ordered_products() {
        let model = DecayModel::new(vec![0.5, 1.0, 2.0, 3.0]).unwrap();
        let set = JumpSet::new(4, &[4, 1, 3]).unwrap();
        let direct = jump_product(&model, &set).unwrap();
        let l = |a| lindblad_op(&model, a).unwrap();
        let forward = l(1).compose(&l(3)).unwrap().compose(&l(4)).unwrap();
        let backward = l(4).compose(&l(3)).unwrap().compose(&l(1)).unwrap();
        assert!(direct.max_abs_diff(&forward) < 1e-14);
        assert!(forward.max_abs_diff(&backward) < 1e-14);
    }

    #[test]
    fn jump_set_validation_and_enumeration() {
        assert!(JumpSet::new(4, &[2, 2]).is_err());
        assert!(JumpSet::new(4, &[5]).is_err());
        assert_eq!(JumpSet::new(4, &[3, 1]).unwrap().positions(), &[1, 3]);
        let all = JumpSet::all_up_to(5, 2);
        assert_eq!(all.len(), 1 + 5 + 10);
        assert_eq!(all[6].positions(), &[1, 2]);
        assert_eq!(all.last().unwrap().positions(), &[4, 5]);
        assert_eq!(JumpSet::all_up_to(3, 7).len(), 8);
    }

    fn rabi(n: usize, omega: f64, alpha: usize) -> SparseOperator {
        let m = position_mask(n, alpha);
        SparseOperator::from_entries(
            n,
            (0..1u32 << n).map(|x| (x as usize, (x ^ m) as usize, C64::new(0.5 * omega, 0.0))),
        )
        .unwrap()
    }

    #[test]
    fn closed_system_keeps_purity() {
        let h = rabi(2, 1.3, 1).plus(&rabi(2, 0.4, 2)).unwrap();
        let model = DecayModel::uniform(2, 0.0).unwrap();
        let rho0 = DensityMatrix::from_pure(&ket("10"));
        let rho = integrate_master(&rho0, &h, &model, &JumpDressing::Bare, 3.0, 1e-3).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-8);
        assert!((rho.trace().re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn single_qubit_decay_closed_form() {
        let kappa = 0.9;
        let model = DecayModel::uniform(1, kappa).unwrap();
        let h = SparseOperator::zero(1).unwrap();
        let rho0 = DensityMatrix::from_pure(&ket("1"));
        for &t in &[0.5, 1.0, 4.0] {
            let rho = integrate_master(
                &rho0,
                &h,
                &model,
                &JumpDressing::Bare,
                t,
                default_step(&h, &model),
            )
            .unwrap();
            assert!(
                (rho.get(1, 1).re - (-kappa * t).exp()).abs() < 1e-10,
                "t={t}"
            );
        }
    }

    #[test]
    fn trace_and_hermiticity_preserved() {
        let model = DecayModel::new(vec![0.3, 1.1, 0.7]).unwrap();
        let h = rabi(3, 1.0, 1).plus(&rabi(3, 0.6, 3)).unwrap();
        let psi = (&(&ket("111") + &ket("010")) * C64::new(0.5f64.sqrt(), 0.0))
            .normalized()
            .unwrap();
        let mut rho = DensityMatrix::from_pure(&psi);
        let eq = MasterEquation::new(&h, &model, &JumpDressing::Bare).unwrap();
        let kappa = model.kappa_max();
        // ten slices covering t <= 10 / kappa_max
        for _ in 0..10 {
            rho = eq.evolve(&rho, 1.0 / kappa, 1e-3).unwrap();
            assert!((rho.trace().re - 1.0).abs() < 1e-6);
            assert!(rho.hermiticity_defect() < 1e-8);
            assert!(rho.is_positive_semidefinite(1e-9));
        }
    }

    #[test]
    fn oversized_step_is_reported() {
        let model = DecayModel::uniform(1, 100.0).unwrap();
        let rho0 = DensityMatrix::from_pure(&ket("1"));
        let err = integrate_master(
            &rho0,
            &SparseOperator::zero(1).unwrap(),
            &model,
            &JumpDressing::Bare,
            10.0,
            0.5,
        );
        assert!(matches!(err, Err(crate::Error::Numeric(_))));
    }

    #[test]
    fn no_jump_evolution_freezes_a_weight_class() {
        let model = DecayModel::uniform(4, 0.8).unwrap();
        let heff = effective_hamiltonian(&SparseOperator::zero(4).unwrap(), &model).unwrap();
        let psi0 = StateVector::from_kets(
            4,
            &[
                (BasisState::parse("1100").unwrap(), C64::new(0.5, 0.0)),
                (BasisState::parse("0011").unwrap(), C64::new(0.0, 0.5)),
                (BasisState::parse("1010").unwrap(), C64::new(-0.5, 0.0)),
                (BasisState::parse("0101").unwrap(), C64::new(0.5, 0.0)),
            ],
        )
        .unwrap();
        let rho0 = DensityMatrix::from_pure(&psi0);
        let conditioned = expm_apply(&heff, &psi0, 2.5).unwrap().normalized().unwrap();
        assert!(DensityMatrix::from_pure(&conditioned).max_abs_diff(&rho0) < 1e-10);
    }
}
