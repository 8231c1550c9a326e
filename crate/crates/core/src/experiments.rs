//! Imperfection studies: misdetected positions in a quantum memory, and the
//! Grover/Rabi model under unequal decay rates, delayed recovery and detector
//! dead time.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::jumpcodes::JumpCode;
use crate::lindblad::{integrate_master, DecayModel, JumpDressing, MasterEquation};
use crate::qstate::{DensityMatrix, SparseOperator, StateVector};
use crate::recovery::RecoveryTable;
use crate::trajectory::{
    ensemble_average, EnsembleResult, JumpContext, JumpHandler, JumpResponse, Observable,
};

/// `H = i Omega (|x0><v| - |v><x0|)` with `|v>` the uniform superposition of code words.
#[derive(Clone, Debug)]
pub struct GroverModel {
    pub code: JumpCode,
    pub target_index: usize,
    pub omega: f64,
    pub target: StateVector,
    pub v_state: StateVector,
    pub hamiltonian: SparseOperator,
}

impl GroverModel {
    /// `tau = pi / (2 Omega)`.
    pub fn tau(&self) -> f64 {
        PI / (2.0 * self.omega)
    }

    /// `<v|x0> = 1/sqrt K`.
    pub fn overlap(&self) -> f64 {
        1.0 / (self.code.dimension() as f64).sqrt()
    }
}

pub fn grover_model(code: &JumpCode, target_index: usize, omega: f64) -> Result<GroverModel> {
    let k = code.dimension();
    if k < 2 {
        return domain(format!("the Grover model needs K >= 2 code words, got {k}"));
    }
    if target_index >= k {
        return domain(format!(
            "target index {target_index} out of range for K = {k}"
        ));
    }
    if !(omega.is_finite() && omega > 0.0) {
        return domain(format!("Omega must be positive, got {omega}"));
    }
    let target = code.codeword(target_index).clone();
    let v = code.uniform_superposition();
    let i_omega = C64::new(0.0, omega);
    let hamiltonian = SparseOperator::outer(&target, &v)?
        .scaled(i_omega)
        .plus(&SparseOperator::outer(&v, &target)?.scaled(-i_omega))?;
    if hamiltonian.hermiticity_defect() > 1e-12 {
        return Err(Error::Numeric("Grover Hamiltonian is not Hermitian".into()));
    }
    Ok(GroverModel {
        code: code.clone(),
        target_index,
        omega,
        target,
        v_state: v,
        hamiltonian,
    })
}

/// `|<x0|psi(tau)>|^2 = cos^2(arccos s - (pi/2) sqrt(1 - s^2))` with `s = 1/sqrt K`.
pub fn grover_closed_form(k: usize) -> f64 {
    let s = 1.0 / (k as f64).sqrt();
    (s.acos() - 0.5 * PI * (1.0 - s * s).sqrt()).cos().powi(2)
}

/// Imperfection parameters of one run; times in units of `1/Omega` (or `1/kappa` for the memory).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ImperfectionConfig {
    pub q: f64,
    pub delta_kappa: f64,
    pub delay: f64,
    pub dead_time: f64,
    pub kappa_mean: f64,
}

impl ImperfectionConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("q", self.q),
            ("delta_kappa", self.delta_kappa),
            ("delay", self.delay),
            ("dead_time", self.dead_time),
            ("kappa_mean", self.kappa_mean),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return domain(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if self.q >= 1.0 {
            return domain(format!("q must be below 1, got {}", self.q));
        }
        Ok(())
    }
}

/// Candidate reported positions for a jump at `alpha` with their probabilities
/// `q^{|beta - alpha|} / Z`, correct position first and then by distance.
pub fn misdetection_weights(n: usize, alpha: usize, q: f64) -> Result<Vec<(usize, f64)>> {
    if !(0.0..=1.0).contains(&q) {
        return domain(format!("q must lie in [0, 1], got {q}"));
    }
    if alpha == 0 || alpha > n {
        return domain(format!("position {alpha} outside 1..={n}"));
    }
    let mut order = vec![alpha];
    for dist in 1..n {
        if alpha > dist {
            order.push(alpha - dist);
        }
        if alpha + dist <= n {
            order.push(alpha + dist);
        }
    }
    let raw: Vec<f64> = order
        .iter()
        .map(|&b| q.powi(b.abs_diff(alpha) as i32))
        .collect();
    let z: f64 = raw.iter().sum();
    Ok(order
        .into_iter()
        .zip(raw)
        .map(|(b, w)| (b, w / z))
        .collect())
}

/// Photodetector array with position errors, recovery delay and a global dead time.
#[derive(Clone, Debug)]
pub struct Detector<'a> {
    table: &'a RecoveryTable,
    reports: Vec<Vec<(usize, f64)>>,
    delay: f64,
    dead_time: f64,
}

impl<'a> Detector<'a> {
    pub fn new(
        table: &'a RecoveryTable,
        n: usize,
        q: f64,
        delay: f64,
        dead_time: f64,
    ) -> Result<Self> {
        let reports = (1..=n)
            .map(|a| misdetection_weights(n, a, q))
            .collect::<Result<_>>()?;
        Ok(Detector {
            table,
            reports,
            delay,
            dead_time,
        })
    }

    pub fn perfect(table: &'a RecoveryTable, n: usize) -> Result<Self> {
        Self::new(table, n, 0.0, 0.0, 0.0)
    }
}

impl JumpHandler for Detector<'_> {
    fn on_jump(&self, ctx: &JumpContext, rng: &mut ChaCha8Rng) -> JumpResponse {
        // one draw per jump whatever the outcome, so runs at different q stay paired
        let u: f64 = rand::Rng::random(rng);
        let blind = self.dead_time > 0.0
            && ctx
                .last_detection
                .is_some_and(|t0| ctx.time - t0 < self.dead_time);
        if blind {
            return JumpResponse {
                reported: None,
                recovery_delay: None,
            };
        }
        let candidates = &self.reports[ctx.position - 1];
        let mut acc = 0.0;
        let mut reported = ctx.position;
        for &(beta, p) in candidates {
            acc += p;
            if u < acc {
                reported = beta;
                break;
            }
        }
        JumpResponse {
            reported: Some(reported),
            recovery_delay: Some(self.delay),
        }
    }

    fn recovery(&self, position: usize) -> Option<&SparseOperator> {
        self.table.unitary(position)
    }
}

/// Quantum memory (`H = 0`) from `|psi0>`; each reported position is recovered at once.
#[allow(clippy::too_many_arguments)]
pub fn memory_misdetection_from(
    code: &JumpCode,
    psi0: &StateVector,
    q: f64,
    kappa: f64,
    t_final: f64,
    n_traj: usize,
    master_seed: u64,
) -> Result<EnsembleResult> {
    ImperfectionConfig {
        q,
        kappa_mean: kappa,
        ..Default::default()
    }
    .validate()?;
    let n = code.n_qubits();
    let table = RecoveryTable::for_code(code)?;
    let detector = Detector::new(&table, n, q, 0.0, 0.0)?;
    let model = DecayModel::uniform(n, kappa)?;
    let h = SparseOperator::zero(n)?;
    ensemble_average(
        psi0,
        &h,
        &model,
        t_final,
        &detector,
        n_traj,
        master_seed,
        &Observable::fidelity(psi0),
    )
}

/// Memory fidelity `|<psi(0)|psi(tau)>|^2` at `tau = pi/(2 kappa)` from the uniform code state.
pub fn memory_misdetection(
    code: &JumpCode,
    q: f64,
    kappa: f64,
    n_traj: usize,
    master_seed: u64,
) -> Result<EnsembleResult> {
    if !(kappa > 0.0) {
        return domain(format!("kappa must be positive, got {kappa}"));
    }
    let psi0 = code.uniform_superposition();
    memory_misdetection_from(
        code,
        &psi0,
        q,
        kappa,
        PI / (2.0 * kappa),
        n_traj,
        master_seed,
    )
}

/// Master-equation oracle for the memory: every jump is followed by the recovery
/// of a position drawn from [`misdetection_weights`]; `q = 1` gives uniformly random recovery.
pub fn memory_misdetection_master(
    code: &JumpCode,
    psi0: &StateVector,
    q: f64,
    kappa: f64,
    t_final: f64,
) -> Result<DensityMatrix> {
    let n = code.n_qubits();
    let table = RecoveryTable::for_code(code)?;
    let mut mixture = BTreeMap::new();
    for alpha in 1..=n {
        let list = misdetection_weights(n, alpha, q)?
            .into_iter()
            .map(|(beta, p)| {
                (
                    p,
                    table
                        .unitary(beta)
                        .expect("every position has a recovery")
                        .clone(),
                )
            })
            .collect();
        mixture.insert(alpha, list);
    }
    let model = DecayModel::uniform(n, kappa)?;
    let h = SparseOperator::zero(n)?;
    let dt = master_step(0.0, &model);
    integrate_master(
        &DensityMatrix::from_pure(psi0),
        &h,
        &model,
        &JumpDressing::Mixture(mixture),
        t_final,
        dt,
    )
}

/// RK4 step `1e-2 / max(Omega, kappa_max)`.
fn master_step(omega: f64, model: &DecayModel) -> f64 {
    1e-2 / omega.max(model.kappa_max()).max(1e-12)
}

/// Ensemble density matrix against the instantly-recovered master equation.
#[derive(Clone, Debug)]
pub struct UnravelingCheck {
    pub ensemble: EnsembleResult,
    pub master: DensityMatrix,
    /// Largest `|rho_traj - rho_master| - k sigma` over all real and imaginary parts, for `k` given.
    pub worst_excess: f64,
    pub max_abs_diff: f64,
}

impl UnravelingCheck {
    /// Entrywise agreement within `k` standard errors plus a `1e-9` floor.
    pub fn within(&self, k: f64) -> bool {
        self.excess(k) <= 1e-9
    }

    pub fn excess(&self, k: f64) -> f64 {
        let rho = self
            .ensemble
            .rho_estimate
            .as_ref()
            .expect("density requested");
        let err = self
            .ensemble
            .rho_std_error
            .as_ref()
            .expect("density requested");
        rho.data()
            .iter()
            .zip(self.master.data())
            .zip(err)
            .map(|((a, b), s)| ((a.re - b.re).abs() - k * s.re).max((a.im - b.im).abs() - k * s.im))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Memory with perfect instantaneous recovery, trajectories against the dressed master equation.
pub fn unraveling_check(
    code: &JumpCode,
    kappa: f64,
    t_final: f64,
    n_traj: usize,
    master_seed: u64,
) -> Result<UnravelingCheck> {
    unraveling_check_with(code, 0.0, kappa, t_final, n_traj, master_seed)
}

/// As [`unraveling_check`] but with misdetection parameter `q`.
pub fn unraveling_check_with(
    code: &JumpCode,
    q: f64,
    kappa: f64,
    t_final: f64,
    n_traj: usize,
    master_seed: u64,
) -> Result<UnravelingCheck> {
    let n = code.n_qubits();
    let psi0 = code.uniform_superposition();
    let table = RecoveryTable::for_code(code)?;
    let detector = Detector::new(&table, n, q, 0.0, 0.0)?;
    let model = DecayModel::uniform(n, kappa)?;
    let h = SparseOperator::zero(n)?;
    let ensemble = ensemble_average(
        &psi0,
        &h,
        &model,
        t_final,
        &detector,
        n_traj,
        master_seed,
        &Observable::with_density(&psi0),
    )?;
    let master = memory_misdetection_master(code, &psi0, q, kappa, t_final)?;
    let max_abs_diff = ensemble
        .rho_estimate
        .as_ref()
        .expect("density requested")
        .max_abs_diff(&master);
    let mut check = UnravelingCheck {
        ensemble,
        master,
        worst_excess: 0.0,
        max_abs_diff,
    };
    check.worst_excess = check.excess(5.0);
    Ok(check)
}

/// Each code word replaced by its first basis ket: the same Hamiltonian algebra without encoding.
pub fn unencoded_code(code: &JumpCode) -> Result<JumpCode> {
    let words = code
        .codewords()
        .iter()
        .map(|c| StateVector::basis(c.support()[0].0))
        .collect();
    JumpCode::from_codewords(
        format!("unencoded {}", code.label()),
        code.n_qubits(),
        code.weight(),
        0,
        0.0,
        words,
    )
}

/// Mean over sampled rate vectors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateAverage {
    pub mean_fidelity: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

/// Draws `n_samples` rate vectors with `kappa_alpha ~ Normal(kappa_mean, delta_kappa)`,
/// negative draws redrawn.
pub fn sample_rates(
    n: usize,
    kappa_mean: f64,
    delta_kappa: f64,
    n_samples: usize,
    master_seed: u64,
) -> Result<Vec<Vec<f64>>> {
    ImperfectionConfig {
        delta_kappa,
        kappa_mean,
        ..Default::default()
    }
    .validate()?;
    let normal = Normal::new(kappa_mean, delta_kappa)
        .map_err(|e| Error::Domain(format!("rate distribution: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    Ok((0..n_samples)
        .map(|_| {
            (0..n)
                .map(|_| loop {
                    let k = normal.sample(&mut rng);
                    if k >= 0.0 {
                        break k;
                    }
                })
                .collect()
        })
        .collect())
}

/// Grover dynamics under random unequal rates, integrated with the master equation.
///
/// `encoded` uses instantaneous recovery on the code; otherwise the bare
/// [`unencoded_code`] without recovery.
pub fn grover_unequal_rates(
    code: &JumpCode,
    kappa_mean: f64,
    delta_kappa: f64,
    n_samples: usize,
    master_seed: u64,
    encoded: bool,
) -> Result<RateAverage> {
    if n_samples == 0 {
        return domain("n_samples must be at least 1");
    }
    let n = code.n_qubits();
    let (grover, dressing) = if encoded {
        let table = RecoveryTable::for_code(code)?;
        (
            grover_model(code, 0, 1.0)?,
            JumpDressing::Unitary(table.unitaries()),
        )
    } else {
        (
            grover_model(&unencoded_code(code)?, 0, 1.0)?,
            JumpDressing::Bare,
        )
    };
    let rates = sample_rates(n, kappa_mean, delta_kappa, n_samples, master_seed)?;
    let rho0 = DensityMatrix::from_pure(&grover.v_state);
    let fidelities = rates
        .into_par_iter()
        .map(|kappas| {
            let model = DecayModel::new(kappas)?;
            let me = MasterEquation::new(&grover.hamiltonian, &model, &dressing)?;
            let rho = me.evolve(&rho0, grover.tau(), master_step(grover.omega, &model))?;
            rho.expectation(&grover.target)
        })
        .collect::<Result<Vec<f64>>>()?;
    let m = fidelities.len() as f64;
    let mean = fidelities.iter().sum::<f64>() / m;
    let var = if fidelities.len() > 1 {
        fidelities.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    Ok(RateAverage {
        mean_fidelity: mean,
        std_error: (var / m).sqrt(),
        n_samples,
    })
}

fn grover_ensemble(
    code: &JumpCode,
    kappa: f64,
    delay: f64,
    dead_time: f64,
    n_traj: usize,
    master_seed: u64,
) -> Result<EnsembleResult> {
    ImperfectionConfig {
        delay,
        dead_time,
        kappa_mean: kappa,
        ..Default::default()
    }
    .validate()?;
    let grover = grover_model(code, 0, 1.0)?;
    let n = code.n_qubits();
    let table = RecoveryTable::for_code(code)?;
    let detector = Detector::new(&table, n, 0.0, delay, dead_time)?;
    let model = DecayModel::uniform(n, kappa)?;
    ensemble_average(
        &grover.v_state,
        &grover.hamiltonian,
        &model,
        grover.tau(),
        &detector,
        n_traj,
        master_seed,
        &Observable::fidelity(&grover.target),
    )
}

/// Recovery applied `delay` after each detection (`Omega = 1`).
pub fn grover_delay(
    code: &JumpCode,
    kappa: f64,
    delay: f64,
    n_traj: usize,
    master_seed: u64,
) -> Result<EnsembleResult> {
    grover_ensemble(code, kappa, delay, 0.0, n_traj, master_seed)
}

/// Detector blind for `dead_time` after each detection (`Omega = 1`, equal rates `kappa_mean`).
pub fn grover_deadtime(
    code: &JumpCode,
    kappa_mean: f64,
    dead_time: f64,
    n_traj: usize,
    master_seed: u64,
) -> Result<EnsembleResult> {
    grover_ensemble(code, kappa_mean, 0.0, dead_time, n_traj, master_seed)
}

/// One point of a parameter sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub parameter: f64,
    pub mean_fidelity: f64,
    pub std_error: f64,
    pub n_traj: usize,
    pub seed: u64,
}

impl SweepRow {
    pub fn from_ensemble(parameter: f64, seed: u64, r: &EnsembleResult) -> Self {
        SweepRow {
            parameter,
            mean_fidelity: r.mean_fidelity,
            std_error: r.std_error,
            n_traj: r.n_traj,
            seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jumpcodes::pairing_code;
    use crate::qstate::{expm_apply, fidelity};
    use crate::trajectory::{sample_trajectory, trajectory_stream};

    #[test]
    fn grover_hamiltonian_structure() {
        let code = pairing_code(6, 0.0).unwrap();
        let g = grover_model(&code, 0, 1.0).unwrap();
        assert!(g.hamiltonian.is_hermitian(1e-12));
        assert!(
            (g.v_state.inner(&g.target).unwrap() - C64::new(1.0 / 10f64.sqrt(), 0.0)).norm()
                < 1e-12
        );
        let h_x0 = g.hamiltonian.apply(&g.target).unwrap();
        assert!(g.target.inner(&h_x0).unwrap().norm() < 1e-14);
        assert!((g.overlap() - 1.0 / 10f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn grover_rejects_bad_input() {
        assert!(grover_model(&pairing_code(2, 0.0).unwrap(), 0, 1.0).is_err());
        assert!(grover_model(&pairing_code(4, 0.0).unwrap(), 3, 1.0).is_err());
        assert!(grover_model(&pairing_code(4, 0.0).unwrap(), 0, 0.0).is_err());
    }

    #[test]
    fn closed_form_matches_matrix_exponential() {
        assert!((grover_closed_form(10) - 0.942_968_736).abs() < 1e-8);
        for (n, omega) in [(4, 1.0), (6, 1.0), (6, 2.5), (8, 0.7)] {
            let code = pairing_code(n, 0.3).unwrap();
            let g = grover_model(&code, 1, omega).unwrap();
            let psi = expm_apply(&g.hamiltonian, &g.v_state, g.tau()).unwrap();
            let f = fidelity(&psi, &g.target).unwrap();
            assert!(
                (f - grover_closed_form(code.dimension())).abs() < 1e-10,
                "N={n}"
            );
        }
    }

    #[test]
    fn misdetection_weights_follow_geometric_law() {
        let w = misdetection_weights(4, 2, 0.5).unwrap();
        let z = 1.0 + 0.5 + 0.5 + 0.25;
        assert_eq!(w.iter().map(|p| p.0).collect::<Vec<_>>(), vec![2, 1, 3, 4]);
        for ((_, got), want) in w.iter().zip([1.0, 0.5, 0.5, 0.25]) {
            assert!((got - want / z).abs() < 1e-15);
        }
        let exact = misdetection_weights(4, 3, 0.0).unwrap();
        assert_eq!(exact[0], (3, 1.0));
        assert!(exact[1..].iter().all(|p| p.1 == 0.0));
        assert!(misdetection_weights(4, 0, 0.1).is_err());
        assert!(misdetection_weights(4, 1, 1.5).is_err());
    }

    #[test]
    fn imperfection_config_validation() {
        assert!(ImperfectionConfig::default().validate().is_ok());
        assert!(ImperfectionConfig {
            q: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(ImperfectionConfig {
            delay: -0.1,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(ImperfectionConfig {
            dead_time: f64::NAN,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn perfect_memory_keeps_fidelity_one() {
        let code = pairing_code(4, 0.0).unwrap();
        let r = memory_misdetection(&code, 0.0, 1.0, 2000, 7).unwrap();
        assert!((r.mean_fidelity - 1.0).abs() <= 3.0 * r.std_error + 1e-9);
        assert!(memory_misdetection(&code, 1.0, 1.0, 10, 7).is_err());
    }

    #[test]
    fn misdetection_degrades_memory() {
        let code = pairing_code(4, 0.0).unwrap();
        let f: Vec<f64> = [0.0, 0.1, 0.3]
            .iter()
            .map(|&q| {
                memory_misdetection(&code, q, 1.0, 3000, 21)
                    .unwrap()
                    .mean_fidelity
            })
            .collect();
        assert!(f[0] > f[1] && f[1] > f[2], "{f:?}");
    }

    #[test]
    fn misdetection_trajectories_match_master_equation() {
        let code = pairing_code(4, 0.0).unwrap();
        let check = unraveling_check_with(&code, 0.3, 1.0, PI / 2.0, 4000, 5).unwrap();
        assert!(check.within(5.0), "excess {}", check.worst_excess);
        let master_f = check
            .master
            .expectation(&code.uniform_superposition())
            .unwrap();
        assert!((check.ensemble.mean_fidelity - master_f).abs() < 5.0 * check.ensemble.std_error);
    }

    #[test]
    fn unencoded_code_uses_bare_kets() {
        let code = pairing_code(4, 0.0).unwrap();
        let bare = unencoded_code(&code).unwrap();
        assert_eq!(bare.dimension(), 3);
        for c in bare.codewords() {
            assert_eq!(c.support().len(), 1);
        }
    }

    #[test]
    fn rate_sampling_is_seeded_and_non_negative() {
        let a = sample_rates(6, 1.0, 1.0, 20, 3).unwrap();
        assert_eq!(a, sample_rates(6, 1.0, 1.0, 20, 3).unwrap());
        assert!(a.iter().flatten().all(|&k| k >= 0.0));
        assert!(sample_rates(6, 1.0, 0.0, 2, 3)
            .unwrap()
            .iter()
            .flatten()
            .all(|&k| k == 1.0));
    }

    #[test]
    fn equal_rates_with_recovery_reach_closed_form() {
        let code = pairing_code(6, 0.0).unwrap();
        let r = grover_unequal_rates(&code, 1.0, 0.0, 2, 1, true).unwrap();
        assert!((r.mean_fidelity - grover_closed_form(10)).abs() < 1e-6);
        let free = grover_unequal_rates(&code, 0.0, 0.0, 1, 1, true).unwrap();
        assert!((free.mean_fidelity - grover_closed_form(10)).abs() < 1e-8);
    }

    #[test]
    fn encoding_beats_bare_states_under_spread_rates() {
        let code = pairing_code(6, 0.0).unwrap();
        let enc = grover_unequal_rates(&code, 1.0, 0.5, 8, 4, true).unwrap();
        let bare = grover_unequal_rates(&code, 1.0, 0.5, 8, 4, false).unwrap();
        assert!(enc.mean_fidelity > bare.mean_fidelity);
    }

    #[test]
    fn zero_delay_and_dead_time_are_ideal() {
        let code = pairing_code(6, 0.0).unwrap();
        let ideal = grover_closed_form(10);
        for r in [
            grover_delay(&code, 0.5, 0.0, 500, 2).unwrap(),
            grover_deadtime(&code, 0.5, 0.0, 500, 2).unwrap(),
        ] {
            assert!((r.mean_fidelity - ideal).abs() <= 3.0 * r.std_error + 1e-9);
            assert!(r.mean_jump_count > 0.0);
        }
    }

    #[test]
    fn long_delay_and_dead_time_lose_fidelity() {
        let code = pairing_code(6, 0.0).unwrap();
        let base = grover_delay(&code, 0.5, 0.0, 1000, 9)
            .unwrap()
            .mean_fidelity;
        let late = grover_delay(&code, 0.5, 4.0, 1000, 9).unwrap();
        assert!(late.mean_fidelity < base - 3.0 * late.std_error);
        let blind = grover_deadtime(&code, 0.5, 1.0, 1000, 9).unwrap();
        assert!(blind.mean_fidelity < base - 3.0 * blind.std_error);
    }

    #[test]
    fn delayed_single_jump_memory_is_restored() {
        let code = pairing_code(4, 0.0).unwrap();
        let table = RecoveryTable::for_code(&code).unwrap();
        let model = DecayModel::uniform(4, 1.0).unwrap();
        let h = SparseOperator::zero(4).unwrap();
        let psi0 = code.uniform_superposition();
        for delay in [0.05, 0.3, 0.8] {
            let detector = Detector::new(&table, 4, 0.0, delay, 0.0).unwrap();
            let mut singles = 0;
            for i in 0..400 {
                let rec = sample_trajectory(
                    &psi0,
                    &h,
                    &model,
                    1.0,
                    &detector,
                    &mut trajectory_stream(13, i),
                )
                .unwrap();
                if rec.events.len() == 1 && rec.survived {
                    singles += 1;
                    assert!((fidelity(&rec.final_state, &psi0).unwrap() - 1.0).abs() < 1e-9);
                }
            }
            assert!(singles > 20);
        }
    }

    #[test]
    fn dead_time_hides_close_jumps() {
        let code = pairing_code(4, 0.0).unwrap();
        let table = RecoveryTable::for_code(&code).unwrap();
        let detector = Detector::new(&table, 4, 0.0, 0.0, 0.5).unwrap();
        let mut rng = trajectory_stream(0, 0);
        let first = detector.on_jump(
            &JumpContext {
                time: 1.0,
                position: 2,
                last_detection: None,
            },
            &mut rng,
        );
        assert_eq!(first.reported, Some(2));
        let blind = detector.on_jump(
            &JumpContext {
                time: 1.3,
                position: 3,
                last_detection: Some(1.0),
            },
            &mut rng,
        );
        assert_eq!(blind.reported, None);
        let later = detector.on_jump(
            &JumpContext {
                time: 1.6,
                position: 3,
                last_detection: Some(1.0),
            },
            &mut rng,
        );
        assert_eq!(later.reported, Some(3));
        assert!(detector.recovery(3).is_some());
    }
}
