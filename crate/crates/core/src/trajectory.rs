//! Monte-Carlo wavefunction unraveling with pluggable detection and recovery.
//!
//! Every trajectory owns a ChaCha8 stream selected by `(master_seed, index)`,
//! and ensembles reduce fixed-size chunks in index order, so results do not
//! depend on how many worker threads execute them.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{domain, numeric, Result};
use crate::lindblad::{effective_hamiltonian, lindblad_op, DecayModel};
use crate::qstate::{
    expm_apply, propagate_in_place, DensityMatrix, ExpWorkspace, SparseOperator, StateVector,
};

const UNDERFLOW: f64 = 1e-300;
const CHUNK: usize = 256;
const MAX_STEP_NORM: f64 = 0.5;

/// Random stream for trajectory `index` of an ensemble seeded by `master_seed`.
pub fn trajectory_stream(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

#[derive(Clone, Debug, PartialEq)]
pub struct JumpEvent {
    pub time: f64,
    /// Qubit that actually decayed.
    pub position: usize,
    /// Position reported by the detector, if the jump was seen.
    pub reported: Option<usize>,
    pub recovered_at: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub events: Vec<JumpEvent>,
    /// Normalized state at `t_final`.
    pub final_state: StateVector,
    /// True when every jump was followed by a recovery.
    pub survived: bool,
}

/// What the handler sees when a jump has just been applied.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpContext {
    pub time: f64,
    pub position: usize,
    /// Time of the most recent reported jump.
    pub last_detection: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpResponse {
    pub reported: Option<usize>,
    /// Delay after which the recovery for `reported` is applied; `None` skips recovery.
    pub recovery_delay: Option<f64>,
}

/// Detection and recovery policy consulted at every jump.
pub trait JumpHandler: Sync {
    fn on_jump(&self, ctx: &JumpContext, rng: &mut ChaCha8Rng) -> JumpResponse;

    /// Unitary applied when a jump reported at `position` is recovered.
    fn recovery(&self, position: usize) -> Option<&SparseOperator>;
}

/// Reports every jump and never corrects it.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoRecovery;

impl JumpHandler for NoRecovery {
    fn on_jump(&self, ctx: &JumpContext, _rng: &mut ChaCha8Rng) -> JumpResponse {
        JumpResponse {
            reported: Some(ctx.position),
            recovery_delay: None,
        }
    }

    fn recovery(&self, _position: usize) -> Option<&SparseOperator> {
        None
    }
}

/// Reports the true position and applies its recovery at once.
#[derive(Clone, Copy, Debug)]
pub struct PerfectRecovery<'a> {
    pub table: &'a crate::recovery::RecoveryTable,
}

impl JumpHandler for PerfectRecovery<'_> {
    fn on_jump(&self, ctx: &JumpContext, _rng: &mut ChaCha8Rng) -> JumpResponse {
        JumpResponse {
            reported: Some(ctx.position),
            recovery_delay: Some(0.0),
        }
    }

    fn recovery(&self, position: usize) -> Option<&SparseOperator> {
        self.table.unitary(position)
    }
}

/// Operators shared by every trajectory of one run.
struct Sampler<'a> {
    h_eff: SparseOperator,
    h_norm: f64,
    channels: Vec<(usize, SparseOperator)>,
    max_substep: f64,
    tolerance: f64,
    handler: &'a dyn JumpHandler,
}

impl<'a> Sampler<'a> {
    fn new(
        h: &SparseOperator,
        model: &DecayModel,
        t_final: f64,
        handler: &'a dyn JumpHandler,
    ) -> Result<Self> {
        if h.n_qubits() != model.n_qubits() {
            return domain("Hamiltonian and decay model act on registers of different size");
        }
        if !(t_final.is_finite() && t_final >= 0.0) {
            return domain(format!(
                "final time must be finite and non-negative, got {t_final}"
            ));
        }
        let h_eff = effective_hamiltonian(h, model)?;
        let channels = (1..=model.n_qubits())
            .filter(|&a| model.kappa(a) > 0.0)
            .map(|a| lindblad_op(model, a).map(|l| (a, l)))
            .collect::<Result<_>>()?;
        // one Taylor block per substep; the bisection fixes jump times independently
        let h_norm = h_eff.one_norm();
        let max_substep = if h_norm > 0.0 {
            MAX_STEP_NORM / h_norm
        } else {
            f64::INFINITY
        };
        let tolerance = if model.kappa_max() > 0.0 {
            1e-9 / model.kappa_max()
        } else {
            0.0
        };
        Ok(Sampler {
            h_norm,
            h_eff,
            channels,
            max_substep,
            tolerance,
            handler,
        })
    }

    fn run(
        &self,
        psi0: &StateVector,
        t_final: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<TrajectoryRecord> {
        if psi0.n_qubits() != self.h_eff.n_qubits() {
            return domain("initial state acts on a register of different size");
        }
        if (psi0.norm_sqr() - 1.0).abs() > 1e-9 {
            return domain(format!(
                "initial state must be normalized, has norm^2 {}",
                psi0.norm_sqr()
            ));
        }
        let dim = psi0.dim();
        let mut ws = ExpWorkspace::new(dim);
        let mut psi: Vec<C64> = psi0.amplitudes().to_vec();
        let mut trial = vec![C64::new(0.0, 0.0); dim];
        let mut threshold = 1.0 - rng.random::<f64>();
        let mut t = 0.0;
        let mut events: Vec<JumpEvent> = Vec::new();
        // (due time, event index, reported position), kept sorted by due time
        let mut pending: Vec<(f64, usize, usize)> = Vec::new();
        let mut last_detection = None;

        loop {
            let stop = pending.first().map_or(t_final, |p| p.0.min(t_final));
            let mut jumped = false;
            while t < stop {
                let h = self.max_substep.min(stop - t);
                trial.copy_from_slice(&psi);
                propagate_in_place(&self.h_eff, self.h_norm, &mut trial, h, &mut ws)?;
                if norm_sqr(&trial) >= threshold {
                    std::mem::swap(&mut psi, &mut trial);
                    t = if stop - t <= h { stop } else { t + h };
                    continue;
                }
                // norm^2 is non-increasing, so bisect the crossing inside [t, t + h]
                let (mut lo, mut hi) = (0.0, h);
                while hi - lo > self.tolerance {
                    let mid = 0.5 * (lo + hi);
                    trial.copy_from_slice(&psi);
                    propagate_in_place(&self.h_eff, self.h_norm, &mut trial, mid - lo, &mut ws)?;
                    if norm_sqr(&trial) >= threshold {
                        std::mem::swap(&mut psi, &mut trial);
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                t += lo;
                jumped = true;
                break;
            }
            if norm_sqr(&psi) < UNDERFLOW {
                return numeric("trajectory norm underflow");
            }
            if jumped {
                let position = self.jump(&mut psi, &mut trial, rng)?;
                threshold = 1.0 - rng.random::<f64>();
                let ctx = JumpContext {
                    time: t,
                    position,
                    last_detection,
                };
                let response = self.handler.on_jump(&ctx, rng);
                let index = events.len();
                events.push(JumpEvent {
                    time: t,
                    position,
                    reported: response.reported,
                    recovered_at: None,
                });
                if let Some(reported) = response.reported {
                    last_detection = Some(t);
                    if let Some(delay) = response.recovery_delay {
                        if delay <= 0.0 {
                            self.recover(&mut psi, &mut trial, reported, t, &mut events[index]);
                        } else {
                            let due = t + delay;
                            let at = pending.partition_point(|p| p.0 <= due);
                            pending.insert(at, (due, index, reported));
                        }
                    }
                }
                continue;
            }
            while let Some(&(due, index, reported)) = pending.first() {
                if due > t {
                    break;
                }
                pending.remove(0);
                self.recover(&mut psi, &mut trial, reported, due, &mut events[index]);
            }
            if t >= t_final {
                break;
            }
        }

        let norm = norm_sqr(&psi).sqrt();
        let amps = psi.iter().map(|a| a / norm).collect();
        let final_state = StateVector::from_amplitudes(psi0.n_qubits(), amps)?;
        let survived = events.iter().all(|e| e.recovered_at.is_some());
        Ok(TrajectoryRecord {
            events,
            final_state,
            survived,
        })
    }

    /// Picks a channel with probability proportional to `||L_alpha psi||^2`,
    /// applies it and renormalizes.
    fn jump(
        &self,
        psi: &mut [C64],
        scratch: &mut [C64],
        rng: &mut ChaCha8Rng,
    ) -> Result<usize> {
        let mut weights = Vec::with_capacity(self.channels.len());
        for (_, l) in &self.channels {
            l.apply_slice(psi, scratch);
            weights.push(norm_sqr(scratch));
        }
        let total: f64 = weights.iter().sum();
        if !(total > UNDERFLOW) {
            return numeric("jump fired but no channel has weight");
        }
        let u = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = weights
            .iter()
            .rposition(|&w| w > 0.0)
            .expect("positive total");
        for (k, w) in weights.iter().enumerate() {
            acc += w;
            if u < acc && *w > 0.0 {
                chosen = k;
                break;
            }
        }
        let (alpha, l) = &self.channels[chosen];
        l.apply_slice(psi, scratch);
        let n = weights[chosen].sqrt();
        for (p, s) in psi.iter_mut().zip(scratch.iter()) {
            *p = s / n;
        }
        Ok(*alpha)
    }

    fn recover(
        &self,
        psi: &mut Vec<C64>,
        scratch: &mut Vec<C64>,
        reported: usize,
        time: f64,
        event: &mut JumpEvent,
    ) {
        if let Some(u) = self.handler.recovery(reported) {
            u.apply_slice(psi, scratch);
            std::mem::swap(psi, scratch);
            event.recovered_at = Some(time);
        }
    }
}

fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

/// One quantum trajectory from `psi0` to `t_final` by the waiting-time method.
pub fn sample_trajectory(
    psi0: &StateVector,
    h: &SparseOperator,
    model: &DecayModel,
    t_final: f64,
    handler: &dyn JumpHandler,
    rng: &mut ChaCha8Rng,
) -> Result<TrajectoryRecord> {
    Sampler::new(h, model, t_final, handler)?.run(psi0, t_final, rng)
}

/// What an ensemble measures on each final state.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    /// Fidelity is `|<target|psi(t_final)>|^2`.
    pub target: StateVector,
    /// Also average `|psi><psi|`.
    pub density: bool,
}

impl Observable {
    pub fn fidelity(target: &StateVector) -> Self {
        Observable {
            target: target.clone(),
            density: false,
        }
    }

    pub fn with_density(target: &StateVector) -> Self {
        Observable {
            target: target.clone(),
            density: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleResult {
    /// Trajectories that completed; failures are excluded from every statistic.
    pub n_traj: usize,
    pub failures: usize,
    pub mean_fidelity: f64,
    pub std_error: f64,
    pub mean_jump_count: f64,
    pub jump_count_std_error: f64,
    /// Fraction of trajectories in which every jump was recovered.
    pub survival_fraction: f64,
    pub rho_estimate: Option<DensityMatrix>,
    /// Entrywise standard errors of `rho_estimate`, real and imaginary parts separately.
    pub rho_std_error: Option<Vec<C64>>,
}

/// Streaming mean and second central moment.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.n;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(&mut self, other: &Moments) {
        if other.n == 0.0 {
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n / n;
        self.m2 += other.m2 + delta * delta * self.n * other.n / n;
        self.n = n;
    }

    fn std_error(&self) -> f64 {
        if self.n < 2.0 {
            return 0.0;
        }
        (self.m2 / (self.n - 1.0) / self.n).sqrt()
    }
}

#[derive(Clone, Debug, Default)]
struct Partial {
    failures: usize,
    fidelity: Moments,
    jumps: Moments,
    survived: usize,
    rho: Vec<Moments>,
}

impl Partial {
    fn merge(&mut self, other: &Partial) {
        self.failures += other.failures;
        self.fidelity.merge(&other.fidelity);
        self.jumps.merge(&other.jumps);
        self.survived += other.survived;
        if self.rho.is_empty() {
            self.rho = other.rho.clone();
        } else {
            for (a, b) in self.rho.iter_mut().zip(&other.rho) {
                a.merge(b);
            }
        }
    }
}

/// Runs `n_traj` trajectories in parallel on the current rayon pool.
#[allow(clippy::too_many_arguments)]
pub fn ensemble_average(
    psi0: &StateVector,
    h: &SparseOperator,
    model: &DecayModel,
    t_final: f64,
    handler: &dyn JumpHandler,
    n_traj: usize,
    master_seed: u64,
    observable: &Observable,
) -> Result<EnsembleResult> {
    if n_traj == 0 {
        return domain("n_traj must be at least 1");
    }
    if observable.target.n_qubits() != psi0.n_qubits() {
        return domain("fidelity target acts on a register of different size");
    }
    let sampler = Sampler::new(h, model, t_final, handler)?;
    let dim = psi0.dim();
    let n_chunks = n_traj.div_ceil(CHUNK);
    let partials: Vec<Partial> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut part = Partial::default();
            if observable.density {
                part.rho = vec![Moments::default(); 2 * dim * dim];
            }
            for index in c * CHUNK..((c + 1) * CHUNK).min(n_traj) {
                let mut rng = trajectory_stream(master_seed, index as u64);
                let record = match sampler.run(psi0, t_final, &mut rng) {
                    Ok(r) => r,
                    Err(_) => {
                        part.failures += 1;
                        continue;
                    }
                };
                let overlap = observable
                    .target
                    .inner(&record.final_state)
                    .expect("same register");
                part.fidelity.push(overlap.norm_sqr());
                part.jumps.push(record.events.len() as f64);
                part.survived += usize::from(record.survived);
                if observable.density {
                    let amps = record.final_state.amplitudes();
                    for (r, a) in amps.iter().enumerate() {
                        for (col, b) in amps.iter().enumerate() {
                            let z = a * b.conj();
                            let k = 2 * (r * dim + col);
                            part.rho[k].push(z.re);
                            part.rho[k + 1].push(z.im);
                        }
                    }
                }
            }
            part
        })
        .collect();

    let mut total = Partial::default();
    for p in &partials {
        total.merge(p);
    }
    let ok = total.fidelity.n as usize;
    if ok == 0 {
        return numeric(format!("all {n_traj} trajectories failed"));
    }
    let (rho_estimate, rho_std_error) = if observable.density {
        let mean = total
            .rho
            .chunks(2)
            .map(|m| C64::new(m[0].mean, m[1].mean))
            .collect();
        let err = total
            .rho
            .chunks(2)
            .map(|m| C64::new(m[0].std_error(), m[1].std_error()))
            .collect();
        (
            Some(DensityMatrix::from_entries(psi0.n_qubits(), mean)?),
            Some(err),
        )
    } else {
        (None, None)
    };
    Ok(EnsembleResult {
        n_traj: ok,
        failures: total.failures,
        mean_fidelity: total.fidelity.mean.clamp(0.0, 1.0),
        std_error: total.fidelity.std_error(),
        mean_jump_count: total.jumps.mean,
        jump_count_std_error: total.jumps.std_error(),
        survival_fraction: total.survived as f64 / ok as f64,
        rho_estimate,
        rho_std_error,
    })
}

/// `p(t; t_n alpha_n, ..., t_1 alpha_1) = ||e^{-i H_eff (t - t_n)} L_{alpha_n} ... L_{alpha_1} e^{-i H_eff t_1} psi0||^2`.
///
/// Only the jumps of the record enter; recoveries are ignored.
pub fn record_probability(
    psi0: &StateVector,
    h: &SparseOperator,
    model: &DecayModel,
    record: &TrajectoryRecord,
    t: f64,
) -> Result<f64> {
    let mut prev = 0.0;
    for e in &record.events {
        if e.time < prev || e.time > t || e.time.is_nan() {
            return domain(format!(
                "record times must be sorted within [0, {t}], found {} after {prev}",
                e.time
            ));
        }
        prev = e.time;
    }
    let h_eff = effective_hamiltonian(h, model)?;
    let mut psi = psi0.clone();
    let mut prev = 0.0;
    for e in &record.events {
        psi = expm_apply(&h_eff, &psi, e.time - prev)?;
        psi = lindblad_op(model, e.position)?.apply(&psi)?;
        prev = e.time;
    }
    Ok(expm_apply(&h_eff, &psi, t - prev)?.norm_sqr())
}
