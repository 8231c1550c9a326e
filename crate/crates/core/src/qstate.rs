//! Hilbert-space primitives for `N` distinguishable qubits.
//!
//! States and density matrices are stored densely over the `2^N` computational
//! basis; operators are stored sparsely by row. Position `alpha` (1-based)
//! corresponds to bit `N - alpha` of the basis index, so kets read left to
//! right as qubits `1..=N`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64 as C64;

use crate::error::{domain, numeric, Result};

/// Largest supported register size.
pub const MAX_QUBITS: usize = 24;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Bit mask selecting qubit `alpha` (1-based, position 1 = most significant bit).
#[inline]
pub fn position_mask(n_qubits: usize, alpha: usize) -> u32 {
    debug_assert!(alpha >= 1 && alpha <= n_qubits);
    1u32 << (n_qubits - alpha)
}

fn check_qubits(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return domain(format!("qubit count {n_qubits} outside 1..={MAX_QUBITS}"));
    }
    Ok(())
}

/// A computational basis vector `|x_1 ... x_N>`, equivalently the subset of
/// excited positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisState {
    bits: u32,
    n_qubits: u8,
}

impl BasisState {
    pub fn new(n_qubits: usize, bits: u32) -> Result<Self> {
        check_qubits(n_qubits)?;
        if n_qubits < 32 && bits >> n_qubits != 0 {
            return domain(format!(
                "bit word {bits:#b} has bits above qubit count {n_qubits}"
            ));
        }
        Ok(BasisState {
            bits,
            n_qubits: n_qubits as u8,
        })
    }

    /// Basis state with exactly the given (1-based) positions excited.
    pub fn from_positions(n_qubits: usize, positions: &[usize]) -> Result<Self> {
        check_qubits(n_qubits)?;
        let mut bits = 0u32;
        for &alpha in positions {
            if alpha == 0 || alpha > n_qubits {
                return domain(format!("position {alpha} outside 1..={n_qubits}"));
            }
            bits |= position_mask(n_qubits, alpha);
        }
        Ok(BasisState {
            bits,
            n_qubits: n_qubits as u8,
        })
    }

    /// Parses a ket label such as `0110` or `|0110>`.
    pub fn parse(label: &str) -> Result<Self> {
        let digits = label
            .trim()
            .trim_start_matches('|')
            .trim_end_matches(['>', '⟩']);
        let mut bits = 0u32;
        for c in digits.chars() {
            bits <<= 1;
            match c {
                '0' => {}
                '1' => bits |= 1,
                _ => return domain(format!("invalid ket label {label:?}")),
            }
        }
        BasisState::new(digits.len(), bits)
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    pub fn index(self) -> usize {
        self.bits as usize
    }

    pub fn n_qubits(self) -> usize {
        self.n_qubits as usize
    }

    pub fn weight(self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_excited(self, alpha: usize) -> bool {
        self.bits & position_mask(self.n_qubits(), alpha) != 0
    }

    /// Excited positions in increasing order.
    pub fn positions(self) -> Vec<usize> {
        (1..=self.n_qubits())
            .filter(|&a| self.is_excited(a))
            .collect()
    }

    /// Bitwise complement (sigma_x on every qubit).
    pub fn complement(self) -> Self {
        let mask = if self.n_qubits == 32 {
            u32::MAX
        } else {
            (1u32 << self.n_qubits) - 1
        };
        BasisState {
            bits: !self.bits & mask,
            n_qubits: self.n_qubits,
        }
    }

    /// True when every position excited in `other` is excited here.
    pub fn contains(self, other: BasisState) -> bool {
        self.bits & other.bits == other.bits
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for alpha in 1..=self.n_qubits() {
            f.write_str(if self.is_excited(alpha) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// All weight-`w` basis states of `N` qubits in ascending numeric order.
pub fn weight_subspace(n_qubits: usize, w: usize) -> Result<Vec<BasisState>> {
    check_qubits(n_qubits)?;
    if w > n_qubits {
        return domain(format!("weight {w} exceeds qubit count {n_qubits}"));
    }
    if w == 0 {
        return Ok(vec![BasisState {
            bits: 0,
            n_qubits: n_qubits as u8,
        }]);
    }
    let limit = 1u64 << n_qubits;
    let mut out = Vec::new();
    // Gosper's hack: next larger word with the same popcount.
    let mut x: u64 = (1u64 << w) - 1;
    while x < limit {
        out.push(BasisState {
            bits: x as u32,
            n_qubits: n_qubits as u8,
        });
        let c = x & x.wrapping_neg();
        let r = x + c;
        x = (((r ^ x) >> 2) / c) | r;
    }
    Ok(out)
}

/// Pure state over the `2^N` computational basis; may be unnormalized.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn zeros(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        Ok(StateVector {
            n_qubits,
            amps: vec![ZERO; 1 << n_qubits],
        })
    }

    pub fn basis(state: BasisState) -> Self {
        let mut amps = vec![ZERO; 1 << state.n_qubits()];
        amps[state.index()] = ONE;
        StateVector {
            n_qubits: state.n_qubits(),
            amps,
        }
    }

    pub fn from_amplitudes(n_qubits: usize, amps: Vec<C64>) -> Result<Self> {
        check_qubits(n_qubits)?;
        if amps.len() != 1 << n_qubits {
            return domain(format!(
                "expected {} amplitudes for {n_qubits} qubits, got {}",
                1usize << n_qubits,
                amps.len()
            ));
        }
        Ok(StateVector { n_qubits, amps })
    }

    /// Builds a state from `(ket, amplitude)` pairs; repeated kets accumulate.
    pub fn from_kets(n_qubits: usize, kets: &[(BasisState, C64)]) -> Result<Self> {
        let mut psi = StateVector::zeros(n_qubits)?;
        for &(ket, a) in kets {
            if ket.n_qubits() != n_qubits {
                return domain("ket size does not match the register");
            }
            psi.amps[ket.index()] += a;
        }
        Ok(psi)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn amplitude(&self, ket: BasisState) -> C64 {
        self.amps[ket.index()]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if !(n.is_finite() && n > 0.0) {
            return numeric(format!("cannot normalize a state with norm^2 = {n}"));
        }
        Ok(self * C64::new(1.0 / n.sqrt(), 0.0))
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.n_qubits != other.n_qubits {
            return domain("inner product between registers of different size");
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Nonzero amplitudes as `(ket, amplitude)` in ascending ket order.
    pub fn support(&self) -> Vec<(BasisState, C64)> {
        let n = self.n_qubits as u8;
        self.amps
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != ZERO)
            .map(|(i, &a)| {
                (
                    BasisState {
                        bits: i as u32,
                        n_qubits: n,
                    },
                    a,
                )
            })
            .collect()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.amps
            .iter()
            .all(|a| a.re.is_finite() && a.im.is_finite())
    }
}

impl Add for &StateVector {
    type Output = StateVector;
    fn add(self, rhs: &StateVector) -> StateVector {
        assert_eq!(self.n_qubits, rhs.n_qubits, "register size mismatch");
        let amps = self
            .amps
            .iter()
            .zip(&rhs.amps)
            .map(|(a, b)| a + b)
            .collect();
        StateVector {
            n_qubits: self.n_qubits,
            amps,
        }
    }
}

impl Sub for &StateVector {
    type Output = StateVector;
    fn sub(self, rhs: &StateVector) -> StateVector {
        assert_eq!(self.n_qubits, rhs.n_qubits, "register size mismatch");
        let amps = self
            .amps
            .iter()
            .zip(&rhs.amps)
            .map(|(a, b)| a - b)
            .collect();
        StateVector {
            n_qubits: self.n_qubits,
            amps,
        }
    }
}

impl Mul<C64> for &StateVector {
    type Output = StateVector;
    fn mul(self, c: C64) -> StateVector {
        StateVector {
            n_qubits: self.n_qubits,
            amps: self.amps.iter().map(|a| a * c).collect(),
        }
    }
}

/// Dense `2^N x 2^N` density matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    dim: usize,
    data: Vec<C64>,
}

impl DensityMatrix {
    pub fn zeros(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        Ok(DensityMatrix {
            n_qubits,
            dim,
            data: vec![ZERO; dim * dim],
        })
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        let mut rho = DensityMatrix::zeros(psi.n_qubits()).expect("valid register");
        rho.add_outer(psi, 1.0);
        rho
    }

    /// Builds a matrix from a row-major entry list.
    pub fn from_entries(n_qubits: usize, data: Vec<C64>) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        if data.len() != dim * dim {
            return domain("density matrix entry count does not match 4^N");
        }
        Ok(DensityMatrix {
            n_qubits,
            dim,
            data,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim + col]
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    /// `self += weight |psi><psi|`.
    pub fn add_outer(&mut self, psi: &StateVector, weight: f64) {
        assert_eq!(psi.n_qubits(), self.n_qubits, "register size mismatch");
        let support = psi.support();
        for &(r, a) in &support {
            let row = r.index() * self.dim;
            for &(c, b) in &support {
                self.data[row + c.index()] += a * b.conj() * weight;
            }
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// `tr(rho^2)`, assuming Hermiticity.
    pub fn purity(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `max |rho - rho^dagger|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// `<psi|rho|psi>` (real part).
    pub fn expectation(&self, psi: &StateVector) -> Result<f64> {
        if psi.n_qubits() != self.n_qubits {
            return domain("expectation value between registers of different size");
        }
        let support = psi.support();
        let mut acc = ZERO;
        for &(r, a) in &support {
            for &(c, b) in &support {
                acc += a.conj() * self.get(r.index(), c.index()) * b;
            }
        }
        Ok(acc.re)
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Whether all eigenvalues are `>= -tol`, checked by a Cholesky
    /// factorisation of `rho + tol * 1`.
    pub fn is_positive_semidefinite(&self, tol: f64) -> bool {
        let n = self.dim;
        let mut l = vec![ZERO; n * n];
        for j in 0..n {
            let mut diag = self.get(j, j).re + tol;
            for k in 0..j {
                diag -= l[j * n + k].norm_sqr();
            }
            if diag < 0.0 {
                return false;
            }
            let ljj = diag.sqrt();
            l[j * n + j] = C64::new(ljj, 0.0);
            for i in (j + 1)..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = if ljj > 0.0 { s / ljj } else { ZERO };
            }
        }
        true
    }
}

/// Sparse complex matrix on the `2^N` dimensional register, stored by row.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    n_qubits: usize,
    rows: Vec<Vec<(usize, C64)>>,
}

impl SparseOperator {
    /// Builds an operator from `(row, col, value)` triples; duplicates add up
    /// and exact zeros are dropped.
    pub fn from_entries<I>(n_qubits: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        let mut acc: BTreeMap<(usize, usize), C64> = BTreeMap::new();
        for (r, c, v) in entries {
            if r >= dim || c >= dim {
                return domain(format!(
                    "entry ({r}, {c}) outside a {dim}-dimensional operator"
                ));
            }
            *acc.entry((r, c)).or_insert(ZERO) += v;
        }
        let mut rows = vec![Vec::new(); dim];
        for ((r, c), v) in acc {
            if v != ZERO {
                rows[r].push((c, v));
            }
        }
        Ok(SparseOperator { n_qubits, rows })
    }

    pub fn from_basis_entries<I>(n_qubits: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (BasisState, BasisState, C64)>,
    {
        Self::from_entries(
            n_qubits,
            entries
                .into_iter()
                .map(|(r, c, v)| (r.index(), c.index(), v)),
        )
    }

    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::from_entries(n_qubits, std::iter::empty())
    }

    pub fn identity(n_qubits: usize) -> Result<Self> {
        Self::from_entries(n_qubits, (0..1usize << n_qubits).map(|i| (i, i, ONE)))
    }

    pub fn diagonal(n_qubits: usize, diag: &[C64]) -> Result<Self> {
        if diag.len() != 1 << n_qubits {
            return domain("diagonal length does not match 2^N");
        }
        Self::from_entries(n_qubits, diag.iter().enumerate().map(|(i, &d)| (i, i, d)))
    }

    /// `|ket><bra|`.
    pub fn outer(ket: &StateVector, bra: &StateVector) -> Result<Self> {
        if ket.n_qubits() != bra.n_qubits() {
            return domain("outer product between registers of different size");
        }
        let ks = ket.support();
        let bs = bra.support();
        Self::from_entries(
            ket.n_qubits(),
            ks.iter().flat_map(|&(r, a)| {
                bs.iter()
                    .map(move |&(c, b)| (r.index(), c.index(), a * b.conj()))
            }),
        )
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.rows[row]
            .iter()
            .find(|(c, _)| *c == col)
            .map_or(ZERO, |&(_, v)| v)
    }

    pub fn row(&self, row: usize) -> &[(usize, C64)] {
        &self.rows[row]
    }

    /// All stored entries as `(row, col, value)`, row-major.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |&(c, v)| (r, c, v)))
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        if psi.n_qubits() != self.n_qubits {
            return domain(format!(
                "operator on {} qubits applied to a {}-qubit state",
                self.n_qubits,
                psi.n_qubits()
            ));
        }
        let mut out = vec![ZERO; self.dim()];
        self.apply_slice(psi.amplitudes(), &mut out);
        Ok(StateVector {
            n_qubits: self.n_qubits,
            amps: out,
        })
    }

    /// `y = self * x`.
    pub(crate) fn apply_slice(&self, x: &[C64], y: &mut [C64]) {
        for (yi, row) in y.iter_mut().zip(&self.rows) {
            let mut s = ZERO;
            for &(c, v) in row {
                s += v * x[c];
            }
            *yi = s;
        }
    }

    pub fn adjoint(&self) -> SparseOperator {
        let mut rows = vec![Vec::new(); self.dim()];
        for (r, c, v) in self.entries() {
            rows[c].push((r, v.conj()));
        }
        SparseOperator {
            n_qubits: self.n_qubits,
            rows,
        }
    }

    /// Matrix product `self * other`.
    pub fn compose(&self, other: &SparseOperator) -> Result<SparseOperator> {
        if self.n_qubits != other.n_qubits {
            return domain("operator product between registers of different size");
        }
        let mut entries = Vec::new();
        for (r, row) in self.rows.iter().enumerate() {
            for &(k, a) in row {
                for &(c, b) in &other.rows[k] {
                    entries.push((r, c, a * b));
                }
            }
        }
        Self::from_entries(self.n_qubits, entries)
    }

    pub fn plus(&self, other: &SparseOperator) -> Result<SparseOperator> {
        if self.n_qubits != other.n_qubits {
            return domain("operator sum between registers of different size");
        }
        Self::from_entries(self.n_qubits, self.entries().chain(other.entries()))
    }

    pub fn scaled(&self, c: C64) -> SparseOperator {
        let rows = self
            .rows
            .iter()
            .map(|row| row.iter().map(|&(j, v)| (j, v * c)).collect())
            .collect();
        SparseOperator {
            n_qubits: self.n_qubits,
            rows,
        }
    }

    /// `max |A - A^dagger|` over all entries.
    pub fn hermiticity_defect(&self) -> f64 {
        self.entries()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        let mut col = vec![0.0f64; self.dim()];
        for (_, c, v) in self.entries() {
            col[c] += v.norm();
        }
        col.into_iter().fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.entries()
            .all(|(_, _, v)| v.re.is_finite() && v.im.is_finite())
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<C64> {
        let n = self.dim();
        let mut d = vec![ZERO; n * n];
        for (r, c, v) in self.entries() {
            d[r * n + c] = v;
        }
        d
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &SparseOperator) -> f64 {
        self.entries()
            .map(|(r, c, v)| (v - other.get(r, c)).norm())
            .chain(other.entries().map(|(r, c, v)| (v - self.get(r, c)).norm()))
            .fold(0.0, f64::max)
    }
}

/// Exact linear action `op * psi`.
pub fn apply(op: &SparseOperator, psi: &StateVector) -> Result<StateVector> {
    op.apply(psi)
}

const TAYLOR_STEP_NORM: f64 = 0.5;
const TAYLOR_MAX_TERMS: usize = 40;

/// Scratch buffers for repeated propagation of same-sized vectors.
#[derive(Debug, Clone)]
pub(crate) struct ExpWorkspace {
    term: Vec<C64>,
    next: Vec<C64>,
}

impl ExpWorkspace {
    pub(crate) fn new(dim: usize) -> Self {
        ExpWorkspace {
            term: vec![ZERO; dim],
            next: vec![ZERO; dim],
        }
    }
}

/// Overwrites `v` with `exp(-i op t) v`.
///
/// The interval is split so that each substep has `||op||_1 h <= 0.5`; each
/// substep sums the Taylor series until the next term falls below `1e-16`
/// relative to the vector.
pub(crate) fn propagate_in_place(
    op: &SparseOperator,
    one_norm: f64,
    v: &mut [C64],
    t: f64,
    ws: &mut ExpWorkspace,
) -> Result<()> {
    if t == 0.0 || one_norm == 0.0 {
        return Ok(());
    }
    let steps = ((one_norm * t / TAYLOR_STEP_NORM).ceil() as usize).max(1);
    let h = t / steps as f64;
    let factor = C64::new(0.0, -h);
    for _ in 0..steps {
        let v_norm: f64 = v.iter().map(|a| a.norm_sqr()).sum();
        if v_norm == 0.0 {
            return Ok(());
        }
        ws.term.copy_from_slice(v);
        let mut converged = false;
        for k in 1..=TAYLOR_MAX_TERMS {
            op.apply_slice(&ws.term, &mut ws.next);
            let scale = factor / k as f64;
            let mut t_norm = 0.0;
            for ((ti, ni), vi) in ws.term.iter_mut().zip(&ws.next).zip(v.iter_mut()) {
                *ti = ni * scale;
                t_norm += ti.norm_sqr();
                *vi += *ti;
            }
            if t_norm <= 1e-32 * v_norm {
                converged = true;
                break;
            }
        }
        if !converged {
            return numeric("Taylor series for the propagator did not converge");
        }
    }
    if v.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
        return numeric("propagated state has non-finite amplitudes");
    }
    Ok(())
}

/// `exp(-i op t) psi` for a possibly non-Hermitian generator `op`.
pub fn expm_apply(op: &SparseOperator, psi: &StateVector, t: f64) -> Result<StateVector> {
    if op.n_qubits() != psi.n_qubits() {
        return domain("propagator and state act on registers of different size");
    }
    if !(t.is_finite() && t >= 0.0) {
        return domain(format!(
            "propagation time must be finite and non-negative, got {t}"
        ));
    }
    if !op.is_finite() || !psi.is_finite() {
        return numeric("non-finite entries in propagator input");
    }
    let mut out = psi.clone();
    let mut ws = ExpWorkspace::new(psi.dim());
    propagate_in_place(op, op.one_norm(), out.amplitudes_mut(), t, &mut ws)?;
    Ok(out)
}

/// `|<b|a>|^2`.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(b.inner(a)?.norm_sqr())
}

/// `<b|rho|b>`.
pub fn fidelity_mixed(rho: &DensityMatrix, b: &StateVector) -> Result<f64> {
    rho.expectation(b)
}
