//! Jump codes `(N, K, d)_w`: construction, verification and dimension bounds.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;
use num_integer::binomial;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::designs::{complementary_pairs, construct_833, pairing_seed, SeedFamily};
use crate::error::{domain, Error, Result};
use crate::lindblad::{jump_product, lindblad_op, DecayModel, JumpSet};
use crate::qstate::{BasisState, StateVector};

const ORTHONORMAL_TOL: f64 = 1e-10;
/// Tolerance for the correction conditions.
pub const CONDITION_TOL: f64 = 1e-10;

/// An orthonormal set of code words inside one constant-weight subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpCode {
    label: String,
    n_qubits: usize,
    weight: usize,
    order: usize,
    phase: f64,
    codewords: Vec<StateVector>,
    seed: Option<SeedFamily>,
}

impl JumpCode {
    /// Validates that every code word is supported on weight-`w` kets and that
    /// the set is orthonormal.
    pub fn from_codewords(
        label: impl Into<String>,
        n_qubits: usize,
        weight: usize,
        order: usize,
        phase: f64,
        codewords: Vec<StateVector>,
    ) -> Result<Self> {
        if codewords.is_empty() {
            return domain("a code needs at least one code word");
        }
        if weight > n_qubits {
            return domain(format!("weight {weight} exceeds qubit count {n_qubits}"));
        }
        for (i, c) in codewords.iter().enumerate() {
            if c.n_qubits() != n_qubits {
                return domain(format!(
                    "code word {i} lives on {} qubits, expected {n_qubits}",
                    c.n_qubits()
                ));
            }
            if let Some((ket, _)) = c.support().into_iter().find(|(k, _)| k.weight() != weight) {
                return domain(format!(
                    "code word {i} has a weight-{} ket {ket}, expected weight {weight}",
                    ket.weight()
                ));
            }
        }
        for i in 0..codewords.len() {
            for j in i..codewords.len() {
                let g = codewords[i].inner(&codewords[j])?;
                let expected = if i == j { 1.0 } else { 0.0 };
                if (g - C64::new(expected, 0.0)).norm() > ORTHONORMAL_TOL {
                    return domain(format!(
                        "code words {i} and {j} are not orthonormal (<c_i|c_j> = {g})"
                    ));
                }
            }
        }
        Ok(JumpCode {
            label: label.into(),
            n_qubits,
            weight,
            order,
            phase,
            codewords,
            seed: None,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn weight(&self) -> usize {
        self.weight
    }

    /// Number of detected jumps the code claims to correct.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dimension(&self) -> usize {
        self.codewords.len()
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn codewords(&self) -> &[StateVector] {
        &self.codewords
    }

    pub fn codeword(&self, i: usize) -> &StateVector {
        &self.codewords[i]
    }

    pub fn seed(&self) -> Option<&SeedFamily> {
        self.seed.as_ref()
    }

    /// `K^{-1/2} sum_i |c_i>`.
    pub fn uniform_superposition(&self) -> StateVector {
        let sum = self
            .codewords
            .iter()
            .skip(1)
            .fold(self.codewords[0].clone(), |acc, c| &acc + c);
        &sum * C64::new(1.0 / (self.dimension() as f64).sqrt(), 0.0)
    }

    pub fn to_json_value(&self) -> JumpCodeJson {
        JumpCodeJson {
            n: self.n_qubits,
            w: self.weight,
            d: self.order,
            k: self.dimension(),
            phase: self.phase,
            label: Some(self.label.clone()),
            codewords: self
                .codewords
                .iter()
                .map(|c| {
                    c.support()
                        .into_iter()
                        .map(|(ket, a)| KetAmplitude {
                            ket: ket.to_string(),
                            re: a.re,
                            im: a.im,
                        })
                        .collect()
                })
                .collect(),
        }
    }

    pub fn from_json_value(json: &JumpCodeJson) -> Result<Self> {
        if json.codewords.len() != json.k {
            return domain(format!(
                "K = {} but {} code words listed",
                json.k,
                json.codewords.len()
            ));
        }
        let codewords = json
            .codewords
            .iter()
            .map(|kets| {
                let entries = kets
                    .iter()
                    .map(|k| {
                        let ket = BasisState::parse(&k.ket)?;
                        if ket.n_qubits() != json.n {
                            return domain(format!(
                                "ket {} does not have {} qubits",
                                k.ket, json.n
                            ));
                        }
                        Ok((ket, C64::new(k.re, k.im)))
                    })
                    .collect::<Result<Vec<_>>>()?;
                StateVector::from_kets(json.n, &entries)
            })
            .collect::<Result<Vec<_>>>()?;
        let label = json
            .label
            .clone()
            .unwrap_or_else(|| format!("({},{},{})_{}", json.n, json.k, json.d, json.w));
        Self::from_codewords(label, json.n, json.w, json.d, json.phase, codewords)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("code serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let json: JumpCodeJson = serde_json::from_str(text)
            .map_err(|e| Error::Domain(format!("invalid code JSON: {e}")))?;
        Self::from_json_value(&json)
    }
}

/// One nonzero amplitude of a serialized code word.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KetAmplitude {
    pub ket: String,
    pub re: f64,
    pub im: f64,
}

/// JSON form `{N, w, d, K, phase, codewords: [[{ket, re, im}...]...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpCodeJson {
    #[serde(rename = "N")]
    pub n: usize,
    pub w: usize,
    pub d: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub phase: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub codewords: Vec<Vec<KetAmplitude>>,
}

/// Equal-amplitude encoding `|c_i> = |B^(i)|^{-1/2} sum_{X in B^(i)} |x>`.
///
/// Code words follow the order of the families.
pub fn encode(seed: &SeedFamily) -> Result<JumpCode> {
    seed.check_disjoint()?;
    let n = seed.n_points();
    let codewords = seed
        .families()
        .iter()
        .map(|f| {
            let a = C64::new(1.0 / (f.len() as f64).sqrt(), 0.0);
            StateVector::from_kets(n, &f.iter().map(|&b| (b, a)).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let label = format!("({},{},{})_{}", n, seed.k(), seed.d(), seed.w());
    let mut code = JumpCode::from_codewords(label, n, seed.w(), seed.d(), 0.0, codewords)?;
    code.seed = Some(seed.clone());
    Ok(code)
}

/// The complementary-pairing one-jump code on an even number of qubits:
/// `(|x> + e^{i phi} |x̄>) / sqrt 2` for every pair with `x < x̄`.
pub fn pairing_code(n: usize, phi: f64) -> Result<JumpCode> {
    let pairs = complementary_pairs(n)?;
    let phase = C64::from_polar(FRAC_1_SQRT_2, phi);
    let a = C64::new(FRAC_1_SQRT_2, 0.0);
    let codewords = pairs
        .iter()
        .map(|&(x, y)| StateVector::from_kets(n, &[(x, a), (y, phase)]))
        .collect::<Result<Vec<_>>>()?;
    let label = format!("({},{},1)_{}", n, pairs.len(), n / 2);
    let mut code = JumpCode::from_codewords(label, n, n / 2, 1, phi, codewords)?;
    if phi == 0.0 {
        code.seed = Some(pairing_seed(n)?);
    }
    Ok(code)
}

/// The `(8,3,3)_4` code encoded from [`construct_833`].
pub fn builtin_833() -> JumpCode {
    encode(&construct_833()).expect("the bundled SEED is disjoint")
}

/// Applies `sigma_x` to every qubit of every code word.
pub fn complement_code(code: &JumpCode) -> JumpCode {
    let n = code.n_qubits;
    let codewords = code
        .codewords
        .iter()
        .map(|c| {
            let flipped: Vec<(BasisState, C64)> = c
                .support()
                .into_iter()
                .map(|(k, a)| (k.complement(), a))
                .collect();
            StateVector::from_kets(n, &flipped).expect("same register")
        })
        .collect();
    let seed = code.seed.as_ref().map(|s| {
        let families = s
            .families()
            .iter()
            .map(|f| f.iter().map(|b| b.complement()).collect())
            .collect();
        SeedFamily::new(n, n - s.w(), s.d(), families).expect("complements are (N-w)-subsets")
    });
    JumpCode {
        label: format!("complement of {}", code.label),
        n_qubits: n,
        weight: n - code.weight,
        order: code.order,
        phase: code.phase,
        codewords,
        seed,
    }
}

/// `lambda(E)` as measured on the code.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaEntry {
    /// `<c_0| J_E^dagger J_E |c_0>` with the physical rates.
    pub scaled: f64,
    /// The rate-free fraction `<c_0| P_E |c_0>`, `P_E` projecting on kets that contain `E`.
    pub raw: f64,
    /// `raw` as an exact ratio when every code word has equal-modulus amplitudes.
    pub exact: Option<Ratio<u64>>,
}

/// An entry of `<c_i| J_E^dagger J_E |c_j>` that breaks `delta_ij lambda(E)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CodeViolation {
    pub i: usize,
    pub j: usize,
    pub set: JumpSet,
    pub value: C64,
}

/// An entry of `<c_i| L_alpha^dagger L_beta |c_j>` that breaks `delta_ij Lambda_{alpha beta}`.
#[derive(Clone, Debug, PartialEq)]
pub struct KnillViolation {
    pub alpha: usize,
    pub beta: usize,
    pub i: usize,
    pub j: usize,
    pub value: C64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KnillReport {
    pub satisfied: bool,
    pub violations: Vec<KnillViolation>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub passed: bool,
    pub order: usize,
    pub lambda_table: BTreeMap<JumpSet, LambdaEntry>,
    pub violations: Vec<CodeViolation>,
    /// Unknown-position condition over all pairs `(alpha, beta)`, reported but
    /// not part of `passed`.
    pub knill: KnillReport,
}

fn equal_weighted(c: &StateVector) -> Option<usize> {
    let support = c.support();
    let first = support.first()?.1.norm_sqr();
    support
        .iter()
        .all(|(_, a)| (a.norm_sqr() - first).abs() < 1e-12)
        .then_some(support.len())
}

fn gram(vectors: &[StateVector]) -> Result<Vec<Vec<C64>>> {
    vectors
        .iter()
        .map(|a| vectors.iter().map(|b| a.inner(b)).collect())
        .collect()
}

/// Evaluates `<c_i| J_E^dagger J_E |c_j> = delta_ij lambda(E)` for every `|E| <= d`,
/// plus the full `<c_i| L_alpha^dagger L_beta |c_j>` table.
pub fn verify_code(code: &JumpCode, d: usize, model: &DecayModel) -> Result<VerificationReport> {
    let n = code.n_qubits;
    if model.n_qubits() != n {
        return domain(format!(
            "decay model has {} qubits, code has {n}",
            model.n_qubits()
        ));
    }
    if d > code.weight {
        return domain(format!(
            "order {d} exceeds code weight {}: J_E with |E| > w annihilates the code",
            code.weight
        ));
    }
    let unit_rates = DecayModel::uniform(n, 1.0)?;
    let supports: Vec<Option<usize>> = code.codewords.iter().map(equal_weighted).collect();
    let mut lambda_table = BTreeMap::new();
    let mut violations = Vec::new();
    for set in JumpSet::all_up_to(n, d) {
        let j_e = jump_product(model, &set)?;
        let images = code
            .codewords
            .iter()
            .map(|c| j_e.apply(c))
            .collect::<Result<Vec<_>>>()?;
        let g = gram(&images)?;
        let reference = g[0][0];
        for i in 0..images.len() {
            for j in 0..images.len() {
                let bad = if i == j {
                    (g[i][i] - reference).norm() > CONDITION_TOL
                } else {
                    g[i][j].norm() > CONDITION_TOL
                };
                if bad {
                    violations.push(CodeViolation {
                        i,
                        j,
                        set: set.clone(),
                        value: g[i][j],
                    });
                }
            }
        }
        let raw = jump_product(&unit_rates, &set)?
            .apply(&code.codewords[0])?
            .norm_sqr();
        let exact = supports[0].map(|size| {
            let m = set.mask(n);
            let hits = code.codewords[0]
                .support()
                .iter()
                .filter(|(k, _)| k.bits() & m == m)
                .count();
            Ratio::new(hits as u64, size as u64)
        });
        lambda_table.insert(
            set,
            LambdaEntry {
                scaled: reference.re,
                raw,
                exact,
            },
        );
    }

    let mut knill_violations = Vec::new();
    let lowered: Vec<Vec<StateVector>> = (1..=n)
        .map(|alpha| {
            let l = lindblad_op(model, alpha)?;
            code.codewords
                .iter()
                .map(|c| l.apply(c))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    for alpha in 1..=n {
        for beta in 1..=n {
            let a = &lowered[alpha - 1];
            let b = &lowered[beta - 1];
            let reference = a[0].inner(&b[0])?;
            for i in 0..a.len() {
                for j in 0..b.len() {
                    let value = a[i].inner(&b[j])?;
                    let bad = if i == j {
                        (value - reference).norm() > CONDITION_TOL
                    } else {
                        value.norm() > CONDITION_TOL
                    };
                    if bad {
                        knill_violations.push(KnillViolation {
                            alpha,
                            beta,
                            i,
                            j,
                            value,
                        });
                    }
                }
            }
        }
    }

    Ok(VerificationReport {
        passed: violations.is_empty(),
        order: d,
        lambda_table,
        violations,
        knill: KnillReport {
            satisfied: knill_violations.is_empty(),
            violations: knill_violations,
        },
    })
}

/// `K <= min{C(N-d, w-d), C(N-d, w)}`.
pub fn upper_bound(n: usize, w: usize, d: usize) -> Result<u128> {
    if d > w || w > n {
        return domain(format!(
            "bound needs 0 <= d <= w <= N, got N={n} w={w} d={d}"
        ));
    }
    let (n, w, d) = (n as u128, w as u128, d as u128);
    let jumped = binomial(n - d, w - d);
    let complemented = if w <= n - d { binomial(n - d, w) } else { 0 };
    Ok(jumped.min(complemented))
}

/// `K <= C(N-d, floor(N/2) - d)`, the bound at the best weight `w = floor(N/2)`.
pub fn max_upper_bound(n: usize, d: usize) -> Result<u128> {
    if d > n / 2 {
        return domain(format!("order {d} exceeds floor(N/2) = {}", n / 2));
    }
    Ok(binomial((n - d) as u128, (n / 2 - d) as u128))
}

/// One row of the bounds table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub d: usize,
    pub w: usize,
    pub upper_bound: u128,
    pub achieved: Option<u128>,
    pub construction: Option<&'static str>,
}

/// Best dimension reached by the constructions implemented here.
fn achieved(n: usize, w: usize, d: usize) -> Option<(u128, &'static str)> {
    if d == 0 {
        return Some((binomial(n as u128, w as u128), "dfs"));
    }
    let mut best: Option<(u128, &'static str)> = None;
    if d == 1 && n.is_multiple_of(2) && w == n / 2 {
        best = Some((binomial(n as u128 - 1, w as u128 - 1), "pairing"));
    }
    if n == 8 && w == 4 && d <= 3 && best.is_none_or(|(k, _)| k < 3) {
        best = Some((3, "builtin-833"));
    }
    best
}

/// Upper bounds for every `N <= n_max`, `d <= d_max`, `d <= w <= N`.
pub fn bounds_table(n_max: usize, d_max: usize) -> Result<Vec<BoundsRow>> {
    if n_max == 0 || n_max > crate::qstate::MAX_QUBITS {
        return domain(format!(
            "N_max must be in 1..={}",
            crate::qstate::MAX_QUBITS
        ));
    }
    let mut rows = Vec::new();
    for n in 1..=n_max {
        for d in 0..=d_max.min(n) {
            for w in d..=n {
                let found = achieved(n, w, d);
                rows.push(BoundsRow {
                    n,
                    d,
                    w,
                    upper_bound: upper_bound(n, w, d)?,
                    achieved: found.map(|(k, _)| k),
                    construction: found.map(|(_, c)| c),
                });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::{verify_seed, SeedCheck};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn kets(labels: &[&str]) -> Vec<BasisState> {
        labels
            .iter()
            .map(|l| BasisState::parse(l).unwrap())
            .collect()
    }

    const C2_KETS: [&str; 12] = [
        "00110110", "00111001", "01010011", "01011100", "01100101", "01101010", "10010101",
        "10011010", "10100011", "10101100", "11000110", "11001001",
    ];
    const C3_KETS: [&str; 12] = [
        "00110101", "00111010", "01010110", "01011001", "01100011", "01101100", "10010011",
        "10011100", "10100110", "10101001", "11000101", "11001010",
    ];
    const C1_KETS: [&str; 12] = [
        "00110011", "00111100", "01010101", "01011010", "01100110", "01101001", "10010110",
        "10011001", "10100101", "10101010", "11000011", "11001100",
    ];

    #[test]
    fn encode_833_reproduces_listed_code_words() {
        let code = builtin_833();
        assert_eq!(
            (
                code.n_qubits(),
                code.dimension(),
                code.order(),
                code.weight()
            ),
            (8, 3, 3, 4)
        );
        let a = 1.0 / 12f64.sqrt();
        for (c, listed) in code.codewords().iter().zip([C1_KETS, C2_KETS, C3_KETS]) {
            let expected: Vec<(BasisState, C64)> = kets(&listed)
                .into_iter()
                .map(|k| (k, C64::new(a, 0.0)))
                .collect();
            assert_eq!(c.support(), expected);
        }
    }

    #[test]
    fn encode_single_block() {
        let seed = SeedFamily::from_positions(2, 2, 1, &[vec![vec![1, 2]]]).unwrap();
        let code = encode(&seed).unwrap();
        assert_eq!(
            code.codeword(0),
            &StateVector::basis(BasisState::parse("11").unwrap())
        );
        let overlapping =
            SeedFamily::from_positions(2, 1, 1, &[vec![vec![1]], vec![vec![1]]]).unwrap();
        assert!(encode(&overlapping).is_err());
    }

    #[test]
    fn pairing_four_matches_listed_code_words() {
        let code = pairing_code(4, 0.0).unwrap();
        let s = C64::new(FRAC_1_SQRT_2, 0.0);
        let listed = [["1100", "0011"], ["0101", "1010"], ["1001", "0110"]];
        assert_eq!(code.dimension(), 3);
        for (c, pair) in code.codewords().iter().zip(listed) {
            let mut expected: Vec<(BasisState, C64)> =
                kets(&pair).into_iter().map(|k| (k, s)).collect();
            expected.sort_by_key(|(k, _)| *k);
            assert_eq!(c.support(), expected);
        }
    }

    #[test]
    fn pairing_code_shapes() {
        assert_eq!(pairing_code(6, 0.3).unwrap().dimension(), 10);
        let two = pairing_code(2, PI / 2.0).unwrap();
        assert_eq!(two.dimension(), 1);
        let c = two.codeword(0);
        assert!(
            (c.amplitude(BasisState::parse("01").unwrap()) - C64::new(FRAC_1_SQRT_2, 0.0)).norm()
                < 1e-15
        );
        assert!(
            (c.amplitude(BasisState::parse("10").unwrap()) - C64::new(0.0, FRAC_1_SQRT_2)).norm()
                < 1e-15
        );
        assert!(pairing_code(5, 0.0).is_err());
        assert!(pairing_code(0, 0.0).is_err());
    }

    #[test]
    fn four_qubit_code_corrects_single_known_jumps_only() {
        let kappa = 0.7;
        let model = DecayModel::uniform(4, kappa).unwrap();
        let report = verify_code(&pairing_code(4, 0.4).unwrap(), 1, &model).unwrap();
        assert!(report.passed);
        for alpha in 1..=4 {
            let entry = &report.lambda_table[&JumpSet::new(4, &[alpha]).unwrap()];
            assert!((entry.scaled - kappa / 2.0).abs() < 1e-12);
            assert_eq!(entry.exact, Some(Ratio::new(1, 2)));
        }
        assert!(!report.knill.satisfied);
        assert!(report.knill.violations.iter().all(|v| v.alpha != v.beta));
    }

    #[test]
    fn four_qubit_code_fails_two_jumps() {
        let model = DecayModel::uniform(4, 1.0).unwrap();
        let report = verify_code(&pairing_code(4, 0.0).unwrap(), 2, &model).unwrap();
        assert!(!report.passed);
        assert!(report.violations.iter().all(|v| v.set.len() == 2));
        assert!(verify_code(&pairing_code(4, 0.0).unwrap(), 3, &model).is_err());
    }

    #[test]
    fn eight_qubit_code_corrects_three_jumps() {
        let report = verify_code(&builtin_833(), 3, &DecayModel::uniform(8, 1.0).unwrap()).unwrap();
        assert!(report.passed, "{:?}", report.violations.first());
        assert_eq!(report.lambda_table.len(), 93);
    }

    #[test]
    fn complement_is_an_involution() {
        let code = builtin_833();
        let twice = complement_code(&complement_code(&code));
        assert_eq!(twice.codewords(), code.codewords());
        assert_eq!(twice.weight(), code.weight());
    }

    #[test]
    fn pairing_code_complement_swaps_pair_members() {
        let phi = 0.9;
        let code = pairing_code(4, phi).unwrap();
        let comp = complement_code(&code);
        assert_eq!(comp.weight(), 2);
        for (a, b) in code.codewords().iter().zip(comp.codewords()) {
            let sa: Vec<BasisState> = a.support().into_iter().map(|(k, _)| k).collect();
            let sb: Vec<BasisState> = b.support().into_iter().map(|(k, _)| k).collect();
            assert_eq!(sa, sb);
            assert!((a.inner(b).unwrap() - C64::new(phi.cos(), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn complement_of_833_still_corrects_three_jumps() {
        let comp = complement_code(&builtin_833());
        assert_eq!(comp.weight(), 4);
        assert!(
            verify_code(&comp, 3, &DecayModel::uniform(8, 1.0).unwrap())
                .unwrap()
                .passed
        );
        let comp_seed = comp.seed().unwrap();
        assert!(verify_seed(comp_seed).unwrap().is_valid());
    }

    #[test]
    fn complement_moves_weight_class() {
        let seed = SeedFamily::from_positions(5, 2, 1, &[vec![vec![1, 2], vec![3, 4]]]).unwrap();
        let comp = complement_code(&encode(&seed).unwrap());
        assert_eq!(comp.weight(), 3);
        assert!(comp
            .codeword(0)
            .support()
            .iter()
            .all(|(k, _)| k.weight() == 3));
    }

    #[test]
    fn bound_examples() {
        assert_eq!(upper_bound(6, 3, 1).unwrap(), 10);
        assert_eq!(upper_bound(8, 4, 3).unwrap(), 5);
        for n in 1..=10 {
            for w in 0..=n {
                assert_eq!(
                    upper_bound(n, w, 0).unwrap(),
                    binomial(n as u128, w as u128)
                );
            }
        }
        assert!(upper_bound(4, 1, 2).is_err());
        assert!(upper_bound(4, 5, 1).is_err());
        assert_eq!(max_upper_bound(6, 1).unwrap(), 10);
        assert!(max_upper_bound(6, 4).is_err());
    }

    #[test]
    fn max_bound_is_the_best_weight() {
        for n in 1..=12usize {
            for d in 0..=n / 2 {
                let best = (d..=n)
                    .map(|w| upper_bound(n, w, d).unwrap())
                    .max()
                    .unwrap();
                assert_eq!(max_upper_bound(n, d).unwrap(), best, "N={n} d={d}");
            }
        }
    }

    #[test]
    fn bounds_table_rows() {
        let rows = bounds_table(8, 3).unwrap();
        let find = |n, w, d| {
            rows.iter()
                .find(|r| (r.n, r.w, r.d) == (n, w, d))
                .unwrap()
                .clone()
        };
        let r = find(4, 2, 1);
        assert_eq!(
            (r.upper_bound, r.achieved, r.construction),
            (3, Some(3), Some("pairing"))
        );
        let r = find(8, 4, 1);
        assert_eq!((r.upper_bound, r.achieved), (35, Some(35)));
        let r = find(8, 4, 3);
        assert_eq!(
            (r.upper_bound, r.achieved, r.construction),
            (5, Some(3), Some("builtin-833"))
        );
        let r = find(6, 3, 1);
        assert_eq!(r.upper_bound, 10);
    }

    #[test]
    fn pairing_dimension_meets_bound() {
        for n in (2..=8).step_by(2) {
            let k = pairing_code(n, 0.0).unwrap().dimension() as u128;
            assert_eq!(k, max_upper_bound(n, 1).unwrap());
            assert_eq!(k, binomial(n as u128 - 1, n as u128 / 2 - 1));
        }
    }

    #[test]
    fn seed_and_code_conditions_agree() {
        for (name, seed) in crate::designs::bundled_seeds() {
            let code = encode(&seed).unwrap();
            let kappa = 0.6;
            let model = DecayModel::uniform(seed.n_points(), kappa).unwrap();
            for d in 1..=seed.w() {
                let seed_check = verify_seed(&seed.with_order(d)).unwrap();
                let report = verify_code(&code, d, &model).unwrap();
                assert_eq!(seed_check.is_valid(), report.passed, "{name} d={d}");
                if let SeedCheck::Valid(table) = seed_check {
                    for (set, lambda) in table {
                        let entry = &report.lambda_table[&set];
                        let expected = *lambda.numer() as f64 / *lambda.denom() as f64;
                        assert_eq!(entry.exact, Some(lambda));
                        assert!(
                            (entry.scaled - expected * kappa.powi(set.len() as i32)).abs() < 1e-10
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn verification_is_phase_independent() {
        let model = DecayModel::uniform(6, 1.0).unwrap();
        let reports: Vec<VerificationReport> = [0.0, PI / 3.0, PI]
            .iter()
            .map(|&phi| verify_code(&pairing_code(6, phi).unwrap(), 1, &model).unwrap())
            .collect();
        for r in &reports {
            assert!(r.passed);
            for (set, e) in &r.lambda_table {
                assert!((e.scaled - reports[0].lambda_table[set].scaled).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn code_words_stay_in_one_weight_class() {
        let codes = [
            pairing_code(4, 0.0).unwrap(),
            pairing_code(8, 1.0).unwrap(),
            builtin_833(),
        ];
        for code in &codes {
            for c in code.codewords() {
                assert!(c.support().iter().all(|(k, _)| k.weight() == code.weight()));
            }
        }
    }

    #[test]
    fn code_json_rejects_inconsistent_input() {
        let mut json = pairing_code(4, 0.0).unwrap().to_json_value();
        json.k = 2;
        assert!(JumpCode::from_json_value(&json).is_err());
        let mut json = pairing_code(4, 0.0).unwrap().to_json_value();
        json.codewords[0][0].ket = "0111".into();
        assert!(JumpCode::from_json_value(&json).is_err());
        assert!(JumpCode::from_json("[1, 2]").is_err());
    }

    proptest! {
        #[test]
        fn code_json_round_trips(half in 1usize..=4, phi in -10.0f64..10.0) {
            let code = pairing_code(2 * half, phi).unwrap();
            let text = code.to_json();
            let back = JumpCode::from_json(&text).unwrap();
            prop_assert_eq!(back.codewords(), code.codewords());
            prop_assert_eq!(back.phase(), phi);
            prop_assert_eq!(back.to_json(), text);
        }
    }
}
