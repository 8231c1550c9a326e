//! Incidence structures, permutation-group orbits and spontaneous emission
//! error designs (SEEDs).
//!
//! Blocks are subsets of the points `1..=N` and are stored as [`BasisState`]
//! bit masks, so a block doubles as the ket whose excited qubits it lists.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::lindblad::JumpSet;
use crate::qstate::{weight_subspace, BasisState};

/// A point set `{1..N}` with a list of blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct IncidenceStructure {
    n_points: usize,
    blocks: Vec<BasisState>,
}

impl IncidenceStructure {
    pub fn new(n_points: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let blocks = blocks
            .iter()
            .map(|b| BasisState::from_positions(n_points, b))
            .collect::<Result<_>>()?;
        Ok(IncidenceStructure { n_points, blocks })
    }

    pub fn from_blocks(n_points: usize, blocks: Vec<BasisState>) -> Result<Self> {
        if blocks.iter().any(|b| b.n_qubits() != n_points) {
            return domain("block defined over a different point set");
        }
        Ok(IncidenceStructure { n_points, blocks })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn blocks(&self) -> &[BasisState] {
        &self.blocks
    }

    /// The common block size, if all blocks have one.
    pub fn constant_block_size(&self) -> Option<usize> {
        let first = self.blocks.first()?.weight();
        self.blocks
            .iter()
            .all(|b| b.weight() == first)
            .then_some(first)
    }

    /// `|B_E|`: number of blocks containing every point of `set`.
    pub fn blocks_through(&self, set: &JumpSet) -> usize {
        let m = set.mask(self.n_points);
        self.blocks.iter().filter(|b| b.bits() & m == m).count()
    }
}

/// Outcome of a d-regularity check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Regularity {
    /// Every d-subset lies in exactly `lambda` blocks.
    Regular { lambda: usize },
    /// Two d-subsets with different block counts.
    Violation {
        first: (JumpSet, usize),
        second: (JumpSet, usize),
    },
}

/// Checks whether `structure` is d-regular.
pub fn regularity(structure: &IncidenceStructure, d: usize) -> Result<Regularity> {
    if structure.blocks.is_empty() {
        return domain("regularity of an empty incidence structure");
    }
    let min_size = structure
        .blocks
        .iter()
        .map(|b| b.weight())
        .min()
        .unwrap_or(0);
    if d == 0 || d > min_size {
        return domain(format!("regularity order {d} outside 1..={min_size}"));
    }
    let mut first: Option<(JumpSet, usize)> = None;
    for set in JumpSet::all_up_to(structure.n_points, d)
        .into_iter()
        .filter(|s| s.len() == d)
    {
        let count = structure.blocks_through(&set);
        match &first {
            None => first = Some((set, count)),
            Some((_, c0)) if *c0 != count => {
                return Ok(Regularity::Violation {
                    first: first.unwrap(),
                    second: (set, count),
                });
            }
            _ => {}
        }
    }
    Ok(Regularity::Regular {
        lambda: first.map_or(0, |(_, c)| c),
    })
}

/// A permutation of `{1..degree}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn identity(degree: usize) -> Self {
        Permutation {
            images: (1..=degree).collect(),
        }
    }

    /// Builds a permutation from the images of `1..=degree`.
    pub fn from_images(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n + 1];
        for &i in &images {
            if i == 0 || i > n || seen[i] {
                return domain(format!("{images:?} is not a bijection on 1..={n}"));
            }
            seen[i] = true;
        }
        Ok(Permutation { images })
    }

    /// Parses cycle notation such as `(1 2)(3 4)` or `(1,2,3)`; the empty
    /// string or `()` is the identity.
    pub fn parse_cycles(degree: usize, text: &str) -> Result<Self> {
        let mut images: Vec<usize> = (1..=degree).collect();
        let mut used = vec![false; degree + 1];
        let mut rest = text.trim();
        while !rest.is_empty() {
            let Some(inner) = rest.strip_prefix('(') else {
                return domain(format!("malformed cycle notation {text:?}"));
            };
            let Some(close) = inner.find(')') else {
                return domain(format!("unclosed cycle in {text:?}"));
            };
            let cycle: Vec<usize> = inner[..close]
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<usize>()
                        .map_err(|_| crate::Error::Domain(format!("bad point {s:?} in {text:?}")))
                })
                .collect::<Result<_>>()?;
            for &p in &cycle {
                if p == 0 || p > degree {
                    return domain(format!("point {p} outside 1..={degree} in {text:?}"));
                }
                if used[p] {
                    return domain(format!("point {p} appears twice in {text:?}"));
                }
                used[p] = true;
            }
            for (k, &p) in cycle.iter().enumerate() {
                images[p - 1] = cycle[(k + 1) % cycle.len()];
            }
            rest = inner[close + 1..].trim_start();
        }
        Ok(Permutation { images })
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    pub fn image(&self, point: usize) -> usize {
        self.images[point - 1]
    }

    /// Image of a point set.
    pub fn apply_set(&self, set: BasisState) -> BasisState {
        let n = self.degree();
        let positions: Vec<usize> = set.positions().into_iter().map(|p| self.image(p)).collect();
        BasisState::from_positions(n, &positions).expect("permutation preserves the point set")
    }

    /// `self` after `first`: `x -> self(first(x))`.
    pub fn after(&self, first: &Permutation) -> Permutation {
        Permutation {
            images: first.images.iter().map(|&p| self.image(p)).collect(),
        }
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut seen = vec![false; self.degree() + 1];
        let mut wrote = false;
        for start in 1..=self.degree() {
            if seen[start] || self.image(start) == start {
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut p = self.image(start);
            while p != start {
                seen[p] = true;
                cycle.push(p);
                p = self.image(p);
            }
            let body: Vec<String> = cycle.iter().map(usize::to_string).collect();
            write!(f, "({})", body.join(" "))?;
            wrote = true;
        }
        if !wrote {
            f.write_str("()")?;
        }
        Ok(())
    }
}

/// Group generated by a list of permutations of `{1..degree}`.
#[derive(Clone, Debug, PartialEq)]
pub struct PermGroup {
    degree: usize,
    generators: Vec<Permutation>,
}

impl PermGroup {
    pub fn new(degree: usize, generators: Vec<Permutation>) -> Result<Self> {
        if let Some(g) = generators.iter().find(|g| g.degree() != degree) {
            return domain(format!(
                "generator {g} has degree {} instead of {degree}",
                g.degree()
            ));
        }
        Ok(PermGroup { degree, generators })
    }

    pub fn from_cycles(degree: usize, generators: &[&str]) -> Result<Self> {
        let gens = generators
            .iter()
            .map(|g| Permutation::parse_cycles(degree, g))
            .collect::<Result<_>>()?;
        Self::new(degree, gens)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn generators(&self) -> &[Permutation] {
        &self.generators
    }
}

/// Orbit of `seed_block` under the group, sorted by bit mask.
pub fn orbit(group: &PermGroup, seed_block: BasisState) -> Result<Vec<BasisState>> {
    if seed_block.n_qubits() != group.degree {
        return domain(format!(
            "seed block lives on {} points, group acts on {}",
            seed_block.n_qubits(),
            group.degree
        ));
    }
    let mut seen = BTreeSet::from([seed_block]);
    let mut queue = VecDeque::from([seed_block]);
    while let Some(b) = queue.pop_front() {
        for g in &group.generators {
            let image = g.apply_set(b);
            if seen.insert(image) {
                queue.push_back(image);
            }
        }
    }
    Ok(seen.into_iter().collect())
}

/// Order of the group, by breadth-first closure of the identity.
pub fn group_order(group: &PermGroup) -> Result<usize> {
    if group.degree > 16 {
        return domain(format!(
            "group order enumeration supports degree <= 16, got {}",
            group.degree
        ));
    }
    let id = Permutation::identity(group.degree);
    let mut seen = HashSet::from([id.clone()]);
    let mut queue = VecDeque::from([id]);
    while let Some(p) = queue.pop_front() {
        for g in &group.generators {
            let q = g.after(&p);
            if seen.insert(q.clone()) {
                queue.push_back(q);
            }
        }
    }
    Ok(seen.len())
}

/// `K` disjoint families of `w`-subsets intended to satisfy the local
/// multiplicity condition up to order `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeedFamily {
    n_points: usize,
    w: usize,
    d: usize,
    families: Vec<Vec<BasisState>>,
}

/// JSON form: `{n_points, w, d, families: [[[positions...] ...] ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedFamilyJson {
    pub n_points: usize,
    pub w: usize,
    pub d: usize,
    pub families: Vec<Vec<Vec<usize>>>,
}

impl SeedFamily {
    /// Each family is sorted by bit mask; the order of the families is kept.
    pub fn new(
        n_points: usize,
        w: usize,
        d: usize,
        families: Vec<Vec<BasisState>>,
    ) -> Result<Self> {
        if families.is_empty() || families.iter().any(Vec::is_empty) {
            return domain("a SEED needs at least one family and no empty families");
        }
        if w > n_points {
            return domain(format!("block size {w} exceeds point count {n_points}"));
        }
        for b in families.iter().flatten() {
            if b.n_qubits() != n_points || b.weight() != w {
                return domain(format!("block {b} is not a {w}-subset of 1..={n_points}"));
            }
        }
        let families = families
            .into_iter()
            .map(|mut f| {
                f.sort();
                f
            })
            .collect();
        Ok(SeedFamily {
            n_points,
            w,
            d,
            families,
        })
    }

    pub fn from_positions(
        n_points: usize,
        w: usize,
        d: usize,
        families: &[Vec<Vec<usize>>],
    ) -> Result<Self> {
        let families = families
            .iter()
            .map(|f| {
                f.iter()
                    .map(|b| BasisState::from_positions(n_points, b))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n_points, w, d, families)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.families.len()
    }

    pub fn families(&self) -> &[Vec<BasisState>] {
        &self.families
    }

    pub fn with_order(&self, d: usize) -> SeedFamily {
        SeedFamily { d, ..self.clone() }
    }

    /// Fails if any block occurs twice, within a family or across families.
    pub fn check_disjoint(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for (i, f) in self.families.iter().enumerate() {
            for b in f {
                if !seen.insert(*b) {
                    return domain(format!(
                        "block {b} repeated (family {}); SEED families must be disjoint",
                        i + 1
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn to_json_value(&self) -> SeedFamilyJson {
        SeedFamilyJson {
            n_points: self.n_points,
            w: self.w,
            d: self.d,
            families: self
                .families
                .iter()
                .map(|f| f.iter().map(|b| b.positions()).collect())
                .collect(),
        }
    }

    pub fn from_json_value(json: &SeedFamilyJson) -> Result<Self> {
        Self::from_positions(json.n_points, json.w, json.d, &json.families)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("SEED serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let json: SeedFamilyJson = serde_json::from_str(text)
            .map_err(|e| crate::Error::Domain(format!("invalid SEED JSON: {e}")))?;
        Self::from_json_value(&json)
    }
}

/// Exact local multiplicities `lambda(E)` for every `|E| <= d`.
pub type LambdaTable = BTreeMap<JumpSet, Ratio<u64>>;

/// A set `E` whose relative block counts differ between two families.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeedViolation {
    pub set: JumpSet,
    pub family_i: usize,
    pub family_j: usize,
    pub lambda_i: Ratio<u64>,
    pub lambda_j: Ratio<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SeedCheck {
    Valid(LambdaTable),
    Violation(SeedViolation),
}

impl SeedCheck {
    pub fn is_valid(&self) -> bool {
        matches!(self, SeedCheck::Valid(_))
    }
}

/// Checks `|B^(i)_E| / |B^(i)|` is the same for every family and every `|E| <= d`.
///
/// Families are reported 0-based in the violation.
pub fn verify_seed(seed: &SeedFamily) -> Result<SeedCheck> {
    seed.check_disjoint()?;
    let mut table = LambdaTable::new();
    for set in JumpSet::all_up_to(seed.n_points, seed.d) {
        let m = set.mask(seed.n_points);
        let mut reference: Option<Ratio<u64>> = None;
        for (i, f) in seed.families.iter().enumerate() {
            let hits = f.iter().filter(|b| b.bits() & m == m).count() as u64;
            let lambda = Ratio::new(hits, f.len() as u64);
            match reference {
                None => reference = Some(lambda),
                Some(r) if r != lambda => {
                    return Ok(SeedCheck::Violation(SeedViolation {
                        set,
                        family_i: 0,
                        family_j: i,
                        lambda_i: r,
                        lambda_j: lambda,
                    }));
                }
                _ => {}
            }
        }
        table.insert(set, reference.expect("at least one family"));
    }
    Ok(SeedCheck::Valid(table))
}

/// Generators of the order-48 group on eight points used for the `(8,3,3)_4` code.
pub const GROUP_833_GENERATORS: [&str; 5] = [
    "(1 2)(3 4)",
    "(1 4)(2 3)",
    "(5 6)(7 8)",
    "(5 8)(6 7)",
    "(1 2 3)(5 6 7)",
];

/// Orbit representatives of the three families.
pub const SEEDS_833: [[usize; 4]; 3] = [[1, 2, 5, 6], [1, 3, 5, 6], [1, 4, 5, 6]];

pub fn group_833() -> PermGroup {
    PermGroup::from_cycles(8, &GROUP_833_GENERATORS).expect("valid generators")
}

/// The 3-SEED(8,4,3) made of three orbits under [`group_833`].
pub fn construct_833() -> SeedFamily {
    let g = group_833();
    let families = SEEDS_833
        .iter()
        .map(|s| {
            orbit(&g, BasisState::from_positions(8, s).expect("valid seed"))
                .expect("degree matches")
        })
        .collect();
    SeedFamily::new(8, 4, 3, families).expect("orbits are 4-subsets")
}

/// Complementary pairs `{x, x̄}` of weight-`N/2` words, smaller member first,
/// sorted by the smaller member.
pub fn complementary_pairs(n: usize) -> Result<Vec<(BasisState, BasisState)>> {
    if n < 2 || !n.is_multiple_of(2) {
        return domain(format!(
            "complementary pairing needs an even qubit count >= 2, got {n}"
        ));
    }
    Ok(weight_subspace(n, n / 2)?
        .into_iter()
        .filter(|x| *x < x.complement())
        .map(|x| (x, x.complement()))
        .collect())
}

/// Pairing families `{{x, x̄}}` as a 1-SEED(N, N/2, C(N-1, N/2-1)).
pub fn pairing_seed(n: usize) -> Result<SeedFamily> {
    let families = complementary_pairs(n)?
        .into_iter()
        .map(|(x, y)| vec![x, y])
        .collect();
    SeedFamily::new(n, n / 2, 1, families)
}

/// Named SEEDs shipped with the toolkit.
pub fn bundled_seeds() -> Vec<(&'static str, SeedFamily)> {
    let single = SeedFamily::from_positions(2, 2, 2, &[vec![vec![1, 2]]]).expect("valid");
    vec![
        ("builtin-833", construct_833()),
        ("pairing-4", pairing_seed(4).expect("even")),
        ("pairing-6", pairing_seed(6).expect("even")),
        ("pairing-8", pairing_seed(8).expect("even")),
        ("single-block-2", single),
    ]
}
