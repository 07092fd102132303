//! Formal concepts of a binary relation, and how they line up with the
//! eigenvectors of the reduced densities of the uniform-on-edges state.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qprob::{build_state, schmidt, Alphabet, JointDistribution};

/// Widest side a [`Relation`] may have.
pub const MAX_SIDE: usize = 64;

/// Widest side [`formal_concepts`] will enumerate.
pub const MAX_ENUMERATION_SIDE: usize = 24;

/// Cosine at or above which an eigenvector counts as the characteristic
/// vector of a set.
pub const EXACT_MATCH_COSINE: f64 = 1.0 - 1e-9;

const SUPPORT_EPSILON: f64 = 1e-9;

/// A subset of `{0, …, 63}` as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Subset(u64);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_SIDE);
        if n == MAX_SIDE {
            Subset(u64::MAX)
        } else {
            Subset((1u64 << n) - 1)
        }
    }

    pub fn from_bits(bits: u64) -> Self {
        Subset(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, i: usize) -> bool {
        i < MAX_SIDE && self.0 >> i & 1 == 1
    }

    pub fn insert(&mut self, i: usize) {
        assert!(i < MAX_SIDE);
        self.0 |= 1 << i;
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn intersection(self, other: Subset) -> Subset {
        Subset(self.0 & other.0)
    }

    pub fn is_subset(self, other: Subset) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..MAX_SIDE).filter(move |i| self.contains(*i))
    }

    pub fn indices(self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<usize> for Subset {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = Subset::EMPTY;
        for i in iter {
            s.insert(i);
        }
        s
    }
}

impl TryFrom<Vec<usize>> for Subset {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        if let Some(i) = v.iter().find(|i| **i >= MAX_SIDE) {
            return Err(Error::invalid(format!("subset index {i} out of range")));
        }
        Ok(v.into_iter().collect())
    }
}

impl From<Subset> for Vec<usize> {
    fn from(s: Subset) -> Self {
        s.indices()
    }
}

/// `R ⊆ X × Y`, stored both by rows (`a(x)`) and by columns (`b(y)`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    x_alphabet: Alphabet,
    y_alphabet: Alphabet,
    rows: Vec<Subset>,
    cols: Vec<Subset>,
}

impl Relation {
    pub fn new(x_alphabet: Alphabet, y_alphabet: Alphabet, incidence: &[Vec<bool>]) -> Result<Self> {
        let (nx, ny) = (x_alphabet.len(), y_alphabet.len());
        if nx > MAX_SIDE || ny > MAX_SIDE {
            return Err(Error::TooLarge(format!(
                "relation is {nx}x{ny}, at most {MAX_SIDE} per side"
            )));
        }
        if incidence.len() != nx || incidence.iter().any(|r| r.len() != ny) {
            return Err(Error::dim(format!("incidence table must be {nx}x{ny}")));
        }
        let rows: Vec<Subset> = incidence
            .iter()
            .map(|r| r.iter().enumerate().filter(|(_, b)| **b).map(|(j, _)| j).collect())
            .collect();
        let cols = (0..ny)
            .map(|j| (0..nx).filter(|i| rows[*i].contains(j)).collect())
            .collect();
        Ok(Self {
            x_alphabet,
            y_alphabet,
            rows,
            cols,
        })
    }

    /// Alphabets are collected from the pairs in first-appearance order.
    /// Repeated pairs are allowed and collapse to one edge.
    pub fn from_pairs<S: AsRef<str>>(pairs: &[(S, S)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::invalid("relation has no pairs"));
        }
        let mut xs: Vec<String> = Vec::new();
        let mut ys: Vec<String> = Vec::new();
        let mut idx = Vec::with_capacity(pairs.len());
        for (x, y) in pairs {
            let i = position_or_push(&mut xs, x.as_ref());
            let j = position_or_push(&mut ys, y.as_ref());
            idx.push((i, j));
        }
        let mut incidence = vec![vec![false; ys.len()]; xs.len()];
        for (i, j) in idx {
            incidence[i][j] = true;
        }
        Self::new(Alphabet::new(xs)?, Alphabet::new(ys)?, &incidence)
    }

    pub fn x_alphabet(&self) -> &Alphabet {
        &self.x_alphabet
    }

    pub fn y_alphabet(&self) -> &Alphabet {
        &self.y_alphabet
    }

    pub fn related(&self, i: usize, j: usize) -> bool {
        self.rows[i].contains(j)
    }

    /// `a(x_i)`: the attributes of object `i`.
    pub fn row(&self, i: usize) -> Subset {
        self.rows[i]
    }

    /// `b(y_j)`: the objects having attribute `j`.
    pub fn col(&self, j: usize) -> Subset {
        self.cols[j]
    }

    pub fn edge_count(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    pub fn all_x(&self) -> Subset {
        Subset::full(self.x_alphabet.len())
    }

    pub fn all_y(&self) -> Subset {
        Subset::full(self.y_alphabet.len())
    }

    pub fn x_labels(&self, s: Subset) -> Vec<String> {
        s.iter().map(|i| self.x_alphabet.symbol(i).to_string()).collect()
    }

    pub fn y_labels(&self, s: Subset) -> Vec<String> {
        s.iter().map(|j| self.y_alphabet.symbol(j).to_string()).collect()
    }

    pub fn x_subset(&self, labels: &[&str]) -> Result<Subset> {
        labels
            .iter()
            .map(|l| {
                self.x_alphabet
                    .index_of(l)
                    .ok_or_else(|| Error::invalid(format!("unknown object {l:?}")))
            })
            .collect()
    }

    pub fn y_subset(&self, labels: &[&str]) -> Result<Subset> {
        labels
            .iter()
            .map(|l| {
                self.y_alphabet
                    .index_of(l)
                    .ok_or_else(|| Error::invalid(format!("unknown attribute {l:?}")))
            })
            .collect()
    }
}

fn position_or_push(v: &mut Vec<String>, s: &str) -> usize {
    match v.iter().position(|x| x == s) {
        Some(i) => i,
        None => {
            v.push(s.to_string());
            v.len() - 1
        }
    }
}

/// Attributes shared by every object in `a`; `f(∅) = Y`.
pub fn galois_f(r: &Relation, a: Subset) -> Subset {
    a.iter()
        .fold(r.all_y(), |acc, i| acc.intersection(r.rows[i]))
}

/// Objects having every attribute in `b`; `g(∅) = X`.
pub fn galois_g(r: &Relation, b: Subset) -> Subset {
    b.iter()
        .fold(r.all_x(), |acc, j| acc.intersection(r.cols[j]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FormalConcept {
    pub extent: Subset,
    pub intent: Subset,
}

impl FormalConcept {
    pub fn is_trivial(&self) -> bool {
        self.extent.is_empty() || self.intent.is_empty()
    }
}

/// Every concept, sorted by extent size and then by extent indices.
pub fn formal_concepts(r: &Relation) -> Result<Vec<FormalConcept>> {
    let (nx, ny) = (r.x_alphabet.len(), r.y_alphabet.len());
    if nx > MAX_ENUMERATION_SIDE || ny > MAX_ENUMERATION_SIDE {
        return Err(Error::TooLarge(format!(
            "concept enumeration supports at most {MAX_ENUMERATION_SIDE} per side, got {nx}x{ny}"
        )));
    }
    // The extents are exactly the intersections of columns (with X as the
    // empty intersection), and dually for intents. Close the smaller family.
    let mut concepts: Vec<FormalConcept> = if ny <= nx {
        intersection_closure(r.all_x(), &r.cols)
            .map(|extent| FormalConcept {
                extent,
                intent: galois_f(r, extent),
            })
            .collect()
    } else {
        intersection_closure(r.all_y(), &r.rows)
            .map(|intent| FormalConcept {
                extent: galois_g(r, intent),
                intent,
            })
            .collect()
    };
    concepts.sort_by(|a, b| {
        a.extent
            .len()
            .cmp(&b.extent.len())
            .then_with(|| a.extent.indices().cmp(&b.extent.indices()))
    });
    Ok(concepts)
}

/// Concepts with nonempty extent and nonempty intent.
pub fn nontrivial_concepts(r: &Relation) -> Result<Vec<FormalConcept>> {
    Ok(formal_concepts(r)?
        .into_iter()
        .filter(|c| !c.is_trivial())
        .collect())
}

fn intersection_closure(top: Subset, generators: &[Subset]) -> impl Iterator<Item = Subset> {
    let mut family: BTreeSet<u64> = BTreeSet::from([top.bits()]);
    for g in generators {
        let next: Vec<u64> = family.iter().map(|s| s & g.bits()).collect();
        family.extend(next);
    }
    family.into_iter().map(Subset::from_bits)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptLabels {
    pub extent: Vec<String>,
    pub intent: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenpairMatch {
    pub eigenvalue: f64,
    /// Eigenvector of the density on `X`.
    pub x_vector: Vec<f64>,
    /// Eigenvector of the density on `Y`.
    pub y_vector: Vec<f64>,
    pub x_support: Vec<String>,
    pub y_support: Vec<String>,
    /// Index into the report's concept list.
    pub best_concept: Option<usize>,
    pub x_cosine: f64,
    pub y_cosine: f64,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenConceptReport {
    pub concepts: Vec<ConceptLabels>,
    pub eigenpairs: Vec<EigenpairMatch>,
    pub matched: usize,
    pub unmatched_eigenpairs: usize,
    pub unmatched_concepts: usize,
    /// Every eigenpair matches a distinct concept exactly and no concept is
    /// left over.
    pub coincide: bool,
}

/// Pairs each eigenpair of the uniform-on-edges state with the nontrivial
/// concept whose characteristic vectors it resembles most.
pub fn compare_eigen_concepts(r: &Relation) -> Result<EigenConceptReport> {
    let concepts = nontrivial_concepts(r)?;
    if r.edge_count() == 0 {
        return Err(Error::invalid("relation has no edges"));
    }
    let (nx, ny) = (r.x_alphabet.len(), r.y_alphabet.len());
    let mut w = vec![0.0; nx * ny];
    for i in 0..nx {
        for j in r.rows[i].iter() {
            w[i * ny + j] = 1.0;
        }
    }
    let pi = JointDistribution::from_weights(r.x_alphabet.clone(), r.y_alphabet.clone(), w)?;
    let sd = schmidt(&build_state(&pi))?;

    let mut exact_hits = vec![false; concepts.len()];
    let mut eigenpairs = Vec::with_capacity(sd.rank());
    for (k, sigma) in sd.coefficients.iter().enumerate() {
        let xv = sd.x_vectors.column(k);
        let yv = sd.y_vectors.column(k);
        let mut best: Option<(usize, f64, f64)> = None;
        for (c, concept) in concepts.iter().enumerate() {
            let cx = cosine_to_indicator(&xv, concept.extent);
            let cy = cosine_to_indicator(&yv, concept.intent);
            if best.is_none_or(|(_, bx, by)| cx + cy > bx + by) {
                best = Some((c, cx, cy));
            }
        }
        let (best_concept, x_cosine, y_cosine) = match best {
            Some((c, cx, cy)) => (Some(c), cx, cy),
            None => (None, 0.0, 0.0),
        };
        let exact = x_cosine >= EXACT_MATCH_COSINE && y_cosine >= EXACT_MATCH_COSINE;
        if exact {
            exact_hits[best_concept.expect("exact implies a concept")] = true;
        }
        eigenpairs.push(EigenpairMatch {
            eigenvalue: sigma * sigma,
            x_support: support(&xv, &r.x_alphabet),
            y_support: support(&yv, &r.y_alphabet),
            x_vector: xv,
            y_vector: yv,
            best_concept,
            x_cosine,
            y_cosine,
            exact,
        });
    }

    let matched = eigenpairs.iter().filter(|e| e.exact).count();
    let unmatched_concepts = exact_hits.iter().filter(|h| !**h).count();
    let distinct = exact_hits.iter().filter(|h| **h).count() == matched;
    let unmatched_eigenpairs = eigenpairs.len() - matched;
    Ok(EigenConceptReport {
        concepts: concepts
            .iter()
            .map(|c| ConceptLabels {
                extent: r.x_labels(c.extent),
                intent: r.y_labels(c.intent),
            })
            .collect(),
        coincide: unmatched_eigenpairs == 0 && unmatched_concepts == 0 && distinct,
        eigenpairs,
        matched,
        unmatched_eigenpairs,
        unmatched_concepts,
    })
}

/// Cosine between `|v|` (entrywise) and the indicator vector of `s`.
fn cosine_to_indicator(v: &[f64], s: Subset) -> f64 {
    if s.is_empty() {
        return 0.0;
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return 0.0;
    }
    let dot: f64 = s.iter().map(|i| v[i].abs()).sum();
    dot / (norm * (s.len() as f64).sqrt())
}

fn support(v: &[f64], labels: &Alphabet) -> Vec<String> {
    v.iter()
        .enumerate()
        .filter(|(_, x)| x.abs() > SUPPORT_EPSILON)
        .map(|(i, _)| labels.symbol(i).to_string())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_edge() -> Relation {
        Relation::from_pairs(&[
            ("orange", "fruit"),
            ("green", "fruit"),
            ("purple", "vegetable"),
        ])
        .unwrap()
    }

    fn four_edge() -> Relation {
        Relation::from_pairs(&[
            ("orange", "fruit"),
            ("green", "fruit"),
            ("green", "vegetable"),
            ("purple", "vegetable"),
        ])
        .unwrap()
    }

    fn labels(r: &Relation, c: &FormalConcept) -> (Vec<String>, Vec<String>) {
        (r.x_labels(c.extent), r.y_labels(c.intent))
    }

    fn strs(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn galois_maps_on_three_edges() {
        let r = three_edge();
        let og = r.x_subset(&["orange", "green"]).unwrap();
        let op = r.x_subset(&["orange", "purple"]).unwrap();
        assert_eq!(r.y_labels(galois_f(&r, og)), strs(&["fruit"]));
        assert!(galois_f(&r, op).is_empty());
        assert_eq!(galois_f(&r, Subset::EMPTY), r.all_y());

        let fruit = r.y_subset(&["fruit"]).unwrap();
        assert_eq!(r.x_labels(galois_g(&r, fruit)), strs(&["orange", "green"]));
        assert!(galois_g(&r, r.all_y()).is_empty());
        assert_eq!(galois_g(&r, Subset::EMPTY), r.all_x());
    }

    #[test]
    fn three_edge_concepts() {
        let r = three_edge();
        let all = formal_concepts(&r).unwrap();
        assert_eq!(all.len(), 4);
        let nt = nontrivial_concepts(&r).unwrap();
        let got: Vec<_> = nt.iter().map(|c| labels(&r, c)).collect();
        assert_eq!(
            got,
            vec![
                (strs(&["purple"]), strs(&["vegetable"])),
                (strs(&["orange", "green"]), strs(&["fruit"])),
            ]
        );
    }

    #[test]
    fn four_edge_concepts() {
        let r = four_edge();
        let nt = nontrivial_concepts(&r).unwrap();
        let got: Vec<_> = nt.iter().map(|c| labels(&r, c)).collect();
        assert_eq!(
            got,
            vec![
                (strs(&["green"]), strs(&["fruit", "vegetable"])),
                (strs(&["orange", "green"]), strs(&["fruit"])),
                (strs(&["green", "purple"]), strs(&["vegetable"])),
            ]
        );
        // (X, ∅) is the only trivial concept here.
        assert_eq!(formal_concepts(&r).unwrap().len(), 4);
    }

    #[test]
    fn empty_relation_has_extreme_concepts() {
        let r = Relation::new(
            Alphabet::new(["a", "b"]).unwrap(),
            Alphabet::new(["u"]).unwrap(),
            &[vec![false], vec![false]],
        )
        .unwrap();
        let all = formal_concepts(&r).unwrap();
        assert_eq!(
            all,
            vec![
                FormalConcept {
                    extent: Subset::EMPTY,
                    intent: r.all_y()
                },
                FormalConcept {
                    extent: r.all_x(),
                    intent: Subset::EMPTY
                },
            ]
        );
        assert!(compare_eigen_concepts(&r).is_err());
    }

    #[test]
    fn size_limits() {
        let n = MAX_ENUMERATION_SIDE + 1;
        let r = Relation::new(
            Alphabet::indexed(n).unwrap(),
            Alphabet::indexed(1).unwrap(),
            &vec![vec![true]; n],
        )
        .unwrap();
        assert!(matches!(formal_concepts(&r), Err(Error::TooLarge(_))));
        assert!(Relation::new(
            Alphabet::indexed(65).unwrap(),
            Alphabet::indexed(1).unwrap(),
            &vec![vec![true]; 65]
        )
        .is_err());
        assert!(Relation::from_pairs::<&str>(&[]).is_err());
    }

    #[test]
    fn three_edge_eigenpairs_coincide() {
        let report = compare_eigen_concepts(&three_edge()).unwrap();
        assert_eq!(report.eigenpairs.len(), 2);
        assert!((report.eigenpairs[0].eigenvalue - 2.0 / 3.0).abs() < 1e-10);
        assert!((report.eigenpairs[1].eigenvalue - 1.0 / 3.0).abs() < 1e-10);
        assert_eq!(report.eigenpairs[0].x_support, strs(&["orange", "green"]));
        assert_eq!(report.eigenpairs[0].y_support, strs(&["fruit"]));
        assert_eq!(report.eigenpairs[1].x_support, strs(&["purple"]));
        assert!(report.coincide);
        assert_eq!(report.matched, 2);
    }

    #[test]
    fn four_edge_eigenpairs_do_not_coincide() {
        let report = compare_eigen_concepts(&four_edge()).unwrap();
        assert_eq!(report.eigenpairs.len(), 2);
        assert!((report.eigenpairs[0].eigenvalue - 0.75).abs() < 1e-10);
        assert!((report.eigenpairs[1].eigenvalue - 0.25).abs() < 1e-10);
        assert_eq!(report.concepts.len(), 3);
        assert!(!report.coincide);
        assert_eq!(report.matched, 0);
        assert_eq!(report.unmatched_concepts, 3);
    }

    #[test]
    fn complete_bipartite_components_coincide() {
        let mut pairs = Vec::new();
        for x in ["a", "b"] {
            for y in ["u", "v", "w"] {
                pairs.push((x, y));
            }
        }
        for x in ["c", "d", "e"] {
            pairs.push((x, "z"));
        }
        let report = compare_eigen_concepts(&Relation::from_pairs(&pairs).unwrap()).unwrap();
        assert!(report.coincide, "{report:#?}");
        assert!((report.eigenpairs[0].eigenvalue - 6.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn serde_report() {
        let report = compare_eigen_concepts(&four_edge()).unwrap();
        let s = serde_json::to_string(&report).unwrap();
        assert_eq!(serde_json::from_str::<EigenConceptReport>(&s).unwrap(), report);
        let c = formal_concepts(&four_edge()).unwrap()[0];
        assert_eq!(serde_json::to_string(&c).unwrap(), r#"{"extent":[1],"intent":[0,1]}"#);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn relation() -> impl Strategy<Value = Relation> {
            (1usize..9, 1usize..9).prop_flat_map(|(nx, ny)| {
                prop::collection::vec(prop::collection::vec(prop::bool::weighted(0.4), ny), nx)
                    .prop_map(move |inc| {
                        Relation::new(
                            Alphabet::indexed(nx).unwrap(),
                            Alphabet::indexed(ny).unwrap(),
                            &inc,
                        )
                        .unwrap()
                    })
            })
        }

        fn with_subsets() -> impl Strategy<Value = (Relation, u64, u64, u64)> {
            relation().prop_flat_map(|r| {
                let mx = r.all_x().bits();
                let my = r.all_y().bits();
                (Just(r), 0..=mx, 0..=mx, 0..=my)
            })
        }

        proptest! {
            #[test]
            fn galois_connection((r, a, a2, b) in with_subsets()) {
                let (a, a2, b) = (Subset::from_bits(a), Subset::from_bits(a2), Subset::from_bits(b));
                prop_assert_eq!(a.is_subset(galois_g(&r, b)), b.is_subset(galois_f(&r, a)));
                let small = a.intersection(a2);
                prop_assert!(galois_f(&r, a).is_subset(galois_f(&r, small)));
                prop_assert_eq!(galois_f(&r, galois_g(&r, galois_f(&r, a))), galois_f(&r, a));
                prop_assert_eq!(galois_g(&r, galois_f(&r, galois_g(&r, b))), galois_g(&r, b));
            }

            #[test]
            fn concepts_are_fixed_points(r in relation()) {
                let concepts = formal_concepts(&r).unwrap();
                for c in &concepts {
                    prop_assert_eq!(galois_f(&r, c.extent), c.intent);
                    prop_assert_eq!(galois_g(&r, c.intent), c.extent);
                }
                let nx = r.x_alphabet().len();
                let ny = r.y_alphabet().len();
                let fix_x = (0..1u64 << nx)
                    .map(Subset::from_bits)
                    .filter(|a| galois_g(&r, galois_f(&r, *a)) == *a)
                    .count();
                let fix_y = (0..1u64 << ny)
                    .map(Subset::from_bits)
                    .filter(|b| galois_f(&r, galois_g(&r, *b)) == *b)
                    .count();
                prop_assert_eq!(fix_x, concepts.len());
                prop_assert_eq!(fix_y, concepts.len());
            }
        }
    }
}
