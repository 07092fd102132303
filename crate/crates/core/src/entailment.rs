//! Densities attached to prefix patterns of a corpus, and entailment between
//! them in the Loewner order.
//!
//! The corpus is cut before its last position. Each observed prefix `x` maps to
//! the suffix vector `M|x⟩ = Σ_y √π̂(x, y) |y⟩`, and a pattern's unnormalized
//! density is the sum of the projections onto `M|x⟩` over matching prefixes.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::empirical::{BasisChoice, EmpiricalGraph, SequenceDataset};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::qprob::{accumulate_outer, Alphabet};

/// Minimum eigenvalue accepted as positive semidefinite.
pub const LOEWNER_TOLERANCE: f64 = 1e-10;

/// A partial assignment of tokens to 1-based prefix positions.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Pattern(BTreeMap<usize, String>);

impl Pattern {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, position: usize, token: impl Into<String>) -> Self {
        self.0.insert(position, token.into());
        self
    }

    /// Pins every position to the given tokens, starting at 1.
    pub fn exact<S: AsRef<str>>(tokens: &[S]) -> Self {
        Self(
            tokens
                .iter()
                .enumerate()
                .map(|(i, t)| (i + 1, t.as_ref().to_string()))
                .collect(),
        )
    }

    pub fn assignments(&self) -> &BTreeMap<usize, String> {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True when `self` pins every position `other` pins, to the same token.
    pub fn refines(&self, other: &Pattern) -> bool {
        other
            .0
            .iter()
            .all(|(p, t)| self.0.get(p).is_some_and(|s| s == t))
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(p, t)| format!("pos{p}={t}")).collect();
        f.write_str(&parts.join(","))
    }
}

/// Comma-separated `posK=TOKEN` or `K=TOKEN` items.
impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
            let (pos, token) = item
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("expected POS=TOKEN, got {item:?}")))?;
            let pos = pos.trim();
            let digits = pos.strip_prefix("pos").unwrap_or(pos);
            let position: usize = digits
                .parse()
                .map_err(|_| Error::invalid(format!("bad position {pos:?}")))?;
            if position == 0 {
                return Err(Error::invalid("positions start at 1"));
            }
            let token = token.trim();
            if token.is_empty() {
                return Err(Error::invalid(format!("empty token at position {position}")));
            }
            if map.insert(position, token.to_string()).is_some() {
                return Err(Error::invalid(format!("position {position} assigned twice")));
            }
        }
        if map.is_empty() {
            return Err(Error::invalid("pattern assigns no positions"));
        }
        Ok(Self(map))
    }
}

impl TryFrom<String> for Pattern {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Pattern> for String {
    fn from(p: Pattern) -> Self {
        p.to_string()
    }
}

/// A corpus cut before its final position.
#[derive(Debug, Clone)]
pub struct CorpusState {
    dataset: SequenceDataset,
    graph: EmpiricalGraph,
    /// Observed prefixes as token sequences, aligned with the graph's prefixes.
    prefix_tokens: Vec<Vec<u32>>,
    prefix_counts: Vec<u64>,
    /// `M|x⟩` for each observed prefix.
    columns: Vec<Vec<f64>>,
}

impl CorpusState {
    pub fn new(dataset: SequenceDataset) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let cut = dataset.length().checked_sub(1).filter(|c| *c > 0).ok_or_else(|| {
            Error::invalid("corpus sequences need at least two positions")
        })?;
        let graph = EmpiricalGraph::from_dataset(&dataset, cut, BasisChoice::Observed)?;

        let mut prefix_tokens: Vec<Vec<u32>> = Vec::with_capacity(graph.prefixes().len());
        for s in dataset.samples() {
            if !prefix_tokens.iter().any(|p| p[..] == s[..cut]) {
                prefix_tokens.push(s[..cut].to_vec());
            }
        }
        let n_t = graph.total_edges() as f64;
        let ny = graph.suffixes().len();
        let mut columns = vec![vec![0.0; ny]; prefix_tokens.len()];
        for e in graph.edges() {
            columns[e.prefix][e.suffix] = (e.count as f64 / n_t).sqrt();
        }
        let prefix_counts = graph.prefix_degrees();
        Ok(Self {
            dataset,
            graph,
            prefix_tokens,
            prefix_counts,
            columns,
        })
    }

    pub fn dataset(&self) -> &SequenceDataset {
        &self.dataset
    }

    pub fn cut(&self) -> usize {
        self.dataset.length() - 1
    }

    pub fn suffixes(&self) -> &Alphabet {
        self.graph.suffixes()
    }

    pub fn prefixes(&self) -> &Alphabet {
        self.graph.prefixes()
    }

    pub fn graph(&self) -> &EmpiricalGraph {
        &self.graph
    }

    pub fn total(&self) -> u64 {
        self.graph.total_edges()
    }

    /// Indices of observed prefixes matching every assignment of `pattern`.
    pub fn matching_prefixes(&self, pattern: &Pattern) -> Result<Vec<usize>> {
        let cut = self.cut();
        if let Some(p) = pattern.0.keys().find(|p| **p == 0 || **p > cut) {
            return Err(Error::invalid(format!(
                "position {p} is outside the prefix range 1..={cut}"
            )));
        }
        let alphabet = self.dataset.alphabet();
        let mut wanted = Vec::with_capacity(pattern.0.len());
        for (p, t) in &pattern.0 {
            match alphabet.index_of(t) {
                Some(tok) => wanted.push((p - 1, tok as u32)),
                None => return Err(Error::PatternUnobserved(pattern.to_string())),
            }
        }
        let hits: Vec<usize> = self
            .prefix_tokens
            .iter()
            .enumerate()
            .filter(|(_, x)| wanted.iter().all(|(p, t)| x[*p] == *t))
            .map(|(i, _)| i)
            .collect();
        if hits.is_empty() {
            return Err(Error::PatternUnobserved(pattern.to_string()));
        }
        Ok(hits)
    }

    /// The pattern pinning every position of observed prefix `i`.
    pub fn prefix_pattern(&self, i: usize) -> Pattern {
        let alphabet = self.dataset.alphabet();
        Pattern::exact(
            &self.prefix_tokens[i]
                .iter()
                .map(|t| alphabet.symbol(*t as usize))
                .collect::<Vec<_>>(),
        )
    }

    /// Number of samples whose prefix matches `pattern`.
    pub fn count(&self, pattern: &Pattern) -> Result<u64> {
        Ok(self
            .matching_prefixes(pattern)?
            .iter()
            .map(|i| self.prefix_counts[*i])
            .sum())
    }

    /// `π(refined | pattern)`; `refined` must refine `pattern`.
    pub fn conditional_probability(&self, refined: &Pattern, pattern: &Pattern) -> Result<f64> {
        if !refined.refines(pattern) {
            return Err(Error::invalid(format!("{refined} does not refine {pattern}")));
        }
        Ok(self.count(refined)? as f64 / self.count(pattern)? as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntailmentDensity {
    pub pattern: Pattern,
    pub suffixes: Alphabet,
    pub matrix: Matrix,
    /// Trace before normalization: the empirical probability of the pattern.
    pub weight: f64,
    pub normalized: bool,
}

pub fn pattern_density(cs: &CorpusState, pattern: &Pattern, normalized: bool) -> Result<EntailmentDensity> {
    let hits = cs.matching_prefixes(pattern)?;
    let ny = cs.suffixes().len();
    let mut m = Matrix::zeros(ny, ny);
    for i in hits {
        accumulate_outer(&mut m, &cs.columns[i]);
    }
    let weight = m.trace();
    if normalized {
        m = m.scaled(1.0 / weight);
    }
    Ok(EntailmentDensity {
        pattern: pattern.clone(),
        suffixes: cs.suffixes().clone(),
        matrix: m,
        weight,
        normalized,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionTerm {
    pub prefix: String,
    pub weight: f64,
    pub density: EntailmentDensity,
}

/// `ρ_a = Σ_x π(x | a) ρ_x` over the observed full prefixes matching `a`.
pub fn decompose(cs: &CorpusState, pattern: &Pattern) -> Result<Vec<DecompositionTerm>> {
    let hits = cs.matching_prefixes(pattern)?;
    let total: u64 = hits.iter().map(|i| cs.prefix_counts[*i]).sum();
    hits.into_iter()
        .map(|i| {
            let density = pattern_density(cs, &cs.prefix_pattern(i), true)?;
            Ok(DecompositionTerm {
                prefix: cs.prefixes().symbol(i).to_string(),
                weight: cs.prefix_counts[i] as f64 / total as f64,
                density,
            })
        })
        .collect()
}

/// Smallest eigenvalue of `a − scale·b`.
pub fn loewner_min_eigenvalue(a: &EntailmentDensity, b: &EntailmentDensity, scale: f64) -> Result<f64> {
    if a.suffixes != b.suffixes {
        return Err(Error::BasisMismatch(format!(
            "{:?} vs {:?}",
            a.suffixes, b.suffixes
        )));
    }
    if !(scale.is_finite() && scale >= 0.0) {
        return Err(Error::invalid(format!("scale must be finite and nonnegative, got {scale}")));
    }
    linalg::min_eigenvalue(&a.matrix.sub(&b.matrix.scaled(scale))?)
}

/// `a ≥ scale·b` in the Loewner order.
pub fn loewner_geq(a: &EntailmentDensity, b: &EntailmentDensity, scale: f64) -> Result<bool> {
    Ok(loewner_min_eigenvalue(a, b, scale)? >= -LOEWNER_TOLERANCE)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntailmentVerdict {
    pub pattern: Pattern,
    pub against: Pattern,
    pub normalized: bool,
    pub suffixes: Alphabet,
    pub pattern_density: Matrix,
    pub against_density: Matrix,
    pub scale: f64,
    pub min_eigenvalue: f64,
    pub entails: bool,
}

/// Tests `ρ(pattern) ≥ scale·ρ(against)`.
///
/// Without an explicit scale: unnormalized densities compare at scale 1;
/// normalized ones at `π(against | pattern)` when `against` refines `pattern`,
/// otherwise at 1.
pub fn entail(
    cs: &CorpusState,
    pattern: &Pattern,
    against: &Pattern,
    normalized: bool,
    scale: Option<f64>,
) -> Result<EntailmentVerdict> {
    let a = pattern_density(cs, pattern, normalized)?;
    let b = pattern_density(cs, against, normalized)?;
    let scale = match scale {
        Some(s) => s,
        None if normalized && against.refines(pattern) => {
            cs.conditional_probability(against, pattern)?
        }
        None => 1.0,
    };
    let min_eigenvalue = loewner_min_eigenvalue(&a, &b, scale)?;
    Ok(EntailmentVerdict {
        pattern: pattern.clone(),
        against: against.clone(),
        normalized,
        suffixes: a.suffixes,
        pattern_density: a.matrix,
        against_density: b.matrix,
        scale,
        min_eigenvalue,
        entails: min_eigenvalue >= -LOEWNER_TOLERANCE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::graph_reduced_density;
    use crate::qprob::Keep;

    fn corpus() -> CorpusState {
        CorpusState::new(
            SequenceDataset::from_sentences(&[
                "small ripe orange fruit",
                "large rotten green vegetable",
                "large ripe orange vegetable",
                "small ripe orange vegetable",
                "small rotten orange fruit",
            ])
            .unwrap(),
        )
        .unwrap()
    }

    fn p(s: &str) -> Pattern {
        s.parse().unwrap()
    }

    fn assert_matrix(m: &Matrix, rows: &[Vec<f64>], scale: f64) {
        let want = Matrix::from_rows(rows).unwrap().scaled(scale);
        assert!(m.max_abs_diff(&want) < 1e-15, "got {m:?}, want {want:?}");
    }

    #[test]
    fn pattern_parsing() {
        let a = p("pos3=orange, 2=ripe");
        assert_eq!(a.to_string(), "pos2=ripe,pos3=orange");
        assert_eq!(a, Pattern::new().with(3, "orange").with(2, "ripe"));
        assert!("pos0=x".parse::<Pattern>().is_err());
        assert!("3orange".parse::<Pattern>().is_err());
        assert!("3=a,3=b".parse::<Pattern>().is_err());
        assert!("".parse::<Pattern>().is_err());
        assert!(p("2=ripe,3=orange").refines(&p("3=orange")));
        assert!(!p("3=orange").refines(&p("2=ripe,3=orange")));
    }

    #[test]
    fn orange_densities() {
        let cs = corpus();
        assert_eq!(cs.suffixes().symbols(), &["fruit", "vegetable"]);
        let orange = pattern_density(&cs, &p("pos3=orange"), true).unwrap();
        assert_matrix(&orange.matrix, &[vec![2.0, 1.0], vec![1.0, 2.0]], 0.25);
        assert!((orange.weight - 0.8).abs() < 1e-15);

        let sro = pattern_density(&cs, &p("pos1=small,pos2=ripe,pos3=orange"), true).unwrap();
        assert_matrix(&sro.matrix, &[vec![1.0, 1.0], vec![1.0, 1.0]], 0.5);

        let ro = pattern_density(&cs, &p("pos2=ripe,pos3=orange"), false).unwrap();
        assert_matrix(&ro.matrix, &[vec![1.0, 1.0], vec![1.0, 2.0]], 0.2);
    }

    #[test]
    fn unobserved_patterns() {
        let cs = corpus();
        assert!(matches!(
            pattern_density(&cs, &p("pos3=banana"), true),
            Err(Error::PatternUnobserved(_))
        ));
        assert!(matches!(
            pattern_density(&cs, &p("pos1=large,pos3=fruit"), true),
            Err(Error::PatternUnobserved(_))
        ));
        assert!(pattern_density(&cs, &p("pos4=fruit"), true).is_err());
    }

    #[test]
    fn orange_decomposition() {
        let cs = corpus();
        let terms = decompose(&cs, &p("pos3=orange")).unwrap();
        let got: Vec<(&str, f64)> = terms.iter().map(|t| (t.prefix.as_str(), t.weight)).collect();
        assert_eq!(
            got,
            vec![
                ("small ripe orange", 0.5),
                ("large ripe orange", 0.25),
                ("small rotten orange", 0.25)
            ]
        );
        assert_matrix(&terms[1].density.matrix, &[vec![0.0, 0.0], vec![0.0, 1.0]], 1.0);
        assert_matrix(&terms[2].density.matrix, &[vec![1.0, 0.0], vec![0.0, 0.0]], 1.0);

        let single = decompose(&cs, &p("1=small,2=ripe,3=orange")).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].weight, 1.0);
    }

    #[test]
    fn entailment_chain() {
        let cs = corpus();
        let orange = pattern_density(&cs, &p("3=orange"), false).unwrap();
        let ripe_orange = pattern_density(&cs, &p("2=ripe,3=orange"), false).unwrap();
        let sro = pattern_density(&cs, &p("1=small,2=ripe,3=orange"), false).unwrap();
        assert!(loewner_geq(&orange, &ripe_orange, 1.0).unwrap());
        assert!(loewner_geq(&ripe_orange, &sro, 1.0).unwrap());
        assert!(!loewner_geq(&sro, &orange, 1.0).unwrap());
        assert!(loewner_min_eigenvalue(&orange, &ripe_orange, 1.0).unwrap().abs() < 1e-15);

        let n_orange = pattern_density(&cs, &p("3=orange"), true).unwrap();
        let n_sro = pattern_density(&cs, &p("1=small,2=ripe,3=orange"), true).unwrap();
        assert!(loewner_geq(&n_orange, &n_sro, 0.5).unwrap());
        assert!(loewner_geq(&n_orange, &n_orange, 1.0).unwrap());
        assert!(loewner_geq(&n_orange, &n_sro, -1.0).is_err());
    }

    #[test]
    fn verdicts() {
        let cs = corpus();
        let v = entail(&cs, &p("3=orange"), &p("1=small,2=ripe,3=orange"), true, None).unwrap();
        assert_eq!(v.scale, 0.5);
        assert!(v.entails);
        let v = entail(&cs, &p("2=ripe,3=orange"), &p("3=orange"), false, None).unwrap();
        assert_eq!(v.scale, 1.0);
        assert!(!v.entails);
        assert!(v.min_eigenvalue < -0.1);
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(serde_json::from_str::<EntailmentVerdict>(&s).unwrap(), v);
    }

    #[test]
    fn basis_mismatch() {
        let cs = corpus();
        let other = CorpusState::new(SequenceDataset::from_sentences(&["a b", "c d"]).unwrap()).unwrap();
        let a = pattern_density(&cs, &p("3=orange"), true).unwrap();
        let b = pattern_density(&other, &p("1=a"), true).unwrap();
        assert!(matches!(loewner_geq(&a, &b, 1.0), Err(Error::BasisMismatch(_))));
    }

    #[test]
    fn kraus_sum_over_prefixes() {
        let cs = corpus();
        let ny = cs.suffixes().len();
        let mut sum = Matrix::zeros(ny, ny);
        for i in 0..cs.prefixes().len() {
            sum = sum
                .add(&pattern_density(&cs, &cs.prefix_pattern(i), false).unwrap().matrix)
                .unwrap();
        }
        let rho_y = graph_reduced_density(cs.graph(), Keep::Y).unwrap();
        assert!(sum.max_abs_diff(rho_y.matrix()) < 1e-12);
        assert_matrix(rho_y.matrix(), &[vec![2.0, 1.0], vec![1.0, 3.0]], 0.2);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn corpus_strategy() -> impl Strategy<Value = CorpusState> {
            (2u32..4, 2usize..5).prop_flat_map(|(d, n)| {
                prop::collection::vec(prop::collection::vec(0..d, n), 1..25).prop_map(move |s| {
                    let ds = SequenceDataset::new(Alphabet::indexed(d as usize).unwrap(), s).unwrap();
                    CorpusState::new(ds).unwrap()
                })
            })
        }

        /// A coarse pattern taken from one sample, and a refinement of it.
        fn nested(cs: &CorpusState, pick: usize, mask: u32) -> (Pattern, Pattern) {
            let s = &cs.dataset().samples()[pick % cs.dataset().len()];
            let cut = cs.cut();
            let sym = |i: usize| cs.dataset().alphabet().symbol(s[i] as usize).to_string();
            let mut coarse = Pattern::new().with(1, sym(0));
            let mut fine = coarse.clone();
            for i in 1..cut {
                if mask >> i & 1 == 1 {
                    coarse = coarse.with(i + 1, sym(i));
                }
                fine = fine.with(i + 1, sym(i));
            }
            (coarse, fine)
        }

        proptest! {
            #[test]
            fn decomposition_reassembles(cs in corpus_strategy(), pick in 0usize..100, mask in 0u32..16) {
                let (coarse, _) = nested(&cs, pick, mask);
                let terms = decompose(&cs, &coarse).unwrap();
                let total: f64 = terms.iter().map(|t| t.weight).sum();
                prop_assert!((total - 1.0).abs() < 1e-12);
                let ny = cs.suffixes().len();
                let mut sum = Matrix::zeros(ny, ny);
                for t in &terms {
                    sum = sum.add(&t.density.matrix.scaled(t.weight)).unwrap();
                    let want = cs.count(&t.density.pattern).unwrap() as f64 / cs.count(&coarse).unwrap() as f64;
                    prop_assert_eq!(t.weight, want);
                }
                let direct = pattern_density(&cs, &coarse, true).unwrap();
                prop_assert!(sum.max_abs_diff(&direct.matrix) < 1e-12);
            }

            #[test]
            fn refinement_chain_is_psd(cs in corpus_strategy(), pick in 0usize..100, mask in 0u32..16) {
                let (coarse, fine) = nested(&cs, pick, mask);
                let a = pattern_density(&cs, &coarse, false).unwrap();
                let b = pattern_density(&cs, &fine, false).unwrap();
                prop_assert!(loewner_geq(&a, &b, 1.0).unwrap());
                prop_assert!(a.weight >= 0.0 && a.weight <= 1.0 + 1e-12);
                prop_assert!(linalg::is_psd(&a.matrix, LOEWNER_TOLERANCE).unwrap());
                let n = pattern_density(&cs, &coarse, true).unwrap();
                prop_assert!((n.matrix.trace() - 1.0).abs() < 1e-12);
            }
        }
    }
}
