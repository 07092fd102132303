//! Sequence datasets, their prefix/suffix multigraphs, and reduced densities
//! computed by counting paths instead of building a state.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::qprob::{Alphabet, Basis, DensityMatrix, JointDistribution, Keep};

/// Largest index set enumerated by [`BasisChoice::Full`].
pub const MAX_FULL_BASIS: usize = 1 << 20;

/// Standard (product-order) indices of `00, 11, 01, 10` among two-bit strings.
pub const PARITY_ORDER: [usize; 4] = [0, 3, 1, 2];

/// A multiset of equal-length token sequences over one alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceDataset {
    alphabet: Alphabet,
    length: usize,
    samples: Vec<Vec<u32>>,
}

impl SequenceDataset {
    pub fn new(alphabet: Alphabet, samples: Vec<Vec<u32>>) -> Result<Self> {
        let length = samples.first().ok_or(Error::EmptyDataset)?.len();
        if length == 0 {
            return Err(Error::invalid("samples must be nonempty sequences"));
        }
        for (n, s) in samples.iter().enumerate() {
            if s.len() != length {
                return Err(Error::invalid(format!(
                    "sample {n} has length {}, expected {length}",
                    s.len()
                )));
            }
            if let Some(t) = s.iter().find(|t| **t as usize >= alphabet.len()) {
                return Err(Error::invalid(format!("sample {n} uses token index {t}")));
            }
        }
        Ok(Self {
            alphabet,
            length,
            samples,
        })
    }

    /// Bitstrings over the alphabet `{"0", "1"}`.
    pub fn from_bits(samples: Vec<Vec<u32>>) -> Result<Self> {
        Self::new(Alphabet::new(["0", "1"])?, samples)
    }

    /// Tokenized sentences; the alphabet is collected in first-appearance order.
    pub fn from_sentences<S: AsRef<str>>(sentences: &[S]) -> Result<Self> {
        let mut symbols: Vec<String> = Vec::new();
        let mut lookup: HashMap<String, u32> = HashMap::new();
        let mut samples = Vec::with_capacity(sentences.len());
        for s in sentences {
            let sample = s
                .as_ref()
                .split(' ')
                .map(|tok| {
                    *lookup.entry(tok.to_string()).or_insert_with(|| {
                        symbols.push(tok.to_string());
                        (symbols.len() - 1) as u32
                    })
                })
                .collect();
            samples.push(sample);
        }
        if samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Self::new(Alphabet::new(symbols)?, samples)
    }

    /// One sample per line. A file whose every line is a `0`/`1` string is read
    /// as bitstrings; anything else is split on single spaces. Blank lines are
    /// skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, l.trim_end_matches('\r')))
            .filter(|(_, l)| !l.trim().is_empty())
            .collect();
        if lines.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let bits = lines
            .iter()
            .all(|(_, l)| l.bytes().all(|b| b == b'0' || b == b'1'));

        let mut symbols: Vec<String> = Vec::new();
        let mut lookup: HashMap<&str, u32> = HashMap::new();
        if bits {
            symbols = vec!["0".into(), "1".into()];
            lookup.insert("0", 0);
            lookup.insert("1", 1);
        }
        let mut samples = Vec::with_capacity(lines.len());
        let mut length = None;
        for (n, line) in &lines {
            let tokens: Vec<&str> = if bits {
                (0..line.len()).map(|i| &line[i..i + 1]).collect()
            } else {
                line.split(' ').collect()
            };
            if tokens.iter().any(|t| t.is_empty()) {
                return Err(Error::parse(*n, "empty token (tokens are separated by single spaces)"));
            }
            match length {
                None => length = Some(tokens.len()),
                Some(len) if len != tokens.len() => {
                    return Err(Error::parse(
                        *n,
                        format!("sample has {} tokens, expected {len}", tokens.len()),
                    ))
                }
                _ => {}
            }
            let sample = tokens
                .into_iter()
                .map(|t| {
                    *lookup.entry(t).or_insert_with(|| {
                        symbols.push(t.to_string());
                        (symbols.len() - 1) as u32
                    })
                })
                .collect();
            samples.push(sample);
        }
        Self::new(Alphabet::new(symbols)?, samples)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn samples(&self) -> &[Vec<u32>] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Renders a token sequence; single-character alphabets are concatenated.
    pub fn label(&self, tokens: &[u32]) -> String {
        let sep = if self.alphabet.symbols().iter().all(|s| s.chars().count() == 1) {
            ""
        } else {
            " "
        };
        tokens
            .iter()
            .map(|t| self.alphabet.symbol(*t as usize))
            .collect::<Vec<_>>()
            .join(sep)
    }

    /// One line per sample, in the format [`SequenceDataset::parse`] reads.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.samples {
            out.push_str(&self.label(s));
            out.push('\n');
        }
        out
    }
}

/// Which prefixes and suffixes index a graph's vertex sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisChoice {
    /// Only sequences that occur, in first-appearance order.
    #[default]
    Observed,
    /// Every sequence over the alphabet, first position varying slowest.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub prefix: usize,
    pub suffix: usize,
    pub count: u64,
}

/// Bipartite multigraph joining each sample's prefix to its suffix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalGraph {
    prefixes: Alphabet,
    suffixes: Alphabet,
    /// Sorted by suffix, then prefix.
    edges: Vec<Edge>,
    total_edges: u64,
}

impl EmpiricalGraph {
    pub fn from_dataset(ds: &SequenceDataset, cut: usize, basis: BasisChoice) -> Result<Self> {
        if cut == 0 || cut >= ds.length {
            return Err(Error::invalid(format!(
                "cut must satisfy 1 <= k < {}, got {cut}",
                ds.length
            )));
        }
        let d = ds.alphabet.len();
        let (prefix_index, prefix_labels) =
            vertex_index(ds, basis, |s| &s[..cut], cut, d)?;
        let (suffix_index, suffix_labels) =
            vertex_index(ds, basis, |s| &s[cut..], ds.length - cut, d)?;

        let mut counts: HashMap<(usize, usize), u64> = HashMap::new();
        for s in &ds.samples {
            let p = prefix_index(&s[..cut]);
            let q = suffix_index(&s[cut..]);
            *counts.entry((q, p)).or_insert(0) += 1;
        }
        let mut edges: Vec<Edge> = counts
            .into_iter()
            .map(|((suffix, prefix), count)| Edge {
                prefix,
                suffix,
                count,
            })
            .collect();
        edges.sort_by_key(|e| (e.suffix, e.prefix));
        Ok(Self {
            prefixes: Alphabet::new(prefix_labels)?,
            suffixes: Alphabet::new(suffix_labels)?,
            edges,
            total_edges: ds.samples.len() as u64,
        })
    }

    pub fn prefixes(&self) -> &Alphabet {
        &self.prefixes
    }

    pub fn suffixes(&self) -> &Alphabet {
        &self.suffixes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn total_edges(&self) -> u64 {
        self.total_edges
    }

    pub fn prefix_degrees(&self) -> Vec<u64> {
        let mut d = vec![0; self.prefixes.len()];
        for e in &self.edges {
            d[e.prefix] += e.count;
        }
        d
    }

    pub fn suffix_degrees(&self) -> Vec<u64> {
        let mut d = vec![0; self.suffixes.len()];
        for e in &self.edges {
            d[e.suffix] += e.count;
        }
        d
    }

    /// `count / N_T` on `prefixes × suffixes`.
    pub fn to_distribution(&self) -> Result<JointDistribution> {
        let ny = self.suffixes.len();
        let mut w = vec![0.0; self.prefixes.len() * ny];
        for e in &self.edges {
            w[e.prefix * ny + e.suffix] = e.count as f64;
        }
        JointDistribution::from_weights(self.prefixes.clone(), self.suffixes.clone(), w)
    }

    /// Weighted co-occurrence counts: `Σ √(c_i c_j)` over shared neighbours.
    /// For a simple graph this counts the paths of length two from `i` to `j`.
    pub fn path_counts(&self, keep: Keep) -> Matrix {
        let n = match keep {
            Keep::X => self.prefixes.len(),
            Keep::Y => self.suffixes.len(),
        };
        let mut m = Matrix::zeros(n, n);
        // Neighbourhood lists of the traced side.
        let mut groups: HashMap<usize, Vec<(usize, f64)>> = HashMap::new();
        let mut order = Vec::new();
        for e in &self.edges {
            let (shared, vertex) = match keep {
                Keep::X => (e.suffix, e.prefix),
                Keep::Y => (e.prefix, e.suffix),
            };
            groups
                .entry(shared)
                .or_insert_with(|| {
                    order.push(shared);
                    Vec::new()
                })
                .push((vertex, (e.count as f64).sqrt()));
        }
        order.sort_unstable();
        for shared in order {
            let list = &groups[&shared];
            for (i, ci) in list {
                for (j, cj) in list {
                    m.add_at(*i, *j, ci * cj);
                }
            }
        }
        m
    }
}

type Indexer<'a> = Box<dyn Fn(&[u32]) -> usize + 'a>;

fn vertex_index<'a>(
    ds: &'a SequenceDataset,
    basis: BasisChoice,
    part: impl Fn(&[u32]) -> &[u32],
    len: usize,
    d: usize,
) -> Result<(Indexer<'a>, Vec<String>)> {
    match basis {
        BasisChoice::Observed => {
            let mut index: HashMap<Vec<u32>, usize> = HashMap::new();
            let mut labels = Vec::new();
            for s in &ds.samples {
                let key = part(s);
                if !index.contains_key(key) {
                    index.insert(key.to_vec(), labels.len());
                    labels.push(ds.label(key));
                }
            }
            Ok((Box::new(move |t: &[u32]| index[t]), labels))
        }
        BasisChoice::Full => {
            let size = (d as u128).checked_pow(len as u32).unwrap_or(u128::MAX);
            if size > MAX_FULL_BASIS as u128 {
                return Err(Error::TooLarge(format!(
                    "full basis of {d}^{len} sequences exceeds {MAX_FULL_BASIS}"
                )));
            }
            let size = size as usize;
            let labels = (0..size)
                .map(|k| ds.label(&digits(k, d, len)))
                .collect();
            Ok((
                Box::new(move |t: &[u32]| t.iter().fold(0usize, |acc, x| acc * d + *x as usize)),
                labels,
            ))
        }
    }
}

/// Base-`d` digits of `k`, most significant first, padded to `len`.
pub fn digits(mut k: usize, d: usize, len: usize) -> Vec<u32> {
    let mut out = vec![0u32; len];
    for slot in out.iter_mut().rev() {
        *slot = (k % d) as u32;
        k /= d;
    }
    out
}

/// The empirical joint distribution of prefixes of length `cut` and the
/// remaining suffixes, over observed prefixes and suffixes.
pub fn empirical_distribution(ds: &SequenceDataset, cut: usize) -> Result<JointDistribution> {
    EmpiricalGraph::from_dataset(ds, cut, BasisChoice::Observed)?.to_distribution()
}

/// Path counts divided by the number of edges.
pub fn graph_reduced_density(g: &EmpiricalGraph, keep: Keep) -> Result<DensityMatrix> {
    if g.total_edges == 0 {
        return Err(Error::EmptyDataset);
    }
    // Divide rather than scale by the reciprocal: integer path counts then
    // give correctly rounded quotients.
    let counts = g.path_counts(keep);
    let total = g.total_edges as f64;
    let n = counts.rows();
    let m = Matrix::new(n, n, counts.into_vec().into_iter().map(|c| c / total).collect())?;
    let labels = match keep {
        Keep::X => g.prefixes.clone(),
        Keep::Y => g.suffixes.clone(),
    };
    Ok(DensityMatrix::from_parts(Basis::Single(labels), m))
}

/// Reorders a density so that new index `k` is old index `order[k]`.
pub fn permute_density(rho: &DensityMatrix, order: &[usize]) -> Result<DensityMatrix> {
    let Basis::Single(labels) = rho.basis() else {
        return Err(Error::BasisMismatch("can only permute a single-alphabet basis".into()));
    };
    let n = labels.len();
    let mut seen = vec![false; n];
    if order.len() != n || order.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
        return Err(Error::invalid("order is not a permutation of the basis"));
    }
    let mut m = Matrix::zeros(n, n);
    for (a, &i) in order.iter().enumerate() {
        for (b, &j) in order.iter().enumerate() {
            m.set(a, b, rho.matrix().get(i, j));
        }
    }
    let relabelled = Alphabet::new(order.iter().map(|&i| labels.symbol(i).to_string()))?;
    Ok(DensityMatrix::from_parts(Basis::Single(relabelled), m))
}

/// Two-bit prefix density in the order `00, 11, 01, 10`.
pub fn parity_ordered_prefix_density(g: &EmpiricalGraph) -> Result<DensityMatrix> {
    let expected = ["00", "01", "10", "11"];
    if g.prefixes.symbols() != expected {
        return Err(Error::BasisMismatch(format!(
            "expected the full two-bit prefix basis, got {:?}",
            g.prefixes
        )));
    }
    permute_density(&graph_reduced_density(g, Keep::X)?, &PARITY_ORDER)
}

/// Rotation angles of the top eigenvectors of the even and odd blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummarizerAngles {
    pub theta: f64,
    pub phi: f64,
}

/// Angles for a graph whose prefixes are the four two-bit strings.
pub fn summarizer_angles(g: &EmpiricalGraph) -> Result<SummarizerAngles> {
    summarizer_angles_from_density(parity_ordered_prefix_density(g)?.matrix())
}

/// Angles read off a 4×4 matrix in the order `00, 11, 01, 10`.
/// Only the ratios between entries matter, so counts or densities both work.
pub fn summarizer_angles_from_density(m: &Matrix) -> Result<SummarizerAngles> {
    if m.rows() != 4 || m.cols() != 4 {
        return Err(Error::dim("summarizer angles need a 4x4 matrix"));
    }
    Ok(SummarizerAngles {
        theta: block_angle(m.get(0, 0), m.get(1, 1), m.get(0, 1)),
        phi: block_angle(m.get(2, 2), m.get(3, 3), m.get(2, 3)),
    })
}

/// `arctan(2s / (√(G² + 4s²) + G))` with `G = d₁ − d₂`, and 0 when `s = 0`.
fn block_angle(d1: f64, d2: f64, s: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    let g = d1 - d2;
    (2.0 * s / ((g * g + 4.0 * s * s).sqrt() + g)).atan()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sym_eigen;
    use crate::qprob::{build_state, reduced_via_gram};
    use std::f64::consts::FRAC_PI_4;

    fn bits(strings: &[&str]) -> SequenceDataset {
        SequenceDataset::parse(&strings.join("\n")).unwrap()
    }

    fn assert_matrix(m: &Matrix, rows: &[Vec<f64>], scale: f64) {
        let want = Matrix::from_rows(rows).unwrap().scaled(scale);
        assert!(m.max_abs_diff(&want) < 1e-15, "got {m:?}, want {want:?}");
    }

    fn even_strings(n: usize) -> Vec<String> {
        (0..1usize << n)
            .filter(|k| k.count_ones() % 2 == 0)
            .map(|k| format!("{k:0n$b}"))
            .collect()
    }

    /// The five-edge graph: a-u, b-u, b-v, c-u, c-v.
    fn five_edge() -> SequenceDataset {
        SequenceDataset::from_sentences(&["a u", "b u", "b v", "c u", "c v"]).unwrap()
    }

    fn seven_sample() -> SequenceDataset {
        bits(&["00000", "00110", "11110", "11011", "01100", "10100", "10010"])
    }

    #[test]
    fn parse_formats() {
        let ds = SequenceDataset::parse("0110\n1001\n\n").unwrap();
        assert_eq!(ds.alphabet().symbols(), &["0", "1"]);
        assert_eq!(ds.samples(), &[vec![0, 1, 1, 0], vec![1, 0, 0, 1]]);
        assert_eq!(ds.to_text(), "0110\n1001\n");

        let ds = SequenceDataset::parse("orange fruit\r\ngreen fruit\npurple vegetable").unwrap();
        assert_eq!(ds.alphabet().symbols(), &["orange", "fruit", "green", "purple", "vegetable"]);
        assert_eq!(ds.length(), 2);
        assert_eq!(ds.label(&ds.samples()[2]), "purple vegetable");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = SequenceDataset::parse("a b\nc d e\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        let e = SequenceDataset::parse("a b\na  b\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        assert_eq!(SequenceDataset::parse("\n\n").unwrap_err(), Error::EmptyDataset);
        assert!(SequenceDataset::new(Alphabet::new(["0"]).unwrap(), vec![vec![1]]).is_err());
    }

    #[test]
    fn three_phrase_distribution() {
        let ds = SequenceDataset::from_sentences(&["orange fruit", "green fruit", "purple vegetable"]).unwrap();
        let pi = empirical_distribution(&ds, 1).unwrap();
        assert_eq!(pi.x_alphabet().symbols(), &["orange", "green", "purple"]);
        assert_eq!(pi.y_alphabet().symbols(), &["fruit", "vegetable"]);
        let t = 1.0 / 3.0;
        assert_eq!(pi.probs(), &[t, 0.0, t, 0.0, 0.0, t]);
    }

    #[test]
    fn repeated_sample_is_point_mass() {
        let ds = bits(&["101", "101", "101"]);
        let pi = empirical_distribution(&ds, 2).unwrap();
        assert_eq!(pi.probs(), &[1.0]);
    }

    #[test]
    fn five_phrase_distribution() {
        let ds = SequenceDataset::from_sentences(&[
            "small ripe orange fruit",
            "large rotten green vegetable",
            "large ripe orange vegetable",
            "small ripe orange vegetable",
            "small rotten orange fruit",
        ])
        .unwrap();
        let pi = empirical_distribution(&ds, 3).unwrap();
        let x = pi.x_alphabet().index_of("small ripe orange").unwrap();
        assert_eq!(pi.prob(x, 0), 0.2);
        assert_eq!(pi.prob(x, 1), 0.2);
        let total: f64 = pi.probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cut_validation() {
        let ds = bits(&["01"]);
        assert!(empirical_distribution(&ds, 0).is_err());
        assert!(empirical_distribution(&ds, 2).is_err());
    }

    #[test]
    fn five_edge_graph_densities() {
        let g = EmpiricalGraph::from_dataset(&five_edge(), 1, BasisChoice::Observed).unwrap();
        assert_eq!(g.prefix_degrees(), vec![1, 2, 2]);
        assert_eq!(g.suffix_degrees(), vec![3, 2]);
        let rx = graph_reduced_density(&g, Keep::X).unwrap();
        let ry = graph_reduced_density(&g, Keep::Y).unwrap();
        assert_matrix(
            rx.matrix(),
            &[vec![1.0, 1.0, 1.0], vec![1.0, 2.0, 2.0], vec![1.0, 2.0, 2.0]],
            0.2,
        );
        assert_matrix(ry.matrix(), &[vec![3.0, 2.0], vec![2.0, 2.0]], 0.2);
    }

    #[test]
    fn seven_sample_parity_density() {
        let g = EmpiricalGraph::from_dataset(&seven_sample(), 2, BasisChoice::Full).unwrap();
        let rho = parity_ordered_prefix_density(&g).unwrap();
        assert_matrix(
            rho.matrix(),
            &[
                vec![2.0, 1.0, 0.0, 0.0],
                vec![1.0, 2.0, 0.0, 0.0],
                vec![0.0, 0.0, 1.0, 1.0],
                vec![0.0, 0.0, 1.0, 2.0],
            ],
            1.0 / 7.0,
        );
        assert_eq!(
            match rho.basis() {
                Basis::Single(a) => a.symbols().to_vec(),
                _ => unreachable!(),
            },
            vec!["00", "11", "01", "10"]
        );
        let a = summarizer_angles(&g).unwrap();
        assert!((a.theta - FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn full_even_set_angles() {
        let strings = even_strings(5);
        let refs: Vec<&str> = strings.iter().map(String::as_str).collect();
        let g = EmpiricalGraph::from_dataset(&bits(&refs), 2, BasisChoice::Full).unwrap();
        let a = summarizer_angles(&g).unwrap();
        assert!((a.theta - FRAC_PI_4).abs() < 1e-15);
        assert!((a.phi - FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn disconnected_block_angle_is_zero() {
        let g = EmpiricalGraph::from_dataset(&bits(&["00000", "11011", "01100"]), 2, BasisChoice::Full)
            .unwrap();
        let a = summarizer_angles(&g).unwrap();
        assert_eq!(a.theta, 0.0);
        assert_eq!(a.phi, 0.0);
    }

    #[test]
    fn observed_prefixes_rejected_for_angles() {
        let g = EmpiricalGraph::from_dataset(&seven_sample(), 2, BasisChoice::Observed).unwrap();
        assert!(summarizer_angles(&g).is_err());
    }

    #[test]
    fn full_basis_limit() {
        let ds = SequenceDataset::parse(&"0".repeat(30)).unwrap();
        assert!(matches!(
            EmpiricalGraph::from_dataset(&ds, 1, BasisChoice::Full),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn permute_rejects_non_permutations() {
        let g = EmpiricalGraph::from_dataset(&five_edge(), 1, BasisChoice::Observed).unwrap();
        let rx = graph_reduced_density(&g, Keep::X).unwrap();
        assert!(permute_density(&rx, &[0, 0, 1]).is_err());
        assert!(permute_density(&rx, &[0, 1]).is_err());
        let p = permute_density(&rx, &[2, 0, 1]).unwrap();
        assert_eq!(p.matrix().get(0, 0), rx.matrix().get(2, 2));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn dataset() -> impl Strategy<Value = (SequenceDataset, usize)> {
            (2u32..4, 2usize..6).prop_flat_map(|(d, n)| {
                (
                    prop::collection::vec(prop::collection::vec(0..d, n), 1..30),
                    1..n,
                )
                    .prop_map(move |(samples, cut)| {
                        let alphabet = Alphabet::indexed(d as usize).unwrap();
                        (SequenceDataset::new(alphabet, samples).unwrap(), cut)
                    })
            })
        }

        fn parity_dataset() -> impl Strategy<Value = SequenceDataset> {
            (3usize..7).prop_flat_map(|n| {
                prop::collection::vec(prop::collection::vec(0u32..2, n - 1), 1..40).prop_map(
                    |heads| {
                        let samples = heads
                            .into_iter()
                            .map(|mut h| {
                                let parity = h.iter().sum::<u32>() % 2;
                                h.push(parity);
                                h
                            })
                            .collect();
                        SequenceDataset::from_bits(samples).unwrap()
                    },
                )
            })
        }

        proptest! {
            #[test]
            fn graph_matches_state((ds, cut) in dataset()) {
                for basis in [BasisChoice::Observed, BasisChoice::Full] {
                    let g = EmpiricalGraph::from_dataset(&ds, cut, basis).unwrap();
                    let psi = build_state(&g.to_distribution().unwrap());
                    for keep in [Keep::X, Keep::Y] {
                        let via_graph = graph_reduced_density(&g, keep).unwrap();
                        let via_state = reduced_via_gram(&psi, keep);
                        prop_assert!(via_graph.matrix().max_abs_diff(via_state.matrix()) < 1e-12);
                        prop_assert!((via_graph.trace() - 1.0).abs() < 1e-12);
                    }
                }
            }

            #[test]
            fn block_eigenvectors_follow_angles(ds in parity_dataset()) {
                let g = EmpiricalGraph::from_dataset(&ds, 2, BasisChoice::Full).unwrap();
                let rho = parity_ordered_prefix_density(&g).unwrap();
                let m = rho.matrix();
                let angles = summarizer_angles(&g).unwrap();
                for (base, angle) in [(0usize, angles.theta), (2, angles.phi)] {
                    if m.get(base, base + 1) == 0.0 {
                        continue;
                    }
                    let block = Matrix::from_rows(&[
                        vec![m.get(base, base), m.get(base, base + 1)],
                        vec![m.get(base + 1, base), m.get(base + 1, base + 1)],
                    ]).unwrap();
                    let top = sym_eigen(&block).unwrap().eigenvector(0);
                    prop_assert!((top[0] - angle.cos()).abs() < 1e-10);
                    prop_assert!((top[1] - angle.sin()).abs() < 1e-10);
                }
            }
        }
    }
}
