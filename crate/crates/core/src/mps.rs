//! Matrix product states trained site by site from samples.
//!
//! Training streams the samples: every sample's prefix is kept as a vector in
//! the current bond space, and the reduced density at each cut is accumulated
//! from those vectors without ever forming the full `d^N` state. The interior
//! tensors are the top eigenvectors of these densities; the last tensor is
//! whatever remains of the state once the prefixes have been compressed.

use std::collections::HashMap;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::empirical::{digits, SequenceDataset};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// Longest chain whose Born distribution may be enumerated (as `d^n` entries).
pub const MAX_ENUMERATION: usize = 1 << 20;

/// Longest bitstrings accepted by [`run_experiment`].
pub const MAX_EXPERIMENT_N: usize = 24;

const BHATTACHARYYA_NORM_TOLERANCE: f64 = 1e-8;

/// An order-3 tensor indexed `[left][physical][right]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    left: usize,
    phys: usize,
    right: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(left: usize, phys: usize, right: usize) -> Self {
        Self {
            left,
            phys,
            right,
            data: vec![0.0; left * phys * right],
        }
    }

    pub fn from_nested(t: &[Vec<Vec<f64>>]) -> Result<Self> {
        let left = t.len();
        let phys = t.first().map_or(0, Vec::len);
        let right = t.first().and_then(|r| r.first()).map_or(0, Vec::len);
        if left == 0 || phys == 0 || right == 0 {
            return Err(Error::dim("tensor dimensions must be positive"));
        }
        let mut data = Vec::with_capacity(left * phys * right);
        for slab in t {
            if slab.len() != phys {
                return Err(Error::dim("ragged tensor"));
            }
            for row in slab {
                if row.len() != right {
                    return Err(Error::dim("ragged tensor"));
                }
                data.extend_from_slice(row);
            }
        }
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            left,
            phys,
            right,
            data,
        })
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.left)
            .map(|a| {
                (0..self.phys)
                    .map(|s| (0..self.right).map(|b| self.get(a, s, b)).collect())
                    .collect()
            })
            .collect()
    }

    #[inline]
    pub fn get(&self, a: usize, s: usize, b: usize) -> f64 {
        self.data[(a * self.phys + s) * self.right + b]
    }

    #[inline]
    pub fn set(&mut self, a: usize, s: usize, b: usize, v: f64) {
        self.data[(a * self.phys + s) * self.right + b] = v;
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.left, self.phys, self.right)
    }

    /// `vᵀ A[·][s][·]`.
    fn apply(&self, v: &[f64], s: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.right];
        for (a, va) in v.iter().enumerate() {
            if *va == 0.0 {
                continue;
            }
            let base = (a * self.phys + s) * self.right;
            for (o, x) in out.iter_mut().zip(&self.data[base..base + self.right]) {
                *o += va * x;
            }
        }
        out
    }

    /// The matrix `(left·phys) × right`.
    pub fn as_matrix(&self) -> Matrix {
        Matrix::new(self.left * self.phys, self.right, self.data.clone())
            .expect("tensor dimensions are positive")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelFile", into = "ModelFile")]
pub struct MatrixProductState {
    n: usize,
    physical_dim: usize,
    /// Dimensions of the `n − 1` internal bonds.
    bond_dims: Vec<usize>,
    tensors: Vec<Tensor3>,
}

/// On-disk form: tensors as nested `[left][physical][right]` arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub n: usize,
    pub physical_dim: usize,
    pub bond_dims: Vec<usize>,
    pub tensors: Vec<Vec<Vec<Vec<f64>>>>,
}

impl TryFrom<ModelFile> for MatrixProductState {
    type Error = Error;

    fn try_from(f: ModelFile) -> Result<Self> {
        let tensors = f
            .tensors
            .iter()
            .map(|t| Tensor3::from_nested(t))
            .collect::<Result<Vec<_>>>()?;
        let m = MatrixProductState::new(tensors)?;
        if m.n != f.n || m.physical_dim != f.physical_dim || m.bond_dims != f.bond_dims {
            return Err(Error::invalid(
                "declared n, physical_dim or bond_dims disagree with the tensors",
            ));
        }
        Ok(m)
    }
}

impl From<MatrixProductState> for ModelFile {
    fn from(m: MatrixProductState) -> Self {
        ModelFile {
            n: m.n,
            physical_dim: m.physical_dim,
            bond_dims: m.bond_dims,
            tensors: m.tensors.iter().map(Tensor3::to_nested).collect(),
        }
    }
}

impl MatrixProductState {
    /// Checks that the chain closes (outer bonds of size 1) and that adjacent
    /// bonds and physical dimensions agree.
    pub fn new(tensors: Vec<Tensor3>) -> Result<Self> {
        let n = tensors.len();
        if n == 0 {
            return Err(Error::invalid("an MPS needs at least one tensor"));
        }
        let physical_dim = tensors[0].phys;
        if tensors[0].left != 1 || tensors[n - 1].right != 1 {
            return Err(Error::dim("outer bonds must have dimension 1"));
        }
        for (k, t) in tensors.iter().enumerate() {
            if t.phys != physical_dim {
                return Err(Error::dim(format!("site {k} has physical dimension {}", t.phys)));
            }
            if k + 1 < n && t.right != tensors[k + 1].left {
                return Err(Error::dim(format!(
                    "bond {k}: {} vs {}",
                    t.right,
                    tensors[k + 1].left
                )));
            }
        }
        let bond_dims = tensors[..n - 1].iter().map(|t| t.right).collect();
        Ok(Self {
            n,
            physical_dim,
            bond_dims,
            tensors,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn physical_dim(&self) -> usize {
        self.physical_dim
    }

    pub fn bond_dims(&self) -> &[usize] {
        &self.bond_dims
    }

    pub fn tensors(&self) -> &[Tensor3] {
        &self.tensors
    }

    pub fn tensor(&self, k: usize) -> &Tensor3 {
        &self.tensors[k]
    }

    fn check_sequence(&self, s: &[u32]) -> Result<()> {
        if s.len() != self.n {
            return Err(Error::dim(format!(
                "sequence of length {} for a chain of length {}",
                s.len(),
                self.n
            )));
        }
        if let Some(t) = s.iter().find(|t| **t as usize >= self.physical_dim) {
            return Err(Error::invalid(format!("symbol {t} out of range")));
        }
        Ok(())
    }

    /// `⟨s|ψ⟩` by left-to-right contraction.
    pub fn amplitude(&self, s: &[u32]) -> Result<f64> {
        self.check_sequence(s)?;
        let mut v = vec![1.0];
        for (t, sym) in self.tensors.iter().zip(s) {
            v = t.apply(&v, *sym as usize);
        }
        Ok(v[0])
    }

    pub fn norm_squared(&self) -> f64 {
        inner_product(self, self).expect("same shape")
    }
}

/// `|⟨s|ψ⟩|²`.
pub fn born_probability(m: &MatrixProductState, s: &[u32]) -> Result<f64> {
    let a = m.amplitude(s)?;
    Ok(a * a)
}

/// Every amplitude, with the first site as the most significant digit.
pub fn amplitude_vector(m: &MatrixProductState) -> Result<Vec<f64>> {
    let total = enumeration_size(m)?;
    (0..total)
        .map(|k| m.amplitude(&digits(k, m.physical_dim, m.n)))
        .collect()
}

/// The full Born distribution, ordered as in [`amplitude_vector`].
pub fn born_distribution(m: &MatrixProductState) -> Result<Vec<f64>> {
    Ok(amplitude_vector(m)?.into_iter().map(|a| a * a).collect())
}

fn enumeration_size(m: &MatrixProductState) -> Result<usize> {
    let size = (m.physical_dim as u128)
        .checked_pow(m.n as u32)
        .unwrap_or(u128::MAX);
    if size > MAX_ENUMERATION as u128 {
        return Err(Error::TooLarge(format!(
            "{}^{} strings exceed the enumeration limit",
            m.physical_dim, m.n
        )));
    }
    Ok(size as usize)
}

/// `⟨a|b⟩` by transfer matrices.
pub fn inner_product(a: &MatrixProductState, b: &MatrixProductState) -> Result<f64> {
    if a.n != b.n || a.physical_dim != b.physical_dim {
        return Err(Error::dim(format!(
            "chains differ: n {} vs {}, physical {} vs {}",
            a.n, b.n, a.physical_dim, b.physical_dim
        )));
    }
    // env[i][j] pairs left bond i of `a` with left bond j of `b`.
    let mut env = vec![1.0];
    let mut width = 1;
    for (ta, tb) in a.tensors.iter().zip(&b.tensors) {
        let mut next = vec![0.0; ta.right * tb.right];
        for s in 0..a.physical_dim {
            for i in 0..ta.left {
                for j in 0..tb.left {
                    let e = env[i * width + j];
                    if e == 0.0 {
                        continue;
                    }
                    for p in 0..ta.right {
                        let x = e * ta.get(i, s, p);
                        if x == 0.0 {
                            continue;
                        }
                        for q in 0..tb.right {
                            next[p * tb.right + q] += x * tb.get(j, s, q);
                        }
                    }
                }
            }
        }
        env = next;
        width = tb.right;
    }
    Ok(env[0])
}

/// Bond dimension 2 chain for the uniform superposition of even-parity
/// bitstrings of length `n`. The bond carries the running parity.
pub fn parity_target(n: usize) -> Result<MatrixProductState> {
    if n < 2 {
        return Err(Error::invalid("parity target needs n >= 2"));
    }
    let amp = 0.5f64.powf((n - 1) as f64 / 2.0);
    let mut tensors = Vec::with_capacity(n);
    let mut first = Tensor3::zeros(1, 2, 2);
    first.set(0, 0, 0, 1.0);
    first.set(0, 1, 1, 1.0);
    tensors.push(first);
    for _ in 1..n - 1 {
        let mut t = Tensor3::zeros(2, 2, 2);
        for a in 0..2 {
            for s in 0..2 {
                t.set(a, s, a ^ s, 1.0);
            }
        }
        tensors.push(t);
    }
    let mut last = Tensor3::zeros(2, 2, 1);
    last.set(0, 0, 0, amp);
    last.set(1, 1, 0, amp);
    tensors.push(last);
    MatrixProductState::new(tensors)
}

/// `−ln Σ √(p q)`, or infinity when the distributions share no support.
pub fn bhattacharyya(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::dim(format!("{} vs {} outcomes", p.len(), q.len())));
    }
    for (name, d) in [("p", p), ("q", q)] {
        if let Some(x) = d.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::invalid(format!("{name} has entry {x}")));
        }
        let total: f64 = d.iter().sum();
        if (total - 1.0).abs() > BHATTACHARYYA_NORM_TOLERANCE {
            return Err(Error::NotNormalized {
                what: if name == "p" { "sum of p" } else { "sum of q" },
                value: total,
            });
        }
    }
    let bc: f64 = p.iter().zip(q).map(|(a, b)| (a * b).sqrt()).sum();
    Ok(neg_log_overlap(bc))
}

/// `−ln ⟨a|b⟩`; equals the Bhattacharyya distance of the Born distributions
/// when both states have nonnegative amplitudes.
pub fn bhattacharyya_states(a: &MatrixProductState, b: &MatrixProductState) -> Result<f64> {
    Ok(neg_log_overlap(inner_product(a, b)?))
}

fn neg_log_overlap(x: f64) -> f64 {
    if x <= 0.0 {
        f64::INFINITY
    } else {
        (-x.ln()).max(0.0)
    }
}

/// Ancestral sampling from the Born distribution, one site at a time.
pub fn sample(m: &MatrixProductState, count: usize, seed: u64) -> Vec<Vec<u32>> {
    let envs = right_environments(m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = m.physical_dim;
    let mut out = Vec::with_capacity(count);
    let mut weights = vec![0.0; d];
    for _ in 0..count {
        let mut v = vec![1.0];
        let mut s = Vec::with_capacity(m.n);
        for (k, t) in m.tensors.iter().enumerate() {
            let env = &envs[k + 1];
            let candidates: Vec<Vec<f64>> = (0..d).map(|sym| t.apply(&v, sym)).collect();
            for (w, c) in weights.iter_mut().zip(&candidates) {
                *w = quadratic_form(env, c).max(0.0);
            }
            let total: f64 = weights.iter().sum();
            let mut target = rng.random::<f64>() * total;
            let mut pick = d - 1;
            for (sym, w) in weights.iter().enumerate() {
                if target < *w {
                    pick = sym;
                    break;
                }
                target -= w;
            }
            // Never land on a zero-probability symbol through rounding.
            if weights[pick] == 0.0 {
                pick = weights
                    .iter()
                    .rposition(|w| *w > 0.0)
                    .unwrap_or(pick);
            }
            s.push(pick as u32);
            v = candidates.into_iter().nth(pick).expect("pick < d");
        }
        out.push(s);
    }
    out
}

/// `envs[k]` contracts sites `k..n` with themselves; `envs[n] = [[1]]`.
fn right_environments(m: &MatrixProductState) -> Vec<Matrix> {
    let mut envs = vec![Matrix::identity(1); m.n + 1];
    for k in (0..m.n).rev() {
        let t = &m.tensors[k];
        let r = &envs[k + 1];
        let mut e = Matrix::zeros(t.left, t.left);
        for a in 0..t.left {
            for a2 in 0..t.left {
                let mut acc = 0.0;
                for s in 0..t.phys {
                    for b in 0..t.right {
                        let x = t.get(a, s, b);
                        if x == 0.0 {
                            continue;
                        }
                        for b2 in 0..t.right {
                            acc += x * t.get(a2, s, b2) * r.get(b, b2);
                        }
                    }
                }
                e.set(a, a2, acc);
            }
        }
        envs[k] = e;
    }
    envs
}

fn quadratic_form(m: &Matrix, v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (i, vi) in v.iter().enumerate() {
        for (j, vj) in v.iter().enumerate() {
            acc += vi * m.get(i, j) * vj;
        }
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Number of eigenvectors kept at every interior site.
    pub chi: usize,
    /// Seed for any dataset drawn on behalf of this configuration.
    pub seed: u64,
    /// Allowed deviation of the trained state's squared norm from 1.
    pub tolerance: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            chi: 2,
            seed: 0,
            tolerance: 1e-10,
        }
    }
}

/// What training saw at one interior site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTrace {
    /// 1-based site index.
    pub site: usize,
    /// Unit-trace reduced density on `bond ⊗ physical`, index `a·d + s`.
    pub rho: Matrix,
    pub eigenvalues: Vec<f64>,
    pub kept: usize,
    /// `F` with `rho = F Fᵀ`: one column per distinct suffix.
    pub state_matrix: Matrix,
}

pub fn train(ds: &SequenceDataset, cfg: &TrainConfig) -> Result<MatrixProductState> {
    Ok(sweep(ds, cfg, false)?.0)
}

/// [`train`], also returning the per-site densities.
pub fn train_traced(ds: &SequenceDataset, cfg: &TrainConfig) -> Result<(MatrixProductState, Vec<StepTrace>)> {
    sweep(ds, cfg, true)
}

fn sweep(ds: &SequenceDataset, cfg: &TrainConfig, trace: bool) -> Result<(MatrixProductState, Vec<StepTrace>)> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if cfg.chi == 0 {
        return Err(Error::invalid("chi must be at least 1"));
    }
    let n = ds.length();
    if n < 3 {
        return Err(Error::invalid(format!("training needs sequences of length >= 3, got {n}")));
    }
    let d = ds.alphabet().len();

    // Distinct samples with amplitude √(count / N_T), in first-appearance order.
    let mut index: HashMap<&[u32], usize> = HashMap::new();
    let mut distinct: Vec<&[u32]> = Vec::new();
    let mut counts: Vec<u64> = Vec::new();
    for s in ds.samples() {
        let id = *index.entry(s.as_slice()).or_insert_with(|| {
            distinct.push(s.as_slice());
            counts.push(0);
            distinct.len() - 1
        });
        counts[id] += 1;
    }
    let total = ds.len() as f64;
    let amps: Vec<f64> = counts.iter().map(|c| (*c as f64 / total).sqrt()).collect();

    let mut tensors = Vec::with_capacity(n);
    let mut first = Tensor3::zeros(1, d, d);
    for s in 0..d {
        first.set(0, s, s, 1.0);
    }
    tensors.push(first);

    // Bond-space image of each distinct sample's prefix.
    let mut phi: Vec<Vec<f64>> = distinct
        .iter()
        .map(|s| {
            let mut v = vec![0.0; d];
            v[s[0] as usize] = 1.0;
            v
        })
        .collect();
    let mut left = d;
    let mut traces = Vec::new();

    for site in 1..n - 1 {
        let dim = left * d;
        let mut groups: HashMap<&[u32], usize> = HashMap::new();
        let mut vectors: Vec<Vec<f64>> = Vec::new();
        for (k, s) in distinct.iter().enumerate() {
            let g = *groups.entry(&s[site + 1..]).or_insert_with(|| {
                vectors.push(vec![0.0; dim]);
                vectors.len() - 1
            });
            let sym = s[site] as usize;
            let v = &mut vectors[g];
            for (a, x) in phi[k].iter().enumerate() {
                v[a * d + sym] += amps[k] * x;
            }
        }
        let mut rho = Matrix::zeros(dim, dim);
        for v in &vectors {
            crate::qprob::accumulate_outer(&mut rho, v);
        }
        let tr = rho.trace();
        if tr <= 0.0 {
            return Err(Error::invalid(format!("state vanished at site {}", site + 1)));
        }
        let rho = rho.scaled(1.0 / tr);
        let eig = linalg::sym_eigen(&rho)?;
        let keep = cfg.chi.min(dim);

        let mut t = Tensor3::zeros(left, d, keep);
        for a in 0..left {
            for s in 0..d {
                for b in 0..keep {
                    t.set(a, s, b, eig.eigenvectors.get(a * d + s, b));
                }
            }
        }
        for (k, s) in distinct.iter().enumerate() {
            phi[k] = t.apply(&phi[k], s[site] as usize);
        }
        if trace {
            let scale = 1.0 / tr.sqrt();
            let cols: Vec<Vec<f64>> = vectors
                .iter()
                .map(|v| v.iter().map(|x| x * scale).collect())
                .collect();
            traces.push(StepTrace {
                site: site + 1,
                rho: rho.clone(),
                eigenvalues: eig.eigenvalues.clone(),
                kept: keep,
                state_matrix: Matrix::from_columns(&cols)?,
            });
        }
        tensors.push(t);
        left = keep;
    }

    let mut last = Tensor3::zeros(left, d, 1);
    for (k, s) in distinct.iter().enumerate() {
        let sym = s[n - 1] as usize;
        for (a, x) in phi[k].iter().enumerate() {
            last.set(a, sym, 0, last.get(a, sym, 0) + amps[k] * x);
        }
    }
    // Dropped eigenvalue mass is restored here: the prefix maps are
    // isometries, so the norm of the whole chain is the norm of this tensor.
    let norm = last.data.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::invalid("truncation removed every sample"));
    }
    last.data.iter_mut().for_each(|x| *x /= norm);
    tensors.push(last);

    let model = MatrixProductState::new(tensors)?;
    let norm_sq = model.norm_squared();
    if (norm_sq - 1.0).abs() > cfg.tolerance {
        return Err(Error::NotNormalized {
            what: "trained state squared norm",
            value: norm_sq,
        });
    }
    Ok((model, traces))
}

/// Every even-parity bitstring of length `n`, in increasing binary order.
pub fn even_parity_strings(n: usize) -> Vec<Vec<u32>> {
    (0..1usize << n)
        .filter(|k| k.count_ones() % 2 == 0)
        .map(|k| digits(k, 2, n))
        .collect()
}

/// `n_samples` distinct even-parity strings drawn uniformly without
/// replacement. The first `n − 1` bits come from the drawn index (most
/// significant first) and the last bit fixes the parity.
pub fn draw_even_dataset(n: usize, n_samples: usize, seed: u64) -> Result<SequenceDataset> {
    if !(2..=MAX_EXPERIMENT_N).contains(&n) {
        return Err(Error::invalid(format!("n must be in 2..={MAX_EXPERIMENT_N}, got {n}")));
    }
    let population = 1usize << (n - 1);
    if n_samples == 0 || n_samples > population {
        return Err(Error::invalid(format!(
            "cannot draw {n_samples} distinct strings from {population}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = index::sample(&mut rng, population, n_samples)
        .into_iter()
        .map(|k| {
            let mut s = digits(k, 2, n - 1);
            s.push(k.count_ones() % 2);
            s
        })
        .collect();
    SequenceDataset::from_bits(samples)
}

/// `round(f · 2^{n−1})`.
pub fn samples_for_fraction(n: usize, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!("fraction must be in (0, 1], got {fraction}")));
    }
    let count = (fraction * (1u64 << (n - 1)) as f64).round() as usize;
    if count < 1 {
        return Err(Error::invalid(format!(
            "fraction {fraction} of 2^{} rounds to no samples",
            n - 1
        )));
    }
    Ok(count)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub fraction: f64,
    pub replica: usize,
    pub seed: u64,
    pub n_samples: usize,
    pub bhattacharyya: f64,
}

/// Trains one model per `(fraction, replica)` on a fresh draw of even strings
/// and reports its distance to the uniform even-parity state. Replicas run in
/// parallel on the current rayon pool; rows come back in input order.
pub fn run_experiment(
    n: usize,
    fractions: &[f64],
    replicas: usize,
    base_seed: u64,
    cfg: &TrainConfig,
) -> Result<Vec<ExperimentRow>> {
    if !(3..=MAX_EXPERIMENT_N).contains(&n) {
        return Err(Error::invalid(format!("n must be in 3..={MAX_EXPERIMENT_N}, got {n}")));
    }
    let sizes = fractions
        .iter()
        .map(|f| samples_for_fraction(n, *f))
        .collect::<Result<Vec<_>>>()?;
    let target = parity_target(n)?;
    let jobs: Vec<(f64, usize, usize)> = fractions
        .iter()
        .zip(&sizes)
        .flat_map(|(f, size)| (0..replicas).map(move |r| (*f, *size, r)))
        .collect();
    jobs.par_iter()
        .map(|&(fraction, n_samples, replica)| {
            let seed = base_seed.wrapping_add(replica as u64);
            let ds = draw_even_dataset(n, n_samples, seed)?;
            let model = train(&ds, cfg)?;
            Ok(ExperimentRow {
                fraction,
                replica,
                seed,
                n_samples,
                bhattacharyya: bhattacharyya_states(&model, &target)?,
            })
        })
        .collect()
}
