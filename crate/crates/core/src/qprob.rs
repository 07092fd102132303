//! Joint distributions, the pure states they induce, and reduced densities.
//!
//! Basis pairs `(x_i, y_α)` of a product space are laid out with the `Y`
//! index slow: pair `(i, α)` sits at `α·|X| + i`. Reshaping a state in this
//! layout row-major gives the `|Y| × |X|` matrix `M` with `M[α][i] = ψ(x_i, y_α)`.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, reshape_vector_to_matrix, Layout, Matrix};

/// Largest state vector (number of amplitudes) materialized densely.
pub const MAX_STATE_DIM: usize = 1 << 20;

/// Largest basis on which a dense density matrix is materialized.
pub const MAX_DENSITY_DIM: usize = 1 << 12;

/// Eigenvalues at or below this are dropped from entropy sums.
pub const ENTROPY_CUTOFF: f64 = 1e-14;

/// Schmidt coefficients at or below this are dropped.
pub const SCHMIDT_CUTOFF: f64 = 1e-12;

const DISTRIBUTION_TOLERANCE: f64 = 1e-12;
const STATE_NORM_TOLERANCE: f64 = 1e-12;
const PROJECTION_NORM_TOLERANCE: f64 = 1e-9;
const DENSITY_TOLERANCE: f64 = 1e-10;

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Alphabet {
    symbols: Vec<String>,
}

impl Alphabet {
    pub fn new<I, S>(symbols: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(Error::invalid("alphabet must be nonempty"));
        }
        let mut seen = HashSet::with_capacity(symbols.len());
        for s in &symbols {
            if !seen.insert(s.as_str()) {
                return Err(Error::invalid(format!("duplicate symbol {s:?}")));
            }
        }
        Ok(Self { symbols })
    }

    /// `{"0", "1", ..., "n-1"}`.
    pub fn indexed(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| i.to_string()))
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn symbol(&self, i: usize) -> &str {
        &self.symbols[i]
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == symbol)
    }
}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.symbols).finish()
    }
}

impl TryFrom<Vec<String>> for Alphabet {
    type Error = Error;

    fn try_from(v: Vec<String>) -> Result<Self> {
        Alphabet::new(v)
    }
}

impl From<Alphabet> for Vec<String> {
    fn from(a: Alphabet) -> Self {
        a.symbols
    }
}

/// Which factor of `X × Y` survives a reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Keep {
    X,
    Y,
}

#[inline]
fn pair_index(nx: usize, i: usize, alpha: usize) -> usize {
    alpha * nx + i
}

/// Probabilities on `X × Y`, stored as a row-major `|X| × |Y|` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    x_alphabet: Alphabet,
    y_alphabet: Alphabet,
    probs: Vec<f64>,
}

impl JointDistribution {
    pub fn new(x_alphabet: Alphabet, y_alphabet: Alphabet, probs: Vec<f64>) -> Result<Self> {
        check_table(&x_alphabet, &y_alphabet, &probs)?;
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > DISTRIBUTION_TOLERANCE {
            return Err(Error::NotNormalized {
                what: "probability sum",
                value: total,
            });
        }
        Ok(Self {
            x_alphabet,
            y_alphabet,
            probs,
        })
    }

    /// Normalizes nonnegative weights by their total.
    pub fn from_weights(x_alphabet: Alphabet, y_alphabet: Alphabet, weights: Vec<f64>) -> Result<Self> {
        check_table(&x_alphabet, &y_alphabet, &weights)?;
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::invalid("weights sum to zero"));
        }
        let probs = weights.into_iter().map(|w| w / total).collect();
        Ok(Self {
            x_alphabet,
            y_alphabet,
            probs,
        })
    }

    /// Builds from one row per `x`, each holding `|Y|` probabilities.
    pub fn from_table(x_alphabet: Alphabet, y_alphabet: Alphabet, rows: &[Vec<f64>]) -> Result<Self> {
        if rows.len() != x_alphabet.len() || rows.iter().any(|r| r.len() != y_alphabet.len()) {
            return Err(Error::dim(format!(
                "table must be {}x{}",
                x_alphabet.len(),
                y_alphabet.len()
            )));
        }
        Self::new(x_alphabet, y_alphabet, rows.concat())
    }

    pub fn x_alphabet(&self) -> &Alphabet {
        &self.x_alphabet
    }

    pub fn y_alphabet(&self) -> &Alphabet {
        &self.y_alphabet
    }

    pub fn prob(&self, i: usize, alpha: usize) -> f64 {
        self.probs[i * self.y_alphabet.len() + alpha]
    }

    /// Row-major `|X| × |Y|` table.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn dim(&self) -> usize {
        self.probs.len()
    }
}

fn check_table(x: &Alphabet, y: &Alphabet, probs: &[f64]) -> Result<()> {
    if probs.len() != x.len() * y.len() {
        return Err(Error::dim(format!(
            "{} probabilities for a {}x{} table",
            probs.len(),
            x.len(),
            y.len()
        )));
    }
    if let Some(i) = probs.iter().position(|p| !p.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    if let Some(p) = probs.iter().find(|p| **p < 0.0) {
        return Err(Error::invalid(format!("negative probability {p}")));
    }
    Ok(())
}

/// A unit vector over `X × Y` in the suffix-major layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PureState {
    x_alphabet: Alphabet,
    y_alphabet: Alphabet,
    amplitudes: Vec<f64>,
}

impl PureState {
    /// Amplitudes must already have unit norm. Signs are allowed.
    pub fn new(x_alphabet: Alphabet, y_alphabet: Alphabet, amplitudes: Vec<f64>) -> Result<Self> {
        check_state_shape(&x_alphabet, &y_alphabet, &amplitudes)?;
        let norm_sq: f64 = amplitudes.iter().map(|a| a * a).sum();
        if (norm_sq - 1.0).abs() > STATE_NORM_TOLERANCE {
            return Err(Error::NotNormalized {
                what: "squared norm",
                value: norm_sq,
            });
        }
        Ok(Self {
            x_alphabet,
            y_alphabet,
            amplitudes,
        })
    }

    /// Rescales any nonzero vector to unit norm.
    pub fn normalized(x_alphabet: Alphabet, y_alphabet: Alphabet, amplitudes: Vec<f64>) -> Result<Self> {
        check_state_shape(&x_alphabet, &y_alphabet, &amplitudes)?;
        let norm = amplitudes.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::invalid("zero vector has no direction"));
        }
        Ok(Self {
            x_alphabet,
            y_alphabet,
            amplitudes: amplitudes.into_iter().map(|a| a / norm).collect(),
        })
    }

    /// `a ⊗ b` for unit vectors `a` on `X` and `b` on `Y`.
    pub fn product(x_alphabet: Alphabet, y_alphabet: Alphabet, a: &[f64], b: &[f64]) -> Result<Self> {
        if a.len() != x_alphabet.len() || b.len() != y_alphabet.len() {
            return Err(Error::dim("factor lengths must match the alphabets"));
        }
        let amplitudes = b.iter().flat_map(|bb| a.iter().map(move |aa| aa * bb)).collect();
        Self::new(x_alphabet, y_alphabet, amplitudes)
    }

    pub fn x_alphabet(&self) -> &Alphabet {
        &self.x_alphabet
    }

    pub fn y_alphabet(&self) -> &Alphabet {
        &self.y_alphabet
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, i: usize, alpha: usize) -> f64 {
        self.amplitudes[pair_index(self.x_alphabet.len(), i, alpha)]
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// The `|Y| × |X|` coefficient matrix `M`.
    pub fn coefficient_matrix(&self) -> Matrix {
        reshape_vector_to_matrix(
            &self.amplitudes,
            self.y_alphabet.len(),
            self.x_alphabet.len(),
            Layout::SuffixMajor,
        )
        .expect("shape checked at construction")
    }
}

fn check_state_shape(x: &Alphabet, y: &Alphabet, amplitudes: &[f64]) -> Result<()> {
    let dim = x.len() * y.len();
    if dim > MAX_STATE_DIM {
        return Err(Error::TooLarge(format!(
            "state dimension {dim} exceeds {MAX_STATE_DIM}"
        )));
    }
    if amplitudes.len() != dim {
        return Err(Error::dim(format!(
            "{} amplitudes for a {}x{} product",
            amplitudes.len(),
            x.len(),
            y.len()
        )));
    }
    if let Some(i) = amplitudes.iter().position(|a| !a.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Single(Alphabet),
    Product { x: Alphabet, y: Alphabet },
}

impl Basis {
    pub fn dim(&self) -> usize {
        match self {
            Basis::Single(a) => a.len(),
            Basis::Product { x, y } => x.len() * y.len(),
        }
    }

    /// Human-readable label of each basis element, `x|y` for pairs.
    pub fn labels(&self) -> Vec<String> {
        match self {
            Basis::Single(a) => a.symbols().to_vec(),
            Basis::Product { x, y } => y
                .symbols()
                .iter()
                .flat_map(|ys| x.symbols().iter().map(move |xs| format!("{xs}|{ys}")))
                .collect(),
        }
    }
}

/// A symmetric positive semidefinite unit-trace matrix on a labelled basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    basis: Basis,
    matrix: Matrix,
}

impl DensityMatrix {
    /// Validates symmetry, positivity and unit trace.
    pub fn new(basis: Basis, matrix: Matrix) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() != basis.dim() {
            return Err(Error::dim(format!(
                "{}x{} matrix on a basis of size {}",
                matrix.rows(),
                matrix.cols(),
                basis.dim()
            )));
        }
        let trace = matrix.trace();
        if (trace - 1.0).abs() > DENSITY_TOLERANCE {
            return Err(Error::NotNormalized {
                what: "trace",
                value: trace,
            });
        }
        let min = linalg::min_eigenvalue(&matrix)?;
        if min < -DENSITY_TOLERANCE {
            return Err(Error::invalid(format!(
                "matrix is not positive semidefinite (eigenvalue {min:e})"
            )));
        }
        Ok(Self { basis, matrix })
    }

    /// For matrices that are densities by construction.
    pub(crate) fn from_parts(basis: Basis, matrix: Matrix) -> Self {
        debug_assert_eq!(matrix.rows(), basis.dim());
        Self { basis, matrix }
    }

    /// `σ ⊗ τ` on `X × Y` in the suffix-major layout.
    pub fn tensor(sigma: &DensityMatrix, tau: &DensityMatrix) -> Result<Self> {
        let (Basis::Single(x), Basis::Single(y)) = (&sigma.basis, &tau.basis) else {
            return Err(Error::BasisMismatch("tensor factors must be single alphabets".into()));
        };
        let (nx, ny) = (x.len(), y.len());
        let dim = nx * ny;
        if dim > MAX_DENSITY_DIM {
            return Err(Error::TooLarge(format!("density dimension {dim}")));
        }
        let mut m = Matrix::zeros(dim, dim);
        for a in 0..ny {
            for b in 0..ny {
                let t = tau.matrix.get(a, b);
                for i in 0..nx {
                    for j in 0..nx {
                        m.set(pair_index(nx, i, a), pair_index(nx, j, b), t * sigma.matrix.get(i, j));
                    }
                }
            }
        }
        Ok(Self::from_parts(
            Basis::Product {
                x: x.clone(),
                y: y.clone(),
            },
            m,
        ))
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }
}

/// `√π` amplitudes in the suffix-major layout.
pub fn build_state(pi: &JointDistribution) -> PureState {
    let (nx, ny) = (pi.x_alphabet.len(), pi.y_alphabet.len());
    let mut amplitudes = vec![0.0; nx * ny];
    for i in 0..nx {
        for alpha in 0..ny {
            amplitudes[pair_index(nx, i, alpha)] = pi.prob(i, alpha).sqrt();
        }
    }
    PureState {
        x_alphabet: pi.x_alphabet.clone(),
        y_alphabet: pi.y_alphabet.clone(),
        amplitudes,
    }
}

/// The classical embedding: `π` on the diagonal.
pub fn density_diag(pi: &JointDistribution) -> Result<DensityMatrix> {
    let (nx, ny) = (pi.x_alphabet.len(), pi.y_alphabet.len());
    check_density_dim(nx * ny)?;
    let mut diag = vec![0.0; nx * ny];
    for i in 0..nx {
        for alpha in 0..ny {
            diag[pair_index(nx, i, alpha)] = pi.prob(i, alpha);
        }
    }
    Ok(DensityMatrix::from_parts(
        Basis::Product {
            x: pi.x_alphabet.clone(),
            y: pi.y_alphabet.clone(),
        },
        Matrix::diagonal(&diag),
    ))
}

/// `|ψ⟩⟨ψ|`.
pub fn density_projection(psi: &PureState) -> Result<DensityMatrix> {
    let norm = psi.norm();
    if (norm - 1.0).abs() > PROJECTION_NORM_TOLERANCE {
        return Err(Error::NotNormalized {
            what: "norm",
            value: norm,
        });
    }
    check_density_dim(psi.amplitudes.len())?;
    Ok(DensityMatrix::from_parts(
        Basis::Product {
            x: psi.x_alphabet.clone(),
            y: psi.y_alphabet.clone(),
        },
        Matrix::outer(&psi.amplitudes, &psi.amplitudes),
    ))
}

fn check_density_dim(dim: usize) -> Result<()> {
    if dim > MAX_DENSITY_DIM {
        return Err(Error::TooLarge(format!(
            "dense density of dimension {dim} exceeds {MAX_DENSITY_DIM}"
        )));
    }
    Ok(())
}

/// Coordinate partial trace over the factor not kept.
pub fn partial_trace(rho: &DensityMatrix, keep: Keep) -> Result<DensityMatrix> {
    let Basis::Product { x, y } = &rho.basis else {
        return Err(Error::BasisMismatch(
            "partial trace needs a product basis".into(),
        ));
    };
    let (nx, ny) = (x.len(), y.len());
    let m = &rho.matrix;
    let out = match keep {
        Keep::X => {
            let mut r = Matrix::zeros(nx, nx);
            for i in 0..nx {
                for j in 0..nx {
                    let s: f64 = (0..ny)
                        .map(|a| m.get(pair_index(nx, i, a), pair_index(nx, j, a)))
                        .sum();
                    r.set(i, j, s);
                }
            }
            DensityMatrix::from_parts(Basis::Single(x.clone()), r)
        }
        Keep::Y => {
            let mut r = Matrix::zeros(ny, ny);
            for a in 0..ny {
                for b in 0..ny {
                    let s: f64 = (0..nx)
                        .map(|i| m.get(pair_index(nx, i, a), pair_index(nx, i, b)))
                        .sum();
                    r.set(a, b, s);
                }
            }
            DensityMatrix::from_parts(Basis::Single(y.clone()), r)
        }
    };
    Ok(out)
}

/// `MᵀM` (keep X) or `MMᵀ` (keep Y).
pub fn reduced_via_gram(psi: &PureState, keep: Keep) -> DensityMatrix {
    let m = psi.coefficient_matrix();
    match keep {
        Keep::X => DensityMatrix::from_parts(Basis::Single(psi.x_alphabet.clone()), m.gram()),
        Keep::Y => DensityMatrix::from_parts(
            Basis::Single(psi.y_alphabet.clone()),
            m.transpose().gram(),
        ),
    }
}

/// `Σ_k A_k |ψ⟩⟨ψ| A_kᵀ` where `A_k` contracts the traced factor with its
/// `k`-th basis vector.
pub fn kraus_reduced(psi: &PureState, keep: Keep) -> DensityMatrix {
    let (nx, ny) = (psi.x_alphabet.len(), psi.y_alphabet.len());
    let amps = &psi.amplitudes;
    match keep {
        Keep::X => {
            let mut r = Matrix::zeros(nx, nx);
            for a in 0..ny {
                let slice = &amps[a * nx..(a + 1) * nx];
                accumulate_outer(&mut r, slice);
            }
            DensityMatrix::from_parts(Basis::Single(psi.x_alphabet.clone()), r)
        }
        Keep::Y => {
            let mut r = Matrix::zeros(ny, ny);
            let mut slice = vec![0.0; ny];
            for i in 0..nx {
                for (a, s) in slice.iter_mut().enumerate() {
                    *s = amps[pair_index(nx, i, a)];
                }
                accumulate_outer(&mut r, &slice);
            }
            DensityMatrix::from_parts(Basis::Single(psi.y_alphabet.clone()), r)
        }
    }
}

pub(crate) fn accumulate_outer(m: &mut Matrix, v: &[f64]) {
    for (i, vi) in v.iter().enumerate() {
        if *vi == 0.0 {
            continue;
        }
        for (j, vj) in v.iter().enumerate() {
            m.add_at(i, j, vi * vj);
        }
    }
}

/// The diagonal of `ρ`.
pub fn born_distribution(rho: &DensityMatrix) -> Vec<f64> {
    rho.matrix.diag()
}

/// Classical marginal of `π`.
pub fn marginalize(pi: &JointDistribution, keep: Keep) -> Vec<f64> {
    let (nx, ny) = (pi.x_alphabet.len(), pi.y_alphabet.len());
    match keep {
        Keep::X => (0..nx)
            .map(|i| (0..ny).map(|a| pi.prob(i, a)).sum())
            .collect(),
        Keep::Y => (0..ny)
            .map(|a| (0..nx).map(|i| pi.prob(i, a)).sum())
            .collect(),
    }
}

/// `ψ = Σ σ_k f_k ⊗ e_k` with `e_k` on `X` and `f_k` on `Y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchmidtData {
    pub x_alphabet: Alphabet,
    pub y_alphabet: Alphabet,
    pub coefficients: Vec<f64>,
    /// `|X| × r`, one orthonormal column per coefficient.
    pub x_vectors: Matrix,
    /// `|Y| × r`, one orthonormal column per coefficient.
    pub y_vectors: Matrix,
}

impl SchmidtData {
    pub fn rank(&self) -> usize {
        self.coefficients.len()
    }
}

pub fn schmidt(psi: &PureState) -> Result<SchmidtData> {
    let d = linalg::svd(&psi.coefficient_matrix())?;
    let keep = d
        .singular_values
        .iter()
        .take_while(|s| **s > SCHMIDT_CUTOFF)
        .count()
        .max(1);
    let x_cols: Vec<Vec<f64>> = (0..keep).map(|k| d.v.column(k)).collect();
    let y_cols: Vec<Vec<f64>> = (0..keep).map(|k| d.u.column(k)).collect();
    Ok(SchmidtData {
        x_alphabet: psi.x_alphabet.clone(),
        y_alphabet: psi.y_alphabet.clone(),
        coefficients: d.singular_values[..keep].to_vec(),
        x_vectors: Matrix::from_columns(&x_cols)?,
        y_vectors: Matrix::from_columns(&y_cols)?,
    })
}

/// Reassembles `M = Σ σ_k f_k e_kᵀ` and flattens it back into a state.
pub fn reconstruct_state(sd: &SchmidtData) -> Result<PureState> {
    let (nx, ny) = (sd.x_alphabet.len(), sd.y_alphabet.len());
    let r = sd.coefficients.len();
    if sd.x_vectors.rows() != nx
        || sd.y_vectors.rows() != ny
        || sd.x_vectors.cols() != r
        || sd.y_vectors.cols() != r
    {
        return Err(Error::dim("Schmidt vectors do not match alphabets and rank"));
    }
    let total: f64 = sd.coefficients.iter().map(|s| s * s).sum();
    if (total - 1.0).abs() > DENSITY_TOLERANCE {
        return Err(Error::NotNormalized {
            what: "sum of squared Schmidt coefficients",
            value: total,
        });
    }
    let mut m = Matrix::zeros(ny, nx);
    for (k, s) in sd.coefficients.iter().enumerate() {
        for a in 0..ny {
            let fa = s * sd.y_vectors.get(a, k);
            for i in 0..nx {
                m.add_at(a, i, fa * sd.x_vectors.get(i, k));
            }
        }
    }
    let v = linalg::reshape_matrix_to_vector(&m, Layout::SuffixMajor);
    PureState::normalized(sd.x_alphabet.clone(), sd.y_alphabet.clone(), v)
}

/// `−Σ λ ln λ` over the spectrum.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let eig = linalg::sym_eigen(&rho.matrix)?;
    Ok(shannon(eig.eigenvalues.iter().copied()))
}

/// Shannon entropy of the squared Schmidt coefficients.
pub fn entanglement_entropy(psi: &PureState) -> Result<f64> {
    let sd = schmidt(psi)?;
    Ok(shannon(sd.coefficients.iter().map(|s| s * s)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// One column per eigenvalue.
    pub eigenvectors: Matrix,
}

impl Spectrum {
    pub fn of(rho: &DensityMatrix) -> Result<Self> {
        let e = linalg::sym_eigen(&rho.matrix)?;
        Ok(Self {
            eigenvalues: e.eigenvalues,
            eigenvectors: e.eigenvectors,
        })
    }
}

/// Everything the reduced densities of one distribution say about it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    pub rho_x: DensityMatrix,
    pub rho_y: DensityMatrix,
    /// The nonzero spectrum shared by both sides (squared Schmidt coefficients).
    pub eigenvalues: Vec<f64>,
    pub x_spectrum: Spectrum,
    pub y_spectrum: Spectrum,
    pub marginal_x: Vec<f64>,
    pub marginal_y: Vec<f64>,
    pub entanglement_entropy: f64,
    pub marginal_entropy_x: f64,
    pub marginal_entropy_y: f64,
}

pub fn reduce(pi: &JointDistribution) -> Result<Reduction> {
    let psi = build_state(pi);
    let rho_x = reduced_via_gram(&psi, Keep::X);
    let rho_y = reduced_via_gram(&psi, Keep::Y);
    let sd = schmidt(&psi)?;
    let eigenvalues: Vec<f64> = sd.coefficients.iter().map(|s| s * s).collect();
    let marginal_x = marginalize(pi, Keep::X);
    let marginal_y = marginalize(pi, Keep::Y);
    Ok(Reduction {
        x_spectrum: Spectrum::of(&rho_x)?,
        y_spectrum: Spectrum::of(&rho_y)?,
        entanglement_entropy: shannon(eigenvalues.iter().copied()),
        marginal_entropy_x: shannon(marginal_x.iter().copied()),
        marginal_entropy_y: shannon(marginal_y.iter().copied()),
        rho_x,
        rho_y,
        eigenvalues,
        marginal_x,
        marginal_y,
    })
}

pub(crate) fn shannon(values: impl Iterator<Item = f64>) -> f64 {
    let h: f64 = values
        .filter(|l| *l > ENTROPY_CUTOFF)
        .map(|l| -l * l.ln())
        .sum();
    h.max(0.0)
}
