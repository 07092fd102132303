//! Dense real linear algebra: a row-major [`Matrix`], a cyclic Jacobi
//! symmetric eigensolver, a one-sided Jacobi SVD, and the vector/matrix
//! reshape used to view a bipartite state as a linear map.
//!
//! Both decompositions share one output convention so that results are
//! reproducible bit for bit:
//!
//! * values are sorted descending;
//! * each eigenvector (each right singular vector) has its first nonzero
//!   coordinate positive, and a left singular vector is flipped along with
//!   its right partner;
//! * values closer than [`TIE_TOLERANCE`] (relative to the largest magnitude)
//!   form a tie group, ordered by the lexicographically greatest coordinate
//!   sequence of the sign-fixed vector.
//!
//! Jacobi rotations are only ever applied to pairs with a nonzero coupling, so
//! a matrix with exact block structure keeps exactly block-pure eigenvectors,
//! even across blocks that share an eigenvalue.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetry tolerance accepted by [`sym_eigen`] and [`is_psd`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Relative gap under which two eigen/singular values are treated as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Magnitude under which a coordinate counts as zero for the sign convention.
const SIGN_EPSILON: f64 = 1e-12;

const MAX_SWEEPS: usize = 100;

#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::dim(format!("matrix must be nonempty, got {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::dim(format!(
                "{} entries given for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix must be nonempty");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::dim("ragged rows"));
        }
        Self::new(nrows, ncols, rows.concat())
    }

    /// `a bᵀ` for column vectors `a` and `b`.
    pub fn outer(a: &[f64], b: &[f64]) -> Self {
        let mut m = Self::zeros(a.len(), b.len());
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                m.data[i * b.len() + j] = x * y;
            }
        }
        m
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let ncols = columns.len();
        let nrows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != nrows) {
            return Err(Error::dim("columns of unequal length"));
        }
        let mut data = vec![0.0; nrows * ncols];
        for (j, c) in columns.iter().enumerate() {
            for (i, v) in c.iter().enumerate() {
                data[i * ncols + j] = *v;
            }
        }
        Self::new(nrows, ncols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub(crate) fn add_at(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] += v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diag().iter().sum()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j);
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::dim(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::dim(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `selfᵀ · self`.
    pub fn gram(&self) -> Self {
        let mut g = Self::zeros(self.cols, self.cols);
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..self.cols {
                if row[i] == 0.0 {
                    continue;
                }
                for j in 0..self.cols {
                    g.data[i * self.cols + j] += row[i] * row[j];
                }
            }
        }
        g
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Matrix) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    fn zip_with(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::dim(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        })
    }

    /// Largest absolute entrywise difference; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest |m_ij − m_ji|; infinite when not square.
    pub fn asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    fn require_symmetric(&self) -> Result<()> {
        if !self.is_square() {
            return Err(Error::dim(format!(
                "expected a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        let asym = self.asymmetry();
        if asym > SYMMETRY_TOLERANCE {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(())
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Matrix::from_rows(&rows)
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        m.to_rows()
    }
}

/// Spectral decomposition `m = E · diag(λ) · Eᵀ` of a symmetric matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymEigen {
    pub eigenvalues: Vec<f64>,
    /// Column `i` is the eigenvector for `eigenvalues[i]`.
    pub eigenvectors: Matrix,
}

impl SymEigen {
    pub fn eigenvector(&self, i: usize) -> Vec<f64> {
        self.eigenvectors.column(i)
    }

    pub fn reconstruct(&self) -> Matrix {
        let e = &self.eigenvectors;
        let n = e.rows();
        let mut out = Matrix::zeros(n, n);
        for (k, lambda) in self.eigenvalues.iter().enumerate() {
            for i in 0..n {
                let eik = e.get(i, k) * lambda;
                for j in 0..n {
                    out.add_at(i, j, eik * e.get(j, k));
                }
            }
        }
        out
    }
}

/// Trimmed singular value decomposition `m = u · diag(s) · vᵀ`, keeping
/// `min(rows, cols)` singular triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Svd {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub v: Matrix,
}

impl Svd {
    pub fn reconstruct(&self) -> Matrix {
        let (r, c) = (self.u.rows(), self.v.rows());
        let mut out = Matrix::zeros(r, c);
        for (k, s) in self.singular_values.iter().enumerate() {
            for i in 0..r {
                let uik = self.u.get(i, k) * s;
                if uik == 0.0 {
                    continue;
                }
                for j in 0..c {
                    out.add_at(i, j, uik * self.v.get(j, k));
                }
            }
        }
        out
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
pub fn sym_eigen(m: &Matrix) -> Result<SymEigen> {
    m.require_symmetric()?;
    let n = m.rows();

    // Work on the exactly symmetrized copy.
    let mut a = m.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (a.get(i, j) + a.get(j, i));
            a.set(i, j, avg);
            a.set(j, i, avg);
        }
    }
    let mut v = Matrix::identity(n);

    for sweep in 0..MAX_SWEEPS {
        let mut off_diagonal = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let g = 100.0 * apq.abs();
                // Once the coupling no longer registers against either
                // diagonal entry it is dropped outright.
                if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    a.set(p, q, 0.0);
                    a.set(q, p, 0.0);
                    continue;
                }
                off_diagonal = true;
                let h = aqq - app;
                let t = if h.abs() + g == h.abs() {
                    apq / h
                } else {
                    let theta = 0.5 * h / apq;
                    let t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                    if theta < 0.0 {
                        -t
                    } else {
                        t
                    }
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a.get(r, p);
                    let arq = a.get(r, q);
                    let new_rp = c * arp - s * arq;
                    let new_rq = s * arp + c * arq;
                    a.set(r, p, new_rp);
                    a.set(p, r, new_rp);
                    a.set(r, q, new_rq);
                    a.set(q, r, new_rq);
                }
                a.set(p, p, app - t * apq);
                a.set(q, q, aqq + t * apq);
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);
                for r in 0..n {
                    let vrp = v.get(r, p);
                    let vrq = v.get(r, q);
                    v.set(r, p, c * vrp - s * vrq);
                    v.set(r, q, s * vrp + c * vrq);
                }
            }
        }
        if !off_diagonal {
            break;
        }
    }

    let pairs: Vec<(f64, Vec<f64>)> = (0..n)
        .map(|k| {
            let mut vec = v.column(k);
            fix_sign(&mut vec);
            (a.get(k, k), vec)
        })
        .collect();
    let pairs = sort_spectrum(pairs);
    let eigenvalues = pairs.iter().map(|p| p.0).collect();
    let columns: Vec<Vec<f64>> = pairs.into_iter().map(|p| p.1).collect();
    Ok(SymEigen {
        eigenvalues,
        eigenvectors: Matrix::from_columns(&columns)?,
    })
}

/// One-sided (Hestenes) Jacobi SVD.
pub fn svd(m: &Matrix) -> Result<Svd> {
    if let Some(i) = m.as_slice().iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let tall = m.rows() >= m.cols();
    let work = if tall { m.clone() } else { m.transpose() };
    let (r, c) = (work.rows(), work.cols());

    // Column-major copy so that column rotations touch contiguous memory.
    let mut cols: Vec<Vec<f64>> = (0..c).map(|j| work.column(j)).collect();
    let mut right: Vec<Vec<f64>> = (0..c)
        .map(|j| (0..c).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..c {
            for q in (p + 1)..c {
                let alpha: f64 = cols[p].iter().map(|x| x * x).sum();
                let beta: f64 = cols[q].iter().map(|x| x * x).sum();
                let gamma: f64 = cols[p].iter().zip(&cols[q]).map(|(x, y)| x * y).sum();
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                rotate_pair(&mut cols, p, q, cs, sn);
                rotate_pair(&mut right, p, q, cs, sn);
            }
        }
        if !rotated {
            break;
        }
    }

    let sigma: Vec<f64> = cols
        .iter()
        .map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let sigma_max = sigma.iter().cloned().fold(0.0, f64::max);
    let negligible = sigma_max * f64::EPSILON * (r.max(c) as f64);

    // (sigma, left, right) triples; left vectors for negligible singular
    // values are filled in afterwards by orthonormal completion.
    let mut triples: Vec<(f64, Option<Vec<f64>>, Vec<f64>)> = (0..c)
        .map(|j| {
            let left = if sigma[j] > negligible && sigma[j] > 0.0 {
                Some(cols[j].iter().map(|x| x / sigma[j]).collect())
            } else {
                None
            };
            (sigma[j], left, right[j].clone())
        })
        .collect();

    let mut basis: Vec<Vec<f64>> = triples.iter().filter_map(|t| t.1.clone()).collect();
    for t in triples.iter_mut().filter(|t| t.1.is_none()) {
        let fill = orthonormal_complement_vector(&basis, r);
        basis.push(fill.clone());
        t.1 = Some(fill);
    }

    // In the wide case the roles of the factors swap.
    let mut pairs: Vec<(f64, Vec<f64>, Vec<f64>)> = triples
        .into_iter()
        .map(|(s, left, rt)| {
            let left = left.expect("filled above");
            let (mut u, mut v) = if tall { (left, rt) } else { (rt, left) };
            if sign_flip_needed(&v) {
                u.iter_mut().for_each(|x| *x = -*x);
                v.iter_mut().for_each(|x| *x = -*x);
            }
            (s, u, v)
        })
        .collect();

    let order = spectrum_order(
        &pairs
            .iter()
            .map(|(s, _, v)| (*s, v.as_slice()))
            .collect::<Vec<_>>(),
    );
    let mut sorted = Vec::with_capacity(pairs.len());
    let mut slots: Vec<Option<_>> = pairs.drain(..).map(Some).collect();
    for i in order {
        sorted.push(slots[i].take().expect("permutation"));
    }

    let singular_values = sorted.iter().map(|t| t.0).collect();
    let u_cols: Vec<Vec<f64>> = sorted.iter().map(|t| t.1.clone()).collect();
    let v_cols: Vec<Vec<f64>> = sorted.into_iter().map(|t| t.2).collect();
    Ok(Svd {
        u: Matrix::from_columns(&u_cols)?,
        singular_values,
        v: Matrix::from_columns(&v_cols)?,
    })
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &Matrix) -> Result<f64> {
    let eig = sym_eigen(m)?;
    Ok(eig
        .eigenvalues
        .last()
        .copied()
        .expect("nonempty matrix has eigenvalues"))
}

/// True iff the smallest eigenvalue of `m` is at least `-tol`.
pub fn is_psd(m: &Matrix, tol: f64) -> Result<bool> {
    Ok(min_eigenvalue(m)? >= -tol)
}

/// Coefficient layouts for viewing a bipartite vector as a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Layout {
    /// The suffix index is the slow index: coefficient `(x_i, y_α)` sits at
    /// `α·|X| + i`, which becomes entry `(α, i)` of the matrix.
    #[default]
    SuffixMajor,
}

/// Views a vector over `X × Y` as the `|Y| × |X|` map `C^X → C^Y`.
pub fn reshape_vector_to_matrix(v: &[f64], rows: usize, cols: usize, layout: Layout) -> Result<Matrix> {
    if v.len() != rows * cols {
        return Err(Error::dim(format!(
            "vector of length {} cannot be viewed as {rows}x{cols}",
            v.len()
        )));
    }
    match layout {
        Layout::SuffixMajor => Matrix::new(rows, cols, v.to_vec()),
    }
}

/// Inverse of [`reshape_vector_to_matrix`].
pub fn reshape_matrix_to_vector(m: &Matrix, layout: Layout) -> Vec<f64> {
    match layout {
        Layout::SuffixMajor => m.as_slice().to_vec(),
    }
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = cols.split_at_mut(q);
    let cp = &mut head[p];
    let cq = &mut tail[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let xp = *x;
        let yq = *y;
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

fn first_significant(v: &[f64]) -> Option<f64> {
    v.iter().copied().find(|x| x.abs() > SIGN_EPSILON)
}

fn sign_flip_needed(v: &[f64]) -> bool {
    match first_significant(v) {
        Some(x) => x < 0.0,
        // Every coordinate is tiny: fall back to the largest one.
        None => v
            .iter()
            .copied()
            .max_by(|a, b| a.abs().total_cmp(&b.abs()))
            .is_some_and(|x| x < 0.0),
    }
}

fn fix_sign(v: &mut [f64]) {
    if sign_flip_needed(v) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn lexicographic_desc(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match y.total_cmp(x) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// Permutation sorting `(value, vector)` pairs descending by value with the
/// lexicographic tie-break on vectors.
fn spectrum_order(items: &[(f64, &[f64])]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..items.len()).collect();
    idx.sort_by(|&i, &j| items[j].0.total_cmp(&items[i].0));
    let scale = items.iter().map(|x| x.0.abs()).fold(1.0, f64::max);
    let tol = TIE_TOLERANCE * scale;

    let mut out = Vec::with_capacity(idx.len());
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && items[idx[end - 1]].0 - items[idx[end]].0 <= tol {
            end += 1;
        }
        let mut group = idx[start..end].to_vec();
        group.sort_by(|&i, &j| lexicographic_desc(items[i].1, items[j].1).then(i.cmp(&j)));
        out.extend(group);
        start = end;
    }
    out
}

fn sort_spectrum(pairs: Vec<(f64, Vec<f64>)>) -> Vec<(f64, Vec<f64>)> {
    let order = spectrum_order(
        &pairs
            .iter()
            .map(|(l, v)| (*l, v.as_slice()))
            .collect::<Vec<_>>(),
    );
    let mut slots: Vec<Option<(f64, Vec<f64>)>> = pairs.into_iter().map(Some).collect();
    order
        .into_iter()
        .map(|i| slots[i].take().expect("permutation"))
        .collect()
}

/// A unit vector orthogonal to every vector in `basis` (assumed orthonormal),
/// obtained by Gram–Schmidt on the standard basis vectors in index order.
fn orthonormal_complement_vector(basis: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let mut best: Option<Vec<f64>> = None;
    let mut best_norm = 0.0;
    for k in 0..dim {
        let mut w = vec![0.0; dim];
        w[k] = 1.0;
        // Two passes of classical Gram–Schmidt for stability.
        for _ in 0..2 {
            for b in basis {
                let dot: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= dot * bi;
                }
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.5 {
            return w.into_iter().map(|x| x / norm).collect();
        }
        if norm > best_norm {
            best_norm = norm;
            best = Some(w);
        }
    }
    let w = best.expect("complement exists when basis is not full");
    w.into_iter().map(|x| x / best_norm).collect()
}
