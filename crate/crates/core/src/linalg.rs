//! Dense complex linear algebra used by the coupling and solver layers.
//!
//! Large matrices (the L×L coupling matrix) live in [`HermitianMatrix`], a
//! row-major dense store with a deterministic row-parallel mat-vec. Small
//! per-frequency matrices (M2×M2, M2×M1) go through nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::stream_rng;

pub type C64 = Complex64;

/// Rows below this size are multiplied on the calling thread.
const PAR_MATVEC_MIN: usize = 128;

/// Sum with a fixed binary-tree association over blocks of 64 terms.
///
/// The association depends only on the input length, so results are
/// reproducible regardless of thread count.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn pairwise_sum_complex(values: &[C64]) -> C64 {
    const BLOCK: usize = 64;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum_complex(&values[..mid]) + pairwise_sum_complex(&values[mid..])
}

/// `Σ conj(a_k) b_k`.
pub fn dot_conj(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// Dense Hermitian matrix, both triangles stored, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    n: usize,
    data: Vec<C64>,
}

impl HermitianMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    /// Build from a full row-major buffer. The lower triangle is rebuilt from
    /// the upper one and the diagonal imaginary parts are zeroed, so the
    /// result is exactly Hermitian.
    pub fn from_upper(n: usize, mut data: Vec<C64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Dimension(format!(
                "hermitian buffer has {} entries, expected {}",
                data.len(),
                n * n
            )));
        }
        for r in 0..n {
            data[r * n + r].im = 0.0;
            for c in (r + 1)..n {
                data[c * n + r] = data[r * n + c].conj();
            }
        }
        Ok(Self { n, data })
    }

    /// Build from an arbitrary square matrix, checking Hermitian symmetry to
    /// `rel_tol` relative to the largest entry.
    pub fn from_dmatrix(m: &DMatrix<C64>, rel_tol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension(format!("matrix is {}x{}, not square", m.nrows(), m.ncols())));
        }
        let n = m.nrows();
        let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut data = vec![C64::new(0.0, 0.0); n * n];
        for r in 0..n {
            for c in 0..n {
                let a = m[(r, c)];
                let b = m[(c, r)].conj();
                if (a - b).norm() > rel_tol * scale.max(f64::MIN_POSITIVE) {
                    return Err(Error::Contract(format!("matrix is not Hermitian at ({r},{c})")));
                }
                data[r * n + c] = a;
            }
        }
        Self::from_upper(n, data)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.n + c]
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.n..(r + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.data[i * self.n + i].re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for z in &mut self.data {
            *z *= factor;
        }
    }

    /// `y = M x`, row-parallel with a sequential reduction inside each row.
    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        let n = self.n;
        if n < PAR_MATVEC_MIN {
            for (r, out) in y.iter_mut().enumerate() {
                *out = row_dot(&self.data[r * n..(r + 1) * n], x);
            }
        } else {
            y.par_iter_mut()
                .zip(self.data.par_chunks(n))
                .for_each(|(out, row)| *out = row_dot(row, x));
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.n];
        self.matvec_into(x, &mut y);
        y
    }

    /// `xᴴ M x` (real for Hermitian M).
    pub fn quadratic_form(&self, x: &[C64]) -> f64 {
        let y = self.matvec(x);
        dot_conj(x, &y).re
    }

    pub fn to_dmatrix(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.n, self.n, |r, c| self.get(r, c))
    }
}

fn row_dot(row: &[C64], x: &[C64]) -> C64 {
    let mut re = [0.0f64; 4];
    let mut im = [0.0f64; 4];
    let chunks = row.len() / 4;
    for k in 0..chunks {
        for u in 0..4 {
            let a = row[4 * k + u];
            let b = x[4 * k + u];
            re[u] += a.re * b.re - a.im * b.im;
            im[u] += a.re * b.im + a.im * b.re;
        }
    }
    let mut acc = C64::new((re[0] + re[1]) + (re[2] + re[3]), (im[0] + im[1]) + (im[2] + im[3]));
    for k in (4 * chunks)..row.len() {
        acc += row[k] * x[k];
    }
    acc
}
#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    /// Stop when `‖Mu − λu‖ ≤ tol·|λ|`.
    pub tol: f64,
    /// Krylov subspace size per restart cycle.
    pub krylov_dim: usize,
    /// Matrix-vector product budget; `None` means `max(10·n, 500)`.
    pub max_matvecs: Option<usize>,
    /// Seed of the start-vector perturbation.
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            krylov_dim: 32,
            max_matvecs: None,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    /// Unit-norm eigenvector estimate.
    pub vector: Vec<C64>,
    /// Matrix-vector products spent.
    pub iterations: usize,
    /// `‖Mu − λu‖` at exit.
    pub residual: f64,
    pub converged: bool,
}

/// Dominant (largest algebraic) eigenpair of a Hermitian matrix.
///
/// Explicitly restarted Lanczos with full reorthogonalization: each cycle
/// builds a Krylov basis from the current iterate and restarts from the top
/// Ritz vector. The start vector is the normalized all-ones vector plus a
/// small seeded perturbation, so it is never exactly orthogonal to the
/// dominant eigenspace.
pub fn dominant_eigenpair(m: &HermitianMatrix, opts: EigenOptions) -> Result<EigenPair> {
    let n = m.dim();
    if n == 0 {
        return Err(Error::Dimension("empty matrix".into()));
    }
    if m.frobenius_norm() == 0.0 {
        return Err(Error::Numerical("zero matrix has no dominant eigenvector".into()));
    }
    let budget = opts.max_matvecs.unwrap_or((10 * n).max(500));
    let k = opts.krylov_dim.clamp(1, n);

    let mut rng = stream_rng(opts.seed, &[]);
    let mut x: Vec<C64> = (0..n)
        .map(|_| C64::new(1.0 + 0.1 * (rng.random::<f64>() - 0.5), 0.1 * (rng.random::<f64>() - 0.5)))
        .collect();
    normalize(&mut x);

    let mut used = 0usize;
    let mut best: Option<EigenPair> = None;
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(k);
    let mut w = vec![C64::new(0.0, 0.0); n];
    while used < budget {
        basis.clear();
        basis.push(x.clone());
        let mut alpha = Vec::with_capacity(k);
        let mut beta: Vec<f64> = Vec::with_capacity(k);
        for j in 0..k {
            m.matvec_into(&basis[j], &mut w);
            used += 1;
            let a = dot_conj(&basis[j], &w).re;
            alpha.push(a);
            // Two passes of classical Gram-Schmidt against the whole basis.
            for _ in 0..2 {
                for q in &basis {
                    let c = dot_conj(q, &w);
                    for (wi, qi) in w.iter_mut().zip(q) {
                        *wi -= c * qi;
                    }
                }
            }
            let b = norm_sqr(&w).sqrt();
            let scale = alpha.iter().fold(0.0f64, |s, a| s.max(a.abs())).max(f64::MIN_POSITIVE);
            if j + 1 == k || b <= 1e-13 * scale || used >= budget {
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|z| z / b).collect());
        }

        let dim = alpha.len();
        let tri = DMatrix::from_fn(dim, dim, |r, c| {
            if r == c {
                alpha[r]
            } else if r.abs_diff(c) == 1 {
                beta[r.min(c)]
            } else {
                0.0
            }
        });
        let eig = tri.symmetric_eigen();
        let top = (0..dim)
            .max_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
            .expect("nonempty");
        let theta = eig.eigenvalues[top];
        let mut u = vec![C64::new(0.0, 0.0); n];
        for (i, q) in basis.iter().enumerate().take(dim) {
            let s = eig.eigenvectors[(i, top)];
            for (ui, qi) in u.iter_mut().zip(q) {
                *ui += qi * s;
            }
        }
        normalize(&mut u);

        m.matvec_into(&u, &mut w);
        used += 1;
        let value = dot_conj(&u, &w).re;
        let residual = w
            .iter()
            .zip(&u)
            .map(|(wi, ui)| (wi - ui * value).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if !value.is_finite() || !residual.is_finite() || !theta.is_finite() {
            return Err(Error::NonFinite("eigen-solver diverged".into()));
        }
        let converged = residual <= opts.tol * value.abs().max(f64::MIN_POSITIVE);
        let pair = EigenPair {
            value,
            vector: u.clone(),
            iterations: used,
            residual,
            converged,
        };
        if converged {
            return Ok(pair);
        }
        if best.as_ref().is_none_or(|b| pair.value > b.value) {
            best = Some(pair);
        }
        x = u;
    }
    Ok(best.expect("at least one cycle runs"))
}

fn normalize(x: &mut [C64]) {
    let nrm = norm_sqr(x).sqrt();
    for xi in x.iter_mut() {
        *xi /= nrm;
    }
}

/// Numerical rank: number of singular values above `rel_tol·σ_max`.
pub fn numerical_rank(m: &DMatrix<C64>, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let max_abs = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max_abs == 0.0 {
        return 0;
    }
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Numerical rank, but only resolved up to `cap`: any matrix whose rank is
/// at least `cap` reports `cap`. Avoids an SVD when `cap <= 1`.
pub fn numerical_rank_capped(m: &DMatrix<C64>, rel_tol: f64, cap: usize) -> usize {
    if cap == 0 {
        return 0;
    }
    if cap == 1 {
        return usize::from(m.iter().any(|z| *z != C64::new(0.0, 0.0)));
    }
    numerical_rank(m, rel_tol).min(cap)
}

/// `ln det(I + Q/n0)` for Hermitian PSD `Q`, via Cholesky of the (positive
/// definite) symmetrized matrix.
pub fn ln_det_identity_plus(q: &DMatrix<C64>, n0: f64) -> Result<f64> {
    let n = q.nrows();
    if n != q.ncols() {
        return Err(Error::Dimension("log-det of a non-square matrix".into()));
    }
    let mut a = DMatrix::<C64>::identity(n, n);
    for r in 0..n {
        for c in 0..n {
            let sym = (q[(r, c)] + q[(c, r)].conj()) * 0.5;
            a[(r, c)] += sym / n0;
        }
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("non-finite entry in I + Q/N0".into()));
    }
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::Numerical("I + Q/N0 is not positive definite".into()))?;
    let l = chol.l();
    Ok((0..n).map(|i| 2.0 * l[(i, i)].re.ln()).sum())
}

/// Eigenvalues of a small Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().cloned().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_psd(n: usize, rank: usize, seed: u64) -> HermitianMatrix {
        let mut rng = stream_rng(seed, &[]);
        let a = DMatrix::from_fn(n, rank, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        HermitianMatrix::from_dmatrix(&(&a * a.adjoint()), 1e-12).unwrap()
    }

    #[test]
    fn eigenpair_matches_dense_eigensolver() {
        for seed in 0..5 {
            let m = random_psd(24, 6, seed);
            let ep = dominant_eigenpair(&m, EigenOptions::default()).unwrap();
            let ev = hermitian_eigenvalues(&m.to_dmatrix());
            let top = *ev.last().unwrap();
            assert!(ep.converged);
            assert!((ep.value - top).abs() <= 1e-9 * top, "{} vs {}", ep.value, top);
            let mu = m.matvec(&ep.vector);
            let res: f64 = mu
                .iter()
                .zip(&ep.vector)
                .map(|(a, b)| (a - b * ep.value).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(res <= 1e-9 * top);
        }
    }

    #[test]
    fn eigenpair_rejects_zero_matrix() {
        let m = HermitianMatrix::zeros(4);
        assert!(dominant_eigenpair(&m, EigenOptions::default()).is_err());
    }

    #[test]
    fn eigenpair_recovers_from_orthogonal_start() {
        // Dominant eigenvector (1,-1)/√2 is orthogonal to the all-ones start.
        let d = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(1.0, 0.0),
                C64::new(-1.0, 0.0),
                C64::new(-1.0, 0.0),
                C64::new(1.0, 0.0),
            ],
        );
        let m = HermitianMatrix::from_dmatrix(&(d + DMatrix::identity(2, 2)), 1e-12).unwrap();
        let ep = dominant_eigenpair(&m, EigenOptions::default()).unwrap();
        assert!((ep.value - 3.0).abs() < 1e-9, "{}", ep.value);
    }

    #[test]
    fn log_det_of_scalar() {
        let q = DMatrix::from_element(1, 1, C64::new(3.0, 0.0));
        assert!((ln_det_identity_plus(&q, 1.5).unwrap() - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn ranks() {
        let v = DMatrix::from_fn(3, 1, |i, _| C64::new(i as f64 + 1.0, 0.5));
        let outer = &v * v.adjoint();
        assert_eq!(numerical_rank(&outer, 1e-10), 1);
        assert_eq!(numerical_rank(&DMatrix::<C64>::identity(3, 3), 1e-10), 3);
        assert_eq!(numerical_rank(&DMatrix::<C64>::zeros(3, 3), 1e-10), 0);
        assert_eq!(numerical_rank_capped(&outer, 1e-10, 1), 1);
    }

    #[test]
    fn pairwise_sum_is_accurate() {
        let v: Vec<f64> = (0..10_000).map(|k| 0.1 + (k % 7) as f64 * 1e-3).collect();
        let naive: f64 = v.iter().sum();
        assert!((pairwise_sum(&v) - naive).abs() < 1e-9);
    }

    #[test]
    fn matvec_parallel_and_serial_agree() {
        let m = random_psd(200, 3, 11);
        let x: Vec<C64> = (0..200).map(|k| C64::from_polar(1.0, k as f64 * 0.1)).collect();
        let y = m.matvec(&x);
        for r in [0usize, 57, 199] {
            let direct = row_dot(m.row(r), &x);
            assert_eq!(y[r], direct);
        }
    }
}
