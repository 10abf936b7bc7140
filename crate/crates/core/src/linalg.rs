//! Small dense complex linear algebra.
//!
//! Every system solved in this crate is Hermitian positive definite and tiny
//! (at most `N_RF x N_RF`, i.e. 30x30 in the dense scenario), so a plain
//! row-major matrix with an LL^H Cholesky factorization covers all needs.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        debug_assert!(rows.iter().all(|row| row.len() == c));
        Self {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// `self * v` for a column vector `v`.
    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum::<Complex64>()
            })
            .collect()
    }

    /// `self^T * v` (plain transpose, no conjugation).
    pub fn transpose_matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![Complex64::new(0.0, 0.0); self.cols];
        for i in 0..self.rows {
            let vi = v[i];
            for (j, o) in out.iter_mut().enumerate() {
                *o += self[(i, j)] * vi;
            }
        }
        out
    }

    /// `self^H * v` (conjugate transpose).
    pub fn hermitian_matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![Complex64::new(0.0, 0.0); self.cols];
        for i in 0..self.rows {
            let vi = v[i];
            for (j, o) in out.iter_mut().enumerate() {
                *o += self[(i, j)].conj() * vi;
            }
        }
        out
    }

    /// Rank-1 Hermitian update `self += scale * v * v^H`.
    pub fn add_outer(&mut self, scale: f64, v: &[Complex64]) {
        debug_assert_eq!(self.rows, self.cols);
        debug_assert_eq!(v.len(), self.rows);
        for i in 0..self.rows {
            let vi = v[i];
            for j in 0..self.cols {
                self[(i, j)] += scale * vi * v[j].conj();
            }
        }
    }

    pub fn trace_real(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)].re).sum()
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Cholesky factor (lower triangular, `A = L L^H`) of a Hermitian positive
/// definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<Complex64>,
}

impl Cholesky {
    /// Factorize a Hermitian positive definite matrix. Only the lower
    /// triangle of `a` is read. Positive definiteness is checked against a
    /// pivot tolerance of 1e-12 relative to `trace(A)/n`.
    pub fn new(a: &CMatrix) -> Result<Self> {
        debug_assert_eq!(a.rows, a.cols);
        let n = a.rows;
        let scale = (a.trace_real() / n.max(1) as f64).abs();
        let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
        let mut l = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            let mut d = a[(j, j)].re;
            for k in 0..j {
                d -= l[j * n + k].norm_sqr();
            }
            if d <= tol {
                return Err(Error::numerical(format!(
                    "matrix is not positive definite (pivot {d:.3e} at {j})"
                )));
            }
            let dj = d.sqrt();
            l[j * n + j] = Complex64::new(dj, 0.0);
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = s / dj;
            }
        }
        Ok(Self { n, l })
    }

    /// Solve `A x = b` via forward/back substitution.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(b.len(), self.n);
        let n = self.n;
        // L y = b
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                let lk = self.l[i * n + k];
                y[i] = y[i] - lk * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        // L^H x = y
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let lk = self.l[k * n + i].conj();
                y[i] = y[i] - lk * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        y
    }

    /// `b^H A^{-1} b`, real and nonnegative for Hermitian PD `A`.
    pub fn quadratic_form(&self, b: &[Complex64]) -> f64 {
        // b^H A^-1 b = || L^-1 b ||^2
        let n = self.n;
        let mut y = b.to_vec();
        let mut acc = 0.0;
        for i in 0..n {
            for k in 0..i {
                let lk = self.l[i * n + k];
                y[i] = y[i] - lk * y[k];
            }
            y[i] /= self.l[i * n + i];
            acc += y[i].norm_sqr();
        }
        acc
    }
}

/// Euclidean norm of a complex vector.
pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Inner product `a^H b`.
pub fn vec_dot_h(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Plain (unconjugated) inner product `a^T b`.
pub fn vec_dot_t(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Scale a vector to unit Euclidean norm.
pub fn normalize(v: &mut [Complex64]) {
    let n = vec_norm(v);
    if n > 0.0 {
        for z in v.iter_mut() {
            *z /= n;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn random_vec(rng: &mut impl Rng, n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect()
    }

    /// Random Hermitian PD matrix: sum of outer products plus ridge.
    fn random_hpd(rng: &mut impl Rng, n: usize) -> CMatrix {
        let mut a = CMatrix::zeros(n, n);
        for _ in 0..(2 * n) {
            let v = random_vec(rng, n);
            a.add_outer(1.0, &v);
        }
        for i in 0..n {
            a[(i, i)] += 0.1;
        }
        a
    }

    #[test]
    fn cholesky_solves_linear_system() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for n in [1, 2, 5, 12, 30] {
            let a = random_hpd(&mut rng, n);
            let x_true = random_vec(&mut rng, n);
            let b = a.matvec(&x_true);
            let x = Cholesky::new(&a).unwrap().solve(&b);
            for (xi, ti) in x.iter().zip(&x_true) {
                assert!((xi - ti).norm() < 1e-9, "n={n}: {xi} vs {ti}");
            }
        }
    }

    #[test]
    fn quadratic_form_matches_solve() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let n = 8;
        let a = random_hpd(&mut rng, n);
        let b = random_vec(&mut rng, n);
        let ch = Cholesky::new(&a).unwrap();
        let direct = vec_dot_h(&b, &ch.solve(&b)).re;
        let qf = ch.quadratic_form(&b);
        assert!((direct - qf).abs() < 1e-10 * qf.abs().max(1.0));
        assert!(qf >= 0.0);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a = CMatrix::identity(2);
        a[(1, 1)] = Complex64::new(-1.0, 0.0);
        assert!(Cholesky::new(&a).is_err());
    }

    #[test]
    fn matvec_and_transposes_agree_on_small_case() {
        // [[1, i], [2, 0]] against [1, 1+i]
        let m = CMatrix::from_rows(vec![
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)],
            vec![Complex64::new(2.0, 0.0), Complex64::new(0.0, 0.0)],
        ]);
        let v = vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 1.0)];
        let mv = m.matvec(&v);
        assert_eq!(mv[0], Complex64::new(0.0, 1.0) * v[1] + v[0]);
        let tv = m.transpose_matvec(&v);
        assert_eq!(tv[0], v[0] + Complex64::new(2.0, 0.0) * v[1]);
        let hv = m.hermitian_matvec(&v);
        assert_eq!(hv[1], Complex64::new(0.0, -1.0) * v[0]);
    }

    #[test]
    fn normalize_gives_unit_norm() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let mut v = random_vec(&mut rng, 7);
        normalize(&mut v);
        assert!((vec_norm(&v) - 1.0).abs() < 1e-12);
    }
}
