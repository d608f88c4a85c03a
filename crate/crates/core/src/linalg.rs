//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CVector = DVector<C64>;
pub type CMatrix = DMatrix<C64>;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `exp(j·phase)`
#[inline]
pub fn cis(phase: f64) -> C64 {
    C64::from_polar(1.0, phase)
}

/// `a† b`
#[inline]
pub fn inner(a: &CVector, b: &CVector) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// `Re(x† M x)`
pub fn quad_form(m: &CMatrix, x: &CVector) -> f64 {
    inner(x, &(m * x)).re
}

pub fn norm_sqr(x: &CVector) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum()
}

/// `(M + M†)/2`
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Largest entrywise deviation from Hermitian symmetry, relative to the largest entry.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let scale = m.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    (m - m.adjoint())
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max)
        / scale
}

pub fn trace_re(m: &CMatrix) -> f64 {
    m.diagonal().iter().map(|v| v.re).sum()
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Columns are the eigenvectors matching `values`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(m: &CMatrix) -> Self {
        let n = m.nrows();
        if n == 0 {
            return Self {
                values: Vec::new(),
                vectors: CMatrix::zeros(0, 0),
            };
        }
        let eig = SymmetricEigen::new(hermitian_part(m));
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = CMatrix::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
        Self { values, vectors }
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Rebuild `V f(Λ) V†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (k, &lam) in self.values.iter().enumerate() {
            let fk = f(lam);
            for r in 0..n {
                scaled[(r, k)] *= fk;
            }
        }
        scaled * self.vectors.adjoint()
    }

    /// PSD square root; negative eigenvalues (round-off) are clipped at zero.
    pub fn sqrt_psd(&self) -> CMatrix {
        self.map(|lam| lam.max(0.0).sqrt())
    }
}

pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    HermitianEigen::new(m).sqrt_psd()
}

pub fn lambda_min(m: &CMatrix) -> f64 {
    HermitianEigen::new(m).min()
}

pub fn lambda_max(m: &CMatrix) -> f64 {
    HermitianEigen::new(m).max()
}

/// Solve `R x = b` for Hermitian positive-definite `R` by Cholesky factorization.
pub fn solve_hpd(r: &CMatrix, b: &CVector) -> Result<CVector> {
    if r.nrows() != r.ncols() || r.nrows() != b.len() {
        return Err(Error::Shape(format!(
            "system {}x{} with right-hand side of length {}",
            r.nrows(),
            r.ncols(),
            b.len()
        )));
    }
    let chol = Cholesky::new(hermitian_part(r)).ok_or_else(|| {
        Error::NotPositiveDefinite("Cholesky factorization failed (is the noise power > 0?)".into())
    })?;
    Ok(chol.solve(b))
}

/// Dense identity as a complex matrix.
pub fn eye(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// `sin(πx)/(πx)` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Power in dB with a floor for zero.
pub fn db(x: f64) -> f64 {
    if x > 0.0 {
        (10.0 * x.log10()).max(crate::DB_FLOOR)
    } else {
        crate::DB_FLOOR
    }
}

pub fn from_db(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_hermitian(n: usize, seed: u64) -> CMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = CMatrix::from_fn(n, n, |_, _| {
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        &a * a.adjoint()
    }

    #[test]
    fn inner_conjugates_left_operand() {
        let a = CVector::from_vec(vec![c(0.0, 1.0)]);
        let b = CVector::from_vec(vec![c(1.0, 0.0)]);
        assert_eq!(inner(&a, &b), c(0.0, -1.0));
    }

    #[test]
    fn eigen_reconstructs_and_sorts() {
        let m = random_hermitian(6, 3);
        let eig = HermitianEigen::new(&m);
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        let back = eig.map(|x| x);
        assert!((back - &m).norm() < 1e-12 * m.norm());
    }

    #[test]
    fn sqrt_squares_back() {
        let m = random_hermitian(5, 9);
        let r = psd_sqrt(&m);
        assert!((&r * &r - &m).norm() < 1e-10 * m.norm());
        assert!(hermitian_defect(&r) < 1e-12);
    }

    #[test]
    fn hpd_solve_matches_hand_solution() {
        let r = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0, 0.0), c(4.0, 0.0)]));
        let x = solve_hpd(&r, &CVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)])).unwrap();
        assert!((x[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((x[1] - c(0.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn hpd_solve_rejects_singular() {
        let r = CMatrix::zeros(2, 2);
        assert!(matches!(
            solve_hpd(&r, &CVector::zeros(2)),
            Err(Error::NotPositiveDefinite(_))
        ));
    }

    #[test]
    fn db_floor() {
        assert_eq!(db(0.0), -300.0);
        assert!((db(100.0) - 20.0).abs() < 1e-12);
    }
}
