//! Exact rational linear algebra on dense square matrices.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Default size cap for exact characteristic polynomials and determinants.
pub const DEFAULT_EXACT_LIMIT: usize = 400;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalMatrix {
    n: usize,
    data: Vec<Rational>,
}

impl RationalMatrix {
    pub fn zeros(n: usize) -> Self {
        RationalMatrix { n, data: vec![Rational::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, Rational::one());
        }
        m
    }

    pub fn diagonal(values: &[Rational]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, v) in values.iter().enumerate() {
            m.set(i, i, v.clone());
        }
        m
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix must be square");
            for (j, v) in row.iter().enumerate() {
                m.set(i, j, rational::int(*v));
            }
        }
        m
    }

    /// Tridiagonal Toeplitz matrix with `diag` on the diagonal and `off`
    /// beside it.
    pub fn tridiagonal(n: usize, diag: i64, off: i64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, rational::int(diag));
            if i + 1 < n {
                m.set(i, i + 1, rational::int(off));
                m.set(i + 1, i, rational::int(off));
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rational) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (i + 1..self.n).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    pub fn is_integer(&self) -> bool {
        self.data.iter().all(|v| v.is_integer())
    }

    /// `M − λ·I`.
    pub fn shifted(&self, lambda: &Rational) -> Self {
        let mut m = self.clone();
        if !lambda.is_zero() {
            for i in 0..self.n {
                let v = m.get(i, i) - lambda;
                m.set(i, i, v);
            }
        }
        m
    }

    pub fn scaled(&self, c: &Rational) -> Self {
        RationalMatrix { n: self.n, data: self.data.iter().map(|v| v * c).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.data[i * n + j] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out.set(j, i, self.get(i, j).clone());
            }
        }
        out
    }

    pub fn trace(&self) -> Rational {
        (0..self.n).fold(Rational::zero(), |acc, i| acc + self.get(i, i))
    }

    /// Principal submatrix on the given index set.
    pub fn principal(&self, idx: &[usize]) -> Self {
        let mut out = Self::zeros(idx.len());
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                out.set(a, b, self.get(i, j).clone());
            }
        }
        out
    }

    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).iter().map(rational::to_f64).collect()).collect()
    }
}

/// Integer scale `s` (lcm of denominators) with `s·M` integral.
pub fn integer_scale(m: &RationalMatrix) -> (BigInt, RationalMatrix) {
    let s = rational::lcm_of_denominators(m.data.iter());
    let scaled = m.scaled(&Rational::from_integer(s.clone()));
    (s, scaled)
}

struct Echelon {
    rank: usize,
    det: Rational,
}

/// Row reduction over the rationals. Pivots are the first nonzero entry in
/// the column and updates skip zero entries, so band structure is kept.
fn eliminate(m: &RationalMatrix) -> Echelon {
    let n = m.n;
    let mut rows: Vec<Vec<Rational>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    let mut rank = 0;
    let mut det = Rational::one();
    for col in 0..n {
        let Some(p) = (rank..n).find(|&i| !rows[i][col].is_zero()) else {
            continue;
        };
        if p != rank {
            rows.swap(p, rank);
            det = -det;
        }
        let pivot = rows[rank][col].clone();
        det *= &pivot;
        let support: Vec<usize> = (col + 1..n).filter(|&j| !rows[rank][j].is_zero()).collect();
        let (head, tail) = rows.split_at_mut(rank + 1);
        let prow = &head[rank];
        for row in tail.iter_mut() {
            if row[col].is_zero() {
                continue;
            }
            let f = &row[col] / &pivot;
            for &j in &support {
                let delta = &f * &prow[j];
                row[j] -= delta;
            }
            row[col] = Rational::zero();
        }
        rank += 1;
    }
    if rank < n {
        det = Rational::zero();
    }
    Echelon { rank, det }
}

pub fn rank(m: &RationalMatrix) -> usize {
    eliminate(m).rank
}

pub fn det(m: &RationalMatrix) -> Rational {
    eliminate(m).det
}

/// `dim Ker(M − λI)`.
pub fn kernel_dim(m: &RationalMatrix, lambda: &Rational) -> usize {
    m.n - rank(&m.shifted(lambda))
}

/// Coefficients `c_0..c_n` of `det(xI − M)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CharPoly {
    #[serde(with = "rational::vec")]
    pub coeffs: Vec<Rational>,
}

impl CharPoly {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `(k, c_k)` for the lowest-index nonzero coefficient.
    pub fn lowest_nonzero(&self) -> (usize, &Rational) {
        self.coeffs.iter().enumerate().find(|(_, c)| !c.is_zero()).expect("leading coefficient is 1")
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        self.coeffs.iter().rev().fold(Rational::zero(), |acc, c| acc * x + c)
    }

    /// Multiplicity of `λ` as a root, by repeated synthetic division.
    pub fn root_multiplicity(&self, lambda: &Rational) -> usize {
        let mut c = self.coeffs.clone();
        let mut k = 0;
        while c.len() > 1 {
            // divide by (x − λ): quotient q with c = (x − λ)q + rem
            let n = c.len() - 1;
            let mut q = vec![Rational::zero(); n];
            let mut carry = Rational::zero();
            for i in (0..=n).rev() {
                let v = &c[i] + &carry * lambda;
                if i == 0 {
                    if !v.is_zero() {
                        return k;
                    }
                } else {
                    q[i - 1] = v.clone();
                }
                carry = v;
            }
            c = q;
            k += 1;
        }
        k
    }
}

fn fl_steps(b: &[Vec<(usize, BigInt)>], n: usize) -> Vec<BigInt> {
    // c[n-k] stored at index n-k; M_1 = I
    let mut c = vec![BigInt::zero(); n + 1];
    c[n] = BigInt::one();
    let mut m: Vec<Vec<BigInt>> = (0..n)
        .map(|i| {
            let mut r = vec![BigInt::zero(); n];
            r[i] = BigInt::one();
            r
        })
        .collect();
    for k in 1..=n {
        let p = sparse_times_dense(b, &m);
        let tr = (0..n).fold(BigInt::zero(), |acc, i| acc + &p[i][i]);
        let ck = -(tr / BigInt::from(k));
        if k < n {
            m = p;
            for (i, row) in m.iter_mut().enumerate() {
                row[i] += &ck;
            }
        }
        c[n - k] = ck;
    }
    c
}

fn sparse_row_times(row: &[(usize, BigInt)], m: &[Vec<BigInt>]) -> Vec<BigInt> {
    let n = m.len();
    let mut out = vec![BigInt::zero(); n];
    for (j, a) in row {
        for (o, v) in out.iter_mut().zip(&m[*j]) {
            if !v.is_zero() {
                *o += a * v;
            }
        }
    }
    out
}

#[cfg(feature = "parallel")]
fn sparse_times_dense(b: &[Vec<(usize, BigInt)>], m: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    use rayon::prelude::*;
    b.par_iter().map(|row| sparse_row_times(row, m)).collect()
}

#[cfg(not(feature = "parallel"))]
fn sparse_times_dense(b: &[Vec<(usize, BigInt)>], m: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    b.iter().map(|row| sparse_row_times(row, m)).collect()
}

pub fn char_poly(m: &RationalMatrix) -> Result<CharPoly> {
    char_poly_with_limit(m, DEFAULT_EXACT_LIMIT)
}

/// Faddeev–LeVerrier on the integer matrix `s·M`, then rescaled:
/// `c_i = c'_i / s^(n−i)`.
pub fn char_poly_with_limit(m: &RationalMatrix, limit: usize) -> Result<CharPoly> {
    let n = m.n;
    if n > limit {
        return Err(Error::InvalidArgument(format!(
            "exact characteristic polynomial limited to n <= {limit} (got {n}); use the float spectrum instead"
        )));
    }
    let (s, scaled) = integer_scale(m);
    let b: Vec<Vec<(usize, BigInt)>> = (0..n)
        .map(|i| {
            scaled.row(i).iter().enumerate().filter(|(_, v)| !v.is_zero()).map(|(j, v)| (j, v.to_integer())).collect()
        })
        .collect();
    let c = fl_steps(&b, n);
    let mut coeffs = Vec::with_capacity(n + 1);
    let mut pow = BigInt::one();
    let mut powers = vec![BigInt::one(); n + 1];
    for p in powers.iter_mut() {
        *p = pow.clone();
        pow *= &s;
    }
    for (i, ci) in c.into_iter().enumerate() {
        coeffs.push(Rational::new(ci, powers[n - i].clone()));
    }
    Ok(CharPoly { coeffs })
}

/// `|det|₁`: product of the nonzero eigenvalues in absolute value, the
/// magnitude of the lowest nonzero characteristic coefficient.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Det1 {
    #[serde(with = "rational")]
    pub value: Rational,
    pub dim: usize,
    pub rank: usize,
    /// True for the all-zero matrix, where the value is the empty product.
    pub zero_matrix: bool,
    pub method: &'static str,
}

pub fn det1(m: &RationalMatrix) -> Result<Det1> {
    det1_with_limit(m, DEFAULT_EXACT_LIMIT)
}

/// Nonsingular input is handled by elimination (`|det|`), singular input
/// by the characteristic polynomial.
pub fn det1_with_limit(m: &RationalMatrix, limit: usize) -> Result<Det1> {
    let n = m.n;
    if n > limit {
        return Err(Error::limit("exact matrix size", limit, n));
    }
    if m.is_zero() {
        return Ok(Det1 { value: Rational::one(), dim: n, rank: 0, zero_matrix: true, method: "empty_product" });
    }
    let e = eliminate(m);
    if e.rank == n {
        return Ok(Det1 { value: e.det.abs(), dim: n, rank: n, zero_matrix: false, method: "elimination" });
    }
    let cp = char_poly_with_limit(m, limit)?;
    let (_, c) = cp.lowest_nonzero();
    Ok(Det1 { value: c.abs(), dim: n, rank: e.rank, zero_matrix: false, method: "char_poly" })
}

/// `(1/|Q|)·ln det1(M)`.
pub fn logdet_window(m: &RationalMatrix, window_size: usize) -> Result<f64> {
    let d = det1(m)?;
    Ok(rational::ln_positive(&d.value) / window_size as f64)
}

/// Exact determinant report for an operator section after clearing
/// denominators.
#[derive(Clone, Debug, Serialize)]
pub struct DeterminantReport {
    pub dim: usize,
    pub rank: usize,
    pub scale: String,
    /// `det1(s·M)`, a positive integer for integer `s·M`.
    #[serde(with = "rational")]
    pub scaled_det1: Rational,
    #[serde(with = "rational")]
    pub det1: Rational,
    pub scaled_logdet: f64,
    pub logdet: f64,
    /// `rank·ln s / |Q|`, the shift between the two log-determinants.
    pub scale_shift: f64,
    pub zero_matrix: bool,
    pub method: &'static str,
    pub char_poly: Option<CharPoly>,
}

pub fn determinant_report(
    m: &RationalMatrix,
    window_size: usize,
    limit: usize,
    with_char_poly: bool,
) -> Result<DeterminantReport> {
    let (s, scaled) = integer_scale(m);
    let d = det1_with_limit(&scaled, limit)?;
    let s_rat = Rational::from_integer(s.clone());
    let mut unscaled = d.value.clone();
    for _ in 0..d.rank {
        unscaled /= &s_rat;
    }
    let q = window_size as f64;
    let shift = d.rank as f64 * rational::ln_abs_int(&s) / q;
    let scaled_logdet = rational::ln_positive(&d.value) / q;
    Ok(DeterminantReport {
        dim: d.dim,
        rank: d.rank,
        scale: s.to_string(),
        scaled_det1: d.value,
        det1: unscaled,
        scaled_logdet,
        logdet: scaled_logdet - shift,
        scale_shift: shift,
        zero_matrix: d.zero_matrix,
        method: d.method,
        char_poly: if with_char_poly { Some(char_poly_with_limit(m, limit)?) } else { None },
    })
}
