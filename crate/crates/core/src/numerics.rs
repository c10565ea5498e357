//! Dense linear algebra and statistical primitives.
//!
//! Everything here works on small dense `ndarray` matrices: the spatial
//! dimension `d` and the bridge horizon `T` stay in the low hundreds.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;

fn square_dim(m: &ArrayView2<f64>) -> Result<usize> {
    let (r, c) = m.dim();
    if r != c {
        return Err(Error::DimensionMismatch {
            expected: r,
            found: c,
        });
    }
    Ok(r)
}

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = m`.
///
/// Only the lower triangle of `m` is read. A pivot that is not strictly
/// positive (relative to the largest diagonal entry) is reported as
/// [`Error::NotPositiveDefinite`].
pub fn cholesky(m: &Array2<f64>) -> Result<Array2<f64>> {
    let n = square_dim(&m.view())?;
    let scale = (0..n).map(|i| m[[i, i]].abs()).fold(0.0_f64, f64::max);
    let floor = scale * f64::EPSILON * n as f64;
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut pivot = m[[j, j]];
        for k in 0..j {
            pivot -= l[[j, k]] * l[[j, k]];
        }
        if !(pivot > floor) || !pivot.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let ljj = pivot.sqrt();
        l[[j, j]] = ljj;
        for i in (j + 1)..n {
            let mut s = m[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / ljj;
        }
    }
    Ok(l)
}

/// Solves `L Y = B` for lower-triangular `L`.
pub fn forward_substitute(l: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let n = l.nrows();
    let mut y = b.clone();
    for col in 0..y.ncols() {
        for i in 0..n {
            let mut s = y[[i, col]];
            for k in 0..i {
                s -= l[[i, k]] * y[[k, col]];
            }
            y[[i, col]] = s / l[[i, i]];
        }
    }
    y
}

/// Solves `Lᵀ X = Y` for lower-triangular `L`.
pub fn backward_substitute_transposed(l: &Array2<f64>, y: &Array2<f64>) -> Array2<f64> {
    let n = l.nrows();
    let mut x = y.clone();
    for col in 0..x.ncols() {
        for i in (0..n).rev() {
            let mut s = x[[i, col]];
            for k in (i + 1)..n {
                s -= l[[k, i]] * x[[k, col]];
            }
            x[[i, col]] = s / l[[i, i]];
        }
    }
    x
}

/// Symmetric positive-definite matrix together with its Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    entries: Array2<f64>,
    chol: Array2<f64>,
}

impl SpdMatrix {
    pub fn new(entries: Array2<f64>) -> Result<Self> {
        let n = square_dim(&entries.view())?;
        let scale = entries.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let mut asymmetry = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                asymmetry = asymmetry.max((entries[[i, j]] - entries[[j, i]]).abs());
            }
        }
        if asymmetry > SYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::NotSymmetric { asymmetry });
        }
        let chol = cholesky(&entries)?;
        Ok(Self { entries, chol })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            entries: Array2::eye(n),
            chol: Array2::eye(n),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(Array2::from_diag(&Array1::from(diag.to_vec())))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn chol(&self) -> &Array2<f64> {
        &self.chol
    }

    fn check_rows(&self, rows: usize) -> Result<()> {
        if rows != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: rows,
            });
        }
        Ok(())
    }

    /// `X` with `self · X = b`.
    pub fn solve(&self, b: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_rows(b.nrows())?;
        let y = forward_substitute(&self.chol, b);
        Ok(backward_substitute_transposed(&self.chol, &y))
    }

    pub fn solve_vec(&self, b: &Array1<f64>) -> Result<Array1<f64>> {
        let col = b.clone().insert_axis(ndarray::Axis(1));
        Ok(self.solve(&col)?.column(0).to_owned())
    }

    /// `L⁻¹ b`; `‖L⁻¹ b‖²_F` is the quadratic form `tr(bᵀ self⁻¹ b)`.
    pub fn whiten(&self, b: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_rows(b.nrows())?;
        Ok(forward_substitute(&self.chol, b))
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.chol.diag().iter().map(|v| v.ln()).sum::<f64>()
    }

    pub fn trace(&self) -> f64 {
        self.entries.diag().sum()
    }

    pub fn inverse(&self) -> Array2<f64> {
        self.solve(&Array2::eye(self.dim()))
            .expect("identity has matching rows")
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Domain(format!("scale must be positive, got {c}")));
        }
        Ok(Self {
            entries: &self.entries * c,
            chol: &self.chol * c.sqrt(),
        })
    }
}

pub fn spd_solve(m: &SpdMatrix, b: &Array2<f64>) -> Result<Array2<f64>> {
    m.solve(b)
}

pub fn log_det_spd(m: &SpdMatrix) -> f64 {
    m.log_det()
}

/// Dense Kronecker product `a ⊗ b`.
pub fn kron(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = aij * b[[k, l]];
                }
            }
        }
    }
    out
}

pub fn frobenius_norm(m: &Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `‖a − b‖_F / ‖b‖_F`.
pub fn relative_frobenius_error(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    frobenius_norm(&(a - b)) / frobenius_norm(b)
}

// Stirling tail lnΓ(a) − [(a − ½)ln a − a + ½ln 2π], valid for a >= 10.
fn stirling_correction(a: f64) -> f64 {
    let inv = 1.0 / a;
    let inv2 = inv * inv;
    inv * (1.0 / 12.0
        - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 / 1188.0))))
}

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Natural log of the gamma function for `a > 0`.
pub fn ln_gamma(a: f64) -> f64 {
    let mut shift = 0.0;
    let mut x = a;
    while x < 10.0 {
        shift += x.ln();
        x += 1.0;
    }
    (x - 0.5) * x.ln() - x + HALF_LN_2PI + stirling_correction(x) - shift
}

// a·ln x − x − lnΓ(a), arranged to avoid cancellation for large a.
fn ln_gamma_prefactor(a: f64, x: f64) -> f64 {
    if a < 10.0 {
        return a * x.ln() - x - ln_gamma(a);
    }
    let u = (x - a) / a;
    a * (u.ln_1p() - u) + 0.5 * a.ln() - HALF_LN_2PI - stirling_correction(a)
}

const GAMMA_MAX_ITER: usize = 1_000_000;

/// Regularized upper incomplete gamma function `Q(a, x)`.
///
/// Series for `x < a + 1`, Lentz continued fraction otherwise.
pub fn regularized_gamma_q(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !(x >= 0.0) || !a.is_finite() {
        return Err(Error::Domain(format!("Q(a, x) needs a > 0, x >= 0; got ({a}, {x})")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    let prefactor = ln_gamma_prefactor(a, x).exp();
    if x < a + 1.0 {
        let mut denom = a;
        let mut term = 1.0 / a;
        let mut sum = term;
        for _ in 0..GAMMA_MAX_ITER {
            denom += 1.0;
            term *= x / denom;
            sum += term;
            if term.abs() < sum.abs() * f64::EPSILON {
                break;
            }
        }
        Ok((1.0 - sum * prefactor).clamp(0.0, 1.0))
    } else {
        const TINY: f64 = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..GAMMA_MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < f64::EPSILON {
                break;
            }
        }
        Ok((prefactor * h).clamp(0.0, 1.0))
    }
}

/// `P(χ²_k > x)`.
pub fn chi_square_sf(x: f64, dof: u64) -> Result<f64> {
    if dof < 1 {
        return Err(Error::Domain("chi-square needs at least one degree of freedom".into()));
    }
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("chi-square statistic must be >= 0, got {x}")));
    }
    regularized_gamma_q(dof as f64 / 2.0, x / 2.0)
}

/// Values with their average ranks (1-based, ties share the mean rank).
#[derive(Debug, Clone, PartialEq)]
pub struct RankedSample {
    pub values: Vec<f64>,
    pub ranks: Vec<f64>,
}

impl RankedSample {
    pub fn new(values: &[f64]) -> Self {
        let n = values.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let mut ranks = vec![0.0; n];
        let mut i = 0;
        while i < n {
            let mut j = i + 1;
            while j < n && values[order[j]] == values[order[i]] {
                j += 1;
            }
            // positions i..j (0-based) share ranks i+1..=j
            let avg = (i + 1 + j) as f64 / 2.0;
            for &idx in &order[i..j] {
                ranks[idx] = avg;
            }
            i = j;
        }
        Self {
            values: values.to_vec(),
            ranks,
        }
    }
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman_rho(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::DegenerateInput("need at least two observations".into()));
    }
    let ra = RankedSample::new(a);
    let rb = RankedSample::new(b);
    pearson(&ra.ranks, &rb.ranks)
        .ok_or_else(|| Error::DegenerateInput("zero rank variance".into()))
}
