//! Multimode Gaussian states in phase space.
//!
//! A state on `n` modes is a mean vector of length `2n` and a real symmetric
//! `2n x 2n` covariance matrix, both ordered `(x1, p1, ..., xn, pn)`. The
//! vacuum covariance is `VACUUM_VARIANCE * I`.

use std::f64::consts::{LN_2, PI};

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Per-quadrature variance of the vacuum.
pub const VACUUM_VARIANCE: f64 = 0.25;

const SYMMETRY_TOL: f64 = 1e-12;
const UNCERTAINTY_TOL: f64 = 1e-10;

/// Block-diagonal symplectic form with per-mode blocks `[[0, 1], [-1, 0]]`.
pub fn symplectic_form(modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * modes, 2 * modes);
    for k in 0..modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// One-dimensional normal distribution, used for homodyne marginals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarGaussian {
    pub mean: f64,
    pub var: f64,
}

impl ScalarGaussian {
    pub fn new(mean: f64, var: f64) -> Result<Self> {
        if !(var.is_finite() && var > 0.0 && mean.is_finite()) {
            return Err(Error::domain(format!(
                "scalar Gaussian needs finite mean and positive variance, got ({mean}, {var})"
            )));
        }
        Ok(Self { mean, var })
    }

    pub fn std_dev(&self) -> f64 {
        self.var.sqrt()
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        let d = x - self.mean;
        -0.5 * (2.0 * PI * self.var).ln() - d * d / (2.0 * self.var)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }
}

/// A Gaussian state of `n >= 0` modes.
///
/// Zero-mode states arise after the last mode has been measured; they carry
/// no parameters and have unit overlap with each other.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// Validated constructor: checks shapes, symmetry and the uncertainty
    /// relation `cov + (i/4) Omega >= 0`.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if !mean.len().is_multiple_of(2) {
            return Err(Error::domain(format!(
                "mean vector length {} is odd",
                mean.len()
            )));
        }
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                found: cov.nrows().max(cov.ncols()),
            });
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::domain("non-finite state parameter"));
        }
        let scale = max_abs(&cov).max(1.0);
        if max_abs(&(&cov - cov.transpose())) > SYMMETRY_TOL * scale {
            return Err(Error::domain("covariance matrix is not symmetric"));
        }
        let state = Self::from_parts(mean, cov);
        if !state.satisfies_uncertainty() {
            return Err(Error::domain(
                "covariance matrix violates the uncertainty relation",
            ));
        }
        Ok(state)
    }

    pub(crate) fn from_parts(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        debug_assert_eq!(mean.len() % 2, 0);
        debug_assert_eq!(cov.nrows(), mean.len());
        Self { mean, cov }
    }

    /// The zero-mode state.
    pub fn empty() -> Self {
        Self::from_parts(DVector::zeros(0), DMatrix::zeros(0, 0))
    }

    pub fn vacuum(modes: usize) -> Self {
        Self::from_parts(
            DVector::zeros(2 * modes),
            DMatrix::identity(2 * modes, 2 * modes) * VACUUM_VARIANCE,
        )
    }

    /// Coherent state with quadrature means `(x, p)`.
    pub fn coherent(x: f64, p: f64) -> Self {
        let mut s = Self::vacuum(1);
        s.mean[0] = x;
        s.mean[1] = p;
        s
    }

    /// x-squeezed vacuum: covariance `diag(e^{-2r}/4, e^{2r}/4)`.
    pub fn squeezed_vacuum(r: f64) -> Self {
        let mut s = Self::vacuum(1);
        s.cov[(0, 0)] = VACUUM_VARIANCE * (-2.0 * r).exp();
        s.cov[(1, 1)] = VACUUM_VARIANCE * (2.0 * r).exp();
        s
    }

    pub fn modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.modes() {
            return Err(Error::ModeOutOfRange {
                index: mode,
                modes: self.modes(),
            });
        }
        Ok(())
    }

    pub fn x_mean(&self, mode: usize) -> f64 {
        self.mean[2 * mode]
    }

    pub fn p_mean(&self, mode: usize) -> f64 {
        self.mean[2 * mode + 1]
    }

    pub fn x_var(&self, mode: usize) -> f64 {
        self.cov[(2 * mode, 2 * mode)]
    }

    pub fn p_var(&self, mode: usize) -> f64 {
        self.cov[(2 * mode + 1, 2 * mode + 1)]
    }

    /// Product state; `self`'s modes come first.
    pub fn tensor(&self, other: &GaussianState) -> GaussianState {
        let (a, b) = (self.mean.len(), other.mean.len());
        let mut mean = DVector::zeros(a + b);
        mean.rows_mut(0, a).copy_from(&self.mean);
        mean.rows_mut(a, b).copy_from(&other.mean);
        let mut cov = DMatrix::zeros(a + b, a + b);
        cov.view_mut((0, 0), (a, a)).copy_from(&self.cov);
        cov.view_mut((a, a), (b, b)).copy_from(&other.cov);
        Self::from_parts(mean, cov)
    }

    /// Phase-space displacement of one mode. The covariance is unchanged.
    pub fn displace(&self, mode: usize, dx: f64, dp: f64) -> Result<GaussianState> {
        self.check_mode(mode)?;
        let mut out = self.clone();
        out.mean[2 * mode] += dx;
        out.mean[2 * mode + 1] += dp;
        Ok(out)
    }

    /// `mean -> S mean`, `cov -> S cov S^T`.
    pub fn apply(&self, transform: &SymplecticTransform) -> Result<GaussianState> {
        if transform.modes() != self.modes() {
            return Err(Error::DimensionMismatch {
                expected: self.modes(),
                found: transform.modes(),
            });
        }
        let s = &transform.matrix;
        let mean = s * &self.mean;
        let cov = s * &self.cov * s.transpose();
        let cov = (&cov + cov.transpose()) * 0.5;
        Ok(Self::from_parts(mean, cov))
    }

    /// Homodyne marginal of the x-quadrature of `mode`.
    pub fn x_marginal(&self, mode: usize) -> Result<ScalarGaussian> {
        self.check_mode(mode)?;
        ScalarGaussian::new(self.x_mean(mode), self.x_var(mode))
    }

    /// Condition on the outcome `m` of an x-homodyne measurement of `mode`.
    ///
    /// Returns the log marginal density at `m` and the conditional state of
    /// the remaining modes; the measured mode is removed entirely.
    pub fn condition_on_x_ln(&self, mode: usize, m: f64) -> Result<(f64, GaussianState)> {
        let marginal = self.x_marginal(mode)?;
        let k = 2 * mode;
        let keep: Vec<usize> = (0..self.mean.len())
            .filter(|&i| i != k && i != k + 1)
            .collect();
        let dim = keep.len();
        let residual = (m - marginal.mean) / marginal.var;
        let mut mean = DVector::zeros(dim);
        let mut cov = DMatrix::zeros(dim, dim);
        for (a, &i) in keep.iter().enumerate() {
            mean[a] = self.mean[i] + self.cov[(i, k)] * residual;
            for (b, &j) in keep.iter().enumerate().skip(a) {
                let c = self.cov[(i, j)] - self.cov[(i, k)] * self.cov[(k, j)] / marginal.var;
                cov[(a, b)] = c;
                cov[(b, a)] = c;
            }
        }
        Ok((marginal.ln_pdf(m), Self::from_parts(mean, cov)))
    }

    /// As [`condition_on_x_ln`](Self::condition_on_x_ln) but returning the
    /// density itself.
    pub fn condition_on_x(&self, mode: usize, m: f64) -> Result<(f64, GaussianState)> {
        let (ln_density, rest) = self.condition_on_x_ln(mode, m)?;
        Ok((ln_density.exp(), rest))
    }

    /// Reduced state with `mode` traced out.
    pub fn trace_out(&self, mode: usize) -> Result<GaussianState> {
        self.check_mode(mode)?;
        let keep: Vec<usize> = (0..self.mean.len())
            .filter(|&i| i / 2 != mode)
            .collect();
        let mean = DVector::from_iterator(keep.len(), keep.iter().map(|&i| self.mean[i]));
        let cov = DMatrix::from_fn(keep.len(), keep.len(), |a, b| self.cov[(keep[a], keep[b])]);
        Ok(Self::from_parts(mean, cov))
    }

    /// Single-mode reduced state of `mode`.
    pub fn mode_state(&self, mode: usize) -> Result<GaussianState> {
        self.check_mode(mode)?;
        let k = 2 * mode;
        Ok(Self::from_parts(
            self.mean.rows(k, 2).into_owned(),
            self.cov.view((k, k), (2, 2)).into_owned(),
        ))
    }

    /// True when `mode` has no covariance with any other mode.
    pub fn is_decoupled(&self, mode: usize) -> bool {
        let k = 2 * mode;
        let tol = SYMMETRY_TOL * max_abs(&self.cov).max(1.0);
        (0..self.cov.nrows())
            .filter(|&i| i / 2 != mode)
            .all(|i| self.cov[(i, k)].abs() <= tol && self.cov[(i, k + 1)].abs() <= tol)
    }

    /// Replace a decoupled mode by a single-mode state.
    pub fn replace_mode(&self, mode: usize, with: &GaussianState) -> Result<GaussianState> {
        self.check_mode(mode)?;
        if with.modes() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: with.modes(),
            });
        }
        if !self.is_decoupled(mode) {
            return Err(Error::UnsupportedReplacement(mode));
        }
        let k = 2 * mode;
        let mut out = self.clone();
        out.mean.rows_mut(k, 2).copy_from(&with.mean);
        out.cov.view_mut((k, k), (2, 2)).copy_from(&with.cov);
        Ok(out)
    }

    /// Overlap `pi^n * integral(W_a W_b)`, which is the fidelity when at
    /// least one of the two states is pure.
    pub fn overlap_pure(&self, other: &GaussianState) -> Result<f64> {
        if self.modes() != other.modes() {
            return Err(Error::DimensionMismatch {
                expected: self.modes(),
                found: other.modes(),
            });
        }
        let n = self.modes();
        if n == 0 {
            return Ok(1.0);
        }
        let sum = &self.cov + &other.cov;
        let chol = sum
            .cholesky()
            .ok_or_else(|| Error::Numerical("singular covariance sum in overlap".into()))?;
        let ln_det: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let delta = &self.mean - &other.mean;
        let quad = delta.dot(&chol.solve(&delta));
        // 4^n det(sum) under the sqrt
        let ln_f = -0.5 * (2.0 * n as f64 * LN_2 + ln_det) - 0.5 * quad;
        Ok(ln_f.exp().min(1.0))
    }

    /// Smallest eigenvalue of the Hermitian matrix `cov + (i/4) Omega`,
    /// computed through its real symmetric embedding.
    pub fn uncertainty_min_eigenvalue(&self) -> f64 {
        let d = self.cov.nrows();
        if d == 0 {
            return 0.0;
        }
        let b = symplectic_form(self.modes()) * VACUUM_VARIANCE;
        let mut embed = DMatrix::zeros(2 * d, 2 * d);
        embed.view_mut((0, 0), (d, d)).copy_from(&self.cov);
        embed.view_mut((d, d), (d, d)).copy_from(&self.cov);
        embed.view_mut((0, d), (d, d)).copy_from(&(-&b));
        embed.view_mut((d, 0), (d, d)).copy_from(&b);
        embed.symmetric_eigenvalues().min()
    }

    /// Uncertainty check with tolerance `1e-10` scaled by the largest
    /// covariance entry when that exceeds one.
    pub fn satisfies_uncertainty(&self) -> bool {
        let tol = UNCERTAINTY_TOL * max_abs(&self.cov).max(1.0);
        self.uncertainty_min_eigenvalue() >= -tol
    }

    /// Purity test through `det(cov) = 16^{-n}`.
    pub fn is_pure(&self, rel_tol: f64) -> bool {
        let n = self.modes() as i32;
        let scaled = self.cov.determinant() * 16f64.powi(n);
        (scaled - 1.0).abs() <= rel_tol
    }

    /// Largest absolute difference between corresponding parameters.
    pub fn max_abs_diff(&self, other: &GaussianState) -> f64 {
        if self.modes() != other.modes() {
            return f64::INFINITY;
        }
        max_abs(&(&self.cov - &other.cov)).max(
            (&self.mean - &other.mean)
                .iter()
                .fold(0.0_f64, |acc, v| acc.max(v.abs())),
        )
    }
}

/// Linear phase-space map `S` with `S Omega S^T = Omega`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticTransform {
    matrix: DMatrix<f64>,
}

/// Target tritter matrix, acting identically on the x and p quadratures.
/// Column 0 distributes the signal symmetrically over the three outputs.
pub fn tritter_matrix() -> [[f64; 3]; 3] {
    let s3 = 1.0 / 3f64.sqrt();
    let s23 = (2.0 / 3.0f64).sqrt();
    let s6 = 1.0 / 6f64.sqrt();
    let s2 = 1.0 / 2f64.sqrt();
    [[s3, s23, 0.0], [s3, -s6, s2], [s3, -s6, -s2]]
}

impl SymplecticTransform {
    /// Wraps a matrix after checking it is symplectic to `1e-12`.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || !matrix.nrows().is_multiple_of(2) {
            return Err(Error::domain("symplectic matrix must be square with even size"));
        }
        let t = Self { matrix };
        if !t.is_symplectic(1e-12) {
            return Err(Error::domain("matrix is not symplectic"));
        }
        Ok(t)
    }

    pub fn identity(modes: usize) -> Self {
        Self {
            matrix: DMatrix::identity(2 * modes, 2 * modes),
        }
    }

    /// Passive transform applying the orthogonal mode matrix `u` to the x
    /// quadratures and, identically, to the p quadratures.
    pub fn from_mode_matrix(u: &DMatrix<f64>) -> Result<Self> {
        let n = u.nrows();
        if u.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: u.ncols(),
            });
        }
        let mut matrix = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                matrix[(2 * i, 2 * j)] = u[(i, j)];
                matrix[(2 * i + 1, 2 * j + 1)] = u[(i, j)];
            }
        }
        Self::new(matrix)
    }

    /// Beam splitter of transmittance `t` between modes `i` and `j`:
    /// `[[sqrt(t), sqrt(1-t)], [-sqrt(1-t), sqrt(t)]]` on `(i, j)`.
    pub fn beam_splitter(modes: usize, i: usize, j: usize, t: f64) -> Result<Self> {
        if i >= modes || j >= modes {
            return Err(Error::ModeOutOfRange {
                index: i.max(j),
                modes,
            });
        }
        if i == j {
            return Err(Error::domain("beam splitter needs two distinct modes"));
        }
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::domain(format!("transmittance {t} outside (0, 1)")));
        }
        let (c, s) = (t.sqrt(), (1.0 - t).sqrt());
        let mut matrix = DMatrix::identity(2 * modes, 2 * modes);
        for q in 0..2 {
            let (a, b) = (2 * i + q, 2 * j + q);
            matrix[(a, a)] = c;
            matrix[(a, b)] = s;
            matrix[(b, a)] = -s;
            matrix[(b, b)] = c;
        }
        Ok(Self { matrix })
    }

    /// Phase rotation by pi on one mode: `(x, p) -> (-x, -p)`.
    pub fn phase_flip(modes: usize, mode: usize) -> Result<Self> {
        if mode >= modes {
            return Err(Error::ModeOutOfRange { index: mode, modes });
        }
        let mut matrix = DMatrix::identity(2 * modes, 2 * modes);
        matrix[(2 * mode, 2 * mode)] = -1.0;
        matrix[(2 * mode + 1, 2 * mode + 1)] = -1.0;
        Ok(Self { matrix })
    }

    /// Three-mode tritter: a 1:2 beam splitter on modes (0, 1), a 1:1 beam
    /// splitter on modes (2, 1), then pi phase shifts on modes 1 and 2 so
    /// that the x-block equals [`tritter_matrix`].
    pub fn tritter() -> Self {
        let build = || -> Result<Self> {
            Self::beam_splitter(3, 0, 1, 1.0 / 3.0)?
                .then(&Self::beam_splitter(3, 2, 1, 0.5)?)?
                .then(&Self::phase_flip(3, 1)?)?
                .then(&Self::phase_flip(3, 2)?)
        };
        build().expect("tritter construction uses valid fixed parameters")
    }

    pub fn modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// The `n x n` matrix acting on the x quadratures.
    pub fn x_block(&self) -> DMatrix<f64> {
        let n = self.modes();
        DMatrix::from_fn(n, n, |i, j| self.matrix[(2 * i, 2 * j)])
    }

    /// `next` applied after `self`, i.e. the product `next * self`.
    pub fn then(&self, next: &SymplecticTransform) -> Result<Self> {
        if next.modes() != self.modes() {
            return Err(Error::DimensionMismatch {
                expected: self.modes(),
                found: next.modes(),
            });
        }
        Ok(Self {
            matrix: &next.matrix * &self.matrix,
        })
    }

    pub fn transpose(&self) -> Self {
        Self {
            matrix: self.matrix.transpose(),
        }
    }

    /// Symplectic inverse `-Omega S^T Omega`.
    pub fn inverse(&self) -> Self {
        let omega = symplectic_form(self.modes());
        Self {
            matrix: -(&omega * self.matrix.transpose() * &omega),
        }
    }

    pub fn is_symplectic(&self, tol: f64) -> bool {
        let omega = symplectic_form(self.modes());
        max_abs(&(&self.matrix * &omega * self.matrix.transpose() - &omega)) <= tol
    }

    pub fn is_orthogonal(&self, tol: f64) -> bool {
        let d = self.matrix.nrows();
        max_abs(&(self.matrix.transpose() * &self.matrix - DMatrix::identity(d, d))) <= tol
    }

    pub fn max_abs_diff(&self, other: &SymplecticTransform) -> f64 {
        max_abs(&(&self.matrix - &other.matrix))
    }
}
