//! Grunsky coefficients by generating function, the block Grunsky operator
//! matrix, and its spectral norm.
//!
//! Convention fixed here and inherited by every other module: the Grunsky
//! coefficients b^{jk}_{mn} are the mixed coefficients of
//!   log((f_j(z) - f_j(w))/(z - w))      for j = k,
//!   log(f_j(z) - f_k(w))                for j != k (branch from log(p_j - p_k)),
//! and the operator entries are sqrt(mn) b^{jk}_{mn}, acting conj(A(D))^n ->
//! A(D)^n in the e_n frames. Mixed coefficients are invariant under a common
//! Mobius change of chart, so the normalized working chart can be used for
//! every block.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::capmap::{CapComplex, CapMap};
use crate::error::OperatorError;
use crate::series::TruncatedSeries;

/// Dense bivariate polynomial grid: c[i][j] multiplies z^i w^j, 0 <= i,j <= deg.
#[derive(Debug, Clone)]
struct Bivariate {
    deg: usize,
    c: Vec<Complex64>,
}

impl Bivariate {
    fn zeros(deg: usize) -> Self {
        Self {
            deg,
            c: vec![Complex64::ZERO; (deg + 1) * (deg + 1)],
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> Complex64 {
        self.c[i * (self.deg + 1) + j]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut Complex64 {
        &mut self.c[i * (self.deg + 1) + j]
    }

    fn mul(&self, other: &Self) -> Self {
        let deg = self.deg;
        let mut out = Self::zeros(deg);
        for i1 in 0..=deg {
            for j1 in 0..=deg {
                let a = self.at(i1, j1);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for i2 in 0..=deg - i1 {
                    for j2 in 0..=deg - j1 {
                        let b = other.at(i2, j2);
                        if b.norm_sqr() != 0.0 {
                            *out.at_mut(i1 + i2, j1 + j2) += a * b;
                        }
                    }
                }
            }
        }
        out
    }

    /// log(1 + A) on the grid for A with A(0,0) = 0, by the power sum
    /// sum_{k>=1} (-1)^{k+1} A^k / k; A^k has total degree >= k so the sum is
    /// finite on the grid.
    fn log1p(&self) -> Self {
        assert!(self.at(0, 0).norm() == 0.0);
        let deg = self.deg;
        let mut acc = Self::zeros(deg);
        let mut power = self.clone();
        let mut sign = 1.0;
        for k in 1..=2 * deg {
            let s = Complex64::new(sign / k as f64, 0.0);
            for (o, p) in acc.c.iter_mut().zip(power.c.iter()) {
                *o += p * s;
            }
            if k < 2 * deg {
                power = power.mul(self);
            }
            sign = -sign;
        }
        acc
    }
}

/// Mixed and pure parts of a generating-function expansion
/// sum b_mn z^m w^n + (pure z) + (pure w).
#[derive(Debug, Clone)]
pub struct BivariateSeries {
    /// b_mn at [(m-1, n-1)] for 1 <= m, n <= N
    pub mixed: DMatrix<Complex64>,
    pub pure_z: TruncatedSeries,
    pub pure_w: TruncatedSeries,
}

impl BivariateSeries {
    pub fn truncation(&self) -> usize {
        self.mixed.nrows()
    }

    pub fn mixed_coeff(&self, m: usize, n: usize) -> Complex64 {
        self.mixed[(m - 1, n - 1)]
    }
}

fn split_parts(g: &Bivariate, n: usize) -> BivariateSeries {
    let mut mixed = DMatrix::zeros(n, n);
    for m in 1..=n {
        for k in 1..=n {
            mixed[(m - 1, k - 1)] = g.at(m, k);
        }
    }
    let pure_z = TruncatedSeries::with_trunc(
        0,
        (0..=g.deg as i64).map(|i| g.at(i as usize, 0)).collect(),
        g.deg as i64 + 1,
    );
    let pure_w = TruncatedSeries::with_trunc(
        0,
        (0..=g.deg as i64).map(|j| g.at(0, j as usize)).collect(),
        g.deg as i64 + 1,
    );
    BivariateSeries {
        mixed,
        pure_z,
        pure_w,
    }
}

fn series_coeff_checked(f: &TruncatedSeries, e: i64) -> Complex64 {
    debug_assert!(
        f.known_coeff(e).is_some(),
        "cap series truncated below the generating-function demand"
    );
    f.coeff(e)
}

/// Generating expansion for a cap pair.
///
/// `same = true`: mixed coefficients of log((f(z) - f(w))/(z - w)) for the cap
/// against itself. `same = false`: mixed coefficients of
/// log(f_z(z) - f_w(w)), branch fixed by log(p_z - p_w) at the origin.
pub fn grunsky_generating(cap_z: &CapMap, cap_w: &CapMap, same: bool, n: usize) -> BivariateSeries {
    let deg = n;
    if same {
        let f = cap_z.series();
        // R(z,w) = (f(z) - f(w))/(z - w) = sum_p a_p sum_{i+j=p-1} z^i w^j
        let mut r = Bivariate::zeros(deg);
        for p in 1..=(2 * deg + 1) as i64 {
            let a = series_coeff_checked(f, p);
            if a.norm_sqr() == 0.0 {
                continue;
            }
            for i in 0..=(p - 1).min(deg as i64) {
                let j = p - 1 - i;
                if j <= deg as i64 {
                    *r.at_mut(i as usize, j as usize) += a;
                }
            }
        }
        let a1 = cap_z.series().coeff(1);
        let mut s = r.clone();
        for c in s.c.iter_mut() {
            *c /= a1;
        }
        *s.at_mut(0, 0) -= Complex64::ONE;
        let mut g = s.log1p();
        *g.at_mut(0, 0) += a1.ln();
        split_parts(&g, n)
    } else {
        let pz = cap_z.center();
        let pw = cap_w.center();
        let dp = pz - pw;
        // Q(z,w) = ((f_z(z) - p_z) - (f_w(w) - p_w)) / (p_z - p_w)
        let mut q = Bivariate::zeros(deg);
        for i in 1..=deg as i64 {
            *q.at_mut(i as usize, 0) += series_coeff_checked(cap_z.series(), i) / dp;
            *q.at_mut(0, i as usize) -= series_coeff_checked(cap_w.series(), i) / dp;
        }
        let mut g = q.log1p();
        *g.at_mut(0, 0) += dp.ln();
        split_parts(&g, n)
    }
}

/// Block Grunsky matrix: `blocks[j][k]` holds sqrt(mn) b^{jk}_{mn} with row
/// index m, column index n.
#[derive(Debug, Clone)]
pub struct GrunskyMatrix {
    pub blocks: Vec<Vec<DMatrix<Complex64>>>,
    pub truncation: usize,
}

impl GrunskyMatrix {
    pub fn n_caps(&self) -> usize {
        self.blocks.len()
    }

    /// The assembled (n N) x (n N) matrix with block (j,k) at row block j.
    pub fn assembled(&self) -> DMatrix<Complex64> {
        let n = self.n_caps();
        let nn = self.truncation;
        let mut full = DMatrix::zeros(n * nn, n * nn);
        for (j, row) in self.blocks.iter().enumerate() {
            for (k, b) in row.iter().enumerate() {
                full.view_mut((j * nn, k * nn), (nn, nn)).copy_from(b);
            }
        }
        full
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.blocks
            .iter()
            .flatten()
            .flat_map(|b| b.iter())
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    /// Rows (j, k, m, n, re, im) for the CSV dump.
    pub fn dump_rows(&self) -> Vec<(usize, usize, usize, usize, f64, f64)> {
        let mut rows = Vec::new();
        for (j, row) in self.blocks.iter().enumerate() {
            for (k, b) in row.iter().enumerate() {
                for m in 1..=self.truncation {
                    for n in 1..=self.truncation {
                        let c = b[(m - 1, n - 1)];
                        rows.push((j, k, m, n, c.re, c.im));
                    }
                }
            }
        }
        rows
    }
}

/// Assemble the Grunsky matrix of a validated complex by generating
/// functions, with sqrt(mn) normalization.
pub fn grunsky_matrix(complex: &CapComplex) -> GrunskyMatrix {
    let n = complex.truncation();
    let caps = complex.caps();
    let mut blocks = Vec::with_capacity(caps.len());
    for (j, cap_j) in caps.iter().enumerate() {
        let mut row = Vec::with_capacity(caps.len());
        for (k, cap_k) in caps.iter().enumerate() {
            let gen = grunsky_generating(cap_j, cap_k, j == k, n);
            let mut b = DMatrix::zeros(n, n);
            for m in 1..=n {
                for l in 1..=n {
                    b[(m - 1, l - 1)] = ((m * l) as f64).sqrt() * gen.mixed_coeff(m, l);
                }
            }
            row.push(b);
        }
        blocks.push(row);
    }
    GrunskyMatrix {
        blocks,
        truncation: n,
    }
}

/// Largest singular value by power iteration on M* M.
pub fn spectral_norm(m: &DMatrix<Complex64>) -> Result<f64, OperatorError> {
    spectral_norm_tol(m, 1e-10, 10_000)
}

pub fn spectral_norm_tol(
    m: &DMatrix<Complex64>,
    tol: f64,
    max_iter: usize,
) -> Result<f64, OperatorError> {
    let dim = m.ncols();
    if dim == 0 || m.iter().all(|c| c.norm_sqr() == 0.0) {
        return Ok(0.0);
    }
    let mh = m.adjoint();
    let mut v = DVector::from_iterator(
        dim,
        (0..dim).map(|i| Complex64::new(1.0 / (i + 1) as f64, 0.3 / (i + 2) as f64)),
    );
    v /= Complex64::new(v.norm(), 0.0);
    let mut lambda = 0.0f64;
    for _ in 0..max_iter {
        let w = &mh * (m * &v);
        let nw = w.norm();
        if nw == 0.0 {
            return Ok(0.0);
        }
        let new_lambda = nw; // Rayleigh quotient for the normalized iterate
        let w = w / Complex64::new(nw, 0.0);
        let delta = (new_lambda - lambda).abs();
        v = w;
        lambda = new_lambda;
        if delta <= tol * lambda.max(1e-30) {
            return Ok(lambda.sqrt());
        }
    }
    let residual = (&mh * (m * &v) - &v * Complex64::new(lambda, 0.0)).norm();
    Err(OperatorError::PowerIterationDiverged {
        iterations: max_iter,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capmap::{build_complex, CapSpec, ComplexSpec};

    fn r(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn single_cap(coeffs: &[Complex64], n: usize) -> CapComplex {
        build_complex(&ComplexSpec {
            caps: vec![ComplexSpec::cap(Complex64::ZERO, coeffs)],
            truncation: n,
            samples: 512,
        })
        .unwrap()
    }

    #[test]
    fn identity_cap_has_zero_coefficients() {
        let cx = single_cap(&[r(1.0)], 6);
        let g = grunsky_matrix(&cx);
        assert!(g.max_abs_entry() < 1e-14);
    }

    #[test]
    fn mobius_cap_has_zero_coefficients() {
        // f = z/(1 - t z) maps the disk onto a disk: all mixed coefficients 0
        let t: f64 = 0.4;
        let coeffs: Vec<Complex64> = (1..=14).map(|k| r(t.powi(k - 1))).collect();
        let cx = single_cap(&coeffs, 6);
        let g = grunsky_matrix(&cx);
        assert!(g.max_abs_entry() < 1e-12, "max {}", g.max_abs_entry());
    }

    #[test]
    fn quadratic_cap_matches_binomial_oracle() {
        // independent oracle for f = z + t z^2:
        // log((f(z)-f(w))/(z-w)) = log(1 + t(z+w)), so
        // b_mn = (-1)^{m+n+1} t^{m+n} binom(m+n, m) / (m+n)
        for &t in &[0.1, 0.3] {
            let cx = single_cap(&[r(1.0), r(t)], 9);
            let cap = &cx.caps()[0];
            let gen = grunsky_generating(cap, cap, true, 9);
            let binom = |n: u64, k: u64| -> f64 {
                let mut v = 1.0;
                for i in 0..k {
                    v = v * (n - i) as f64 / (i + 1) as f64;
                }
                v
            };
            for m in 1..=9usize {
                for n in 1..=9usize {
                    if m + n > 10 {
                        continue;
                    }
                    let s = (m + n) as f64;
                    let oracle = (-1.0f64).powi((m + n + 1) as i32)
                        * t.powi((m + n) as i32)
                        * binom((m + n) as u64, m as u64)
                        / s;
                    let got = gen.mixed_coeff(m, n);
                    assert!(
                        (got - r(oracle)).norm() < 1e-10,
                        "t={t} m={m} n={n}: {got} vs {oracle}"
                    );
                }
            }
        }
    }

    #[test]
    fn quadratic_cap_matrix_entries() {
        let cx = single_cap(&[r(1.0), r(0.3)], 4);
        let g = grunsky_matrix(&cx);
        let b = &g.blocks[0][0];
        assert!((b[(0, 0)] - r(-0.09)).norm() < 1e-14);
        assert!((b[(1, 0)] - r(2f64.sqrt() * 0.027)).norm() < 1e-14);
        assert!((b[(0, 1)] - b[(1, 0)]).norm() < 1e-14);
    }

    #[test]
    fn concentric_circles_off_diagonal_block() {
        // caps r z and the chart-at-infinity cap of radius r: after
        // normalization the mixed coefficients of log(f_1(z) - f_2(w)) match
        // log(1 - r^2 z w): b^{12}_{mn} = -(r^{2m}/m) delta_mn
        let r0 = 0.25;
        let cx = build_complex(&ComplexSpec {
            caps: vec![
                ComplexSpec::cap(Complex64::ZERO, &[r(r0)]),
                CapSpec {
                    center: [0.0, 0.0],
                    coeffs: vec![[r0, 0.0]],
                    at_infinity: true,
                },
            ],
            truncation: 5,
            samples: 1024,
        })
        .unwrap();
        let gen = grunsky_generating(&cx.caps()[0], &cx.caps()[1], false, 5);
        for m in 1..=5usize {
            for n in 1..=5usize {
                let expect = if m == n {
                    -(r0.powi(2 * m as i32)) / m as f64
                } else {
                    0.0
                };
                let got = gen.mixed_coeff(m, n);
                assert!(
                    (got - r(expect)).norm() < 1e-12,
                    "m={m} n={n}: {got} vs {expect}"
                );
            }
        }
        let g = grunsky_matrix(&cx);
        assert!((g.blocks[0][1][(0, 0)] - r(-r0 * r0)).norm() < 1e-12);
    }

    #[test]
    fn block_symmetry() {
        let cx = build_complex(&ComplexSpec {
            caps: vec![
                ComplexSpec::cap(
                    Complex64::new(-1.1, 0.2),
                    &[r(0.4), r(0.06), Complex64::new(0.0, 0.02)],
                ),
                ComplexSpec::cap(
                    Complex64::new(1.3, -0.1),
                    &[Complex64::new(0.3, 0.1), r(-0.05)],
                ),
            ],
            truncation: 8,
            samples: 1024,
        })
        .unwrap();
        let g = grunsky_matrix(&cx);
        for j in 0..2 {
            for k in 0..2 {
                let diff = g.blocks[j][k].transpose() - &g.blocks[k][j];
                let d = diff.iter().map(|c| c.norm()).fold(0.0, f64::max);
                assert!(d < 1e-12, "blocks {j},{k}: {d}");
            }
        }
    }

    #[test]
    fn spectral_norm_against_svd() {
        let cx = single_cap(&[r(1.0), r(0.3)], 16);
        let g = grunsky_matrix(&cx).assembled();
        let pi_norm = spectral_norm(&g).unwrap();
        let svd_norm = g.clone().svd(false, false).singular_values[0];
        assert!((pi_norm - svd_norm).abs() < 1e-9, "{pi_norm} vs {svd_norm}");
        assert!(pi_norm > 0.0 && pi_norm < 1.0);

        let zero: DMatrix<Complex64> = DMatrix::zeros(5, 5);
        assert_eq!(spectral_norm(&zero).unwrap(), 0.0);

        let diag = DMatrix::from_diagonal(&DVector::from_vec(vec![r(0.5), r(0.25)]));
        assert!((spectral_norm(&diag).unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn norm_stable_under_truncation_refinement() {
        let n16 =
            spectral_norm(&grunsky_matrix(&single_cap(&[r(1.0), r(0.3)], 16)).assembled()).unwrap();
        let n24 =
            spectral_norm(&grunsky_matrix(&single_cap(&[r(1.0), r(0.3)], 24)).assembled()).unwrap();
        assert!((n16 - n24).abs() < 1e-8, "{n16} vs {n24}");
    }
}
