//! Truncated matrices of the Schiffer comparison operators T_{1,1} and
//! T_{1,2} in the fixed orthonormal frames, plus the Theta map and adjoint
//! diagnostics.
//!
//! Conventions (also emitted in the operator dump header):
//!   - kernel: T gb(z) = (1/pi) iint conj(a(w)) / (w - z)^2 dA(w) dz, with the
//!     cap Green kernel subtracted on the diagonal blocks (no principal
//!     values anywhere);
//!   - in these conventions the disk-transported T_{1,1} matrix equals the
//!     Grunsky matrix sqrt(mn) b_mn, the circle-case T_{1,2} is the identity
//!     in the exterior frame, and O^e T_{1,2} gb has the boundary values of
//!     -gb + T_{1,1} gb.
//!
//! Primary entry route is contour coefficient extraction (spectrally accurate
//! double FFT of the analytic kernels on circles of distinct radii); the area
//! quadrature route is kept as the independent cross-check oracle.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::capmap::{CapComplex, QuadratureRule};
use crate::error::OperatorError;
use crate::spaces::{BasisId, CoeffVector, PI};

/// Assembly parameters for the contour routes.
#[derive(Debug, Clone, Copy)]
pub struct OperatorParams {
    /// FFT length per variable for kernel coefficient extraction.
    pub fft_size: usize,
    /// Contour radius for the domain variable (cap k side).
    pub radius_u: f64,
    /// Contour radius for the codomain variable (cap j side); must differ
    /// from `radius_u` so the regularized diagonal kernel stays evaluable.
    pub radius_v: f64,
}

impl Default for OperatorParams {
    fn default() -> Self {
        Self {
            fft_size: 512,
            radius_u: 0.9,
            radius_v: 0.75,
        }
    }
}

impl OperatorParams {
    /// Scale the FFT length with a quadrature-order ladder parameter
    /// (strictly increasing orders give strictly finer kernel sampling).
    pub fn with_order(order: usize) -> Self {
        Self {
            fft_size: (8 * order).max(192),
            ..Self::default()
        }
    }
}

/// A truncated operator matrix between labelled frames: entry (i, j) is the
/// inner product of the operator applied to domain frame vector j against
/// codomain frame vector i.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub domain: BasisId,
    pub domain_conjugated: bool,
    pub codomain: BasisId,
    pub codomain_conjugated: bool,
    pub entries: DMatrix<Complex64>,
}

impl OperatorMatrix {
    pub fn apply(&self, v: &CoeffVector) -> Result<CoeffVector, OperatorError> {
        if v.basis != self.domain || v.conjugated != self.domain_conjugated {
            return Err(crate::error::SpaceError::BasisMismatch(format!(
                "operator domain {:?}/conj={} got {:?}/conj={}",
                self.domain, self.domain_conjugated, v.basis, v.conjugated
            ))
            .into());
        }
        Ok(CoeffVector::new(
            self.codomain,
            self.codomain_conjugated,
            &self.entries * &v.coeffs,
        ))
    }

    pub fn spectral_norm(&self) -> f64 {
        if self.entries.iter().all(|c| c.norm_sqr() == 0.0) {
            return 0.0;
        }
        self.entries.clone().svd(false, false).singular_values[0]
    }
}

/// The raw Laurent family on Sigma_2 with its Gram matrix and the Cholesky
/// orthonormalization the operator matrices use.
///
/// The Gram is computed in closed form: the primitive of eta_{(k,n)} pulled
/// back to curve l is -(1/sqrt(n pi)) (f_l(v) - p_k)^{-n}, whose Laurent
/// modes in v come from exact series arithmetic; Parseval on each curve then
/// gives <al, be> = -pi sum_l sum_mu mu [A]_mu conj([B]_mu). This avoids the
/// catastrophic cancellation a pointwise contour quadrature suffers at large
/// truncations, where the family's dynamic range is huge.
///
/// The family is genuinely ill-conditioned on eccentric caps (unit-diagonal
/// Gram condition grows exponentially with the truncation): the Cholesky
/// factor is taken of the unit-diagonal rescaling, quadratic forms through
/// the factor stay backward-stable, and boundary evaluation works from raw
/// coefficients without ever inverting the frame.
#[derive(Debug, Clone)]
pub struct Sigma2Basis {
    pub basis: BasisId,
    /// Entry (i, j) is <eta_j, eta_i>: quadratic form |sum c eta|^2 = c^dag G c.
    pub gram: DMatrix<Complex64>,
    scale: DVector<f64>,
    chol_l: DMatrix<Complex64>,
}

impl Sigma2Basis {
    pub fn build(complex: &CapComplex) -> Result<Self, OperatorError> {
        let basis = BasisId::complement_laurent(complex);
        let n = complex.truncation();
        let caps = complex.n_caps();
        let punctures = complex.punctures();
        let dim = basis.dim();
        let work = (4 * n as i64).max(128);
        let mut gram: DMatrix<Complex64> = DMatrix::zeros(dim, dim);
        for l in 0..caps {
            // modes[k][n-1]: Laurent modes of the primitive of eta_{(k,n)}
            // pulled back to curve l, as a series with lo = -n (own cap) or 0
            let mut modes: Vec<Vec<crate::series::TruncatedSeries>> = Vec::with_capacity(caps);
            for p in punctures.iter() {
                let shifted = complex.caps()[l]
                    .series()
                    .sub(&crate::series::TruncatedSeries::constant(*p))
                    .truncate(work);
                let recip = crate::series::TruncatedSeries::constant(Complex64::ONE)
                    .div(&shifted)
                    .map_err(|_| OperatorError::GramNotPositiveDefinite)?;
                let mut pows = Vec::with_capacity(n);
                let mut acc = recip.clone();
                for nn in 1..=n {
                    let factor = Complex64::new(-1.0 / ((nn as f64) * PI).sqrt(), 0.0);
                    pows.push(acc.scale(factor));
                    if nn < n {
                        acc = acc.mul(&recip).truncate(work - n as i64);
                    }
                }
                modes.push(pows);
            }
            for j in 0..caps {
                for m in 1..=n {
                    let row = basis.index(j, m);
                    for k in 0..caps {
                        for nn in 1..=n {
                            let col = basis.index(k, nn);
                            if col < row {
                                continue;
                            }
                            let a = &modes[k][nn - 1];
                            let b = &modes[j][m - 1];
                            let lo = a.lo().max(b.lo());
                            let hi = a
                                .trunc()
                                .unwrap_or(i64::MAX)
                                .min(b.trunc().unwrap_or(i64::MAX))
                                .min(work - n as i64);
                            let mut acc = Complex64::ZERO;
                            for mu in lo..hi {
                                acc += (mu as f64) * a.coeff(mu) * b.coeff(mu).conj();
                            }
                            gram[(row, col)] += -PI * acc;
                        }
                    }
                }
            }
        }
        for i in 0..dim {
            for j in 0..i {
                gram[(i, j)] = gram[(j, i)].conj();
            }
        }
        let gram = (gram.clone() + gram.adjoint()) * Complex64::new(0.5, 0.0);
        let scale = DVector::from_iterator(dim, (0..dim).map(|i| gram[(i, i)].re.sqrt()));
        if scale.iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return Err(OperatorError::GramNotPositiveDefinite);
        }
        let scaled = DMatrix::from_fn(dim, dim, |i, j| gram[(i, j)] / (scale[i] * scale[j]));
        let chol = nalgebra::Cholesky::new(scaled).ok_or(OperatorError::GramNotPositiveDefinite)?;
        Ok(Self {
            basis,
            gram,
            scale,
            chol_l: chol.l(),
        })
    }

    /// Orthonormal-frame coefficients from raw Laurent coefficients:
    /// c_on = L^dag (S c_raw).
    pub fn on_from_raw(&self, raw: &DVector<Complex64>) -> DVector<Complex64> {
        let scaled = DVector::from_iterator(
            raw.len(),
            raw.iter().zip(self.scale.iter()).map(|(c, s)| c * *s),
        );
        self.chol_l.adjoint() * scaled
    }

    /// Raw Laurent coefficients from orthonormal-frame coefficients. The
    /// inverse map is as ill-conditioned as the frame itself: prefer raw
    /// coefficients obtained directly (e.g. R gamma for operator images).
    pub fn raw_from_on(&self, on: &DVector<Complex64>) -> DVector<Complex64> {
        let x = self
            .chol_l
            .adjoint()
            .solve_upper_triangular(on)
            .expect("Cholesky factor is invertible");
        DVector::from_iterator(
            x.len(),
            x.iter().zip(self.scale.iter()).map(|(c, s)| c / *s),
        )
    }

    /// Transport of a matrix with raw-Laurent codomain into the orthonormal
    /// frame.
    pub fn on_from_raw_matrix(&self, raw: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut scaled = raw.clone();
        for (i, mut row) in scaled.row_iter_mut().enumerate() {
            row *= Complex64::new(self.scale[i], 0.0);
        }
        self.chol_l.adjoint() * scaled
    }
}

/// Gram matrix of the raw Laurent family on Sigma_2 by the exact Stokes
/// contour formula <al, be> = -(i/2) sum_l int_{Gamma_l} A conj(be), with A
/// the decaying primitive (trapezoid rule, spectrally accurate). Entry
/// (i, j) is <eta_j, eta_i>, so |sum c_i eta_i|^2 = c^dag G c. Exposed for
/// cross-validation of the image-frame Gram identity; ill-conditioned at
/// large truncations for eccentric caps.
pub fn laurent_gram_quadrature(complex: &CapComplex) -> DMatrix<Complex64> {
    let basis = BasisId::complement_laurent(complex);
    let n = complex.truncation();
    let caps = complex.n_caps();
    let punctures = complex.punctures();
    let m_samp = complex.samples();
    let dim = basis.dim();
    let mut gram = DMatrix::zeros(dim, dim);
    let mut nodes = Vec::with_capacity(caps);
    for l in 0..caps {
        let ns = complex.curve_nodes(l, m_samp);
        nodes.push(
            ns.iter()
                .map(|&(u, z, d)| (z, d * Complex64::I * u))
                .collect::<Vec<_>>(),
        );
    }
    let weight = 2.0 * PI / m_samp as f64;
    for j in 0..caps {
        for m in 1..=n {
            let row = basis.index(j, m);
            for k in 0..caps {
                for nn in 1..=n {
                    let col = basis.index(k, nn);
                    if col < row {
                        continue;
                    }
                    let mut acc = Complex64::ZERO;
                    for curve in nodes.iter() {
                        for &(z, tangent) in curve {
                            // primitive of eta_col against conj(eta_row)
                            let h = -(1.0 / ((nn as f64) * PI).sqrt())
                                * (z - punctures[k]).powi(-(nn as i32));
                            let eta =
                                ((m as f64) / PI).sqrt() * (z - punctures[j]).powi(-(m as i32) - 1);
                            acc += h * (eta * tangent).conj();
                        }
                    }
                    let val = -Complex64::I / 2.0 * acc * weight;
                    gram[(row, col)] = val;
                    gram[(col, row)] = val.conj();
                }
            }
        }
    }
    (gram.clone() + gram.adjoint()) * Complex64::new(0.5, 0.0)
}

/// The assembled operator bundle for one complex at one truncation.
#[derive(Debug, Clone)]
pub struct SchifferOperators {
    pub cap_basis: BasisId,
    pub sigma2: Sigma2Basis,
    /// T_{1,1}: conj(A(Sigma_1)) -> A(Sigma_1), CapPullback frames.
    pub t11: OperatorMatrix,
    /// T_{1,2}: conj(A(Sigma_1)) -> A^e(Sigma_2), orthonormalized frame.
    pub t12: OperatorMatrix,
    /// T_{1,2} with codomain in raw Laurent coefficients (block diagonal).
    pub t12_raw: DMatrix<Complex64>,
}

fn fft_len_for(complex: &CapComplex, params: &OperatorParams) -> usize {
    params.fft_size.max(4 * complex.truncation()).max(64)
}

/// Bivariate Taylor coefficients [u^p v^q] kernel for p, q < n via a double
/// FFT over circles |u| = r_u, |v| = r_v.
fn kernel_taylor_coeffs(
    kernel: impl Fn(Complex64, Complex64) -> Complex64,
    n: usize,
    m_fft: usize,
    r_u: f64,
    r_v: f64,
) -> DMatrix<Complex64> {
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m_fft);
    let us: Vec<Complex64> = (0..m_fft)
        .map(|a| Complex64::from_polar(r_u, 2.0 * PI * a as f64 / m_fft as f64))
        .collect();
    let vs: Vec<Complex64> = (0..m_fft)
        .map(|b| Complex64::from_polar(r_v, 2.0 * PI * b as f64 / m_fft as f64))
        .collect();
    // rows: fixed u index a, FFT over v
    let mut rows: Vec<Vec<Complex64>> = Vec::with_capacity(m_fft);
    for &u in &us {
        let mut row: Vec<Complex64> = vs.iter().map(|&v| kernel(u, v)).collect();
        fft.process(&mut row);
        rows.push(row);
    }
    // FFT over u for each retained v frequency
    let mut out = DMatrix::zeros(n, n);
    let mut col = vec![Complex64::ZERO; m_fft];
    for q in 0..n {
        for (a, row) in rows.iter().enumerate() {
            col[a] = row[q];
        }
        fft.process(&mut col);
        for p in 0..n {
            out[(p, q)] =
                col[p] / (m_fft * m_fft) as f64 / (r_u.powi(p as i32) * r_v.powi(q as i32));
        }
    }
    out
}

/// T_{1,1} matrix by contour coefficient extraction of the (regularized on
/// the diagonal) kernel
///   K_{jk}(u, v) = f_k'(u) f_j'(v) / (f_k(u) - f_j(v))^2 - [j = k]/(u - v)^2,
/// whose Taylor coefficients give entries sqrt(nm)/(nm) [u^{n-1} v^{m-1}] K.
pub fn t11_matrix(complex: &CapComplex, params: &OperatorParams) -> DMatrix<Complex64> {
    let n = complex.truncation();
    let caps = complex.caps();
    let m_fft = fft_len_for(complex, params);
    let dim = caps.len() * n;
    let mut out = DMatrix::zeros(dim, dim);
    for (j, cap_j) in caps.iter().enumerate() {
        for (k, cap_k) in caps.iter().enumerate() {
            let diag = j == k;
            let coeffs = kernel_taylor_coeffs(
                |u, v| {
                    let fu = cap_k.eval(u);
                    let fv = cap_j.eval(v);
                    let d = fu - fv;
                    let mut kk = cap_k.eval_derivative(u) * cap_j.eval_derivative(v) / (d * d);
                    if diag {
                        let e = u - v;
                        kk -= Complex64::ONE / (e * e);
                    }
                    kk
                },
                n,
                m_fft,
                params.radius_u,
                params.radius_v,
            );
            for m in 1..=n {
                for l in 1..=n {
                    let scale = ((l * m) as f64).sqrt() / ((l * m) as f64);
                    out[(j * n + (m - 1), k * n + (l - 1))] = scale * coeffs[(l - 1, m - 1)];
                }
            }
        }
    }
    out
}

/// Independent oracle: the same T_{1,1} entries by double Gauss area
/// quadrature over the disk, entry = (sqrt(nm)/pi^2) iint iint
/// conj(u)^{n-1} conj(v)^{m-1} K(u,v) dA dA. Runs the spec's quadrature
/// self-test (<e_1, e_1> = 1) first.
pub fn t11_matrix_area(
    complex: &CapComplex,
    quad: &QuadratureRule,
) -> Result<DMatrix<Complex64>, OperatorError> {
    let self_test = quad
        .integrate_area(|u| Complex64::new(1.0 / PI, 0.0) * u.norm_sqr().powi(0))
        .re;
    if (self_test - 1.0).abs() > 1e-10 {
        return Err(OperatorError::QuadratureTooCoarse { got: self_test });
    }
    let n = complex.truncation();
    let caps = complex.caps();
    let nodes = quad.area_nodes();
    let a_count = nodes.len();
    let dim = caps.len() * n;
    let mut out = DMatrix::zeros(dim, dim);
    // Vandermonde of conjugated powers with weights
    let mut vand = DMatrix::zeros(a_count, n);
    for (a, &(u, w)) in nodes.iter().enumerate() {
        let mut pw = Complex64::new(w, 0.0);
        for col in 0..n {
            vand[(a, col)] = pw;
            pw *= u.conj();
        }
    }
    for (j, cap_j) in caps.iter().enumerate() {
        for (k, cap_k) in caps.iter().enumerate() {
            let diag = j == k;
            let mut kmat = DMatrix::zeros(a_count, a_count);
            for (a, &(u, _)) in nodes.iter().enumerate() {
                let fu = cap_k.eval(u);
                let dfu = cap_k.eval_derivative(u);
                for (b, &(v, _)) in nodes.iter().enumerate() {
                    let fv = cap_j.eval(v);
                    let d = fu - fv;
                    let mut kk = dfu * cap_j.eval_derivative(v) / (d * d);
                    if diag {
                        if a == b {
                            // the regularized kernel is analytic; its diagonal
                            // value is the limit, irrelevant at distinct nodes
                            kk = diag_kernel_limit(cap_k, u);
                        } else {
                            let e = u - v;
                            kk -= Complex64::ONE / (e * e);
                        }
                    }
                    kmat[(a, b)] = kk;
                }
            }
            // entries[n][m] = sum_a sum_b vand[a][n-1] K[a][b] vand[b][m-1]
            let prod = vand.transpose() * &kmat * &vand;
            for m in 1..=n {
                for l in 1..=n {
                    let scale = ((l * m) as f64).sqrt() / (PI * PI);
                    out[(j * n + (m - 1), k * n + (l - 1))] = scale * prod[(l - 1, m - 1)];
                }
            }
        }
    }
    Ok(out)
}

/// Limit of the regularized diagonal kernel at u = v:
/// (1/6)(f'''/f' - (3/2)(f''/f')^2)(u) ... computed via second-order finite
/// differences of the off-diagonal kernel, adequate for the oracle role.
fn diag_kernel_limit(cap: &crate::capmap::CapMap, u: Complex64) -> Complex64 {
    let h = 1e-4;
    let sample = |eps: Complex64| {
        let v = u + eps;
        let d = cap.eval(u) - cap.eval(v);
        let e = u - v;
        cap.eval_derivative(u) * cap.eval_derivative(v) / (d * d) - Complex64::ONE / (e * e)
    };
    let a = sample(Complex64::new(h, 0.0));
    let b = sample(Complex64::new(-h, 0.0));
    (a + b) / 2.0
}

/// T_{1,2} with raw-Laurent codomain: block diagonal over caps with
/// R_k[m-1][n-1] = sqrt(m/n) [u^{n-1}] (f_k' (f_k - p_k)^{m-1}),
/// the exact Laurent-tail coefficients of the kernel primitive.
pub fn t12_matrix_raw(complex: &CapComplex) -> DMatrix<Complex64> {
    let n = complex.truncation();
    let caps = complex.caps();
    let dim = caps.len() * n;
    let mut out = DMatrix::zeros(dim, dim);
    let work = 2 * n as i64 + 8;
    for (k, cap) in caps.iter().enumerate() {
        let centered = cap
            .series()
            .sub(&crate::series::TruncatedSeries::constant(cap.center()))
            .truncate(work);
        let deriv = cap.derivative().truncate(work);
        let mut power = crate::series::TruncatedSeries::constant(Complex64::ONE);
        for m in 1..=n {
            let term = deriv.mul(&power);
            for l in 1..=n {
                out[(k * n + (m - 1), k * n + (l - 1))] =
                    ((m as f64) / (l as f64)).sqrt() * term.coeff(l as i64 - 1);
            }
            power = power.mul(&centered).truncate(work);
        }
    }
    out
}

pub fn assemble_operators(
    complex: &CapComplex,
    params: &OperatorParams,
) -> Result<SchifferOperators, OperatorError> {
    let cap_basis = BasisId::cap_pullback(complex);
    let sigma2 = Sigma2Basis::build(complex)?;
    let t11 = OperatorMatrix {
        domain: cap_basis,
        domain_conjugated: true,
        codomain: cap_basis,
        codomain_conjugated: false,
        entries: t11_matrix(complex, params),
    };
    let t12_raw = t12_matrix_raw(complex);
    let t12 = OperatorMatrix {
        domain: cap_basis,
        domain_conjugated: true,
        codomain: sigma2.basis,
        codomain_conjugated: false,
        entries: sigma2.on_from_raw_matrix(&t12_raw),
    };
    Ok(SchifferOperators {
        cap_basis,
        sigma2,
        t11,
        t12,
        t12_raw,
    })
}

/// Theta = -T_{1,2} restricted to the conjugate cap frame, together with the
/// smallest singular value of the truncation (isomorphism witness).
pub fn theta_matrix(ops: &SchifferOperators) -> (OperatorMatrix, f64) {
    let entries = -ops.t12.entries.clone();
    let sigma = entries.clone().svd(false, false);
    let sigma_min = sigma
        .singular_values
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b));
    (
        OperatorMatrix {
            domain: ops.t12.domain,
            domain_conjugated: true,
            codomain: ops.t12.codomain,
            codomain_conjugated: false,
            entries,
        },
        sigma_min,
    )
}

/// Per-column defect of the genus-zero norm identity
/// |T_{1,1} v|^2 + |T_{1,2} v|^2 = |v|^2 over the domain frame.
#[derive(Debug, Clone)]
pub struct AdjointReport {
    pub per_column: Vec<f64>,
    pub max_defect: f64,
}

pub fn adjoint_check(ops: &SchifferOperators) -> AdjointReport {
    let dim = ops.t11.entries.ncols();
    let mut per_column = Vec::with_capacity(dim);
    let mut max_defect = 0.0f64;
    for c in 0..dim {
        let n11 = ops.t11.entries.column(c).norm_squared();
        let n12 = ops.t12.entries.column(c).norm_squared();
        let defect = (n11 + n12 - 1.0).abs();
        max_defect = max_defect.max(defect);
        per_column.push(defect);
    }
    AdjointReport {
        per_column,
        max_defect,
    }
}

/// The "conjugation-adjusted" T_{1,1}: the transport
/// -(f* T_{1,1} (f^{-1})*) of the assembled matrix into the disk frames. In
/// coefficient space the pullback transport is the identity, so this is the
/// negated matrix; the Grunsky matrix must equal its negative.
pub fn conjugation_adjusted_t11(ops: &SchifferOperators) -> DMatrix<Complex64> {
    -ops.t11.entries.clone()
}
