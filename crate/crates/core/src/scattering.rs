//! The genus-zero scattering matrix, its unitarity diagnostics, overfare of
//! exact one-forms, and harmonic measures with the boundary period matrix.
//!
//! Block layout, acting on (alpha_1, alpha_2) in A(Sigma_1) + A^e(Sigma_2):
//!   [ A  B ] = [ -conj(T_{1,1})  -conj(T_{2,1}) ]
//!   [ C  D ]   [ -conj(T_{1,2})  -conj(T_{2,2}) ]
//! The Sigma_2-domain blocks are not assembled by quadrature: B = C^T follows
//! from the kernel symmetry (matrix(T_{2,1}) = matrix(T_{1,2})^T), and D is
//! the unitary completion solving A^dag B + C^dag D = 0, symmetrized. The
//! completion is validated independently by the overfare boundary-agreement
//! checks, which never touch B or D.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::capmap::CapComplex;
use crate::error::OperatorError;
use crate::schiffer::{OperatorMatrix, SchifferOperators};
use crate::spaces::{
    boundary_restriction, restrict_coeff_vector, restrict_sampled, BoundaryOneForm, CoeffVector,
    HarmonicPair, PI,
};

#[derive(Debug, Clone)]
pub struct ScatteringMatrix {
    pub a: OperatorMatrix,
    pub b: OperatorMatrix,
    pub c: OperatorMatrix,
    pub d: OperatorMatrix,
    pub truncation: usize,
    /// Orthonormality residual of the assembled first block column before
    /// completion.
    pub precompletion_residual: f64,
}

impl ScatteringMatrix {
    pub fn assembled(&self) -> DMatrix<Complex64> {
        let n1 = self.a.entries.nrows();
        let n2 = self.d.entries.nrows();
        let dim = n1 + n2;
        let mut s = DMatrix::zeros(dim, dim);
        s.view_mut((0, 0), (n1, n1)).copy_from(&self.a.entries);
        s.view_mut((0, n1), (n1, n2)).copy_from(&self.b.entries);
        s.view_mut((n1, 0), (n2, n1)).copy_from(&self.c.entries);
        s.view_mut((n1, n1), (n2, n2)).copy_from(&self.d.entries);
        s
    }

    /// || S* S - I || in the spectral norm.
    pub fn unitarity_defect(&self) -> f64 {
        let s = self.assembled();
        let dim = s.nrows();
        let g = s.adjoint() * &s - DMatrix::<Complex64>::identity(dim, dim);
        g.svd(false, false).singular_values[0]
    }

    pub fn block_norms(&self) -> [f64; 4] {
        [
            self.a.spectral_norm(),
            self.b.spectral_norm(),
            self.c.spectral_norm(),
            self.d.spectral_norm(),
        ]
    }
}

/// Assemble the scattering matrix from the Schiffer operator bundle.
pub fn assemble_scattering(
    ops: &SchifferOperators,
    completion_threshold: f64,
) -> Result<ScatteringMatrix, OperatorError> {
    let m11 = &ops.t11.entries;
    let m12 = &ops.t12.entries;
    let dim = m11.ncols();
    let a = -m11.map(|c| c.conj());
    let c = -m12.map(|c| c.conj());
    let residual = {
        let g = a.adjoint() * &a + c.adjoint() * &c - DMatrix::<Complex64>::identity(dim, dim);
        g.svd(false, false).singular_values[0]
    };
    if residual > completion_threshold {
        return Err(OperatorError::CompletionFailure {
            residual,
            threshold: completion_threshold,
        });
    }
    let b = c.transpose();
    // column orthogonality A^dag B + C^dag D = 0
    let rhs = -(a.adjoint() * &b);
    let d0 = c
        .adjoint()
        .lu()
        .solve(&rhs)
        .ok_or(OperatorError::CompletionFailure {
            residual: f64::INFINITY,
            threshold: completion_threshold,
        })?;
    let d = (d0.transpose() + &d0) * Complex64::new(0.5, 0.0);
    let cap = ops.cap_basis;
    let lb = ops.sigma2.basis;
    Ok(ScatteringMatrix {
        a: OperatorMatrix {
            domain: cap,
            domain_conjugated: false,
            codomain: cap,
            codomain_conjugated: true,
            entries: a,
        },
        b: OperatorMatrix {
            domain: lb,
            domain_conjugated: false,
            codomain: cap,
            codomain_conjugated: true,
            entries: b,
        },
        c: OperatorMatrix {
            domain: cap,
            domain_conjugated: false,
            codomain: lb,
            codomain_conjugated: true,
            entries: c,
        },
        d: OperatorMatrix {
            domain: lb,
            domain_conjugated: false,
            codomain: lb,
            codomain_conjugated: true,
            entries: d,
        },
        truncation: ops.cap_basis.truncation,
        precompletion_residual: residual,
    })
}

/// Apply the block matrix: (alpha_1, alpha_2) -> (conj(beta_1), conj(beta_2)).
pub fn scatter(
    s: &ScatteringMatrix,
    alpha1: &CoeffVector,
    alpha2: &CoeffVector,
) -> Result<(CoeffVector, CoeffVector), OperatorError> {
    let b1 = s.a.apply(alpha1)?.add(&s.b.apply(alpha2)?)?;
    let b2 = s.c.apply(alpha1)?.add(&s.d.apply(alpha2)?)?;
    Ok((b1, b2))
}

/// The Sigma_1-side harmonic form -gb + T_{1,1} gb whose boundary values
/// match those of T_{1,2} gb taken from the Sigma_2 side.
pub fn overfare_exact_form(
    ops: &SchifferOperators,
    gamma_bar: &CoeffVector,
) -> Result<HarmonicPair, OperatorError> {
    let holo = ops.t11.apply(gamma_bar)?;
    let antiholo = gamma_bar.scale(Complex64::new(-1.0, 0.0));
    Ok(HarmonicPair::new(holo, antiholo))
}

/// Boundary data of T_{1,2} gb on every curve, from the Sigma_2 side. The
/// raw Laurent coefficients of the image come directly from the exact tail
/// matrix (never through the ill-conditioned frame inversion).
pub fn overfare_sigma2_boundary(
    complex: &CapComplex,
    ops: &SchifferOperators,
    gamma_bar: &CoeffVector,
    modes: i64,
) -> Result<Vec<BoundaryOneForm>, OperatorError> {
    if gamma_bar.basis != ops.cap_basis || !gamma_bar.conjugated {
        return Err(crate::error::SpaceError::BasisMismatch(
            "overfare expects a conjugated cap-frame vector".into(),
        )
        .into());
    }
    let raw = &ops.t12_raw * &gamma_bar.coeffs;
    let raw_vec = CoeffVector::new(ops.sigma2.basis, false, raw);
    let mut out = Vec::with_capacity(complex.n_caps());
    for k in 0..complex.n_caps() {
        out.push(restrict_coeff_vector(complex, &raw_vec, k, modes)?);
    }
    Ok(out)
}

/// Largest per-curve H^{-1/2}-weighted boundary mismatch between the two
/// sides of the exact overfare identity.
pub fn overfare_boundary_mismatch(
    complex: &CapComplex,
    ops: &SchifferOperators,
    gamma_bar: &CoeffVector,
    modes: i64,
) -> Result<f64, OperatorError> {
    let sigma1_side = overfare_exact_form(ops, gamma_bar)?;
    let sigma2_side = overfare_sigma2_boundary(complex, ops, gamma_bar, modes)?;
    let mut worst = 0.0f64;
    for (k, outside) in sigma2_side.iter().enumerate() {
        let inside = boundary_restriction(complex, &sigma1_side, k, modes)?;
        worst = worst.max(outside.weighted_mismatch(&inside));
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefinementLevel {
    #[serde(rename = "N")]
    pub truncation: usize,
    pub quad: usize,
    #[serde(rename = "J")]
    pub modes: i64,
    pub defect: f64,
}

/// Assembled diagnostics for one complex at one truncation, plus the
/// refinement history the ladder accumulated so far.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScatteringReport {
    pub truncation: usize,
    pub defect: f64,
    pub block_norms: [f64; 4],
    pub refinement_history: Vec<RefinementLevel>,
}

/// Harmonic-measure basis: constants, decaying powers at each puncture, and
/// log differences (coefficients summing to zero).
#[derive(Debug, Clone)]
enum HmTerm {
    Const,
    LogDiff(usize),
    RePow(usize, i32),
    ImPow(usize, i32),
}

#[derive(Debug, Clone)]
pub struct HarmonicMeasures {
    terms: Vec<HmTerm>,
    punctures: Vec<Complex64>,
    /// coefficient rows, one solution per cap
    pub coefficients: Vec<DVector<f64>>,
    pub period_matrix: DMatrix<f64>,
    pub condition: f64,
    pub boundary_residual: f64,
}

impl HarmonicMeasures {
    fn term_value(&self, t: &HmTerm, z: Complex64) -> f64 {
        match *t {
            HmTerm::Const => 1.0,
            HmTerm::LogDiff(l) => ((z - self.punctures[l]).norm()
                / (z - self.punctures[self.punctures.len() - 1]).norm())
            .ln(),
            HmTerm::RePow(l, m) => (z - self.punctures[l]).powi(-m).re,
            HmTerm::ImPow(l, m) => (z - self.punctures[l]).powi(-m).im,
        }
    }

    /// F'(z) with the basis function u = Re F; then *du = Im(F' dz) and
    /// the holomorphic part is del u = (1/2) F' dz.
    fn term_fprime(&self, t: &HmTerm, z: Complex64) -> Complex64 {
        match *t {
            HmTerm::Const => Complex64::ZERO,
            HmTerm::LogDiff(l) => {
                Complex64::ONE / (z - self.punctures[l])
                    - Complex64::ONE / (z - self.punctures[self.punctures.len() - 1])
            }
            HmTerm::RePow(l, m) => {
                -Complex64::new(m as f64, 0.0) * (z - self.punctures[l]).powi(-m - 1)
            }
            HmTerm::ImPow(l, m) => {
                Complex64::new(0.0, m as f64) * (z - self.punctures[l]).powi(-m - 1)
            }
        }
    }

    pub fn eval(&self, k: usize, z: Complex64) -> f64 {
        self.terms
            .iter()
            .zip(self.coefficients[k].iter())
            .map(|(t, &c)| c * self.term_value(t, z))
            .sum()
    }

    /// dz-coefficient of the holomorphic part del omega_k.
    pub fn del_coefficient(&self, k: usize, z: Complex64) -> Complex64 {
        let mut acc = Complex64::ZERO;
        for (t, &c) in self.terms.iter().zip(self.coefficients[k].iter()) {
            acc += self.term_fprime(t, z) * 0.5 * c;
        }
        acc
    }
}

/// Least-squares collocation for the harmonic measures of Sigma_2 and the
/// boundary period matrix Pi_jk = int_{Gamma_j} *d omega_k (boundary of
/// Sigma_2 orientation).
pub fn harmonic_measures(
    complex: &CapComplex,
    powers_per_cap: usize,
) -> Result<HarmonicMeasures, OperatorError> {
    let n = complex.n_caps();
    if n < 2 {
        return Err(OperatorError::NeedTwoCaps);
    }
    let punctures = complex.punctures();
    let mut terms = vec![HmTerm::Const];
    for l in 0..n - 1 {
        terms.push(HmTerm::LogDiff(l));
    }
    for l in 0..n {
        for m in 1..=powers_per_cap as i32 {
            terms.push(HmTerm::RePow(l, m));
            terms.push(HmTerm::ImPow(l, m));
        }
    }
    let basis_size = terms.len();
    let mut hm = HarmonicMeasures {
        terms,
        punctures,
        coefficients: Vec::new(),
        period_matrix: DMatrix::zeros(n, n),
        condition: 0.0,
        boundary_residual: 0.0,
    };

    // 2x oversampled collocation points, distributed over the curves
    let per_curve = (2 * basis_size).div_ceil(n).max(8);
    let mut rows = Vec::with_capacity(n * per_curve);
    for k in 0..n {
        for (_, z, _) in complex.curve_nodes(k, per_curve) {
            rows.push((k, z));
        }
    }
    let mut a = DMatrix::zeros(rows.len(), basis_size);
    for (r, &(_, z)) in rows.iter().enumerate() {
        for (c, t) in hm.terms.iter().enumerate() {
            a[(r, c)] = hm.term_value(t, z);
        }
    }
    // equilibrate: high powers evaluated on distant curves make otherwise
    // harmless columns tiny
    let col_scale: Vec<f64> = (0..basis_size)
        .map(|c| {
            let m = a.column(c).amax();
            if m > 0.0 {
                m
            } else {
                1.0
            }
        })
        .collect();
    for (c, s) in col_scale.iter().enumerate() {
        let mut col = a.column_mut(c);
        col /= *s;
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values[0];
    let smin = svd
        .singular_values
        .iter()
        .fold(f64::INFINITY, |x, &y| x.min(y));
    let condition = smax / smin.max(f64::MIN_POSITIVE);
    if condition > 1e12 {
        return Err(OperatorError::IllConditioned { cond: condition });
    }
    hm.condition = condition;

    let mut boundary_residual = 0.0f64;
    for k in 0..n {
        let rhs = DVector::from_iterator(
            rows.len(),
            rows.iter()
                .map(|&(curve, _)| if curve == k { 1.0 } else { 0.0 }),
        );
        let mut sol = svd
            .solve(&rhs, 1e-12 * smax)
            .map_err(|_| OperatorError::IllConditioned { cond: condition })?;
        let fit = &a * &sol;
        boundary_residual = boundary_residual.max((fit - &rhs).amax());
        for (c, s) in col_scale.iter().enumerate() {
            sol[c] /= *s;
        }
        hm.coefficients.push(sol);
    }
    hm.boundary_residual = boundary_residual;

    // Pi_jk by contour quadrature of Im(F_k'(z) dz) over curve j, with the
    // boundary-of-Sigma_2 orientation (negative of the cap orientation)
    let m_samp = complex.samples();
    for j in 0..n {
        let nodes = complex.curve_nodes(j, m_samp);
        for k in 0..n {
            let mut acc = 0.0;
            for &(u, z, d) in &nodes {
                let fp: Complex64 = hm
                    .terms
                    .iter()
                    .zip(hm.coefficients[k].iter())
                    .map(|(t, &c)| hm.term_fprime(t, z) * c)
                    .sum();
                acc += (fp * d * Complex64::I * u).im;
            }
            hm.period_matrix[(j, k)] = -acc * 2.0 * PI / m_samp as f64;
        }
    }
    Ok(hm)
}

/// Experimental (reported, not gated): residual of the scattering action on
/// harmonic measures, D c(del omega_k) vs conj(c(del omega_k)) after
/// least-squares projection of del omega_k onto the truncated Sigma_2 frame
/// through boundary Fourier data.
pub fn harmonic_measure_scatter_residual(
    complex: &CapComplex,
    ops: &SchifferOperators,
    s: &ScatteringMatrix,
    hm: &HarmonicMeasures,
    modes: i64,
) -> Result<f64, OperatorError> {
    let n = complex.n_caps();
    let dim = ops.sigma2.basis.dim();
    let rows_per_curve = (2 * modes + 1) as usize;
    let mut basis_rows = DMatrix::zeros(n * rows_per_curve, dim);
    for i in 0..dim {
        let mut raw = DVector::zeros(dim);
        raw[i] = Complex64::ONE;
        let v = CoeffVector::new(ops.sigma2.basis, false, raw);
        for k in 0..n {
            let bf = restrict_coeff_vector(complex, &v, k, modes)?;
            for (r, j) in (-modes..=modes).enumerate() {
                let w = 1.0 / (j.abs().max(1) as f64).sqrt();
                basis_rows[(k * rows_per_curve + r, i)] = bf.coeff(j) * w;
            }
        }
    }
    let mut worst = 0.0f64;
    for meas in 0..n {
        let mut rhs = DVector::zeros(n * rows_per_curve);
        for k in 0..n {
            let bf = restrict_sampled(complex, k, modes, false, |z| hm.del_coefficient(meas, z))?;
            for (r, j) in (-modes..=modes).enumerate() {
                let w = 1.0 / (j.abs().max(1) as f64).sqrt();
                rhs[k * rows_per_curve + r] = bf.coeff(j) * w;
            }
        }
        let svd = basis_rows.clone().svd(true, true);
        let raw = svd
            .solve(&rhs, 1e-12 * svd.singular_values[0])
            .map_err(|_| OperatorError::IllConditioned {
                cond: f64::INFINITY,
            })?;
        let c_on = ops.sigma2.on_from_raw(&raw);
        let norm = c_on.norm();
        if norm < 1e-12 {
            continue;
        }
        let predicted = &s.d.entries * &c_on;
        let expected = c_on.map(|c| c.conj());
        worst = worst.max((predicted - expected).norm() / norm);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capmap::{build_complex, CapSpec, ComplexSpec};
    use crate::schiffer::{assemble_operators, OperatorParams};
    use rand::Rng;
    use rand::SeedableRng;

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
    fn circle_scattering_is_antidiagonal_and_unitary() {
        let cx = single_cap(&[r(1.0)], 8);
        let ops = assemble_operators(&cx, &OperatorParams::default()).unwrap();
        let s = assemble_scattering(&ops, 1e-2).unwrap();
        assert!(s.unitarity_defect() < 1e-10, "{}", s.unitarity_defect());
        let a_norm = s.a.spectral_norm();
        let d_norm = s.d.spectral_norm();
        assert!(a_norm < 1e-10 && d_norm < 1e-10, "{a_norm} {d_norm}");
        for i in 0..8 {
            assert!((s.c.entries[(i, i)] + Complex64::ONE).norm() < 1e-10);
            assert!((s.b.entries[(i, i)] + Complex64::ONE).norm() < 1e-10);
        }
        // scatter e_1: output lands in the conjugate exterior frame
        let a1 = CoeffVector::basis_vector(ops.cap_basis, false, 0, 1);
        let a2 = CoeffVector::zeros(ops.sigma2.basis, false);
        let (b1, b2) = scatter(&s, &a1, &a2).unwrap();
        assert!(b1.norm() < 1e-10);
        assert!(b2.conjugated);
        assert!((b2.coeffs[0] + Complex64::ONE).norm() < 1e-10);
        assert!((b2.norm() - 1.0).abs() < 1e-10);
        // zero in, zero out
        let (z1, z2) = scatter(
            &s,
            &CoeffVector::zeros(ops.cap_basis, false),
            &CoeffVector::zeros(ops.sigma2.basis, false),
        )
        .unwrap();
        assert_eq!(z1.norm(), 0.0);
        assert_eq!(z2.norm(), 0.0);
    }

    #[test]
    fn defect_decreases_under_refinement() {
        // slowly decaying coefficients keep the truncation signal above the
        // rounding floor on the whole ladder
        let coeffs: Vec<Complex64> = std::iter::once(r(1.0))
            .chain(
                (2..=10).map(|k| Complex64::from_polar(0.2 / ((k * k) as f64), -(0.9 * k as f64))),
            )
            .collect();
        let defect_at = |n: usize| {
            let cx = single_cap(&coeffs, n);
            let ops = assemble_operators(&cx, &OperatorParams::default()).unwrap();
            assemble_scattering(&ops, 1e-2).unwrap().unitarity_defect()
        };
        let d8 = defect_at(8);
        let d16 = defect_at(16);
        let d24 = defect_at(24);
        assert!(d8 > d16 && d16 > d24, "{d8} {d16} {d24}");
        assert!(d24 < 1e-6, "{d24}");
    }

    #[test]
    fn circle_overfare_boundary_agreement() {
        let cx = single_cap(&[r(1.0)], 6);
        let ops = assemble_operators(&cx, &OperatorParams::default()).unwrap();
        let gb = CoeffVector::basis_vector(ops.cap_basis, true, 0, 1);
        let mismatch = overfare_boundary_mismatch(&cx, &ops, &gb, 24).unwrap();
        assert!(mismatch < 1e-9, "{mismatch}");
        // gb = 0 maps to 0
        let zero = CoeffVector::zeros(ops.cap_basis, true);
        let pair = overfare_exact_form(&ops, &zero).unwrap();
        assert_eq!(pair.norm(), 0.0);
    }

    #[test]
    fn quadratic_overfare_boundary_agreement() {
        let cx = single_cap(&[r(1.0), r(0.3)], 20);
        let ops = assemble_operators(&cx, &OperatorParams::default()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..4 {
            let coeffs = DVector::from_iterator(
                ops.cap_basis.dim(),
                (0..ops.cap_basis.dim())
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))),
            );
            let gb = CoeffVector::new(ops.cap_basis, true, coeffs);
            let gb = gb.scale(r(1.0 / gb.norm()));
            let mismatch = overfare_boundary_mismatch(&cx, &ops, &gb, 80).unwrap();
            assert!(mismatch < 1e-6, "mismatch {mismatch}");
        }
    }

    #[test]
    fn annulus_period_matrix() {
        let r0 = 0.25;
        let cx = build_complex(&ComplexSpec {
            caps: vec![
                ComplexSpec::cap(Complex64::ZERO, &[r(r0)]),
                CapSpec {
                    center: [0.0, 0.0],
                    coeffs: vec![[1.0, 0.0]],
                    at_infinity: true,
                },
            ],
            truncation: 8,
            samples: 1024,
        })
        .unwrap();
        let hm = harmonic_measures(&cx, 10).unwrap();
        assert!(hm.boundary_residual < 1e-8, "{}", hm.boundary_residual);
        let expect = 2.0 * PI / (1.0 / r0).ln();
        assert!(
            (hm.period_matrix[(0, 0)] - expect).abs() < 1e-6,
            "{} vs {expect}",
            hm.period_matrix[(0, 0)]
        );
        // full matrix symmetry and zero column sums
        let p = &hm.period_matrix;
        assert!((p[(0, 1)] - p[(1, 0)]).abs() < 1e-8);
        assert!((p[(0, 0)] + p[(1, 0)]).abs() < 1e-7);
        // reduced matrix (omit one index) positive definite: here just > 0
        assert!(p[(0, 0)] > 0.0);
    }

    #[test]
    fn harmonic_measures_need_two_caps() {
        let cx = single_cap(&[r(1.0)], 4);
        assert!(matches!(
            harmonic_measures(&cx, 6),
            Err(OperatorError::NeedTwoCaps)
        ));
    }

    #[test]
    fn measures_sum_to_one() {
        let cx = build_complex(&ComplexSpec {
            caps: vec![
                ComplexSpec::cap(Complex64::new(-1.2, 0.0), &[r(0.4), r(0.05)]),
                ComplexSpec::cap(Complex64::new(1.2, 0.2), &[r(0.35)]),
            ],
            truncation: 8,
            samples: 1024,
        })
        .unwrap();
        let hm = harmonic_measures(&cx, 12).unwrap();
        for z in [Complex64::new(0.0, 0.8), Complex64::new(0.3, -1.1)] {
            let total: f64 = (0..2).map(|k| hm.eval(k, z)).sum();
            assert!((total - 1.0).abs() < 1e-7, "sum at {z}: {total}");
        }
    }
}
