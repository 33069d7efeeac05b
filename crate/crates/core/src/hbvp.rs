//! The holomorphic boundary value problem for semi-exact one-forms in genus
//! zero: solvability test, the unique solution, and stability diagnostics.
//!
//! With no holomorphic forms on the sphere the data reduces to the harmonic
//! datum delta on the caps: delta is solvable iff delta = (I - T_{1,1}) gb
//! for some conjugate cap form gb, in which case gb is the anti-holomorphic
//! part of delta and the solution is beta = -T_{1,2} gb. Solving is a
//! projection test plus one operator application; the least-squares fallback
//! is diagnostic only.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::capmap::CapComplex;
use crate::error::OperatorError;
use crate::scattering::overfare_sigma2_boundary;
use crate::schiffer::SchifferOperators;
use crate::spaces::{boundary_restriction, CoeffVector, HarmonicPair};

#[derive(Debug, Clone)]
pub struct HbvpData {
    /// The Dirichlet datum on the caps.
    pub delta: HarmonicPair,
    pub tolerance: f64,
}

pub const DEFAULT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct HbvpSolution {
    /// Solution coefficients in the orthonormalized Sigma_2 frame.
    pub beta: CoeffVector,
    /// The same solution in raw Laurent coefficients (for evaluation).
    pub beta_raw: DVector<Complex64>,
    pub gamma_bar: CoeffVector,
    pub residual: f64,
    /// Independent boundary verification: worst per-curve H^{-1/2} mismatch
    /// between the boundary values of beta and of delta.
    pub boundary_mismatch: f64,
}

/// Returned when the datum is not in the truncated range of I - T_{1,1};
/// carries the best least-squares gb as a diagnostic.
#[derive(Debug, Clone)]
pub struct Unsolvable {
    pub residual: f64,
    pub tolerance: f64,
    pub lsq_gamma_bar: CoeffVector,
    pub lsq_residual: f64,
}

impl std::fmt::Display for Unsolvable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "boundary datum unsolvable: residual {:.3e} above tolerance {:.3e} (least-squares distance {:.3e})",
            self.residual, self.tolerance, self.lsq_residual
        )
    }
}

fn check_datum(ops: &SchifferOperators, data: &HbvpData) -> Result<(), OperatorError> {
    if data.delta.holo.basis != ops.cap_basis || data.delta.antiholo.basis != ops.cap_basis {
        return Err(crate::error::SpaceError::BasisMismatch(
            "HBVP datum must live on the cap frame of the assembled operators".into(),
        )
        .into());
    }
    Ok(())
}

/// Relative solvability residual |holo(delta) + T_{1,1} antiholo(delta)| /
/// max(1, |delta|).
pub fn solvability_residual(
    ops: &SchifferOperators,
    data: &HbvpData,
) -> Result<f64, OperatorError> {
    check_datum(ops, data)?;
    let gamma_bar = &data.delta.antiholo;
    let holo_defect = &data.delta.holo.coeffs + &ops.t11.entries * &gamma_bar.coeffs;
    Ok(holo_defect.norm() / data.delta.norm().max(1.0))
}

/// Least-squares distance from delta to the range of I - T_{1,1} (relative,
/// same normalization as the direct residual), with the minimizing gb.
pub fn least_squares_gamma(
    ops: &SchifferOperators,
    data: &HbvpData,
) -> Result<(CoeffVector, f64), OperatorError> {
    check_datum(ops, data)?;
    let m11 = &ops.t11.entries;
    let dim = m11.ncols();
    // minimize |gb - delta_a|^2 + |M gb + delta_h|^2
    let normal = DMatrix::<Complex64>::identity(dim, dim) + m11.adjoint() * m11;
    let rhs = &data.delta.antiholo.coeffs - m11.adjoint() * &data.delta.holo.coeffs;
    let gb = normal
        .cholesky()
        .ok_or(OperatorError::GramNotPositiveDefinite)?
        .solve(&rhs);
    let r1 = (&gb - &data.delta.antiholo.coeffs).norm_squared();
    let r2 = (m11 * &gb + &data.delta.holo.coeffs).norm_squared();
    let dist = (r1 + r2).sqrt() / data.delta.norm().max(1.0);
    Ok((CoeffVector::new(ops.cap_basis, true, gb), dist))
}

/// Solve the boundary value problem, verifying the boundary agreement of the
/// solution independently through Fourier collocation.
pub fn solve(
    complex: &CapComplex,
    ops: &SchifferOperators,
    data: &HbvpData,
    modes: i64,
) -> Result<Result<HbvpSolution, Unsolvable>, OperatorError> {
    let residual = solvability_residual(ops, data)?;
    if residual > data.tolerance {
        let (lsq_gamma_bar, lsq_residual) = least_squares_gamma(ops, data)?;
        return Ok(Err(Unsolvable {
            residual,
            tolerance: data.tolerance,
            lsq_gamma_bar,
            lsq_residual,
        }));
    }
    let gamma_bar = data.delta.antiholo.clone();
    let beta = ops.t12.apply(&gamma_bar)?.scale(Complex64::new(-1.0, 0.0));
    let beta_raw = -(&ops.t12_raw * &gamma_bar.coeffs);

    // [beta] = [delta] curve by curve, via collocation only
    let mut boundary_mismatch = 0.0f64;
    let sigma2_side = overfare_sigma2_boundary(complex, ops, &gamma_bar, modes)?;
    for (k, outside) in sigma2_side.iter().enumerate() {
        // beta = -T_{1,2} gb, so its boundary data is the negative
        let beta_bf = crate::spaces::BoundaryOneForm {
            curve_index: k,
            modes: outside.modes,
            fourier: outside.fourier.iter().map(|c| -c).collect(),
        };
        let delta_bf = boundary_restriction(complex, &data.delta, k, modes)?;
        boundary_mismatch = boundary_mismatch.max(beta_bf.weighted_mismatch(&delta_bf));
    }
    Ok(Ok(HbvpSolution {
        beta,
        beta_raw,
        gamma_bar,
        residual,
        boundary_mismatch,
    }))
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub trials: usize,
    pub max_ratio: f64,
}

/// Over random solvable data, the measured bound |beta| / |delta|.
pub fn stability_bound_check(
    complex: &CapComplex,
    ops: &SchifferOperators,
    trials: usize,
    rng: &mut impl Rng,
) -> Result<StabilityReport, OperatorError> {
    let mut max_ratio = 0.0f64;
    let dim = ops.cap_basis.dim();
    for _ in 0..trials {
        let gb = CoeffVector::new(
            ops.cap_basis,
            true,
            DVector::from_iterator(
                dim,
                (0..dim)
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))),
            ),
        );
        let delta = manufactured_datum(ops, &gb)?;
        let data = HbvpData {
            delta,
            tolerance: DEFAULT_TOLERANCE,
        };
        let solution = solve(complex, ops, &data, 4 * ops.cap_basis.truncation as i64)?
            .expect("manufactured data is solvable");
        let ratio = solution.beta.norm() / data.delta.norm().max(f64::MIN_POSITIVE);
        max_ratio = max_ratio.max(ratio);
    }
    Ok(StabilityReport { trials, max_ratio })
}

/// delta = (I - T_{1,1}) gb: the manufactured solvable datum with known gb.
pub fn manufactured_datum(
    ops: &SchifferOperators,
    gamma_bar: &CoeffVector,
) -> Result<HarmonicPair, OperatorError> {
    let holo = ops.t11.apply(gamma_bar)?.scale(Complex64::new(-1.0, 0.0));
    Ok(HarmonicPair::new(holo, gamma_bar.clone()))
}
