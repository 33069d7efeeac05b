//! Coefficient-space realization of the Bergman spaces and the boundary
//! spaces H^{+-1/2}(Gamma_k) as weighted Fourier sequence spaces.
//!
//! Orthonormal frames:
//!   DiskInterior      e_n = sqrt(n/pi) z^{n-1} dz on D, n = 1..N
//!   DiskExterior      e_n = sqrt(n/pi) z^{-n-1} dz on 1 < |z|, n = 1..N
//!   CapPullback       (f_k^{-1})* e_n on cap k, stacked over caps
//!   ComplementLaurent sqrt(n/pi) (z - p_k)^{-n-1} dz on Sigma_2, stacked;
//!                     this raw family is orthonormal only for circular caps —
//!                     operators work in its Gram-orthonormalized frame (see
//!                     the schiffer module).

use nalgebra::DVector;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::capmap::CapComplex;
use crate::error::SpaceError;

pub const PI: f64 = std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    DiskInterior,
    DiskExterior,
    CapPullback,
    ComplementLaurent,
}

/// Basis metadata: which orthonormal family, per-cap truncation, cap count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisId {
    pub kind: BasisKind,
    pub truncation: usize,
    pub caps: usize,
}

impl BasisId {
    pub fn disk_interior(n: usize) -> Self {
        Self {
            kind: BasisKind::DiskInterior,
            truncation: n,
            caps: 1,
        }
    }

    pub fn disk_exterior(n: usize) -> Self {
        Self {
            kind: BasisKind::DiskExterior,
            truncation: n,
            caps: 1,
        }
    }

    pub fn cap_pullback(complex: &CapComplex) -> Self {
        Self {
            kind: BasisKind::CapPullback,
            truncation: complex.truncation(),
            caps: complex.n_caps(),
        }
    }

    pub fn complement_laurent(complex: &CapComplex) -> Self {
        Self {
            kind: BasisKind::ComplementLaurent,
            truncation: complex.truncation(),
            caps: complex.n_caps(),
        }
    }

    pub fn dim(&self) -> usize {
        self.truncation * self.caps
    }

    /// Flat index of mode n (1-based) on cap k.
    pub fn index(&self, cap: usize, n: usize) -> usize {
        debug_assert!(n >= 1 && n <= self.truncation && cap < self.caps);
        cap * self.truncation + (n - 1)
    }
}

/// An element of a truncated Bergman space (or of its conjugate space when
/// `conjugated` is set) expanded in the orthonormal frame of `basis`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffVector {
    pub basis: BasisId,
    pub conjugated: bool,
    pub coeffs: DVector<Complex64>,
}

impl CoeffVector {
    pub fn zeros(basis: BasisId, conjugated: bool) -> Self {
        Self {
            basis,
            conjugated,
            coeffs: DVector::zeros(basis.dim()),
        }
    }

    pub fn new(basis: BasisId, conjugated: bool, coeffs: DVector<Complex64>) -> Self {
        assert_eq!(coeffs.len(), basis.dim(), "coefficient length mismatch");
        Self {
            basis,
            conjugated,
            coeffs,
        }
    }

    pub fn basis_vector(basis: BasisId, conjugated: bool, cap: usize, n: usize) -> Self {
        let mut v = Self::zeros(basis, conjugated);
        v.coeffs[basis.index(cap, n)] = Complex64::ONE;
        v
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.norm()
    }

    /// Entrywise conjugate, flipping the conjugation flag: represents the
    /// complex-conjugate form.
    pub fn conjugate(&self) -> Self {
        Self {
            basis: self.basis,
            conjugated: !self.conjugated,
            coeffs: self.coeffs.map(|c| c.conj()),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            basis: self.basis,
            conjugated: self.conjugated,
            coeffs: &self.coeffs * s,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, SpaceError> {
        self.check_compatible(other)?;
        Ok(Self {
            basis: self.basis,
            conjugated: self.conjugated,
            coeffs: &self.coeffs + &other.coeffs,
        })
    }

    fn check_compatible(&self, other: &Self) -> Result<(), SpaceError> {
        if self.basis != other.basis || self.conjugated != other.conjugated {
            return Err(SpaceError::BasisMismatch(format!(
                "{:?}/conj={} vs {:?}/conj={}",
                self.basis, self.conjugated, other.basis, other.conjugated
            )));
        }
        Ok(())
    }
}

/// Bergman inner product <a, b> = sum a_i conj(b_i) in a shared orthonormal
/// frame.
pub fn inner_product(a: &CoeffVector, b: &CoeffVector) -> Result<Complex64, SpaceError> {
    a.check_compatible(b)?;
    let mut s = Complex64::ZERO;
    for i in 0..a.coeffs.len() {
        s += a.coeffs[i] * b.coeffs[i].conj();
    }
    Ok(s)
}

/// A harmonic one-form alpha + conj(beta) split into its holomorphic and
/// anti-holomorphic parts.
#[derive(Debug, Clone)]
pub struct HarmonicPair {
    pub holo: CoeffVector,
    pub antiholo: CoeffVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Holo,
    Antiholo,
}

impl HarmonicPair {
    pub fn new(holo: CoeffVector, antiholo: CoeffVector) -> Self {
        assert!(!holo.conjugated && antiholo.conjugated);
        Self { holo, antiholo }
    }

    pub fn project(&self, which: Part) -> &CoeffVector {
        match which {
            Part::Holo => &self.holo,
            Part::Antiholo => &self.antiholo,
        }
    }

    pub fn norm(&self) -> f64 {
        (self.holo.norm().powi(2) + self.antiholo.norm().powi(2)).sqrt()
    }
}

/// Which side of Gamma_k a boundary functional is taken from. The curve is
/// always parametrized by theta -> f_k(e^{i theta}); the side only flips the
/// orientation of period and pairing functionals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Caps,
    Complement,
}

/// Fourier-coefficient representation of a one-form on Gamma_k pulled back to
/// the circle: (sum_j c_j e^{i j theta}) d theta, j = -J..J.
#[derive(Debug, Clone)]
pub struct BoundaryOneForm {
    pub curve_index: usize,
    pub modes: i64,
    pub fourier: Vec<Complex64>,
}

impl BoundaryOneForm {
    pub fn coeff(&self, j: i64) -> Complex64 {
        if j.abs() > self.modes {
            return Complex64::ZERO;
        }
        self.fourier[(j + self.modes) as usize]
    }

    /// Integral over the curve, oriented positively with respect to the caps.
    pub fn period(&self) -> Complex64 {
        2.0 * PI * self.coeff(0)
    }

    /// Period functional as seen from the given side; the complement side
    /// carries the opposite boundary orientation.
    pub fn period_from_side(&self, side: Side) -> Complex64 {
        match side {
            Side::Caps => self.period(),
            Side::Complement => -self.period(),
        }
    }

    /// H^{-1/2} seminorm: sqrt of sum_{j != 0} |c_j|^2 / |j|.
    pub fn seminorm(&self) -> f64 {
        let mut s = 0.0;
        for j in -self.modes..=self.modes {
            if j != 0 {
                s += self.coeff(j).norm_sqr() / j.abs() as f64;
            }
        }
        s.sqrt()
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.curve_index, other.curve_index);
        let modes = self.modes.max(other.modes);
        let fourier = (-modes..=modes)
            .map(|j| self.coeff(j) - other.coeff(j))
            .collect();
        Self {
            curve_index: self.curve_index,
            modes,
            fourier,
        }
    }

    /// H^{-1/2}-weighted distance: the seminorm of the difference plus the
    /// mode-zero (period) term at weight 1.
    pub fn weighted_mismatch(&self, other: &Self) -> f64 {
        let d = self.sub(other);
        (d.seminorm().powi(2) + d.coeff(0).norm_sqr()).sqrt()
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("mode,re,im\n");
        for j in -self.modes..=self.modes {
            let c = self.coeff(j);
            out.push_str(&format!("{j},{:.17e},{:.17e}\n", c.re, c.im));
        }
        out
    }
}

pub fn coeff_vector_csv(v: &CoeffVector) -> String {
    let mut out = String::from("index,re,im\n");
    for (i, c) in v.coeffs.iter().enumerate() {
        out.push_str(&format!("{i},{:.17e},{:.17e}\n", c.re, c.im));
    }
    out
}

/// Fourier coefficients c_j (j = -modes..modes) of samples of a 2 pi periodic
/// function, with an aliasing check: if the top quarter of the spectrum holds
/// more than 1e-8 of the total energy the sampling is declared insufficient.
pub fn fourier_modes(samples: &[Complex64], modes: i64) -> Result<Vec<Complex64>, SpaceError> {
    let m = samples.len();
    assert!(m as i64 >= 2 * modes + 1, "need at least 2J+1 samples");
    let mut buf: Vec<Complex64> = samples.to_vec();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let total: f64 = buf.iter().map(|c| c.norm_sqr()).sum();
    if total > 0.0 {
        let cutoff = (3 * m) / 8;
        let top: f64 = (0..m)
            .filter(|&k| {
                let freq = if k <= m / 2 { k } else { m - k };
                freq >= cutoff
            })
            .map(|k| buf[k].norm_sqr())
            .sum();
        if top / total > 1e-8 {
            return Err(SpaceError::InsufficientSamples {
                energy: top / total,
            });
        }
    }
    let scale = 1.0 / m as f64;
    Ok((-modes..=modes)
        .map(|j| {
            let k = j.rem_euclid(m as i64) as usize;
            buf[k] * scale
        })
        .collect())
}

/// Boundary restriction of a one-form given by a coefficient sampler a(z)
/// (its dz component, or the conj(dz) component when `conjugated`).
pub fn restrict_sampled(
    complex: &CapComplex,
    curve: usize,
    modes: i64,
    conjugated: bool,
    mut coefficient: impl FnMut(Complex64) -> Complex64,
) -> Result<BoundaryOneForm, SpaceError> {
    if curve >= complex.n_caps() {
        return Err(SpaceError::CurveOutOfRange {
            curve,
            caps: complex.n_caps(),
        });
    }
    let m = complex.samples();
    let nodes = complex.curve_nodes(curve, m);
    let samples: Vec<Complex64> = nodes
        .iter()
        .map(|&(u, z, d)| {
            let s = coefficient(z) * d * Complex64::I * u;
            if conjugated {
                s.conj()
            } else {
                s
            }
        })
        .collect();
    Ok(BoundaryOneForm {
        curve_index: curve,
        modes,
        fourier: fourier_modes(&samples, modes)?,
    })
}

/// Boundary restriction of a coefficient vector.
///
/// CapPullback vectors restrict to their own curve (the pullback through f_k
/// makes each mode an exact single Fourier mode); ComplementLaurent vectors
/// are taken in the *raw* Laurent frame and restrict to every curve.
pub fn restrict_coeff_vector(
    complex: &CapComplex,
    v: &CoeffVector,
    curve: usize,
    modes: i64,
) -> Result<BoundaryOneForm, SpaceError> {
    if curve >= complex.n_caps() {
        return Err(SpaceError::CurveOutOfRange {
            curve,
            caps: complex.n_caps(),
        });
    }
    let n_modes = v.basis.truncation;
    match v.basis.kind {
        BasisKind::CapPullback | BasisKind::DiskInterior | BasisKind::DiskExterior => {
            let mut fourier = vec![Complex64::ZERO; (2 * modes + 1) as usize];
            let cap = if v.basis.kind == BasisKind::CapPullback {
                curve
            } else {
                0
            };
            for n in 1..=n_modes as i64 {
                let c = v.coeffs[v.basis.index(cap, n as usize)];
                let freq = match v.basis.kind {
                    BasisKind::DiskExterior => -n,
                    _ => n,
                };
                // pullback of the basis mode is i sqrt(n/pi) e^{i freq theta};
                // a conjugated vector uses the conjugated basis, so the basis
                // factor conjugates while the stored coefficient does not
                let base = Complex64::I * (n as f64 / PI).sqrt();
                let (freq, amp) = if v.conjugated {
                    (-freq, base.conj() * c)
                } else {
                    (freq, base * c)
                };
                if freq.abs() <= modes {
                    fourier[(freq + modes) as usize] += amp;
                }
            }
            Ok(BoundaryOneForm {
                curve_index: curve,
                modes,
                fourier,
            })
        }
        BasisKind::ComplementLaurent => {
            let punctures = complex.punctures();
            let coeffs = v.coeffs.clone();
            let basis = v.basis;
            restrict_sampled(complex, curve, modes, v.conjugated, move |z| {
                let mut a = Complex64::ZERO;
                for (k, p) in punctures.iter().enumerate() {
                    let dz_inv = Complex64::ONE / (z - p);
                    let mut pw = dz_inv * dz_inv; // (z-p)^{-n-1} at n = 1
                    for n in 1..=basis.truncation {
                        let c = if v.conjugated {
                            // sampler receives the dz coefficient of the
                            // un-conjugated form; conjugation happens inside
                            coeffs[basis.index(k, n)].conj()
                        } else {
                            coeffs[basis.index(k, n)]
                        };
                        a += c * (n as f64 / PI).sqrt() * pw;
                        pw *= dz_inv;
                    }
                }
                a
            })
        }
    }
}

/// Boundary restriction of a harmonic pair (both parts on the same family).
pub fn boundary_restriction(
    complex: &CapComplex,
    form: &HarmonicPair,
    curve: usize,
    modes: i64,
) -> Result<BoundaryOneForm, SpaceError> {
    let h = restrict_coeff_vector(complex, &form.holo, curve, modes)?;
    let a = restrict_coeff_vector(complex, &form.antiholo, curve, modes)?;
    let fourier = (-modes..=modes).map(|j| h.coeff(j) + a.coeff(j)).collect();
    Ok(BoundaryOneForm {
        curve_index: curve,
        modes,
        fourier,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capmap::{build_complex, gauss_area_rule, ComplexSpec};
    use rand::Rng;
    use rand::SeedableRng;

    fn r(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn unit_disk_complex(n: usize) -> CapComplex {
        build_complex(&ComplexSpec {
            caps: vec![ComplexSpec::cap(Complex64::ZERO, &[r(1.0)])],
            truncation: n,
            samples: 256,
        })
        .unwrap()
    }

    #[test]
    fn inner_product_orthonormality() {
        let b = BasisId::disk_interior(4);
        let e1 = CoeffVector::basis_vector(b, false, 0, 1);
        let e2 = CoeffVector::basis_vector(b, false, 0, 2);
        assert_eq!(inner_product(&e1, &e1).unwrap(), Complex64::ONE);
        assert_eq!(inner_product(&e1, &e2).unwrap(), Complex64::ZERO);
        let s = r(1.0 / 2f64.sqrt());
        let mix = e1.scale(s).add(&e2.scale(s)).unwrap();
        let p = inner_product(&mix, &e1).unwrap();
        assert!((p - s).norm() < 1e-15);
        assert!(inner_product(&e1.conjugate(), &e1).is_err());
    }

    #[test]
    fn projections_reassemble() {
        let b = BasisId::disk_interior(3);
        let h = CoeffVector::basis_vector(b, false, 0, 1);
        let a = CoeffVector::basis_vector(b, true, 0, 2).scale(r(2.0));
        let pair = HarmonicPair::new(h.clone(), a.clone());
        assert_eq!(pair.project(Part::Holo), &h);
        assert_eq!(pair.project(Part::Antiholo), &a);
        let zero_holo = HarmonicPair::new(CoeffVector::zeros(b, false), a);
        assert_eq!(zero_holo.project(Part::Holo).norm(), 0.0);
    }

    #[test]
    fn restriction_of_disk_modes_is_single_mode() {
        let cx = unit_disk_complex(4);
        let b = BasisId::cap_pullback(&cx);
        // e_1 = (1/sqrt(pi)) dz pulls back to (i/sqrt(pi)) e^{i theta} d theta
        let e1 = CoeffVector::basis_vector(b, false, 0, 1);
        let bf = restrict_coeff_vector(&cx, &e1, 0, 8).unwrap();
        assert!((bf.coeff(1) - Complex64::I * r(1.0 / PI.sqrt())).norm() < 1e-14);
        for j in -8..=8i64 {
            if j != 1 {
                assert!(bf.coeff(j).norm() < 1e-14);
            }
        }
        // Laurent mode 1 = (1/sqrt(pi)) z^{-2} dz -> single mode j = -1
        let lb = BasisId::complement_laurent(&cx);
        let l1 = CoeffVector::basis_vector(lb, false, 0, 1);
        let bf = restrict_coeff_vector(&cx, &l1, 0, 8).unwrap();
        assert!((bf.coeff(-1).norm() - 1.0 / PI.sqrt()).abs() < 1e-12);
        for j in -8..=8i64 {
            if j != -1 {
                assert!(bf.coeff(j).norm() < 1e-12);
            }
        }
        let z = CoeffVector::zeros(b, false);
        let bf = restrict_coeff_vector(&cx, &z, 0, 8).unwrap();
        assert!(bf.fourier.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn restriction_is_linear() {
        let spec = ComplexSpec {
            caps: vec![ComplexSpec::cap(
                Complex64::ZERO,
                &[r(1.0), r(0.2), r(0.05)],
            )],
            truncation: 6,
            samples: 512,
        };
        let cx = build_complex(&spec).unwrap();
        let lb = BasisId::complement_laurent(&cx);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut rand_vec = || {
            CoeffVector::new(
                lb,
                false,
                DVector::from_iterator(
                    lb.dim(),
                    (0..lb.dim()).map(|_| {
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                    }),
                ),
            )
        };
        let x = rand_vec();
        let y = rand_vec();
        let a = Complex64::new(0.7, -0.3);
        let lhs = restrict_coeff_vector(&cx, &x.scale(a).add(&y).unwrap(), 0, 24).unwrap();
        let rx = restrict_coeff_vector(&cx, &x, 0, 24).unwrap();
        let ry = restrict_coeff_vector(&cx, &y, 0, 24).unwrap();
        for j in -24..=24i64 {
            let rhs = a * rx.coeff(j) + ry.coeff(j);
            assert!((lhs.coeff(j) - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn disk_exterior_gram_under_quadrature() {
        // map 1 < |z| to the disk by z = 1/u; the exterior basis becomes
        // sqrt(n/pi) u^{n+1} with density 1/|u|^4
        let n = 6;
        let q = gauss_area_rule(2 * n, 4 * n);
        for a in 1..=n {
            for b in 1..=n {
                let v = q.integrate_area(|u| {
                    let fa = (a as f64 / PI).sqrt() * u.powu(a as u32 + 1);
                    let fb = (b as f64 / PI).sqrt() * u.powu(b as u32 + 1);
                    fa * fb.conj() / u.norm_sqr().powi(2)
                });
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((v - r(expect)).norm() < 1e-10, "a={a} b={b}: {v}");
            }
        }
    }

    #[test]
    fn pullback_isometry_under_area_quadrature() {
        let spec = ComplexSpec {
            caps: vec![ComplexSpec::cap(
                Complex64::new(0.4, -0.2),
                &[r(1.0), r(0.25), Complex64::new(0.0, 0.04)],
            )],
            truncation: 8,
            samples: 512,
        };
        let cx = build_complex(&spec).unwrap();
        let cap = &cx.caps()[0];
        let b = BasisId::cap_pullback(&cx);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let v = CoeffVector::new(
            b,
            false,
            DVector::from_iterator(
                b.dim(),
                (0..b.dim())
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))),
            ),
        );
        let q = gauss_area_rule(2 * b.truncation, 4 * b.truncation);
        let norm2 = q
            .integrate_area(|u| {
                let fp = cap.eval_derivative(u);
                let mut phi = Complex64::ZERO;
                let mut upow = Complex64::ONE;
                for n in 1..=b.truncation {
                    phi += v.coeffs[n - 1] * (n as f64 / PI).sqrt() * upow / fp;
                    upow *= u;
                }
                phi * phi.conj() * fp.norm_sqr()
            })
            .re;
        assert!(
            (norm2 - v.norm().powi(2)).abs() < 1e-8,
            "{norm2} vs {}",
            v.norm().powi(2)
        );
    }

    #[test]
    fn period_additivity_of_exact_forms() {
        // dz/((z-p0)(z-p1)) is exact on Sigma_2 with opposite residues at the
        // punctures: per-curve periods are nonzero but their sum cancels
        let spec = ComplexSpec {
            caps: vec![
                ComplexSpec::cap(Complex64::new(-1.2, 0.0), &[r(0.4), r(0.05)]),
                ComplexSpec::cap(
                    Complex64::new(1.2, 0.1),
                    &[r(0.35), Complex64::new(0.0, -0.04)],
                ),
            ],
            truncation: 8,
            samples: 1024,
        };
        let cx = build_complex(&spec).unwrap();
        let p = cx.punctures();
        let form = |z: Complex64| Complex64::ONE / ((z - p[0]) * (z - p[1]));
        let mut total = Complex64::ZERO;
        let mut max_single: f64 = 0.0;
        for k in 0..2 {
            let bf = restrict_sampled(&cx, k, 16, false, form).unwrap();
            total += bf.period();
            max_single = max_single.max(bf.period().norm());
        }
        assert!(max_single > 1.0, "per-curve periods should be nonzero");
        assert!(total.norm() < 1e-10, "sum of periods {total}");
    }

    #[test]
    fn side_swap_flips_period() {
        let cx = unit_disk_complex(4);
        let bf = restrict_sampled(&cx, 0, 8, false, |z| Complex64::ONE / z).unwrap();
        assert!((bf.period() - Complex64::new(0.0, 2.0 * PI)).norm() < 1e-12);
        assert_eq!(
            bf.period_from_side(Side::Complement),
            -bf.period_from_side(Side::Caps)
        );
    }

    #[test]
    fn aliasing_detector_fires() {
        let m = 64;
        let samples: Vec<Complex64> = (0..m)
            .map(|j| {
                let th = 2.0 * PI * j as f64 / m as f64;
                Complex64::from_polar(1.0, 31.0 * th)
            })
            .collect();
        assert!(matches!(
            fourier_modes(&samples, 8),
            Err(SpaceError::InsufficientSamples { .. })
        ));
    }
}
