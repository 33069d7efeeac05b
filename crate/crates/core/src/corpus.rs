//! Deterministic cap-complex corpora for property tests, refinement ladders,
//! and conformal-invariance checks.

use num_complex::Complex64;
use rand::Rng;

use crate::capmap::{build_complex, point_in_polygon, CapComplex, CapSpec, ComplexSpec, Mobius};
use crate::error::CapError;

pub fn circle_spec(truncation: usize, samples: usize) -> ComplexSpec {
    ComplexSpec {
        caps: vec![ComplexSpec::cap(Complex64::ZERO, &[Complex64::ONE])],
        truncation,
        samples,
    }
}

pub fn quadratic_spec(t: f64, truncation: usize, samples: usize) -> ComplexSpec {
    ComplexSpec {
        caps: vec![ComplexSpec::cap(
            Complex64::ZERO,
            &[Complex64::ONE, Complex64::new(t, 0.0)],
        )],
        truncation,
        samples,
    }
}

/// The circle cap of radius r together with the exterior cap |z| > 1: the
/// complement is the annulus r < |z| < 1.
pub fn annulus_spec(r: f64, truncation: usize, samples: usize) -> ComplexSpec {
    ComplexSpec {
        caps: vec![
            ComplexSpec::cap(Complex64::ZERO, &[Complex64::new(r, 0.0)]),
            CapSpec {
                center: [0.0, 0.0],
                coeffs: vec![[1.0, 0.0]],
                at_infinity: true,
            },
        ],
        truncation,
        samples,
    }
}

/// Random coefficients a_k with |a_k| <= bound / k^2 for k = 2..=degree.
/// Magnitudes are drawn away from zero so the maps stay genuinely non-trivial.
pub fn random_cap_coeffs(rng: &mut impl Rng, degree: usize, bound: f64) -> Vec<Complex64> {
    let mut coeffs = vec![Complex64::ONE];
    for k in 2..=degree {
        let mag = rng.gen_range(0.4..1.0) * bound / ((k * k) as f64);
        let phase = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
        coeffs.push(Complex64::from_polar(mag, phase));
    }
    coeffs
}

/// Single rich cap: slowly decaying coefficients keep the truncation tail of
/// the operators resolvable on the whole refinement ladder.
pub fn rich_single_spec(rng: &mut impl Rng, truncation: usize, samples: usize) -> ComplexSpec {
    ComplexSpec {
        caps: vec![ComplexSpec::cap(
            Complex64::ZERO,
            &random_cap_coeffs(rng, 10, 0.2),
        )],
        truncation,
        samples,
    }
}

/// Two well-separated caps. The cap maps carry full-strength rich
/// coefficients behind an overall scale: Grunsky content is scale invariant,
/// so the truncation tails stay resolvable while the caps stay disjoint.
pub fn two_cap_spec(rng: &mut impl Rng, truncation: usize, samples: usize) -> ComplexSpec {
    let mut c1 = random_cap_coeffs(rng, 10, 0.2);
    let mut c2 = random_cap_coeffs(rng, 10, 0.2);
    for c in c1.iter_mut() {
        *c *= Complex64::new(0.5, 0.0);
    }
    for c in c2.iter_mut() {
        *c *= Complex64::new(0.45, 0.0);
    }
    ComplexSpec {
        caps: vec![
            ComplexSpec::cap(Complex64::new(-1.1, 0.0), &c1),
            ComplexSpec::cap(Complex64::new(1.1, 0.15), &c2),
        ],
        truncation,
        samples,
    }
}

/// Two mild caps whose operator tails are negligible at desk truncations;
/// used by invariance checks that compare truncated spectra across charts.
pub fn gentle_two_cap_spec(rng: &mut impl Rng, truncation: usize, samples: usize) -> ComplexSpec {
    let scale = |coeffs: Vec<Complex64>, s: f64| -> Vec<Complex64> {
        coeffs
            .into_iter()
            .map(|c| c * Complex64::new(s, 0.0))
            .collect()
    };
    let c1 = scale(random_cap_coeffs(rng, 5, 0.12), 0.5);
    let c2 = scale(random_cap_coeffs(rng, 5, 0.12), 0.45);
    ComplexSpec {
        caps: vec![
            ComplexSpec::cap(Complex64::new(-1.1, 0.0), &c1),
            ComplexSpec::cap(Complex64::new(1.1, 0.15), &c2),
        ],
        truncation,
        samples,
    }
}

/// Three caps near the cube roots of unity with rich maps behind an overall
/// scale.
pub fn three_cap_spec(rng: &mut impl Rng, truncation: usize, samples: usize) -> ComplexSpec {
    let caps = (0..3)
        .map(|j| {
            let angle = 2.0 * std::f64::consts::PI * j as f64 / 3.0;
            let center = Complex64::from_polar(1.6, angle + rng.gen_range(-0.05..0.05));
            let scale = Complex64::new(rng.gen_range(0.38..0.45), 0.0);
            let coeffs: Vec<Complex64> = random_cap_coeffs(rng, 10, 0.2)
                .into_iter()
                .map(|c| c * scale)
                .collect();
            ComplexSpec::cap(center, &coeffs)
        })
        .collect();
    ComplexSpec {
        caps,
        truncation,
        samples,
    }
}

/// The corpus of validated complexes the refinement-ladder checks run over.
pub fn ladder_corpus(
    rng: &mut impl Rng,
    truncation: usize,
    samples: usize,
) -> Vec<(String, ComplexSpec)> {
    vec![
        (
            "rich-single".into(),
            rich_single_spec(rng, truncation, samples),
        ),
        ("two-cap".into(), two_cap_spec(rng, truncation, samples)),
        ("three-cap".into(), three_cap_spec(rng, truncation, samples)),
    ]
}

/// A random sphere Mobius map safe for the complex: its pole is placed in
/// the complement with a margin, composed with a mild random affine map.
pub fn random_mobius(rng: &mut impl Rng, complex: &CapComplex) -> Mobius {
    let polygons: Vec<&[Complex64]> = complex.caps().iter().map(|c| c.polygon()).collect();
    let all: Vec<Complex64> = polygons.iter().flat_map(|p| p.iter().copied()).collect();
    let scale = all.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let pole = loop {
        let candidate = Complex64::new(
            rng.gen_range(-2.0 * scale..2.0 * scale),
            rng.gen_range(-2.0 * scale..2.0 * scale),
        );
        if polygons.iter().any(|p| point_in_polygon(p, candidate)) {
            continue;
        }
        let dist = all
            .iter()
            .map(|z| (z - candidate).norm())
            .fold(f64::INFINITY, f64::min);
        if dist > 0.4 * scale {
            break candidate;
        }
    };
    let inv = Mobius::inversion_about(pole);
    // post-compose with a z -> a z + b
    let a = Complex64::from_polar(rng.gen_range(0.5..2.0), rng.gen_range(0.0..6.28));
    let b = Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
    Mobius {
        a: a * inv.a + b * inv.c,
        b: a * inv.b + b * inv.d,
        c: inv.c,
        d: inv.d,
    }
}

/// Post-compose every cap of a validated complex with a Mobius map and
/// rebuild. The conformally transported complex has cap maps m(f_k), given
/// by their (decaying) series coefficients in the new chart.
pub fn mobius_transformed(
    complex: &CapComplex,
    mobius: &Mobius,
    samples: usize,
) -> Result<CapComplex, CapError> {
    let mut work: i64 = 128;
    let spec = loop {
        let mut caps = Vec::with_capacity(complex.n_caps());
        let mut tail_ok = true;
        for cap in complex.caps() {
            let s = mobius.apply_to_series(cap.series(), false, work)?;
            let coeffs = s.coeffs();
            let max_all = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
            let tail = coeffs
                .iter()
                .rev()
                .take(8)
                .map(|c| c.norm())
                .fold(0.0, f64::max);
            if max_all > 0.0 && tail > 1e-13 * max_all {
                tail_ok = false;
            }
            let center = s.coeff(0);
            let rest: Vec<Complex64> = (1..work).map(|e| s.coeff(e)).collect();
            caps.push(ComplexSpec::cap(center, &rest));
        }
        if tail_ok {
            break ComplexSpec {
                caps,
                truncation: complex.truncation(),
                samples,
            };
        }
        work *= 2;
        if work > 4096 {
            return Err(CapError::Normalization(
                "Mobius image series does not decay".into(),
            ));
        }
    };
    build_complex(&spec)
}
