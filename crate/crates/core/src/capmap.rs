//! Geometry layer: univalent cap maps, the separating complex, curve
//! parametrizations and quadrature rules.
//!
//! Each curve Gamma_k = f_k(S^1) is parametrized by theta -> f_k(e^{i theta}),
//! which is automatically positively oriented with respect to the cap.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::CapError;
use crate::series::TruncatedSeries;

/// JSON cap specification. Field names are part of the external interface:
/// `{"caps":[{"center":[re,im],"coeffs":[[re,im],...],"at_infinity":bool}],
///   "truncation":N,"samples":M}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComplexSpec {
    pub caps: Vec<CapSpec>,
    pub truncation: usize,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CapSpec {
    pub center: [f64; 2],
    pub coeffs: Vec<[f64; 2]>,
    #[serde(default)]
    pub at_infinity: bool,
}

impl ComplexSpec {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn cap(center: Complex64, coeffs: &[Complex64]) -> CapSpec {
        CapSpec {
            center: [center.re, center.im],
            coeffs: coeffs.iter().map(|c| [c.re, c.im]).collect(),
            at_infinity: false,
        }
    }
}

/// A Mobius transformation (az + b)/(cz + d).
#[derive(Debug, Clone, Copy)]
pub struct Mobius {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl Mobius {
    pub fn identity() -> Self {
        Self {
            a: Complex64::ONE,
            b: Complex64::ZERO,
            c: Complex64::ZERO,
            d: Complex64::ONE,
        }
    }

    /// z -> 1/(z - q), sending q to infinity and infinity to 0.
    pub fn inversion_about(q: Complex64) -> Self {
        Self {
            a: Complex64::ZERO,
            b: Complex64::ONE,
            c: Complex64::ONE,
            d: -q,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.c == Complex64::ZERO && self.b == Complex64::ZERO && self.a == self.d
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    /// Push a cap series through the transformation at working precision.
    /// `chart_at_infinity` means `series` is g in the chart zeta = 1/z and the
    /// actual map is 1/g; then m(1/g) = (a + b g)/(c + d g).
    pub fn apply_to_series(
        &self,
        series: &TruncatedSeries,
        chart_at_infinity: bool,
        work: i64,
    ) -> Result<TruncatedSeries, CapError> {
        let s = series.truncate(work);
        let (num, den) = if chart_at_infinity {
            (
                s.scale(self.b).add(&TruncatedSeries::constant(self.a)),
                s.scale(self.d).add(&TruncatedSeries::constant(self.c)),
            )
        } else {
            (
                s.scale(self.a).add(&TruncatedSeries::constant(self.b)),
                s.scale(self.c).add(&TruncatedSeries::constant(self.d)),
            )
        };
        Ok(num.div(&den)?)
    }
}

/// A validated univalent cap map in the working chart.
#[derive(Debug, Clone)]
pub struct CapMap {
    center: Complex64,
    series: TruncatedSeries,
    derivative: TruncatedSeries,
    polygon: Vec<Complex64>,
    max_abs_derivative: f64,
}

impl CapMap {
    /// f(z) = center + a_1 z + a_2 z^2 + ...
    pub fn series(&self) -> &TruncatedSeries {
        &self.series
    }

    pub fn derivative(&self) -> &TruncatedSeries {
        &self.derivative
    }

    /// The designated puncture p = f(0).
    pub fn center(&self) -> Complex64 {
        self.center
    }

    /// Cached boundary polygon f(e^{2 pi i j / M}).
    pub fn polygon(&self) -> &[Complex64] {
        &self.polygon
    }

    pub fn max_abs_derivative(&self) -> f64 {
        self.max_abs_derivative
    }

    pub fn eval(&self, u: Complex64) -> Complex64 {
        self.series.eval(u)
    }

    pub fn eval_derivative(&self, u: Complex64) -> Complex64 {
        self.derivative.eval(u)
    }
}

/// The separating complex: n validated caps with pairwise disjoint closures,
/// all bounded in the working chart.
#[derive(Debug, Clone)]
pub struct CapComplex {
    caps: Vec<CapMap>,
    truncation: usize,
    samples: usize,
    normalization: Mobius,
}

impl CapComplex {
    pub fn caps(&self) -> &[CapMap] {
        &self.caps
    }

    pub fn n_caps(&self) -> usize {
        self.caps.len()
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    /// The Mobius map that took the input configuration to the working chart
    /// (identity unless an at-infinity cap was present).
    pub fn normalization(&self) -> &Mobius {
        &self.normalization
    }

    pub fn punctures(&self) -> Vec<Complex64> {
        self.caps.iter().map(|c| c.center()).collect()
    }

    /// Boundary node f_k(e^{i theta_j}) together with e^{i theta_j} and
    /// f_k'(e^{i theta_j}) for all j, for curve k.
    pub fn curve_nodes(&self, k: usize, m: usize) -> Vec<(Complex64, Complex64, Complex64)> {
        let cap = &self.caps[k];
        (0..m)
            .map(|j| {
                let th = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
                let u = Complex64::from_polar(1.0, th);
                (u, cap.eval(u), cap.eval_derivative(u))
            })
            .collect()
    }
}

pub fn boundary_polygon(series: &TruncatedSeries, samples: usize) -> Vec<Complex64> {
    (0..samples)
        .map(|j| {
            let th = 2.0 * std::f64::consts::PI * j as f64 / samples as f64;
            series.eval(Complex64::from_polar(1.0, th))
        })
        .collect()
}

/// Build and validate a cap complex from a parsed specification.
///
/// An at-infinity cap (at most one) triggers Mobius normalization so that all
/// caps are bounded in the working chart; operators are conformally invariant
/// so reports do not depend on the chart.
pub fn build_complex(spec: &ComplexSpec) -> Result<CapComplex, CapError> {
    if spec.caps.is_empty() {
        return Err(CapError::Normalization("no caps given".into()));
    }
    if spec.truncation == 0 {
        return Err(CapError::Normalization("truncation must be >= 1".into()));
    }
    let samples = spec.samples.max(16);
    let inf_count = spec.caps.iter().filter(|c| c.at_infinity).count();
    if inf_count > 1 {
        return Err(CapError::Normalization(
            "at most one cap may be at infinity".into(),
        ));
    }

    let raw: Vec<TruncatedSeries> = spec
        .caps
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let center = Complex64::new(c.center[0], c.center[1]);
            if c.at_infinity && center != Complex64::ZERO {
                return Err(CapError::InvalidSpec {
                    cap: k,
                    detail: "an at-infinity cap must have chart center 0 (puncture at infinity)"
                        .into(),
                });
            }
            if c.coeffs.is_empty() || Complex64::new(c.coeffs[0][0], c.coeffs[0][1]).norm() == 0.0 {
                return Err(CapError::InvalidSpec {
                    cap: k,
                    detail: "leading coefficient a_1 must be nonzero".into(),
                });
            }
            let mut coeffs = vec![center];
            coeffs.extend(c.coeffs.iter().map(|[re, im]| Complex64::new(*re, *im)));
            Ok(TruncatedSeries::exact(0, coeffs))
        })
        .collect::<Result<_, _>>()?;

    let mobius = if inf_count == 1 {
        Mobius::inversion_about(pick_normalization_pole(spec, &raw, samples)?)
    } else {
        Mobius::identity()
    };

    let max_deg = raw
        .iter()
        .map(|s| s.coeffs().len() as i64)
        .max()
        .unwrap_or(1);
    let mut work = (2 * spec.truncation as i64 + max_deg + 16).max(64);
    let caps = loop {
        let mut caps = Vec::with_capacity(spec.caps.len());
        let mut tail_ok = true;
        for (k, c) in spec.caps.iter().enumerate() {
            let series = if mobius.is_identity() {
                raw[k].clone()
            } else {
                mobius.apply_to_series(&raw[k], c.at_infinity, work)?
            };
            if !series.is_exact() {
                let cs = series.coeffs();
                let max_all = cs.iter().map(|c| c.norm()).fold(0.0, f64::max);
                let tail = cs
                    .iter()
                    .rev()
                    .take(8)
                    .map(|c| c.norm())
                    .fold(0.0, f64::max);
                if max_all > 0.0 && tail > 1e-13 * max_all {
                    tail_ok = false;
                }
            }
            caps.push(series);
        }
        if tail_ok || work >= 4096 {
            if !tail_ok {
                return Err(CapError::Normalization(
                    "normalized cap series does not decay; configuration too close to the chart pole"
                        .into(),
                ));
            }
            break caps;
        }
        work *= 2;
    };

    let caps: Vec<CapMap> = caps
        .into_iter()
        .enumerate()
        .map(|(k, series)| validate_cap(k, series, samples))
        .collect::<Result<_, _>>()?;

    // pairwise separation: min polygon distance > 10 * (2 pi / M) * max |f'|
    for a in 0..caps.len() {
        for b in a + 1..caps.len() {
            let scale = caps[a]
                .max_abs_derivative()
                .max(caps[b].max_abs_derivative());
            let required = 10.0 * (2.0 * std::f64::consts::PI / samples as f64) * scale;
            let dist = polygon_distance(caps[a].polygon(), caps[b].polygon());
            if dist <= required {
                return Err(CapError::OverlapViolation {
                    a,
                    b,
                    dist,
                    required,
                });
            }
        }
    }

    Ok(CapComplex {
        caps,
        truncation: spec.truncation,
        samples,
        normalization: mobius,
    })
}

fn validate_cap(k: usize, series: TruncatedSeries, samples: usize) -> Result<CapMap, CapError> {
    let derivative = series.derivative();
    let mut min_d = f64::INFINITY;
    let mut max_d: f64 = 0.0;
    for j in 0..samples {
        let th = 2.0 * std::f64::consts::PI * j as f64 / samples as f64;
        let d = derivative.eval(Complex64::from_polar(1.0, th)).norm();
        min_d = min_d.min(d);
        max_d = max_d.max(d);
    }
    if min_d <= 1e-12 * max_d.max(1.0) {
        return Err(CapError::UnivalenceViolation {
            cap: k,
            detail: format!("|f'| vanishes on the boundary grid (min {min_d:.3e})"),
        });
    }
    let polygon = boundary_polygon(&series, samples);
    if polygon_self_intersects(&polygon) {
        return Err(CapError::UnivalenceViolation {
            cap: k,
            detail: "sampled boundary curve self-intersects".into(),
        });
    }
    let center = series.eval(Complex64::ZERO);
    let w = winding_number(&polygon, center);
    if (w - 1.0).abs() > 0.25 {
        return Err(CapError::UnivalenceViolation {
            cap: k,
            detail: format!("winding number about the center is {w:.3}, expected +1"),
        });
    }
    Ok(CapMap {
        center,
        series,
        derivative,
        polygon,
        max_abs_derivative: max_d,
    })
}

/// Discrete winding number of a closed polygon about p.
pub fn winding_number(polygon: &[Complex64], p: Complex64) -> f64 {
    let mut total = 0.0;
    let m = polygon.len();
    for j in 0..m {
        let a = polygon[j] - p;
        let b = polygon[(j + 1) % m] - p;
        total += (b / a).arg();
    }
    total / (2.0 * std::f64::consts::PI)
}

fn seg_intersects(p1: Complex64, p2: Complex64, q1: Complex64, q2: Complex64) -> bool {
    let cross = |a: Complex64, b: Complex64| a.re * b.im - a.im * b.re;
    let d1 = cross(p2 - p1, q1 - p1);
    let d2 = cross(p2 - p1, q2 - p1);
    let d3 = cross(q2 - q1, p1 - q1);
    let d4 = cross(q2 - q1, p2 - q1);
    (d1 * d2 < 0.0) && (d3 * d4 < 0.0)
}

fn polygon_self_intersects(polygon: &[Complex64]) -> bool {
    let m = polygon.len();
    for i in 0..m {
        let a1 = polygon[i];
        let a2 = polygon[(i + 1) % m];
        for j in i + 2..m {
            if i == 0 && j == m - 1 {
                continue; // adjacent through the wraparound
            }
            if seg_intersects(a1, a2, polygon[j], polygon[(j + 1) % m]) {
                return true;
            }
        }
    }
    false
}

fn point_segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a).re * ab.re + (p - a).im * ab.im) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

pub fn polygon_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut best = f64::INFINITY;
    let m = a.len();
    let n = b.len();
    for i in 0..m {
        let (a1, a2) = (a[i], a[(i + 1) % m]);
        for j in 0..n {
            let d = point_segment_distance(b[j], a1, a2).min(point_segment_distance(
                a[i],
                b[j],
                b[(j + 1) % n],
            ));
            if d < best {
                best = d;
            }
        }
    }
    best
}

pub fn point_in_polygon(polygon: &[Complex64], p: Complex64) -> bool {
    winding_number(polygon, p).abs() > 0.5
}

fn pick_normalization_pole(
    spec: &ComplexSpec,
    raw: &[TruncatedSeries],
    samples: usize,
) -> Result<Complex64, CapError> {
    // polygons in the input chart; for the at-infinity cap this is the hole
    // boundary 1/g(S^1)
    let mut finite_polys = Vec::new();
    let mut hole_poly = None;
    for (k, c) in spec.caps.iter().enumerate() {
        let poly = boundary_polygon(&raw[k], samples.min(512));
        if c.at_infinity {
            let inv: Vec<Complex64> = poly
                .iter()
                .map(|z| {
                    if z.norm() == 0.0 {
                        return Err(CapError::InvalidSpec {
                            cap: k,
                            detail: "at-infinity chart curve passes through 0".into(),
                        });
                    }
                    Ok(Complex64::ONE / z)
                })
                .collect::<Result<_, _>>()?;
            hole_poly = Some(inv);
        } else {
            finite_polys.push(poly);
        }
    }
    let hole = hole_poly.expect("called only with an at-infinity cap");
    let (mut lo_re, mut hi_re) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut lo_im, mut hi_im) = (f64::INFINITY, f64::NEG_INFINITY);
    for z in &hole {
        lo_re = lo_re.min(z.re);
        hi_re = hi_re.max(z.re);
        lo_im = lo_im.min(z.im);
        hi_im = hi_im.max(z.im);
    }
    let mut best = None;
    let grid = 24;
    for i in 1..grid {
        for j in 1..grid {
            let p = Complex64::new(
                lo_re + (hi_re - lo_re) * i as f64 / grid as f64,
                lo_im + (hi_im - lo_im) * j as f64 / grid as f64,
            );
            if !point_in_polygon(&hole, p) {
                continue;
            }
            if finite_polys.iter().any(|poly| point_in_polygon(poly, p)) {
                continue;
            }
            let mut margin = hole
                .iter()
                .map(|z| (z - p).norm())
                .fold(f64::INFINITY, f64::min);
            for poly in &finite_polys {
                margin = margin.min(
                    poly.iter()
                        .map(|z| (z - p).norm())
                        .fold(f64::INFINITY, f64::min),
                );
            }
            if best.map_or(true, |(m, _)| margin > m) {
                best = Some((margin, p));
            }
        }
    }
    match best {
        Some((margin, p)) if margin > 1e-6 => Ok(p),
        _ => Err(CapError::Normalization(
            "could not place the chart pole inside the complement".into(),
        )),
    }
}

/// Tensor quadrature: Gauss-Legendre in r^2 times the trapezoid rule in the
/// angle. Exact for z^a zbar^b with a, b <= radial_order - 1 and
/// |a - b| < angular_order.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    area_nodes: Vec<(Complex64, f64)>,
    contour_nodes: Vec<(f64, f64)>,
}

impl QuadratureRule {
    pub fn area_nodes(&self) -> &[(Complex64, f64)] {
        &self.area_nodes
    }

    pub fn contour_nodes(&self) -> &[(f64, f64)] {
        &self.contour_nodes
    }

    pub fn integrate_area<F: FnMut(Complex64) -> Complex64>(&self, mut f: F) -> Complex64 {
        let mut s = Complex64::ZERO;
        for &(w, wt) in &self.area_nodes {
            s += f(w) * wt;
        }
        s
    }
}

pub fn gauss_area_rule(radial_order: usize, angular_order: usize) -> QuadratureRule {
    let radial_order = radial_order.max(1);
    let angular_order = angular_order.max(1);
    let (xs, ws) = gauss_legendre(radial_order);
    let mut area_nodes = Vec::with_capacity(radial_order * angular_order);
    for (&t, &wt) in xs.iter().zip(&ws) {
        // t in [0,1] is r^2; area element dA = (1/2) dt dtheta
        let r = ((t + 1.0) / 2.0).sqrt();
        let w_r = wt / 2.0; // combine the [-1,1] -> [0,1] Jacobian with the 1/2
        for j in 0..angular_order {
            let th = 2.0 * std::f64::consts::PI * j as f64 / angular_order as f64;
            let w = w_r / 2.0 * (2.0 * std::f64::consts::PI / angular_order as f64);
            area_nodes.push((Complex64::from_polar(r, th), w));
        }
    }
    let contour_nodes = (0..angular_order)
        .map(|j| {
            (
                2.0 * std::f64::consts::PI * j as f64 / angular_order as f64,
                2.0 * std::f64::consts::PI / angular_order as f64,
            )
        })
        .collect();
    QuadratureRule {
        area_nodes,
        contour_nodes,
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, x);
        xs[n - 1 - i] = x;
        ws[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (xs, ws)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}
