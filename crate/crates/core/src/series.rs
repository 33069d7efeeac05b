//! Truncated power/Laurent series arithmetic with pessimistic truncation
//! propagation: an operation never reports a coefficient that could be
//! contaminated by an operand's unknown tail.

use num_complex::Complex64;

use crate::error::SeriesError;

/// A dense window of complex coefficients for exponents `lo..trunc`.
///
/// `trunc = None` means the series is exact: the stored window is the whole
/// support and nothing has been discarded. All exponents below `lo` are known
/// to be zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries {
    lo: i64,
    coeffs: Vec<Complex64>,
    trunc: Option<i64>,
}

const TRIM_EPS: f64 = 0.0; // exact-zero trimming only; rounding noise is data

fn is_zero(c: Complex64) -> bool {
    c.re.abs() <= TRIM_EPS && c.im.abs() <= TRIM_EPS
}

fn min_trunc(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (Some(x), None) | (None, Some(x)) => Some(x),
        (None, None) => None,
    }
}

impl TruncatedSeries {
    /// Exact series from coefficients for exponents `lo, lo+1, ...`.
    pub fn exact(lo: i64, coeffs: Vec<Complex64>) -> Self {
        Self {
            lo,
            coeffs,
            trunc: None,
        }
        .normalized()
    }

    /// Series with a finite truncation: coefficients at exponents >= `trunc`
    /// are unknown. Pads or cuts the window so that `len = trunc - lo`.
    pub fn with_trunc(lo: i64, mut coeffs: Vec<Complex64>, trunc: i64) -> Self {
        let len = (trunc - lo).max(0) as usize;
        coeffs.resize(len, Complex64::ZERO);
        Self {
            lo,
            coeffs,
            trunc: Some(trunc),
        }
        .normalized()
    }

    pub fn zero() -> Self {
        Self::exact(0, vec![])
    }

    pub fn constant(c: Complex64) -> Self {
        Self::exact(0, vec![c])
    }

    /// The identity series z.
    pub fn identity() -> Self {
        Self::exact(1, vec![Complex64::ONE])
    }

    pub fn monomial(c: Complex64, e: i64) -> Self {
        Self::exact(e, vec![c])
    }

    fn normalized(mut self) -> Self {
        // strip known-zero leading coefficients (window stays dense)
        let lead = self.coeffs.iter().take_while(|c| is_zero(**c)).count();
        if lead > 0 {
            self.coeffs.drain(..lead);
            self.lo += lead as i64;
        }
        if self.trunc.is_none() {
            while self.coeffs.last().is_some_and(|c| is_zero(*c)) {
                self.coeffs.pop();
            }
        }
        if self.coeffs.is_empty() {
            self.lo = self.trunc.unwrap_or(0);
        }
        self
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn trunc(&self) -> Option<i64> {
        self.trunc
    }

    pub fn is_exact(&self) -> bool {
        self.trunc.is_none()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| is_zero(*c))
    }

    /// Known coefficient at exponent `e`; `None` if `e` lies at or beyond the
    /// truncation exponent.
    pub fn known_coeff(&self, e: i64) -> Option<Complex64> {
        if let Some(t) = self.trunc {
            if e >= t {
                return None;
            }
        }
        if e < self.lo {
            return Some(Complex64::ZERO);
        }
        Some(
            self.coeffs
                .get((e - self.lo) as usize)
                .copied()
                .unwrap_or(Complex64::ZERO),
        )
    }

    /// Coefficient at `e`, treating unknown tail entries as zero.
    pub fn coeff(&self, e: i64) -> Complex64 {
        self.known_coeff(e).unwrap_or(Complex64::ZERO)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Discard all coefficients at exponents >= `t`.
    pub fn truncate(&self, t: i64) -> Self {
        let new_trunc = match self.trunc {
            Some(old) => old.min(t),
            None => t,
        };
        let keep = ((new_trunc - self.lo).max(0) as usize).min(self.coeffs.len());
        Self {
            lo: self.lo,
            coeffs: self.coeffs[..keep].to_vec(),
            trunc: Some(new_trunc),
        }
        .normalized()
    }

    pub fn neg(&self) -> Self {
        Self {
            lo: self.lo,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
            trunc: self.trunc,
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            lo: self.lo,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
            trunc: self.trunc,
        }
        .normalized()
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.is_zero() && self.is_exact() {
            return other.clone();
        }
        if other.is_zero() && other.is_exact() {
            return self.clone();
        }
        let trunc = min_trunc(self.trunc, other.trunc);
        let lo = self.lo.min(other.lo);
        let hi_known = |s: &Self| s.trunc.unwrap_or(s.lo + s.coeffs.len() as i64);
        let hi = match trunc {
            Some(t) => t,
            None => hi_known(self).max(hi_known(other)),
        };
        let mut coeffs = vec![Complex64::ZERO; (hi - lo).max(0) as usize];
        for (i, c) in coeffs.iter_mut().enumerate() {
            let e = lo + i as i64;
            *c = self.coeff(e) + other.coeff(e);
        }
        Self { lo, coeffs, trunc }.normalized()
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// Cauchy product. Truncation follows the min rule:
    /// `trunc = min(a.lo + b.trunc, b.lo + a.trunc)`.
    pub fn mul(&self, other: &Self) -> Self {
        if (self.is_zero() && self.is_exact()) || (other.is_zero() && other.is_exact()) {
            return Self::zero();
        }
        let trunc = min_trunc(
            self.trunc.map(|t| t + other.lo),
            other.trunc.map(|t| t + self.lo),
        );
        let lo = self.lo + other.lo;
        let full_len = self.coeffs.len() + other.coeffs.len();
        let len = match trunc {
            Some(t) => ((t - lo).max(0) as usize).min(full_len.saturating_sub(1)),
            None => full_len.saturating_sub(1),
        };
        let mut coeffs = vec![Complex64::ZERO; len];
        for (i, a) in self.coeffs.iter().enumerate() {
            if is_zero(*a) {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if i + j >= len {
                    break;
                }
                coeffs[i + j] += a * b;
            }
        }
        Self { lo, coeffs, trunc }.normalized()
    }

    /// Long division `self / other`.
    ///
    /// If both operands are exact the quotient is only representable when the
    /// divisor is a monomial; otherwise `UnboundedResult` is returned and the
    /// caller must truncate an operand to its working precision first.
    pub fn div(&self, other: &Self) -> Result<Self, SeriesError> {
        let d_lead = other
            .coeffs
            .iter()
            .position(|c| !is_zero(*c))
            .ok_or(SeriesError::DivisionByZero)?;
        let d_lo = other.lo + d_lead as i64;
        let lead = other.coeffs[d_lead];
        if self.is_zero() && self.is_exact() {
            return Ok(Self::zero());
        }
        let rel_self = self.trunc.map(|t| t - self.lo);
        let rel_other = other.trunc.map(|t| t - d_lo);
        let rel = match min_trunc(rel_self, rel_other) {
            Some(r) => r,
            None => {
                // exact / exact: only a monomial divisor divides exactly
                if other.coeffs[d_lead..].iter().skip(1).any(|c| !is_zero(*c)) {
                    return Err(SeriesError::UnboundedResult);
                }
                let lo = self.lo - d_lo;
                let coeffs = self.coeffs.iter().map(|c| c / lead).collect();
                return Ok(Self {
                    lo,
                    coeffs,
                    trunc: None,
                }
                .normalized());
            }
        };
        if rel <= 0 {
            return Err(SeriesError::EmptyWindow);
        }
        let lo = self.lo - d_lo;
        let n = rel as usize;
        let mut q = vec![Complex64::ZERO; n];
        let mut r: Vec<Complex64> = (0..n).map(|i| self.coeff(self.lo + i as i64)).collect();
        for k in 0..n {
            let qk = r[k] / lead;
            q[k] = qk;
            if is_zero(qk) {
                continue;
            }
            for j in 1..n - k {
                let d = other.coeff(d_lo + j as i64);
                if !is_zero(d) {
                    r[k + j] -= qk * d;
                }
            }
        }
        Ok(Self {
            lo,
            coeffs: q,
            trunc: Some(lo + rel),
        }
        .normalized())
    }

    /// Termwise derivative d/dz.
    pub fn derivative(&self) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for (i, c) in self.coeffs.iter().enumerate() {
            let e = self.lo + i as i64;
            coeffs.push(c * Complex64::new(e as f64, 0.0));
        }
        Self {
            lo: self.lo - 1,
            coeffs,
            trunc: self.trunc.map(|t| t - 1),
        }
        .normalized()
    }

    /// Antiderivative with zero constant term. Errors if a z^{-1} term is
    /// present (a log would be required).
    pub fn integrate(&self) -> Result<Self, SeriesError> {
        if !is_zero(self.coeff(-1)) {
            return Err(SeriesError::NonzeroConstantTerm);
        }
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for (i, c) in self.coeffs.iter().enumerate() {
            let e = self.lo + i as i64;
            if e == -1 {
                coeffs.push(Complex64::ZERO);
            } else {
                coeffs.push(c / Complex64::new((e + 1) as f64, 0.0));
            }
        }
        Ok(Self {
            lo: self.lo + 1,
            coeffs,
            trunc: self.trunc.map(|t| t + 1),
        }
        .normalized())
    }

    /// Horner-style composition `outer(inner)`.
    ///
    /// Preconditions: `outer` is a power series (`lo >= 0`) and `inner` has a
    /// zero constant term (unless `outer` is constant).
    pub fn compose(outer: &Self, inner: &Self) -> Result<Self, SeriesError> {
        if outer.coeffs.len() <= 1 && outer.lo == 0 {
            return Ok(Self::exact(0, outer.coeffs.clone()));
        }
        if outer.lo < 0
            || (!inner.is_zero() && inner.lo < 1)
            || (inner.is_zero() && !inner.is_exact() && inner.trunc.unwrap_or(1) < 1)
        {
            return Err(SeriesError::CompositionPrecondition);
        }
        if inner.is_zero() {
            return Ok(Self::exact(0, vec![outer.coeff(0)]));
        }
        let top = outer.trunc.unwrap_or(outer.lo + outer.coeffs.len() as i64);
        let mut acc = Self::zero();
        for e in (0..top).rev() {
            acc = acc.mul(inner);
            let c = outer.coeff(e);
            if !is_zero(c) {
                acc = acc.add(&Self::constant(c));
            }
        }
        // unknown outer tail starts contributing at exponent top * inner.lo
        if let Some(t_o) = outer.trunc {
            acc = acc.truncate_opt(Some(t_o * inner.lo));
        }
        Ok(acc)
    }

    fn truncate_opt(&self, t: Option<i64>) -> Self {
        match t {
            Some(t) => self.truncate(t),
            None => self.clone(),
        }
    }

    /// log(1 + a) for a series with zero constant term, via integration of
    /// a' / (1 + a).
    pub fn log1p(a: &Self) -> Result<Self, SeriesError> {
        if !is_zero(a.coeff(0)) || a.lo < 0 {
            return Err(SeriesError::NonzeroConstantTerm);
        }
        if a.is_zero() {
            return Ok(Self::zero());
        }
        if a.is_exact() {
            return Err(SeriesError::UnboundedResult);
        }
        let one_plus = Self::constant(Complex64::ONE).add(a);
        a.derivative().div(&one_plus)?.integrate()
    }

    /// exp(a) for a series with zero constant term, via Newton's identity
    /// exp(a)' = a' exp(a) solved coefficient by coefficient.
    pub fn exp(a: &Self) -> Result<Self, SeriesError> {
        if !is_zero(a.coeff(0)) || a.lo < 0 {
            return Err(SeriesError::NonzeroConstantTerm);
        }
        if a.is_zero() {
            return Ok(Self::constant(Complex64::ONE));
        }
        let t = match a.trunc {
            Some(t) => t,
            None => return Err(SeriesError::UnboundedResult),
        };
        let n = t.max(1) as usize;
        // e[m] = (1/m) * sum_{j=1..m} j a[j] e[m-j]
        let mut e = vec![Complex64::ZERO; n];
        e[0] = Complex64::ONE;
        for m in 1..n {
            let mut s = Complex64::ZERO;
            for j in 1..=m {
                let aj = a.coeff(j as i64);
                if !is_zero(aj) {
                    s += Complex64::new(j as f64, 0.0) * aj * e[m - j];
                }
            }
            e[m] = s / Complex64::new(m as f64, 0.0);
        }
        Ok(Self {
            lo: 0,
            coeffs: e,
            trunc: Some(t),
        }
        .normalized())
    }

    /// Compositional inverse: g with f(g(z)) = z to the available truncation.
    ///
    /// Requires f(0) = 0 and f'(0) != 0. A non-linear exact f must be
    /// truncated first (its inverse is an infinite series).
    pub fn reversion(f: &Self) -> Result<Self, SeriesError> {
        if f.lo != 1 || is_zero(f.coeff(1)) {
            return Err(SeriesError::VanishingLinearCoefficient);
        }
        let a1 = f.coeff(1);
        let target = match f.trunc {
            Some(t) => t,
            None => {
                if f.coeffs.len() == 1 {
                    return Ok(Self::exact(1, vec![Complex64::ONE / a1]));
                }
                return Err(SeriesError::UnboundedResult);
            }
        };
        let fp = f.derivative();
        let mut g = Self::with_trunc(1, vec![Complex64::ONE / a1], 2);
        let mut prec: i64 = 2;
        while prec < target {
            prec = (prec * 2).min(target);
            let g_ext = Self {
                lo: g.lo,
                coeffs: g.coeffs.clone(),
                trunc: Some(g.lo + g.coeffs.len() as i64),
            };
            let g_ext = Self::with_trunc(
                g_ext.lo,
                {
                    let mut c = g_ext.coeffs;
                    c.resize((prec - g_ext.lo) as usize, Complex64::ZERO);
                    c
                },
                prec,
            );
            let f_trunc = f.truncate(prec);
            let fp_trunc = fp.truncate(prec);
            let resid = Self::compose(&f_trunc, &g_ext)?.sub(&Self::identity());
            let denom = Self::compose(&fp_trunc, &g_ext)?;
            let update = resid.truncate(prec).div(&denom.truncate(prec))?;
            g = g_ext.sub(&update).truncate(prec);
        }
        Ok(g.truncate(target))
    }

    /// Horner evaluation at a point (includes the z^lo prefactor).
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::ZERO;
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        match self.lo.cmp(&0) {
            std::cmp::Ordering::Equal => acc,
            std::cmp::Ordering::Greater => acc * z.powi(self.lo as i32),
            std::cmp::Ordering::Less => acc / z.powi((-self.lo) as i32),
        }
    }
}
