//! Exact arithmetic over the rationals: 2-adic valuations, polynomials,
//! resultants, discriminants, Newton polygons, and the pairwise
//! root-difference valuation oracle.
//!
//! Everything here is exact; no floating point.  Valuations are normalized so
//! that `v(2) = 1`, with `v(0) = +infinity` by convention.

use num::bigint::Sign;
use num::{BigInt, BigRational, One, Zero};
use std::cmp::Ordering;
use std::fmt;

pub type Rat = BigRational;

/// A rational number or `+infinity`; the value type of all valuations,
/// depths, and thicknesses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExtRat {
    Fin(Rat),
    Inf,
}

impl ExtRat {
    pub fn zero() -> Self {
        ExtRat::Fin(Rat::zero())
    }

    pub fn from_int(n: i64) -> Self {
        ExtRat::Fin(Rat::from_integer(BigInt::from(n)))
    }

    pub fn from_frac(n: i64, d: i64) -> Self {
        ExtRat::Fin(Rat::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn is_inf(&self) -> bool {
        matches!(self, ExtRat::Inf)
    }

    pub fn finite(&self) -> Option<&Rat> {
        match self {
            ExtRat::Fin(q) => Some(q),
            ExtRat::Inf => None,
        }
    }

    /// `q + infinity = infinity`; finite values add as rationals.
    pub fn add(&self, other: &ExtRat) -> ExtRat {
        match (self, other) {
            (ExtRat::Fin(a), ExtRat::Fin(b)) => ExtRat::Fin(a + b),
            _ => ExtRat::Inf,
        }
    }

    pub fn min_with(&self, other: &ExtRat) -> ExtRat {
        if self <= other {
            self.clone()
        } else {
            other.clone()
        }
    }
}

impl PartialOrd for ExtRat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtRat {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtRat::Inf, ExtRat::Inf) => Ordering::Equal,
            (ExtRat::Inf, ExtRat::Fin(_)) => Ordering::Greater,
            (ExtRat::Fin(_), ExtRat::Inf) => Ordering::Less,
            (ExtRat::Fin(a), ExtRat::Fin(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for ExtRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtRat::Inf => write!(f, "inf"),
            ExtRat::Fin(q) => {
                if q.is_integer() {
                    write!(f, "{}", q.numer())
                } else {
                    write!(f, "{}/{}", q.numer(), q.denom())
                }
            }
        }
    }
}

/// 2-adic valuation of an integer; `None` for zero.
pub fn val2_int(n: &BigInt) -> Option<u64> {
    if n.is_zero() {
        return None;
    }
    Some(n.trailing_zeros().unwrap_or(0))
}

/// 2-adic valuation with `v(2) = 1` and `v(0) = +infinity`.
pub fn val2(q: &Rat) -> ExtRat {
    if q.is_zero() {
        return ExtRat::Inf;
    }
    let vn = val2_int(q.numer()).unwrap() as i64;
    let vd = val2_int(q.denom()).unwrap() as i64;
    ExtRat::Fin(Rat::from_integer(BigInt::from(vn - vd)))
}

fn rat_i64(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Polynomial with exact rational coefficients, index = degree of monomial.
/// The coefficient vector is kept trimmed: the leading coefficient is
/// nonzero unless the polynomial is zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatPoly {
    coeffs: Vec<Rat>,
}

impl RatPoly {
    pub fn new(mut coeffs: Vec<Rat>) -> Self {
        while coeffs.last().map(|c| c.is_zero()).unwrap_or(false) {
            coeffs.pop();
        }
        RatPoly { coeffs }
    }

    pub fn zero() -> Self {
        RatPoly { coeffs: vec![] }
    }

    pub fn from_ints(cs: &[i64]) -> Self {
        RatPoly::new(cs.iter().map(|&c| Rat::from_integer(BigInt::from(c))).collect())
    }

    pub fn monomial(coeff: Rat, deg: usize) -> Self {
        let mut cs = vec![Rat::zero(); deg + 1];
        cs[deg] = coeff;
        RatPoly::new(cs)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn coeff(&self, i: usize) -> Rat {
        self.coeffs.get(i).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn lc(&self) -> Rat {
        self.coeffs.last().cloned().unwrap_or_else(Rat::zero)
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        let mut acc = Rat::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn derivative(&self) -> RatPoly {
        if self.coeffs.len() <= 1 {
            return RatPoly::zero();
        }
        RatPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * Rat::from_integer(BigInt::from(i)))
                .collect(),
        )
    }

    pub fn add(&self, other: &RatPoly) -> RatPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut cs = vec![Rat::zero(); n];
        for (i, c) in self.coeffs.iter().enumerate() {
            cs[i] += c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            cs[i] += c;
        }
        RatPoly::new(cs)
    }

    pub fn scale(&self, k: &Rat) -> RatPoly {
        RatPoly::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn mul(&self, other: &RatPoly) -> RatPoly {
        if self.is_zero() || other.is_zero() {
            return RatPoly::zero();
        }
        let mut cs = vec![Rat::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                cs[i + j] += a * b;
            }
        }
        RatPoly::new(cs)
    }

    /// `P(x + a)`.
    pub fn translate(&self, a: &Rat) -> RatPoly {
        let mut out = RatPoly::zero();
        let shift = RatPoly::new(vec![a.clone(), Rat::one()]);
        for c in self.coeffs.iter().rev() {
            out = out.mul(&shift);
            out = out.add(&RatPoly::new(vec![c.clone()]));
        }
        out
    }
}

/// Resultant with the convention `Res(P, Q) = lc(P)^deg(Q) * prod Q(a_i)`
/// over the roots `a_i` of `P` with multiplicity.  This equals the
/// determinant of the Sylvester matrix whose first `deg Q` rows carry the
/// coefficients of `P` and last `deg P` rows carry those of `Q`.
pub fn resultant(p: &RatPoly, q: &RatPoly) -> Rat {
    let dp = p.degree().expect("resultant: P nonzero");
    let dq = q.degree().expect("resultant: Q nonzero");
    if dp == 0 {
        // No roots: empty product times lc(P)^dq.
        return pow_rat(&p.lc(), dq as u32);
    }
    if dq == 0 {
        return pow_rat(&q.lc(), dp as u32);
    }
    let n = dp + dq;
    // Sylvester matrix, rows: dq shifted copies of P, dp shifted copies of Q.
    let mut m = vec![vec![Rat::zero(); n]; n];
    for r in 0..dq {
        for i in 0..=dp {
            m[r][r + i] = p.coeff(dp - i);
        }
    }
    for r in 0..dp {
        for i in 0..=dq {
            m[dq + r][r + i] = q.coeff(dq - i);
        }
    }
    det_rat(m)
}

fn pow_rat(b: &Rat, e: u32) -> Rat {
    let mut acc = Rat::one();
    for _ in 0..e {
        acc *= b;
    }
    acc
}

/// Exact determinant: clear denominators per row, then fraction-free Bareiss
/// over the integers.
fn det_rat(m: Vec<Vec<Rat>>) -> Rat {
    let n = m.len();
    if n == 0 {
        return Rat::one();
    }
    let mut denom = BigInt::one();
    let mut a: Vec<Vec<BigInt>> = Vec::with_capacity(n);
    for row in m {
        let mut d = BigInt::one();
        for c in &row {
            d = num::integer::lcm(d, c.denom().clone());
        }
        denom *= &d;
        a.push(row.into_iter().map(|c| c.numer() * (&d / c.denom())).collect());
    }
    let det = det_bareiss(&mut a);
    Rat::new(det, denom)
}

fn det_bareiss(a: &mut [Vec<BigInt>]) -> BigInt {
    let n = a.len();
    let mut sign = 1i32;
    let mut prev = BigInt::one();
    for k in 0..n {
        if a[k][k].is_zero() {
            let mut found = false;
            for r in k + 1..n {
                if !a[r][k].is_zero() {
                    a.swap(k, r);
                    sign = -sign;
                    found = true;
                    break;
                }
            }
            if !found {
                return BigInt::zero();
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = a[k][k].clone();
    }
    let d = a[n - 1][n - 1].clone();
    if sign < 0 {
        -d
    } else {
        d
    }
}

/// Standard discriminant: `disc(P) = (-1)^(n(n-1)/2) Res(P, P') / lc(P)`,
/// zero iff `P` has a repeated root.
pub fn discriminant(p: &RatPoly) -> Rat {
    let n = p.degree().expect("discriminant: nonzero input");
    assert!(n >= 2, "discriminant needs degree >= 2");
    let r = resultant(p, &p.derivative());
    let sign = if (n * (n - 1) / 2) % 2 == 0 { 1 } else { -1 };
    r / p.lc() * Rat::from_integer(BigInt::from(sign))
}

/// One segment of a Newton polygon.  Root valuation = `-slope`;
/// `len` roots of that valuation in an algebraic closure of the 2-adics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NpSegment {
    pub slope: Rat,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NewtonPolygon {
    pub segments: Vec<NpSegment>,
    /// Number of roots equal to zero (trailing zero coefficients).
    pub zero_roots: usize,
}

impl NewtonPolygon {
    /// Multiset of root valuations (nonzero roots only), ascending.
    pub fn root_valuations(&self) -> Vec<(Rat, usize)> {
        let mut v: Vec<(Rat, usize)> = self
            .segments
            .iter()
            .map(|s| (-s.slope.clone(), s.len))
            .collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v
    }
}

/// Lower convex hull of `(i, v2(coeff_i))`; slopes strictly increasing.
pub fn newton_polygon(p: &RatPoly) -> NewtonPolygon {
    assert!(!p.is_zero(), "newton_polygon: nonzero input");
    let pts: Vec<(usize, Rat)> = p
        .coeffs()
        .iter()
        .enumerate()
        .filter_map(|(i, c)| match val2(c) {
            ExtRat::Fin(v) => Some((i, v)),
            ExtRat::Inf => None,
        })
        .collect();
    let zero_roots = pts.first().map(|&(i, _)| i).unwrap_or(0);
    // Andrew-style hull over the finitely many points.
    let mut hull: Vec<(usize, Rat)> = Vec::new();
    for (i, v) in pts {
        while hull.len() >= 2 {
            let (x1, y1) = hull[hull.len() - 2].clone();
            let (x2, y2) = hull[hull.len() - 1].clone();
            // Drop (x2,y2) if it lies on or above segment (x1,y1)-(i,v).
            let lhs = (&y2 - &y1) * Rat::from_integer(BigInt::from((i - x1) as i64));
            let rhs = (&v - &y1) * Rat::from_integer(BigInt::from((x2 - x1) as i64));
            if lhs >= rhs {
                hull.pop();
            } else {
                break;
            }
        }
        // Also drop an immediate predecessor that is not lower.
        if hull.len() == 1 {
            let (x1, y1) = hull[0].clone();
            let _ = (x1, y1);
        }
        hull.push((i, v));
    }
    let mut segments = Vec::new();
    for w in hull.windows(2) {
        let (x1, y1) = w[0].clone();
        let (x2, y2) = w[1].clone();
        let slope = (y2 - y1) / rat_i64((x2 - x1) as i64, 1);
        segments.push(NpSegment { slope, len: x2 - x1 });
    }
    NewtonPolygon { segments, zero_roots }
}

/// Exact multiset `{ v(r_i - r_j) : i != j }` over the roots of a separable
/// polynomial, of size `n(n-1)`, computed as the root valuations of
/// `Res_x(P(x), P(x+y)) / y^n` in `y`.  No local root finding involved.
pub fn diff_valuation_multiset(p: &RatPoly) -> Result<Vec<ExtRat>, String> {
    let n = p.degree().ok_or("zero polynomial")?;
    if n < 2 {
        return Err("degree must be >= 2".into());
    }
    if discriminant(p).is_zero() {
        return Err("inseparable input".into());
    }
    let d = difference_poly(p);
    // d has degree n^2 - n after removing the y^n factor; its roots are
    // exactly the pairwise differences r_i - r_j (i != j).
    let np = newton_polygon(&d);
    let mut out: Vec<ExtRat> = Vec::with_capacity(n * n - n);
    for _ in 0..np.zero_roots {
        // Cannot happen for separable P, but keep the convention.
        out.push(ExtRat::Inf);
    }
    for (v, len) in np.root_valuations() {
        for _ in 0..len {
            out.push(ExtRat::Fin(v.clone()));
        }
    }
    out.sort();
    Ok(out)
}

/// `Res_x(P(x), P(x+y)) / y^n` as a polynomial in `y`, computed by
/// evaluation at integer points and Lagrange interpolation.
///
/// `Res_x(P(x), P(x+y)) = lc^2n * y^n * prod_{i<j} (y^2 - (r_i - r_j)^2)`,
/// so the quotient is even in `y`; we interpolate it as a polynomial in
/// `y^2` of degree `(n^2 - n)/2`, which halves the number of resultant
/// evaluations.
pub fn difference_poly(p: &RatPoly) -> RatPoly {
    let n = p.degree().expect("nonzero");
    let m = (n * n - n) / 2;
    let mut xs: Vec<Rat> = Vec::with_capacity(m + 1);
    let mut ys: Vec<Rat> = Vec::with_capacity(m + 1);
    for k in 1..=(m + 1) as i64 {
        let y0 = rat_i64(k, 1);
        let shifted = p.translate(&y0);
        let full = resultant(p, &shifted);
        xs.push(&y0 * &y0);
        ys.push(full / pow_rat(&y0, n as u32));
    }
    let g = lagrange_interpolate(&xs, &ys);
    // Expand G(y^2) back into a polynomial in y.
    let mut cs = vec![Rat::zero(); 2 * m + 1];
    for (i, c) in g.coeffs().iter().enumerate() {
        cs[2 * i] = c.clone();
    }
    RatPoly::new(cs)
}

fn lagrange_interpolate(xs: &[Rat], ys: &[Rat]) -> RatPoly {
    // Newton's divided differences, then expand.
    let n = xs.len();
    let mut coef = ys.to_vec();
    for j in 1..n {
        for i in (j..n).rev() {
            let num = &coef[i] - &coef[i - 1];
            let den = &xs[i] - &xs[i - j];
            coef[i] = num / den;
        }
    }
    let mut out = RatPoly::zero();
    for i in (0..n).rev() {
        let lin = RatPoly::new(vec![-xs[i].clone(), Rat::one()]);
        out = out.mul(&lin);
        out = out.add(&RatPoly::new(vec![coef[i].clone()]));
    }
    out
}

/// Binary sextic form; `coeffs[i]` multiplies `x^i z^(6-i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sextic(pub [Rat; 7]);

impl Sextic {
    /// Homogenize a polynomial of degree <= 6; degree-5 input gains a root
    /// at infinity (zero `x^6` coefficient).
    pub fn from_poly(p: &RatPoly) -> Self {
        let d = p.degree().unwrap_or(0);
        assert!(d <= 6, "degree above 6");
        let mut cs: [Rat; 7] = Default::default();
        for i in 0..=d {
            cs[i] = p.coeff(i);
        }
        Sextic(cs)
    }

    pub fn dehomogenize(&self) -> RatPoly {
        RatPoly::new(self.0.to_vec())
    }
}

/// `lambda * (P o M)` as a binary sextic: substitutes
/// `x -> m00 x + m01 z, z -> m10 x + m11 z`.
/// Composition law: `transform(transform(P,M1,l1),M2,l2) = transform(P, M1 M2, l1 l2)`.
pub fn transform_form(p: &Sextic, m: &[[Rat; 2]; 2], lambda: &Rat) -> Sextic {
    let det = &m[0][0] * &m[1][1] - &m[0][1] * &m[1][0];
    assert!(!det.is_zero(), "singular matrix");
    // x and z images as linear forms (coeff of X, coeff of Z).
    let xi = [m[0][0].clone(), m[0][1].clone()];
    let zi = [m[1][0].clone(), m[1][1].clone()];
    // Precompute xi^a * zi^(6-a) as binary forms of degree 6.
    let mut out: [Rat; 7] = Default::default();
    for a in 0..=6usize {
        if p.0[a].is_zero() {
            continue;
        }
        let f = binpow_linform(&xi, a, &zi, 6 - a);
        for (k, c) in f.iter().enumerate() {
            out[k] += &p.0[a] * c * lambda;
        }
    }
    Sextic(out)
}

/// Expand `(ax X + az Z)^p * (bx X + bz Z)^q` (p + q = 6); returns
/// coefficients by X-degree.
fn binpow_linform(a: &[Rat; 2], p: usize, b: &[Rat; 2], q: usize) -> Vec<Rat> {
    let mut f = vec![Rat::one()]; // start with 1 (degree 0)
    for _ in 0..p {
        f = mul_linform(&f, a);
    }
    for _ in 0..q {
        f = mul_linform(&f, b);
    }
    f
}

fn mul_linform(f: &[Rat], l: &[Rat; 2]) -> Vec<Rat> {
    let mut out = vec![Rat::zero(); f.len() + 1];
    for (i, c) in f.iter().enumerate() {
        out[i + 1] += c * &l[0];
        out[i] += c * &l[1];
    }
    out
}

/// Parse a rational from a string like `-3/8` or `12`.
pub fn parse_rat(s: &str) -> Result<Rat, String> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|e| format!("bad numerator: {e}"))?;
        let d: BigInt = d.trim().parse().map_err(|e| format!("bad denominator: {e}"))?;
        if d.is_zero() {
            return Err("zero denominator".into());
        }
        Ok(Rat::new(n, d))
    } else {
        let n: BigInt = s.parse().map_err(|e| format!("bad integer: {e}"))?;
        Ok(Rat::from_integer(n))
    }
}

pub fn rat_to_string(q: &Rat) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Sign of a rational as -1, 0, 1.
pub fn rat_sign(q: &Rat) -> i32 {
    use num::Signed as _;
    match q.numer().sign() {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}
