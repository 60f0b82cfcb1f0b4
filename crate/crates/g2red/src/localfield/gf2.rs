//! Finite fields `F_{2^f}` with bit-packed elements, plus the polynomial
//! factorization over them needed for residue analysis.

/// Inertial (Conway-free) polynomial table for small degrees; fixed so runs
/// are reproducible bit-for-bit.
pub const INERTIAL_TABLE: [u64; 8] = [
    0b11,                // x + 1
    0b111,               // x^2 + x + 1
    0b1011,              // x^3 + x + 1
    0b10011,             // x^4 + x + 1
    0b100101,            // x^5 + x^2 + 1
    0b1011011,           // x^6 + x^4 + x^3 + x + 1
    0b10000011,          // x^7 + x + 1
    0b100011101,         // x^8 + x^4 + x^3 + x^2 + 1
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gf2Field {
    pub f: usize,
    /// Minimal polynomial bits, degree f (bit i = coefficient of x^i).
    pub poly: u64,
}

pub type Gf = u64;

impl Gf2Field {
    pub fn new(f: usize) -> Self {
        assert!(f >= 1 && f <= 48, "residue degree {f} out of range");
        let poly = if f <= 8 {
            INERTIAL_TABLE[f - 1]
        } else {
            lowest_lex_irreducible(f)
        };
        Gf2Field { f, poly }
    }

    pub fn zero(&self) -> Gf {
        0
    }
    pub fn one(&self) -> Gf {
        1
    }

    pub fn add(&self, a: Gf, b: Gf) -> Gf {
        a ^ b
    }

    pub fn mul(&self, a: Gf, b: Gf) -> Gf {
        let mut acc: u128 = 0;
        let mut aa: u128 = a as u128;
        let mut bb = b;
        while bb != 0 {
            if bb & 1 == 1 {
                acc ^= aa;
            }
            aa <<= 1;
            bb >>= 1;
        }
        self.reduce(acc)
    }

    fn reduce(&self, mut x: u128) -> Gf {
        let p = self.poly as u128;
        let f = self.f as u32;
        while x >> f != 0 {
            let top = 127 - x.leading_zeros();
            x ^= p << (top - f);
        }
        x as u64
    }

    pub fn pow(&self, mut a: Gf, mut e: u128) -> Gf {
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: Gf) -> Gf {
        assert!(a != 0, "inverting zero in GF(2^f)");
        self.pow(a, (1u128 << self.f) - 2)
    }

    /// Square root (Frobenius inverse); every element has one.
    pub fn sqrt(&self, a: Gf) -> Gf {
        self.pow(a, 1u128 << (self.f - 1))
    }

    pub fn trace(&self, a: Gf) -> u64 {
        let mut t = 0u64;
        let mut x = a;
        for _ in 0..self.f {
            t ^= x;
            x = self.mul(x, x);
        }
        t & 1
    }

    /// Solve `t^2 + t = w`; requires trace(w) = 0.
    pub fn solve_artin_schreier(&self, w: Gf) -> Option<Gf> {
        if self.trace(w) != 0 {
            return None;
        }
        // Linear map t -> t^2 + t over the F2 basis theta^i.
        let f = self.f;
        let mut cols: Vec<u64> = Vec::with_capacity(f);
        for i in 0..f {
            let b = 1u64 << i;
            cols.push(self.mul(b, b) ^ b);
        }
        // Gaussian elimination on the f x f system cols * t = w.
        let mut rows = vec![0u64; f]; // row r: bits of coefficients + solution
        for r in 0..f {
            let mut row = 0u64;
            for (c, col) in cols.iter().enumerate() {
                if (col >> r) & 1 == 1 {
                    row |= 1 << c;
                }
            }
            rows[r] = row | (((w >> r) & 1) << f);
        }
        let mut pivot_of_col = vec![usize::MAX; f];
        let mut r0 = 0;
        for c in 0..f {
            if let Some(pr) = (r0..f).find(|&r| (rows[r] >> c) & 1 == 1) {
                rows.swap(r0, pr);
                for r in 0..f {
                    if r != r0 && (rows[r] >> c) & 1 == 1 {
                        rows[r] ^= rows[r0];
                    }
                }
                pivot_of_col[c] = r0;
                r0 += 1;
            }
        }
        let mut t = 0u64;
        for c in 0..f {
            if pivot_of_col[c] != usize::MAX && (rows[pivot_of_col[c]] >> f) & 1 == 1 {
                t |= 1 << c;
            }
        }
        // Rows beyond rank must have zero rhs (guaranteed by the trace test).
        if self.mul(t, t) ^ t == w {
            Some(t)
        } else {
            None
        }
    }
}

/// Lowest-lexicographic irreducible polynomial of degree f over F2.
fn lowest_lex_irreducible(f: usize) -> u64 {
    let top = 1u64 << f;
    for low in 1..top {
        let p = top | low;
        if poly_irreducible_f2(p, f) {
            return p;
        }
    }
    unreachable!()
}

fn poly_irreducible_f2(p: u64, f: usize) -> bool {
    // x^(2^f) == x mod p, and gcd(x^(2^(f/l)) - x, p) == 1 for primes l | f.
    let sq = |a: u128, p: u64, f: usize| -> u64 {
        // square a (bits) mod p over F2
        let mut acc: u128 = 0;
        for i in 0..64 {
            if (a >> i) & 1 == 1 {
                acc ^= 1u128 << (2 * i);
            }
        }
        reduce_bits(acc, p, f)
    };
    let frob_pow = |mut k: usize, p: u64, f: usize| -> u64 {
        // x^(2^k) mod p
        let mut x = 0b10u64;
        while k > 0 {
            x = sq(x as u128, p, f);
            k -= 1;
        }
        x
    };
    let xred = reduce_bits(0b10, p, f);
    if frob_pow(f, p, f) != xred {
        return false;
    }
    let mut m = f;
    let mut primes = vec![];
    let mut d = 2;
    while d * d <= m {
        if m % d == 0 {
            primes.push(d);
            while m % d == 0 {
                m /= d;
            }
        }
        d += 1;
    }
    if m > 1 {
        primes.push(m);
    }
    for l in primes {
        let g = gcd_bits(frob_pow(f / l, p, f) ^ xred, p);
        if g != 1 {
            return false;
        }
    }
    true
}

fn reduce_bits(mut x: u128, p: u64, f: usize) -> u64 {
    let pp = p as u128;
    while x >> f != 0 {
        let top = 127 - x.leading_zeros();
        x ^= pp << (top - f as u32);
    }
    x as u64
}

fn gcd_bits(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let deg_a = 63 - a.leading_zeros();
        let deg_b = 63 - b.leading_zeros();
        if a == 0 {
            return b;
        }
        if deg_a < deg_b {
            std::mem::swap(&mut a, &mut b);
            continue;
        }
        a ^= b << (deg_a - deg_b);
    }
    a
}

/// Dense polynomial over GF(2^f), coefficients low-to-high, trimmed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GfPoly(pub Vec<Gf>);

impl GfPoly {
    pub fn new(mut c: Vec<Gf>) -> Self {
        while c.last() == Some(&0) {
            c.pop();
        }
        GfPoly(c)
    }

    pub fn zero() -> Self {
        GfPoly(vec![])
    }

    pub fn x() -> Self {
        GfPoly(vec![0, 1])
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        if self.0.is_empty() {
            None
        } else {
            Some(self.0.len() - 1)
        }
    }

    pub fn add(&self, o: &GfPoly) -> GfPoly {
        let n = self.0.len().max(o.0.len());
        let mut c = vec![0u64; n];
        for (i, a) in self.0.iter().enumerate() {
            c[i] ^= a;
        }
        for (i, a) in o.0.iter().enumerate() {
            c[i] ^= a;
        }
        GfPoly::new(c)
    }

    pub fn mul(&self, o: &GfPoly, k: &Gf2Field) -> GfPoly {
        if self.is_zero() || o.is_zero() {
            return GfPoly::zero();
        }
        let mut c = vec![0u64; self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            if *a == 0 {
                continue;
            }
            for (j, b) in o.0.iter().enumerate() {
                c[i + j] ^= k.mul(*a, *b);
            }
        }
        GfPoly::new(c)
    }

    pub fn divmod(&self, d: &GfPoly, k: &Gf2Field) -> (GfPoly, GfPoly) {
        let dd = d.degree().expect("division by zero poly");
        let lc_inv = k.inv(*d.0.last().unwrap());
        let mut rem = self.0.clone();
        let mut quo = vec![0u64; self.0.len().saturating_sub(dd)];
        while rem.len() > dd {
            let top = rem.len() - 1;
            let c = k.mul(*rem.last().unwrap(), lc_inv);
            if c != 0 {
                quo[top - dd] = c;
                for i in 0..=dd {
                    rem[top - dd + i] ^= k.mul(c, d.0[i]);
                }
            }
            rem.pop();
        }
        (GfPoly::new(quo), GfPoly::new(rem))
    }

    pub fn gcd(&self, o: &GfPoly, k: &Gf2Field) -> GfPoly {
        let mut a = self.clone();
        let mut b = o.clone();
        while !b.is_zero() {
            let (_, r) = a.divmod(&b, k);
            a = b;
            b = r;
        }
        a.monic(k)
    }

    pub fn monic(&self, k: &Gf2Field) -> GfPoly {
        if self.is_zero() {
            return GfPoly::zero();
        }
        let inv = k.inv(*self.0.last().unwrap());
        GfPoly::new(self.0.iter().map(|c| k.mul(*c, inv)).collect())
    }

    pub fn derivative(&self) -> GfPoly {
        // Characteristic 2: only odd-degree terms survive.
        let mut c = vec![0u64; self.0.len().saturating_sub(1)];
        for (i, a) in self.0.iter().enumerate().skip(1) {
            if i % 2 == 1 {
                c[i - 1] = *a;
            }
        }
        GfPoly::new(c)
    }

    pub fn eval(&self, x: Gf, k: &Gf2Field) -> Gf {
        let mut acc = 0u64;
        for c in self.0.iter().rev() {
            acc = k.mul(acc, x) ^ c;
        }
        acc
    }

}

/// Full factorization into monic irreducibles with multiplicities.
/// Degrees here never exceed 6, so distinct-degree plus trace-based
/// equal-degree splitting suffices.
pub fn factor(p: &GfPoly, k: &Gf2Field) -> Vec<(GfPoly, usize)> {
    let mut out: Vec<(GfPoly, usize)> = Vec::new();
    for (part, m) in squarefree_decomposition(&p.monic(k), k) {
        for fac in factor_squarefree(&part, k) {
            out.push((fac, m));
        }
    }
    out.sort_by(|a, b| a.0 .0.cmp(&b.0 .0));
    out
}

/// Characteristic-2 squarefree decomposition: pairwise-coprime squarefree
/// parts `g_i` with `p = prod g_i^i`.
fn squarefree_decomposition(p: &GfPoly, k: &Gf2Field) -> Vec<(GfPoly, usize)> {
    let mut out = Vec::new();
    if p.degree().unwrap_or(0) == 0 {
        return out;
    }
    let dp = p.derivative();
    if dp.is_zero() {
        // p = h(x)^2 with h built from square roots of even coefficients.
        let mut half = Vec::with_capacity(p.0.len() / 2 + 1);
        for (i, c) in p.0.iter().enumerate() {
            if i % 2 == 0 {
                half.push(k.sqrt(*c));
            }
        }
        for (g, m) in squarefree_decomposition(&GfPoly::new(half), k) {
            out.push((g, 2 * m));
        }
        return out;
    }
    let mut c = p.gcd(&dp, k);
    let mut w = p.divmod(&c, k).0;
    let mut i = 1usize;
    while w.degree().unwrap_or(0) > 0 {
        let y = w.gcd(&c, k);
        let z = w.divmod(&y, k).0;
        if z.degree().unwrap_or(0) > 0 {
            out.push((z.monic(k), i));
        }
        w = y;
        c = c.divmod(&w, k).0;
        i += 1;
    }
    if c.degree().unwrap_or(0) > 0 {
        // Remaining part is a perfect square; the derivative-zero branch of
        // the recursion supplies the factor of two.
        for (g, m) in squarefree_decomposition(&c, k) {
            out.push((g, m));
        }
    }
    out
}

fn factor_squarefree(p: &GfPoly, k: &Gf2Field) -> Vec<GfPoly> {
    let mut out = Vec::new();
    let mut work = p.monic(k);
    if work.degree().unwrap_or(0) == 0 {
        return out;
    }
    let mut h = GfPoly::x().divmod(&work, k).1;
    let mut d = 0usize;
    while work.degree().unwrap_or(0) > 0 {
        d += 1;
        if 2 * d > work.degree().unwrap() {
            out.push(work.clone());
            break;
        }
        // Advance h from x^(2^(f*(d-1))) to x^(2^(f*d)) mod work.
        for _ in 0..k.f {
            h = h.mul(&h, k).divmod(&work, k).1;
        }
        let g = work.gcd(&h.add(&GfPoly::x()), k);
        if g.degree().unwrap_or(0) > 0 {
            out.extend(equal_degree(&g, d, k));
            work = work.divmod(&g, k).0;
            h = h.divmod(&work, k).1;
        }
    }
    out
}

fn equal_degree(p: &GfPoly, d: usize, k: &Gf2Field) -> Vec<GfPoly> {
    let n = p.degree().unwrap();
    if n == d {
        return vec![p.monic(k)];
    }
    // Characteristic-2 splitting with the trace map
    // T(a) = a + a^2 + ... + a^(2^(f*d-1)).
    let mut rng_state = 0x9e3779b97f4a7c15u64 ^ (n as u64) << 8 ^ d as u64;
    loop {
        rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        // Random polynomial of degree < n.
        let mut c = vec![0u64; n];
        let mut s = rng_state;
        for ci in c.iter_mut() {
            s = s.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
            *ci = s >> (64 - k.f.min(63)) & ((1u64 << k.f) - 1);
        }
        let a = GfPoly::new(c);
        if a.degree().is_none() {
            continue;
        }
        let mut t = a.clone();
        let mut aq = a.clone();
        for _ in 1..(k.f * d) {
            aq = aq.mul(&aq, k).divmod(p, k).1;
            t = t.add(&aq);
        }
        let g = p.gcd(&t, k);
        let gd = g.degree().unwrap_or(0);
        if gd > 0 && gd < n {
            let rest = p.divmod(&g, k).0;
            let mut out = equal_degree(&g, d, k);
            out.extend(equal_degree(&rest, d, k));
            return out;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_polys_are_irreducible() {
        for (i, &p) in INERTIAL_TABLE.iter().enumerate() {
            assert!(poly_irreducible_f2(p, i + 1), "f = {}", i + 1);
        }
    }

    #[test]
    fn field_ops_f4() {
        let k = Gf2Field::new(2);
        // theta^2 = theta + 1
        let t = 0b10;
        assert_eq!(k.mul(t, t), 0b11);
        assert_eq!(k.mul(t, k.inv(t)), 1);
        assert_eq!(k.sqrt(k.mul(t, t)), t);
    }

    #[test]
    fn artin_schreier_solutions() {
        for f in 1..=8 {
            let k = Gf2Field::new(f);
            for w in 0..(1u64 << f).min(64) {
                match k.solve_artin_schreier(w) {
                    Some(t) => assert_eq!(k.mul(t, t) ^ t, w),
                    None => assert_eq!(k.trace(w), 1),
                }
            }
        }
    }

    #[test]
    fn factor_small() {
        let k = Gf2Field::new(2);
        // x^2 + x + 1 splits over F4 into (x - theta)(x - theta^2).
        let p = GfPoly::new(vec![1, 1, 1]);
        let fs = factor(&p, &k);
        assert_eq!(fs.len(), 2);
        for (f, m) in &fs {
            assert_eq!(*m, 1);
            assert_eq!(f.degree(), Some(1));
        }
        // (x+1)^2 * irreducible quadratic over F2.
        let k1 = Gf2Field::new(1);
        let sq = GfPoly::new(vec![1, 0, 1]); // x^2 + 1 = (x+1)^2
        let irr = GfPoly::new(vec![1, 1, 1]);
        let p = sq.mul(&irr, &k1);
        let fs = factor(&p, &k1);
        let mut seen_sq = false;
        let mut seen_irr = false;
        for (f, m) in fs {
            if f == GfPoly::new(vec![1, 1]) {
                assert_eq!(m, 2);
                seen_sq = true;
            }
            if f == irr {
                assert_eq!(m, 1);
                seen_irr = true;
            }
        }
        assert!(seen_sq && seen_irr);
    }

    #[test]
    fn factor_x5_minus_1_over_f2() {
        let k = Gf2Field::new(1);
        let p = GfPoly::new(vec![1, 0, 0, 0, 0, 1]); // x^5 + 1
        let fs = factor(&p, &k);
        let degs: Vec<usize> = fs.iter().map(|(f, _)| f.degree().unwrap()).collect();
        assert!(degs.contains(&1) && degs.contains(&4));
    }
}
