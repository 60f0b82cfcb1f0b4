//! Towers over the 2-adic numbers: an unramified step (fixed inertial
//! polynomial) followed by a chain of pure ramified steps `x^q - c`.
//! Elements are nested coefficient vectors with dyadic coordinates.
//!
//! Ramified steps come in two kinds.  Separating steps have
//! `gcd(v(c) * e_below, q) = 1`, so the q basis monomials have pairwise
//! distinct valuations modulo the lower value group and valuations are read
//! off by the min rule.  Non-separating steps (square roots of units that
//! resist Hensel) compute valuations through the norm to the lower level.

use super::dyadic::Dyadic;
use super::gf2::{Gf, Gf2Field};
use crate::exactq::Rat;
use num::{BigInt, One, Signed, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Elem {
    Base(Vec<Dyadic>),
    Ext(Vec<Elem>),
}

/// Valuation of a finite-precision element: exactly known, or only known to
/// be at least the working precision (indistinguishable from zero).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Val {
    Known(Rat),
    AtLeastPrec,
}

impl Val {
    pub fn known(&self) -> Option<&Rat> {
        match self {
            Val::Known(q) => Some(q),
            Val::AtLeastPrec => None,
        }
    }
    pub fn is_zeroish(&self) -> bool {
        matches!(self, Val::AtLeastPrec)
    }
}

#[derive(Clone, Debug)]
pub struct RamStep {
    pub q: usize,
    /// Constant of the pure step `x^q = c`; an element one level below.
    pub c: Elem,
    pub c_val: Rat,
    pub sep: bool,
    /// Residue of the generator (non-separating steps only; the generator
    /// is a unit there).
    pub gen_res: Gf,
    /// Valuation of `1 + pi` for non-separating steps; a value-group
    /// generator with odd numerator over 2e.
    pub gen2_val: Option<Rat>,
}

#[derive(Clone, Debug)]
pub struct TowerCtx {
    pub gf: Gf2Field,
    pub steps: Vec<RamStep>,
    /// Working precision in bits (absolute 2-adic precision of base
    /// coordinates).
    pub prec: i64,
    /// Count of pure even-denominator plumbing steps taken (bounded; see
    /// the root-finder's wild-segment handling).
    pub even_plumbs: usize,
}

impl TowerCtx {
    pub fn new(f: usize, prec: i64) -> Self {
        TowerCtx { gf: Gf2Field::new(f), steps: Vec::new(), prec, even_plumbs: 0 }
    }

    pub fn top(&self) -> usize {
        self.steps.len()
    }

    /// Ramification index below level `lvl`.
    pub fn ram_e(&self, lvl: usize) -> usize {
        self.steps[..lvl].iter().map(|s| s.q).product()
    }

    pub fn degree(&self) -> usize {
        self.gf.f * self.ram_e(self.top())
    }

    /// Valuations through a non-separating step are certified via the norm,
    /// which halves the detection range; thresholds must use this effective
    /// precision rather than the raw coordinate precision.
    pub fn eff_prec(&self) -> i64 {
        let ns = self.steps.iter().filter(|s| !s.sep).count() as u32;
        self.prec >> ns.min(8)
    }

    /// Valuation of the generator of step `k`.
    pub fn gen_val(&self, k: usize) -> Rat {
        &self.steps[k].c_val / Rat::from_integer(BigInt::from(self.steps[k].q as i64))
    }

    pub fn zero(&self, lvl: usize) -> Elem {
        if lvl == 0 {
            Elem::Base(vec![Dyadic::zero(); self.gf.f])
        } else {
            Elem::Ext(vec![self.zero(lvl - 1); self.steps[lvl - 1].q])
        }
    }

    pub fn one(&self, lvl: usize) -> Elem {
        let mut z = self.zero(lvl);
        self.set_base_coord(&mut z, 0, Dyadic::one());
        z
    }

    fn set_base_coord(&self, e: &mut Elem, idx: usize, d: Dyadic) {
        match e {
            Elem::Base(v) => v[idx] = d,
            Elem::Ext(v) => self.set_base_coord(&mut v[0], idx, d),
        }
    }

    pub fn from_dyadic(&self, lvl: usize, d: Dyadic) -> Elem {
        let mut z = self.zero(lvl);
        self.set_base_coord(&mut z, 0, d.truncate(self.prec));
        z
    }

    pub fn from_rat(&self, lvl: usize, q: &Rat) -> Elem {
        self.from_dyadic(lvl, Dyadic::from_rat(q, self.prec))
    }

    pub fn promote(&self, e: &Elem, from: usize, to: usize) -> Elem {
        assert!(from <= to);
        let mut cur = e.clone();
        for lvl in from..to {
            let mut v = vec![self.zero(lvl); self.steps[lvl].q];
            v[0] = cur;
            cur = Elem::Ext(v);
        }
        cur
    }

    /// Generator of step `k` as an element of level `k + 1`.
    pub fn gen(&self, k: usize) -> Elem {
        let mut v = vec![self.zero(k); self.steps[k].q];
        v[1] = self.one(k);
        Elem::Ext(v)
    }

    pub fn add(&self, a: &Elem, b: &Elem) -> Elem {
        match (a, b) {
            (Elem::Base(x), Elem::Base(y)) => Elem::Base(
                x.iter().zip(y.iter()).map(|(p, q)| p.add(q, self.prec)).collect(),
            ),
            (Elem::Ext(x), Elem::Ext(y)) => {
                Elem::Ext(x.iter().zip(y.iter()).map(|(p, q)| self.add(p, q)).collect())
            }
            _ => panic!("level mismatch in add"),
        }
    }

    pub fn neg(&self, a: &Elem) -> Elem {
        match a {
            Elem::Base(x) => Elem::Base(x.iter().map(|d| d.neg()).collect()),
            Elem::Ext(x) => Elem::Ext(x.iter().map(|e| self.neg(e)).collect()),
        }
    }

    pub fn sub(&self, a: &Elem, b: &Elem) -> Elem {
        self.add(a, &self.neg(b))
    }

    pub fn is_zero_rep(&self, a: &Elem) -> bool {
        match a {
            Elem::Base(x) => x.iter().all(|d| d.is_zero()),
            Elem::Ext(x) => x.iter().all(|e| self.is_zero_rep(e)),
        }
    }

    pub fn mul(&self, lvl: usize, a: &Elem, b: &Elem) -> Elem {
        match (a, b) {
            (Elem::Base(x), Elem::Base(y)) => {
                let f = self.gf.f;
                let mut conv = vec![Dyadic::zero(); 2 * f - 1];
                for (i, p) in x.iter().enumerate() {
                    if p.is_zero() {
                        continue;
                    }
                    for (j, q) in y.iter().enumerate() {
                        if q.is_zero() {
                            continue;
                        }
                        conv[i + j] = conv[i + j].add(&p.mul(q, self.prec), self.prec);
                    }
                }
                // Reduce by the integer lift of the inertial polynomial:
                // theta^f = -(lower bits).
                for idx in (f..2 * f - 1).rev() {
                    if conv[idx].is_zero() {
                        continue;
                    }
                    let c = std::mem::replace(&mut conv[idx], Dyadic::zero());
                    for i in 0..f {
                        if (self.gf.poly >> i) & 1 == 1 {
                            let t = c.neg();
                            conv[idx - f + i] = conv[idx - f + i].add(&t, self.prec);
                        }
                    }
                }
                conv.truncate(f);
                Elem::Base(conv)
            }
            (Elem::Ext(x), Elem::Ext(y)) => {
                let q = self.steps[lvl - 1].q;
                let mut conv = vec![self.zero(lvl - 1); 2 * q - 1];
                for (i, p) in x.iter().enumerate() {
                    if self.is_zero_rep(p) {
                        continue;
                    }
                    for (j, r) in y.iter().enumerate() {
                        if self.is_zero_rep(r) {
                            continue;
                        }
                        let t = self.mul(lvl - 1, p, r);
                        conv[i + j] = self.add(&conv[i + j], &t);
                    }
                }
                let c = self.steps[lvl - 1].c.clone();
                for idx in (q..2 * q - 1).rev() {
                    if self.is_zero_rep(&conv[idx]) {
                        continue;
                    }
                    let t = std::mem::replace(&mut conv[idx], self.zero(lvl - 1));
                    let folded = self.mul(lvl - 1, &t, &c);
                    conv[idx - q] = self.add(&conv[idx - q], &folded);
                }
                conv.truncate(q);
                Elem::Ext(conv)
            }
            _ => panic!("level mismatch in mul"),
        }
    }

    pub fn scale_rat(&self, a: &Elem, q: &Rat) -> Elem {
        let d = Dyadic::from_rat(q, self.prec + 64);
        self.scale_dyadic(a, &d)
    }

    fn scale_dyadic(&self, a: &Elem, d: &Dyadic) -> Elem {
        match a {
            Elem::Base(x) => Elem::Base(x.iter().map(|p| p.mul(d, self.prec)).collect()),
            Elem::Ext(x) => Elem::Ext(x.iter().map(|e| self.scale_dyadic(e, d)).collect()),
        }
    }

    pub fn val(&self, lvl: usize, a: &Elem) -> Val {
        match a {
            Elem::Base(x) => {
                let mut best: Option<i64> = None;
                for d in x {
                    if let Some(v) = d.val() {
                        best = Some(best.map_or(v, |b: i64| b.min(v)));
                    }
                }
                match best {
                    Some(v) => Val::Known(Rat::from_integer(BigInt::from(v))),
                    None => Val::AtLeastPrec,
                }
            }
            Elem::Ext(x) => {
                let step = &self.steps[lvl - 1];
                if step.sep {
                    let gv = self.gen_val(lvl - 1);
                    let mut best: Option<Rat> = None;
                    for (i, e) in x.iter().enumerate() {
                        if let Val::Known(v) = self.val(lvl - 1, e) {
                            let tot = v + &gv * Rat::from_integer(BigInt::from(i as i64));
                            best = Some(match best {
                                None => tot,
                                Some(b) => {
                                    if tot < b {
                                        tot
                                    } else {
                                        b
                                    }
                                }
                            });
                        }
                    }
                    match best {
                        Some(v) => Val::Known(v),
                        None => Val::AtLeastPrec,
                    }
                } else {
                    // Norm route: v(e0 + e1 pi) = v(e0^2 - c e1^2) / 2.
                    let e0sq = self.mul(lvl - 1, &x[0], &x[0]);
                    let e1sq = self.mul(lvl - 1, &x[1], &x[1]);
                    let ce1 = self.mul(lvl - 1, &step.c, &e1sq);
                    let norm = self.sub(&e0sq, &ce1);
                    match self.val(lvl - 1, &norm) {
                        Val::Known(v) => Val::Known(v / Rat::from_integer(BigInt::from(2))),
                        Val::AtLeastPrec => Val::AtLeastPrec,
                    }
                }
            }
        }
    }

    /// Residue of an integral element (zero residue means positive
    /// valuation).
    pub fn residue(&self, lvl: usize, a: &Elem) -> Gf {
        match a {
            Elem::Base(x) => {
                let mut bits = 0u64;
                for (i, d) in x.iter().enumerate() {
                    if d.residue_bit() {
                        bits |= 1 << i;
                    }
                }
                bits
            }
            Elem::Ext(x) => {
                let step = &self.steps[lvl - 1];
                if step.sep {
                    self.residue(lvl - 1, &x[0])
                } else {
                    // The generator is a unit here, so an integral element
                    // can carry non-integral coordinates (e.g. (1+pi)/p
                    // combinations).  The residue is Frobenius-invariant;
                    // iterate toward the Teichmueller representative until
                    // the coordinates are integral.
                    if self.coords_integral(a) {
                        let r0 = self.residue(lvl - 1, &x[0]);
                        let r1 = self.residue(lvl - 1, &x[1]);
                        self.gf.add(r0, self.gf.mul(r1, step.gen_res))
                    } else {
                        let mut z = a.clone();
                        for _ in 0..96 {
                            for _ in 0..self.gf.f {
                                z = self.mul(lvl, &z, &z);
                            }
                            if self.coords_integral(&z) {
                                return self.residue(lvl, &z);
                            }
                        }
                        // Best effort; the certification gate rejects any
                        // damage this could cause.
                        0
                    }
                }
            }
        }
    }

    pub(crate) fn coords_integral(&self, a: &Elem) -> bool {
        match a {
            Elem::Base(x) => x.iter().all(|d| d.is_zero() || d.exp >= 0),
            Elem::Ext(x) => x.iter().all(|e| self.coords_integral(e)),
        }
    }

    /// Lift a residue-field element to the tower.
    pub fn lift_gf(&self, lvl: usize, g: Gf) -> Elem {
        let f = self.gf.f;
        let mut coords = vec![Dyadic::zero(); f];
        for (i, c) in coords.iter_mut().enumerate() {
            if (g >> i) & 1 == 1 {
                *c = Dyadic::one();
            }
        }
        self.promote(&Elem::Base(coords), 0, lvl)
    }

    /// Inverse; panics on (numerically) zero input.
    pub fn inv(&self, lvl: usize, a: &Elem) -> Elem {
        self.try_inv(lvl, a).expect("inverting a numerically zero element")
    }

    /// Inverse, or `None` when the input is numerically indistinguishable
    /// from zero at the working precision.
    pub fn try_inv(&self, lvl: usize, a: &Elem) -> Option<Elem> {
        match a {
            Elem::Base(x) => {
                let v = x.iter().filter_map(|d| d.val()).min()?;
                // Unit part u = a / 2^v, invert by Newton from the residue.
                let u: Vec<Dyadic> = x.iter().map(|d| d.shift(-v)).collect();
                let ue = Elem::Base(u);
                let r = self.residue(0, &ue);
                let mut inv = self.lift_gf(0, self.gf.inv(r));
                let two = self.from_rat(0, &Rat::from_integer(BigInt::from(2)));
                let mut pbits = 1i64;
                while pbits < self.prec + 8 {
                    // x <- x (2 - u x)
                    let ux = self.mul(0, &ue, &inv);
                    let corr = self.sub(&two, &ux);
                    inv = self.mul(0, &inv, &corr);
                    pbits *= 2;
                }
                match inv {
                    Elem::Base(coords) => {
                        Some(Elem::Base(coords.iter().map(|d| d.shift(-v)).collect()))
                    }
                    _ => unreachable!(),
                }
            }
            Elem::Ext(_) => {
                // Solve M_a x = e_0 over the level below.
                let q = self.steps[lvl - 1].q;
                let mut cols: Vec<Vec<Elem>> = Vec::with_capacity(q);
                let mut apow = a.clone();
                for j in 0..q {
                    if j > 0 {
                        apow = self.mul(lvl, &apow, &self.gen(lvl - 1));
                    }
                    let Elem::Ext(coords) = &apow else { unreachable!() };
                    cols.push(coords.clone());
                }
                let mut rhs = vec![self.zero(lvl - 1); q];
                rhs[0] = self.one(lvl - 1);
                let x = self.solve_linear(lvl - 1, &mut cols, &mut rhs)?;
                Some(Elem::Ext(x))
            }
        }
    }

    /// Solve `sum_j x_j cols[j] = rhs` with entries one level below;
    /// Gauss-Jordan with pivoting on minimal valuation.
    pub(crate) fn solve_linear(
        &self,
        lvl: usize,
        cols: &mut [Vec<Elem>],
        rhs: &mut [Elem],
    ) -> Option<Vec<Elem>> {
        let n = cols.len();
        let mut rows: Vec<Vec<Elem>> = (0..n)
            .map(|r| {
                let mut row: Vec<Elem> = (0..n).map(|c| cols[c][r].clone()).collect();
                row.push(rhs[r].clone());
                row
            })
            .collect();
        for c in 0..n {
            let mut best: Option<(usize, Rat)> = None;
            for (r, row) in rows.iter().enumerate().skip(c) {
                if let Val::Known(v) = self.val(lvl, &row[c]) {
                    if best.as_ref().map(|(_, b)| &v < b).unwrap_or(true) {
                        best = Some((r, v));
                    }
                }
            }
            let (pr, _) = best?;
            rows.swap(c, pr);
            let pinv = self.inv(lvl, &rows[c][c].clone());
            for j in c..=n {
                rows[c][j] = self.mul(lvl, &rows[c][j], &pinv);
            }
            let pivot_row = rows[c].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r == c {
                    continue;
                }
                let f = row[c].clone();
                if self.is_zero_rep(&f) {
                    continue;
                }
                for j in c..=n {
                    let t = self.mul(lvl, &f, &pivot_row[j]);
                    row[j] = self.sub(&row[j], &t);
                }
            }
        }
        Some((0..n).map(|c| rows[c][n].clone()).collect())
    }

    pub fn pow_int(&self, lvl: usize, a: &Elem, k: i64) -> Elem {
        if k < 0 {
            let inv = self.inv(lvl, a);
            return self.pow_int(lvl, &inv, -k);
        }
        let mut acc = self.one(lvl);
        let mut base = a.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(lvl, &acc, &base);
            }
            base = self.mul(lvl, &base, &base);
            e >>= 1;
        }
        acc
    }

    /// Value-group generators as (element, valuation) pairs at top level.
    fn value_gens(&self) -> Vec<(Elem, Rat)> {
        let top = self.top();
        let mut out = vec![(
            self.from_rat(top, &Rat::from_integer(BigInt::from(2))),
            Rat::one(),
        )];
        for k in 0..top {
            let g = self.promote(&self.gen(k), k + 1, top);
            if self.steps[k].sep {
                out.push((g, self.gen_val(k)));
            } else {
                let one = self.one(top);
                let g2 = self.add(&one, &g);
                out.push((g2, self.steps[k].gen2_val.clone().unwrap()));
            }
        }
        out
    }

    /// Total ramification denominator: the value group is (1/e_val) Z.
    pub fn value_denom(&self) -> i64 {
        let mut d: i64 = 1;
        for (_, v) in self.value_gens() {
            d = num::integer::lcm(d, v.denom().try_into().unwrap_or(1));
        }
        d
    }

    /// An element of exact valuation `target`.  The fractional part is
    /// reached by a shortest product of value-group generators (BFS over
    /// the group modulo 1), with exact powers of two interleaved so that
    /// intermediate valuations never drift past the working precision.
    pub fn monomial(&self, target: &Rat) -> Elem {
        let top = self.top();
        if target.is_zero() {
            return self.one(top);
        }
        let e = self.value_denom();
        let er = Rat::from_integer(BigInt::from(e));
        let t_units = {
            let n = target * &er;
            assert!(n.is_integer(), "target valuation outside value group");
            i64::try_from(n.numer().clone()).expect("valuation overflow")
        };
        let goal = t_units.rem_euclid(e) as usize;
        // BFS over Z/e with one edge per generator.
        let gens = self.value_gens();
        let steps: Vec<usize> = gens
            .iter()
            .map(|(_, v)| {
                let n = v * &er;
                (i64::try_from(n.numer().clone()).unwrap().rem_euclid(e)) as usize
            })
            .collect();
        let elen = e as usize;
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; elen];
        let mut seen = vec![false; elen];
        seen[0] = true;
        let mut frontier = vec![0usize];
        while !seen[goal] {
            let mut next = Vec::new();
            for &st in &frontier {
                for (gi, &sp) in steps.iter().enumerate() {
                    let to = (st + sp) % elen;
                    if !seen[to] {
                        seen[to] = true;
                        prev[to] = Some((st, gi));
                        next.push(to);
                    }
                }
            }
            assert!(!next.is_empty(), "value group generation failure");
            frontier = next;
        }
        let mut path: Vec<usize> = Vec::new();
        let mut cur = goal;
        while cur != 0 {
            let (p, gi) = prev[cur].unwrap();
            path.push(gi);
            cur = p;
        }
        // Multiply out, renormalizing by exact powers of two.
        let mut acc = self.one(top);
        let mut acc_val = Rat::zero();
        for gi in path {
            acc = self.mul(top, &acc, &gens[gi].0);
            acc_val += &gens[gi].1;
            while acc_val >= Rat::one() {
                acc = self.shift2(&acc, -1);
                acc_val -= Rat::one();
            }
        }
        let rest = target - &acc_val;
        debug_assert!(rest.is_integer());
        let k = i64::try_from(rest.numer().clone()).expect("valuation overflow");
        self.shift2(&acc, k)
    }

    /// Exact division by 2^k for all coordinates (used to renormalize).
    pub fn shift2(&self, a: &Elem, k: i64) -> Elem {
        match a {
            Elem::Base(x) => Elem::Base(x.iter().map(|d| d.shift(k)).collect()),
            Elem::Ext(x) => Elem::Ext(x.iter().map(|e| self.shift2(e, k)).collect()),
        }
    }
}

/// Fixed, deterministic unramified tower of residue degree `f`.
pub fn make_unramified(f: usize) -> Result<TowerCtx, String> {
    if !(1..=8).contains(&f) {
        return Err(format!("unramified degree {f} out of range 1..=8"));
    }
    Ok(TowerCtx::new(f, 256))
}

/// Public description of a splitting tower: inertial polynomial of the
/// unramified step and the Eisenstein polynomial of a uniformizer over it.
#[derive(Clone, Debug)]
pub struct FieldTower {
    pub f: usize,
    /// Inertial polynomial bits (bit i = coefficient of x^i), degree f.
    pub inertial_bits: u64,
    pub e: usize,
    /// Minimal polynomial of the uniformizer over the unramified step,
    /// monic of degree e; coefficients are unramified-level elements.
    pub eisenstein: Vec<Elem>,
    /// Valuations of the Eisenstein coefficients (for reporting).
    pub eis_vals: Vec<Val>,
}

impl TowerCtx {
    /// Flatten a top-level element to its unramified coordinates along the
    /// ramified monomial basis (mixed-radix order).
    pub fn flatten(&self, a: &Elem) -> Vec<Elem> {
        fn rec(e: &Elem, out: &mut Vec<Elem>) {
            match e {
                Elem::Base(_) => out.push(e.clone()),
                Elem::Ext(v) => {
                    for c in v {
                        rec(c, out);
                    }
                }
            }
        }
        let mut out = Vec::new();
        rec(a, &mut out);
        out
    }

    /// Compute the public tower view: uniformizer minimal polynomial over
    /// the unramified step (Eisenstein by construction).
    pub fn field_tower(&self) -> FieldTower {
        let e = self.ram_e(self.top());
        if e == 1 {
            // Uniformizer 2, minimal polynomial x - 2.
            let m2 = self.from_rat(0, &Rat::from_integer(BigInt::from(-2)));
            return FieldTower {
                f: self.gf.f,
                inertial_bits: self.gf.poly,
                e: 1,
                eisenstein: vec![m2, self.one(0)],
                eis_vals: vec![Val::Known(Rat::one()), Val::Known(Rat::zero())],
            };
        }
        let denom = self.value_denom() as i64;
        let unif = self.monomial(&Rat::new(BigInt::one(), BigInt::from(denom)));
        // Powers of the uniformizer flattened over the unramified step.
        let mut pows: Vec<Vec<Elem>> = Vec::with_capacity(e + 1);
        let mut acc = self.one(self.top());
        for _ in 0..=e {
            pows.push(self.flatten(&acc));
            acc = self.mul(self.top(), &acc, &unif);
        }
        // Solve sum_{j<e} x_j unif^j = -unif^e  (monic relation).
        let mut cols: Vec<Vec<Elem>> = pows[..e].to_vec();
        let mut rhs: Vec<Elem> = pows[e].iter().map(|c| self.neg(c)).collect();
        let x = self
            .solve_linear(0, &mut cols, &mut rhs)
            .expect("uniformizer minimal polynomial solve failed");
        let mut eis: Vec<Elem> = x.into_iter().map(|c| self.neg(&c)).collect();
        eis.push(self.one(0));
        let vals = eis.iter().map(|c| self.val(0, c)).collect();
        FieldTower {
            f: self.gf.f,
            inertial_bits: self.gf.poly,
            e,
            eisenstein: eis,
            eis_vals: vals,
        }
    }
}

/// Outcome of the square-root machine.
pub enum SqrtOutcome {
    Done(Elem),
    /// The Artin-Schreier obstruction needs a residue field extension of
    /// this degree factor.
    NeedUnram(usize),
    /// A genuinely ramified square root: adjoin `x^2 - d`.
    NeedRam { d: Elem, d_val: Rat },
}

/// Square root of an element of even (in the value group) valuation, or a
/// report of the extension required.  The caller owns tower mutation.
pub fn sqrt_elem(ctx: &TowerCtx, u: &Elem) -> Result<SqrtOutcome, String> {
    let top = ctx.top();
    let vu = match ctx.val(top, u) {
        Val::Known(v) => v,
        Val::AtLeastPrec => return Err("square root of a numerically zero element".into()),
    };
    let half = &vu / Rat::from_integer(BigInt::from(2));
    let e = ctx.value_denom();
    let scaled = &half * Rat::from_integer(BigInt::from(e));
    if !scaled.is_integer() {
        // v(u)/2 outside the value group: the root itself is the generator.
        return Ok(SqrtOutcome::NeedRam { d: u.clone(), d_val: vu });
    }
    let m = ctx.monomial(&half);
    let minv = ctx.inv(top, &m);
    let m2inv = ctx.mul(top, &minv, &minv);
    let mut uprime = ctx.mul(top, u, &m2inv); // valuation 0
    // Running square root factor (we fold refinements into uprime).
    let mut root = m;
    let two = Rat::from_integer(BigInt::from(2));
    let mut guard = 0usize;
    loop {
        guard += 1;
        if guard > 4 * (e as usize) + 64 {
            return Err("square-root refinement failed to converge".into());
        }
        let r0 = ctx.residue(top, &uprime);
        let a = ctx.lift_gf(top, ctx.gf.sqrt(r0));
        let ainv = ctx.inv(top, &a);
        let a2inv = ctx.mul(top, &ainv, &ainv);
        let u1 = ctx.mul(top, &uprime, &a2inv);
        root = ctx.mul(top, &root, &a);
        uprime = u1;
        // uprime = 1 + r with v(r) > 0.
        let r = ctx.sub(&uprime, &ctx.one(top));
        let vr = match ctx.val(top, &r) {
            Val::AtLeastPrec => {
                return Ok(SqrtOutcome::Done(root));
            }
            Val::Known(v) => v,
        };
        if std::env::var("G2RED_TRACE").is_ok() {
            eprintln!("  sqrt refine vr = {vr} (e = {e})");
        }
        if vr > two {
            // Hensel: solve x^2 = uprime from x = 1.
            let x = hensel_sqrt_of_one_plus(ctx, &uprime)?;
            return Ok(SqrtOutcome::Done(ctx.mul(top, &root, &x)));
        }
        if vr < two {
            let scaled = &vr * Rat::from_integer(BigInt::from(e)) / Rat::from_integer(BigInt::from(2));
            if scaled.is_integer() {
                // Divide off (1 + s)^2 with s^2 matching the leading term.
                let hv = &vr / &two;
                let ms = ctx.monomial(&hv);
                let msinv = ctx.inv(top, &ms);
                let lead = ctx.mul(top, &r, &ctx.mul(top, &msinv, &msinv));
                let lres = ctx.residue(top, &lead);
                let s = ctx.mul(top, &ms, &ctx.lift_gf(top, ctx.gf.sqrt(lres)));
                let ops = ctx.add(&ctx.one(top), &s);
                let opsinv = ctx.inv(top, &ops);
                let ops2inv = ctx.mul(top, &opsinv, &opsinv);
                uprime = ctx.mul(top, &uprime, &ops2inv);
                root = ctx.mul(top, &root, &ops);
                continue;
            }
            // Odd obstruction below 2: ramified quadratic by this unit.
            return Ok(SqrtOutcome::NeedRam { d: uprime, d_val: Rat::zero() });
        }
        // vr == 2: Artin-Schreier level.  uprime = 1 + 4w.
        let w = ctx.shift2(&r, -2);
        let wres = ctx.residue(top, &w);
        match ctx.gf.solve_artin_schreier(wres) {
            None => return Ok(SqrtOutcome::NeedUnram(2)),
            Some(t) => {
                let tt = ctx.lift_gf(top, t);
                let twot = ctx.shift2(&tt, 1);
                let ops = ctx.add(&ctx.one(top), &twot);
                let opsinv = ctx.inv(top, &ops);
                let ops2inv = ctx.mul(top, &opsinv, &opsinv);
                uprime = ctx.mul(top, &uprime, &ops2inv);
                root = ctx.mul(top, &root, &ops);
            }
        }
    }
}

/// Newton iteration for `x^2 = u` with `v(u - 1) > 2`, starting at 1.
fn hensel_sqrt_of_one_plus(ctx: &TowerCtx, u: &Elem) -> Result<Elem, String> {
    let top = ctx.top();
    let mut x = ctx.one(top);
    let half = Rat::new(BigInt::one(), BigInt::from(2));
    for _ in 0..64 {
        // x <- (x + u/x) / 2
        let xinv = ctx.inv(top, &x);
        let ux = ctx.mul(top, u, &xinv);
        let sum = ctx.add(&x, &ux);
        let next = ctx.scale_rat(&sum, &half);
        let diff = ctx.sub(&next, &x);
        x = next;
        if ctx.val(top, &diff).is_zeroish() {
            break;
        }
    }
    // Verify: construction must land a quarter-precision above the
    // certification threshold.
    let x2 = ctx.mul(top, &x, &x);
    let err = ctx.sub(&x2, u);
    match ctx.val(top, &err) {
        Val::AtLeastPrec => Ok(x),
        Val::Known(v) if v >= Rat::from_integer(BigInt::from(ctx.eff_prec() * 3 / 4)) => Ok(x),
        Val::Known(v) => Err(format!("sqrt Newton stalled at error valuation {v}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactq::parse_rat;

    #[test]
    fn base_field_arithmetic() {
        let ctx = TowerCtx::new(2, 128);
        // theta^2 + theta + 1 = 0, so theta * theta = -theta - 1.
        let theta = {
            let mut z = ctx.zero(0);
            if let Elem::Base(v) = &mut z {
                v[1] = Dyadic::one();
            }
            z
        };
        let t2 = ctx.mul(0, &theta, &theta);
        let expect = {
            let mut z = ctx.zero(0);
            if let Elem::Base(v) = &mut z {
                v[0] = Dyadic::from_i64(-1);
                v[1] = Dyadic::from_i64(-1);
            }
            z
        };
        assert_eq!(ctx.val(0, &ctx.sub(&t2, &expect)), Val::AtLeastPrec);
        // Inverse of theta.
        let inv = ctx.inv(0, &theta);
        let prod = ctx.mul(0, &theta, &inv);
        assert_eq!(ctx.val(0, &ctx.sub(&prod, &ctx.one(0))), Val::AtLeastPrec);
    }

    #[test]
    fn ramified_step_and_monomial() {
        let mut ctx = TowerCtx::new(1, 128);
        // Adjoin sqrt(2): x^2 - 2, separating.
        let c = ctx.from_rat(0, &parse_rat("2").unwrap());
        ctx.steps.push(RamStep {
            q: 2,
            c,
            c_val: Rat::one(),
            sep: true,
            gen_res: 0,
            gen2_val: None,
        });
        let pi = ctx.gen(0);
        assert_eq!(ctx.val(1, &pi), Val::Known(parse_rat("1/2").unwrap()));
        let pi2 = ctx.mul(1, &pi, &pi);
        let two = ctx.from_rat(1, &parse_rat("2").unwrap());
        assert_eq!(ctx.val(1, &ctx.sub(&pi2, &two)), Val::AtLeastPrec);
        // Monomial of valuation 3/2 and its inverse.
        let m = ctx.monomial(&parse_rat("3/2").unwrap());
        assert_eq!(ctx.val(1, &m), Val::Known(parse_rat("3/2").unwrap()));
        let minv = ctx.inv(1, &m);
        assert_eq!(ctx.val(1, &minv), Val::Known(parse_rat("-3/2").unwrap()));
        // Eisenstein view.
        let ft = ctx.field_tower();
        assert_eq!(ft.e, 2);
        assert_eq!(ft.eis_vals.len(), 3);
        assert_eq!(ft.eis_vals[2], Val::Known(Rat::zero()));
        let v0 = ft.eis_vals[0].known().unwrap().clone();
        assert_eq!(v0, Rat::one());
    }

    #[test]
    fn sqrt_machine_unit_cases() {
        // sqrt(-7) exists in Q2 (since -7 = 1 - 8 is a square).
        let ctx = TowerCtx::new(1, 160);
        let u = ctx.from_rat(0, &parse_rat("-7").unwrap());
        match sqrt_elem(&ctx, &u).unwrap() {
            SqrtOutcome::Done(r) => {
                let r2 = ctx.mul(0, &r, &r);
                assert_eq!(ctx.val(0, &ctx.sub(&r2, &u)), Val::AtLeastPrec);
            }
            _ => panic!("expected a square root of -7 in Q2"),
        }
        // sqrt(-1) needs a ramified quadratic.
        let m1 = ctx.from_rat(0, &parse_rat("-1").unwrap());
        match sqrt_elem(&ctx, &m1).unwrap() {
            SqrtOutcome::NeedRam { .. } => {}
            _ => panic!("expected ramified obstruction for sqrt(-1)"),
        }
        // sqrt(5): 5 = 1 + 4, trace of 1 over F2 is 1: unramified quadratic.
        let five = ctx.from_rat(0, &parse_rat("5").unwrap());
        match sqrt_elem(&ctx, &five).unwrap() {
            SqrtOutcome::NeedUnram(2) => {}
            _ => panic!("expected unramified obstruction for sqrt(5)"),
        }
        // And sqrt(5) exists over F4.
        let ctx4 = TowerCtx::new(2, 160);
        let five = ctx4.from_rat(0, &parse_rat("5").unwrap());
        match sqrt_elem(&ctx4, &five).unwrap() {
            SqrtOutcome::Done(r) => {
                let r2 = ctx4.mul(0, &r, &r);
                assert_eq!(ctx4.val(0, &ctx4.sub(&r2, &five)), Val::AtLeastPrec);
            }
            _ => panic!("expected sqrt(5) over the unramified quadratic"),
        }
    }

    #[test]
    fn nonsep_step_norm_valuation() {
        // Adjoin i via x^2 - (-1): non-separating unit step.
        let mut ctx = TowerCtx::new(1, 128);
        let minus1 = ctx.from_rat(0, &parse_rat("-1").unwrap());
        ctx.steps.push(RamStep {
            q: 2,
            c: minus1,
            c_val: Rat::zero(),
            sep: false,
            gen_res: 1, // sqrt of residue 1
            gen2_val: Some(Rat::new(BigInt::one(), BigInt::from(2))),
        });
        let i = ctx.gen(0);
        assert_eq!(ctx.val(1, &i), Val::Known(Rat::zero()));
        let onei = ctx.add(&ctx.one(1), &i);
        assert_eq!(ctx.val(1, &onei), Val::Known(parse_rat("1/2").unwrap()));
        // (1+i)^2 = 2i.
        let sq = ctx.mul(1, &onei, &onei);
        assert_eq!(ctx.val(1, &sq), Val::Known(Rat::one()));
        let m = ctx.monomial(&parse_rat("1/2").unwrap());
        assert_eq!(ctx.val(1, &m), Val::Known(parse_rat("1/2").unwrap()));
    }
}
