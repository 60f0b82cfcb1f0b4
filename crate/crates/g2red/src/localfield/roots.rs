//! Certified root finding over towers: Newton-polygon segmentation,
//! per-slope substitution, residue factorization (enlarging the unramified
//! step as needed), Hensel lifting, and translation recursion for repeated
//! residue roots.  Quadratic clusters are solved in closed form through the
//! square-root machine, which pins down exactly which quadratic extension is
//! required and keeps the tower search from wandering.
//!
//! Every run is gated: the pairwise difference valuations of the returned
//! roots must reproduce `diff_valuation_multiset` exactly, the roots must
//! rebuild the polynomial coefficientwise, and root valuations must match
//! the Newton polygon.  On any failure the working precision is doubled; a
//! persistent mismatch is a hard failure, never a silent wrong answer.

use super::gf2::{factor, GfPoly};
use super::tower::{sqrt_elem, Elem, FieldTower, RamStep, SqrtOutcome, TowerCtx, Val};
use crate::exactq::{
    diff_valuation_multiset, discriminant, newton_polygon, val2, ExtRat, NewtonPolygon, Rat,
    RatPoly,
};
use num::{BigInt, One, Signed, Zero};

/// Internal control-flow signals for the splitting driver.
#[derive(Debug, Clone)]
pub enum Need {
    /// Residue field must grow by this degree factor.
    Unram(usize),
    /// Working precision exhausted; caller doubles and retries.
    Precision,
    /// Tower degree cap exceeded.
    TowerCap,
    Internal(String),
}

pub type TPoly = Vec<Elem>;

pub const TOWER_DEGREE_CAP: usize = 64;
pub const PRECISION_CAP_BITS: i64 = 1 << 14;
const MAX_DEPTH: usize = 48;

#[derive(Debug)]
pub struct LocalRootsOutput {
    pub ctx: TowerCtx,
    pub roots: Vec<Elem>,
    pub tower: FieldTower,
    pub precision_bits: i64,
    /// Absolute precision guarantee carried by each returned root.
    pub abs_precision: Rat,
}

/// Find all roots of a separable polynomial of degree 2..6 in a single
/// splitting tower, certified against the exact difference-valuation oracle.
pub fn local_roots(p: &RatPoly, prec_cap: Option<i64>) -> Result<LocalRootsOutput, String> {
    local_roots_min_f(p, prec_cap, 1)
}

/// As [`local_roots`], with a lower bound on the residue degree (used when a
/// caller needs extra residue classes, e.g. to place a finitization center).
pub fn local_roots_min_f(
    p: &RatPoly,
    prec_cap: Option<i64>,
    min_f: usize,
) -> Result<LocalRootsOutput, String> {
    local_roots_full(p, prec_cap, min_f, None)
}

/// Full-control variant: residue-degree floor and starting-precision floor
/// (callers escalate the latter when downstream certification fails).
pub fn local_roots_full(
    p: &RatPoly,
    prec_cap: Option<i64>,
    min_f: usize,
    min_prec: Option<i64>,
) -> Result<LocalRootsOutput, String> {
    let deg = p.degree().ok_or("zero polynomial")?;
    if !(2..=6).contains(&deg) {
        return Err(format!("degree {deg} outside 2..6"));
    }
    let disc = discriminant(p);
    if disc.is_zero() {
        return Err("inseparable input".into());
    }
    let oracle = diff_valuation_multiset(p)?;
    let np = newton_polygon(p);
    let vd: i64 = match val2(&disc) {
        ExtRat::Fin(v) => v.ceil().numer().try_into().unwrap_or(0),
        ExtRat::Inf => unreachable!(),
    };
    let cap = prec_cap.unwrap_or(PRECISION_CAP_BITS);
    let mut prec = (32 * (1 + vd.max(0))).max(min_prec.unwrap_or(0));
    'precision: loop {
        if prec > cap {
            return Err(format!(
                "precision cap exceeded ({prec} > {cap} bits) without certification"
            ));
        }
        let mut f = min_f.max(1);
        loop {
            if f > TOWER_DEGREE_CAP {
                return Err("tower degree cap exceeded (residue field)".into());
            }
            let mut ctx = TowerCtx::new(f, prec);
            let tp = tpoly_from_rat(&ctx, p);
            match split_all(&mut ctx, &tp, false, 0) {
                Ok(roots) => {
                    if ctx.degree() > TOWER_DEGREE_CAP {
                        return Err("tower degree cap exceeded".into());
                    }
                    if certify(&ctx, p, &roots, &oracle, &np) {
                        let tower = ctx.field_tower();
                        let abs = Rat::from_integer(BigInt::from(prec / 2));
                        return Ok(LocalRootsOutput {
                            ctx,
                            roots,
                            tower,
                            precision_bits: prec,
                            abs_precision: abs,
                        });
                    }
                    prec *= 2;
                    continue 'precision;
                }
                Err(Need::Unram(d)) => {
                    f *= d.max(2);
                    continue;
                }
                Err(Need::Precision) => {
                    prec *= 2;
                    continue 'precision;
                }
                Err(Need::TowerCap) => return Err("tower degree cap exceeded".into()),
                Err(Need::Internal(m)) => return Err(format!("internal root-finder error: {m}")),
            }
        }
    }
}

pub fn tpoly_from_rat(ctx: &TowerCtx, p: &RatPoly) -> TPoly {
    let top = ctx.top();
    p.coeffs().iter().map(|c| ctx.from_rat(top, c)).collect()
}

fn elem_level(e: &Elem) -> usize {
    match e {
        Elem::Base(_) => 0,
        Elem::Ext(v) => 1 + elem_level(&v[0]),
    }
}

fn ensure_top(ctx: &TowerCtx, e: &Elem) -> Elem {
    ctx.promote(e, elem_level(e), ctx.top())
}

pub fn tp_eval(ctx: &TowerCtx, p: &TPoly, x: &Elem) -> Elem {
    let top = ctx.top();
    let mut acc = ctx.zero(top);
    for c in p.iter().rev() {
        acc = ctx.mul(top, &acc, x);
        acc = ctx.add(&acc, c);
    }
    acc
}

pub fn tp_deriv(ctx: &TowerCtx, p: &TPoly) -> TPoly {
    let mut out = Vec::with_capacity(p.len().saturating_sub(1));
    for (i, c) in p.iter().enumerate().skip(1) {
        out.push(ctx.scale_rat(c, &Rat::from_integer(BigInt::from(i as i64))));
    }
    out
}

/// `P(center + x)`.
fn tp_translate(ctx: &TowerCtx, p: &TPoly, center: &Elem) -> TPoly {
    let top = ctx.top();
    let mut out: TPoly = vec![ctx.zero(top)];
    for c in p.iter().rev() {
        // out = out * (x + center) + c
        let mut next: TPoly = vec![ctx.zero(top); out.len() + 1];
        for (i, o) in out.iter().enumerate() {
            next[i + 1] = ctx.add(&next[i + 1], o);
            let t = ctx.mul(top, o, center);
            next[i] = ctx.add(&next[i], &t);
        }
        next[0] = ctx.add(&next[0], c);
        out = next;
    }
    // Trim to the original degree (top coefficient preserved).
    out.truncate(p.len());
    out
}

/// `P(m x)`: coefficient i multiplied by m^i.
fn tp_scale_var(ctx: &TowerCtx, p: &TPoly, m: &Elem) -> TPoly {
    let top = ctx.top();
    let mut out = Vec::with_capacity(p.len());
    let mut pw = ctx.one(top);
    for (i, c) in p.iter().enumerate() {
        if i > 0 {
            pw = ctx.mul(top, &pw, m);
        }
        out.push(ctx.mul(top, c, &pw));
    }
    out
}

/// Division by a monic polynomial; returns (quotient, remainder).
fn tp_divmod_monic(ctx: &TowerCtx, num: &TPoly, den: &TPoly) -> (TPoly, TPoly) {
    let top = ctx.top();
    let dd = den.len() - 1;
    let mut rem = num.clone();
    if rem.len() <= dd {
        return (vec![], rem);
    }
    let mut quo = vec![ctx.zero(top); rem.len() - dd];
    for k in (dd..rem.len()).rev() {
        let c = rem[k].clone();
        if ctx.is_zero_rep(&c) {
            continue;
        }
        quo[k - dd] = c.clone();
        for i in 0..=dd {
            let t = ctx.mul(top, &c, &den[i]);
            rem[k - dd + i] = ctx.sub(&rem[k - dd + i], &t);
        }
    }
    rem.truncate(dd);
    (quo, rem)
}

/// Newton iteration toward a root from a start with a simple residue
/// direction; stalls report a precision need.
fn newton_polish(ctx: &TowerCtx, q: &TPoly, dq: &TPoly, start: &Elem) -> Result<Elem, Need> {
    let top = ctx.top();
    // Converged once the residual clears this margin; the certification
    // gate works at prec/2 and products with negative-valuation elements
    // keep a noise floor slightly below prec.
    let good = Rat::from_integer(BigInt::from(ctx.eff_prec() * 3 / 4));
    let mut x = start.clone();
    let mut last: Option<Rat> = None;
    for _ in 0..96 {
        let px = tp_eval(ctx, q, &x);
        match ctx.val(top, &px) {
            Val::AtLeastPrec => return Ok(x),
            Val::Known(v) => {
                if v >= good {
                    return Ok(x);
                }
                if let Some(lv) = &last {
                    if &v <= lv {
                        if std::env::var("G2RED_TRACE").is_ok() {
                            eprintln!("polish stall at v(P) = {v}");
                        }
                        return Err(Need::Precision);
                    }
                }
                last = Some(v);
            }
        }
        let dpx = tp_eval(ctx, dq, &x);
        if ctx.val(top, &dpx).is_zeroish() {
            return Err(Need::Precision);
        }
        let inv = ctx.try_inv(top, &dpx).ok_or(Need::Precision)?;
        let corr = ctx.mul(top, &px, &inv);
        x = ctx.sub(&x, &corr);
    }
    let px = tp_eval(ctx, q, &x);
    match ctx.val(top, &px) {
        Val::AtLeastPrec => Ok(x),
        Val::Known(v) if v >= Rat::from_integer(BigInt::from(ctx.eff_prec() / 2)) => Ok(x),
        _ => Err(Need::Precision),
    }
}

/// Simple-root Hensel lifting: requires `v(P(a)) > 2 v(P'(a))` and lifts to
/// `v(P(r)) >= target`.
pub fn hensel_lift(ctx: &TowerCtx, p: &TPoly, a: &Elem, target: &Rat) -> Result<Elem, String> {
    let top = ctx.top();
    let dp = tp_deriv(ctx, p);
    let pa = tp_eval(ctx, p, a);
    let dpa = tp_eval(ctx, &dp, a);
    let vd = match ctx.val(top, &dpa) {
        Val::Known(v) => v,
        Val::AtLeastPrec => return Err("P'(a) ~ 0: Newton condition violated".into()),
    };
    match ctx.val(top, &pa) {
        Val::AtLeastPrec => {}
        Val::Known(v) => {
            if v <= &vd * Rat::from_integer(BigInt::from(2)) {
                return Err(format!(
                    "Newton condition violated: v(P(a)) = {v} <= 2 v(P'(a)) = 2*{vd}"
                ));
            }
        }
    }
    if target > &Rat::from_integer(BigInt::from(ctx.prec)) {
        return Err("precision budget exceeded for requested target".into());
    }
    let mut x = a.clone();
    for _ in 0..96 {
        let px = tp_eval(ctx, p, &x);
        match ctx.val(top, &px) {
            Val::AtLeastPrec => return Ok(x),
            Val::Known(v) => {
                if &v >= target {
                    return Ok(x);
                }
            }
        }
        let dpx = tp_eval(ctx, &dp, &x);
        let inv = ctx.inv(top, &dpx);
        let corr = ctx.mul(top, &px, &inv);
        x = ctx.sub(&x, &corr);
    }
    Err("Hensel iteration did not reach the target precision".into())
}

/// Square root with tower growth: pushes the ramified step the square-root
/// machine asks for and retries until the root exists in the tower.
fn sqrt_with_growth(ctx: &mut TowerCtx, d0: &Elem) -> Result<Elem, Need> {
    let mut d = ensure_top(ctx, d0);
    for _ in 0..10 {
        match sqrt_elem(ctx, &d).map_err(Need::Internal)? {
            SqrtOutcome::Done(r) => return Ok(r),
            SqrtOutcome::NeedUnram(k) => return Err(Need::Unram(k)),
            SqrtOutcome::NeedRam { d: dd, d_val } => {
                if 2 * ctx.degree() > TOWER_DEGREE_CAP {
                    return Err(Need::TowerCap);
                }
                let step = if d_val.is_zero() {
                    // Unit obstruction: non-separating step, valuations via
                    // the norm, residue of the generator = sqrt of residue.
                    let res = ctx.residue(ctx.top(), &dd);
                    let one = ctx.one(ctx.top());
                    let omd = ctx.sub(&one, &dd);
                    let v1md = match ctx.val(ctx.top(), &omd) {
                        Val::Known(v) => v,
                        Val::AtLeastPrec => return Err(Need::Precision),
                    };
                    RamStep {
                        q: 2,
                        c: dd,
                        c_val: Rat::zero(),
                        sep: false,
                        gen_res: ctx.gf.sqrt(res),
                        gen2_val: Some(v1md / Rat::from_integer(BigInt::from(2))),
                    }
                } else {
                    RamStep {
                        q: 2,
                        c: dd,
                        c_val: d_val,
                        sep: true,
                        gen_res: 0,
                        gen2_val: None,
                    }
                };
                if std::env::var("G2RED_TRACE").is_ok() {
                    eprintln!("sqrt growth: push q=2 c_val={} sep={} (degree -> {})",
                        step.c_val, step.sep, 2 * ctx.degree());
                }
                ctx.steps.push(step);
                d = ensure_top(ctx, &d);
            }
        }
    }
    Err(Need::Internal("square-root growth loop did not settle".into()))
}

/// Roots of a quadratic (any coefficients) by completing the square.
fn quad_roots(ctx: &mut TowerCtx, q: &TPoly) -> Result<Vec<Elem>, Need> {
    let top0 = ctx.top();
    let a = ensure_top(ctx, &q[2]);
    let b = ensure_top(ctx, &q[1]);
    let c = ensure_top(ctx, &q[0]);
    let _ = top0;
    let top = ctx.top();
    // disc = b^2 - 4ac
    let b2 = ctx.mul(top, &b, &b);
    let ac = ctx.mul(top, &a, &c);
    let four_ac = ctx.shift2(&ac, 2);
    let disc = ctx.sub(&b2, &four_ac);
    if ctx.val(top, &disc).is_zeroish() {
        if std::env::var("G2RED_TRACE").is_ok() {
            eprintln!("quad disc numerically zero");
        }
        return Err(Need::Precision);
    }
    let s = sqrt_with_growth(ctx, &disc)?;
    let top = ctx.top();
    let a = ensure_top(ctx, &a);
    let b = ensure_top(ctx, &b);
    let twoa = ctx.shift2(&a, 1);
    let inv2a = ctx.try_inv(top, &twoa).ok_or(Need::Precision)?;
    let nb = ctx.neg(&b);
    let r1 = ctx.mul(top, &ctx.add(&nb, &s), &inv2a);
    let r2 = ctx.mul(top, &ctx.sub(&nb, &s), &inv2a);
    Ok(vec![r1, r2])
}

/// Lift the monic factor of degree `k` carrying exactly the k
/// positive-valuation roots of `ts` (all other roots have valuation <= 0).
/// Newton iteration on the k remainder coefficients of `ts mod Phi`.
fn lift_factor(ctx: &TowerCtx, ts: &TPoly, k: usize) -> Result<TPoly, Need> {
    let top = ctx.top();
    if std::env::var("G2RED_TRACE").is_ok() {
        let vals: Vec<String> = ts
            .iter()
            .map(|c| match ctx.val(top, c) {
                Val::Known(v) => v.to_string(),
                Val::AtLeastPrec => "-".into(),
            })
            .collect();
        eprintln!("lift_factor k={k} deg={} coeff vals [{}]", ts.len() - 1, vals.join(", "));
    }
    if ts.len() == k + 1 {
        // The factor is the whole polynomial; just make it monic.
        let lcinv = ctx.try_inv(top, &ts[k]).ok_or(Need::Precision)?;
        return Ok(ts.iter().map(|c| ctx.mul(top, c, &lcinv)).collect());
    }
    let mut b: Vec<Elem> = vec![ctx.zero(top); k];
    let good = Rat::from_integer(BigInt::from(ctx.eff_prec() * 3 / 4));
    let mut last: Option<Rat> = None;
    for _ in 0..96 {
        let mut phi = b.clone();
        phi.push(ctx.one(top));
        let (quo, rem) = tp_divmod_monic(ctx, ts, &phi);
        let g = |v: &TPoly, i: usize| v.get(i).cloned().unwrap_or_else(|| ctx.zero(top));
        let mut vmin: Option<Rat> = None;
        for i in 0..k {
            if let Val::Known(v) = ctx.val(top, &g(&rem, i)) {
                vmin = Some(match vmin {
                    None => v,
                    Some(w) => {
                        if v < w {
                            v
                        } else {
                            w
                        }
                    }
                });
            }
        }
        let vmin = match vmin {
            None => return Ok(phi),
            Some(v) => v,
        };
        if vmin >= good {
            return Ok(phi);
        }
        if let Some(lv) = &last {
            if &vmin <= lv {
                if std::env::var("G2RED_TRACE").is_ok() {
                    eprintln!("lift_factor stall at vmin = {vmin}");
                }
                return Err(Need::Precision);
            }
        }
        last = Some(vmin);
        // dR/db_j = -rem(Q x^j, Phi): columns of the k x k Jacobian.
        let mut cols: Vec<Vec<Elem>> = Vec::with_capacity(k);
        for j in 0..k {
            let mut qxj: TPoly = vec![ctx.zero(top); j];
            qxj.extend(quo.iter().cloned());
            let (_, rj) = tp_divmod_monic(ctx, &qxj, &phi);
            cols.push((0..k).map(|i| g(&rj, i)).collect());
        }
        let mut rhs: Vec<Elem> = (0..k).map(|i| g(&rem, i)).collect();
        let delta = ctx
            .solve_linear(top, &mut cols, &mut rhs)
            .ok_or(Need::Precision)?;
        for (bj, dj) in b.iter_mut().zip(delta.iter()) {
            *bj = ctx.add(bj, dj);
        }
    }
    Err(Need::Precision)
}

/// Roots of a monic quartic over the tower via the resolvent cubic:
/// depress, split `x^4 + p x^2 + q x + r = (x^2+sx+u)(x^2-sx+w)` with
/// `s^2` a nonzero root of `Y^3 + 2p Y^2 + (p^2-4r) Y - q^2`.
fn quartic_roots(
    ctx: &mut TowerCtx,
    phi: &TPoly,
    depth: usize,
) -> Result<Vec<Elem>, Need> {
    let top = ctx.top();
    let quarter = Rat::new(BigInt::from(-1), BigInt::from(4));
    let shift = ctx.scale_rat(&phi[3], &quarter);
    let dep = tp_translate(ctx, phi, &shift);
    let p = dep[2].clone();
    let q1 = dep[1].clone();
    let r = dep[0].clone();
    let roots_dep: Vec<Elem> = if ctx.val(top, &q1).is_zeroish() {
        // Biquadratic: z^2 + p z + r, then x = +-sqrt(z).
        let zs = quad_roots(ctx, &vec![r.clone(), p.clone(), ctx.one(top)])?;
        let mut out = Vec::new();
        for z in zs {
            let z = ensure_top(ctx, &z);
            let s = sqrt_with_growth(ctx, &z)?;
            let top2 = ctx.top();
            out = out.iter().map(|e| ensure_top(ctx, e)).collect();
            out.push(s.clone());
            out.push(ctx.neg(&ensure_top(ctx, &s)));
            let _ = top2;
        }
        out
    } else {
        let p2 = ctx.mul(top, &p, &p);
        let four_r = ctx.shift2(&r, 2);
        let q2 = ctx.mul(top, &q1, &q1);
        let resolvent: TPoly = vec![
            ctx.neg(&q2),
            ctx.sub(&p2, &four_r),
            ctx.shift2(&p, 1),
            ctx.one(top),
        ];
        let ys = split_all(ctx, &resolvent, false, depth + 1)?;
        // All roots are nonzero (product = q^2 != 0); pick one visible.
        let mut y0 = None;
        for y in &ys {
            if !ctx.val(ctx.top(), y).is_zeroish() {
                y0 = Some(y.clone());
                break;
            }
        }
        let y0 = y0.ok_or(Need::Precision)?;
        let s = sqrt_with_growth(ctx, &y0)?;
        let topn = ctx.top();
        let p = ensure_top(ctx, &p);
        let q1 = ensure_top(ctx, &q1);
        let s2 = ctx.mul(topn, &s, &s);
        let sinv = ctx.try_inv(topn, &s).ok_or(Need::Precision)?;
        let qs = ctx.mul(topn, &q1, &sinv);
        let half = Rat::new(BigInt::one(), BigInt::from(2));
        let base = ctx.add(&p, &s2);
        let w = ctx.scale_rat(&ctx.add(&base, &qs), &half);
        let u = ctx.scale_rat(&ctx.sub(&base, &qs), &half);
        let mut out = quad_roots(ctx, &vec![u, s.clone(), ctx.one(topn)])?;
        let topn2 = ctx.top();
        let s = ensure_top(ctx, &s);
        let w = ensure_top(ctx, &w);
        out = out.iter().map(|e| ensure_top(ctx, e)).collect();
        out.extend(quad_roots(ctx, &vec![w, ctx.neg(&s), ctx.one(topn2)])?);
        out.iter().map(|e| ensure_top(ctx, e)).collect()
    };
    // Undo the depression shift.
    let shift = ensure_top(ctx, &shift);
    Ok(roots_dep
        .iter()
        .map(|x| ctx.add(&ensure_top(ctx, x), &shift))
        .collect())
}

/// Solve a cluster polynomial whose positive-valuation roots (exactly k of
/// them) are wanted; dispatch on k.
fn solve_cluster(ctx: &mut TowerCtx, ts: &TPoly, k: usize, depth: usize) -> Result<Vec<Elem>, Need> {
    match k {
        2 => {
            let phi = lift_factor(ctx, ts, 2)?;
            quad_roots(ctx, &phi)
        }
        4 => {
            let phi = lift_factor(ctx, ts, 4)?;
            quartic_roots(ctx, &phi, depth)
        }
        3 | 5 => {
            let phi = lift_factor(ctx, ts, k)?;
            split_all(ctx, &phi, false, depth + 1)
        }
        _ => Err(Need::Internal(format!("cluster size {k} out of range"))),
    }
}

struct Segment {
    sigma: Rat,
    #[allow(dead_code)]
    len: usize,
}

fn lower_hull(pts: &[(usize, Rat)]) -> Vec<Segment> {
    let mut hull: Vec<(usize, Rat)> = Vec::new();
    for (i, v) in pts {
        while hull.len() >= 2 {
            let (x1, y1) = hull[hull.len() - 2].clone();
            let (x2, y2) = hull[hull.len() - 1].clone();
            let lhs = (&y2 - &y1) * Rat::from_integer(BigInt::from((i - x1) as i64));
            let rhs = (v - &y1) * Rat::from_integer(BigInt::from((x2 - x1) as i64));
            if lhs >= rhs {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push((*i, v.clone()));
    }
    let mut segs = Vec::new();
    for w in hull.windows(2) {
        let (x1, y1) = w[0].clone();
        let (x2, y2) = w[1].clone();
        let slope = (y2 - y1) / Rat::from_integer(BigInt::from((x2 - x1) as i64));
        segs.push(Segment { sigma: -slope, len: x2 - x1 });
    }
    segs
}

/// Split a tower polynomial into roots.  With `only_pos` set, only the roots
/// of strictly positive valuation are produced (translation recursion).
/// Debug hook used by integration probes.
pub fn debug_split(ctx: &mut TowerCtx, q0: &TPoly) -> Result<Vec<Elem>, Need> {
    split_all(ctx, q0, false, 0)
}

fn split_all(ctx: &mut TowerCtx, q0: &TPoly, only_pos: bool, depth: usize) -> Result<Vec<Elem>, Need> {
    if depth > MAX_DEPTH {
        return Err(Need::Internal("translation recursion depth exceeded".into()));
    }
    'restart: loop {
        let top = ctx.top();
        let q: TPoly = q0.iter().map(|c| ensure_top(ctx, c)).collect();
        let deg = q.len() - 1;
        let mut out: Vec<Elem> = Vec::new();
        if deg == 0 {
            return Ok(out);
        }
        if deg == 2 && !only_pos {
            return quad_roots(ctx, &q);
        }
        let dq = tp_deriv(ctx, &q);
        let mut pts: Vec<(usize, Rat)> = Vec::new();
        for (i, c) in q.iter().enumerate() {
            if let Val::Known(v) = ctx.val(top, c) {
                pts.push((i, v));
            }
        }
        if pts.last().map(|&(i, _)| i) != Some(deg) {
            if std::env::var("G2RED_TRACE").is_ok() {
                eprintln!("lc not visible");
            }
            return Err(Need::Precision);
        }
        let i0 = pts[0].0;
        if i0 > 0 {
            if only_pos {
                if i0 == 1 {
                    out.push(newton_polish(ctx, &q, &dq, &ctx.zero(top))?);
                } else {
                    // Two or more roots indistinguishable from the center.
                    return Err(Need::Precision);
                }
            } else {
                if i0 != 1 {
                    return Err(Need::Internal("multiple exact zero roots".into()));
                }
                out.push(ctx.zero(top));
            }
        }
        let edenom = ctx.value_denom();
        // Deepest segments first: the even-obstruction path consumes a
        // whole tail and divides off roots already found below it.
        let mut segments = lower_hull(&pts);
        segments.sort_by(|a, b| b.sigma.cmp(&a.sigma));
        let mut consumed_above: Option<Rat> = None;
        for seg in segments.iter() {
            if only_pos && seg.sigma <= Rat::zero() {
                continue;
            }
            if let Some(t) = &consumed_above {
                if &seg.sigma > t {
                    continue;
                }
            }
            let scaled = &seg.sigma * Rat::from_integer(BigInt::from(edenom));
            if !scaled.is_integer() {
                let den: i64 = scaled
                    .denom()
                    .try_into()
                    .map_err(|_| Need::Internal("denominator overflow".into()))?;
                let qprime = den as usize;
                let odd = {
                    let mut o = qprime;
                    while o % 2 == 0 {
                        o /= 2;
                    }
                    o
                };
                if odd > 1 {
                    // Tame plumbing: extend the value group by the odd part.
                    if ctx.degree() * odd > TOWER_DEGREE_CAP {
                        return Err(Need::TowerCap);
                    }
                    let c = ctx.monomial(&Rat::new(BigInt::one(), BigInt::from(edenom)));
                    ctx.steps.push(RamStep {
                        q: odd,
                        c,
                        c_val: Rat::new(BigInt::one(), BigInt::from(edenom)),
                        sep: true,
                        gen_res: 0,
                        gen2_val: None,
                    });
                    continue 'restart;
                }
                // Wild (2-power) slope denominator: committing to a pure
                // ramified step here can chase an unreachable point, so lift
                // the exact factor over the current tower and solve it in
                // closed form instead.
                let tau = Rat::new(scaled.floor().numer().clone(), BigInt::from(edenom));
                // Exact zero roots (valuation infinity) always sit in the
                // tail.
                let k: usize = i0
                    + segments
                        .iter()
                        .filter(|s2| s2.sigma > tau)
                        .map(|s2| s2.len)
                        .sum::<usize>();
                if k == deg && !matches!(deg, 2 | 4) {
                    // No representable separator exists below the whole
                    // polygon; grow the value group once and retry.  The
                    // square-root machine repairs any field mismatch when
                    // the clusters later reduce to pairs.
                    if ctx.even_plumbs >= 2 || ctx.degree() * qprime > TOWER_DEGREE_CAP {
                        return Err(Need::Internal(
                            "wild cluster did not separate".into(),
                        ));
                    }
                    ctx.even_plumbs += 1;
                    let c = ctx.monomial(&Rat::new(BigInt::one(), BigInt::from(edenom)));
                    ctx.steps.push(RamStep {
                        q: qprime,
                        c,
                        c_val: Rat::new(BigInt::one(), BigInt::from(edenom)),
                        sep: true,
                        gen_res: 0,
                        gen2_val: None,
                    });
                    continue 'restart;
                }
                // Scale so the whole tail above tau is the positive part,
                // then divide off the deeper roots already found.
                let m0 = ctx.monomial(&tau);
                let sc_raw = tp_scale_var(ctx, &q, &m0);
                let mut wmin: Option<Rat> = None;
                for c in &sc_raw {
                    if let Val::Known(v) = ctx.val(top, c) {
                        wmin = Some(match wmin {
                            None => v,
                            Some(w) => {
                                if v < w {
                                    v
                                } else {
                                    w
                                }
                            }
                        });
                    }
                }
                let wmin = wmin.ok_or(Need::Precision)?;
                let nrm = ctx.try_inv(top, &ctx.monomial(&wmin)).ok_or(Need::Precision)?;
                let sc: TPoly = sc_raw.iter().map(|c| ctx.mul(top, c, &nrm)).collect();
                let mut factor = lift_factor(ctx, &sc, k)?;
                let m0inv = ctx.try_inv(top, &m0).ok_or(Need::Precision)?;
                for r in &out {
                    let in_tail = match ctx.val(top, r) {
                        Val::Known(v) => v > tau,
                        Val::AtLeastPrec => true,
                    };
                    if in_tail {
                        let ur = ctx.mul(top, r, &m0inv);
                        let lin = vec![ctx.neg(&ur), ctx.one(top)];
                        let (quo, _) = tp_divmod_monic(ctx, &factor, &lin);
                        factor = quo;
                    }
                }
                let kf = factor.len() - 1;
                let cluster_roots = match kf {
                    0 => vec![],
                    1 => vec![ctx.neg(&factor[0])],
                    2 => quad_roots(ctx, &factor)?,
                    4 => quartic_roots(ctx, &factor, depth)?,
                    _ => solve_cluster(ctx, &factor, kf, depth)?,
                };
                if ctx.top() != top {
                    continue 'restart;
                }
                for u in cluster_roots {
                    let r = ctx.mul(top, &m0, &u);
                    out.push(newton_polish(ctx, &q, &dq, &r).unwrap_or(r));
                }
                consumed_above = Some(tau);
                continue;
            }
            let m = ctx.monomial(&seg.sigma);
            // S(u) = Q(m u) normalized to minimal valuation zero.
            let s_raw = tp_scale_var(ctx, &q, &m);
            let mut wmin: Option<Rat> = None;
            for c in &s_raw {
                if let Val::Known(v) = ctx.val(top, c) {
                    wmin = Some(match wmin {
                        None => v,
                        Some(w) => {
                            if v < w {
                                v
                            } else {
                                w
                            }
                        }
                    });
                }
            }
            let wmin = wmin.ok_or(Need::Precision)?;
            let m0inv = ctx.inv(top, &ctx.monomial(&wmin));
            let s: TPoly = s_raw.iter().map(|c| ctx.mul(top, c, &m0inv)).collect();
            let sbar = GfPoly::new(
                s.iter()
                    .map(|c| match ctx.val(top, c) {
                        Val::Known(v) if v.is_zero() => ctx.residue(top, c),
                        _ => 0,
                    })
                    .collect(),
            );
            let ord0 = sbar.0.iter().take_while(|&&b| b == 0).count();
            let tbar = GfPoly::new(sbar.0[ord0.min(sbar.0.len())..].to_vec());
            if tbar.degree().unwrap_or(0) == 0 {
                continue;
            }
            for (phi, mult) in factor(&tbar, &ctx.gf) {
                let pd = phi.degree().unwrap_or(0);
                if pd == 0 {
                    continue;
                }
                if pd > 1 {
                    return Err(Need::Unram(pd));
                }
                let zbar = phi.0[0]; // root of x + zbar in characteristic 2
                if zbar == 0 {
                    continue; // zero residues belong to deeper segments
                }
                let zhat = ctx.lift_gf(top, zbar);
                let center = ctx.mul(top, &m, &zhat);
                if mult == 1 {
                    out.push(newton_polish(ctx, &q, &dq, &center)?);
                    continue;
                }
                // Cluster of `mult` roots at distance > sigma from center:
                // translate and rescale so they become the positive part.
                let t = tp_translate(ctx, &q, &center);
                let ts_raw = tp_scale_var(ctx, &t, &m);
                let mut w2: Option<Rat> = None;
                for c in &ts_raw {
                    if let Val::Known(v) = ctx.val(top, c) {
                        w2 = Some(match w2 {
                            None => v,
                            Some(w) => {
                                if v < w {
                                    v
                                } else {
                                    w
                                }
                            }
                        });
                    }
                }
                let w2 = w2.ok_or(Need::Precision)?;
                let m2inv = ctx.inv(top, &ctx.monomial(&w2));
                let ts: TPoly = ts_raw.iter().map(|c| ctx.mul(top, c, &m2inv)).collect();

                let sub_roots = match mult {
                    2 | 4 => solve_cluster(ctx, &ts, mult, depth)?,
                    _ => split_all(ctx, &ts, true, depth + 1)?,
                };

                if ctx.top() != top {
                    // The tower grew inside; restart this invocation so all
                    // cached elements live at the new level.
                    continue 'restart;
                }
                for u in sub_roots {
                    let r = ctx.add(&center, &ctx.mul(top, &m, &u));
                    // The cluster solvers identify the roots; a final Newton
                    // pass against the original polynomial restores full
                    // working accuracy after the coordinate games.
                    out.push(newton_polish(ctx, &q, &dq, &r).unwrap_or(r));
                }
            }
        }
        if !only_pos && out.len() != deg {
            return Err(Need::Precision);
        }
        return Ok(out);
    }
}

#[allow(dead_code)]
fn elem_debug(ctx: &TowerCtx, e: &Elem, lvl: usize) -> String {
    match e {
        Elem::Base(x) => format!(
            "B[{}]",
            x.iter()
                .map(|d| d.val().map(|v| v.to_string()).unwrap_or("-".into()))
                .collect::<Vec<_>>()
                .join(",")
        ),
        Elem::Ext(v) => format!(
            "E({})[{}]",
            if ctx.steps[lvl - 1].sep { "sep" } else { "ns" },
            v.iter()
                .map(|c| elem_debug(ctx, c, lvl - 1))
                .collect::<Vec<_>>()
                .join(" | ")
        ),
    }
}

/// The certification gate: difference-valuation multiset, residuals,
/// polynomial rebuild, and Newton-polygon agreement.
fn certify(
    ctx: &TowerCtx,
    p: &RatPoly,
    roots: &[Elem],
    oracle: &[ExtRat],
    np: &NewtonPolygon,
) -> bool {
    let trace = std::env::var("G2RED_TRACE").is_ok();
    let deg = p.degree().unwrap();
    if roots.len() != deg {
        if trace { eprintln!("certify: count {} != {}", roots.len(), deg); }
        return false;
    }
    let top = ctx.top();
    let half = Rat::from_integer(BigInt::from(ctx.eff_prec() / 2));
    let tp = tpoly_from_rat(ctx, p);
    for r in roots {
        let pr = tp_eval(ctx, &tp, r);
        if trace {
            let rv = match ctx.val(top, r) { Val::Known(v) => v.to_string(), _ => "inf".into() };
            let pv = match ctx.val(top, &pr) { Val::Known(v) => v.to_string(), _ => "inf".into() };
            eprintln!("certify: root val {rv} residual {pv} (half = {half})");
        }
        if let Val::Known(v) = ctx.val(top, &pr) {
            if v < half {
                return false;
            }
        }
    }
    // Pairwise difference valuations (each unordered pair counted twice).
    let mut diffs: Vec<ExtRat> = Vec::new();
    for i in 0..roots.len() {
        for j in (i + 1)..roots.len() {
            let d = ctx.sub(&roots[i], &roots[j]);
            match ctx.val(top, &d) {
                Val::Known(v) => {
                    diffs.push(ExtRat::Fin(v.clone()));
                    diffs.push(ExtRat::Fin(v));
                }
                Val::AtLeastPrec => {
                    if trace { eprintln!("certify: diff ({i},{j}) below precision"); }
                    return false;
                }
            }
        }
    }
    diffs.sort();
    if diffs != oracle {
        if trace {
            eprintln!("certify: diffs {:?}", diffs.iter().map(|d| d.to_string()).collect::<Vec<_>>());
            eprintln!("certify: oracle {:?}", oracle.iter().map(|d| d.to_string()).collect::<Vec<_>>());
        }
        return false;
    }
    // Root valuations match the Newton polygon.
    let mut got: Vec<ExtRat> = roots
        .iter()
        .map(|r| match ctx.val(top, r) {
            Val::Known(v) => ExtRat::Fin(v),
            Val::AtLeastPrec => ExtRat::Inf,
        })
        .collect();
    got.sort();
    let mut want: Vec<ExtRat> = Vec::new();
    for _ in 0..np.zero_roots {
        want.push(ExtRat::Inf);
    }
    for (v, l) in np.root_valuations() {
        for _ in 0..l {
            want.push(ExtRat::Fin(v.clone()));
        }
    }
    want.sort();
    if got != want {
        if trace { eprintln!("certify: root vals {:?} want {:?}", got.iter().map(|d| d.to_string()).collect::<Vec<_>>(), want.iter().map(|d| d.to_string()).collect::<Vec<_>>()); }
        return false;
    }
    // Coefficientwise rebuild: lc * prod (x - r_i) == P.
    let mut poly: TPoly = vec![ctx.one(top)];
    for r in roots {
        let mut next: TPoly = vec![ctx.zero(top); poly.len() + 1];
        let nr = ctx.neg(r);
        for (i, c) in poly.iter().enumerate() {
            next[i + 1] = ctx.add(&next[i + 1], c);
            let t = ctx.mul(top, c, &nr);
            next[i] = ctx.add(&next[i], &t);
        }
        poly = next;
    }
    let lc = ctx.from_rat(top, &p.lc());
    for (i, c) in poly.iter().enumerate() {
        let scaled = ctx.mul(top, c, &lc);
        let want = ctx.from_rat(top, &p.coeff(i));
        let d = ctx.sub(&scaled, &want);
        if let Val::Known(v) = ctx.val(top, &d) {
            if v < half {
                if trace {
                    eprintln!("certify: rebuild coeff {i} off by val {v}");
                    eprintln!("  structure: {}", elem_debug(ctx, &d, top));
                }
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactq::parse_rat;

    fn vals_of(out: &LocalRootsOutput) -> Vec<ExtRat> {
        let mut v: Vec<ExtRat> = out
            .roots
            .iter()
            .map(|r| match out.ctx.val(out.ctx.top(), r) {
                Val::Known(q) => ExtRat::Fin(q),
                Val::AtLeastPrec => ExtRat::Inf,
            })
            .collect();
        v.sort();
        v
    }

    #[test]
    fn rational_roots() {
        // x(x-1)(x-2)(x-3)(x-4): trivial tower, rational roots.
        let p = RatPoly::from_ints(&[0, 24, -50, 35, -10, 1]);
        let out = local_roots(&p, None).unwrap();
        assert_eq!(out.tower.e, 1);
        assert_eq!(out.tower.f, 1);
        assert_eq!(out.roots.len(), 5);
    }

    #[test]
    fn x2_minus_2_needs_eisenstein() {
        let p = RatPoly::from_ints(&[-2, 0, 1]);
        let out = local_roots(&p, None).unwrap();
        assert_eq!(out.tower.e, 2);
        assert_eq!(out.tower.f, 1);
        assert_eq!(
            vals_of(&out),
            vec![
                ExtRat::Fin(parse_rat("1/2").unwrap()),
                ExtRat::Fin(parse_rat("1/2").unwrap())
            ]
        );
    }

    #[test]
    fn x2_plus_1_lands_in_the_right_quadratic() {
        let p = RatPoly::from_ints(&[1, 0, 1]);
        let out = local_roots(&p, None).unwrap();
        assert_eq!(out.tower.e, 2, "Q2(i) is ramified quadratic");
        // i^2 + 1 ~ 0 was certified by the oracle: v(r1 - r2) = v(2i) = 1.
    }

    #[test]
    fn x5_minus_1_unramified_quartic() {
        let p = RatPoly::from_ints(&[-1, 0, 0, 0, 0, 1]);
        let out = local_roots(&p, None).unwrap();
        assert_eq!(out.tower.f, 4, "order of 2 mod 5 is 4");
        assert_eq!(out.tower.e, 1);
        assert_eq!(out.roots.len(), 5);
    }

    #[test]
    fn x2_plus_x_plus_1_unramified() {
        let p = RatPoly::from_ints(&[1, 1, 1]);
        let out = local_roots(&p, None).unwrap();
        assert_eq!(out.tower.f, 2);
        assert_eq!(out.tower.e, 1);
    }

    #[test]
    fn hensel_lift_example() {
        // (x^2 - 17, a = 1, N = 10): v(P(1)) = 4 > 2 v(P'(1)) = 2.
        let ctx = TowerCtx::new(1, 256);
        let p = tpoly_from_rat(&ctx, &RatPoly::from_ints(&[-17, 0, 1]));
        let a = ctx.one(0);
        let r = hensel_lift(&ctx, &p, &a, &parse_rat("10").unwrap()).unwrap();
        let pr = tp_eval(&ctx, &p, &r);
        match ctx.val(0, &pr) {
            Val::Known(v) => assert!(v >= parse_rat("10").unwrap()),
            Val::AtLeastPrec => {}
        }
        // r = 1 (mod 8): first correction has valuation 3.
        let d = ctx.sub(&r, &a);
        match ctx.val(0, &d) {
            Val::Known(v) => assert!(v >= parse_rat("3").unwrap()),
            Val::AtLeastPrec => panic!("correction should be nonzero"),
        }
        // Exact root fixed point: x - 5 at 5.
        let p5 = tpoly_from_rat(&ctx, &RatPoly::from_ints(&[-5, 1]));
        let five = ctx.from_rat(0, &parse_rat("5").unwrap());
        let r5 = hensel_lift(&ctx, &p5, &five, &parse_rat("40").unwrap()).unwrap();
        assert!(ctx.val(0, &ctx.sub(&r5, &five)).is_zeroish());
    }

    #[test]
    fn newton_condition_rejected() {
        let ctx = TowerCtx::new(1, 128);
        let p = tpoly_from_rat(&ctx, &RatPoly::from_ints(&[-3, 0, 1]));
        let a = ctx.one(0);
        // v(P(1)) = v(-2) = 1, v(P'(1)) = 1: condition fails.
        assert!(hensel_lift(&ctx, &p, &a, &parse_rat("10").unwrap()).is_err());
    }

    #[test]
    fn golden_quintic_difference_structure() {
        // x^5 + x^4 - 4x^3 - 10x^2 + 12x: roots 0, 2, 1, -2 +- i sqrt(2).
        let p = RatPoly::from_ints(&[0, 12, -10, -4, 1, 1]);
        let out = local_roots(&p, None).unwrap();
        assert_eq!(out.roots.len(), 5);
        let mut diffs: Vec<ExtRat> = Vec::new();
        let top = out.ctx.top();
        for i in 0..5 {
            for j in (i + 1)..5 {
                let d = out.ctx.sub(&out.roots[i], &out.roots[j]);
                if let Val::Known(v) = out.ctx.val(top, &d) {
                    diffs.push(ExtRat::Fin(v));
                }
            }
        }
        diffs.sort();
        // Pairs: {0,2} at depth 1, {-2 +- isqrt2} at depth 3/2.
        assert_eq!(diffs.iter().filter(|d| **d == ExtRat::from_int(1)).count(), 1);
        assert_eq!(
            diffs
                .iter()
                .filter(|d| **d == ExtRat::Fin(parse_rat("3/2").unwrap()))
                .count(),
            1
        );
    }

    #[test]
    fn random_certification_matches_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let mut done = 0;
        while done < 40 {
            let deg = rng.gen_range(2..=6usize);
            let mut cs: Vec<i64> = (0..=deg).map(|_| rng.gen_range(-100..=100)).collect();
            if cs[deg] == 0 {
                cs[deg] = 1;
            }
            let p = RatPoly::from_ints(&cs);
            if p.degree() != Some(deg) || discriminant(&p).is_zero() {
                continue;
            }
            done += 1;
            let out = local_roots(&p, None).expect("splitting failed");
            assert_eq!(out.roots.len(), deg, "coeffs {:?}", cs);
        }
    }
}
