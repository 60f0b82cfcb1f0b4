//! Normalization of the branch polynomial (anchors to 0 and infinity,
//! rescaling so that v(a) = alpha + 2 epsilon and v(e) = beta) and the
//! invariant `delta' = v(J8 of the normalized form)/8 + 2`, computed with
//! certified precision and cross-checked against the exact transformation
//! law of J8.

use crate::clustertree::{Anchors, BranchConfig, BranchPoint, TreeParams};
use crate::exactq::{val2, ExtRat, Rat, RatPoly, Sextic};
use crate::igusa::{igusa_invariants, igusa_j2468, Form, QAlg, D8, W8};
use crate::localfield::roots::LocalRootsOutput;
use crate::localfield::tower::{Elem, TowerCtx, Val};
use num::{BigInt, One, Zero};

/// Tower element with its context, so the generic invariant formulas run
/// unchanged over local fields.
#[derive(Clone)]
pub struct TElem<'a> {
    pub ctx: &'a TowerCtx,
    pub e: Elem,
}

impl<'a> QAlg for TElem<'a> {
    fn qa_add(&self, o: &Self) -> Self {
        TElem { ctx: self.ctx, e: self.ctx.add(&self.e, &o.e) }
    }
    fn qa_sub(&self, o: &Self) -> Self {
        TElem { ctx: self.ctx, e: self.ctx.sub(&self.e, &o.e) }
    }
    fn qa_mul(&self, o: &Self) -> Self {
        TElem { ctx: self.ctx, e: self.ctx.mul(self.ctx.top(), &self.e, &o.e) }
    }
    fn qa_scale(&self, q: &Rat) -> Self {
        TElem { ctx: self.ctx, e: self.ctx.scale_rat(&self.e, q) }
    }
    fn qa_zero(&self) -> Self {
        TElem { ctx: self.ctx, e: self.ctx.zero(self.ctx.top()) }
    }
}

/// Per-condition outcomes of the normalization bracket.
#[derive(Clone, Debug, serde::Serialize)]
pub struct BracketChecks {
    pub va_matches: bool,
    pub ve_matches: bool,
    pub vdisc_matches: bool,
    pub vb_at_least_epsilon: bool,
    pub vb_equals_epsilon_when_alpha_positive: bool,
}

impl BracketChecks {
    pub fn all(&self) -> bool {
        self.va_matches
            && self.ve_matches
            && self.vdisc_matches
            && self.vb_at_least_epsilon
            && self.vb_equals_epsilon_when_alpha_positive
    }
}

/// The composed substitution and rescaling data: the Moebius sending
/// P2 to infinity and P1 to 0, the valuation `s` of the x-rescaling factor
/// and `t` of the form rescaling, and the transformed quintic form.
pub struct NormalizationRecord {
    /// Binary-sextic coefficients of `F0 o M` over the splitting tower
    /// (both end coefficients vanish: 0 and infinity are branch points).
    pub f_moebius: Vec<Elem>,
    /// Valuation of det M.
    pub det_val: Rat,
    /// x-rescaling exponent: x -> 2^s x.
    pub s: Rat,
    /// Form rescaling exponent: F -> 2^t F.
    pub t: Rat,
    /// Valuations of the normalized coefficients a, b (may be infinite), e,
    /// and of the quintic discriminant.
    pub va: Rat,
    pub vb: ExtRat,
    pub ve: Rat,
    pub vdisc: Rat,
    pub checks: BracketChecks,
}

fn known(ctx: &TowerCtx, e: &Elem, what: &str) -> Result<Rat, String> {
    match ctx.val(ctx.top(), e) {
        Val::Known(v) => Ok(v),
        Val::AtLeastPrec => Err(format!("{what} below working precision")),
    }
}

/// Apply the anchor Moebius substitution as a binary-form transform over the
/// tower and solve the two rescaling conditions.
pub fn normalize(
    f0: &RatPoly,
    out: &LocalRootsOutput,
    config: &BranchConfig,
    params: &TreeParams,
    anchors: &Anchors,
) -> Result<NormalizationRecord, String> {
    let ctx = &out.ctx;
    let top = ctx.top();
    let deg = f0.degree().ok_or("zero branch polynomial")?;
    if deg != 5 && deg != 6 {
        return Err(format!("branch polynomial degree {deg}"));
    }
    let point = |mark: usize| -> BranchPoint { config.points[mark] };
    let elem_of = |bp: BranchPoint| -> Option<Elem> {
        match bp {
            BranchPoint::Finite(i) => Some(out.roots[i].clone()),
            BranchPoint::Infinity => None,
        }
    };
    let p1 = point(anchors.p1);
    let p2 = point(anchors.p2);
    // Substitution matrix with columns (p2 | p1): G(X,Z) = F0(p2 X + p1 Z,
    // X + Z) has G(1,0) = 0 (P2 at infinity) and G(0,1) = 0 (P1 at zero).
    let one = ctx.one(top);
    let zero = ctx.zero(top);
    let (m00, m01, m10, m11, det_val) = match (elem_of(p1), elem_of(p2)) {
        (Some(e1), Some(e2)) => {
            let d = ctx.sub(&e2, &e1);
            let dv = known(ctx, &d, "det of the anchor substitution")?;
            (e2, e1, one.clone(), one.clone(), dv)
        }
        (Some(e1), None) => (one.clone(), e1, zero.clone(), one.clone(), Rat::zero()),
        (None, Some(e2)) => (e2, one.clone(), one.clone(), zero.clone(), Rat::zero()),
        (None, None) => unreachable!("two points at infinity"),
    };
    // Binary-form substitution over the tower.
    let f0s = Sextic::from_poly(f0);
    let te = |e: &Elem| TElem { ctx, e: e.clone() };
    let coeffs: Vec<TElem> = f0s.0.iter().map(|c| TElem { ctx, e: ctx.from_rat(top, c) }).collect();
    let g = transform_sextic(
        &coeffs,
        &[[te(&m00), te(&m01)], [te(&m10), te(&m11)]],
    );
    let g_elems: Vec<Elem> = g.iter().map(|t| t.e.clone()).collect();
    // Shape checks: ends vanish to precision.
    for (idx, label) in [(0usize, "constant"), (6usize, "sextic")] {
        if let Val::Known(v) = ctx.val(top, &g_elems[idx]) {
            let floor = Rat::from_integer(BigInt::from(ctx.eff_prec() / 4));
            if v < floor {
                return Err(format!(
                    "{label} coefficient of the transformed form is visibly nonzero (val {v})"
                ));
            }
        }
    }
    let va_t = known(ctx, &g_elems[1], "coefficient a of the transformed form")?;
    let ve_t = known(ctx, &g_elems[5], "coefficient e of the transformed form")?;
    // Solve t + s = alpha + 2 eps - va_t, t + 5s = beta - ve_t.
    let alpha2eps = &params.alpha + &params.epsilon * Rat::from_integer(BigInt::from(2));
    let four = Rat::from_integer(BigInt::from(4));
    let s = ((&params.beta - &ve_t) - (&alpha2eps - &va_t)) / four;
    let t = &alpha2eps - &va_t - &s;
    let va = &va_t + &t + &s;
    let ve = &ve_t + &t + &s * Rat::from_integer(BigInt::from(5));
    let two = Rat::from_integer(BigInt::from(2));
    let vb = match ctx.val(top, &g_elems[2]) {
        Val::Known(v) => ExtRat::Fin(v + &t + &s * &two),
        Val::AtLeastPrec => ExtRat::Inf,
    };
    // Quintic discriminant valuation from transformed root differences.
    let vdisc_g = transformed_disc_val(f0, out, anchors, config)?;
    let vdisc = &vdisc_g
        + &t * Rat::from_integer(BigInt::from(8))
        + &s * Rat::from_integer(BigInt::from(20));
    let want_vdisc = &params.alpha * &two
        + &params.gamma * &two
        + &params.epsilon * Rat::from_integer(BigInt::from(6));
    let eps_recomputed = {
        let half_disc_minus_va = &vdisc / &two - &va;
        match &vb {
            ExtRat::Fin(v) => v.clone().min(half_disc_minus_va),
            ExtRat::Inf => half_disc_minus_va,
        }
    };
    let checks = BracketChecks {
        va_matches: va == alpha2eps,
        ve_matches: ve == params.beta,
        vdisc_matches: vdisc == want_vdisc,
        vb_at_least_epsilon: match &vb {
            ExtRat::Fin(v) => *v >= params.epsilon,
            ExtRat::Inf => true,
        },
        vb_equals_epsilon_when_alpha_positive: params.alpha.is_zero()
            || (eps_recomputed == params.epsilon
                && match &vb {
                    ExtRat::Fin(v) => *v == params.epsilon,
                    ExtRat::Inf => params.epsilon.is_zero() && vdisc.clone() / &two == va,
                }),
    };
    Ok(NormalizationRecord {
        f_moebius: g_elems,
        det_val,
        s,
        t,
        va,
        vb,
        ve,
        vdisc,
        checks,
    })
}

/// Generic binary-sextic substitution over any Q-algebra.
pub fn transform_sextic<R: QAlg>(coeffs: &[R], m: &[[R; 2]; 2]) -> Vec<R> {
    assert_eq!(coeffs.len(), 7);
    let zero = coeffs[0].qa_zero();
    let mut out = vec![zero.clone(); 7];
    for (a, c) in coeffs.iter().enumerate() {
        // c * (m00 X + m01 Z)^a (m10 X + m11 Z)^(6-a)
        let mut f = vec![c.clone()];
        for _ in 0..a {
            f = mul_lin(&f, &m[0][0], &m[0][1], &zero);
        }
        for _ in 0..(6 - a) {
            f = mul_lin(&f, &m[1][0], &m[1][1], &zero);
        }
        for (k, v) in f.iter().enumerate() {
            out[k] = out[k].qa_add(v);
        }
    }
    out
}

fn mul_lin<R: QAlg>(f: &[R], cx: &R, cz: &R, zero: &R) -> Vec<R> {
    let mut out = vec![zero.clone(); f.len() + 1];
    for (i, c) in f.iter().enumerate() {
        out[i + 1] = out[i + 1].qa_add(&c.qa_mul(cx));
        out[i] = out[i].qa_add(&c.qa_mul(cz));
    }
    out
}

/// Valuation of the quintic discriminant of `F0 o M` from the certified
/// pairwise root-difference valuations (no symbolic discriminant needed):
/// `disc = lc^8 prod (rho_i - rho_j)^2` over the five affine roots.
fn transformed_disc_val(
    f0: &RatPoly,
    out: &LocalRootsOutput,
    anchors: &Anchors,
    config: &BranchConfig,
) -> Result<Rat, String> {
    let ctx = &out.ctx;
    let top = ctx.top();
    let p1 = config.points[anchors.p1];
    let p2 = config.points[anchors.p2];
    let n = out.roots.len();
    // Raw pairwise valuations (certified by the root finder).
    let vv = |i: usize, j: usize| -> Result<Rat, String> {
        let d = ctx.sub(&out.roots[i], &out.roots[j]);
        known(ctx, &d, "root difference")
    };
    // The five branch points other than p2 map to the affine roots of G.
    let marks: Vec<BranchPoint> = config
        .points
        .iter()
        .cloned()
        .filter(|bp| *bp != p2)
        .collect();
    // v(rho_i - rho_j) per Moebius case.
    let vp2 = |bp: BranchPoint| -> Result<Rat, String> {
        match (bp, p2) {
            (BranchPoint::Finite(i), BranchPoint::Finite(j)) => vv(i, j),
            _ => unreachable!(),
        }
    };
    let mut pair_vals: Vec<Rat> = Vec::new();
    match p2 {
        BranchPoint::Infinity => {
            // rho_i = r_i - p1-ish translate: differences are raw.
            for i in 0..marks.len() {
                for j in (i + 1)..marks.len() {
                    match (marks[i], marks[j]) {
                        (BranchPoint::Finite(a), BranchPoint::Finite(b)) => {
                            pair_vals.push(vv(a, b)?)
                        }
                        _ => unreachable!("infinity equals p2 here"),
                    }
                }
            }
        }
        BranchPoint::Finite(j2) => {
            // rho for finite r: depends on whether p1 is finite.
            // Both cases give rho_a - rho_b = (r_a - r_b) * k /
            // ((r_a - p2)(r_b - p2)) with v(k) = v(det M); the infinity
            // branch point has rho = const with rho_inf - rho_b =
            // k' / (r_b - p2).
            let det_like = match p1 {
                BranchPoint::Finite(j1) => vv(j1, j2)?,
                BranchPoint::Infinity => Rat::zero(),
            };
            for i in 0..marks.len() {
                for j in (i + 1)..marks.len() {
                    match (marks[i], marks[j]) {
                        (BranchPoint::Finite(a), BranchPoint::Finite(b)) => {
                            let v = vv(a, b)? + &det_like - vp2(marks[i])? - vp2(marks[j])?;
                            pair_vals.push(v);
                        }
                        (BranchPoint::Finite(a), BranchPoint::Infinity)
                        | (BranchPoint::Infinity, BranchPoint::Finite(a)) => {
                            let v = &det_like - vv(a, j2)?;
                            pair_vals.push(v);
                        }
                        _ => unreachable!(),
                    }
                }
            }
            let _ = n;
        }
    }
    assert_eq!(pair_vals.len(), 10);
    // lc of G: the x^5 coefficient valuation.
    // Recover it from the transform: cheaper to evaluate directly.
    // disc5 = lc^8 prod diffs^2.
    // The caller already certified lc's valuation; recompute here.
    let te = |q: &Rat| TElem { ctx, e: ctx.from_rat(top, q) };
    let one = TElem { ctx, e: ctx.one(top) };
    let zero = TElem { ctx, e: ctx.zero(top) };
    let el = |bp: BranchPoint| -> TElem {
        match bp {
            BranchPoint::Finite(i) => TElem { ctx, e: out.roots[i].clone() },
            BranchPoint::Infinity => unreachable!(),
        }
    };
    let f0s = Sextic::from_poly(f0);
    let coeffs: Vec<TElem> = f0s.0.iter().map(|c| te(c)).collect();
    let m = match (p1, p2) {
        (BranchPoint::Finite(_), BranchPoint::Finite(_)) => {
            [[el(p2), el(p1)], [one.clone(), one.clone()]]
        }
        (BranchPoint::Finite(_), BranchPoint::Infinity) => {
            [[one.clone(), el(p1)], [zero.clone(), one.clone()]]
        }
        (BranchPoint::Infinity, BranchPoint::Finite(_)) => {
            [[el(p2), one.clone()], [one.clone(), zero.clone()]]
        }
        _ => unreachable!(),
    };
    let g = transform_sextic(&coeffs, &m);
    let lc5 = known(ctx, &g[5].e, "quintic leading coefficient")?;
    let mut acc = lc5 * Rat::from_integer(BigInt::from(8));
    for v in pair_vals {
        acc += v * Rat::from_integer(BigInt::from(2));
    }
    Ok(acc)
}

/// Diagnostics from the delta' evaluation.
#[derive(Clone, Debug, serde::Serialize)]
pub struct DeltaDiagnostics {
    pub j8_zero_exact: bool,
    pub weight_shift_checked: bool,
}

/// `delta' = v(J8(F_norm))/8 + 2`; `+infinity` exactly when `J8(F0) = 0`
/// as a rational number (the transformation law moves J8 by an invertible
/// scalar, so one vanishes iff the other does).  The tower evaluation is the
/// primary path; the exact weight-shift identity is a mandatory cross-check.
pub fn delta_prime(
    f0: &RatPoly,
    out: &LocalRootsOutput,
    record: &NormalizationRecord,
) -> Result<(ExtRat, DeltaDiagnostics), String> {
    let j8_f0 = igusa_invariants(f0)?.j8;
    if j8_f0.is_zero() {
        return Ok((
            ExtRat::Inf,
            DeltaDiagnostics { j8_zero_exact: true, weight_shift_checked: false },
        ));
    }
    let ctx = &out.ctx;
    let top = ctx.top();
    let form = Form::new(
        6,
        record
            .f_moebius
            .iter()
            .map(|e| TElem { ctx, e: e.clone() })
            .collect(),
    );
    let j8_g = igusa_j2468(&form).3;
    let vj8_g = known(ctx, &j8_g.e, "J8 of the transformed form")?;
    // Mandatory cross-check: v(J8(G)) = v(J8(F0)) + W8 v(det M).
    let vj8_f0 = match val2(&j8_f0) {
        ExtRat::Fin(v) => v,
        ExtRat::Inf => unreachable!(),
    };
    let predicted = &vj8_f0 + &record.det_val * Rat::from_integer(BigInt::from(W8 as i64));
    if vj8_g != predicted {
        return Err(format!(
            "weight-law cross-check failed: v(J8(G)) = {vj8_g}, predicted {predicted}"
        ));
    }
    let vj8_norm = &vj8_g
        + &record.t * Rat::from_integer(BigInt::from(D8 as i64))
        + &record.s * Rat::from_integer(BigInt::from(W8 as i64));
    let eight = Rat::from_integer(BigInt::from(8));
    let two = Rat::from_integer(BigInt::from(2));
    let dp = vj8_norm / eight + two;
    let _ = top;
    Ok((
        ExtRat::Fin(dp),
        DeltaDiagnostics { j8_zero_exact: false, weight_shift_checked: true },
    ))
}

/// Exact oracle for `delta = v(c - 2 sqrt(bd))` on normalized quintics with
/// `bd` a rational square; exposes both square-root branches.
pub fn delta_exact_oracle(
    a: &Rat,
    b: &Rat,
    c: &Rat,
    d: &Rat,
    e: &Rat,
    sq: &Rat,
) -> Result<(ExtRat, ExtRat), String> {
    if sq * sq != b * d {
        return Err("s^2 != b*d".into());
    }
    let _ = (a, e);
    let two = Rat::from_integer(BigInt::from(2));
    let plus = val2(&(c - sq * &two));
    let minus = val2(&(c + sq * &two));
    Ok((plus, minus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustertree::{choose_anchors, roots_and_tree};

    fn run_pipeline(f0: &RatPoly) -> (ExtRat, TreeParams, BracketChecks) {
        let deg = f0.degree().unwrap();
        let (out, config, tree, params) = roots_and_tree(f0, deg == 5, None).unwrap();
        let anchors = choose_anchors(&tree, &params);
        let record = normalize(f0, &out, &config, &params, &anchors).unwrap();
        assert!(record.checks.all(), "bracket checks failed: {:?}", record.checks);
        let (dp, _) = delta_prime(f0, &out, &record).unwrap();
        (dp, params, record.checks)
    }

    #[test]
    fn golden_quintic_delta_prime_is_one() {
        // x^5 + x^4 - 4x^3 - 10x^2 + 12x: expected tuple (1, 1/2, 1/2, 1, 0).
        let f0 = RatPoly::from_ints(&[0, 12, -10, -4, 1, 1]);
        let (dp, params, _) = run_pipeline(&f0);
        assert_eq!(params.alpha, crate::clustertree::rat(1, 1));
        assert_eq!(dp, ExtRat::from_int(1));
    }

    #[test]
    fn x5_minus_1_delta_prime_infinite() {
        let f0 = RatPoly::from_ints(&[-1, 0, 0, 0, 0, 1]);
        let (dp, params, _) = run_pipeline(&f0);
        assert!(params.alpha.is_zero());
        assert_eq!(dp, ExtRat::Inf);
    }

    #[test]
    fn scaled_branch_polynomial_same_delta_prime() {
        // F0 = 4f as produced from y^2 = f: tuple and delta' must agree with
        // the unscaled form.
        let f0 = RatPoly::from_ints(&[0, 12, -10, -4, 1, 1]);
        let f4 = f0.scale(&Rat::from_integer(BigInt::from(4)));
        let (dp, params, _) = run_pipeline(&f4);
        assert_eq!(params.alpha, crate::clustertree::rat(1, 1));
        assert_eq!(params.beta, crate::clustertree::rat(1, 2));
        assert_eq!(dp, ExtRat::from_int(1));
    }

    #[test]
    fn normalized_quintic_fixed_point() {
        // Already-normalized shape with P1 = 0, P2 = inf and conditions met:
        // s = t = 0 and the Moebius is a translation-free substitution.
        // x^5 - x = x(x^4 - 1): alpha = ... just assert s = t = 0 when the
        // conditions already hold.
        let f0 = RatPoly::from_ints(&[0, -1, 0, 0, 0, 1]);
        let deg = f0.degree().unwrap();
        let (out, config, tree, params) = roots_and_tree(&f0, deg == 5, None).unwrap();
        let anchors = choose_anchors(&tree, &params);
        let record = normalize(&f0, &out, &config, &params, &anchors).unwrap();
        assert!(record.checks.all());
        if params.alpha.is_zero() {
            // Equidistant: any anchors are admissible; rescaling must be
            // trivial since v(a~) = v(e~) = 0 already.
            assert!(record.s.is_zero());
            assert!(record.t.is_zero());
        }
    }

    #[test]
    fn delta_oracle_branches() {
        use crate::exactq::parse_rat;
        let two = parse_rat("2").unwrap();
        let (p, m) = delta_exact_oracle(
            &parse_rat("1").unwrap(),
            &two,
            &parse_rat("4").unwrap(),
            &two,
            &parse_rat("1").unwrap(),
            &two,
        )
        .unwrap();
        // c - 2s = 0 on the plus branch.
        assert_eq!(p, ExtRat::Inf);
        assert_eq!(m, ExtRat::from_int(3));
        // b = 0 forces s = 0 and both branches v(c).
        let (p, m) = delta_exact_oracle(
            &parse_rat("1").unwrap(),
            &parse_rat("0").unwrap(),
            &parse_rat("12").unwrap(),
            &two,
            &parse_rat("1").unwrap(),
            &parse_rat("0").unwrap(),
        )
        .unwrap();
        assert_eq!(p, ExtRat::from_int(2));
        assert_eq!(p, m);
    }

    #[test]
    fn anchor_alternatives_agree() {
        let f0 = RatPoly::from_ints(&[0, 12, -10, -4, 1, 1]);
        let deg = f0.degree().unwrap();
        let (out, config, tree, params) = roots_and_tree(&f0, deg == 5, None).unwrap();
        let anchors = choose_anchors(&tree, &params);
        let mut results = Vec::new();
        for &a1 in &anchors.alt1 {
            for &a2 in &anchors.alt2 {
                if a1 == a2 {
                    continue;
                }
                let alt = Anchors {
                    p1: a1,
                    p2: a2,
                    tie1: false,
                    tie2: false,
                    alt1: vec![a1],
                    alt2: vec![a2],
                };
                let record = normalize(&f0, &out, &config, &params, &alt).unwrap();
                assert!(record.checks.all());
                let (dp, _) = delta_prime(&f0, &out, &record).unwrap();
                results.push(dp);
            }
        }
        assert!(results.windows(2).all(|w| w[0] == w[1]), "{results:?}");
    }
}
