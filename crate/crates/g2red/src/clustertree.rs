//! The stable marked metric tree of the six branch points on the projective
//! line: built by single-linkage from pairwise difference valuations,
//! stabilized by contraction, with even/odd edge parities and the extraction
//! of (alpha, beta, gamma, epsilon) and of the two anchor points for
//! normalization.

use crate::exactq::{ExtRat, Rat};
use crate::localfield::roots::LocalRootsOutput;
use crate::localfield::tower::{Elem, Val};
use num::{BigInt, Zero};
use std::collections::BTreeSet;

/// One of the six branch points: a finite root (by index into the root list)
/// or the point at infinity (degree-5 branch polynomial).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchPoint {
    Finite(usize),
    Infinity,
}

/// The finitized configuration: six finite points with their pairwise
/// tree-meet matrix, plus the recorded substitution for downstream
/// normalization bookkeeping.
#[derive(Debug)]
pub struct BranchConfig {
    pub points: Vec<BranchPoint>,
    /// Pairwise meet depths after finitization; entry (i, j) is
    /// v(y_i - y_j) for the finitized images.
    pub pairwise: Vec<Vec<Rat>>,
    /// The Moebius substitution x -> 1/(x - c), when applied.
    pub moebius_c: Option<Elem>,
}

#[derive(Debug)]
pub enum FinitizeError {
    /// The residue field cannot separate the point at infinity; retry root
    /// finding with at least this residue degree.
    NeedResidueDegree(usize),
    Precision(String),
}

/// Möbius-normalize the branch points so all six are finite, recording the
/// substitution.  Identity for degree-6 branch polynomials: the stable tree
/// built below is insensitive to points beyond the unit region because
/// unstable vertices get contracted.
pub fn finitize(out: &LocalRootsOutput, has_infinity: bool) -> Result<BranchConfig, FinitizeError> {
    let ctx = &out.ctx;
    let top = ctx.top();
    let n = out.roots.len();
    let mut points: Vec<BranchPoint> = (0..n).map(BranchPoint::Finite).collect();
    if has_infinity {
        points.push(BranchPoint::Infinity);
    }
    assert_eq!(points.len(), 6, "genus-2 configuration needs 6 branch points");

    // Certified pairwise valuations of the raw roots.
    let mut root_vv = vec![vec![Rat::zero(); n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = ctx.sub(&out.roots[i], &out.roots[j]);
            match ctx.val(top, &d) {
                Val::Known(v) => {
                    root_vv[i][j] = v.clone();
                    root_vv[j][i] = v;
                }
                Val::AtLeastPrec => {
                    return Err(FinitizeError::Precision(format!(
                        "difference of roots {i},{j} below precision"
                    )))
                }
            }
        }
    }

    if !has_infinity {
        return Ok(BranchConfig { points, pairwise: root_vv, moebius_c: None });
    }

    // Choose c with residue distinct from every valuation-zero root.
    let mut used: BTreeSet<u64> = BTreeSet::new();
    used.insert(0); // keep c a unit so that v(c) = 0
    for r in &out.roots {
        if let Val::Known(v) = ctx.val(top, r) {
            if v.is_zero() {
                used.insert(ctx.residue(top, r));
            }
        }
    }
    let field_size = 1u64 << ctx.gf.f.min(63);
    let c_res = (0..field_size).find(|r| !used.contains(r));
    let c_res = match c_res {
        Some(r) => r,
        None => return Err(FinitizeError::NeedResidueDegree(ctx.gf.f * 2)),
    };
    let c = ctx.lift_gf(top, c_res);

    // v(r_i - c), needed for the image meets.
    let mut vc = Vec::with_capacity(n);
    for (i, r) in out.roots.iter().enumerate() {
        let d = ctx.sub(r, &c);
        match ctx.val(top, &d) {
            Val::Known(v) => vc.push(v),
            Val::AtLeastPrec => {
                return Err(FinitizeError::Precision(format!(
                    "root {i} collides with the finitization center"
                )))
            }
        }
    }

    // Images y_i = 1/(r_i - c), y_inf = 0:
    //   v(y_i - y_j) = v(r_i - r_j) - v(r_i - c) - v(r_j - c)
    //   v(y_i - y_inf) = -v(r_i - c).
    let m = n + 1;
    let mut pw = vec![vec![Rat::zero(); m]; m];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = &root_vv[i][j] - &vc[i] - &vc[j];
            pw[i][j] = v.clone();
            pw[j][i] = v;
        }
        let v = -vc[i].clone();
        pw[i][n] = v.clone();
        pw[n][i] = v;
    }
    Ok(BranchConfig { points, pairwise: pw, moebius_c: Some(c) })
}

/// A vertex of the stable marked tree; marks are branch-point ids 0..5.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeVertex {
    pub marks: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeEdge {
    pub a: usize,
    pub b: usize,
    pub len: Rat,
    /// Marks on the `b` side of the edge.
    pub inside: Vec<usize>,
    pub even: bool,
}

/// Stable marked metric tree of the six branch points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetricTree {
    pub vertices: Vec<TreeVertex>,
    pub edges: Vec<TreeEdge>,
}

impl MetricTree {
    pub fn vertex_of_mark(&self, mark: usize) -> usize {
        self.vertices
            .iter()
            .position(|v| v.marks.contains(&mark))
            .expect("mark not attached")
    }

    pub fn neighbors(&self, v: usize) -> Vec<(usize, &TreeEdge)> {
        let mut out = Vec::new();
        for e in &self.edges {
            if e.a == v {
                out.push((e.b, e));
            } else if e.b == v {
                out.push((e.a, e));
            }
        }
        out
    }

    /// Sum of edge lengths on the path between two vertices.
    pub fn path_length(&self, from: usize, to: usize) -> Rat {
        if from == to {
            return Rat::zero();
        }
        let mut parent: Vec<Option<(usize, Rat)>> = vec![None; self.vertices.len()];
        let mut seen = vec![false; self.vertices.len()];
        seen[from] = true;
        let mut stack = vec![from];
        while let Some(v) = stack.pop() {
            for (w, e) in self.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some((v, e.len.clone()));
                    stack.push(w);
                }
            }
        }
        let mut acc = Rat::zero();
        let mut cur = to;
        while cur != from {
            let (p, l) = parent[cur].clone().expect("disconnected tree");
            acc += l;
            cur = p;
        }
        acc
    }
}

#[derive(Debug)]
pub enum TreeError {
    Ultrametric(String),
    Invariant(String),
}

/// Single-linkage ultrametric tree of the six points with edge lengths equal
/// to depth differences, followed by contraction of unmarked degree-2
/// vertices and collapse of zero-length edges.
pub fn build_tree(config: &BranchConfig) -> Result<MetricTree, TreeError> {
    let pw = &config.pairwise;
    let n = pw.len();
    assert_eq!(n, 6);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if i != j && j != k && i != k {
                    let lhs = &pw[i][j];
                    let rhs = pw[i][k].clone().min(pw[j][k].clone());
                    if *lhs < rhs {
                        return Err(TreeError::Ultrametric(format!(
                            "v({i},{j}) = {lhs} < min(v({i},{k}), v({j},{k})) = {rhs}"
                        )));
                    }
                }
            }
        }
    }

    let mut depths: Vec<Rat> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            depths.push(pw[i][j].clone());
        }
    }
    depths.sort();
    depths.dedup();
    depths.reverse();

    // Dendrogram construction: cluster nodes carry their formation depth.
    #[derive(Clone)]
    struct Node {
        depth: Option<Rat>, // None for leaves
        members: Vec<usize>,
        children: Vec<usize>,
    }
    let mut nodes: Vec<Node> = (0..n)
        .map(|i| Node { depth: None, members: vec![i], children: vec![] })
        .collect();
    let mut active: Vec<usize> = (0..n).collect();
    for t in &depths {
        let mut merged = true;
        while merged {
            merged = false;
            'outer: for ai in 0..active.len() {
                for bi in (ai + 1)..active.len() {
                    let a = active[ai];
                    let b = active[bi];
                    let linked = nodes[a]
                        .members
                        .iter()
                        .any(|&i| nodes[b].members.iter().any(|&j| pw[i][j] >= *t));
                    if linked {
                        active.remove(bi);
                        let keep_a = nodes[a].depth.as_ref() == Some(t);
                        if keep_a {
                            let mut mem = nodes[b].members.clone();
                            nodes[a].members.append(&mut mem);
                            nodes[a].children.push(b);
                        } else {
                            let node = Node {
                                depth: Some(t.clone()),
                                members: [nodes[a].members.clone(), nodes[b].members.clone()]
                                    .concat(),
                                children: vec![a, b],
                            };
                            nodes.push(node);
                            let pos = active.iter().position(|&x| x == a).unwrap();
                            active[pos] = nodes.len() - 1;
                        }
                        merged = true;
                        break 'outer;
                    }
                }
            }
        }
    }
    if active.len() != 1 {
        return Err(TreeError::Invariant("dendrogram did not close".into()));
    }

    // Convert to a marked tree: internal vertices = cluster nodes; marks
    // attach to the cluster where the point first merges.
    let mut vertices: Vec<TreeVertex> = Vec::new();
    let mut edges: Vec<TreeEdge> = Vec::new();
    let mut vmap: Vec<Option<usize>> = vec![None; nodes.len()];
    for ni in n..nodes.len() {
        vmap[ni] = Some(vertices.len());
        vertices.push(TreeVertex { marks: vec![] });
    }
    for ni in n..nodes.len() {
        let vid = vmap[ni].unwrap();
        let d_parent = nodes[ni].depth.clone().unwrap();
        for &ch in &nodes[ni].children {
            if ch < n {
                vertices[vid].marks.push(ch);
            } else {
                let d_child = nodes[ch].depth.clone().unwrap();
                let len = &d_child - &d_parent;
                edges.push(TreeEdge {
                    a: vid,
                    b: vmap[ch].unwrap(),
                    len,
                    inside: nodes[ch].members.clone(),
                    even: nodes[ch].members.len() % 2 == 0,
                });
            }
        }
    }
    let mut tree = MetricTree { vertices, edges };

    collapse_zero_edges(&mut tree);
    contract_unstable(&mut tree)?;
    for v in &mut tree.vertices {
        v.marks.sort();
    }
    for e in &mut tree.edges {
        e.inside.sort();
    }
    Ok(tree)
}

fn collapse_zero_edges(tree: &mut MetricTree) {
    loop {
        let Some(pos) = tree.edges.iter().position(|e| e.len.is_zero()) else {
            break;
        };
        let e = tree.edges.remove(pos);
        let (keep, drop) = (e.a.min(e.b), e.a.max(e.b));
        let marks = std::mem::take(&mut tree.vertices[drop].marks);
        tree.vertices[keep].marks.extend(marks);
        for e2 in &mut tree.edges {
            if e2.a == drop {
                e2.a = keep;
            }
            if e2.b == drop {
                e2.b = keep;
            }
        }
        remove_vertex(tree, drop);
    }
}

fn contract_unstable(tree: &mut MetricTree) -> Result<(), TreeError> {
    loop {
        let mut acted = false;
        for v in 0..tree.vertices.len() {
            // A marked vertex of degree 1 with a single mark is unstable:
            // the mark lives on the neighboring component.
            if !tree.vertices[v].marks.is_empty() {
                let nb: Vec<usize> = tree
                    .edges
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| e.a == v || e.b == v)
                    .map(|(i, _)| i)
                    .collect();
                if tree.vertices[v].marks.len() + nb.len() <= 2 && nb.len() == 1 {
                    let e = tree.edges.remove(nb[0]);
                    let other = if e.a == v { e.b } else { e.a };
                    let marks = std::mem::take(&mut tree.vertices[v].marks);
                    tree.vertices[other].marks.extend(marks);
                    remove_vertex(tree, v);
                    acted = true;
                    break;
                }
                continue;
            }
            let nb: Vec<usize> = tree
                .edges
                .iter()
                .enumerate()
                .filter(|(_, e)| e.a == v || e.b == v)
                .map(|(i, _)| i)
                .collect();
            match nb.len() {
                0 => {
                    if tree.vertices.len() > 1 {
                        return Err(TreeError::Invariant("isolated unmarked vertex".into()));
                    }
                }
                1 => {
                    let ei = nb[0];
                    tree.edges.remove(ei);
                    remove_vertex(tree, v);
                    acted = true;
                }
                2 => {
                    let (i1, i2) = (nb[0], nb[1]);
                    let (e1, e2) = (tree.edges[i1].clone(), tree.edges[i2].clone());
                    let o1 = if e1.a == v { e1.b } else { e1.a };
                    let o2 = if e2.a == v { e2.b } else { e2.a };
                    // New edge o1 -- o2 with `inside` oriented toward o2.
                    let inside = if e2.b == o2 {
                        e2.inside.clone()
                    } else {
                        complement(&e2.inside)
                    };
                    let len = &e1.len + &e2.len;
                    let even = inside.len() % 2 == 0;
                    let mut rm = [i1, i2];
                    rm.sort_by(|a, b| b.cmp(a));
                    for i in rm {
                        tree.edges.remove(i);
                    }
                    tree.edges.push(TreeEdge { a: o1, b: o2, len, inside, even });
                    remove_vertex(tree, v);
                    acted = true;
                }
                _ => {}
            }
            if acted {
                break;
            }
        }
        if !acted {
            return Ok(());
        }
    }
}

fn complement(marks: &[usize]) -> Vec<usize> {
    (0..6).filter(|m| !marks.contains(m)).collect()
}

fn remove_vertex(tree: &mut MetricTree, v: usize) {
    tree.vertices.remove(v);
    for e in &mut tree.edges {
        if e.a > v {
            e.a -= 1;
        }
        if e.b > v {
            e.b -= 1;
        }
    }
}

/// Tree shapes of the seven marked configurations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeShape {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeParams {
    pub alpha: Rat,
    pub beta: Rat,
    pub gamma: Rat,
    pub epsilon: Rat,
    pub shape: TreeShape,
}

/// Sorted even-edge lengths padded with zeros, the odd-edge length, and the
/// shape of the configuration.  Zero-length even edges are treated as
/// absent.
pub fn extract_params(tree: &MetricTree) -> Result<TreeParams, TreeError> {
    let mut evens: Vec<Rat> = Vec::new();
    let mut odds: Vec<Rat> = Vec::new();
    for e in &tree.edges {
        if e.even {
            evens.push(e.len.clone());
        } else {
            odds.push(e.len.clone());
        }
    }
    if evens.len() > 3 {
        return Err(TreeError::Invariant(format!(
            "{} even edges (at most 3 possible)",
            evens.len()
        )));
    }
    if odds.len() > 1 {
        return Err(TreeError::Invariant(format!(
            "{} odd edges (at most 1 possible)",
            odds.len()
        )));
    }
    evens.sort();
    evens.reverse();
    while evens.len() < 3 {
        evens.push(Rat::zero());
    }
    let eps = odds.first().cloned().unwrap_or_else(Rat::zero);
    let shape = match (evens.iter().filter(|v| !v.is_zero()).count(), !eps.is_zero()) {
        (0, false) => TreeShape::A,
        (1, false) => TreeShape::B,
        (2, false) => TreeShape::C,
        (3, false) => TreeShape::D,
        (0, true) => TreeShape::E,
        (1, true) => TreeShape::F,
        (2, true) => TreeShape::G,
        _ => {
            return Err(TreeError::Invariant(
                "three even edges cannot coexist with an odd edge".into(),
            ))
        }
    };
    Ok(TreeParams {
        alpha: evens[0].clone(),
        beta: evens[1].clone(),
        gamma: evens[2].clone(),
        epsilon: eps,
        shape,
    })
}

/// Anchor choices for the normalization, with flags recording whether
/// admissible alternatives exist.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Anchors {
    pub p1: usize,
    pub p2: usize,
    pub tie1: bool,
    pub tie2: bool,
    pub alt1: Vec<usize>,
    pub alt2: Vec<usize>,
}

/// P1 meets the two-mark leaf component across the alpha edge if alpha > 0
/// (first admissible index otherwise); P2 has maximal tree distance from P1.
/// Ties break to the lowest mark index and are surfaced.
pub fn choose_anchors(tree: &MetricTree, params: &TreeParams) -> Anchors {
    let p1_candidates: Vec<usize> = if params.alpha.is_zero() {
        (0..6).collect()
    } else {
        let mut cands = Vec::new();
        for e in &tree.edges {
            if e.even && e.len == params.alpha {
                let side = if e.inside.len() == 2 {
                    e.inside.clone()
                } else if e.inside.len() == 4 {
                    complement(&e.inside)
                } else {
                    continue;
                };
                cands.extend(side);
            }
        }
        cands.sort();
        cands.dedup();
        cands
    };
    let p1 = p1_candidates[0];
    let v1 = tree.vertex_of_mark(p1);
    let mut best: Option<(Rat, Vec<usize>)> = None;
    for m in 0..6 {
        if m == p1 {
            continue;
        }
        let d = tree.path_length(v1, tree.vertex_of_mark(m));
        match &mut best {
            None => best = Some((d, vec![m])),
            Some((bd, list)) => {
                if d > *bd {
                    *bd = d;
                    *list = vec![m];
                } else if d == *bd {
                    list.push(m);
                }
            }
        }
    }
    let (_, p2_candidates) = best.unwrap();
    let p2 = p2_candidates[0];
    Anchors {
        p1,
        p2,
        tie1: p1_candidates.len() > 1,
        tie2: p2_candidates.len() > 1,
        alt1: p1_candidates,
        alt2: p2_candidates,
    }
}

/// Deterministic one-line nested-bracket rendering with depths: subtrees as
/// `(items)_length`, marks by id with `inf` for the point at infinity;
/// children sorted by rendering.  Round-trips through [`parse_ascii`].
pub fn render_ascii(tree: &MetricTree, points: &[BranchPoint]) -> String {
    let name = |m: usize| -> String {
        match points.get(m) {
            Some(BranchPoint::Infinity) => "inf".to_string(),
            _ => m.to_string(),
        }
    };
    let mut root = 0;
    for v in 0..tree.vertices.len() {
        let key = |i: usize| {
            (
                std::cmp::Reverse(tree.vertices[i].marks.len()),
                tree.vertices[i].marks.first().cloned().unwrap_or(9),
            )
        };
        if key(v) < key(root) {
            root = v;
        }
    }
    fn rec(
        tree: &MetricTree,
        v: usize,
        from: Option<usize>,
        name: &dyn Fn(usize) -> String,
    ) -> String {
        let mut items: Vec<String> = tree.vertices[v].marks.iter().map(|&m| name(m)).collect();
        let mut subs: Vec<String> = Vec::new();
        for (w, e) in tree.neighbors(v) {
            if Some(w) == from {
                continue;
            }
            subs.push(format!(
                "{}_{}",
                rec(tree, w, Some(v), name),
                crate::exactq::rat_to_string(&e.len)
            ));
        }
        subs.sort();
        items.extend(subs);
        format!("({})", items.join(" "))
    }
    rec(tree, root, None, &name)
}

#[derive(Debug, PartialEq, Eq)]
pub struct AsciiNode {
    pub marks: Vec<String>,
    pub children: Vec<(AsciiNode, Rat)>,
}

/// Parse the `render_ascii` format; used by the round-trip tests.
pub fn parse_ascii(s: &str) -> Result<AsciiNode, String> {
    let mut chars = s.chars().peekable();
    let node = parse_node(&mut chars)?;
    if chars.next().is_some() {
        return Err("trailing input".into());
    }
    Ok(node)
}

fn parse_node(chars: &mut std::iter::Peekable<std::str::Chars>) -> Result<AsciiNode, String> {
    if chars.next() != Some('(') {
        return Err("expected '('".into());
    }
    let mut marks = Vec::new();
    let mut children = Vec::new();
    loop {
        match chars.peek() {
            None => return Err("unexpected end".into()),
            Some(')') => {
                chars.next();
                break;
            }
            Some(' ') => {
                chars.next();
            }
            Some('(') => {
                let child = parse_node(chars)?;
                if chars.next() != Some('_') {
                    return Err("expected '_' after subtree".into());
                }
                let mut tok = String::new();
                while let Some(c) = chars.peek() {
                    if c.is_ascii_digit() || *c == '/' || *c == '-' {
                        tok.push(*c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                let len = crate::exactq::parse_rat(&tok)?;
                children.push((child, len));
            }
            Some(_) => {
                let mut tok = String::new();
                while let Some(c) = chars.peek() {
                    if c.is_alphanumeric() {
                        tok.push(*c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                if tok.is_empty() {
                    return Err("unexpected character".into());
                }
                marks.push(tok);
            }
        }
    }
    Ok(AsciiNode { marks, children })
}

/// Full front half of the pipeline: certified roots, finitization (growing
/// the residue field when the center needs more residue classes), stable
/// tree, and parameters.
pub fn roots_and_tree(
    p: &crate::exactq::RatPoly,
    has_infinity: bool,
    prec_cap: Option<i64>,
) -> Result<(LocalRootsOutput, BranchConfig, MetricTree, TreeParams), String> {
    roots_and_tree_prec(p, has_infinity, prec_cap, None)
}

/// As [`roots_and_tree`] with a starting-precision floor for the root finder.
pub fn roots_and_tree_prec(
    p: &crate::exactq::RatPoly,
    has_infinity: bool,
    prec_cap: Option<i64>,
    min_prec: Option<i64>,
) -> Result<(LocalRootsOutput, BranchConfig, MetricTree, TreeParams), String> {
    let mut min_f = 1usize;
    for _ in 0..7 {
        let out = crate::localfield::roots::local_roots_full(p, prec_cap, min_f, min_prec)?;
        match finitize(&out, has_infinity) {
            Ok(config) => {
                let tree = build_tree(&config).map_err(|e| format!("{e:?}"))?;
                let params = extract_params(&tree).map_err(|e| format!("{e:?}"))?;
                return Ok((out, config, tree, params));
            }
            Err(FinitizeError::NeedResidueDegree(d)) => {
                min_f = d.max(min_f + 1);
            }
            Err(FinitizeError::Precision(m)) => return Err(m),
        }
    }
    Err("finitization failed to settle".into())
}

/// Convenience wrapper: finitize, build, extract.
pub fn tree_from_roots(
    out: &LocalRootsOutput,
    has_infinity: bool,
) -> Result<(BranchConfig, MetricTree, TreeParams), String> {
    let config = finitize(out, has_infinity).map_err(|e| format!("{e:?}"))?;
    let tree = build_tree(&config).map_err(|e| format!("{e:?}"))?;
    let params = extract_params(&tree).map_err(|e| format!("{e:?}"))?;
    Ok((config, tree, params))
}

/// Build a configuration directly from a pairwise matrix (test helper; also
/// used by examples).
pub fn config_from_matrix(pw: Vec<Vec<Rat>>) -> BranchConfig {
    BranchConfig {
        points: (0..6).map(BranchPoint::Finite).collect(),
        pairwise: pw,
        moebius_c: None,
    }
}

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// ExtRat view of the pairwise matrix (the spec-level payload type).
pub fn pairwise_extrat(config: &BranchConfig) -> Vec<Vec<ExtRat>> {
    config
        .pairwise
        .iter()
        .map(|row| row.iter().map(|v| ExtRat::Fin(v.clone())).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactq::RatPoly;
    use crate::localfield::roots::local_roots;

    fn mat(entries: &[(usize, usize, (i64, i64))]) -> Vec<Vec<Rat>> {
        let mut pw = vec![vec![Rat::zero(); 6]; 6];
        for &(i, j, (n, d)) in entries {
            pw[i][j] = rat(n, d);
            pw[j][i] = rat(n, d);
        }
        pw
    }

    #[test]
    fn star_tree_shape_a() {
        let config = config_from_matrix(mat(&[]));
        let tree = build_tree(&config).unwrap();
        assert_eq!(tree.vertices.len(), 1);
        assert!(tree.edges.is_empty());
        let p = extract_params(&tree).unwrap();
        assert_eq!(p.shape, TreeShape::A);
        assert!(p.alpha.is_zero() && p.epsilon.is_zero());
        let anchors = choose_anchors(&tree, &p);
        assert_eq!(anchors.p1, 0);
        assert_eq!(anchors.p2, 1);
        assert!(anchors.tie1 && anchors.tie2);
        assert_eq!(render_ascii(&tree, &config.points), "(0 1 2 3 4 5)");
    }

    #[test]
    fn shape_g_example() {
        // Roots {0,2,4,1,3} plus infinity, marks in root order; mark 5 = inf.
        let pw = mat(&[
            (0, 1, (1, 1)),
            (0, 2, (2, 1)),
            (1, 2, (1, 1)),
            (3, 4, (1, 1)),
        ]);
        let config = config_from_matrix(pw);
        let tree = build_tree(&config).unwrap();
        let p = extract_params(&tree).unwrap();
        assert_eq!(p.shape, TreeShape::G);
        assert_eq!(p.alpha, rat(1, 1));
        assert_eq!(p.beta, rat(1, 1));
        assert!(p.gamma.is_zero());
        assert_eq!(p.epsilon, rat(1, 1));
        let anchors = choose_anchors(&tree, &p);
        // alpha = beta here, so both twins are admissible for P1.
        assert_eq!(anchors.alt1, vec![0, 2, 3, 4]);
        assert_eq!(anchors.p1, 0);
        assert_eq!(anchors.alt2, vec![3, 4]);
    }

    #[test]
    fn golden_quintic_tree() {
        // x^5 + x^4 - 4x^3 - 10x^2 + 12x -> (1, 1/2, 1/2, 0), shape D.
        let p = RatPoly::from_ints(&[0, 12, -10, -4, 1, 1]);
        let (_, _, _, params) = roots_and_tree(&p, true, None).unwrap();
        assert_eq!(params.shape, TreeShape::D);
        assert_eq!(params.alpha, rat(1, 1));
        assert_eq!(params.beta, rat(1, 2));
        assert_eq!(params.gamma, rat(1, 2));
        assert!(params.epsilon.is_zero());
    }

    #[test]
    fn x5_minus_1_star() {
        let p = RatPoly::from_ints(&[-1, 0, 0, 0, 0, 1]);
        let out = local_roots(&p, None).unwrap();
        let (_, tree, params) = tree_from_roots(&out, true).unwrap();
        assert_eq!(params.shape, TreeShape::A);
        assert_eq!(tree.vertices.len(), 1);
    }

    #[test]
    fn rational_roots_with_infinity() {
        // Branch set {0,1,2,3,4} + inf -> shape G; the finitize center lives
        // in the quadratic residue extension since both prime-field residues
        // are occupied.
        let p = RatPoly::from_ints(&[0, 24, -50, 35, -10, 1]);
        let out = local_roots(&p, None).unwrap();
        match finitize(&out, true) {
            Err(FinitizeError::NeedResidueDegree(d)) => {
                // Retry at the requested residue degree via a fresh tower.
                assert!(d >= 2);
                let out2 = local_roots_with_f(&p, d);
                let (config, _, params) = tree_from_roots(&out2, true).unwrap();
                assert!(config.moebius_c.is_some());
                assert_eq!(params.shape, TreeShape::G);
                assert_eq!(params.epsilon, rat(1, 1));
            }
            Ok(config) => {
                let tree = build_tree(&config).unwrap();
                let params = extract_params(&tree).unwrap();
                assert_eq!(params.shape, TreeShape::G);
            }
            Err(e) => panic!("{e:?}"),
        }
    }

    fn local_roots_with_f(p: &RatPoly, _f: usize) -> crate::localfield::roots::LocalRootsOutput {
        // The driver grows f on demand; here the residue request is
        // satisfied by rerunning with the minimum degree folded in.
        crate::localfield::roots::local_roots_min_f(p, None, _f).unwrap()
    }

    #[test]
    fn four_point_condition_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let mut done = 0;
        while done < 50 {
            let deg = rng.gen_range(5..=6usize);
            let mut cs: Vec<i64> = (0..=deg).map(|_| rng.gen_range(-60..=60)).collect();
            if cs[deg] == 0 {
                cs[deg] = 1;
            }
            let p = RatPoly::from_ints(&cs);
            if p.degree() != Some(deg) || crate::exactq::discriminant(&p).is_zero() {
                continue;
            }
            let Ok((_, config, _, _)) = roots_and_tree(&p, deg == 5, None) else {
                continue;
            };
            done += 1;
            let pw = &config.pairwise;
            for i in 0..6 {
                for j in (i + 1)..6 {
                    for k in (j + 1)..6 {
                        for l in (k + 1)..6 {
                            // Four-point condition in meet coordinates:
                            // the two smallest of the three pairwise sums
                            // coincide (equivalently, the two largest of
                            // the corresponding distance sums).
                            let mut sums = [
                                &pw[i][j] + &pw[k][l],
                                &pw[i][k] + &pw[j][l],
                                &pw[i][l] + &pw[j][k],
                            ];
                            sums.sort();
                            assert_eq!(sums[0], sums[1], "four-point fails {:?}", cs);
                        }
                    }
                }
            }
            let tree = build_tree(&config).unwrap();
            let params = extract_params(&tree).unwrap();
            assert!(params.alpha >= params.beta && params.beta >= params.gamma);
            if tree.vertices.len() > 1 {
                for v in 0..tree.vertices.len() {
                    let deg_v = tree.neighbors(v).len() + tree.vertices[v].marks.len();
                    assert!(deg_v >= 3, "unstable vertex in {:?}", cs);
                }
            }
        }
    }

    #[test]
    fn ascii_round_trip() {
        let pw = mat(&[
            (0, 1, (3, 2)),
            (0, 2, (1, 2)),
            (1, 2, (1, 2)),
            (3, 4, (1, 1)),
        ]);
        let config = config_from_matrix(pw);
        let tree = build_tree(&config).unwrap();
        let s = render_ascii(&tree, &config.points);
        let parsed = parse_ascii(&s).unwrap();
        fn render_node(n: &AsciiNode) -> String {
            let mut items = n.marks.clone();
            let mut subs: Vec<String> = n
                .children
                .iter()
                .map(|(c, l)| format!("{}_{}", render_node(c), crate::exactq::rat_to_string(l)))
                .collect();
            subs.sort();
            items.extend(subs);
            format!("({})", items.join(" "))
        }
        assert_eq!(render_node(&parsed), s);
    }

    #[test]
    fn relabeling_invariance() {
        use rand::{seq::SliceRandom, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let base = mat(&[(0, 1, (2, 1)), (2, 3, (1, 2)), (4, 5, (5, 2))]);
        let config = config_from_matrix(base.clone());
        let tree = build_tree(&config).unwrap();
        let p0 = extract_params(&tree).unwrap();
        for _ in 0..20 {
            let mut perm: Vec<usize> = (0..6).collect();
            perm.shuffle(&mut rng);
            let mut pw = vec![vec![Rat::zero(); 6]; 6];
            for i in 0..6 {
                for j in 0..6 {
                    pw[perm[i]][perm[j]] = base[i][j].clone();
                }
            }
            let t = build_tree(&config_from_matrix(pw)).unwrap();
            let p = extract_params(&t).unwrap();
            assert_eq!(
                (&p.alpha, &p.beta, &p.gamma, &p.epsilon, p.shape),
                (&p0.alpha, &p0.beta, &p0.gamma, &p0.epsilon, p0.shape)
            );
        }
    }
}
