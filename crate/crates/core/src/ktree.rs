//! Rooted trees on `k` vertices and the providers that build them.
//!
//! A *good* k-tree has length at most `L_k`, the shortest path from the root
//! through `k` vertices. The exact provider returns a minimum k-tree, which is
//! always good; the heuristic provider is a prize-collecting primal-dual tree
//! tuned to size `k` and is only good when certified against the k-path profile.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{self, k_path_profile, mask_vertices, subset_mst_table, tree_on};
use crate::limits::Limits;
use crate::metric::MetricInstance;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KTree {
    pub root: usize,
    /// Sorted vertex set, including the root.
    pub vertices: Vec<usize>,
    /// Edges as (parent side, child side) pairs.
    pub edges: Vec<(usize, usize)>,
    pub total_length: u64,
    /// Length verified to be at most `L_k`.
    pub certified: bool,
}

impl KTree {
    pub fn size(&self) -> usize {
        self.vertices.len()
    }

    /// Check that the edges span `vertices` as a tree and the length is right.
    pub fn validate(&self, inst: &MetricInstance) -> Result<()> {
        let k = self.vertices.len();
        if self.vertices.binary_search(&self.root).is_err() {
            return Err(Error::structural("tree does not contain its root"));
        }
        if self.edges.len() + 1 != k {
            return Err(Error::structural(format!("{} edges for {k} vertices", self.edges.len())));
        }
        let index = |v: usize| self.vertices.binary_search(&v).ok();
        let mut uf: Vec<usize> = (0..k).collect();
        fn find(uf: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while uf[r] != r {
                r = uf[r];
            }
            uf[x] = r;
            r
        }
        let mut length = 0;
        for &(a, b) in &self.edges {
            let (ia, ib) = match (index(a), index(b)) {
                (Some(ia), Some(ib)) => (ia, ib),
                _ => return Err(Error::structural(format!("edge ({a},{b}) leaves the vertex set"))),
            };
            let (ra, rb) = (find(&mut uf, ia), find(&mut uf, ib));
            if ra == rb {
                return Err(Error::structural(format!("edge ({a},{b}) closes a cycle")));
            }
            uf[ra] = rb;
            length += inst.d(a, b);
        }
        if length != self.total_length {
            return Err(Error::structural(format!(
                "recorded length {} but edges sum to {length}",
                self.total_length
            )));
        }
        Ok(())
    }

    /// Closed depth-first walk from the root, children in increasing vertex order.
    /// Its length is exactly twice the tree length.
    pub fn doubled_walk(&self) -> Vec<usize> {
        let k = self.vertices.len();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); k];
        let index = |v: usize| self.vertices.binary_search(&v).expect("vertex in tree");
        for &(a, b) in &self.edges {
            adj[index(a)].push(b);
            adj[index(b)].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        let mut walk = Vec::with_capacity(2 * k - 1);
        walk.push(self.root);
        // Stack of (vertex, parent, next child position).
        let mut stack = vec![(self.root, usize::MAX, 0usize)];
        while let Some(top) = stack.last_mut() {
            let (v, parent, pos) = *top;
            let children = &adj[index(v)];
            if let Some(&c) = children[pos..].iter().find(|&&c| c != parent) {
                top.2 = children.iter().position(|&x| x == c).unwrap() + 1;
                walk.push(c);
                stack.push((c, v, 0));
            } else {
                stack.pop();
                if let Some(&(p, _, _)) = stack.last() {
                    walk.push(p);
                }
            }
        }
        walk
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeProvider {
    Exact,
    Heuristic,
}

impl std::str::FromStr for TreeProvider {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(TreeProvider::Exact),
            "heuristic" => Ok(TreeProvider::Heuristic),
            other => Err(Error::invalid(format!("unknown tree provider '{other}'"))),
        }
    }
}

impl TreeProvider {
    /// Exact when the instance is small enough, heuristic otherwise.
    pub fn auto(n: usize) -> TreeProvider {
        if n <= Limits::current().k_tree {
            TreeProvider::Exact
        } else {
            TreeProvider::Heuristic
        }
    }
}

pub fn good_k_tree(inst: &MetricInstance, root: usize, k: usize, provider: TreeProvider) -> Result<KTree> {
    if k == 0 || k > inst.n {
        return Err(Error::invalid(format!("k must be in 1..={}", inst.n)));
    }
    match provider {
        TreeProvider::Exact => exact::min_k_tree(inst, root, k),
        TreeProvider::Heuristic => {
            let mut t = heuristic_k_tree(inst, root, k);
            if inst.n <= Limits::current().k_path {
                t.certified = t.total_length <= exact::min_k_path(inst, root, k)?;
            }
            Ok(t)
        }
    }
}

/// Trees for every `k = 1..=n`; entry `k - 1` has `k` vertices.
pub fn good_k_trees(inst: &MetricInstance, root: usize, provider: TreeProvider) -> Result<Vec<KTree>> {
    match provider {
        TreeProvider::Exact => {
            let table = subset_mst_table(inst, root)?;
            (1..=inst.n)
                .map(|k| exact::min_k_tree_from_table(inst, root, k, &table))
                .collect()
        }
        TreeProvider::Heuristic => {
            let profile = if inst.n <= Limits::current().k_path {
                Some(k_path_profile(inst, root)?)
            } else {
                None
            };
            Ok((1..=inst.n)
                .map(|k| {
                    let mut t = heuristic_k_tree(inst, root, k);
                    if let Some(p) = &profile {
                        t.certified = t.total_length <= p[k - 1];
                    }
                    t
                })
                .collect())
        }
    }
}

/// Prize-collecting primal-dual tree with uniform penalty, binary-searched to at
/// least `k` vertices and then trimmed leaf by leaf (longest leaf edge first).
pub fn heuristic_k_tree(inst: &MetricInstance, root: usize, k: usize) -> KTree {
    let n = inst.n;
    let k = k.clamp(1, n);
    if k == 1 {
        return tree_on(inst, root, vec![root], false);
    }
    if k == n {
        return tree_on(inst, root, (0..n).collect(), false);
    }
    let mut lo = 0.0f64;
    let mut hi = (n as f64) * (inst.max_distance().max(1) as f64);
    let mut best = pcst(inst, root, hi);
    if best.len() < k {
        best = (0..n).collect();
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let cand = pcst(inst, root, mid);
        if cand.len() >= k {
            hi = mid;
            best = cand;
        } else {
            lo = mid;
        }
    }
    trim_to(inst, root, best, k)
}

/// Vertex set of the pruned primal-dual tree for penalty `lambda` per vertex.
fn pcst(inst: &MetricInstance, root: usize, lambda: f64) -> Vec<usize> {
    let n = inst.n;
    let mut comp: Vec<usize> = (0..n).collect();
    let mut active: Vec<bool> = (0..n).map(|v| v != root && lambda > 0.0).collect();
    let mut has_root: Vec<bool> = (0..n).map(|v| v == root).collect();
    let mut ysum = vec![0.0f64; n];
    let mut prize: Vec<f64> = (0..n).map(|v| if v == root { 0.0 } else { lambda }).collect();
    let mut load = vec![0.0f64; n];
    let mut forest: Vec<(usize, usize)> = Vec::new();
    const TOL: f64 = 1e-12;

    loop {
        let mut next_edge: Option<(f64, usize, usize)> = None;
        for u in 0..n {
            for v in (u + 1)..n {
                let (cu, cv) = (comp[u], comp[v]);
                if cu == cv {
                    continue;
                }
                let rate = active[cu] as u8 + active[cv] as u8;
                if rate == 0 {
                    continue;
                }
                let slack = (inst.d(u, v) as f64 - load[u] - load[v]).max(0.0);
                let t = slack / rate as f64;
                if next_edge.is_none_or(|(bt, _, _)| t < bt - TOL) {
                    next_edge = Some((t, u, v));
                }
            }
        }
        let mut next_deact: Option<(f64, usize)> = None;
        for c in 0..n {
            if comp[c] == c && active[c] {
                let t = (prize[c] - ysum[c]).max(0.0);
                if next_deact.is_none_or(|(bt, _)| t < bt - TOL) {
                    next_deact = Some((t, c));
                }
            }
        }
        let (delta, event) = match (next_edge, next_deact) {
            (None, None) => break,
            (Some((t, u, v)), None) => (t, Ok((u, v))),
            (None, Some((t, c))) => (t, Err(c)),
            (Some((te, u, v)), Some((td, c))) => {
                if te <= td {
                    (te, Ok((u, v)))
                } else {
                    (td, Err(c))
                }
            }
        };
        for v in 0..n {
            if active[comp[v]] {
                load[v] += delta;
            }
        }
        for c in 0..n {
            if comp[c] == c && active[c] {
                ysum[c] += delta;
            }
        }
        match event {
            Ok((u, v)) => {
                let (cu, cv) = (comp[u], comp[v]);
                let (keep, gone) = (cu.min(cv), cu.max(cv));
                for x in comp.iter_mut() {
                    if *x == gone {
                        *x = keep;
                    }
                }
                has_root[keep] |= has_root[gone];
                ysum[keep] += ysum[gone];
                prize[keep] += prize[gone];
                active[keep] = !has_root[keep];
                active[gone] = false;
                forest.push((u, v));
            }
            Err(c) => active[c] = false,
        }
    }

    // Strong pruning of the root component: drop subtrees whose prize does not
    // pay for the connecting edge.
    let rc = comp[root];
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(u, v) in &forest {
        if comp[u] == rc {
            adj[u].push(v);
            adj[v].push(u);
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut parent = vec![usize::MAX; n];
    let mut stack = vec![root];
    let mut seen = vec![false; n];
    seen[root] = true;
    while let Some(v) = stack.pop() {
        order.push(v);
        for &c in &adj[v] {
            if !seen[c] {
                seen[c] = true;
                parent[c] = v;
                stack.push(c);
            }
        }
    }
    let mut net = vec![0.0f64; n];
    let mut keep = vec![false; n];
    for &v in order.iter().rev() {
        net[v] += if v == root { 0.0 } else { lambda };
        if v != root {
            let gain = net[v] - inst.d(v, parent[v]) as f64;
            if gain >= 0.0 {
                keep[v] = true;
                net[parent[v]] += gain;
            }
        }
    }
    let mut result = vec![root];
    for &v in &order {
        if v != root && keep[v] && result.contains(&parent[v]) {
            result.push(v);
        }
    }
    result.sort_unstable();
    result
}

/// MST on the vertex set, then remove non-root leaves with the longest incident
/// edge until `k` vertices remain.
fn trim_to(inst: &MetricInstance, root: usize, vertices: Vec<usize>, k: usize) -> KTree {
    let mut tree = tree_on(inst, root, vertices, false);
    while tree.vertices.len() > k {
        let mut degree = std::collections::HashMap::new();
        for &(a, b) in &tree.edges {
            *degree.entry(a).or_insert(0usize) += 1;
            *degree.entry(b).or_insert(0usize) += 1;
        }
        let leaf_edge = tree
            .edges
            .iter()
            .enumerate()
            .filter_map(|(i, &(a, b))| {
                let leaf = if degree[&b] == 1 && b != root {
                    b
                } else if degree[&a] == 1 && a != root {
                    a
                } else {
                    return None;
                };
                Some((inst.d(a, b), std::cmp::Reverse(leaf), i, leaf))
            })
            .max()
            .expect("a tree with at least two vertices has a non-root leaf");
        let (w, _, i, leaf) = leaf_edge;
        tree.edges.swap_remove(i);
        tree.total_length -= w;
        tree.vertices.retain(|&v| v != leaf);
    }
    tree
}

/// Vertex sets for subset masks, for callers holding an MST table.
pub fn tree_for_mask(inst: &MetricInstance, root: usize, mask: usize) -> KTree {
    tree_on(inst, root, mask_vertices(mask, inst.n), false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{generate_instance, InstanceKind};

    #[test]
    fn doubled_walk_has_twice_the_length() {
        let inst = generate_instance(5, 9, InstanceKind::RandomMetric).unwrap();
        let t = exact::min_k_tree(&inst, 0, 6).unwrap();
        t.validate(&inst).unwrap();
        let walk = t.doubled_walk();
        assert_eq!(walk.first(), Some(&0));
        assert_eq!(walk.last(), Some(&0));
        let len: u64 = walk.windows(2).map(|w| inst.d(w[0], w[1])).sum();
        assert_eq!(len, 2 * t.total_length);
        assert_eq!(walk.len(), 2 * t.size() - 1);
    }

    #[test]
    fn heuristic_hits_exact_size() {
        let inst = generate_instance(11, 10, InstanceKind::RandomMetric).unwrap();
        for k in 1..=10 {
            let t = heuristic_k_tree(&inst, 0, k);
            assert_eq!(t.size(), k);
            t.validate(&inst).unwrap();
        }
    }
}
