//! Unlabeled trees on a handful of vertices, with automorphism counts.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Largest vertex count accepted by [`enumerate_trees`].
pub const TREE_ENUMERATION_CAP: usize = 8;

/// A tree on vertices `0..k` together with its automorphism count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeShape {
    k: usize,
    edges: Vec<(usize, usize)>,
    aut: u64,
    degrees: Vec<usize>,
}

impl TreeShape {
    /// Validates that `edges` form a tree on `k` vertices and computes the
    /// automorphism count from the tree's centre.
    pub fn new(k: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if k == 0 {
            return Err(Error::validation("a tree needs at least one vertex"));
        }
        if edges.len() != k - 1 {
            return Err(Error::validation(format!(
                "{} edges cannot form a tree on {k} vertices",
                edges.len()
            )));
        }
        let mut degrees = vec![0; k];
        for &(a, b) in &edges {
            if a >= k || b >= k || a == b {
                return Err(Error::validation(format!("bad tree edge ({a}, {b})")));
            }
            degrees[a] += 1;
            degrees[b] += 1;
        }
        let adj = adjacency(k, &edges);
        // k - 1 edges and connected implies a tree
        let mut seen = vec![false; k];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    stack.push(u);
                }
            }
        }
        if count != k {
            return Err(Error::validation("edges do not form a connected graph"));
        }
        let aut = automorphisms(&adj);
        Ok(Self {
            k,
            edges,
            aut,
            degrees,
        })
    }

    pub fn single_vertex() -> Self {
        Self::new(1, Vec::new()).expect("single vertex is a tree")
    }

    pub fn path(k: usize) -> Result<Self> {
        Self::new(k, (1..k).map(|v| (v - 1, v)).collect())
    }

    pub fn star(k: usize) -> Result<Self> {
        Self::new(k, (1..k).map(|v| (0, v)).collect())
    }

    pub fn len(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn aut(&self) -> u64 {
        self.aut
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        adjacency(self.k, &self.edges)
    }

    /// Canonical code: the smallest rooted parenthesis code over the
    /// tree's centres.
    pub fn canonical_code(&self) -> String {
        canonical_code(&self.adjacency())
    }
}

fn adjacency(k: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); k];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    adj
}

fn rooted_code(adj: &[Vec<usize>], v: usize, parent: usize) -> String {
    let mut children: Vec<String> = adj[v]
        .iter()
        .filter(|&&u| u != parent)
        .map(|&u| rooted_code(adj, u, v))
        .collect();
    children.sort();
    let mut s = String::with_capacity(2 + children.iter().map(String::len).sum::<usize>());
    s.push('(');
    for c in children {
        s.push_str(&c);
    }
    s.push(')');
    s
}

fn canonical_root(adj: &[Vec<usize>]) -> (usize, String) {
    centres(adj)
        .into_iter()
        .map(|root| (root, rooted_code(adj, root, usize::MAX)))
        .min_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)))
        .expect("non-empty tree")
}

fn canonical_code(adj: &[Vec<usize>]) -> String {
    canonical_root(adj).1
}

/// Automorphisms of a tree rooted at `v` (fixing the root).
fn rooted_automorphisms(adj: &[Vec<usize>], v: usize, parent: usize) -> u64 {
    let mut by_code: BTreeMap<String, u64> = BTreeMap::new();
    let mut product = 1u64;
    for &u in adj[v].iter().filter(|&&u| u != parent) {
        product *= rooted_automorphisms(adj, u, v);
        *by_code.entry(rooted_code(adj, u, v)).or_default() += 1;
    }
    for m in by_code.into_values() {
        product *= (1..=m).product::<u64>();
    }
    product
}

fn centres(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    if n <= 2 {
        return (0..n).collect();
    }
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut removed = vec![false; n];
    let mut leaves: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    let mut remaining = n;
    while remaining > 2 {
        remaining -= leaves.len();
        let mut next = Vec::new();
        for &leaf in &leaves {
            removed[leaf] = true;
        }
        for &leaf in &leaves {
            for &u in adj[leaf].iter().filter(|&&u| !removed[u]) {
                degree[u] -= 1;
                if degree[u] == 1 {
                    next.push(u);
                }
            }
        }
        leaves = next;
    }
    leaves
}

fn automorphisms(adj: &[Vec<usize>]) -> u64 {
    match centres(adj).as_slice() {
        [c] => rooted_automorphisms(adj, *c, usize::MAX),
        [a, b] => {
            let (a, b) = (*a, *b);
            let left = rooted_automorphisms(adj, a, b);
            let right = rooted_automorphisms(adj, b, a);
            let swap = if rooted_code(adj, a, b) == rooted_code(adj, b, a) {
                2
            } else {
                1
            };
            left * right * swap
        }
        _ => unreachable!("a tree has one or two centres"),
    }
}

/// Relabel so the canonical root is 0 and vertices follow breadth-first
/// order with children sorted by code.
fn canonical_representative(adj: &[Vec<usize>]) -> Vec<(usize, usize)> {
    let (root, _) = canonical_root(adj);
    let mut label = vec![usize::MAX; adj.len()];
    label[root] = 0;
    let mut queue = std::collections::VecDeque::from([(root, usize::MAX)]);
    let mut next = 1;
    let mut edges = Vec::new();
    while let Some((v, parent)) = queue.pop_front() {
        let mut children: Vec<(String, usize)> = adj[v]
            .iter()
            .filter(|&&u| u != parent)
            .map(|&u| (rooted_code(adj, u, v), u))
            .collect();
        children.sort();
        for (_, u) in children {
            label[u] = next;
            next += 1;
            edges.push((label[v], label[u]));
            queue.push_back((u, v));
        }
    }
    edges
}

/// Decode a Prüfer sequence into the edges of a labeled tree on
/// `seq.len() + 2` vertices.
fn prufer_edges(seq: &[usize]) -> Vec<(usize, usize)> {
    let n = seq.len() + 2;
    let mut degree = vec![1usize; n];
    for &s in seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &s in seq {
        let leaf = (0..n).find(|&v| degree[v] == 1).expect("a leaf exists");
        edges.push((leaf, s));
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

/// All unlabeled trees on `k` vertices.
///
/// Every labeled tree is generated from its Prüfer sequence and reduced to
/// a canonical code; a shape with `c` labeled copies has `k!/c`
/// automorphisms. Shapes are returned in canonical-code order.
pub fn enumerate_trees(k: usize) -> Result<Vec<TreeShape>> {
    if k == 0 {
        return Err(Error::validation("trees need at least one vertex"));
    }
    if k > TREE_ENUMERATION_CAP {
        return Err(Error::CapExceeded {
            what: "tree size",
            got: k,
            cap: TREE_ENUMERATION_CAP,
            hint: "labeled enumeration grows as k^(k-2)",
        });
    }
    static CACHE: [OnceLock<Vec<TreeShape>>; TREE_ENUMERATION_CAP + 1] =
        [const { OnceLock::new() }; TREE_ENUMERATION_CAP + 1];
    if let Some(shapes) = CACHE[k].get() {
        return Ok(shapes.clone());
    }
    let shapes = enumerate_uncached(k)?;
    Ok(CACHE[k].get_or_init(|| shapes).clone())
}

fn enumerate_uncached(k: usize) -> Result<Vec<TreeShape>> {
    if k == 1 {
        return Ok(vec![TreeShape::single_vertex()]);
    }
    let mut shapes: BTreeMap<String, (u64, Vec<Vec<usize>>)> = BTreeMap::new();
    let len = k - 2;
    let total = (k as u64).pow(len as u32);
    let mut seq = vec![0usize; len];
    for index in 0..total {
        let mut x = index;
        for s in seq.iter_mut() {
            *s = (x % k as u64) as usize;
            x /= k as u64;
        }
        let adj = adjacency(k, &prufer_edges(&seq));
        let code = canonical_code(&adj);
        shapes
            .entry(code)
            .and_modify(|e| e.0 += 1)
            .or_insert((1, adj));
    }
    let k_factorial: u64 = (1..=k as u64).product();
    shapes
        .into_values()
        .map(|(copies, adj)| {
            let mut shape = TreeShape::new(k, canonical_representative(&adj))?;
            debug_assert_eq!(k_factorial % copies, 0);
            debug_assert_eq!(shape.aut, k_factorial / copies);
            shape.aut = k_factorial / copies;
            Ok(shape)
        })
        .collect()
}
