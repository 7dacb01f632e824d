//! Sampling `G(A)` for block-constant `A` and decomposing it into components.

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cut::stream_rng;
use crate::error::{Error, Result};
use crate::kernel::{BlockMatrix, StepKernel};

/// Block-constant symmetric matrix `A` on `n` vertices.
///
/// Entry `a_uv` is `(scale_num / scale_den) * kernel(class u, class v)` and
/// the edge `uv` appears with probability `min(a_uv / divisor, 1)`. The
/// scale and divisor are kept as integers so that rescaled matrices such as
/// `(m/n) A~` with divisor `m` give bit-identical edge probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeProbabilityMatrix {
    class_of: Vec<u32>,
    kernel: StepKernel,
    scale_num: u64,
    scale_den: u64,
    divisor: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Largest-remainder apportionment of `n` among the weights; ties in the
/// remainder go to the lower class index.
pub fn apportion(weights: &[f64], n: usize) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|w| w / total * n as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// `A_n` for a kernel: contiguous vertex blocks per class, sized by
/// largest-remainder apportionment of `n w_i`.
pub fn materialize(kernel: &StepKernel, n: usize) -> Result<EdgeProbabilityMatrix> {
    kernel.measure().require_probability("materializing a kernel")?;
    if n == 0 {
        return Err(Error::validation("n must be at least 1"));
    }
    if kernel.classes() > u32::MAX as usize {
        return Err(Error::validation("too many classes"));
    }
    let counts = apportion(kernel.weights(), n);
    let class_of = counts
        .iter()
        .enumerate()
        .flat_map(|(i, &c)| std::iter::repeat_n(i as u32, c))
        .collect();
    Ok(EdgeProbabilityMatrix {
        class_of,
        kernel: kernel.clone(),
        scale_num: 1,
        scale_den: 1,
        divisor: n as u64,
    })
}

impl EdgeProbabilityMatrix {
    pub fn n(&self) -> usize {
        self.class_of.len()
    }

    pub fn class_of(&self) -> &[u32] {
        &self.class_of
    }

    pub fn kernel(&self) -> &StepKernel {
        &self.kernel
    }

    pub fn divisor(&self) -> u64 {
        self.divisor
    }

    /// Multiplier applied to kernel values, as a reduced fraction.
    pub fn scale(&self) -> (u64, u64) {
        (self.scale_num, self.scale_den)
    }

    /// `a_uv`.
    pub fn entry(&self, u: usize, v: usize) -> f64 {
        self.block_entry(self.class_of[u] as usize, self.class_of[v] as usize)
    }

    fn block_entry(&self, a: usize, b: usize) -> f64 {
        self.kernel.value(a, b) * self.scale_num as f64 / self.scale_den as f64
    }

    /// `divisor * scale_den / scale_num`, reduced in integers first.
    fn effective_divisor(&self) -> f64 {
        let g1 = gcd(self.divisor, self.scale_num);
        let g2 = gcd(self.scale_den, self.scale_num / g1);
        let num = (self.divisor / g1) as f64 * (self.scale_den / g2) as f64;
        num / (self.scale_num / g1 / g2) as f64
    }

    fn block_probability(&self, a: usize, b: usize) -> f64 {
        (self.kernel.value(a, b) / self.effective_divisor()).min(1.0)
    }

    /// `min(a_uv / divisor, 1)` for `u != v`.
    pub fn edge_probability(&self, u: usize, v: usize) -> f64 {
        self.block_probability(self.class_of[u] as usize, self.class_of[v] as usize)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.kernel.classes()];
        for &c in &self.class_of {
            counts[c as usize] += 1;
        }
        counts
    }

    /// Maximal runs `(start, end, class)` of equal class.
    fn runs(&self) -> Vec<(usize, usize, usize)> {
        let mut runs = Vec::new();
        let mut start = 0;
        for v in 1..=self.n() {
            if v == self.n() || self.class_of[v] != self.class_of[start] {
                runs.push((start, v, self.class_of[start] as usize));
                start = v;
            }
        }
        runs
    }
}

/// Simple undirected graph on `0..n`, stored as a sorted edge list plus CSR
/// adjacency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampledGraph {
    n: usize,
    edges: Vec<(u32, u32)>,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    seed: Option<u64>,
}

impl SampledGraph {
    /// Build from edges `(u, v)` with `u < v`; rejects loops and repeats.
    pub fn from_edges(n: usize, mut edges: Vec<(u32, u32)>) -> Result<Self> {
        for e in edges.iter_mut() {
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
            if e.0 == e.1 || e.1 as usize >= n {
                return Err(Error::validation(format!("bad edge {e:?} on {n} vertices")));
            }
        }
        edges.sort_unstable();
        if edges.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::validation("repeated edge"));
        }
        Ok(Self::from_sorted(n, edges, None))
    }

    fn from_sorted(n: usize, edges: Vec<(u32, u32)>, seed: Option<u64>) -> Self {
        let mut degree = vec![0usize; n + 1];
        for &(u, v) in &edges {
            degree[u as usize + 1] += 1;
            degree[v as usize + 1] += 1;
        }
        for i in 1..=n {
            degree[i] += degree[i - 1];
        }
        let offsets = degree;
        let mut fill = offsets.clone();
        let mut neighbors = vec![0u32; 2 * edges.len()];
        for &(u, v) in &edges {
            neighbors[fill[u as usize]] = v;
            fill[u as usize] += 1;
            neighbors[fill[v as usize]] = u;
            fill[v as usize] += 1;
        }
        Self {
            n,
            edges,
            offsets,
            neighbors,
            seed,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// One `u v` line per edge, 1-indexed.
    pub fn write_edge_list(&self, mut out: impl Write) -> std::io::Result<()> {
        for &(u, v) in &self.edges {
            writeln!(out, "{} {}", u + 1, v + 1)?;
        }
        Ok(())
    }
}

/// Sample `G(A)`.
///
/// Row `u` draws the edges `uv`, `v > u`, from its own stream derived from
/// `(seed, u)`, skipping geometrically through each run of equal class. Rows
/// are processed in parallel and concatenated in row order, so the graph is
/// the same for any thread count.
pub fn sample(a: &EdgeProbabilityMatrix, seed: u64) -> SampledGraph {
    let runs = a.runs();
    let rows: Vec<Vec<(u32, u32)>> = (0..a.n())
        .into_par_iter()
        .map(|u| {
            let mut rng = stream_rng(seed, u as u64);
            let cu = a.class_of[u] as usize;
            let mut row = Vec::new();
            for &(start, end, cv) in &runs {
                if end <= u + 1 {
                    continue;
                }
                let start = start.max(u + 1);
                let p = a.block_probability(cu, cv);
                push_bernoulli_run(&mut row, u, start, end, p, &mut rng);
            }
            row
        })
        .collect();
    let edges = rows.concat();
    SampledGraph::from_sorted(a.n(), edges, Some(seed))
}

fn push_bernoulli_run(
    row: &mut Vec<(u32, u32)>,
    u: usize,
    start: usize,
    end: usize,
    p: f64,
    rng: &mut impl Rng,
) {
    if p <= 0.0 {
        return;
    }
    if p >= 1.0 {
        row.extend((start..end).map(|v| (u as u32, v as u32)));
        return;
    }
    let log_q = (-p).ln_1p();
    let mut v = start;
    loop {
        let x: f64 = rng.random();
        let skip = ((-x).ln_1p() / log_q).floor();
        if skip >= (end - v) as f64 {
            return;
        }
        v += skip as usize;
        row.push((u as u32, v as u32));
        v += 1;
        if v >= end {
            return;
        }
    }
}

struct DisjointSets {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a as usize] < self.size[b as usize] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b as usize] = a;
        self.size[a as usize] += self.size[b as usize];
    }
}

/// Components ranked by decreasing size, ties broken by smallest vertex.
/// Rank 0 is the giant `C_1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentDecomposition {
    component_of: Vec<u32>,
    sizes: Vec<usize>,
    min_vertex: Vec<u32>,
    edges_in: Vec<usize>,
}

pub fn components(g: &SampledGraph) -> ComponentDecomposition {
    let n = g.n();
    let mut sets = DisjointSets::new(n);
    for &(u, v) in g.edges() {
        sets.union(u, v);
    }
    // roots in order of first (= smallest) vertex
    let mut root_index = vec![u32::MAX; n];
    let mut sizes = Vec::new();
    let mut min_vertex = Vec::new();
    let mut provisional = vec![0u32; n];
    for v in 0..n as u32 {
        let root = sets.find(v) as usize;
        if root_index[root] == u32::MAX {
            root_index[root] = sizes.len() as u32;
            sizes.push(0usize);
            min_vertex.push(v);
        }
        let id = root_index[root];
        provisional[v as usize] = id;
        sizes[id as usize] += 1;
    }
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(min_vertex[a].cmp(&min_vertex[b])));
    let mut rank = vec![0u32; order.len()];
    for (r, &id) in order.iter().enumerate() {
        rank[id] = r as u32;
    }
    let component_of: Vec<u32> = provisional.iter().map(|&id| rank[id as usize]).collect();
    let mut edges_in = vec![0usize; order.len()];
    for &(u, _) in g.edges() {
        edges_in[component_of[u as usize] as usize] += 1;
    }
    ComponentDecomposition {
        component_of,
        sizes: order.iter().map(|&id| sizes[id]).collect(),
        min_vertex: order.iter().map(|&id| min_vertex[id]).collect(),
        edges_in,
    }
}

impl ComponentDecomposition {
    pub fn component_of(&self) -> &[u32] {
        &self.component_of
    }

    /// Sizes in rank order (non-increasing).
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    pub fn n(&self) -> usize {
        self.component_of.len()
    }

    pub fn giant_size(&self) -> usize {
        self.sizes.first().copied().unwrap_or(0)
    }

    pub fn second_size(&self) -> usize {
        self.sizes.get(1).copied().unwrap_or(0)
    }

    /// Smallest vertex of each component, in rank order.
    pub fn min_vertices(&self) -> &[u32] {
        &self.min_vertex
    }

    /// Edges inside each component, in rank order.
    pub fn edges_within(&self) -> &[usize] {
        &self.edges_in
    }

    pub fn in_giant(&self, v: usize) -> bool {
        self.component_of[v] == 0
    }

    pub fn component_size_of(&self, v: usize) -> usize {
        self.sizes[self.component_of[v] as usize]
    }

    /// Number of components of each size.
    pub fn size_spectrum(&self) -> BTreeMap<usize, usize> {
        let mut spectrum = BTreeMap::new();
        for &s in &self.sizes {
            *spectrum.entry(s).or_insert(0) += 1;
        }
        spectrum
    }

    /// Fraction of all vertices lying in components of exactly `k` vertices.
    pub fn vertex_fraction_in_size(&self, k: usize) -> f64 {
        if self.n() == 0 {
            return 0.0;
        }
        let count = self.sizes.iter().filter(|&&s| s == k).count();
        (count * k) as f64 / self.n() as f64
    }
}

/// `G~` (the graph with `C_1` deleted), `A~` (the matching principal
/// submatrix), and the original label of each remaining vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct GiantRemoved {
    pub graph: SampledGraph,
    pub matrix: EdgeProbabilityMatrix,
    pub vertex_map: Vec<u32>,
}

/// Delete the giant's vertices; survivors keep increasing label order.
pub fn remove_giant(
    g: &SampledGraph,
    a: &EdgeProbabilityMatrix,
    comp: &ComponentDecomposition,
) -> Result<GiantRemoved> {
    if g.n() != a.n() || comp.n() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            got: a.n().max(comp.n()),
        });
    }
    let mut new_label = vec![u32::MAX; g.n()];
    let mut vertex_map = Vec::with_capacity(g.n() - comp.giant_size());
    for v in 0..g.n() {
        if !comp.in_giant(v) {
            new_label[v] = vertex_map.len() as u32;
            vertex_map.push(v as u32);
        }
    }
    let edges = g
        .edges()
        .iter()
        .filter(|&&(u, _)| !comp.in_giant(u as usize))
        .map(|&(u, v)| (new_label[u as usize], new_label[v as usize]))
        .collect();
    let graph = SampledGraph::from_sorted(vertex_map.len(), edges, g.seed());
    let matrix = EdgeProbabilityMatrix {
        class_of: vertex_map.iter().map(|&v| a.class_of[v as usize]).collect(),
        ..a.clone()
    };
    Ok(GiantRemoved {
        graph,
        matrix,
        vertex_map,
    })
}

/// `B = (m/n) A~`, sampled with divisor `m`; edge probabilities are those
/// of `A~` with divisor `n`.
pub fn dual_matrix(a_tilde: &EdgeProbabilityMatrix, m: usize, n: usize) -> Result<EdgeProbabilityMatrix> {
    if a_tilde.n() != m {
        return Err(Error::DimensionMismatch {
            expected: a_tilde.n(),
            got: m,
        });
    }
    if n == 0 || m > n {
        return Err(Error::validation(format!("need 0 <= m <= n, got m = {m}, n = {n}")));
    }
    if m == 0 {
        return Ok(EdgeProbabilityMatrix {
            class_of: Vec::new(),
            divisor: 0,
            ..a_tilde.clone()
        });
    }
    // a~ entries are read against divisor n: rescale that to divisor m
    let num = a_tilde.scale_num * m as u64 * a_tilde.divisor;
    let den = a_tilde.scale_den * n as u64 * n as u64;
    let g = gcd(num, den);
    Ok(EdgeProbabilityMatrix {
        class_of: a_tilde.class_of.clone(),
        kernel: a_tilde.kernel.clone(),
        scale_num: num / g,
        scale_den: den / g,
        divisor: m as u64,
    })
}

/// `nu_{n,i}`: vertices of class `i` (outside `C_1` when `exclude_giant`)
/// divided by `n`.
pub fn type_census(
    comp: &ComponentDecomposition,
    a: &EdgeProbabilityMatrix,
    exclude_giant: bool,
) -> Vec<f64> {
    let mut counts = vec![0usize; a.kernel().classes()];
    for v in 0..a.n() {
        if !(exclude_giant && comp.in_giant(v)) {
            counts[a.class_of[v] as usize] += 1;
        }
    }
    counts.iter().map(|&c| c as f64 / a.n() as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexSet {
    Giant,
    NonGiant,
    All,
}

/// `(1/n) sum f(class(v))` over the selected vertices, optionally only those
/// whose component has exactly `filter_size` vertices.
pub fn component_sum(
    comp: &ComponentDecomposition,
    a: &EdgeProbabilityMatrix,
    f: &[f64],
    over: VertexSet,
    filter_size: Option<usize>,
) -> Result<f64> {
    if f.len() != a.kernel().classes() {
        return Err(Error::DimensionMismatch {
            expected: a.kernel().classes(),
            got: f.len(),
        });
    }
    let mut acc = 0.0;
    for v in 0..a.n() {
        let selected = match over {
            VertexSet::Giant => comp.in_giant(v),
            VertexSet::NonGiant => !comp.in_giant(v),
            VertexSet::All => true,
        };
        if selected && filter_size.is_none_or(|k| comp.component_size_of(v) == k) {
            acc += f[a.class_of[v] as usize];
        }
    }
    Ok(acc / a.n() as f64)
}

/// What one sample of `G(A_n)` says about the giant and its complement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualityReport {
    pub n: usize,
    pub giant_fraction: f64,
    pub second_fraction: f64,
    pub giant_edges_per_n: f64,
    pub edges_per_n: f64,
    /// `m = n - |C_1|`.
    pub m: usize,
    /// `nu_{n,i}`.
    pub census: Vec<f64>,
    /// Fraction of `G~`'s vertices in components of size `k`, keyed by `k`.
    pub small_spectrum: BTreeMap<usize, f64>,
    /// `m / n`, the factor taking `A~` to `B`.
    pub dual_scale: f64,
}

pub fn duality_report(
    g: &SampledGraph,
    a: &EdgeProbabilityMatrix,
    comp: &ComponentDecomposition,
) -> Result<DualityReport> {
    let n = g.n();
    let removed = remove_giant(g, a, comp)?;
    let rest = components(&removed.graph);
    let m = removed.graph.n();
    let mut small_spectrum = BTreeMap::new();
    for (size, count) in rest.size_spectrum() {
        small_spectrum.insert(size, (size * count) as f64 / m.max(1) as f64);
    }
    Ok(DualityReport {
        n,
        giant_fraction: comp.giant_size() as f64 / n as f64,
        second_fraction: comp.second_size() as f64 / n as f64,
        giant_edges_per_n: comp.edges_within().first().copied().unwrap_or(0) as f64 / n as f64,
        edges_per_n: g.edge_count() as f64 / n as f64,
        m,
        census: type_census(comp, a, true),
        small_spectrum,
        dual_scale: m as f64 / n as f64,
    })
}
