//! Chordal graph machinery: chordality test, minimum-degree chordal extension,
//! maximal cliques in running-intersection order, and clique overlap chains.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::model::AggregatePattern;

/// Simple undirected graph on vertices `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adj: Vec<BTreeSet<usize>>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            adj: vec![BTreeSet::new(); n + 1],
        }
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut g = Self::new(n);
        for (i, j) in edges {
            g.add_edge(i, j);
        }
        g
    }

    pub fn from_pattern(p: &AggregatePattern) -> Self {
        Self::from_edges(p.dim(), p.edges().iter().copied())
    }

    /// Adds `{i, j}`; self loops are ignored.
    pub fn add_edge(&mut self, i: usize, j: usize) {
        assert!(i >= 1 && j >= 1 && i <= self.n && j <= self.n, "vertex out of range");
        if i != j {
            self.adj[i].insert(j);
            self.adj[j].insert(i);
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i].contains(&j)
    }

    pub fn neighbors(&self, v: usize) -> &BTreeSet<usize> {
        &self.adj[v]
    }

    /// Edges as `(i, j)` with `i < j`.
    pub fn edges(&self) -> BTreeSet<(usize, usize)> {
        (1..=self.n)
            .flat_map(|i| self.adj[i].range(i + 1..).map(move |&j| (i, j)))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|a| a.len()).sum::<usize>() / 2
    }
}

/// Maximum cardinality search. Returns vertices in visit order; ties go to the
/// lowest index. The reverse of this order is a perfect elimination ordering
/// exactly when the graph is chordal.
fn max_cardinality_search(g: &Graph) -> Vec<usize> {
    let n = g.vertex_count();
    let mut weight = vec![0usize; n + 1];
    let mut visited = vec![false; n + 1];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (1..=n)
            .filter(|&v| !visited[v])
            .max_by(|&a, &b| weight[a].cmp(&weight[b]).then(b.cmp(&a)))
            .expect("unvisited vertex remains");
        visited[v] = true;
        order.push(v);
        for &u in g.neighbors(v) {
            if !visited[u] {
                weight[u] += 1;
            }
        }
    }
    order
}

/// True when, for every vertex, its neighbours later in `order` form a clique.
fn is_perfect_elimination_order(g: &Graph, order: &[usize]) -> bool {
    let pos = positions(g.vertex_count(), order);
    order.iter().all(|&v| {
        let later: Vec<usize> = g
            .neighbors(v)
            .iter()
            .copied()
            .filter(|&u| pos[u] > pos[v])
            .collect();
        later
            .iter()
            .enumerate()
            .all(|(k, &a)| later[k + 1..].iter().all(|&b| g.has_edge(a, b)))
    })
}

fn positions(n: usize, order: &[usize]) -> Vec<usize> {
    let mut pos = vec![usize::MAX; n + 1];
    for (k, &v) in order.iter().enumerate() {
        pos[v] = k;
    }
    pos
}

fn mcs_elimination_order(g: &Graph) -> Vec<usize> {
    let mut order = max_cardinality_search(g);
    order.reverse();
    order
}

pub fn is_chordal(g: &Graph) -> bool {
    is_perfect_elimination_order(g, &mcs_elimination_order(g))
}

/// A chordal supergraph together with one of its perfect elimination orderings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChordalExtension {
    base: Graph,
    added_edges: BTreeSet<(usize, usize)>,
    ordering: Vec<usize>,
}

impl ChordalExtension {
    pub fn base(&self) -> &Graph {
        &self.base
    }

    pub fn added_edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.added_edges
    }

    pub fn ordering(&self) -> &[usize] {
        &self.ordering
    }

    pub fn extended_graph(&self) -> Graph {
        let mut g = self.base.clone();
        for &(i, j) in &self.added_edges {
            g.add_edge(i, j);
        }
        g
    }

    /// Edge set of the extended graph, `i < j`.
    pub fn extended_edges(&self) -> BTreeSet<(usize, usize)> {
        let mut e = self.base.edges();
        e.extend(self.added_edges.iter().copied());
        e
    }
}

/// Chordal graphs are returned unchanged with an MCS ordering; otherwise
/// minimum-degree elimination (lowest index on ties) with symbolic fill-in.
pub fn chordal_extension(g: &Graph) -> ChordalExtension {
    let mcs = mcs_elimination_order(g);
    if is_perfect_elimination_order(g, &mcs) {
        return ChordalExtension {
            base: g.clone(),
            added_edges: BTreeSet::new(),
            ordering: mcs,
        };
    }

    let n = g.vertex_count();
    let mut work = g.adj.clone();
    let mut eliminated = vec![false; n + 1];
    let mut ordering = Vec::with_capacity(n);
    let mut added = BTreeSet::new();
    for _ in 0..n {
        let v = (1..=n)
            .filter(|&v| !eliminated[v])
            .min_by_key(|&v| (work[v].len(), v))
            .expect("vertex remains");
        let nbrs: Vec<usize> = work[v].iter().copied().collect();
        for (k, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[k + 1..] {
                if work[a].insert(b) {
                    work[b].insert(a);
                    added.insert((a.min(b), a.max(b)));
                }
            }
        }
        for &a in &nbrs {
            work[a].remove(&v);
        }
        eliminated[v] = true;
        ordering.push(v);
    }
    ChordalExtension {
        base: g.clone(),
        added_edges: added,
        ordering,
    }
}

/// Maximal cliques `C_1..C_p` ordered so that `C_l ∩ (C_1 ∪ … ∪ C_{l-1})` is
/// contained in a single earlier clique.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliqueSet {
    cliques: Vec<Vec<usize>>,
}

impl CliqueSet {
    /// Wraps an explicit clique list (vertices sorted within each clique).
    pub fn from_cliques(cliques: Vec<Vec<usize>>) -> Self {
        let cliques = cliques
            .into_iter()
            .map(|mut c| {
                c.sort_unstable();
                c.dedup();
                c
            })
            .collect();
        Self { cliques }
    }

    pub fn cliques(&self) -> &[Vec<usize>] {
        &self.cliques
    }

    pub fn len(&self) -> usize {
        self.cliques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cliques.is_empty()
    }

    /// Indices (0-based) of cliques containing both `i` and `j`, in clique order.
    pub fn covering(&self, i: usize, j: usize) -> Vec<usize> {
        self.cliques
            .iter()
            .enumerate()
            .filter(|(_, c)| c.binary_search(&i).is_ok() && c.binary_search(&j).is_ok())
            .map(|(l, _)| l)
            .collect()
    }

    /// Checks the running-intersection property of the current order.
    pub fn has_running_intersection(&self) -> bool {
        let mut seen: BTreeSet<usize> = BTreeSet::new();
        for (l, c) in self.cliques.iter().enumerate() {
            let sep: Vec<usize> = c.iter().copied().filter(|v| seen.contains(v)).collect();
            if l > 0
                && !sep.is_empty()
                && !self.cliques[..l]
                    .iter()
                    .any(|prev| sep.iter().all(|v| prev.binary_search(v).is_ok()))
            {
                return false;
            }
            seen.extend(c.iter().copied());
        }
        true
    }
}

/// Enumerates the maximal cliques of the extended graph.
///
/// Candidate cliques `{v} ∪ later-neighbours(v)` come from the elimination
/// ordering; non-maximal ones are dropped and the rest are arranged by a
/// maximum-weight spanning tree of the clique intersection graph, which yields
/// a running-intersection order.
pub fn maximal_cliques(ext: &ChordalExtension) -> Result<CliqueSet> {
    let g = ext.extended_graph();
    let order = ext.ordering();
    if order.len() != g.vertex_count() || !is_perfect_elimination_order(&g, order) {
        return Err(Error::NotChordal);
    }
    let pos = positions(g.vertex_count(), order);
    let mut candidates: Vec<Vec<usize>> = order
        .iter()
        .map(|&v| {
            let mut c: Vec<usize> = g
                .neighbors(v)
                .iter()
                .copied()
                .filter(|&u| pos[u] > pos[v])
                .collect();
            c.push(v);
            c.sort_unstable();
            c
        })
        .collect();
    candidates.sort();
    candidates.dedup();
    let maximal: Vec<Vec<usize>> = candidates
        .iter()
        .filter(|c| {
            !candidates
                .iter()
                .any(|d| d.len() > c.len() && c.iter().all(|v| d.binary_search(v).is_ok()))
        })
        .cloned()
        .collect();

    // Prim's algorithm on intersection sizes; ties resolve to the lowest index.
    let p = maximal.len();
    let mut placed = vec![false; p];
    let mut result = Vec::with_capacity(p);
    if p > 0 {
        placed[0] = true;
        result.push(maximal[0].clone());
        let mut best = vec![0usize; p];
        for l in 1..p {
            best[l] = overlap(&maximal[0], &maximal[l]);
        }
        for _ in 1..p {
            let next = (0..p)
                .filter(|&l| !placed[l])
                .max_by(|&a, &b| best[a].cmp(&best[b]).then(b.cmp(&a)))
                .expect("clique remains");
            placed[next] = true;
            result.push(maximal[next].clone());
            for l in 0..p {
                if !placed[l] {
                    best[l] = best[l].max(overlap(&maximal[next], &maximal[l]));
                }
            }
        }
    }
    Ok(CliqueSet { cliques: result })
}

fn overlap(a: &[usize], b: &[usize]) -> usize {
    a.iter().filter(|v| b.binary_search(v).is_ok()).count()
}

/// One equality `[X_u]_ij = [X_v]_ij` between clique copies (0-based clique indices).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Overlap {
    pub i: usize,
    pub j: usize,
    pub u: usize,
    pub v: usize,
}

/// Chains of equalities tying together every clique copy of a shared position.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OverlapSet {
    entries: Vec<Overlap>,
}

impl OverlapSet {
    pub fn entries(&self) -> &[Overlap] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// For each position `(i, j)`, `i <= j`, other than `(1, 1)`, covered by two or
/// more cliques, emits the consecutive pairs of its covering cliques.
pub fn overlap_set(cs: &CliqueSet) -> OverlapSet {
    let mut covering: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (l, c) in cs.cliques().iter().enumerate() {
        for (a, &i) in c.iter().enumerate() {
            for &j in &c[a..] {
                if (i, j) != (1, 1) {
                    covering.entry((i, j)).or_default().push(l);
                }
            }
        }
    }
    let entries = covering
        .into_iter()
        .flat_map(|((i, j), ls)| {
            ls.windows(2)
                .map(|w| Overlap {
                    i,
                    j,
                    u: w[0],
                    v: w[1],
                })
                .collect::<Vec<_>>()
        })
        .collect();
    OverlapSet { entries }
}
