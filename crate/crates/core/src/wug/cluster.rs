use super::{Clustering, Wug};
use crate::seed;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Attraction/repulsion boundary on the 1..4 scale.
pub const EDGE_THRESHOLD: f64 = 2.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Components up to this size are solved exhaustively.
    pub exact_limit: usize,
    pub restarts: usize,
    /// Annealing steps per restart are `steps_factor * n^2`.
    pub steps_factor: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { exact_limit: 10, restarts: 20, steps_factor: 100, seed: 0 }
    }
}

/// Undirected weighted graph over nodes `0..n`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedGraph {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl WeightedGraph {
    pub fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> Self {
        debug_assert!(edges.iter().all(|&(a, b, _)| a < n && b < n && a != b));
        WeightedGraph { n, edges }
    }

    fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b, w) in &self.edges {
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
        adj
    }

    pub fn loss(&self, labels: &[usize]) -> f64 {
        self.edges.iter().map(|&(a, b, w)| edge_cost(w, labels[a] == labels[b])).sum()
    }

    /// Connected components, each listed in ascending node order.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let adj = self.adjacency();
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for &(u, _) in &adj[v] {
                    if !seen[u] {
                        seen[u] = true;
                        comp.push(u);
                        stack.push(u);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    fn induced(&self, nodes: &[usize]) -> WeightedGraph {
        let mut local = vec![usize::MAX; self.n];
        for (i, &v) in nodes.iter().enumerate() {
            local[v] = i;
        }
        let edges = self
            .edges
            .iter()
            .filter(|(a, b, _)| local[*a] != usize::MAX && local[*b] != usize::MAX)
            .map(|&(a, b, w)| (local[a], local[b], w))
            .collect();
        WeightedGraph::new(nodes.len(), edges)
    }
}

fn edge_cost(w: f64, same: bool) -> f64 {
    match (same, w < EDGE_THRESHOLD) {
        (true, true) => EDGE_THRESHOLD - w,
        (false, false) => w - EDGE_THRESHOLD,
        _ => 0.0,
    }
}

/// Renumber clusters by first appearance.
fn canonical(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect()
}

/// Exhaustive search over all partitions (restricted growth strings) with branch and bound.
pub fn solve_exact(graph: &WeightedGraph) -> (Vec<usize>, f64) {
    let n = graph.n;
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    // edges to earlier nodes only, so partial loss is exact for the assigned prefix
    let mut back: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(a, b, w) in &graph.edges {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        back[hi].push((lo, w));
    }
    struct Search<'a> {
        back: &'a [Vec<(usize, f64)>],
        labels: Vec<usize>,
        best: Vec<usize>,
        best_loss: f64,
    }
    fn go(s: &mut Search, v: usize, clusters: usize, loss: f64) {
        if loss >= s.best_loss {
            return;
        }
        if v == s.labels.len() {
            s.best_loss = loss;
            s.best.clone_from(&s.labels);
            return;
        }
        for c in 0..=clusters {
            let add: f64 = s.back[v].iter().map(|&(u, w)| edge_cost(w, s.labels[u] == c)).sum();
            s.labels[v] = c;
            go(s, v + 1, clusters.max(c + 1), loss + add);
        }
    }
    let mut s = Search { back: &back, labels: vec![0; n], best: vec![0; n], best_loss: f64::INFINITY };
    go(&mut s, 0, 0, 0.0);
    (s.best, s.best_loss)
}

struct Anneal<'a> {
    adj: &'a [Vec<(usize, f64)>],
    labels: Vec<usize>,
    sizes: Vec<usize>,
    free: Vec<usize>,
}

impl Anneal<'_> {
    fn new<'a>(adj: &'a [Vec<(usize, f64)>], init: Vec<usize>) -> Anneal<'a> {
        let n = adj.len();
        let labels = canonical(&init);
        // one spare slot per node so a fresh cluster is always available
        let mut sizes = vec![0; n + 1];
        for &l in &labels {
            sizes[l] += 1;
        }
        let free = (0..=n).filter(|&c| sizes[c] == 0).collect();
        Anneal { adj, labels, sizes, free }
    }

    fn delta(&self, v: usize, to: usize) -> f64 {
        let from = self.labels[v];
        self.adj[v]
            .iter()
            .map(|&(u, w)| {
                let lu = self.labels[u];
                edge_cost(w, lu == to) - edge_cost(w, lu == from)
            })
            .sum()
    }

    fn fresh(&self) -> usize {
        *self.free.last().expect("spare cluster slot")
    }

    fn apply(&mut self, v: usize, to: usize) {
        let from = self.labels[v];
        if from == to {
            return;
        }
        if self.sizes[to] == 0 {
            self.free.retain(|&c| c != to);
        }
        self.sizes[to] += 1;
        self.sizes[from] -= 1;
        if self.sizes[from] == 0 {
            self.free.push(from);
        }
        self.labels[v] = to;
    }

    /// Move targets for `v`: clusters of its neighbours plus a fresh cluster.
    fn candidates(&self, v: usize) -> Vec<usize> {
        let mut c: Vec<usize> = self.adj[v].iter().map(|&(u, _)| self.labels[u]).collect();
        c.push(self.fresh());
        c.sort_unstable();
        c.dedup();
        c.retain(|&x| x != self.labels[v]);
        c
    }

    /// Best-improvement local search until no single move lowers the loss.
    fn polish(&mut self) {
        loop {
            let mut improved = false;
            for v in 0..self.labels.len() {
                let best = self
                    .candidates(v)
                    .into_iter()
                    .map(|c| (self.delta(v, c), c))
                    .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                if let Some((d, c)) = best {
                    if d < -1e-12 {
                        self.apply(v, c);
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
    }
}

fn initial_labels(graph: &WeightedGraph, restart: usize, rng: &mut impl Rng) -> Vec<usize> {
    let n = graph.n;
    match restart {
        0 => {
            let positive = WeightedGraph::new(
                n,
                graph.edges.iter().copied().filter(|e| e.2 >= EDGE_THRESHOLD).collect(),
            );
            let mut labels = vec![0; n];
            for (c, comp) in positive.components().into_iter().enumerate() {
                for v in comp {
                    labels[v] = c;
                }
            }
            labels
        }
        1 => vec![0; n],
        2 => (0..n).collect(),
        _ => {
            let k = rng.random_range(1..=n);
            (0..n).map(|_| rng.random_range(0..k)).collect()
        }
    }
}

/// Simulated annealing with seeded restarts; the lowest-loss restart wins, ties to the lowest index.
pub fn solve_annealing(graph: &WeightedGraph, config: &SolverConfig) -> (Vec<usize>, f64) {
    let n = graph.n;
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    let adj = graph.adjacency();
    let steps = config.steps_factor.max(1) * n * n;
    let results: Vec<(Vec<usize>, f64)> = (0..config.restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = seed::rng(config.seed, &["anneal", &n.to_string(), &r.to_string()]);
            let mut st = Anneal::new(&adj, initial_labels(graph, r, &mut rng));
            let t0 = initial_temperature(&st, &mut rng);
            let t_end = t0 * 1e-3;
            let cooling = (t_end / t0).powf(1.0 / steps as f64);
            let mut temp = t0;
            let mut loss = graph.loss(&st.labels);
            let mut best = (st.labels.clone(), loss);
            for _ in 0..steps {
                let v = rng.random_range(0..n);
                let to = if rng.random_bool(0.1) || st.adj[v].is_empty() {
                    st.fresh()
                } else {
                    let (u, _) = st.adj[v][rng.random_range(0..st.adj[v].len())];
                    st.labels[u]
                };
                if to != st.labels[v] {
                    let d = st.delta(v, to);
                    if d <= 0.0 || rng.random::<f64>() < (-d / temp).exp() {
                        st.apply(v, to);
                        loss += d;
                        if loss < best.1 - 1e-12 {
                            best = (st.labels.clone(), loss);
                        }
                    }
                }
                temp *= cooling;
            }
            let mut st = Anneal::new(&adj, best.0);
            st.polish();
            let labels = canonical(&st.labels);
            let loss = graph.loss(&labels);
            (labels, loss)
        })
        .collect();
    results
        .into_iter()
        .reduce(|a, b| if b.1 < a.1 - 1e-12 { b } else { a })
        .expect("at least one restart")
}

/// Temperature at which roughly 80% of sampled uphill moves are accepted.
fn initial_temperature(st: &Anneal, rng: &mut impl Rng) -> f64 {
    let n = st.labels.len();
    let mut uphill = Vec::new();
    for _ in 0..(20 * n).max(100) {
        let v = rng.random_range(0..n);
        let candidates = st.candidates(v);
        if candidates.is_empty() {
            continue;
        }
        let d = st.delta(v, candidates[rng.random_range(0..candidates.len())]);
        if d > 0.0 {
            uphill.push(d);
        }
    }
    if uphill.is_empty() {
        return 1.0;
    }
    let mean = uphill.iter().sum::<f64>() / uphill.len() as f64;
    -mean / 0.8f64.ln()
}

/// Cluster each connected component separately: exact up to `exact_limit` nodes, annealing above.
pub fn cluster_graph(graph: &WeightedGraph, config: &SolverConfig) -> (Vec<usize>, f64) {
    let mut labels = vec![0; graph.n];
    let mut next = 0;
    let mut total = 0.0;
    for comp in graph.components() {
        let sub = graph.induced(&comp);
        let (local, loss) = if sub.n <= config.exact_limit {
            solve_exact(&sub)
        } else {
            solve_annealing(&sub, config)
        };
        total += loss;
        let k = local.iter().copied().max().map_or(0, |m| m + 1);
        for (i, &v) in comp.iter().enumerate() {
            labels[v] = next + local[i];
        }
        next += k;
    }
    (labels, total)
}

fn wug_graph(wug: &Wug) -> (Vec<String>, WeightedGraph) {
    let ids: Vec<String> = wug.active_nodes().map(|n| n.usage_id.clone()).collect();
    let index: std::collections::HashMap<&str, usize> =
        ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let edges = wug
        .edges()
        .into_iter()
        .filter_map(|(p, w)| Some((*index.get(p.0.as_str())?, *index.get(p.1.as_str())?, w)))
        .collect();
    let graph = WeightedGraph::new(ids.len(), edges);
    (ids, graph)
}

/// Cluster the active nodes of a graph; excluded usages receive no cluster.
pub fn cluster_wug(wug: &Wug, config: &SolverConfig) -> (Clustering, f64) {
    let (ids, graph) = wug_graph(wug);
    let (labels, loss) = cluster_graph(&graph, config);
    (ids.into_iter().zip(labels).collect(), loss)
}

/// Loss divided by the worst-case bound `sum |w - 2.5|`; 0 when that bound is 0.
///
/// Edges touching an unclustered node are ignored.
pub fn normalized_loss(wug: &Wug, clustering: &Clustering) -> f64 {
    let mut loss = 0.0;
    let mut bound = 0.0;
    for (p, w) in wug.edges() {
        let (Some(a), Some(b)) = (clustering.get(&p.0), clustering.get(&p.1)) else { continue };
        loss += edge_cost(w, a == b);
        bound += (w - EDGE_THRESHOLD).abs();
    }
    if bound == 0.0 {
        0.0
    } else {
        loss / bound
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wug::tests::usage;
    use crate::wug::{Judgment, Rating};
    use crate::Period;

    #[test]
    fn two_node_optima() {
        let g = WeightedGraph::new(2, vec![(0, 1, 4.0)]);
        assert_eq!(cluster_graph(&g, &SolverConfig::default()), (vec![0, 0], 0.0));
        let g = WeightedGraph::new(2, vec![(0, 1, 1.0)]);
        assert_eq!(cluster_graph(&g, &SolverConfig::default()), (vec![0, 1], 0.0));
    }

    #[test]
    fn isolated_nodes_are_singletons() {
        let g = WeightedGraph::new(4, vec![(0, 1, 4.0)]);
        let (labels, _) = cluster_graph(&g, &SolverConfig::default());
        assert_eq!(labels, vec![0, 0, 1, 2]);
    }

    #[test]
    fn frustrated_triangle() {
        // two attractive edges, one repulsive: best is to cut one edge at cost 1.5 or merge at cost 1.5
        let g = WeightedGraph::new(3, vec![(0, 1, 4.0), (1, 2, 4.0), (0, 2, 1.0)]);
        assert_eq!(solve_exact(&g).1, 1.5);
        assert_eq!(solve_annealing(&g, &SolverConfig::default()).1, 1.5);
    }

    #[test]
    fn annealing_on_large_two_block_graph() {
        let n = 30;
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                edges.push((a, b, if (a < 15) == (b < 15) { 4.0 } else { 1.0 }));
            }
        }
        let g = WeightedGraph::new(n, edges);
        let (labels, loss) = cluster_graph(&g, &SolverConfig::default());
        assert_eq!(loss, 0.0);
        assert!(labels[..15].iter().all(|&l| l == labels[0]));
        assert!(labels[15..].iter().all(|&l| l == labels[15]));
        assert_ne!(labels[0], labels[15]);
    }

    #[test]
    fn wug_clustering_and_normalized_loss() {
        let nodes = vec![usage("a", Period::C1), usage("b", Period::C2), usage("c", Period::C2)];
        let j = |a: &str, b: &str, r| Judgment::new(a, b, "x", Rating::Score(r));
        let wug = Wug::from_parts("w", nodes, vec![j("a", "b", 4), j("b", "c", 1)]).unwrap();
        let (c, loss) = cluster_wug(&wug, &SolverConfig::default());
        assert_eq!(loss, 0.0);
        assert_eq!(c["a"], c["b"]);
        assert_ne!(c["b"], c["c"]);
        assert_eq!(normalized_loss(&wug, &c), 0.0);

        let split: Clustering = [("a", 0), ("b", 1), ("c", 2)].into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        assert!((normalized_loss(&wug, &split) - 1.5 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_edge_worst_case() {
        let nodes = vec![usage("a", Period::C1), usage("b", Period::C2)];
        let wug = Wug::from_parts("w", nodes, vec![Judgment::new("a", "b", "x", Rating::Score(4))]).unwrap();
        let split: Clustering = [("a".to_string(), 0), ("b".to_string(), 1)].into();
        assert_eq!(normalized_loss(&wug, &split), 1.0);
    }
}
