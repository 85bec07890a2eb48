//! Weighted directed acyclic graphs as a combinatorial planning benchmark.
//!
//! The search space is the set of source→sink paths. Candidates are path
//! indices (in deterministic enumeration order), the objective is the
//! path's total edge weight, and indices beyond the last real path carry a
//! large sentinel cost so they never win. Edge weights may be negative —
//! everything here enumerates or folds over a DAG, so no nonnegativity
//! assumption is ever needed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevector::DEFAULT_QUBIT_CAP;

/// On-disk form: node names, `[from, to, weight]` edge triples, and named
/// source/sink endpoints.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct GraphFile {
    nodes: Vec<String>,
    edges: Vec<(String, String, f64)>,
    source: String,
    sink: String,
}

/// A validated directed acyclic graph with one source and one sink.
#[derive(Debug, Clone)]
pub struct StaticGraph {
    names: Vec<String>,
    /// Outgoing edges per node, sorted by target name so every traversal
    /// below is deterministic.
    adjacency: Vec<Vec<(usize, f64)>>,
    source: usize,
    sink: usize,
}

/// All source→sink paths of a graph, with their costs and the register
/// geometry needed to search over them.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    /// Node-index paths in deterministic (name-ordered depth-first) order.
    pub paths: Vec<Vec<usize>>,
    /// Total edge weight of each path, same order.
    pub costs: Vec<f64>,
    /// Smallest register that indexes every path: ceil(log2(#paths)).
    pub qubits: u32,
    /// Cost assigned to padding indices ≥ #paths.
    pub sentinel: f64,
}

impl StaticGraph {
    /// Parses and validates the JSON form.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: GraphFile =
            serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        Self::from_parts(file)
    }

    /// Serializes back to the JSON form (edges in adjacency order).
    pub fn to_json(&self) -> String {
        let edges = self
            .adjacency
            .iter()
            .enumerate()
            .flat_map(|(from, outs)| {
                outs.iter().map(move |(to, w)| {
                    (self.names[from].clone(), self.names[*to].clone(), *w)
                })
            })
            .collect();
        let file = GraphFile {
            nodes: self.names.clone(),
            edges,
            source: self.names[self.source].clone(),
            sink: self.names[self.sink].clone(),
        };
        serde_json::to_string_pretty(&file).expect("graph file form always serializes")
    }

    /// The built-in eight-node benchmark instance. Five source→sink paths
    /// with costs {23, 18, 22, 34, 29}; a greedy cheapest-next-edge walk
    /// reaches the sink at cost 23 while the optimum is 18.
    pub fn builtin() -> Self {
        Self::from_json(include_str!("../../data/static_graph.json"))
            .expect("built-in instance is valid")
    }

    fn from_parts(file: GraphFile) -> Result<Self> {
        if file.nodes.is_empty() {
            return Err(Error::Graph("graph has no nodes".into()));
        }
        let mut names = file.nodes;
        let index_of = |names: &[String], name: &str| -> Result<usize> {
            names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::Graph(format!("unknown node '{name}'")))
        };
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(Error::Graph(format!("duplicate node '{name}'")));
            }
        }
        let mut adjacency = vec![Vec::new(); names.len()];
        for (from, to, weight) in &file.edges {
            let f = index_of(&names, from)?;
            let t = index_of(&names, to)?;
            if !weight.is_finite() {
                return Err(Error::Graph(format!("edge {from}->{to} has non-finite weight")));
            }
            adjacency[f].push((t, *weight));
        }
        let source = index_of(&names, &file.source)?;
        let sink = index_of(&names, &file.sink)?;
        names.shrink_to_fit();
        for outs in &mut adjacency {
            let names_ref = &names;
            outs.sort_by(|a, b| names_ref[a.0].cmp(&names_ref[b.0]));
        }
        let graph = Self { names, adjacency, source, sink };
        graph.check_acyclic()?;
        Ok(graph)
    }

    /// Depth-first three-color cycle check over the whole node set.
    fn check_acyclic(&self) -> Result<()> {
        #[derive(Clone, Copy, PartialEq)]
        enum Color {
            White,
            Gray,
            Black,
        }
        let mut color = vec![Color::White; self.names.len()];
        // Iterative DFS with an explicit stack; frame = (node, next edge).
        for start in 0..self.names.len() {
            if color[start] != Color::White {
                continue;
            }
            let mut stack = vec![(start, 0usize)];
            color[start] = Color::Gray;
            while let Some((node, edge)) = stack.pop() {
                if edge < self.adjacency[node].len() {
                    stack.push((node, edge + 1));
                    let next = self.adjacency[node][edge].0;
                    match color[next] {
                        Color::Gray => {
                            return Err(Error::Graph(format!(
                                "directed cycle through node '{}'",
                                self.names[next]
                            )));
                        }
                        Color::White => {
                            color[next] = Color::Gray;
                            stack.push((next, 0));
                        }
                        Color::Black => {}
                    }
                } else {
                    color[node] = Color::Black;
                }
            }
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn node_name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn outgoing(&self, node: usize) -> &[(usize, f64)] {
        &self.adjacency[node]
    }

    /// Renders a node-index path as "a->d->e->h".
    pub fn path_display(&self, path: &[usize]) -> String {
        path.iter().map(|&n| self.names[n].as_str()).collect::<Vec<_>>().join("->")
    }

    /// Total edge weight along a node-index path.
    pub fn path_cost(&self, path: &[usize]) -> Result<f64> {
        let mut total = 0.0;
        for pair in path.windows(2) {
            let weight = self.adjacency[pair[0]]
                .iter()
                .find(|(to, _)| *to == pair[1])
                .map(|(_, w)| *w)
                .ok_or_else(|| {
                    Error::Graph(format!(
                        "no edge {}->{}",
                        self.names[pair[0]], self.names[pair[1]]
                    ))
                })?;
            total += weight;
        }
        Ok(total)
    }

    /// Number of source→sink paths, by dynamic programming over the DAG.
    pub fn path_count(&self) -> u64 {
        let mut order = self.topological_order();
        order.reverse(); // fold from sink backward
        let mut counts = vec![0u64; self.names.len()];
        counts[self.sink] = 1;
        for node in order {
            if node == self.sink {
                continue;
            }
            counts[node] = self.adjacency[node]
                .iter()
                .map(|(to, _)| counts[*to])
                .sum();
        }
        counts[self.source]
    }

    /// Nodes in a topological order (the graph is validated acyclic).
    fn topological_order(&self) -> Vec<usize> {
        let mut visited = vec![false; self.names.len()];
        let mut order = Vec::with_capacity(self.names.len());
        for start in 0..self.names.len() {
            if visited[start] {
                continue;
            }
            // Post-order DFS; push after all descendants.
            let mut stack = vec![(start, 0usize)];
            visited[start] = true;
            while let Some((node, edge)) = stack.pop() {
                if edge < self.adjacency[node].len() {
                    stack.push((node, edge + 1));
                    let next = self.adjacency[node][edge].0;
                    if !visited[next] {
                        visited[next] = true;
                        stack.push((next, 0));
                    }
                } else {
                    order.push(node);
                }
            }
        }
        order.reverse();
        order
    }

    /// Enumerates every source→sink path depth-first (neighbors in name
    /// order), together with costs and search-register geometry.
    pub fn enumerate(&self) -> Result<PathEnsemble> {
        let count = self.path_count();
        if count == 0 {
            return Err(Error::Graph(format!(
                "sink '{}' is unreachable from source '{}'",
                self.names[self.sink], self.names[self.source]
            )));
        }
        let qubits = (64 - (count - 1).leading_zeros()).max(1);
        if qubits > DEFAULT_QUBIT_CAP {
            return Err(Error::Resource { qubits, cap: DEFAULT_QUBIT_CAP });
        }

        let mut paths = Vec::with_capacity(count as usize);
        let mut prefix = vec![self.source];
        // Frame = (node, next edge index) mirroring `prefix`.
        let mut stack = vec![(self.source, 0usize)];
        while let Some((node, edge)) = stack.pop() {
            if node == self.sink {
                paths.push(prefix.clone());
                prefix.pop();
                continue;
            }
            if edge < self.adjacency[node].len() {
                stack.push((node, edge + 1));
                let next = self.adjacency[node][edge].0;
                prefix.push(next);
                stack.push((next, 0));
            } else {
                prefix.pop();
            }
        }
        debug_assert_eq!(paths.len() as u64, count);

        let costs: Vec<f64> = paths
            .iter()
            .map(|p| self.path_cost(p).expect("enumerated paths use real edges"))
            .collect();
        let max_abs = costs.iter().fold(1.0f64, |acc, c| acc.max(c.abs()));
        Ok(PathEnsemble { paths, costs, qubits, sentinel: 1000.0 * max_abs })
    }

    /// Greedy cheapest-next-edge walk from the source: at every node take
    /// the outgoing edge of minimum weight (ties broken by target name
    /// order) until the sink. Errors out on a dead end. This is the cheap
    /// warm-start heuristic for path problems — fast, and deliberately
    /// short-sighted.
    pub fn greedy_walk(&self) -> Result<(Vec<usize>, f64)> {
        let mut path = vec![self.source];
        let mut cost = 0.0;
        let mut node = self.source;
        while node != self.sink {
            let (next, weight) = self.adjacency[node]
                .iter()
                .copied()
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .ok_or_else(|| {
                    Error::Graph(format!(
                        "greedy walk dead-ends at '{}' before reaching the sink",
                        self.names[node]
                    ))
                })?;
            path.push(next);
            cost += weight;
            node = next;
            if path.len() > self.names.len() {
                return Err(Error::Graph("greedy walk exceeded node count".into()));
            }
        }
        Ok((path, cost))
    }
}

impl PathEnsemble {
    /// Objective over register indices: a path's cost where one exists,
    /// the sentinel on padding indices.
    pub fn objective(&self) -> impl Fn(u64) -> f64 + '_ {
        move |index| {
            self.costs
                .get(index as usize)
                .copied()
                .unwrap_or(self.sentinel)
        }
    }

    /// Minimum path cost (the ensemble is never empty).
    pub fn min_cost(&self) -> f64 {
        self.costs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Fraction of *valid paths* an oracle at this threshold would prune
    /// (cost not below the threshold). This measures search-space
    /// reduction over the real candidate set, as opposed to
    /// [`crate::gas::marked_fraction`], which counts register bitstrings.
    pub fn pruned_fraction(&self, threshold: f64, strict: bool) -> f64 {
        let kept = self
            .costs
            .iter()
            .filter(|&&c| if strict { c < threshold } else { c <= threshold })
            .count();
        1.0 - kept as f64 / self.costs.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn builtin_instance_has_expected_paths_and_costs() {
        let graph = StaticGraph::builtin();
        let ensemble = graph.enumerate().unwrap();
        assert_eq!(ensemble.paths.len(), 5);
        assert_eq!(ensemble.qubits, 3);

        let mut costs = ensemble.costs.clone();
        costs.sort_by(f64::total_cmp);
        assert_eq!(costs, vec![18.0, 22.0, 23.0, 29.0, 34.0]);
        assert_eq!(ensemble.min_cost(), 18.0);

        // Depth-first in name order: the a->b subtree comes first.
        let rendered: Vec<String> =
            ensemble.paths.iter().map(|p| graph.path_display(p)).collect();
        assert_eq!(
            rendered,
            vec![
                "a->b->c->d->e->f->g->h",
                "a->b->c->d->e->h",
                "a->b->c->f->g->h",
                "a->d->e->f->g->h",
                "a->d->e->h",
            ]
        );
        assert_eq!(ensemble.costs, vec![29.0, 34.0, 22.0, 18.0, 23.0]);
    }

    #[test]
    fn greedy_walk_takes_the_locally_cheapest_route() {
        let graph = StaticGraph::builtin();
        let (path, cost) = graph.greedy_walk().unwrap();
        assert_eq!(graph.path_display(&path), "a->d->e->h");
        assert_abs_diff_eq!(cost, 23.0, epsilon = 1e-12);
    }

    #[test]
    fn pruning_at_greedy_cost_removes_three_fifths_of_paths() {
        let graph = StaticGraph::builtin();
        let ensemble = graph.enumerate().unwrap();
        // Strictly below 23 keeps {18, 22}: 60% of paths pruned.
        assert_abs_diff_eq!(ensemble.pruned_fraction(23.0, true), 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(ensemble.pruned_fraction(23.0, false), 0.4, epsilon = 1e-12);
    }

    #[test]
    fn objective_pads_with_sentinel() {
        let graph = StaticGraph::builtin();
        let ensemble = graph.enumerate().unwrap();
        let objective = ensemble.objective();
        assert_eq!(objective(3), 18.0);
        // Max |cost| = 34 -> sentinel 34000 on the three padding indices.
        assert_eq!(objective(5), 34_000.0);
        assert_eq!(objective(7), 34_000.0);
    }

    #[test]
    fn json_round_trip_preserves_structure() {
        let graph = StaticGraph::builtin();
        let text = graph.to_json();
        let reloaded = StaticGraph::from_json(&text).unwrap();
        assert_eq!(reloaded.enumerate().unwrap().costs, graph.enumerate().unwrap().costs);
        assert_eq!(reloaded.node_count(), 8);
    }

    #[test]
    fn cycles_are_rejected() {
        let text = r#"{
            "nodes": ["a", "b", "c"],
            "edges": [["a", "b", 1.0], ["b", "c", 1.0], ["c", "a", 1.0]],
            "source": "a",
            "sink": "c"
        }"#;
        assert!(matches!(StaticGraph::from_json(text), Err(Error::Graph(_))));
    }

    #[test]
    fn unknown_nodes_and_unreachable_sinks_are_rejected() {
        let unknown = r#"{
            "nodes": ["a", "b"],
            "edges": [["a", "z", 1.0]],
            "source": "a",
            "sink": "b"
        }"#;
        assert!(matches!(StaticGraph::from_json(unknown), Err(Error::Graph(_))));

        let unreachable = r#"{
            "nodes": ["a", "b", "c"],
            "edges": [["b", "c", 1.0]],
            "source": "a",
            "sink": "c"
        }"#;
        let graph = StaticGraph::from_json(unreachable).unwrap();
        assert!(matches!(graph.enumerate(), Err(Error::Graph(_))));
    }

    #[test]
    fn path_count_matches_enumeration_on_a_dense_dag() {
        // Layered DAG with 2 choices per layer: 2^10 paths.
        let mut nodes = vec!["s".to_string()];
        let mut edges = Vec::new();
        let mut prev = vec!["s".to_string()];
        for layer in 0..10 {
            let a = format!("n{layer}a");
            let b = format!("n{layer}b");
            for p in &prev {
                edges.push((p.clone(), a.clone(), 1.0));
                edges.push((p.clone(), b.clone(), 2.0));
            }
            nodes.push(a.clone());
            nodes.push(b.clone());
            prev = vec![a, b];
        }
        nodes.push("t".to_string());
        for p in &prev {
            edges.push((p.clone(), "t".to_string(), 0.0));
        }
        let file = serde_json::json!({
            "nodes": nodes,
            "edges": edges.iter().map(|(f, t, w)| serde_json::json!([f, t, w])).collect::<Vec<_>>(),
            "source": "s",
            "sink": "t"
        });
        let graph = StaticGraph::from_json(&file.to_string()).unwrap();
        assert_eq!(graph.path_count(), 1024);
        let ensemble = graph.enumerate().unwrap();
        assert_eq!(ensemble.paths.len(), 1024);
        assert_eq!(ensemble.qubits, 10);
        assert_eq!(ensemble.min_cost(), 10.0);
    }
}
