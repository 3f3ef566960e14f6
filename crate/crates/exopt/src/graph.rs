//! Undirected simple graphs: adjacency-list data model, random geometric
//! graph generation, connectivity statistics, and Chaco-style file I/O.

use crate::error::{Error, Result};
use crate::rank::SolverRng;
use rand::Rng;
use rand::SeedableRng;
use std::collections::VecDeque;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

/// Undirected simple graph over vertices `0..n` with sorted adjacency
/// lists. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    adjacency: Vec<Vec<u32>>,
    m_edges: usize,
    coords: Option<Vec<(f64, f64)>>,
}

impl Graph {
    /// Builds a graph from undirected edge pairs. Rejects self-loops,
    /// duplicate edges and out-of-range endpoints.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Graph> {
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a == b {
                return Err(Error::invalid_arg(format!("self-loop at vertex {a}")));
            }
            if a as usize >= n || b as usize >= n {
                return Err(Error::invalid_arg(format!(
                    "edge ({a}, {b}) out of range for {n} vertices"
                )));
            }
            adjacency[a as usize].push(b);
            adjacency[b as usize].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::invalid_arg("duplicate edge"));
            }
        }
        Ok(Graph {
            adjacency,
            m_edges: edges.len(),
            coords: None,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.m_edges
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    /// Mean connectivity α = 2m/n.
    pub fn mean_connectivity(&self) -> f64 {
        if self.adjacency.is_empty() {
            return 0.0;
        }
        2.0 * self.m_edges as f64 / self.adjacency.len() as f64
    }

    /// Point coordinates, present on generated geometric graphs.
    pub fn coords(&self) -> Option<&[(f64, f64)]> {
        self.coords.as_deref()
    }

    /// Sizes of the connected components, largest first.
    pub fn component_sizes(&self) -> Vec<usize> {
        let n = self.vertex_count();
        let mut seen = vec![false; n];
        let mut sizes = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            queue.push_back(start as u32);
            let mut size = 0usize;
            while let Some(u) = queue.pop_front() {
                size += 1;
                for &w in self.neighbors(u as usize) {
                    if !seen[w as usize] {
                        seen[w as usize] = true;
                        queue.push_back(w);
                    }
                }
            }
            sizes.push(size);
        }
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes
    }

    pub fn largest_component_size(&self) -> usize {
        self.component_sizes().first().copied().unwrap_or(0)
    }

    /// Full structural check: symmetric, simple, sorted adjacency, edge
    /// count consistent. For tests and debugging.
    pub fn validate(&self) -> Result<()> {
        let n = self.vertex_count();
        let mut degree_sum = 0usize;
        for (i, list) in self.adjacency.iter().enumerate() {
            degree_sum += list.len();
            for w in list.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::InvalidState(format!(
                        "adjacency of {i} not strictly sorted"
                    )));
                }
            }
            for &j in list {
                if j as usize >= n {
                    return Err(Error::InvalidState(format!("neighbor {j} out of range")));
                }
                if j as usize == i {
                    return Err(Error::InvalidState(format!("self-loop at {i}")));
                }
                if self.adjacency[j as usize].binary_search(&(i as u32)).is_err() {
                    return Err(Error::InvalidState(format!(
                        "asymmetric adjacency: {i} lists {j} but not vice versa"
                    )));
                }
            }
        }
        if degree_sum != 2 * self.m_edges {
            return Err(Error::InvalidState(format!(
                "edge count {} inconsistent with degree sum {degree_sum}",
                self.m_edges
            )));
        }
        Ok(())
    }
}

/// Recipe for a random geometric graph: `n` points uniform in the unit
/// square, an edge between any two points closer than the threshold
/// distance `d` with nπd² = α.
#[derive(Clone, Copy, Debug)]
pub struct GeometricSpec {
    pub n: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl GeometricSpec {
    pub fn new(n: usize, alpha: f64, seed: u64) -> Self {
        GeometricSpec { n, alpha, seed }
    }

    /// Threshold distance d = sqrt(α / (π n)).
    pub fn threshold_distance(&self) -> f64 {
        (self.alpha / (std::f64::consts::PI * self.n as f64)).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid_arg("geometric graph needs n >= 2"));
        }
        if !self.alpha.is_finite() || self.alpha <= 0.0 {
            return Err(Error::invalid_arg(format!(
                "alpha must be positive and finite, got {}",
                self.alpha
            )));
        }
        let d = self.threshold_distance();
        if d > std::f64::consts::SQRT_2 {
            return Err(Error::invalid_arg(format!(
                "alpha {} implies threshold distance {d:.4} > sqrt(2); the graph would be complete",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Generates the random geometric graph for `spec`. Deterministic per seed;
/// point coordinates are retained on the returned graph.
pub fn generate_geometric(spec: &GeometricSpec) -> Result<Graph> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = SolverRng::seed_from_u64(spec.seed);
    let points: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen(), rng.gen())).collect();
    let d2 = spec.threshold_distance().powi(2);

    let mut adjacency = vec![Vec::new(); n];
    let mut m_edges = 0usize;
    for i in 0..n {
        let (xi, yi) = points[i];
        for j in (i + 1)..n {
            let dx = xi - points[j].0;
            let dy = yi - points[j].1;
            if dx * dx + dy * dy < d2 {
                adjacency[i].push(j as u32);
                adjacency[j].push(i as u32);
                m_edges += 1;
            }
        }
    }
    // The sweep order leaves each list already sorted.
    Ok(Graph {
        adjacency,
        m_edges,
        coords: Some(points),
    })
}

/// Reads a graph in the adjacency file format (see [`write_graph`]).
pub fn read_graph(path: impl AsRef<Path>) -> Result<Graph> {
    let text = fs::read_to_string(path)?;
    parse_graph(&text)
}

/// Parses the adjacency format from a string.
///
/// Format: header line `<n> <m>`, then one line per vertex (1-based)
/// listing its neighbors as 1-based indices; blank line for an isolated
/// vertex; `#` starts a comment line which is skipped entirely.
pub fn parse_graph(text: &str) -> Result<Graph> {
    let total_lines = text.lines().count();
    let mut data_lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim_start().starts_with('#'));

    let (header_no, header) = data_lines
        .next()
        .ok_or_else(|| Error::parse(1, "missing header line"))?;
    let mut head = header.split_ascii_whitespace();
    let n: usize = head
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::parse(header_no, "malformed header: expected `<n> <m>`"))?;
    let m: usize = head
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::parse(header_no, "malformed header: expected `<n> <m>`"))?;
    if head.next().is_some() {
        return Err(Error::parse(header_no, "trailing tokens in header"));
    }

    let mut adjacency: Vec<Vec<u32>> = Vec::with_capacity(n);
    let mut line_of_vertex = Vec::with_capacity(n);
    for vertex in 0..n {
        let (line_no, line) = data_lines.next().ok_or_else(|| {
            Error::parse(
                total_lines,
                format!("unexpected end of file: missing line for vertex {}", vertex + 1),
            )
        })?;
        line_of_vertex.push(line_no);
        let mut list = Vec::new();
        for token in line.split_ascii_whitespace() {
            let neighbor: usize = token.parse().map_err(|_| {
                Error::parse(line_no, format!("invalid neighbor index {token:?}"))
            })?;
            if neighbor == 0 || neighbor > n {
                return Err(Error::parse(
                    line_no,
                    format!("neighbor {neighbor} out of range 1..={n}"),
                ));
            }
            if neighbor == vertex + 1 {
                return Err(Error::parse(
                    line_no,
                    format!("self-loop at vertex {}", vertex + 1),
                ));
            }
            list.push((neighbor - 1) as u32);
        }
        list.sort_unstable();
        if list.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::parse(
                line_no,
                format!("duplicate neighbor in line of vertex {}", vertex + 1),
            ));
        }
        adjacency.push(list);
    }

    if let Some((line_no, line)) = data_lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(Error::parse(
            line_no,
            format!("trailing content after {n} vertex lines: {:?}", line.trim()),
        ));
    }

    // Symmetry.
    for i in 0..n {
        for &j in &adjacency[i] {
            if adjacency[j as usize].binary_search(&(i as u32)).is_err() {
                return Err(Error::parse(
                    line_of_vertex[i],
                    format!(
                        "asymmetric adjacency: vertex {} lists {} but not vice versa",
                        i + 1,
                        j + 1
                    ),
                ));
            }
        }
    }

    let degree_sum: usize = adjacency.iter().map(Vec::len).sum();
    if degree_sum != 2 * m {
        return Err(Error::parse(
            header_no,
            format!(
                "header declares {m} edges but adjacency lists imply {}",
                degree_sum / 2
            ),
        ));
    }

    Ok(Graph {
        adjacency,
        m_edges: m,
        coords: None,
    })
}

/// Writes the adjacency file format: `<n> <m>` header, then for vertex i
/// (1-based) a line of its neighbors as space-separated ascending 1-based
/// indices. LF endings, ASCII decimal.
pub fn write_graph(graph: &Graph, path: impl AsRef<Path>) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut out = BufWriter::new(file);
    write_graph_to(graph, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn write_graph_to(graph: &Graph, out: &mut impl Write) -> Result<()> {
    writeln!(out, "{} {}", graph.vertex_count(), graph.edge_count())?;
    let mut line = String::new();
    for v in 0..graph.vertex_count() {
        line.clear();
        for (k, &w) in graph.neighbors(v).iter().enumerate() {
            if k > 0 {
                line.push(' ');
            }
            line.push_str(&(w + 1).to_string());
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Serializes a graph to the adjacency format as a string.
pub fn graph_to_string(graph: &Graph) -> String {
    let mut buf = Vec::new();
    write_graph_to(graph, &mut buf).expect("write to Vec cannot fail");
    String::from_utf8(buf).expect("format is ASCII")
}
