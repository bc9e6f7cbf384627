//! Edge lists for graphs and hypergraphs.
//!
//! The first non-comment line is `<vertices> <edges>`; each following line
//! lists the 0-based vertices of one edge separated by whitespace. Lines
//! starting with `#` are comments. Graph edges have exactly two vertices.

use std::fmt::Write as _;

use crate::apps::coloring::Graph;
use crate::apps::hypergraph::Hypergraph;
use crate::harness::{parse_error, HarnessError};

/// Edges tagged with their line number.
type EdgeLines = Vec<(usize, Vec<usize>)>;

fn parse_lines(text: &str) -> Result<(usize, EdgeLines), HarnessError> {
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let nums: Vec<usize> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| parse_error(line_no, format!("bad number `{t}`"))))
            .collect::<Result<_, _>>()?;
        if header.is_none() {
            if nums.len() != 2 {
                return Err(parse_error(line_no, "expected `<vertices> <edges>`"));
            }
            header = Some((nums[0], nums[1]));
            continue;
        }
        let n = header.map(|h| h.0).unwrap_or(0);
        if let Some(&v) = nums.iter().find(|&&v| v >= n) {
            return Err(parse_error(line_no, format!("vertex {v} out of range for {n} vertices")));
        }
        edges.push((line_no, nums));
    }
    let (n, m) = header.ok_or_else(|| parse_error(last_line, "missing header"))?;
    if edges.len() != m {
        return Err(parse_error(last_line, format!("header declares {m} edges, found {}", edges.len())));
    }
    Ok((n, edges))
}

pub fn parse_graph(text: &str) -> Result<Graph, HarnessError> {
    let (n, lines) = parse_lines(text)?;
    let mut edges = Vec::with_capacity(lines.len());
    for (line, e) in lines {
        if e.len() != 2 {
            return Err(parse_error(line, format!("graph edge with {} vertices", e.len())));
        }
        if e[0] == e[1] {
            return Err(parse_error(line, format!("self loop at {}", e[0])));
        }
        edges.push((e[0], e[1]));
    }
    Ok(Graph::new(n, &edges)?)
}

pub fn write_graph(g: &Graph) -> String {
    let edges = g.edges();
    let mut out = format!("{} {}\n", g.num_vertices(), edges.len());
    for (a, b) in edges {
        let _ = writeln!(out, "{a} {b}");
    }
    out
}

pub fn parse_hypergraph(text: &str) -> Result<Hypergraph, HarnessError> {
    let (n, lines) = parse_lines(text)?;
    Ok(Hypergraph::new(n, lines.into_iter().map(|(_, e)| e).collect())?)
}

pub fn write_hypergraph(h: &Hypergraph) -> String {
    let mut out = format!("{} {}\n", h.num_vertices(), h.edges().len());
    for e in h.edges() {
        let line: Vec<String> = e.iter().map(usize::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}
