//! Text formats for graphs, pair sets, and source sets.
//!
//! Graph files are UTF-8 text: the first non-comment line is the node count
//! `n`, every following line is an edge `u v`. Lines starting with `#` are
//! ignored. Pair files hold one `u v` pair per line, source files one node id
//! per line; both allow `#` comments.

use std::fs;
use std::path::Path;

use super::{Graph, GraphError, NodeId, PairSet};

fn parse_err(line: usize, msg: impl Into<String>) -> GraphError {
    GraphError::Parse {
        line,
        msg: msg.into(),
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_pair(line_no: usize, line: &str) -> Result<(u64, u64), GraphError> {
    let mut it = line.split_whitespace();
    let u = it
        .next()
        .ok_or_else(|| parse_err(line_no, "expected two node ids"))?;
    let v = it
        .next()
        .ok_or_else(|| parse_err(line_no, "expected two node ids"))?;
    if it.next().is_some() {
        return Err(parse_err(line_no, "expected exactly two node ids"));
    }
    let u = u
        .parse::<u64>()
        .map_err(|e| parse_err(line_no, format!("bad node id {u:?}: {e}")))?;
    let v = v
        .parse::<u64>()
        .map_err(|e| parse_err(line_no, format!("bad node id {v:?}: {e}")))?;
    Ok((u, v))
}

fn check_id(id: u64, n: usize) -> Result<NodeId, GraphError> {
    if (id as usize) < n {
        Ok(id as NodeId)
    } else {
        Err(GraphError::NodeRange { id, n })
    }
}

/// Parses a graph from its text form.
pub fn parse_graph(text: &str) -> Result<Graph, GraphError> {
    let mut lines = content_lines(text);
    let (line_no, header) = lines
        .next()
        .ok_or_else(|| parse_err(0, "empty graph file"))?;
    let n: usize = header
        .parse()
        .map_err(|e| parse_err(line_no, format!("bad node count {header:?}: {e}")))?;
    let mut edges = Vec::new();
    for (line_no, line) in lines {
        let (u, v) = parse_pair(line_no, line)?;
        edges.push((check_id(u, n)?, check_id(v, n)?));
    }
    Graph::from_edges(n, edges)
}

/// Loads a graph file (first line `n`, then `u v` edge lines).
pub fn load_graph(path: impl AsRef<Path>) -> Result<Graph, GraphError> {
    parse_graph(&fs::read_to_string(path)?)
}

/// Loads a pair set (`u v` lines). Ids are checked against `n`.
pub fn load_pairs(path: impl AsRef<Path>, n: usize) -> Result<PairSet, GraphError> {
    let text = fs::read_to_string(path)?;
    let mut pairs = Vec::new();
    for (line_no, line) in content_lines(&text) {
        let (u, v) = parse_pair(line_no, line)?;
        let (u, v) = (check_id(u, n)?, check_id(v, n)?);
        if u == v {
            return Err(parse_err(line_no, format!("degenerate pair {u} {v}")));
        }
        pairs.push((u, v));
    }
    Ok(PairSet::new(pairs))
}

/// Loads a source set (one node id per line), sorted and deduplicated.
pub fn load_sources(path: impl AsRef<Path>, n: usize) -> Result<Vec<NodeId>, GraphError> {
    let text = fs::read_to_string(path)?;
    let mut sources = Vec::new();
    for (line_no, line) in content_lines(&text) {
        let id = line
            .parse::<u64>()
            .map_err(|e| parse_err(line_no, format!("bad node id {line:?}: {e}")))?;
        sources.push(check_id(id, n)?);
    }
    sources.sort_unstable();
    sources.dedup();
    Ok(sources)
}

/// Writes a graph or edge subset in the graph file format.
pub fn format_edge_list(n: usize, edges: impl Iterator<Item = (NodeId, NodeId)>) -> String {
    let mut out = format!("{n}\n");
    for (u, v) in edges {
        out.push_str(&format!("{u} {v}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_path_graph() {
        let g = parse_graph("3\n0 1\n1 2").unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert!(g.has_edge(0, 1) && g.has_edge(1, 2) && !g.has_edge(0, 2));
    }

    #[test]
    fn duplicate_edges_collapse() {
        let g = parse_graph("2\n0 1\n1 0").unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn self_loop_rejected() {
        assert!(matches!(
            parse_graph("2\n0 0"),
            Err(GraphError::SelfLoop(0))
        ));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse_graph("3\n0 1\nzap").unwrap_err();
        match err {
            GraphError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn out_of_range_id_rejected() {
        assert!(matches!(
            parse_graph("2\n0 5"),
            Err(GraphError::NodeRange { id: 5, n: 2 })
        ));
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let g = parse_graph("# a path\n\n3\n# edge\n0 1\n1 2\n").unwrap();
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn edge_list_round_trips() {
        let g = parse_graph("4\n0 1\n1 2\n2 3").unwrap();
        let text = format_edge_list(g.node_count(), g.edges());
        assert_eq!(parse_graph(&text).unwrap(), g);
    }
}
