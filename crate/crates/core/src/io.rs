//! Plain-text file formats: edge lists, labels, lens files, dense matrices
//! and sparse triplets.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::graph::{Graph, GraphBuilder, NodeId};
use crate::lens::{parse_lens, LensVector};

/// Colon-separated directories searched for relative lens paths.
pub const LENS_PATH_VAR: &str = "MAPPER_LENS_PATH";

/// Graph plus the original name of every dense node id.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedGraph {
    pub graph: Graph,
    pub names: Vec<String>,
    /// Duplicate edges collapsed while loading.
    pub duplicates: usize,
}

impl LoadedGraph {
    pub fn index_of(&self) -> HashMap<&str, NodeId> {
        self.names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect()
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then(|| (i + 1, l.split_whitespace().collect()))
    })
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses an edge list.
///
/// Each line is `u v [weight]`, or a lone `u` declaring a node. Names are
/// arbitrary tokens mapped to ids in order of first appearance. `#` starts a
/// comment. Duplicate edges are collapsed (first weight wins) with a warning.
pub fn parse_edges(text: &str) -> Result<LoadedGraph> {
    let mut ids: HashMap<String, NodeId> = HashMap::new();
    let mut names: Vec<String> = Vec::new();
    let mut edges: Vec<(usize, NodeId, NodeId, Option<f64>)> = Vec::new();
    let mut intern = |name: &str| -> NodeId {
        *ids.entry(name.to_string()).or_insert_with(|| {
            names.push(name.to_string());
            names.len() - 1
        })
    };
    for (line, fields) in content_lines(text) {
        match fields.as_slice() {
            [u] => {
                intern(u);
            }
            [u, v] => {
                let (u, v) = (intern(u), intern(v));
                edges.push((line, u, v, None));
            }
            [u, v, w] => {
                let w: f64 = w.parse().map_err(|_| parse_err(line, format!("bad weight `{w}`")))?;
                let (u, v) = (intern(u), intern(v));
                edges.push((line, u, v, Some(w)));
            }
            _ => {
                return Err(parse_err(
                    line,
                    format!("expected `u v [weight]`, found {} fields", fields.len()),
                ))
            }
        }
    }
    let weighted = edges.iter().any(|e| e.3.is_some());
    let mut b = GraphBuilder::new(names.len());
    for (line, u, v, w) in edges {
        let res = if weighted {
            b.add_weighted_edge(u, v, w.unwrap_or(1.0))
        } else {
            b.add_edge(u, v)
        };
        res.map_err(|e| parse_err(line, e.to_string()))?;
    }
    let duplicates = b.duplicates();
    if duplicates > 0 {
        log::warn!("collapsed {duplicates} duplicate edge(s)");
    }
    Ok(LoadedGraph {
        graph: b.build(),
        names,
        duplicates,
    })
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<LoadedGraph> {
    parse_edges(&std::fs::read_to_string(path)?)
}

/// Writes every node id on its own line, then one line per edge. Weights are
/// written only for weighted graphs.
pub fn format_edges(graph: &Graph) -> String {
    let mut out = String::new();
    for v in 0..graph.num_nodes() {
        let _ = writeln!(out, "{v}");
    }
    for (u, v) in graph.edges() {
        if graph.is_weighted() {
            let _ = writeln!(out, "{u} {v} {}", graph.weight(u, v));
        } else {
            let _ = writeln!(out, "{u} {v}");
        }
    }
    out
}

/// Parses `node_id class_id` lines against the names of a loaded graph.
/// Every node must receive exactly one class.
pub fn parse_labels(text: &str, loaded: &LoadedGraph) -> Result<Vec<u32>> {
    let index = loaded.index_of();
    let mut labels: Vec<Option<u32>> = vec![None; loaded.names.len()];
    for (line, fields) in content_lines(text) {
        let [name, class] = fields.as_slice() else {
            return Err(parse_err(line, "expected `node_id class_id`"));
        };
        let &v = index
            .get(name)
            .ok_or_else(|| parse_err(line, format!("unknown node `{name}`")))?;
        let class: u32 = class
            .parse()
            .map_err(|_| parse_err(line, format!("class `{class}` is not a non-negative integer")))?;
        if labels[v].replace(class).is_some() {
            return Err(parse_err(line, format!("node `{name}` labelled twice")));
        }
    }
    if let Some(v) = labels.iter().position(Option::is_none) {
        return Err(invalid(format!("node `{}` has no label", loaded.names[v])));
    }
    Ok(labels.into_iter().flatten().collect())
}

pub fn load_labels(path: impl AsRef<Path>, loaded: &LoadedGraph) -> Result<Vec<u32>> {
    parse_labels(&std::fs::read_to_string(path)?, loaded)
}

/// Resolves a lens path: as given if it exists, otherwise relative to each
/// directory in `MAPPER_LENS_PATH`.
pub fn resolve_lens_path(path: impl AsRef<Path>) -> Result<PathBuf> {
    let path = path.as_ref();
    if path.exists() || path.is_absolute() {
        return Ok(path.to_path_buf());
    }
    if let Some(dirs) = std::env::var_os(LENS_PATH_VAR) {
        for dir in std::env::split_paths(&dirs) {
            let candidate = dir.join(path);
            if candidate.exists() {
                return Ok(candidate);
            }
        }
    }
    Err(Error::Io(std::io::Error::new(
        std::io::ErrorKind::NotFound,
        format!("lens file {} not found", path.display()),
    )))
}

pub fn load_lens(path: impl AsRef<Path>) -> Result<LensVector> {
    parse_lens(&std::fs::read_to_string(resolve_lens_path(path)?)?)
}

/// Dense matrix text: a `rows cols` header, then one whitespace-separated row per line.
pub fn format_dense(m: &DMatrix<f64>) -> String {
    let mut out = format!("{} {}\n", m.nrows(), m.ncols());
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_dense(text: &str) -> Result<DMatrix<f64>> {
    let mut lines = content_lines(text);
    let (hline, head) = lines.next().ok_or_else(|| parse_err(1, "missing `rows cols` header"))?;
    let dims = head
        .iter()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| parse_err(hline, "header must be `rows cols`"))?;
    let [rows, cols] = dims.as_slice() else {
        return Err(parse_err(hline, "header must be `rows cols`"));
    };
    let mut values = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (line, fields) in lines {
        if fields.len() != *cols {
            return Err(parse_err(
                line,
                format!("expected {cols} values, found {}", fields.len()),
            ));
        }
        for f in fields {
            values.push(
                f.parse::<f64>()
                    .map_err(|_| parse_err(line, format!("bad value `{f}`")))?,
            );
        }
        seen += 1;
    }
    if seen != *rows {
        return Err(invalid(format!("matrix declares {rows} rows but has {seen}")));
    }
    Ok(DMatrix::from_row_slice(*rows, *cols, &values))
}

/// Parses the triplet format written by [`AssignmentMatrix::to_triplets`](crate::pooling::AssignmentMatrix::to_triplets).
pub fn parse_triplets(text: &str) -> Result<DMatrix<f64>> {
    let mut shape = None;
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim();
        if let Some(rest) = l.strip_prefix('#') {
            if shape.is_none() {
                let dims: Vec<usize> = rest.split_whitespace().filter_map(|t| t.parse().ok()).collect();
                if let [r, c] = dims.as_slice() {
                    shape = Some((*r, *c));
                }
            }
            continue;
        }
        if l.is_empty() {
            continue;
        }
        let fields: Vec<&str> = l.split_whitespace().collect();
        let [i, j, x] = fields.as_slice() else {
            return Err(parse_err(line, "expected `i j value`"));
        };
        let bad = |t: &str| parse_err(line, format!("bad field `{t}`"));
        entries.push((
            line,
            i.parse::<usize>().map_err(|_| bad(i))?,
            j.parse::<usize>().map_err(|_| bad(j))?,
            x.parse::<f64>().map_err(|_| bad(x))?,
        ));
    }
    let (rows, cols) = shape.ok_or_else(|| parse_err(1, "missing `# rows cols` header"))?;
    let mut m = DMatrix::zeros(rows, cols);
    for (line, i, j, x) in entries {
        if i >= rows || j >= cols {
            return Err(parse_err(line, format!("entry ({i}, {j}) outside {rows}x{cols}")));
        }
        m[(i, j)] = x;
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_from_numbers() {
        let l = parse_edges("0 1\n1 2").unwrap();
        assert_eq!(l.graph.num_nodes(), 3);
        assert_eq!(l.graph.edges(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn comments_skipped() {
        let l = parse_edges("# header\n0 1 # trailing\n\n   # indented\n1 2\n").unwrap();
        assert_eq!(l.graph.edges(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn names_densified_by_first_appearance() {
        let l = parse_edges("a b\nb c").unwrap();
        assert_eq!(l.names, vec!["a", "b", "c"]);
        assert_eq!(l.graph.edges(), vec![(0, 1), (1, 2)]);
        let l = parse_edges("7 3\n3 0").unwrap();
        assert_eq!(l.names, vec!["7", "3", "0"]);
    }

    #[test]
    fn duplicates_collapsed() {
        let l = parse_edges("a b\nb a\na b\n").unwrap();
        assert_eq!(l.graph.num_edges(), 1);
        assert_eq!(l.duplicates, 2);
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        match parse_edges("0 1\n# c\n1 2 3 4\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse_edges("0 1 heavy\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn weighted_edges() {
        let l = parse_edges("a b 2.5\nb c\n").unwrap();
        assert!(l.graph.is_weighted());
        assert_eq!(l.graph.weight(0, 1), 2.5);
        assert_eq!(l.graph.weight(1, 2), 1.0);
    }

    #[test]
    fn edge_round_trip_keeps_isolated_nodes() {
        let g = Graph::from_edges(5, [(0, 3), (3, 3), (1, 3)]).unwrap();
        let back = parse_edges(&format_edges(&g)).unwrap();
        assert_eq!(back.graph, g);
        assert_eq!(format_edges(&back.graph), format_edges(&g));
    }

    #[test]
    fn labels_follow_names() {
        let l = parse_edges("x y\ny z\n").unwrap();
        assert_eq!(parse_labels("z 2\nx 0\ny 1\n", &l).unwrap(), vec![0, 1, 2]);
        assert!(parse_labels("x 0\ny 1\n", &l).is_err());
        assert!(parse_labels("x 0\ny 1\nz -1\n", &l).is_err());
        assert!(parse_labels("x 0\ny 1\nw 1\n", &l).is_err());
    }

    #[test]
    fn dense_round_trip() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 0.5, -2.0, 1e-17, 0.0, 3.25]);
        assert_eq!(format_dense(&m), "2 3\n1 0.5 -2\n0.00000000000000001 0 3.25\n");
        assert_eq!(parse_dense(&format_dense(&m)).unwrap(), m);
        assert!(parse_dense("2 2\n1 2\n").is_err());
    }

    #[test]
    fn triplet_round_trip() {
        let m = parse_triplets("# 3 2\n0 0 1\n1 0 0.5\n1 1 0.5\n2 1 1\n").unwrap();
        assert_eq!(m, DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.5, 0.5, 0.0, 1.0]));
        assert!(parse_triplets("# 1 1\n3 0 1\n").is_err());
    }

    #[test]
    fn lens_path_lookup() {
        let dir = std::env::temp_dir().join(format!("lens-lookup-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("x.lens"), "1 2\n0 0.5\n1 1\n").unwrap();
        std::env::set_var(LENS_PATH_VAR, &dir);
        let lens = load_lens("x.lens").unwrap();
        assert_eq!(lens.column(0), vec![0.5, 1.0]);
        assert!(load_lens("missing.lens").is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
