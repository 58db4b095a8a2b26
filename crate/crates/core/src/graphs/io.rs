//! Edge-list text format.
//!
//! ```text
//! n m
//! i j        (m lines, 1-based node indices)
//! i x y      (optional: n coordinate lines for geometric graphs)
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

use super::Graph;

pub fn write_edge_list<W: Write>(
    g: &Graph,
    coords: Option<&[[f64; 2]]>,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "{} {}", g.node_count(), g.edge_count())?;
    for (i, j) in g.edges() {
        writeln!(out, "{} {}", i + 1, j + 1)?;
    }
    if let Some(coords) = coords {
        for (i, [x, y]) in coords.iter().enumerate() {
            writeln!(out, "{} {} {}", i + 1, x, y)?;
        }
    }
    Ok(())
}

pub fn read_edge_list<R: BufRead>(input: R) -> Result<(Graph, Option<Vec<[f64; 2]>>)> {
    let mut lines = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            line: idx + 1,
            msg: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        lines.push((idx + 1, trimmed.to_owned()));
    }
    let mut iter = lines.into_iter();
    let (hline, header) = iter.next().ok_or(Error::Parse {
        line: 1,
        msg: "missing `n m` header".into(),
    })?;
    let [n, m] = parse_fields::<usize, 2>(hline, &header)?;

    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        let (lno, line) = iter.next().ok_or(Error::Parse {
            line: hline,
            msg: format!("header promises {m} edges"),
        })?;
        let [i, j] = parse_fields::<usize, 2>(lno, &line)?;
        if i == 0 || j == 0 || i > n || j > n {
            return Err(Error::Parse {
                line: lno,
                msg: format!("node index out of range 1..={n}"),
            });
        }
        edges.push((i - 1, j - 1));
    }

    let rest: Vec<_> = iter.collect();
    let coords = if rest.is_empty() {
        None
    } else {
        if rest.len() != n {
            return Err(Error::Parse {
                line: rest[0].0,
                msg: format!("expected {n} coordinate lines, got {}", rest.len()),
            });
        }
        let mut coords = vec![[0.0; 2]; n];
        for (lno, line) in rest {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line: lno,
                    msg: "expected `i x y`".into(),
                });
            }
            let i: usize = parse_one(lno, fields[0])?;
            if i == 0 || i > n {
                return Err(Error::Parse {
                    line: lno,
                    msg: format!("node index out of range 1..={n}"),
                });
            }
            coords[i - 1] = [parse_one(lno, fields[1])?, parse_one(lno, fields[2])?];
        }
        Some(coords)
    };

    let g = Graph::from_edges(n, &edges).map_err(|e| Error::Parse {
        line: hline,
        msg: e.to_string(),
    })?;
    Ok((g, coords))
}

fn parse_one<T: std::str::FromStr>(line: usize, field: &str) -> Result<T> {
    field.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("cannot parse `{field}`"),
    })
}

fn parse_fields<T: std::str::FromStr + Copy + Default, const K: usize>(
    line: usize,
    text: &str,
) -> Result<[T; K]> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() != K {
        return Err(Error::Parse {
            line,
            msg: format!("expected {K} fields, got {}", fields.len()),
        });
    }
    let mut out = [T::default(); K];
    for (slot, f) in out.iter_mut().zip(fields) {
        *slot = parse_one(line, f)?;
    }
    Ok(out)
}
