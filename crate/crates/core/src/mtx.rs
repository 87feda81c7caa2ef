//! Matrix Market coordinate reader/writer (structure only).

use std::io::BufRead;

use crate::error::{Error, Result};
use crate::graph::CsrGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

struct Header {
    symmetry: Symmetry,
    has_value: bool,
}

fn parse_banner(line: &str) -> Result<Header> {
    let toks: Vec<String> = line
        .split_whitespace()
        .map(|t| t.to_ascii_lowercase())
        .collect();
    if toks.len() < 5 || toks[0] != "%%matrixmarket" {
        return Err(Error::parse(1, "missing %%MatrixMarket banner"));
    }
    if toks[1] != "matrix" {
        return Err(Error::UnsupportedFormat(format!("object `{}`", toks[1])));
    }
    match toks[2].as_str() {
        "coordinate" => {}
        "array" => return Err(Error::UnsupportedFormat("array".into())),
        other => return Err(Error::parse(1, format!("unknown format `{other}`"))),
    }
    let has_value = match toks[3].as_str() {
        "pattern" => false,
        "real" | "integer" | "double" => true,
        "complex" => return Err(Error::UnsupportedFormat("complex field".into())),
        other => return Err(Error::parse(1, format!("unknown field `{other}`"))),
    };
    let symmetry = match toks[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" | "skew-symmetric" => Symmetry::Symmetric,
        "hermitian" => return Err(Error::UnsupportedFormat("hermitian".into())),
        other => return Err(Error::parse(1, format!("unknown symmetry `{other}`"))),
    };
    Ok(Header {
        symmetry,
        has_value,
    })
}

/// Parse a square Matrix Market coordinate matrix into its adjacency graph.
pub fn parse_matrix_market<R: BufRead>(reader: R) -> Result<CsrGraph> {
    let mut lines = reader.lines().enumerate();
    let (_, banner) = lines.next().ok_or_else(|| Error::parse(1, "empty input"))?;
    let header = parse_banner(&banner?)?;

    let mut size: Option<(usize, usize, usize)> = None;
    let mut entries: Vec<(usize, usize)> = Vec::new();
    let mut seen = 0usize;
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let mut toks = line.split_whitespace();
        let mut next_usize = |what: &str| -> Result<usize> {
            let tok = toks
                .next()
                .ok_or_else(|| Error::parse(lineno, format!("missing {what}")))?;
            tok.parse::<usize>()
                .map_err(|_| Error::parse(lineno, format!("bad {what} `{tok}`")))
        };
        match size {
            None => {
                let rows = next_usize("row count")?;
                let cols = next_usize("column count")?;
                let nnz = next_usize("entry count")?;
                if rows != cols {
                    return Err(Error::Dimension {
                        expected: rows,
                        actual: cols,
                    });
                }
                size = Some((rows, cols, nnz));
                entries.reserve(
                    nnz * if header.symmetry == Symmetry::Symmetric {
                        2
                    } else {
                        1
                    },
                );
            }
            Some((rows, cols, nnz)) => {
                if seen == nnz {
                    return Err(Error::parse(lineno, "more entries than declared"));
                }
                let i = next_usize("row index")?;
                let j = next_usize("column index")?;
                if header.has_value && toks.next().is_none() {
                    return Err(Error::parse(lineno, "missing value"));
                }
                if i == 0 || j == 0 || i > rows || j > cols {
                    return Err(Error::Range {
                        row: i,
                        col: j,
                        nrows: rows,
                        ncols: cols,
                    });
                }
                entries.push((i - 1, j - 1));
                if header.symmetry == Symmetry::Symmetric && i != j {
                    entries.push((j - 1, i - 1));
                }
                seen += 1;
            }
        }
    }
    let (n, _, nnz) = size.ok_or_else(|| Error::parse(1, "missing size line"))?;
    if seen != nnz {
        return Err(Error::parse(
            0,
            format!("declared {nnz} entries, found {seen}"),
        ));
    }
    CsrGraph::from_entries(n, entries)
}

pub fn parse_matrix_market_str(text: &str) -> Result<CsrGraph> {
    parse_matrix_market(text.as_bytes())
}

/// `pattern general` coordinate text, diagonal flags emitted as entries.
pub fn write_matrix_market(g: &CsrGraph) -> String {
    let n = g.n();
    let ndiag = g.diagonal_flags().iter().filter(|&&d| d).count();
    let mut out = String::with_capacity(32 + 12 * (g.nnz() + ndiag));
    out.push_str("%%MatrixMarket matrix coordinate pattern general\n");
    out.push_str(&format!("{n} {n} {}\n", g.nnz() + ndiag));
    for i in 0..n {
        let mut diag_pending = g.has_diagonal(i);
        for &j in g.neighbors(i) {
            if diag_pending && j as usize > i {
                out.push_str(&format!("{} {}\n", i + 1, i + 1));
                diag_pending = false;
            }
            out.push_str(&format!("{} {}\n", i + 1, j + 1));
        }
        if diag_pending {
            out.push_str(&format!("{} {}\n", i + 1, i + 1));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_entry_shifted_to_zero_based() {
        let g = parse_matrix_market_str(
            "%%MatrixMarket matrix coordinate pattern general\n3 3 1\n2 1\n",
        )
        .unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.nnz(), 1);
        assert_eq!(g.neighbors(1), &[0]);
    }

    #[test]
    fn symmetric_entry_expanded() {
        let g = parse_matrix_market_str(
            "%%MatrixMarket matrix coordinate real symmetric\n% comment\n3 3 1\n3 1 4.5\n",
        )
        .unwrap();
        assert_eq!(g.neighbors(2), &[0]);
        assert_eq!(g.neighbors(0), &[2]);
    }

    #[test]
    fn degrees_account_for_duplicates_and_diagonal() {
        let g = parse_matrix_market_str(
            "%%MatrixMarket matrix coordinate integer general\n3 3 5\n1 1 1\n1 2 1\n1 2 7\n3 2 1\n2 2 1\n",
        )
        .unwrap();
        // 5 declared, 1 duplicate merged, 2 diagonals stripped
        assert_eq!(g.nnz(), 2);
        assert_eq!(g.diagonal_flags(), &[true, true, false]);
    }

    #[test]
    fn array_format_unsupported() {
        let err =
            parse_matrix_market_str("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n")
                .unwrap_err();
        assert!(matches!(err, Error::UnsupportedFormat(_)));
    }

    #[test]
    fn malformed_header_and_bounds() {
        assert!(matches!(
            parse_matrix_market_str("3 3 1\n1 1\n"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_matrix_market_str(
                "%%MatrixMarket matrix coordinate pattern general\n3 3 1\n4 1\n"
            ),
            Err(Error::Range { .. })
        ));
        assert!(matches!(
            parse_matrix_market_str(
                "%%MatrixMarket matrix coordinate pattern general\n3 3 1\n0 1\n"
            ),
            Err(Error::Range { .. })
        ));
        assert!(matches!(
            parse_matrix_market_str(
                "%%MatrixMarket matrix coordinate pattern general\n3 3 2\n1 2\n"
            ),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn writer_output_parses_back() {
        let g = CsrGraph::from_entries(3, [(0, 0), (0, 2), (2, 1), (1, 1), (1, 0)]).unwrap();
        let text = write_matrix_market(&g);
        assert!(text.contains("1 1\n1 3\n"));
        assert_eq!(parse_matrix_market_str(&text).unwrap(), g);
    }
}
