//! Row-wise nonzero structure of the filled factors `L + U`.

use std::fmt::{self, Write as _};

use crate::graph::{CsrGraph, Vertex};

/// Lower (`j < i`) and upper (`j > i`) column sets of every row of `L + U`.
/// The diagonal is implicit. Rows that have not been computed yet are
/// tracked so partial results (one chunk of a schedule) can be told apart
/// from empty rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FillStructure {
    n: usize,
    lower: Vec<Vec<Vertex>>,
    upper: Vec<Vec<Vertex>>,
    done: Vec<bool>,
}

/// One computed row. Columns need not be sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RowStructure {
    pub row: usize,
    pub lower: Vec<Vertex>,
    pub upper: Vec<Vertex>,
}

impl RowStructure {
    pub fn sorted(mut self) -> Self {
        self.lower.sort_unstable();
        self.upper.sort_unstable();
        self
    }
}

impl FillStructure {
    /// `n` rows, none computed.
    pub fn new(n: usize) -> Self {
        FillStructure {
            n,
            lower: vec![Vec::new(); n],
            upper: vec![Vec::new(); n],
            done: vec![false; n],
        }
    }

    pub fn from_rows(n: usize, rows: impl IntoIterator<Item = RowStructure>) -> Self {
        let mut fs = FillStructure::new(n);
        for r in rows {
            fs.set_row(r);
        }
        fs
    }

    /// Store a row; columns are sorted and deduplicated on the way in.
    pub fn set_row(&mut self, row: RowStructure) {
        let RowStructure {
            row: i,
            mut lower,
            mut upper,
        } = row;
        lower.sort_unstable();
        lower.dedup();
        upper.sort_unstable();
        upper.dedup();
        debug_assert!(lower.iter().all(|&j| (j as usize) < i));
        debug_assert!(upper
            .iter()
            .all(|&j| (j as usize) > i && (j as usize) < self.n));
        self.lower[i] = lower;
        self.upper[i] = upper;
        self.done[i] = true;
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lower(&self, i: usize) -> &[Vertex] {
        &self.lower[i]
    }

    pub fn upper(&self, i: usize) -> &[Vertex] {
        &self.upper[i]
    }

    pub fn is_row_done(&self, i: usize) -> bool {
        self.done[i]
    }

    pub fn is_complete(&self) -> bool {
        self.done.iter().all(|&d| d)
    }

    /// `L(s, r) != 0`, answered by binary search on the sorted row.
    pub fn has_lower(&self, s: usize, r: usize) -> bool {
        self.lower[s].binary_search(&(r as Vertex)).is_ok()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        if j < i {
            self.has_lower(i, j)
        } else if j > i {
            self.upper[i].binary_search(&(j as Vertex)).is_ok()
        } else {
            true
        }
    }

    /// Nonzeros of `U(i, :)`, diagonal included.
    pub fn nnz_upper(&self, i: usize) -> usize {
        self.upper[i].len() + 1
    }

    pub fn nnz_upper_all(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.nnz_upper(i)).collect()
    }

    /// Off-diagonal entries of `L + U`.
    pub fn nnz_offdiag(&self) -> usize {
        self.lower.iter().map(Vec::len).sum::<usize>()
            + self.upper.iter().map(Vec::len).sum::<usize>()
    }

    /// Entries of the filled structure that are not edges of `g`.
    pub fn fill_count(&self, g: &CsrGraph) -> usize {
        self.fill_entries(g).count()
    }

    pub fn fill_entries<'a>(
        &'a self,
        g: &'a CsrGraph,
    ) -> impl Iterator<Item = (usize, usize)> + 'a {
        (0..self.n).flat_map(move |i| {
            self.lower[i]
                .iter()
                .chain(self.upper[i].iter())
                .filter(move |&&j| !g.has_edge(i, j as usize))
                .map(move |&j| (i, j as usize))
        })
    }

    /// Full sorted row `L(i,:) ∪ {i} ∪ U(i,:)`.
    pub fn row_pattern(&self, i: usize) -> impl Iterator<Item = Vertex> + '_ {
        self.lower[i]
            .iter()
            .copied()
            .chain(std::iter::once(i as Vertex))
            .chain(self.upper[i].iter().copied())
    }

    /// CSR text of `L + U` with explicit diagonal: `n nnz`, row_ptr, col_idx.
    pub fn to_csr_text(&self) -> String {
        let mut row_ptr = Vec::with_capacity(self.n + 1);
        let mut cols: Vec<Vertex> = Vec::with_capacity(self.nnz_offdiag() + self.n);
        row_ptr.push(0usize);
        for i in 0..self.n {
            cols.extend(self.row_pattern(i));
            row_ptr.push(cols.len());
        }
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.n, cols.len());
        let _ = writeln!(
            out,
            "{}",
            row_ptr
                .iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        );
        let _ = writeln!(
            out,
            "{}",
            cols.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        );
        out
    }

    /// Rows whose lower or upper sets differ.
    pub fn diff(&self, other: &FillStructure) -> Vec<RowDiff> {
        let n = self.n.max(other.n);
        let empty: Vec<Vertex> = Vec::new();
        let mut out = Vec::new();
        for i in 0..n {
            let (al, au) = if i < self.n {
                (&self.lower[i], &self.upper[i])
            } else {
                (&empty, &empty)
            };
            let (bl, bu) = if i < other.n {
                (&other.lower[i], &other.upper[i])
            } else {
                (&empty, &empty)
            };
            if al != bl || au != bu {
                let left: Vec<Vertex> = al.iter().chain(au.iter()).copied().collect();
                let right: Vec<Vertex> = bl.iter().chain(bu.iter()).copied().collect();
                out.push(RowDiff {
                    row: i,
                    only_left: left
                        .iter()
                        .filter(|c| !right.contains(c))
                        .copied()
                        .collect(),
                    only_right: right
                        .iter()
                        .filter(|c| !left.contains(c))
                        .copied()
                        .collect(),
                });
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowDiff {
    pub row: usize,
    pub only_left: Vec<Vertex>,
    pub only_right: Vec<Vertex>,
}

impl fmt::Display for RowDiff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "row {}: only in left {:?}, only in right {:?}",
            self.row, self.only_left, self.only_right
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_sorted_and_queries() {
        let mut fs = FillStructure::new(4);
        fs.set_row(RowStructure {
            row: 2,
            lower: vec![1, 0, 1],
            upper: vec![3],
        });
        assert_eq!(fs.lower(2), &[0, 1]);
        assert!(fs.has_lower(2, 0));
        assert!(!fs.has_lower(2, 3));
        assert_eq!(fs.nnz_upper(2), 2);
        assert!(fs.is_row_done(2));
        assert!(!fs.is_complete());
    }

    #[test]
    fn csr_text_includes_diagonal() {
        let fs = FillStructure::from_rows(
            2,
            [
                RowStructure {
                    row: 0,
                    lower: vec![],
                    upper: vec![1],
                },
                RowStructure {
                    row: 1,
                    lower: vec![],
                    upper: vec![],
                },
            ],
        );
        assert_eq!(fs.to_csr_text(), "2 3\n0 2 3\n0 1 1\n");
    }

    #[test]
    fn diff_reports_corrupted_row() {
        let a = FillStructure::from_rows(
            3,
            (0..3).map(|i| RowStructure {
                row: i,
                lower: (0..i as u32).collect(),
                upper: vec![],
            }),
        );
        let mut b = a.clone();
        b.set_row(RowStructure {
            row: 2,
            lower: vec![0],
            upper: vec![],
        });
        let d = a.diff(&b);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].row, 2);
        assert_eq!(d[0].only_left, vec![1]);
        assert!(d[0].only_right.is_empty());
    }
}
