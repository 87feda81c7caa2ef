//! Small worked examples shared by tests, docs and the CLI.

use crate::graph::CsrGraph;

/// Ten-vertex example traversed from source 8:
/// `0→5, 1→0, 2→{3,5,7}, 3→4, 5→3, 7→{2,4}, 8→{1,2,7,9}`, all diagonals present.
pub fn fig7_graph() -> CsrGraph {
    let edges = [
        (0, 5),
        (1, 0),
        (2, 3),
        (2, 5),
        (2, 7),
        (3, 4),
        (5, 3),
        (7, 2),
        (7, 4),
        (8, 1),
        (8, 2),
        (8, 7),
        (8, 9),
    ];
    CsrGraph::from_entries(10, edges.into_iter().chain((0..10).map(|i| (i, i))))
        .expect("static example is valid")
}

/// [`fig7_graph`] plus the edge `0→1`, which gives `U` row counts
/// `3, 2, 4, 2` on rows 0..4: only row 1 drops by one, and `L(1, 0)` is set.
pub fn fig8_graph() -> CsrGraph {
    let g = fig7_graph();
    CsrGraph::from_entries(
        g.n(),
        g.edges().chain([(0, 1)]).chain((0..g.n()).map(|i| (i, i))),
    )
    .expect("static example is valid")
}
