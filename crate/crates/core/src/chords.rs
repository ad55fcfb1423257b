//! Chord diagrams on an oriented circle: configuration spaces with corner
//! surgery, the rank of the degree-one invariant group, planarity by three
//! independent methods, arrow-diagram formulas with their mod-2 obstruction,
//! and a combinatorial evaluator on singular knot diagrams.
//!
//! A diagram with `m` chords is a perfect matching on the positions
//! `0..2m` of the circle; the `2m` complementary intervals are its arcs,
//! numbered by starting position. Collapsing each chord to a point gives a
//! 4-valent quotient graph `G` whose vertices are the chords and whose edges
//! are the arcs. The configuration space is built from the product cell
//! structure on `G x G` with the squares `C x C` removed and each diagonal
//! vertex `(w, w)` surgered: its open star is replaced by the four vertical
//! faces of a cube (split into triangles), producing a free involution.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::equivariant::{
    Direction, EquivariantCellComplex, EquivariantError, Parity, TwistedClass,
};
use crate::exactalg::{self, AbelianGroup, IntMatrix};
use crate::simplicial::{ChainComplex, Coefficients};

#[derive(Debug, Error)]
pub enum ChordError {
    #[error("token {0:?} appears {1} times; a chord word uses each token exactly twice")]
    BadToken(String, usize),
    #[error("the empty diagram has no configuration space")]
    Empty,
    #[error("arc index {0} out of range")]
    ArcOutOfRange(usize),
    #[error("one-term relation violated: nonzero value on the diagonal pair {{{0}, {0}}}")]
    OneTerm(usize),
    #[error("four-term relation violated: the associated 2-chain has nonzero boundary at {0}")]
    FourTerm(String),
    #[error("the two cycles share an edge")]
    SharedEdge,
    #[error("a cycle input is not a closed trail in the quotient graph")]
    NotCycle,
    #[error("singular diagram does not match the formula's chord diagram")]
    DiagramMismatch,
    #[error("crossing {0} is not visited exactly once over and once under with equal signs")]
    BadCrossing(usize),
    #[error("internal invariant violated: {0}")]
    Internal(String),
    #[error(transparent)]
    Equivariant(#[from] EquivariantError),
    #[error("parse error: {0}")]
    Parse(String),
}

// ---------------------------------------------------------------------------
// Diagrams and their quotient graphs
// ---------------------------------------------------------------------------

/// A chord diagram: a perfect matching on the circle positions `0..2m`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct ChordDiagram {
    /// Chord id at each circle position; ids are numbered by first occurrence.
    word: Vec<usize>,
    /// Position pair (p, q) with p < q for each chord.
    pairs: Vec<(usize, usize)>,
}

impl ChordDiagram {
    /// Builds a diagram from the chord id at each position (double-occurrence
    /// word over arbitrary tokens).
    pub fn from_word<T: Ord + Clone + std::fmt::Debug>(
        tokens: &[T],
    ) -> Result<ChordDiagram, ChordError> {
        let mut counts: BTreeMap<&T, usize> = BTreeMap::new();
        for t in tokens {
            *counts.entry(t).or_insert(0) += 1;
        }
        for (t, c) in &counts {
            if *c != 2 {
                return Err(ChordError::BadToken(format!("{:?}", t), *c));
            }
        }
        let mut ids: BTreeMap<&T, usize> = BTreeMap::new();
        let mut word = Vec::with_capacity(tokens.len());
        for t in tokens {
            let next = ids.len();
            word.push(*ids.entry(t).or_insert(next));
        }
        let m = word.len() / 2;
        let mut pairs = vec![(usize::MAX, usize::MAX); m];
        for (pos, &c) in word.iter().enumerate() {
            if pairs[c].0 == usize::MAX {
                pairs[c].0 = pos;
            } else {
                pairs[c].1 = pos;
            }
        }
        Ok(ChordDiagram { word, pairs })
    }

    pub fn chord_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn arc_count(&self) -> usize {
        self.word.len()
    }

    /// Chord id at each circle position, ids by first occurrence.
    pub fn word(&self) -> &[usize] {
        &self.word
    }

    pub fn chord_positions(&self, chord: usize) -> (usize, usize) {
        self.pairs[chord]
    }

    /// Whether two chords interleave on the circle.
    pub fn interleaved(&self, a: usize, b: usize) -> bool {
        let (p1, q1) = self.pairs[a];
        let (p2, q2) = self.pairs[b];
        (p1 < p2 && p2 < q1 && q1 < q2) || (p2 < p1 && p1 < q2 && q2 < q1)
    }

    pub fn quotient_graph(&self) -> QuotientGraph {
        let n = self.word.len();
        let arcs = (0..n)
            .map(|i| {
                let j = (i + 1) % n;
                ArcInfo {
                    tail: ArcEnd {
                        vertex: self.word[i],
                        slot: self.slot(i, false),
                    },
                    head: ArcEnd {
                        vertex: self.word[j],
                        slot: self.slot(j, true),
                    },
                }
            })
            .collect();
        QuotientGraph {
            chords: self.pairs.len(),
            arcs,
        }
    }

    /// Half-edge slot at the chord through `position`: slots 0/1 are the
    /// incoming directions at the smaller/larger position, slots 2/3 the
    /// outgoing ones. The two strand pairs are {0, 2} and {1, 3}.
    fn slot(&self, position: usize, incoming: bool) -> u8 {
        let chord = self.word[position];
        let (p, _q) = self.pairs[chord];
        let at_small = position == p;
        match (incoming, at_small) {
            (true, true) => 0,
            (true, false) => 1,
            (false, true) => 2,
            (false, false) => 3,
        }
    }
}

/// Parses a whitespace-separated double-occurrence word, e.g. `"1 2 1 2"`.
pub fn parse_diagram(text: &str) -> Result<ChordDiagram, ChordError> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    ChordDiagram::from_word(&tokens)
}

/// One end of an arc in the quotient graph: the chord vertex it attaches to
/// and the half-edge slot it occupies there.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ArcEnd {
    pub vertex: usize,
    pub slot: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ArcInfo {
    pub tail: ArcEnd,
    pub head: ArcEnd,
}

impl ArcInfo {
    fn end(&self, head: bool) -> ArcEnd {
        if head {
            self.head
        } else {
            self.tail
        }
    }
}

/// The 4-valent quotient graph: vertices are chords, edges are arcs.
#[derive(Clone, Debug)]
pub struct QuotientGraph {
    pub chords: usize,
    pub arcs: Vec<ArcInfo>,
}

impl QuotientGraph {
    /// The dart leaving the given slot of a vertex: `(arc, forward)`.
    fn dart_leaving(&self, vertex: usize, slot: u8) -> (usize, bool) {
        for (i, a) in self.arcs.iter().enumerate() {
            if a.tail.vertex == vertex && a.tail.slot == slot {
                return (i, true);
            }
            if a.head.vertex == vertex && a.head.slot == slot {
                return (i, false);
            }
        }
        unreachable!("every slot carries exactly one arc end")
    }
}

/// Edges of the interlacement graph: chord pairs that interleave.
pub fn interlacement(theta: &ChordDiagram) -> Vec<(usize, usize)> {
    let m = theta.chord_count();
    let mut edges = Vec::new();
    for a in 0..m {
        for b in a + 1..m {
            if theta.interleaved(a, b) {
                edges.push((a, b));
            }
        }
    }
    edges
}

/// Connected components of the interlacement graph; the diagram is
/// irreducible exactly when there is one component.
pub fn irreducible_factors(theta: &ChordDiagram) -> (usize, Vec<Vec<usize>>) {
    let m = theta.chord_count();
    let mut comp: Vec<usize> = (0..m).collect();
    fn find(comp: &mut Vec<usize>, x: usize) -> usize {
        if comp[x] != x {
            let r = find(comp, comp[x]);
            comp[x] = r;
        }
        comp[x]
    }
    for (a, b) in interlacement(theta) {
        let (ra, rb) = (find(&mut comp, a), find(&mut comp, b));
        comp[ra] = rb;
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for c in 0..m {
        let r = find(&mut comp, c);
        groups.entry(r).or_default().push(c);
    }
    let parts: Vec<Vec<usize>> = groups.into_values().collect();
    (parts.len(), parts)
}

// ---------------------------------------------------------------------------
// The unmodified grid complex G x G minus the squares C x C
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum GridEdge {
    /// Arc times vertex.
    Hor(usize, usize),
    /// Vertex times arc.
    Ver(usize, usize),
}

/// Product cell structure on `G x G` with the open squares `C x C` removed;
/// the factor-swap involution has fixed vertices `(w, w)`, so this complex
/// carries no free equivariant structure — it is the surgery input.
#[derive(Clone, Debug)]
pub struct GridComplex {
    pub vertices: Vec<(usize, usize)>,
    pub edges: Vec<GridEdge>,
    /// Ordered arc pairs `(C, D)` with `C != D`.
    pub squares: Vec<(usize, usize)>,
    pub chain: ChainComplex,
}

impl GridComplex {
    pub fn new(g: &QuotientGraph) -> GridComplex {
        let m = g.chords;
        let n = g.arcs.len();
        let mut vertices = Vec::new();
        for v in 0..m {
            for w in 0..m {
                vertices.push((v, w));
            }
        }
        let mut edges = Vec::new();
        for c in 0..n {
            for v in 0..m {
                edges.push(GridEdge::Hor(c, v));
            }
        }
        for v in 0..m {
            for c in 0..n {
                edges.push(GridEdge::Ver(v, c));
            }
        }
        edges.sort();
        let mut squares = Vec::new();
        for c in 0..n {
            for d in 0..n {
                if c != d {
                    squares.push((c, d));
                }
            }
        }
        let vindex: BTreeMap<(usize, usize), usize> =
            vertices.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let eindex: BTreeMap<&GridEdge, usize> =
            edges.iter().enumerate().map(|(i, x)| (x, i)).collect();
        let mut b1 = IntMatrix::zero(vertices.len(), edges.len());
        for (col, e) in edges.iter().enumerate() {
            let (head, tail) = match e {
                GridEdge::Hor(c, v) => {
                    ((g.arcs[*c].head.vertex, *v), (g.arcs[*c].tail.vertex, *v))
                }
                GridEdge::Ver(v, c) => {
                    ((*v, g.arcs[*c].head.vertex), (*v, g.arcs[*c].tail.vertex))
                }
            };
            b1.add_to(vindex[&head], col, &BigInt::one());
            b1.add_to(vindex[&tail], col, &(-BigInt::one()));
        }
        let mut b2 = IntMatrix::zero(edges.len(), squares.len());
        for (col, &(c, d)) in squares.iter().enumerate() {
            let ac = g.arcs[c];
            let ad = g.arcs[d];
            b2.add_to(eindex[&GridEdge::Ver(ac.head.vertex, d)], col, &BigInt::one());
            b2.add_to(eindex[&GridEdge::Ver(ac.tail.vertex, d)], col, &(-BigInt::one()));
            b2.add_to(eindex[&GridEdge::Hor(c, ad.head.vertex)], col, &(-BigInt::one()));
            b2.add_to(eindex[&GridEdge::Hor(c, ad.tail.vertex)], col, &BigInt::one());
        }
        let chain = ChainComplex {
            sizes: vec![vertices.len(), edges.len(), squares.len()],
            boundary: vec![IntMatrix::zero(0, vertices.len()), b1, b2],
        };
        assert!(chain.validate(), "grid boundary squares to zero");
        GridComplex {
            vertices,
            edges,
            squares,
            chain,
        }
    }

    pub fn square_index(&self, c: usize, d: usize) -> Option<usize> {
        self.squares.binary_search(&(c, d)).ok()
    }
}

// ---------------------------------------------------------------------------
// The blown-up complex
// ---------------------------------------------------------------------------

/// Cells of the surgered configuration space. At each chord vertex `w` the
/// link of the removed diagonal vertex `(w, w)` is identified with the
/// 1-skeleton of a 3-cube: the truncation vertices `h x w` sit at
/// `(1,1,1), (1,-1,-1), (-1,-1,1), (-1,1,-1)` for slots `0..4` and the
/// vertices `w x h` at their antipodes; the four vertical faces of the cube
/// are glued in, each split into two triangles.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ThetaCell {
    /// Off-diagonal vertex `(v, w)`.
    Vertex(usize, usize),
    /// Truncation vertex at chord `w`: side 0 is `h x w`, side 1 is `w x h`.
    Trunc { w: usize, side: u8, slot: u8 },
    /// Truncated edge `C x v`.
    Hor(usize, usize),
    /// Truncated edge `v x C`.
    Ver(usize, usize),
    /// Cube edge from `h_i x w` to `w x h_j` (`i != j`).
    Corner { w: usize, i: u8, j: u8 },
    /// Face diagonal: 0 = slot0->slot1 on side 0, 1 = slot0->slot3 on side 0,
    /// 2 and 3 their involution images on side 1.
    Diag { w: usize, k: u8 },
    /// Truncated square `C x D` (`C != D`).
    Square(usize, usize),
    /// Glued triangle, eight per chord vertex.
    Tri { w: usize, k: u8 },
}

/// The surgered configuration space of a chord diagram, together with the
/// handle locus and the unmodified grid complex it was built from.
pub struct BlownUpComplex {
    pub diagram: ChordDiagram,
    pub graph: QuotientGraph,
    pub complex: EquivariantCellComplex<ThetaCell>,
    /// Per degree: indices of handle-locus cells (truncation vertices, cube
    /// edges and diagonals, triangles).
    pub nu: Vec<Vec<usize>>,
    pub grid: GridComplex,
}

fn tri_boundary(w: usize, k: u8) -> Vec<(ThetaCell, i64)> {
    let a = |i: u8, j: u8| ThetaCell::Corner { w, i, j };
    let dg = |k: u8| ThetaCell::Diag { w, k };
    match k {
        0 => vec![(a(0, 3), 1), (a(1, 3), -1), (dg(0), -1)],
        1 => vec![(dg(0), 1), (a(1, 2), 1), (a(0, 2), -1)],
        2 => vec![(a(0, 1), 1), (a(3, 1), -1), (dg(1), -1)],
        3 => vec![(dg(1), 1), (a(3, 2), 1), (a(0, 2), -1)],
        // Involution images: t(corner i->j) = -(corner j->i), t(diag k) = diag k+2.
        4 => vec![(a(3, 0), -1), (a(3, 1), 1), (dg(2), -1)],
        5 => vec![(dg(2), 1), (a(2, 1), -1), (a(2, 0), 1)],
        6 => vec![(a(1, 0), -1), (a(1, 3), 1), (dg(3), -1)],
        7 => vec![(dg(3), 1), (a(2, 3), -1), (a(2, 0), 1)],
        _ => unreachable!("triangle index"),
    }
}

pub fn build_config_space(theta: &ChordDiagram) -> Result<BlownUpComplex, ChordError> {
    let m = theta.chord_count();
    if m == 0 {
        return Err(ChordError::Empty);
    }
    let g = theta.quotient_graph();
    let n = g.arcs.len();
    let grid = GridComplex::new(&g);

    let mut c0: Vec<ThetaCell> = Vec::new();
    for v in 0..m {
        for w in 0..m {
            if v != w {
                c0.push(ThetaCell::Vertex(v, w));
            }
        }
    }
    for w in 0..m {
        for side in 0..2u8 {
            for slot in 0..4u8 {
                c0.push(ThetaCell::Trunc { w, side, slot });
            }
        }
    }
    let mut c1: Vec<ThetaCell> = Vec::new();
    for c in 0..n {
        for v in 0..m {
            c1.push(ThetaCell::Hor(c, v));
            c1.push(ThetaCell::Ver(v, c));
        }
    }
    for w in 0..m {
        for i in 0..4u8 {
            for j in 0..4u8 {
                if i != j {
                    c1.push(ThetaCell::Corner { w, i, j });
                }
            }
        }
        for k in 0..4u8 {
            c1.push(ThetaCell::Diag { w, k });
        }
    }
    let mut c2: Vec<ThetaCell> = Vec::new();
    for &(c, d) in &grid.squares {
        c2.push(ThetaCell::Square(c, d));
    }
    for w in 0..m {
        for k in 0..8u8 {
            c2.push(ThetaCell::Tri { w, k });
        }
    }
    c0.sort();
    c1.sort();
    c2.sort();
    let idx = |cells: &[ThetaCell]| -> BTreeMap<ThetaCell, usize> {
        cells.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect()
    };
    let (i0, i1, i2) = (idx(&c0), idx(&c1), idx(&c2));

    // An edge end lands either on an off-diagonal vertex or, when it reaches
    // the removed diagonal vertex, on the matching truncation vertex.
    let edge_end = |arc: usize, head: bool, v: usize, horizontal: bool| -> ThetaCell {
        let end = g.arcs[arc].end(head);
        if end.vertex == v {
            ThetaCell::Trunc {
                w: v,
                side: if horizontal { 0 } else { 1 },
                slot: end.slot,
            }
        } else if horizontal {
            ThetaCell::Vertex(end.vertex, v)
        } else {
            ThetaCell::Vertex(v, end.vertex)
        }
    };

    let mut b1 = IntMatrix::zero(c0.len(), c1.len());
    for (col, cell) in c1.iter().enumerate() {
        match cell {
            ThetaCell::Hor(c, v) => {
                b1.add_to(i0[&edge_end(*c, true, *v, true)], col, &BigInt::one());
                b1.add_to(i0[&edge_end(*c, false, *v, true)], col, &(-BigInt::one()));
            }
            ThetaCell::Ver(v, c) => {
                b1.add_to(i0[&edge_end(*c, true, *v, false)], col, &BigInt::one());
                b1.add_to(i0[&edge_end(*c, false, *v, false)], col, &(-BigInt::one()));
            }
            ThetaCell::Corner { w, i, j } => {
                b1.add_to(i0[&ThetaCell::Trunc { w: *w, side: 1, slot: *j }], col, &BigInt::one());
                b1.add_to(i0[&ThetaCell::Trunc { w: *w, side: 0, slot: *i }], col, &(-BigInt::one()));
            }
            ThetaCell::Diag { w, k } => {
                let (side, slot) = match k {
                    0 => (0, 1),
                    1 => (0, 3),
                    2 => (1, 1),
                    3 => (1, 3),
                    _ => unreachable!(),
                };
                b1.add_to(i0[&ThetaCell::Trunc { w: *w, side, slot }], col, &BigInt::one());
                b1.add_to(i0[&ThetaCell::Trunc { w: *w, side, slot: 0 }], col, &(-BigInt::one()));
            }
            _ => unreachable!("degree 1"),
        }
    }

    let mut b2 = IntMatrix::zero(c1.len(), c2.len());
    for (col, cell) in c2.iter().enumerate() {
        match cell {
            ThetaCell::Square(c, d) => {
                let (ac, ad) = (g.arcs[*c], g.arcs[*d]);
                b2.add_to(i1[&ThetaCell::Ver(ac.head.vertex, *d)], col, &BigInt::one());
                b2.add_to(i1[&ThetaCell::Ver(ac.tail.vertex, *d)], col, &(-BigInt::one()));
                b2.add_to(i1[&ThetaCell::Hor(*c, ad.head.vertex)], col, &(-BigInt::one()));
                b2.add_to(i1[&ThetaCell::Hor(*c, ad.tail.vertex)], col, &BigInt::one());
                // Corner cut at each diagonal corner of the square.
                for a in 0..2usize {
                    for b in 0..2usize {
                        let ce = ac.end(a == 1);
                        let de = ad.end(b == 1);
                        if ce.vertex == de.vertex {
                            let sign = if (a + b) % 2 == 0 { -1 } else { 1 };
                            b2.add_to(
                                i1[&ThetaCell::Corner { w: ce.vertex, i: ce.slot, j: de.slot }],
                                col,
                                &BigInt::from(sign),
                            );
                        }
                    }
                }
            }
            ThetaCell::Tri { w, k } => {
                for (edge, sign) in tri_boundary(*w, *k) {
                    b2.add_to(i1[&edge], col, &BigInt::from(sign));
                }
            }
            _ => unreachable!("degree 2"),
        }
    }

    let involute = |cell: &ThetaCell| -> (ThetaCell, i64) {
        match cell {
            ThetaCell::Vertex(v, w) => (ThetaCell::Vertex(*w, *v), 1),
            ThetaCell::Trunc { w, side, slot } => (
                ThetaCell::Trunc { w: *w, side: 1 - side, slot: *slot },
                1,
            ),
            ThetaCell::Hor(c, v) => (ThetaCell::Ver(*v, *c), 1),
            ThetaCell::Ver(v, c) => (ThetaCell::Hor(*c, *v), 1),
            ThetaCell::Corner { w, i, j } => (ThetaCell::Corner { w: *w, i: *j, j: *i }, -1),
            ThetaCell::Diag { w, k } => (ThetaCell::Diag { w: *w, k: (k + 2) % 4 }, 1),
            ThetaCell::Square(c, d) => (ThetaCell::Square(*d, *c), -1),
            ThetaCell::Tri { w, k } => (ThetaCell::Tri { w: *w, k: (k + 4) % 8 }, 1),
        }
    };
    let inv_layer = |cells: &[ThetaCell], index: &BTreeMap<ThetaCell, usize>| {
        cells
            .iter()
            .map(|c| {
                let (img, s) = involute(c);
                (index[&img], s)
            })
            .collect::<Vec<_>>()
    };
    let involution = vec![
        inv_layer(&c0, &i0),
        inv_layer(&c1, &i1),
        inv_layer(&c2, &i2),
    ];

    let is_nu = |c: &ThetaCell| {
        matches!(
            c,
            ThetaCell::Trunc { .. }
                | ThetaCell::Corner { .. }
                | ThetaCell::Diag { .. }
                | ThetaCell::Tri { .. }
        )
    };
    let nu: Vec<Vec<usize>> = [&c0, &c1, &c2]
        .iter()
        .map(|layer| {
            layer
                .iter()
                .enumerate()
                .filter_map(|(i, c)| is_nu(c).then_some(i))
                .collect()
        })
        .collect();

    let b0 = IntMatrix::zero(0, c0.len());
    let complex = EquivariantCellComplex::new(vec![c0, c1, c2], vec![b0, b1, b2], involution)?;

    let bc = BlownUpComplex {
        diagram: theta.clone(),
        graph: g,
        complex,
        nu,
        grid,
    };
    bc.check_handles()?;
    Ok(bc)
}

impl BlownUpComplex {
    pub fn cell_index(&self, d: usize, cell: &ThetaCell) -> Option<usize> {
        self.complex.cells[d].binary_search(cell).ok()
    }

    /// Verifies that the handle glued at each chord vertex is an annulus
    /// whose two boundary circles are swapped by the involution.
    fn check_handles(&self) -> Result<(), ChordError> {
        for w in 0..self.graph.chords {
            let belongs = |c: &ThetaCell| match c {
                ThetaCell::Trunc { w: x, .. }
                | ThetaCell::Corner { w: x, .. }
                | ThetaCell::Diag { w: x, .. }
                | ThetaCell::Tri { w: x, .. } => *x == w,
                _ => false,
            };
            let chain = self.subcomplex_chain(&belongs);
            let h0 = chain.homology(0, Coefficients::Integral);
            let h1 = chain.homology(1, Coefficients::Integral);
            let h2 = chain.homology(2, Coefficients::Integral);
            if h0 != AbelianGroup::free(1) || h1 != AbelianGroup::free(1) || !h2.is_trivial() {
                return Err(ChordError::Internal(format!(
                    "handle at chord {} is not an annulus: H0 = {}, H1 = {}, H2 = {}",
                    w, h0, h1, h2
                )));
            }
            // Boundary circles: the four cube edges inside each horizontal
            // face; the involution must exchange the two squares.
            let top = [(0u8, 1u8), (0, 3), (2, 1), (2, 3)];
            for (i, j) in top {
                let cell = ThetaCell::Corner { w, i, j };
                let pos = self.cell_index(1, &cell).expect("corner present");
                let (img, _) = self.complex.involution[1][pos];
                let bottom = ThetaCell::Corner { w, i: j, j: i };
                if self.complex.cells[1][img] != bottom {
                    return Err(ChordError::Internal(
                        "involution does not swap the handle boundary circles".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Chain complex of a cell-selected subcomplex of the total space.
    fn subcomplex_chain(&self, belongs: &dyn Fn(&ThetaCell) -> bool) -> ChainComplex {
        let keep: Vec<Vec<usize>> = self
            .complex
            .cells
            .iter()
            .map(|layer| {
                layer
                    .iter()
                    .enumerate()
                    .filter_map(|(i, c)| belongs(c).then_some(i))
                    .collect()
            })
            .collect();
        restrict_chain(&self.complex.total_complex(), &keep)
    }

    /// Chain complex of the pair (total space, handle locus): the columns and
    /// rows of the handle cells are removed.
    pub fn relative_to_handles(&self) -> ChainComplex {
        let keep: Vec<Vec<usize>> = self
            .complex
            .cells
            .iter()
            .enumerate()
            .map(|(d, layer)| {
                let nu: BTreeSet<usize> = self.nu[d].iter().copied().collect();
                (0..layer.len()).filter(|i| !nu.contains(i)).collect()
            })
            .collect();
        restrict_chain(&self.complex.total_complex(), &keep)
    }

    /// Orbit-representative indices of handle cells, per degree, as positions
    /// in the representative basis.
    pub fn handle_rep_positions(&self, d: usize) -> Vec<usize> {
        let nu: BTreeSet<usize> = self.nu[d].iter().copied().collect();
        self.complex
            .orbit_reps(d)
            .iter()
            .enumerate()
            .filter_map(|(k, c)| nu.contains(c).then_some(k))
            .collect()
    }

    /// Quotient chain complex relative to the Möbius locus (the image of the
    /// handles), in the given parity.
    pub fn relative_quotient_chain(&self, parity: Parity) -> ChainComplex {
        let q = self.complex.twisted_chain_complex(parity);
        let keep: Vec<Vec<usize>> = (0..q.sizes.len())
            .map(|d| {
                let mu: BTreeSet<usize> = self.handle_rep_positions(d).into_iter().collect();
                (0..q.sizes[d]).filter(|i| !mu.contains(i)).collect()
            })
            .collect();
        restrict_chain(&q, &keep)
    }
}

/// Restricts a chain complex to the selected cell positions per degree
/// (either a subcomplex closed under faces or a quotient by a subcomplex
/// closed under cofaces; the caller guarantees whichever applies).
fn restrict_chain(chain: &ChainComplex, keep: &[Vec<usize>]) -> ChainComplex {
    let mut sizes = Vec::new();
    let mut boundary = Vec::new();
    for d in 0..keep.len() {
        sizes.push(keep[d].len());
        let rows = if d == 0 { 0 } else { keep[d - 1].len() };
        let mut m = IntMatrix::zero(rows, keep[d].len());
        if d > 0 {
            let rowpos: BTreeMap<usize, usize> =
                keep[d - 1].iter().enumerate().map(|(i, &c)| (c, i)).collect();
            for (col, &cell) in keep[d].iter().enumerate() {
                let column = chain.boundary[d].column(cell);
                for (r, v) in column.iter().enumerate() {
                    if !v.is_zero() {
                        if let Some(&rr) = rowpos.get(&r) {
                            m.set(rr, col, v.clone());
                        }
                    }
                }
            }
        }
        boundary.push(m);
    }
    ChainComplex { sizes, boundary }
}

/// Rank of the degree-one invariant group: the twisted degree-2 cohomology of
/// the quotient, machine-checked against the closed form C(m, 2) + n where n
/// counts irreducible factors.
pub fn gamma1_rank(theta: &ChordDiagram) -> Result<usize, ChordError> {
    let bc = build_config_space(theta)?;
    let h = bc
        .complex
        .twisted_cohomology(2, Parity::Twisted, Coefficients::Integral);
    if !h.torsion.is_empty() {
        return Err(ChordError::Internal(format!(
            "twisted H^2 of the quotient is not free: {}",
            h
        )));
    }
    let m = theta.chord_count();
    let (n, _) = irreducible_factors(theta);
    let expected = m * (m.saturating_sub(1)) / 2 + n;
    if h.free_rank != expected {
        return Err(ChordError::Internal(format!(
            "twisted H^2 rank {} differs from C(m,2) + n = {}",
            h.free_rank, expected
        )));
    }
    Ok(h.free_rank)
}

// ---------------------------------------------------------------------------
// Derivative data and its cycle
// ---------------------------------------------------------------------------

/// The derivative of a degree-one invariant: an integer per unordered pair of
/// arcs, zero on diagonal pairs (the one-term relation), whose associated
/// 2-chain is a cycle (the four-term relation).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivativeData {
    pub arcs: usize,
    values: BTreeMap<(usize, usize), BigInt>,
}

impl DerivativeData {
    pub fn zero(arcs: usize) -> DerivativeData {
        DerivativeData {
            arcs,
            values: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, c: usize, d: usize, v: BigInt) -> Result<(), ChordError> {
        if c >= self.arcs || d >= self.arcs {
            return Err(ChordError::ArcOutOfRange(c.max(d)));
        }
        let key = (c.min(d), c.max(d));
        if v.is_zero() {
            self.values.remove(&key);
        } else {
            self.values.insert(key, v);
        }
        Ok(())
    }

    pub fn get(&self, c: usize, d: usize) -> BigInt {
        self.values
            .get(&(c.min(d), c.max(d)))
            .cloned()
            .unwrap_or_else(BigInt::zero)
    }

    pub fn add(&self, other: &DerivativeData) -> Result<DerivativeData, ChordError> {
        if self.arcs != other.arcs {
            return Err(ChordError::DiagramMismatch);
        }
        let mut out = self.clone();
        for (&(c, d), v) in &other.values {
            let sum = out.get(c, d) + v;
            out.set(c, d, sum)?;
        }
        Ok(out)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(usize, usize), &BigInt)> {
        self.values.iter()
    }

    /// Parses lines of the form `C D value` (arc indices and an integer).
    pub fn parse(text: &str, arcs: usize) -> Result<DerivativeData, ChordError> {
        let mut data = DerivativeData::zero(arcs);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(ChordError::Parse(format!(
                    "line {}: expected `C D value`",
                    lineno + 1
                )));
            }
            let c: usize = parts[0]
                .parse()
                .map_err(|_| ChordError::Parse(format!("line {}: bad arc index", lineno + 1)))?;
            let d: usize = parts[1]
                .parse()
                .map_err(|_| ChordError::Parse(format!("line {}: bad arc index", lineno + 1)))?;
            let v: BigInt = parts[2]
                .parse()
                .map_err(|_| ChordError::Parse(format!("line {}: bad integer", lineno + 1)))?;
            let sum = data.get(c, d) + v;
            data.set(c, d, sum)?;
        }
        Ok(data)
    }
}

/// Checks the one-term and four-term relations and returns the associated
/// skew-invariant 2-cycle on the grid complex (coefficients on its ordered
/// square basis).
pub fn validate_derivative(
    bc: &BlownUpComplex,
    data: &DerivativeData,
) -> Result<TwistedClass, ChordError> {
    if data.arcs != bc.graph.arcs.len() {
        return Err(ChordError::DiagramMismatch);
    }
    for (&(c, d), v) in &data.values {
        if c == d && !v.is_zero() {
            return Err(ChordError::OneTerm(c));
        }
    }
    let mut chain = vec![BigInt::zero(); bc.grid.squares.len()];
    for (i, &(c, d)) in bc.grid.squares.iter().enumerate() {
        chain[i] = data.get(c, d);
    }
    let img = bc.grid.chain.boundary[2].mul_vec(&chain);
    if let Some(r) = img.iter().position(|x| !x.is_zero()) {
        return Err(ChordError::FourTerm(format!("{:?}", bc.grid.edges[r])));
    }
    Ok(TwistedClass {
        degree: 2,
        parity: Parity::Twisted,
        mod2: false,
        direction: Direction::Homology,
        coeffs: chain,
    })
}

/// The unique skew-invariant 2-cycle on the blown-up complex whose proper
/// transform restricts to the derivative chain: the square coefficients are
/// carried over and the correction on glued triangles is solved for.
pub fn lift_chain(
    bc: &BlownUpComplex,
    data: &DerivativeData,
) -> Result<Vec<BigInt>, ChordError> {
    validate_derivative(bc, data)?;
    let cells = &bc.complex.cells[2];
    let mut chain = vec![BigInt::zero(); cells.len()];
    let mut tri_cols: Vec<usize> = Vec::new();
    for (i, cell) in cells.iter().enumerate() {
        match cell {
            ThetaCell::Square(c, d) => chain[i] = data.get(*c, *d),
            ThetaCell::Tri { .. } => tri_cols.push(i),
            _ => unreachable!(),
        }
    }
    let boundary = &bc.complex.boundary[2];
    let partial = boundary.mul_vec(&chain);
    let rows = boundary.rows();
    let mut tri_matrix = IntMatrix::zero(rows, tri_cols.len());
    for (col, &cell) in tri_cols.iter().enumerate() {
        for (r, v) in boundary.column(cell).iter().enumerate() {
            if !v.is_zero() {
                tri_matrix.set(r, col, v.clone());
            }
        }
    }
    let rhs: Vec<BigInt> = partial.iter().map(|x| -x).collect();
    let correction = exactalg::solve_integer(&tri_matrix, &rhs).ok_or_else(|| {
        ChordError::Internal("no triangle correction makes the transform a cycle".into())
    })?;
    if exactalg::kernel_basis(&tri_matrix).cols() != 0 {
        return Err(ChordError::Internal(
            "triangle correction is not unique".into(),
        ));
    }
    for (col, &cell) in tri_cols.iter().enumerate() {
        chain[cell] = correction[col].clone();
    }
    // Skew-invariance: the involution must carry the chain to its negation.
    for (i, &(img, s)) in bc.complex.involution[2].iter().enumerate() {
        if chain[img] != -BigInt::from(s) * &chain[i] {
            return Err(ChordError::Internal(
                "lifted cycle is not skew-invariant".into(),
            ));
        }
    }
    Ok(chain)
}

/// The lifted 2-cycle as a twisted homology class of the quotient
/// (coefficients on orbit representatives).
pub fn lift_cycle(bc: &BlownUpComplex, data: &DerivativeData) -> Result<TwistedClass, ChordError> {
    let chain = lift_chain(bc, data)?;
    let coeffs: Vec<BigInt> = bc
        .complex
        .orbit_reps(2)
        .iter()
        .map(|&c| chain[c].clone())
        .collect();
    let class = TwistedClass {
        degree: 2,
        parity: Parity::Twisted,
        mod2: false,
        direction: Direction::Homology,
        coeffs,
    };
    bc.complex.check_class(&class)?;
    Ok(class)
}

// ---------------------------------------------------------------------------
// Arrow formulas, their obstruction, and the mod-2 invariant
// ---------------------------------------------------------------------------

/// An arrow-diagram formula: an integer per ordered arc pair plus a constant.
/// With `doubled` set, all pair coefficients are stored multiplied by two and
/// the evaluator halves their contribution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArrowFormula {
    pub arcs: usize,
    pub coeffs: BTreeMap<(usize, usize), BigInt>,
    pub constant: BigInt,
    pub doubled: bool,
}

impl ArrowFormula {
    pub fn zero(arcs: usize) -> ArrowFormula {
        ArrowFormula {
            arcs,
            coeffs: BTreeMap::new(),
            constant: BigInt::zero(),
            doubled: false,
        }
    }

    pub fn coefficient(&self, c: usize, d: usize) -> BigInt {
        self.coeffs.get(&(c, d)).cloned().unwrap_or_else(BigInt::zero)
    }
}

/// The obstruction to an integral arrow formula: the connecting image of the
/// lifted cycle, an untwisted degree-1 homology class of the quotient.
pub fn arrow_formula_obstruction(
    bc: &BlownUpComplex,
    data: &DerivativeData,
) -> Result<TwistedClass, ChordError> {
    let class = lift_cycle(bc, data)?;
    Ok(bc.complex.smith_connecting_homology(&class)?)
}

/// Searches for an integral cycle on the blown-up complex whose symmetrized
/// square coefficients reproduce the derivative; its square part is the
/// formula. Returns None when no integral solution exists.
pub fn integral_arrow_formula(
    bc: &BlownUpComplex,
    data: &DerivativeData,
) -> Result<Option<ArrowFormula>, ChordError> {
    validate_derivative(bc, data)?;
    let cells = &bc.complex.cells[2];
    let boundary = &bc.complex.boundary[2];
    let n = bc.graph.arcs.len();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for c in 0..n {
        for d in c + 1..n {
            pairs.push((c, d));
        }
    }
    let pos = |c: usize, d: usize| -> usize {
        cells
            .binary_search(&ThetaCell::Square(c, d))
            .expect("square present")
    };
    let mut sym = IntMatrix::zero(pairs.len(), cells.len());
    let mut rhs: Vec<BigInt> = vec![BigInt::zero(); boundary.rows()];
    for (r, &(c, d)) in pairs.iter().enumerate() {
        sym.set(r, pos(c, d), BigInt::one());
        sym.add_to(r, pos(d, c), &BigInt::one());
        rhs.push(data.get(c, d));
    }
    let system = boundary.vstack(&sym);
    match exactalg::solve_integer(&system, &rhs) {
        None => Ok(None),
        Some(solution) => {
            let mut formula = ArrowFormula::zero(n);
            for (i, cell) in cells.iter().enumerate() {
                if let ThetaCell::Square(c, d) = cell {
                    if !solution[i].is_zero() {
                        formula.coeffs.insert((*c, *d), solution[i].clone());
                    }
                }
            }
            Ok(Some(formula))
        }
    }
}

/// The always-available formula with half-integer coefficients, stored
/// doubled: each ordered pair carries the derivative value of its unordered
/// pair.
pub fn half_integer_formula(
    bc: &BlownUpComplex,
    data: &DerivativeData,
) -> Result<ArrowFormula, ChordError> {
    validate_derivative(bc, data)?;
    let n = bc.graph.arcs.len();
    let mut formula = ArrowFormula::zero(n);
    formula.doubled = true;
    for c in 0..n {
        for d in 0..n {
            if c != d {
                let v = data.get(c, d);
                if !v.is_zero() {
                    formula.coeffs.insert((c, d), v);
                }
            }
        }
    }
    Ok(formula)
}

/// The mod-2 obstruction: the twice-iterated connecting image of the lifted
/// cycle, evaluated in the twisted degree-0 homology of the quotient, which
/// is cyclic of order two.
pub fn propto(bc: &BlownUpComplex, data: &DerivativeData) -> Result<u8, ChordError> {
    let h0 = bc
        .complex
        .twisted_homology(0, Parity::Twisted, Coefficients::Integral);
    if h0 != AbelianGroup::cyclic(2) {
        return Err(ChordError::Internal(format!(
            "twisted H_0 of the quotient is {} rather than Z/2",
            h0
        )));
    }
    let class = lift_cycle(bc, data)?;
    let once = bc.complex.smith_connecting_homology(&class)?;
    let twice = bc.complex.smith_connecting_homology(&once)?;
    Ok(if bc.complex.is_trivial_class(&twice)? { 0 } else { 1 })
}

// ---------------------------------------------------------------------------
// Cycles in the quotient graph, crossing pairs, and derivative fixtures
// ---------------------------------------------------------------------------

/// A closed trail in the quotient graph: its arc set together with, at every
/// visit of a vertex, the unordered pair of half-edge slots used.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct GraphCycle {
    pub arcs: BTreeSet<usize>,
    pub passages: BTreeMap<usize, Vec<(u8, u8)>>,
}

impl GraphCycle {
    /// A passage is transversal when its two slots belong to the same strand
    /// pair ({0, 2} or {1, 3}), i.e. the trail runs straight through.
    pub fn transversal_at(&self, vertex: usize) -> Option<bool> {
        let p = self.passages.get(&vertex)?;
        if p.len() != 1 {
            return None;
        }
        Some(p[0].0 % 2 == p[0].1 % 2)
    }

    pub fn contains_arc(&self, arc: usize) -> bool {
        self.arcs.contains(&arc)
    }
}

/// All closed trails (edge-simple closed walks) in the quotient graph, up to
/// rotation and reversal of the traversal.
pub fn closed_trails(g: &QuotientGraph) -> Vec<GraphCycle> {
    let n = g.arcs.len();
    let mut out: BTreeSet<GraphCycle> = BTreeSet::new();
    // Start from each arc (the smallest in its trail), traverse forward.
    for a0 in 0..n {
        let start_vertex = g.arcs[a0].tail.vertex;
        let start_slot = g.arcs[a0].tail.slot;
        // State: current vertex, arrival slot, used arcs, recorded passages.
        struct Frame {
            vertex: usize,
            in_slot: u8,
            used: Vec<bool>,
            passages: BTreeMap<usize, Vec<(u8, u8)>>,
        }
        let mut used = vec![false; n];
        used[a0] = true;
        let first = Frame {
            vertex: g.arcs[a0].head.vertex,
            in_slot: g.arcs[a0].head.slot,
            used,
            passages: BTreeMap::new(),
        };
        // Depth-first over leave slots.
        fn explore(
            g: &QuotientGraph,
            a0: usize,
            start_vertex: usize,
            start_slot: u8,
            f: Frame,
            out: &mut BTreeSet<GraphCycle>,
        ) {
            for leave in 0..4u8 {
                if leave == f.in_slot {
                    continue;
                }
                // Close the trail when the leave slot re-enters the start arc.
                if f.vertex == start_vertex && leave == start_slot {
                    let mut passages = f.passages.clone();
                    passages
                        .entry(f.vertex)
                        .or_default()
                        .push(order_pair(f.in_slot, leave));
                    for v in passages.values_mut() {
                        v.sort();
                    }
                    let arcs: BTreeSet<usize> = f
                        .used
                        .iter()
                        .enumerate()
                        .filter_map(|(i, &u)| u.then_some(i))
                        .collect();
                    out.insert(GraphCycle { arcs, passages });
                    continue;
                }
                let (arc, forward) = g.dart_leaving(f.vertex, leave);
                if f.used[arc] || arc < a0 {
                    continue;
                }
                let far = if forward { g.arcs[arc].head } else { g.arcs[arc].tail };
                let mut used = f.used.clone();
                used[arc] = true;
                let mut passages = f.passages.clone();
                passages
                    .entry(f.vertex)
                    .or_default()
                    .push(order_pair(f.in_slot, leave));
                explore(
                    g,
                    a0,
                    start_vertex,
                    start_slot,
                    Frame {
                        vertex: far.vertex,
                        in_slot: far.slot,
                        used,
                        passages,
                    },
                    out,
                );
            }
        }
        explore(g, a0, start_vertex, start_slot, first, &mut out);
    }
    out.into_iter().collect()
}

fn order_pair(a: u8, b: u8) -> (u8, u8) {
    (a.min(b), a.max(b))
}

/// Edge-disjoint trail pairs with exactly one transversal common vertex.
pub fn manturov_pairs(theta: &ChordDiagram) -> Vec<(GraphCycle, GraphCycle)> {
    let g = theta.quotient_graph();
    let trails = closed_trails(&g);
    let mut out = Vec::new();
    for (i, a) in trails.iter().enumerate() {
        for b in trails.iter().skip(i + 1) {
            if a.arcs.intersection(&b.arcs).next().is_some() {
                continue;
            }
            let mut transversal = 0usize;
            let mut ok = true;
            for v in a.passages.keys() {
                if !b.passages.contains_key(v) {
                    continue;
                }
                match (a.transversal_at(*v), b.transversal_at(*v)) {
                    (Some(ta), Some(tb)) => {
                        if ta != tb {
                            ok = false;
                            break;
                        }
                        if ta {
                            transversal += 1;
                        }
                    }
                    // A vertex fully used by one trail cannot be shared.
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok && transversal == 1 {
                out.push((a.clone(), b.clone()));
            }
        }
    }
    out
}

/// Derivative of the linking-number invariant attached to two edge-disjoint
/// cycles: adding a chord from an `a`-strand to a `b`-strand changes the
/// linking number by one.
pub fn v_ab_derivative(
    theta: &ChordDiagram,
    a: &GraphCycle,
    b: &GraphCycle,
) -> Result<DerivativeData, ChordError> {
    if a.arcs.intersection(&b.arcs).next().is_some() {
        return Err(ChordError::SharedEdge);
    }
    let n = theta.arc_count();
    let mut data = DerivativeData::zero(n);
    for c in 0..n {
        for d in 0..n {
            if c == d {
                continue;
            }
            let v = i64::from(a.contains_arc(c) && b.contains_arc(d))
                + i64::from(b.contains_arc(c) && a.contains_arc(d));
            if v != 0 && c < d {
                data.set(c, d, BigInt::from(v))?;
            }
        }
    }
    Ok(data)
}

/// Basis of the integer solutions of the one-term/four-term linear system:
/// the derivative lattice of degree-one invariants.
pub fn type_one_basis(bc: &BlownUpComplex) -> Vec<DerivativeData> {
    let n = bc.graph.arcs.len();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for c in 0..n {
        for d in c + 1..n {
            pairs.push((c, d));
        }
    }
    let b2 = &bc.grid.chain.boundary[2];
    let mut m = IntMatrix::zero(b2.rows(), pairs.len());
    for (col, &(c, d)) in pairs.iter().enumerate() {
        for sq in [(c, d), (d, c)] {
            let idx = bc.grid.square_index(sq.0, sq.1).expect("square present");
            for (r, v) in b2.column(idx).iter().enumerate() {
                if !v.is_zero() {
                    m.add_to(r, col, v);
                }
            }
        }
    }
    let kernel = exactalg::kernel_basis(&m);
    (0..kernel.cols())
        .map(|col| {
            let mut data = DerivativeData::zero(n);
            for (r, &(c, d)) in pairs.iter().enumerate() {
                let v = kernel.get(r, col).clone();
                if !v.is_zero() {
                    data.set(c, d, v).expect("in range");
                }
            }
            data
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Planarity
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanarityReport {
    pub planar: bool,
    pub zeta_trivial: bool,
    pub manturov_empty: bool,
    pub realizable: bool,
}

/// Brute-force realizability: some assignment of one of the two transversal
/// rotation systems per chord vertex embeds the quotient graph in the sphere
/// with the right face count.
pub fn realizable(theta: &ChordDiagram) -> bool {
    let g = theta.quotient_graph();
    let m = g.chords;
    for mask in 0u32..(1 << m) {
        // Rotation at w: cyclic order of slots. Both choices alternate the
        // two strands, as an immersed double point does.
        let rotation = |w: usize| -> [u8; 4] {
            if mask >> w & 1 == 0 {
                [0, 1, 2, 3]
            } else {
                [0, 3, 2, 1]
            }
        };
        // Darts: 2*arc + direction. The dart leaving slot s of w is unique.
        let nd = 2 * g.arcs.len();
        let mut next = vec![usize::MAX; nd];
        for i in 0..g.arcs.len() {
            for dart in [2 * i, 2 * i + 1] {
                // Face rule: reverse the dart, then take the rotation
                // successor at the vertex where the reversed dart leaves.
                let rev = dart ^ 1;
                let rev_end = if rev % 2 == 0 { g.arcs[rev / 2].tail } else { g.arcs[rev / 2].head };
                let rot = rotation(rev_end.vertex);
                let pos = rot
                    .iter()
                    .position(|&s| s == rev_end.slot)
                    .expect("slot in rotation");
                let next_slot = rot[(pos + 1) % 4];
                let (arc2, fwd) = g.dart_leaving(rev_end.vertex, next_slot);
                next[dart] = 2 * arc2 + usize::from(!fwd);
            }
        }
        let mut seen = vec![false; nd];
        let mut faces = 0usize;
        for d in 0..nd {
            if seen[d] {
                continue;
            }
            faces += 1;
            let mut x = d;
            while !seen[x] {
                seen[x] = true;
                x = next[x];
            }
        }
        // Euler characteristic of the candidate embedding surface.
        let chi = m as i64 - g.arcs.len() as i64 + faces as i64;
        if chi == 2 {
            return true;
        }
    }
    false
}

/// Planarity by three independent methods, which must agree: triviality of
/// the squared Euler class of the quotient double cover, absence of Manturov
/// pairs, and the combinatorial realizability oracle.
pub fn planarity(theta: &ChordDiagram) -> Result<PlanarityReport, ChordError> {
    let bc = build_config_space(theta)?;
    let zeta = bc.complex.euler_power(2, false)?;
    let zeta_trivial = bc.complex.is_trivial_class(&zeta)?;
    let manturov_empty = manturov_pairs(theta).is_empty();
    let r = realizable(theta);
    if zeta_trivial != manturov_empty || zeta_trivial != r {
        return Err(ChordError::Internal(format!(
            "planarity methods disagree: zeta trivial = {}, no Manturov pairs = {}, realizable = {}",
            zeta_trivial, manturov_empty, r
        )));
    }
    Ok(PlanarityReport {
        planar: zeta_trivial,
        zeta_trivial,
        manturov_empty,
        realizable: r,
    })
}

// ---------------------------------------------------------------------------
// Degree-one homology structure
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct H1Report {
    /// Integral degree-1 homology of the quotient.
    pub h1: AbelianGroup,
    /// Kernel of the map to the homology relative to the Möbius locus.
    pub kernel: AbelianGroup,
    /// The same kernel with odd torsion removed.
    pub kernel_mod_odd: AbelianGroup,
    /// Whether the relative connecting map out of twisted relative degree-2
    /// homology vanishes.
    pub relative_cap_trivial: bool,
}

pub fn h1_structure(theta: &ChordDiagram) -> Result<H1Report, ChordError> {
    let bc = build_config_space(theta)?;
    let q = bc.complex.twisted_chain_complex(Parity::Untwisted);
    let h1 = q.homology(1, Coefficients::Integral);

    // Kernel of H1(quotient) -> H1(quotient, mu): classes of cycles that
    // become boundaries modulo chains on the Möbius locus.
    let b2 = q.boundary_from(2);
    let b1 = q.boundary_from(1);
    let mu1 = bc.handle_rep_positions(1);
    let mut restricted = IntMatrix::zero(b1.rows(), mu1.len());
    for (col, &c) in mu1.iter().enumerate() {
        for (r, v) in b1.column(c).iter().enumerate() {
            if !v.is_zero() {
                restricted.set(r, col, v.clone());
            }
        }
    }
    let mu_cycles = exactalg::kernel_basis(&restricted);
    let mut embedded = IntMatrix::zero(q.sizes[1], mu_cycles.cols());
    for col in 0..mu_cycles.cols() {
        for (row, &c) in mu1.iter().enumerate() {
            let v = mu_cycles.get(row, col).clone();
            if !v.is_zero() {
                embedded.set(c, col, v);
            }
        }
    }
    let gens = b2.hstack(&embedded);
    let kernel = exactalg::lattice_quotient(&gens, &b2);
    let kernel_mod_odd = kernel.modulo_odd_torsion();

    // Relative connecting map on twisted relative degree-2 cycles.
    let r_tw = bc.relative_quotient_chain(Parity::Twisted);
    let r_un = bc.relative_quotient_chain(Parity::Untwisted);
    let reps2 = bc.complex.orbit_reps(2).to_vec();
    let mu2: BTreeSet<usize> = bc.handle_rep_positions(2).into_iter().collect();
    let kept2: Vec<usize> = (0..reps2.len()).filter(|k| !mu2.contains(k)).collect();
    let reps1 = bc.complex.orbit_reps(1).to_vec();
    let mu1set: BTreeSet<usize> = bc.handle_rep_positions(1).into_iter().collect();
    let kept1: Vec<usize> = (0..reps1.len()).filter(|k| !mu1set.contains(k)).collect();
    let cycles = exactalg::kernel_basis(&r_tw.boundary_from(2));
    let mut relative_cap_trivial = true;
    for col in 0..cycles.cols() {
        // Lift to a chain on representative cells upstairs, extended by zero.
        let mut full = vec![BigInt::zero(); bc.complex.cells[2].len()];
        for (row, &k) in kept2.iter().enumerate() {
            full[reps2[k]] = cycles.get(row, col).clone();
        }
        let img = bc.complex.boundary[2].mul_vec(&full);
        // Restrict to non-locus degree-1 representatives.
        let rel: Vec<BigInt> = kept1.iter().map(|&k| img[reps1[k]].clone()).collect();
        let closed = r_un.boundary_from(1).mul_vec(&rel);
        if closed.iter().any(|x| !x.is_zero()) {
            return Err(ChordError::Internal(
                "relative connecting image is not a cycle".into(),
            ));
        }
        if exactalg::solve_integer(&r_un.boundary_from(2), &rel).is_none() {
            relative_cap_trivial = false;
        }
    }

    Ok(H1Report {
        h1,
        kernel,
        kernel_mod_odd,
        relative_cap_trivial,
    })
}

// ---------------------------------------------------------------------------
// Singular knot diagrams and the evaluator
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KnotEvent {
    /// Passage through a chord vertex (double point), by chord id.
    Double(usize),
    /// An ordinary crossing with its over/under flag and sign.
    Crossing { id: usize, over: bool, sign: i8 },
}

/// A closed walk recording double-point passages and ordinary crossings in
/// circle order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SingularKnotDiagram {
    pub events: Vec<KnotEvent>,
}

impl SingularKnotDiagram {
    /// The diagram consisting only of the chord passages of `theta`.
    pub fn crossingless(theta: &ChordDiagram) -> SingularKnotDiagram {
        SingularKnotDiagram {
            events: theta.word().iter().map(|&c| KnotEvent::Double(c)).collect(),
        }
    }

    /// Checks the chord pattern against `theta` and returns, per ordinary
    /// crossing, `(under_arc, over_arc, sign)`.
    fn crossings_by_arc(
        &self,
        theta: &ChordDiagram,
    ) -> Result<BTreeMap<usize, (usize, usize, i8)>, ChordError> {
        let word: Vec<usize> = self
            .events
            .iter()
            .filter_map(|e| match e {
                KnotEvent::Double(c) => Some(*c),
                _ => None,
            })
            .collect();
        let induced = ChordDiagram::from_word(&word).map_err(|_| ChordError::DiagramMismatch)?;
        if induced.word() != theta.word() {
            return Err(ChordError::DiagramMismatch);
        }
        let n = theta.arc_count();
        // Current arc: after the i-th chord passage we are on arc i; before
        // the first we are on the last arc.
        let mut arc = n - 1;
        let mut passes = 0usize;
        let mut seen: BTreeMap<usize, Vec<(bool, i8, usize)>> = BTreeMap::new();
        for e in &self.events {
            match e {
                KnotEvent::Double(_) => {
                    arc = passes;
                    passes += 1;
                }
                KnotEvent::Crossing { id, over, sign } => {
                    seen.entry(*id).or_default().push((*over, *sign, arc));
                }
            }
        }
        let mut out = BTreeMap::new();
        for (id, visits) in seen {
            if visits.len() != 2 {
                return Err(ChordError::BadCrossing(id));
            }
            let (a, b) = (&visits[0], &visits[1]);
            if a.0 == b.0 || a.1 != b.1 {
                return Err(ChordError::BadCrossing(id));
            }
            let (under, over) = if a.0 { (b, a) } else { (a, b) };
            out.insert(id, (under.2, over.2, a.1));
        }
        Ok(out)
    }
}

/// Evaluates an arrow formula on a singular knot diagram: each crossing with
/// understrand on arc C and overstrand on arc D contributes its sign times
/// the (C, D) coefficient; doubled formulas have that contribution halved.
pub fn evaluate_arrow_formula(
    theta: &ChordDiagram,
    diagram: &SingularKnotDiagram,
    formula: &ArrowFormula,
) -> Result<BigRational, ChordError> {
    if formula.arcs != theta.arc_count() {
        return Err(ChordError::DiagramMismatch);
    }
    let crossings = diagram.crossings_by_arc(theta)?;
    let mut total = BigInt::zero();
    for (_, (under, over, sign)) in crossings {
        total += BigInt::from(sign) * formula.coefficient(under, over);
    }
    let divisor = if formula.doubled { 2 } else { 1 };
    Ok(BigRational::new(total, BigInt::from(divisor))
        + BigRational::from_integer(formula.constant.clone()))
}

/// A crossing-change pair localized on the arcs `(c, d)`: the first diagram
/// has an extra positive crossing with understrand on arc `c` and overstrand
/// on arc `d`; the second the changed crossing (strands and sign swapped). The
/// evaluation difference of any formula across the pair is
/// `coefficient(c, d) + coefficient(d, c)` (halved when doubled), i.e. the
/// formula's derivative at the unordered pair.
pub fn crossing_change_pair(
    theta: &ChordDiagram,
    c: usize,
    d: usize,
) -> (SingularKnotDiagram, SingularKnotDiagram) {
    let build = |under_arc: usize, over_arc: usize, sign: i8| -> SingularKnotDiagram {
        let mut events = Vec::new();
        // Arc i starts at circle position i, so a crossing on arc i goes
        // right after the passage at position i.
        for (i, &chord) in theta.word().iter().enumerate() {
            events.push(KnotEvent::Double(chord));
            if under_arc == i {
                events.push(KnotEvent::Crossing { id: 0, over: false, sign });
            }
            if over_arc == i {
                events.push(KnotEvent::Crossing { id: 0, over: true, sign });
            }
        }
        SingularKnotDiagram { events }
    };
    (build(c, d, 1), build(d, c, -1))
}

/// The evaluator-derivative of a formula at the unordered arc pair `{c, d}`.
pub fn formula_derivative(
    theta: &ChordDiagram,
    formula: &ArrowFormula,
    c: usize,
    d: usize,
) -> Result<BigRational, ChordError> {
    let (plus, minus) = crossing_change_pair(theta, c, d);
    Ok(evaluate_arrow_formula(theta, &plus, formula)?
        - evaluate_arrow_formula(theta, &minus, formula)?)
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

/// All chord diagrams with m chords (perfect matchings on 2m positions).
pub fn all_diagrams(m: usize) -> Vec<ChordDiagram> {
    fn matchings(free: &mut Vec<usize>, word: &mut Vec<Option<usize>>, next: usize, out: &mut Vec<Vec<usize>>) {
        let Some(&p) = free.first() else {
            out.push(word.iter().map(|x| x.unwrap()).collect());
            return;
        };
        let others: Vec<usize> = free[1..].to_vec();
        for &q in &others {
            let mut rest: Vec<usize> = free.iter().copied().filter(|&x| x != p && x != q).collect();
            word[p] = Some(next);
            word[q] = Some(next);
            matchings(&mut rest, word, next + 1, out);
            word[p] = None;
            word[q] = None;
        }
    }
    let mut out = Vec::new();
    let mut free: Vec<usize> = (0..2 * m).collect();
    let mut word = vec![None; 2 * m];
    matchings(&mut free, &mut word, 0, &mut out);
    out.into_iter()
        .map(|w| ChordDiagram::from_word(&w).expect("perfect matching"))
        .collect()
}

/// Order of a lifted class's degree: convenience for reports.
pub fn class_is_trivial(
    bc: &BlownUpComplex,
    class: &TwistedClass,
) -> Result<bool, ChordError> {
    Ok(bc.complex.is_trivial_class(class)?)
}

pub use crate::exactalg::ClassOrder as ChordClassOrder;

#[cfg(test)]
mod tests {
    use super::*;

    fn diagram(s: &str) -> ChordDiagram {
        parse_diagram(s).unwrap()
    }

    #[test]
    fn parsing_and_arcs() {
        let t = diagram("1 2 1 2");
        assert_eq!(t.chord_count(), 2);
        assert_eq!(t.arc_count(), 4);
        assert_eq!(t.word(), &[0, 1, 0, 1]);
        let t = diagram("1 1 2 2");
        assert_eq!(t.chord_count(), 2);
        assert!(parse_diagram("1 2 1").is_err());
        assert!(parse_diagram("").is_err() || parse_diagram("").unwrap().chord_count() == 0);
    }

    #[test]
    fn interlacement_components() {
        assert_eq!(interlacement(&diagram("1 2 1 2")), vec![(0, 1)]);
        assert_eq!(irreducible_factors(&diagram("1 2 1 2")).0, 1);
        assert!(interlacement(&diagram("1 1 2 2")).is_empty());
        assert_eq!(irreducible_factors(&diagram("1 1 2 2")).0, 2);
        let t = diagram("1 2 3 1 2 3");
        assert_eq!(interlacement(&t).len(), 3, "triangle");
        assert_eq!(irreducible_factors(&t).0, 1);
    }

    #[test]
    fn config_space_builds_and_checks() {
        assert!(matches!(
            ChordDiagram::from_word::<usize>(&[]).and_then(|t| build_config_space(&t)),
            Err(ChordError::Empty)
        ));
        for s in ["1 1", "1 2 1 2", "1 1 2 2", "1 2 3 1 2 3"] {
            let bc = build_config_space(&diagram(s)).unwrap();
            // Construction validates the involution and boundary; spot-check
            // cell counts for one chord: 8 vertices, 20 edges, 10 faces.
            if s == "1 1" {
                assert_eq!(bc.complex.cells[0].len(), 8);
                assert_eq!(bc.complex.cells[1].len(), 20);
                assert_eq!(bc.complex.cells[2].len(), 10);
            }
        }
    }

    #[test]
    fn gamma1_rank_examples() {
        assert_eq!(gamma1_rank(&diagram("1 2 1 2")).unwrap(), 2);
        assert_eq!(gamma1_rank(&diagram("1 1 2 2")).unwrap(), 3);
        assert_eq!(gamma1_rank(&diagram("1 2 3 1 2 3")).unwrap(), 4);
    }

    #[test]
    fn gamma1_rank_small_sweep() {
        for m in 1..=3 {
            for t in all_diagrams(m) {
                // gamma1_rank errors if the closed form fails.
                gamma1_rank(&t).unwrap();
            }
        }
    }

    #[test]
    fn derivative_validation() {
        let t = diagram("1 2 1 2");
        let bc = build_config_space(&t).unwrap();
        let zero = DerivativeData::zero(4);
        let class = validate_derivative(&bc, &zero).unwrap();
        assert!(class.coeffs.iter().all(|c| c.is_zero()));
        let mut bad = DerivativeData::zero(4);
        bad.set(1, 1, BigInt::one()).unwrap();
        assert!(matches!(
            validate_derivative(&bc, &bad),
            Err(ChordError::OneTerm(1))
        ));
        let mut partial = DerivativeData::zero(4);
        partial.set(0, 1, BigInt::one()).unwrap();
        assert!(matches!(
            validate_derivative(&bc, &partial),
            Err(ChordError::FourTerm(_))
        ));
    }

    fn manturov_data(s: &str) -> (BlownUpComplex, Vec<DerivativeData>) {
        let t = diagram(s);
        let bc = build_config_space(&t).unwrap();
        let pairs = manturov_pairs(&t);
        let data = pairs
            .iter()
            .map(|(a, b)| v_ab_derivative(&t, a, b).unwrap())
            .collect();
        (bc, data)
    }

    #[test]
    fn manturov_pair_search() {
        assert!(manturov_pairs(&diagram("1 1 2 2")).is_empty());
        let pairs = manturov_pairs(&diagram("1 2 1 2"));
        assert_eq!(pairs.len(), 2, "two essentially distinct pairs");
    }

    #[test]
    fn linking_derivatives_are_valid() {
        let (bc, data) = manturov_data("1 2 1 2");
        assert_eq!(data.len(), 2);
        for d in &data {
            validate_derivative(&bc, d).unwrap();
            let chain = lift_chain(&bc, d).unwrap();
            assert!(chain.iter().any(|c| !c.is_zero()));
        }
    }

    #[test]
    fn lift_of_zero_is_zero_and_skew() {
        let t = diagram("1 2 1 2");
        let bc = build_config_space(&t).unwrap();
        let chain = lift_chain(&bc, &DerivativeData::zero(4)).unwrap();
        assert!(chain.iter().all(|c| c.is_zero()));
        // Skew-invariance of a nonzero lift is asserted inside lift_chain.
    }

    #[test]
    fn excision_oracle_small() {
        for m in 1..=3 {
            for t in all_diagrams(m) {
                let bc = build_config_space(&t).unwrap();
                let relative = bc.relative_to_handles().homology(2, Coefficients::Integral);
                let grid = bc.grid.chain.homology(2, Coefficients::Integral);
                assert_eq!(relative, grid, "excision for {:?}", t.word());
            }
        }
    }

    #[test]
    fn example_machinery_on_the_interleaved_two_chord_diagram() {
        let (bc, data) = manturov_data("1 2 1 2");
        // Each linking invariant alone obstructs an integral formula.
        for d in &data {
            assert_eq!(propto(&bc, d).unwrap(), 1);
            let obstruction = arrow_formula_obstruction(&bc, d).unwrap();
            assert!(!bc.complex.is_trivial_class(&obstruction).unwrap());
            assert!(integral_arrow_formula(&bc, d).unwrap().is_none());
        }
        // Their sum admits one.
        let sum = data[0].add(&data[1]).unwrap();
        assert_eq!(propto(&bc, &sum).unwrap(), 0);
        let obstruction = arrow_formula_obstruction(&bc, &sum).unwrap();
        assert!(bc.complex.is_trivial_class(&obstruction).unwrap());
        let formula = integral_arrow_formula(&bc, &sum).unwrap().expect("formula");
        // The evaluator-derivative of the formula reproduces the data.
        let t = &bc.diagram;
        for c in 0..4 {
            for d in c..4 {
                assert_eq!(
                    formula_derivative(t, &formula, c, d).unwrap(),
                    BigRational::from_integer(sum.get(c, d)),
                    "derivative at {{{}, {}}}",
                    c,
                    d
                );
            }
        }
    }

    #[test]
    fn half_integer_formula_always_works() {
        let (bc, data) = manturov_data("1 2 1 2");
        let t = &bc.diagram;
        let f = half_integer_formula(&bc, &data[0]).unwrap();
        assert!(f.doubled);
        for c in 0..4 {
            for d in c..4 {
                assert_eq!(
                    formula_derivative(t, &f, c, d).unwrap(),
                    BigRational::from_integer(data[0].get(c, d))
                );
            }
        }
    }

    #[test]
    fn planar_diagrams_admit_integral_formulas() {
        let t = diagram("1 1 2 2");
        let bc = build_config_space(&t).unwrap();
        for basis in type_one_basis(&bc) {
            assert_eq!(propto(&bc, &basis).unwrap(), 0);
            assert!(integral_arrow_formula(&bc, &basis).unwrap().is_some());
        }
    }

    #[test]
    fn planarity_three_ways() {
        assert!(planarity(&diagram("1 1")).unwrap().planar);
        assert!(!planarity(&diagram("1 2 1 2")).unwrap().planar);
        // Exhaustive small sweep; disagreement raises an internal error.
        for m in 1..=3 {
            for t in all_diagrams(m) {
                planarity(&t).unwrap();
            }
        }
    }

    #[test]
    fn h1_kernel_structure() {
        let planar = h1_structure(&diagram("1 1")).unwrap();
        assert_eq!(planar.kernel_mod_odd, AbelianGroup::free(1));
        assert!(planar.relative_cap_trivial);
        let knotted = h1_structure(&diagram("1 2 1 2")).unwrap();
        assert_eq!(knotted.kernel_mod_odd, AbelianGroup::cyclic(2));
        for m in 1..=2 {
            for t in all_diagrams(m) {
                assert!(h1_structure(&t).unwrap().relative_cap_trivial);
            }
        }
    }

    #[test]
    fn evaluator_basics() {
        let t = diagram("1 2 1 2");
        let bc = build_config_space(&t).unwrap();
        let crossingless = SingularKnotDiagram::crossingless(&t);
        let mut f = ArrowFormula::zero(4);
        f.constant = BigInt::from(7);
        assert_eq!(
            evaluate_arrow_formula(&t, &crossingless, &f).unwrap(),
            BigRational::from_integer(BigInt::from(7))
        );
        let zero = ArrowFormula::zero(4);
        assert!(evaluate_arrow_formula(&t, &crossingless, &zero)
            .unwrap()
            .is_zero());
        // Mismatched chord structure is rejected.
        let other = SingularKnotDiagram::crossingless(&diagram("1 1 2 2"));
        assert!(matches!(
            evaluate_arrow_formula(&t, &other, &zero),
            Err(ChordError::DiagramMismatch)
        ));
        let _ = bc;
    }

    #[test]
    fn integral_vs_doubled_difference_has_zero_derivative() {
        let (bc, data) = manturov_data("1 2 1 2");
        let sum = data[0].add(&data[1]).unwrap();
        let t = &bc.diagram;
        let integral = integral_arrow_formula(&bc, &sum).unwrap().unwrap();
        let doubled = half_integer_formula(&bc, &sum).unwrap();
        // Twice the integral formula minus the doubled one, read on raw
        // coefficients, is a formula with zero derivative at every pair:
        // it evaluates to a degree-0 invariant.
        let mut diff = ArrowFormula::zero(4);
        for c in 0..4 {
            for d in 0..4 {
                if c != d {
                    let v = BigInt::from(2) * integral.coefficient(c, d)
                        - doubled.coefficient(c, d);
                    if !v.is_zero() {
                        diff.coeffs.insert((c, d), v);
                    }
                }
            }
        }
        for c in 0..4 {
            for d in c..4 {
                assert!(formula_derivative(t, &diff, c, d).unwrap().is_zero());
            }
        }
        // And per diagram, its evaluation is exactly twice the discrepancy
        // between the two formulas.
        let (p, _) = crossing_change_pair(t, 0, 2);
        let lhs = evaluate_arrow_formula(t, &p, &diff).unwrap();
        let rhs = (evaluate_arrow_formula(t, &p, &integral).unwrap()
            - evaluate_arrow_formula(t, &p, &doubled).unwrap())
            * BigRational::from_integer(BigInt::from(2));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn v_ab_rejects_shared_edges() {
        let t = diagram("1 2 1 2");
        let g = t.quotient_graph();
        let trails = closed_trails(&g);
        assert!(!trails.is_empty());
        let a = &trails[0];
        assert!(matches!(
            v_ab_derivative(&t, a, a),
            Err(ChordError::SharedEdge)
        ));
    }

    #[test]
    fn disjoint_cycles_without_common_vertex() {
        // In the diagram with two unlinked chords, each chord carries loop
        // trails; the two loops at distinct chords share nothing.
        let t = diagram("1 1 2 2");
        let g = t.quotient_graph();
        let trails = closed_trails(&g);
        let a = trails
            .iter()
            .find(|c| c.passages.keys().all(|&v| v == 0))
            .expect("loop at chord 0");
        let b = trails
            .iter()
            .find(|c| c.passages.keys().all(|&v| v == 1))
            .expect("loop at chord 1");
        let data = v_ab_derivative(&t, a, b).unwrap();
        let bc = build_config_space(&t).unwrap();
        validate_derivative(&bc, &data).unwrap();
    }

    #[test]
    fn diagram_enumeration_counts() {
        assert_eq!(all_diagrams(1).len(), 1);
        assert_eq!(all_diagrams(2).len(), 3);
        assert_eq!(all_diagrams(3).len(), 15);
        assert_eq!(all_diagrams(4).len(), 105);
    }
}
