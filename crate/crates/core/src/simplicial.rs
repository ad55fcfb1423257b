//! Simplicial complexes and their (co)homology.
//!
//! Simplices are strictly increasing vertex tuples; the sorted order is the
//! positive orientation. Complexes are stored downward closed with
//! deterministic (dimension, lexicographic) bases, so boundary matrices and
//! everything derived from them are reproducible.

use crate::exactalg::{self, AbelianGroup, IntMatrix};
use num_bigint::BigInt;
use num_traits::One;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimplicialError {
    #[error("vertex tuple is not strictly increasing: {0:?}")]
    NotSorted(Vec<u32>),
    #[error("empty simplex")]
    Empty,
    #[error("vertex sets are not disjoint (shared vertex {0})")]
    NotDisjoint(u32),
    #[error("simplex {0} is not in the complex")]
    MissingSimplex(String),
    #[error("subcomplex contains a simplex not in the ambient complex: {0}")]
    NotSubcomplex(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A simplex: strictly increasing tuple of vertex labels.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Simplex(Vec<u32>);

impl Simplex {
    pub fn new(mut vertices: Vec<u32>) -> Result<Self, SimplicialError> {
        if vertices.is_empty() {
            return Err(SimplicialError::Empty);
        }
        let orig = vertices.clone();
        vertices.dedup();
        if vertices.len() != orig.len() || !vertices.windows(2).all(|w| w[0] < w[1]) {
            return Err(SimplicialError::NotSorted(orig));
        }
        Ok(Simplex(vertices))
    }

    /// Sorts the vertices; fails only on duplicates.
    pub fn from_unsorted(mut vertices: Vec<u32>) -> Result<Self, SimplicialError> {
        vertices.sort_unstable();
        let before = vertices.len();
        vertices.dedup();
        if vertices.len() != before {
            return Err(SimplicialError::NotSorted(vertices));
        }
        Simplex::new(vertices)
    }

    pub fn vertex(v: u32) -> Self {
        Simplex(vec![v])
    }

    pub fn dim(&self) -> usize {
        self.0.len() - 1
    }

    pub fn vertices(&self) -> &[u32] {
        &self.0
    }

    /// Codimension-one faces with their boundary signs (-1)^i.
    pub fn faces(&self) -> Vec<(Simplex, i64)> {
        if self.0.len() == 1 {
            return vec![];
        }
        let mut out = Vec::with_capacity(self.0.len());
        for i in 0..self.0.len() {
            let mut v = self.0.clone();
            v.remove(i);
            let sign = if i % 2 == 0 { 1 } else { -1 };
            out.push((Simplex(v), sign));
        }
        out
    }

    pub fn is_face_of(&self, other: &Simplex) -> bool {
        let mut it = other.0.iter();
        self.0.iter().all(|v| it.any(|w| w == v))
    }

    pub fn disjoint_from(&self, other: &Simplex) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }

    /// Union of disjoint vertex sets.
    pub fn join(&self, other: &Simplex) -> Result<Simplex, SimplicialError> {
        if let Some(v) = self.0.iter().find(|v| other.0.contains(v)) {
            return Err(SimplicialError::NotDisjoint(*v));
        }
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        v.sort_unstable();
        Ok(Simplex(v))
    }

    pub fn all_faces(&self) -> Vec<Simplex> {
        let n = self.0.len();
        let mut out = Vec::new();
        for mask in 1u32..(1 << n) {
            let v: Vec<u32> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| self.0[i]).collect();
            out.push(Simplex(v));
        }
        out
    }
}

impl fmt::Debug for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}", v)?;
        }
        write!(f, ">")
    }
}

impl fmt::Display for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Finite simplicial complex, downward closed, with deterministic bases.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SimplicialComplex {
    /// dims[d] = sorted simplices of dimension d.
    dims: Vec<Vec<Simplex>>,
}

impl SimplicialComplex {
    pub fn empty() -> Self {
        SimplicialComplex { dims: vec![] }
    }

    /// Downward closure of the given facets.
    pub fn from_facets(facets: &[Simplex]) -> Self {
        let mut all: BTreeSet<Simplex> = BTreeSet::new();
        for f in facets {
            for face in f.all_faces() {
                all.insert(face);
            }
        }
        Self::from_closed_set(all)
    }

    pub(crate) fn from_closed_set(all: BTreeSet<Simplex>) -> Self {
        let maxdim = all.iter().map(|s| s.dim()).max();
        let mut dims = vec![Vec::new(); maxdim.map_or(0, |d| d + 1)];
        for s in all {
            dims[s.dim()].push(s);
        }
        for d in &mut dims {
            d.sort();
        }
        SimplicialComplex { dims }
    }

    /// Dimension; empty complex reports -1.
    pub fn dim(&self) -> i64 {
        self.dims.len() as i64 - 1
    }

    pub fn simplices(&self, d: usize) -> &[Simplex] {
        static EMPTY: &[Simplex] = &[];
        self.dims.get(d).map_or(EMPTY, |v| v.as_slice())
    }

    pub fn all_simplices(&self) -> impl Iterator<Item = &Simplex> {
        self.dims.iter().flatten()
    }

    pub fn vertices(&self) -> Vec<u32> {
        self.simplices(0).iter().map(|s| s.vertices()[0]).collect()
    }

    pub fn contains(&self, s: &Simplex) -> bool {
        self.dims
            .get(s.dim())
            .map_or(false, |v| v.binary_search(s).is_ok())
    }

    pub fn index_of(&self, s: &Simplex) -> Option<usize> {
        self.dims.get(s.dim()).and_then(|v| v.binary_search(s).ok())
    }

    pub fn is_subcomplex_of(&self, other: &SimplicialComplex) -> bool {
        self.all_simplices().all(|s| other.contains(s))
    }

    pub fn size(&self) -> usize {
        self.dims.iter().map(|v| v.len()).sum()
    }

    /// Simplicial chain complex with the standard boundary.
    pub fn chain_complex(&self) -> ChainComplex {
        let mut boundary = Vec::new();
        for d in 0..self.dims.len() {
            let rows = if d == 0 { 0 } else { self.dims[d - 1].len() };
            let mut m = IntMatrix::zero(rows, self.dims[d].len());
            if d > 0 {
                for (j, s) in self.dims[d].iter().enumerate() {
                    for (face, sign) in s.faces() {
                        let i = self.index_of(&face).expect("complex downward closed");
                        m.set(i, j, BigInt::from(sign));
                    }
                }
            }
            boundary.push(m);
        }
        ChainComplex {
            sizes: self.dims.iter().map(|v| v.len()).collect(),
            boundary,
        }
    }

    pub fn homology(&self, d: i64, coeffs: Coefficients) -> AbelianGroup {
        self.chain_complex().homology(d, coeffs)
    }

    pub fn cohomology(&self, d: i64, coeffs: Coefficients) -> AbelianGroup {
        self.chain_complex().cohomology(d, coeffs)
    }

    /// Reduced cohomology, defined via the augmented complex. Degree -1 is
    /// meaningful: it is Z for the empty complex and 0 otherwise.
    pub fn reduced_cohomology(&self, d: i64, coeffs: Coefficients) -> AbelianGroup {
        self.chain_complex().augmented().cohomology(d + 1, coeffs)
    }

    pub fn reduced_homology(&self, d: i64, coeffs: Coefficients) -> AbelianGroup {
        self.chain_complex().augmented().homology(d + 1, coeffs)
    }

    /// Chain complex of the pair (self, sub): bases are the simplices outside
    /// the subcomplex.
    pub fn relative_chain_complex(
        &self,
        sub: &SimplicialComplex,
    ) -> Result<ChainComplex, SimplicialError> {
        if !sub.is_subcomplex_of(self) {
            let bad = sub
                .all_simplices()
                .find(|s| !self.contains(s))
                .expect("witness exists");
            return Err(SimplicialError::NotSubcomplex(bad.to_string()));
        }
        let mut bases: Vec<Vec<&Simplex>> = Vec::new();
        for d in 0..self.dims.len() {
            bases.push(
                self.dims[d]
                    .iter()
                    .filter(|s| !sub.contains(s))
                    .collect(),
            );
        }
        let index: Vec<BTreeMap<&Simplex, usize>> = bases
            .iter()
            .map(|b| b.iter().enumerate().map(|(i, s)| (*s, i)).collect())
            .collect();
        let mut boundary = Vec::new();
        for d in 0..bases.len() {
            let rows = if d == 0 { 0 } else { bases[d - 1].len() };
            let mut m = IntMatrix::zero(rows, bases[d].len());
            if d > 0 {
                for (j, s) in bases[d].iter().enumerate() {
                    for (face, sign) in s.faces() {
                        if let Some(&i) = index[d - 1].get(&face) {
                            m.set(i, j, BigInt::from(sign));
                        }
                    }
                }
            }
            boundary.push(m);
        }
        Ok(ChainComplex {
            sizes: bases.iter().map(|b| b.len()).collect(),
            boundary,
        })
    }

    pub fn relative_cohomology(
        &self,
        sub: &SimplicialComplex,
        d: i64,
        coeffs: Coefficients,
    ) -> Result<AbelianGroup, SimplicialError> {
        Ok(self.relative_chain_complex(sub)?.cohomology(d, coeffs))
    }

    pub fn relative_homology(
        &self,
        sub: &SimplicialComplex,
        d: i64,
        coeffs: Coefficients,
    ) -> Result<AbelianGroup, SimplicialError> {
        Ok(self.relative_chain_complex(sub)?.homology(d, coeffs))
    }

    /// Link of a simplex: all simplices disjoint from it whose union with it
    /// is in the complex.
    pub fn link(&self, s: &Simplex) -> Result<SimplicialComplex, SimplicialError> {
        if !self.contains(s) {
            return Err(SimplicialError::MissingSimplex(s.to_string()));
        }
        let mut all = BTreeSet::new();
        for t in self.all_simplices() {
            if t.disjoint_from(s) {
                let u = t.join(s).expect("disjoint");
                if self.contains(&u) {
                    all.insert(t.clone());
                }
            }
        }
        Ok(Self::from_closed_set(all))
    }

    /// All simplices vertex-disjoint from the given one.
    pub fn disjoint_complement(&self, s: &Simplex) -> SimplicialComplex {
        let all: BTreeSet<Simplex> = self
            .all_simplices()
            .filter(|t| t.disjoint_from(s))
            .cloned()
            .collect();
        Self::from_closed_set(all)
    }

    /// First barycentric subdivision. Returns the subdivision together with
    /// the simplex of the original complex owning each new vertex label.
    pub fn barycentric_subdivision(&self) -> (SimplicialComplex, Vec<Simplex>) {
        let owners: Vec<Simplex> = self.all_simplices().cloned().collect();
        let index: BTreeMap<&Simplex, u32> = owners
            .iter()
            .enumerate()
            .map(|(i, s)| (s, i as u32))
            .collect();
        // Chains under strict face inclusion.
        let mut chains: Vec<Vec<u32>> = Vec::new();
        let mut stack: Vec<(usize, Vec<u32>)> = Vec::new();
        for (i, s) in owners.iter().enumerate() {
            let _ = s;
            stack.push((i, vec![index[&owners[i]]]));
        }
        while let Some((top, chain)) = stack.pop() {
            chains.push(chain.clone());
            for (j, t) in owners.iter().enumerate() {
                if t.dim() > owners[top].dim() && owners[top].is_face_of(t) {
                    let mut c = chain.clone();
                    c.push(index[t]);
                    stack.push((j, c));
                }
            }
        }
        let all: BTreeSet<Simplex> = chains
            .into_iter()
            .map(|c| Simplex::from_unsorted(c).expect("chain labels distinct"))
            .collect();
        (Self::from_closed_set(all), owners)
    }

    /// Subcomplex of the barycentric subdivision spanned by barycenters of
    /// simplices that do not contain the given one; deformation retract of
    /// the complement of a point interior to it.
    pub fn puncture_complement(
        &self,
        s: &Simplex,
    ) -> Result<SimplicialComplex, SimplicialError> {
        if !self.contains(s) {
            return Err(SimplicialError::MissingSimplex(s.to_string()));
        }
        let (sd, owners) = self.barycentric_subdivision();
        let keep: Vec<bool> = owners.iter().map(|t| !s.is_face_of(t)).collect();
        let all: BTreeSet<Simplex> = sd
            .all_simplices()
            .filter(|c| c.vertices().iter().all(|&v| keep[v as usize]))
            .cloned()
            .collect();
        Ok(Self::from_closed_set(all))
    }

    /// Cone with a fresh apex (one past the largest vertex label).
    pub fn cone(&self) -> SimplicialComplex {
        let apex = self
            .vertices()
            .iter()
            .max()
            .map_or(0, |m| m + 1);
        let mut all: BTreeSet<Simplex> = self.all_simplices().cloned().collect();
        all.insert(Simplex::vertex(apex));
        for s in self.all_simplices() {
            let mut v = s.vertices().to_vec();
            v.push(apex);
            all.insert(Simplex::new(v).expect("apex is fresh"));
        }
        Self::from_closed_set(all)
    }

    pub fn apex_label(&self) -> u32 {
        self.vertices().iter().max().map_or(0, |m| m + 1)
    }

    /// Join of two complexes on disjoint vertex sets.
    pub fn join(&self, other: &SimplicialComplex) -> Result<SimplicialComplex, SimplicialError> {
        for v in self.vertices() {
            if other.vertices().contains(&v) {
                return Err(SimplicialError::NotDisjoint(v));
            }
        }
        let mut all: BTreeSet<Simplex> = self.all_simplices().cloned().collect();
        all.extend(other.all_simplices().cloned());
        for s in self.all_simplices() {
            for t in other.all_simplices() {
                all.insert(s.join(t)?);
            }
        }
        Ok(Self::from_closed_set(all))
    }

    /// n-skeleton of the simplex on vertices 0..=n_vertices-1... specifically
    /// `skeleton(n, k)` is the k-skeleton of the n-simplex (vertices 0..=n).
    pub fn skeleton(n: u32, k: usize) -> SimplicialComplex {
        let verts: Vec<u32> = (0..=n).collect();
        let mut all = BTreeSet::new();
        // All subsets of size <= k+1.
        fn rec(verts: &[u32], start: usize, cur: &mut Vec<u32>, maxlen: usize, all: &mut BTreeSet<Simplex>) {
            if !cur.is_empty() {
                all.insert(Simplex::new(cur.clone()).expect("increasing"));
            }
            if cur.len() == maxlen {
                return;
            }
            for i in start..verts.len() {
                cur.push(verts[i]);
                rec(verts, i + 1, cur, maxlen, all);
                cur.pop();
            }
        }
        rec(&verts, 0, &mut Vec::new(), k + 1, &mut all);
        Self::from_closed_set(all)
    }

    /// Parses the facet-per-line text format: whitespace separated vertex
    /// tokens, `#` starts a comment. Returns the complex and the label table
    /// (token for each internal vertex id).
    pub fn parse(text: &str) -> Result<(SimplicialComplex, Vec<String>), SimplicialError> {
        let mut token_set: BTreeSet<String> = BTreeSet::new();
        let mut facet_tokens: Vec<(usize, Vec<String>)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let toks: Vec<String> = line.split_whitespace().map(|s| s.to_string()).collect();
            for t in &toks {
                token_set.insert(t.clone());
            }
            facet_tokens.push((lineno + 1, toks));
        }
        let labels: Vec<String> = token_set.into_iter().collect();
        let id: BTreeMap<&str, u32> = labels
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i as u32))
            .collect();
        let mut facets = Vec::new();
        for (lineno, toks) in facet_tokens {
            let ids: Vec<u32> = toks.iter().map(|t| id[t.as_str()]).collect();
            let s = Simplex::from_unsorted(ids).map_err(|_| SimplicialError::Parse {
                line: lineno,
                msg: format!("repeated vertex in facet: {}", toks.join(" ")),
            })?;
            facets.push(s);
        }
        Ok((SimplicialComplex::from_facets(&facets), labels))
    }
}

/// Coefficient ring for (co)homology computations.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Coefficients {
    Integral,
    Mod2,
}

/// A chain complex of free abelian groups with explicit boundary matrices.
/// `boundary[d]` maps degree d to degree d-1; `boundary[0]` has zero rows.
#[derive(Clone, Debug)]
pub struct ChainComplex {
    pub sizes: Vec<usize>,
    pub boundary: Vec<IntMatrix>,
}

impl ChainComplex {
    pub fn dim(&self) -> i64 {
        self.sizes.len() as i64 - 1
    }

    pub fn size(&self, d: i64) -> usize {
        if d < 0 {
            return 0;
        }
        self.sizes.get(d as usize).copied().unwrap_or(0)
    }

    /// Boundary matrix out of degree d (zero-sized if out of range).
    pub fn boundary_from(&self, d: i64) -> IntMatrix {
        if d <= 0 || d as usize >= self.boundary.len() {
            let rows = self.size(d - 1);
            let cols = self.size(d);
            return IntMatrix::zero(rows, cols);
        }
        self.boundary[d as usize].clone()
    }

    /// Checks d∘d = 0.
    pub fn validate(&self) -> bool {
        for d in 1..self.boundary.len() {
            if !self.boundary[d - 1].mul(&self.boundary[d]).is_zero() {
                return false;
            }
        }
        true
    }

    /// Augmented complex: degrees shift up by one and a rank-one degree 0 is
    /// added, with the augmentation (sum of coefficients) as new boundary.
    pub fn augmented(&self) -> ChainComplex {
        let mut sizes = vec![1];
        sizes.extend_from_slice(&self.sizes);
        let mut boundary = vec![IntMatrix::zero(0, 1)];
        if !self.sizes.is_empty() {
            let mut aug = IntMatrix::zero(1, self.sizes[0]);
            for j in 0..self.sizes[0] {
                aug.set(0, j, BigInt::one());
            }
            boundary.push(aug);
            for d in 1..self.boundary.len() {
                boundary.push(self.boundary[d].clone());
            }
        }
        ChainComplex { sizes, boundary }
    }

    pub fn homology(&self, d: i64, coeffs: Coefficients) -> AbelianGroup {
        if d < 0 || self.size(d) == 0 {
            return AbelianGroup::trivial();
        }
        let b_out = self.boundary_from(d);
        let b_in = self.boundary_from(d + 1);
        subquotient(&b_in, &b_out, self.size(d), coeffs)
    }

    pub fn cohomology(&self, d: i64, coeffs: Coefficients) -> AbelianGroup {
        if d < 0 || self.size(d) == 0 {
            return AbelianGroup::trivial();
        }
        let delta_out = self.boundary_from(d + 1).transpose();
        let delta_in = self.boundary_from(d).transpose();
        subquotient(&delta_in, &delta_out, self.size(d), coeffs)
    }
}

/// Homology of  ... -> A --b_in--> B --b_out--> C -> ...  at B, where B has
/// rank `n` and im(b_in) ⊆ ker(b_out).
pub fn subquotient(
    b_in: &IntMatrix,
    b_out: &IntMatrix,
    n: usize,
    coeffs: Coefficients,
) -> AbelianGroup {
    match coeffs {
        Coefficients::Integral => {
            let free = n - exactalg::rank(b_out) - exactalg::rank(b_in);
            let orders = exactalg::invariant_factors(b_in);
            AbelianGroup::new(free, orders)
        }
        Coefficients::Mod2 => {
            let dim = n - exactalg::rank_mod2(b_out) - exactalg::rank_mod2(b_in);
            AbelianGroup::new(0, vec![BigInt::from(2); dim])
        }
    }
}
