//! Exact integer linear algebra: arbitrary-precision matrices, Smith normal
//! form with unimodular transforms, integer linear solving, cokernels and
//! orders of classes in quotient lattices.
//!
//! Everything here is deterministic: the Smith reduction picks the
//! smallest-magnitude entry (ties broken by sparsest row, then position) as
//! pivot, so repeated runs produce identical transforms.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;

static INT_ZERO: std::sync::LazyLock<BigInt> = std::sync::LazyLock::new(BigInt::zero);

/// Sparse matrix of arbitrary-precision integers, stored by rows; only
/// nonzero entries are kept, so equality and `is_zero` are structural.
#[derive(Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BTreeMap<usize, BigInt>>,
}

impl IntMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            data: vec![BTreeMap::new(); rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMatrix::zero(n, n);
        for i in 0..n {
            m.data[i].insert(i, BigInt::one());
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        let mut m = IntMatrix::zero(r, c);
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if *v != 0 {
                    m.data[i].insert(j, BigInt::from(*v));
                }
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &BigInt {
        assert!(r < self.rows && c < self.cols, "index out of range");
        self.data[r].get(&c).unwrap_or(&INT_ZERO)
    }

    /// Nonzero entries of one row as (column, value).
    pub fn row_entries(&self, r: usize) -> impl Iterator<Item = (usize, &BigInt)> {
        self.data[r].iter().map(|(&c, v)| (c, v))
    }

    pub fn set(&mut self, r: usize, c: usize, v: BigInt) {
        assert!(r < self.rows && c < self.cols, "index out of range");
        if v.is_zero() {
            self.data[r].remove(&c);
        } else {
            self.data[r].insert(c, v);
        }
    }

    pub fn add_to(&mut self, r: usize, c: usize, v: &BigInt) {
        assert!(r < self.rows && c < self.cols, "index out of range");
        if v.is_zero() {
            return;
        }
        let entry = self.data[r].entry(c).or_insert_with(BigInt::zero);
        *entry += v;
        if entry.is_zero() {
            self.data[r].remove(&c);
        }
    }

    pub fn transpose(&self) -> IntMatrix {
        let mut m = IntMatrix::zero(self.cols, self.rows);
        for r in 0..self.rows {
            for (c, v) in &self.data[r] {
                m.data[*c].insert(r, v.clone());
            }
        }
        m
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch in mul");
        let mut out = IntMatrix::zero(self.rows, other.cols);
        for r in 0..self.rows {
            for (k, a) in &self.data[r] {
                for (c, b) in &other.data[*k] {
                    out.add_to(r, *c, &(a * b));
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(self.cols, v.len(), "dimension mismatch in mul_vec");
        let mut out = vec![BigInt::zero(); self.rows];
        for r in 0..self.rows {
            for (c, a) in &self.data[r] {
                if !v[*c].is_zero() {
                    out[r] += a * &v[*c];
                }
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|row| row.is_empty())
    }

    pub fn column(&self, c: usize) -> Vec<BigInt> {
        (0..self.rows).map(|r| self.get(r, c).clone()).collect()
    }

    /// Horizontal concatenation [self | other].
    pub fn hstack(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.rows, other.rows, "dimension mismatch in hstack");
        let mut m = IntMatrix::zero(self.rows, self.cols + other.cols);
        for r in 0..self.rows {
            m.data[r] = self.data[r].clone();
            for (c, v) in &other.data[r] {
                m.data[r].insert(self.cols + c, v.clone());
            }
        }
        m
    }

    /// Vertical concatenation [self; other].
    pub fn vstack(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.cols, "dimension mismatch in vstack");
        let mut m = IntMatrix::zero(self.rows + other.rows, self.cols);
        m.data[..self.rows].clone_from_slice(&self.data);
        m.data[self.rows..].clone_from_slice(&other.data);
        m
    }

    pub fn from_columns(cols: &[Vec<BigInt>], nrows: usize) -> IntMatrix {
        let mut m = IntMatrix::zero(nrows, cols.len());
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), nrows, "column length mismatch");
            for (i, v) in col.iter().enumerate() {
                if !v.is_zero() {
                    m.data[i].insert(j, v.clone());
                }
            }
        }
        m
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "IntMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| self.get(r, c).to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

/// Finitely generated abelian group in canonical form: a free part plus
/// invariant factors, each at least 2 and dividing the next.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct AbelianGroup {
    pub free_rank: usize,
    pub torsion: Vec<BigInt>,
}

impl AbelianGroup {
    /// Builds the canonical form from an arbitrary list of cyclic orders
    /// (zeros count toward the free rank, units are dropped).
    pub fn new(free_rank: usize, orders: Vec<BigInt>) -> Self {
        let mut extra_free = 0;
        let mut factors: Vec<BigInt> = Vec::new();
        for o in orders {
            let o = o.abs();
            if o.is_zero() {
                extra_free += 1;
            } else if !o.is_one() {
                factors.push(o);
            }
        }
        let factors = chain_normalize(factors);
        AbelianGroup {
            free_rank: free_rank + extra_free,
            torsion: factors,
        }
    }

    pub fn trivial() -> Self {
        AbelianGroup {
            free_rank: 0,
            torsion: vec![],
        }
    }

    pub fn free(rank: usize) -> Self {
        AbelianGroup {
            free_rank: rank,
            torsion: vec![],
        }
    }

    pub fn cyclic(n: u64) -> Self {
        AbelianGroup::new(0, vec![BigInt::from(n)])
    }

    pub fn is_trivial(&self) -> bool {
        self.free_rank == 0 && self.torsion.is_empty()
    }

    /// Keeps only the 2-primary part of each invariant factor.
    pub fn modulo_odd_torsion(&self) -> AbelianGroup {
        let two = BigInt::from(2);
        let orders = self
            .torsion
            .iter()
            .map(|t| {
                let mut p = BigInt::one();
                let mut t = t.clone();
                while t.is_even() {
                    p *= &two;
                    t /= &two;
                }
                p
            })
            .collect();
        AbelianGroup::new(self.free_rank, orders)
    }
}

impl fmt::Display for AbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        match self.free_rank {
            0 => {}
            1 => parts.push("Z".to_string()),
            r => parts.push(format!("Z^{}", r)),
        }
        for t in &self.torsion {
            parts.push(format!("Z/{}", t));
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

/// Order of a class in the quotient by a column lattice.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ClassOrder {
    Finite(BigInt),
    Infinite,
}

impl ClassOrder {
    pub fn is_trivial(&self) -> bool {
        matches!(self, ClassOrder::Finite(k) if k.is_one())
    }
}

impl fmt::Display for ClassOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassOrder::Finite(k) => write!(f, "{}", k),
            ClassOrder::Infinite => write!(f, "infinite"),
        }
    }
}

/// Normalizes a multiset of nonzero orders into a divisibility chain with the
/// same product structure (repeated gcd/lcm exchanges).
fn chain_normalize(mut v: Vec<BigInt>) -> Vec<BigInt> {
    loop {
        let mut changed = false;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                if !(&v[j] % &v[i]).is_zero() {
                    let g = v[i].gcd(&v[j]);
                    let l = (&v[i] / &g) * &v[j];
                    v[i] = g;
                    v[j] = l;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    v.retain(|x| !x.is_one());
    v.sort();
    v
}

/// Smith decomposition a = u * d * v with u, v unimodular and d diagonal with
/// nonnegative entries forming a divisibility chain.
pub struct SnfDecomposition {
    pub u: IntMatrix,
    pub d: IntMatrix,
    pub v: IntMatrix,
    u_inv: IntMatrix,
    v_inv: IntMatrix,
    rank: usize,
}

impl SnfDecomposition {
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Diagonal entries including trailing zeros, length min(rows, cols).
    pub fn diagonal(&self) -> Vec<BigInt> {
        let n = self.d.rows().min(self.d.cols());
        (0..n).map(|i| self.d.get(i, i).clone()).collect()
    }

    /// Nonzero invariant factors d_1 | d_2 | ... (including units).
    pub fn invariant_factors(&self) -> Vec<BigInt> {
        self.diagonal().into_iter().filter(|x| !x.is_zero()).collect()
    }

    pub fn u_inverse(&self) -> &IntMatrix {
        &self.u_inv
    }

    pub fn v_inverse(&self) -> &IntMatrix {
        &self.v_inv
    }

    /// Solves a·x = b exactly over the integers.
    pub fn solve(&self, b: &[BigInt]) -> Option<Vec<BigInt>> {
        assert_eq!(b.len(), self.u.rows(), "rhs length mismatch");
        let bp = self.u_inv.mul_vec(b);
        let mut z = vec![BigInt::zero(); self.v.rows()];
        let n = self.d.rows().min(self.d.cols());
        for i in 0..n {
            let d = self.d.get(i, i);
            if d.is_zero() {
                if !bp[i].is_zero() {
                    return None;
                }
            } else {
                let (q, r) = bp[i].div_rem(d);
                if !r.is_zero() {
                    return None;
                }
                z[i] = q;
            }
        }
        for (i, bi) in bp.iter().enumerate().skip(n) {
            if !bi.is_zero() {
                return None;
            }
            let _ = i;
        }
        Some(self.v_inv.mul_vec(&z))
    }
}

// ---------------------------------------------------------------------------
// Sparse reduction engine
// ---------------------------------------------------------------------------

/// What the reduction should keep track of besides the matrix itself.
struct Tracking {
    /// Right-hand side vector; row operations are mirrored onto it.
    rhs: Option<Vec<BigInt>>,
    /// Accumulated column operations as a matrix c with x = c·z.
    cmat: Option<Vec<BTreeMap<usize, BigInt>>>,
    /// Full transform tracking for the public decomposition.
    full: Option<FullTrack>,
}

struct FullTrack {
    u: IntMatrix,
    u_inv: IntMatrix,
    v: IntMatrix,
    v_inv: IntMatrix,
}

struct Engine {
    rows: Vec<BTreeMap<usize, BigInt>>,
    row_active: Vec<bool>,
    col_active: Vec<bool>,
    track: Tracking,
    /// (row, col) of each pivot, in the order found. Pivot values live in the
    /// matrix itself.
    pivots: Vec<(usize, usize)>,
}

impl Engine {
    fn new(a: &IntMatrix, track: Tracking) -> Engine {
        let mut rows = Vec::with_capacity(a.rows());
        for r in 0..a.rows() {
            rows.push(a.row_entries(r).map(|(c, v)| (c, v.clone())).collect());
        }
        Engine {
            rows,
            row_active: vec![true; a.rows()],
            col_active: vec![true; a.cols()],
            track,
            pivots: Vec::new(),
        }
    }

    fn row_op_add(&mut self, dst: usize, src: usize, q: &BigInt) {
        // row dst -= q * row src
        if q.is_zero() {
            return;
        }
        let src_row: Vec<(usize, BigInt)> =
            self.rows[src].iter().map(|(c, v)| (*c, v.clone())).collect();
        for (c, v) in src_row {
            let delta = q * &v;
            let e = self.rows[dst].entry(c).or_insert_with(BigInt::zero);
            *e -= delta;
            if e.is_zero() {
                self.rows[dst].remove(&c);
            }
        }
        if let Some(rhs) = &mut self.track.rhs {
            let delta = q * &rhs[src];
            rhs[dst] -= delta;
        }
        if let Some(full) = &mut self.track.full {
            // u_inv rows mirror the matrix rows; u columns absorb the inverse.
            let n = full.u_inv.cols();
            for c in 0..n {
                let delta = q * full.u_inv.get(src, c);
                if !delta.is_zero() {
                    let cur = full.u_inv.get(dst, c) - delta;
                    full.u_inv.set(dst, c, cur);
                }
            }
            let m = full.u.rows();
            for r in 0..m {
                let delta = q * full.u.get(r, dst);
                if !delta.is_zero() {
                    let cur = full.u.get(r, src) + delta;
                    full.u.set(r, src, cur);
                }
            }
        }
    }

    fn row_swap(&mut self, r1: usize, r2: usize) {
        if r1 == r2 {
            return;
        }
        self.rows.swap(r1, r2);
        if let Some(rhs) = &mut self.track.rhs {
            rhs.swap(r1, r2);
        }
        if let Some(full) = &mut self.track.full {
            for c in 0..full.u_inv.cols() {
                let a = full.u_inv.get(r1, c).clone();
                let b = full.u_inv.get(r2, c).clone();
                full.u_inv.set(r1, c, b);
                full.u_inv.set(r2, c, a);
            }
            for r in 0..full.u.rows() {
                let a = full.u.get(r, r1).clone();
                let b = full.u.get(r, r2).clone();
                full.u.set(r, r1, b);
                full.u.set(r, r2, a);
            }
        }
    }

    fn row_negate(&mut self, r: usize) {
        for v in self.rows[r].values_mut() {
            *v = -v.clone();
        }
        if let Some(rhs) = &mut self.track.rhs {
            rhs[r] = -rhs[r].clone();
        }
        if let Some(full) = &mut self.track.full {
            for c in 0..full.u_inv.cols() {
                let v = -full.u_inv.get(r, c);
                full.u_inv.set(r, c, v);
            }
            for rr in 0..full.u.rows() {
                let v = -full.u.get(rr, r);
                full.u.set(rr, r, v);
            }
        }
    }

    /// col dst -= q * col src, applied to every row that has a src entry.
    fn col_op_add(&mut self, dst: usize, src: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for r in 0..self.rows.len() {
            let sv = match self.rows[r].get(&src) {
                Some(v) => v.clone(),
                None => continue,
            };
            let delta = q * &sv;
            let e = self.rows[r].entry(dst).or_insert_with(BigInt::zero);
            *e -= delta;
            if e.is_zero() {
                self.rows[r].remove(&dst);
            }
        }
        if let Some(cmat) = &mut self.track.cmat {
            for r in 0..cmat.len() {
                let sv = match cmat[r].get(&src) {
                    Some(v) => v.clone(),
                    None => continue,
                };
                let delta = q * &sv;
                let e = cmat[r].entry(dst).or_insert_with(BigInt::zero);
                *e -= delta;
                if e.is_zero() {
                    cmat[r].remove(&dst);
                }
            }
        }
        if let Some(full) = &mut self.track.full {
            for r in 0..full.v_inv.rows() {
                let delta = q * full.v_inv.get(r, src);
                if !delta.is_zero() {
                    let cur = full.v_inv.get(r, dst) - delta;
                    full.v_inv.set(r, dst, cur);
                }
            }
            for c in 0..full.v.cols() {
                let delta = q * full.v.get(dst, c);
                if !delta.is_zero() {
                    let cur = full.v.get(src, c) + delta;
                    full.v.set(src, c, cur);
                }
            }
        }
    }

    fn col_swap(&mut self, c1: usize, c2: usize) {
        if c1 == c2 {
            return;
        }
        for r in 0..self.rows.len() {
            let a = self.rows[r].remove(&c1);
            let b = self.rows[r].remove(&c2);
            if let Some(b) = b {
                self.rows[r].insert(c1, b);
            }
            if let Some(a) = a {
                self.rows[r].insert(c2, a);
            }
        }
        if let Some(cmat) = &mut self.track.cmat {
            for r in 0..cmat.len() {
                let a = cmat[r].remove(&c1);
                let b = cmat[r].remove(&c2);
                if let Some(b) = b {
                    cmat[r].insert(c1, b);
                }
                if let Some(a) = a {
                    cmat[r].insert(c2, a);
                }
            }
        }
        if let Some(full) = &mut self.track.full {
            for r in 0..full.v_inv.rows() {
                let a = full.v_inv.get(r, c1).clone();
                let b = full.v_inv.get(r, c2).clone();
                full.v_inv.set(r, c1, b);
                full.v_inv.set(r, c2, a);
            }
            for c in 0..full.v.cols() {
                let a = full.v.get(c1, c).clone();
                let b = full.v.get(c2, c).clone();
                full.v.set(c1, c, b);
                full.v.set(c2, c, a);
            }
        }
    }

    /// Smallest-magnitude entry among active rows/cols; ties broken by row
    /// sparsity, then position.
    fn find_pivot(&self) -> Option<(usize, usize)> {
        let mut best: Option<(BigInt, usize, usize, usize)> = None;
        for (r, row) in self.rows.iter().enumerate() {
            if !self.row_active[r] {
                continue;
            }
            let nnz = row.len();
            for (&c, v) in row {
                if !self.col_active[c] {
                    continue;
                }
                let a = v.abs();
                let better = match &best {
                    None => true,
                    Some((ba, bn, br, bc)) => (&a, nnz, r, c) < (ba, *bn, *br, *bc),
                };
                if better {
                    best = Some((a, nnz, r, c));
                }
            }
        }
        best.map(|(_, _, r, c)| (r, c))
    }

    /// Rows (other than `pr`) with an active-column entry at `pc`.
    fn column_rows(&self, pc: usize, pr: usize) -> Vec<usize> {
        (0..self.rows.len())
            .filter(|&r| r != pr && self.row_active[r] && self.rows[r].contains_key(&pc))
            .collect()
    }

    fn reduce(&mut self) {
        loop {
            let (mut pr, mut pc) = match self.find_pivot() {
                Some(p) => p,
                None => break,
            };
            loop {
                // Clear the pivot column with row operations.
                loop {
                    let others = self.column_rows(pc, pr);
                    if others.is_empty() {
                        break;
                    }
                    let p = self.rows[pr][&pc].clone();
                    for r in others {
                        let a = self.rows[r][&pc].clone();
                        let q = &a / &p;
                        self.row_op_add(r, pr, &q);
                    }
                    // Any nonzero remainders are strictly smaller; adopt the
                    // smallest as the new pivot row and sweep again.
                    let rem = self.column_rows(pc, pr);
                    if let Some(&r) = rem
                        .iter()
                        .min_by_key(|&&r| (self.rows[r][&pc].abs(), r))
                    {
                        if self.rows[r][&pc].abs() < self.rows[pr][&pc].abs() {
                            pr = r;
                        }
                    }
                }
                // Clear the pivot row with column operations. The pivot column
                // is clear, so these touch only row `pr`.
                let p = self.rows[pr][&pc].clone();
                let row_cols: Vec<usize> = self.rows[pr]
                    .keys()
                    .copied()
                    .filter(|&c| c != pc && self.col_active[c])
                    .collect();
                let mut leftover = None;
                for c in row_cols {
                    let a = self.rows[pr][&c].clone();
                    let q = &a / &p;
                    self.col_op_add(c, pc, &q);
                    if self.rows[pr].contains_key(&c) {
                        leftover = Some(c);
                    }
                }
                match leftover {
                    None => break,
                    Some(_) => {
                        // A remainder smaller than the pivot appeared in the
                        // row; move the pivot there and re-clear its column.
                        let best = self.rows[pr]
                            .iter()
                            .filter(|(c, _)| self.col_active[**c])
                            .min_by_key(|(c, v)| (v.abs(), **c))
                            .map(|(c, _)| *c)
                            .expect("pivot row nonempty");
                        pc = best;
                    }
                }
            }
            self.row_active[pr] = false;
            self.col_active[pc] = false;
            self.pivots.push((pr, pc));
        }
    }

    fn pivot_value(&self, i: usize) -> &BigInt {
        let (r, c) = self.pivots[i];
        &self.rows[r][&c]
    }
}

// ---------------------------------------------------------------------------
// Public operations
// ---------------------------------------------------------------------------

/// Full Smith normal form with unimodular transforms: a = u·d·v.
pub fn smith_normal_form(a: &IntMatrix) -> SnfDecomposition {
    let n = a.rows();
    let m = a.cols();
    let full = FullTrack {
        u: IntMatrix::identity(n),
        u_inv: IntMatrix::identity(n),
        v: IntMatrix::identity(m),
        v_inv: IntMatrix::identity(m),
    };
    let mut eng = Engine::new(
        a,
        Tracking {
            rhs: None,
            cmat: None,
            full: Some(full),
        },
    );
    eng.reduce();

    // Move pivots onto the leading diagonal.
    let rank = eng.pivots.len();
    for i in 0..rank {
        let (r, c) = eng.pivots[i];
        eng.row_swap(i, r);
        eng.col_swap(i, c);
        // Keep later pivot bookkeeping consistent under the swaps.
        for p in eng.pivots.iter_mut().skip(i) {
            if p.0 == i {
                p.0 = r;
            } else if p.0 == r {
                p.0 = i;
            }
            if p.1 == i {
                p.1 = c;
            } else if p.1 == c {
                p.1 = i;
            }
        }
    }
    // Positive diagonal.
    for i in 0..rank {
        if eng.rows[i].get(&i).map_or(false, |v| v.is_negative()) {
            eng.row_negate(i);
        }
    }
    // Divisibility chain: whenever d_i does not divide d_j (i < j), fold
    // column j into column i and rerun the local elimination.
    loop {
        let mut violation = None;
        'scan: for i in 0..rank {
            for j in i + 1..rank {
                let di = eng.rows[i][&i].clone();
                let dj = eng.rows[j][&j].clone();
                if !(&dj % &di).is_zero() {
                    violation = Some((i, j));
                    break 'scan;
                }
            }
        }
        let (i, j) = match violation {
            Some(x) => x,
            None => break,
        };
        let one = BigInt::one();
        eng.col_op_add(i, j, &(-&one));
        // Re-eliminate the 2x2 block {i,j} x {i,j}.
        eng.row_active[i] = true;
        eng.row_active[j] = true;
        eng.col_active[i] = true;
        eng.col_active[j] = true;
        let before = eng.pivots.len();
        eng.reduce();
        debug_assert_eq!(eng.pivots.len(), before + 2);
        eng.pivots.truncate(before);
        // The block re-reduction may leave its pivots at either position;
        // swap so the smaller (gcd) lands at (i, i).
        let vii = eng.rows[i].get(&i).cloned();
        if vii.is_none() {
            eng.row_swap(i, j);
        }
        let vii = eng.rows[i].get(&i).cloned().unwrap_or_else(BigInt::zero);
        if vii.is_zero() {
            eng.col_swap(i, j);
        }
        for k in [i, j] {
            if eng.rows[k].get(&k).map_or(false, |v| v.is_negative()) {
                eng.row_negate(k);
            }
            if eng.rows[k].get(&k).map_or(true, |v| v.is_zero()) {
                panic!("chain repair lost a pivot");
            }
        }
        let di = eng.rows[i][&i].clone();
        let dj = eng.rows[j][&j].clone();
        if di > dj {
            eng.row_swap(i, j);
            eng.col_swap(i, j);
        }
    }

    let mut d = IntMatrix::zero(n, m);
    for i in 0..rank {
        d.set(i, i, eng.rows[i][&i].clone());
    }
    let full = eng.track.full.take().expect("full tracking present");
    SnfDecomposition {
        u: full.u,
        d,
        v: full.v,
        u_inv: full.u_inv,
        v_inv: full.v_inv,
        rank,
    }
}

/// Rank over the rationals (equivalently, number of nonzero invariant factors).
pub fn rank(a: &IntMatrix) -> usize {
    let mut eng = Engine::new(
        a,
        Tracking {
            rhs: None,
            cmat: None,
            full: None,
        },
    );
    eng.reduce();
    eng.pivots.len()
}

/// Invariant factors (> 1 not filtered; units dropped), as a divisibility chain.
pub fn invariant_factors(a: &IntMatrix) -> Vec<BigInt> {
    let mut eng = Engine::new(
        a,
        Tracking {
            rhs: None,
            cmat: None,
            full: None,
        },
    );
    eng.reduce();
    let diag: Vec<BigInt> = (0..eng.pivots.len())
        .map(|i| eng.pivot_value(i).abs())
        .collect();
    let mut chain = chain_normalize(diag.clone());
    // chain_normalize drops units; reinsert them so the count matches rank.
    let units = diag.len() - chain.len();
    let mut out = vec![BigInt::one(); units];
    out.append(&mut chain);
    out
}

/// Cokernel of the column lattice: Z^rows / im(a).
pub fn cokernel(a: &IntMatrix) -> AbelianGroup {
    let mut eng = Engine::new(
        a,
        Tracking {
            rhs: None,
            cmat: None,
            full: None,
        },
    );
    eng.reduce();
    let free = a.rows() - eng.pivots.len();
    let orders: Vec<BigInt> = (0..eng.pivots.len())
        .map(|i| eng.pivot_value(i).abs())
        .collect();
    AbelianGroup::new(free, orders)
}

/// Solves a·x = b over the integers.
pub fn solve_integer(a: &IntMatrix, b: &[BigInt]) -> Option<Vec<BigInt>> {
    assert_eq!(b.len(), a.rows(), "rhs length mismatch");
    let cmat: Vec<BTreeMap<usize, BigInt>> = (0..a.cols())
        .map(|i| {
            let mut m = BTreeMap::new();
            m.insert(i, BigInt::one());
            m
        })
        .collect();
    let mut eng = Engine::new(
        a,
        Tracking {
            rhs: Some(b.to_vec()),
            cmat: Some(cmat),
            full: None,
        },
    );
    eng.reduce();
    let rhs = eng.track.rhs.as_ref().expect("rhs tracked");
    // z on pivot columns, zero elsewhere; consistency on pivot-free rows.
    let mut z: BTreeMap<usize, BigInt> = BTreeMap::new();
    let mut pivot_rows = vec![false; a.rows()];
    for i in 0..eng.pivots.len() {
        let (r, c) = eng.pivots[i];
        pivot_rows[r] = true;
        let d = &eng.rows[r][&c];
        let (q, rem) = rhs[r].div_rem(d);
        if !rem.is_zero() {
            return None;
        }
        if !q.is_zero() {
            z.insert(c, q);
        }
    }
    for r in 0..a.rows() {
        if !pivot_rows[r] && !rhs[r].is_zero() {
            return None;
        }
    }
    let cmat = eng.track.cmat.as_ref().expect("cmat tracked");
    let mut x = vec![BigInt::zero(); a.cols()];
    for (r, row) in cmat.iter().enumerate() {
        for (c, v) in row {
            if let Some(zc) = z.get(c) {
                x[r] += v * zc;
            }
        }
    }
    Some(x)
}

/// Smallest k >= 1 with k·b in the column lattice of a, if any.
pub fn class_order(a: &IntMatrix, b: &[BigInt]) -> ClassOrder {
    assert_eq!(b.len(), a.rows(), "rhs length mismatch");
    let mut eng = Engine::new(
        a,
        Tracking {
            rhs: Some(b.to_vec()),
            cmat: None,
            full: None,
        },
    );
    eng.reduce();
    let rhs = eng.track.rhs.as_ref().expect("rhs tracked");
    let mut pivot_rows = vec![false; a.rows()];
    let mut k = BigInt::one();
    for i in 0..eng.pivots.len() {
        let (r, c) = eng.pivots[i];
        pivot_rows[r] = true;
        let d = eng.rows[r][&c].abs();
        if rhs[r].is_zero() {
            continue;
        }
        let g = rhs[r].gcd(&d);
        let need = &d / &g;
        k = k.lcm(&need);
    }
    for r in 0..a.rows() {
        if !pivot_rows[r] && !rhs[r].is_zero() {
            return ClassOrder::Infinite;
        }
    }
    ClassOrder::Finite(k)
}

/// Basis of the integer kernel of a, as matrix columns.
pub fn kernel_basis(a: &IntMatrix) -> IntMatrix {
    let cmat: Vec<BTreeMap<usize, BigInt>> = (0..a.cols())
        .map(|i| {
            let mut m = BTreeMap::new();
            m.insert(i, BigInt::one());
            m
        })
        .collect();
    let mut eng = Engine::new(
        a,
        Tracking {
            rhs: None,
            cmat: Some(cmat),
            full: None,
        },
    );
    eng.reduce();
    // With r·a·c = d, the kernel is spanned by the c-columns at pivot-free
    // column indices.
    let pivot_cols: std::collections::BTreeSet<usize> =
        eng.pivots.iter().map(|&(_, c)| c).collect();
    let cmat = eng.track.cmat.as_ref().expect("cmat tracked");
    let free_cols: Vec<usize> = (0..a.cols()).filter(|c| !pivot_cols.contains(c)).collect();
    let mut out = IntMatrix::zero(a.cols(), free_cols.len());
    for (j, fc) in free_cols.iter().enumerate() {
        for (r, row) in cmat.iter().enumerate() {
            if let Some(v) = row.get(fc) {
                out.set(r, j, v.clone());
            }
        }
    }
    out
}

/// Basis of the column lattice of a (saturating linear dependencies), as
/// matrix columns.
pub fn column_lattice_basis(a: &IntMatrix) -> IntMatrix {
    let snf = smith_normal_form(a);
    let n = a.rows();
    let mut cols = Vec::new();
    for i in 0..snf.rank() {
        let d = snf.d.get(i, i).clone();
        let mut col = Vec::with_capacity(n);
        for r in 0..n {
            col.push(snf.u.get(r, i) * &d);
        }
        cols.push(col);
    }
    IntMatrix::from_columns(&cols, n)
}

// ---------------------------------------------------------------------------
// Mod-2 linear algebra (bitset rows)
// ---------------------------------------------------------------------------

/// Dense matrix over GF(2), rows packed into machine words.
#[derive(Clone)]
pub struct Mod2Matrix {
    rows: usize,
    cols: usize,
    words: usize,
    data: Vec<u64>,
}

impl Mod2Matrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        let words = cols.div_ceil(64);
        Mod2Matrix {
            rows,
            cols,
            words,
            data: vec![0; rows * words],
        }
    }

    pub fn from_int(a: &IntMatrix) -> Self {
        let mut m = Mod2Matrix::zero(a.rows(), a.cols());
        for r in 0..a.rows() {
            for (c, v) in a.row_entries(r) {
                if v.is_odd() {
                    m.flip(r, c);
                }
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        (self.data[r * self.words + c / 64] >> (c % 64)) & 1 == 1
    }

    pub fn flip(&mut self, r: usize, c: usize) {
        self.data[r * self.words + c / 64] ^= 1 << (c % 64);
    }

    fn xor_rows(&mut self, dst: usize, src: usize) {
        let (d, s) = (dst * self.words, src * self.words);
        for i in 0..self.words {
            let v = self.data[s + i];
            self.data[d + i] ^= v;
        }
    }

    pub fn rank(&self) -> usize {
        self.clone().eliminate().0
    }

    /// Whether b lies in the column span mod 2 (b over GF(2) as bools).
    pub fn in_column_span(&self, b: &[bool]) -> bool {
        assert_eq!(b.len(), self.rows, "rhs length mismatch");
        // Work with the transpose: row space membership.
        let mut t = Mod2Matrix::zero(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                if self.get(r, c) {
                    t.flip(c, r);
                }
            }
        }
        let (rank, _) = t.clone().eliminate();
        let extra = t.rows;
        let mut aug = Mod2Matrix::zero(extra + 1, t.cols);
        aug.data[..extra * t.words].copy_from_slice(&t.data);
        for (c, &bit) in b.iter().enumerate() {
            if bit {
                aug.flip(extra, c);
            }
        }
        let (rank2, _) = aug.eliminate();
        rank2 == rank
    }

    /// Row echelon elimination; returns (rank, pivot columns).
    fn eliminate(&mut self) -> (usize, Vec<usize>) {
        let mut piv_cols = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            if row >= self.rows {
                break;
            }
            let mut sel = None;
            for r in row..self.rows {
                if self.get(r, col) {
                    sel = Some(r);
                    break;
                }
            }
            let sel = match sel {
                Some(s) => s,
                None => continue,
            };
            if sel != row {
                for i in 0..self.words {
                    self.data.swap(row * self.words + i, sel * self.words + i);
                }
            }
            for r in 0..self.rows {
                if r != row && self.get(r, col) {
                    self.xor_rows(r, row);
                }
            }
            piv_cols.push(col);
            row += 1;
        }
        (row, piv_cols)
    }
}

/// Rank of an integer matrix reduced mod 2.
pub fn rank_mod2(a: &IntMatrix) -> usize {
    Mod2Matrix::from_int(a).rank()
}

/// Whether b is in the column span of a over GF(2).
pub fn in_span_mod2(a: &IntMatrix, b: &[BigInt]) -> bool {
    let bits: Vec<bool> = b.iter().map(|x| x.is_odd()).collect();
    Mod2Matrix::from_int(a).in_column_span(&bits)
}

/// Presents the quotient of the lattice spanned by the columns of `gens` by
/// the sublattice spanned by the columns of `subs` (which must be contained
/// in it) as an abelian group.
pub fn lattice_quotient(gens: &IntMatrix, subs: &IntMatrix) -> AbelianGroup {
    assert_eq!(gens.rows(), subs.rows(), "ambient dimension mismatch");
    let basis = column_lattice_basis(gens);
    let r = basis.cols();
    if r == 0 {
        assert!(subs.is_zero(), "sublattice not contained in lattice");
        return AbelianGroup::trivial();
    }
    let snf = smith_normal_form(&basis);
    let mut expr = IntMatrix::zero(r, subs.cols());
    for j in 0..subs.cols() {
        let col = subs.column(j);
        let x = snf
            .solve(&col)
            .expect("sublattice not contained in lattice");
        for i in 0..r {
            expr.set(i, j, x[i].clone());
        }
    }
    cokernel(&expr)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bigvec(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    /// Fraction-free determinant for small matrices; test oracle only.
    fn det(a: &IntMatrix) -> BigInt {
        assert_eq!(a.rows(), a.cols());
        let n = a.rows();
        let mut m: Vec<Vec<BigInt>> = (0..n)
            .map(|r| (0..n).map(|c| a.get(r, c).clone()).collect())
            .collect();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n {
            if m[k][k].is_zero() {
                let swap = (k + 1..n).find(|&r| !m[r][k].is_zero());
                match swap {
                    Some(r) => {
                        m.swap(k, r);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                    m[i][j] = num / &prev;
                }
            }
            prev = m[k][k].clone();
        }
        sign * m[n - 1][n - 1].clone()
    }

    #[test]
    fn snf_small_example() {
        let a = IntMatrix::from_rows(&[vec![2, 4], vec![6, 8]]);
        let snf = smith_normal_form(&a);
        assert_eq!(snf.diagonal(), bigvec(&[2, 4]));
        assert_eq!(snf.u.mul(&snf.d).mul(&snf.v), a);
        assert_eq!(det(&snf.u).abs(), BigInt::one());
        assert_eq!(det(&snf.v).abs(), BigInt::one());
    }

    #[test]
    fn snf_diag_2_3_gives_6() {
        let a = IntMatrix::from_rows(&[vec![2, 0], vec![0, 3]]);
        let snf = smith_normal_form(&a);
        assert_eq!(snf.diagonal(), bigvec(&[1, 6]));
        assert_eq!(snf.u.mul(&snf.d).mul(&snf.v), a);
        let g = cokernel(&a);
        assert_eq!(g, AbelianGroup::cyclic(6));
    }

    #[test]
    fn snf_zero_and_identity() {
        let z = IntMatrix::zero(3, 2);
        let snf = smith_normal_form(&z);
        assert_eq!(snf.rank(), 0);
        assert_eq!(snf.u.mul(&snf.d).mul(&snf.v), z);
        let id = IntMatrix::identity(4);
        let snf = smith_normal_form(&id);
        assert_eq!(snf.rank(), 4);
        assert_eq!(snf.invariant_factors(), bigvec(&[1, 1, 1, 1]));
    }

    #[test]
    fn solve_and_order() {
        let a = IntMatrix::from_rows(&[vec![2]]);
        assert_eq!(solve_integer(&a, &bigvec(&[1])), None);
        assert_eq!(class_order(&a, &bigvec(&[1])), ClassOrder::Finite(BigInt::from(2)));
        assert_eq!(class_order(&a, &bigvec(&[4])), ClassOrder::Finite(BigInt::one()));
        let empty = IntMatrix::zero(1, 0);
        assert_eq!(class_order(&empty, &bigvec(&[1])), ClassOrder::Infinite);
        assert_eq!(class_order(&empty, &bigvec(&[0])), ClassOrder::Finite(BigInt::one()));

        let a = IntMatrix::from_rows(&[vec![2, 0], vec![0, 3]]);
        let x = solve_integer(&a, &bigvec(&[4, 9])).expect("solvable");
        assert_eq!(a.mul_vec(&x), bigvec(&[4, 9]));
    }

    #[test]
    fn kernel_of_rank_deficient() {
        let a = IntMatrix::from_rows(&[vec![1, 2, 3], vec![2, 4, 6]]);
        let k = kernel_basis(&a);
        assert_eq!(k.cols(), 2);
        for j in 0..k.cols() {
            let col = k.column(j);
            assert!(a.mul_vec(&col).iter().all(|x| x.is_zero()));
        }
        // The kernel columns must be independent.
        assert_eq!(rank(&k), 2);
    }

    #[test]
    fn cokernel_free_part() {
        let a = IntMatrix::zero(3, 0);
        assert_eq!(cokernel(&a), AbelianGroup::free(3));
        let a = IntMatrix::from_rows(&[vec![1, 0], vec![0, 2], vec![0, 0]]);
        let g = cokernel(&a);
        assert_eq!(g.free_rank, 1);
        assert_eq!(g.torsion, bigvec(&[2]));
    }

    #[test]
    fn mod2_rank_and_span() {
        let a = IntMatrix::from_rows(&[vec![1, 1], vec![1, 1]]);
        assert_eq!(rank_mod2(&a), 1);
        assert!(in_span_mod2(&a, &bigvec(&[1, 1])));
        assert!(!in_span_mod2(&a, &bigvec(&[1, 0])));
        let a = IntMatrix::from_rows(&[vec![2]]);
        assert!(!in_span_mod2(&a, &bigvec(&[1])));
    }

    #[test]
    fn lattice_quotient_examples() {
        // Z^2 / <(2,0),(0,2)> = (Z/2)^2
        let gens = IntMatrix::identity(2);
        let subs = IntMatrix::from_rows(&[vec![2, 0], vec![0, 2]]);
        let g = lattice_quotient(&gens, &subs);
        assert_eq!(g, AbelianGroup::new(0, bigvec(&[2, 2])));
        // <2e1> / <6e1> = Z/3
        let gens = IntMatrix::from_rows(&[vec![2], vec![0]]);
        let subs = IntMatrix::from_rows(&[vec![6], vec![0]]);
        assert_eq!(lattice_quotient(&gens, &subs), AbelianGroup::cyclic(3));
    }

    #[test]
    fn abelian_group_display_and_odd_stripping() {
        let g = AbelianGroup::new(1, bigvec(&[2, 6]));
        assert_eq!(format!("{}", g), "Z + Z/2 + Z/6");
        let h = g.modulo_odd_torsion();
        assert_eq!(h, AbelianGroup::new(1, bigvec(&[2, 2])));
        let g = AbelianGroup::new(0, bigvec(&[3, 4, 6]));
        // 3,4,6 normalizes to invariant factors 1 | 6 | 12
        assert_eq!(g.torsion, bigvec(&[6, 12]));
    }
}
