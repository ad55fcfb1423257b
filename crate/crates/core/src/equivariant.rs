//! Cell complexes with a free involution and their two-parity quotient
//! (co)homology.
//!
//! A cochain on the quotient is the same thing as a cochain f on the total
//! complex with f(t·c) = s·f(c), where s = +1 picks ordinary coefficients and
//! s = -1 the twisted ones. Both quotient complexes use the orbit
//! representatives (the lexicographically smaller cell of each orbit) as
//! basis. The connecting homomorphisms between the two parities are computed
//! at chain level: extend a representative by zero off the representatives,
//! apply the integral (co)boundary of the total complex, and read the result
//! off the representatives again.

use crate::exactalg::{self, AbelianGroup, ClassOrder, IntMatrix};
use crate::simplicial::{ChainComplex, Coefficients, SimplicialComplex, Simplex};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use std::fmt::Debug;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EquivariantError {
    #[error("involution has a fixed cell in degree {degree} (index {index})")]
    NotFree { degree: usize, index: usize },
    #[error("involution does not square to the identity in degree {0}")]
    NotInvolution(usize),
    #[error("involution does not commute with the boundary in degree {0}")]
    NotChainMap(usize),
    #[error("boundary of boundary is nonzero in degree {0}")]
    NotComplex(usize),
    #[error("boundary matrix dimensions are inconsistent in degree {0}")]
    BadDimensions(usize),
    #[error("{0} is not a subcomplex of the ambient complex")]
    NotSubcomplex(String),
    #[error("vertex involution is not defined on vertex {0}")]
    MissingVertex(u32),
    #[error("class has direction {0:?}, expected {1:?}")]
    WrongDirection(Direction, Direction),
    #[error("class in degree {degree} is not a {parity:?} cocycle")]
    NotCocycle { degree: usize, parity: Parity },
    #[error("class in degree {degree} is not a {parity:?} cycle")]
    NotCycle { degree: usize, parity: Parity },
    #[error("class degree {0} out of range")]
    DegreeOutOfRange(usize),
}

/// Coefficient parity of a quotient class: untwisted means f(t·c) = f(c),
/// twisted means f(t·c) = -f(c).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Parity {
    Untwisted,
    Twisted,
}

impl Parity {
    pub fn sign(self) -> i64 {
        match self {
            Parity::Untwisted => 1,
            Parity::Twisted => -1,
        }
    }

    pub fn opposite(self) -> Parity {
        match self {
            Parity::Untwisted => Parity::Twisted,
            Parity::Twisted => Parity::Untwisted,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Direction {
    Cohomology,
    Homology,
}

/// A (co)homology class of the quotient, recorded by its coefficients on the
/// orbit representatives of its degree.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TwistedClass {
    pub degree: usize,
    pub parity: Parity,
    pub mod2: bool,
    pub direction: Direction,
    pub coeffs: Vec<BigInt>,
}

/// Cell complex with a free cellular involution.
///
/// `involution[d][i] = (j, s)` means t(cell i) = s · cell j in degree d.
#[derive(Clone, Debug)]
pub struct EquivariantCellComplex<L> {
    pub cells: Vec<Vec<L>>,
    pub boundary: Vec<IntMatrix>,
    pub involution: Vec<Vec<(usize, i64)>>,
    orbit_reps: Vec<Vec<usize>>,
}

impl<L: Clone + Ord + Debug> EquivariantCellComplex<L> {
    pub fn new(
        cells: Vec<Vec<L>>,
        boundary: Vec<IntMatrix>,
        involution: Vec<Vec<(usize, i64)>>,
    ) -> Result<Self, EquivariantError> {
        let orbit_reps = involution
            .iter()
            .map(|inv| {
                (0..inv.len())
                    .filter(|&i| i <= inv[i].0)
                    .collect::<Vec<_>>()
            })
            .collect();
        let c = EquivariantCellComplex {
            cells,
            boundary,
            involution,
            orbit_reps,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), EquivariantError> {
        let n = self.cells.len();
        if self.boundary.len() != n || self.involution.len() != n {
            return Err(EquivariantError::BadDimensions(0));
        }
        for d in 0..n {
            let sz = self.cells[d].len();
            if self.boundary[d].cols() != sz
                || self.boundary[d].rows() != if d == 0 { 0 } else { self.cells[d - 1].len() }
                || self.involution[d].len() != sz
            {
                return Err(EquivariantError::BadDimensions(d));
            }
            for (i, &(j, s)) in self.involution[d].iter().enumerate() {
                if j == i {
                    return Err(EquivariantError::NotFree { degree: d, index: i });
                }
                if s.abs() != 1 {
                    return Err(EquivariantError::NotInvolution(d));
                }
                let (jj, s2) = self.involution[d][j];
                if jj != i || s * s2 != 1 {
                    return Err(EquivariantError::NotInvolution(d));
                }
            }
        }
        for d in 1..n {
            let t_this = self.involution_matrix(d);
            let t_prev = self.involution_matrix(d - 1);
            if t_prev.mul(&self.boundary[d]) != self.boundary[d].mul(&t_this) {
                return Err(EquivariantError::NotChainMap(d));
            }
            if d >= 2 && !self.boundary[d - 1].mul(&self.boundary[d]).is_zero() {
                return Err(EquivariantError::NotComplex(d));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> i64 {
        self.cells.len() as i64 - 1
    }

    pub fn size(&self, d: usize) -> usize {
        self.cells.get(d).map_or(0, |c| c.len())
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.cells
            .iter()
            .enumerate()
            .map(|(d, c)| if d % 2 == 0 { c.len() as i64 } else { -(c.len() as i64) })
            .sum()
    }

    pub fn orbit_reps(&self, d: usize) -> &[usize] {
        static EMPTY: &[usize] = &[];
        self.orbit_reps.get(d).map_or(EMPTY, |v| v.as_slice())
    }

    pub fn involution_matrix(&self, d: usize) -> IntMatrix {
        let n = self.size(d);
        let mut m = IntMatrix::zero(n, n);
        for (i, &(j, s)) in self.involution[d].iter().enumerate() {
            m.set(j, i, BigInt::from(s));
        }
        m
    }

    /// The chain complex of the total space.
    pub fn total_complex(&self) -> ChainComplex {
        ChainComplex {
            sizes: self.cells.iter().map(|c| c.len()).collect(),
            boundary: self.boundary.clone(),
        }
    }

    /// Weight of a cell in the parity quotient basis: (rep position, factor).
    fn fold(&self, d: usize, cell: usize, parity: Parity) -> (usize, i64) {
        let reps = &self.orbit_reps[d];
        let (img, s) = self.involution[d][cell];
        if cell <= img {
            (reps.binary_search(&cell).expect("rep present"), 1)
        } else {
            (reps.binary_search(&img).expect("rep present"), s * parity.sign())
        }
    }

    /// Quotient chain complex with the given parity, on orbit representative
    /// bases.
    pub fn twisted_chain_complex(&self, parity: Parity) -> ChainComplex {
        let n = self.cells.len();
        let mut sizes = Vec::with_capacity(n);
        let mut boundary = Vec::with_capacity(n);
        for d in 0..n {
            let reps = &self.orbit_reps[d];
            sizes.push(reps.len());
            let rows = if d == 0 { 0 } else { self.orbit_reps[d - 1].len() };
            let mut m = IntMatrix::zero(rows, reps.len());
            if d > 0 {
                let rep_col: BTreeMap<usize, usize> =
                    reps.iter().enumerate().map(|(i, &c)| (c, i)).collect();
                for r in 0..self.boundary[d].rows() {
                    let (rr, w) = self.fold(d - 1, r, parity);
                    let entries: Vec<(usize, BigInt)> = self.boundary[d]
                        .row_entries(r)
                        .filter_map(|(c, v)| rep_col.get(&c).map(|&col| (col, v.clone())))
                        .collect();
                    for (col, v) in entries {
                        m.add_to(rr, col, &(v * BigInt::from(w)));
                    }
                }
            }
            boundary.push(m);
        }
        ChainComplex { sizes, boundary }
    }

    /// Coboundary matrix of the parity cochain complex, degree d to d+1, on
    /// orbit representative bases.
    pub fn twisted_coboundary(&self, d: usize, parity: Parity) -> IntMatrix {
        let q = self.twisted_chain_complex(parity);
        q.boundary_from(d as i64 + 1).transpose()
    }

    pub fn twisted_cohomology(&self, d: i64, parity: Parity, coeffs: Coefficients) -> AbelianGroup {
        self.twisted_chain_complex(parity).cohomology(d, coeffs)
    }

    pub fn twisted_homology(&self, d: i64, parity: Parity, coeffs: Coefficients) -> AbelianGroup {
        self.twisted_chain_complex(parity).homology(d, coeffs)
    }

    /// Verify that a class representative satisfies its stated (co)cycle
    /// condition.
    pub fn check_class(&self, class: &TwistedClass) -> Result<(), EquivariantError> {
        match class.direction {
            Direction::Cohomology => self.check_cocycle(class),
            Direction::Homology => self.check_cycle(class),
        }
    }

    fn check_cocycle(&self, class: &TwistedClass) -> Result<(), EquivariantError> {
        let d = class.degree;
        if d >= self.cells.len() || class.coeffs.len() != self.orbit_reps[d].len() {
            return Err(EquivariantError::DegreeOutOfRange(d));
        }
        let delta = self.twisted_coboundary(d, class.parity);
        let img = delta.mul_vec(&class.coeffs);
        let ok = if class.mod2 {
            img.iter().all(|x| (x % BigInt::from(2)).is_zero())
        } else {
            img.iter().all(|x| x.is_zero())
        };
        if ok {
            Ok(())
        } else {
            Err(EquivariantError::NotCocycle {
                degree: d,
                parity: class.parity,
            })
        }
    }

    fn check_cycle(&self, class: &TwistedClass) -> Result<(), EquivariantError> {
        let d = class.degree;
        if d >= self.cells.len() || class.coeffs.len() != self.orbit_reps[d].len() {
            return Err(EquivariantError::DegreeOutOfRange(d));
        }
        let bdry = self.twisted_chain_complex(class.parity).boundary_from(d as i64);
        let img = bdry.mul_vec(&class.coeffs);
        let ok = if class.mod2 {
            img.iter().all(|x| (x % BigInt::from(2)).is_zero())
        } else {
            img.iter().all(|x| x.is_zero())
        };
        if ok {
            Ok(())
        } else {
            Err(EquivariantError::NotCycle {
                degree: d,
                parity: class.parity,
            })
        }
    }

    /// Connecting homomorphism in cohomology: a degree-d cocycle of one
    /// parity goes to a degree-(d+1) cocycle of the opposite parity.
    pub fn smith_connecting_cohomology(
        &self,
        class: &TwistedClass,
    ) -> Result<TwistedClass, EquivariantError> {
        if class.direction != Direction::Cohomology {
            return Err(EquivariantError::WrongDirection(
                class.direction,
                Direction::Cohomology,
            ));
        }
        self.check_cocycle(class)?;
        let d = class.degree;
        if d + 1 >= self.cells.len() {
            // Top degree: the connecting image lives in an empty group.
            return Ok(TwistedClass {
                degree: d + 1,
                parity: class.parity.opposite(),
                mod2: class.mod2,
                direction: Direction::Cohomology,
                coeffs: vec![],
            });
        }
        // Extend by zero off the representatives.
        let mut full = vec![BigInt::zero(); self.size(d)];
        for (k, &cell) in self.orbit_reps[d].iter().enumerate() {
            full[cell] = class.coeffs[k].clone();
        }
        // Integral coboundary: value on a (d+1)-cell e is h(boundary of e).
        let bdry = &self.boundary[d + 1];
        let mut img = vec![BigInt::zero(); self.size(d + 1)];
        for (r, h) in full.iter().enumerate() {
            if h.is_zero() {
                continue;
            }
            for (e, v) in bdry.row_entries(r) {
                img[e] += v * h;
            }
        }
        let mut coeffs: Vec<BigInt> = self.orbit_reps[d + 1]
            .iter()
            .map(|&cell| img[cell].clone())
            .collect();
        if class.mod2 {
            let two = BigInt::from(2);
            for c in &mut coeffs {
                *c = ((c.clone() % &two) + &two) % &two;
            }
        }
        let out = TwistedClass {
            degree: d + 1,
            parity: class.parity.opposite(),
            mod2: class.mod2,
            direction: Direction::Cohomology,
            coeffs,
        };
        self.check_cocycle(&out)?;
        Ok(out)
    }

    /// Connecting homomorphism in homology: a degree-d cycle of one parity
    /// goes to a degree-(d-1) cycle of the opposite parity.
    pub fn smith_connecting_homology(
        &self,
        class: &TwistedClass,
    ) -> Result<TwistedClass, EquivariantError> {
        if class.direction != Direction::Homology {
            return Err(EquivariantError::WrongDirection(
                class.direction,
                Direction::Homology,
            ));
        }
        self.check_cycle(class)?;
        let d = class.degree;
        if d == 0 {
            return Ok(TwistedClass {
                degree: 0,
                parity: class.parity.opposite(),
                mod2: class.mod2,
                direction: Direction::Homology,
                coeffs: vec![BigInt::zero(); self.orbit_reps[0].len()],
            });
        }
        // Lift: same coefficients on representative cells, zero elsewhere.
        let mut full = vec![BigInt::zero(); self.size(d)];
        for (k, &cell) in self.orbit_reps[d].iter().enumerate() {
            full[cell] = class.coeffs[k].clone();
        }
        let img = self.boundary[d].mul_vec(&full);
        let mut coeffs: Vec<BigInt> = self.orbit_reps[d - 1]
            .iter()
            .map(|&cell| img[cell].clone())
            .collect();
        if class.mod2 {
            let two = BigInt::from(2);
            for c in &mut coeffs {
                *c = ((c.clone() % &two) + &two) % &two;
            }
        }
        let out = TwistedClass {
            degree: d - 1,
            parity: class.parity.opposite(),
            mod2: class.mod2,
            direction: Direction::Homology,
            coeffs,
        };
        self.check_cycle(&out)?;
        Ok(out)
    }

    /// The unit cocycle in degree 0 (value 1 on every vertex orbit).
    pub fn unit_cocycle(&self, mod2: bool) -> TwistedClass {
        TwistedClass {
            degree: 0,
            parity: Parity::Untwisted,
            mod2,
            direction: Direction::Cohomology,
            coeffs: vec![BigInt::one(); self.orbit_reps.first().map_or(0, |r| r.len())],
        }
    }

    /// k-th power of the Euler class of the quotient double cover, via k
    /// successive connecting homomorphisms on the unit cocycle.
    pub fn euler_power(&self, k: usize, mod2: bool) -> Result<TwistedClass, EquivariantError> {
        let mut c = self.unit_cocycle(mod2);
        for _ in 0..k {
            c = self.smith_connecting_cohomology(&c)?;
        }
        Ok(c)
    }

    /// Order of a class in its quotient (co)homology group.
    pub fn class_order(&self, class: &TwistedClass) -> Result<ClassOrder, EquivariantError> {
        let d = class.degree;
        if d >= self.cells.len() {
            return Ok(ClassOrder::Finite(BigInt::one()));
        }
        let span = match class.direction {
            Direction::Cohomology => {
                self.check_cocycle(class)?;
                if d == 0 {
                    IntMatrix::zero(self.orbit_reps[0].len(), 0)
                } else {
                    self.twisted_coboundary(d - 1, class.parity)
                }
            }
            Direction::Homology => {
                self.check_cycle(class)?;
                self.twisted_chain_complex(class.parity)
                    .boundary_from(d as i64 + 1)
            }
        };
        if class.mod2 {
            let trivial = exactalg::in_span_mod2(&span, &class.coeffs);
            Ok(if trivial {
                ClassOrder::Finite(BigInt::one())
            } else {
                ClassOrder::Finite(BigInt::from(2))
            })
        } else {
            Ok(exactalg::class_order(&span, &class.coeffs))
        }
    }

    pub fn is_trivial_class(&self, class: &TwistedClass) -> Result<bool, EquivariantError> {
        Ok(self.class_order(class)?.is_trivial())
    }

    /// Largest k with a nonvanishing integral k-th Euler power.
    pub fn co_index(&self) -> Result<usize, EquivariantError> {
        self.index_with(false)
    }

    /// Largest k with a nonvanishing mod-2 k-th Euler power.
    pub fn yang_index(&self) -> Result<usize, EquivariantError> {
        self.index_with(true)
    }

    fn index_with(&self, mod2: bool) -> Result<usize, EquivariantError> {
        let dim = self.cells.len().saturating_sub(1);
        let mut last = None;
        let mut c = self.unit_cocycle(mod2);
        for k in 0..=dim {
            if k > 0 {
                c = self.smith_connecting_cohomology(&c)?;
            }
            if !self.is_trivial_class(&c)? {
                last = Some(k);
            } else {
                break;
            }
        }
        Ok(last.unwrap_or(0))
    }

    /// Induced involution on the degree-d integral homology of the total
    /// space, presented on a cycle basis.
    pub fn involution_on_homology(&self, d: usize) -> HomologyAction {
        let t = self.involution_matrix(d);
        involution_on_homology(&self.total_complex(), &t, d)
    }
}

/// Induced action on H_d of a chain complex under a chain involution given in
/// degree d (and implicitly preserving boundaries).
pub fn involution_on_homology(complex: &ChainComplex, t: &IntMatrix, d: usize) -> HomologyAction {
    let b_out = complex.boundary_from(d as i64);
    let b_in = complex.boundary_from(d as i64 + 1);
    let kernel = exactalg::kernel_basis(&b_out);
    let snf = exactalg::smith_normal_form(&kernel);
    let mut relations = IntMatrix::zero(kernel.cols(), b_in.cols());
    for j in 0..b_in.cols() {
        let col = b_in.column(j);
        let x = snf.solve(&col).expect("boundaries are cycles");
        for i in 0..kernel.cols() {
            relations.set(i, j, x[i].clone());
        }
    }
    let tk = t.mul(&kernel);
    let mut action = IntMatrix::zero(kernel.cols(), kernel.cols());
    for j in 0..kernel.cols() {
        let col = tk.column(j);
        let x = snf.solve(&col).expect("involution preserves cycles");
        for i in 0..kernel.cols() {
            action.set(i, j, x[i].clone());
        }
    }
    HomologyAction {
        t: action,
        relations,
    }
}

/// A Z-module with involution, presented as Z^k / im(relations) with the
/// involution acting by the matrix t on Z^k.
#[derive(Clone, Debug)]
pub struct HomologyAction {
    pub t: IntMatrix,
    pub relations: IntMatrix,
}

impl HomologyAction {
    pub fn module(&self) -> AbelianGroup {
        let k = self.t.rows();
        exactalg::lattice_quotient(&IntMatrix::identity(k), &self.relations)
    }
}

/// Group cohomology of the order-two group acting on the presented module:
/// H^0 = ker(1 - t) and H^1 = ker(1 + t)/im(1 - t), both computed inside the
/// presentation.
pub fn z2_group_cohomology(action: &HomologyAction) -> (AbelianGroup, AbelianGroup) {
    let k = action.t.rows();
    assert_eq!(action.t.cols(), k, "involution matrix must be square");
    assert_eq!(action.relations.rows(), k, "relation ambient mismatch");
    let id = IntMatrix::identity(k);
    let minus = sub(&id, &action.t);
    let plus = add(&id, &action.t);

    let h0 = subgroup_quotient(&minus, &action.relations, &action.relations, k);
    let denom = minus.hstack(&action.relations);
    let h1 = subgroup_quotient(&plus, &action.relations, &denom, k);
    (h0, h1)
}

/// {x : phi(x) in im(rel)} / im(denoms), all inside Z^k.
fn subgroup_quotient(
    phi: &IntMatrix,
    rel: &IntMatrix,
    denoms: &IntMatrix,
    k: usize,
) -> AbelianGroup {
    let stacked = phi.hstack(rel);
    let ker = exactalg::kernel_basis(&stacked);
    // Project kernel vectors to their x-part.
    let mut gens = IntMatrix::zero(k, ker.cols());
    for j in 0..ker.cols() {
        for i in 0..k {
            gens.set(i, j, ker.get(i, j).clone());
        }
    }
    exactalg::lattice_quotient(&gens, denoms)
}

fn add(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let mut out = a.clone();
    for r in 0..b.rows() {
        for c in 0..b.cols() {
            out.add_to(r, c, b.get(r, c));
        }
    }
    out
}

fn sub(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let mut out = a.clone();
    for r in 0..b.rows() {
        for c in 0..b.cols() {
            let v = out.get(r, c) - b.get(r, c);
            out.set(r, c, v);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Deleted products
// ---------------------------------------------------------------------------

pub type ProductCell = (Simplex, Simplex);

/// Sign of the permutation sorting the image vertices; None on collision.
fn simplex_image(s: &Simplex, map: &BTreeMap<u32, u32>) -> Option<(Simplex, i64)> {
    let mut img: Vec<(u32, usize)> = s
        .vertices()
        .iter()
        .enumerate()
        .map(|(i, v)| (*map.get(v).unwrap_or(v), i))
        .collect();
    img.sort_unstable();
    if img.windows(2).any(|w| w[0].0 == w[1].0) {
        return None;
    }
    // Count inversions of the permutation taking position order to sorted.
    let perm: Vec<usize> = img.iter().map(|&(_, i)| i).collect();
    let mut sign = 1i64;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] {
                sign = -sign;
            }
        }
    }
    let simplex = Simplex::new(img.into_iter().map(|(v, _)| v).collect()).expect("sorted");
    Some((simplex, sign))
}

/// Equivariant structure on a simplicial complex from a free vertex
/// involution.
pub fn from_simplicial_with_involution(
    k: &SimplicialComplex,
    vertex_map: &BTreeMap<u32, u32>,
) -> Result<EquivariantCellComplex<Simplex>, EquivariantError> {
    for v in k.vertices() {
        let w = *vertex_map
            .get(&v)
            .ok_or(EquivariantError::MissingVertex(v))?;
        if vertex_map.get(&w) != Some(&v) {
            return Err(EquivariantError::NotInvolution(0));
        }
    }
    let chain = k.chain_complex();
    let mut cells = Vec::new();
    let mut involution = Vec::new();
    for d in 0..=k.dim().max(-1) as usize {
        if k.dim() < 0 {
            break;
        }
        let basis: Vec<Simplex> = k.simplices(d).to_vec();
        let mut inv = Vec::with_capacity(basis.len());
        for s in &basis {
            let (img, sign) =
                simplex_image(s, vertex_map).ok_or(EquivariantError::NotFree { degree: d, index: 0 })?;
            let j = k
                .index_of(&img)
                .ok_or(EquivariantError::NotChainMap(d))?;
            inv.push((j, sign));
        }
        cells.push(basis);
        involution.push(inv);
    }
    EquivariantCellComplex::new(cells, chain.boundary, involution)
}

/// Deleted product: cells are ordered pairs of disjoint simplices, with the
/// product boundary and the factor-swapping involution (whose sign on a
/// (p, q) bidegree cell is (-1)^{pq}).
pub fn deleted_product(k: &SimplicialComplex) -> EquivariantCellComplex<ProductCell> {
    deleted_product_pairs(k, k, |_, _| true)
}

/// Relative deleted product: disjoint pairs with at least one factor in k,
/// the other allowed to roam the ambient complex y.
pub fn relative_deleted_product(
    k: &SimplicialComplex,
    y: &SimplicialComplex,
) -> Result<EquivariantCellComplex<ProductCell>, EquivariantError> {
    if !k.is_subcomplex_of(y) {
        return Err(EquivariantError::NotSubcomplex("first factor".into()));
    }
    Ok(deleted_product_pairs(y, y, |a, b| {
        k.contains(a) || k.contains(b)
    }))
}

fn deleted_product_pairs(
    a: &SimplicialComplex,
    b: &SimplicialComplex,
    keep: impl Fn(&Simplex, &Simplex) -> bool,
) -> EquivariantCellComplex<ProductCell> {
    let maxdim = (a.dim() + b.dim()).max(-1);
    let mut cells: Vec<Vec<ProductCell>> = vec![Vec::new(); (maxdim + 1).max(0) as usize];
    for s in a.all_simplices() {
        for t in b.all_simplices() {
            if s.disjoint_from(t) && keep(s, t) {
                cells[s.dim() + t.dim()].push((s.clone(), t.clone()));
            }
        }
    }
    for c in &mut cells {
        c.sort();
    }
    let index: Vec<BTreeMap<&ProductCell, usize>> = cells
        .iter()
        .map(|c| c.iter().enumerate().map(|(i, x)| (x, i)).collect())
        .collect();
    let mut boundary = Vec::new();
    let mut involution = Vec::new();
    for d in 0..cells.len() {
        let rows = if d == 0 { 0 } else { cells[d - 1].len() };
        let mut m = IntMatrix::zero(rows, cells[d].len());
        let mut inv = Vec::with_capacity(cells[d].len());
        for (col, (s, t)) in cells[d].iter().enumerate() {
            let p = s.dim();
            let q = t.dim();
            if d > 0 {
                for (face, sign) in s.faces() {
                    let cell = (face, t.clone());
                    if let Some(&i) = index[d - 1].get(&cell) {
                        m.add_to(i, col, &BigInt::from(sign));
                    }
                }
                let tsign = if p % 2 == 0 { 1 } else { -1 };
                for (face, sign) in t.faces() {
                    let cell = (s.clone(), face);
                    if let Some(&i) = index[d - 1].get(&cell) {
                        m.add_to(i, col, &BigInt::from(tsign * sign));
                    }
                }
            }
            let swapped = (t.clone(), s.clone());
            let j = *index[d].get(&swapped).expect("swap stays in complex");
            let s_inv = if (p * q) % 2 == 0 { 1 } else { -1 };
            inv.push((j, s_inv));
        }
        boundary.push(m);
        involution.push(inv);
    }
    EquivariantCellComplex::new(cells, boundary, involution)
        .expect("deleted product is a free equivariant complex")
}
