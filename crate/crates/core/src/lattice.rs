//! Regular grid graphs, the discrete gradient and cosupport combinatorics.
//!
//! Vertices are indexed row-major: `(i, j, k) -> i*n2*n3 + j*n3 + k`. Edges
//! come in axis-major blocks (all axis-0 edges, then axis-1, then axis-2),
//! and inside a block they are ordered row-major by their lower endpoint on
//! the block's reduced grid. This is the row order of the Kronecker-stacked
//! gradient, so edge indices double as gradient row indices.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Lattice {
    dim: usize,
    dims: [usize; 3],
}

impl TryFrom<Vec<usize>> for Lattice {
    type Error = Error;
    fn try_from(dims: Vec<usize>) -> Result<Self> {
        Lattice::new(&dims)
    }
}

impl From<Lattice> for Vec<usize> {
    fn from(l: Lattice) -> Self {
        l.dims().to_vec()
    }
}

impl Lattice {
    /// A grid with the given number of vertices per axis (1 to 3 axes).
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() || dims.len() > 3 {
            return Err(Error::invalid(format!(
                "lattice needs 1 to 3 axes, got {}",
                dims.len()
            )));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::invalid("lattice dimensions must be positive"));
        }
        let mut full = [1; 3];
        full[..dims.len()].copy_from_slice(dims);
        full[..dims.len()]
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::invalid("lattice too large"))?;
        Ok(Lattice {
            dim: dims.len(),
            dims: full,
        })
    }

    /// The `d × d` (or `d × d × d`) grid.
    pub fn cube(dim: usize, d: usize) -> Result<Self> {
        Lattice::new(&vec![d; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims[..self.dim]
    }

    pub fn is_cubic(&self) -> bool {
        self.dims().iter().all(|&d| d == self.dims[0])
    }

    /// Number of vertices.
    pub fn n(&self) -> usize {
        self.dims.iter().product()
    }

    /// Number of edges.
    pub fn p(&self) -> usize {
        (0..self.dim).map(|a| self.axis_edge_count(a)).sum()
    }

    pub fn axis_edge_count(&self, axis: usize) -> usize {
        self.n() / self.dims[axis] * (self.dims[axis] - 1)
    }

    /// First edge index of the block belonging to `axis`.
    pub fn axis_offset(&self, axis: usize) -> usize {
        (0..axis).map(|a| self.axis_edge_count(a)).sum()
    }

    fn strides(&self) -> [usize; 3] {
        [self.dims[1] * self.dims[2], self.dims[2], 1]
    }

    pub fn vertex_index(&self, coords: &[usize]) -> usize {
        let s = self.strides();
        coords.iter().zip(s.iter()).map(|(c, s)| c * s).sum()
    }

    pub fn coords(&self, v: usize) -> [usize; 3] {
        let s = self.strides();
        [v / s[0], (v / s[1]) % self.dims[1], v % self.dims[2]]
    }

    /// Axis and endpoints `(lower, upper)` of edge `e`.
    pub fn edge(&self, e: usize) -> (usize, usize, usize) {
        let mut rest = e;
        for axis in 0..self.dim {
            let count = self.axis_edge_count(axis);
            if rest < count {
                let mut red = self.dims;
                red[axis] -= 1;
                let c = [rest / (red[1] * red[2]), (rest / red[2]) % red[1], rest % red[2]];
                let lo = self.vertex_index(&c);
                return (axis, lo, lo + self.strides()[axis]);
            }
            rest -= count;
        }
        panic!("edge index {e} out of range (p = {})", self.p());
    }

    /// Index of the edge from `v` to its successor along `axis`, if any.
    pub fn edge_from(&self, v: usize, axis: usize) -> Option<usize> {
        let c = self.coords(v);
        if c[axis] + 1 >= self.dims[axis] {
            return None;
        }
        let mut red = self.dims;
        red[axis] -= 1;
        let local = c[0] * red[1] * red[2] + c[1] * red[2] + c[2];
        Some(self.axis_offset(axis) + local)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.p()).map(|e| {
            let (_, a, b) = self.edge(e);
            (a, b)
        })
    }

    /// Calls `f(edge, lower, upper)` for every edge in index order.
    pub fn for_each_edge(&self, mut f: impl FnMut(usize, usize, usize)) {
        let s = self.strides();
        let [n1, n2, n3] = self.dims;
        let mut e = 0;
        for axis in 0..self.dim {
            for i in 0..n1 - usize::from(axis == 0) {
                for j in 0..n2 - usize::from(axis == 1) {
                    for k in 0..n3 - usize::from(axis == 2) {
                        let v = i * s[0] + j * s[1] + k;
                        f(e, v, v + s[axis]);
                        e += 1;
                    }
                }
            }
        }
    }

    /// The gradient operator as a `p × n` matrix; row `e` is `u[hi] - u[lo]`.
    pub fn gradient(&self) -> SparseMatrix {
        let mut rows = Vec::with_capacity(self.p());
        self.for_each_edge(|_, lo, hi| rows.push(vec![(lo, -1.0), (hi, 1.0)]));
        SparseMatrix::from_rows(self.n(), rows).expect("edges are in range")
    }

    /// Computes `∇u` without forming the matrix.
    pub fn apply_gradient(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.n(), "image length does not match lattice");
        let mut out = Vec::with_capacity(self.p());
        self.for_each_edge(|_, lo, hi| out.push(u[hi] - u[lo]));
        out
    }

    /// Anisotropic total variation `‖∇u‖₁`.
    pub fn tv(&self, u: &[f64]) -> f64 {
        let mut total = 0.0;
        self.for_each_edge(|_, lo, hi| total += (u[hi] - u[lo]).abs());
        total
    }

    /// Edges where `|∇u| <= tol`.
    pub fn cosupport_of(&self, u: &[f64], tol: f64) -> Cosupport {
        let mut edges = Vec::new();
        self.for_each_edge(|e, lo, hi| {
            if (u[hi] - u[lo]).abs() <= tol {
                edges.push(e);
            }
        });
        Cosupport::from_sorted(*self, edges)
    }

    /// Gradient sparsity `‖∇u‖₀` with the given zero tolerance.
    pub fn gradient_sparsity(&self, u: &[f64], tol: f64) -> usize {
        let mut k = 0;
        self.for_each_edge(|_, lo, hi| k += usize::from((u[hi] - u[lo]).abs() > tol));
        k
    }

    /// Compares two vertices in the cube order.
    ///
    /// The weight `w(v) = Σ_i 2^(i + D·v_i)` (axes numbered from 1) is a sum
    /// of distinct powers of two, so comparing weights is comparing the
    /// exponent sets from the top down. This never overflows.
    pub fn cube_cmp(&self, a: usize, b: usize) -> Ordering {
        let ea = self.cube_exponents(a);
        let eb = self.cube_exponents(b);
        ea.cmp(&eb)
    }

    fn cube_exponents(&self, v: usize) -> [usize; 3] {
        let c = self.coords(v);
        let mut e = [0; 3];
        for axis in 0..self.dim {
            // +1 keeps unused slots (0) below every real exponent
            e[axis] = axis + 1 + self.dim * c[axis] + 1;
        }
        e.sort_unstable_by(|x, y| y.cmp(x));
        e
    }

    /// Exact cube-order weight; `None` if it does not fit in 128 bits.
    pub fn cube_weight(&self, coords: &[usize]) -> Option<u128> {
        let mut w: u128 = 0;
        for (axis, &c) in coords.iter().enumerate() {
            let exp = axis + 1 + self.dim * c;
            w = w.checked_add(1u128.checked_shl(exp as u32)?)?;
            if exp >= 128 {
                return None;
            }
        }
        Some(w)
    }

    /// All vertices sorted by the cube order.
    pub fn cube_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.n()).collect();
        order.sort_by_cached_key(|&v| self.cube_exponents(v));
        order
    }

    /// The first `s` vertices in the cube order.
    pub fn cube_order_prefix(&self, s: usize) -> Result<Vec<usize>> {
        if !self.is_cubic() {
            return Err(Error::invalid("cube order needs a cubic lattice"));
        }
        if s == 0 || s > self.n() {
            return Err(Error::invalid(format!(
                "prefix size {s} outside 1..={}",
                self.n()
            )));
        }
        let mut order = self.cube_order();
        order.truncate(s);
        Ok(order)
    }

    /// Edges with both endpoints in `vertices`.
    pub fn edge_interior(&self, vertices: &[usize]) -> Result<Cosupport> {
        let mut inside = vec![false; self.n()];
        for &v in vertices {
            if v >= self.n() {
                return Err(Error::invalid(format!("vertex {v} outside the lattice")));
            }
            inside[v] = true;
        }
        let mut edges = Vec::new();
        self.for_each_edge(|e, lo, hi| {
            if inside[lo] && inside[hi] {
                edges.push(e);
            }
        });
        Ok(Cosupport::from_sorted(*self, edges))
    }

    /// `|Int_e(S)|` for a vertex set given as a bitmask (lattices with at
    /// most 64 vertices). Used by exhaustive isoperimetric checks.
    pub fn interior_count_mask(&self, mask: u64) -> usize {
        debug_assert!(self.n() <= 64);
        let mut count = 0;
        self.for_each_edge(|_, lo, hi| {
            count += ((mask >> lo) & (mask >> hi) & 1) as usize;
        });
        count
    }
}

/// A set of edge indices together with the component structure of the
/// vertices it touches.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cosupport {
    lattice: Lattice,
    edges: Vec<usize>,
    covered: usize,
    components: usize,
}

impl Cosupport {
    /// Builds a cosupport from arbitrary edge indices (sorted and deduplicated).
    pub fn new(lattice: Lattice, mut edges: Vec<usize>) -> Result<Self> {
        edges.sort_unstable();
        edges.dedup();
        if let Some(&e) = edges.last() {
            if e >= lattice.p() {
                return Err(Error::invalid(format!(
                    "edge {e} outside the lattice (p = {})",
                    lattice.p()
                )));
            }
        }
        Ok(Self::from_sorted(lattice, edges))
    }

    pub fn empty(lattice: Lattice) -> Self {
        Self::from_sorted(lattice, Vec::new())
    }

    pub fn full(lattice: Lattice) -> Self {
        Self::from_sorted(lattice, (0..lattice.p()).collect())
    }

    fn from_sorted(lattice: Lattice, edges: Vec<usize>) -> Self {
        let mut uf = UnionFind::new(lattice.n());
        let mut touched = vec![false; lattice.n()];
        let mut covered = 0;
        let mut merges = 0;
        for &e in &edges {
            let (_, a, b) = lattice.edge(e);
            for v in [a, b] {
                if !touched[v] {
                    touched[v] = true;
                    covered += 1;
                }
            }
            if uf.union(a, b) {
                merges += 1;
            }
        }
        Cosupport {
            lattice,
            edges,
            covered,
            components: covered - merges,
        }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn edges(&self) -> &[usize] {
        &self.edges
    }

    /// Cosparsity `ℓ = |Λ|`.
    pub fn ell(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, e: usize) -> bool {
        self.edges.binary_search(&e).is_ok()
    }

    /// `Λᶜ` in increasing order.
    pub fn complement(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.lattice.p() - self.ell());
        let mut it = self.edges.iter().peekable();
        for e in 0..self.lattice.p() {
            if it.peek() == Some(&&e) {
                it.next();
            } else {
                out.push(e);
            }
        }
        out
    }

    /// Number of vertices touched by at least one edge of `Λ`.
    pub fn covered_vertices(&self) -> usize {
        self.covered
    }

    /// Connected components of the subgraph formed by `Λ`'s edges.
    pub fn components(&self) -> usize {
        self.components
    }

    /// `dim N(∇_Λ) = n − |V(Λ)| + #components(V(Λ))`.
    pub fn subspace_dim(&self) -> usize {
        self.lattice.n() - self.covered + self.components
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.edges)?)
    }

    pub fn from_json(lattice: Lattice, s: &str) -> Result<Self> {
        let edges: Vec<usize> = serde_json::from_str(s)?;
        Self::new(lattice, edges)
    }
}

/// Piecewise-constant-friendly image: nonnegative values over a lattice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Image {
    lattice: Lattice,
    values: Vec<f64>,
}

impl Image {
    pub fn new(lattice: Lattice, values: Vec<f64>) -> Result<Self> {
        if values.len() != lattice.n() {
            return Err(Error::DimensionMismatch(format!(
                "image has {} values, lattice has {} vertices",
                values.len(),
                lattice.n()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid(format!("image value {v} is not a finite nonnegative number")));
        }
        Ok(Image { lattice, values })
    }

    pub fn constant(lattice: Lattice, value: f64) -> Result<Self> {
        Image::new(lattice, vec![value; lattice.n()])
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn tv(&self) -> f64 {
        self.lattice.tv(&self.values)
    }

    /// Gradient sparsity `k`, counting exact nonzeros.
    pub fn k(&self) -> usize {
        self.lattice.gradient_sparsity(&self.values, 0.0)
    }

    /// Cosparsity `ℓ = p − k`.
    pub fn ell(&self) -> usize {
        self.lattice.p() - self.k()
    }

    /// Relative gradient sparsity `ρ = k / n`.
    pub fn rho(&self) -> f64 {
        self.k() as f64 / self.lattice.n() as f64
    }

    pub fn cosupport(&self) -> Cosupport {
        self.lattice.cosupport_of(&self.values, 0.0)
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns true if `a` and `b` were in different sets.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            Ordering::Less => self.parent[ra] = rb,
            Ordering::Greater => self.parent[rb] = ra,
            Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}
