//! Sparse assembly with a frozen sparsity pattern, constraint elimination and
//! direct factorizations (faer).
//!
//! Every finite-element system in the crate is assembled in a deterministic
//! element order, so the list of `(row, col)` pairs produced by an assembly
//! loop only depends on the mesh and the [`DofMap`]. [`SparsePattern`] keeps the
//! symbolic structure and the symbolic factorizations of that list, and each
//! subsequent assembly only supplies new values.

use std::sync::{Once, OnceLock};

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu, SymbolicLlt, SymbolicLu};
use faer::sparse::{Argsort, Pair, SparseColMat, SymbolicSparseColMat};
use faer::{Mat, Side};

use crate::error::{Error, Result};

static SEQUENTIAL: Once = Once::new();

/// Factorizations run single-threaded: parallelism lives at the
/// operating-point and time-step level.
fn init_parallelism() {
    SEQUENTIAL.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
}

/// Maps each full degree of freedom to a linear combination of free unknowns.
///
/// A full dof either is free itself, is slaved to other free dofs (periodic,
/// antiperiodic or rotated boundary coupling, sliding-interface identification)
/// or is fixed to zero (homogeneous Dirichlet condition, empty combination).
#[derive(Clone, Debug)]
pub struct DofMap {
    offsets: Vec<usize>,
    targets: Vec<(usize, f64)>,
    n_free: usize,
}

impl DofMap {
    pub fn n_full(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    #[inline]
    pub fn expand(&self, full: usize) -> &[(usize, f64)] {
        &self.targets[self.offsets[full]..self.offsets[full + 1]]
    }

    /// `P x`: full values from free values.
    pub fn to_full(&self, free: &[f64]) -> Vec<f64> {
        debug_assert_eq!(free.len(), self.n_free);
        (0..self.n_full())
            .map(|d| self.expand(d).iter().map(|&(f, c)| c * free[f]).sum())
            .collect()
    }

    /// `Pᵀ v`: accumulates a full-length vector onto the free unknowns.
    pub fn to_free(&self, full: &[f64]) -> Vec<f64> {
        debug_assert_eq!(full.len(), self.n_full());
        let mut out = vec![0.0; self.n_free];
        for (d, &v) in full.iter().enumerate() {
            for &(f, c) in self.expand(d) {
                out[f] += c * v;
            }
        }
        out
    }
}

/// Incremental construction of a [`DofMap`].
#[derive(Debug)]
pub struct DofMapBuilder {
    entries: Vec<Option<Vec<(usize, f64)>>>,
    n_free: usize,
}

impl DofMapBuilder {
    pub fn new(n_full: usize) -> Self {
        Self {
            entries: vec![None; n_full],
            n_free: 0,
        }
    }

    pub fn is_set(&self, full: usize) -> bool {
        self.entries[full].is_some()
    }

    /// Declares `full` a free unknown and returns its index.
    pub fn free(&mut self, full: usize) -> usize {
        let idx = self.n_free;
        self.n_free += 1;
        self.entries[full] = Some(vec![(idx, 1.0)]);
        idx
    }

    /// Declares the number of free unknowns when indices are assigned
    /// explicitly through [`DofMapBuilder::slave`].
    pub fn set_free_count(&mut self, n_free: usize) {
        self.n_free = n_free;
    }

    pub fn fixed(&mut self, full: usize) {
        self.entries[full] = Some(Vec::new());
    }

    pub fn slave(&mut self, full: usize, combination: Vec<(usize, f64)>) {
        self.entries[full] = Some(combination);
    }

    /// The combination already assigned to `full`, if any.
    pub fn get(&self, full: usize) -> Option<&[(usize, f64)]> {
        self.entries[full].as_deref()
    }

    /// Finishes the map; unassigned dofs are treated as fixed to zero.
    pub fn build(self) -> DofMap {
        let mut offsets = Vec::with_capacity(self.entries.len() + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for e in self.entries {
            if let Some(list) = e {
                targets.extend(list);
            }
            offsets.push(targets.len());
        }
        DofMap {
            offsets,
            targets,
            n_free: self.n_free,
        }
    }
}

/// Triplet list plus right-hand side, filled element by element.
#[derive(Clone, Debug, Default)]
pub struct SystemBuilder {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl SystemBuilder {
    pub fn new(n: usize) -> Self {
        Self {
            rows: Vec::new(),
            cols: Vec::new(),
            vals: Vec::new(),
            rhs: vec![0.0; n],
        }
    }

    /// Scatters a dense element matrix and vector through the dof map.
    ///
    /// `dofs` are full dof indices; `ke` is row-major `k × k`. Passing an
    /// empty `ke` adds only the vector part.
    pub fn add_element(&mut self, map: &DofMap, dofs: &[usize], ke: &[f64], fe: &[f64]) {
        let k = dofs.len();
        if !fe.is_empty() {
            for a in 0..k {
                for &(fa, ca) in map.expand(dofs[a]) {
                    self.rhs[fa] += ca * fe[a];
                }
            }
        }
        if ke.is_empty() {
            return;
        }
        for a in 0..k {
            for &(fa, ca) in map.expand(dofs[a]) {
                for b in 0..k {
                    for &(fb, cb) in map.expand(dofs[b]) {
                        self.rows.push(fa);
                        self.cols.push(fb);
                        self.vals.push(ca * cb * ke[a * k + b]);
                    }
                }
            }
        }
    }

    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        self.rows.push(row);
        self.cols.push(col);
        self.vals.push(val);
    }

    /// Appends `other` with row and column indices shifted by `offset`.
    pub fn append_shifted(&mut self, other: &SystemBuilder, row_offset: usize, col_offset: usize, scale: f64) {
        self.rows.extend(other.rows.iter().map(|r| r + row_offset));
        self.cols.extend(other.cols.iter().map(|c| c + col_offset));
        self.vals.extend(other.vals.iter().map(|v| v * scale));
    }
}

/// Frozen sparsity pattern with cached symbolic factorizations.
pub struct SparsePattern {
    n: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    symbolic: SymbolicSparseColMat<usize>,
    argsort: Argsort<usize>,
    llt: OnceLock<SymbolicLlt<usize>>,
    lu: OnceLock<SymbolicLu<usize>>,
}

impl std::fmt::Debug for SparsePattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SparsePattern")
            .field("n", &self.n)
            .field("entries", &self.rows.len())
            .finish()
    }
}

impl SparsePattern {
    pub fn new(n: usize, rows: &[usize], cols: &[usize]) -> Result<Self> {
        init_parallelism();
        let pairs: Vec<Pair<usize, usize>> = rows
            .iter()
            .zip(cols)
            .map(|(&r, &c)| Pair::new(r, c))
            .collect();
        let (symbolic, argsort) = SymbolicSparseColMat::try_new_from_indices(n, n, &pairs)
            .map_err(|e| Error::LinearSolver(format!("pattern creation: {e:?}")))?;
        Ok(Self {
            n,
            rows: rows.to_vec(),
            cols: cols.to_vec(),
            symbolic,
            argsort,
            llt: OnceLock::new(),
            lu: OnceLock::new(),
        })
    }

    pub fn from_builder(n: usize, b: &SystemBuilder) -> Result<Self> {
        Self::new(n, &b.rows, &b.cols)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// True if `b` was produced by the same assembly sequence.
    pub fn matches(&self, b: &SystemBuilder) -> bool {
        b.rows.len() == self.rows.len() && b.rows == self.rows && b.cols == self.cols
    }

    fn matrix(&self, vals: &[f64]) -> Result<SparseColMat<usize, f64>> {
        SparseColMat::new_from_argsort(self.symbolic.clone(), &self.argsort, vals)
            .map_err(|e| Error::LinearSolver(format!("matrix creation: {e:?}")))
    }

    /// Cholesky factorization for symmetric positive definite systems.
    pub fn cholesky(&self, vals: &[f64]) -> Result<Factor> {
        let mat = self.matrix(vals)?;
        let sym = match self.llt.get() {
            Some(s) => s.clone(),
            None => {
                let s = SymbolicLlt::try_new(mat.symbolic(), Side::Lower)
                    .map_err(|e| Error::LinearSolver(format!("symbolic cholesky: {e:?}")))?;
                self.llt.get_or_init(|| s).clone()
            }
        };
        let llt = Llt::try_new_with_symbolic(sym, mat.as_ref(), Side::Lower)
            .map_err(|e| Error::LinearSolver(format!("cholesky: {e:?}")))?;
        Ok(Factor::Llt(llt))
    }

    /// LU factorization with partial pivoting for general systems.
    pub fn lu(&self, vals: &[f64]) -> Result<Factor> {
        let mat = self.matrix(vals)?;
        let sym = match self.lu.get() {
            Some(s) => s.clone(),
            None => {
                let s = SymbolicLu::try_new(mat.symbolic())
                    .map_err(|e| Error::LinearSolver(format!("symbolic lu: {e:?}")))?;
                self.lu.get_or_init(|| s).clone()
            }
        };
        let lu = Lu::try_new_with_symbolic(sym, mat.as_ref())
            .map_err(|e| Error::LinearSolver(format!("lu: {e:?}")))?;
        Ok(Factor::Lu(lu))
    }

    /// `y = A x` from the raw triplets.
    pub fn matvec(&self, vals: &[f64], x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for ((&r, &c), &v) in self.rows.iter().zip(&self.cols).zip(vals) {
            y[r] += v * x[c];
        }
        y
    }

    /// `y = Aᵀ x` from the raw triplets.
    pub fn matvec_transpose(&self, vals: &[f64], x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for ((&r, &c), &v) in self.rows.iter().zip(&self.cols).zip(vals) {
            y[c] += v * x[r];
        }
        y
    }
}

/// A numeric factorization ready for repeated solves.
pub enum Factor {
    Llt(Llt<usize, f64>),
    Lu(Lu<usize, f64>),
}

impl Factor {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let b = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        let x = match self {
            Factor::Llt(f) => f.solve(&b),
            Factor::Lu(f) => f.solve(&b),
        };
        (0..rhs.len()).map(|i| x[(i, 0)]).collect()
    }

    pub fn solve_transpose(&self, rhs: &[f64]) -> Vec<f64> {
        let b = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        let x = match self {
            Factor::Llt(f) => f.solve(&b),
            Factor::Lu(f) => f.solve_transpose(&b),
        };
        (0..rhs.len()).map(|i| x[(i, 0)]).collect()
    }
}

/// Cached pattern slot that is (re)built when the assembly sequence changes.
#[derive(Debug, Default)]
pub struct PatternCache {
    cell: OnceLock<SparsePattern>,
}

impl PatternCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the cached pattern if it matches `b`, otherwise a fresh one.
    pub fn get(&self, n: usize, b: &SystemBuilder) -> Result<PatternRef<'_>> {
        if let Some(p) = self.cell.get() {
            if p.dim() == n && p.matches(b) {
                return Ok(PatternRef::Cached(p));
            }
            return Ok(PatternRef::Owned(SparsePattern::from_builder(n, b)?));
        }
        let p = SparsePattern::from_builder(n, b)?;
        let _ = self.cell.set(p);
        match self.cell.get() {
            Some(p) if p.dim() == n && p.matches(b) => Ok(PatternRef::Cached(p)),
            _ => Ok(PatternRef::Owned(SparsePattern::from_builder(n, b)?)),
        }
    }
}

pub enum PatternRef<'a> {
    Cached(&'a SparsePattern),
    Owned(SparsePattern),
}

impl std::ops::Deref for PatternRef<'_> {
    type Target = SparsePattern;
    fn deref(&self) -> &SparsePattern {
        match self {
            PatternRef::Cached(p) => p,
            PatternRef::Owned(p) => p,
        }
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
