//! Complex linear-algebra substrate: labeled bases, sparse operators,
//! SVD-based kernels and the block decomposition of a sparsity pattern.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// Handedness of a mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Chirality {
    L,
    R,
}

impl Chirality {
    pub fn opposite(self) -> Self {
        match self {
            Chirality::L => Chirality::R,
            Chirality::R => Chirality::L,
        }
    }
}

impl fmt::Display for Chirality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Chirality::L => "L",
            Chirality::R => "R",
        })
    }
}

/// A frequency stored exactly as a multiple of 1/3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Frequency {
    thirds: i64,
}

impl Frequency {
    pub const fn integer(n: i64) -> Self {
        Self { thirds: 3 * n }
    }

    pub const fn from_thirds(thirds: i64) -> Self {
        Self { thirds }
    }

    pub const fn thirds(self) -> i64 {
        self.thirds
    }

    pub fn as_f64(self) -> f64 {
        self.thirds as f64 / 3.0
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.thirds % 3 == 0 {
            write!(f, "{}", self.thirds / 3)
        } else {
            write!(f, "{}/3", self.thirds)
        }
    }
}

/// A plane-wave basis vector of a solution space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Mode {
    pub k: i64,
    pub chirality: Chirality,
    pub omega: Frequency,
}

impl Mode {
    pub fn new(k: i64, chirality: Chirality, omega: Frequency) -> Self {
        Self { k, chirality, omega }
    }
}

impl Ord for Mode {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.chirality, self.k, self.omega).cmp(&(other.chirality, other.k, other.omega))
    }
}

impl PartialOrd for Mode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BasisLabel {
    /// 1-based index into a sequence space.
    Seq(usize),
    Mode(Mode),
}

impl BasisLabel {
    pub fn mode(k: i64, chirality: Chirality, omega: Frequency) -> Self {
        BasisLabel::Mode(Mode::new(k, chirality, omega))
    }

    /// Sequence index or momentum, whichever the label carries.
    pub fn position_like(&self) -> i64 {
        match self {
            BasisLabel::Seq(i) => *i as i64,
            BasisLabel::Mode(m) => m.k,
        }
    }

    pub fn chirality(&self) -> Option<Chirality> {
        match self {
            BasisLabel::Seq(_) => None,
            BasisLabel::Mode(m) => Some(m.chirality),
        }
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisLabel::Seq(i) => write!(f, "{i}"),
            BasisLabel::Mode(m) => write!(f, "{}{}", m.chirality, m.k),
        }
    }
}

/// Ordered list of pairwise distinct labels.
#[derive(Debug, Clone)]
pub struct Basis {
    labels: Vec<BasisLabel>,
    index: HashMap<BasisLabel, usize>,
}

impl Basis {
    pub fn new(labels: Vec<BasisLabel>) -> Result<Self> {
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(*l, i).is_some() {
                return Err(Error::DuplicateLabel(*l));
            }
        }
        Ok(Self { labels, index })
    }

    pub fn empty() -> Self {
        Self {
            labels: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// Sequence labels `1..=n`.
    pub fn sequence(n: usize) -> Self {
        Self::new((1..=n).map(BasisLabel::Seq).collect()).expect("distinct by construction")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[BasisLabel] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> BasisLabel {
        self.labels[i]
    }

    pub fn position(&self, label: &BasisLabel) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn contains(&self, label: &BasisLabel) -> bool {
        self.index.contains_key(label)
    }

    /// Same labels, possibly in a different order.
    pub fn same_set(&self, other: &Basis) -> bool {
        self.len() == other.len() && self.labels.iter().all(|l| other.contains(l))
    }
}

impl PartialEq for Basis {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels
    }
}

impl Eq for Basis {}

/// Finitely supported complex matrix between two labeled bases.
///
/// Rows are indexed by the codomain, columns by the domain. Entries whose
/// modulus does not exceed `drop_tol` are never stored.
#[derive(Debug, Clone)]
pub struct SparseComplexOperator {
    domain: Basis,
    codomain: Basis,
    entries: BTreeMap<(usize, usize), C64>,
    drop_tol: f64,
}

impl SparseComplexOperator {
    pub fn zero(domain: Basis, codomain: Basis) -> Self {
        Self {
            domain,
            codomain,
            entries: BTreeMap::new(),
            drop_tol: 0.0,
        }
    }

    pub fn with_drop_tol(mut self, drop_tol: f64) -> Self {
        self.drop_tol = drop_tol.max(0.0);
        let tol = self.drop_tol;
        self.entries.retain(|_, v| v.norm() > tol);
        self
    }

    pub fn identity(basis: Basis) -> Self {
        let mut op = Self::zero(basis.clone(), basis);
        for i in 0..op.domain.len() {
            op.entries.insert((i, i), C64::new(1.0, 0.0));
        }
        op
    }

    pub fn from_triplets<I>(domain: Basis, codomain: Basis, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (BasisLabel, BasisLabel, C64)>,
    {
        let mut op = Self::zero(domain, codomain);
        for (row, col, v) in triplets {
            op.add(row, col, v)?;
        }
        Ok(op)
    }

    pub fn from_dense(domain: Basis, codomain: Basis, dense: &DMatrix<C64>) -> Result<Self> {
        if dense.nrows() != codomain.len() || dense.ncols() != domain.len() {
            return Err(Error::DimensionMismatch(format!(
                "dense matrix is {}x{}, bases are {}x{}",
                dense.nrows(),
                dense.ncols(),
                codomain.len(),
                domain.len()
            )));
        }
        let mut op = Self::zero(domain, codomain);
        for c in 0..dense.ncols() {
            for r in 0..dense.nrows() {
                op.add_at(r, c, dense[(r, c)]);
            }
        }
        Ok(op)
    }

    pub fn domain(&self) -> &Basis {
        &self.domain
    }

    pub fn codomain(&self) -> &Basis {
        &self.codomain
    }

    pub fn drop_tol(&self) -> f64 {
        self.drop_tol
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_endomorphism(&self) -> bool {
        self.domain == self.codomain
    }

    /// Accumulates `value` into the entry at (row, col).
    pub fn add(&mut self, row: BasisLabel, col: BasisLabel, value: C64) -> Result<()> {
        let r = self
            .codomain
            .position(&row)
            .ok_or(Error::ForeignLabel(row, "codomain"))?;
        let c = self
            .domain
            .position(&col)
            .ok_or(Error::ForeignLabel(col, "domain"))?;
        self.add_at(r, c, value);
        Ok(())
    }

    pub(crate) fn add_at(&mut self, r: usize, c: usize, value: C64) {
        let tol = self.drop_tol;
        let slot = self.entries.entry((r, c)).or_insert(C64::new(0.0, 0.0));
        *slot += value;
        if slot.norm() <= tol {
            self.entries.remove(&(r, c));
        }
    }

    pub fn get(&self, row: &BasisLabel, col: &BasisLabel) -> C64 {
        match (self.codomain.position(row), self.domain.position(col)) {
            (Some(r), Some(c)) => self.get_at(r, c),
            _ => C64::new(0.0, 0.0),
        }
    }

    pub fn get_at(&self, r: usize, c: usize) -> C64 {
        self.entries.get(&(r, c)).copied().unwrap_or_default()
    }

    /// Stored entries as (row label, column label, value), row-major.
    pub fn entries(&self) -> impl Iterator<Item = (BasisLabel, BasisLabel, C64)> + '_ {
        self.entries
            .iter()
            .map(|(&(r, c), &v)| (self.codomain.label(r), self.domain.label(c), v))
    }

    pub(crate) fn raw_entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        self.entries.iter().map(|(&(r, c), &v)| (r, c, v))
    }

    /// Conjugate transpose; domain and codomain swap.
    pub fn adjoint(&self) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|(&(r, c), v)| ((c, r), v.conj()))
            .collect();
        Self {
            domain: self.codomain.clone(),
            codomain: self.domain.clone(),
            entries,
            drop_tol: self.drop_tol,
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        let mut out = Self::zero(self.domain.clone(), self.codomain.clone());
        out.drop_tol = self.drop_tol;
        for (&(r, c), &v) in &self.entries {
            out.add_at(r, c, v * factor);
        }
        out
    }

    fn check_same_bases(&self, other: &Self) -> Result<()> {
        if self.domain != other.domain || self.codomain != other.codomain {
            return Err(Error::BasisMismatch(
                "operands do not share domain and codomain".into(),
            ));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same_bases(other)?;
        let mut out = self.clone();
        for (&(r, c), &v) in &other.entries {
            out.add_at(r, c, v);
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// `self ∘ other`; requires `other.codomain == self.domain`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if other.codomain != self.domain {
            return Err(Error::BasisMismatch(
                "inner bases of a composition differ".into(),
            ));
        }
        let mut by_col: HashMap<usize, Vec<(usize, C64)>> = HashMap::new();
        for (&(r, c), &v) in &self.entries {
            by_col.entry(c).or_default().push((r, v));
        }
        let mut out = Self::zero(other.domain.clone(), self.codomain.clone());
        out.drop_tol = self.drop_tol.max(other.drop_tol);
        for (&(k, j), &w) in &other.entries {
            if let Some(col) = by_col.get(&k) {
                for &(i, v) in col {
                    out.add_at(i, j, v * w);
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.domain.len() {
            return Err(Error::DimensionMismatch(format!(
                "vector has length {}, domain has {}",
                v.len(),
                self.domain.len()
            )));
        }
        let mut out = vec![C64::new(0.0, 0.0); self.codomain.len()];
        for (&(r, c), &a) in &self.entries {
            out[r] += a * v[c];
        }
        Ok(out)
    }

    /// Dense materialization in basis order, codomain rows by domain columns.
    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.codomain.len(), self.domain.len());
        for (&(r, c), &v) in &self.entries {
            m[(r, c)] = v;
        }
        m
    }

    /// Re-expresses the operator in reordered bases with the same label sets.
    pub fn reorder(&self, domain: Basis, codomain: Basis) -> Result<Self> {
        if !self.domain.same_set(&domain) || !self.codomain.same_set(&codomain) {
            return Err(Error::BasisMismatch(
                "reordering must keep the label sets".into(),
            ));
        }
        let mut out = Self::zero(domain, codomain);
        out.drop_tol = self.drop_tol;
        for (row, col, v) in self.entries() {
            out.add(row, col, v)?;
        }
        Ok(out)
    }

    /// Restriction to sub-bases; entries outside them are dropped.
    pub fn restrict(&self, domain: Basis, codomain: Basis) -> Self {
        let mut out = Self::zero(domain, codomain);
        out.drop_tol = self.drop_tol;
        for (row, col, v) in self.entries() {
            if let (Some(r), Some(c)) = (out.codomain.position(&row), out.domain.position(&col)) {
                out.add_at(r, c, v);
            }
        }
        out
    }

    /// Largest entrywise modulus of `self - other`, matched by label.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if !self.domain.same_set(&other.domain) || !self.codomain.same_set(&other.codomain) {
            return Err(Error::BasisMismatch(
                "compared operators live on different bases".into(),
            ));
        }
        let mut worst = 0.0_f64;
        for (row, col, v) in self.entries() {
            worst = worst.max((v - other.get(&row, &col)).norm());
        }
        for (row, col, v) in other.entries() {
            worst = worst.max((v - self.get(&row, &col)).norm());
        }
        Ok(worst)
    }

    /// Spectral norm of the dense materialization.
    pub fn operator_norm(&self) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        let dense = self.to_dense();
        dense
            .singular_values()
            .iter()
            .copied()
            .fold(0.0_f64, f64::max)
    }

    /// CSV with columns row-label, col-label, re, im.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("row,col,re,im\n");
        for (row, col, v) in self.entries() {
            let _ = writeln!(s, "{row},{col},{:.17e},{:.17e}", v.re, v.im);
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Kernel of an operator as declared by the relative singular-value threshold.
#[derive(Debug, Clone)]
pub struct KernelResult {
    pub dimension: usize,
    /// Right-singular vectors of the discarded singular values, in domain order.
    pub basis_vectors: Vec<Vec<C64>>,
    /// Descending. Padded with zeros when the codomain is smaller than the domain.
    pub singular_values: Vec<f64>,
    /// Smallest retained over largest discarded singular value.
    pub gap_ratio: f64,
}

/// Numerical kernel from a full SVD of the dense materialization.
pub fn kernel(a: &SparseComplexOperator, rel_tol: f64) -> Result<KernelResult> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::InvalidTolerance(rel_tol));
    }
    let n = a.domain().len();
    if n == 0 {
        return Err(Error::EmptyOperator);
    }
    let unit = |i: usize| {
        let mut v = vec![C64::new(0.0, 0.0); n];
        v[i] = C64::new(1.0, 0.0);
        v
    };
    if a.is_zero() {
        return Ok(KernelResult {
            dimension: n,
            basis_vectors: (0..n).map(unit).collect(),
            singular_values: vec![0.0; n],
            gap_ratio: f64::INFINITY,
        });
    }

    let dense = a.to_dense();
    let m = dense.nrows();
    let padded = if m < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(&dense);
        p
    } else {
        dense
    };
    let max_iter = 1000 * n.max(16);
    let svd = match padded.clone().try_svd(false, true, f64::EPSILON, max_iter) {
        Some(svd) => svd,
        None => {
            let path = dump_failed_matrix(a);
            return Err(Error::SvdNoConvergence {
                rows: m,
                cols: n,
                path,
            });
        }
    };
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap_or(Ordering::Equal)
            .then(i.cmp(&j))
    });
    let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let sigma_max = sigma[0];
    if sigma_max == 0.0 {
        return Ok(KernelResult {
            dimension: n,
            basis_vectors: (0..n).map(unit).collect(),
            singular_values: sigma,
            gap_ratio: f64::INFINITY,
        });
    }
    let threshold = rel_tol * sigma_max;
    let rank = sigma.iter().take_while(|&&s| s >= threshold).count();
    let basis_vectors: Vec<Vec<C64>> = order[rank..]
        .iter()
        .map(|&i| v_t.row(i).iter().map(|z| z.conj()).collect())
        .collect();
    let gap_ratio = if rank == sigma.len() || sigma[rank] == 0.0 {
        f64::INFINITY
    } else {
        sigma[rank - 1] / sigma[rank]
    };
    Ok(KernelResult {
        dimension: basis_vectors.len(),
        basis_vectors,
        singular_values: sigma,
        gap_ratio,
    })
}

fn dump_failed_matrix(a: &SparseComplexOperator) -> PathBuf {
    let path = std::env::temp_dir().join(format!(
        "chiral-index-svd-failure-{}-{}x{}.csv",
        std::process::id(),
        a.codomain().len(),
        a.domain().len()
    ));
    // The error is reported either way; a failed dump just leaves no file.
    let _ = a.write_csv(&path);
    path
}

/// One connected component of the bipartite sparsity graph.
#[derive(Debug, Clone)]
pub struct Block {
    pub domain: Basis,
    pub codomain: Basis,
    pub operator: SparseComplexOperator,
}

impl Block {
    pub fn is_zero(&self) -> bool {
        self.operator.is_zero()
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Connected components of the sparsity graph on rows ∪ columns.
///
/// A label present in both the domain and the codomain is a single vertex,
/// so for an endomorphism the blocks are invariant subspaces. Blocks are
/// ordered by first appearance, scanning domain labels and then the
/// remaining codomain labels in basis order. Every label of either basis
/// lands in exactly one block; isolated labels give zero blocks.
pub fn block_decompose(a: &SparseComplexOperator) -> Vec<Block> {
    components(a, true)
}

/// Like [`block_decompose`] but rows and columns are always distinct
/// vertices, even when they carry the same label. This is the finest
/// splitting into independent sub-matrices and is what the index engine
/// uses for per-block kernels.
pub fn bipartite_decompose(a: &SparseComplexOperator) -> Vec<Block> {
    components(a, false)
}

fn components(a: &SparseComplexOperator, identify: bool) -> Vec<Block> {
    let n = a.domain().len();
    let m = a.codomain().len();
    let mut row_vertex = Vec::with_capacity(m);
    let mut extra = 0;
    for r in 0..m {
        let shared = if identify {
            a.domain().position(&a.codomain().label(r))
        } else {
            None
        };
        match shared {
            Some(c) => row_vertex.push(c),
            None => {
                row_vertex.push(n + extra);
                extra += 1;
            }
        }
    }
    let mut dsu = DisjointSet::new(n + extra);
    for (r, c, _) in a.raw_entries() {
        dsu.union(c, row_vertex[r]);
    }
    let mut slot_of_root: HashMap<usize, usize> = HashMap::new();
    let mut slot_of_vertex = vec![0usize; n + extra];
    let mut nblocks = 0;
    for (v, slot) in slot_of_vertex.iter_mut().enumerate() {
        let root = dsu.find(v);
        *slot = *slot_of_root.entry(root).or_insert_with(|| {
            nblocks += 1;
            nblocks - 1
        });
    }
    let mut cols: Vec<Vec<usize>> = vec![Vec::new(); nblocks];
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); nblocks];
    let mut local_col = vec![0usize; n];
    let mut local_row = vec![0usize; m];
    for c in 0..n {
        let b = slot_of_vertex[c];
        local_col[c] = cols[b].len();
        cols[b].push(c);
    }
    for r in 0..m {
        let b = slot_of_vertex[row_vertex[r]];
        local_row[r] = rows[b].len();
        rows[b].push(r);
    }
    let mut blocks: Vec<Block> = cols
        .iter()
        .zip(&rows)
        .map(|(cols, rows)| {
            let domain = Basis::new(cols.iter().map(|&c| a.domain().label(c)).collect())
                .expect("sub-basis of a basis");
            let codomain = Basis::new(rows.iter().map(|&r| a.codomain().label(r)).collect())
                .expect("sub-basis of a basis");
            let mut operator = SparseComplexOperator::zero(domain.clone(), codomain.clone());
            operator.drop_tol = a.drop_tol();
            Block {
                domain,
                codomain,
                operator,
            }
        })
        .collect();
    for (r, c, v) in a.raw_entries() {
        let b = slot_of_vertex[c];
        blocks[b].operator.add_at(local_row[r], local_col[c], v);
    }
    blocks
}

/// Inverse of [`block_decompose`].
pub fn reassemble(
    blocks: &[Block],
    domain: Basis,
    codomain: Basis,
) -> Result<SparseComplexOperator> {
    let mut out = SparseComplexOperator::zero(domain, codomain);
    for b in blocks {
        for (row, col, v) in b.operator.entries() {
            out.add(row, col, v)?;
        }
    }
    Ok(out)
}

/// Standard inner product, conjugate-linear in the first slot.
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}
