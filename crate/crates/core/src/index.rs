//! Index verdicts from truncated chiral signature operators.
//!
//! Kernels are computed per independent block, then each block's kernel is
//! split along the eigenvectors of its boundary-band mass so that vectors
//! living near the cutoff can be discarded as truncation artifacts.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::spectral::{
    bipartite_decompose, kernel, BasisLabel, Chirality, SparseComplexOperator, C64,
    DEFAULT_REL_TOL,
};

pub const DEFAULT_MASS_THRESHOLD: f64 = 0.5;
pub const DEFAULT_MIN_GAP_RATIO: f64 = 1e3;
const TAIL_LEN: usize = 8;
const PRINT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationPolicy {
    /// Momentum cutoff K, or the dimension N of a sequence space.
    pub cutoff: usize,
    pub boundary_band: usize,
    pub mass_threshold: f64,
    pub rel_tol: f64,
    pub min_gap_ratio: f64,
}

impl TruncationPolicy {
    /// Defaults with band `max(5, cutoff / 10)`.
    pub fn new(cutoff: usize) -> Result<Self> {
        Self {
            cutoff,
            boundary_band: (cutoff / 10).max(5),
            mass_threshold: DEFAULT_MASS_THRESHOLD,
            rel_tol: DEFAULT_REL_TOL,
            min_gap_ratio: DEFAULT_MIN_GAP_RATIO,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if self.cutoff == 0 {
            return Err(Error::InvalidPolicy("cutoff must be positive".into()));
        }
        if self.boundary_band == 0 || self.boundary_band >= self.cutoff {
            return Err(Error::InvalidPolicy(format!(
                "boundary band {} must lie in [1, {})",
                self.boundary_band, self.cutoff
            )));
        }
        if !(self.mass_threshold > 0.0 && self.mass_threshold < 1.0) {
            return Err(Error::InvalidPolicy(format!(
                "mass threshold {} must lie in (0, 1)",
                self.mass_threshold
            )));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::InvalidTolerance(self.rel_tol));
        }
        if !(self.min_gap_ratio >= 1.0) {
            return Err(Error::InvalidPolicy(format!(
                "minimum gap ratio {} must be at least 1",
                self.min_gap_ratio
            )));
        }
        Ok(self)
    }

    pub fn is_boundary(&self, label: &BasisLabel) -> bool {
        let edge = (self.cutoff - self.boundary_band) as i64;
        match label {
            BasisLabel::Seq(i) => *i as i64 > edge,
            BasisLabel::Mode(m) => m.k.abs() > edge,
        }
    }
}

/// Optional overrides of the policy defaults, as read from a config file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySettings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary_band: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_gap_ratio: Option<f64>,
}

impl PolicySettings {
    pub fn policy_for(&self, cutoff: usize) -> Result<TruncationPolicy> {
        let mut p = TruncationPolicy {
            cutoff,
            boundary_band: (cutoff / 10).max(5),
            mass_threshold: DEFAULT_MASS_THRESHOLD,
            rel_tol: DEFAULT_REL_TOL,
            min_gap_ratio: DEFAULT_MIN_GAP_RATIO,
        };
        if let Some(w) = self.boundary_band {
            p.boundary_band = w;
        }
        if let Some(m) = self.mass_threshold {
            p.mass_threshold = m;
        }
        if let Some(t) = self.rel_tol {
            p.rel_tol = t;
        }
        if let Some(g) = self.min_gap_ratio {
            p.min_gap_ratio = g;
        }
        p.validated()
    }
}

/// Gap ratio that serializes infinity as the string "inf".
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct GapRatio(pub f64);

impl Serialize for GapRatio {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Component {
    pub label: String,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelVector {
    pub boundary_mass: f64,
    /// Coefficients above 1e-12 in modulus.
    pub components: Vec<Component>,
    #[serde(skip)]
    pub coefficients: Vec<(BasisLabel, C64)>,
}

impl KernelVector {
    fn new(coefficients: Vec<(BasisLabel, C64)>, boundary_mass: f64) -> Self {
        let components = coefficients
            .iter()
            .filter(|(_, z)| z.norm() > PRINT_EPS)
            .map(|(l, z)| Component {
                label: l.to_string(),
                re: z.re,
                im: z.im,
            })
            .collect();
        Self {
            boundary_mass,
            components,
            coefficients,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationInfo {
    pub kind: &'static str,
    pub cutoff: usize,
    pub boundary_band: usize,
    pub mass_threshold: f64,
    pub rel_tol: f64,
    pub min_gap_ratio: f64,
    pub domain_size: usize,
    pub codomain_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stabilization {
    pub cutoffs: [usize; 2],
    pub indices: [Option<i64>; 2],
    pub dim_ker_l: [usize; 2],
    pub dim_ker_r: [usize; 2],
    pub zero_block_census: [usize; 2],
    pub agreed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexReport {
    pub dim_ker_l: usize,
    pub dim_ker_r: usize,
    pub index: Option<i64>,
    pub finite: bool,
    pub boundary_discarded_l: usize,
    pub boundary_discarded_r: usize,
    pub gap_ratios: [GapRatio; 2],
    pub ill_conditioned: bool,
    /// Exactly-zero blocks of S_L that carry at least one domain label.
    pub zero_block_census: usize,
    pub truncation: TruncationInfo,
    /// Smallest singular values over all blocks, ascending.
    pub singular_value_tail_l: Vec<f64>,
    pub singular_value_tail_r: Vec<f64>,
    pub kernel_l: Vec<KernelVector>,
    pub kernel_r: Vec<KernelVector>,
    pub stabilization: Option<Stabilization>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub singular_values_l: Vec<f64>,
    #[serde(skip)]
    pub singular_values_r: Vec<f64>,
}

impl IndexReport {
    pub fn min_gap_ratio(&self) -> f64 {
        self.gap_ratios[0].0.min(self.gap_ratios[1].0)
    }

    fn mark_infinite(&mut self, note: String) {
        self.finite = false;
        self.index = None;
        self.notes.push(note);
    }
}

/// Input of the index engine.
#[derive(Debug, Clone)]
pub enum ChiralProblem {
    /// S_L as an endomorphism of the full solution space.
    Endomorphism(SparseComplexOperator),
    /// S_L restricted to H_L (into H_R) and S_R restricted to H_R (into H_L).
    Odd {
        left: SparseComplexOperator,
        right: SparseComplexOperator,
    },
}

impl ChiralProblem {
    pub fn run(&self, policy: &TruncationPolicy) -> Result<IndexReport> {
        match self {
            ChiralProblem::Endomorphism(s_l) => noether_index(s_l, policy),
            ChiralProblem::Odd { left, right } => chiral_index_odd(left, right, policy),
        }
    }

    /// The operator whose changes a homotopy sweep measures.
    pub fn s_l(&self) -> &SparseComplexOperator {
        match self {
            ChiralProblem::Endomorphism(s_l) => s_l,
            ChiralProblem::Odd { left, .. } => left,
        }
    }
}

struct SideKernel {
    dimension: usize,
    discarded: usize,
    min_gap: f64,
    vectors: Vec<KernelVector>,
    singular_values: Vec<f64>,
    zero_blocks: usize,
}

fn side_kernel(op: &SparseComplexOperator, policy: &TruncationPolicy) -> Result<SideKernel> {
    let mut out = SideKernel {
        dimension: 0,
        discarded: 0,
        min_gap: f64::INFINITY,
        vectors: Vec::new(),
        singular_values: Vec::new(),
        zero_blocks: 0,
    };
    for block in bipartite_decompose(op) {
        let d = block.domain.len();
        if d == 0 {
            continue;
        }
        if block.is_zero() {
            out.zero_blocks += 1;
        }
        let k = kernel(&block.operator, policy.rel_tol)?;
        out.singular_values.extend_from_slice(&k.singular_values);
        out.min_gap = out.min_gap.min(k.gap_ratio);
        if k.dimension == 0 {
            continue;
        }
        let q = DMatrix::from_fn(d, k.dimension, |i, j| k.basis_vectors[j][i]);
        let band: Vec<bool> = block
            .domain
            .labels()
            .iter()
            .map(|l| policy.is_boundary(l))
            .collect();
        let mut pq = q.clone();
        for (i, &b) in band.iter().enumerate() {
            if !b {
                pq.row_mut(i).fill(C64::new(0.0, 0.0));
            }
        }
        let mass = q.adjoint() * pq;
        let (masses, rotated) = if k.dimension == 1 {
            (vec![mass[(0, 0)].re], q)
        } else {
            let eig = mass.symmetric_eigen();
            let mut order: Vec<usize> = (0..k.dimension).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            let u = DMatrix::from_fn(k.dimension, k.dimension, |i, j| {
                eig.eigenvectors[(i, order[j])]
            });
            (
                order.iter().map(|&j| eig.eigenvalues[j]).collect(),
                q * u,
            )
        };
        for (j, m) in masses.into_iter().enumerate() {
            if m > policy.mass_threshold {
                out.discarded += 1;
                continue;
            }
            let coeffs = block
                .domain
                .labels()
                .iter()
                .enumerate()
                .map(|(i, l)| (*l, rotated[(i, j)]))
                .collect();
            out.vectors.push(KernelVector::new(coeffs, m.max(0.0)));
            out.dimension += 1;
        }
    }
    out.singular_values.sort_by(|a, b| a.total_cmp(b));
    Ok(out)
}

fn build_report(
    kind: &'static str,
    s_l: &SparseComplexOperator,
    l: SideKernel,
    r: SideKernel,
    policy: &TruncationPolicy,
) -> IndexReport {
    let gap_ratios = [GapRatio(l.min_gap), GapRatio(r.min_gap)];
    let ill_conditioned = l.min_gap < policy.min_gap_ratio || r.min_gap < policy.min_gap_ratio;
    let mut report = IndexReport {
        dim_ker_l: l.dimension,
        dim_ker_r: r.dimension,
        index: Some(l.dimension as i64 - r.dimension as i64),
        finite: true,
        boundary_discarded_l: l.discarded,
        boundary_discarded_r: r.discarded,
        gap_ratios,
        ill_conditioned,
        zero_block_census: l.zero_blocks,
        truncation: TruncationInfo {
            kind,
            cutoff: policy.cutoff,
            boundary_band: policy.boundary_band,
            mass_threshold: policy.mass_threshold,
            rel_tol: policy.rel_tol,
            min_gap_ratio: policy.min_gap_ratio,
            domain_size: s_l.domain().len(),
            codomain_size: s_l.codomain().len(),
        },
        singular_value_tail_l: l.singular_values.iter().take(TAIL_LEN).copied().collect(),
        singular_value_tail_r: r.singular_values.iter().take(TAIL_LEN).copied().collect(),
        kernel_l: l.vectors,
        kernel_r: r.vectors,
        stabilization: None,
        notes: Vec::new(),
        singular_values_l: l.singular_values,
        singular_values_r: r.singular_values,
    };
    if ill_conditioned {
        report.mark_infinite(format!(
            "ill-conditioned: gap ratio {:e} below {:e}",
            l.min_gap.min(r.min_gap),
            policy.min_gap_ratio
        ));
    }
    report
}

/// `dim ker S_L - dim ker S_L*` for an endomorphism truncation.
pub fn noether_index(s_l: &SparseComplexOperator, policy: &TruncationPolicy) -> Result<IndexReport> {
    if !s_l.is_endomorphism() {
        return Err(Error::NotEndomorphism);
    }
    if s_l.domain().is_empty() {
        return Err(Error::EmptyOperator);
    }
    let policy = policy.validated()?;
    let l = side_kernel(s_l, &policy)?;
    let r = side_kernel(&s_l.adjoint(), &policy)?;
    let report = build_report("endomorphism", s_l, l, r, &policy);
    // Rank-nullity: without filtering both raw kernels have equal size.
    debug_assert!(
        report.index.unwrap_or(0) == 0
            || report.boundary_discarded_l + report.boundary_discarded_r > 0
    );
    Ok(report)
}

fn uniform_chirality(
    labels: &[BasisLabel],
    expected: Chirality,
    which: &'static str,
) -> Result<()> {
    if labels.iter().all(|l| l.chirality() == Some(expected)) {
        Ok(())
    } else {
        Err(Error::MixedChirality(which))
    }
}

/// Index of S_L restricted to H_L against S_R restricted to H_R.
pub fn chiral_index_odd(
    left: &SparseComplexOperator,
    right: &SparseComplexOperator,
    policy: &TruncationPolicy,
) -> Result<IndexReport> {
    uniform_chirality(left.domain().labels(), Chirality::L, "S_L domain")?;
    uniform_chirality(left.codomain().labels(), Chirality::R, "S_L codomain")?;
    uniform_chirality(right.domain().labels(), Chirality::R, "S_R domain")?;
    uniform_chirality(right.codomain().labels(), Chirality::L, "S_R codomain")?;
    if left.domain().is_empty() || right.domain().is_empty() {
        return Err(Error::EmptyOperator);
    }
    let policy = policy.validated()?;
    let l = side_kernel(left, &policy)?;
    let r = side_kernel(right, &policy)?;
    Ok(build_report("odd", left, l, r, &policy))
}

/// Runs the index at two truncations and reports the larger one.
///
/// The verdict is finite only if both runs are finite, agree on the index
/// and on both filtered kernel dimensions, and the zero-block census did
/// not grow.
pub fn stabilize_index<F>(builder: F, k1: usize, k2: usize) -> Result<IndexReport>
where
    F: Fn(usize) -> Result<(ChiralProblem, TruncationPolicy)>,
{
    if k1 == 0 || k2 < 2 * k1 {
        return Err(Error::InvalidArgument(format!(
            "stabilization needs K2 >= 2 K1 > 0, got K1 = {k1}, K2 = {k2}"
        )));
    }
    let (p1, pol1) = builder(k1)?;
    let first = p1.run(&pol1)?;
    let (p2, pol2) = builder(k2)?;
    let mut second = p2.run(&pol2)?;
    let agreed = first.finite
        && second.finite
        && first.index == second.index
        && first.dim_ker_l == second.dim_ker_l
        && first.dim_ker_r == second.dim_ker_r
        && second.zero_block_census <= first.zero_block_census;
    second.stabilization = Some(Stabilization {
        cutoffs: [k1, k2],
        indices: [first.index, second.index],
        dim_ker_l: [first.dim_ker_l, second.dim_ker_l],
        dim_ker_r: [first.dim_ker_r, second.dim_ker_r],
        zero_block_census: [first.zero_block_census, second.zero_block_census],
        agreed,
    });
    if !agreed {
        let mut why = Vec::new();
        if !first.finite || !second.finite {
            why.push("a run was not finite".to_string());
        }
        if first.index != second.index {
            why.push(format!("indices {:?} vs {:?}", first.index, second.index));
        }
        if first.dim_ker_l != second.dim_ker_l || first.dim_ker_r != second.dim_ker_r {
            why.push(format!(
                "kernel dimensions ({}, {}) vs ({}, {})",
                first.dim_ker_l, first.dim_ker_r, second.dim_ker_l, second.dim_ker_r
            ));
        }
        if second.zero_block_census > first.zero_block_census {
            why.push(format!(
                "zero-block census grew from {} to {}",
                first.zero_block_census, second.zero_block_census
            ));
        }
        second.mark_infinite(format!(
            "no stabilization between K = {k1} and K = {k2}: {}",
            why.join("; ")
        ));
    }
    Ok(second)
}

/// Sine of the largest principal angle between the span of `vectors` and
/// the coordinate subspace of `target`. Returns 1 when dimensions differ.
pub fn subspace_sine(vectors: &[KernelVector], target: &[BasisLabel]) -> f64 {
    if vectors.len() != target.len() {
        return 1.0;
    }
    if vectors.is_empty() {
        return 0.0;
    }
    let mut off: Vec<BasisLabel> = vectors
        .iter()
        .flat_map(|v| v.coefficients.iter().map(|(l, _)| *l))
        .filter(|l| !target.contains(l))
        .collect();
    off.sort();
    off.dedup();
    if off.is_empty() {
        return 0.0;
    }
    let m = DMatrix::from_fn(off.len(), vectors.len(), |i, j| {
        vectors[j]
            .coefficients
            .iter()
            .find(|(l, _)| *l == off[i])
            .map(|(_, z)| *z)
            .unwrap_or_default()
    });
    m.singular_values().iter().copied().fold(0.0, f64::max)
}
