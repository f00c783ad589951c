//! Discrete causal fermion systems: weighted finite-rank self-adjoint
//! operators with pseudoscalar data, and the signature operators they induce.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Basis, BasisLabel, SparseComplexOperator, C64};

const SELF_ADJOINT_TOL: f64 = 1e-12;
const PSEUDOSCALAR_TOL: f64 = 1e-10;
const EIGEN_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct CfsPoint {
    pub x: SparseComplexOperator,
    pub gamma: SparseComplexOperator,
    pub weight: f64,
}

/// Maximal violations found by [`validate_pseudoscalar`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PseudoscalarReport {
    pub valid: bool,
    pub self_adjoint_violation: f64,
    pub positive_eigenvalues: usize,
    pub negative_eigenvalues: usize,
    /// ‖Γ(I − P)‖ with P the projector onto the range of x.
    pub gamma_off_spin_space: f64,
    /// ‖(I − P) Γ P‖.
    pub gamma_leaves_spin_space: f64,
    /// Largest entry of xΓ + Γ*x.
    pub anticommutation_violation: f64,
}

/// Checks the point conditions for spin dimension `spin_dim`.
pub fn validate_pseudoscalar(point: &CfsPoint, spin_dim: usize) -> PseudoscalarReport {
    let x = &point.x;
    let g = &point.gamma;
    let self_adjoint_violation = x.max_abs_diff(&x.adjoint()).unwrap_or(f64::INFINITY);

    // Everything happens on the labels touched by x or Γ; both vanish elsewhere.
    let support: BTreeSet<usize> = x
        .raw_entries()
        .chain(g.raw_entries())
        .flat_map(|(r, c, _)| [r, c])
        .collect();
    let idx: Vec<usize> = support.into_iter().collect();
    let d = idx.len();
    let dense_x = DMatrix::from_fn(d, d, |i, j| x.get_at(idx[i], idx[j]));
    let dense_g = DMatrix::from_fn(d, d, |i, j| g.get_at(idx[i], idx[j]));

    let (mut pos, mut neg) = (0, 0);
    let mut projector = DMatrix::<C64>::zeros(d, d);
    if d > 0 {
        let herm = (&dense_x + dense_x.adjoint()) * C64::new(0.5, 0.0);
        let eig = herm.symmetric_eigen();
        let scale = eig.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda.abs() <= EIGEN_TOL * scale.max(1.0) {
                continue;
            }
            if lambda > 0.0 {
                pos += 1;
            } else {
                neg += 1;
            }
            let v = eig.eigenvectors.column(j);
            projector += &v * v.adjoint();
        }
    }
    let complement = DMatrix::<C64>::identity(d, d) - &projector;
    let spectral_norm =
        |m: &DMatrix<C64>| m.singular_values().iter().copied().fold(0.0_f64, f64::max);
    let gamma_off_spin_space = if d == 0 { 0.0 } else { spectral_norm(&(&dense_g * &complement)) };
    let gamma_leaves_spin_space = if d == 0 {
        0.0
    } else {
        spectral_norm(&(&complement * &dense_g * &projector))
    };
    let anti = &dense_x * &dense_g + dense_g.adjoint() * &dense_x;
    let anticommutation_violation = anti.iter().fold(0.0_f64, |m, z| m.max(z.norm()));

    let valid = self_adjoint_violation <= SELF_ADJOINT_TOL
        && pos <= spin_dim
        && neg <= spin_dim
        && gamma_off_spin_space <= PSEUDOSCALAR_TOL
        && gamma_leaves_spin_space <= PSEUDOSCALAR_TOL
        && anticommutation_violation <= PSEUDOSCALAR_TOL;
    PseudoscalarReport {
        valid,
        self_adjoint_violation,
        positive_eigenvalues: pos,
        negative_eigenvalues: neg,
        gamma_off_spin_space,
        gamma_leaves_spin_space,
        anticommutation_violation,
    }
}

/// A finite measure on operators of an N-dimensional Hilbert space.
#[derive(Debug, Clone)]
pub struct DiscreteCfs {
    hilbert_dim: usize,
    spin_dim: usize,
    basis: Basis,
    points: Vec<CfsPoint>,
}

impl DiscreteCfs {
    pub fn new(hilbert_dim: usize, spin_dim: usize, points: Vec<CfsPoint>) -> Result<Self> {
        if hilbert_dim == 0 || spin_dim == 0 {
            return Err(Error::InvalidArgument(
                "Hilbert and spin dimensions must be positive".into(),
            ));
        }
        let basis = Basis::sequence(hilbert_dim);
        for (i, pt) in points.iter().enumerate() {
            for op in [&pt.x, &pt.gamma] {
                if op.domain() != &basis || op.codomain() != &basis {
                    return Err(Error::DimensionMismatch(format!(
                        "point {i} does not act on the {hilbert_dim}-dimensional space"
                    )));
                }
            }
            if !(pt.weight > 0.0 && pt.weight.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "point {i} has non-positive weight {}",
                    pt.weight
                )));
            }
        }
        Ok(Self {
            hilbert_dim,
            spin_dim,
            basis,
            points,
        })
    }

    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    pub fn spin_dim(&self) -> usize {
        self.spin_dim
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn points(&self) -> &[CfsPoint] {
        &self.points
    }

    pub fn validate(&self) -> Vec<PseudoscalarReport> {
        self.points
            .iter()
            .map(|p| validate_pseudoscalar(p, self.spin_dim))
            .collect()
    }

    /// The same system with Γ(x) replaced by −Γ(x) at every point.
    pub fn negate_gamma(&self) -> Self {
        let mut out = self.clone();
        for p in &mut out.points {
            p.gamma = p.gamma.scale(C64::new(-1.0, 0.0));
        }
        out
    }

    fn fold<F>(&self, term: F) -> Result<SparseComplexOperator>
    where
        F: Fn(&CfsPoint) -> Result<SparseComplexOperator>,
    {
        let mut acc = SparseComplexOperator::zero(self.basis.clone(), self.basis.clone());
        for p in &self.points {
            acc = acc.try_add(&term(p)?.scale(C64::new(-p.weight, 0.0)))?;
        }
        Ok(acc)
    }

    /// S = −Σ w x.
    pub fn assemble_signature(&self) -> Result<SparseComplexOperator> {
        self.fold(|p| Ok(p.x.clone()))
    }

    /// S_L = −Σ w x χ_L with χ_L = (I − Γ)/2, and S_R = S_L*.
    pub fn assemble_chiral(&self) -> Result<(SparseComplexOperator, SparseComplexOperator)> {
        let s_l = self.fold(|p| chiral_term(p, -1.0))?;
        let s_r = s_l.adjoint();
        Ok((s_l, s_r))
    }

    /// −Σ w x χ_R with χ_R = (I + Γ)/2, assembled directly.
    pub fn assemble_chiral_right(&self) -> Result<SparseComplexOperator> {
        self.fold(|p| chiral_term(p, 1.0))
    }

    pub fn to_doc(&self) -> CfsDoc {
        let triplets = |op: &SparseComplexOperator| {
            op.raw_entries()
                .map(|(r, c, v)| (r + 1, c + 1, v.re, v.im))
                .collect()
        };
        CfsDoc {
            hilbert_dim: self.hilbert_dim,
            spin_dim: self.spin_dim,
            points: self
                .points
                .iter()
                .map(|p| PointDoc {
                    weight: p.weight,
                    x: triplets(&p.x),
                    gamma: triplets(&p.gamma),
                })
                .collect(),
        }
    }

    pub fn from_doc(doc: &CfsDoc) -> Result<Self> {
        let basis = Basis::sequence(doc.hilbert_dim);
        let build = |trip: &[(usize, usize, f64, f64)]| {
            SparseComplexOperator::from_triplets(
                basis.clone(),
                basis.clone(),
                trip.iter()
                    .map(|&(r, c, re, im)| (BasisLabel::Seq(r), BasisLabel::Seq(c), C64::new(re, im))),
            )
        };
        let points = doc
            .points
            .iter()
            .map(|p| {
                Ok(CfsPoint {
                    x: build(&p.x)?,
                    gamma: build(&p.gamma)?,
                    weight: p.weight,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(doc.hilbert_dim, doc.spin_dim, points)
    }
}

/// x (I + sign·Γ) / 2.
fn chiral_term(p: &CfsPoint, sign: f64) -> Result<SparseComplexOperator> {
    let xg = p.x.compose(&p.gamma)?;
    Ok(p.x.try_add(&xg.scale(C64::new(sign, 0.0)))?.scale(C64::new(0.5, 0.0)))
}

/// JSON form of a [`DiscreteCfs`]; triplets are (row, col, re, im), 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CfsDoc {
    pub hilbert_dim: usize,
    pub spin_dim: usize,
    pub points: Vec<PointDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointDoc {
    pub weight: f64,
    pub x: Vec<(usize, usize, f64, f64)>,
    pub gamma: Vec<(usize, usize, f64, f64)>,
}

/// Points k = 1..N−p with x_k = −(E_{k,k+p} + E_{k+p,k}) and
/// Γ(x_k) = E_{k,k} − E_{k+p,k+p}, counting measure, spin dimension 1.
pub fn build_shift_cfs(p: usize, n: usize) -> Result<DiscreteCfs> {
    if p == 0 || n < p + 2 {
        return Err(Error::InvalidArgument(format!(
            "shift system needs p >= 1 and N >= p + 2, got p = {p}, N = {n}"
        )));
    }
    let basis = Basis::sequence(n);
    let one = C64::new(1.0, 0.0);
    let points = (1..=n - p)
        .map(|k| {
            let (a, b) = (BasisLabel::Seq(k), BasisLabel::Seq(k + p));
            let x = SparseComplexOperator::from_triplets(
                basis.clone(),
                basis.clone(),
                [(a, b, -one), (b, a, -one)],
            )?;
            let gamma = SparseComplexOperator::from_triplets(
                basis.clone(),
                basis.clone(),
                [(a, a, one), (b, b, -one)],
            )?;
            Ok(CfsPoint { x, gamma, weight: 1.0 })
        })
        .collect::<Result<Vec<_>>>()?;
    DiscreteCfs::new(n, 1, points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::{noether_index, TruncationPolicy};
    use proptest::prelude::*;

    fn s(i: usize) -> BasisLabel {
        BasisLabel::Seq(i)
    }

    fn apply_real(op: &SparseComplexOperator, u: &[f64]) -> Vec<f64> {
        let v: Vec<C64> = u.iter().map(|&x| C64::new(x, 0.0)).collect();
        op.apply(&v).unwrap().iter().map(|z| z.re).collect()
    }

    #[test]
    fn shift_point_matches_displayed_action() {
        let sys = build_shift_cfs(1, 3).unwrap();
        let p = &sys.points()[0];
        let u = [2.0, 3.0, 5.0];
        assert_eq!(apply_real(&p.x, &u), vec![-3.0, -2.0, 0.0]);
        assert_eq!(apply_real(&p.gamma, &u), vec![2.0, -3.0, 0.0]);
    }

    #[test]
    fn shift_points_are_valid() {
        for p in 1..=3 {
            let sys = build_shift_cfs(p, 20 * p).unwrap();
            for r in sys.validate() {
                assert!(r.valid, "{r:?}");
                assert_eq!((r.positive_eigenvalues, r.negative_eigenvalues), (1, 1));
            }
        }
    }

    #[test]
    fn shift_point_eigenvalues_are_plus_minus_one() {
        let sys = build_shift_cfs(2, 10).unwrap();
        for p in sys.points() {
            let mut ev: Vec<f64> = p.x.to_dense().symmetric_eigen().eigenvalues.iter().copied().collect();
            ev.sort_by(f64::total_cmp);
            assert!((ev[0] + 1.0).abs() < 1e-12);
            assert!((ev[9] - 1.0).abs() < 1e-12);
            assert!(ev[1..9].iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn zero_gamma_is_valid_and_identity_gamma_is_not() {
        let sys = build_shift_cfs(1, 3).unwrap();
        let x = sys.points()[0].x.clone();
        let zero = CfsPoint {
            x: x.clone(),
            gamma: SparseComplexOperator::zero(sys.basis().clone(), sys.basis().clone()),
            weight: 1.0,
        };
        assert!(validate_pseudoscalar(&zero, 1).valid);
        let id = CfsPoint {
            x,
            gamma: SparseComplexOperator::identity(sys.basis().clone()),
            weight: 1.0,
        };
        let r = validate_pseudoscalar(&id, 1);
        assert!(!r.valid);
        assert!(r.anticommutation_violation > 1.0);
    }

    #[test]
    fn single_point_signature() {
        let b = Basis::sequence(2);
        let x = SparseComplexOperator::from_triplets(
            b.clone(),
            b.clone(),
            [(s(1), s(1), C64::new(1.0, 0.0)), (s(2), s(2), C64::new(-1.0, 0.0))],
        )
        .unwrap();
        let gamma = SparseComplexOperator::zero(b.clone(), b);
        let sys = DiscreteCfs::new(2, 1, vec![CfsPoint { x, gamma, weight: 1.0 }]).unwrap();
        let sig = sys.assemble_signature().unwrap();
        assert_eq!(sig.get(&s(1), &s(1)), C64::new(-1.0, 0.0));
        assert_eq!(sig.get(&s(2), &s(2)), C64::new(1.0, 0.0));
    }

    #[test]
    fn empty_system_has_zero_signature() {
        let sys = DiscreteCfs::new(4, 1, Vec::new()).unwrap();
        assert!(sys.assemble_signature().unwrap().is_zero());
    }

    #[test]
    fn shift_signature_is_tridiagonal() {
        let sig = build_shift_cfs(1, 4).unwrap().assemble_signature().unwrap();
        let mut expected = Vec::new();
        for k in 1..4 {
            expected.push((s(k), s(k + 1), C64::new(1.0, 0.0)));
            expected.push((s(k + 1), s(k), C64::new(1.0, 0.0)));
        }
        let b = Basis::sequence(4);
        let want = SparseComplexOperator::from_triplets(b.clone(), b, expected).unwrap();
        assert_eq!(sig.max_abs_diff(&want).unwrap(), 0.0);
    }

    #[test]
    fn chiral_operators_are_the_shifts() {
        let (s_l, s_r) = build_shift_cfs(1, 5).unwrap().assemble_chiral().unwrap();
        let u = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(apply_real(&s_l, &u), vec![2.0, 3.0, 4.0, 5.0, 0.0]);
        assert_eq!(apply_real(&s_r, &u), vec![0.0, 1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn splitting_reproduces_signature() {
        let sys = build_shift_cfs(1, 50).unwrap();
        let (s_l, s_r) = sys.assemble_chiral().unwrap();
        let sum = s_l.try_add(&s_r).unwrap();
        assert!(sum.max_abs_diff(&sys.assemble_signature().unwrap()).unwrap() <= 1e-10);
    }

    #[test]
    fn shift_index_is_p_and_flips_with_gamma() {
        for p in 1..=3 {
            let sys = build_shift_cfs(p, 20 * p).unwrap();
            let policy = TruncationPolicy::new(20 * p).unwrap();
            let (s_l, _) = sys.assemble_chiral().unwrap();
            assert_eq!(noether_index(&s_l, &policy).unwrap().index, Some(p as i64));
            let (neg_l, _) = sys.negate_gamma().assemble_chiral().unwrap();
            assert_eq!(noether_index(&neg_l, &policy).unwrap().index, Some(-(p as i64)));
        }
    }

    #[test]
    fn too_small_shift_rejected() {
        assert!(build_shift_cfs(1, 3).is_ok());
        assert!(build_shift_cfs(2, 3).is_err());
        assert!(build_shift_cfs(0, 10).is_err());
    }

    #[test]
    fn json_round_trip() {
        let sys = build_shift_cfs(2, 8).unwrap();
        let text = serde_json::to_string(&sys.to_doc()).unwrap();
        let back = DiscreteCfs::from_doc(&serde_json::from_str(&text).unwrap()).unwrap();
        let (a, _) = sys.assemble_chiral().unwrap();
        let (b, _) = back.assemble_chiral().unwrap();
        assert_eq!(a.max_abs_diff(&b).unwrap(), 0.0);
        assert!(text.contains("[1,3,-1.0,0.0]"));
    }

    #[test]
    fn json_rejects_unknown_keys_and_bad_indices() {
        let bad = r#"{"hilbert_dim":3,"spin_dim":1,"points":[],"extra":1}"#;
        assert!(serde_json::from_str::<CfsDoc>(bad).is_err());
        let doc: CfsDoc = serde_json::from_str(
            r#"{"hilbert_dim":3,"spin_dim":1,"points":[{"weight":1,"x":[[4,1,1,0]],"gamma":[]}]}"#,
        )
        .unwrap();
        assert!(DiscreteCfs::from_doc(&doc).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn right_chirality_route_matches_adjoint(p in 1usize..4, extra in 1usize..30) {
            let sys = build_shift_cfs(p, p + 2 + extra).unwrap();
            let (_, s_r) = sys.assemble_chiral().unwrap();
            let direct = sys.assemble_chiral_right().unwrap();
            prop_assert!(direct.max_abs_diff(&s_r).unwrap() <= 1e-10);
        }

        #[test]
        fn negating_gamma_swaps_chiralities(p in 1usize..4, extra in 1usize..30) {
            let sys = build_shift_cfs(p, p + 2 + extra).unwrap();
            let (s_l, s_r) = sys.assemble_chiral().unwrap();
            let (n_l, n_r) = sys.negate_gamma().assemble_chiral().unwrap();
            prop_assert_eq!(n_l.max_abs_diff(&s_r).unwrap(), 0.0);
            prop_assert_eq!(n_r.max_abs_diff(&s_l).unwrap(), 0.0);
        }
    }
}
