//! Finite-lifetime examples, conformal-bump coefficient asymptotics and
//! homotopy sweeps with index tracking.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::angle::Angle;
use crate::error::{Error, Result};
use crate::index::{stabilize_index, ChiralProblem, IndexReport, PolicySettings};
use crate::spectral::{Basis, BasisLabel, Chirality, Frequency, SparseComplexOperator, C64};

pub const MIN_GRID: usize = 4096;
/// Grid for the asymptotic check; the trapezoid endpoint error grows like k³h².
pub const ASYMPTOTIC_GRID: usize = (1 << 20) + 1;
const LIPSCHITZ_SLACK: f64 = 1e-9;

/// Plane waves e^{±ikt + ikφ}: ω_{k,L} = −k, ω_{k,R} = k.
pub fn lifetime_mode(k: i64, c: Chirality) -> BasisLabel {
    let omega = match c {
        Chirality::L => -k,
        Chirality::R => k,
    };
    BasisLabel::mode(k, c, Frequency::integer(omega))
}

fn lifetime_basis(cutoff: usize, c: Chirality) -> Basis {
    let k = cutoff as i64;
    Basis::new((-k..=k).map(|k| lifetime_mode(k, c)).collect()).expect("distinct momenta")
}

/// ⟨e_{k,R} | e_{k,L}⟩ on (0, T) × S¹: T/2π for k = 0, else (e^{2ikT} − 1)/(4πik).
pub fn lifetime_pairing(k: i64, t: &Angle) -> C64 {
    if k == 0 {
        return C64::new(t.value() / TAU, 0.0);
    }
    (t.exp_2ik(k) - 1.0) / C64::new(0.0, 4.0 * PI * k as f64)
}

/// S on span(e_{k,L}, e_{k,R}), in that order. The (R, L) entry is the
/// pairing c_k and the (L, R) entry its conjugate, so the block is Hermitian.
pub fn lifetime_block(k: i64, t: &Angle) -> SparseComplexOperator {
    let basis = Basis::new(vec![
        lifetime_mode(k, Chirality::L),
        lifetime_mode(k, Chirality::R),
    ])
    .expect("distinct");
    let ck = lifetime_pairing(k, t);
    let mut op = SparseComplexOperator::zero(basis.clone(), basis);
    op.add_at(1, 0, ck);
    op.add_at(0, 1, ck.conj());
    op
}

/// Number of k ≠ 0 with |k| ≤ K whose pairing vanishes exactly.
pub fn lifetime_census(t: &Angle, cutoff: usize) -> usize {
    let k = cutoff as i64;
    (-k..=k)
        .filter(|&k| k != 0 && lifetime_pairing(k, t) == C64::new(0.0, 0.0))
        .count()
}

/// Odd-case restrictions for diagonal pairings `c(k)`.
fn diagonal_odd(cutoff: usize, c: impl Fn(i64) -> C64) -> Result<ChiralProblem> {
    let left_b = lifetime_basis(cutoff, Chirality::L);
    let right_b = lifetime_basis(cutoff, Chirality::R);
    let mut left = SparseComplexOperator::zero(left_b, right_b);
    for (i, k) in (-(cutoff as i64)..=cutoff as i64).enumerate() {
        left.add_at(i, i, c(k));
    }
    let right = left.adjoint();
    Ok(ChiralProblem::Odd { left, right })
}

pub fn lifetime_problem(t: &Angle, cutoff: usize) -> Result<ChiralProblem> {
    if !(t.value() > 0.0) {
        return Err(Error::InvalidArgument(format!("lifetime T = {t} must be positive")));
    }
    diagonal_odd(cutoff, |k| lifetime_pairing(k, t))
}

/// S_R restricted to H_R, from ⟨e_{k,L} | e_{k,R}⟩ = (e^{−2ikT} − 1)/(−4πik).
pub fn lifetime_right(t: &Angle, cutoff: usize) -> SparseComplexOperator {
    let mut right = SparseComplexOperator::zero(
        lifetime_basis(cutoff, Chirality::R),
        lifetime_basis(cutoff, Chirality::L),
    );
    for (i, k) in (-(cutoff as i64)..=cutoff as i64).enumerate() {
        let v = if k == 0 {
            C64::new(t.value() / TAU, 0.0)
        } else {
            (t.exp_2ik(-k) - 1.0) / C64::new(0.0, -4.0 * PI * k as f64)
        };
        right.add_at(i, i, v);
    }
    right
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LifetimeOutcome {
    pub report: IndexReport,
    /// Degenerate blocks at K/2 and at K.
    pub census: [usize; 2],
}

/// ind₀ stabilized between K/2 and K, with the degenerate-block census.
pub fn lifetime_index0(t: &Angle, cutoff: usize, settings: &PolicySettings) -> Result<LifetimeOutcome> {
    let half = cutoff / 2;
    let report = stabilize_index(
        |k| Ok((lifetime_problem(t, k)?, settings.policy_for(k)?)),
        half,
        cutoff,
    )?;
    Ok(LifetimeOutcome {
        report,
        census: [lifetime_census(t, half), lifetime_census(t, cutoff)],
    })
}

/// f(t) = amplitude · cos^power(πt / 2T) on [0, T].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpProfile {
    pub amplitude: f64,
    pub power: u32,
}

impl BumpProfile {
    pub const COS4: BumpProfile = BumpProfile {
        amplitude: 1.0,
        power: 4,
    };

    pub fn eval(&self, t: f64, t_end: f64) -> f64 {
        self.amplitude * (PI * t / (2.0 * t_end)).cos().powi(self.power as i32)
    }

    /// Values at t_j = jT/(M−1), j = 0..M.
    pub fn samples(&self, t_end: f64, m: usize) -> Vec<f64> {
        uniform_grid(t_end, m).map(|t| self.eval(t, t_end)).collect()
    }
}

fn uniform_grid(t_end: f64, m: usize) -> impl Iterator<Item = f64> {
    let h = t_end / (m - 1) as f64;
    (0..m).map(move |j| j as f64 * h)
}

/// c_k = (1/2π) ∫₀^T f(t) e^{2ikt} dt by the trapezoid rule.
///
/// `samples` are values on the closed uniform grid over [0, T].
pub fn conformal_coeff(samples: &[f64], t_end: f64, k: i64) -> Result<C64> {
    let m = samples.len();
    if m < MIN_GRID {
        return Err(Error::GridTooCoarse {
            have: m,
            need: MIN_GRID,
        });
    }
    if !(t_end > 0.0) {
        return Err(Error::InvalidArgument(format!("T = {t_end} must be positive")));
    }
    let h = t_end / (m - 1) as f64;
    let theta = 2.0 * k as f64 * h;
    let step = C64::from_polar(1.0, theta);
    let mut acc = C64::new(0.0, 0.0);
    let mut phase = C64::new(1.0, 0.0);
    for (j, &f) in samples.iter().enumerate() {
        // Re-seed the rotation periodically so rounding does not accumulate.
        if j % 64 == 0 {
            phase = C64::from_polar(1.0, theta * j as f64);
        }
        let w = if j == 0 || j == m - 1 { 0.5 } else { 1.0 };
        acc += phase * (w * f);
        phase *= step;
    }
    Ok(acc * h / TAU)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignResidual {
    pub sign: i8,
    /// max over k of k²·|c_k − σ f(0)/(4πik)|.
    pub max: f64,
    /// The same quantity at the lower end of the range.
    pub at_lower: f64,
    /// max ≤ 1.25 · at_lower.
    pub bounded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticReport {
    pub k_range: [i64; 2],
    pub f0: f64,
    pub residuals: [SignResidual; 2],
    /// The sign whose residual is bounded, when exactly one is.
    pub matching_sign: Option<i8>,
}

/// Residuals of c_k against ±f(0)/(4πik) for k ∈ [K/2, K].
pub fn asymptotic_check(samples: &[f64], t_end: f64, cutoff: usize) -> Result<AsymptoticReport> {
    if cutoff < 2 {
        return Err(Error::InvalidArgument("cutoff must be at least 2".into()));
    }
    let lo = (cutoff / 2) as i64;
    let hi = cutoff as i64;
    let f0 = samples.first().copied().unwrap_or(0.0);
    let coeffs: Vec<(i64, C64)> = (lo..=hi)
        .map(|k| Ok((k, conformal_coeff(samples, t_end, k)?)))
        .collect::<Result<_>>()?;
    let residual = |sigma: f64| {
        let vals: Vec<f64> = coeffs
            .iter()
            .map(|&(k, c)| {
                let lead = C64::new(sigma * f0, 0.0) / C64::new(0.0, 4.0 * PI * k as f64);
                (k * k) as f64 * (c - lead).norm()
            })
            .collect();
        let max = vals.iter().copied().fold(0.0, f64::max);
        SignResidual {
            sign: sigma as i8,
            max,
            at_lower: vals[0],
            bounded: max <= 1.25 * vals[0],
        }
    };
    let residuals = [residual(1.0), residual(-1.0)];
    let matching_sign = match (residuals[0].bounded, residuals[1].bounded) {
        (true, false) => Some(1),
        (false, true) => Some(-1),
        _ => None,
    };
    Ok(AsymptoticReport {
        k_range: [lo, hi],
        f0,
        residuals,
        matching_sign,
    })
}

/// Odd-case restrictions for the conformal lifetime model at cutoff K.
pub fn conformal_problem(samples: &[f64], t_end: f64, cutoff: usize) -> Result<ChiralProblem> {
    let k = cutoff as i64;
    let mut coeffs = Vec::with_capacity(2 * cutoff + 1);
    for j in -k..=k {
        coeffs.push(conformal_coeff(samples, t_end, j)?);
    }
    diagonal_odd(cutoff, |j| coeffs[(j + k) as usize])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum PathFamily {
    /// Lifetime T interpolated linearly.
    Lifetime { from: Angle, to: Angle },
    /// Bump f_s = (1 − s) f_from + s f_to on a fixed lifetime.
    Conformal {
        t_end: Angle,
        from: BumpProfile,
        to: BumpProfile,
        grid: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomotopyPath {
    pub steps: usize,
    pub family: PathFamily,
}

impl HomotopyPath {
    /// s_i = i/(steps − 1).
    pub fn parameters(&self) -> Vec<f64> {
        let n = self.steps;
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }

    fn describe(&self, s: f64) -> String {
        match &self.family {
            PathFamily::Lifetime { from, to } => format!("T = {}", Angle::lerp(*from, *to, s)),
            PathFamily::Conformal { .. } => format!("s = {s}"),
        }
    }

    fn problem(&self, s: f64, cutoff: usize) -> Result<ChiralProblem> {
        match &self.family {
            PathFamily::Lifetime { from, to } => lifetime_problem(&Angle::lerp(*from, *to, s), cutoff),
            PathFamily::Conformal {
                t_end,
                from,
                to,
                grid,
            } => {
                let t = t_end.value();
                let a = from.samples(t, *grid);
                let b = to.samples(t, *grid);
                let f: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (1.0 - s) * x + s * y).collect();
                if !(f[0] > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "interpolated bump has f(0) = {} at s = {s}",
                        f[0]
                    )));
                }
                conformal_problem(&f, t, cutoff)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "step", rename_all = "lowercase")]
pub enum Verdict {
    Constant,
    Jump(usize),
    Undefined(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepStep {
    pub s: f64,
    pub parameter: String,
    pub report: IndexReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub steps: Vec<SweepStep>,
    /// ‖S_L(s_{i+1}) − S_L(s_i)‖ at the larger cutoff.
    pub continuity: Vec<f64>,
    /// The same with column k scaled by (1 + k²)^{1/2}.
    pub sobolev_continuity: Vec<f64>,
    /// Constant estimated from the first two differences, per unit of s.
    pub lipschitz_constant: f64,
    pub lipschitz_ok: bool,
    pub verdict: Verdict,
}

fn sobolev_weighted(op: &SparseComplexOperator) -> DMatrix<C64> {
    let mut dense = op.to_dense();
    for (j, label) in op.domain().labels().iter().enumerate() {
        let k = label.position_like() as f64;
        let w = (1.0 + k * k).sqrt();
        dense.column_mut(j).scale_mut(w);
    }
    dense
}

fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

/// Index along `s_i = i/(steps−1)`, stabilized between K/2 and K at each step.
pub fn sweep_with<F>(
    params: &[f64],
    cutoff: usize,
    settings: &PolicySettings,
    describe: impl Fn(f64) -> String,
    builder: F,
) -> Result<SweepReport>
where
    F: Fn(f64, usize) -> Result<ChiralProblem>,
{
    if params.len() < 3 {
        return Err(Error::InvalidArgument("a sweep needs at least 3 steps".into()));
    }
    if params.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("sweep parameters must increase".into()));
    }
    let mut steps = Vec::with_capacity(params.len());
    let mut operators = Vec::with_capacity(params.len());
    for &s in params {
        let report = stabilize_index(
            |k| Ok((builder(s, k)?, settings.policy_for(k)?)),
            cutoff / 2,
            cutoff,
        )?;
        operators.push(builder(s, cutoff)?.s_l().clone());
        steps.push(SweepStep {
            s,
            parameter: describe(s),
            report,
        });
    }
    let mut continuity = Vec::new();
    let mut sobolev_continuity = Vec::new();
    for w in operators.windows(2) {
        let diff = w[1].try_sub(&w[0])?;
        continuity.push(spectral_norm(&diff.to_dense()));
        sobolev_continuity.push(spectral_norm(&sobolev_weighted(&diff)));
    }
    let h0 = params[1] - params[0];
    let h1 = params[2] - params[1];
    let lipschitz_constant = (continuity[0] / h0).max(continuity[1] / h1);
    let lipschitz_ok = continuity
        .iter()
        .zip(params.windows(2))
        .all(|(d, w)| *d <= lipschitz_constant * (w[1] - w[0]) * (1.0 + LIPSCHITZ_SLACK) + 1e-15);

    let verdict = if let Some(i) = steps.iter().position(|st| !st.report.finite) {
        Verdict::Undefined(i)
    } else if let Some(i) = (1..steps.len()).find(|&i| steps[i].report.index != steps[i - 1].report.index) {
        Verdict::Jump(i)
    } else {
        Verdict::Constant
    };
    Ok(SweepReport {
        steps,
        continuity,
        sobolev_continuity,
        lipschitz_constant,
        lipschitz_ok,
        verdict,
    })
}

pub fn homotopy_sweep(path: &HomotopyPath, cutoff: usize, settings: &PolicySettings) -> Result<SweepReport> {
    if path.steps < 3 {
        return Err(Error::InvalidArgument("a sweep needs at least 3 steps".into()));
    }
    if let PathFamily::Conformal { grid, .. } = &path.family {
        if *grid < MIN_GRID {
            return Err(Error::GridTooCoarse {
                have: *grid,
                need: MIN_GRID,
            });
        }
    }
    sweep_with(
        &path.parameters(),
        cutoff,
        settings,
        |s| path.describe(s),
        |s, k| path.problem(s, k),
    )
}
