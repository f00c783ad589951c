//! Massless odd model on (0, 2π) × S¹ with a conformal factor f(φ).

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{stabilize_index, ChiralProblem, IndexReport, PolicySettings};
use crate::spectral::{Basis, BasisLabel, Chirality, Frequency, SparseComplexOperator, C64};

/// ω_{k,L} = −k; ω_{k,R} = k for k ≤ 0 and k + p for k > 0.
pub fn dispersion(k: i64, p: u32, c: Chirality) -> Frequency {
    match c {
        Chirality::L => Frequency::integer(-k),
        Chirality::R if k <= 0 => Frequency::integer(k),
        Chirality::R => Frequency::integer(k + i64::from(p)),
    }
}

pub fn torus_mode(k: i64, p: u32, c: Chirality) -> BasisLabel {
    BasisLabel::mode(k, c, dispersion(k, p, c))
}

/// Modes |k| ≤ K of one chirality, ordered by k.
pub fn chiral_basis(p: u32, cutoff: usize, c: Chirality) -> Basis {
    let k = cutoff as i64;
    Basis::new((-k..=k).map(|k| torus_mode(k, p, c)).collect()).expect("distinct momenta")
}

/// Coefficients f̂_k for |k| ≤ cutoff, with f = (1/2π) Σ f̂_k e^{ikφ}.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSeries {
    cutoff: usize,
    coeffs: Vec<C64>,
}

impl FourierSeries {
    pub fn from_fn<F: Fn(i64) -> C64>(cutoff: usize, f: F) -> Self {
        let k = cutoff as i64;
        Self {
            cutoff,
            coeffs: (-k..=k).map(f).collect(),
        }
    }

    /// f̂_k = 2π r^{|k|}, the coefficients of (1 − r²)/(1 − 2r cos φ + r²).
    pub fn poisson(r: f64, cutoff: usize) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "Poisson radius {r} must lie in (0, 1)"
            )));
        }
        Ok(Self::from_fn(cutoff, |k| {
            C64::new(TAU * r.powi(k.unsigned_abs() as i32), 0.0)
        }))
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn coeff(&self, k: i64) -> Result<C64> {
        if k.unsigned_abs() as usize > self.cutoff {
            return Err(Error::OutsideCutoff(k));
        }
        Ok(self.coeffs[(k + self.cutoff as i64) as usize])
    }

    /// Largest violation of f̂_{−k} = conj(f̂_k).
    pub fn realness_defect(&self) -> f64 {
        let k = self.cutoff as i64;
        (0..=k)
            .map(|j| (self.coeff(-j).unwrap() - self.coeff(j).unwrap().conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Every coefficient multiplied by e^{iθ}; the result is generally not real.
    pub fn rotated(&self, theta: f64) -> Self {
        let phase = C64::from_polar(1.0, theta);
        Self {
            cutoff: self.cutoff,
            coeffs: self.coeffs.iter().map(|z| z * phase).collect(),
        }
    }

    pub fn evaluate(&self, phi: f64) -> C64 {
        let k0 = self.cutoff as i64;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, z)| z * C64::from_polar(1.0, (i as i64 - k0) as f64 * phi))
            .sum::<C64>()
            / TAU
    }
}

/// Discrete Fourier coefficients of real samples on a uniform grid over [0, 2π).
///
/// The result is symmetrized so that f̂_{−k} = conj(f̂_k) exactly, and
/// coefficients below the roundoff floor of the sum are set to zero.
pub fn fourier_coefficients(samples: &[(f64, f64)], cutoff: usize) -> Result<FourierSeries> {
    let m = samples.len();
    let needed = 8 * cutoff.max(1);
    if m < needed {
        return Err(Error::AliasingRisk {
            samples: m,
            cutoff,
            needed,
        });
    }
    if let Some((phi, v)) = samples.iter().find(|(phi, v)| !phi.is_finite() || !v.is_finite()) {
        return Err(Error::NotRealValued(format!("non-finite sample f({phi}) = {v}")));
    }
    let h = TAU / m as f64;
    let floor = 1e-13 * h * samples.iter().map(|(_, v)| v.abs()).sum::<f64>();
    let raw = |k: i64| -> C64 {
        samples
            .iter()
            .map(|&(phi, v)| v * C64::from_polar(1.0, -(k as f64) * phi))
            .sum::<C64>()
            * h
    };
    let k = cutoff as i64;
    let mut coeffs = vec![C64::new(0.0, 0.0); 2 * cutoff + 1];
    for j in 0..=k {
        let sym = (raw(j) + raw(-j).conj()) * 0.5;
        let sym = if sym.norm() <= floor { C64::new(0.0, 0.0) } else { sym };
        coeffs[(k + j) as usize] = sym;
        coeffs[(k - j) as usize] = sym.conj();
    }
    coeffs[cutoff].im = 0.0;
    Ok(FourierSeries { cutoff, coeffs })
}

/// Uniform samples φ_j = 2πj/M of a function.
pub fn uniform_samples<F: Fn(f64) -> f64>(m: usize, f: F) -> Vec<(f64, f64)> {
    (0..m)
        .map(|j| {
            let phi = TAU * j as f64 / m as f64;
            (phi, f(phi))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum ConformalFactor {
    Poisson {
        r: f64,
    },
    /// Explicit coefficients as (k, re, im); missing negative momenta are
    /// filled in by conjugation, all others are zero.
    Fourier {
        coeffs: Vec<(i64, f64, f64)>,
    },
    /// Values on the uniform grid φ_j = 2πj/M.
    Samples(Vec<f64>),
}

impl ConformalFactor {
    pub fn series(&self, cutoff: usize) -> Result<FourierSeries> {
        match self {
            ConformalFactor::Poisson { r } => FourierSeries::poisson(*r, cutoff),
            ConformalFactor::Fourier { coeffs } => {
                let mut map: BTreeMap<i64, C64> = BTreeMap::new();
                for &(k, re, im) in coeffs {
                    if map.insert(k, C64::new(re, im)).is_some() {
                        return Err(Error::Config(format!("Fourier coefficient {k} given twice")));
                    }
                }
                for (&k, &v) in &map.clone() {
                    match map.get(&-k) {
                        Some(w) if (*w - v.conj()).norm() > 1e-12 * (1.0 + v.norm()) => {
                            return Err(Error::NotRealValued(format!(
                                "coefficients at {k} and {} are not conjugate",
                                -k
                            )));
                        }
                        Some(_) => {}
                        None => {
                            map.insert(-k, v.conj());
                        }
                    }
                }
                Ok(FourierSeries::from_fn(cutoff, |k| {
                    map.get(&k).copied().unwrap_or_default()
                }))
            }
            ConformalFactor::Samples(values) => {
                let m = values.len();
                let samples: Vec<(f64, f64)> = values
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| (TAU * j as f64 / m as f64, v))
                    .collect();
                fourier_coefficients(&samples, cutoff)
            }
        }
    }
}

/// S_L restricted to H_L (into H_R) and S_R restricted to H_R (into H_L).
///
/// The entry at (R_k, L_k') is f̂_{k−k'}/2π whenever ω_{k,R} = ω_{k',L}.
pub fn assemble_torus_sl(
    fhat: &FourierSeries,
    p: u32,
    cutoff: usize,
) -> Result<(SparseComplexOperator, SparseComplexOperator)> {
    if p == 0 || cutoff == 0 {
        return Err(Error::InvalidArgument("p and K must be positive".into()));
    }
    let need = 2 * cutoff + p as usize;
    if fhat.cutoff() < need {
        return Err(Error::InsufficientCutoff {
            have: fhat.cutoff(),
            need,
        });
    }
    let left = chiral_basis(p, cutoff, Chirality::L);
    let right = chiral_basis(p, cutoff, Chirality::R);
    let by_frequency: HashMap<Frequency, BasisLabel> = right
        .labels()
        .iter()
        .map(|l| match l {
            BasisLabel::Mode(m) => (m.omega, *l),
            BasisLabel::Seq(_) => unreachable!("torus bases hold modes"),
        })
        .collect();
    let mut s_l = SparseComplexOperator::zero(left.clone(), right);
    for col in left.labels() {
        let BasisLabel::Mode(m) = col else {
            unreachable!("torus bases hold modes")
        };
        if let Some(row) = by_frequency.get(&m.omega) {
            let k = row.position_like();
            let value = fhat.coeff(k - m.k)? / TAU;
            if value != C64::new(0.0, 0.0) {
                s_l.add(*row, *col, value)?;
            }
        }
    }
    let s_r = s_l.adjoint();
    Ok((s_l, s_r))
}

/// S_R restricted to H_R (into H_L) from its own matrix elements
/// f̂_{k′−k}/2π at (L_k′, R_k), without going through S_L.
pub fn assemble_torus_sr(fhat: &FourierSeries, p: u32, cutoff: usize) -> Result<SparseComplexOperator> {
    let (s_l, _) = assemble_torus_sl(fhat, p, cutoff)?;
    let mut s_r = SparseComplexOperator::zero(s_l.codomain().clone(), s_l.domain().clone());
    for (row, col, _) in s_l.entries() {
        let value = fhat.coeff(col.position_like() - row.position_like())? / TAU;
        s_r.add(col, row, value)?;
    }
    Ok(s_r)
}

/// Left modes ẽ_{−1,L} … ẽ_{−p,L}, which have no partner of equal frequency.
pub fn unpaired_left_modes(p: u32) -> Vec<BasisLabel> {
    (1..=i64::from(p))
        .map(|j| torus_mode(-j, p, Chirality::L))
        .collect()
}

/// ind₀ stabilized between K and 2K.
pub fn torus_index0(
    factor: &ConformalFactor,
    p: u32,
    cutoff: usize,
    settings: &PolicySettings,
) -> Result<IndexReport> {
    stabilize_index(
        |k| {
            let fhat = factor.series(2 * k + p as usize)?;
            let (left, right) = assemble_torus_sl(&fhat, p, k)?;
            Ok((ChiralProblem::Odd { left, right }, settings.policy_for(k)?))
        },
        cutoff,
        2 * cutoff,
    )
}
