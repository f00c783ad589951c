//! The spiral model on (0, 6π) × S¹: V-conjugated plane waves, the μ ansatz
//! and S_L on the full solution space.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::index::{stabilize_index, ChiralProblem, IndexReport, PolicySettings};
use crate::spectral::{Basis, BasisLabel, Chirality, SparseComplexOperator, C64};
use crate::torus::{dispersion, torus_mode};
use crate::trig::{integrate_triple, TrigPoly};

pub const POSITIVITY_GRID: usize = 96;

/// The two chiral components of a transformed plane wave.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigSpinor {
    pub left: TrigPoly,
    pub right: TrigPoly,
}

impl TrigSpinor {
    pub fn component(&self, c: Chirality) -> &TrigPoly {
        match c {
            Chirality::L => &self.left,
            Chirality::R => &self.right,
        }
    }
}

/// V e_{k,c}: the main term (1/2π) e^{−iωt + ikφ} in chirality c plus two
/// sidebands (iν/4π) e^{−i(ω ∓ 1/3)t + ikφ} in the opposite chirality.
pub fn v_conjugate_mode(k: i64, c: Chirality, p: u32, nu: f64) -> TrigSpinor {
    let n = -dispersion(k, p, c).thirds();
    let main = TrigPoly::monomial(n, k, C64::new(1.0 / TAU, 0.0));
    let side_amp = C64::new(0.0, nu / (4.0 * PI));
    let mut side = TrigPoly::monomial(n + 1, k, side_amp);
    side.add_term(n - 1, k, side_amp);
    match c {
        Chirality::L => TrigSpinor {
            left: main,
            right: side,
        },
        Chirality::R => TrigSpinor {
            left: side,
            right: main,
        },
    }
}

/// Coefficients of μ = 1 + a(φ)(1 − e^{2it/3} − e^{−2it/3}) + μ_vert(t).
#[derive(Debug, Clone, PartialEq)]
pub struct MuCoefficients {
    /// a_k for k ≠ 0; a(φ) = Σ_{k≥1} (a_k e^{ikφ} + conj(a_{−k}) e^{−ikφ}).
    pub a: BTreeMap<i64, C64>,
    /// b_n; μ_vert = Σ_n e^{int} (b_n e^{it/3} + conj(b_{−n}) e^{−it/3}).
    pub b: BTreeMap<i64, C64>,
    pub nu: f64,
    /// Declared smallness bound on every coefficient modulus.
    pub bound: f64,
}

impl MuCoefficients {
    /// Validates the coefficients. A missing a_{−k} is taken equal to a_k,
    /// which is what makes a(φ) real.
    pub fn new(
        mut a: BTreeMap<i64, C64>,
        b: BTreeMap<i64, C64>,
        nu: f64,
        bound: f64,
    ) -> Result<Self> {
        if nu == 0.0 || !nu.is_finite() {
            return Err(Error::InvalidArgument("nu must be a nonzero real".into()));
        }
        if a.contains_key(&0) {
            return Err(Error::InvalidArgument("a_0 is not part of the ansatz".into()));
        }
        let keys: Vec<i64> = a.keys().copied().collect();
        for k in keys {
            let v = a[&k];
            a.entry(-k).or_insert(v);
        }
        if let Some((k, v)) = a.iter().chain(b.iter()).find(|(_, v)| v.norm() > bound) {
            return Err(Error::InvalidArgument(format!(
                "coefficient at {k} has modulus {} above the bound {bound}",
                v.norm()
            )));
        }
        Ok(Self { a, b, nu, bound })
    }

    /// Geometric magnitudes `amplitude·decay^{|k|}` with seeded phases.
    ///
    /// a_{±1} and b_0 are left at zero: they would add self-links and
    /// same-chirality neighbour links that destroy the spiral connectivity.
    /// a_{−k} = a_k keeps μ real. Each coefficient draws its phase from its
    /// own stream, so raising `order` does not change lower coefficients.
    pub fn seeded(seed: u64, amplitude: f64, decay: f64, order: usize, nu: f64) -> Result<Self> {
        if !(amplitude > 0.0 && decay > 0.0 && decay < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "need amplitude > 0 and decay in (0, 1), got {amplitude}, {decay}"
            )));
        }
        let phase = |family: u64, index: i64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((family << 32) | (index as u32 as u64));
            rng.random_range(0.0..TAU)
        };
        let order = order as i64;
        let mut a = BTreeMap::new();
        for k in 2..=order {
            let v = C64::from_polar(amplitude * decay.powi(k as i32), phase(1, k));
            a.insert(k, v);
            a.insert(-k, v);
        }
        let mut b = BTreeMap::new();
        for n in (-order..=order).filter(|n| *n != 0) {
            let mag = amplitude * decay.powi(n.unsigned_abs() as i32);
            b.insert(n, C64::from_polar(mag, phase(2, n)));
        }
        Self::new(a, b, nu, amplitude)
    }

    pub fn zero(nu: f64) -> Result<Self> {
        Self::new(BTreeMap::new(), BTreeMap::new(), nu, 0.0)
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        let scale = |m: &BTreeMap<i64, C64>| m.iter().map(|(&k, &v)| (k, v * lambda)).collect();
        Self {
            a: scale(&self.a),
            b: scale(&self.b),
            nu: self.nu,
            bound: self.bound * lambda.abs(),
        }
    }

    /// The trigonometric polynomial of the ansatz, without positivity checks.
    pub fn polynomial(&self) -> TrigPoly {
        let mut mu = TrigPoly::constant(C64::new(1.0, 0.0));
        for (&k, &v) in &self.a {
            if k < 0 {
                continue;
            }
            let conj_partner = self.a.get(&-k).copied().unwrap_or_default().conj();
            for (m, c) in [(k, v), (-k, conj_partner)] {
                mu.add_term(0, m, c);
                mu.add_term(2, m, -c);
                mu.add_term(-2, m, -c);
            }
        }
        for (&n, &v) in &self.b {
            mu.add_term(3 * n + 1, 0, v);
            mu.add_term(-3 * n - 1, 0, v.conj());
        }
        mu
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Positivity {
    /// Minimum over the sample grid.
    pub grid_min: f64,
    pub argmin: (f64, f64),
    /// 1 − Σ|non-constant coefficients|, a rigorous lower bound on μ.
    pub l1_margin: f64,
}

/// Minimum of a real polynomial over the uniform (t, φ) grid on the cell.
pub fn mu_positivity(mu: &TrigPoly, grid: usize) -> Positivity {
    let mut best = (f64::INFINITY, (0.0, 0.0));
    for i in 0..grid {
        let t = 6.0 * PI * i as f64 / grid as f64;
        for j in 0..grid {
            let phi = TAU * j as f64 / grid as f64;
            let v = mu.evaluate(t, phi).re;
            if v < best.0 {
                best = (v, (t, phi));
            }
        }
    }
    let constant = mu.coeff(0, 0).re;
    let rest = mu.l1_norm() - mu.coeff(0, 0).norm();
    Positivity {
        grid_min: best.0,
        argmin: best.1,
        l1_margin: constant - rest,
    }
}

/// μ as a trigonometric polynomial, checked to be real and positive.
pub fn build_mu(co: &MuCoefficients) -> Result<(TrigPoly, Positivity)> {
    let mu = co.polynomial();
    if !mu.is_real(1e-14) {
        return Err(Error::NotRealValued(
            "mu has non-conjugate coefficient pairs".into(),
        ));
    }
    let pos = mu_positivity(&mu, POSITIVITY_GRID);
    if pos.grid_min <= 0.0 {
        return Err(Error::MuNotPositive {
            value: pos.grid_min,
            t: pos.argmin.0,
            phi: pos.argmin.1,
        });
    }
    Ok((mu, pos))
}

/// Modes |k| ≤ K of both chiralities: all left modes, then all right modes.
pub fn spiral_basis(p: u32, cutoff: usize) -> Basis {
    let k = cutoff as i64;
    let labels = [Chirality::L, Chirality::R]
        .into_iter()
        .flat_map(|c| (-k..=k).map(move |k| torus_mode(k, p, c)))
        .collect();
    Basis::new(labels).expect("distinct modes")
}

fn assemble(
    mu: &TrigPoly,
    nu: f64,
    p: u32,
    cutoff: usize,
    projected: Chirality,
) -> Result<SparseComplexOperator> {
    if p == 0 || cutoff == 0 {
        return Err(Error::InvalidArgument("p and K must be positive".into()));
    }
    let basis = spiral_basis(p, cutoff);
    let waves: Vec<TrigSpinor> = basis
        .labels()
        .iter()
        .map(|l| match l {
            BasisLabel::Mode(m) => v_conjugate_mode(m.k, m.chirality, p, nu),
            BasisLabel::Seq(_) => unreachable!("spiral bases hold modes"),
        })
        .collect();
    // ≺ψ|χ φ≻ pairs the conjugate of ψ's other component with φ's projected one.
    let bra: Vec<TrigPoly> = waves
        .iter()
        .map(|w| w.component(projected.opposite()).conj_reflect())
        .collect();
    let mut op = SparseComplexOperator::zero(basis.clone(), basis);
    for (r, bra_r) in bra.iter().enumerate() {
        for (c, wave) in waves.iter().enumerate() {
            let v = integrate_triple(bra_r, wave.component(projected), mu);
            if v != C64::new(0.0, 0.0) {
                op.add_at(r, c, v);
            }
        }
    }
    Ok(op)
}

/// S_L on the 2(2K+1)-mode basis for an already built μ.
pub fn assemble_spiral_sl_with_mu(
    mu: &TrigPoly,
    nu: f64,
    p: u32,
    cutoff: usize,
) -> Result<SparseComplexOperator> {
    assemble(mu, nu, p, cutoff, Chirality::L)
}

/// S_R assembled directly with χ_R, independent of the adjoint.
pub fn assemble_spiral_sr_with_mu(
    mu: &TrigPoly,
    nu: f64,
    p: u32,
    cutoff: usize,
) -> Result<SparseComplexOperator> {
    assemble(mu, nu, p, cutoff, Chirality::R)
}

pub fn assemble_spiral_sl(co: &MuCoefficients, p: u32, cutoff: usize) -> Result<SparseComplexOperator> {
    let (mu, _) = build_mu(co)?;
    assemble_spiral_sl_with_mu(&mu, co.nu, p, cutoff)
}

/// Coefficient order needed so that μ links every pair of modes with |k| ≤ K.
pub fn required_order(p: u32, cutoff: usize) -> usize {
    2 * cutoff + p as usize + 2
}

/// ind S stabilized between K and 2K for one fixed μ.
pub fn spiral_index(
    co: &MuCoefficients,
    p: u32,
    cutoff: usize,
    settings: &PolicySettings,
) -> Result<IndexReport> {
    let (mu, _) = build_mu(co)?;
    stabilize_index(
        |k| {
            let s_l = assemble_spiral_sl_with_mu(&mu, co.nu, p, k)?;
            Ok((ChiralProblem::Endomorphism(s_l), settings.policy_for(k)?))
        },
        cutoff,
        2 * cutoff,
    )
}

/// Nonzero entries of S_L for μ ≡ 1.
pub fn constant_mu_entries(
    p: u32,
    cutoff: usize,
    nu: f64,
) -> Result<Vec<(BasisLabel, BasisLabel, C64)>> {
    let one = TrigPoly::constant(C64::new(1.0, 0.0));
    Ok(assemble_spiral_sl_with_mu(&one, nu, p, cutoff)?.entries().collect())
}
