//! Independent reference computations by direct quadrature of the defining
//! integrals. Nothing here goes through the library's closed forms.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use chiral_index::spectral::{Chirality, C64};

/// ω_{k,L} = −k; ω_{k,R} = k for k ≤ 0 and k + p for k > 0.
pub fn omega(k: i64, c: Chirality, p: i64) -> i64 {
    match c {
        Chirality::L => -k,
        Chirality::R if k <= 0 => k,
        Chirality::R => k + p,
    }
}

/// (1 − r²)/(1 − 2r cos φ + r²).
pub fn poisson_kernel(r: f64, phi: f64) -> f64 {
    (1.0 - r * r) / (1.0 - 2.0 * r * phi.cos() + r * r)
}

/// ∫₀^{2π} f(φ) e^{−ikφ} dφ by the periodic trapezoid rule on n points.
pub fn fourier_coeff(f: impl Fn(f64) -> f64, k: i64, n: usize) -> C64 {
    let h = TAU / n as f64;
    (0..n)
        .map(|j| {
            let phi = j as f64 * h;
            C64::from_polar(f(phi), -(k as f64) * phi)
        })
        .sum::<C64>()
        * h
}

/// ⟨ẽ_{k,R} | ẽ_{k′,L}⟩ on the (t, φ) torus with weight f(φ), by a 2D
/// trapezoid rule on n_t × n_phi points.
pub fn torus_entry(f: impl Fn(f64) -> f64, p: i64, k: i64, k_prime: i64, n_t: usize, n_phi: usize) -> C64 {
    let dw = (omega(k, Chirality::R, p) - omega(k_prime, Chirality::L, p)) as f64;
    let dk = (k - k_prime) as f64;
    let ht = TAU / n_t as f64;
    let hp = TAU / n_phi as f64;
    let fvals: Vec<f64> = (0..n_phi).map(|j| f(j as f64 * hp)).collect();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n_t {
        let t = i as f64 * ht;
        for (j, fv) in fvals.iter().enumerate() {
            let phi = j as f64 * hp;
            // conj(e^{−iω_R t + ikφ}) · e^{−iω_L t + ik′φ} / (2π)²
            acc += C64::from_polar(*fv, dw * t - dk * phi);
        }
    }
    acc * ht * hp / (4.0 * PI * PI)
}

/// Pointwise μ(t, φ) = 1 + a(φ)(1 − e^{2it/3} − e^{−2it/3}) + μ_vert(t).
pub struct MuFunction<'a> {
    pub a: &'a BTreeMap<i64, C64>,
    pub b: &'a BTreeMap<i64, C64>,
}

impl MuFunction<'_> {
    pub fn a_of(&self, phi: f64) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for (&k, &ak) in self.a.range(1..) {
            let a_minus = self.a.get(&-k).copied().unwrap_or_default();
            s += ak * C64::from_polar(1.0, k as f64 * phi) + a_minus.conj() * C64::from_polar(1.0, -(k as f64) * phi);
        }
        s
    }

    pub fn vert(&self, t: f64) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        let mut ns: Vec<i64> = self.b.keys().copied().collect();
        ns.extend(self.b.keys().map(|n| -n));
        ns.sort_unstable();
        ns.dedup();
        for n in ns {
            let bn = self.b.get(&n).copied().unwrap_or_default();
            let bm = self.b.get(&-n).copied().unwrap_or_default();
            let base = C64::from_polar(1.0, n as f64 * t);
            s += base * (bn * C64::from_polar(1.0, t / 3.0) + bm.conj() * C64::from_polar(1.0, -t / 3.0));
        }
        s
    }

    pub fn eval(&self, t: f64, phi: f64) -> C64 {
        let hor = 1.0 - 2.0 * (2.0 * t / 3.0).cos();
        1.0 + self.a_of(phi) * hor + self.vert(t)
    }
}

/// S_L matrix elements of the spiral model by quadrature over (0, 6π) × S¹:
/// ∫∫ ≺V e_{k,c} | χ_L V e_{k′,c′}≻ μ dφ dt with ≺ψ|φ≻ = conj(ψ₂)φ₁ + conj(ψ₁)φ₂.
pub struct SpiralOracle {
    p: i64,
    nu: f64,
    n_t: usize,
    max_m: i64,
    /// h_φ Σ_j μ(t_i, φ_j) e^{−i m φ_j}, indexed [i][m + max_m].
    mu_hat: Vec<Vec<C64>>,
}

impl SpiralOracle {
    pub fn new(a: &BTreeMap<i64, C64>, b: &BTreeMap<i64, C64>, nu: f64, p: i64, max_m: i64, n_t: usize, n_phi: usize) -> Self {
        let mu = MuFunction { a, b };
        let ht = 6.0 * PI / n_t as f64;
        let hp = TAU / n_phi as f64;
        let a_vals: Vec<C64> = (0..n_phi).map(|j| mu.a_of(j as f64 * hp)).collect();
        let twiddle: Vec<Vec<C64>> = (-max_m..=max_m)
            .map(|m| (0..n_phi).map(|j| C64::from_polar(hp, -(m as f64) * j as f64 * hp)).collect())
            .collect();
        let mu_hat = (0..n_t)
            .map(|i| {
                let t = i as f64 * ht;
                let hor = 1.0 - 2.0 * (2.0 * t / 3.0).cos();
                let vert = mu.vert(t);
                let row: Vec<C64> = a_vals.iter().map(|av| 1.0 + av * hor + vert).collect();
                twiddle
                    .iter()
                    .map(|tw| row.iter().zip(tw).map(|(x, w)| x * w).sum())
                    .collect()
            })
            .collect();
        Self {
            p,
            nu,
            n_t,
            max_m,
            mu_hat,
        }
    }

    /// V(t) applied to the chirality unit vector: (upper, lower) components.
    fn v_spinor(&self, t: f64, c: Chirality) -> (C64, C64) {
        let off = C64::new(0.0, self.nu * (t / 3.0).cos());
        match c {
            Chirality::L => (C64::new(1.0, 0.0), off),
            Chirality::R => (off, C64::new(1.0, 0.0)),
        }
    }

    /// (ẽ_{row} | S_L ẽ_{col}).
    pub fn entry(&self, row: (i64, Chirality), col: (i64, Chirality)) -> C64 {
        let (k, c) = row;
        let (kp, cp) = col;
        let m = k - kp;
        assert!(m.abs() <= self.max_m, "momentum transfer {m} outside the precomputed range");
        let w = (omega(k, c, self.p) - omega(kp, cp, self.p)) as f64;
        let ht = 6.0 * PI / self.n_t as f64;
        let mut acc = C64::new(0.0, 0.0);
        for (i, mh) in self.mu_hat.iter().enumerate() {
            let t = i as f64 * ht;
            let (_, lower) = self.v_spinor(t, c);
            let (upper, _) = self.v_spinor(t, cp);
            // χ_L keeps the upper component of the right argument; the spin
            // product then pairs it with the lower component on the left.
            acc += lower.conj() * upper * C64::from_polar(1.0, w * t) * mh[(m + self.max_m) as usize];
        }
        acc * ht / (4.0 * PI * PI)
    }
}

/// (1/2π) ∫₀^T f(t) e^{2ikt} dt by composite Simpson on 2n panels.
pub fn simpson_coeff(f: impl Fn(f64) -> f64, t_end: f64, k: i64, n: usize) -> C64 {
    let m = 2 * n;
    let h = t_end / m as f64;
    let g = |t: f64| C64::from_polar(f(t), 2.0 * k as f64 * t);
    let mut acc = g(0.0) + g(t_end);
    for j in 1..m {
        let w = if j % 2 == 1 { 4.0 } else { 2.0 };
        acc += g(j as f64 * h) * w;
    }
    acc * h / 3.0 / TAU
}

/// Dense shift-system signature operator: −Σ_k x_k with x_k = −(E_{k,k+p} + E_{k+p,k}).
pub fn shift_signature_dense(p: usize, n: usize) -> Vec<Vec<f64>> {
    let mut s = vec![vec![0.0; n]; n];
    for k in 0..n - p {
        s[k][k + p] += 1.0;
        s[k + p][k] += 1.0;
    }
    s
}
