//! The first-order generator `𝒜_γ(u₁,u₂) = (u₂, −(−Δ+1)^{s/2}u₁ − γu₂)` on the
//! energy space `H^{s/2} × L²`, its `w`-diagonalization and resolvent
//! singular values along the imaginary axis.
//!
//! With `Λ = (−Δ+1)^{s/4}`, the variables `w₁ = Λu₁ − iu₂`, `w₂ = Λu₁ + iu₂`
//! satisfy `‖w₁‖² + ‖w₂‖² = 2‖U‖²` and turn the free generator into
//! `w₁ ↦ iΛw₁`, `w₂ ↦ −iΛw₂`. Consequently
//! `2‖(𝒜₀ − iλ)U‖² = ‖(Λ−λ)w₁‖² + ‖(Λ+λ)w₂‖²`.
//!
//! Energy-norm singular values are computed as ordinary `L²` ones of the
//! conjugated operator `T(𝒜_γ − iλ)T⁻¹`, `T = diag(Λ, I)`, which in Fourier
//! coordinates reads `[[−iλ, Λ], [−Λ, −γ − iλ]]`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::damping::{DampingProfile, ThickCertificate};
use crate::eigen::{norm, smallest_eigenpair, EigenOptions, HermitianOperator};
use crate::error::{Error, Result};
use crate::field::{energy_norm, SpectralField};
use crate::grid::TorusGrid;
use crate::random::{gaussian_complex, rng, white_noise};
use crate::symbol::FracSymbol;
use crate::uncertainty::Envelope;
use crate::C64;

const I: C64 = C64 { re: 0.0, im: 1.0 };

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// A state `U = (u₁, u₂)` of the energy space, tagged with the order `s`.
#[derive(Debug, Clone)]
pub struct StateVector {
    pub u1: SpectralField,
    pub u2: SpectralField,
    pub s: f64,
}

impl StateVector {
    pub fn new(u1: SpectralField, u2: SpectralField, s: f64) -> Result<Self> {
        u1.grid().check_same(u2.grid())?;
        Ok(Self { u1, u2, s })
    }

    /// Independent unit white-noise components (Nyquist modes empty).
    pub fn random(grid: &TorusGrid, s: f64, seed: u64) -> Self {
        let u1 = white_noise(grid, seed.wrapping_mul(2));
        let u2 = white_noise(grid, seed.wrapping_mul(2).wrapping_add(1));
        Self { u1, u2, s }
    }

    pub fn grid(&self) -> &TorusGrid {
        self.u1.grid()
    }

    pub fn energy_norm(&self) -> f64 {
        energy_norm(&self.u1, &self.u2, self.s)
    }

    /// `⟨U, V⟩ = ⟨Λu₁, Λv₁⟩ + ⟨u₂, v₂⟩`.
    pub fn energy_inner(&self, other: &StateVector) -> Result<C64> {
        self.grid().check_same(other.grid())?;
        let lam = FracSymbol::half(self.s);
        let a = self.u1.apply_symbol(lam);
        let b = other.u1.apply_symbol(lam);
        Ok(a.inner(&b) + self.u2.inner(&other.u2))
    }

    pub fn lin_comb(&self, a: C64, other: &StateVector, b: C64) -> Result<Self> {
        Ok(Self {
            u1: self.u1.lin_comb(a, &other.u1, b)?,
            u2: self.u2.lin_comb(a, &other.u2, b)?,
            s: self.s,
        })
    }

    /// Fraction of `‖u₁‖²` carried by Nyquist wavenumbers.
    pub fn nyquist_fraction(&self) -> f64 {
        self.u1.nyquist_fraction()
    }

    /// Rejects data whose `u₁` puts more than `1e−10` of its mass on Nyquist
    /// wavenumbers.
    pub fn check_nyquist(&self) -> Result<()> {
        let f = self.nyquist_fraction();
        if f > 1e-10 {
            return Err(Error::InvalidInput(format!(
                "u1 carries a fraction {f:e} of its mass on Nyquist modes"
            )));
        }
        Ok(())
    }
}

/// `𝒜_γ U = (u₂, −(−Δ+1)^{s/2}u₁ − γu₂)`; `gamma = None` gives `𝒜₀`.
pub fn apply_a(u: &StateVector, gamma: Option<&DampingProfile>) -> Result<StateVector> {
    let grid = u.grid();
    let top = u.u2.clone();
    let mut bottom = u.u1.apply_symbol(FracSymbol::full(u.s)).scale(real(-1.0));
    if let Some(g) = gamma {
        grid.check_same(g.grid())?;
        bottom = bottom.sub(&u.u2.mul_pointwise(g.gamma()))?;
    }
    StateVector::new(top, bottom, u.s)
}

/// `(𝒜_γ − iλ)U`.
pub fn apply_shifted(u: &StateVector, gamma: Option<&DampingProfile>, lam: f64) -> Result<StateVector> {
    apply_a(u, gamma)?.lin_comb(real(1.0), u, C64::new(0.0, -lam))
}

/// The pair `(w₁, w₂) = (Λu₁ − iu₂, Λu₁ + iu₂)`.
#[derive(Debug, Clone)]
pub struct WPair {
    pub w1: SpectralField,
    pub w2: SpectralField,
}

impl WPair {
    pub fn norm_sq(&self) -> f64 {
        self.w1.l2_norm_sq() + self.w2.l2_norm_sq()
    }
}

pub fn w_transform(u: &StateVector) -> Result<WPair> {
    let lu1 = u.u1.apply_symbol(FracSymbol::half(u.s));
    Ok(WPair { w1: lu1.lin_comb(real(1.0), &u.u2, -I)?, w2: lu1.lin_comb(real(1.0), &u.u2, I)? })
}

pub fn w_inverse(w: &WPair, s: f64) -> Result<StateVector> {
    let sum = w.w1.add(&w.w2)?;
    let sym = FracSymbol::half(s);
    let u1 = sum.map_spectrum(|_, r2| real(0.5 / sym.at_sq(r2)));
    let u2 = w.w1.lin_comb(I * 0.5, &w.w2, -I * 0.5)?;
    StateVector::new(u1, u2, s)
}

/// Exact energy-norm resolvent norm of the free generator on the lattice:
/// `1 / min_ξ min(|λ − Λ(ξ)|, |λ + Λ(ξ)|)`.
pub fn free_resolvent_norm_exact(lam: f64, s: f64, grid: &TorusGrid) -> Result<f64> {
    let sym = FracSymbol::half(s);
    let (idx, dist) = grid
        .freq_sq()
        .iter()
        .enumerate()
        .map(|(i, &r2)| {
            let l = sym.at_sq(r2);
            (i, (lam - l).abs().min((lam + l).abs()))
        })
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    if dist <= 1e-13 * lam.abs().max(1.0) {
        return Err(Error::Pole { lambda: lam, mode: grid.wavenumbers(idx) });
    }
    Ok(1.0 / dist)
}

/// `B*B` for `B = T(𝒜_γ − iλ)T⁻¹` on stacked Fourier coefficients `[v₁ | v₂]`.
struct ResolventNormal<'a> {
    grid: &'a TorusGrid,
    gamma: Option<&'a [f64]>,
    lam: f64,
    half: Vec<f64>,
    gamma_mean: f64,
}

impl ResolventNormal<'_> {
    fn multiply_gamma(&self, x: &[C64], out: &mut [C64]) {
        match self.gamma {
            None => out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0)),
            Some(g) => {
                out.copy_from_slice(x);
                self.grid.inverse(out);
                for (v, w) in out.iter_mut().zip(g) {
                    *v *= w;
                }
                self.grid.forward(out);
            }
        }
    }

    /// `y ← B x`.
    fn apply_b(&self, x: &[C64], y: &mut [C64]) {
        let n = self.half.len();
        let (x1, x2) = x.split_at(n);
        let (y1, y2) = y.split_at_mut(n);
        self.multiply_gamma(x2, y2);
        let il = C64::new(0.0, self.lam);
        for k in 0..n {
            let l = self.half[k];
            y1[k] = -il * x1[k] + x2[k] * l;
            y2[k] = -x1[k] * l - il * x2[k] - y2[k];
        }
    }

    /// `y ← B* x`.
    fn apply_b_adjoint(&self, x: &[C64], y: &mut [C64]) {
        let n = self.half.len();
        let (x1, x2) = x.split_at(n);
        let (y1, y2) = y.split_at_mut(n);
        self.multiply_gamma(x2, y2);
        let il = C64::new(0.0, self.lam);
        for k in 0..n {
            let l = self.half[k];
            y1[k] = il * x1[k] - x2[k] * l;
            y2[k] = x1[k] * l + il * x2[k] - y2[k];
        }
    }
}

impl HermitianOperator for ResolventNormal<'_> {
    fn dim(&self) -> usize {
        2 * self.half.len()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let mut tmp = vec![C64::new(0.0, 0.0); x.len()];
        self.apply_b(x, &mut tmp);
        self.apply_b_adjoint(&tmp, y);
    }

    /// Inverts the per-mode 2×2 block obtained by replacing `γ` by its mean.
    fn precondition(&self, theta: f64, r: &[C64], t: &mut [C64]) {
        let n = self.half.len();
        let g = self.gamma_mean;
        let lam = self.lam;
        for k in 0..n {
            let l = self.half[k];
            let a = lam * lam + l * l;
            let d = l * l + g * g + lam * lam;
            let b = C64::new(l * g, 2.0 * lam * l);
            let out = solve_shifted_2x2(a, b, d, theta, [r[k], r[n + k]]);
            t[k] = out[0];
            t[n + k] = out[1];
        }
    }
}

/// `(M − θ)⁻¹ r` for `M = [[a, b], [b̄, d]]` through its eigen-decomposition,
/// with denominators bounded away from zero.
fn solve_shifted_2x2(a: f64, b: C64, d: f64, theta: f64, r: [C64; 2]) -> [C64; 2] {
    let clamp = |x: f64| {
        let floor = 1e-6 * theta.abs().max(1e-8);
        if x.abs() < floor {
            floor.copysign(x)
        } else {
            x
        }
    };
    let bn = b.norm();
    if bn <= 1e-300 {
        return [r[0] / clamp(a - theta), r[1] / clamp(d - theta)];
    }
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + bn * bn).sqrt();
    let mut out = [C64::new(0.0, 0.0); 2];
    for e in [mean - rad, mean + rad] {
        // eigenvector (b, e − a), normalized
        let v = [b, real(e - a)];
        let nv = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        let v = [v[0] / nv, v[1] / nv];
        let coef = (v[0].conj() * r[0] + v[1].conj() * r[1]) / clamp(e - theta);
        out[0] += v[0] * coef;
        out[1] += v[1] * coef;
    }
    out
}

/// One point of a resolvent sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaPoint {
    pub lambda: f64,
    pub sigma_min: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Smallest energy-norm singular value of `𝒜_γ − iλ`.
///
/// `opts.tol` bounds the residual of the normal-operator eigenpair.
pub fn resolvent_sigma_min(
    grid: &TorusGrid,
    gamma: Option<&DampingProfile>,
    lam: f64,
    s: f64,
    opts: &EigenOptions,
) -> Result<SigmaPoint> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    if let Some(g) = gamma {
        grid.check_same(g.grid())?;
    }
    let sym = FracSymbol::half(s);
    let half: Vec<f64> = grid.freq_sq().iter().map(|&r2| sym.at_sq(r2)).collect();
    let gamma_mean =
        gamma.map(|g| g.gamma().iter().sum::<f64>() / g.gamma().len() as f64).unwrap_or(0.0);
    let op = ResolventNormal { grid, gamma: gamma.map(|g| g.gamma()), lam, half, gamma_mean };
    let mut r = rng(opts.seed);
    let n = grid.len();
    let start: Vec<C64> = (0..2 * n)
        .map(|i| gaussian_complex(&mut r) / (1.0 + (op.half[i % n] - lam.abs()).powi(2)))
        .collect();
    let pair = smallest_eigenpair(&op, Some(&start), opts)?;
    let mut bx = vec![C64::new(0.0, 0.0); 2 * n];
    op.apply_b(&pair.vector, &mut bx);
    let sigma = norm(&bx);
    if sigma < 1e-13 {
        let (idx, _) = pair
            .vector
            .iter()
            .enumerate()
            .fold((0, 0.0), |a, (i, z)| if z.norm() > a.1 { (i, z.norm()) } else { a });
        return Err(Error::Pole { lambda: lam, mode: grid.wavenumbers(idx % n) });
    }
    Ok(SigmaPoint { lambda: lam, sigma_min: sigma, residual: pair.residual, iterations: pair.iterations })
}

/// `n` equally spaced values on `[−half_width, half_width]`.
pub fn symmetric_lambdas(half_width: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![0.0];
    }
    (0..n).map(|i| -half_width + 2.0 * half_width * i as f64 / (n - 1) as f64).collect()
}

/// New sample locations bisecting both neighbouring intervals of every
/// interior local minimum of `sigma` (points sorted by `lambda`).
pub fn dip_refinement(points: &[SigmaPoint]) -> Vec<f64> {
    let mut out = Vec::new();
    for w in points.windows(3) {
        if w[1].sigma_min < w[0].sigma_min && w[1].sigma_min < w[2].sigma_min {
            out.push(0.5 * (w[0].lambda + w[1].lambda));
            out.push(0.5 * (w[1].lambda + w[2].lambda));
        }
    }
    out
}

/// Resolvent sweep with its squared envelope `σ_min(λ)² ≥ c·e^{−C|λ|}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventSweep {
    pub s: f64,
    pub points: Vec<SigmaPoint>,
    pub envelope: Envelope,
}

impl ResolventSweep {
    pub fn from_points(s: f64, mut points: Vec<SigmaPoint>) -> Result<Self> {
        points.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap());
        let xs: Vec<f64> = points.iter().map(|p| p.lambda.abs()).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.sigma_min * p.sigma_min).collect();
        let envelope = crate::uncertainty::envelope_fit(&xs, &ys)?;
        Ok(Self { s, points, envelope })
    }
}

/// Sequential sweep: base grid of `lambdas`, then `refine_levels` rounds of
/// dip bisection.
pub fn resolvent_sweep(
    grid: &TorusGrid,
    gamma: Option<&DampingProfile>,
    s: f64,
    lambdas: &[f64],
    refine_levels: usize,
    opts: &EigenOptions,
) -> Result<ResolventSweep> {
    let eval = |ls: &[f64]| -> Result<Vec<SigmaPoint>> {
        ls.iter().map(|&l| resolvent_sigma_min(grid, gamma, l, s, opts)).collect()
    };
    let points = refine_sweep(lambdas, refine_levels, eval)?;
    ResolventSweep::from_points(s, points)
}

/// Runs `eval` on the base sweep and on each round of dip refinements.
pub fn refine_sweep(
    lambdas: &[f64],
    refine_levels: usize,
    mut eval: impl FnMut(&[f64]) -> Result<Vec<SigmaPoint>>,
) -> Result<Vec<SigmaPoint>> {
    let mut points = eval(lambdas)?;
    for _ in 0..refine_levels {
        points.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap());
        let extra: Vec<f64> = dip_refinement(&points)
            .into_iter()
            .filter(|l| points.iter().all(|p| (p.lambda - l).abs() > 1e-12))
            .collect();
        if extra.is_empty() {
            break;
        }
        points.extend(eval(&extra)?);
    }
    points.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap());
    Ok(points)
}

/// Both the repaired and the as-written forms of the `w`-variable chain
/// bounding `2c e^{−C|λ|}‖U‖²` by the free resolvent plus `8‖u₂‖²_{L²(Ω)}`.
///
/// With `(a, b) = (w₁, w₂)` for `λ ≥ 0` and `(w₂, w₁)` otherwise, `μ = |λ|`,
/// `e = c e^{−Cμ}`:
///
/// ```text
/// L0 = e(‖a‖² + ‖b‖²)                                    (= 2e‖U‖²)
/// L1 = ‖(Λ−μ)a‖² + ‖a‖²_Ω + e‖b‖²                        (annulus bound, order s/2)
/// L2 = ‖(Λ−μ)a‖² + 2‖a−b‖²_Ω + 2‖b‖²_Ω + c‖b‖²
/// L3 = ‖(Λ−μ)a‖² + (2+c)‖(Λ+μ)b‖² + 8‖u₂‖²_Ω
/// L4 = 2(2+c)‖(𝒜₀−iλ)U‖² + 8‖u₂‖²_Ω
/// ```
///
/// The as-written chain drops `2‖b‖²_Ω` at L2, keeps `c` at L3 and closes
/// with `c‖(𝒜₀−iλ)U‖²`; its slacks are reported in `literal_slacks`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolvent2Chain {
    pub lambda: f64,
    pub c: f64,
    #[serde(rename = "C")]
    pub rate: f64,
    pub steps: [f64; 5],
    pub slacks: [f64; 4],
    pub literal_steps: [f64; 5],
    pub literal_slacks: [f64; 4],
    /// `|2‖(𝒜₀−iλ)U‖² − ‖(Λ−λ)w₁‖² − ‖(Λ+λ)w₂‖²|`, relative.
    pub identity_error: f64,
    pub holds: bool,
    pub literal_holds: bool,
}

pub fn check_resolvent2_chain(
    u: &StateVector,
    lam: f64,
    omega: &[bool],
    envelope: &Envelope,
) -> Result<Resolvent2Chain> {
    if omega.len() != u.grid().len() {
        return Err(Error::Shape("mask does not match grid".into()));
    }
    let w = w_transform(u)?;
    let (a, b) = if lam >= 0.0 { (&w.w1, &w.w2) } else { (&w.w2, &w.w1) };
    let mu = lam.abs();
    let sym = FracSymbol::half(u.s);
    let minus = |f: &SpectralField| f.map_spectrum(|_, r2| real(sym.at_sq(r2) - mu)).l2_norm_sq();
    let plus = |f: &SpectralField| f.map_spectrum(|_, r2| real(sym.at_sq(r2) + mu)).l2_norm_sq();
    let c = envelope.c;
    let e = envelope.at(mu);
    let a_sq = a.l2_norm_sq();
    let b_sq = b.l2_norm_sq();
    let am = minus(a);
    let bp = plus(b);
    let diff_omega = a.sub(b)?.masked_norm_sq(omega);
    let u2_omega = u.u2.masked_norm_sq(omega);
    let free = apply_shifted(u, None, lam)?.energy_norm().powi(2);

    let l0 = e * (a_sq + b_sq);
    let l1 = am + a.masked_norm_sq(omega) + e * b_sq;
    let l2 = am + 2.0 * diff_omega + 2.0 * b.masked_norm_sq(omega) + c * b_sq;
    let l3 = am + (2.0 + c) * bp + 8.0 * u2_omega;
    let l4 = 2.0 * (2.0 + c) * free + 8.0 * u2_omega;
    let steps = [l0, l1, l2, l3, l4];

    let p2 = am + 2.0 * diff_omega + c * b_sq;
    let p3 = am + c * bp + 8.0 * u2_omega;
    let p4 = c * free + 8.0 * u2_omega;
    let literal_steps = [l0, l1, p2, p3, p4];

    let slack = |s: &[f64; 5]| [s[1] - s[0], s[2] - s[1], s[3] - s[2], s[4] - s[3]];
    let slacks = slack(&steps);
    let literal_slacks = slack(&literal_steps);
    let scale = steps.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    let ok = |s: &[f64; 4]| s.iter().all(|x| *x >= -1e-10 * scale);

    let (wm, wp) = (minus(&w.w1), plus(&w.w2));
    let (wm, wp) = if lam >= 0.0 { (wm, wp) } else {
        // recompute with the signed λ for the identity check
        (
            w.w1.map_spectrum(|_, r2| real(sym.at_sq(r2) - lam)).l2_norm_sq(),
            w.w2.map_spectrum(|_, r2| real(sym.at_sq(r2) + lam)).l2_norm_sq(),
        )
    };
    let identity_error = (2.0 * free - wm - wp).abs() / (2.0 * free).max(1e-300);

    Ok(Resolvent2Chain {
        lambda: lam,
        c,
        rate: envelope.rate,
        steps,
        slacks,
        literal_steps,
        literal_slacks,
        identity_error,
        holds: ok(&slacks),
        literal_holds: ok(&literal_slacks),
    })
}

/// Lower bound for `σ_min(𝒜_γ − iλ)²` obtained by absorbing the damping into
/// the free estimate.
///
/// From the order-`s/2` annulus envelope `(c₁, C₁)` the free estimate
/// `e'‖U‖² ≤ ‖(𝒜₀−iλ)U‖² + ‖u₂‖²_Ω` holds with
/// `e' = c₁/max(2+c₁, 4)·e^{−C₁|λ|}`. With `D = 2 + ε⁻²`, `G = ‖γ‖_∞` and
/// `δ = e'/2` the damping absorption yields
/// `σ_min² ≥ e'² / (4(e' + D²G²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsorbedEnvelope {
    pub eps: f64,
    pub sup_norm: f64,
    /// `D = 2 + ε⁻²`.
    pub d_const: f64,
    /// Free-operator constants `(c', C')`.
    pub free_c: f64,
    pub free_rate: f64,
    /// Exponential form `c·e^{−C|λ|}` minorizing [`AbsorbedEnvelope::predict`].
    pub c: f64,
    #[serde(rename = "C")]
    pub rate: f64,
}

impl AbsorbedEnvelope {
    /// Predicted lower bound for `σ_min(λ)²`.
    pub fn predict(&self, lam: f64) -> f64 {
        let e = self.free_c * (-self.free_rate * lam.abs()).exp();
        let dg = self.d_const * self.sup_norm;
        e * e / (4.0 * (e + dg * dg))
    }

    /// Sweep points where the prediction exceeds the measured `σ_min²`.
    pub fn cross_check(&self, points: &[SigmaPoint]) -> AbsorbCheck {
        let mut violations = 0;
        let mut min_ratio = f64::INFINITY;
        for p in points {
            let ratio = p.sigma_min * p.sigma_min / self.predict(p.lambda);
            if ratio < 1.0 {
                violations += 1;
            }
            min_ratio = min_ratio.min(ratio);
        }
        AbsorbCheck { violations, min_ratio }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsorbCheck {
    pub violations: usize,
    /// `min σ_min² / prediction`; at least 1 when the prediction minorizes.
    pub min_ratio: f64,
}

pub fn absorb_damping_estimate(
    gamma: &DampingProfile,
    eps: f64,
    certificate: Option<&ThickCertificate>,
    annulus_envelope: &Envelope,
) -> Result<AbsorbedEnvelope> {
    let cert = certificate
        .ok_or_else(|| Error::Precondition("thickness certificate for {γ ≥ ε} is required".into()))?;
    if !cert.thick || cert.eps != eps {
        return Err(Error::Precondition(format!(
            "{{γ ≥ {eps}}} is not certified thick (certificate: eps={}, thick={})",
            cert.eps, cert.thick
        )));
    }
    let c1 = annulus_envelope.c;
    let free_c = c1 / (2.0 + c1).max(4.0);
    let d_const = 2.0 + 1.0 / (eps * eps);
    let g = gamma.sup_norm();
    let dg = d_const * g;
    Ok(AbsorbedEnvelope {
        eps,
        sup_norm: g,
        d_const,
        free_c,
        free_rate: annulus_envelope.rate,
        c: free_c * free_c / (4.0 * (free_c + dg * dg)),
        rate: 2.0 * annulus_envelope.rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::damping::DampingSpec;
    use crate::uncertainty::quadform_min_eig;
    use core::f64::consts::PI;
    use nalgebra::DMatrix;

    fn stripes(grid: &TorusGrid, height: f64) -> DampingProfile {
        DampingProfile::make(grid, &DampingSpec::Stripes { period: 2.0, duty: 0.5, height }).unwrap()
    }

    fn smooth_state(grid: &TorusGrid, s: f64, seed: u64) -> StateVector {
        let u = StateVector::random(grid, s, seed);
        let damp = |f: &SpectralField| f.map_spectrum(|_, r2| real((-r2 / 50.0).exp()));
        StateVector { u1: damp(&u.u1), u2: damp(&u.u2), s }
    }

    fn tight() -> EigenOptions {
        EigenOptions { tol: 1e-10, ..EigenOptions::default() }
    }

    #[test]
    fn free_generator_is_skew_adjoint() {
        let g = TorusGrid::new(2, 32, 8.0).unwrap();
        for seed in 0..5 {
            let u = StateVector::random(&g, 1.5, seed);
            let au = apply_a(&u, None).unwrap();
            let re = au.energy_inner(&u).unwrap().re;
            assert!(re.abs() <= 1e-11 * au.energy_norm() * u.energy_norm(), "{re}");
        }
    }

    #[test]
    fn damped_generator_dissipates_exactly() {
        let g = TorusGrid::new(1, 256, 16.0).unwrap();
        let gamma = stripes(&g, 1.7);
        for seed in 0..5 {
            let u = StateVector::random(&g, 2.0, seed);
            let au = apply_a(&u, Some(&gamma)).unwrap();
            let re = au.energy_inner(&u).unwrap().re;
            let diss = u.u2.mul_pointwise(gamma.gamma()).inner(&u.u2).re;
            assert!((re + diss).abs() <= 1e-11 * au.energy_norm() * u.energy_norm());
        }
    }

    #[test]
    fn w_transform_round_trip_and_norm() {
        let g = TorusGrid::new(2, 16, 5.0).unwrap();
        let u = StateVector::random(&g, 3.0, 4);
        let w = w_transform(&u).unwrap();
        let e = u.energy_norm().powi(2);
        assert!((w.norm_sq() - 2.0 * e).abs() < 1e-12 * e);
        let back = w_inverse(&w, 3.0).unwrap();
        let diff = back.lin_comb(real(1.0), &u, real(-1.0)).unwrap();
        assert!(diff.energy_norm() < 1e-12 * u.energy_norm());
    }

    #[test]
    fn w_variables_diagonalize_the_free_flow() {
        let g = TorusGrid::new(1, 64, 10.0).unwrap();
        let u = StateVector::random(&g, 1.0, 9);
        let w = w_transform(&u).unwrap();
        let aw = w_transform(&apply_a(&u, None).unwrap()).unwrap();
        let sym = FracSymbol::half(1.0);
        let e1 = w.w1.map_spectrum(|_, r2| I * sym.at_sq(r2)).sub(&aw.w1).unwrap().l2_norm();
        let e2 = w.w2.map_spectrum(|_, r2| -I * sym.at_sq(r2)).sub(&aw.w2).unwrap().l2_norm();
        assert!(e1 < 1e-11 * aw.w1.l2_norm() && e2 < 1e-11 * aw.w2.l2_norm());
    }

    #[test]
    fn free_resolvent_identity_carries_factor_two() {
        let g = TorusGrid::new(1, 128, 12.0).unwrap();
        let mask = stripes(&g, 1.0).level_set(0.5);
        let env = Envelope { c: 0.1, rate: 0.0, slope: 0.0, worst_violation: 0.0, rms_residual: 0.0 };
        for (i, lam) in [-7.3, -1.0, 0.0, 0.4, 5.5].into_iter().enumerate() {
            let u = StateVector::random(&g, 2.0, i as u64);
            let chain = check_resolvent2_chain(&u, lam, &mask, &env).unwrap();
            assert!(chain.identity_error < 1e-11, "{chain:?}");
        }
    }

    #[test]
    fn free_sigma_min_matches_closed_form() {
        let g = TorusGrid::new(1, 128, 2.0 * PI).unwrap();
        // ±70 lies past the largest symbol, attained at the Nyquist mode
        for lam in [-70.0, -9.7, -2.5, 0.3, 4.2, 17.45, 70.0] {
            let exact = 1.0 / free_resolvent_norm_exact(lam, 2.0, &g).unwrap();
            let p = resolvent_sigma_min(&g, None, lam, 2.0, &tight()).unwrap();
            assert!((p.sigma_min - exact).abs() < 1e-8, "λ={lam}: {} vs {exact}", p.sigma_min);
        }
    }

    #[test]
    fn free_resolvent_reports_pole() {
        // Λ(0) = 1 for every s
        let g = TorusGrid::new(1, 64, 2.0 * PI).unwrap();
        assert!(matches!(free_resolvent_norm_exact(1.0, 1.3, &g), Err(Error::Pole { mode: [0, 0], .. })));
        assert!(matches!(
            resolvent_sigma_min(&g, None, -1.0, 1.3, &tight()),
            Err(Error::Pole { .. })
        ));
    }

    /// Constant damping decouples into 2×2 blocks per mode.
    #[test]
    fn uniform_damping_matches_block_oracle() {
        let g = TorusGrid::new(1, 64, 9.0).unwrap();
        let level = 0.8;
        let gamma = DampingProfile::make(&g, &DampingSpec::Uniform { level }).unwrap();
        let sym = FracSymbol::half(1.5);
        for lam in [-3.0, 0.0, 1.1, 6.0] {
            let oracle = g
                .freq_sq()
                .iter()
                .map(|&r2| {
                    let l = sym.at_sq(r2);
                    let m = DMatrix::from_row_slice(
                        2,
                        2,
                        &[C64::new(0.0, -lam), real(l), real(-l), C64::new(-level, -lam)],
                    );
                    m.singular_values().min()
                })
                .fold(f64::INFINITY, f64::min);
            let p = resolvent_sigma_min(&g, Some(&gamma), lam, 1.5, &tight()).unwrap();
            assert!((p.sigma_min - oracle).abs() < 1e-8, "λ={lam}: {} vs {oracle}", p.sigma_min);
        }
    }

    /// Dense `[[−iλ, Λ], [−Λ, −Γ − iλ]]` with `Γ` the direct-DFT convolution
    /// matrix of `γ`.
    fn dense_sigma_min(grid: &TorusGrid, gamma: &[f64], s: f64, lam: f64) -> f64 {
        let n = grid.len();
        let ghat: Vec<C64> = (0..n)
            .map(|k| {
                let sum: C64 = (0..n)
                    .map(|j| {
                        let a = -2.0 * PI * (k * j) as f64 / n as f64;
                        C64::new(a.cos(), a.sin()) * gamma[j]
                    })
                    .sum();
                sum / n as f64
            })
            .collect();
        let half = |k: usize| {
            let wk = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
            let xi = 2.0 * PI * wk / grid.box_len();
            (xi * xi + 1.0).powf(s / 4.0)
        };
        let m = DMatrix::from_fn(2 * n, 2 * n, |r, c| {
            let (br, k) = (r / n, r % n);
            let (bc, l) = (c / n, c % n);
            let diag = k == l;
            match (br, bc) {
                (0, 0) if diag => C64::new(0.0, -lam),
                (0, 1) if diag => real(half(k)),
                (1, 0) if diag => real(-half(k)),
                (1, 1) => -ghat[(k + n - l) % n] - if diag { C64::new(0.0, lam) } else { real(0.0) },
                _ => real(0.0),
            }
        });
        m.singular_values().min()
    }

    #[test]
    fn stripes_sigma_min_matches_dense_svd() {
        let g = TorusGrid::new(1, 64, 8.0).unwrap();
        let gamma = stripes(&g, 1.3);
        for lam in [-4.4, 0.0, 2.35, 7.0] {
            let oracle = dense_sigma_min(&g, gamma.gamma(), 2.0, lam);
            let p = resolvent_sigma_min(&g, Some(&gamma), lam, 2.0, &tight()).unwrap();
            assert!((p.sigma_min - oracle).abs() < 1e-8, "λ={lam}: {} vs {oracle}", p.sigma_min);
        }
    }

    #[test]
    fn sweep_is_symmetric_in_lambda() {
        let g = TorusGrid::new(1, 128, 16.0).unwrap();
        let gamma = stripes(&g, 1.0);
        for lam in [0.7, 3.1, 8.25] {
            let a = resolvent_sigma_min(&g, Some(&gamma), lam, 2.0, &tight()).unwrap().sigma_min;
            let b = resolvent_sigma_min(&g, Some(&gamma), -lam, 2.0, &tight()).unwrap().sigma_min;
            assert!((a - b).abs() <= 1e-9 * a.max(1e-3), "{a} vs {b}");
        }
    }

    #[test]
    fn refinement_bisects_dips() {
        let pts: Vec<SigmaPoint> = [(0.0, 3.0), (1.0, 1.0), (2.0, 2.0), (3.0, 2.5)]
            .iter()
            .map(|&(l, s)| SigmaPoint { lambda: l, sigma_min: s, residual: 0.0, iterations: 0 })
            .collect();
        assert_eq!(dip_refinement(&pts), vec![0.5, 1.5]);
        let lams = symmetric_lambdas(2.0, 5);
        assert_eq!(lams, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        let mut calls = 0;
        let out = refine_sweep(&lams, 3, |ls| {
            calls += 1;
            Ok(ls
                .iter()
                .map(|&l| SigmaPoint { lambda: l, sigma_min: 1.0 + (l - 0.3).abs(), residual: 0.0, iterations: 0 })
                .collect())
        })
        .unwrap();
        assert!(calls >= 2);
        assert!(out.windows(2).all(|w| w[0].lambda < w[1].lambda));
    }

    fn exact_envelope(grid: &TorusGrid, s: f64, omega: &[bool], mu: f64) -> Envelope {
        // order-s/2 quadratic form evaluated at |λ| itself, so e = c exactly
        let q = quadform_min_eig(grid, s / 2.0, omega, mu, &tight()).unwrap();
        Envelope { c: q.mu_min - q.residual, rate: 0.0, slope: 0.0, worst_violation: 0.0, rms_residual: 0.0 }
    }

    #[test]
    fn repaired_chain_holds_where_the_literal_one_breaks() {
        let g = TorusGrid::new(1, 256, 16.0).unwrap();
        let mask = stripes(&g, 1.0).level_set(0.5);
        let u1 = smooth_state(&g, 2.0, 3).u1;
        let u = StateVector::new(u1, SpectralField::zeros(&g), 2.0).unwrap();
        let env = exact_envelope(&g, 2.0, &mask, 0.0);
        let chain = check_resolvent2_chain(&u, 0.0, &mask, &env).unwrap();
        assert!(chain.holds, "{chain:?}");
        // u₂ = 0, λ = 0: w₁ = w₂ and the dropped ‖w₂‖²_Ω term is needed
        assert!(chain.literal_slacks[1] < 0.0, "{chain:?}");
        assert!(!chain.literal_holds);
    }

    #[test]
    fn repaired_chain_holds_for_random_states() {
        let g = TorusGrid::new(1, 256, 16.0).unwrap();
        let mask = stripes(&g, 1.0).level_set(0.5);
        for (i, lam) in [-6.5, -2.0, 0.0, 1.5, 4.0, 9.0].into_iter().enumerate() {
            let env = exact_envelope(&g, 2.0, &mask, f64::abs(lam));
            for seed in 0..10 {
                let u = smooth_state(&g, 2.0, 100 * i as u64 + seed);
                let chain = check_resolvent2_chain(&u, lam, &mask, &env).unwrap();
                assert!(chain.holds, "{chain:?}");
            }
        }
    }

    #[test]
    fn absorption_needs_a_thick_certificate() {
        let g = TorusGrid::new(1, 128, 16.0).unwrap();
        let gamma = stripes(&g, 1.0);
        let env = Envelope { c: 0.3, rate: 0.2, slope: -0.2, worst_violation: 0.0, rms_residual: 0.0 };
        assert!(matches!(absorb_damping_estimate(&gamma, 0.5, None, &env), Err(Error::Precondition(_))));
        let other = gamma.thickness(0.25, 4.0).unwrap();
        assert!(matches!(
            absorb_damping_estimate(&gamma, 0.5, Some(&other), &env),
            Err(Error::Precondition(_))
        ));
        let cert = gamma.thickness(0.5, 4.0).unwrap();
        let a = absorb_damping_estimate(&gamma, 0.5, Some(&cert), &env).unwrap();
        assert!(a.c > 0.0 && a.rate == 0.4);
        for lam in [0.0, 3.0, 11.0] {
            assert!(a.predict(lam) >= a.c * (-a.rate * lam).exp() * (1.0 - 1e-12));
        }
    }

    #[test]
    fn absorption_weakens_with_larger_damping() {
        let g = TorusGrid::new(1, 128, 16.0).unwrap();
        let env = Envelope { c: 0.3, rate: 0.2, slope: -0.2, worst_violation: 0.0, rms_residual: 0.0 };
        let one = stripes(&g, 1.0);
        let two = stripes(&g, 2.0);
        let c1 = absorb_damping_estimate(&one, 0.5, Some(&one.thickness(0.5, 4.0).unwrap()), &env).unwrap();
        let c2 = absorb_damping_estimate(&two, 0.5, Some(&two.thickness(0.5, 4.0).unwrap()), &env).unwrap();
        assert!(c2.c < c1.c);
    }

    #[test]
    fn absorbed_prediction_minorizes_uniform_damping() {
        let g = TorusGrid::new(1, 128, 16.0).unwrap();
        let s = 2.0;
        let gamma = DampingProfile::make(&g, &DampingSpec::Uniform { level: 1.0 }).unwrap();
        let mask = gamma.level_set(0.5);
        let cert = gamma.thickness(0.5, 1.0).unwrap();
        let lams: Vec<f64> = (0..12).map(|i| 0.75 * i as f64).collect();
        let q = crate::uncertainty::quadform_curve(&g, s / 2.0, &mask, &lams, &tight()).unwrap();
        let abs = absorb_damping_estimate(&gamma, 0.5, Some(&cert), &q.envelope).unwrap();
        let sweep = resolvent_sweep(&g, Some(&gamma), s, &symmetric_lambdas(8.0, 17), 1, &tight()).unwrap();
        let check = abs.cross_check(&sweep.points);
        assert_eq!(check.violations, 0, "{check:?}");
    }
}
