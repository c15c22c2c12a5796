//! Discrete spectral inequalities on the torus.
//!
//! Two quantities are measured. The spectral constant of a set `Ω` at band
//! radius `R` is the sharp `C` in `‖f‖ ≤ C ‖f‖_{L²(Ω)}` over lattice
//! band-limited `f` (`supp f̂ ⊂ B(0,R)`): `C = λ_min(P_R χ_Ω P_R)^{-1/2}`
//! restricted to the band. The resolvent quadratic form is
//! `Q_λ = ((−Δ+1)^{s/2} − λ)² + χ_Ω`, whose smallest eigenvalue `μ_min(λ)` is
//! the best constant in `μ‖f‖² ≤ ‖((−Δ+1)^{s/2}−λ)f‖² + ‖f‖²_{L²(Ω)}`.
//! Both are computed matrix-free; the transforms are the only dense work.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::eigen::{smallest_eigenpair, EigenOptions, HermitianOperator};
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::TorusGrid;
use crate::random::{gaussian_complex, rng};
use crate::symbol::{AnnulusSpec, FracSymbol};
use crate::C64;

/// `min |(|ξ|²+1)^{s/2} − λ|` over lattice frequencies outside the annulus
/// `A_λ`; `+∞` when every lattice frequency lies inside it.
///
/// Squared, this is the best lattice constant `c` in
/// `c‖(I−P_λ)f‖² ≤ ‖((−Δ+1)^{s/2}−λ)f‖²`.
pub fn offband_gap(lam: f64, s: f64, grid: &TorusGrid) -> f64 {
    let annulus = AnnulusSpec::new(lam, s);
    let sym = FracSymbol::full(s);
    grid.freq_sq()
        .iter()
        .filter(|&&r2| !annulus.contains_sq(r2))
        .map(|&r2| (sym.at_sq(r2) - lam).abs())
        .fold(f64::INFINITY, f64::min)
}

fn check_mask(grid: &TorusGrid, omega: &[bool]) -> Result<f64> {
    if omega.len() != grid.len() {
        return Err(Error::Shape(format!(
            "mask has {} samples, grid has {}",
            omega.len(),
            grid.len()
        )));
    }
    Ok(omega.iter().filter(|&&b| b).count() as f64 / omega.len() as f64)
}

fn apply_mask(grid: &TorusGrid, omega: &[bool], spec: &mut [C64]) {
    grid.inverse(spec);
    for (v, &m) in spec.iter_mut().zip(omega) {
        if !m {
            *v = C64::new(0.0, 0.0);
        }
    }
    grid.forward(spec);
}

/// `P_R χ_Ω P_R` acting on the coefficients of the band `|ξ| ≤ R`.
struct BandRestriction<'a> {
    grid: &'a TorusGrid,
    omega: &'a [bool],
    band: Vec<usize>,
}

impl HermitianOperator for BandRestriction<'_> {
    fn dim(&self) -> usize {
        self.band.len()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let mut full = vec![C64::new(0.0, 0.0); self.grid.len()];
        for (&i, &v) in self.band.iter().zip(x) {
            full[i] = v;
        }
        apply_mask(self.grid, self.omega, &mut full);
        for (&i, out) in self.band.iter().zip(y.iter_mut()) {
            *out = full[i];
        }
    }
}

/// One evaluation of the spectral constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralConstant {
    pub radius: f64,
    /// `λ_min^{-1/2}`; `+∞` when `λ_min` is not certified above the
    /// eigen-residual (numerically, a band-limited function vanishes on `Ω`).
    pub constant: f64,
    pub min_eig: f64,
    pub residual: f64,
    pub iterations: usize,
    pub band_dim: usize,
}

/// Sharp lattice constant `sup ‖f‖/‖f‖_{L²(Ω)}` over `supp f̂ ⊂ B(0, radius)`.
pub fn spectral_constant(
    grid: &TorusGrid,
    omega: &[bool],
    radius: f64,
    opts: &EigenOptions,
) -> Result<SpectralConstant> {
    let frac = check_mask(grid, omega)?;
    if frac == 0.0 {
        return Err(Error::InvalidInput("Ω has zero measure".into()));
    }
    if !(radius >= 0.0) {
        return Err(Error::InvalidInput(format!("radius must be >= 0, got {radius}")));
    }
    let r2max = radius * radius;
    let band: Vec<usize> = (0..grid.len()).filter(|&i| grid.freq_sq()[i] <= r2max).collect();
    let op = BandRestriction { grid, omega, band };
    let inner = EigenOptions { tol: opts.tol.min(1e-12), ..*opts };
    let pair = smallest_eigenpair(&op, None, &inner)?;
    // |θ − λ_min| ≤ residual for Hermitian operators
    let constant =
        if pair.value > pair.residual { 1.0 / pair.value.sqrt() } else { f64::INFINITY };
    Ok(SpectralConstant {
        radius,
        constant,
        min_eig: pair.value,
        residual: pair.residual,
        iterations: pair.iterations,
        band_dim: op.band.len(),
    })
}

/// `Q_λ = (S − λ)² + χ_Ω` in Fourier coordinates, `S = (|ξ|²+1)^{s/2}`.
struct QuadForm<'a> {
    grid: &'a TorusGrid,
    omega: &'a [bool],
    diag: Vec<f64>,
    frac: f64,
}

impl HermitianOperator for QuadForm<'_> {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        y.copy_from_slice(x);
        apply_mask(self.grid, self.omega, y);
        for ((out, xi), d) in y.iter_mut().zip(x).zip(&self.diag) {
            *out += xi * d;
        }
    }

    fn precondition(&self, theta: f64, r: &[C64], t: &mut [C64]) {
        for ((ti, ri), d) in t.iter_mut().zip(r).zip(&self.diag) {
            let mut den = d + self.frac - theta;
            if den.abs() < 1e-4 {
                den = 1e-4f64.copysign(den);
            }
            *ti = ri / den;
        }
    }
}

/// One point of the resolvent quadratic-form sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadFormPoint {
    pub lambda: f64,
    pub mu_min: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Smallest eigenvalue of `((−Δ+1)^{s/2} − λ)² + χ_Ω`, residual-certified at
/// `opts.tol`.
pub fn quadform_min_eig(
    grid: &TorusGrid,
    s: f64,
    omega: &[bool],
    lam: f64,
    opts: &EigenOptions,
) -> Result<QuadFormPoint> {
    let frac = check_mask(grid, omega)?;
    if !(s >= 1.0) || !(lam >= 0.0) {
        return Err(Error::InvalidInput(format!("need s >= 1 and lambda >= 0 (s={s}, lambda={lam})")));
    }
    let sym = FracSymbol::full(s);
    let diag: Vec<f64> = grid.freq_sq().iter().map(|&r2| (sym.at_sq(r2) - lam).powi(2)).collect();
    let mut r = rng(opts.seed);
    let start: Vec<C64> = diag
        .iter()
        .map(|d| gaussian_complex(&mut r) / (1.0 + d))
        .collect();
    let op = QuadForm { grid, omega, diag, frac };
    let pair = smallest_eigenpair(&op, Some(&start), opts)?;
    Ok(QuadFormPoint { lambda: lam, mu_min: pair.value, residual: pair.residual, iterations: pair.iterations })
}

/// Exponential minorant `y ≥ c·e^{−C x}` of positive samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub c: f64,
    /// Decay exponent; 0 when the least-squares slope is nonnegative.
    #[serde(rename = "C")]
    pub rate: f64,
    /// Least-squares slope of `log y` against `x` before clamping.
    pub slope: f64,
    /// Largest `log y − log envelope` over the samples.
    pub worst_violation: f64,
    /// Root-mean-square residual of the least-squares line in log space.
    pub rms_residual: f64,
}

impl Envelope {
    pub fn at(&self, x: f64) -> f64 {
        self.c * (-self.rate * x).exp()
    }
}

/// Fits `log y` linearly in `x`, then shifts the line down until it is a
/// minorant of every sample.
///
/// When the slope is positive the envelope is the constant floor `min y`.
pub fn envelope_fit(xs: &[f64], ys: &[f64]) -> Result<Envelope> {
    if xs.len() != ys.len() || xs.len() < 8 {
        return Err(Error::InvalidInput(format!(
            "envelope fit needs at least 8 paired samples, got {} / {}",
            xs.len(),
            ys.len()
        )));
    }
    if let Some(y) = ys.iter().find(|y| !(**y > 0.0) || !y.is_finite()) {
        return Err(Error::InvalidInput(format!("envelope fit needs positive samples, got {y}")));
    }
    let logs: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (slope, intercept, rms) = least_squares(xs, &logs);
    let (rate, line_slope, base) = if slope <= 0.0 {
        (-slope, slope, intercept)
    } else {
        (0.0, 0.0, logs.iter().copied().fold(f64::INFINITY, f64::min))
    };
    let shift = xs
        .iter()
        .zip(&logs)
        .map(|(x, l)| base + line_slope * x - l)
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    let lowered = base - shift;
    let worst = xs
        .iter()
        .zip(&logs)
        .map(|(x, l)| l - (lowered + line_slope * x))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Envelope { c: lowered.exp(), rate, slope, worst_violation: worst, rms_residual: rms })
}

/// Ordinary least squares `y ≈ a x + b`; returns `(a, b, rms residual)`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let a = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let b = my - a * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - a * x - b).powi(2)).sum();
    (a, b, (rss / n).sqrt())
}

/// Spectral constants over a list of radii with a `log C` vs `R` line fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralConstantCurve {
    pub points: Vec<SpectralConstant>,
    pub log_slope: f64,
    pub log_intercept: f64,
    /// Largest absolute residual of the line fit.
    pub max_residual: f64,
    pub rms_residual: f64,
    /// Points with an infinite constant, left out of the fit.
    pub unresolved: usize,
}

impl SpectralConstantCurve {
    /// Fits the finite constants; the fit is NaN with fewer than two.
    pub fn from_points(points: Vec<SpectralConstant>) -> Self {
        let (xs, ys): (Vec<f64>, Vec<f64>) = points
            .iter()
            .filter(|p| p.constant.is_finite())
            .map(|p| (p.radius, p.constant.ln()))
            .unzip();
        let unresolved = points.len() - xs.len();
        if xs.len() < 2 {
            return Self {
                points,
                log_slope: f64::NAN,
                log_intercept: f64::NAN,
                max_residual: f64::NAN,
                rms_residual: f64::NAN,
                unresolved,
            };
        }
        let (a, b, rms) = least_squares(&xs, &ys);
        let max_residual =
            xs.iter().zip(&ys).map(|(x, y)| (y - a * x - b).abs()).fold(0.0, f64::max);
        Self { points, log_slope: a, log_intercept: b, max_residual, rms_residual: rms, unresolved }
    }

    /// Range of `log C` over the finite constants.
    pub fn log_range(&self) -> f64 {
        let logs = self.points.iter().filter(|p| p.constant.is_finite()).map(|p| p.constant.ln());
        let hi = logs.clone().fold(f64::NEG_INFINITY, f64::max);
        let lo = logs.fold(f64::INFINITY, f64::min);
        hi - lo
    }
}

pub fn spectral_constant_curve(
    grid: &TorusGrid,
    omega: &[bool],
    radii: &[f64],
    opts: &EigenOptions,
) -> Result<SpectralConstantCurve> {
    let points = radii
        .iter()
        .map(|&r| spectral_constant(grid, omega, r, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralConstantCurve::from_points(points))
}

/// `μ_min(λ)` over a sweep with its exponential envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadFormCurve {
    pub s: f64,
    pub points: Vec<QuadFormPoint>,
    pub envelope: Envelope,
}

impl QuadFormCurve {
    pub fn from_points(s: f64, points: Vec<QuadFormPoint>) -> Result<Self> {
        let xs: Vec<f64> = points.iter().map(|p| p.lambda).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.mu_min).collect();
        let envelope = envelope_fit(&xs, &ys)?;
        Ok(Self { s, points, envelope })
    }
}

pub fn quadform_curve(
    grid: &TorusGrid,
    s: f64,
    omega: &[bool],
    lambdas: &[f64],
    opts: &EigenOptions,
) -> Result<QuadFormCurve> {
    let points = lambdas
        .iter()
        .map(|&l| quadform_min_eig(grid, s, omega, l, opts))
        .collect::<Result<Vec<_>>>()?;
    QuadFormCurve::from_points(s, points)
}

/// Terms of the annulus-splitting argument for one field:
///
/// `‖f‖² = ‖P f‖² + ‖(I−P)f‖²`
/// `     ≤ Ĉ‖P f‖²_Ω + ‖(I−P)f‖²`
/// `     ≤ 2Ĉ‖f‖²_Ω + 2Ĉ‖(I−P)f‖²_Ω + ‖(I−P)f‖²`
/// `     ≤ 2Ĉ‖f‖²_Ω + (2Ĉ+1)‖(I−P)f‖²`
///
/// with `P = P_λ` the annulus projection and `Ĉ` the squared spectral constant
/// at radius `λ + 2`. `slacks[i] = steps[i+1] − steps[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusChain {
    pub lambda: f64,
    pub c_hat: f64,
    pub steps: [f64; 4],
    pub slacks: [f64; 3],
    /// `‖((−Δ+1)^{s/2}−λ)f‖² − gap²·‖(I−P)f‖²`, nonnegative by the gap bound.
    pub gap_slack: f64,
}

impl AnnulusChain {
    pub fn holds(&self, rel_tol: f64) -> bool {
        let scale = self.steps[0].abs().max(1e-300);
        self.slacks.iter().all(|s| *s >= -rel_tol * scale) && self.gap_slack >= -rel_tol * scale
    }
}

pub fn annulus_chain(
    f: &SpectralField,
    omega: &[bool],
    lam: f64,
    s: f64,
    c_hat: f64,
) -> Result<AnnulusChain> {
    check_mask(f.grid(), omega)?;
    let p = f.project_annulus(lam, s);
    let q = f.sub(&p)?;
    let total = f.l2_norm_sq();
    let q_sq = q.l2_norm_sq();
    let l0 = p.l2_norm_sq() + q_sq;
    let l1 = c_hat * p.masked_norm_sq(omega) + q_sq;
    let l2 = 2.0 * c_hat * f.masked_norm_sq(omega) + 2.0 * c_hat * q.masked_norm_sq(omega) + q_sq;
    let l3 = 2.0 * c_hat * f.masked_norm_sq(omega) + (2.0 * c_hat + 1.0) * q_sq;
    let sym = FracSymbol::full(s);
    let shifted = f.map_spectrum(|_, r2| C64::new(sym.at_sq(r2) - lam, 0.0));
    let gap = offband_gap(lam, s, f.grid());
    let gap_term = if gap.is_finite() { gap * gap * q_sq } else { 0.0 };
    debug_assert!((l0 - total).abs() <= 1e-10 * total.max(1e-300));
    Ok(AnnulusChain {
        lambda: lam,
        c_hat,
        steps: [total, l1, l2, l3],
        slacks: [l1 - total, l2 - l1, l3 - l2],
        gap_slack: shifted.l2_norm_sq() - gap_term,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::damping::{DampingProfile, DampingSpec};
    use crate::random::white_noise;
    use core::f64::consts::PI;
    use nalgebra::DMatrix;

    fn stripes_mask(grid: &TorusGrid) -> Vec<bool> {
        stripes_mask_period(grid, 2.0)
    }

    fn stripes_mask_period(grid: &TorusGrid, period: f64) -> Vec<bool> {
        DampingProfile::make(grid, &DampingSpec::Stripes { period, duty: 0.5, height: 1.0 })
            .unwrap()
            .level_set(0.5)
    }

    /// Dense `Q_λ` built from a direct DFT of the mask, no FFT involved.
    fn dense_quadform(grid: &TorusGrid, s: f64, omega: &[bool], lam: f64) -> DMatrix<C64> {
        let n = grid.len();
        let mhat: Vec<C64> = (0..n)
            .map(|k| {
                let sum: C64 = (0..n)
                    .filter(|&j| omega[j])
                    .map(|j| {
                        let a = -2.0 * PI * (k * j) as f64 / n as f64;
                        C64::new(a.cos(), a.sin())
                    })
                    .sum();
                sum / n as f64
            })
            .collect();
        DMatrix::from_fn(n, n, |k, l| {
            let mut v = mhat[(k + n - l) % n];
            if k == l {
                let wk = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
                let xi = 2.0 * PI * wk / grid.box_len();
                v += ((xi * xi + 1.0).powf(s / 2.0) - lam).powi(2);
            }
            v
        })
    }

    fn dense_min(m: DMatrix<C64>) -> f64 {
        m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn offband_gap_examples() {
        let g = TorusGrid::new(1, 64, 2.0 * PI).unwrap();
        assert!((offband_gap(0.0, 2.0, &g) - 2.0).abs() < 1e-14);
        let tiny = TorusGrid::new(1, 8, 0.01).unwrap();
        assert!(offband_gap(1.0, 1.0, &tiny).is_finite());
    }

    #[test]
    fn offband_gap_vacuous_when_lattice_inside_annulus() {
        // n=8 on a huge box: every |ξ| is below 0.02, all inside A_1 for s=1
        let g = TorusGrid::new(1, 8, 2000.0).unwrap();
        assert_eq!(offband_gap(1.0, 1.0, &g), f64::INFINITY);
    }

    /// Continuum oracle: min |μ^s − λ| over μ ≥ 1 with |μ − λ^{1/s}| > 1.
    #[test]
    fn continuum_gap_is_at_least_one() {
        for &s in &[1.0, 1.5, 2.0, 3.0] {
            for il in 0..=200 {
                let lam = il as f64 * 0.5;
                let c = lam.powf(1.0 / s);
                let mut best = f64::INFINITY;
                for im in 0..200_000 {
                    let mu = 1.0 + im as f64 * 1e-4;
                    if (mu - c).abs() > 1.0 {
                        best = best.min((mu.powf(s) - lam).abs());
                    }
                }
                assert!(best >= 1.0 - 1e-9, "s={s} lam={lam} best={best}");
            }
        }
    }

    #[test]
    fn spectral_constant_trivial_cases() {
        let g = TorusGrid::new(1, 64, 16.0).unwrap();
        let full = vec![true; g.len()];
        for r in [0.0, 2.0, 8.0] {
            let c = spectral_constant(&g, &full, r, &EigenOptions::default()).unwrap();
            assert!((c.constant - 1.0).abs() < 1e-8);
        }
        let mask = stripes_mask(&g);
        let c = spectral_constant(&g, &mask, 0.0, &EigenOptions::default()).unwrap();
        assert_eq!(c.band_dim, 1);
        assert!((c.constant - 2f64.sqrt()).abs() < 1e-12);
        assert!(matches!(
            spectral_constant(&g, &vec![false; g.len()], 1.0, &EigenOptions::default()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn spectral_constant_matches_dense_oracle() {
        // 64 samples in Ω, at most 41 band modes: P_R χ_Ω P_R is nonsingular
        let g = TorusGrid::new(1, 128, 8.0).unwrap();
        let mask = stripes_mask(&g);
        for r in [2.0, 4.0, 8.0, 16.0] {
            // P_R χ_Ω P_R restricted to the band, from the dense mask DFT
            let q = dense_quadform(&g, 2.0, &mask, 0.0);
            let band: Vec<usize> = (0..g.len()).filter(|&i| g.freq_sq()[i] <= r * r).collect();
            let sub = DMatrix::from_fn(band.len(), band.len(), |a, b| {
                let v = q[(band[a], band[b])];
                if a == b {
                    v - (g.freq_sq()[band[a]] + 1.0).powi(2)
                } else {
                    v
                }
            });
            let oracle = 1.0 / dense_min(sub).sqrt();
            let c = spectral_constant(&g, &mask, r, &EigenOptions::default()).unwrap();
            assert!((c.constant - oracle).abs() < 1e-6 * oracle, "R={r}: {} vs {oracle}", c.constant);
        }
    }

    #[test]
    fn spectral_constant_monotone_in_radius_and_set() {
        let g = TorusGrid::new(1, 128, 16.0).unwrap();
        let small = stripes_mask(&g);
        let big: Vec<bool> = DampingProfile::make(
            &g,
            &DampingSpec::Stripes { period: 2.0, duty: 0.75, height: 1.0 },
        )
        .unwrap()
        .level_set(0.5);
        assert!(small.iter().zip(&big).all(|(a, b)| !a || *b));
        let opts = EigenOptions { tol: 1e-10, ..EigenOptions::default() };
        let mut prev = 0.0;
        for r in [1.0, 2.0, 4.0, 8.0] {
            let cs = spectral_constant(&g, &small, r, &opts).unwrap().constant;
            let cb = spectral_constant(&g, &big, r, &opts).unwrap().constant;
            assert!(cs >= prev - 1e-8 && cb <= cs + 1e-8);
            prev = cs;
        }
    }

    #[test]
    fn band_wider_than_omega_is_singular() {
        // 71 band modes against 64 samples of Ω: some band-limited f vanishes on Ω
        let g = TorusGrid::new(1, 128, 16.0).unwrap();
        let c = spectral_constant(&g, &stripes_mask(&g), 14.0, &EigenOptions::default()).unwrap();
        assert_eq!(c.band_dim, 71);
        assert_eq!(c.constant, f64::INFINITY);
    }

    #[test]
    fn quadform_trivial_cases() {
        let g = TorusGrid::new(1, 64, 16.0).unwrap();
        let sym = FracSymbol::full(2.0);
        for lam in [0.0, 3.3, 12.0] {
            let dmin = g.freq_sq().iter().map(|&r2| (sym.at_sq(r2) - lam).powi(2)).fold(f64::INFINITY, f64::min);
            let full = quadform_min_eig(&g, 2.0, &vec![true; g.len()], lam, &EigenOptions::default()).unwrap();
            assert!((full.mu_min - (1.0 + dmin)).abs() < 1e-9 * (1.0 + dmin));
            let empty = quadform_min_eig(&g, 2.0, &vec![false; g.len()], lam, &EigenOptions::default()).unwrap();
            assert!((empty.mu_min - dmin).abs() < 1e-8 * dmin.max(1.0));
        }
    }

    #[test]
    fn quadform_matches_dense_oracle() {
        let g = TorusGrid::new(1, 128, 16.0).unwrap();
        let mask = stripes_mask(&g);
        for (s, lam) in [(2.0, 5.0), (1.0, 3.0), (2.0, 17.5)] {
            let oracle = dense_min(dense_quadform(&g, s, &mask, lam));
            let got = quadform_min_eig(&g, s, &mask, lam, &EigenOptions::default()).unwrap();
            assert!(got.residual <= 1e-8);
            assert!((got.mu_min - oracle).abs() < 1e-6 * oracle, "{} vs {oracle}", got.mu_min);
        }
    }

    #[test]
    fn envelope_examples() {
        let xs: Vec<f64> = (0..12).map(|i| i as f64 * 0.7).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (-2.0 * x).exp()).collect();
        let e = envelope_fit(&xs, &ys).unwrap();
        assert!((e.c - 1.0).abs() < 1e-10 && (e.rate - 2.0).abs() < 1e-10);
        let flat = envelope_fit(&xs, &vec![0.3; 12]).unwrap();
        assert!((flat.c - 0.3).abs() < 1e-12 && flat.rate == 0.0);
        assert!(matches!(envelope_fit(&xs[..5], &ys[..5]), Err(Error::InvalidInput(_))));
        let mut bad = ys.clone();
        bad[3] = 0.0;
        assert!(matches!(envelope_fit(&xs, &bad), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn envelope_is_minorant() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (-0.3 * x).exp() * (1.5 + (x * 1.7).sin())).collect();
        let e = envelope_fit(&xs, &ys).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!(e.at(*x) <= y * (1.0 + 1e-12));
        }
        assert!(e.worst_violation >= 0.0);
    }

    #[test]
    fn annulus_chain_holds_for_random_fields() {
        // finer stripes keep C(32) well inside double precision
        let g = TorusGrid::new(1, 512, 16.0).unwrap();
        let mask = stripes_mask_period(&g, 1.0);
        let opts = EigenOptions::default();
        for (i, lam) in [0.0, 4.5, 12.0, 30.0].into_iter().enumerate() {
            let c = spectral_constant(&g, &mask, lam + 2.0, &opts).unwrap().constant;
            assert!(c.is_finite());
            for seed in 0..25 {
                let f = white_noise(&g, 1000 * i as u64 + seed);
                let chain = annulus_chain(&f, &mask, lam, 2.0, c * c).unwrap();
                assert!(chain.holds(1e-10), "{chain:?}");
            }
        }
    }
}
