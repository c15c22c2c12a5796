//! Time integration of `U' = 𝒜_γ U` by exact-flow Strang splitting.
//!
//! One step is `B(dt/2) ∘ A(dt) ∘ B(dt/2)` where `A` is the free flow, exact
//! in `w`-variables (`w₁ ↦ e^{iΛdt}w₁`, `w₂ ↦ e^{−iΛdt}w₂`), and `B` is the
//! pointwise damping flow `u₂ ↦ e^{−γ dt}u₂`. The state is kept in Fourier
//! coordinates between steps.

use alloc::format;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::damping::{DampingFamily, DampingProfile};
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::TorusGrid;
use crate::operator::{w_inverse, w_transform, StateVector, WPair};
use crate::random::shaped_noise;
use crate::symbol::FracSymbol;
use crate::C64;

/// `E = ½‖U‖²` in the energy space.
pub fn energy(u: &StateVector) -> f64 {
    0.5 * u.energy_norm().powi(2)
}

/// `0.2 / max Λ` over the lattice.
pub fn default_dt(grid: &TorusGrid, s: f64) -> f64 {
    let sym = FracSymbol::half(s);
    let max = grid.freq_sq().iter().fold(0.0f64, |m, &r2| m.max(sym.at_sq(r2)));
    0.2 / max
}

/// How the initial state of a run was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataSpec {
    /// `u₁` white noise weighted by `Λ⁻¹`, `u₂` white noise; both unit `L²`.
    Broadband { seed: u64 },
    /// Gaussian envelope times a carrier on the `w₂` branch only, so the
    /// packet travels towards `+x` at the group velocity `Λ'(k0)`.
    WavePacket { center: f64, wavenumber: f64, width: f64 },
}

impl DataSpec {
    pub fn build(&self, grid: &TorusGrid, s: f64) -> Result<StateVector> {
        match *self {
            DataSpec::Broadband { seed } => Ok(broadband_data(grid, s, seed)),
            DataSpec::WavePacket { center, wavenumber, width } => {
                wave_packet(grid, s, center, wavenumber, width)
            }
        }
    }
}

pub fn broadband_data(grid: &TorusGrid, s: f64, seed: u64) -> StateVector {
    let sym = FracSymbol::half(s);
    let u1 = shaped_noise(grid, seed.wrapping_mul(2), |r2| 1.0 / sym.at_sq(r2));
    let u2 = shaped_noise(grid, seed.wrapping_mul(2).wrapping_add(1), |_| 1.0);
    StateVector { u1, u2, s }
}

/// Right-moving packet `w₂ = exp(−(x−center)²/(2 width²) + i k0 x)`,
/// `w₁ = 0`, varying along the first axis only.
pub fn wave_packet(grid: &TorusGrid, s: f64, center: f64, wavenumber: f64, width: f64) -> Result<StateVector> {
    if !(width > 0.0) || !center.is_finite() || !wavenumber.is_finite() {
        return Err(Error::InvalidInput("wave packet needs width > 0 and finite center/wavenumber".into()));
    }
    let l = grid.box_len();
    let w2 = SpectralField::from_fn(grid, |p| {
        let dx = (p[0] - center + l / 2.0).rem_euclid(l) - l / 2.0;
        let env = (-dx * dx / (2.0 * width * width)).exp();
        C64::from_polar(env, wavenumber * p[0])
    });
    let spec: Vec<C64> = w2
        .spectrum()
        .iter()
        .enumerate()
        .map(|(i, &c)| if grid.is_nyquist(i) { C64::new(0.0, 0.0) } else { c })
        .collect();
    let w2 = SpectralField::from_spectrum(grid, spec)?;
    w_inverse(&WPair { w1: SpectralField::zeros(grid), w2 }, s)
}

/// `Λ'(k) = (s/2)·k·(k²+1)^{s/4−1}`, speed of a packet with carrier `k`.
pub fn group_velocity(k: f64, s: f64) -> f64 {
    0.5 * s * k * (k * k + 1.0).powf(s / 4.0 - 1.0)
}

/// Applies `(I − 𝒜₀)^{−k}`: `(1 − iΛ)^{−k}` on `w₁`, `(1 + iΛ)^{−k}` on `w₂`.
pub fn smooth_data(u: &StateVector, k: u32) -> Result<StateVector> {
    if k == 0 {
        return Err(Error::Precondition("smoothing order must be at least 1".into()));
    }
    let sym = FracSymbol::half(u.s);
    let w = w_transform(u)?;
    let pow = |z: C64| z.powi(-(k as i32));
    let w1 = w.w1.map_spectrum(|_, r2| pow(C64::new(1.0, -sym.at_sq(r2))));
    let w2 = w.w2.map_spectrum(|_, r2| pow(C64::new(1.0, sym.at_sq(r2))));
    w_inverse(&WPair { w1, w2 }, u.s)
}

/// Precomputed multipliers for repeated steps with a fixed `dt`.
pub struct StrangStepper {
    grid: TorusGrid,
    s: f64,
    dt: f64,
    half: Vec<f64>,
    rotation: Vec<C64>,
    half_damp: Option<Vec<f64>>,
}

impl StrangStepper {
    pub fn new(grid: &TorusGrid, gamma: Option<&DampingProfile>, dt: f64, s: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
        }
        if !(s >= 1.0) {
            return Err(Error::InvalidInput(format!("s must be >= 1, got {s}")));
        }
        if let Some(g) = gamma {
            grid.check_same(g.grid())?;
        }
        let sym = FracSymbol::half(s);
        let half: Vec<f64> = grid.freq_sq().iter().map(|&r2| sym.at_sq(r2)).collect();
        let rotation = half.iter().map(|&l| C64::from_polar(1.0, l * dt)).collect();
        let half_damp = gamma.map(|g| g.gamma().iter().map(|&v| (-0.5 * v * dt).exp()).collect());
        Ok(Self { grid: grid.clone(), s, dt, half, rotation, half_damp })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn damp(&self, u2: &mut [C64]) {
        if let Some(f) = &self.half_damp {
            self.grid.inverse(u2);
            for (v, m) in u2.iter_mut().zip(f) {
                *v *= m;
            }
            self.grid.forward(u2);
        }
    }

    /// One step on Fourier coefficients `(û₁, û₂)`.
    pub(crate) fn step_spectra(&self, u1: &mut [C64], u2: &mut [C64]) {
        self.damp(u2);
        let i = C64::new(0.0, 1.0);
        for k in 0..u1.len() {
            let l = self.half[k];
            let r = self.rotation[k];
            let w1 = (u1[k] * l - i * u2[k]) * r;
            let w2 = (u1[k] * l + i * u2[k]) * r.conj();
            u1[k] = (w1 + w2) / (2.0 * l);
            u2[k] = i * (w1 - w2) * 0.5;
        }
        self.damp(u2);
    }

    pub fn step(&self, u: &StateVector) -> Result<StateVector> {
        self.grid.check_same(u.grid())?;
        let mut a = u.u1.spectrum().into_owned();
        let mut b = u.u2.spectrum().into_owned();
        self.step_spectra(&mut a, &mut b);
        StateVector::new(
            SpectralField::from_spectrum(&self.grid, a)?,
            SpectralField::from_spectrum(&self.grid, b)?,
            self.s,
        )
    }

    /// `½(‖Λû₁‖² + ‖û₂‖²)·h^d` directly on coefficients.
    pub(crate) fn spectral_energy(&self, u1: &[C64], u2: &[C64]) -> f64 {
        let sum: f64 = u1
            .iter()
            .zip(u2)
            .zip(&self.half)
            .map(|((a, b), l)| l * l * a.norm_sqr() + b.norm_sqr())
            .sum();
        0.5 * sum * self.grid.cell_volume()
    }
}

/// One Strang step `B(dt/2) A(dt) B(dt/2)`.
pub fn step_strang(u: &StateVector, gamma: Option<&DampingProfile>, dt: f64, s: f64) -> Result<StateVector> {
    StrangStepper::new(u.grid(), gamma, dt, s)?.step(u)
}

/// Run description stored alongside a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub d: usize,
    pub n: usize,
    pub box_len: f64,
    pub family: Option<DampingFamily>,
    pub s: f64,
    pub dt: f64,
    pub steps_per_output: usize,
    pub data: Option<DataSpec>,
    pub smoothing: u32,
}

/// Energy samples `E(t) = ½‖U(t)‖²` at uniform output instants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    pub meta: TraceMeta,
}

impl EnergyTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Tolerated per-step energy increase, relative to `E(0)`.
const MONOTONE_TOL: f64 = 1e-12;

/// Integrates to `t_end`, sampling every `dt_out`. The internal step is
/// `dt_out / round(dt_out / dt)`.
pub fn simulate(
    u0: &StateVector,
    gamma: Option<&DampingProfile>,
    s: f64,
    t_end: f64,
    dt: f64,
    dt_out: f64,
) -> Result<EnergyTrace> {
    simulate_with_state(u0, gamma, s, t_end, dt, dt_out).map(|(t, _)| t)
}

/// [`simulate`], also returning the final state.
pub fn simulate_with_state(
    u0: &StateVector,
    gamma: Option<&DampingProfile>,
    s: f64,
    t_end: f64,
    dt: f64,
    dt_out: f64,
) -> Result<(EnergyTrace, StateVector)> {
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidInput(format!("final time must be positive, got {t_end}")));
    }
    if !(dt > 0.0) || !(dt_out >= dt) {
        return Err(Error::InvalidInput(format!("need 0 < dt <= dt_out (dt={dt}, dt_out={dt_out})")));
    }
    u0.check_nyquist()?;
    let grid = u0.grid();
    let per_out = ((dt_out / dt).round() as usize).max(1);
    let stepper = StrangStepper::new(grid, gamma, dt_out / per_out as f64, s)?;
    let outputs = (t_end / dt_out - 1e-9).ceil() as usize;

    let mut a = u0.u1.spectrum().into_owned();
    let mut b = u0.u2.spectrum().into_owned();
    let e0 = stepper.spectral_energy(&a, &b);
    if !(e0 > 0.0) || !e0.is_finite() {
        return Err(Error::InvalidInput(format!("initial energy must be positive and finite, got {e0}")));
    }
    let mut times = Vec::with_capacity(outputs + 1);
    let mut energies = Vec::with_capacity(outputs + 1);
    times.push(0.0);
    energies.push(e0);
    let mut prev = e0;
    let mut step = 0usize;
    for j in 1..=outputs {
        for _ in 0..per_out {
            step += 1;
            stepper.step_spectra(&mut a, &mut b);
            let e = stepper.spectral_energy(&a, &b);
            if !e.is_finite() {
                return Err(Error::NumericFailure { step, what: "non-finite energy".into() });
            }
            if e > prev + MONOTONE_TOL * e0 {
                return Err(Error::NumericFailure {
                    step,
                    what: format!("energy increased from {prev:e} to {e:e}"),
                });
            }
            prev = e;
        }
        times.push(j as f64 * dt_out);
        energies.push(prev);
    }
    let meta = TraceMeta {
        d: grid.dim(),
        n: grid.points_per_axis(),
        box_len: grid.box_len(),
        family: gamma.map(|g| g.family()),
        s,
        dt: stepper.dt(),
        steps_per_output: per_out,
        data: None,
        smoothing: 0,
    };
    let state = StateVector::new(
        SpectralField::from_spectrum(grid, a)?,
        SpectralField::from_spectrum(grid, b)?,
        s,
    )?;
    Ok((EnergyTrace { times, energies, meta }, state))
}
