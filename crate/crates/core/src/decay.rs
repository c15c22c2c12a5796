//! Classification of an energy trace as exponential, polynomial or
//! logarithmic decay by least squares in transformed coordinates.

use alloc::format;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::EnergyTrace;
use crate::uncertainty::least_squares;

/// Margins below this are reported as ambiguous.
pub const AMBIGUITY_MARGIN: f64 = 1.05;

/// Minimum number of samples inside the fit window.
pub const MIN_WINDOW_SAMPLES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayModel {
    /// `E ≈ a·e^{−ωt}`.
    Exponential,
    /// `E ≈ a·t^{−p}`.
    Polynomial,
    /// `E ≈ a·(log(e+t))^{−q}`.
    Logarithmic,
    /// The best-fitting model has a nonpositive rate.
    NoDecay,
}

impl DecayModel {
    fn abscissa(self, t: f64) -> f64 {
        match self {
            DecayModel::Exponential => t,
            DecayModel::Polynomial => t.ln(),
            DecayModel::Logarithmic => (core::f64::consts::E + t).ln().ln(),
            DecayModel::NoDecay => 0.0,
        }
    }
}

/// One candidate model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelFit {
    pub model: DecayModel,
    /// `ω`, `p` or `q`: minus the fitted slope.
    pub rate: f64,
    pub prefactor: f64,
    /// Root-mean-square residual in `log E`.
    pub rms_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub model: DecayModel,
    pub rate: f64,
    pub prefactor: f64,
    pub fit_window: [f64; 2],
    pub rms_residual: f64,
    /// Second-best over best residual, `≥ 1`.
    pub model_selection_margin: f64,
    pub ambiguous: bool,
    pub samples: usize,
    /// All three fits, best first.
    pub candidates: Vec<ModelFit>,
}

/// Fits on `window`, default `[0.2T, T]` with `T` the last sample time.
pub fn fit_decay(trace: &EnergyTrace, window: Option<[f64; 2]>) -> Result<DecayReport> {
    let t_end = *trace
        .times
        .last()
        .ok_or_else(|| Error::InvalidInput("empty trace".into()))?;
    fit_decay_samples(&trace.times, &trace.energies, window.unwrap_or([0.2 * t_end, t_end]))
}

pub fn fit_decay_samples(times: &[f64], energies: &[f64], window: [f64; 2]) -> Result<DecayReport> {
    if times.len() != energies.len() {
        return Err(Error::Shape(format!("{} times, {} energies", times.len(), energies.len())));
    }
    let [t1, t2] = window;
    if !(t1 > 0.0) || !(t2 > t1) {
        return Err(Error::InvalidInput(format!("fit window must satisfy 0 < T1 < T2, got [{t1}, {t2}]")));
    }
    let first = times.first().copied().unwrap_or(f64::NAN);
    let last = times.last().copied().unwrap_or(f64::NAN);
    let slack = 1e-9 * t2.abs();
    if !(t1 >= first - slack && t2 <= last + slack) {
        return Err(Error::InvalidInput(format!(
            "fit window [{t1}, {t2}] is outside the trace [{first}, {last}]"
        )));
    }
    let (ts, logs): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(energies)
        .filter(|(t, _)| **t >= t1 - slack && **t <= t2 + slack)
        .map(|(&t, &e)| {
            if !(e > 0.0) || !e.is_finite() {
                Err(Error::InvalidInput(format!("nonpositive energy {e} at t={t}")))
            } else {
                Ok((t, e.ln()))
            }
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    if ts.len() < MIN_WINDOW_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "fit window holds {} samples, need at least {MIN_WINDOW_SAMPLES}",
            ts.len()
        )));
    }

    let mut candidates: Vec<ModelFit> = [DecayModel::Exponential, DecayModel::Polynomial, DecayModel::Logarithmic]
        .into_iter()
        .map(|model| {
            let xs: Vec<f64> = ts.iter().map(|&t| model.abscissa(t)).collect();
            let (slope, intercept, rms) = least_squares(&xs, &logs);
            ModelFit { model, rate: -slope, prefactor: intercept.exp(), rms_residual: rms }
        })
        .collect();
    candidates.sort_by(|a, b| a.rms_residual.total_cmp(&b.rms_residual));
    let best = candidates[0];
    let second = candidates[1].rms_residual;
    let margin = if best.rms_residual > 0.0 {
        second / best.rms_residual
    } else if second > 0.0 {
        f64::INFINITY
    } else {
        1.0
    };
    let model = if best.rate > 0.0 { best.model } else { DecayModel::NoDecay };
    Ok(DecayReport {
        model,
        rate: best.rate,
        prefactor: best.prefactor,
        fit_window: window,
        rms_residual: best.rms_residual,
        model_selection_margin: margin,
        ambiguous: margin < AMBIGUITY_MARGIN,
        samples: ts.len(),
        candidates,
    })
}

/// The two readings `s/(4−2s)` and `2s/(4−2s)` of the polynomial energy rate
/// for `1 ≤ s < 2`; `None` outside that range.
pub fn polynomial_rate_candidates(s: f64) -> Option<[f64; 2]> {
    if (1.0..2.0).contains(&s) {
        let p = s / (4.0 - 2.0 * s);
        Some([p, 2.0 * p])
    } else {
        None
    }
}
