use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fft::FftPlan;
use crate::C64;

/// A `d`-dimensional periodic lattice (`d` = 1 or 2) with `n` points per axis
/// on a box of side `box_len`, plus its dual frequency lattice.
///
/// Sample `j` on an axis sits at `x_j = -box_len/2 + j h`, so the origin is
/// sample `n/2`. Frequency index `k ∈ {-n/2, …, n/2-1}` is stored in FFT order
/// and has value `ξ_k = 2πk / box_len`. Cloning is cheap; the transform plan
/// and frequency tables are shared.
#[derive(Debug, Clone)]
pub struct TorusGrid {
    d: usize,
    n: usize,
    box_len: f64,
    tables: Arc<Tables>,
}

#[derive(Debug)]
struct Tables {
    plan: FftPlan,
    freqs: Vec<f64>,
    coords: Vec<f64>,
    freq_sq: Vec<f64>,
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d && self.n == other.n && self.box_len == other.box_len
    }
}

impl TorusGrid {
    pub fn new(d: usize, n: usize, box_len: f64) -> Result<Self> {
        if d != 1 && d != 2 {
            return Err(Error::Config(format!("dimension must be 1 or 2, got {d}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Config(format!(
                "points per axis must be a power of two >= 8, got {n}"
            )));
        }
        if !(box_len > 0.0) || !box_len.is_finite() {
            return Err(Error::Config(format!("box length must be positive, got {box_len}")));
        }
        let h = box_len / n as f64;
        let freqs: Vec<f64> = (0..n)
            .map(|j| 2.0 * PI * Self::index_to_wavenumber(j, n) as f64 / box_len)
            .collect();
        let coords: Vec<f64> = (0..n).map(|j| -box_len / 2.0 + j as f64 * h).collect();
        let freq_sq = match d {
            1 => freqs.iter().map(|x| x * x).collect(),
            _ => {
                let mut v = Vec::with_capacity(n * n);
                for a in &freqs {
                    for b in &freqs {
                        v.push(a * a + b * b);
                    }
                }
                v
            }
        };
        Ok(Self {
            d,
            n,
            box_len,
            tables: Arc::new(Tables { plan: FftPlan::new(n), freqs, coords, freq_sq }),
        })
    }

    fn index_to_wavenumber(j: usize, n: usize) -> i64 {
        if j < n / 2 {
            j as i64
        } else {
            j as i64 - n as i64
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn box_len(&self) -> f64 {
        self.box_len
    }

    pub fn spacing(&self) -> f64 {
        self.box_len / self.n as f64
    }

    /// Total number of samples, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.d as i32)
    }

    /// Per-axis frequency values in FFT storage order.
    pub fn axis_freqs(&self) -> &[f64] {
        &self.tables.freqs
    }

    /// Per-axis frequencies sorted ascending, `2πk/L` for `k = -n/2 … n/2-1`.
    pub fn sorted_axis_freqs(&self) -> Vec<f64> {
        let n = self.n;
        (0..n).map(|i| self.tables.freqs[(i + n / 2) % n]).collect()
    }

    /// Largest per-axis frequency magnitude, `πn/L`.
    pub fn max_axis_freq(&self) -> f64 {
        PI * self.n as f64 / self.box_len
    }

    /// Per-axis sample coordinates.
    pub fn axis_coords(&self) -> &[f64] {
        &self.tables.coords
    }

    /// `|ξ|²` for every lattice frequency, in storage order.
    pub fn freq_sq(&self) -> &[f64] {
        &self.tables.freq_sq
    }

    /// Integer wavenumbers of the flat storage index `idx`.
    pub fn wavenumbers(&self, idx: usize) -> [i64; 2] {
        match self.d {
            1 => [Self::index_to_wavenumber(idx, self.n), 0],
            _ => [
                Self::index_to_wavenumber(idx / self.n, self.n),
                Self::index_to_wavenumber(idx % self.n, self.n),
            ],
        }
    }

    /// Frequency vector of flat index `idx`; second entry is 0 when `d = 1`.
    pub fn freq(&self, idx: usize) -> [f64; 2] {
        let f = &self.tables.freqs;
        match self.d {
            1 => [f[idx], 0.0],
            _ => [f[idx / self.n], f[idx % self.n]],
        }
    }

    /// Physical coordinates of flat index `idx`; second entry is 0 when `d = 1`.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let c = &self.tables.coords;
        match self.d {
            1 => [c[idx], 0.0],
            _ => [c[idx / self.n], c[idx % self.n]],
        }
    }

    /// Flat index of the frequency with the given wavenumbers (FFT order).
    pub fn freq_index(&self, k: [i64; 2]) -> usize {
        let n = self.n as i64;
        let wrap = |k: i64| k.rem_euclid(n) as usize;
        match self.d {
            1 => wrap(k[0]),
            _ => wrap(k[0]) * self.n + wrap(k[1]),
        }
    }

    /// Whether `idx` touches the unpaired Nyquist wavenumber `-n/2` on some axis.
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let k = self.wavenumbers(idx);
        let nyq = -(self.n as i64) / 2;
        k[0] == nyq || (self.d == 2 && k[1] == nyq)
    }

    pub(crate) fn forward(&self, data: &mut [C64]) {
        self.tables.plan.transform(data, self.d, false);
    }

    pub(crate) fn inverse(&self, data: &mut [C64]) {
        self.tables.plan.transform(data, self.d, true);
    }

    pub(crate) fn check_same(&self, other: &TorusGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "grids differ: (d={}, n={}, L={}) vs (d={}, n={}, L={})",
                self.d, self.n, self.box_len, other.d, other.n, other.box_len
            )))
        }
    }
}
