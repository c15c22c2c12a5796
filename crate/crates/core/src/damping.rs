use alloc::format;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TorusGrid;

/// Parameters of a damping family. Stripes and compact supports vary along
/// the first axis (and, for compact support in 2-D, along both).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DampingSpec {
    /// `γ ≡ level`.
    Uniform { level: f64 },
    /// `height` on `{x : frac(x/period) < duty}`, zero elsewhere.
    Stripes { period: f64, duty: f64, height: f64 },
    /// Sum of periodized Gaussians `height · exp(-|x-c|²/(2 width²))`.
    Bumps { centers: Vec<[f64; 2]>, width: f64, height: f64 },
    /// `height` on the block `|x_i| ≤ width/2`, zero elsewhere.
    CompactSupport { width: f64, height: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DampingFamily {
    Uniform,
    Stripes,
    Bumps,
    CompactSupport,
    Custom,
}

/// A nonnegative, bounded damping coefficient sampled on a grid.
#[derive(Debug, Clone)]
pub struct DampingProfile {
    grid: TorusGrid,
    gamma: Vec<f64>,
    sup_norm: f64,
    family: DampingFamily,
}

const EDGE_TOL: f64 = 1e-9;

impl DampingProfile {
    /// Builds a profile from one of the parametric families.
    pub fn make(grid: &TorusGrid, spec: &DampingSpec) -> Result<Self> {
        let bad = |msg: &str| Err(Error::Config(format!("damping: {msg}")));
        let (gamma, family): (Vec<f64>, _) = match spec {
            DampingSpec::Uniform { level } => {
                if !(*level >= 0.0) || !level.is_finite() {
                    return bad("uniform level must be finite and nonnegative");
                }
                (alloc::vec![*level; grid.len()], DampingFamily::Uniform)
            }
            DampingSpec::Stripes { period, duty, height } => {
                if !(*period > 0.0) || !(*duty > 0.0 && *duty < 1.0) || !(*height >= 0.0) {
                    return bad("stripes need period > 0, duty in (0,1), height >= 0");
                }
                let g = (0..grid.len())
                    .map(|i| {
                        let x = grid.point(i)[0];
                        let mut phase = (x / period).rem_euclid(1.0);
                        if phase > 1.0 - EDGE_TOL {
                            phase = 0.0;
                        }
                        if phase < duty - EDGE_TOL {
                            *height
                        } else {
                            0.0
                        }
                    })
                    .collect();
                (g, DampingFamily::Stripes)
            }
            DampingSpec::Bumps { centers, width, height } => {
                if !(*width > 0.0) || !(*height >= 0.0) || centers.is_empty() {
                    return bad("bumps need width > 0, height >= 0 and at least one center");
                }
                let half = grid.box_len() / 2.0;
                if centers.iter().any(|c| c.iter().any(|v| v.abs() > half)) {
                    return bad("bump centers must lie inside the torus");
                }
                let l = grid.box_len();
                let d = grid.dim();
                let g = (0..grid.len())
                    .map(|i| {
                        let p = grid.point(i);
                        centers
                            .iter()
                            .map(|c| {
                                let r2: f64 = (0..d)
                                    .map(|a| {
                                        let dx = (p[a] - c[a]).rem_euclid(l);
                                        let dx = dx.min(l - dx);
                                        dx * dx
                                    })
                                    .sum();
                                height * (-r2 / (2.0 * width * width)).exp()
                            })
                            .sum()
                    })
                    .collect();
                (g, DampingFamily::Bumps)
            }
            DampingSpec::CompactSupport { width, height } => {
                if !(*width > 0.0) || !(*height >= 0.0) || *width > grid.box_len() {
                    return bad("compact support needs 0 < width <= box length, height >= 0");
                }
                let d = grid.dim();
                let g = (0..grid.len())
                    .map(|i| {
                        let p = grid.point(i);
                        if (0..d).all(|a| p[a].abs() <= width / 2.0 + EDGE_TOL) {
                            *height
                        } else {
                            0.0
                        }
                    })
                    .collect();
                (g, DampingFamily::CompactSupport)
            }
        };
        Self::from_samples(grid, gamma, family)
    }

    /// Arbitrary samples; must be finite and nonnegative.
    pub fn custom(grid: &TorusGrid, gamma: Vec<f64>) -> Result<Self> {
        Self::from_samples(grid, gamma, DampingFamily::Custom)
    }

    fn from_samples(grid: &TorusGrid, gamma: Vec<f64>, family: DampingFamily) -> Result<Self> {
        if gamma.len() != grid.len() {
            return Err(Error::Shape(format!(
                "damping has {} samples, grid has {}",
                gamma.len(),
                grid.len()
            )));
        }
        if let Some((i, v)) = gamma.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Config(format!("damping sample {i} is {v}; need finite >= 0")));
        }
        let sup_norm = gamma.iter().copied().fold(0.0, f64::max);
        Ok(Self { grid: grid.clone(), gamma, sup_norm, family })
    }

    /// Pointwise sum of two profiles on the same grid.
    pub fn superpose(&self, other: &DampingProfile) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let g = self.gamma.iter().zip(&other.gamma).map(|(a, b)| a + b).collect();
        Self::custom(&self.grid, g)
    }

    /// Circular shift by `shift` samples along the first axis.
    pub fn shifted(&self, shift: usize) -> Self {
        let n = self.grid.points_per_axis();
        let row = self.grid.len() / n;
        let mut g = alloc::vec![0.0; self.gamma.len()];
        for (i, chunk) in self.gamma.chunks_exact(row).enumerate() {
            let dst = (i + shift) % n;
            g[dst * row..(dst + 1) * row].copy_from_slice(chunk);
        }
        Self { grid: self.grid.clone(), gamma: g, sup_norm: self.sup_norm, family: self.family }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// `‖γ‖_{L∞}`: the largest sample.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn family(&self) -> DampingFamily {
        self.family
    }

    /// Smallest sample.
    pub fn ess_inf(&self) -> f64 {
        self.gamma.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Sample mask of the level set `{γ ≥ eps}`.
    pub fn level_set(&self, eps: f64) -> Vec<bool> {
        self.gamma.iter().map(|&g| g >= eps).collect()
    }

    /// Lattice certificate for thickness of `{γ ≥ eps}` at cube side `cube_len`.
    pub fn thickness(&self, eps: f64, cube_len: f64) -> Result<ThickCertificate> {
        if !(eps > 0.0) {
            return Err(Error::Config(format!("thickness level must be positive, got {eps}")));
        }
        let m = window_samples(&self.grid, cube_len)?;
        let n = self.grid.points_per_axis();
        let d = self.grid.dim();
        let indicator: Vec<f64> =
            self.gamma.iter().map(|&g| if g >= eps { 1.0 } else { 0.0 }).collect();
        let sums = window_sums(&indicator, n, d, m);
        let min_count = sums.iter().copied().fold(f64::INFINITY, f64::min).round() as usize;
        let cells = m.pow(d as u32);
        let density = min_count as f64 / cells as f64;
        let slack = (2 * d) as f64 / m as f64;
        Ok(ThickCertificate {
            eps,
            cube_len: m as f64 * self.grid.spacing(),
            cube_samples: m,
            min_count,
            density,
            continuum_lower_bound: (density - slack).max(0.0),
            thick: min_count >= 1,
        })
    }

    /// `min_x ∫_x^{x+L} γ` over lattice-aligned windows (periodic), `d = 1` only.
    pub fn gcc_1d(&self, window_len: f64) -> Result<f64> {
        if self.grid.dim() != 1 {
            return Err(Error::UnsupportedDimension(self.grid.dim()));
        }
        let m = window_samples(&self.grid, window_len)?;
        let sums = window_sums(&self.gamma, self.grid.points_per_axis(), 1, m);
        Ok(sums.iter().copied().fold(f64::INFINITY, f64::min) * self.grid.spacing())
    }
}

/// Result of a lattice thickness scan.
///
/// `density` is the minimum over all `n^d` lattice-aligned cube placements
/// (periodic wrap) of the fraction of samples in `{γ ≥ eps}`. Real-valued
/// translates can lose at most one boundary cell per face, so the continuum
/// density is at least `continuum_lower_bound = density − 2d/m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThickCertificate {
    pub eps: f64,
    /// Effective cube side, `m·h`.
    pub cube_len: f64,
    /// Samples per cube edge, `m`.
    pub cube_samples: usize,
    pub min_count: usize,
    pub density: f64,
    pub continuum_lower_bound: f64,
    /// At least one level-set sample in every cube.
    pub thick: bool,
}

fn window_samples(grid: &TorusGrid, len: f64) -> Result<usize> {
    if !(len > 0.0) || len > grid.box_len() * (1.0 + 1e-12) {
        return Err(Error::Config(format!(
            "window length {len} must lie in (0, {}]",
            grid.box_len()
        )));
    }
    let m = (len / grid.spacing()).round() as usize;
    Ok(m.clamp(1, grid.points_per_axis()))
}

/// Circular length-`m` window sums along every axis.
fn window_sums(data: &[f64], n: usize, d: usize, m: usize) -> Vec<f64> {
    let sum_1d = |line: &[f64]| -> Vec<f64> {
        let mut out = Vec::with_capacity(n);
        let mut acc: f64 = line[..m.min(n)].iter().sum();
        for start in 0..n {
            out.push(acc);
            acc += line[(start + m) % n] - line[start];
        }
        out
    };
    match d {
        1 => sum_1d(data),
        _ => {
            let mut rows = Vec::with_capacity(n * n);
            for row in data.chunks_exact(n) {
                rows.extend(sum_1d(row));
            }
            let mut out = alloc::vec![0.0; n * n];
            let mut col = alloc::vec![0.0; n];
            for j in 0..n {
                for i in 0..n {
                    col[i] = rows[i * n + j];
                }
                for (i, v) in sum_1d(&col).into_iter().enumerate() {
                    out[i * n + j] = v;
                }
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g1(n: usize, l: f64) -> TorusGrid {
        TorusGrid::new(1, n, l).unwrap()
    }

    fn stripes(grid: &TorusGrid, p: f64, duty: f64, h: f64) -> DampingProfile {
        DampingProfile::make(grid, &DampingSpec::Stripes { period: p, duty, height: h }).unwrap()
    }

    /// Direct O(n·m) scan, independent of the sliding-window sums.
    fn brute_density(mask: &[bool], m: usize) -> f64 {
        let n = mask.len();
        (0..n)
            .map(|s| (0..m).filter(|k| mask[(s + k) % n]).count())
            .min()
            .unwrap() as f64
            / m as f64
    }

    #[test]
    fn uniform_profile() {
        let g = g1(64, 16.0);
        let p = DampingProfile::make(&g, &DampingSpec::Uniform { level: 0.5 }).unwrap();
        assert_eq!(p.ess_inf(), 0.5);
        assert_eq!(p.sup_norm(), 0.5);
        let c = p.thickness(0.25, 3.0).unwrap();
        assert_eq!(c.density, 1.0);
        let one = DampingProfile::make(&g, &DampingSpec::Uniform { level: 1.0 }).unwrap();
        assert!((one.gcc_1d(1.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stripes_profile() {
        let g = g1(128, 16.0);
        let p = stripes(&g, 2.0, 0.5, 1.0);
        let on = p.gamma().iter().filter(|&&v| v == 1.0).count();
        assert_eq!(on, 64);
        // period-2 pattern: 16 samples per period, 8 on
        for i in 0..g.len() {
            assert_eq!(p.gamma()[i], p.gamma()[(i + 16) % g.len()]);
        }
        assert_eq!(p.ess_inf(), 0.0);
        let cert = p.thickness(0.5, 2.0).unwrap();
        assert_eq!(cert.density, 0.5);
        assert_eq!(cert.density, brute_density(&p.level_set(0.5), 16));
        assert!(cert.thick);
        assert!((p.gcc_1d(2.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn compact_support_profile() {
        let g = g1(512, 64.0);
        let p = DampingProfile::make(&g, &DampingSpec::CompactSupport { width: 1.0, height: 1.0 })
            .unwrap();
        for i in 0..g.len() {
            let x = g.point(i)[0];
            if x.abs() > 0.5 {
                assert_eq!(p.gamma()[i], 0.0);
            } else {
                assert_eq!(p.gamma()[i], 1.0);
            }
        }
        let cert = p.thickness(0.5, 4.0).unwrap();
        assert_eq!(cert.density, 0.0);
        assert!(!cert.thick);
        assert_eq!(p.gcc_1d(4.0).unwrap(), 0.0);
    }

    #[test]
    fn superposition_ess_inf() {
        let g = g1(128, 16.0);
        let base = DampingProfile::make(&g, &DampingSpec::Uniform { level: 0.3 }).unwrap();
        let p = base.superpose(&stripes(&g, 2.0, 0.5, 0.7)).unwrap();
        assert!((p.ess_inf() - 0.3).abs() < 1e-15);
        assert!((p.sup_norm() - 1.0).abs() < 1e-15);
        assert_eq!(p.family(), DampingFamily::Custom);
    }

    #[test]
    fn invalid_parameters() {
        let g = g1(64, 16.0);
        for spec in [
            DampingSpec::Uniform { level: -1.0 },
            DampingSpec::Stripes { period: 0.0, duty: 0.5, height: 1.0 },
            DampingSpec::Stripes { period: 2.0, duty: 1.0, height: 1.0 },
            DampingSpec::Bumps { centers: alloc::vec![[9.0, 0.0]], width: 1.0, height: 1.0 },
            DampingSpec::CompactSupport { width: 0.0, height: 1.0 },
        ] {
            assert!(matches!(DampingProfile::make(&g, &spec), Err(Error::Config(_))));
        }
        let p = stripes(&g, 2.0, 0.5, 1.0);
        assert!(matches!(p.thickness(0.5, 17.0), Err(Error::Config(_))));
        let g2 = TorusGrid::new(2, 16, 16.0).unwrap();
        let p2 = stripes(&g2, 2.0, 0.5, 1.0);
        assert!(matches!(p2.gcc_1d(2.0), Err(Error::UnsupportedDimension(2))));
    }

    #[test]
    fn thickness_in_two_dimensions() {
        let g = TorusGrid::new(2, 32, 16.0).unwrap();
        let p = stripes(&g, 2.0, 0.5, 1.0);
        let c = p.thickness(0.5, 2.0).unwrap();
        assert_eq!(c.density, 0.5);
        let cs = DampingProfile::make(&g, &DampingSpec::CompactSupport { width: 2.0, height: 1.0 })
            .unwrap();
        assert_eq!(cs.thickness(0.5, 4.0).unwrap().density, 0.0);
        assert_eq!(cs.thickness(0.5, 16.0).unwrap().density, 25.0 / 1024.0);
    }

    #[test]
    fn bumps_are_smooth_and_positive() {
        let g = g1(128, 16.0);
        let p = DampingProfile::make(
            &g,
            &DampingSpec::Bumps { centers: alloc::vec![[0.0, 0.0], [4.0, 0.0]], width: 0.5, height: 2.0 },
        )
        .unwrap();
        assert!(p.ess_inf() > 0.0);
        assert!((p.sup_norm() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn implication_chain_and_invariances() {
        let g = g1(256, 32.0);
        let profiles = [
            DampingProfile::make(&g, &DampingSpec::Uniform { level: 0.8 }).unwrap(),
            stripes(&g, 2.0, 0.5, 1.0),
            stripes(&g, 4.0, 0.25, 2.0),
            DampingProfile::make(&g, &DampingSpec::CompactSupport { width: 3.0, height: 1.0 })
                .unwrap(),
            DampingProfile::make(
                &g,
                &DampingSpec::Bumps { centers: alloc::vec![[0.0, 0.0]], width: 2.0, height: 1.0 },
            )
            .unwrap(),
        ];
        for p in &profiles {
            for eps in [0.1, 0.5, 0.9] {
                for l in [1.0, 2.0, 4.0, 8.0] {
                    let c = p.thickness(eps, l).unwrap();
                    assert!((0.0..=1.0).contains(&c.density));
                    if p.ess_inf() > eps {
                        assert_eq!(c.density, 1.0);
                    }
                    if c.density > 0.0 {
                        assert!(p.gcc_1d(l).unwrap() >= eps * c.density * c.cube_len - 1e-12);
                    }
                    let higher = p.thickness(eps * 1.5, l).unwrap();
                    assert!(higher.density <= c.density);
                    for shift in [1, 7, 100] {
                        assert_eq!(p.shifted(shift).thickness(eps, l).unwrap().density, c.density);
                    }
                    assert_eq!(c.density, brute_density(&p.level_set(eps), c.cube_samples));
                }
            }
            for l in [1.0, 2.5, 4.0] {
                let a = p.gcc_1d(l).unwrap();
                let b = p.gcc_1d(l + g.spacing()).unwrap();
                assert!(b >= a - 1e-12);
            }
        }
    }
}
