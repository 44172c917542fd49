//! Transmit power spectral density `G(f) = Σ_k g_k(f) v_k(f) v_k(f)ᴴ`.
//!
//! The band `[f_c − B_w/2, f_c + B_w/2]` is split into `S` sub-bands of width
//! `B̄` centered at `f_s = f_c + B̄(s − (S−1)/2)`, `s = 0..S−1`. Integrals over
//! frequency use the midpoint rule with a fixed number of nodes per sub-band.
//! A flat single-carrier spectrum is the special case where every sub-band
//! carries the same power.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::rng::stream_rng;
use crate::units::SPEED_OF_LIGHT;

pub const DEFAULT_NODES_PER_SUB_BAND: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Beamforming {
    /// One vector steered at `f_c` for the whole band.
    Central,
    /// One vector per sub-band, steered at its center `f_s`.
    Adapted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerLoading {
    Equal,
    /// Independent uniform draws normalized to the beam power.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumMode {
    SingleCarrierFlat,
    SubBands,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    pub center: f64,
    pub bandwidth: f64,
    pub sub_band_width: f64,
    pub nodes_per_sub_band: usize,
}

impl FrequencyGrid {
    pub fn new(center: f64, bandwidth: f64, sub_band_width: f64, nodes_per_sub_band: usize) -> Result<Self> {
        let grid = Self {
            center,
            bandwidth,
            sub_band_width,
            nodes_per_sub_band,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Tiles `bandwidth` with `ceil(bandwidth / tile)` equal sub-bands.
    pub fn flat(center: f64, bandwidth: f64, tile: f64, nodes_per_sub_band: usize) -> Result<Self> {
        if !(bandwidth > 0.0) || !(tile > 0.0) {
            return Err(Error::Config("bandwidth and tile width must be positive".into()));
        }
        let s = (bandwidth / tile * (1.0 - 1e-12)).ceil().max(1.0);
        Self::new(center, bandwidth, bandwidth / s, nodes_per_sub_band)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.center > 0.0) || !(self.bandwidth > 0.0) || !(self.sub_band_width > 0.0) {
            return Err(Error::Config("grid frequencies must be positive".into()));
        }
        if self.nodes_per_sub_band == 0 {
            return Err(Error::Config("need at least one node per sub-band".into()));
        }
        if self.bandwidth / 2.0 >= self.center {
            return Err(Error::Config("band extends to non-positive frequencies".into()));
        }
        let ratio = self.bandwidth / self.sub_band_width;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio.round() < 1.0 {
            return Err(Error::Config(format!(
                "bandwidth {} Hz is not an integer multiple of the sub-band width {} Hz",
                self.bandwidth, self.sub_band_width
            )));
        }
        Ok(())
    }

    pub fn num_sub_bands(&self) -> usize {
        (self.bandwidth / self.sub_band_width).round() as usize
    }

    pub fn sub_band_center(&self, s: usize) -> f64 {
        self.center + self.sub_band_width * (s as f64 - (self.num_sub_bands() as f64 - 1.0) / 2.0)
    }

    pub fn sub_band_centers(&self) -> Vec<f64> {
        (0..self.num_sub_bands()).map(|s| self.sub_band_center(s)).collect()
    }

    /// Sub-band containing `f`; a shared edge belongs to the lower band.
    pub fn sub_band_of(&self, f: f64) -> Option<usize> {
        let lo = self.center - self.bandwidth / 2.0;
        let x = (f - lo) / self.sub_band_width;
        let s = self.num_sub_bands();
        let tol = 1e-9;
        if x < -tol || x > s as f64 + tol {
            return None;
        }
        let idx = (x.ceil() as isize - 1).clamp(0, s as isize - 1);
        Some(idx as usize)
    }

    /// Midpoint nodes `(f, weight)` of sub-band `s`; weights sum to `B̄`.
    pub fn nodes(&self, s: usize) -> Vec<(f64, f64)> {
        let n = self.nodes_per_sub_band;
        let h = self.sub_band_width / n as f64;
        let lo = self.sub_band_center(s) - self.sub_band_width / 2.0;
        (0..n).map(|i| (lo + (i as f64 + 0.5) * h, h)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamSpec {
    /// Steering angle β at the BS, rad.
    pub direction: f64,
    /// Sorted allocated sub-band indices.
    pub allocated: Vec<usize>,
    /// Power per sub-band (length S), W; zero outside `allocated`.
    pub powers: Vec<f64>,
    pub beamforming: Beamforming,
}

impl BeamSpec {
    /// Beam with `allocated` sub-bands loaded to `total_power` (W).
    pub fn new(
        direction: f64,
        num_sub_bands: usize,
        allocated: Vec<usize>,
        total_power: f64,
        loading: PowerLoading,
        seed: u64,
        beamforming: Beamforming,
    ) -> Result<Self> {
        let per_band = loading_powers(allocated.len(), total_power, loading, seed)?;
        let mut powers = vec![0.0; num_sub_bands];
        for (&s, p) in allocated.iter().zip(per_band) {
            if s >= num_sub_bands {
                return Err(Error::Config(format!("sub-band {s} out of range for S={num_sub_bands}")));
            }
            powers[s] = p;
        }
        let beam = Self {
            direction,
            allocated,
            powers,
            beamforming,
        };
        beam.validate(num_sub_bands)?;
        Ok(beam)
    }

    pub fn total_power(&self) -> f64 {
        self.powers.iter().sum()
    }

    pub fn validate(&self, num_sub_bands: usize) -> Result<()> {
        if self.allocated.is_empty() {
            return Err(Error::Config("a beam needs at least one allocated sub-band".into()));
        }
        if self.powers.len() != num_sub_bands {
            return Err(Error::Config(format!(
                "beam has {} sub-band powers for S={num_sub_bands}",
                self.powers.len()
            )));
        }
        if self.allocated.windows(2).any(|w| w[1] <= w[0]) || *self.allocated.last().unwrap() >= num_sub_bands {
            return Err(Error::Config("allocated sub-bands must be sorted, distinct and < S".into()));
        }
        for (s, &p) in self.powers.iter().enumerate() {
            if !(p >= 0.0) || !p.is_finite() {
                return Err(Error::Config(format!("sub-band {s} has invalid power {p}")));
            }
            if p > 0.0 && self.allocated.binary_search(&s).is_err() {
                return Err(Error::Config(format!("sub-band {s} carries power but is not allocated")));
            }
        }
        Ok(())
    }
}

/// Split `total` W over `n` sub-bands.
pub fn loading_powers(n: usize, total: f64, loading: PowerLoading, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Config("cannot load zero sub-bands".into()));
    }
    if !(total >= 0.0) || !total.is_finite() {
        return Err(Error::Config(format!("invalid beam power {total}")));
    }
    Ok(match loading {
        PowerLoading::Equal => vec![total / n as f64; n],
        PowerLoading::Random => {
            let mut rng = stream_rng(seed, &[]);
            // Open interval keeps every allocated band strictly positive.
            let u: Vec<f64> = (0..n).map(|_| 1.0 - rng.random::<f64>()).collect();
            let sum: f64 = u.iter().sum();
            u.into_iter().map(|x| total * x / sum).collect()
        }
    })
}

/// Allocated sub-band set of size `n` out of `s`.
///
/// `n = s` allocates everything. Otherwise, for `n ≥ 2` the lowest and
/// highest sub-bands are always allocated (so the spectrum spans the whole
/// band) and the remaining `n − 2` are drawn uniformly without replacement
/// from the interior; `n = 1` draws a single sub-band uniformly.
pub fn random_allocation(s: usize, n: usize, seed: u64) -> Result<Vec<usize>> {
    if n == 0 || n > s {
        return Err(Error::Config(format!("cannot allocate {n} of {s} sub-bands")));
    }
    if n == s {
        return Ok((0..s).collect());
    }
    let mut rng = stream_rng(seed, &[]);
    if n == 1 {
        return Ok(vec![rng.random_range(0..s)]);
    }
    let mut out: Vec<usize> = sample(&mut rng, s - 2, n - 2).into_iter().map(|i| i + 1).collect();
    out.push(0);
    out.push(s - 1);
    out.sort_unstable();
    Ok(out)
}

/// `[v]_m = e^{j2πm(Δ/c) f_ref sin β} / √M1`.
pub fn steering_vector(direction: f64, f_ref: f64, m1: usize, spacing: f64) -> Vec<C64> {
    let norm = 1.0 / (m1 as f64).sqrt();
    let k = 2.0 * PI * spacing * f_ref * direction.sin() / SPEED_OF_LIGHT;
    (0..m1).map(|m| Complex64::from_polar(norm, k * m as f64)).collect()
}

/// Beamforming vector of `beam` at frequency `f`.
pub fn beamformer(beam: &BeamSpec, grid: &FrequencyGrid, f: f64, m1: usize, spacing: f64) -> Result<Vec<C64>> {
    let f_ref = match beam.beamforming {
        Beamforming::Central => grid.center,
        Beamforming::Adapted => {
            let s = grid
                .sub_band_of(f)
                .ok_or_else(|| Error::Config(format!("{f} Hz is outside every sub-band")))?;
            grid.sub_band_center(s)
        }
    };
    Ok(steering_vector(beam.direction, f_ref, m1, spacing))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSpec {
    pub grid: FrequencyGrid,
    pub beams: Vec<BeamSpec>,
    pub mode: SpectrumMode,
    /// BS element spacing used by the beamformers, m.
    pub bs_spacing: f64,
}

impl SpectrumSpec {
    /// Flat single-carrier spectrum carrying `power` W over the whole band.
    pub fn flat(grid: FrequencyGrid, direction: f64, power: f64, beamforming: Beamforming, bs_spacing: f64) -> Result<Self> {
        let s = grid.num_sub_bands();
        let beam = BeamSpec::new(direction, s, (0..s).collect(), power, PowerLoading::Equal, 0, beamforming)?;
        let spec = Self {
            grid,
            beams: vec![beam],
            mode: SpectrumMode::SingleCarrierFlat,
            bs_spacing,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.beams.is_empty() {
            return Err(Error::Config("spectrum needs at least one beam".into()));
        }
        if !(self.bs_spacing > 0.0) {
            return Err(Error::Config("BS spacing must be positive".into()));
        }
        let s = self.grid.num_sub_bands();
        for beam in &self.beams {
            beam.validate(s)?;
            if self.mode == SpectrumMode::SingleCarrierFlat {
                let each = beam.total_power() / s as f64;
                if beam.allocated.len() != s || beam.powers.iter().any(|p| (p - each).abs() > 1e-12 * each) {
                    return Err(Error::Config("a flat spectrum must load every sub-band equally".into()));
                }
            }
        }
        Ok(())
    }

    pub fn total_power(&self) -> f64 {
        self.beams.iter().map(BeamSpec::total_power).sum()
    }
}

/// One beam at one node: power density `g` (W/Hz) and unit beamformer.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamSample {
    pub beam: usize,
    pub density: f64,
    pub vector: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsdNode {
    pub frequency: f64,
    /// Quadrature weight, Hz.
    pub weight: f64,
    pub sub_band: usize,
    /// Beams with nonzero density at this node.
    pub beams: Vec<BeamSample>,
}

impl PsdNode {
    /// `G(f)` at this node, M1×M1.
    pub fn g_matrix(&self, m1: usize) -> DMatrix<C64> {
        let mut g = DMatrix::zeros(m1, m1);
        for b in &self.beams {
            let v = nalgebra::DVector::from_column_slice(&b.vector);
            g += (&v * v.adjoint()) * C64::new(b.density, 0.0);
        }
        g
    }
}

/// `G(f)` sampled on the quadrature nodes where it is nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdBundle {
    pub m1: usize,
    pub num_beams: usize,
    pub nodes: Vec<PsdNode>,
}

impl PsdBundle {
    pub fn new(m1: usize, num_beams: usize, nodes: Vec<PsdNode>) -> Result<Self> {
        for n in &nodes {
            if !(n.frequency > 0.0) || !(n.weight > 0.0) {
                return Err(Error::Config("PSD nodes need positive frequency and weight".into()));
            }
            for b in &n.beams {
                if b.vector.len() != m1 || b.beam >= num_beams || !(b.density >= 0.0) {
                    return Err(Error::Dimension("PSD beam sample does not match M1 or K".into()));
                }
            }
        }
        Ok(Self { m1, num_beams, nodes })
    }

    /// A single spectral line at `f0`: `G(f) = G_0 δ(f − f0)` with
    /// `G_0 = Σ_k P_k v_k v_kᴴ`.
    pub fn monochromatic(f0: f64, beams: Vec<(f64, Vec<C64>)>) -> Result<Self> {
        let m1 = beams.first().map(|b| b.1.len()).unwrap_or(0);
        let k = beams.len();
        let samples = beams
            .into_iter()
            .enumerate()
            .map(|(beam, (density, vector))| BeamSample { beam, density, vector })
            .collect();
        Self::new(
            m1,
            k,
            vec![PsdNode {
                frequency: f0,
                weight: 1.0,
                sub_band: 0,
                beams: samples,
            }],
        )
    }

    /// `∫ Tr G(f) df` by quadrature.
    pub fn total_power(&self) -> f64 {
        let per_node: Vec<f64> = self
            .nodes
            .iter()
            .map(|n| {
                n.weight
                    * n.beams
                        .iter()
                        .map(|b| b.density * crate::linalg::norm_sqr(&b.vector))
                        .sum::<f64>()
            })
            .collect();
        crate::linalg::pairwise_sum(&per_node)
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.frequency).collect()
    }

    /// Largest number of active beams at any node.
    pub fn max_rank(&self) -> usize {
        self.nodes.iter().map(|n| n.beams.len()).max().unwrap_or(0)
    }
}

pub fn build_psd(spec: &SpectrumSpec, m1: usize) -> Result<PsdBundle> {
    spec.validate()?;
    let grid = &spec.grid;
    let mut nodes = Vec::new();
    for s in 0..grid.num_sub_bands() {
        for (f, weight) in grid.nodes(s) {
            let mut beams = Vec::new();
            for (k, beam) in spec.beams.iter().enumerate() {
                let p = beam.powers[s];
                if p > 0.0 {
                    beams.push(BeamSample {
                        beam: k,
                        density: p / grid.sub_band_width,
                        vector: beamformer(beam, grid, f, m1, spec.bs_spacing)?,
                    });
                }
            }
            if !beams.is_empty() {
                nodes.push(PsdNode {
                    frequency: f,
                    weight,
                    sub_band: s,
                    beams,
                });
            }
        }
    }
    PsdBundle::new(m1, spec.beams.len(), nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_eigenvalues;
    use crate::units::dbm_to_watts;
    use proptest::prelude::*;

    const FC: f64 = 300e9;
    const SPACING: f64 = 0.5e-3;

    fn norm(v: &[C64]) -> f64 {
        v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn broadside_beam_is_uniform() {
        let v = steering_vector(0.0, 310e9, 16, SPACING);
        for z in &v {
            assert!((z - C64::new(0.25, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn central_beam_at_half_wavelength() {
        let lambda_half = SPEED_OF_LIGHT / FC / 2.0;
        let beta = 45f64.to_radians();
        let v = steering_vector(beta, FC, 16, lambda_half);
        for (m, z) in v.iter().enumerate() {
            let want = Complex64::from_polar(0.25, 2.0 * PI * m as f64 * 0.5 * beta.sin());
            assert!((z - want).norm() < 1e-12);
        }
    }

    #[test]
    fn adapted_beam_uses_sub_band_center() {
        let grid = FrequencyGrid::new(FC, 10e9, 1e9, 4).unwrap();
        let beam = BeamSpec::new(0.3, 10, vec![2], 1.0, PowerLoading::Equal, 0, Beamforming::Adapted).unwrap();
        let f = grid.sub_band_center(2) + 0.3e9;
        let got = beamformer(&beam, &grid, f, 8, SPACING).unwrap();
        assert_eq!(got, steering_vector(0.3, grid.sub_band_center(2), 8, SPACING));
        assert!(beamformer(&beam, &grid, FC + 6e9, 8, SPACING).is_err());
        let central = BeamSpec {
            beamforming: Beamforming::Central,
            ..beam
        };
        assert_eq!(
            beamformer(&central, &grid, f, 8, SPACING).unwrap(),
            steering_vector(0.3, FC, 8, SPACING)
        );
    }

    #[test]
    fn flat_density_at_22_dbm_over_10_ghz() {
        let p = dbm_to_watts(22.0);
        assert!((p - 0.15848931924611136).abs() < 1e-15);
        let grid = FrequencyGrid::flat(FC, 10e9, 1e9, 8).unwrap();
        let spec = SpectrumSpec::flat(grid, 0.0, p, Beamforming::Central, SPACING).unwrap();
        let psd = build_psd(&spec, 4).unwrap();
        for n in &psd.nodes {
            assert!((n.beams[0].density - 1.5848931924611136e-11).abs() < 1e-24);
        }
        assert!((psd.total_power() - p).abs() < 1e-12 * p);
    }

    #[test]
    fn equal_loading_per_band_power() {
        let p = dbm_to_watts(22.0);
        let beam = BeamSpec::new(
            0.0,
            10,
            vec![0, 3, 5, 9],
            4.0 * p,
            PowerLoading::Equal,
            0,
            Beamforming::Adapted,
        )
        .unwrap();
        for s in [0, 3, 5, 9] {
            assert!((beam.powers[s] - p).abs() < 1e-15);
        }
        assert_eq!(beam.powers[1], 0.0);
    }

    #[test]
    fn random_loading_is_normalized_and_seeded() {
        let a = loading_powers(7, 2.5, PowerLoading::Random, 42).unwrap();
        let b = loading_powers(7, 2.5, PowerLoading::Random, 42).unwrap();
        assert_eq!(a, b);
        assert!((a.iter().sum::<f64>() - 2.5).abs() <= 1e-12 * 2.5);
        assert!(a.iter().all(|&x| x > 0.0));
        assert!(a.windows(2).any(|w| w[0] != w[1]));
    }

    #[test]
    fn allocation_edge_cases() {
        assert_eq!(random_allocation(5, 5, 1).unwrap(), vec![0, 1, 2, 3, 4]);
        assert_eq!(random_allocation(1, 1, 1).unwrap(), vec![0]);
        assert!(random_allocation(3, 4, 1).is_err());
        let a = random_allocation(90, 4, 17).unwrap();
        assert_eq!(a.len(), 4);
        assert_eq!((a[0], a[3]), (0, 89));
        assert_eq!(a, random_allocation(90, 4, 17).unwrap());
    }

    #[test]
    fn interior_allocation_is_uniform() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let s = 90;
        let mut counts = vec![0usize; s - 2];
        let seeds = 100u64;
        for seed in 0..seeds {
            for idx in random_allocation(s, 4, seed).unwrap() {
                if idx != 0 && idx != s - 1 {
                    counts[idx - 1] += 1;
                }
            }
        }
        let expected = (seeds as f64 * 2.0) / (s - 2) as f64;
        let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        let p = 1.0 - ChiSquared::new((s - 3) as f64).unwrap().cdf(stat);
        assert!(p > 0.01, "chi-square p = {p}");
    }

    #[test]
    fn grid_is_symmetric_and_weights_integrate() {
        let grid = FrequencyGrid::new(FC, 7e9, 1e9, 8).unwrap();
        let c = grid.sub_band_centers();
        for s in 0..c.len() {
            assert!((c[s] - FC + (c[c.len() - 1 - s] - FC)).abs() < 1e-3);
        }
        for s in 0..7 {
            let w: f64 = grid.nodes(s).iter().map(|n| n.1).sum();
            assert!((w - 1e9).abs() < 1e-3);
            for (f, _) in grid.nodes(s) {
                assert_eq!(grid.sub_band_of(f), Some(s));
            }
        }
        assert!(FrequencyGrid::new(FC, 7.5e9, 1e9, 8).is_err());
        assert_eq!(FrequencyGrid::flat(FC, 7.5e9, 1e9, 8).unwrap().num_sub_bands(), 8);
    }

    proptest! {
        #[test]
        fn psd_invariants(
            k in 1usize..3,
            m1 in 1usize..9,
            s in 1usize..12,
            seed in any::<u64>(),
            dirs in proptest::collection::vec(-1.2f64..1.2, 3),
            adapted in any::<bool>(),
        ) {
            let grid = FrequencyGrid::new(FC, s as f64 * 1e9, 1e9, 3).unwrap();
            let bf = if adapted { Beamforming::Adapted } else { Beamforming::Central };
            let beams: Vec<BeamSpec> = (0..k)
                .map(|b| {
                    let n = 1 + (seed as usize + b) % s;
                    let alloc = random_allocation(s, n, seed ^ b as u64).unwrap();
                    BeamSpec::new(dirs[b], s, alloc, 0.1 * (b + 1) as f64, PowerLoading::Random, seed.wrapping_add(b as u64), bf).unwrap()
                })
                .collect();
            let spec = SpectrumSpec { grid, beams, mode: SpectrumMode::SubBands, bs_spacing: SPACING };
            let psd = build_psd(&spec, m1).unwrap();
            let total = spec.total_power();
            prop_assert!((psd.total_power() - total).abs() <= 1e-9 * total);
            for node in &psd.nodes {
                for b in &node.beams {
                    prop_assert!((norm(&b.vector) - 1.0).abs() < 1e-14);
                }
                let g = node.g_matrix(m1);
                prop_assert!((&g - g.adjoint()).norm() <= 1e-12 * g.norm());
                let ev = hermitian_eigenvalues(&g);
                let tr: f64 = ev.iter().sum();
                prop_assert!(ev[0] >= -1e-12 * tr);
                prop_assert!(crate::linalg::numerical_rank(&g, 1e-10) <= k);
            }
        }
    }
}
