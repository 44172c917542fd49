//! Per-frequency factored IRS channel, wall multipath and the IRS element
//! frequency response.
//!
//! The channel through IRS element ℓ is rank one, `H_ℓ(f) = v_ℓ(f) w_ℓ(f)ᵀ`
//! with `H_ℓ` of shape M2×M1 (rows UE, columns BS). `w_ℓ` carries the BS-side
//! factors (shadowing, element gain, effective area, distance and delay of
//! the BS→IRS hop), `v_ℓ` the UE-side factors together with `ζ̃(f)/(4π)`.

use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ArraySpec, Scenario, Vec3};
use crate::linalg::C64;
use crate::rng::stream_rng;
use crate::units::SPEED_OF_LIGHT;

/// Frequency response of a single IRS element apart from its programmable
/// phase: constant magnitude and a linear phase slope around `center_frequency`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrsResponse {
    pub magnitude_db: f64,
    pub phase_slope_deg_per_ghz: f64,
    /// Hz.
    pub center_frequency: f64,
}

impl IrsResponse {
    pub fn new(center_frequency: f64) -> Self {
        Self {
            magnitude_db: -1.0,
            phase_slope_deg_per_ghz: -25.0,
            center_frequency,
        }
    }

    /// Lossless, frequency-flat element.
    pub fn ideal(center_frequency: f64) -> Self {
        Self {
            magnitude_db: 0.0,
            phase_slope_deg_per_ghz: 0.0,
            center_frequency,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.magnitude_db > 0.0 || !self.magnitude_db.is_finite() {
            return Err(Error::Config(format!(
                "IRS response magnitude must be <= 0 dB, got {}",
                self.magnitude_db
            )));
        }
        if !(self.center_frequency > 0.0) {
            return Err(Error::Config("IRS response center frequency must be positive".into()));
        }
        Ok(())
    }
}

/// `ζ̃(f)`.
pub fn irs_zeta(response: &IrsResponse, f: f64) -> C64 {
    let magnitude = 10f64.powf(response.magnitude_db / 20.0);
    let phase = (response.phase_slope_deg_per_ghz * (f - response.center_frequency) / 1e9).to_radians();
    Complex64::from_polar(magnitude, phase)
}

/// Log-normal shadowing. `sigma_db` is the standard deviation, in dB, of the
/// power attenuation of every path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadowingModel {
    pub sigma_db: f64,
    pub seed: u64,
}

const HOP_BS: u64 = 0;
const HOP_UE: u64 = 1;
const HOP_REFLECTOR: u64 = 2;

impl ShadowingModel {
    pub fn none() -> Self {
        Self { sigma_db: 0.0, seed: 0 }
    }

    pub fn new(sigma_db: f64, seed: u64) -> Self {
        Self { sigma_db, seed }
    }

    /// Amplitude factor of one path; each path has its own seeded stream.
    pub fn amplitude(&self, hop: u64, index: u64) -> f64 {
        if self.sigma_db == 0.0 {
            return 1.0;
        }
        let x: f64 = stream_rng(self.seed, &[hop, index]).sample(StandardNormal);
        10f64.powf(self.sigma_db * x / 20.0)
    }

    pub fn draws(&self, num_irs_elements: usize, reflector_ids: &[usize]) -> Result<ShadowingDraws> {
        if !(self.sigma_db >= 0.0) || !self.sigma_db.is_finite() {
            return Err(Error::Config(format!(
                "shadowing sigma must be >= 0 dB, got {}",
                self.sigma_db
            )));
        }
        let hop = |h| (0..num_irs_elements as u64).map(|l| self.amplitude(h, l)).collect();
        Ok(ShadowingDraws {
            bs_hop: hop(HOP_BS),
            ue_hop: hop(HOP_UE),
            reflectors: reflector_ids
                .iter()
                .map(|&p| self.amplitude(HOP_REFLECTOR, p as u64))
                .collect(),
        })
    }
}

impl Default for ShadowingModel {
    fn default() -> Self {
        Self { sigma_db: 2.0, seed: 0 }
    }
}

/// Realized shadowing amplitudes: α(1)_ℓ, α(2)_ℓ per IRS element and α_p per
/// reflector (in scenario order).
#[derive(Debug, Clone, PartialEq)]
pub struct ShadowingDraws {
    pub bs_hop: Vec<f64>,
    pub ue_hop: Vec<f64>,
    pub reflectors: Vec<f64>,
}

impl ShadowingDraws {
    pub fn unity(num_irs_elements: usize, num_reflectors: usize) -> Self {
        Self {
            bs_hop: vec![1.0; num_irs_elements],
            ue_hop: vec![1.0; num_irs_elements],
            reflectors: vec![1.0; num_reflectors],
        }
    }
}

/// Molecular absorption coefficient κ(f), 1/m.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Absorption {
    #[default]
    None,
    Constant {
        kappa: f64,
    },
    /// Linear interpolation, clamped at the table ends.
    Table {
        frequency_hz: Vec<f64>,
        kappa: Vec<f64>,
    },
}

impl Absorption {
    pub fn kappa(&self, f: f64) -> f64 {
        match self {
            Absorption::None => 0.0,
            Absorption::Constant { kappa } => *kappa,
            Absorption::Table { frequency_hz, kappa } => {
                let k = frequency_hz.partition_point(|&x| x < f);
                if k == 0 {
                    kappa[0]
                } else if k == frequency_hz.len() {
                    kappa[k - 1]
                } else {
                    let t = (f - frequency_hz[k - 1]) / (frequency_hz[k] - frequency_hz[k - 1]);
                    kappa[k - 1] + t * (kappa[k] - kappa[k - 1])
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Absorption::None => Ok(()),
            Absorption::Constant { kappa } => {
                if *kappa >= 0.0 && kappa.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Config(format!("absorption must be >= 0, got {kappa}")))
                }
            }
            Absorption::Table { frequency_hz, kappa } => {
                if frequency_hz.is_empty() || frequency_hz.len() != kappa.len() {
                    return Err(Error::Config("absorption table needs matching, nonempty columns".into()));
                }
                if frequency_hz.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::Config("absorption table frequencies must increase".into()));
                }
                if kappa.iter().any(|k| !(*k >= 0.0) || !k.is_finite()) {
                    return Err(Error::Config("absorption table values must be >= 0".into()));
                }
                Ok(())
            }
        }
    }

    /// Two-column CSV: frequency in Hz, κ in 1/m. A non-numeric first row is
    /// treated as a header.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut frequency_hz = Vec::new();
        let mut kappa = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != 2 {
                return Err(Error::Config(format!("absorption CSV row {} needs 2 columns", row + 1)));
            }
            let parsed: Option<(f64, f64)> = match (record[0].parse(), record[1].parse()) {
                (Ok(f), Ok(k)) => Some((f, k)),
                _ => None,
            };
            match parsed {
                Some((f, k)) => {
                    frequency_hz.push(f);
                    kappa.push(k);
                }
                None if row == 0 => {}
                None => return Err(Error::Config(format!("absorption CSV row {} is not numeric", row + 1))),
            }
        }
        let table = Absorption::Table { frequency_hz, kappa };
        table.validate()?;
        Ok(table)
    }

    pub fn from_csv(path: &Path) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }
}

/// Channel at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSlice {
    pub frequency: f64,
    pub kappa: f64,
    l: usize,
    m1: usize,
    m2: usize,
    /// `ℓ * m2 + j`.
    v: Vec<C64>,
    /// `ℓ * m1 + i`.
    w: Vec<C64>,
    multipath: DMatrix<C64>,
}

impl ChannelSlice {
    pub fn new(
        frequency: f64,
        kappa: f64,
        m1: usize,
        m2: usize,
        v: Vec<C64>,
        w: Vec<C64>,
        multipath: DMatrix<C64>,
    ) -> Result<Self> {
        if m1 == 0 || m2 == 0 || !v.len().is_multiple_of(m2) {
            return Err(Error::Dimension("channel factors do not match array sizes".into()));
        }
        let l = v.len() / m2;
        if w.len() != l * m1 || multipath.shape() != (m2, m1) {
            return Err(Error::Dimension(format!(
                "channel slice: v has {} entries, w {}, multipath {:?} for L={l}, M1={m1}, M2={m2}",
                v.len(),
                w.len(),
                multipath.shape()
            )));
        }
        Ok(Self {
            frequency,
            kappa,
            l,
            m1,
            m2,
            v,
            w,
            multipath,
        })
    }

    pub fn num_irs_elements(&self) -> usize {
        self.l
    }

    pub fn m1(&self) -> usize {
        self.m1
    }

    pub fn m2(&self) -> usize {
        self.m2
    }

    pub fn v(&self, l: usize) -> &[C64] {
        &self.v[l * self.m2..(l + 1) * self.m2]
    }

    pub fn w(&self, l: usize) -> &[C64] {
        &self.w[l * self.m1..(l + 1) * self.m1]
    }

    pub fn multipath(&self) -> &DMatrix<C64> {
        &self.multipath
    }

    pub fn has_multipath(&self) -> bool {
        self.multipath.iter().any(|z| *z != C64::new(0.0, 0.0))
    }

    /// `H_ℓ = v_ℓ w_ℓᵀ`, M2×M1.
    pub fn element_matrix(&self, l: usize) -> DMatrix<C64> {
        let (v, w) = (self.v(l), self.w(l));
        DMatrix::from_fn(self.m2, self.m1, |j, i| v[j] * w[i])
    }

    /// `V = [v_1 … v_L]`, M2×L.
    pub fn v_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.m2, self.l, |j, l| self.v[l * self.m2 + j])
    }

    /// `W = [w_1 … w_L]`, M1×L.
    pub fn w_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.m1, self.l, |i, l| self.w[l * self.m1 + i])
    }

    /// `s_ℓ = w_ℓᵀ x` for every ℓ.
    pub fn project_bs(&self, x: &[C64]) -> Vec<C64> {
        (0..self.l)
            .map(|l| self.w(l).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `H(γ) x = Σ_ℓ γ_ℓ v_ℓ (w_ℓᵀ x) + H̄ x`.
    pub fn apply(&self, gamma: &[C64], x: &[C64]) -> Vec<C64> {
        let mut out: Vec<C64> = (&self.multipath * nalgebra::DVector::from_column_slice(x))
            .iter()
            .copied()
            .collect();
        for (l, s) in self.project_bs(x).into_iter().enumerate() {
            let c = gamma[l] * s;
            for (o, v) in out.iter_mut().zip(self.v(l)) {
                *o += c * v;
            }
        }
        out
    }

    /// Full composite channel `H(f, θ)`, M2×M1.
    pub fn composite(&self, gamma: &[C64]) -> DMatrix<C64> {
        let mut h = self.multipath.clone();
        for (l, g) in gamma.iter().enumerate().take(self.l) {
            let (v, w) = (self.v(l), self.w(l));
            for i in 0..self.m1 {
                let c = g * w[i];
                for j in 0..self.m2 {
                    h[(j, i)] += v[j] * c;
                }
            }
        }
        h
    }

    pub fn is_finite(&self) -> bool {
        self.v
            .iter()
            .chain(&self.w)
            .chain(self.multipath.iter())
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Anything that can produce channel slices over frequency.
pub trait ChannelSource: Sync {
    fn num_irs_elements(&self) -> usize;
    fn m1(&self) -> usize;
    fn m2(&self) -> usize;
    fn slice(&self, f: f64) -> Result<ChannelSlice>;
}

struct Ray {
    length: f64,
    amplitude: f64,
}

struct ReflectorPaths {
    reflection: crate::geometry::ReflectionCoefficient,
    shadowing: f64,
    /// `i * m2 + j`.
    lengths: Vec<f64>,
}

/// Exact per-element channel of a scenario with frequency-independent
/// factors precomputed.
pub struct ChannelModel {
    l: usize,
    m1: usize,
    m2: usize,
    response: IrsResponse,
    absorption: Absorption,
    /// BS element i → IRS element ℓ, `ℓ * m1 + i`.
    bs_rays: Vec<Ray>,
    /// UE element j → IRS element ℓ, `ℓ * m2 + j`; amplitudes include 1/(4π).
    ue_rays: Vec<Ray>,
    reflectors: Vec<ReflectorPaths>,
}

fn element_amplitude(array: &ArraySpec, from: Vec3, to: Vec3) -> f64 {
    let dir = (to - from).normalized();
    let boresight = array.orientation;
    let up = array.axis().cross(boresight);
    array.element_gain.amplitude(boresight, up, dir)
}

/// `√(A cos φ)`, zero when the element is lit from behind.
fn effective_aperture(area: f64, cos_phi: f64) -> f64 {
    (area * cos_phi.max(0.0)).sqrt()
}

impl ChannelModel {
    pub fn new(scenario: &Scenario, response: IrsResponse, shadowing: &ShadowingDraws, absorption: Absorption) -> Result<Self> {
        response.validate()?;
        absorption.validate()?;
        let l = scenario.num_irs_elements();
        let (m1, m2) = (scenario.m1(), scenario.m2());
        if shadowing.bs_hop.len() != l || shadowing.ue_hop.len() != l || shadowing.reflectors.len() != scenario.reflectors().len()
        {
            return Err(Error::Dimension("shadowing draws do not match the scenario".into()));
        }
        let area = scenario.irs().area();
        let irs = scenario.irs_positions();
        let mut bs_rays = Vec::with_capacity(l * m1);
        let mut ue_rays = Vec::with_capacity(l * m2);
        for (ell, &e) in irs.iter().enumerate() {
            for (i, &b) in scenario.bs_positions().iter().enumerate() {
                let d = scenario.d1(i, ell);
                let g = element_amplitude(scenario.bs(), b, e);
                bs_rays.push(Ray {
                    length: d,
                    amplitude: shadowing.bs_hop[ell] * g * effective_aperture(area, scenario.cos_phi1(i, ell)) / d,
                });
            }
            for (j, &u) in scenario.ue_positions().iter().enumerate() {
                let d = scenario.d2(j, ell);
                let g = element_amplitude(scenario.ue(), u, e);
                ue_rays.push(Ray {
                    length: d,
                    amplitude: shadowing.ue_hop[ell] * g * effective_aperture(area, scenario.cos_phi2(j, ell)) / (4.0 * PI * d),
                });
            }
        }
        let reflectors = scenario
            .reflectors()
            .iter()
            .zip(scenario.images())
            .zip(&shadowing.reflectors)
            .map(|((r, img), &a)| ReflectorPaths {
                reflection: r.reflection.clone(),
                shadowing: a,
                lengths: img.length.clone(),
            })
            .collect();
        Ok(Self {
            l,
            m1,
            m2,
            response,
            absorption,
            bs_rays,
            ue_rays,
            reflectors,
        })
    }

    pub fn response(&self) -> &IrsResponse {
        &self.response
    }

    fn ray_factor(ray: &Ray, f: f64, kappa: f64) -> C64 {
        propagation(f, ray.length) * (ray.amplitude * (-kappa * ray.length).exp())
    }

    /// `(v_ℓ, w_ℓ)` at frequency `f`.
    pub fn element(&self, f: f64, l: usize) -> (Vec<C64>, Vec<C64>) {
        let kappa = self.absorption.kappa(f);
        let zeta = irs_zeta(&self.response, f);
        let v = self.ue_rays[l * self.m2..(l + 1) * self.m2]
            .iter()
            .map(|r| zeta * Self::ray_factor(r, f, kappa))
            .collect();
        let w = self.bs_rays[l * self.m1..(l + 1) * self.m1]
            .iter()
            .map(|r| Self::ray_factor(r, f, kappa))
            .collect();
        (v, w)
    }

    /// `H̄(f)`, M2×M1.
    pub fn multipath(&self, f: f64) -> DMatrix<C64> {
        let kappa = self.absorption.kappa(f);
        let mut h = DMatrix::zeros(self.m2, self.m1);
        for p in &self.reflectors {
            let rho = p.reflection.at(f) * p.shadowing;
            if rho == C64::new(0.0, 0.0) {
                continue;
            }
            for i in 0..self.m1 {
                for j in 0..self.m2 {
                    let d = p.lengths[i * self.m2 + j];
                    let ray = Ray {
                        length: d,
                        amplitude: SPEED_OF_LIGHT / (4.0 * PI * f * d),
                    };
                    h[(j, i)] += rho * Self::ray_factor(&ray, f, kappa);
                }
            }
        }
        h
    }
}

impl ChannelSource for ChannelModel {
    fn num_irs_elements(&self) -> usize {
        self.l
    }

    fn m1(&self) -> usize {
        self.m1
    }

    fn m2(&self) -> usize {
        self.m2
    }

    fn slice(&self, f: f64) -> Result<ChannelSlice> {
        if !(f > 0.0) {
            return Err(Error::Contract(format!("frequency must be positive, got {f}")));
        }
        let kappa = self.absorption.kappa(f);
        let mut v = Vec::with_capacity(self.l * self.m2);
        let mut w = Vec::with_capacity(self.l * self.m1);
        for l in 0..self.l {
            let (vl, wl) = self.element(f, l);
            v.extend(vl);
            w.extend(wl);
        }
        let slice = ChannelSlice::new(f, kappa, self.m1, self.m2, v, w, self.multipath(f))?;
        if !slice.is_finite() {
            return Err(Error::NonFinite(format!("channel at {f} Hz")));
        }
        Ok(slice)
    }
}

/// `e^{−j2πfd/c}`.
pub fn propagation(f: f64, length: f64) -> C64 {
    Complex64::from_polar(1.0, -2.0 * PI * f * length / SPEED_OF_LIGHT)
}

/// `(v_ℓ, w_ℓ)` of the exact channel through IRS element `l` at `f`.
pub fn element_channel(
    scenario: &Scenario,
    response: IrsResponse,
    shadowing: &ShadowingDraws,
    f: f64,
    l: usize,
) -> Result<(Vec<C64>, Vec<C64>)> {
    if l >= scenario.num_irs_elements() {
        return Err(Error::Contract(format!("IRS element {l} out of range")));
    }
    let model = ChannelModel::new(scenario, response, shadowing, Absorption::None)?;
    Ok(model.element(f, l))
}

/// `H̄(f)` of a scenario.
pub fn multipath_matrix(scenario: &Scenario, shadowing: &ShadowingDraws, f: f64) -> Result<DMatrix<C64>> {
    let model = ChannelModel::new(scenario, IrsResponse::ideal(f), shadowing, Absorption::None)?;
    Ok(model.multipath(f))
}

/// Separable approximation for arrays that are small compared with the
/// link distances: `H_ℓ(f) = K_ℓ A(f) e^{−j2πfτ_ℓ}`, with `τ_ℓ` the
/// center-to-center delay through element ℓ and
/// `A(f) = ζ̃(f) a_UE(f) a_BS(f)ᵀ` collecting the per-antenna delay offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallArrayChannel {
    pub k: Vec<f64>,
    pub tau: Vec<f64>,
    /// Hop lengths (m) making up `c·τ_ℓ`; the phase is evaluated per hop so
    /// that single-antenna arrays reproduce the exact channel to rounding.
    hops: Vec<(f64, f64)>,
    /// BS antenna delay offsets relative to the array center, s.
    pub c_bs: Vec<f64>,
    pub c_ue: Vec<f64>,
    pub response: IrsResponse,
}

impl SmallArrayChannel {
    /// Channel from raw `K_ℓ`, `τ_ℓ`; a single antenna on each side.
    pub fn from_parts(k: Vec<f64>, tau: Vec<f64>, response: IrsResponse) -> Result<Self> {
        if k.len() != tau.len() || k.is_empty() {
            return Err(Error::Dimension("K and tau must have the same nonzero length".into()));
        }
        Ok(Self {
            k,
            hops: tau.iter().map(|&t| (t * SPEED_OF_LIGHT, 0.0)).collect(),
            tau,
            c_bs: vec![0.0],
            c_ue: vec![0.0],
            response,
        })
    }

    pub fn a_matrix(&self, f: f64) -> DMatrix<C64> {
        let zeta = irs_zeta(&self.response, f);
        DMatrix::from_fn(self.c_ue.len(), self.c_bs.len(), |j, i| {
            zeta * Complex64::from_polar(1.0, -2.0 * PI * f * (self.c_bs[i] + self.c_ue[j]))
        })
    }
}

pub fn approx_small_array_channel(
    scenario: &Scenario,
    response: IrsResponse,
    shadowing: &ShadowingDraws,
) -> Result<SmallArrayChannel> {
    response.validate()?;
    let bs = scenario.bs();
    let ue = scenario.ue();
    let n = scenario.irs().plane_normal;
    let origin = scenario.irs().plane_origin;
    let area = scenario.irs().area();
    let mut k = Vec::with_capacity(scenario.num_irs_elements());
    let mut hops = Vec::with_capacity(scenario.num_irs_elements());
    for (l, &e) in scenario.irs_positions().iter().enumerate() {
        let (r1, r2) = (bs.center - e, ue.center - e);
        let (d1, d2) = (r1.norm(), r2.norm());
        hops.push((d1, d2));
        let g = element_amplitude(bs, bs.center, e) * element_amplitude(ue, ue.center, e);
        let a1 = effective_aperture(area, r1.dot(n) / d1);
        let a2 = effective_aperture(area, r2.dot(n) / d2);
        k.push(shadowing.bs_hop[l] * shadowing.ue_hop[l] * g * a1 * a2 / (4.0 * PI * d1 * d2));
    }
    let offsets = |array: &ArraySpec, pts: &[Vec3]| -> Vec<f64> {
        let c0 = array.center.distance(origin);
        pts.iter().map(|p| (p.distance(origin) - c0) / SPEED_OF_LIGHT).collect()
    };
    Ok(SmallArrayChannel {
        k,
        tau: scenario.center_delays(),
        hops,
        c_bs: offsets(bs, scenario.bs_positions()),
        c_ue: offsets(ue, scenario.ue_positions()),
        response,
    })
}

impl ChannelSource for SmallArrayChannel {
    fn num_irs_elements(&self) -> usize {
        self.k.len()
    }

    fn m1(&self) -> usize {
        self.c_bs.len()
    }

    fn m2(&self) -> usize {
        self.c_ue.len()
    }

    fn slice(&self, f: f64) -> Result<ChannelSlice> {
        let zeta = irs_zeta(&self.response, f);
        let a_bs: Vec<C64> = self
            .c_bs
            .iter()
            .map(|c| Complex64::from_polar(1.0, -2.0 * PI * f * c))
            .collect();
        let a_ue: Vec<C64> = self
            .c_ue
            .iter()
            .map(|c| zeta * Complex64::from_polar(1.0, -2.0 * PI * f * c))
            .collect();
        let (m1, m2) = (a_bs.len(), a_ue.len());
        let mut v = Vec::with_capacity(self.k.len() * m2);
        let mut w = Vec::with_capacity(self.k.len() * m1);
        for (k, &(d1, d2)) in self.k.iter().zip(&self.hops) {
            let c = propagation(f, d1) * propagation(f, d2) * *k;
            v.extend(a_ue.iter().map(|a| c * a));
            w.extend_from_slice(&a_bs);
        }
        ChannelSlice::new(f, 0.0, m1, m2, v, w, DMatrix::zeros(m2, m1))
    }
}
