//! IRS phase configuration strategies.

use std::f64::consts::TAU;

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::SmallArrayChannel;
use crate::coupling::{Coupling, PhaseConfig};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::rng::stream_rng;
use crate::spectrum::PsdBundle;
use crate::units::SPEED_OF_LIGHT;

pub const TAG_NB_CENTRAL: &str = "NB Central";
pub const TAG_NB_MAX_POWER: &str = "NB Max Power";
pub const TAG_NB_OPTIMUM: &str = "NB Optimum";
pub const TAG_MAX_EIG: &str = "Max-eig phase";
pub const TAG_UCQP: &str = "UCQP ascent";
pub const TAG_ORACLE: &str = "Oracle";

/// Default cap on the number of configurations the exhaustive oracle visits.
pub const ORACLE_LIMIT: f64 = 1e7;

/// Eigenvector entries below this fraction of the largest one get phase 0.
const ZERO_ENTRY_REL: f64 = 1e-8;

/// Center-to-center delays `τ_ℓ` through each IRS element.
#[derive(Debug, Clone, PartialEq)]
pub struct NbDelays {
    tau: Vec<f64>,
}

impl NbDelays {
    pub fn new(tau: Vec<f64>) -> Result<Self> {
        if tau.is_empty() {
            return Err(Error::Dimension("no IRS delays".into()));
        }
        if let Some(t) = tau.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(Error::Contract(format!("delay {t} s is not positive")));
        }
        Ok(Self { tau })
    }

    pub fn from_scenario(scenario: &crate::geometry::Scenario) -> Result<Self> {
        Self::new(scenario.center_delays())
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    /// Delay spread `max τ − min τ`.
    pub fn delay_spread(&self) -> f64 {
        let (lo, hi) = self
            .tau
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &t| (lo.min(t), hi.max(t)));
        hi - lo
    }
}

/// `γ_ℓ = e^{j2πf0τ_ℓ}`.
pub fn nb_config(delays: &NbDelays, f0: f64) -> Result<PhaseConfig> {
    if !(f0 > 0.0 && f0.is_finite()) {
        return Err(Error::Contract(format!("NB frequency must be positive, got {f0}")));
    }
    let theta: Vec<f64> = delays.tau.iter().map(|t| TAU * f0 * t).collect();
    Ok(PhaseConfig::from_phases(&theta, format!("NB({:.6} GHz)", f0 / 1e9)))
}

/// `M_s = Σ_{f in s} Δf Tr{A(f) G(f) A(f)ᴴ}` for each of `num_sub_bands`.
pub fn sub_band_gains(channel: &SmallArrayChannel, psd: &PsdBundle, num_sub_bands: usize) -> Result<Vec<f64>> {
    let mut m = vec![0.0; num_sub_bands];
    for node in &psd.nodes {
        if node.sub_band >= num_sub_bands {
            return Err(Error::Dimension(format!(
                "node in sub-band {} of {num_sub_bands}",
                node.sub_band
            )));
        }
        let a = channel.a_matrix(node.frequency);
        let p: f64 = node
            .beams
            .iter()
            .map(|b| b.density * (&a * DVector::from_column_slice(&b.vector)).norm_squared())
            .sum();
        m[node.sub_band] += node.weight * p;
    }
    Ok(m)
}

/// Index of the largest value; lowest index on ties.
fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if best.is_none_or(|b| v > values[b]) {
            best = Some(i);
        }
    }
    best
}

/// NB configuration at the sub-band with the largest `M_s`.
pub fn nb_max_power(gains: &[f64], delays: &NbDelays, centers: &[f64]) -> Result<(PhaseConfig, usize)> {
    if gains.len() != centers.len() || gains.is_empty() {
        return Err(Error::Dimension("need one gain per sub-band center".into()));
    }
    if let Some(g) = gains.iter().find(|g| !(**g >= 0.0)) {
        return Err(Error::Contract(format!("sub-band gain {g} is negative")));
    }
    if gains.iter().all(|&g| g == 0.0) {
        return Err(Error::NoPower("every sub-band gain is zero".into()));
    }
    let s = argmax(gains).expect("nonempty");
    Ok((nb_config(delays, centers[s])?.with_tag(TAG_NB_MAX_POWER), s))
}

/// NB configuration maximizing the full objective over candidate frequencies.
pub fn nb_optimum(coupling: &Coupling, delays: &NbDelays, candidates: &[f64]) -> Result<(PhaseConfig, usize)> {
    if candidates.is_empty() {
        return Err(Error::Config("no candidate frequencies".into()));
    }
    let configs = candidates.iter().map(|&f| nb_config(delays, f)).collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = configs.par_iter().map(|c| coupling.objective(c.gamma())).collect();
    let s = argmax(&values).expect("nonempty");
    Ok((configs[s].clone().with_tag(TAG_NB_OPTIMUM), s))
}

/// Phases of the dominant eigenvector of `T`. With multipath the result is
/// rotated globally so that `2Re{qᴴγ}` is maximal.
pub fn max_eig_phase(coupling: &Coupling) -> Result<PhaseConfig> {
    if coupling.t().frobenius_norm() == 0.0 {
        return Err(Error::Contract("T is zero".into()));
    }
    let u = &coupling.max_eigenpair()?.vector;
    // Canonical global phase: the largest entry is real positive.
    let lead = (0..u.len()).fold(0, |b, i| if u[i].norm() > u[b].norm() { i } else { b });
    let peak = u[lead].norm();
    let rot = u[lead].conj() / peak;
    let mut gamma: Vec<C64> = u
        .iter()
        .map(|z| {
            if z.norm() <= ZERO_ENTRY_REL * peak {
                C64::new(1.0, 0.0)
            } else {
                z * rot / z.norm()
            }
        })
        .collect();
    let qg = crate::linalg::dot_conj(coupling.q(), &gamma);
    if qg.norm() > 0.0 {
        let r = C64::from_polar(1.0, -qg.arg());
        gamma.iter_mut().for_each(|g| *g *= r);
    }
    PhaseConfig::new(renormalize(gamma), TAG_MAX_EIG)
}

fn renormalize(gamma: Vec<C64>) -> Vec<C64> {
    gamma.into_iter().map(|g| g / g.norm()).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverReport {
    #[serde(skip)]
    pub config: PhaseConfig,
    pub tag: String,
    /// `P_rx` at the returned configuration, W.
    pub achieved: f64,
    pub iterations: usize,
    /// `Lλ_max + w + 2Σ|q_ℓ|`, W.
    pub relaxed_bound: f64,
    pub gap_ratio: f64,
    /// Objective after each iteration (ascent only).
    #[serde(skip)]
    pub history: Vec<f64>,
}

impl SolverReport {
    pub fn evaluate(coupling: &Coupling, config: PhaseConfig, iterations: usize) -> Result<Self> {
        let achieved = coupling.received_power(&config)?;
        let relaxed_bound = coupling.relaxed_bound()?;
        let gap_ratio = if relaxed_bound > 0.0 {
            (achieved / relaxed_bound).clamp(0.0, 1.0)
        } else {
            0.0
        };
        Ok(Self {
            tag: config.tag().to_string(),
            config,
            achieved,
            iterations,
            relaxed_bound,
            gap_ratio,
            history: Vec::new(),
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct UcqpOptions {
    pub max_iter: usize,
    /// Stop when the relative objective improvement drops below this.
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for UcqpOptions {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            tol: 1e-10,
            restarts: 16,
            seed: 0,
        }
    }
}

/// Diagonal shift that makes `T + σI` positive definite.
fn ascent_shift(coupling: &Coupling) -> f64 {
    let l = coupling.num_irs_elements() as f64;
    let tr = coupling.t().trace();
    tr / l + 1e-10 * tr
}

/// Monotone phase-projection ascent `γ ← exp(j·arg((T + σI)γ + q))`.
pub fn ucqp_ascent(coupling: &Coupling, init: &PhaseConfig, max_iter: usize, tol: f64) -> Result<SolverReport> {
    let l = coupling.num_irs_elements();
    if init.len() != l {
        return Err(Error::Dimension(format!(
            "initial configuration has {} entries for L={l}",
            init.len()
        )));
    }
    let sigma = ascent_shift(coupling);
    let mut gamma = init.gamma().to_vec();
    let mut value = coupling.objective(&gamma);
    let mut history = vec![value];
    let mut best = (value, gamma.clone());
    let mut y = vec![C64::new(0.0, 0.0); l];
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        coupling.t().matvec_into(&gamma, &mut y);
        for ((yi, g), q) in y.iter_mut().zip(&gamma).zip(coupling.q()) {
            let z = *yi + g * sigma + q;
            *yi = if z.norm() > 0.0 { z / z.norm() } else { *g };
        }
        std::mem::swap(&mut gamma, &mut y);
        let next = coupling.objective(&gamma);
        history.push(next);
        let improvement = next - value;
        value = next;
        if value > best.0 {
            best = (value, gamma.clone());
        }
        if improvement <= tol * value.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    let config = PhaseConfig::new(renormalize(best.1), TAG_UCQP)?;
    let mut report = SolverReport::evaluate(coupling, config, iterations)?;
    report.history = history;
    Ok(report)
}

/// Best of `extra` seeds plus `restarts` random starts; lowest restart index
/// wins ties.
pub fn ucqp_solve(coupling: &Coupling, opts: UcqpOptions, extra: &[PhaseConfig]) -> Result<SolverReport> {
    let l = coupling.num_irs_elements();
    let mut inits: Vec<PhaseConfig> = extra.to_vec();
    for r in 0..opts.restarts {
        let mut rng = stream_rng(opts.seed, &[0x0c9b, r as u64]);
        let theta: Vec<f64> = (0..l).map(|_| rng.random_range(0.0..TAU)).collect();
        inits.push(PhaseConfig::from_phases(&theta, TAG_UCQP));
    }
    if inits.is_empty() {
        return Err(Error::Config("UCQP needs at least one start".into()));
    }
    let runs = inits
        .par_iter()
        .map(|init| ucqp_ascent(coupling, init, opts.max_iter, opts.tol))
        .collect::<Result<Vec<_>>>()?;
    let best = argmax(&runs.iter().map(|r| r.achieved).collect::<Vec<_>>()).expect("nonempty");
    Ok(runs.into_iter().nth(best).expect("in range"))
}

/// Exact maximum of `P_rx` over `{e^{j2πk/Q}}^L`. The first phase is pinned
/// to 0 when `q = 0`.
pub fn brute_force_oracle(coupling: &Coupling, levels: usize, limit: f64) -> Result<PhaseConfig> {
    let l = coupling.num_irs_elements();
    if levels < 1 || l == 0 {
        return Err(Error::Config("oracle needs Q >= 1 and L >= 1".into()));
    }
    let pinned = !coupling.has_multipath() || coupling.q().iter().all(|z| z.norm() == 0.0);
    let free = if pinned { l - 1 } else { l };
    let size = (levels as f64).powi(free as i32);
    if size > limit {
        return Err(Error::SearchSpace { size, limit });
    }
    let size = size as u64;
    let phasors: Vec<C64> = (0..levels)
        .map(|k| C64::from_polar(1.0, TAU * k as f64 / levels as f64))
        .collect();
    let t = coupling.t().to_dmatrix();
    let q = coupling.q();

    let decode = |mut idx: u64, gamma: &mut [C64]| {
        let offset = l - free;
        gamma[..offset].iter_mut().for_each(|g| *g = C64::new(1.0, 0.0));
        for g in gamma[offset..].iter_mut().rev() {
            *g = phasors[(idx % levels as u64) as usize];
            idx /= levels as u64;
        }
    };
    let value = |gamma: &[C64]| -> f64 {
        let mut acc = 0.0;
        for a in 0..l {
            let mut row = C64::new(0.0, 0.0);
            for b in 0..l {
                row += t[(a, b)] * gamma[b];
            }
            acc += (gamma[a].conj() * row).re + 2.0 * (q[a].conj() * gamma[a]).re;
        }
        acc
    };

    const CHUNK: u64 = 1 << 14;
    let chunks = size.div_ceil(CHUNK);
    let (best_idx, _) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut gamma = vec![C64::new(1.0, 0.0); l];
            let mut best = (u64::MAX, f64::NEG_INFINITY);
            for idx in c * CHUNK..((c + 1) * CHUNK).min(size) {
                decode(idx, &mut gamma);
                let v = value(&gamma);
                if v > best.1 {
                    best = (idx, v);
                }
            }
            best
        })
        .reduce(
            || (u64::MAX, f64::NEG_INFINITY),
            |a, b| if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a },
        );
    let mut gamma = vec![C64::new(1.0, 0.0); l];
    decode(best_idx, &mut gamma);
    PhaseConfig::new(gamma, TAG_ORACLE)
}

/// Uniform linear IRS seen from fixed BS/UE directions.
#[derive(Debug, Clone, Copy)]
pub struct LinearIrsGeometry {
    pub num_elements: usize,
    pub spacing: f64,
    pub phi_bs: f64,
    pub phi_ue: f64,
}

impl LinearIrsGeometry {
    /// `c / (2(L−1)Δ|sin φ_BS − sin φ_UE|)`.
    pub fn threshold(&self) -> f64 {
        let denom = 2.0 * (self.num_elements as f64 - 1.0) * self.spacing * (self.phi_bs.sin() - self.phi_ue.sin()).abs();
        if denom == 0.0 {
            f64::INFINITY
        } else {
            SPEED_OF_LIGHT / denom
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NbCondition {
    pub satisfied: bool,
    /// `1/(2T_DS)`, Hz.
    pub threshold: f64,
    pub delay_spread: f64,
    /// Far-field closed form for linear geometries, Hz.
    pub linear_threshold: Option<f64>,
}

pub fn nb_condition_check(delays: &NbDelays, bandwidth: f64, linear: Option<LinearIrsGeometry>) -> NbCondition {
    let t_ds = delays.delay_spread();
    let threshold = if t_ds > 0.0 { 1.0 / (2.0 * t_ds) } else { f64::INFINITY };
    NbCondition {
        satisfied: bandwidth <= threshold,
        threshold,
        delay_spread: t_ds,
        linear_threshold: linear.map(|g| g.threshold()),
    }
}

/// Largest `|z_sᴴ z_s'| / (L K²)` over `s ≠ s'` for unit-amplitude
/// `z_s,ℓ = e^{−j2πℓτf_s}`.
pub fn max_cross_correlation(num_elements: usize, tau: f64, frequencies: &[f64]) -> f64 {
    let l = num_elements as f64;
    let z: Vec<Vec<C64>> = frequencies
        .iter()
        .map(|&f| {
            (0..num_elements)
                .map(|e| C64::from_polar(1.0, -TAU * e as f64 * tau * f))
                .collect()
        })
        .collect();
    let mut worst: f64 = 0.0;
    for a in 0..z.len() {
        for b in a + 1..z.len() {
            worst = worst.max(crate::linalg::dot_conj(&z[a], &z[b]).norm() / l);
        }
    }
    worst
}
