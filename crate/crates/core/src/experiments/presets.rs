//! Named experiment configurations. Desk-scale variants shrink the IRS and
//! the number of realizations so that a laptop runs them in seconds.

use serde::{Deserialize, Serialize};

use super::config::*;
use crate::error::{Error, Result};
use crate::geometry::ReflectionCoefficient;
use crate::spectrum::{Beamforming, PowerLoading, SpectrumMode};

const FC_GHZ: f64 = 300.0;
const BS_DISTANCE_M: f64 = 8.0;
const UE_DISTANCE_M: f64 = 15.0;
const BS_ANGLE_DEG: f64 = 45.0;
const UE_ANGLE_DEG: f64 = 30.0;
const M1: usize = 16;
const M1_TWO_BEAMS: usize = 32;
const M2: usize = 8;
const BS_GAIN_DBI: f64 = 8.0;
const P_TX_DBM: f64 = 22.0;
const SUB_BAND_GHZ: f64 = 1.0;
const SHADOWING_DB: f64 = 2.0;
const PANEL_SEPARATION_M: f64 = 5.0;
const FULL_SIDE: usize = 64;
const FULL_REALIZATIONS: usize = 100;
const FULL_NODES: usize = 8;
const DESK_NODES: usize = 4;
const DESK_REALIZATIONS: usize = 8;
const SEED: u64 = 2024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Desk,
    Paper,
}

impl Scale {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "paper" => Ok(Scale::Paper),
            _ => Err(Error::Config(format!("unknown scale '{s}' (expected desk or paper)"))),
        }
    }

    fn suffix(self) -> &'static str {
        match self {
            Scale::Desk => "desk",
            Scale::Paper => "paper",
        }
    }
}

fn scenario(side: usize) -> ScenarioParams {
    ScenarioParams {
        fc_ghz: FC_GHZ,
        bs_distance_m: BS_DISTANCE_M,
        ue_distance_m: UE_DISTANCE_M,
        bs_angle_deg: BS_ANGLE_DEG,
        ue_angle_deg: UE_ANGLE_DEG,
        m1: M1,
        m2: M2,
        spacing_mm: None,
        bs_max_gain_dbi: Some(BS_GAIN_DBI),
        irs_side: side,
        irs_layout: IrsLayout::Square,
        panel_offsets_m: vec![0.0],
        multipath: false,
        wall_reflection: ReflectionCoefficient::default(),
        shadowing_sigma_db: 0.0,
        irs_magnitude_db: crate::channel::IrsResponse::new(1.0).magnitude_db,
        irs_phase_slope_deg_per_ghz: crate::channel::IrsResponse::new(1.0).phase_slope_deg_per_ghz,
        absorption: crate::channel::Absorption::None,
    }
}

fn flat_spectrum(bandwidth: f64, nodes: usize) -> SpectrumParams {
    SpectrumParams {
        mode: SpectrumMode::SingleCarrierFlat,
        bandwidth_ghz: bandwidth,
        sub_band_ghz: SUB_BAND_GHZ,
        nodes_per_sub_band: nodes,
        beamforming: Beamforming::Adapted,
        loading: PowerLoading::Equal,
        power_dbm: P_TX_DBM,
        power_per_sub_band: false,
        beams: vec![BeamParams {
            allocated: None,
            panel: None,
        }],
    }
}

fn sub_band_spectrum(bandwidth: f64, allocated: &[usize], loading: PowerLoading, nodes: usize) -> SpectrumParams {
    SpectrumParams {
        mode: SpectrumMode::SubBands,
        bandwidth_ghz: bandwidth,
        sub_band_ghz: SUB_BAND_GHZ,
        nodes_per_sub_band: nodes,
        beamforming: Beamforming::Adapted,
        loading,
        power_dbm: P_TX_DBM,
        power_per_sub_band: true,
        beams: allocated
            .iter()
            .map(|&n| BeamParams {
                allocated: Some(n),
                panel: None,
            })
            .collect(),
    }
}

fn sweep(axis: SweepAxis, values: &[f64]) -> Sweep {
    Sweep {
        axis,
        values: values.to_vec(),
    }
}

const ALL_SOLVERS: [SolverKind; 5] = [
    SolverKind::NbCentral,
    SolverKind::NbMaxPower,
    SolverKind::NbOptimum,
    SolverKind::MaxEig,
    SolverKind::Ucqp,
];

const NB_AND_EIG: [SolverKind; 4] = [
    SolverKind::NbCentral,
    SolverKind::NbMaxPower,
    SolverKind::NbOptimum,
    SolverKind::MaxEig,
];

struct Sizes {
    side: usize,
    realizations: usize,
    nodes: usize,
    ucqp: UcqpParams,
}

fn sizes(scale: Scale, desk_side: usize) -> Sizes {
    match scale {
        Scale::Desk => Sizes {
            side: desk_side,
            realizations: DESK_REALIZATIONS,
            nodes: DESK_NODES,
            ucqp: UcqpParams {
                max_iter: 500,
                ..UcqpParams::default()
            },
        },
        Scale::Paper => Sizes {
            side: FULL_SIDE,
            realizations: FULL_REALIZATIONS,
            nodes: FULL_NODES,
            ucqp: UcqpParams::default(),
        },
    }
}

fn sub_band_bandwidths(scale: Scale) -> Vec<f64> {
    match scale {
        Scale::Desk => vec![4.0, 10.0, 20.0, 30.0, 45.0, 60.0, 90.0],
        Scale::Paper => vec![4.0, 6.0, 10.0, 15.0, 20.0, 30.0, 45.0, 60.0, 75.0, 90.0],
    }
}

fn named(base: &str, scale: Scale) -> String {
    format!("{base}-{}", scale.suffix())
}

/// Rate vs bandwidth for a flat single-carrier spectrum, one curve per UE angle.
fn fig4(scale: Scale) -> ExperimentConfig {
    let z = sizes(scale, 16);
    let (bandwidths, angles): (Vec<f64>, Vec<f64>) = match scale {
        Scale::Desk => (vec![3.0, 7.5, 15.0, 30.0, 45.0, 60.0], vec![30.0, 45.0]),
        Scale::Paper => (
            vec![3.0, 7.5, 15.0, 22.5, 30.0, 45.0, 60.0, 75.0, 90.0],
            vec![0.0, 15.0, 30.0, 45.0, 60.0, 75.0],
        ),
    };
    ExperimentConfig {
        name: named("fig4", scale),
        scenario: scenario(z.side),
        spectrum: flat_spectrum(bandwidths[0], z.nodes),
        sweep: sweep(SweepAxis::Bandwidth, &bandwidths),
        series: Some(sweep(SweepAxis::UeAngle, &angles)),
        solvers: vec![SolverKind::NbCentral],
        realizations: 1,
        seed: SEED,
        n0_dbm_per_hz: crate::rate_bounds::DEFAULT_N0_DBM_PER_HZ,
        ucqp: z.ucqp,
    }
}

/// Sparse spectrum with `n` allocated sub-bands.
fn sparse(base: &str, scale: Scale, n: usize, loading: PowerLoading, multipath_series: bool) -> ExperimentConfig {
    let z = sizes(scale, 16);
    let bw = sub_band_bandwidths(scale);
    ExperimentConfig {
        name: named(base, scale),
        scenario: scenario(z.side),
        spectrum: sub_band_spectrum(bw[0], &[n], loading, z.nodes),
        sweep: sweep(SweepAxis::Bandwidth, &bw),
        series: multipath_series.then(|| sweep(SweepAxis::Multipath, &[0.0, 1.0])),
        solvers: ALL_SOLVERS.to_vec(),
        realizations: z.realizations,
        seed: SEED,
        n0_dbm_per_hz: crate::rate_bounds::DEFAULT_N0_DBM_PER_HZ,
        ucqp: z.ucqp,
    }
}

fn irs_size(scale: Scale) -> ExperimentConfig {
    let z = sizes(scale, 16);
    let sides: Vec<f64> = match scale {
        Scale::Desk => vec![8.0, 16.0, 24.0, 32.0],
        Scale::Paper => vec![8.0, 16.0, 24.0, 32.0, 48.0, 64.0],
    };
    let mut s = scenario(z.side);
    s.multipath = true;
    s.shadowing_sigma_db = SHADOWING_DB;
    ExperimentConfig {
        name: named("irs-size", scale),
        scenario: s,
        spectrum: sub_band_spectrum(60.0, &[2], PowerLoading::Equal, z.nodes),
        sweep: sweep(SweepAxis::IrsSize, &sides),
        series: Some(sweep(SweepAxis::Allocated, &[2.0, 4.0])),
        solvers: NB_AND_EIG.to_vec(),
        realizations: z.realizations,
        seed: SEED,
        n0_dbm_per_hz: crate::rate_bounds::DEFAULT_N0_DBM_PER_HZ,
        ucqp: z.ucqp,
    }
}

/// Rate vs UE angle, one curve per bandwidth.
fn fig8(scale: Scale) -> ExperimentConfig {
    let z = sizes(scale, 16);
    let angles: Vec<f64> = match scale {
        Scale::Desk => vec![0.0, 15.0, 30.0, 45.0, 60.0, 75.0, 85.0, 89.0],
        Scale::Paper => (0..18).map(|i| 5.0 * i as f64).chain([89.0]).collect(),
    };
    let mut s = scenario(z.side);
    s.shadowing_sigma_db = SHADOWING_DB;
    ExperimentConfig {
        name: named("fig8", scale),
        scenario: s,
        spectrum: sub_band_spectrum(18.0, &[4], PowerLoading::Equal, z.nodes),
        sweep: sweep(SweepAxis::UeAngle, &angles),
        series: Some(sweep(SweepAxis::Bandwidth, &[18.0, 30.0, 60.0])),
        solvers: NB_AND_EIG.to_vec(),
        realizations: z.realizations,
        seed: SEED,
        n0_dbm_per_hz: crate::rate_bounds::DEFAULT_N0_DBM_PER_HZ,
        ucqp: z.ucqp,
    }
}

/// Two beams toward two IRS panels acting as one logical surface.
fn fig9_desk() -> ExperimentConfig {
    let z = sizes(Scale::Desk, 8);
    let mut s = scenario(z.side);
    s.m1 = M1_TWO_BEAMS;
    s.panel_offsets_m = vec![-PANEL_SEPARATION_M / 2.0, PANEL_SEPARATION_M / 2.0];
    let mut spectrum = sub_band_spectrum(4.0, &[2, 2], PowerLoading::Equal, z.nodes);
    for (k, b) in spectrum.beams.iter_mut().enumerate() {
        b.panel = Some(k);
    }
    ExperimentConfig {
        name: "fig9-desk".into(),
        scenario: s,
        spectrum,
        sweep: sweep(SweepAxis::Bandwidth, &[4.0, 10.0, 20.0, 30.0, 60.0]),
        series: None,
        solvers: NB_AND_EIG.to_vec(),
        realizations: z.realizations,
        seed: SEED,
        n0_dbm_per_hz: crate::rate_bounds::DEFAULT_N0_DBM_PER_HZ,
        ucqp: z.ucqp,
    }
}

/// Specular geometry: BS and UE at the same angle on either side.
fn mirror_sanity() -> ExperimentConfig {
    let mut s = scenario(16);
    s.ue_angle_deg = BS_ANGLE_DEG;
    ExperimentConfig {
        name: "mirror-sanity".into(),
        scenario: s,
        spectrum: flat_spectrum(3.0, DESK_NODES),
        sweep: sweep(SweepAxis::Bandwidth, &[3.0, 7.5, 15.0, 30.0]),
        series: None,
        solvers: vec![SolverKind::NbCentral, SolverKind::MaxEig],
        realizations: 1,
        seed: SEED,
        n0_dbm_per_hz: crate::rate_bounds::DEFAULT_N0_DBM_PER_HZ,
        ucqp: UcqpParams::default(),
    }
}

/// Flat spectrum, larger IRS, non-specular angle: beam squint at the IRS.
fn squint_desk() -> ExperimentConfig {
    let mut s = scenario(32);
    s.ue_angle_deg = UE_ANGLE_DEG;
    ExperimentConfig {
        name: "squint-desk".into(),
        scenario: s,
        spectrum: flat_spectrum(3.0, DESK_NODES),
        sweep: sweep(SweepAxis::Bandwidth, &[3.0, 5.0, 7.5, 10.0, 15.0, 20.0, 30.0, 45.0, 60.0]),
        series: None,
        solvers: vec![SolverKind::NbCentral],
        realizations: 1,
        seed: SEED,
        n0_dbm_per_hz: crate::rate_bounds::DEFAULT_N0_DBM_PER_HZ,
        ucqp: UcqpParams::default(),
    }
}

pub fn presets() -> Vec<ExperimentConfig> {
    let mut out = Vec::new();
    for scale in [Scale::Desk, Scale::Paper] {
        out.push(fig4(scale));
        out.push(sparse("fig5", scale, 2, PowerLoading::Equal, false));
        out.push(sparse("fig6", scale, 4, PowerLoading::Random, false));
        out.push(sparse("fig7", scale, 2, PowerLoading::Equal, true));
        out.push(irs_size(scale));
        out.push(fig8(scale));
    }
    out.push(fig9_desk());
    out.push(mirror_sanity());
    out.push(squint_desk());
    out
}

pub fn preset_names() -> Vec<String> {
    presets().into_iter().map(|p| p.name).collect()
}

/// Look up a preset by full name (`fig5-desk`) or by base name and scale.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    presets()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::Config(format!("unknown preset '{name}'; run list-presets")))
}

pub fn preset_scaled(name: &str, scale: Scale) -> Result<ExperimentConfig> {
    preset(name).or_else(|_| preset(&named(name, scale)))
}
