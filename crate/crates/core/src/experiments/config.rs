//! JSON experiment description. Units at this boundary are GHz, dBm,
//! degrees, meters and millimeters as named by each field.

use serde::{Deserialize, Serialize};

use crate::channel::{Absorption, IrsResponse};
use crate::error::{Error, Result};
use crate::geometry::ReflectionCoefficient;
use crate::solvers::{TAG_MAX_EIG, TAG_NB_CENTRAL, TAG_NB_MAX_POWER, TAG_NB_OPTIMUM, TAG_UCQP};
use crate::spectrum::{Beamforming, PowerLoading, SpectrumMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub scenario: ScenarioParams,
    pub spectrum: SpectrumParams,
    pub sweep: Sweep,
    /// Optional second axis; each value produces its own curve.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<Sweep>,
    pub solvers: Vec<SolverKind>,
    pub realizations: usize,
    pub seed: u64,
    #[serde(default = "default_n0")]
    pub n0_dbm_per_hz: f64,
    #[serde(default)]
    pub ucqp: UcqpParams,
}

fn default_n0() -> f64 {
    crate::rate_bounds::DEFAULT_N0_DBM_PER_HZ
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IrsLayout {
    /// `irs_side × irs_side` elements per panel.
    Square,
    /// One row of `irs_side` elements per panel.
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioParams {
    pub fc_ghz: f64,
    pub bs_distance_m: f64,
    pub ue_distance_m: f64,
    pub bs_angle_deg: f64,
    pub ue_angle_deg: f64,
    pub m1: usize,
    pub m2: usize,
    /// Common spacing of BS, UE and IRS elements; half the carrier
    /// wavelength when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing_mm: Option<f64>,
    /// Peak gain of the sectored BS element; isotropic when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bs_max_gain_dbi: Option<f64>,
    pub irs_side: usize,
    #[serde(default = "default_layout")]
    pub irs_layout: IrsLayout,
    /// Horizontal panel-center offsets, m.
    #[serde(default = "default_panels")]
    pub panel_offsets_m: Vec<f64>,
    /// Treat the IRS wall as a specular reflector.
    #[serde(default)]
    pub multipath: bool,
    #[serde(default)]
    pub wall_reflection: ReflectionCoefficient,
    #[serde(default)]
    pub shadowing_sigma_db: f64,
    #[serde(default = "default_response_db")]
    pub irs_magnitude_db: f64,
    #[serde(default = "default_response_slope")]
    pub irs_phase_slope_deg_per_ghz: f64,
    #[serde(default)]
    pub absorption: Absorption,
}

fn default_layout() -> IrsLayout {
    IrsLayout::Square
}

fn default_panels() -> Vec<f64> {
    vec![0.0]
}

fn default_response_db() -> f64 {
    IrsResponse::new(1.0).magnitude_db
}

fn default_response_slope() -> f64 {
    IrsResponse::new(1.0).phase_slope_deg_per_ghz
}

impl ScenarioParams {
    pub fn spacing(&self) -> f64 {
        self.spacing_mm
            .map(|mm| mm * 1e-3)
            .unwrap_or_else(|| crate::units::wavelength(self.fc_ghz * 1e9) / 2.0)
    }

    pub fn num_irs_elements(&self) -> usize {
        let per_panel = match self.irs_layout {
            IrsLayout::Square => self.irs_side * self.irs_side,
            IrsLayout::Linear => self.irs_side,
        };
        per_panel * self.panel_offsets_m.len()
    }

    pub fn irs_response(&self) -> IrsResponse {
        IrsResponse {
            magnitude_db: self.irs_magnitude_db,
            phase_slope_deg_per_ghz: self.irs_phase_slope_deg_per_ghz,
            center_frequency: self.fc_ghz * 1e9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamParams {
    /// Number of allocated sub-bands `N_k`; all of them when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allocated: Option<usize>,
    /// IRS panel the beam is steered at; panel `k mod P` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub panel: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumParams {
    pub mode: SpectrumMode,
    pub bandwidth_ghz: f64,
    /// `B̄`; in flat mode the width of the tiles used by adapted beamforming.
    pub sub_band_ghz: f64,
    #[serde(default = "default_nodes")]
    pub nodes_per_sub_band: usize,
    pub beamforming: Beamforming,
    #[serde(default = "default_loading")]
    pub loading: PowerLoading,
    pub power_dbm: f64,
    /// `power_dbm` applies to each allocated sub-band of each beam rather
    /// than to the whole transmission.
    #[serde(default)]
    pub power_per_sub_band: bool,
    #[serde(default = "default_beams")]
    pub beams: Vec<BeamParams>,
}

fn default_nodes() -> usize {
    crate::spectrum::DEFAULT_NODES_PER_SUB_BAND
}

fn default_loading() -> PowerLoading {
    PowerLoading::Equal
}

fn default_beams() -> Vec<BeamParams> {
    vec![BeamParams {
        allocated: None,
        panel: None,
    }]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// `B_w`, GHz.
    Bandwidth,
    /// `φ_UE`, degrees.
    UeAngle,
    /// IRS side `L_s`.
    IrsSize,
    /// 0 = no wall reflection and no shadowing, 1 = both (using
    /// `shadowing_sigma_db`, 2 dB when that is zero).
    Multipath,
    /// Allocated sub-bands `N_k` of every beam.
    Allocated,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Bandwidth => "bandwidth_ghz",
            SweepAxis::UeAngle => "ue_angle_deg",
            SweepAxis::IrsSize => "irs_side",
            SweepAxis::Multipath => "multipath",
            SweepAxis::Allocated => "allocated",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    NbCentral,
    NbMaxPower,
    NbOptimum,
    MaxEig,
    Ucqp,
}

impl SolverKind {
    pub fn tag(self) -> &'static str {
        match self {
            SolverKind::NbCentral => TAG_NB_CENTRAL,
            SolverKind::NbMaxPower => TAG_NB_MAX_POWER,
            SolverKind::NbOptimum => TAG_NB_OPTIMUM,
            SolverKind::MaxEig => TAG_MAX_EIG,
            SolverKind::Ucqp => TAG_UCQP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UcqpParams {
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for UcqpParams {
    fn default() -> Self {
        let d = crate::solvers::UcqpOptions::default();
        Self {
            restarts: d.restarts,
            max_iter: d.max_iter,
            tol: d.tol,
        }
    }
}

pub const DEFAULT_MULTIPATH_SIGMA_DB: f64 = 2.0;

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.realizations == 0 {
            return Err(Error::Config("realizations must be at least 1".into()));
        }
        if self.solvers.is_empty() {
            return Err(Error::Config("no solvers selected".into()));
        }
        for sweep in std::iter::once(&self.sweep).chain(self.series.as_ref()) {
            if sweep.values.is_empty() {
                return Err(Error::Config(format!("{} sweep has no values", sweep.axis.name())));
            }
            if sweep.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config(format!("{} sweep has a non-finite value", sweep.axis.name())));
            }
        }
        if let Some(series) = &self.series {
            if series.axis == self.sweep.axis {
                return Err(Error::Config("series and sweep use the same axis".into()));
            }
        }
        if !self.n0_dbm_per_hz.is_finite() {
            return Err(Error::Config("N0 must be finite".into()));
        }
        if self.ucqp.restarts == 0 {
            return Err(Error::Config("UCQP needs at least one restart".into()));
        }
        let s = &self.scenario;
        if s.m1 == 0 || s.m2 == 0 || s.irs_side == 0 {
            return Err(Error::Config("array sizes must be positive".into()));
        }
        if self.spectrum.beams.is_empty() {
            return Err(Error::Config("spectrum needs at least one beam".into()));
        }
        for (k, b) in self.spectrum.beams.iter().enumerate() {
            if let Some(p) = b.panel {
                if p >= s.panel_offsets_m.len() {
                    return Err(Error::Config(format!("beam {k} targets missing panel {p}")));
                }
            }
        }
        Ok(())
    }

    /// Copy of `self` with one axis set to `value`.
    pub fn with_axis(&self, axis: SweepAxis, value: f64) -> Result<Self> {
        let mut c = self.clone();
        let count = |v: f64, what: &str| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Config(format!("{what} must be a positive integer, got {v}")))
            }
        };
        match axis {
            SweepAxis::Bandwidth => c.spectrum.bandwidth_ghz = value,
            SweepAxis::UeAngle => c.scenario.ue_angle_deg = value,
            SweepAxis::IrsSize => c.scenario.irs_side = count(value, "IRS side")?,
            SweepAxis::Multipath => {
                let on = match value {
                    0.0 => false,
                    1.0 => true,
                    v => return Err(Error::Config(format!("multipath axis takes 0 or 1, got {v}"))),
                };
                c.scenario.multipath = on;
                c.scenario.shadowing_sigma_db = match (on, self.scenario.shadowing_sigma_db) {
                    (false, _) => 0.0,
                    (true, s) if s > 0.0 => s,
                    (true, _) => DEFAULT_MULTIPATH_SIGMA_DB,
                };
            }
            SweepAxis::Allocated => {
                let n = count(value, "allocated sub-bands")?;
                c.spectrum.beams.iter_mut().for_each(|b| b.allocated = Some(n));
            }
        }
        Ok(c)
    }
}
