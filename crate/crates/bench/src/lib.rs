//! Fixtures shared by the benchmarks.

use irsim_core::channel::{Absorption, ChannelModel, IrsResponse, ShadowingModel};
use irsim_core::coupling::{assemble_coupling, AssemblyOptions, Coupling};
use irsim_core::geometry::{ElementGainModel, IrsSpec, PlanarLayout, Scenario};
use irsim_core::spectrum::{build_psd, Beamforming, FrequencyGrid, PsdBundle, SpectrumSpec};
use irsim_core::units::{dbm_to_watts, wavelength};

pub const FC: f64 = 300e9;

pub struct Fixture {
    pub scenario: Scenario,
    pub channel: ChannelModel,
    pub psd: PsdBundle,
}

/// Flat-spectrum link through a `side × side` IRS at the reference geometry.
pub fn fixture(side: usize, bandwidth_ghz: f64) -> Fixture {
    let spacing = wavelength(FC) / 2.0;
    let layout = PlanarLayout {
        bs_distance: 8.0,
        ue_distance: 15.0,
        bs_angle: 45f64.to_radians(),
        ue_angle: 30f64.to_radians(),
        bs_elements: 16,
        ue_elements: 8,
        array_spacing: spacing,
        bs_gain: ElementGainModel::Sectored3gpp { max_gain_dbi: 8.0 },
        ue_gain: ElementGainModel::Isotropic,
        irs: IrsSpec::square(side, spacing),
    };
    let scenario = layout.build(vec![]).expect("valid layout");
    let draws = ShadowingModel::none().draws(scenario.num_irs_elements(), &[]).expect("draws");
    let channel = ChannelModel::new(&scenario, IrsResponse::new(FC), &draws, Absorption::default()).expect("channel");
    let grid = FrequencyGrid::flat(FC, bandwidth_ghz * 1e9, 1e9, 4).expect("grid");
    let direction = scenario.bs().steering_angle_to(scenario.irs().plane_origin);
    let spec = SpectrumSpec::flat(grid, direction, dbm_to_watts(22.0), Beamforming::Adapted, spacing).expect("spectrum");
    let psd = build_psd(&spec, 16).expect("psd");
    Fixture { scenario, channel, psd }
}

impl Fixture {
    pub fn coupling(&self) -> Coupling {
        assemble_coupling(&self.channel, &self.psd, AssemblyOptions::default()).expect("coupling")
    }
}
