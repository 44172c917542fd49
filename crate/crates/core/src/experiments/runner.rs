use std::hash::Hasher;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, SolverKind, SpectrumParams, SweepAxis};
use crate::channel::{approx_small_array_channel, ChannelModel, ShadowingDraws, ShadowingModel};
use crate::coupling::{assemble_coupling, coupling_bytes, AssemblyOptions, Coupling, PhaseConfig, DEFAULT_MEM_CAP_BYTES};
use crate::error::{Error, Result};
use crate::geometry::{ElementGainModel, IrsSpec, PlanarLayout, Scenario, Vec3};
use crate::rate_bounds::{achievable_rate, rank_profile, upper_bound, BoundReport, BoundVariant};
use crate::rng::derive_seed;
use crate::solvers::{
    brute_force_oracle, max_eig_phase, nb_config, nb_max_power, nb_optimum, sub_band_gains, ucqp_solve, NbDelays, SolverReport,
    UcqpOptions, ORACLE_LIMIT, TAG_NB_CENTRAL,
};
use crate::spectrum::{
    build_psd, random_allocation, BeamSpec, FrequencyGrid, PowerLoading, PsdBundle, SpectrumMode, SpectrumSpec,
};
use crate::units::dbm_to_watts;

const STREAM_SHADOWING: u64 = 1;
const STREAM_ALLOCATION: u64 = 2;
const STREAM_LOADING: u64 = 3;
const STREAM_UCQP: u64 = 4;

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub mem_cap_bytes: u64,
    /// Record wall-clock seconds per row (breaks byte-identical output).
    pub timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            mem_cap_bytes: DEFAULT_MEM_CAP_BYTES,
            timing: false,
        }
    }
}

/// One sweep coordinate with its fully resolved configuration.
#[derive(Debug, Clone)]
pub struct Point {
    pub series_index: usize,
    pub series_value: Option<f64>,
    pub sweep_index: usize,
    pub sweep_value: f64,
    pub config: ExperimentConfig,
}

pub fn expand(config: &ExperimentConfig) -> Result<Vec<Point>> {
    config.validate()?;
    let series: Vec<Option<f64>> = match &config.series {
        Some(s) => s.values.iter().map(|&v| Some(v)).collect(),
        None => vec![None],
    };
    let mut out = Vec::new();
    for (si, sv) in series.iter().enumerate() {
        let base = match (sv, &config.series) {
            (Some(v), Some(s)) => config.with_axis(s.axis, *v)?,
            _ => config.clone(),
        };
        for (wi, &wv) in config.sweep.values.iter().enumerate() {
            out.push(Point {
                series_index: si,
                series_value: *sv,
                sweep_index: wi,
                sweep_value: wv,
                config: base.with_axis(config.sweep.axis, wv)?,
            });
        }
    }
    Ok(out)
}

/// Seed of realization `r` at a coordinate.
pub fn realization_seed(master: u64, point: &Point, r: usize) -> u64 {
    derive_seed(master, &[point.series_index as u64, point.sweep_index as u64, r as u64])
}

/// Everything needed to evaluate configurations at one coordinate and
/// realization.
pub struct Instance {
    pub scenario: Scenario,
    pub shadowing: ShadowingDraws,
    pub channel: ChannelModel,
    pub spectrum: SpectrumSpec,
    pub psd: PsdBundle,
}

pub fn build_scenario(config: &ExperimentConfig) -> Result<Scenario> {
    let s = &config.scenario;
    let spacing = s.spacing();
    let irs = IrsSpec {
        rows: match s.irs_layout {
            super::config::IrsLayout::Square => s.irs_side,
            super::config::IrsLayout::Linear => 1,
        },
        cols: s.irs_side,
        element_spacing: spacing,
        element_area: None,
        plane_origin: Vec3::ZERO,
        plane_normal: Vec3::Y,
        panel_offsets: s.panel_offsets_m.clone(),
    };
    let layout = PlanarLayout {
        bs_distance: s.bs_distance_m,
        ue_distance: s.ue_distance_m,
        bs_angle: s.bs_angle_deg.to_radians(),
        ue_angle: s.ue_angle_deg.to_radians(),
        bs_elements: s.m1,
        ue_elements: s.m2,
        array_spacing: spacing,
        bs_gain: s
            .bs_max_gain_dbi
            .map_or(ElementGainModel::Isotropic, |g| ElementGainModel::Sectored3gpp {
                max_gain_dbi: g,
            }),
        ue_gain: ElementGainModel::Isotropic,
        irs,
    };
    let reflectors = if s.multipath {
        vec![layout.wall(s.wall_reflection.clone())]
    } else {
        vec![]
    };
    layout.build(reflectors)
}

pub fn build_spectrum(params: &SpectrumParams, scenario: &Scenario, fc: f64, seed: u64) -> Result<SpectrumSpec> {
    let bw = params.bandwidth_ghz * 1e9;
    let tile = params.sub_band_ghz * 1e9;
    let grid = match params.mode {
        SpectrumMode::SingleCarrierFlat => FrequencyGrid::flat(fc, bw, tile, params.nodes_per_sub_band)?,
        SpectrumMode::SubBands => FrequencyGrid::new(fc, bw, tile, params.nodes_per_sub_band)?,
    };
    let s = grid.num_sub_bands();
    let p = dbm_to_watts(params.power_dbm);
    let panels = scenario.irs().panel_centers();
    let mut beams = Vec::with_capacity(params.beams.len());
    for (k, b) in params.beams.iter().enumerate() {
        let target = panels[b.panel.unwrap_or(k % panels.len())];
        let direction = scenario.bs().steering_angle_to(target);
        let beam = match params.mode {
            SpectrumMode::SingleCarrierFlat => {
                if params.power_per_sub_band || b.allocated.is_some() || params.loading != PowerLoading::Equal {
                    return Err(Error::Config(
                        "a flat spectrum takes total power, every sub-band and equal loading".into(),
                    ));
                }
                BeamSpec::new(direction, s, (0..s).collect(), p, PowerLoading::Equal, 0, params.beamforming)?
            }
            SpectrumMode::SubBands => {
                let n = b.allocated.unwrap_or(s);
                let allocated = random_allocation(s, n, derive_seed(seed, &[STREAM_ALLOCATION, k as u64]))?;
                let total = if params.power_per_sub_band { p * n as f64 } else { p };
                let loading_seed = derive_seed(seed, &[STREAM_LOADING, k as u64]);
                BeamSpec::new(
                    direction,
                    s,
                    allocated,
                    total,
                    params.loading,
                    loading_seed,
                    params.beamforming,
                )?
            }
        };
        beams.push(beam);
    }
    let spec = SpectrumSpec {
        grid,
        beams,
        mode: params.mode,
        bs_spacing: scenario.bs().spacing,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn build_instance(config: &ExperimentConfig, seed: u64) -> Result<Instance> {
    let scenario = build_scenario(config)?;
    let fc = config.scenario.fc_ghz * 1e9;
    let ids: Vec<usize> = scenario.reflectors().iter().map(|r| r.id).collect();
    let shadowing = ShadowingModel::new(config.scenario.shadowing_sigma_db, derive_seed(seed, &[STREAM_SHADOWING]))
        .draws(scenario.num_irs_elements(), &ids)?;
    config.scenario.absorption.validate()?;
    let channel = ChannelModel::new(
        &scenario,
        config.scenario.irs_response(),
        &shadowing,
        config.scenario.absorption.clone(),
    )?;
    let spectrum = build_spectrum(&config.spectrum, &scenario, fc, seed)?;
    let psd = build_psd(&spectrum, scenario.m1())?;
    Ok(Instance {
        scenario,
        shadowing,
        channel,
        spectrum,
        psd,
    })
}

impl Instance {
    pub fn coupling(&self, mem_cap_bytes: u64) -> Result<Coupling> {
        assemble_coupling(&self.channel, &self.psd, AssemblyOptions { mem_cap_bytes })
    }

    /// Configuration produced by `solver`.
    pub fn solve(&self, config: &ExperimentConfig, coupling: &Coupling, solver: SolverKind, seed: u64) -> Result<SolverReport> {
        let delays = NbDelays::from_scenario(&self.scenario)?;
        let centers = self.spectrum.grid.sub_band_centers();
        let fc = config.scenario.fc_ghz * 1e9;
        let (gamma, iterations) = match solver {
            SolverKind::NbCentral => (nb_config(&delays, fc)?.with_tag(TAG_NB_CENTRAL), 0),
            SolverKind::NbMaxPower => {
                let approx = approx_small_array_channel(&self.scenario, config.scenario.irs_response(), &self.shadowing)?;
                let gains = sub_band_gains(&approx, &self.psd, centers.len())?;
                (nb_max_power(&gains, &delays, &centers)?.0, 0)
            }
            SolverKind::NbOptimum => (nb_optimum(coupling, &delays, &centers)?.0, 0),
            SolverKind::MaxEig => (max_eig_phase(coupling)?, coupling.max_eigenpair()?.iterations),
            SolverKind::Ucqp => {
                let opts = UcqpOptions {
                    max_iter: config.ucqp.max_iter,
                    tol: config.ucqp.tol,
                    restarts: config.ucqp.restarts,
                    seed: derive_seed(seed, &[STREAM_UCQP]),
                };
                return ucqp_solve(coupling, opts, &[]);
            }
        };
        SolverReport::evaluate(coupling, gamma, iterations)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub experiment: String,
    pub scenario_hash: String,
    pub series_axis: String,
    pub series_value: Option<f64>,
    pub sweep_axis: String,
    pub sweep_value: f64,
    pub bandwidth_ghz: f64,
    pub ue_angle_deg: f64,
    pub irs_elements: usize,
    pub solver: String,
    /// Realization index, or `mean` for the aggregate row.
    pub realization: String,
    pub rate_bps: f64,
    pub rate_stderr_bps: Option<f64>,
    pub p_rx_w: f64,
    pub relaxed_bound_w: f64,
    pub ub_bps: f64,
    pub gap_ratio: f64,
    pub wall_clock_s: Option<f64>,
}

impl ResultRow {
    pub fn is_mean(&self) -> bool {
        self.realization == "mean"
    }
}

#[derive(Debug, Clone, Default)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

fn scenario_hash(config: &ExperimentConfig) -> String {
    let mut h = fnv::FnvHasher::default();
    let key = serde_json::to_string(&(&config.scenario, &config.spectrum)).expect("serializable");
    h.write(key.as_bytes());
    format!("{:016x}", h.finish())
}

struct Outcome {
    tag: String,
    rate: f64,
    p_rx: f64,
    relaxed: f64,
}

struct Realization {
    outcomes: Vec<Outcome>,
    ub: f64,
    seconds: f64,
}

fn evaluate_realization(point: &Point, seed: u64, opts: RunOptions) -> Result<Realization> {
    let start = Instant::now();
    let cfg = &point.config;
    let inst = build_instance(cfg, seed)?;
    let coupling = inst.coupling(opts.mem_cap_bytes)?;
    let n0 = dbm_to_watts(cfg.n0_dbm_per_hz);
    let ranks = rank_profile(&inst.channel, &inst.psd)?;
    let bound: BoundReport = upper_bound(&coupling, &inst.psd, &ranks, n0, BoundVariant::Ub3ClosedForm)?;
    let mut outcomes = Vec::with_capacity(cfg.solvers.len());
    for &solver in &cfg.solvers {
        let report = inst.solve(cfg, &coupling, solver, seed)?;
        let rate = achievable_rate(&inst.channel, &inst.psd, &report.config, n0)?;
        outcomes.push(Outcome {
            tag: solver.tag().to_string(),
            rate: rate.rate,
            p_rx: report.achieved,
            relaxed: report.relaxed_bound,
        });
    }
    Ok(Realization {
        outcomes,
        ub: bound.value,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn gap(rate: f64, ub: f64) -> f64 {
    if ub > 0.0 {
        rate / ub
    } else {
        0.0
    }
}

/// Number of realizations evaluated at once so that their coupling matrices
/// fit in the memory cap together.
fn concurrency(l: usize, cap: u64) -> usize {
    let per_job = coupling_bytes(l).max(1);
    ((cap / per_job) as usize).max(1)
}

pub fn run_experiment(config: &ExperimentConfig, opts: RunOptions) -> Result<ResultTable> {
    let points = expand(config)?;
    for p in &points {
        crate::coupling::check_memory(p.config.scenario.num_irs_elements(), opts.mem_cap_bytes)?;
    }
    let r = config.realizations;
    let jobs: Vec<(usize, usize)> = (0..points.len()).flat_map(|p| (0..r).map(move |k| (p, k))).collect();
    let max_l = points.iter().map(|p| p.config.scenario.num_irs_elements()).max().unwrap_or(1);
    let batch = concurrency(max_l, opts.mem_cap_bytes);
    let mut results: Vec<Realization> = Vec::with_capacity(jobs.len());
    for chunk in jobs.chunks(batch) {
        let part = chunk
            .par_iter()
            .map(|&(p, k)| evaluate_realization(&points[p], realization_seed(config.seed, &points[p], k), opts))
            .collect::<Result<Vec<_>>>()?;
        results.extend(part);
    }

    let series_axis = config.series.as_ref().map(|s| s.axis.name()).unwrap_or("").to_string();
    let mut rows = Vec::new();
    for (pi, point) in points.iter().enumerate() {
        let cfg = &point.config;
        let hash = scenario_hash(cfg);
        let reals = &results[pi * r..(pi + 1) * r];
        for (si, &solver) in cfg.solvers.iter().enumerate() {
            let base = ResultRow {
                experiment: config.name.clone(),
                scenario_hash: hash.clone(),
                series_axis: series_axis.clone(),
                series_value: point.series_value,
                sweep_axis: config.sweep.axis.name().to_string(),
                sweep_value: point.sweep_value,
                bandwidth_ghz: cfg.spectrum.bandwidth_ghz,
                ue_angle_deg: cfg.scenario.ue_angle_deg,
                irs_elements: cfg.scenario.num_irs_elements(),
                solver: solver.tag().to_string(),
                realization: String::new(),
                rate_bps: 0.0,
                rate_stderr_bps: None,
                p_rx_w: 0.0,
                relaxed_bound_w: 0.0,
                ub_bps: 0.0,
                gap_ratio: 0.0,
                wall_clock_s: None,
            };
            for (k, real) in reals.iter().enumerate() {
                let o = &real.outcomes[si];
                debug_assert_eq!(o.tag, solver.tag());
                rows.push(ResultRow {
                    realization: k.to_string(),
                    rate_bps: o.rate,
                    p_rx_w: o.p_rx,
                    relaxed_bound_w: o.relaxed,
                    ub_bps: real.ub,
                    gap_ratio: gap(o.rate, real.ub),
                    wall_clock_s: opts.timing.then_some(real.seconds),
                    ..base.clone()
                });
            }
            let mean = |f: &dyn Fn(&Realization) -> f64| reals.iter().map(f).sum::<f64>() / r as f64;
            let rate = mean(&|x| x.outcomes[si].rate);
            let var = if r > 1 {
                reals.iter().map(|x| (x.outcomes[si].rate - rate).powi(2)).sum::<f64>() / (r - 1) as f64
            } else {
                0.0
            };
            let ub = mean(&|x| x.ub);
            rows.push(ResultRow {
                realization: "mean".into(),
                rate_bps: rate,
                rate_stderr_bps: Some((var / r as f64).sqrt()),
                p_rx_w: mean(&|x| x.outcomes[si].p_rx),
                relaxed_bound_w: mean(&|x| x.outcomes[si].relaxed),
                ub_bps: ub,
                gap_ratio: gap(rate, ub),
                wall_clock_s: opts.timing.then(|| reals.iter().map(|x| x.seconds).sum()),
                ..base
            });
        }
    }
    Ok(ResultTable { rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRow {
    pub experiment: String,
    pub sweep_axis: String,
    pub sweep_value: f64,
    pub series_value: Option<f64>,
    pub solver: String,
    pub p_rx_w: f64,
    pub oracle_p_rx_w: f64,
    pub ratio: f64,
}

/// Compare every solver against the exhaustive `levels`-phase oracle on the
/// first realization of each coordinate.
pub fn run_oracle(config: &ExperimentConfig, levels: usize, opts: RunOptions) -> Result<Vec<OracleRow>> {
    let points = expand(config)?;
    let mut rows = Vec::new();
    for point in &points {
        let seed = realization_seed(config.seed, point, 0);
        let inst = build_instance(&point.config, seed)?;
        let coupling = inst.coupling(opts.mem_cap_bytes)?;
        let oracle: PhaseConfig = brute_force_oracle(&coupling, levels, ORACLE_LIMIT)?;
        let best = coupling.received_power(&oracle)?;
        for &solver in &point.config.solvers {
            let r = inst.solve(&point.config, &coupling, solver, seed)?;
            rows.push(OracleRow {
                experiment: config.name.clone(),
                sweep_axis: config.sweep.axis.name().to_string(),
                sweep_value: point.sweep_value,
                series_value: point.series_value,
                solver: solver.tag().to_string(),
                p_rx_w: r.achieved,
                oracle_p_rx_w: best,
                ratio: if best > 0.0 { r.achieved / best } else { 0.0 },
            });
        }
    }
    Ok(rows)
}

pub fn write_oracle_csv<W: Write>(rows: &[OracleRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Axis value of a row, for filtering.
pub fn axis_value(row: &ResultRow, axis: SweepAxis) -> Option<f64> {
    if row.sweep_axis == axis.name() {
        Some(row.sweep_value)
    } else if row.series_axis == axis.name() {
        row.series_value
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::super::presets::preset;
    use super::*;

    fn tiny(name: &str) -> ExperimentConfig {
        let mut c = preset(name).unwrap();
        c.scenario.irs_side = 4;
        c.realizations = c.realizations.min(2);
        c.sweep.values.truncate(2);
        c.ucqp.restarts = 2;
        c
    }

    #[test]
    fn expansion_order_and_overrides() {
        let c = preset("fig4-desk").unwrap();
        let pts = expand(&c).unwrap();
        assert_eq!(pts.len(), 12);
        assert_eq!(pts[0].config.scenario.ue_angle_deg, 30.0);
        assert_eq!(pts[6].config.scenario.ue_angle_deg, 45.0);
        assert_eq!(pts[7].config.spectrum.bandwidth_ghz, 7.5);
    }

    #[test]
    fn rows_have_one_per_solver_realization_plus_mean() {
        let c = tiny("fig7-desk");
        let t = run_experiment(&c, RunOptions::default()).unwrap();
        let per_point = c.solvers.len() * (c.realizations + 1);
        assert_eq!(t.rows.len(), 2 * 2 * per_point);
        for row in &t.rows {
            assert!(row.rate_bps >= 0.0);
            assert!(row.rate_bps <= row.ub_bps * (1.0 + 1e-9), "{row:?}");
            assert!(row.p_rx_w <= row.relaxed_bound_w * (1.0 + 1e-9));
            assert!(row.wall_clock_s.is_none());
        }
    }

    #[test]
    fn reruns_are_byte_identical() {
        let mut c = tiny("fig6-desk");
        c.realizations = 1;
        let a = run_experiment(&c, RunOptions::default()).unwrap().to_csv_string().unwrap();
        let b = run_experiment(&c, RunOptions::default()).unwrap().to_csv_string().unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("experiment,scenario_hash,"));
    }

    #[test]
    fn memory_guard_is_reported() {
        let mut c = preset("fig4-paper").unwrap();
        c.scenario.irs_side = 128;
        assert!(matches!(
            run_experiment(&c, RunOptions::default()),
            Err(Error::MemoryGuard { .. })
        ));
    }

    #[test]
    fn flat_spectrum_rejects_per_band_power() {
        let mut c = preset("fig4-desk").unwrap();
        c.spectrum.power_per_sub_band = true;
        assert!(matches!(build_instance(&c, 0), Err(Error::Config(_))));
    }

    #[test]
    fn two_panel_beams_point_at_each_panel() {
        let c = preset("fig9-desk").unwrap();
        let inst = build_instance(&c, 1).unwrap();
        assert_eq!(inst.scenario.num_irs_elements(), 128);
        let d = &inst.spectrum.beams;
        assert!((d[0].direction - d[1].direction).abs() > 0.1);
        assert_eq!(inst.psd.max_rank(), 2.min(inst.psd.max_rank()));
    }

    #[test]
    fn oracle_rows() {
        let mut c = tiny("fig5-desk");
        c.scenario.irs_side = 2;
        c.scenario.irs_layout = super::super::config::IrsLayout::Linear;
        c.sweep.values.truncate(1);
        let rows = run_oracle(&c, 8, RunOptions::default()).unwrap();
        assert_eq!(rows.len(), c.solvers.len());
        assert!(rows.iter().all(|r| r.ratio <= 1.0 + 1e-9 || r.solver != "Oracle"));
    }
}
