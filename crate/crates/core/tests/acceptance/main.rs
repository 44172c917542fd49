//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if any
//! criterion fails.

use std::f64::consts::{PI, TAU};
use std::time::{Duration, Instant};

use irsim_core::channel::{approx_small_array_channel, Absorption, ChannelModel, ChannelSource, IrsResponse, ShadowingModel};
use irsim_core::coupling::{assemble_coupling, AssemblyOptions, Coupling, PhaseConfig};
use irsim_core::experiments::{build_instance, preset, run_experiment, ExperimentConfig, ResultTable, RunOptions};
use irsim_core::geometry::{ElementGainModel, IrsSpec, PlanarLayout, ReflectionCoefficient, Scenario};
use irsim_core::linalg::numerical_rank;
use irsim_core::rate_bounds::{b_coefficients, rank_bound, rank_profile, received_covariance, RANK_TOL};
use irsim_core::rng::stream_rng;
use irsim_core::solvers::{
    brute_force_oracle, max_cross_correlation, max_eig_phase, nb_config, nb_max_power, ucqp_solve, NbDelays, UcqpOptions,
    ORACLE_LIMIT,
};
use irsim_core::spectrum::{
    build_psd, loading_powers, steering_vector, BeamSpec, Beamforming, FrequencyGrid, PowerLoading, PsdBundle, SpectrumMode,
    SpectrumSpec,
};
use irsim_core::units::SPEED_OF_LIGHT;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;

const FC: f64 = 300e9;
const SPACING: f64 = SPEED_OF_LIGHT / FC / 2.0;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn layout(irs: IrsSpec, bs_deg: f64, ue_deg: f64, m1: usize, m2: usize) -> PlanarLayout {
    PlanarLayout {
        bs_distance: 8.0,
        ue_distance: 15.0,
        bs_angle: bs_deg.to_radians(),
        ue_angle: ue_deg.to_radians(),
        bs_elements: m1,
        ue_elements: m2,
        array_spacing: SPACING,
        bs_gain: ElementGainModel::Isotropic,
        ue_gain: ElementGainModel::Isotropic,
        irs,
    }
}

fn single_antenna_psd_flat(bandwidth: f64, tiles: usize, nodes: usize) -> Result<PsdBundle, String> {
    let grid = FrequencyGrid::new(FC, bandwidth, bandwidth / tiles as f64, nodes).map_err(e2s)?;
    let spec = SpectrumSpec::flat(grid, 0.0, 1.0, Beamforming::Adapted, SPACING).map_err(e2s)?;
    build_psd(&spec, 1).map_err(e2s)
}

/// Phase difference wrapped to (−π, π].
fn wrap(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}

fn criterion_1() -> Outcome {
    let lay = layout(IrsSpec::square(8, SPACING), 45.0, 30.0, 16, 8);
    let scenario = lay.build(vec![]).map_err(e2s)?;
    let l = scenario.num_irs_elements();
    let ch = approx_small_array_channel(
        &scenario,
        IrsResponse::new(FC),
        &ShadowingModel::none().draws(l, &[]).map_err(e2s)?,
    )
    .map_err(e2s)?;
    let beta = scenario.bs().steering_angle_to(scenario.irs().plane_origin);
    let x = steering_vector(beta, FC, 16, SPACING);
    let p0 = 0.158;
    let psd = PsdBundle::monochromatic(FC, vec![(p0, x.clone())]).map_err(e2s)?;
    let coupling = assemble_coupling(&ch, &psd, AssemblyOptions::default()).map_err(e2s)?;

    // M0 = Tr{A G0 Aᴴ} evaluated from the array factor directly.
    let a = ch.a_matrix(FC);
    let ax = &a * nalgebra::DVector::from_vec(x);
    let m0 = p0 * ax.norm_squared();
    let sum_k: f64 = ch.k.iter().sum();
    let expected = m0 * sum_k * sum_k;

    let nb = nb_config(&NbDelays::new(ch.tau.clone()).map_err(e2s)?, FC).map_err(e2s)?;
    let p_nb = coupling.received_power(&nb).map_err(e2s)?;
    let rel = (p_nb - expected).abs() / expected;
    ensure(rel <= 1e-9, || {
        format!("P_rx(NB) = {p_nb:e}, M0(ΣK)² = {expected:e}, rel {rel:e}")
    })?;

    let mut rng = stream_rng(1, &[1]);
    let mut best = 0.0f64;
    for _ in 0..1000 {
        let theta: Vec<f64> = (0..l).map(|_| rng.random_range(0.0..TAU)).collect();
        best = best.max(
            coupling
                .received_power(&PhaseConfig::from_phases(&theta, "random"))
                .map_err(e2s)?,
        );
    }
    ensure(best <= p_nb, || format!("random configuration beats NB: {best:e} > {p_nb:e}"))?;
    Ok(format!("L={l}, rel err {rel:.1e}, best random / NB = {:.3e}", best / p_nb))
}

/// Exhaustive 16-level optimum versus NB(f0), compared up to a global phase.
fn oracle_vs_nb(ch: &irsim_core::channel::SmallArrayChannel, delays: &NbDelays, bandwidth: f64) -> Result<(f64, f64), String> {
    let psd = single_antenna_psd_flat(bandwidth, 16, 8)?;
    let coupling = assemble_coupling(ch, &psd, AssemblyOptions::default()).map_err(e2s)?;
    let levels = 16;
    let oracle = brute_force_oracle(&coupling, levels, ORACLE_LIMIT).map_err(e2s)?;
    let nb = nb_config(delays, FC).map_err(e2s)?;
    let global = oracle
        .gamma()
        .iter()
        .zip(nb.gamma())
        .fold(C64::new(0.0, 0.0), |acc, (o, n)| acc + o * n.conj())
        .arg();
    let worst = oracle
        .gamma()
        .iter()
        .zip(nb.gamma())
        .map(|(o, n)| wrap((o * n.conj()).arg() - global).abs())
        .fold(0.0, f64::max);
    Ok((worst / (TAU / levels as f64), bandwidth))
}

fn criterion_2() -> Outcome {
    let lay = layout(IrsSpec::linear(6, SPACING), 60.0, -20.0, 1, 1);
    let scenario = lay.build(vec![]).map_err(e2s)?;
    let ch = approx_small_array_channel(
        &scenario,
        IrsResponse::ideal(FC),
        &ShadowingModel::none().draws(6, &[]).map_err(e2s)?,
    )
    .map_err(e2s)?;
    let delays = NbDelays::new(ch.tau.clone()).map_err(e2s)?;
    let threshold = 1.0 / (2.0 * delays.delay_spread());
    let (steps, bw) = oracle_vs_nb(&ch, &delays, 0.9 * threshold)?;
    ensure(steps <= 1.0, || {
        format!("B_w = {:.2} GHz: deviation {steps:.3} steps", bw / 1e9)
    })?;
    let (wide, _) = oracle_vs_nb(&ch, &delays, 4.0 * threshold)?;
    Ok(format!(
        "threshold {:.2} GHz; at 0.9x deviation {steps:.3} steps; at 4x deviation {wide:.3} steps (not asserted)",
        threshold / 1e9
    ))
}

fn criterion_3() -> Outcome {
    let frequencies: Vec<f64> = (0..60).map(|s| FC - 29.5e9 + 1e9 * s as f64).collect();
    let (phi_bs, phi_ue) = (45f64.to_radians(), 0.0f64);
    let step = SPACING * (phi_bs.sin() - phi_ue.sin()).abs() / SPEED_OF_LIGHT;
    let mut corr = Vec::new();
    for l in [256, 1024, 4096] {
        corr.push(max_cross_correlation(l, step, &frequencies));
    }
    ensure(corr[0] > corr[1] && corr[1] > corr[2], || {
        format!("cross-correlation not decreasing: {corr:?}")
    })?;
    ensure(corr[2] <= 0.05, || {
        format!("cross-correlation {:.4} > 0.05 at L=4096", corr[2])
    })?;

    // Σ_s M_s |Σ_ℓ K_ℓ e^{−j2πf_sτ_ℓ} γ_ℓ|², one rank-1 term per line.
    let lay = layout(IrsSpec::linear(4096, SPACING), 45.0, 0.0, 1, 1);
    let scenario = lay.build(vec![]).map_err(e2s)?;
    let ch = approx_small_array_channel(
        &scenario,
        IrsResponse::ideal(FC),
        &ShadowingModel::none().draws(4096, &[]).map_err(e2s)?,
    )
    .map_err(e2s)?;
    let m = loading_powers(frequencies.len(), 1.0, PowerLoading::Random, 3).map_err(e2s)?;
    let delays = NbDelays::new(ch.tau.clone()).map_err(e2s)?;
    let power = |gamma: &[C64]| -> f64 {
        frequencies
            .iter()
            .zip(&m)
            .map(|(&f, &ms)| {
                let zg: C64 =
                    ch.k.iter()
                        .zip(&ch.tau)
                        .zip(gamma)
                        .map(|((k, t), g)| C64::from_polar(*k, -TAU * f * t) * g)
                        .sum();
                ms * zg.norm_sqr()
            })
            .sum()
    };
    let (best, s_star) = nb_max_power(&m, &delays, &frequencies).map_err(e2s)?;
    let p_star = power(best.gamma());
    for (s, &f) in frequencies.iter().enumerate() {
        let p = power(nb_config(&delays, f).map_err(e2s)?.gamma());
        ensure(p <= p_star, || format!("NB(f_{s}) gives {p:e} > NB(f_s*) {p_star:e}"))?;
    }
    Ok(format!(
        "max cross-correlation {:.3}/{:.3}/{:.4} at L=256/1024/4096; s* = {s_star}",
        corr[0], corr[1], corr[2]
    ))
}

/// Random multipath scenario with a small BS/UE array and IRS.
fn random_scenario(seed: u64) -> Result<(Scenario, ChannelModel, PsdBundle), String> {
    let mut rng = stream_rng(seed, &[4]);
    let side = rng.random_range(2..5);
    let (m1, m2) = (rng.random_range(1..4), rng.random_range(1..3));
    let mut lay = layout(
        IrsSpec::square(side, SPACING),
        rng.random_range(-70.0..70.0),
        rng.random_range(-70.0..70.0),
        m1,
        m2,
    );
    lay.bs_distance = rng.random_range(2.0..10.0);
    lay.ue_distance = rng.random_range(2.0..20.0);
    let wall = lay.wall(ReflectionCoefficient::Constant {
        magnitude: rng.random_range(0.1..0.9),
        phase_deg: rng.random_range(-180.0..180.0),
    });
    let scenario = lay.build(vec![wall]).map_err(e2s)?;
    let draws = ShadowingModel::new(2.0, seed)
        .draws(scenario.num_irs_elements(), &[0])
        .map_err(e2s)?;
    let ch = ChannelModel::new(&scenario, IrsResponse::new(FC), &draws, Absorption::default()).map_err(e2s)?;
    let s = rng.random_range(2..6);
    let grid = FrequencyGrid::new(FC, 1e9 * s as f64, 1e9, 3).map_err(e2s)?;
    let direction = scenario.bs().steering_angle_to(scenario.irs().plane_origin) + rng.random_range(-0.2..0.2);
    let allocated: Vec<usize> = (0..s).filter(|_| rng.random_bool(0.7)).collect();
    let allocated = if allocated.is_empty() { vec![0] } else { allocated };
    let beam = BeamSpec::new(direction, s, allocated, 0.1, PowerLoading::Random, seed, Beamforming::Adapted).map_err(e2s)?;
    let spec = SpectrumSpec {
        grid,
        beams: vec![beam],
        mode: SpectrumMode::SubBands,
        bs_spacing: SPACING,
    };
    let psd = build_psd(&spec, m1).map_err(e2s)?;
    Ok((scenario, ch, psd))
}

fn criterion_4() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..200u64 {
        let (scenario, ch, psd) = random_scenario(seed)?;
        let coupling = assemble_coupling(&ch, &psd, AssemblyOptions::default()).map_err(e2s)?;
        ensure(coupling.has_multipath(), || format!("seed {seed}: no multipath"))?;
        let mut rng = stream_rng(seed, &[5]);
        let theta: Vec<f64> = (0..scenario.num_irs_elements()).map(|_| rng.random_range(0.0..TAU)).collect();
        let config = PhaseConfig::from_phases(&theta, "random");
        let qf = coupling.received_power(&config).map_err(e2s)?;
        // ∫ Tr{H G Hᴴ} df with H assembled as a dense matrix at each node.
        let mut direct = 0.0;
        for node in &psd.nodes {
            let h = ch.slice(node.frequency).map_err(e2s)?.composite(config.gamma());
            let g: DMatrix<C64> = node.g_matrix(scenario.m1());
            direct += node.weight * (&h * g * h.adjoint()).trace().re;
        }
        let rel = (qf - direct).abs() / direct;
        worst = worst.max(rel);
        ensure(rel <= 1e-9, || {
            format!("seed {seed}: quadratic form {qf:e} vs direct {direct:e}")
        })?;
    }
    Ok(format!("200 pairs, worst rel err {worst:.1e}"))
}

fn check_rows(table: &ResultTable) -> Result<usize, String> {
    for row in &table.rows {
        ensure(row.rate_bps <= row.ub_bps * (1.0 + 1e-9), || {
            format!("rate above UB: {row:?}")
        })?;
        ensure(row.p_rx_w <= row.relaxed_bound_w * (1.0 + 1e-9), || {
            format!("power above relaxed bound: {row:?}")
        })?;
    }
    Ok(table.rows.len())
}

fn desk_presets() -> Vec<&'static str> {
    vec![
        "fig4-desk",
        "fig5-desk",
        "fig6-desk",
        "fig7-desk",
        "irs-size-desk",
        "fig8-desk",
        "fig9-desk",
        "mirror-sanity",
        "squint-desk",
    ]
}

fn criterion_5() -> Outcome {
    let names = desk_presets();
    let mut n = 0;
    for name in &names {
        n += check_rows(&run_preset(name)?).map_err(|e| format!("{name}: {e}"))?;
    }
    // Individual solver reports on random instances as well.
    for seed in 0..20u64 {
        let (_, ch, psd) = random_scenario(1000 + seed)?;
        let c = assemble_coupling(&ch, &psd, AssemblyOptions::default()).map_err(e2s)?;
        let bound = c.relaxed_bound().map_err(e2s)?;
        for cfg in [
            max_eig_phase(&c).map_err(e2s)?,
            ucqp_solve(&c, UcqpOptions::default(), &[]).map_err(e2s)?.config,
        ] {
            let p = c.received_power(&cfg).map_err(e2s)?;
            ensure(p <= bound * (1.0 + 1e-9), || {
                format!("seed {seed}: {p:e} above relaxed bound {bound:e}")
            })?;
        }
    }
    Ok(format!(
        "{n} rows across {} desk presets, plus 20 random instances",
        names.len()
    ))
}

fn oracle_instance(seed: u64) -> Result<Coupling, String> {
    let mut rng = stream_rng(seed, &[6]);
    let mut lay = layout(
        IrsSpec::linear(6, SPACING),
        rng.random_range(-60.0..60.0),
        rng.random_range(-60.0..60.0),
        2,
        2,
    );
    lay.bs_distance = rng.random_range(0.05..0.5);
    lay.ue_distance = rng.random_range(0.05..0.5);
    let wall = lay.wall(ReflectionCoefficient::Constant {
        magnitude: rng.random_range(0.2..0.9),
        phase_deg: rng.random_range(-180.0..180.0),
    });
    let scenario = lay.build(vec![wall]).map_err(e2s)?;
    let draws = ShadowingModel::new(4.0, seed).draws(6, &[0]).map_err(e2s)?;
    let ch = ChannelModel::new(&scenario, IrsResponse::new(FC), &draws, Absorption::default()).map_err(e2s)?;
    let grid = FrequencyGrid::new(FC, 40e9, 10e9, 4).map_err(e2s)?;
    let beam = BeamSpec::new(
        rng.random_range(-1.0..1.0),
        4,
        vec![0, 1, 2, 3],
        0.1,
        PowerLoading::Random,
        seed,
        Beamforming::Adapted,
    )
    .map_err(e2s)?;
    let spec = SpectrumSpec {
        grid,
        beams: vec![beam],
        mode: SpectrumMode::SubBands,
        bs_spacing: SPACING,
    };
    let psd = build_psd(&spec, 2).map_err(e2s)?;
    assemble_coupling(&ch, &psd, AssemblyOptions::default()).map_err(e2s)
}

fn criterion_6() -> Outcome {
    let (mut worst_eig, mut worst_ucqp) = (f64::INFINITY, f64::INFINITY);
    for seed in 0..20u64 {
        let c = oracle_instance(seed)?;
        ensure(c.has_multipath(), || format!("instance {seed} has no multipath"))?;
        let opt = c
            .received_power(&brute_force_oracle(&c, 8, ORACLE_LIMIT).map_err(e2s)?)
            .map_err(e2s)?;
        let eig = c.received_power(&max_eig_phase(&c).map_err(e2s)?).map_err(e2s)?;
        let opts = UcqpOptions {
            restarts: 16,
            seed,
            ..Default::default()
        };
        let asc = ucqp_solve(&c, opts, &[]).map_err(e2s)?.achieved;
        worst_eig = worst_eig.min(eig / opt);
        worst_ucqp = worst_ucqp.min(asc / opt);
    }
    ensure(worst_eig >= 0.95 && worst_ucqp >= 0.95, || {
        format!("worst ratios: max-eig {worst_eig:.4}, ucqp {worst_ucqp:.4}")
    })?;
    Ok(format!("worst ratio to oracle: max-eig {worst_eig:.4}, ucqp {worst_ucqp:.4}"))
}

fn nb_central_means(table: &ResultTable) -> Vec<(f64, f64, f64)> {
    table
        .rows
        .iter()
        .filter(|r| r.is_mean() && r.solver == "NB Central")
        .map(|r| (r.bandwidth_ghz, r.rate_bps, r.ub_bps))
        .collect()
}

fn run_preset(name: &str) -> Result<ResultTable, String> {
    run_experiment(&preset(name).map_err(e2s)?, RunOptions::default()).map_err(e2s)
}

fn criterion_7() -> Outcome {
    let pts = nb_central_means(&run_preset("mirror-sanity")?);
    let bws: Vec<f64> = pts.iter().map(|p| p.0).collect();
    ensure(bws == [3.0, 7.5, 15.0, 30.0], || format!("unexpected sweep {bws:?}"))?;
    let mut worst = 1.0f64;
    for &(bw, rate, ub) in &pts {
        worst = worst.min(rate / ub);
        ensure(rate >= 0.99 * ub, || format!("B_w {bw}: rate/UB = {:.5}", rate / ub))?;
    }
    for w in pts.windows(2) {
        ensure(w[1].1 > w[0].1, || {
            format!("rate not increasing from {} to {} GHz", w[0].0, w[1].0)
        })?;
    }
    Ok(format!("worst rate/UB {worst:.6}, monotone over {bws:?} GHz"))
}

fn criterion_8() -> Outcome {
    let pts = nb_central_means(&run_preset("squint-desk")?);
    ensure(
        pts.first().map(|p| p.0) == Some(3.0) && pts.last().map(|p| p.0) == Some(60.0),
        || "sweep must span 3–60 GHz".to_string(),
    )?;
    let peak = (0..pts.len()).fold(0, |b, i| if pts[i].1 > pts[b].1 { i } else { b });
    ensure(peak > 0 && peak + 1 < pts.len(), || {
        format!("no interior maximum (peak index {peak})")
    })?;
    for w in pts[..=peak].windows(2) {
        ensure(w[1].1 > w[0].1, || {
            format!("not increasing before the peak at {} GHz", w[1].0)
        })?;
    }
    for w in pts[peak..].windows(2) {
        ensure(w[1].1 < w[0].1, || format!("not decreasing after the peak at {} GHz", w[1].0))?;
        let (g0, g1) = (w[0].2 - w[0].1, w[1].2 - w[1].1);
        ensure(g1 > g0, || format!("UB gap not growing at {} GHz", w[1].0))?;
    }
    Ok(format!("peak at {} GHz; UB gap grows past it", pts[peak].0))
}

fn criterion_9() -> Outcome {
    let names = ["fig5-desk", "fig7-desk", "fig8-desk", "fig9-desk", "irs-size-desk"];
    let mut rng = stream_rng(9, &[9]);
    let mut checked_rank1 = 0;
    for draw in 0..100usize {
        let mut cfg: ExperimentConfig = preset(names[draw % names.len()]).map_err(e2s)?;
        cfg.scenario.irs_side = cfg.scenario.irs_side.min(8);
        let inst = build_instance(&cfg, rng.random()).map_err(e2s)?;
        let node = &inst.psd.nodes[rng.random_range(0..inst.psd.nodes.len())];
        let slice = inst.channel.slice(node.frequency).map_err(e2s)?;
        let theta: Vec<f64> = (0..inst.scenario.num_irs_elements())
            .map(|_| rng.random_range(0.0..TAU))
            .collect();
        let gamma = PhaseConfig::from_phases(&theta, "random");
        let q = received_covariance(&slice, node, gamma.gamma());
        let (rank, bound) = (numerical_rank(&q, RANK_TOL), rank_bound(&slice, node));
        ensure(rank <= bound, || format!("draw {draw}: rank {rank} > bound {bound}"))?;
        if inst.psd.num_beams == 1 && draw % 10 == 0 {
            let ranks = rank_profile(&inst.channel, &inst.psd).map_err(e2s)?;
            let b = b_coefficients(&inst.psd, &ranks, inst.scenario.m2()).map_err(e2s)?;
            ensure(b.iter().skip(1).all(|&x| x == 0.0), || format!("draw {draw}: B_m = {b:?}"))?;
            checked_rank1 += 1;
        }
    }
    Ok(format!(
        "100 draws, B_m = 0 for m >= 2 on {checked_rank1} single-beam instances"
    ))
}

fn csv_with_threads(cfg: &ExperimentConfig, threads: usize) -> Result<String, String> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(e2s)?;
    pool.install(|| run_experiment(cfg, RunOptions::default()))
        .map_err(e2s)?
        .to_csv_string()
        .map_err(e2s)
}

fn criterion_10() -> Outcome {
    let mut checked = Vec::new();
    for name in ["fig4-desk", "mirror-sanity", "fig6-desk", "fig7-desk"] {
        let cfg = preset(name).map_err(e2s)?;
        let a = csv_with_threads(&cfg, 1)?;
        let b = csv_with_threads(&cfg, 1)?;
        let c = csv_with_threads(&cfg, 4)?;
        ensure(a == b, || format!("{name}: two single-thread runs differ"))?;
        ensure(a == c, || format!("{name}: 1-thread and 4-thread runs differ"))?;
        checked.push(name);
    }
    Ok(format!("identical across reruns and 1/4 threads: {}", checked.join(", ")))
}

fn report(id: usize, title: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = f();
    let elapsed = start.elapsed();
    let (ok, detail) = match outcome {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    let timed = elapsed <= budget;
    let status = if ok && timed { "PASS" } else { "FAIL" };
    let over = if timed {
        String::new()
    } else {
        format!(" [over the {:.0} s budget]", budget.as_secs_f64())
    };
    println!(
        "[{status}] criterion {id:>2}: {title}: {detail} ({:.2} s){over}",
        elapsed.as_secs_f64()
    );
    ok && timed
}

type Criterion = (&'static str, u64, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("NB optimality for a monochromatic signal", 5, criterion_1),
        ("NB optimality below the bandwidth threshold", 60, criterion_2),
        ("large-IRS asymptotics of the NB family", 30, criterion_3),
        ("quadratic form equals direct received power", 60, criterion_4),
        ("bound chain on every row", 600, criterion_5),
        ("solvers within 5% of the exhaustive oracle", 600, criterion_6),
        ("mirror-case tightness", 120, criterion_7),
        ("beam-squint rate peak", 300, criterion_8),
        ("rank bound dominance", 30, criterion_9),
        ("determinism across reruns and thread counts", 120, criterion_10),
    ];
    let results: Vec<bool> = criteria
        .iter()
        .enumerate()
        .map(|(i, &(title, budget, f))| report(i + 1, title, Duration::from_secs(budget), f))
        .collect();
    let passed = results.iter().filter(|&&r| r).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
