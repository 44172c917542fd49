//! Achievable rate and its upper bounds.

use std::f64::consts::LN_2;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelSlice, ChannelSource};
use crate::coupling::{Coupling, PhaseConfig};
use crate::error::{Error, Result};
use crate::linalg::{ln_det_identity_plus, numerical_rank, numerical_rank_capped, pairwise_sum, C64};
use crate::spectrum::{PsdBundle, PsdNode};
use crate::units::dbm_to_watts;

pub const DEFAULT_N0_DBM_PER_HZ: f64 = -174.0;
pub const RANK_TOL: f64 = 1e-10;

pub fn default_n0() -> f64 {
    dbm_to_watts(DEFAULT_N0_DBM_PER_HZ)
}

#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    /// bits/s.
    pub rate: f64,
    /// Spectral efficiency at each PSD node, bits/s/Hz.
    pub per_node: Vec<f64>,
    pub n0: f64,
    pub tag: String,
}

/// `Q(f,γ) = H(f,γ) G(f) Hᴴ(f,γ)` at one node.
pub fn received_covariance(slice: &ChannelSlice, node: &PsdNode, gamma: &[C64]) -> DMatrix<C64> {
    let m2 = slice.m2();
    let mut q = DMatrix::zeros(m2, m2);
    for b in &node.beams {
        let h = nalgebra::DVector::from_vec(slice.apply(gamma, &b.vector));
        q += (&h * h.adjoint()) * C64::new(b.density, 0.0);
    }
    q
}

pub fn achievable_rate<C: ChannelSource + ?Sized>(
    channel: &C,
    psd: &PsdBundle,
    config: &PhaseConfig,
    n0: f64,
) -> Result<RateReport> {
    if !(n0 > 0.0 && n0.is_finite()) {
        return Err(Error::Contract(format!("N0 must be positive, got {n0}")));
    }
    if config.len() != channel.num_irs_elements() {
        return Err(Error::Dimension("configuration length does not match L".into()));
    }
    PhaseConfig::new(config.gamma().to_vec(), "")?;
    let per_node: Vec<f64> = psd
        .nodes
        .par_iter()
        .map(|node| {
            let slice = channel.slice(node.frequency)?;
            if !slice.is_finite() {
                return Err(Error::NonFinite(format!("channel at {} Hz", node.frequency)));
            }
            let q = received_covariance(&slice, node, config.gamma());
            Ok(ln_det_identity_plus(&q, n0)? / LN_2)
        })
        .collect::<Result<_>>()?;
    let weighted: Vec<f64> = per_node.iter().zip(&psd.nodes).map(|(se, n)| se * n.weight).collect();
    Ok(RateReport {
        rate: pairwise_sum(&weighted),
        per_node,
        n0,
        tag: config.tag().to_string(),
    })
}

/// `min{M2, ρ(G), min{L, ρ(V), ρ(W)} + ρ(H̄)}`.
pub fn rank_bound(slice: &ChannelSlice, node: &PsdNode) -> usize {
    let (l, m1, m2) = (slice.num_irs_elements(), slice.m1(), slice.m2());
    let rho_g = if node.beams.len() <= 1 {
        node.beams.len()
    } else {
        numerical_rank(&node.g_matrix(m1), RANK_TOL)
    };
    let cap = m2.min(rho_g);
    if cap == 0 {
        return 0;
    }
    let rho_v = numerical_rank_capped(&slice.v_matrix(), RANK_TOL, cap);
    let rho_w = numerical_rank_capped(&slice.w_matrix(), RANK_TOL, cap);
    let rho_h = if slice.has_multipath() {
        numerical_rank_capped(slice.multipath(), RANK_TOL, cap)
    } else {
        0
    };
    cap.min(l.min(rho_v).min(rho_w) + rho_h)
}

pub fn rank_profile<C: ChannelSource + ?Sized>(channel: &C, psd: &PsdBundle) -> Result<Vec<usize>> {
    psd.nodes
        .par_iter()
        .map(|node| Ok(rank_bound(&channel.slice(node.frequency)?, node)))
        .collect()
}

/// `B_m = ∫ 1{r_Q(f) ≥ m} df`, m = 1..M2, in Hz.
pub fn b_coefficients(psd: &PsdBundle, ranks: &[usize], m2: usize) -> Result<Vec<f64>> {
    if ranks.len() != psd.nodes.len() {
        return Err(Error::Dimension("one rank per PSD node expected".into()));
    }
    let mut b = vec![0.0; m2];
    for (node, &r) in psd.nodes.iter().zip(ranks) {
        for bm in b.iter_mut().take(r.min(m2)) {
            *bm += node.weight;
        }
    }
    Ok(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundVariant {
    Ub3ClosedForm,
    UbRank1,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub b_m: Vec<f64>,
    pub r_q: Vec<usize>,
    /// bits/s.
    pub value: f64,
    /// Relaxed received-power surrogate `Lλ_max + w + 2Σ|q_ℓ|`, W.
    pub power: f64,
    pub variant: BoundVariant,
}

pub fn upper_bound(coupling: &Coupling, psd: &PsdBundle, ranks: &[usize], n0: f64, variant: BoundVariant) -> Result<BoundReport> {
    if !(n0 > 0.0) {
        return Err(Error::Contract(format!("N0 must be positive, got {n0}")));
    }
    if variant == BoundVariant::UbRank1 && psd.max_rank() > 1 {
        return Err(Error::Contract("rank-1 bound requested for a PSD of rank > 1".into()));
    }
    let b_m = b_coefficients(psd, ranks, coupling.m2())?;
    let power = coupling.relaxed_bound()?;
    let value = match variant {
        BoundVariant::Ub3ClosedForm => {
            let total: f64 = b_m.iter().sum();
            if total > 0.0 {
                b_m.iter().map(|b| b * (power / (n0 * total)).ln_1p() / LN_2).sum()
            } else {
                0.0
            }
        }
        BoundVariant::UbRank1 => {
            let b1 = b_m.first().copied().unwrap_or(0.0);
            if b1 > 0.0 {
                b1 * (power / (n0 * b1)).ln_1p() / LN_2
            } else {
                0.0
            }
        }
    };
    Ok(BoundReport {
        b_m,
        r_q: ranks.to_vec(),
        value,
        power,
        variant,
    })
}
