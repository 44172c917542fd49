//! Quadratic-form description of the received power.
//!
//! For an IRS configuration γ, `P_rx(γ) = γᴴTγ + w + 2Re{qᴴγ}`, where
//!
//! * `T[ℓ,ℓ'] = ∫ Tr{H_ℓ'(f) G(f) H_ℓ(f)ᴴ} df`,
//! * `q[ℓ]* = ∫ Tr{H_ℓ(f) G(f) H̄(f)ᴴ} df`,
//! * `w = ∫ Tr{H̄(f) G(f) H̄(f)ᴴ} df`.
//!
//! `T` is assembled as a Gram matrix: every (node, beam, UE antenna) triple
//! contributes a column `a[ℓ] = √(Δf·g_k) (w_ℓᵀ v_k) v_ℓ[j]`, and
//! `T[ℓ,ℓ'] = Σ conj(a[ℓ]) a[ℓ']`. This keeps `T` positive semidefinite up
//! to rounding.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::OnceLock;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::channel::ChannelSource;
use crate::error::{Error, Result};
use crate::linalg::{dominant_eigenpair, dot_conj, pairwise_sum, EigenOptions, EigenPair, HermitianMatrix, C64};
use crate::spectrum::PsdBundle;

/// Default cap on the dense coupling matrix.
pub const DEFAULT_MEM_CAP_BYTES: u64 = 512 << 20;

const UNIMODULAR_TOL: f64 = 1e-12;
const COLUMN_BLOCK: usize = 512;
const SIDECAR_MAGIC: &[u8; 8] = b"IRSCOUP1";

/// IRS configuration: one unit-modulus coefficient per element.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseConfig {
    gamma: Vec<C64>,
    tag: String,
}

impl PhaseConfig {
    pub fn new(gamma: Vec<C64>, tag: impl Into<String>) -> Result<Self> {
        if let Some((l, g)) = gamma
            .iter()
            .enumerate()
            .find(|(_, g)| (g.norm() - 1.0).abs() > UNIMODULAR_TOL)
        {
            return Err(Error::Contract(format!("|γ_{l}| = {} is not 1", g.norm())));
        }
        Ok(Self { gamma, tag: tag.into() })
    }

    pub fn from_phases(theta: &[f64], tag: impl Into<String>) -> Self {
        Self {
            gamma: theta.iter().map(|&t| C64::from_polar(1.0, t)).collect(),
            tag: tag.into(),
        }
    }

    pub fn gamma(&self) -> &[C64] {
        &self.gamma
    }

    pub fn theta(&self) -> Vec<f64> {
        self.gamma.iter().map(|g| g.arg()).collect()
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = tag.into();
        self
    }
}

#[derive(Debug)]
pub struct Coupling {
    t: HermitianMatrix,
    q: Vec<C64>,
    w: f64,
    m1: usize,
    m2: usize,
    k: usize,
    eig: OnceLock<EigenPair>,
}

impl Clone for Coupling {
    fn clone(&self) -> Self {
        let eig = OnceLock::new();
        if let Some(e) = self.eig.get() {
            let _ = eig.set(e.clone());
        }
        Self {
            t: self.t.clone(),
            q: self.q.clone(),
            w: self.w,
            m1: self.m1,
            m2: self.m2,
            k: self.k,
            eig,
        }
    }
}

impl Coupling {
    pub fn from_parts(t: HermitianMatrix, q: Vec<C64>, w: f64, m1: usize, m2: usize, k: usize) -> Result<Self> {
        if q.len() != t.dim() {
            return Err(Error::Dimension(format!("q has {} entries for L={}", q.len(), t.dim())));
        }
        if !(w >= 0.0) || !w.is_finite() {
            return Err(Error::Contract(format!("w must be finite and >= 0, got {w}")));
        }
        let finite = |z: &C64| z.re.is_finite() && z.im.is_finite();
        if !q.iter().all(finite) || !t.as_slice().iter().all(finite) {
            return Err(Error::NonFinite("coupling entries must be finite".into()));
        }
        Ok(Self {
            t,
            q,
            w,
            m1,
            m2,
            k,
            eig: OnceLock::new(),
        })
    }

    pub fn t(&self) -> &HermitianMatrix {
        &self.t
    }

    pub fn q(&self) -> &[C64] {
        &self.q
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn num_irs_elements(&self) -> usize {
        self.t.dim()
    }

    pub fn m1(&self) -> usize {
        self.m1
    }

    pub fn m2(&self) -> usize {
        self.m2
    }

    pub fn num_beams(&self) -> usize {
        self.k
    }

    pub fn has_multipath(&self) -> bool {
        self.w > 0.0 || self.q.iter().any(|z| z.norm() > 0.0)
    }

    /// `γᴴTγ + 2Re{qᴴγ}` (the IRS-dependent part of the received power).
    pub fn objective(&self, gamma: &[C64]) -> f64 {
        self.t.quadratic_form(gamma) + 2.0 * dot_conj(&self.q, gamma).re
    }

    pub fn received_power(&self, config: &PhaseConfig) -> Result<f64> {
        if config.len() != self.t.dim() {
            return Err(Error::Dimension(format!(
                "configuration has {} entries for L={}",
                config.len(),
                self.t.dim()
            )));
        }
        PhaseConfig::new(config.gamma.clone(), "")?;
        Ok(self.objective(&config.gamma) + self.w)
    }

    /// Cached dominant eigenpair of `T`.
    pub fn max_eigenpair(&self) -> Result<&EigenPair> {
        if let Some(e) = self.eig.get() {
            return Ok(e);
        }
        let e = dominant_eigenpair(&self.t, EigenOptions::default())?;
        Ok(self.eig.get_or_init(|| e))
    }

    /// `λ_max(T)`, zero for `T = 0`.
    pub fn lambda_max(&self) -> Result<f64> {
        if self.t.frobenius_norm() == 0.0 {
            return Ok(0.0);
        }
        Ok(self.max_eigenpair()?.value.max(0.0))
    }

    /// `Lλ_max + w + 2Σ|q_ℓ|`, an upper bound on `P_rx` over all γ.
    pub fn relaxed_bound(&self) -> Result<f64> {
        let l = self.t.dim() as f64;
        let q_abs: Vec<f64> = self.q.iter().map(|z| z.norm()).collect();
        Ok(l * self.lambda_max()? + self.w + 2.0 * pairwise_sum(&q_abs))
    }

    /// Binary sidecar: magic `IRSCOUP1`; u64 LE `L, M1, M2, K`; f64 LE `w`;
    /// `q` as `L` (re, im) pairs; upper triangle of `T` row-major as
    /// (re, im) pairs.
    pub fn write_sidecar<W: Write>(&self, out: W) -> Result<()> {
        let mut out = BufWriter::new(out);
        let l = self.t.dim();
        out.write_all(SIDECAR_MAGIC)?;
        for v in [l, self.m1, self.m2, self.k] {
            out.write_all(&(v as u64).to_le_bytes())?;
        }
        out.write_all(&self.w.to_le_bytes())?;
        for z in &self.q {
            out.write_all(&z.re.to_le_bytes())?;
            out.write_all(&z.im.to_le_bytes())?;
        }
        for r in 0..l {
            for z in &self.t.row(r)[r..] {
                out.write_all(&z.re.to_le_bytes())?;
                out.write_all(&z.im.to_le_bytes())?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_sidecar<R: Read>(input: R) -> Result<Self> {
        let mut input = BufReader::new(input);
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != SIDECAR_MAGIC {
            return Err(Error::Config("not a coupling sidecar file".into()));
        }
        let mut u = || -> Result<u64> {
            let mut b = [0u8; 8];
            input.read_exact(&mut b)?;
            Ok(u64::from_le_bytes(b))
        };
        let (l, m1, m2, k) = (u()? as usize, u()? as usize, u()? as usize, u()? as usize);
        let mut f = || -> Result<f64> {
            let mut b = [0u8; 8];
            input.read_exact(&mut b)?;
            Ok(f64::from_le_bytes(b))
        };
        let w = f()?;
        let q = (0..l).map(|_| Ok(C64::new(f()?, f()?))).collect::<Result<Vec<_>>>()?;
        let mut data = vec![C64::new(0.0, 0.0); l * l];
        for r in 0..l {
            for c in r..l {
                data[r * l + c] = C64::new(f()?, f()?);
            }
        }
        Self::from_parts(HermitianMatrix::from_upper(l, data)?, q, w, m1, m2, k)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_sidecar(std::fs::File::create(path)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_sidecar(std::fs::File::open(path)?)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AssemblyOptions {
    pub mem_cap_bytes: u64,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self {
            mem_cap_bytes: DEFAULT_MEM_CAP_BYTES,
        }
    }
}

/// Bytes held by a dense L×L complex coupling matrix.
pub fn coupling_bytes(l: usize) -> u64 {
    (l as u64) * (l as u64) * 16
}

pub fn check_memory(l: usize, mem_cap_bytes: u64) -> Result<()> {
    let required = coupling_bytes(l) + (l as u64) * (COLUMN_BLOCK as u64) * 16;
    if required > mem_cap_bytes {
        return Err(Error::MemoryGuard {
            what: format!("coupling matrix for L={l}"),
            required_bytes: required,
            cap_bytes: mem_cap_bytes,
        });
    }
    Ok(())
}

fn check_dims<C: ChannelSource + ?Sized>(channel: &C, psd: &PsdBundle) -> Result<()> {
    if channel.m1() != psd.m1 {
        return Err(Error::Dimension(format!(
            "channel has M1={} but the PSD has M1={}",
            channel.m1(),
            psd.m1
        )));
    }
    Ok(())
}

/// Column block of the Gram factor, split into real and imaginary parts and
/// stored `[ℓ][column]`.
struct Block {
    cols: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

/// Columns contributed by one node: `a` (L × n_cols, `[ℓ][col]`) and `b`.
fn node_columns<C: ChannelSource + ?Sized>(channel: &C, psd: &PsdBundle, node: usize) -> Result<(Vec<C64>, Vec<C64>)> {
    let node = &psd.nodes[node];
    let slice = channel.slice(node.frequency)?;
    let (l, m2) = (slice.num_irs_elements(), slice.m2());
    let ncols = node.beams.len() * m2;
    let mut a = vec![C64::new(0.0, 0.0); l * ncols];
    let mut b = Vec::with_capacity(ncols);
    for (kb, beam) in node.beams.iter().enumerate() {
        let scale = (node.weight * beam.density).sqrt();
        let s = slice.project_bs(&beam.vector);
        for ell in 0..l {
            let c = s[ell] * scale;
            for (j, v) in slice.v(ell).iter().enumerate() {
                a[ell * ncols + kb * m2 + j] = c * v;
            }
        }
        let hb = slice.multipath() * DVector::from_column_slice(&beam.vector);
        b.extend(hb.iter().map(|z| z * scale));
    }
    Ok((a, b))
}

/// `Σ conj(x_d) y_d` over split real/imaginary rows.
#[inline]
fn gram_dot(xr: &[f64], xi: &[f64], yr: &[f64], yi: &[f64]) -> C64 {
    let n = xr.len();
    let mut re = [0.0f64; 4];
    let mut im = [0.0f64; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        for u in 0..4 {
            let d = 4 * c + u;
            re[u] += xr[d] * yr[d] + xi[d] * yi[d];
            im[u] += xr[d] * yi[d] - xi[d] * yr[d];
        }
    }
    let mut acc = C64::new((re[0] + re[1]) + (re[2] + re[3]), (im[0] + im[1]) + (im[2] + im[3]));
    for d in 4 * chunks..n {
        acc += C64::new(xr[d] * yr[d] + xi[d] * yi[d], xr[d] * yi[d] - xi[d] * yr[d]);
    }
    acc
}

fn accumulate_block(t: &mut [C64], l: usize, block: &Block) {
    let (re, im, cols) = (&block.re, &block.im, block.cols);
    t.par_chunks_mut(l).enumerate().for_each(|(r, row)| {
        let (xr, xi) = (&re[r * cols..(r + 1) * cols], &im[r * cols..(r + 1) * cols]);
        for c in r..l {
            row[c] += gram_dot(xr, xi, &re[c * cols..(c + 1) * cols], &im[c * cols..(c + 1) * cols]);
        }
    });
}

pub fn assemble_coupling<C: ChannelSource + ?Sized>(channel: &C, psd: &PsdBundle, opts: AssemblyOptions) -> Result<Coupling> {
    check_dims(channel, psd)?;
    let l = channel.num_irs_elements();
    check_memory(l, opts.mem_cap_bytes)?;
    let m2 = channel.m2();

    let mut t = vec![C64::new(0.0, 0.0); l * l];
    let mut q_parts: Vec<Vec<C64>> = Vec::new();
    let mut w_parts: Vec<f64> = Vec::new();

    // Group nodes so that each block holds about COLUMN_BLOCK columns.
    let mut groups: Vec<std::ops::Range<usize>> = Vec::new();
    let mut start = 0;
    let mut cols = 0;
    for (i, node) in psd.nodes.iter().enumerate() {
        cols += node.beams.len() * m2;
        if cols >= COLUMN_BLOCK {
            groups.push(start..i + 1);
            start = i + 1;
            cols = 0;
        }
    }
    if start < psd.nodes.len() {
        groups.push(start..psd.nodes.len());
    }

    for range in groups {
        let parts: Vec<(Vec<C64>, Vec<C64>)> = range
            .clone()
            .into_par_iter()
            .map(|n| node_columns(channel, psd, n))
            .collect::<Result<_>>()?;
        let cols: usize = parts.iter().map(|p| p.1.len()).sum();
        let mut block = Block {
            cols,
            re: vec![0.0; l * cols],
            im: vec![0.0; l * cols],
        };
        let mut offset = 0;
        for (a, b) in &parts {
            let nc = b.len();
            for ell in 0..l {
                for c in 0..nc {
                    let z = a[ell * nc + c];
                    block.re[ell * cols + offset + c] = z.re;
                    block.im[ell * cols + offset + c] = z.im;
                }
            }
            offset += nc;
        }
        accumulate_block(&mut t, l, &block);

        let b: Vec<C64> = parts.iter().flat_map(|p| p.1.iter().copied()).collect();
        if b.iter().any(|z| z.norm() > 0.0) {
            let br: Vec<f64> = b.iter().map(|z| z.re).collect();
            let bi: Vec<f64> = b.iter().map(|z| z.im).collect();
            let q: Vec<C64> = (0..l)
                .into_par_iter()
                .map(|ell| {
                    gram_dot(
                        &block.re[ell * cols..(ell + 1) * cols],
                        &block.im[ell * cols..(ell + 1) * cols],
                        &br,
                        &bi,
                    )
                })
                .collect();
            q_parts.push(q);
            w_parts.push(b.iter().map(|z| z.norm_sqr()).sum());
        }
    }

    let mut q = vec![C64::new(0.0, 0.0); l];
    for part in &q_parts {
        for (acc, z) in q.iter_mut().zip(part) {
            *acc += z;
        }
    }
    let t = HermitianMatrix::from_upper(l, t)?;
    if !t.as_slice().iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NonFinite("coupling matrix".into()));
    }
    Coupling::from_parts(t, q, pairwise_sum(&w_parts), channel.m1(), m2, psd.num_beams)
}

/// `∫ Tr{H(f,γ) G(f) H(f,γ)ᴴ} df` evaluated directly from the channel.
pub fn received_power_direct<C: ChannelSource + ?Sized>(channel: &C, psd: &PsdBundle, config: &PhaseConfig) -> Result<f64> {
    check_dims(channel, psd)?;
    if config.len() != channel.num_irs_elements() {
        return Err(Error::Dimension("configuration length does not match L".into()));
    }
    let per_node: Vec<f64> = psd
        .nodes
        .par_iter()
        .map(|node| {
            let slice = channel.slice(node.frequency)?;
            let p: f64 = node
                .beams
                .iter()
                .map(|b| b.density * crate::linalg::norm_sqr(&slice.apply(config.gamma(), &b.vector)))
                .sum();
            Ok(node.weight * p)
        })
        .collect::<Result<_>>()?;
    Ok(pairwise_sum(&per_node))
}
