//! Spatial layout of the BS array, UE array, IRS element grid and wall
//! reflectors, plus every distance, angle and delay the channel model uses.
//!
//! Frame: right-handed, the IRS lies in its own plane with unit normal
//! `plane_normal` (the reference layouts use the x–z plane with normal +y and
//! keep the BS and UE at z = 0). The in-plane horizontal axis of a surface or
//! linear array with normal `n` is `normalize(n × ẑ)`; its vertical axis is
//! `horizontal × n`.
//!
//! IRS elements are indexed row-major: panel, then row (vertical), then
//! column (horizontal).

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

pub use crate::antenna::ElementGainModel;
use crate::error::{Error, Result};
use crate::units::SPEED_OF_LIGHT;

const UNIT_NORM_TOL: f64 = 1e-12;
const MIN_DISTANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    pub fn normalized(self) -> Vec3 {
        self * (1.0 / self.norm())
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(v: [f64; 3]) -> Self {
        Vec3::new(v[0], v[1], v[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// In-plane horizontal axis for a surface (or array broadside) normal.
pub fn horizontal_axis(normal: Vec3) -> Vec3 {
    let h = normal.cross(Vec3::Z);
    if h.norm() < 1e-9 {
        Vec3::X
    } else {
        h.normalized()
    }
}

/// Mirror image of `p` across the plane through `point` with unit `normal`.
pub fn mirror_point(p: Vec3, point: Vec3, normal: Vec3) -> Vec3 {
    p - normal * (2.0 * (p - point).dot(normal))
}

fn check_unit(v: Vec3, what: &str) -> Result<()> {
    if ((v.norm() - 1.0).abs()) > UNIT_NORM_TOL {
        return Err(Error::Geometry(format!("{what} must have unit norm, got {}", v.norm())));
    }
    Ok(())
}

/// Uniform linear array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySpec {
    pub num_elements: usize,
    /// Element spacing, m.
    pub spacing: f64,
    /// Array center, m.
    pub center: Vec3,
    /// Broadside unit normal.
    pub orientation: Vec3,
    #[serde(default)]
    pub element_gain: ElementGainModel,
}

impl ArraySpec {
    pub fn validate(&self, what: &str) -> Result<()> {
        if self.num_elements == 0 {
            return Err(Error::Geometry(format!("{what} array has no elements")));
        }
        if !(self.spacing > 0.0) {
            return Err(Error::Geometry(format!("{what} array spacing must be positive")));
        }
        check_unit(self.orientation, &format!("{what} orientation"))
    }

    /// Direction along which element index increases.
    pub fn axis(&self) -> Vec3 {
        horizontal_axis(self.orientation)
    }

    pub fn element_positions(&self) -> Vec<Vec3> {
        let axis = self.axis();
        let mid = (self.num_elements as f64 - 1.0) / 2.0;
        (0..self.num_elements)
            .map(|m| self.center + axis * ((m as f64 - mid) * self.spacing))
            .collect()
    }

    /// Beam angle β for which the phase progression
    /// `e^{j2πm(Δ/c) f sin β}` over element index `m` focuses toward `target`.
    pub fn steering_angle_to(&self, target: Vec3) -> f64 {
        let u = (target - self.center).normalized();
        (-u.dot(self.axis())).clamp(-1.0, 1.0).asin()
    }
}

/// Planar IRS made of one or more identical rectangular panels lying in the
/// same plane. Panels are offset along the horizontal in-plane axis and form
/// a single logical surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrsSpec {
    pub rows: usize,
    pub cols: usize,
    /// Element pitch, m.
    pub element_spacing: f64,
    /// Physical element area, m². Defaults to `element_spacing²` (gapless).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element_area: Option<f64>,
    pub plane_origin: Vec3,
    pub plane_normal: Vec3,
    /// Horizontal offsets of panel centers from `plane_origin`, m.
    #[serde(default = "single_panel")]
    pub panel_offsets: Vec<f64>,
}

fn single_panel() -> Vec<f64> {
    vec![0.0]
}

impl IrsSpec {
    /// Square `side × side` surface in the x–z plane facing +y.
    pub fn square(side: usize, spacing: f64) -> Self {
        Self {
            rows: side,
            cols: side,
            element_spacing: spacing,
            element_area: None,
            plane_origin: Vec3::ZERO,
            plane_normal: Vec3::Y,
            panel_offsets: single_panel(),
        }
    }

    /// Single row of `count` elements along x.
    pub fn linear(count: usize, spacing: f64) -> Self {
        Self {
            rows: 1,
            cols: count,
            ..Self::square(1, spacing)
        }
    }

    pub fn num_elements(&self) -> usize {
        self.rows * self.cols * self.panel_offsets.len()
    }

    pub fn area(&self) -> f64 {
        self.element_area.unwrap_or(self.element_spacing * self.element_spacing)
    }

    pub fn horizontal(&self) -> Vec3 {
        horizontal_axis(self.plane_normal)
    }

    pub fn vertical(&self) -> Vec3 {
        self.horizontal().cross(self.plane_normal)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 || self.panel_offsets.is_empty() {
            return Err(Error::Geometry("IRS must have at least one element".into()));
        }
        if !(self.element_spacing > 0.0) {
            return Err(Error::Geometry("IRS element spacing must be positive".into()));
        }
        if !(self.area() > 0.0) {
            return Err(Error::Geometry("IRS element area must be positive".into()));
        }
        check_unit(self.plane_normal, "IRS plane normal")
    }

    pub fn panel_centers(&self) -> Vec<Vec3> {
        let h = self.horizontal();
        self.panel_offsets.iter().map(|&o| self.plane_origin + h * o).collect()
    }

    pub fn element_positions(&self) -> Vec<Vec3> {
        let h = self.horizontal();
        let v = self.vertical();
        let rmid = (self.rows as f64 - 1.0) / 2.0;
        let cmid = (self.cols as f64 - 1.0) / 2.0;
        let mut out = Vec::with_capacity(self.num_elements());
        for center in self.panel_centers() {
            for r in 0..self.rows {
                for c in 0..self.cols {
                    out.push(
                        center + h * ((c as f64 - cmid) * self.element_spacing) + v * ((r as f64 - rmid) * self.element_spacing),
                    );
                }
            }
        }
        out
    }
}

/// Complex reflection coefficient of a wall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ReflectionCoefficient {
    Constant {
        magnitude: f64,
        phase_deg: f64,
    },
    /// Linearly interpolated in the complex plane, clamped at the ends.
    Table {
        points: Vec<ReflectionSample>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReflectionSample {
    pub frequency_ghz: f64,
    pub magnitude: f64,
    pub phase_deg: f64,
}

impl Default for ReflectionCoefficient {
    /// Not calibrated against any measured wall: |ρ| = 0.5, phase π.
    fn default() -> Self {
        ReflectionCoefficient::Constant {
            magnitude: 0.5,
            phase_deg: 180.0,
        }
    }
}

impl ReflectionCoefficient {
    pub fn at(&self, frequency_hz: f64) -> num_complex::Complex64 {
        use num_complex::Complex64;
        match self {
            ReflectionCoefficient::Constant { magnitude, phase_deg } => Complex64::from_polar(*magnitude, phase_deg.to_radians()),
            ReflectionCoefficient::Table { points } => {
                let f = frequency_hz / 1e9;
                let z = |p: &ReflectionSample| Complex64::from_polar(p.magnitude, p.phase_deg.to_radians());
                match points.iter().position(|p| p.frequency_ghz >= f) {
                    None => z(points.last().expect("validated non-empty")),
                    Some(0) => z(&points[0]),
                    Some(k) => {
                        let (a, b) = (&points[k - 1], &points[k]);
                        let t = (f - a.frequency_ghz) / (b.frequency_ghz - a.frequency_ghz);
                        z(a) * (1.0 - t) + z(b) * t
                    }
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ReflectionCoefficient::Constant { magnitude, .. } => {
                if !(0.0..=1.0).contains(magnitude) {
                    return Err(Error::Geometry(format!("|reflection coefficient| = {magnitude} > 1")));
                }
            }
            ReflectionCoefficient::Table { points } => {
                if points.is_empty() {
                    return Err(Error::Geometry("empty reflection table".into()));
                }
                for w in points.windows(2) {
                    if !(w[1].frequency_ghz > w[0].frequency_ghz) {
                        return Err(Error::Geometry("reflection table frequencies must increase".into()));
                    }
                }
                if points.iter().any(|p| !(0.0..=1.0).contains(&p.magnitude)) {
                    return Err(Error::Geometry("|reflection coefficient| > 1 in table".into()));
                }
            }
        }
        Ok(())
    }
}

/// Planar specular reflector (first-order image path).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReflectorSpec {
    pub id: usize,
    pub point: Vec3,
    pub normal: Vec3,
    #[serde(default)]
    pub reflection: ReflectionCoefficient,
}

/// Path lengths and delays BS_i → wall p → UE_j, indexed `i * M2 + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePaths {
    pub reflector_id: usize,
    pub m1: usize,
    pub m2: usize,
    pub length: Vec<f64>,
}

impl ImagePaths {
    pub fn length(&self, i: usize, j: usize) -> f64 {
        self.length[i * self.m2 + j]
    }

    pub fn delay(&self, i: usize, j: usize) -> f64 {
        self.length(i, j) / SPEED_OF_LIGHT
    }
}

/// Serializable part of a [`Scenario`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub bs: ArraySpec,
    pub ue: ArraySpec,
    pub irs: IrsSpec,
    #[serde(default)]
    pub reflectors: Vec<ReflectorSpec>,
}

/// Fully derived geometry. Serializes as its [`ScenarioSpec`]; deserializing
/// rebuilds (and revalidates) all derived tensors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioSpec", into = "ScenarioSpec")]
pub struct Scenario {
    spec: ScenarioSpec,
    bs_positions: Vec<Vec3>,
    ue_positions: Vec<Vec3>,
    irs_positions: Vec<Vec3>,
    /// BS element i → IRS element ℓ, `i * L + ℓ`.
    d1: Vec<f64>,
    /// UE element j → IRS element ℓ, `j * L + ℓ`.
    d2: Vec<f64>,
    cos1: Vec<f64>,
    cos2: Vec<f64>,
    images: Vec<ImagePaths>,
}

impl TryFrom<ScenarioSpec> for Scenario {
    type Error = Error;
    fn try_from(spec: ScenarioSpec) -> Result<Self> {
        build_scenario(spec.bs, spec.ue, spec.irs, spec.reflectors)
    }
}

impl From<Scenario> for ScenarioSpec {
    fn from(s: Scenario) -> Self {
        s.spec
    }
}

/// Assemble and validate a scenario.
pub fn build_scenario(bs: ArraySpec, ue: ArraySpec, irs: IrsSpec, reflectors: Vec<ReflectorSpec>) -> Result<Scenario> {
    bs.validate("BS")?;
    ue.validate("UE")?;
    irs.validate()?;
    let bs_positions = bs.element_positions();
    let ue_positions = ue.element_positions();
    let irs_positions = irs.element_positions();
    let n = irs.plane_normal;

    for (what, pts) in [("BS", &bs_positions), ("UE", &ue_positions)] {
        for p in pts.iter() {
            let side = (*p - irs.plane_origin).dot(n);
            if side <= 0.0 {
                return Err(Error::Geometry(format!(
                    "{what} element at {p:?} is not in front of the IRS plane"
                )));
            }
        }
    }
    for b in &bs_positions {
        for u in &ue_positions {
            if b.distance(*u) <= MIN_DISTANCE {
                return Err(Error::DegenerateGeometry("a BS and a UE element coincide".into()));
            }
        }
    }

    let l = irs_positions.len();
    let hop = |pts: &[Vec3]| -> Result<(Vec<f64>, Vec<f64>)> {
        let mut d = Vec::with_capacity(pts.len() * l);
        let mut cos = Vec::with_capacity(pts.len() * l);
        for p in pts {
            for e in &irs_positions {
                let r = *p - *e;
                let dist = r.norm();
                if dist <= MIN_DISTANCE {
                    return Err(Error::DegenerateGeometry("an array element lies on an IRS element".into()));
                }
                d.push(dist);
                cos.push(r.dot(n) / dist);
            }
        }
        Ok((d, cos))
    };
    let (d1, cos1) = hop(&bs_positions)?;
    let (d2, cos2) = hop(&ue_positions)?;

    let mut scenario = Scenario {
        spec: ScenarioSpec {
            bs,
            ue,
            irs,
            reflectors: Vec::new(),
        },
        bs_positions,
        ue_positions,
        irs_positions,
        d1,
        d2,
        cos1,
        cos2,
        images: Vec::new(),
    };
    let mut images = Vec::with_capacity(reflectors.len());
    for r in &reflectors {
        r.reflection.validate()?;
        check_unit(r.normal, "reflector normal")?;
        if reflectors.iter().filter(|o| o.id == r.id).count() > 1 {
            return Err(Error::Geometry(format!("duplicate reflector id {}", r.id)));
        }
        images.push(scenario.image_paths_for(r)?);
    }
    scenario.spec.reflectors = reflectors;
    scenario.images = images;
    Ok(scenario)
}

impl Scenario {
    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn bs(&self) -> &ArraySpec {
        &self.spec.bs
    }

    pub fn ue(&self) -> &ArraySpec {
        &self.spec.ue
    }

    pub fn irs(&self) -> &IrsSpec {
        &self.spec.irs
    }

    pub fn reflectors(&self) -> &[ReflectorSpec] {
        &self.spec.reflectors
    }

    pub fn m1(&self) -> usize {
        self.bs_positions.len()
    }

    pub fn m2(&self) -> usize {
        self.ue_positions.len()
    }

    pub fn num_irs_elements(&self) -> usize {
        self.irs_positions.len()
    }

    pub fn bs_positions(&self) -> &[Vec3] {
        &self.bs_positions
    }

    pub fn ue_positions(&self) -> &[Vec3] {
        &self.ue_positions
    }

    pub fn irs_positions(&self) -> &[Vec3] {
        &self.irs_positions
    }

    /// Distance BS element `i` → IRS element `l`.
    pub fn d1(&self, i: usize, l: usize) -> f64 {
        self.d1[i * self.irs_positions.len() + l]
    }

    /// Distance UE element `j` → IRS element `l`.
    pub fn d2(&self, j: usize, l: usize) -> f64 {
        self.d2[j * self.irs_positions.len() + l]
    }

    pub fn cos_phi1(&self, i: usize, l: usize) -> f64 {
        self.cos1[i * self.irs_positions.len() + l]
    }

    pub fn cos_phi2(&self, j: usize, l: usize) -> f64 {
        self.cos2[j * self.irs_positions.len() + l]
    }

    /// Angle of arrival at IRS element `l` from BS element `i`, from the
    /// element normal, in [0, π].
    pub fn phi1(&self, i: usize, l: usize) -> f64 {
        self.cos_phi1(i, l).clamp(-1.0, 1.0).acos()
    }

    pub fn phi2(&self, j: usize, l: usize) -> f64 {
        self.cos_phi2(j, l).clamp(-1.0, 1.0).acos()
    }

    /// Total path length BS_i → IRS_l → UE_j.
    pub fn path_length(&self, i: usize, j: usize, l: usize) -> f64 {
        self.d1(i, l) + self.d2(j, l)
    }

    pub fn delay(&self, i: usize, j: usize, l: usize) -> f64 {
        self.path_length(i, j, l) / SPEED_OF_LIGHT
    }

    /// Center-to-center path length through IRS element `l`.
    pub fn center_path_length(&self, l: usize) -> f64 {
        let e = self.irs_positions[l];
        self.spec.bs.center.distance(e) + self.spec.ue.center.distance(e)
    }

    /// Center-to-center delays τ_ℓ through each IRS element.
    pub fn center_delays(&self) -> Vec<f64> {
        (0..self.irs_positions.len())
            .map(|l| self.center_path_length(l) / SPEED_OF_LIGHT)
            .collect()
    }

    pub fn images(&self) -> &[ImagePaths] {
        &self.images
    }

    /// Image-theorem paths through reflector `id`.
    pub fn image_paths(&self, id: usize) -> Result<&ImagePaths> {
        self.images
            .iter()
            .find(|p| p.reflector_id == id)
            .ok_or_else(|| Error::Geometry(format!("no reflector with id {id}")))
    }

    fn image_paths_for(&self, r: &ReflectorSpec) -> Result<ImagePaths> {
        let m1 = self.bs_positions.len();
        let m2 = self.ue_positions.len();
        let mut length = Vec::with_capacity(m1 * m2);
        let side = |p: Vec3| (p - r.point).dot(r.normal);
        for b in &self.bs_positions {
            let sb = side(*b);
            for u in &self.ue_positions {
                let su = side(*u);
                if su.abs() <= MIN_DISTANCE || sb.abs() <= MIN_DISTANCE {
                    return Err(Error::DegenerateGeometry(format!(
                        "an array element lies on reflector {}",
                        r.id
                    )));
                }
                if sb.signum() != su.signum() {
                    return Err(Error::Geometry(format!(
                        "BS and UE are on opposite sides of reflector {}",
                        r.id
                    )));
                }
                let image = mirror_point(*u, r.point, r.normal);
                length.push(b.distance(image));
            }
        }
        Ok(ImagePaths {
            reflector_id: r.id,
            m1,
            m2,
            length,
        })
    }
}

/// Reference 2D layout: IRS centered at the origin in the x–z plane facing
/// +y, BS and UE in the z = 0 plane on either side of the normal, each array
/// broadside aimed at the IRS center.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarLayout {
    pub bs_distance: f64,
    pub ue_distance: f64,
    /// Angle of the BS from the IRS normal, rad (BS on the −x side).
    pub bs_angle: f64,
    /// Angle of the UE from the IRS normal, rad (UE on the +x side).
    pub ue_angle: f64,
    pub bs_elements: usize,
    pub ue_elements: usize,
    pub array_spacing: f64,
    pub bs_gain: ElementGainModel,
    pub ue_gain: ElementGainModel,
    pub irs: IrsSpec,
}

impl PlanarLayout {
    pub fn bs_center(&self) -> Vec3 {
        let h = self.irs.horizontal();
        let n = self.irs.plane_normal;
        self.irs.plane_origin + (h * -self.bs_angle.sin() + n * self.bs_angle.cos()) * self.bs_distance
    }

    pub fn ue_center(&self) -> Vec3 {
        let h = self.irs.horizontal();
        let n = self.irs.plane_normal;
        self.irs.plane_origin + (h * self.ue_angle.sin() + n * self.ue_angle.cos()) * self.ue_distance
    }

    fn aimed(&self, center: Vec3, count: usize, gain: ElementGainModel) -> ArraySpec {
        ArraySpec {
            num_elements: count,
            spacing: self.array_spacing,
            center,
            orientation: (self.irs.plane_origin - center).normalized(),
            element_gain: gain,
        }
    }

    pub fn bs_array(&self) -> ArraySpec {
        self.aimed(self.bs_center(), self.bs_elements, self.bs_gain)
    }

    pub fn ue_array(&self) -> ArraySpec {
        self.aimed(self.ue_center(), self.ue_elements, self.ue_gain)
    }

    /// The wall carrying the IRS, as a reflector.
    pub fn wall(&self, reflection: ReflectionCoefficient) -> ReflectorSpec {
        ReflectorSpec {
            id: 0,
            point: self.irs.plane_origin,
            normal: self.irs.plane_normal,
            reflection,
        }
    }

    pub fn spec(&self, reflectors: Vec<ReflectorSpec>) -> ScenarioSpec {
        ScenarioSpec {
            bs: self.bs_array(),
            ue: self.ue_array(),
            irs: self.irs.clone(),
            reflectors,
        }
    }

    pub fn build(&self, reflectors: Vec<ReflectorSpec>) -> Result<Scenario> {
        build_scenario(self.bs_array(), self.ue_array(), self.irs.clone(), reflectors)
    }
}
