//! Rigid-lip contact model of the four-chamber cup.
//!
//! Each lip sample casts rays along `-z_tool` from a short band of seal
//! radii. A sample is sealed when its worst clearance is within the gap
//! tolerance, or when the whole contact patch is within the lip's conformity
//! travel. Steep surface patches and through-holes inside the ring break the
//! seal regardless of clearance.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, TAU};

use crate::error::{invalid, Error, Result};
use crate::math;
use crate::se3::{Pose, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct CupGeometry {
    pub lip_outer_radius: f64,
    pub lip_inner_radius: f64,
    pub n_lip_samples: usize,
    /// Internal wall azimuths in the tool frame, ascending, 90 degrees apart.
    pub wall_azimuths: [f64; 4],
    pub seal_gap_tolerance: f64,
    /// Normal stiffness of one lip sample (N/m).
    pub lip_stiffness: f64,
    /// Innermost radius of the seal probe band; the band ends at `lip_inner_radius`.
    pub seal_probe_radius: f64,
    pub n_seal_probes: usize,
    /// Clearance spread the lip can absorb once any sample touches.
    pub conform_travel: f64,
    /// Largest angle between surface normal and `z_tool` the lip can seal on.
    pub max_conform_angle: f64,
}

impl Default for CupGeometry {
    fn default() -> Self {
        CupGeometry {
            lip_outer_radius: 11.5e-3,
            lip_inner_radius: 5.5e-3,
            n_lip_samples: 72,
            wall_azimuths: [0.0, 90.0, 180.0, 270.0].map(f64::to_radians),
            seal_gap_tolerance: 1.0e-3,
            lip_stiffness: 1.5 / (72.0 * 0.5e-3),
            seal_probe_radius: 4.6e-3,
            n_seal_probes: 3,
            conform_travel: 8.0e-3,
            max_conform_angle: 29.5_f64.to_radians(),
        }
    }
}

impl CupGeometry {
    pub fn validate(&self) -> Result<()> {
        let finite_pos = |v: f64| v.is_finite() && v > 0.0;
        if !(finite_pos(self.lip_inner_radius) && self.lip_inner_radius < self.lip_outer_radius)
            || !self.lip_outer_radius.is_finite()
        {
            return Err(invalid(
                "lip_inner_radius must be positive and below lip_outer_radius",
            ));
        }
        if self.n_lip_samples == 0 || !self.n_lip_samples.is_multiple_of(4) {
            return Err(invalid("n_lip_samples must be a positive multiple of 4"));
        }
        for k in 1..4 {
            let step = self.wall_azimuths[k] - self.wall_azimuths[k - 1];
            if (step - FRAC_PI_2).abs() > 1e-9 {
                return Err(invalid(
                    "wall_azimuths must be ascending and 90 degrees apart",
                ));
            }
        }
        if !self.wall_azimuths[0].is_finite() {
            return Err(invalid("wall_azimuths must be finite"));
        }
        if !(self.seal_gap_tolerance.is_finite() && self.seal_gap_tolerance >= 0.0) {
            return Err(invalid("seal_gap_tolerance must be >= 0"));
        }
        if !finite_pos(self.lip_stiffness) {
            return Err(invalid("lip_stiffness must be positive"));
        }
        if !(finite_pos(self.seal_probe_radius) && self.seal_probe_radius <= self.lip_inner_radius)
        {
            return Err(invalid(
                "seal_probe_radius must be in (0, lip_inner_radius]",
            ));
        }
        if self.n_seal_probes == 0 {
            return Err(invalid("n_seal_probes must be at least 1"));
        }
        if !(self.conform_travel.is_finite() && self.conform_travel >= 0.0) {
            return Err(invalid("conform_travel must be >= 0"));
        }
        if !(self.max_conform_angle > 0.0 && self.max_conform_angle <= FRAC_PI_2) {
            return Err(invalid("max_conform_angle must be in (0, 90] degrees"));
        }
        Ok(())
    }

    /// Seal ring radius, midway across the lip.
    pub fn mid_radius(&self) -> f64 {
        0.5 * (self.lip_outer_radius + self.lip_inner_radius)
    }

    /// Azimuth of lip sample `k`. Samples sit half a spacing off the walls so
    /// every chamber owns exactly `n / 4` of them.
    pub fn sample_azimuth(&self, k: usize) -> f64 {
        let spacing = TAU / self.n_lip_samples as f64;
        math::wrap_tau(self.wall_azimuths[0] + (k as f64 + 0.5) * spacing)
    }

    pub fn probe_radii(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.n_seal_probes;
        let (r0, r1) = (self.seal_probe_radius, self.lip_inner_radius);
        (0..n).map(move |i| {
            if n == 1 {
                r1
            } else {
                r0 + (r1 - r0) * i as f64 / (n - 1) as f64
            }
        })
    }

    fn interior_probe_radii(&self) -> [f64; 2] {
        [
            self.seal_probe_radius / 3.0,
            2.0 * self.seal_probe_radius / 3.0,
        ]
    }
}

/// Lip mid-circle points in the world frame.
pub fn sample_lip(pose: &Pose, geom: &CupGeometry) -> Vec<Vec3> {
    let r = geom.mid_radius();
    (0..geom.n_lip_samples)
        .map(|k| {
            let az = geom.sample_azimuth(k);
            pose.transform_point(&Vec3::new(r * math::cos(az), r * math::sin(az), 0.0))
        })
        .collect()
}

/// Chamber (1..=4) owning tool-frame azimuth `azimuth`.
///
/// Chamber 1 spans the sector from the wall at `wall_azimuths[3]` to the wall
/// at `wall_azimuths[0]`, and ids increase clockwise. A query exactly on a
/// wall goes to the lower-indexed neighbour.
pub fn chamber_of(azimuth: f64, geom: &CupGeometry) -> u8 {
    let rel = math::wrap_tau(azimuth - geom.wall_azimuths[0]);
    if rel == 0.0 {
        return 1;
    }
    let sector = ((rel / FRAC_PI_2) as usize).min(3);
    4 - sector as u8
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeightField {
    pub nx: usize,
    pub ny: usize,
    /// Square cell edge (m). Cell `(i, j)` covers `[i, i+1) x [j, j+1)` cells.
    pub cell: f64,
    /// Flat cell tops, row-major with `x` fastest: `heights[j * nx + i]`.
    pub heights: Vec<f64>,
    /// Through-hole mask, same layout as `heights`; empty means no holes.
    pub holes: Vec<bool>,
    /// Cells that carry load but pass air; same layout, empty means none.
    pub porous: Vec<bool>,
}

enum Column {
    Solid(f64, bool),
    Hole,
    Outside,
}

impl HeightField {
    pub fn flat(nx: usize, ny: usize, cell: f64, height: f64) -> Self {
        HeightField {
            nx,
            ny,
            cell,
            heights: alloc::vec![height; nx * ny],
            holes: Vec::new(),
            porous: Vec::new(),
        }
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cell.is_finite() && self.cell > 0.0) {
            return Err(invalid("height-field cell size must be positive"));
        }
        if self.nx == 0 || self.ny == 0 || self.heights.len() != self.nx * self.ny {
            return Err(invalid("height-field heights must have nx * ny entries"));
        }
        if !self.holes.is_empty() && self.holes.len() != self.heights.len() {
            return Err(invalid("height-field hole mask must match heights"));
        }
        if !self.porous.is_empty() && self.porous.len() != self.heights.len() {
            return Err(invalid("height-field porous mask must match heights"));
        }
        if self.heights.iter().any(|h| !h.is_finite()) {
            return Err(invalid("height-field heights must be finite"));
        }
        if (0..self.heights.len()).all(|k| self.is_hole(k)) {
            return Err(invalid("height-field has no solid cell"));
        }
        Ok(())
    }

    fn is_hole(&self, k: usize) -> bool {
        self.holes.get(k).copied().unwrap_or(false)
    }

    fn column(&self, ix: i64, iy: i64) -> Column {
        if ix < 0 || iy < 0 || ix >= self.nx as i64 || iy >= self.ny as i64 {
            return Column::Outside;
        }
        let k = self.index(ix as usize, iy as usize);
        if self.is_hole(k) {
            Column::Hole
        } else {
            Column::Solid(
                self.heights[k],
                self.porous.get(k).copied().unwrap_or(false),
            )
        }
    }

    fn solid_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (k, h) in self.heights.iter().enumerate() {
            if !self.is_hole(k) {
                lo = lo.min(*h);
                hi = hi.max(*h);
            }
        }
        (lo, hi)
    }

    /// Grid traversal over flat-topped columns with vertical side walls.
    fn cast(&self, o: &Vec3, d: &Vec3, (lo, hi): (f64, f64)) -> Hit {
        let floor = lo - 1e-9;
        let t_start = (hi + 1e-6 - o.z) / d.z;
        let t_end = (floor - o.z) / d.z;
        let p0 = o + d * t_start;
        let c = self.cell;
        let mut ix = math::floor(p0.x / c) as i64;
        let mut iy = math::floor(p0.y / c) as i64;
        let axis = |dc: f64, p: f64, i: i64| -> (i64, f64, f64) {
            if dc > 0.0 {
                (1, t_start + ((i + 1) as f64 * c - p) / dc, c / dc)
            } else if dc < 0.0 {
                (-1, t_start + (i as f64 * c - p) / dc, -c / dc)
            } else {
                (0, f64::INFINITY, f64::INFINITY)
            }
        };
        let (sx, mut next_x, dtx) = axis(d.x, p0.x, ix);
        let (sy, mut next_y, dty) = axis(d.y, p0.y, iy);
        let mut t = t_start;
        let mut entry_normal = Vec3::z();
        let max_steps = 4 * (self.nx + self.ny) + 16;
        for _ in 0..max_steps {
            let t_exit = next_x.min(next_y).min(t_end);
            match self.column(ix, iy) {
                Column::Solid(h, porous) => {
                    if o.z + t * d.z < h {
                        return Hit::Surface {
                            t,
                            normal: entry_normal,
                            porous,
                        };
                    }
                    let t_top = (h - o.z) / d.z;
                    if t_top <= t_exit {
                        return Hit::Surface {
                            t: t_top,
                            normal: Vec3::z(),
                            porous,
                        };
                    }
                }
                Column::Hole if t_exit >= t_end => return Hit::Hole,
                _ if t_exit >= t_end => return Hit::Void,
                _ => {}
            }
            if next_x < next_y {
                t = next_x;
                ix += sx;
                next_x += dtx;
                entry_normal = Vec3::new(-sx as f64, 0.0, 0.0);
            } else {
                t = next_y;
                iy += sy;
                next_y += dty;
                entry_normal = Vec3::new(0.0, -sy as f64, 0.0);
            }
        }
        Hit::Void
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SceneKind {
    /// Plate with top at `z = 0` covering `{p : p . w <= edge_distance}`,
    /// `w = (-sin yaw, cos yaw, 0)`. At `yaw = 0` the plate covers `-y`.
    HalfPlaneEdge {
        edge_distance: f64,
        yaw: f64,
    },
    /// Sphere of `radius` with its apex at the local origin.
    Dome {
        radius: f64,
    },
    FlatPlate,
    HeightField(HeightField),
}

/// An analytic surface placed in the world by `pose`. The kind is fixed at
/// construction so per-cast summaries can be cached.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    kind: SceneKind,
    pub pose: Pose,
    /// Height range of solid cells, for height fields.
    solid_range: (f64, f64),
    through_flow: bool,
}

/// Result of casting one ray into a scene. `t` is the signed distance along
/// the ray; negative means the origin is already inside the solid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Hit {
    /// `porous` surfaces support the lip but do not hold a seal.
    Surface { t: f64, normal: Vec3, porous: bool },
    /// Ray fell through a through-hole.
    Hole,
    /// Ray left the modelled geometry.
    Void,
}

const PARALLEL_EPS: f64 = 1e-12;

impl Scene {
    pub fn new(kind: SceneKind, pose: Pose) -> Self {
        let (solid_range, through_flow) = match &kind {
            SceneKind::HeightField(hf) => (
                hf.solid_range(),
                hf.holes.iter().chain(&hf.porous).any(|h| *h),
            ),
            _ => ((0.0, 0.0), false),
        };
        Scene {
            kind,
            pose,
            solid_range,
            through_flow,
        }
    }

    pub fn kind(&self) -> &SceneKind {
        &self.kind
    }

    pub fn local(kind: SceneKind) -> Self {
        Scene::new(kind, Pose::identity())
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            SceneKind::Dome { radius } if !(radius.is_finite() && *radius > 0.0) => {
                Err(invalid("dome radius must be positive"))
            }
            SceneKind::HalfPlaneEdge { edge_distance, yaw }
                if !(edge_distance.is_finite() && yaw.is_finite()) =>
            {
                Err(invalid("half-plane parameters must be finite"))
            }
            SceneKind::HeightField(hf) => hf.validate(),
            _ => Ok(()),
        }
    }

    /// Whether any part of the surface passes air (through-holes or porous cells).
    pub fn has_through_flow(&self) -> bool {
        self.through_flow
    }

    /// Casts from `origin` along `dir` (world frame). Normals are returned in
    /// the world frame.
    pub fn cast(&self, origin: &Vec3, dir: &Vec3) -> Result<Hit> {
        let inv = self.pose.inverse();
        let o = inv.transform_point(origin);
        let d = inv.transform_vector(dir);
        let hit = match &self.kind {
            SceneKind::FlatPlate => {
                plane_guard(&d)?;
                if d.z > 0.0 {
                    Hit::Void
                } else {
                    Hit::Surface {
                        t: -o.z / d.z,
                        normal: Vec3::z(),
                        porous: false,
                    }
                }
            }
            SceneKind::HalfPlaneEdge { edge_distance, yaw } => {
                plane_guard(&d)?;
                if d.z > 0.0 {
                    Hit::Void
                } else {
                    let w = Vec3::new(-math::sin(*yaw), math::cos(*yaw), 0.0);
                    let t_top = -o.z / d.z;
                    let q = o + d * t_top;
                    let dw = d.dot(&w);
                    if q.dot(&w) <= *edge_distance {
                        Hit::Surface {
                            t: t_top,
                            normal: Vec3::z(),
                            porous: false,
                        }
                    } else if dw < 0.0 {
                        Hit::Surface {
                            t: (edge_distance - o.dot(&w)) / dw,
                            normal: w,
                            porous: false,
                        }
                    } else {
                        Hit::Void
                    }
                }
            }
            SceneKind::Dome { radius } => {
                let rel = o + Vec3::new(0.0, 0.0, *radius);
                let b = d.dot(&rel) / d.norm_squared();
                let c = (rel.norm_squared() - radius * radius) / d.norm_squared();
                let disc = b * b - c;
                if disc < 0.0 {
                    Hit::Void
                } else {
                    let t = -b - math::sqrt(disc);
                    if c > 0.0 && t < 0.0 {
                        Hit::Void
                    } else {
                        Hit::Surface {
                            t,
                            normal: (rel + d * t) / *radius,
                            porous: false,
                        }
                    }
                }
            }
            SceneKind::HeightField(hf) => {
                plane_guard(&d)?;
                if d.z > 0.0 {
                    Hit::Void
                } else {
                    hf.cast(&o, &d, self.solid_range)
                }
            }
        };
        Ok(match hit {
            Hit::Surface { t, normal, porous } => Hit::Surface {
                t,
                normal: self.pose.transform_vector(&normal),
                porous,
            },
            other => other,
        })
    }
}

fn plane_guard(d: &Vec3) -> Result<()> {
    if d.z.abs() < PARALLEL_EPS {
        Err(Error::DegenerateScene(
            "cup axis parallel to the surface plane",
        ))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipSample {
    pub azimuth: f64,
    pub chamber: u8,
    /// Clearance to the surface, clamped at 0. Infinite when a probe misses.
    pub gap: f64,
    pub penetration: f64,
    pub sealed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactState {
    pub samples: Vec<LipSample>,
    /// Unsealed share of each chamber's lip arc, chamber 1 first.
    pub exposed_fraction: [f64; 4],
    pub normal_force: f64,
    /// Leak through a lifted, unloaded seal; zero in contact scenes.
    pub horizontal_leak: [f64; 4],
}

impl ContactState {
    /// A state carrying only chamber exposures, for driving the network directly.
    pub fn from_exposure(exposed_fraction: [f64; 4]) -> Self {
        ContactState {
            samples: Vec::new(),
            exposed_fraction,
            normal_force: 0.0,
            horizontal_leak: [0.0; 4],
        }
    }

    pub fn total_exposure(&self) -> f64 {
        self.exposed_fraction.iter().sum()
    }

    pub fn any_contact(&self) -> bool {
        self.samples.iter().any(|s| s.gap.is_finite())
    }
}

pub fn contact_state(pose: &Pose, scene: &Scene, geom: &CupGeometry) -> Result<ContactState> {
    let axis = pose.z_axis();
    let down = -axis;
    let n = geom.n_lip_samples;
    let leaky = scene.has_through_flow();
    let mut clearance = Vec::with_capacity(n);
    let mut steep = Vec::with_capacity(n);
    let mut holed = Vec::with_capacity(n);
    for k in 0..n {
        let az = geom.sample_azimuth(k);
        let (c, s) = (math::cos(az), math::sin(az));
        let probe = |r: f64| pose.transform_point(&Vec3::new(r * c, r * s, 0.0));
        let mut worst = f64::NEG_INFINITY;
        let mut slope = 0.0_f64;
        let mut through = false;
        for r in geom.probe_radii() {
            match scene.cast(&probe(r), &down)? {
                Hit::Surface { t, normal, porous } => {
                    worst = worst.max(t);
                    slope = slope.max(math::angle_between(&normal, &axis));
                    through |= porous;
                }
                Hit::Hole | Hit::Void => worst = f64::INFINITY,
            }
        }
        for r in geom.interior_probe_radii().into_iter().filter(|_| leaky) {
            through |= matches!(
                scene.cast(&probe(r), &down)?,
                Hit::Hole | Hit::Surface { porous: true, .. }
            );
        }
        clearance.push(worst);
        steep.push(slope > geom.max_conform_angle);
        holed.push(through);
    }

    let mut sealed: Vec<bool> = clearance
        .iter()
        .map(|c| *c <= geom.seal_gap_tolerance)
        .collect();
    let finite = clearance.iter().filter(|c| c.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
        (lo.min(*c), hi.max(*c))
    });
    if sealed.iter().any(|s| *s) && hi - lo <= geom.conform_travel {
        for (s, c) in sealed.iter_mut().zip(&clearance) {
            *s = c.is_finite();
        }
    }

    let mut samples = Vec::with_capacity(n);
    let mut open = [0usize; 4];
    let mut total = [0usize; 4];
    let mut force = 0.0;
    for k in 0..n {
        let az = geom.sample_azimuth(k);
        let chamber = chamber_of(az, geom);
        let c = clearance[k];
        let ok = sealed[k] && !steep[k] && !holed[k];
        let penetration = if c.is_finite() { (-c).max(0.0) } else { 0.0 };
        force += geom.lip_stiffness * penetration;
        let idx = chamber as usize - 1;
        total[idx] += 1;
        if !ok {
            open[idx] += 1;
        }
        samples.push(LipSample {
            azimuth: az,
            chamber,
            gap: c.max(0.0),
            penetration,
            sealed: ok,
        });
    }
    let mut exposed_fraction = [0.0; 4];
    for i in 0..4 {
        if total[i] > 0 {
            exposed_fraction[i] = open[i] as f64 / total[i] as f64;
        }
    }
    Ok(ContactState {
        samples,
        exposed_fraction,
        normal_force: force,
        horizontal_leak: [0.0; 4],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::se3::{rot_exp, Rotation};
    use core::f64::consts::PI;
    use proptest::prelude::*;

    fn at_height(z: f64) -> Pose {
        Pose::from_translation(Vec3::new(0.0, 0.0, z))
    }

    fn edge(delta: f64, yaw: f64, g: &CupGeometry) -> Scene {
        Scene::local(SceneKind::HalfPlaneEdge {
            edge_distance: g.lip_outer_radius - delta,
            yaw,
        })
    }

    #[test]
    fn default_geometry_is_valid() {
        CupGeometry::default().validate().unwrap();
    }

    #[test]
    fn validation_rejects_bad_geometry() {
        let g = CupGeometry {
            n_lip_samples: 70,
            ..CupGeometry::default()
        };
        assert!(g.validate().is_err());
        let g = CupGeometry {
            lip_inner_radius: 12e-3,
            ..CupGeometry::default()
        };
        assert!(g.validate().is_err());
        let mut g = CupGeometry::default();
        g.wall_azimuths[2] += 0.1;
        assert!(g.validate().is_err());
    }

    #[test]
    fn sample_lip_mid_circle() {
        let g = CupGeometry::default();
        let pts = sample_lip(&Pose::identity(), &g);
        assert_eq!(pts.len(), 72);
        for p in &pts {
            assert!((p.norm() - 8.5e-3).abs() < 1e-15);
        }
        let a0 = math::atan2(pts[0].y, pts[0].x);
        let a1 = math::atan2(pts[1].y, pts[1].x);
        assert!(((a1 - a0).to_degrees() - 5.0).abs() < 1e-9);

        let shift = Vec3::new(0.1, -0.2, 0.3);
        let moved = sample_lip(&Pose::from_translation(shift), &g);
        for (a, b) in pts.iter().zip(&moved) {
            assert!((b - a - shift).norm() < 1e-15);
        }
    }

    #[test]
    fn four_samples_sit_between_walls() {
        let g = CupGeometry {
            n_lip_samples: 4,
            ..CupGeometry::default()
        };
        let az: Vec<f64> = (0..4).map(|k| g.sample_azimuth(k).to_degrees()).collect();
        for (a, want) in az.iter().zip([45.0, 135.0, 225.0, 315.0]) {
            assert!((a - want).abs() < 1e-9);
        }
        let ids: Vec<u8> = (0..4)
            .map(|k| chamber_of(g.sample_azimuth(k), &g))
            .collect();
        assert_eq!(ids, [4, 3, 2, 1]);
    }

    #[test]
    fn wall_ties_go_to_lower_chamber() {
        let g = CupGeometry::default();
        assert_eq!(chamber_of(0.0, &g), 1);
        assert_eq!(chamber_of(FRAC_PI_2, &g), 3);
        assert_eq!(chamber_of(PI, &g), 2);
        assert_eq!(chamber_of(1.5 * PI, &g), 1);
        assert_eq!(chamber_of(2.5 * FRAC_PI_2, &g), 2);
    }

    #[test]
    fn chamber_one_faces_plus_x_minus_y() {
        let g = CupGeometry::default();
        assert_eq!(chamber_of(-PI / 4.0 + TAU, &g), 1);
        assert_eq!(chamber_of(PI / 4.0, &g), 4);
    }

    #[test]
    fn flat_plate_at_touch_height_seals() {
        let g = CupGeometry::default();
        let s = Scene::local(SceneKind::FlatPlate);
        let c = contact_state(&at_height(0.0), &s, &g).unwrap();
        assert_eq!(c.exposed_fraction, [0.0; 4]);
        assert!(c.normal_force.abs() < 1e-12);
    }

    #[test]
    fn half_millimetre_press_gives_approach_force() {
        let g = CupGeometry::default();
        let s = Scene::local(SceneKind::FlatPlate);
        let c = contact_state(&at_height(-0.5e-3), &s, &g).unwrap();
        assert!((c.normal_force - 1.5).abs() < 1e-9);
        assert!(c
            .samples
            .iter()
            .all(|s| s.penetration > 0.0 && s.gap == 0.0));
    }

    #[test]
    fn lifted_cup_is_open() {
        let g = CupGeometry::default();
        let s = Scene::local(SceneKind::FlatPlate);
        let c = contact_state(&at_height(2e-3), &s, &g).unwrap();
        assert_eq!(c.exposed_fraction, [1.0; 4]);
    }

    #[test]
    fn parallel_axis_is_degenerate() {
        let g = CupGeometry::default();
        let side = Pose::new(rot_exp(&Vec3::x(), FRAC_PI_2), Vec3::zeros());
        for kind in [
            SceneKind::FlatPlate,
            SceneKind::HalfPlaneEdge {
                edge_distance: 0.0,
                yaw: 0.0,
            },
        ] {
            let err = contact_state(&side, &Scene::local(kind), &g).unwrap_err();
            assert!(matches!(err, Error::DegenerateScene(_)));
        }
    }

    /// Brute-force exposure over a dense lip, mapped back to sectors by
    /// geometry alone.
    fn dense_exposure(pose: &Pose, scene: &Scene, g: &CupGeometry) -> [f64; 4] {
        let dense = CupGeometry {
            n_lip_samples: 3600,
            ..g.clone()
        };
        contact_state(pose, scene, &dense).unwrap().exposed_fraction
    }

    #[test]
    fn half_overhang_splits_sides() {
        let g = CupGeometry::default();
        // Edge line through the cup centre; plate under -y.
        let s = edge(g.lip_outer_radius, 0.0, &g);
        let c = contact_state(&at_height(-0.5e-3), &s, &g).unwrap();
        // Chambers 1 and 2 sit on -y, 3 and 4 on +y.
        assert_eq!(c.exposed_fraction, [0.0, 0.0, 1.0, 1.0]);
        let oracle = dense_exposure(&at_height(-0.5e-3), &s, &g);
        let width = 4.0 / 72.0;
        for i in 0..4 {
            assert!((c.exposed_fraction[i] - oracle[i]).abs() <= width);
        }
    }

    #[test]
    fn edge_matches_dense_oracle() {
        let g = CupGeometry::default();
        let width = 4.0 / 72.0;
        for delta in [7.0e-3, 9.5e-3, 11.0e-3, 13.0e-3, 15.0e-3] {
            for yaw_deg in [0.0, 20.0, 45.0, 110.0, 300.0] {
                let s = edge(delta, f64::to_radians(yaw_deg), &g);
                let pose = at_height(-0.5e-3);
                let c = contact_state(&pose, &s, &g).unwrap();
                let oracle = dense_exposure(&pose, &s, &g);
                for i in 0..4 {
                    assert!(
                        (c.exposed_fraction[i] - oracle[i]).abs() <= width,
                        "delta {delta} yaw {yaw_deg} chamber {}",
                        i + 1
                    );
                }
            }
        }
    }

    #[test]
    fn dome_tilt_exposes_high_side_more() {
        let g = CupGeometry::default();
        let scene = Scene::local(SceneKind::Dome { radius: 15e-3 });
        let gamma = 45_f64.to_radians();
        let r = Rotation::about_x(gamma);
        // Lip plane 0.5 mm into the apex along the tilted axis.
        let pose = Pose::new(r, r.column(2) * -0.5e-3);
        let c = contact_state(&pose, &scene, &g).unwrap();
        let oracle = dense_exposure(&pose, &scene, &g);
        for i in 0..4 {
            assert!((c.exposed_fraction[i] - oracle[i]).abs() <= 4.0 / 72.0);
        }
        // +y (chambers 3, 4) lifts away from the dome under a +x tilt.
        let high = c.exposed_fraction[2] + c.exposed_fraction[3];
        let low = c.exposed_fraction[0] + c.exposed_fraction[1];
        assert!(high >= low);
        assert!(c.exposed_fraction.iter().all(|f| *f > 0.0));
    }

    #[test]
    fn dome_apex_press_is_symmetric() {
        let g = CupGeometry::default();
        let scene = Scene::local(SceneKind::Dome { radius: 40e-3 });
        let c = contact_state(&at_height(-0.5e-3), &scene, &g).unwrap();
        let f = c.exposed_fraction;
        assert!(f.iter().all(|x| *x == f[0]));
    }

    fn grid_with_hole(hole_at: Option<(usize, usize)>) -> HeightField {
        let mut hf = HeightField::flat(40, 40, 1e-3, 0.0);
        if let Some((i, j)) = hole_at {
            hf.holes = alloc::vec![false; 1600];
            for dj in 0..3 {
                for di in 0..3 {
                    let k = hf.index(i + di, j + dj);
                    hf.holes[k] = true;
                }
            }
        }
        hf
    }

    fn centred(hf: HeightField) -> Scene {
        Scene::new(
            SceneKind::HeightField(hf),
            Pose::from_translation(Vec3::new(-20e-3, -20e-3, 0.0)),
        )
    }

    #[test]
    fn height_field_flat_matches_plate() {
        let g = CupGeometry::default();
        let hf = centred(grid_with_hole(None));
        let plate = Scene::local(SceneKind::FlatPlate);
        for z in [1e-3, 0.0, -0.3e-3, -0.5e-3] {
            let a = contact_state(&at_height(z), &hf, &g).unwrap();
            let b = contact_state(&at_height(z), &plate, &g).unwrap();
            assert_eq!(a.exposed_fraction, b.exposed_fraction);
            assert!((a.normal_force - b.normal_force).abs() < 1e-9);
        }
    }

    #[test]
    fn through_hole_under_one_side_leaks_there() {
        let g = CupGeometry::default();
        // Cells 22..25 on x span +2..+5 mm: under the +x interior probes.
        let hf = centred(grid_with_hole(Some((22, 19))));
        let c = contact_state(&at_height(-0.5e-3), &hf, &g).unwrap();
        let f = c.exposed_fraction;
        assert!(f[0] > 0.0 && f[3] > 0.0, "{f:?}");
        assert_eq!((f[1], f[2]), (0.0, 0.0));
    }

    #[test]
    fn height_field_side_wall_is_steep() {
        // A 3 mm step under the -y half; cup tilted so rays lean into the wall.
        let mut hf = HeightField::flat(40, 40, 1e-3, 0.0);
        for j in 20..40 {
            for i in 0..40 {
                let k = hf.index(i, j);
                hf.heights[k] = -3e-3;
            }
        }
        let scene = centred(hf);
        let o = Vec3::new(0.0, 0.5e-3, 1e-3);
        let dir = Vec3::new(0.0, -0.5, -1.0).normalize();
        match scene.cast(&o, &dir).unwrap() {
            Hit::Surface { normal, .. } => assert!(normal.z.abs() < 1e-12),
            h => panic!("{h:?}"),
        }
    }

    #[test]
    fn dome_ray_cases() {
        let s = Scene::local(SceneKind::Dome { radius: 10e-3 });
        let down = -Vec3::z();
        match s.cast(&Vec3::new(0.0, 0.0, 2e-3), &down).unwrap() {
            Hit::Surface { t, normal, .. } => {
                assert!((t - 2e-3).abs() < 1e-15);
                assert!((normal - Vec3::z()).norm() < 1e-12);
            }
            h => panic!("{h:?}"),
        }
        match s.cast(&Vec3::new(0.0, 0.0, -1e-3), &down).unwrap() {
            Hit::Surface { t, .. } => assert!((t + 1e-3).abs() < 1e-15),
            h => panic!("{h:?}"),
        }
        assert_eq!(
            s.cast(&Vec3::new(11e-3, 0.0, 0.0), &down).unwrap(),
            Hit::Void
        );
        assert_eq!(
            s.cast(&Vec3::new(0.0, 0.0, -30e-3), &down).unwrap(),
            Hit::Void
        );
    }

    #[test]
    fn porous_patch_supports_but_leaks() {
        let g = CupGeometry::default();
        let mut hf = grid_with_hole(None);
        hf.porous = alloc::vec![true; 1600];
        let c = contact_state(&at_height(-0.5e-3), &centred(hf), &g).unwrap();
        assert_eq!(c.exposed_fraction, [1.0; 4]);
        assert!((c.normal_force - 1.5).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn rotating_query_advances_chamber(az in 0.0..TAU) {
            let g = CupGeometry::default();
            let rel = az % FRAC_PI_2;
            prop_assume!(rel > 1e-9 && rel < FRAC_PI_2 - 1e-9);
            let a = chamber_of(az, &g);
            let b = chamber_of(math::wrap_tau(az - FRAC_PI_2), &g);
            prop_assert_eq!(b, a % 4 + 1);
        }

        #[test]
        fn edge_yaw_symmetry(delta_mm in 0u32..24, yaw_step in 0u32..72) {
            let g = CupGeometry::default();
            let yaw = f64::from(yaw_step * 5).to_radians();
            let pose = at_height(-0.5e-3);
            let delta = f64::from(delta_mm) * 1e-3;
            let a = contact_state(&pose, &edge(delta, yaw, &g), &g).unwrap();
            let b = contact_state(&pose, &edge(delta, yaw + FRAC_PI_2, &g), &g).unwrap();
            for i in 0..4 {
                prop_assert_eq!(a.exposed_fraction[i], b.exposed_fraction[(i + 3) % 4]);
            }
        }

        #[test]
        fn edge_exposure_monotone(d0 in 0.0..23e-3f64, dd in 0.0..5e-3f64, yaw in 0.0..TAU) {
            let g = CupGeometry::default();
            let pose = at_height(-0.5e-3);
            let a = contact_state(&pose, &edge(d0, yaw, &g), &g).unwrap();
            let b = contact_state(&pose, &edge(d0 + dd, yaw, &g), &g).unwrap();
            prop_assert!(b.total_exposure() >= a.total_exposure());
        }

        #[test]
        fn plate_force_monotone(z in -2e-3..2e-3f64, dz in 0.0..1e-3f64) {
            let g = CupGeometry::default();
            let s = Scene::local(SceneKind::FlatPlate);
            let hi = contact_state(&at_height(z), &s, &g).unwrap().normal_force;
            let lo = contact_state(&at_height(z - dz), &s, &g).unwrap().normal_force;
            prop_assert!(lo >= hi);
            prop_assert!(lo - hi <= 72.0 * g.lip_stiffness * dz + 1e-12);
        }

        #[test]
        fn doubling_samples_is_stable(delta in 0.0..23e-3f64, yaw in 0.0..TAU) {
            let g = CupGeometry::default();
            let g2 = CupGeometry { n_lip_samples: 144, ..g.clone() };
            let pose = at_height(-0.5e-3);
            let s = edge(delta, yaw, &g);
            let a = contact_state(&pose, &s, &g).unwrap();
            let b = contact_state(&pose, &s, &g2).unwrap();
            for i in 0..4 {
                prop_assert!((a.exposed_fraction[i] - b.exposed_fraction[i]).abs() <= 4.0 / 72.0 + 1e-12);
            }
        }

        #[test]
        fn samples_never_gap_and_press(z in -2e-3..2e-3f64, gamma in 0.0..0.8f64) {
            let g = CupGeometry::default();
            let r = Rotation::about_x(gamma);
            let pose = Pose::new(r, r.column(2) * z);
            let s = Scene::local(SceneKind::Dome { radius: 20e-3 });
            let c = contact_state(&pose, &s, &g).unwrap();
            for smp in &c.samples {
                prop_assert!(!(smp.gap > g.seal_gap_tolerance && smp.penetration > 0.0));
            }
            prop_assert!(c.normal_force >= 0.0);
            prop_assert!(c.exposed_fraction.iter().all(|f| (0.0..=1.0).contains(f)));
        }
    }
}
