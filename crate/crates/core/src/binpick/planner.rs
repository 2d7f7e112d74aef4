//! Stand-in grasp planner.
//!
//! Candidate sites sit on a small grid over each object's perceived top.
//! Quality rewards perceived flatness under the cup footprint and closeness
//! to the perceived centre, plus a per-call jitter emulating re-imaging.
//! The returned pose carries Gaussian position and normal errors.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use super::suite::{visual_center, BinObject};
use crate::cupmodel::Hit;
use crate::error::{invalid, Result};
use crate::math;
use crate::se3::{rot_exp, Rotation, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerParams {
    /// Candidates kept per planning call.
    pub n_candidates: usize,
    /// Sites per object along each axis.
    pub grid: usize,
    pub grid_spacing: f64,
    pub position_sigma: f64,
    /// Per-axis normal error (rad).
    pub normal_sigma: f64,
    pub quality_jitter: f64,
    /// Radius of the perceived footprint checked for flatness (m).
    pub footprint_radius: f64,
    /// Deviation from the tangent plane that scores `1/e` flatness (m).
    pub flatness_scale: f64,
    /// Quality lost at the outermost grid site.
    pub centrality_weight: f64,
}

impl Default for PlannerParams {
    fn default() -> Self {
        PlannerParams {
            n_candidates: 30,
            grid: 3,
            grid_spacing: 6e-3,
            position_sigma: 3e-3,
            normal_sigma: 10_f64.to_radians(),
            quality_jitter: 0.02,
            footprint_radius: 5.5e-3,
            flatness_scale: 1e-3,
            centrality_weight: 0.25,
        }
    }
}

impl PlannerParams {
    pub fn validate(&self) -> Result<()> {
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if self.n_candidates == 0 || self.grid == 0 {
            return Err(invalid(
                "planner needs at least one candidate and grid site",
            ));
        }
        if !(nonneg(self.grid_spacing)
            && nonneg(self.position_sigma)
            && nonneg(self.normal_sigma)
            && nonneg(self.quality_jitter)
            && nonneg(self.footprint_radius)
            && self.flatness_scale > 0.0
            && (0.0..=1.0).contains(&self.centrality_weight))
        {
            return Err(invalid("planner parameters out of range"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraspCandidate {
    pub object: usize,
    /// Perceived surface point (world).
    pub point: Vec3,
    /// Perceived outward normal, including any systematic bias.
    pub normal: Vec3,
    pub quality: f64,
    /// Injected position error (world).
    pub position_error: Vec3,
    /// Injected normal error angle (rad).
    pub normal_error: f64,
    /// Commanded grasp point: `point + position_error`.
    pub target: Vec3,
    /// Commanded approach normal.
    pub approach_normal: Vec3,
    /// Tool roll about the approach normal (rad).
    pub tool_yaw: f64,
}

impl GraspCandidate {
    /// Tool orientation with `z_tool` along the approach normal.
    pub fn tool_rotation(&self) -> Rotation {
        let base = Rotation::from_z_axis(&self.approach_normal, &Vec3::x());
        base * Rotation::about_z(self.tool_yaw)
    }
}

/// Recent failure points; candidates near any of them are skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct FailureMemory {
    points: Vec<Vec3>,
    capacity: usize,
    radius: f64,
}

impl FailureMemory {
    pub fn new(capacity: usize, radius: f64) -> Self {
        FailureMemory {
            points: Vec::new(),
            capacity,
            radius,
        }
    }

    /// Stores a failure, evicting the oldest beyond capacity.
    pub fn record(&mut self, p: Vec3) {
        if self.capacity == 0 {
            return;
        }
        if self.points.len() == self.capacity {
            self.points.remove(0);
        }
        self.points.push(p);
    }

    pub fn clear(&mut self) {
        self.points.clear();
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn excludes(&self, p: &Vec3) -> bool {
        self.points.iter().any(|f| (f - p).norm() < self.radius)
    }
}

impl Default for FailureMemory {
    fn default() -> Self {
        FailureMemory::new(3, 0.03)
    }
}

/// A candidate site with its static perception, before jitter.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Site {
    object: usize,
    point: Vec3,
    normal: Vec3,
    base_quality: f64,
}

/// Perception of the bin, cached across planning calls.
#[derive(Debug, Clone, PartialEq)]
pub struct Planner {
    params: PlannerParams,
    sites: Vec<Site>,
}

const CAST_HEIGHT: f64 = 1.0;

fn cast_down(obj: &BinObject, x: f64, y: f64) -> Option<(Vec3, Vec3)> {
    let o = Vec3::new(x, y, CAST_HEIGHT);
    match obj.visual.cast(&o, &-Vec3::z()).ok()? {
        Hit::Surface { t, normal, .. } => Some((o - Vec3::z() * t, normal)),
        _ => None,
    }
}

fn flatness(obj: &BinObject, point: &Vec3, normal: &Vec3, params: &PlannerParams) -> f64 {
    let mut worst = 0.0_f64;
    for k in 0..12 {
        let a = f64::from(k) * core::f64::consts::TAU / 12.0;
        let x = point.x + params.footprint_radius * math::cos(a);
        let y = point.y + params.footprint_radius * math::sin(a);
        match cast_down(obj, x, y) {
            Some((q, _)) => worst = worst.max((q - point).dot(normal).abs()),
            None => return 0.0,
        }
    }
    libm::exp(-worst / params.flatness_scale)
}

impl Planner {
    pub fn new(objects: &[BinObject], params: &PlannerParams) -> Self {
        let mut sites = Vec::new();
        let g = params.grid;
        let mid = (g as f64 - 1.0) / 2.0;
        let r_max = (mid * params.grid_spacing) * core::f64::consts::SQRT_2;
        for obj in objects {
            let c = visual_center(&obj.spec);
            for b in 0..g {
                for a in 0..g {
                    let lx = c[0] + (a as f64 - mid) * params.grid_spacing;
                    let ly = c[1] + (b as f64 - mid) * params.grid_spacing;
                    let w = obj.pose.transform_point(&Vec3::new(lx, ly, 0.0));
                    let Some((point, normal)) = cast_down(obj, w.x, w.y) else {
                        continue;
                    };
                    let (da, db) = (a as f64 - mid, b as f64 - mid);
                    let r = math::sqrt(da * da + db * db) * params.grid_spacing;
                    let central = if r_max > 0.0 {
                        1.0 - params.centrality_weight * r / r_max
                    } else {
                        1.0
                    };
                    sites.push(Site {
                        object: obj.index,
                        point,
                        normal: obj.biased_normal(&normal),
                        base_quality: flatness(obj, &point, &normal, params) * central,
                    });
                }
            }
        }
        Planner {
            params: params.clone(),
            sites,
        }
    }

    /// Highest-quality candidate on a remaining object outside the failure
    /// memory, or `None` when every listed candidate is excluded.
    pub fn plan<R: Rng + ?Sized>(
        &self,
        remaining: &[bool],
        memory: &FailureMemory,
        rng: &mut R,
    ) -> Option<GraspCandidate> {
        let p = &self.params;
        let mut scored: Vec<(f64, usize)> = Vec::new();
        for (i, s) in self.sites.iter().enumerate() {
            let jitter: f64 = rng.sample::<f64, _>(StandardNormal) * p.quality_jitter;
            if remaining.get(s.object).copied().unwrap_or(false) {
                scored.push(((s.base_quality + jitter).clamp(0.0, 1.0), i));
            }
        }
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        scored.truncate(p.n_candidates);
        let (quality, idx) = scored
            .into_iter()
            .find(|(_, i)| !memory.excludes(&self.sites[*i].point))?;
        let site = self.sites[idx];

        let ex: f64 = rng.sample(StandardNormal);
        let ey: f64 = rng.sample(StandardNormal);
        let position_error = Vec3::new(ex, ey, 0.0) * p.position_sigma;
        let nx: f64 = rng.sample(StandardNormal);
        let ny: f64 = rng.sample(StandardNormal);
        let tilt = Vec3::new(nx, ny, 0.0) * p.normal_sigma;
        let normal_error = tilt.norm();
        let frame = Rotation::from_z_axis(&site.normal, &Vec3::x());
        let approach_normal = if normal_error > 0.0 {
            rot_exp(&frame.apply(&(tilt / normal_error)), normal_error).apply(&site.normal)
        } else {
            site.normal
        };
        let tool_yaw = rng.random_range(0.0..core::f64::consts::TAU);
        Some(GraspCandidate {
            object: site.object,
            point: site.point,
            normal: site.normal,
            quality,
            position_error,
            normal_error,
            target: site.point + position_error,
            approach_normal,
            tool_yaw,
        })
    }
}
