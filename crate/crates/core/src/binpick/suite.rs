//! Synthetic bin contents: object specifications, their true geometry, and
//! the geometry a camera-based planner would see.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::cupmodel::{HeightField, Scene, SceneKind};
use crate::error::{invalid, Result};
use crate::se3::{rot_exp, Pose, Rotation, Vec3};

/// Cell size used when rasterizing objects into height fields (m).
pub const RASTER_CELL: f64 = 0.5e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct Circle {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub center: [f64; 2],
    pub size: [f64; 2],
    /// Height above the surrounding surface (m).
    pub height: f64,
}

/// True top-surface geometry in the object frame, centred on the origin.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Box {
        size: [f64; 2],
    },
    Dome {
        radius: f64,
    },
    /// Flat top pierced by through-holes.
    Perforated {
        size: [f64; 2],
        holes: Vec<Circle>,
    },
    /// Load-bearing but air-permeable top, such as bristles or foam.
    Porous {
        size: [f64; 2],
    },
    /// Board with raised components and plated through-holes.
    Board {
        size: [f64; 2],
        components: Vec<Block>,
        vias: Vec<Circle>,
    },
}

/// How the planner's view of an object departs from the truth.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VisualError {
    /// Transparent extension of a box along object `+x` (m).
    pub lid: f64,
    /// Tilt added to the planner's normal estimate (rad).
    pub normal_bias: f64,
    /// Height of the perceived surface above the real one (m).
    pub phantom_height: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectSpec {
    pub name: String,
    pub shape: Shape,
    /// Top surface (or apex) height above the bin floor (m).
    pub height: f64,
    /// kg.
    pub mass: f64,
    /// Centre of mass in the object frame, horizontal (m).
    pub com_offset: [f64; 2],
    pub visual: VisualError,
    /// Slides along with the cup instead of staying put.
    pub loose: bool,
}

impl ObjectSpec {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        let size_ok = |s: &[f64; 2]| pos(s[0]) && pos(s[1]);
        let ok = match &self.shape {
            Shape::Box { size } | Shape::Porous { size } => size_ok(size),
            Shape::Dome { radius } => pos(*radius),
            Shape::Perforated { size, holes } => {
                size_ok(size) && holes.iter().all(|h| pos(h.radius))
            }
            Shape::Board {
                size,
                components,
                vias,
            } => {
                size_ok(size)
                    && components
                        .iter()
                        .all(|c| size_ok(&c.size) && c.height.is_finite())
                    && vias.iter().all(|v| pos(v.radius))
            }
        };
        if !ok {
            return Err(invalid(alloc::format!(
                "object {}: invalid shape",
                self.name
            )));
        }
        if !(pos(self.mass) && self.height.is_finite()) {
            return Err(invalid(alloc::format!(
                "object {}: invalid mass or height",
                self.name
            )));
        }
        if !(self.visual.lid >= 0.0 && self.visual.phantom_height >= 0.0) {
            return Err(invalid(alloc::format!(
                "object {}: invalid visual error",
                self.name
            )));
        }
        if self.visual.lid > 0.0 && !matches!(self.shape, Shape::Box { .. }) {
            return Err(invalid(alloc::format!(
                "object {}: lid needs a box",
                self.name
            )));
        }
        Ok(())
    }

    /// Horizontal extent of the object top in the object frame, or the
    /// dome footprint.
    pub fn half_extent(&self) -> [f64; 2] {
        match &self.shape {
            Shape::Box { size }
            | Shape::Porous { size }
            | Shape::Perforated { size, .. }
            | Shape::Board { size, .. } => [size[0] / 2.0, size[1] / 2.0],
            Shape::Dome { radius } => [*radius, *radius],
        }
    }
}

fn cells(len: f64) -> usize {
    crate::math::round(len / RASTER_CELL).max(1.0) as usize
}

fn cell_center(hf: &HeightField, i: usize, j: usize) -> [f64; 2] {
    let half_x = hf.nx as f64 * hf.cell / 2.0;
    let half_y = hf.ny as f64 * hf.cell / 2.0;
    [
        (i as f64 + 0.5) * hf.cell - half_x,
        (j as f64 + 0.5) * hf.cell - half_y,
    ]
}

fn in_circle(p: [f64; 2], c: &Circle) -> bool {
    let (dx, dy) = (p[0] - c.center[0], p[1] - c.center[1]);
    dx * dx + dy * dy <= c.radius * c.radius
}

fn in_block(p: [f64; 2], b: &Block) -> bool {
    (p[0] - b.center[0]).abs() <= b.size[0] / 2.0 && (p[1] - b.center[1]).abs() <= b.size[1] / 2.0
}

/// Height field of a rectangular top centred on the origin, with `carve`
/// deciding per cell centre: `(height offset, hole, porous)`.
fn raster(size: [f64; 2], carve: impl Fn([f64; 2]) -> (f64, bool, bool)) -> HeightField {
    let mut hf = HeightField::flat(cells(size[0]), cells(size[1]), RASTER_CELL, 0.0);
    let n = hf.nx * hf.ny;
    let mut holes = alloc::vec![false; n];
    let mut porous = alloc::vec![false; n];
    for j in 0..hf.ny {
        for i in 0..hf.nx {
            let k = hf.index(i, j);
            let (h, hole, leak) = carve(cell_center(&hf, i, j));
            hf.heights[k] = h;
            holes[k] = hole;
            porous[k] = leak;
        }
    }
    if holes.iter().any(|h| *h) {
        hf.holes = holes;
    }
    if porous.iter().any(|h| *h) {
        hf.porous = porous;
    }
    hf
}

/// Local scene of a rectangular height field, with its grid centred on the
/// object origin and the top at `z = 0`.
fn centred_field(hf: HeightField, object: &Pose) -> Scene {
    let corner = Vec3::new(
        -(hf.nx as f64) * hf.cell / 2.0,
        -(hf.ny as f64) * hf.cell / 2.0,
        0.0,
    );
    Scene::new(
        SceneKind::HeightField(hf),
        object.compose(&Pose::from_translation(corner)),
    )
}

/// True geometry of `spec` placed at `object` (top surface at the pose origin).
pub fn true_scene(spec: &ObjectSpec, object: &Pose) -> Scene {
    match &spec.shape {
        Shape::Box { size } => centred_field(raster(*size, |_| (0.0, false, false)), object),
        Shape::Dome { radius } => Scene::new(SceneKind::Dome { radius: *radius }, *object),
        Shape::Perforated { size, holes } => centred_field(
            raster(*size, |p| {
                (0.0, holes.iter().any(|h| in_circle(p, h)), false)
            }),
            object,
        ),
        Shape::Porous { size } => centred_field(raster(*size, |_| (0.0, false, true)), object),
        Shape::Board {
            size,
            components,
            vias,
        } => centred_field(
            raster(*size, |p| {
                let h = components
                    .iter()
                    .filter(|b| in_block(p, b))
                    .fold(0.0_f64, |m, b| m.max(b.height));
                (h, vias.iter().any(|v| in_circle(p, v)), false)
            }),
            object,
        ),
    }
}

/// What the planner perceives: holes and porosity are invisible, a
/// transparent lid extends a box, and a phantom surface floats above.
pub fn visual_scene(spec: &ObjectSpec, object: &Pose) -> Scene {
    let lifted = object.compose(&Pose::from_translation(Vec3::new(
        0.0,
        0.0,
        spec.visual.phantom_height,
    )));
    match &spec.shape {
        Shape::Box { size } if spec.visual.lid > 0.0 => {
            let lid = spec.visual.lid;
            let shifted = lifted.compose(&Pose::from_translation(Vec3::new(lid / 2.0, 0.0, 0.0)));
            centred_field(
                raster([size[0] + lid, size[1]], |_| (0.0, false, false)),
                &shifted,
            )
        }
        Shape::Box { size } | Shape::Perforated { size, .. } | Shape::Porous { size } => {
            centred_field(raster(*size, |_| (0.0, false, false)), &lifted)
        }
        Shape::Dome { radius } => Scene::new(SceneKind::Dome { radius: *radius }, lifted),
        Shape::Board {
            size, components, ..
        } => centred_field(
            raster(*size, |p| {
                let h = components
                    .iter()
                    .filter(|b| in_block(p, b))
                    .fold(0.0_f64, |m, b| m.max(b.height));
                (h, false, false)
            }),
            &lifted,
        ),
    }
}

/// Centre of the visual object in the object frame.
pub fn visual_center(spec: &ObjectSpec) -> [f64; 2] {
    [spec.visual.lid / 2.0, 0.0]
}

/// One object as placed in a bin for a repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct BinObject {
    pub index: usize,
    pub spec: ObjectSpec,
    pub pose: Pose,
    pub scene: Scene,
    pub visual: Scene,
    /// Horizontal axis about which the planner's normal is biased (world).
    pub bias_axis: Vec3,
}

impl BinObject {
    pub fn place(index: usize, spec: &ObjectSpec, x: f64, y: f64, yaw: f64) -> Self {
        let pose = Pose::new(Rotation::about_z(yaw), Vec3::new(x, y, spec.height));
        BinObject {
            index,
            spec: spec.clone(),
            pose,
            scene: true_scene(spec, &pose),
            visual: visual_scene(spec, &pose),
            bias_axis: pose.rotation.column(0),
        }
    }

    /// World-frame centre of mass.
    pub fn center_of_mass(&self) -> Vec3 {
        let c = self.spec.com_offset;
        self.pose.transform_point(&Vec3::new(c[0], c[1], 0.0))
    }

    /// Slides the object (true geometry only) by a world-frame offset.
    pub fn shift(&mut self, delta: &Vec3) {
        self.pose.translation += delta;
        self.scene.pose.translation += delta;
    }

    /// Applies the planner's normal bias to a visual normal.
    pub fn biased_normal(&self, normal: &Vec3) -> Vec3 {
        if self.spec.visual.normal_bias == 0.0 {
            *normal
        } else {
            rot_exp(&self.bias_axis, self.spec.visual.normal_bias).apply(normal)
        }
    }
}

/// Places the suite on a shuffled square grid with random yaw.
pub fn layout<R: Rng + ?Sized>(suite: &[ObjectSpec], spacing: f64, rng: &mut R) -> Vec<BinObject> {
    let n = suite.len();
    let side = (1..).find(|s| s * s >= n).unwrap_or(1);
    let mut slots: Vec<usize> = (0..side * side).collect();
    slots.shuffle(rng);
    suite
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let slot = slots[i];
            let x = (slot % side) as f64 * spacing;
            let y = (slot / side) as f64 * spacing;
            let yaw = rng.random_range(0.0..core::f64::consts::TAU);
            BinObject::place(i, spec, x, y, yaw)
        })
        .collect()
}

fn object(name: &str, shape: Shape) -> ObjectSpec {
    ObjectSpec {
        name: name.into(),
        shape,
        height: 0.04,
        mass: 0.1,
        com_offset: [0.0, 0.0],
        visual: VisualError::default(),
        loose: false,
    }
}

/// Nineteen objects mixing easy flat tops with the adversarial cases the
/// haptic search is meant to recover from.
pub fn default_suite() -> Vec<ObjectSpec> {
    let mut v = Vec::new();
    for (i, s) in [[0.05, 0.04], [0.045, 0.045], [0.06, 0.035]]
        .iter()
        .enumerate()
    {
        v.push(object(
            &alloc::format!("flat-box-{}", i + 1),
            Shape::Box { size: *s },
        ));
    }

    let mut heavy = object("heavy-box", Shape::Box { size: [0.10, 0.04] });
    heavy.mass = 0.19;
    heavy.com_offset = [0.014, 0.0];
    v.push(heavy);

    for (i, (w, lid)) in [
        (0.016, 0.016),
        (0.015, 0.018),
        (0.017, 0.014),
        (0.016, 0.020),
    ]
    .iter()
    .enumerate()
    {
        let mut o = object(
            &alloc::format!("clear-lid-{}", i + 1),
            Shape::Box { size: [*w, 0.018] },
        );
        o.visual.lid = *lid;
        v.push(o);
    }

    for (i, (r, bias)) in [
        (0.015, 25.0),
        (0.015, 30.0),
        (0.02, 28.0),
        (0.04, 30.0),
        (0.02, 22.0),
    ]
    .iter()
    .enumerate()
    {
        let mut o = object(
            &alloc::format!("dome-{}", i + 1),
            Shape::Dome { radius: *r },
        );
        o.visual.normal_bias = f64::to_radians(*bias);
        v.push(o);
    }

    for (i, c) in [[0.0, 0.0], [1.5e-3, -1.0e-3]].iter().enumerate() {
        v.push(object(
            &alloc::format!("perforated-{}", i + 1),
            Shape::Perforated {
                size: [0.04, 0.04],
                holes: alloc::vec![Circle {
                    center: *c,
                    radius: 2.5e-3,
                }],
            },
        ));
    }

    v.push(object("bristle", Shape::Porous { size: [0.04, 0.04] }));

    let mut ghost = object("ghost", Shape::Box { size: [0.04, 0.04] });
    ghost.visual.phantom_height = 0.08;
    v.push(ghost);

    v.push(object(
        "board",
        Shape::Board {
            size: [0.06, 0.05],
            components: alloc::vec![
                Block {
                    center: [-0.012, 0.008],
                    size: [0.014, 0.014],
                    height: 1.5e-3,
                },
                Block {
                    center: [0.014, -0.010],
                    size: [0.014, 0.014],
                    height: 1.5e-3,
                },
                Block {
                    center: [0.010, 0.014],
                    size: [0.008, 0.004],
                    height: 1.0e-3,
                },
            ],
            vias: alloc::vec![
                Circle {
                    center: [0.0, 0.0],
                    radius: 0.5e-3,
                },
                Circle {
                    center: [0.004, 0.003],
                    radius: 0.5e-3,
                },
                Circle {
                    center: [-0.003, -0.006],
                    radius: 0.5e-3,
                },
            ],
        },
    ));

    let mut loose = object(
        "loose-lid",
        Shape::Box {
            size: [0.016, 0.02],
        },
    );
    loose.visual.lid = 0.016;
    loose.loose = true;
    loose.mass = 0.03;
    v.push(loose);

    v
}
