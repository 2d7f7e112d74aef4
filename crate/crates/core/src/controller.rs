//! Stateless haptic search law.
//!
//! Chamber pressures are averaged into four cardinal readings aligned with
//! the tool axes (E = -y, N = -x, W = +y, S = +x). The lateral direction
//! points toward the better-sealed side and the rotation axis is the lateral
//! direction turned by -90 degrees about `z_tool`. `alpha` blends the two.
//!
//! `z_tool` points away from the surface, so the increment rotates by
//! `-dtheta` about the rotation axis: that is the sense that lowers the
//! leaking side of the lip onto the surface.

use crate::error::{invalid, Result};
use crate::pneumatics::ChamberPressures;
use crate::se3::{compose_transform, rot_exp, Pose, Rotation, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerParams {
    /// Lateral step (m).
    pub dl: f64,
    /// Rotational step (rad).
    pub dtheta: f64,
    /// Axial step (m).
    pub dz: f64,
    pub alpha: f64,
    pub f_min: f64,
    pub f_max: f64,
    pub p_threshold: f64,
    pub p_success: f64,
    pub control_rate: f64,
}

impl Default for ControllerParams {
    fn default() -> Self {
        ControllerParams {
            dl: 0.5e-3,
            dtheta: 0.5_f64.to_radians(),
            dz: 0.1e-3,
            alpha: 0.25,
            f_min: 1.5,
            f_max: 2.0,
            p_threshold: 10.0,
            p_success: 15_000.0,
            control_rate: 125.0,
        }
    }
}

impl ControllerParams {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !(pos(self.dl) && pos(self.dtheta) && pos(self.dz)) {
            return Err(invalid("dl, dtheta and dz must be positive"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(invalid("alpha must be in [0, 1]"));
        }
        if !(self.f_min.is_finite() && self.f_max.is_finite() && self.f_min < self.f_max) {
            return Err(invalid("f_min must be below f_max"));
        }
        if !(self.p_threshold >= 0.0 && pos(self.p_success) && pos(self.control_rate)) {
            return Err(invalid(
                "p_threshold, p_success and control_rate out of range",
            ));
        }
        Ok(())
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        ControllerParams {
            alpha,
            ..self.clone()
        }
    }

    pub fn period(&self) -> f64 {
        1.0 / self.control_rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CardinalPressures {
    pub p_e: f64,
    pub p_n: f64,
    pub p_w: f64,
    pub p_s: f64,
    pub dp_we: f64,
    pub dp_ns: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionCommand {
    /// Increment in the tool frame about the lip-plane centre.
    pub transform: Pose,
    pub v_hat: Option<Vec3>,
    pub omega_hat: Option<Vec3>,
    pub dlz: f64,
}

pub fn cardinalize(p: &ChamberPressures) -> CardinalPressures {
    let [p1, p2, p3, p4] = p.0;
    let p_e = (p1 + p2) / 2.0;
    let p_n = (p2 + p3) / 2.0;
    let p_w = (p3 + p4) / 2.0;
    let p_s = (p4 + p1) / 2.0;
    CardinalPressures {
        p_e,
        p_n,
        p_w,
        p_s,
        dp_we: p_w - p_e,
        dp_ns: p_n - p_s,
    }
}

fn planar_unit(x: f64, y: f64) -> Option<Vec3> {
    let v = Vec3::new(x, y, 0.0);
    let n = v.norm();
    if n == 0.0 || !n.is_finite() {
        None
    } else {
        Some(v / n)
    }
}

/// `true` when every chamber is below the threshold and no direction exists.
pub fn indistinguishable(p: &ChamberPressures, params: &ControllerParams) -> bool {
    p.all_below(params.p_threshold)
}

pub fn lateral_direction(
    c: &CardinalPressures,
    p: &ChamberPressures,
    params: &ControllerParams,
) -> Option<Vec3> {
    if indistinguishable(p, params) {
        return None;
    }
    planar_unit(-c.dp_ns, c.dp_we)
}

pub fn rotation_axis(
    c: &CardinalPressures,
    p: &ChamberPressures,
    params: &ControllerParams,
) -> Option<Vec3> {
    if indistinguishable(p, params) {
        return None;
    }
    planar_unit(-c.dp_we, -c.dp_ns)
}

/// Signed axial step; negative moves toward the surface.
pub fn axial_step(f_z: f64, params: &ControllerParams) -> f64 {
    if f_z <= params.f_min {
        -params.dz
    } else if f_z >= params.f_max {
        params.dz
    } else {
        0.0
    }
}

pub fn step(p: &ChamberPressures, f_z: f64, params: &ControllerParams) -> MotionCommand {
    let c = cardinalize(p);
    let v_hat = lateral_direction(&c, p, params);
    let omega_hat = rotation_axis(&c, p, params);
    let dtheta_a = params.dtheta * params.alpha;
    let dl_a = params.dl * (1.0 - params.alpha);
    let (dlx, dly) = match v_hat {
        Some(v) => (dl_a * v.x, dl_a * v.y),
        None => (0.0, 0.0),
    };
    let r = match omega_hat {
        Some(w) => rot_exp(&w, -dtheta_a),
        None => Rotation::identity(),
    };
    let dlz = axial_step(f_z, params);
    MotionCommand {
        transform: compose_transform(r, dlx, dly, dlz),
        v_hat,
        omega_hat,
        dlz,
    }
}

pub fn grasp_success(p: &ChamberPressures, params: &ControllerParams) -> bool {
    p.mean() > params.p_success
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cupmodel::{contact_state, CupGeometry, Scene, SceneKind};
    use crate::pneumatics::{solve_network, PumpModel};
    use proptest::prelude::*;

    fn cp(p: [f64; 4]) -> ChamberPressures {
        ChamberPressures(p)
    }

    #[test]
    fn cardinal_examples() {
        let c = cardinalize(&cp([7.0; 4]));
        assert_eq!((c.p_e, c.p_n, c.p_w, c.p_s), (7.0, 7.0, 7.0, 7.0));
        assert_eq!((c.dp_we, c.dp_ns), (0.0, 0.0));

        let c = cardinalize(&cp([0.0, 0.0, 1000.0, 1000.0]));
        assert_eq!((c.p_w, c.p_e, c.dp_we, c.dp_ns), (1000.0, 0.0, 1000.0, 0.0));

        let c = cardinalize(&cp([100.0, 200.0, 300.0, 400.0]));
        assert_eq!((c.p_e, c.p_n, c.p_w, c.p_s), (150.0, 250.0, 350.0, 250.0));
        assert_eq!((c.dp_we, c.dp_ns), (200.0, 0.0));
    }

    #[test]
    fn direction_examples() {
        let params = ControllerParams::default();
        let low = cp([9.0; 4]);
        assert_eq!(lateral_direction(&cardinalize(&low), &low, &params), None);
        assert_eq!(rotation_axis(&cardinalize(&low), &low, &params), None);

        let p = cp([20_000.0; 4]);
        let mut c = cardinalize(&p);
        c.dp_we = 1000.0;
        assert_eq!(lateral_direction(&c, &p, &params), Some(Vec3::y()));
        assert_eq!(rotation_axis(&c, &p, &params), Some(-Vec3::x()));

        c.dp_we = 0.0;
        c.dp_ns = 3.0;
        assert_eq!(lateral_direction(&c, &p, &params), Some(-Vec3::x()));

        let c = cardinalize(&p);
        assert_eq!(rotation_axis(&c, &p, &params), None);
        assert_eq!(lateral_direction(&c, &p, &params), None);
    }

    #[test]
    fn axial_examples() {
        let params = ControllerParams::default();
        assert_eq!(axial_step(1.0, &params), -0.1e-3);
        assert_eq!(axial_step(1.5, &params), -0.1e-3);
        assert_eq!(axial_step(1.75, &params), 0.0);
        assert_eq!(axial_step(2.0, &params), 0.1e-3);
        assert_eq!(axial_step(2.5, &params), 0.1e-3);
    }

    #[test]
    fn success_examples() {
        let params = ControllerParams::default();
        assert!(grasp_success(&cp([20e3; 4]), &params));
        assert!(!grasp_success(&cp([15e3; 4]), &params));
        assert!(!grasp_success(&cp([60e3, 0.0, 0.0, 0.0]), &params));
    }

    #[test]
    fn alpha_endpoints() {
        let p = cp([100.0, 900.0, 400.0, 50.0]);
        let lat = step(&p, 1.75, &ControllerParams::default().with_alpha(0.0));
        assert_eq!(lat.transform.rotation, Rotation::identity());
        assert!((lat.transform.translation.norm() - 0.5e-3).abs() < 1e-15);

        let rot = step(&p, 1.75, &ControllerParams::default().with_alpha(1.0));
        assert_eq!(rot.transform.translation, Vec3::zeros());
        assert!((rot.transform.rotation.angle() - 0.5_f64.to_radians()).abs() < 1e-12);
    }

    #[test]
    fn thresholded_step_is_pure_descent() {
        let cmd = step(&cp([3.0; 4]), 1.0, &ControllerParams::default());
        assert_eq!(cmd.transform.rotation, Rotation::identity());
        assert_eq!(cmd.transform.translation, Vec3::new(0.0, 0.0, -0.1e-3));
        assert!(cmd.v_hat.is_none() && cmd.omega_hat.is_none());
    }

    #[test]
    fn default_params_valid_and_bad_band_rejected() {
        ControllerParams::default().validate().unwrap();
        let bad = ControllerParams {
            f_min: 2.0,
            f_max: 2.0,
            ..ControllerParams::default()
        };
        assert!(bad.validate().is_err());
    }

    /// A cup tilted on a dome so the east (-y) side lifts: one rotational
    /// step must lower that side and reduce its exposure.
    #[test]
    fn rotation_closes_east_gap_on_dome() {
        let g = CupGeometry::default();
        let pump = PumpModel::default();
        let scene = Scene::local(SceneKind::Dome { radius: 15e-3 });
        let params = ControllerParams::default().with_alpha(1.0);
        let east =
            |c: &crate::cupmodel::ContactState| c.exposed_fraction[0] + c.exposed_fraction[1];

        let tilt = Rotation::about_x(-12_f64.to_radians());
        let mut pose = Pose::new(tilt, tilt.column(2) * -0.5e-3);
        let before = contact_state(&pose, &scene, &g).unwrap();
        let p = solve_network(&before, &pump).unwrap();
        let c = cardinalize(&p);
        assert!(c.dp_we > 0.0, "east should leak more: {c:?}");

        let mut last = east(&before);
        let start = last;
        for _ in 0..8 {
            let st = contact_state(&pose, &scene, &g).unwrap();
            let p = solve_network(&st, &pump).unwrap();
            let cmd = step(&p, 1.75, &params);
            pose = pose.compose(&cmd.transform);
            let now = east(&contact_state(&pose, &scene, &g).unwrap());
            assert!(now <= last);
            last = now;
        }
        assert!(last < start);
    }

    fn quad() -> impl Strategy<Value = [f64; 4]> {
        proptest::array::uniform4(0.0..85_000.0f64)
    }

    proptest! {
        #[test]
        fn directions_are_orthogonal(p in quad()) {
            let params = ControllerParams::default();
            let p = cp(p);
            let c = cardinalize(&p);
            if let (Some(v), Some(w)) = (lateral_direction(&c, &p, &params), rotation_axis(&c, &p, &params)) {
                prop_assert!(v.dot(&w).abs() <= 1e-12);
                prop_assert_eq!(v.z, 0.0);
                prop_assert!((w.norm() - 1.0).abs() <= 1e-12);
            }
        }

        #[test]
        fn scale_and_offset_invariance(p in quad(), k in 0.01..100.0f64, off in 0.0..1000.0f64) {
            let params = ControllerParams::default();
            let p0 = cp(p);
            prop_assume!(!indistinguishable(&p0, &params));
            let v0 = lateral_direction(&cardinalize(&p0), &p0, &params);
            let w0 = rotation_axis(&cardinalize(&p0), &p0, &params);
            for q in [cp(p.map(|x| x * k)), cp(p.map(|x| x + off))] {
                prop_assume!(!indistinguishable(&q, &params));
                let v = lateral_direction(&cardinalize(&q), &q, &params);
                let w = rotation_axis(&cardinalize(&q), &q, &params);
                match (v0, v) {
                    (Some(a), Some(b)) => prop_assert!((a - b).norm() <= 1e-9),
                    (None, None) => {}
                    _ => {}
                }
                if let (Some(a), Some(b)) = (w0, w) {
                    prop_assert!((a - b).norm() <= 1e-9);
                }
            }
        }

        #[test]
        fn step_bounds(p in quad(), f in 0.0..4.0f64, alpha in 0.0..=1.0f64) {
            let params = ControllerParams::default().with_alpha(alpha);
            let cmd = step(&cp(p), f, &params);
            let t = cmd.transform.translation.norm();
            prop_assert!(t <= params.dl * (1.0 - alpha) + params.dz + 1e-15);
            prop_assert!(cmd.transform.rotation.angle() <= params.dtheta * alpha + 1e-12);
        }

        #[test]
        fn step_is_deterministic_and_continuous(p in quad(), f in 0.0..4.0f64, alpha in 0.0..0.999f64) {
            let params = ControllerParams::default().with_alpha(alpha);
            let a = step(&cp(p), f, &params);
            prop_assert_eq!(a, step(&cp(p), f, &params));
            let b = step(&cp(p), f, &params.with_alpha(alpha + 1e-9));
            prop_assert!((a.transform.translation - b.transform.translation).norm() < 1e-10);
            prop_assert!((a.transform.rotation.matrix() - b.transform.rotation.matrix()).norm() < 1e-10);
        }
    }
}
