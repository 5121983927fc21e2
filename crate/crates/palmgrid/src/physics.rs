//! Simplified deterministic physics: PD-servo joints integrated per axis,
//! a single free cube, and penalty contacts between hand proxies, cube,
//! and the palm support surface.
//!
//! The model trades fidelity for speed and reproducibility. Joints are
//! decoupled second-order systems with an effective inertia precomputed
//! from the link masses; the cube is the only full rigid body. Contacts
//! are spring-damper penalties with a Coulomb cap on tangential force.
//! All integration is semi-implicit Euler at a fixed substep, and the
//! default constants keep the cube's contact dynamics inside the discrete
//! stability region even with many simultaneous contacts.

use serde::{Deserialize, Serialize};

use crate::handspec::{ActuatorParams, HandModel, JointLimits};
use crate::kinematics::{FkSolver, FkState, JointVector};
use crate::math::{integrate_orientation, Transform, UnitQuat, Vec3};

/// Penalty-contact constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactParams {
    /// Normal spring stiffness (N/m).
    pub stiffness: f64,
    /// Normal damping (N·s/m).
    pub normal_damping: f64,
    /// Tangential viscous coefficient (N·s/m); the Coulomb cap rides on
    /// top of it.
    pub tangential_damping: f64,
    /// Coulomb friction coefficient.
    pub friction: f64,
    /// 0 kills rebound entirely, 1 disables normal damping.
    pub restitution: f64,
}

impl Default for ContactParams {
    fn default() -> Self {
        Self {
            stiffness: 1000.0,
            normal_damping: 2.0,
            tangential_damping: 2.0,
            friction: 1.0,
            restitution: 0.0,
        }
    }
}

/// The manipulated object: a uniform cube.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubeParams {
    pub mass: f64,
    /// Half the edge length (m).
    pub half_extent: f64,
}

impl Default for CubeParams {
    fn default() -> Self {
        Self {
            mass: 0.095,
            half_extent: 0.0325,
        }
    }
}

impl CubeParams {
    /// Moment of inertia about any axis through the center (uniform cube,
    /// so the tensor is isotropic).
    pub fn inertia(&self) -> f64 {
        let edge = 2.0 * self.half_extent;
        self.mass * edge * edge / 6.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicsConfig {
    /// Integration substep (s).
    pub dt: f64,
    /// Substeps per control step; control period = dt * substeps.
    pub substeps_per_control: usize,
    /// Gravity magnitude (m/s²), acting along -z.
    pub gravity: f64,
    pub contact: ContactParams,
    pub cube: CubeParams,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self {
            dt: 1.0 / 480.0,
            substeps_per_control: 16,
            gravity: 9.81,
            contact: ContactParams::default(),
            cube: CubeParams::default(),
        }
    }
}

impl PhysicsConfig {
    /// Seconds advanced by one control step.
    pub fn control_dt(&self) -> f64 {
        self.dt * self.substeps_per_control as f64
    }
}

/// Free-cube state, world frame.
#[derive(Debug, Clone, Copy)]
pub struct CubeState {
    pub position: Vec3,
    pub orientation: UnitQuat,
    pub linear_velocity: Vec3,
    pub angular_velocity: Vec3,
}

impl CubeState {
    pub fn at_rest(position: Vec3, orientation: UnitQuat) -> Self {
        Self {
            position,
            orientation,
            linear_velocity: Vec3::zeros(),
            angular_velocity: Vec3::zeros(),
        }
    }

    /// Velocity of a world point rigidly attached to the cube.
    pub fn point_velocity(&self, point: &Vec3) -> Vec3 {
        self.linear_velocity + self.angular_velocity.cross(&(point - self.position))
    }

    pub fn corners(&self, half_extent: f64) -> [Vec3; 8] {
        let h = half_extent;
        let mut out = [Vec3::zeros(); 8];
        for (i, corner) in out.iter_mut().enumerate() {
            let local = Vec3::new(
                if i & 1 == 0 { -h } else { h },
                if i & 2 == 0 { -h } else { h },
                if i & 4 == 0 { -h } else { h },
            );
            *corner = self.position + self.orientation * local;
        }
        out
    }
}

/// Joint and cube state together; everything `Simulator::step` advances.
#[derive(Debug, Clone)]
pub struct SimState {
    pub q: JointVector,
    pub qdot: JointVector,
    pub cube: CubeState,
}

/// One resolved contact, reported for inspection.
#[derive(Debug, Clone, Copy)]
pub struct Contact {
    pub point: Vec3,
    /// Unit normal pointing out of the cube, toward the other body.
    pub normal: Vec3,
    /// Total force applied to the cube at `point`.
    pub force: Vec3,
    pub penetration: f64,
    /// Owning link of the hand proxy, or `None` for the support surface.
    pub link: Option<usize>,
}

/// Aggregated contact loads for one instant.
#[derive(Debug, Clone)]
pub struct ContactForces {
    pub cube_force: Vec3,
    pub cube_torque: Vec3,
    /// Reaction torque felt by each joint.
    pub joint_torques: JointVector,
    pub contacts: Vec<Contact>,
}

/// PD servo torque for one joint, with dry friction and the effort cap.
pub fn actuator_torque(
    actuator: &ActuatorParams,
    limits: &JointLimits,
    q: f64,
    qdot: f64,
    target: f64,
) -> f64 {
    let pd = actuator.stiffness * (target - q) - actuator.damping * qdot;
    let friction = if qdot == 0.0 {
        0.0
    } else {
        -actuator.friction * qdot.signum()
    };
    (pd + friction).clamp(-limits.effort, limits.effort)
}

/// Per-joint inertia about the joint axis, from the zero pose.
///
/// Link mass is lumped at its collision proxies (or the link origin when
/// it has none) and every descendant of the joint contributes. The
/// actuator armature is added on top, so the result is strictly positive.
pub fn effective_joint_inertia(model: &HandModel, solver: &FkSolver) -> Vec<f64> {
    let zero = vec![0.0; model.dof()];
    let state = solver.solve(&zero, &zero);

    let mut inertia = vec![0.0; model.dof()];
    for (li, link) in model.links.iter().enumerate() {
        let points: Vec<Vec3> = if link.collision_proxies.is_empty() {
            vec![state.link_poses[li].translation]
        } else {
            link.collision_proxies
                .iter()
                .map(|p| state.link_poses[li].apply(&p.center))
                .collect()
        };
        let point_mass = link.mass / points.len() as f64;
        for &ji in solver.ancestor_joints(li) {
            let origin = state.joint_origins[ji];
            let axis = state.joint_axes[ji];
            for p in &points {
                let r = p - origin;
                let d2 = (r - axis * r.dot(&axis)).norm_squared();
                inertia[ji] += point_mass * d2;
            }
        }
    }
    for (i, j) in model.joints.iter().enumerate() {
        inertia[i] += j.actuator.armature;
    }
    inertia
}

#[derive(Debug, Clone)]
pub struct Simulator {
    solver: FkSolver,
    config: PhysicsConfig,
    inertia: Vec<f64>,
    actuators: Vec<ActuatorParams>,
    limits: Vec<JointLimits>,
    palm: Transform,
    palm_extent: [f64; 4],
}

impl Simulator {
    /// Build a simulator for a validated model.
    pub fn new(model: &HandModel, config: PhysicsConfig) -> Self {
        let solver = FkSolver::new(model);
        let inertia = effective_joint_inertia(model, &solver);
        let palm = *solver.palm_frame();
        Self {
            inertia,
            actuators: model.joints.iter().map(|j| j.actuator).collect(),
            limits: model.joints.iter().map(|j| j.limits).collect(),
            palm,
            palm_extent: model.palm_surface.extent,
            solver,
            config,
        }
    }

    pub fn config(&self) -> &PhysicsConfig {
        &self.config
    }

    pub fn solver(&self) -> &FkSolver {
        &self.solver
    }

    pub fn dof(&self) -> usize {
        self.solver.dof()
    }

    /// The grid/task frame (z up off the support surface).
    pub fn palm_frame(&self) -> &Transform {
        &self.palm
    }

    pub fn initial_state(&self, q: JointVector, cube: CubeState) -> SimState {
        assert_eq!(q.len(), self.dof(), "pose length != dof");
        SimState {
            qdot: vec![0.0; q.len()],
            q,
            cube,
        }
    }

    /// All contact loads at one instant.
    pub fn contact_forces(&self, fk: &FkState, cube: &CubeState) -> ContactForces {
        let p = &self.config.contact;
        let half = self.config.cube.half_extent;
        let damp = p.normal_damping * (1.0 - p.restitution);

        let mut out = ContactForces {
            cube_force: Vec3::zeros(),
            cube_torque: Vec3::zeros(),
            joint_torques: vec![0.0; self.dof()],
            contacts: Vec::new(),
        };

        // Spring-damper contact; `normal` points out of the cube toward
        // the other body, and the returned force acts on that body.
        let resolve = |point: Vec3,
                           normal: Vec3,
                           penetration: f64,
                           v_other: Vec3,
                           out: &mut ContactForces|
         -> Option<Vec3> {
            let v_rel = v_other - cube.point_velocity(&point);
            let closing = -v_rel.dot(&normal);
            let f_n = (p.stiffness * penetration + damp * closing).max(0.0);
            if f_n == 0.0 && penetration <= 0.0 {
                return None;
            }
            let v_t = v_rel - normal * v_rel.dot(&normal);
            let mut f_t = v_t * p.tangential_damping;
            let cap = p.friction * f_n;
            let mag = f_t.norm();
            if mag > cap {
                f_t *= cap / mag;
            }
            // Force on the whatever touches the cube; the cube gets the
            // opposite.
            let on_other = normal * f_n - f_t;
            let on_cube = -on_other;
            out.cube_force += on_cube;
            out.cube_torque += (point - cube.position).cross(&on_cube);
            Some(on_other)
        };

        // Hand proxies against the cube.
        for (i, proxy) in self.solver.proxies().iter().enumerate() {
            let center = fk.proxy_centers[i];
            let Some((point, normal, penetration)) =
                sphere_cube_overlap(&center, proxy.radius, cube, half)
            else {
                continue;
            };
            let v_proxy = fk.point_velocity(proxy.link, &point);
            if let Some(on_hand) = resolve(point, normal, penetration, v_proxy, &mut out) {
                for &ji in self.solver.ancestor_joints(proxy.link) {
                    let arm = point - fk.joint_origins[ji];
                    out.joint_torques[ji] += fk.joint_axes[ji].dot(&arm.cross(&on_hand));
                }
                out.contacts.push(Contact {
                    point,
                    normal,
                    force: -on_hand,
                    penetration,
                    link: Some(proxy.link),
                });
            }
        }

        // Cube corners against the bounded support surface. The surface is
        // world-fixed, so there is no reaction on the joints. A sunken
        // corner sees the surface below it: the outward normal is -up.
        let down = -(self.palm.rotation * Vec3::z());
        let inverse_palm = self.palm.inverse();
        let [x_min, x_max, y_min, y_max] = self.palm_extent;
        for corner in cube.corners(half) {
            let local = inverse_palm.apply(&corner);
            if local.z >= 0.0 {
                continue;
            }
            if local.x < x_min || local.x > x_max || local.y < y_min || local.y > y_max {
                continue;
            }
            let penetration = -local.z;
            if let Some(on_surface) = resolve(corner, down, penetration, Vec3::zeros(), &mut out) {
                out.contacts.push(Contact {
                    point: corner,
                    normal: down,
                    force: -on_surface,
                    penetration,
                    link: None,
                });
            }
        }

        out
    }

    /// Advance every joint one substep under actuator plus external torque.
    pub fn step_joints(&self, q: &mut [f64], qdot: &mut [f64], targets: &[f64], external: &[f64]) {
        let dt = self.config.dt;
        for i in 0..q.len() {
            let torque =
                actuator_torque(&self.actuators[i], &self.limits[i], q[i], qdot[i], targets[i])
                    + external[i];
            let mut v = qdot[i] + dt * torque / self.inertia[i];
            v = v.clamp(-self.limits[i].velocity, self.limits[i].velocity);
            let mut pos = q[i] + dt * v;
            if pos < self.limits[i].position_lo {
                pos = self.limits[i].position_lo;
                v = v.max(0.0);
            } else if pos > self.limits[i].position_hi {
                pos = self.limits[i].position_hi;
                v = v.min(0.0);
            }
            q[i] = pos;
            qdot[i] = v;
        }
    }

    /// One integration substep: contacts, joints, then the cube.
    pub fn substep(&self, state: &mut SimState, targets: &[f64]) {
        let fk = self.solver.solve(&state.q, &state.qdot);
        let loads = self.contact_forces(&fk, &state.cube);
        self.step_joints(&mut state.q, &mut state.qdot, targets, &loads.joint_torques);
        state.cube = step_cube(
            &state.cube,
            loads.cube_force,
            loads.cube_torque,
            &self.config.cube,
            self.config.gravity,
            self.config.dt,
        );
    }

    /// One control step: the PD targets are held for every substep.
    pub fn step(&self, state: &mut SimState, targets: &[f64]) {
        assert_eq!(targets.len(), self.dof(), "target length != dof");
        for _ in 0..self.config.substeps_per_control {
            self.substep(state, targets);
        }
    }
}

/// Overlap test between a sphere and the cube.
///
/// Returns the contact point on the cube surface, the unit normal pointing
/// from the cube toward the sphere, and the penetration depth. A center
/// inside the cube resolves along the axis of shallowest escape.
fn sphere_cube_overlap(
    center: &Vec3,
    radius: f64,
    cube: &CubeState,
    half: f64,
) -> Option<(Vec3, Vec3, f64)> {
    let local = cube.orientation.inverse() * (center - cube.position);
    let inside = local.x.abs() <= half && local.y.abs() <= half && local.z.abs() <= half;
    let (surface, normal_local, penetration) = if inside {
        let mut axis = 0;
        let mut best = f64::INFINITY;
        for k in 0..3 {
            let depth = half - local[k].abs();
            if depth < best {
                best = depth;
                axis = k;
            }
        }
        let mut surface = local;
        let sign = if local[axis] >= 0.0 { 1.0 } else { -1.0 };
        surface[axis] = sign * half;
        let mut normal = Vec3::zeros();
        normal[axis] = sign;
        (surface, normal, radius + best)
    } else {
        let clamped = Vec3::new(
            local.x.clamp(-half, half),
            local.y.clamp(-half, half),
            local.z.clamp(-half, half),
        );
        let diff = local - clamped;
        let dist = diff.norm();
        if dist >= radius {
            return None;
        }
        (clamped, diff / dist, radius - dist)
    };
    Some((
        cube.position + cube.orientation * surface,
        cube.orientation * normal_local,
        penetration,
    ))
}

/// Semi-implicit Euler update of the free cube.
pub fn step_cube(
    cube: &CubeState,
    force: Vec3,
    torque: Vec3,
    params: &CubeParams,
    gravity: f64,
    dt: f64,
) -> CubeState {
    // The inertia tensor is isotropic, so the gyroscopic term vanishes.
    let linear = cube.linear_velocity + (force / params.mass + Vec3::new(0.0, 0.0, -gravity)) * dt;
    let angular = cube.angular_velocity + torque / params.inertia() * dt;
    CubeState {
        position: cube.position + linear * dt,
        orientation: integrate_orientation(&cube.orientation, &angular, dt),
        linear_velocity: linear,
        angular_velocity: angular,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::handspec::{isyhand_flat, ActuatorParams, JointLimits};
    use crate::math::rotation_about;
    use approx::assert_relative_eq;

    fn flat_sim() -> Simulator {
        Simulator::new(&isyhand_flat(), PhysicsConfig::default())
    }

    fn cube_above_palm(x: f64, y: f64, clearance: f64) -> CubeState {
        CubeState::at_rest(
            Vec3::new(x, y, 0.0325 + clearance),
            UnitQuat::identity(),
        )
    }

    #[test]
    fn actuator_torque_formula_and_clamp() {
        let a = ActuatorParams {
            stiffness: 3.0,
            damping: 0.1,
            friction: 0.01,
            armature: 0.001,
        };
        let l = JointLimits {
            position_lo: -1.0,
            position_hi: 1.0,
            velocity: 5.0,
            effort: 0.5,
        };
        // Inside the cap: plain PD minus dry friction.
        let tau = actuator_torque(&a, &l, 0.1, 0.2, 0.15);
        assert_relative_eq!(tau, 3.0 * 0.05 - 0.1 * 0.2 - 0.01, epsilon = 1e-15);
        // Large error saturates at the effort limit.
        assert_eq!(actuator_torque(&a, &l, -1.0, 0.0, 1.0), 0.5);
        assert_eq!(actuator_torque(&a, &l, 1.0, 0.0, -1.0), -0.5);
        // No friction kick at rest.
        assert_eq!(actuator_torque(&a, &l, 0.0, 0.0, 0.0), 0.0);
    }

    #[test]
    fn pendulum_inertia_is_point_mass_times_arm_squared() {
        use crate::handspec::{HandModel, JointSpec, LinkSpec, PalmSurface, SphereProxy};
        use std::collections::BTreeMap;

        let arm = 0.07;
        let mass = 0.04;
        let model = HandModel {
            name: "pendulum".into(),
            links: vec![
                LinkSpec {
                    name: "base".into(),
                    mass: 1.0,
                    collision_proxies: vec![],
                },
                LinkSpec {
                    name: "bob".into(),
                    mass,
                    collision_proxies: vec![SphereProxy {
                        center: Vec3::new(0.0, arm, 0.0),
                        radius: 0.01,
                    }],
                },
            ],
            joints: vec![JointSpec {
                name: "hinge".into(),
                parent_link: "base".into(),
                child_link: "bob".into(),
                origin: Transform::identity(),
                axis: Vec3::z(),
                limits: JointLimits {
                    position_lo: -3.0,
                    position_hi: 3.0,
                    velocity: 10.0,
                    effort: 1.0,
                },
                actuator: ActuatorParams {
                    stiffness: 3.0,
                    damping: 0.1,
                    friction: 0.0,
                    armature: 0.001,
                },
            }],
            palm_origin_joint: "hinge".into(),
            palm_surface: PalmSurface::default(),
            poses: BTreeMap::new(),
        };
        let solver = FkSolver::new(&model);
        let inertia = effective_joint_inertia(&model, &solver);
        assert_relative_eq!(inertia[0], mass * arm * arm + 0.001, epsilon = 1e-15);
    }

    #[test]
    fn joints_converge_to_target_within_friction_band() {
        let sim = flat_sim();
        let dof = sim.dof();
        let mut state = sim.initial_state(
            vec![0.0; dof],
            // Park the cube far away so nothing touches.
            CubeState::at_rest(Vec3::new(10.0, 0.0, 10.0), UnitQuat::identity()),
        );
        let targets = crate::kinematics::clamp_joint_targets(
            &isyhand_flat(),
            &vec![0.8; dof],
        );
        for _ in 0..90 {
            sim.step(&mut state, &targets);
        }
        for (i, (&q, &target)) in state.q.iter().zip(&targets).enumerate() {
            // Dry friction leaves at most friction/stiffness of error.
            assert!(
                (q - target).abs() < 0.02,
                "joint {i}: q={q} target={target}"
            );
            assert!(state.qdot[i].abs() < 0.05);
        }
    }

    #[test]
    fn free_fall_matches_discrete_closed_form() {
        let sim = flat_sim();
        let dof = sim.dof();
        let z0 = 0.5;
        let mut state = sim.initial_state(
            vec![0.0; dof],
            CubeState::at_rest(Vec3::new(0.0, 0.0, z0), UnitQuat::identity()),
        );
        let n = 48; // 0.1 s of substeps
        for _ in 0..n {
            sim.substep(&mut state, &vec![0.0; dof]);
        }
        let dt = sim.config().dt;
        let expected = z0 - 9.81 * dt * dt * (n * (n + 1)) as f64 / 2.0;
        assert_relative_eq!(state.cube.position.z, expected, epsilon = 1e-12);
    }

    #[test]
    fn tumbling_in_free_space_keeps_spin_and_unit_norm() {
        let sim = flat_sim();
        let dof = sim.dof();
        let mut state = sim.initial_state(
            vec![0.0; dof],
            CubeState {
                position: Vec3::new(0.0, 0.0, 5.0),
                orientation: UnitQuat::identity(),
                linear_velocity: Vec3::zeros(),
                angular_velocity: Vec3::new(1.0, 2.0, 3.0),
            },
        );
        for _ in 0..240 {
            sim.substep(&mut state, &vec![0.0; dof]);
        }
        assert_relative_eq!(
            state.cube.angular_velocity,
            Vec3::new(1.0, 2.0, 3.0),
            epsilon = 1e-12
        );
        assert!(crate::math::unit_norm_error(&state.cube.orientation) < 1e-9);
    }

    #[test]
    fn cube_settles_on_the_palm() {
        let sim = flat_sim();
        let dof = sim.dof();
        // Centered on the open palm, clear of the knuckle and thumb proxies.
        let mut state = sim.initial_state(vec![0.0; dof], cube_above_palm(0.0, -0.045, 0.004));
        let targets = vec![0.0; dof];
        for _ in 0..60 {
            sim.step(&mut state, &targets);
        }
        let z = state.cube.position.z;
        assert!(z.is_finite() && state.cube.linear_velocity.norm() < 1e-3);
        let penetration = 0.0325 - z;
        assert!(
            penetration > 0.0 && penetration < 0.002,
            "penetration {penetration}"
        );
    }

    #[test]
    fn cube_past_the_palm_edge_falls() {
        let sim = flat_sim();
        let dof = sim.dof();
        // Entirely outside the support extent in y.
        let mut state = sim.initial_state(vec![0.0; dof], cube_above_palm(0.0, -0.30, 0.004));
        for _ in 0..30 {
            sim.step(&mut state, &vec![0.0; dof]);
        }
        assert!(state.cube.position.z < -0.2);
    }

    #[test]
    fn contact_forces_balance_and_respect_friction_cone() {
        let sim = flat_sim();
        let dof = sim.dof();
        // Slightly sunken and sliding sideways to excite friction.
        let cube = CubeState {
            position: Vec3::new(0.0, -0.03, 0.0320),
            orientation: rotation_about(&Vec3::z(), 0.3),
            linear_velocity: Vec3::new(0.25, 0.1, -0.05),
            angular_velocity: Vec3::new(0.0, 0.0, 2.0),
        };
        let q = vec![0.3; dof];
        let fk = sim.solver().solve(&q, &vec![0.0; dof]);
        let loads = sim.contact_forces(&fk, &cube);
        assert!(!loads.contacts.is_empty());

        let mu = sim.config().contact.friction;
        for c in &loads.contacts {
            if c.link.is_some() {
                let normal_mag = -c.force.dot(&c.normal);
                assert!(normal_mag >= -1e-12, "adhesive contact: {normal_mag}");
                let tangential = c.force + c.normal * normal_mag;
                assert!(tangential.norm() <= mu * normal_mag + 1e-9);
            }
            assert!(c.penetration > 0.0);
        }
        let total: Vec3 = loads.contacts.iter().map(|c| c.force).sum();
        assert!((total - loads.cube_force).norm() < 1e-12);
    }

    #[test]
    fn buried_sphere_escapes_along_shallowest_axis() {
        let cube = CubeState::at_rest(Vec3::zeros(), UnitQuat::identity());
        // Center inside, closest to the +x face.
        let (point, normal, penetration) =
            sphere_cube_overlap(&Vec3::new(0.030, 0.002, -0.001), 0.008, &cube, 0.0325).unwrap();
        assert_relative_eq!(normal, Vec3::x(), epsilon = 1e-12);
        assert_relative_eq!(point.x, 0.0325, epsilon = 1e-12);
        assert!(penetration > 0.008);
    }

    #[test]
    fn grasping_stays_finite() {
        let model = isyhand_flat();
        let sim = Simulator::new(&model, PhysicsConfig::default());
        let dof = sim.dof();
        let mut state = sim.initial_state(vec![0.0; dof], cube_above_palm(0.0, 0.0, 0.001));
        // Curl all flexion joints hard onto the cube.
        let mut targets = vec![0.0; dof];
        for (i, j) in model.joints.iter().enumerate() {
            if j.name.ends_with("mcp") || j.name.ends_with("pip") || j.name.ends_with("dip") {
                targets[i] = 1.4;
            }
        }
        for _ in 0..90 {
            sim.step(&mut state, &targets);
        }
        assert!(state.cube.position.iter().all(|v| v.is_finite()));
        assert!(state.q.iter().all(|v| v.is_finite()));
        assert!(
            state.cube.position.norm() < 0.5,
            "cube flew away: {:?}",
            state.cube.position
        );
    }
}
