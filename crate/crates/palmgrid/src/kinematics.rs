//! Forward kinematics over a hand's joint tree.
//!
//! [`FkSolver`] flattens a validated [`HandModel`] into parent/child index
//! tables once, then [`FkSolver::solve`] walks the tree in topological order
//! to produce world poses and twists for every link, joint frame, and
//! collision proxy. Everything is expressed in the hand's base frame (the
//! root link never moves).

use crate::handspec::HandModel;
use crate::math::{rotation_about, Transform, Vec3};

/// Joint positions or velocities, indexed like `HandModel::joints`.
pub type JointVector = Vec<f64>;

/// Clamp target joint positions into their limits. Idempotent.
pub fn clamp_joint_targets(model: &HandModel, targets: &[f64]) -> JointVector {
    assert_eq!(targets.len(), model.dof(), "target length != dof");
    model
        .joints
        .iter()
        .zip(targets)
        .map(|(j, &t)| t.clamp(j.limits.position_lo, j.limits.position_hi))
        .collect()
}

/// A collision sphere bound to its owning link.
#[derive(Debug, Clone, Copy)]
pub struct ProxyRef {
    pub link: usize,
    pub center_local: Vec3,
    pub radius: f64,
}

/// World-frame poses and velocities for one joint configuration.
#[derive(Debug, Clone)]
pub struct FkState {
    /// Per link, aligned with `HandModel::links`.
    pub link_poses: Vec<Transform>,
    pub link_angular: Vec<Vec3>,
    /// Velocity of each link frame origin.
    pub link_linear: Vec<Vec3>,
    /// Per joint, aligned with `HandModel::joints`.
    pub joint_origins: Vec<Vec3>,
    pub joint_axes: Vec<Vec3>,
    /// Per proxy, aligned with `FkSolver::proxies`.
    pub proxy_centers: Vec<Vec3>,
}

impl FkState {
    /// Velocity of a world point rigidly attached to `link`.
    pub fn point_velocity(&self, link: usize, point: &Vec3) -> Vec3 {
        self.link_linear[link]
            + self.link_angular[link].cross(&(point - self.link_poses[link].translation))
    }
}

#[derive(Debug, Clone)]
pub struct FkSolver {
    /// Per link: the joint that attaches it and its parent link; `None`
    /// for the root.
    parent: Vec<Option<(usize, usize)>>,
    /// Link indices ordered parents-before-children.
    order: Vec<usize>,
    /// Per joint: (origin in parent frame, local axis, child link).
    joints: Vec<(Transform, Vec3, usize)>,
    /// Per link: ancestor joint indices from the root down.
    ancestors: Vec<Vec<usize>>,
    proxies: Vec<ProxyRef>,
    palm: Transform,
    dof: usize,
}

impl FkSolver {
    /// Build the solver tables. The model must already be valid.
    pub fn new(model: &HandModel) -> Self {
        let n_links = model.links.len();
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; n_links];
        let mut joints = Vec::with_capacity(model.dof());
        for (ji, j) in model.joints.iter().enumerate() {
            let pi = model.link_index(&j.parent_link).expect("validated model");
            let ci = model.link_index(&j.child_link).expect("validated model");
            parent[ci] = Some((ji, pi));
            joints.push((j.origin, j.axis, ci));
        }

        // Parents-before-children order by repeated sweeps; the tree is
        // shallow so this settles in a few passes.
        let mut order = Vec::with_capacity(n_links);
        let mut placed = vec![false; n_links];
        while order.len() < n_links {
            let before = order.len();
            for li in 0..n_links {
                if placed[li] {
                    continue;
                }
                match parent[li] {
                    None => {
                        placed[li] = true;
                        order.push(li);
                    }
                    Some((_, pi)) if placed[pi] => {
                        placed[li] = true;
                        order.push(li);
                    }
                    _ => {}
                }
            }
            assert_ne!(order.len(), before, "joint tree has a cycle");
        }

        let mut ancestors: Vec<Vec<usize>> = vec![Vec::new(); n_links];
        for &li in &order {
            if let Some((ji, pi)) = parent[li] {
                let mut chain = ancestors[pi].clone();
                chain.push(ji);
                ancestors[li] = chain;
            }
        }

        let mut proxies = Vec::new();
        for (li, link) in model.links.iter().enumerate() {
            for p in &link.collision_proxies {
                proxies.push(ProxyRef {
                    link: li,
                    center_local: p.center,
                    radius: p.radius,
                });
            }
        }

        let solver = Self {
            parent,
            order,
            joints,
            ancestors,
            proxies,
            palm: Transform::identity(),
            dof: model.dof(),
        };

        // The palm frame is the palm-origin joint's frame at the zero pose,
        // lifted to the support surface.
        let ji = model
            .joint_index(&model.palm_origin_joint)
            .expect("validated model");
        let zero = solver.solve(&vec![0.0; model.dof()], &vec![0.0; model.dof()]);
        let j = &model.joints[ji];
        let pi = model.link_index(&j.parent_link).unwrap();
        let mut palm = zero.link_poses[pi].compose(&j.origin);
        palm.translation.z += model.palm_surface.offset;

        Self { palm, ..solver }
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    pub fn proxies(&self) -> &[ProxyRef] {
        &self.proxies
    }

    /// Ancestor joints of a link, root-first.
    pub fn ancestor_joints(&self, link: usize) -> &[usize] {
        &self.ancestors[link]
    }

    /// The grid/task frame: x right, y toward the fingers, z up off the
    /// support surface.
    pub fn palm_frame(&self) -> &Transform {
        &self.palm
    }

    /// Pose and twist of every link with the root held at `base`.
    pub fn solve_from(&self, base: &Transform, q: &[f64], qdot: &[f64]) -> FkState {
        assert_eq!(q.len(), self.dof, "q length != dof");
        assert_eq!(qdot.len(), self.dof, "qdot length != dof");

        let n_links = self.parent.len();
        let mut state = FkState {
            link_poses: vec![Transform::identity(); n_links],
            link_angular: vec![Vec3::zeros(); n_links],
            link_linear: vec![Vec3::zeros(); n_links],
            joint_origins: vec![Vec3::zeros(); self.dof],
            joint_axes: vec![Vec3::zeros(); self.dof],
            proxy_centers: vec![Vec3::zeros(); self.proxies.len()],
        };

        for &li in &self.order {
            match self.parent[li] {
                None => {
                    state.link_poses[li] = *base;
                }
                Some((ji, pi)) => {
                    let (origin, axis, _) = &self.joints[ji];
                    let joint_frame = state.link_poses[pi].compose(origin);
                    let axis_world = joint_frame.rotation * axis;
                    state.link_poses[li] =
                        joint_frame.compose(&Transform::from_rotation(rotation_about(axis, q[ji])));
                    state.joint_origins[ji] = joint_frame.translation;
                    state.joint_axes[ji] = axis_world;

                    // The joint frame origin rides rigidly on the parent;
                    // the joint's own spin adds no linear velocity there.
                    let arm = joint_frame.translation - state.link_poses[pi].translation;
                    state.link_linear[li] =
                        state.link_linear[pi] + state.link_angular[pi].cross(&arm);
                    state.link_angular[li] = state.link_angular[pi] + axis_world * qdot[ji];
                }
            }
        }

        for (i, p) in self.proxies.iter().enumerate() {
            state.proxy_centers[i] = state.link_poses[p.link].apply(&p.center_local);
        }

        state
    }

    /// [`FkSolver::solve_from`] with the root at the world origin.
    pub fn solve(&self, q: &[f64], qdot: &[f64]) -> FkState {
        self.solve_from(&Transform::identity(), q, qdot)
    }
}
