//! Hand-model descriptions: types, parsing, validation, serialization, and
//! the four builtin models used for comparisons.
//!
//! A hand is a tree of links connected by revolute joints. Every joint is
//! actuated (PD position control with effort/velocity limits), and every
//! link carries sphere collision proxies instead of meshes. Models travel as
//! UTF-8 JSON documents; see [`parse_hand_spec`] and the format described in
//! the guide.

mod builtins;
mod format;

pub use builtins::{allegro_like, builtin_model, isyhand, isyhand_flat, leap_like, BUILTIN_NAMES};

use std::collections::{BTreeMap, HashMap, HashSet};

use thiserror::Error;

use crate::math::{unit_norm_error, Transform, Vec3, UNIT_NORM_TOL};

/// PD actuator constants for one joint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuatorParams {
    /// Position gain (N·m/rad).
    pub stiffness: f64,
    /// Velocity gain (N·m·s/rad).
    pub damping: f64,
    /// Dry friction torque (N·m).
    pub friction: f64,
    /// Added rotor inertia (kg·m²).
    pub armature: f64,
}

/// Position/velocity/effort limits for one joint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointLimits {
    pub position_lo: f64,
    pub position_hi: f64,
    /// Maximum joint speed (rad/s), enforced by clamping.
    pub velocity: f64,
    /// Maximum torque magnitude (N·m), enforced by clamping.
    pub effort: f64,
}

/// One revolute joint of the kinematic tree.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpec {
    pub name: String,
    pub parent_link: String,
    pub child_link: String,
    /// Fixed transform from the parent-link frame to the joint frame.
    pub origin: Transform,
    /// Rotation axis in the joint frame; must be unit-norm.
    pub axis: Vec3,
    pub limits: JointLimits,
    pub actuator: ActuatorParams,
}

/// A sphere collision proxy in its link's frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereProxy {
    pub center: Vec3,
    pub radius: f64,
}

/// One rigid link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSpec {
    pub name: String,
    pub mass: f64,
    pub collision_proxies: Vec<SphereProxy>,
}

/// The static support surface of a hand, in the palm frame.
///
/// `offset` lifts the palm frame to the surface height along the palm
/// normal; `extent` bounds the surface rectangle `[x_min, x_max, y_min,
/// y_max]` so a cube pushed past the hand's footprint falls instead of
/// resting on thin air.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PalmSurface {
    pub offset: f64,
    pub extent: [f64; 4],
}

impl Default for PalmSurface {
    fn default() -> Self {
        Self {
            offset: 0.0,
            extent: [-0.07, 0.07, -0.13, 0.01],
        }
    }
}

/// A parsed, validated hand model.
#[derive(Debug, Clone, PartialEq)]
pub struct HandModel {
    pub name: String,
    pub links: Vec<LinkSpec>,
    /// Joints in actuation order; `dof()` equals this list's length.
    pub joints: Vec<JointSpec>,
    /// The joint that mounts the middle finger to the palm; the evaluation
    /// grid's origin sits directly above its axis center.
    pub palm_origin_joint: String,
    pub palm_surface: PalmSurface,
    /// Named joint configurations, e.g. `init_flat` for episode resets.
    pub poses: BTreeMap<String, Vec<f64>>,
}

impl HandModel {
    /// Number of actuated degrees of freedom.
    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn link_index(&self, name: &str) -> Option<usize> {
        self.links.iter().position(|l| l.name == name)
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    /// The named pose, or all-zeros when absent.
    pub fn pose_or_zero(&self, name: &str) -> Vec<f64> {
        self.poses
            .get(name)
            .cloned()
            .unwrap_or_else(|| vec![0.0; self.dof()])
    }
}

/// A single validation finding, naming the offending element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub element: String,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.element, self.message)
    }
}

#[derive(Debug, Error)]
pub enum HandSpecError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid hand model: {}", format_diagnostics(.0))]
    Invalid(Vec<Diagnostic>),
}

fn format_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Parse a hand-spec JSON document into a validated [`HandModel`].
pub fn parse_hand_spec(text: &str) -> Result<HandModel, HandSpecError> {
    let model = format::document_from_str(text)?;
    let diagnostics = validate_model(&model);
    if diagnostics.is_empty() {
        Ok(model)
    } else {
        Err(HandSpecError::Invalid(diagnostics))
    }
}

/// Serialize a model to its JSON document form.
///
/// Round-trip stable: `parse_hand_spec(serialize_hand_spec(m))` equals `m`
/// field-by-field for any valid model.
pub fn serialize_hand_spec(model: &HandModel) -> String {
    format::document_to_string(model)
}

/// Check every model invariant; an empty list means the model is valid.
// Negated comparisons below are deliberate: NaN must fail every check.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn validate_model(model: &HandModel) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let diag = |element: &str, message: String| Diagnostic {
        element: element.to_string(),
        message,
    };

    let mut link_names = HashSet::new();
    for link in &model.links {
        if !link_names.insert(link.name.as_str()) {
            diags.push(diag(&link.name, "duplicate link name".into()));
        }
        if !(link.mass >= 0.0) {
            diags.push(diag(&link.name, format!("mass {} is negative", link.mass)));
        }
        for (i, proxy) in link.collision_proxies.iter().enumerate() {
            if !(proxy.radius > 0.0) {
                diags.push(diag(
                    &link.name,
                    format!("proxy {i} has non-positive radius {}", proxy.radius),
                ));
            }
        }
    }

    let mut joint_names = HashSet::new();
    let mut child_of: HashMap<&str, &str> = HashMap::new();
    for joint in &model.joints {
        if !joint_names.insert(joint.name.as_str()) {
            diags.push(diag(&joint.name, "duplicate joint name".into()));
        }
        if !link_names.contains(joint.parent_link.as_str()) {
            diags.push(diag(
                &joint.name,
                format!("dangling parent link '{}'", joint.parent_link),
            ));
        }
        if !link_names.contains(joint.child_link.as_str()) {
            diags.push(diag(
                &joint.name,
                format!("dangling child link '{}'", joint.child_link),
            ));
        }
        if (joint.axis.norm() - 1.0).abs() > UNIT_NORM_TOL {
            diags.push(diag(
                &joint.name,
                format!("non-unit axis (norm {})", joint.axis.norm()),
            ));
        }
        if unit_norm_error(&joint.origin.rotation) > UNIT_NORM_TOL {
            diags.push(diag(&joint.name, "non-unit origin quaternion".into()));
        }
        if !(joint.limits.position_lo < joint.limits.position_hi) {
            diags.push(diag(
                &joint.name,
                format!(
                    "position limits [{}, {}] are not increasing",
                    joint.limits.position_lo, joint.limits.position_hi
                ),
            ));
        }
        if !(joint.limits.velocity > 0.0) {
            diags.push(diag(&joint.name, "velocity limit must be positive".into()));
        }
        if !(joint.limits.effort > 0.0) {
            diags.push(diag(&joint.name, "effort limit must be positive".into()));
        }
        let a = &joint.actuator;
        if !(a.stiffness > 0.0) {
            diags.push(diag(&joint.name, "stiffness must be positive".into()));
        }
        if !(a.damping >= 0.0 && a.friction >= 0.0 && a.armature >= 0.0) {
            diags.push(diag(
                &joint.name,
                "damping, friction, and armature must be non-negative".into(),
            ));
        }
        if let Some(prev) = child_of.insert(joint.child_link.as_str(), joint.name.as_str()) {
            diags.push(diag(
                &joint.name,
                format!(
                    "link '{}' already attached by joint '{prev}'",
                    joint.child_link
                ),
            ));
        }
    }

    // Tree shape: exactly one root, everything reachable from it.
    let roots: Vec<&str> = model
        .links
        .iter()
        .map(|l| l.name.as_str())
        .filter(|name| !child_of.contains_key(name))
        .collect();
    match roots.as_slice() {
        [] if !model.links.is_empty() => {
            diags.push(diag(&model.name, "no root link (cycle)".into()));
        }
        [_root] => {
            let mut children: HashMap<&str, Vec<&str>> = HashMap::new();
            for joint in &model.joints {
                children
                    .entry(joint.parent_link.as_str())
                    .or_default()
                    .push(joint.child_link.as_str());
            }
            let mut seen = HashSet::new();
            let mut stack = vec![roots[0]];
            while let Some(link) = stack.pop() {
                if seen.insert(link) {
                    if let Some(kids) = children.get(link) {
                        stack.extend(kids.iter().copied());
                    }
                }
            }
            for link in &model.links {
                if !seen.contains(link.name.as_str()) {
                    diags.push(diag(
                        &link.name,
                        "unreachable from the root link (cycle or disconnection)".into(),
                    ));
                }
            }
        }
        many => {
            if !many.is_empty() {
                diags.push(diag(
                    &model.name,
                    format!("multiple root links: {}", many.join(", ")),
                ));
            }
        }
    }

    if model.joint_index(&model.palm_origin_joint).is_none() {
        diags.push(diag(
            &model.palm_origin_joint,
            "palm_origin_joint does not name a joint".into(),
        ));
    }

    let [x_min, x_max, y_min, y_max] = model.palm_surface.extent;
    if !(x_min < x_max && y_min < y_max) {
        diags.push(diag(&model.name, "palm_surface extent is empty".into()));
    }

    for (pose_name, values) in &model.poses {
        if values.len() != model.dof() {
            diags.push(diag(
                pose_name,
                format!(
                    "pose has {} values but the model has {} joints",
                    values.len(),
                    model.dof()
                ),
            ));
        }
    }

    diags
}
