//! The on-disk JSON document form of a hand model.
//!
//! Kept separate from the in-memory types so the wire format can stay frozen
//! while the runtime representation evolves. Quaternions are stored
//! `[w, x, y, z]`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::math::{quat_from_wxyz, quat_to_wxyz, Transform, Vec3};

use super::{
    ActuatorParams, HandModel, HandSpecError, JointLimits, JointSpec, LinkSpec, PalmSurface,
    SphereProxy,
};

#[derive(Serialize, Deserialize)]
struct Document {
    name: String,
    palm_origin_joint: String,
    links: Vec<LinkDoc>,
    joints: Vec<JointDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    palm_surface: Option<PalmSurfaceDoc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    poses: BTreeMap<String, Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct LinkDoc {
    name: String,
    mass: f64,
    #[serde(default)]
    proxies: Vec<ProxyDoc>,
}

#[derive(Serialize, Deserialize)]
struct ProxyDoc {
    center: [f64; 3],
    radius: f64,
}

#[derive(Serialize, Deserialize)]
struct JointDoc {
    name: String,
    parent: String,
    child: String,
    origin: OriginDoc,
    axis: [f64; 3],
    limits: LimitsDoc,
    actuator: ActuatorDoc,
}

#[derive(Serialize, Deserialize)]
struct OriginDoc {
    xyz: [f64; 3],
    #[serde(default = "identity_quat")]
    quat: [f64; 4],
}

fn identity_quat() -> [f64; 4] {
    [1.0, 0.0, 0.0, 0.0]
}

#[derive(Serialize, Deserialize)]
struct LimitsDoc {
    lo: f64,
    hi: f64,
    velocity: f64,
    effort: f64,
}

#[derive(Serialize, Deserialize)]
struct ActuatorDoc {
    stiffness: f64,
    damping: f64,
    friction: f64,
    armature: f64,
}

#[derive(Serialize, Deserialize)]
struct PalmSurfaceDoc {
    offset: f64,
    extent: [f64; 4],
}

pub(super) fn document_from_str(text: &str) -> Result<HandModel, HandSpecError> {
    let doc: Document = serde_json::from_str(text).map_err(|e| HandSpecError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Ok(lower(doc))
}

pub(super) fn document_to_string(model: &HandModel) -> String {
    let doc = raise(model);
    let mut text = serde_json::to_string_pretty(&doc).expect("hand model serializes");
    text.push('\n');
    text
}

fn lower(doc: Document) -> HandModel {
    HandModel {
        name: doc.name,
        palm_origin_joint: doc.palm_origin_joint,
        links: doc
            .links
            .into_iter()
            .map(|l| LinkSpec {
                name: l.name,
                mass: l.mass,
                collision_proxies: l
                    .proxies
                    .into_iter()
                    .map(|p| SphereProxy {
                        center: Vec3::from(p.center),
                        radius: p.radius,
                    })
                    .collect(),
            })
            .collect(),
        joints: doc
            .joints
            .into_iter()
            .map(|j| JointSpec {
                name: j.name,
                parent_link: j.parent,
                child_link: j.child,
                origin: Transform::new(Vec3::from(j.origin.xyz), quat_from_wxyz(j.origin.quat)),
                axis: Vec3::from(j.axis),
                limits: JointLimits {
                    position_lo: j.limits.lo,
                    position_hi: j.limits.hi,
                    velocity: j.limits.velocity,
                    effort: j.limits.effort,
                },
                actuator: ActuatorParams {
                    stiffness: j.actuator.stiffness,
                    damping: j.actuator.damping,
                    friction: j.actuator.friction,
                    armature: j.actuator.armature,
                },
            })
            .collect(),
        palm_surface: doc
            .palm_surface
            .map(|s| PalmSurface {
                offset: s.offset,
                extent: s.extent,
            })
            .unwrap_or_default(),
        poses: doc.poses,
    }
}

fn raise(model: &HandModel) -> Document {
    Document {
        name: model.name.clone(),
        palm_origin_joint: model.palm_origin_joint.clone(),
        links: model
            .links
            .iter()
            .map(|l| LinkDoc {
                name: l.name.clone(),
                mass: l.mass,
                proxies: l
                    .collision_proxies
                    .iter()
                    .map(|p| ProxyDoc {
                        center: [p.center.x, p.center.y, p.center.z],
                        radius: p.radius,
                    })
                    .collect(),
            })
            .collect(),
        joints: model
            .joints
            .iter()
            .map(|j| JointDoc {
                name: j.name.clone(),
                parent: j.parent_link.clone(),
                child: j.child_link.clone(),
                origin: OriginDoc {
                    xyz: [
                        j.origin.translation.x,
                        j.origin.translation.y,
                        j.origin.translation.z,
                    ],
                    quat: quat_to_wxyz(&j.origin.rotation),
                },
                axis: [j.axis.x, j.axis.y, j.axis.z],
                limits: LimitsDoc {
                    lo: j.limits.position_lo,
                    hi: j.limits.position_hi,
                    velocity: j.limits.velocity,
                    effort: j.limits.effort,
                },
                actuator: ActuatorDoc {
                    stiffness: j.actuator.stiffness,
                    damping: j.actuator.damping,
                    friction: j.actuator.friction,
                    armature: j.actuator.armature,
                },
            })
            .collect(),
        palm_surface: Some(PalmSurfaceDoc {
            offset: model.palm_surface.offset,
            extent: model.palm_surface.extent,
        }),
        poses: model.poses.clone(),
    }
}
