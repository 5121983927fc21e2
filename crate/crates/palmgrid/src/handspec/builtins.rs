//! The four builtin hand models.
//!
//! All palms face +z and fingers extend along +y, so the same task and
//! evaluation code drives every hand. The palm frame origin sits at the
//! middle-finger mount with the support surface at z = 0.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use crate::math::{rotation_about, Transform, Vec3};

use super::{
    ActuatorParams, HandModel, JointLimits, JointSpec, LinkSpec, PalmSurface, SphereProxy,
};

/// Actuator constants shared by every builtin joint.
const ACTUATOR: ActuatorParams = ActuatorParams {
    stiffness: 3.0,
    damping: 0.1,
    friction: 0.01,
    armature: 0.001,
};

pub const BUILTIN_NAMES: [&str; 4] = ["isyhand", "isyhand_flat", "allegro_like", "leap_like"];

/// Look up a builtin model by name.
pub fn builtin_model(name: &str) -> Option<HandModel> {
    match name {
        "isyhand" => Some(isyhand()),
        "isyhand_flat" => Some(isyhand_flat()),
        "allegro_like" => Some(allegro_like()),
        "leap_like" => Some(leap_like()),
        _ => None,
    }
}

/// Speed/torque budget of a servo class: (velocity rad/s, effort N·m).
#[derive(Clone, Copy)]
struct Rate(f64, f64);

struct Builder {
    links: Vec<LinkSpec>,
    joints: Vec<JointSpec>,
}

impl Builder {
    fn new() -> Self {
        Self {
            links: Vec::new(),
            joints: Vec::new(),
        }
    }

    fn link(&mut self, name: &str, mass: f64, proxies: Vec<SphereProxy>) {
        self.links.push(LinkSpec {
            name: name.to_string(),
            mass,
            collision_proxies: proxies,
        });
    }

    #[allow(clippy::too_many_arguments)]
    fn joint(
        &mut self,
        name: &str,
        parent: &str,
        child: &str,
        origin: Transform,
        axis: Vec3,
        limits: (f64, f64),
        rate: Rate,
    ) {
        self.joints.push(JointSpec {
            name: name.to_string(),
            parent_link: parent.to_string(),
            child_link: child.to_string(),
            origin,
            axis,
            limits: JointLimits {
                position_lo: limits.0,
                position_hi: limits.1,
                velocity: rate.0,
                effort: rate.1,
            },
            actuator: ACTUATOR,
        });
    }
}

/// One four-joint digit: a base swivel, then three flexion joints.
struct Digit {
    prefix: &'static str,
    parent: &'static str,
    mount: Transform,
    /// Name of the base joint: "abd" for fingers, "rot" for thumbs.
    base_name: &'static str,
    base_axis: Vec3,
    base_limits: (f64, f64),
    base_rate: Rate,
    flex_axis: Vec3,
    flex_limits: [(f64, f64); 3],
    flex_rate: Rate,
    /// Base-to-first-flexion offset, then proximal/middle/tip lengths.
    lengths: [f64; 4],
    masses: [f64; 4],
    proxy_radius: f64,
}

fn add_digit(b: &mut Builder, d: Digit) {
    let segment = |len: f64, r: f64| {
        vec![
            SphereProxy {
                center: Vec3::new(0.0, len / 2.0, 0.0),
                radius: r,
            },
            SphereProxy {
                center: Vec3::new(0.0, len, 0.0),
                radius: r,
            },
        ]
    };
    let n = |part: &str| format!("{}_{part}", d.prefix);
    let [base_len, proximal, middle, tip] = d.lengths;
    let r = d.proxy_radius;

    b.link(
        &n("knuckle"),
        d.masses[0],
        vec![SphereProxy {
            center: Vec3::new(0.0, base_len / 2.0, 0.0),
            radius: r,
        }],
    );
    b.link(&n("proximal"), d.masses[1], segment(proximal, r));
    b.link(&n("middle"), d.masses[2], segment(middle, r));
    b.link(&n("tip"), d.masses[3], segment(tip, r));

    let along = |y: f64| Transform::from_translation(0.0, y, 0.0);
    b.joint(
        &n(d.base_name),
        d.parent,
        &n("knuckle"),
        d.mount,
        d.base_axis,
        d.base_limits,
        d.base_rate,
    );
    b.joint(
        &n("mcp"),
        &n("knuckle"),
        &n("proximal"),
        along(base_len),
        d.flex_axis,
        d.flex_limits[0],
        d.flex_rate,
    );
    b.joint(
        &n("pip"),
        &n("proximal"),
        &n("middle"),
        along(proximal),
        d.flex_axis,
        d.flex_limits[1],
        d.flex_rate,
    );
    b.joint(
        &n("dip"),
        &n("middle"),
        &n("tip"),
        along(middle),
        d.flex_axis,
        d.flex_limits[2],
        d.flex_rate,
    );
}

fn grid_proxies(xs: &[f64], ys: &[f64], z: f64, radius: f64) -> Vec<SphereProxy> {
    let mut out = Vec::new();
    for &x in xs {
        for &y in ys {
            out.push(SphereProxy {
                center: Vec3::new(x, y, z),
                radius,
            });
        }
    }
    out
}

fn finish(
    b: Builder,
    name: &str,
    palm_origin_joint: &str,
    palm_surface: PalmSurface,
) -> HandModel {
    let dof = b.joints.len();
    let mut poses = BTreeMap::new();
    poses.insert("init_flat".to_string(), vec![0.0; dof]);
    HandModel {
        name: name.to_string(),
        links: b.links,
        joints: b.joints,
        palm_origin_joint: palm_origin_joint.to_string(),
        palm_surface,
        poses,
    }
}

/// Thumb mount rotation: the digit's +y chain direction points up (+z) at
/// the zero pose, and flexion about -x curls it toward the fingers (+y).
fn thumb_mount(x: f64, y: f64, z: f64) -> Transform {
    Transform::new(
        Vec3::new(x, y, z),
        rotation_about(&Vec3::x(), FRAC_PI_2),
    )
}

/// 18-DoF hand: three fingers, an opposing thumb, and a two-joint split
/// palm whose wings fold the side fingers toward the center.
pub fn isyhand() -> HandModel {
    // Servo classes: the coupled base/palm servos trade speed for torque.
    let strong = Rate(5.50, 0.93);
    let fast = Rate(5.90, 0.52);

    let mut b = Builder::new();
    b.link(
        "palm_center",
        0.080,
        grid_proxies(&[-0.01, 0.01], &[-0.10, -0.06, -0.02], -0.012, 0.012),
    );
    b.link(
        "palm_left_wing",
        0.030,
        grid_proxies(&[-0.035, -0.015], &[-0.04, 0.0, 0.04], -0.007, 0.012),
    );
    b.link(
        "palm_right_wing",
        0.030,
        grid_proxies(&[0.015, 0.035], &[-0.04, 0.0, 0.04], -0.007, 0.012),
    );
    // Positive palm_left folds the -x wing upward; palm_right mirrors it.
    b.joint(
        "palm_left",
        "palm_center",
        "palm_left_wing",
        Transform::from_translation(-0.02, -0.05, -0.005),
        Vec3::y(),
        (-0.2, 1.0),
        strong,
    );
    b.joint(
        "palm_right",
        "palm_center",
        "palm_right_wing",
        Transform::from_translation(0.02, -0.05, -0.005),
        Vec3::y(),
        (-1.0, 0.2),
        strong,
    );

    let finger = |prefix, parent, mount| Digit {
        prefix,
        parent,
        mount,
        base_name: "abd",
        base_axis: Vec3::z(),
        base_limits: (-0.35, 0.35),
        base_rate: strong,
        flex_axis: Vec3::x(),
        flex_limits: [(-0.30, 1.90), (-0.20, 2.0), (-0.20, 2.0)],
        flex_rate: fast,
        lengths: [0.012, 0.045, 0.032, 0.028],
        masses: [0.008, 0.012, 0.010, 0.008],
        proxy_radius: 0.008,
    };
    // Wing-local mounts put index/ring at x = -/+0.036 in the flat pose.
    add_digit(
        &mut b,
        finger(
            "index",
            "palm_left_wing",
            Transform::from_translation(-0.016, 0.05, 0.005),
        ),
    );
    add_digit(
        &mut b,
        finger("middle", "palm_center", Transform::identity()),
    );
    add_digit(
        &mut b,
        finger(
            "ring",
            "palm_right_wing",
            Transform::from_translation(0.016, 0.05, 0.005),
        ),
    );
    add_digit(
        &mut b,
        Digit {
            prefix: "th",
            parent: "palm_right_wing",
            mount: thumb_mount(0.038, -0.01, 0.005),
            base_name: "rot",
            base_axis: Vec3::y(),
            base_limits: (-1.0, 1.0),
            base_rate: strong,
            flex_axis: -Vec3::x(),
            flex_limits: [(-0.30, 1.90), (-0.20, 2.0), (-0.20, 2.0)],
            flex_rate: fast,
            lengths: [0.014, 0.042, 0.030, 0.028],
            masses: [0.010, 0.012, 0.010, 0.008],
            proxy_radius: 0.009,
        },
    );

    finish(
        b,
        "isyhand",
        "middle_abd",
        PalmSurface {
            offset: 0.0,
            extent: [-0.065, 0.065, -0.125, 0.005],
        },
    )
}

/// The same hand with the palm welded flat: the two wing joints are gone
/// and the side digits mount directly on the rigid palm.
pub fn isyhand_flat() -> HandModel {
    let strong = Rate(5.50, 0.93);
    let fast = Rate(5.90, 0.52);

    let mut b = Builder::new();
    b.link(
        "palm_center",
        0.140,
        grid_proxies(
            &[-0.05, -0.025, 0.0, 0.025, 0.05],
            &[-0.10, -0.06, -0.02],
            -0.012,
            0.012,
        ),
    );

    let finger = |prefix, mount| Digit {
        prefix,
        parent: "palm_center",
        mount,
        base_name: "abd",
        base_axis: Vec3::z(),
        base_limits: (-0.35, 0.35),
        base_rate: strong,
        flex_axis: Vec3::x(),
        flex_limits: [(-0.30, 1.90), (-0.20, 2.0), (-0.20, 2.0)],
        flex_rate: fast,
        lengths: [0.012, 0.045, 0.032, 0.028],
        masses: [0.008, 0.012, 0.010, 0.008],
        proxy_radius: 0.008,
    };
    add_digit(
        &mut b,
        finger("index", Transform::from_translation(-0.036, 0.0, 0.0)),
    );
    add_digit(&mut b, finger("middle", Transform::identity()));
    add_digit(
        &mut b,
        finger("ring", Transform::from_translation(0.036, 0.0, 0.0)),
    );
    add_digit(
        &mut b,
        Digit {
            prefix: "th",
            parent: "palm_center",
            mount: thumb_mount(0.058, -0.06, 0.0),
            base_name: "rot",
            base_axis: Vec3::y(),
            base_limits: (-1.0, 1.0),
            base_rate: strong,
            flex_axis: -Vec3::x(),
            flex_limits: [(-0.30, 1.90), (-0.20, 2.0), (-0.20, 2.0)],
            flex_rate: fast,
            lengths: [0.014, 0.042, 0.030, 0.028],
            masses: [0.010, 0.012, 0.010, 0.008],
            proxy_radius: 0.009,
        },
    );

    finish(
        b,
        "isyhand_flat",
        "middle_abd",
        PalmSurface {
            offset: 0.0,
            extent: [-0.065, 0.065, -0.125, 0.005],
        },
    )
}

/// A 16-DoF rigid-palm hand with thick, long fingers.
pub fn allegro_like() -> HandModel {
    // Joint velocity limit in rad/s; the proximity to 2π is coincidence.
    #[allow(clippy::approx_constant)]
    let rate = Rate(6.28, 0.5);

    let mut b = Builder::new();
    b.link(
        "palm_center",
        0.200,
        grid_proxies(
            &[-0.04, 0.0, 0.04],
            &[-0.11, -0.07, -0.03],
            -0.012,
            0.012,
        ),
    );

    let finger = |prefix, x| Digit {
        prefix,
        parent: "palm_center",
        mount: Transform::from_translation(x, 0.0, 0.0),
        base_name: "abd",
        base_axis: Vec3::z(),
        base_limits: (-0.47, 0.47),
        base_rate: rate,
        flex_axis: Vec3::x(),
        flex_limits: [(-0.196, 1.61), (-0.174, 1.709), (-0.227, 1.618)],
        flex_rate: rate,
        lengths: [0.0164, 0.054, 0.0384, 0.0437],
        masses: [0.020, 0.040, 0.030, 0.025],
        proxy_radius: 0.013,
    };
    add_digit(&mut b, finger("index", -0.043));
    add_digit(&mut b, finger("middle", 0.0));
    add_digit(&mut b, finger("ring", 0.043));
    add_digit(
        &mut b,
        Digit {
            prefix: "th",
            parent: "palm_center",
            mount: thumb_mount(0.060, -0.060, 0.0),
            base_name: "rot",
            base_axis: Vec3::y(),
            base_limits: (-0.263, 1.396),
            base_rate: rate,
            flex_axis: -Vec3::x(),
            flex_limits: [(-0.105, 1.163), (-0.189, 1.644), (-0.162, 1.719)],
            flex_rate: rate,
            lengths: [0.0177, 0.0514, 0.0423, 0.0423],
            masses: [0.025, 0.040, 0.030, 0.025],
            proxy_radius: 0.013,
        },
    );

    finish(
        b,
        "allegro_like",
        "middle_abd",
        PalmSurface {
            offset: 0.0,
            extent: [-0.065, 0.065, -0.135, 0.01],
        },
    )
}

/// A 16-DoF rigid-palm hand with wide joint ranges and fast servos.
pub fn leap_like() -> HandModel {
    let rate = Rate(8.48, 0.95);

    let mut b = Builder::new();
    b.link(
        "palm_center",
        0.150,
        grid_proxies(
            &[-0.045, 0.0, 0.045],
            &[-0.10, -0.06, -0.02],
            -0.012,
            0.012,
        ),
    );

    let finger = |prefix, x| Digit {
        prefix,
        parent: "palm_center",
        mount: Transform::from_translation(x, 0.0, 0.0),
        base_name: "abd",
        base_axis: Vec3::z(),
        base_limits: (-1.047, 1.047),
        base_rate: rate,
        flex_axis: Vec3::x(),
        flex_limits: [(-0.314, 2.23), (-0.314, 2.23), (-0.314, 2.23)],
        flex_rate: rate,
        lengths: [0.014, 0.049, 0.036, 0.041],
        masses: [0.015, 0.030, 0.025, 0.020],
        proxy_radius: 0.012,
    };
    add_digit(&mut b, finger("index", -0.045));
    add_digit(&mut b, finger("middle", 0.0));
    add_digit(&mut b, finger("ring", 0.045));
    add_digit(
        &mut b,
        Digit {
            prefix: "th",
            parent: "palm_center",
            mount: thumb_mount(0.060, -0.060, 0.0),
            base_name: "rot",
            base_axis: Vec3::y(),
            base_limits: (-1.047, 1.047),
            base_rate: rate,
            flex_axis: -Vec3::x(),
            flex_limits: [(-0.314, 2.23), (-0.314, 2.23), (-0.314, 2.23)],
            flex_rate: rate,
            lengths: [0.016, 0.049, 0.036, 0.041],
            masses: [0.018, 0.030, 0.025, 0.020],
            proxy_radius: 0.012,
        },
    );

    finish(
        b,
        "leap_like",
        "middle_abd",
        PalmSurface {
            offset: 0.0,
            extent: [-0.06, 0.06, -0.125, 0.01],
        },
    )
}
