//! Acceptance suite: every release-gating property in one target, one test
//! per criterion, each printing a pass line (visible with --nocapture).
//!
//! The checks are oracle-based: closed forms, independent reimplementations
//! (homogeneous matrices, literal enumerations, exhaustive scans), and
//! byte-level comparisons of whole output directories.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nalgebra::{Matrix4, Quaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use palmgrid::gridlab::{aggregate, generate_goal_sequence, make_grid, GridCell, GridSpec};
use palmgrid::handspec::{builtin_model, HandModel, BUILTIN_NAMES};
use palmgrid::kinematics::FkSolver;
use palmgrid::math::{rotation_about, Transform, UnitQuat, Vec3};
use palmgrid::physics::{CubeState, PhysicsConfig, Simulator};
use palmgrid::stats::{bonferroni, wilcoxon_signed_rank, Method, PairedSample};
use palmgrid::task::{rot_dist, CubeReorientEnv, GoalSource, TaskConfig};
use palmgrid::trainer::{
    gae, surrogate_gradient, surrogate_loss, toy::PlanarReacher, train, Adam, Mlp, Policy,
    PpoConfig, RolloutBuffer, SurrogateSample, TrainConfig, Transition,
};

fn pass(name: &str) {
    println!("{name}: pass");
}

fn random_unit_quat(rng: &mut ChaCha8Rng) -> UnitQuat {
    let mut draw = || -> f64 { StandardNormal.sample(rng) };
    UnitQuat::new_normalize(Quaternion::new(draw(), draw(), draw(), draw()))
}

#[test]
fn grid_layout_is_exact_and_fast() {
    let start = Instant::now();
    let cells = make_grid(&GridSpec::paper()).unwrap();
    let elapsed = start.elapsed();

    assert_eq!(cells.len(), 221);
    let columns: BTreeSet<usize> = cells.iter().map(|c| c.index.0).collect();
    let rows: BTreeSet<usize> = cells.iter().map(|c| c.index.1).collect();
    assert_eq!(columns.len(), 13);
    assert_eq!(rows.len(), 17);
    assert_eq!(columns.iter().max(), Some(&12));
    assert_eq!(rows.iter().max(), Some(&16));

    // Distinct placements, spacing exactly 0.02 between x neighbors.
    let unique: BTreeSet<(usize, usize)> = cells.iter().map(|c| c.index).collect();
    assert_eq!(unique.len(), 221);
    for c in &cells {
        assert!((c.xy[0] - (-0.10 + c.index.0 as f64 * 0.02)).abs() < 1e-12);
        assert!((c.xy[1] - (-0.14 + c.index.1 as f64 * 0.02)).abs() < 1e-12);
    }
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    pass("grid layout 221 cells in 13x17 under one second");
}

#[test]
fn articulated_and_flat_hands_differ_by_the_palm_joints() {
    let articulated = builtin_model("isyhand").unwrap();
    let flat = builtin_model("isyhand_flat").unwrap();
    assert_eq!(articulated.dof(), 18);
    assert_eq!(flat.dof(), 16);

    let names = |m: &HandModel| -> BTreeSet<String> {
        m.joints.iter().map(|j| j.name.clone()).collect()
    };
    let extra: BTreeSet<String> = names(&articulated)
        .difference(&names(&flat))
        .cloned()
        .collect();
    let expected: BTreeSet<String> =
        ["palm_left".to_string(), "palm_right".to_string()].into();
    assert_eq!(extra, expected);
    assert!(names(&flat).is_subset(&names(&articulated)));
    pass("18 vs 16 DoF differing by exactly the two palm joints");
}

#[test]
fn actuator_constants_and_fuzzed_limit_enforcement() {
    for name in BUILTIN_NAMES {
        let model = builtin_model(name).unwrap();
        for j in &model.joints {
            assert_eq!(j.actuator.stiffness, 3.0, "{name}/{}", j.name);
            assert_eq!(j.actuator.damping, 0.1, "{name}/{}", j.name);
            assert_eq!(j.actuator.friction, 0.01, "{name}/{}", j.name);
            assert_eq!(j.actuator.armature, 0.001, "{name}/{}", j.name);
            let rate = (j.limits.velocity, j.limits.effort);
            match name {
                "isyhand" | "isyhand_flat" => {
                    assert!(
                        rate == (5.50, 0.93) || rate == (5.90, 0.52),
                        "{name}/{}: {rate:?}",
                        j.name
                    );
                }
                "allegro_like" => assert_eq!(rate, (6.28, 0.5), "{}", j.name),
                "leap_like" => assert_eq!(rate, (8.48, 0.95), "{}", j.name),
                other => panic!("unknown builtin {other}"),
            }
        }
        // Both servo classes must actually occur on the two-range hands.
        if name.starts_with("isyhand") {
            let velocities: BTreeSet<String> = model
                .joints
                .iter()
                .map(|j| format!("{:.2}", j.limits.velocity))
                .collect();
            assert_eq!(velocities.len(), 2);
        }
    }

    // Fuzz: a million substeps of adversarial targets and external torques
    // across all four hands must never leave q or qdot outside the limits.
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for name in BUILTIN_NAMES {
        let model = builtin_model(name).unwrap();
        let sim = Simulator::new(&model, PhysicsConfig::default());
        let dof = sim.dof();
        let mut q = vec![0.0; dof];
        let mut qdot = vec![0.0; dof];
        let mut targets = vec![0.0; dof];
        let mut external = vec![0.0; dof];
        for step in 0..250_000usize {
            if step % 8 == 0 {
                for (i, j) in model.joints.iter().enumerate() {
                    let (lo, hi) = (j.limits.position_lo, j.limits.position_hi);
                    targets[i] = rng.random_range(lo - 0.5..hi + 0.5);
                    external[i] = rng.random_range(-2.0..2.0);
                }
            }
            sim.step_joints(&mut q, &mut qdot, &targets, &external);
            for (i, j) in model.joints.iter().enumerate() {
                assert!(
                    q[i] >= j.limits.position_lo && q[i] <= j.limits.position_hi,
                    "{name}/{} q={} at substep {step}",
                    j.name,
                    q[i]
                );
                assert!(
                    qdot[i].abs() <= j.limits.velocity,
                    "{name}/{} qdot={} at substep {step}",
                    j.name,
                    qdot[i]
                );
            }
        }
    }
    pass("actuator constants exact, one million fuzzed substeps inside limits");
}

#[test]
fn integrator_and_contact_oracles() {
    let model = builtin_model("isyhand_flat").unwrap();
    let sim = Simulator::new(&model, PhysicsConfig::default());
    let dof = sim.dof();
    let dt = sim.config().dt;

    // Free fall far from any contact against the closed form of the same
    // discrete scheme: v_k = -g k dt, z_n = z0 - g dt^2 n(n+1)/2.
    let z0 = 0.5;
    let mut state = sim.initial_state(
        vec![0.0; dof],
        CubeState::at_rest(Vec3::new(10.0, 0.0, z0), UnitQuat::identity()),
    );
    let control_steps = 60;
    let n = (control_steps * sim.config().substeps_per_control) as f64;
    for _ in 0..control_steps {
        sim.step(&mut state, &vec![0.0; dof]);
    }
    let expected_z = z0 - 9.81 * dt * dt * n * (n + 1.0) / 2.0;
    let expected_v = -9.81 * dt * n;
    assert!((state.cube.position.z - expected_z).abs() < 1e-9);
    assert!((state.cube.linear_velocity.z - expected_v).abs() < 1e-9);
    assert_eq!(state.cube.position.x, 10.0);
    assert_eq!(state.cube.position.y, 0.0);

    // A cube dropped just above the open palm settles: penetration under
    // 2 mm and total mechanical energy never above its starting value by
    // more than 1e-4 J across 5 seconds.
    let params = sim.config().cube;
    let half = params.half_extent;
    let spawn = Vec3::new(0.0, -0.045, half + 0.004);
    let mut state = sim.initial_state(vec![0.0; dof], CubeState::at_rest(spawn, UnitQuat::identity()));
    let energy = |c: &CubeState| -> f64 {
        0.5 * params.mass * c.linear_velocity.norm_squared()
            + 0.5 * params.inertia() * c.angular_velocity.norm_squared()
            + params.mass * 9.81 * c.position.z
    };
    let e0 = energy(&state.cube);
    let mut max_gain = f64::NEG_INFINITY;
    for _ in 0..150 {
        sim.step(&mut state, &vec![0.0; dof]);
        max_gain = max_gain.max(energy(&state.cube) - e0);
    }
    assert!(max_gain <= 1e-4, "energy gain {max_gain}");
    let penetration = half - state.cube.position.z;
    assert!(
        penetration > 0.0 && penetration < 0.002,
        "penetration {penetration}"
    );
    assert!(state.cube.linear_velocity.norm() < 1e-3);

    // Action-reaction: reported per-contact forces must reproduce the
    // aggregate cube load and the joint reaction torques exactly.
    let pose = model.pose_or_zero("init_flat");
    let fk = sim.solver().solve(&pose, &vec![0.0; dof]);
    let proxy = sim.solver().proxies()[10];
    let cube = CubeState {
        position: fk.proxy_centers[10] + Vec3::new(0.0, 0.0, 0.02),
        orientation: rotation_about(&Vec3::new(0.0, 1.0, 0.0), 0.2),
        linear_velocity: Vec3::new(0.05, -0.02, -0.1),
        angular_velocity: Vec3::new(0.4, 0.0, -0.3),
    };
    let _ = proxy;
    let loads = sim.contact_forces(&fk, &cube);
    assert!(
        loads.contacts.iter().any(|c| c.link.is_some()),
        "no hand contact in the probe state"
    );

    let force_sum: Vec3 = loads.contacts.iter().map(|c| c.force).sum();
    let torque_sum: Vec3 = loads
        .contacts
        .iter()
        .map(|c| (c.point - cube.position).cross(&c.force))
        .sum();
    assert!((force_sum - loads.cube_force).norm() < 1e-9);
    assert!((torque_sum - loads.cube_torque).norm() < 1e-9);

    let mut joint_torques = vec![0.0; dof];
    for c in &loads.contacts {
        let Some(link) = c.link else { continue };
        let on_hand = -c.force;
        for &ji in sim.solver().ancestor_joints(link) {
            let arm = c.point - fk.joint_origins[ji];
            joint_torques[ji] += fk.joint_axes[ji].dot(&arm.cross(&on_hand));
        }
    }
    for (i, (&got, &expected)) in loads.joint_torques.iter().zip(&joint_torques).enumerate() {
        assert!((got - expected).abs() < 1e-9, "joint {i}: {got} vs {expected}");
    }
    pass("free fall, resting energy, and contact action-reaction oracles");
}

/// Brute-force pose of `link`: multiply homogeneous matrices up the chain,
/// sharing no code with the production solver.
fn matrix_oracle(model: &HandModel, q: &[f64], link: usize) -> Matrix4<f64> {
    let homogeneous = |t: &Transform| -> Matrix4<f64> {
        let mut m = t.rotation.to_rotation_matrix().to_homogeneous();
        m[(0, 3)] = t.translation.x;
        m[(1, 3)] = t.translation.y;
        m[(2, 3)] = t.translation.z;
        m
    };
    let mut chain = Vec::new();
    let mut current = model.links[link].name.clone();
    while let Some(ji) = model.joints.iter().position(|j| j.child_link == current) {
        chain.push(ji);
        current = model.joints[ji].parent_link.clone();
    }
    let mut m = Matrix4::identity();
    for &ji in chain.iter().rev() {
        let j = &model.joints[ji];
        m *= homogeneous(&j.origin);
        m *= homogeneous(&Transform::from_rotation(rotation_about(&j.axis, q[ji])));
    }
    m
}

#[test]
fn forward_kinematics_matches_matrix_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for name in BUILTIN_NAMES {
        let model = builtin_model(name).unwrap();
        let solver = FkSolver::new(&model);
        let dof = model.dof();
        let zeros = vec![0.0; dof];
        for _ in 0..10_000 {
            let q: Vec<f64> = model
                .joints
                .iter()
                .map(|j| rng.random_range(j.limits.position_lo..j.limits.position_hi))
                .collect();
            let state = solver.solve(&q, &zeros);
            for (li, pose) in state.link_poses.iter().enumerate() {
                let oracle = matrix_oracle(&model, &q, li);
                let expected = Vec3::new(oracle[(0, 3)], oracle[(1, 3)], oracle[(2, 3)]);
                assert!(
                    (pose.translation - expected).norm() < 1e-9,
                    "{name} link {li}: {:?} vs {expected:?}",
                    pose.translation
                );
            }
            for (pi, center) in state.proxy_centers.iter().enumerate() {
                let p = solver.proxies()[pi];
                let oracle = matrix_oracle(&model, &q, p.link);
                let local = p.center_local;
                let expected = Vec3::new(
                    oracle[(0, 0)] * local.x + oracle[(0, 1)] * local.y + oracle[(0, 2)] * local.z + oracle[(0, 3)],
                    oracle[(1, 0)] * local.x + oracle[(1, 1)] * local.y + oracle[(1, 2)] * local.z + oracle[(1, 3)],
                    oracle[(2, 0)] * local.x + oracle[(2, 1)] * local.y + oracle[(2, 2)] * local.z + oracle[(2, 3)],
                );
                assert!((center - expected).norm() < 1e-9, "{name} proxy {pi}");
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    pass("forward kinematics within 1e-9 m of the matrix oracle in under 10 s");
}

#[test]
fn rotation_distance_behaves_like_a_metric() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    for _ in 0..100 {
        let q = random_unit_quat(&mut rng);
        let negated = UnitQuat::new_unchecked(-q.into_inner());
        assert_eq!(rot_dist(&q, &q), 0.0);
        assert_eq!(rot_dist(&q, &negated), 0.0);
    }

    let quarter = rotation_about(&Vec3::z(), std::f64::consts::FRAC_PI_2);
    let identity = UnitQuat::identity();
    assert!((rot_dist(&identity, &quarter) - std::f64::consts::FRAC_PI_2).abs() <= 1e-9);

    for _ in 0..10_000 {
        let a = random_unit_quat(&mut rng);
        let b = random_unit_quat(&mut rng);
        let c = random_unit_quat(&mut rng);
        let direct = rot_dist(&a, &c);
        let detour = rot_dist(&a, &b) + rot_dist(&b, &c);
        assert!(
            direct <= detour + 1e-12,
            "triangle violated: {direct} > {detour}"
        );
    }
    pass("rotation distance: exact zeros, quarter turn, triangle inequality");
}

#[test]
fn gradient_gae_and_zero_advantage_oracles() {
    // Analytic surrogate gradient against central finite differences on
    // networks well under 50 weights.
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for (obs_dim, hidden, act_dim) in [(2usize, vec![3usize], 2usize), (3, vec![4], 1)] {
        let mut policy = Policy::new(obs_dim, act_dim, &hidden, &mut rng);
        let actor_params = policy.actor.parameter_count();
        assert!(actor_params + act_dim <= 50);

        let mut samples = Vec::new();
        for k in 0..8 {
            let obs: Vec<f64> = (0..obs_dim).map(|i| 0.2 * (k + i) as f64 - 0.6).collect();
            let (action, log_prob) = policy.sample_action(&obs, &mut rng);
            samples.push(SurrogateSample {
                observation: obs,
                action,
                // Offset keeps the ratio near 1.05: off the clip boundary
                // so finite differences stay on one branch.
                old_log_prob: log_prob - 0.05,
                advantage: if k % 2 == 0 { 1.1 } else { -0.7 },
            });
        }
        let clip = 0.2;
        let (analytic, _) = surrogate_gradient(&policy, &samples, clip, 0.0);

        let mut flat = policy.actor.flatten_params();
        flat.extend_from_slice(&policy.log_std);
        let h = 1e-6;
        let mut fd = vec![0.0; flat.len()];
        for p in 0..flat.len() {
            let mut probe = |delta: f64| {
                let mut moved = flat.clone();
                moved[p] += delta;
                policy.log_std = moved.split_off(actor_params);
                policy.actor.set_params(&moved);
                surrogate_loss(&policy, &samples, clip)
            };
            fd[p] = (probe(h) - probe(-h)) / (2.0 * h);
        }
        policy.log_std = flat.split_off(actor_params);
        policy.actor.set_params(&flat);

        let err: f64 = analytic
            .iter()
            .zip(&fd)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let scale: f64 = fd.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(err / scale < 1e-4, "gradient error {}", err / scale);
    }

    // Generalized advantage estimation against the quadratic direct sum
    // A_t = sum_l (gamma lambda)^l delta_{t+l}.
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for t_len in 1..=8usize {
        let rewards: Vec<f64> = (0..t_len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let values: Vec<f64> = (0..t_len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let next_value = rng.random_range(-1.0..1.0);
        let (gamma, lambda) = (0.99, 0.95);
        let got = gae(&rewards, &values, next_value, gamma, lambda);
        for t in 0..t_len {
            let mut direct = 0.0;
            for l in 0..(t_len - t) {
                let v_next = if t + l + 1 < t_len {
                    values[t + l + 1]
                } else {
                    next_value
                };
                let delta = rewards[t + l] + gamma * v_next - values[t + l];
                direct += (gamma * lambda).powi(l as i32) * delta;
            }
            assert!((got[t] - direct).abs() < 1e-12, "t={t}: {} vs {direct}", got[t]);
        }
    }

    // A rollout with zero advantage everywhere must not move the policy.
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let mut policy = Policy::new(3, 2, &[4], &mut rng);
    let mut critic = Mlp::new(3, &[4], 1, &mut rng);
    let mut buffer = RolloutBuffer::new(2, 4);
    for env in 0..2 {
        for t in 0..4 {
            let obs = vec![0.3 * t as f64, -0.1, env as f64];
            let (action, log_prob) = policy.sample_action(&obs, &mut rng);
            buffer.push(
                env,
                t,
                Transition {
                    observation: obs,
                    action,
                    log_prob,
                    reward: 0.0,
                    value: 0.0,
                    terminated: false,
                    done: false,
                    bootstrap: 0.0,
                },
            );
        }
    }
    buffer.finish(&[0.0, 0.0], 0.99, 0.95);
    assert!(buffer.iter().all(|(_, advantage, _)| advantage == 0.0));

    let before_actor = policy.actor.flatten_params();
    let before_std = policy.log_std.clone();
    let mut actor_opt = Adam::new(before_actor.len() + before_std.len());
    let mut critic_opt = Adam::new(critic.parameter_count());
    palmgrid::trainer::ppo_update(
        &mut policy,
        &mut critic,
        &mut actor_opt,
        &mut critic_opt,
        &buffer,
        &PpoConfig::default(),
    );
    assert_eq!(policy.actor.flatten_params(), before_actor);
    assert_eq!(policy.log_std, before_std);
    pass("surrogate gradient, GAE direct sum, and zero-advantage oracles");
}

#[test]
fn toy_task_learning_gate() {
    let start = Instant::now();
    let config = TrainConfig {
        epochs: 200,
        horizon: 64,
        envs_per_epoch: 8,
        hidden: vec![32, 32],
        ppo: PpoConfig {
            gamma: 0.95,
            lambda: 0.9,
            learning_rate: 3e-3,
            ..PpoConfig::default()
        },
        seed: 0,
    };
    let mut envs: Vec<PlanarReacher> = (0..config.envs_per_epoch)
        .map(|_| PlanarReacher::new())
        .collect();
    let result = train(&mut envs, &config);
    let elapsed = start.elapsed();

    let first = result.curve.first().unwrap().mean_reward;
    let last = result.curve.last().unwrap().mean_reward;
    assert!(
        last >= 1.5 * first,
        "mean return went from {first} to {last}"
    );
    assert!(elapsed.as_secs_f64() < 300.0, "took {elapsed:?}");
    pass("toy reacher improves at least 1.5x over 200 epochs in under 5 min");
}

/// Minimal well-formedness scan: one root element, every open tag closed
/// in order, attributes fully quoted inside each tag.
fn assert_well_formed_xml(text: &str) {
    let mut stack: Vec<String> = Vec::new();
    let mut roots = 0usize;
    let mut rest = text;
    while let Some(lt) = rest.find('<') {
        rest = &rest[lt + 1..];
        let gt = loop {
            // A '>' inside a quoted attribute value does not end the tag.
            let mut quote = false;
            let mut end = None;
            for (i, ch) in rest.char_indices() {
                match ch {
                    '"' => quote = !quote,
                    '>' if !quote => {
                        end = Some(i);
                        break;
                    }
                    _ => {}
                }
            }
            assert!(!quote, "unterminated attribute quote");
            break end.expect("unterminated tag");
        };
        let tag = &rest[..gt];
        rest = &rest[gt + 1..];
        if tag.starts_with('?') {
            assert!(tag.ends_with('?'), "bad declaration: {tag}");
        } else if let Some(name) = tag.strip_prefix('/') {
            let open = stack.pop().unwrap_or_else(|| panic!("stray </{name}>"));
            assert_eq!(open, name.trim(), "mismatched close tag");
            if stack.is_empty() {
                roots += 1;
            }
        } else if tag.ends_with('/') {
            if stack.is_empty() {
                roots += 1;
            }
        } else {
            let name = tag.split_whitespace().next().expect("empty tag");
            stack.push(name.to_string());
        }
    }
    assert!(stack.is_empty(), "unclosed tags: {stack:?}");
    assert_eq!(roots, 1, "expected exactly one root element");
}

fn run_sweep(out: &Path, workers: &str) {
    let status = Command::new(env!("CARGO_BIN_EXE_palmgrid"))
        .args([
            "sweep",
            "--hand",
            "isyhand_flat",
            "--grid",
            "-0.02:0.02:-0.02:0.02:0.02",
            "--seeds",
            "0",
            "--epochs",
            "20",
            "--eval-episodes",
            "10",
            "--workers",
            workers,
        ])
        .arg("--out")
        .arg(out)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .env_remove("PALMGRID_WORKERS")
        .status()
        .expect("run sweep");
    assert!(status.success(), "sweep exited with {status}");
}

/// Every artifact that must be bit-identical between equivalent sweeps;
/// the manifest is compared field-wise instead because it records argv.
fn artifact_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    for name in [
        "results.csv",
        "summary.csv",
        "table.csv",
        "curves.csv",
        "goals.csv",
        "heatmap.svg",
    ] {
        files.push((name.to_string(), std::fs::read(dir.join(name)).unwrap()));
    }
    for sub in ["cells", "policies"] {
        let mut entries: Vec<_> = std::fs::read_dir(dir.join(sub))
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        entries.sort();
        for path in entries {
            let name = format!("{sub}/{}", path.file_name().unwrap().to_string_lossy());
            files.push((name, std::fs::read(&path).unwrap()));
        }
    }
    files
}

fn assert_same_artifacts(a: &Path, b: &Path) {
    let fa = artifact_files(a);
    let fb = artifact_files(b);
    let names = |f: &[(String, Vec<u8>)]| -> Vec<String> {
        f.iter().map(|(n, _)| n.clone()).collect()
    };
    assert_eq!(names(&fa), names(&fb));
    for ((name, bytes_a), (_, bytes_b)) in fa.iter().zip(&fb) {
        assert_eq!(bytes_a, bytes_b, "{name} differs");
    }
}

#[test]
fn desk_sweep_is_reproducible_and_resumable() {
    use palmgrid::manifest::RunManifest;

    let root = tempfile::tempdir().unwrap();
    let dir_a = root.path().join("a");
    let dir_b = root.path().join("b");
    let dir_c = root.path().join("c");

    let start = Instant::now();
    run_sweep(&dir_a, "2");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 600.0, "took {elapsed:?}");

    // The manifest reloads, its hash covers the configuration, and it
    // enumerates one job per cell.
    let manifest = RunManifest::read(&dir_a.join("manifest.json")).unwrap();
    assert_eq!(manifest.jobs.len(), 9);
    assert_eq!(manifest.config_hash, manifest.config.hash());
    assert!(manifest.failures.is_empty());
    assert_eq!(manifest.config.hand_name, "isyhand_flat");

    // Per-cell results: header plus 9 cells x 10 episodes.
    let results = std::fs::read_to_string(dir_a.join("results.csv")).unwrap();
    assert_eq!(results.lines().count(), 1 + 9 * 10);
    let summary = std::fs::read_to_string(dir_a.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 9);

    // Aggregate table: one labeled row with the six summary columns.
    let table = std::fs::read_to_string(dir_a.join("table.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(
        lines.next().unwrap(),
        "hand,max_s,sum_s,count_ge_1,count_ge_10,count_ge_20,count_ge_30"
    );
    let row = lines.next().unwrap();
    assert!(row.starts_with("isyhand_flat,"));
    assert_eq!(row.split(',').count(), 7);

    let svg = std::fs::read_to_string(dir_a.join("heatmap.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("xmlns=\"http://www.w3.org/2000/svg\""));
    assert_well_formed_xml(&svg);

    // A rerun with a different worker count is byte-identical.
    run_sweep(&dir_b, "1");
    assert_same_artifacts(&dir_a, &dir_b);
    let manifest_b = RunManifest::read(&dir_b.join("manifest.json")).unwrap();
    assert_eq!(manifest_b.config_hash, manifest.config_hash);
    assert_eq!(manifest_b.jobs, manifest.jobs);

    // Interrupting after five finished cells and rerunning matches the
    // uninterrupted run; the rerun reports those cells as resumed.
    std::fs::create_dir_all(dir_c.join("cells")).unwrap();
    let mut cell_files: Vec<_> = std::fs::read_dir(dir_a.join("cells"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    cell_files.sort();
    for path in cell_files.iter().step_by(2) {
        std::fs::copy(path, dir_c.join("cells").join(path.file_name().unwrap())).unwrap();
    }
    let output = Command::new(env!("CARGO_BIN_EXE_palmgrid"))
        .args([
            "sweep",
            "--hand",
            "isyhand_flat",
            "--grid",
            "-0.02:0.02:-0.02:0.02:0.02",
            "--seeds",
            "0",
            "--epochs",
            "20",
            "--eval-episodes",
            "10",
            "--workers",
            "2",
        ])
        .arg("--out")
        .arg(&dir_c)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .env_remove("PALMGRID_WORKERS")
        .output()
        .expect("run sweep");
    assert!(output.status.success());
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("(5 resumed)"), "stdout: {stdout}");
    assert_same_artifacts(&dir_a, &dir_c);
    pass("desk sweep valid, byte-identical on rerun, resume matches");
}

/// Two-sided exact p-value by walking all 2^n sign assignments literally.
fn literal_enumeration_p(ranks: &[f64], w_minus: f64) -> f64 {
    let n = ranks.len();
    let mut at_most = 0u64;
    let mut at_least = 0u64;
    for mask in 0u64..(1 << n) {
        let t: f64 = (0..n)
            .filter(|&i| mask & (1 << i) != 0)
            .map(|i| ranks[i])
            .sum();
        if t <= w_minus + 1e-12 {
            at_most += 1;
        }
        if t >= w_minus - 1e-12 {
            at_least += 1;
        }
    }
    let tail = at_most.min(at_least) as f64 / (1u64 << n) as f64;
    (2.0 * tail).min(1.0)
}

#[test]
fn signed_rank_test_oracles() {
    // Five all-positive differences: the library, a literal 32-assignment
    // enumeration, and the textbook value must all agree at 0.0625.
    let sample = PairedSample::new(
        vec![12.0, 9.0, 14.0, 20.0, 7.0],
        vec![10.0, 5.0, 13.0, 11.0, 1.0],
    )
    .unwrap();
    let result = wilcoxon_signed_rank(&sample).unwrap();
    assert_eq!(result.method, Method::Exact);
    assert_eq!(result.statistic, 0.0);
    assert_eq!(result.w_minus, 0.0);
    assert_eq!(result.p_value_two_sided, 0.0625);
    assert_eq!(
        literal_enumeration_p(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.0),
        0.0625
    );

    // Exact and normal-approximation p-values agree within 0.01 at n=25.
    // The approximation here is an independent reimplementation: tie-aware
    // midranks, variance correction, and a 0.5 continuity correction.
    use statrs::distribution::{ContinuousCDF, Normal};
    let unit = Normal::new(0.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut compared = 0;
    for _ in 0..20 {
        let x: Vec<f64> = (0..25).map(|_| rng.random_range(0..40) as f64).collect();
        let y: Vec<f64> = (0..25).map(|_| rng.random_range(0..40) as f64).collect();
        let diffs: Vec<f64> = x
            .iter()
            .zip(&y)
            .map(|(a, b)| a - b)
            .filter(|d| *d != 0.0)
            .collect();
        if diffs.is_empty() {
            continue;
        }
        let result = wilcoxon_signed_rank(&PairedSample::new(x, y).unwrap()).unwrap();
        assert_eq!(result.method, Method::Exact);

        let mut magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
        magnitudes.sort_by(f64::total_cmp);
        let rank_of = |m: f64| -> f64 {
            let below = magnitudes.iter().filter(|&&v| v < m).count();
            let equal = magnitudes.iter().filter(|&&v| v == m).count();
            below as f64 + (equal as f64 + 1.0) / 2.0
        };
        let w_minus: f64 = diffs.iter().filter(|d| **d < 0.0).map(|d| rank_of(d.abs())).sum();
        let w_plus: f64 = diffs.iter().filter(|d| **d > 0.0).map(|d| rank_of(d.abs())).sum();
        let w = w_minus.min(w_plus);

        let n = diffs.len() as f64;
        let mut tie_term = 0.0;
        let mut i = 0;
        while i < magnitudes.len() {
            let mut j = i;
            while j + 1 < magnitudes.len() && magnitudes[j + 1] == magnitudes[i] {
                j += 1;
            }
            let t = (j - i + 1) as f64;
            tie_term += (t * t * t - t) / 48.0;
            i = j + 1;
        }
        let mean = n * (n + 1.0) / 4.0;
        let variance = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term;
        let z = (w - mean + 0.5) / variance.sqrt();
        let approx = (2.0 * unit.cdf(z)).min(1.0);
        assert!(
            (approx - result.p_value_two_sided).abs() < 0.01,
            "exact {} vs normal {approx}",
            result.p_value_two_sided
        );
        compared += 1;
    }
    assert!(compared >= 15, "only {compared} usable samples");

    // Bonferroni over the six pairs of four hands multiplies and caps.
    let adjusted = bonferroni(&[0.01, 0.03, 0.2, 0.5, 0.004, 1.0], 6);
    assert!((adjusted[0] - 0.06).abs() < 1e-15);
    assert!((adjusted[1] - 0.18).abs() < 1e-15);
    assert_eq!(adjusted[2], 1.0);
    assert_eq!(adjusted[3], 1.0);
    assert!((adjusted[4] - 0.024).abs() < 1e-15);
    assert_eq!(adjusted[5], 1.0);

    // Shift invariance and antisymmetry across 100 random paired samples.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    while checked < 100 {
        let n = rng.random_range(5..40);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0..50) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0..50) as f64).collect();
        if x.iter().zip(&y).all(|(a, b)| a == b) {
            continue;
        }
        let base = wilcoxon_signed_rank(&PairedSample::new(x.clone(), y.clone()).unwrap()).unwrap();

        let shift = rng.random_range(1..30) as f64;
        let shifted = PairedSample::new(
            x.iter().map(|v| v + shift).collect(),
            y.iter().map(|v| v + shift).collect(),
        )
        .unwrap();
        let moved = wilcoxon_signed_rank(&shifted).unwrap();
        assert_eq!(moved.p_value_two_sided, base.p_value_two_sided);
        assert_eq!(moved.statistic, base.statistic);

        let mirrored = wilcoxon_signed_rank(&PairedSample::new(y, x).unwrap()).unwrap();
        assert_eq!(mirrored.w_plus, base.w_minus);
        assert_eq!(mirrored.w_minus, base.w_plus);
        assert_eq!(mirrored.p_value_two_sided, base.p_value_two_sided);
        checked += 1;
    }
    pass("signed-rank enumeration, approximation, correction, and symmetry");
}

#[test]
fn aggregation_matches_exhaustive_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for round in 0..50 {
        let cols = rng.random_range(1..14);
        let rows = rng.random_range(1..18);
        let mut means = Vec::new();
        for row in 0..rows {
            for col in 0..cols {
                let cell = GridCell {
                    index: (col, row),
                    xy: [col as f64 * 0.02, row as f64 * 0.02],
                };
                // Mix continuous values with exact threshold hits.
                let value = if rng.random_range(0..5) == 0 {
                    [1.0, 10.0, 20.0, 30.0][rng.random_range(0..4)]
                } else {
                    rng.random_range(0.0..40.0)
                };
                means.push((cell, value));
            }
        }
        let summary = aggregate(&means);

        let mut max_s = f64::NEG_INFINITY;
        let mut sum_s = 0.0;
        let mut counts = [0usize; 4];
        for (_, v) in &means {
            max_s = max_s.max(*v);
            sum_s += *v;
            for (slot, threshold) in counts.iter_mut().zip([1.0, 10.0, 20.0, 30.0]) {
                if *v >= threshold {
                    *slot += 1;
                }
            }
        }
        assert_eq!(summary.max_s, max_s, "round {round}");
        assert!((summary.sum_s - sum_s).abs() < 1e-9, "round {round}");
        assert_eq!(summary.count_ge, counts, "round {round}");
        assert!(
            summary.count_ge.windows(2).all(|w| w[0] >= w[1]),
            "counts not monotone: {:?}",
            summary.count_ge
        );
    }
    pass("aggregate table equals the exhaustive scan with monotone counts");
}

#[test]
fn evaluation_protocol_is_shared_across_hands() {
    use palmgrid::gridlab::EvalProtocol;
    use palmgrid::trainer::EvalEnvironment;

    let protocol = EvalProtocol::default();
    assert_eq!(protocol.episodes, 100);
    assert_eq!(protocol.episode_steps, 600);
    let physics = PhysicsConfig::default();
    let episode_seconds = physics.control_dt() * protocol.episode_steps as f64;
    assert!((episode_seconds - 20.0).abs() < 1e-12);

    // The goal sequence is a pure function of its seed.
    let goals = generate_goal_sequence(protocol.goal_seed, protocol.goals_needed()).unwrap();
    let again = generate_goal_sequence(protocol.goal_seed, protocol.goals_needed()).unwrap();
    assert_eq!(goals.len(), 100 * 64);
    for (a, b) in goals.iter().zip(&again) {
        assert_eq!(a.into_inner(), b.into_inner());
    }

    // Two different hands replaying the same numbered episodes see the
    // same target and the same initial cube orientation.
    let source = GoalSource::Queue {
        goals: goals.clone(),
        per_episode: protocol.goals_per_episode,
        seed: protocol.goal_seed,
    };
    let mut env_a = CubeReorientEnv::new(
        &builtin_model("isyhand").unwrap(),
        physics,
        TaskConfig::for_cell(0.0, 0.02),
        source.clone(),
    )
    .unwrap();
    let mut env_b = CubeReorientEnv::new(
        &builtin_model("leap_like").unwrap(),
        physics,
        TaskConfig::for_cell(0.0, 0.02),
        source,
    )
    .unwrap();
    for episode in [0usize, 1, 7, 42] {
        env_a.reset_episode(episode).unwrap();
        env_b.reset_episode(episode).unwrap();
        let goal_a = env_a.state().goal.target_orientation;
        let goal_b = env_b.state().goal.target_orientation;
        assert_eq!(goal_a.into_inner(), goal_b.into_inner());
        assert_eq!(
            goal_a.into_inner(),
            goals[episode * protocol.goals_per_episode].into_inner()
        );
        assert_eq!(
            env_a.state().sim.cube.orientation.into_inner(),
            env_b.state().sim.cube.orientation.into_inner()
        );
    }
    pass("evaluation fixed at 100 episodes x 600 steps with shared goals");
}
