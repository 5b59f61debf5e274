use std::path::Path;

use proptest::prelude::*;
use stinger_core::controller::{
    fsm_step, CommandSet, ControllerConfig, ControllerState, HaltReason, Phase, SensorSnapshot,
};
use stinger_core::environment::{
    contact_force, friction_force, solve_contact_equilibrium, ContactParams, ContactPoint, Wrench,
};
use stinger_core::exec::Execution;
use stinger_core::kinematics::{workspace_region_with, RobotParams};
use stinger_core::scenario::load_scenario;
use stinger_core::simulator::{force_ratios, HoldMode};
use stinger_core::Vec2;

fn cfg() -> ControllerConfig {
    ControllerConfig {
        drill_target_depth: Some(0.05),
        ..ControllerConfig::default()
    }
}

#[derive(Debug, Clone)]
struct Tick {
    forces: [f64; 3],
    opened: bool,
    at_limit: [bool; 3],
    drill_force: f64,
    drill_feed: f64,
}

fn tick() -> impl Strategy<Value = Tick> {
    let force = prop_oneof![0.0..20.0, 100.0..140.0, 0.0..1500.0];
    (
        [force.clone(), force.clone(), force],
        any::<bool>(),
        proptest::array::uniform3(proptest::bool::weighted(0.05)),
        0.0..300.0f64,
        0.0..0.3f64,
    )
        .prop_map(|(forces, opened, at_limit, drill_force, drill_feed)| Tick {
            forces,
            opened,
            at_limit,
            drill_force,
            drill_feed,
        })
}

fn snapshot(k: usize, t: &Tick, config: &ControllerConfig) -> SensorSnapshot {
    let mut s = SensorSnapshot {
        time: k as f64 * config.control_period,
        leg_forces: t.forces,
        drill_force: t.drill_force,
        extension_at_limit: t.at_limit,
        drill_feed: t.drill_feed,
        ..SensorSnapshot::default()
    };
    if t.opened {
        s.joint_states[0].rotation = config.open_targets.0;
        s.joint_states[2].rotation = config.open_targets.1;
    }
    s
}

fn run_fsm(ticks: &[Tick], config: &ControllerConfig) -> Vec<(ControllerState, CommandSet)> {
    let mut state = ControllerState::default();
    ticks
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let (next, cmd) = fsm_step(&state, &snapshot(k, t, config), config);
            state = next;
            (next, cmd)
        })
        .collect()
}

fn forces_only(forces: [f64; 3], k: usize, config: &ControllerConfig) -> SensorSnapshot {
    snapshot(
        k,
        &Tick {
            forces,
            opened: true,
            at_limit: [false; 3],
            drill_force: 0.0,
            drill_feed: 0.0,
        },
        config,
    )
}

proptest! {
    #[test]
    fn phases_never_go_back(ticks in proptest::collection::vec(tick(), 1..400)) {
        let config = cfg();
        let mut prev = ControllerState::default().phase;
        for (state, _) in run_fsm(&ticks, &config) {
            match (prev.ordinal(), state.phase.ordinal()) {
                (Some(a), Some(b)) => prop_assert!(b >= a, "{prev} -> {}", state.phase),
                (None, _) => prop_assert_eq!(state.phase, prev),
                (Some(_), None) => {}
            }
            prev = state.phase;
        }
    }

    #[test]
    fn latches_never_clear(ticks in proptest::collection::vec(tick(), 1..300)) {
        let config = cfg();
        let mut prev = [false; 3];
        for (state, _) in run_fsm(&ticks, &config) {
            for i in 0..3 {
                prop_assert!(!prev[i] || state.contact_latches[i]);
            }
            prev = state.contact_latches;
        }
    }

    #[test]
    fn overload_always_halts(
        prefix in proptest::collection::vec(tick(), 0..200),
        over in 1200.0001..1e5f64,
        leg in 0usize..3,
    ) {
        let config = cfg();
        let mut prefix = prefix;
        for t in &mut prefix {
            for f in &mut t.forces {
                *f = f.min(config.f_safety);
            }
            t.at_limit = [false; 3];
            t.drill_feed = 0.0;
        }
        let history = run_fsm(&prefix, &config);
        let state = history.last().map(|h| h.0).unwrap_or_default();
        prop_assume!(!state.phase.is_halted());
        let mut forces = [0.0; 3];
        forces[leg] = over;
        let (next, cmd) = fsm_step(&state, &forces_only(forces, prefix.len(), &config), &config);
        prop_assert_eq!(next.phase, Phase::Halted(HaltReason::SafetyOverload));
        prop_assert!(cmd.is_all_stop());
    }

    #[test]
    fn halted_states_only_stop(ticks in proptest::collection::vec(tick(), 1..300)) {
        let config = cfg();
        for (state, cmd) in run_fsm(&ticks, &config) {
            if state.phase.is_halted() {
                prop_assert!(cmd.is_all_stop());
            }
        }
    }

    #[test]
    fn controller_is_deterministic(ticks in proptest::collection::vec(tick(), 1..300)) {
        let config = cfg();
        prop_assert_eq!(run_fsm(&ticks, &config), run_fsm(&ticks, &config));
    }

    #[test]
    fn thresholds_must_be_ordered(a in 0.1..2000.0f64, b in 0.1..2000.0f64, c in 0.1..2000.0f64) {
        let config = ControllerConfig { f_contact: a, f_brace: b, f_safety: c, ..ControllerConfig::default() };
        prop_assert_eq!(config.validate().is_ok(), a < b && b < c);
    }

    #[test]
    fn bracing_order_does_not_matter(
        delays in proptest::array::uniform3(0usize..40),
    ) {
        // Leg i reaches contact force at tick delays[i] after opening.
        let config = cfg();
        let mut state = ControllerState::default();
        let (s, _) = fsm_step(&state, &forces_only([0.0; 3], 0, &config), &config);
        state = s;
        prop_assert_eq!(state.phase, Phase::InitialBracing);
        let last = *delays.iter().max().unwrap();
        for k in 0..=last + 1 {
            let forces = delays.map(|d| if k >= d { config.f_contact } else { 0.0 });
            let (next, _) = fsm_step(&state, &forces_only(forces, k + 1, &config), &config);
            state = next;
            let want = if k >= last { Phase::HardBracing } else { Phase::InitialBracing };
            prop_assert_eq!(state.phase, want, "tick {}", k);
        }
    }

    #[test]
    fn ratios_are_normalized(f in proptest::array::uniform3(0.0..1e4f64)) {
        let r = force_ratios(f[0], f[1], f[2]);
        if f.iter().sum::<f64>() > 0.0 {
            prop_assert!((r.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(r.iter().all(|&x| (0.0..=1.0).contains(&x)));
        } else {
            prop_assert_eq!(r, [0.0; 3]);
        }
    }

    #[test]
    fn contact_is_unilateral(depth in -0.1..0.1f64, rate in -5.0..5.0f64) {
        let p = ContactParams::default();
        let n = contact_force(depth, rate, &p);
        prop_assert!(n >= 0.0);
        if depth <= 0.0 {
            prop_assert_eq!(n, 0.0);
        }
    }

    #[test]
    fn friction_stays_in_cone(n in 0.0..5e3f64, v in -10.0..10.0f64, mu in 0.0..1.5f64, v_reg in 1e-6..1e-1f64) {
        let t = friction_force(n, v, mu, v_reg);
        prop_assert!(t.abs() <= mu * n + 1e-9);
        prop_assert!(t * v <= 0.0);
    }

    #[test]
    fn equilibrium_forces_respect_cones(
        angles in proptest::array::uniform3(0.0..std::f64::consts::TAU),
        mu in 0.0..1.0f64,
        load in proptest::array::uniform3(-200.0..200.0f64),
    ) {
        let contacts: Vec<ContactPoint> = angles
            .iter()
            .map(|&a| {
                let dir = Vec2::new(a.cos(), a.sin());
                ContactPoint { point: dir, normal: -dir, mu }
            })
            .collect();
        let report = solve_contact_equilibrium(Vec2::zeros(), &contacts, Wrench::new(load[0], load[1], load[2]))
            .unwrap();
        for (n, t) in report.normal_forces.iter().zip(&report.tangential_forces) {
            prop_assert!(*n >= 0.0);
            prop_assert!(t.abs() <= mu * n + 1e-9);
        }
        let idle = solve_contact_equilibrium(Vec2::zeros(), &contacts, Wrench::ZERO).unwrap();
        prop_assert!(idle.supported);
        prop_assert_eq!((idle.residual_force, idle.residual_moment), (0.0, 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn workspace_is_execution_independent(
        jitter in proptest::array::uniform6(-0.15..0.15f64),
        radius in 0.7..1.0f64,
    ) {
        let base = [(-0.5, 0.75), (0.9, 0.0), (-0.5, -0.75)];
        let anchors = [0, 1, 2].map(|i| {
            let (x, y) = base[i];
            Vec2::new(x * radius + jitter[2 * i], y * radius + jitter[2 * i + 1])
        });
        let params = RobotParams { theta_min: 0.0, theta_max: std::f64::consts::PI, ..RobotParams::default() };
        let seq = workspace_region_with(&anchors, &params, 0.02, Execution::Sequential).unwrap();
        let par = workspace_region_with(&anchors, &params, 0.02, Execution::Parallel).unwrap();
        prop_assert_eq!(seq, par);
    }

    #[test]
    fn passive_energy_never_grows(
        speed in 0.2..1.5f64,
        heading in -0.6..0.6f64,
        spin in -0.5..0.5f64,
        mu in 0.0..1.0f64,
    ) {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/pentagon_drill.json");
        let mut inputs = load_scenario(&path).unwrap().inputs;
        inputs.sim.gravity = 0.0;
        inputs.sim.hold_mode = HoldMode::NeverHeld;
        inputs.environment.contact.friction_mu = mu;
        inputs.environment.drill.base_length = 0.2;
        let mut sim = inputs.simulator().unwrap();
        sim.controller_state_mut().phase = Phase::Halted(HaltReason::Complete);
        let direction = -std::f64::consts::FRAC_PI_2 + heading;
        let body = sim.body_mut();
        body.vx = speed * direction.cos();
        body.vy = speed * direction.sin();
        body.omega = spin;
        let e0 = sim.mechanical_energy();
        let mut prev = e0;
        let mut touched = false;
        for _ in 0..600 {
            sim.step().unwrap();
            let e = sim.mechanical_energy();
            prop_assert!(e <= prev + 1e-9 * e0, "energy rose from {} to {} at t={}", prev, e, sim.time());
            touched |= sim.contacts().iter().any(|c| c.in_contact);
            prev = e;
        }
        prop_assert!(touched, "body never reached a wall");
    }
}
