use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::body::{integrate_step, solve_contact_forces, BodyState, SolverParams, TipContact};
use super::record::SimLogRecord;
use super::{force_ratios, DrivetrainParams, EnvironmentParams, HoldMode, SimConfig};
use crate::controller::{fsm_step, CommandSet, ControllerConfig, ControllerState, Phase, SensorSnapshot};
use crate::drivetrain::{
    limit_switch_state, linear_actuator_step, rotary_joint_step, Encoder, LimitSwitchSet, SwitchState,
};
use crate::environment::{
    contact_force, drill_reaction, friction_force, signed_penetration, ContactId, ContactState, Wrench,
};
use crate::error::{Error, Result};
use crate::geometry::{cross, perp, unit, Vec2};
use crate::kinematics::{JointState, LegId, RobotConfiguration, RobotParams};

const CONTACT_IDS: [ContactId; 3] = [ContactId::Left, ContactId::Central, ContactId::Right];

/// What happened during one physics step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub step: u64,
    pub t: f64,
    /// Phase after this step's control update.
    pub phase: Phase,
    pub snapshot: Option<SensorSnapshot>,
    pub commands: CommandSet,
    pub record: Option<SimLogRecord>,
    pub contacts: [ContactState; 3],
    pub drill: ContactState,
    pub leg_penetration: [f64; 3],
    /// The holding fixture constrained the body during this step.
    pub pinned: bool,
}

/// The simulated world: body, joints, drill, controller and sensors.
#[derive(Debug, Clone)]
pub struct Simulator {
    sim: SimConfig,
    robot: RobotParams,
    drivetrain: DrivetrainParams,
    env: EnvironmentParams,
    controller_config: ControllerConfig,
    body: BodyState,
    joints: [JointState; 3],
    drill_joint: JointState,
    encoders: [Encoder; 3],
    drill_encoder: Encoder,
    switches: [Option<LimitSwitchSet>; 3],
    controller: ControllerState,
    commands: CommandSet,
    contacts: [ContactState; 3],
    drill_contact: ContactState,
    drill_depth: f64,
    leg_depths: [f64; 3],
    step_index: u64,
    control_every: u64,
    rng: ChaCha8Rng,
    noise: Option<Normal<f64>>,
}

impl Simulator {
    pub fn new(
        sim: &SimConfig,
        robot: &RobotParams,
        drivetrain: &DrivetrainParams,
        env: &EnvironmentParams,
        controller: &ControllerConfig,
    ) -> Result<Self> {
        controller.validate()?;
        sim.validate(controller.control_period)?;
        robot.validate()?;
        drivetrain.validate()?;
        env.validate()?;
        let a = &drivetrain.actuator;
        if (robot.l_min - a.base_length).abs() > 1e-9 || (robot.l_max - a.max_length()).abs() > 1e-9 {
            return Err(Error::config(format!(
                "robot extension range [{}, {}] does not match actuator base {} + stroke {}",
                robot.l_min, robot.l_max, a.base_length, a.stroke
            )));
        }
        let (rot_left, rot_right) = sim.initial_rotations;
        if !robot.rotation_ok(LegId::Left, rot_left) || !robot.rotation_ok(LegId::Right, rot_right) {
            return Err(Error::config("sim: initial rotations lie outside the joint limits"));
        }
        let joints = [
            JointState::at(a.base_length, rot_left),
            JointState::at(a.base_length, 0.0),
            JointState::at(a.base_length, rot_right),
        ];
        let noise = if sim.sensor_noise > 0.0 {
            Some(Normal::new(0.0, sim.sensor_noise).map_err(|e| Error::config(e.to_string()))?)
        } else {
            None
        };
        let mut world = Self {
            sim: sim.clone(),
            robot: robot.clone(),
            drivetrain: *drivetrain,
            env: env.clone(),
            controller_config: controller.clone(),
            body: BodyState::at(sim.initial_pose),
            joints,
            drill_joint: JointState::default(),
            encoders: joints.map(|j| Encoder::new(drivetrain.encoder, j.rotation)),
            drill_encoder: Encoder::new(drivetrain.encoder, 0.0),
            switches: LegId::ALL.map(|leg| LimitSwitchSet::for_leg(robot, leg)),
            controller: ControllerState::default(),
            commands: CommandSet::all_stop(),
            contacts: CONTACT_IDS.map(|id| ContactState::free(id, Vec2::zeros(), Vec2::zeros())),
            drill_contact: ContactState::free(ContactId::Drill, Vec2::zeros(), Vec2::zeros()),
            drill_depth: 0.0,
            leg_depths: [0.0; 3],
            step_index: 0,
            control_every: (controller.control_period / sim.dt).round() as u64,
            rng: ChaCha8Rng::seed_from_u64(sim.seed),
            noise,
        };
        world.refresh_contacts();
        Ok(world)
    }

    pub fn time(&self) -> f64 {
        self.step_index as f64 * self.sim.dt
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    pub fn sim_config(&self) -> &SimConfig {
        &self.sim
    }

    pub fn robot(&self) -> &RobotParams {
        &self.robot
    }

    pub fn environment(&self) -> &EnvironmentParams {
        &self.env
    }

    pub fn controller_config(&self) -> &ControllerConfig {
        &self.controller_config
    }

    pub fn body(&self) -> &BodyState {
        &self.body
    }

    pub fn body_mut(&mut self) -> &mut BodyState {
        &mut self.body
    }

    pub fn joints(&self) -> &[JointState; 3] {
        &self.joints
    }

    pub fn joints_mut(&mut self) -> &mut [JointState; 3] {
        &mut self.joints
    }

    pub fn controller_state(&self) -> &ControllerState {
        &self.controller
    }

    pub fn controller_state_mut(&mut self) -> &mut ControllerState {
        &mut self.controller
    }

    pub fn contacts(&self) -> &[ContactState; 3] {
        &self.contacts
    }

    pub fn drill_contact(&self) -> &ContactState {
        &self.drill_contact
    }

    pub fn configuration(&self) -> RobotConfiguration {
        RobotConfiguration {
            body_pose: self.body.pose,
            legs: self.joints,
        }
    }

    /// Whether the holding fixture constrains the body right now.
    pub fn pinned(&self) -> bool {
        match self.sim.hold_mode {
            HoldMode::FixedUntilAllContact => !self.controller.contact_latches.iter().all(|&l| l),
            HoldMode::FixedUntilBraced => matches!(
                self.controller.phase,
                Phase::Opening | Phase::InitialBracing | Phase::HardBracing
            ),
            HoldMode::FixedUntilReleaseTime(t) => self.time() < t,
            HoldMode::NeverHeld => false,
        }
    }

    /// Body kinetic energy plus the elastic energy stored in the leg contacts.
    pub fn mechanical_energy(&self) -> f64 {
        let k = self.env.contact.stiffness;
        let elastic: f64 = LegId::ALL
            .iter()
            .map(|&leg| {
                let d = signed_penetration(self.tip_geometry(leg).2, &self.env.tunnel)
                    .depth
                    .max(0.0);
                0.5 * k * d * d
            })
            .sum();
        self.body.kinetic_energy(self.robot.body_mass, self.robot.body_inertia) + elastic
    }

    fn tip_geometry(&self, leg: LegId) -> (Vec2, Vec2, Vec2) {
        let config = self.configuration();
        let mount = config.mount_point(leg, &self.robot);
        let dir = unit(config.leg_heading(leg));
        let tip = mount + self.joints[leg.index()].extension * dir;
        (mount, dir, tip)
    }

    /// Tip velocity produced by the joints alone.
    fn joint_tip_velocity(&self, leg: LegId, mount: Vec2, dir: Vec2, tip: Vec2) -> Vec2 {
        let j = &self.joints[leg.index()];
        let mut v = j.extension_rate * dir;
        if leg.is_side() {
            v += j.rotation_rate * perp(tip - mount);
        }
        v
    }

    fn drill_geometry(&self) -> (Vec2, Vec2) {
        let axis = unit(self.body.pose.phi + std::f64::consts::PI + self.drill_joint.rotation);
        let bit = self.body.pose.position() + (self.env.drill.base_length + self.drill_joint.extension) * axis;
        (axis, bit)
    }

    /// Recomputes the contact states from the current positions and velocities.
    pub fn refresh_contacts(&mut self) {
        let contact = self.env.contact;
        for leg in LegId::ALL {
            let i = leg.index();
            let (mount, dir, tip) = self.tip_geometry(leg);
            let pen = signed_penetration(tip, &self.env.tunnel);
            self.leg_depths[i] = pen.depth;
            let mut state = ContactState::free(CONTACT_IDS[i], tip, pen.normal);
            if pen.depth > 0.0 {
                let v_tip = self.body.point_velocity(tip) + self.joint_tip_velocity(leg, mount, dir, tip);
                let n = contact_force(pen.depth, -pen.normal.dot(&v_tip), &contact);
                if n > 0.0 {
                    state.in_contact = true;
                    state.normal_force = n;
                    state.tangential_force = friction_force(
                        n,
                        perp(pen.normal).dot(&v_tip),
                        contact.friction_mu,
                        contact.regularization_velocity,
                    );
                }
            }
            self.contacts[i] = state;
        }

        let (axis, bit) = self.drill_geometry();
        let pen = signed_penetration(bit, &self.env.tunnel);
        self.drill_depth = pen.depth;
        let f = drill_reaction(pen.depth, self.commands.drill_rotation_on, &self.env.drill, &contact);
        let mut drill = ContactState::free(ContactId::Drill, bit, -axis);
        if f > 0.0 {
            drill.in_contact = true;
            drill.normal_force = f;
        }
        self.drill_contact = drill;
    }

    /// Sensor readings for the current state.
    pub fn sense(&mut self) -> SensorSnapshot {
        let mut leg_forces = self.contacts.map(|c| c.normal_force);
        let mut drill_force = self.drill_contact.normal_force;
        if let Some(noise) = self.noise {
            for f in &mut leg_forces {
                *f = (*f + noise.sample(&mut self.rng)).max(0.0);
            }
            drill_force = (drill_force + noise.sample(&mut self.rng)).max(0.0);
        }
        let mut joint_states = self.joints;
        for leg in LegId::SIDES {
            let i = leg.index();
            joint_states[i].rotation = self.encoders[i].read(self.joints[i].rotation);
        }
        let max_len = self.drivetrain.actuator.max_length();
        SensorSnapshot {
            time: self.time(),
            leg_forces,
            drill_force,
            joint_states,
            limit_switches: LegId::ALL.map(|leg| match &self.switches[leg.index()] {
                Some(s) => limit_switch_state(self.joints[leg.index()].rotation, s),
                None => SwitchState::None,
            }),
            extension_at_limit: self.joints.map(|j| j.extension >= max_len - 1e-12),
            drill_angle: self.drill_encoder.read(self.drill_joint.rotation),
            drill_feed: self.drill_joint.extension,
        }
    }

    fn record(&self) -> SimLogRecord {
        let f = self.contacts.map(|c| c.normal_force);
        let r = force_ratios(f[0], f[1], f[2]);
        SimLogRecord {
            t: self.time(),
            phase: self.controller.phase,
            f_left: f[0],
            f_center: f[1],
            f_right: f[2],
            f_drill: self.drill_contact.normal_force,
            l_left: self.joints[0].extension,
            l_center: self.joints[1].extension,
            l_right: self.joints[2].extension,
            theta_left: self.joints[0].rotation,
            theta_right: self.joints[2].rotation,
            drill_depth: self.drill_depth,
            body_x: self.body.pose.x,
            body_y: self.body.pose.y,
            body_phi: self.body.pose.phi,
            force_ratio_left: r[0],
            force_ratio_center: r[1],
            force_ratio_right: r[2],
        }
    }

    fn actuate(&mut self) {
        let dt = self.sim.dt;
        let dtp = self.drivetrain;
        for leg in LegId::ALL {
            let i = leg.index();
            let (mount, dir, tip) = self.tip_geometry(leg);
            let force = self.contacts[i].force();
            let mut joint = self.joints[i];
            if let Some(switches) = &self.switches[i] {
                let side = if leg == LegId::Left { 0 } else { 1 };
                let target = self.commands.rotation_targets.map_or(joint.rotation, |t| t[side]);
                let gated = switches.gate_command(joint.rotation, target);
                let torque = cross(tip - mount, force);
                joint = rotary_joint_step(joint, gated, torque, dt, &dtp.gearbox, dtp.rotation_rate_limit);
            }
            joint = linear_actuator_step(
                joint,
                self.commands.extension_velocities[i],
                -force.dot(&dir),
                dt,
                &dtp.actuator,
            );
            self.joints[i] = joint;
        }

        let target = self.commands.drill_align_target.unwrap_or(self.drill_joint.rotation);
        let drill = rotary_joint_step(self.drill_joint, target, 0.0, dt, &dtp.gearbox, dtp.rotation_rate_limit);
        let d = &self.env.drill;
        let v = self.commands.drill_feed_velocity.clamp(-d.feed_speed, d.feed_speed);
        let feed = (drill.extension + v * dt).clamp(0.0, d.stroke);
        self.drill_joint = JointState {
            extension: feed,
            extension_rate: (feed - drill.extension) / dt,
            ..drill
        };
    }

    fn advance_body(&mut self, pinned: bool) -> Result<()> {
        let robot = &self.robot;
        let contact = self.env.contact;
        let center = self.body.pose.position();
        let gravity = Wrench::new(0.0, -robot.body_mass * self.sim.gravity, 0.0);
        let (axis, bit) = self.drill_geometry();
        let drill_pen = signed_penetration(bit, &self.env.tunnel);
        let drill_force = drill_reaction(
            drill_pen.depth,
            self.commands.drill_rotation_on,
            &self.env.drill,
            &contact,
        );
        let external = gravity + Wrench::from_force_at(-drill_force * axis, bit, center);
        if pinned {
            self.body = integrate_step(
                self.body,
                external,
                self.sim.dt,
                robot.body_mass,
                robot.body_inertia,
                true,
            )?;
            return Ok(());
        }

        let mut tips = Vec::with_capacity(3);
        let mut initial = Vec::with_capacity(3);
        for leg in LegId::ALL {
            let (mount, dir, tip) = self.tip_geometry(leg);
            let joint_velocity = self.joint_tip_velocity(leg, mount, dir, tip);
            let v_tip = self.body.point_velocity(tip) + joint_velocity;
            let pen = signed_penetration(tip, &self.env.tunnel);
            // Tips still short of the wall enter the solve with negative depth
            // when they could cross it during this step.
            let (depth, normal) = if pen.depth > 0.0 {
                (pen.depth, pen.normal)
            } else {
                let (_, edge, dist) = self.env.tunnel.nearest_boundary_point(tip);
                (-dist, self.env.tunnel.inward_normal(edge))
            };
            let approach = -normal.dot(&v_tip);
            if depth <= 0.0 && depth + 2.0 * self.sim.dt * approach.max(0.0) <= 0.0 {
                continue;
            }
            initial.push(contact_force(depth, approach, &contact));
            tips.push(TipContact {
                r: tip - center,
                normal,
                depth,
                joint_velocity,
            });
        }
        let params = SolverParams {
            stiffness: contact.stiffness,
            damping: contact.damping,
            mu: contact.friction_mu,
            v_reg: contact.regularization_velocity,
            dt: self.sim.dt,
            mass: robot.body_mass,
            inertia: robot.body_inertia,
        };
        let forces = solve_contact_forces(&self.body, external, &tips, &initial, params);
        let mut wrench = external;
        for (tip, f) in tips.iter().zip(&forces) {
            let force = f.normal * tip.normal + f.tangential * perp(tip.normal);
            wrench += Wrench::new(force.x, force.y, cross(tip.r, force));
        }
        self.body = integrate_step(
            self.body,
            wrench,
            self.sim.dt,
            robot.body_mass,
            robot.body_inertia,
            false,
        )?;
        Ok(())
    }

    /// One physics step: contacts, control on control ticks, log on log
    /// ticks, actuation, then body dynamics.
    pub fn step(&mut self) -> Result<StepReport> {
        let k = self.step_index;
        let t = self.time();
        self.refresh_contacts();

        let mut snapshot = None;
        if k.is_multiple_of(self.control_every) {
            let s = self.sense();
            let (state, commands) = fsm_step(&self.controller, &s, &self.controller_config);
            self.controller = state;
            self.commands = commands;
            snapshot = Some(s);
        }
        let record = k
            .is_multiple_of(u64::from(self.sim.log_decimation))
            .then(|| self.record());
        let report = StepReport {
            step: k,
            t,
            phase: self.controller.phase,
            snapshot,
            commands: self.commands,
            record,
            contacts: self.contacts,
            drill: self.drill_contact,
            leg_penetration: self.leg_depths,
            pinned: self.pinned(),
        };

        self.actuate();
        self.advance_body(report.pinned)?;
        self.step_index += 1;
        Ok(report)
    }
}
