use std::path::Path;

use stinger_core::scenario::load_scenario;
use stinger_core::simulator::run_scenario;

fn inputs(name: &str) -> stinger_core::simulator::ScenarioInputs {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    load_scenario(&path).unwrap().inputs
}

#[test]
fn leg_penetration_stays_shallow_in_the_mission() {
    let run = run_scenario(&inputs("pentagon_drill.json")).unwrap();
    let checks = run.summary.contact_checks;
    assert!(checks.max_leg_penetration_m < 5e-3, "{}", checks.max_leg_penetration_m);
    assert!(checks.min_normal_force_n >= 0.0);
    assert!(checks.max_cone_excess_n <= 1e-9);
}

#[test]
fn leg_penetration_stays_shallow_while_bracing_the_frame() {
    let mut s = inputs("wood_frame.json");
    s.controller.halt_after_bracing = true;
    let run = run_scenario(&s).unwrap();
    let depth = run.summary.contact_checks.max_leg_penetration_m;
    assert!(depth < 5e-3, "{depth}");
}
