//! Probes norm drift and runtime of the propagator across tolerances.
//! Run: cargo run --release -p tapertrap --example drift_probe

use std::time::Instant;

use tapertrap::dynamics::{propagate, HarmonicHamiltonian, PropagationSpec};
use tapertrap::fock::{ModeSpace, QuantumState};
use tapertrap::model::{DriveConfig, TrapConfig};

fn main() {
    let trap = TrapConfig::from_lab_units(1.2e6, 1.0e6, 100e3, 0.05, 40.0, 1.0).unwrap();
    let drive = DriveConfig::classical(700e-24, std::f64::consts::TAU * 2.4e6).unwrap();

    // stationary eigenstate case (lab frame, no coupling)
    let bare = TrapConfig::from_lab_units(1.2e6, 1.0e6, 100e3, f64::INFINITY, 40.0, 1.0).unwrap();
    let off = DriveConfig::classical(0.0, std::f64::consts::TAU * 2.4e6).unwrap();
    let space = ModeSpace::without_spin(4, 3).unwrap();
    for rtol in [1e-10, 1e-11, 1e-12, 1e-13] {
        let source = HarmonicHamiltonian::lab(&bare, &off, space).unwrap();
        let psi0 = QuantumState::fock(space, 1, 0).unwrap();
        let spec = PropagationSpec::new(5e-5, 11)
            .unwrap()
            .with_step_control(rtol);
        let t0 = Instant::now();
        let traj = propagate(&source, &psi0, &spec).unwrap();
        let drift = traj
            .norm
            .iter()
            .fold(0.0f64, |m, n| m.max((n - 1.0).abs()));
        let dev = traj
            .mean_nx
            .iter()
            .fold(0.0f64, |m, n| m.max((n - 1.0).abs()));
        println!(
            "stationary rtol={rtol:.0e}: drift={drift:.2e} nx_dev={dev:.2e} wall={:?}",
            t0.elapsed()
        );
    }

    // fig2-like interaction-picture run, short window, production dims
    let space = ModeSpace::without_spin(40, 12).unwrap();
    for (t_final, rtol) in [(1e-3, 1e-8), (1e-3, 1e-9), (1e-3, 3e-10), (8e-3, 1e-9)] {
        let source = HarmonicHamiltonian::interaction(&trap, &drive, space).unwrap();
        let psi0 = QuantumState::ground(space);
        let spec = PropagationSpec::new(t_final, 21)
            .unwrap()
            .with_step_control(rtol);
        let t0 = Instant::now();
        match propagate(&source, &psi0, &spec) {
            Ok(traj) => {
                let drift = traj
                    .norm
                    .iter()
                    .fold(0.0f64, |m, n| m.max((n - 1.0).abs()));
                println!(
                    "fig2 t={t_final:.0e} rtol={rtol:.0e}: drift={drift:.2e} nx_end={:.4} wall={:?}",
                    traj.mean_nx.last().unwrap(),
                    t0.elapsed()
                );
            }
            Err(e) => println!("fig2 t={t_final:.0e} rtol={rtol:.0e}: ERROR {e}"),
        }
    }
}
