//! Exact-vs-effective mean-phonon comparison at the figure parameters, for
//! all three axial frequencies. Run in release mode.

use std::time::Instant;

use tapertrap::dynamics::{record_fig2, PropagationSpec};
use tapertrap::fock::ModeSpace;
use tapertrap::model::{DriveConfig, TrapConfig};

fn main() {
    let space = ModeSpace::without_spin(40, 12).unwrap();
    let drive = DriveConfig::classical(700e-24, std::f64::consts::TAU * 2.4e6).unwrap();
    let spec = PropagationSpec::new(8e-3, 33).unwrap();

    let mut finals = Vec::new();
    for freq_z in [60e3, 100e3, 140e3] {
        let trap = TrapConfig::from_lab_units(1.2e6, 1.0e6, freq_z, 0.05, 40.0, 1.0).unwrap();
        let t0 = Instant::now();
        let rec = record_fig2(&trap, &drive, space, &spec).unwrap();
        let mut worst = 0.0f64;
        let mut worst_rel = 0.0f64;
        let mut running_max = 0.0f64;
        let mut tol_ok = true;
        for j in 0..rec.exact.times.len() {
            let e = rec.exact.mean_nx[j];
            let f = rec.effective.mean_nx[j];
            running_max = running_max.max(e);
            let diff = (e - f).abs();
            worst = worst.max(diff);
            if running_max > 0.0 {
                worst_rel = worst_rel.max(diff / running_max.max(1e-12));
            }
            if diff > (0.15f64).max(0.1 * running_max) {
                tol_ok = false;
            }
        }
        let drift = rec
            .exact
            .norm
            .iter()
            .fold(0.0f64, |m, n| m.max((n - 1.0).abs()));
        let leak = rec
            .exact
            .top_level_population
            .iter()
            .fold(0.0f64, |m, v| m.max(*v));
        println!(
            "wz={:>3}kHz: nx_end exact={:.4} eff={:.4} | maxdiff={:.3e} relmax={:.3e} ok={} | drift={:.2e} leak={:.2e} wall={:?}",
            freq_z / 1e3,
            rec.exact.mean_nx.last().unwrap(),
            rec.effective.mean_nx.last().unwrap(),
            worst,
            worst_rel,
            tol_ok,
            drift,
            leak,
            t0.elapsed()
        );
        // print the trajectory shape
        for j in (0..rec.exact.times.len()).step_by(4) {
            print!(
                "  t={:.1}ms {:.3}/{:.3}",
                rec.exact.times[j] * 1e3,
                rec.exact.mean_nx[j],
                rec.effective.mean_nx[j]
            );
        }
        println!();
        finals.push(*rec.exact.mean_nx.last().unwrap());
    }
    println!(
        "final ordering decreasing with wz: {}",
        finals[0] > finals[1] && finals[1] > finals[2]
    );
}
