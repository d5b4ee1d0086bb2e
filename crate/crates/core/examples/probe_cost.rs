//! Scratch probe: per-cell cost of the energy table at various heights.

use ladderlab_core::ladder::EnergyTable;
use ladderlab_core::special::{hardy_z, EvalConfig};
use std::time::Instant;

fn main() {
    let cfg = EvalConfig::default();
    // Raw Z eval cost at several heights.
    for &t in &[500.0, 1400.0, 2000.0, 10_000.0, 50_000.0, 200_000.0, 1.0e6] {
        let n = 2000;
        let t0 = Instant::now();
        let mut acc = 0.0;
        for i in 0..n {
            acc += hardy_z(t + i as f64 * 1e-4, &cfg).unwrap();
        }
        let dt = t0.elapsed().as_secs_f64() / n as f64;
        println!("Z({t:>9}): {:.2} us/eval (acc {acc:.3})", dt * 1e6);
    }
    // Cell build cost at several heights: build small slices via ensure.
    for &base in &[1000.0, 10_000.0, 100_000.0] {
        let t0 = Instant::now();
        let mut e = EnergyTable::build(&cfg, 16.0).unwrap();
        drop(e);
        let t_setup = t0.elapsed();
        let _ = t_setup;
        let t0 = Instant::now();
        e = EnergyTable::build(&cfg, base).unwrap();
        let dt = t0.elapsed().as_secs_f64();
        println!("build to {base}: {dt:.2} s total ({:.3} ms/cell)", dt * 1e3 / base);
        drop(e);
    }
}
