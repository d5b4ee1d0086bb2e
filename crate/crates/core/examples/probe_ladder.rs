//! Scratch probe: ladder solve quality and the increment laws (dev tool).

use ladderlab_core::ladder::{solve_ladder, EnergyTable};
use ladderlab_core::special::EvalConfig;
use std::path::Path;
use std::time::Instant;

fn main() {
    let cfg = EvalConfig::default();
    let cache = Path::new("target/probe-energy.bin");
    let t0 = Instant::now();
    let mut energy = if cache.exists() {
        EnergyTable::load(cache, &cfg).unwrap()
    } else {
        EnergyTable::build(&cfg, 1000.0).unwrap()
    };
    energy.ensure(280_000.0).unwrap();
    energy.save(cache).unwrap();
    println!("energy table to {} in {:.1?}", energy.t_max(), t0.elapsed());

    let solve_tol = 1e-9;
    let phi1 = |t: f64| 0.5 * solve_ladder(&energy, t, solve_tol).unwrap();

    // Residuals of the defining equation.
    for &t in &[1000.0, 3000.0, 10000.0] {
        let t0 = Instant::now();
        let phi = solve_ladder(&energy, t, solve_tol).unwrap();
        let k = energy.kernel(phi).unwrap().value;
        let c = energy.cumulative(t).unwrap().value;
        println!(
            "T = {t:>7}: phi = {phi:.6}, phi1/T = {:.6}, residual = {:.3e}  ({:.1?})",
            0.5 * phi / t,
            (k - c).abs() / c,
            t0.elapsed()
        );
    }

    // Eq (1.1) integral form: |Δphi1·lnT - ∫Z²| / ∫Z².
    for (t, u) in [(1000.0, 100.0), (10000.0, 1000.0)] {
        let dphi = phi1(t + u) - phi1(t);
        let int_z2 = energy.cumulative(t + u).unwrap().value - energy.cumulative(t).unwrap().value;
        let dev = (dphi * t.ln() - int_z2).abs() / int_z2;
        println!("eq1.1 (T={t}, U={u}): deviation = {:.4}", dev);
    }

    // Eq (3.3) increments at T = 1e4.
    let t: f64 = 10_000.0;
    println!("-- increments --");
    for u in [t.powf(0.4), t / t.ln().powi(2)] {
        let d1 = phi1(t + u) - phi1(t);
        let d2 = phi1(phi1(t + u)) - phi1(phi1(t));
        println!(
            "U = {u:>8.3}: n=0 dev = {:+.4}, n=1 dev = {:+.4}",
            d1 / u - 1.0,
            d2 / u - 1.0
        );
    }
}
