//! Scratch probe: empirical RS remainder vs the C1 table (dev tool).

use ladderlab_core::special::{hardy_z, theta, EvalConfig};
use std::f64::consts::PI;

fn main() {
    let em_cfg = EvalConfig { rs_crossover: 999_999.0, ..EvalConfig::default() };
    let c0_only = EvalConfig { rs_correction_terms: 1, ..EvalConfig::default() };
    let no_corr = EvalConfig { rs_correction_terms: 0, ..EvalConfig::default() };
    println!("{:>10} {:>8} {:>13} {:>13}", "t", "p", "emp_C1", "table_C1");
    for i in 0..24 {
        let t = 9000.0 + 157.3 * i as f64;
        let em = hardy_z(t, &em_cfg).unwrap();
        let z0 = hardy_z(t, &c0_only).unwrap();
        let zraw = hardy_z(t, &no_corr).unwrap();
        let tau = (t / (2.0 * PI)).sqrt();
        let n = tau.floor();
        let p = tau - n;
        let sign = if (n as u64) % 2 == 1 { 1.0 } else { -1.0 };
        let amp = (t / (2.0 * PI)).powf(-0.25);
        // Z_em = main + sign*amp*(C0 + C1/tau + ...)
        let emp_c0 = (em - zraw) / (sign * amp);
        let emp_c1 = (em - z0) * tau / (sign * amp);
        let _ = theta(t).unwrap();
        println!("{t:>10.1} {p:>8.4} {emp_c1:>13.6e} emp_c0 = {emp_c0:+.6}");
    }
}
