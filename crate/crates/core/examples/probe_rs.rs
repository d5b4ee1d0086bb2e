//! Scratch probe: RS-vs-EM agreement across the crossover (dev tool).

use ladderlab_core::special::{hardy_z, EvalConfig};

fn main() {
    let cfg = EvalConfig::default();
    // Frozen mpmath references.
    let refs = [
        (100.0, 2.692_697_056_664_463_5),
        (1000.0, 0.997_794_637_521_586_6),
        (5500.0, -1.134_219_797_467_963_4),
        (12345.6, -1.134_274_283_101_337_6),
        (50000.0, 2.970_043_337_302_320_4),
        (99999.5, -2.658_877_636_873_059_4),
    ];
    for (t, want) in refs {
        let got = hardy_z(t, &cfg).unwrap();
        println!("t = {t:>9}: got {got:+.12e}, want {want:+.12e}, diff {:+.3e}", got - want);
    }

    // Max |Z_rs - Z_em(oracle)| on a log grid in [5000, 1e5] (RS region).
    let mut worst = (0.0f64, 0.0f64);
    let n = 400;
    for i in 0..=n {
        let t = 5000.0 * (100_000.0f64 / 5000.0).powf(i as f64 / n as f64);
        let rs = hardy_z(t, &cfg).unwrap();
        let em_cfg = EvalConfig { rs_crossover: 999_999.0, ..cfg };
        let em = hardy_z(t, &em_cfg).unwrap();
        let d = (rs - em).abs();
        if d > worst.1 {
            worst = (t, d);
        }
    }
    println!("worst RS-vs-EM diff on [5e3, 1e5]: {:.3e} at t = {:.1}", worst.1, worst.0);
}
