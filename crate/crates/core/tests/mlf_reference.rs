//! Mittag-Leffler accuracy against the frozen arbitrary-precision tables in
//! `tests/data` (regenerate with `cargo run -p fracsource-oracle --release --bin
//! gen-ml-tables -- crates/core`), plus live spot checks against the oracle.

use fracsource::mlf::{mlf, MlParams};
use fracsource_oracle::MlOracle;

pub struct Row {
    pub alpha: f64,
    pub beta: f64,
    pub z: f64,
    pub value: f64,
}

fn load(name: &str) -> Vec<Row> {
    let path = format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    text.lines()
        .skip(1)
        .map(|line| {
            let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
            Row {
                alpha: f[0],
                beta: f[1],
                z: f[2],
                value: f[3],
            }
        })
        .collect()
}

fn worst(rows: &[Row]) -> (f64, f64, f64, f64) {
    let mut worst = (0.0, 0.0, 0.0, 0.0);
    for r in rows {
        let v = mlf(MlParams::new(r.alpha, r.beta).unwrap(), r.z).unwrap();
        let err = (v - r.value).abs();
        if err > worst.0 {
            worst = (err, r.alpha, r.beta, r.z);
        }
    }
    worst
}

#[test]
fn low_order_sweep_matches_oracle() {
    let rows = load("ml_sweep_low_order.csv");
    assert!(rows.len() >= 7 * 201);
    let (err, a, b, z) = worst(&rows);
    println!("max abs error {err:.3e} at alpha={a} beta={b} z={z}");
    assert!(err <= 1e-10, "max abs error {err:.3e} at alpha={a} beta={b} z={z}");
}

#[test]
fn frozen_table_agrees_with_live_oracle() {
    let rows = load("ml_sweep_low_order.csv");
    // Cheap subset: the oracle cost grows like exp(x^{1/alpha}) bits.
    for r in rows.iter().filter(|r| r.alpha >= 0.7 && (r.z * 2.0).round() as i64 % 20 == 0) {
        let live = MlOracle::new(r.alpha, r.beta, -r.z).eval(r.z);
        assert_eq!(live.to_bits(), r.value.to_bits(), "alpha={} beta={} z={}", r.alpha, r.beta, r.z);
    }
}
