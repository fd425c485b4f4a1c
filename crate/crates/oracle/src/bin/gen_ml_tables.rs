//! Regenerates the frozen Mittag-Leffler reference tables.
//!
//! Usage: `gen-ml-tables <core-crate-dir>`
//!
//! Writes `tests/data/ml_sweep_acceptance.csv`, `tests/data/ml_sweep_low_order.csv`
//! and the coarse `src/mlf/reference_sweep.csv` embedded by `fracsource check`.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use fracsource_oracle::MlOracle;

const ACCEPTANCE_ORDERS: [f64; 5] = [0.5, 0.6, 0.7, 0.8, 1.0];
const LOW_ORDERS: [f64; 4] = [0.3, 0.5, 0.7, 1.0];

fn sweep(pairs: &[(f64, f64)], step: f64, count: usize, every: usize) -> (String, String) {
    let mut full = String::from("alpha,beta,z,value\n");
    let mut coarse = String::from("alpha,beta,z,value\n");
    for &(alpha, beta) in pairs {
        let started = Instant::now();
        let oracle = MlOracle::new(alpha, beta, step * (count - 1) as f64);
        for i in 0..count {
            let z = -(i as f64) * step;
            let v = oracle.eval(z);
            writeln!(full, "{alpha},{beta},{z:e},{v:e}").unwrap();
            if i % every == 0 {
                writeln!(coarse, "{alpha},{beta},{z:e},{v:e}").unwrap();
            }
        }
        eprintln!("alpha={alpha} beta={beta}: {:.1?}", started.elapsed());
    }
    (full, coarse)
}

fn main() {
    let root = PathBuf::from(std::env::args().nth(1).expect("usage: gen-ml-tables <core-crate-dir>"));

    let low: Vec<(f64, f64)> = LOW_ORDERS
        .iter()
        .flat_map(|&a| LOW_ORDERS.iter().map(move |&b| (a, b)))
        .filter(|&(a, b)| a == 0.3 || b == 0.3)
        .collect();
    let (low_full, _) = sweep(&low, 0.5, 201, 1);
    std::fs::write(root.join("tests/data/ml_sweep_low_order.csv"), low_full).unwrap();

    let pairs: Vec<(f64, f64)> = ACCEPTANCE_ORDERS
        .iter()
        .flat_map(|&a| ACCEPTANCE_ORDERS.iter().map(move |&b| (a, b)))
        .collect();
    let (full, coarse) = sweep(&pairs, 0.1, 1001, 10);
    std::fs::write(root.join("tests/data/ml_sweep_acceptance.csv"), full).unwrap();
    std::fs::create_dir_all(root.join("src/mlf")).unwrap();
    std::fs::write(root.join("src/mlf/reference_sweep.csv"), coarse).unwrap();
}
