//! Runs a table of reconstructions and writes per-cell and summary files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use fracsource::forward::ForwardSolver;
use fracsource::invert::{
    bases, relative_error, InverseProblem, Reconstruction, SourceModel, StopReason, TraceRow,
};
use fracsource::mlf::evaluators;
use fracsource::observe::{add_noise_with, noise_models, ObservationData, ObservationWindow};
use rayon::prelude::*;

use crate::spec::{Case, ExperimentSpec};

/// Outcome of one (case, noise level, seed) reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub case: String,
    pub epsilon: f64,
    /// `None` for noiseless cells, which do not depend on the seed.
    pub seed: Option<u64>,
    pub delta: f64,
    pub stopping_index: usize,
    pub stop: StopReason,
    /// `E_0, ..., E_K`.
    pub residuals: Vec<f64>,
    pub err: f64,
    pub dir: PathBuf,
    /// `f_K` on the grid nodes inside the reconstruction support.
    pub f_k: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub cells: Vec<CellResult>,
    /// Seed-averaged error per (noise level, case), in spec order.
    pub table: Vec<Vec<f64>>,
    pub out: PathBuf,
}

/// Writes `bytes` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
    Ok(())
}

fn cell_dir(case: &str, eps: f64, seed: Option<u64>) -> String {
    match seed {
        Some(s) => format!("{case}_eps{eps}_seed{s}"),
        None => format!("{case}_eps{eps}"),
    }
}

struct Prepared {
    case: Case,
    problem: InverseProblem,
    clean: ObservationData,
    f_true: Vec<f64>,
}

fn prepare(spec: &ExperimentSpec, case: &Case) -> Result<Prepared> {
    let cfg = spec.problem(case)?;
    let omega = spec.omega()?;
    let eval = evaluators().create(&spec.evaluator)?;
    let solver = ForwardSolver::with_evaluator(cfg.clone(), spec.source(), eval.as_ref())?;
    let support = fracsource::spectral::Region::complement_of(&omega)?;
    let basis = bases().create(&spec.basis_kind)?.build(&support, spec.basis_count)?;
    let window = ObservationWindow::new(omega, case.t1, spec.t_final)?;
    let problem = InverseProblem::new(solver, window, basis)?;
    let xs = cfg.sgrid().nodes();
    let f_true = spec.target.sample(xs)?;
    // Data come from the reference source with f = 0 on omega.
    let masked: Vec<f64> = xs
        .iter()
        .zip(&f_true)
        .map(|(&x, &f)| if x < omega.right() { 0.0 } else { f })
        .collect();
    let clean = problem.observe(&masked)?;
    Ok(Prepared {
        case: case.clone(),
        problem,
        clean,
        f_true,
    })
}

fn run_cell(spec: &ExperimentSpec, p: &Prepared, eps: f64, seed: Option<u64>, out: &Path) -> Result<CellResult> {
    let data = match seed {
        Some(s) => {
            let model = noise_models().create(&spec.noise_model)?;
            add_noise_with(model.as_ref(), &p.clean, eps, s)?
        }
        None => p.clean.clone(),
    };
    let basis = p.problem.basis().clone();
    let (model, trace) = p.problem.run(&data, &spec.lm, &vec![0.0; basis.len()])?;
    let grid = p.problem.solver().config().sgrid();
    let support = p.problem.support();
    let err_of = |a: &[f64]| -> f64 {
        SourceModel::new(basis.clone(), a.to_vec())
            .and_then(|m| relative_error(&m.sample(grid), &p.f_true, support, grid))
            .unwrap_or(f64::NAN)
    };
    let err = p.problem.relative_error(&model, &p.f_true)?;
    let rows = trace.rows(err_of);

    let keep: Vec<usize> = (0..grid.len()).filter(|&i| support.contains_closed(grid.nodes()[i])).collect();
    let sampled = model.sample(grid);
    let recon = Reconstruction {
        xs: keep.iter().map(|&i| grid.nodes()[i]).collect(),
        f_k: keep.iter().map(|&i| sampled[i]).collect(),
        f_true: keep.iter().map(|&i| p.f_true[i]).collect(),
    };

    let dir = out.join("cells").join(cell_dir(&p.case.label, eps, seed));
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut buf = Vec::new();
    TraceRow::write_csv(&rows, &mut buf)?;
    write_atomic(&dir.join("trace.csv"), &buf)?;
    let mut buf = Vec::new();
    recon.write_csv(&mut buf)?;
    write_atomic(&dir.join("reconstruction.csv"), &buf)?;

    let c = &p.case;
    let mut meta = String::new();
    let _ = writeln!(meta, "case = {}", c.label);
    let _ = writeln!(meta, "alpha = {}\nbeta = {}\nt1 = {}", c.alpha, c.beta, c.t1);
    let _ = writeln!(meta, "ftrue = {}", spec.target.name());
    let _ = writeln!(meta, "basis = {} x {}", spec.basis_kind, spec.basis_count);
    let _ = writeln!(meta, "initial_residual = {:e}", trace.initial_residual);
    let _ = writeln!(meta, "stopping_index = {}", trace.stopping_index());
    let _ = writeln!(meta, "stop_reason = {}", trace.stop);
    let _ = writeln!(meta, "err = {err:e}");
    meta.push_str(&data.metadata());
    write_atomic(&dir.join("metadata.txt"), meta.as_bytes())?;

    Ok(CellResult {
        case: c.label.clone(),
        epsilon: eps,
        seed,
        delta: data.delta(),
        stopping_index: trace.stopping_index(),
        stop: trace.stop,
        residuals: trace.residuals(),
        err,
        dir,
        f_k: recon.f_k,
    })
}

/// Runs every (case, noise level, seed) cell on the current rayon pool and
/// writes the outputs under `spec.out`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let out = spec.out.clone();
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    write_atomic(&out.join("experiment.cfg"), spec.to_config().to_string().as_bytes())?;

    let prepared: Vec<Prepared> = spec
        .cases
        .iter()
        .map(|c| prepare(spec, c).with_context(|| format!("setting up case ({})", c.label)))
        .collect::<Result<_>>()?;

    let mut jobs = Vec::new();
    for (ci, _) in prepared.iter().enumerate() {
        for &eps in &spec.epsilons {
            if eps == 0.0 {
                jobs.push((ci, eps, None));
            } else {
                jobs.extend(spec.seeds.iter().map(|&s| (ci, eps, Some(s))));
            }
        }
    }
    let cells: Vec<CellResult> = jobs
        .par_iter()
        .map(|&(ci, eps, seed)| {
            let p = &prepared[ci];
            run_cell(spec, p, eps, seed, &out).with_context(|| {
                format!("case ({}) epsilon {eps} seed {}", p.case.label, seed.map_or("-".into(), |s| s.to_string()))
            })
        })
        .collect::<Result<_>>()?;

    let table: Vec<Vec<f64>> = spec
        .epsilons
        .iter()
        .map(|&eps| {
            spec.cases
                .iter()
                .map(|c| {
                    let errs: Vec<f64> = cells
                        .iter()
                        .filter(|r| r.case == c.label && r.epsilon == eps)
                        .map(|r| r.err)
                        .collect();
                    errs.iter().sum::<f64>() / errs.len() as f64
                })
                .collect()
        })
        .collect();

    let report = ExperimentReport { cells, table, out };
    write_atomic(&report.out.join("summary.csv"), summary_csv(spec, &report).as_bytes())?;
    write_atomic(&report.out.join("cells.csv"), cells_csv(spec, &report).as_bytes())?;
    for (ci, p) in prepared.iter().enumerate() {
        let name = format!("figure_{}.csv", p.case.label);
        write_atomic(&report.out.join(name), figure_csv(spec, &report, &prepared[ci])?.as_bytes())?;
    }
    Ok(report)
}

fn summary_csv(spec: &ExperimentSpec, r: &ExperimentReport) -> String {
    let mut s = String::from("epsilon");
    for c in &spec.cases {
        let _ = write!(s, ",{}", c.label);
    }
    s.push('\n');
    for (eps, row) in spec.epsilons.iter().zip(&r.table) {
        let _ = write!(s, "{eps}");
        for v in row {
            let _ = write!(s, ",{v:e}");
        }
        s.push('\n');
    }
    s
}

fn cells_csv(spec: &ExperimentSpec, r: &ExperimentReport) -> String {
    let mut s = String::from("case,alpha,beta,t1,epsilon,seed,delta,k,stop,err\n");
    for cell in &r.cells {
        let c = spec.cases.iter().find(|c| c.label == cell.case).expect("cell of a known case");
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{:e},{},{},{:e}",
            c.label,
            c.alpha,
            c.beta,
            c.t1,
            cell.epsilon,
            cell.seed.map_or(String::new(), |v| v.to_string()),
            cell.delta,
            cell.stopping_index,
            cell.stop,
            cell.err
        );
    }
    s
}

/// `x, f_true, f_K` per noise level (first seed) for one case.
fn figure_csv(spec: &ExperimentSpec, r: &ExperimentReport, p: &Prepared) -> Result<String> {
    let grid = p.problem.solver().config().sgrid();
    let support = p.problem.support();
    let keep: Vec<usize> = (0..grid.len()).filter(|&i| support.contains_closed(grid.nodes()[i])).collect();
    let first_seed = spec.seeds[0];
    let curves: Vec<&CellResult> = spec
        .epsilons
        .iter()
        .map(|&eps| {
            let seed = (eps != 0.0).then_some(first_seed);
            r.cells
                .iter()
                .find(|c| c.case == p.case.label && c.epsilon == eps && c.seed == seed)
                .context("missing cell for figure")
        })
        .collect::<Result<_>>()?;
    let mut s = String::from("x,f_true");
    for eps in &spec.epsilons {
        let _ = write!(s, ",eps={eps}");
    }
    s.push('\n');
    for (row, &i) in keep.iter().enumerate() {
        let _ = write!(s, "{:e},{:e}", grid.nodes()[i], p.f_true[i]);
        for c in &curves {
            let _ = write!(s, ",{:e}", c.f_k[row]);
        }
        s.push('\n');
    }
    Ok(s)
}

/// The table printed after a run: rows are noise levels, columns are cases.
pub fn format_table(spec: &ExperimentSpec, r: &ExperimentReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "relative error of f_K for {} (mean over {} seed{})",
        spec.target.name(),
        spec.seeds.len(),
        if spec.seeds.len() == 1 { "" } else { "s" }
    );
    let _ = write!(s, "{:<10}", "epsilon");
    for c in &spec.cases {
        let _ = write!(s, " {:>16}", format!("({})", c.label));
    }
    s.push('\n');
    let _ = write!(s, "{:<10}", "");
    for c in &spec.cases {
        let _ = write!(s, " {:>16}", format!("{},{},{}", c.alpha, c.beta, c.t1));
    }
    s.push('\n');
    for (eps, row) in spec.epsilons.iter().zip(&r.table) {
        let _ = write!(s, "{:<10}", eps);
        for v in row {
            let _ = write!(s, " {:>16.4e}", v);
        }
        s.push('\n');
    }
    s
}
