//! Experiment descriptions: presets, config keys, validation.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use fracsource::forward::{ProblemConfig, TemporalSource};
use fracsource::invert::{bases, LmSettings};
use fracsource::mlf::{evaluators, TimeGrid};
use fracsource::observe::{noise_models, ObservationWindow};
use fracsource::spectral::{DirichletSine, SpaceGrid, Subdomain};

use crate::config::{parse_bool, parse_f64, parse_list, parse_u64, parse_usize, Config};
use crate::expr::Expr;

/// Every recognised config key, with the help text shown by the CLI.
pub const KEYS: &[(&str, &str)] = &[
    ("preset", "base parameter set (table1 or table2)"),
    ("cases.alpha", "time orders, one per case"),
    ("cases.beta", "space orders, one per case"),
    ("cases.t1", "observation start times, one per case"),
    ("time.final", "final time T"),
    ("time.nodes", "time grid nodes"),
    ("space.nodes", "space grid nodes (odd)"),
    ("modes", "eigenmodes kept"),
    ("source.t0", "the temporal source is 1 on (0, t0) and 0 after"),
    ("omega.left", "left end of the observed subdomain"),
    ("omega.right", "right end of the observed subdomain"),
    ("epsilons", "noise levels"),
    ("seeds", "noise seeds; errors are averaged over them"),
    ("ftrue", "ftrue1, ftrue2 or an expression in x"),
    ("basis.kind", "source basis (hat, hat-clamped, pwc)"),
    ("basis.count", "number of basis functions"),
    ("lm.gamma0", "steepness of the regularization schedule"),
    ("lm.k0", "centre of the regularization schedule"),
    ("lm.eta", "discrepancy factor"),
    ("lm.k_max", "iteration cap"),
    ("lm.tau", "finite-difference step"),
    ("lm.recompute_jacobian", "rebuild the Jacobian every iteration"),
    ("noise.model", "noise model (uniform or literal)"),
    ("noise.literal_formula", "shorthand for noise.model = literal"),
    ("ml.evaluator", "Mittag-Leffler evaluator (auto, series, asymptotic, integral)"),
    ("out", "output directory or file"),
    ("forward.alpha", "time order for `forward`"),
    ("forward.beta", "space order for `forward`"),
    ("forward.phi", "initial value for `forward`, an expression in x"),
    ("forward.f", "source shape for `forward`, an expression in x"),
    ("forward.mu", "temporal source for `forward` (step, unit-theta, zero)"),
];

/// Older spelling accepted in config files.
const ALIASES: &[(&str, &str)] = &[("recompute_jacobian", "lm.recompute_jacobian")];

fn canonical(cfg: &Config) -> Result<Config> {
    let mut out = Config::default();
    for (k, v) in cfg.iter() {
        let k = ALIASES.iter().find(|(a, _)| *a == k).map_or(k, |(_, c)| *c);
        if !KEYS.iter().any(|(name, _)| *name == k) {
            bail!("unknown config key `{k}`");
        }
        if out.get(k).is_some() {
            bail!("`{k}` is set twice");
        }
        out.set(k, v);
    }
    Ok(out)
}

/// Reference source for data generation and error measurement.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    /// `x^4 + x sin(pi x)`.
    FTrue1,
    /// `exp(-pi x^2) + cos(2 pi x)`.
    FTrue2,
    Custom(Expr),
}

impl Target {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "ftrue1" => Self::FTrue1,
            "ftrue2" => Self::FTrue2,
            other => Self::Custom(Expr::parse(other)?),
        })
    }

    pub fn name(&self) -> &str {
        match self {
            Self::FTrue1 => "ftrue1",
            Self::FTrue2 => "ftrue2",
            Self::Custom(e) => e.text(),
        }
    }

    pub fn sample(&self, xs: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::FTrue1 => Ok(xs.iter().map(|&x| x.powi(4) + x * (PI * x).sin()).collect()),
            Self::FTrue2 => Ok(xs
                .iter()
                .map(|&x| (-PI * x * x).exp() + (2.0 * PI * x).cos())
                .collect()),
            Self::Custom(e) => e.sample(xs),
        }
    }
}

/// One column of the result table.
#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub label: String,
    pub alpha: f64,
    pub beta: f64,
    pub t1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub preset: Option<String>,
    pub cases: Vec<Case>,
    pub t_final: f64,
    pub t0: f64,
    pub omega: (f64, f64),
    pub epsilons: Vec<f64>,
    pub seeds: Vec<u64>,
    pub target: Target,
    pub space_nodes: usize,
    pub time_nodes: usize,
    pub modes: usize,
    pub basis_kind: String,
    pub basis_count: usize,
    pub lm: LmSettings,
    pub noise_model: String,
    pub evaluator: String,
    pub out: PathBuf,
}

fn labels(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| {
            if i < 26 {
                ((b'a' + i as u8) as char).to_string()
            } else {
                format!("case{}", i + 1)
            }
        })
        .collect()
}

impl ExperimentSpec {
    pub fn preset(name: &str) -> Result<Self> {
        let target = match name {
            "table1" => Target::FTrue1,
            "table2" => Target::FTrue2,
            other => bail!("unknown preset `{other}` (expected table1 or table2)"),
        };
        let params = [(0.5, 0.7, 0.1), (0.5, 0.7, 0.3), (0.6, 0.8, 0.1), (0.6, 0.8, 0.3)];
        let cases = labels(params.len())
            .into_iter()
            .zip(params)
            .map(|(label, (alpha, beta, t1))| Case { label, alpha, beta, t1 })
            .collect();
        Ok(Self {
            preset: Some(name.to_owned()),
            cases,
            t_final: 1.0,
            t0: 0.5,
            omega: (0.0, 0.06),
            epsilons: vec![0.0, 0.001, 0.005, 0.01],
            seeds: vec![1],
            target,
            space_nodes: 201,
            time_nodes: 401,
            modes: 40,
            basis_kind: "hat".into(),
            basis_count: 20,
            lm: LmSettings::default(),
            noise_model: "uniform".into(),
            evaluator: "auto".into(),
            out: PathBuf::from(format!("out-{name}")),
        })
    }

    /// Starts from the preset named in `cfg` (default `table1`) and applies
    /// every other key on top.
    pub fn from_config(cfg: &Config) -> Result<Self> {
        let cfg = canonical(cfg)?;
        let mut s = Self::preset(cfg.get("preset").unwrap_or("table1"))?;
        let list = |k: &str| cfg.get(k).map(|v| parse_list(k, v, parse_f64)).transpose();
        let (ca, cb, ct) = (list("cases.alpha")?, list("cases.beta")?, list("cases.t1")?);
        if ca.is_some() || cb.is_some() || ct.is_some() {
            let n = [&ca, &cb, &ct].iter().filter_map(|v| v.as_ref().map(Vec::len)).max().unwrap_or(0);
            let pick = |v: &Option<Vec<f64>>, k: &str, old: &dyn Fn(&Case) -> f64| -> Result<Vec<f64>> {
                match v {
                    Some(v) if v.len() == n => Ok(v.clone()),
                    Some(v) if v.len() == 1 => Ok(vec![v[0]; n]),
                    Some(v) => bail!("`{k}` has {} entries but the cases need {n}", v.len()),
                    None if s.cases.len() == n => Ok(s.cases.iter().map(old).collect()),
                    None => bail!("`{k}` must be given when the number of cases changes"),
                }
            };
            let a = pick(&ca, "cases.alpha", &|c| c.alpha)?;
            let b = pick(&cb, "cases.beta", &|c| c.beta)?;
            let t = pick(&ct, "cases.t1", &|c| c.t1)?;
            s.cases = labels(n)
                .into_iter()
                .enumerate()
                .map(|(i, label)| Case { label, alpha: a[i], beta: b[i], t1: t[i] })
                .collect();
        }
        for (k, v) in cfg.iter() {
            match k {
                "time.final" => s.t_final = parse_f64(k, v)?,
                "time.nodes" => s.time_nodes = parse_usize(k, v)?,
                "space.nodes" => s.space_nodes = parse_usize(k, v)?,
                "modes" => s.modes = parse_usize(k, v)?,
                "source.t0" => s.t0 = parse_f64(k, v)?,
                "omega.left" => s.omega.0 = parse_f64(k, v)?,
                "omega.right" => s.omega.1 = parse_f64(k, v)?,
                "epsilons" => s.epsilons = parse_list(k, v, parse_f64)?,
                "seeds" => s.seeds = parse_list(k, v, parse_u64)?,
                "ftrue" => s.target = Target::parse(v)?,
                "basis.kind" => s.basis_kind = v.to_owned(),
                "basis.count" => s.basis_count = parse_usize(k, v)?,
                "lm.gamma0" => s.lm.gamma0 = parse_f64(k, v)?,
                "lm.k0" => s.lm.k0 = parse_f64(k, v)?,
                "lm.eta" => s.lm.eta = parse_f64(k, v)?,
                "lm.k_max" => s.lm.k_max = parse_usize(k, v)?,
                "lm.tau" => s.lm.tau = parse_f64(k, v)?,
                "lm.recompute_jacobian" => s.lm.recompute_jacobian = parse_bool(k, v)?,
                "noise.model" => s.noise_model = v.to_owned(),
                "ml.evaluator" => s.evaluator = v.to_owned(),
                "out" => s.out = PathBuf::from(v),
                _ => {}
            }
        }
        if let Some(v) = cfg.get("noise.literal_formula") {
            let literal = parse_bool("noise.literal_formula", v)?;
            if literal {
                if cfg.get("noise.model").is_some_and(|m| m != "literal") {
                    bail!("noise.literal_formula = true contradicts noise.model");
                }
                s.noise_model = "literal".into();
            }
        }
        s.validate()?;
        Ok(s)
    }

    /// Every parameter as config text; `from_config` reproduces `self`.
    pub fn to_config(&self) -> Config {
        let list = |v: &mut dyn Iterator<Item = String>| v.collect::<Vec<_>>().join(", ");
        let mut c = Config::default();
        if let Some(p) = &self.preset {
            c.set("preset", p.as_str());
        }
        c.set("cases.alpha", list(&mut self.cases.iter().map(|c| c.alpha.to_string())));
        c.set("cases.beta", list(&mut self.cases.iter().map(|c| c.beta.to_string())));
        c.set("cases.t1", list(&mut self.cases.iter().map(|c| c.t1.to_string())));
        c.set("time.final", self.t_final.to_string());
        c.set("time.nodes", self.time_nodes.to_string());
        c.set("space.nodes", self.space_nodes.to_string());
        c.set("modes", self.modes.to_string());
        c.set("source.t0", self.t0.to_string());
        c.set("omega.left", self.omega.0.to_string());
        c.set("omega.right", self.omega.1.to_string());
        c.set("epsilons", list(&mut self.epsilons.iter().map(f64::to_string)));
        c.set("seeds", list(&mut self.seeds.iter().map(u64::to_string)));
        c.set("ftrue", self.target.name());
        c.set("basis.kind", self.basis_kind.as_str());
        c.set("basis.count", self.basis_count.to_string());
        c.set("lm.gamma0", self.lm.gamma0.to_string());
        c.set("lm.k0", self.lm.k0.to_string());
        c.set("lm.eta", self.lm.eta.to_string());
        c.set("lm.k_max", self.lm.k_max.to_string());
        c.set("lm.tau", self.lm.tau.to_string());
        c.set("lm.recompute_jacobian", self.lm.recompute_jacobian.to_string());
        c.set("noise.model", self.noise_model.as_str());
        c.set("ml.evaluator", self.evaluator.as_str());
        c.set("out", self.out.display().to_string());
        c
    }

    pub fn validate(&self) -> Result<()> {
        if self.cases.is_empty() {
            bail!("no cases to run");
        }
        if self.epsilons.is_empty() || self.seeds.is_empty() {
            bail!("need at least one noise level and one seed");
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
            bail!("noise levels must be finite and >= 0, got {e}");
        }
        if self.omega.0 != 0.0 {
            // The reconstruction support is the complement of omega in (0, 1),
            // which the bases expect to be a single interval.
            bail!("omega must start at 0, got {}", self.omega.0);
        }
        if !(self.t0 > 0.0) {
            bail!("source.t0 must be positive, got {}", self.t0);
        }
        if self.basis_count == 0 {
            bail!("basis.count must be at least 1");
        }
        self.lm.validate()?;
        bases().create(&self.basis_kind)?;
        noise_models().create(&self.noise_model)?;
        evaluators().create(&self.evaluator)?;
        let omega = self.omega()?;
        for c in &self.cases {
            self.problem(c).with_context(|| format!("case ({})", c.label))?;
            ObservationWindow::new(omega, c.t1, self.t_final)
                .with_context(|| format!("case ({})", c.label))?;
        }
        Ok(())
    }

    pub fn omega(&self) -> Result<Subdomain> {
        Ok(Subdomain::new(self.omega.0, self.omega.1)?)
    }

    pub fn problem(&self, c: &Case) -> Result<ProblemConfig> {
        Ok(ProblemConfig::new(
            c.alpha,
            Arc::new(DirichletSine::new(self.modes, c.beta)?),
            SpaceGrid::uniform(self.space_nodes)?,
            TimeGrid::uniform(self.t_final, self.time_nodes)?,
        )?)
    }

    pub fn source(&self) -> TemporalSource {
        TemporalSource::ConstantUntil { value: 1.0, t0: self.t0 }
    }
}

/// Parameters of `fracsource forward`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardSpec {
    pub alpha: f64,
    pub beta: f64,
    pub t_final: f64,
    pub time_nodes: usize,
    pub space_nodes: usize,
    pub modes: usize,
    pub mu: String,
    pub t0: f64,
    pub phi: Expr,
    pub f: Expr,
    pub evaluator: String,
    pub out: Option<PathBuf>,
}

impl ForwardSpec {
    pub fn from_config(cfg: &Config) -> Result<Self> {
        let cfg = canonical(cfg)?;
        let base = ExperimentSpec::preset("table1")?;
        let get = |k: &str| cfg.get(k);
        let num = |k: &str, d: f64| get(k).map_or(Ok(d), |v| parse_f64(k, v));
        let int = |k: &str, d: usize| get(k).map_or(Ok(d), |v| parse_usize(k, v));
        let s = Self {
            alpha: num("forward.alpha", 0.5)?,
            beta: num("forward.beta", 0.7)?,
            t_final: num("time.final", base.t_final)?,
            time_nodes: int("time.nodes", base.time_nodes)?,
            space_nodes: int("space.nodes", base.space_nodes)?,
            modes: int("modes", base.modes)?,
            mu: get("forward.mu").unwrap_or("step").to_owned(),
            t0: num("source.t0", base.t0)?,
            phi: Expr::parse(get("forward.phi").unwrap_or("0"))?,
            f: Expr::parse(get("forward.f").unwrap_or("0"))?,
            evaluator: get("ml.evaluator").unwrap_or("auto").to_owned(),
            out: get("out").map(PathBuf::from),
        };
        s.problem()?;
        s.source()?;
        evaluators().create(&s.evaluator)?;
        Ok(s)
    }

    pub fn problem(&self) -> Result<ProblemConfig> {
        Ok(ProblemConfig::new(
            self.alpha,
            Arc::new(DirichletSine::new(self.modes, self.beta)?),
            SpaceGrid::uniform(self.space_nodes)?,
            TimeGrid::uniform(self.t_final, self.time_nodes)?,
        )?)
    }

    pub fn source(&self) -> Result<TemporalSource> {
        Ok(match self.mu.as_str() {
            "step" => TemporalSource::ConstantUntil { value: 1.0, t0: self.t0 },
            "unit-theta" => TemporalSource::unit_theta(self.alpha),
            "zero" => TemporalSource::zero(),
            other => bail!("unknown temporal source `{other}` (expected step, unit-theta or zero)"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_carry_the_published_parameters() {
        for name in ["table1", "table2"] {
            let s = ExperimentSpec::preset(name).unwrap();
            assert_eq!(s.lm.gamma0, 0.8);
            assert_eq!(s.lm.k0, 4.0);
            assert_eq!(s.lm.eta, 1.01);
            assert_eq!(s.omega, (0.0, 0.06));
            assert_eq!(s.t_final, 1.0);
            assert_eq!(s.epsilons, vec![0.0, 0.001, 0.005, 0.01]);
            let cases: Vec<_> = s.cases.iter().map(|c| (c.label.as_str(), c.alpha, c.beta, c.t1)).collect();
            assert_eq!(
                cases,
                vec![("a", 0.5, 0.7, 0.1), ("b", 0.5, 0.7, 0.3), ("c", 0.6, 0.8, 0.1), ("d", 0.6, 0.8, 0.3)]
            );
            s.validate().unwrap();
        }
        assert_eq!(ExperimentSpec::preset("table2").unwrap().target, Target::FTrue2);
        assert!(ExperimentSpec::preset("table3").is_err());
    }

    #[test]
    fn config_overrides_apply_on_top_of_the_preset() {
        let cfg = Config::parse(
            "preset = table2\nlm.gamma0 = 0.5\nrecompute_jacobian = true\nseeds = 1, 2, 3\n\
             cases.alpha = 0.4\ncases.beta = 0.9\ncases.t1 = 0.2\nnoise.literal_formula = true\n",
        )
        .unwrap();
        let s = ExperimentSpec::from_config(&cfg).unwrap();
        assert_eq!(s.target, Target::FTrue2);
        assert_eq!(s.lm.gamma0, 0.5);
        assert!(s.lm.recompute_jacobian);
        assert_eq!(s.seeds, vec![1, 2, 3]);
        assert_eq!(s.cases.len(), 1);
        assert_eq!(s.cases[0].alpha, 0.4);
        assert_eq!(s.noise_model, "literal");
    }

    #[test]
    fn spec_round_trips_through_config_text() {
        let mut s = ExperimentSpec::preset("table1").unwrap();
        s.target = Target::Custom(Expr::parse("1 + x^2").unwrap());
        s.epsilons = vec![0.0, 1.0 / 3.0];
        let text = s.to_config().to_string();
        assert_eq!(ExperimentSpec::from_config(&Config::parse(&text).unwrap()).unwrap(), s);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        for bad in [
            "epsilons = -0.1",
            "lm.eta = 0.9",
            "cases.alpha = 1.5",
            "basis.kind = spline",
            "noise.model = gaussian",
            "unknown.key = 1",
            "cases.alpha = 0.5, 0.6\ncases.beta = 0.1, 0.2, 0.3",
            "cases.t1 = 1.5",
            "ftrue = sin(",
            "space.nodes = 100",
        ] {
            let cfg = Config::parse(bad).unwrap();
            assert!(ExperimentSpec::from_config(&cfg).is_err(), "{bad}");
        }
    }

    #[test]
    fn forward_spec_defaults_and_errors() {
        let s = ForwardSpec::from_config(&Config::parse("forward.phi = sin(PI*x)").unwrap()).unwrap();
        assert_eq!((s.alpha, s.beta, s.mu.as_str()), (0.5, 0.7, "step"));
        assert!(ForwardSpec::from_config(&Config::parse("forward.mu = ramp").unwrap()).is_err());
        assert!(ForwardSpec::from_config(&Config::parse("forward.alpha = 0").unwrap()).is_err());
    }
}
