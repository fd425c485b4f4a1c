//! User-supplied functions of `x`.

use anyhow::{anyhow, bail, Result};
use exmex::Express;

/// A validated expression in the single variable `x`, e.g.
/// `x^4 + x*sin(PI*x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    text: String,
}

impl Expr {
    pub fn parse(text: &str) -> Result<Self> {
        let e = exmex::parse::<f64>(text).map_err(|e| anyhow!("cannot parse `{text}`: {e}"))?;
        if let Some(v) = e.var_names().iter().find(|v| v.as_str() != "x") {
            bail!("`{text}`: unknown variable `{v}` (only `x` is allowed)");
        }
        let out = Self { text: text.to_owned() };
        out.sample(&[0.0, 0.5, 1.0])?;
        Ok(out)
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn sample(&self, xs: &[f64]) -> Result<Vec<f64>> {
        let e = exmex::parse::<f64>(&self.text).map_err(|e| anyhow!("{e}"))?;
        let uses_x = !e.var_names().is_empty();
        xs.iter()
            .map(|&x| {
                let v = if uses_x { e.eval(&[x]) } else { e.eval(&[]) };
                let v = v.map_err(|err| anyhow!("`{}` at x = {x}: {err}", self.text))?;
                if !v.is_finite() {
                    bail!("`{}` is not finite at x = {x}", self.text);
                }
                Ok(v)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_common_forms() {
        let e = Expr::parse("x^4 + x*sin(PI*x)").unwrap();
        let v = e.sample(&[0.5]).unwrap()[0];
        assert!((v - (0.0625 + 0.5)).abs() < 1e-15);
        assert_eq!(Expr::parse("2").unwrap().sample(&[0.1, 0.9]).unwrap(), vec![2.0, 2.0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Expr::parse("x +").is_err());
        assert!(Expr::parse("x*y").is_err());
        assert!(Expr::parse("1/x").is_err());
    }
}
