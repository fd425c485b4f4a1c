//! CSV forms of the iteration history and the final reconstruction.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub residual: f64,
    pub rho: f64,
    pub err: f64,
}

impl TraceRow {
    pub fn write_csv<W: Write>(rows: &[TraceRow], mut w: W) -> Result<()> {
        writeln!(w, "k,residual,rho,err")?;
        for r in rows {
            writeln!(w, "{},{:e},{:e},{:e}", r.k, r.residual, r.rho, r.err)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Vec<TraceRow>> {
        let mut out = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(Error::Parse(format!("trace line {}: expected 4 fields", i + 1)));
            }
            out.push(TraceRow {
                k: f[0]
                    .parse()
                    .map_err(|_| Error::Parse(format!("trace line {}: bad k", i + 1)))?,
                residual: num(f[1])?,
                rho: num(f[2])?,
                err: num(f[3])?,
            });
        }
        Ok(out)
    }
}

fn num(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("not a number: `{s}`")))
}

/// `f_K` next to the reference on the spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub xs: Vec<f64>,
    pub f_k: Vec<f64>,
    pub f_true: Vec<f64>,
}

impl Reconstruction {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,f_k,f_true")?;
        for ((x, a), b) in self.xs.iter().zip(&self.f_k).zip(&self.f_true) {
            writeln!(w, "{x:e},{a:e},{b:e}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut out = Self {
            xs: Vec::new(),
            f_k: Vec::new(),
            f_true: Vec::new(),
        };
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 {
                return Err(Error::Parse(format!(
                    "reconstruction line {}: expected 3 fields",
                    i + 1
                )));
            }
            out.xs.push(num(f[0])?);
            out.f_k.push(num(f[1])?);
            out.f_true.push(num(f[2])?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        let rows = vec![
            TraceRow { k: 1, residual: 0.123456789012345, rho: 0.9168273035069, err: 0.5 },
            TraceRow { k: 2, residual: 1e-300, rho: 5e-17, err: 1.0 / 3.0 },
        ];
        let mut buf = Vec::new();
        TraceRow::write_csv(&rows, &mut buf).unwrap();
        assert_eq!(TraceRow::read_csv(&buf[..]).unwrap(), rows);

        let r = Reconstruction {
            xs: vec![0.0, 0.5, 1.0],
            f_k: vec![0.1, std::f64::consts::PI, -2.0],
            f_true: vec![0.0, 1.0 / 7.0, 1e-20],
        };
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(Reconstruction::read_csv(&buf[..]).unwrap(), r);
    }
}
