use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::ContinuousCDF;

use super::{standard_normal, Distribution, Scm, TRUNCATION};
use crate::error::{Error, Result};

/// Rows of sampled values, one column per model variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Comma-separated with a header row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

fn draw(d: &Distribution, rng: &mut ChaCha8Rng) -> f64 {
    match d {
        Distribution::Bernoulli { p } => f64::from(u8::from(rng.random::<f64>() < *p)),
        Distribution::Categorical { weights } => {
            let mut u: f64 = rng.random();
            for (i, w) in weights.iter().enumerate() {
                if u < *w {
                    return i as f64;
                }
                u -= w;
            }
            (weights.len() - 1) as f64
        }
        Distribution::Gaussian { mean, sd, .. } => {
            let std = standard_normal();
            let lo = std.cdf(-TRUNCATION);
            let hi = std.cdf(TRUNCATION);
            let u = lo + (hi - lo) * rng.random::<f64>();
            mean + sd * std.inverse_cdf(u).clamp(-TRUNCATION, TRUNCATION)
        }
    }
}

/// `n` independent draws from the model, deterministic in `seed`.
///
/// Gaussian latents are drawn from their truncated continuous law and
/// assignments are evaluated on raw values; discrete models therefore
/// match [`super::enumerate`] exactly in distribution.
pub fn sample(scm: &Scm, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Config("sample size must be at least 1".into()));
    }
    let columns: Vec<String> = scm.variable_names().into_iter().map(String::from).collect();
    let index: HashMap<&str, usize> = columns.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let derived: Vec<_> = scm
        .features()
        .iter()
        .map(|f| (&f.name, &f.expr))
        .chain(scm.output().map(|o| (&o.name, &o.expr)))
        .chain(scm.label().map(|l| (&l.name, &l.expr)))
        .map(|(name, expr)| {
            let code = expr.compile(&|v| index.get(v).copied()).map_err(|message| Error::Expr {
                context: format!("{name} = {expr}"),
                message,
            })?;
            Ok((index[name.as_str()], code, format!("{name} = {expr}")))
        })
        .collect::<Result<_>>()?;
    let mut sources = vec![scm.protected()];
    sources.extend(scm.latents());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row = vec![0.0; columns.len()];
        for (i, s) in sources.iter().enumerate() {
            row[i] = draw(&s.distribution, &mut rng);
        }
        for (slot, code, context) in &derived {
            row[*slot] = code.eval(&row).map_err(|message| Error::Expr {
                context: context.clone(),
                message,
            })?;
        }
        rows.push(row);
    }
    Ok(Dataset { columns, rows })
}
