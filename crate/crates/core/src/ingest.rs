//! Numeric CSV input and its discretization into an empirical joint table.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dist::{JointTable, Variable};
use crate::error::{Error, Result};
use crate::estimators::{BinAssignment, BinningSpec};
use crate::scm::Dataset;

/// Comma-separated, header row first, `.` as the decimal mark.
pub fn parse_csv<R: Read>(input: R) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let columns: Vec<String> = reader.headers()?.iter().map(String::from).collect();
    if columns.is_empty() || columns.iter().all(String::is_empty) {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: "missing header row".into(),
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != columns.len() {
            return Err(Error::Parse {
                line,
                column: 1,
                message: format!("expected {} fields, found {}", columns.len(), record.len()),
            });
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(i, field)| match field.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::Parse {
                    line,
                    column: i + 1,
                    message: format!("column `{}`: `{field}` is not a finite number", columns[i]),
                }),
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 2,
            column: 1,
            message: "no data rows".into(),
        });
    }
    Ok(Dataset { columns, rows })
}

pub fn read_csv(path: &Path) -> Result<Dataset> {
    parse_csv(std::fs::File::open(path)?)
}

/// How one column was mapped to a discrete variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnBinning {
    pub name: String,
    /// True when the column's distinct values were kept as categories.
    pub categorical: bool,
    pub masses: Vec<f64>,
}

/// Empirical joint over `columns`. Columns with at most `bins` distinct
/// values keep them; others get quantile bins with light bins merged.
pub fn discretize(data: &Dataset, columns: &[&str], bins: usize) -> Result<(JointTable, Vec<ColumnBinning>)> {
    if data.is_empty() {
        return Err(Error::InvalidTable("no rows to discretize".into()));
    }
    let n = data.len();
    let mut codes: Vec<Vec<usize>> = Vec::with_capacity(columns.len());
    let mut variables = Vec::with_capacity(columns.len());
    let mut report = Vec::with_capacity(columns.len());
    for &name in columns {
        let col = data.column(name)?;
        let mut distinct = col.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        let (c, labels, categorical) = if distinct.len() <= bins {
            let c: Vec<usize> = col
                .iter()
                .map(|x| distinct.binary_search_by(|v| v.total_cmp(x)).unwrap_or(0))
                .collect();
            (c, distinct.iter().map(|v| format!("{v}")).collect::<Vec<_>>(), true)
        } else {
            let a = BinAssignment::fit(&[&col], &BinningSpec::quantile(&[name], bins))?;
            let labels = (0..a.cell_count()).map(|k| format!("bin{k}")).collect();
            (a.cell_of().to_vec(), labels, false)
        };
        let arity = labels.len();
        let mut masses = vec![0.0; arity];
        for &k in &c {
            masses[k] += 1.0 / n as f64;
        }
        variables.push(Variable::new(name, arity).with_labels(labels));
        report.push(ColumnBinning {
            name: name.to_string(),
            categorical,
            masses,
        });
        codes.push(c);
    }
    let w = 1.0 / n as f64;
    let joint = JointTable::from_atoms(variables, (0..n).map(|r| (codes.iter().map(|c| c[r]).collect(), w)))?;
    Ok((joint, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_reports_bad_cells() {
        let d = parse_csv("a,b\n1,2\n3,4.5\n".as_bytes()).unwrap();
        assert_eq!(d.columns, vec!["a", "b"]);
        assert_eq!(d.rows, vec![vec![1.0, 2.0], vec![3.0, 4.5]]);
        match parse_csv("a,b\n1,2\n3,x\n".as_bytes()) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (3, 2)),
            other => panic!("{other:?}"),
        }
        assert!(parse_csv("a,b\n".as_bytes()).is_err());
    }

    #[test]
    fn discretization_keeps_rows_and_categories() {
        let rows: Vec<Vec<f64>> = (0..400).map(|i| vec![(i % 2) as f64, (i as f64).sin()]).collect();
        let d = Dataset {
            columns: vec!["z".into(), "x".into()],
            rows,
        };
        let (j, bins) = discretize(&d, &["z", "x"], 8).unwrap();
        assert!(bins[0].categorical);
        assert_eq!(j.variable("z").unwrap().arity, 2);
        assert!(!bins[1].categorical);
        assert!(bins[1].masses.iter().all(|&m| m >= 1.0 / 32.0));
        assert!((j.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
