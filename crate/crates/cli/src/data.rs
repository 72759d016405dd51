//! CSV ingestion and intercept handling.

use std::path::Path;

use mapsel_core::linalg::least_squares_fit;
use mapsel_core::{DesignMatrix, ModelIndicator, ResponseVector};

use crate::CliError;

pub struct Dataset {
    pub names: Vec<String>,
    /// Row-major predictor values.
    pub rows: Vec<Vec<f64>>,
    pub y: Option<Vec<f64>>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn p(&self) -> usize {
        self.names.len()
    }
}

/// Reads a comma-separated file with a header row. The column named `y` is
/// the response; every other column is a predictor.
pub fn read_csv(path: &Path, require_y: bool) -> Result<Dataset, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let header = reader
        .headers()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        .clone();
    let y_col = header.iter().position(|h| h == "y");
    if require_y && y_col.is_none() {
        return Err(CliError::Input(format!("{}: no column named `y`", path.display())));
    }
    let names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != y_col)
        .map(|(_, h)| h.to_string())
        .collect();

    let mut rows = Vec::new();
    let mut y = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            CliError::Input(format!("{}: line {line}: {e}", path.display()))
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let mut row = Vec::with_capacity(names.len());
        for (i, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                CliError::Input(format!(
                    "{}: line {line}, column `{}`: not a number: {cell:?}",
                    path.display(),
                    &header[i]
                ))
            })?;
            if !v.is_finite() {
                return Err(CliError::Input(format!(
                    "{}: line {line}, column `{}`: non-finite value",
                    path.display(),
                    &header[i]
                )));
            }
            if Some(i) == y_col {
                y.push(v);
            } else {
                row.push(v);
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Input(format!("{}: no data rows", path.display())));
    }
    Ok(Dataset {
        names,
        rows,
        y: y_col.map(|_| y),
    })
}

/// Design and response after optional centering.
pub struct Prepared {
    /// `None` when there are no predictors.
    pub design: Option<DesignMatrix>,
    pub y: ResponseVector,
    pub x_means: Vec<f64>,
    pub y_mean: f64,
    pub intercept: bool,
}

fn mean(v: impl Iterator<Item = f64>, n: usize) -> f64 {
    v.sum::<f64>() / n as f64
}

/// Centering every column and the response is equivalent to fitting an
/// unpenalized intercept.
pub fn prepare(data: &Dataset, intercept: bool) -> Result<Prepared, CliError> {
    let n = data.n();
    let p = data.p();
    let y_raw = data.y.clone().unwrap_or_else(|| vec![0.0; n]);
    let (x_means, y_mean) = if intercept {
        (
            (0..p).map(|j| mean(data.rows.iter().map(|r| r[j]), n)).collect(),
            mean(y_raw.iter().copied(), n),
        )
    } else {
        (vec![0.0; p], 0.0)
    };
    let y = ResponseVector::new(y_raw.iter().map(|v| v - y_mean).collect());
    let design = if p == 0 {
        None
    } else {
        let rows: Vec<Vec<f64>> = data
            .rows
            .iter()
            .map(|r| r.iter().zip(&x_means).map(|(v, m)| v - m).collect())
            .collect();
        Some(DesignMatrix::from_rows(&rows)?)
    };
    Ok(Prepared {
        design,
        y,
        x_means,
        y_mean,
        intercept,
    })
}

impl Prepared {
    /// Residual variance of the saturated fit, `RSS / (n - r - intercept)`.
    pub fn estimate_sigma_sq(&self) -> Result<f64, CliError> {
        let n = self.y.len();
        let (rss, r) = match &self.design {
            Some(x) => {
                let all = ModelIndicator::new((0..x.p()).collect())?;
                (least_squares_fit(x, &self.y, &all)?.rss, x.rank())
            }
            None => (self.y.norm_sq(), 0),
        };
        let df = n as i64 - r as i64 - i64::from(self.intercept);
        if df <= 0 {
            return Err(CliError::Input(
                "cannot estimate sigma^2: the saturated fit leaves no residual degrees of freedom".into(),
            ));
        }
        let s2 = rss / df as f64;
        if !(s2 > 0.0) {
            return Err(CliError::Input("cannot estimate sigma^2: the saturated fit is exact".into()));
        }
        Ok(s2)
    }

    /// Intercept on the original scale for coefficients on the centered data.
    pub fn intercept_for(&self, beta: &[f64]) -> Option<f64> {
        self.intercept
            .then(|| self.y_mean - beta.iter().zip(&self.x_means).map(|(b, m)| b * m).sum::<f64>())
    }
}
