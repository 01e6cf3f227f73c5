//! Grid functions on the interior nodes, zero-extended outside the domain.

use std::io::Write;
use std::sync::Arc;

use crate::domain::DomainGrid;
use crate::error::{Error, Result};

/// One real value per interior node; implicitly zero on every other node and
/// on the whole complement of the domain.
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Arc<DomainGrid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Arc<DomainGrid>, values: Vec<f64>) -> Result<Self> {
        grid.check_len(values.len())?;
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::param("field", format!("non-finite value {bad}")));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: Arc<DomainGrid>) -> Self {
        let n = grid.interior_count();
        ScalarField {
            grid,
            values: vec![0.0; n],
        }
    }

    /// Samples `f` at the interior node coordinates.
    pub fn from_fn(grid: Arc<DomainGrid>, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let values = (0..grid.interior_count())
            .map(|i| f(grid.coord(i)))
            .collect();
        ScalarField::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<DomainGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Index of the largest value; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn scaled(&self, c: f64) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn same_grid(&self, other: &ScalarField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || self.grid.nodes() == other.grid.nodes()
    }

    /// Writes `x[,y],value` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if self.grid.dim() == 1 {
            w.write_record(["x", "value"])?;
        } else {
            w.write_record(["x", "y", "value"])?;
        }
        for (i, v) in self.values.iter().enumerate() {
            let c = self.grid.coord(i);
            if self.grid.dim() == 1 {
                w.write_record([sci(c[0]), sci(*v)])?;
            } else {
                w.write_record([sci(c[0]), sci(c[1]), sci(*v)])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a field written by [`ScalarField::write_csv`] on the same grid.
    pub fn read_csv<R: std::io::Read>(grid: Arc<DomainGrid>, input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut values = Vec::with_capacity(grid.interior_count());
        for rec in r.records() {
            let rec = rec?;
            let v = rec
                .get(rec.len().saturating_sub(1))
                .ok_or_else(|| Error::Io("empty csv row".into()))?;
            values.push(
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Io(format!("bad value {v:?}: {e}")))?,
            );
        }
        ScalarField::new(grid, values)
    }
}

/// 17 significant digits in scientific notation.
pub fn sci(v: f64) -> String {
    format!("{v:.16e}")
}
