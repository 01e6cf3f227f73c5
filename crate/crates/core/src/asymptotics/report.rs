use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::field::sci;

use super::SweepReport;

impl SweepReport {
    pub(crate) fn grid_h(&self) -> f64 {
        match self.specs.first() {
            Some(s) => s.grid().h(),
            None => crate::domain::DomainGrid::from_description(&self.grid)
                .map(|g| g.h())
                .unwrap_or(f64::NAN),
        }
    }

    /// `p,lambda_root,holder_u,holder_v,constraint`, one row per record.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["p", "lambda_root", "holder_u", "holder_v", "constraint"])?;
        for r in &self.records {
            w.write_record([
                sci(r.p),
                sci(r.lambda_root),
                sci(r.holder_u),
                sci(r.holder_v),
                sci(r.constraint),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Two-column data files `lambda_root.dat` and `holder_max.dat`.
    pub fn write_gnuplot(&self, dir: &Path) -> Result<()> {
        let mut lam = String::from("# p lambda_root\n");
        let mut hol = String::from("# p max(holder_u, holder_v)\n");
        for r in &self.records {
            lam.push_str(&format!("{} {}\n", sci(r.p), sci(r.lambda_root)));
            hol.push_str(&format!(
                "{} {}\n",
                sci(r.p),
                sci(r.holder_u.max(r.holder_v))
            ));
        }
        fs::write(dir.join("lambda_root.dat"), lam)?;
        fs::write(dir.join("holder_max.dat"), hol)?;
        Ok(())
    }
}
