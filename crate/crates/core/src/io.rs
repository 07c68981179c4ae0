//! CSV formats for sweeps, pass profiles and detector catalogs.
//!
//! Readers check the header exactly and report parse failures by line number
//! (header is line 1) and column name.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::linkapps::{DetectorCatalogEntry, PassSample};
use crate::optimizer::SweepRow;

pub const SWEEP_HEADER: [&str; 7] = ["eta", "d", "eps_star", "p_tf_star", "skr_per_window", "mu", "feasible"];
pub const PROFILE_HEADER: [&str; 3] = ["t_s", "loss_db", "background_cps"];
pub const CATALOG_HEADER: [&str; 5] = ["name", "wavelength_nm", "time_resolution_ps", "efficiency", "dark_cps"];

struct Table {
    header: &'static [&'static str],
    records: Vec<(usize, csv::StringRecord)>,
}

impl Table {
    fn read<R: Read>(reader: R, header: &'static [&'static str]) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let found = rdr.headers()?.clone();
        if found.len() != header.len() {
            return Err(Error::Csv {
                row: 1,
                column: "header".into(),
                message: format!("expected columns {}, found {}", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
            });
        }
        for (got, want) in found.iter().zip(header) {
            if got != *want {
                return Err(Error::Csv {
                    row: 1,
                    column: (*want).into(),
                    message: format!("expected column `{want}`, found `{got}`"),
                });
            }
        }
        let mut records = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            if rec.len() != header.len() {
                return Err(Error::Csv {
                    row: line,
                    column: "record".into(),
                    message: format!("expected {} fields, found {}", header.len(), rec.len()),
                });
            }
            records.push((line, rec));
        }
        Ok(Table { header, records })
    }

    fn float(&self, line: usize, rec: &csv::StringRecord, col: usize) -> Result<f64> {
        let raw = &rec[col];
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.bad(line, col, format!("`{raw}` is not a finite number"))),
        }
    }

    /// Like [`Table::float`] but also accepts `NaN` for columns that may be undefined.
    fn float_or_nan(&self, line: usize, rec: &csv::StringRecord, col: usize) -> Result<f64> {
        if rec[col].eq_ignore_ascii_case("nan") {
            Ok(f64::NAN)
        } else {
            self.float(line, rec, col)
        }
    }

    fn bool(&self, line: usize, rec: &csv::StringRecord, col: usize) -> Result<bool> {
        match &rec[col] {
            "true" | "1" => Ok(true),
            "false" | "0" => Ok(false),
            raw => Err(self.bad(line, col, format!("`{raw}` is not a boolean"))),
        }
    }

    fn bad(&self, line: usize, col: usize, message: String) -> Error {
        Error::Csv {
            row: line,
            column: self.header[col].into(),
            message,
        }
    }
}

pub fn read_sweep<R: Read>(reader: R) -> Result<Vec<SweepRow>> {
    let t = Table::read(reader, &SWEEP_HEADER)?;
    t.records
        .iter()
        .map(|(line, rec)| {
            let line = *line;
            Ok(SweepRow {
                eta: t.float(line, rec, 0)?,
                d: t.float(line, rec, 1)?,
                eps_star: t.float_or_nan(line, rec, 2)?,
                p_tf_star: t.float(line, rec, 3)?,
                skr_per_window: t.float_or_nan(line, rec, 4)?,
                mu: t.float_or_nan(line, rec, 5)?,
                feasible: t.bool(line, rec, 6)?,
            })
        })
        .collect()
}

pub fn write_sweep<W: Write>(writer: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.write_record([
            r.eta.to_string(),
            r.d.to_string(),
            r.eps_star.to_string(),
            r.p_tf_star.to_string(),
            r.skr_per_window.to_string(),
            r.mu.to_string(),
            r.feasible.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_profile<R: Read>(reader: R) -> Result<Vec<PassSample>> {
    let t = Table::read(reader, &PROFILE_HEADER)?;
    t.records
        .iter()
        .map(|(line, rec)| {
            let line = *line;
            Ok(PassSample {
                t_s: t.float(line, rec, 0)?,
                loss_db: t.float(line, rec, 1)?,
                background_cps: t.float(line, rec, 2)?,
            })
        })
        .collect()
}

pub fn write_profile<W: Write>(writer: W, samples: &[PassSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(PROFILE_HEADER)?;
    for s in samples {
        w.write_record([s.t_s.to_string(), s.loss_db.to_string(), s.background_cps.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_catalog<R: Read>(reader: R) -> Result<Vec<DetectorCatalogEntry>> {
    let t = Table::read(reader, &CATALOG_HEADER)?;
    t.records
        .iter()
        .map(|(line, rec)| {
            let line = *line;
            let name = &rec[0];
            if name.is_empty() {
                return Err(t.bad(line, 0, "empty detector name".into()));
            }
            let entry = DetectorCatalogEntry {
                name: name.to_string(),
                wavelength_nm: t.float(line, rec, 1)?,
                time_resolution_ps: t.float(line, rec, 2)?,
                efficiency: t.float(line, rec, 3)?,
                dark_cps: t.float(line, rec, 4)?,
            };
            if !(0.0..=1.0).contains(&entry.efficiency) {
                return Err(t.bad(line, 3, format!("efficiency {} outside [0, 1]", entry.efficiency)));
            }
            if entry.dark_cps < 0.0 {
                return Err(t.bad(line, 4, format!("negative dark rate {}", entry.dark_cps)));
            }
            if entry.time_resolution_ps <= 0.0 {
                return Err(t.bad(line, 2, format!("time resolution {} must be > 0", entry.time_resolution_ps)));
            }
            Ok(entry)
        })
        .collect()
}
