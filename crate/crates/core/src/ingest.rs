//! Loading and writing monthly variable panels.
//!
//! A panel is a wide CSV (`month,<var1>,<var2>,…` with `YYYY-MM` rows) plus a
//! JSON metadata file `{"variables":[{"name","kind","category"}]}` giving each
//! variable's transformation kind. Scenario panels use the same files; their
//! launch month is supplied separately.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::month::{Month, MonthRange};
use crate::transform::MonthlySeries;

/// Rates are differenced directly, levels in logs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableKind {
    Rate,
    Level,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableMeta {
    pub name: String,
    pub kind: VariableKind,
    pub category: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MetadataFile {
    variables: Vec<VariableMeta>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelVariable {
    pub meta: VariableMeta,
    /// One value per month of the panel axis.
    pub values: Vec<f64>,
}

/// Gap-free monthly observations of named variables on a shared axis.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesPanel {
    axis: MonthRange,
    variables: Vec<PanelVariable>,
}

impl TimeSeriesPanel {
    pub fn new(axis: MonthRange, variables: Vec<PanelVariable>) -> Result<Self> {
        let mut seen = HashSet::new();
        for v in &variables {
            if !seen.insert(v.meta.name.as_str()) {
                return Err(Error::InvalidMatrix(format!("duplicate variable `{}`", v.meta.name)));
            }
            if v.values.len() != axis.len() {
                return Err(Error::LengthMismatch {
                    left: axis.len(),
                    right: v.values.len(),
                }
                .in_variable(&v.meta.name));
            }
            if let Some(i) = v.values.iter().position(|x| !x.is_finite()) {
                return Err(Error::InvalidMatrix(format!(
                    "non-finite value for `{}` at {}",
                    v.meta.name,
                    axis.start.add_months(i as i32)
                )));
            }
        }
        Ok(Self { axis, variables })
    }

    pub fn axis(&self) -> MonthRange {
        self.axis
    }

    pub fn variables(&self) -> &[PanelVariable] {
        &self.variables
    }

    pub fn variable(&self, name: &str) -> Option<&PanelVariable> {
        self.variables.iter().find(|v| v.meta.name == name)
    }

    pub fn series(&self, name: &str) -> Option<MonthlySeries> {
        self.variable(name)
            .map(|v| MonthlySeries::new(self.axis.start, v.values.clone()).expect("validated"))
    }
}

/// A hypothetical panel whose values after `launch` are projections.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioPanel {
    pub panel: TimeSeriesPanel,
    pub launch: Month,
}

impl ScenarioPanel {
    pub fn new(panel: TimeSeriesPanel, launch: Month) -> Result<Self> {
        let axis = panel.axis();
        if !axis.contains(launch) {
            return Err(Error::LaunchOutsideAxis {
                launch,
                start: axis.start,
                end: axis.end,
            });
        }
        Ok(Self { panel, launch })
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

/// Loads a panel from its CSV and metadata files.
pub fn load_panel(data_path: &Path, meta_path: &Path) -> Result<TimeSeriesPanel> {
    let meta = read_metadata(open(meta_path)?).map_err(|e| match e {
        Error::Parse { message, .. } => Error::Parse {
            line: 0,
            message: format!("{}: {message}", meta_path.display()),
        },
        other => other,
    })?;
    read_panel(open(data_path)?, &meta)
}

pub fn load_scenario(data_path: &Path, meta_path: &Path, launch: Month) -> Result<ScenarioPanel> {
    ScenarioPanel::new(load_panel(data_path, meta_path)?, launch)
}

pub fn read_metadata(reader: impl Read) -> Result<Vec<VariableMeta>> {
    let file: MetadataFile = serde_json::from_reader(reader).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    Ok(file.variables)
}

/// Parses panel CSV text against already-loaded metadata.
pub fn read_panel(reader: impl Read, meta: &[VariableMeta]) -> Result<TimeSeriesPanel> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if header.get(0) != Some("month") {
        return Err(Error::Parse {
            line: 1,
            message: "first header column must be `month`".into(),
        });
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    if names.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "no variable columns".into(),
        });
    }
    let meta_by_name: HashMap<&str, &VariableMeta> = meta.iter().map(|m| (m.name.as_str(), m)).collect();
    let mut metas = Vec::with_capacity(names.len());
    let mut seen = HashSet::new();
    for name in &names {
        if !seen.insert(name.as_str()) {
            return Err(Error::Parse {
                line: 1,
                message: format!("duplicate column `{name}`"),
            });
        }
        let m = meta_by_name
            .get(name.as_str())
            .ok_or_else(|| Error::MissingMetadata(name.clone()))?;
        metas.push((*m).clone());
    }

    let mut rows: Vec<(Month, Vec<f64>)> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != names.len() + 1 {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", names.len() + 1, record.len()),
            });
        }
        let month: Month = record[0].parse().map_err(|e: crate::month::ParseMonthError| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let values = record
            .iter()
            .skip(1)
            .zip(&names)
            .map(|(field, name)| {
                let v: f64 = field.parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("`{field}` is not a number (column `{name}`)"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        line,
                        message: format!("non-finite value in column `{name}`"),
                    });
                }
                Ok(v)
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push((month, values));
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 2,
            message: "no data rows".into(),
        });
    }
    rows.sort_by_key(|(m, _)| *m);
    for pair in rows.windows(2) {
        let (prev, next) = (pair[0].0, pair[1].0);
        if prev == next {
            return Err(Error::DuplicateMonth(next));
        }
        if prev.add_months(1) != next {
            return Err(Error::GapInSeries {
                label: names[0].clone(),
                month: prev.add_months(1),
            });
        }
    }
    let axis = MonthRange::new(rows[0].0, rows[rows.len() - 1].0).expect("sorted");
    let variables = metas
        .into_iter()
        .enumerate()
        .map(|(i, meta)| PanelVariable {
            meta,
            values: rows.iter().map(|(_, v)| v[i]).collect(),
        })
        .collect();
    TimeSeriesPanel::new(axis, variables)
}

/// Writes panel CSV. Values use the shortest representation that parses back
/// to the same number.
pub fn write_panel_csv(panel: &TimeSeriesPanel, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["month".to_owned()];
    header.extend(panel.variables.iter().map(|v| v.meta.name.clone()));
    let csv_err = |e: csv::Error| Error::Parse {
        line: 0,
        message: e.to_string(),
    };
    w.write_record(&header).map_err(csv_err)?;
    for (i, month) in panel.axis.iter().enumerate() {
        let mut row = vec![month.to_string()];
        row.extend(panel.variables.iter().map(|v| v.values[i].to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<panel csv>", e))?;
    Ok(())
}

pub fn write_metadata(panel: &TimeSeriesPanel, writer: impl Write) -> Result<()> {
    let file = MetadataFile {
        variables: panel.variables.iter().map(|v| v.meta.clone()).collect(),
    };
    serde_json::to_writer_pretty(writer, &file).map_err(|e| Error::Parse {
        line: 0,
        message: e.to_string(),
    })
}

/// Writes the CSV and metadata files that [`load_panel`] reads.
pub fn write_panel(panel: &TimeSeriesPanel, data_path: &Path, meta_path: &Path) -> Result<()> {
    let data = File::create(data_path).map_err(|e| Error::io(data_path, e))?;
    write_panel_csv(panel, BufWriter::new(data))?;
    let mut meta = BufWriter::new(File::create(meta_path).map_err(|e| Error::io(meta_path, e))?);
    write_metadata(panel, &mut meta)?;
    meta.write_all(b"\n")
        .and_then(|_| meta.flush())
        .map_err(|e| Error::io(meta_path, e))
}
