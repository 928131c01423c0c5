//! Stationary transformations of raw monthly series and rolling-window slicing.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{TimeSeriesPanel, VariableKind};
use crate::matrix::ObservationMatrix;
use crate::month::{Month, MonthRange};

/// Lags, in months, applied to every variable.
pub const LAGS: [usize; 3] = [3, 6, 12];

/// Longest lag; transformed rows start this many months after the raw axis.
pub const BURN_IN_MONTHS: usize = 12;

/// Consecutive monthly observations starting at `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthlySeries {
    start: Month,
    values: Vec<f64>,
}

impl MonthlySeries {
    pub fn new(start: Month, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::SeriesTooShort { len: 0, lag: 0 });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix(format!(
                "non-finite value at {}",
                start.add_months(i as i32)
            )));
        }
        Ok(Self { start, values })
    }

    pub fn start(&self) -> Month {
        self.start
    }

    pub fn end(&self) -> Month {
        self.start.add_months(self.values.len() as i32 - 1)
    }

    pub fn range(&self) -> MonthRange {
        MonthRange::new(self.start, self.end()).expect("non-empty")
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
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    SimpleDiff,
    LogDiff,
}

impl TransformKind {
    pub fn for_variable(kind: VariableKind) -> Self {
        match kind {
            VariableKind::Rate => TransformKind::SimpleDiff,
            VariableKind::Level => TransformKind::LogDiff,
        }
    }

    fn tag(self) -> &'static str {
        match self {
            TransformKind::SimpleDiff => "sdiff",
            TransformKind::LogDiff => "ldiff",
        }
    }
}

/// One transformed column: which variable, how, at what lag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformSpec {
    pub variable: String,
    pub kind: TransformKind,
    pub lag_months: usize,
}

impl TransformSpec {
    pub fn new(variable: impl Into<String>, kind: TransformKind, lag_months: usize) -> Result<Self> {
        if !LAGS.contains(&lag_months) {
            return Err(Error::InvalidConfig(format!(
                "lag must be one of {LAGS:?}, got {lag_months}"
            )));
        }
        Ok(Self {
            variable: variable.into(),
            kind,
            lag_months,
        })
    }

    /// Column label, e.g. `hpi__ldiff12`.
    pub fn label(&self) -> String {
        format!("{}__{}{}", self.variable, self.kind.tag(), self.lag_months)
    }

    pub fn apply(&self, s: &MonthlySeries) -> Result<MonthlySeries> {
        match self.kind {
            TransformKind::SimpleDiff => simple_difference(s, self.lag_months),
            TransformKind::LogDiff => log_difference(s, self.lag_months),
        }
    }
}

/// `out[t] = s[t] − s[t − lag]`, starting `lag` months later.
pub fn simple_difference(s: &MonthlySeries, lag: usize) -> Result<MonthlySeries> {
    if lag == 0 || s.len() <= lag {
        return Err(Error::SeriesTooShort { len: s.len(), lag });
    }
    let values = s.values[lag..]
        .iter()
        .zip(&s.values)
        .map(|(now, then)| now - then)
        .collect();
    Ok(MonthlySeries {
        start: s.start.add_months(lag as i32),
        values,
    })
}

/// `out[t] = ln s[t] − ln s[t − lag]`; every value must be positive.
pub fn log_difference(s: &MonthlySeries, lag: usize) -> Result<MonthlySeries> {
    if lag == 0 || s.len() <= lag {
        return Err(Error::SeriesTooShort { len: s.len(), lag });
    }
    if let Some(i) = s.values.iter().position(|v| *v <= 0.0) {
        return Err(Error::NonPositiveValue {
            month: s.start.add_months(i as i32),
            value: s.values[i],
        });
    }
    let logs: Vec<f64> = s.values.iter().map(|v| v.ln()).collect();
    let values = logs[lag..].iter().zip(&logs).map(|(now, then)| now - then).collect();
    Ok(MonthlySeries {
        start: s.start.add_months(lag as i32),
        values,
    })
}

/// Transformed columns on a common month axis.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedPanel {
    pub axis: MonthRange,
    pub specs: Vec<TransformSpec>,
    pub matrix: ObservationMatrix,
}

/// Every variable at lags 3, 6 and 12 (simple differences for rates, log
/// differences for levels). Rows start [`BURN_IN_MONTHS`] after the raw axis
/// so every lag is defined on every row.
pub fn build_transformation_matrix(panel: &TimeSeriesPanel) -> Result<TransformedPanel> {
    let raw = panel.axis();
    if raw.len() < BURN_IN_MONTHS + 2 {
        return Err(Error::AxisTooShort {
            available: raw.len(),
            required: BURN_IN_MONTHS + 2,
        });
    }
    let axis = MonthRange::new(raw.start.add_months(BURN_IN_MONTHS as i32), raw.end).expect("long enough");
    let mut specs = Vec::with_capacity(panel.variables().len() * LAGS.len());
    let mut columns = Vec::with_capacity(specs.capacity());
    for var in panel.variables() {
        let name = &var.meta.name;
        let series = MonthlySeries::new(raw.start, var.values.clone()).map_err(|e| e.in_variable(name))?;
        let kind = TransformKind::for_variable(var.meta.kind);
        for lag in LAGS {
            let spec = TransformSpec::new(name.clone(), kind, lag)?;
            let out = spec.apply(&series).map_err(|e| e.in_variable(name))?;
            let skip = BURN_IN_MONTHS - lag;
            columns.push(out.values[skip..].to_vec());
            specs.push(spec);
        }
    }
    let labels = specs.iter().map(TransformSpec::label).collect();
    Ok(TransformedPanel {
        axis,
        specs,
        matrix: ObservationMatrix::from_columns(columns, labels)?,
    })
}

/// Windows of `window_months` advancing by `step_months`, each lying wholly
/// inside `axis`.
pub fn rolling_windows(axis: MonthRange, window_months: usize, step_months: usize) -> Result<Vec<MonthRange>> {
    if window_months == 0 || step_months == 0 {
        return Err(Error::InvalidConfig("window and step must be positive".into()));
    }
    if axis.len() < window_months {
        return Err(Error::AxisTooShort {
            available: axis.len(),
            required: window_months,
        });
    }
    let count = (axis.len() - window_months) / step_months + 1;
    Ok((0..count)
        .map(|i| {
            let start = axis.start.add_months((i * step_months) as i32);
            MonthRange::with_len(start, window_months).expect("positive window")
        })
        .collect())
}

/// Rows of `tp` inside `window`, minus columns constant over those rows.
#[derive(Debug, Clone)]
pub struct WindowSlice {
    pub matrix: ObservationMatrix,
    pub dropped: Vec<String>,
}

pub fn slice_window(tp: &TransformedPanel, window: MonthRange) -> Result<WindowSlice> {
    let (Some(first), Some(last)) = (tp.axis.offset_of(window.start), tp.axis.offset_of(window.end)) else {
        return Err(Error::AxisTooShort {
            available: tp.axis.len(),
            required: window.len(),
        });
    };
    let rows = tp.matrix.slice_rows(first..last + 1)?;
    let mut keep = Vec::with_capacity(rows.n_cols());
    let mut dropped = Vec::new();
    for j in 0..rows.n_cols() {
        if rows.is_constant_column(j) {
            warn!("window {window}: dropping constant column `{}`", rows.label(j));
            dropped.push(rows.label(j).to_owned());
        } else {
            keep.push(j);
        }
    }
    if keep.is_empty() {
        return Err(Error::InvalidMatrix(format!("every column is constant in window {window}")));
    }
    Ok(WindowSlice {
        matrix: rows.select_columns(&keep),
        dropped,
    })
}
