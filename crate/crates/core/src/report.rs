//! Rolling-window and scenario runs, result comparison, and report files.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{cluster_variables, representative, ClusteringConfig};
use crate::error::{Error, Result};
use crate::ingest::{ScenarioPanel, TimeSeriesPanel};
use crate::matrix::standardize_columns;
use crate::month::{Month, MonthRange};
use crate::transform::{build_transformation_matrix, rolling_windows, slice_window, TransformedPanel, BURN_IN_MONTHS};

/// Rounds to 12 significant digits. Every float stored in a report passes
/// through here so that written JSON reloads to an identical value.
pub fn round_sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub id: usize,
    pub member_labels: Vec<String>,
    pub representative_label: String,
    pub representative_fallback: bool,
    pub lambda1: f64,
    pub lambda2: f64,
    /// S_c² of each member to the cluster's first component.
    pub member_similarities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowResult {
    pub window: MonthRange,
    pub n_clusters: usize,
    pub clusters: Vec<ClusterSummary>,
    pub dropped_columns: Vec<String>,
}

impl WindowResult {
    /// Labels of every clustered column.
    pub fn universe(&self) -> BTreeSet<&str> {
        self.clusters
            .iter()
            .flat_map(|c| c.member_labels.iter().map(String::as_str))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub min_count: usize,
    pub max_count: usize,
    pub mean_count: f64,
}

impl RunSummary {
    pub fn from_windows(windows: &[WindowResult]) -> Self {
        let counts = windows.iter().map(|w| w.n_clusters);
        let total: usize = counts.clone().sum();
        Self {
            min_count: counts.clone().min().unwrap_or(0),
            max_count: counts.max().unwrap_or(0),
            mean_count: if windows.is_empty() {
                0.0
            } else {
                round_sig12(total as f64 / windows.len() as f64)
            },
        }
    }
}

/// Settings echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub clustering: ClusteringConfig,
    pub window_months: usize,
    pub step_months: usize,
    pub launch: Option<Month>,
    /// Sorted favorable labels, when a list was supplied.
    pub favorable: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub windows: Vec<WindowResult>,
    pub summary: RunSummary,
}

impl RunReport {
    pub fn new(config: RunConfig, windows: Vec<WindowResult>) -> Self {
        let summary = RunSummary::from_windows(&windows);
        Self {
            config,
            windows,
            summary,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub clustering: ClusteringConfig,
    pub window_months: usize,
    pub step_months: usize,
    pub favorable: Option<HashSet<String>>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            clustering: ClusteringConfig::default(),
            window_months: 24,
            step_months: 12,
            favorable: None,
        }
    }
}

impl RunOptions {
    fn echo(&self, launch: Option<Month>) -> RunConfig {
        RunConfig {
            clustering: self.clustering.clone(),
            window_months: self.window_months,
            step_months: self.step_months,
            launch,
            favorable: self.favorable.as_ref().map(|f| {
                let mut v: Vec<String> = f.iter().cloned().collect();
                v.sort();
                v
            }),
        }
    }
}

/// Slices, filters, standardizes and clusters a single window.
pub fn cluster_window(
    tp: &TransformedPanel,
    window: MonthRange,
    cfg: &ClusteringConfig,
    favorable: Option<&HashSet<String>>,
) -> Result<WindowResult> {
    let wrap = |e: Error| Error::Window {
        start: window.start,
        end: window.end,
        source: Box::new(e),
    };
    let slice = slice_window(tp, window).map_err(wrap)?;
    let m = standardize_columns(&slice.matrix).map_err(wrap)?;
    let partition = cluster_variables(&m, cfg).map_err(wrap)?;
    let clusters: Vec<ClusterSummary> = partition
        .clusters()
        .iter()
        .enumerate()
        .map(|(id, c)| {
            let rep = representative(c, &m, favorable);
            ClusterSummary {
                id,
                member_labels: c.members().iter().map(|&j| m.label(j).to_owned()).collect(),
                representative_label: m.label(rep.column).to_owned(),
                representative_fallback: rep.fallback,
                lambda1: round_sig12(c.lambda1()),
                lambda2: round_sig12(c.lambda2()),
                member_similarities: c.member_similarities().iter().map(|&s| round_sig12(s)).collect(),
            }
        })
        .collect();
    Ok(WindowResult {
        window,
        n_clusters: clusters.len(),
        clusters,
        dropped_columns: slice.dropped,
    })
}

/// Clusters every rolling window of the transformed panel.
pub fn run_rolling_clustering(panel: &TimeSeriesPanel, opts: &RunOptions) -> Result<RunReport> {
    opts.clustering.validate()?;
    let tp = build_transformation_matrix(panel)?;
    let windows = rolling_windows(tp.axis, opts.window_months, opts.step_months)?;
    let results = windows
        .par_iter()
        .map(|&w| cluster_window(&tp, w, &opts.clustering, opts.favorable.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    Ok(RunReport::new(opts.echo(None), results))
}

/// Clusters the `window_months` immediately after the scenario's launch.
pub fn run_scenario_clustering(scenario: &ScenarioPanel, opts: &RunOptions) -> Result<WindowResult> {
    opts.clustering.validate()?;
    if opts.window_months == 0 {
        return Err(Error::InvalidConfig("window must be positive".into()));
    }
    let window = MonthRange::with_len(scenario.launch.add_months(1), opts.window_months).expect("positive");
    let axis = scenario.panel.axis();
    let lookback = window.start.add_months(-(BURN_IN_MONTHS as i32));
    if lookback < axis.start || window.end > axis.end {
        return Err(Error::AxisTooShort {
            available: axis.len(),
            required: opts.window_months + BURN_IN_MONTHS,
        });
    }
    let tp = build_transformation_matrix(&scenario.panel)?;
    cluster_window(&tp, window, &opts.clustering, opts.favorable.as_ref())
}

/// Scenario result wrapped as a one-window report.
pub fn scenario_report(scenario: &ScenarioPanel, opts: &RunOptions) -> Result<RunReport> {
    let w = run_scenario_clustering(scenario, opts)?;
    Ok(RunReport::new(opts.echo(Some(scenario.launch)), vec![w]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterPairing {
    pub a_id: usize,
    pub b_id: usize,
    pub overlap: usize,
    pub jaccard: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovedColumn {
    pub label: String,
    pub a_id: usize,
    pub b_id: usize,
}

/// How two clusterings of the same columns differ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub window_a: MonthRange,
    pub window_b: MonthRange,
    pub n_clusters_a: usize,
    pub n_clusters_b: usize,
    /// `n_clusters_b − n_clusters_a`.
    pub count_delta: i64,
    pub pairs: Vec<ClusterPairing>,
    pub unpaired_a: Vec<usize>,
    pub unpaired_b: Vec<usize>,
    /// Columns whose `b` cluster is not the partner of their `a` cluster,
    /// sorted by label.
    pub moved_columns: Vec<MovedColumn>,
}

/// Pairs clusters greedily by member overlap (largest first, ties to the
/// lower `a` id then lower `b` id) and lists the columns that changed sides.
pub fn compare_results(a: &WindowResult, b: &WindowResult) -> Result<Comparison> {
    let ua = a.universe();
    let ub = b.universe();
    if ua != ub {
        let only_a = ua.difference(&ub).count();
        let only_b = ub.difference(&ua).count();
        return Err(Error::UniverseMismatch(format!(
            "{only_a} columns only in a, {only_b} only in b"
        )));
    }
    let home_b: HashMap<&str, usize> = b
        .clusters
        .iter()
        .flat_map(|c| c.member_labels.iter().map(move |l| (l.as_str(), c.id)))
        .collect();

    // overlap[(a_id, b_id)]
    let mut overlap: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for c in &a.clusters {
        for l in &c.member_labels {
            *overlap.entry((c.id, home_b[l.as_str()])).or_default() += 1;
        }
    }
    let mut candidates: Vec<((usize, usize), usize)> = overlap.into_iter().collect();
    candidates.sort_by(|x, y| y.1.cmp(&x.1).then(x.0.cmp(&y.0)));

    let size_a: HashMap<usize, usize> = a.clusters.iter().map(|c| (c.id, c.member_labels.len())).collect();
    let size_b: HashMap<usize, usize> = b.clusters.iter().map(|c| (c.id, c.member_labels.len())).collect();
    let mut partner_of_a: HashMap<usize, usize> = HashMap::new();
    let mut taken_b: HashSet<usize> = HashSet::new();
    let mut pairs = Vec::new();
    for ((ia, ib), ov) in candidates {
        if partner_of_a.contains_key(&ia) || taken_b.contains(&ib) {
            continue;
        }
        partner_of_a.insert(ia, ib);
        taken_b.insert(ib);
        let union = size_a[&ia] + size_b[&ib] - ov;
        pairs.push(ClusterPairing {
            a_id: ia,
            b_id: ib,
            overlap: ov,
            jaccard: round_sig12(ov as f64 / union as f64),
        });
    }
    pairs.sort_by_key(|p| p.a_id);

    let mut moved = Vec::new();
    for c in &a.clusters {
        for l in &c.member_labels {
            let ib = home_b[l.as_str()];
            if partner_of_a.get(&c.id) != Some(&ib) {
                moved.push(MovedColumn {
                    label: l.clone(),
                    a_id: c.id,
                    b_id: ib,
                });
            }
        }
    }
    moved.sort_by(|x, y| x.label.cmp(&y.label));

    Ok(Comparison {
        window_a: a.window,
        window_b: b.window,
        n_clusters_a: a.n_clusters,
        n_clusters_b: b.n_clusters,
        count_delta: b.n_clusters as i64 - a.n_clusters as i64,
        unpaired_a: a.clusters.iter().map(|c| c.id).filter(|id| !partner_of_a.contains_key(id)).collect(),
        unpaired_b: b.clusters.iter().map(|c| c.id).filter(|id| !taken_b.contains(id)).collect(),
        pairs,
        moved_columns: moved,
    })
}

/// Either kind of JSON the CLI writes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ResultFile {
    Report(RunReport),
    Window(WindowResult),
}

impl ResultFile {
    pub fn into_windows(self) -> Vec<WindowResult> {
        match self {
            ResultFile::Report(r) => r.windows,
            ResultFile::Window(w) => vec![w],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub comparisons: Vec<Comparison>,
}

/// Compares two result files window by window; both must hold the same
/// number of windows.
pub fn compare_files(a: ResultFile, b: ResultFile) -> Result<ComparisonReport> {
    let wa = a.into_windows();
    let wb = b.into_windows();
    if wa.len() != wb.len() {
        return Err(Error::UniverseMismatch(format!(
            "{} windows vs {} windows",
            wa.len(),
            wb.len()
        )));
    }
    let comparisons = wa.iter().zip(&wb).map(|(x, y)| compare_results(x, y)).collect::<Result<_>>()?;
    Ok(ComparisonReport { comparisons })
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    std::fs::write(path, to_json(value)).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(std::io::BufReader::new(file)).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })
}

/// `start_year,n_clusters`, one row per window.
pub fn plot_csv(report: &RunReport) -> String {
    let mut out = String::from("start_year,n_clusters\n");
    for w in &report.windows {
        out.push_str(&format!("{},{}\n", w.window.start.year(), w.n_clusters));
    }
    out
}

/// Writes the JSON report and, when given, the plot-data CSV.
pub fn emit_outputs(report: &RunReport, json_path: &Path, plot_path: Option<&Path>) -> Result<()> {
    write_json(report, json_path)?;
    if let Some(path) = plot_path {
        let mut f = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
        f.write_all(plot_csv(report).as_bytes())
            .and_then(|_| f.flush())
            .map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cluster(id: usize, labels: &[&str]) -> ClusterSummary {
        ClusterSummary {
            id,
            member_labels: labels.iter().map(|s| s.to_string()).collect(),
            representative_label: labels[0].to_string(),
            representative_fallback: false,
            lambda1: 1.0,
            lambda2: 0.0,
            member_similarities: vec![1.0; labels.len()],
        }
    }

    fn window(clusters: Vec<ClusterSummary>) -> WindowResult {
        WindowResult {
            window: MonthRange::with_len("2003-01".parse().unwrap(), 24).unwrap(),
            n_clusters: clusters.len(),
            clusters,
            dropped_columns: vec![],
        }
    }

    #[test]
    fn rounding() {
        assert_eq!(round_sig12(1.0 / 3.0), 0.333333333333);
        assert_eq!(round_sig12(0.0), 0.0);
        assert_eq!(round_sig12(123_456_789.123_456_7), 123_456_789.123);
        assert_eq!(round_sig12(-2.5e-20), -2.5e-20);
    }

    #[test]
    fn self_comparison_is_identity() {
        let w = window(vec![cluster(0, &["a", "b"]), cluster(1, &["c"]), cluster(2, &["d", "e", "f"])]);
        let c = compare_results(&w, &w).unwrap();
        assert_eq!(c.count_delta, 0);
        assert_eq!(c.pairs.len(), 3);
        assert!(c.pairs.iter().all(|p| p.jaccard == 1.0 && p.a_id == p.b_id));
        assert!(c.moved_columns.is_empty());
        assert!(c.unpaired_a.is_empty() && c.unpaired_b.is_empty());
    }

    #[test]
    fn single_swap() {
        let a = window(vec![cluster(0, &["x1", "x2", "x3"]), cluster(1, &["x4", "x5", "x6"])]);
        let b = window(vec![cluster(0, &["x1", "x2", "x4"]), cluster(1, &["x3", "x5", "x6"])]);
        let c = compare_results(&a, &b).unwrap();
        assert_eq!(c.count_delta, 0);
        let j: Vec<f64> = c.pairs.iter().map(|p| p.jaccard).collect();
        assert_eq!(j, vec![0.5, 0.5]);
        let moved: Vec<&str> = c.moved_columns.iter().map(|m| m.label.as_str()).collect();
        assert_eq!(moved, vec!["x3", "x4"]);
    }

    #[test]
    fn merge_leaves_unpaired_cluster() {
        let a = window(vec![cluster(0, &["p", "q"]), cluster(1, &["r"]), cluster(2, &["s"])]);
        let b = window(vec![cluster(0, &["p", "q", "r", "s"])]);
        let c = compare_results(&a, &b).unwrap();
        assert_eq!(c.count_delta, -2);
        assert_eq!(c.pairs, vec![ClusterPairing { a_id: 0, b_id: 0, overlap: 2, jaccard: 0.5 }]);
        assert_eq!(c.unpaired_a, vec![1, 2]);
        assert_eq!(c.moved_columns.len(), 2);
    }

    #[test]
    fn universe_mismatch() {
        let a = window(vec![cluster(0, &["a", "b"])]);
        let b = window(vec![cluster(0, &["a", "c"])]);
        assert!(matches!(compare_results(&a, &b), Err(Error::UniverseMismatch(_))));
    }

    #[test]
    fn summary_and_plot() {
        let mut ws = Vec::new();
        for (i, k) in [3usize, 5, 4].into_iter().enumerate() {
            let mut w = window((0..k).map(|id| cluster(id, &[&format!("c{id}")])).collect());
            w.window = MonthRange::with_len(format!("{}-01", 2003 + i).parse().unwrap(), 24).unwrap();
            ws.push(w);
        }
        let s = RunSummary::from_windows(&ws);
        assert_eq!((s.min_count, s.max_count), (3, 5));
        assert_eq!(s.mean_count, 4.0);
        let report = RunReport::new(RunOptions::default().echo(None), ws);
        assert_eq!(plot_csv(&report), "start_year,n_clusters\n2003,3\n2004,5\n2005,4\n");
    }

    #[test]
    fn result_file_accepts_both_shapes() {
        let w = window(vec![cluster(0, &["a"])]);
        let json = to_json(&w);
        let parsed: ResultFile = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed, ResultFile::Window(w.clone()));
        let r = RunReport::new(RunOptions::default().echo(None), vec![w]);
        let parsed: ResultFile = serde_json::from_str(&to_json(&r)).unwrap();
        assert_eq!(parsed, ResultFile::Report(r));
    }
}
