use std::collections::HashSet;

use proptest::prelude::*;

use mevclus::cluster::{cluster_variables, cluster_variables_traced};
use mevclus::ingest::{read_metadata, read_panel, write_metadata, write_panel_csv, PanelVariable, VariableKind, VariableMeta};
use mevclus::matrix::{eigen_symmetric, principal_components, sample_covariance, standardize_columns, SymmetricMatrix};
use mevclus::report::{compare_results, round_sig12, ClusterSummary, RunSummary, WindowResult};
use mevclus::similarity::squared_cosine_similarity;
use mevclus::synth::{factor_matrix, FactorMatrixSpec};
use mevclus::transform::{build_transformation_matrix, rolling_windows, slice_window};
use mevclus::{ClusteringConfig, Month, MonthRange, ObservationMatrix, TimeSeriesPanel};

fn matrix(n: usize, p: usize) -> impl Strategy<Value = ObservationMatrix> {
    prop::collection::vec(prop::collection::vec(-50.0f64..50.0, n), p).prop_filter_map("constant column", move |cols| {
        let labels = (0..cols.len()).map(|j| format!("x{j}")).collect();
        let m = ObservationMatrix::from_columns(cols, labels).ok()?;
        (0..m.n_cols()).all(|j| !m.is_constant_column(j)).then_some(m)
    })
}

fn symmetric(order: usize) -> impl Strategy<Value = SymmetricMatrix> {
    prop::collection::vec(-10.0f64..10.0, order * order)
        .prop_map(move |v| SymmetricMatrix::from_fn(order, |i, j| v[i.min(j) * order + i.max(j)]))
}

fn noisy_blocks() -> impl Strategy<Value = ObservationMatrix> {
    (1usize..8, 0.0f64..0.5, any::<u64>()).prop_map(|(k, noise, seed)| {
        factor_matrix(&FactorMatrixSpec {
            n_rows: 24,
            n_cols: 40,
            n_factors: k,
            noise,
            seed,
        })
        .unwrap()
        .matrix
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigen_residual_and_determinism(a in (2usize..12).prop_flat_map(symmetric)) {
        let pairs = eigen_symmetric(&a, a.order()).unwrap();
        for p in &pairs {
            let av = a.mul_vec(&p.eigenvector);
            let r: f64 = av.iter().zip(&p.eigenvector).map(|(x, v)| (x - p.eigenvalue * v).powi(2)).sum::<f64>().sqrt();
            prop_assert!(r < 1e-8 * p.eigenvalue.abs().max(1.0));
        }
        prop_assert_eq!(eigen_symmetric(&a, a.order()).unwrap(), pairs);
    }

    #[test]
    fn standardized_trace_and_psd(m in (3usize..20, 1usize..15).prop_flat_map(|(n, p)| matrix(n, p))) {
        let z = standardize_columns(&m).unwrap();
        let cov = sample_covariance(&z);
        let eig = eigen_symmetric(&cov, cov.order()).unwrap();
        let sum: f64 = eig.iter().map(|p| p.eigenvalue).sum();
        prop_assert!((sum - m.n_cols() as f64).abs() < 1e-8);
        prop_assert!(eig.last().unwrap().eigenvalue >= -1e-10);
    }

    #[test]
    fn loadings_orthonormal(m in (4usize..12, 2usize..8).prop_flat_map(|(n, p)| matrix(n, p))) {
        let z = standardize_columns(&m).unwrap();
        let k = z.n_rows().min(z.n_cols());
        let pcs = principal_components(&z, k).unwrap();
        for a in 0..k {
            for b in 0..k {
                let d: f64 = pcs.loadings[a].iter().zip(&pcs.loadings[b]).map(|(x, y)| x * y).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                prop_assert!((d - want).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn partitions_are_valid_and_bounded(m in noisy_blocks(), cap in 1usize..12) {
        let z = standardize_columns(&m).unwrap();
        let cfg = ClusteringConfig::default().with_max_clusters(cap);
        let run = cluster_variables_traced(&z, &cfg).unwrap();
        run.partition.validate().unwrap();
        let mut seen: Vec<usize> = run.partition.clusters().iter().flat_map(|c| c.members().to_vec()).collect();
        seen.sort();
        prop_assert_eq!(seen, (0..z.n_cols()).collect::<Vec<_>>());
        prop_assert!(!run.partition.is_empty() && run.partition.len() <= cap);
        prop_assert!(run.partition.len() <= run.splits.len() + 1);
        prop_assert_eq!(cluster_variables(&z, &cfg).unwrap(), run.partition);
    }

    #[test]
    fn splits_follow_retained_components(m in noisy_blocks()) {
        let z = standardize_columns(&m).unwrap();
        let run = cluster_variables_traced(&z, &ClusteringConfig::default()).unwrap();
        for rec in &run.splits {
            let first: HashSet<usize> = rec.first.iter().copied().collect();
            for &j in &rec.parent {
                let s1 = squared_cosine_similarity(z.column(j), &rec.pc1).unwrap();
                let s2 = squared_cosine_similarity(z.column(j), &rec.pc2).unwrap();
                prop_assert_eq!(s1 > s2 + 1e-12, first.contains(&j));
            }
        }
    }

    #[test]
    fn column_rescaling_leaves_partition_unchanged(m in noisy_blocks(), j in 0usize..40, log_a in -3.0f64..3.0, neg in any::<bool>()) {
        let cfg = ClusteringConfig::default();
        let base = cluster_variables(&standardize_columns(&m).unwrap(), &cfg).unwrap().member_sets();
        let a = 10f64.powf(log_a) * if neg { -1.0 } else { 1.0 };
        let mut scaled = m.clone();
        scaled.scale_column(j, a);
        let got = cluster_variables(&standardize_columns(&scaled).unwrap(), &cfg).unwrap().member_sets();
        prop_assert_eq!(got, base);
    }

    #[test]
    fn window_shape(n_vars in 1usize..6, extra in 0usize..30, window in 6usize..25, step in 1usize..13) {
        let len = 12 + window + extra;
        let start: Month = "2001-05".parse().unwrap();
        let variables = (0..n_vars)
            .map(|i| PanelVariable {
                meta: VariableMeta { name: format!("v{i}"), kind: VariableKind::Level, category: "rates".into() },
                values: (0..len).map(|t| 50.0 + ((t * (i + 3)) % 7) as f64 + 0.1 * (t * t % 11) as f64).collect(),
            })
            .collect();
        let panel = TimeSeriesPanel::new(MonthRange::with_len(start, len).unwrap(), variables).unwrap();
        let tp = build_transformation_matrix(&panel).unwrap();
        let windows = rolling_windows(tp.axis, window, step).unwrap();
        prop_assert_eq!(windows.len(), (tp.axis.len() - window) / step + 1);
        for w in windows {
            let s = slice_window(&tp, w);
            if let Ok(s) = s {
                prop_assert_eq!(s.matrix.n_rows(), window);
                prop_assert_eq!(s.matrix.n_cols() + s.dropped.len(), 3 * n_vars);
            }
        }
    }

    #[test]
    fn panel_csv_round_trip(values in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 15), 1..5)) {
        let variables: Vec<PanelVariable> = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| PanelVariable {
                meta: VariableMeta { name: format!("s{i}"), kind: VariableKind::Rate, category: "spread".into() },
                values: v,
            })
            .collect();
        let axis = MonthRange::with_len("1999-11".parse().unwrap(), 15).unwrap();
        let panel = TimeSeriesPanel::new(axis, variables).unwrap();
        let (mut csv, mut meta) = (Vec::new(), Vec::new());
        write_panel_csv(&panel, &mut csv).unwrap();
        write_metadata(&panel, &mut meta).unwrap();
        let back = read_panel(csv.as_slice(), &read_metadata(meta.as_slice()).unwrap()).unwrap();
        prop_assert_eq!(back.axis(), axis);
        for (a, b) in back.variables().iter().zip(panel.variables()) {
            prop_assert_eq!(&a.meta, &b.meta);
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
            }
        }
    }

    #[test]
    fn self_comparison_is_identity(sizes in prop::collection::vec(1usize..6, 1..8)) {
        let mut next = 0;
        let clusters: Vec<ClusterSummary> = sizes
            .iter()
            .enumerate()
            .map(|(id, &s)| {
                let labels: Vec<String> = (next..next + s).map(|j| format!("c{j}")).collect();
                next += s;
                ClusterSummary {
                    id,
                    representative_label: labels[0].clone(),
                    representative_fallback: false,
                    lambda1: 1.0,
                    lambda2: 0.5,
                    member_similarities: vec![0.9; s],
                    member_labels: labels,
                }
            })
            .collect();
        let w = WindowResult {
            window: MonthRange::with_len("2005-01".parse().unwrap(), 24).unwrap(),
            n_clusters: clusters.len(),
            clusters,
            dropped_columns: vec![],
        };
        let c = compare_results(&w, &w).unwrap();
        prop_assert_eq!(c.count_delta, 0);
        prop_assert_eq!(c.pairs.len(), sizes.len());
        prop_assert!(c.pairs.iter().all(|p| p.jaccard == 1.0 && p.a_id == p.b_id));
        prop_assert!(c.moved_columns.is_empty());

        let summary = RunSummary::from_windows(std::slice::from_ref(&w));
        prop_assert_eq!((summary.min_count, summary.max_count), (w.n_clusters, w.n_clusters));
        prop_assert_eq!(summary.mean_count, w.n_clusters as f64);
    }

    #[test]
    fn rounded_floats_survive_json(x in prop::num::f64::NORMAL) {
        let r = round_sig12(x);
        prop_assert_eq!(round_sig12(r), r);
        let back: f64 = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        prop_assert_eq!(back, r);
    }
}
