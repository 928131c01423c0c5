use std::collections::HashSet;

use log::{debug, warn};

use super::{Cluster, ClusteringConfig, Partition, SplitOrder, LAMBDA_TIE_TOL, SIMILARITY_TIE_TOL};
use crate::error::{Error, Result};
use crate::matrix::{check_centered, ObservationMatrix};
use crate::similarity::squared_cosine_similarity;

/// Outcome of dividing one cluster, with the components that decided it.
#[derive(Debug, Clone)]
pub struct Split {
    /// Members closer to PC1. Keeps the parent's id.
    pub first: Cluster,
    /// Members closer to (or tied with) PC2.
    pub second: Cluster,
    pub pc1: Vec<f64>,
    pub pc2: Vec<f64>,
}

/// What happened at one split during a run, for post-hoc auditing.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitRecord {
    pub parent: Vec<usize>,
    pub pc1: Vec<f64>,
    pub pc2: Vec<f64>,
    pub first: Vec<usize>,
    pub second: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct ClusteringRun {
    pub partition: Partition,
    pub splits: Vec<SplitRecord>,
}

/// Divides `c` by comparing each member's S_c² to the parent's PC1 and PC2.
///
/// A member joins the first child only when its similarity to PC1 exceeds
/// that to PC2 by more than [`SIMILARITY_TIE_TOL`]; everything else, ties
/// included, joins the second. The second child receives `new_id`.
pub fn split_cluster(c: &Cluster, m: &ObservationMatrix, new_id: usize) -> Result<Split> {
    let degenerate = Error::DegenerateSplit { size: c.size() };
    let Some(pc2) = c.pc2_score() else {
        return Err(degenerate);
    };
    if c.lambda2() <= LAMBDA_TIE_TOL * c.lambda1().max(1.0) {
        return Err(degenerate);
    }
    let pc1 = c.pc1_score();
    let mut first = Vec::new();
    let mut second = Vec::new();
    for &j in c.members() {
        let x = m.column(j);
        let s1 = squared_cosine_similarity(x, pc1)?;
        let s2 = squared_cosine_similarity(x, pc2)?;
        if s1 > s2 + SIMILARITY_TIE_TOL {
            first.push(j);
        } else {
            second.push(j);
        }
    }
    if first.is_empty() || second.is_empty() {
        return Err(degenerate);
    }
    Ok(Split {
        first: Cluster::new(c.id(), first, m)?,
        second: Cluster::new(new_id, second, m)?,
        pc1: pc1.to_vec(),
        pc2: pc2.to_vec(),
    })
}

/// One pass over all columns in ascending order, moving each column to the
/// cluster whose PC1 it matches best when that beats its own cluster's PC1
/// by more than [`SIMILARITY_TIE_TOL`]. Both affected clusters are refreshed
/// before the next column is examined; emptied clusters are dropped.
pub fn reassignment_pass(mut p: Partition, m: &ObservationMatrix) -> Result<Partition> {
    reassign_in_place(&mut p, m)?;
    Ok(p)
}

fn reassign_in_place(p: &mut Partition, m: &ObservationMatrix) -> Result<usize> {
    if p.len() < 2 {
        return Ok(0);
    }
    let mut moves = 0;
    let mut home = p.assignment();
    for j in 0..p.n_cols() {
        let x = m.column(j);
        let own = home[j];
        let clusters = p.clusters_mut();
        let own_sim = squared_cosine_similarity(x, clusters[own].pc1_score())?;
        let mut best: Option<(usize, f64)> = None;
        for (ci, c) in clusters.iter().enumerate() {
            if ci == own {
                continue;
            }
            let s = squared_cosine_similarity(x, c.pc1_score())?;
            // clusters are in id order, so the first of tied candidates wins
            if best.is_none_or(|(_, b)| s > b + SIMILARITY_TIE_TOL) {
                best = Some((ci, s));
            }
        }
        let Some((target, s)) = best else { continue };
        if s <= own_sim + SIMILARITY_TIE_TOL {
            continue;
        }

        debug!("moving column {j} from cluster {} to {}", clusters[own].id(), clusters[target].id());
        moves += 1;
        clusters[own].members_mut().retain(|&k| k != j);
        let tm = clusters[target].members_mut();
        let pos = tm.partition_point(|&k| k < j);
        tm.insert(pos, j);
        clusters[target].refresh(m)?;
        if clusters[own].members().is_empty() {
            clusters.remove(own);
        } else {
            clusters[own].refresh(m)?;
        }
        home = p.assignment();
    }
    Ok(moves)
}

/// Whether `c` is still a candidate for splitting under `cfg`.
pub fn should_split(c: &Cluster, cfg: &ClusteringConfig) -> bool {
    if c.is_unsplittable() || c.size() <= cfg.stop_min_size || c.size() < 2 {
        return false;
    }
    let threshold = cfg.stop_lambda2 - LAMBDA_TIE_TOL * cfg.stop_lambda2.max(1.0);
    if c.lambda2() < threshold {
        return false;
    }
    if let Some(t) = cfg.stop_min_avg_sim {
        if c.avg_similarity() >= t {
            return false;
        }
    }
    if let Some(t) = cfg.stop_min_min_sim {
        if c.min_similarity() >= t {
            return false;
        }
    }
    true
}

fn priority(c: &Cluster, order: SplitOrder) -> f64 {
    match order {
        SplitOrder::LargestLambda2 => c.lambda2(),
        SplitOrder::LargestLambdaRatio => c.lambda2() / c.lambda1(),
        SplitOrder::LargestSize => c.size() as f64,
        SplitOrder::SmallestAvgSim => -c.avg_similarity(),
        SplitOrder::SmallestMinSim => -c.min_similarity(),
    }
}

/// Index into `candidates` of the cluster to split next. Keys within 1e-12 of
/// each other tie, and ties go to the lowest creation index.
///
/// Panics on an empty slice.
pub fn select_split_candidate(candidates: &[&Cluster], cfg: &ClusteringConfig) -> usize {
    assert!(!candidates.is_empty(), "no split candidates");
    let mut best = 0;
    let mut best_key = priority(candidates[0], cfg.split_order);
    for (i, c) in candidates.iter().enumerate().skip(1) {
        let key = priority(c, cfg.split_order);
        let better = key > best_key + 1e-12
            || ((key - best_key).abs() <= 1e-12 && c.id() < candidates[best].id());
        if better {
            best = i;
            best_key = key;
        }
    }
    best
}

/// Clusters the columns of a standardized matrix.
pub fn cluster_variables(m: &ObservationMatrix, cfg: &ClusteringConfig) -> Result<Partition> {
    Ok(cluster_variables_traced(m, cfg)?.partition)
}

/// As [`cluster_variables`], also returning every split with the components
/// that produced it.
pub fn cluster_variables_traced(m: &ObservationMatrix, cfg: &ClusteringConfig) -> Result<ClusteringRun> {
    cfg.validate()?;
    check_centered(m)?;
    let mut partition = Partition::root(m)?;
    let mut splits = Vec::new();
    let mut next_id = 1;
    // each split either adds a cluster or marks one unsplittable; reassignment
    // can only shrink the count by emptying clusters, so this bound is generous
    let max_iterations = 4 * m.n_cols() + 16;

    for _ in 0..max_iterations {
        if cfg.max_clusters.is_some_and(|max| partition.len() >= max) {
            break;
        }
        let candidates: Vec<usize> = (0..partition.len())
            .filter(|&i| should_split(&partition.clusters()[i], cfg))
            .collect();
        if candidates.is_empty() {
            return Ok(ClusteringRun { partition, splits });
        }
        let refs: Vec<&Cluster> = candidates.iter().map(|&i| &partition.clusters()[i]).collect();
        let pick = candidates[select_split_candidate(&refs, cfg)];

        let parent = &partition.clusters()[pick];
        match split_cluster(parent, m, next_id) {
            Ok(split) => {
                splits.push(SplitRecord {
                    parent: parent.members().to_vec(),
                    pc1: split.pc1,
                    pc2: split.pc2,
                    first: split.first.members().to_vec(),
                    second: split.second.members().to_vec(),
                });
                let clusters = partition.clusters_mut();
                clusters[pick] = split.first;
                clusters.push(split.second);
                next_id += 1;
                reassign_in_place(&mut partition, m)?;
            }
            Err(Error::DegenerateSplit { size }) => {
                debug!("cluster {} ({size} members) cannot be split", parent.id());
                partition.clusters_mut()[pick].mark_unsplittable();
            }
            Err(e) => return Err(e),
        }
    }
    if cfg.max_clusters.is_none_or(|max| partition.len() < max) {
        warn!("clustering stopped after {max_iterations} iterations without settling");
    }
    Ok(ClusteringRun { partition, splits })
}

/// A cluster's chosen stand-in column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Representative {
    pub column: usize,
    /// True when no member was favorable and the unrestricted best was used.
    pub fallback: bool,
}

/// The member most similar to PC1, restricted to favorable labels when a set
/// is given. A column counts as favorable when its full label, or the part
/// before its first `__`, is in the set.
pub fn representative(
    c: &Cluster,
    m: &ObservationMatrix,
    favorable: Option<&HashSet<String>>,
) -> Representative {
    let best_of = |filter: &dyn Fn(usize) -> bool| -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (&j, &s) in c.members().iter().zip(c.member_similarities()) {
            if !filter(j) {
                continue;
            }
            if best.is_none_or(|(_, b)| s > b + SIMILARITY_TIE_TOL) {
                best = Some((j, s));
            }
        }
        best.map(|(j, _)| j)
    };
    let unrestricted = || best_of(&|_| true).expect("cluster is non-empty");
    match favorable {
        None => Representative {
            column: unrestricted(),
            fallback: false,
        },
        Some(set) => {
            let is_favorable = |j: usize| {
                let label = m.label(j);
                let base = label.split("__").next().unwrap_or(label);
                set.contains(label) || set.contains(base)
            };
            match best_of(&is_favorable) {
                Some(column) => Representative {
                    column,
                    fallback: false,
                },
                None => Representative {
                    column: unrestricted(),
                    fallback: true,
                },
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::standardize_columns;
    use crate::synth::{factor_matrix, FactorMatrixSpec};

    fn labels(p: usize) -> Vec<String> {
        (0..p).map(|j| format!("x{j}")).collect()
    }

    fn from_cols(cols: Vec<Vec<f64>>) -> ObservationMatrix {
        let p = cols.len();
        standardize_columns(&ObservationMatrix::from_columns(cols, labels(p)).unwrap()).unwrap()
    }

    // two orthogonal demeaned series
    fn series_a() -> Vec<f64> {
        vec![1.0, -1.0, 1.0, -1.0, 2.0, -2.0]
    }
    fn series_b() -> Vec<f64> {
        vec![1.0, 1.0, -1.0, -1.0, 0.0, 0.0]
    }

    fn scaled(x: &[f64], a: f64) -> Vec<f64> {
        x.iter().map(|v| v * a).collect()
    }

    #[test]
    fn split_separates_orthogonal_blocks() {
        let a = series_a();
        let b = series_b();
        let m = from_cols(vec![a.clone(), scaled(&b, 2.0), scaled(&a, -3.0), b]);
        let root = Cluster::new(0, vec![0, 1, 2, 3], &m).unwrap();
        let split = split_cluster(&root, &m, 1).unwrap();
        let mut sets = vec![split.first.members().to_vec(), split.second.members().to_vec()];
        sets.sort();
        assert_eq!(sets, vec![vec![0, 2], vec![1, 3]]);
        assert_eq!(split.first.id(), 0);
        assert_eq!(split.second.id(), 1);
    }

    #[test]
    fn split_of_rank_one_is_degenerate() {
        let a = series_a();
        let m = from_cols(vec![a.clone(), scaled(&a, 2.0), scaled(&a, -1.0)]);
        let c = Cluster::new(0, vec![0, 1, 2], &m).unwrap();
        assert!(c.lambda2().abs() < 1e-12);
        assert!(!should_split(&c, &ClusteringConfig::default()));
        assert!(matches!(split_cluster(&c, &m, 1), Err(Error::DegenerateSplit { .. })));
        let single = Cluster::new(0, vec![1], &m).unwrap();
        assert!(matches!(split_cluster(&single, &m, 1), Err(Error::DegenerateSplit { size: 1 })));
    }

    #[test]
    fn split_consistency_on_factor_panel() {
        let data = factor_matrix(&FactorMatrixSpec {
            n_rows: 24,
            n_cols: 132,
            n_factors: 15,
            noise: 0.3,
            seed: 4,
        })
        .unwrap();
        let m = standardize_columns(&data.matrix).unwrap();
        let root = Cluster::new(0, (0..132).collect(), &m).unwrap();
        let split = split_cluster(&root, &m, 1).unwrap();
        for &j in split.first.members() {
            let s1 = squared_cosine_similarity(m.column(j), &split.pc1).unwrap();
            let s2 = squared_cosine_similarity(m.column(j), &split.pc2).unwrap();
            assert!(s1 > s2);
        }
        for &j in split.second.members() {
            let s1 = squared_cosine_similarity(m.column(j), &split.pc1).unwrap();
            let s2 = squared_cosine_similarity(m.column(j), &split.pc2).unwrap();
            assert!(s1 <= s2 + SIMILARITY_TIE_TOL);
        }
    }

    #[test]
    fn reassignment_fixpoint_and_singleton() {
        let a = series_a();
        let b = series_b();
        let m = from_cols(vec![a.clone(), b.clone(), scaled(&a, 2.0), scaled(&b, 0.5)]);
        let p = Partition::from_clusters(
            vec![
                Cluster::new(0, vec![0, 2], &m).unwrap(),
                Cluster::new(1, vec![1, 3], &m).unwrap(),
            ],
            4,
        )
        .unwrap();
        assert_eq!(reassignment_pass(p.clone(), &m).unwrap(), p);

        let single = Partition::root(&m).unwrap();
        assert_eq!(reassignment_pass(single.clone(), &m).unwrap(), single);
    }

    #[test]
    fn reassignment_repairs_misplaced_copy() {
        let a = series_a();
        let b = series_b();
        // columns 0..3 copy A, 3..6 copy B; column 2 starts in the B cluster
        let m = from_cols(vec![
            a.clone(),
            scaled(&a, 1.5),
            scaled(&a, -0.7),
            b.clone(),
            scaled(&b, 3.0),
            scaled(&b, -2.0),
        ]);
        let p = Partition::from_clusters(
            vec![
                Cluster::new(0, vec![0, 1], &m).unwrap(),
                Cluster::new(1, vec![2, 3, 4, 5], &m).unwrap(),
            ],
            6,
        )
        .unwrap();
        let out = reassignment_pass(p, &m).unwrap();
        out.validate().unwrap();
        assert_eq!(out.clusters()[0].members(), &[0, 1, 2]);
        assert_eq!(out.clusters()[1].members(), &[3, 4, 5]);
    }

    #[test]
    fn should_split_rules() {
        let cfg = ClusteringConfig::default();
        let a = series_a();
        let b = series_b();
        let m = from_cols(vec![a.clone(), b.clone()]);
        let single = Cluster::new(0, vec![0], &m).unwrap();
        assert!(!should_split(&single, &cfg));

        // two orthogonal standardized columns: λ = [1, 1]
        let pair = Cluster::new(0, vec![0, 1], &m).unwrap();
        assert!((pair.lambda1() - 1.0).abs() < 1e-12);
        assert!((pair.lambda2() - 1.0).abs() < 1e-12);
        assert!(should_split(&pair, &cfg));

        let five = from_cols(vec![a.clone(), a.clone(), a.clone(), a.clone(), a.clone()]);
        let c = Cluster::new(0, (0..5).collect(), &five).unwrap();
        assert!((c.lambda1() - 5.0).abs() < 1e-12);
        assert!(!should_split(&c, &cfg));

        let mut sized = cfg.clone();
        sized.stop_min_size = 2;
        assert!(!should_split(&pair, &sized));
        let mut avg = cfg.clone();
        avg.stop_min_avg_sim = Some(0.5);
        assert!(!should_split(&pair, &avg));
        let mut min = cfg;
        min.stop_min_min_sim = Some(0.6);
        assert!(should_split(&pair, &min));
    }

    #[test]
    fn candidate_selection() {
        let a = series_a();
        let b = series_b();
        let c3 = vec![0.5, 0.0, -1.0, 2.0, -0.5, -1.0];
        let m = from_cols(vec![
            a.clone(),
            b.clone(),
            c3.clone(),
            scaled(&a, 2.0),
            scaled(&b, -1.0),
            scaled(&c3, 4.0),
            scaled(&a, 0.1),
        ]);
        let big = Cluster::new(0, vec![0, 1, 2, 3, 4, 5, 6], &m).unwrap();
        let small = Cluster::new(1, vec![0, 1, 2], &m).unwrap();
        let cfg = ClusteringConfig::default().with_split_order(SplitOrder::LargestSize);
        assert_eq!(select_split_candidate(&[&small, &big], &cfg), 1);
        assert_eq!(select_split_candidate(&[&small], &cfg), 0);

        // identical clusters: equal λ2, earliest id wins regardless of position
        let twin_late = Cluster::new(5, vec![0, 1], &m).unwrap();
        let twin_early = Cluster::new(2, vec![0, 1], &m).unwrap();
        let cfg = ClusteringConfig::default();
        assert_eq!(select_split_candidate(&[&twin_late, &twin_early], &cfg), 1);
    }

    #[test]
    fn all_copies_give_one_cluster() {
        let a = series_a();
        let m = from_cols((0..6).map(|i| scaled(&a, i as f64 + 1.0)).collect());
        let p = cluster_variables(&m, &ClusteringConfig::default()).unwrap();
        assert_eq!(p.len(), 1);
    }

    #[test]
    fn two_blocks_of_three() {
        let a = series_a();
        let b = series_b();
        let m = from_cols(vec![
            a.clone(),
            scaled(&b, 2.0),
            scaled(&a, -1.0),
            b.clone(),
            scaled(&a, 5.0),
            scaled(&b, -3.0),
        ]);
        let p = cluster_variables(&m, &ClusteringConfig::default()).unwrap();
        p.validate().unwrap();
        let sets: Vec<Vec<usize>> = p.member_sets().into_iter().collect();
        assert_eq!(sets, vec![vec![0, 2, 4], vec![1, 3, 5]]);
    }

    #[test]
    fn fifteen_exact_factors() {
        let data = factor_matrix(&FactorMatrixSpec {
            n_rows: 24,
            n_cols: 132,
            n_factors: 15,
            noise: 0.0,
            seed: 11,
        })
        .unwrap();
        let m = standardize_columns(&data.matrix).unwrap();
        let p = cluster_variables(&m, &ClusteringConfig::default()).unwrap();
        assert_eq!(p.member_sets(), data.blocks());
    }

    #[test]
    fn max_clusters_caps_count() {
        let data = factor_matrix(&FactorMatrixSpec {
            n_rows: 24,
            n_cols: 60,
            n_factors: 8,
            noise: 0.0,
            seed: 2,
        })
        .unwrap();
        let m = standardize_columns(&data.matrix).unwrap();
        for max in 1..=8 {
            let cfg = ClusteringConfig::default().with_max_clusters(max);
            assert_eq!(cluster_variables(&m, &cfg).unwrap().len(), max);
        }
    }

    #[test]
    fn caches_match_recomputation() {
        let data = factor_matrix(&FactorMatrixSpec {
            n_rows: 24,
            n_cols: 40,
            n_factors: 5,
            noise: 0.2,
            seed: 8,
        })
        .unwrap();
        let m = standardize_columns(&data.matrix).unwrap();
        let p = cluster_variables(&m, &ClusteringConfig::default()).unwrap();
        for c in p.clusters() {
            let fresh = Cluster::new(c.id(), c.members().to_vec(), &m).unwrap();
            assert!((fresh.lambda1() - c.lambda1()).abs() < 1e-8);
            assert!((fresh.lambda2() - c.lambda2()).abs() < 1e-8);
            for (s, t) in fresh.member_similarities().iter().zip(c.member_similarities()) {
                assert!((s - t).abs() < 1e-8);
                assert!((0.0..=1.0).contains(s));
            }
        }
    }

    #[test]
    fn representative_choices() {
        let a = series_a();
        let noise = [0.3, -0.2, 0.1, 0.25, -0.4, 0.05];
        let noise2 = [-0.1, 0.35, -0.3, 0.2, 0.1, -0.15];
        let noisy = |n: &[f64; 6], s: f64| -> Vec<f64> {
            a.iter().zip(n).map(|(x, e)| s * (x + e)).collect()
        };
        let m = from_cols(vec![noisy(&noise, 1.0), a.clone(), noisy(&noise2, -2.0)]);
        let c = Cluster::new(0, vec![0, 1, 2], &m).unwrap();
        // brute-force argmax of S_c² to PC1
        let sims: Vec<f64> = (0..3)
            .map(|j| squared_cosine_similarity(m.column(j), c.pc1_score()).unwrap())
            .collect();
        let argmax = (0..3).max_by(|&i, &j| sims[i].total_cmp(&sims[j])).unwrap();
        assert_eq!(argmax, 1, "exact copy should be closest: {sims:?}");
        assert_eq!(representative(&c, &m, None), Representative { column: 1, fallback: false });

        let singleton = Cluster::new(0, vec![2], &m).unwrap();
        assert_eq!(representative(&singleton, &m, None).column, 2);

        let fav: HashSet<String> = ["x2".to_string()].into();
        assert_eq!(representative(&c, &m, Some(&fav)), Representative { column: 2, fallback: false });
        let none: HashSet<String> = ["zzz".to_string()].into();
        assert_eq!(representative(&c, &m, Some(&none)), Representative { column: 1, fallback: true });
    }

    #[test]
    fn rejects_uncentered_input() {
        let raw = ObservationMatrix::from_columns(vec![vec![1.0, 2.0, 4.0]], labels(1)).unwrap();
        assert!(matches!(
            cluster_variables(&raw, &ClusteringConfig::default()),
            Err(Error::NotCentered { .. })
        ));
    }
}
