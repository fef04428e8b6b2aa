//! Survey loading, binning and the node join.

mod common;

use common::grid_with_m;
use gravnet::features::FeatureMatrix;
use gravnet::survey::{
    bin_households, join_to_nodes, joined_csv, load_survey_csv, nearest_node, read_joined_csv, SurveySample,
    TargetTransform,
};

fn household(lon: f64, lat: f64, consumption: f64, year: Option<i32>) -> SurveySample {
    SurveySample { lon, lat, consumption, year }
}

#[test]
fn loader_drops_unusable_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("survey.csv");
    std::fs::write(
        &path,
        "lon,lat,consumption,year\n1.0,2.0,10,2012\n1.0,2.0,-3,2012\n1.0,,5,2012\nx,2.0,5,\n1.5,2.5,7,\n",
    )
    .unwrap();
    let load = load_survey_csv(&path).unwrap();
    assert_eq!(load.dropped, 3);
    assert_eq!(load.samples, vec![household(1.0, 2.0, 10.0, Some(2012)), household(1.5, 2.5, 7.0, None)]);
}

#[test]
fn loader_requires_the_core_columns() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("survey.csv");
    std::fs::write(&path, "lon,lat,income\n1,2,3\n").unwrap();
    assert!(load_survey_csv(&path).is_err());
}

#[test]
fn binning_groups_by_rounded_location_and_year() {
    let samples = [
        household(1.0001, 2.0, 10.0, Some(2012)),
        household(1.0002, 2.0001, 20.0, Some(2012)),
        household(1.0001, 2.0, 40.0, Some(2014)),
        household(1.3, 2.0, 5.0, Some(2012)),
    ];
    let clusters = bin_households(&samples, 0.001).unwrap();
    assert_eq!(clusters.len(), 3);
    let first = &clusters[0];
    assert_eq!((first.members, first.year), (2, Some(2012)));
    assert!((first.consumption - 15.0).abs() < 1e-12);
    assert!(clusters.iter().enumerate().all(|(i, c)| c.cluster_id == i));
    assert!(bin_households(&samples, 0.0).is_err());
}

#[test]
fn nearest_node_uses_manhattan_distance_within_radius() {
    // 2×2 grid of unit cells; centres at (0.5, 1.5), (1.5, 1.5), (0.5, 0.5), (1.5, 0.5).
    let grid = grid_with_m(2, 2, &[1.0; 4]);
    assert_eq!(nearest_node(&grid, 1.4, 1.4, 0.5), Some(1));
    assert_eq!(nearest_node(&grid, 0.6, 0.4, 0.5), Some(2));
    // Equidistant from all four centres: the lowest id wins.
    assert_eq!(nearest_node(&grid, 1.0, 1.0, 1.0), Some(0));
    assert_eq!(nearest_node(&grid, 1.0, 1.0, 0.9), None);
}

#[test]
fn join_attaches_node_features_and_round_trips() {
    let grid = grid_with_m(2, 2, &[1.0; 4]);
    let features = FeatureMatrix::from_rows(
        vec!["step_1".into(), "step_2".into()],
        &[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0], vec![7.0, 8.0]],
    )
    .unwrap();
    let samples = [household(1.6, 0.4, 9.0, None), household(9.0, 9.0, 1.0, None)];
    let clusters = bin_households(&samples, 0.001).unwrap();
    let joined = join_to_nodes(&clusters, &grid, &features, 0.3, TargetTransform::Log).unwrap();
    assert_eq!(joined.dropped, 1);
    assert_eq!(joined.samples.len(), 1);
    let s = &joined.samples[0];
    assert_eq!((s.node_id, s.features.clone()), (3, vec![7.0, 8.0]));
    assert!((s.target - 10f64.ln()).abs() < 1e-12);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("joined.csv");
    std::fs::write(&path, joined_csv(features.columns(), &joined.samples)).unwrap();
    let (columns, back) = read_joined_csv(&path).unwrap();
    assert_eq!(columns, features.columns());
    assert_eq!(back, joined.samples);
}

#[test]
fn join_rejects_mismatched_features() {
    let grid = grid_with_m(2, 2, &[1.0; 4]);
    let features = FeatureMatrix::from_rows(vec!["step_1".into()], &[vec![1.0]]).unwrap();
    let clusters = bin_households(&[household(0.5, 0.5, 1.0, None)], 0.001).unwrap();
    assert!(join_to_nodes(&clusters, &grid, &features, 0.3, TargetTransform::Raw).is_err());
}
