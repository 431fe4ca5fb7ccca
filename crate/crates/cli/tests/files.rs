use hmpsbm::MultiplexNetwork;
use hmpsbm_cli::io::{parse_covariates, parse_labels, parse_network, write_labels_to, write_network_to, CovariateOptions, Labels};
use hmpsbm_cli::study::{quantile, read_records, summarize, write_records, ResultRecord};
use ndarray::Array2;
use proptest::prelude::*;

fn record(point: &str, rep: usize, g: f64, l: f64, occ: (usize, usize)) -> ResultRecord {
    ResultRecord {
        study: "s41".into(),
        point: point.into(),
        rep,
        seed: 1000 + rep as u64,
        nmi_global: g,
        nmi_layer: l,
        occupied_global: occ.0,
        occupied_layer: occ.1,
        elbo: -1234.5 - rep as f64,
        seconds: 0.25,
        error: None,
    }
}

#[test]
fn log_then_zscore_matches_a_hand_computation() {
    let text = "a,b\n1,2\n2,4\n4,8\n8,16\n16,32\n";
    let c = parse_covariates(text.as_bytes(), CovariateOptions { log: true, zscore: true, intercept: true }).unwrap();
    // ln of 1, 2, 4, 8, 16 is k ln 2 for k = 0..4, so the z-scores are
    // (k − 2) / √2 in both columns
    let values = c.matrix.values();
    assert_eq!(values.dim(), (5, 3));
    for k in 0..5 {
        let expected = (k as f64 - 2.0) / 2f64.sqrt();
        assert!((values[[k, 0]] - expected).abs() < 1e-12);
        assert!((values[[k, 1]] - expected).abs() < 1e-12);
        assert_eq!(values[[k, 2]], 1.0);
    }
    assert_eq!(c.names, ["a", "b", "intercept"]);
}

#[test]
fn log_rejects_non_positive_values() {
    let err = parse_covariates("a\n1\n0\n".as_bytes(), CovariateOptions { log: true, ..Default::default() });
    assert!(err.is_err());
}

#[test]
fn a_single_record_summarizes_to_itself() {
    let r = record("mw=2,mz=3", 0, 0.9, 0.97, (2, 3));
    let s = &summarize(std::slice::from_ref(&r))[0];
    assert_eq!((s.global.median, s.global.q025, s.global.q975, s.global.std), (0.9, 0.9, 0.9, 0.0));
    assert_eq!((s.layer.median, s.layer.std), (0.97, 0.0));
    assert_eq!((s.modal_occupied_global, s.modal_occupied_layer), (2, 3));
    assert_eq!((s.runs, s.failures), (1, 0));
}

#[test]
fn summaries_are_a_function_of_the_records_file() {
    let mut records: Vec<ResultRecord> =
        (0..7).map(|r| record("a", r, 1.0 - 0.013 * (r * r) as f64, 1.0, (2, 3 + r % 2))).collect();
    records.push(record("b", 0, 0.5, 0.25, (1, 1)));
    let mut failed = record("b", 1, f64::NAN, f64::NAN, (0, 0));
    failed.error = Some("init: empty layer".into());
    records.push(failed);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("records.csv");
    write_records(&records, &path).unwrap();
    let back = read_records(&path).unwrap();
    assert_eq!(back.len(), records.len());
    assert_eq!(back[3], records[3]);

    let summary = summarize(&back);
    assert_eq!(summary.len(), 2);
    let mut g: Vec<f64> = records[..7].iter().map(|r| r.nmi_global).collect();
    g.sort_by(f64::total_cmp);
    assert_eq!(summary[0].global.median, g[3]);
    // 2.5% of 6 gaps is 0.15 of the way from the first to the second value
    assert!((summary[0].global.q025 - (g[0] + 0.15 * (g[1] - g[0]))).abs() < 1e-15);
    assert_eq!(summary[0].global.q975, quantile(&g, 0.975));
    assert_eq!(summary[0].modal_occupied_layer, 3);
    assert_eq!((summary[1].runs, summary[1].failures, summary[1].global.median), (2, 1, 0.5));
}

#[test]
fn labels_round_trip() {
    let labels = Labels { global: vec![0, 1, 1, 2], layer: Array2::from_shape_vec((2, 4), vec![0, 0, 1, 1, 2, 1, 0, 0]).unwrap() };
    let mut buf = Vec::new();
    write_labels_to(&labels, &mut buf).unwrap();
    assert_eq!(parse_labels(buf.as_slice()).unwrap(), labels);
}

proptest! {
    #[test]
    fn networks_round_trip(
        l in 1usize..4,
        n in 2usize..12,
        raw in prop::collection::vec((0usize..4, 0usize..12, 0usize..12), 0..60),
    ) {
        let edges = raw.into_iter().filter(|&(k, i, j)| k < l && i < n && j < n && i != j);
        let net = MultiplexNetwork::from_edges(l, n, edges).unwrap();
        let mut buf = Vec::new();
        write_network_to(&net, &mut buf).unwrap();
        prop_assert_eq!(parse_network(buf.as_slice()).unwrap(), net);
    }

    #[test]
    fn covariates_round_trip_through_csv(values in prop::collection::vec(-1e6f64..1e6, 12)) {
        let m = Array2::from_shape_vec((4, 3), values).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        let names = vec!["p".to_string(), "q".to_string(), "r".to_string()];
        hmpsbm_cli::io::write_covariates(&names, &m, &path).unwrap();
        let back = hmpsbm_cli::io::read_covariates(&path, CovariateOptions::default()).unwrap();
        prop_assert_eq!(back.matrix.values(), &m);
        prop_assert_eq!(back.names, names);
    }
}
