//! Property tests: the TSV writers and readers are inverse on the
//! supported grammar (labels without tabs or newlines, finite
//! non-negative values written in shortest round-trip form).

use ndarray::Array2;
use proptest::prelude::*;

use mutsig::io::{
    load_catalog, load_cosmic, load_matrix_tsv, write_catalog, write_cosmic, write_matrix_tsv,
    CosmicCatalog, Orientation,
};
use mutsig::matrix::{MutationCatalog, NonNegMatrix};
use mutsig::sim::sbs96_contexts;

fn label() -> impl Strategy<Value = String> {
    "[A-Za-z][A-Za-z0-9_.:-]{0,11}"
}

fn labels(n: usize) -> impl Strategy<Value = Vec<String>> {
    // the grammar requires distinct ids; an index suffix guarantees that
    proptest::collection::vec(label(), n).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, l)| format!("{l}{i}"))
            .collect()
    })
}

fn value() -> impl Strategy<Value = f64> {
    prop_oneof![
        Just(0.0),
        0.0f64..1.0,
        0.0f64..1e9,
        (1e-300f64..1e-10),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matrix_tsv_round_trip(
        (rows, cols) in (1usize..7, 1usize..7),
        seed_data in proptest::collection::vec(value(), 36),
        row_labels in labels(6),
        col_labels in labels(6),
    ) {
        let data = Array2::from_shape_vec(
            (rows, cols),
            seed_data[..rows * cols].to_vec(),
        ).unwrap();
        let m = NonNegMatrix::new(data).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.tsv");
        write_matrix_tsv(&path, &m, "corner", &row_labels[..rows], &col_labels[..cols]).unwrap();
        let (back, r, c) = load_matrix_tsv(&path).unwrap();
        prop_assert_eq!(back.array(), m.array());
        prop_assert_eq!(r, row_labels[..rows].to_vec());
        prop_assert_eq!(c, col_labels[..cols].to_vec());
    }

    #[test]
    fn catalog_round_trip(
        (rows, cols) in (1usize..7, 1usize..7),
        seed_data in proptest::collection::vec(value(), 36),
        feature_labels in labels(6),
        sample_ids in labels(6),
    ) {
        let data = Array2::from_shape_vec(
            (rows, cols),
            seed_data[..rows * cols].to_vec(),
        ).unwrap();
        let catalog = MutationCatalog::new(
            NonNegMatrix::new(data).unwrap(),
            feature_labels[..rows].to_vec(),
            sample_ids[..cols].to_vec(),
        ).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("catalog.tsv");
        write_catalog(&path, &catalog).unwrap();
        let back = load_catalog(&path, Orientation::FeaturesBySamples).unwrap();
        prop_assert_eq!(back.matrix.array(), catalog.matrix.array());
        prop_assert_eq!(back.feature_labels, catalog.feature_labels);
        prop_assert_eq!(back.sample_ids, catalog.sample_ids);
    }

    #[test]
    fn cosmic_round_trip(
        raw in proptest::collection::vec(1e-6f64..1.0, 96 * 3),
        names in labels(3),
    ) {
        // normalize each column so the file satisfies the probability check
        let mut data = Array2::from_shape_vec((96, 3), raw).unwrap();
        for j in 0..3 {
            let s: f64 = data.column(j).sum();
            data.column_mut(j).mapv_inplace(|x| x / s);
        }
        let catalog = CosmicCatalog {
            feature_labels: sbs96_contexts(),
            signatures: NonNegMatrix::new(data).unwrap(),
            signature_names: names,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cosmic.tsv");
        write_cosmic(&path, &catalog).unwrap();
        let back = load_cosmic(&path).unwrap();
        prop_assert_eq!(back.signatures.array(), catalog.signatures.array());
        prop_assert_eq!(back.feature_labels, catalog.feature_labels);
        prop_assert_eq!(back.signature_names, catalog.signature_names);
    }
}
