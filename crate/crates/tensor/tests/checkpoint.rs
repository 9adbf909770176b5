use proptest::prelude::*;
use srlgnn_tensor::{Checkpoint, ParamStore, Tensor};

fn store_from(shapes: &[(usize, usize)], values: &[f64]) -> ParamStore<f64> {
    let mut store = ParamStore::new();
    let mut it = values.iter().cycle();
    for (i, &(r, c)) in shapes.iter().enumerate() {
        let t = Tensor::from_fn(r, c, |_, _| *it.next().unwrap());
        store.insert(format!("p{i}"), t).unwrap();
    }
    store
}

proptest! {
    #[test]
    fn round_trips_through_file(
        shapes in proptest::collection::vec((1usize..5, 1usize..5), 1..5),
        values in proptest::collection::vec(-1e6f64..1e6, 1..30),
    ) {
        let store = store_from(&shapes, &values);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.bin");
        Checkpoint::new(store.clone()).save(&path).unwrap();
        let back = Checkpoint::<f64>::load(&path).unwrap();
        prop_assert_eq!(back.params, store);
    }
}
