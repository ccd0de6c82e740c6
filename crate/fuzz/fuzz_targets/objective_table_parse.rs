#![no_main]

use iago::testbed::{parse_table, NoisyObjective};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok((grid, values)) = parse_table(text) {
        assert_eq!(grid.len(), values.len());
        if let Ok(objective) = NoisyObjective::new(values, 1.0, "fuzz") {
            let table = objective.to_table(&grid).expect("parsed table re-serializes");
            let (grid2, values2) = parse_table(&table).expect("serialized table reparses");
            assert_eq!(grid2.len(), grid.len());
            assert_eq!(values2, objective.mean_values);
        }
    }
});
