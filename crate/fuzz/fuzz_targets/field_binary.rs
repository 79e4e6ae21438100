#![no_main]
use deepwave::grid::Grid2;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    for (na, nb) in [(4usize, 4usize), (4, 8)] {
        let grid = Grid2::new(na, nb, 1.0, 2.0).unwrap();
        if let Ok(field) = deepwave::serialize::field_from_binary(data, grid) {
            let bytes = deepwave::serialize::field_to_binary(&field);
            assert_eq!(bytes, data);
        }
    }
});
