#![no_main]
use deepwave::grid::Grid2;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let grid = Grid2::new(4, 4, 1.0, 2.0).unwrap();
        if let Ok(field) = deepwave::serialize::field_from_csv(text, grid) {
            let out = deepwave::serialize::field_to_csv(&field);
            let again = deepwave::serialize::field_from_csv(&out, grid).expect("round trip");
            assert_eq!(field, again);
        }
    }
});
