#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(ck) = deepwave::serialize::Checkpoint::decode(data) {
        // decoded checkpoints re-encode and decode to the same value
        let bytes = ck.encode();
        let again = deepwave::serialize::Checkpoint::decode(&bytes).expect("round trip");
        assert_eq!(ck, again);
    }
});
