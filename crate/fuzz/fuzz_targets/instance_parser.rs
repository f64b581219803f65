#![no_main]
use ising_relax::model::{load_instance, store_instance};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(inst) = load_instance(text) {
        let stored = store_instance(&inst);
        let again = load_instance(&stored).expect("stored instances load");
        assert_eq!(again, inst);
        assert_eq!(store_instance(&again), stored);
    }
});
