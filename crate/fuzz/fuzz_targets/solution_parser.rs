#![no_main]
use ising_relax::relax::PseudoMomentSolution;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(sol) = PseudoMomentSolution::from_json(text) {
        let again =
            PseudoMomentSolution::from_json(&sol.to_json()).expect("written solutions load");
        assert_eq!(again.m, sol.m);
    }
});
