#![no_main]
use ising_relax::dichotomized::{load_covariance, store_covariance, DichotomizedGaussianModel};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(sigma) = load_covariance(text) {
        assert_eq!(load_covariance(&store_covariance(&sigma)).unwrap(), sigma);
        if sigma.n() <= 16 {
            // must reject or build, never panic
            let _ = DichotomizedGaussianModel::build(&sigma, 1.0);
        }
    }
});
