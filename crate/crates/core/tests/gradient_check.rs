#[path = "support/gradcheck.rs"]
mod gradcheck;

use gradcheck::{worst_gradient_error, TOLERANCE};

#[test]
fn analytic_gradients_match_finite_differences() {
    for seed in 0..20 {
        let e = worst_gradient_error(seed);
        assert!(e <= TOLERANCE, "seed {seed}: relative error {e}");
    }
}
