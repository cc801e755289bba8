mod common;

use common::{loss_grad_error, mmd_grad_error, network_grad_error, tiny_case};

#[test]
fn network_gradients_match_central_differences() {
    for seed in 0..100 {
        let case = tiny_case(seed);
        let e = network_grad_error(&case);
        assert!(e < 1e-4, "net {seed}: relative error {e}");
    }
}

#[test]
fn loss_gradients_match_central_differences() {
    for seed in 0..100 {
        let case = tiny_case(seed);
        let e = loss_grad_error(&case, seed);
        assert!(e < 1e-4, "net {seed}: relative error {e}");
    }
}

#[test]
fn mmd_gradients_match_central_differences() {
    for seed in 0..100 {
        let e = mmd_grad_error(seed);
        assert!(e < 1e-4, "case {seed}: relative error {e}");
    }
}
