//! Shared small instances for unit tests.

use crate::instance::{JspInstance, Operation};

/// j1 = [(m0,1),(m1,1)], j2 = [(m1,1),(m0,1)]; optimum 2.
pub fn two_by_two() -> JspInstance {
    JspInstance::new(
        2,
        vec![
            vec![Operation::new(0, 1), Operation::new(1, 1)],
            vec![Operation::new(1, 1), Operation::new(0, 1)],
        ],
    )
    .unwrap()
}
