//! The worked examples: plant matrices and the spectral radii quoted for the
//! observers obtained from one particular random data set each.

use crate::descriptor::{DescriptorSystem, LtiSystem};
use crate::linalg::Mat;

/// Reference radii reported with the examples. They depend on unrecorded
/// random data and are kept as annotations only.
pub const EXAMPLE1_REFERENCE_RADIUS: f64 = 0.2083;
pub const EXAMPLE2_REFERENCE_RADIUS: f64 = 0.4628;
pub const EXAMPLE4_REFERENCE_RADIUS: f64 = 0.7426;

fn a() -> Mat {
    Mat::from_row_slice(
        3,
        3,
        &[
            0.153, 0.045, 0.069, 0.156, 0.252, 0.156, 0.135, -0.171, -0.636,
        ],
    )
}

fn b() -> Mat {
    Mat::from_row_slice(3, 1, &[1.0, 1.0, 0.2])
}

/// Regular descriptor plant with `n = 3`, `m = 1`, `p = 2`.
pub fn example1() -> DescriptorSystem {
    DescriptorSystem::new(
        Mat::from_row_slice(3, 3, &[1.0, 2.0, 1.0, 0.0, 2.0, 1.0, 1.0, 0.0, 0.0]),
        a(),
        b(),
        Mat::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 1.0, 0.0, 1.0]),
        None,
    )
    .expect("valid example")
}

/// Example 1 with the unknown-input direction `F = [1, 0.2, 0.5]ᵀ`.
pub fn example2() -> DescriptorSystem {
    let mut s = example1();
    s.f = Some(Mat::from_row_slice(3, 1, &[1.0, 0.2, 0.5]));
    s
}

/// State-space plant with a two-channel disturbance.
pub fn example4() -> LtiSystem {
    LtiSystem::new(
        a(),
        b(),
        Mat::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]),
        Mat::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]),
        Mat::from_row_slice(2, 2, &[1.2, 1.0, 0.0, 1.0]),
    )
    .expect("valid example")
}
