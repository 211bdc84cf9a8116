//! Triangle quadrature in barycentric coordinates. Weights sum to one and
//! are multiplied by the triangle area by the caller.

/// `(λ₁, λ₂, λ₃, weight)`.
pub type QuadPoint = ([f64; 3], f64);

/// Edge-midpoint rule, exact for degree 2.
pub fn three_point() -> Vec<QuadPoint> {
    vec![([0.5, 0.5, 0.0], 1.0 / 3.0), ([0.0, 0.5, 0.5], 1.0 / 3.0), ([0.5, 0.0, 0.5], 1.0 / 3.0)]
}

/// Seven-point rule, exact for degree 5.
pub fn seven_point() -> Vec<QuadPoint> {
    let s15 = 15f64.sqrt();
    let a = (6.0 - s15) / 21.0;
    let b = (6.0 + s15) / 21.0;
    let wa = (155.0 - s15) / 1200.0;
    let wb = (155.0 + s15) / 1200.0;
    let third = 1.0 / 3.0;
    vec![
        ([third, third, third], 9.0 / 40.0),
        ([a, a, 1.0 - 2.0 * a], wa),
        ([a, 1.0 - 2.0 * a, a], wa),
        ([1.0 - 2.0 * a, a, a], wa),
        ([b, b, 1.0 - 2.0 * b], wb),
        ([b, 1.0 - 2.0 * b, b], wb),
        ([1.0 - 2.0 * b, b, b], wb),
    ]
}
