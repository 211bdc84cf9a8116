//! The local data `(A, n, v, w, k)` near a boundary point, in the aligned
//! frame.

use std::sync::Arc;

use super::fields::{MatrixField, RotatedMatrix, RotatedScalar, ScalarField};
use super::frame::{align_frame, HodographFrame};
use crate::error::HodographError;
use crate::media::sym_eigenvalues;
use crate::Point;

#[derive(Clone)]
pub struct LocalProblem {
    pub a: Arc<dyn MatrixField>,
    pub n: Arc<dyn ScalarField>,
    pub v: Arc<dyn ScalarField>,
    /// Vanishes on the boundary, positive inside `Ω`.
    pub w: Arc<dyn ScalarField>,
    pub k: f64,
    pub frame: HodographFrame,
}

impl LocalProblem {
    /// Data already given in an aligned frame with `P = 0`.
    pub fn aligned(a: Arc<dyn MatrixField>, n: Arc<dyn ScalarField>, v: Arc<dyn ScalarField>, w: Arc<dyn ScalarField>, k: f64, radius: f64) -> Self {
        let c1 = (a.jet(Point::zeros()).value * Point::new(-1.0, 0.0)).norm();
        let frame = HodographFrame { origin: [0.0, 0.0], rotation: [[1.0, 0.0], [0.0, 1.0]], c1, sign: 1.0, radius };
        Self { a, n, v, w, k, frame }
    }

    /// Rotates physical data about the boundary point `p`. The outward normal
    /// defaults to `−∇w(P)/|∇w(P)|`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_physical(
        a: Arc<dyn MatrixField>,
        n: Arc<dyn ScalarField>,
        v: Arc<dyn ScalarField>,
        w: Arc<dyn ScalarField>,
        k: f64,
        p: Point,
        nu: Option<Point>,
        radius: f64,
    ) -> Result<Self, HodographError> {
        let gw = w.jet(p).gradient;
        let nu = match nu {
            Some(nu) => nu,
            None if gw.norm() > 0.0 => -gw / gw.norm(),
            None => return Err(HodographError::InvalidParameter("∇w(P) = 0; supply the normal explicitly".into())),
        };
        let ap = a.jet(p).value;
        let ev = sym_eigenvalues(&ap);
        if !(ev[0] > 0.0) {
            return Err(HodographError::InvalidParameter(format!("A(P) is not positive definite: eigenvalues {ev:?}")));
        }
        let frame = align_frame(p, &ap, nu, Some(gw), radius)?;
        let q = frame.q();
        let rs = |f: Arc<dyn ScalarField>, sign: f64| -> Arc<dyn ScalarField> { Arc::new(RotatedScalar { inner: f, origin: p, q, sign }) };
        Ok(Self { a: Arc::new(RotatedMatrix { inner: a, origin: p, q }), n: rs(n, 1.0), v: rs(v, frame.sign), w: rs(w, frame.sign), k, frame })
    }

    pub fn radius(&self) -> f64 {
        self.frame.radius
    }
}
