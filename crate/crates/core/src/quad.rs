//! Adaptive Gauss-Kronrod (7, 15) quadrature for complex integrands.

use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
/// Gauss weights at the odd-indexed Kronrod nodes.
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

pub const MAX_INTERVALS: usize = 20_000;

/// Kronrod estimate and `|Kronrod - Gauss|` on `[a, b]`.
pub fn gk15(f: &mut impl FnMut(f64) -> Complex64, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let centre = f(c);
    let mut kronrod = centre * WGK[7];
    let mut gauss = centre * WG[3];
    for i in 0..7 {
        let pair = f(c - h * XGK[i]) + f(c + h * XGK[i]);
        kronrod += pair * WGK[i];
        if i % 2 == 1 {
            gauss += pair * WG[i / 2];
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).norm())
}

struct Piece {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Piece {}

impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integral of `f` over `[a, b]` to absolute error `tol`, bisecting the
/// interval with the largest error estimate first.
pub fn integrate(mut f: impl FnMut(f64) -> Complex64, a: f64, b: f64, tol: f64) -> Result<Complex64> {
    let (value, error) = gk15(&mut f, a, b);
    let mut heap = BinaryHeap::from([Piece { a, b, value, error }]);
    let mut total_error = error;
    while total_error > tol {
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::QuadratureUnresolved { change: total_error });
        }
        let worst = heap.pop().expect("nonempty");
        let mid = 0.5 * (worst.a + worst.b);
        let (lv, le) = gk15(&mut f, worst.a, mid);
        let (rv, re) = gk15(&mut f, mid, worst.b);
        total_error += le + re - worst.error;
        heap.push(Piece { a: worst.a, b: mid, value: lv, error: le });
        heap.push(Piece { a: mid, b: worst.b, value: rv, error: re });
        if !total_error.is_finite() {
            return Err(Error::QuadratureUnresolved { change: total_error });
        }
    }
    Ok(heap.iter().map(|p| p.value).sum())
}

/// Like `integrate`, with `x = a + (b - a) (3u^2 - 2u^3)` so that inverse
/// square-root singularities at either end become smooth.
pub fn integrate_endpoint_singular(mut f: impl FnMut(f64) -> Complex64, a: f64, b: f64, tol: f64) -> Result<Complex64> {
    let w = b - a;
    integrate(
        |u| {
            let x = a + w * u * u * (3.0 - 2.0 * u);
            f(x) * (w * 6.0 * u * (1.0 - u))
        },
        0.0,
        1.0,
        tol,
    )
}
