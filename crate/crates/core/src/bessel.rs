//! Bessel functions of the first kind, integer order.
//!
//! All orders are produced together by Miller's backward recurrence,
//! normalized with `J_0 + 2 * sum_k J_2k = 1`. Forward recurrence is never
//! used: it is unstable once the order exceeds the argument.

const RESCALE_ABOVE: f64 = 1e250;
const RESCALE_BY: f64 = 1e-250;

/// Order beyond which `|J_l(x)| < 1e-16` for every `|l|` at or above it.
///
/// Past the turning point `l ~ x` the functions fall off like an Airy tail
/// on the scale `x^(1/3)`.
pub fn negligible_order(x: f64) -> usize {
    let x = x.abs();
    (x + 12.0 * x.cbrt() + 20.0).ceil() as usize
}

/// `J_0(x) ..= J_max_order(x)`.
pub fn bessel_j_orders(x: f64, max_order: usize) -> Vec<f64> {
    let mut out = vec![0.0; max_order + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let sign_flip = x < 0.0;
    let ax = x.abs();

    let anchor = max_order.max(ax.ceil() as usize).max(1);
    let mut start = anchor + (160.0 * anchor as f64).sqrt() as usize + 20;
    start += start % 2;

    let two_over_x = 2.0 / ax;
    let mut j_next = 0.0; // J_{k+1}
    let mut j_cur = 1e-300; // J_k, arbitrary seed
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let j_prev = k as f64 * two_over_x * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        // j_cur now holds J_{k-1}
        let order = k - 1;
        if order <= max_order {
            out[order] = j_cur;
        }
        if order % 2 == 0 && order > 0 {
            norm += 2.0 * j_cur;
        }
        if j_cur.abs() > RESCALE_ABOVE {
            j_cur *= RESCALE_BY;
            j_next *= RESCALE_BY;
            norm *= RESCALE_BY;
            for v in out.iter_mut().skip(order) {
                *v *= RESCALE_BY;
            }
        }
    }
    norm += j_cur;
    for v in out.iter_mut() {
        *v /= norm;
    }
    if sign_flip {
        for (n, v) in out.iter_mut().enumerate() {
            if n % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

/// `J_n(x)` for a single integer order (negative orders via `J_-n = (-1)^n J_n`).
pub fn bessel_j(n: i64, x: f64) -> f64 {
    let order = n.unsigned_abs() as usize;
    let v = bessel_j_orders(x, order)[order];
    if n < 0 && order % 2 == 1 {
        -v
    } else {
        v
    }
}

pub fn bessel_j0(x: f64) -> f64 {
    bessel_j_orders(x, 0)[0]
}
