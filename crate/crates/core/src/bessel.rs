//! Bessel functions of the first kind, integer order.
//!
//! Evaluated with Miller's downward recurrence normalized by
//! `J_0(x) + 2 * sum_k J_{2k}(x) = 1`, which is stable for all orders at
//! once and is accurate to ~1e-13 absolute over the argument range used by
//! the array-factor series (|x| up to a few hundred).

/// All of `J_0(x) .. J_nmax(x)` in one downward pass.
pub fn bessel_j_upto(nmax: usize, x: f64) -> Vec<f64> {
    let ax = x.abs();
    if ax == 0.0 {
        let mut out = vec![0.0; nmax + 1];
        out[0] = 1.0;
        return out;
    }

    // Start far enough above both the requested order and the argument for
    // the downward recurrence to have converged to the true ratio.
    let mut start = nmax.max(ax.ceil() as usize);
    start += 16 + (14.0 * (start as f64).sqrt()) as usize;
    if start % 2 == 1 {
        start += 1;
    }

    let mut out = vec![0.0; nmax + 1];
    let mut jp = 0.0_f64; // J_{k+1}
    let mut j = 1e-300_f64; // J_k (arbitrary seed, fixed by normalization)
    let mut norm = 0.0_f64; // accumulates J_0 + 2*sum J_{2k}
    for k in (0..=start).rev() {
        let jm = (2.0 * (k as f64 + 1.0) / ax) * j - jp; // J_k from J_{k+1}, J_{k+2}
        jp = j;
        j = jm;
        // Rescale to dodge overflow; everything is linear in the seed.
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp *= 1e-250;
            norm *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
        if k % 2 == 0 {
            norm += if k == 0 { j } else { 2.0 * j };
        }
        if k <= nmax {
            out[k] = j;
        }
    }
    for v in out.iter_mut() {
        *v /= norm;
    }
    if x < 0.0 {
        for (k, v) in out.iter_mut().enumerate() {
            if k % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

/// `J_n(x)` for any integer order (negative orders via `J_{-n} = (-1)^n J_n`).
pub fn bessel_j(n: i64, x: f64) -> f64 {
    let (order, sign) = if n >= 0 {
        (n as usize, 1.0)
    } else {
        ((-n) as usize, if n % 2 == 0 { 1.0 } else { -1.0 })
    };
    sign * bessel_j_upto(order, x)[order]
}
