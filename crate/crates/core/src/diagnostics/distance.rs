//! Exact bounded-Lipschitz distance between two empirical laws on the line.
//!
//! The dual problem `sup Σ wⱼ f(xⱼ)` over `|f| ≤ 1`, `Lip(f) ≤ 1` is solved by
//! dynamic programming over the merged sorted sample points. The value
//! function of the tail, as a function of `f` at the current point, is
//! concave and piecewise linear on `[−1, 1]`; moving to the previous point
//! takes a sliding-window maximum of half-width equal to the gap, which for
//! concave functions amounts to widening the flat top.

const TOL: f64 = 1e-15;

/// Concave piecewise-linear function on `[−1, 1]`: value at `−1` and
/// `(length, slope)` segments with decreasing slopes.
#[derive(Debug, Clone)]
struct Concave {
    left: f64,
    segs: Vec<(f64, f64)>,
}

impl Concave {
    fn linear(w: f64) -> Self {
        Self {
            left: -w,
            segs: vec![(2.0, w)],
        }
    }

    fn add_linear(&mut self, w: f64) {
        self.left -= w;
        for s in &mut self.segs {
            s.1 += w;
        }
    }

    fn max(&self) -> f64 {
        self.left
            + self
                .segs
                .iter()
                .filter(|s| s.1 > 0.0)
                .map(|s| s.0 * s.1)
                .sum::<f64>()
    }

    /// `x ↦ max_{|y−x| ≤ d, |y| ≤ 1} V(y)`.
    fn window_max(&mut self, d: f64) {
        let pos: Vec<(f64, f64)> = self.segs.iter().copied().filter(|s| s.1 > 0.0).collect();
        let zero_len: f64 = self.segs.iter().filter(|s| s.1 == 0.0).map(|s| s.0).sum();
        let neg: Vec<(f64, f64)> = self.segs.iter().copied().filter(|s| s.1 < 0.0).collect();
        let pos_len: f64 = pos.iter().map(|s| s.0).sum();
        let neg_len: f64 = neg.iter().map(|s| s.0).sum();

        let mut left = self.left;
        let mut skip = d;
        let mut new_pos = Vec::with_capacity(pos.len());
        for (len, slope) in pos {
            if skip >= len {
                left += len * slope;
                skip -= len;
            } else {
                left += skip * slope;
                new_pos.push((len - skip, slope));
                skip = 0.0;
            }
        }

        let mut new_neg = Vec::with_capacity(neg.len());
        let mut skip = d;
        for (len, slope) in neg.into_iter().rev() {
            if skip >= len {
                skip -= len;
            } else {
                new_neg.push((len - skip, slope));
                skip = 0.0;
            }
        }
        new_neg.reverse();

        let peak_lo = -1.0 + pos_len;
        let peak_hi = peak_lo + zero_len;
        debug_assert!((peak_hi + neg_len - 1.0).abs() < 1e-9);
        let flat = (peak_hi + d).min(1.0) - (peak_lo - d).max(-1.0);

        let mut segs = new_pos;
        if flat > TOL {
            segs.push((flat, 0.0));
        }
        segs.extend(new_neg);
        segs.retain(|s| s.0 > TOL);
        self.left = left;
        self.segs = segs;
    }
}

/// BL distance between two weighted point sets given as merged `(x, w)`
/// pairs, `w` the signed mass difference.
fn dual_value(mut points: Vec<(f64, f64)>) -> f64 {
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for (x, w) in points {
        match merged.last_mut() {
            Some(last) if last.0 == x => last.1 += w,
            _ => merged.push((x, w)),
        }
    }
    let Some(&(mut prev_x, w_last)) = merged.last() else {
        return 0.0;
    };
    let mut v = Concave::linear(w_last);
    for &(x, w) in merged.iter().rev().skip(1) {
        v.window_max(prev_x - x);
        v.add_linear(w);
        prev_x = x;
    }
    v.max().max(0.0)
}

/// Exact bounded-Lipschitz distance between the empirical laws of two
/// scalar samples, over test functions with `|f| ≤ 1` and `Lip(f) ≤ 1`.
pub fn bl_distance_1d(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let wa = 1.0 / a.len() as f64;
    let wb = -1.0 / b.len() as f64;
    let pts = a
        .iter()
        .map(|&x| (x, wa))
        .chain(b.iter().map(|&x| (x, wb)))
        .collect();
    dual_value(pts)
}
