use std::f64::consts::PI;

/// Largest ambient dimension accepted by the samplers.
pub const MAX_SAMPLE_DIM: usize = 4;

/// Calls `f` on points of the origin-centred (d-1)-sphere of radius `radius`
/// such that every point of the sphere is within about `step` of a sample.
/// Latitude bands recurse down to circles; circles use a rotation recurrence
/// resynchronised every 64 steps.
pub(crate) fn for_each_sphere_point<F: FnMut(&[f64])>(d: usize, radius: f64, step: f64, f: &mut F) {
    debug_assert!((2..=MAX_SAMPLE_DIM).contains(&d));
    let mut buf = [0.0f64; MAX_SAMPLE_DIM];
    recurse(&mut buf, d, 0, radius, step, f);
}

fn recurse<F: FnMut(&[f64])>(buf: &mut [f64; MAX_SAMPLE_DIM], d: usize, off: usize, r: f64, step: f64, f: &mut F) {
    let k = d - 1 - off;
    if r <= 0.0 {
        buf[off..d].iter_mut().for_each(|v| *v = 0.0);
        f(&buf[..d]);
        return;
    }
    if k == 1 {
        let n = ((2.0 * PI * r / step).ceil() as usize).max(1);
        let dphi = 2.0 * PI / n as f64;
        let (sd, cd) = dphi.sin_cos();
        let (mut c, mut s) = (1.0f64, 0.0f64);
        for i in 0..n {
            if i % 64 == 0 {
                let (si, ci) = (dphi * i as f64).sin_cos();
                c = ci;
                s = si;
            }
            buf[off] = r * c;
            buf[off + 1] = r * s;
            f(&buf[..d]);
            let nc = c * cd - s * sd;
            s = s * cd + c * sd;
            c = nc;
        }
        return;
    }
    let n = ((PI * r / step).ceil() as usize).max(1);
    for j in 0..=n {
        let (s, c) = (PI * j as f64 / n as f64).sin_cos();
        buf[off] = r * c;
        let sub = if j == 0 || j == n { 0.0 } else { r * s };
        recurse(buf, d, off + 1, sub, step, f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_lie_on_sphere() {
        for d in 2..=4 {
            let mut n = 0;
            for_each_sphere_point(d, 0.7, 0.05, &mut |x: &[f64]| {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!((r - 0.7).abs() < 1e-12, "d={d} r={r}");
                n += 1;
            });
            assert!(n > 10);
        }
    }

    #[test]
    fn circle_spacing_bounded() {
        let mut pts = Vec::new();
        for_each_sphere_point(2, 1.0, 0.01, &mut |x: &[f64]| pts.push([x[0], x[1]]));
        for w in pts.windows(2) {
            assert!((w[0][0] - w[1][0]).hypot(w[0][1] - w[1][1]) <= 0.01);
        }
    }
}
