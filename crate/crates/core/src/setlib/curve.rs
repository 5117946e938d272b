use std::f64::consts::PI;

/// Parametrised planar curves, `t >= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Curve {
    /// `(t^{-p} sin(pi t), t^{-q} cos(pi t))`; the polynomial spiral has `q = p`.
    Spiral { p: f64, q: f64 },
    /// `(t^{-p}, t^{-pq} sin(pi t))`, the graph of `x^q sin(pi x^{-1/p})`; `q = 0` is `T_p`.
    Graph { p: f64, q: f64 },
}

impl Curve {
    #[inline]
    pub fn point(&self, t: f64) -> [f64; 2] {
        let (s, c) = (PI * t).sin_cos();
        match *self {
            Curve::Spiral { p, q } => [t.powf(-p) * s, t.powf(-q) * c],
            Curve::Graph { p, q } => [t.powf(-p), t.powf(-p * q) * s],
        }
    }

    pub fn speed(&self, t: f64) -> f64 {
        let (s, c) = (PI * t).sin_cos();
        match *self {
            Curve::Spiral { p, q } => {
                let (a, b) = (t.powf(-p), t.powf(-q));
                let dx = -p * a / t * s + PI * a * c;
                let dy = -q * b / t * c - PI * b * s;
                dx.hypot(dy)
            }
            Curve::Graph { p, q } => {
                let a = t.powf(-p * q);
                let dx = -p * t.powf(-p - 1.0);
                let dy = -p * q * a / t * s + PI * a * c;
                dx.hypot(dy)
            }
        }
    }

    /// Non-increasing upper bound on `speed` over `[t, inf)`.
    #[inline]
    pub fn speed_bound(&self, t: f64) -> f64 {
        match *self {
            Curve::Spiral { p, q } => {
                let (a, b) = (t.powf(-p), t.powf(-q));
                (p * a / t + PI * a).hypot(q * b / t + PI * b)
            }
            Curve::Graph { p, q } => {
                let a = t.powf(-p * q);
                (p * t.powf(-p - 1.0)).hypot(p * q * a / t + PI * a)
            }
        }
    }

    /// Length of the arc `t in [t0, t1]` by double-exponential quadrature of the
    /// speed, to relative accuracy about `rel_tol`.
    pub fn arc_length(&self, t0: f64, t1: f64, rel_tol: f64) -> f64 {
        if t1 <= t0 {
            return 0.0;
        }
        // Unit-parameter pieces keep the integrand free of many oscillations.
        let mut total = 0.0;
        let mut a = t0;
        while a < t1 {
            let b = (a.floor() + 1.0).min(t1);
            let scale = self.speed_bound(a) * (b - a);
            total += quadrature::integrate(|t| self.speed(t), a, b, rel_tol * scale).integral;
            a = b;
        }
        total
    }

    /// Walks `t` from `t0` to `t1` with chord length at most `step`, calling
    /// `f` on each point including both ends.
    pub fn walk(&self, t0: f64, t1: f64, step: f64, mut f: impl FnMut(f64, [f64; 2])) {
        let mut t = t0;
        loop {
            f(t, self.point(t));
            if t >= t1 {
                break;
            }
            t = (t + step / self.speed_bound(t)).min(t1);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn speed_bound_dominates_speed() {
        let curves = [
            Curve::Spiral { p: 0.5, q: 0.5 },
            Curve::Spiral { p: 0.3, q: 1.5 },
            Curve::Graph { p: 1.0, q: 0.5 },
            Curve::Graph { p: 2.0, q: 0.0 },
        ];
        for c in curves {
            let mut t = 1.0;
            while t < 50.0 {
                assert!(c.speed(t) <= c.speed_bound(t) * (1.0 + 1e-12));
                assert!(c.speed_bound(t + 0.1) <= c.speed_bound(t));
                t += 0.013;
            }
        }
    }

    #[test]
    fn arc_length_matches_polyline() {
        let c = Curve::Graph { p: 1.0, q: 0.5 };
        let mut len = 0.0;
        let mut prev = c.point(2.0);
        let n = 200_000;
        for k in 1..=n {
            let pt = c.point(2.0 + k as f64 / n as f64);
            len += (pt[0] - prev[0]).hypot(pt[1] - prev[1]);
            prev = pt;
        }
        assert!((c.arc_length(2.0, 3.0, 1e-10) - len).abs() < 1e-8);
    }

    #[test]
    fn walk_chords_respect_step() {
        let c = Curve::Graph { p: 1.0, q: 0.5 };
        let mut prev: Option<[f64; 2]> = None;
        let mut n = 0;
        c.walk(1.0, 5.0, 1e-3, |_, pt| {
            if let Some(q) = prev {
                assert!((pt[0] - q[0]).hypot(pt[1] - q[1]) <= 1e-3 * (1.0 + 1e-9));
            }
            prev = Some(pt);
            n += 1;
        });
        assert!(n > 1000);
    }
}
