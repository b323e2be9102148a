use nalgebra::Point3;
use serde::Serialize;

use crate::atlas::BRepCurve;
use crate::mesh::Triangulation;

/// Polyline vertices turning by more than this many degrees are kept as
/// discretization points.
pub const CURVE_CORNER_ANGLE: f64 = 40.0;

/// A point on model segment `(a, b)` at parameter `t` in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveSample {
    pub a: usize,
    pub b: usize,
    pub t: f64,
}

impl CurveSample {
    pub fn position(&self, model: &Triangulation) -> Point3<f64> {
        let pa = model.vertices[self.a];
        if self.t == 0.0 {
            pa
        } else {
            pa + self.t * (model.vertices[self.b] - pa)
        }
    }

    /// The model vertex this sample coincides with, if any.
    pub fn vertex(&self) -> Option<usize> {
        (self.t == 0.0).then_some(self.a)
    }
}

/// Discretization of one model curve. Closed curves do not repeat their
/// first sample.
#[derive(Debug, Clone, Serialize)]
pub struct DiscreteCurve {
    pub samples: Vec<CurveSample>,
    pub closed: bool,
}

impl DiscreteCurve {
    pub fn num_segments(&self) -> usize {
        if self.closed {
            self.samples.len()
        } else {
            self.samples.len() - 1
        }
    }
}

fn turning_angle(p: &Point3<f64>, q: &Point3<f64>, r: &Point3<f64>) -> f64 {
    let (u, v) = (q - p, r - q);
    let c = u.dot(&v) / (u.norm() * v.norm());
    c.clamp(-1.0, 1.0).acos().to_degrees()
}

/// Resamples a curve at spacing close to `h` along its arc length with at
/// least `min_segments` segments (three for closed curves). Curve ends and
/// sharp polyline corners are kept; every other sample lies on an original
/// segment.
pub fn discretize_curve(curve: &BRepCurve, model: &Triangulation, h: f64, min_segments: usize) -> DiscreteCurve {
    let mut vs = curve.vertices.clone();
    if curve.closed {
        vs.push(vs[0]);
    }
    let p: Vec<Point3<f64>> = vs.iter().map(|&v| model.vertices[v]).collect();
    let mut cum = vec![0.0];
    for k in 1..p.len() {
        cum.push(cum[k - 1] + (p[k] - p[k - 1]).norm());
    }
    let mut breaks = vec![0];
    for k in 1..p.len() - 1 {
        if turning_angle(&p[k - 1], &p[k], &p[k + 1]) > CURVE_CORNER_ANGLE {
            breaks.push(k);
        }
    }
    breaks.push(p.len() - 1);
    let runs: Vec<(usize, usize, f64)> = breaks.windows(2).map(|w| (w[0], w[1], cum[w[1]] - cum[w[0]])).collect();
    let mut counts: Vec<usize> = runs.iter().map(|r| ((r.2 / h).round() as usize).max(1)).collect();
    let min = if curve.closed { min_segments.max(3) } else { min_segments.max(1) };
    while counts.iter().sum::<usize>() < min {
        let k = (0..runs.len())
            .max_by(|&x, &y| (runs[x].2 / counts[x] as f64).total_cmp(&(runs[y].2 / counts[y] as f64)))
            .unwrap();
        counts[k] += 1;
    }
    let mut samples = Vec::new();
    for (&(i0, i1, len), &m) in runs.iter().zip(&counts) {
        samples.push(CurveSample {
            a: vs[i0],
            b: vs[i0 + 1],
            t: 0.0,
        });
        let mut seg = i0;
        for k in 1..m {
            let s = cum[i0] + len * k as f64 / m as f64;
            while seg + 1 < i1 && cum[seg + 1] <= s {
                seg += 1;
            }
            let l = cum[seg + 1] - cum[seg];
            let t = ((s - cum[seg]) / l).clamp(0.0, 1.0);
            samples.push(if t == 1.0 {
                CurveSample {
                    a: vs[seg + 1],
                    b: vs[(seg + 2).min(vs.len() - 1)],
                    t: 0.0,
                }
            } else {
                CurveSample {
                    a: vs[seg],
                    b: vs[seg + 1],
                    t,
                }
            });
        }
    }
    if !curve.closed {
        let last = *vs.last().unwrap();
        samples.push(CurveSample { a: last, b: last, t: 0.0 });
    }
    DiscreteCurve {
        samples,
        closed: curve.closed,
    }
}
