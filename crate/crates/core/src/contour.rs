//! Iso-lines on a rectilinear grid by marching squares.

/// Line segment between two points in data coordinates.
pub type Segment = [(f64, f64); 2];

/// Extracts the `level` iso-line of `values[iy][ix]` sampled at `(x[ix], y[iy])`.
/// Saddle cells are split using the cell-centre average. Cells touching a
/// non-finite value are skipped.
pub fn marching_squares(x: &[f64], y: &[f64], values: &[Vec<f64>], level: f64) -> Vec<Segment> {
    let mut out = Vec::new();
    if x.len() < 2 || y.len() < 2 {
        return out;
    }
    for iy in 0..y.len() - 1 {
        for ix in 0..x.len() - 1 {
            // corners counter-clockwise from bottom-left
            let v = [
                values[iy][ix],
                values[iy][ix + 1],
                values[iy + 1][ix + 1],
                values[iy + 1][ix],
            ];
            if v.iter().any(|a| !a.is_finite()) {
                continue;
            }
            let p = [
                (x[ix], y[iy]),
                (x[ix + 1], y[iy]),
                (x[ix + 1], y[iy + 1]),
                (x[ix], y[iy + 1]),
            ];
            let mut case = 0;
            for (k, a) in v.iter().enumerate() {
                if *a >= level {
                    case |= 1 << k;
                }
            }
            let edge = |e: usize| -> (f64, f64) {
                let (i, j) = (e, (e + 1) % 4);
                let t = (level - v[i]) / (v[j] - v[i]);
                (p[i].0 + t * (p[j].0 - p[i].0), p[i].1 + t * (p[j].1 - p[i].1))
            };
            // edges: 0 bottom, 1 right, 2 top, 3 left
            let pairs: &[(usize, usize)] = match case {
                0 | 15 => &[],
                1 | 14 => &[(3, 0)],
                2 | 13 => &[(0, 1)],
                3 | 12 => &[(3, 1)],
                4 | 11 => &[(1, 2)],
                6 | 9 => &[(0, 2)],
                7 | 8 => &[(2, 3)],
                5 | 10 => {
                    let centre = 0.25 * (v[0] + v[1] + v[2] + v[3]);
                    if (centre >= level) == (case == 5) {
                        &[(3, 2), (0, 1)]
                    } else {
                        &[(3, 0), (1, 2)]
                    }
                }
                _ => unreachable!(),
            };
            for &(a, b) in pairs {
                out.push([edge(a), edge(b)]);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_has_no_contour() {
        let v = vec![vec![1.0; 4]; 3];
        assert!(marching_squares(&[0.0, 1.0, 2.0, 3.0], &[0.0, 1.0, 2.0], &v, 0.98).is_empty());
    }

    #[test]
    fn linear_ramp_gives_straight_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [0.0, 1.0];
        let v: Vec<Vec<f64>> = y.iter().map(|_| x.iter().map(|&a| a).collect()).collect();
        let segs = marching_squares(&x, &y, &v, 1.5);
        assert_eq!(segs.len(), 1);
        for (px, _) in segs[0] {
            assert!((px - 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn circle_is_closed() {
        let n = 41;
        let g: Vec<f64> = (0..n).map(|i| -2.0 + 4.0 * i as f64 / (n - 1) as f64).collect();
        let v: Vec<Vec<f64>> = g.iter().map(|&y| g.iter().map(|&x| x * x + y * y).collect()).collect();
        let segs = marching_squares(&g, &g, &v, 1.0);
        assert!(segs.len() > 20);
        for s in &segs {
            for (x, y) in s {
                assert!(((x * x + y * y).sqrt() - 1.0).abs() < 0.02);
            }
        }
    }
}
