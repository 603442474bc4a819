//! Finite-difference stencils on uniform grids.
//!
//! Weights come from Fornberg's recursion, so one routine covers centered
//! interior stencils and the shifted one-sided stencils used at the faces of
//! a truncated window.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::Grid3;

/// Weights `w` such that `f^(m)(0) ≈ Σ w_j f(x_j)` for the given nodes
/// (unit spacing).
pub fn fornberg_weights(nodes: &[f64], m: usize) -> Vec<f64> {
    let n = nodes.len();
    assert!(n > m, "need more nodes than the derivative order");
    // c[j][k]: weight of node j for derivative k
    let mut c = vec![vec![0.0; m + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0];
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i];
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// Stencil for one output index: first source offset and weights (already
/// divided by `h^m`).
#[derive(Clone, Debug)]
struct PointStencil {
    start: isize,
    weights: Vec<f64>,
}

/// All point stencils of one derivative along one axis.
#[derive(Clone, Debug)]
pub struct AxisStencil {
    n: usize,
    periodic: bool,
    points: Vec<PointStencil>,
}

impl AxisStencil {
    /// `derivative` is 1 or 2; `order` is the formal accuracy (2 or 4).
    pub fn new(n: usize, h: f64, periodic: bool, derivative: usize, order: usize) -> Result<Self> {
        let centered_width = order + 1;
        let one_sided_width = order + derivative;
        let half = (centered_width / 2) as isize;
        let centered_nodes: Vec<f64> = (-half..=half).map(|o| o as f64).collect();
        let centered = fornberg_weights(&centered_nodes, derivative);
        let scale = h.powi(derivative as i32);

        if periodic {
            if n < centered_width {
                return Err(Error::Config(format!(
                    "order-{order} stencil needs {centered_width} points, axis has {n}"
                )));
            }
            let weights: Vec<f64> = centered.iter().map(|w| w / scale).collect();
            let points = (0..n)
                .map(|i| PointStencil {
                    start: i as isize - half,
                    weights: weights.clone(),
                })
                .collect();
            return Ok(Self { n, periodic, points });
        }

        if n < one_sided_width {
            return Err(Error::Config(format!(
                "order-{order} one-sided stencil needs {one_sided_width} points, axis has {n}"
            )));
        }
        let mut points = Vec::with_capacity(n);
        for i in 0..n as isize {
            if i - half >= 0 && i + half < n as isize {
                points.push(PointStencil {
                    start: i - half,
                    weights: centered.iter().map(|w| w / scale).collect(),
                });
            } else {
                let w = one_sided_width as isize;
                let start = if i - half < 0 { 0 } else { n as isize - w };
                let nodes: Vec<f64> = (start..start + w).map(|s| (s - i) as f64).collect();
                points.push(PointStencil {
                    start,
                    weights: fornberg_weights(&nodes, derivative)
                        .into_iter()
                        .map(|x| x / scale)
                        .collect(),
                });
            }
        }
        Ok(Self { n, periodic, points })
    }

    #[inline]
    fn apply_line(&self, src: impl Fn(usize) -> f64, i: usize) -> f64 {
        let p = &self.points[i];
        let mut acc = 0.0;
        for (o, w) in p.weights.iter().enumerate() {
            let s = p.start + o as isize;
            let s = if self.periodic {
                s.rem_euclid(self.n as isize) as usize
            } else {
                s as usize
            };
            acc += w * src(s);
        }
        acc
    }
}

/// Applies a derivative stencil along `axis` of a scalar field.
pub fn apply_axis(f: &ScalarField, axis: usize, stencil: &AxisStencil) -> ScalarField {
    let g = *f.grid();
    let [nx, ny, nz] = g.n();
    let data = f.data();
    let mut out = vec![0.0; g.len()];
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let v = match axis {
                    0 => stencil.apply_line(|s| data[g.index(s, j, k)], i),
                    1 => stencil.apply_line(|s| data[g.index(i, s, k)], j),
                    _ => stencil.apply_line(|s| data[g.index(i, j, s)], k),
                };
                out[g.index(i, j, k)] = v;
            }
        }
    }
    ScalarField::from_vec_unchecked(g, out)
}

/// First- and second-derivative stencils along all three axes of a grid.
/// One-sided second derivatives need one point more than first
/// derivatives, so on the smallest windows only `first` exists.
#[derive(Clone, Debug)]
pub struct GridStencils {
    pub first: [AxisStencil; 3],
    second: std::result::Result<[AxisStencil; 3], String>,
}

impl GridStencils {
    pub fn new(grid: &Grid3, order: usize) -> Result<Self> {
        if order != 2 && order != 4 {
            return Err(Error::InvalidArgument(format!(
                "finite-difference order must be 2 or 4, got {order}"
            )));
        }
        let n = grid.n();
        let h = grid.spacing();
        let periodic = grid.is_periodic();
        let build = |d: usize| -> Result<[AxisStencil; 3]> {
            Ok([
                AxisStencil::new(n[0], h[0], periodic, d, order)?,
                AxisStencil::new(n[1], h[1], periodic, d, order)?,
                AxisStencil::new(n[2], h[2], periodic, d, order)?,
            ])
        };
        Ok(Self {
            first: build(1)?,
            second: build(2).map_err(|e| e.to_string()),
        })
    }

    pub fn second(&self) -> Result<&[AxisStencil; 3]> {
        self.second.as_ref().map_err(|e| Error::Config(e.clone()))
    }
}
