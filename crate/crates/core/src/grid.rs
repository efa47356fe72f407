//! Sampled functions on node sets over [0, 1].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::BoundaryConfig;

/// Nodes closer than this are treated as the same point.
pub const NODE_TOL: f64 = 1e-12;

/// A function sampled on a strictly increasing node set spanning [0, 1].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        validate_nodes(&nodes)?;
        if nodes.len() != values.len() {
            return Err(Error::Grid(format!("{} nodes but {} values", nodes.len(), values.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("grid value at node {i} (x = {})", nodes[i])));
        }
        Ok(GridFunction { nodes, values })
    }

    pub fn from_fn(nodes: &[f64], f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = nodes.iter().map(|&x| f(x)).collect();
        GridFunction::new(nodes.to_vec(), values)
    }

    pub fn zeros(nodes: &[f64]) -> Self {
        GridFunction { nodes: nodes.to_vec(), values: vec![0.0; nodes.len()] }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Value at a point that must be a node.
    pub fn at_node(&self, x: f64) -> Result<f64> {
        node_index(&self.nodes, x)
            .map(|i| self.values[i])
            .ok_or_else(|| Error::Grid(format!("{x} is not a grid node")))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// sup |self - other| over the shared grid.
    pub fn sup_diff(&self, other: &GridFunction) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        let same = self.nodes.len() == other.nodes.len()
            && self.nodes.iter().zip(&other.nodes).all(|(a, b)| (a - b).abs() <= NODE_TOL);
        if same {
            Ok(())
        } else {
            Err(Error::Grid("mismatched grids".into()))
        }
    }

    /// Pointwise linear combination `a*self + b*other`.
    pub fn combine(&self, a: f64, other: &GridFunction, b: f64) -> Result<GridFunction> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(p, q)| a * p + b * q).collect();
        Ok(GridFunction { nodes: self.nodes.clone(), values })
    }
}

pub fn validate_nodes(nodes: &[f64]) -> Result<()> {
    if nodes.len() < 5 {
        return Err(Error::Grid(format!("need at least 5 nodes, got {}", nodes.len())));
    }
    if nodes[0] != 0.0 || nodes[nodes.len() - 1] != 1.0 {
        return Err(Error::Grid("nodes must start at 0 and end at 1".into()));
    }
    if let Some(w) = nodes.windows(2).position(|w| !(w[1] - w[0] > NODE_TOL)) {
        return Err(Error::Grid(format!("nodes not strictly increasing at index {}", w + 1)));
    }
    Ok(())
}

/// Index of the node equal to `x` (within [`NODE_TOL`]).
pub fn node_index(nodes: &[f64], x: f64) -> Option<usize> {
    let i = nodes.partition_point(|&n| n < x - NODE_TOL);
    (i < nodes.len() && (nodes[i] - x).abs() <= NODE_TOL).then_some(i)
}

/// Uniform grid of `n` nodes on [0, 1] with ξ and η inserted when they are
/// not already nodes.
pub fn solver_grid(config: &BoundaryConfig, n: usize) -> Result<Vec<f64>> {
    if n < 5 {
        return Err(Error::Grid(format!("need at least 5 nodes, got {n}")));
    }
    let step = 1.0 / (n - 1) as f64;
    let mut nodes: Vec<f64> = (0..n).map(|i| i as f64 * step).collect();
    nodes[n - 1] = 1.0;
    let mut extra = Vec::new();
    for p in [config.xi, config.eta] {
        let nearest = (p / step).round();
        if (nearest * step - p).abs() <= 1e-10 {
            // snap to the exact boundary value so node lookups are exact
            nodes[nearest as usize] = p;
        } else {
            extra.push(p);
        }
    }
    for p in extra {
        let i = nodes.partition_point(|&v| v < p);
        nodes.insert(i, p);
    }
    validate_nodes(&nodes)?;
    Ok(nodes)
}

/// Checks that `nodes` is a valid grid containing ξ and η and returns their
/// indices.
pub fn boundary_indices(config: &BoundaryConfig, nodes: &[f64]) -> Result<(usize, usize)> {
    validate_nodes(nodes)?;
    let xi = node_index(nodes, config.xi)
        .ok_or_else(|| Error::Grid(format!("xi = {} is not a grid node", config.xi)))?;
    let eta = node_index(nodes, config.eta)
        .ok_or_else(|| Error::Grid(format!("eta = {} is not a grid node", config.eta)))?;
    Ok((xi, eta))
}

/// Uniform spacing of `nodes`, or `None` if they are not uniform.
pub fn uniform_spacing(nodes: &[f64]) -> Option<f64> {
    let h = (nodes[nodes.len() - 1] - nodes[0]) / (nodes.len() - 1) as f64;
    nodes.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h).then_some(h)
}

/// Finite-difference weights for the `order`-th derivative at `x0` using
/// the points `xs` (Fornberg's recursion).
pub fn fd_weights(x0: f64, xs: &[f64], order: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
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
    c.into_iter().map(|row| row[order]).collect()
}

/// Second derivative at every node with `2 <= i <= n-3` from the five
/// surrounding nodes. Entry `j` of the result belongs to node `j + 2`.
pub fn second_derivative_5pt(f: &GridFunction) -> Vec<f64> {
    let n = f.len();
    (2..n - 2)
        .map(|i| {
            let w = fd_weights(f.nodes[i], &f.nodes[i - 2..=i + 2], 2);
            w.iter().zip(&f.values[i - 2..=i + 2]).map(|(a, b)| a * b).sum()
        })
        .collect()
}

/// sup of `f` over [a, b] from `n` uniform samples, refined by a parabola
/// through the best sample and its neighbours.
pub fn sampled_sup(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n.max(3);
    let h = (b - a) / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| if i == n - 1 { b } else { a + i as f64 * h }).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let (imax, &ymax) =
        ys.iter()
            .enumerate()
            .fold((0, &f64::NEG_INFINITY), |best, (i, y)| if y > best.1 { (i, y) } else { best });
    if imax == 0 || imax == n - 1 {
        return ymax;
    }
    let (y0, y1, y2) = (ys[imax - 1], ys[imax], ys[imax + 1]);
    let curvature = y0 - 2.0 * y1 + y2;
    if curvature >= 0.0 {
        return ymax;
    }
    let offset = 0.5 * (y0 - y2) / curvature;
    let xv = xs[imax] + offset * h;
    ymax.max(f(xv))
}
