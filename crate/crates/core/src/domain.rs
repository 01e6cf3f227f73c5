//! Uniform cell-centred grids over an interval, a rectangle or a disc, with an
//! exterior collar of explicit zero nodes and the analytic distance to the
//! complement of the domain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible number of cells per axis.
pub const MIN_CELLS: usize = 8;
/// Default collar width in units of `h`.
pub const DEFAULT_COLLAR_CELLS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskRule {
    Rectangle,
    Disc { center: [f64; 2], radius: f64 },
}

/// Serializable recipe from which a [`DomainGrid`] is rebuilt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDescription {
    pub dim: usize,
    /// `[a, b]` in 1D, `[xmin, xmax, ymin, ymax]` in 2D.
    pub bounds: Vec<f64>,
    pub n: usize,
    #[serde(default = "default_mask")]
    pub mask_rule: MaskRule,
    /// Defaults to `4 h`.
    #[serde(default)]
    pub collar_width: Option<f64>,
}

fn default_mask() -> MaskRule {
    MaskRule::Rectangle
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

/// Pairwise geometry between interior nodes and toward the exterior,
/// precomputed once per grid.
#[derive(Debug, Clone)]
pub(crate) enum Exterior {
    /// `ln(x - a)` and `ln(b - x)` per interior node.
    Interval {
        ln_left: Vec<f64>,
        ln_right: Vec<f64>,
    },
    /// `ln|x_i - y_k|` against every exterior grid node (row-major by interior
    /// node) and `ln D_i`, the distance to the outer edge of the grid.
    Plane {
        ln_ext_dist: Vec<f64>,
        n_ext: usize,
        ln_far: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct DomainGrid {
    dim: usize,
    h: f64,
    cells: usize,
    nodes: Vec<[f64; 2]>,
    interior_mask: Vec<bool>,
    interior: Vec<usize>,
    collar_width: f64,
    bounds: Bounds,
    mask: MaskRule,
    ln_dist: Vec<f64>,
    exterior: Exterior,
}

/// Per-node distance to the complement of the domain and the inradius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceField {
    /// Indexed like [`DomainGrid::nodes`]; zero off the domain.
    pub values: Vec<f64>,
    /// Largest distance over interior nodes.
    pub r: f64,
}

impl DistanceField {
    /// Distances restricted to interior nodes, in interior order.
    pub fn interior_values(&self, grid: &DomainGrid) -> Vec<f64> {
        grid.interior.iter().map(|&k| self.values[k]).collect()
    }
}

/// 1D grid on `(a, b)` with `n` cells and the default collar.
pub fn build_interval(a: f64, b: f64, n: usize) -> Result<DomainGrid> {
    build_interval_with_collar(a, b, n, None)
}

pub fn build_interval_with_collar(
    a: f64,
    b: f64,
    n: usize,
    collar_width: Option<f64>,
) -> Result<DomainGrid> {
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidGrid("non-finite bounds".into()));
    }
    if a >= b {
        return Err(Error::InvalidGrid(format!("empty interval ({a}, {b})")));
    }
    if n < MIN_CELLS {
        return Err(Error::InvalidGrid(format!(
            "{n} cells, at least {MIN_CELLS} required"
        )));
    }
    let h = (b - a) / n as f64;
    let collar = collar_cells(collar_width, h)?;
    let mut nodes = Vec::with_capacity(n + 2 * collar);
    let mut mask = Vec::with_capacity(n + 2 * collar);
    for k in 0..(n + 2 * collar) {
        let i = k as f64 - collar as f64;
        nodes.push([a + (i + 0.5) * h, 0.0]);
        mask.push(k >= collar && k < collar + n);
    }
    let bounds = Bounds {
        xmin: a,
        xmax: b,
        ymin: 0.0,
        ymax: 0.0,
    };
    Ok(DomainGrid::assemble(
        1,
        h,
        n,
        nodes,
        mask,
        collar as f64 * h,
        bounds,
        MaskRule::Rectangle,
    ))
}

/// 2D grid on `[xmin, xmax] x [ymin, ymax]` with `n` cells along the shorter
/// side; interior nodes are the cell centres satisfying `mask_rule`.
pub fn build_box2d(bounds: [f64; 4], n: usize, mask_rule: MaskRule) -> Result<DomainGrid> {
    build_box2d_with_collar(bounds, n, mask_rule, None)
}

pub fn build_box2d_with_collar(
    bounds: [f64; 4],
    n: usize,
    mask_rule: MaskRule,
    collar_width: Option<f64>,
) -> Result<DomainGrid> {
    let [xmin, xmax, ymin, ymax] = bounds;
    if bounds.iter().any(|v| !v.is_finite()) || xmin >= xmax || ymin >= ymax {
        return Err(Error::InvalidGrid(format!("degenerate bounds {bounds:?}")));
    }
    if n < MIN_CELLS {
        return Err(Error::InvalidGrid(format!(
            "{n} cells per axis, at least {MIN_CELLS} required"
        )));
    }
    let (w, ht) = (xmax - xmin, ymax - ymin);
    let h = w.min(ht) / n as f64;
    let nx = (w / h).round() as usize;
    let ny = (ht / h).round() as usize;
    if ((w / h) - nx as f64).abs() > 1e-9 * nx as f64
        || ((ht / h) - ny as f64).abs() > 1e-9 * ny as f64
    {
        return Err(Error::InvalidGrid(
            "box sides are not commensurate with a uniform spacing".into(),
        ));
    }
    if let MaskRule::Disc { center, radius } = mask_rule {
        if !(radius > 0.0)
            || center[0] - radius < xmin - 1e-12
            || center[0] + radius > xmax + 1e-12
            || center[1] - radius < ymin - 1e-12
            || center[1] + radius > ymax + 1e-12
        {
            return Err(Error::InvalidGrid("disc must lie inside the box".into()));
        }
    }
    let collar = collar_cells(collar_width, h)?;
    let (cx, cy) = (nx + 2 * collar, ny + 2 * collar);
    let mut nodes = Vec::with_capacity(cx * cy);
    let mut mask = Vec::with_capacity(cx * cy);
    for j in 0..cy {
        for i in 0..cx {
            let x = xmin + (i as f64 - collar as f64 + 0.5) * h;
            let y = ymin + (j as f64 - collar as f64 + 0.5) * h;
            let in_box = i >= collar && i < collar + nx && j >= collar && j < collar + ny;
            let inside = in_box
                && match mask_rule {
                    MaskRule::Rectangle => true,
                    MaskRule::Disc { center, radius } => {
                        ((x - center[0]).powi(2) + (y - center[1]).powi(2)).sqrt() < radius
                    }
                };
            nodes.push([x, y]);
            mask.push(inside);
        }
    }
    let bounds = Bounds {
        xmin,
        xmax,
        ymin,
        ymax,
    };
    let grid = DomainGrid::assemble(2, h, n, nodes, mask, collar as f64 * h, bounds, mask_rule);
    if grid.interior.is_empty() {
        return Err(Error::InvalidGrid("mask selects no interior node".into()));
    }
    Ok(grid)
}

fn collar_cells(collar_width: Option<f64>, h: f64) -> Result<usize> {
    match collar_width {
        None => Ok(DEFAULT_COLLAR_CELLS),
        Some(c) if c.is_finite() && c >= 2.0 * h * (1.0 - 1e-12) => {
            Ok((c / h - 1e-9).ceil() as usize)
        }
        Some(c) => Err(Error::InvalidGrid(format!(
            "collar width {c} below the minimum 2h = {}",
            2.0 * h
        ))),
    }
}

impl DomainGrid {
    pub fn from_description(desc: &GridDescription) -> Result<DomainGrid> {
        match desc.dim {
            1 => {
                if desc.bounds.len() != 2 {
                    return Err(Error::InvalidGrid("1D bounds need [a, b]".into()));
                }
                if desc.mask_rule != MaskRule::Rectangle {
                    return Err(Error::InvalidGrid(
                        "1D grids take the rectangle rule".into(),
                    ));
                }
                build_interval_with_collar(
                    desc.bounds[0],
                    desc.bounds[1],
                    desc.n,
                    desc.collar_width,
                )
            }
            2 => {
                let b: [f64; 4] = desc.bounds.as_slice().try_into().map_err(|_| {
                    Error::InvalidGrid("2D bounds need [xmin, xmax, ymin, ymax]".into())
                })?;
                build_box2d_with_collar(b, desc.n, desc.mask_rule.clone(), desc.collar_width)
            }
            d => Err(Error::InvalidGrid(format!("dimension {d} not supported"))),
        }
    }

    pub fn description(&self) -> GridDescription {
        let b = &self.bounds;
        GridDescription {
            dim: self.dim,
            bounds: if self.dim == 1 {
                vec![b.xmin, b.xmax]
            } else {
                vec![b.xmin, b.xmax, b.ymin, b.ymax]
            },
            n: self.cells,
            mask_rule: self.mask.clone(),
            collar_width: Some(self.collar_width),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        dim: usize,
        h: f64,
        cells: usize,
        nodes: Vec<[f64; 2]>,
        interior_mask: Vec<bool>,
        collar_width: f64,
        bounds: Bounds,
        mask: MaskRule,
    ) -> DomainGrid {
        let interior: Vec<usize> = (0..nodes.len()).filter(|&k| interior_mask[k]).collect();
        let m = interior.len();
        let mut ln_dist = vec![f64::NEG_INFINITY; m * m];
        for (a, &ka) in interior.iter().enumerate() {
            for (b, &kb) in interior.iter().enumerate() {
                if a != b {
                    ln_dist[a * m + b] = dist(&nodes[ka], &nodes[kb]).ln();
                }
            }
        }
        let exterior = if dim == 1 {
            Exterior::Interval {
                ln_left: interior
                    .iter()
                    .map(|&k| (nodes[k][0] - bounds.xmin).ln())
                    .collect(),
                ln_right: interior
                    .iter()
                    .map(|&k| (bounds.xmax - nodes[k][0]).ln())
                    .collect(),
            }
        } else {
            let ext: Vec<usize> = (0..nodes.len()).filter(|&k| !interior_mask[k]).collect();
            let mut ln_ext_dist = Vec::with_capacity(m * ext.len());
            for &ki in &interior {
                for &ke in &ext {
                    ln_ext_dist.push(dist(&nodes[ki], &nodes[ke]).ln());
                }
            }
            let (gx0, gx1) = (bounds.xmin - collar_width, bounds.xmax + collar_width);
            let (gy0, gy1) = (bounds.ymin - collar_width, bounds.ymax + collar_width);
            let ln_far = interior
                .iter()
                .map(|&k| {
                    let [x, y] = nodes[k];
                    (x - gx0).min(gx1 - x).min(y - gy0).min(gy1 - y).ln()
                })
                .collect();
            Exterior::Plane {
                ln_ext_dist,
                n_ext: ext.len(),
                ln_far,
            }
        };
        DomainGrid {
            dim,
            h,
            cells,
            nodes,
            interior_mask,
            interior,
            collar_width,
            bounds,
            mask,
            ln_dist,
            exterior,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Cells along the reference axis, as passed to the builder.
    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn interior_mask(&self) -> &[bool] {
        &self.interior_mask
    }

    /// Node indices of the interior nodes, in interior order.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn interior_count(&self) -> usize {
        self.interior.len()
    }

    /// Coordinates of the `i`-th interior node.
    pub fn coord(&self, i: usize) -> [f64; 2] {
        self.nodes[self.interior[i]]
    }

    pub fn collar_width(&self) -> f64 {
        self.collar_width
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn mask_rule(&self) -> &MaskRule {
        &self.mask
    }

    /// Quadrature weight `h^N`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    pub(crate) fn ln_dist(&self, i: usize, j: usize) -> f64 {
        self.ln_dist[i * self.interior.len() + j]
    }

    pub(crate) fn exterior(&self) -> &Exterior {
        &self.exterior
    }

    /// Euclidean distance between interior nodes `i` and `j`.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        dist(&self.coord(i), &self.coord(j))
    }

    /// Analytic distance from `x` to the complement of the domain, zero outside.
    pub fn boundary_distance(&self, x: [f64; 2]) -> f64 {
        let b = &self.bounds;
        let d = match (self.dim, &self.mask) {
            (1, _) => (x[0] - b.xmin).min(b.xmax - x[0]),
            (_, MaskRule::Rectangle) => (x[0] - b.xmin)
                .min(b.xmax - x[0])
                .min(x[1] - b.ymin)
                .min(b.ymax - x[1]),
            (_, MaskRule::Disc { center, radius }) => radius - dist(&x, center),
        };
        d.max(0.0)
    }

    /// Interior index nearest to `point`; ties go to the lowest index.
    pub fn snap(&self, point: &[f64]) -> Result<usize> {
        if point.len() != self.dim || point.iter().any(|v| !v.is_finite()) {
            return Err(Error::param(
                "anchor",
                format!("expected {} finite coordinates, got {point:?}", self.dim),
            ));
        }
        let target = [point[0], if self.dim == 2 { point[1] } else { 0.0 }];
        let mut best = (0usize, f64::INFINITY);
        for i in 0..self.interior.len() {
            let d = dist(&self.coord(i), &target);
            // 1e-12 slack so that exact midpoints resolve to the lower index
            if d < best.1 - 1e-12 {
                best = (i, d);
            }
        }
        Ok(best.0)
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.interior.len() {
            return Err(Error::LengthMismatch {
                expected: self.interior.len(),
                got: len,
            });
        }
        Ok(())
    }

    pub(crate) fn check_node(&self, i: usize) -> Result<()> {
        if i >= self.interior.len() {
            return Err(Error::NotInterior(i));
        }
        Ok(())
    }
}

pub(crate) fn dist(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Distance of every node to the complement of the domain, measured to the
/// analytic boundary of the mask rule.
pub fn distance_field(grid: &DomainGrid) -> DistanceField {
    let values: Vec<f64> = grid
        .nodes
        .iter()
        .zip(&grid.interior_mask)
        .map(|(x, &inside)| {
            if inside {
                grid.boundary_distance(*x)
            } else {
                0.0
            }
        })
        .collect();
    let r = values.iter().copied().fold(0.0, f64::max);
    DistanceField { values, r }
}

/// First interior node (lowest index) at which the distance field attains `R`.
pub fn inradius_node(grid: &DomainGrid, df: &DistanceField) -> usize {
    grid.interior
        .iter()
        .position(|&k| df.values[k] == df.r)
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unit_interval_eight_cells() {
        let g = build_interval(0.0, 1.0, 8).unwrap();
        assert_eq!(g.h(), 0.125);
        assert_eq!(g.interior_count(), 8);
        assert_eq!(g.coord(0)[0], 0.0625);
        assert!(g.collar_width() >= 2.0 * g.h());
        assert_eq!(g.nodes().len(), 8 + 2 * DEFAULT_COLLAR_CELLS);
    }

    #[test]
    fn symmetric_interval() {
        let g = build_interval(-1.0, 1.0, 16).unwrap();
        assert_eq!(g.h(), 0.125);
        let m = g.interior_count();
        for i in 0..m {
            assert!((g.coord(i)[0] + g.coord(m - 1 - i)[0]).abs() < 1e-15);
        }
        assert_eq!(distance_field(&g).r, 1.0 - g.h() / 2.0);
    }

    #[test]
    fn interval_rejects_bad_input() {
        assert!(build_interval(0.0, 1.0, 4).is_err());
        assert!(build_interval(f64::NAN, 1.0, 16).is_err());
        assert!(build_interval(1.0, 0.0, 16).is_err());
        assert!(build_interval_with_collar(0.0, 1.0, 16, Some(0.01)).is_err());
    }

    #[test]
    fn unit_square_rectangle() {
        let g = build_box2d([0.0, 1.0, 0.0, 1.0], 16, MaskRule::Rectangle).unwrap();
        assert_eq!(g.interior_count(), 256);
        assert_eq!(g.dim(), 2);
        let df = distance_field(&g);
        assert!((df.r - (0.5 - g.h() / 2.0)).abs() < 1e-15);
    }

    #[test]
    fn disc_nodes_strictly_inside() {
        let rule = MaskRule::Disc {
            center: [0.5, 0.5],
            radius: 0.5,
        };
        let g = build_box2d([0.0, 1.0, 0.0, 1.0], 16, rule).unwrap();
        for i in 0..g.interior_count() {
            let [x, y] = g.coord(i);
            assert!(((x - 0.5).powi(2) + (y - 0.5).powi(2)).sqrt() < 0.5);
        }
        assert!(g.interior_count() < 256);
        let df = distance_field(&g);
        assert!(df.r <= 0.5 && df.r >= 0.5 - g.h());
    }

    #[test]
    fn box_rejects_bad_input() {
        assert!(build_box2d([0.0, 1.0, 0.0, 1.0], 2, MaskRule::Rectangle).is_err());
        assert!(build_box2d([0.0, 0.0, 0.0, 1.0], 16, MaskRule::Rectangle).is_err());
        let off = MaskRule::Disc {
            center: [0.9, 0.5],
            radius: 0.5,
        };
        assert!(build_box2d([0.0, 1.0, 0.0, 1.0], 16, off).is_err());
    }

    #[test]
    fn midpoint_distance_odd_grid() {
        let g = build_interval(0.0, 1.0, 9).unwrap();
        let df = distance_field(&g);
        let mid = g.snap(&[0.5]).unwrap();
        assert!((g.coord(mid)[0] - 0.5).abs() < 1e-15);
        assert!((df.values[g.interior()[mid]] - 0.5).abs() < 1e-15);
        assert!((df.r - 0.5).abs() < 1e-15);
        assert_eq!(inradius_node(&g, &df), mid);
    }

    #[test]
    fn snapping_ties_go_low() {
        let g = build_interval(0.0, 1.0, 64).unwrap();
        assert_eq!(g.snap(&[0.5]).unwrap(), 31);
        let i = g.snap(&[0.35]).unwrap();
        assert_eq!(g.snap(&g.coord(i)[..1]).unwrap(), i);
        assert!(g.snap(&[0.5, 0.5]).is_err());
    }

    #[test]
    fn inradius_converges_within_h() {
        for n in [8, 16, 32, 64, 128] {
            let g = build_interval(0.0, 1.0, n).unwrap();
            assert!((distance_field(&g).r - 0.5).abs() <= g.h());
            let sq = build_box2d([0.0, 1.0, 0.0, 1.0], n.min(32), MaskRule::Rectangle).unwrap();
            assert!((distance_field(&sq).r - 0.5).abs() <= sq.h());
            let disc = build_box2d(
                [-1.0, 1.0, -1.0, 1.0],
                n.min(32),
                MaskRule::Disc {
                    center: [0.0, 0.0],
                    radius: 0.75,
                },
            )
            .unwrap();
            assert!((distance_field(&disc).r - 0.75).abs() <= disc.h());
        }
    }

    #[test]
    fn description_round_trip() {
        let g = build_box2d([0.0, 2.0, 0.0, 1.0], 8, MaskRule::Rectangle).unwrap();
        let json = serde_json::to_string(&g.description()).unwrap();
        let back: GridDescription = serde_json::from_str(&json).unwrap();
        let g2 = DomainGrid::from_description(&back).unwrap();
        assert_eq!(g2.nodes(), g.nodes());
        assert_eq!(g2.interior(), g.interior());
    }

    proptest! {
        #[test]
        fn distance_is_one_lipschitz(n in 8usize..40, disc in any::<bool>()) {
            let rule = if disc {
                MaskRule::Disc { center: [0.5, 0.5], radius: 0.45 }
            } else {
                MaskRule::Rectangle
            };
            let g = build_box2d([0.0, 1.0, 0.0, 1.0], n.min(20), rule).unwrap();
            let df = distance_field(&g);
            let nodes = g.nodes();
            for a in (0..nodes.len()).step_by(7) {
                for b in 0..nodes.len() {
                    let gap = (df.values[a] - df.values[b]).abs();
                    prop_assert!(gap <= dist(&nodes[a], &nodes[b]) + 1e-12);
                }
            }
            prop_assert!(df.values.iter().all(|&v| v <= df.r));
            prop_assert!(df.r > 0.0);
            let g1 = build_interval(0.0, 1.0, n).unwrap();
            let d1 = distance_field(&g1);
            for a in 0..g1.nodes().len() {
                for b in 0..g1.nodes().len() {
                    let gap = (d1.values[a] - d1.values[b]).abs();
                    prop_assert!(gap <= (g1.nodes()[a][0] - g1.nodes()[b][0]).abs() + 1e-12);
                }
            }
        }
    }
}
