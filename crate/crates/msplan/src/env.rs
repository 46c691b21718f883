//! 2D workspace: obstacle primitives, a gridded signed distance field with
//! interpolated queries, and the hinge obstacle cost.
//!
//! Distances are exact per primitive (analytic circle/box formulas, min over
//! primitives) and sampled onto a uniform grid; queries bilinearly
//! interpolate the grid. Negative distances are inside obstacles.

use std::io::{BufRead, Write};

use nalgebra::Vector2;

use crate::error::{Error, Result};

/// Distance reported where no obstacle exists or a query leaves the grid
/// (the planner treats such points as free space).
pub const FREE_SPACE_DISTANCE: f64 = 1e6;

#[derive(Clone, Debug, PartialEq)]
pub enum Obstacle {
    Circle { center: Vector2<f64>, radius: f64 },
    Aabb { min: Vector2<f64>, max: Vector2<f64> },
}

impl Obstacle {
    /// Exact signed distance to the primitive boundary, negative inside.
    pub fn signed_distance(&self, p: &Vector2<f64>) -> f64 {
        match self {
            Obstacle::Circle { center, radius } => (p - center).norm() - radius,
            Obstacle::Aabb { min, max } => {
                let center = (min + max) * 0.5;
                let half = (max - min) * 0.5;
                let q = Vector2::new((p.x - center.x).abs() - half.x, (p.y - center.y).abs() - half.y);
                let outside = Vector2::new(q.x.max(0.0), q.y.max(0.0)).norm();
                let inside = q.x.max(q.y).min(0.0);
                outside + inside
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Obstacle::Circle { radius, .. } => {
                if *radius <= 0.0 {
                    return Err(Error::invalid("circle radius must be positive"));
                }
            }
            Obstacle::Aabb { min, max } => {
                if min.x >= max.x || min.y >= max.y {
                    return Err(Error::invalid("box corners must be ordered min < max"));
                }
            }
        }
        Ok(())
    }

    /// Smallest feature length, used as a grid-resolution guard.
    fn min_feature(&self) -> f64 {
        match self {
            Obstacle::Circle { radius, .. } => *radius,
            Obstacle::Aabb { min, max } => ((max.x - min.x) / 2.0).min((max.y - min.y) / 2.0),
        }
    }
}

/// Axis-aligned rectangular workspace populated with obstacle primitives.
#[derive(Clone, Debug, PartialEq)]
pub struct Workspace {
    pub bounds_min: Vector2<f64>,
    pub bounds_max: Vector2<f64>,
    pub obstacles: Vec<Obstacle>,
}

impl Workspace {
    pub fn new(bounds_min: Vector2<f64>, bounds_max: Vector2<f64>, obstacles: Vec<Obstacle>) -> Result<Self> {
        let ws = Self { bounds_min, bounds_max, obstacles };
        ws.validate()?;
        Ok(ws)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bounds_min.x >= self.bounds_max.x || self.bounds_min.y >= self.bounds_max.y {
            return Err(Error::invalid("workspace bounds are degenerate"));
        }
        for o in &self.obstacles {
            o.validate()?;
        }
        Ok(())
    }

    /// Exact signed distance to the nearest primitive boundary; a large
    /// positive constant when the workspace holds no obstacles.
    pub fn signed_distance(&self, p: &Vector2<f64>) -> f64 {
        self.obstacles
            .iter()
            .map(|o| o.signed_distance(p))
            .fold(FREE_SPACE_DISTANCE, f64::min)
    }

    pub fn contains(&self, p: &Vector2<f64>) -> bool {
        p.x >= self.bounds_min.x && p.x <= self.bounds_max.x && p.y >= self.bounds_min.y && p.y <= self.bounds_max.y
    }
}

/// Uniform grid of signed distances over the workspace bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedDistanceField {
    origin: Vector2<f64>,
    cell_size: f64,
    rows: usize,
    cols: usize,
    values: Vec<f64>, // row-major, rows along y
}

impl SignedDistanceField {
    /// Samples the exact per-primitive distance onto a grid covering the
    /// workspace bounds. `cell_size` must not exceed the smallest obstacle
    /// feature so hinge-zone gradients stay resolved.
    pub fn build(ws: &Workspace, cell_size: f64) -> Result<Self> {
        ws.validate()?;
        if cell_size <= 0.0 {
            return Err(Error::invalid("cell size must be positive"));
        }
        if let Some(feature) = ws
            .obstacles
            .iter()
            .map(Obstacle::min_feature)
            .min_by(|a, b| a.total_cmp(b))
        {
            if cell_size > feature {
                return Err(Error::invalid(format!(
                    "cell size {cell_size} exceeds smallest obstacle feature {feature}"
                )));
            }
        }
        let width = ws.bounds_max.x - ws.bounds_min.x;
        let height = ws.bounds_max.y - ws.bounds_min.y;
        let cols = (width / cell_size).ceil() as usize + 1;
        let rows = (height / cell_size).ceil() as usize + 1;
        let origin = ws.bounds_min;
        let mut values = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let p = Vector2::new(origin.x + c as f64 * cell_size, origin.y + r as f64 * cell_size);
                values.push(ws.signed_distance(&p));
            }
        }
        Ok(Self { origin, cell_size, rows, cols, values })
    }

    pub fn from_parts(
        origin: Vector2<f64>,
        cell_size: f64,
        rows: usize,
        cols: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        if cell_size <= 0.0 {
            return Err(Error::invalid("cell size must be positive"));
        }
        if rows < 2 || cols < 2 {
            return Err(Error::invalid("distance field needs at least a 2x2 grid"));
        }
        if values.len() != rows * cols {
            return Err(Error::invalid("distance grid size does not match dimensions"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("distance grid values must be finite"));
        }
        Ok(Self { origin, cell_size, rows, cols, values })
    }

    pub fn origin(&self) -> Vector2<f64> {
        self.origin
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn value_at_node(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    fn extent_max(&self) -> Vector2<f64> {
        Vector2::new(
            self.origin.x + (self.cols - 1) as f64 * self.cell_size,
            self.origin.y + (self.rows - 1) as f64 * self.cell_size,
        )
    }

    fn in_extent(&self, p: &Vector2<f64>) -> bool {
        let hi = self.extent_max();
        let slack = 1e-9 * self.cell_size;
        p.x >= self.origin.x - slack && p.x <= hi.x + slack && p.y >= self.origin.y - slack && p.y <= hi.y + slack
    }

    fn cell_of(&self, p: &Vector2<f64>) -> Result<(usize, usize, f64, f64)> {
        if !self.in_extent(p) {
            return Err(Error::OutOfBounds { x: p.x, y: p.y });
        }
        let u = (p.x - self.origin.x) / self.cell_size;
        let v = (p.y - self.origin.y) / self.cell_size;
        let c0 = (u.floor() as isize).clamp(0, self.cols as isize - 2) as usize;
        let r0 = (v.floor() as isize).clamp(0, self.rows as isize - 2) as usize;
        let fx = (u - c0 as f64).clamp(0.0, 1.0);
        let fy = (v - r0 as f64).clamp(0.0, 1.0);
        Ok((r0, c0, fx, fy))
    }

    /// Bilinear interpolation of the stored grid. `p` must lie inside the
    /// grid extent.
    fn interpolate(&self, p: &Vector2<f64>) -> Result<f64> {
        let (r0, c0, fx, fy) = self.cell_of(p)?;
        let v00 = self.value_at_node(r0, c0);
        let v01 = self.value_at_node(r0, c0 + 1);
        let v10 = self.value_at_node(r0 + 1, c0);
        let v11 = self.value_at_node(r0 + 1, c0 + 1);
        Ok(v00 * (1.0 - fx) * (1.0 - fy) + v01 * fx * (1.0 - fy) + v10 * (1.0 - fx) * fy + v11 * fx * fy)
    }

    /// Interpolated distance and its gradient at `p`. The gradient is the
    /// central difference of the interpolated field across the containing
    /// cell; the interpolant is affine along each axis inside a cell, so
    /// this equals its exact derivative there.
    pub fn query(&self, p: &Vector2<f64>) -> Result<(f64, Vector2<f64>)> {
        let (r0, c0, fx, fy) = self.cell_of(p)?;
        let v00 = self.value_at_node(r0, c0);
        let v01 = self.value_at_node(r0, c0 + 1);
        let v10 = self.value_at_node(r0 + 1, c0);
        let v11 = self.value_at_node(r0 + 1, c0 + 1);
        let value =
            v00 * (1.0 - fx) * (1.0 - fy) + v01 * fx * (1.0 - fy) + v10 * (1.0 - fx) * fy + v11 * fx * fy;
        let gx = ((v01 - v00) * (1.0 - fy) + (v11 - v10) * fy) / self.cell_size;
        let gy = ((v10 - v00) * (1.0 - fx) + (v11 - v01) * fx) / self.cell_size;
        Ok((value, Vector2::new(gx, gy)))
    }

    /// Writes the grid as text: one header line
    /// `origin_x origin_y cell_size rows cols`, then row-major distances.
    pub fn write_text<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "{} {} {} {} {}", self.origin.x, self.origin.y, self.cell_size, self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| format!("{}", self.value_at_node(r, c))).collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: &mut R) -> Result<Self> {
        let mut text = String::new();
        r.read_to_string(&mut text)
            .map_err(|e| Error::invalid(format!("unreadable distance field: {e}")))?;
        let mut tokens = text.split_whitespace();
        let mut next_f64 = |what: &str| -> Result<f64> {
            tokens
                .next()
                .ok_or_else(|| Error::invalid(format!("distance field header missing {what}")))?
                .parse::<f64>()
                .map_err(|e| Error::invalid(format!("bad {what} in distance field: {e}")))
        };
        let ox = next_f64("origin_x")?;
        let oy = next_f64("origin_y")?;
        let cell = next_f64("cell_size")?;
        let rows = next_f64("rows")? as usize;
        let cols = next_f64("cols")? as usize;
        let mut values = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            values.push(next_f64("grid value")?);
        }
        Self::from_parts(Vector2::new(ox, oy), cell, rows, cols, values)
    }
}

/// Hinge obstacle cost on a signed distance with safety margin `eps`:
/// `cost = max(eps - d, 0)`. The returned slope (d cost / d distance) is
/// `-1` on the penalized branch `d <= eps` and `0` in free space.
pub fn hinge_cost(d: f64, eps: f64) -> Result<(f64, f64)> {
    if eps < 0.0 {
        return Err(Error::invalid("safety distance must be nonnegative"));
    }
    if d <= eps {
        Ok(((eps - d).max(0.0), -1.0))
    } else {
        Ok((0.0, 0.0))
    }
}
