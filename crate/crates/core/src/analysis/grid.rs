//! Uniform cell list for fixed-radius neighbor queries.

use crate::geometry::Vec3;

// Upper bound on cells per stored point; sparse clouds get wider cells.
const MAX_CELLS_PER_POINT: usize = 8;

/// Points binned into cells at least `cutoff` wide. A query visits the
/// 3×3×3 block around the query cell, which covers every point within
/// `cutoff` (under the minimum-image convention when periodic).
#[derive(Debug, Clone)]
pub struct CellGrid {
    origin: Vec3,
    width: Vec3,
    dims: [usize; 3],
    box_lengths: Option<Vec3>,
    starts: Vec<u32>,
    items: Vec<u32>,
}

impl CellGrid {
    /// Open-boundary grid over the bounding box of `points`.
    pub fn new(points: &[Vec3], cutoff: f64) -> Self {
        assert!(cutoff > 0.0, "grid cutoff must be positive");
        let (lo, hi) = bounds(points);
        let extent = hi - lo;
        let mut width = cutoff;
        let budget = (MAX_CELLS_PER_POINT * points.len()).max(1);
        let dims = loop {
            let dims = [
                (extent.x / width).floor() as usize + 1,
                (extent.y / width).floor() as usize + 1,
                (extent.z / width).floor() as usize + 1,
            ];
            if dims.iter().product::<usize>() <= budget {
                break dims;
            }
            width *= 2.0;
        };
        Self::build(points, lo, Vec3::new(width, width, width), dims, None)
    }

    /// Periodic grid for an orthorhombic box; points are wrapped into it.
    pub fn periodic(points: &[Vec3], cutoff: f64, box_lengths: Vec3) -> Self {
        assert!(cutoff > 0.0, "grid cutoff must be positive");
        let dims = [
            ((box_lengths.x / cutoff).floor() as usize).max(1),
            ((box_lengths.y / cutoff).floor() as usize).max(1),
            ((box_lengths.z / cutoff).floor() as usize).max(1),
        ];
        let width = Vec3::new(
            box_lengths.x / dims[0] as f64,
            box_lengths.y / dims[1] as f64,
            box_lengths.z / dims[2] as f64,
        );
        Self::build(points, Vec3::ZERO, width, dims, Some(box_lengths))
    }

    fn build(points: &[Vec3], origin: Vec3, width: Vec3, dims: [usize; 3], box_lengths: Option<Vec3>) -> Self {
        let mut grid = CellGrid {
            origin,
            width,
            dims,
            box_lengths,
            starts: Vec::new(),
            items: Vec::new(),
        };
        let n_cells = dims.iter().product::<usize>();
        let cell_of: Vec<usize> = points
            .iter()
            .map(|&p| {
                let c = grid.cell_coords(p);
                grid.flat(c[0] as usize, c[1] as usize, c[2] as usize)
            })
            .collect();
        // counting sort into CSR layout
        let mut starts = vec![0u32; n_cells + 1];
        for &c in &cell_of {
            starts[c + 1] += 1;
        }
        for i in 0..n_cells {
            starts[i + 1] += starts[i];
        }
        let mut fill = starts.clone();
        let mut items = vec![0u32; points.len()];
        for (i, &c) in cell_of.iter().enumerate() {
            items[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        grid.starts = starts;
        grid.items = items;
        grid
    }

    #[inline]
    fn flat(&self, x: usize, y: usize, z: usize) -> usize {
        (x * self.dims[1] + y) * self.dims[2] + z
    }

    /// Integer cell coordinates, clamped into the grid for stored points.
    #[inline]
    fn cell_coords(&self, p: Vec3) -> [i64; 3] {
        let mut out = [0i64; 3];
        for (d, slot) in out.iter_mut().enumerate() {
            let mut x = p[d] - self.origin[d];
            if let Some(b) = self.box_lengths {
                x = x.rem_euclid(b[d]);
            }
            let c = (x / self.width[d]).floor() as i64;
            *slot = c.clamp(0, self.dims[d] as i64 - 1);
        }
        out
    }

    /// Calls `f` for every stored point in the 27 cells around `p`. Each
    /// point is visited at most once; callers apply the exact distance test.
    pub fn for_each_candidate(&self, p: Vec3, mut f: impl FnMut(usize)) {
        let mut ranges: [([i64; 3], usize); 3] = [([0; 3], 0); 3];
        for d in 0..3 {
            let n = self.dims[d] as i64;
            let raw = match self.box_lengths {
                Some(b) => (((p[d] - self.origin[d]).rem_euclid(b[d])) / self.width[d]).floor() as i64,
                None => ((p[d] - self.origin[d]) / self.width[d]).floor() as i64,
            };
            let mut list = [0i64; 3];
            let mut len = 0;
            for delta in -1..=1 {
                let c = raw + delta;
                let c = match self.box_lengths {
                    Some(_) => c.rem_euclid(n),
                    None => {
                        if c < 0 || c >= n {
                            continue;
                        }
                        c
                    }
                };
                if !list[..len].contains(&c) {
                    list[len] = c;
                    len += 1;
                }
            }
            ranges[d] = (list, len);
        }
        for &x in &ranges[0].0[..ranges[0].1] {
            for &y in &ranges[1].0[..ranges[1].1] {
                for &z in &ranges[2].0[..ranges[2].1] {
                    let cell = self.flat(x as usize, y as usize, z as usize);
                    let (s, e) = (self.starts[cell] as usize, self.starts[cell + 1] as usize);
                    for &item in &self.items[s..e] {
                        f(item as usize);
                    }
                }
            }
        }
    }
}

fn bounds(points: &[Vec3]) -> (Vec3, Vec3) {
    let mut lo = Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut hi = -lo;
    for p in points {
        lo = Vec3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
        hi = Vec3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
    }
    if points.is_empty() {
        (Vec3::ZERO, Vec3::ZERO)
    } else {
        (lo, hi)
    }
}
