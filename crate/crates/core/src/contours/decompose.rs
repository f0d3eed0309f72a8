use std::collections::BTreeMap;

use super::{interior_of, trace_cycles, Cylinder, CylinderSet, Dir, DualEdge, DualVertex, GeometricContour, Sign};
use crate::error::{Error, Result};
use crate::lattice::{HeightField, Site};

fn incidence_of(edges: &[DualEdge]) -> BTreeMap<DualVertex, u8> {
    let mut inc: BTreeMap<DualVertex, u8> = BTreeMap::new();
    for e in edges {
        let (a, b) = e.endpoints();
        let d = if e.is_vertical() { Dir::N } else { Dir::E };
        *inc.entry(a).or_default() |= d.bit();
        *inc.entry(b).or_default() |= d.opposite().bit();
    }
    inc
}

/// Splits a field into its cylinders, relative to the boundary level.
pub fn decompose(field: &HeightField) -> Result<CylinderSet> {
    let region = field.region();
    if region.is_empty() {
        return Ok(CylinderSet::default());
    }
    if !region.is_simply_connected().map_err(|_| Error::UnsupportedRegion)? {
        return Err(Error::UnsupportedRegion);
    }
    let (bx0, by0, bx1, by1) = region.bounding_box().unwrap();
    let (x0, y0) = (bx0 - 1, by0 - 1);
    let w = (bx1 - bx0 + 3) as usize;
    let h = (by1 - by0 + 3) as usize;
    let n = field.boundary_level();
    let mut grid = vec![n; w * h];
    for (s, &v) in region.sites().iter().zip(field.heights()) {
        grid[(s.y - y0) as usize * w + (s.x - x0) as usize] = v;
    }
    let lo = grid.iter().copied().min().unwrap();
    let hi = grid.iter().copied().max().unwrap();

    let mut found: BTreeMap<(Vec<DualEdge>, Sign), u32> = BTreeMap::new();
    let mut inc: BTreeMap<DualVertex, u8> = BTreeMap::new();
    for level in lo + 1..=hi {
        inc.clear();
        for r in 0..h {
            for c in 0..w {
                let up = grid[r * w + c] >= level;
                let cell = Site::new(x0 + c as i32, y0 + r as i32);
                if c + 1 < w && (grid[r * w + c + 1] >= level) != up {
                    let e = DualEdge::between(cell, cell.offset(1, 0)).unwrap();
                    let (a, b) = e.endpoints();
                    *inc.entry(a).or_default() |= Dir::N.bit();
                    *inc.entry(b).or_default() |= Dir::S.bit();
                }
                if r + 1 < h && (grid[(r + 1) * w + c] >= level) != up {
                    let e = DualEdge::between(cell, cell.offset(0, 1)).unwrap();
                    let (a, b) = e.endpoints();
                    *inc.entry(a).or_default() |= Dir::E.bit();
                    *inc.entry(b).or_default() |= Dir::W.bit();
                }
            }
        }
        for cycle in trace_cycles(&inc) {
            let interior = interior_of(&cycle);
            let (p, q) = cycle[0].cells();
            let inside = if interior.binary_search(&p).is_ok() { p } else { q };
            let v = grid[(inside.y - y0) as usize * w + (inside.x - x0) as usize];
            let sign = if v >= level { Sign::Plus } else { Sign::Minus };
            *found.entry((cycle, sign)).or_default() += 1;
        }
    }
    let cylinders = found
        .into_iter()
        .map(|((edges, sign), k)| {
            let inc = incidence_of(&edges);
            Cylinder { contour: GeometricContour::build_unchecked(edges, &inc), sign, intensity: k }
        })
        .collect();
    Ok(CylinderSet::new(cylinders))
}
