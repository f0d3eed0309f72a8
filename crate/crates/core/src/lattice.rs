//! Finite subsets of Z^2: sites, regions, height fields and connectivity.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A lattice site. Ordered by `y` first, then `x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Site {
    pub x: i32,
    pub y: i32,
}

impl Site {
    pub const fn new(x: i32, y: i32) -> Self {
        Site { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Site {
        Site::new(self.x + dx, self.y + dy)
    }

    /// The four nearest neighbours in E, N, W, S order.
    pub fn neighbors4(self) -> [Site; 4] {
        [
            self.offset(1, 0),
            self.offset(0, 1),
            self.offset(-1, 0),
            self.offset(0, -1),
        ]
    }

    /// Neighbours on the triangular lattice obtained by adding the
    /// (1,1) diagonal. This is the connectivity induced by the contour
    /// linking rule, for a set and its complement alike.
    pub fn neighbors6(self) -> [Site; 6] {
        [
            self.offset(1, 0),
            self.offset(0, 1),
            self.offset(-1, 0),
            self.offset(0, -1),
            self.offset(1, 1),
            self.offset(-1, -1),
        ]
    }

    pub fn is_even(self) -> bool {
        (self.x + self.y).rem_euclid(2) == 0
    }

    pub fn l1(self, other: Site) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

impl Ord for Site {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for Site {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Serialize for Site {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.x, self.y].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Site {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [x, y] = <[i32; 2]>::deserialize(d)?;
        Ok(Site::new(x, y))
    }
}

/// A finite set of sites with cached adjacency and external boundary.
#[derive(Clone, Debug)]
pub struct Region {
    sites: Vec<Site>,
    index: HashMap<Site, usize>,
    neighbors: Vec<Vec<usize>>,
    boundary_edges: Vec<u8>,
    boundary: Vec<Site>,
    rect: Option<(u32, u32)>,
    connected: bool,
    simply_connected: bool,
}

impl PartialEq for Region {
    fn eq(&self, other: &Self) -> bool {
        self.sites == other.sites
    }
}

impl Eq for Region {}

impl Region {
    pub fn from_sites<I: IntoIterator<Item = Site>>(sites: I) -> Region {
        let sites: Vec<Site> = sites.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let index: HashMap<Site, usize> = sites.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let mut neighbors = Vec::with_capacity(sites.len());
        let mut boundary_edges = Vec::with_capacity(sites.len());
        let mut boundary = BTreeSet::new();
        for &s in &sites {
            let mut nb = Vec::with_capacity(4);
            let mut outside = 0u8;
            for t in s.neighbors4() {
                match index.get(&t) {
                    Some(&j) => nb.push(j),
                    None => {
                        outside += 1;
                        boundary.insert(t);
                    }
                }
            }
            nb.sort_unstable();
            neighbors.push(nb);
            boundary_edges.push(outside);
        }
        let connected = !sites.is_empty() && connected_components(&sites).len() == 1;
        let mut region = Region {
            sites,
            index,
            neighbors,
            boundary_edges,
            boundary: boundary.into_iter().collect(),
            rect: None,
            connected,
            simply_connected: false,
        };
        region.simply_connected = connected && complement_has_no_holes(&region);
        region
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn contains(&self, s: Site) -> bool {
        self.index.contains_key(&s)
    }

    pub fn index_of(&self, s: Site) -> Option<usize> {
        self.index.get(&s).copied()
    }

    /// Indices of the in-region neighbours of site `i`, ascending.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// Number of edges from site `i` to the external boundary.
    pub fn boundary_edges(&self, i: usize) -> u32 {
        self.boundary_edges[i] as u32
    }

    pub fn total_boundary_edges(&self) -> u32 {
        self.boundary_edges.iter().map(|&b| b as u32).sum()
    }

    /// The external boundary: sites outside with a neighbour inside.
    pub fn boundary(&self) -> &[Site] {
        &self.boundary
    }

    /// Internal edges as index pairs `(i, j)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, nb) in self.neighbors.iter().enumerate() {
            for &j in nb {
                if i < j {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// `(width, height)` when built by [`build_rect_region`].
    pub fn rect_dims(&self) -> Option<(u32, u32)> {
        self.rect
    }

    /// `(min_x, min_y, max_x, max_y)`; `None` for the empty region.
    pub fn bounding_box(&self) -> Option<(i32, i32, i32, i32)> {
        bounding_box(&self.sites)
    }

    pub fn is_connected(&self) -> bool {
        self.connected
    }

    /// Whether the region is connected and has no holes.
    pub fn is_simply_connected(&self) -> Result<bool> {
        if !self.connected {
            return Err(Error::InvalidArgument(
                "simple connectivity needs a non-empty connected region".into(),
            ));
        }
        Ok(self.simply_connected)
    }

    /// Distance (in lattice steps) from site `i` to the external boundary.
    pub fn distance_to_boundary(&self, i: usize) -> u32 {
        let s = self.sites[i];
        self.boundary.iter().map(|&b| s.l1(b)).min().unwrap_or(0)
    }
}

impl Serialize for Region {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.sites.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Region {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let sites = Vec::<Site>::deserialize(d)?;
        Ok(Region::from_sites(sites))
    }
}

/// The rectangle [1, width] x [1, height].
pub fn build_rect_region(width: i64, height: i64) -> Result<Region> {
    if width < 1 || height < 1 || width > i32::MAX as i64 || height > i32::MAX as i64 {
        return Err(Error::InvalidArgument(format!(
            "rectangle dimensions must be positive, got {width}x{height}"
        )));
    }
    let (w, h) = (width as i32, height as i32);
    let mut r = Region::from_sites((1..=h).flat_map(|y| (1..=w).map(move |x| Site::new(x, y))));
    r.rect = Some((w as u32, h as u32));
    Ok(r)
}

pub(crate) fn bounding_box(sites: &[Site]) -> Option<(i32, i32, i32, i32)> {
    let first = sites.first()?;
    let mut bb = (first.x, first.y, first.x, first.y);
    for s in sites {
        bb.0 = bb.0.min(s.x);
        bb.1 = bb.1.min(s.y);
        bb.2 = bb.2.max(s.x);
        bb.3 = bb.3.max(s.y);
    }
    Some(bb)
}

/// Maximal nearest-neighbour connected components, ordered by least site,
/// each sorted canonically.
pub fn connected_components(sites: &[Site]) -> Vec<Vec<Site>> {
    let set: BTreeSet<Site> = sites.iter().copied().collect();
    let mut seen: BTreeSet<Site> = BTreeSet::new();
    let mut out = Vec::new();
    for &start in &set {
        if seen.contains(&start) {
            continue;
        }
        let mut comp = vec![start];
        seen.insert(start);
        let mut queue = VecDeque::from([start]);
        while let Some(s) = queue.pop_front() {
            for t in s.neighbors4() {
                if set.contains(&t) && seen.insert(t) {
                    comp.push(t);
                    queue.push_back(t);
                }
            }
        }
        comp.sort();
        out.push(comp);
    }
    out
}

fn complement_has_no_holes(region: &Region) -> bool {
    let Some((x0, y0, x1, y1)) = region.bounding_box() else {
        return true;
    };
    let (x0, y0, x1, y1) = (x0 - 1, y0 - 1, x1 + 1, y1 + 1);
    let w = (x1 - x0 + 1) as usize;
    let h = (y1 - y0 + 1) as usize;
    let idx = |s: Site| (s.y - y0) as usize * w + (s.x - x0) as usize;
    let mut seen = vec![false; w * h];
    let mut outside_total = 0usize;
    for y in y0..=y1 {
        for x in x0..=x1 {
            if !region.contains(Site::new(x, y)) {
                outside_total += 1;
            }
        }
    }
    let start = Site::new(x0, y0);
    seen[idx(start)] = true;
    let mut reached = 1usize;
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        for t in s.neighbors6() {
            if t.x < x0 || t.x > x1 || t.y < y0 || t.y > y1 || region.contains(t) {
                continue;
            }
            let k = idx(t);
            if !seen[k] {
                seen[k] = true;
                reached += 1;
                queue.push_back(t);
            }
        }
    }
    reached == outside_total
}

/// Whether the region is connected and hole-free.
pub fn is_simply_connected(region: &Region) -> Result<bool> {
    region.is_simply_connected()
}

/// Splits sites by the parity of x+y: `(even, odd)`.
pub fn parity_split(region: &Region) -> (Vec<Site>, Vec<Site>) {
    region.sites().iter().partition(|s| s.is_even())
}

/// Integer heights on a region together with the boundary level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeightField {
    region: Arc<Region>,
    heights: Vec<i32>,
    boundary_level: i32,
}

impl HeightField {
    /// `heights` are indexed like `region.sites()`.
    pub fn new(region: Arc<Region>, heights: Vec<i32>, boundary_level: i32) -> Result<Self> {
        if heights.len() != region.len() {
            return Err(Error::InvalidArgument(format!(
                "{} heights for a region of {} sites",
                heights.len(),
                region.len()
            )));
        }
        Ok(HeightField { region, heights, boundary_level })
    }

    pub fn flat(region: Arc<Region>, level: i32) -> Self {
        let heights = vec![level; region.len()];
        HeightField { region, heights, boundary_level: level }
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn region_arc(&self) -> &Arc<Region> {
        &self.region
    }

    pub fn heights(&self) -> &[i32] {
        &self.heights
    }

    pub fn heights_mut(&mut self) -> &mut [i32] {
        &mut self.heights
    }

    pub fn boundary_level(&self) -> i32 {
        self.boundary_level
    }

    /// Height at `s`, or the boundary level outside the region.
    pub fn get(&self, s: Site) -> i32 {
        match self.region.index_of(s) {
            Some(i) => self.heights[i],
            None => self.boundary_level,
        }
    }

    pub fn set(&mut self, s: Site, h: i32) -> Result<()> {
        let i = self
            .region
            .index_of(s)
            .ok_or_else(|| Error::InvalidArgument(format!("site ({}, {}) outside region", s.x, s.y)))?;
        self.heights[i] = h;
        Ok(())
    }

    pub fn is_positive(&self) -> bool {
        self.boundary_level >= 0 && self.heights.iter().all(|&h| h >= 0)
    }
}

#[derive(Serialize, Deserialize)]
struct FieldRepr {
    boundary_level: i32,
    heights: Vec<(i32, i32, i32)>,
}

impl Serialize for HeightField {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FieldRepr {
            boundary_level: self.boundary_level,
            heights: self
                .region
                .sites()
                .iter()
                .zip(&self.heights)
                .map(|(s, &h)| (s.x, s.y, h))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for HeightField {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = FieldRepr::deserialize(d)?;
        let region = Arc::new(Region::from_sites(repr.heights.iter().map(|&(x, y, _)| Site::new(x, y))));
        if region.len() != repr.heights.len() {
            return Err(serde::de::Error::custom("duplicate sites in height field"));
        }
        let mut heights = vec![0; region.len()];
        for &(x, y, h) in &repr.heights {
            heights[region.index_of(Site::new(x, y)).unwrap()] = h;
        }
        Ok(HeightField { region, heights, boundary_level: repr.boundary_level })
    }
}
