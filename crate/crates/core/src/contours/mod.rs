//! Level lines of height fields: signed dual-edge contours with intensities
//! (cylinders), their compatibility, reconstruction and enumeration.
//!
//! At a dual vertex where four contour edges meet, the edges are paired by
//! the side of the slope +1 line through the vertex they lie on: east with
//! south, north with west. Curves therefore wrap the south-east and
//! north-west cells, and the south-west and north-east cells stay connected
//! through the vertex.

mod decompose;
mod enumerate;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::lattice::{HeightField, Region, Site};

pub use decompose::decompose;
pub use enumerate::{enumerate_contours, enumerate_contours_with_budget, peierls_sum, PeierlsSum};

/// The dual vertex at (x + 1/2, y + 1/2).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DualVertex {
    pub x: i32,
    pub y: i32,
}

impl DualVertex {
    pub const fn new(x: i32, y: i32) -> Self {
        DualVertex { x, y }
    }

    pub fn step(self, d: Dir) -> DualVertex {
        let (dx, dy) = d.delta();
        DualVertex::new(self.x + dx, self.y + dy)
    }

    /// The four cells around the vertex: SW, SE, NW, NE.
    pub fn cells(self) -> [Site; 4] {
        [
            Site::new(self.x, self.y),
            Site::new(self.x + 1, self.y),
            Site::new(self.x, self.y + 1),
            Site::new(self.x + 1, self.y + 1),
        ]
    }
}

impl Ord for DualVertex {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for DualVertex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Serialize for DualVertex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.x as f64 + 0.5, self.y as f64 + 0.5].serialize(s)
    }
}

impl<'de> Deserialize<'de> for DualVertex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [x, y] = <[f64; 2]>::deserialize(d)?;
        if x.fract().abs() != 0.5 || y.fract().abs() != 0.5 {
            return Err(serde::de::Error::custom("dual vertex coordinates must be half-integers"));
        }
        Ok(DualVertex::new(x.floor() as i32, y.floor() as i32))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dir {
    E,
    N,
    W,
    S,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::E, Dir::N, Dir::W, Dir::S];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Dir::E => (1, 0),
            Dir::N => (0, 1),
            Dir::W => (-1, 0),
            Dir::S => (0, -1),
        }
    }

    pub fn opposite(self) -> Dir {
        match self {
            Dir::E => Dir::W,
            Dir::N => Dir::S,
            Dir::W => Dir::E,
            Dir::S => Dir::N,
        }
    }

    pub(crate) fn bit(self) -> u8 {
        1 << (self as u8)
    }

    /// The edge paired with `self` at a vertex where four edges meet.
    pub fn linked_partner(self) -> Dir {
        match self {
            Dir::E => Dir::S,
            Dir::S => Dir::E,
            Dir::N => Dir::W,
            Dir::W => Dir::N,
        }
    }
}

/// Whether two edges at a vertex lie on the same side of the slope +1 line.
pub fn is_linked(a: Dir, b: Dir) -> bool {
    a.linked_partner() == b
}

/// An edge of the dual lattice, stored with its endpoints in canonical order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DualEdge {
    a: DualVertex,
    b: DualVertex,
}

impl DualEdge {
    pub fn new(p: DualVertex, q: DualVertex) -> Result<Self> {
        if p.x.abs_diff(q.x) + p.y.abs_diff(q.y) != 1 {
            return Err(Error::InvalidArgument("dual edge endpoints must be adjacent".into()));
        }
        Ok(if p < q { DualEdge { a: p, b: q } } else { DualEdge { a: q, b: p } })
    }

    pub(crate) fn from_step(v: DualVertex, d: Dir) -> Self {
        let w = v.step(d);
        if v < w {
            DualEdge { a: v, b: w }
        } else {
            DualEdge { a: w, b: v }
        }
    }

    /// The dual edge crossing the lattice edge between two adjacent cells.
    pub fn between(c: Site, d: Site) -> Result<Self> {
        let (lo, hi) = if c < d { (c, d) } else { (d, c) };
        if hi.x == lo.x + 1 && hi.y == lo.y {
            Ok(DualEdge::from_step(DualVertex::new(lo.x, lo.y - 1), Dir::N))
        } else if hi.y == lo.y + 1 && hi.x == lo.x {
            Ok(DualEdge::from_step(DualVertex::new(lo.x - 1, lo.y), Dir::E))
        } else {
            Err(Error::InvalidArgument("cells are not adjacent".into()))
        }
    }

    pub fn endpoints(&self) -> (DualVertex, DualVertex) {
        (self.a, self.b)
    }

    pub fn is_vertical(&self) -> bool {
        self.a.x == self.b.x
    }

    /// The two cells on either side, lower/left first.
    pub fn cells(&self) -> (Site, Site) {
        if self.is_vertical() {
            (Site::new(self.a.x, self.a.y + 1), Site::new(self.a.x + 1, self.a.y + 1))
        } else {
            (Site::new(self.a.x + 1, self.a.y), Site::new(self.a.x + 1, self.a.y + 1))
        }
    }
}

impl Serialize for DualEdge {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        (self.a, self.b).serialize(s)
    }
}

impl<'de> Deserialize<'de> for DualEdge {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (a, b) = <(DualVertex, DualVertex)>::deserialize(d)?;
        DualEdge::new(a, b).map_err(serde::de::Error::custom)
    }
}

/// A closed level line: its edges, the enclosed cells and the inner and
/// outer neighbourhoods Δ⁻ and Δ⁺.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GeometricContour {
    edges: Vec<DualEdge>,
    interior: Vec<Site>,
    inner: Vec<Site>,
    outer: Vec<Site>,
}

impl PartialOrd for GeometricContour {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GeometricContour {
    fn cmp(&self, other: &Self) -> Ordering {
        self.edges.cmp(&other.edges)
    }
}

impl<'de> Deserialize<'de> for GeometricContour {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            edges: Vec<DualEdge>,
        }
        let r = Repr::deserialize(d)?;
        GeometricContour::from_edges(r.edges).map_err(serde::de::Error::custom)
    }
}

impl GeometricContour {
    /// Builds a contour from its edge set, checking that the edges trace a
    /// single closed curve under the linking rule.
    pub fn from_edges<I: IntoIterator<Item = DualEdge>>(edges: I) -> Result<Self> {
        let edges: Vec<DualEdge> = edges.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        if edges.len() < 4 {
            return Err(Error::InvalidArgument("a contour has at least four edges".into()));
        }
        let mut incidence: BTreeMap<DualVertex, u8> = BTreeMap::new();
        for e in &edges {
            let d = if e.is_vertical() { Dir::N } else { Dir::E };
            *incidence.entry(e.a).or_default() |= d.bit();
            *incidence.entry(e.b).or_default() |= d.opposite().bit();
        }
        for &mask in incidence.values() {
            let deg = mask.count_ones();
            if deg != 2 && deg != 4 {
                return Err(Error::InvalidArgument("every contour vertex needs 2 or 4 edges".into()));
            }
        }
        let cycles = trace_cycles(&incidence);
        if cycles.len() != 1 {
            return Err(Error::InvalidArgument(format!(
                "edges form {} closed curves, expected one",
                cycles.len()
            )));
        }
        Ok(Self::build_unchecked(edges, &incidence))
    }

    /// Assumes `edges` is sorted and traces one curve.
    pub(crate) fn build_unchecked(edges: Vec<DualEdge>, incidence: &BTreeMap<DualVertex, u8>) -> Self {
        let interior = interior_of(&edges);
        let mut delta: BTreeSet<Site> = BTreeSet::new();
        for e in &edges {
            let (c, d) = e.cells();
            delta.insert(c);
            delta.insert(d);
        }
        for (&v, &mask) in incidence {
            if mask.count_ones() == 2 && !corner_is_linked(mask) {
                delta.extend(v.cells());
            }
        }
        let (inner, outer): (Vec<Site>, Vec<Site>) =
            delta.into_iter().partition(|s| interior.binary_search(s).is_ok());
        GeometricContour { edges, interior, inner, outer }
    }

    /// The square of four edges around a single cell.
    pub fn unit_square(c: Site) -> Self {
        let edges = c.neighbors4().into_iter().map(|d| DualEdge::between(c, d).unwrap());
        GeometricContour::from_edges(edges).expect("unit square is a contour")
    }

    pub fn edges(&self) -> &[DualEdge] {
        &self.edges
    }

    pub fn length(&self) -> u32 {
        self.edges.len() as u32
    }

    /// Enclosed cells, sorted.
    pub fn interior(&self) -> &[Site] {
        &self.interior
    }

    /// Δ⁻: neighbourhood cells inside the curve.
    pub fn inner(&self) -> &[Site] {
        &self.inner
    }

    /// Δ⁺: neighbourhood cells outside the curve.
    pub fn outer(&self) -> &[Site] {
        &self.outer
    }
}

fn corner_is_linked(mask: u8) -> bool {
    mask == Dir::E.bit() | Dir::S.bit() || mask == Dir::N.bit() | Dir::W.bit()
}

/// Splits the edge set at every vertex by the linking rule and returns the
/// closed curves as edge lists.
pub(crate) fn trace_cycles(incidence: &BTreeMap<DualVertex, u8>) -> Vec<Vec<DualEdge>> {
    let mut used: BTreeSet<DualEdge> = BTreeSet::new();
    let mut out = Vec::new();
    for (&v0, &mask) in incidence {
        for d0 in Dir::ALL {
            if mask & d0.bit() == 0 || used.contains(&DualEdge::from_step(v0, d0)) {
                continue;
            }
            let mut cycle = Vec::new();
            let (mut v, mut d) = (v0, d0);
            loop {
                let e = DualEdge::from_step(v, d);
                if !used.insert(e) {
                    break;
                }
                cycle.push(e);
                let w = v.step(d);
                let din = d.opposite();
                let m = incidence[&w];
                d = if m.count_ones() == 4 {
                    din.linked_partner()
                } else {
                    Dir::ALL.into_iter().find(|&x| x != din && m & x.bit() != 0).unwrap()
                };
                v = w;
            }
            cycle.sort();
            out.push(cycle);
        }
    }
    out
}

/// Cells enclosed by the edge set, by parity of vertical edges to the right.
pub(crate) fn interior_of(edges: &[DualEdge]) -> Vec<Site> {
    let mut rows: BTreeMap<i32, Vec<i32>> = BTreeMap::new();
    for e in edges {
        if e.is_vertical() {
            rows.entry(e.a.y + 1).or_default().push(e.a.x);
        }
    }
    let mut out = Vec::new();
    for (y, mut xs) in rows {
        xs.sort_unstable();
        for pair in xs.chunks(2) {
            if let [p, q] = *pair {
                out.extend((p + 1..=q).map(|x| Site::new(x, y)));
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub fn value(self) -> i32 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl Serialize for Sign {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.value().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Sign {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match i32::deserialize(d)? {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            v => Err(serde::de::Error::custom(format!("sign must be +1 or -1, got {v}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cylinder {
    pub contour: GeometricContour,
    pub sign: Sign,
    pub intensity: u32,
}

impl Cylinder {
    pub fn new(contour: GeometricContour, sign: Sign, intensity: u32) -> Result<Self> {
        if intensity == 0 {
            return Err(Error::InvalidArgument("cylinder intensity must be positive".into()));
        }
        Ok(Cylinder { contour, sign, intensity })
    }
}

/// Cylinders in canonical order (by edge set, then sign).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CylinderSet {
    pub cylinders: Vec<Cylinder>,
}

impl CylinderSet {
    pub fn new(mut cylinders: Vec<Cylinder>) -> Self {
        cylinders.sort_by(|a, b| (&a.contour, a.sign).cmp(&(&b.contour, b.sign)));
        CylinderSet { cylinders }
    }

    pub fn len(&self) -> usize {
        self.cylinders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cylinders.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Cylinder> {
        self.cylinders.iter()
    }
}

fn sorted_intersects(a: &[Site], b: &[Site]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => return true,
        }
    }
    false
}

fn sorted_subset(a: &[Site], b: &[Site]) -> bool {
    a.iter().all(|s| b.binary_search(s).is_ok())
}

/// Whether two cylinders may occur together in one field.
pub fn compatible(a: &Cylinder, b: &Cylinder) -> bool {
    let (ga, gb) = (&a.contour, &b.contour);
    if ga.edges == gb.edges {
        return false;
    }
    let disjoint = !sorted_intersects(&ga.interior, &gb.interior);
    let a_in_b = !disjoint && sorted_subset(&ga.interior, &gb.interior);
    let b_in_a = !disjoint && sorted_subset(&gb.interior, &ga.interior);
    if !(disjoint || a_in_b || b_in_a) {
        return false;
    }
    if a.sign == b.sign {
        if disjoint {
            return !sorted_intersects(&gb.interior, &ga.outer) && !sorted_intersects(&ga.interior, &gb.outer);
        }
        true
    } else {
        if disjoint {
            return true;
        }
        let (inner, outer) = if a_in_b { (ga, gb) } else { (gb, ga) };
        !sorted_intersects(&inner.interior, &outer.inner)
    }
}

/// φ = n + Σ ε·k·1{interior}, after checking pairwise compatibility.
pub fn reconstruct(cylinders: &CylinderSet, region: Arc<Region>, boundary_level: i32) -> Result<HeightField> {
    let cs = &cylinders.cylinders;
    for (i, a) in cs.iter().enumerate() {
        if a.intensity == 0 {
            return Err(Error::InvalidCollection("zero intensity".into()));
        }
        for b in &cs[i + 1..] {
            if !compatible(a, b) {
                return Err(Error::InvalidCollection("incompatible cylinders".into()));
            }
        }
    }
    let mut heights = vec![boundary_level; region.len()];
    for c in cs {
        for &s in c.contour.interior() {
            let i = region
                .index_of(s)
                .ok_or_else(|| Error::InvalidCollection(format!("interior site ({}, {}) outside region", s.x, s.y)))?;
            heights[i] += c.sign.value() * c.intensity as i32;
        }
    }
    HeightField::new(region, heights, boundary_level)
}

/// Σ k·|γ̃| over the cylinders.
pub fn contour_energy(cylinders: &CylinderSet) -> u64 {
    cylinders
        .iter()
        .map(|c| c.intensity as u64 * c.contour.length() as u64)
        .sum()
}

/// min over Δ⁻ × Δ⁺ of ε(φ(x) - φ(y)), clamped at 0.
pub fn intensity_of(field: &HeightField, contour: &GeometricContour, sign: Sign) -> u32 {
    let inner = contour.inner().iter().map(|&s| field.get(s));
    let outer = contour.outer().iter().map(|&s| field.get(s));
    let gap = match sign {
        Sign::Plus => inner.min().unwrap_or(0) - outer.max().unwrap_or(0),
        Sign::Minus => outer.min().unwrap_or(0) - inner.max().unwrap_or(0),
    };
    gap.max(0) as u32
}
