use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use proptest::prelude::*;
use sos_core::contours::{contour_energy, decompose, enumerate_contours, reconstruct, GeometricContour};
use sos_core::exact::hamiltonian;
use sos_core::lattice::{build_rect_region, connected_components, HeightField, Region, Site};

const SIX: [(i32, i32); 6] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1)];

fn perimeter(cells: &BTreeSet<(i32, i32)>) -> u32 {
    cells
        .iter()
        .map(|&(x, y)| [(1, 0), (-1, 0), (0, 1), (0, -1)].iter().filter(|d| !cells.contains(&(x + d.0, y + d.1))).count() as u32)
        .sum()
}

fn complement_connected(cells: &BTreeSet<(i32, i32)>) -> bool {
    let x0 = cells.iter().map(|c| c.0).min().unwrap() - 1;
    let x1 = cells.iter().map(|c| c.0).max().unwrap() + 1;
    let y0 = cells.iter().map(|c| c.1).min().unwrap() - 1;
    let y1 = cells.iter().map(|c| c.1).max().unwrap() + 1;
    let total = ((x1 - x0 + 1) * (y1 - y0 + 1)) as usize - cells.len();
    let mut seen = BTreeSet::from([(x0, y0)]);
    let mut q = VecDeque::from([(x0, y0)]);
    while let Some((x, y)) = q.pop_front() {
        for (dx, dy) in SIX {
            let t = (x + dx, y + dy);
            if t.0 < x0 || t.0 > x1 || t.1 < y0 || t.1 > y1 || cells.contains(&t) {
                continue;
            }
            if seen.insert(t) {
                q.push_back(t);
            }
        }
    }
    seen.len() == total
}

/// Redelmeier enumeration of fixed 6-connected animals up to `max` cells,
/// each generated once, rooted at its least cell in (y, x) order.
fn animals(max: usize, visit: &mut dyn FnMut(&BTreeSet<(i32, i32)>)) {
    fn rec(
        current: &mut BTreeSet<(i32, i32)>,
        untried: Vec<(i32, i32)>,
        seen: &mut BTreeSet<(i32, i32)>,
        max: usize,
        visit: &mut dyn FnMut(&BTreeSet<(i32, i32)>),
    ) {
        let mut untried = untried;
        while let Some(c) = untried.pop() {
            current.insert(c);
            visit(current);
            if current.len() < max {
                let mut next = untried.clone();
                let mut added = Vec::new();
                for (dx, dy) in SIX {
                    let t = (c.0 + dx, c.1 + dy);
                    let allowed = t.1 > 0 || (t.1 == 0 && t.0 >= 0);
                    if allowed && !seen.contains(&t) {
                        seen.insert(t);
                        added.push(t);
                        next.push(t);
                    }
                }
                rec(current, next, seen, max, visit);
                for t in added {
                    seen.remove(&t);
                }
            }
            current.remove(&c);
        }
    }
    let mut seen = BTreeSet::from([(0, 0)]);
    rec(&mut BTreeSet::new(), vec![(0, 0)], &mut seen, max, visit);
}

#[test]
fn animal_enumeration_reproduces_known_counts() {
    let mut by_size = BTreeMap::new();
    animals(5, &mut |a| *by_size.entry(a.len()).or_insert(0u64) += 1);
    // fixed animals of the triangular lattice
    assert_eq!(by_size.values().copied().collect::<Vec<_>>(), vec![1, 3, 11, 44, 186]);
}

#[test]
fn contour_counts_match_hole_free_animals() {
    let max_len = 12u32;
    let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
    // a set of perimeter ≤ 12 has at most 9 cells
    animals(9, &mut |a| {
        let p = perimeter(a);
        if p <= max_len && complement_connected(a) {
            // one translate per cell puts that cell on the marked site
            *counts.entry(p).or_default() += a.len() as u64;
        }
    });
    let got = enumerate_contours(Site::new(0, 0), max_len).unwrap();
    assert_eq!(got, counts);
}

#[test]
fn unit_square_neighbourhoods() {
    let g = GeometricContour::unit_square(Site::new(3, 4));
    assert_eq!(g.length(), 4);
    assert_eq!(g.interior(), &[Site::new(3, 4)]);
    assert_eq!(g.inner(), &[Site::new(3, 4)]);
    let mut outer: Vec<Site> = Site::new(3, 4).neighbors4().to_vec();
    outer.push(Site::new(2, 3));
    outer.push(Site::new(4, 5));
    outer.sort();
    assert_eq!(g.outer(), &outer[..]);
}

fn rect_field(w: i64, h: i64, heights: Vec<i32>, n: i32) -> HeightField {
    HeightField::new(Arc::new(build_rect_region(w, h).unwrap()), heights, n).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn round_trip_and_energy(w in 1i64..6, h in 1i64..6, n in -2i32..3, seed in proptest::collection::vec(-3i32..4, 36)) {
        let len = (w * h) as usize;
        let f = rect_field(w, h, seed[..len].to_vec(), n);
        let cs = decompose(&f).unwrap();
        let back = reconstruct(&cs, f.region_arc().clone(), n).unwrap();
        prop_assert_eq!(back.heights(), f.heights());
        prop_assert_eq!(contour_energy(&cs), hamiltonian(&f));
    }

    #[test]
    fn components_match_union_find(cells in proptest::collection::btree_set((0i32..7, 0i32..7), 0..30)) {
        let sites: Vec<Site> = cells.iter().map(|&(x, y)| Site::new(x, y)).collect();
        let idx: BTreeMap<(i32, i32), usize> = cells.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let mut parent: Vec<usize> = (0..cells.len()).collect();
        fn find(p: &mut Vec<usize>, x: usize) -> usize {
            if p[x] != x { let r = find(p, p[x]); p[x] = r; }
            p[x]
        }
        for (&(x, y), &i) in &idx {
            for t in [(x + 1, y), (x, y + 1)] {
                if let Some(&j) = idx.get(&t) {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a] = b;
                }
            }
        }
        let roots: BTreeSet<usize> = (0..cells.len()).map(|i| find(&mut parent, i)).collect();
        let comps = connected_components(&sites);
        prop_assert_eq!(comps.len(), roots.len());
        prop_assert_eq!(comps.iter().map(|c| c.len()).sum::<usize>(), sites.len());
    }

    #[test]
    fn simple_connectivity_matches_euler_characteristic(cells in proptest::collection::btree_set((0i32..6, 0i32..6), 1..25)) {
        let region = Region::from_sites(cells.iter().map(|&(x, y)| Site::new(x, y)));
        if !region.is_connected() {
            prop_assert!(region.is_simply_connected().is_err());
            return Ok(());
        }
        // χ = V - E + T on the 6-neighbour triangulation; 1 iff no holes
        let v = cells.len() as i64;
        let e = cells.iter().map(|&(x, y)| [(1, 0), (0, 1), (1, 1)].iter().filter(|d| cells.contains(&(x + d.0, y + d.1))).count() as i64).sum::<i64>();
        let t = cells.iter().map(|&(x, y)| {
            let a = cells.contains(&(x + 1, y)) && cells.contains(&(x + 1, y + 1));
            let b = cells.contains(&(x, y + 1)) && cells.contains(&(x + 1, y + 1));
            a as i64 + b as i64
        }).sum::<i64>();
        prop_assert_eq!(region.is_simply_connected().unwrap(), v - e + t == 1);
    }
}

#[test]
fn exhaustive_two_by_two() {
    let region = Arc::new(build_rect_region(2, 2).unwrap());
    let mut n = 0;
    for k in 0..625 {
        let hs: Vec<i32> = (0..4).map(|i| (k / 5i32.pow(i)) % 5 - 2).collect();
        let f = HeightField::new(region.clone(), hs, 0).unwrap();
        let cs = decompose(&f).unwrap();
        assert_eq!(reconstruct(&cs, region.clone(), 0).unwrap(), f);
        assert_eq!(contour_energy(&cs), hamiltonian(&f));
        n += 1;
    }
    assert_eq!(n, 625);
}

#[test]
fn region_with_hole_is_rejected() {
    let ring = Region::from_sites((0..3).flat_map(|x| (0..3).map(move |y| Site::new(x, y))).filter(|s| *s != Site::new(1, 1)));
    assert!(!ring.is_simply_connected().unwrap());
    let f = HeightField::flat(Arc::new(ring), 0);
    assert!(decompose(&f).is_err());
}
