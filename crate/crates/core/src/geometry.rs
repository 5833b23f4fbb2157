//! Uniform grids over boxes, face adjacency, merging of cells across faces
//! and oriented boundaries of the resulting complexes.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::interval::{RatBox, RatInterval, Rational};

/// Linear index of a grid cell; the last axis varies fastest.
pub type CellId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grid {
    base: RatBox,
    counts: Vec<usize>,
    cuts: Vec<Vec<Rational>>,
}

/// Cells per axis so that every cell has width at most `r`.
fn cells_for(width: &Rational, r: &Rational) -> usize {
    let q = width / r;
    let n = Integer::div_ceil(q.numer(), q.denom());
    n.max(BigInt::from(1)).to_usize().expect("grid too fine to index")
}

fn uniform_cuts(iv: &RatInterval, n: usize) -> Vec<Rational> {
    let step = iv.width() / Rational::from_integer(BigInt::from(n));
    let mut cuts: Vec<Rational> = (0..n)
        .map(|k| iv.lo() + &step * Rational::from_integer(BigInt::from(k)))
        .collect();
    cuts.push(iv.hi().clone());
    cuts
}

impl Grid {
    /// Uniform grid with `ceil(width_i / r)` cells on axis `i` (at least one).
    ///
    /// # Panics
    /// If `r` is not positive.
    pub fn cover(base: &RatBox, r: &Rational) -> Grid {
        assert!(r.is_positive(), "grid resolution must be positive");
        let counts: Vec<usize> = base.components().iter().map(|iv| cells_for(&iv.width(), r)).collect();
        Self::with_counts(base, &counts)
    }

    pub fn with_counts(base: &RatBox, counts: &[usize]) -> Grid {
        assert_eq!(base.dim(), counts.len());
        assert!(counts.iter().all(|&c| c > 0));
        let cuts = base
            .components()
            .iter()
            .zip(counts)
            .map(|(iv, &n)| uniform_cuts(iv, n))
            .collect();
        Grid {
            base: base.clone(),
            counts: counts.to_vec(),
            cuts,
        }
    }

    /// Cell count, or `None` if it overflows `usize`.
    pub fn checked_len(base: &RatBox, r: &Rational) -> Option<usize> {
        base.components()
            .iter()
            .try_fold(1usize, |acc, iv| {
                let q = iv.width() / r;
                let n = Integer::div_ceil(q.numer(), q.denom()).max(BigInt::from(1));
                acc.checked_mul(n.to_usize()?)
            })
    }

    pub fn base(&self) -> &RatBox {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn cuts(&self, axis: usize) -> &[Rational] {
        &self.cuts[axis]
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cells(&self) -> std::ops::Range<CellId> {
        0..self.len()
    }

    pub fn cell_index(&self, mut id: CellId) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            idx[a] = id % self.counts[a];
            id /= self.counts[a];
        }
        idx
    }

    pub fn cell_id(&self, idx: &[usize]) -> CellId {
        idx.iter().zip(&self.counts).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn cell_box(&self, id: CellId) -> RatBox {
        self.cell_index(id)
            .iter()
            .enumerate()
            .map(|(a, &k)| RatInterval::new(self.cuts[a][k].clone(), self.cuts[a][k + 1].clone()).expect("cuts ascend"))
            .collect()
    }

    /// The `2m` faces of a cell: lower then upper face for each axis.
    pub fn faces_of_cell(&self, id: CellId) -> Vec<FaceId> {
        let idx = self.cell_index(id);
        let mut out = Vec::with_capacity(2 * self.dim());
        for axis in 0..self.dim() {
            for k in [idx[axis], idx[axis] + 1] {
                let mut index = idx.clone();
                index[axis] = k;
                out.push(FaceId { axis, index });
            }
        }
        out
    }

    pub fn face(&self, id: &FaceId) -> Face {
        let axis = id.axis;
        let k = id.index[axis];
        let value = self.cuts[axis][k].clone();
        let bx: RatBox = (0..self.dim())
            .map(|a| {
                if a == axis {
                    RatInterval::point(value.clone())
                } else {
                    let j = id.index[a];
                    RatInterval::new(self.cuts[a][j].clone(), self.cuts[a][j + 1].clone()).expect("cuts ascend")
                }
            })
            .collect();
        let mut cells = Vec::with_capacity(2);
        let mut idx = id.index.clone();
        if k > 0 {
            idx[axis] = k - 1;
            cells.push(self.cell_id(&idx));
        }
        if k < self.counts[axis] {
            idx[axis] = k;
            cells.push(self.cell_id(&idx));
        }
        Face {
            axis,
            value,
            bx,
            on_boundary: cells.len() == 1,
            cells,
        }
    }

    /// Every face of the grid, in `FaceId` order.
    pub fn faces(&self) -> Vec<FaceId> {
        let mut out = Vec::new();
        for axis in 0..self.dim() {
            let mut extents = self.counts.clone();
            extents[axis] += 1;
            let total: usize = extents.iter().product();
            for mut lin in 0..total {
                let mut index = vec![0; self.dim()];
                for a in (0..self.dim()).rev() {
                    index[a] = lin % extents[a];
                    lin /= extents[a];
                }
                out.push(FaceId { axis, index });
            }
        }
        out
    }
}

/// A face of a grid: `index[axis]` is the cut number, other entries are cell
/// indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FaceId {
    pub axis: usize,
    pub index: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Face {
    /// The degenerate axis.
    pub axis: usize,
    pub value: Rational,
    pub bx: RatBox,
    /// One incident cell on the base boundary, two otherwise.
    pub cells: Vec<CellId>,
    pub on_boundary: bool,
}

/// Uniform split of a face to width at most `r` on its free axes.
pub fn subdivide_face(face: &Face, r: &Rational) -> Vec<Face> {
    assert!(r.is_positive(), "resolution must be positive");
    let counts: Vec<usize> = face
        .bx
        .components()
        .iter()
        .enumerate()
        .map(|(a, iv)| if a == face.axis { 1 } else { cells_for(&iv.width(), r) })
        .collect();
    let g = Grid::with_counts(&face.bx, &counts);
    g.cells()
        .map(|c| Face {
            bx: g.cell_box(c),
            ..face.clone()
        })
        .collect()
}

/// Union of grid cells treated as one region.
#[derive(Clone, Debug)]
pub struct BoxComplex {
    grid: Arc<Grid>,
    cells: Vec<CellId>,
}

impl PartialEq for BoxComplex {
    fn eq(&self, other: &Self) -> bool {
        self.cells == other.cells && (Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid)
    }
}

impl BoxComplex {
    pub fn from_cells(grid: Arc<Grid>, mut cells: Vec<CellId>) -> Self {
        cells.sort_unstable();
        cells.dedup();
        Self { grid, cells }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn cells(&self) -> &[CellId] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn cell_boxes(&self) -> Vec<RatBox> {
        self.cells.iter().map(|&c| self.grid.cell_box(c)).collect()
    }

    /// Faces on the topological boundary with outward sign `+1` when the
    /// complex lies below the face on its axis, `-1` otherwise.
    pub fn boundary(&self) -> Vec<(Face, i8)> {
        let mut count: BTreeMap<FaceId, (usize, i8)> = BTreeMap::new();
        for &c in &self.cells {
            for (j, f) in self.grid.faces_of_cell(c).into_iter().enumerate() {
                let sign = if j % 2 == 0 { -1 } else { 1 };
                let e = count.entry(f).or_insert((0, sign));
                e.0 += 1;
            }
        }
        count
            .into_iter()
            .filter(|(_, (n, _))| *n == 1)
            .map(|(id, (_, s))| (self.grid.face(&id), s))
            .collect()
    }
}

/// Result of merging: the surviving complexes and the cells removed because
/// their component touches a zero face on the base boundary.
#[derive(Clone, Debug)]
pub struct Merge {
    pub complexes: Vec<BoxComplex>,
    pub removed: Vec<CellId>,
}

struct UnionFind {
    parent: HashMap<CellId, CellId>,
}

impl UnionFind {
    fn find(&mut self, x: CellId) -> CellId {
        let mut root = x;
        while let Some(&p) = self.parent.get(&root) {
            if p == root {
                break;
            }
            root = p;
        }
        let mut cur = x;
        while cur != root {
            let next = self.parent.get(&cur).copied().unwrap_or(cur);
            self.parent.insert(cur, root);
            cur = next;
        }
        root
    }

    fn union(&mut self, a: CellId, b: CellId) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent.insert(hi, lo);
            self.parent.entry(lo).or_insert(lo);
        }
    }
}

/// Joins cells across every internal zero face, then drops each component
/// with a zero face on the base boundary.
pub fn merge_cells(grid: &Arc<Grid>, zero_faces: &[FaceId]) -> Merge {
    let all: Vec<CellId> = grid.cells().collect();
    merge_cells_touching(grid, zero_faces, &all)
}

/// Like [`merge_cells`], materializing only components that contain a cell
/// of `seeds`; other cells are neither returned nor reported as removed.
pub fn merge_cells_touching(grid: &Arc<Grid>, zero_faces: &[FaceId], seeds: &[CellId]) -> Merge {
    let mut uf = UnionFind { parent: HashMap::new() };
    let mut boundary_hits = Vec::new();
    let mut members: HashMap<CellId, ()> = HashMap::new();
    for id in zero_faces {
        let face = grid.face(id);
        match face.cells.as_slice() {
            [a, b] => {
                uf.union(*a, *b);
                members.insert(*a, ());
                members.insert(*b, ());
            }
            [a] => {
                boundary_hits.push(*a);
                members.insert(*a, ());
            }
            _ => unreachable!("a face has one or two cells"),
        }
    }
    let mut comps: BTreeMap<CellId, Vec<CellId>> = BTreeMap::new();
    for &m in members.keys() {
        let r = uf.find(m);
        comps.entry(r).or_default().push(m);
    }
    let dead: std::collections::HashSet<CellId> = boundary_hits.iter().map(|&c| uf.find(c)).collect();

    let mut seen = std::collections::HashSet::new();
    let mut complexes = Vec::new();
    let mut removed = Vec::new();
    let mut sorted_seeds = seeds.to_vec();
    sorted_seeds.sort_unstable();
    sorted_seeds.dedup();
    for s in sorted_seeds {
        let root = if members.contains_key(&s) { uf.find(s) } else { s };
        if !seen.insert(root) {
            continue;
        }
        let cells = comps.remove(&root).unwrap_or_else(|| vec![s]);
        if dead.contains(&root) {
            removed.extend(cells);
        } else {
            complexes.push(BoxComplex::from_cells(grid.clone(), cells));
        }
    }
    removed.sort_unstable();
    complexes.sort_by(|a, b| a.cells[0].cmp(&b.cells[0]));
    Merge { complexes, removed }
}

/// Signed `(m-1)`-volume of the boundary faces normal to each axis.
pub fn signed_face_volume(boundary: &[(Face, i8)], dim: usize) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); dim];
    for (f, s) in boundary {
        let vol = f
            .bx
            .components()
            .iter()
            .enumerate()
            .filter(|(a, _)| *a != f.axis)
            .fold(Rational::from_integer(BigInt::from(1)), |acc, (_, iv)| acc * iv.width());
        out[f.axis] += vol * Rational::from_integer(BigInt::from(*s));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::{rat, ratio};

    fn unit(m: usize) -> RatBox {
        RatBox::new(vec![RatInterval::from_ints(0, 1).unwrap(); m])
    }

    #[test]
    fn one_dimensional_covers() {
        let g = Grid::cover(&unit(1), &ratio(1, 2));
        assert_eq!(g.len(), 2);
        assert_eq!(g.cell_box(0).to_string(), "[0, 1/2]");
        assert_eq!(g.cell_box(1).to_string(), "[1/2, 1]");
        assert_eq!(Grid::cover(&unit(2), &rat(1)).len(), 1);
        let g = Grid::cover(&unit(1), &ratio(1, 3));
        assert_eq!(g.len(), 3);
        assert!(g.cells().all(|c| g.cell_box(c).width() == ratio(1, 3)));
    }

    #[test]
    fn degenerate_axis_has_one_cell() {
        let b = RatBox::new(vec![RatInterval::point(rat(2)), RatInterval::from_ints(0, 1).unwrap()]);
        assert_eq!(Grid::cover(&b, &ratio(1, 4)).counts(), &[1, 4]);
    }

    #[test]
    fn faces_and_incidence() {
        let g = Grid::cover(&unit(2), &ratio(1, 2));
        assert_eq!(g.faces().len(), 12);
        let internal = g.faces().iter().filter(|f| !g.face(f).on_boundary).count();
        assert_eq!(internal, 4);
        let f = g.face(&FaceId { axis: 0, index: vec![1, 0] });
        assert_eq!(f.cells, vec![0, 2]);
        assert_eq!(f.value, ratio(1, 2));
    }

    #[test]
    fn unit_square_boundary() {
        let g = Arc::new(Grid::cover(&unit(2), &rat(1)));
        let c = BoxComplex::from_cells(g, vec![0]);
        let b = c.boundary();
        assert_eq!(b.len(), 4);
        let signs: Vec<(usize, Rational, i8)> = b.iter().map(|(f, s)| (f.axis, f.value.clone(), *s)).collect();
        assert_eq!(
            signs,
            vec![(0, rat(0), -1), (0, rat(1), 1), (1, rat(0), -1), (1, rat(1), 1)]
        );
    }

    #[test]
    fn shared_face_cancels() {
        let base = RatBox::new(vec![RatInterval::from_ints(0, 2).unwrap(), RatInterval::from_ints(0, 1).unwrap()]);
        let g = Arc::new(Grid::cover(&base, &rat(1)));
        let c = BoxComplex::from_cells(g, vec![0, 1]);
        assert_eq!(c.boundary().len(), 6);
    }

    #[test]
    fn l_shape_has_eight_faces() {
        let base = RatBox::new(vec![RatInterval::from_ints(0, 2).unwrap(); 2]);
        let g = Arc::new(Grid::cover(&base, &rat(1)));
        let c = BoxComplex::from_cells(g, vec![0, 1, 2]);
        let b = c.boundary();
        assert_eq!(b.len(), 8);
        assert!(signed_face_volume(&b, 2).iter().all(|v| v.is_zero()));
    }

    #[test]
    fn merge_examples() {
        let base = RatBox::new(vec![RatInterval::from_ints(0, 3).unwrap()]);
        let g = Arc::new(Grid::cover(&base, &rat(1)));
        let m = merge_cells(&g, &[]);
        assert_eq!(m.complexes.len(), 3);
        let m = merge_cells(&g, &[FaceId { axis: 0, index: vec![1] }]);
        assert_eq!(m.complexes.len(), 2);
        assert_eq!(m.complexes[0].cells(), &[0, 1]);
        let m = merge_cells(
            &g,
            &[FaceId { axis: 0, index: vec![1] }, FaceId { axis: 0, index: vec![0] }],
        );
        assert_eq!(m.removed, vec![0, 1]);
        assert_eq!(m.complexes.len(), 1);
        assert_eq!(m.complexes[0].cells(), &[2]);
    }

    #[test]
    fn face_subdivision() {
        let g = Grid::cover(&unit(2), &rat(1));
        let f = g.face(&FaceId { axis: 0, index: vec![1, 0] });
        assert_eq!(subdivide_face(&f, &ratio(1, 2)).len(), 2);
        assert_eq!(subdivide_face(&f, &ratio(1, 3)).len(), 3);
        let same = subdivide_face(&f, &rat(1));
        assert_eq!(same, vec![f.clone()]);
        assert!(subdivide_face(&f, &ratio(1, 3)).iter().all(|p| p.axis == 0 && p.value == rat(1)));
    }
}
