//! Axis-aligned blocks and the dataset partitions they induce.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Row-major collection of `n` points in `d` dimensions.
///
/// Point `i` keeps its index for the lifetime of the dataset; every partition refers to
/// points by that index.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    coords: Vec<f64>,
    n: usize,
    d: usize,
}

impl Dataset {
    /// Builds a dataset from a flat row-major buffer.
    pub fn from_flat(coords: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 || coords.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if coords.len() % d != 0 {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: coords.len() % d,
            });
        }
        if let Some(pos) = coords.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index: pos / d });
        }
        let n = coords.len() / d;
        Ok(Self { coords, n, d })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().ok_or(Error::EmptyDataset)?.as_ref().len();
        let mut coords = Vec::with_capacity(rows.len() * d);
        for row in rows {
            let row = row.as_ref();
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
            coords.extend_from_slice(row);
        }
        Self::from_flat(coords, d)
    }

    /// One-dimensional dataset, handy for small examples.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        Self::from_flat(values.to_vec(), 1)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.d)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    /// Subset of the dataset in the given index order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut coords = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        Self::from_flat(coords, self.d)
    }
}

/// Closed axis-aligned hyperrectangle `[lower, upper]` with its diagonal length cached.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    lower: Vec<f64>,
    upper: Vec<f64>,
    diagonal: f64,
}

impl Block {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.iter().chain(&upper).any(|x| !x.is_finite())
            || lower.iter().zip(&upper).any(|(lo, hi)| lo > hi)
        {
            return Err(Error::InvalidConfig(
                "block bounds must be finite with lower <= upper".into(),
            ));
        }
        Ok(Self::new_unchecked(lower, upper))
    }

    fn new_unchecked(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        let diagonal = lower
            .iter()
            .zip(&upper)
            .map(|(lo, hi)| (hi - lo) * (hi - lo))
            .sum::<f64>()
            .sqrt();
        Self {
            lower,
            upper,
            diagonal,
        }
    }

    /// Smallest block containing every point yielded by `points`.
    fn enclosing<'a>(d: usize, mut points: impl Iterator<Item = &'a [f64]>) -> Option<Self> {
        let first = points.next()?;
        let mut lower = first.to_vec();
        let mut upper = first.to_vec();
        for p in points {
            debug_assert_eq!(p.len(), d);
            for j in 0..d {
                if p[j] < lower[j] {
                    lower[j] = p[j];
                } else if p[j] > upper[j] {
                    upper[j] = p[j];
                }
            }
        }
        Some(Self::new_unchecked(lower, upper))
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn diagonal(&self) -> f64 {
        self.diagonal
    }

    pub fn is_degenerate(&self) -> bool {
        self.diagonal == 0.0
    }

    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| hi - lo)
            .product()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, hi))| lo <= x && x <= hi)
    }

    pub fn contains_block(&self, other: &Block) -> bool {
        self.contains(&other.lower) && self.contains(&other.upper)
    }

    /// Axis of the longest side; ties go to the lowest axis.
    pub fn longest_axis(&self) -> usize {
        let mut best = 0;
        let mut best_len = f64::NEG_INFINITY;
        for (j, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if hi - lo > best_len {
                best = j;
                best_len = hi - lo;
            }
        }
        best
    }

    /// Bisects the block at the midpoint of `axis`.
    pub fn split_at_axis(&self, axis: usize) -> Result<(Block, Block)> {
        let (lo, hi) = (self.lower[axis], self.upper[axis]);
        let mid = lo + (hi - lo) / 2.0;
        if !(lo < mid && mid < hi) {
            return Err(Error::UnsplittableBlock);
        }
        let mut left_upper = self.upper.clone();
        left_upper[axis] = mid;
        let mut right_lower = self.lower.clone();
        right_lower[axis] = mid;
        Ok((
            Self::new_unchecked(self.lower.clone(), left_upper),
            Self::new_unchecked(right_lower, self.upper.clone()),
        ))
    }

    /// Lexicographic order of lower corners, used to settle face ties.
    fn cmp_lower(&self, other: &Block) -> Ordering {
        for (a, b) in self.lower.iter().zip(&other.lower) {
            match a.total_cmp(b) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        Ordering::Equal
    }
}

/// Componentwise min/max envelope of the dataset.
pub fn bounding_box(dataset: &Dataset) -> Result<Block> {
    Block::enclosing(dataset.d(), dataset.points()).ok_or(Error::EmptyDataset)
}

/// Bisects the block's longest side at its midpoint (ties broken by lowest axis).
pub fn split_block(block: &Block) -> Result<(Block, Block)> {
    if block.is_degenerate() {
        return Err(Error::UnsplittableBlock);
    }
    block.split_at_axis(block.longest_axis())
}

/// The points of `D` falling in one block, summarised by their center of mass and count.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSubset {
    /// Geometric block the cell was carved from.
    pub block: Block,
    /// Dataset indices, ascending.
    pub members: Vec<usize>,
    pub representative: Vec<f64>,
    /// Smallest bounding box of the members.
    pub fit_box: Block,
}

impl CellSubset {
    /// Builds a cell; `members` must be non-empty.
    pub fn from_members(dataset: &Dataset, block: Block, members: Vec<usize>) -> Self {
        debug_assert!(!members.is_empty());
        let d = dataset.d();
        let fit_box = Block::enclosing(d, members.iter().map(|&i| dataset.point(i)))
            .expect("cell has members");
        let mut representative = vec![0.0; d];
        for &i in &members {
            for (acc, x) in representative.iter_mut().zip(dataset.point(i)) {
                *acc += x;
            }
        }
        let w = members.len() as f64;
        for (j, r) in representative.iter_mut().enumerate() {
            // The exact mean lies in the fit box; rounding may push it a hair outside.
            *r = (*r / w).clamp(fit_box.lower[j], fit_box.upper[j]);
        }
        Self {
            block,
            members,
            representative,
            fit_box,
        }
    }

    pub fn weight(&self) -> usize {
        self.members.len()
    }

    /// Diagonal used by the misassignment function and error bounds.
    pub fn diagonal(&self) -> f64 {
        self.fit_box.diagonal()
    }

    pub fn is_degenerate(&self) -> bool {
        self.fit_box.is_degenerate()
    }

    /// Splits the cell's fit box at the midpoint of its longest side and re-partitions
    /// the members. Points on the cut go to the lower half.
    pub fn split(&self, dataset: &Dataset) -> Result<(CellSubset, CellSubset)> {
        if self.is_degenerate() {
            return Err(Error::UnsplittableBlock);
        }
        let axis = self.fit_box.longest_axis();
        let (left, right) = self.fit_box.split_at_axis(axis)?;
        let mid = left.upper[axis];
        let (lo, hi): (Vec<usize>, Vec<usize>) = self
            .members
            .iter()
            .partition(|&&i| dataset.point(i)[axis] <= mid);
        debug_assert!(!lo.is_empty() && !hi.is_empty());
        Ok((
            CellSubset::from_members(dataset, left, lo),
            CellSubset::from_members(dataset, right, hi),
        ))
    }
}

/// A partition of the dataset into non-empty cells.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionState {
    pub cells: Vec<CellSubset>,
    /// Number of refinement rounds applied so far.
    pub generation: usize,
}

impl PartitionState {
    /// The single-cell partition covering the whole dataset.
    pub fn root(dataset: &Dataset) -> Self {
        let bbox = bounding_box(dataset).expect("datasets are non-empty");
        let cell = CellSubset::from_members(dataset, bbox, (0..dataset.n()).collect());
        Self {
            cells: vec![cell],
            generation: 0,
        }
    }

    /// One cell per point.
    pub fn singletons(dataset: &Dataset) -> Self {
        let cells = (0..dataset.n())
            .map(|i| {
                let p = dataset.point(i).to_vec();
                let block = Block::new_unchecked(p.clone(), p);
                CellSubset::from_members(dataset, block, vec![i])
            })
            .collect();
        Self {
            cells,
            generation: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn total_weight(&self) -> usize {
        self.cells.iter().map(CellSubset::weight).sum()
    }

    /// Map from dataset index to the index of the cell holding it.
    pub fn cell_of(&self, n: usize) -> Vec<usize> {
        let mut owner = vec![usize::MAX; n];
        for (c, cell) in self.cells.iter().enumerate() {
            for &i in &cell.members {
                owner[i] = c;
            }
        }
        owner
    }

    /// Replaces every selected cell by its two halves. Degenerate cells are left alone.
    /// Returns the number of cells actually split.
    pub fn split_cells(&mut self, dataset: &Dataset, selected: &[usize]) -> usize {
        let mut marked = vec![false; self.cells.len()];
        for &c in selected {
            marked[c] = true;
        }
        let mut out = Vec::with_capacity(self.cells.len() + selected.len());
        let mut splits = 0;
        for (cell, split) in std::mem::take(&mut self.cells).into_iter().zip(marked) {
            if split {
                if let Ok((a, b)) = cell.split(dataset) {
                    out.push(a);
                    out.push(b);
                    splits += 1;
                    continue;
                }
            }
            out.push(cell);
        }
        self.cells = out;
        self.generation += 1;
        splits
    }
}

/// Builds the dataset partition induced by `blocks`.
///
/// `candidates[b]` lists the dataset indices that may fall in `blocks[b]`. A point lying on
/// a face shared by several candidate blocks goes to the block whose lower corner is
/// lexicographically smallest. Every dataset index must land in some block; empty blocks
/// are dropped.
pub fn induce_cells(
    dataset: &Dataset,
    blocks: &[Block],
    candidates: &[Vec<usize>],
) -> Result<PartitionState> {
    if blocks.len() != candidates.len() {
        return Err(Error::InvalidConfig(format!(
            "{} blocks but {} candidate lists",
            blocks.len(),
            candidates.len()
        )));
    }
    let mut owner: Vec<Option<usize>> = vec![None; dataset.n()];
    for (b, (block, idx)) in blocks.iter().zip(candidates).enumerate() {
        if block.dim() != dataset.d() {
            return Err(Error::DimensionMismatch {
                expected: dataset.d(),
                got: block.dim(),
            });
        }
        for &i in idx {
            if i >= dataset.n() || !block.contains(dataset.point(i)) {
                continue;
            }
            owner[i] = match owner[i] {
                Some(prev) if blocks[prev].cmp_lower(block) != Ordering::Greater => Some(prev),
                _ => Some(b),
            };
        }
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); blocks.len()];
    for (i, o) in owner.into_iter().enumerate() {
        match o {
            Some(b) => members[b].push(i),
            None => return Err(Error::OrphanPoint { index: i }),
        }
    }
    let cells = blocks
        .iter()
        .zip(members)
        .filter(|(_, m)| !m.is_empty())
        .map(|(block, m)| CellSubset::from_members(dataset, block.clone(), m))
        .collect();
    Ok(PartitionState {
        cells,
        generation: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use rand::Rng;

    fn block(lo: &[f64], hi: &[f64]) -> Block {
        Block::new(lo.to_vec(), hi.to_vec()).unwrap()
    }

    #[test]
    fn bounding_box_two_points() {
        let ds = Dataset::from_rows(&[[0.0, 0.0], [2.0, 1.0]]).unwrap();
        let b = bounding_box(&ds).unwrap();
        assert_eq!(b.lower(), &[0.0, 0.0]);
        assert_eq!(b.upper(), &[2.0, 1.0]);
        assert!((b.diagonal() - 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn bounding_box_single_point_is_degenerate() {
        let ds = Dataset::from_rows(&[[5.0, 5.0]]).unwrap();
        let b = bounding_box(&ds).unwrap();
        assert_eq!(b.lower(), b.upper());
        assert_eq!(b.diagonal(), 0.0);
    }

    #[test]
    fn bounding_box_contains_random_points() {
        let mut rng = RngStream::new(1, 0);
        let rows: Vec<[f64; 2]> = (0..100)
            .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        let ds = Dataset::from_rows(&rows).unwrap();
        let b = bounding_box(&ds).unwrap();
        assert!(block(&[-1.0, -1.0], &[1.0, 1.0]).contains_block(&b));
        assert!(ds.points().all(|p| b.contains(p)));
    }

    #[test]
    fn empty_dataset_rejected() {
        assert_eq!(Dataset::from_flat(vec![], 2), Err(Error::EmptyDataset));
    }

    #[test]
    fn split_longest_side() {
        let (a, b) = split_block(&block(&[0.0, 0.0], &[2.0, 1.0])).unwrap();
        assert_eq!((a.lower(), a.upper()), (&[0.0, 0.0][..], &[1.0, 1.0][..]));
        assert_eq!((b.lower(), b.upper()), (&[1.0, 0.0][..], &[2.0, 1.0][..]));
    }

    #[test]
    fn split_tie_uses_axis_zero() {
        let (a, b) = split_block(&block(&[0.0, 0.0], &[1.0, 1.0])).unwrap();
        assert_eq!(a.upper(), &[0.5, 1.0]);
        assert_eq!(b.lower(), &[0.5, 0.0]);
    }

    #[test]
    fn split_degenerate_fails() {
        assert_eq!(
            split_block(&block(&[1.0, 1.0], &[1.0, 1.0])),
            Err(Error::UnsplittableBlock)
        );
    }

    #[test]
    fn unit_cube_three_splits_gives_eight_subcubes() {
        let mut leaves = vec![block(&[0.0; 3], &[1.0; 3])];
        for _ in 0..3 {
            leaves = leaves
                .iter()
                .flat_map(|b| {
                    let (l, r) = split_block(b).unwrap();
                    [l, r]
                })
                .collect();
        }
        assert_eq!(leaves.len(), 8);
        for leaf in &leaves {
            for j in 0..3 {
                assert_eq!(leaf.upper()[j] - leaf.lower()[j], 0.5);
            }
        }
        // distinct corners, so the leaves tile the cube
        let mut corners: Vec<Vec<u8>> = leaves
            .iter()
            .map(|b| b.lower().iter().map(|x| (x * 2.0) as u8).collect())
            .collect();
        corners.sort();
        corners.dedup();
        assert_eq!(corners.len(), 8);
    }

    #[test]
    fn induce_one_dimensional() {
        let ds = Dataset::from_values(&[0.0, 1.0, 9.0, 10.0]).unwrap();
        let blocks = [block(&[0.0], &[5.0]), block(&[5.0], &[10.0])];
        let all: Vec<usize> = (0..4).collect();
        let state = induce_cells(&ds, &blocks, &[all.clone(), all]).unwrap();
        assert_eq!(state.len(), 2);
        assert_eq!(state.cells[0].weight(), 2);
        assert_eq!(state.cells[1].weight(), 2);
        assert_eq!(state.cells[0].representative, vec![0.5]);
        assert_eq!(state.cells[1].representative, vec![9.5]);
    }

    #[test]
    fn induce_single_block_gives_global_mean() {
        let ds = Dataset::from_rows(&[[0.0, 0.0], [2.0, 4.0], [4.0, 2.0]]).unwrap();
        let b = bounding_box(&ds).unwrap();
        let state = induce_cells(&ds, &[b], &[vec![0, 1, 2]]).unwrap();
        assert_eq!(state.len(), 1);
        assert_eq!(state.cells[0].representative, vec![2.0, 2.0]);
    }

    #[test]
    fn induce_face_tie_goes_to_lower_corner() {
        let ds = Dataset::from_values(&[5.0]).unwrap();
        let blocks = [block(&[5.0], &[10.0]), block(&[0.0], &[5.0])];
        let state = induce_cells(&ds, &blocks, &[vec![0], vec![0]]).unwrap();
        assert_eq!(state.cells[0].block.lower(), &[0.0]);
    }

    #[test]
    fn induce_orphan() {
        let ds = Dataset::from_values(&[0.0, 20.0]).unwrap();
        let blocks = [block(&[0.0], &[5.0])];
        assert_eq!(
            induce_cells(&ds, &blocks, &[vec![0, 1]]),
            Err(Error::OrphanPoint { index: 1 })
        );
    }

    #[test]
    fn induce_drops_empty_blocks() {
        let ds = Dataset::from_values(&[0.0, 1.0]).unwrap();
        let blocks = [block(&[0.0], &[1.0]), block(&[5.0], &[6.0])];
        let state = induce_cells(&ds, &blocks, &[vec![0, 1], vec![]]).unwrap();
        assert_eq!(state.len(), 1);
    }

    #[test]
    fn cell_split_conserves_weight() {
        let mut rng = RngStream::new(11, 0);
        for _ in 0..50 {
            let rows: Vec<[f64; 3]> = (0..40)
                .map(|_| [rng.random(), rng.random(), rng.random()])
                .collect();
            let ds = Dataset::from_rows(&rows).unwrap();
            let root = PartitionState::root(&ds);
            let (a, b) = root.cells[0].split(&ds).unwrap();
            assert_eq!(a.weight() + b.weight(), 40);
            assert!(root.cells[0].fit_box.contains_block(&a.block));
            assert!(a.block.contains_block(&a.fit_box));
            assert!(b.block.contains_block(&b.fit_box));
        }
    }

    #[test]
    fn split_cells_skips_degenerate() {
        let ds = Dataset::from_values(&[1.0, 1.0, 2.0]).unwrap();
        let mut state = PartitionState::root(&ds);
        assert_eq!(state.split_cells(&ds, &[0]), 1);
        assert_eq!(state.len(), 2);
        assert!(state.cells[0].is_degenerate());
        assert_eq!(state.split_cells(&ds, &[0, 1]), 0);
        assert_eq!(state.len(), 2);
    }
}
