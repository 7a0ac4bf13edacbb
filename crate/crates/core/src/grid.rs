//! Grid topologies and grid-space geometry.
//!
//! Neurons are addressed by `(row, col)` and stored row-major. Hexagonal grids
//! use the "odd-r" layout: odd rows are shifted half a cell to the right and
//! rows are `sqrt(3)/2` apart, so every interior cell has six neighbors at
//! planar distance 1.
//!
//! Two distances live here. [`GridTopology::grid_distance`] is the continuous
//! planar distance fed to the neighborhood kernels. [`GridTopology::ring_distance`]
//! is the discrete shell index used for adjacency (topographic error, U-matrix,
//! sample collection).

use std::fmt;
use std::str::FromStr;

use crate::error::{Result, SomError};

const HEX_ROW_PITCH: f64 = 0.866_025_403_784_438_6; // sqrt(3) / 2

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TopologyKind {
    Rectangular,
    Hexagonal,
}

impl TopologyKind {
    pub fn name(self) -> &'static str {
        match self {
            TopologyKind::Rectangular => "rectangular",
            TopologyKind::Hexagonal => "hexagonal",
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TopologyKind {
    type Err = SomError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rect" | "rectangular" => Ok(TopologyKind::Rectangular),
            "hex" | "hexagonal" => Ok(TopologyKind::Hexagonal),
            other => Err(SomError::Parameter(format!("unknown topology '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NeuronCoord {
    pub row: usize,
    pub col: usize,
}

impl NeuronCoord {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

impl fmt::Display for NeuronCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarPosition {
    pub x: f64,
    pub y: f64,
}

impl PlanarPosition {
    pub fn distance(self, other: PlanarPosition) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridTopology {
    kind: TopologyKind,
    rows: usize,
    cols: usize,
}

impl GridTopology {
    pub fn new(kind: TopologyKind, rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(SomError::Parameter(format!(
                "grid must have at least one row and column, got {rows}x{cols}"
            )));
        }
        Ok(Self { kind, rows, cols })
    }

    pub fn rectangular(rows: usize, cols: usize) -> Result<Self> {
        Self::new(TopologyKind::Rectangular, rows, cols)
    }

    pub fn hexagonal(rows: usize, cols: usize) -> Result<Self> {
        Self::new(TopologyKind::Hexagonal, rows, cols)
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of neurons, `rows * cols`.
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, c: NeuronCoord) -> bool {
        c.row < self.rows && c.col < self.cols
    }

    fn check(&self, c: NeuronCoord) -> Result<()> {
        if self.contains(c) {
            Ok(())
        } else {
            Err(SomError::OutOfBounds {
                row: c.row,
                col: c.col,
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    /// Row-major flat index.
    pub fn index(&self, c: NeuronCoord) -> Result<usize> {
        self.check(c)?;
        Ok(c.row * self.cols + c.col)
    }

    pub fn coord(&self, index: usize) -> Result<NeuronCoord> {
        if index >= self.len() {
            return Err(SomError::IndexOutOfRange {
                index,
                limit: self.len(),
            });
        }
        Ok(self.coord_unchecked(index))
    }

    pub(crate) fn coord_unchecked(&self, index: usize) -> NeuronCoord {
        NeuronCoord::new(index / self.cols, index % self.cols)
    }

    /// All coordinates in row-major order.
    pub fn coords(&self) -> impl Iterator<Item = NeuronCoord> + '_ {
        (0..self.len()).map(|i| self.coord_unchecked(i))
    }

    pub fn planar_position(&self, c: NeuronCoord) -> Result<PlanarPosition> {
        self.check(c)?;
        Ok(self.planar_unchecked(c))
    }

    pub(crate) fn planar_unchecked(&self, c: NeuronCoord) -> PlanarPosition {
        match self.kind {
            TopologyKind::Rectangular => PlanarPosition {
                x: c.col as f64,
                y: c.row as f64,
            },
            TopologyKind::Hexagonal => PlanarPosition {
                x: c.col as f64 + if c.row % 2 == 1 { 0.5 } else { 0.0 },
                y: c.row as f64 * HEX_ROW_PITCH,
            },
        }
    }

    pub fn grid_distance(&self, a: NeuronCoord, b: NeuronCoord) -> Result<f64> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.grid_distance_unchecked(a, b))
    }

    pub(crate) fn grid_distance_unchecked(&self, a: NeuronCoord, b: NeuronCoord) -> f64 {
        self.planar_unchecked(a).distance(self.planar_unchecked(b))
    }

    pub fn ring_distance(&self, a: NeuronCoord, b: NeuronCoord) -> Result<usize> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.ring_distance_unchecked(a, b))
    }

    pub(crate) fn ring_distance_unchecked(&self, a: NeuronCoord, b: NeuronCoord) -> usize {
        match self.kind {
            TopologyKind::Rectangular => a.row.abs_diff(b.row).max(a.col.abs_diff(b.col)),
            TopologyKind::Hexagonal => {
                let (qa, ra) = axial(a);
                let (qb, rb) = axial(b);
                let dq = qa - qb;
                let dr = ra - rb;
                ((dq.abs() + (dq + dr).abs() + dr.abs()) / 2) as usize
            }
        }
    }

    /// In-bounds cells whose ring distance to `center` is exactly `order`,
    /// in row-major order. The ring may be empty near the grid border.
    pub fn neighbors_at_order(&self, center: NeuronCoord, order: usize) -> Result<Vec<NeuronCoord>> {
        self.check(center)?;
        if order == 0 {
            return Err(SomError::Parameter("neighbor order must be >= 1".into()));
        }
        Ok(self.ring_unchecked(center, order))
    }

    pub(crate) fn ring_unchecked(&self, center: NeuronCoord, order: usize) -> Vec<NeuronCoord> {
        // Both metrics bound |d_row| and |d_col| by the order.
        let r0 = center.row.saturating_sub(order);
        let r1 = (center.row + order).min(self.rows - 1);
        let c0 = center.col.saturating_sub(order);
        let c1 = (center.col + order).min(self.cols - 1);
        let mut out = Vec::new();
        for row in r0..=r1 {
            for col in c0..=c1 {
                let c = NeuronCoord::new(row, col);
                if self.ring_distance_unchecked(center, c) == order {
                    out.push(c);
                }
            }
        }
        out
    }

    /// Largest ring distance from `center` to any cell of the grid.
    pub fn max_order_from(&self, center: NeuronCoord) -> usize {
        self.coords()
            .map(|c| self.ring_distance_unchecked(center, c))
            .max()
            .unwrap_or(0)
    }

    /// Dense `len x len` matrix of planar grid distances, row-major.
    pub fn distance_matrix(&self) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            let a = self.coord_unchecked(i);
            for j in 0..n {
                out[i * n + j] = self.grid_distance_unchecked(a, self.coord_unchecked(j));
            }
        }
        out
    }
}

fn axial(c: NeuronCoord) -> (i64, i64) {
    let row = c.row as i64;
    (c.col as i64 - row.div_euclid(2), row)
}

#[cfg(test)]
mod tests {
    use std::collections::{HashSet, VecDeque};

    use super::*;

    fn nc(row: usize, col: usize) -> NeuronCoord {
        NeuronCoord::new(row, col)
    }

    /// Six hex neighbors derived from the planar embedding: every cell at
    /// planar distance 1.
    fn hex_bfs(topo: &GridTopology, from: NeuronCoord, to: NeuronCoord) -> usize {
        let mut seen = HashSet::from([from]);
        let mut queue = VecDeque::from([(from, 0)]);
        while let Some((c, d)) = queue.pop_front() {
            if c == to {
                return d;
            }
            let p = topo.planar_unchecked(c);
            for n in topo.coords() {
                let q = topo.planar_unchecked(n);
                if (p.distance(q) - 1.0).abs() < 1e-9 && seen.insert(n) {
                    queue.push_back((n, d + 1));
                }
            }
        }
        unreachable!("grid is connected")
    }

    #[test]
    fn planar_positions() {
        let rect = GridTopology::rectangular(5, 6).unwrap();
        assert_eq!(rect.planar_position(nc(3, 4)).unwrap(), PlanarPosition { x: 4.0, y: 3.0 });
        let hex = GridTopology::hexagonal(5, 6).unwrap();
        assert_eq!(hex.planar_position(nc(0, 0)).unwrap(), PlanarPosition { x: 0.0, y: 0.0 });
        let p = hex.planar_position(nc(1, 0)).unwrap();
        assert!((p.x - 0.5).abs() < 1e-12);
        assert!((p.y - 0.866_025_4).abs() < 1e-7);
        assert!((p.y - 3f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn out_of_bounds_is_rejected() {
        let rect = GridTopology::rectangular(2, 2).unwrap();
        assert!(matches!(
            rect.planar_position(nc(2, 0)),
            Err(SomError::OutOfBounds { .. })
        ));
        assert!(rect.grid_distance(nc(0, 0), nc(0, 5)).is_err());
        assert!(rect.ring_distance(nc(9, 0), nc(0, 0)).is_err());
        assert!(GridTopology::rectangular(0, 3).is_err());
    }

    #[test]
    fn grid_distances() {
        let rect = GridTopology::rectangular(7, 7).unwrap();
        assert_eq!(rect.grid_distance(nc(0, 0), nc(3, 4)).unwrap(), 5.0);
        assert_eq!(rect.grid_distance(nc(2, 2), nc(2, 2)).unwrap(), 0.0);
        let hex = GridTopology::hexagonal(7, 7).unwrap();
        assert_eq!(hex.grid_distance(nc(4, 1), nc(4, 1)).unwrap(), 0.0);
        // (1,0) sits half a cell right of (0,0): unit distance.
        assert!((hex.grid_distance(nc(0, 0), nc(1, 0)).unwrap() - 1.0).abs() < 1e-12);
        // (1,1) is at (1.5, sqrt(3)/2): second ring, distance sqrt(3).
        let embed = |x: f64, y: f64, x2: f64, y2: f64| ((x - x2).powi(2) + (y - y2).powi(2)).sqrt();
        let oracle = embed(0.0, 0.0, 1.5, 3f64.sqrt() / 2.0);
        assert!((hex.grid_distance(nc(0, 0), nc(1, 1)).unwrap() - oracle).abs() < 1e-12);
        assert!((oracle - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn ring_distances() {
        let rect = GridTopology::rectangular(8, 8).unwrap();
        assert_eq!(rect.ring_distance(nc(4, 4), nc(6, 7)).unwrap(), 3);
        assert_eq!(rect.ring_distance(nc(1, 1), nc(1, 1)).unwrap(), 0);
        let hex = GridTopology::hexagonal(8, 8).unwrap();
        assert_eq!(hex.ring_distance(nc(0, 0), nc(2, 1)).unwrap(), 2);
        assert_eq!(hex.ring_distance(nc(3, 3), nc(3, 3)).unwrap(), 0);
    }

    #[test]
    fn hex_ring_distance_matches_bfs() {
        let hex = GridTopology::hexagonal(6, 7).unwrap();
        for a in hex.coords().step_by(5) {
            for b in hex.coords() {
                assert_eq!(hex.ring_distance(a, b).unwrap(), hex_bfs(&hex, a, b), "{a} -> {b}");
            }
        }
    }

    #[test]
    fn ring_sizes() {
        let rect = GridTopology::rectangular(7, 7).unwrap();
        assert_eq!(rect.neighbors_at_order(nc(3, 3), 1).unwrap().len(), 8);
        assert_eq!(
            rect.neighbors_at_order(nc(0, 0), 1).unwrap(),
            vec![nc(0, 1), nc(1, 0), nc(1, 1)]
        );
        let hex = GridTopology::hexagonal(7, 7).unwrap();
        assert_eq!(hex.neighbors_at_order(nc(3, 3), 1).unwrap().len(), 6);
        assert_eq!(hex.neighbors_at_order(nc(2, 3), 1).unwrap().len(), 6);
        assert!(hex.neighbors_at_order(nc(2, 3), 0).is_err());

        let big = GridTopology::hexagonal(41, 41).unwrap();
        for order in 1..=8 {
            for center in [nc(20, 20), nc(19, 21)] {
                assert_eq!(big.neighbors_at_order(center, order).unwrap().len(), 6 * order);
            }
        }
    }

    #[test]
    fn neighbors_exclude_center_and_are_row_major() {
        for topo in [GridTopology::rectangular(6, 5).unwrap(), GridTopology::hexagonal(6, 5).unwrap()] {
            for c in topo.coords() {
                for order in 1..4 {
                    let ring = topo.neighbors_at_order(c, order).unwrap();
                    assert!(!ring.contains(&c));
                    let mut sorted = ring.clone();
                    sorted.sort();
                    assert_eq!(ring, sorted);
                }
            }
        }
    }

    #[test]
    fn flat_index_round_trip() {
        let topo = GridTopology::hexagonal(4, 3).unwrap();
        for i in 0..topo.len() {
            assert_eq!(topo.index(topo.coord(i).unwrap()).unwrap(), i);
        }
        assert!(topo.coord(12).is_err());
    }

    mod props {
        use proptest::prelude::*;

        use super::*;

        fn topo_strategy() -> impl Strategy<Value = GridTopology> {
            (any::<bool>(), 1usize..12, 1usize..12).prop_map(|(hex, r, c)| {
                let kind = if hex { TopologyKind::Hexagonal } else { TopologyKind::Rectangular };
                GridTopology::new(kind, r, c).unwrap()
            })
        }

        proptest! {
            #[test]
            fn ring_distance_is_a_metric(topo in topo_strategy(), seeds in prop::array::uniform3(0usize..10_000)) {
                let [a, b, c] = seeds.map(|s| topo.coord(s % topo.len()).unwrap());
                let d = |x, y| topo.ring_distance(x, y).unwrap();
                prop_assert_eq!(d(a, b), d(b, a));
                prop_assert_eq!(d(a, b) == 0, a == b);
                prop_assert!(d(a, c) <= d(a, b) + d(b, c));
            }

            #[test]
            fn grid_distance_symmetric(topo in topo_strategy(), s in prop::array::uniform2(0usize..10_000)) {
                let [a, b] = s.map(|s| topo.coord(s % topo.len()).unwrap());
                let ab = topo.grid_distance(a, b).unwrap();
                prop_assert_eq!(ab, topo.grid_distance(b, a).unwrap());
                prop_assert_eq!(ab == 0.0, a == b);
            }

            #[test]
            fn rings_partition_the_grid(topo in topo_strategy(), s in 0usize..10_000) {
                let center = topo.coord(s % topo.len()).unwrap();
                let mut seen = HashSet::from([center]);
                for order in 1..=topo.max_order_from(center) {
                    for c in topo.neighbors_at_order(center, order).unwrap() {
                        prop_assert!(seen.insert(c), "{} appears in two rings", c);
                    }
                }
                prop_assert_eq!(seen.len(), topo.len());
            }
        }
    }
}
