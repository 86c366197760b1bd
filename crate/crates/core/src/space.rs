//! Finite doubling metric spaces, ball coverings with separated colorings,
//! and the Lipschitz cutoff `Δ_P(x) = max{0, 1 − d(x,P)/(2L)}`.
//!
//! Points are always the indices `0..len()`. Lattice spaces compute distances
//! in exact integer arithmetic and only convert at the boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::{lp_norm, Exponent};

/// Separation factor used throughout the localization machinery.
pub const DEFAULT_ALPHA: f64 = 6.0;

/// How a space is described; this is also the `"space"` object of the
/// matrix interchange format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceKind {
    /// `{0, …, n−1} ⊂ ℤ` with `|x − y|`.
    ZInterval { n: usize },
    /// A box in `ℤ^d` with the sup-metric; points are enumerated row-major.
    ZdBox { dims: Vec<usize> },
    /// The ball of the given radius around the root of the regular tree of
    /// the given degree, with the graph metric. Points are in BFS order.
    Tree { degree: usize, radius: usize },
    /// An explicit symmetric distance table.
    Explicit { distances: Vec<Vec<f64>> },
}

/// Measured volume growth: `V(x,R) ≤ K·R^d` and `V(x,2r) ≤ D·V(x,r)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthStats {
    pub growth_d: f64,
    pub growth_k: f64,
    pub doubling_d: f64,
    /// Number of `(x, r)` pairs the doubling constant was measured on.
    pub doubling_samples: usize,
}

#[derive(Clone, Debug)]
struct TreeLayout {
    parent: Vec<usize>,
    depth: Vec<usize>,
}

/// A finite metric space with measured growth statistics.
#[derive(Clone, Debug)]
pub struct MetricSpace {
    kind: SpaceKind,
    len: usize,
    tree: Option<TreeLayout>,
    growth: GrowthStats,
}

impl PartialEq for MetricSpace {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl MetricSpace {
    /// Builds and validates a space, then measures its growth statistics
    /// exhaustively over all points and dyadic radii.
    pub fn new(kind: SpaceKind) -> Result<Self> {
        let (len, tree) = match &kind {
            SpaceKind::ZInterval { n } => {
                if *n == 0 {
                    return Err(Error::Parameter("z_interval needs n >= 1".into()));
                }
                (*n, None)
            }
            SpaceKind::ZdBox { dims } => {
                if dims.is_empty() || dims.iter().any(|&d| d == 0) {
                    return Err(Error::Parameter("zd_box needs non-empty dims, all >= 1".into()));
                }
                let len = dims
                    .iter()
                    .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                    .ok_or_else(|| Error::Parameter("zd_box too large".into()))?;
                (len, None)
            }
            SpaceKind::Tree { degree, radius } => {
                if *degree < 2 {
                    return Err(Error::Parameter("tree needs degree >= 2".into()));
                }
                let layout = build_tree(*degree, *radius)?;
                (layout.parent.len(), Some(layout))
            }
            SpaceKind::Explicit { distances } => {
                validate_table(distances)?;
                (distances.len(), None)
            }
        };
        let mut space = MetricSpace {
            kind,
            len,
            tree,
            growth: GrowthStats { growth_d: 0.0, growth_k: 1.0, doubling_d: 1.0, doubling_samples: 0 },
        };
        space.growth = space.measure_growth();
        Ok(space)
    }

    pub fn z_interval(n: usize) -> Result<Self> {
        Self::new(SpaceKind::ZInterval { n })
    }

    pub fn zd_box(dims: &[usize]) -> Result<Self> {
        Self::new(SpaceKind::ZdBox { dims: dims.to_vec() })
    }

    pub fn tree(degree: usize, radius: usize) -> Result<Self> {
        Self::new(SpaceKind::Tree { degree, radius })
    }

    pub fn explicit(distances: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(SpaceKind::Explicit { distances })
    }

    pub fn kind(&self) -> &SpaceKind {
        &self.kind
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn growth(&self) -> GrowthStats {
        self.growth
    }

    pub fn is_z_interval(&self) -> bool {
        matches!(self.kind, SpaceKind::ZInterval { .. })
    }

    /// Lattice coordinates of a point of a `zd_box` (or `z_interval`).
    pub fn coords(&self, x: usize) -> Option<Vec<i64>> {
        match &self.kind {
            SpaceKind::ZInterval { .. } => Some(vec![x as i64]),
            SpaceKind::ZdBox { dims } => {
                let mut c = vec![0i64; dims.len()];
                let mut rest = x;
                for (i, &d) in dims.iter().enumerate().rev() {
                    c[i] = (rest % d) as i64;
                    rest /= d;
                }
                Some(c)
            }
            _ => None,
        }
    }

    fn box_index(dims: &[usize], c: &[i64]) -> usize {
        c.iter().zip(dims).fold(0usize, |acc, (&ci, &d)| acc * d + ci as usize)
    }

    /// Integer distance for lattices and trees.
    fn int_dist(&self, a: usize, b: usize) -> Option<u64> {
        match &self.kind {
            SpaceKind::ZInterval { .. } => Some(a.abs_diff(b) as u64),
            SpaceKind::ZdBox { dims } => {
                let (mut ra, mut rb, mut best) = (a, b, 0u64);
                for &d in dims.iter().rev() {
                    best = best.max(((ra % d).abs_diff(rb % d)) as u64);
                    ra /= d;
                    rb /= d;
                }
                Some(best)
            }
            SpaceKind::Tree { .. } => {
                let t = self.tree.as_ref().expect("tree layout");
                let (mut a, mut b, mut steps) = (a, b, 0u64);
                while a != b {
                    if t.depth[a] >= t.depth[b] {
                        a = t.parent[a];
                    } else {
                        b = t.parent[b];
                    }
                    steps += 1;
                }
                Some(steps)
            }
            SpaceKind::Explicit { .. } => None,
        }
    }

    /// `d(a, b)`.
    pub fn dist(&self, a: usize, b: usize) -> f64 {
        match &self.kind {
            SpaceKind::Explicit { distances } => distances[a][b],
            _ => self.int_dist(a, b).expect("integer metric") as f64,
        }
    }

    /// Points `y` with `d(x, y) ≤ r`, in increasing order.
    pub fn ball(&self, x: usize, r: f64) -> Vec<usize> {
        if r < 0.0 {
            return Vec::new();
        }
        match &self.kind {
            SpaceKind::ZInterval { n } => {
                let r = r.floor() as usize;
                (x.saturating_sub(r)..=(x + r).min(n - 1)).collect()
            }
            SpaceKind::ZdBox { dims } => {
                let r = r.floor() as i64;
                let c = self.coords(x).expect("box coords");
                let ranges: Vec<(i64, i64)> = c
                    .iter()
                    .zip(dims)
                    .map(|(&ci, &d)| ((ci - r).max(0), (ci + r).min(d as i64 - 1)))
                    .collect();
                let mut out = Vec::new();
                let mut cur: Vec<i64> = ranges.iter().map(|r| r.0).collect();
                loop {
                    out.push(Self::box_index(dims, &cur));
                    let mut i = cur.len();
                    loop {
                        if i == 0 {
                            return out;
                        }
                        i -= 1;
                        if cur[i] < ranges[i].1 {
                            cur[i] += 1;
                            break;
                        }
                        cur[i] = ranges[i].0;
                    }
                }
            }
            _ => (0..self.len).filter(|&y| self.dist(x, y) <= r).collect(),
        }
    }

    /// `V(x, r) = |B(x, r)|`.
    pub fn volume(&self, x: usize, r: f64) -> usize {
        if r < 0.0 {
            return 0;
        }
        match &self.kind {
            SpaceKind::ZInterval { n } => {
                let r = r.floor() as usize;
                (x + r).min(n - 1) - x.saturating_sub(r) + 1
            }
            SpaceKind::ZdBox { dims } => {
                let r = r.floor() as i64;
                let c = self.coords(x).expect("box coords");
                c.iter()
                    .zip(dims)
                    .map(|(&ci, &d)| ((ci + r).min(d as i64 - 1) - (ci - r).max(0) + 1) as usize)
                    .product()
            }
            _ => (0..self.len).filter(|&y| self.dist(x, y) <= r).count(),
        }
    }

    /// Largest ball volume of radius `r` over all centers.
    pub fn max_volume(&self, r: f64) -> usize {
        match &self.kind {
            // interior balls are the largest ones
            SpaceKind::ZInterval { n } => {
                let r = r.max(0.0).floor() as usize;
                (2 * r + 1).min(*n)
            }
            SpaceKind::ZdBox { dims } => {
                let r = r.max(0.0).floor() as usize;
                dims.iter().map(|&d| (2 * r + 1).min(d)).product()
            }
            _ => (0..self.len).map(|x| self.volume(x, r)).max().unwrap_or(0),
        }
    }

    pub fn diameter(&self) -> f64 {
        match &self.kind {
            SpaceKind::ZInterval { n } => (n - 1) as f64,
            SpaceKind::ZdBox { dims } => (dims.iter().max().copied().unwrap_or(1) - 1) as f64,
            SpaceKind::Tree { radius, .. } => {
                if *radius == 0 {
                    0.0
                } else {
                    (2 * radius) as f64
                }
            }
            SpaceKind::Explicit { distances } => {
                distances.iter().flat_map(|row| row.iter().copied()).fold(0.0, f64::max)
            }
        }
    }

    /// Whether `B(x, r)` is not truncated by the finite window.
    fn ball_inside(&self, x: usize, r: f64) -> bool {
        match &self.kind {
            SpaceKind::ZInterval { n } => {
                let r = r.floor() as usize;
                x >= r && x + r < *n
            }
            SpaceKind::ZdBox { dims } => {
                let r = r.floor() as i64;
                let c = self.coords(x).expect("box coords");
                c.iter().zip(dims).all(|(&ci, &d)| ci - r >= 0 && ci + r < d as i64)
            }
            SpaceKind::Tree { radius, .. } => {
                let depth = self.tree.as_ref().expect("tree layout").depth[x];
                depth as f64 + r <= *radius as f64
            }
            SpaceKind::Explicit { .. } => true,
        }
    }

    fn dyadic_radii(&self) -> Vec<f64> {
        let diam = self.diameter();
        let mut radii = Vec::new();
        let mut r = 1.0;
        while r <= diam {
            radii.push(r);
            r *= 2.0;
        }
        radii
    }

    fn measure_growth(&self) -> GrowthStats {
        let radii = self.dyadic_radii();
        let mut doubling = 1.0f64;
        let mut samples = 0usize;
        for pass in 0..2 {
            for x in 0..self.len {
                for &r in &radii {
                    // boundary balls are skipped on the first pass
                    if pass == 0 && !self.ball_inside(x, 2.0 * r) {
                        continue;
                    }
                    let ratio = self.volume(x, 2.0 * r) as f64 / self.volume(x, r) as f64;
                    doubling = doubling.max(ratio);
                    samples += 1;
                }
            }
            if samples > 0 {
                break;
            }
        }
        let growth_d = match &self.kind {
            SpaceKind::ZInterval { n } => f64::from(u8::from(*n > 1)),
            SpaceKind::ZdBox { dims } => dims.iter().filter(|&&d| d > 1).count() as f64,
            _ => doubling.log2(),
        };
        let mut growth_k = 1.0f64;
        for x in 0..self.len {
            for &r in &radii {
                growth_k = growth_k.max(self.volume(x, r) as f64 / r.powf(growth_d));
            }
        }
        GrowthStats { growth_d, growth_k, doubling_d: doubling, doubling_samples: samples }
    }

    /// Exhaustive check of the metric axioms (symmetry, identity of
    /// indiscernibles, triangle inequality). Cubic; intended for small spaces.
    pub fn check_metric_axioms(&self) -> Result<()> {
        let n = self.len;
        let tol = 1e-12 * self.diameter().max(1.0);
        for x in 0..n {
            for y in 0..n {
                let dxy = self.dist(x, y);
                if (dxy - self.dist(y, x)).abs() > tol {
                    return Err(Error::InvalidMetric(format!("d({x},{y}) != d({y},{x})")));
                }
                if (dxy == 0.0) != (x == y) {
                    return Err(Error::InvalidMetric(format!("d({x},{y}) = {dxy}")));
                }
                for z in 0..n {
                    if dxy > self.dist(x, z) + self.dist(z, y) + tol {
                        return Err(Error::InvalidMetric(format!("triangle inequality fails at ({x},{z},{y})")));
                    }
                }
            }
        }
        Ok(())
    }

    /// `d(x, S)` for every point `x`, with `+∞` when `S` is empty.
    pub fn distances_to_set(&self, set: &[usize]) -> Vec<f64> {
        (0..self.len)
            .map(|x| set.iter().map(|&c| self.dist(x, c)).fold(f64::INFINITY, f64::min))
            .collect()
    }

    /// Smallest `r` such that `support ⊆ B(x, r)` for some `x ∈ X`, together
    /// with such a center. `None` for an empty support.
    pub fn enclosing_ball(&self, support: &[usize]) -> Option<(usize, f64)> {
        if support.is_empty() {
            return None;
        }
        match &self.kind {
            SpaceKind::ZInterval { .. } => {
                let lo = *support.iter().min().unwrap();
                let hi = *support.iter().max().unwrap();
                let c = lo + (hi - lo) / 2;
                Some((c, ((hi - lo) as f64 / 2.0).ceil()))
            }
            SpaceKind::ZdBox { dims } => {
                let mut lo = vec![i64::MAX; dims.len()];
                let mut hi = vec![i64::MIN; dims.len()];
                for &s in support {
                    for (i, c) in self.coords(s).unwrap().into_iter().enumerate() {
                        lo[i] = lo[i].min(c);
                        hi[i] = hi[i].max(c);
                    }
                }
                let center: Vec<i64> = lo.iter().zip(&hi).map(|(l, h)| l + (h - l) / 2).collect();
                let r = lo.iter().zip(&hi).map(|(l, h)| (h - l + 1) / 2).max().unwrap_or(0);
                Some((Self::box_index(dims, &center), r as f64))
            }
            _ => (0..self.len)
                .map(|x| (x, support.iter().map(|&s| self.dist(x, s)).fold(0.0, f64::max)))
                .min_by(|a, b| a.1.total_cmp(&b.1)),
        }
    }

    /// Restricts a `z_interval` to its first `n` points.
    pub fn z_prefix(&self, n: usize) -> Result<Self> {
        match self.kind {
            SpaceKind::ZInterval { n: total } if n >= 1 && n <= total => Self::z_interval(n),
            _ => Err(Error::Structure("window restriction needs a z_interval of at least n points".into())),
        }
    }
}

fn build_tree(degree: usize, radius: usize) -> Result<TreeLayout> {
    let mut parent = vec![0usize];
    let mut depth = vec![0usize];
    let mut frontier = vec![0usize];
    for level in 1..=radius {
        let mut next = Vec::new();
        for &v in &frontier {
            let children = if v == 0 { degree } else { degree - 1 };
            for _ in 0..children {
                parent.push(v);
                depth.push(level);
                next.push(parent.len() - 1);
            }
        }
        if parent.len() > 5_000_000 {
            return Err(Error::Parameter("tree ball too large".into()));
        }
        frontier = next;
    }
    Ok(TreeLayout { parent, depth })
}

fn validate_table(t: &[Vec<f64>]) -> Result<()> {
    let n = t.len();
    if n == 0 {
        return Err(Error::Format("explicit distance table is empty".into()));
    }
    for (i, row) in t.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Format(format!("row {i} of the distance table has {} entries, expected {n}", row.len())));
        }
        for (j, &d) in row.iter().enumerate() {
            if !d.is_finite() || d < 0.0 {
                return Err(Error::Format(format!("distance ({i},{j}) = {d} is not a non-negative real")));
            }
            if d != t[j][i] {
                return Err(Error::Format(format!("distance table is not symmetric at ({i},{j})")));
            }
            if (d == 0.0) != (i == j) {
                return Err(Error::InvalidMetric(format!("d({i},{j}) = {d} violates d(x,y)=0 iff x=y")));
            }
        }
    }
    let scale = t.iter().flat_map(|r| r.iter().copied()).fold(0.0, f64::max);
    let tol = 1e-12 * scale.max(1.0);
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                if t[x][y] > t[x][z] + t[z][y] + tol {
                    return Err(Error::InvalidMetric(format!("triangle inequality fails at ({x},{z},{y})")));
                }
            }
        }
    }
    Ok(())
}

/// A covering of the space by balls `B(c, L)` whose centers carry a coloring
/// such that equally colored centers are at distance `≥ αL`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallCovering {
    pub radius: f64,
    pub alpha: f64,
    pub centers: Vec<usize>,
    /// Color of each center (parallel to `centers`), in `0..num_colors`.
    pub colors: Vec<usize>,
    pub num_colors: usize,
    /// Largest degree in the conflict graph (centers closer than `αL`).
    pub max_conflict_degree: usize,
}

/// Outcome of the exhaustive covering checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringCheck {
    pub covers: bool,
    pub separated: bool,
    pub color_bound: bool,
}

impl CoveringCheck {
    pub fn passed(&self) -> bool {
        self.covers && self.separated && self.color_bound
    }
}

/// Greedy maximal `L`-separated net in point order, then first-fit coloring
/// of the conflict graph in center order.
pub fn covering(space: &MetricSpace, radius: f64, alpha: f64) -> Result<BallCovering> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::Parameter(format!("covering radius must be positive, got {radius}")));
    }
    if !(alpha >= 1.0) {
        return Err(Error::Parameter(format!("separation factor must be >= 1, got {alpha}")));
    }
    let mut covered = vec![false; space.len()];
    let mut centers = Vec::new();
    for x in 0..space.len() {
        if !covered[x] {
            centers.push(x);
            for y in space.ball(x, radius) {
                covered[y] = true;
            }
        }
    }

    let k = centers.len();
    let mut neighbors = vec![Vec::new(); k];
    for i in 0..k {
        for j in (i + 1)..k {
            if space.dist(centers[i], centers[j]) < alpha * radius {
                neighbors[i].push(j);
                neighbors[j].push(i);
            }
        }
    }
    let max_conflict_degree = neighbors.iter().map(Vec::len).max().unwrap_or(0);

    let mut colors = vec![usize::MAX; k];
    let mut used = vec![false; max_conflict_degree + 2];
    for i in 0..k {
        for &j in &neighbors[i] {
            if colors[j] != usize::MAX {
                used[colors[j]] = true;
            }
        }
        colors[i] = used.iter().position(|u| !u).expect("first-fit color exists");
        for &j in &neighbors[i] {
            if colors[j] != usize::MAX {
                used[colors[j]] = false;
            }
        }
    }
    let num_colors = colors.iter().map(|c| c + 1).max().unwrap_or(0);
    Ok(BallCovering { radius, alpha, centers, colors, num_colors, max_conflict_degree })
}

impl BallCovering {
    /// Centers of the given color.
    pub fn class(&self, color: usize) -> Vec<usize> {
        self.centers
            .iter()
            .zip(&self.colors)
            .filter(|(_, &c)| c == color)
            .map(|(&x, _)| x)
            .collect()
    }

    /// `[P]_L` as a mask, for `P` the class of the given color.
    pub fn thickened(&self, space: &MetricSpace, color: usize) -> Vec<bool> {
        let mut mask = vec![false; space.len()];
        for c in self.class(color) {
            for y in space.ball(c, self.radius) {
                mask[y] = true;
            }
        }
        mask
    }

    /// Exhaustive verification of the covering and separation invariants.
    pub fn verify(&self, space: &MetricSpace) -> CoveringCheck {
        let mut covered = vec![false; space.len()];
        for &c in &self.centers {
            for y in space.ball(c, self.radius) {
                covered[y] = true;
            }
        }
        let covers = (0..space.len())
            .all(|x| covered[x] && self.centers.iter().any(|&c| space.dist(x, c) <= self.radius));
        let mut separated = true;
        'outer: for i in 0..self.centers.len() {
            for j in (i + 1)..self.centers.len() {
                if self.colors[i] == self.colors[j]
                    && space.dist(self.centers[i], self.centers[j]) < self.alpha * self.radius
                {
                    separated = false;
                    break 'outer;
                }
            }
        }
        let color_bound = self.num_colors <= self.max_conflict_degree + 1;
        CoveringCheck { covers, separated, color_bound }
    }
}

/// The color class retained by [`select_color_class`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColorClassChoice {
    pub color: usize,
    pub centers: Vec<usize>,
    /// `‖1_{[P]_L} f‖_p / ‖f‖_p`.
    pub ratio: f64,
}

/// Picks the color class `P` maximizing `‖1_{[P]_L} f‖_p`, smallest color on
/// ties. The triangle inequality over the classes guarantees a ratio of at
/// least `1/num_colors`.
pub fn select_color_class(
    f: &[f64],
    cov: &BallCovering,
    space: &MetricSpace,
    p: Exponent,
) -> Result<ColorClassChoice> {
    if f.len() != space.len() {
        return Err(Error::Shape(format!("function has {} values, space has {} points", f.len(), space.len())));
    }
    let total = lp_norm(f, p);
    if total == 0.0 {
        return Err(Error::Degenerate("function is identically zero".into()));
    }
    let mut best: Option<(usize, f64)> = None;
    for color in 0..cov.num_colors {
        let mask = cov.thickened(space, color);
        let restricted: Vec<f64> = f.iter().zip(&mask).map(|(&v, &m)| if m { v } else { 0.0 }).collect();
        let value = lp_norm(&restricted, p);
        if best.is_none_or(|(_, b)| value > b) {
            best = Some((color, value));
        }
    }
    let (color, value) = best.ok_or_else(|| Error::Degenerate("covering has no colors".into()))?;
    Ok(ColorClassChoice { color, centers: cov.class(color), ratio: value / total })
}

/// `Δ_P(x) = max{0, 1 − d(x,P)/(2L)}` tabulated over the space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffProfile {
    pub centers: Vec<usize>,
    pub radius: f64,
    pub values: Vec<f64>,
    /// `d(x, P)` for each point.
    pub distances: Vec<f64>,
}

/// Outcome of the exhaustive checks of the four cutoff properties.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffCheck {
    pub vanishes_beyond_2l: bool,
    pub half_on_thickened: bool,
    pub lipschitz: bool,
    pub in_unit_range: bool,
}

impl CutoffCheck {
    pub fn passed(&self) -> bool {
        self.vanishes_beyond_2l && self.half_on_thickened && self.lipschitz && self.in_unit_range
    }
}

pub fn cutoff(centers: &[usize], radius: f64, space: &MetricSpace) -> Result<CutoffProfile> {
    if centers.is_empty() {
        return Err(Error::Degenerate("cutoff needs a non-empty center set".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::Parameter(format!("cutoff radius must be positive, got {radius}")));
    }
    if let Some(&bad) = centers.iter().find(|&&c| c >= space.len()) {
        return Err(Error::Shape(format!("center {bad} is outside the space")));
    }
    let distances = space.distances_to_set(centers);
    let values = distances.iter().map(|&d| cutoff_value(d, radius)).collect();
    Ok(CutoffProfile { centers: centers.to_vec(), radius, values, distances })
}

#[inline]
pub(crate) fn cutoff_value(dist: f64, radius: f64) -> f64 {
    (1.0 - dist / (2.0 * radius)).max(0.0)
}

impl CutoffProfile {
    /// Checks all four properties; the Lipschitz bound is checked on every pair.
    pub fn verify(&self, space: &MetricSpace) -> CutoffCheck {
        let l = self.radius;
        let n = self.values.len();
        let vanishes_beyond_2l = (0..n).all(|x| self.distances[x] < 2.0 * l || self.values[x] == 0.0);
        let half_on_thickened = (0..n).all(|x| self.distances[x] > l || self.values[x] >= 0.5);
        let in_unit_range = self.values.iter().all(|&v| (0.0..=1.0).contains(&v));
        let slope = 1.0 / (2.0 * l);
        let mut lipschitz = true;
        'outer: for x in 0..n {
            for y in (x + 1)..n {
                let diff = (self.values[x] - self.values[y]).abs();
                if diff > space.dist(x, y) * slope + 1e-12 {
                    lipschitz = false;
                    break 'outer;
                }
            }
        }
        CutoffCheck { vanishes_beyond_2l, half_on_thickened, lipschitz, in_unit_range }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bfs_count(degree: usize, radius: usize) -> usize {
        // independent count: 1 + degree * sum_{k<radius} (degree-1)^k
        let mut total = 1;
        let mut layer = 0;
        for level in 1..=radius {
            layer = if level == 1 { degree } else { layer * (degree - 1) };
            total += layer;
        }
        total
    }

    #[test]
    fn interval_ball_volume() {
        let s = MetricSpace::z_interval(101).unwrap();
        assert_eq!(s.volume(50, 3.0), 7);
        assert_eq!(s.ball(50, 3.0), (47..=53).collect::<Vec<_>>());
        assert_eq!(s.volume(0, 3.0), 4);
    }

    #[test]
    fn interval_doubling_at_most_two() {
        let s = MetricSpace::z_interval(1001).unwrap();
        let g = s.growth();
        assert!(g.doubling_d <= 2.0, "{g:?}");
        assert!(g.doubling_samples > 0);
        assert_eq!(g.growth_d, 1.0);
        assert!(g.growth_k <= 3.0 + 1e-12);
    }

    #[test]
    fn tree_sizes_match_bfs_count() {
        let s = MetricSpace::tree(3, 2).unwrap();
        assert_eq!(s.len(), 10);
        for (d, r) in [(2, 5), (3, 4), (4, 3)] {
            assert_eq!(MetricSpace::tree(d, r).unwrap().len(), bfs_count(d, r));
        }
        let s = MetricSpace::tree(3, 3).unwrap();
        s.check_metric_axioms().unwrap();
        // leaves in different root subtrees are 2*radius apart
        assert_eq!(s.dist(s.len() - 1, 10), 6.0);
        assert_eq!(s.dist(s.len() - 1, 4), 5.0);
    }

    #[test]
    fn box_sup_metric() {
        let s = MetricSpace::zd_box(&[4, 5]).unwrap();
        assert_eq!(s.len(), 20);
        assert_eq!(s.coords(7).unwrap(), vec![1, 2]);
        assert_eq!(s.dist(0, 19), 4.0);
        assert_eq!(s.volume(7, 1.0), 9);
        assert_eq!(s.ball(7, 1.0).len(), 9);
        s.check_metric_axioms().unwrap();
        assert_eq!(s.growth().growth_d, 2.0);
    }

    #[test]
    fn explicit_table_validation() {
        let ok = vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]];
        assert!(MetricSpace::explicit(ok).is_ok());
        let asym = vec![vec![0.0, 1.0], vec![2.0, 0.0]];
        assert!(matches!(MetricSpace::explicit(asym), Err(Error::Format(_))));
        let neg = vec![vec![0.0, -1.0], vec![-1.0, 0.0]];
        assert!(matches!(MetricSpace::explicit(neg), Err(Error::Format(_))));
        let tri = vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]];
        assert!(matches!(MetricSpace::explicit(tri), Err(Error::InvalidMetric(_))));
    }

    #[test]
    fn greedy_net_on_interval() {
        let s = MetricSpace::z_interval(100).unwrap();
        let cov = covering(&s, 10.0, 6.0).unwrap();
        assert_eq!(cov.centers, (0..100).step_by(11).collect::<Vec<_>>());
        let check = cov.verify(&s);
        assert!(check.passed(), "{check:?}");
        // direct pairwise check of same-color separation
        for i in 0..cov.centers.len() {
            for j in (i + 1)..cov.centers.len() {
                if cov.colors[i] == cov.colors[j] {
                    assert!(s.dist(cov.centers[i], cov.centers[j]) >= 60.0);
                }
            }
        }
        // direct conflict-degree measurement
        let maxdeg = (0..cov.centers.len())
            .map(|i| {
                (0..cov.centers.len())
                    .filter(|&j| j != i && s.dist(cov.centers[i], cov.centers[j]) < 60.0)
                    .count()
            })
            .max()
            .unwrap();
        assert_eq!(maxdeg, cov.max_conflict_degree);
        assert!(cov.num_colors <= maxdeg + 1);
    }

    #[test]
    fn huge_radius_single_ball() {
        for s in [MetricSpace::z_interval(30).unwrap(), MetricSpace::tree(3, 3).unwrap()] {
            let cov = covering(&s, s.diameter().max(1.0), 6.0).unwrap();
            assert_eq!(cov.centers.len(), 1);
            assert_eq!(cov.num_colors, 1);
        }
    }

    #[test]
    fn covering_rejects_bad_parameters() {
        let s = MetricSpace::z_interval(10).unwrap();
        assert!(covering(&s, 0.0, 6.0).is_err());
        assert!(covering(&s, 1.0, 0.5).is_err());
    }

    #[test]
    fn color_class_of_point_mass() {
        let s = MetricSpace::z_interval(200).unwrap();
        let cov = covering(&s, 7.0, 6.0).unwrap();
        let mut f = vec![0.0; 200];
        f[123] = 2.5;
        let choice = select_color_class(&f, &cov, &s, Exponent::TWO).unwrap();
        assert_eq!(choice.ratio, 1.0);
        assert!(choice.centers.iter().any(|&c| s.dist(c, 123) <= 7.0));
        assert!(select_color_class(&vec![0.0; 200], &cov, &s, Exponent::ONE).is_err());
    }

    #[test]
    fn color_class_pigeonhole() {
        let s = MetricSpace::z_interval(500).unwrap();
        for l in [1.0, 3.0, 10.0, 40.0] {
            let cov = covering(&s, l, 6.0).unwrap();
            for p in [Exponent::ONE, Exponent::TWO, Exponent::INFINITY] {
                let c = select_color_class(&vec![1.0; 500], &cov, &s, p).unwrap();
                assert!(c.ratio >= 1.0 / cov.num_colors as f64);
            }
        }
    }

    #[test]
    fn cutoff_values() {
        let s = MetricSpace::z_interval(100).unwrap();
        let c = cutoff(&[0], 5.0, &s).unwrap();
        assert_eq!(c.values[0], 1.0);
        assert_eq!(c.values[5], 0.5);
        assert_eq!(c.values[10], 0.0);
        let c = cutoff(&[0, 60], 5.0, &s).unwrap();
        assert_eq!(c.values[30], 0.0);
        assert_eq!(c.values[60], 1.0);
        assert!(c.verify(&s).passed());
        assert!(cutoff(&[], 5.0, &s).is_err());
    }

    #[test]
    fn cutoff_properties_on_tree() {
        let s = MetricSpace::tree(3, 4).unwrap();
        let cov = covering(&s, 1.0, 6.0).unwrap();
        assert!(cov.verify(&s).passed());
        for color in 0..cov.num_colors {
            let prof = cutoff(&cov.class(color), 1.0, &s).unwrap();
            assert!(prof.verify(&s).passed());
        }
    }

    #[test]
    fn enclosing_ball_radius() {
        let s = MetricSpace::z_interval(100).unwrap();
        assert_eq!(s.enclosing_ball(&[47, 50, 53]), Some((50, 3.0)));
        assert_eq!(s.enclosing_ball(&[10, 11]), Some((10, 1.0)));
        let b = MetricSpace::zd_box(&[10, 10]).unwrap();
        let (c, r) = b.enclosing_ball(&[0, 2, 20]).unwrap();
        assert_eq!(r, 1.0);
        assert_eq!(b.coords(c).unwrap(), vec![1, 1]);
        let t = MetricSpace::tree(3, 2).unwrap();
        assert_eq!(t.enclosing_ball(&[4, 6]).unwrap().1, 2.0);
    }
}
