//! The balanced-configuration determinant and its solution curves.
//!
//! `B(a,b,c)` is the 3×3 determinant with rows `(1,1,1)`,
//! `(m1(b+c−a), m2(c+a−b), m3(a+b−c))` and `(a^{-3/2}, b^{-3/2}, c^{-3/2})`.
//! It is evaluated through its cofactor expansion along the first row,
//!
//! ```text
//! B = Σ_i s_i^{-3/2} · ( s_i (m_k − m_j) + (s_j − s_k)(m_j + m_k) ),   (i,j,k) cyclic
//! ```
//!
//! which avoids the cancellation of the row form near collisions.
//!
//! Families are traced at `c = 1` with the masses sorted `m1 ≥ m2 ≥ m3`.
//! Along an a-segment (`b, c` fixed) `B` has at most two roots, and
//! `d²B/da²` changes sign at most once, which is what [`roots_on_a_segment`]
//! uses to bracket every root.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::shape::{planar_coordinates, squared_area, MassTriple, Shape};

const CYCLIC: [(usize, usize, usize); 3] = [(0, 1, 2), (1, 2, 0), (2, 0, 1)];

/// Masses treated as equal below this fraction of `M`.
pub const MASS_DEGENERACY: f64 = 1e-9;

fn raw_b(m: &[f64; 3], s: &[f64; 3]) -> f64 {
    CYCLIC
        .iter()
        .map(|&(i, j, k)| {
            let g = s[i] * (m[k] - m[j]) + (s[j] - s[k]) * (m[j] + m[k]);
            g / (s[i] * s[i].sqrt())
        })
        .sum()
}

fn raw_gradient(m: &[f64; 3], s: &[f64; 3]) -> [f64; 3] {
    let mut grad = [0.0; 3];
    for &(i, j, k) in &CYCLIC {
        let own = -0.5 * s[i] * (m[k] - m[j]) - 1.5 * (s[j] - s[k]) * (m[j] + m[k]);
        grad[i] = own / (s[i] * s[i] * s[i].sqrt()) - (m[k] + m[i]) / (s[j] * s[j].sqrt())
            + (m[i] + m[j]) / (s[k] * s[k].sqrt());
    }
    grad
}

/// Sum of the magnitudes of the products that make up `B`; roundoff in `B`
/// is relative to this, `(a+b+c) Σ_i (M − m_i) s_i^{-3/2}`.
fn raw_scale(m: &[f64; 3], s: &[f64; 3]) -> f64 {
    let total = m[0] + m[1] + m[2];
    let perimeter2 = s[0] + s[1] + s[2];
    perimeter2 * (0..3).map(|i| (total - m[i]) / (s[i] * s[i].sqrt())).sum::<f64>()
}

/// The balanced-configuration determinant `B`.
pub fn balance_determinant(m: &MassTriple, s: &Shape) -> f64 {
    raw_b(&m.masses(), &s.sides())
}

/// `(∂B/∂a, ∂B/∂b, ∂B/∂c)`.
pub fn balance_gradient(m: &MassTriple, s: &Shape) -> [f64; 3] {
    raw_gradient(&m.masses(), &s.sides())
}

/// Size of the individual terms of `B` at `s`.
pub fn balance_scale(m: &MassTriple, s: &Shape) -> f64 {
    raw_scale(&m.masses(), &s.sides())
}

/// `d²B/da² = ¾ a^{-7/2} (a(m3 − m2) + 5(b − c)(m2 + m3))`.
pub fn d2b_da2(m: &MassTriple, s: &Shape) -> f64 {
    let [_, m2, m3] = m.masses();
    let [a, b, c] = s.sides();
    0.75 * (a * (m3 - m2) + 5.0 * (b - c) * (m2 + m3)) / (a * a * a * a.sqrt())
}

/// Roots of `B(·, b, c)` on `(0, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRoots {
    pub b: f64,
    pub c: f64,
    /// Increasing, at most two entries.
    pub roots: Vec<f64>,
    /// Where `d²B/da²` changes sign, if it does.
    pub inflection: Option<f64>,
    /// `m2 = m3` and `b = c`: `B` vanishes on the whole segment.
    pub identically_zero: bool,
}

/// Lower end of the range of `b/c` (masses sorted `m1 ≥ m2 ≥ m3`) on which an
/// a-segment carries a single root; the upper end is 1.
pub fn single_root_lower_ratio(m: &MassTriple) -> f64 {
    let [m1, m2, m3] = m.masses();
    ((m1 + m3) / (m1 + m2)).powf(2.0 / 3.0)
}

fn sgn(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

struct Segment {
    m: [f64; 3],
    b: f64,
    c: f64,
}

impl Segment {
    fn f(&self, a: f64) -> f64 {
        raw_b(&self.m, &[a, self.b, self.c])
    }

    fn df(&self, a: f64) -> f64 {
        raw_gradient(&self.m, &[a, self.b, self.c])[0]
    }

    fn scale(&self, a: f64) -> f64 {
        raw_scale(&self.m, &[a, self.b, self.c])
    }

    /// Linear growth rate of `B` as `a → ∞`.
    fn slope_at_infinity(&self) -> f64 {
        let [m1, m2, m3] = self.m;
        (m1 + m2) / (self.c * self.c.sqrt()) - (m1 + m3) / (self.b * self.b.sqrt())
    }

    fn sign_at_zero(&self) -> i8 {
        let [_, m2, m3] = self.m;
        match sgn(self.b - self.c) {
            0 => sgn(m3 - m2),
            s => s,
        }
    }

    fn sign_at_infinity(&self) -> i8 {
        let kappa = self.slope_at_infinity();
        if kappa != 0.0 {
            return sgn(kappa);
        }
        let [m1, m2, m3] = self.m;
        let (b, c) = (self.b, self.c);
        let constant = (b * (m1 - m3) + c * (m1 + m3)) / (b * b.sqrt())
            + (c * (m2 - m1) - b * (m1 + m2)) / (c * c.sqrt());
        match sgn(constant) {
            0 => sgn(m3 - m2),
            s => s,
        }
    }

    fn dsign_at_zero(&self) -> i8 {
        -self.sign_at_zero()
    }

    fn dsign_at_infinity(&self) -> i8 {
        let kappa = self.slope_at_infinity();
        if kappa != 0.0 {
            return sgn(kappa);
        }
        let [_, m2, m3] = self.m;
        match sgn(m2 - m3) {
            0 => -sgn(self.b - self.c),
            s => s,
        }
    }
}

/// Locates the sign change of a monotone `g` on `(lo, hi)` where `lo` may be
/// 0 and `hi` may be infinite; `s_lo`/`s_hi` are the limiting signs.
fn bracket_monotone<G: Fn(f64) -> f64>(g: &G, lo: f64, hi: f64, s_lo: i8, s_hi: i8, reference: f64) -> Option<(f64, f64)> {
    if s_lo == 0 || s_hi == 0 || s_lo == s_hi {
        return None;
    }
    let mut left = if lo > 0.0 { Some(lo) } else { None };
    let mut right = if hi.is_finite() { Some(hi) } else { None };
    if left.is_none() && right.is_none() {
        let v = sgn(g(reference));
        if v == 0 {
            return Some((reference, reference));
        }
        if v == s_lo {
            left = Some(reference);
        } else {
            right = Some(reference);
        }
    }
    if left.is_none() {
        let mut x = right.unwrap();
        let mut found = None;
        for _ in 0..700 {
            x *= 0.5;
            if x < f64::MIN_POSITIVE * 1e20 {
                break;
            }
            let v = sgn(g(x));
            if v == s_lo {
                found = Some(x);
                break;
            }
            if v == 0 {
                return Some((x, x));
            }
            right = Some(x);
        }
        left = Some(found?);
    }
    if right.is_none() {
        let mut x = left.unwrap();
        let mut found = None;
        for _ in 0..700 {
            x *= 2.0;
            if !x.is_finite() || x > 1e300 {
                break;
            }
            let v = sgn(g(x));
            if v == s_hi {
                found = Some(x);
                break;
            }
            if v == 0 {
                return Some((x, x));
            }
            left = Some(x);
        }
        right = Some(found?);
    }
    Some((left.unwrap(), right.unwrap()))
}

/// Geometric bisection of a sign change on `[lo, hi]` down to relative width `rel`.
fn bisect<G: Fn(f64) -> f64>(g: &G, mut lo: f64, mut hi: f64, rel: f64) -> (f64, f64) {
    let s_lo = sgn(g(lo));
    for _ in 0..400 {
        if hi <= lo * (1.0 + rel) {
            break;
        }
        let mid = (lo * hi).sqrt();
        let mid = if mid > lo && mid < hi { mid } else { 0.5 * (lo + hi) };
        if mid <= lo || mid >= hi {
            break;
        }
        let v = sgn(g(mid));
        if v == 0 {
            return (mid, mid);
        }
        if v == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

fn polish(seg: &Segment, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        return lo;
    }
    let (lo, hi) = bisect(&|a| seg.f(a), lo, hi, 1e-9);
    let mut x = (lo * hi).sqrt();
    for _ in 0..8 {
        let fx = seg.f(x);
        if fx == 0.0 {
            return x;
        }
        let d = seg.df(x);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let next = x - fx / d;
        if !(next >= lo && next <= hi) {
            break;
        }
        let done = (next - x).abs() <= 1e-16 * x;
        x = next;
        if done {
            break;
        }
    }
    if seg.f(x).abs() > 1e-13 * seg.scale(x) {
        // Newton stalled; finish with bisection to machine width.
        let (l, h) = bisect(&|a| seg.f(a), lo, hi, 1e-16);
        let (fl, fh) = (seg.f(l).abs(), seg.f(h).abs());
        x = if fl <= fh { l } else { h };
    }
    x
}

/// All roots of `B(·, b, c) = 0` for `a ∈ (0, ∞)`.
pub fn roots_on_a_segment(m: &MassTriple, b: f64, c: f64) -> Result<SegmentRoots> {
    for v in [b, c] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Singular(v));
        }
    }
    let masses = m.masses();
    let [_, m2, m3] = masses;
    let inflection = if m2 != m3 {
        let x = 5.0 * (b - c) * (m2 + m3) / (m2 - m3);
        (x > 0.0 && x.is_finite()).then_some(x)
    } else {
        None
    };
    if (m2 - m3).abs() < MASS_DEGENERACY * m.total() && (b - c).abs() <= MASS_DEGENERACY * b.max(c) {
        return Ok(SegmentRoots {
            b,
            c,
            roots: Vec::new(),
            inflection,
            identically_zero: true,
        });
    }
    let seg = Segment { m: masses, b, c };
    let reference = (b * c).sqrt();

    // Monotone pieces of B' split at the inflection point.
    let mut pieces: Vec<(f64, f64, i8, i8)> = Vec::new();
    match inflection {
        Some(x) => {
            let s = sgn(seg.df(x));
            pieces.push((0.0, x, seg.dsign_at_zero(), s));
            pieces.push((x, f64::INFINITY, s, seg.dsign_at_infinity()));
        }
        None => pieces.push((0.0, f64::INFINITY, seg.dsign_at_zero(), seg.dsign_at_infinity())),
    }
    let mut critical: Vec<f64> = Vec::new();
    if let Some(x) = inflection {
        if seg.df(x) == 0.0 {
            critical.push(x);
        }
    }
    for &(lo, hi, s_lo, s_hi) in &pieces {
        if let Some((l, h)) = bracket_monotone(&|a| seg.df(a), lo, hi, s_lo, s_hi, reference) {
            let (l, h) = bisect(&|a| seg.df(a), l, h, 1e-15);
            critical.push((l * h).sqrt());
        }
    }
    critical.sort_by(f64::total_cmp);
    critical.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * y.abs());

    // Monotone pieces of B between consecutive critical points.
    let mut knots = vec![0.0];
    knots.extend(critical.iter().copied());
    knots.push(f64::INFINITY);
    let sign_at = |x: f64| -> i8 {
        if x == 0.0 {
            seg.sign_at_zero()
        } else if x.is_infinite() {
            seg.sign_at_infinity()
        } else {
            sgn(seg.f(x))
        }
    };
    let mut roots = Vec::new();
    for w in knots.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if let Some((l, h)) = bracket_monotone(&|a| seg.f(a), lo, hi, sign_at(lo), sign_at(hi), reference) {
            roots.push(polish(&seg, l, h));
        }
    }
    // Tangent zeros at critical points.
    for &x in &critical {
        if seg.f(x).abs() <= 1e-13 * seg.scale(x) {
            roots.push(x);
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-9 * y.abs());
    Ok(SegmentRoots {
        b,
        c,
        roots,
        inflection,
        identically_zero: false,
    })
}

/// Which of the three solution curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FamilyId {
    /// Through the equilateral point.
    Long,
    Short1,
    Short2,
}

impl FamilyId {
    pub fn as_str(self) -> &'static str {
        match self {
            FamilyId::Long => "long",
            FamilyId::Short1 => "short1",
            FamilyId::Short2 => "short2",
        }
    }
}

/// Limit reached at one end of a traced curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EndKind {
    /// Two squared distances vanish relative to the third (a vertex of the
    /// extended shape triangle).
    Vertex,
    /// One squared distance vanishes (binary collision).
    Collision,
}

/// How the continuation parameter `t` maps to a point of an a-segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Chart {
    /// `b = 10^t`, root selected on the a-segment.
    LogB,
    /// `b = 1 + 10^t`.
    LogBMinusOne,
    /// Isosceles line `b = c = 1`, `a = 10^t`.
    LogA,
}

/// Root selection rule along the chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Selector {
    /// Smallest root for `b ≤ 1`, largest for `b > 1`.
    Long,
    /// Smaller of two roots.
    Smaller,
    /// Larger of two roots.
    Larger,
    /// `a = b` (closed form).
    IsoscelesAB,
    /// `a = c` (closed form).
    IsoscelesAC,
    /// `b = c` (closed form).
    IsoscelesBC,
}

/// One traced point, with `b` and `a` in the sorted-mass frame at `c = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilySample {
    pub param: f64,
    pub b: f64,
    pub a: f64,
    /// In the caller's body labels.
    pub shape: Shape,
    pub area2: f64,
    pub inflection: Option<f64>,
}

/// A point where a family crosses the ellipse of flat triangles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerCrossing {
    pub param: f64,
    pub shape: Shape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyCurve {
    pub id: FamilyId,
    pub chart: Chart,
    pub selector: Selector,
    /// Sorted masses (`m1 ≥ m2 ≥ m3`) used for the root problem.
    pub sorted: MassTriple,
    /// `sorted = original.permuted(order)`.
    pub order: [usize; 3],
    /// Ordered by `param`.
    pub samples: Vec<FamilySample>,
    pub euler: Vec<EulerCrossing>,
    /// End kinds at the low and high parameter ends.
    pub ends: [EndKind; 2],
    /// Closed-form (isosceles) curve rather than a numerical trace.
    pub analytic: bool,
}

/// Sampling of the continuation parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceGrid {
    pub samples_per_decade: usize,
    /// The parameter spans `[-decades, decades]`.
    pub decades: f64,
    /// Halve a step whenever `a` jumps by more than this fraction.
    pub max_jump: f64,
    /// Smallest parameter step.
    pub min_step: f64,
}

impl Default for TraceGrid {
    fn default() -> Self {
        Self {
            samples_per_decade: 64,
            decades: 10.0,
            max_jump: 0.05,
            min_step: 1e-6,
        }
    }
}

fn inverse_permutation(p: [usize; 3]) -> [usize; 3] {
    let mut inv = [0; 3];
    for (i, &pi) in p.iter().enumerate() {
        inv[pi] = i;
    }
    inv
}

impl FamilyCurve {
    /// `(b, a, shape in sorted labels)` at parameter `t`, if the family exists there.
    pub fn solve_sorted(&self, t: f64) -> Option<(f64, f64, Shape)> {
        let x = 10f64.powf(t);
        let (a, b, c) = match (self.chart, self.selector) {
            (Chart::LogA, _) => (x, 1.0, 1.0),
            (_, Selector::IsoscelesAB) => (x, x, 1.0),
            (_, Selector::IsoscelesAC) => (1.0, x, 1.0),
            (chart, sel) => {
                let b = match chart {
                    Chart::LogBMinusOne => 1.0 + x,
                    _ => x,
                };
                let r = roots_on_a_segment(&self.sorted, b, 1.0).ok()?;
                if r.identically_zero || r.roots.is_empty() {
                    return None;
                }
                let a = match sel {
                    Selector::Long => {
                        if b <= 1.0 {
                            r.roots[0]
                        } else {
                            *r.roots.last()?
                        }
                    }
                    Selector::Smaller if r.roots.len() == 2 => r.roots[0],
                    Selector::Larger if r.roots.len() == 2 => r.roots[1],
                    _ => return None,
                };
                (a, b, 1.0)
            }
        };
        let shape = Shape::new(a, b, c).ok()?;
        Some((b, a, shape))
    }

    /// Relative rounding error of the sides as reconstructed from `t`.
    ///
    /// Near `b = 1` the chart `log(b − 1)` keeps `b − 1` only to `ε b/(b − 1)`.
    pub fn chart_noise(&self, t: f64) -> f64 {
        match self.chart {
            Chart::LogBMinusOne => {
                let x = 10f64.powf(t);
                f64::EPSILON * (1.0 + x) / x
            }
            _ => f64::EPSILON,
        }
    }

    /// Family shape at parameter `t` in the caller's body labels.
    pub fn shape_at(&self, t: f64) -> Option<Shape> {
        let (_, _, s) = self.solve_sorted(t)?;
        Some(s.permuted(inverse_permutation(self.order)))
    }

    fn sample_at(&self, t: f64) -> Option<FamilySample> {
        let (b, a, sorted_shape) = self.solve_sorted(t)?;
        let inflection = if self.analytic {
            None
        } else {
            let [_, m2, m3] = self.sorted.masses();
            let x = 5.0 * (b - 1.0) * (m2 + m3) / (m2 - m3);
            (x > 0.0 && x.is_finite()).then_some(x)
        };
        let shape = sorted_shape.permuted(inverse_permutation(self.order));
        Some(FamilySample {
            param: t,
            b,
            a,
            shape,
            area2: squared_area(&shape),
            inflection,
        })
    }

    /// Index ranges of consecutive samples inside the ellipse (`A² ≥ 0`).
    pub fn physical_runs(&self) -> Vec<std::ops::Range<usize>> {
        let mut runs = Vec::new();
        let mut start = None;
        for (i, s) in self.samples.iter().enumerate() {
            let inside = s.shape.is_physical();
            match (inside, start) {
                (true, None) => start = Some(i),
                (false, Some(st)) => {
                    runs.push(st..i);
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(st) = start {
            runs.push(st..self.samples.len());
        }
        runs
    }

    /// Longest run of physical samples.
    pub fn physical_samples(&self) -> &[FamilySample] {
        self.physical_runs()
            .into_iter()
            .max_by_key(|r| r.len())
            .map(|r| &self.samples[r])
            .unwrap_or(&[])
    }
}

/// The three curves of balanced configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySet {
    pub masses: MassTriple,
    pub families: Vec<FamilyCurve>,
}

impl FamilySet {
    pub fn get(&self, id: FamilyId) -> &FamilyCurve {
        self.families.iter().find(|f| f.id == id).expect("all three families are always present")
    }
}

fn grid_points(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    if hi <= lo {
        return Vec::new();
    }
    let n = ((hi - lo) * per_decade as f64).ceil().max(1.0) as usize;
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

fn refine(curve: &FamilyCurve, samples: Vec<Option<FamilySample>>, params: &[f64], grid: &TraceGrid) -> Vec<FamilySample> {
    const MAX_INSERTS: usize = 200_000;
    let mut inserts = 0;
    let mut out: Vec<FamilySample> = Vec::new();
    let mut prev: Option<(f64, Option<FamilySample>)> = None;
    for (i, cur) in samples.into_iter().enumerate() {
        let t = params[i];
        if let Some((tp, sp)) = prev {
            // Stack of (t0, s0, t1, s1) intervals to subdivide, depth first.
            let mut stack = vec![(tp, sp, t, cur)];
            let mut pieces = Vec::new();
            while let Some((t0, s0, t1, s1)) = stack.pop() {
                let needs = match (s0, s1) {
                    (Some(x), Some(y)) => (x.a - y.a).abs() > grid.max_jump * x.a.max(y.a),
                    (None, None) => false,
                    _ => true,
                };
                if needs && t1 - t0 > grid.min_step && inserts < MAX_INSERTS {
                    let tm = 0.5 * (t0 + t1);
                    let sm = curve.sample_at(tm);
                    inserts += 1;
                    stack.push((tm, sm, t1, s1));
                    stack.push((t0, s0, tm, sm));
                } else {
                    pieces.push(s1);
                }
            }
            out.extend(pieces.into_iter().flatten());
        } else if let Some(s) = cur {
            out.push(s);
        }
        prev = Some((t, cur));
    }
    out
}

fn locate_euler(curve: &FamilyCurve) -> Vec<EulerCrossing> {
    let mut found = Vec::new();
    for w in curve.samples.windows(2) {
        let (s0, s1) = (&w[0], &w[1]);
        if (s0.area2 > 0.0) == (s1.area2 > 0.0) {
            continue;
        }
        let (mut lo, mut hi) = (s0.param, s1.param);
        let inside_lo = s0.area2 > 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            match curve.sample_at(mid) {
                Some(s) if (s.area2 > 0.0) == inside_lo => lo = mid,
                Some(_) => hi = mid,
                None => break,
            }
        }
        let best = [lo, hi]
            .into_iter()
            .filter_map(|t| curve.sample_at(t))
            .min_by(|x, y| x.area2.abs().total_cmp(&y.area2.abs()));
        if let Some(s) = best {
            found.push(EulerCrossing { param: s.param, shape: s.shape });
        }
    }
    found
}

/// Traces the three curves of balanced configurations at `c = 1`.
///
/// Masses are relabelled internally so that `m1 ≥ m2 ≥ m3`; sample shapes are
/// reported in the caller's labels. Curves that are isosceles lines (equal
/// masses) come from closed forms.
pub fn trace_families(m: &MassTriple, grid: &TraceGrid, exec: Execution) -> Result<FamilySet> {
    if grid.samples_per_decade == 0 || !(grid.decades > 0.0) {
        return Err(Error::Domain("trace grid must have positive density and range".into()));
    }
    let order = m.descending_order();
    let sorted = m.permuted(order);
    let [m1, m2, m3] = sorted.masses();
    let tol = MASS_DEGENERACY * sorted.total();
    let d = grid.decades;
    let per = grid.samples_per_decade;
    // Parameter gap kept around b = 1 where an a-segment degenerates.
    let gap = (1.0 + 1e-6f64).log10();

    let blank = |id, chart, selector, analytic, ends| FamilyCurve {
        id,
        chart,
        selector,
        sorted,
        order,
        samples: Vec::new(),
        euler: Vec::new(),
        ends,
        analytic,
    };

    use EndKind::*;
    let mut plan: Vec<(FamilyCurve, Vec<f64>)> = Vec::new();
    if (m1 - m3).abs() < tol {
        plan.push((blank(FamilyId::Long, Chart::LogB, Selector::IsoscelesAB, true, [Vertex, Collision]), grid_points(-d, d, per)));
        plan.push((blank(FamilyId::Short1, Chart::LogB, Selector::IsoscelesAC, true, [Collision, Vertex]), grid_points(-d, d, per)));
        plan.push((blank(FamilyId::Short2, Chart::LogA, Selector::IsoscelesBC, true, [Collision, Vertex]), grid_points(-d, d, per)));
    } else if (m2 - m3).abs() < tol {
        let mut both_sides = grid_points(-d, -gap, per);
        both_sides.extend(grid_points(gap, d, per));
        plan.push((blank(FamilyId::Long, Chart::LogA, Selector::IsoscelesBC, true, [Collision, Vertex]), grid_points(-d, d, per)));
        plan.push((blank(FamilyId::Short1, Chart::LogB, Selector::Smaller, false, [Vertex, Vertex]), both_sides.clone()));
        plan.push((blank(FamilyId::Short2, Chart::LogB, Selector::Larger, false, [Collision, Collision]), both_sides));
    } else {
        let beta0 = single_root_lower_ratio(&sorted).log10();
        plan.push((blank(FamilyId::Long, Chart::LogB, Selector::Long, false, [Vertex, Collision]), grid_points(-d, d, per)));
        plan.push((blank(FamilyId::Short1, Chart::LogB, Selector::Larger, false, [Collision, Vertex]), grid_points(-d, beta0, per)));
        plan.push((blank(FamilyId::Short2, Chart::LogBMinusOne, Selector::Smaller, false, [Collision, Vertex]), grid_points(-d, d, per)));
    }

    let mut families = Vec::with_capacity(3);
    for (mut curve, params) in plan {
        let raw = par::map(exec, &params, |&t| curve.sample_at(t));
        curve.samples = refine(&curve, raw, &params, grid);
        curve.euler = locate_euler(&curve);
        families.push(curve);
    }
    Ok(FamilySet { masses: *m, families })
}

/// Collinear balanced shapes, one for each choice of the middle body, in
/// the order (body 1 in the middle, body 2, body 3). Normalized so that the
/// longest side has squared length 1.
pub fn euler_points(m: &MassTriple) -> [Shape; 3] {
    [0, 1, 2].map(|middle| euler_point(m, middle))
}

fn collinear_shape(middle: usize, x: f64) -> [f64; 3] {
    // Distances from the middle body: 1 to the first outer body, x to the other.
    let (i, k) = match middle {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    // Side opposite body p is the distance between the other two.
    let mut sides = [0.0; 3];
    sides[middle] = (1.0 + x) * (1.0 + x);
    sides[k] = 1.0; // distance(middle, i)
    sides[i] = x * x; // distance(middle, k)
    let norm = sides[middle];
    sides.map(|s| s / norm)
}

fn euler_point(m: &MassTriple, middle: usize) -> Shape {
    let masses = m.masses();
    let g = |x: f64| raw_b(&masses, &collinear_shape(middle, x));
    // Unique sign change on (0, ∞); scan a log grid then bisect.
    let mut prev_x = 1e-8;
    let mut prev = g(prev_x);
    let mut root = None;
    for i in 1..=16 * 64 {
        let x = 1e-8 * 10f64.powf(i as f64 / 64.0);
        let v = g(x);
        if v == 0.0 {
            root = Some(x);
            break;
        }
        if sgn(v) != sgn(prev) {
            let (l, h) = bisect(&g, prev_x, x, 1e-16);
            root = Some(if g(l).abs() <= g(h).abs() { l } else { h });
            break;
        }
        prev_x = x;
        prev = v;
    }
    let x = root.expect("a collinear central configuration exists for every ordering");
    Shape::from_sides(collinear_shape(middle, x)).expect("positive sides")
}

/// Distinguished balanced shapes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecialPoints {
    pub lagrange: Shape,
    /// Shape whose inertia tensor is round (`Θ1 = Θ2`), normalized to `c = 1`.
    pub round_inertia: Shape,
}

pub fn special_points(m: &MassTriple) -> SpecialPoints {
    let [m1, m2, m3] = m.masses();
    let round = Shape::new(m1 * (m2 + m3), m2 * (m1 + m3), m3 * (m1 + m2)).expect("positive masses");
    SpecialPoints {
        lagrange: Shape::equilateral(1.0).expect("unit side"),
        round_inertia: round.normalized_c(),
    }
}

/// `Θ1 − Θ2` relative to `I` at a shape, for checking round inertia.
pub fn inertia_anisotropy(m: &MassTriple, s: &Shape) -> Result<f64> {
    let p = planar_coordinates(m, s)?;
    Ok((p.theta1 - p.theta2) / p.inertia())
}
