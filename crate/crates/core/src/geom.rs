//! Exact planar primitives shared by the trapezoid and Delaunay modules.
//!
//! Coordinates are integers capped at |x|, |y| <= 2^20 so every predicate —
//! orientation, in-circle, segment intersection — evaluates exactly in
//! 128-bit intermediate arithmetic. There are no tolerance parameters
//! anywhere. Rational points ([`RatPoint`]) carry intersection coordinates
//! exactly; their comparisons stay within i128 because numerators are bounded
//! by 2^64 and denominators by 2^43.
//!
//! Degenerate inputs are not silently perturbed here: predicates report exact
//! zeros and the structural modules break ties lexicographically by
//! (x, y, id) where their contracts require general position.

use num_integer::Integer;
use std::cmp::Ordering;
use std::fmt;
use thiserror::Error;

/// Coordinate magnitude cap: keeps the in-circle determinant within i128.
pub const COORD_CAP: i64 = 1 << 20;

#[derive(Debug, Error, PartialEq)]
pub enum GeomError {
    #[error("coordinate {0} exceeds cap {COORD_CAP}")]
    CoordinateCap(i64),
    #[error("degenerate segment: endpoints coincide at ({0}, {1})")]
    DegenerateSegment(i64, i64),
    #[error("in_circle requires non-collinear (a, b, c)")]
    CollinearCircle,
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Exact integer point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub x: i64,
    pub y: i64,
}

impl Point {
    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    pub fn checked(x: i64, y: i64) -> Result<Self, GeomError> {
        for c in [x, y] {
            if c.abs() > COORD_CAP {
                return Err(GeomError::CoordinateCap(c));
            }
        }
        Ok(Self { x, y })
    }
}

pub fn pt(x: i64, y: i64) -> Point {
    Point::new(x, y)
}

/// Line segment with lexicographically ordered endpoints (`a < b`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
    pub id: u32,
}

impl Segment {
    pub fn new(p: Point, q: Point, id: u32) -> Result<Self, GeomError> {
        if p == q {
            return Err(GeomError::DegenerateSegment(p.x, p.y));
        }
        for c in [p.x, p.y, q.x, q.y] {
            if c.abs() > COORD_CAP {
                return Err(GeomError::CoordinateCap(c));
            }
        }
        let (a, b) = if (p.x, p.y) <= (q.x, q.y) { (p, q) } else { (q, p) };
        Ok(Self { a, b, id })
    }

    /// True for segments with zero x-extent; the trapezoid builder rejects
    /// these (the shear tie-break cannot orient them).
    pub fn is_vertical(&self) -> bool {
        self.a.x == self.b.x
    }
}

/// Sign of the signed area of triangle (p, q, r): +1 for counterclockwise,
/// -1 for clockwise, 0 for collinear. Exact.
pub fn orient(p: Point, q: Point, r: Point) -> i32 {
    let v = (q.x as i128 - p.x as i128) * (r.y as i128 - p.y as i128)
        - (q.y as i128 - p.y as i128) * (r.x as i128 - p.x as i128);
    sign(v)
}

fn sign(v: i128) -> i32 {
    match v.cmp(&0) {
        Ordering::Less => -1,
        Ordering::Equal => 0,
        Ordering::Greater => 1,
    }
}

/// Raw in-circle determinant sign: positive iff `d` lies strictly inside the
/// circle through counterclockwise (a, b, c). Exact; rejects collinear
/// (a, b, c).
pub fn in_circle(a: Point, b: Point, c: Point, d: Point) -> Result<i32, GeomError> {
    if orient(a, b, c) == 0 {
        return Err(GeomError::CollinearCircle);
    }
    Ok(sign(in_circle_det(a, b, c, d)))
}

pub(crate) fn in_circle_det(a: Point, b: Point, c: Point, d: Point) -> i128 {
    let row = |p: Point| {
        let x = p.x as i128 - d.x as i128;
        let y = p.y as i128 - d.y as i128;
        (x, y, x * x + y * y)
    };
    let (ax, ay, al) = row(a);
    let (bx, by, bl) = row(b);
    let (cx, cy, cl) = row(c);
    ax * (by * cl - bl * cy) - ay * (bx * cl - bl * cx) + al * (bx * cy - by * cx)
}

/// In-circle test against a rational query point `(xn/den, yn/den)`.
/// Requires `den > 0` and `den * COORD_CAP <= 2^25` so the scaled determinant
/// stays exact; intended for small rationals in tests and audits.
pub fn in_circle_rat(
    a: Point,
    b: Point,
    c: Point,
    xn: i64,
    yn: i64,
    den: i64,
) -> Result<i32, GeomError> {
    assert!(den > 0, "denominator must be positive");
    assert!(
        den.checked_mul(COORD_CAP).map_or(false, |v| v <= 1 << 25),
        "rational query too large for exact evaluation"
    );
    if orient(a, b, c) == 0 {
        return Err(GeomError::CollinearCircle);
    }
    // Scale all coordinates by den: the determinant sign is unchanged.
    let row = |p: Point| {
        let x = p.x as i128 * den as i128 - xn as i128;
        let y = p.y as i128 * den as i128 - yn as i128;
        (x, y, x * x + y * y)
    };
    let (ax, ay, al) = row(a);
    let (bx, by, bl) = row(b);
    let (cx, cy, cl) = row(c);
    Ok(sign(
        ax * (by * cl - bl * cy) - ay * (bx * cl - bl * cx) + al * (bx * cy - by * cx),
    ))
}

/// Exact rational point: `(xn/den, yn/den)` with `den > 0`, stored reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RatPoint {
    pub xn: i128,
    pub yn: i128,
    pub den: i128,
}

impl RatPoint {
    pub fn new(xn: i128, yn: i128, den: i128) -> Self {
        assert!(den != 0);
        let (xn, yn, den) = if den < 0 { (-xn, -yn, -den) } else { (xn, yn, den) };
        let g = xn.abs().gcd(&yn.abs()).gcd(&den);
        if g > 1 {
            Self {
                xn: xn / g,
                yn: yn / g,
                den: den / g,
            }
        } else {
            Self { xn, yn, den }
        }
    }

    pub fn from_point(p: Point) -> Self {
        Self {
            xn: p.x as i128,
            yn: p.y as i128,
            den: 1,
        }
    }

    /// Lexicographic (x, y) comparison — the shear order used for trapezoid
    /// events.
    pub fn cmp_xy(&self, other: &RatPoint) -> Ordering {
        (self.xn * other.den)
            .cmp(&(other.xn * self.den))
            .then_with(|| (self.yn * other.den).cmp(&(other.yn * self.den)))
    }

    pub fn cmp_x(&self, other: &RatPoint) -> Ordering {
        (self.xn * other.den).cmp(&(other.xn * self.den))
    }

    pub fn as_f64(&self) -> (f64, f64) {
        (
            self.xn as f64 / self.den as f64,
            self.yn as f64 / self.den as f64,
        )
    }
}

impl fmt::Display for RatPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}/{}, {}/{})", self.xn, self.den, self.yn, self.den)
    }
}

/// Sign of the cross product (b - a) x (q - a) for a rational query q:
/// +1 iff q lies strictly left of the directed line a -> b. Exact.
pub fn orient_rat(a: Point, b: Point, q: &RatPoint) -> i32 {
    let abx = (b.x - a.x) as i128;
    let aby = (b.y - a.y) as i128;
    let aqx = q.xn - a.x as i128 * q.den;
    let aqy = q.yn - a.y as i128 * q.den;
    sign(abx * aqy - aby * aqx)
}

/// Exact classification of how two segments meet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SegIntersection {
    /// Interiors cross at a single point.
    Proper(RatPoint),
    /// The segments share an endpoint (and are not collinear-overlapping).
    SharedEndpoint,
    /// An endpoint of one lies in the interior of the other.
    EndpointTouch,
    /// Collinear with a shared stretch of positive length.
    Overlap,
}

/// Classifies the intersection of `s` and `t`, or `None` if disjoint.
/// Symmetric in its arguments.
pub fn seg_intersect(s: &Segment, t: &Segment) -> Option<SegIntersection> {
    let d1 = orient(t.a, t.b, s.a);
    let d2 = orient(t.a, t.b, s.b);
    let d3 = orient(s.a, s.b, t.a);
    let d4 = orient(s.a, s.b, t.b);

    if d1 == 0 && d2 == 0 {
        // Collinear lines: reduce to 1-D overlap along the dominant axis.
        let key = |p: Point| {
            if s.a.x != s.b.x {
                p.x
            } else {
                p.y
            }
        };
        let (s0, s1) = (key(s.a).min(key(s.b)), key(s.a).max(key(s.b)));
        let (t0, t1) = (key(t.a).min(key(t.b)), key(t.a).max(key(t.b)));
        let lo = s0.max(t0);
        let hi = s1.min(t1);
        return match lo.cmp(&hi) {
            Ordering::Less => Some(SegIntersection::Overlap),
            Ordering::Equal => Some(SegIntersection::SharedEndpoint),
            Ordering::Greater => None,
        };
    }

    if d1 * d2 > 0 || d3 * d4 > 0 {
        return None;
    }

    if d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0 {
        // Strict straddle both ways: proper crossing.
        return Some(SegIntersection::Proper(crossing_point(s, t)));
    }

    // Some endpoint lies exactly on the other segment's line; decide whether
    // it is a shared endpoint, an interior touch, or no contact at all.
    let shared = s.a == t.a || s.a == t.b || s.b == t.a || s.b == t.b;
    if shared {
        return Some(SegIntersection::SharedEndpoint);
    }
    let on = |d: i32, p: Point, seg: &Segment| d == 0 && between(seg.a, seg.b, p);
    if on(d1, s.a, t) || on(d2, s.b, t) || on(d3, t.a, s) || on(d4, t.b, s) {
        return Some(SegIntersection::EndpointTouch);
    }
    None
}

/// Is `p` strictly between `a` and `b` on their common line?
fn between(a: Point, b: Point, p: Point) -> bool {
    if a.x != b.x {
        (a.x.min(b.x) < p.x) && (p.x < a.x.max(b.x))
    } else {
        (a.y.min(b.y) < p.y) && (p.y < a.y.max(b.y))
    }
}

/// Exact crossing point of two properly crossing segments.
fn crossing_point(s: &Segment, t: &Segment) -> RatPoint {
    let rx = (s.b.x - s.a.x) as i128;
    let ry = (s.b.y - s.a.y) as i128;
    let qx = (t.b.x - t.a.x) as i128;
    let qy = (t.b.y - t.a.y) as i128;
    let den = rx * qy - ry * qx;
    debug_assert!(den != 0);
    let wx = (t.a.x - s.a.x) as i128;
    let wy = (t.a.y - s.a.y) as i128;
    let u = wx * qy - wy * qx; // parameter along s, scaled by den
    RatPoint::new(
        s.a.x as i128 * den + u * rx,
        s.a.y as i128 * den + u * ry,
        den,
    )
}

/// O(n²) all-pairs classification; the ground truth for the intersection
/// count m. Returns the proper crossings as (id_i, id_j, point).
pub fn brute_intersections(segs: &[Segment]) -> Vec<(u32, u32, RatPoint)> {
    let mut out = Vec::new();
    for i in 0..segs.len() {
        for j in i + 1..segs.len() {
            if let Some(SegIntersection::Proper(p)) = seg_intersect(&segs[i], &segs[j]) {
                out.push((segs[i].id, segs[j].id, p));
            }
        }
    }
    out
}

/// Objects parsed from the segment/point file format: one object per line,
/// `PT x y` or `SEG ax ay bx by` with integer coordinates, `#` comments.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct GeomFile {
    pub points: Vec<Point>,
    pub segments: Vec<Segment>,
}

pub fn parse_objects(text: &str) -> Result<GeomFile, GeomError> {
    let mut out = GeomFile::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut fields = body.split_whitespace();
        let kind = fields.next().unwrap();
        let mut nums = Vec::new();
        for f in fields {
            nums.push(f.parse::<i64>().map_err(|e| GeomError::Parse {
                line,
                msg: format!("bad integer {f:?}: {e}"),
            })?);
        }
        match (kind, nums.as_slice()) {
            ("PT", [x, y]) => out
                .points
                .push(Point::checked(*x, *y).map_err(|e| GeomError::Parse {
                    line,
                    msg: e.to_string(),
                })?),
            ("SEG", [ax, ay, bx, by]) => {
                let id = out.segments.len() as u32;
                let seg = Segment::new(pt(*ax, *ay), pt(*bx, *by), id).map_err(|e| {
                    GeomError::Parse {
                        line,
                        msg: e.to_string(),
                    }
                })?;
                out.segments.push(seg);
            }
            _ => {
                return Err(GeomError::Parse {
                    line,
                    msg: format!("expected `PT x y` or `SEG ax ay bx by`, got {body:?}"),
                })
            }
        }
    }
    Ok(out)
}

pub fn format_objects(file: &GeomFile) -> String {
    let mut s = String::new();
    for p in &file.points {
        s.push_str(&format!("PT {} {}\n", p.x, p.y));
    }
    for seg in &file.segments {
        s.push_str(&format!(
            "SEG {} {} {} {}\n",
            seg.a.x, seg.a.y, seg.b.x, seg.b.y
        ));
    }
    s
}
