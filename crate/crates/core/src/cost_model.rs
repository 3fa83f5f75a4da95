//! Action sets, control-cost functions and the conjugate pair derived from
//! them.
//!
//! For a closed action set `A` with least element `θ_*` and a nondecreasing
//! cost `c` on `A`, the conjugate is `φ(y) = sup_{x∈A} { yx − c(x) }` and the
//! smallest maximizer is `ψ(y)`. Every downstream quantity (the Bellman
//! solution, the optimal policy, the rejection rate) sees the cost only
//! through this pair.
//!
//! The argmax is exact within each piece: smooth convex pieces contribute
//! their stationary point, linear and concave pieces contribute an endpoint,
//! and sampled tables contribute a vertex of their lower convex hull. Across
//! pieces, candidates within [`EPS_TIE`] of each other count as tied and the
//! smaller action wins, which makes `ψ` left-continuous.

use std::fmt;

use thiserror::Error;

use crate::numerics::{integrate, QuadError, QuadOptions};

/// Absolute tolerance for the normalization `c(θ_*) = 0`.
pub const EPS_VAL: f64 = 1e-9;
/// Absolute tolerance for action-set membership.
pub const EPS_MEM: f64 = 1e-9;
/// Relative tolerance under which two argmax candidates are tied.
pub const EPS_TIE: f64 = 1e-12;
/// Relative tolerance for `φ(y) = ∫₀^y ψ` consistency.
pub const EPS_INT: f64 = 1e-8;

/// A closed piece of the action set; `lo == hi` is an isolated point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
}

impl Segment {
    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }
}

/// The closed action set `A`: sorted, pairwise disjoint pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSet {
    pub segments: Vec<Segment>,
}

impl ActionSet {
    pub fn new(segments: Vec<Segment>) -> Self {
        Self { segments }
    }

    pub fn singleton(x: f64) -> Self {
        Self::new(vec![Segment::point(x)])
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Self::new(vec![Segment::interval(lo, hi)])
    }

    pub fn points(xs: &[f64]) -> Self {
        Self::new(xs.iter().map(|&x| Segment::point(x)).collect())
    }
}

/// Cost on one piece of the action set.
#[derive(Debug, Clone, PartialEq)]
pub enum CostPiece {
    /// `slope·x + intercept`
    Linear { slope: f64, intercept: f64 },
    /// `coeff·(x − shift)^exponent + offset`, for `x ≥ shift`
    Power { coeff: f64, exponent: f64, shift: f64, offset: f64 },
    /// `scale·(exp{alpha·(x − shift)} − 1) + offset`
    Exponential { alpha: f64, shift: f64, scale: f64, offset: f64 },
    /// Piecewise-linear interpolation of sampled `(xs, cs)`.
    Table { xs: Vec<f64>, cs: Vec<f64> },
}

impl CostPiece {
    pub fn constant(value: f64) -> Self {
        CostPiece::Linear { slope: 0.0, intercept: value }
    }

    /// The wireless energy cost `exp{α(x − θ_*)} − 1`.
    pub fn exponential(alpha: f64, shift: f64) -> Self {
        CostPiece::Exponential { alpha, shift, scale: 1.0, offset: 0.0 }
    }

    pub fn value(&self, x: f64) -> f64 {
        match *self {
            CostPiece::Linear { slope, intercept } => slope * x + intercept,
            CostPiece::Power { coeff, exponent, shift, offset } => {
                coeff * (x - shift).max(0.0).powf(exponent) + offset
            }
            CostPiece::Exponential { alpha, shift, scale, offset } => {
                scale * (alpha * (x - shift)).exp_m1() + offset
            }
            CostPiece::Table { ref xs, ref cs } => {
                let n = xs.len();
                if x <= xs[0] {
                    return cs[0];
                }
                if x >= xs[n - 1] {
                    return cs[n - 1];
                }
                let k = xs.partition_point(|&t| t <= x) - 1;
                let t = (x - xs[k]) / (xs[k + 1] - xs[k]);
                cs[k] + t * (cs[k + 1] - cs[k])
            }
        }
    }

    /// Derivative of the smooth families; `None` for linear-by-parts costs.
    fn derivative(&self, x: f64) -> Option<f64> {
        match *self {
            CostPiece::Power { coeff, exponent, shift, .. } if exponent > 1.0 => {
                Some(coeff * exponent * (x - shift).max(0.0).powf(exponent - 1.0))
            }
            CostPiece::Exponential { alpha, shift, scale, .. } => {
                Some(scale * alpha * (alpha * (x - shift)).exp())
            }
            _ => None,
        }
    }

    /// Inverse of the derivative for the smooth convex families.
    fn derivative_inverse(&self, y: f64) -> Option<f64> {
        match *self {
            CostPiece::Power { coeff, exponent, shift, .. } if exponent > 1.0 => {
                Some(shift + (y / (coeff * exponent)).powf(1.0 / (exponent - 1.0)))
            }
            CostPiece::Exponential { alpha, shift, scale, .. } => {
                Some(shift + (y / (scale * alpha)).ln() / alpha)
            }
            _ => None,
        }
    }

    fn params_finite(&self) -> bool {
        match self {
            CostPiece::Linear { slope, intercept } => slope.is_finite() && intercept.is_finite(),
            CostPiece::Power { coeff, exponent, shift, offset } => {
                [coeff, exponent, shift, offset].iter().all(|v| v.is_finite())
            }
            CostPiece::Exponential { alpha, shift, scale, offset } => {
                [alpha, shift, scale, offset].iter().all(|v| v.is_finite())
            }
            CostPiece::Table { xs, cs } => xs.iter().chain(cs).all(|v| v.is_finite()),
        }
    }
}

/// The cost function `c`, one piece per action-set segment.
#[derive(Debug, Clone, PartialEq)]
pub struct CostSpec {
    pub pieces: Vec<CostPiece>,
}

impl CostSpec {
    pub fn new(pieces: Vec<CostPiece>) -> Self {
        Self { pieces }
    }
}

/// Tail behaviour of `c` on an unbounded action set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailClass {
    Bounded,
    Exponential,
    SuperlinearPower,
    Linear,
    SublinearPower,
}

impl fmt::Display for TailClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TailClass::Bounded => "bounded action set",
            TailClass::Exponential => "exponential tail",
            TailClass::SuperlinearPower => "superlinear power tail",
            TailClass::Linear => "linear tail",
            TailClass::SublinearPower => "sublinear power tail",
        };
        f.write_str(s)
    }
}

/// One failed modelling assumption.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EmptyActionSet,
    MalformedActionSet(String),
    MalformedCost { piece: usize, reason: String },
    NotNondecreasing { piece: usize, reason: String },
    NotNormalized { value: f64 },
    NotPositive { piece: usize },
    GrowthConditionViolated { tail: TailClass },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyActionSet => f.write_str("action set is empty"),
            Violation::MalformedActionSet(why) => write!(f, "malformed action set: {why}"),
            Violation::MalformedCost { piece, reason } => {
                write!(f, "malformed cost on piece {piece}: {reason}")
            }
            Violation::NotNondecreasing { piece, reason } => {
                write!(f, "cost is not nondecreasing (piece {piece}): {reason}")
            }
            Violation::NotNormalized { value } => {
                write!(f, "cost is not normalized: c(least action) = {value:e}, expected 0")
            }
            Violation::NotPositive { piece } => write!(
                f,
                "cost must be strictly positive above the least action (fails on piece {piece})"
            ),
            Violation::GrowthConditionViolated { tail } => write!(
                f,
                "growth condition violated: inf{{c(x)/x : x in A, x >= y}} must increase to infinity \
                 on an unbounded action set, but the cost has a {tail}"
            ),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid model: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("action {x} is not in the action set")]
    NotInActionSet { x: f64 },
    #[error("conjugate quadrature failed: {0}")]
    Quadrature(#[from] QuadError),
}

fn join_violations(vs: &[Violation]) -> String {
    vs.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

impl ModelError {
    pub fn violations(&self) -> &[Violation] {
        match self {
            ModelError::Invalid(v) => v,
            _ => &[],
        }
    }
}

#[derive(Debug, Clone)]
struct Hull {
    xs: Vec<f64>,
    cs: Vec<f64>,
}

#[derive(Debug, Clone)]
struct ModelPiece {
    seg: Segment,
    cost: CostPiece,
    hull: Option<Hull>,
    // c′ at the ends of smooth convex pieces.
    d_lo: f64,
    d_hi: f64,
}

/// A validated model together with its conjugate pair `(φ, ψ)`.
///
/// Immutable after construction.
#[derive(Debug, Clone)]
pub struct CostModel {
    pieces: Vec<ModelPiece>,
    tail: TailClass,
    breakpoints: Vec<f64>,
    jumps: Vec<f64>,
    p0: f64,
    phi_argmin: f64,
}

/// Checks the modelling assumptions and builds the conjugate pair.
pub fn validate(action_set: &ActionSet, cost: &CostSpec) -> Result<CostModel, ModelError> {
    let mut violations = Vec::new();
    let segs = &action_set.segments;
    if segs.is_empty() {
        return Err(ModelError::Invalid(vec![Violation::EmptyActionSet]));
    }
    if segs.len() != cost.pieces.len() {
        return Err(ModelError::Invalid(vec![Violation::MalformedActionSet(format!(
            "{} domain pieces but {} cost pieces",
            segs.len(),
            cost.pieces.len()
        ))]));
    }
    for (k, s) in segs.iter().enumerate() {
        if !s.lo.is_finite() || s.hi.is_nan() || s.hi == f64::NEG_INFINITY {
            violations.push(Violation::MalformedActionSet(format!(
                "piece {k} has invalid bounds [{}, {}]",
                s.lo, s.hi
            )));
        } else if s.hi < s.lo {
            violations.push(Violation::MalformedActionSet(format!(
                "piece {k} has hi < lo ([{}, {}])",
                s.lo, s.hi
            )));
        } else if s.hi.is_infinite() && k + 1 != segs.len() {
            violations.push(Violation::MalformedActionSet(format!(
                "only the last piece may be unbounded (piece {k})"
            )));
        }
        if k > 0 && !(s.lo > segs[k - 1].hi) {
            violations.push(Violation::MalformedActionSet(format!(
                "pieces {} and {k} overlap or are out of order",
                k - 1
            )));
        }
    }
    if !violations.is_empty() {
        return Err(ModelError::Invalid(violations));
    }

    for (k, (s, c)) in segs.iter().zip(&cost.pieces).enumerate() {
        check_piece(k, s, c, &mut violations);
    }
    if !violations.is_empty() {
        return Err(ModelError::Invalid(violations));
    }

    for k in 1..segs.len() {
        let left = cost.pieces[k - 1].value(segs[k - 1].hi);
        let right = cost.pieces[k].value(segs[k].lo);
        if right < left - EPS_VAL {
            violations.push(Violation::NotNondecreasing {
                piece: k,
                reason: format!("c drops from {left} to {right} across the gap"),
            });
        }
    }

    let c_min = cost.pieces[0].value(segs[0].lo);
    if c_min.abs() > EPS_VAL {
        violations.push(Violation::NotNormalized { value: c_min });
    }

    let first = &segs[0];
    if !first.is_point() && !strictly_increasing_at_lo(&cost.pieces[0]) {
        violations.push(Violation::NotPositive { piece: 0 });
    }
    for (k, (seg, piece)) in segs.iter().zip(&cost.pieces).enumerate().skip(1) {
        if piece.value(seg.lo) <= 0.0 {
            violations.push(Violation::NotPositive { piece: k });
        }
    }

    let tail = tail_class(segs.last().unwrap(), cost.pieces.last().unwrap());
    if matches!(tail, TailClass::Linear | TailClass::SublinearPower) {
        violations.push(Violation::GrowthConditionViolated { tail });
    }

    if !violations.is_empty() {
        return Err(ModelError::Invalid(violations));
    }

    let pieces = segs
        .iter()
        .zip(&cost.pieces)
        .map(|(s, c)| ModelPiece {
            seg: *s,
            cost: c.clone(),
            hull: match c {
                CostPiece::Table { xs, cs } => Some(lower_hull(xs, cs)),
                _ => None,
            },
            d_lo: c.derivative(s.lo).unwrap_or(f64::NAN),
            d_hi: if s.hi.is_finite() { c.derivative(s.hi).unwrap_or(f64::NAN) } else { f64::INFINITY },
        })
        .collect();

    Ok(CostModel::assemble(pieces, tail))
}

fn check_piece(k: usize, s: &Segment, c: &CostPiece, out: &mut Vec<Violation>) {
    let malformed = |reason: String| Violation::MalformedCost { piece: k, reason };
    if !c.params_finite() {
        out.push(malformed("parameters must be finite".into()));
        return;
    }
    match c {
        CostPiece::Linear { slope, .. } => {
            if *slope < 0.0 && !s.is_point() {
                out.push(Violation::NotNondecreasing {
                    piece: k,
                    reason: format!("negative slope {slope}"),
                });
            }
        }
        CostPiece::Power { coeff, exponent, shift, .. } => {
            if *exponent <= 0.0 {
                out.push(malformed(format!("exponent must be positive, got {exponent}")));
            }
            if s.lo < *shift - EPS_MEM {
                out.push(malformed(format!("piece starts at {} below the shift {shift}", s.lo)));
            }
            if *coeff < 0.0 && !s.is_point() {
                out.push(Violation::NotNondecreasing {
                    piece: k,
                    reason: format!("negative coefficient {coeff}"),
                });
            }
        }
        CostPiece::Exponential { alpha, scale, .. } => {
            if *alpha <= 0.0 {
                out.push(malformed(format!("alpha must be positive, got {alpha}")));
            }
            if *scale < 0.0 && !s.is_point() {
                out.push(Violation::NotNondecreasing {
                    piece: k,
                    reason: format!("negative scale {scale}"),
                });
            }
        }
        CostPiece::Table { xs, cs } => {
            if xs.len() != cs.len() || xs.len() < 2 {
                out.push(malformed("table needs at least two (x, c) samples of equal length".into()));
                return;
            }
            if s.is_point() || s.hi.is_infinite() {
                out.push(malformed("a table cost needs a bounded, non-degenerate interval".into()));
                return;
            }
            if xs.windows(2).any(|w| !(w[1] > w[0])) {
                out.push(malformed("table abscissae must be strictly increasing".into()));
            }
            if (xs[0] - s.lo).abs() > EPS_MEM || (xs[xs.len() - 1] - s.hi).abs() > EPS_MEM {
                out.push(malformed(format!(
                    "table spans [{}, {}] but the piece is [{}, {}]",
                    xs[0],
                    xs[xs.len() - 1],
                    s.lo,
                    s.hi
                )));
            }
            if cs.windows(2).any(|w| w[1] < w[0]) {
                out.push(Violation::NotNondecreasing {
                    piece: k,
                    reason: "table values decrease".into(),
                });
            }
        }
    }
}

fn strictly_increasing_at_lo(c: &CostPiece) -> bool {
    match c {
        CostPiece::Linear { slope, .. } => *slope > 0.0,
        CostPiece::Power { coeff, .. } => *coeff > 0.0,
        CostPiece::Exponential { scale, .. } => *scale > 0.0,
        CostPiece::Table { cs, .. } => cs[1] > cs[0],
    }
}

fn tail_class(s: &Segment, c: &CostPiece) -> TailClass {
    if s.hi.is_finite() {
        return TailClass::Bounded;
    }
    match c {
        CostPiece::Exponential { .. } => TailClass::Exponential,
        CostPiece::Power { exponent, .. } if *exponent > 1.0 => TailClass::SuperlinearPower,
        CostPiece::Power { exponent, .. } if *exponent == 1.0 => TailClass::Linear,
        CostPiece::Power { .. } => TailClass::SublinearPower,
        CostPiece::Linear { .. } | CostPiece::Table { .. } => TailClass::Linear,
    }
}

/// Lower convex hull of sampled points sorted by abscissa.
fn lower_hull(xs: &[f64], cs: &[f64]) -> Hull {
    let mut hx: Vec<f64> = Vec::with_capacity(xs.len());
    let mut hc: Vec<f64> = Vec::with_capacity(xs.len());
    for (&x, &c) in xs.iter().zip(cs) {
        while hx.len() >= 2 {
            let n = hx.len();
            let cross = (hx[n - 1] - hx[n - 2]) * (c - hc[n - 2]) - (hc[n - 1] - hc[n - 2]) * (x - hx[n - 2]);
            if cross <= 0.0 {
                hx.pop();
                hc.pop();
            } else {
                break;
            }
        }
        hx.push(x);
        hc.push(c);
    }
    Hull { xs: hx, cs: hc }
}

#[inline]
fn beats(candidate: f64, incumbent: f64) -> bool {
    candidate - incumbent > EPS_TIE * candidate.abs().max(incumbent.abs()).max(1.0)
}

impl CostModel {
    fn assemble(pieces: Vec<ModelPiece>, tail: TailClass) -> Self {
        let mut model = CostModel {
            pieces,
            tail,
            breakpoints: Vec::new(),
            jumps: Vec::new(),
            p0: f64::INFINITY,
            phi_argmin: 0.0,
        };
        model.breakpoints = model.find_breakpoints();
        model.jumps = model
            .breakpoints
            .iter()
            .copied()
            .filter(|&y| {
                let below = model.psi(y * (1.0 - 1e-10));
                let above = model.psi(y * (1.0 + 1e-10));
                (above - below).abs() > 1e-6 * above.abs().max(1.0)
            })
            .collect();
        model.p0 = model.find_p0();
        model.phi_argmin = model.find_phi_argmin();
        model
    }

    /// Least action `θ_*`.
    pub fn theta_min(&self) -> f64 {
        self.pieces[0].seg.lo
    }

    /// `sup A`; `+∞` when the action set is unbounded.
    pub fn theta_max(&self) -> f64 {
        self.pieces.last().unwrap().seg.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.theta_max().is_finite()
    }

    pub fn is_singleton(&self) -> bool {
        self.pieces.len() == 1 && self.pieces[0].seg.is_point()
    }

    pub fn tail(&self) -> TailClass {
        self.tail
    }

    pub fn action_set(&self) -> ActionSet {
        ActionSet::new(self.pieces.iter().map(|p| p.seg).collect())
    }

    pub fn cost_spec(&self) -> CostSpec {
        CostSpec::new(self.pieces.iter().map(|p| p.cost.clone()).collect())
    }

    fn piece_of(&self, x: f64, tol: f64) -> Option<&ModelPiece> {
        let k = self.pieces.partition_point(|p| p.seg.hi + tol < x);
        self.pieces.get(k).filter(|p| p.seg.contains(x, tol))
    }

    pub fn contains(&self, x: f64) -> bool {
        x.is_finite() && self.piece_of(x, EPS_MEM).is_some()
    }

    /// `c(x)` for an action within [`EPS_MEM`] of the action set.
    pub fn eval_cost(&self, x: f64) -> Result<f64, ModelError> {
        if !x.is_finite() {
            return Err(ModelError::NotInActionSet { x });
        }
        let piece = self.piece_of(x, EPS_MEM).ok_or(ModelError::NotInActionSet { x })?;
        Ok(piece.cost.value(x.clamp(piece.seg.lo, piece.seg.hi)).max(0.0))
    }

    /// Cost of an action already known to be admissible.
    pub(crate) fn cost_unchecked(&self, x: f64) -> f64 {
        let piece = match self.piece_of(x, EPS_MEM) {
            Some(p) => p,
            None => &self.pieces[self.pieces.partition_point(|p| p.seg.hi < x).min(self.pieces.len() - 1)],
        };
        piece.cost.value(x.clamp(piece.seg.lo, piece.seg.hi)).max(0.0)
    }

    /// Best `(x, yx − c(x))` on one piece, ties going to the smaller `x`.
    fn piece_best(&self, piece: &ModelPiece, y: f64) -> (f64, f64) {
        let Segment { lo, hi } = piece.seg;
        let c = &piece.cost;
        let at = |x: f64| (x, y * x - c.value(x));
        if piece.seg.is_point() {
            return at(lo);
        }
        let pick = |a: (f64, f64), b: (f64, f64)| if beats(b.1, a.1) { b } else { a };
        match c {
            CostPiece::Linear { slope, .. } => {
                if y > *slope && hi.is_finite() {
                    pick(at(lo), at(hi))
                } else {
                    at(lo)
                }
            }
            CostPiece::Power { exponent, .. } if *exponent <= 1.0 => {
                if hi.is_finite() {
                    pick(at(lo), at(hi))
                } else {
                    at(lo)
                }
            }
            CostPiece::Power { .. } | CostPiece::Exponential { .. } => {
                if y <= piece.d_lo {
                    return at(lo);
                }
                if y >= piece.d_hi {
                    return at(hi);
                }
                let x = c.derivative_inverse(y).unwrap().clamp(lo, hi);
                at(x)
            }
            CostPiece::Table { .. } => {
                let hull = piece.hull.as_ref().unwrap();
                let mut best = (hull.xs[0], y * hull.xs[0] - hull.cs[0]);
                for (&x, &cv) in hull.xs.iter().zip(&hull.cs).skip(1) {
                    let v = y * x - cv;
                    if beats(v, best.1) {
                        best = (x, v);
                    }
                }
                best
            }
        }
    }

    /// Index of the piece holding `ψ(y)` together with `(ψ(y), φ(y))`.
    fn argmax(&self, y: f64) -> (usize, f64, f64) {
        let y = y.max(0.0);
        if self.pieces.len() == 1 {
            let (x, v) = self.piece_best(&self.pieces[0], y);
            return (0, x, v);
        }
        let mut best = (0, self.piece_best(&self.pieces[0], y));
        for (k, piece) in self.pieces.iter().enumerate().skip(1) {
            let cand = self.piece_best(piece, y);
            if beats(cand.1, best.1 .1) {
                best = (k, cand);
            }
        }
        (best.0, best.1 .0, best.1 .1)
    }

    /// Smallest maximizer `ψ(y)` of `yx − c(x)` over the action set.
    pub fn psi(&self, y: f64) -> f64 {
        if let [piece] = self.pieces.as_slice() {
            if matches!(piece.cost, CostPiece::Exponential { .. })
                || matches!(piece.cost, CostPiece::Power { exponent, .. } if exponent > 1.0)
            {
                // Single smooth convex piece: no candidate values needed.
                let y = y.max(0.0);
                if y <= piece.d_lo {
                    return piece.seg.lo;
                }
                if y >= piece.d_hi {
                    return piece.seg.hi;
                }
                return piece.cost.derivative_inverse(y).unwrap().clamp(piece.seg.lo, piece.seg.hi);
            }
        }
        self.argmax(y).1
    }

    /// Conjugate `φ(y) = sup_x { yx − c(x) }`, evaluated at the maximizer.
    pub fn phi(&self, y: f64) -> f64 {
        self.argmax(y).2
    }

    /// `φ(y)` recomputed as `∫₀^y ψ(u) du` by adaptive quadrature.
    pub fn phi_by_quadrature(&self, y: f64) -> Result<f64, ModelError> {
        // The integral can cancel to near zero when θ_* < 0, so the
        // tolerance is also measured against ∫|ψ|.
        let scale = y.abs() * self.psi(0.0).abs().max(self.psi(y).abs());
        let opts = QuadOptions { abs_tol: 1e-13 * scale, ..QuadOptions::with_rel_tol(1e-13) };
        Ok(integrate(|u| self.psi(u), 0.0, y, &self.breakpoints, opts)?)
    }

    /// `φ_*(p) = −min_{[0,p]} φ`.
    pub fn phi_star(&self, p: f64) -> f64 {
        (-self.phi(p.min(self.phi_argmin))).max(0.0)
    }

    /// Location of the minimum of `φ` over `[0, ∞)`; `+∞` if `φ` keeps
    /// decreasing.
    pub fn phi_argmin(&self) -> f64 {
        self.phi_argmin
    }

    /// `p0 = sup{y ≥ 0 : ψ(y) = θ_*}`.
    pub fn p_zero(&self) -> f64 {
        self.p0
    }

    /// Every `y > 0` where `ψ` jumps or changes analytic form.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// The subset of [`Self::breakpoints`] where `ψ` is discontinuous.
    pub fn jumps(&self) -> &[f64] {
        &self.jumps
    }

    fn find_breakpoints(&self) -> Vec<f64> {
        let mut intra: Vec<(usize, f64)> = Vec::new();
        for (k, piece) in self.pieces.iter().enumerate() {
            let Segment { lo, hi } = piece.seg;
            if piece.seg.is_point() {
                continue;
            }
            let c = &piece.cost;
            match c {
                CostPiece::Linear { slope, .. } => intra.push((k, *slope)),
                CostPiece::Power { exponent, .. } if *exponent <= 1.0 => {
                    if hi.is_finite() {
                        intra.push((k, (c.value(hi) - c.value(lo)) / (hi - lo)));
                    }
                }
                CostPiece::Power { .. } | CostPiece::Exponential { .. } => {
                    intra.push((k, c.derivative(lo).unwrap()));
                    if hi.is_finite() {
                        intra.push((k, c.derivative(hi).unwrap()));
                    }
                }
                CostPiece::Table { .. } => {
                    let h = piece.hull.as_ref().unwrap();
                    for i in 0..h.xs.len() - 1 {
                        intra.push((k, (h.cs[i + 1] - h.cs[i]) / (h.xs[i + 1] - h.xs[i])));
                    }
                }
            }
        }
        intra.retain(|&(_, y)| y > 0.0 && y.is_finite());

        // Beyond this level the last piece strictly beats every earlier one.
        let mut y_switch: f64 = 0.0;
        for k in 1..self.pieces.len() {
            let gap = self.pieces[k].seg.lo - self.pieces[k - 1].seg.hi;
            y_switch = y_switch.max(self.pieces[k].cost.value(self.pieces[k].seg.lo) / gap);
        }

        let mut samples: Vec<f64> = intra.iter().map(|&(_, y)| y).collect();
        if self.pieces.len() > 1 {
            let top = 1.01 * y_switch + 1.0;
            samples.extend((0..=64).map(|i| top * i as f64 / 64.0));
        }
        samples.push(0.0);
        samples.sort_by(f64::total_cmp);
        samples.dedup();

        let active = |y: f64| self.argmax(y).0;
        let mut switches = Vec::new();
        let mut used = vec![false; self.pieces.len()];
        for w in samples.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (ka, kb) = (active(a), active(b));
            used[ka] = true;
            used[kb] = true;
            if ka != kb {
                locate_switches(&active, a, ka, b, kb, &mut switches);
            }
        }

        let mut out: Vec<f64> = intra
            .into_iter()
            .filter(|&(k, _)| used[k])
            .map(|(_, y)| y)
            .chain(switches)
            .collect();
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs());
        out
    }

    fn find_p0(&self) -> f64 {
        let theta = self.theta_min();
        if self.is_singleton() {
            return f64::INFINITY;
        }
        let at_least = |y: f64| self.psi(y) == theta;
        let mut hi = 1.0;
        let mut guard = 0;
        while at_least(hi) {
            hi *= 2.0;
            guard += 1;
            if guard > 2000 || !hi.is_finite() {
                return f64::INFINITY;
            }
        }
        bisect_last_true(at_least, 0.0, hi)
    }

    fn find_phi_argmin(&self) -> f64 {
        if self.theta_min() >= 0.0 {
            return 0.0;
        }
        if self.theta_max() <= 0.0 {
            return f64::INFINITY;
        }
        let nonpositive = |y: f64| self.psi(y) <= 0.0;
        let mut hi = 1.0;
        while nonpositive(hi) {
            hi *= 2.0;
            if !hi.is_finite() {
                return f64::INFINITY;
            }
        }
        bisect_last_true(nonpositive, 0.0, hi)
    }

    /// Lower convex minorant of a piecewise-linear model, as a single table
    /// cost on `[θ_*, sup A]`. `None` if any piece is smooth or `A` is
    /// unbounded.
    pub fn convex_minorant(&self) -> Option<CostModel> {
        if !self.is_bounded() {
            return None;
        }
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for piece in &self.pieces {
            let Segment { lo, hi } = piece.seg;
            match &piece.cost {
                _ if piece.seg.is_point() => pts.push((lo, piece.cost.value(lo))),
                CostPiece::Linear { .. } => {
                    pts.push((lo, piece.cost.value(lo)));
                    pts.push((hi, piece.cost.value(hi)));
                }
                CostPiece::Table { xs, cs } => pts.extend(xs.iter().copied().zip(cs.iter().copied())),
                _ => return None,
            }
        }
        if self.is_singleton() {
            return Some(self.clone());
        }
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let cs: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let hull = lower_hull(&xs, &cs);
        let spec = CostSpec::new(vec![CostPiece::Table { xs: hull.xs, cs: hull.cs }]);
        validate(&ActionSet::interval(self.theta_min(), self.theta_max()), &spec).ok()
    }

    /// Human-readable list of the checked assumptions.
    pub fn assumption_report(&self) -> Vec<String> {
        let growth = match self.tail {
            TailClass::Bounded => "growth condition: not required (bounded action set)".to_string(),
            t => format!("growth condition: satisfied ({t})"),
        };
        vec![
            format!(
                "action set: {} piece(s), least element {}, supremum {}",
                self.pieces.len(),
                self.theta_min(),
                self.theta_max()
            ),
            "cost nondecreasing on the action set: satisfied".to_string(),
            "normalization c(least action) = 0: satisfied".to_string(),
            "cost strictly positive above the least action: satisfied".to_string(),
            growth,
        ]
    }
}

/// Recursively pins down every change of the monotone piece index between
/// `a` and `b`.
fn locate_switches(
    active: &impl Fn(f64) -> usize,
    mut a: f64,
    ka: usize,
    mut b: f64,
    kb: usize,
    out: &mut Vec<f64>,
) {
    for _ in 0..2000 {
        if b - a <= 4.0 * f64::EPSILON * b.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        let m = 0.5 * (a + b);
        let km = active(m);
        if km != ka && km != kb {
            locate_switches(active, a, ka, m, km, out);
            locate_switches(active, m, km, b, kb, out);
            return;
        }
        if km == ka {
            a = m;
        } else {
            b = m;
        }
    }
    // Last level still held by the left piece, so ψ is left-continuous there.
    out.push(a);
}

/// Sup of the set where a monotone predicate holds, given `pred(lo)` and
/// `!pred(hi)`.
fn bisect_last_true(pred: impl Fn(f64) -> bool, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..2200 {
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs() || hi < 1e-300 {
            break;
        }
        let m = 0.5 * (lo + hi);
        if pred(m) {
            lo = m;
        } else {
            hi = m;
        }
    }
    lo
}
