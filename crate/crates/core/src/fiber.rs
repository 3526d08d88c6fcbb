//! Fiber maps on [0,1].
//!
//! `f1` is always the reflection `x -> 1-x`; the model choice only selects
//! `f0`. Points are carried as [`FiberPoint`]s, i.e. a side flag plus the
//! distance to the nearer endpoint, so that orbits creeping towards 0 or 1
//! keep full relative precision.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Result, SkewError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// A point of [0,1] stored as (side, distance to the nearer endpoint).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberPoint {
    pub side: Side,
    pub dist: f64,
}

impl FiberPoint {
    pub fn new(x: f64) -> Self {
        if x <= 0.5 {
            FiberPoint { side: Side::Left, dist: x.max(0.0) }
        } else {
            FiberPoint { side: Side::Right, dist: (1.0 - x).max(0.0) }
        }
    }

    pub fn left(d: f64) -> Self {
        FiberPoint { side: Side::Left, dist: d }.normalized()
    }

    pub fn right(d: f64) -> Self {
        FiberPoint { side: Side::Right, dist: d }.normalized()
    }

    pub const ZERO: FiberPoint = FiberPoint { side: Side::Left, dist: 0.0 };
    pub const ONE: FiberPoint = FiberPoint { side: Side::Right, dist: 0.0 };

    fn normalized(self) -> Self {
        let d = self.dist.max(0.0);
        if d > 0.5 {
            FiberPoint { side: self.side.flip(), dist: 1.0 - d }
        } else {
            FiberPoint { side: self.side, dist: d }
        }
    }

    pub fn value(&self) -> f64 {
        match self.side {
            Side::Left => self.dist,
            Side::Right => 1.0 - self.dist,
        }
    }

    /// `1 - x`, accurate near 1.
    pub fn complement(&self) -> f64 {
        match self.side {
            Side::Left => 1.0 - self.dist,
            Side::Right => self.dist,
        }
    }

    pub fn reflect(self) -> Self {
        FiberPoint { side: self.side.flip(), dist: self.dist }
    }

    pub fn is_boundary(&self) -> bool {
        self.dist == 0.0
    }

    /// `log(x/(1-x))`, monotone in `x` and accurate at both ends.
    pub fn logit(&self) -> f64 {
        let l = self.dist.ln() - (-self.dist).ln_1p();
        match self.side {
            Side::Left => l,
            Side::Right => -l,
        }
    }

    pub fn from_logit(s: f64) -> Self {
        if s <= 0.0 {
            let e = s.exp();
            FiberPoint { side: Side::Left, dist: e / (1.0 + e) }
        } else {
            FiberPoint { side: Side::Right, dist: 1.0 / (1.0 + s.exp()) }
        }
    }

    /// Signed difference `self - other`, computed from the accurate sides.
    pub fn minus(&self, other: &FiberPoint) -> f64 {
        match (self.side, other.side) {
            (Side::Left, Side::Left) => self.dist - other.dist,
            (Side::Right, Side::Right) => other.dist - self.dist,
            _ => self.value() - other.value(),
        }
    }
}

/// Parameters identifying a fiber model; this is what configs and reports carry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    /// `f0'` piecewise linear through `knots`; the value of knot `free_knot`
    /// is solved so that `f0(1) = 1`.
    Pld { knots: Vec<[f64; 2]>, free_knot: usize },
    Mobius { beta: f64 },
    Arctan,
    /// `f0(x) = x + a x^2 (1-x)^2`.
    Quartic { a: f64 },
    /// A piecewise-linear-derivative map with cubic parabolic ends on
    /// `[0, width]` and `[1 - width, 1]`.
    Glued { knots: Vec<[f64; 2]>, free_knot: usize, width: f64 },
}

impl ModelSpec {
    pub fn pld_default() -> Self {
        ModelSpec::Pld { knots: default_pld_knots(), free_knot: 2 }
    }
}

pub fn default_pld_knots() -> Vec<[f64; 2]> {
    vec![[0.0, 1.05], [0.35, 1.0499], [0.45, f64::NAN], [0.9, 0.99], [1.0, 2.0 / 3.0]]
}

#[derive(Debug, Clone)]
struct Pld {
    xs: Vec<f64>,
    ds: Vec<f64>,
    slopes: Vec<f64>,
    /// integral of f0' over [0, xs[k]]
    cum_left: Vec<f64>,
    /// integral of f0' over [xs[k], 1]
    cum_right: Vec<f64>,
}

impl Pld {
    fn new(knots: &[[f64; 2]], free: usize) -> Result<Self> {
        let k = knots.len();
        if k < 3 {
            return Err(SkewError::InvalidParameter("pld needs at least 3 knots".into()));
        }
        if free == 0 || free >= k - 1 {
            return Err(SkewError::InvalidParameter(
                "free_knot must index an interior knot".into(),
            ));
        }
        let xs: Vec<f64> = knots.iter().map(|kn| kn[0]).collect();
        if xs[0] != 0.0 || xs[k - 1] != 1.0 || xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SkewError::InvalidParameter(
                "knot abscissae must increase from 0 to 1".into(),
            ));
        }
        // The trapezoid integral is affine in the free value: solve it.
        let integral = |v: f64| -> f64 {
            (0..k - 1)
                .map(|i| {
                    let a = if i == free { v } else { knots[i][1] };
                    let b = if i + 1 == free { v } else { knots[i + 1][1] };
                    0.5 * (xs[i + 1] - xs[i]) * (a + b)
                })
                .sum()
        };
        let i0 = integral(0.0);
        let slope = integral(1.0) - i0;
        let v = (1.0 - i0) / slope;
        let mut ds: Vec<f64> = knots.iter().map(|kn| kn[1]).collect();
        ds[free] = v;
        if ds.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(SkewError::InvalidParameter(format!(
                "derivative values must be positive (solved free value {v})"
            )));
        }
        let slopes: Vec<f64> = (0..k - 1).map(|i| (ds[i + 1] - ds[i]) / (xs[i + 1] - xs[i])).collect();
        let mut cum_left = vec![0.0; k];
        for i in 0..k - 1 {
            cum_left[i + 1] = cum_left[i] + 0.5 * (xs[i + 1] - xs[i]) * (ds[i] + ds[i + 1]);
        }
        let mut cum_right = vec![0.0; k];
        for i in (0..k - 1).rev() {
            cum_right[i] = cum_right[i + 1] + 0.5 * (xs[i + 1] - xs[i]) * (ds[i] + ds[i + 1]);
        }
        Ok(Pld { xs, ds, slopes, cum_left, cum_right })
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.xs.len() - 1;
        (0..n).find(|&i| x <= self.xs[i + 1]).unwrap_or(n - 1)
    }

    /// `(segment, distance to its left knot, distance to its right knot)`
    fn locate(&self, p: FiberPoint) -> (usize, f64, f64) {
        let x = p.value();
        let i = self.segment(x);
        let last = self.xs.len() - 1;
        let to_right = if i + 1 == last && p.side == Side::Right {
            p.dist
        } else {
            self.xs[i + 1] - x
        };
        let to_left = if i == 0 && p.side == Side::Left { p.dist } else { x - self.xs[i] };
        (i, to_left, to_right)
    }

    fn fwd(&self, p: FiberPoint) -> FiberPoint {
        let (i, h, hr) = self.locate(p);
        match p.side {
            Side::Left => {
                let v = self.cum_left[i] + h * (self.ds[i] + 0.5 * self.slopes[i] * h);
                FiberPoint::new(v)
            }
            Side::Right => {
                let v = self.cum_right[i + 1] + hr * (self.ds[i + 1] - 0.5 * self.slopes[i] * hr);
                FiberPoint::right(v)
            }
        }
    }

    fn deriv(&self, p: FiberPoint) -> f64 {
        let (i, h, hr) = self.locate(p);
        match p.side {
            Side::Left => self.ds[i] + self.slopes[i] * h,
            Side::Right => self.ds[i + 1] - self.slopes[i] * hr,
        }
    }

    fn inv(&self, p: FiberPoint) -> FiberPoint {
        let n = self.xs.len() - 1;
        match p.side {
            Side::Left => {
                let v = p.dist;
                let i = (0..n).find(|&i| v <= self.cum_left[i + 1]).unwrap_or(n - 1);
                let r = v - self.cum_left[i];
                let (d, s) = (self.ds[i], self.slopes[i]);
                let h = 2.0 * r / (d + (d * d + 2.0 * s * r).max(0.0).sqrt());
                if i == 0 {
                    FiberPoint::left(h)
                } else {
                    FiberPoint::new(self.xs[i] + h)
                }
            }
            Side::Right => {
                let v = p.dist;
                let i = (0..n).rev().find(|&i| v <= self.cum_right[i]).unwrap_or(0);
                let r = v - self.cum_right[i + 1];
                let (d, s) = (self.ds[i + 1], self.slopes[i]);
                let h = 2.0 * r / (d + (d * d - 2.0 * s * r).max(0.0).sqrt());
                if i + 1 == n {
                    FiberPoint::right(h)
                } else {
                    FiberPoint::new(self.xs[i + 1] - h)
                }
            }
        }
    }
}

/// Cubic end piece `e(u) = u + u^2 (a + b u)` matching value and slope at `u = w`.
#[derive(Debug, Clone, Copy)]
struct EndCubic {
    a: f64,
    b: f64,
}

impl EndCubic {
    fn matching(w: f64, value: f64, slope: f64) -> Self {
        let e1 = value - w;
        let e2 = slope - 1.0;
        let b = (e2 - 2.0 * e1 / w) / (w * w);
        let a = e1 / (w * w) - b * w;
        EndCubic { a, b }
    }
    fn eval(&self, u: f64) -> f64 {
        u + u * u * (self.a + self.b * u)
    }
    fn deriv(&self, u: f64) -> f64 {
        1.0 + u * (2.0 * self.a + 3.0 * self.b * u)
    }
}

#[derive(Debug, Clone)]
struct Glued {
    base: Pld,
    width: f64,
    left: EndCubic,
    /// acts on the distance to 1: `1 - f(1-u) = right(u)`
    right: EndCubic,
}

impl Glued {
    fn new(base: Pld, width: f64) -> Result<Self> {
        if !(width > 0.0 && width < 0.25) {
            return Err(SkewError::InvalidParameter("glue width must lie in (0, 0.25)".into()));
        }
        let l = FiberPoint::left(width);
        let r = FiberPoint::right(width);
        let left = EndCubic::matching(width, base.fwd(l).value(), base.deriv(l));
        let right = EndCubic::matching(width, base.fwd(r).complement(), base.deriv(r));
        let g = Glued { base, width, left, right };
        for k in 1..=1000 {
            let u = width * k as f64 / 1000.0;
            let ok = g.left.deriv(u) > 0.0
                && g.right.deriv(u) > 0.0
                && g.left.eval(u) > u
                && g.right.eval(u) < u;
            if !ok {
                return Err(SkewError::InvalidParameter(format!(
                    "glued end pieces are not monotone with f(x) > x at u = {u}"
                )));
            }
        }
        Ok(g)
    }

    fn fwd(&self, p: FiberPoint) -> FiberPoint {
        if p.dist < self.width {
            match p.side {
                Side::Left => FiberPoint::left(self.left.eval(p.dist)),
                Side::Right => FiberPoint::right(self.right.eval(p.dist)),
            }
        } else {
            self.base.fwd(p)
        }
    }

    fn deriv(&self, p: FiberPoint) -> f64 {
        if p.dist < self.width {
            match p.side {
                Side::Left => self.left.deriv(p.dist),
                Side::Right => self.right.deriv(p.dist),
            }
        } else {
            self.base.deriv(p)
        }
    }
}

#[derive(Debug, Clone)]
enum F0 {
    Pld(Pld),
    Mobius { beta: f64 },
    Arctan,
    Quartic { a: f64 },
    Glued(Glued),
}

/// The pair `(f0, f1)` with `f1(x) = 1 - x`.
#[derive(Debug, Clone)]
pub struct FiberModel {
    spec: ModelSpec,
    f0: F0,
}

/// Coordinate in which `f0` is a translation and `f1` is `t -> -t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TranslationLift {
    /// `t = log(x/(1-x))`, shift `log beta`.
    Logit { beta: f64 },
    /// `t = tan(pi (x - 1/2))`, shift 1.
    Tangent,
}

impl TranslationLift {
    pub fn shift(&self) -> f64 {
        match self {
            TranslationLift::Logit { beta } => beta.ln(),
            TranslationLift::Tangent => 1.0,
        }
    }

    pub fn lift(&self, p: FiberPoint) -> f64 {
        match self {
            TranslationLift::Logit { .. } => p.logit(),
            TranslationLift::Tangent => {
                let c = 1.0 / (PI * p.dist).tan();
                match p.side {
                    Side::Left => -c,
                    Side::Right => c,
                }
            }
        }
    }

    pub fn unlift(&self, t: f64) -> FiberPoint {
        match self {
            TranslationLift::Logit { .. } => FiberPoint::from_logit(t),
            TranslationLift::Tangent => {
                if t > 0.0 {
                    FiberPoint::right(1.0f64.atan2(t) / PI)
                } else {
                    FiberPoint::left(1.0f64.atan2(-t) / PI)
                }
            }
        }
    }

    /// Action of a single symbol in lifted coordinates.
    pub fn step(&self, sym: u8, t: f64) -> f64 {
        if sym == 0 {
            t + self.shift()
        } else {
            -t
        }
    }
}

fn mobius_parts(p: FiberPoint) -> (f64, f64) {
    match p.side {
        Side::Left => (p.dist, 1.0 - p.dist),
        Side::Right => (1.0 - p.dist, p.dist),
    }
}

fn pick(y: f64, yc: f64) -> FiberPoint {
    if y <= 0.5 {
        FiberPoint { side: Side::Left, dist: y.max(0.0) }
    } else {
        FiberPoint { side: Side::Right, dist: yc.max(0.0) }
    }
}

/// Inverse of an increasing bijection of [0,1] by bisection in logit space.
fn invert_increasing(f: impl Fn(FiberPoint) -> FiberPoint, target: FiberPoint) -> FiberPoint {
    if target.is_boundary() {
        return target;
    }
    let goal = target.logit();
    let (mut lo, mut hi) = (-800.0f64, 800.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(FiberPoint::from_logit(mid)).logit() < goal {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    FiberPoint::from_logit(0.5 * (lo + hi))
}

impl FiberModel {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        let f0 = match &spec {
            ModelSpec::Pld { knots, free_knot } => F0::Pld(Pld::new(knots, *free_knot)?),
            ModelSpec::Mobius { beta } => {
                if !(beta.is_finite() && *beta > 1.0) {
                    return Err(SkewError::InvalidParameter("mobius beta must exceed 1".into()));
                }
                F0::Mobius { beta: *beta }
            }
            ModelSpec::Arctan => F0::Arctan,
            ModelSpec::Quartic { a } => {
                let bound = 3.0 * 3.0f64.sqrt();
                if !(*a > 0.0 && *a < bound) {
                    return Err(SkewError::InvalidParameter(format!(
                        "quartic parameter a must lie in (0, {bound:.6}) for monotonicity"
                    )));
                }
                F0::Quartic { a: *a }
            }
            ModelSpec::Glued { knots, free_knot, width } => {
                F0::Glued(Glued::new(Pld::new(knots, *free_knot)?, *width)?)
            }
        };
        let model = FiberModel { spec, f0 };
        if let F0::Pld(p) = &model.f0 {
            if p.slopes.iter().any(|s| *s >= 0.0) {
                return Err(SkewError::InvalidParameter(
                    "pld derivative must be strictly decreasing".into(),
                ));
            }
        }
        Ok(model)
    }

    pub fn pld_default() -> Self {
        FiberModel::new(ModelSpec::pld_default()).expect("default knots are valid")
    }

    pub fn mobius(beta: f64) -> Self {
        FiberModel::new(ModelSpec::Mobius { beta }).expect("beta > 1")
    }

    pub fn arctan() -> Self {
        FiberModel::new(ModelSpec::Arctan).expect("no parameters")
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// Knot table after solving the free value (PLD-based models only).
    pub fn solved_knots(&self) -> Option<Vec<[f64; 2]>> {
        let p = match &self.f0 {
            F0::Pld(p) => p,
            F0::Glued(g) => &g.base,
            _ => return None,
        };
        Some(p.xs.iter().zip(&p.ds).map(|(x, d)| [*x, *d]).collect())
    }

    pub fn lift(&self) -> Option<TranslationLift> {
        match self.f0 {
            F0::Mobius { beta } => Some(TranslationLift::Logit { beta }),
            F0::Arctan => Some(TranslationLift::Tangent),
            _ => None,
        }
    }

    pub fn f0(&self, p: FiberPoint) -> FiberPoint {
        match &self.f0 {
            F0::Pld(m) => m.fwd(p),
            F0::Mobius { beta } => {
                let (x, xc) = mobius_parts(p);
                let den = 1.0 + (beta - 1.0) * x;
                pick(beta * x / den, xc / den)
            }
            F0::Arctan => {
                let l = TranslationLift::Tangent;
                l.unlift(l.lift(p) + 1.0)
            }
            F0::Quartic { a } => {
                let (x, xc) = mobius_parts(p);
                let bump = a * x * x * xc * xc;
                pick(x + bump, xc - bump)
            }
            F0::Glued(g) => g.fwd(p),
        }
    }

    /// `f0'(x)`, always positive.
    pub fn f0_deriv(&self, p: FiberPoint) -> f64 {
        match &self.f0 {
            F0::Pld(m) => m.deriv(p),
            F0::Mobius { beta } => {
                let (x, _) = mobius_parts(p);
                let den = 1.0 + (beta - 1.0) * x;
                beta / (den * den)
            }
            F0::Arctan => {
                let y = TranslationLift::Tangent.lift(p);
                if y.abs() > 1.0 {
                    let r = 1.0 / y;
                    (r * r + 1.0) / (r * r + (1.0 + r) * (1.0 + r))
                } else {
                    (1.0 + y * y) / (1.0 + (y + 1.0) * (y + 1.0))
                }
            }
            F0::Quartic { a } => {
                let (x, xc) = mobius_parts(p);
                1.0 + 2.0 * a * x * xc * (xc - x)
            }
            F0::Glued(g) => g.deriv(p),
        }
    }

    pub fn f0_inv(&self, p: FiberPoint) -> FiberPoint {
        match &self.f0 {
            F0::Pld(m) => m.inv(p),
            F0::Mobius { beta } => {
                let (y, yc) = mobius_parts(p);
                let den = beta - (beta - 1.0) * y;
                pick(y / den, beta * yc / den)
            }
            F0::Arctan => {
                let l = TranslationLift::Tangent;
                l.unlift(l.lift(p) - 1.0)
            }
            _ => invert_increasing(|q| self.f0(q), p),
        }
    }

    pub fn apply(&self, sym: u8, p: FiberPoint) -> FiberPoint {
        if sym == 0 {
            self.f0(p)
        } else {
            p.reflect()
        }
    }

    /// Signed derivative of `f_sym` at `p`.
    pub fn deriv(&self, sym: u8, p: FiberPoint) -> f64 {
        if sym == 0 {
            self.f0_deriv(p)
        } else {
            -1.0
        }
    }

    pub fn apply_inverse(&self, sym: u8, p: FiberPoint) -> FiberPoint {
        if sym == 0 {
            self.f0_inv(p)
        } else {
            p.reflect()
        }
    }

    /// `f_[w](p)` and its signed derivative; the first symbol acts first.
    pub fn eval_word(&self, word: &[u8], p: FiberPoint) -> (FiberPoint, f64) {
        let (q, log_abs, sign) = self.eval_word_log(word, p);
        (q, sign * log_abs.exp())
    }

    /// Like [`eval_word`](Self::eval_word) but returns `log|derivative|` and its sign.
    pub fn eval_word_log(&self, word: &[u8], p: FiberPoint) -> (FiberPoint, f64, f64) {
        let mut q = p;
        let mut log_abs = 0.0;
        let mut sign = 1.0;
        for &s in word {
            if s == 0 {
                log_abs += self.f0_deriv(q).ln();
            } else {
                sign = -sign;
            }
            q = self.apply(s, q);
        }
        (q, log_abs, sign)
    }

    /// `f_[w]^{-1}(p)`.
    pub fn eval_word_inverse(&self, word: &[u8], p: FiberPoint) -> FiberPoint {
        word.iter().rev().fold(p, |q, &s| self.apply_inverse(s, q))
    }

    pub fn beta(&self) -> f64 {
        self.f0_deriv(FiberPoint::ZERO)
    }

    pub fn lambda(&self) -> f64 {
        self.f0_deriv(FiberPoint::ONE)
    }

    /// Largest `|f0(f1(x)) - f1(f0^{-1}(x))|` over a grid of step `1e-3`.
    pub fn commutation_defect(&self) -> f64 {
        (0..=1000)
            .map(|k| {
                let p = FiberPoint::new(k as f64 / 1000.0);
                let lhs = self.f0(p.reflect());
                let rhs = self.f0_inv(p).reflect();
                lhs.minus(&rhs).abs()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Pass,
    Fail,
    NotApplicable,
}

impl Check {
    fn from_bool(b: bool) -> Self {
        if b {
            Check::Pass
        } else {
            Check::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub beta: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub c: Option<f64>,
    pub upsilon: Option<f64>,
    pub f0_sq_c: Option<f64>,
    pub h1: Check,
    pub h2: Check,
    pub h3: Check,
    pub h4: Check,
    pub commutation_defect: f64,
}

const PARABOLIC_TOL: f64 = 1e-12;

/// Evaluate (H1)-(H4) numerically.
pub fn check_hypotheses(model: &FiberModel) -> Result<HypothesisReport> {
    let beta = model.beta();
    let lambda = model.lambda();
    let kappa = lambda * lambda * (1.0 - lambda) / (beta * (beta - 1.0));
    let grid = 10_000usize;
    let pts: Vec<FiberPoint> = (0..=grid).map(|k| FiberPoint::new(k as f64 / grid as f64)).collect();

    let moves_up = pts[1..grid].iter().all(|&p| model.f0(p).logit() > p.logit());
    let fixes_ends = model.f0(FiberPoint::ZERO).is_boundary() && model.f0(FiberPoint::ONE) == FiberPoint::ONE;
    let h1 = Check::from_bool(beta > 1.0 && lambda > 0.0 && lambda < 1.0 && moves_up && fixes_ends);
    let h2 = Check::Pass;

    let parabolic = (beta - 1.0).abs() < PARABOLIC_TOL || (lambda - 1.0).abs() < PARABOLIC_TOL;
    let commutation_defect = model.commutation_defect();
    if parabolic {
        return Ok(HypothesisReport {
            beta,
            lambda,
            kappa,
            c: None,
            upsilon: None,
            f0_sq_c: None,
            h1,
            h2,
            h3: Check::NotApplicable,
            h4: Check::NotApplicable,
            commutation_defect,
        });
    }
    if (beta - 1.0).signum() == (lambda - 1.0).signum() {
        return Err(SkewError::NoUnitDerivativeCrossing);
    }
    let derivs: Vec<f64> = pts.iter().map(|&p| model.f0_deriv(p)).collect();
    let decreasing = derivs.windows(2).all(|w| w[1] < w[0]);
    let c = bisect(|x| model.f0_deriv(FiberPoint::new(x)) - 1.0, 0.0, 1.0, 1e-15);
    let fc = model.f0(FiberPoint::new(c));
    let upsilon = 1.0 / model.f0_deriv(fc);
    let f0_sq_c = model.f0(fc).value();
    let h3 = Check::from_bool(decreasing && 1.0 - f0_sq_c > f0_sq_c);
    let h4 = Check::from_bool(kappa > 1.0);
    Ok(HypothesisReport {
        beta,
        lambda,
        kappa,
        c: Some(c),
        upsilon: Some(upsilon),
        f0_sq_c: Some(f0_sq_c),
        h1,
        h2,
        h3,
        h4,
        commutation_defect,
    })
}

/// Root of a function with a sign change on `[a, b]`.
pub(crate) fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a) <= tol || m == a || m == b {
            break;
        }
        if (f(m) > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Local distortion `Delta(delta)`: the largest `|log(f_i'(z)/f_i'(end))|`
/// over `z` within `delta` of either endpoint.
pub fn distortion(model: &FiberModel, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(SkewError::InvalidParameter("delta must lie in (0, 1/2)".into()));
    }
    // f1 has constant derivative, so only f0 contributes.
    let mut best = 0.0f64;
    for side in [Side::Left, Side::Right] {
        let end = model.f0_deriv(FiberPoint { side, dist: 0.0 });
        let g = |u: f64| (model.f0_deriv(FiberPoint { side, dist: u }) / end).ln().abs();
        let n = 10_000usize;
        let h = delta / n as f64;
        let (mut arg, mut val) = (0usize, 0.0f64);
        for k in 0..=n {
            let v = g(k as f64 * h);
            if v > val {
                val = v;
                arg = k;
            }
        }
        // golden-section refinement around the best grid point
        let (mut a, mut b) = ((arg.max(1) - 1) as f64 * h, ((arg + 1).min(n)) as f64 * h);
        let r = 0.5 * (5.0f64.sqrt() - 1.0);
        for _ in 0..80 {
            let x1 = b - r * (b - a);
            let x2 = a + r * (b - a);
            let (v1, v2) = (g(x1), g(x2));
            val = val.max(v1).max(v2);
            if v1 > v2 {
                b = x2;
            } else {
                a = x1;
            }
        }
        best = best.max(val);
    }
    // bias upwards so that rounding can only overestimate
    Ok(best * (1.0 + 1e-12) + 1e-15)
}
