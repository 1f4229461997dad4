//! Finite point-mass measures on the half-line and the quadrant.

use std::io;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("malformed box [{a}, {b}) x [{c}, {d})")]
    MalformedBox { a: f64, b: f64, c: f64, d: f64 },
    #[error("rectangle grid is empty")]
    EmptyGrid,
    #[error("kappa must be positive, got {0}")]
    NonPositiveKappa(f64),
    #[error("shift must be nonnegative, got {0}")]
    NegativeShift(f64),
}

/// The half-open box `[a, b) x [c, d)` in the quadrant; `b` and `d` may be
/// infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Rect {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self, MeasureError> {
        let ok = a >= 0.0 && c >= 0.0 && a.is_finite() && c.is_finite() && a <= b && c <= d;
        if ok {
            Ok(Rect { a, b, c, d })
        } else {
            Err(MeasureError::MalformedBox { a, b, c, d })
        }
    }

    /// The upper-right rectangle `[a, ∞) x [c, ∞)`.
    pub fn upper_right(a: f64, c: f64) -> Result<Self, MeasureError> {
        Rect::new(a, f64::INFINITY, c, f64::INFINITY)
    }

    pub fn quadrant() -> Self {
        Rect {
            a: 0.0,
            b: f64::INFINITY,
            c: 0.0,
            d: f64::INFINITY,
        }
    }

    pub fn contains(&self, w: f64, p: f64) -> bool {
        self.a <= w && w < self.b && self.c <= p && p < self.d
    }

    /// `B_h = {y : y - (h, h) ∈ B}`.
    pub fn shifted(&self, h: f64) -> Rect {
        Rect {
            a: self.a + h,
            b: self.b + h,
            c: self.c + h,
            d: self.d + h,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.a >= self.b || self.c >= self.d
    }

    pub fn intersect(&self, other: &Rect) -> Rect {
        Rect {
            a: self.a.max(other.a),
            b: self.b.min(other.b),
            c: self.c.max(other.c),
            d: self.d.min(other.d),
        }
    }

    pub fn area(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            (self.b - self.a) * (self.d - self.c)
        }
    }
}

/// Anything that can be evaluated on boxes: atomic measures, fluid states.
pub trait BoxMeasure {
    fn measure(&self, rect: &Rect) -> f64;
}

impl<F: Fn(&Rect) -> f64> BoxMeasure for F {
    fn measure(&self, rect: &Rect) -> f64 {
        self(rect)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom2 {
    pub w: f64,
    pub p: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCause {
    Service,
    Abandonment,
}

impl ExitCause {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExitCause::Service => "service",
            ExitCause::Abandonment => "abandonment",
        }
    }
}

/// An atom removed by [`AtomicMeasure2D::evolve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exit {
    pub atom: Atom2,
    pub cause: ExitCause,
}

/// Finite sum of point masses in the open quadrant. Atoms with a zero
/// coordinate are never stored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AtomicMeasure2D {
    atoms: Vec<Atom2>,
    pub class_id: Option<usize>,
}

impl AtomicMeasure2D {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_class(class_id: usize) -> Self {
        AtomicMeasure2D {
            atoms: Vec::new(),
            class_id: Some(class_id),
        }
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = (f64, f64, f64)>) -> Self {
        let mut m = Self::new();
        for (w, p, mass) in atoms {
            m.push(w, p, mass);
        }
        m
    }

    /// Adds an atom unless it sits on an axis or carries no mass.
    pub fn push(&mut self, w: f64, p: f64, mass: f64) {
        if w > 0.0 && p > 0.0 && mass > 0.0 {
            self.atoms.push(Atom2 { w, p, mass });
        }
    }

    pub fn atoms(&self) -> &[Atom2] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    pub fn eval(&self, rect: &Rect) -> f64 {
        self.atoms
            .iter()
            .filter(|a| rect.contains(a.w, a.p))
            .map(|a| a.mass)
            .sum()
    }

    /// Mass of atoms satisfying an arbitrary predicate on `(w, p)`.
    pub fn eval_where(&self, pred: impl Fn(f64, f64) -> bool) -> f64 {
        self.atoms
            .iter()
            .filter(|a| pred(a.w, a.p))
            .map(|a| a.mass)
            .sum()
    }

    /// Multiplies every mass by `factor` (fluid scaling uses `1/n`).
    pub fn scaled(&self, factor: f64) -> Self {
        AtomicMeasure2D {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom2 {
                    mass: a.mass * factor,
                    ..*a
                })
                .collect(),
            class_id: self.class_id,
        }
    }

    /// Moves every atom by `(-h, -h)`; atoms reaching an axis leave.
    ///
    /// An atom leaves by service when `w < p` and by abandonment when
    /// `p <= w`, so a tie at the origin counts as abandonment.
    pub fn evolve(&self, h: f64) -> Result<(AtomicMeasure2D, Vec<Exit>), MeasureError> {
        if !(h >= 0.0) {
            return Err(MeasureError::NegativeShift(h));
        }
        let mut next = AtomicMeasure2D {
            atoms: Vec::with_capacity(self.atoms.len()),
            class_id: self.class_id,
        };
        let mut exits = Vec::new();
        for atom in &self.atoms {
            let (w, p) = (atom.w - h, atom.p - h);
            if w > 0.0 && p > 0.0 {
                next.atoms.push(Atom2 { w, p, mass: atom.mass });
            } else {
                let cause = if atom.w < atom.p {
                    ExitCause::Service
                } else {
                    ExitCause::Abandonment
                };
                exits.push(Exit { atom: *atom, cause });
            }
        }
        Ok((next, exits))
    }

    /// Mass within distance `kappa` of the corner set through `(x, y)`,
    /// i.e. of the lines `{x} x R+` and `R+ x {y}`.
    pub fn corner_mass(&self, x: f64, y: f64, kappa: f64) -> Result<f64, MeasureError> {
        if !(kappa > 0.0) {
            return Err(MeasureError::NonPositiveKappa(kappa));
        }
        Ok(self.eval_where(|w, p| (w - x).abs() < kappa || (p - y).abs() < kappa))
    }

    /// Projection onto coordinate `axis` (0 for `w`, 1 for `p`).
    pub fn project(&self, axis: usize) -> AtomicMeasure1D {
        let mut out = AtomicMeasure1D::new();
        for a in &self.atoms {
            out.push(if axis == 0 { a.w } else { a.p }, a.mass);
        }
        out
    }

    /// Writes `class_id,w,p,mass` rows (with header when `header` is set).
    pub fn write_csv<W: io::Write>(&self, out: &mut W, header: bool) -> io::Result<()> {
        if header {
            writeln!(out, "class_id,w,p,mass")?;
        }
        let class = self.class_id.map(|c| c.to_string()).unwrap_or_default();
        for a in &self.atoms {
            writeln!(out, "{},{},{},{}", class, a.w, a.p, a.mass)?;
        }
        Ok(())
    }
}

impl BoxMeasure for AtomicMeasure2D {
    fn measure(&self, rect: &Rect) -> f64 {
        self.eval(rect)
    }
}

/// Superposition of several class measures.
pub fn superpose<'a>(measures: impl IntoIterator<Item = &'a AtomicMeasure2D>) -> AtomicMeasure2D {
    let mut out = AtomicMeasure2D::new();
    for m in measures {
        out.atoms.extend_from_slice(&m.atoms);
    }
    out
}

/// `max_{B ∈ grid} |A(B) - B(B)|`.
pub fn rect_distance<A, B>(lhs: &A, rhs: &B, grid: &[Rect]) -> Result<f64, MeasureError>
where
    A: BoxMeasure + ?Sized,
    B: BoxMeasure + ?Sized,
{
    if grid.is_empty() {
        return Err(MeasureError::EmptyGrid);
    }
    Ok(grid
        .iter()
        .map(|r| (lhs.measure(r) - rhs.measure(r)).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom1 {
    pub x: f64,
    pub mass: f64,
}

/// Finite sum of point masses on `(0, ∞)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AtomicMeasure1D {
    atoms: Vec<Atom1>,
}

impl AtomicMeasure1D {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64, mass: f64) {
        if x > 0.0 && mass > 0.0 {
            self.atoms.push(Atom1 { x, mass });
        }
    }

    pub fn atoms(&self) -> &[Atom1] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// Mass of `[c, ∞)`.
    pub fn tail(&self, c: f64) -> f64 {
        self.atoms.iter().filter(|a| a.x >= c).map(|a| a.mass).sum()
    }

    /// Mass of `[lo, hi)`.
    pub fn eval_interval(&self, lo: f64, hi: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|a| lo <= a.x && a.x < hi)
            .map(|a| a.mass)
            .sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        AtomicMeasure1D {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom1 {
                    x: a.x,
                    mass: a.mass * factor,
                })
                .collect(),
        }
    }
}
