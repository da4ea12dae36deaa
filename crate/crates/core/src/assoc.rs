//! Bracketed products of nonassociative constituents and the associator
//! corrections they generate when acting on a state.
//!
//! An observable composite field `φ = fⁱ bᵢ` is a product of two unobservable
//! constituents. A single composite acts on a state the associative way,
//! `(f b)|ψ⟩ = f(b|ψ⟩)`. A product of `n ≥ 2` composites does not: moving
//! the brackets to the fully right-nested form costs one associator, which
//! is a pure constant `m²` times the residual power,
//!
//! ```text
//! φⁿ|ψ⟩ = coreₙ|ψ⟩ + m² φⁿ⁻²|ψ⟩,    coreₙ = f(b(f(b(…|ψ⟩))))
//! ```
//!
//! Applied recursively until the residual power drops below two, this gives
//! a finite series in `m²` whose every term satisfies `k + 2j = n` (residual
//! power `k`, coefficient `m^{2j}`). `m²` stays symbolic throughout; numbers
//! are substituted only by [`Normalized::substitute`].

use std::fmt;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ConstituentKind {
    /// `fⁱ_α`
    F,
    /// `b_{iβ}`
    B,
    /// `q_k`, member of a longer decomposition chain `q₁ q₂ q₃ …`.
    Q(u8),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Constituent {
    pub kind: ConstituentKind,
    /// Summation index shared by the two halves of a composite.
    pub index: String,
    /// Outer (internal or Lorentz) index; `None` for a scalar field.
    pub outer: Option<String>,
}

impl Constituent {
    pub fn new(kind: ConstituentKind, index: impl Into<String>) -> Self {
        Self {
            kind,
            index: index.into(),
            outer: None,
        }
    }

    pub fn f(index: impl Into<String>) -> Self {
        Self::new(ConstituentKind::F, index)
    }

    pub fn b(index: impl Into<String>) -> Self {
        Self::new(ConstituentKind::B, index)
    }

    pub fn with_outer(mut self, outer: impl Into<String>) -> Self {
        self.outer = Some(outer.into());
        self
    }

    fn symbol(&self) -> String {
        match self.kind {
            ConstituentKind::F => "f".to_owned(),
            ConstituentKind::B => "b".to_owned(),
            ConstituentKind::Q(k) => format!("q{k}"),
        }
    }

    fn indexed_symbol(&self) -> String {
        let outer = self.outer.as_deref();
        match (self.kind, outer) {
            (ConstituentKind::F, None) => format!("f^{}", self.index),
            (ConstituentKind::F, Some(o)) => format!("f^{}_{o}", self.index),
            (ConstituentKind::B, None) => format!("b_{}", self.index),
            (ConstituentKind::B, Some(o)) => format!("b_{},{o}", self.index),
            (ConstituentKind::Q(k), None) => format!("q{k}^{}", self.index),
            (ConstituentKind::Q(k), Some(o)) => format!("q{k}^{}_{o}", self.index),
        }
    }

    /// `self` and `other` form the composite `fⁱ bᵢ`.
    fn pairs_with(&self, other: &Constituent) -> bool {
        self.kind == ConstituentKind::F
            && other.kind == ConstituentKind::B
            && self.index == other.index
    }
}

/// Binary product tree. Bracketing is explicit; nothing is reassociated
/// implicitly. A state-like expression has the `State` marker as its
/// rightmost leaf.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Expr {
    Leaf(Constituent),
    State,
    Product(Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("empty product: the power must be at least 1")]
    EmptyProduct,
    #[error("expression does not act on a state: {0}")]
    MissingState(String),
    #[error("the state marker must be the rightmost leaf: {0}")]
    StateNotRightmost(String),
    #[error("normalization is defined for two-constituent factors only, found {0}")]
    NaryFactor(String),
    #[error("constituent at leaf {position} does not pair into an f^i b_i composite")]
    UnpairedConstituent { position: usize },
    #[error("no reassociation rule for this bracketing: {0}")]
    UnsupportedBracketing(String),
}

impl Expr {
    pub fn leaf(c: Constituent) -> Self {
        Expr::Leaf(c)
    }

    pub fn product(left: Expr, right: Expr) -> Self {
        Expr::Product(Box::new(left), Box::new(right))
    }

    /// The composite `(fⁱ bᵢ)`.
    pub fn composite(index: &str) -> Self {
        Self::product(
            Expr::Leaf(Constituent::f(index)),
            Expr::Leaf(Constituent::b(index)),
        )
    }

    /// Left-to-right chain of constituents forming one factor, e.g. the
    /// triple decomposition `(q₁ q₂) q₃`. Panics on an empty chain.
    pub fn chain(constituents: Vec<Constituent>) -> Self {
        let mut it = constituents.into_iter();
        let first = Expr::Leaf(it.next().expect("chain needs at least one constituent"));
        it.fold(first, |acc, c| Self::product(acc, Expr::Leaf(c)))
    }

    /// Leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a Expr>) {
        match self {
            Expr::Product(l, r) => {
                l.collect_leaves(out);
                r.collect_leaves(out);
            }
            leaf => out.push(leaf),
        }
    }

    pub fn constituents(&self) -> Vec<&Constituent> {
        self.leaves()
            .into_iter()
            .filter_map(|e| match e {
                Expr::Leaf(c) => Some(c),
                _ => None,
            })
            .collect()
    }

    fn rightmost(&self) -> &Expr {
        match self {
            Expr::Product(_, r) => r.rightmost(),
            leaf => leaf,
        }
    }

    pub fn is_state_like(&self) -> bool {
        matches!(self.rightmost(), Expr::State)
    }

    /// Number of composite factors represented: half the constituent count.
    pub fn power(&self) -> usize {
        self.constituents().len() / 2
    }

    /// Rendering with summation and outer indices on every constituent.
    pub fn render_indexed(&self) -> String {
        let mut s = String::new();
        self.render(&mut s, true);
        s
    }

    fn render(&self, out: &mut String, indexed: bool) {
        match self {
            Expr::Leaf(c) => out.push_str(&if indexed {
                c.indexed_symbol()
            } else {
                c.symbol()
            }),
            Expr::State => out.push_str("|psi>"),
            Expr::Product(l, r) if **r == Expr::State => {
                l.render(out, indexed);
                out.push_str(" |psi>");
            }
            Expr::Product(l, r) => {
                l.render_wrapped(out, indexed);
                out.push('.');
                r.render_wrapped(out, indexed);
            }
        }
    }

    fn render_wrapped(&self, out: &mut String, indexed: bool) {
        if let Expr::Product(..) = self {
            out.push('(');
            self.render(out, indexed);
            out.push(')');
        } else {
            self.render(out, indexed);
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.render(&mut s, false);
        f.write_str(&s)
    }
}

/// The associator constant `m²`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub enum AssociatorConstant {
    #[default]
    Symbolic,
    Value(f64),
}

impl AssociatorConstant {
    /// Whether `m²` is numerically zero, i.e. the associative limit.
    pub fn vanishes(self) -> bool {
        matches!(self, AssociatorConstant::Value(v) if v == 0.0)
    }
}

/// Left-to-right product of `n` composite factors applied to the state,
/// `((f¹b₁)(f²b₂))…|ψ⟩`, with summation indices `i1 … in`.
pub fn build_power_expression(n: usize) -> Result<Expr, ExprError> {
    if n == 0 {
        return Err(ExprError::EmptyProduct);
    }
    let op = (2..=n).fold(Expr::composite("i1"), |acc, k| {
        Expr::product(acc, Expr::composite(&format!("i{k}")))
    });
    Ok(Expr::product(op, Expr::State))
}

/// Right-nested alternating product `f(b(f(b(…|ψ⟩))))` over the given constituents.
fn right_nest(constituents: &[Constituent], tail: Expr) -> Expr {
    constituents
        .iter()
        .rev()
        .fold(tail, |acc, c| Expr::product(Expr::Leaf(c.clone()), acc))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrectionTerm {
    /// Coefficient exponent: the term carries `m^{2j}`.
    pub j: u32,
    /// Residual power of the composite field.
    pub k: u32,
    /// Right-nested core of length `k` acting on the state.
    pub core: Expr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct CorrectionSeries {
    pub terms: Vec<CorrectionTerm>,
}

impl CorrectionSeries {
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Normalized {
    /// Power of the input, `n`.
    pub power: u32,
    /// Fully right-nested term with coefficient one.
    pub core: Expr,
    /// Corrections, ordered by increasing `j`.
    pub series: CorrectionSeries,
}

/// A term after numeric substitution of `m²`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedTerm<'a> {
    pub coefficient: f64,
    pub k: u32,
    pub core: &'a Expr,
}

impl Normalized {
    /// All terms, core first, with `m²` replaced by its value. Terms whose
    /// coefficient vanishes are dropped, so `m² = 0` leaves only the core.
    pub fn substitute(&self, m_squared: f64) -> Vec<WeightedTerm<'_>> {
        let mut out = vec![WeightedTerm {
            coefficient: 1.0,
            k: self.power,
            core: &self.core,
        }];
        for t in &self.series.terms {
            let coefficient = m_squared.powi(t.j as i32);
            if coefficient != 0.0 {
                out.push(WeightedTerm {
                    coefficient,
                    k: t.k,
                    core: &t.core,
                });
            }
        }
        out
    }
}

fn validate(expr: &Expr) -> Result<(), ExprError> {
    if !expr.is_state_like() {
        return Err(ExprError::MissingState(expr.to_string()));
    }
    let leaves = expr.leaves();
    if leaves[..leaves.len() - 1]
        .iter()
        .any(|e| matches!(e, Expr::State))
    {
        return Err(ExprError::StateNotRightmost(expr.to_string()));
    }
    let cs = expr.constituents();
    if cs.iter().any(|c| matches!(c.kind, ConstituentKind::Q(_))) {
        return Err(ExprError::NaryFactor(expr.to_string()));
    }
    for (pair_start, pair) in cs.chunks(2).enumerate() {
        match pair {
            [f, b] if f.pairs_with(b) => {}
            [f, _] if f.kind == ConstituentKind::F => {
                return Err(ExprError::UnpairedConstituent {
                    position: 2 * pair_start + 1,
                })
            }
            _ => {
                return Err(ExprError::UnpairedConstituent {
                    position: 2 * pair_start,
                })
            }
        }
    }
    Ok(())
}

/// Splits an operator tree into composite factors when every maximal
/// subtree is a product of whole `(f b)` pairs.
fn tile_composites(op: &Expr) -> Option<Vec<(Constituent, Constituent)>> {
    match op {
        Expr::Product(l, r) => match (&**l, &**r) {
            (Expr::Leaf(f), Expr::Leaf(b)) if f.pairs_with(b) => Some(vec![(f.clone(), b.clone())]),
            (Expr::Product(..), Expr::Product(..)) => {
                let mut left = tile_composites(l)?;
                left.extend(tile_composites(r)?);
                Some(left)
            }
            _ => None,
        },
        _ => None,
    }
}

fn composite_product(factors: &[(Constituent, Constituent)]) -> Expr {
    let mut it = factors
        .iter()
        .map(|(f, b)| Expr::product(Expr::Leaf(f.clone()), Expr::Leaf(b.clone())));
    let first = it.next().expect("at least one factor");
    it.fold(first, Expr::product)
}

/// Terms `(j, core)` of a validated state-like expression.
fn expand(expr: &Expr) -> Result<Vec<(u32, Expr)>, ExprError> {
    let (op, rest) = match expr {
        Expr::State => return Ok(vec![(0, Expr::State)]),
        Expr::Product(op, rest) => (&**op, &**rest),
        Expr::Leaf(_) => unreachable!("validated expressions end in the state"),
    };

    let prefix = |constituents: &[Constituent], terms: Vec<(u32, Expr)>| {
        terms
            .into_iter()
            .map(|(j, core)| (j, right_nest(constituents, core)))
            .collect::<Vec<_>>()
    };

    if let Expr::Leaf(c) = op {
        return Ok(prefix(std::slice::from_ref(c), expand(rest)?));
    }

    let Some(factors) = tile_composites(op) else {
        return Err(ExprError::UnsupportedBracketing(expr.to_string()));
    };
    let flat: Vec<Constituent> = factors
        .iter()
        .flat_map(|(f, b)| [f.clone(), b.clone()])
        .collect();

    // (f b) X = f (b X): one composite acts associatively.
    let mut terms = prefix(&flat, expand(rest)?);
    if factors.len() >= 2 {
        // One reassociation per power reduction; the associator consumes the
        // two outermost factors and the rest keeps acting on the state.
        let residual = &factors[2..];
        let reduced = if residual.is_empty() {
            rest.clone()
        } else {
            Expr::product(composite_product(residual), rest.clone())
        };
        terms.extend(expand(&reduced)?.into_iter().map(|(j, core)| (j + 1, core)));
    }
    Ok(terms)
}

/// Rewrites a state-like expression into its right-nested core plus the
/// associator-correction series.
pub fn normalize(expr: &Expr) -> Result<Normalized, ExprError> {
    validate(expr)?;
    let mut terms = expand(expr)?;
    terms.sort_by_key(|(j, _)| *j);
    let mut iter = terms.into_iter();
    let (j0, core) = iter.next().expect("expansion yields the core term");
    debug_assert_eq!(j0, 0);
    let power = expr.power() as u32;
    let series = CorrectionSeries {
        terms: iter
            .map(|(j, core)| CorrectionTerm {
                j,
                k: core.power() as u32,
                core,
            })
            .collect(),
    };
    Ok(Normalized {
        power,
        core,
        series,
    })
}

/// One term of `⟨ψ|φⁿ|ψ⟩` in the vacuum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum VacuumTerm {
    /// `m^{2j} ⟨coreₖ⟩`, with the expectation left opaque.
    Core { j: u32, k: u32 },
    /// `m^{2j}`, from a term with no residual operators (`⟨ψ|ψ⟩ = 1`).
    Number { j: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Default)]
pub struct VacuumPolynomial {
    pub terms: Vec<VacuumTerm>,
}

impl VacuumPolynomial {
    pub fn has_pure_number(&self) -> bool {
        self.terms
            .iter()
            .any(|t| matches!(t, VacuumTerm::Number { .. }))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// ASCII rendering, e.g. `<core4> + m^2<core2> + m^4`.
    pub fn to_ascii(&self) -> String {
        render_polynomial(
            &self.terms,
            |j| format!("m^{}", 2 * j),
            |k| format!("<core{k}>"),
        )
    }
}

const SUPERSCRIPTS: [char; 10] = ['⁰', '¹', '²', '³', '⁴', '⁵', '⁶', '⁷', '⁸', '⁹'];
const SUBSCRIPTS: [char; 10] = ['₀', '₁', '₂', '₃', '₄', '₅', '₆', '₇', '₈', '₉'];

fn digits(n: u32, table: &[char; 10]) -> String {
    n.to_string()
        .chars()
        .map(|c| table[c.to_digit(10).unwrap_or(0) as usize])
        .collect()
}

/// `m²`, `m⁴`, … for `j ≥ 1`.
pub fn m_power(j: u32) -> String {
    format!("m{}", digits(2 * j, &SUPERSCRIPTS))
}

/// `⟨coreₖ⟩`.
pub fn core_expectation(k: u32) -> String {
    format!("⟨core{}⟩", digits(k, &SUBSCRIPTS))
}

fn render_polynomial(
    terms: &[VacuumTerm],
    m: impl Fn(u32) -> String,
    core: impl Fn(u32) -> String,
) -> String {
    if terms.is_empty() {
        return "0".to_owned();
    }
    terms
        .iter()
        .map(|t| match *t {
            VacuumTerm::Core { j: 0, k } => core(k),
            VacuumTerm::Core { j, k } => format!("{}{}", m(j), core(k)),
            VacuumTerm::Number { j } => m(j),
        })
        .collect::<Vec<_>>()
        .join(" + ")
}

impl fmt::Display for VacuumTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_polynomial(
            std::slice::from_ref(self),
            m_power,
            core_expectation,
        ))
    }
}

impl fmt::Display for VacuumPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_polynomial(&self.terms, m_power, core_expectation))
    }
}

/// `⟨ψ|φⁿ|ψ⟩` for the vacuum: terms with a single residual field drop out
/// because `⟨φ⟩ = 0`.
pub fn vacuum_expectation_corrections(n: usize) -> Result<VacuumPolynomial, ExprError> {
    let normalized = normalize(&build_power_expression(n)?)?;
    let all = std::iter::once((0, normalized.power))
        .chain(normalized.series.terms.iter().map(|t| (t.j, t.k)));
    let terms = all
        .filter_map(|(j, k)| match k {
            0 => Some(VacuumTerm::Number { j }),
            1 => None,
            k => Some(VacuumTerm::Core { j, k }),
        })
        .collect();
    Ok(VacuumPolynomial { terms })
}

/// The quadratic piece produced by reducing the quartic gauge self-coupling.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GaugeMassTerm {
    /// The term carries `m^{2j}`.
    pub coefficient_exponent: u32,
    /// Power of the gauge potential (2: a mass term).
    pub field_power: u32,
    pub expression: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GaugeCorrection {
    pub group_rank: u32,
    pub source_term: &'static str,
    /// Empty in the associative limit `m² = 0`.
    pub mass_terms: Vec<GaugeMassTerm>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GaugeError {
    #[error("SU(N) needs N ≥ 2, got {0}")]
    InvalidGroupRank(u32),
}

pub const QUARTIC_GAUGE_TERM: &str = "f^{abc} f^{ade} A^b_μ A^c_ν A^{dμ} A^{eν}";

/// Mass term generated by the quartic SU(N) self-interaction, read off the
/// scalar fourth-power reduction: its single quadratic correction becomes
/// `m² A^a_μ A^{aμ}`. The pure-number `m⁴` piece is a constant and not a
/// mass term.
pub fn gauge_quartic_correction(
    group_rank: u32,
    m_squared: AssociatorConstant,
) -> Result<GaugeCorrection, GaugeError> {
    if group_rank < 2 {
        return Err(GaugeError::InvalidGroupRank(group_rank));
    }
    let mass_terms = if m_squared.vanishes() {
        Vec::new()
    } else {
        let normalized = normalize(&build_power_expression(4).expect("n = 4 is non-empty"))
            .expect("power expressions always normalize");
        normalized
            .series
            .terms
            .iter()
            .filter(|t| t.k == 2)
            .map(|t| GaugeMassTerm {
                coefficient_exponent: t.j,
                field_power: t.k,
                expression: format!("{} A^a_μ A^{{aμ}}", m_power(t.j)),
            })
            .collect()
    };
    Ok(GaugeCorrection {
        group_rank,
        source_term: QUARTIC_GAUGE_TERM,
        mass_terms,
    })
}

/// Range of the screened interaction, `r_int = 1/m`. `None` unless `m > 0`.
pub fn interaction_radius(m: f64) -> Option<f64> {
    (m > 0.0 && m.is_finite()).then(|| 1.0 / m)
}
