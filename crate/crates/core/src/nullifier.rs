//! Exact nullifier algebra for ideal CV graph states.
//!
//! A state is represented by `n` linearly independent, mutually commuting
//! linear quadrature forms `H = a·q + b·p + c` that annihilate it. All
//! coefficients are exact rationals, so every transformation below is exact.
//!
//! Conventions (ħ = 1, `[q, p] = i`):
//!
//! * `X(s) = exp(-i s p)` shifts position by `+s`; `Z(s) = exp(i s q)` shifts
//!   momentum by `+s`.
//! * The Fourier gate acts as `F† q F = -p`, `F† p F = q`.
//! * `S(s)` maps `q -> s q`, `p -> p / s`; the shear `exp(i s q²/2)` maps
//!   `p -> p + s q`.
//! * `CZ = exp(i q_i q_j)` maps `p_i -> p_i + q_j`, `p_j -> p_j + q_i`.
//!
//! The maps above are Heisenberg actions `U† v U`. If `H` nullifies `|φ⟩`
//! then `U H U†` nullifies `U|φ⟩`, which is `H` with every quadrature replaced
//! by the *inverse* Heisenberg image. That substitution is what
//! [`NullifierSet::conjugate`] performs.
//!
//! Mode arguments are original 1-based labels. Positions inside a
//! [`QuadratureForm`] are 0-based indices into the owning set's label list.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::graph::Graph;

pub type Rational = BigRational;

/// Integer rational.
pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// `num / den` as an exact rational.
///
/// # Panics
/// If `den == 0`.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NullifierError {
    #[error("forms act on {0} and {1} modes")]
    DimensionMismatch(usize, usize),
    #[error("mode {0} is not live (already measured or never present)")]
    ModeNotLive(usize),
    #[error("gate acts twice on mode {0}")]
    RepeatedMode(usize),
    #[error("squeeze factor must be positive, got {0}")]
    NonPositiveSqueeze(String),
    #[error("expected {expected} forms for {expected} modes, got {got}")]
    WrongFormCount { expected: usize, got: usize },
    #[error("forms are linearly dependent")]
    Dependent,
    #[error("forms {0} and {1} do not commute")]
    NotCommuting(usize, usize),
    #[error("duplicate mode label {0}")]
    DuplicateLabel(usize),
    #[error("observable commutes with every nullifier but is not in their span")]
    NotInSpan,
    #[error("cannot measure the last remaining mode's partner: set has no modes")]
    NoModes,
}

/// `Σ a_i q_i + Σ b_i p_i + c` with exact rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuadratureForm {
    q: Vec<Rational>,
    p: Vec<Rational>,
    constant: Rational,
}

impl QuadratureForm {
    pub fn zero(n: usize) -> Self {
        QuadratureForm {
            q: vec![Rational::zero(); n],
            p: vec![Rational::zero(); n],
            constant: Rational::zero(),
        }
    }

    /// The operator `q̂` at position `pos`.
    pub fn position_op(n: usize, pos: usize) -> Self {
        Self::zero(n).with_q(pos, int(1))
    }

    /// The operator `p̂` at position `pos`.
    pub fn momentum_op(n: usize, pos: usize) -> Self {
        Self::zero(n).with_p(pos, int(1))
    }

    pub fn with_q(mut self, pos: usize, c: Rational) -> Self {
        self.q[pos] = c;
        self
    }

    pub fn with_p(mut self, pos: usize, c: Rational) -> Self {
        self.p[pos] = c;
        self
    }

    pub fn with_constant(mut self, c: Rational) -> Self {
        self.constant = c;
        self
    }

    pub fn modes(&self) -> usize {
        self.q.len()
    }

    pub fn q_coeffs(&self) -> &[Rational] {
        &self.q
    }

    pub fn p_coeffs(&self) -> &[Rational] {
        &self.p
    }

    pub fn constant(&self) -> &Rational {
        &self.constant
    }

    /// True if the form has no operator part (it is a pure number).
    pub fn is_scalar(&self) -> bool {
        self.q.iter().chain(&self.p).all(Zero::is_zero)
    }

    pub fn is_zero(&self) -> bool {
        self.is_scalar() && self.constant.is_zero()
    }

    pub fn scaled(&self, k: &Rational) -> Self {
        QuadratureForm {
            q: self.q.iter().map(|x| x * k).collect(),
            p: self.p.iter().map(|x| x * k).collect(),
            constant: &self.constant * k,
        }
    }

    /// `self + k * other`.
    pub fn add_scaled(&self, other: &Self, k: &Rational) -> Self {
        QuadratureForm {
            q: self
                .q
                .iter()
                .zip(&other.q)
                .map(|(a, b)| a + b * k)
                .collect(),
            p: self
                .p
                .iter()
                .zip(&other.p)
                .map(|(a, b)| a + b * k)
                .collect(),
            constant: &self.constant + &other.constant * k,
        }
    }

    /// `β` such that `[self, other] = iβ`, i.e. `a·b' − b·a'`.
    pub fn bracket(&self, other: &Self) -> Result<Rational, NullifierError> {
        if self.modes() != other.modes() {
            return Err(NullifierError::DimensionMismatch(
                self.modes(),
                other.modes(),
            ));
        }
        let mut beta = Rational::zero();
        for i in 0..self.modes() {
            beta += &self.q[i] * &other.p[i] - &self.p[i] * &other.q[i];
        }
        Ok(beta)
    }

    /// Coefficients in `(q_1..q_n, p_1..p_n)` order, as floats.
    pub fn operator_vector_f64(&self) -> Vec<f64> {
        self.q
            .iter()
            .chain(&self.p)
            .map(|x| x.to_f64().unwrap_or(f64::NAN))
            .collect()
    }

    pub fn constant_f64(&self) -> f64 {
        self.constant.to_f64().unwrap_or(f64::NAN)
    }

    fn row(&self) -> Vec<Rational> {
        self.q
            .iter()
            .chain(&self.p)
            .cloned()
            .chain(std::iter::once(self.constant.clone()))
            .collect()
    }

    fn from_row(n: usize, row: &[Rational]) -> Self {
        QuadratureForm {
            q: row[..n].to_vec(),
            p: row[n..2 * n].to_vec(),
            constant: row[2 * n].clone(),
        }
    }

    fn drop_position(&mut self, pos: usize) {
        self.q.remove(pos);
        self.p.remove(pos);
    }

    /// Replaces every occurrence of the quadratures at `pos` by their inverse
    /// Heisenberg image under `gate`.
    fn substitute(&mut self, gate: &PositionalGate) {
        match gate {
            PositionalGate::Cz(i, j) => {
                // p_i -> p_i - q_j, p_j -> p_j - q_i
                let (bi, bj) = (self.p[*i].clone(), self.p[*j].clone());
                self.q[*j] -= bi;
                self.q[*i] -= bj;
            }
            PositionalGate::Fourier(i) => {
                // q -> p, p -> -q
                let a = std::mem::take(&mut self.q[*i]);
                let b = std::mem::take(&mut self.p[*i]);
                self.q[*i] = -b;
                self.p[*i] = a;
            }
            PositionalGate::FourierInv(i) => {
                // q -> -p, p -> q
                let a = std::mem::take(&mut self.q[*i]);
                let b = std::mem::take(&mut self.p[*i]);
                self.q[*i] = b;
                self.p[*i] = -a;
            }
            PositionalGate::Reflect(i) => {
                self.q[*i] = -&self.q[*i];
                self.p[*i] = -&self.p[*i];
            }
            PositionalGate::X(i, s) => {
                self.constant -= &self.q[*i] * s;
            }
            PositionalGate::Z(i, s) => {
                self.constant -= &self.p[*i] * s;
            }
            PositionalGate::Squeeze(i, s) => {
                // q -> q / s, p -> s p
                self.q[*i] = &self.q[*i] / s;
                self.p[*i] = &self.p[*i] * s;
            }
            PositionalGate::Shear(i, s) => {
                // p -> p - s q
                let b = self.p[*i].clone();
                self.q[*i] -= b * s;
            }
        }
    }

    /// Renders the form using the given mode labels, e.g. `p1 - q2 + 3/7`.
    pub fn display_with<'a>(&'a self, labels: &'a [usize]) -> impl fmt::Display + 'a {
        FormDisplay { form: self, labels }
    }
}

struct FormDisplay<'a> {
    form: &'a QuadratureForm,
    labels: &'a [usize],
}

impl fmt::Display for FormDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms: Vec<(Rational, String)> = Vec::new();
        for (pos, c) in self.form.p.iter().enumerate() {
            if !c.is_zero() {
                terms.push((c.clone(), format!("p{}", self.labels[pos])));
            }
        }
        for (pos, c) in self.form.q.iter().enumerate() {
            if !c.is_zero() {
                terms.push((c.clone(), format!("q{}", self.labels[pos])));
            }
        }
        if !self.form.constant.is_zero() {
            terms.push((self.form.constant.clone(), String::new()));
        }
        if terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (c, sym)) in terms.iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            match (k, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            if sym.is_empty() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{sym}")?;
            } else {
                write!(f, "{mag}*{sym}")?;
            }
        }
        Ok(())
    }
}

/// JSON form of a rational: `[numerator, denominator]`. Components that do
/// not fit in an `i64` are written as decimal strings.
fn rational_to_json(r: &Rational) -> serde_json::Value {
    let part = |b: &BigInt| match b.to_i64() {
        Some(v) => serde_json::Value::from(v),
        None => serde_json::Value::from(b.to_string()),
    };
    serde_json::Value::Array(vec![part(r.numer()), part(r.denom())])
}

fn rational_from_json(v: &serde_json::Value) -> Result<Rational, String> {
    let part = |x: &serde_json::Value| -> Result<BigInt, String> {
        match x {
            serde_json::Value::Number(n) => n
                .as_i64()
                .map(BigInt::from)
                .ok_or_else(|| format!("non-integer rational component {n}")),
            serde_json::Value::String(s) => s.parse().map_err(|_| format!("bad integer {s:?}")),
            other => Err(format!("bad rational component {other}")),
        }
    };
    match v {
        serde_json::Value::Array(a) if a.len() == 2 => {
            let (num, den) = (part(&a[0])?, part(&a[1])?);
            if den.is_zero() {
                return Err("zero denominator".into());
            }
            Ok(Rational::new(num, den))
        }
        serde_json::Value::Number(_) => Ok(Rational::from_integer(part(v)?)),
        other => Err(format!("expected [num, den], got {other}")),
    }
}

#[derive(Serialize, Deserialize)]
struct FormJson {
    q: Vec<serde_json::Value>,
    p: Vec<serde_json::Value>,
    constant: serde_json::Value,
}

impl Serialize for QuadratureForm {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        FormJson {
            q: self.q.iter().map(rational_to_json).collect(),
            p: self.p.iter().map(rational_to_json).collect(),
            constant: rational_to_json(&self.constant),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for QuadratureForm {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = FormJson::deserialize(d)?;
        if raw.q.len() != raw.p.len() {
            return Err(D::Error::custom(
                "q and p coefficient lists differ in length",
            ));
        }
        let conv = |v: &[serde_json::Value]| -> Result<Vec<Rational>, D::Error> {
            v.iter()
                .map(|x| rational_from_json(x).map_err(D::Error::custom))
                .collect()
        };
        Ok(QuadratureForm {
            q: conv(&raw.q)?,
            p: conv(&raw.p)?,
            constant: rational_from_json(&raw.constant).map_err(D::Error::custom)?,
        })
    }
}

/// Serde helper for a bare rational in `[num, den]` form.
pub mod rational_json {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        rational_to_json(r).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        rational_from_json(&v).map_err(D::Error::custom)
    }
}

/// Gaussian gates with exact parameters, addressed by mode label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum Gate {
    Cz {
        a: usize,
        b: usize,
    },
    Fourier {
        mode: usize,
    },
    FourierInv {
        mode: usize,
    },
    /// `F²`: `q -> -q`, `p -> -p`.
    Reflect {
        mode: usize,
    },
    X {
        mode: usize,
        #[serde(with = "rational_json")]
        s: Rational,
    },
    Z {
        mode: usize,
        #[serde(with = "rational_json")]
        s: Rational,
    },
    Squeeze {
        mode: usize,
        #[serde(with = "rational_json")]
        s: Rational,
    },
    Shear {
        mode: usize,
        #[serde(with = "rational_json")]
        s: Rational,
    },
}

#[derive(Debug, Clone)]
enum PositionalGate {
    Cz(usize, usize),
    Fourier(usize),
    FourierInv(usize),
    Reflect(usize),
    X(usize, Rational),
    Z(usize, Rational),
    Squeeze(usize, Rational),
    Shear(usize, Rational),
}

/// Single-mode observable for [`NullifierSet::measure`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    Q,
    P,
    /// `p̂ + s q̂`, measured by shearing then reading `p̂`.
    PPlusSQ(#[serde(with = "rational_json")] Rational),
}

/// An `n`-mode nullifier basis together with the original labels of the
/// live modes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NullifierSet {
    labels: Vec<usize>,
    forms: Vec<QuadratureForm>,
}

/// Outcome of [`NullifierSet::measure`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Measurement {
    pub state: NullifierSet,
    /// The recorded result. Equals the requested outcome unless the state was
    /// already an eigenstate of the observable.
    pub outcome: Rational,
    /// `Some(m)` when the observable already commuted with every nullifier:
    /// the state is an eigenstate and `m` is the only possible result.
    pub forced: Option<Rational>,
}

impl NullifierSet {
    /// Validated constructor: `forms.len() == labels.len()`, forms independent
    /// and pairwise commuting.
    pub fn new(labels: Vec<usize>, forms: Vec<QuadratureForm>) -> Result<Self, NullifierError> {
        let n = labels.len();
        if forms.len() != n {
            return Err(NullifierError::WrongFormCount {
                expected: n,
                got: forms.len(),
            });
        }
        let mut sorted = labels.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(NullifierError::DuplicateLabel(w[0]));
        }
        for f in &forms {
            if f.modes() != n {
                return Err(NullifierError::DimensionMismatch(f.modes(), n));
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if !forms[i].bracket(&forms[j])?.is_zero() {
                    return Err(NullifierError::NotCommuting(i, j));
                }
            }
        }
        let ops: Vec<Vec<Rational>> = forms
            .iter()
            .map(|f| f.q.iter().chain(&f.p).cloned().collect())
            .collect();
        if rank(ops) != n {
            return Err(NullifierError::Dependent);
        }
        Ok(NullifierSet { labels, forms })
    }

    /// `H_i = p_i − Σ_{j ∈ N(i)} q_j` for every vertex.
    pub fn standard(g: &Graph) -> Self {
        let n = g.n();
        let forms = (1..=n)
            .map(|v| {
                let mut f = QuadratureForm::momentum_op(n, v - 1);
                for &w in g.neighbors(v) {
                    f.q[w - 1] = int(-1);
                }
                f
            })
            .collect();
        NullifierSet {
            labels: (1..=n).collect(),
            forms,
        }
    }

    /// `{p_1, ..., p_n}`: the product of zero-momentum eigenstates.
    pub fn zero_momentum(n: usize) -> Self {
        NullifierSet {
            labels: (1..=n).collect(),
            forms: (0..n).map(|k| QuadratureForm::momentum_op(n, k)).collect(),
        }
    }

    /// The same forms addressed by new labels.
    pub fn relabeled(&self, labels: Vec<usize>) -> Result<Self, NullifierError> {
        NullifierSet::new(labels, self.forms.clone())
    }

    /// The same state with modes stored in the order given by `labels`.
    pub fn reordered(&self, labels: &[usize]) -> Result<Self, NullifierError> {
        let n = self.modes();
        if labels.len() != n {
            return Err(NullifierError::DimensionMismatch(labels.len(), n));
        }
        let src: Vec<usize> = labels
            .iter()
            .map(|&l| self.position(l))
            .collect::<Result<_, _>>()?;
        let forms = self
            .forms
            .iter()
            .map(|f| {
                let mut g = QuadratureForm::zero(n).with_constant(f.constant.clone());
                for (k, &s) in src.iter().enumerate() {
                    g.q[k] = f.q[s].clone();
                    g.p[k] = f.p[s].clone();
                }
                g
            })
            .collect();
        NullifierSet::new(labels.to_vec(), forms)
    }

    /// Product state: `self` on the leading positions, `other` after it.
    pub fn tensor(&self, other: &NullifierSet) -> Result<Self, NullifierError> {
        let (a, b) = (self.modes(), other.modes());
        let pad = |f: &QuadratureForm, before: usize, after: usize| {
            let mut g = QuadratureForm::zero(before + f.modes() + after);
            for k in 0..f.modes() {
                g.q[before + k] = f.q[k].clone();
                g.p[before + k] = f.p[k].clone();
            }
            g.constant = f.constant.clone();
            g
        };
        let labels = self.labels.iter().chain(&other.labels).copied().collect();
        let forms = self
            .forms
            .iter()
            .map(|f| pad(f, 0, b))
            .chain(other.forms.iter().map(|f| pad(f, a, 0)))
            .collect();
        NullifierSet::new(labels, forms)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn forms(&self) -> &[QuadratureForm] {
        &self.forms
    }

    pub fn modes(&self) -> usize {
        self.labels.len()
    }

    pub fn position(&self, label: usize) -> Result<usize, NullifierError> {
        self.labels
            .iter()
            .position(|&l| l == label)
            .ok_or(NullifierError::ModeNotLive(label))
    }

    /// All pairwise brackets vanish.
    pub fn is_commuting(&self) -> bool {
        (0..self.forms.len()).all(|i| {
            (i + 1..self.forms.len()).all(|j| {
                self.forms[i]
                    .bracket(&self.forms[j])
                    .is_ok_and(|b| b.is_zero())
            })
        })
    }

    fn positional(&self, gate: &Gate) -> Result<PositionalGate, NullifierError> {
        let pos = |l: usize| self.position(l);
        Ok(match gate {
            Gate::Cz { a, b } => {
                if a == b {
                    return Err(NullifierError::RepeatedMode(*a));
                }
                PositionalGate::Cz(pos(*a)?, pos(*b)?)
            }
            Gate::Fourier { mode } => PositionalGate::Fourier(pos(*mode)?),
            Gate::FourierInv { mode } => PositionalGate::FourierInv(pos(*mode)?),
            Gate::Reflect { mode } => PositionalGate::Reflect(pos(*mode)?),
            Gate::X { mode, s } => PositionalGate::X(pos(*mode)?, s.clone()),
            Gate::Z { mode, s } => PositionalGate::Z(pos(*mode)?, s.clone()),
            Gate::Squeeze { mode, s } => {
                if !s.is_positive() {
                    return Err(NullifierError::NonPositiveSqueeze(s.to_string()));
                }
                PositionalGate::Squeeze(pos(*mode)?, s.clone())
            }
            Gate::Shear { mode, s } => PositionalGate::Shear(pos(*mode)?, s.clone()),
        })
    }

    /// Nullifiers of `U|φ⟩` given nullifiers of `|φ⟩`.
    pub fn conjugate(&self, gate: &Gate) -> Result<Self, NullifierError> {
        let g = self.positional(gate)?;
        let mut out = self.clone();
        for f in &mut out.forms {
            f.substitute(&g);
        }
        Ok(out)
    }

    /// Applies gates left to right (the first gate acts first on the state).
    pub fn conjugate_all<'a>(
        &self,
        gates: impl IntoIterator<Item = &'a Gate>,
    ) -> Result<Self, NullifierError> {
        gates
            .into_iter()
            .try_fold(self.clone(), |ns, g| ns.conjugate(g))
    }

    /// Measures `observable` on mode `label` and returns the post-measurement
    /// nullifiers of the remaining modes.
    ///
    /// The basis is recombined so that exactly one form fails to commute with
    /// the observable: the lowest-index non-commuting form is the pivot,
    /// rescaled to bracket `-1` with the observable, and eliminated from the
    /// others. The pivot is then replaced by `observable - outcome`, the
    /// measured quadrature is set to the outcome everywhere else, and the mode
    /// is dropped.
    pub fn measure(
        &self,
        label: usize,
        observable: &Observable,
        outcome: &Rational,
    ) -> Result<Measurement, NullifierError> {
        let k = self.position(label)?;
        let n = self.modes();
        let mut work = match observable {
            Observable::PPlusSQ(s) => self.conjugate(&Gate::Shear {
                mode: label,
                s: s.clone(),
            })?,
            _ => self.clone(),
        };
        let measures_q = matches!(observable, Observable::Q);
        let obs = if measures_q {
            QuadratureForm::position_op(n, k)
        } else {
            QuadratureForm::momentum_op(n, k)
        };

        let brackets: Vec<Rational> = work
            .forms
            .iter()
            .map(|f| obs.bracket(f))
            .collect::<Result<_, _>>()?;
        let noncommuting: Vec<usize> = (0..n).filter(|&j| !brackets[j].is_zero()).collect();

        let (pivot, forced) = if let Some((&pivot, rest)) = noncommuting.split_first() {
            let norm = -brackets[pivot].recip();
            work.forms[pivot] = work.forms[pivot].scaled(&norm);
            let pivot_form = work.forms[pivot].clone();
            for &j in rest {
                // bracket(obs, pivot_form) == -1
                work.forms[j] = work.forms[j].add_scaled(&pivot_form, &brackets[j]);
            }
            (pivot, None)
        } else {
            let ops: Vec<Vec<Rational>> = work
                .forms
                .iter()
                .map(|f| f.q.iter().chain(&f.p).cloned().collect())
                .collect();
            let target: Vec<Rational> = obs.q.iter().chain(&obs.p).cloned().collect();
            let coeffs = solve_combination(&ops, &target).ok_or(NullifierError::NotInSpan)?;
            let forced: Rational = -coeffs
                .iter()
                .zip(&work.forms)
                .map(|(c, f)| c * &f.constant)
                .fold(Rational::zero(), |acc, x| acc + x);
            let pivot = coeffs
                .iter()
                .position(|c| !c.is_zero())
                .ok_or(NullifierError::NotInSpan)?;
            (pivot, Some(forced))
        };

        let m = forced.clone().unwrap_or_else(|| outcome.clone());
        let mut forms = Vec::with_capacity(n - 1);
        for (j, mut f) in work.forms.into_iter().enumerate() {
            if j == pivot {
                continue;
            }
            let coeff = if measures_q {
                std::mem::take(&mut f.q[k])
            } else {
                std::mem::take(&mut f.p[k])
            };
            f.constant += coeff * &m;
            f.drop_position(k);
            forms.push(f);
        }
        let mut labels = self.labels.clone();
        labels.remove(k);
        Ok(Measurement {
            state: NullifierSet { labels, forms },
            outcome: m,
            forced,
        })
    }

    /// Reduced row-echelon form of the augmented rows `[q | p | c]`. Two sets
    /// over the same labels describe the same state iff these agree.
    pub fn canonical(&self) -> Vec<QuadratureForm> {
        let n = self.modes();
        let rows = self.forms.iter().map(QuadratureForm::row).collect();
        let (reduced, _) = rref(rows);
        reduced
            .iter()
            .map(|r| QuadratureForm::from_row(n, r))
            .collect()
    }

    pub fn same_state(&self, other: &Self) -> bool {
        self.labels == other.labels && self.canonical() == other.canonical()
    }

    /// Whether `form` lies in the span of this set (so it also nullifies the state).
    pub fn spans(&self, form: &QuadratureForm) -> bool {
        if form.modes() != self.modes() {
            return false;
        }
        let rows: Vec<Vec<Rational>> = self.forms.iter().map(QuadratureForm::row).collect();
        solve_combination(&rows, &form.row()).is_some()
    }

    /// Tries to identify the state as a graph state up to per-mode
    /// reflections and momentum displacements. Fourier corrections are not
    /// searched; see [`NullifierSet::recognize_graph_with`].
    pub fn graph_from_nullifiers(&self) -> GraphRecognition {
        self.recognize_graph_with(FourierSearch::Disabled)
    }

    /// Like [`NullifierSet::graph_from_nullifiers`], optionally also trying
    /// a Fourier correction on each subset of modes (fewest modes first).
    pub fn recognize_graph_with(&self, search: FourierSearch) -> GraphRecognition {
        let n = self.modes();
        let max_mask: u64 = match search {
            FourierSearch::Disabled => 1,
            FourierSearch::Enabled => 1u64 << n.min(20),
        };
        let mut masks: Vec<u64> = (0..max_mask).collect();
        masks.sort_by_key(|m| (m.count_ones(), *m));
        let mut last_reason = String::new();
        for mask in masks {
            let fourier: Vec<bool> = (0..n).map(|k| mask >> k & 1 == 1).collect();
            let undo: Vec<Gate> = (0..n)
                .filter(|&k| fourier[k])
                .map(|k| Gate::FourierInv {
                    mode: self.labels[k],
                })
                .collect();
            let base = match self.conjugate_all(&undo) {
                Ok(b) => b,
                Err(e) => return not_graph(self, e.to_string()),
            };
            match base.match_graph_up_to_reflection() {
                Ok((graph, reflect, z)) => {
                    let corrections: Vec<ModeCorrection> = (0..n)
                        .map(|k| ModeCorrection {
                            label: self.labels[k],
                            fourier_power: u8::from(fourier[k]),
                            reflection: reflect[k],
                            x: Rational::zero(),
                            z: z[k].clone(),
                        })
                        .collect();
                    return GraphRecognition::Graph { graph, corrections };
                }
                Err(reason) => last_reason = reason,
            }
        }
        not_graph(self, last_reason)
    }

    /// With no Fourier corrections: finds `G`, reflections `R` and momentum
    /// shifts `z` such that the set equals the nullifiers of `R Z(z) |G⟩`.
    fn match_graph_up_to_reflection(&self) -> Result<(Graph, Vec<bool>, Vec<Rational>), String> {
        let n = self.modes();
        let (w, d) = self.normalize_momentum_block()?;
        let _ = d;
        for i in 0..n {
            if !w[i][i].is_zero() {
                return Err(format!(
                    "mode {} carries a self-coupling {} (needs a shear, not a graph edge)",
                    self.labels[i], w[i][i]
                ));
            }
            for j in 0..n {
                if w[i][j] != w[j][i] {
                    return Err("coupling matrix is not symmetric".into());
                }
                if !(w[i][j].is_zero() || w[i][j].abs().is_one()) {
                    return Err(format!(
                        "coupling {} between modes {} and {} is not a unit edge",
                        w[i][j], self.labels[i], self.labels[j]
                    ));
                }
            }
        }
        // signs: sigma_i sigma_j w_ij = +1 on every edge
        let mut sigma: Vec<Option<i8>> = vec![None; n];
        for root in 0..n {
            if sigma[root].is_some() {
                continue;
            }
            sigma[root] = Some(1);
            let mut stack = vec![root];
            while let Some(i) = stack.pop() {
                let si = sigma[i].unwrap_or(1);
                for j in 0..n {
                    if w[i][j].is_zero() {
                        continue;
                    }
                    let want = if w[i][j].is_positive() { si } else { -si };
                    match sigma[j] {
                        None => {
                            sigma[j] = Some(want);
                            stack.push(j);
                        }
                        Some(sj) if sj != want => {
                            return Err("edge signs cannot be fixed by reflections".into())
                        }
                        Some(_) => {}
                    }
                }
            }
        }
        let reflect: Vec<bool> = sigma.iter().map(|s| *s == Some(-1)).collect();
        let undo: Vec<Gate> = (0..n)
            .filter(|&k| reflect[k])
            .map(|k| Gate::Reflect {
                mode: self.labels[k],
            })
            .collect();
        let unreflected = self.conjugate_all(&undo).map_err(|e| e.to_string())?;
        let (w, d) = unreflected.normalize_momentum_block()?;
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if w[i][j].is_one() {
                    edges.push((i + 1, j + 1));
                } else if !w[i][j].is_zero() {
                    return Err("reflections left a negative edge".into());
                }
            }
        }
        let graph = Graph::new(n, &edges).map_err(|e| e.to_string())?;
        // p_i - Σ q_j + d_i  is  H_i - z_i  with z_i = -d_i
        let z = d.into_iter().map(|x| -x).collect();
        Ok((graph, reflect, z))
    }

    /// Rewrites the basis as `p_i − Σ_j W_ij q_j + d_i`. Fails if the momentum
    /// block is singular.
    fn normalize_momentum_block(&self) -> Result<(Vec<Vec<Rational>>, Vec<Rational>), String> {
        let n = self.modes();
        // augmented [B | A | c], reduce B to identity
        let rows: Vec<Vec<Rational>> = self
            .forms
            .iter()
            .map(|f| {
                f.p.iter()
                    .chain(&f.q)
                    .cloned()
                    .chain(std::iter::once(f.constant.clone()))
                    .collect()
            })
            .collect();
        let (reduced, pivots) = rref(rows);
        if pivots.len() < n || pivots.iter().enumerate().any(|(i, &p)| p != i) {
            return Err("momentum block is singular (some mode has no p-component)".into());
        }
        let w = reduced
            .iter()
            .map(|r| r[n..2 * n].iter().map(|x| -x).collect())
            .collect();
        let d = reduced.iter().map(|r| r[2 * n].clone()).collect();
        Ok((w, d))
    }
}

/// `p_i − Σ_{j ∈ N(i)} q_j` for every vertex of `g`.
pub fn standard_nullifiers(g: &Graph) -> NullifierSet {
    NullifierSet::standard(g)
}

/// `β` with `[f, g] = iβ`.
pub fn symplectic_bracket(
    f: &QuadratureForm,
    g: &QuadratureForm,
) -> Result<Rational, NullifierError> {
    f.bracket(g)
}

pub fn graph_from_nullifiers(ns: &NullifierSet) -> GraphRecognition {
    ns.graph_from_nullifiers()
}

fn not_graph(ns: &NullifierSet, reason: String) -> GraphRecognition {
    GraphRecognition::NotGraphState {
        reason,
        reduced: ns.canonical(),
    }
}

impl fmt::Display for NullifierSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, form) in self.forms.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", form.display_with(&self.labels))?;
        }
        write!(f, "}}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FourierSearch {
    Disabled,
    Enabled,
}

/// Local correction on one mode. The state is
/// `F^fourier_power · R^reflection · X(x) · Z(z) |G⟩` on that mode, with the
/// displacements innermost.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeCorrection {
    pub label: usize,
    pub fourier_power: u8,
    pub reflection: bool,
    #[serde(with = "rational_json")]
    pub x: Rational,
    #[serde(with = "rational_json")]
    pub z: Rational,
}

impl ModeCorrection {
    pub fn is_identity(&self) -> bool {
        self.fourier_power % 4 == 0 && !self.reflection && self.x.is_zero() && self.z.is_zero()
    }

    /// Gates in application order that realise this correction.
    pub fn gates(&self) -> Vec<Gate> {
        let mode = self.label;
        let mut g = Vec::new();
        if !self.z.is_zero() {
            g.push(Gate::Z {
                mode,
                s: self.z.clone(),
            });
        }
        if !self.x.is_zero() {
            g.push(Gate::X {
                mode,
                s: self.x.clone(),
            });
        }
        if self.reflection {
            g.push(Gate::Reflect { mode });
        }
        for _ in 0..self.fourier_power % 4 {
            g.push(Gate::Fourier { mode });
        }
        g
    }
}

/// Result of [`NullifierSet::graph_from_nullifiers`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphRecognition {
    Graph {
        graph: Graph,
        corrections: Vec<ModeCorrection>,
    },
    NotGraphState {
        reason: String,
        reduced: Vec<QuadratureForm>,
    },
}

impl GraphRecognition {
    pub fn graph(&self) -> Option<&Graph> {
        match self {
            GraphRecognition::Graph { graph, .. } => Some(graph),
            GraphRecognition::NotGraphState { .. } => None,
        }
    }

    pub fn corrections(&self) -> &[ModeCorrection] {
        match self {
            GraphRecognition::Graph { corrections, .. } => corrections,
            GraphRecognition::NotGraphState { .. } => &[],
        }
    }
}

/// Exact reduced row-echelon form; returns the non-zero rows and pivot columns.
fn rref(mut rows: Vec<Vec<Rational>>) -> (Vec<Vec<Rational>>, Vec<usize>) {
    let cols = rows.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(found) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, found);
        let inv = rows[r][c].recip();
        for x in &mut rows[r] {
            *x = &*x * &inv;
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let k = row[c].clone();
            for (x, p) in row.iter_mut().zip(&pivot_row) {
                *x -= &k * p;
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    rows.truncate(r);
    (rows, pivots)
}

fn rank(rows: Vec<Vec<Rational>>) -> usize {
    rref(rows).1.len()
}

/// Finds `c` with `Σ c_j rows[j] == target`, if one exists.
fn solve_combination(rows: &[Vec<Rational>], target: &[Rational]) -> Option<Vec<Rational>> {
    let m = rows.len();
    let len = target.len();
    // columns of the system are the rows; solve M c = target with M[len x m]
    let system: Vec<Vec<Rational>> = (0..len)
        .map(|i| {
            rows.iter()
                .map(|r| r[i].clone())
                .chain(std::iter::once(target[i].clone()))
                .collect()
        })
        .collect();
    let (reduced, pivots) = rref(system);
    if pivots.last() == Some(&m) {
        return None;
    }
    let mut c = vec![Rational::zero(); m];
    for (row, &p) in reduced.iter().zip(&pivots) {
        c[p] = row[m].clone();
    }
    Some(c)
}
