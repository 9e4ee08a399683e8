//! Pattern-invariant operators.
//!
//! An operator is an immutable rule tree over a fixed [`InfiniteGraph`].
//! Leaves are local rules (adjacency, degree, pattern-keyed diagonals and
//! orbit tables); inner nodes are the ⋆-algebra operations. Entries are
//! evaluated on balls of the infinite graph, so they never depend on a
//! window.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::marker::PhantomData;
use std::rc::Rc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{tree_ball_bound, InfiniteGraph, VertexId, Window};
use crate::pattern::{canonical_form, CanonicalForm, PatternCode};
use crate::rational::{self, Rational};

/// Largest window for which a finite section is assembled.
pub const DEFAULT_DENSE_LIMIT: usize = 4096;

/// Key of an orbit-table entry: the root pattern and a canonical position.
///
/// A vertex at canonical position `p` of the first canonical labeling reads
/// `(code, p)` if present, and otherwise the entry of its orbit
/// representative (the least position in its orbit). Well-formed tables only
/// list orbit representatives.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OrbitKey {
    pub code: PatternCode,
    pub position: u16,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Rule {
    Identity,
    Adjacency,
    /// Diagonal operator with the vertex degree on the diagonal.
    Degree,
    PatternDiagonal {
        radius: u32,
        table: BTreeMap<PatternCode, Rational>,
    },
    OrbitTable {
        radius: u32,
        table: BTreeMap<OrbitKey, Rational>,
    },
    Sum(Box<PatternOperator>, Box<PatternOperator>),
    Product(Box<PatternOperator>, Box<PatternOperator>),
    Scale(Rational, Box<PatternOperator>),
    Star(Box<PatternOperator>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PatternOperator {
    graph: InfiniteGraph,
    rule: Rule,
    radius: u32,
    sup_bound: Rational,
}

fn ball_bound(g: &InfiniteGraph, r: u32) -> Rational {
    let t = tree_ball_bound(r, g.degree_bound()).min(g.max_ball_size(r));
    Rational::from_integer(BigInt::from(t))
}

fn same_graph(a: &PatternOperator, b: &PatternOperator) -> Result<()> {
    if a.graph != b.graph {
        return Err(Error::InvalidArgument("operators live on different graphs".into()));
    }
    Ok(())
}

impl PatternOperator {
    fn leaf(graph: &InfiniteGraph, rule: Rule, radius: u32, sup_bound: Rational) -> Self {
        PatternOperator { graph: graph.clone(), rule, radius, sup_bound }
    }

    pub fn identity(g: &InfiniteGraph) -> Self {
        Self::leaf(g, Rule::Identity, 0, Rational::one())
    }

    pub fn zero(g: &InfiniteGraph) -> Self {
        Self::identity(g).scale(Rational::zero())
    }

    pub fn adjacency(g: &InfiniteGraph) -> Self {
        Self::leaf(g, Rule::Adjacency, 1, Rational::one())
    }

    pub fn degree(g: &InfiniteGraph) -> Self {
        let d = Rational::from_integer(BigInt::from(g.degree_bound()));
        Self::leaf(g, Rule::Degree, 1, d)
    }

    /// Graph Laplacian `D − A`.
    pub fn laplacian(g: &InfiniteGraph) -> Self {
        Self::degree(g).add(&Self::adjacency(g).scale(rational::int(-1))).expect("same graph")
    }

    /// Diagonal operator `V(x,x) = table[code_r(x)]`, 0 for absent codes.
    pub fn pattern_potential(g: &InfiniteGraph, radius: u32, table: BTreeMap<PatternCode, Rational>) -> Result<Self> {
        if let Some(bad) = table.keys().find(|c| c.radius() != radius) {
            return Err(Error::InvalidArgument(format!(
                "pattern {bad} has radius {}, table radius is {radius}",
                bad.radius()
            )));
        }
        let m = table.values().map(|v| v.abs()).max().unwrap_or_else(Rational::zero);
        Ok(Self::leaf(g, Rule::PatternDiagonal { radius, table }, radius, m))
    }

    pub fn orbit_table(g: &InfiniteGraph, radius: u32, table: BTreeMap<OrbitKey, Rational>) -> Result<Self> {
        if let Some(bad) = table.keys().find(|k| k.code.radius() != radius) {
            return Err(Error::InvalidArgument(format!(
                "pattern {} has radius {}, table radius is {radius}",
                bad.code,
                bad.code.radius()
            )));
        }
        let m = table.values().map(|v| v.abs()).max().unwrap_or_else(Rational::zero);
        Ok(Self::leaf(g, Rule::OrbitTable { radius, table }, radius, m))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        same_graph(self, other)?;
        Ok(PatternOperator {
            graph: self.graph.clone(),
            radius: self.radius.max(other.radius),
            sup_bound: &self.sup_bound + &other.sup_bound,
            rule: Rule::Sum(Box::new(self.clone()), Box::new(other.clone())),
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        same_graph(self, other)?;
        // at most |ball(x, r_A)| nonzero terms in Σ_z A(x,z) B(z,y)
        let terms = ball_bound(&self.graph, self.radius);
        Ok(PatternOperator {
            graph: self.graph.clone(),
            radius: self.radius + other.radius,
            sup_bound: &self.sup_bound * &other.sup_bound * terms,
            rule: Rule::Product(Box::new(self.clone()), Box::new(other.clone())),
        })
    }

    pub fn scale(&self, c: Rational) -> Self {
        PatternOperator {
            graph: self.graph.clone(),
            radius: self.radius,
            sup_bound: c.abs() * &self.sup_bound,
            rule: Rule::Scale(c, Box::new(self.clone())),
        }
    }

    /// Adjoint; conjugation is trivial on rational coefficients.
    pub fn star(&self) -> Self {
        PatternOperator {
            graph: self.graph.clone(),
            radius: self.radius,
            sup_bound: self.sup_bound.clone(),
            rule: Rule::Star(Box::new(self.clone())),
        }
    }

    /// `A − λ·I`.
    pub fn shift(&self, lambda: &Rational) -> Self {
        self.add(&Self::identity(&self.graph).scale(-lambda.clone())).expect("same graph")
    }

    /// `C*·C`.
    pub fn gram(&self) -> Self {
        self.star().mul(self).expect("same graph")
    }

    pub fn pow(&self, k: u32) -> Self {
        assert!(k >= 1, "power must be positive");
        let mut acc = self.clone();
        for _ in 1..k {
            acc = acc.mul(self).expect("same graph");
        }
        acc
    }

    pub fn graph(&self) -> &InfiniteGraph {
        &self.graph
    }

    pub fn rule(&self) -> &Rule {
        &self.rule
    }

    /// Propagation radius `r_A`.
    pub fn radius(&self) -> u32 {
        self.radius
    }

    /// Upper bound `m_A ≥ sup |A(x,y)|`.
    pub fn sup_bound(&self) -> &Rational {
        &self.sup_bound
    }

    /// True when the rule tree is symmetric by construction.
    pub fn is_structurally_self_adjoint(&self) -> bool {
        fn is_gram(a: &PatternOperator, b: &PatternOperator) -> bool {
            matches!(&a.rule, Rule::Star(inner) if **inner == *b)
        }
        match &self.rule {
            Rule::Identity | Rule::Adjacency | Rule::Degree | Rule::PatternDiagonal { .. } => true,
            Rule::OrbitTable { .. } => false,
            Rule::Sum(a, b) => a.is_structurally_self_adjoint() && b.is_structurally_self_adjoint(),
            Rule::Scale(_, a) => a.is_structurally_self_adjoint(),
            Rule::Star(a) => a.is_structurally_self_adjoint(),
            Rule::Product(a, b) => {
                is_gram(a, b)
                    || (a == b && a.is_structurally_self_adjoint())
                    || (a.is_structurally_self_adjoint()
                        && b.is_structurally_self_adjoint()
                        && matches!(a.rule, Rule::Identity | Rule::Scale(_, _))
                        && is_scalar_identity(a))
            }
        }
    }

    /// Single-entry evaluation; see [`Evaluator`] for repeated queries.
    pub fn entry(&self, x: VertexId, y: VertexId) -> Result<Rational> {
        Evaluator::new().entry(self, x, y)
    }

    /// Nonzero entries of row `x`, sorted by column vertex.
    pub fn row(&self, x: VertexId) -> Result<Vec<(VertexId, Rational)>> {
        Evaluator::new().row(self, x).map(|r| r.as_ref().clone())
    }

    /// `m_A · (1 + T(r_A, d))`: bounds the norm of every finite section.
    pub fn norm_bound(&self) -> Rational {
        let t = tree_ball_bound(self.radius, self.graph.degree_bound());
        &self.sup_bound * Rational::from_integer(BigInt::from(1 + t))
    }

    pub fn to_spec(&self) -> RuleSpec {
        match &self.rule {
            Rule::Identity => RuleSpec::Identity,
            Rule::Adjacency => RuleSpec::Adjacency,
            Rule::Degree => RuleSpec::Degree,
            Rule::PatternDiagonal { radius, table } => RuleSpec::Potential {
                radius: *radius,
                table: table.iter().map(|(c, v)| PotentialEntry { code: c.clone(), value: v.clone() }).collect(),
            },
            Rule::OrbitTable { radius, table } => RuleSpec::OrbitTable {
                radius: *radius,
                table: table
                    .iter()
                    .map(|(k, v)| OrbitEntry { code: k.code.clone(), position: k.position, value: v.clone() })
                    .collect(),
            },
            Rule::Sum(a, b) => RuleSpec::Add { left: Box::new(a.to_spec()), right: Box::new(b.to_spec()) },
            Rule::Product(a, b) => RuleSpec::Mul { left: Box::new(a.to_spec()), right: Box::new(b.to_spec()) },
            Rule::Scale(c, a) => RuleSpec::Scale { factor: c.clone(), arg: Box::new(a.to_spec()) },
            Rule::Star(a) => RuleSpec::Star { arg: Box::new(a.to_spec()) },
        }
    }
}

fn is_scalar_identity(a: &PatternOperator) -> bool {
    match &a.rule {
        Rule::Identity => true,
        Rule::Scale(_, inner) => is_scalar_identity(inner),
        _ => false,
    }
}

type Row = Rc<Vec<(VertexId, Rational)>>;

struct BallData {
    vertices: Vec<VertexId>,
    form: CanonicalForm,
    orbit_keys: Vec<u16>,
    first_positions: Vec<u16>,
}

/// Entry evaluator with per-instance caches of canonical forms and rows.
///
/// Rows are cached per operator node, so every operator passed in must
/// outlive the evaluator. Not shareable across threads; create one per
/// worker.
#[derive(Default)]
pub struct Evaluator<'a> {
    balls: RefCell<HashMap<(VertexId, u32), Rc<BallData>>>,
    rows: RefCell<HashMap<(usize, VertexId), Row>>,
    ops: PhantomData<&'a PatternOperator>,
}

impl<'a> Evaluator<'a> {
    pub fn new() -> Self {
        Self::default()
    }

    fn ball_data(&self, g: &InfiniteGraph, x: VertexId, r: u32) -> Result<Rc<BallData>> {
        if let Some(b) = self.balls.borrow().get(&(x, r)) {
            return Ok(b.clone());
        }
        let ball = g.ball(x, r)?;
        let form = canonical_form(&ball)?;
        let orbit_keys = form.orbit_keys();
        let mut first_positions = vec![0u16; ball.len()];
        for (p, &v) in form.orders[0].iter().enumerate() {
            first_positions[v] = p as u16;
        }
        let data = Rc::new(BallData { vertices: ball.vertices, form, orbit_keys, first_positions });
        self.balls.borrow_mut().insert((x, r), data.clone());
        Ok(data)
    }

    fn orbit_value<'t>(table: &'t BTreeMap<OrbitKey, Rational>, data: &BallData, local: usize) -> Option<&'t Rational> {
        let code = data.form.code.clone();
        table
            .get(&OrbitKey { code: code.clone(), position: data.first_positions[local] })
            .or_else(|| table.get(&OrbitKey { code, position: data.orbit_keys[local] }))
    }

    pub fn entry(&self, op: &'a PatternOperator, x: VertexId, y: VertexId) -> Result<Rational> {
        let g = &op.graph;
        if g.distance_lower_bound(x, y) > op.radius {
            return Ok(Rational::zero());
        }
        Ok(match &op.rule {
            Rule::Identity => {
                if x == y {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            }
            Rule::Adjacency => {
                if g.neighbors(x).contains(&y) {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            }
            Rule::Degree => {
                if x == y {
                    Rational::from_integer(BigInt::from(g.neighbors(x).len()))
                } else {
                    Rational::zero()
                }
            }
            Rule::PatternDiagonal { radius, table } => {
                if x != y {
                    return Ok(Rational::zero());
                }
                let data = self.ball_data(g, x, *radius)?;
                table.get(&data.form.code).cloned().unwrap_or_else(Rational::zero)
            }
            Rule::OrbitTable { radius, table } => {
                let data = self.ball_data(g, x, *radius)?;
                match data.vertices.iter().position(|v| *v == y) {
                    Some(local) => Self::orbit_value(table, &data, local).cloned().unwrap_or_else(Rational::zero),
                    None => Rational::zero(),
                }
            }
            Rule::Sum(a, b) => self.entry(a, x, y)? + self.entry(b, x, y)?,
            Rule::Scale(c, a) => c * self.entry(a, x, y)?,
            Rule::Star(a) => self.entry(a, y, x)?,
            Rule::Product(a, b) => {
                let mut acc = Rational::zero();
                for (z, v) in self.row(a, x)?.iter() {
                    let w = self.entry(b, *z, y)?;
                    if !w.is_zero() {
                        acc += v * w;
                    }
                }
                acc
            }
        })
    }

    /// Nonzero entries of row `x`, sorted by column.
    pub fn row(&self, op: &'a PatternOperator, x: VertexId) -> Result<Row> {
        let key = (op as *const PatternOperator as usize, x);
        if let Some(r) = self.rows.borrow().get(&key) {
            return Ok(r.clone());
        }
        let row = Rc::new(self.compute_row(op, x)?);
        self.rows.borrow_mut().insert(key, row.clone());
        Ok(row)
    }

    fn compute_row(&self, op: &'a PatternOperator, x: VertexId) -> Result<Vec<(VertexId, Rational)>> {
        let g = &op.graph;
        let one = || Rational::one();
        let mut out: Vec<(VertexId, Rational)> = match &op.rule {
            Rule::Identity => vec![(x, one())],
            Rule::Adjacency => g.neighbors(x).into_iter().map(|y| (y, one())).collect(),
            Rule::Degree => vec![(x, Rational::from_integer(BigInt::from(g.neighbors(x).len())))],
            Rule::PatternDiagonal { radius, table } => {
                let data = self.ball_data(g, x, *radius)?;
                table.get(&data.form.code).map(|v| vec![(x, v.clone())]).unwrap_or_default()
            }
            Rule::OrbitTable { radius, table } => {
                let data = self.ball_data(g, x, *radius)?;
                (0..data.vertices.len())
                    .filter_map(|local| {
                        Self::orbit_value(table, &data, local).map(|v| (data.vertices[local], v.clone()))
                    })
                    .collect()
            }
            Rule::Sum(a, b) => {
                let mut acc: BTreeMap<VertexId, Rational> = BTreeMap::new();
                for (y, v) in self.row(a, x)?.iter().chain(self.row(b, x)?.iter()) {
                    *acc.entry(*y).or_insert_with(Rational::zero) += v;
                }
                acc.into_iter().collect()
            }
            Rule::Scale(c, a) => self.row(a, x)?.iter().map(|(y, v)| (*y, c * v)).collect(),
            Rule::Star(a) => {
                let ball = g.ball(x, op.radius)?;
                let mut out = Vec::new();
                for y in ball.vertices {
                    let v = self.entry(a, y, x)?;
                    out.push((y, v));
                }
                out
            }
            Rule::Product(a, b) => {
                let mut acc: BTreeMap<VertexId, Rational> = BTreeMap::new();
                for (z, v) in self.row(a, x)?.iter() {
                    for (y, w) in self.row(b, *z)?.iter() {
                        *acc.entry(*y).or_insert_with(Rational::zero) += v * w;
                    }
                }
                acc.into_iter().collect()
            }
        };
        out.retain(|(_, v)| !v.is_zero());
        out.sort_by_key(|a| a.0);
        Ok(out)
    }
}

/// Compression `p_Q A i_Q` of an operator to a window, stored by sparse rows.
#[derive(Clone, Debug)]
pub struct FiniteSection {
    window: Window,
    rows: Vec<Vec<(usize, Rational)>>,
    source: RuleSpec,
}

#[cfg(feature = "parallel")]
fn section_rows(op: &PatternOperator, q: &Window) -> Result<Vec<Vec<(usize, Rational)>>> {
    use rayon::prelude::*;
    q.vertices().par_iter().map_init(Evaluator::new, |eval, x| section_row(eval, op, q, *x)).collect()
}

#[cfg(not(feature = "parallel"))]
fn section_rows(op: &PatternOperator, q: &Window) -> Result<Vec<Vec<(usize, Rational)>>> {
    let eval = Evaluator::new();
    q.vertices().iter().map(|x| section_row(&eval, op, q, *x)).collect()
}

fn section_row<'a>(
    eval: &Evaluator<'a>,
    op: &'a PatternOperator,
    q: &Window,
    x: VertexId,
) -> Result<Vec<(usize, Rational)>> {
    Ok(eval.row(op, x)?.iter().filter_map(|(y, v)| q.index_of(*y).map(|j| (j, v.clone()))).collect())
}

pub fn finite_section(op: &PatternOperator, q: &Window) -> Result<FiniteSection> {
    finite_section_with_limit(op, q, DEFAULT_DENSE_LIMIT)
}

pub fn finite_section_with_limit(op: &PatternOperator, q: &Window, dense_limit: usize) -> Result<FiniteSection> {
    if q.len() > dense_limit {
        return Err(Error::limit("finite section size", dense_limit, q.len()));
    }
    Ok(FiniteSection { window: q.clone(), rows: section_rows(op, q)?, source: op.to_spec() })
}

impl FiniteSection {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn source(&self) -> &RuleSpec {
        &self.source
    }

    pub fn rows(&self) -> &[Vec<(usize, Rational)>] {
        &self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> Rational {
        self.rows[i].iter().find(|(c, _)| *c == j).map(|(_, v)| v.clone()).unwrap_or_else(Rational::zero)
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows.iter().enumerate().all(|(i, row)| row.iter().all(|(j, v)| self.get(*j, i) == *v))
    }

    pub fn nonzeros(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    pub fn to_rational_matrix(&self) -> crate::exactla::RationalMatrix {
        let n = self.dim();
        let mut m = crate::exactla::RationalMatrix::zeros(n);
        for (i, row) in self.rows.iter().enumerate() {
            for (j, v) in row {
                m.set(i, *j, v.clone());
            }
        }
        m
    }

    pub fn to_float_matrix(&self) -> crate::spectra::FloatMatrix {
        let n = self.dim();
        let mut m = crate::spectra::FloatMatrix::zeros(n);
        for (i, row) in self.rows.iter().enumerate() {
            for (j, v) in row {
                m.set(i, *j, rational::to_f64(v));
            }
        }
        m
    }

    /// Exact `Σ_i (Mᵏ)_{ii}` by sparse vector propagation.
    pub fn trace_power(&self, k: u32) -> Rational {
        let n = self.dim();
        let mut total = Rational::zero();
        for i in 0..n {
            let mut v: BTreeMap<usize, Rational> = BTreeMap::from([(i, Rational::one())]);
            for _ in 0..k {
                let mut next: BTreeMap<usize, Rational> = BTreeMap::new();
                for (r, a) in &v {
                    for (c, b) in &self.rows[*r] {
                        *next.entry(*c).or_insert_with(Rational::zero) += a * b;
                    }
                }
                next.retain(|_, x| !x.is_zero());
                v = next;
            }
            if let Some(x) = v.get(&i) {
                total += x;
            }
        }
        total
    }

    /// Matrix-market style text: header `n n nnz`, then `i j num/den`
    /// (1-based) per nonzero in row-major order.
    pub fn to_text(&self) -> String {
        let n = self.dim();
        let mut out = format!("{n} {n} {}\n", self.nonzeros());
        for (i, row) in self.rows.iter().enumerate() {
            for (j, v) in row {
                out.push_str(&format!("{} {} {}\n", i + 1, j + 1, rational::to_string(v)));
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvarianceViolation {
    pub x: String,
    pub x_image: String,
    pub y: String,
    pub y_image: String,
    #[serde(with = "rational")]
    pub value: Rational,
    #[serde(with = "rational")]
    pub image_value: Rational,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct InvarianceReport {
    pub pattern_classes: usize,
    pub pairs_checked: usize,
    pub isomorphisms_checked: usize,
    pub entries_checked: usize,
    pub violations: Vec<InvarianceViolation>,
}

impl InvarianceReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `A(x,y) = A(φx, φy)` for every root-preserving isomorphism `φ`
/// between `r_A`-balls of window vertices with equal patterns.
///
/// Each pattern class is tested on its first vertex against up to `samples`
/// members (the first member against itself included, which covers the
/// automorphisms).
pub fn validate_invariance(op: &PatternOperator, q: &Window, samples: usize) -> Result<InvarianceReport> {
    let g = &op.graph;
    let r = op.radius;
    let eval = Evaluator::new();
    let mut classes: BTreeMap<PatternCode, Vec<VertexId>> = BTreeMap::new();
    let mut forms: HashMap<VertexId, (Vec<VertexId>, CanonicalForm)> = HashMap::new();
    for &x in q.vertices() {
        let ball = g.ball(x, r)?;
        let form = canonical_form(&ball)?;
        let members = classes.entry(form.code.clone()).or_default();
        if members.len() < samples.max(1) {
            members.push(x);
            forms.insert(x, (ball.vertices, form));
        }
    }
    let mut report = InvarianceReport { pattern_classes: classes.len(), ..Default::default() };
    for members in classes.values() {
        let x0 = members[0];
        let (verts0, form0) = &forms[&x0];
        for &x1 in members {
            let (verts1, form1) = &forms[&x1];
            report.pairs_checked += 1;
            for phi in form0.isomorphisms_to(form1) {
                report.isomorphisms_checked += 1;
                for (local, &y) in verts0.iter().enumerate() {
                    let y1 = verts1[phi[local]];
                    let a = eval.entry(op, x0, y)?;
                    let b = eval.entry(op, x1, y1)?;
                    report.entries_checked += 1;
                    if a != b {
                        report.violations.push(InvarianceViolation {
                            x: x0.to_string(),
                            x_image: x1.to_string(),
                            y: y.to_string(),
                            y_image: y1.to_string(),
                            value: a,
                            image_value: b,
                        });
                    }
                }
            }
        }
    }
    Ok(report)
}

/// `(vertex, orbit key)` for every vertex of the `r`-ball around `x`; handy
/// for assembling orbit tables.
pub fn orbit_keys_of(g: &InfiniteGraph, x: VertexId, r: u32) -> Result<Vec<(VertexId, OrbitKey)>> {
    let ball = g.ball(x, r)?;
    let form = canonical_form(&ball)?;
    let keys = form.orbit_keys();
    Ok(ball.vertices.iter().zip(keys).map(|(v, k)| (*v, OrbitKey { code: form.code.clone(), position: k })).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialEntry {
    pub code: PatternCode,
    #[serde(with = "rational")]
    pub value: Rational,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitEntry {
    pub code: PatternCode,
    pub position: u16,
    #[serde(with = "rational")]
    pub value: Rational,
}

/// JSON rule tree. The first block of variants maps one-to-one onto
/// [`Rule`]; the rest are shorthands expanded by [`RuleSpec::build`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum RuleSpec {
    Identity,
    Adjacency,
    Degree,
    Potential {
        radius: u32,
        table: Vec<PotentialEntry>,
    },
    OrbitTable {
        radius: u32,
        table: Vec<OrbitEntry>,
    },
    Add {
        left: Box<RuleSpec>,
        right: Box<RuleSpec>,
    },
    Mul {
        left: Box<RuleSpec>,
        right: Box<RuleSpec>,
    },
    Scale {
        #[serde(with = "rational")]
        factor: Rational,
        arg: Box<RuleSpec>,
    },
    Star {
        arg: Box<RuleSpec>,
    },
    // shorthands
    Zero,
    Laplacian,
    /// `arg − λ·I`.
    Shift {
        #[serde(with = "rational")]
        lambda: Rational,
        arg: Box<RuleSpec>,
    },
    Gram {
        arg: Box<RuleSpec>,
    },
    Power {
        k: u32,
        arg: Box<RuleSpec>,
    },
    /// Radius-0 potential on Fibonacci letters.
    LetterPotential {
        #[serde(with = "rational")]
        a: Rational,
        #[serde(with = "rational")]
        b: Rational,
    },
    /// Orbit table with seeded integer values in `[-range, range]` on every
    /// root pattern seen in the discovery window.
    RandomLocal {
        radius: u32,
        seed: u64,
        range: u32,
    },
}

impl RuleSpec {
    /// Builds the operator. `discovery` supplies the window whose patterns
    /// populate [`RuleSpec::RandomLocal`] tables.
    pub fn build(&self, g: &InfiniteGraph, discovery: Option<&Window>) -> Result<PatternOperator> {
        let sub = |s: &RuleSpec| s.build(g, discovery);
        Ok(match self {
            RuleSpec::Identity => PatternOperator::identity(g),
            RuleSpec::Adjacency => PatternOperator::adjacency(g),
            RuleSpec::Degree => PatternOperator::degree(g),
            RuleSpec::Potential { radius, table } => PatternOperator::pattern_potential(
                g,
                *radius,
                table.iter().map(|e| (e.code.clone(), e.value.clone())).collect(),
            )?,
            RuleSpec::OrbitTable { radius, table } => PatternOperator::orbit_table(
                g,
                *radius,
                table
                    .iter()
                    .map(|e| (OrbitKey { code: e.code.clone(), position: e.position }, e.value.clone()))
                    .collect(),
            )?,
            RuleSpec::Add { left, right } => sub(left)?.add(&sub(right)?)?,
            RuleSpec::Mul { left, right } => sub(left)?.mul(&sub(right)?)?,
            RuleSpec::Scale { factor, arg } => sub(arg)?.scale(factor.clone()),
            RuleSpec::Star { arg } => sub(arg)?.star(),
            RuleSpec::Zero => PatternOperator::zero(g),
            RuleSpec::Laplacian => PatternOperator::laplacian(g),
            RuleSpec::Shift { lambda, arg } => sub(arg)?.shift(lambda),
            RuleSpec::Gram { arg } => sub(arg)?.gram(),
            RuleSpec::Power { k, arg } => {
                if *k == 0 {
                    return Err(Error::InvalidArgument("power must be >= 1".into()));
                }
                sub(arg)?.pow(*k)
            }
            RuleSpec::LetterPotential { a, b } => {
                if g.letter(VertexId::d1(0)).is_none() {
                    return Err(Error::InvalidArgument("letter potential needs a substitution chain".into()));
                }
                PatternOperator::pattern_potential(
                    g,
                    0,
                    BTreeMap::from([(PatternCode::point(0), a.clone()), (PatternCode::point(1), b.clone())]),
                )?
            }
            RuleSpec::RandomLocal { radius, seed, range } => {
                let q =
                    discovery.ok_or_else(|| Error::InvalidArgument("random_local needs a discovery window".into()))?;
                random_local(g, q, *radius, *seed, *range)?
            }
        })
    }
}

/// Seeded integer orbit table over the root patterns occurring in `q`.
pub fn random_local(g: &InfiniteGraph, q: &Window, radius: u32, seed: u64, range: u32) -> Result<PatternOperator> {
    use rand::{Rng, SeedableRng};
    let mut keys: Vec<OrbitKey> = Vec::new();
    for &x in q.vertices() {
        for (_, k) in orbit_keys_of(g, x, radius)? {
            keys.push(k);
        }
    }
    keys.sort();
    keys.dedup();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let span = range as i64;
    let table = keys.into_iter().map(|k| (k, rational::int(rng.random_range(-span..=span)))).collect();
    PatternOperator::orbit_table(g, radius, table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn z(d: u32) -> InfiniteGraph {
        InfiniteGraph::lattice(d).unwrap()
    }

    #[test]
    fn adjacency_entries() {
        let g = z(1);
        let a = PatternOperator::adjacency(&g);
        assert_eq!(a.entry(VertexId::d1(0), VertexId::d1(1)).unwrap(), int(1));
        assert_eq!(a.entry(VertexId::d1(0), VertexId::d1(2)).unwrap(), int(0));
        assert_eq!(a.radius(), 1);
        assert_eq!(*a.sup_bound(), int(1));
        let p = InfiniteGraph::pendant_chain(2).unwrap();
        let row = PatternOperator::adjacency(&p).row(VertexId::slot(3, 0)).unwrap();
        let sum = row.iter().fold(Rational::zero(), |acc, (_, v)| acc + v);
        assert_eq!(sum, int(4));
    }

    #[test]
    fn products_count_walks() {
        let a1 = PatternOperator::adjacency(&z(1));
        let sq = a1.mul(&a1).unwrap();
        assert_eq!(sq.radius(), 2);
        assert_eq!(sq.entry(VertexId::d1(0), VertexId::d1(0)).unwrap(), int(2));
        assert_eq!(sq.entry(VertexId::d1(0), VertexId::d1(2)).unwrap(), int(1));
        let a2 = PatternOperator::adjacency(&z(2));
        let sq2 = a2.mul(&a2).unwrap();
        assert_eq!(sq2.entry(VertexId::d2(0, 0), VertexId::d2(1, 1)).unwrap(), int(2));
        // row and entry agree
        for (y, v) in sq2.row(VertexId::d2(0, 0)).unwrap() {
            assert_eq!(sq2.entry(VertexId::d2(0, 0), y).unwrap(), v);
        }
    }

    #[test]
    fn laplacian_and_identity() {
        let g = z(1);
        let l = PatternOperator::laplacian(&g);
        assert_eq!(l.entry(VertexId::d1(0), VertexId::d1(0)).unwrap(), int(2));
        assert_eq!(l.entry(VertexId::d1(0), VertexId::d1(1)).unwrap(), int(-1));
        let i = PatternOperator::identity(&g);
        let q = g.folner_window(3);
        let s = finite_section(&i, &q).unwrap();
        for a in 0..7 {
            for b in 0..7 {
                assert_eq!(s.get(a, b), int((a == b) as i64));
            }
        }
    }

    #[test]
    fn potentials() {
        let s = InfiniteGraph::substitution_chain();
        let v = RuleSpec::LetterPotential { a: int(0), b: int(1) }.build(&s, None).unwrap();
        assert_eq!(v.entry(VertexId::d1(1), VertexId::d1(1)).unwrap(), int(1));
        assert_eq!(v.entry(VertexId::d1(0), VertexId::d1(0)).unwrap(), int(0));
        assert_eq!(v.entry(VertexId::d1(1), VertexId::d1(2)).unwrap(), int(0));

        let g = z(1);
        let code = crate::canonical_code(&g.ball(VertexId::d1(0), 1).unwrap()).unwrap();
        let five = PatternOperator::pattern_potential(&g, 1, BTreeMap::from([(code.clone(), int(5))])).unwrap();
        assert_eq!(five.entry(VertexId::d1(9), VertexId::d1(9)).unwrap(), int(5));
        assert_eq!(five.entry(VertexId::d1(9), VertexId::d1(10)).unwrap(), int(0));
        assert!(PatternOperator::pattern_potential(&g, 2, BTreeMap::from([(code, int(5))])).is_err());
    }

    #[test]
    fn orbit_table_on_pendant_star() {
        let p = InfiniteGraph::pendant_chain(2).unwrap();
        let x = VertexId::slot(0, 0);
        let keys = orbit_keys_of(&p, x, 2).unwrap();
        let leaf_key = keys.iter().find(|(v, _)| *v == VertexId::slot(0, 1)).unwrap().1.clone();
        let nbr_key = keys.iter().find(|(v, _)| *v == VertexId::slot(1, 0)).unwrap().1.clone();
        let op = PatternOperator::orbit_table(&p, 2, BTreeMap::from([(leaf_key, int(1)), (nbr_key, int(7))])).unwrap();
        assert_eq!(op.entry(x, VertexId::slot(0, 1)).unwrap(), int(1));
        assert_eq!(op.entry(x, VertexId::slot(0, 2)).unwrap(), int(1));
        assert_eq!(op.entry(x, VertexId::slot(-1, 0)).unwrap(), int(7));
        assert_eq!(op.entry(VertexId::slot(5, 0), VertexId::slot(6, 0)).unwrap(), int(7));
        let q = p.folner_window(4);
        assert!(validate_invariance(&op, &q, 4).unwrap().passed());
    }

    #[test]
    fn corrupted_orbit_table_is_caught() {
        let g = z(1);
        let x = VertexId::d1(0);
        let keys = orbit_keys_of(&g, x, 1).unwrap();
        let code = keys[0].1.code.clone();
        // both neighbors share an orbit; give its two positions different values
        let table = BTreeMap::from([
            (OrbitKey { code: code.clone(), position: 1 }, int(1)),
            (OrbitKey { code, position: 2 }, int(3)),
        ]);
        let bad = PatternOperator::orbit_table(&g, 1, table).unwrap();
        let report = validate_invariance(&bad, &g.folner_window(3), 3).unwrap();
        assert!(!report.passed());
    }

    #[test]
    fn algebra_bookkeeping() {
        let g = z(2);
        let a = PatternOperator::adjacency(&g);
        let sum = a.add(&PatternOperator::identity(&g)).unwrap();
        assert_eq!(sum.radius(), 1);
        let prod = a.mul(&a).unwrap().mul(&a).unwrap();
        assert_eq!(prod.radius(), 3);
        let other = PatternOperator::adjacency(&z(1));
        assert!(matches!(a.add(&other), Err(Error::InvalidArgument(_))));
        assert!(matches!(a.mul(&other), Err(Error::InvalidArgument(_))));
        let star = a.star();
        let v = VertexId::d2(0, 0);
        for y in g.ball(v, 1).unwrap().vertices {
            assert_eq!(star.entry(v, y).unwrap(), a.entry(v, y).unwrap());
        }
    }

    #[test]
    fn norm_bounds() {
        assert_eq!(PatternOperator::adjacency(&z(1)).norm_bound(), int(4));
        assert_eq!(PatternOperator::adjacency(&z(2)).norm_bound(), int(6));
        assert!(PatternOperator::identity(&z(1)).norm_bound() >= int(1));
    }

    #[test]
    fn section_of_path() {
        let g = z(1);
        let s = finite_section(&PatternOperator::adjacency(&g), &g.folner_window(2)).unwrap();
        assert_eq!(s.dim(), 5);
        assert!(s.is_symmetric());
        for i in 0..5 {
            for j in 0..5 {
                let expect = (i as i64 - j as i64).abs() == 1;
                assert_eq!(s.get(i, j), int(expect as i64));
            }
        }
        assert_eq!(s.trace_power(2), int(8));
        let text = s.to_text();
        assert!(text.starts_with("5 5 8\n1 2 1\n"));
        assert!(matches!(
            finite_section_with_limit(&PatternOperator::adjacency(&g), &g.folner_window(10), 5),
            Err(Error::LimitExceeded { .. })
        ));
    }

    #[test]
    fn spec_round_trip() {
        let g = InfiniteGraph::decorated_lattice(1, 2, 3).unwrap();
        let q = g.folner_window(2);
        let c = random_local(&g, &q, 1, 9, 2).unwrap();
        let b = c.gram().add(&PatternOperator::laplacian(&g)).unwrap();
        let json = serde_json::to_string(&b.to_spec()).unwrap();
        let back: RuleSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back.build(&g, None).unwrap(), b);
        assert!(b.is_structurally_self_adjoint());
        assert!(!c.is_structurally_self_adjoint());
    }
}
