//! Energy-based type inference over a small tag space.
//!
//! Constraints extracted from a term form the factors of a Markov random
//! field; the energy of an assignment is the weighted count of violated
//! factors, and the posterior is the Boltzmann distribution
//! `exp(-E) / sum exp(-E')` over every candidate assignment.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lambda_ir::{deep, Prim, Term};

pub const DEFAULT_MAX_VARIABLES: usize = 8;

pub const ARITH_WEIGHT: f64 = 1.0;
pub const EQ_WEIGHT: f64 = 1.0;
pub const IF_WEIGHT: f64 = 2.0;
pub const ENV_WEIGHT: f64 = 4.0;

/// Declaration order is the tie-breaking order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TypeTag {
    Int,
    Real,
    Bool,
    Func,
}

impl TypeTag {
    pub const ALL: [TypeTag; 4] = [TypeTag::Int, TypeTag::Real, TypeTag::Bool, TypeTag::Func];

    pub fn is_numeric(self) -> bool {
        matches!(self, TypeTag::Int | TypeTag::Real)
    }
}

impl fmt::Display for TypeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextEnv {
    /// Identifiers with known types; they take no inference variable.
    pub bindings: BTreeMap<String, TypeTag>,
}

impl ContextEnv {
    pub fn with(mut self, name: impl Into<String>, tag: TypeTag) -> Self {
        self.bindings.insert(name.into(), tag);
        self
    }
}

pub type VarId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarOrigin {
    /// A lambda-bound identifier (one variable per binder).
    Binder(String),
    /// An identifier bound neither by a lambda nor by the environment.
    Free(String),
    /// One integer literal occurrence.
    Literal(i64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InferVar {
    pub id: VarId,
    pub origin: VarOrigin,
}

impl fmt::Display for InferVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.origin {
            VarOrigin::Binder(n) | VarOrigin::Free(n) => write!(f, "{n}"),
            VarOrigin::Literal(v) => write!(f, "lit{}:{v}", self.id),
        }
    }
}

/// One side of a constraint: an inference variable or a fixed tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Operand {
    Var(VarId),
    /// Fixed by the environment.
    Env(TypeTag),
    /// Fixed by the syntax (boolean literal, lambda, `#eq` result).
    Known(TypeTag),
}

impl Operand {
    fn tag(self, assignment: &dyn Fn(VarId) -> TypeTag) -> TypeTag {
        match self {
            Operand::Var(v) => assignment(v),
            Operand::Env(t) | Operand::Known(t) => t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Predicate {
    /// All operands carry the same numeric tag.
    SameNumeric(Vec<Operand>),
    /// All operands carry the same tag.
    Same(Vec<Operand>),
    /// The operand carries the given tag.
    Is(Operand, TypeTag),
}

impl Predicate {
    fn violated(&self, assignment: &dyn Fn(VarId) -> TypeTag) -> bool {
        match self {
            Predicate::SameNumeric(ops) => {
                let first = ops[0].tag(assignment);
                !first.is_numeric() || ops.iter().any(|o| o.tag(assignment) != first)
            }
            Predicate::Same(ops) => {
                let first = ops[0].tag(assignment);
                ops.iter().any(|o| o.tag(assignment) != first)
            }
            Predicate::Is(o, t) => o.tag(assignment) != *t,
        }
    }

    fn operands(&self) -> Vec<Operand> {
        match self {
            Predicate::SameNumeric(ops) | Predicate::Same(ops) => ops.clone(),
            Predicate::Is(o, _) => vec![*o],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    /// Sorted, deduplicated, nonempty.
    pub clique: Vec<VarId>,
    pub weight: f64,
    pub predicate: Predicate,
}

impl Factor {
    /// Build a factor whose clique is read off the predicate's variables;
    /// `None` when no operand is a variable.
    pub fn new(weight: f64, predicate: Predicate) -> Option<Factor> {
        let mut clique: Vec<VarId> = predicate
            .operands()
            .into_iter()
            .filter_map(|o| match o {
                Operand::Var(v) => Some(v),
                _ => None,
            })
            .collect();
        clique.sort_unstable();
        clique.dedup();
        (!clique.is_empty()).then_some(Factor {
            clique,
            weight,
            predicate,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub factors: Vec<Factor>,
    /// Constant added to every energy. Never changes the posterior.
    pub offset: f64,
}

/// Total map from inference variables to tags.
pub type Assignment = BTreeMap<VarId, TypeTag>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TypeError {
    #[error("assignment has no tag for variable {0}")]
    MissingVariable(VarId),
    #[error("{count} variables exceed the enumeration limit of {limit}")]
    TooManyVariables { count: usize, limit: usize },
    #[error("posterior has empty support")]
    EmptyPosterior,
}

/// Where a primitive application sits and what its operands are.
#[derive(Debug, Clone, PartialEq)]
struct Site {
    prim: Prim,
    operands: Vec<Option<Operand>>,
}

/// Path of a node: 0 = function / body, 1 = argument.
type Path = Vec<u8>;

struct Walker<'a> {
    env: &'a ContextEnv,
    vars: Vec<InferVar>,
    factors: Vec<Factor>,
    free: HashMap<String, VarId>,
    /// Lambda binders in scope with their lazily created variables.
    scope: Vec<(String, Option<VarId>)>,
    sites: HashMap<Path, Site>,
}

impl<'a> Walker<'a> {
    fn fresh(&mut self, origin: VarOrigin) -> VarId {
        let id = self.vars.len();
        self.vars.push(InferVar { id, origin });
        id
    }

    fn leaf_operand(&mut self, t: &Term) -> Option<Operand> {
        match t {
            Term::Var(name) => {
                if let Some(tag) = self.env.bindings.get(name) {
                    return Some(Operand::Env(*tag));
                }
                if let Some(pos) = self.scope.iter().rposition(|(n, _)| n == name) {
                    let id = match self.scope[pos].1 {
                        Some(id) => id,
                        None => {
                            let id = self.fresh(VarOrigin::Binder(name.clone()));
                            self.scope[pos].1 = Some(id);
                            id
                        }
                    };
                    return Some(Operand::Var(id));
                }
                let id = match self.free.get(name) {
                    Some(id) => *id,
                    None => {
                        let id = self.fresh(VarOrigin::Free(name.clone()));
                        self.free.insert(name.clone(), id);
                        id
                    }
                };
                Some(Operand::Var(id))
            }
            Term::Int(v) => Some(Operand::Var(self.fresh(VarOrigin::Literal(*v)))),
            Term::Bool(_) => Some(Operand::Known(TypeTag::Bool)),
            _ => None,
        }
    }

    /// Visit `t` in left-to-right order, returning the operand that stands
    /// for its type when it is used as an argument.
    fn walk(&mut self, t: &Term, path: &mut Path) -> Option<Operand> {
        deep(|| match t {
            Term::Var(_) | Term::Int(_) | Term::Bool(_) => self.leaf_operand(t),
            Term::Prim(_) => None,
            Term::Lam(p, b) => {
                self.scope.push((p.clone(), None));
                path.push(0);
                self.walk(b, path);
                path.pop();
                self.scope.pop();
                Some(Operand::Known(TypeTag::Func))
            }
            Term::App(..) => {
                let (head, args) = t.spine();
                let n = args.len();
                // Path of the head: n function steps from the spine root.
                let base = path.len();
                path.extend(std::iter::repeat_n(0, n));
                self.walk(head, path);
                path.truncate(base);
                let mut ops = Vec::with_capacity(n);
                for (i, a) in args.iter().enumerate() {
                    // Argument i sits under (n - 1 - i) function steps.
                    path.extend(std::iter::repeat_n(0, n - 1 - i));
                    path.push(1);
                    ops.push(self.walk(a, path));
                    path.truncate(base);
                }
                match head {
                    Term::Prim(p) if n >= p.arity() => {
                        let mut head_path = path.clone();
                        head_path.extend(std::iter::repeat_n(0, n));
                        self.emit(*p, &ops[..p.arity()], head_path)
                    }
                    _ => None,
                }
            }
        })
    }

    fn emit(&mut self, p: Prim, ops: &[Option<Operand>], head_path: Path) -> Option<Operand> {
        self.sites.insert(
            head_path,
            Site {
                prim: p,
                operands: ops.to_vec(),
            },
        );
        let present: Vec<Operand> = ops.iter().flatten().copied().collect();
        let has_env = present.iter().any(|o| matches!(o, Operand::Env(_)));
        let anchored = |w: f64| if has_env { ENV_WEIGHT } else { w };
        match p {
            Prim::If => {
                if let Some(cond) = ops[0] {
                    let w = if matches!(cond, Operand::Env(_)) { ENV_WEIGHT } else { IF_WEIGHT };
                    self.factors
                        .extend(Factor::new(w, Predicate::Is(cond, TypeTag::Bool)));
                }
                ops[1]
            }
            Prim::Eq => {
                if present.len() == 2 {
                    self.factors
                        .extend(Factor::new(anchored(EQ_WEIGHT), Predicate::Same(present)));
                }
                Some(Operand::Known(TypeTag::Bool))
            }
            _ => {
                if !present.is_empty() {
                    self.factors.extend(Factor::new(
                        anchored(ARITH_WEIGHT),
                        Predicate::SameNumeric(present.clone()),
                    ));
                }
                present.first().copied()
            }
        }
    }
}

fn extract(t: &Term, env: &ContextEnv) -> (Vec<InferVar>, ConstraintSet, HashMap<Path, Site>) {
    let mut w = Walker {
        env,
        vars: Vec::new(),
        factors: Vec::new(),
        free: HashMap::new(),
        scope: Vec::new(),
        sites: HashMap::new(),
    };
    w.walk(t, &mut Vec::new());
    (
        w.vars,
        ConstraintSet {
            factors: w.factors,
            offset: 0.0,
        },
        w.sites,
    )
}

/// Inference variables (left-to-right) and the factor set for `t`.
///
/// Rules: arithmetic operands share a numeric tag (weight 1); `#eq`
/// operands share a tag (1); an `#if` condition is `Bool` (2); any factor
/// that involves an environment-typed operand weighs 4.
pub fn build_constraints(t: &Term, env: &ContextEnv) -> (Vec<InferVar>, ConstraintSet) {
    let (vars, cs, _) = extract(t, env);
    (vars, cs)
}

fn energy_with(cs: &ConstraintSet, lookup: &dyn Fn(VarId) -> TypeTag) -> f64 {
    cs.offset
        + cs.factors
            .iter()
            .filter(|f| f.predicate.violated(lookup))
            .map(|f| f.weight)
            .sum::<f64>()
}

pub fn energy(assignment: &Assignment, cs: &ConstraintSet) -> Result<f64, TypeError> {
    for f in &cs.factors {
        for v in &f.clique {
            if !assignment.contains_key(v) {
                return Err(TypeError::MissingVariable(*v));
            }
        }
    }
    Ok(energy_with(cs, &|v| assignment[&v]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub assignment: Assignment,
    pub energy: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypePosterior {
    pub support: Vec<Candidate>,
}

impl TypePosterior {
    /// Softmax of negative energies, shifted by the minimum for stability.
    pub fn from_energies(candidates: Vec<(Assignment, f64)>) -> TypePosterior {
        let min = candidates
            .iter()
            .map(|(_, e)| *e)
            .fold(f64::INFINITY, f64::min);
        let weights: Vec<f64> = candidates.iter().map(|(_, e)| (-(e - min)).exp()).collect();
        let z: f64 = weights.iter().sum();
        TypePosterior {
            support: candidates
                .into_iter()
                .zip(weights)
                .map(|((assignment, energy), w)| Candidate {
                    assignment,
                    energy,
                    probability: w / z,
                })
                .collect(),
        }
    }
}

pub fn posterior(cs: &ConstraintSet, variables: &[VarId]) -> Result<TypePosterior, TypeError> {
    posterior_with_limit(cs, variables, DEFAULT_MAX_VARIABLES)
}

/// Exact posterior by enumerating all `4^n` assignments of `variables`.
pub fn posterior_with_limit(
    cs: &ConstraintSet,
    variables: &[VarId],
    limit: usize,
) -> Result<TypePosterior, TypeError> {
    if variables.len() > limit {
        return Err(TypeError::TooManyVariables {
            count: variables.len(),
            limit,
        });
    }
    let n = variables.len();
    let total = TypeTag::ALL.len().pow(n as u32);
    let mut candidates = Vec::with_capacity(total);
    let mut digits = vec![0usize; n];
    for _ in 0..total {
        let assignment: Assignment = variables
            .iter()
            .zip(&digits)
            .map(|(v, &d)| (*v, TypeTag::ALL[d]))
            .collect();
        let e = energy(&assignment, cs)?;
        candidates.push((assignment, e));
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < TypeTag::ALL.len() {
                break;
            }
            *d = 0;
        }
    }
    Ok(TypePosterior::from_energies(candidates))
}

/// Highest-probability assignment; exact ties go to the lexicographically
/// smallest assignment under the tag order.
pub fn map_assignment(p: &TypePosterior) -> Result<Assignment, TypeError> {
    p.support
        .iter()
        .min_by(|a, b| {
            b.probability
                .total_cmp(&a.probability)
                .then_with(|| a.assignment.values().cmp(b.assignment.values()))
        })
        .map(|c| c.assignment.clone())
        .ok_or(TypeError::EmptyPosterior)
}

/// Result of MAP inference on one term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inference {
    pub variables: Vec<InferVar>,
    pub constraints: ConstraintSet,
    pub map: Assignment,
}

impl Inference {
    /// `name=Tag` pairs in variable order.
    pub fn summary(&self) -> Vec<String> {
        self.variables
            .iter()
            .map(|v| format!("{v}={}", self.map[&v.id]))
            .collect()
    }
}

/// MAP assignment computed per connected component of the factor graph.
///
/// Components are independent, so the joint MAP (with lexicographic tie
/// breaking) is the union of component MAPs. Only each component must fit
/// under `limit`.
pub fn infer_map(t: &Term, env: &ContextEnv, limit: usize) -> Result<Inference, TypeError> {
    let (variables, constraints) = build_constraints(t, env);
    let n = variables.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        parent[x] = r;
        r
    }
    for f in &constraints.factors {
        for w in f.clique.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut groups: BTreeMap<usize, Vec<VarId>> = BTreeMap::new();
    for v in 0..n {
        let root = find(&mut parent, v);
        groups.entry(root).or_default().push(v);
    }
    let mut map = Assignment::new();
    for members in groups.values() {
        let sub = ConstraintSet {
            factors: constraints
                .factors
                .iter()
                .filter(|f| members.contains(&f.clique[0]))
                .cloned()
                .collect(),
            offset: 0.0,
        };
        let post = posterior_with_limit(&sub, members, limit)?;
        map.extend(map_assignment(&post)?);
    }
    Ok(Inference {
        variables,
        constraints,
        map,
    })
}

fn operand_tag(op: Option<Operand>, a: &Assignment) -> Option<TypeTag> {
    match op? {
        Operand::Var(v) => a.get(&v).copied(),
        Operand::Env(t) | Operand::Known(t) => Some(t),
    }
}

/// Rewrite each saturated `#add` whose operands are both `Int` to `#addZ`,
/// both `Real` to `#addR`. Other nodes are untouched.
pub fn specialize_operators(t: &Term, env: &ContextEnv, assignment: &Assignment) -> Term {
    let (_, _, sites) = extract(t, env);
    fn rebuild(t: &Term, path: &mut Path, sites: &HashMap<Path, Site>, a: &Assignment) -> Term {
        deep(|| match t {
            Term::Prim(Prim::Add) => {
                let Some(site) = sites.get(path) else {
                    return t.clone();
                };
                let tags: Vec<_> = site.operands.iter().map(|o| operand_tag(*o, a)).collect();
                match tags.as_slice() {
                    [Some(TypeTag::Int), Some(TypeTag::Int)] => Term::Prim(Prim::AddZ),
                    [Some(TypeTag::Real), Some(TypeTag::Real)] => Term::Prim(Prim::AddR),
                    _ => t.clone(),
                }
            }
            Term::Lam(p, b) => {
                path.push(0);
                let b = rebuild(b, path, sites, a);
                path.pop();
                Term::lam(p.clone(), b)
            }
            Term::App(f, x) => {
                path.push(0);
                let f = rebuild(f, path, sites, a);
                path.pop();
                path.push(1);
                let x = rebuild(x, path, sites, a);
                path.pop();
                Term::app(f, x)
            }
            other => other.clone(),
        })
    }
    debug_assert!(sites.values().all(|s| s.operands.len() == s.prim.arity()));
    rebuild(t, &mut Vec::new(), &sites, assignment)
}
