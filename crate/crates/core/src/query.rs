//! Statistical queries q: X -> {0,1}: the five supported families, negation,
//! evaluation, and the canonical encoding that fixes a total order used for
//! oracle tie-breaking.

use std::cmp::Ordering;
use std::fmt;

use ordered_float::NotNan;

use crate::data::{DataPoint, Dataset, WeightedDataset};
use crate::error::{Error, Result};

/// Family-specific payload. Index sets are kept sorted; the derived
/// lexicographic order on the sorted sets (empty set first) is the canonical
/// order within a family.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QueryKind {
    /// AND over the indexed coordinates; empty set is the constant-1 query.
    Conjunction(Vec<u8>),
    /// OR over the indexed coordinates; empty set is the constant-0 query.
    Disjunction(Vec<u8>),
    /// XOR over the indexed coordinates; empty set is the constant-0 query.
    Parity(Vec<u8>),
    /// 1{w . x >= 1} for a weight vector over a finite grid.
    Halfspace(Vec<NotNan<f64>>),
    /// Monotone 1-decision list: first node whose literal is set decides.
    DecisionList1 { nodes: Vec<(u8, u8)>, default: u8 },
    /// Loss query 1[h(x) != y] over labelled points (label = last coord).
    Loss(Box<Query>),
}

impl QueryKind {
    fn rank(&self) -> u8 {
        match self {
            QueryKind::Conjunction(_) => 0,
            QueryKind::Disjunction(_) => 1,
            QueryKind::Parity(_) => 2,
            QueryKind::Halfspace(_) => 3,
            QueryKind::DecisionList1 { .. } => 4,
            QueryKind::Loss(_) => 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Query {
    pub kind: QueryKind,
    pub negated: bool,
}

impl Query {
    pub fn new(kind: QueryKind) -> Result<Self> {
        match &kind {
            QueryKind::Conjunction(s) | QueryKind::Disjunction(s) | QueryKind::Parity(s) => {
                if s.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Input("index set must be strictly sorted".into()));
                }
            }
            QueryKind::DecisionList1 { nodes, default } => {
                if *default > 1 || nodes.iter().any(|&(_, b)| b > 1) {
                    return Err(Error::Input("decision list outputs must be 0/1".into()));
                }
            }
            QueryKind::Halfspace(_) | QueryKind::Loss(_) => {}
        }
        Ok(Query { kind, negated: false })
    }

    pub fn conjunction(indices: &[u8]) -> Query {
        Query::new(QueryKind::Conjunction(sorted(indices))).unwrap()
    }

    pub fn disjunction(indices: &[u8]) -> Query {
        Query::new(QueryKind::Disjunction(sorted(indices))).unwrap()
    }

    pub fn parity(indices: &[u8]) -> Query {
        Query::new(QueryKind::Parity(sorted(indices))).unwrap()
    }

    pub fn halfspace(weights: &[f64]) -> Result<Query> {
        let w = weights
            .iter()
            .map(|&v| NotNan::new(v).map_err(|_| Error::Input("NaN halfspace weight".into())))
            .collect::<Result<Vec<_>>>()?;
        Query::new(QueryKind::Halfspace(w))
    }

    pub fn decision_list(nodes: &[(u8, u8)], default: u8) -> Result<Query> {
        Query::new(QueryKind::DecisionList1 { nodes: nodes.to_vec(), default })
    }

    pub fn loss_of(hypothesis: Query) -> Query {
        Query { kind: QueryKind::Loss(Box::new(hypothesis)), negated: false }
    }

    /// ¬q with ¬q(x) = 1 - q(x).
    pub fn negate(&self) -> Query {
        Query { kind: self.kind.clone(), negated: !self.negated }
    }

    /// Evaluate on a point, checking the dimension.
    pub fn eval(&self, x: &DataPoint) -> Result<u8> {
        let need = self.min_dim();
        if x.dim() < need {
            return Err(crate::error::dim_mismatch(need, x.dim()));
        }
        Ok(self.eval_unchecked(x))
    }

    /// Evaluate without the dimension check. Callers in hot loops validate
    /// dimensions once up front.
    pub fn eval_unchecked(&self, x: &DataPoint) -> u8 {
        let base = match &self.kind {
            QueryKind::Conjunction(s) => s.iter().all(|&j| x.coord(j as usize) == 1.0) as u8,
            QueryKind::Disjunction(s) => s.iter().any(|&j| x.coord(j as usize) == 1.0) as u8,
            QueryKind::Parity(s) => {
                s.iter().fold(0u8, |acc, &j| acc ^ (x.coord(j as usize) == 1.0) as u8)
            }
            QueryKind::Halfspace(w) => {
                let dot: f64 = w
                    .iter()
                    .zip(x.coords())
                    .map(|(wi, xi)| wi.into_inner() * xi)
                    .sum();
                (dot >= 1.0) as u8
            }
            QueryKind::DecisionList1 { nodes, default } => nodes
                .iter()
                .find(|&&(j, _)| x.coord(j as usize) == 1.0)
                .map(|&(_, b)| b)
                .unwrap_or(*default),
            QueryKind::Loss(h) => {
                let d = x.dim() - 1;
                let hx = h.eval_on_prefix(x, d);
                let y = (x.coord(d) == 1.0) as u8;
                hx ^ y
            }
        };
        if self.negated {
            1 - base
        } else {
            base
        }
    }

    fn eval_on_prefix(&self, x: &DataPoint, d: usize) -> u8 {
        // Same as eval_unchecked but restricted to the first d coordinates
        // (halfspace hypotheses inside a lift would otherwise see the label).
        match &self.kind {
            QueryKind::Halfspace(w) => {
                let dot: f64 = w
                    .iter()
                    .zip(&x.coords()[..d])
                    .map(|(wi, xi)| wi.into_inner() * xi)
                    .sum();
                let v = (dot >= 1.0) as u8;
                if self.negated {
                    1 - v
                } else {
                    v
                }
            }
            _ => self.eval_unchecked(x),
        }
    }

    /// Minimum point dimension this query can be evaluated on.
    pub fn min_dim(&self) -> usize {
        match &self.kind {
            QueryKind::Conjunction(s) | QueryKind::Disjunction(s) | QueryKind::Parity(s) => {
                s.iter().map(|&j| j as usize + 1).max().unwrap_or(0)
            }
            QueryKind::Halfspace(w) => w.len(),
            QueryKind::DecisionList1 { nodes, .. } => {
                nodes.iter().map(|&(j, _)| j as usize + 1).max().unwrap_or(0)
            }
            QueryKind::Loss(h) => h.min_dim() + 1,
        }
    }

    /// Bitmask of the index set, for packed evaluation of the bitwise
    /// families. None for halfspaces, decision lists, and lifts.
    pub fn index_mask(&self) -> Option<u32> {
        match &self.kind {
            QueryKind::Conjunction(s) | QueryKind::Disjunction(s) | QueryKind::Parity(s) => {
                Some(s.iter().fold(0u32, |m, &j| m | (1 << j)))
            }
            _ => None,
        }
    }
}

fn sorted(indices: &[u8]) -> Vec<u8> {
    let mut v = indices.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

// Canonical total order: family tag, payload, negation bit.
impl Ord for Query {
    fn cmp(&self, other: &Self) -> Ordering {
        self.kind
            .rank()
            .cmp(&other.kind.rank())
            .then_with(|| self.kind.cmp(&other.kind))
            .then_with(|| self.negated.cmp(&other.negated))
    }
}

impl PartialOrd for Query {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "!")?;
        }
        match &self.kind {
            QueryKind::Conjunction(s) => write!(f, "conj{{{}}}", fmt_indices(s)),
            QueryKind::Disjunction(s) => write!(f, "disj{{{}}}", fmt_indices(s)),
            QueryKind::Parity(s) => write!(f, "par{{{}}}", fmt_indices(s)),
            QueryKind::Halfspace(w) => {
                write!(f, "half[")?;
                for (i, wi) in w.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{}", wi.into_inner())?;
                }
                write!(f, "]")
            }
            QueryKind::DecisionList1 { nodes, default } => {
                write!(f, "dlist[")?;
                for (i, (j, b)) in nodes.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{}:{b}", j + 1)?;
                }
                write!(f, "|{default}]")
            }
            QueryKind::Loss(h) => write!(f, "loss({h})"),
        }
    }
}

fn fmt_indices(s: &[u8]) -> String {
    s.iter().map(|j| (j + 1).to_string()).collect::<Vec<_>>().join(",")
}

/// q(S) = (1/n) sum_i q(S_i).
pub fn eval_on_dataset(q: &Query, s: &Dataset) -> Result<f64> {
    if s.n() == 0 {
        return Err(Error::Input("empty dataset".into()));
    }
    let mut sum = 0u64;
    for p in s.iter() {
        sum += q.eval(p)? as u64;
    }
    Ok(sum as f64 / s.n() as f64)
}

/// Mean of q over a plain slice of points.
pub fn eval_on_points(q: &Query, points: &[DataPoint]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::Input("empty point list".into()));
    }
    let mut sum = 0u64;
    for p in points {
        sum += q.eval(p)? as u64;
    }
    Ok(sum as f64 / points.len() as f64)
}

/// The un-normalized weighted objective sum_i w_i q(x_i).
pub fn eval_weighted(q: &Query, wd: &WeightedDataset) -> Result<f64> {
    let mut sum = 0.0;
    for (p, w) in wd.entries() {
        if q.eval(p)? == 1 {
            sum += w;
        }
    }
    Ok(sum)
}
