//! Query classes: enumeration, separator-set constructions for the five
//! supported families, dual classes, and the loss-query lift for learning
//! over labelled examples.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::data::{DataPoint, Dataset};
use crate::error::{Error, Result};
use crate::query::Query;

/// Hard cap on the dimension of enumerable operations.
pub const DIM_CAP: usize = 24;
/// Cap on enumerated query/universe sizes.
pub const ENUM_CAP: usize = 1 << 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Family {
    Conjunction,
    Disjunction,
    Parity,
    Halfspace,
    DecisionList1,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::Conjunction => "conj",
            Family::Disjunction => "disj",
            Family::Parity => "par",
            Family::Halfspace => "half",
            Family::DecisionList1 => "dlist",
        };
        f.write_str(s)
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "conj" | "conjunction" | "conjunctions" => Ok(Family::Conjunction),
            "disj" | "disjunction" | "disjunctions" => Ok(Family::Disjunction),
            "par" | "parity" | "parities" => Ok(Family::Parity),
            "half" | "halfspace" | "halfspaces" => Ok(Family::Halfspace),
            "dlist" | "decision-list" | "decision-lists" => Ok(Family::DecisionList1),
            other => Err(Error::Input(format!("unknown query family {other:?}"))),
        }
    }
}

/// A parameterized query class over a d-dimensional universe.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryClass {
    family: Family,
    d: usize,
    /// Weight grid V (halfspace only), sorted ascending.
    weight_grid: Vec<f64>,
    /// Point grid B (halfspace only), sorted ascending. Defaults to V.
    point_grid: Vec<f64>,
    /// Loss-query lift: queries run over labelled points of dimension d+1.
    lifted: bool,
}

/// An ordered list of universe elements witnessing pairwise query
/// distinguishability.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatorSet {
    elements: Vec<DataPoint>,
}

impl SeparatorSet {
    pub fn new(elements: Vec<DataPoint>) -> Self {
        SeparatorSet { elements }
    }

    pub fn size(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[DataPoint] {
        &self.elements
    }
}

/// The class with data points and queries swapping roles: members are
/// h_x(q) = q(x), and `separator` is a set of queries separating them.
#[derive(Debug, Clone)]
pub struct DualView {
    pub class: QueryClass,
    pub separator: Vec<Query>,
}

impl DualView {
    /// h_x(q) = q(x).
    pub fn eval(&self, x: &DataPoint, q: &Query) -> Result<u8> {
        q.eval(x)
    }

    pub fn separator_size(&self) -> usize {
        self.separator.len()
    }

    /// Exhaustively check that every pair of universe elements inducing
    /// distinct dual members h_x != h_x' is separated by some query in the
    /// dual separator.
    pub fn verify(&self) -> Result<bool> {
        let points = self.class.enumerate_points()?;
        let queries = self.class.enumerate_queries()?;
        for (a, x) in points.iter().enumerate() {
            for x2 in points.iter().skip(a + 1) {
                let distinct = queries.iter().any(|q| q.eval_unchecked(x) != q.eval_unchecked(x2));
                if !distinct {
                    continue;
                }
                let separated = self
                    .separator
                    .iter()
                    .any(|s| s.eval_unchecked(x) != s.eval_unchecked(x2));
                if !separated {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

impl QueryClass {
    pub fn new(family: Family, d: usize) -> Result<Self> {
        if family == Family::Halfspace {
            return QueryClass::halfspace(d, &[-1.0, 1.0]);
        }
        check_dim(d)?;
        Ok(QueryClass {
            family,
            d,
            weight_grid: Vec::new(),
            point_grid: Vec::new(),
            lifted: false,
        })
    }

    /// Halfspaces 1{w.x >= 1} with weights over grid V and points over B=V.
    pub fn halfspace(d: usize, grid: &[f64]) -> Result<Self> {
        check_dim(d)?;
        let mut v: Vec<f64> = grid.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v.dedup();
        if v.is_empty() || v.iter().any(|x| !x.is_finite() || x.abs() > 1.0) {
            return Err(Error::Input("halfspace grid must be finite values in [-1,1]".into()));
        }
        Ok(QueryClass {
            family: Family::Halfspace,
            d,
            point_grid: v.clone(),
            weight_grid: v,
            lifted: false,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn is_lifted(&self) -> bool {
        self.lifted
    }

    pub fn weight_grid(&self) -> &[f64] {
        &self.weight_grid
    }

    /// Dimension of the points this class evaluates on (d, or d+1 lifted).
    pub fn point_dim(&self) -> usize {
        self.d + usize::from(self.lifted)
    }

    /// The lifted class of loss queries q_h((x,y)) = 1[h(x) != y], with
    /// separator {(u, 0) : u in U_H} of the same size.
    pub fn lift_to_loss_class(&self) -> Result<QueryClass> {
        if self.lifted {
            return Err(Error::Unsupported("class is already lifted".into()));
        }
        let mut c = self.clone();
        c.lifted = true;
        Ok(c)
    }

    /// |Q| as enumerated (semantically deduplicated for decision lists).
    pub fn query_count(&self) -> Result<usize> {
        Ok(self.enumerate_queries()?.len())
    }

    /// ln |Q|, in closed form where available.
    pub fn ln_query_count(&self) -> Result<f64> {
        match self.family {
            Family::Conjunction | Family::Disjunction | Family::Parity => {
                Ok(self.d as f64 * std::f64::consts::LN_2)
            }
            Family::Halfspace => Ok(self.d as f64 * (self.weight_grid.len() as f64).ln()),
            Family::DecisionList1 => Ok((self.query_count()? as f64).ln()),
        }
    }

    /// ln |X| for the point universe.
    pub fn ln_universe_size(&self) -> f64 {
        let per_coord = match self.family {
            Family::Halfspace => self.point_grid.len() as f64,
            _ => 2.0,
        };
        let mut v = self.d as f64 * per_coord.ln();
        if self.lifted {
            v += std::f64::consts::LN_2;
        }
        v
    }

    /// All class members in canonical order.
    pub fn enumerate_queries(&self) -> Result<Vec<Query>> {
        let mut queries = match self.family {
            Family::Conjunction | Family::Disjunction | Family::Parity => {
                check_count(1usize << self.d)?;
                let mut qs = Vec::with_capacity(1 << self.d);
                for mask in 0u32..(1 << self.d) {
                    let idx: Vec<u8> = (0..self.d as u8).filter(|j| mask >> j & 1 == 1).collect();
                    qs.push(match self.family {
                        Family::Conjunction => Query::conjunction(&idx),
                        Family::Disjunction => Query::disjunction(&idx),
                        _ => Query::parity(&idx),
                    });
                }
                qs
            }
            Family::Halfspace => {
                let count = self.weight_grid.len().checked_pow(self.d as u32);
                check_count(count.unwrap_or(usize::MAX))?;
                let mut qs = Vec::new();
                let mut w = vec![self.weight_grid[0]; self.d];
                loop {
                    qs.push(Query::halfspace(&w)?);
                    if !next_grid_vector(&mut w, &self.weight_grid) {
                        break;
                    }
                }
                qs
            }
            Family::DecisionList1 => self.enumerate_decision_lists()?,
        };
        queries.sort();
        if self.lifted {
            queries = queries.into_iter().map(Query::loss_of).collect();
        }
        Ok(queries)
    }

    fn enumerate_decision_lists(&self) -> Result<Vec<Query>> {
        // Representations overcount functions (a later node shadowed by an
        // earlier one is dead), so generate every list of distinct literals,
        // then keep the canonically-first representation of each function.
        let mut reprs = Vec::new();
        let mut nodes: Vec<(u8, u8)> = Vec::new();
        fn gen(d: usize, nodes: &mut Vec<(u8, u8)>, used: u32, out: &mut Vec<Query>) -> Result<()> {
            for default in 0..=1u8 {
                out.push(Query::decision_list(nodes, default)?);
                check_count(out.len())?;
            }
            for j in 0..d as u8 {
                if used >> j & 1 == 1 {
                    continue;
                }
                for b in 0..=1u8 {
                    nodes.push((j, b));
                    gen(d, nodes, used | 1 << j, out)?;
                    nodes.pop();
                }
            }
            Ok(())
        }
        gen(self.d, &mut nodes, 0, &mut reprs)?;
        reprs.sort();

        let points: Vec<DataPoint> = (0..1u32 << self.d)
            .map(|m| DataPoint::from_mask(m, self.d))
            .collect();
        let mut seen: HashMap<Vec<u8>, ()> = HashMap::new();
        let mut queries = Vec::new();
        for q in reprs {
            let sig: Vec<u8> = points.iter().map(|p| q.eval_unchecked(p)).collect();
            if seen.insert(sig, ()).is_none() {
                queries.push(q);
            }
        }
        Ok(queries)
    }

    /// Q-bar = Q together with the negation of every member, canonical
    /// order within each half.
    pub fn enumerate_with_negations(&self) -> Result<Vec<Query>> {
        let base = self.enumerate_queries()?;
        let mut all = base.clone();
        all.extend(base.iter().map(Query::negate));
        Ok(all)
    }

    /// The point universe X in canonical order (coordinate 0 varies fastest;
    /// for lifted classes the label varies fastest).
    pub fn enumerate_points(&self) -> Result<Vec<DataPoint>> {
        let attrs: Vec<DataPoint> = match self.family {
            Family::Halfspace => {
                let count = self.point_grid.len().checked_pow(self.d as u32);
                check_count(count.unwrap_or(usize::MAX))?;
                let mut pts = Vec::new();
                let mut x = vec![self.point_grid[0]; self.d];
                loop {
                    pts.push(DataPoint::new(x.clone()));
                    if !next_grid_vector(&mut x, &self.point_grid) {
                        break;
                    }
                }
                pts
            }
            _ => {
                check_count(1usize << self.d)?;
                (0..1u32 << self.d).map(|m| DataPoint::from_mask(m, self.d)).collect()
            }
        };
        if !self.lifted {
            return Ok(attrs);
        }
        check_count(attrs.len() * 2)?;
        let mut pts = Vec::with_capacity(attrs.len() * 2);
        for a in attrs {
            for label in 0..=1 {
                let mut coords = a.coords().to_vec();
                coords.push(label as f64);
                pts.push(DataPoint::new(coords));
            }
        }
        Ok(pts)
    }

    /// The separator-set construction for this family.
    pub fn separator_set(&self) -> Result<SeparatorSet> {
        let base = match self.family {
            // One 0 at coordinate j, 1 elsewhere.
            Family::Conjunction => (0..self.d)
                .map(|j| DataPoint::new((0..self.d).map(|i| if i == j { 0.0 } else { 1.0 }).collect()))
                .collect(),
            // One-hot vectors.
            Family::Disjunction | Family::Parity => (0..self.d)
                .map(|j| DataPoint::new((0..self.d).map(|i| if i == j { 1.0 } else { 0.0 }).collect()))
                .collect(),
            Family::Halfspace => {
                let mut pts = Vec::new();
                for j in 0..self.d {
                    for v in 0..self.weight_grid.len() - 1 {
                        let c = gap_threshold(self.weight_grid[v], self.weight_grid[v + 1]);
                        pts.push(DataPoint::new(
                            (0..self.d).map(|i| if i == j { c } else { 0.0 }).collect(),
                        ));
                    }
                }
                pts
            }
            // All points with at most two coordinates set.
            Family::DecisionList1 => (0..1u32 << self.d)
                .filter(|m| m.count_ones() <= 2)
                .map(|m| DataPoint::from_mask(m, self.d))
                .collect(),
        };
        let elements = if self.lifted {
            base.into_iter()
                .map(|u| {
                    let mut coords = u.coords().to_vec();
                    coords.push(0.0);
                    DataPoint::new(coords)
                })
                .collect()
        } else {
            base
        };
        Ok(SeparatorSet::new(elements))
    }

    /// Exhaustive check of the separator property over all pairs of distinct
    /// class members.
    pub fn verify_separator(&self, u: &SeparatorSet) -> Result<bool> {
        let queries = self.enumerate_queries()?;
        for (a, q) in queries.iter().enumerate() {
            for q2 in queries.iter().skip(a + 1) {
                let separated = u
                    .elements()
                    .iter()
                    .any(|e| q.eval_unchecked(e) != q2.eval_unchecked(e));
                if !separated {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Swap the roles of points and queries. The returned view carries a
    /// separator of queries for the dual class.
    pub fn dual_view(&self) -> Result<DualView> {
        if self.lifted {
            return Err(Error::Unsupported("dual of a lifted class".into()));
        }
        let separator = match self.family {
            Family::Conjunction => (0..self.d as u8).map(|j| Query::conjunction(&[j])).collect(),
            Family::Disjunction => (0..self.d as u8).map(|j| Query::disjunction(&[j])).collect(),
            Family::Parity => (0..self.d as u8).map(|j| Query::parity(&[j])).collect(),
            Family::DecisionList1 => (0..self.d as u8)
                .map(|j| Query::decision_list(&[(j, 1)], 0))
                .collect::<Result<Vec<_>>>()?,
            Family::Halfspace => {
                // The dual of halfspaces over weight grid V with points over
                // B is the halfspace class over weight grid B; its separator
                // elements are threshold queries, one per coordinate per
                // adjacent gap of the point grid.
                let mut qs = Vec::new();
                for j in 0..self.d {
                    for v in 0..self.point_grid.len() - 1 {
                        let c = gap_threshold(self.point_grid[v], self.point_grid[v + 1]);
                        let w: Vec<f64> =
                            (0..self.d).map(|i| if i == j { c } else { 0.0 }).collect();
                        qs.push(Query::halfspace(&w)?);
                    }
                }
                qs
            }
        };
        Ok(DualView { class: self.clone(), separator })
    }

    /// Whether the class equals its dual up to role relabeling.
    pub fn is_self_dual(&self) -> bool {
        match self.family {
            Family::Conjunction | Family::Disjunction | Family::Parity => true,
            Family::Halfspace => self.weight_grid == self.point_grid,
            Family::DecisionList1 => false,
        }
    }

    /// |Q| <= 2^m for the construction's separator.
    pub fn cardinality_bound_holds(&self) -> Result<bool> {
        let m = self.separator_set()?.size();
        let count = self.query_count()?;
        Ok(m >= 64 || count as u128 <= 1u128 << m)
    }

    /// Check every record lies in this class's point universe.
    pub fn validate_dataset(&self, s: &Dataset) -> Result<()> {
        if s.dim() != self.point_dim() {
            return Err(Error::Input(format!(
                "dataset dimension {} does not match universe dimension {}",
                s.dim(),
                self.point_dim()
            )));
        }
        for (i, p) in s.iter().enumerate() {
            let coords = p.coords();
            let (attr, label) = if self.lifted {
                (&coords[..self.d], Some(coords[self.d]))
            } else {
                (coords, None)
            };
            if let Some(y) = label {
                if y != 0.0 && y != 1.0 {
                    return Err(Error::Input(format!("record {}: label must be 0/1", i + 1)));
                }
            }
            let ok = match self.family {
                Family::Halfspace => attr.iter().all(|c| self.point_grid.iter().any(|g| g == c)),
                _ => attr.iter().all(|&c| c == 0.0 || c == 1.0),
            };
            if !ok {
                return Err(Error::Input(format!(
                    "record {}: coordinate outside the declared universe",
                    i + 1
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for QueryClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lifted {
            write!(f, "loss-")?;
        }
        write!(f, "{}:d={}", self.family, self.d)?;
        if self.family == Family::Halfspace {
            let g: Vec<String> = self.weight_grid.iter().map(|v| v.to_string()).collect();
            write!(f, ":V={{{}}}", g.join(","))?;
        }
        Ok(())
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::Input("dimension must be >= 1".into()));
    }
    if d > DIM_CAP {
        return Err(Error::Capacity(format!("dimension {d} exceeds cap {DIM_CAP}")));
    }
    Ok(())
}

fn check_count(count: usize) -> Result<()> {
    if count > ENUM_CAP {
        return Err(Error::Capacity(format!("enumeration size {count} exceeds cap {ENUM_CAP}")));
    }
    Ok(())
}

/// Advance a grid vector to its successor in counting order (coordinate 0
/// fastest). Returns false after the last vector.
fn next_grid_vector(x: &mut [f64], grid: &[f64]) -> bool {
    for xi in x.iter_mut() {
        let pos = grid.iter().position(|g| g == xi).unwrap();
        if pos + 1 < grid.len() {
            *xi = grid[pos + 1];
            return true;
        }
        *xi = grid[0];
    }
    false
}

/// A threshold c separating the adjacent grid values lo < hi: the indicator
/// 1{v * c >= 1} differs between v = lo and v = hi, and is monotone in v on
/// each side of the gap. Midpoint of the valid interval where it is bounded
/// on both sides; a safely interior point where it is a half-line.
fn gap_threshold(lo: f64, hi: f64) -> f64 {
    if lo > 0.0 {
        // c in [1/hi, 1/lo): hi crosses the threshold, lo does not.
        (1.0 / hi + 1.0 / lo) / 2.0
    } else if hi > 0.0 {
        // Any c >= 1/hi works; v*c <= 0 < 1 for v <= lo <= 0.
        2.0 / hi
    } else if hi == 0.0 {
        // lo < 0: need lo*c >= 1, i.e. c <= 1/lo < 0.
        2.0 / lo
    } else {
        // Both negative: c in (1/hi, 1/lo].
        (1.0 / hi + 1.0 / lo) / 2.0
    }
}
