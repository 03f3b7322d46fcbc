//! Routes, visit-time vectors and Minkowski norms.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{MetricInstance, Scale};

/// A Minkowski norm `L_p` with `p ≥ 1`, including `p = ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Norm {
    P(f64),
    Inf,
}

impl Norm {
    pub fn p(p: f64) -> Result<Norm> {
        if p.is_infinite() && p > 0.0 {
            return Ok(Norm::Inf);
        }
        if !(p >= 1.0) {
            return Err(Error::invalid(format!("norm exponent must be >= 1, got {p}")));
        }
        Ok(Norm::P(p))
    }

    /// Finite exponent, or `None` for `∞`.
    pub fn exponent(&self) -> Option<f64> {
        match *self {
            Norm::P(p) => Some(p),
            Norm::Inf => None,
        }
    }

    /// Evaluate the norm on non-negative values, scaling by the maximum first.
    pub fn eval(&self, values: &[f64]) -> f64 {
        let max = values.iter().copied().fold(0.0f64, f64::max);
        match *self {
            Norm::Inf => max,
            Norm::P(p) if p == 1.0 => values.iter().sum(),
            Norm::P(p) => {
                if max == 0.0 {
                    return 0.0;
                }
                let s: f64 = values.iter().map(|&v| (v / max).powf(p)).sum();
                max * s.powf(1.0 / p)
            }
        }
    }

    /// `Σ v^p` for finite `p`, or `max v` for `∞`. This is the quantity the exact
    /// solvers minimise; it is monotone in the norm.
    pub fn objective(&self, values: impl IntoIterator<Item = f64>) -> f64 {
        match *self {
            Norm::Inf => values.into_iter().fold(0.0, f64::max),
            Norm::P(p) if p == 1.0 => values.into_iter().sum(),
            Norm::P(p) => values.into_iter().map(|v| v.powf(p)).sum(),
        }
    }

    /// Map an [`objective`](Self::objective) value back to the norm.
    pub fn from_objective(&self, obj: f64) -> f64 {
        match *self {
            Norm::Inf => obj,
            Norm::P(p) if p == 1.0 => obj,
            Norm::P(p) => obj.powf(1.0 / p),
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Norm::P(p) => write!(f, "{p}"),
            Norm::Inf => write!(f, "inf"),
        }
    }
}

impl FromStr for Norm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Norm> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Norm::Inf),
            other => {
                let p: f64 = other
                    .parse()
                    .map_err(|_| Error::invalid(format!("cannot parse norm '{s}'")))?;
                Norm::p(p)
            }
        }
    }
}

impl Serialize for Norm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Norm::P(p) => s.serialize_f64(*p),
            Norm::Inf => s.serialize_str("inf"),
        }
    }
}

/// Single-vehicle tour: a permutation of all vertices beginning at a start.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Route {
    pub order: Vec<usize>,
}

impl Route {
    /// Checks that `order` is a permutation of `0..inst.n` starting at a start vertex.
    pub fn new(order: Vec<usize>, inst: &MetricInstance) -> Result<Route> {
        check_permutation(&order, inst.n)?;
        if !inst.starts.contains(&order[0]) {
            return Err(Error::invalid(format!("route begins at {}, which is not a start vertex", order[0])));
        }
        Ok(Route { order })
    }

    pub fn start(&self) -> usize {
        self.order[0]
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

fn check_permutation(order: &[usize], n: usize) -> Result<()> {
    if order.len() != n {
        return Err(Error::invalid(format!("route has {} entries, expected {n}", order.len())));
    }
    let mut seen = vec![false; n];
    for &v in order {
        if v >= n {
            return Err(Error::invalid(format!("vertex {v} out of range")));
        }
        if std::mem::replace(&mut seen[v], true) {
            return Err(Error::invalid(format!("vertex {v} appears twice")));
        }
    }
    Ok(())
}

/// One ordered vertex list per vehicle; list `i` begins at start `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiRoute {
    pub routes: Vec<Vec<usize>>,
}

impl MultiRoute {
    /// Every vertex must be visited by some vehicle; a vertex may appear in several lists.
    pub fn new(routes: Vec<Vec<usize>>, inst: &MetricInstance) -> Result<MultiRoute> {
        if routes.len() != inst.vehicles() {
            return Err(Error::invalid(format!(
                "{} routes given for {} vehicles",
                routes.len(),
                inst.vehicles()
            )));
        }
        let mut seen = vec![false; inst.n];
        for (i, r) in routes.iter().enumerate() {
            if r.first() != Some(&inst.starts[i]) {
                return Err(Error::invalid(format!("route {i} must begin at start {}", inst.starts[i])));
            }
            for &v in r {
                if v >= inst.n {
                    return Err(Error::invalid(format!("vertex {v} out of range")));
                }
                seen[v] = true;
            }
        }
        if let Some(v) = seen.iter().position(|&s| !s) {
            return Err(Error::invalid(format!("vertex {v} is not visited")));
        }
        Ok(MultiRoute { routes })
    }
}

/// Visit times `ℓ_v` in integer units, indexed by vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelayVector {
    pub per_vertex: Vec<u64>,
    pub scale: Scale,
}

impl DelayVector {
    pub fn new(per_vertex: Vec<u64>, scale: Scale) -> DelayVector {
        DelayVector { per_vertex, scale }
    }

    /// Times sorted in non-decreasing order.
    pub fn profile(&self) -> Vec<u64> {
        let mut p = self.per_vertex.clone();
        p.sort_unstable();
        p
    }

    pub fn values_original(&self) -> Vec<f64> {
        self.per_vertex.iter().map(|&t| self.scale.to_original(t as f64)).collect()
    }

    pub fn values_units(&self) -> Vec<f64> {
        self.per_vertex.iter().map(|&t| t as f64).collect()
    }

    /// Norm in original length units.
    pub fn norm(&self, norm: Norm) -> f64 {
        norm.eval(&self.values_original())
    }

    /// Norm in integer units (exact for `p = 1` and `p = ∞` within `2^53`).
    pub fn norm_units(&self, norm: Norm) -> f64 {
        norm.eval(&self.values_units())
    }

    /// `Σ ℓ_v^p` (or `max ℓ_v`) in units.
    pub fn objective_units(&self, norm: Norm) -> f64 {
        norm.objective(self.per_vertex.iter().map(|&t| t as f64))
    }
}

impl Serialize for DelayVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("DelayVector", 2)?;
        st.serialize_field("units", &self.per_vertex)?;
        st.serialize_field("scale", &self.scale)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for DelayVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            units: Vec<u64>,
            scale: Scale,
        }
        let raw = Raw::deserialize(d)?;
        Ok(DelayVector::new(raw.units, raw.scale))
    }
}

/// Norm of a delay vector in original units.
pub fn lp_norm(d: &DelayVector, norm: Norm) -> f64 {
    d.norm(norm)
}

/// Times at which `route` reaches each vertex.
pub fn visit_times(route: &Route, inst: &MetricInstance) -> DelayVector {
    let mut times = vec![0u64; inst.n];
    let mut t = 0u64;
    for w in route.order.windows(2) {
        t += inst.d(w[0], w[1]);
        times[w[1]] = t;
    }
    DelayVector::new(times, inst.scale)
}

/// Each vertex's time is the earliest over vehicles.
pub fn multi_visit_times(routes: &MultiRoute, inst: &MetricInstance) -> DelayVector {
    let mut times = vec![u64::MAX; inst.n];
    for r in &routes.routes {
        let mut t = 0u64;
        if let Some(&first) = r.first() {
            times[first] = 0;
        }
        for w in r.windows(2) {
            t += inst.d(w[0], w[1]);
            times[w[1]] = times[w[1]].min(t);
        }
    }
    for t in &mut times {
        if *t == u64::MAX {
            *t = 0;
        }
    }
    DelayVector::new(times, inst.scale)
}

/// First time a walk reaches each vertex (`u64::MAX` if never).
pub fn walk_arrival_times(walk: &[usize], inst: &MetricInstance) -> Vec<u64> {
    let mut times = vec![u64::MAX; inst.n];
    let mut t = 0u64;
    if let Some(&f) = walk.first() {
        times[f] = 0;
    }
    for w in walk.windows(2) {
        t += inst.d(w[0], w[1]);
        if times[w[1]] == u64::MAX {
            times[w[1]] = t;
        }
    }
    times
}

/// Keep the first occurrence of every vertex of a covering walk.
///
/// By the triangle inequality every vertex is reached no later than in the walk.
pub fn shortcut(walk: &[usize], inst: &MetricInstance) -> Result<Route> {
    let mut seen = vec![false; inst.n];
    let mut order = Vec::with_capacity(inst.n);
    for &v in walk {
        if v >= inst.n {
            return Err(Error::invalid(format!("vertex {v} out of range")));
        }
        if !std::mem::replace(&mut seen[v], true) {
            order.push(v);
        }
    }
    if order.len() != inst.n {
        let missing = seen.iter().position(|&s| !s).unwrap_or(0);
        return Err(Error::invalid(format!("walk does not cover vertex {missing}")));
    }
    let route = Route::new(order, inst)?;
    debug_assert!({
        let walk_t = walk_arrival_times(walk, inst);
        let route_t = visit_times(&route, inst);
        route_t.per_vertex.iter().zip(&walk_t).all(|(a, b)| a <= b)
    });
    Ok(route)
}

/// `max_k T_k / L_k` for the sorted profile `T` of `delays` against a
/// non-decreasing lower-bound sequence (`0/0` terms are skipped).
pub fn submajorization_ratio(delays: &DelayVector, lower: &[u64]) -> Result<f64> {
    let profile = delays.profile();
    if profile.len() != lower.len() {
        return Err(Error::invalid(format!(
            "profile has {} entries but the lower bound has {}",
            profile.len(),
            lower.len()
        )));
    }
    if lower.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("lower-bound sequence must be non-decreasing"));
    }
    let mut ratio = 0.0f64;
    for (&t, &l) in profile.iter().zip(lower) {
        if t == 0 {
            continue;
        }
        if l == 0 {
            return Ok(f64::INFINITY);
        }
        ratio = ratio.max(t as f64 / l as f64);
    }
    Ok(ratio)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(pos: Vec<i64>, s: usize) -> MetricInstance {
        MetricInstance::line("t", pos, vec![s]).unwrap()
    }

    #[test]
    fn norm_parsing() {
        assert_eq!("inf".parse::<Norm>().unwrap(), Norm::Inf);
        assert_eq!("2".parse::<Norm>().unwrap(), Norm::P(2.0));
        assert!("0.5".parse::<Norm>().is_err());
        assert!("nan".parse::<Norm>().is_err());
        assert!(Norm::p(f64::INFINITY).unwrap() == Norm::Inf);
    }

    #[test]
    fn visit_times_on_line() {
        let inst = line(vec![0, -2, 1, 3], 0);
        let r = Route::new(vec![0, 2, 3, 1], &inst).unwrap();
        assert_eq!(visit_times(&r, &inst).per_vertex, vec![0, 8, 1, 3]);
    }

    #[test]
    fn route_validation() {
        let inst = line(vec![0, 1, 2], 0);
        assert!(Route::new(vec![1, 0, 2], &inst).is_err());
        assert!(Route::new(vec![0, 1, 1], &inst).is_err());
        assert!(Route::new(vec![0, 1], &inst).is_err());
    }

    #[test]
    fn shortcut_keeps_first_visits() {
        let inst = line(vec![0, 1, 2, -1], 0);
        let r = shortcut(&[0, 1, 2, 1, 0, 3, 0], &inst).unwrap();
        assert_eq!(r.order, vec![0, 1, 2, 3]);
        assert!(shortcut(&[0, 1, 0], &inst).is_err());
    }

    #[test]
    fn multi_times_take_minimum() {
        let inst = MetricInstance::line("m", vec![0, 10, 4, 6], vec![0, 1]).unwrap();
        let mr = MultiRoute::new(vec![vec![0, 2, 3], vec![1, 3]], &inst).unwrap();
        assert_eq!(multi_visit_times(&mr, &inst).per_vertex, vec![0, 0, 4, 4]);
        assert!(MultiRoute::new(vec![vec![0, 2], vec![1]], &inst).is_err());
    }

    #[test]
    fn submajorization_edge_cases() {
        let d = DelayVector::new(vec![0, 2, 4], Scale::UNIT);
        assert_eq!(submajorization_ratio(&d, &[0, 1, 2]).unwrap(), 2.0);
        assert_eq!(submajorization_ratio(&d, &[0, 1, 1]).unwrap(), 4.0);
        assert_eq!(submajorization_ratio(&d, &[0, 0, 2]).unwrap(), f64::INFINITY);
        assert!(submajorization_ratio(&d, &[0, 2, 1]).is_err());
        assert!(submajorization_ratio(&d, &[0, 1]).is_err());
    }
}
