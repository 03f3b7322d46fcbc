//! Finite metric instances with integer distances.
//!
//! Every distance is stored as a non-negative integer number of *units*; `scale`
//! maps one unit back to the original length. Arithmetic on visit times is
//! therefore exact, and the floating-point norms are only evaluated at the end.

use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Length of one distance unit, `num / den` in original coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scale {
    pub num: u64,
    pub den: u64,
}

impl Scale {
    pub const UNIT: Scale = Scale { num: 1, den: 1 };

    pub fn new(num: u64, den: u64) -> Result<Scale> {
        if num == 0 || den == 0 {
            return Err(Error::invalid("scale numerator and denominator must be positive"));
        }
        Ok(Scale { num, den })
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn to_original(&self, units: f64) -> f64 {
        units * self.num as f64 / self.den as f64
    }
}

impl Default for Scale {
    fn default() -> Self {
        Scale::UNIT
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    General,
    /// Integer coordinates (in units) on the real line.
    Line { positions: Vec<i64> },
    /// The metric is the shortest-path closure of these tree edges.
    Tree { edges: Vec<(usize, usize, u64)> },
    /// Plane coordinates in original units; distances are rounded up to units.
    Euclidean { points: Vec<(f64, f64)> },
}

impl Geometry {
    pub fn tag(&self) -> &'static str {
        match self {
            Geometry::General => "general",
            Geometry::Line { .. } => "line",
            Geometry::Tree { .. } => "tree",
            Geometry::Euclidean { .. } => "euclidean",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricInstance {
    pub name: String,
    pub n: usize,
    dist: Vec<u64>,
    pub starts: Vec<usize>,
    pub geometry: Geometry,
    pub scale: Scale,
}

/// Undirected weighted graph handed to [`metric_closure`].
#[derive(Debug, Clone, Default)]
pub struct WeightedGraph {
    pub n: usize,
    pub edges: Vec<(usize, usize, u64)>,
}

const INF: u64 = u64::MAX;

impl MetricInstance {
    /// Build from a full integer matrix. The matrix must be a metric.
    pub fn from_matrix(name: impl Into<String>, rows: &[Vec<u64>], starts: Vec<usize>) -> Result<Self> {
        let n = rows.len();
        let mut dist = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            dist.extend_from_slice(row);
        }
        let report = validate_units(n, &dist);
        if !report.is_metric() {
            return Err(Error::Metric(report));
        }
        Self::assemble(name.into(), n, dist, starts, Geometry::General, Scale::UNIT)
    }

    /// Points on a line at the given integer positions.
    pub fn line(name: impl Into<String>, positions: Vec<i64>, starts: Vec<usize>) -> Result<Self> {
        let n = positions.len();
        let mut dist = vec![0u64; n * n];
        for i in 0..n {
            for j in 0..n {
                dist[i * n + j] = positions[i].abs_diff(positions[j]);
            }
        }
        Self::assemble(name.into(), n, dist, starts, Geometry::Line { positions }, Scale::UNIT)
    }

    /// Shortest-path metric of a weighted tree on `n` vertices.
    pub fn tree(name: impl Into<String>, n: usize, edges: Vec<(usize, usize, u64)>, starts: Vec<usize>) -> Result<Self> {
        if n > 0 && edges.len() != n - 1 {
            return Err(Error::invalid(format!(
                "a tree on {n} vertices has {} edges, got {}",
                n - 1,
                edges.len()
            )));
        }
        let graph = WeightedGraph { n, edges: edges.clone() };
        let closed = metric_closure(&graph)?;
        Self::assemble(name.into(), n, closed.dist, starts, Geometry::Tree { edges }, Scale::UNIT)
    }

    /// Plane points; each distance is rounded up to whole units of `scale`.
    pub fn euclidean(name: impl Into<String>, points: Vec<(f64, f64)>, starts: Vec<usize>, scale: Scale) -> Result<Self> {
        let n = points.len();
        if points.iter().any(|&(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::invalid("euclidean coordinates must be finite"));
        }
        let unit = scale.value();
        let mut dist = vec![0u64; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let (dx, dy) = (points[i].0 - points[j].0, points[i].1 - points[j].1);
                let q = ((dx * dx + dy * dy).sqrt() / unit).ceil();
                if q > (1u64 << 53) as f64 {
                    return Err(Error::invalid("euclidean distance too large for the chosen scale"));
                }
                dist[i * n + j] = q as u64;
                dist[j * n + i] = q as u64;
            }
        }
        floyd_warshall(n, &mut dist);
        Self::assemble(name.into(), n, dist, starts, Geometry::Euclidean { points }, scale)
    }

    fn assemble(name: String, n: usize, dist: Vec<u64>, starts: Vec<usize>, geometry: Geometry, scale: Scale) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("instance must have at least one vertex"));
        }
        if starts.is_empty() {
            return Err(Error::invalid("at least one start vertex is required"));
        }
        if let Some(&s) = starts.iter().find(|&&s| s >= n) {
            return Err(Error::invalid(format!("start vertex {s} out of range (n = {n})")));
        }
        Ok(MetricInstance {
            name,
            n,
            dist,
            starts,
            geometry,
            scale,
        })
    }

    pub fn with_starts(mut self, starts: Vec<usize>) -> Result<Self> {
        if starts.is_empty() {
            return Err(Error::invalid("at least one start vertex is required"));
        }
        if let Some(&s) = starts.iter().find(|&&s| s >= self.n) {
            return Err(Error::invalid(format!("start vertex {s} out of range (n = {})", self.n)));
        }
        self.starts = starts;
        Ok(self)
    }

    pub fn with_scale(mut self, scale: Scale) -> Self {
        self.scale = scale;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> u64 {
        self.dist[i * self.n + j]
    }

    /// Distance in original units.
    pub fn d_original(&self, i: usize, j: usize) -> f64 {
        self.scale.to_original(self.d(i, j) as f64)
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    pub fn matrix(&self) -> Vec<Vec<u64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// The (first) start vertex; single-vehicle algorithms use this one.
    pub fn start(&self) -> usize {
        self.starts[0]
    }

    pub fn vehicles(&self) -> usize {
        self.starts.len()
    }

    pub fn min_positive_distance(&self) -> Option<u64> {
        self.dist.iter().copied().filter(|&d| d > 0).min()
    }

    pub fn max_distance(&self) -> u64 {
        self.dist.iter().copied().max().unwrap_or(0)
    }

    pub fn is_line(&self) -> bool {
        matches!(self.geometry, Geometry::Line { .. })
    }

    /// Canonical JSON form; `load` of this value reproduces the instance.
    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("name".into(), json!(self.name));
        obj.insert("n".into(), json!(self.n));
        obj.insert("starts".into(), json!(self.starts));
        obj.insert("geometry".into(), json!(self.geometry.tag()));
        obj.insert("scale".into(), json!({"num": self.scale.num, "den": self.scale.den}));
        match &self.geometry {
            Geometry::General => {
                obj.insert("dist".into(), json!(self.matrix()));
            }
            Geometry::Line { positions } => {
                obj.insert("positions".into(), json!(positions));
            }
            Geometry::Tree { edges } => {
                let e: Vec<[u64; 3]> = edges.iter().map(|&(u, v, w)| [u as u64, v as u64, w]).collect();
                obj.insert("edges".into(), json!(e));
            }
            Geometry::Euclidean { points } => {
                let p: Vec<[f64; 2]> = points.iter().map(|&(x, y)| [x, y]).collect();
                obj.insert("points".into(), json!(p));
            }
        }
        Value::Object(obj)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("instance serialises")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| Error::schema("", format!("not valid JSON: {e}")))?;
        Self::from_json(&value)
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        parse_instance(value)
    }

    /// SHA-256 of the compact canonical JSON.
    pub fn checksum(&self) -> String {
        let text = serde_json::to_string(&self.to_json()).expect("instance serialises");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

/// Read an instance file.
pub fn load(path: impl AsRef<Path>) -> Result<MetricInstance> {
    let text = std::fs::read_to_string(path)?;
    MetricInstance::from_json_str(&text)
}

/// Write an instance in canonical form.
pub fn save(inst: &MetricInstance, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, inst.to_json_string() + "\n")?;
    Ok(())
}

const KNOWN_KEYS: [&str; 9] = [
    "name", "n", "starts", "geometry", "scale", "dist", "positions", "edges", "points",
];

fn parse_instance(value: &Value) -> Result<MetricInstance> {
    let obj = value
        .as_object()
        .ok_or_else(|| Error::schema("", "instance must be a JSON object"))?;
    if let Some(key) = obj.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
        return Err(Error::schema(format!("/{key}"), "unknown field"));
    }
    let name = match obj.get("name") {
        None => String::from("unnamed"),
        Some(v) => v
            .as_str()
            .ok_or_else(|| Error::schema("/name", "expected a string"))?
            .to_string(),
    };
    let n = uint(field(obj, "n")?, "/n")? as usize;
    let starts_v = field(obj, "starts")?
        .as_array()
        .ok_or_else(|| Error::schema("/starts", "expected an array"))?;
    let mut starts = Vec::with_capacity(starts_v.len());
    for (i, s) in starts_v.iter().enumerate() {
        let ptr = format!("/starts/{i}");
        let s = uint(s, &ptr)? as usize;
        if s >= n {
            return Err(Error::schema(ptr, format!("start {s} out of range (n = {n})")));
        }
        starts.push(s);
    }
    let scale = match obj.get("scale") {
        None => Scale::UNIT,
        Some(v) => {
            let o = v
                .as_object()
                .ok_or_else(|| Error::schema("/scale", "expected {num, den}"))?;
            let num = uint(o.get("num").ok_or_else(|| Error::schema("/scale/num", "missing"))?, "/scale/num")?;
            let den = uint(o.get("den").ok_or_else(|| Error::schema("/scale/den", "missing"))?, "/scale/den")?;
            Scale::new(num, den).map_err(|_| Error::schema("/scale", "num and den must be positive"))?
        }
    };
    let geometry = field(obj, "geometry")?
        .as_str()
        .ok_or_else(|| Error::schema("/geometry", "expected a string"))?;
    let require_absent = |keys: &[&str]| -> Result<()> {
        for k in keys {
            if obj.contains_key(*k) {
                return Err(Error::schema(format!("/{k}"), format!("not allowed for geometry '{geometry}'")));
            }
        }
        Ok(())
    };
    let wrap = |r: Result<MetricInstance>, ptr: &str| {
        r.map_err(|e| match e {
            Error::Invalid(m) => Error::schema(ptr, m),
            other => other,
        })
    };
    let inst = match geometry {
        "general" => {
            require_absent(&["positions", "edges", "points"])?;
            let rows = field(obj, "dist")?
                .as_array()
                .ok_or_else(|| Error::schema("/dist", "expected an array of rows"))?;
            if rows.len() != n {
                return Err(Error::schema("/dist", format!("expected {n} rows, got {}", rows.len())));
            }
            let mut matrix = Vec::with_capacity(n);
            for (i, row) in rows.iter().enumerate() {
                let row = row
                    .as_array()
                    .ok_or_else(|| Error::schema(format!("/dist/{i}"), "expected an array"))?;
                if row.len() != n {
                    return Err(Error::schema(format!("/dist/{i}"), format!("expected {n} entries, got {}", row.len())));
                }
                let mut r = Vec::with_capacity(n);
                for (j, d) in row.iter().enumerate() {
                    r.push(uint(d, &format!("/dist/{i}/{j}"))?);
                }
                matrix.push(r);
            }
            wrap(MetricInstance::from_matrix(name, &matrix, starts), "/dist")?
        }
        "line" => {
            require_absent(&["dist", "edges", "points"])?;
            let pos = field(obj, "positions")?
                .as_array()
                .ok_or_else(|| Error::schema("/positions", "expected an array"))?;
            if pos.len() != n {
                return Err(Error::schema("/positions", format!("expected {n} positions, got {}", pos.len())));
            }
            let mut positions = Vec::with_capacity(n);
            for (i, p) in pos.iter().enumerate() {
                positions.push(int(p, &format!("/positions/{i}"))?);
            }
            wrap(MetricInstance::line(name, positions, starts), "/positions")?
        }
        "tree" => {
            require_absent(&["dist", "positions", "points"])?;
            let list = field(obj, "edges")?
                .as_array()
                .ok_or_else(|| Error::schema("/edges", "expected an array"))?;
            let mut edges = Vec::with_capacity(list.len());
            for (i, e) in list.iter().enumerate() {
                let ptr = format!("/edges/{i}");
                let triple = e
                    .as_array()
                    .filter(|a| a.len() == 3)
                    .ok_or_else(|| Error::schema(&ptr, "expected [u, v, weight]"))?;
                let u = uint(&triple[0], &format!("{ptr}/0"))? as usize;
                let v = uint(&triple[1], &format!("{ptr}/1"))? as usize;
                let w = uint(&triple[2], &format!("{ptr}/2"))?;
                if u >= n || v >= n {
                    return Err(Error::schema(ptr, "endpoint out of range"));
                }
                edges.push((u, v, w));
            }
            wrap(MetricInstance::tree(name, n, edges, starts), "/edges")?
        }
        "euclidean" => {
            require_absent(&["dist", "positions", "edges"])?;
            let list = field(obj, "points")?
                .as_array()
                .ok_or_else(|| Error::schema("/points", "expected an array"))?;
            if list.len() != n {
                return Err(Error::schema("/points", format!("expected {n} points, got {}", list.len())));
            }
            let mut points = Vec::with_capacity(n);
            for (i, p) in list.iter().enumerate() {
                let ptr = format!("/points/{i}");
                let pair = p
                    .as_array()
                    .filter(|a| a.len() == 2)
                    .ok_or_else(|| Error::schema(&ptr, "expected [x, y]"))?;
                let x = pair[0].as_f64().ok_or_else(|| Error::schema(format!("{ptr}/0"), "expected a number"))?;
                let y = pair[1].as_f64().ok_or_else(|| Error::schema(format!("{ptr}/1"), "expected a number"))?;
                points.push((x, y));
            }
            wrap(MetricInstance::euclidean(name, points, starts, scale), "/points")?
        }
        other => {
            return Err(Error::schema(
                "/geometry",
                format!("unknown geometry '{other}' (expected general, line, tree or euclidean)"),
            ))
        }
    };
    Ok(inst.with_scale(scale))
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| Error::schema(format!("/{key}"), "missing required field"))
}

fn uint(v: &Value, ptr: &str) -> Result<u64> {
    if let Some(u) = v.as_u64() {
        return Ok(u);
    }
    match v.as_f64() {
        Some(f) if f >= 0.0 && f.fract() == 0.0 && f < 9.0e15 => Ok(f as u64),
        Some(_) => Err(Error::schema(ptr, "expected a non-negative integer number of units")),
        None => Err(Error::schema(ptr, "expected a number")),
    }
}

fn int(v: &Value, ptr: &str) -> Result<i64> {
    if let Some(i) = v.as_i64() {
        return Ok(i);
    }
    match v.as_f64() {
        Some(f) if f.fract() == 0.0 && f.abs() < 9.0e15 => Ok(f as i64),
        Some(_) => Err(Error::schema(ptr, "expected an integer number of units")),
        None => Err(Error::schema(ptr, "expected a number")),
    }
}

/// A violated metric axiom.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NonzeroDiagonal { i: usize, value: f64 },
    Asymmetric { i: usize, j: usize, dij: f64, dji: f64 },
    /// `d(i, j) > d(i, via) + d(via, j)`; one witness per pair.
    Triangle { i: usize, via: usize, j: usize, excess: f64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub n: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_metric(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid metric on {} points", self.n);
        }
        write!(f, "{} violation(s)", self.violations.len())?;
        for v in self.violations.iter().take(5) {
            match v {
                Violation::NonzeroDiagonal { i, value } => write!(f, "; d({i},{i}) = {value}")?,
                Violation::Asymmetric { i, j, dij, dji } => write!(f, "; d({i},{j}) = {dij} but d({j},{i}) = {dji}")?,
                Violation::Triangle { i, via, j, excess } => {
                    write!(f, "; d({i},{j}) exceeds d({i},{via}) + d({via},{j}) by {excess}")?
                }
            }
        }
        if self.violations.len() > 5 {
            write!(f, "; ...")?;
        }
        Ok(())
    }
}

/// Check the metric axioms on a real matrix.
///
/// Comparisons allow a relative slack of `1e-12` times the largest entry, so that
/// sums like `0.1 + 0.2` against `0.3` are not reported.
pub fn validate_metric(matrix: &[Vec<f64>]) -> Result<ValidationReport> {
    let n = matrix.len();
    let mut max = 0.0f64;
    for (i, row) in matrix.iter().enumerate() {
        if row.len() != n {
            return Err(Error::invalid(format!("matrix is not square: row {i} has {} entries", row.len())));
        }
        for (j, &d) in row.iter().enumerate() {
            if !d.is_finite() || d < 0.0 {
                return Err(Error::invalid(format!("entry ({i},{j}) = {d} is not a non-negative real")));
            }
            max = max.max(d);
        }
    }
    let tol = 1e-12 * max;
    let at = |i: usize, j: usize| matrix[i][j];
    Ok(validate_with(n, at, tol))
}

fn validate_units(n: usize, dist: &[u64]) -> ValidationReport {
    validate_with(n, |i, j| dist[i * n + j] as f64, 0.0)
}

fn validate_with(n: usize, at: impl Fn(usize, usize) -> f64, tol: f64) -> ValidationReport {
    let mut violations = Vec::new();
    for i in 0..n {
        if at(i, i) > tol {
            violations.push(Violation::NonzeroDiagonal { i, value: at(i, i) });
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (at(i, j) - at(j, i)).abs() > tol {
                violations.push(Violation::Asymmetric { i, j, dij: at(i, j), dji: at(j, i) });
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if let Some(k) = (0..n).find(|&k| k != i && k != j && at(i, j) > at(i, k) + at(k, j) + tol) {
                violations.push(Violation::Triangle {
                    i,
                    via: k,
                    j,
                    excess: at(i, j) - at(i, k) - at(k, j),
                });
            }
        }
    }
    ValidationReport { n, violations }
}

fn floyd_warshall(n: usize, dist: &mut [u64]) {
    for k in 0..n {
        for i in 0..n {
            let dik = dist[i * n + k];
            if dik == INF {
                continue;
            }
            for j in 0..n {
                let dkj = dist[k * n + j];
                if dkj == INF {
                    continue;
                }
                let via = dik + dkj;
                if via < dist[i * n + j] {
                    dist[i * n + j] = via;
                }
            }
        }
    }
}

/// Shortest-path metric of a connected undirected graph. Starts default to `[0]`.
pub fn metric_closure(graph: &WeightedGraph) -> Result<MetricInstance> {
    let n = graph.n;
    if n == 0 {
        return Err(Error::invalid("graph has no vertices"));
    }
    let mut dist = vec![INF; n * n];
    for i in 0..n {
        dist[i * n + i] = 0;
    }
    for &(u, v, w) in &graph.edges {
        if u >= n || v >= n {
            return Err(Error::invalid(format!("edge ({u},{v}) out of range")));
        }
        if u != v && w < dist[u * n + v] {
            dist[u * n + v] = w;
            dist[v * n + u] = w;
        }
    }
    floyd_warshall(n, &mut dist);
    if let Some(j) = (0..n).find(|&j| dist[j] == INF) {
        return Err(Error::Disconnected(0, j));
    }
    Ok(MetricInstance {
        name: "closure".into(),
        n,
        dist,
        starts: vec![0],
        geometry: Geometry::General,
        scale: Scale::UNIT,
    })
}

/// Round a real metric up to a power-of-two unit `u ≤ d_min·eps/n²`.
///
/// Each distance becomes `⌈d/u⌉` units, so `d ≤ u·q ≤ (1 + eps/n²)·d`. Rounding up
/// cannot break the triangle inequality, but the result is re-closed anyway so the
/// output is a metric by construction.
pub fn quantize(name: impl Into<String>, matrix: &[Vec<f64>], starts: Vec<usize>, eps: f64) -> Result<MetricInstance> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid("eps must be a positive real"));
    }
    let report = validate_metric(matrix)?;
    if !report.is_metric() {
        return Err(Error::Metric(report));
    }
    let n = matrix.len();
    let dmin = matrix
        .iter()
        .flatten()
        .copied()
        .filter(|&d| d > 0.0)
        .fold(f64::INFINITY, f64::min);
    let dmax = matrix.iter().flatten().copied().fold(0.0, f64::max);
    let target = if dmin.is_finite() {
        dmin * eps / (n * n) as f64
    } else {
        1.0
    };
    let mut k = target.log2().floor() as i32;
    while 2f64.powi(k) > target {
        k -= 1;
    }
    if !(-62..=62).contains(&k) {
        return Err(Error::invalid("distance range too wide to quantise"));
    }
    let unit = 2f64.powi(k);
    if dmax / unit > (1u64 << 53) as f64 {
        return Err(Error::invalid("distance range too wide to quantise"));
    }
    let scale = if k >= 0 {
        Scale { num: 1u64 << k, den: 1 }
    } else {
        Scale { num: 1, den: 1u64 << (-k) }
    };
    let mut dist = vec![0u64; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = matrix[i][j].max(matrix[j][i]);
            let q = (d / unit).ceil() as u64;
            dist[i * n + j] = q;
            dist[j * n + i] = q;
        }
    }
    floyd_warshall(n, &mut dist);
    MetricInstance::assemble(name.into(), n, dist, starts, Geometry::General, scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    /// Shortest-path closure of a complete graph with weights in `1..=100`.
    RandomMetric,
    /// Sorted integer positions in `0..=10n` with a random start.
    Line,
    /// Random recursive tree with weights in `1..=20`.
    Tree,
}

impl InstanceKind {
    pub fn tag(&self) -> &'static str {
        match self {
            InstanceKind::RandomMetric => "random_metric",
            InstanceKind::Line => "line",
            InstanceKind::Tree => "tree",
        }
    }
}

impl std::str::FromStr for InstanceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random_metric" | "random" | "metric" => Ok(InstanceKind::RandomMetric),
            "line" => Ok(InstanceKind::Line),
            "tree" => Ok(InstanceKind::Tree),
            other => Err(Error::invalid(format!("unknown instance kind '{other}'"))),
        }
    }
}

/// Deterministic instance generator (ChaCha8 seeded with `seed`).
pub fn generate_instance(seed: u64, n: usize, kind: InstanceKind) -> Result<MetricInstance> {
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let name = format!("{}-s{seed}-n{n}", kind.tag());
    match kind {
        InstanceKind::RandomMetric => {
            let mut edges = Vec::with_capacity(n * (n - 1) / 2);
            for i in 0..n {
                for j in (i + 1)..n {
                    edges.push((i, j, rng.gen_range(1..=100u64)));
                }
            }
            let inst = metric_closure(&WeightedGraph { n, edges })?;
            Ok(inst.with_name(name))
        }
        InstanceKind::Line => {
            let hi = 10 * n as i64;
            let mut positions: Vec<i64> = (0..n).map(|_| rng.gen_range(0..=hi)).collect();
            positions.sort_unstable();
            let start = rng.gen_range(0..n);
            MetricInstance::line(name, positions, vec![start])
        }
        InstanceKind::Tree => {
            let edges = (1..n)
                .map(|v| (rng.gen_range(0..v), v, rng.gen_range(1..=20u64)))
                .collect();
            MetricInstance::tree(name, n, edges, vec![0])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_distances() {
        let inst = MetricInstance::line("l", vec![-3, 0, 5], vec![1]).unwrap();
        assert_eq!(inst.d(0, 2), 8);
        assert_eq!(inst.d(2, 1), 5);
        assert_eq!(inst.min_positive_distance(), Some(3));
    }

    #[test]
    fn rejects_bad_starts() {
        assert!(MetricInstance::line("l", vec![0, 1], vec![2]).is_err());
        assert!(MetricInstance::line("l", vec![0, 1], vec![]).is_err());
    }

    #[test]
    fn tree_needs_n_minus_one_edges() {
        assert!(MetricInstance::tree("t", 3, vec![(0, 1, 1)], vec![0]).is_err());
        let t = MetricInstance::tree("t", 3, vec![(0, 1, 2), (1, 2, 3)], vec![0]).unwrap();
        assert_eq!(t.d(0, 2), 5);
    }

    #[test]
    fn from_matrix_rejects_triangle_violation() {
        let m = vec![vec![0, 1, 5], vec![1, 0, 1], vec![5, 1, 0]];
        match MetricInstance::from_matrix("bad", &m, vec![0]) {
            Err(Error::Metric(r)) => assert!(r
                .violations
                .iter()
                .any(|v| matches!(v, Violation::Triangle { i: 0, via: 1, j: 2, .. }))),
            other => panic!("expected metric error, got {other:?}"),
        }
    }

    #[test]
    fn euclidean_rounds_up() {
        let inst = MetricInstance::euclidean("e", vec![(0.0, 0.0), (1.0, 1.0)], vec![0], Scale::new(1, 10).unwrap()).unwrap();
        assert_eq!(inst.d(0, 1), 15);
    }
}
