//! Standard oracle and constraint families.

use serde::{Deserialize, Serialize};

use crate::cardinality::CardinalityConstraint;
use crate::error::{check_dim, Error, Result};
use crate::knapsack::KnapsackInstance;
use crate::lattice::{box_index, box_size, LatticePoint};
use crate::oracle::{LatticeFunction, ValueOracle};
use crate::polymatroid::{PartitionPolymatroid, PolymatroidOracle, RankTablePolymatroid, UniformPolymatroid};
use crate::properties::{check_table, PropertyKind};

/// f(x) = Σ_e a_e·min(x_e, c_e)^{p_e}.
#[derive(Clone, Debug)]
pub struct SeparableConcave {
    coeffs: Vec<f64>,
    powers: Vec<f64>,
    cap: Vec<u64>,
}

impl LatticeFunction for SeparableConcave {
    fn value(&self, x: &[u64]) -> f64 {
        x.iter()
            .zip(&self.cap)
            .zip(self.coeffs.iter().zip(&self.powers))
            .map(|((&v, &c), (&a, &p))| {
                let v = v.min(c) as f64;
                if p == 1.0 {
                    a * v
                } else {
                    a * v.powf(p)
                }
            })
            .sum()
    }
}

pub fn make_separable_concave(coeffs: &[f64], powers: &[f64], cap: LatticePoint) -> Result<ValueOracle> {
    check_dim(cap.dim(), coeffs.len())?;
    check_dim(cap.dim(), powers.len())?;
    for (e, &a) in coeffs.iter().enumerate() {
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::Domain(format!("coefficient of element {e} must be non-negative, got {a}")));
        }
    }
    for (e, &p) in powers.iter().enumerate() {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Domain(format!("power of element {e} must lie in (0, 1], got {p}")));
        }
    }
    let func = SeparableConcave { coeffs: coeffs.to_vec(), powers: powers.to_vec(), cap: cap.as_slice().to_vec() };
    ValueOracle::new(func, cap)
}

/// f(x) = Σ_t [1 − Π_s (1 − q_st)^{x_s}].
#[derive(Clone, Debug)]
pub struct BudgetAllocation {
    /// Per target: (source, ln(1 − q)).
    targets: Vec<Vec<(usize, f64)>>,
}

impl LatticeFunction for BudgetAllocation {
    fn value(&self, x: &[u64]) -> f64 {
        self.targets
            .iter()
            .map(|edges| {
                let log_miss: f64 = edges.iter().map(|&(s, l)| x[s] as f64 * l).sum();
                -log_miss.exp_m1()
            })
            .sum()
    }
}

/// `edges` are (source, target, q) triples; sources index the box.
/// Budget-allocation edge: (source, target, activation probability).
pub type Edge = (usize, usize, f64);

pub fn make_budget_allocation(edges: &[(usize, usize, f64)], cap: LatticePoint) -> Result<ValueOracle> {
    let n = cap.dim();
    let n_targets = edges.iter().map(|e| e.1 + 1).max().unwrap_or(0);
    let mut targets = vec![Vec::new(); n_targets];
    for &(s, t, q) in edges {
        if s >= n {
            return Err(Error::Domain(format!("edge source {s} out of range for {n} sources")));
        }
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Domain(format!("probability on edge ({s}, {t}) must lie in (0, 1), got {q}")));
        }
        targets[t].push((s, (1.0 - q).ln()));
    }
    ValueOracle::new(BudgetAllocation { targets }, cap)
}

/// Lookup table over a box, in lexicographic order.
#[derive(Clone, Debug)]
pub struct TableFunction {
    cap: Vec<u64>,
    values: Vec<f64>,
}

impl LatticeFunction for TableFunction {
    fn value(&self, x: &[u64]) -> f64 {
        self.values[box_index(&self.cap, x)]
    }
}

/// A certified monotone lattice-submodular table.
pub struct LatticeTable {
    pub oracle: ValueOracle,
    /// True if the table is also DR-submodular.
    pub dr_submodular: bool,
}

pub fn make_lattice_nondr(cap: LatticePoint, values: Vec<f64>) -> Result<LatticeTable> {
    let size = box_size(&cap).ok_or_else(|| Error::Construction("table box is too large".into()))?;
    if values.len() as u64 != size {
        return Err(Error::Construction(format!("table needs {size} values for box {cap}, got {}", values.len())));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Construction(format!("table value {i} is not finite")));
    }
    for kind in [PropertyKind::Monotone, PropertyKind::LatticeSubmodular] {
        let report = check_table(&cap, &values, kind);
        if let Some(w) = report.violations.first() {
            return Err(Error::Construction(format!(
                "table is not {}: witness x = {}, y = {}, {} < {}",
                kind.name(),
                w.x,
                w.y,
                w.lhs,
                w.rhs
            )));
        }
    }
    let dr_submodular = check_table(&cap, &values, PropertyKind::DrSubmodular).passed;
    let func = TableFunction { cap: cap.as_slice().to_vec(), values };
    Ok(LatticeTable { oracle: ValueOracle::new(func, cap)?, dr_submodular })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableFixture {
    pub cap: Vec<u64>,
    pub values: Vec<f64>,
}

const NONDR_FIXTURES: &str = include_str!("../fixtures/nondr_tables.json");

/// Shipped monotone lattice-submodular tables that are not DR-submodular.
pub fn nondr_fixtures() -> Result<Vec<TableFixture>> {
    serde_json::from_str(NONDR_FIXTURES).map_err(|e| Error::Construction(format!("bad fixture file: {e}")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolymatroidFamily {
    /// ρ(X) = min(per_element·|X|, total).
    Uniform { n: usize, per_element: u64, total: u64 },
    /// Element lists per part, a per-element cap for each part and optional
    /// part totals.
    Partition {
        parts: Vec<Vec<usize>>,
        caps: Vec<u64>,
        #[serde(default)]
        totals: Option<Vec<u64>>,
    },
    /// ρ for every subset, indexed by bitmask.
    RankTable { n: usize, ranks: Vec<u64> },
}

pub fn make_polymatroid(family: &PolymatroidFamily) -> Result<PolymatroidOracle> {
    match family {
        PolymatroidFamily::Uniform { n, per_element, total } => {
            PolymatroidOracle::new(UniformPolymatroid::new(*n, *per_element, *total))
        }
        PolymatroidFamily::Partition { parts, caps, totals } => {
            PolymatroidOracle::new(PartitionPolymatroid::from_parts(parts, caps.clone(), totals.clone())?)
        }
        PolymatroidFamily::RankTable { n, ranks } => {
            PolymatroidOracle::new(RankTablePolymatroid::new(*n, ranks.clone())?)
        }
    }
}

fn default_edge_prob() -> f64 {
    0.5
}

/// Objective part of an [`InstanceSpec`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveSpec {
    SeparableConcave {
        coeffs: Vec<f64>,
        powers: Vec<f64>,
        cap: Vec<u64>,
    },
    BudgetAllocation {
        cap: Vec<u64>,
        edges: Vec<(usize, usize, f64)>,
    },
    Table {
        cap: Vec<u64>,
        values: Vec<f64>,
    },
    /// One of the shipped non-DR tables.
    NondrFixture {
        index: usize,
    },
    RandomSeparableConcave {
        n: usize,
        max_cap: u64,
        seed: u64,
    },
    RandomBudgetAllocation {
        sources: usize,
        targets: usize,
        max_cap: u64,
        #[serde(default = "default_edge_prob")]
        edge_prob: f64,
        seed: u64,
    },
}

impl ObjectiveSpec {
    pub fn build(&self) -> Result<ValueOracle> {
        use rand::SeedableRng;
        use rand_chacha::ChaCha8Rng;
        match self {
            ObjectiveSpec::SeparableConcave { coeffs, powers, cap } => {
                make_separable_concave(coeffs, powers, LatticePoint::from_vec(cap.clone()))
            }
            ObjectiveSpec::BudgetAllocation { cap, edges } => {
                make_budget_allocation(edges, LatticePoint::from_vec(cap.clone()))
            }
            ObjectiveSpec::Table { cap, values } => {
                Ok(make_lattice_nondr(LatticePoint::from_vec(cap.clone()), values.clone())?.oracle)
            }
            ObjectiveSpec::NondrFixture { index } => {
                let all = nondr_fixtures()?;
                let t = all.get(*index).ok_or_else(|| {
                    Error::Construction(format!("fixture index {index} out of range ({} tables)", all.len()))
                })?;
                Ok(make_lattice_nondr(LatticePoint::from_vec(t.cap.clone()), t.values.clone())?.oracle)
            }
            ObjectiveSpec::RandomSeparableConcave { n, max_cap, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let (a, p, c) = random::separable_concave(&mut rng, *n, *max_cap)?;
                make_separable_concave(&a, &p, c)
            }
            ObjectiveSpec::RandomBudgetAllocation { sources, targets, max_cap, edge_prob, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let (edges, cap) = random::budget_allocation(&mut rng, *sources, *targets, *max_cap, *edge_prob)?;
                make_budget_allocation(&edges, cap)
            }
        }
    }
}

/// Constraint part of an [`InstanceSpec`]. A missing cap defaults to the
/// oracle box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstraintSpec {
    Cardinality {
        budget: u64,
        #[serde(default)]
        cap: Option<Vec<u64>>,
    },
    /// Raw weights, divided by `budget` when one is given.
    Knapsack {
        weights: Vec<f64>,
        #[serde(default)]
        budget: Option<f64>,
        #[serde(default)]
        cap: Option<Vec<u64>>,
    },
    Polymatroid {
        family: PolymatroidFamily,
    },
}

/// A built constraint.
#[derive(Debug)]
pub enum BuiltConstraint {
    Cardinality(CardinalityConstraint),
    Knapsack(KnapsackInstance),
    Polymatroid(PolymatroidOracle),
}

impl BuiltConstraint {
    pub fn kind(&self) -> &'static str {
        match self {
            BuiltConstraint::Cardinality(_) => "cardinality",
            BuiltConstraint::Knapsack(_) => "knapsack",
            BuiltConstraint::Polymatroid(_) => "polymatroid",
        }
    }
}

impl ConstraintSpec {
    pub fn build(&self, box_cap: &LatticePoint) -> Result<BuiltConstraint> {
        let cap_or_box =
            |cap: &Option<Vec<u64>>| cap.clone().map(LatticePoint::from_vec).unwrap_or_else(|| box_cap.clone());
        match self {
            ConstraintSpec::Cardinality { budget, cap } => {
                Ok(BuiltConstraint::Cardinality(CardinalityConstraint::new(cap_or_box(cap), *budget)))
            }
            ConstraintSpec::Knapsack { weights, budget, cap } => {
                let cap = cap_or_box(cap);
                let inst = match budget {
                    Some(b) => KnapsackInstance::from_budget(weights, *b, cap)?,
                    None => KnapsackInstance::new(weights.clone(), cap)?,
                };
                Ok(BuiltConstraint::Knapsack(inst))
            }
            ConstraintSpec::Polymatroid { family } => Ok(BuiltConstraint::Polymatroid(make_polymatroid(family)?)),
        }
    }
}

/// A complete, serializable problem instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub id: String,
    pub objective: ObjectiveSpec,
    pub constraint: ConstraintSpec,
}

impl InstanceSpec {
    pub fn build(&self) -> Result<(ValueOracle, BuiltConstraint)> {
        let f = self.objective.build()?;
        let c = self.constraint.build(f.cap())?;
        Ok((f, c))
    }
}

/// Seeded random generators for the families above.
pub mod random {
    use rand::Rng;

    use super::Edge;
    use crate::error::{Error, Result};
    use crate::lattice::LatticePoint;

    /// Coefficients in [0.5, 5), powers in [0.3, 1], caps in 1..=max_cap.
    pub fn separable_concave<R: Rng>(
        rng: &mut R,
        n: usize,
        max_cap: u64,
    ) -> Result<(Vec<f64>, Vec<f64>, LatticePoint)> {
        if n == 0 || max_cap == 0 {
            return Err(Error::Domain("random instance needs n ≥ 1 and max_cap ≥ 1".into()));
        }
        let coeffs = (0..n).map(|_| rng.gen_range(0.5..5.0)).collect();
        let powers = (0..n).map(|_| rng.gen_range(0.3..=1.0)).collect();
        let cap = LatticePoint::from_vec((0..n).map(|_| rng.gen_range(1..=max_cap)).collect());
        Ok((coeffs, powers, cap))
    }

    /// Each (source, target) pair is an edge with probability `edge_prob`,
    /// with q in [0.1, 0.9]. Every target gets at least one edge.
    pub fn budget_allocation<R: Rng>(
        rng: &mut R,
        sources: usize,
        targets: usize,
        max_cap: u64,
        edge_prob: f64,
    ) -> Result<(Vec<Edge>, LatticePoint)> {
        if sources == 0 || max_cap == 0 {
            return Err(Error::Domain("random instance needs sources ≥ 1 and max_cap ≥ 1".into()));
        }
        if !(0.0..=1.0).contains(&edge_prob) {
            return Err(Error::Domain(format!("edge probability must lie in [0, 1], got {edge_prob}")));
        }
        let mut edges = Vec::new();
        for t in 0..targets {
            let before = edges.len();
            for s in 0..sources {
                if rng.gen_bool(edge_prob) {
                    edges.push((s, t, rng.gen_range(0.1..0.9)));
                }
            }
            if edges.len() == before {
                edges.push((rng.gen_range(0..sources), t, rng.gen_range(0.1..0.9)));
            }
        }
        let cap = LatticePoint::from_vec((0..sources).map(|_| rng.gen_range(1..=max_cap)).collect());
        Ok((edges, cap))
    }

    /// Weights on the grid {0.05, 0.10, ..., 1.00}.
    pub fn grid_weights<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(1..=20u32) as f64 * 0.05).collect()
    }

    /// Candidate lattice-submodular table: a convex separable part plus a
    /// concave piecewise-linear function of a weighted sum. All values are
    /// multiples of 1/4, so they are exact in floating point. The caller
    /// certifies the result.
    pub fn convex_plus_concave_table<R: Rng>(rng: &mut R, cap: &LatticePoint) -> Vec<f64> {
        let n = cap.dim();
        let curv: Vec<u64> = (0..n).map(|_| rng.gen_range(1..=4)).collect();
        let lin: Vec<u64> = (0..n).map(|_| rng.gen_range(0..=2)).collect();
        let w: Vec<u64> = (0..n).map(|_| rng.gen_range(1..=2)).collect();
        let max_sum: u64 = cap.as_slice().iter().zip(&w).map(|(c, w)| c * w).sum();
        let mut slope = rng.gen_range(4..=8u64);
        let mut psi = vec![0u64; max_sum as usize + 1];
        for s in 1..psi.len() {
            psi[s] = psi[s - 1] + slope;
            slope = slope.saturating_sub(rng.gen_range(0..=2));
        }
        crate::lattice::BoxIter::new(cap)
            .map(|x| {
                let sep: u64 = (0..n).map(|e| curv[e] * x[e] * x[e] + 4 * lin[e] * x[e]).sum();
                let s: u64 = (0..n).map(|e| w[e] * x[e]).sum();
                (sep + 4 * psi[s as usize]) as f64 / 4.0
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::properties::check_property_exhaustive;

    fn lp(v: &[u64]) -> LatticePoint {
        LatticePoint::from_vec(v.to_vec())
    }

    #[test]
    fn separable_examples() {
        let z = make_separable_concave(&[0.0, 0.0], &[0.5, 1.0], lp(&[3, 3])).unwrap();
        assert_eq!(z.eval(&lp(&[3, 2])).unwrap(), 0.0);
        let m = make_separable_concave(&[1.0], &[1.0], lp(&[5])).unwrap();
        assert_eq!(m.eval(&lp(&[4])).unwrap(), 4.0);
        let s = make_separable_concave(&[1.0, 1.0], &[0.5, 0.5], lp(&[3, 3])).unwrap();
        assert!(check_property_exhaustive(&s, PropertyKind::DrSubmodular).unwrap().passed);
        assert!(make_separable_concave(&[-1.0], &[0.5], lp(&[3])).is_err());
        assert!(make_separable_concave(&[1.0], &[1.5], lp(&[3])).is_err());
    }

    #[test]
    fn budget_allocation_examples() {
        let empty = make_budget_allocation(&[], lp(&[2, 2])).unwrap();
        assert_eq!(empty.eval(&lp(&[2, 2])).unwrap(), 0.0);
        let f = make_budget_allocation(&[(0, 0, 0.5)], lp(&[3])).unwrap();
        assert!((f.eval(&lp(&[1])).unwrap() - 0.5).abs() < 1e-15);
        assert!((f.eval(&lp(&[2])).unwrap() - 0.75).abs() < 1e-15);
        assert!(make_budget_allocation(&[(0, 0, 1.0)], lp(&[3])).is_err());
        assert!(make_budget_allocation(&[(0, 0, 0.0)], lp(&[3])).is_err());
        let g = make_budget_allocation(&[(0, 0, 0.3), (1, 0, 0.6), (0, 1, 0.2), (1, 1, 0.7)], lp(&[3, 3])).unwrap();
        assert!(check_property_exhaustive(&g, PropertyKind::DrSubmodular).unwrap().passed);
        assert!(check_property_exhaustive(&g, PropertyKind::Monotone).unwrap().passed);
    }

    #[test]
    fn tables() {
        // 1-D convex chain: lattice submodular, not DR.
        let t = make_lattice_nondr(lp(&[3]), vec![0.0, 1.0, 3.0, 6.0]).unwrap();
        assert!(!t.dr_submodular);
        let dr = make_lattice_nondr(lp(&[2]), vec![0.0, 2.0, 3.0]).unwrap();
        assert!(dr.dr_submodular);
        // x0·x1 is supermodular.
        let err = make_lattice_nondr(lp(&[1, 1]), vec![0.0, 0.0, 0.0, 1.0]).err().unwrap();
        assert!(err.to_string().contains("witness"));
        assert!(make_lattice_nondr(lp(&[2]), vec![0.0, 2.0, 1.0]).is_err());
        assert!(make_lattice_nondr(lp(&[2]), vec![0.0, 2.0]).is_err());
    }

    #[test]
    fn fixtures_are_certified_non_dr() {
        let all = nondr_fixtures().unwrap();
        assert!(!all.is_empty());
        for t in all {
            assert!(t.cap.len() <= 3 && t.cap.iter().all(|&c| c <= 4));
            let built = make_lattice_nondr(LatticePoint::from_vec(t.cap), t.values).unwrap();
            assert!(!built.dr_submodular);
        }
    }

    #[test]
    fn polymatroid_families() {
        let p = make_polymatroid(&PolymatroidFamily::Uniform { n: 3, per_element: 1, total: 0 }).unwrap();
        assert!(p.contains_point(&lp(&[0, 0, 0])).unwrap());
        assert!(!p.contains_point(&lp(&[0, 1, 0])).unwrap());
        let q = make_polymatroid(&PolymatroidFamily::Partition {
            parts: vec![vec![0, 1], vec![2]],
            caps: vec![2, 1],
            totals: None,
        })
        .unwrap();
        assert!(q.contains_point(&lp(&[2, 1, 1])).unwrap());
        assert!(!q.contains_point(&lp(&[3, 0, 0])).unwrap());
        assert!(make_polymatroid(&PolymatroidFamily::Partition {
            parts: vec![vec![0, 1], vec![1]],
            caps: vec![2, 1],
            totals: None,
        })
        .is_err());
    }

    #[test]
    fn spec_round_trip_and_purity() {
        let spec = InstanceSpec {
            id: "demo".into(),
            objective: ObjectiveSpec::RandomBudgetAllocation {
                sources: 3,
                targets: 4,
                max_cap: 3,
                edge_prob: 0.5,
                seed: 17,
            },
            constraint: ConstraintSpec::Knapsack { weights: vec![1.0, 2.0, 3.0], budget: Some(4.0), cap: None },
        };
        let text = toml::to_string(&spec).unwrap();
        let back: InstanceSpec = toml::from_str(&text).unwrap();
        assert_eq!(back, spec);
        let (f, _) = spec.build().unwrap();
        let (g, _) = back.build().unwrap();
        for x in crate::lattice::BoxIter::new(f.cap()) {
            assert_eq!(f.eval(&x).unwrap(), g.eval(&x).unwrap());
        }
    }
}
