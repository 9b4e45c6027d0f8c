//! Error norms, reliability curves, price of reliability, and policy maps.

use std::fmt::Write as _;
use std::io::Write;

use crate::augmented::{ProblemKind, Probability};
use crate::error::{Error, Result};
use crate::format::fmt_sig;
use crate::oracle::ValueTable;
use crate::policy::PolicyMap;
use crate::qtable::QTable;

/// Anything that assigns a success probability to `(node, budget bin)` cells.
pub trait ValueGrid {
    fn node_count(&self) -> usize;
    fn bin_count(&self) -> usize;
    fn bin_width(&self) -> f64;
    fn value(&self, node: usize, bin: usize) -> f64;
}

impl ValueGrid for ValueTable {
    fn node_count(&self) -> usize {
        ValueTable::node_count(self)
    }
    fn bin_count(&self) -> usize {
        ValueTable::bin_count(self)
    }
    fn bin_width(&self) -> f64 {
        self.dt()
    }
    fn value(&self, node: usize, bin: usize) -> f64 {
        ValueTable::value(self, node, bin)
    }
}

impl ValueGrid for QTable {
    fn node_count(&self) -> usize {
        self.state_count()
    }
    fn bin_count(&self) -> usize {
        QTable::bin_count(self)
    }
    fn bin_width(&self) -> f64 {
        QTable::bin_width(self)
    }
    fn value(&self, node: usize, bin: usize) -> f64 {
        self.state_value(node, bin)
    }
}

/// Sup and mean absolute difference between `max_a Q` and the reference
/// values over all non-boundary cells.
pub fn error_norms(q: &QTable, reference: &ValueTable) -> Result<(f64, f64)> {
    let same_width = (q.bin_width() - reference.dt()).abs() <= 1e-12 * reference.dt();
    if !same_width || q.bin_count() != reference.bin_count() || q.state_count() != reference.node_count() {
        return Err(Error::invalid(format!(
            "discretization mismatch: table {} nodes x {} bins of width {}, reference {} x {} of width {}",
            q.state_count(),
            q.bin_count(),
            q.bin_width(),
            reference.node_count(),
            reference.bin_count(),
            reference.dt()
        )));
    }
    if q.kind() != (ProblemKind::Routing { destination: reference.destination() }) {
        return Err(Error::invalid("table and reference disagree on the destination"));
    }
    let (mut sup, mut sum, mut n) = (0.0f64, 0.0, 0usize);
    for i in 0..q.state_count() {
        for k in 0..q.bin_count() {
            if q.is_fixed(i, k) {
                continue;
            }
            let diff = (q.state_value(i, k) - reference.value(i, k)).abs();
            sup = sup.max(diff);
            sum += diff;
            n += 1;
        }
    }
    Ok((sup, if n > 0 { sum / n as f64 } else { 0.0 }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityCurve {
    pub node: usize,
    pub budgets: Vec<f64>,
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceOfReliability {
    pub p1: Probability,
    pub p2: Probability,
    pub delta_p: f64,
    pub delta_t: f64,
}

impl ReliabilityCurve {
    pub fn new(node: usize, budgets: Vec<f64>, probabilities: Vec<f64>) -> Result<Self> {
        if budgets.is_empty() || budgets.len() != probabilities.len() {
            return Err(Error::invalid("curve needs matching, non-empty budget and probability arrays"));
        }
        if budgets.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("curve budgets must be strictly increasing"));
        }
        if probabilities.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::invalid("curve probabilities must lie in [0, 1]"));
        }
        Ok(Self { node, budgets, probabilities })
    }

    /// Largest drop between consecutive points (0 for a non-decreasing curve).
    pub fn max_decrease(&self) -> f64 {
        self.probabilities
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(0.0, f64::max)
    }

    /// Linear interpolation between curve points.
    pub fn probability_at(&self, t: f64) -> Result<f64> {
        let (lo, hi) = (self.budgets[0], *self.budgets.last().unwrap());
        if !(t >= lo && t <= hi) {
            return Err(Error::invalid(format!("budget {t} outside the curve range [{lo}, {hi}]")));
        }
        let j = self.budgets.partition_point(|&b| b <= t);
        if j == 0 {
            return Ok(self.probabilities[0]);
        }
        if j == self.budgets.len() {
            return Ok(*self.probabilities.last().unwrap());
        }
        let (b0, b1) = (self.budgets[j - 1], self.budgets[j]);
        let (p0, p1) = (self.probabilities[j - 1], self.probabilities[j]);
        Ok(p0 + (p1 - p0) * (t - b0) / (b1 - b0))
    }

    /// Price of reliability without the ordering precondition.
    pub fn price_between(&self, t1: f64, t2: f64) -> Result<PriceOfReliability> {
        let p1 = self.probability_at(t1)?;
        let p2 = self.probability_at(t2)?;
        Ok(PriceOfReliability {
            p1: Probability::new(p1)?,
            p2: Probability::new(p2)?,
            delta_p: p2 - p1,
            delta_t: t2 - t1,
        })
    }

    /// CSV `t,probability`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,probability")?;
        for (t, p) in self.budgets.iter().zip(&self.probabilities) {
            writeln!(out, "{},{}", fmt_sig(*t, 9), fmt_sig(*p, 9))?;
        }
        Ok(())
    }
}

/// Success probability of `node` at every budget `k * dt`.
pub fn reliability_curve<G: ValueGrid + ?Sized>(values: &G, node: usize) -> Result<ReliabilityCurve> {
    if node >= values.node_count() {
        return Err(Error::invalid(format!(
            "node {node} out of range for {} nodes",
            values.node_count()
        )));
    }
    let budgets = (0..values.bin_count()).map(|k| k as f64 * values.bin_width()).collect();
    let probabilities = (0..values.bin_count()).map(|k| values.value(node, k)).collect();
    ReliabilityCurve::new(node, budgets, probabilities)
}

/// Probabilities at budgets `t1 <= t2` and the gain `p2 - p1` bought by `t2 - t1`.
pub fn price_of_reliability(curve: &ReliabilityCurve, t1: f64, t2: f64) -> Result<PriceOfReliability> {
    if t1 > t2 {
        return Err(Error::invalid(format!("need t1 <= t2, got {t1} > {t2}")));
    }
    curve.price_between(t1, t2)
}

/// Matrix CSV: header `node,0,1,...,K`, one row per node, cells hold the
/// chosen successor or `-1` on terminal cells.
pub fn policy_map(policy: &PolicyMap) -> String {
    let mut s = String::from("node");
    for k in 0..policy.bin_count() {
        let _ = write!(s, ",{k}");
    }
    s.push('\n');
    for i in 0..policy.node_count() {
        let _ = write!(s, "{i}");
        for c in policy.row(i) {
            match c {
                Some(j) => {
                    let _ = write!(s, ",{j}");
                }
                None => s.push_str(",-1"),
            }
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augmented::ThresholdBounds;
    use crate::network::{Edge, RoutingNetwork};
    use crate::oracle::solve_sota;

    fn net() -> RoutingNetwork {
        let edges = vec![
            Edge { from: 0, to: 1, mean: 2.0, sd: 0.5 },
            Edge { from: 0, to: 2, mean: 1.0, sd: 0.3 },
            Edge { from: 1, to: 2, mean: 1.5, sd: 0.4 },
        ];
        RoutingNetwork::new(3, 2, edges).unwrap()
    }

    fn q_from(v: &ValueTable, n: &RoutingNetwork) -> QTable {
        let allowed = (0..3).map(|i| (0..n.out_degree(i)).collect()).collect();
        let mut q = QTable::new(
            ProblemKind::Routing { destination: 2 },
            ThresholdBounds::budget(6.0).unwrap(),
            v.dt(),
            2,
            allowed,
            0.0,
        )
        .unwrap();
        for i in 0..2 {
            for k in 1..v.bin_count() {
                for a in 0..n.out_degree(i) {
                    q.set(i, a, k, v.value(i, k));
                }
            }
        }
        q
    }

    #[test]
    fn norms_of_identical_and_perturbed_tables() {
        let n = net();
        let v = solve_sota(&n, 0.5, 6.0, 1e-9, 30).unwrap();
        let mut q = q_from(&v, &n);
        assert_eq!(error_norms(&q, &v).unwrap(), (0.0, 0.0));
        // learnable cells: nodes 0 and 1, bins 1..=12
        let cells = 2 * 12;
        let k = (1..13).find(|&k| q.get(1, 0, k) <= 0.8).unwrap();
        q.set(1, 0, k, q.get(1, 0, k) + 0.2);
        let (sup, l1) = error_norms(&q, &v).unwrap();
        assert!((sup - 0.2).abs() < 1e-12);
        assert!((l1 - 0.2 / cells as f64).abs() < 1e-12);
    }

    #[test]
    fn norms_reject_mismatch() {
        let n = net();
        let v = solve_sota(&n, 0.25, 6.0, 1e-9, 30).unwrap();
        let w = solve_sota(&n, 0.5, 6.0, 1e-9, 30).unwrap();
        let q = q_from(&w, &n);
        assert!(error_norms(&q, &v).is_err());
    }

    #[test]
    fn curves() {
        let n = net();
        let v = solve_sota(&n, 0.5, 6.0, 1e-9, 30).unwrap();
        let dest = reliability_curve(&v, 2).unwrap();
        assert!(dest.probabilities.iter().all(|&p| p == 1.0));
        let c = reliability_curve(&v, 0).unwrap();
        assert_eq!(c.probabilities[0], 0.0);
        assert_eq!(c.budgets[4], 2.0);
        assert!(c.max_decrease() <= 1e-9);
        assert!(reliability_curve(&v, 3).is_err());
    }

    #[test]
    fn worked_price_example() {
        let c = ReliabilityCurve::new(0, vec![70.0, 80.0, 90.0, 100.0], vec![0.1, 0.36, 0.84, 0.99]).unwrap();
        let p = price_of_reliability(&c, 80.0, 90.0).unwrap();
        assert_eq!(p.p1.get(), 0.36);
        assert_eq!(p.p2.get(), 0.84);
        assert!((p.delta_p - 0.48).abs() < 1e-12);
        assert_eq!(p.delta_t, 10.0);
        let same = price_of_reliability(&c, 85.0, 85.0).unwrap();
        assert_eq!(same.delta_p, 0.0);
        assert!((c.probability_at(85.0).unwrap() - 0.6).abs() < 1e-12);
        assert!(price_of_reliability(&c, 90.0, 80.0).is_err());
        assert!(price_of_reliability(&c, 60.0, 80.0).is_err());
        assert!(price_of_reliability(&c, 80.0, 100.5).is_err());
    }

    #[test]
    fn price_is_antisymmetric() {
        let c = ReliabilityCurve::new(0, vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 0.2, 0.7, 0.9]).unwrap();
        for &(a, b) in &[(0.3, 2.6), (1.0, 3.0), (0.0, 0.5)] {
            let f = c.price_between(a, b).unwrap();
            let r = c.price_between(b, a).unwrap();
            assert_eq!(f.delta_p, -r.delta_p);
            assert_eq!(f.delta_t, -r.delta_t);
        }
    }

    #[test]
    fn policy_map_csv() {
        let n = net();
        let v = solve_sota(&n, 1.0, 3.0, 1e-9, 30).unwrap();
        let text = policy_map(v.policy());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "node,0,1,2,3");
        assert_eq!(lines[2], "1,-1,2,2,2");
        assert_eq!(lines[3], "2,-1,-1,-1,-1");
    }
}
