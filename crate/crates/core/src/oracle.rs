//! Exact discretized solver for the stochastic on-time arrival recursion
//!
//! ```text
//! v_i(t) = max_{j ∈ Γ(i)} ∫_0^t p_ij(w) v_j(t - w) dw,    v_d(t) = 1
//! ```
//!
//! by successive approximation on the budget lattice `t = k * dt`.
//!
//! Convention: a travel time in `(m dt, (m+1) dt]` taken with budget `k dt`
//! leaves between `(k-m-1) dt` and `(k-m) dt`; the lower edge is used, and a
//! travel time exceeding the budget is a failure. Values are therefore lower
//! bounds on the continuous-time probabilities, and a sweep at bin `k` only
//! reads bins `< k`, so the iteration reaches its fixed point in finitely many
//! sweeps.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::format::fmt_sig;
use crate::network::{GammaParams, RoutingNetwork};
use crate::policy::PolicyMap;

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Number of budget steps `K = floor(horizon / dt)`; value rows have `K + 1` entries.
pub fn budget_steps(dt: f64, horizon: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) || !(horizon >= dt && horizon.is_finite()) {
        return Err(Error::invalid(format!(
            "need dt > 0 and horizon >= dt, got dt={dt}, horizon={horizon}"
        )));
    }
    Ok((horizon / dt + 1e-9).floor() as usize)
}

/// Travel-time law binned on `(m dt, (m+1) dt]`, `m = 0..K`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePmf {
    pub dt: f64,
    pub mass: Vec<f64>,
}

impl DiscretePmf {
    /// All mass in bin `bin`.
    pub fn point_mass(dt: f64, len: usize, bin: usize) -> Self {
        let mut mass = vec![0.0; len];
        mass[bin] = 1.0;
        Self { dt, mass }
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    // index range holding all non-zero mass
    fn support(&self) -> (usize, usize) {
        let lo = self.mass.iter().position(|&m| m > 0.0).unwrap_or(self.mass.len());
        let hi = self.mass.iter().rposition(|&m| m > 0.0).map_or(0, |i| i + 1);
        (lo, hi.max(lo))
    }
}

/// `mass[m] = F((m+1) dt) - F(m dt)` for `m = 0..K`, truncated at the horizon.
pub fn discretize_pdf(link: &GammaParams, dt: f64, horizon: f64) -> Result<DiscretePmf> {
    let k = budget_steps(dt, horizon)?;
    let cdf: Vec<f64> = (0..=k).map(|m| link.cdf(m as f64 * dt)).collect();
    let mass = cdf.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect();
    Ok(DiscretePmf { dt, mass })
}

/// `out[k] = Σ_{m=0}^{k-1} mass[m] * next[k-m-1]`.
///
/// `next` has one more entry than `pmf.mass` (budgets `0..=K`).
pub fn convolve_value(pmf: &DiscretePmf, next: &[f64]) -> Result<Vec<f64>> {
    if next.len() != pmf.mass.len() + 1 {
        return Err(Error::invalid(format!(
            "value row has {} bins but the pmf covers {}",
            next.len(),
            pmf.mass.len() + 1
        )));
    }
    let mut out = vec![0.0; next.len()];
    convolve_into(pmf, pmf.support(), next, &mut out);
    Ok(out)
}

fn convolve_into(pmf: &DiscretePmf, (lo, hi): (usize, usize), next: &[f64], out: &mut [f64]) {
    for (k, slot) in out.iter_mut().enumerate() {
        let upper = k.min(hi);
        let mut acc = 0.0;
        for m in lo..upper {
            acc += pmf.mass[m] * next[k - m - 1];
        }
        *slot = acc.min(1.0);
    }
}

/// `v*_i(k dt)` and the maximizing successor for every node and budget bin.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    dt: f64,
    nodes: usize,
    bins: usize,
    destination: usize,
    values: Vec<f64>,
    policy: PolicyMap,
    residual: f64,
    sweeps: usize,
}

impl ValueTable {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    /// `K + 1`.
    pub fn bin_count(&self) -> usize {
        self.bins
    }

    pub fn destination(&self) -> usize {
        self.destination
    }

    pub fn value(&self, node: usize, bin: usize) -> f64 {
        self.values[node * self.bins + bin]
    }

    pub fn row(&self, node: usize) -> &[f64] {
        &self.values[node * self.bins..(node + 1) * self.bins]
    }

    /// Successor-node policy; `None` on terminal cells.
    pub fn policy(&self) -> &PolicyMap {
        &self.policy
    }

    /// Sup-norm change of the last sweep.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// CSV `node,t_bin,value,policy`; terminal cells print policy `-1`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "node,t_bin,value,policy")?;
        for i in 0..self.nodes {
            for k in 0..self.bins {
                let p = self.policy.get(i, k).map_or(-1, |j| j as i64);
                writeln!(out, "{i},{k},{},{p}", fmt_sig(self.value(i, k), 9))?;
            }
        }
        Ok(())
    }

    /// Inverse of [`ValueTable::write_csv`]; the destination is the node
    /// whose zero-budget value is 1.
    pub fn read_csv<R: BufRead>(input: R, dt: f64) -> Result<Self> {
        let mut rows: Vec<(usize, usize, f64, i64)> = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            if idx == 0 {
                if line.trim() != "node,t_bin,value,policy" {
                    return Err(Error::parse(1, "expected header `node,t_bin,value,policy`"));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 4 {
                return Err(Error::parse(lineno, "expected 4 fields"));
            }
            let bad = |s: &str| Error::parse(lineno, format!("cannot parse `{s}`"));
            let v: f64 = f[2].parse().map_err(|_| bad(f[2]))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::parse(lineno, format!("value {v} outside [0, 1]")));
            }
            rows.push((
                f[0].parse().map_err(|_| bad(f[0]))?,
                f[1].parse().map_err(|_| bad(f[1]))?,
                v,
                f[3].parse().map_err(|_| bad(f[3]))?,
            ));
        }
        let nodes = rows.iter().map(|r| r.0 + 1).max().unwrap_or(0);
        let bins = rows.iter().map(|r| r.1 + 1).max().unwrap_or(0);
        if nodes == 0 || bins == 0 || rows.len() != nodes * bins {
            return Err(Error::invalid(format!(
                "value table must list every (node, t_bin) pair exactly once ({} rows for {nodes}x{bins})",
                rows.len()
            )));
        }
        let mut values = vec![f64::NAN; nodes * bins];
        let mut policy = PolicyMap::new(nodes, bins);
        for (i, k, v, p) in rows {
            values[i * bins + k] = v;
            policy.set(i, k, usize::try_from(p).ok());
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::invalid("value table has duplicate rows"));
        }
        let destination = (0..nodes)
            .find(|&i| values[i * bins] == 1.0)
            .ok_or_else(|| Error::invalid("no node has value 1 at zero budget"))?;
        Ok(Self {
            dt,
            nodes,
            bins,
            destination,
            values,
            policy,
            residual: 0.0,
            sweeps: 0,
        })
    }
}

/// Successor, its travel-time pmf, and the pmf's nonzero support.
type Link = (usize, DiscretePmf, (usize, usize));

/// Discretized network: one pmf per edge, shared by every sweep.
#[derive(Debug, Clone)]
pub struct SotaProblem<'a> {
    net: &'a RoutingNetwork,
    dt: f64,
    bins: usize,
    links: Vec<Vec<Link>>,
}

impl<'a> SotaProblem<'a> {
    pub fn new(net: &'a RoutingNetwork, dt: f64, horizon: f64) -> Result<Self> {
        let k = budget_steps(dt, horizon)?;
        let links = (0..net.node_count())
            .map(|i| {
                net.out_edges(i)
                    .map(|e| {
                        let pmf = discretize_pdf(&e.gamma(), dt, horizon)?;
                        let support = pmf.support();
                        Ok((e.to, pmf, support))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            net,
            dt,
            bins: k + 1,
            links,
        })
    }

    pub fn bin_count(&self) -> usize {
        self.bins
    }

    /// Starting point of the iteration: destination row 1, everything else 0.
    pub fn initial_values(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.net.node_count() * self.bins];
        let d = self.net.destination();
        v[d * self.bins..(d + 1) * self.bins].fill(1.0);
        v
    }

    /// One Jacobi sweep. With `policy = None` every node takes the best
    /// successor; otherwise the successor prescribed for each cell.
    pub fn sweep(&self, values: &[f64], policy: Option<&PolicyMap>) -> Vec<f64> {
        let bins = self.bins;
        let d = self.net.destination();
        let mut next = vec![0.0; values.len()];
        let mut scratch = vec![0.0; bins];
        for (i, links) in self.links.iter().enumerate() {
            let row = &mut next[i * bins..(i + 1) * bins];
            if i == d {
                row.fill(1.0);
                continue;
            }
            for (j, pmf, support) in links {
                convolve_into(pmf, *support, &values[j * bins..(j + 1) * bins], &mut scratch);
                for k in 1..bins {
                    let take = match policy {
                        None => true,
                        Some(p) => p.get(i, k) == Some(*j),
                    };
                    if take && scratch[k] > row[k] {
                        row[k] = scratch[k];
                    }
                }
            }
        }
        next
    }

    /// Best successor per cell with smallest-id tie-break; `None` on terminal cells.
    pub fn greedy_policy(&self, values: &[f64]) -> PolicyMap {
        let bins = self.bins;
        let d = self.net.destination();
        let mut policy = PolicyMap::new(self.net.node_count(), bins);
        let mut scratch = vec![0.0; bins];
        let mut best = vec![f64::NEG_INFINITY; bins];
        for (i, links) in self.links.iter().enumerate() {
            if i == d {
                continue;
            }
            best.fill(f64::NEG_INFINITY);
            // successors are visited in ascending id order; strict > keeps the smallest
            for (j, pmf, support) in links {
                convolve_into(pmf, *support, &values[j * bins..(j + 1) * bins], &mut scratch);
                for k in 1..bins {
                    if scratch[k] > best[k] {
                        best[k] = scratch[k];
                        policy.set(i, k, Some(*j));
                    }
                }
            }
        }
        policy
    }

    fn iterate(&self, policy: Option<&PolicyMap>, tol: f64, max_sweeps: usize) -> Result<(Vec<f64>, f64, usize)> {
        if !(tol > 0.0) {
            return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
        }
        let mut values = self.initial_values();
        let mut residual = f64::INFINITY;
        for sweep in 1..=max_sweeps {
            let next = self.sweep(&values, policy);
            residual = next
                .iter()
                .zip(&values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            values = next;
            if residual < tol {
                return Ok((values, residual, sweep));
            }
        }
        Err(Error::NotConverged {
            sweeps: max_sweeps,
            residual,
        })
    }

    fn table(&self, values: Vec<f64>, policy: PolicyMap, residual: f64, sweeps: usize) -> ValueTable {
        ValueTable {
            dt: self.dt,
            nodes: self.net.node_count(),
            bins: self.bins,
            destination: self.net.destination(),
            values,
            policy,
            residual,
            sweeps,
        }
    }
}

/// Default sweep cap: ten sweeps per node.
pub fn default_max_sweeps(net: &RoutingNetwork) -> usize {
    10 * net.node_count()
}

/// Optimal on-time arrival probabilities and policy.
pub fn solve_sota(net: &RoutingNetwork, dt: f64, horizon: f64, tol: f64, max_sweeps: usize) -> Result<ValueTable> {
    let problem = SotaProblem::new(net, dt, horizon)?;
    let (values, residual, sweeps) = problem.iterate(None, tol, max_sweeps)?;
    let policy = problem.greedy_policy(&values);
    Ok(problem.table(values, policy, residual, sweeps))
}

/// Arrival probabilities of a fixed successor policy.
///
/// The iteration terminates after at most `K + 1` sweeps because each sweep
/// fixes one more budget bin.
pub fn evaluate_policy(net: &RoutingNetwork, policy: &PolicyMap, dt: f64, horizon: f64) -> Result<ValueTable> {
    let problem = SotaProblem::new(net, dt, horizon)?;
    let bins = problem.bin_count();
    if policy.node_count() != net.node_count() || policy.bin_count() != bins {
        return Err(Error::invalid(format!(
            "policy covers {}x{} cells, network needs {}x{bins}",
            policy.node_count(),
            policy.bin_count(),
            net.node_count()
        )));
    }
    let d = net.destination();
    let mut clean = PolicyMap::new(net.node_count(), bins);
    for i in (0..net.node_count()).filter(|&i| i != d) {
        let succ = net.successors(i);
        for k in 1..bins {
            match policy.get(i, k) {
                Some(j) if succ.contains(&j) => clean.set(i, k, Some(j)),
                Some(j) => {
                    return Err(Error::invalid(format!(
                        "policy sends node {i} to {j}, which is not a successor"
                    )))
                }
                None => return Err(Error::invalid(format!("policy undefined at node {i}, bin {k}"))),
            }
        }
    }
    let (values, residual, sweeps) = problem.iterate(Some(&clean), DEFAULT_TOLERANCE, bins + 1)?;
    Ok(problem.table(values, clean, residual, sweeps))
}
