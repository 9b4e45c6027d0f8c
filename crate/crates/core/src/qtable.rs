//! Dense tabular action values over `(state, action, threshold bin)`.

use std::io::{BufRead, Write};

use crate::augmented::{ProblemKind, ThresholdBounds};
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::format::fmt_sig;

/// Tolerance used when mapping a threshold value to its bin, so that values
/// built as `lower + k * width` land in bin `k` despite rounding.
const BIN_SLACK: f64 = 1e-9;

/// Number of threshold bins for `[lower, upper]` at width `width`: bins start
/// at `lower + k * width` for `k = 0..=floor((upper - lower) / width)`.
pub fn bin_count(bounds: ThresholdBounds, width: f64) -> usize {
    ((bounds.upper() - bounds.lower()) / width + BIN_SLACK).floor() as usize + 1
}

/// Tabular `Q(s, a, rho)`.
///
/// Bin 0 holds `rho = lower`. Cells on the boundary of the reach problem are
/// pinned: in the general form every bin-0 cell is 1; in routing form the
/// destination row is 1 and bin 0 of every other node is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    kind: ProblemKind,
    bounds: ThresholdBounds,
    bin_width: f64,
    states: usize,
    actions: usize,
    bins: usize,
    allowed: Vec<Vec<usize>>,
    entries: Vec<f64>,
}

impl QTable {
    pub fn new(
        kind: ProblemKind,
        bounds: ThresholdBounds,
        bin_width: f64,
        action_count: usize,
        allowed: Vec<Vec<usize>>,
        fill: f64,
    ) -> Result<Self> {
        if !(bin_width > 0.0 && bin_width.is_finite()) {
            return Err(Error::invalid(format!("bin width must be positive, got {bin_width}")));
        }
        if !(0.0..=1.0).contains(&fill) {
            return Err(Error::invalid(format!("fill value {fill} is not a probability")));
        }
        let states = allowed.len();
        if states == 0 || action_count == 0 {
            return Err(Error::invalid("table needs at least one state and one action"));
        }
        if let ProblemKind::Routing { destination } = kind {
            if destination >= states {
                return Err(Error::invalid(format!("destination {destination} out of range")));
            }
        }
        for (s, acts) in allowed.iter().enumerate() {
            if acts.iter().any(|&a| a >= action_count) {
                return Err(Error::invalid(format!("state {s} lists an action >= {action_count}")));
            }
            if acts.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid(format!("actions of state {s} must be strictly ascending")));
            }
        }
        let bins = bin_count(bounds, bin_width);
        let mut table = Self {
            kind,
            bounds,
            bin_width,
            states,
            actions: action_count,
            bins,
            allowed,
            entries: vec![fill; states * action_count * bins],
        };
        for s in 0..states {
            for b in 0..bins {
                if let Some(v) = table.boundary_value(s, b) {
                    for a in 0..action_count {
                        let i = table.index(s, a, b);
                        table.entries[i] = v;
                    }
                }
            }
        }
        Ok(table)
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn bounds(&self) -> ThresholdBounds {
        self.bounds
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn state_count(&self) -> usize {
        self.states
    }

    pub fn action_count(&self) -> usize {
        self.actions
    }

    pub fn bin_count(&self) -> usize {
        self.bins
    }

    pub fn allowed(&self, state: usize) -> &[usize] {
        &self.allowed[state]
    }

    #[inline]
    pub(crate) fn index(&self, state: usize, action: usize, bin: usize) -> usize {
        (state * self.actions + action) * self.bins + bin
    }

    #[inline]
    pub fn get(&self, state: usize, action: usize, bin: usize) -> f64 {
        self.entries[self.index(state, action, bin)]
    }

    pub(crate) fn set(&mut self, state: usize, action: usize, bin: usize, value: f64) {
        let i = self.index(state, action, bin);
        self.entries[i] = value;
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Bin holding threshold value `rho`; `rho = upper` maps to the last bin.
    pub fn bin_of(&self, rho: f64) -> usize {
        let k = ((rho - self.bounds.lower()) / self.bin_width + BIN_SLACK).floor();
        (k.max(0.0) as usize).min(self.bins - 1)
    }

    /// Threshold value at the lower edge of `bin`.
    pub fn bin_value(&self, bin: usize) -> f64 {
        self.bounds.lower() + bin as f64 * self.bin_width
    }

    /// Pinned value of a boundary cell, `None` for learnable cells.
    pub fn boundary_value(&self, state: usize, bin: usize) -> Option<f64> {
        match self.kind {
            ProblemKind::Threshold => (bin == 0).then_some(1.0),
            ProblemKind::Routing { destination } => {
                if state == destination {
                    Some(1.0)
                } else if bin == 0 {
                    Some(0.0)
                } else {
                    None
                }
            }
        }
    }

    pub fn is_fixed(&self, state: usize, bin: usize) -> bool {
        self.boundary_value(state, bin).is_some()
    }

    /// `max_a Q(state, a, bin)` over allowed actions, or the pinned value.
    pub fn state_value(&self, state: usize, bin: usize) -> f64 {
        if let Some(v) = self.boundary_value(state, bin) {
            return v;
        }
        self.allowed[state]
            .iter()
            .map(|&a| self.get(state, a, bin))
            .fold(0.0, f64::max)
    }

    /// Greedy action with smallest-index tie-break.
    pub fn greedy_action(&self, state: usize, bin: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for &a in &self.allowed[state] {
            let v = self.get(state, a, bin);
            if best.is_none_or(|(_, bv)| v > bv) {
                best = Some((a, v));
            }
        }
        best.map(|(a, _)| a)
    }

    /// CSV `node,action,t_bin,q`, one row per allowed `(state, action, bin)`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "node,action,t_bin,q")?;
        for s in 0..self.states {
            for &a in &self.allowed[s] {
                for b in 0..self.bins {
                    writeln!(out, "{s},{a},{b},{}", fmt_sig(self.get(s, a, b), 9))?;
                }
            }
        }
        Ok(())
    }

    /// Inverse of [`QTable::write_csv`]. The allowed action sets are the
    /// `(node, action)` pairs present in the file.
    pub fn read_csv<R: BufRead>(
        input: R,
        kind: ProblemKind,
        bounds: ThresholdBounds,
        bin_width: f64,
        state_count: usize,
    ) -> Result<Self> {
        let mut rows = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            if idx == 0 {
                if line.trim() != "node,action,t_bin,q" {
                    return Err(Error::parse(1, "expected header `node,action,t_bin,q`"));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(Error::parse(lineno, "expected 4 fields"));
            }
            let p = |s: &str| s.trim().parse::<usize>().map_err(|_| Error::parse(lineno, format!("bad index `{s}`")));
            let q: f64 = f[3].trim().parse().map_err(|_| Error::parse(lineno, format!("bad value `{}`", f[3])))?;
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::parse(lineno, format!("value {q} outside [0, 1]")));
            }
            rows.push((p(f[0])?, p(f[1])?, p(f[2])?, q));
        }
        let actions = rows.iter().map(|r| r.1 + 1).max().unwrap_or(0);
        let mut allowed = vec![Vec::new(); state_count];
        for &(s, a, _, _) in &rows {
            if s >= state_count {
                return Err(Error::invalid(format!("node {s} out of range for {state_count} nodes")));
            }
            if allowed[s].last() != Some(&a) && !allowed[s].contains(&a) {
                allowed[s].push(a);
            }
        }
        for acts in &mut allowed {
            acts.sort_unstable();
        }
        let mut table = Self::new(kind, bounds, bin_width, actions.max(1), allowed, 0.0)?;
        for (s, a, b, q) in rows {
            if b >= table.bins {
                return Err(Error::invalid(format!(
                    "t_bin {b} out of range for {} bins",
                    table.bins
                )));
            }
            table.set(s, a, b, q);
        }
        Ok(table)
    }
}

/// Fresh table for `env` with interior cells set to `fill`.
pub fn init_q_table<E: Environment>(env: &E, bin_width: f64, fill: f64) -> Result<QTable> {
    let allowed = (0..env.state_count())
        .map(|s| env.allowed_actions(s).to_vec())
        .collect();
    QTable::new(env.kind(), env.bounds(), bin_width, env.action_count(), allowed, fill)
}
