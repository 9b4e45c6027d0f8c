//! Stochastic road networks with Gamma-distributed link travel times.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::format::{fmt_sig, round_sig};

/// Significant digits used in network files. Generated parameters are rounded
/// to this precision so a save/load cycle is lossless.
pub const NETWORK_FILE_DIGITS: usize = 12;

/// Shape/scale parameterization of a Gamma law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaParams {
    pub shape: f64,
    pub scale: f64,
}

impl GammaParams {
    /// Moment match: `shape = mean²/sd²`, `scale = sd²/mean`.
    pub fn from_mean_sd(mean: f64, sd: f64) -> Result<Self> {
        if !(mean > 0.0 && mean.is_finite()) || !(sd > 0.0 && sd.is_finite()) {
            return Err(Error::invalid(format!(
                "gamma link needs positive finite mean and sd, got mean={mean}, sd={sd}"
            )));
        }
        Ok(Self {
            shape: mean * mean / (sd * sd),
            scale: sd * sd / mean,
        })
    }

    pub fn mean(&self) -> f64 {
        self.shape * self.scale
    }

    pub fn sd(&self) -> f64 {
        self.scale * self.shape.sqrt()
    }

    /// Cumulative distribution function.
    pub fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        crate::special::gamma_p(self.shape, t / self.scale).expect("valid gamma parameters")
    }

    pub fn sampler(&self) -> Gamma<f64> {
        Gamma::new(self.shape, self.scale).expect("validated gamma parameters")
    }
}

/// Convenience wrapper around [`GammaParams::from_mean_sd`].
pub fn gamma_from_mean_sd(mean: f64, sd: f64) -> Result<GammaParams> {
    GammaParams::from_mean_sd(mean, sd)
}

/// One strictly positive travel time.
pub fn sample_travel_time<R: Rng + ?Sized>(link: &GammaParams, rng: &mut R) -> f64 {
    draw(&link.sampler(), rng)
}

pub(crate) fn draw<R: Rng + ?Sized>(dist: &Gamma<f64>, rng: &mut R) -> f64 {
    dist.sample(rng).max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub mean: f64,
    pub sd: f64,
}

impl Edge {
    pub fn gamma(&self) -> GammaParams {
        GammaParams::from_mean_sd(self.mean, self.sd).expect("validated edge")
    }
}

/// Directed graph with one destination. Successor lists are sorted by node id.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingNetwork {
    node_count: usize,
    destination: usize,
    edges: Vec<Edge>,
    // adjacency[i] = indices into `edges`, ordered by successor id
    adjacency: Vec<Vec<usize>>,
}

impl RoutingNetwork {
    pub fn new(node_count: usize, destination: usize, edges: Vec<Edge>) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::invalid("network has no nodes"));
        }
        if destination >= node_count {
            return Err(Error::invalid(format!(
                "destination {destination} out of range for {node_count} nodes"
            )));
        }
        let mut adjacency = vec![Vec::new(); node_count];
        for (k, e) in edges.iter().enumerate() {
            if e.from >= node_count || e.to >= node_count {
                return Err(Error::invalid(format!(
                    "edge {}->{} references a node outside 0..{node_count}",
                    e.from, e.to
                )));
            }
            if e.from == e.to {
                return Err(Error::invalid(format!("self-loop at node {}", e.from)));
            }
            GammaParams::from_mean_sd(e.mean, e.sd)?;
            adjacency[e.from].push(k);
        }
        for (i, succ) in adjacency.iter_mut().enumerate() {
            succ.sort_by_key(|&k| edges[k].to);
            if succ.windows(2).any(|w| edges[w[0]].to == edges[w[1]].to) {
                return Err(Error::invalid(format!("duplicate edge out of node {i}")));
            }
            if succ.is_empty() && i != destination {
                return Err(Error::invalid(format!(
                    "node {i} has no successor and is not the destination"
                )));
            }
        }
        Ok(Self {
            node_count,
            destination,
            edges,
            adjacency,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn destination(&self) -> usize {
        self.destination
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Outgoing edges of `node`, ordered by successor id.
    pub fn out_edges(&self, node: usize) -> impl Iterator<Item = &Edge> + '_ {
        self.adjacency[node].iter().map(move |&k| &self.edges[k])
    }

    /// Γ(i): successor node ids in ascending order.
    pub fn successors(&self, node: usize) -> Vec<usize> {
        self.out_edges(node).map(|e| e.to).collect()
    }

    pub fn out_degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn max_out_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn edge(&self, from: usize, to: usize) -> Option<&Edge> {
        self.out_edges(from).find(|e| e.to == to)
    }

    pub fn save<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("nodes {} destination {}\n", self.node_count, self.destination);
        for e in &self.edges {
            let _ = writeln!(
                s,
                "edge {} {} {} {}",
                e.from,
                e.to,
                fmt_sig(e.mean, NETWORK_FILE_DIGITS),
                fmt_sig(e.sd, NETWORK_FILE_DIGITS)
            );
        }
        s
    }

    pub fn load<R: BufRead>(input: R) -> Result<Self> {
        let mut header: Option<(usize, usize)> = None;
        let mut edges = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() || fields[0].starts_with('#') {
                continue;
            }
            match fields.as_slice() {
                ["nodes", n, "destination", d] if header.is_none() => {
                    header = Some((parse_field(n, lineno)?, parse_field(d, lineno)?));
                }
                ["edge", i, j, mean, sd] if header.is_some() => edges.push(Edge {
                    from: parse_field(i, lineno)?,
                    to: parse_field(j, lineno)?,
                    mean: parse_field(mean, lineno)?,
                    sd: parse_field(sd, lineno)?,
                }),
                _ => return Err(Error::parse(lineno, format!("unexpected line `{line}`"))),
            }
        }
        let (n, d) = header.ok_or_else(|| Error::parse(1, "missing `nodes <N> destination <d>` header"))?;
        Self::new(n, d, edges)
    }
}

fn parse_field<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse()
        .map_err(|_| Error::parse(line, format!("cannot parse `{s}`")))
}

/// Parameters of a random n×m grid with bidirectional 4-neighbour links.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    pub destination: usize,
    pub mean_range: (f64, f64),
    pub sd_range: (f64, f64),
    /// Use one draw for both directions of a link.
    pub symmetric_links: bool,
    pub seed: u64,
}

impl GridSpec {
    pub fn new(rows: usize, cols: usize, destination: usize, seed: u64) -> Self {
        Self {
            rows,
            cols,
            destination,
            mean_range: (1.0, 5.0),
            sd_range: (0.1, 0.5),
            symmetric_links: false,
            seed,
        }
    }
}

pub fn generate_grid(spec: &GridSpec) -> Result<RoutingNetwork> {
    let GridSpec { rows, cols, .. } = *spec;
    if rows < 2 || cols < 2 {
        return Err(Error::invalid(format!("grid must be at least 2x2, got {rows}x{cols}")));
    }
    for (name, (lo, hi)) in [("mean", spec.mean_range), ("sd", spec.sd_range)] {
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(Error::invalid(format!("{name} range must satisfy 0 < low < high, got ({lo}, {hi})")));
        }
    }
    let n = rows * cols;
    if spec.destination >= n {
        return Err(Error::invalid(format!(
            "destination {} out of range for a {rows}x{cols} grid",
            spec.destination
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut edges: Vec<Edge> = Vec::with_capacity(4 * n);
    for i in 0..n {
        let (r, c) = (i / cols, i % cols);
        let mut nbrs = Vec::with_capacity(4);
        if r > 0 {
            nbrs.push(i - cols);
        }
        if c > 0 {
            nbrs.push(i - 1);
        }
        if c + 1 < cols {
            nbrs.push(i + 1);
        }
        if r + 1 < rows {
            nbrs.push(i + cols);
        }
        for j in nbrs {
            let (mean, sd) = if spec.symmetric_links && j < i {
                let twin = edges
                    .iter()
                    .find(|e| e.from == j && e.to == i)
                    .expect("reverse link generated earlier");
                (twin.mean, twin.sd)
            } else {
                (open_uniform(&mut rng, spec.mean_range), open_uniform(&mut rng, spec.sd_range))
            };
            edges.push(Edge { from: i, to: j, mean, sd });
        }
    }
    RoutingNetwork::new(n, spec.destination, edges)
}

// Uniform on the open interval, already rounded to file precision.
fn open_uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    loop {
        let x = round_sig(rng.random_range(lo..hi), NETWORK_FILE_DIGITS);
        if x > lo && x < hi {
            return x;
        }
    }
}
