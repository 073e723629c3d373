//! Exact simulation of locally stable point processes by dominated coupling
//! from the past.
//!
//! The dominating process is a spatial birth-death process with births
//! uniform on the region at total rate `ξ|R|` and unit death rate per point;
//! its equilibrium is Poisson with intensity `ξ`. It is simulated backwards
//! in time from zero over windows of length 1, 2, 4, ..., reusing the
//! already generated part of the path on each extension.

use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};

use crate::error::{invalid, Error, Result};
use crate::model::{BoundingBox, Point, PointConfig};
use crate::point_process::StraussParams;

/// A process whose Papangelou intensity is bounded by a constant.
pub trait LocallyStable {
    fn region(&self) -> &BoundingBox;

    /// Upper bound on the Papangelou intensity.
    fn dominating_intensity(&self) -> f64;

    fn log_papangelou(&self, x: &[f64], config: &[&[f64]]) -> f64;
}

impl LocallyStable for StraussParams {
    fn region(&self) -> &BoundingBox {
        &self.region
    }

    fn dominating_intensity(&self) -> f64 {
        self.xi
    }

    fn log_papangelou(&self, x: &[f64], config: &[&[f64]]) -> f64 {
        crate::point_process::strauss_log_papangelou(x, config, self)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DcftpConfig {
    /// Cap on the number of simultaneously alive dominating points.
    pub max_points: usize,
    /// Cap on the number of window doublings.
    pub max_doublings: usize,
    /// Reject empty outputs and rerun.
    pub condition_nonempty: bool,
}

impl Default for DcftpConfig {
    fn default() -> Self {
        DcftpConfig {
            max_points: 10_000,
            max_doublings: 30,
            condition_nonempty: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DcftpStats {
    /// Length of the window that coalesced.
    pub window: f64,
    /// Full reruns caused by empty outputs.
    pub empty_reruns: usize,
    /// Largest dominating configuration seen.
    pub max_dominating: usize,
}

/// A point of the dominating process.
#[derive(Clone, Debug)]
struct Dominating {
    x: Point,
    log_mark: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum EventKind {
    Birth,
    Death,
}

struct Backward {
    arena: Vec<Dominating>,
    /// Alive at the current horizon.
    alive: Vec<usize>,
    /// Forward-time events, latest first.
    log: Vec<(EventKind, usize)>,
    horizon: f64,
    max_alive: usize,
}

impl Backward {
    fn start<P: LocallyStable, R: Rng + ?Sized>(p: &P, cfg: &DcftpConfig, rng: &mut R) -> Result<Self> {
        let mass = p.dominating_intensity() * p.region().volume();
        let n0 = Poisson::new(mass)
            .map_err(|e| invalid(format!("dominating mass {mass}: {e}")))?
            .sample(rng) as usize;
        if n0 > cfg.max_points {
            return Err(Error::ResourceExceeded(format!(
                "dominating process starts with {n0} points (cap {})",
                cfg.max_points
            )));
        }
        let arena: Vec<Dominating> = (0..n0)
            .map(|_| Dominating {
                x: p.region().sample_uniform(rng),
                log_mark: rng.random::<f64>().ln(),
            })
            .collect();
        Ok(Backward {
            alive: (0..n0).collect(),
            arena,
            log: Vec::new(),
            horizon: 0.0,
            max_alive: n0,
        })
    }

    /// Continues the backward path down to `-t`.
    fn extend<P: LocallyStable, R: Rng + ?Sized>(
        &mut self,
        p: &P,
        t: f64,
        cfg: &DcftpConfig,
        rng: &mut R,
    ) -> Result<()> {
        let birth_rate = p.dominating_intensity() * p.region().volume();
        let mut now = self.horizon;
        loop {
            let total = birth_rate + self.alive.len() as f64;
            let wait = Exp::new(total).map_err(|e| invalid(e.to_string()))?.sample(rng);
            // Memorylessness lets the overshooting wait be discarded.
            if now - wait <= -t {
                break;
            }
            now -= wait;
            if rng.random::<f64>() * total < birth_rate {
                // Backward birth: a point that dies at `now` going forward.
                self.arena.push(Dominating {
                    x: p.region().sample_uniform(rng),
                    log_mark: rng.random::<f64>().ln(),
                });
                let id = self.arena.len() - 1;
                self.alive.push(id);
                self.log.push((EventKind::Death, id));
                if self.alive.len() > cfg.max_points {
                    return Err(Error::ResourceExceeded(format!(
                        "dominating process exceeded {} points",
                        cfg.max_points
                    )));
                }
                self.max_alive = self.max_alive.max(self.alive.len());
            } else {
                let pos = rng.random_range(0..self.alive.len());
                let id = self.alive.swap_remove(pos);
                self.log.push((EventKind::Birth, id));
            }
        }
        self.horizon = -t;
        Ok(())
    }

    /// Forward coupled pass from the horizon; `Some` on coalescence.
    fn coalesce<P: LocallyStable>(&self, p: &P) -> Option<Vec<usize>> {
        let log_bound = p.dominating_intensity().ln();
        let mut upper: Vec<usize> = self.alive.clone();
        let mut lower: Vec<usize> = Vec::new();
        let mut scratch: Vec<&[f64]> = Vec::new();
        let mut met = upper.is_empty();
        for &(kind, id) in self.log.iter().rev() {
            match kind {
                EventKind::Birth => {
                    let x = &self.arena[id].x;
                    let mark = self.arena[id].log_mark;
                    scratch.clear();
                    scratch.extend(lower.iter().map(|&j| self.arena[j].x.0.as_slice()));
                    let into_upper = mark < p.log_papangelou(x, &scratch) - log_bound;
                    let into_lower = if met {
                        into_upper
                    } else {
                        scratch.clear();
                        scratch.extend(upper.iter().map(|&j| self.arena[j].x.0.as_slice()));
                        mark < p.log_papangelou(x, &scratch) - log_bound
                    };
                    debug_assert!(met || into_upper || !into_lower);
                    if into_upper && !met {
                        upper.push(id);
                    }
                    if into_lower {
                        lower.push(id);
                    }
                }
                EventKind::Death => {
                    if !met {
                        upper.retain(|&j| j != id);
                    }
                    lower.retain(|&j| j != id);
                }
            }
            // Coupled chains that meet stay together.
            if !met && upper.len() == lower.len() {
                met = true;
            }
        }
        (met || upper.len() == lower.len()).then_some(lower)
    }
}

/// One exact draw, with the window schedule statistics.
pub fn dcftp<P: LocallyStable, R: Rng + ?Sized>(
    p: &P,
    cfg: &DcftpConfig,
    rng: &mut R,
) -> Result<(PointConfig, DcftpStats)> {
    let mut stats = DcftpStats::default();
    loop {
        let mut bw = Backward::start(p, cfg, rng)?;
        let mut t = 1.0;
        let ids = 'windows: {
            for _ in 0..=cfg.max_doublings {
                bw.extend(p, t, cfg, rng)?;
                if let Some(ids) = bw.coalesce(p) {
                    break 'windows ids;
                }
                t *= 2.0;
            }
            return Err(Error::ResourceExceeded(format!(
                "no coalescence after {} window doublings",
                cfg.max_doublings
            )));
        };
        stats.window = t;
        stats.max_dominating = stats.max_dominating.max(bw.max_alive);
        if ids.is_empty() && cfg.condition_nonempty {
            stats.empty_reruns += 1;
            if stats.empty_reruns > 1_000_000 {
                return Err(Error::ResourceExceeded("empty outputs kept recurring".into()));
            }
            continue;
        }
        let points = ids.into_iter().map(|id| bw.arena[id].x.clone()).collect();
        return Ok((PointConfig::new(points), stats));
    }
}

/// Exact draw from a Strauss process conditioned on being non-empty.
pub fn dcftp_strauss<R: Rng + ?Sized>(p: &StraussParams, rng: &mut R) -> Result<PointConfig> {
    dcftp(p, &DcftpConfig::default(), rng).map(|(c, _)| c)
}
