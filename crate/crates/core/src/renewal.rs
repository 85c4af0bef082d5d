//! Renewal steps of the joint exploration process.
//!
//! At a good step with moving level `W`, let `g↓_i` and `g↑_i` be the
//! projections of walker `i` on the lines `y = W` and `y = W + κ`. The
//! renewal event asks that every `B⁺(g↓_i, κ+1) \ H` holds exactly one
//! Poisson point and that this point lies in `B⁺(g↑_i, 1)`. When it occurs
//! the exploration restarts from the lifted points `g↑_i`, with the big
//! semi-balls (clipped at `W + κ`) as initial history and the unique points
//! as extra points.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::explore::{ExplorationState, Move};
use crate::geom::{in_semiball, Point, Rect, SemiBall};
use crate::ppp::PointSource;

/// Default cap on the number of steps between two renewals.
pub const DEFAULT_STEP_CAP: u64 = 1_000_000;

/// One renewal step.
#[derive(Debug, Clone, PartialEq)]
pub struct RenewalRecord {
    /// Renewal index ℓ, starting at 1.
    pub ell: u64,
    /// Steps since the previous renewal.
    pub beta: u64,
    /// Total steps up to this renewal.
    pub varrho: u64,
    /// Moving level `W` at the renewal step.
    pub level: f64,
    /// Walker positions at the renewal step (before the restart).
    pub positions: Vec<Point>,
    /// Restart positions `g↑_i`, all at ordinate `level + κ`.
    pub u_new: Vec<Point>,
    /// The unique point found above each walker, one entry per walker
    /// (entries repeat when walkers share it).
    pub extra_new: Vec<Point>,
    /// Generators of the restart history, radius `κ + 1`.
    pub h0_balls: Vec<SemiBall>,
    /// Total length of the moves since the previous renewal.
    pub block_size: f64,
}

/// Evaluates the renewal event at the current state. Returns the unique
/// point attached to each walker when the event occurs.
pub fn check_renewal_event<S: PointSource + ?Sized>(
    state: &ExplorationState,
    source: &mut S,
) -> Result<Option<Vec<Point>>> {
    let level = state.move_level();
    let kappa = state.kappa() as f64;
    let history = state.history();
    let positions = state.positions();
    let mut found = Vec::with_capacity(positions.len());
    for p in positions {
        let low = Point::new(p.x, level);
        let high = Point::new(p.x, level + kappa);
        let big = SemiBall::new(low, kappa + 1.0);
        let small = SemiBall::new(high, 1.0);
        let mut big_count = 0usize;
        let mut small_count = 0usize;
        let mut unique = None;
        let rect = Rect::new(low.x - big.radius, low.x + big.radius, level, level + big.radius);
        source.for_each_in(&rect, &mut |q| {
            if in_semiball(q, &small) {
                small_count += 1;
            }
            // walker positions sit on the boundary of the history set
            if in_semiball(q, &big) && !history.contains(q) && !positions.contains(q) {
                big_count += 1;
                unique = Some(*q);
            }
        })?;
        match unique {
            Some(u) if big_count == 1 && small_count == 1 && in_semiball(&u, &small) => {
                found.push(u)
            }
            _ => return Ok(None),
        }
    }
    Ok(Some(found))
}

/// Exploration interleaved with renewal detection; each renewal restarts
/// the process from the regenerated starting data.
#[derive(Debug, Clone)]
pub struct RenewalChain {
    state: ExplorationState,
    ell: u64,
    varrho: u64,
    step_cap: u64,
    starts: Vec<Point>,
}

impl RenewalChain {
    pub fn new(starts: Vec<Point>, kappa: u32) -> Result<Self> {
        let state = ExplorationState::new(starts.clone(), kappa)?;
        Ok(RenewalChain::from_state(state, starts))
    }

    fn from_state(state: ExplorationState, starts: Vec<Point>) -> Self {
        RenewalChain {
            state,
            ell: 0,
            varrho: 0,
            step_cap: DEFAULT_STEP_CAP,
            starts,
        }
    }

    pub fn with_step_cap(mut self, cap: u64) -> Self {
        self.step_cap = cap;
        self
    }

    pub fn state(&self) -> &ExplorationState {
        &self.state
    }

    /// Starting points of the current regenerated process.
    pub fn current_starts(&self) -> &[Point] {
        &self.starts
    }

    pub fn renewals(&self) -> u64 {
        self.ell
    }

    /// Runs the current regenerated process to its first renewal step.
    pub fn next_renewal<S: PointSource + ?Sized>(&mut self, source: &mut S) -> Result<RenewalRecord> {
        self.next_renewal_observed(source, |_, _| {})
    }

    /// As [`RenewalChain::next_renewal`], calling `observe` after every move.
    pub fn next_renewal_observed<S, F>(&mut self, source: &mut S, mut observe: F) -> Result<RenewalRecord>
    where
        S: PointSource + ?Sized,
        F: FnMut(&ExplorationState, &Move),
    {
        let kappa = self.state.kappa();
        let mut block = 0.0;
        loop {
            if self.state.step_count() >= self.step_cap {
                return Err(Error::RenewalTimeout {
                    steps: self.state.step_count(),
                });
            }
            let mv = self.state.step(source)?;
            block += mv.displacement();
            observe(&self.state, &mv);
            if !self.state.is_good_step() {
                continue;
            }
            self.state.mark_good();
            let Some(extra) = check_renewal_event(&self.state, source)? else {
                continue;
            };
            let level = self.state.move_level();
            let kf = kappa as f64;
            let positions = self.state.positions().to_vec();
            let u_new: Vec<Point> = positions.iter().map(|p| Point::new(p.x, level + kf)).collect();
            let mut h0_balls: Vec<SemiBall> = Vec::with_capacity(positions.len());
            for p in &positions {
                let b = SemiBall::new(Point::new(p.x, level), kf + 1.0);
                if !h0_balls.contains(&b) {
                    h0_balls.push(b);
                }
            }
            let mut restart_extra: Vec<Point> = Vec::with_capacity(extra.len());
            for u in &extra {
                if !restart_extra.contains(u) {
                    restart_extra.push(*u);
                }
            }
            let beta = self.state.step_count();
            self.ell += 1;
            self.varrho += beta;
            self.state = ExplorationState::with_initial(u_new.clone(), &h0_balls, restart_extra, kappa)?;
            self.starts = u_new.clone();
            return Ok(RenewalRecord {
                ell: self.ell,
                beta,
                varrho: self.varrho,
                level,
                positions,
                u_new,
                extra_new: extra,
                h0_balls,
                block_size: block,
            });
        }
    }
}

/// The first `count` renewal records of the chain started at `starts`.
pub fn renewal_sequence<S: PointSource + ?Sized>(
    starts: &[Point],
    source: &mut S,
    count: usize,
    kappa: u32,
) -> Result<Vec<RenewalRecord>> {
    if count == 0 {
        return Err(Error::InvalidArgument("renewal count must be at least 1"));
    }
    let mut chain = RenewalChain::new(starts.to_vec(), kappa)?;
    (0..count).map(|_| chain.next_renewal(source)).collect()
}

/// Runs to the first renewal from `state` and returns the record together
/// with the restarted state.
pub fn run_to_renewal<S: PointSource + ?Sized>(
    state: ExplorationState,
    source: &mut S,
    step_cap: u64,
) -> Result<(RenewalRecord, ExplorationState)> {
    let starts = state.positions().to_vec();
    let mut chain = RenewalChain::from_state(state, starts).with_step_cap(step_cap);
    let rec = chain.next_renewal(source)?;
    Ok((rec, chain.state))
}

/// Number of steps `n` with `W_n ≤ t < W_{n+1}`, starting from `state`.
pub fn steps_to_level<S: PointSource + ?Sized>(
    mut state: ExplorationState,
    source: &mut S,
    t: f64,
) -> Result<u64> {
    if t < state.move_level() {
        return Err(Error::Domain {
            what: "target level below the initial moving level",
            value: t,
        });
    }
    let mut n = 0;
    loop {
        state.step(source)?;
        if state.move_level() > t {
            return Ok(n);
        }
        n += 1;
    }
}
