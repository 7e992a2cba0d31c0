//! Expectation Maximisation for mixtures of bivariate binomials.
//!
//! One step takes a mixture `ω` over class labels and one two-coin per
//! class. The channel `c(x) = bivbin[K](coin_x)` is inverted with prior `ω`.
//! The new mixture is the Jeffrey update, i.e. that inverse pushed along the
//! data distribution. The new coins come from the double dagger, which is the
//! inverse inverted again with the data as prior, projected back onto
//! bivariate binomials by moment recovery. When the moments are infeasible
//! the recovery keeps both heads probabilities and moves only `γ(1,1)`;
//! clamping every entry separately tends to zero both off-diagonal entries
//! together and trap the run on the diagonal.

use itertools::Itertools;
use log::debug;

use crate::binomials::{bivbin_direct, grid_cells, recover_projected, Coin};
use crate::channels::Channel;
use crate::error::{Error, Result};
use crate::kernel::{kl_divergence, Dist, Multiset, Point, SplitMix64};

/// Every predicted grid cell and every coin entry is kept at least this
/// large, so that daggers are defined on the whole grid.
pub const FLOOR: f64 = 1e-9;

/// Offset added to the uniform draws of a random initial state.
const INIT_OFFSET: f64 = 1e-3;

fn class(c: usize) -> Point {
    Point::scalar(c as i64)
}

/// Adds `FLOOR` to every listed point and renormalizes.
fn floor_over(dist: &Dist<Point, f64>, points: &[Point]) -> Result<Dist<Point, f64>> {
    Dist::from_weights(points.iter().map(|p| (p.clone(), dist.prob(p) + FLOOR)))
}

fn floor_coin(coin: &Coin<f64>) -> Result<Coin<f64>> {
    Coin::new(floor_over(coin.dist(), &Point::all_bits(2))?)
}

/// Mixture weights and one two-coin per class, for a fixed toss count.
#[derive(Debug, Clone, PartialEq)]
pub struct EMState {
    k: u64,
    mixture: Dist<Point, f64>,
    coins: Vec<Coin<f64>>,
}

impl EMState {
    /// `mixture` must live on the labels `0..coins.len()`.
    pub fn new(k: u64, mixture: Dist<Point, f64>, coins: Vec<Coin<f64>>) -> Result<Self> {
        if k == 0 {
            return Err(Error::OutOfRange("EM needs K ≥ 1".into()));
        }
        if coins.is_empty() {
            return Err(Error::OutOfRange("EM needs at least one class".into()));
        }
        let labels: Vec<Point> = (0..coins.len()).map(class).collect();
        if let Some(p) = mixture.support().find(|p| !labels.contains(p)) {
            return Err(Error::WrongSpace(format!("mixture label {p} has no coin")));
        }
        if let Some(c) = coins.iter().find(|c| c.dim() != 2) {
            return Err(Error::WrongSpace(format!("coin of dimension {}", c.dim())));
        }
        Ok(EMState { k, mixture, coins })
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn classes(&self) -> usize {
        self.coins.len()
    }

    pub fn mixture(&self) -> &Dist<Point, f64> {
        &self.mixture
    }

    /// Weight of class `c`.
    pub fn weight(&self, c: usize) -> f64 {
        self.mixture.prob(&class(c))
    }

    pub fn coins(&self) -> &[Coin<f64>] {
        &self.coins
    }

    /// The channel from class labels to floored bivariate binomial grids.
    pub fn channel(&self) -> Result<Channel<Point, Point, f64>> {
        let cells = grid_cells(self.k, 2);
        let mut rows = Vec::with_capacity(self.coins.len());
        for (c, coin) in self.coins.iter().enumerate() {
            let grid = bivbin_direct(self.k, coin)?;
            rows.push((class(c), floor_over(grid.dist(), &cells)?));
        }
        Ok(Channel::new(rows))
    }

    /// The predicted grid distribution `c ≫ ω`.
    pub fn predict(&self) -> Result<Dist<Point, f64>> {
        self.channel()?.push(&self.mixture)
    }

    /// `KL(data ‖ c ≫ ω)`.
    pub fn divergence(&self, data: &Dist<Point, f64>) -> Result<f64> {
        kl_divergence(data, &self.predict()?)
    }

    /// Relabels classes so that new class `i` is old class `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if !perm.iter().copied().sorted().eq(0..self.classes()) {
            return Err(Error::Invalid(format!("{perm:?} is not a permutation")));
        }
        let mixture = Dist::new(
            perm.iter()
                .enumerate()
                .map(|(i, &j)| (class(i), self.weight(j))),
        )?;
        let coins = perm.iter().map(|&j| self.coins[j].clone()).collect();
        EMState::new(self.k, mixture, coins)
    }
}

/// A random initial state: uniform draws from the seeded generator, offset
/// away from zero and normalized.
pub fn em_init(classes: usize, k: u64, seed: u64) -> Result<EMState> {
    if classes == 0 {
        return Err(Error::OutOfRange("EM needs at least one class".into()));
    }
    let mut rng = SplitMix64::new(seed);
    let mut draw = || rng.next_f64() + INIT_OFFSET;
    let mixture = Dist::from_weights((0..classes).map(|c| (class(c), draw())))?;
    let mut coins = Vec::with_capacity(classes);
    for _ in 0..classes {
        let d = Dist::from_weights(Point::all_bits(2).into_iter().map(|p| (p, draw())))?;
        coins.push(floor_coin(&Coin::new(d)?)?);
    }
    EMState::new(k, mixture, coins)
}

fn check_data(state: &EMState, data: &Dist<Point, f64>) -> Result<()> {
    let k = state.k as i64;
    if let Some(p) = data
        .support()
        .find(|p| p.dim() != 2 || p.coords().iter().any(|&c| c < 0 || c > k))
    {
        return Err(Error::SupportMismatch(format!(
            "data point {p} is outside the grid {{0,…,{k}}}²"
        )));
    }
    Ok(())
}

/// One Jeffrey E-step and double-dagger M-step.
pub fn em_step(state: &EMState, data: &Dist<Point, f64>) -> Result<EMState> {
    check_data(state, data)?;
    let chan = state.channel()?;
    let dagger = chan.dagger(&state.mixture)?;
    let jeffrey = dagger.push(data)?;
    let double = dagger.dagger(data)?;

    let labels: Vec<Point> = (0..state.classes()).map(class).collect();
    let mixture = floor_over(&jeffrey, &labels)?;
    let mut coins = Vec::with_capacity(state.classes());
    for (c, old) in state.coins.iter().enumerate() {
        let coin = match double.apply(&class(c)) {
            Some(posterior) => {
                let (coin, clamped) = recover_projected(posterior, state.k)?;
                if clamped {
                    debug!("class {c}: double dagger projected onto a bivariate binomial");
                }
                floor_coin(&coin)?
            }
            // A class with no posterior mass keeps its coin.
            None => old.clone(),
        };
        coins.push(coin);
    }
    EMState::new(state.k, mixture, coins)
}

/// Settings for [`em_run`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmOptions {
    pub classes: usize,
    pub k: u64,
    pub iters: usize,
    pub seed: u64,
    /// Stop once successive divergences differ by less than this.
    pub early_stop: Option<f64>,
}

impl EmOptions {
    pub fn new(classes: usize, k: u64, iters: usize, seed: u64) -> Self {
        EmOptions {
            classes,
            k,
            iters,
            seed,
            early_stop: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EMRecord {
    pub iteration: usize,
    pub kl: f64,
    pub state: EMState,
}

/// Divergence of the initial state, then of the state after each step.
#[derive(Debug, Clone, PartialEq)]
pub struct EMTrace {
    pub records: Vec<EMRecord>,
}

impl EMTrace {
    pub fn divergences(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.kl).collect()
    }

    pub fn final_state(&self) -> &EMState {
        &self.records.last().expect("trace is never empty").state
    }

    pub fn final_kl(&self) -> f64 {
        self.records.last().expect("trace is never empty").kl
    }
}

/// Runs EM from [`em_init`] on the empirical distribution of `data`.
pub fn em_run(data: &Multiset<Point>, opts: &EmOptions) -> Result<EMTrace> {
    let init = em_init(opts.classes, opts.k, opts.seed)?;
    em_run_from(init, data, opts.iters, opts.early_stop)
}

/// Runs EM from a given state.
pub fn em_run_from(
    init: EMState,
    data: &Multiset<Point>,
    iters: usize,
    early_stop: Option<f64>,
) -> Result<EMTrace> {
    if iters == 0 {
        return Err(Error::Invalid("EM needs at least one iteration".into()));
    }
    let data = data.flrn::<f64>()?;
    check_data(&init, &data)?;
    let kl = init.divergence(&data)?;
    let mut records = vec![EMRecord {
        iteration: 0,
        kl,
        state: init,
    }];
    for iteration in 1..=iters {
        let prev = records.last().expect("non-empty");
        let state = em_step(&prev.state, &data)?;
        let kl = state.divergence(&data)?;
        let settled = early_stop.is_some_and(|tol| (prev.kl - kl).abs() < tol);
        debug!("EM iteration {iteration}: KL {kl:.6}");
        records.push(EMRecord {
            iteration,
            kl,
            state,
        });
        if settled {
            break;
        }
    }
    Ok(EMTrace { records })
}

/// The class relabeling of `found` that best matches `truth`, minimizing the
/// largest entrywise coin difference. Returns `perm` with `found[perm[i]]`
/// matched to `truth[i]`, and that difference.
pub fn match_classes(found: &[Coin<f64>], truth: &[Coin<f64>]) -> Result<(Vec<usize>, f64)> {
    if found.len() != truth.len() || found.is_empty() {
        return Err(Error::Invalid(format!(
            "cannot match {} classes against {}",
            found.len(),
            truth.len()
        )));
    }
    let n = found.len();
    let best = (0..n)
        .permutations(n)
        .map(|perm| {
            let err = perm
                .iter()
                .enumerate()
                .map(|(i, &j)| found[j].linf_distance(&truth[i]))
                .fold(0.0, f64::max);
            (perm, err)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one permutation");
    Ok(best)
}
