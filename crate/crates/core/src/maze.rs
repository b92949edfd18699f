//! Grid-world maze and the reward-gated learning loop over a place x action
//! synapse array.

use std::collections::HashSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::DeviceParams;
use crate::neuro::{BooleanSynapse, NeuroError, PlasticSynapse, SynapseProtocol, ThreeFactorSynapse};

#[derive(Debug, Error, PartialEq)]
pub enum MazeError {
    #[error("invalid maze: {0}")]
    InvalidMaze(String),
    #[error("n_trials must be at least 1")]
    NoTrials,
    #[error("epsilon {0} outside [0, 1]")]
    BadEpsilon(f64),
    #[error(transparent)]
    Neuro(#[from] NeuroError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Cell { row, col }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    N,
    E,
    S,
    W,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::N, Action::E, Action::S, Action::W];

    pub fn index(self) -> usize {
        self as usize
    }

    fn delta(self) -> (isize, isize) {
        match self {
            Action::N => (-1, 0),
            Action::E => (0, 1),
            Action::S => (1, 0),
            Action::W => (0, -1),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Move,
    Wall,
    Trap,
    Cheese,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MazeSpec {
    pub rows: usize,
    pub cols: usize,
    pub start: Cell,
    pub cheese: Cell,
    pub traps: Vec<Cell>,
    pub max_steps_per_trial: usize,
}

impl Default for MazeSpec {
    /// 3x3, start at the center, cheese in the NE corner, traps in the others.
    fn default() -> Self {
        MazeSpec {
            rows: 3,
            cols: 3,
            start: Cell::new(1, 1),
            cheese: Cell::new(0, 2),
            traps: vec![Cell::new(0, 0), Cell::new(2, 0), Cell::new(2, 2)],
            max_steps_per_trial: 30,
        }
    }
}

impl MazeSpec {
    pub fn validate(&self) -> Result<(), MazeError> {
        let bad = |m: String| Err(MazeError::InvalidMaze(m));
        if self.rows == 0 || self.cols == 0 {
            return bad("empty grid".into());
        }
        if self.max_steps_per_trial == 0 {
            return bad("max_steps_per_trial must be >= 1".into());
        }
        for (what, c) in [("start", self.start), ("cheese", self.cheese)]
            .into_iter()
            .chain(self.traps.iter().map(|&t| ("trap", t)))
        {
            if !self.contains(c) {
                return bad(format!("{what} {c} out of bounds"));
            }
        }
        if self.start == self.cheese || self.traps.contains(&self.start) {
            return bad("start must not be the cheese or a trap".into());
        }
        if self.traps.contains(&self.cheese) {
            return bad("cheese must not be a trap".into());
        }
        Ok(())
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.row < self.rows && c.col < self.cols
    }

    pub fn n_places(&self) -> usize {
        self.rows * self.cols
    }

    pub fn place_index(&self, c: Cell) -> usize {
        c.row * self.cols + c.col
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.rows).flat_map(move |r| (0..self.cols).map(move |c| Cell::new(r, c)))
    }

    fn neighbor(&self, c: Cell, a: Action) -> Option<Cell> {
        let (dr, dc) = a.delta();
        let r = c.row.checked_add_signed(dr)?;
        let col = c.col.checked_add_signed(dc)?;
        let next = Cell::new(r, col);
        self.contains(next).then_some(next)
    }

    /// Actions that stay on the grid from `c`.
    pub fn on_grid_actions(&self, c: Cell) -> Vec<Action> {
        Action::ALL.into_iter().filter(|&a| self.neighbor(c, a).is_some()).collect()
    }
}

/// One move: off-grid is a wall (stay), traps send the agent back to start.
pub fn env_step(maze: &MazeSpec, place: Cell, action: Action) -> (Cell, Outcome) {
    match maze.neighbor(place, action) {
        None => (place, Outcome::Wall),
        Some(c) if maze.traps.contains(&c) => (maze.start, Outcome::Trap),
        Some(c) if c == maze.cheese => (c, Outcome::Cheese),
        Some(c) => (c, Outcome::Move),
    }
}

/// Epsilon-greedy choice over all four actions, uniform among tied maxima.
pub fn select_action<R: Rng + ?Sized>(qrow: &[f64; 4], rng: &mut R, epsilon: f64) -> Action {
    if rng.random::<f64>() < epsilon {
        return Action::ALL[rng.random_range(0..4)];
    }
    let max = qrow.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<Action> = Action::ALL.into_iter().filter(|a| qrow[a.index()] == max).collect();
    ties[rng.random_range(0..ties.len())]
}

/// Place x action array of synapses.
#[derive(Debug, Clone)]
pub struct SynapseArray<S> {
    cols: usize,
    synapses: Vec<S>,
}

impl<S: PlasticSynapse> SynapseArray<S> {
    pub fn from_fn(maze: &MazeSpec, mut make: impl FnMut() -> S) -> Self {
        SynapseArray { cols: maze.cols, synapses: (0..maze.n_places() * 4).map(|_| make()).collect() }
    }

    fn idx(&self, c: Cell, a: Action) -> usize {
        (c.row * self.cols + c.col) * 4 + a.index()
    }

    pub fn get(&self, c: Cell, a: Action) -> &S {
        &self.synapses[self.idx(c, a)]
    }

    pub fn get_mut(&mut self, c: Cell, a: Action) -> &mut S {
        let i = self.idx(c, a);
        &mut self.synapses[i]
    }

    pub fn row(&self, c: Cell) -> [f64; 4] {
        Action::ALL.map(|a| self.get(c, a).conductance())
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut S> {
        self.synapses.iter_mut()
    }

    pub fn potentiated(&self) -> Vec<(Cell, Action)> {
        self.synapses
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_potentiated())
            .map(|(i, _)| (Cell::new(i / 4 / self.cols, i / 4 % self.cols), Action::ALL[i % 4]))
            .collect()
    }

    pub fn qtable(&self, maze: &MazeSpec) -> QTable {
        QTable {
            rows: maze.rows,
            cols: maze.cols,
            conductance: maze.cells().map(|c| self.row(c)).collect(),
        }
    }
}

impl SynapseArray<ThreeFactorSynapse> {
    pub fn devices(maze: &MazeSpec, params: &DeviceParams, protocol: &SynapseProtocol) -> Result<Self, MazeError> {
        let proto = ThreeFactorSynapse::new(params.clone(), protocol.clone())?;
        Ok(Self::from_fn(maze, || proto.clone()))
    }
}

impl SynapseArray<BooleanSynapse> {
    pub fn boolean(maze: &MazeSpec, g_low: f64, g_high: f64) -> Self {
        Self::from_fn(maze, || BooleanSynapse::new(g_low, g_high))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryStep {
    pub place: Cell,
    pub action: Action,
    pub outcome: Outcome,
}

pub type Trajectory = Vec<TrajectoryStep>;

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trajectory: Trajectory,
    pub rewarded: bool,
    /// Synapses switched by this trial's reward.
    pub potentiated: Vec<(Cell, Action)>,
}

impl TrialResult {
    pub fn outcome(&self) -> Outcome {
        self.trajectory.last().map_or(Outcome::Move, |s| s.outcome)
    }
}

/// One trial from the start cell. Each step flags the chosen synapse, ticks
/// the others and holds the array at bias for one step. Cheese broadcasts the
/// reward to every synapse; a trap or the step limit ends the trial unrewarded.
///
/// `policy_rng` drives action choice, `device_rng` drives device stochastics,
/// so the action sequence is independent of the synapse implementation.
pub fn run_trial<S: PlasticSynapse, R1: Rng + ?Sized, R2: Rng + ?Sized>(
    maze: &MazeSpec,
    synapses: &mut SynapseArray<S>,
    policy_rng: &mut R1,
    device_rng: &mut R2,
    epsilon: f64,
) -> Result<TrialResult, MazeError> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(MazeError::BadEpsilon(epsilon));
    }
    for s in synapses.iter_mut() {
        s.clear_eligibility();
    }
    let mut place = maze.start;
    let mut trajectory = Vec::new();
    for _ in 0..maze.max_steps_per_trial {
        let action = select_action(&synapses.row(place), policy_rng, epsilon);
        let chosen = synapses.idx(place, action);
        for (i, s) in synapses.synapses.iter_mut().enumerate() {
            if i == chosen {
                s.raise_eligibility();
            } else {
                s.tick_eligibility();
            }
            s.hold(device_rng);
        }
        let (next, outcome) = env_step(maze, place, action);
        trajectory.push(TrajectoryStep { place, action, outcome });
        place = next;
        match outcome {
            Outcome::Cheese => {
                let mut potentiated = Vec::new();
                for (i, s) in synapses.synapses.iter_mut().enumerate() {
                    if s.apply_reward(device_rng) {
                        potentiated.push((i / 4, Action::ALL[i % 4]));
                    }
                }
                let potentiated = potentiated
                    .into_iter()
                    .map(|(p, a)| (Cell::new(p / maze.cols, p % maze.cols), a))
                    .collect();
                return Ok(TrialResult { trajectory, rewarded: true, potentiated });
            }
            Outcome::Trap => break,
            Outcome::Move | Outcome::Wall => {}
        }
    }
    Ok(TrialResult { trajectory, rewarded: false, potentiated: vec![] })
}

/// Linear decay from `start` to `end` over the first `decay_fraction` of trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_fraction: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        EpsilonSchedule { start: 1.0, end: 0.1, decay_fraction: 0.5 }
    }
}

impl EpsilonSchedule {
    pub fn at(&self, trial: usize, n_trials: usize) -> f64 {
        let span = self.decay_fraction * n_trials as f64;
        let frac = if span > 0.0 { (trial as f64 / span).min(1.0) } else { 1.0 };
        self.start + (self.end - self.start) * frac
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialLog {
    pub trial: usize,
    pub steps: usize,
    pub outcome: Outcome,
    pub epsilon: f64,
    pub potentiated: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    pub qtable: QTable,
    pub trials: Vec<TrialLog>,
    pub results: Vec<TrialResult>,
}

pub fn train<S: PlasticSynapse, R1: Rng + ?Sized, R2: Rng + ?Sized>(
    maze: &MazeSpec,
    synapses: &mut SynapseArray<S>,
    n_trials: usize,
    policy_rng: &mut R1,
    device_rng: &mut R2,
    schedule: &EpsilonSchedule,
) -> Result<TrainingReport, MazeError> {
    maze.validate()?;
    if n_trials == 0 {
        return Err(MazeError::NoTrials);
    }
    let mut trials = Vec::with_capacity(n_trials);
    let mut results = Vec::with_capacity(n_trials);
    for t in 0..n_trials {
        let epsilon = schedule.at(t, n_trials);
        let r = run_trial(maze, synapses, policy_rng, device_rng, epsilon)?;
        trials.push(TrialLog {
            trial: t,
            steps: r.trajectory.len(),
            outcome: r.outcome(),
            epsilon,
            potentiated: r.potentiated.len(),
        });
        results.push(r);
    }
    Ok(TrainingReport { qtable: synapses.qtable(maze), trials, results })
}

/// Conductance (S) per (place, action), places in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    pub rows: usize,
    pub cols: usize,
    pub conductance: Vec<[f64; 4]>,
}

impl QTable {
    pub fn uniform(maze: &MazeSpec, g: f64) -> Self {
        QTable { rows: maze.rows, cols: maze.cols, conductance: vec![[g; 4]; maze.n_places()] }
    }

    pub fn row(&self, c: Cell) -> [f64; 4] {
        self.conductance[c.row * self.cols + c.col]
    }

    pub fn set(&mut self, c: Cell, a: Action, g: f64) {
        self.conductance[c.row * self.cols + c.col][a.index()] = g;
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["place_row", "place_col", "action", "conductance_S"])?;
        for (i, row) in self.conductance.iter().enumerate() {
            for a in Action::ALL {
                w.write_record([
                    (i / self.cols).to_string(),
                    (i % self.cols).to_string(),
                    a.to_string(),
                    format!("{:e}", row[a.index()]),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Strongest on-grid action, ties to the first in N, E, S, W order.
/// `None` when every on-grid action has the same conductance.
pub fn greedy_action(qtable: &QTable, maze: &MazeSpec, place: Cell) -> Option<Action> {
    let row = qtable.row(place);
    let actions = maze.on_grid_actions(place);
    let first = *actions.first()?;
    let best = actions.iter().copied().fold(first, |b, a| if row[a.index()] > row[b.index()] { a } else { b });
    let flat = actions.iter().all(|a| row[a.index()] == row[first.index()]);
    (!flat || actions.len() == 1).then_some(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PathEnd {
    Cheese,
    Trap,
    /// A (place, action) pair repeated.
    Loop,
    /// No preferred action at the current place.
    Undecided,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyPath {
    pub trajectory: Trajectory,
    pub end: PathEnd,
}

impl GreedyPath {
    pub fn reaches_cheese(&self) -> bool {
        self.end == PathEnd::Cheese
    }
}

/// Follows [`greedy_action`] from the start cell.
pub fn greedy_path(qtable: &QTable, maze: &MazeSpec) -> GreedyPath {
    let mut place = maze.start;
    let mut seen = HashSet::new();
    let mut trajectory = Vec::new();
    loop {
        let Some(action) = greedy_action(qtable, maze, place) else {
            return GreedyPath { trajectory, end: PathEnd::Undecided };
        };
        if !seen.insert((place, action)) {
            return GreedyPath { trajectory, end: PathEnd::Loop };
        }
        let (next, outcome) = env_step(maze, place, action);
        trajectory.push(TrajectoryStep { place, action, outcome });
        match outcome {
            Outcome::Cheese => return GreedyPath { trajectory, end: PathEnd::Cheese },
            Outcome::Trap => return GreedyPath { trajectory, end: PathEnd::Trap },
            _ => place = next,
        }
    }
}

pub fn write_trial_log<W: std::io::Write>(trials: &[TrialLog], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["trial", "steps", "outcome", "epsilon", "potentiated"])?;
    for t in trials {
        w.write_record([
            t.trial.to_string(),
            t.steps.to_string(),
            format!("{:?}", t.outcome),
            format!("{:e}", t.epsilon),
            t.potentiated.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Success rate over a trailing window of `window` trials.
pub fn write_success_curve<W: std::io::Write>(trials: &[TrialLog], window: usize, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["trial", "rewarded", "success_rate"])?;
    let hits: Vec<bool> = trials.iter().map(|t| t.outcome == Outcome::Cheese).collect();
    for (i, t) in trials.iter().enumerate() {
        let lo = (i + 1).saturating_sub(window.max(1));
        let slice = &hits[lo..=i];
        let rate = slice.iter().filter(|&&h| h).count() as f64 / slice.len() as f64;
        w.write_record([t.trial.to_string(), u8::from(hits[i]).to_string(), format!("{rate:e}")])?;
    }
    w.flush()?;
    Ok(())
}
