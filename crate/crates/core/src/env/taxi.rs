//! Taxi on the classic 5×5 map, with traffic that randomly blocks cells.
//!
//! Controllable state `(x, y, ψ, d)`: taxi row and column, passenger location
//! (0..4 at a landmark, 4 in the taxi) and destination landmark. Exogenous
//! state: one congestion bit per traffic cell, each redrawn independently
//! every step. Moving into a congested cell leaves the taxi in place. After a
//! delivery a new passenger and destination are drawn uniformly.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use super::{check_action, Environment, Step};
use crate::error::{invalid, Result};
use crate::model::{
    ControlModel, ControllableKernel, ExogenousKernel, FactoredModel, FactoredState,
    InitialDistribution, PerStep, RewardBounds, RewardTable, SparseRows, StateFactorization,
};

pub const SIZE: usize = 5;
pub const N_ACTIONS: usize = 6;
pub const SOUTH: usize = 0;
pub const NORTH: usize = 1;
pub const EAST: usize = 2;
pub const WEST: usize = 3;
pub const PICKUP: usize = 4;
pub const DROPOFF: usize = 5;
pub const IN_TAXI: usize = 4;
/// R, G, Y, B as `(row, col)`.
pub const LANDMARKS: [(usize, usize); 4] = [(0, 0), (0, 4), (4, 0), (4, 3)];

pub const DELIVERY_REWARD: f64 = 20.0;
pub const ILLEGAL_REWARD: f64 = -10.0;
pub const STEP_REWARD: f64 = -1.0;

const N_CONTROLLABLE: usize = SIZE * SIZE * 5 * 4;

/// Walls: `(row, col)` cells whose east side is blocked.
const EAST_WALLS: [(usize, usize); 6] = [(0, 1), (1, 1), (3, 0), (4, 0), (3, 2), (4, 2)];

#[derive(Debug, Clone, PartialEq)]
pub struct TaxiSpec {
    /// `(row, col)` cells subject to congestion.
    pub traffic_cells: Vec<(usize, usize)>,
    pub congestion: f64,
    pub horizon: usize,
}

impl Default for TaxiSpec {
    fn default() -> Self {
        Self {
            traffic_cells: vec![(2, 1), (2, 2), (2, 3)],
            congestion: 0.3,
            horizon: 200,
        }
    }
}

/// Decoded controllable state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaxiState {
    pub row: usize,
    pub col: usize,
    pub passenger: usize,
    pub destination: usize,
}

impl TaxiState {
    pub fn encode(&self) -> usize {
        ((self.row * SIZE + self.col) * 5 + self.passenger) * 4 + self.destination
    }

    pub fn decode(c: usize) -> Self {
        Self {
            destination: c % 4,
            passenger: (c / 4) % 5,
            col: (c / 20) % SIZE,
            row: c / 100,
        }
    }
}

/// The twelve `(passenger, destination)` pairs with distinct landmarks.
fn fresh_pairs() -> impl Iterator<Item = (usize, usize)> {
    (0..4).flat_map(|p| (0..4).filter(move |&d| d != p).map(move |d| (p, d)))
}

/// Result of an action before any random passenger draw.
enum Outcome {
    Moved(TaxiState),
    /// Delivered at the current cell; a new passenger pair is drawn.
    Delivered { row: usize, col: usize },
}

#[derive(Debug, Clone)]
pub struct Taxi {
    spec: TaxiSpec,
    control: ControlModel,
    exogenous: ExogenousKernel,
    initial: InitialDistribution,
}

impl Taxi {
    pub fn new(spec: TaxiSpec) -> Result<Self> {
        if spec.traffic_cells.len() > 16 {
            return Err(invalid("at most 16 traffic cells are supported"));
        }
        for &(r, c) in &spec.traffic_cells {
            if r >= SIZE || c >= SIZE {
                return Err(invalid("traffic cell outside the grid"));
            }
        }
        if !(0.0..=1.0).contains(&spec.congestion) {
            return Err(invalid("congestion probability must lie in [0, 1]"));
        }
        if spec.horizon == 0 {
            return Err(invalid("horizon must be positive"));
        }
        let n_exo = 1usize << spec.traffic_cells.len();
        let fact = StateFactorization::new(N_CONTROLLABLE, n_exo)?;

        let exo_row: Vec<f64> = (0..n_exo).map(|bits| traffic_prob(&spec, bits)).collect();
        let mut matrix = Vec::with_capacity(n_exo * n_exo);
        for _ in 0..n_exo {
            matrix.extend_from_slice(&exo_row);
        }
        let exogenous = ExogenousKernel::stationary(n_exo, matrix)?;

        let mut rows = SparseRows::with_capacity(fact.n_states() * N_ACTIONS, fact.n_states() * N_ACTIONS);
        let mut rewards = Vec::with_capacity(fact.n_states() * N_ACTIONS);
        let pairs: Vec<(usize, usize)> = fresh_pairs().collect();
        let w = 1.0 / pairs.len() as f64;
        let mut buf = Vec::with_capacity(pairs.len());
        for s in 0..fact.n_states() {
            let st = fact.decode(s);
            let taxi = TaxiState::decode(st.controllable);
            for a in 0..N_ACTIONS {
                let (outcome, r) = act(&spec, taxi, st.exogenous, a);
                rewards.push(r);
                match outcome {
                    Outcome::Moved(next) => rows.push_point(next.encode()),
                    Outcome::Delivered { row, col } => {
                        buf.clear();
                        buf.extend(pairs.iter().map(|&(p, d)| {
                            let next = TaxiState {
                                row,
                                col,
                                passenger: p,
                                destination: d,
                            };
                            (next.encode(), w)
                        }));
                        rows.push_row(&buf);
                    }
                }
            }
        }
        let kernel = ControllableKernel::new(fact, N_ACTIONS, true, PerStep::Stationary(rows))?;
        let reward = RewardTable::new(fact.n_states(), N_ACTIONS, PerStep::Stationary(rewards))?;
        let bounds = RewardBounds {
            min: ILLEGAL_REWARD,
            max: DELIVERY_REWARD,
        };
        let control = ControlModel::new(fact, N_ACTIONS, spec.horizon, kernel, reward, bounds, None)?;

        let mut init = Vec::new();
        let cell_w = 1.0 / (SIZE * SIZE) as f64 * w;
        for row in 0..SIZE {
            for col in 0..SIZE {
                for &(p, d) in &pairs {
                    let c = TaxiState {
                        row,
                        col,
                        passenger: p,
                        destination: d,
                    }
                    .encode();
                    for (bits, &pe) in exo_row.iter().enumerate() {
                        if pe > 0.0 {
                            init.push((fact.encode(FactoredState::new(c, bits)), cell_w * pe));
                        }
                    }
                }
            }
        }
        let initial = InitialDistribution::new(fact.n_states(), init)?;
        Ok(Self {
            spec,
            control,
            exogenous,
            initial,
        })
    }

    pub fn spec(&self) -> &TaxiSpec {
        &self.spec
    }

    fn sample_traffic(&self, rng: &mut dyn RngCore) -> usize {
        let mut bits = 0;
        for i in 0..self.spec.traffic_cells.len() {
            if rng.random::<f64>() < self.spec.congestion {
                bits |= 1 << i;
            }
        }
        bits
    }
}

fn traffic_prob(spec: &TaxiSpec, bits: usize) -> f64 {
    let p = spec.congestion;
    (0..spec.traffic_cells.len())
        .map(|i| if bits >> i & 1 == 1 { p } else { 1.0 - p })
        .product()
}

fn blocked_by_wall(row: usize, col: usize, a: usize) -> bool {
    match a {
        EAST => EAST_WALLS.contains(&(row, col)),
        WEST => col > 0 && EAST_WALLS.contains(&(row, col - 1)),
        _ => false,
    }
}

fn congested(spec: &TaxiSpec, traffic: usize, row: usize, col: usize) -> bool {
    spec.traffic_cells
        .iter()
        .position(|&cell| cell == (row, col))
        .is_some_and(|i| traffic >> i & 1 == 1)
}

fn act(spec: &TaxiSpec, t: TaxiState, traffic: usize, a: usize) -> (Outcome, f64) {
    let at = |loc: usize| LANDMARKS[loc] == (t.row, t.col);
    match a {
        SOUTH | NORTH | EAST | WEST => {
            let (row, col) = match a {
                SOUTH => ((t.row + 1).min(SIZE - 1), t.col),
                NORTH => (t.row.saturating_sub(1), t.col),
                EAST if !blocked_by_wall(t.row, t.col, a) => (t.row, (t.col + 1).min(SIZE - 1)),
                WEST if !blocked_by_wall(t.row, t.col, a) => (t.row, t.col.saturating_sub(1)),
                _ => (t.row, t.col),
            };
            let next = if congested(spec, traffic, row, col) {
                t
            } else {
                TaxiState { row, col, ..t }
            };
            (Outcome::Moved(next), STEP_REWARD)
        }
        PICKUP => {
            if t.passenger < IN_TAXI && at(t.passenger) {
                let next = TaxiState {
                    passenger: IN_TAXI,
                    ..t
                };
                (Outcome::Moved(next), STEP_REWARD)
            } else {
                (Outcome::Moved(t), ILLEGAL_REWARD)
            }
        }
        _ => {
            if t.passenger != IN_TAXI {
                return (Outcome::Moved(t), ILLEGAL_REWARD);
            }
            if at(t.destination) {
                return (
                    Outcome::Delivered {
                        row: t.row,
                        col: t.col,
                    },
                    DELIVERY_REWARD,
                );
            }
            match (0..4).find(|&l| at(l)) {
                Some(l) => (Outcome::Moved(TaxiState { passenger: l, ..t }), STEP_REWARD),
                None => (Outcome::Moved(t), ILLEGAL_REWARD),
            }
        }
    }
}

impl Environment for Taxi {
    fn name(&self) -> &str {
        "taxi"
    }

    fn control(&self) -> &ControlModel {
        &self.control
    }

    fn reset(&self, rng: &mut dyn RngCore) -> FactoredState {
        let cell = rng.random_range(0..SIZE * SIZE);
        let pairs: Vec<(usize, usize)> = fresh_pairs().collect();
        let (p, d) = pairs[rng.random_range(0..pairs.len())];
        let c = TaxiState {
            row: cell / SIZE,
            col: cell % SIZE,
            passenger: p,
            destination: d,
        };
        FactoredState::new(c.encode(), self.sample_traffic(rng))
    }

    fn step(&self, h: usize, state: FactoredState, a: usize, rng: &mut dyn RngCore) -> Result<Step> {
        check_action(&self.control, h, state, a)?;
        let taxi = TaxiState::decode(state.controllable);
        let (outcome, reward) = act(&self.spec, taxi, state.exogenous, a);
        if h + 1 >= self.spec.horizon {
            return Ok(Step { reward, next: None });
        }
        let next_c = match outcome {
            Outcome::Moved(t) => t,
            Outcome::Delivered { row, col } => {
                let pairs: Vec<(usize, usize)> = fresh_pairs().collect();
                let (p, d) = pairs[rng.random_range(0..pairs.len())];
                TaxiState {
                    row,
                    col,
                    passenger: p,
                    destination: d,
                }
            }
        };
        let next = FactoredState::new(next_c.encode(), self.sample_traffic(rng));
        Ok(Step {
            reward,
            next: Some(next),
        })
    }

    fn export_model(&self) -> Option<FactoredModel> {
        FactoredModel::new(self.control.clone(), self.exogenous.clone(), self.initial.clone()).ok()
    }

    fn sample_exogenous(&self, _h: usize, _exo: usize, rng: &mut dyn RngCore) -> usize {
        self.sample_traffic(rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng() -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(7)
    }

    fn st(row: usize, col: usize, passenger: usize, destination: usize) -> usize {
        TaxiState {
            row,
            col,
            passenger,
            destination,
        }
        .encode()
    }

    #[test]
    fn sizes() {
        let t = Taxi::new(TaxiSpec::default()).unwrap();
        let f = t.control().factorization();
        assert_eq!(f.n_controllable(), 500);
        assert_eq!(f.n_exogenous(), 8);
    }

    #[test]
    fn encode_roundtrip() {
        for c in 0..N_CONTROLLABLE {
            assert_eq!(TaxiState::decode(c).encode(), c);
        }
    }

    #[test]
    fn blocked_move_stays_put() {
        let t = Taxi::new(TaxiSpec::default()).unwrap();
        let mut rng = rng();
        // (1,1) moving south into (2,1), which is traffic cell 0
        let s = FactoredState::new(st(1, 1, 0, 1), 0b001);
        let out = t.step(0, s, SOUTH, &mut rng).unwrap();
        assert_eq!(out.reward, -1.0);
        assert_eq!(out.next.unwrap().controllable, s.controllable);
        let clear = FactoredState::new(st(1, 1, 0, 1), 0b110);
        let out = t.step(0, clear, SOUTH, &mut rng).unwrap();
        assert_eq!(out.next.unwrap().controllable, st(2, 1, 0, 1));
    }

    #[test]
    fn walls() {
        let t = Taxi::new(TaxiSpec::default()).unwrap();
        let mut rng = rng();
        let s = FactoredState::new(st(0, 1, 0, 1), 0);
        let out = t.step(0, s, EAST, &mut rng).unwrap();
        assert_eq!(out.next.unwrap().controllable, s.controllable);
        let s = FactoredState::new(st(0, 2, 0, 1), 0);
        let out = t.step(0, s, WEST, &mut rng).unwrap();
        assert_eq!(out.next.unwrap().controllable, s.controllable);
    }

    #[test]
    fn delivery_and_bad_actions() {
        let t = Taxi::new(TaxiSpec::default()).unwrap();
        let mut rng = rng();
        // at G with passenger aboard bound for G
        let s = FactoredState::new(st(0, 4, IN_TAXI, 1), 0);
        let out = t.step(0, s, DROPOFF, &mut rng).unwrap();
        assert_eq!(out.reward, 20.0);
        let next = TaxiState::decode(out.next.unwrap().controllable);
        assert_eq!((next.row, next.col), (0, 4));
        assert!(next.passenger < IN_TAXI && next.passenger != next.destination);

        let s = FactoredState::new(st(2, 2, 0, 1), 0);
        assert_eq!(t.step(0, s, PICKUP, &mut rng).unwrap().reward, -10.0);
        assert_eq!(t.step(0, s, DROPOFF, &mut rng).unwrap().reward, -10.0);
        let s = FactoredState::new(st(0, 0, 0, 1), 0);
        let out = t.step(0, s, PICKUP, &mut rng).unwrap();
        assert_eq!(out.reward, -1.0);
        assert_eq!(TaxiState::decode(out.next.unwrap().controllable).passenger, IN_TAXI);
    }

    #[test]
    fn zero_congestion_is_point_mass() {
        let spec = TaxiSpec {
            congestion: 0.0,
            ..TaxiSpec::default()
        };
        let t = Taxi::new(spec).unwrap();
        let m = t.export_model().unwrap();
        for e in 0..8 {
            let row = m.exogenous.row(0, e);
            assert_eq!(row[0], 1.0);
            assert!(row[1..].iter().all(|&p| p == 0.0));
        }
    }

    #[test]
    fn table_rewards_match_simulator() {
        let t = Taxi::new(TaxiSpec::default()).unwrap();
        let f = t.control().factorization();
        let mut rng = rng();
        for s in (0..f.n_states()).step_by(7) {
            let state = f.decode(s);
            for a in 0..N_ACTIONS {
                let r = t.step(0, state, a, &mut rng).unwrap().reward;
                assert_eq!(r, t.control().reward(0, state, a));
            }
        }
    }

    #[test]
    fn rejects_bad_spec() {
        let spec = TaxiSpec {
            traffic_cells: vec![(5, 0)],
            ..TaxiSpec::default()
        };
        assert!(Taxi::new(spec).is_err());
    }
}
