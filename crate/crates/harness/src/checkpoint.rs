//! Versioned binary checkpoints for count tables, Q tables and learners.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! offset  size  field
//! 0       8     magic  b"PCMDPCKP"
//! 8       2     format version (currently 1)
//! 10      2     payload kind (see `Kind`)
//! 12      ..    payload
//! ```
//!
//! Payloads:
//!
//! - exogenous statistics: `n_exo, horizon, episodes` (u64), `n_exo·horizon`
//!   visit counts (u64), then per transition row a length (u64) followed by
//!   `(successor u32, count u64)` pairs.
//! - full statistics: `n_actions, steps` (u64), then per step a pair count
//!   (u64) and per pair `key = s·A + a, visits, n_successors` (u64) followed by
//!   `(successor u32, count u64)` pairs.
//! - Q tables: `n_controllable, n_exogenous, n_actions, horizon` (u64),
//!   `horizon` default values (f64), a block count (u64), then per block
//!   `h, exo` (u64) and `n_controllable·n_actions` values (f64).
//! - ExAQ: Q tables then exogenous statistics.
//! - Q-learning: `alpha, epsilon_start, epsilon_min, decay, epsilon` (f64)
//!   then Q tables.
//! - ExAVI: `replan_every` (u64) then exogenous statistics.
//! - UCBVI: `bonus_scale, delta` (f64), `episodes` (u64) then full statistics.
//!
//! Restoring ExAVI or UCBVI replans from the stored counts.

use std::path::Path;

use pcmdp::algorithms::{EpsilonSchedule, ExAq, ExAvi, QLearning, Ucbvi, UcbviConfig};
use pcmdp::estimation::{ExoStatistics, FullStatistics};
use pcmdp::tables::StepTables;
use pcmdp::{ControlModel, StateFactorization};

use crate::error::{HarnessError, Result};

pub const MAGIC: [u8; 8] = *b"PCMDPCKP";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u16)]
pub enum Kind {
    ExoStatistics = 1,
    FullStatistics = 2,
    StepTables = 3,
    ExAq = 4,
    QLearning = 5,
    ExAvi = 6,
    Ucbvi = 7,
}

impl Kind {
    fn from_u16(v: u16) -> Result<Self> {
        Ok(match v {
            1 => Kind::ExoStatistics,
            2 => Kind::FullStatistics,
            3 => Kind::StepTables,
            4 => Kind::ExAq,
            5 => Kind::QLearning,
            6 => Kind::ExAvi,
            7 => Kind::Ucbvi,
            _ => return Err(HarnessError::Format(format!("unknown checkpoint kind {v}"))),
        })
    }
}

/// A restored learner.
pub enum LearnerCheckpoint {
    ExAq(ExAq),
    QLearning(QLearning),
    ExAvi(ExAvi),
    Ucbvi(Ucbvi),
}

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn header(kind: Kind) -> Self {
        let mut w = Writer(Vec::new());
        w.0.extend_from_slice(&MAGIC);
        w.0.extend_from_slice(&VERSION.to_le_bytes());
        w.0.extend_from_slice(&(kind as u16).to_le_bytes());
        w
    }

    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }

    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn counts(&mut self, row: &[(u32, u64)]) {
        self.usize(row.len());
        for &(k, c) in row {
            self.u32(k);
            self.u64(c);
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn open(bytes: &'a [u8]) -> Result<(Self, Kind)> {
        if bytes.len() < 12 || bytes[..8] != MAGIC {
            return Err(HarnessError::Format("not a checkpoint".into()));
        }
        let version = u16::from_le_bytes([bytes[8], bytes[9]]);
        if version != VERSION {
            return Err(HarnessError::Format(format!("unsupported checkpoint version {version}")));
        }
        let kind = Kind::from_u16(u16::from_le_bytes([bytes[10], bytes[11]]))?;
        Ok((Reader { bytes, pos: 12 }, kind))
    }

    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let slice = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| HarnessError::Format("truncated checkpoint".into()))?;
        self.pos = end;
        Ok(slice.try_into().expect("length checked"))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }

    /// A length or index, bounded by the remaining bytes to reject garbage
    /// before it drives an allocation.
    fn usize(&mut self) -> Result<usize> {
        let v = self.u64()?;
        if v > self.bytes.len() as u64 * 8 + 1024 {
            return Err(HarnessError::Format(format!("implausible size {v} in checkpoint")));
        }
        Ok(v as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }

    fn counts(&mut self) -> Result<Vec<(u32, u64)>> {
        let n = self.usize()?;
        (0..n).map(|_| Ok((self.u32()?, self.u64()?))).collect()
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(HarnessError::Format("trailing bytes in checkpoint".into()));
        }
        Ok(())
    }
}

fn expect(kind: Kind, want: Kind) -> Result<()> {
    if kind != want {
        return Err(HarnessError::Format(format!("checkpoint holds {kind:?}, expected {want:?}")));
    }
    Ok(())
}

fn put_exo(w: &mut Writer, s: &ExoStatistics) {
    w.usize(s.n_exogenous());
    w.usize(s.horizon());
    w.u64(s.episodes());
    for &v in s.visits_table() {
        w.u64(v);
    }
    for row in s.transition_rows() {
        w.counts(row);
    }
}

fn get_exo(r: &mut Reader) -> Result<ExoStatistics> {
    let n = r.usize()?;
    let h = r.usize()?;
    let episodes = r.u64()?;
    let visits = (0..n * h).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
    let rows = (0..n * h.saturating_sub(1))
        .map(|_| r.counts())
        .collect::<Result<Vec<_>>>()?;
    Ok(ExoStatistics::from_parts(n, h, episodes, visits, rows)?)
}

fn put_full(w: &mut Writer, s: &FullStatistics) {
    let na = s.n_actions();
    w.usize(na);
    w.usize(s.transition_steps());
    for h in 0..s.transition_steps() {
        let pairs: Vec<_> = s.visited(h).collect();
        w.usize(pairs.len());
        for ((st, a), c) in pairs {
            w.usize(st * na + a);
            w.u64(c.visits);
            w.counts(&c.successors);
        }
    }
}

fn get_full(r: &mut Reader) -> Result<FullStatistics> {
    let na = r.usize()?;
    let steps = r.usize()?;
    if na == 0 {
        return Err(HarnessError::Format("full statistics with zero actions".into()));
    }
    let mut s = FullStatistics::new(na, steps);
    for h in 0..steps {
        let pairs = r.usize()?;
        for _ in 0..pairs {
            let key = r.usize()?;
            let visits = r.u64()?;
            let succ = r.counts()?;
            if succ.iter().map(|&(_, c)| c).sum::<u64>() != visits {
                return Err(HarnessError::Format("pair visits disagree with successor counts".into()));
            }
            for (next, count) in succ {
                s.add(h, key / na, key % na, next as usize, count)?;
            }
        }
    }
    Ok(s)
}

fn put_tables(w: &mut Writer, t: &StepTables) {
    let f = t.factorization();
    w.usize(f.n_controllable());
    w.usize(f.n_exogenous());
    w.usize(t.n_actions());
    w.usize(t.horizon());
    for h in 0..t.horizon() {
        w.f64(t.default_value(h));
    }
    w.usize(t.allocated_blocks());
    for (h, e, block) in t.iter_blocks() {
        w.usize(h);
        w.usize(e);
        for &v in block {
            w.f64(v);
        }
    }
}

fn get_tables(r: &mut Reader) -> Result<StepTables> {
    let nc = r.usize()?;
    let ne = r.usize()?;
    let na = r.usize()?;
    let hz = r.usize()?;
    let fact = StateFactorization::new(nc, ne)?;
    let defaults = (0..hz).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let mut t = StepTables::new(fact, na, hz, |h| defaults[h]);
    let blocks = r.usize()?;
    for _ in 0..blocks {
        let h = r.usize()?;
        let e = r.usize()?;
        if h >= hz || e >= ne {
            return Err(HarnessError::Format(format!("block ({h}, {e}) out of range")));
        }
        let values = (0..nc * na).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        t.set_block(h, e, values.into_boxed_slice());
    }
    Ok(t)
}

pub fn encode_exo_statistics(s: &ExoStatistics) -> Vec<u8> {
    let mut w = Writer::header(Kind::ExoStatistics);
    put_exo(&mut w, s);
    w.0
}

pub fn decode_exo_statistics(bytes: &[u8]) -> Result<ExoStatistics> {
    let (mut r, kind) = Reader::open(bytes)?;
    expect(kind, Kind::ExoStatistics)?;
    let s = get_exo(&mut r)?;
    r.finish()?;
    Ok(s)
}

pub fn encode_full_statistics(s: &FullStatistics) -> Vec<u8> {
    let mut w = Writer::header(Kind::FullStatistics);
    put_full(&mut w, s);
    w.0
}

pub fn decode_full_statistics(bytes: &[u8]) -> Result<FullStatistics> {
    let (mut r, kind) = Reader::open(bytes)?;
    expect(kind, Kind::FullStatistics)?;
    let s = get_full(&mut r)?;
    r.finish()?;
    Ok(s)
}

pub fn encode_tables(t: &StepTables) -> Vec<u8> {
    let mut w = Writer::header(Kind::StepTables);
    put_tables(&mut w, t);
    w.0
}

pub fn decode_tables(bytes: &[u8]) -> Result<StepTables> {
    let (mut r, kind) = Reader::open(bytes)?;
    expect(kind, Kind::StepTables)?;
    let t = get_tables(&mut r)?;
    r.finish()?;
    Ok(t)
}

impl LearnerCheckpoint {
    pub fn encode(&self) -> Vec<u8> {
        match self {
            LearnerCheckpoint::ExAq(l) => encode_exaq(l),
            LearnerCheckpoint::QLearning(l) => encode_qlearning(l),
            LearnerCheckpoint::ExAvi(l) => encode_exavi(l),
            LearnerCheckpoint::Ucbvi(l) => encode_ucbvi(l),
        }
    }

    /// Restores a learner for `control`, which must be the model it was
    /// trained on.
    pub fn decode(bytes: &[u8], control: &ControlModel) -> Result<Self> {
        let (mut r, kind) = Reader::open(bytes)?;
        let out = match kind {
            Kind::ExAq => {
                let tables = get_tables(&mut r)?;
                let stats = get_exo(&mut r)?;
                check_shape(control, tables.factorization(), tables.n_actions(), tables.horizon())?;
                LearnerCheckpoint::ExAq(ExAq::from_parts(control, tables, stats)?)
            }
            Kind::QLearning => {
                let alpha = r.f64()?;
                let schedule = EpsilonSchedule {
                    start: r.f64()?,
                    min: r.f64()?,
                    decay: r.f64()?,
                };
                let epsilon = r.f64()?;
                let tables = get_tables(&mut r)?;
                check_shape(control, tables.factorization(), tables.n_actions(), tables.horizon())?;
                LearnerCheckpoint::QLearning(QLearning::from_parts(control, alpha, schedule, tables, epsilon)?)
            }
            Kind::ExAvi => {
                let every = r.u64()?;
                let stats = get_exo(&mut r)?;
                if stats.n_exogenous() != control.factorization().n_exogenous() || stats.horizon() != control.horizon() {
                    return Err(HarnessError::Format("statistics do not match the model".into()));
                }
                LearnerCheckpoint::ExAvi(ExAvi::from_stats(control, stats, every)?)
            }
            Kind::Ucbvi => {
                let cfg = UcbviConfig {
                    bonus_scale: r.f64()?,
                    delta: r.f64()?,
                    episodes: usize::try_from(r.u64()?)
                        .map_err(|_| HarnessError::Format("episode count out of range".into()))?,
                };
                let stats = get_full(&mut r)?;
                if stats.n_actions() != control.n_actions()
                    || stats.transition_steps() != control.horizon().saturating_sub(1)
                {
                    return Err(HarnessError::Format("statistics do not match the model".into()));
                }
                LearnerCheckpoint::Ucbvi(Ucbvi::from_stats(control, cfg, stats)?)
            }
            other => {
                return Err(HarnessError::Format(format!("{other:?} checkpoint is not a learner")));
            }
        };
        r.finish()?;
        Ok(out)
    }
}

fn check_shape(control: &ControlModel, fact: StateFactorization, na: usize, hz: usize) -> Result<()> {
    if fact != control.factorization() || na != control.n_actions() || hz != control.horizon() {
        return Err(HarnessError::Format("tables do not match the model".into()));
    }
    Ok(())
}

pub fn encode_exaq(l: &ExAq) -> Vec<u8> {
    let mut w = Writer::header(Kind::ExAq);
    put_tables(&mut w, l.tables());
    put_exo(&mut w, l.stats());
    w.0
}

pub fn encode_qlearning(l: &QLearning) -> Vec<u8> {
    let mut w = Writer::header(Kind::QLearning);
    let s = l.schedule();
    w.f64(l.alpha());
    w.f64(s.start);
    w.f64(s.min);
    w.f64(s.decay);
    w.f64(l.epsilon());
    put_tables(&mut w, l.tables());
    w.0
}

pub fn encode_exavi(l: &ExAvi) -> Vec<u8> {
    let mut w = Writer::header(Kind::ExAvi);
    w.u64(l.replan_every());
    put_exo(&mut w, l.stats());
    w.0
}

pub fn encode_ucbvi(l: &Ucbvi) -> Vec<u8> {
    let mut w = Writer::header(Kind::Ucbvi);
    let c = l.config();
    w.f64(c.bonus_scale);
    w.f64(c.delta);
    w.usize(c.episodes);
    put_full(&mut w, l.stats());
    w.0
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}
