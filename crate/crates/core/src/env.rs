//! Non-stationary expected-reward schedules for Bernoulli arms.
//!
//! Arms are indexed from 0; time starts at `t = 1`. Every schedule is a pure
//! function of `(arm, t)`.

use std::f64::consts::PI;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{sample_bernoulli, RngStream};

/// The three reference environments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvPreset {
    Fast,
    Slow,
    Abrupt,
}

impl EnvPreset {
    pub const ALL: [EnvPreset; 3] = [EnvPreset::Fast, EnvPreset::Slow, EnvPreset::Abrupt];

    pub fn name(self) -> &'static str {
        match self {
            EnvPreset::Fast => "fast",
            EnvPreset::Slow => "slow",
            EnvPreset::Abrupt => "abrupt",
        }
    }
}

impl fmt::Display for EnvPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fast" => Ok(EnvPreset::Fast),
            "slow" => Ok(EnvPreset::Slow),
            "abrupt" => Ok(EnvPreset::Abrupt),
            other => Err(Error::config(format!("unknown environment '{other}' (expected one of: fast, slow, abrupt)"))),
        }
    }
}

/// `μ_k(t) = (1 + sin(2πt/P + φ_k)) / 2`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SinusoidalSchedule {
    period: u64,
    offsets: Vec<f64>,
}

impl SinusoidalSchedule {
    pub fn new(period: u64, offsets: Vec<f64>) -> Result<Self> {
        if period == 0 {
            return Err(Error::config("sinusoid period must be positive"));
        }
        if offsets.is_empty() || offsets.iter().any(|o| !o.is_finite()) {
            return Err(Error::config("sinusoid needs at least one finite offset"));
        }
        Ok(Self { period, offsets })
    }

    /// Offsets `2πk/K`, `k = 0..K`.
    pub fn equally_spaced(period: u64, num_arms: usize) -> Result<Self> {
        let offsets = (0..num_arms).map(|k| 2.0 * PI * k as f64 / num_arms as f64).collect();
        Self::new(period, offsets)
    }

    pub fn period(&self) -> u64 {
        self.period
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    fn mean(&self, arm: usize, t: u64) -> f64 {
        // Reduce t modulo the period first so the phase stays exact for long runs.
        let phase = 2.0 * PI * (t % self.period) as f64 / self.period as f64;
        (0.5 * (1.0 + (phase + self.offsets[arm]).sin())).clamp(0.0, 1.0)
    }
}

/// One entry of a change table: from `at` (position within the cycle)
/// onwards, `arm` pays `value` in expectation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Change {
    pub arm: usize,
    pub at: u64,
    pub value: f64,
}

/// Piecewise-constant schedule repeating every `cycle` steps. Each arm pays
/// 0 at the start of a cycle until its first change.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AbruptSchedule {
    num_arms: usize,
    cycle: u64,
    changes: Vec<Change>,
}

impl AbruptSchedule {
    pub fn new(num_arms: usize, cycle: u64, mut changes: Vec<Change>) -> Result<Self> {
        if num_arms == 0 || cycle == 0 {
            return Err(Error::config("abrupt schedule needs at least one arm and a positive cycle"));
        }
        for c in &changes {
            if c.arm >= num_arms {
                return Err(Error::config(format!("change refers to arm {} of {num_arms}", c.arm)));
            }
            if c.at >= cycle {
                return Err(Error::config(format!("change at {} lies outside cycle {cycle}", c.at)));
            }
            if !(0.0..=1.0).contains(&c.value) {
                return Err(Error::InvalidProbability(c.value));
            }
        }
        changes.sort_by_key(|c| c.at);
        Ok(Self { num_arms, cycle, changes })
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    pub fn changes(&self) -> &[Change] {
        &self.changes
    }

    fn mean(&self, arm: usize, t: u64) -> f64 {
        let pos = t % self.cycle;
        self.changes.iter().take_while(|c| c.at <= pos).filter(|c| c.arm == arm).last().map_or(0.0, |c| c.value)
    }
}

/// Dense table of expected rewards indexed by time.
///
/// Rows need not cover every step: a row applies from its `t` until the next
/// row. Times before the first row or after the last one are out of range.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CustomSchedule {
    times: Vec<u64>,
    rows: Vec<Vec<f64>>,
}

impl CustomSchedule {
    pub fn new(times: Vec<u64>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if times.is_empty() || times.len() != rows.len() {
            return Err(Error::config("custom schedule needs one row per listed time"));
        }
        if times[0] == 0 {
            return Err(Error::config("custom schedule times start at t = 1"));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("custom schedule times must be strictly increasing"));
        }
        let k = rows[0].len();
        if k == 0 || rows.iter().any(|r| r.len() != k) {
            return Err(Error::config("every custom schedule row needs the same, non-zero arm count"));
        }
        if let Some(&bad) = rows.iter().flatten().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidProbability(bad));
        }
        Ok(Self { times, rows })
    }

    /// Parses `t,arm1,...,armK` CSV.
    pub fn from_csv_reader(reader: impl Read) -> Result<Self> {
        let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = csv.headers().map_err(|e| Error::config(format!("schedule CSV: {e}")))?.clone();
        if header.get(0) != Some("t") || header.len() < 2 {
            return Err(Error::config("schedule CSV header must be t,arm1,...,armK"));
        }
        let mut times = Vec::new();
        let mut rows = Vec::new();
        for (line, record) in csv.records().enumerate() {
            let record = record.map_err(|e| Error::config(format!("schedule CSV: {e}")))?;
            let bad = |field: &str| Error::config(format!("schedule CSV row {}: bad value '{field}'", line + 2));
            let t: u64 = record[0].parse().map_err(|_| bad(&record[0]))?;
            let row =
                record.iter().skip(1).map(|f| f.parse::<f64>().map_err(|_| bad(f))).collect::<Result<Vec<_>>>()?;
            times.push(t);
            rows.push(row);
        }
        Self::new(times, rows)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file).map_err(|e| match e {
            Error::Config(message) => Error::Parse { path: path.to_owned(), message },
            other => other,
        })
    }

    pub fn first_time(&self) -> u64 {
        self.times[0]
    }

    pub fn last_time(&self) -> u64 {
        *self.times.last().expect("non-empty by construction")
    }

    fn row_at(&self, t: u64) -> Option<&[f64]> {
        if t < self.first_time() || t > self.last_time() {
            return None;
        }
        let i = self.times.partition_point(|&x| x <= t) - 1;
        Some(&self.rows[i])
    }
}

/// An expected-reward schedule `μ_k(t)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Schedule {
    Sinusoidal(SinusoidalSchedule),
    Abrupt(AbruptSchedule),
    Custom(CustomSchedule),
}

impl Schedule {
    pub fn num_arms(&self) -> usize {
        match self {
            Schedule::Sinusoidal(s) => s.offsets.len(),
            Schedule::Abrupt(s) => s.num_arms,
            Schedule::Custom(s) => s.rows[0].len(),
        }
    }

    /// Repetition length, when the schedule is periodic.
    pub fn cycle(&self) -> Option<u64> {
        match self {
            Schedule::Sinusoidal(s) => Some(s.period),
            Schedule::Abrupt(s) => Some(s.cycle),
            Schedule::Custom(_) => None,
        }
    }

    /// Checks that every `t` in `1..=horizon` is covered.
    pub fn check_horizon(&self, horizon: u64) -> Result<()> {
        match self {
            Schedule::Custom(s) if s.first_time() > 1 || s.last_time() < horizon => Err(Error::Index(format!(
                "custom schedule covers t = {}..={}, horizon is {horizon}",
                s.first_time(),
                s.last_time()
            ))),
            _ => Ok(()),
        }
    }

    pub fn mean_at(&self, arm: usize, t: u64) -> Result<f64> {
        if arm >= self.num_arms() {
            return Err(Error::Index(format!("arm {arm} out of range for {} arms", self.num_arms())));
        }
        if t == 0 {
            return Err(Error::Index("time starts at t = 1".into()));
        }
        match self {
            Schedule::Sinusoidal(s) => Ok(s.mean(arm, t)),
            Schedule::Abrupt(s) => Ok(s.mean(arm, t)),
            Schedule::Custom(s) => {
                s.row_at(t).map(|row| row[arm]).ok_or_else(|| Error::Index(format!("t = {t} outside custom schedule")))
            }
        }
    }

    /// Expected reward of every arm at `t`.
    pub fn means_at(&self, t: u64) -> Result<Vec<f64>> {
        (0..self.num_arms()).map(|k| self.mean_at(k, t)).collect()
    }

    /// `μ*_t = max_k μ_k(t)`.
    pub fn oracle_mean(&self, t: u64) -> Result<f64> {
        Ok(self.means_at(t)?.into_iter().fold(f64::NEG_INFINITY, f64::max))
    }

    /// Arm with the highest expected reward at `t`, lowest index on ties.
    pub fn best_arm(&self, t: u64) -> Result<usize> {
        let means = self.means_at(t)?;
        Ok(crate::policy::argmax(&means))
    }

    pub fn draw_reward(&self, arm: usize, t: u64, rng: &mut RngStream) -> Result<f64> {
        let p = self.mean_at(arm, t)?;
        Ok(if sample_bernoulli(rng, p)? { 1.0 } else { 0.0 })
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        CustomSchedule::from_csv_path(path).map(Schedule::Custom)
    }
}

/// Period of the sinusoidal presets, or cycle length of the abrupt one.
pub fn preset_cycle(preset: EnvPreset) -> u64 {
    match preset {
        EnvPreset::Fast => 100,
        EnvPreset::Slow => 1000,
        EnvPreset::Abrupt => 250,
    }
}

/// Four-arm abrupt change table: all arms start each 250-step cycle at 0 and
/// jump, one after another every 50 steps, to 0.10, 0.37, 0.63 and 0.90.
const ABRUPT_FOUR_ARMS: [(u64, f64); 4] = [(50, 0.10), (100, 0.37), (150, 0.63), (200, 0.90)];

/// Builds one of the reference environments for `num_arms >= 2` arms.
///
/// Sinusoidal offsets are spaced equally over `[0, 2π)`. For the abrupt
/// environment, arm `k` (0-based) switches on at `(k + 1) · cycle / (K + 1)`
/// to a value spaced equally over `[0.1, 0.9]`; four arms use the reference
/// table exactly.
pub fn preset_environment(preset: EnvPreset, num_arms: usize) -> Result<Schedule> {
    if num_arms < 2 {
        return Err(Error::config(format!("environment needs at least 2 arms, got {num_arms}")));
    }
    let cycle = preset_cycle(preset);
    match preset {
        EnvPreset::Fast | EnvPreset::Slow => {
            SinusoidalSchedule::equally_spaced(cycle, num_arms).map(Schedule::Sinusoidal)
        }
        EnvPreset::Abrupt => {
            let changes = if num_arms == 4 {
                ABRUPT_FOUR_ARMS.iter().enumerate().map(|(arm, &(at, value))| Change { arm, at, value }).collect()
            } else {
                (0..num_arms)
                    .map(|arm| Change {
                        arm,
                        at: ((arm as u64 + 1) * cycle) / (num_arms as u64 + 1),
                        value: 0.1 + 0.8 * arm as f64 / (num_arms - 1) as f64,
                    })
                    .collect()
            };
            AbruptSchedule::new(num_arms, cycle, changes).map(Schedule::Abrupt)
        }
    }
}

/// Human/machine-readable description of a preset.
#[derive(Clone, Debug, Serialize)]
pub struct EnvDescription {
    pub name: &'static str,
    pub num_arms: usize,
    pub cycle: u64,
    pub schedule: Schedule,
}

pub fn describe_presets(num_arms: usize) -> Result<Vec<EnvDescription>> {
    EnvPreset::ALL
        .iter()
        .map(|&p| {
            Ok(EnvDescription {
                name: p.name(),
                num_arms,
                cycle: preset_cycle(p),
                schedule: preset_environment(p, num_arms)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn abrupt_reference_values() {
        let env = preset_environment(EnvPreset::Abrupt, 4).unwrap();
        assert_eq!(env.mean_at(3, 225).unwrap(), 0.90);
        for k in 0..4 {
            assert_eq!(env.mean_at(k, 25).unwrap(), 0.0);
            assert_eq!(env.mean_at(k, 250).unwrap(), 0.0);
        }
        assert_eq!(env.oracle_mean(225).unwrap(), 0.90);
        assert_eq!(env.oracle_mean(75).unwrap(), 0.10);
        assert_eq!(env.mean_at(0, 50).unwrap(), 0.10);
        assert_eq!(env.mean_at(1, 149).unwrap(), 0.37);
        assert_eq!(env.mean_at(2, 150).unwrap(), 0.63);
    }

    #[test]
    fn abrupt_best_arm_switches_every_fifty_steps() {
        let env = preset_environment(EnvPreset::Abrupt, 4).unwrap();
        let mut switches = Vec::new();
        let mut prev = env.best_arm(50).unwrap();
        for t in 51..250 {
            let best = env.best_arm(t).unwrap();
            if best != prev {
                switches.push(t);
                prev = best;
            }
        }
        assert_eq!(switches, vec![100, 150, 200]);
    }

    #[test]
    fn sinusoid_reference_parameters() {
        for (preset, period) in [(EnvPreset::Slow, 1000), (EnvPreset::Fast, 100)] {
            let Schedule::Sinusoidal(s) = preset_environment(preset, 4).unwrap() else {
                panic!("expected a sinusoid");
            };
            assert_eq!(s.period(), period);
            let expected = [0.0, PI / 2.0, PI, 3.0 * PI / 2.0];
            for (o, e) in s.offsets().iter().zip(expected) {
                assert!((o - e).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn sinusoid_zero_phase_is_half() {
        let env = preset_environment(EnvPreset::Fast, 4).unwrap();
        assert!((env.mean_at(0, 100).unwrap() - 0.5).abs() < 1e-15);
        assert!((env.mean_at(0, 25).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn general_abrupt_spacing() {
        let Schedule::Abrupt(s) = preset_environment(EnvPreset::Abrupt, 2).unwrap() else {
            panic!("expected abrupt");
        };
        let ats: Vec<u64> = s.changes().iter().map(|c| c.at).collect();
        assert_eq!(ats, vec![83, 166]);
        let values: Vec<f64> = s.changes().iter().map(|c| c.value).collect();
        assert_eq!(values, vec![0.1, 0.9]);
    }

    #[test]
    fn bad_inputs() {
        let env = preset_environment(EnvPreset::Fast, 4).unwrap();
        assert!(matches!(env.mean_at(4, 1), Err(Error::Index(_))));
        assert!(matches!(env.mean_at(0, 0), Err(Error::Index(_))));
        assert!(preset_environment(EnvPreset::Fast, 1).is_err());
        assert!("medium".parse::<EnvPreset>().is_err());
        assert_eq!("Abrupt".parse::<EnvPreset>().unwrap(), EnvPreset::Abrupt);
    }

    #[test]
    fn degenerate_arms_draw_deterministically() {
        let csv = "t,arm1,arm2\n1,0.0,1.0\n";
        let env = Schedule::Custom(CustomSchedule::from_csv_reader(csv.as_bytes()).unwrap());
        let mut rng = RngStream::new(11);
        for _ in 0..1000 {
            assert_eq!(env.draw_reward(0, 1, &mut rng).unwrap(), 0.0);
            assert_eq!(env.draw_reward(1, 1, &mut rng).unwrap(), 1.0);
        }
    }

    #[test]
    fn draw_matches_mean() {
        let csv = "t,arm1\n1,0.63\n";
        let env = Schedule::Custom(CustomSchedule::from_csv_reader(csv.as_bytes()).unwrap());
        let mut rng = RngStream::new(12);
        let n = 100_000;
        let m: f64 = (0..n).map(|_| env.draw_reward(0, 1, &mut rng).unwrap()).sum::<f64>() / n as f64;
        assert!((m - 0.63).abs() < 0.005, "{m}");
    }

    #[test]
    fn custom_csv_rules() {
        let ok = "t, arm1, arm2\n1,0.1,0.2\n3,0.5,0.6\n";
        let s = CustomSchedule::from_csv_reader(ok.as_bytes()).unwrap();
        let env = Schedule::Custom(s);
        assert_eq!(env.mean_at(1, 2).unwrap(), 0.2);
        assert_eq!(env.mean_at(0, 3).unwrap(), 0.5);
        assert!(env.mean_at(0, 4).is_err());
        assert!(env.check_horizon(3).is_ok());
        assert!(env.check_horizon(4).is_err());

        for bad in [
            "time,arm1\n1,0.5\n",
            "t,arm1\n1,1.5\n",
            "t,arm1\n2,0.5\n2,0.5\n",
            "t,arm1\n1,abc\n",
            "t,arm1,arm2\n1,0.5\n",
        ] {
            assert!(CustomSchedule::from_csv_reader(bad.as_bytes()).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn presets_described() {
        let d = describe_presets(4).unwrap();
        assert_eq!(d.len(), 3);
    }
}
