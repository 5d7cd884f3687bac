use rayon::prelude::*;
use serde::Serialize;

use super::models::{replicate_rng, sample_group, Model, ModelSpec, ShiftSpec};
use crate::baselines::{bs1996, cq2010, hotelling_t2};
use crate::error::{Error, Result};
use crate::model::{GroupedSample, KernelSpec, TestOutcome};
use crate::nulldist::{run_test, PValueMethod};

/// Tests available to the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestId {
    Ss,
    Zgzc,
    Bs1996,
    Cq2010,
    Ht2,
}

impl TestId {
    pub const ALL: [TestId; 5] = [TestId::Ss, TestId::Zgzc, TestId::Bs1996, TestId::Cq2010, TestId::Ht2];

    pub fn name(self) -> &'static str {
        match self {
            TestId::Ss => "ss",
            TestId::Zgzc => "zgzc",
            TestId::Bs1996 => "bs1996",
            TestId::Cq2010 => "cq2010",
            TestId::Ht2 => "ht2",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        TestId::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown test '{s}'")))
    }
}

/// Run one test on one sample.
pub fn run_one(test: TestId, sample: &GroupedSample, method: PValueMethod) -> Result<TestOutcome> {
    match test {
        TestId::Ss => run_test(sample, &KernelSpec::spatial_sign(), method),
        TestId::Zgzc => run_test(sample, &KernelSpec::difference(), method),
        TestId::Bs1996 => bs1996(sample),
        TestId::Cq2010 => cq2010(sample),
        TestId::Ht2 => hotelling_t2(sample),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationConfig {
    pub model: ModelSpec,
    pub shift: ShiftSpec,
    pub n1: usize,
    pub n2: usize,
    pub reps: usize,
    pub level: f64,
    pub seed: u64,
    pub tests: Vec<TestId>,
    #[serde(serialize_with = "serialize_method")]
    pub method: PValueMethod,
}

fn serialize_method<S: serde::Serializer>(m: &PValueMethod, s: S) -> std::result::Result<S::Ok, S::Error> {
    m.method().serialize(s)
}

impl SimulationConfig {
    /// Two groups of 40 and 50, 1000 replicates at the 5% level.
    pub fn new(model: ModelSpec, shift: ShiftSpec, tests: Vec<TestId>) -> Self {
        Self {
            model,
            shift,
            n1: 40,
            n2: 50,
            reps: 1000,
            level: 0.05,
            seed: 0,
            tests,
            method: PValueMethod::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::InvalidArgument("reps must be positive".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::InvalidArgument(format!("level {} outside (0, 1)", self.level)));
        }
        if self.n1 < 2 || self.n2 < 2 {
            return Err(Error::InvalidArgument("group sizes must be at least 2".into()));
        }
        if self.tests.is_empty() {
            return Err(Error::InvalidArgument("no tests selected".into()));
        }
        self.shift.vector(self.model.p).map(|_| ())
    }

    /// The two groups of replicate `r`. Group one is centred, group two is
    /// shifted; the underlying draws do not depend on `delta`.
    pub fn replicate(&self, r: u64) -> Result<GroupedSample> {
        let p = self.model.p;
        let shift = self.shift.vector(p)?;
        let mut data = sample_group(&self.model, &vec![0.0; p], self.n1, &mut replicate_rng(self.seed, r, 0));
        data.extend(sample_group(&self.model, &shift, self.n2, &mut replicate_rng(self.seed, r, 1)));
        let labels: Vec<usize> = (0..self.n1 + self.n2).map(|i| usize::from(i >= self.n1)).collect();
        GroupedSample::from_row_major(data, p, &labels)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizePowerRow {
    pub delta: f64,
    pub test: TestId,
    pub rate: f64,
    pub se: f64,
    /// Replicates on which the test produced a p-value.
    pub reps: usize,
}

/// A test dropped because it failed on more than 1% of replicates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbortedTest {
    pub delta: f64,
    pub test: TestId,
    pub failures: usize,
    pub first_error: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SizePowerTable {
    pub rows: Vec<SizePowerRow>,
    pub aborted: Vec<AbortedTest>,
}

impl SizePowerTable {
    pub fn rate(&self, delta: f64, test: TestId) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.delta == delta && r.test == test)
            .map(|r| r.rate)
    }

    fn extend(&mut self, other: SizePowerTable) {
        self.rows.extend(other.rows);
        self.aborted.extend(other.aborted);
    }
}

/// Rejection rates of every configured test at the configured shift.
pub fn estimate_size_power(config: &SimulationConfig) -> Result<SizePowerTable> {
    config.validate()?;
    let per_rep: Vec<Vec<std::result::Result<bool, String>>> = (0..config.reps as u64)
        .into_par_iter()
        .map(|r| {
            let sample = config.replicate(r);
            config
                .tests
                .iter()
                .map(|&t| match &sample {
                    Ok(s) => run_one(t, s, config.method)
                        .map(|o| o.rejects(config.level))
                        .map_err(|e| e.to_string()),
                    Err(e) => Err(e.to_string()),
                })
                .collect()
        })
        .collect();

    let mut table = SizePowerTable::default();
    for (ti, &test) in config.tests.iter().enumerate() {
        let mut rejections = 0usize;
        let mut failures = 0usize;
        let mut first_error = None;
        for rep in &per_rep {
            match &rep[ti] {
                Ok(true) => rejections += 1,
                Ok(false) => {}
                Err(e) => {
                    failures += 1;
                    first_error.get_or_insert_with(|| e.clone());
                }
            }
        }
        let ok = config.reps - failures;
        if failures * 100 > config.reps || ok == 0 {
            table.aborted.push(AbortedTest {
                delta: config.shift.delta,
                test,
                failures,
                first_error: first_error.unwrap_or_default(),
            });
            continue;
        }
        let rate = rejections as f64 / ok as f64;
        table.rows.push(SizePowerRow {
            delta: config.shift.delta,
            test,
            rate,
            se: (rate * (1.0 - rate) / ok as f64).sqrt(),
            reps: ok,
        });
    }
    Ok(table)
}

/// One [`estimate_size_power`] run per `delta`, all sharing the base draws.
pub fn power_curve(config: &SimulationConfig, delta_grid: &[f64]) -> Result<SizePowerTable> {
    if delta_grid.first() != Some(&0.0) || delta_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument(
            "delta grid must start at 0 and increase strictly".into(),
        ));
    }
    let mut table = SizePowerTable::default();
    for &delta in delta_grid {
        let mut c = config.clone();
        c.shift.delta = delta;
        table.extend(estimate_size_power(&c)?);
    }
    Ok(table)
}

/// Nine equally spaced shifts from 0 to a per-model maximum at which the
/// SS test has power of at least 0.9 with the ramp direction, `p = 30` and
/// groups of 40 and 50 (about 0.99 at 1000 replicates).
pub fn default_delta_grid(model: Model) -> Vec<f64> {
    let top = match model {
        Model::Gaussian => 2.8,
        Model::StudentT4 => 3.2,
        Model::Cauchy => 5.0,
    };
    (0..9).map(|i| top * i as f64 / 8.0).collect()
}

/// Run `f` on a dedicated pool of `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(pool.install(f))
}
