//! Seeded property checks for the sequence classes, the summing operators
//! built on them, and their coherence under restriction and extension.
//!
//! Every check draws random instances from a seed derived from
//! `(config seed, property, group, sample)`, evaluates a literal inequality
//! or identity, and keeps the worst margin. Margins are relative:
//! `(large - small) / max(1, |small|, |large|)`.

mod gen;
mod props;
mod witness;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::mutation::Mutation;
use crate::optim::{derive_seed, OptBudget};
use crate::seqclass::ClassSpec;
use crate::spaces::FiniteSpace;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "SUMNORM_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PropertyId {
    UnitNorm,
    LinfEmbed,
    Symmetry,
    FinDet,
    LinearStability,
    Mult1,
    IdealIneq,
    InNormOne,
    SeqCompat,
    DownRegular,
    MultipleRegular,
    Ch1,
    Ch2,
    Ch3,
    Ch4,
    LemmaPa,
}

/// What a property's samples are grouped by.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Scope {
    Engine,
    Preset,
    Global,
}

impl PropertyId {
    pub const ALL: [PropertyId; 16] = [
        PropertyId::UnitNorm,
        PropertyId::LinfEmbed,
        PropertyId::Symmetry,
        PropertyId::FinDet,
        PropertyId::LinearStability,
        PropertyId::Mult1,
        PropertyId::IdealIneq,
        PropertyId::InNormOne,
        PropertyId::SeqCompat,
        PropertyId::DownRegular,
        PropertyId::MultipleRegular,
        PropertyId::Ch1,
        PropertyId::Ch2,
        PropertyId::Ch3,
        PropertyId::Ch4,
        PropertyId::LemmaPa,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PropertyId::UnitNorm => "UNIT_NORM",
            PropertyId::LinfEmbed => "LINF_EMBED",
            PropertyId::Symmetry => "SYMMETRY",
            PropertyId::FinDet => "FIN_DET",
            PropertyId::LinearStability => "LINEAR_STABILITY",
            PropertyId::Mult1 => "MULT1",
            PropertyId::IdealIneq => "IDEAL_INEQ",
            PropertyId::InNormOne => "IN_NORM_ONE",
            PropertyId::SeqCompat => "SEQ_COMPAT",
            PropertyId::DownRegular => "DOWN_REGULAR",
            PropertyId::MultipleRegular => "MULTIPLE_REGULAR",
            PropertyId::Ch1 => "CH1",
            PropertyId::Ch2 => "CH2",
            PropertyId::Ch3 => "CH3",
            PropertyId::Ch4 => "CH4",
            PropertyId::LemmaPa => "LEMMA_PA",
        }
    }

    pub(crate) fn scope(self) -> Scope {
        match self {
            PropertyId::UnitNorm
            | PropertyId::LinfEmbed
            | PropertyId::Symmetry
            | PropertyId::FinDet
            | PropertyId::LinearStability
            | PropertyId::SeqCompat
            | PropertyId::DownRegular
            | PropertyId::MultipleRegular => Scope::Engine,
            PropertyId::Mult1
            | PropertyId::IdealIneq
            | PropertyId::InNormOne
            | PropertyId::Ch1
            | PropertyId::Ch2
            | PropertyId::Ch3
            | PropertyId::Ch4 => Scope::Preset,
            PropertyId::LemmaPa => Scope::Global,
        }
    }

    fn index(self) -> u64 {
        PropertyId::ALL.iter().position(|&p| p == self).expect("listed") as u64
    }
}

impl fmt::Display for PropertyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PropertyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_uppercase();
        PropertyId::ALL
            .into_iter()
            .find(|p| p.name() == key)
            .ok_or_else(|| Error::invalid(format!("unknown property id {s:?}")))
    }
}

/// The six pairings of input and output classes exercised by the suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Preset {
    /// Weak `ℓ_q` inputs, strong `ℓ_p` output, `p >= q`.
    MultipleSumming,
    /// Strong `ℓ_p` inputs, Cohen `p` output.
    Cohen,
    /// Weak `ℓ_q` inputs, mixed `(s, q)` output.
    Mixing,
    /// Mixed `(s, q)` inputs, strong `ℓ_s` output.
    StrongMixing,
    /// Mid `p` inputs, strong `ℓ_p` output.
    StrongMid,
    /// Weak `ℓ_p` inputs, mid `p` output.
    MidWeakly,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::MultipleSumming,
        Preset::Cohen,
        Preset::Mixing,
        Preset::StrongMixing,
        Preset::StrongMid,
        Preset::MidWeakly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::MultipleSumming => "MULTIPLE_SUMMING",
            Preset::Cohen => "COHEN",
            Preset::Mixing => "MIXING",
            Preset::StrongMixing => "STRONG_MIXING",
            Preset::StrongMid => "STRONG_MID",
            Preset::MidWeakly => "MID_WEAKLY",
        }
    }

    /// `(input class, output class)` for every parameter choice.
    pub fn grid(self) -> Vec<(ClassSpec, ClassSpec)> {
        const MIXED: [(f64, f64); 4] = [(2.0, 2.0), (2.0, 1.0), (4.0, 2.0), (4.0, 1.0)];
        match self {
            Preset::MultipleSumming => [(1.0, 1.0), (1.0, 2.0), (2.0, 2.0), (1.0, 4.0), (2.0, 4.0), (4.0, 4.0)]
                .iter()
                .map(|&(q, p)| (ClassSpec::weak(q), ClassSpec::lp(p)))
                .collect(),
            Preset::Cohen => [2.0, 4.0].iter().map(|&p| (ClassSpec::lp(p), ClassSpec::cohen(p))).collect(),
            Preset::Mixing => MIXED.iter().map(|&(s, q)| (ClassSpec::weak(q), ClassSpec::mixed(s, q))).collect(),
            Preset::StrongMixing => MIXED.iter().map(|&(s, q)| (ClassSpec::mixed(s, q), ClassSpec::lp(s))).collect(),
            Preset::StrongMid => [1.0, 2.0, 4.0].iter().map(|&p| (ClassSpec::mid(p), ClassSpec::lp(p))).collect(),
            Preset::MidWeakly => [1.0, 2.0, 4.0].iter().map(|&p| (ClassSpec::weak(p), ClassSpec::mid(p))).collect(),
        }
    }
}

/// The six class engines, each with its parameter grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EngineKind {
    Linf,
    Lp,
    Weak,
    Cohen,
    Mid,
    Mixed,
}

impl EngineKind {
    pub const ALL: [EngineKind; 6] =
        [EngineKind::Linf, EngineKind::Lp, EngineKind::Weak, EngineKind::Cohen, EngineKind::Mid, EngineKind::Mixed];

    pub fn name(self) -> &'static str {
        match self {
            EngineKind::Linf => "LINF",
            EngineKind::Lp => "LP",
            EngineKind::Weak => "WEAK",
            EngineKind::Cohen => "COHEN",
            EngineKind::Mid => "MID",
            EngineKind::Mixed => "MIXED",
        }
    }

    pub fn grid(self) -> Vec<ClassSpec> {
        match self {
            EngineKind::Linf => vec![ClassSpec::Linf],
            EngineKind::Lp => [1.0, 2.0, 4.0].iter().map(|&p| ClassSpec::lp(p)).collect(),
            EngineKind::Weak => [1.0, 2.0, 4.0].iter().map(|&p| ClassSpec::weak(p)).collect(),
            EngineKind::Cohen => [2.0, 4.0].iter().map(|&p| ClassSpec::cohen(p)).collect(),
            EngineKind::Mid => [1.0, 2.0, 4.0].iter().map(|&p| ClassSpec::mid(p)).collect(),
            EngineKind::Mixed => {
                [(2.0, 2.0), (2.0, 1.0), (4.0, 2.0), (4.0, 1.0)].iter().map(|&(s, q)| ClassSpec::mixed(s, q)).collect()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Allowed violation when every norm involved is exact or certified by a witness.
    pub exact: f64,
    /// Allowed violation when an optimizer bound sits on the unsafe side.
    pub optimized: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { exact: 1e-9, optimized: 1e-4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckConfig {
    pub presets: Vec<Preset>,
    pub engines: Vec<EngineKind>,
    /// Base spaces; random instances cycle through them and may shrink the dimension.
    pub spaces: Vec<FiniteSpace>,
    /// Samples per engine, per preset, or in total, depending on the property.
    pub samples: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub budget: OptBudget,
    /// Largest order of random n-sequences and arity of random operators.
    pub max_order: usize,
    /// Largest bound along each axis of random n-sequences.
    pub max_len: usize,
    /// A planted defect, for checking that the suite notices it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mutation: Option<Mutation>,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            presets: Preset::ALL.to_vec(),
            engines: EngineKind::ALL.to_vec(),
            spaces: vec![FiniteSpace::scalar(), FiniteSpace::l1(3), FiniteSpace::linf(3), FiniteSpace::l2(3)],
            samples: 20,
            seed: 0,
            tolerances: Tolerances::default(),
            budget: OptBudget::default(),
            max_order: 3,
            max_len: 3,
            mutation: None,
        }
    }
}

impl CheckConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_mutation(mut self, mutation: Option<Mutation>) -> Self {
        self.mutation = mutation;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::invalid("samples must be at least 1"));
        }
        if self.presets.is_empty() || self.engines.is_empty() || self.spaces.is_empty() {
            return Err(Error::invalid("presets, engines and spaces must be nonempty"));
        }
        if !(1..=4).contains(&self.max_order) || !(1..=6).contains(&self.max_len) {
            return Err(Error::invalid("max_order must lie in 1..=4 and max_len in 1..=6"));
        }
        if self.spaces.iter().any(|s| s.dim() > 4) {
            return Err(Error::invalid("base spaces must have dimension at most 4"));
        }
        let t = &self.tolerances;
        if !(t.exact >= 0.0 && t.optimized >= 0.0 && t.exact.is_finite() && t.optimized.is_finite()) {
            return Err(Error::invalid("tolerances must be finite and nonnegative"));
        }
        self.budget.validate()
    }

    pub(crate) fn groups(&self, id: PropertyId) -> Vec<String> {
        match id.scope() {
            Scope::Engine => self.engines.iter().map(|e| e.name().to_string()).collect(),
            Scope::Preset => self.presets.iter().map(|p| p.name().to_string()).collect(),
            Scope::Global => vec!["ALL".to_string()],
        }
    }

    /// The seed of one sample; a counterexample carries it for replay.
    pub fn sample_seed(&self, id: PropertyId, group: usize, sample: usize) -> u64 {
        derive_seed(&[self.seed, id.index(), group as u64, sample as u64])
    }
}

/// Everything needed to rerun a failing sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub property: PropertyId,
    pub group: String,
    pub group_index: usize,
    pub sample: usize,
    pub seed: u64,
    pub margin: f64,
    pub tolerance: f64,
    pub inputs: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property: PropertyId,
    pub passed: bool,
    pub samples: usize,
    pub failures: usize,
    /// The smallest margin seen; negative margins within tolerance still pass.
    pub worst_margin: f64,
    pub worst_group: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
    #[serde(skip)]
    pub runtime: Duration,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub seed: u64,
    pub passed: bool,
    pub properties: Vec<PropertyReport>,
    #[serde(skip)]
    pub runtime: Duration,
}

impl CheckReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// A plain-text table, one row per property.
    pub fn to_table(&self) -> String {
        let mut out = format!("# seed {}\n", self.seed);
        out.push_str(&format!(
            "{:<18} {:<6} {:>8} {:>9} {:>13}  {}\n",
            "property", "status", "samples", "failures", "worst margin", "group"
        ));
        for r in &self.properties {
            out.push_str(&format!(
                "{:<18} {:<6} {:>8} {:>9} {:>13.3e}  {}\n",
                r.property.name(),
                if r.passed { "PASS" } else { "FAIL" },
                r.samples,
                r.failures,
                r.worst_margin + 0.0,
                r.worst_group
            ));
        }
        out.push_str(&format!("overall: {}\n", if self.passed { "PASS" } else { "FAIL" }));
        out
    }
}

/// Result of evaluating one sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub margin: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub inputs: Value,
}

/// Runs one property.
pub fn check(id: PropertyId, cfg: &CheckConfig) -> Result<CheckReport> {
    cfg.validate()?;
    let start = Instant::now();
    let report = with_pool(|| check_one(id, cfg))?;
    Ok(CheckReport { seed: cfg.seed, passed: report.passed, properties: vec![report], runtime: start.elapsed() })
}

/// Runs every property over every configured preset and engine.
pub fn run_suite(cfg: &CheckConfig) -> Result<CheckReport> {
    run_properties(&PropertyId::ALL, cfg)
}

/// Runs the listed properties in order.
pub fn run_properties(ids: &[PropertyId], cfg: &CheckConfig) -> Result<CheckReport> {
    cfg.validate()?;
    if ids.is_empty() {
        return Err(Error::invalid("no properties selected"));
    }
    let start = Instant::now();
    let properties = with_pool(|| ids.iter().map(|&id| check_one(id, cfg)).collect::<Vec<_>>())?;
    let passed = properties.iter().all(|r| r.passed);
    Ok(CheckReport { seed: cfg.seed, passed, properties, runtime: start.elapsed() })
}

/// Reevaluates the sample a counterexample came from.
pub fn replay(cfg: &CheckConfig, cx: &Counterexample) -> Result<SampleOutcome> {
    cfg.validate()?;
    let groups = cfg.groups(cx.property);
    if cx.group_index >= groups.len() || groups[cx.group_index] != cx.group {
        return Err(Error::invalid(format!("group {} is not configured for {}", cx.group, cx.property)));
    }
    Ok(evaluate(cx.property, cfg, cx.group_index, cx.sample, cx.seed))
}

/// Runs `f` on a pool capped by `SUMNORM_THREADS` when that is set.
pub(crate) fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    match std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        Some(n) if n > 0 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        _ => Ok(f()),
    }
}

fn evaluate(id: PropertyId, cfg: &CheckConfig, group: usize, sample: usize, seed: u64) -> SampleOutcome {
    match props::sample(id, cfg, group, sample, seed) {
        Ok(s) => {
            let worst = s
                .clauses
                .iter()
                .min_by(|a, b| (a.margin + a.tol).total_cmp(&(b.margin + b.tol)))
                .copied()
                .unwrap_or(props::Clause { margin: 0.0, tol: 0.0 });
            let passed = worst.margin + worst.tol >= 0.0;
            SampleOutcome { margin: worst.margin, tolerance: worst.tol, passed, inputs: s.inputs }
        }
        Err(e) => SampleOutcome {
            margin: f64::NEG_INFINITY,
            tolerance: 0.0,
            passed: false,
            inputs: serde_json::json!({ "error": e.to_string() }),
        },
    }
}

fn check_one(id: PropertyId, cfg: &CheckConfig) -> PropertyReport {
    let start = Instant::now();
    let groups = cfg.groups(id);
    let jobs: Vec<(usize, usize)> = (0..groups.len()).flat_map(|g| (0..cfg.samples).map(move |i| (g, i))).collect();
    let outcomes: Vec<SampleOutcome> =
        jobs.par_iter().map(|&(g, i)| evaluate(id, cfg, g, i, cfg.sample_seed(id, g, i))).collect();

    let mut failures = 0;
    let mut worst: Option<usize> = None;
    let mut first_fail: Option<usize> = None;
    for (k, o) in outcomes.iter().enumerate() {
        if !o.passed {
            failures += 1;
            let better = first_fail.map_or(true, |f| o.margin + o.tolerance < outcomes[f].margin + outcomes[f].tolerance);
            if better {
                first_fail = Some(k);
            }
        }
        if worst.map_or(true, |w| o.margin < outcomes[w].margin) {
            worst = Some(k);
        }
    }
    let w = worst.expect("at least one sample");
    let counterexample = first_fail.map(|k| {
        let (g, i) = jobs[k];
        let o = &outcomes[k];
        Counterexample {
            property: id,
            group: groups[g].clone(),
            group_index: g,
            sample: i,
            seed: cfg.sample_seed(id, g, i),
            margin: o.margin,
            tolerance: o.tolerance,
            inputs: o.inputs.clone(),
        }
    });
    PropertyReport {
        property: id,
        passed: failures == 0,
        samples: outcomes.len(),
        failures,
        worst_margin: outcomes[w].margin,
        worst_group: groups[jobs[w].0].clone(),
        counterexample,
        runtime: start.elapsed(),
    }
}
