//! Datasets behind the published tables and figures.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use leaklab_core::bounce_stats::{continuation_probability, crossing_probability, truncated_stake_law, BounceParams};
use leaklab_core::ffg::{leak_trajectory, BalanceAccounting, EffectiveBalanceAccounting, StakeAccounting};
use leaklab_core::leak_math::{
    active_ratio_honest, byz_max_proportion, ejection_epoch, min_beta_for_threshold, stake_at, time_to_finalize_honest,
    time_to_finalize_semi_active, time_to_finalize_slashable, BehaviorKind, LeakParams, PartitionSplit,
};
use leaklab_core::stats::fmt_f64;
use leaklab_core::walk::{monte_carlo_walk, WalkConfig};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CliError, Result};
use crate::reference::{fmt_console, Comparison, ReferenceSet};
use crate::write_file;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReproductionTarget {
    Table2,
    Table3,
    FigStakeTrajectories,
    FigHonestRatio,
    FigFinalizationTimes,
    FigBetaRegion,
    FigTruncatedLaw,
    FigCrossingProbability,
}

impl ReproductionTarget {
    pub const ALL: [Self; 8] = [
        Self::Table2,
        Self::Table3,
        Self::FigStakeTrajectories,
        Self::FigHonestRatio,
        Self::FigFinalizationTimes,
        Self::FigBetaRegion,
        Self::FigTruncatedLaw,
        Self::FigCrossingProbability,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Table2 => "table2",
            Self::Table3 => "table3",
            Self::FigStakeTrajectories => "fig-stake-trajectories",
            Self::FigHonestRatio => "fig-honest-ratio",
            Self::FigFinalizationTimes => "fig-finalization-times",
            Self::FigBetaRegion => "fig-beta-region",
            Self::FigTruncatedLaw => "fig-truncated-law",
            Self::FigCrossingProbability => "fig-crossing-probability",
        }
    }
}

/// Generated files for one target, before anything is written.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub target: ReproductionTarget,
    /// `(file name, contents)`; the first one is the main CSV.
    pub tables: Vec<(String, String)>,
    pub parameters: Value,
    /// Values matched against reference anchors by id.
    pub measured: Vec<(String, f64)>,
    /// Values printed for context without a pass/fail verdict.
    pub notes: Vec<(String, f64)>,
}

impl Dataset {
    fn new(target: ReproductionTarget, parameters: Value) -> Self {
        Self {
            target,
            tables: Vec::new(),
            parameters,
            measured: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn measure(&mut self, id: impl Into<String>, value: f64) {
        self.measured.push((id.into(), value));
    }

    fn note(&mut self, label: impl Into<String>, value: f64) {
        self.notes.push((label.into(), value));
    }

    pub fn comparisons(&self) -> Result<Vec<Comparison>> {
        let refs = ReferenceSet::embedded();
        refs.for_target(self.target.name())
            .map(|anchor| {
                let measured = self
                    .measured
                    .iter()
                    .find(|(id, _)| *id == anchor.id)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| CliError::Invalid(format!("no measurement for anchor `{}`", anchor.id)))?;
                Ok(Comparison::new(anchor, measured))
            })
            .collect()
    }
}

/// Files written and the comparison against the reference values.
#[derive(Debug, Clone)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub comparisons: Vec<Comparison>,
    pub lines: Vec<String>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.comparisons.iter().all(|c| c.pass)
    }
}

pub fn generate(target: ReproductionTarget) -> Result<Dataset> {
    match target {
        ReproductionTarget::Table2 => table(target, false),
        ReproductionTarget::Table3 => table(target, true),
        ReproductionTarget::FigStakeTrajectories => stake_trajectories(),
        ReproductionTarget::FigHonestRatio => honest_ratio(),
        ReproductionTarget::FigFinalizationTimes => finalization_times(),
        ReproductionTarget::FigBetaRegion => beta_region(),
        ReproductionTarget::FigTruncatedLaw => truncated_law(),
        ReproductionTarget::FigCrossingProbability => crossing(),
    }
}

/// Generates `target`, writes its CSVs and sidecar into `out`, and builds the
/// console report.
pub fn reproduce(target: ReproductionTarget, out: &Path) -> Result<Report> {
    let data = generate(target)?;
    let comparisons = data.comparisons()?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;

    let mut files = Vec::new();
    for (name, contents) in &data.tables {
        let path = out.join(name);
        write_file(&path, contents)?;
        files.push(path);
    }
    let sidecar = json!({
        "target": target.name(),
        "reference_version": ReferenceSet::embedded().version,
        "parameters": data.parameters,
        "files": data.tables.iter().map(|(n, _)| n).collect::<Vec<_>>(),
        "comparisons": comparisons,
        "notes": data.notes.iter().map(|(k, v)| json!({ "label": k, "value": v })).collect::<Vec<_>>(),
    });
    let path = out.join(format!("{}.json", target.name()));
    write_file(
        &path,
        &(serde_json::to_string_pretty(&sidecar).expect("sidecar serializes") + "\n"),
    )?;
    files.push(path);

    let refs = ReferenceSet::embedded();
    let mut lines: Vec<String> = comparisons
        .iter()
        .map(|c| c.report_line(refs.get(&c.id).expect("anchor exists")))
        .collect();
    lines.extend(data.notes.iter().map(|(k, v)| format!("INFO {k}: {}", fmt_console(*v))));
    let passed = comparisons.iter().filter(|c| c.pass).count();
    lines.push(format!(
        "{}: {passed}/{} reference values within tolerance",
        target.name(),
        comparisons.len()
    ));
    Ok(Report {
        files,
        comparisons,
        lines,
    })
}

const TABLE_BETAS: [f64; 5] = [0.0, 0.1, 0.15, 0.2, 0.33];
const TABLE_P0: f64 = 0.5;

fn table(target: ReproductionTarget, semi_active: bool) -> Result<Dataset> {
    let params = LeakParams::default();
    let prefix = target.name();
    let mut data = Dataset::new(
        target,
        json!({
            "p0": TABLE_P0,
            "beta0": TABLE_BETAS,
            "byzantine_behavior": if semi_active { "semi-active" } else { "dual-active" },
            "method": if semi_active { "bisection" } else { "closed form" },
            "leak": params,
        }),
    );
    let mut csv = String::from("beta0,t,t_exact,capped\n");
    for beta0 in TABLE_BETAS {
        let split = PartitionSplit::new(TABLE_P0, beta0)?;
        let time = if semi_active {
            time_to_finalize_semi_active(split, &params)?
        } else {
            time_to_finalize_slashable(split, &params)?
        };
        let whole = time.whole_epochs();
        let _ = writeln!(csv, "{beta0},{whole},{},{}", fmt_f64(time.epochs), time.capped);
        data.measure(format!("{prefix}.beta0={beta0}"), whole as f64);
        if semi_active && beta0 == 0.33 {
            data.measure(format!("{prefix}.root.beta0={beta0}"), time.epochs);
        }
    }
    data.tables.push((format!("{prefix}.csv"), csv));
    Ok(data)
}

const TRAJECTORY_EPOCHS: i64 = 8000;

fn stake_trajectories() -> Result<Dataset> {
    let params = LeakParams::default();
    let model = EffectiveBalanceAccounting::default();
    let mut data = Dataset::new(
        ReproductionTarget::FigStakeTrajectories,
        json!({
            "epochs": TRAJECTORY_EPOCHS,
            "discrete_accounting": model.name(),
            "semi_active_epochs": "even",
            "leak": params,
        }),
    );
    let inactive = leak_trajectory(&model, BehaviorKind::Inactive, TRAJECTORY_EPOCHS)?;
    let semi = leak_trajectory(&model, BehaviorKind::SemiActive, TRAJECTORY_EPOCHS)?;
    let mut csv = String::from("t,active,semi_active,inactive,discrete_semi_active,discrete_inactive\n");
    for e in 0..=TRAJECTORY_EPOCHS {
        // Discrete epoch e ends after e + 1 epochs of leak.
        let t = e as f64 + 1.0;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            e + 1,
            fmt_f64(stake_at(BehaviorKind::Active, t, &params)?),
            fmt_f64(stake_at(BehaviorKind::SemiActive, t, &params)?),
            fmt_f64(stake_at(BehaviorKind::Inactive, t, &params)?),
            fmt_f64(semi.stake_at(e as usize)),
            fmt_f64(inactive.stake_at(e as usize)),
        );
    }
    data.tables.push(("fig-stake-trajectories.csv".into(), csv));

    let missing = || CliError::Invalid(format!("no ejection within {TRAJECTORY_EPOCHS} epochs"));
    data.measure(
        "stake.ejection.inactive",
        inactive.ejected_at.ok_or_else(missing)? as f64,
    );
    data.measure(
        "stake.ejection.semi_active",
        semi.ejected_at.ok_or_else(missing)? as f64,
    );

    data.note(
        "closed-form inactive ejection at 16.75 ETH",
        ejection_epoch(BehaviorKind::Inactive, &params)?,
    );
    data.note(
        "closed-form semi-active ejection at 16.75 ETH",
        ejection_epoch(BehaviorKind::SemiActive, &params)?,
    );
    let balance = BalanceAccounting::default();
    data.note(
        "discrete inactive ejection, raw balance at 16.75 ETH",
        leak_trajectory(&balance, BehaviorKind::Inactive, TRAJECTORY_EPOCHS)?
            .ejected_at
            .ok_or_else(missing)? as f64,
    );
    let canonical = BalanceAccounting {
        ejection_threshold: params.canonical_ejection_stake(),
    };
    data.note(
        "discrete inactive ejection, raw balance at the published-epoch stake",
        leak_trajectory(&canonical, BehaviorKind::Inactive, TRAJECTORY_EPOCHS)?
            .ejected_at
            .ok_or_else(missing)? as f64,
    );
    Ok(data)
}

const HONEST_P0: [f64; 5] = [0.5, 0.4, 0.3, 0.2, 0.1];

fn honest_ratio() -> Result<Dataset> {
    let params = LeakParams::default();
    let mut data = Dataset::new(
        ReproductionTarget::FigHonestRatio,
        json!({ "p0": HONEST_P0, "t": { "start": 0, "stop": 5000, "step": 10 }, "leak": params }),
    );
    let mut csv = String::from("p0,t,active_ratio\n");
    for p0 in HONEST_P0 {
        for t in (0..=5000).step_by(10) {
            let r = active_ratio_honest(p0, t as f64)?;
            let _ = writeln!(csv, "{p0},{t},{}", fmt_f64(r));
        }
    }
    data.tables.push(("fig-honest-ratio.csv".into(), csv));

    let mut times = String::from("p0,t,capped\n");
    for p0 in HONEST_P0 {
        let time = time_to_finalize_honest(p0, &params)?;
        let _ = writeln!(times, "{p0},{},{}", fmt_f64(time.epochs), time.capped);
    }
    data.tables.push(("fig-honest-ratio-times.csv".into(), times));

    // Finalization takes the justified epoch after the supermajority returns.
    let bound = time_to_finalize_honest(0.5, &params)?.whole_epochs() + 1;
    data.measure("honest.violation_bound", bound as f64);
    Ok(data)
}

fn beta_grid() -> impl Iterator<Item = f64> {
    (0..=33).map(|k| k as f64 / 100.0)
}

fn finalization_times() -> Result<Dataset> {
    let params = LeakParams::default();
    let mut data = Dataset::new(
        ReproductionTarget::FigFinalizationTimes,
        json!({ "p0": TABLE_P0, "beta0": { "start": 0, "stop": 0.33, "step": 0.01 }, "leak": params }),
    );
    let mut csv = String::from("beta0,slashable,semi_active,slashable_capped,semi_active_capped\n");
    for beta0 in beta_grid() {
        let split = PartitionSplit::new(TABLE_P0, beta0)?;
        let fast = time_to_finalize_slashable(split, &params)?;
        let slow = time_to_finalize_semi_active(split, &params)?;
        let _ = writeln!(
            csv,
            "{beta0},{},{},{},{}",
            fmt_f64(fast.epochs),
            fmt_f64(slow.epochs),
            fast.capped,
            slow.capped
        );
        if beta0 == 0.33 {
            data.measure("times.slashable.beta0=0.33", fast.whole_epochs() as f64);
            data.measure("times.semi_active.beta0=0.33", slow.epochs);
        }
    }
    data.tables.push(("fig-finalization-times.csv".into(), csv));
    Ok(data)
}

fn beta_region() -> Result<Dataset> {
    let params = LeakParams::default();
    let mut data = Dataset::new(
        ReproductionTarget::FigBetaRegion,
        json!({
            "p0": { "start": 0.01, "stop": 0.99, "step": 0.01 },
            "beta0": { "start": 0, "stop": 0.33, "step": 0.01 },
            "leak": params,
        }),
    );
    let mut csv = String::from("p0,beta0,beta_max,over_third\n");
    let mut boundary = String::from("p0,min_beta\n");
    for i in 1..=99 {
        let p0 = i as f64 / 100.0;
        for beta0 in beta_grid() {
            let max = byz_max_proportion(PartitionSplit::new(p0, beta0)?, &params)?;
            let _ = writeln!(csv, "{p0},{beta0},{},{}", fmt_f64(max), max >= 1.0 / 3.0);
        }
        let _ = writeln!(boundary, "{p0},{}", fmt_f64(min_beta_for_threshold(p0, &params)?));
    }
    data.tables.push(("fig-beta-region.csv".into(), csv));
    data.tables.push(("fig-beta-region-boundary.csv".into(), boundary));

    let min_beta = min_beta_for_threshold(0.5, &params)?;
    data.measure("region.min_beta.p0=0.5", min_beta);
    data.measure(
        "region.beta_max.boundary",
        byz_max_proportion(PartitionSplit::new(0.5, 0.2421)?, &params)?,
    );
    Ok(data)
}

const LAW_TIMES: [f64; 4] = [500.0, 1000.0, 2000.0, 4000.0];
const LAW_P0: f64 = 0.5;
const LAW_BETA0: f64 = 1.0 / 3.0;
const LAW_WALK_TRIALS: u64 = 10_000;
const LAW_WALK_SEED: u64 = 0x1A11;
const LAW_WALK_BINS: usize = 64;

fn truncated_law() -> Result<Dataset> {
    let p = BounceParams::new(LAW_P0, LAW_BETA0)?;
    let mut data = Dataset::new(
        ReproductionTarget::FigTruncatedLaw,
        json!({
            "t": LAW_TIMES,
            "s": { "start": 0, "stop": 32, "step": 0.05 },
            "bounce": p,
            "walk": { "trials": LAW_WALK_TRIALS, "seed": LAW_WALK_SEED, "bins": LAW_WALK_BINS, "bounded": true },
        }),
    );
    let mut csv = String::from("t,s,density,cdf\n");
    let mut masses = String::from("t,mass_at_zero,mass_at_cap,interior_integral,total\n");
    for t in LAW_TIMES {
        let law = truncated_stake_law(t, &p)?;
        for k in 0..=640 {
            let s = k as f64 * 0.05;
            let _ = writeln!(
                csv,
                "{t},{},{},{}",
                fmt_f64(s),
                fmt_f64(law.density(s)),
                fmt_f64(law.cdf(s))
            );
        }
        let interior = law.integrated_density(1e-12);
        let total = law.mass_at_zero + law.mass_at_cap + interior;
        let _ = writeln!(
            masses,
            "{t},{},{},{},{}",
            fmt_f64(law.mass_at_zero),
            fmt_f64(law.mass_at_cap),
            fmt_f64(interior),
            fmt_f64(total)
        );
        data.measure(format!("law.total.t={t}"), total);
    }
    data.tables.push(("fig-truncated-law.csv".into(), csv));
    data.tables.push(("fig-truncated-law-masses.csv".into(), masses));

    let epochs: Vec<u64> = LAW_TIMES.iter().map(|&t| t as u64).collect();
    let walk =
        WalkConfig::new(LAW_P0, *epochs.last().unwrap(), LAW_WALK_TRIALS, LAW_WALK_SEED, true).with_samples(&epochs);
    let samples = monte_carlo_walk(&walk)?;
    data.tables.push((
        "fig-truncated-law-walk.csv".into(),
        samples.stake_histogram_csv(LAW_WALK_BINS),
    ));
    Ok(data)
}

const CROSSING_BETAS: [f64; 5] = [0.2, 0.25, 0.3, 0.33, 1.0 / 3.0];
const CROSSING_P0: f64 = 0.5;
const CROSSING_J: u32 = 8;

fn crossing() -> Result<Dataset> {
    let mut data = Dataset::new(
        ReproductionTarget::FigCrossingProbability,
        json!({
            "p0": CROSSING_P0,
            "beta0": CROSSING_BETAS,
            "j": CROSSING_J,
            "t": { "start": 100, "stop": 7000, "step": 100 },
        }),
    );
    let mut csv = String::from("beta0,t,single_branch,doubled_heuristic,continuation_log10\n");
    for beta0 in CROSSING_BETAS {
        let p = BounceParams::new(CROSSING_P0, beta0)?;
        for t in (100..=7000u64).step_by(100) {
            let c = crossing_probability(beta0, t as f64, &p)?;
            let cont = continuation_probability(beta0, CROSSING_J, t)?;
            let _ = writeln!(
                csv,
                "{},{t},{},{},{}",
                fmt_f64(beta0),
                fmt_f64(c.single_branch),
                fmt_f64(c.doubled_heuristic),
                fmt_f64(cont.log10)
            );
        }
    }
    data.tables.push(("fig-crossing-probability.csv".into(), csv));

    let cont = continuation_probability(1.0 / 3.0, CROSSING_J, 7000)?;
    data.measure("crossing.continuation.k=7000", cont.value());
    data.note("log10 continuation probability, beta0 = 1/3, k = 7000", cont.log10);

    let p = BounceParams::new(CROSSING_P0, 1.0 / 3.0)?;
    let probs = (200..=3000)
        .map(|t| crossing_probability(1.0 / 3.0, t as f64, &p).map(|c| c.single_branch))
        .collect::<leaklab_core::Result<Vec<_>>>()?;
    data.measure(
        "crossing.min.t=200..3000",
        probs.iter().copied().fold(f64::INFINITY, f64::min),
    );
    data.measure(
        "crossing.max.t=200..3000",
        probs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    Ok(data)
}
