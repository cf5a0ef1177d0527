//! `leggett`: file-based front end for leggett-core.
//!
//! Exit codes: 0 success or positive verdict, 2 input error, 3 negative
//! verdict (refuted, entangled, model rejected), 4 undecided.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde_json::json;

use leggett_core::axioms::{self, AxiomModel, TripartiteModel};
use leggett_core::behavior::{bell_value, check_no_signalling, quantum_behavior, Behavior, BellFunctional, SettingsSet};
use leggett_core::crypto::{maximize_bell, membership_lp_with, MembershipOptions, Slack, Verdict};
use leggett_core::grid::build_grid;
use leggett_core::linalg::CMatrix;
use leggett_core::lp::Tolerances;
use leggett_core::separability::{ppt_check, ppt_witness, witness_value, PptClass};
use leggett_core::state::DensityMatrix;
use leggett_core::tomography::{tomographic_reconstruct, TomographyRecord};

use report::{write_json, Recorder};

#[derive(Parser)]
#[command(name = "leggett", version, about = "Crypto-nonlocal membership, axiom checks and two-qubit separability")]
struct Cli {
    /// Recorded in every report.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = TolProfile::Default)]
    tol_profile: TolProfile,
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true, env = "LEGGETT_THREADS", default_value_t = 0)]
    threads: usize,
    /// Include wall-clock stage timings in the report (makes it non-reproducible).
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TolProfile {
    Strict,
    Default,
}

impl TolProfile {
    fn name(self) -> &'static str {
        match self {
            TolProfile::Strict => "strict",
            TolProfile::Default => "default",
        }
    }

    fn lp(self) -> Tolerances {
        match self {
            TolProfile::Strict => Tolerances::strict(),
            TolProfile::Default => Tolerances::default(),
        }
    }

    fn signalling(self) -> f64 {
        match self {
            TolProfile::Strict => 1e-12,
            TolProfile::Default => 1e-10,
        }
    }
}

#[derive(Args)]
struct ReportArg {
    /// Machine-readable run report.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Quantum behavior of a state under a settings set.
    GenBehavior {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        settings: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        report: ReportArg,
    },
    /// Crypto-nonlocal membership of a behavior on a polarization grid.
    Leggett {
        #[arg(long)]
        behavior: PathBuf,
        #[arg(long)]
        settings: PathBuf,
        /// Points per side.
        #[arg(long)]
        grid: usize,
        /// `auto` (the grid's covering bound) or a value ≥ 0.
        #[arg(long, default_value = "auto")]
        slack: Slack,
        /// Where to write the Farkas certificate, if one is found.
        #[arg(long)]
        certificate: Option<PathBuf>,
        /// Where to write the subensemble model, if one is found.
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        report: ReportArg,
    },
    /// Runs the axioms on a bipartite or tripartite axiom model.
    AxiomCheck {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        report: ReportArg,
    },
    /// Alice-side Malus model of a two-qubit state.
    WeakModel {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        settings: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Accept non-positive Hermitian unit-trace operators.
        #[arg(long)]
        witness: bool,
        #[command(flatten)]
        report: ReportArg,
    },
    /// Partial-transpose separability test.
    Ppt {
        #[arg(long)]
        state: PathBuf,
        #[command(flatten)]
        report: ReportArg,
    },
    /// Value of a Bell functional (CHSH by default) on a behavior.
    Chsh {
        #[arg(long)]
        behavior: PathBuf,
        #[arg(long)]
        functional: Option<PathBuf>,
        #[command(flatten)]
        report: ReportArg,
    },
    /// Single-photon state from imperfect-polarizer statistics.
    Tomography {
        #[arg(long)]
        stats: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        report: ReportArg,
    },
    /// Maximum of a Bell functional over exact subensemble models on a grid.
    Maximize {
        #[arg(long)]
        functional: PathBuf,
        #[arg(long)]
        settings: PathBuf,
        #[arg(long)]
        grid: usize,
        #[command(flatten)]
        report: ReportArg,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Ok,
    Negative,
    Undecided,
}

impl Outcome {
    fn code(self) -> u8 {
        match self {
            Outcome::Ok => 0,
            Outcome::Negative => 3,
            Outcome::Undecided => 4,
        }
    }
}

struct Ctx {
    seed: u64,
    tol: TolProfile,
    rec: Recorder,
}

impl Ctx {
    fn load<T: DeserializeOwned>(&mut self, path: &Path) -> anyhow::Result<T> {
        let bytes = self.rec.read(path)?;
        serde_json::from_slice(&bytes).with_context(|| format!("{}: invalid input", path.display()))
    }

    fn finish(self, command: &str, report: &ReportArg, verdicts: serde_json::Value, summary: &str) -> anyhow::Result<()> {
        println!("{summary}");
        for (stage, ms) in self.rec.timings() {
            println!("  {stage}: {ms} ms");
        }
        if let Some(path) = &report.report {
            write_json(path, &self.rec.finish(command, self.seed, self.tol.name(), verdicts))?;
        }
        Ok(())
    }
}

fn verdict_outcome(v: Verdict) -> Outcome {
    match v {
        Verdict::Member => Outcome::Ok,
        Verdict::Refuted => Outcome::Negative,
        Verdict::Undecided => Outcome::Undecided,
    }
}

fn run(command: Command, mut ctx: Ctx) -> anyhow::Result<Outcome> {
    match command {
        Command::GenBehavior { state, settings, out, report } => {
            let rho: DensityMatrix = ctx.load(&state)?;
            let s: SettingsSet = ctx.load(&settings)?;
            let b = ctx.rec.stage("behavior", || quantum_behavior(&rho, &s))?;
            let ns = check_no_signalling(&b, ctx.tol.signalling());
            let mut verdicts = json!({ "noSignalling": ns });
            let mut summary = format!("behavior {}×{} written to {}; no-signalling ok: {}", b.n_alice(), b.n_bob(), out.display(), ns.ok);
            if b.n_alice() == 2 && b.n_bob() == 2 {
                let chsh = bell_value(&b, &BellFunctional::chsh())?;
                verdicts["chsh"] = json!(chsh);
                summary.push_str(&format!("; CHSH {chsh:.9}"));
            }
            write_json(&out, &b)?;
            ctx.finish("gen-behavior", &report, verdicts, &summary)?;
            Ok(Outcome::Ok)
        }
        Command::Leggett { behavior, settings, grid, slack, certificate, model, report } => {
            let b: Behavior = ctx.load(&behavior)?;
            let s: SettingsSet = ctx.load(&settings)?;
            if grid < 2 {
                anyhow::bail!("--grid must be at least 2");
            }
            let g = ctx.rec.stage("grid", || build_grid(grid))?;
            let opts = MembershipOptions { tolerances: ctx.tol.lp(), ..MembershipOptions::default() };
            let res = ctx.rec.stage("membership", || membership_lp_with(&b, &s, &g, &g, slack, &opts))?;
            if let (Some(path), Some(cert)) = (&certificate, &res.certificate) {
                write_json(path, cert)?;
            }
            if let (Some(path), Some(m)) = (&model, &res.model) {
                write_json(path, m)?;
            }
            let summary = format!(
                "{} at slack {:.6} (auto {:.6}, grid {grid}){}",
                serde_json::to_value(res.verdict)?.as_str().unwrap_or("?"),
                res.slack,
                res.auto_slack,
                if res.note.is_empty() { String::new() } else { format!(": {}", res.note) }
            );
            let outcome = verdict_outcome(res.verdict);
            ctx.finish("leggett", &report, serde_json::to_value(&res)?, &summary)?;
            Ok(outcome)
        }
        Command::AxiomCheck { model, report } => {
            let bytes = ctx.rec.read(&model)?;
            let value: serde_json::Value = serde_json::from_slice(&bytes).with_context(|| format!("{}: invalid JSON", model.display()))?;
            let tripartite = value.get("entries").and_then(|e| e.get(0)).is_some_and(|e| e.get("third").is_some());
            let checked = if tripartite {
                let m: TripartiteModel = serde_json::from_value(value).with_context(|| format!("{}: invalid tripartite model", model.display()))?;
                ctx.rec.stage("induction", || axioms::multiparty_induction_check(&m)).map(|r| (r.fully_separable, serde_json::to_value(r)))
            } else {
                let m: AxiomModel = serde_json::from_value(value).with_context(|| format!("{}: invalid axiom model", model.display()))?;
                ctx.rec.stage("enforce", || axioms::enforce_axioms(&m)).map(|r| (r.product_form, serde_json::to_value(r)))
            };
            let (outcome, verdicts, summary) = match checked {
                Ok((true, r)) => (Outcome::Ok, r?, "product form holds".to_string()),
                Ok((false, r)) => (Outcome::Negative, r?, "product form fails".to_string()),
                Err(leggett_core::Error::PremiseViolated(msg)) => {
                    (Outcome::Negative, json!({ "rejected": msg }), format!("model rejected: {msg}"))
                }
                Err(e) => return Err(e.into()),
            };
            ctx.finish("axiom-check", &report, verdicts, &summary)?;
            Ok(outcome)
        }
        Command::WeakModel { state, settings, out, witness, report } => {
            let rho = if witness {
                let m: CMatrix = ctx.load(&state)?;
                DensityMatrix::new_unchecked_positivity(m)?
            } else {
                ctx.load(&state)?
            };
            let s: SettingsSet = ctx.load(&settings)?;
            let w = ctx.rec.stage("weak-model", || axioms::weak_model(&rho, &s, witness))?;
            let reproduction = if w.witness {
                None
            } else {
                let direct = quantum_behavior(&rho, &s)?;
                Some(axioms::weak_average(&w).iter().zip(direct.table()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            };
            write_json(&out, &w)?;
            let violated = w.bob_malus_gap > 1e-9;
            let verdicts = json!({
                "witness": w.witness,
                "subensembles": w.model.entries.len(),
                "aliceMalusGap": w.alice_malus_gap,
                "bobMalusGap": w.bob_malus_gap,
                "bobMalusViolated": violated,
                "bobSignalling": w.bob_signalling,
                "reproductionError": reproduction,
            });
            let summary = format!(
                "{} subensembles; Bob-side Malus {} (gap {:.3e}), subensemble signalling {:.3e}",
                w.model.entries.len(),
                if violated { "violated" } else { "holds" },
                w.bob_malus_gap,
                w.bob_signalling
            );
            ctx.finish("weak-model", &report, verdicts, &summary)?;
            Ok(Outcome::Ok)
        }
        Command::Ppt { state, report } => {
            let rho: DensityMatrix = ctx.load(&state)?;
            let mut v = ctx.rec.stage("ppt", || ppt_check(&rho))?;
            if v.class == PptClass::Entangled {
                v.witness_value = Some(witness_value(&ppt_witness(&rho)?, &rho)?);
            }
            let name = serde_json::to_value(v.class)?;
            let summary = format!("{} (min partial-transpose eigenvalue {:.3e})", name.as_str().unwrap_or("?"), v.min_partial_transpose_eigenvalue);
            let outcome = match v.class {
                PptClass::Separable => Outcome::Ok,
                PptClass::Entangled => Outcome::Negative,
                PptClass::Boundary => Outcome::Undecided,
            };
            ctx.finish("ppt", &report, serde_json::to_value(v)?, &summary)?;
            Ok(outcome)
        }
        Command::Chsh { behavior, functional, report } => {
            let b: Behavior = ctx.load(&behavior)?;
            let f = match &functional {
                Some(p) => ctx.load(p)?,
                None => BellFunctional::chsh(),
            };
            let value = bell_value(&b, &f)?;
            ctx.finish("chsh", &report, json!({ "value": value }), &format!("value {value:.9}"))?;
            Ok(Outcome::Ok)
        }
        Command::Tomography { stats, out, report } => {
            let records: Vec<TomographyRecord> = ctx.load(&stats)?;
            let rho = ctx.rec.stage("reconstruct", || tomographic_reconstruct(&records))?;
            write_json(&out, &rho)?;
            let verdicts = json!({ "records": records.len(), "minEigenvalue": rho.min_eigenvalue() });
            ctx.finish("tomography", &report, verdicts, &format!("state reconstructed from {} records into {}", records.len(), out.display()))?;
            Ok(Outcome::Ok)
        }
        Command::Maximize { functional, settings, grid, report } => {
            let f: BellFunctional = ctx.load(&functional)?;
            let s: SettingsSet = ctx.load(&settings)?;
            if grid < 2 {
                anyhow::bail!("--grid must be at least 2");
            }
            let g = ctx.rec.stage("grid", || build_grid(grid))?;
            let opt = ctx.rec.stage("maximize", || maximize_bell(&f, &s, &g, &g))?;
            let summary = format!("maximum {:.9} over {} pairs (grid {grid})", opt.value, opt.pairs);
            ctx.finish("maximize", &report, serde_json::to_value(&opt)?, &summary)?;
            Ok(Outcome::Ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let ctx = Ctx { seed: cli.seed, tol: cli.tol_profile, rec: Recorder::new(cli.timings) };
    match run(cli.command, ctx) {
        Ok(outcome) => ExitCode::from(outcome.code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            let undecided = e.chain().any(|c| matches!(c.downcast_ref::<leggett_core::Error>(), Some(leggett_core::Error::Undecided(_))));
            ExitCode::from(if undecided { 4 } else { 2 })
        }
    }
}
