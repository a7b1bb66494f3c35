//! Command-line front end.
//!
//! Exit codes: 0 success, 1 validation violations, 2 usage, input or format
//! errors. Diagnostics go to standard error with `file:line` locations where
//! available; reports go to standard output.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::align::IouThreshold;
use crate::consolidation::{propose, validate_consolidation};
use crate::grammar::Grammar;
use crate::metrics::{
    cost, dataset_stats, evaluate_sets, iaa_pairwise, iaa_workers, Aggregation, CostSchedule, EvalConfig, Mode,
};
use crate::model::{
    load_dataset_with, validate, write_dataset, AnnotationSet, DatasetFormat, InflectionLexicon, LoadOptions,
    VerbAnnotation,
};
use crate::propbank::{compare_propbank, load_propbank, ClassFilter};
use crate::report::{eval_table, machine_line, score_cells, table};

#[derive(Debug, Parser)]
#[command(name = "qasrl", version, about = "QA-SRL annotation toolkit")]
pub struct Cli {
    /// Modal verbs, one per line; replaces the built-in list.
    #[arg(long, global = true, value_name = "FILE")]
    pub modal_lexicon: Option<PathBuf>,
    /// Verb inflections, five forms per line, for records without verb_forms.
    #[arg(long, global = true, value_name = "FILE")]
    pub inflections: Option<PathBuf>,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = ReportFormat::Table)]
    pub format: ReportFormat,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Table,
    Machine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Ua,
    La,
    Both,
}

impl ModeArg {
    fn modes(self) -> Vec<Mode> {
        match self {
            ModeArg::Ua => vec![Mode::Unlabeled],
            ModeArg::La => vec![Mode::Labeled],
            ModeArg::Both => vec![Mode::Unlabeled, Mode::Labeled],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Gold,
    Dense,
    Parser,
}

impl From<InputFormat> for DatasetFormat {
    fn from(f: InputFormat) -> Self {
        match f {
            InputFormat::Gold => DatasetFormat::Gold,
            InputFormat::Dense => DatasetFormat::Dense,
            InputFormat::Parser => DatasetFormat::Parser,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassArg {
    All,
    Core,
    Adjunct,
    Each,
}

#[derive(Debug, Args)]
pub struct MetricArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Ua)]
    pub mode: ModeArg,
    /// Reference is unconsolidated: ignore redundant matches, collapse
    /// overlapping false positives.
    #[arg(long)]
    pub redundant: bool,
    /// Average per-predicate scores instead of summing counts.
    #[arg(long = "macro")]
    pub macro_avg: bool,
    #[arg(long, value_parser = parse_threshold, default_value = "0.5")]
    pub iou_threshold: IouThreshold,
}

impl MetricArgs {
    fn configs(&self, grammar: &Grammar) -> Vec<EvalConfig> {
        self.mode
            .modes()
            .into_iter()
            .map(|mode| EvalConfig {
                mode,
                redundant: self.redundant,
                aggregation: if self.macro_avg {
                    Aggregation::Macro
                } else {
                    Aggregation::Micro
                },
                threshold: self.iou_threshold,
                grammar: grammar.clone(),
                ..EvalConfig::default()
            })
            .collect()
    }
}

fn parse_threshold(s: &str) -> Result<IouThreshold, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s}"))?;
    IouThreshold::new(v).map_err(|e| e.to_string())
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check datasets against the schema and annotation invariants.
    Validate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long = "input-format", value_enum, default_value_t = InputFormat::Gold)]
        input_format: InputFormat,
    },
    /// Score predictions against a reference.
    Eval {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long = "gold-format", value_enum, default_value_t = InputFormat::Gold)]
        gold_format: InputFormat,
        #[arg(long = "pred-format", value_enum, default_value_t = InputFormat::Parser)]
        pred_format: InputFormat,
        #[command(flatten)]
        metric: MetricArgs,
        /// Worker threads for per-predicate scoring.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Inter-annotator agreement between two files or all workers of a dense file.
    Iaa {
        #[arg(long, requires = "b", conflicts_with = "dense")]
        a: Option<PathBuf>,
        #[arg(long, requires = "a")]
        b: Option<PathBuf>,
        #[arg(long, required_unless_present = "a")]
        dense: Option<PathBuf>,
        #[command(flatten)]
        metric: MetricArgs,
    },
    /// Dataset size and density.
    Stats {
        file: PathBuf,
        #[arg(long = "input-format", value_enum, default_value_t = InputFormat::Gold)]
        input_format: InputFormat,
    },
    /// Annotation cost from a file holding worker and consolidated annotations.
    Cost {
        file: PathBuf,
        #[arg(long, default_value_t = CostSchedule::default().generation_base)]
        generation_cents: f64,
        /// Per generated question beyond the second.
        #[arg(long, default_value_t = CostSchedule::default().generation_bonus)]
        bonus_cents: f64,
        #[arg(long, default_value_t = CostSchedule::default().consolidation_base)]
        consolidation_cents: f64,
        #[arg(long, default_value_t = CostSchedule::default().consolidation_per_question)]
        per_question_cents: f64,
    },
    /// Merge proposals for two workers' annotations; optionally check a finished consolidation.
    Consolidate {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        consolidated: Option<PathBuf>,
        /// Write conflict-free drafts as a gold dataset.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Agreement with PropBank argument spans.
    Propbank {
        #[arg(long)]
        qasrl: PathBuf,
        #[arg(long)]
        propbank: PathBuf,
        #[arg(long = "class", value_enum, default_value_t = ClassArg::Each)]
        class: ClassArg,
        #[arg(long, value_parser = parse_threshold, default_value = "0.5")]
        iou_threshold: IouThreshold,
    },
}

#[derive(Debug)]
enum Failure {
    Violations,
    Input(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.to_string())
    }
}

struct Context<'a> {
    format: ReportFormat,
    grammar: Grammar,
    inflections: Option<InflectionLexicon>,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Context<'_> {
    fn load(&mut self, path: &Path, format: DatasetFormat) -> Result<AnnotationSet, Failure> {
        let options = LoadOptions {
            format,
            inflections: self.inflections.clone(),
            grammar: self.grammar.clone(),
        };
        let loaded = load_dataset_with(path, &options)?;
        for w in &loaded.warnings {
            writeln!(self.err, "warning: {w}")?;
        }
        Ok(loaded.set)
    }

    fn emit<T: Serialize>(&mut self, value: &T) -> io::Result<()> {
        writeln!(self.out, "{}", machine_line(value))
    }
}

/// Parse `argv` (including the program name) and run; returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match execute(cli, out, err) {
        Ok(()) => 0,
        Err(Failure::Violations) => 1,
        Err(Failure::Input(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
    }
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let grammar = match &cli.modal_lexicon {
        Some(p) => Grammar::from_modal_lexicon(&read(p)?),
        None => Grammar::default(),
    };
    let inflections = match &cli.inflections {
        Some(p) => Some(InflectionLexicon::parse(&read(p)?).map_err(|e| format!("{}: {e}", p.display()))?),
        None => None,
    };
    let mut cx = Context {
        format: cli.format,
        grammar,
        inflections,
        out,
        err,
    };
    match cli.command {
        Command::Validate { files, input_format } => cmd_validate(&mut cx, &files, input_format.into()),
        Command::Eval {
            gold,
            pred,
            gold_format,
            pred_format,
            metric,
            jobs,
        } => {
            let gold = cx.load(&gold, gold_format.into())?;
            let pred = cx.load(&pred, pred_format.into())?;
            let mut reports = Vec::new();
            for cfg in metric.configs(&cx.grammar) {
                reports.push(evaluate_sets(&pred, &gold, &cfg, jobs.max(1))?);
            }
            match cx.format {
                ReportFormat::Machine => {
                    for r in &reports {
                        cx.emit(r)?;
                    }
                }
                ReportFormat::Table => write!(cx.out, "{}", eval_table(&reports))?,
            }
            Ok(())
        }
        Command::Iaa { a, b, dense, metric } => cmd_iaa(&mut cx, a.zip(b), dense, &metric),
        Command::Stats { file, input_format } => {
            let set = cx.load(&file, input_format.into())?;
            let stats = dataset_stats(&set);
            match cx.format {
                ReportFormat::Machine => cx.emit(&stats)?,
                ReportFormat::Table => {
                    let rows = vec![
                        vec!["verbs".into(), stats.verbs.to_string()],
                        vec!["questions".into(), stats.questions.to_string()],
                        vec!["answers".into(), stats.answers.to_string()],
                        vec!["questions/verb".into(), format!("{:.2}", stats.questions_per_verb)],
                        vec!["answers/question".into(), format!("{:.2}", stats.answers_per_question)],
                    ];
                    write!(cx.out, "{}", table(&["", "value"], &rows))?;
                }
            }
            Ok(())
        }
        Command::Cost {
            file,
            generation_cents,
            bonus_cents,
            consolidation_cents,
            per_question_cents,
        } => {
            let set = cx.load(&file, DatasetFormat::Dense)?;
            let schedule = CostSchedule {
                generation_base: generation_cents,
                generation_bonus: bonus_cents,
                consolidation_base: consolidation_cents,
                consolidation_per_question: per_question_cents,
            };
            let report = cost(&set, &schedule)?;
            match cx.format {
                ReportFormat::Machine => cx.emit(&report)?,
                ReportFormat::Table => {
                    let rows = vec![
                        vec!["verbs".into(), report.per_verb.len().to_string()],
                        vec!["cents/verb".into(), format!("{:.2}", report.average_cents)],
                        vec!["roles/verb".into(), format!("{:.2}", report.roles_per_verb)],
                    ];
                    write!(cx.out, "{}", table(&["", "value"], &rows))?;
                }
            }
            Ok(())
        }
        Command::Consolidate {
            a,
            b,
            consolidated,
            output,
        } => cmd_consolidate(&mut cx, &a, &b, consolidated.as_deref(), output.as_deref()),
        Command::Propbank {
            qasrl,
            propbank,
            class,
            iou_threshold,
        } => {
            let set = cx.load(&qasrl, DatasetFormat::Gold)?;
            let frames = load_propbank(&propbank)?;
            let filters = match class {
                ClassArg::All => vec![ClassFilter::All],
                ClassArg::Core => vec![ClassFilter::Core],
                ClassArg::Adjunct => vec![ClassFilter::Adjunct],
                ClassArg::Each => vec![ClassFilter::All, ClassFilter::Core, ClassFilter::Adjunct],
            };
            let mut rows = Vec::new();
            for f in filters {
                let cmp = compare_propbank(&set, &frames, f, iou_threshold)?;
                match cx.format {
                    ReportFormat::Machine => cx.emit(&cmp)?,
                    ReportFormat::Table => {
                        let mut row = vec![format!("{f:?}")];
                        row.extend(score_cells(&cmp.score));
                        row.push(cmp.predicates.to_string());
                        rows.push(row);
                    }
                }
            }
            if cx.format == ReportFormat::Table {
                write!(cx.out, "{}", table(&["", "P", "R", "F1", "predicates"], &rows))?;
            }
            Ok(())
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn cmd_validate(cx: &mut Context, files: &[PathBuf], format: DatasetFormat) -> Result<(), Failure> {
    let mut violations = 0;
    for path in files {
        let set = cx.load(path, format)?;
        let report = validate(&set);
        violations += report.len();
        match cx.format {
            ReportFormat::Machine => {
                #[derive(Serialize)]
                struct Line<'a> {
                    file: String,
                    violations: &'a [crate::model::Violation],
                }
                cx.emit(&Line {
                    file: path.display().to_string(),
                    violations: &report.violations,
                })?;
            }
            ReportFormat::Table => {
                for line in report.to_string().lines() {
                    writeln!(cx.out, "{}\t{line}", path.display())?;
                }
                writeln!(
                    cx.out,
                    "{}: {} annotations, {} violations",
                    path.display(),
                    set.annotations.len(),
                    report.len()
                )?;
            }
        }
    }
    if violations > 0 {
        Err(Failure::Violations)
    } else {
        Ok(())
    }
}

fn cmd_iaa(
    cx: &mut Context,
    pair: Option<(PathBuf, PathBuf)>,
    dense: Option<PathBuf>,
    metric: &MetricArgs,
) -> Result<(), Failure> {
    #[derive(Serialize)]
    struct Line {
        mode: Mode,
        a: String,
        b: String,
        predicates: usize,
        score: crate::metrics::Score,
    }
    let mut lines = Vec::new();
    let configs = metric.configs(&cx.grammar);
    if let Some((pa, pb)) = pair {
        let a = cx.load(&pa, DatasetFormat::Gold)?;
        let b = cx.load(&pb, DatasetFormat::Gold)?;
        let shared = {
            let ka = a.merged_by_predicate();
            b.merged_by_predicate().keys().filter(|k| ka.contains_key(*k)).count()
        };
        for cfg in &configs {
            lines.push(Line {
                mode: cfg.mode,
                a: pa.display().to_string(),
                b: pb.display().to_string(),
                predicates: shared,
                score: iaa_pairwise(&a, &b, cfg)?,
            });
        }
    } else if let Some(path) = dense {
        let set = cx.load(&path, DatasetFormat::Dense)?;
        for cfg in &configs {
            for w in iaa_workers(&set, cfg) {
                lines.push(Line {
                    mode: cfg.mode,
                    a: w.worker_a,
                    b: w.worker_b,
                    predicates: w.predicates,
                    score: w.score,
                });
            }
        }
    }
    match cx.format {
        ReportFormat::Machine => {
            for l in &lines {
                cx.emit(l)?;
            }
        }
        ReportFormat::Table => {
            let rows: Vec<Vec<String>> = lines
                .iter()
                .map(|l| {
                    let mut row = vec![l.mode.to_string(), l.a.clone(), l.b.clone()];
                    row.extend(score_cells(&l.score));
                    row.push(l.predicates.to_string());
                    row
                })
                .collect();
            write!(
                cx.out,
                "{}",
                table(&["", "A", "B", "P", "R", "F1", "predicates"], &rows)
            )?;
        }
    }
    Ok(())
}

fn cmd_consolidate(
    cx: &mut Context,
    a: &Path,
    b: &Path,
    consolidated: Option<&Path>,
    output: Option<&Path>,
) -> Result<(), Failure> {
    let sa = cx.load(a, DatasetFormat::Gold)?;
    let sb = cx.load(b, DatasetFormat::Gold)?;
    let a_by = sa.merged_by_predicate();
    let b_by = sb.merged_by_predicate();
    let mut drafts = AnnotationSet::new(false);
    let mut shared = Vec::new();
    for (key, ann_a) in &a_by {
        let Some(ann_b) = b_by.get(key) else { continue };
        let sentence = sa
            .sentence(&key.sentence_id)
            .ok_or_else(|| format!("{}: unknown sentence {}", a.display(), key.sentence_id))?;
        let proposal = propose(ann_a, ann_b, sentence, &cx.grammar)?;
        match cx.format {
            ReportFormat::Machine => cx.emit(&proposal)?,
            ReportFormat::Table => write!(cx.out, "{}", proposal.summary(sentence))?,
        }
        if let Some(qa_pairs) = proposal.merged_qas() {
            drafts.add_sentence(sentence.clone());
            drafts.annotations.push(VerbAnnotation {
                qa_pairs,
                source: crate::model::Source::Consolidated,
                ..ann_a.clone()
            });
        }
        shared.push((key.clone(), ann_a, ann_b));
    }
    if shared.is_empty() {
        return Err(Failure::Input(format!(
            "{} and {} share no predicates",
            a.display(),
            b.display()
        )));
    }
    if let Some(path) = output {
        write_dataset(&drafts, path)?;
    }

    let Some(path) = consolidated else { return Ok(()) };
    let sc = cx.load(path, DatasetFormat::Gold)?;
    let c_by = sc.merged_by_predicate();
    let mut violations = 0;
    for (key, ann_a, ann_b) in shared {
        let Some(ann_c) = c_by.get(&key) else {
            writeln!(cx.err, "warning: {}: no consolidation for {key}", path.display())?;
            continue;
        };
        let report = validate_consolidation(ann_c, [ann_a, ann_b], &cx.grammar)?;
        violations += report.violations.len();
        match cx.format {
            ReportFormat::Machine => cx.emit(&report)?,
            ReportFormat::Table => {
                for f in report.violations.iter().chain(&report.notes) {
                    writeln!(cx.out, "{key}\t{:?}\tqa {}\t{}", f.kind, f.qa, f.details)?;
                }
            }
        }
    }
    if violations > 0 {
        Err(Failure::Violations)
    } else {
        Ok(())
    }
}
