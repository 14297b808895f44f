use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;

use anyhow::{bail, Context, Result};

use pubdev_core::corpus::{
    apply_filters, generate_synthetic_corpus, write_projects, FilterConfig, SynthSpec,
};
use pubdev_core::eval::{
    baseline_bottom, baseline_top, cross_validate, misclassification_report, precision_recall,
    write_reports_csv, ConfusionMatrix, EvalReport, RefineConfig,
};
use pubdev_core::features::{featurize_dataset, FeatureSchema};
use pubdev_core::par::Execution;
use pubdev_core::tree::{render_text, save_tree, train, TrainParams};
use pubdev_core::triage::{
    flag_leaves_explicit, leaf_statistics, select_flag_leaves, TriageSession,
};

use crate::args::*;

// Stdout writes that surface a closed pipe as an error instead of a panic.
macro_rules! put {
    ($($arg:tt)*) => {
        write!(std::io::stdout().lock(), $($arg)*)?
    };
}

macro_rules! out {
    ($($arg:tt)*) => {
        writeln!(std::io::stdout().lock(), $($arg)*)?
    };
}
use crate::io::{csv_bytes, format_of, load_dataset, load_model, load_schema, write_output};

struct Ctx {
    schema: FeatureSchema,
    exec: Execution,
}

pub fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx {
        schema: load_schema(cli.schema.as_ref())?,
        exec: if cli.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        },
    };
    match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Featurize(a) => featurize(&ctx, a),
        Command::Train(a) => train_cmd(&ctx, a),
        Command::Classify(a) => classify(&ctx, a),
        Command::Eval(a) => eval(&ctx, a),
        Command::Cv(a) => cv(&ctx, a),
        Command::Baseline(a) => baseline(a),
        Command::Report(a) => report(&ctx, a),
        Command::Triage(TriageCommand::Prepare(a)) => triage_prepare(&ctx, a),
        Command::Triage(TriageCommand::Serve(a)) => triage_serve(a),
        Command::Triage(TriageCommand::Export(a)) => triage_export(a),
        Command::Synth(a) => synth(&ctx, a),
    }
}

fn params(a: &TrainParamsArgs) -> Result<TrainParams> {
    let p = TrainParams {
        confidence_factor: a.cf,
        min_leaf: a.min_leaf,
        max_depth: a.max_depth,
    };
    p.validate()?;
    Ok(p)
}

fn fmt_metric(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}"))
        .unwrap_or_else(|| "undefined".into())
}

fn report_line(r: &EvalReport) -> String {
    let m = &r.matrix;
    format!(
        "{}: precision {} recall {} f1 {} (tp {} fp {} fn {} tn {})",
        r.strategy,
        fmt_metric(r.precision),
        fmt_metric(r.recall),
        fmt_metric(r.f1),
        m.tp,
        m.fp,
        m.fn_,
        m.tn
    )
}

fn reports_csv(reports: &[EvalReport]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_reports_csv(reports, &mut buf)?;
    Ok(buf)
}

fn ingest(a: IngestArgs) -> Result<()> {
    let ds = load_dataset(&a.data)?;
    let cfg = FilterConfig {
        drop_forks: !a.keep_forks,
        drop_removed: !a.keep_removed,
        drop_non_english: a.drop_non_english,
        ..FilterConfig::default()
    };
    let (kept, excluded) = apply_filters(&ds, &cfg)?;
    log::info!(
        "kept {} of {}: dropped {} forks, {} removed, {} non-English",
        kept.len(),
        ds.len(),
        excluded.fork,
        excluded.removed,
        excluded.non_english
    );
    let format = format_of(&a.out, a.out_format.as_deref())?;
    let mut buf = Vec::new();
    write_projects(&kept, &mut buf, format)?;
    write_output(Some(&a.out), &buf)
}

fn featurize(ctx: &Ctx, a: FeaturizeArgs) -> Result<()> {
    let ds = load_dataset(&a.data)?;
    let (matrix, labels) = featurize_dataset(&ds, &ctx.schema, ctx.exec);
    let bytes = csv_bytes(|w| {
        let mut header = vec!["project_id".to_string(), "label".to_string()];
        header.extend(ctx.schema.feature_names().iter().cloned());
        w.write_record(&header)?;
        for ((rec, fv), label) in ds.records().iter().zip(&matrix).zip(&labels) {
            let mut row = vec![
                rec.project_id.clone(),
                label.map(|l| l.as_str().to_string()).unwrap_or_default(),
            ];
            row.extend(fv.values().iter().map(u64::to_string));
            w.write_record(&row)?;
        }
        Ok(())
    })?;
    write_output(a.out.as_deref(), &bytes)
}

fn train_cmd(ctx: &Ctx, a: TrainArgs) -> Result<()> {
    let p = params(&a.params)?;
    let ds = load_dataset(&a.data)?;
    let (matrix, labels) = featurize_dataset(&ds, &ctx.schema, ctx.exec);
    let tree = train(&matrix, &labels, &p)?;
    log::info!(
        "trained at cf {}: {} leaves, depth {}",
        p.confidence_factor,
        tree.leaf_count(),
        tree.depth()
    );
    write_output(Some(&a.out), &save_tree(&tree))?;
    if a.print {
        put!("{}", render_text(&tree));
    }
    Ok(())
}

fn classify(ctx: &Ctx, a: ClassifyArgs) -> Result<()> {
    let tree = load_model(&a.model.model, &ctx.schema)?;
    let ds = load_dataset(&a.data)?;
    let (matrix, _) = featurize_dataset(&ds, &ctx.schema, ctx.exec);
    let preds = tree.classify_all(&matrix, ctx.exec)?;
    let bytes = csv_bytes(|w| {
        w.write_record(["project_id", "predicted", "leaf_id", "confidence"])?;
        for (rec, p) in ds.records().iter().zip(&preds) {
            w.write_record([
                rec.project_id.as_str(),
                p.class.as_str(),
                &p.leaf_id.to_string(),
                &format!("{:.6}", p.confidence),
            ])?;
        }
        Ok(())
    })?;
    write_output(a.out.as_deref(), &bytes)
}

fn eval(ctx: &Ctx, a: EvalArgs) -> Result<()> {
    let tree = load_model(&a.model.model, &ctx.schema)?;
    let ds = load_dataset(&a.data)?;
    let truth = ds.require_labels()?;
    let (matrix, _) = featurize_dataset(&ds, &ctx.schema, ctx.exec);
    let preds = tree.classify_all(&matrix, ctx.exec)?;
    let mut m = ConfusionMatrix::default();
    for (p, t) in preds.iter().zip(truth) {
        m.record(p.class, t);
    }
    let r = precision_recall(&m, format!("model {}", a.model.model));
    out!("{}", report_line(&r));
    if let Some(out) = &a.out {
        write_output(Some(out), &reports_csv(&[r])?)?;
    }
    Ok(())
}

fn cv(ctx: &Ctx, a: CvArgs) -> Result<()> {
    let p = params(&a.params)?;
    let ds = load_dataset(&a.data)?;
    let (matrix, labels) = featurize_dataset(&ds, &ctx.schema, ctx.exec);
    let r = cross_validate(&matrix, &labels, a.k, &p, a.seed, ctx.exec)?;
    let mut text = String::new();
    for f in &r.per_fold {
        writeln!(text, "{}", report_line(f))?;
    }
    writeln!(text, "{}", report_line(&r.pooled))?;
    writeln!(
        text,
        "per-fold precision {} ± {}, recall {} ± {}",
        fmt_metric(r.precision_mean),
        fmt_metric(r.precision_stddev),
        fmt_metric(r.recall_mean),
        fmt_metric(r.recall_stddev)
    )?;
    put!("{text}");
    if let Some(out) = &a.out {
        let mut all = r.per_fold.clone();
        all.push(r.pooled.clone());
        write_output(Some(out), &reports_csv(&all)?)?;
    }
    Ok(())
}

fn baseline(a: BaselineArgs) -> Result<()> {
    let ds = load_dataset(&a.data)?;
    let mut reports = Vec::with_capacity(a.fraction.len());
    for &p in &a.fraction {
        let r = match a.strategy {
            Strategy::Top => baseline_top(&ds, a.dimension, p)?,
            Strategy::Bottom => baseline_bottom(&ds, a.dimension, p)?,
        };
        out!("{}", report_line(&r));
        reports.push(r);
    }
    if let Some(out) = &a.out {
        write_output(Some(out), &reports_csv(&reports)?)?;
    }
    Ok(())
}

fn report(ctx: &Ctx, a: ReportArgs) -> Result<()> {
    let tree = load_model(&a.model.model, &ctx.schema)?;
    let ds = load_dataset(&a.data)?;
    let (matrix, labels) = featurize_dataset(&ds, &ctx.schema, ctx.exec);
    let cfg = RefineConfig {
        misclassification_threshold: a.threshold,
        top_ngrams: a.top,
    };
    let r = misclassification_report(&tree, &matrix, &labels, &ds, &ctx.schema, &cfg)?;
    out!(
        "{} of {} misclassified ({:.1}%), threshold {:.1}%: {}",
        r.n_misclassified,
        r.n_total,
        r.rate * 100.0,
        r.threshold * 100.0,
        if r.threshold_exceeded {
            "exceeded, refine the lexicon"
        } else {
            "met"
        }
    );
    for c in &r.candidates {
        out!("{:>6}  {}", c.count, c.ngram);
    }
    if let Some(out) = &a.out {
        let mut bytes = serde_json::to_vec_pretty(&r)?;
        bytes.push(b'\n');
        write_output(Some(out), &bytes)?;
    }
    Ok(())
}

fn triage_prepare(ctx: &Ctx, a: PrepareArgs) -> Result<()> {
    let tree = load_model(&a.model.model, &ctx.schema)?;
    let ds = load_dataset(&a.data)?;
    let (matrix, labels) = featurize_dataset(&ds, &ctx.schema, ctx.exec);
    let stats = leaf_statistics(&tree, &matrix, &labels)?;
    let flags = if a.leaves.is_empty() {
        if labels.iter().all(Option::is_none) {
            bail!("greedy leaf selection needs labeled input; pass --leaves instead");
        }
        select_flag_leaves(&stats, a.coverage, a.budget, ds.len())?
    } else {
        flag_leaves_explicit(&stats, &a.leaves, ds.len())?
    };
    if let Some(d) = &flags.diagnostic {
        log::warn!("{d}");
    }
    log::info!(
        "flagged leaves {:?}: coverage {:.3}, effort {:.3}",
        flags.flagged_leaf_ids,
        flags.coverage,
        flags.effort
    );
    let mut session = TriageSession::prepare(a.session_id, tree, flags, &ds, &matrix)?;
    if let Some(p) = &a.criteria {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        session = session.with_criteria(text);
    }
    out!(
        "{} records queued for review, {} auto-classified",
        session.queue().len(),
        session.auto().len()
    );
    write_output(Some(&a.out), &session.to_json())
}

fn open_session(session: &std::path::Path, labels: &std::path::Path) -> Result<TriageSession> {
    let bytes = fs::read(session).with_context(|| format!("reading {}", session.display()))?;
    let mut s = TriageSession::from_json(&bytes)
        .with_context(|| format!("session {}", session.display()))?;
    s.attach_store(labels)
        .with_context(|| format!("label store {}", labels.display()))?;
    Ok(s)
}

fn triage_serve(a: ServeArgs) -> Result<()> {
    let session = open_session(&a.session, &a.labels)?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let server = pubdev_server::serve_triage(session, &a.bind, a.ui.clone()).await?;
        out!("serving on http://{}", server.local_addr());
        tokio::signal::ctrl_c().await?;
        server.shutdown().await?;
        Ok(())
    })
}

fn triage_export(a: ExportArgs) -> Result<()> {
    let s = open_session(&a.session, &a.labels)?;
    let mut buf = Vec::new();
    for rec in s.export_records() {
        serde_json::to_writer(&mut buf, &rec)?;
        buf.push(b'\n');
    }
    write_output(a.out.as_deref(), &buf)
}

fn synth(ctx: &Ctx, a: SynthArgs) -> Result<()> {
    let tree = load_model(&a.model.model, &ctx.schema)?;
    let spec = SynthSpec::new(a.n, a.seed).with_noise(a.noise);
    let ds = generate_synthetic_corpus(&spec, &tree, &ctx.schema)?;
    let format = format_of(&a.out, a.out_format.as_deref())?;
    let mut buf = Vec::new();
    write_projects(&ds, &mut buf, format)?;
    write_output(Some(&a.out), &buf)
}
