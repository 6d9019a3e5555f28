//! Subcommand implementations.

use std::path::{Path, PathBuf};
use std::time::Instant;

use icegraph_core::baseline::{fit_baseline, labeled_stats, BaselineCuts, LabeledStats};
use icegraph_core::geometry::build_standard_geometry;
use icegraph_core::metrics::{evaluate, report_from_scores, OperatingPoint};
use icegraph_core::sim::Simulator;
use icegraph_core::training::{initial_model, select_final, split_dataset, train};
use icegraph_core::{DetectorGeometry, SplitSpec};

use crate::cli::{
    BaselineCommand, BaselineEvalArgs, BaselineTuneArgs, Cli, Command, CompareArgs, EvalArgs, GeomCommand, SimArgs,
    SplitArgs, TrainArgs,
};
use crate::config::{render_sim_config, render_train_config, sim_config, train_config};
use crate::error::{CliError, CliResult};
use crate::formats::cuts::{parse_statistic, statistic_name, CutsFile};
use crate::formats::events::{load_events, save_events, truth_path};
use crate::formats::geometry::{load_geometry, render_geometry, save_geometry};
use crate::formats::keyvalue::KeyValues;
use crate::formats::model::{load_model, save_model};
use crate::formats::report::{render_roc, render_train_report, Comparison, Summary};
use crate::formats::write_text;
use crate::manifest::{sha256_hex, RunManifest};
use crate::parallel::RayonExecutor;

pub fn dispatch(cli: Cli) -> CliResult<()> {
    let exec = RayonExecutor::new(cli.threads)?;
    let threads = cli.threads;
    match cli.command {
        Command::Geom(GeomCommand::Build { out }) => geom_build(&out),
        Command::Geom(GeomCommand::Validate { path }) => geom_validate(&path),
        Command::Sim(args) => sim(&args, &exec, threads),
        Command::Split(args) => split(&args),
        Command::Train(args) => train_cmd(&args, &exec, threads),
        Command::Eval(args) => eval(&args, &exec, threads),
        Command::Baseline(BaselineCommand::Tune(args)) => baseline_tune(&args),
        Command::Baseline(BaselineCommand::Eval(args)) => baseline_eval(&args),
        Command::Compare(args) => compare(&args),
    }
}

fn geom_build(out: &Path) -> CliResult<()> {
    let mut manifest = RunManifest::start("geom build");
    let g = build_standard_geometry();
    save_geometry(&g, out)?;
    manifest.setting("doms", g.len());
    manifest.output("geometry", out);
    manifest.finish(out)?;
    Ok(())
}

fn geom_validate(path: &Path) -> CliResult<()> {
    let g = load_geometry(path)?;
    let strings = g.string_ids().len();
    println!("{}: {} modules on {} strings", path.display(), g.len(), strings);
    Ok(())
}

fn sim(args: &SimArgs, exec: &RayonExecutor, threads: usize) -> CliResult<()> {
    let mut manifest = RunManifest::start("sim");
    manifest.input("geometry", &args.geom)?;
    let kv = match &args.config {
        Some(path) => {
            manifest.input("config", path)?;
            KeyValues::load(path)?
        }
        None => KeyValues::empty(),
    };
    let mut config = sim_config(&kv)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let geometry = load_geometry(&args.geom)?;
    let simulator = Simulator::new(config.clone(), &geometry)?;
    let events = simulator.generate_dataset(args.n_signal, args.n_background, exec)?;
    save_events(&events, &args.out)?;

    manifest.seed = Some(config.seed);
    manifest.config_lines(&render_sim_config(&config));
    manifest.setting("n_signal", args.n_signal);
    manifest.setting("n_background", args.n_background);
    manifest.setting("threads", threads);
    manifest.output("events", &args.out);
    manifest.output("truth", &truth_path(&args.out));
    manifest.finish(&args.out)?;
    Ok(())
}

fn split(args: &SplitArgs) -> CliResult<()> {
    let mut manifest = RunManifest::start("split");
    manifest.input("events", &args.events)?;
    let spec = SplitSpec {
        train: args.fractions[0],
        validation: args.fractions[1],
        test: args.fractions[2],
        seed: args.seed,
    };
    spec.validate()?;
    let events = load_events(&args.events)?;
    let parts = split_dataset(&events, &spec)?;
    let outputs = [
        ("train", &parts.train),
        ("validation", &parts.validation),
        ("test", &parts.test),
    ];
    let mut primary = PathBuf::new();
    for (name, subset) in outputs {
        let path = args.out_dir.join(format!("{name}.events"));
        save_events(subset, &path)?;
        manifest.output(name, &path);
        manifest.setting(&format!("{name}_events"), subset.len());
        if name == "train" {
            primary = path;
        }
    }
    manifest.seed = Some(args.seed);
    manifest.setting("fractions", format!("{},{},{}", spec.train, spec.validation, spec.test));
    manifest.finish(&primary)?;
    Ok(())
}

fn train_cmd(args: &TrainArgs, exec: &RayonExecutor, threads: usize) -> CliResult<()> {
    let mut manifest = RunManifest::start("train");
    manifest.input("events", &args.events)?;
    manifest.input("validation", &args.validation)?;
    manifest.input("geometry", &args.geom)?;
    let kv = match &args.config {
        Some(path) => {
            manifest.input("config", path)?;
            KeyValues::load(path)?
        }
        None => KeyValues::empty(),
    };
    let mut config = train_config(&kv)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(w) = args.weighted_loss {
        config.weighted_loss = w;
    }
    let geometry = load_geometry(&args.geom)?;
    let train_set = load_events(&args.events)?;
    let validation = load_events(&args.validation)?;

    let init = initial_model(&config, &train_set, &geometry)?;
    let start = Instant::now();
    let mut clock = || start.elapsed().as_secs_f64();
    let (model, mut report) = train(init, &train_set, &validation, &geometry, &config, exec, &mut clock)?;
    save_model(&model, &args.out_model)?;
    report.model_path = Some(args.out_model.display().to_string());
    write_text(&args.report, &render_train_report(&report, !args.no_timing))?;

    manifest.seed = Some(config.seed);
    manifest.config_lines(&render_train_config(&config));
    manifest.setting("threads", threads);
    manifest.setting("best_epoch", report.best_epoch);
    manifest.setting("epochs_run", report.epochs.len());
    manifest.output("model", &args.out_model);
    manifest.output("report", &args.report);
    manifest.finish(&args.out_model)?;
    Ok(())
}

fn eval(args: &EvalArgs, exec: &RayonExecutor, threads: usize) -> CliResult<()> {
    let mut manifest = RunManifest::start("eval");
    let events_digest = manifest.input("events", &args.events)?;
    manifest.input("geometry", &args.geom)?;
    let mut models = Vec::with_capacity(args.model.len());
    for (i, path) in args.model.iter().enumerate() {
        manifest.input(&format!("model{i}"), path)?;
        models.push(load_model(path)?);
    }
    let geometry = load_geometry(&args.geom)?;
    let events = load_events(&args.events)?;

    let chosen = if models.len() > 1 {
        let selection = match &args.selection_events {
            Some(path) => {
                manifest.input("selection_events", path)?;
                load_events(path)?
            }
            None => events.clone(),
        };
        select_final(&models, &selection, &geometry, args.target_snr, exec)?.0
    } else {
        0
    };
    let report = evaluate(&models[chosen], &events, &geometry, args.target_snr, exec)?;
    write_text(&args.roc_out, &render_roc(&report.roc))?;
    let summary = Summary::from_report("GNN", &events_digest, events.len(), args.target_snr, &report);
    write_text(&args.summary_out, &summary.render())?;

    manifest.setting("target_snr", args.target_snr);
    manifest.setting("threads", threads);
    manifest.setting("selected_model", args.model[chosen].display());
    manifest.output("roc", &args.roc_out);
    manifest.output("summary", &args.summary_out);
    manifest.finish(&args.summary_out)?;
    Ok(())
}

fn geometry_digest(g: &DetectorGeometry) -> String {
    sha256_hex(render_geometry(g).as_bytes())
}

fn baseline_tune(args: &BaselineTuneArgs) -> CliResult<()> {
    let mut manifest = RunManifest::start("baseline tune");
    manifest.input("events", &args.events)?;
    manifest.input("geometry", &args.geom)?;
    let statistic = parse_statistic(&args.peak_statistic).ok_or_else(|| {
        CliError::Usage(format!("unknown peak statistic `{}` (mean or median)", args.peak_statistic))
    })?;
    if args.grid < 2 {
        return Err(CliError::Usage("--grid must be at least 2".into()));
    }
    let geometry = load_geometry(&args.geom)?;
    let events = load_events(&args.events)?;
    let stats = labeled_stats(&events, &geometry, statistic)?;
    let restricted: Vec<LabeledStats> = stats
        .iter()
        .filter(|e| {
            let fixed = BaselineCuts {
                cos_zenith_min: args.cos_zenith_min,
                total_charge_min: args.total_charge_min,
                ..BaselineCuts::new(f64::NEG_INFINITY, f64::NEG_INFINITY)
            };
            fixed.passes(&e.stats)
        })
        .copied()
        .collect();
    let (mut model, perf) = fit_baseline(&restricted, args.target_snr, args.grid, statistic)?;
    model.cuts.cos_zenith_min = args.cos_zenith_min;
    model.cuts.total_charge_min = args.total_charge_min;
    let file = CutsFile {
        model,
        target_snr: args.target_snr,
        geometry_sha256: geometry_digest(&geometry),
    };
    write_text(&args.out_cuts, &file.render())?;

    manifest.setting("target_snr", args.target_snr);
    manifest.setting("grid", args.grid);
    manifest.setting("peak_statistic", statistic_name(statistic));
    if let Some(v) = args.cos_zenith_min {
        manifest.setting("cos_zenith_min", v);
    }
    if let Some(v) = args.total_charge_min {
        manifest.setting("total_charge_min", v);
    }
    manifest.setting("train_signal_per_year", perf.signal_per_year);
    manifest.setting("train_background_per_year", perf.background_per_year);
    manifest.setting("train_feasible", perf.feasible);
    manifest.output("cuts", &args.out_cuts);
    manifest.finish(&args.out_cuts)?;
    Ok(())
}

fn baseline_eval(args: &BaselineEvalArgs) -> CliResult<()> {
    let mut manifest = RunManifest::start("baseline eval");
    let events_digest = manifest.input("events", &args.events)?;
    manifest.input("cuts", &args.cuts)?;
    let cuts = CutsFile::load(&args.cuts)?;
    let geometry = match &args.geom {
        Some(path) => {
            manifest.input("geometry", path)?;
            load_geometry(path)?
        }
        None => build_standard_geometry(),
    };
    if geometry_digest(&geometry) != cuts.geometry_sha256 {
        return Err(CliError::Data(format!(
            "{} was tuned on a different geometry; pass it with --geom",
            args.cuts.display()
        )));
    }
    let events = load_events(&args.events)?;
    let stats = labeled_stats(&events, &geometry, cuts.model.statistic)?;
    let perf = icegraph_core::baseline::cut_performance(&stats, &cuts.model.cuts, cuts.target_snr);
    let scored = cuts.model.scored(&stats);
    let score_report = report_from_scores(&scored, cuts.target_snr)?;
    let point = OperatingPoint {
        threshold: f64::NAN,
        signal_per_year: perf.signal_per_year,
        background_per_year: perf.background_per_year,
        snr: perf.snr,
        feasible: perf.feasible,
    };
    let summary = Summary::from_point(
        "Baseline",
        &events_digest,
        events.len(),
        cuts.target_snr,
        &point,
        score_report.auc,
    );
    write_text(&args.summary_out, &summary.render())?;
    if let Some(roc_out) = &args.roc_out {
        write_text(roc_out, &render_roc(&score_report.roc))?;
        manifest.output("roc", roc_out);
    }

    manifest.setting("peak_statistic", statistic_name(cuts.model.statistic));
    manifest.setting("target_snr", cuts.target_snr);
    manifest.output("summary", &args.summary_out);
    manifest.finish(&args.summary_out)?;
    Ok(())
}

fn compare(args: &CompareArgs) -> CliResult<()> {
    let mut manifest = RunManifest::start("compare");
    manifest.input("gnn", &args.gnn)?;
    manifest.input("baseline", &args.baseline)?;
    let comparison = Comparison::new(Summary::load(&args.baseline)?, Summary::load(&args.gnn)?)?;
    print!("{}", comparison.render_table());
    write_text(&args.csv_out, &comparison.render_csv())?;
    manifest.output("csv", &args.csv_out);
    manifest.finish(&args.csv_out)?;
    Ok(())
}
