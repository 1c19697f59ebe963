//! Implementations behind the `visreg` subcommands.

use std::path::{Path, PathBuf};

use clap::Args;
use rayon::prelude::*;

use visreg_core::anchored;
use visreg_core::eval::{self, Budget, ExperimentSpec, Method};
use visreg_core::pca::{apply_pca, fit_pca, PcaReducer};
use visreg_core::similarity::build_similarity_graph;
use visreg_core::trainer;
use visreg_core::types::decode_prediction;
use visreg_core::{FeatureStore, Hyperparams, RatingScale};

use crate::config::{resolve, resolve_opt, ConfigMap};
use crate::error::{CliError, CliResult};
use crate::formats;
use crate::ingest::{self, DatasetBundle};
use crate::report::{self, ReportRow};

fn parse_scale(raw: &str) -> CliResult<RatingScale> {
    match raw {
        "binary" => Ok(RatingScale::Binary),
        "stars" => Ok(RatingScale::Stars),
        other => Err(CliError::usage(format!("--scale must be `binary` or `stars`, got `{other}`"))),
    }
}

fn load_ratings(path: &Path, format: &str, scale: Option<RatingScale>) -> CliResult<DatasetBundle> {
    match format {
        "csv" => {
            let scale = scale
                .ok_or_else(|| CliError::usage("--scale is required for csv rating files"))?;
            ingest::load_triplets(path, scale)
        }
        "movielens" => {
            if scale == Some(RatingScale::Binary) {
                return Err(CliError::usage("MovieLens files are on the star scale"));
            }
            ingest::load_movielens(path)
        }
        other => Err(CliError::usage(format!("--format must be `csv` or `movielens`, got `{other}`"))),
    }
}

/// Applies the configured PCA reduction; `energy <= 0` would have been
/// rejected earlier, and a degenerate fit (no variance at all) cannot
/// support similarity graphs, so it is reported as a data problem.
fn reduce_features(
    store: &FeatureStore,
    no_pca: bool,
    energy: f64,
) -> CliResult<(Option<PcaReducer>, FeatureStore)> {
    if no_pca {
        return Ok((None, store.clone()));
    }
    let reducer = fit_pca(store, energy)?;
    if reducer.is_degenerate() {
        return Err(CliError::usage(
            "feature vectors carry no variance; PCA is undefined (use --no-pca only with meaningful features)",
        ));
    }
    let reduced = apply_pca(&reducer, store)?;
    Ok((Some(reducer), reduced))
}

fn load_config(path: &Option<PathBuf>) -> CliResult<ConfigMap> {
    match path {
        Some(p) => ConfigMap::load(p),
        None => Ok(ConfigMap::default()),
    }
}

fn require<T>(value: Option<T>, flag: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::usage(format!("missing required flag {flag}")))
}

// ---- train ----

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Rating file (`rater_id,item_id,value` CSV or MovieLens `::` format)
    #[arg(long)]
    pub ratings: Option<PathBuf>,
    /// Rating file format: csv | movielens
    #[arg(long)]
    pub format: Option<String>,
    /// Rating scale: binary | stars
    #[arg(long)]
    pub scale: Option<String>,
    /// Enable visual regularization (needs --features)
    #[arg(long, default_value_t = false)]
    pub visreg: bool,
    /// Per-item feature vectors (text or VFEA binary)
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Skip the PCA reduction of the features
    #[arg(long, default_value_t = false)]
    pub no_pca: bool,
    /// Fraction of feature variance the PCA keeps
    #[arg(long)]
    pub pca_energy: Option<f64>,
    /// Neighbors per item in the similarity graph (0 = dense)
    #[arg(long)]
    pub knn: Option<usize>,
    /// Latent dimension
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub alpha1: Option<f64>,
    #[arg(long)]
    pub alpha2: Option<f64>,
    /// Learning rate
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub init_scale: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Drop items that received fewer ratings (0 keeps everything)
    #[arg(long)]
    pub min_received: Option<usize>,
    /// Output model file
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-epoch loss CSV (default: `<out>.loss.csv`)
    #[arg(long)]
    pub loss_report: Option<PathBuf>,
    /// `key = value` config file; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn cmd_train(args: TrainArgs) -> CliResult<()> {
    let cfg = load_config(&args.config)?;
    let ratings_path = require(
        args.ratings.or(cfg.get("ratings").map(PathBuf::from)),
        "--ratings",
    )?;
    let format = resolve(args.format, &cfg, "format", "csv".to_string())?;
    let scale_raw = resolve_opt(args.scale, &cfg, "scale")?;
    let scale = scale_raw.as_deref().map(parse_scale).transpose()?;
    let visreg = args.visreg || cfg.get_bool("visreg")?.unwrap_or(false);
    let features_path = args.features.or(cfg.get("features").map(PathBuf::from));
    let no_pca = args.no_pca || cfg.get_bool("no_pca")?.unwrap_or(false);
    let pca_energy = resolve(args.pca_energy, &cfg, "pca_energy", 0.99)?;
    let out = require(args.out.or(cfg.get("out").map(PathBuf::from)), "--out")?;
    let min_received = resolve(args.min_received, &cfg, "min_received", 0)?;
    let dim = resolve(args.dim, &cfg, "dim", visreg_core::types::DEFAULT_LATENT_DIM)?;

    if visreg && features_path.is_none() {
        return Err(CliError::usage("--visreg requires --features"));
    }

    let mut bundle = load_ratings(&ratings_path, &format, scale)?;
    if min_received > 0 {
        let (filtered, filter_report) = ingest::filter_dataset(&bundle, min_received, None)?;
        println!(
            "filtered: removed {} items, {} raters in {} rounds",
            filter_report.removed_items, filter_report.removed_raters, filter_report.rounds
        );
        bundle = filtered;
    }
    let scale = bundle.ratings.scale();

    // the star scale uses a weaker visual weight by default
    let default_alpha2 = match scale {
        RatingScale::Binary => 0.1,
        RatingScale::Stars => 0.001,
    };
    let hp = Hyperparams {
        alpha1: resolve(args.alpha1, &cfg, "alpha1", 0.1)?,
        alpha2: if visreg { resolve(args.alpha2, &cfg, "alpha2", default_alpha2)? } else { 0.0 },
        learning_rate: resolve(args.lr, &cfg, "lr", 0.01)?,
        epochs: resolve(args.epochs, &cfg, "epochs", 200)?,
        seed: resolve(args.seed, &cfg, "seed", 0)?,
        init_scale: resolve(args.init_scale, &cfg, "init_scale", 0.1)?,
        neighbor_k: resolve(args.knn, &cfg, "knn", 50)?,
        ridge_lambda: 0.1,
        ridge_kappa: 0.5,
    };
    hp.validate()?;
    if !(pca_energy > 0.0 && pca_energy <= 1.0) {
        return Err(CliError::usage(format!("--pca-energy must be in (0, 1], got {pca_energy}")));
    }

    let graph = if visreg {
        let rows = formats::load_features_any(features_path.as_ref().unwrap())?;
        let ignored = ingest::attach_features(&mut bundle, &rows)?;
        if ignored > 0 {
            println!("note: {ignored} feature rows reference unknown items");
        }
        let (_, reduced) = reduce_features(bundle.features.as_ref().unwrap(), no_pca, pca_energy)?;
        println!(
            "features: {} items, dim {} -> {}",
            reduced.num_items(),
            bundle.features.as_ref().unwrap().dim(),
            reduced.dim()
        );
        Some(build_similarity_graph(&reduced, hp.neighbor_k)?)
    } else {
        None
    };

    let (model, train_report) = trainer::train(&bundle.ratings, graph.as_ref(), &hp, dim)?;
    formats::save_model(&out, &model)?;
    formats::save_id_sidecar(&formats::sidecar_path(&out), &bundle.rater_ids, &bundle.item_ids)?;
    let loss_path = args
        .loss_report
        .or(cfg.get("loss_report").map(PathBuf::from))
        .unwrap_or_else(|| {
            let mut s = out.as_os_str().to_os_string();
            s.push(".loss.csv");
            PathBuf::from(s)
        });
    formats::save_loss_report(&loss_path, &train_report)?;

    match train_report.epoch_loss.last() {
        Some(last) => println!(
            "trained {} raters x {} items (d={dim}) for {} epochs; final loss {:.6} (data {:.6}, l2 {:.6}, visual {:.6})",
            model.num_raters(),
            model.num_items(),
            train_report.epochs_run,
            last.total,
            last.data,
            last.l2,
            last.visual
        ),
        None => println!(
            "trained {} raters x {} items (d={dim}) for 0 epochs (initialization only)",
            model.num_raters(),
            model.num_items()
        ),
    }
    println!("model: {}", out.display());
    println!("loss report: {}", loss_path.display());
    Ok(())
}

// ---- project ----

#[derive(Debug, Args)]
pub struct ProjectArgs {
    /// Trained model (`.vmf1`, with its `.ids` sidecar next to it)
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Per-item feature vectors for the training corpus
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Ridge strength
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Similarity-weighting mix in [0, 1]
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long, default_value_t = false)]
    pub no_pca: bool,
    #[arg(long)]
    pub pca_energy: Option<f64>,
    /// Cap on neighbors per anchor (0 = all other items)
    #[arg(long)]
    pub max_neighbors: Option<usize>,
    /// Output projections file
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn cmd_project(args: ProjectArgs) -> CliResult<()> {
    let cfg = load_config(&args.config)?;
    let model_path =
        require(args.model.or(cfg.get("model").map(PathBuf::from)), "--model")?;
    let features_path =
        require(args.features.or(cfg.get("features").map(PathBuf::from)), "--features")?;
    let out = require(args.out.or(cfg.get("out").map(PathBuf::from)), "--out")?;
    let no_pca = args.no_pca || cfg.get_bool("no_pca")?.unwrap_or(false);
    let pca_energy = resolve(args.pca_energy, &cfg, "pca_energy", 0.99)?;
    let max_neighbors = resolve(args.max_neighbors, &cfg, "max_neighbors", 0)?;

    let model = formats::load_model(&model_path)?;
    let (_, item_ids) = formats::load_id_sidecar(&formats::sidecar_path(&model_path))?;
    if item_ids.len() != model.num_items() {
        return Err(CliError::usage("id sidecar does not match the model's item count"));
    }

    let rows = formats::load_features_any(&features_path)?;
    let (store, _) = ingest::align_features(&rows, &item_ids)?;
    let (_, reduced) = reduce_features(&store, no_pca, pca_energy)?;

    let hp = Hyperparams {
        ridge_lambda: resolve(args.lambda, &cfg, "lambda", 0.1)?,
        ridge_kappa: resolve(args.kappa, &cfg, "kappa", 0.5)?,
        ..Hyperparams::default()
    };
    hp.validate()?;

    let projections =
        anchored::build_projections_for_factors(model.q(), &reduced, &hp, max_neighbors)?;
    formats::save_projections(&out, &projections, item_ids.externals())?;
    println!(
        "projections: {} anchors, latent d={}, feature dim {} -> {}",
        projections.num_anchors(),
        projections.d(),
        store.dim(),
        projections.feature_dim()
    );
    println!("written: {}", out.display());
    Ok(())
}

// ---- predict ----

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Training ratings (supplies the majority rating for decoding)
    #[arg(long)]
    pub ratings: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub scale: Option<String>,
    /// Warm query: external id of a trained item
    #[arg(long)]
    pub item: Option<u64>,
    /// Cold query: file with exactly one feature row
    #[arg(long)]
    pub query_features: Option<PathBuf>,
    /// Anchor projections (`.vanr`), required for cold queries
    #[arg(long)]
    pub projections: Option<PathBuf>,
    /// Training-corpus features, required for cold queries
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long, default_value_t = false)]
    pub no_pca: bool,
    #[arg(long)]
    pub pca_energy: Option<f64>,
    /// Emit raw scores instead of decoded ratings
    #[arg(long, default_value_t = false)]
    pub raw: bool,
    /// Output CSV (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn cmd_predict(args: PredictArgs) -> CliResult<()> {
    let cfg = load_config(&args.config)?;
    let model_path = require(args.model.or(cfg.get("model").map(PathBuf::from)), "--model")?;
    let ratings_path =
        require(args.ratings.or(cfg.get("ratings").map(PathBuf::from)), "--ratings")?;
    let format = resolve(args.format, &cfg, "format", "csv".to_string())?;
    let scale_raw = resolve_opt(args.scale, &cfg, "scale")?;
    let scale = scale_raw.as_deref().map(parse_scale).transpose()?;
    let no_pca = args.no_pca || cfg.get_bool("no_pca")?.unwrap_or(false);
    let pca_energy = resolve(args.pca_energy, &cfg, "pca_energy", 0.99)?;

    let model = formats::load_model(&model_path)?;
    let (rater_ids, item_ids) = formats::load_id_sidecar(&formats::sidecar_path(&model_path))?;
    if rater_ids.len() != model.num_raters() || item_ids.len() != model.num_items() {
        return Err(CliError::usage("id sidecar does not match the model"));
    }
    let bundle = load_ratings(&ratings_path, &format, scale)?;
    let majority = eval::baseline_majority(&bundle.ratings)?;
    let scale = bundle.ratings.scale();

    let raw_scores: Vec<f64> = match (&args.item, &args.query_features) {
        (Some(ext), None) => {
            let item = item_ids.get(*ext).ok_or_else(|| {
                CliError::usage(format!("item {ext} is not part of the trained model"))
            })? as usize;
            (0..model.num_raters())
                .map(|m| visreg_core::predict_rating(&model, m, item))
                .collect::<Result<_, _>>()?
        }
        (None, Some(query_path)) => {
            let projections_path = require(
                args.projections.or(cfg.get("projections").map(PathBuf::from)),
                "--projections",
            )?;
            let features_path = require(
                args.features.or(cfg.get("features").map(PathBuf::from)),
                "--features",
            )?;
            let (projections, _anchor_ids) = formats::load_projections(&projections_path)?;
            let rows = formats::load_features_any(&features_path)?;
            let (store, _) = ingest::align_features(&rows, &item_ids)?;
            let (reducer, reduced) = reduce_features(&store, no_pca, pca_energy)?;
            if projections.feature_dim() != reduced.dim() {
                return Err(CliError::usage(format!(
                    "projections expect feature dim {}, the reduced corpus has {}; \
                     use the same --pca flags as `visreg project`",
                    projections.feature_dim(),
                    reduced.dim()
                )));
            }
            let query_rows = formats::load_features_any(query_path)?;
            if query_rows.len() != 1 {
                return Err(CliError::usage(format!(
                    "--query-features must hold exactly one row, got {}",
                    query_rows.len()
                )));
            }
            if query_rows[0].1.len() != store.dim() {
                return Err(CliError::usage(format!(
                    "query has dimension {}, the corpus has {}",
                    query_rows[0].1.len(),
                    store.dim()
                )));
            }
            let query = match &reducer {
                Some(r) => r.project(&query_rows[0].1)?,
                None => query_rows[0].1.clone(),
            };
            let q_hat = anchored::regress_query(&query, &projections, &reduced)?;
            (0..model.num_raters())
                .map(|m| visreg_core::linalg::dot(model.p_factor(m), &q_hat))
                .collect()
        }
        (Some(_), Some(_)) => {
            return Err(CliError::usage("--item and --query-features are mutually exclusive"))
        }
        (None, None) => {
            return Err(CliError::usage("predict needs either --item or --query-features"))
        }
    };

    let mut out = String::from("rater_id,prediction\n");
    for (m, &score) in raw_scores.iter().enumerate() {
        let value = if args.raw { score } else { decode_prediction(score, scale, majority) };
        out.push_str(&format!("{},{}\n", rater_ids.external(m as u32), value));
    }
    match &args.out {
        Some(path) => std::fs::write(path, out)?,
        None => print!("{out}"),
    }
    Ok(())
}

// ---- evaluate ----

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub ratings: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub scale: Option<String>,
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long, default_value_t = false)]
    pub no_pca: bool,
    #[arg(long)]
    pub pca_energy: Option<f64>,
    /// Comma list of known-rating budgets, e.g. `0,10,100,full`
    #[arg(long)]
    pub budgets: Option<String>,
    /// Comma list of seeds, e.g. `0,1,2`
    #[arg(long)]
    pub seeds: Option<String>,
    /// Comma list of methods: mf | visreg
    #[arg(long)]
    pub methods: Option<String>,
    /// Skip the anchored-regression path for the zero budget
    #[arg(long, default_value_t = false)]
    pub no_coldstart: bool,
    /// Exit nonzero unless MF+VisReg beats MF at every finite budget
    #[arg(long, default_value_t = false)]
    pub assert_visreg_gain: bool,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub alpha1: Option<f64>,
    #[arg(long)]
    pub alpha2: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub init_scale: Option<f64>,
    #[arg(long)]
    pub knn: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Items need at least this many ratings to enter the split
    #[arg(long)]
    pub min_received: Option<usize>,
    /// Output CSV
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional JSON mirror of the CSV
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn parse_methods(raw: &str) -> CliResult<Vec<Method>> {
    let mut methods = Vec::new();
    for part in raw.split(',') {
        match part.trim() {
            "" => continue,
            "mf" => methods.push(Method::Mf),
            "visreg" => methods.push(Method::MfVisReg),
            other => {
                return Err(CliError::usage(format!("--methods entries are mf|visreg, got `{other}`")))
            }
        }
    }
    if methods.is_empty() {
        return Err(CliError::usage("method list is empty"));
    }
    Ok(methods)
}

fn parse_seeds(raw: &str) -> CliResult<Vec<u64>> {
    let mut seeds = Vec::new();
    for part in raw.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        seeds.push(part.parse::<u64>().map_err(|_| {
            CliError::usage(format!("seed `{part}` is not an integer"))
        })?);
    }
    if seeds.is_empty() {
        return Err(CliError::usage("seed list is empty"));
    }
    Ok(seeds)
}

pub fn cmd_evaluate(args: EvaluateArgs) -> CliResult<()> {
    let cfg = load_config(&args.config)?;
    let ratings_path =
        require(args.ratings.or(cfg.get("ratings").map(PathBuf::from)), "--ratings")?;
    let format = resolve(args.format, &cfg, "format", "csv".to_string())?;
    let scale_raw = resolve_opt(args.scale, &cfg, "scale")?;
    let scale = scale_raw.as_deref().map(parse_scale).transpose()?;
    let features_path = args.features.or(cfg.get("features").map(PathBuf::from));
    let no_pca = args.no_pca || cfg.get_bool("no_pca")?.unwrap_or(false);
    let pca_energy = resolve(args.pca_energy, &cfg, "pca_energy", 0.99)?;
    let budgets = report::parse_budgets(&resolve(
        args.budgets,
        &cfg,
        "budgets",
        "0,10,100,full".to_string(),
    )?)?;
    let seeds = parse_seeds(&resolve(args.seeds, &cfg, "seeds", "0".to_string())?)?;
    let methods = parse_methods(&resolve(args.methods, &cfg, "methods", "mf,visreg".to_string())?)?;
    let no_coldstart = args.no_coldstart || cfg.get_bool("no_coldstart")?.unwrap_or(false);
    let dim = resolve(args.dim, &cfg, "dim", visreg_core::types::DEFAULT_LATENT_DIM)?;
    let min_received = resolve(args.min_received, &cfg, "min_received", 10)?;
    let out = require(args.out.or(cfg.get("out").map(PathBuf::from)), "--out")?;

    let mut bundle = load_ratings(&ratings_path, &format, scale)?;
    let default_alpha2 = match bundle.ratings.scale() {
        RatingScale::Binary => 0.1,
        RatingScale::Stars => 0.001,
    };
    let base_hp = Hyperparams {
        alpha1: resolve(args.alpha1, &cfg, "alpha1", 0.1)?,
        alpha2: resolve(args.alpha2, &cfg, "alpha2", default_alpha2)?,
        learning_rate: resolve(args.lr, &cfg, "lr", 0.01)?,
        epochs: resolve(args.epochs, &cfg, "epochs", 200)?,
        seed: 0,
        init_scale: resolve(args.init_scale, &cfg, "init_scale", 0.1)?,
        neighbor_k: resolve(args.knn, &cfg, "knn", 50)?,
        ridge_lambda: resolve(args.lambda, &cfg, "lambda", 0.1)?,
        ridge_kappa: resolve(args.kappa, &cfg, "kappa", 0.5)?,
    };
    base_hp.validate()?;

    let uses_coldstart = budgets.contains(&Budget::Visual) && !no_coldstart;
    let needs_features = methods.contains(&Method::MfVisReg) || uses_coldstart;
    let reduced = if let Some(path) = &features_path {
        let rows = formats::load_features_any(path)?;
        ingest::attach_features(&mut bundle, &rows)?;
        let (_, reduced) = reduce_features(bundle.features.as_ref().unwrap(), no_pca, pca_energy)?;
        Some(reduced)
    } else {
        if needs_features {
            return Err(CliError::usage(
                "--features is required for visual regularization or zero-budget cold start",
            ));
        }
        None
    };

    let mut runs = Vec::new();
    for &method in &methods {
        for &budget in &budgets {
            for &seed in &seeds {
                runs.push((method, budget, seed));
            }
        }
    }

    let pool = thread_pool()?;
    let results: Vec<CliResult<ReportRow>> = pool.install(|| {
        runs.par_iter()
            .map(|&(method, budget, seed)| {
                let hp = Hyperparams { seed, ..base_hp.clone() };
                let spec = ExperimentSpec {
                    method,
                    budget,
                    coldstart: budget == Budget::Visual && !no_coldstart,
                    latent_dim: dim,
                    min_received,
                };
                let report =
                    eval::run_experiment(&bundle.ratings, reduced.as_ref(), &hp, spec)?;
                Ok(ReportRow::from(&report))
            })
            .collect()
    });
    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        rows.push(r?);
    }
    report::sort_rows(&mut rows);
    report::write_csv(&out, &rows)?;
    if let Some(json_path) = &args.json {
        report::write_json(json_path, &rows)?;
    }

    for budget in report::budgets_in(&rows) {
        let mf = report::mean_accuracy(&rows, "MF", &budget);
        let vis = report::mean_accuracy(&rows, "MF+VisReg", &budget);
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".into());
        println!("budget {:>5}: MF acc {:>7}  MF+VisReg acc {:>7}", budget, fmt(mf), fmt(vis));
    }
    println!("report: {}", out.display());

    if args.assert_visreg_gain || cfg.get_bool("assert_visreg_gain")?.unwrap_or(false) {
        assert_visreg_gain(&rows)?;
        println!("visreg gain assertion passed");
    }
    Ok(())
}

/// MF+VisReg must strictly beat MF in mean accuracy at every finite
/// nonzero budget present in the report.
fn assert_visreg_gain(rows: &[ReportRow]) -> CliResult<()> {
    let finite: Vec<String> = report::budgets_in(rows)
        .into_iter()
        .filter(|b| b != "full" && b != "0")
        .collect();
    if finite.is_empty() {
        return Err(CliError::usage(
            "--assert-visreg-gain needs at least one finite nonzero budget",
        ));
    }
    for budget in finite {
        let mf = report::mean_accuracy(rows, "MF", &budget)
            .ok_or_else(|| CliError::usage("--assert-visreg-gain needs the mf method"))?;
        let vis = report::mean_accuracy(rows, "MF+VisReg", &budget)
            .ok_or_else(|| CliError::usage("--assert-visreg-gain needs the visreg method"))?;
        if vis <= mf {
            return Err(CliError::runtime(format!(
                "visreg gain assertion failed at budget {budget}: MF+VisReg {vis:.2} <= MF {mf:.2}"
            )));
        }
    }
    Ok(())
}

/// Rayon pool sized by `VISREG_THREADS` when set.
fn thread_pool() -> CliResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var("VISREG_THREADS") {
        let n: usize = raw
            .parse()
            .map_err(|_| CliError::usage(format!("VISREG_THREADS=`{raw}` is not a number")))?;
        if n == 0 {
            return Err(CliError::usage("VISREG_THREADS must be at least 1"));
        }
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::runtime(format!("thread pool: {e}")))
}

// ---- analyze ----

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub ratings: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub scale: Option<String>,
    /// Demographics CSV `subject_id,age,group`
    #[arg(long)]
    pub demographics: Option<PathBuf>,
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long, default_value_t = false)]
    pub no_pca: bool,
    #[arg(long)]
    pub pca_energy: Option<f64>,
    /// Trained model for latent-space analyses
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output directory for the analysis CSVs
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Emit the age-by-age positive-rate table
    #[arg(long, default_value_t = false)]
    pub preference_by_age: bool,
    /// Age bin edges, e.g. `18,25,30,37`
    #[arg(long)]
    pub age_bins: Option<String>,
    /// Emit the neighborhood hotness curve
    #[arg(long, default_value_t = false)]
    pub hotness_paradox: bool,
    /// Neighborhood sizes, e.g. `1,10,100`
    #[arg(long)]
    pub sizes: Option<String>,
    /// Similarity space for the paradox curve: features | latent | both
    #[arg(long)]
    pub neighbors: Option<String>,
    /// Emit the 2-D latent projection of the item factors
    #[arg(long, default_value_t = false)]
    pub latent_2d: bool,
    /// Point labels for the 2-D export: hotness | age | none
    #[arg(long)]
    pub labels: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn cmd_analyze(args: AnalyzeArgs) -> CliResult<()> {
    let cfg = load_config(&args.config)?;
    let ratings_path =
        require(args.ratings.or(cfg.get("ratings").map(PathBuf::from)), "--ratings")?;
    let format = resolve(args.format, &cfg, "format", "csv".to_string())?;
    let scale_raw = resolve_opt(args.scale, &cfg, "scale")?;
    let scale = scale_raw.as_deref().map(parse_scale).transpose()?;
    let out_dir = require(args.out_dir.or(cfg.get("out_dir").map(PathBuf::from)), "--out-dir")?;
    let no_pca = args.no_pca || cfg.get_bool("no_pca")?.unwrap_or(false);
    let pca_energy = resolve(args.pca_energy, &cfg, "pca_energy", 0.99)?;

    if !(args.preference_by_age || args.hotness_paradox || args.latent_2d) {
        return Err(CliError::usage(
            "pick at least one analysis: --preference-by-age, --hotness-paradox, --latent-2d",
        ));
    }

    let mut bundle = load_ratings(&ratings_path, &format, scale)?;
    if let Some(demo_path) = &args.demographics {
        ingest::load_demographics(demo_path, &mut bundle)?;
    }
    std::fs::create_dir_all(&out_dir)?;

    if args.preference_by_age {
        let demo = bundle.demographics.as_ref().ok_or_else(|| {
            CliError::usage("--preference-by-age requires --demographics")
        })?;
        let edges_raw = require(
            args.age_bins.clone().or(cfg.get("age_bins").map(String::from)),
            "--age-bins",
        )?;
        let edges: Vec<f64> = edges_raw
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::usage(format!("age bin edge `{p}` is not a number")))
            })
            .collect::<CliResult<_>>()?;
        let table = visreg_core::analysis::preference_by_age(&bundle.ratings, demo, &edges)?;
        let path = out_dir.join("preference_by_age.csv");
        let mut out =
            String::from("rater_bin_lo,rater_bin_hi,item_bin_lo,item_bin_hi,positive_pct,count\n");
        let bins = edges.len() - 1;
        for i in 0..bins {
            for j in 0..bins {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    edges[i],
                    edges[i + 1],
                    edges[j],
                    edges[j + 1],
                    table.positive_pct[i][j].map(|p| format!("{p}")).unwrap_or_else(|| "nan".into()),
                    table.counts[i][j]
                ));
            }
        }
        std::fs::write(&path, out)?;
        println!("written: {} ({} out-of-range ratings)", path.display(), table.out_of_range);
    }

    if args.hotness_paradox {
        let sizes_raw = resolve(args.sizes.clone(), &cfg, "sizes", "1,10,100".to_string())?;
        let sizes: Vec<usize> = sizes_raw
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|_| CliError::usage(format!("size `{p}` is not a count")))
            })
            .collect::<CliResult<_>>()?;
        let spaces = resolve(args.neighbors.clone(), &cfg, "neighbors", "both".to_string())?;
        let (want_features, want_latent) = match spaces.as_str() {
            "features" => (true, false),
            "latent" => (false, true),
            "both" => (true, true),
            other => {
                return Err(CliError::usage(format!(
                    "--neighbors is features|latent|both, got `{other}`"
                )))
            }
        };
        let hotness_opt = visreg_core::analysis::item_hotness(&bundle.ratings)?;
        let hotness: Vec<f64> = hotness_opt
            .iter()
            .map(|h| h.ok_or_else(|| CliError::runtime("an item has no ratings; filter first")))
            .collect::<CliResult<_>>()?;
        let k = *sizes.iter().max().unwrap_or(&1);
        let mut out = String::from("space,size,percent\n");

        if want_features {
            let features_path = require(
                args.features.clone().or(cfg.get("features").map(PathBuf::from)),
                "--features",
            )?;
            let rows = formats::load_features_any(&features_path)?;
            ingest::attach_features(&mut bundle, &rows)?;
            let (_, reduced) =
                reduce_features(bundle.features.as_ref().unwrap(), no_pca, pca_energy)?;
            let graph = build_similarity_graph(&reduced, k)?;
            let pct = visreg_core::analysis::hotness_paradox_curve(&hotness, &graph, &sizes)?;
            for (size, p) in sizes.iter().zip(&pct) {
                out.push_str(&format!("features,{size},{p}\n"));
            }
        }
        if want_latent {
            let model_path = require(
                args.model.clone().or(cfg.get("model").map(PathBuf::from)),
                "--model",
            )?;
            let model = formats::load_model(&model_path)?;
            if model.num_items() != bundle.ratings.num_items() {
                return Err(CliError::usage("model item count does not match the ratings"));
            }
            let q_store = FeatureStore::new(
                model.num_items(),
                model.d(),
                model.q().data().to_vec(),
            )?;
            let graph = build_similarity_graph(&q_store, k)?;
            let pct = visreg_core::analysis::hotness_paradox_curve(&hotness, &graph, &sizes)?;
            for (size, p) in sizes.iter().zip(&pct) {
                out.push_str(&format!("latent,{size},{p}\n"));
            }
        }
        let path = out_dir.join("hotness_paradox.csv");
        std::fs::write(&path, out)?;
        println!("written: {}", path.display());
    }

    if args.latent_2d {
        let model_path = require(
            args.model.clone().or(cfg.get("model").map(PathBuf::from)),
            "--model",
        )?;
        let model = formats::load_model(&model_path)?;
        let (_, item_ids) = formats::load_id_sidecar(&formats::sidecar_path(&model_path))?;
        if item_ids.len() != model.num_items() {
            return Err(CliError::usage("id sidecar does not match the model"));
        }
        let labels_kind = resolve(args.labels.clone(), &cfg, "labels", "none".to_string())?;
        let labels: Option<Vec<f64>> = match labels_kind.as_str() {
            "none" => None,
            "hotness" => {
                if model.num_items() != bundle.ratings.num_items() {
                    return Err(CliError::usage("model item count does not match the ratings"));
                }
                Some(
                    visreg_core::analysis::item_hotness(&bundle.ratings)?
                        .iter()
                        .map(|h| h.unwrap_or(f64::NAN))
                        .collect(),
                )
            }
            "age" => {
                let demo = bundle.demographics.as_ref().ok_or_else(|| {
                    CliError::usage("--labels age requires --demographics")
                })?;
                Some(demo.items.iter().map(|s| s.age.unwrap_or(f64::NAN)).collect())
            }
            other => {
                return Err(CliError::usage(format!(
                    "--labels is hotness|age|none, got `{other}`"
                )))
            }
        };
        let points = visreg_core::analysis::export_latent_2d(model.q(), labels.as_deref())?;
        let path = out_dir.join("latent_2d.csv");
        let mut out = String::from("item_id,x,y,label\n");
        for (idx, p) in points.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                item_ids.external(idx as u32),
                p.x,
                p.y,
                p.label.map(|l| format!("{l}")).unwrap_or_else(|| "nan".into())
            ));
        }
        std::fs::write(&path, out)?;
        println!("written: {}", path.display());
    }

    Ok(())
}
