use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use pif_core::datagen::{
    generate, generate_surface_fixture, Defect, SurfaceKind, SurfaceSpec, SyntheticName, SyntheticSpec,
};
use pif_core::embedding::{embed_points, EmbeddingConfig, PreferenceKind};
use pif_core::eval::{self, auc, score_method, summarize, Method, SweepConfig};
use pif_core::forest::ForestConfig;
use pif_core::geometry::{tangent_local_family, ModelFamily};
use pif_core::io as pio;
use pif_core::pipeline::TreeSpecies;
use pif_core::rng::substream;
use pif_core::sliding::{
    layout_budget_models, make_windows, memory_budget_models, sliding_pif, window_count, SlidingConfig,
};

use crate::{
    Command, DatagenArgs, EmbedArgs, EmbeddingArgs, Failure, GridFormat, MethodArg, PlanMemoryArgs, ScoreArgs,
    ScoreFormat, SlidingArgs, SpeciesArg, SweepArgs,
};

type Echo = Vec<(String, String)>;

macro_rules! echo {
    ($($k:expr => $v:expr),* $(,)?) => {
        vec![$(($k.to_string(), $v.to_string())),*]
    };
}

pub fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Datagen(a) => datagen(a),
        Command::Embed(a) => embed(a),
        Command::Score(a) => score(a),
        Command::Sliding(a) => sliding(a),
        Command::Sweep(a) => sweep(a),
        Command::PlanMemory(a) => plan_memory(a),
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random();
        eprintln!("seed={s}");
        s
    })
}

fn open_in(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::format(format!("cannot read {}: {e}", path.display())))
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure {
                code: 4,
                message: format!("cannot write {}: {e}", p.display()),
            })?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

fn finish(mut out: Box<dyn Write>) -> Result<(), Failure> {
    out.flush()?;
    Ok(())
}

/// Residual used for a family, echoed so experiments record it.
fn residual_name(family: ModelFamily) -> &'static str {
    match family {
        ModelFamily::Line2D | ModelFamily::Plane3D => "distance",
        ModelFamily::Circle2D | ModelFamily::Sphere3D => "geometric",
        ModelFamily::Quadric3D => "sampson",
    }
}

fn preference_kind(binary: bool) -> PreferenceKind {
    if binary {
        PreferenceKind::Binary
    } else {
        PreferenceKind::Continuous
    }
}

fn datagen(a: DatagenArgs) -> Result<(), Failure> {
    let seed = resolve_seed(a.seed.seed);
    if let Some(name) = &a.name {
        let name: SyntheticName = name.parse()?;
        if name == SyntheticName::Custom {
            return Err(Failure::usage("custom datasets are built through the library"));
        }
        let spec = SyntheticSpec {
            points_per_structure: a.points_per_structure,
            noise: a.noise.unwrap_or(SyntheticSpec::DEFAULT_NOISE),
            anomaly_ratio: a.anomaly_ratio,
            ..SyntheticSpec::new(name, seed)
        };
        let data = generate(&spec)?;
        let header = echo! {
            "command" => "datagen",
            "name" => name,
            "points_per_structure" => spec.points_per_structure,
            "noise" => spec.noise,
            "anomaly_ratio" => spec.anomaly_ratio,
            "seed" => seed,
        };
        let mut out = open_out(&a.out.out)?;
        pio::write_dataset(&data, &mut out, &header)?;
        return finish(out);
    }
    let kind: SurfaceKind = a.surface.as_deref().unwrap_or_default().parse()?;
    let defect: Defect = a.defect.parse()?;
    let spec = SurfaceSpec {
        defect_radius: a.defect_radius,
        defect_depth: a.defect_depth,
        ..SurfaceSpec::new(kind, defect, a.size, a.noise.unwrap_or(0.0), seed)
    };
    let fixture = generate_surface_fixture(&spec)?;
    let mut out = open_out(&a.out.out)?;
    match a.format {
        GridFormat::Bin => pio::write_grid_binary(&fixture.grid, &mut out)?,
        GridFormat::Csv => pio::write_grid_csv(&fixture.grid, &mut out)?,
    }
    finish(out)?;
    if let Some(p) = &a.mask_out {
        let mut m = open_out(&Some(p.clone()))?;
        pio::write_mask(fixture.grid.width(), &fixture.mask, &mut m)?;
        finish(m)?;
    }
    Ok(())
}

fn embedding_config(a: &EmbeddingArgs, family: ModelFamily, n: usize, seed: u64) -> EmbeddingConfig {
    let m = a.models.unwrap_or_else(|| ((a.m_factor * n as f64).round() as usize).max(1));
    EmbeddingConfig {
        k_sigma: a.k_sigma,
        preference_kind: preference_kind(a.binary),
        seed: substream(seed, 0),
        ..EmbeddingConfig::new(family, m, a.sigma)
    }
}

fn embedding_echo(cfg: &EmbeddingConfig) -> Echo {
    echo! {
        "family" => cfg.family,
        "residual" => residual_name(cfg.family),
        "models" => cfg.num_models,
        "sigma" => cfg.sigma,
        "k_sigma" => cfg.k_sigma,
        "preference" => cfg.preference_kind,
    }
}

fn embed(a: EmbedArgs) -> Result<(), Failure> {
    let seed = resolve_seed(a.seed.seed);
    let points = pio::read_points(open_in(&a.input)?)?;
    let family: ModelFamily = a.embedding.family.parse()?;
    let cfg = embedding_config(&a.embedding, family, points.points.len(), seed);
    let (_, prefs) = embed_points(&points.points, &cfg)?;
    let mut header = echo! { "command" => "embed" };
    header.extend(embedding_echo(&cfg));
    header.extend(echo! { "seed" => seed });
    let mut out = open_out(&a.out.out)?;
    pio::write_header(&mut out, &header)?;
    prefs.write_csv(&mut out)?;
    finish(out)
}

fn score(a: ScoreArgs) -> Result<(), Failure> {
    let seed = resolve_seed(a.seed.seed);
    let input = pio::read_points(open_in(&a.input)?)?;
    let family: ModelFamily = a.embedding.family.parse()?;
    let embedding = embedding_config(&a.embedding, family, input.points.len(), seed);
    let method = match a.method {
        MethodArg::Vifor => Method::ViFor(a.forest.distance),
        MethodArg::Rzhifor => Method::RzHiFor,
        MethodArg::Ifor => Method::IFor,
        MethodArg::ViforAmbient => Method::ViForAmbient,
    };
    let b = if method == Method::IFor { 2 } else { a.b };
    let forest = ForestConfig {
        num_trees: a.forest.trees,
        subsample_size: a.forest.psi,
        branching: b,
        distance: a.forest.distance,
        seed: substream(seed, 1),
    };
    let (scores, stats) = score_method(&input.points, method, &embedding, &forest)?;

    let mut header = echo! {
        "command" => "score",
        "method" => method.name(),
        "distance" => method.distance_name(),
        "t" => forest.num_trees,
        "psi" => forest.subsample_size,
        "b" => b,
    };
    if matches!(method, Method::ViFor(_) | Method::RzHiFor) {
        header.extend(embedding_echo(&embedding));
    }
    header.extend(echo! { "seed" => seed });
    let flags = input.anomaly_flags();
    let mut out = open_out(&a.out.out)?;
    pio::write_scores(&scores, flags.as_deref(), &mut out, &header)?;
    finish(out)?;

    if method == Method::RzHiFor {
        eprintln!("empty_hashes={}", stats.empty_hashes);
    }
    if let Some(f) = flags {
        eprintln!("auc={:.6}", auc(&scores, &f));
    }
    Ok(())
}

fn sliding(a: SlidingArgs) -> Result<(), Failure> {
    let seed = resolve_seed(a.seed.seed);
    let grid = pio::read_grid(open_in(&a.input)?)?;
    let side = grid.width().min(grid.height());
    let omega = match a.omega {
        Some(w) => w,
        None if a.omega_div == 0 => return Err(Failure::usage("--omega-div must be positive")),
        None => (side / a.omega_div).max(1),
    };
    let family = tangent_local_family(&a.family)?;
    let models = match a.models {
        Some(m) => m,
        None => {
            if a.budget_bytes == 0 || a.bits == 0 {
                return Err(Failure::usage("--budget-bytes and --bits must be positive"));
            }
            let layout = make_windows(grid.width(), grid.height(), omega)?;
            let m = layout_budget_models(a.budget_bytes, a.bits, omega, layout.windows.len());
            usize::try_from(m).unwrap_or(usize::MAX).max(1)
        }
    };
    let cfg = SlidingConfig {
        omega,
        embedding: EmbeddingConfig {
            k_sigma: a.k_sigma,
            preference_kind: preference_kind(a.binary),
            seed: substream(seed, 0),
            ..EmbeddingConfig::new(family, models, a.sigma)
        },
        forest: ForestConfig {
            num_trees: a.forest.trees,
            subsample_size: a.forest.psi,
            branching: a.b,
            distance: a.forest.distance,
            seed: substream(seed, 1),
        },
        species: match a.species {
            SpeciesArg::Voronoi => TreeSpecies::Voronoi,
            SpeciesArg::Ruzhash => TreeSpecies::RuzHash,
        },
    };
    let result = sliding_pif(&grid, &cfg)?;

    let mut header = echo! {
        "command" => "sliding",
        "omega" => omega,
        "species" => cfg.species,
        "distance" => cfg.forest.distance,
        "t" => cfg.forest.num_trees,
        "psi" => cfg.forest.subsample_size,
        "b" => cfg.forest.branching,
    };
    header.extend(embedding_echo(&cfg.embedding));
    header.extend(echo! { "seed" => seed });
    let mut out = open_out(&a.out.out)?;
    match a.format {
        ScoreFormat::Csv => pio::write_pixel_scores(grid.width(), &result.scores, &mut out, &header)?,
        ScoreFormat::Raster => pio::write_raster(grid.width(), grid.height(), &result.scores, &mut out)?,
    }
    finish(out)?;

    eprintln!(
        "windows={} skipped={} psi_capped={}",
        result.windows.windows.len(),
        result.skipped(),
        result.psi_capped()
    );
    if let Some(p) = &a.mask {
        let mask = pio::read_mask(open_in(p)?)?;
        if mask.len() != grid.len() {
            return Err(Failure::format(format!(
                "mask has {} pixels, grid has {}",
                mask.len(),
                grid.len()
            )));
        }
        let (s, l): (Vec<f64>, Vec<bool>) = result
            .scores
            .iter()
            .zip(&mask)
            .filter_map(|(s, m)| s.map(|s| (s, *m)))
            .unzip();
        eprintln!("auc={:.6}", auc(&s, &l));
    }
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<(), Failure> {
    let seed = resolve_seed(a.seed.seed);
    let datasets = a
        .datasets
        .iter()
        .map(|d| d.parse::<SyntheticName>())
        .collect::<Result<Vec<_>, _>>()?;
    let methods = a
        .methods
        .iter()
        .filter(|m| !m.is_empty())
        .map(|m| m.parse::<Method>())
        .collect::<Result<Vec<_>, _>>()?;
    if methods.is_empty() {
        return Err(Failure::usage("--methods needs at least one method"));
    }
    let cfg = SweepConfig {
        b_values: a.b_values,
        m_factors: a.m_factors,
        repeats: a.repeats,
        num_trees: a.trees,
        subsample_size: a.psi,
        k_sigma: a.k_sigma,
        seed,
        timing: !a.no_timing,
        ..SweepConfig::new(datasets, methods)
    };
    let reports = eval::run_sweep(&cfg)?;
    let join = |v: Vec<String>| v.join(" ");
    let header = echo! {
        "command" => "sweep",
        "datasets" => join(cfg.datasets.iter().map(ToString::to_string).collect()),
        "methods" => join(cfg.methods.iter().map(ToString::to_string).collect()),
        "b_values" => join(cfg.b_values.iter().map(ToString::to_string).collect()),
        "m_factors" => join(cfg.m_factors.iter().map(ToString::to_string).collect()),
        "repeats" => cfg.repeats,
        "t" => cfg.num_trees,
        "psi" => cfg.subsample_size,
        "k_sigma" => cfg.k_sigma,
        "timing" => cfg.timing,
        "seed" => seed,
    };
    let mut out = open_out(&a.out.out)?;
    pio::write_header(&mut out, &header)?;
    eval::write_reports(&reports, &mut out)?;
    finish(out)?;
    if let Some(p) = &a.summary_out {
        let mut s = open_out(&Some(p.clone()))?;
        pio::write_header(&mut s, &header)?;
        eval::write_summary(&summarize(&reports), &mut s)?;
        finish(s)?;
    }
    Ok(())
}

fn plan_memory(a: PlanMemoryArgs) -> Result<(), Failure> {
    if a.bits == 0 || a.delta == 0 || a.k == 0 {
        return Err(Failure::usage("--bits, --delta and --k must be positive"));
    }
    let m = memory_budget_models(a.budget_bytes, a.bits, a.delta, a.k);
    let windows = window_count(a.k);
    println!("models_per_window={m}");
    println!("windows={windows}");
    println!("total_models={}", m * windows);
    Ok(())
}
