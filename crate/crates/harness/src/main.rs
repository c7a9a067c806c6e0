use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use scenecode_core::codecs::{export_render_script, serialize, SceneCodeLanguage};
use scenecode_core::qa::InferenceMode;
use scenecode_core::s3ft::DatasetMode;
use scenecode_harness::client::{LiveConfig, Provider};
use scenecode_harness::config::{ClientConfig, ModeSpec, RunConfig, QA_LANGUAGE_SUBSET};
use scenecode_harness::dataset::{build_and_write, read_raw_outputs};
use scenecode_harness::gen::{generate_split, GenPlan};
use scenecode_harness::synth::{synthesize_qa, synthesize_reconstruct, Policy};
use scenecode_harness::{
    report, run_qa_eval, run_reconstruct_eval, select_best_worst_language, CellSnapshot,
    LiveClient, ModelClient, ReplayClient, ReplayKey, ReplayStore, RunOutcome, Split, TeeClient,
};

#[derive(Parser)]
#[command(
    name = "scenecode",
    version,
    about = "Scene-code reconstruction and spatial QA benchmark toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate scenes, ring cameras and QA sets into a split directory.
    Gen {
        #[arg(long)]
        out: PathBuf,
        /// Tiers to generate, e.g. 1,2,3,4,5.
        #[arg(long, value_delimiter = ',', default_values_t = [1u8, 2, 3, 4, 5])]
        tiers: Vec<u8>,
        /// Scenes per tier, with seeds seed-start..seed-start+per-tier.
        #[arg(long, default_value_t = 20)]
        per_tier: u64,
        #[arg(long, default_value_t = 0)]
        seed_start: u64,
        #[arg(long, default_value_t = 0)]
        qa_seed: u64,
    },
    /// Write Blender render scripts and per-language serializations.
    Export {
        #[arg(long)]
        split: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',')]
        languages: Option<Vec<SceneCodeLanguage>>,
    },
    /// Score reconstruction responses per (language, mode) cell.
    EvalReconstruct(EvalArgs),
    /// Judge QA responses per inference mode.
    EvalQa {
        #[command(flatten)]
        eval: EvalArgs,
        /// Snapshot directory used to pick best/worst code-CoT languages
        /// when not given explicitly.
        #[arg(long)]
        select_from: Option<PathBuf>,
    },
    /// Curate raw Three.js responses and build a self-supervised dataset.
    BuildS3ft {
        /// Directory of `<scene_id>[_v<k>].txt` responses.
        #[arg(long)]
        raw: PathBuf,
        #[arg(long)]
        split: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = ["single_view".to_string(), "cross_viewpoint".to_string()])]
        modes: Vec<String>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a model's best and worst reconstruction language.
    SelectLangs {
        #[arg(long)]
        snapshots: PathBuf,
        #[arg(long)]
        model: String,
        #[arg(long, value_delimiter = ',')]
        subset: Option<Vec<SceneCodeLanguage>>,
    },
    /// Tables over all snapshots in a directory.
    Report {
        #[arg(long)]
        snapshots: PathBuf,
        /// Also write the machine-readable report here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Manage replay stores.
    Replay {
        #[command(subcommand)]
        action: ReplayAction,
    },
}

#[derive(Args)]
struct EvalArgs {
    /// TOML run configuration; the flags below override or replace it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    split: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    languages: Option<Vec<SceneCodeLanguage>>,
    #[arg(long, value_delimiter = ',')]
    modes: Option<Vec<ModeSpec>>,
    #[arg(long)]
    best: Option<SceneCodeLanguage>,
    #[arg(long)]
    worst: Option<SceneCodeLanguage>,
    #[arg(long)]
    n_scenes: Option<usize>,
    /// Replay store to read responses from.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Live endpoint base URL.
    #[arg(long, conflicts_with = "replay")]
    endpoint: Option<String>,
    #[arg(long, default_value = "openai-compatible")]
    provider: String,
    /// Environment variable holding the API key.
    #[arg(long, default_value = "SCENECODE_API_KEY")]
    api_key_env: String,
    /// Store live responses here as well.
    #[arg(long)]
    record_to: Option<PathBuf>,
    #[arg(long)]
    concurrency: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Snapshot output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum ReplayAction {
    /// Store one response.
    Record {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        model: String,
        #[arg(long)]
        scope: String,
        #[arg(long)]
        item: String,
        #[arg(long)]
        system_file: PathBuf,
        #[arg(long)]
        user_file: PathBuf,
        #[arg(long)]
        response_file: PathBuf,
    },
    /// Print one stored response.
    Lookup {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        model: String,
        #[arg(long)]
        scope: String,
        #[arg(long)]
        item: String,
        #[arg(long)]
        system_file: PathBuf,
        #[arg(long)]
        user_file: PathBuf,
    },
    /// List entries.
    List {
        #[arg(long)]
        store: PathBuf,
    },
    /// Re-hash every stored response.
    Verify {
        #[arg(long)]
        store: PathBuf,
    },
    /// Fill a store with synthetic responses for a split.
    Synth {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        split: PathBuf,
        #[arg(long)]
        model: String,
        /// `oracle` or `mixed` (6 oracle, 2 corrupted, 1 empty, 1 missing per 10).
        #[arg(long, default_value = "mixed")]
        policy: String,
        #[arg(long)]
        n_scenes: Option<usize>,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run_config(args: &EvalArgs) -> Result<RunConfig> {
    let mut config = match &args.config {
        Some(p) => toml::from_str(&read(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => {
            let model = args
                .model
                .clone()
                .context("--model or --config is required")?;
            let split = args
                .split
                .clone()
                .context("--split or --config is required")?;
            RunConfig::replay(model, split, PathBuf::new())
        }
    };
    if let Some(m) = &args.model {
        config.model_id.clone_from(m);
    }
    if let Some(s) = &args.split {
        config.scene_split.clone_from(s);
    }
    if let Some(l) = &args.languages {
        config.languages.clone_from(l);
    }
    if let Some(m) = &args.modes {
        config.modes.clone_from(m);
    }
    config.best_language = args.best.or(config.best_language);
    config.worst_language = args.worst.or(config.worst_language);
    config.n_scenes = args.n_scenes.or(config.n_scenes);
    config.concurrency = args.concurrency.unwrap_or(config.concurrency);
    config.seed = args.seed.unwrap_or(config.seed);
    if let Some(dir) = &args.replay {
        config.client = ClientConfig::Replay { dir: dir.clone() };
    } else if let Some(endpoint) = &args.endpoint {
        let provider = match args.provider.as_str() {
            "openai-compatible" | "openai_compatible" => Provider::OpenaiCompatible,
            "anthropic" => Provider::Anthropic,
            other => bail!("unknown provider {other:?}"),
        };
        config.client = ClientConfig::Live {
            live: LiveConfig {
                provider,
                endpoint: endpoint.clone(),
                api_key_env: args.api_key_env.clone(),
                max_retries: 0,
                timeout_secs: 300,
            },
            record_to: args.record_to.clone(),
        };
    } else if args.config.is_none() {
        bail!("one of --replay, --endpoint or --config is required");
    }
    config.validate()?;
    Ok(config)
}

fn make_client(config: &RunConfig) -> Result<Box<dyn ModelClient>> {
    Ok(match &config.client {
        ClientConfig::Replay { dir } => Box::new(ReplayClient::new(ReplayStore::open(dir))),
        ClientConfig::Live { live, record_to } => {
            let client = LiveClient::new(live.clone())?;
            match record_to {
                Some(dir) => Box::new(TeeClient {
                    inner: client,
                    store: ReplayStore::open(dir),
                }),
                None => Box::new(client),
            }
        }
    })
}

fn save(outcome: &RunOutcome, out: &Path) -> Result<()> {
    for s in &outcome.snapshots {
        let path = s.save(out)?;
        let c = s.counts;
        println!(
            "{}  items {}  parsed {}  empty {}  errored {}{}",
            path.display(),
            c.items,
            c.parsed,
            c.empty_parse,
            c.errored,
            if s.valid { "" } else { "  INVALID" }
        );
    }
    if outcome.aborted {
        bail!("run aborted: client failure rate above threshold");
    }
    Ok(())
}

fn parse_policy(s: &str) -> Result<Policy> {
    match s {
        "oracle" => Ok(Policy::AllOracle),
        "mixed" => Ok(Policy::Mixed),
        other => bail!("unknown policy {other:?}"),
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Gen {
            out,
            tiers,
            per_tier,
            seed_start,
            qa_seed,
        } => {
            let plan = GenPlan {
                tiers,
                seeds: seed_start..seed_start + per_tier,
                qa_seed,
            };
            let (split, manifest) = generate_split(&out, &plan)?;
            split.save(&manifest)?;
            println!(
                "{} scenes, {} questions -> {}",
                manifest.scenes,
                manifest.qa_items,
                out.display()
            );
        }
        Command::Export {
            split,
            out,
            languages,
        } => {
            let split = Split::load(&split)?;
            let languages = languages.unwrap_or_else(|| SceneCodeLanguage::ALL.to_vec());
            for scene in &split.scenes {
                let cams = split
                    .cameras
                    .get(&scene.scene_id)
                    .cloned()
                    .unwrap_or_default();
                for (k, cam) in cams.iter().enumerate() {
                    let mut posed = scene.clone();
                    posed.scene_id = format!("{}_v{k}", scene.scene_id);
                    let script = export_render_script(&posed, cam)?;
                    write(
                        &out.join("render")
                            .join(format!("{}_v{k}.py", scene.scene_id)),
                        &script,
                    )?;
                }
                for &l in &languages {
                    let text = serialize(l, scene)?;
                    write(
                        &out.join(l.as_str()).join(format!(
                            "{}.{}",
                            scene.scene_id,
                            l.file_extension()
                        )),
                        &text,
                    )?;
                }
            }
            println!(
                "exported {} scenes -> {}",
                split.scenes.len(),
                out.display()
            );
        }
        Command::EvalReconstruct(args) => {
            let config = run_config(&args)?;
            let split = Split::load(&config.scene_split)?;
            let client = make_client(&config)?;
            save(
                &run_reconstruct_eval(&config, &split, client.as_ref())?,
                &args.out,
            )?;
        }
        Command::EvalQa { eval, select_from } => {
            let mut config = run_config(&eval)?;
            if let Some(dir) = select_from {
                let snaps = CellSnapshot::load_all(&dir)?;
                let (best, worst) =
                    select_best_worst_language(&snaps, &config.model_id, &QA_LANGUAGE_SUBSET)?;
                config.best_language = config.best_language.or(Some(best));
                config.worst_language = config.worst_language.or(Some(worst));
            }
            let split = Split::load(&config.scene_split)?;
            let client = make_client(&config)?;
            save(
                &run_qa_eval(&config, &split, &split.qa, client.as_ref())?,
                &eval.out,
            )?;
        }
        Command::BuildS3ft {
            raw,
            split,
            modes,
            seed,
            out,
        } => {
            let split = Split::load(&split)?;
            let raw = read_raw_outputs(&raw, &split.dir)?;
            for m in modes {
                let mode: DatasetMode = m.parse().map_err(anyhow::Error::msg)?;
                let (dataset, report) = build_and_write(&raw, &split, mode, seed, &out)?;
                println!(
                    "{mode}: pass rate {:.3} ({}/{}), train {} val {}",
                    report.pass_rate,
                    report.accepted,
                    report.total,
                    dataset.train.len(),
                    dataset.val.len()
                );
            }
        }
        Command::SelectLangs {
            snapshots,
            model,
            subset,
        } => {
            let snaps = CellSnapshot::load_all(&snapshots)?;
            let subset = subset.unwrap_or_else(|| QA_LANGUAGE_SUBSET.to_vec());
            let (best, worst) = select_best_worst_language(&snaps, &model, &subset)?;
            println!("best {best}\nworst {worst}");
        }
        Command::Report { snapshots, json } => {
            let r = report(&CellSnapshot::load_all(&snapshots)?);
            print!("{}", r.to_text());
            if let Some(p) = json {
                write(&p, &r.to_json())?;
            }
        }
        Command::Replay { action } => replay(action)?,
    }
    Ok(())
}

fn replay(action: ReplayAction) -> Result<()> {
    match action {
        ReplayAction::Record {
            store,
            model,
            scope,
            item,
            system_file,
            user_file,
            response_file,
        } => {
            let key = ReplayKey {
                model_id: model,
                scope,
                item,
                prompt_hash: scenecode_harness::store::prompt_hash(
                    &read(&system_file)?,
                    &read(&user_file)?,
                ),
            };
            ReplayStore::open(store).record(&key, &read(&response_file)?, 0)?;
        }
        ReplayAction::Lookup {
            store,
            model,
            scope,
            item,
            system_file,
            user_file,
        } => {
            let key = ReplayKey {
                model_id: model,
                scope,
                item,
                prompt_hash: scenecode_harness::store::prompt_hash(
                    &read(&system_file)?,
                    &read(&user_file)?,
                ),
            };
            print!("{}", ReplayStore::open(store).lookup(&key)?);
        }
        ReplayAction::List { store } => {
            for e in ReplayStore::open(store).entries()? {
                println!(
                    "{}\t{}\t{}\t{}",
                    e.model_id,
                    e.scope,
                    e.item,
                    &e.prompt_sha256[..12]
                );
            }
        }
        ReplayAction::Verify { store } => {
            let n = ReplayStore::open(store).verify()?;
            println!("{n} entries verified");
        }
        ReplayAction::Synth {
            store,
            split,
            model,
            policy,
            n_scenes,
        } => {
            let policy = parse_policy(&policy)?;
            let split = Split::load(&split)?;
            let mut config = RunConfig::replay(model, &split.dir, &store);
            config.n_scenes = n_scenes;
            config.modes = vec![ModeSpec::Direct, ModeSpec::NlCot];
            let store = ReplayStore::open(&store);
            let mut written = synthesize_reconstruct(&store, &config, &split, policy)?;
            let mut modes = vec![InferenceMode::Direct, InferenceMode::NlCot];
            modes.extend(
                QA_LANGUAGE_SUBSET
                    .iter()
                    .map(|&l| InferenceMode::CodeCot(l)),
            );
            written += synthesize_qa(&store, &config, &split, &modes, policy)?;
            println!("{written} responses written to {}", store.root().display());
        }
    }
    Ok(())
}
