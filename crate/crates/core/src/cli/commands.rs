use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use super::checkpoint::load_checkpoint;
use super::config::Config;
use crate::analysis::image::{decode_pgm, write_file};
use crate::analysis::{compare_variants, evaluate, injection_response, random_baseline, record_heatmaps};
use crate::envs::{EnvKind, EnvSpec, InjectionDuration, InjectionSpec, Sprite};
use crate::error::{Error, Result};
use crate::network::{MaskTransform, NetworkConfig};
use crate::training::train;

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CHECKPOINT: i32 = 3;
pub const EXIT_VARIANT: i32 = 4;
pub const EXIT_INVALID: i32 = 5;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => EXIT_CONFIG,
        Error::Checkpoint { .. } => EXIT_CHECKPOINT,
        Error::VariantMismatch(_) => EXIT_VARIANT,
        Error::InvalidArgument(_) | Error::UnsupportedDomain { .. } => EXIT_INVALID,
        _ => EXIT_OTHER,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "maskac",
    version,
    about = "Attention-masked A3C agents: train, evaluate, inspect"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one agent from a config file.
    Train {
        config: PathBuf,
        /// Output directory; overrides `out_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a checkpoint and write per-episode returns.
    Eval {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        /// normal, inverse or ones
        #[arg(long, default_value = "normal")]
        mask: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Take the most likely action instead of sampling.
        #[arg(long)]
        greedy: bool,
        #[command(flatten)]
        env: EnvArgs,
        /// Per-episode CSV; defaults to `<ckpt>.eval_<mask>.csv`.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Write mask heatmaps for greedy episodes.
    Viz {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long, default_value_t = 1)]
        episodes: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        env: EnvArgs,
    },
    /// Paste a sprite into the frames and log how the agent reacts.
    Inject {
        #[arg(long)]
        ckpt: PathBuf,
        /// Binary PGM sprite.
        #[arg(long)]
        sprite: PathBuf,
        /// Pixels at or above this grey level are pasted.
        #[arg(long, default_value_t = 1)]
        stencil_threshold: u8,
        /// Top-left corner as `row,col`.
        #[arg(long)]
        pos: String,
        #[arg(long)]
        frame: usize,
        #[arg(long)]
        window: usize,
        /// Frames the sprite stays; permanent when omitted.
        #[arg(long)]
        duration: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        greedy: bool,
        #[command(flatten)]
        env: EnvArgs,
        /// Report CSV; defaults to standard output.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Train and score all four mask variants over the configured seeds.
    Compare {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score uniformly random play.
    RandomBaseline {
        #[arg(long, default_value = "catch")]
        env: String,
        #[arg(long, default_value_t = 20)]
        size: usize,
        #[arg(long)]
        episode_cap: Option<usize>,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

/// Game settings for commands that start from a checkpoint. The frame size
/// always comes from the checkpoint.
#[derive(Debug, clap::Args)]
pub struct EnvArgs {
    /// Game; inferred from the checkpoint's action count when omitted.
    #[arg(long = "env")]
    pub kind: Option<String>,
    #[arg(long)]
    pub episode_cap: Option<usize>,
}

impl EnvArgs {
    pub fn spec(&self, cfg: &NetworkConfig) -> Result<EnvSpec> {
        let kind = match &self.kind {
            Some(k) => k
                .parse::<EnvKind>()
                .map_err(|e| Error::InvalidArgument(e.to_string()))?,
            None => infer_kind(cfg.n_actions)?,
        };
        let mut spec = EnvSpec::new(kind, cfg.input_hw);
        if let Some(cap) = self.episode_cap {
            spec.episode_cap = cap;
        }
        spec.validate().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(spec)
    }
}

fn infer_kind(n_actions: usize) -> Result<EnvKind> {
    [EnvKind::Catch, EnvKind::Collector, EnvKind::Fuel]
        .into_iter()
        .find(|k| k.n_actions() == n_actions)
        .ok_or_else(|| Error::InvalidArgument(format!("no game has {n_actions} actions; pass --env")))
}

/// Parses `args` (program name first) and runs the command, writing
/// results to `out` and errors to `err`. Returns the exit code.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let target: &mut dyn Write = if code == 0 { out } else { err };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Train { config, out: dir } => cmd_train(&config, dir.as_deref(), out),
        Command::Eval {
            ckpt,
            episodes,
            mask,
            seed,
            greedy,
            env,
            csv,
        } => {
            let transform: MaskTransform = mask.parse()?;
            let (cfg, weights) = load_checkpoint(&ckpt)?;
            let spec = env.spec(&cfg)?;
            let stats = evaluate(&weights, &cfg, &spec, episodes, transform, seed, greedy)?;
            let csv = csv.unwrap_or_else(|| sibling(&ckpt, &format!("eval_{}.csv", transform.name())));
            write_file(&csv, stats.to_csv().as_bytes())?;
            say(out, &stats.summary())
        }
        Command::Viz {
            ckpt,
            episodes,
            out: dir,
            seed,
            env,
        } => {
            let (cfg, weights) = load_checkpoint(&ckpt)?;
            let spec = env.spec(&cfg)?;
            let run = record_heatmaps(&weights, &cfg, &spec, episodes, seed, &dir)?;
            say(
                out,
                &format!(
                    "episodes={} frames={} files={}",
                    run.episode_lengths.len(),
                    run.episode_lengths.iter().sum::<usize>(),
                    run.files.len()
                ),
            )
        }
        Command::Inject {
            ckpt,
            sprite,
            stencil_threshold,
            pos,
            frame,
            window,
            duration,
            seed,
            greedy,
            env,
            csv,
        } => {
            let (row, col) = parse_pos(&pos)?;
            let sprite = read_sprite(&sprite, stencil_threshold)?;
            let (cfg, weights) = load_checkpoint(&ckpt)?;
            let spec = env.spec(&cfg)?;
            let injection = InjectionSpec {
                sprite,
                row,
                col,
                start_frame: frame,
                duration: duration.map_or(InjectionDuration::Permanent, InjectionDuration::Frames),
            };
            if !injection.fits(spec.size) {
                return Err(Error::InvalidArgument(format!(
                    "{}×{} sprite at {row},{col} leaves the {}×{} frame",
                    injection.sprite.height, injection.sprite.width, spec.size, spec.size
                )));
            }
            let report = injection_response(&weights, &cfg, &spec, &injection, window, seed, greedy)?;
            match csv {
                Some(path) => {
                    write_file(&path, report.to_csv().as_bytes())?;
                    say(
                        out,
                        &format!(
                            "frames={} region_cells={}",
                            report.frames.len(),
                            report.region_cells.len()
                        ),
                    )
                }
                None => out
                    .write_all(report.to_csv().as_bytes())
                    .map_err(|e| Error::io("writing report", e)),
            }
        }
        Command::Compare { config, out: dir } => {
            let cfg = read_config(&config)?;
            let dir = output_dir(&cfg, dir.as_deref())?;
            write_file(&dir.join("config.resolved"), cfg.resolved().as_bytes())?;
            let table = compare_variants(
                &cfg.network,
                &cfg.env,
                &cfg.seeds,
                &cfg.hyper,
                cfg.eval_episodes,
                Some(&dir),
            )?;
            write_file(&dir.join("compare.csv"), table.to_csv().as_bytes())?;
            write_file(&dir.join("compare.md"), table.to_table().as_bytes())?;
            say(out, table.to_table().trim_end())
        }
        Command::RandomBaseline {
            env,
            size,
            episode_cap,
            episodes,
            seed,
            csv,
        } => {
            let kind: EnvKind = env.parse().map_err(|e: Error| Error::InvalidArgument(e.to_string()))?;
            let mut spec = EnvSpec::new(kind, size);
            if let Some(cap) = episode_cap {
                spec.episode_cap = cap;
            }
            spec.validate().map_err(|e| Error::InvalidArgument(e.to_string()))?;
            let stats = random_baseline(&spec, episodes, seed)?;
            if let Some(path) = csv {
                write_file(&path, stats.to_csv().as_bytes())?;
            }
            say(out, &stats.summary())
        }
    }
}

fn cmd_train(config: &Path, dir: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let cfg = read_config(config)?;
    let dir = output_dir(&cfg, dir)?;
    write_file(&dir.join("config.resolved"), cfg.resolved().as_bytes())?;
    let report = train::<f32>(&cfg.network, &cfg.hyper, &cfg.env, cfg.seed, Some(&dir))?;
    let last = report
        .checkpoints
        .last()
        .map(|p| p.display().to_string())
        .unwrap_or_default();
    say(
        out,
        &format!(
            "steps={} skipped={} episodes={} elapsed={:.1}s checkpoint={last}",
            report.global_steps,
            report.skipped_updates,
            report.episode_returns().len(),
            report.elapsed.as_secs_f64()
        ),
    )
}

pub fn read_config(path: &Path) -> Result<Config> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    Config::parse(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn output_dir(cfg: &Config, flag: Option<&Path>) -> Result<PathBuf> {
    let dir = flag
        .map(Path::to_path_buf)
        .or_else(|| cfg.out_dir.clone())
        .ok_or_else(|| Error::Config("no output directory: pass --out or set out_dir".into()))?;
    fs::create_dir_all(&dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    Ok(dir)
}

fn parse_pos(pos: &str) -> Result<(usize, usize)> {
    let bad = || Error::InvalidArgument(format!("--pos expects row,col, got `{pos}`"));
    let (r, c) = pos.split_once(',').ok_or_else(bad)?;
    Ok((
        r.trim().parse().map_err(|_| bad())?,
        c.trim().parse().map_err(|_| bad())?,
    ))
}

/// Grey levels become intensities in [0, 1]; the stencil keeps pixels at
/// or above `threshold`, so a threshold of 0 pastes the whole rectangle.
pub fn read_sprite(path: &Path, threshold: u8) -> Result<Sprite> {
    let bytes =
        fs::read(path).map_err(|e| Error::InvalidArgument(format!("cannot read sprite {}: {e}", path.display())))?;
    let img = decode_pgm(&bytes)?;
    let max = img.maxval as f32;
    let pixels = img.pixels.iter().map(|&p| (p as f32 / max).min(1.0)).collect();
    let stencil = img.pixels.iter().map(|&p| p >= threshold).collect();
    Sprite::new(img.height, img.width, pixels, stencil)
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(OsString::from).unwrap_or_default();
    name.push(".");
    name.push(suffix);
    path.with_file_name(name)
}

fn say(out: &mut dyn Write, line: &str) -> Result<()> {
    writeln!(out, "{line}").map_err(|e| Error::io("writing output", e))
}
