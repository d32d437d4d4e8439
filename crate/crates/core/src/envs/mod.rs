//! Deterministic pixel-observation games.
//!
//! * `catch`: a ball falls one row per step with a fixed horizontal drift
//!   (reflecting off the side walls); a paddle of half-width `max(1, N/6)`
//!   on the bottom row
//!   moves left/stay/right. +1 for a catch, −1 for a miss.
//! * `collector`: walled grid, +1 per pellet, a chaser that steps greedily
//!   toward the agent every second step; contact is −1 and ends the episode.
//! * `fuel`: the agent dives for drifting targets while a fuel bar on the
//!   bottom row drains one unit per step and refills on the surface row.
//!
//! Rendering is integer-rule based, so observations are bit-identical for a
//! given seed and action list. Injected sprites only change what the agent
//! sees, never rewards or termination.

mod catch;
mod collector;
mod fuel;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use catch::Catch;
pub use collector::Collector;
pub use fuel::Fuel;

use crate::autodiff::{Real, Tensor};
use crate::error::{Error, Result};

pub const AGENT: f32 = 1.0;
pub const CHASER: f32 = 0.8;
pub const FUEL_BAR: f32 = 0.9;
pub const TARGET: f32 = 0.6;
pub const WALL: f32 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EnvKind {
    Catch,
    Collector,
    Fuel,
}

impl EnvKind {
    pub fn n_actions(self) -> usize {
        match self {
            EnvKind::Catch => 3,
            EnvKind::Collector => 5,
            EnvKind::Fuel => 6,
        }
    }

    pub fn action_names(self) -> &'static [&'static str] {
        match self {
            EnvKind::Catch => &["left", "stay", "right"],
            EnvKind::Collector => &["up", "down", "left", "right", "stay"],
            EnvKind::Fuel => &["up", "down", "left", "right", "stay", "collect"],
        }
    }

    pub fn default_episode_cap(self) -> usize {
        match self {
            EnvKind::Catch => 10_000,
            EnvKind::Collector => 200,
            EnvKind::Fuel => 400,
        }
    }

    /// Smallest and largest single-step reward.
    pub fn reward_bounds(self) -> (f64, f64) {
        (-1.0, 1.0)
    }

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::Catch => "catch",
            EnvKind::Collector => "collector",
            EnvKind::Fuel => "fuel",
        }
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "catch" => Ok(EnvKind::Catch),
            "collector" => Ok(EnvKind::Collector),
            "fuel" => Ok(EnvKind::Fuel),
            _ => Err(Error::Config(format!(
                "unknown env {s:?} (expected catch, collector or fuel)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnvSpec {
    pub kind: EnvKind,
    /// Observation side length.
    pub size: usize,
    pub episode_cap: usize,
    pub seed: u64,
}

impl EnvSpec {
    pub fn new(kind: EnvKind, size: usize) -> Self {
        Self {
            kind,
            size,
            episode_cap: kind.default_episode_cap(),
            seed: 0,
        }
    }

    pub fn n_actions(&self) -> usize {
        self.kind.n_actions()
    }

    pub fn validate(&self) -> Result<()> {
        let min = match self.kind {
            EnvKind::Catch => 4,
            EnvKind::Collector => 6,
            EnvKind::Fuel => 6,
        };
        if self.size < min {
            return Err(Error::Config(format!(
                "{} needs size >= {min}, got {}",
                self.kind, self.size
            )));
        }
        if self.episode_cap == 0 {
            return Err(Error::Config("episode_cap must be positive".into()));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Env> {
        Env::new(self.clone())
    }
}

/// Grayscale frame with values in `[0, 1]`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    size: usize,
    pixels: Vec<f32>,
}

impl Observation {
    pub fn blank(size: usize) -> Self {
        Self {
            size,
            pixels: vec![0.0; size * size],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.pixels[row * self.size + col]
    }

    pub(crate) fn set(&mut self, row: usize, col: usize, v: f32) {
        self.pixels[row * self.size + col] = v;
    }

    /// Number of pixels exactly equal to `level`.
    pub fn count(&self, level: f32) -> usize {
        self.pixels.iter().filter(|&&p| p == level).count()
    }

    /// `1×H×W` network input.
    pub fn to_tensor<T: Real>(&self) -> Tensor<T> {
        Tensor::new(
            &[1, self.size, self.size],
            self.pixels.iter().map(|&p| T::from_f64(p as f64)).collect(),
        )
        .expect("square observation")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub obs: Observation,
    pub reward: f64,
    pub done: bool,
    /// Cumulative episode score.
    pub score: f64,
}

/// Small intensity patch with a binary stencil.
#[derive(Clone, Debug, PartialEq)]
pub struct Sprite {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<f32>,
    pub stencil: Vec<bool>,
}

impl Sprite {
    pub fn new(height: usize, width: usize, pixels: Vec<f32>, stencil: Vec<bool>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidArgument("sprite must be non-empty".into()));
        }
        if pixels.len() != height * width || stencil.len() != height * width {
            return Err(Error::InvalidShape(format!(
                "sprite {height}×{width} with {} pixels and {} stencil entries",
                pixels.len(),
                stencil.len()
            )));
        }
        if pixels.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidArgument("sprite pixels must be in [0, 1]".into()));
        }
        Ok(Self {
            height,
            width,
            pixels,
            stencil,
        })
    }

    /// Uniform rectangle with a full stencil.
    pub fn solid(height: usize, width: usize, level: f32) -> Result<Self> {
        Self::new(height, width, vec![level; height * width], vec![true; height * width])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InjectionDuration {
    Frames(usize),
    Permanent,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InjectionSpec {
    pub sprite: Sprite,
    pub row: usize,
    pub col: usize,
    pub start_frame: usize,
    pub duration: InjectionDuration,
}

impl InjectionSpec {
    pub fn active_at(&self, frame: usize) -> bool {
        frame >= self.start_frame
            && match self.duration {
                InjectionDuration::Permanent => true,
                InjectionDuration::Frames(n) => frame - self.start_frame < n,
            }
    }

    pub fn fits(&self, size: usize) -> bool {
        self.row + self.sprite.height <= size && self.col + self.sprite.width <= size
    }

    /// Observation pixels covered by the stencil, as `(row, col)`.
    pub fn stencil_pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.sprite.width;
        self.sprite
            .stencil
            .iter()
            .enumerate()
            .filter(|(_, &on)| on)
            .map(move |(i, _)| (self.row + i / w, self.col + i % w))
    }
}

/// Game rules of the currently loaded environment.
#[derive(Clone, Debug, PartialEq)]
pub enum Game {
    Catch(Catch),
    Collector(Collector),
    Fuel(Fuel),
}

/// One environment instance: game rules plus episode bookkeeping.
#[derive(Clone, Debug)]
pub struct Env {
    spec: EnvSpec,
    game: Game,
    rng: ChaCha8Rng,
    frame: usize,
    score: f64,
    done: bool,
    injections: Vec<InjectionSpec>,
}

impl Env {
    pub fn new(spec: EnvSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let game = Self::fresh_game(&spec, &mut rng);
        Ok(Self {
            spec,
            game,
            rng,
            frame: 0,
            score: 0.0,
            done: false,
            injections: Vec::new(),
        })
    }

    fn fresh_game(spec: &EnvSpec, rng: &mut ChaCha8Rng) -> Game {
        match spec.kind {
            EnvKind::Catch => Game::Catch(Catch::new(spec.size, rng)),
            EnvKind::Collector => Game::Collector(Collector::new(spec.size, rng)),
            EnvKind::Fuel => Game::Fuel(Fuel::new(spec.size, rng)),
        }
    }

    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    pub fn n_actions(&self) -> usize {
        self.spec.n_actions()
    }

    pub fn game(&self) -> &Game {
        &self.game
    }

    /// Frames elapsed since reset; the reset observation is frame 0.
    pub fn frame(&self) -> usize {
        self.frame
    }

    pub fn score(&self) -> f64 {
        self.score
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Draws a new initial layout from `seed`. Injections are kept.
    pub fn reset(&mut self, seed: u64) -> Observation {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.game = Self::fresh_game(&self.spec, &mut self.rng);
        self.frame = 0;
        self.score = 0.0;
        self.done = false;
        self.render()
    }

    pub fn step(&mut self, action: usize) -> Result<StepResult> {
        if self.done {
            return Err(Error::Env("step called on a finished episode; reset first".into()));
        }
        if action >= self.n_actions() {
            return Err(Error::Env(format!(
                "action {action} out of range for {} ({} actions)",
                self.spec.kind,
                self.n_actions()
            )));
        }
        let (reward, mut done) = match &mut self.game {
            Game::Catch(g) => g.step(action),
            Game::Collector(g) => g.step(action, self.frame),
            Game::Fuel(g) => g.step(action, &mut self.rng),
        };
        self.frame += 1;
        if self.frame >= self.spec.episode_cap {
            done = true;
        }
        self.done = done;
        self.score += reward;
        Ok(StepResult {
            obs: self.render(),
            reward,
            done,
            score: self.score,
        })
    }

    /// Pure function of the game state, the frame counter and the active
    /// injections.
    pub fn render(&self) -> Observation {
        let mut obs = Observation::blank(self.spec.size);
        match &self.game {
            Game::Catch(g) => g.draw(&mut obs),
            Game::Collector(g) => g.draw(&mut obs),
            Game::Fuel(g) => g.draw(&mut obs),
        }
        for inj in self.injections.iter().filter(|i| i.active_at(self.frame)) {
            let w = inj.sprite.width;
            for (i, (&p, &on)) in inj.sprite.pixels.iter().zip(&inj.sprite.stencil).enumerate() {
                if on {
                    obs.set(inj.row + i / w, inj.col + i % w, p);
                }
            }
        }
        obs
    }

    pub fn inject(&mut self, spec: InjectionSpec) -> Result<()> {
        if !spec.fits(self.spec.size) {
            return Err(Error::InvalidArgument(format!(
                "sprite {}×{} at ({}, {}) does not fit a {}×{} observation",
                spec.sprite.height, spec.sprite.width, spec.row, spec.col, self.spec.size, self.spec.size
            )));
        }
        self.injections.push(spec);
        Ok(())
    }

    pub fn clear_injections(&mut self) {
        self.injections.clear();
    }

    /// `(fuel, max)` for the fuel game.
    pub fn fuel_level(&self) -> Option<(u32, u32)> {
        match &self.game {
            Game::Fuel(f) => Some((f.fuel(), f.max_fuel())),
            _ => None,
        }
    }
}
