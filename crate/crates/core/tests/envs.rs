//! Game rules checked against independent re-implementations.

use maskac::analysis::random_baseline;
use maskac::envs::{EnvKind, EnvSpec, Game, InjectionDuration, InjectionSpec, Sprite, AGENT, FUEL_BAR, TARGET};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Ball column after `steps` moves, by unfolding the reflections.
fn ball_col_after(start: usize, drift: i32, steps: usize, size: usize) -> usize {
    let period = 2 * (size as i64 - 1);
    let x = (start as i64 + drift as i64 * steps as i64).rem_euclid(period);
    if x < size as i64 {
        x as usize
    } else {
        (period - x) as usize
    }
}

/// Exact probability that uniformly random play catches the ball, by
/// propagating the paddle distribution over every start layout.
fn random_catch_probability(size: usize) -> f64 {
    let hw = (size / 6).max(1);
    let (lo, hi) = (hw, size - 1 - hw);
    let steps = size - 1;
    let mut total = 0.0;
    let starts: Vec<usize> = (hw..size - hw).collect();
    for &paddle0 in &starts {
        let mut dist = vec![0.0; size];
        dist[paddle0] = 1.0;
        for _ in 0..steps {
            let mut next = vec![0.0; size];
            for (p, &w) in dist.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                next[p.saturating_sub(1).max(lo)] += w / 3.0;
                next[p] += w / 3.0;
                next[(p + 1).min(hi)] += w / 3.0;
            }
            dist = next;
        }
        for col in 0..size {
            for drift in -1..=1 {
                let ball = ball_col_after(col, drift, steps, size);
                let caught: f64 = dist
                    .iter()
                    .enumerate()
                    .filter(|(p, _)| p.abs_diff(ball) <= hw)
                    .map(|(_, w)| w)
                    .sum();
                total += caught;
            }
        }
    }
    total / (starts.len() * size * 3) as f64
}

#[test]
fn random_catch_matches_exact_enumeration() {
    for size in [10, 20] {
        let p = random_catch_probability(size);
        let n = 4000;
        let stats = random_baseline(&EnvSpec::new(EnvKind::Catch, size), n, 17).unwrap();
        let expected = 2.0 * p - 1.0;
        let sigma = 2.0 * (p * (1.0 - p) / n as f64).sqrt();
        assert!(
            (stats.mean - expected).abs() < 3.0 * sigma,
            "size {size}: mean {} vs exact {expected} (σ {sigma})",
            stats.mean
        );
    }
}

#[test]
fn catch_ball_follows_reflection_rule() {
    let mut env = EnvSpec::new(EnvKind::Catch, 12).build().unwrap();
    for seed in 0..60 {
        env.reset(seed);
        let Game::Catch(g) = env.game() else { unreachable!() };
        let (col, drift) = (g.ball().1, g.drift());
        for t in 1..=11 {
            env.step(1).unwrap();
            let Game::Catch(g) = env.game() else { unreachable!() };
            assert_eq!(g.ball(), (t, ball_col_after(col, drift, t, 12)), "seed {seed}");
        }
    }
}

/// Collector rules written out independently of the game code.
struct SimCollector {
    size: usize,
    agent: (usize, usize),
    chaser: (usize, usize),
    pellets: Vec<(usize, usize)>,
}

impl SimCollector {
    fn step(&mut self, action: usize, frame: usize) -> (f64, bool) {
        let (r, c) = self.agent;
        let target = [
            (r.wrapping_sub(1), c),
            (r + 1, c),
            (r, c.wrapping_sub(1)),
            (r, c + 1),
            (r, c),
        ][action];
        let inside = |(r, c): (usize, usize)| r >= 1 && c >= 1 && r <= self.size - 2 && c <= self.size - 2;
        if inside(target) {
            self.agent = target;
        }
        if self.agent == self.chaser {
            return (-1.0, true);
        }
        let before = self.pellets.len();
        self.pellets.retain(|&p| p != self.agent);
        let reward = (before - self.pellets.len()) as f64;
        if self.pellets.is_empty() {
            return (reward, true);
        }
        if frame % 2 == 1 {
            let (ar, ac) = (self.agent.0 as i64, self.agent.1 as i64);
            let (cr, cc) = (self.chaser.0 as i64, self.chaser.1 as i64);
            let (nr, nc) = if ar != cr {
                (cr + (ar - cr).signum(), cc)
            } else {
                (cr, cc + (ac - cc).signum())
            };
            self.chaser = (nr as usize, nc as usize);
            if self.chaser == self.agent {
                return (reward - 1.0, true);
            }
        }
        (reward, false)
    }
}

#[test]
fn collector_replay_matches_rules_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for episode in 0..40 {
        let spec = EnvSpec::new(EnvKind::Collector, 10);
        let mut env = spec.build().unwrap();
        let obs = env.reset(episode);
        let Game::Collector(g) = env.game() else { unreachable!() };
        assert_eq!(obs.count(TARGET), g.pellets().len());
        assert_eq!(g.pellets().len(), g.initial_pellets());
        let mut sim = SimCollector {
            size: 10,
            agent: g.agent(),
            chaser: g.chaser(),
            pellets: g.pellets().to_vec(),
        };
        let initial = sim.pellets.len() as f64;
        let mut frame = 0;
        let mut sim_score = 0.0;
        loop {
            let a = rng.gen_range(0..5);
            let step = env.step(a).unwrap();
            let (r, mut done) = sim.step(a, frame);
            frame += 1;
            done |= frame >= spec.episode_cap;
            sim_score += r;
            assert_eq!((step.reward, step.done), (r, done), "episode {episode} frame {frame}");
            if done {
                break;
            }
        }
        assert_eq!(env.score(), sim_score);
        assert!(env.score() <= initial);
    }
}

#[test]
fn fuel_level_matches_rules_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for episode in 0..20 {
        let size = 12;
        let mut env = EnvSpec::new(EnvKind::Fuel, size).build().unwrap();
        env.reset(episode);
        let max = 2 * size as u32;
        let (mut row, mut fuel) = (0usize, max);
        loop {
            // no collect action, so fuel is the only source of reward
            let a = if rng.gen_bool(0.6) { 1 } else { rng.gen_range(0..5) };
            let step = env.step(a).unwrap();
            row = match a {
                0 => row.saturating_sub(1),
                1 => (row + 1).min(size - 2),
                _ => row,
            };
            let empty = if row == 0 {
                fuel = max;
                false
            } else {
                fuel -= 1;
                fuel == 0
            };
            assert_eq!(env.fuel_level(), Some((fuel, max)));
            assert_eq!(step.reward, if empty { -1.0 } else { 0.0 });
            let lit = step.obs.pixels()[(size - 1) * size..]
                .iter()
                .filter(|&&p| p == FUEL_BAR)
                .count();
            assert_eq!(lit, fuel.div_ceil(2) as usize);
            if step.done {
                break;
            }
        }
    }
}

#[test]
fn surface_keeps_fuel_full() {
    let mut env = EnvSpec::new(EnvKind::Fuel, 20).build().unwrap();
    env.reset(3);
    for _ in 0..3 {
        let s = env.step(4).unwrap();
        assert_eq!(s.obs.count(FUEL_BAR), 20);
    }
}

#[test]
fn injected_full_bar_hides_depletion() {
    let size = 12;
    let mut env = EnvSpec::new(EnvKind::Fuel, size).build().unwrap();
    env.inject(InjectionSpec {
        sprite: Sprite::solid(1, size, FUEL_BAR).unwrap(),
        row: size - 1,
        col: 0,
        start_frame: 0,
        duration: InjectionDuration::Permanent,
    })
    .unwrap();
    env.reset(1);
    for t in 1..=(size * 3 / 2) {
        let s = env.step(1).unwrap();
        let (fuel, max) = env.fuel_level().unwrap();
        assert_eq!(fuel, max - t as u32);
        assert_eq!(s.obs.count(FUEL_BAR), size);
    }
}

fn kind_of(i: u8) -> EnvKind {
    [EnvKind::Catch, EnvKind::Collector, EnvKind::Fuel][i as usize % 3]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn injection_never_changes_returns(
        kind in 0u8..3,
        seed in any::<u64>(),
        actions in prop::collection::vec(0usize..6, 1..120),
        pos in (0usize..8, 0usize..8),
        start in 0usize..10,
        level in 0.0f32..=1.0,
    ) {
        let kind = kind_of(kind);
        let spec = EnvSpec::new(kind, 12);
        let play = |inject: bool| {
            let mut env = spec.build().unwrap();
            if inject {
                env.inject(InjectionSpec {
                    sprite: Sprite::solid(4, 4, level).unwrap(),
                    row: pos.0,
                    col: pos.1,
                    start_frame: start,
                    duration: InjectionDuration::Permanent,
                }).unwrap();
            }
            env.reset(seed);
            let mut rewards = Vec::new();
            for &a in &actions {
                let s = env.step(a % kind.n_actions()).unwrap();
                rewards.push((s.reward, s.done));
                if s.done {
                    break;
                }
            }
            rewards
        };
        prop_assert_eq!(play(false), play(true));
    }

    #[test]
    fn observations_bounded_and_episodes_capped(kind in 0u8..3, seed in any::<u64>(), cap in 1usize..40) {
        let kind = kind_of(kind);
        let mut spec = EnvSpec::new(kind, 10);
        spec.episode_cap = cap;
        let mut env = spec.build().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut obs = env.reset(seed);
        let mut steps = 0;
        loop {
            prop_assert!(obs.pixels().iter().all(|&p| (0.0..=1.0).contains(&p)));
            let s = env.step(rng.gen_range(0..kind.n_actions())).unwrap();
            steps += 1;
            obs = s.obs;
            if s.done {
                break;
            }
        }
        prop_assert!(steps <= cap);
        prop_assert!(env.step(0).is_err());
    }

    #[test]
    fn same_seed_same_trajectory(kind in 0u8..3, seed in any::<u64>(), actions in prop::collection::vec(0usize..6, 1..60)) {
        let kind = kind_of(kind);
        let run = || {
            let mut env = EnvSpec::new(kind, 10).build().unwrap();
            let mut frames = vec![env.reset(seed)];
            for &a in &actions {
                let s = env.step(a % kind.n_actions()).unwrap();
                frames.push(s.obs);
                if s.done {
                    break;
                }
            }
            frames
        };
        prop_assert_eq!(run(), run());
    }
}

#[test]
fn catch_start_layout() {
    let mut env = EnvSpec::new(EnvKind::Catch, 20).build().unwrap();
    for seed in 0..20 {
        let obs = env.reset(seed);
        let top: Vec<_> = (0..20).filter(|&c| obs.get(0, c) == TARGET).collect();
        assert_eq!(top.len(), 1);
        let bottom = (0..20).filter(|&c| obs.get(19, c) == AGENT).count();
        assert_eq!(bottom, 2 * 3 + 1);
    }
}
