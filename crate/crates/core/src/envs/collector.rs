use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use super::{Observation, AGENT, CHASER, TARGET, WALL};

pub const PELLETS: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Collector {
    size: usize,
    agent: (usize, usize),
    chaser: (usize, usize),
    pellets: Vec<(usize, usize)>,
    initial_pellets: usize,
}

fn manhattan(a: (usize, usize), b: (usize, usize)) -> usize {
    a.0.abs_diff(b.0) + a.1.abs_diff(b.1)
}

impl Collector {
    pub(super) fn new(size: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut cells: Vec<(usize, usize)> = (1..size - 1).flat_map(|r| (1..size - 1).map(move |c| (r, c))).collect();
        cells.shuffle(rng);
        let agent = cells[0];
        let min_gap = (size - 2) / 2;
        let chaser_at = cells[1..]
            .iter()
            .position(|&c| manhattan(c, agent) >= min_gap)
            .map_or(1, |i| i + 1);
        let chaser = cells[chaser_at];
        let pellets = cells
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != 0 && i != chaser_at)
            .map(|(_, &c)| c)
            .take(PELLETS)
            .collect();
        Self::from_parts(size, agent, chaser, pellets)
    }

    pub fn from_parts(
        size: usize,
        agent: (usize, usize),
        chaser: (usize, usize),
        pellets: Vec<(usize, usize)>,
    ) -> Self {
        let initial_pellets = pellets.len();
        Self {
            size,
            agent,
            chaser,
            pellets,
            initial_pellets,
        }
    }

    pub fn agent(&self) -> (usize, usize) {
        self.agent
    }

    pub fn chaser(&self) -> (usize, usize) {
        self.chaser
    }

    pub fn pellets(&self) -> &[(usize, usize)] {
        &self.pellets
    }

    pub fn initial_pellets(&self) -> usize {
        self.initial_pellets
    }

    fn is_wall(&self, (r, c): (usize, usize)) -> bool {
        r == 0 || c == 0 || r == self.size - 1 || c == self.size - 1
    }

    /// Actions: 0 up, 1 down, 2 left, 3 right, 4 stay. `frame` is the
    /// number of steps already taken; the chaser moves on odd frames.
    pub(super) fn step(&mut self, action: usize, frame: usize) -> (f64, bool) {
        let (r, c) = self.agent;
        let next = match action {
            0 => (r - 1, c),
            1 => (r + 1, c),
            2 => (r, c - 1),
            3 => (r, c + 1),
            _ => (r, c),
        };
        if !self.is_wall(next) {
            self.agent = next;
        }
        if self.agent == self.chaser {
            return (-1.0, true);
        }
        let mut reward = 0.0;
        if let Some(i) = self.pellets.iter().position(|&p| p == self.agent) {
            self.pellets.remove(i);
            reward += 1.0;
            if self.pellets.is_empty() {
                return (reward, true);
            }
        }
        if frame % 2 == 1 {
            let (cr, cc) = self.chaser;
            let (ar, ac) = self.agent;
            self.chaser = if cr != ar {
                (if ar > cr { cr + 1 } else { cr - 1 }, cc)
            } else if cc != ac {
                (cr, if ac > cc { cc + 1 } else { cc - 1 })
            } else {
                (cr, cc)
            };
            if self.chaser == self.agent {
                return (reward - 1.0, true);
            }
        }
        (reward, false)
    }

    pub(super) fn draw(&self, obs: &mut Observation) {
        let n = self.size;
        for i in 0..n {
            obs.set(0, i, WALL);
            obs.set(n - 1, i, WALL);
            obs.set(i, 0, WALL);
            obs.set(i, n - 1, WALL);
        }
        for &(r, c) in &self.pellets {
            obs.set(r, c, TARGET);
        }
        obs.set(self.chaser.0, self.chaser.1, CHASER);
        obs.set(self.agent.0, self.agent.1, AGENT);
    }
}
