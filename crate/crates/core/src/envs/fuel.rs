use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Observation, AGENT, FUEL_BAR, TARGET};

pub const TARGETS: usize = 3;
/// Fuel units per observation column of the bar.
pub const FUEL_PER_PIXEL: u32 = 2;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fuel {
    size: usize,
    agent: (usize, usize),
    fuel: u32,
    targets: Vec<(usize, usize)>,
}

impl Fuel {
    pub(super) fn new(size: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut g = Self {
            size,
            agent: (0, size / 2),
            fuel: FUEL_PER_PIXEL * size as u32,
            targets: Vec::with_capacity(TARGETS),
        };
        for _ in 0..TARGETS {
            g.spawn_target(rng);
        }
        g
    }

    pub fn from_parts(size: usize, agent: (usize, usize), fuel: u32, targets: Vec<(usize, usize)>) -> Self {
        Self {
            size,
            agent,
            fuel,
            targets,
        }
    }

    fn spawn_target(&mut self, rng: &mut ChaCha8Rng) {
        loop {
            let t = (rng.gen_range(self.size / 4..self.size - 1), rng.gen_range(0..self.size));
            if t != self.agent && !self.targets.contains(&t) {
                self.targets.push(t);
                return;
            }
        }
    }

    pub fn agent(&self) -> (usize, usize) {
        self.agent
    }

    pub fn fuel(&self) -> u32 {
        self.fuel
    }

    pub fn max_fuel(&self) -> u32 {
        FUEL_PER_PIXEL * self.size as u32
    }

    pub fn targets(&self) -> &[(usize, usize)] {
        &self.targets
    }

    /// Lit columns of the fuel bar.
    pub fn bar_pixels(&self) -> usize {
        self.fuel.div_ceil(FUEL_PER_PIXEL) as usize
    }

    /// Row of the fuel bar; the agent lives on the rows above it.
    pub fn bar_row(&self) -> usize {
        self.size - 1
    }

    /// Targets swim one column per step, rightwards on even rows and
    /// leftwards on odd rows, wrapping at the edges.
    fn drift(&mut self) {
        let n = self.size;
        for t in &mut self.targets {
            t.1 = if t.0 % 2 == 0 { (t.1 + 1) % n } else { (t.1 + n - 1) % n };
        }
    }

    /// Actions: 0 up, 1 down, 2 left, 3 right, 4 stay, 5 collect.
    pub(super) fn step(&mut self, action: usize, rng: &mut ChaCha8Rng) -> (f64, bool) {
        let (r, c) = self.agent;
        let last_row = self.size - 2;
        self.agent = match action {
            0 => (r.saturating_sub(1), c),
            1 => ((r + 1).min(last_row), c),
            2 => (r, c.saturating_sub(1)),
            3 => (r, (c + 1).min(self.size - 1)),
            _ => (r, c),
        };
        let mut reward = 0.0;
        if action == 5 {
            let (ar, ac) = self.agent;
            if let Some(i) = self
                .targets
                .iter()
                .position(|&(tr, tc)| tr.abs_diff(ar) <= 1 && tc.abs_diff(ac) <= 1)
            {
                self.targets.remove(i);
                self.spawn_target(rng);
                reward += 1.0;
            }
        }
        self.drift();
        if self.agent.0 == 0 {
            self.fuel = self.max_fuel();
        } else {
            self.fuel = self.fuel.saturating_sub(1);
            if self.fuel == 0 {
                return (reward - 1.0, true);
            }
        }
        (reward, false)
    }

    pub(super) fn draw(&self, obs: &mut Observation) {
        for &(r, c) in &self.targets {
            obs.set(r, c, TARGET);
        }
        let bar = self.bar_row();
        for c in 0..self.bar_pixels() {
            obs.set(bar, c, FUEL_BAR);
        }
        obs.set(self.agent.0, self.agent.1, AGENT);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn surface_keeps_tank_full() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut g = Fuel::new(20, &mut rng);
        for _ in 0..3 {
            g.step(4, &mut rng);
            let mut obs = Observation::blank(20);
            g.draw(&mut obs);
            assert_eq!(g.bar_pixels(), 20);
            assert_eq!((0..20).filter(|&c| obs.get(19, c) == FUEL_BAR).count(), 20);
        }
    }

    #[test]
    fn fuel_drains_below_surface() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut g = Fuel::from_parts(20, (0, 10), 40, vec![(15, 3)]);
        g.step(1, &mut rng);
        assert_eq!(g.fuel(), 39);
        assert_eq!(g.bar_pixels(), 20);
        g.step(4, &mut rng);
        g.step(4, &mut rng);
        assert_eq!(g.fuel(), 37);
        assert_eq!(g.bar_pixels(), 19);
    }

    #[test]
    fn empty_tank_ends_episode() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut g = Fuel::from_parts(20, (5, 10), 2, vec![(15, 3)]);
        assert_eq!(g.step(4, &mut rng), (0.0, false));
        assert_eq!(g.step(4, &mut rng), (-1.0, true));
    }

    #[test]
    fn collect_adjacent_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut g = Fuel::from_parts(20, (14, 4), 30, vec![(15, 3)]);
        assert_eq!(g.step(5, &mut rng), (1.0, false));
        assert_eq!(g.targets().len(), 1);
        assert_ne!(g.targets()[0], (15, 3));
        // moving onto a target does not collect it
        let t = g.targets()[0];
        let mut g2 = Fuel::from_parts(20, (t.0 - 1, t.1), 30, vec![t]);
        assert_eq!(g2.step(1, &mut rng), (0.0, false));
    }

    #[test]
    fn targets_drift_and_wrap() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut g = Fuel::from_parts(10, (0, 5), 20, vec![(4, 9), (5, 0)]);
        g.step(4, &mut rng);
        assert_eq!(g.targets(), &[(4, 0), (5, 9)]);
        g.step(4, &mut rng);
        assert_eq!(g.targets(), &[(4, 1), (5, 8)]);
    }
}
