use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Observation, AGENT, TARGET};

/// Paddle half-width for a board of side `size`: `max(1, size / 6)`.
pub fn paddle_half_width(size: usize) -> usize {
    (size / 6).max(1)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Catch {
    size: usize,
    ball_row: usize,
    ball_col: usize,
    drift: i32,
    paddle: usize,
}

impl Catch {
    pub(super) fn new(size: usize, rng: &mut ChaCha8Rng) -> Self {
        let ball_col = rng.gen_range(0..size);
        let drift = rng.gen_range(-1..=1);
        let hw = paddle_half_width(size);
        let paddle = rng.gen_range(hw..size - hw);
        Self::from_parts(size, ball_col, drift, paddle)
    }

    /// Layout with the ball on the top row.
    pub fn from_parts(size: usize, ball_col: usize, drift: i32, paddle: usize) -> Self {
        Self {
            size,
            ball_row: 0,
            ball_col,
            drift,
            paddle,
        }
    }

    pub fn ball(&self) -> (usize, usize) {
        (self.ball_row, self.ball_col)
    }

    pub fn drift(&self) -> i32 {
        self.drift
    }

    pub fn half_width(&self) -> usize {
        paddle_half_width(self.size)
    }

    /// Column of the paddle centre.
    pub fn paddle(&self) -> usize {
        self.paddle
    }

    /// Actions: 0 left, 1 stay, 2 right.
    pub(super) fn step(&mut self, action: usize) -> (f64, bool) {
        let lo = self.half_width();
        let hi = self.size - 1 - lo;
        self.paddle = match action {
            0 => self.paddle.saturating_sub(1).max(lo),
            2 => (self.paddle + 1).min(hi),
            _ => self.paddle,
        };
        self.ball_row += 1;
        let mut col = self.ball_col as i32 + self.drift;
        let last = self.size as i32 - 1;
        if col < 0 {
            col = -col;
            self.drift = -self.drift;
        } else if col > last {
            col = 2 * last - col;
            self.drift = -self.drift;
        }
        self.ball_col = col as usize;
        if self.ball_row == self.size - 1 {
            let caught = self.ball_col.abs_diff(self.paddle) <= self.half_width();
            (if caught { 1.0 } else { -1.0 }, true)
        } else {
            (0.0, false)
        }
    }

    pub(super) fn draw(&self, obs: &mut Observation) {
        obs.set(self.ball_row, self.ball_col, TARGET);
        let row = self.size - 1;
        let hw = self.half_width();
        for c in self.paddle - hw..=self.paddle + hw {
            obs.set(row, c, AGENT);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{EnvKind, EnvSpec, Game};

    #[test]
    fn reset_layout() {
        let mut env = EnvSpec::new(EnvKind::Catch, 20).build().unwrap();
        for seed in 0..20 {
            let obs = env.reset(seed);
            let Game::Catch(g) = env.game() else { unreachable!() };
            assert_eq!(g.ball().0, 0);
            assert_eq!(obs.get(0, g.ball().1), TARGET);
            assert_eq!(obs.count(TARGET), 1);
            assert_eq!(obs.count(AGENT), 7);
            for c in g.paddle() - 3..=g.paddle() + 3 {
                assert_eq!(obs.get(19, c), AGENT);
            }
        }
    }

    #[test]
    fn paddle_under_ball_catches() {
        // straight drop onto a paddle already in place
        let mut g = Catch::from_parts(20, 7, 0, 7);
        for _ in 0..18 {
            assert_eq!(g.step(1), (0.0, false));
        }
        assert_eq!(g.step(1), (1.0, true));
        let mut miss = Catch::from_parts(20, 2, 0, 10);
        let mut last = (0.0, false);
        for _ in 0..19 {
            last = miss.step(1);
        }
        assert_eq!(last, (-1.0, true));
    }

    #[test]
    fn ball_reflects_off_walls() {
        let mut g = Catch::from_parts(20, 0, -1, 5);
        g.step(1);
        assert_eq!(g.ball(), (1, 1));
        assert_eq!(g.drift(), 1);
        let mut g = Catch::from_parts(20, 19, 1, 5);
        g.step(1);
        assert_eq!(g.ball(), (1, 18));
        assert_eq!(g.drift(), -1);
    }

    #[test]
    fn agent_wins_overlap() {
        let mut g = Catch::from_parts(20, 7, 0, 7);
        for _ in 0..19 {
            g.step(1);
        }
        let mut obs = Observation::blank(20);
        g.draw(&mut obs);
        assert_eq!(obs.get(19, 7), AGENT);
        assert_eq!(obs.count(TARGET), 0);
    }
}
