//! Event-driven simulation of the finite-state multiplicative coalescent:
//! each pair of blocks with masses `x` and `y` merges at rate `x * y` into a
//! single block of mass `x + y`. Used as an independent oracle against the
//! graphical construction, together with the quadratic-variation martingale
//! functional of the squared norm.

use crate::engine::{ord, ComponentVector, MassVector};
use crate::field::CounterRng;

/// Piecewise-constant trajectory: the state at each jump time, starting
/// with the initial state at time 0.
#[derive(Clone, Debug)]
pub struct Trajectory {
    steps: Vec<(f64, ComponentVector)>,
    horizon: f64,
}

impl Trajectory {
    /// State in force at time `t` (requires `t <= horizon`).
    pub fn state_at(&self, t: f64) -> &ComponentVector {
        assert!(t <= self.horizon + 1e-12, "time beyond simulated horizon");
        let idx = self.steps.partition_point(|(s, _)| *s <= t);
        &self.steps[idx.saturating_sub(1)].1
    }

    pub fn final_state(&self) -> &ComponentVector {
        &self.steps.last().unwrap().1
    }

    pub fn jump_count(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn steps(&self) -> &[(f64, ComponentVector)] {
        &self.steps
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }
}

/// Simulate the jump process on `[0, horizon]`. Holding times are
/// exponential with total rate `sum_{i<j} x_i x_j`; the merging pair is
/// chosen with probability proportional to `x_i * x_j` by sampling each
/// endpoint proportionally to its mass and rejecting equal picks.
pub fn simulate_jump_process(x: &MassVector, horizon: f64, rng: &mut CounterRng) -> Trajectory {
    assert!(horizon >= 0.0);
    let mut blocks: Vec<f64> = x.as_slice().iter().copied().filter(|&m| m > 0.0).collect();
    let mut steps = vec![(0.0, ord(&MassVector::new(blocks.clone())))];
    let mut time = 0.0;
    loop {
        if blocks.len() < 2 {
            break;
        }
        let total: f64 = blocks.iter().sum();
        let sum_sq: f64 = blocks.iter().map(|m| m * m).sum();
        let rate = 0.5 * (total * total - sum_sq);
        if rate <= 0.0 {
            break;
        }
        time += rng.next_exp(rate);
        if time > horizon {
            break;
        }
        let (i, j) = pick_pair(&blocks, total, rng);
        let merged = blocks[i] + blocks[j];
        let hi = i.max(j);
        let lo = i.min(j);
        blocks.swap_remove(hi);
        blocks[lo] = merged;
        steps.push((time, ord(&MassVector::new(blocks.clone()))));
    }
    Trajectory {
        steps,
        horizon,
    }
}

fn pick_pair(blocks: &[f64], total: f64, rng: &mut CounterRng) -> (usize, usize) {
    loop {
        let i = pick_weighted(blocks, total, rng);
        let j = pick_weighted(blocks, total, rng);
        if i != j {
            return (i, j);
        }
    }
}

fn pick_weighted(blocks: &[f64], total: f64, rng: &mut CounterRng) -> usize {
    let mut target = rng.next_unit() * total;
    for (k, &m) in blocks.iter().enumerate() {
        target -= m;
        if target <= 0.0 {
            return k;
        }
    }
    blocks.len() - 1
}

/// `||X(t)||^2 - int_0^t (||X(s)||^4 - sum_k X_k^4(s)) ds`, the integral
/// exact because the trajectory is piecewise constant. The expectation of
/// this functional stays at `||x||^2`.
pub fn martingale_functional(trajectory: &Trajectory, t: f64) -> f64 {
    assert!(t <= trajectory.horizon() + 1e-12);
    let mut integral = 0.0;
    let steps = trajectory.steps();
    for (k, (start, state)) in steps.iter().enumerate() {
        if *start >= t {
            break;
        }
        let end = steps.get(k + 1).map_or(t, |(s, _)| s.min(t));
        let n2 = state.norm_sq();
        integral += (end - start) * (n2 * n2 - state.power_sum(4));
    }
    let state = trajectory.state_at(t);
    state.norm_sq() - integral
}

/// `sum_k v_k^p` for even `p`, plus the plain fourth power of the norm.
pub fn moment_norms(v: &ComponentVector, p: u32) -> f64 {
    assert!(p >= 2 && p % 2 == 0, "even moment order expected");
    v.power_sum(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_block_never_jumps() {
        let mut rng = CounterRng::new(3, 0);
        let traj = simulate_jump_process(&MassVector::new(vec![2.5]), 100.0, &mut rng);
        assert_eq!(traj.jump_count(), 0);
        assert_eq!(traj.final_state().as_slice(), &[2.5]);
        // No merges: integrand vanishes, functional is constant a^2.
        assert_eq!(martingale_functional(&traj, 50.0), 2.5 * 2.5);
    }

    #[test]
    fn two_blocks_merge_at_rate_one() {
        // x = (1,1): first jump time is Exp(1), so P(merged by t) = 1 - e^-t.
        let t = 0.7;
        let trials = 40_000;
        let mut merged = 0;
        for s in 0..trials {
            let mut rng = CounterRng::new(99, s);
            let traj = simulate_jump_process(&MassVector::new(vec![1.0, 1.0]), t, &mut rng);
            if traj.jump_count() == 1 {
                merged += 1;
            }
        }
        let p_hat = merged as f64 / trials as f64;
        let p = 1.0 - (-t as f64).exp();
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((p_hat - p).abs() < 4.0 * se, "p_hat = {p_hat}, p = {p}");
    }

    #[test]
    fn martingale_at_time_zero_is_norm_sq() {
        let x = MassVector::new(vec![1.0, 2.0, 0.5]);
        let mut rng = CounterRng::new(7, 1);
        let traj = simulate_jump_process(&x, 1.0, &mut rng);
        assert!((martingale_functional(&traj, 0.0) - x.norm_sq()).abs() < 1e-12);
    }

    #[test]
    fn mass_conserved_and_block_count_decreases() {
        let x = MassVector::new(vec![0.4, 1.0, 0.7, 1.3]);
        for s in 0..200 {
            let mut rng = CounterRng::new(31, s);
            let traj = simulate_jump_process(&x, 2.0, &mut rng);
            let mut prev_blocks = usize::MAX;
            for (_, state) in traj.steps() {
                assert!((state.total() - x.total()).abs() < 1e-12 * x.total());
                let blocks = state.len_nonzero();
                assert!(prev_blocks == usize::MAX || blocks + 1 == prev_blocks);
                prev_blocks = blocks;
            }
        }
    }

    #[test]
    fn moment_norm_values() {
        let v = ord(&MassVector::new(vec![2.0, 1.0]));
        assert_eq!(moment_norms(&v, 4), 17.0);
        let z = ord(&MassVector::new(vec![0.0, 0.0]));
        assert_eq!(moment_norms(&z, 4), 0.0);
        let u = ord(&MassVector::new(vec![1.0, 1.0, 1.0]));
        let n2 = u.norm_sq();
        assert_eq!(n2 * n2, 9.0);
    }
}
