//! Windowed multiplicative budget control.
//!
//! The controller owns the scaling factor `alpha` that turns a similarity
//! weight into a selection probability. It starts from `2 * rho` (a prior of
//! 0.5 for the mean weight) and, after every `W` query entities, compares
//! the selections observed in that window with the window target
//! `B_w = ceil(B * W / |S|)`:
//!
//! ```text
//! alpha <- alpha * (1 + eta * (B_w - m_w) / B_w)
//! ```
//!
//! `alpha` is clamped to `[ALPHA_MIN, 1]`. A trailing partial window never
//! triggers an update.

use alloc::vec::Vec;

/// Lower clamp for alpha; keeps the multiplicative update able to recover.
pub const ALPHA_MIN: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetController {
    alpha: f64,
    eta: f64,
    window_size: usize,
    window_target: u64,
    window_selections: u64,
    entity_count: usize,
    total_budget: u64,
    alpha_trace: Vec<(usize, f64)>,
    adaptive: bool,
}

/// `B = round(rho * k * |S|)`.
pub fn total_budget(rho: f64, k: usize, s_size: usize) -> u64 {
    libm::round(rho * k as f64 * s_size as f64) as u64
}

/// `B_w = ceil(B * W / |S|)`; zero when there are no query entities.
pub fn window_target(budget: u64, window_size: usize, s_size: usize) -> u64 {
    if s_size == 0 {
        return 0;
    }
    // Integer ceiling avoids float error on exact multiples.
    let num = budget as u128 * window_size as u128;
    num.div_ceil(s_size as u128) as u64
}

impl BudgetController {
    /// Fresh controller for a stream of `s_size` query entities.
    pub fn new(rho: f64, k: usize, s_size: usize, window_size: usize, eta: f64) -> Self {
        let total_budget = total_budget(rho, k, s_size);
        Self {
            alpha: (2.0 * rho).clamp(ALPHA_MIN, 1.0),
            eta,
            window_size: window_size.max(1),
            window_target: window_target(total_budget, window_size, s_size),
            window_selections: 0,
            entity_count: 0,
            total_budget,
            alpha_trace: Vec::new(),
            adaptive: true,
        }
    }

    /// Controller whose alpha never changes. Selections and entities are
    /// still counted. Used to study the sampler at a calibrated alpha.
    pub fn frozen(alpha: f64) -> Self {
        Self {
            alpha: alpha.clamp(0.0, 1.0),
            eta: 0.0,
            window_size: usize::MAX,
            window_target: 0,
            window_selections: 0,
            entity_count: 0,
            total_budget: 0,
            alpha_trace: Vec::new(),
            adaptive: false,
        }
    }

    /// Replaces alpha, e.g. to resume from a known state in tests.
    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = if self.adaptive {
            alpha.clamp(ALPHA_MIN, 1.0)
        } else {
            alpha.clamp(0.0, 1.0)
        };
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn window_size(&self) -> usize {
        self.window_size
    }

    pub fn window_target(&self) -> u64 {
        self.window_target
    }

    pub fn window_selections(&self) -> u64 {
        self.window_selections
    }

    pub fn entity_count(&self) -> usize {
        self.entity_count
    }

    pub fn total_budget(&self) -> u64 {
        self.total_budget
    }

    pub fn is_adaptive(&self) -> bool {
        self.adaptive
    }

    /// `(entity_count, alpha)` after each completed window.
    pub fn alpha_trace(&self) -> &[(usize, f64)] {
        &self.alpha_trace
    }

    pub fn record_selection(&mut self) {
        self.window_selections += 1;
    }

    /// Marks one query entity as fully filtered; closes the window on every
    /// `W`-th entity.
    pub fn end_entity(&mut self) {
        self.entity_count += 1;
        if !self.adaptive || !self.entity_count.is_multiple_of(self.window_size) {
            return;
        }
        self.alpha = self.updated_alpha();
        self.alpha_trace.push((self.entity_count, self.alpha));
        self.window_selections = 0;
    }

    fn updated_alpha(&self) -> f64 {
        if self.window_target == 0 {
            // No budget means nothing should be selected.
            return ALPHA_MIN;
        }
        let target = self.window_target as f64;
        let error = (target - self.window_selections as f64) / target;
        (self.alpha * (1.0 + self.eta * error)).clamp(ALPHA_MIN, 1.0)
    }
}

/// Offline reference `min(1, B / sum(w))`. `None` when the weights sum to
/// zero. Never consulted by the live controller.
pub fn ideal_alpha<I>(weights: I, budget: f64) -> Option<f64>
where
    I: IntoIterator<Item = f64>,
{
    let total: f64 = weights.into_iter().sum();
    if budget <= 0.0 {
        return (total > 0.0).then_some(0.0);
    }
    (total > 0.0).then(|| (budget / total).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_state_follows_budget_definition() {
        let c = BudgetController::new(0.15, 5, 2000, 200, 0.05);
        assert!((c.alpha() - 0.30).abs() < 1e-15);
        assert_eq!(c.total_budget(), 1500);
        assert_eq!(c.window_target(), 150);
        assert_eq!(c.window_selections(), 0);
        assert_eq!(c.entity_count(), 0);
        assert!(c.alpha_trace().is_empty());
    }

    #[test]
    fn initial_alpha_is_clamped_to_one() {
        let c = BudgetController::new(0.6, 5, 100, 10, 0.05);
        assert_eq!(c.alpha(), 1.0);
    }

    #[test]
    fn record_selection_counts_independently_of_alpha() {
        for alpha in [0.01, 0.5, 1.0] {
            let mut c = BudgetController::new(0.15, 5, 2000, 200, 0.05).with_alpha(alpha);
            c.record_selection();
            assert_eq!(c.window_selections(), 1);
            for _ in 0..9 {
                c.record_selection();
            }
            assert_eq!(c.window_selections(), 10);
            assert_eq!(c.alpha(), alpha);
        }
    }

    fn at_boundary(alpha: f64, target_per_window: u64, selections: u64) -> BudgetController {
        // |S| = W makes B_w = B = rho * k * W; pick rho so B_w hits the target.
        let window = 100;
        let rho = target_per_window as f64 / (5.0 * window as f64);
        let mut c = BudgetController::new(rho, 5, window, window, 0.05).with_alpha(alpha);
        assert_eq!(c.window_target(), target_per_window);
        for _ in 0..selections {
            c.record_selection();
        }
        for _ in 0..window {
            c.end_entity();
        }
        c
    }

    #[test]
    fn update_on_target_leaves_alpha_unchanged() {
        let c = at_boundary(0.30, 150, 150);
        assert_eq!(c.alpha(), 0.30);
        assert_eq!(c.window_selections(), 0);
        assert_eq!(c.alpha_trace(), &[(100, 0.30)]);
    }

    #[test]
    fn overshoot_update_matches_closed_form() {
        let c = at_boundary(0.30, 30, 40);
        let expected = 0.30 * (1.0 + 0.05 * (30.0 - 40.0) / 30.0);
        assert_eq!(c.alpha(), expected);
        assert!((c.alpha() - 0.295).abs() <= f64::EPSILON * 0.295);
    }

    #[test]
    fn alpha_is_clamped_at_the_floor() {
        let c = at_boundary(ALPHA_MIN, 10, 10_000);
        assert_eq!(c.alpha(), ALPHA_MIN);
    }

    #[test]
    fn undershoot_raises_and_overshoot_lowers_alpha() {
        assert!(at_boundary(0.3, 30, 10).alpha() > 0.3);
        assert!(at_boundary(0.3, 30, 50).alpha() < 0.3);
    }

    #[test]
    fn partial_window_does_not_update() {
        let mut c = BudgetController::new(0.15, 5, 250, 200, 0.05);
        for _ in 0..250 {
            c.end_entity();
        }
        assert_eq!(c.alpha_trace().len(), 1);
        assert_eq!(c.entity_count(), 250);
    }

    #[test]
    fn frozen_controller_never_moves() {
        let mut c = BudgetController::frozen(0.42);
        for _ in 0..10_000 {
            c.record_selection();
            c.end_entity();
        }
        assert_eq!(c.alpha(), 0.42);
        assert!(c.alpha_trace().is_empty());
        assert_eq!(c.entity_count(), 10_000);
    }

    #[test]
    fn ideal_alpha_cases() {
        assert_eq!(ideal_alpha([10.0, 10.0], 10.0), Some(0.5));
        assert_eq!(ideal_alpha([10.0, 10.0], 30.0), Some(1.0));
        assert_eq!(ideal_alpha([10.0, 10.0], 0.0), Some(0.0));
        assert_eq!(ideal_alpha([0.0, 0.0], 5.0), None);
        assert_eq!(ideal_alpha(core::iter::empty(), 5.0), None);
    }

    #[test]
    fn budget_rounding() {
        assert_eq!(total_budget(0.15, 5, 2000), 1500);
        assert_eq!(total_budget(0.15, 5, 3), 2); // 2.25 rounds down
        assert_eq!(total_budget(0.15, 5, 10), 8); // 7.5 rounds half away from zero
        assert_eq!(window_target(1500, 200, 2000), 150);
        assert_eq!(window_target(7, 3, 10), 3);
        assert_eq!(window_target(10, 5, 0), 0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn fixed_point_when_on_target(alpha in 0.001f64..1.0, windows in 1usize..20) {
                let mut c = BudgetController::new(0.15, 5, 1000, 40, 0.05).with_alpha(alpha);
                let target = c.window_target();
                for _ in 0..windows {
                    for _ in 0..target { c.record_selection(); }
                    for _ in 0..40 { c.end_entity(); }
                }
                prop_assert_eq!(c.alpha(), alpha);
                prop_assert_eq!(c.alpha_trace().len(), windows);
            }

            #[test]
            fn alpha_stays_in_bounds(selections in proptest::collection::vec(0u64..200, 1..40)) {
                let mut c = BudgetController::new(0.15, 5, 10_000, 40, 1.0);
                for m in selections {
                    for _ in 0..m { c.record_selection(); }
                    for _ in 0..40 { c.end_entity(); }
                    prop_assert!((ALPHA_MIN..=1.0).contains(&c.alpha()));
                }
            }
        }
    }
}
