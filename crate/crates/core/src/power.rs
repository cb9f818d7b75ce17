//! Iterative sum-rate maximizing power allocation.
//!
//! The rate of every user is rewritten through its MMSE,
//! `log2(1 + gamma) = max_c max_a (-a e / ln 2 + log2 a + 1 / ln 2)`, which
//! turns the non-convex sum-rate problem into three blocks that each have a
//! closed-form optimum:
//!
//! * `c`: the MMSE equalizer of every user, given the powers;
//! * `a`: the MSE weights `a = 1 / e`, given the powers;
//! * `p`: the powers minimizing `sum a e` under the budget `sum p <= P` and
//!   the minimum-rate constraints, given `c` and `a`.
//!
//! The `p` block is solved through its KKT conditions: for fixed multipliers
//! the stationary power is `p = (a Re(c h^H w) / tau)^2`, the budget
//! multiplier is found by bisection and the rate multipliers by an active-set
//! fixed point. Alternating the three blocks never decreases the sum rate.

use std::f64::consts::LN_2;

use nalgebra::{DMatrix, DVector};

use crate::beams::BeamGrouping;
use crate::precoding::LinkGains;
use crate::rates::{interference_terms, sum_rate, LinkBudget};
use crate::{Complex, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    /// Iteration cap `T_max`.
    pub max_iterations: usize,
    /// Per-user minimum rate in bps/Hz; 0 disables the rate constraints.
    pub min_rate: f64,
    /// Relative accuracy of the budget bisection (`P - sum p <= tol * P`).
    pub dual_tolerance: f64,
    /// Cap on barrier centering stages of a power step with minimum rates.
    pub outer_cap: usize,
    /// Stop after this many consecutive iterations improving by less than
    /// `1e-12`. `None` always runs `max_iterations`.
    pub stall_window: Option<usize>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iterations: 20,
            min_rate: 0.0,
            dual_tolerance: 1e-10,
            outer_cap: 50,
            stall_window: Some(3),
        }
    }
}

const STALL_IMPROVEMENT: f64 = 1e-12;
/// Relative slack accepted on a rate constraint.
const SLACK_TOL: f64 = 1e-8;
/// Rate shortfall still counted as meeting `min_rate`.
pub const RATE_TOL: f64 = 1e-6;

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_rate >= 0.0 && self.min_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "minimum rate must be non-negative, got {}",
                self.min_rate
            )));
        }
        if !(self.dual_tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dual tolerance must be positive, got {}",
                self.dual_tolerance
            )));
        }
        Ok(())
    }

    /// SINR target `2^R_min - 1`.
    pub fn eta(&self) -> f64 {
        self.min_rate.exp2() - 1.0
    }

    /// Noise-scaled SINR target `eta * sigma^2`.
    pub fn omega(&self, noise: f64) -> f64 {
        self.eta() * noise
    }

    fn constrained(&self) -> bool {
        self.min_rate > 0.0
    }
}

/// Auxiliary variables of one iteration, indexed by user.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxState {
    pub equalizers: Vec<Complex>,
    pub weights: Vec<f64>,
    /// MMSE `e^o` at the powers the equalizers were computed from.
    pub mse: Vec<f64>,
    /// Powers the equalizers and weights were computed from.
    pub powers: Vec<f64>,
    pub iteration: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualVariables {
    /// Budget multiplier `lambda`.
    pub budget: f64,
    /// Minimum-rate multipliers `mu`, by user.
    pub rate: Vec<f64>,
}

/// Result of one power block update.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerStep {
    pub powers: Vec<f64>,
    pub duals: DualVariables,
    /// Multiplier rounds used.
    pub rounds: usize,
    /// Whether every rate constraint holds within tolerance.
    pub constraints_met: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub powers: Vec<f64>,
    /// Sum rate after every iteration.
    pub trace: Vec<f64>,
    pub duals: DualVariables,
    /// False when the minimum rates cannot be met within the budget.
    pub feasible: bool,
    pub iterations_used: usize,
}

/// MMSE equalizers `c = (sqrt(p) h^H w)^* / (p |h^H w|^2 + xi)`.
pub fn update_c(powers: &[f64], grouping: &BeamGrouping, gains: &LinkGains, noise: f64) -> Vec<Complex> {
    let xi = interference_terms(grouping, gains, powers, noise);
    (0..grouping.users())
        .map(|k| {
            let g = gains.effective[k];
            let p = powers[k];
            (g * p.sqrt()).conj() / (p * g.norm_sqr() + xi[k])
        })
        .collect()
}

/// MSE `E|s - c y|^2` for arbitrary equalizers.
pub fn mse(
    equalizers: &[Complex],
    powers: &[f64],
    grouping: &BeamGrouping,
    gains: &LinkGains,
    noise: f64,
) -> Vec<f64> {
    let xi = interference_terms(grouping, gains, powers, noise);
    (0..grouping.users())
        .map(|k| {
            let g = gains.effective[k];
            let c = equalizers[k];
            let p = powers[k];
            1.0 - 2.0 * (c * g * p.sqrt()).re + c.norm_sqr() * (p * g.norm_sqr() + xi[k])
        })
        .collect()
}

/// MSE weights `a = 1 / e^o` together with `e^o`.
pub fn update_a(
    powers: &[f64],
    grouping: &BeamGrouping,
    gains: &LinkGains,
    noise: f64,
) -> (Vec<f64>, Vec<f64>) {
    let xi = interference_terms(grouping, gains, powers, noise);
    let e: Vec<f64> = (0..grouping.users())
        .map(|k| {
            let s = powers[k] * gains.effective[k].norm_sqr();
            1.0 - s / (s + xi[k])
        })
        .collect();
    (e.iter().map(|e| 1.0 / e).collect(), e)
}

/// Builds the full auxiliary state at `powers`.
pub fn auxiliary_state(
    powers: &[f64],
    grouping: &BeamGrouping,
    gains: &LinkGains,
    noise: f64,
    iteration: usize,
) -> AuxState {
    let equalizers = update_c(powers, grouping, gains, noise);
    let (weights, mse) = update_a(powers, grouping, gains, noise);
    AuxState {
        equalizers,
        weights,
        mse,
        powers: powers.to_vec(),
        iteration,
    }
}

/// The power block for fixed `c`, `a`:
/// `min sum_k (tau_k p_k - 2 b_k sqrt(p_k))` with `tau_k` shifted by the
/// multipliers.
#[derive(Debug, Clone)]
pub struct PowerSubproblem {
    /// `sum_u a_u |c_u|^2 |h_u^H w_{b(k)}|^2` over the users `u` whose
    /// interference-plus-signal term contains `p_k`.
    pub quadratic: Vec<f64>,
    /// `a_k Re(c_k h_k^H w_{b(k)})`, never negative.
    pub linear: Vec<f64>,
    /// `constraint[(u, k)]`: coefficient of `p_k` in user `u`'s rate
    /// constraint `sum_k constraint[(u, k)] p_k >= omega`.
    pub constraint: DMatrix<f64>,
    pub omega: f64,
}

impl PowerSubproblem {
    pub fn new(
        aux: &AuxState,
        grouping: &BeamGrouping,
        gains: &LinkGains,
        eta: f64,
        omega: f64,
    ) -> Self {
        let users = grouping.users();
        let cost: Vec<f64> = (0..users)
            .map(|u| aux.weights[u] * aux.equalizers[u].norm_sqr())
            .collect();
        let quadratic = (0..users)
            .map(|k| {
                let n = grouping.beam_of(k);
                let all: f64 = (0..users).map(|u| cost[u] * gains.power[(u, n)]).sum();
                let cancelled: f64 = grouping
                    .stronger_than(k)
                    .iter()
                    .map(|&u| cost[u] * gains.power[(u, n)])
                    .sum();
                all - cancelled
            })
            .collect();
        let linear = (0..users)
            .map(|k| (aux.weights[k] * (aux.equalizers[k] * gains.effective[k]).re).max(0.0))
            .collect();
        Self {
            quadratic,
            linear,
            constraint: constraint_matrix(grouping, gains, eta),
            omega,
        }
    }

    /// `tau_k` for multipliers `(lambda, mu)`: the quadratic coefficient plus
    /// `lambda + sum_u mu_u * (-constraint[(u, k)])`.
    pub fn tau(&self, lambda: f64, mu: &[f64]) -> Vec<f64> {
        (0..self.quadratic.len())
            .map(|k| {
                let penalty: f64 = mu
                    .iter()
                    .enumerate()
                    .filter(|(_, &m)| m != 0.0)
                    .map(|(u, &m)| -m * self.constraint[(u, k)])
                    .sum();
                self.quadratic[k] + lambda + penalty
            })
            .collect()
    }

    /// Stationary powers `(b / tau)^2`; infinite where `tau <= 0`.
    pub fn powers_at(&self, lambda: f64, mu: &[f64]) -> Vec<f64> {
        self.tau(lambda, mu)
            .iter()
            .zip(&self.linear)
            .map(|(&t, &b)| {
                if b == 0.0 {
                    0.0
                } else if t <= 0.0 {
                    f64::INFINITY
                } else {
                    (b / t).powi(2)
                }
            })
            .collect()
    }

    /// Smallest `lambda >= 0` with `sum p <= P` (within `tol * P` of the
    /// budget when the budget binds).
    pub fn solve_budget(&self, mu: &[f64], total: f64, tol: f64) -> (f64, Vec<f64>) {
        let sum = |p: &[f64]| p.iter().sum::<f64>();
        let at_zero = self.powers_at(0.0, mu);
        if sum(&at_zero) <= total {
            return (0.0, at_zero);
        }

        // below `floor` some tau is non-positive and the sum is infinite
        let tau0 = self.tau(0.0, mu);
        let floor = tau0
            .iter()
            .zip(&self.linear)
            .filter(|(_, &b)| b > 0.0)
            .map(|(&t, _)| -t)
            .fold(0.0, f64::max);

        let mut lo = floor;
        let mut step = floor.abs().max(self.quadratic.iter().copied().fold(0.0, f64::max)).max(1e-300);
        let mut hi = floor + step;
        let mut p_hi = self.powers_at(hi, mu);
        while sum(&p_hi) > total {
            lo = hi;
            step *= 2.0;
            hi = floor + step;
            p_hi = self.powers_at(hi, mu);
        }
        for _ in 0..400 {
            if total - sum(&p_hi) <= tol * total || hi - lo <= f64::EPSILON * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let p_mid = self.powers_at(mid, mu);
            if sum(&p_mid) > total {
                lo = mid;
            } else {
                hi = mid;
                p_hi = p_mid;
            }
        }
        (hi, p_hi)
    }

    /// Constraint violation `theta_u = omega - sum_k constraint[(u, k)] p_k`
    /// (positive when violated).
    pub fn slack(&self, powers: &[f64]) -> Vec<f64> {
        let p = DVector::from_column_slice(powers);
        let lhs = &self.constraint * p;
        lhs.iter().map(|v| self.omega - v).collect()
    }

    fn slack_ok(&self, powers: &[f64]) -> bool {
        let p = DVector::from_column_slice(powers);
        let lhs = &self.constraint * &p;
        (0..powers.len()).all(|u| {
            let scale = self.constraint[(u, u)] * powers[u] + self.omega;
            self.omega - lhs[u] <= SLACK_TOL * scale
        })
    }
}

/// Rate constraints as `M p >= omega`: row `u` has `|h_u^H w_{b(u)}|^2` on
/// the diagonal and `-eta` times the gain of every stream that still
/// interferes with user `u` after SIC.
pub fn constraint_matrix(grouping: &BeamGrouping, gains: &LinkGains, eta: f64) -> DMatrix<f64> {
    let users = grouping.users();
    let mut m = DMatrix::zeros(users, users);
    for u in 0..users {
        let n = grouping.beam_of(u);
        let own = gains.power[(u, n)];
        m[(u, u)] = own;
        if eta == 0.0 {
            continue;
        }
        for &i in grouping.stronger_than(u) {
            m[(u, i)] -= eta * own;
        }
        for (j, set) in grouping.members.iter().enumerate() {
            if j == n {
                continue;
            }
            for &i in set {
                m[(u, i)] -= eta * gains.power[(u, j)];
            }
        }
    }
    m
}

/// Smallest power vector meeting every minimum rate, if one exists (the
/// budget is not checked).
pub fn minimum_powers(
    grouping: &BeamGrouping,
    gains: &LinkGains,
    config: &OptimizerConfig,
    noise: f64,
) -> Option<Vec<f64>> {
    let users = grouping.users();
    if !config.constrained() {
        return Some(vec![0.0; users]);
    }
    let m = constraint_matrix(grouping, gains, config.eta());
    let rhs = DVector::from_element(users, config.omega(noise));
    let p = m.lu().solve(&rhs)?;
    // a Z-matrix system with positive right-hand side has a componentwise
    // minimal solution iff its solution is positive
    if p.iter().all(|&x| x > 0.0 && x.is_finite()) {
        Some(p.iter().copied().collect())
    } else {
        None
    }
}

/// Power block update.
///
/// Without minimum rates the stationary powers `(b / (A + lambda))^2` are
/// exact and `lambda` comes from bisection. With minimum rates the block is
/// the convex program `min sum (A p - 2 b sqrt(p))` subject to `M p >= omega`
/// and `sum p <= P`, solved by a log-barrier Newton method whose multipliers
/// `lambda = 1 / (t s_0)` and `mu_u = 1 / (t s_u)` satisfy the same
/// stationarity `p = (b / tau)^2` up to the barrier gap. If the minimum rates
/// cannot be met within the budget they are dropped for this step and
/// `constraints_met` is false.
pub fn update_p(
    aux: &AuxState,
    grouping: &BeamGrouping,
    gains: &LinkGains,
    config: &OptimizerConfig,
    budget: &LinkBudget,
) -> PowerStep {
    let start = if config.constrained() {
        interior_start(grouping, gains, config, budget)
    } else {
        None
    };
    let met = !config.constrained() || start.is_some();
    let mut step = solve_power_step(aux, grouping, gains, config, budget, start.as_deref());
    step.constraints_met = met && step.constraints_met;
    step
}

/// Strictly feasible point `p_min + d M^{-1} 1` using half of the budget
/// left over by the minimum powers, or `None` if there is no such point.
fn interior_start(
    grouping: &BeamGrouping,
    gains: &LinkGains,
    config: &OptimizerConfig,
    budget: &LinkBudget,
) -> Option<Vec<f64>> {
    let p_min = minimum_powers(grouping, gains, config, budget.noise_power)?;
    let spare = budget.total_power - p_min.iter().sum::<f64>();
    if !(spare > 0.0) {
        return None;
    }
    let users = grouping.users();
    let m = constraint_matrix(grouping, gains, config.eta());
    let x = m.lu().solve(&DVector::from_element(users, 1.0))?;
    if !x.iter().all(|&v| v > 0.0 && v.is_finite()) {
        return None;
    }
    let d = 0.5 * spare / x.sum();
    Some(p_min.iter().zip(x.iter()).map(|(p, x)| p + d * x).collect())
}

fn solve_power_step(
    aux: &AuxState,
    grouping: &BeamGrouping,
    gains: &LinkGains,
    config: &OptimizerConfig,
    budget: &LinkBudget,
    interior: Option<&[f64]>,
) -> PowerStep {
    let users = grouping.users();
    match interior {
        None => {
            let problem = PowerSubproblem::new(aux, grouping, gains, 0.0, 0.0);
            let mu = vec![0.0; users];
            let (lambda, powers) = problem.solve_budget(&mu, budget.total_power, config.dual_tolerance);
            PowerStep {
                powers,
                duals: DualVariables { budget: lambda, rate: mu },
                rounds: 0,
                constraints_met: true,
            }
        }
        Some(start) => {
            let problem = PowerSubproblem::new(
                aux,
                grouping,
                gains,
                config.eta(),
                config.omega(budget.noise_power),
            );
            let (powers, duals, rounds) = barrier_solve(&problem, start, budget.total_power, config.outer_cap);
            let constraints_met = problem.slack_ok(&powers);
            PowerStep {
                powers,
                duals,
                rounds,
                constraints_met,
            }
        }
    }
}

/// Target duality gap of the barrier method.
const BARRIER_GAP: f64 = 1e-11;
const NEWTON_CAP: usize = 100;

/// Log-barrier Newton method for the constrained power block, started from
/// a strictly feasible point. Returns the powers, the multipliers implied by
/// the barrier and the number of centering stages.
fn barrier_solve(
    problem: &PowerSubproblem,
    start: &[f64],
    total: f64,
    stage_cap: usize,
) -> (Vec<f64>, DualVariables, usize) {
    let n = start.len();
    let m = &problem.constraint;
    let a = DVector::from_column_slice(&problem.quadratic);
    let b = DVector::from_column_slice(&problem.linear);

    let objective = |p: &DVector<f64>| -> f64 {
        (0..n).map(|k| a[k] * p[k] - 2.0 * b[k] * p[k].sqrt()).sum()
    };
    // slacks of M p >= omega and of the budget, if all positive
    let slacks = |p: &DVector<f64>| -> Option<(DVector<f64>, f64)> {
        if p.iter().any(|&x| !(x > 0.0)) {
            return None;
        }
        let s = m * p - DVector::from_element(n, problem.omega);
        let s0 = total - p.sum();
        (s.iter().all(|&v| v > 0.0) && s0 > 0.0).then_some((s, s0))
    };
    let barrier = |t: f64, p: &DVector<f64>| -> Option<f64> {
        let (s, s0) = slacks(p)?;
        Some(t * objective(p) - s.iter().map(|v| v.ln()).sum::<f64>() - s0.ln())
    };

    let mut p = DVector::from_column_slice(start);
    let mut t = (n as f64 + 1.0) / objective(&p).abs().max(1e-6);
    let mut stages = 0;
    while stages < stage_cap {
        stages += 1;
        for _ in 0..NEWTON_CAP {
            let (s, s0) = slacks(&p).expect("iterate stays strictly feasible");
            let inv_s = s.map(|v| 1.0 / v);
            let grad = (&a - b.zip_map(&p, |b, p| b / p.sqrt())) * t - m.transpose() * &inv_s
                + DVector::from_element(n, 1.0 / s0);
            let weighted = DMatrix::from_fn(n, n, |u, k| m[(u, k)] * inv_s[u]);
            let mut hess = weighted.transpose() * weighted;
            for i in 0..n {
                for j in 0..n {
                    hess[(i, j)] += 1.0 / (s0 * s0);
                }
                hess[(i, i)] += t * b[i] / (2.0 * p[i].powf(1.5));
            }
            let Some(dir) = hess.cholesky().map(|c| -c.solve(&grad)) else {
                break;
            };
            let decrement = -grad.dot(&dir);
            if !(decrement > 2e-12) {
                break;
            }
            let current = barrier(t, &p).expect("feasible");
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let trial = &p + &dir * step;
                if let Some(v) = barrier(t, &trial) {
                    if v <= current - 0.25 * step * decrement {
                        p = trial;
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if (n as f64 + 1.0) / t <= BARRIER_GAP {
            break;
        }
        t *= 10.0;
    }

    let (s, s0) = slacks(&p).expect("iterate stays strictly feasible");
    let duals = DualVariables {
        budget: 1.0 / (t * s0),
        rate: s.iter().map(|v| 1.0 / (t * v)).collect(),
    };
    (p.iter().copied().collect(), duals, stages)
}

/// Runs the alternating `c` / `a` / `p` updates from an equal power split.
pub fn allocate(
    grouping: &BeamGrouping,
    gains: &LinkGains,
    budget: &LinkBudget,
    config: &OptimizerConfig,
) -> Result<PowerAllocation> {
    config.validate()?;
    let users = grouping.users();
    if users == 0 {
        return Err(Error::InvalidDimension("no users to allocate power to".into()));
    }
    let noise = budget.noise_power;
    let meets = |powers: &[f64]| {
        !config.constrained()
            || sum_rate(grouping, gains, powers, budget)
                .users
                .iter()
                .all(|u| u.rate >= config.min_rate - RATE_TOL)
    };

    // The rate constraints do not depend on c or a, so feasibility is
    // decided once.
    let interior = if config.constrained() {
        interior_start(grouping, gains, config, budget)
    } else {
        None
    };
    let reachable = !config.constrained() || interior.is_some();

    let mut powers = vec![budget.total_power / users as f64; users];
    let mut duals = DualVariables {
        budget: 0.0,
        rate: vec![0.0; users],
    };
    let mut trace = Vec::with_capacity(config.max_iterations);
    let mut best: Option<(bool, f64, Vec<f64>, DualVariables)> = None;
    let mut stalled = 0;

    for t in 0..config.max_iterations {
        let aux = auxiliary_state(&powers, grouping, gains, noise, t);
        let step = solve_power_step(&aux, grouping, gains, config, budget, interior.as_deref());
        powers = step.powers;
        duals = step.duals;
        let rate = sum_rate(grouping, gains, &powers, budget).sum_rate;

        if let Some(&prev) = trace.last() {
            if rate - prev < STALL_IMPROVEMENT {
                stalled += 1;
            } else {
                stalled = 0;
            }
        }
        trace.push(rate);

        let ok = meets(&powers);
        let better = match &best {
            None => true,
            Some((best_ok, best_rate, _, _)) => (ok, rate) > (*best_ok, *best_rate),
        };
        if better {
            best = Some((ok, rate, powers.clone(), duals.clone()));
        }
        if config.stall_window.is_some_and(|w| stalled >= w) {
            break;
        }
    }

    let iterations_used = trace.len();
    let (ok, powers, duals) = match best {
        // Without rate constraints the trace is non-decreasing, so keep the
        // last iterate.
        Some((ok, _, best_powers, best_duals)) if config.constrained() => (ok, best_powers, best_duals),
        _ => (meets(&powers), powers, duals),
    };
    Ok(PowerAllocation {
        powers,
        trace,
        duals,
        feasible: reachable && ok,
        iterations_used,
    })
}

/// `1 / (1 + gamma)`, the minimum MSE of a user with SINR `gamma`.
pub fn mmse_identity(gamma: f64) -> f64 {
    1.0 / (1.0 + gamma)
}

/// `f(a) = -a b / ln 2 + log2 a + 1 / ln 2`, maximized at `a = 1 / b` with
/// value `-log2 b`.
pub fn log_surrogate(a: f64, b: f64) -> f64 {
    -a * b / LN_2 + a.log2() + 1.0 / LN_2
}

/// Evaluates [`log_surrogate`] on `grid` and returns `(argmax, max)`.
pub fn proposition1_check(b: f64, grid: &[f64]) -> (f64, f64) {
    grid.iter()
        .map(|&a| (a, log_surrogate(a, b)))
        .fold((f64::NAN, f64::NEG_INFINITY), |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        })
}
