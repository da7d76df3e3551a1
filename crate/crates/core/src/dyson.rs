//! Series solution of the real-time Dyson equation
//!
//! ```text
//! 𝒢^> = 𝒞^> + 𝒢^>·Σ^T·𝒞^T − [𝒢^>]^c·Σ^T·𝒞^>
//! ```
//!
//! where `(X·S·Z)(t, τ) = ∫_0^t ds₁ ∫_0^t ds₂ X(t, s₁) S(s₁, s₂) Z(s₂, τ)` is
//! discretized with a double composite trapezoid rule.
//!
//! A composition is evaluated in two stages. The inner contraction
//! `P(t_i, s₂) = ∫ ds₁ X(t_i, s₁) S(s₁, s₂)` is formed for every row, then
//! `P·Z` is a plain matrix product per index pair. For the separable system
//! self-energy the inner stage is a running prefix sum, so one order costs a
//! handful of `n × n` products.

use ndarray::Array2;

use crate::error::{GmeError, Result};
use crate::grid::TimeGrid;
use crate::kernels::{
    anti_time_ordered, bare_correlation, effective_conjugate, keldysh_components, self_energy,
    system_commutator, KeldyshComponents, Mat2, SigmaExpansion, SpectralDensity, StepConvention,
    Support, TwoTimeKernel, ZERO2,
};
use crate::model::BogoliubovData;
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);

type Components = [Option<Array2<C64>>; 4];

/// The time-ordered self-energy `Σ^T`.
#[derive(Debug, Clone, PartialEq)]
pub enum SelfEnergy {
    /// Arbitrary kernel on the full square.
    Dense(TwoTimeKernel),
    /// `θ(s − τ) σ(τ, s)` with `σ` a finite sum of exponentials.
    Separable { expansion: SigmaExpansion, diagonal: f64, grid: TimeGrid },
}

impl SelfEnergy {
    pub fn from_bogoliubov(bog: &BogoliubovData, grid: &TimeGrid, diagonal: f64) -> Self {
        SelfEnergy::Separable { expansion: SigmaExpansion::from_bogoliubov(bog), diagonal, grid: *grid }
    }

    pub fn grid(&self) -> &TimeGrid {
        match self {
            SelfEnergy::Dense(k) => k.grid(),
            SelfEnergy::Separable { grid, .. } => grid,
        }
    }

    pub fn to_dense(&self) -> TwoTimeKernel {
        match self {
            SelfEnergy::Dense(k) => k.clone(),
            SelfEnergy::Separable { expansion, diagonal, grid } => {
                let g = *grid;
                let s0 = expansion.value(0.0);
                TwoTimeKernel::from_fn(g, Support::Full, |i, j| match i.cmp(&j) {
                    std::cmp::Ordering::Less => expansion.value(g.time(i) - g.time(j)),
                    std::cmp::Ordering::Equal => s0.map(|r| r.map(|z| z * *diagonal)),
                    std::cmp::Ordering::Greater => ZERO2,
                })
            }
        }
    }

    /// Inner contraction with trapezoid weights on both integration variables:
    /// `P_αγ[i, b] = w^i_b sum_{a ≤ i} w^i_a sum_δ X_αδ[i, a] S_δγ[a, b]` for `b ≤ i`.
    fn left_apply(&self, x: &TwoTimeKernel) -> Components {
        match self {
            SelfEnergy::Dense(s) => left_apply_dense(x, s),
            SelfEnergy::Separable { expansion, diagonal, grid } => {
                left_apply_separable(x, expansion, *diagonal, grid)
            }
        }
    }
}

fn left_apply_dense(x: &TwoTimeKernel, s: &TwoTimeKernel) -> Components {
    let grid = *x.grid();
    let n = grid.len();
    let mut weighted: Components = Default::default();
    for c in 0..4 {
        if let Some(xc) = x.components()[c].as_ref() {
            weighted[c] = Some(Array2::from_shape_fn((n, n), |(i, a)| xc[[i, a]] * grid.trapezoid_weight(i, a)));
        }
    }
    let mut out: Components = Default::default();
    for alpha in 0..2 {
        for gamma in 0..2 {
            let mut acc: Option<Array2<C64>> = None;
            for delta in 0..2 {
                if let (Some(xw), Some(sc)) = (&weighted[2 * alpha + delta], s.component(delta, gamma)) {
                    let prod = xw.dot(sc);
                    match &mut acc {
                        Some(a) => *a += &prod,
                        None => acc = Some(prod),
                    }
                }
            }
            if let Some(mut p) = acc {
                for ((i, b), z) in p.indexed_iter_mut() {
                    *z *= grid.trapezoid_weight(i, b);
                }
                out[2 * alpha + gamma] = Some(p);
            }
        }
    }
    out
}

fn left_apply_separable(x: &TwoTimeKernel, exp: &SigmaExpansion, diagonal: f64, grid: &TimeGrid) -> Components {
    let n = grid.len();
    let terms = exp.terms();
    let s0 = exp.value(0.0);
    // e^{−iν t_a} per term and node.
    let phases: Vec<Vec<C64>> = terms
        .iter()
        .map(|(nu, _)| (0..n).map(|a| C64::from_polar(1.0, -nu * grid.time(a))).collect())
        .collect();
    let xm = |i: usize, a: usize| -> Mat2 { x.matrix(i, a) };
    let mut out: [Array2<C64>; 4] = std::array::from_fn(|_| Array2::zeros((n, n)));
    let mut prefix = vec![ZERO2; terms.len()];
    for i in 1..n {
        prefix.iter_mut().for_each(|p| *p = ZERO2);
        for b in 0..=i {
            let wb = grid.trapezoid_weight(i, b);
            let xb = xm(i, b);
            // Strictly earlier nodes through the running sums, the diagonal directly.
            let mut acc = mul2(&xb, &s0).map(|r| r.map(|z| z * (wb * diagonal)));
            for (r, (_, e)) in terms.iter().enumerate() {
                let back = phases[r][b].conj();
                let pe = mul2(&prefix[r], e);
                for u in 0..2 {
                    for v in 0..2 {
                        acc[u][v] += pe[u][v] * back;
                    }
                }
            }
            for (r, p) in prefix.iter_mut().enumerate() {
                let f = phases[r][b] * wb;
                for u in 0..2 {
                    for v in 0..2 {
                        p[u][v] += xb[u][v] * f;
                    }
                }
            }
            for u in 0..2 {
                for v in 0..2 {
                    out[2 * u + v][[i, b]] = acc[u][v] * wb;
                }
            }
        }
    }
    out.map(|m| if m.iter().all(|z| *z == ZERO) { None } else { Some(m) })
}

fn mul2(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut m = ZERO2;
    for u in 0..2 {
        for v in 0..2 {
            m[u][v] = a[u][0] * b[0][v] + a[u][1] * b[1][v];
        }
    }
    m
}

/// `R_αβ = sum_γ P_αγ · Z_γβ`, accumulated into `out` with factor `sign`.
fn right_multiply(p: &Components, z: &TwoTimeKernel, sign: f64, out: &mut TwoTimeKernel) {
    for alpha in 0..2 {
        for beta in 0..2 {
            for gamma in 0..2 {
                if let (Some(pc), Some(zc)) = (&p[2 * alpha + gamma], z.component(gamma, beta)) {
                    let prod = pc.dot(zc);
                    out.component_mut(alpha, beta).scaled_add(C64::from(sign), &prod);
                }
            }
        }
    }
}

fn check_grids(grids: &[&TimeGrid]) -> Result<()> {
    if grids.windows(2).any(|w| w[0] != w[1]) {
        return Err(GmeError::GridMismatch);
    }
    Ok(())
}

/// Double-trapezoid composition `(X·S·Z)(t_i, t_j)` over `s₁, s₂ ∈ [0, t_i]`.
pub fn compose(x: &TwoTimeKernel, s: &TwoTimeKernel, z: &TwoTimeKernel) -> Result<TwoTimeKernel> {
    compose_with(x, &SelfEnergy::Dense(s.clone()), z)
}

pub fn compose_with(x: &TwoTimeKernel, s: &SelfEnergy, z: &TwoTimeKernel) -> Result<TwoTimeKernel> {
    check_grids(&[x.grid(), s.grid(), z.grid()])?;
    let p = s.left_apply(x);
    let mut out = TwoTimeKernel::zeros(*x.grid(), Support::Full);
    right_multiply(&p, z, 1.0, &mut out);
    Ok(out)
}

/// Everything the Dyson recursion needs: `Σ^T` and the bath correlation components.
#[derive(Debug, Clone)]
pub struct DysonProblem {
    pub sigma: SelfEnergy,
    pub correlation: KeldyshComponents,
    pub zeta: f64,
    pub steps: StepConvention,
}

impl DysonProblem {
    /// Fermionic problem for a diagonalized system and a Lorentzian bath.
    pub fn new(bog: &BogoliubovData, sd: &SpectralDensity, grid: &TimeGrid, steps: StepConvention) -> Self {
        let zeta = -1.0;
        let c = bare_correlation(sd, grid);
        Self {
            sigma: SelfEnergy::from_bogoliubov(bog, grid, steps.self_energy_diagonal),
            correlation: keldysh_components(&c, zeta, steps.time_ordered_diagonal),
            zeta,
            steps,
        }
    }

    /// Same problem with the self-energy stored densely.
    pub fn dense(bog: &BogoliubovData, sd: &SpectralDensity, grid: &TimeGrid, steps: StepConvention) -> Self {
        let mut p = Self::new(bog, sd, grid, steps);
        p.sigma = SelfEnergy::Dense(self_energy(&system_commutator(bog, grid), steps.self_energy_diagonal));
        p
    }

    pub fn grid(&self) -> &TimeGrid {
        self.correlation.greater.grid()
    }

    /// First series term `𝒢^>_1 = 𝒞^>` on `τ ≤ t`.
    pub fn first_term(&self) -> TwoTimeKernel {
        self.correlation.greater.lower_triangle()
    }
}

/// `𝒢_k = 𝒢_{k−1}·Σ^T·𝒞^T − [𝒢_{k−1}]^c·Σ^T·𝒞^>`, kept on `τ ≤ t`.
pub fn dyson_step(prev: &TwoTimeKernel, problem: &DysonProblem) -> Result<TwoTimeKernel> {
    let c = &problem.correlation;
    check_grids(&[prev.grid(), problem.sigma.grid(), c.greater.grid()])?;
    let mut out = TwoTimeKernel::zeros(*prev.grid(), Support::Full);
    let direct = problem.sigma.left_apply(prev);
    right_multiply(&direct, &c.time_ordered, 1.0, &mut out);
    let conj = problem.sigma.left_apply(&effective_conjugate(prev, problem.zeta));
    right_multiply(&conj, &c.greater, -1.0, &mut out);
    out.restrict_lower();
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct DysonSolution {
    /// `sum_{k ≤ order_reached} 𝒢^>_k` on `τ ≤ t`.
    pub g_greater: TwoTimeKernel,
    pub order_reached: usize,
    /// `deltas[k − 1] = Δ(k) = max |𝒢^>_{k+1}|`.
    pub deltas: Vec<f64>,
    pub converged: bool,
}

/// Adds series terms until `Δ(k) < tol` or `k_max` terms are summed.
pub fn solve_dyson(problem: &DysonProblem, tol: f64, k_max: usize) -> Result<DysonSolution> {
    if !(tol > 0.0) {
        return Err(GmeError::InvalidParameter(format!("Dyson tolerance must be positive, got {tol}")));
    }
    if k_max == 0 {
        return Err(GmeError::InvalidParameter("k_max must be at least 1".into()));
    }
    let mut term = problem.first_term();
    let mut sum = term.clone();
    let mut deltas = Vec::new();
    let mut k = 1;
    loop {
        let next = dyson_step(&term, problem)?;
        if !next.is_finite() {
            return Err(GmeError::Divergence { order: k + 1 });
        }
        let delta = next.max_abs();
        deltas.push(delta);
        log::debug!("Dyson order {k}: delta = {delta:e}");
        if delta < tol {
            return Ok(DysonSolution { g_greater: sum, order_reached: k, deltas, converged: true });
        }
        if k == k_max {
            log::warn!("Dyson series not converged after {k_max} orders (delta = {delta:e})");
            return Ok(DysonSolution { g_greater: sum, order_reached: k, deltas, converged: false });
        }
        sum.add_assign(&next)?;
        term = next;
        k += 1;
    }
}

/// The first `count` series terms `𝒢^>_1, 𝒢^>_2, …`.
pub fn series_terms(problem: &DysonProblem, count: usize) -> Result<Vec<TwoTimeKernel>> {
    let mut terms = Vec::with_capacity(count);
    if count == 0 {
        return Ok(terms);
    }
    terms.push(problem.first_term());
    while terms.len() < count {
        let next = dyson_step(terms.last().unwrap(), problem)?;
        terms.push(next);
    }
    Ok(terms)
}

/// Max-norm defect of `𝒢^> = 𝒞^> + 𝒢^>·Σ^T·𝒞^T − [𝒢^>]^c·Σ^T·𝒞^>` on `τ ≤ t`.
pub fn fixed_point_residual(g: &TwoTimeKernel, problem: &DysonProblem) -> Result<f64> {
    let mut rhs = dyson_step(g, problem)?;
    rhs.add_assign(&problem.first_term())?;
    rhs.max_abs_diff(&g.lower_triangle())
}

/// Iterates the coupled equations for `𝒢^>` and `𝒢^{T̃}` without using the
/// conjugation symmetry that links them, returning the summed pair after
/// `orders` terms.
pub fn solve_pair_form(problem: &DysonProblem, orders: usize) -> Result<(TwoTimeKernel, TwoTimeKernel)> {
    let zeta = problem.zeta;
    let diag = problem.steps.time_ordered_diagonal;
    let c = &problem.correlation;
    let anti = anti_time_ordered(&c.greater, zeta, diag);
    let mut greater = problem.first_term();
    let mut anti_term = c.lesser.lower_triangle();
    let mut sum_g = greater.clone();
    let mut sum_a = anti_term.clone();
    let sigma_tilde = SelfEnergy::Dense(problem.sigma.to_dense().scaled(C64::from(-1.0)));
    for _ in 1..orders {
        let pg = problem.sigma.left_apply(&greater);
        let pa = sigma_tilde.left_apply(&anti_term);
        let mut g_next = TwoTimeKernel::zeros(*greater.grid(), Support::Full);
        right_multiply(&pg, &c.time_ordered, 1.0, &mut g_next);
        right_multiply(&pa, &c.greater, 1.0, &mut g_next);
        let mut a_next = TwoTimeKernel::zeros(*greater.grid(), Support::Full);
        right_multiply(&pg, &c.lesser, 1.0, &mut a_next);
        right_multiply(&pa, &anti, 1.0, &mut a_next);
        g_next.restrict_lower();
        a_next.restrict_lower();
        sum_g.add_assign(&g_next)?;
        sum_a.add_assign(&a_next)?;
        greater = g_next;
        anti_term = a_next;
    }
    Ok((sum_g, sum_a))
}
