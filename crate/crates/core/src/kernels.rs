//! Two-time kernels on a uniform grid: the bare environment correlation, the
//! system (anti)commutator, the self-energy and their real-time Keldysh
//! components.
//!
//! Kernel indices `α, β ∈ {0, 1}` follow the coupling operators: `0 ↔ A^†, B`
//! and `1 ↔ A, B^†`. Entry `[i, j]` of a component is the value at `(t_i, t_j)`.

use std::f64::consts::PI;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{GmeError, Result};
use crate::grid::TimeGrid;
use crate::model::BogoliubovData;
use crate::C64;

pub type Mat2 = [[C64; 2]; 2];

const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ZERO2: Mat2 = [[ZERO; 2]; 2];

/// Lorentzian spectral density `J(ω) = γλ² / (2π(ω² + λ²))`, whose bath
/// correlation function is `c(t) = (γλ/2) e^{−λ|t|}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensity {
    gamma: f64,
    lambda: f64,
}

impl SpectralDensity {
    /// `γ = 0` is allowed and describes a decoupled system.
    pub fn new(gamma: f64, lambda: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(GmeError::InvalidParameter(format!("gamma must be non-negative, got {gamma}")));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(GmeError::InvalidParameter(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self { gamma, lambda })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(gamma, self.lambda)
    }

    /// `c(t) = (γλ/2) e^{−λ|t|}`.
    pub fn correlation(&self, t: f64) -> f64 {
        0.5 * self.gamma * self.lambda * (-self.lambda * t.abs()).exp()
    }

    pub fn density(&self, omega: f64) -> f64 {
        self.gamma * self.lambda * self.lambda / (2.0 * PI * (omega * omega + self.lambda * self.lambda))
    }
}

/// Which part of the two-time square carries meaningful values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Support {
    Full,
    /// Only `t_j ≤ t_i`; entries above the diagonal are zero and ignored.
    LowerTriangle,
}

/// A `2 × 2`-indexed complex kernel over grid pairs. Components that are
/// identically zero are not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoTimeKernel {
    grid: TimeGrid,
    support: Support,
    components: [Option<Array2<C64>>; 4],
}

impl TwoTimeKernel {
    pub fn zeros(grid: TimeGrid, support: Support) -> Self {
        Self { grid, support, components: [None, None, None, None] }
    }

    pub fn from_fn(grid: TimeGrid, support: Support, mut f: impl FnMut(usize, usize) -> Mat2) -> Self {
        let n = grid.len();
        let mut comps: [Array2<C64>; 4] = std::array::from_fn(|_| Array2::zeros((n, n)));
        for i in 0..n {
            let upper = if support == Support::LowerTriangle { i + 1 } else { n };
            for j in 0..upper {
                let m = f(i, j);
                for (c, comp) in comps.iter_mut().enumerate() {
                    comp[[i, j]] = m[c / 2][c % 2];
                }
            }
        }
        let mut k = Self::zeros(grid, support);
        for (c, comp) in comps.into_iter().enumerate() {
            if comp.iter().any(|z| *z != ZERO) {
                k.components[c] = Some(comp);
            }
        }
        k
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn component(&self, alpha: usize, beta: usize) -> Option<&Array2<C64>> {
        self.components[2 * alpha + beta].as_ref()
    }

    /// Mutable access, allocating a zero component if needed.
    pub fn component_mut(&mut self, alpha: usize, beta: usize) -> &mut Array2<C64> {
        let n = self.grid.len();
        self.components[2 * alpha + beta].get_or_insert_with(|| Array2::zeros((n, n)))
    }

    pub fn set_component(&mut self, alpha: usize, beta: usize, values: Option<Array2<C64>>) {
        if let Some(v) = &values {
            assert_eq!(v.dim(), (self.grid.len(), self.grid.len()));
        }
        self.components[2 * alpha + beta] = values;
    }

    pub fn value(&self, alpha: usize, beta: usize, i: usize, j: usize) -> C64 {
        self.component(alpha, beta).map_or(ZERO, |c| c[[i, j]])
    }

    pub fn matrix(&self, i: usize, j: usize) -> Mat2 {
        let mut m = ZERO2;
        for (a, row) in m.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                *v = self.value(a, b, i, j);
            }
        }
        m
    }

    fn in_support(&self, i: usize, j: usize) -> bool {
        self.support == Support::Full || j <= i
    }

    /// Largest `|F_αβ(t_i, t_j)|` over the support and all index pairs.
    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0_f64;
        for comp in self.components.iter().flatten() {
            for ((i, j), z) in comp.indexed_iter() {
                if self.in_support(i, j) {
                    m = m.max(z.norm());
                }
            }
        }
        m
    }

    pub fn max_abs_diff(&self, other: &TwoTimeKernel) -> Result<f64> {
        if self.grid != other.grid {
            return Err(GmeError::GridMismatch);
        }
        let n = self.grid.len();
        let mut m = 0.0_f64;
        for c in 0..4 {
            match (&self.components[c], &other.components[c]) {
                (None, None) => {}
                (a, b) => {
                    for i in 0..n {
                        for j in 0..n {
                            if self.in_support(i, j) || other.in_support(i, j) {
                                let x = a.as_ref().map_or(ZERO, |a| a[[i, j]]);
                                let y = b.as_ref().map_or(ZERO, |b| b[[i, j]]);
                                m = m.max((x - y).norm());
                            }
                        }
                    }
                }
            }
        }
        Ok(m)
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().flatten().all(|c| c.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }

    pub fn add_assign(&mut self, other: &TwoTimeKernel) -> Result<()> {
        self.axpy(C64::from(1.0), other)
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: C64, other: &TwoTimeKernel) -> Result<()> {
        if self.grid != other.grid {
            return Err(GmeError::GridMismatch);
        }
        for c in 0..4 {
            if let Some(o) = &other.components[c] {
                let n = self.grid.len();
                let dst = self.components[c].get_or_insert_with(|| Array2::zeros((n, n)));
                dst.scaled_add(a, o);
            }
        }
        if other.support == Support::Full {
            self.support = Support::Full;
        }
        Ok(())
    }

    pub fn scaled(&self, a: C64) -> TwoTimeKernel {
        let mut out = self.clone();
        for comp in out.components.iter_mut().flatten() {
            comp.mapv_inplace(|z| z * a);
        }
        out
    }

    /// Zeroes every entry above the diagonal and marks the kernel lower-triangular.
    pub fn restrict_lower(&mut self) {
        for comp in self.components.iter_mut().flatten() {
            let n = comp.nrows();
            for i in 0..n {
                for j in (i + 1)..n {
                    comp[[i, j]] = ZERO;
                }
            }
        }
        self.support = Support::LowerTriangle;
    }

    pub fn lower_triangle(&self) -> TwoTimeKernel {
        let mut out = self.clone();
        out.restrict_lower();
        out
    }

    /// Same values on a grid with `n_steps / factor` intervals, keeping every `factor`-th point.
    pub fn subsample(&self, factor: usize) -> Result<TwoTimeKernel> {
        if factor == 0 || self.grid.n_steps() % factor != 0 {
            return Err(GmeError::InvalidParameter(format!(
                "cannot subsample {} intervals by {factor}",
                self.grid.n_steps()
            )));
        }
        let grid = TimeGrid::new(self.grid.t_max(), self.grid.n_steps() / factor)?;
        let mut out = TwoTimeKernel::zeros(grid, self.support);
        for c in 0..4 {
            if let Some(comp) = &self.components[c] {
                out.components[c] = Some(comp.slice(ndarray::s![..;factor, ..;factor]).to_owned());
            }
        }
        Ok(out)
    }

    pub(crate) fn components(&self) -> &[Option<Array2<C64>>; 4] {
        &self.components
    }
}

/// Separable form of the system commutator,
/// `σ(τ, s) = sum_r E_r e^{−i ν_r (τ − s)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaExpansion {
    terms: Vec<(f64, Mat2)>,
}

impl SigmaExpansion {
    pub fn from_bogoliubov(bog: &BogoliubovData) -> Self {
        let mut terms = Vec::with_capacity(2 * bog.n_modes());
        for k in 0..bog.n_modes() {
            let w = bog.energies()[k];
            let phi = bog.particle_coupling()[k];
            let chi = bog.hole_coupling()[k];
            let anom = phi.conj() * chi.conj();
            let anom_c = phi * chi;
            let p2 = C64::from(phi.norm_sqr());
            let c2 = C64::from(chi.norm_sqr());
            terms.push((w, [[anom, c2], [p2, anom_c]]));
            terms.push((-w, [[anom, p2], [c2, anom_c]]));
        }
        Self { terms }
    }

    pub fn terms(&self) -> &[(f64, Mat2)] {
        &self.terms
    }

    /// `σ` at time difference `d = τ − s`.
    pub fn value(&self, d: f64) -> Mat2 {
        let mut m = ZERO2;
        for (nu, e) in &self.terms {
            let ph = C64::from_polar(1.0, -nu * d);
            for a in 0..2 {
                for b in 0..2 {
                    m[a][b] += e[a][b] * ph;
                }
            }
        }
        m
    }
}

/// Conventions for the step function at coinciding times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepConvention {
    /// `θ(0)` in the self-energy `Σ^T(τ, s) = θ(s − τ) σ(τ, s)`.
    pub self_energy_diagonal: f64,
    /// `θ(0)` in the time-ordered bath correlation.
    pub time_ordered_diagonal: f64,
}

impl Default for StepConvention {
    /// Both averaged. Either kernel jumps across the diagonal and the
    /// trapezoid rule needs the mean value there to stay second order.
    fn default() -> Self {
        Self { self_energy_diagonal: 0.5, time_ordered_diagonal: 0.5 }
    }
}

/// Bare bath correlation: only `c_{01}(τ, s) = (γλ/2) e^{−λ|τ−s|}` is nonzero.
pub fn bare_correlation(sd: &SpectralDensity, grid: &TimeGrid) -> TwoTimeKernel {
    let n = grid.len();
    let mut k = TwoTimeKernel::zeros(*grid, Support::Full);
    if sd.gamma() == 0.0 {
        return k;
    }
    let table: Vec<C64> = (0..n).map(|d| C64::from(sd.correlation(grid.time(d)))).collect();
    k.set_component(0, 1, Some(Array2::from_shape_fn((n, n), |(i, j)| table[i.abs_diff(j)])));
    k
}

/// `σ_αβ(τ, s) = {A_α(τ), A_β(s)}` on the full square.
pub fn system_commutator(bog: &BogoliubovData, grid: &TimeGrid) -> TwoTimeKernel {
    let exp = SigmaExpansion::from_bogoliubov(bog);
    stationary_kernel(grid, |d| exp.value(d))
}

/// Kernel depending only on `τ − s`, evaluated once per difference.
fn stationary_kernel(grid: &TimeGrid, f: impl Fn(f64) -> Mat2) -> TwoTimeKernel {
    let n = grid.len();
    let table: Vec<Mat2> = (0..2 * n - 1).map(|d| f(grid.dt() * (d as f64 - (n - 1) as f64))).collect();
    TwoTimeKernel::from_fn(*grid, Support::Full, |i, j| table[i + n - 1 - j])
}

/// `Σ^T(τ, s) = θ(s − τ) σ(τ, s)` with `θ(0) = diagonal`.
pub fn self_energy(sigma: &TwoTimeKernel, diagonal: f64) -> TwoTimeKernel {
    let mut out = TwoTimeKernel::zeros(*sigma.grid(), Support::Full);
    for c in 0..4 {
        if let Some(s) = &sigma.components()[c] {
            let m = Array2::from_shape_fn(s.dim(), |(i, j)| {
                if j > i {
                    s[[i, j]]
                } else if j == i {
                    s[[i, j]] * diagonal
                } else {
                    ZERO
                }
            });
            out.set_component(c / 2, c % 2, Some(m));
        }
    }
    out
}

/// Real-time components of a bath correlation.
#[derive(Debug, Clone, PartialEq)]
pub struct KeldyshComponents {
    pub greater: TwoTimeKernel,
    pub lesser: TwoTimeKernel,
    pub time_ordered: TwoTimeKernel,
}

/// `𝒞^>(τ, s) = c(τ, s)`, `𝒞^<_αβ(τ, s) = ζ c_βα(s, τ)`,
/// `𝒞^T = θ(τ − s) 𝒞^> + θ(s − τ) 𝒞^<`.
pub fn keldysh_components(c: &TwoTimeKernel, zeta: f64, diagonal: f64) -> KeldyshComponents {
    let lesser = lesser_from(c, zeta);
    let time_ordered = step_combination(c, &lesser, diagonal);
    KeldyshComponents { greater: c.clone(), lesser, time_ordered }
}

/// `𝒞^{T̃} = θ(τ − s) 𝒞^< + θ(s − τ) 𝒞^>`.
pub fn anti_time_ordered(c: &TwoTimeKernel, zeta: f64, diagonal: f64) -> TwoTimeKernel {
    let lesser = lesser_from(c, zeta);
    step_combination(&lesser, c, diagonal)
}

fn lesser_from(c: &TwoTimeKernel, zeta: f64) -> TwoTimeKernel {
    let mut out = TwoTimeKernel::zeros(*c.grid(), Support::Full);
    for a in 0..2 {
        for b in 0..2 {
            if let Some(comp) = c.component(b, a) {
                out.set_component(a, b, Some(comp.t().mapv(|z| z * zeta)));
            }
        }
    }
    out
}

/// `θ(τ − s) below + θ(s − τ) above`, both steps taking `diagonal` at zero.
fn step_combination(below: &TwoTimeKernel, above: &TwoTimeKernel, diagonal: f64) -> TwoTimeKernel {
    let n = below.len();
    let mut out = TwoTimeKernel::zeros(*below.grid(), Support::Full);
    for c in 0..4 {
        let lo = &below.components()[c];
        let hi = &above.components()[c];
        if lo.is_none() && hi.is_none() {
            continue;
        }
        let get = |m: &Option<Array2<C64>>, i: usize, j: usize| m.as_ref().map_or(ZERO, |m| m[[i, j]]);
        let m = Array2::from_shape_fn((n, n), |(i, j)| match i.cmp(&j) {
            std::cmp::Ordering::Greater => get(lo, i, j),
            std::cmp::Ordering::Less => get(hi, i, j),
            std::cmp::Ordering::Equal => (get(lo, i, j) + get(hi, i, j)) * diagonal,
        });
        out.set_component(c / 2, c % 2, Some(m));
    }
    out
}

/// `[F]^c_αβ = ζ (F_ᾱβ̄)^*` with `0̄ = 1`, `1̄ = 0`.
pub fn effective_conjugate(f: &TwoTimeKernel, zeta: f64) -> TwoTimeKernel {
    let mut out = TwoTimeKernel::zeros(*f.grid(), f.support());
    for a in 0..2 {
        for b in 0..2 {
            if let Some(comp) = f.component(1 - a, 1 - b) {
                out.set_component(a, b, Some(comp.mapv(|z| z.conj() * zeta)));
            }
        }
    }
    out
}
