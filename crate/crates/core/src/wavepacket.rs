//! Free evolution of Gaussian wavepackets and their superpositions.
//!
//! A packet is `ψ(x, 0) = A·(2πσ₀²)^{-1/4}·exp(−(x−x₀)²/(4σ₀²) + ik₀(x−x₀))`.
//! Under `H = p²/2m` it stays Gaussian with complex width parameter
//! `α(t) = σ₀² + iħt/(2m)`, so evolution is closed-form and exact.
//!
//! Packets carry their own `ħ` and `m`, so the same code runs in SI units or
//! in natural units (`ħ = m = 1`, lengths in `σ_d`). The fringe and leakage
//! routines below work in natural units, where the overlap time
//! `2σ_d·m·d/ħ` is simply `2d`.

use std::f64::consts::{PI, SQRT_2, TAU};

use rustfft::FftPlanner;
use serde::Serialize;
use statrs::function::erf::erfc;

use crate::algebra::C64;
use crate::constants::HBAR;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPacket {
    amplitude: C64,
    x0: f64,
    k0: f64,
    sigma0: f64,
    mass: f64,
    hbar: f64,
    t: f64,
}

impl GaussianPacket {
    /// Minimum-uncertainty packet in SI units at `t = 0`.
    pub fn new(x0: f64, k0: f64, sigma0: f64, mass: f64) -> Result<Self> {
        Self::with_units(x0, k0, sigma0, mass, HBAR)
    }

    /// Packet in natural units (`ħ = m = 1`).
    pub fn natural(x0: f64, k0: f64, sigma0: f64) -> Result<Self> {
        Self::with_units(x0, k0, sigma0, 1.0, 1.0)
    }

    pub fn with_units(x0: f64, k0: f64, sigma0: f64, mass: f64, hbar: f64) -> Result<Self> {
        if !(sigma0 > 0.0 && sigma0.is_finite()) {
            return Err(Error::domain(format!("packet width {sigma0} must be > 0")));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::domain(format!("mass {mass} must be > 0")));
        }
        if !(hbar > 0.0) || !x0.is_finite() || !k0.is_finite() {
            return Err(Error::domain("non-finite packet parameters"));
        }
        Ok(Self {
            amplitude: C64::new(1.0, 0.0),
            x0,
            k0,
            sigma0,
            mass,
            hbar,
            t: 0.0,
        })
    }

    pub fn with_amplitude(mut self, amplitude: C64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn amplitude(&self) -> C64 {
        self.amplitude
    }
    pub fn x0(&self) -> f64 {
        self.x0
    }
    pub fn k0(&self) -> f64 {
        self.k0
    }
    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }
    pub fn mass(&self) -> f64 {
        self.mass
    }
    pub fn hbar(&self) -> f64 {
        self.hbar
    }
    pub fn time(&self) -> f64 {
        self.t
    }

    fn hbar_over_m(&self) -> f64 {
        self.hbar / self.mass
    }

    /// `2mσ₀²/ħ`: the time over which the width grows by √2.
    pub fn spreading_time(&self) -> f64 {
        2.0 * self.sigma0 * self.sigma0 / self.hbar_over_m()
    }

    /// `α(t) = σ₀² + iħt/(2m)`.
    pub fn alpha(&self) -> C64 {
        C64::new(self.sigma0 * self.sigma0, 0.5 * self.hbar_over_m() * self.t)
    }

    /// Position spread `σ(t) = σ₀·√(1 + (ħt/2mσ₀²)²)`.
    pub fn width(&self) -> f64 {
        self.sigma0 * 1f64.hypot(self.t / self.spreading_time())
    }

    pub fn center(&self) -> f64 {
        self.x0 + self.hbar_over_m() * self.k0 * self.t
    }

    /// Wavefunction value at `x` at the packet's current time.
    pub fn value(&self, x: f64) -> C64 {
        let alpha = self.alpha();
        let u = x - self.center();
        let prefactor = (C64::new(self.sigma0, 0.0) / alpha).sqrt() * (2.0 * PI).powf(-0.25);
        let phase = self.k0 * (x - self.x0) - 0.5 * self.hbar_over_m() * self.k0 * self.k0 * self.t;
        let exponent = C64::new(-u * u, 0.0) / (4.0 * alpha) + C64::new(0.0, phase);
        self.amplitude * prefactor * exponent.exp()
    }

    /// Free evolution by `dt ≥ 0`.
    pub fn evolve(&self, dt: f64) -> Result<Self> {
        if !(dt >= 0.0 && dt.is_finite()) {
            return Err(Error::domain(format!("evolution step {dt} must be >= 0")));
        }
        Ok(Self {
            t: self.t + dt,
            ..*self
        })
    }

    /// `⟨self|other⟩`. Both packets must share mass, ħ and time; the overlap
    /// is then time-independent and is evaluated on the initial forms.
    pub fn overlap(&self, other: &GaussianPacket) -> Result<C64> {
        if self.mass != other.mass || self.hbar != other.hbar || self.t != other.t {
            return Err(Error::domain(
                "overlap needs packets with equal mass, ħ and time",
            ));
        }
        let a1 = 0.25 / (self.sigma0 * self.sigma0);
        let a2 = 0.25 / (other.sigma0 * other.sigma0);
        // origin at self.x0 to keep exponents small
        let shift = other.x0 - self.x0;
        let a = a1 + a2;
        let b = C64::new(2.0 * a2 * shift, other.k0 - self.k0);
        let c = C64::new(-a2 * shift * shift, -other.k0 * shift);
        let norms = (2.0 * PI * self.sigma0 * self.sigma0).powf(-0.25)
            * (2.0 * PI * other.sigma0 * other.sigma0).powf(-0.25);
        let gauss = (PI / a).sqrt() * (b * b / (4.0 * a) + c).exp();
        Ok(self.amplitude.conj() * other.amplitude * norms * gauss)
    }
}

/// Coherent superposition `Σ cᵢ ψᵢ` of packets sharing mass, ħ and time.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialState {
    coefficients: Vec<C64>,
    packets: Vec<GaussianPacket>,
}

impl SpatialState {
    /// Requires `∫|ψ|² = 1` within 1e-9.
    pub fn new(coefficients: Vec<C64>, packets: Vec<GaussianPacket>) -> Result<Self> {
        let state = Self::unchecked(coefficients, packets)?;
        let norm = state.norm()?;
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized(norm));
        }
        Ok(state)
    }

    /// Rescales the coefficients so the state has unit norm.
    pub fn normalized(coefficients: Vec<C64>, packets: Vec<GaussianPacket>) -> Result<Self> {
        let mut state = Self::unchecked(coefficients, packets)?;
        let norm = state.norm()?;
        if !(norm > 0.0) {
            return Err(Error::NotNormalized(norm));
        }
        let scale = 1.0 / norm.sqrt();
        state.coefficients.iter_mut().for_each(|c| *c *= scale);
        Ok(state)
    }

    pub fn single(packet: GaussianPacket) -> Result<Self> {
        Self::normalized(vec![C64::new(1.0, 0.0)], vec![packet])
    }

    fn unchecked(coefficients: Vec<C64>, packets: Vec<GaussianPacket>) -> Result<Self> {
        if packets.is_empty() || coefficients.len() != packets.len() {
            return Err(Error::DimensionMismatch {
                expected: packets.len().max(1),
                actual: coefficients.len(),
            });
        }
        let first = packets[0];
        if packets
            .iter()
            .any(|p| p.mass != first.mass || p.hbar != first.hbar || p.t != first.t)
        {
            return Err(Error::domain(
                "packets in a state must share mass, ħ and time",
            ));
        }
        Ok(Self {
            coefficients,
            packets,
        })
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coefficients
    }

    pub fn packets(&self) -> &[GaussianPacket] {
        &self.packets
    }

    pub fn time(&self) -> f64 {
        self.packets[0].t
    }

    pub fn mass(&self) -> f64 {
        self.packets[0].mass
    }

    pub fn hbar(&self) -> f64 {
        self.packets[0].hbar
    }

    /// `∫|ψ|²` from pairwise analytic overlaps.
    pub fn norm(&self) -> Result<f64> {
        let mut total = C64::new(0.0, 0.0);
        for (ci, pi) in self.coefficients.iter().zip(&self.packets) {
            for (cj, pj) in self.coefficients.iter().zip(&self.packets) {
                total += ci.conj() * cj * pi.overlap(pj)?;
            }
        }
        Ok(total.re)
    }

    pub fn evolve(&self, dt: f64) -> Result<Self> {
        let packets = self
            .packets
            .iter()
            .map(|p| p.evolve(dt))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            coefficients: self.coefficients.clone(),
            packets,
        })
    }

    /// State at absolute time `t` (must not be earlier than the current time).
    pub fn at_time(&self, t: f64) -> Result<Self> {
        self.evolve(t - self.time())
    }

    pub fn value(&self, x: f64) -> C64 {
        self.coefficients
            .iter()
            .zip(&self.packets)
            .map(|(c, p)| c * p.value(x))
            .sum()
    }

    /// Probability density at the state's current time.
    pub fn density(&self, x: f64) -> f64 {
        self.value(x).norm_sqr()
    }
}

/// `P(x, t) = |Σ cᵢ ψᵢ(x, t)|²`.
pub fn density_at(state: &SpatialState, x: f64, t: f64) -> Result<f64> {
    Ok(state.at_time(t)?.density(x))
}

/// Location of the first interference maximum beside the central fringe of
/// a two-packet state at time `t`, in the state's length units.
///
/// The search covers `[0.5, 1.5]` times the far-field fringe period
/// `2πħt/(m·d)`, scans a grid for the first interior maximum and refines it
/// by golden-section search.
pub fn first_fringe_peak(state: &SpatialState, t: f64) -> Result<f64> {
    let [p0, p1] = state.packets() else {
        return Err(Error::Unsupported(
            "fringe search needs a two-packet state".into(),
        ));
    };
    let separation = (p1.x0 - p0.x0).abs();
    if !(separation > 0.0 && t > 0.0) {
        return Err(Error::domain(
            "fringe search needs distinct packets and t > 0",
        ));
    }
    let evolved = state.at_time(t)?;
    let period = TAU * state.hbar() * t / (state.mass() * separation);
    let (lo, hi) = (0.5 * period, 1.5 * period);
    let density = |x: f64| evolved.density(x);

    const SCAN: usize = 4000;
    let step = (hi - lo) / SCAN as f64;
    let samples: Vec<f64> = (0..=SCAN).map(|i| density(lo + i as f64 * step)).collect();
    let peak_at = (1..SCAN)
        .find(|&i| samples[i] > 0.0 && samples[i] > samples[i - 1] && samples[i] >= samples[i + 1]);
    let Some(i) = peak_at else {
        return Err(Error::SearchFailed(format!(
            "no interior maximum of P(x, t={t:e}) in [{lo:e}, {hi:e}]; packets may not overlap yet"
        )));
    };
    let sigma = p0.sigma0.min(p1.sigma0);
    Ok(golden_max(
        density,
        lo + (i - 1) as f64 * step,
        lo + (i + 1) as f64 * step,
        1e-9 * sigma,
    ))
}

/// First fringe peak in units of `σ_d` for a `|+⟩` state with the given
/// `σ_d/d` ratio, at `t_over_overlap` times the overlap time `2σ_d·m·d/ħ`.
pub fn first_fringe_peak_ratio(sigma_d_over_d: f64, t_over_overlap: f64) -> Result<f64> {
    if !(sigma_d_over_d > 0.0 && sigma_d_over_d <= 0.1) {
        return Err(Error::domain(format!(
            "σ_d/d = {sigma_d_over_d} outside (0, 1/10]"
        )));
    }
    let d = 1.0 / sigma_d_over_d;
    let state = plus_state_natural(d)?;
    first_fringe_peak(&state, t_over_overlap * 2.0 * d)
}

/// `(|0⟩ + |1⟩)/√2` with unit-width packets at `∓d/2`, natural units.
pub fn plus_state_natural(d: f64) -> Result<SpatialState> {
    let left = GaussianPacket::natural(-0.5 * d, 0.0, 1.0)?;
    let right = GaussianPacket::natural(0.5 * d, 0.0, 1.0)?;
    let h = C64::new(1.0 / SQRT_2, 0.0);
    SpatialState::normalized(vec![h, h], vec![left, right])
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Probability that the `|0⟩` packet (centred at `−d/2`) is found on the
/// wrong half-line `x > 0` after free flight `t`:
/// `ε = ½·erfc((d/2)/(√2·σ(t)))`.
pub fn leakage_epsilon(d: f64, sigma_d: f64, mass: f64, t: f64) -> Result<f64> {
    leakage_with_units(d, sigma_d, mass, HBAR, t)
}

/// Leakage with `σ_d = 1`, `d` in units of `σ_d` and `t` in units of the
/// overlap time.
pub fn leakage_epsilon_natural(d_over_sigma: f64, t_over_overlap: f64) -> Result<f64> {
    leakage_with_units(
        d_over_sigma,
        1.0,
        1.0,
        1.0,
        t_over_overlap * 2.0 * d_over_sigma,
    )
}

fn leakage_with_units(d: f64, sigma_d: f64, mass: f64, hbar: f64, t: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::domain(format!("separation {d} must be > 0")));
    }
    if !(t >= 0.0) {
        return Err(Error::domain(format!("time {t} must be >= 0")));
    }
    let packet = GaussianPacket::with_units(-0.5 * d, 0.0, sigma_d, mass, hbar)?.evolve(t)?;
    Ok(0.5 * erfc(0.5 * d / (SQRT_2 * packet.width())))
}

/// Position-squeezing protocol: `n` alternations between trap frequencies
/// `ω1 > ω2` reduce the position spread by `(ω2/ω1)ⁿ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct SqueezeSpec {
    pub omega1: f64,
    pub omega2: f64,
    pub n: u32,
    /// Extra decoherence rate introduced by the trapping potential, 1/s.
    pub gamma_budget: f64,
}

impl SqueezeSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega2 > 0.0 && self.omega1 > self.omega2) {
            return Err(Error::domain("squeeze needs ω1 > ω2 > 0"));
        }
        if self.n == 0 {
            return Err(Error::domain("squeeze needs n >= 1"));
        }
        if !(self.gamma_budget >= 0.0) {
            return Err(Error::domain("squeeze decoherence budget must be >= 0"));
        }
        Ok(())
    }

    pub fn factor(&self) -> f64 {
        (self.omega1 / self.omega2).powi(self.n as i32)
    }

    /// Protocol duration `n/ω1 + n/ω2`.
    pub fn duration(&self) -> f64 {
        let n = self.n as f64;
        n / self.omega1 + n / self.omega2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SqueezeReport {
    pub factor: f64,
    pub width_before: f64,
    pub width_after: f64,
    pub duration: f64,
    /// `γ_budget · T`; the protocol is coherent enough when this is below 0.1.
    pub budget_product: f64,
    pub budget_ok: bool,
}

/// Squeezes the packet's current position spread and restarts free flight
/// from a minimum-uncertainty packet at `t = 0` with the same centre and mean
/// momentum.
pub fn squeeze(
    packet: &GaussianPacket,
    spec: &SqueezeSpec,
) -> Result<(GaussianPacket, SqueezeReport)> {
    spec.validate()?;
    let width_before = packet.width();
    let width_after = width_before / spec.factor();
    let squeezed = GaussianPacket {
        x0: packet.center(),
        sigma0: width_after,
        t: 0.0,
        ..*packet
    };
    let duration = spec.duration();
    let budget_product = spec.gamma_budget * duration;
    Ok((
        squeezed,
        SqueezeReport {
            factor: spec.factor(),
            width_before,
            width_after,
            duration,
            budget_product,
            budget_ok: budget_product < 0.1,
        },
    ))
}

/// Sampled wavefunction on a uniform periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    x_min: f64,
    dx: f64,
    psi: Vec<C64>,
    mass: f64,
    hbar: f64,
    t: f64,
}

/// Boundary amplitude allowed relative to the peak.
pub const GRID_BOUNDARY_LIMIT: f64 = 1e-8;

/// Grid layout; `extent` defaults to `40·max(σ, d)` chosen by the caller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub points: usize,
    pub extent: f64,
}

impl GridSpec {
    pub const DEFAULT_POINTS: usize = 1 << 14;

    /// Default layout for a state whose widest scale at the final time is
    /// `width` and whose packet separation is `separation`.
    pub fn for_scales(width: f64, separation: f64) -> Self {
        Self {
            points: Self::DEFAULT_POINTS,
            extent: 40.0 * width.max(separation),
        }
    }
}

impl GridState {
    /// Samples `state` on a grid centred on `x = 0`.
    pub fn from_state(state: &SpatialState, spec: GridSpec) -> Result<Self> {
        if !spec.points.is_power_of_two() || spec.points < 4 {
            return Err(Error::domain(format!(
                "grid size {} must be a power of two",
                spec.points
            )));
        }
        if !(spec.extent > 0.0) {
            return Err(Error::domain("grid extent must be > 0"));
        }
        let dx = spec.extent / spec.points as f64;
        let x_min = -0.5 * spec.extent;
        let psi = (0..spec.points)
            .map(|i| state.value(x_min + i as f64 * dx))
            .collect();
        let grid = Self {
            x_min,
            dx,
            psi,
            mass: state.mass(),
            hbar: state.hbar(),
            t: state.time(),
        };
        grid.check_boundary()?;
        Ok(grid)
    }

    pub fn from_samples(
        x_min: f64,
        dx: f64,
        psi: Vec<C64>,
        mass: f64,
        hbar: f64,
        t: f64,
    ) -> Result<Self> {
        if !psi.len().is_power_of_two() || psi.len() < 4 {
            return Err(Error::domain(format!(
                "grid size {} must be a power of two",
                psi.len()
            )));
        }
        if !(dx > 0.0 && mass > 0.0 && hbar > 0.0) {
            return Err(Error::domain("grid spacing, mass and ħ must be > 0"));
        }
        let grid = Self {
            x_min,
            dx,
            psi,
            mass,
            hbar,
            t,
        };
        grid.check_boundary()?;
        Ok(grid)
    }

    fn check_boundary(&self) -> Result<()> {
        let peak = self.psi.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let n = self.psi.len();
        let boundary = self.psi[0].norm().max(self.psi[n - 1].norm());
        if boundary > GRID_BOUNDARY_LIMIT * peak {
            return Err(Error::Wraparound {
                boundary: boundary / peak,
                limit: GRID_BOUNDARY_LIMIT,
            });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn psi(&self) -> &[C64] {
        &self.psi
    }

    pub fn density(&self) -> Vec<f64> {
        self.psi.iter().map(|z| z.norm_sqr()).collect()
    }

    /// `Σ|ψ|²·dx`.
    pub fn norm(&self) -> f64 {
        self.psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dx
    }

    /// Probability mass on `x > x_cut` (trapezoid rule, density linearly
    /// interpolated at the cut).
    pub fn mass_above(&self, x_cut: f64) -> f64 {
        let n = self.psi.len();
        let rho = |i: usize| self.psi[i].norm_sqr();
        let pos = (x_cut - self.x_min) / self.dx;
        if pos <= 0.0 {
            return self.norm();
        }
        if pos >= (n - 1) as f64 {
            return 0.0;
        }
        let i0 = pos.floor() as usize;
        let frac = pos - i0 as f64;
        let at_cut = rho(i0) * (1.0 - frac) + rho(i0 + 1) * frac;
        let mut total = 0.5 * (at_cut + rho(i0 + 1)) * (1.0 - frac) * self.dx;
        for i in i0 + 1..n - 1 {
            total += 0.5 * (rho(i) + rho(i + 1)) * self.dx;
        }
        total
    }

    /// Mean and variance of the position density.
    pub fn moments(&self) -> (f64, f64) {
        let norm = self.norm();
        let mean = self
            .psi
            .iter()
            .enumerate()
            .map(|(i, z)| self.x(i) * z.norm_sqr())
            .sum::<f64>()
            * self.dx
            / norm;
        let var = self
            .psi
            .iter()
            .enumerate()
            .map(|(i, z)| (self.x(i) - mean).powi(2) * z.norm_sqr())
            .sum::<f64>()
            * self.dx
            / norm;
        (mean, var)
    }

    /// `√(Σ|ψ_grid − ψ_state|²·dx)` against an analytic state at the grid time.
    pub fn l2_distance(&self, state: &SpatialState) -> Result<f64> {
        let at = state.at_time(self.t)?;
        Ok((self
            .psi
            .iter()
            .enumerate()
            .map(|(i, z)| (z - at.value(self.x(i))).norm_sqr())
            .sum::<f64>()
            * self.dx)
            .sqrt())
    }
}

/// Exact free-particle step in Fourier space:
/// `ψ̂(k) → ψ̂(k)·exp(−iħk²dt/(2m))`.
pub fn spectral_propagate(grid: &GridState, dt: f64) -> Result<GridState> {
    if !(dt >= 0.0 && dt.is_finite()) {
        return Err(Error::domain(format!("evolution step {dt} must be >= 0")));
    }
    let n = grid.psi.len();
    let mut buf = grid.psi.clone();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let dk = TAU / (n as f64 * grid.dx);
    let coeff = 0.5 * grid.hbar / grid.mass * dt;
    let inv_n = 1.0 / n as f64;
    for (j, z) in buf.iter_mut().enumerate() {
        let k = if j < n / 2 {
            j as f64
        } else {
            j as f64 - n as f64
        } * dk;
        *z *= C64::from_polar(inv_n, -coeff * k * k);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let out = GridState {
        psi: buf,
        t: grid.t + dt,
        ..grid.clone()
    };
    out.check_boundary()?;
    Ok(out)
}

/// Band-limited interpolation of a grid wavefunction between its nodes.
#[derive(Debug, Clone)]
pub struct SpectralInterpolant {
    x_min: f64,
    coefficients: Vec<(f64, C64)>,
}

impl SpectralInterpolant {
    pub fn new(grid: &GridState) -> Self {
        let n = grid.psi.len();
        let mut buf = grid.psi.clone();
        FftPlanner::<f64>::new()
            .plan_fft_forward(n)
            .process(&mut buf);
        let dk = TAU / (n as f64 * grid.dx);
        let inv_n = 1.0 / n as f64;
        let coefficients = buf
            .into_iter()
            .enumerate()
            .map(|(j, c)| {
                let k = if j < n / 2 {
                    j as f64
                } else {
                    j as f64 - n as f64
                } * dk;
                (k, c * inv_n)
            })
            .collect();
        Self {
            x_min: grid.x_min,
            coefficients,
        }
    }

    pub fn value(&self, x: f64) -> C64 {
        let u = x - self.x_min;
        self.coefficients
            .iter()
            .map(|(k, c)| c * C64::from_polar(1.0, k * u))
            .sum()
    }
}

/// Leakage computed on a grid by propagating the `|0⟩` packet alone and
/// integrating its density over `x > 0` (natural units, `σ_d = 1`).
pub fn grid_leakage_natural(d_over_sigma: f64, t_over_overlap: f64) -> Result<f64> {
    let t = t_over_overlap * 2.0 * d_over_sigma;
    let packet = GaussianPacket::natural(-0.5 * d_over_sigma, 0.0, 1.0)?;
    let state = SpatialState::single(packet)?;
    let width = packet.evolve(t)?.width();
    let grid = GridState::from_state(&state, GridSpec::for_scales(width, d_over_sigma))?;
    let evolved = spectral_propagate(&grid, t)?;
    Ok(evolved.mass_above(0.0) / evolved.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn spectral_interpolant_between_nodes() {
        let packet = GaussianPacket::natural(0.5, 0.7, 2.0).unwrap();
        let state = SpatialState::single(packet).unwrap();
        let grid = GridState::from_state(
            &state,
            GridSpec {
                points: 1024,
                extent: 80.0,
            },
        )
        .unwrap();
        let interp = SpectralInterpolant::new(&grid);
        for x in [-3.33, 0.017, 1.5, 4.91] {
            assert!((interp.value(x) - state.value(x)).norm() < 1e-10);
        }
        assert!((interp.value(grid.x(10)) - grid.psi()[10]).norm() < 1e-12);
    }

    #[test]
    fn evolve_identity_and_spreading() {
        let p = GaussianPacket::natural(0.3, 0.2, 1.5).unwrap();
        assert_eq!(p.evolve(0.0).unwrap(), p);
        let t = p.spreading_time();
        assert_relative_eq!(
            p.evolve(t).unwrap().width(),
            1.5 * SQRT_2,
            max_relative = 1e-15
        );
    }

    #[test]
    fn si_spreading_order_of_magnitude() {
        // 1 nm packet of 1e-19 kg after 10 ms: the formula gives ~5.4 nm
        let p = GaussianPacket::new(0.0, 0.0, 1e-9, 1e-19).unwrap();
        let w = p.evolve(0.01).unwrap().width();
        assert_relative_eq!(w, 5.366e-9, max_relative = 1e-3);
        assert!(w > 3e-9 && w < 30e-9);
    }

    #[test]
    fn width_stable_at_long_times() {
        let p = GaussianPacket::natural(0.0, 0.0, 1.0).unwrap();
        let t = 1e4 * p.spreading_time();
        assert_relative_eq!(
            p.evolve(t).unwrap().width(),
            (1.0 + 1e8f64).sqrt(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn value_norm_and_center() {
        let p = GaussianPacket::natural(-2.0, 1.3, 0.8)
            .unwrap()
            .evolve(3.0)
            .unwrap();
        let norm = simpson(|x| p.value(x).norm_sqr(), -60.0, 60.0, 20_000);
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-10);
        let mean = simpson(|x| x * p.value(x).norm_sqr(), -60.0, 60.0, 20_000);
        assert_abs_diff_eq!(mean, -2.0 + 1.3 * 3.0, epsilon = 1e-9);
        let var = simpson(
            |x| (x - p.center()).powi(2) * p.value(x).norm_sqr(),
            -60.0,
            60.0,
            20_000,
        );
        assert_abs_diff_eq!(var, p.width().powi(2), epsilon = 1e-9);
    }

    #[test]
    fn overlap_matches_quadrature() {
        let a = GaussianPacket::natural(-1.0, 0.4, 1.0)
            .unwrap()
            .with_amplitude(C64::new(0.3, 0.2));
        let b = GaussianPacket::natural(1.5, -0.7, 1.7).unwrap();
        let exact = a.overlap(&b).unwrap();
        let re = simpson(|x| (a.value(x).conj() * b.value(x)).re, -40.0, 40.0, 20_000);
        let im = simpson(|x| (a.value(x).conj() * b.value(x)).im, -40.0, 40.0, 20_000);
        assert_abs_diff_eq!(exact.re, re, epsilon = 1e-10);
        assert_abs_diff_eq!(exact.im, im, epsilon = 1e-10);
        // evolution is unitary: the overlap is time-independent
        let at = a.evolve(2.0).unwrap();
        let bt = b.evolve(2.0).unwrap();
        let re_t = simpson(
            |x| (at.value(x).conj() * bt.value(x)).re,
            -60.0,
            60.0,
            40_000,
        );
        assert_abs_diff_eq!(exact.re, re_t, epsilon = 1e-10);
    }

    #[test]
    fn density_examples() {
        let d = 50.0;
        let plus = plus_state_natural(d).unwrap();
        let t = 2.0 * d;
        let p0 = density_at(&plus, 0.0, t).unwrap();
        assert!(p0 > density_at(&plus, 0.5, t).unwrap());
        assert!(p0 > density_at(&plus, -0.5, t).unwrap());

        let left = GaussianPacket::natural(-0.5 * d, 0.0, 1.0).unwrap();
        let right = GaussianPacket::natural(0.5 * d, 0.0, 1.0).unwrap();
        let h = C64::new(1.0 / SQRT_2, 0.0);
        let minus = SpatialState::normalized(vec![h, -h], vec![left, right]).unwrap();
        for &tt in &[10.0, 100.0, 300.0] {
            assert_abs_diff_eq!(density_at(&minus, 0.0, tt).unwrap(), 0.0, epsilon = 1e-30);
        }

        let integral = simpson(
            |x| density_at(&plus, x, t).unwrap(),
            -1500.0,
            1500.0,
            200_000,
        );
        assert_abs_diff_eq!(integral, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn fringe_peaks() {
        assert_abs_diff_eq!(
            first_fringe_peak_ratio(0.1, 1.0).unwrap(),
            11.797,
            epsilon = 0.01
        );
        assert_abs_diff_eq!(
            first_fringe_peak_ratio(0.02, 1.0).unwrap(),
            12.536,
            epsilon = 0.01
        );
        assert_abs_diff_eq!(
            first_fringe_peak_ratio(0.01, 1.0).unwrap(),
            12.559,
            epsilon = 0.01
        );
        let far = first_fringe_peak_ratio(1e-4, 1.0).unwrap();
        assert_abs_diff_eq!(far, 4.0 * PI, epsilon = 1e-3);
        assert!(first_fringe_peak_ratio(0.2, 1.0).is_err());
    }

    #[test]
    fn fringe_search_fails_before_overlap() {
        let err = first_fringe_peak_ratio(0.02, 0.01).unwrap_err();
        assert!(matches!(err, Error::SearchFailed(_)), "{err}");
    }

    #[test]
    fn leakage_examples() {
        assert!(leakage_epsilon_natural(50.0, 0.0).unwrap() < 1e-100);
        let eps = leakage_epsilon_natural(50.0, 0.1).unwrap();
        assert_relative_eq!(eps, 4.7e-7, max_relative = 0.1);
        assert_abs_diff_eq!(
            leakage_epsilon_natural(1e-12, 0.5).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        assert!(leakage_epsilon(0.0, 1e-9, 1e-19, 0.0).is_err());

        // SI path agrees with the natural-unit path
        let (sigma, m, d) = (1e-10, 1e-19, 50e-10);
        let t = 0.1 * 2.0 * sigma * m * d / HBAR;
        assert_relative_eq!(
            leakage_epsilon(d, sigma, m, t).unwrap(),
            eps,
            max_relative = 1e-9
        );
    }

    #[test]
    fn leakage_matches_grid() {
        let analytic = leakage_epsilon_natural(50.0, 0.1).unwrap();
        let grid = grid_leakage_natural(50.0, 0.1).unwrap();
        assert_relative_eq!(grid, analytic, max_relative = 0.05);
    }

    #[test]
    fn squeeze_examples() {
        let p = GaussianPacket::new(0.0, 0.0, 10e-9, 1e-19).unwrap();
        let spec = SqueezeSpec {
            omega1: 1e6,
            omega2: 1e5,
            n: 2,
            gamma_budget: 1e-5 * 1e6,
        };
        let (q, report) = squeeze(&p, &spec).unwrap();
        assert_relative_eq!(q.sigma0(), 0.1e-9, max_relative = 1e-12);
        assert_relative_eq!(report.duration, 2.2e-5, max_relative = 1e-12);
        assert!(report.budget_ok);

        let half = SqueezeSpec {
            omega1: 2.0,
            omega2: 1.0,
            n: 1,
            gamma_budget: 0.0,
        };
        assert_relative_eq!(
            squeeze(&p, &half).unwrap().0.sigma0(),
            5e-9,
            max_relative = 1e-12
        );

        let bad = SqueezeSpec { n: 0, ..half };
        assert!(squeeze(&p, &bad).is_err());
        let inverted = SqueezeSpec {
            omega1: 1.0,
            omega2: 2.0,
            ..half
        };
        assert!(squeeze(&p, &inverted).is_err());

        let costly = SqueezeSpec {
            gamma_budget: 1e4,
            ..spec
        };
        assert!(!squeeze(&p, &costly).unwrap().1.budget_ok);
    }

    #[test]
    fn spectral_identity_and_wraparound() {
        let state = plus_state_natural(20.0).unwrap();
        let grid = GridState::from_state(
            &state,
            GridSpec {
                points: 1 << 12,
                extent: 400.0,
            },
        )
        .unwrap();
        let same = spectral_propagate(&grid, 0.0).unwrap();
        let diff = same
            .psi()
            .iter()
            .zip(grid.psi())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-14);

        // a packet that spreads past the box edge
        let err = spectral_propagate(&grid, 2000.0).unwrap_err();
        assert!(matches!(err, Error::Wraparound { .. }));
        assert!(GridState::from_state(
            &state,
            GridSpec {
                points: 1000,
                extent: 400.0
            }
        )
        .is_err());
    }
}
