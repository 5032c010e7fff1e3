use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::gvsa::MultivariateSignal;
use crate::linalg::{Matrix, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    CoupledLorenz,
    Hopfield,
    MacArthur,
}

impl MapKind {
    pub fn default_nodes(self) -> usize {
        match self {
            MapKind::CoupledLorenz => 9,
            MapKind::Hopfield => 10,
            MapKind::MacArthur => 8,
        }
    }
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MapKind::CoupledLorenz => "lorenz",
            MapKind::Hopfield => "hopfield",
            MapKind::MacArthur => "macarthur",
        })
    }
}

impl FromStr for MapKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lorenz" | "coupled-lorenz" => Ok(MapKind::CoupledLorenz),
            "hopfield" => Ok(MapKind::Hopfield),
            "macarthur" => Ok(MapKind::MacArthur),
            _ => Err(Error::InvalidConfig(format!("unknown map `{s}`"))),
        }
    }
}

/// Generator configuration. Map-specific fields are ignored by other maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapConfig {
    pub kind: MapKind,
    pub nodes: usize,
    /// Samples emitted after the transient.
    pub length: usize,
    pub seed: u64,
    pub lorenz: LorenzParams,
    pub hopfield: HopfieldParams,
    pub macarthur: MacArthurParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorenzParams {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
    /// Diffusive coupling on x-components between ring neighbours.
    pub coupling: f64,
    pub dt: f64,
    /// Integration steps per emitted sample.
    pub subsample: usize,
    /// Integration steps discarded before emitting.
    pub transient: usize,
}

impl Default for LorenzParams {
    fn default() -> Self {
        Self {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
            coupling: 0.1,
            dt: 0.01,
            subsample: 5,
            transient: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopfieldParams {
    pub gain: f64,
    pub transient: usize,
    /// Redraw the couplings until the Lyapunov probe is positive. Small
    /// random networks settle on cycles for most draws.
    pub require_chaos: bool,
}

impl Default for HopfieldParams {
    fn default() -> Self {
        Self {
            gain: 1.8,
            transient: 500,
            require_chaos: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacArthurParams {
    pub growth_min: f64,
    pub growth_max: f64,
    pub competition_max: f64,
    pub clamp_min: f64,
    pub clamp_max: f64,
    pub transient: usize,
}

impl Default for MacArthurParams {
    fn default() -> Self {
        Self {
            growth_min: 2.5,
            growth_max: 3.5,
            competition_max: 0.3,
            clamp_min: 1e-9,
            clamp_max: 10.0,
            transient: 500,
        }
    }
}

impl MapConfig {
    pub fn new(kind: MapKind, seed: u64) -> Self {
        Self {
            kind,
            nodes: kind.default_nodes(),
            length: 2000,
            seed,
            lorenz: LorenzParams::default(),
            hopfield: HopfieldParams::default(),
            macarthur: MacArthurParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.lorenz.sigma,
            self.lorenz.rho,
            self.lorenz.beta,
            self.lorenz.coupling,
            self.lorenz.dt,
            self.hopfield.gain,
            self.macarthur.growth_min,
            self.macarthur.growth_max,
            self.macarthur.competition_max,
            self.macarthur.clamp_min,
            self.macarthur.clamp_max,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("map parameters must be finite".into()));
        }
        if self.nodes < 2 || self.length < 1 {
            return Err(Error::InvalidConfig("maps need >= 2 nodes and >= 1 sample".into()));
        }
        if self.kind == MapKind::CoupledLorenz && !self.nodes.is_multiple_of(3) {
            return Err(Error::InvalidConfig(format!(
                "coupled Lorenz needs a multiple of 3 nodes, got {}",
                self.nodes
            )));
        }
        if self.lorenz.subsample == 0 || self.lorenz.dt <= 0.0 {
            return Err(Error::InvalidConfig("Lorenz dt and subsample must be positive".into()));
        }
        Ok(())
    }

    pub fn simulate(&self) -> Result<MultivariateSignal> {
        match self.kind {
            MapKind::CoupledLorenz => simulate_coupled_lorenz(self),
            MapKind::Hopfield => simulate_hopfield(self),
            MapKind::MacArthur => simulate_macarthur(self),
        }
    }
}

const DIVERGENCE_LIMIT: f64 = 1e6;

/// `N/3` Lorenz systems, x-components diffusively coupled on a ring,
/// integrated with classical RK4. Channel order is `x₁, y₁, z₁, x₂, …`.
pub fn simulate_coupled_lorenz(cfg: &MapConfig) -> Result<MultivariateSignal> {
    cfg.validate()?;
    let p = &cfg.lorenz;
    let k = cfg.nodes / 3;
    let mut rng = Rng::derived(cfg.seed, "lorenz");
    let mut state: Vec<f64> = (0..k)
        .flat_map(|_| {
            let x = rng.uniform_in(-10.0, 10.0);
            let y = rng.uniform_in(-10.0, 10.0);
            let z = rng.uniform_in(10.0, 40.0);
            [x, y, z]
        })
        .collect();

    let deriv = |s: &[f64], out: &mut [f64]| {
        for m in 0..k {
            let (x, y, z) = (s[3 * m], s[3 * m + 1], s[3 * m + 2]);
            let diffusion = if k > 1 {
                let left = s[3 * ((m + k - 1) % k)];
                let right = s[3 * ((m + 1) % k)];
                // Two systems share one edge on the ring.
                if k == 2 {
                    right - x
                } else {
                    left + right - 2.0 * x
                }
            } else {
                0.0
            };
            out[3 * m] = p.sigma * (y - x) + p.coupling * diffusion;
            out[3 * m + 1] = x * (p.rho - z) - y;
            out[3 * m + 2] = x * y - p.beta * z;
        }
    };

    let n = 3 * k;
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let dt = p.dt;
    let mut out = Matrix::zeros(n, cfg.length);
    let total = p.transient + cfg.length * p.subsample;
    let mut emitted = 0;
    for step in 1..=total {
        deriv(&state, &mut k1);
        for i in 0..n {
            tmp[i] = state[i] + 0.5 * dt * k1[i];
        }
        deriv(&tmp, &mut k2);
        for i in 0..n {
            tmp[i] = state[i] + 0.5 * dt * k2[i];
        }
        deriv(&tmp, &mut k3);
        for i in 0..n {
            tmp[i] = state[i] + dt * k3[i];
        }
        deriv(&tmp, &mut k4);
        for i in 0..n {
            state[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if state.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT) {
            return Err(Error::Divergence { step });
        }
        if step > p.transient && (step - p.transient).is_multiple_of(p.subsample) {
            out.set_col(emitted, &state);
            emitted += 1;
        }
    }
    MultivariateSignal::new(out)
}

const CHAOS_ATTEMPTS: usize = 256;
const PROBE_STEPS: usize = 1000;
const PROBE_SEPARATION: f64 = 1e-8;

/// `x(t+1) = tanh(g · W_h x(t))` with i.i.d. Gaussian `W_h / √N`.
pub fn simulate_hopfield(cfg: &MapConfig) -> Result<MultivariateSignal> {
    let (w, start) = hopfield_network(cfg)?;
    let n = cfg.nodes;
    let mut state = start;
    let mut out = Matrix::zeros(n, cfg.length);
    for step in 0..cfg.hopfield.transient + cfg.length {
        state = hopfield_step(&w, &state);
        if step >= cfg.hopfield.transient {
            out.set_col(step - cfg.hopfield.transient, &state);
        }
    }
    MultivariateSignal::new(out)
}

fn hopfield_step(w: &Matrix, x: &[f64]) -> Vec<f64> {
    w.matvec(x).expect("square").into_iter().map(f64::tanh).collect()
}

/// Couplings and initial state actually used by [`simulate_hopfield`].
pub fn hopfield_network(cfg: &MapConfig) -> Result<(Matrix, Vec<f64>)> {
    cfg.validate()?;
    let n = cfg.nodes;
    let mut rng = Rng::derived(cfg.seed, "hopfield");
    let attempts = if cfg.hopfield.require_chaos { CHAOS_ATTEMPTS } else { 1 };
    for _ in 0..attempts {
        let w = rng.normal_matrix(n, n).scale(cfg.hopfield.gain / (n as f64).sqrt());
        let start: Vec<f64> = (0..n).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        if !cfg.hopfield.require_chaos
            || lyapunov(&w, &start, cfg.hopfield.transient, PROBE_STEPS, PROBE_SEPARATION) > 0.0
        {
            return Ok((w, start));
        }
    }
    Err(Error::InvalidConfig(format!(
        "no chaotic Hopfield network found in {CHAOS_ATTEMPTS} draws at gain {}",
        cfg.hopfield.gain
    )))
}

/// Largest-Lyapunov estimate of the configured Hopfield map from the
/// divergence of two trajectories started `separation` apart, renormalized
/// every step.
pub fn hopfield_lyapunov(cfg: &MapConfig, steps: usize, separation: f64) -> Result<f64> {
    let (w, start) = hopfield_network(cfg)?;
    Ok(lyapunov(&w, &start, cfg.hopfield.transient, steps, separation))
}

fn lyapunov(w: &Matrix, start: &[f64], transient: usize, steps: usize, separation: f64) -> f64 {
    let mut a = start.to_vec();
    for _ in 0..transient {
        a = hopfield_step(w, &a);
    }
    let mut b = a.clone();
    b[0] += separation;
    let mut sum = 0.0;
    for _ in 0..steps {
        a = hopfield_step(w, &a);
        b = hopfield_step(w, &b);
        let d = a.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        if d == 0.0 {
            return f64::NEG_INFINITY;
        }
        sum += (d / separation).ln();
        for (bi, ai) in b.iter_mut().zip(&a) {
            *bi = ai + (*bi - ai) * separation / d;
        }
    }
    sum / steps as f64
}

/// Discrete Lotka–Volterra competition,
/// `x_i ← x_i exp(r_i (1 − Σ_j A_ij x_j))`, clamped.
pub fn simulate_macarthur(cfg: &MapConfig) -> Result<MultivariateSignal> {
    cfg.validate()?;
    let n = cfg.nodes;
    let p = &cfg.macarthur;
    let mut rng = Rng::derived(cfg.seed, "macarthur");
    let r: Vec<f64> = (0..n).map(|_| rng.uniform_in(p.growth_min, p.growth_max)).collect();
    let a = Matrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            rng.uniform_in(0.0, p.competition_max)
        }
    });
    let mut state: Vec<f64> = (0..n).map(|_| rng.uniform_in(0.1, 1.0)).collect();
    let mut out = Matrix::zeros(n, cfg.length);
    for step in 0..p.transient + cfg.length {
        let pressure = a.matvec(&state)?;
        for i in 0..n {
            state[i] = (state[i] * (r[i] * (1.0 - pressure[i])).exp()).clamp(p.clamp_min, p.clamp_max);
        }
        if step >= p.transient {
            out.set_col(step - p.transient, &state);
        }
    }
    MultivariateSignal::new(out)
}
