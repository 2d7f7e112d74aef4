//! Laminar conductance network from atmosphere through the four chambers and
//! a shared plenum to the vacuum source.
//!
//! Node pressures are vacuum pressures: atmosphere is 0 and the source sits at
//! `max_vacuum`. Each chamber leaks to atmosphere through a conductance that
//! grows linearly with its exposed lip fraction.

use nalgebra::{Matrix5, Vector5};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::cupmodel::ContactState;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PumpModel {
    /// Source vacuum (Pa).
    pub max_vacuum: f64,
    /// Plenum to source ((m^3/s)/Pa).
    pub source_conductance: f64,
    /// Chamber to plenum.
    pub passage_conductance: f64,
    /// Chamber to atmosphere at full exposure.
    pub leak_conductance: f64,
    /// Residual chamber leak through a closed seal.
    pub seal_leak_conductance: f64,
    /// Share of a horizontal leak routed to the diagonally opposite chamber.
    pub horizontal_coupling: f64,
    /// Transducer noise standard deviation (Pa).
    pub noise_sigma: f64,
}

impl Default for PumpModel {
    fn default() -> Self {
        PumpModel {
            max_vacuum: 85_000.0,
            source_conductance: 1e-11,
            passage_conductance: 1e-9,
            leak_conductance: 3.2e-8,
            seal_leak_conductance: 7.5e-13,
            horizontal_coupling: 0.75,
            noise_sigma: 5.0,
        }
    }
}

impl PumpModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_vacuum > 0.0 && self.max_vacuum < 101_325.0) {
            return Err(invalid("max_vacuum must be in (0, 101325) Pa"));
        }
        for (name, g) in [
            ("source_conductance", self.source_conductance),
            ("passage_conductance", self.passage_conductance),
            ("leak_conductance", self.leak_conductance),
            ("seal_leak_conductance", self.seal_leak_conductance),
        ] {
            if !(g.is_finite() && g > 0.0) {
                return Err(Error::InvalidArgument(alloc::format!(
                    "{name} must be positive"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.horizontal_coupling) {
            return Err(invalid("horizontal_coupling must be in [0, 1]"));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(invalid("noise_sigma must be >= 0"));
        }
        Ok(())
    }
}

/// Vacuum pressure at each chamber transducer (Pa), chamber 1 first.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChamberPressures(pub [f64; 4]);

impl ChamberPressures {
    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / 4.0
    }

    pub fn max(&self) -> f64 {
        self.0.iter().fold(f64::NEG_INFINITY, |m, p| m.max(*p))
    }

    pub fn all_below(&self, threshold: f64) -> bool {
        self.0.iter().all(|p| *p < threshold)
    }
}

/// Solved operating point with every branch flow, for auditing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkSolution {
    pub pressures: ChamberPressures,
    pub plenum: f64,
    /// Atmosphere into each chamber.
    pub leak_flow: [f64; 4],
    /// Each chamber into the plenum.
    pub passage_flow: [f64; 4],
    /// Plenum into the source.
    pub source_flow: f64,
}

impl NetworkSolution {
    /// `|sum(passage) - source| / max(|flows|)` at the plenum node.
    pub fn plenum_residual(&self) -> f64 {
        let inflow: f64 = self.passage_flow.iter().sum();
        let scale = self
            .passage_flow
            .iter()
            .chain(core::iter::once(&self.source_flow))
            .fold(0.0_f64, |m, q| m.max(q.abs()));
        if scale == 0.0 {
            0.0
        } else {
            (inflow - self.source_flow).abs() / scale
        }
    }
}

pub fn solve_network_detailed(contact: &ContactState, pump: &PumpModel) -> Result<NetworkSolution> {
    // Conductance from atmosphere into each chamber, with horizontal leaks
    // split between a chamber and its diagonal partner.
    let mut g_leak = [0.0; 4];
    for i in 0..4 {
        let f = contact.exposed_fraction[i].clamp(0.0, 1.0);
        g_leak[i] += pump.leak_conductance * f + pump.seal_leak_conductance;
        let h = contact.horizontal_leak[i].clamp(0.0, 1.0) * pump.leak_conductance;
        g_leak[i] += h * (1.0 - pump.horizontal_coupling);
        g_leak[(i + 2) % 4] += h * pump.horizontal_coupling;
    }
    let gp = pump.passage_conductance;
    let gs = pump.source_conductance;

    let mut a = Matrix5::<f64>::zeros();
    let mut b = Vector5::<f64>::zeros();
    for i in 0..4 {
        a[(i, i)] = g_leak[i] + gp;
        a[(i, 4)] = -gp;
        a[(4, i)] = -gp;
        a[(4, 4)] += gp;
    }
    a[(4, 4)] += gs;
    b[4] = gs * pump.max_vacuum;
    if a.iter().all(|x| *x == 0.0) {
        return Err(Error::SingularNetwork);
    }
    let x = a.lu().solve(&b).ok_or(Error::SingularNetwork)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularNetwork);
    }

    let plenum = x[4];
    let mut p = [0.0; 4];
    let mut leak_flow = [0.0; 4];
    let mut passage_flow = [0.0; 4];
    for i in 0..4 {
        p[i] = x[i].clamp(0.0, pump.max_vacuum);
        leak_flow[i] = g_leak[i] * x[i];
        passage_flow[i] = gp * (plenum - x[i]);
    }
    Ok(NetworkSolution {
        pressures: ChamberPressures(p),
        plenum,
        leak_flow,
        passage_flow,
        source_flow: gs * (pump.max_vacuum - plenum),
    })
}

pub fn solve_network(contact: &ContactState, pump: &PumpModel) -> Result<ChamberPressures> {
    solve_network_detailed(contact, pump).map(|s| s.pressures)
}

/// Adds independent Gaussian noise of `pump.noise_sigma` to each reading,
/// clamped to `[0, max_vacuum]`.
pub fn add_sensor_noise<R: Rng + ?Sized>(
    p: ChamberPressures,
    pump: &PumpModel,
    rng: &mut R,
) -> ChamberPressures {
    if pump.noise_sigma == 0.0 {
        return p;
    }
    let mut out = p.0;
    for v in out.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *v = (*v + pump.noise_sigma * z).clamp(0.0, pump.max_vacuum);
    }
    ChamberPressures(out)
}
