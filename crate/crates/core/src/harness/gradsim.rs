//! Loss and gradient curves along a straight regression path, and plain
//! gradient descent on a single predicted sphere.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{center_distance, Point3, Sphere};
use crate::io::write_atomic;
use crate::losses::{sphere_loss, sphere_loss_gradient, SphereGradient, SphereLossKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn component(self, g: &SphereGradient) -> f64 {
        match self {
            Axis::X => g.d_cx,
            Axis::Y => g.d_cy,
            Axis::Z => g.d_cz,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            _ => Err(Error::Config(format!("unknown axis {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradsimParams {
    pub kinds: Vec<SphereLossKind>,
    pub start: Sphere,
    pub target: Sphere,
    /// Gradient component reported in the curve.
    pub axis: Axis,
    /// Points sampled on the path from `start` to `target`, both included.
    pub samples: usize,
    pub rate: f64,
    pub max_iters: usize,
    /// Descent stops once the center distance drops below this.
    pub stop_tol: f64,
}

impl Default for GradsimParams {
    fn default() -> Self {
        Self {
            kinds: SphereLossKind::ALL.to_vec(),
            start: Sphere {
                center: Point3::new(0.0, 0.0, -8.0),
                radius: 1.5,
            },
            target: Sphere {
                center: Point3::ORIGIN,
                radius: 1.5,
            },
            axis: Axis::Z,
            samples: 801,
            rate: 0.5,
            max_iters: 5000,
            stop_tol: 0.01,
        }
    }
}

impl GradsimParams {
    pub fn validate(&self) -> Result<()> {
        Sphere::new(self.start.center, self.start.radius)?;
        Sphere::new(self.target.center, self.target.radius)?;
        if self.samples < 2 {
            return Err(Error::Config("gradsim needs at least 2 samples".into()));
        }
        if !(self.rate > 0.0) || !(self.stop_tol >= 0.0) {
            return Err(Error::Config(
                "rate must be positive and stop_tol non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub kind: SphereLossKind,
    pub d_ab: f64,
    pub loss: f64,
    pub grad: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescentStep {
    pub iteration: usize,
    pub sphere: Sphere,
    pub d_ab: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub kind: SphereLossKind,
    /// Iteration 0 is the start sphere.
    pub steps: Vec<DescentStep>,
    pub converged: bool,
    /// Set when an update drove the radius to a non-positive value.
    pub collapsed: bool,
}

impl Trajectory {
    pub fn final_distance(&self) -> f64 {
        self.steps.last().map(|s| s.d_ab).unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradsimReport {
    pub curve: Vec<CurveRow>,
    pub trajectories: Vec<Trajectory>,
}

/// Loss and gradient as the prediction slides from `start` to `target`
/// with its radius fixed.
pub fn loss_curve(params: &GradsimParams) -> Vec<CurveRow> {
    let last = (params.samples - 1) as f64;
    let path = params.target.center - params.start.center;
    let mut rows = Vec::with_capacity(params.kinds.len() * params.samples);
    for &kind in &params.kinds {
        for i in 0..params.samples {
            let pred = Sphere {
                center: params.start.center + path * (i as f64 / last),
                radius: params.start.radius,
            };
            let g = sphere_loss_gradient(kind, &pred, &params.target);
            rows.push(CurveRow {
                kind,
                d_ab: center_distance(&pred, &params.target),
                loss: sphere_loss(kind, &pred, &params.target),
                grad: params.axis.component(&g),
            });
        }
    }
    rows
}

/// Fixed-rate gradient descent on center and radius.
pub fn descend(kind: SphereLossKind, params: &GradsimParams) -> Trajectory {
    let target = &params.target;
    let step = |iteration: usize, sphere: Sphere| DescentStep {
        iteration,
        sphere,
        d_ab: center_distance(&sphere, target),
        loss: sphere_loss(kind, &sphere, target),
    };
    let mut sphere = params.start;
    let mut steps = vec![step(0, sphere)];
    let mut converged = steps[0].d_ab < params.stop_tol;
    let mut collapsed = false;
    for iteration in 1..=params.max_iters {
        if converged {
            break;
        }
        let g = sphere_loss_gradient(kind, &sphere, target);
        let center = sphere.center - Point3::new(g.d_cx, g.d_cy, g.d_cz) * params.rate;
        let radius = sphere.radius - g.d_r * params.rate;
        if !(radius > 0.0) {
            collapsed = true;
            break;
        }
        sphere = Sphere { center, radius };
        steps.push(step(iteration, sphere));
        converged = steps[iteration].d_ab < params.stop_tol;
    }
    Trajectory {
        kind,
        steps,
        converged,
        collapsed,
    }
}

pub fn run_gradsim(params: &GradsimParams) -> Result<GradsimReport> {
    params.validate()?;
    Ok(GradsimReport {
        curve: loss_curve(params),
        trajectories: params.kinds.iter().map(|&k| descend(k, params)).collect(),
    })
}

/// Writes `curve.csv` and `descent.csv` into `dir`.
pub fn write_gradsim(dir: &Path, report: &GradsimReport, axis: Axis) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["kind", "d_ab", "loss", &format!("grad_{axis}")])?;
    for r in &report.curve {
        w.write_record(&[
            r.kind.to_string(),
            r.d_ab.to_string(),
            r.loss.to_string(),
            r.grad.to_string(),
        ])?;
    }
    write_atomic(
        &dir.join("curve.csv"),
        &w.into_inner().map_err(|e| e.into_error())?,
    )?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["kind", "iteration", "d_ab", "x", "y", "z", "radius", "loss"])?;
    for t in &report.trajectories {
        for s in &t.steps {
            let c = s.sphere.center;
            w.write_record(&[
                t.kind.to_string(),
                s.iteration.to_string(),
                s.d_ab.to_string(),
                c.x.to_string(),
                c.y.to_string(),
                c.z.to_string(),
                s.sphere.radius.to_string(),
                s.loss.to_string(),
            ])?;
        }
    }
    write_atomic(
        &dir.join("descent.csv"),
        &w.into_inner().map_err(|e| e.into_error())?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_endpoints() {
        let p = GradsimParams::default();
        let rows = loss_curve(&p);
        assert_eq!(rows.len(), 4 * 801);
        let first = |k| rows.iter().find(|r| r.kind == k).unwrap();
        assert_eq!(first(SphereLossKind::SIoU).grad, 0.0);
        assert!((first(SphereLossKind::SIoUpp).loss - 8.0 / 11.0).abs() < 1e-12);
        assert_eq!(first(SphereLossKind::SIoUpp).d_ab, 8.0);
        let last = rows
            .iter()
            .rev()
            .find(|r| r.kind == SphereLossKind::SIoU)
            .unwrap();
        assert_eq!(last.d_ab, 0.0);
        assert!(last.loss.abs() < 1e-12);
    }

    #[test]
    fn descent_behaviour() {
        let p = GradsimParams::default();
        let pp = descend(SphereLossKind::SIoUpp, &p);
        assert!(pp.converged && pp.final_distance() < 0.01);
        let s = descend(SphereLossKind::SIoU, &p);
        assert!(!s.converged);
        assert_eq!(s.steps.len(), 5001);
        assert!(s.steps.iter().all(|st| (st.d_ab - 8.0).abs() < 1e-9));
    }

    #[test]
    fn axis_parse() {
        assert_eq!("Z".parse::<Axis>().unwrap(), Axis::Z);
        assert!("w".parse::<Axis>().is_err());
    }
}
