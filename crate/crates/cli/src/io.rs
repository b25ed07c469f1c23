//! File formats: JSON instances and reduced points (complex numbers as
//! `[re, im]` pairs) and CSV trajectories.

use std::io::Write;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use schlesinger_core::flow::Trajectory;
use schlesinger_core::{ChartSpec, Configuration, OrbitPoint, ReducedPoint, Sl2Element};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixEntry {
    /// `(x1, x2, x3)` of `[[x3, x1], [x2, -x3]]`
    Affine([C64; 3]),
    /// A point on the blow-up divisor, given by a nilpotent direction.
    Divisor([C64; 3]),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartChoice {
    pub i: usize,
    pub j: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<C64>>,
    pub matrices: Vec<MatrixEntry>,
    pub roots: Vec<C64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart: Option<ChartChoice>,
}

impl InstanceFile {
    pub fn to_configuration(&self) -> Result<Configuration, CliError> {
        if self.matrices.len() != self.n + 1 || self.roots.len() != self.n + 1 {
            return Err(CliError::Input(format!(
                "n = {} needs {} matrices and roots, got {} and {}",
                self.n,
                self.n + 1,
                self.matrices.len(),
                self.roots.len()
            )));
        }
        let points = self
            .matrices
            .iter()
            .zip(&self.roots)
            .enumerate()
            .map(|(k, (m, &root))| {
                match *m {
                    MatrixEntry::Affine(x) => OrbitPoint::new(Sl2Element::from_array(x), None, root),
                    MatrixEntry::Divisor(d) => OrbitPoint::new(Sl2Element::ZERO, Some(Sl2Element::from_array(d)), root),
                }
                .map_err(|e| CliError::Input(format!("matrix {k}: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Configuration::new(points, self.lambdas.clone()).map_err(|e| CliError::Input(e.to_string()))
    }

    pub fn from_configuration(cfg: &Configuration, chart: Option<ChartChoice>) -> Self {
        let matrices = cfg
            .points()
            .iter()
            .map(|p| {
                if p.is_divisor() {
                    MatrixEntry::Divisor(p.projective().to_array())
                } else {
                    MatrixEntry::Affine(p.affine().to_array())
                }
            })
            .collect();
        Self {
            n: cfg.n(),
            lambdas: cfg.lambdas().ok().map(|l| l.to_vec()),
            matrices,
            roots: cfg.roots(),
            chart,
        }
    }

    /// The chart requested by the file, with roots taken from the points.
    pub fn chart_spec(&self, cfg: &Configuration) -> Result<Option<ChartSpec>, CliError> {
        let Some(ch) = self.chart else { return Ok(None) };
        let spec = ChartSpec {
            root0: cfg.points()[0].root(),
            index_i: ch.i,
            root_i: cfg.points().get(ch.i).map(|p| p.root()).unwrap_or_default(),
            index_j: ch.j,
        };
        spec.validate(cfg.n()).map_err(|e| CliError::Input(e.to_string()))?;
        Ok(Some(spec))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReducedChart {
    pub i: usize,
    pub j: usize,
    pub root0: C64,
    pub root_i: C64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorEntry {
    /// Original index of the point.
    pub index: usize,
    pub beta: C64,
    pub q: C64,
    pub qp: C64,
    /// Direction `[q, q', β]` for a factor on the blow-up divisor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<[C64; 3]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReducedFile {
    pub n: usize,
    pub chart: ReducedChart,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    pub factors: Vec<FactorEntry>,
    pub casimirs: Vec<C64>,
    pub roots: Vec<C64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<C64>>,
}

impl ReducedFile {
    pub fn from_reduced(r: &ReducedPoint, score: Option<f64>, lambdas: Option<Vec<C64>>) -> Self {
        let idx = r.chart.surviving_indices(r.n);
        let factors = (0..r.n - 2)
            .map(|s| FactorEntry {
                index: idx[s],
                beta: r.beta[s],
                q: r.q[s],
                qp: r.qp[s],
                direction: r.directions[s].map(|d| d.to_array()),
            })
            .collect();
        Self {
            n: r.n,
            chart: ReducedChart { i: r.chart.index_i, j: r.chart.index_j, root0: r.chart.root0, root_i: r.chart.root_i },
            score,
            factors,
            casimirs: r.a.clone(),
            roots: r.roots.clone(),
            lambdas,
        }
    }

    pub fn to_reduced(&self) -> Result<ReducedPoint, CliError> {
        let bad = |m: String| CliError::Input(m);
        if self.n < 3 {
            return Err(bad("n must be at least 3".into()));
        }
        let chart = ChartSpec {
            root0: self.chart.root0,
            index_i: self.chart.i,
            root_i: self.chart.root_i,
            index_j: self.chart.j,
        };
        chart.validate(self.n).map_err(|e| bad(e.to_string()))?;
        let expected = chart.surviving_indices(self.n);
        let got: Vec<usize> = self.factors.iter().map(|f| f.index).collect();
        if got != expected {
            return Err(bad(format!("factor indices {got:?} do not match the chart, expected {expected:?}")));
        }
        let r = ReducedPoint {
            n: self.n,
            beta: self.factors.iter().map(|f| f.beta).collect(),
            q: self.factors.iter().map(|f| f.q).collect(),
            qp: self.factors.iter().map(|f| f.qp).collect(),
            directions: self.factors.iter().map(|f| f.direction.map(Sl2Element::from_array)).collect(),
            a: self.casimirs.clone(),
            roots: self.roots.clone(),
            chart,
        };
        r.validate().map_err(|e| bad(e.to_string()))?;
        Ok(r)
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &str) -> Result<T, CliError> {
    let text = if path == "-" {
        std::io::read_to_string(std::io::stdin()).map_err(|e| CliError::Input(format!("stdin: {e}")))?
    } else {
        std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{path}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{path}: {e}")))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

/// 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes the trajectory: `t`, all matrix entries, all `a_ij` with
/// `i <= j`, and the drift columns; complex values as `_re`/`_im` pairs.
pub fn write_trajectory_csv<W: Write>(out: W, traj: &Trajectory) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Output(format!("writing CSV: {e}"));
    let mut w = csv::Writer::from_writer(out);
    let m = traj.samples[0].config.points().len();
    let mut header = vec!["t_re".to_string(), "t_im".to_string()];
    for k in 0..m {
        for x in ["x1", "x2", "x3"] {
            header.push(format!("A{k}_{x}_re"));
            header.push(format!("A{k}_{x}_im"));
        }
    }
    for i in 0..m {
        for j in i..m {
            header.push(format!("a{i}_{j}_re"));
            header.push(format!("a{i}_{j}_im"));
        }
    }
    header.push("casimir_drift".into());
    header.push("sum_drift".into());
    w.write_record(&header).map_err(io)?;
    for s in &traj.samples {
        let mut row = vec![num(s.t.re), num(s.t.im)];
        for a in s.config.affine_parts() {
            for v in a.to_array() {
                row.push(num(v.re));
                row.push(num(v.im));
            }
        }
        let t = schlesinger_core::invariants(&s.config);
        for i in 0..m {
            for j in i..m {
                row.push(num(t.a[i][j].re));
                row.push(num(t.a[i][j].im));
            }
        }
        row.push(num(s.casimir_drift));
        row.push(num(s.sum_drift));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Output(format!("writing CSV: {e}")))?;
    Ok(())
}
