//! Problem-file schema and loading.
//!
//! Complex numbers are two-element arrays [re, im]; matrices are row-major
//! nested arrays. Parse errors carry serde's line/column diagnostics;
//! semantic violations name the offending field.

use nalgebra::DMatrix;
use serde::Deserialize;

use germflow::dynamics::QuadraticHamiltonian;
use germflow::gaussian::GaussianState;
use germflow::phase::ConstraintSet;
use germflow::C64;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub n: usize,
    #[serde(default)]
    pub k: usize,
    #[serde(default)]
    pub constraints: Option<ConstraintsJson>,
    #[serde(default)]
    pub gaussian: Option<GaussianJson>,
    #[serde(default)]
    pub hamiltonian: Option<HamiltonianJson>,
    #[serde(default)]
    pub time: Option<TimeJson>,
    #[serde(default)]
    pub oracle: Option<OracleJson>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintsJson {
    /// k rows of 2n reals, (p₁..p_n, q₁..q_n).
    pub basis: Vec<Vec<f64>>,
    #[serde(default = "one")]
    pub measure_scale: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianJson {
    pub c: [f64; 2],
    /// n×n entries as [re, im].
    pub a: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianJson {
    pub h_pp: Vec<Vec<f64>>,
    pub h_qp: Vec<Vec<f64>>,
    pub h_qq: Vec<Vec<f64>>,
    #[serde(default)]
    pub epsilon: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeJson {
    pub t_final: f64,
    #[serde(default)]
    pub dt: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleJson {
    #[serde(default = "default_points")]
    pub grid_points: usize,
    /// Box half-width in standard deviations.
    #[serde(default = "default_box")]
    pub box_sigmas: f64,
}

fn one() -> f64 {
    1.0
}

fn default_points() -> usize {
    512
}

fn default_box() -> f64 {
    8.0
}

/// A loaded and invariant-checked problem.
pub struct Problem {
    pub n: usize,
    pub constraints: ConstraintSet,
    pub gaussian: Option<GaussianState>,
    pub hamiltonian: Option<QuadraticHamiltonian>,
    pub t_final: Option<f64>,
    pub grid_points: usize,
    pub box_sigmas: f64,
}

fn real_matrix(n: usize, rows: &[Vec<f64>], field: &str) -> Result<DMatrix<f64>, String> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(format!("{field}: expected {n}×{n} real matrix"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

impl Problem {
    pub fn from_json(text: &str) -> Result<Self, String> {
        let file: ProblemFile =
            serde_json::from_str(text).map_err(|e| format!("schema: {e}"))?;
        Self::from_file(file)
    }

    pub fn from_file(file: ProblemFile) -> Result<Self, String> {
        let n = file.n;
        if n == 0 {
            return Err("n: must be at least 1".into());
        }
        let constraints = match &file.constraints {
            None => {
                if file.k != 0 {
                    return Err(format!("k = {} but no constraints block", file.k));
                }
                ConstraintSet::empty(n)
            }
            Some(cj) => {
                if cj.basis.len() != file.k {
                    return Err(format!(
                        "constraints.basis: {} rows, expected k = {}",
                        cj.basis.len(),
                        file.k
                    ));
                }
                ConstraintSet::from_real_rows(n, &cj.basis, cj.measure_scale)
                    .map_err(|e| format!("constraints: {e}"))?
            }
        };
        let gaussian = match &file.gaussian {
            None => None,
            Some(gj) => {
                if gj.a.len() != n || gj.a.iter().any(|r| r.len() != n) {
                    return Err(format!("gaussian.a: expected {n}×{n} complex matrix"));
                }
                let a = DMatrix::from_fn(n, n, |i, j| C64::new(gj.a[i][j][0], gj.a[i][j][1]));
                Some(
                    GaussianState::new(C64::new(gj.c[0], gj.c[1]), a)
                        .map_err(|e| format!("gaussian: {e}"))?,
                )
            }
        };
        let hamiltonian = match &file.hamiltonian {
            None => None,
            Some(hj) => Some(
                QuadraticHamiltonian::new(
                    real_matrix(n, &hj.h_pp, "hamiltonian.h_pp")?,
                    real_matrix(n, &hj.h_qp, "hamiltonian.h_qp")?,
                    real_matrix(n, &hj.h_qq, "hamiltonian.h_qq")?,
                    C64::new(hj.epsilon[0], hj.epsilon[1]),
                )
                .map_err(|e| format!("hamiltonian: {e}"))?,
            ),
        };
        if let Some(t) = &file.time {
            if !t.t_final.is_finite() {
                return Err("time.t_final: must be finite".into());
            }
            if let Some(dt) = t.dt {
                if !(dt > 0.0) {
                    return Err("time.dt: must be positive".into());
                }
            }
        }
        let (grid_points, box_sigmas) = file
            .oracle
            .as_ref()
            .map(|o| (o.grid_points, o.box_sigmas))
            .unwrap_or((default_points(), default_box()));
        if grid_points < 64 {
            return Err("oracle.grid_points: must be at least 64".into());
        }
        Ok(Problem {
            n,
            constraints,
            gaussian,
            hamiltonian,
            t_final: file.time.as_ref().map(|t| t.t_final),
            grid_points,
            box_sigmas,
        })
    }

    pub fn require_gaussian(&self) -> Result<&GaussianState, String> {
        self.gaussian
            .as_ref()
            .ok_or_else(|| "problem file has no gaussian block".into())
    }

    pub fn require_hamiltonian(&self) -> Result<&QuadraticHamiltonian, String> {
        self.hamiltonian
            .as_ref()
            .ok_or_else(|| "problem file has no hamiltonian block".into())
    }
}

/// Summary of which blocks are present, for the validate report.
pub fn presence(p: &Problem) -> Vec<(&'static str, bool)> {
    vec![
        ("constraints", p.constraints.k() > 0),
        ("gaussian", p.gaussian.is_some()),
        ("hamiltonian", p.hamiltonian.is_some()),
        ("time", p.t_final.is_some()),
    ]
}
