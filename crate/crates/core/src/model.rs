//! Switched-system data model: modes, switching and input signals,
//! scenarios, and the bilinear embedding `A = A₁`, `D_j = A_j − A₁`.
//!
//! Mode indices in signals, trajectories and diagnostics are 1-based, as
//! they are in the JSON files; `LssModel::modes` is an ordinary 0-based
//! vector.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::spectral_abscissa;

/// Row-major nested-array (de)serialization for dense matrices.
pub(crate) mod rows {
    use super::*;
    use serde::de::Error as _;

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = (0..m.nrows())
            .map(|i| m.row(i).iter().copied().collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<DMatrix<f64>, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        from_rows(&rows).map_err(D::Error::custom)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> std::result::Result<DMatrix<f64>, String> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != ncols) {
            return Err(format!("ragged matrix: row {bad} has {} entries, expected {ncols}", rows[bad].len()));
        }
        Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
    }
}

/// One mode `(A_j, B_j, C_j)` of a switched system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    #[serde(rename = "A", with = "rows")]
    pub a: DMatrix<f64>,
    #[serde(rename = "B", with = "rows")]
    pub b: DMatrix<f64>,
    #[serde(rename = "C", with = "rows")]
    pub c: DMatrix<f64>,
}

impl Mode {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Self {
        Mode { a, b, c }
    }
}

/// Continuous-time linear switched system
/// `ẋ = A_q x + B_q u`, `y = C_q x` with `M = modes.len()` modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LssModel {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub modes: Vec<Mode>,
    #[serde(default)]
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    NoModes,
    Dimension {
        mode: usize,
        matrix: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },
    NotHurwitz { mode: usize, abscissa: f64 },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::NoModes => write!(f, "model has no modes"),
            Diagnostic::Dimension { mode, matrix, expected, found } => write!(
                f,
                "mode {mode}: {matrix} is {}x{}, expected {}x{}",
                found.0, found.1, expected.0, expected.1
            ),
            Diagnostic::NotHurwitz { mode, abscissa } => {
                write!(f, "mode {mode} not Hurwitz (spectral abscissa {abscissa:.6e})")
            }
        }
    }
}

/// Outcome of [`validate_model`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelReport {
    pub diagnostics: Vec<Diagnostic>,
    /// Spectral abscissa per mode; `None` where `A_j` had the wrong shape.
    pub spectral_abscissa: Vec<Option<f64>>,
}

impl ModelReport {
    pub fn is_ok(&self) -> bool {
        self.diagnostics.is_empty()
    }

    pub fn has_dimension_errors(&self) -> bool {
        self.diagnostics
            .iter()
            .any(|d| matches!(d, Diagnostic::Dimension { .. } | Diagnostic::NoModes))
    }
}

/// Checks dimension consistency and the Hurwitz property of every mode.
pub fn validate_model(model: &LssModel) -> ModelReport {
    let (n, m, p) = (model.n, model.m, model.p);
    let mut diagnostics = Vec::new();
    let mut abscissae = Vec::with_capacity(model.modes.len());
    if model.modes.is_empty() {
        diagnostics.push(Diagnostic::NoModes);
    }
    for (idx, mode) in model.modes.iter().enumerate() {
        let j = idx + 1;
        let mut shape_ok = true;
        for (name, mat, expected) in [("A", &mode.a, (n, n)), ("B", &mode.b, (n, m)), ("C", &mode.c, (p, n))] {
            if mat.shape() != expected {
                diagnostics.push(Diagnostic::Dimension { mode: j, matrix: name, expected, found: mat.shape() });
                if name == "A" {
                    shape_ok = false;
                }
            }
        }
        if shape_ok && n > 0 {
            let abscissa = spectral_abscissa(&mode.a);
            if abscissa.is_nan() || abscissa >= 0.0 {
                diagnostics.push(Diagnostic::NotHurwitz { mode: j, abscissa });
            }
            abscissae.push(Some(abscissa));
        } else {
            abscissae.push(None);
        }
    }
    ModelReport { diagnostics, spectral_abscissa: abscissae }
}

impl LssModel {
    /// Builds a model, inferring `n, m, p` from the first mode and
    /// rejecting inconsistent shapes.
    pub fn new(modes: Vec<Mode>, label: impl Into<String>) -> Result<Self> {
        let first = modes.first().ok_or_else(|| Error::Invalid("model needs at least one mode".into()))?;
        let model = LssModel {
            n: first.a.nrows(),
            m: first.b.ncols(),
            p: first.c.nrows(),
            modes,
            label: label.into(),
        };
        model.check_shapes()?;
        Ok(model)
    }

    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    /// Errors on the first dimension diagnostic; ignores stability.
    pub fn check_shapes(&self) -> Result<()> {
        if self.modes.is_empty() {
            return Err(Error::Invalid("model needs at least one mode".into()));
        }
        let (n, m, p) = (self.n, self.m, self.p);
        for (idx, mode) in self.modes.iter().enumerate() {
            for (name, mat, expected) in [("A", &mode.a, (n, n)), ("B", &mode.b, (n, m)), ("C", &mode.c, (p, n))] {
                if mat.shape() != expected {
                    let d = Diagnostic::Dimension { mode: idx + 1, matrix: name, expected, found: mat.shape() };
                    return Err(Error::ShapeMismatch(d.to_string()));
                }
            }
        }
        Ok(())
    }

    /// Dual system `(A_jᵀ, C_jᵀ, B_jᵀ)`.
    pub fn dual(&self) -> LssModel {
        LssModel {
            n: self.n,
            m: self.p,
            p: self.m,
            modes: self
                .modes
                .iter()
                .map(|md| Mode::new(md.a.transpose(), md.c.transpose(), md.b.transpose()))
                .collect(),
            label: format!("dual of {}", self.label),
        }
    }

    /// State transformation `x = T z` for orthogonal `T`:
    /// `(TᵀA_jT, TᵀB_j, C_jT)`.
    pub fn orthogonal_transform(&self, t: &DMatrix<f64>) -> LssModel {
        LssModel {
            modes: self
                .modes
                .iter()
                .map(|md| Mode::new(t.tr_mul(&(&md.a * t)), t.tr_mul(&md.b), &md.c * t))
                .collect(),
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// `A = A₁` and `D_j = A_j − A₁` for every mode (including `D₁ = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearEmbedding {
    pub a: DMatrix<f64>,
    pub d: Vec<DMatrix<f64>>,
    pub b: Vec<DMatrix<f64>>,
    pub c: Vec<DMatrix<f64>>,
}

pub fn bilinear_embed(model: &LssModel) -> BilinearEmbedding {
    let a = model.modes[0].a.clone();
    let d = model
        .modes
        .iter()
        .enumerate()
        .map(|(j, md)| if j == 0 { DMatrix::zeros(model.n, model.n) } else { &md.a - &a })
        .collect();
    BilinearEmbedding {
        a,
        d,
        b: model.modes.iter().map(|md| md.b.clone()).collect(),
        c: model.modes.iter().map(|md| md.c.clone()).collect(),
    }
}

impl BilinearEmbedding {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn num_modes(&self) -> usize {
        self.d.len()
    }

    /// `A + D_j` for 1-based `j`.
    pub fn mode_matrix(&self, j: usize) -> DMatrix<f64> {
        &self.a + &self.d[j - 1]
    }

    pub fn to_model(&self, label: &str) -> LssModel {
        LssModel {
            n: self.n(),
            m: self.b.first().map_or(0, |b| b.ncols()),
            p: self.c.first().map_or(0, |c| c.nrows()),
            modes: (1..=self.num_modes())
                .map(|j| Mode::new(self.mode_matrix(j), self.b[j - 1].clone(), self.c[j - 1].clone()))
                .collect(),
            label: label.to_string(),
        }
    }

    pub fn transposed(&self) -> BilinearEmbedding {
        BilinearEmbedding {
            a: self.a.transpose(),
            d: self.d.iter().map(|d| d.transpose()).collect(),
            b: self.c.iter().map(|c| c.transpose()).collect(),
            c: self.b.iter().map(|b| b.transpose()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub t_end: f64,
    /// 1-based mode index.
    pub mode: usize,
}

/// Right-continuous piecewise-constant mode schedule starting at `t = 0`.
/// The final mode is held beyond the last boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SwitchingSignal {
    pub segments: Vec<Segment>,
}

impl SwitchingSignal {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let s = SwitchingSignal { segments };
        s.check(None)?;
        Ok(s)
    }

    /// Single mode for all time.
    pub fn constant(mode: usize) -> Self {
        SwitchingSignal { segments: vec![Segment { t_end: f64::MAX, mode }] }
    }

    /// Validates ordering and, when `num_modes` is known, the mode range.
    pub fn check(&self, num_modes: Option<usize>) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::Invalid("switching signal has no segments".into()));
        }
        let mut prev = 0.0;
        for (k, seg) in self.segments.iter().enumerate() {
            if seg.t_end.is_nan() || seg.t_end <= prev {
                return Err(Error::Invalid(format!(
                    "segment {} ends at {} which does not exceed {prev}",
                    k + 1,
                    seg.t_end
                )));
            }
            prev = seg.t_end;
            let upper = num_modes.unwrap_or(usize::MAX);
            if seg.mode == 0 || seg.mode > upper {
                return Err(Error::Invalid(format!("segment {} has mode {} out of range", k + 1, seg.mode)));
            }
        }
        Ok(())
    }

    /// Active mode at `t`; a switching instant belongs to the incoming mode.
    pub fn mode_at(&self, t: f64) -> Result<usize> {
        if t < 0.0 || t.is_nan() {
            return Err(Error::NegativeTime(t));
        }
        let seg = self
            .segments
            .iter()
            .find(|s| t < s.t_end)
            .unwrap_or_else(|| self.segments.last().expect("non-empty switching signal"));
        Ok(seg.mode)
    }

    /// Consecutive `(start, end, mode)` pieces covering `[0, horizon]`.
    pub fn pieces(&self, horizon: f64) -> Vec<(f64, f64, usize)> {
        let mut out = Vec::new();
        let mut start = 0.0;
        for seg in &self.segments {
            if start >= horizon {
                break;
            }
            let end = seg.t_end.min(horizon);
            out.push((start, end, seg.mode));
            start = seg.t_end;
        }
        if start < horizon {
            let last = self.segments.last().expect("non-empty switching signal").mode;
            out.push((start, horizon, last));
        }
        out
    }
}

/// Exogenous input `u(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InputSignal {
    Zero,
    Constant {
        value: Vec<f64>,
    },
    /// `u_i(t) = a·sin(ωt)·e^{−λt}` on the channels selected by `mask`
    /// (all channels when absent), zero elsewhere.
    SineDecay {
        amplitude: f64,
        omega: f64,
        lambda: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mask: Option<Vec<bool>>,
    },
    /// Piecewise-linear interpolation of samples, holding the end values
    /// outside the grid.
    Sampled {
        t: Vec<f64>,
        values: Vec<Vec<f64>>,
    },
}

impl InputSignal {
    pub fn check(&self, m: usize) -> Result<()> {
        match self {
            InputSignal::Zero => Ok(()),
            InputSignal::Constant { value } if value.len() != m => Err(Error::ShapeMismatch(format!(
                "constant input has {} channels, model has {m}",
                value.len()
            ))),
            InputSignal::Constant { .. } => Ok(()),
            InputSignal::SineDecay { mask: Some(mask), .. } if mask.len() != m => Err(Error::ShapeMismatch(
                format!("input mask has {} channels, model has {m}", mask.len()),
            )),
            InputSignal::SineDecay { .. } => Ok(()),
            InputSignal::Sampled { t, values } => {
                if t.is_empty() || t.len() != values.len() {
                    return Err(Error::Invalid("sampled input needs one value row per time".into()));
                }
                if t.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Invalid("sampled input grid must be strictly increasing".into()));
                }
                if let Some(row) = values.iter().find(|r| r.len() != m) {
                    return Err(Error::ShapeMismatch(format!(
                        "sampled input row has {} channels, model has {m}",
                        row.len()
                    )));
                }
                Ok(())
            }
        }
    }

    /// `u(t)` as an `m`-vector.
    pub fn eval(&self, t: f64, m: usize) -> DVector<f64> {
        match self {
            InputSignal::Zero => DVector::zeros(m),
            InputSignal::Constant { value } => DVector::from_column_slice(value),
            InputSignal::SineDecay { amplitude, omega, lambda, mask } => {
                let v = amplitude * (omega * t).sin() * (-lambda * t).exp();
                DVector::from_fn(m, |i, _| match mask {
                    Some(mask) if !mask[i] => 0.0,
                    _ => v,
                })
            }
            InputSignal::Sampled { t: grid, values } => {
                let last = grid.len() - 1;
                if t <= grid[0] {
                    return DVector::from_column_slice(&values[0]);
                }
                if t >= grid[last] {
                    return DVector::from_column_slice(&values[last]);
                }
                let k = grid.partition_point(|&g| g <= t) - 1;
                let w = (t - grid[k]) / (grid[k + 1] - grid[k]);
                DVector::from_fn(m, |i, _| (1.0 - w) * values[k][i] + w * values[k + 1][i])
            }
        }
    }

    /// Number of active channels of a sine-decay input.
    pub(crate) fn active_channels(&self, m: usize) -> usize {
        match self {
            InputSignal::SineDecay { mask: Some(mask), .. } => mask.iter().filter(|&&b| b).count(),
            _ => m,
        }
    }
}

/// Stacked input `ũ(t) = (u(t), q₁(t), …, q_M(t))` with switching
/// indicators appended.
pub fn extended_input(
    input: &InputSignal,
    signal: &SwitchingSignal,
    t: f64,
    m: usize,
    num_modes: usize,
) -> Result<DVector<f64>> {
    let mode = signal.mode_at(t)?;
    let u = input.eval(t, m);
    Ok(DVector::from_fn(m + num_modes, |i, _| if i < m { u[i] } else if i - m + 1 == mode { 1.0 } else { 0.0 }))
}

/// A simulation run: switching schedule, input, horizon and initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub horizon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    pub switching: SwitchingSignal,
    pub input: InputSignal,
}

impl Scenario {
    pub fn new(horizon: f64, switching: SwitchingSignal, input: InputSignal) -> Self {
        Scenario { horizon, x0: None, switching, input }
    }

    pub fn with_x0(mut self, x0: Vec<f64>) -> Self {
        self.x0 = Some(x0);
        self
    }

    /// Initial state, zero unless given.
    pub fn initial_state(&self, n: usize) -> DVector<f64> {
        match &self.x0 {
            Some(x0) => DVector::from_column_slice(x0),
            None => DVector::zeros(n),
        }
    }

    pub fn check(&self, model: &LssModel) -> Result<()> {
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::Invalid(format!("horizon must be positive and finite, got {}", self.horizon)));
        }
        if let Some(x0) = &self.x0 {
            if x0.len() != model.n {
                return Err(Error::ShapeMismatch(format!("x0 has {} entries, model has n = {}", x0.len(), model.n)));
            }
        }
        self.switching.check(Some(model.num_modes()))?;
        self.input.check(model.m)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
