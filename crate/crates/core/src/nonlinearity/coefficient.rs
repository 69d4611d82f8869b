use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spatially varying positive coefficient `Gamma(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CoefficientField {
    Constant {
        value: f64,
    },
    /// `below` where `x[axis] < threshold`, `above` otherwise.
    Step {
        axis: usize,
        threshold: f64,
        below: f64,
        above: f64,
    },
    /// `base + amplitude * exp(-sum ((x - center) / width)^2)`.
    Gaussian {
        base: f64,
        amplitude: f64,
        center: [f64; 3],
        width: [f64; 3],
    },
    /// Node values on a regular grid over `origin + [0, extent]`, trilinear
    /// in between and clamped outside. `values` is x-fastest.
    Table {
        origin: [f64; 3],
        extent: [f64; 3],
        shape: [usize; 3],
        values: Vec<f64>,
    },
}

impl CoefficientField {
    pub fn constant(value: f64) -> Self {
        CoefficientField::Constant { value }
    }

    pub fn eval(&self, x: [f64; 3]) -> f64 {
        match self {
            CoefficientField::Constant { value } => *value,
            CoefficientField::Step {
                axis,
                threshold,
                below,
                above,
            } => {
                if x[*axis] < *threshold {
                    *below
                } else {
                    *above
                }
            }
            CoefficientField::Gaussian {
                base,
                amplitude,
                center,
                width,
            } => {
                let r2: f64 = (0..3).map(|a| ((x[a] - center[a]) / width[a]).powi(2)).sum();
                base + amplitude * (-r2).exp()
            }
            CoefficientField::Table {
                origin,
                extent,
                shape,
                values,
            } => trilinear(*origin, *extent, *shape, values, x),
        }
    }

    /// Lower bound over all of space.
    pub fn min_value(&self) -> f64 {
        match self {
            CoefficientField::Constant { value } => *value,
            CoefficientField::Step { below, above, .. } => below.min(*above),
            CoefficientField::Gaussian { base, amplitude, .. } => base + amplitude.min(0.0),
            CoefficientField::Table { values, .. } => values.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    /// Upper bound over all of space.
    pub fn max_value(&self) -> f64 {
        match self {
            CoefficientField::Constant { value } => *value,
            CoefficientField::Step { below, above, .. } => below.max(*above),
            CoefficientField::Gaussian { base, amplitude, .. } => base + amplitude.max(0.0),
            CoefficientField::Table { values, .. } => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CoefficientField::Step { axis, .. } if *axis > 2 => {
                return Err(Error::InvalidParameter(format!("step axis {axis} out of range")));
            }
            CoefficientField::Gaussian { width, .. } if width.iter().any(|w| !(*w > 0.0)) => {
                return Err(Error::InvalidParameter("gaussian widths must be positive".into()));
            }
            CoefficientField::Table { shape, values, extent, .. } => {
                if shape.iter().any(|&n| n < 2) || values.len() != shape.iter().product::<usize>() {
                    return Err(Error::InvalidParameter(
                        "table needs >= 2 nodes per axis and shape-matching values".into(),
                    ));
                }
                if extent.iter().any(|e| !(*e > 0.0)) {
                    return Err(Error::InvalidParameter("table extent must be positive".into()));
                }
            }
            _ => {}
        }
        let min = self.min_value();
        if !(min > 0.0 && min.is_finite() && self.max_value().is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "coefficient must be bounded and bounded away from zero, lower bound is {min}"
            )));
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Self {
        match self.clone() {
            CoefficientField::Constant { value } => CoefficientField::Constant { value: s * value },
            CoefficientField::Step {
                axis,
                threshold,
                below,
                above,
            } => CoefficientField::Step {
                axis,
                threshold,
                below: s * below,
                above: s * above,
            },
            CoefficientField::Gaussian {
                base,
                amplitude,
                center,
                width,
            } => CoefficientField::Gaussian {
                base: s * base,
                amplitude: s * amplitude,
                center,
                width,
            },
            CoefficientField::Table {
                origin,
                extent,
                shape,
                values,
            } => CoefficientField::Table {
                origin,
                extent,
                shape,
                values: values.into_iter().map(|v| s * v).collect(),
            },
        }
    }

    /// Invariant under rotations and reflections fixing the `x3`-axis.
    pub fn is_axisymmetric(&self) -> bool {
        match self {
            CoefficientField::Constant { .. } => true,
            CoefficientField::Step { axis, .. } => *axis == 2,
            CoefficientField::Gaussian { center, width, .. } => {
                center[0] == 0.0 && center[1] == 0.0 && width[0] == width[1]
            }
            CoefficientField::Table { .. } => false,
        }
    }

    /// Invariant under `x3 -> height - x3`.
    pub fn is_reflection_symmetric(&self, height: f64) -> bool {
        match self {
            CoefficientField::Constant { .. } => true,
            CoefficientField::Step { axis, below, above, .. } => *axis != 2 || below == above,
            CoefficientField::Gaussian { center, amplitude, .. } => {
                *amplitude == 0.0 || (center[2] - 0.5 * height).abs() <= 1e-12 * height.max(1.0)
            }
            CoefficientField::Table { .. } => false,
        }
    }
}

fn trilinear(origin: [f64; 3], extent: [f64; 3], shape: [usize; 3], values: &[f64], x: [f64; 3]) -> f64 {
    let mut i0 = [0usize; 3];
    let mut t = [0.0; 3];
    for a in 0..3 {
        let cells = (shape[a] - 1) as f64;
        let s = ((x[a] - origin[a]) / extent[a] * cells).clamp(0.0, cells);
        let i = (s.floor() as usize).min(shape[a] - 2);
        i0[a] = i;
        t[a] = s - i as f64;
    }
    let at = |i: usize, j: usize, k: usize| values[i + shape[0] * (j + shape[1] * k)];
    let mut acc = 0.0;
    for dk in 0..2 {
        for dj in 0..2 {
            for di in 0..2 {
                let w = (if di == 1 { t[0] } else { 1.0 - t[0] })
                    * (if dj == 1 { t[1] } else { 1.0 - t[1] })
                    * (if dk == 1 { t[2] } else { 1.0 - t[2] });
                if w != 0.0 {
                    acc += w * at(i0[0] + di, i0[1] + dj, i0[2] + dk);
                }
            }
        }
    }
    acc
}
