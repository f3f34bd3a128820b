//! Named catalog of analytic data functions for boundary and initial data.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DomainGrid, Point};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataFunction {
    Constant {
        value: f64,
    },
    /// `value + gradient · (x − origin) + rate · t`
    LinearRamp {
        value: f64,
        gradient: [f64; 2],
        #[serde(default)]
        origin: [f64; 2],
        #[serde(default)]
        rate: f64,
    },
    /// `below` for `x[axis] < at`, `above` otherwise.
    Step {
        axis: usize,
        at: f64,
        below: f64,
        above: f64,
    },
    /// `base + amplitude · (ln(1 + radius/|x − center|))^{−λ}`; equals `base` at the
    /// center and has a logarithmic modulus of continuity there.
    LogModulus {
        center: [f64; 2],
        base: f64,
        amplitude: f64,
        radius: f64,
        lambda: f64,
    },
    /// `amplitude · sin(π · periods · (x − x0)/(x1 − x0))` in 1D. `periods`
    /// counts half-waves over `[x0, x1]`.
    Sine {
        amplitude: f64,
        x0: f64,
        x1: f64,
        #[serde(default = "default_periods")]
        periods: f64,
    },
    Sum {
        terms: Vec<DataFunction>,
    },
}

fn default_periods() -> f64 {
    1.0
}

impl DataFunction {
    pub fn constant(value: f64) -> Self {
        DataFunction::Constant { value }
    }

    pub fn eval(&self, x: Point, t: f64) -> f64 {
        match self {
            DataFunction::Constant { value } => *value,
            DataFunction::LinearRamp { value, gradient, origin, rate } => {
                value + gradient[0] * (x[0] - origin[0]) + gradient[1] * (x[1] - origin[1]) + rate * t
            }
            DataFunction::Step { axis, at, below, above } => {
                if x[*axis] < *at {
                    *below
                } else {
                    *above
                }
            }
            DataFunction::LogModulus { center, base, amplitude, radius, lambda } => {
                let d = ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)).sqrt();
                if d == 0.0 {
                    *base
                } else {
                    base + amplitude * (1.0 + radius / d).ln().powf(-lambda)
                }
            }
            DataFunction::Sine { amplitude, x0, x1, periods } => {
                amplitude * (std::f64::consts::PI * periods * (x[0] - x0) / (x1 - x0)).sin()
            }
            DataFunction::Sum { terms } => terms.iter().map(|f| f.eval(x, t)).sum(),
        }
    }

    pub fn validate(&self, what: &str, errors: &mut Vec<String>) {
        let finite = |v: f64, name: &str, errors: &mut Vec<String>| {
            if !v.is_finite() {
                errors.push(format!("{what}: {name} must be finite"));
            }
        };
        match self {
            DataFunction::Constant { value } => finite(*value, "value", errors),
            DataFunction::LinearRamp { value, gradient, origin, rate } => {
                for v in [*value, gradient[0], gradient[1], origin[0], origin[1], *rate] {
                    finite(v, "ramp coefficient", errors);
                }
            }
            DataFunction::Step { axis, at, below, above } => {
                if *axis > 1 {
                    errors.push(format!("{what}: step axis must be 0 or 1"));
                }
                for v in [*at, *below, *above] {
                    finite(v, "step parameter", errors);
                }
            }
            DataFunction::LogModulus { radius, lambda, base, amplitude, .. } => {
                if !(*radius > 0.0) {
                    errors.push(format!("{what}: log-modulus radius must be positive"));
                }
                if !(*lambda > 0.0) {
                    errors.push(format!("{what}: log-modulus exponent must be positive"));
                }
                finite(*base, "base", errors);
                finite(*amplitude, "amplitude", errors);
            }
            DataFunction::Sine { x0, x1, amplitude, periods } => {
                if !(x1 > x0) {
                    errors.push(format!("{what}: sine needs x1 > x0"));
                }
                finite(*amplitude, "amplitude", errors);
                finite(*periods, "periods", errors);
            }
            DataFunction::Sum { terms } => {
                if terms.is_empty() {
                    errors.push(format!("{what}: sum needs at least one term"));
                }
                for f in terms {
                    f.validate(what, errors);
                }
            }
        }
    }
}

/// Declared logarithmic modulus `ω(r) = C / |ln r|^λ` for `r ∈ (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeclaredModulus {
    pub c: f64,
    pub lambda: f64,
}

impl DeclaredModulus {
    pub fn eval(&self, r: f64) -> f64 {
        if r <= 0.0 {
            0.0
        } else if r >= 1.0 {
            f64::INFINITY
        } else {
            self.c * (-r.ln()).powf(-self.lambda)
        }
    }
}

/// Sample random pairs of points in the domain and report the worst excess
/// `|f(z1) − f(z2)| − ω(|z1 − z2|)`; non-positive means the declaration held.
pub fn check_declared_modulus<R: Rng>(
    f: &DataFunction,
    modulus: &DeclaredModulus,
    grid: &DomainGrid,
    t: f64,
    pairs: usize,
    rng: &mut R,
) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty grid".into()));
    }
    let n = grid.len();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..pairs {
        let a = grid.center(rng.gen_range(0..n));
        let b = grid.center(rng.gen_range(0..n));
        let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        if d == 0.0 || d >= 1.0 {
            continue;
        }
        let excess = (f.eval(a, t) - f.eval(b, t)).abs() - modulus.eval(d);
        worst = worst.max(excess);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ShapeSpec;
    use rand::SeedableRng;

    #[test]
    fn catalog_values() {
        let ramp = DataFunction::LinearRamp { value: 1.0, gradient: [2.0, 0.0], origin: [0.0, 0.0], rate: 0.5 };
        assert_eq!(ramp.eval([0.25, 3.0], 2.0), 2.5);
        let step = DataFunction::Step { axis: 0, at: 0.5, below: 1.0, above: -1.0 };
        assert_eq!(step.eval([0.2, 0.0], 0.0), 1.0);
        assert_eq!(step.eval([0.7, 0.0], 0.0), -1.0);
        let lm = DataFunction::LogModulus { center: [0.5, 0.5], base: 0.2, amplitude: 1.0, radius: 2.0, lambda: 1.0 };
        assert_eq!(lm.eval([0.5, 0.5], 0.0), 0.2);
        assert!(lm.eval([0.6, 0.5], 0.0) > lm.eval([0.51, 0.5], 0.0));
        let s = DataFunction::Sum { terms: vec![DataFunction::constant(1.0), DataFunction::constant(2.0)] };
        assert_eq!(s.eval([0.0, 0.0], 0.0), 3.0);
    }

    #[test]
    fn json_rejects_unknown_keys() {
        let ok: DataFunction = serde_json::from_str(r#"{"kind":"constant","value":1.5}"#).unwrap();
        assert_eq!(ok, DataFunction::constant(1.5));
        assert!(serde_json::from_str::<DataFunction>(r#"{"kind":"constant","value":1.5,"extra":1}"#).is_err());
    }

    #[test]
    fn log_modulus_data_satisfies_declared_modulus() {
        let grid = crate::geometry::DomainGrid::build(&ShapeSpec::LShape { size: 1.0 }, 1.0 / 32.0).unwrap();
        let f = DataFunction::LogModulus { center: [0.5, 0.5], base: 0.0, amplitude: 0.3, radius: 2.0, lambda: 1.0 };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let worst = check_declared_modulus(&f, &DeclaredModulus { c: 1.0, lambda: 1.0 }, &grid, 0.0, 2000, &mut rng).unwrap();
        assert!(worst <= 0.0, "excess {worst}");
        let steep = DataFunction::Step { axis: 0, at: 0.5, below: 0.0, above: 1.0 };
        let worst = check_declared_modulus(&steep, &DeclaredModulus { c: 0.1, lambda: 1.0 }, &grid, 0.0, 2000, &mut rng).unwrap();
        assert!(worst > 0.0);
    }
}
