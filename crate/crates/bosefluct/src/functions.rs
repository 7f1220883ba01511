//! Named test functions `f: R -> R` applied to measurement outcomes.
//!
//! | name                     | function                         |
//! |--------------------------|----------------------------------|
//! | `identity`               | `x`                              |
//! | `square`                 | `x²`                             |
//! | `constant:c`             | `c`                              |
//! | `indicator:t`            | `1` if `x <= t`, else `0`        |
//! | `pwl:x0:y0:x1:y1:...`    | piecewise linear through knots   |

use std::fmt;

use bosefluct_core::ot1d::{LipschitzFn, PiecewiseLinear};

use crate::error::{AppError, AppResult};

#[derive(Debug, Clone)]
pub enum TestFunction {
    Identity,
    Square,
    Constant(f64),
    Indicator(f64),
    PiecewiseLinear(PiecewiseLinear),
}

fn number(s: &str, spec: &str) -> AppResult<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| AppError::config(format!("function `{spec}`: `{s}` is not a finite number")))
}

impl TestFunction {
    pub fn parse(spec: &str) -> AppResult<Self> {
        let spec = spec.trim();
        let mut parts = spec.split(':');
        let name = parts.next().unwrap_or_default();
        let args: Vec<&str> = parts.collect();
        let arity = |k: usize| {
            if args.len() == k {
                Ok(())
            } else {
                Err(AppError::config(format!("function `{spec}` takes {k} argument(s)")))
            }
        };
        match name {
            "identity" => arity(0).map(|_| TestFunction::Identity),
            "square" => arity(0).map(|_| TestFunction::Square),
            "constant" => {
                arity(1)?;
                Ok(TestFunction::Constant(number(args[0], spec)?))
            }
            "indicator" => {
                arity(1)?;
                Ok(TestFunction::Indicator(number(args[0], spec)?))
            }
            "pwl" => {
                if args.is_empty() || args.len() % 2 == 1 {
                    return Err(AppError::config(format!("function `{spec}` needs x:y knot pairs")));
                }
                let mut knots = Vec::new();
                for pair in args.chunks(2) {
                    knots.push((number(pair[0], spec)?, number(pair[1], spec)?));
                }
                PiecewiseLinear::new(knots)
                    .map(TestFunction::PiecewiseLinear)
                    .map_err(|e| AppError::config(format!("function `{spec}`: {e}")))
            }
            _ => Err(AppError::config(format!("unknown function `{spec}`"))),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TestFunction::Identity => x,
            TestFunction::Square => x * x,
            TestFunction::Constant(c) => *c,
            TestFunction::Indicator(t) => {
                if x <= *t {
                    1.0
                } else {
                    0.0
                }
            }
            TestFunction::PiecewiseLinear(p) => p.eval(x),
        }
    }

    pub fn as_fn(&self) -> impl Fn(f64) -> f64 + '_ {
        move |x| self.eval(x)
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFunction::Identity => write!(f, "identity"),
            TestFunction::Square => write!(f, "square"),
            TestFunction::Constant(c) => write!(f, "constant:{c}"),
            TestFunction::Indicator(t) => write!(f, "indicator:{t}"),
            TestFunction::PiecewiseLinear(p) => {
                write!(f, "pwl")?;
                for (x, y) in p.knots() {
                    write!(f, ":{x}:{y}")?;
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_evaluate() {
        assert_eq!(TestFunction::parse("identity").unwrap().eval(-2.5), -2.5);
        assert_eq!(TestFunction::parse("square").unwrap().eval(3.0), 9.0);
        assert_eq!(TestFunction::parse("constant:4").unwrap().eval(1.0), 4.0);
        let ind = TestFunction::parse("indicator:0.5").unwrap();
        assert_eq!((ind.eval(0.5), ind.eval(0.6)), (1.0, 0.0));
        let p = TestFunction::parse("pwl:0:0:1:2").unwrap();
        assert_eq!((p.eval(0.5), p.eval(-1.0), p.eval(5.0)), (1.0, 0.0, 2.0));
        assert_eq!(p.to_string(), "pwl:0:0:1:2");
        for bad in ["cube", "indicator", "pwl:1", "constant:x", "identity:1"] {
            assert!(TestFunction::parse(bad).is_err(), "{bad}");
        }
    }
}
