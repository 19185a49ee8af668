use crate::error::{Error, Result};
use crate::expr::Expr;

/// Continuous test function on `[0, L]` used to probe weak-* convergence.
#[derive(Debug, Clone)]
pub enum TestFunction {
    One,
    X,
    XSquared,
    /// `½ [tanh((x-a)/w) - tanh((x-b)/w)]`.
    SmoothIndicator { a: f64, b: f64, width: f64 },
    /// `sin(π x / L)`.
    Sine,
    Custom { name: String, expr: Expr },
}

/// Width used by the smoothed indicators of the standard basket.
pub const INDICATOR_WIDTH: f64 = 0.01;

impl TestFunction {
    pub fn name(&self) -> String {
        match self {
            TestFunction::One => "one".into(),
            TestFunction::X => "x".into(),
            TestFunction::XSquared => "x2".into(),
            TestFunction::SmoothIndicator { a, b, .. } => format!("ind[{a};{b}]"),
            TestFunction::Sine => "sin_pi_x_over_L".into(),
            TestFunction::Custom { name, .. } => name.clone(),
        }
    }

    pub fn eval(&self, x: f64, length: f64) -> f64 {
        match self {
            TestFunction::One => 1.0,
            TestFunction::X => x,
            TestFunction::XSquared => x * x,
            TestFunction::SmoothIndicator { a, b, width } => {
                0.5 * (((x - a) / width).tanh() - ((x - b) / width).tanh())
            }
            TestFunction::Sine => (std::f64::consts::PI * x / length).sin(),
            TestFunction::Custom { expr, .. } => expr.eval(x, 0.0),
        }
    }

    pub fn indicator(a: f64, b: f64) -> Self {
        TestFunction::SmoothIndicator {
            a,
            b,
            width: INDICATOR_WIDTH,
        }
    }

    /// Parses `one`, `x`, `x2`, `sin`, `ind:a:b`, or `expr:<expression>`.
    pub fn parse(src: &str) -> Result<Self> {
        let src = src.trim();
        Ok(match src {
            "one" | "1" => TestFunction::One,
            "x" => TestFunction::X,
            "x2" | "x^2" => TestFunction::XSquared,
            "sin" => TestFunction::Sine,
            _ => {
                if let Some(rest) = src.strip_prefix("ind:") {
                    let parts: Vec<&str> = rest.split(':').collect();
                    let parse = |s: &str| {
                        s.trim().parse::<f64>().map_err(|_| {
                            Error::config("phi", format!("bad indicator bound '{s}' in '{src}'"))
                        })
                    };
                    if parts.len() != 2 {
                        return Err(Error::config("phi", format!("expected ind:a:b, got '{src}'")));
                    }
                    TestFunction::indicator(parse(parts[0])?, parse(parts[1])?)
                } else if let Some(rest) = src.strip_prefix("expr:") {
                    TestFunction::Custom {
                        name: rest.trim().to_string(),
                        expr: Expr::parse(rest)?,
                    }
                } else {
                    return Err(Error::config("phi", format!("unknown test function '{src}'")));
                }
            }
        })
    }
}

/// Named baskets. `standard` is `{1, x, x², smoothed indicator of the
/// middle fifth of [0, L], sin(πx/L)}`.
pub fn basket(name: &str, length: f64) -> Result<Vec<TestFunction>> {
    match name {
        "standard" => Ok(vec![
            TestFunction::One,
            TestFunction::X,
            TestFunction::XSquared,
            TestFunction::indicator(0.4 * length, 0.6 * length),
            TestFunction::Sine,
        ]),
        "moments" => Ok(vec![TestFunction::One, TestFunction::X, TestFunction::XSquared]),
        other => other.split(',').map(TestFunction::parse).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_eval() {
        let f = TestFunction::parse("ind:0.9:1.1").unwrap();
        assert!((f.eval(1.0, 2.0) - 1.0).abs() < 1e-8);
        assert!(f.eval(0.5, 2.0) < 1e-8);
        assert_eq!(f.name(), "ind[0.9;1.1]");
        let g = TestFunction::parse("expr:x^3").unwrap();
        assert_eq!(g.eval(2.0, 2.0), 8.0);
        assert!(TestFunction::parse("nope").is_err());
        assert_eq!(basket("standard", 2.0).unwrap().len(), 5);
        assert_eq!(basket("x,x2", 2.0).unwrap().len(), 2);
    }
}
