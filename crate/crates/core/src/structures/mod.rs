//! Concrete dilatation structures and the name registry.
//!
//! Names: `euclidean:<dim>` (optionally `euclidean:<dim>:<p>` with `p >= 1`
//! or `inf`), `rotating:<theta>`, `heisenberg`, `left-euclidean`,
//! `broken` / `broken:<dim>`.

mod broken;
mod euclidean;
mod heisenberg;
mod rotating;

use std::sync::Arc;

pub use broken::Contracting;
pub use euclidean::Euclidean;
pub use heisenberg::{gauge, grade, group_inv, group_op, left_quotient, Heisenberg, LeftEuclidean};
pub use rotating::{from_complex, to_complex, Rotating};

use crate::dilatation::SharedStructure;
use crate::error::{Error, Result};

pub fn make_structure(spec: &str) -> Result<SharedStructure> {
    let spec = spec.trim();
    let mut parts = spec.split(':');
    let head = parts.next().unwrap_or_default();
    let params: Vec<&str> = parts.collect();
    let malformed = |reason: &str| Error::MalformedParameter {
        spec: spec.to_string(),
        reason: reason.to_string(),
    };
    let arity = |max: usize| {
        if params.len() > max {
            Err(malformed("too many parameters"))
        } else {
            Ok(())
        }
    };
    match head {
        "euclidean" => {
            arity(2)?;
            let dim = parse_dim(params.first().copied(), spec)?.ok_or_else(|| malformed("missing dimension"))?;
            let p = match params.get(1) {
                None => 2.0,
                Some(&"inf") => f64::INFINITY,
                Some(s) => {
                    let p = parse_decimal(s, spec)?;
                    if p < 1.0 {
                        return Err(malformed("norm exponent must be at least 1"));
                    }
                    p
                }
            };
            Ok(Arc::new(Euclidean::with_norm(dim, p)))
        }
        "rotating" => {
            arity(1)?;
            let theta = params
                .first()
                .ok_or_else(|| malformed("missing rotation parameter"))
                .and_then(|s| parse_decimal(s, spec))?;
            Ok(Arc::new(Rotating::new(theta)))
        }
        "heisenberg" => {
            arity(0)?;
            Ok(Arc::new(Heisenberg))
        }
        "left-euclidean" => {
            arity(0)?;
            Ok(Arc::new(LeftEuclidean))
        }
        "broken" => {
            arity(1)?;
            let dim = parse_dim(params.first().copied(), spec)?.unwrap_or(2);
            Ok(Arc::new(Contracting::new(dim)))
        }
        _ => Err(Error::UnknownName(spec.to_string())),
    }
}

fn parse_dim(s: Option<&str>, spec: &str) -> Result<Option<usize>> {
    let Some(s) = s else { return Ok(None) };
    match s.parse::<usize>() {
        Ok(d) if d >= 1 => Ok(Some(d)),
        _ => Err(Error::MalformedParameter {
            spec: spec.to_string(),
            reason: format!("dimension must be a positive integer, got `{s}`"),
        }),
    }
}

/// Finite decimal literal; rejects `nan`, `inf` and friends.
pub(crate) fn parse_decimal(s: &str, spec: &str) -> Result<f64> {
    let ok = !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E'));
    match s.parse::<f64>() {
        Ok(v) if ok && v.is_finite() => Ok(v),
        _ => Err(Error::MalformedParameter {
            spec: spec.to_string(),
            reason: format!("expected a decimal number, got `{s}`"),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dilatation::{DilatationStructure, Scale};
    use crate::point::Point;

    #[test]
    fn registry_names() {
        assert_eq!(make_structure("euclidean:2").unwrap().dim(), 2);
        assert_eq!(make_structure("euclidean:3:1").unwrap().name(), "euclidean:3:1");
        assert_eq!(make_structure("euclidean:2:inf").unwrap().name(), "euclidean:2:inf");
        assert_eq!(make_structure("rotating:0.5").unwrap().name(), "rotating:0.5");
        assert_eq!(make_structure("heisenberg").unwrap().dim(), 3);
        assert_eq!(make_structure("broken").unwrap().dim(), 2);
        assert!(matches!(make_structure("hyperbolic"), Err(Error::UnknownName(_))));
        for bad in [
            "euclidean",
            "euclidean:0",
            "euclidean:x",
            "euclidean:2:0.5",
            "rotating:nan",
            "rotating:",
            "heisenberg:1",
        ] {
            assert!(
                matches!(make_structure(bad), Err(Error::MalformedParameter { .. })),
                "{bad}"
            );
        }
    }

    #[test]
    fn rotating_zero_is_euclidean() {
        let r = make_structure("rotating:0.0").unwrap();
        let e = make_structure("euclidean:2").unwrap();
        let x = Point::from([0.3, -0.7]);
        let y = Point::from([1.9, 0.25]);
        for eps in [0.5, 0.01, 1.0, 3.0] {
            assert_eq!(r.dilate(&x, Scale::of(eps), &y), e.dilate(&x, Scale::of(eps), &y));
        }
    }

    #[test]
    fn euclidean_example() {
        let e = make_structure("euclidean:2").unwrap();
        let y = e.dilate(&Point::zeros(2), Scale::of(0.5), &Point::from([2.0, 0.0]));
        assert_eq!(y, Point::from([1.0, 0.0]));
    }

    #[test]
    fn rotating_preserves_scaled_distance() {
        let r = Rotating::new(0.5);
        let x = Point::from([0.1, 0.2]);
        let y = Point::from([-0.4, 1.1]);
        for eps in [0.3, 0.01] {
            let d = r.dilate(&x, Scale::of(eps), &y).coord_dist(&x);
            assert!((d - eps * y.coord_dist(&x)).abs() < 1e-15);
        }
    }
}
