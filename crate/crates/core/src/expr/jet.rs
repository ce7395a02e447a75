//! Forward-mode evaluators: plain values, first-order duals, and
//! second-order jets.

use nalgebra::{DMatrix, DVector};

use super::{render, Ast, EvalError, Func};

/// Value, gradient, and symmetric Hessian of a scalar expression at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

impl Jet2 {
    fn constant(value: f64, dim: usize) -> Jet2 {
        Jet2 {
            value,
            gradient: DVector::zeros(dim),
            hessian: DMatrix::zeros(dim, dim),
        }
    }

    fn coordinate(value: f64, index: usize, dim: usize) -> Jet2 {
        let mut gradient = DVector::zeros(dim);
        gradient[index] = 1.0;
        Jet2 {
            value,
            gradient,
            hessian: DMatrix::zeros(dim, dim),
        }
    }
}

fn non_finite(ast: &Ast, coords: &[String]) -> EvalError {
    EvalError::NonFinite {
        subexpr: render(ast, coords),
    }
}

fn check(v: f64, ast: &Ast, coords: &[String]) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(non_finite(ast, coords))
    }
}

/// Integer-exponent derivative coefficients, guarding the 0 * 0^-1 corner.
fn powi_coeffs(u: f64, n: i32) -> (f64, f64, f64) {
    let value = u.powi(n);
    let d1 = if n == 0 { 0.0 } else { f64::from(n) * u.powi(n - 1) };
    let d2 = if n == 0 || n == 1 {
        0.0
    } else {
        f64::from(n) * f64::from(n - 1) * u.powi(n - 2)
    };
    (value, d1, d2)
}

fn as_integer_exponent(e: f64) -> Option<i32> {
    if e.fract() == 0.0 && e.abs() <= 1e9 {
        Some(e as i32)
    } else {
        None
    }
}

/// Scalar derivative data for a power node, or a domain error.
fn pow_coeffs(u: f64, e: f64, ast: &Ast, coords: &[String]) -> Result<(f64, f64, f64), EvalError> {
    match as_integer_exponent(e) {
        Some(n) => {
            if u == 0.0 && n < 0 {
                return Err(EvalError::DivisionByZero {
                    subexpr: render(ast, coords),
                });
            }
            Ok(powi_coeffs(u, n))
        }
        None => {
            if u <= 0.0 {
                return Err(EvalError::PowDomain {
                    subexpr: render(ast, coords),
                });
            }
            Ok((u.powf(e), e * u.powf(e - 1.0), e * (e - 1.0) * u.powf(e - 2.0)))
        }
    }
}

/// Value and first two derivatives of a unary builtin at `u`.
///
/// `derivative` says whether the caller needs derivatives; sqrt at zero has a
/// finite value but no finite derivative, so the domain check differs.
fn unary_coeffs(
    f: Func,
    u: f64,
    derivative: bool,
    ast: &Ast,
    coords: &[String],
) -> Result<(f64, f64, f64), EvalError> {
    let bad = |e: EvalError| -> Result<(f64, f64, f64), EvalError> { Err(e) };
    match f {
        Func::Sin => Ok((u.sin(), u.cos(), -u.sin())),
        Func::Cos => Ok((u.cos(), -u.sin(), -u.cos())),
        Func::Tan => {
            let t = u.tan();
            let sec2 = 1.0 + t * t;
            Ok((t, sec2, 2.0 * t * sec2))
        }
        Func::Exp => {
            let v = u.exp();
            Ok((v, v, v))
        }
        Func::Log => {
            if u <= 0.0 {
                return bad(EvalError::LogDomain {
                    subexpr: render(ast, coords),
                });
            }
            Ok((u.ln(), 1.0 / u, -1.0 / (u * u)))
        }
        Func::Sqrt => {
            if u < 0.0 || (derivative && u == 0.0) {
                return bad(EvalError::SqrtDomain {
                    subexpr: render(ast, coords),
                });
            }
            let r = u.sqrt();
            if derivative {
                Ok((r, 0.5 / r, -0.25 / (r * u)))
            } else {
                Ok((r, 0.0, 0.0))
            }
        }
        Func::Atan2 => unreachable!("atan2 handled by its own rule"),
    }
}

/// First and second partials of atan2(y, x), checked away from the origin.
fn atan2_coeffs(
    y: f64,
    x: f64,
    ast: &Ast,
    coords: &[String],
) -> Result<(f64, [f64; 2], [f64; 3]), EvalError> {
    let r2 = x * x + y * y;
    if r2 == 0.0 {
        return Err(EvalError::Atan2Origin {
            subexpr: render(ast, coords),
        });
    }
    let r4 = r2 * r2;
    let fy = x / r2;
    let fx = -y / r2;
    let fyy = -2.0 * x * y / r4;
    let fyx = (y * y - x * x) / r4;
    let fxx = 2.0 * x * y / r4;
    Ok((y.atan2(x), [fy, fx], [fyy, fyx, fxx]))
}

pub(super) fn eval_value(ast: &Ast, coords: &[String], z: &[f64]) -> Result<f64, EvalError> {
    let v = match ast {
        Ast::Lit(v) => *v,
        Ast::Coord(i) => z[*i],
        Ast::Neg(x) => -eval_value(x, coords, z)?,
        Ast::Add(l, r) => eval_value(l, coords, z)? + eval_value(r, coords, z)?,
        Ast::Sub(l, r) => eval_value(l, coords, z)? - eval_value(r, coords, z)?,
        Ast::Mul(l, r) => eval_value(l, coords, z)? * eval_value(r, coords, z)?,
        Ast::Div(l, r) => {
            let denom = eval_value(r, coords, z)?;
            if denom == 0.0 {
                return Err(EvalError::DivisionByZero {
                    subexpr: render(ast, coords),
                });
            }
            eval_value(l, coords, z)? / denom
        }
        Ast::Pow(b, e) => {
            let u = eval_value(b, coords, z)?;
            pow_coeffs(u, *e, ast, coords)?.0
        }
        Ast::Call(Func::Atan2, args) => {
            let y = eval_value(&args[0], coords, z)?;
            let x = eval_value(&args[1], coords, z)?;
            atan2_coeffs(y, x, ast, coords)?.0
        }
        Ast::Call(f, args) => {
            let u = eval_value(&args[0], coords, z)?;
            unary_coeffs(*f, u, false, ast, coords)?.0
        }
    };
    check(v, ast, coords)
}

pub(super) fn eval_dual(
    ast: &Ast,
    coords: &[String],
    z: &[f64],
    seed: &[f64],
) -> Result<(f64, f64), EvalError> {
    let (v, d) = match ast {
        Ast::Lit(v) => (*v, 0.0),
        Ast::Coord(i) => (z[*i], seed[*i]),
        Ast::Neg(x) => {
            let (v, d) = eval_dual(x, coords, z, seed)?;
            (-v, -d)
        }
        Ast::Add(l, r) => {
            let (a, da) = eval_dual(l, coords, z, seed)?;
            let (b, db) = eval_dual(r, coords, z, seed)?;
            (a + b, da + db)
        }
        Ast::Sub(l, r) => {
            let (a, da) = eval_dual(l, coords, z, seed)?;
            let (b, db) = eval_dual(r, coords, z, seed)?;
            (a - b, da - db)
        }
        Ast::Mul(l, r) => {
            let (a, da) = eval_dual(l, coords, z, seed)?;
            let (b, db) = eval_dual(r, coords, z, seed)?;
            (a * b, da * b + a * db)
        }
        Ast::Div(l, r) => {
            let (a, da) = eval_dual(l, coords, z, seed)?;
            let (b, db) = eval_dual(r, coords, z, seed)?;
            if b == 0.0 {
                return Err(EvalError::DivisionByZero {
                    subexpr: render(ast, coords),
                });
            }
            (a / b, (da * b - a * db) / (b * b))
        }
        Ast::Pow(base, e) => {
            let (u, du) = eval_dual(base, coords, z, seed)?;
            let (v, d1, _) = pow_coeffs(u, *e, ast, coords)?;
            (v, d1 * du)
        }
        Ast::Call(Func::Atan2, args) => {
            let (y, dy) = eval_dual(&args[0], coords, z, seed)?;
            let (x, dx) = eval_dual(&args[1], coords, z, seed)?;
            let (v, [fy, fx], _) = atan2_coeffs(y, x, ast, coords)?;
            (v, fy * dy + fx * dx)
        }
        Ast::Call(f, args) => {
            let (u, du) = eval_dual(&args[0], coords, z, seed)?;
            let (v, d1, _) = unary_coeffs(*f, u, true, ast, coords)?;
            (v, d1 * du)
        }
    };
    Ok((check(v, ast, coords)?, d))
}

pub(super) fn eval_jet(ast: &Ast, coords: &[String], z: &[f64]) -> Result<Jet2, EvalError> {
    let dim = coords.len();
    let jet = match ast {
        Ast::Lit(v) => Jet2::constant(*v, dim),
        Ast::Coord(i) => Jet2::coordinate(z[*i], *i, dim),
        Ast::Neg(x) => {
            let a = eval_jet(x, coords, z)?;
            Jet2 {
                value: -a.value,
                gradient: -a.gradient,
                hessian: -a.hessian,
            }
        }
        Ast::Add(l, r) => {
            let a = eval_jet(l, coords, z)?;
            let b = eval_jet(r, coords, z)?;
            Jet2 {
                value: a.value + b.value,
                gradient: a.gradient + b.gradient,
                hessian: a.hessian + b.hessian,
            }
        }
        Ast::Sub(l, r) => {
            let a = eval_jet(l, coords, z)?;
            let b = eval_jet(r, coords, z)?;
            Jet2 {
                value: a.value - b.value,
                gradient: a.gradient - b.gradient,
                hessian: a.hessian - b.hessian,
            }
        }
        Ast::Mul(l, r) => {
            let a = eval_jet(l, coords, z)?;
            let b = eval_jet(r, coords, z)?;
            jet_mul(&a, &b)
        }
        Ast::Div(l, r) => {
            let a = eval_jet(l, coords, z)?;
            let b = eval_jet(r, coords, z)?;
            if b.value == 0.0 {
                return Err(EvalError::DivisionByZero {
                    subexpr: render(ast, coords),
                });
            }
            // a * (1/b), with 1/u expanded through second order.
            let inv = b.value.recip();
            let recip = jet_chain(&b, inv, -inv * inv, 2.0 * inv * inv * inv);
            jet_mul(&a, &recip)
        }
        Ast::Pow(base, e) => {
            let u = eval_jet(base, coords, z)?;
            let (v, d1, d2) = pow_coeffs(u.value, *e, ast, coords)?;
            jet_chain(&u, v, d1, d2)
        }
        Ast::Call(Func::Atan2, args) => {
            let yj = eval_jet(&args[0], coords, z)?;
            let xj = eval_jet(&args[1], coords, z)?;
            let (v, [fy, fx], [fyy, fyx, fxx]) = atan2_coeffs(yj.value, xj.value, ast, coords)?;
            let gy = &yj.gradient;
            let gx = &xj.gradient;
            let hessian = fy * &yj.hessian
                + fx * &xj.hessian
                + fyy * gy * gy.transpose()
                + fyx * (gy * gx.transpose() + gx * gy.transpose())
                + fxx * gx * gx.transpose();
            Jet2 {
                value: v,
                gradient: fy * gy + fx * gx,
                hessian,
            }
        }
        Ast::Call(f, args) => {
            let u = eval_jet(&args[0], coords, z)?;
            let (v, d1, d2) = unary_coeffs(*f, u.value, true, ast, coords)?;
            jet_chain(&u, v, d1, d2)
        }
    };
    check(jet.value, ast, coords)?;
    Ok(jet)
}

fn jet_mul(a: &Jet2, b: &Jet2) -> Jet2 {
    let cross = &a.gradient * b.gradient.transpose();
    Jet2 {
        value: a.value * b.value,
        gradient: b.value * &a.gradient + a.value * &b.gradient,
        hessian: b.value * &a.hessian + a.value * &b.hessian + &cross + cross.transpose(),
    }
}

/// phi(u) through second order: phi, phi', phi'' supplied by the caller.
fn jet_chain(u: &Jet2, value: f64, d1: f64, d2: f64) -> Jet2 {
    Jet2 {
        value,
        gradient: d1 * &u.gradient,
        hessian: d1 * &u.hessian + d2 * &u.gradient * u.gradient.transpose(),
    }
}
