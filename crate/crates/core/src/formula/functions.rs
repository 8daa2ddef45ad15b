//! Built-in functions.

use chrono::{Datelike, Months, NaiveDate};

use crate::round::{round_decimal, RoundMode};
use crate::value::{CellValue, ErrorCode};

use super::ast::{Expr, RangeRef};
use super::eval::{compare, Evaluator};

type Res = Result<CellValue, ErrorCode>;

fn err(e: ErrorCode) -> CellValue {
    CellValue::Error(e)
}

pub(super) fn call(ev: &mut Evaluator<'_>, name: &str, args: &[Expr]) -> CellValue {
    let arity = |min: usize, max: usize| args.len() >= min && args.len() <= max;
    let ok = match name {
        "SUM" | "AVERAGE" | "MIN" | "MAX" | "COUNT" | "AND" | "OR" => arity(1, 255),
        "IF" => arity(2, 3),
        "NOT" | "ABS" | "YEAR" | "MONTH" | "DAY" => arity(1, 1),
        "ROUND" | "ROUNDUP" | "ROUNDDOWN" => arity(2, 2),
        "VLOOKUP" => arity(3, 4),
        "INDEX" => arity(2, 3),
        "MATCH" => arity(2, 3),
        "DATE" => arity(3, 3),
        _ => {
            ev.diagnose(format!("unknown function {name}"));
            return err(ErrorCode::Name);
        }
    };
    if !ok {
        ev.diagnose(format!("wrong number of arguments to {name}"));
        return err(ErrorCode::Value);
    }
    let result = match name {
        "SUM" => numbers(ev, args).map(|v| CellValue::Number(v.iter().sum())),
        "AVERAGE" => numbers(ev, args).and_then(|v| {
            if v.is_empty() {
                Err(ErrorCode::Div0)
            } else {
                Ok(CellValue::Number(v.iter().sum::<f64>() / v.len() as f64))
            }
        }),
        "MIN" => numbers(ev, args)
            .map(|v| CellValue::Number(v.into_iter().reduce(f64::min).unwrap_or(0.0))),
        "MAX" => numbers(ev, args)
            .map(|v| CellValue::Number(v.into_iter().reduce(f64::max).unwrap_or(0.0))),
        "COUNT" => Ok(CellValue::Number(count(ev, args) as f64)),
        "IF" => {
            let cond = ev.eval(&args[0]).to_bool();
            match cond {
                Ok(true) => Ok(ev.eval(&args[1])),
                Ok(false) => Ok(args.get(2).map_or(CellValue::Boolean(false), |e| ev.eval(e))),
                Err(e) => Err(e),
            }
        }
        "AND" | "OR" => logical(ev, args, name == "AND"),
        "NOT" => ev.eval(&args[0]).to_bool().map(|b| CellValue::Boolean(!b)),
        "ABS" => ev.eval(&args[0]).to_number().map(|n| CellValue::Number(n.abs())),
        "ROUND" | "ROUNDUP" | "ROUNDDOWN" => {
            let mode = match name {
                "ROUND" => RoundMode::HalfAwayFromZero,
                "ROUNDUP" => RoundMode::Up,
                _ => RoundMode::Down,
            };
            (|| {
                let x = ev.eval(&args[0]).to_number()?;
                let digits = ev.eval(&args[1]).to_number()?.trunc();
                if digits.abs() > 308.0 {
                    return Err(ErrorCode::Value);
                }
                Ok(CellValue::Number(round_decimal(x, digits as i32, mode)))
            })()
        }
        "VLOOKUP" => vlookup(ev, args),
        "INDEX" => index(ev, args),
        "MATCH" => match_fn(ev, args),
        "DATE" => date(ev, args),
        "YEAR" | "MONTH" | "DAY" => ev.eval(&args[0]).to_date().map(|d| {
            CellValue::Number(match name {
                "YEAR" => d.year(),
                "MONTH" => d.month() as i32,
                _ => d.day() as i32,
            } as f64)
        }),
        _ => unreachable!("arity table covers every name"),
    };
    match result {
        Ok(CellValue::Number(n)) if !n.is_finite() => err(ErrorCode::Value),
        Ok(v) => v,
        Err(e) => err(e),
    }
}

/// Range argument: a range literal or a single reference.
fn range_arg(expr: &Expr) -> Option<RangeRef> {
    match expr {
        Expr::Range(r) => Some(r.clone()),
        Expr::Ref(a) => Some(RangeRef::new(a.clone(), a.clone())),
        _ => None,
    }
}

/// Numeric arguments for the aggregate functions. Inside references only
/// numbers and dates count; direct arguments are coerced.
fn numbers(ev: &mut Evaluator<'_>, args: &[Expr]) -> Result<Vec<f64>, ErrorCode> {
    let mut out = Vec::new();
    for a in args {
        if let Some(r) = range_arg(a) {
            for v in ev.range_values(&r) {
                match v {
                    CellValue::Number(_) | CellValue::Date(_) => out.push(v.to_number()?),
                    CellValue::Error(e) => return Err(e),
                    _ => {}
                }
            }
        } else {
            out.push(ev.eval(a).to_number()?);
        }
    }
    Ok(out)
}

fn count(ev: &mut Evaluator<'_>, args: &[Expr]) -> usize {
    let mut n = 0;
    for a in args {
        if let Some(r) = range_arg(a) {
            n += ev
                .range_values(&r)
                .iter()
                .filter(|v| matches!(v, CellValue::Number(_) | CellValue::Date(_)))
                .count();
        } else {
            let v = ev.eval(a);
            if !v.is_error() && !v.is_blank() && v.to_number().is_ok() {
                n += 1;
            }
        }
    }
    n
}

fn logical(ev: &mut Evaluator<'_>, args: &[Expr], all: bool) -> Res {
    let mut seen = false;
    let mut acc = all;
    for a in args {
        let values = match range_arg(a) {
            Some(r) => ev
                .range_values(&r)
                .into_iter()
                .filter(|v| !matches!(v, CellValue::Text(_) | CellValue::Blank))
                .collect(),
            None => vec![ev.eval(a)],
        };
        for v in values {
            let b = v.to_bool()?;
            seen = true;
            acc = if all { acc && b } else { acc || b };
        }
    }
    if !seen {
        return Err(ErrorCode::Value);
    }
    Ok(CellValue::Boolean(acc))
}

fn exact_flag(ev: &mut Evaluator<'_>, arg: Option<&Expr>, func: &str, exact_value: f64) -> Result<(), ErrorCode> {
    let exact = match arg {
        None => false,
        Some(e) => ev.eval(e).to_number()? == exact_value,
    };
    if !exact {
        ev.diagnose(format!("unsupported feature: {func} supports exact match only"));
        return Err(ErrorCode::Value);
    }
    Ok(())
}

fn positive_index(ev: &mut Evaluator<'_>, e: &Expr) -> Result<u32, ErrorCode> {
    let n = ev.eval(e).to_number()?.trunc();
    if n < 1.0 || n > u32::MAX as f64 {
        return Err(ErrorCode::Value);
    }
    Ok(n as u32)
}

fn vlookup(ev: &mut Evaluator<'_>, args: &[Expr]) -> Res {
    let key = ev.eval(&args[0]);
    if let CellValue::Error(e) = key {
        return Err(e);
    }
    let Some(range) = range_arg(&args[1]) else {
        ev.diagnose("VLOOKUP needs a range");
        return Err(ErrorCode::Ref);
    };
    let col = positive_index(ev, &args[2])?;
    exact_flag(ev, args.get(3), "VLOOKUP", 0.0)?;
    if col > range.width() {
        return Err(ErrorCode::Ref);
    }
    for row in 0..range.height() {
        let candidate = ev.evaluate(&range.at(row, 0));
        if let CellValue::Error(e) = candidate {
            return Err(e);
        }
        if !candidate.is_blank() && compare(&key, &candidate).is_eq() {
            return Ok(ev.evaluate(&range.at(row, col - 1)));
        }
    }
    ev.diagnose(format!("VLOOKUP: value `{key}` not found"));
    Err(ErrorCode::Value)
}

fn index(ev: &mut Evaluator<'_>, args: &[Expr]) -> Res {
    let Some(range) = range_arg(&args[0]) else {
        ev.diagnose("INDEX needs a range");
        return Err(ErrorCode::Ref);
    };
    let first = positive_index(ev, &args[1]).map_err(|_| ErrorCode::Ref)?;
    let (row, col) = match args.get(2) {
        Some(c) => (first, positive_index(ev, c).map_err(|_| ErrorCode::Ref)?),
        // a single-row range is indexed by column
        None if range.height() == 1 => (1, first),
        None => (first, 1),
    };
    if row > range.height() || col > range.width() {
        return Err(ErrorCode::Ref);
    }
    Ok(ev.evaluate(&range.at(row - 1, col - 1)))
}

fn match_fn(ev: &mut Evaluator<'_>, args: &[Expr]) -> Res {
    let key = ev.eval(&args[0]);
    if let CellValue::Error(e) = key {
        return Err(e);
    }
    let Some(range) = range_arg(&args[1]) else {
        ev.diagnose("MATCH needs a range");
        return Err(ErrorCode::Ref);
    };
    exact_flag(ev, args.get(2), "MATCH", 0.0)?;
    if range.width() > 1 && range.height() > 1 {
        ev.diagnose("MATCH needs a single row or column");
        return Err(ErrorCode::Ref);
    }
    for (i, v) in ev.range_values(&range).into_iter().enumerate() {
        if let CellValue::Error(e) = v {
            return Err(e);
        }
        if !v.is_blank() && compare(&key, &v).is_eq() {
            return Ok(CellValue::Number((i + 1) as f64));
        }
    }
    ev.diagnose(format!("MATCH: value `{key}` not found"));
    Err(ErrorCode::Value)
}

/// `DATE(y, m, d)` with month and day overflow rolling into the next
/// unit, as spreadsheets do.
fn date(ev: &mut Evaluator<'_>, args: &[Expr]) -> Res {
    let y = ev.eval(&args[0]).to_number()?.trunc();
    let m = ev.eval(&args[1]).to_number()?.trunc();
    let d = ev.eval(&args[2]).to_number()?.trunc();
    if !(0.0..=9999.0).contains(&y) || m.abs() > 120_000.0 || d.abs() > 3_000_000.0 {
        return Err(ErrorCode::Value);
    }
    let base = NaiveDate::from_ymd_opt(y as i32, 1, 1).ok_or(ErrorCode::Value)?;
    let months = m as i64 - 1;
    let base = if months >= 0 {
        base.checked_add_months(Months::new(months as u32))
    } else {
        base.checked_sub_months(Months::new((-months) as u32))
    }
    .ok_or(ErrorCode::Value)?;
    let out = base
        .checked_add_signed(chrono::Duration::days(d as i64 - 1))
        .ok_or(ErrorCode::Value)?;
    Ok(CellValue::Date(out))
}
