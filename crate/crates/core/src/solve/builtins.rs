use std::cmp::Ordering;

use super::{SolveError, Value};
use crate::lang::{AggFn, ArithOp, CmpOp};

/// Total term order: `#inf`, integers by value, symbols lexicographically, `#sup`.
pub fn compare(op: CmpOp, a: &Value, b: &Value) -> bool {
    let ord = a.cmp(b);
    match op {
        CmpOp::Eq => ord == Ordering::Equal,
        CmpOp::Ne => ord != Ordering::Equal,
        CmpOp::Lt => ord == Ordering::Less,
        CmpOp::Gt => ord == Ordering::Greater,
        CmpOp::Ge => ord != Ordering::Less,
        CmpOp::Le => ord != Ordering::Greater,
    }
}

/// Integer arithmetic. `Ok(None)` when undefined (division by zero, symbolic operand).
pub fn arith(op: ArithOp, a: &Value, b: &Value) -> Result<Option<Value>, SolveError> {
    let (Value::Int(x), Value::Int(y)) = (a, b) else { return Ok(None) };
    let (x, y) = (*x, *y);
    let r = match op {
        ArithOp::Add => x.checked_add(y),
        ArithOp::Sub => x.checked_sub(y),
        ArithOp::Mul => x.checked_mul(y),
        ArithOp::Div => {
            if y == 0 {
                return Ok(None);
            }
            x.checked_div(y)
        }
        ArithOp::Dist => x.checked_sub(y).and_then(i64::checked_abs),
    };
    match r {
        Some(v) => Ok(Some(Value::Int(v))),
        None => Err(SolveError::Overflow(format!("{x} {} {y}", op.symbol()))),
    }
}

/// Aggregate over a set of distinct tuples. Empty min is `#sup`, empty max is `#inf`.
pub fn aggregate<'a>(func: AggFn, tuples: impl IntoIterator<Item = &'a [Value]>) -> Result<Option<Value>, SolveError> {
    let mut count: i64 = 0;
    let mut sum: i64 = 0;
    let mut best: Option<&Value> = None;
    for t in tuples {
        count += 1;
        let Some(first) = t.first() else { continue };
        match func {
            AggFn::Sum => {
                if let Value::Int(v) = first {
                    sum = sum.checked_add(*v).ok_or_else(|| SolveError::Overflow("#sum".into()))?;
                }
            }
            AggFn::Min => {
                if best.is_none_or(|b| first < b) {
                    best = Some(first);
                }
            }
            AggFn::Max => {
                if best.is_none_or(|b| first > b) {
                    best = Some(first);
                }
            }
            AggFn::Count => {}
        }
    }
    Ok(match func {
        AggFn::Count => Some(Value::Int(count)),
        AggFn::Sum => Some(Value::Int(sum)),
        AggFn::Min => Some(best.cloned().unwrap_or(Value::Sup)),
        AggFn::Max => Some(best.cloned().unwrap_or(Value::Inf)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn i(v: i64) -> Value {
        Value::Int(v)
    }

    #[test]
    fn dist_is_symmetric() {
        assert_eq!(arith(ArithOp::Dist, &i(1), &i(4)).unwrap(), Some(i(3)));
        assert_eq!(arith(ArithOp::Dist, &i(4), &i(1)).unwrap(), Some(i(3)));
    }

    #[test]
    fn term_order() {
        let (a, b) = (Value::sym("a"), Value::sym("b"));
        assert!(compare(CmpOp::Ne, &a, &b));
        assert!(compare(CmpOp::Lt, &a, &b));
        assert!(compare(CmpOp::Lt, &i(100), &a));
        assert!(compare(CmpOp::Ge, &i(2), &i(2)));
    }

    #[test]
    fn division() {
        assert_eq!(arith(ArithOp::Div, &i(7), &i(0)).unwrap(), None);
        assert_eq!(arith(ArithOp::Div, &i(-7), &i(2)).unwrap(), Some(i(-3)));
        assert_eq!(arith(ArithOp::Add, &Value::sym("a"), &i(2)).unwrap(), None);
        assert!(arith(ArithOp::Mul, &i(i64::MAX), &i(2)).is_err());
        assert!(arith(ArithOp::Div, &i(i64::MIN), &i(-1)).is_err());
    }

    #[test]
    fn aggregates() {
        let ts: Vec<Vec<Value>> = vec![vec![i(3), Value::sym("x")], vec![i(3), Value::sym("y")], vec![Value::sym("z")]];
        let it = || ts.iter().map(Vec::as_slice);
        assert_eq!(aggregate(AggFn::Sum, it()).unwrap(), Some(i(6)));
        assert_eq!(aggregate(AggFn::Count, it()).unwrap(), Some(i(3)));
        assert_eq!(aggregate(AggFn::Min, it()).unwrap(), Some(i(3)));
        assert_eq!(aggregate(AggFn::Max, it()).unwrap(), Some(Value::sym("z")));
        assert_eq!(aggregate(AggFn::Max, std::iter::empty()).unwrap(), Some(Value::Inf));
        assert_eq!(aggregate(AggFn::Min, std::iter::empty()).unwrap(), Some(Value::Sup));
        assert!(compare(CmpOp::Lt, &Value::Inf, &i(-5)) && compare(CmpOp::Gt, &Value::Sup, &Value::sym("z")));
        assert_eq!(aggregate(AggFn::Count, std::iter::empty()).unwrap(), Some(i(0)));
    }
}
