//! JSON rendering of reports: extended reals as `"inf"`/`"-inf"` and
//! numbers rounded to 12 significant digits.

use serde::Serializer;
use serde_json::Value;

/// Significant digits kept in rendered numbers.
pub const SIG_DIGITS: usize = 12;
/// Magnitudes below this print as zero.
pub const ZERO_CUTOFF: f64 = 1e-12;

/// Serializes an extended real, spelling infinities as strings.
pub fn ext_real<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if *x == f64::INFINITY {
        s.serialize_str("inf")
    } else if *x == f64::NEG_INFINITY {
        s.serialize_str("-inf")
    } else {
        s.serialize_f64(*x)
    }
}

/// An extended real as a JSON value.
pub fn ext_value(x: f64) -> Value {
    if x == f64::INFINITY {
        Value::from("inf")
    } else if x == f64::NEG_INFINITY {
        Value::from("-inf")
    } else {
        serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
    }
}

pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    if x.abs() < ZERO_CUTOFF {
        return 0.0;
    }
    format!("{:.*e}", SIG_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Rounds every floating-point number in place.
pub fn round_numbers(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().unwrap());
            *v = serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(round_numbers),
        Value::Object(map) => map.values_mut().for_each(round_numbers),
        _ => {}
    }
}

/// Pretty JSON with rounded numbers.
pub fn render(v: &Value) -> String {
    let mut v = v.clone();
    round_numbers(&mut v);
    serde_json::to_string_pretty(&v).expect("reports serialize")
}
