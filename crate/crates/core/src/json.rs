//! Conversion between flat row-major buffers and nested JSON arrays.

use serde_json::Value;

use crate::error::{Error, Result};

pub(crate) fn nest(data: &[f64], dims: &[usize]) -> Value {
    fn go(data: &[f64], dims: &[usize]) -> Value {
        match dims.split_first() {
            None => Value::from(data[0]),
            Some((&n, rest)) => {
                let stride: usize = rest.iter().product();
                Value::Array((0..n).map(|i| go(&data[i * stride..(i + 1) * stride], rest)).collect())
            }
        }
    }
    go(data, dims)
}

/// Flattens `value` into a buffer of shape `dims`. A bare number is accepted
/// where a length-one innermost array is expected.
pub(crate) fn flatten(value: &Value, dims: &[usize], field: &str) -> Result<Vec<f64>> {
    fn go(value: &Value, dims: &[usize], path: &mut String, out: &mut Vec<f64>) -> Result<()> {
        match dims.split_first() {
            None => match value.as_f64() {
                Some(x) => {
                    out.push(x);
                    Ok(())
                }
                None => Err(Error::json(format!("{path}: expected a number, found {value}"))),
            },
            Some((&n, rest)) => {
                if rest.is_empty() && n == 1 {
                    if let Some(x) = value.as_f64() {
                        out.push(x);
                        return Ok(());
                    }
                }
                let arr = value
                    .as_array()
                    .ok_or_else(|| Error::json(format!("{path}: expected an array of length {n}")))?;
                if arr.len() != n {
                    return Err(Error::json(format!(
                        "{path}: expected an array of length {n}, found length {}",
                        arr.len()
                    )));
                }
                for (i, v) in arr.iter().enumerate() {
                    let len = path.len();
                    path.push_str(&format!("[{i}]"));
                    go(v, rest, path, out)?;
                    path.truncate(len);
                }
                Ok(())
            }
        }
    }
    let mut out = Vec::with_capacity(dims.iter().product());
    let mut path = field.to_string();
    go(value, dims, &mut path, &mut out)?;
    Ok(out)
}

/// Infers the shape of a rectangular nested array of numbers.
pub(crate) fn infer_dims(value: &Value) -> Vec<usize> {
    let mut dims = Vec::new();
    let mut cur = value;
    while let Some(arr) = cur.as_array() {
        dims.push(arr.len());
        match arr.first() {
            Some(first) => cur = first,
            None => break,
        }
    }
    dims
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn nest_and_flatten() {
        let data = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let v = nest(&data, &[2, 3]);
        assert_eq!(v, json!([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]));
        assert_eq!(flatten(&v, &[2, 3], "x").unwrap(), data.to_vec());
        assert_eq!(infer_dims(&v), vec![2, 3]);
    }

    #[test]
    fn scalar_leaves_accepted() {
        let v = json!([[1, 0], [0, 1]]);
        assert_eq!(flatten(&v, &[2, 2, 1], "entries").unwrap(), vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn diagnostics_name_the_field() {
        let v = json!([[1, 0], [0]]);
        let err = flatten(&v, &[2, 2], "entries").unwrap_err().to_string();
        assert!(err.contains("entries[1]"), "{err}");
    }
}
