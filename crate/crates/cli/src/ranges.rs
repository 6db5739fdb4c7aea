//! `start:stop:step` ranges and comma lists.

use crate::UsageError;

fn number<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, UsageError> {
    s.trim().parse().map_err(|_| UsageError(format!("invalid {what} {s:?}")))
}

/// Inclusive float grid; the stop value is kept when it lies on the grid
/// up to rounding.
pub fn parse_f64_list(text: &str) -> Result<Vec<f64>, UsageError> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [single] => single.split(',').map(|s| number::<f64>(s, "number")).collect(),
        [start, stop, step] => {
            let (a, b, h) = (number::<f64>(start, "start")?, number::<f64>(stop, "stop")?, number::<f64>(step, "step")?);
            if !(h > 0.0 && a.is_finite() && b.is_finite() && b >= a) {
                return Err(UsageError(format!("invalid range {text:?}: need start <= stop and step > 0")));
            }
            let count = ((b - a) / h + 1e-9).floor() as usize + 1;
            if count > 1_000_000 {
                return Err(UsageError(format!("range {text:?} has too many points")));
            }
            Ok((0..count).map(|k| a + k as f64 * h).collect())
        }
        _ => Err(UsageError(format!("invalid range {text:?}, expected start:stop:step"))),
    }
}

pub fn parse_usize_list(text: &str) -> Result<Vec<usize>, UsageError> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [single] => single.split(',').map(|s| number::<usize>(s, "integer")).collect(),
        [start, stop, step] => {
            let (a, b, h) = (number::<usize>(start, "start")?, number::<usize>(stop, "stop")?, number::<usize>(step, "step")?);
            if h == 0 || b < a {
                return Err(UsageError(format!("invalid range {text:?}: need start <= stop and step > 0")));
            }
            Ok((a..=b).step_by(h).collect())
        }
        _ => Err(UsageError(format!("invalid range {text:?}, expected start:stop:step"))),
    }
}
