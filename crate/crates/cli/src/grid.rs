//! Parameter grids: `a:b:n` (linear, inclusive), `a:b:log:n` (geometric),
//! a comma list, or a single number.

pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let s = s.trim();
    let bad = |what: &str| format!("invalid grid `{s}`: {what}");
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad(&format!("`{t}` is not a number")));
    let parts: Vec<&str> = s.split(':').collect();
    let values = match parts.as_slice() {
        [single] => single.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
        [a, b, n] => {
            let (a, b, n) = (num(a)?, num(b)?, count(n).map_err(|e| bad(&e))?);
            if n == 1 {
                vec![a]
            } else {
                (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
            }
        }
        [a, b, "log", n] => {
            let (a, b, n) = (num(a)?, num(b)?, count(n).map_err(|e| bad(&e))?);
            if !(a > 0.0 && b > 0.0) {
                return Err(bad("log grids need positive end points"));
            }
            if n == 1 {
                vec![a]
            } else {
                let (la, lb) = (a.ln(), b.ln());
                (0..n).map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp()).collect()
            }
        }
        _ => return Err(bad("expected a:b:n, a:b:log:n or a comma list")),
    };
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(bad("values must be finite"));
    }
    // Generated points are snapped to 12 significant digits so that e.g.
    // 1e-5 is not reported as 1.0000000000000002e-5.
    if parts.len() > 1 {
        return Ok(values.into_iter().map(snap).collect());
    }
    Ok(values)
}

fn snap(v: f64) -> f64 {
    format!("{v:.11e}").parse().expect("formatted float parses")
}

fn count(t: &str) -> Result<usize, String> {
    match t.trim().parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(format!("point count `{t}` must be a positive integer")),
    }
}

/// Grid of positive integers; values are rounded to the nearest integer.
pub fn parse_int_grid(s: &str) -> Result<Vec<usize>, String> {
    parse_grid(s)?
        .into_iter()
        .map(|v| {
            let r = v.round();
            if r >= 1.0 {
                Ok(r as usize)
            } else {
                Err(format!("invalid grid `{s}`: {v} is not a positive integer"))
            }
        })
        .collect()
}
