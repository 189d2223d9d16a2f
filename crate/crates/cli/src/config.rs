//! Flat `key = value` configuration merged with command-line flags, and its
//! validation into a typed plan before any work starts.

use std::collections::BTreeMap;
use std::fmt;

use gwtree::analytic::alpha;
use gwtree::spanning::DENSE_CAP;

/// Every recognised key. Flags carry the same names.
pub const KEYS: [&str; 14] = [
    "c", "lambda", "mu", "beta", "k", "kmax", "depth", "samples", "n", "reps", "seed", "tolerance", "out", "format",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub key: String,
    pub msg: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.key.is_empty() {
            write!(f, "invalid config: {}", self.msg)
        } else {
            write!(f, "invalid config: `{}`: {}", self.key, self.msg)
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError {
        key: key.to_owned(),
        msg: msg.into(),
    }
}

/// Parse `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(err("", format!("line {}: expected `key = value`, got {raw:?}", i + 1)));
        };
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(err(k, format!("unknown key on line {}", i + 1)));
        }
        if map.insert(k.to_owned(), v.to_owned()).is_some() {
            return Err(err(k, format!("repeated on line {}", i + 1)));
        }
    }
    Ok(map)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Plan {
    Params { c: Vec<f64> },
    Bounds { c: Vec<f64>, kmax: u64 },
    VerifyDomination { pairs: Vec<(f64, f64)>, beta: Option<f64>, kmax: u64 },
    Couple { lambda: f64, mu: f64, depth: u32, samples: u64, seed: u64 },
    Returns { c: Vec<f64>, k: u32, samples: u64, seed: u64 },
    EstimateF { c: Vec<f64>, k: u32, samples: u64, seed: u64 },
    EmpiricalF { c: Vec<f64>, n: usize, reps: u64, seed: u64 },
    Decay { c: Vec<f64>, k: u32, samples: u64, seed: u64 },
    Crosscheck { c: Vec<f64>, k: u32, samples: u64, n: usize, reps: u64, seed: u64, tolerance: f64 },
}

/// A validated run: what to do, where to write it, and the resolved
/// configuration (defaults filled in) that is embedded in the output.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub command: String,
    pub plan: Plan,
    pub out: Option<String>,
    pub format: Format,
    pub config: BTreeMap<String, String>,
}

/// Typed access to the merged key/value map. Every value read, including
/// defaults, is recorded for the output.
struct Reader {
    given: BTreeMap<String, String>,
    used: BTreeMap<String, String>,
}

impl Reader {
    fn raw(&mut self, key: &str, default: Option<&str>) -> Result<String, ConfigError> {
        let v = match (self.given.remove(key), default) {
            (Some(v), _) => v,
            (None, Some(d)) => d.to_owned(),
            (None, None) => return Err(err(key, "required")),
        };
        self.used.insert(key.to_owned(), v.clone());
        Ok(v)
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str, default: Option<&str>) -> Result<T, ConfigError> {
        let v = self.raw(key, default)?;
        v.parse().map_err(|_| err(key, format!("cannot parse {v:?}")))
    }

    fn list(&mut self, key: &str, default: Option<&str>) -> Result<Vec<f64>, ConfigError> {
        let v = self.raw(key, default)?;
        let xs = v
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| err(key, format!("cannot parse {s:?} as a number"))))
            .collect::<Result<Vec<_>, _>>()?;
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(err(key, "values must be finite"));
        }
        Ok(xs)
    }

    fn supercritical(&mut self, key: &str, default: Option<&str>) -> Result<Vec<f64>, ConfigError> {
        let c = self.list(key, default)?;
        if let Some(x) = c.iter().find(|&&x| x <= 1.0) {
            return Err(err(key, format!("must exceed 1, got {x}")));
        }
        Ok(c)
    }

    fn walk_k(&mut self) -> Result<u32, ConfigError> {
        let k: u32 = self.parse("k", Some("60"))?;
        if k < 20 || k % 2 != 0 {
            return Err(err("k", format!("must be even and at least 20, got {k}")));
        }
        Ok(k)
    }

    fn at_least(&mut self, key: &str, default: &str, min: u64) -> Result<u64, ConfigError> {
        let x: u64 = self.parse(key, Some(default))?;
        if x < min {
            return Err(err(key, format!("must be at least {min}, got {x}")));
        }
        Ok(x)
    }

    fn graph_n(&mut self) -> Result<usize, ConfigError> {
        let n: usize = self.parse("n", Some("1500"))?;
        if !(2..=DENSE_CAP).contains(&n) {
            return Err(err("n", format!("must lie in [2, {DENSE_CAP}], got {n}")));
        }
        Ok(n)
    }
}

/// Merge `file` under `flags` and validate for `command`. Keys the command
/// does not use are rejected.
pub fn resolve(
    command: &str,
    file: BTreeMap<String, String>,
    flags: BTreeMap<String, String>,
) -> Result<Resolved, ConfigError> {
    let mut given = file;
    given.extend(flags);
    let mut r = Reader {
        given,
        used: BTreeMap::new(),
    };
    let plan = match command {
        "params" => Plan::Params {
            c: r.supercritical("c", None)?,
        },
        "bounds" => Plan::Bounds {
            c: r.supercritical("c", None)?,
            kmax: r.at_least("kmax", "200", 1)?,
        },
        "verify-domination" => {
            let lambda = r.list("lambda", None)?;
            let mu = r.list("mu", None)?;
            if lambda.len() != mu.len() {
                return Err(err("mu", format!("{} values for {} lambda values", mu.len(), lambda.len())));
            }
            let pairs: Vec<(f64, f64)> = lambda.into_iter().zip(mu).collect();
            if let Some((l, m)) = pairs.iter().find(|(l, m)| !(*l > 0.0 && m > l)) {
                return Err(err("mu", format!("need mu > lambda > 0, got ({l}, {m})")));
            }
            let beta = match r.given.contains_key("beta") {
                true => {
                    let b: f64 = r.parse("beta", None)?;
                    if !(b >= 0.0 && b.is_finite()) {
                        return Err(err("beta", format!("must be finite and non-negative, got {b}")));
                    }
                    Some(b)
                }
                false => {
                    r.used.insert("beta".into(), "alpha".into());
                    None
                }
            };
            Plan::VerifyDomination {
                pairs,
                beta,
                kmax: r.at_least("kmax", "200", 1)?,
            }
        }
        "couple" => {
            let lambda: f64 = r.parse("lambda", None)?;
            let mu: f64 = r.parse("mu", None)?;
            if !(lambda > 1.0 && mu > lambda && mu.is_finite()) {
                return Err(err("mu", format!("need mu > lambda > 1, got ({lambda}, {mu})")));
            }
            // Cannot fail for mu > lambda > 1; checked so a bad pair never starts sampling.
            alpha(lambda, mu).map_err(|e| err("mu", e.to_string()))?;
            Plan::Couple {
                lambda,
                mu,
                depth: r.at_least("depth", "6", 1)? as u32,
                samples: r.at_least("samples", "100", 1)?,
                seed: r.parse("seed", Some("0"))?,
            }
        }
        "returns" | "estimate-f" | "decay" => {
            let c = r.supercritical("c", None)?;
            let k = r.walk_k()?;
            let samples = r.at_least("samples", "10000", 2)?;
            let seed = r.parse("seed", Some("0"))?;
            match command {
                "returns" => Plan::Returns { c, k, samples, seed },
                "estimate-f" => Plan::EstimateF { c, k, samples, seed },
                _ => Plan::Decay { c, k, samples, seed },
            }
        }
        "empirical-f" => {
            let c = r.supercritical("c", None)?;
            let n = r.graph_n()?;
            Plan::EmpiricalF {
                c,
                n,
                reps: r.at_least("reps", "20", 1)?,
                seed: r.parse("seed", Some("0"))?,
            }
        }
        "crosscheck" => {
            let c = r.supercritical("c", None)?;
            let k = r.walk_k()?;
            let samples = r.at_least("samples", "100000", 2)?;
            let n = r.graph_n()?;
            let reps = r.at_least("reps", "20", 1)?;
            let seed = r.parse("seed", Some("0"))?;
            let tolerance: f64 = r.parse("tolerance", Some("0.02"))?;
            if !(tolerance > 0.0 && tolerance.is_finite()) {
                return Err(err("tolerance", format!("must be positive, got {tolerance}")));
            }
            Plan::Crosscheck {
                c,
                k,
                samples,
                n,
                reps,
                seed,
                tolerance,
            }
        }
        other => return Err(err("", format!("unknown command {other:?}"))),
    };
    if let Some(c) = match &plan {
        Plan::EmpiricalF { c, n, .. } | Plan::Crosscheck { c, n, .. } => c.iter().find(|&&x| x >= *n as f64),
        _ => None,
    } {
        return Err(err("c", format!("must be below n, got {c}")));
    }
    let out = r.given.remove("out");
    if let Some(o) = &out {
        if o.is_empty() {
            return Err(err("out", "empty path"));
        }
        r.used.insert("out".into(), o.clone());
    }
    let format = match r.raw("format", Some("json"))?.as_str() {
        "json" => Format::Json,
        "csv" => Format::Csv,
        f => return Err(err("format", format!("expected json or csv, got {f:?}"))),
    };
    if let Some(k) = r.given.keys().next() {
        return Err(err(k, format!("not used by `{command}`")));
    }
    Ok(Resolved {
        command: command.to_owned(),
        plan,
        out,
        format,
        config: r.used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn flags_override_file() {
        let file = parse_config_text("# grid\nc = 2, 3\nformat = csv\n").unwrap();
        let r = resolve("params", file.clone(), m(&[("c", "5")])).unwrap();
        assert_eq!(r.plan, Plan::Params { c: vec![5.0] });
        assert_eq!(r.format, Format::Csv);
        let r = resolve("params", file.clone(), BTreeMap::new()).unwrap();
        assert_eq!(r.plan, Plan::Params { c: vec![2.0, 3.0] });
        assert!(resolve("params", file, m(&[("seed", "4")])).is_err_and(|e| e.key == "seed"));
    }

    #[test]
    fn field_level_errors() {
        let e = resolve("returns", BTreeMap::new(), m(&[("c", "2"), ("k", "21")])).unwrap_err();
        assert_eq!(e.key, "k");
        let e = resolve("bounds", BTreeMap::new(), m(&[("c", "0.5")])).unwrap_err();
        assert_eq!(e.key, "c");
        let e = resolve("empirical-f", BTreeMap::new(), m(&[("c", "3"), ("n", "5000")])).unwrap_err();
        assert_eq!(e.key, "n");
        let e = resolve("params", BTreeMap::new(), m(&[("c", "2"), ("format", "xml")])).unwrap_err();
        assert_eq!(e.key, "format");
        assert!(parse_config_text("bogus = 1").is_err());
        assert!(parse_config_text("c 2").is_err());
        assert!(parse_config_text("c = 2\nc = 3").is_err());
    }

    #[test]
    fn defaults_are_recorded() {
        let r = resolve("verify-domination", BTreeMap::new(), m(&[("lambda", "1"), ("mu", "2")])).unwrap();
        assert_eq!(r.config["beta"], "alpha");
        assert_eq!(r.config["kmax"], "200");
        assert_eq!(r.config["format"], "json");
    }
}
