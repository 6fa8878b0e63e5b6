//! Frequency mini-language: `ialpha:<x|sqrt2>`, `sqrti`, `power:<a>:<b>`,
//! `random:seed=<u64>`, `constant:<x>`, `file:<path>`.

use std::path::PathBuf;

use skewlab_core::{ExtReal, FrequencyKind};

fn real(s: &str) -> Result<ExtReal, String> {
    match s {
        "sqrt2" => Ok(ExtReal::sqrt_u64(2)),
        _ => ExtReal::parse_decimal(s).ok_or_else(|| format!("not a number: {s:?}")),
    }
}

pub fn parse(spec: &str) -> Result<FrequencyKind, String> {
    let (head, rest) = spec.split_once(':').unwrap_or((spec, ""));
    match head {
        "ialpha" => Ok(FrequencyKind::IAlpha { alpha: real(rest)? }),
        "sqrti" if rest.is_empty() => Ok(FrequencyKind::SqrtI),
        "power" => {
            let (a, b) = rest.split_once(':').ok_or("power needs <alpha>:<beta>")?;
            let parse = |x: &str| x.parse::<f64>().map_err(|_| format!("not a number: {x:?}"));
            Ok(FrequencyKind::Power {
                alpha: parse(a)?,
                beta: parse(b)?,
            })
        }
        "random" => {
            let seed = rest.strip_prefix("seed=").unwrap_or(rest);
            let seed = seed.parse().map_err(|_| format!("bad seed {seed:?}"))?;
            Ok(FrequencyKind::Random { seed })
        }
        "constant" => Ok(FrequencyKind::Constant { c: real(rest)? }),
        "file" if !rest.is_empty() => Ok(FrequencyKind::File {
            path: PathBuf::from(rest),
        }),
        _ => Err(format!("unknown frequency spec {spec:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forms() {
        assert_eq!(parse("ialpha:sqrt2").unwrap(), FrequencyKind::sqrt2_rotation());
        assert_eq!(parse("sqrti").unwrap(), FrequencyKind::SqrtI);
        assert_eq!(parse("random:seed=4").unwrap(), FrequencyKind::Random { seed: 4 });
        assert_eq!(
            parse("power:1.5:0.5").unwrap(),
            FrequencyKind::Power { alpha: 1.5, beta: 0.5 }
        );
        assert!(matches!(parse("constant:0").unwrap(), FrequencyKind::Constant { .. }));
        assert!(parse("ialpha:x").is_err());
        assert!(parse("bogus").is_err());
        assert!(parse("sqrti:3").is_err());
    }
}
