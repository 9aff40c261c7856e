//! Single-line text form of a [`DistributionSpec`].
//!
//! ```text
//! spec     := gaussian | uniform | mixture | corrupt
//! gaussian := "gaussian" "d=" INT "mean=" LIST ( "var=" LIST | "cov=" LIST )
//! uniform  := "uniform" "d=" INT "low=" LIST "high=" LIST
//! mixture  := "mixture" "k=" INT "w=" LIST ( "(" spec ")" ){k}
//! corrupt  := "corrupt" "rate=" NUM "base=(" spec ")" "noise=(" spec ")"
//! LIST     := NUM ( "," NUM )*
//! ```
//!
//! `var=` lists the diagonal of a diagonal covariance; `cov=` is the full
//! matrix in row-major order. Numbers are written in shortest round-trip
//! form, so `parse(format(s)) == s` exactly.

use std::fmt;
use std::str::FromStr;

use super::{DistError, DistributionSpec, GaussianParams, MixtureParams, Result};

fn write_list(f: &mut fmt::Formatter<'_>, xs: &[f64]) -> fmt::Result {
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{x:?}")?;
    }
    Ok(())
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistributionSpec::Gaussian(g) => {
                write!(f, "gaussian d={} mean=", g.dim())?;
                write_list(f, g.mean())?;
                if g.is_diagonal() {
                    f.write_str(" var=")?;
                    write_list(f, &g.variances())
                } else {
                    f.write_str(" cov=")?;
                    write_list(f, g.covariance())
                }
            }
            DistributionSpec::Uniform(b) => {
                write!(f, "uniform d={} low=", b.low().len())?;
                write_list(f, b.low())?;
                f.write_str(" high=")?;
                write_list(f, b.high())
            }
            DistributionSpec::Mixture(m) => {
                write!(f, "mixture k={} w=", m.k())?;
                write_list(f, m.weights())?;
                for c in m.components() {
                    write!(f, " ({c})")?;
                }
                Ok(())
            }
            DistributionSpec::Corrupted(c) => {
                write!(f, "corrupt rate={:?} base=({}) noise=({})", c.rate(), c.base(), c.noise())
            }
        }
    }
}

impl FromStr for DistributionSpec {
    type Err = DistError;

    fn from_str(s: &str) -> Result<Self> {
        parse_spec(s)
    }
}

pub fn parse_spec(s: &str) -> Result<DistributionSpec> {
    let mut p = Parser { s, pos: 0 };
    let spec = p.spec()?;
    p.skip_ws();
    if p.pos != s.len() {
        return Err(p.err("trailing input"));
    }
    Ok(spec)
}

struct Parser<'a> {
    s: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> DistError {
        DistError::Parse { pos: self.pos, msg: msg.to_string() }
    }

    fn rest(&self) -> &'a str {
        &self.s[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.s.len() - trimmed.len();
    }

    fn eat(&mut self, lit: &str) -> Result<()> {
        self.skip_ws();
        if self.rest().starts_with(lit) {
            self.pos += lit.len();
            Ok(())
        } else {
            Err(self.err(&format!("expected `{lit}`")))
        }
    }

    fn token(&mut self) -> Result<&'a str> {
        self.skip_ws();
        let rest = self.rest();
        let end = rest
            .find(|c: char| c.is_whitespace() || c == '(' || c == ')')
            .unwrap_or(rest.len());
        if end == 0 {
            return Err(self.err("expected a value"));
        }
        self.pos += end;
        Ok(&rest[..end])
    }

    fn number(&mut self, key: &str) -> Result<f64> {
        self.eat(key)?;
        self.eat("=")?;
        let start = self.pos;
        let tok = self.token()?;
        tok.parse::<f64>()
            .map_err(|_| DistError::Parse { pos: start, msg: format!("bad number `{tok}`") })
    }

    fn count(&mut self, key: &str) -> Result<usize> {
        self.eat(key)?;
        self.eat("=")?;
        let start = self.pos;
        let tok = self.token()?;
        tok.parse::<usize>()
            .map_err(|_| DistError::Parse { pos: start, msg: format!("bad count `{tok}`") })
    }

    fn list(&mut self, key: &str, len: usize) -> Result<Vec<f64>> {
        self.eat(key)?;
        self.eat("=")?;
        let start = self.pos;
        let tok = self.token()?;
        let xs = tok
            .split(',')
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|_| DistError::Parse { pos: start, msg: format!("bad list `{tok}`") })?;
        if xs.len() != len {
            return Err(DistError::Parse {
                pos: start,
                msg: format!("`{key}` has {} entries, expected {len}", xs.len()),
            });
        }
        Ok(xs)
    }

    fn nested(&mut self) -> Result<DistributionSpec> {
        self.eat("(")?;
        let spec = self.spec()?;
        self.eat(")")?;
        Ok(spec)
    }

    fn spec(&mut self) -> Result<DistributionSpec> {
        let start = self.pos;
        let kind = self.token()?;
        let at = |e: DistError| match e {
            DistError::Parse { .. } => e,
            other => DistError::Parse { pos: start, msg: other.to_string() },
        };
        match kind {
            "gaussian" => {
                let d = self.count("d")?;
                if d == 0 {
                    return Err(self.err("d must be >= 1"));
                }
                let mean = self.list("mean", d)?;
                self.skip_ws();
                if self.rest().starts_with("var") {
                    let var = self.list("var", d)?;
                    GaussianParams::diagonal(mean, var).map(DistributionSpec::Gaussian).map_err(at)
                } else {
                    let cov = self.list("cov", d * d)?;
                    GaussianParams::new(mean, cov).map(DistributionSpec::Gaussian).map_err(at)
                }
            }
            "uniform" => {
                let d = self.count("d")?;
                if d == 0 {
                    return Err(self.err("d must be >= 1"));
                }
                let low = self.list("low", d)?;
                let high = self.list("high", d)?;
                DistributionSpec::uniform(low, high).map_err(at)
            }
            "mixture" => {
                let k = self.count("k")?;
                if k == 0 {
                    return Err(self.err("k must be >= 1"));
                }
                let w = self.list("w", k)?;
                let comps = (0..k).map(|_| self.nested()).collect::<Result<Vec<_>>>()?;
                MixtureParams::new(w, comps).map(DistributionSpec::Mixture).map_err(at)
            }
            "corrupt" => {
                let rate = self.number("rate")?;
                self.eat("base")?;
                self.eat("=")?;
                let base = self.nested()?;
                self.eat("noise")?;
                self.eat("=")?;
                let noise = self.nested()?;
                DistributionSpec::corrupted(base, noise, rate).map_err(at)
            }
            other => Err(DistError::Parse { pos: start, msg: format!("unknown kind `{other}`") }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        let cases = [
            "gaussian d=1 mean=0.0 var=1.0",
            "gaussian d=2 mean=1.5,-2.0 var=0.25,4.0",
            "gaussian d=2 mean=0.0,0.0 cov=2.0,0.5,0.5,1.0",
            "uniform d=1 low=-50.0 high=50.0",
            "mixture k=2 w=0.3,0.7 (gaussian d=1 mean=-8.0 var=1.0) (gaussian d=1 mean=8.0 var=1.0)",
            "corrupt rate=0.05 base=(mixture k=2 w=0.5,0.5 (gaussian d=1 mean=-8.0 var=1.0) \
             (gaussian d=1 mean=8.0 var=1.0)) noise=(uniform d=1 low=-50.0 high=50.0)",
        ];
        for c in cases {
            let spec: DistributionSpec = c.parse().unwrap();
            assert_eq!(spec.to_string(), c);
            assert_eq!(spec.to_string().parse::<DistributionSpec>().unwrap(), spec);
        }
    }

    #[test]
    fn awkward_numbers_round_trip_exactly() {
        let g = DistributionSpec::gaussian_1d(0.1 + 0.2, 1e-300).unwrap();
        let back: DistributionSpec = g.to_string().parse().unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn lenient_spacing() {
        let a: DistributionSpec = "  gaussian d=1   mean=1 var=2 ".parse().unwrap();
        assert_eq!(a, DistributionSpec::gaussian_1d(1.0, 2.0).unwrap());
        let b: DistributionSpec = "mixture k=1 w=1 ( gaussian d=1 mean=0 var=1 )".parse().unwrap();
        assert_eq!(b.dim(), 1);
    }

    #[test]
    fn errors_carry_positions() {
        for bad in [
            "",
            "gauss d=1 mean=0 var=1",
            "gaussian d=1 mean=0,1 var=1",
            "gaussian d=1 mean=0 var=-1",
            "mixture k=2 w=0.5,0.5 (gaussian d=1 mean=0 var=1)",
            "gaussian d=1 mean=0 var=1 extra",
            "corrupt rate=2 base=(uniform d=1 low=0 high=1) noise=(uniform d=1 low=0 high=1)",
        ] {
            match bad.parse::<DistributionSpec>() {
                Err(DistError::Parse { .. }) => {}
                other => panic!("`{bad}` gave {other:?}"),
            }
        }
    }
}
