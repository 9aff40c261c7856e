//! Axis-aligned parameter grid and the canonical integer keys of its points.
//!
//! Means live on `-B + i·mean_step` per coordinate and log-variances on
//! `logvar_min + j·logvar_step`; covariances are diagonal. A mixture key is a
//! common denominator with `(weight, component)` entries in canonical form:
//! zero weights dropped, equal components merged, entries sorted, and the
//! weights and denominator reduced by their gcd. Two logically equal mixtures
//! therefore encode to the identical key.

use std::fmt;
use std::str::FromStr;

use super::{DistError, DistributionSpec, GaussianParams, Result};

const TIE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterGrid {
    half_width: f64,
    mean_step: f64,
    logvar_min: f64,
    logvar_max: f64,
    logvar_step: f64,
    dim: usize,
    mean_count: u32,
    logvar_count: u32,
}

impl ParameterGrid {
    pub fn new(
        half_width: f64,
        mean_step: f64,
        logvar_min: f64,
        logvar_max: f64,
        logvar_step: f64,
        dim: usize,
    ) -> Result<Self> {
        let all_finite = [half_width, mean_step, logvar_min, logvar_max, logvar_step]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite || half_width <= 0.0 || mean_step <= 0.0 || logvar_step <= 0.0 {
            return Err(DistError::Invalid("grid widths and steps must be finite and > 0".into()));
        }
        if mean_step > 2.0 * half_width {
            return Err(DistError::Invalid("mean_step exceeds 2B".into()));
        }
        if logvar_min >= logvar_max {
            return Err(DistError::Invalid("logvar_min must be < logvar_max".into()));
        }
        if dim == 0 {
            return Err(DistError::Invalid("grid dimension must be >= 1".into()));
        }
        let count = |span: f64, step: f64| -> Result<u32> {
            let n = (span / step + TIE_EPS).floor() + 1.0;
            if n > f64::from(u32::MAX) {
                return Err(DistError::Invalid("grid axis is too fine".into()));
            }
            Ok(n as u32)
        };
        let mean_count = count(2.0 * half_width, mean_step)?;
        let logvar_count = count(logvar_max - logvar_min, logvar_step)?;
        Ok(ParameterGrid {
            half_width,
            mean_step,
            logvar_min,
            logvar_max,
            logvar_step,
            dim,
            mean_count,
            logvar_count,
        })
    }

    /// Grid whose adjacent points are within `alpha_grid` in TV to first
    /// order: `mean_step = alpha_grid·σ_min` and `logvar_step = alpha_grid`.
    pub fn for_accuracy(
        half_width: f64,
        logvar_min: f64,
        logvar_max: f64,
        alpha_grid: f64,
        dim: usize,
    ) -> Result<Self> {
        let sigma_min = (0.5 * logvar_min).exp();
        Self::new(half_width, alpha_grid * sigma_min, logvar_min, logvar_max, alpha_grid, dim)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }
    pub fn mean_step(&self) -> f64 {
        self.mean_step
    }
    pub fn logvar_min(&self) -> f64 {
        self.logvar_min
    }
    pub fn logvar_max(&self) -> f64 {
        self.logvar_max
    }
    pub fn logvar_step(&self) -> f64 {
        self.logvar_step
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn mean_count(&self) -> u32 {
        self.mean_count
    }
    pub fn logvar_count(&self) -> u32 {
        self.logvar_count
    }

    /// Number of Gaussian grid points, `(mean_count·logvar_count)^d`.
    pub fn cardinality(&self) -> f64 {
        (f64::from(self.mean_count) * f64::from(self.logvar_count)).powi(self.dim as i32)
    }

    pub fn mean_value(&self, i: u32) -> f64 {
        -self.half_width + f64::from(i) * self.mean_step
    }

    pub fn logvar_value(&self, j: u32) -> f64 {
        self.logvar_min + f64::from(j) * self.logvar_step
    }

    /// The sentinel key: index 0 on every axis.
    pub fn origin_key(&self) -> CandidateKey {
        CandidateKey::Gaussian { mean: vec![0; self.dim], logvar: vec![0; self.dim] }
    }

    /// Nearest grid index; exact ties go to the point of larger magnitude.
    fn snap_axis(value: f64, origin: f64, step: f64, count: u32) -> u32 {
        let t = (value - origin) / step;
        let max = f64::from(count - 1);
        if !(t > 0.0) {
            return 0;
        }
        if t >= max {
            return count - 1;
        }
        let lo = t.floor();
        let frac = t - lo;
        let idx = if (frac - 0.5).abs() < TIE_EPS {
            let a = (origin + lo * step).abs();
            let b = (origin + (lo + 1.0) * step).abs();
            if a > b {
                lo
            } else {
                lo + 1.0
            }
        } else {
            t.round()
        };
        idx.min(max) as u32
    }

    /// Nearest grid Gaussian. Out-of-range means and variances are clamped;
    /// off-diagonal covariance is ignored.
    pub fn snap(&self, params: &GaussianParams) -> Result<CandidateKey> {
        if params.dim() != self.dim {
            return Err(DistError::DimensionMismatch { expected: self.dim, got: params.dim() });
        }
        Ok(self.snap_values(params.mean(), &params.variances()))
    }

    pub fn snap_values(&self, mean: &[f64], variances: &[f64]) -> CandidateKey {
        let mean = mean
            .iter()
            .map(|m| Self::snap_axis(*m, -self.half_width, self.mean_step, self.mean_count))
            .collect();
        let logvar = variances
            .iter()
            .map(|v| Self::snap_axis(v.ln(), self.logvar_min, self.logvar_step, self.logvar_count))
            .collect();
        CandidateKey::Gaussian { mean, logvar }
    }

    /// Snaps a Gaussian or a (possibly nested) mixture of Gaussians. Mixture
    /// weights are rounded to multiples of `1/weight_denominator` by largest
    /// remainder, so they still sum to one.
    pub fn snap_spec(&self, spec: &DistributionSpec, weight_denominator: u32) -> Result<CandidateKey> {
        match spec {
            DistributionSpec::Gaussian(g) => self.snap(g),
            DistributionSpec::Mixture(m) => {
                if weight_denominator == 0 {
                    return Err(DistError::Invalid("weight denominator must be >= 1".into()));
                }
                let units = largest_remainder(m.weights(), weight_denominator);
                let entries = units
                    .into_iter()
                    .zip(m.components())
                    .map(|(w, c)| Ok((w, self.snap_spec(c, weight_denominator)?)))
                    .collect::<Result<Vec<_>>>()?;
                CandidateKey::mixture(weight_denominator, entries)
            }
            other => Err(DistError::Invalid(format!(
                "only gaussians and mixtures of gaussians have grid keys, got `{other}`"
            ))),
        }
    }

    pub fn contains(&self, key: &CandidateKey) -> bool {
        match key {
            CandidateKey::Gaussian { mean, logvar } => {
                mean.len() == self.dim
                    && logvar.len() == self.dim
                    && mean.iter().all(|i| *i < self.mean_count)
                    && logvar.iter().all(|j| *j < self.logvar_count)
            }
            CandidateKey::Mixture { entries, .. } => entries.iter().all(|e| self.contains(&e.component)),
        }
    }

    pub fn key_to_spec(&self, key: &CandidateKey) -> Result<DistributionSpec> {
        match key {
            CandidateKey::Gaussian { mean, logvar } => {
                if !self.contains(key) {
                    return Err(DistError::OutOfGrid(key.to_string()));
                }
                let mean = mean.iter().map(|i| self.mean_value(*i)).collect();
                let var = logvar.iter().map(|j| self.logvar_value(*j).exp()).collect();
                Ok(DistributionSpec::Gaussian(GaussianParams::diagonal(mean, var)?))
            }
            CandidateKey::Mixture { denominator, entries } => {
                let d = f64::from(*denominator);
                let weights = entries.iter().map(|e| f64::from(e.weight) / d).collect();
                let comps = entries
                    .iter()
                    .map(|e| self.key_to_spec(&e.component))
                    .collect::<Result<Vec<_>>>()?;
                DistributionSpec::mixture(weights, comps)
            }
        }
    }

    /// All Gaussian keys within `radius` index steps of `center` in ℓ∞,
    /// clipped to the grid, in ascending key order.
    pub fn neighborhood(&self, center: &CandidateKey, radius: u32) -> Result<Vec<CandidateKey>> {
        let (mean, logvar) = match center {
            CandidateKey::Gaussian { mean, logvar } if self.contains(center) => (mean, logvar),
            _ => return Err(DistError::OutOfGrid(center.to_string())),
        };
        let axes: Vec<(u32, u32)> = mean
            .iter()
            .map(|&i| (i, self.mean_count))
            .chain(logvar.iter().map(|&j| (j, self.logvar_count)))
            .map(|(c, n)| (c.saturating_sub(radius), (c + radius).min(n - 1)))
            .collect();
        let mut out = Vec::new();
        let mut cur: Vec<u32> = axes.iter().map(|a| a.0).collect();
        'outer: loop {
            let (m, v) = cur.split_at(self.dim);
            out.push(CandidateKey::Gaussian { mean: m.to_vec(), logvar: v.to_vec() });
            for ax in (0..cur.len()).rev() {
                if cur[ax] < axes[ax].1 {
                    cur[ax] += 1;
                    for later in ax + 1..cur.len() {
                        cur[later] = axes[later].0;
                    }
                    continue 'outer;
                }
            }
            break;
        }
        out.sort();
        Ok(out)
    }
}

/// Integer units summing to `n`: floors of `w·n` plus one extra unit for the
/// largest remainders (earlier index first on ties).
pub(crate) fn largest_remainder(weights: &[f64], n: u32) -> Vec<u32> {
    let scaled: Vec<f64> = weights.iter().map(|w| w * f64::from(n)).collect();
    let mut units: Vec<u32> = scaled.iter().map(|s| (s + TIE_EPS).floor().max(0.0) as u32).collect();
    let assigned: u32 = units.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = scaled[a] - f64::from(units[a]);
        let rb = scaled[b] - f64::from(units[b]);
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    if assigned < n {
        for &i in order.iter().cycle().take((n - assigned) as usize) {
            units[i] += 1;
        }
    } else if assigned > n {
        let mut excess = assigned - n;
        for &i in order.iter().rev() {
            while excess > 0 && units[i] > 0 {
                units[i] -= 1;
                excess -= 1;
            }
        }
    }
    units
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MixtureEntry {
    pub component: CandidateKey,
    pub weight: u32,
}

/// Canonical identity of a grid distribution.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CandidateKey {
    Gaussian { mean: Vec<u32>, logvar: Vec<u32> },
    Mixture { denominator: u32, entries: Vec<MixtureEntry> },
}

impl CandidateKey {
    /// Builds a canonical mixture key from `(weight, component)` pairs whose
    /// weights sum to `denominator`.
    pub fn mixture(denominator: u32, entries: Vec<(u32, CandidateKey)>) -> Result<Self> {
        let total: u64 = entries.iter().map(|(w, _)| u64::from(*w)).sum();
        if denominator == 0 || total != u64::from(denominator) {
            return Err(DistError::Invalid(format!(
                "mixture key weights sum to {total}, denominator is {denominator}"
            )));
        }
        let mut merged: Vec<MixtureEntry> = entries
            .into_iter()
            .filter(|(w, _)| *w > 0)
            .map(|(weight, component)| MixtureEntry { component, weight })
            .collect();
        merged.sort();
        let mut out: Vec<MixtureEntry> = Vec::with_capacity(merged.len());
        for e in merged {
            match out.last_mut() {
                Some(last) if last.component == e.component => last.weight += e.weight,
                _ => out.push(e),
            }
        }
        out.sort();
        let g = out.iter().fold(denominator, |g, e| gcd(g, e.weight));
        for e in &mut out {
            e.weight /= g;
        }
        Ok(CandidateKey::Mixture { denominator: denominator / g, entries: out })
    }

    /// Re-applies canonicalization; the identity on canonical keys.
    pub fn canonical(&self) -> Self {
        match self {
            CandidateKey::Gaussian { .. } => self.clone(),
            CandidateKey::Mixture { denominator, entries } => CandidateKey::mixture(
                *denominator,
                entries.iter().map(|e| (e.weight, e.component.canonical())).collect(),
            )
            .expect("a stored mixture key is consistent"),
        }
    }

    pub fn is_mixture(&self) -> bool {
        matches!(self, CandidateKey::Mixture { .. })
    }
}

fn write_indices(f: &mut fmt::Formatter<'_>, xs: &[u32]) -> fmt::Result {
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{x}")?;
    }
    Ok(())
}

/// `G(m=3,4;v=1,0)` or `M(4;1*G(..),3*G(..))`.
impl fmt::Display for CandidateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CandidateKey::Gaussian { mean, logvar } => {
                f.write_str("G(m=")?;
                write_indices(f, mean)?;
                f.write_str(";v=")?;
                write_indices(f, logvar)?;
                f.write_str(")")
            }
            CandidateKey::Mixture { denominator, entries } => {
                write!(f, "M({denominator};")?;
                for (i, e) in entries.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{}*{}", e.weight, e.component)?;
                }
                f.write_str(")")
            }
        }
    }
}

impl FromStr for CandidateKey {
    type Err = DistError;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = KeyParser { s: s.trim(), pos: 0 };
        let key = p.key()?;
        if p.pos != p.s.len() {
            return Err(p.err("trailing input"));
        }
        Ok(key)
    }
}

struct KeyParser<'a> {
    s: &'a str,
    pos: usize,
}

impl KeyParser<'_> {
    fn err(&self, msg: &str) -> DistError {
        DistError::Parse { pos: self.pos, msg: msg.to_string() }
    }

    fn eat(&mut self, lit: &str) -> Result<()> {
        if self.s[self.pos..].starts_with(lit) {
            self.pos += lit.len();
            Ok(())
        } else {
            Err(self.err(&format!("expected `{lit}`")))
        }
    }

    fn int(&mut self) -> Result<u32> {
        let rest = &self.s[self.pos..];
        let end = rest.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len());
        let v = rest[..end].parse::<u32>().map_err(|_| self.err("expected an integer"))?;
        self.pos += end;
        Ok(v)
    }

    fn ints(&mut self) -> Result<Vec<u32>> {
        let mut out = vec![self.int()?];
        while self.eat(",").is_ok() {
            out.push(self.int()?);
        }
        Ok(out)
    }

    fn key(&mut self) -> Result<CandidateKey> {
        if self.eat("G(m=").is_ok() {
            let mean = self.ints()?;
            self.eat(";v=")?;
            let logvar = self.ints()?;
            self.eat(")")?;
            if mean.len() != logvar.len() {
                return Err(self.err("mean and log-variance index counts differ"));
            }
            return Ok(CandidateKey::Gaussian { mean, logvar });
        }
        self.eat("M(")?;
        let denominator = self.int()?;
        self.eat(";")?;
        let mut entries = Vec::new();
        loop {
            let w = self.int()?;
            self.eat("*")?;
            entries.push((w, self.key()?));
            if self.eat(",").is_err() {
                break;
            }
        }
        self.eat(")")?;
        let key = CandidateKey::mixture(denominator, entries)?;
        Ok(key)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(b: f64, step: f64) -> ParameterGrid {
        ParameterGrid::new(b, step, -1.0, 1.0, 0.5, 1).unwrap()
    }

    fn g(m: u32, v: u32) -> CandidateKey {
        CandidateKey::Gaussian { mean: vec![m], logvar: vec![v] }
    }

    #[test]
    fn counts() {
        let gr = grid(2.0, 0.5);
        assert_eq!(gr.mean_count(), 9);
        assert_eq!(gr.logvar_count(), 5);
        assert_eq!(gr.cardinality(), 45.0);
        let fine = ParameterGrid::new(4.0, 0.1, -1.0, 1.0, 0.2, 1).unwrap();
        assert_eq!(fine.mean_count(), 81);
        assert_eq!(fine.logvar_count(), 11);
    }

    #[test]
    fn snapping() {
        let gr = grid(2.0, 0.5);
        let on_point = GaussianParams::univariate(0.5, 1.0).unwrap();
        assert_eq!(gr.snap(&on_point).unwrap(), g(5, 2));
        let near = GaussianParams::univariate(0.26, 1.0).unwrap();
        assert_eq!(gr.mean_value(match gr.snap(&near).unwrap() {
            CandidateKey::Gaussian { mean, .. } => mean[0],
            _ => unreachable!(),
        }), 0.5);
        let far = GaussianParams::univariate(100.0, 1e9).unwrap();
        assert_eq!(gr.snap(&far).unwrap(), g(8, 4));
        let low = GaussianParams::univariate(-100.0, 1e-9).unwrap();
        assert_eq!(gr.snap(&low).unwrap(), g(0, 0));
    }

    #[test]
    fn ties_round_away_from_zero() {
        let gr = grid(2.0, 0.5);
        let snap_mean = |m: f64| match gr.snap_values(&[m], &[1.0]) {
            CandidateKey::Gaussian { mean, .. } => gr.mean_value(mean[0]),
            _ => unreachable!(),
        };
        assert_eq!(snap_mean(0.25), 0.5);
        assert_eq!(snap_mean(-0.25), -0.5);
        assert_eq!(snap_mean(1.75), 2.0);
        assert_eq!(snap_mean(-1.75), -2.0);
    }

    #[test]
    fn zero_key_is_the_lower_corner() {
        let gr = grid(2.0, 0.5);
        match gr.key_to_spec(&gr.origin_key()).unwrap() {
            DistributionSpec::Gaussian(p) => {
                assert_eq!(p.mean(), &[-2.0]);
                assert_eq!(p.variances(), vec![(-1.0f64).exp()]);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn out_of_range_key() {
        let gr = grid(2.0, 0.5);
        assert!(matches!(gr.key_to_spec(&g(9, 0)), Err(DistError::OutOfGrid(_))));
        assert!(matches!(gr.key_to_spec(&g(0, 5)), Err(DistError::OutOfGrid(_))));
    }

    #[test]
    fn mixture_canonical_form() {
        let a = CandidateKey::mixture(4, vec![(2, g(3, 1)), (2, g(1, 1))]).unwrap();
        let b = CandidateKey::mixture(2, vec![(1, g(1, 1)), (1, g(3, 1))]).unwrap();
        assert_eq!(a, b);
        let merged = CandidateKey::mixture(4, vec![(1, g(1, 1)), (0, g(2, 2)), (3, g(1, 1))]).unwrap();
        assert_eq!(merged, CandidateKey::mixture(1, vec![(1, g(1, 1))]).unwrap());
        assert_eq!(a.canonical(), a);
        assert!(CandidateKey::mixture(4, vec![(1, g(1, 1))]).is_err());
    }

    #[test]
    fn mixture_spec_round_trip() {
        let gr = grid(2.0, 0.5);
        let key = CandidateKey::mixture(4, vec![(1, g(2, 0)), (3, g(7, 3))]).unwrap();
        let spec = gr.key_to_spec(&key).unwrap();
        assert_eq!(gr.snap_spec(&spec, 4).unwrap(), key);
        let thirds = CandidateKey::mixture(3, vec![(1, g(2, 0)), (2, g(7, 3))]).unwrap();
        let spec = gr.key_to_spec(&thirds).unwrap();
        assert_eq!(gr.snap_spec(&spec, 3).unwrap(), thirds);
    }

    #[test]
    fn largest_remainder_sums_to_n() {
        assert_eq!(largest_remainder(&[0.5, 0.5], 4), vec![2, 2]);
        assert_eq!(largest_remainder(&[1.0 / 3.0; 3], 4), vec![2, 1, 1]);
        assert_eq!(largest_remainder(&[0.26, 0.74], 4), vec![1, 3]);
        assert_eq!(largest_remainder(&[1.0], 7), vec![7]);
    }

    #[test]
    fn text_round_trip() {
        let key = CandidateKey::mixture(4, vec![(1, g(2, 0)), (3, g(7, 3))]).unwrap();
        assert_eq!(key.to_string(), "M(4;1*G(m=2;v=0),3*G(m=7;v=3))");
        assert_eq!(key.to_string().parse::<CandidateKey>().unwrap(), key);
        let multi = CandidateKey::Gaussian { mean: vec![1, 20], logvar: vec![0, 3] };
        assert_eq!(multi.to_string().parse::<CandidateKey>().unwrap(), multi);
        assert!("G(m=1;v=)".parse::<CandidateKey>().is_err());
        assert!("G(m=1,2;v=1)".parse::<CandidateKey>().is_err());
    }

    #[test]
    fn neighborhood_is_clipped() {
        let gr = grid(2.0, 0.5);
        assert_eq!(gr.neighborhood(&g(4, 2), 1).unwrap().len(), 9);
        assert_eq!(gr.neighborhood(&g(0, 0), 1).unwrap().len(), 4);
        assert_eq!(gr.neighborhood(&g(4, 2), 0).unwrap(), vec![g(4, 2)]);
        let n = gr.neighborhood(&g(4, 2), 2).unwrap();
        assert_eq!(n.len(), 25);
        assert!(n.windows(2).all(|w| w[0] < w[1]));
    }
}
