use std::fmt::Write as _;

use super::{DecodeError, DecoderContract, Result};
use crate::distributions::CandidateKey;

/// Where a list came from.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Provenance {
    pub dataset: Option<usize>,
    /// How the decoder searched, e.g. `neighborhood`, `exhaustive`,
    /// `structured`, `structured+random`.
    pub mode: String,
}

/// A sorted set of keys. Sorting makes the list independent of the order
/// in which a decoder discovered its members.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateList {
    keys: Vec<CandidateKey>,
    pub provenance: Provenance,
}

impl CandidateList {
    pub fn new(mut keys: Vec<CandidateKey>, provenance: Provenance) -> Self {
        keys.sort();
        keys.dedup();
        CandidateList { keys, provenance }
    }

    pub fn keys(&self) -> &[CandidateKey] {
        &self.keys
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn contains(&self, key: &CandidateKey) -> bool {
        self.keys.binary_search(key).is_ok()
    }

    pub fn into_keys(self) -> Vec<CandidateKey> {
        self.keys
    }

    pub fn with_dataset(mut self, dataset: usize) -> Self {
        self.provenance.dataset = Some(dataset);
        self
    }

    pub fn check(&self, contract: &DecoderContract) -> Result<()> {
        if contract.admits(self.len()) {
            Ok(())
        } else {
            Err(DecodeError::ListTooLong { size: self.len(), ln_bound: contract.ln_list_bound })
        }
    }

    /// A `#` header with the provenance, then one key per line in order.
    pub fn to_text(&self) -> String {
        let mut s = String::from("#");
        if let Some(d) = self.provenance.dataset {
            let _ = write!(s, " dataset={d}");
        }
        if !self.provenance.mode.is_empty() {
            let _ = write!(s, " mode={}", self.provenance.mode);
        }
        s.push('\n');
        for k in &self.keys {
            let _ = writeln!(s, "{k}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut keys = Vec::new();
        let mut provenance = Provenance::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                for field in comment.split_whitespace() {
                    if let Some(v) = field.strip_prefix("dataset=") {
                        provenance.dataset = v.parse().ok();
                    } else if let Some(v) = field.strip_prefix("mode=") {
                        provenance.mode = v.to_string();
                    }
                }
                continue;
            }
            let key = line
                .parse::<CandidateKey>()
                .map_err(|e| DecodeError::Parse { line: n + 1, msg: e.to_string() })?;
            keys.push(key);
        }
        Ok(CandidateList::new(keys, provenance))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(m: u32) -> CandidateKey {
        CandidateKey::Gaussian { mean: vec![m], logvar: vec![0] }
    }

    #[test]
    fn sorted_and_unique() {
        let l = CandidateList::new(vec![g(3), g(1), g(3)], Provenance::default());
        assert_eq!(l.keys(), &[g(1), g(3)]);
        assert!(l.contains(&g(3)) && !l.contains(&g(2)));
    }

    #[test]
    fn text_round_trip() {
        let mix = CandidateKey::mixture(4, vec![(1, g(2)), (3, g(7))]).unwrap();
        let l = CandidateList::new(
            vec![mix, g(1), g(0)],
            Provenance { dataset: Some(4), mode: "structured".into() },
        );
        let text = l.to_text();
        assert!(text.starts_with("# dataset=4 mode=structured\n"));
        assert_eq!(CandidateList::from_text(&text).unwrap(), l);
        assert!(matches!(
            CandidateList::from_text("G(m=1;v=0)\nnonsense\n"),
            Err(DecodeError::Parse { line: 2, .. })
        ));
    }
}
