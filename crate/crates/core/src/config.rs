//! Plain `key=value` text, separated by commas or newlines.
//!
//! A comma-separated segment without `=` continues the previous value, so
//! list values such as `terms=0:01,5:02` survive the comma split. `#` starts
//! a comment that runs to the end of the line.

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KeyValues {
    pairs: Vec<(String, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("");
            let mut continues = false;
            for segment in line.split(',') {
                let segment = segment.trim();
                if segment.is_empty() {
                    continue;
                }
                match segment.split_once('=') {
                    Some((k, v)) => {
                        let key = k.trim();
                        if key.is_empty() {
                            return Err(Error::Parse(format!("empty key in {segment:?}")));
                        }
                        if pairs.iter().any(|(existing, _)| existing == key) {
                            return Err(Error::Parse(format!("duplicate key {key:?}")));
                        }
                        pairs.push((key.to_string(), v.trim().to_string()));
                        continues = true;
                    }
                    None if continues => {
                        let last = pairs.last_mut().expect("continuation follows a pair");
                        last.1.push(',');
                        last.1.push_str(segment);
                    }
                    None => {
                        return Err(Error::Parse(format!("expected key=value, got {segment:?}")))
                    }
                }
            }
        }
        Ok(KeyValues { pairs })
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Parse(format!("missing key {key:?}")))
    }

    pub fn parse_value<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.require(key)?;
        raw.parse()
            .map_err(|_| Error::Parse(format!("bad value {raw:?} for {key:?}")))
    }

    pub fn parse_optional<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|raw| {
                raw.parse()
                    .map_err(|_| Error::Parse(format!("bad value {raw:?} for {key:?}")))
            })
            .transpose()
    }

    /// Fails on the first key not in `allowed`.
    pub fn reject_unknown(&self, allowed: &[&str]) -> Result<()> {
        match self
            .pairs
            .iter()
            .find(|(k, _)| !allowed.contains(&k.as_str()))
        {
            Some((k, _)) => Err(Error::Parse(format!("unknown key {k:?}"))),
            None => Ok(()),
        }
    }

    pub fn push(&mut self, key: &str, value: impl Into<String>) {
        self.pairs.push((key.to_string(), value.into()));
    }

    /// One `key=value` per line.
    pub fn to_text(&self) -> String {
        self.pairs
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    /// All pairs on one line, comma separated.
    pub fn to_line(&self) -> String {
        self.pairs
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commas_and_newlines() {
        let kv = KeyValues::parse("p=2, d=9\nmodulus=x^9+x^4+1 # comment\n\nterms=0:01,5:02, m=3")
            .unwrap();
        assert_eq!(kv.get("p"), Some("2"));
        assert_eq!(kv.get("modulus"), Some("x^9+x^4+1"));
        assert_eq!(kv.get("terms"), Some("0:01,5:02"));
        assert_eq!(kv.parse_value::<u64>("m").unwrap(), 3);
        assert!(kv.reject_unknown(&["p", "d", "modulus", "terms"]).is_err());
        assert!(kv
            .reject_unknown(&["p", "d", "modulus", "terms", "m"])
            .is_ok());
    }

    #[test]
    fn malformed() {
        assert!(KeyValues::parse("garbage").is_err());
        assert!(KeyValues::parse("a=1\na=2").is_err());
        assert!(KeyValues::parse("=1").is_err());
        assert!(KeyValues::parse("a=x")
            .unwrap()
            .parse_value::<u64>("a")
            .is_err());
    }

    #[test]
    fn round_trip() {
        let mut kv = KeyValues::default();
        kv.push("m", "3");
        kv.push("terms", "0:01,1:02");
        assert_eq!(KeyValues::parse(&kv.to_line()).unwrap(), kv);
        assert_eq!(KeyValues::parse(&kv.to_text()).unwrap(), kv);
    }
}
