//! Parameter bundles: a `key=value` file naming the field, m, e and the
//! family, decoder and database files next to it.
//!
//! ```text
//! p=2
//! d=9
//! modulus=x^9+x^4+1
//! m=511
//! e=2
//! mvf=mvf.txt
//! decoder=decoder.txt
//! db=db.txt
//! servers=127.0.0.1:7001,127.0.0.1:7002,127.0.0.1:7003
//! seed=1
//! ```
//!
//! Relative paths resolve against the bundle's directory.

use std::fs;
use std::path::{Path, PathBuf};

use crate::config::KeyValues;
use crate::error::{Error, Result};
use crate::field::{format_modulus, parse_modulus, Field};
use crate::mvf::MvFamily;
use crate::pir::{Database, DecoderSource, MvfSource, PirParams};

pub const BUNDLE_KEYS: &[&str] = &[
    "p", "d", "modulus", "m", "e", "mvf", "decoder", "db", "addr", "servers", "seed", "budget",
];

pub const MVF_FILE: &str = "mvf.txt";
pub const DECODER_FILE: &str = "decoder.txt";
pub const DB_FILE: &str = "db.txt";
pub const BUNDLE_FILE: &str = "bundle.txt";

/// Optional runtime settings carried in a bundle.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Settings {
    pub addr: Option<String>,
    pub servers: Vec<String>,
    pub seed: Option<u64>,
    pub budget: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct Bundle {
    pub path: PathBuf,
    pub params: PirParams,
    pub db: Option<Database>,
    pub settings: Settings,
}

fn resolve(base: &Path, value: &str) -> PathBuf {
    let p = Path::new(value);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))
}

impl Bundle {
    /// Reads the bundle and every file it names; all of them must validate.
    pub fn load(path: &Path) -> Result<Self> {
        let kv = KeyValues::parse(&read(path)?)?;
        kv.reject_unknown(BUNDLE_KEYS)?;
        let base = path.parent().unwrap_or(Path::new("."));

        let p: u64 = kv.parse_value("p")?;
        let field = match kv.get("modulus") {
            Some(text) => Field::new(p, parse_modulus(text, p)?)?,
            None => Field::with_degree(p, kv.parse_value("d")?)?,
        };
        if let Some(d) = kv.parse_optional::<usize>("d")? {
            if d != field.degree() {
                return Err(Error::InvalidField(format!(
                    "d={d} but the modulus has degree {}",
                    field.degree()
                )));
            }
        }
        let m: u64 = kv.parse_value("m")?;
        let e: usize = kv.parse_value("e")?;
        let family = MvFamily::from_text(&read(&resolve(base, kv.require("mvf")?))?)?;
        let decoder = DecoderSource::Fixture(resolve(base, kv.require("decoder")?));
        let params = PirParams::build(&field, m, e, MvfSource::Family(family), decoder)?;

        let db = match kv.get("db") {
            Some(rel) => {
                let db = Database::from_text(&field, &read(&resolve(base, rel))?)?;
                if db.len() > params.n() {
                    return Err(Error::InvalidArgument(format!(
                        "database has {} records, the family supports {}",
                        db.len(),
                        params.n()
                    )));
                }
                Some(db)
            }
            None => None,
        };
        let settings = Settings {
            addr: kv.get("addr").map(str::to_string),
            servers: kv
                .get("servers")
                .map(|s| {
                    s.split(',')
                        .map(str::trim)
                        .filter(|a| !a.is_empty())
                        .map(str::to_string)
                        .collect()
                })
                .unwrap_or_default(),
            seed: kv.parse_optional("seed")?,
            budget: kv.parse_optional("budget")?,
        };
        Ok(Bundle {
            path: path.to_path_buf(),
            params,
            db,
            settings,
        })
    }
}

/// Writes bundle, family, decoder and (if given) database files into `dir`
/// and returns the bundle path.
pub fn write_bundle(
    dir: &Path,
    params: &PirParams,
    db: Option<&Database>,
    settings: &Settings,
) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(MVF_FILE), params.family().to_text())?;
    let line = params
        .decoder()
        .to_fixture_line(params.small_target().elements());
    fs::write(dir.join(DECODER_FILE), format!("{line}\n"))?;

    let field = params.field();
    let mut kv = KeyValues::default();
    kv.push("p", field.characteristic().to_string());
    kv.push("d", field.degree().to_string());
    kv.push("modulus", format_modulus(field.modulus()));
    kv.push("m", params.m().to_string());
    kv.push("e", params.multiplicity().to_string());
    kv.push("mvf", MVF_FILE);
    kv.push("decoder", DECODER_FILE);
    if let Some(db) = db {
        fs::write(dir.join(DB_FILE), db.to_text())?;
        kv.push("db", DB_FILE);
    }
    if let Some(addr) = &settings.addr {
        kv.push("addr", addr.clone());
    }
    if !settings.servers.is_empty() {
        kv.push("servers", settings.servers.join(","));
    }
    if let Some(seed) = settings.seed {
        kv.push("seed", seed.to_string());
    }
    if let Some(budget) = settings.budget {
        kv.push("budget", budget.to_string());
    }
    let path = dir.join(BUNDLE_FILE);
    fs::write(&path, kv.to_text())?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pir::rng_from_seed;

    fn toy() -> PirParams {
        PirParams::build(
            &Field::gf4(),
            3,
            2,
            MvfSource::BruteForce {
                dim: 2,
                size: 2,
                budget: 1_000_000,
            },
            DecoderSource::Search {
                t_max: 2,
                budget: 1000,
            },
        )
        .unwrap()
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let params = toy();
        let db = Database::random(params.field(), 2, &mut rng_from_seed(Some(1)));
        let settings = Settings {
            addr: None,
            servers: vec!["127.0.0.1:1".into(), "127.0.0.1:2".into()],
            seed: Some(9),
            budget: Some(100),
        };
        let path = write_bundle(dir.path(), &params, Some(&db), &settings).unwrap();
        let loaded = Bundle::load(&path).unwrap();
        assert_eq!(loaded.settings, settings);
        assert_eq!(loaded.db, Some(db));
        assert_eq!(loaded.params.family(), params.family());
        assert_eq!(loaded.params.decoder(), params.decoder());
    }

    #[test]
    fn rejects_bad_bundles() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_bundle(dir.path(), &toy(), None, &Settings::default()).unwrap();
        let text = fs::read_to_string(&path).unwrap();

        fs::write(&path, format!("{text}colour=blue\n")).unwrap();
        assert!(Bundle::load(&path).is_err());

        fs::write(&path, text.replace("mvf.txt", "missing.txt")).unwrap();
        assert!(Bundle::load(&path).is_err());

        fs::write(&path, &text).unwrap();
        fs::write(
            dir.path().join(MVF_FILE),
            "6 2 2 S=0 1 3 4\n0 1 | 0 1\n1 0 | 1 0\n",
        )
        .unwrap();
        assert!(Bundle::load(&path).is_err());
    }
}
