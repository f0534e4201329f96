//! Binary token files: the encoder and decoder id streams of one split.

use std::path::Path;

use anyhow::{ensure, Context, Result};
use cpdrums_core::codec::{DecoderWord, EncoderWord};
use cpdrums_core::nn::Example;

use crate::bytes::{Reader, Writer};
use crate::hash;
use crate::store::{write_atomic, FORMAT_VERSION};

pub const MAGIC: [u8; 4] = *b"CPTK";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenRecord {
    pub source_id: String,
    pub condition: Vec<EncoderWord>,
    /// BOS through EOS.
    pub drums: Vec<DecoderWord>,
}

impl TokenRecord {
    pub fn example(&self) -> Example {
        Example { condition: self.condition.clone(), drums: self.drums.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenFile {
    pub data_hash: String,
    pub vocab_hash: String,
    pub seed: u64,
    pub split: String,
    pub records: Vec<TokenRecord>,
}

fn hash_bytes(hex: &str) -> [u8; 32] {
    hash::from_hex(hex).expect("hashes are hex SHA-256 digests")
}

impl TokenFile {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.bytes(&MAGIC);
        w.u32(FORMAT_VERSION);
        w.bytes(&hash_bytes(&self.data_hash));
        w.bytes(&hash_bytes(&self.vocab_hash));
        w.u64(self.seed);
        w.str(&self.split);
        w.len(self.records.len());
        for r in &self.records {
            w.str(&r.source_id);
            w.len(r.condition.len());
            for word in &r.condition {
                for id in word.ids() {
                    w.u32(id);
                }
            }
            w.len(r.drums.len());
            for word in &r.drums {
                for id in word.ids() {
                    w.u32(id);
                }
            }
        }
        w.buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        ensure!(r.array::<4>()? == MAGIC, "not a token file");
        let version = r.u32()?;
        ensure!(version == FORMAT_VERSION, "token file version {version} is not supported");
        let data_hash = hash::to_hex(&r.array::<32>()?);
        let vocab_hash = hash::to_hex(&r.array::<32>()?);
        let seed = r.u64()?;
        let split = r.str()?.to_owned();
        let n = r.count(12)?;
        let mut records = Vec::with_capacity(n);
        for _ in 0..n {
            let source_id = r.str()?.to_owned();
            let ne = r.count(20)?;
            let mut condition = Vec::with_capacity(ne);
            for _ in 0..ne {
                condition.push(EncoderWord::from_ids([r.u32()?, r.u32()?, r.u32()?, r.u32()?, r.u32()?]));
            }
            let nd = r.count(8)?;
            let mut drums = Vec::with_capacity(nd);
            for _ in 0..nd {
                drums.push(DecoderWord::from_ids([r.u32()?, r.u32()?]));
            }
            records.push(TokenRecord { source_id, condition, drums });
        }
        r.finish()?;
        Ok(Self { data_hash, vocab_hash, seed, split, records })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_bytes(&bytes).with_context(|| format!("parsing {}", path.display()))
    }

    /// Errors unless the file was tokenized under these hashes.
    pub fn expect(&self, data_hash: &str, vocab_hash: &str, what: &Path) -> Result<()> {
        ensure!(
            self.data_hash == data_hash,
            "{} was tokenized under config {} but the current config hashes to {data_hash}; rerun tokenize",
            what.display(),
            self.data_hash
        );
        ensure!(
            self.vocab_hash == vocab_hash,
            "{} was tokenized with vocab {} but vocab.json hashes to {vocab_hash}; rerun tokenize",
            what.display(),
            self.vocab_hash
        );
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn file(records: Vec<TokenRecord>) -> TokenFile {
        TokenFile {
            data_hash: hash::sha256_hex(b"data"),
            vocab_hash: hash::sha256_hex(b"vocab"),
            seed: 42,
            split: "train".into(),
            records,
        }
    }

    proptest! {
        #[test]
        fn round_trip(
            recs in prop::collection::vec(
                ("[a-z#0-9]{0,12}",
                 prop::collection::vec(prop::array::uniform5(0u32..100), 0..20),
                 prop::collection::vec(prop::array::uniform2(0u32..100), 0..20)),
                0..5)
        ) {
            let records: Vec<TokenRecord> = recs
                .into_iter()
                .map(|(id, c, d)| TokenRecord {
                    source_id: id,
                    condition: c.into_iter().map(EncoderWord::from_ids).collect(),
                    drums: d.into_iter().map(DecoderWord::from_ids).collect(),
                })
                .collect();
            let f = file(records);
            prop_assert_eq!(TokenFile::from_bytes(&f.to_bytes()).unwrap(), f);
        }
    }

    #[test]
    fn rejects_corruption() {
        let f = file(vec![TokenRecord {
            source_id: "x#0".into(),
            condition: vec![EncoderWord::from_ids([1, 2, 3, 4, 5])],
            drums: vec![DecoderWord::from_ids([0, 1])],
        }]);
        let bytes = f.to_bytes();
        assert!(TokenFile::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(TokenFile::from_bytes(&extra).is_err());
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(TokenFile::from_bytes(&magic).is_err());
        let dir = tempfile::tempdir().unwrap();
        assert!(f.expect(&f.data_hash, &hash::sha256_hex(b"other"), dir.path()).is_err());
        assert!(f.expect(&f.data_hash, &f.vocab_hash, dir.path()).is_ok());
    }
}
