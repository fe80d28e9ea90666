//! Gate checkpoint: magic `EHDMGAT1`, the student count `H` (u64), then per
//! student its label, checkpoint path and hex SHA-256 digest (each a u64
//! length followed by UTF-8 bytes), the clamp epsilon (f64), and finally the
//! gate MLP block in the network checkpoint format. All integers are
//! little-endian.

use std::path::{Path, PathBuf};

use super::GateModel;
use crate::error::{Error, Result};
use crate::nn::checkpoint::{decode_mlp, encode_mlp, file_digest, ByteReader};
use crate::nn::StudentModel;

pub const GATE_MAGIC: &[u8; 8] = b"EHDMGAT1";

/// A student checkpoint the gate was trained against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StudentRef {
    pub label: String,
    pub path: PathBuf,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateCheckpoint {
    pub gate: GateModel<f32>,
    pub students: Vec<StudentRef>,
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u64).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

fn get_str(r: &mut ByteReader<'_>) -> std::result::Result<String, String> {
    let n = r.u64()? as usize;
    String::from_utf8(r.take(n)?.to_vec()).map_err(|_| "string is not UTF-8".to_string())
}

impl GateCheckpoint {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(GATE_MAGIC);
        out.extend_from_slice(&(self.students.len() as u64).to_le_bytes());
        for s in &self.students {
            put_str(&mut out, &s.label);
            put_str(&mut out, &s.path.to_string_lossy());
            put_str(&mut out, &s.digest);
        }
        out.extend_from_slice(&self.gate.epsilon.to_le_bytes());
        encode_mlp(&self.gate.mlp, &mut out);
        out
    }

    pub fn decode(bytes: &[u8]) -> std::result::Result<Self, String> {
        let mut r = ByteReader::new(bytes);
        if r.take(8)? != GATE_MAGIC {
            return Err("missing EHDMGAT1 magic".into());
        }
        let h = r.u64()? as usize;
        if h == 0 || h > 1024 {
            return Err(format!("implausible student count {h}"));
        }
        let mut students = Vec::with_capacity(h);
        for _ in 0..h {
            students.push(StudentRef {
                label: get_str(&mut r)?,
                path: PathBuf::from(get_str(&mut r)?),
                digest: get_str(&mut r)?,
            });
        }
        let epsilon = r.f64()?;
        let mlp = decode_mlp(&mut r)?;
        r.finish()?;
        if mlp.output_dim() != h {
            return Err(format!("gate emits {} weights for {h} students", mlp.output_dim()));
        }
        if mlp.input_dim() % 2 != 0 {
            return Err("gate input width must be even".into());
        }
        Ok(GateCheckpoint {
            gate: GateModel {
                mlp,
                labels: students.iter().map(|s| s.label.clone()).collect(),
                epsilon,
            },
            students,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.encode())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path)?;
        Self::decode(&bytes).map_err(|m| Error::format(path, m))
    }

    /// Loads the referenced students, checking each file's digest.
    ///
    /// Relative student paths are resolved against `base` when given.
    pub fn load_students(&self, base: Option<&Path>) -> Result<Vec<StudentModel<f32>>> {
        self.students
            .iter()
            .map(|s| {
                let path = match base {
                    Some(b) if s.path.is_relative() => b.join(&s.path),
                    _ => s.path.clone(),
                };
                let digest = file_digest(&path)?;
                if digest != s.digest {
                    return Err(Error::format(
                        &path,
                        format!("student {:?} digest {digest} does not match gate header {}", s.label, s.digest),
                    ));
                }
                crate::nn::checkpoint::read_student(&path)
            })
            .collect()
    }

    /// Checks that `paths` name the same students, in the same order.
    pub fn check_students(&self, paths: &[PathBuf]) -> Result<()> {
        if paths.len() != self.students.len() {
            return Err(Error::invalid(format!(
                "gate was trained on {} students, {} given",
                self.students.len(),
                paths.len()
            )));
        }
        for (p, s) in paths.iter().zip(&self.students) {
            let d = file_digest(p)?;
            if d != s.digest {
                return Err(Error::invalid(format!(
                    "{} does not match student {:?} of the gate (digest mismatch or wrong order)",
                    p.display(),
                    s.label
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::checkpoint::write_student;
    use crate::seed;

    #[test]
    fn roundtrip_and_digest_checks() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = seed::rng(3);
        let mut paths = Vec::new();
        let mut refs = Vec::new();
        for label in ["cn", "aa"] {
            let s = StudentModel::<f32>::new(4, 6, 2, &mut rng).unwrap();
            let p = dir.path().join(format!("{label}.ckpt"));
            write_student(&p, &s).unwrap();
            refs.push(StudentRef {
                label: label.into(),
                path: p.clone(),
                digest: file_digest(&p).unwrap(),
            });
            paths.push(p);
        }
        let gate = GateModel::<f32>::new(4, 8, vec!["cn".into(), "aa".into()], &mut rng).unwrap();
        let ck = GateCheckpoint { gate, students: refs };
        let p = dir.path().join("gate.ckpt");
        ck.write(&p).unwrap();
        let back = GateCheckpoint::read(&p).unwrap();
        assert_eq!(back, ck);
        assert_eq!(&std::fs::read(&p).unwrap()[..8], GATE_MAGIC);
        assert_eq!(back.load_students(None).unwrap().len(), 2);
        back.check_students(&paths).unwrap();
        let swapped = vec![paths[1].clone(), paths[0].clone()];
        assert!(back.check_students(&swapped).is_err());
        assert!(back.check_students(&paths[..1]).is_err());

        let mut bytes = ck.encode();
        bytes.truncate(bytes.len() - 3);
        assert!(GateCheckpoint::decode(&bytes).is_err());
    }
}
