//! On-disk formats: CSR1 sample vectors and result CSVs.
//!
//! CSR1 is a little-endian binary container for complex sample vectors. The
//! 16-byte header is the magic `CSR1`, then `n` (ambient length), `m` (stored
//! sample count), and a flag word; the payload is `m` interleaved `f64`
//! re/im pairs. Flag bit 0 marks a subsampled vector (`m <= n`), bit 1 marks
//! frequency-domain content.
//!
//! The CSV writers format every field deterministically so repeated runs of
//! the same experiment produce byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::analysis::RicSummary;
use crate::error::{Error, Result};
use crate::sweep::PdTable;

pub const CSR1_MAGIC: [u8; 4] = *b"CSR1";
pub const FLAG_SUBSAMPLED: u32 = 0b01;
pub const FLAG_FREQUENCY_DOMAIN: u32 = 0b10;

const HEADER_LEN: usize = 16;
const SAMPLE_LEN: usize = 16;
const MAX_SAMPLES: usize = 1 << 28;

/// One stored complex vector with its ambient length and domain flags.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr1Record {
    pub n: usize,
    pub flags: u32,
    pub samples: Vec<Complex64>,
}

impl Csr1Record {
    /// Full-rate time-domain vector; `n` is the sample count itself.
    pub fn full_rate(samples: Vec<Complex64>) -> Self {
        Csr1Record {
            n: samples.len(),
            flags: 0,
            samples,
        }
    }

    /// Subsampled time-domain vector taken from an ambient length `n`.
    pub fn subsampled(n: usize, samples: Vec<Complex64>) -> Self {
        Csr1Record {
            n,
            flags: FLAG_SUBSAMPLED,
            samples,
        }
    }

    pub fn is_subsampled(&self) -> bool {
        self.flags & FLAG_SUBSAMPLED != 0
    }

    pub fn is_frequency_domain(&self) -> bool {
        self.flags & FLAG_FREQUENCY_DOMAIN != 0
    }

    fn validate(&self) -> Result<()> {
        if self.samples.len() > MAX_SAMPLES || self.n > u32::MAX as usize {
            return Err(Error::TooLarge(format!(
                "{} samples exceeds the CSR1 size limit",
                self.samples.len()
            )));
        }
        if self.flags & !(FLAG_SUBSAMPLED | FLAG_FREQUENCY_DOMAIN) != 0 {
            return Err(Error::Format(format!(
                "unsupported CSR1 flags {:#x}",
                self.flags
            )));
        }
        if self.is_subsampled() {
            if self.samples.len() > self.n {
                return Err(Error::Format(format!(
                    "subsampled CSR1 vector stores {} samples but n = {}",
                    self.samples.len(),
                    self.n
                )));
            }
        } else if self.samples.len() != self.n {
            return Err(Error::Format(format!(
                "full-rate CSR1 vector stores {} samples but n = {}",
                self.samples.len(),
                self.n
            )));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let mut out = Vec::with_capacity(HEADER_LEN + SAMPLE_LEN * self.samples.len());
        out.extend_from_slice(&CSR1_MAGIC);
        out.extend_from_slice(&(self.n as u32).to_le_bytes());
        out.extend_from_slice(&(self.samples.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.flags.to_le_bytes());
        for z in &self.samples {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Format(format!(
                "CSR1 data is {} bytes, shorter than the 16-byte header",
                bytes.len()
            )));
        }
        if bytes[..4] != CSR1_MAGIC {
            return Err(Error::Format("missing CSR1 magic".into()));
        }
        let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
        let n = word(4) as usize;
        let count = word(8) as usize;
        let flags = word(12);
        let payload = &bytes[HEADER_LEN..];
        if payload.len() != count * SAMPLE_LEN {
            return Err(Error::Format(format!(
                "CSR1 header promises {count} samples but the payload holds {} bytes",
                payload.len()
            )));
        }
        let scalar = |at: usize| f64::from_le_bytes(payload[at..at + 8].try_into().unwrap());
        let samples = (0..count)
            .map(|i| Complex64::new(scalar(SAMPLE_LEN * i), scalar(SAMPLE_LEN * i + 8)))
            .collect();
        let record = Csr1Record { n, flags, samples };
        record.validate()?;
        Ok(record)
    }
}

pub fn write_csr1(path: &Path, record: &Csr1Record) -> Result<()> {
    let bytes = record.to_bytes()?;
    std::fs::write(path, bytes)
        .map_err(|e| Error::Format(format!("cannot write '{}': {e}", path.display())))
}

pub fn read_csr1(path: &Path) -> Result<Csr1Record> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::Format(format!("cannot read '{}': {e}", path.display())))?;
    Csr1Record::from_bytes(&bytes)
}

/// Renders the detection table as `point,mode,trials,hits,pd` rows.
pub fn sweep_csv(table: &PdTable) -> String {
    let mut out = String::from("point,mode,trials,hits,pd\n");
    for cell in &table.cells {
        writeln!(
            out,
            "{},{},{},{},{:.6}",
            cell.point,
            cell.mode,
            cell.trials,
            cell.hits,
            cell.pd()
        )
        .unwrap();
    }
    out
}

pub fn write_sweep_csv(path: &Path, table: &PdTable) -> Result<()> {
    std::fs::write(path, sweep_csv(table))
        .map_err(|e| Error::Format(format!("cannot write '{}': {e}", path.display())))
}

/// Renders RIC probe results as `n,m,s,seed,delta_s` rows.
pub fn ric_csv(summary: &RicSummary) -> String {
    let mut out = String::from("n,m,s,seed,delta_s\n");
    for (seed, delta) in &summary.records {
        writeln!(
            out,
            "{},{},{},{},{:.12}",
            summary.n, summary.m, summary.s, seed, delta
        )
        .unwrap();
    }
    out
}

pub fn write_ric_csv(path: &Path, summary: &RicSummary) -> Result<()> {
    std::fs::write(path, ric_csv(summary))
        .map_err(|e| Error::Format(format!("cannot write '{}': {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::PdCell;

    fn ramp(len: usize) -> Vec<Complex64> {
        (0..len)
            .map(|i| Complex64::new(i as f64, -(i as f64) / 3.0))
            .collect()
    }

    #[test]
    fn csr1_bytes_round_trip() {
        let record = Csr1Record {
            n: 16,
            flags: FLAG_SUBSAMPLED | FLAG_FREQUENCY_DOMAIN,
            samples: ramp(5),
        };
        let bytes = record.to_bytes().unwrap();
        assert_eq!(bytes.len(), 16 + 16 * 5);
        assert_eq!(&bytes[..4], b"CSR1");
        let back = Csr1Record::from_bytes(&bytes).unwrap();
        assert_eq!(back, record);
        assert!(back.is_subsampled());
        assert!(back.is_frequency_domain());
    }

    #[test]
    fn csr1_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("obs.csr1");
        let record = Csr1Record::subsampled(8, ramp(3));
        write_csr1(&path, &record).unwrap();
        assert_eq!(read_csr1(&path).unwrap(), record);
    }

    #[test]
    fn csr1_rejects_corrupt_data() {
        let record = Csr1Record::full_rate(ramp(4));
        let mut bytes = record.to_bytes().unwrap();

        let mut wrong_magic = bytes.clone();
        wrong_magic[0] = b'X';
        assert!(Csr1Record::from_bytes(&wrong_magic).is_err());

        bytes.truncate(bytes.len() - 8);
        assert!(Csr1Record::from_bytes(&bytes).is_err());

        assert!(Csr1Record::from_bytes(&bytes[..7]).is_err());

        let inconsistent = Csr1Record {
            n: 2,
            flags: 0,
            samples: ramp(4),
        };
        assert!(inconsistent.to_bytes().is_err());

        let bad_flags = Csr1Record {
            n: 4,
            flags: 0b100,
            samples: ramp(4),
        };
        assert!(bad_flags.to_bytes().is_err());
    }

    #[test]
    fn sweep_csv_is_stable_text() {
        let table = PdTable {
            cells: vec![
                PdCell {
                    point: -10.0,
                    mode: "plain",
                    trials: 8,
                    hits: 2,
                },
                PdCell {
                    point: 2.5,
                    mode: "joint",
                    trials: 8,
                    hits: 8,
                },
            ],
        };
        let text = sweep_csv(&table);
        assert_eq!(
            text,
            "point,mode,trials,hits,pd\n-10,plain,8,2,0.250000\n2.5,joint,8,8,1.000000\n"
        );
        assert_eq!(text, sweep_csv(&table));
    }

    #[test]
    fn ric_csv_lists_one_row_per_seed() {
        let summary = RicSummary {
            n: 16,
            m: 8,
            s: 2,
            records: vec![(1, 0.25), (2, 0.5)],
            mean: 0.375,
            std_dev: 0.125,
            exceedance: vec![],
        };
        let text = ric_csv(&summary);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n,m,s,seed,delta_s");
        assert_eq!(lines[1], "16,8,2,1,0.250000000000");
        assert_eq!(lines.len(), 3);
    }
}
