//! Instance stream files.
//!
//! Text format: a header line `n=<int> count=<int>`, then one instance per
//! line as n space-separated decimal floats (shortest round-trip form).
//! Binary format: magic `SISORT1\0`, then n as u32 little-endian, count as
//! u64 little-endian, then count*n IEEE-754 doubles little-endian.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{CoreError, Result};
use crate::instance::InputInstance;

pub const BINARY_MAGIC: [u8; 8] = *b"SISORT1\0";

/// Anything that can hand out training or operation instances in order.
pub trait InstanceSource {
    fn next_instance(&mut self) -> Result<Option<InputInstance>>;
}

/// In-memory source, mostly for tests.
pub struct SliceSource {
    items: std::vec::IntoIter<InputInstance>,
}

impl SliceSource {
    pub fn new(items: Vec<InputInstance>) -> Self {
        Self {
            items: items.into_iter(),
        }
    }
}

impl InstanceSource for SliceSource {
    fn next_instance(&mut self) -> Result<Option<InputInstance>> {
        Ok(self.items.next())
    }
}

pub fn write_text<W: Write>(out: &mut W, n: usize, instances: &[InputInstance]) -> Result<()> {
    writeln!(out, "n={} count={}", n, instances.len())?;
    let mut line = String::new();
    for inst in instances {
        line.clear();
        for (j, v) in inst.values().iter().enumerate() {
            if j > 0 {
                line.push(' ');
            }
            line.push_str(&format!("{v}"));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn write_binary<W: Write>(out: &mut W, n: usize, instances: &[InputInstance]) -> Result<()> {
    out.write_all(&BINARY_MAGIC)?;
    out.write_all(&(n as u32).to_le_bytes())?;
    out.write_all(&(instances.len() as u64).to_le_bytes())?;
    for inst in instances {
        for v in inst.values() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

enum ReaderKind {
    Text {
        lines: std::io::Lines<BufReader<File>>,
        line_no: usize,
    },
    Binary {
        reader: BufReader<File>,
    },
}

/// Streaming reader for either on-disk format; the format is sniffed from the
/// first bytes.
pub struct InstanceReader {
    kind: ReaderKind,
    n: usize,
    count: u64,
    yielded: u64,
}

impl InstanceReader {
    pub fn open(path: &Path) -> Result<Self> {
        let mut file = File::open(path)?;
        let mut magic = [0u8; 8];
        let got = read_up_to(&mut file, &mut magic)?;
        let is_binary = got == 8 && magic == BINARY_MAGIC;
        if is_binary {
            let mut reader = BufReader::new(file);
            let mut buf4 = [0u8; 4];
            let mut buf8 = [0u8; 8];
            reader
                .read_exact(&mut buf4)
                .map_err(|_| bad(0, "truncated binary header"))?;
            let n = u32::from_le_bytes(buf4) as usize;
            reader
                .read_exact(&mut buf8)
                .map_err(|_| bad(0, "truncated binary header"))?;
            let count = u64::from_le_bytes(buf8);
            Ok(Self {
                kind: ReaderKind::Binary { reader },
                n,
                count,
                yielded: 0,
            })
        } else {
            // restart from the beginning and parse as text
            let file = File::open(path)?;
            let mut lines = BufReader::new(file).lines();
            let header = lines.next().ok_or_else(|| bad(1, "empty stream file"))??;
            let (n, count) = parse_header(&header)?;
            Ok(Self {
                kind: ReaderKind::Text { lines, line_no: 1 },
                n,
                count,
                yielded: 0,
            })
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn read_all(mut self) -> Result<Vec<InputInstance>> {
        let mut out = Vec::new();
        while let Some(inst) = self.next_instance()? {
            out.push(inst);
        }
        Ok(out)
    }
}

fn read_up_to(file: &mut File, buf: &mut [u8]) -> Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        let k = file.read(&mut buf[filled..])?;
        if k == 0 {
            break;
        }
        filled += k;
    }
    Ok(filled)
}

fn bad(line: usize, reason: impl Into<String>) -> CoreError {
    CoreError::StreamFormat {
        line,
        reason: reason.into(),
    }
}

fn parse_header(header: &str) -> Result<(usize, u64)> {
    let mut n = None;
    let mut count = None;
    for field in header.split_whitespace() {
        if let Some(v) = field.strip_prefix("n=") {
            n = v.parse::<usize>().ok();
        } else if let Some(v) = field.strip_prefix("count=") {
            count = v.parse::<u64>().ok();
        }
    }
    match (n, count) {
        (Some(n), Some(count)) => Ok((n, count)),
        _ => Err(bad(
            1,
            format!("expected `n=<int> count=<int>`, got `{header}`"),
        )),
    }
}

impl InstanceSource for InstanceReader {
    fn next_instance(&mut self) -> Result<Option<InputInstance>> {
        if self.yielded >= self.count {
            return Ok(None);
        }
        match &mut self.kind {
            ReaderKind::Text { lines, line_no } => {
                let line = match lines.next() {
                    Some(line) => line?,
                    None => {
                        return Err(bad(
                            *line_no + 1,
                            format!(
                                "stream ended after {} of {} instances",
                                self.yielded, self.count
                            ),
                        ))
                    }
                };
                *line_no += 1;
                let mut values = Vec::with_capacity(self.n);
                for tok in line.split_whitespace() {
                    let v: f64 = tok
                        .parse()
                        .map_err(|_| bad(*line_no, format!("bad float `{tok}`")))?;
                    values.push(v);
                }
                if values.len() != self.n {
                    return Err(bad(
                        *line_no,
                        format!("expected {} values, got {}", self.n, values.len()),
                    ));
                }
                self.yielded += 1;
                Ok(Some(InputInstance::new(values)?))
            }
            ReaderKind::Binary { reader } => {
                let mut values = Vec::with_capacity(self.n);
                let mut buf = [0u8; 8];
                for _ in 0..self.n {
                    reader
                        .read_exact(&mut buf)
                        .map_err(|_| bad(0, "truncated binary payload"))?;
                    values.push(f64::from_le_bytes(buf));
                }
                self.yielded += 1;
                Ok(Some(InputInstance::new(values)?))
            }
        }
    }
}
