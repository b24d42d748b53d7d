//! CHARMM/NAMD DCD trajectories.
//!
//! Every block is a Fortran unformatted record: a 4-byte length marker,
//! the payload, and the same marker repeated. The byte order is detected
//! from the first marker, which must decode to 84.

use std::fs::File;
use std::io::{self, BufReader, Read, Write};
use std::path::Path;

use super::{FormatError, Frame, Result};
use crate::geometry::{UnitCell, Vec3};

const HEADER_LEN: u32 = 84;
const CELL_LEN: u32 = 48;
const TITLE_LEN: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endianness {
    Little,
    Big,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DcdHeader {
    pub n_frames: u32,
    pub first_step: i32,
    pub step_interval: i32,
    /// Integration timestep in engine (AKMA) units.
    pub timestep: f32,
    pub has_unit_cell: bool,
    /// 0 means X-PLOR layout (64-bit timestep, no unit cells).
    pub charmm_version: i32,
    pub titles: Vec<String>,
    pub n_atoms: usize,
    pub endianness: Endianness,
}

impl DcdHeader {
    pub fn new(n_atoms: usize, n_frames: u32) -> Self {
        DcdHeader {
            n_frames,
            first_step: 0,
            step_interval: 1,
            timestep: 0.0,
            has_unit_cell: false,
            charmm_version: 24,
            titles: Vec::new(),
            n_atoms,
            endianness: Endianness::Little,
        }
    }

    /// Time between saved frames in picoseconds (AKMA timestep × save interval).
    pub fn frame_interval_ps(&self) -> Option<f64> {
        const AKMA_PS: f64 = 0.048_888_21;
        let dt = self.timestep as f64 * self.step_interval as f64 * AKMA_PS;
        (dt > 0.0 && dt.is_finite()).then_some(dt)
    }
}

struct RecordReader<R> {
    inner: R,
    offset: u64,
    endianness: Endianness,
}

impl<R: Read> RecordReader<R> {
    fn decode_u32(&self, b: [u8; 4]) -> u32 {
        match self.endianness {
            Endianness::Little => u32::from_le_bytes(b),
            Endianness::Big => u32::from_be_bytes(b),
        }
    }

    /// Reads exactly `buf.len()` bytes. `Ok(false)` signals EOF before the first byte.
    fn fill(&mut self, buf: &mut [u8]) -> io::Result<bool> {
        let mut read = 0;
        while read < buf.len() {
            match self.inner.read(&mut buf[read..]) {
                Ok(0) if read == 0 => return Ok(false),
                Ok(0) => return Err(io::ErrorKind::UnexpectedEof.into()),
                Ok(n) => {
                    read += n;
                    self.offset += n as u64;
                }
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e),
            }
        }
        Ok(true)
    }

    /// Reads one record whose payload must be `expected` bytes long (if given).
    /// Returns `None` on a clean EOF before the leading marker.
    fn record(&mut self, expected: Option<u32>, what: &str) -> Result<Option<Vec<u8>>> {
        let start = self.offset;
        let mut marker = [0u8; 4];
        if !self.fill(&mut marker)? {
            return Ok(None);
        }
        let len = self.decode_u32(marker);
        if let Some(want) = expected {
            if len != want {
                return Err(FormatError::CorruptRecord {
                    offset: start,
                    message: format!("{what} record has length {len}, expected {want}"),
                });
            }
        }
        let mut payload = vec![0u8; len as usize];
        self.fill_required(&mut payload)?;
        let mut trailer = [0u8; 4];
        self.fill_required(&mut trailer)?;
        let end_len = self.decode_u32(trailer);
        if end_len != len {
            return Err(FormatError::CorruptRecord {
                offset: self.offset - 4,
                message: format!("{what} record markers disagree ({len} vs {end_len})"),
            });
        }
        Ok(Some(payload))
    }

    fn fill_required(&mut self, buf: &mut [u8]) -> io::Result<()> {
        if self.fill(buf)? || buf.is_empty() {
            Ok(())
        } else {
            Err(io::ErrorKind::UnexpectedEof.into())
        }
    }
}

fn is_eof(e: &FormatError) -> bool {
    matches!(e, FormatError::Io(io) if io.kind() == io::ErrorKind::UnexpectedEof)
}

/// Streaming DCD reader; iterating yields frames in file order.
pub struct DcdReader<R> {
    records: RecordReader<R>,
    header: DcdHeader,
    frames_read: usize,
    done: bool,
    coord_buf: Vec<u8>,
}

impl<R: Read> DcdReader<R> {
    pub fn new(mut inner: R) -> Result<Self> {
        let mut first = [0u8; 4];
        inner.read_exact(&mut first).map_err(|_| FormatError::CorruptRecord {
            offset: 0,
            message: "stream shorter than the first record marker".into(),
        })?;
        let endianness = if u32::from_le_bytes(first) == HEADER_LEN {
            Endianness::Little
        } else if u32::from_be_bytes(first) == HEADER_LEN {
            Endianness::Big
        } else {
            return Err(FormatError::CorruptRecord {
                offset: 0,
                message: "leading marker is not 84 in either byte order; not a DCD file".into(),
            });
        };
        let mut records = RecordReader {
            inner: io::Cursor::new(first).chain(inner),
            offset: 0,
            endianness,
        };
        let header = read_header(&mut records).map_err(|e| {
            if is_eof(&e) {
                FormatError::CorruptRecord {
                    offset: records.offset,
                    message: "file ends inside the header".into(),
                }
            } else {
                e
            }
        })?;
        let coord_buf = vec![0u8; 4 * header.n_atoms];
        Ok(DcdReader {
            records: RecordReader {
                inner: records.inner.into_inner().1,
                offset: records.offset,
                endianness,
            },
            header,
            frames_read: 0,
            done: false,
            coord_buf,
        })
    }

    pub fn header(&self) -> &DcdHeader {
        &self.header
    }

    fn truncated(&self) -> FormatError {
        FormatError::Truncated {
            frames_read: self.frames_read,
            offset: self.records.offset,
        }
    }

    fn read_frame(&mut self) -> Result<Option<Frame>> {
        let n = self.header.n_atoms;
        let mut unit_cell = None;
        let mut started = false;
        if self.header.has_unit_cell {
            let Some(raw) = self.records.record(Some(CELL_LEN), "unit-cell")? else {
                return Ok(None);
            };
            started = true;
            let mut v = [0f64; 6];
            for (slot, chunk) in v.iter_mut().zip(raw.chunks_exact(8)) {
                let b: [u8; 8] = chunk.try_into().unwrap();
                *slot = match self.records.endianness {
                    Endianness::Little => f64::from_le_bytes(b),
                    Endianness::Big => f64::from_be_bytes(b),
                };
            }
            unit_cell = Some(decode_cell(v));
        }
        let mut coords = vec![Vec3::ZERO; n];
        for axis in 0..3 {
            let what = ["X", "Y", "Z"][axis];
            let start = self.records.offset;
            let mut marker = [0u8; 4];
            if !self.records.fill(&mut marker)? {
                if started {
                    return Err(self.truncated());
                }
                return Ok(None);
            }
            started = true;
            let len = self.records.decode_u32(marker);
            if len as usize != 4 * n {
                return Err(FormatError::CorruptRecord {
                    offset: start,
                    message: format!("{what} coordinate record has length {len}, expected {}", 4 * n),
                });
            }
            let mut buf = std::mem::take(&mut self.coord_buf);
            let res = self.records.fill_required(&mut buf);
            self.coord_buf = buf;
            res?;
            let mut trailer = [0u8; 4];
            self.records.fill_required(&mut trailer)?;
            if self.records.decode_u32(trailer) != len {
                return Err(FormatError::CorruptRecord {
                    offset: self.records.offset - 4,
                    message: format!("{what} coordinate record markers disagree"),
                });
            }
            let big = self.records.endianness == Endianness::Big;
            for (c, chunk) in coords.iter_mut().zip(self.coord_buf.chunks_exact(4)) {
                let b: [u8; 4] = chunk.try_into().unwrap();
                let v = if big { f32::from_be_bytes(b) } else { f32::from_le_bytes(b) } as f64;
                match axis {
                    0 => c.x = v,
                    1 => c.y = v,
                    _ => c.z = v,
                }
            }
        }
        Ok(Some(Frame {
            index: self.frames_read,
            coords,
            unit_cell,
        }))
    }

    /// Reads every remaining frame.
    pub fn read_all(self) -> Result<(DcdHeader, Vec<Frame>)> {
        let header = self.header.clone();
        let frames = self.collect::<Result<Vec<_>>>()?;
        Ok((header, frames))
    }
}

impl<R: Read> Iterator for DcdReader<R> {
    type Item = Result<Frame>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.read_frame() {
            Ok(Some(frame)) => {
                self.frames_read += 1;
                Some(Ok(frame))
            }
            Ok(None) => {
                self.done = true;
                let declared = self.header.n_frames as usize;
                (declared > self.frames_read).then(|| Err(self.truncated()))
            }
            Err(e) => {
                self.done = true;
                if is_eof(&e) {
                    Some(Err(self.truncated()))
                } else {
                    Some(Err(e))
                }
            }
        }
    }
}

/// Six stored doubles are (a, γ, b, β, α, c); angle slots that all lie in
/// [-1, 1] are cosines, otherwise degrees.
fn decode_cell(v: [f64; 6]) -> UnitCell {
    let (a, g, b, be, al, c) = (v[0], v[1], v[2], v[3], v[4], v[5]);
    let cosines = [g, be, al].iter().all(|x| (-1.0..=1.0).contains(x));
    let to_deg = |x: f64| {
        if cosines {
            90.0 - x.asin().to_degrees()
        } else {
            x
        }
    };
    UnitCell {
        a,
        b,
        c,
        alpha: to_deg(al),
        beta: to_deg(be),
        gamma: to_deg(g),
    }
}

fn read_header<R: Read>(rec: &mut RecordReader<R>) -> Result<DcdHeader> {
    let endianness = rec.endianness;
    let missing = |offset| FormatError::CorruptRecord {
        offset,
        message: "file ends inside the header".into(),
    };
    let raw = rec.record(Some(HEADER_LEN), "header")?.ok_or_else(|| missing(0))?;
    if &raw[..4] != b"CORD" {
        return Err(FormatError::CorruptRecord {
            offset: 4,
            message: "header does not start with CORD".into(),
        });
    }
    let word = |i: usize| -> [u8; 4] { raw[4 + 4 * i..8 + 4 * i].try_into().unwrap() };
    let int = |i: usize| -> i32 {
        match endianness {
            Endianness::Little => i32::from_le_bytes(word(i)),
            Endianness::Big => i32::from_be_bytes(word(i)),
        }
    };
    let charmm_version = int(19);
    if int(8) != 0 {
        return Err(FormatError::Unsupported(format!(
            "DCD with {} fixed atoms",
            int(8)
        )));
    }
    let (timestep, has_unit_cell) = if charmm_version == 0 {
        let b: [u8; 8] = raw[4 + 36..4 + 44].try_into().unwrap();
        let dt = match endianness {
            Endianness::Little => f64::from_le_bytes(b),
            Endianness::Big => f64::from_be_bytes(b),
        };
        (dt as f32, false)
    } else {
        let dt = match endianness {
            Endianness::Little => f32::from_le_bytes(word(9)),
            Endianness::Big => f32::from_be_bytes(word(9)),
        };
        if int(11) != 0 {
            return Err(FormatError::Unsupported("4-D DCD trajectories".into()));
        }
        (dt, int(10) != 0)
    };
    let n_frames = int(0);
    if n_frames < 0 {
        return Err(FormatError::CorruptRecord {
            offset: 4,
            message: format!("negative frame count {n_frames}"),
        });
    }

    let title_offset = rec.offset;
    let raw = rec.record(None, "title")?.ok_or_else(|| missing(title_offset))?;
    if raw.len() < 4 || (raw.len() - 4) % TITLE_LEN != 0 {
        return Err(FormatError::CorruptRecord {
            offset: title_offset,
            message: format!("title record length {} is not 4 + 80k", raw.len()),
        });
    }
    let count = rec.decode_u32(raw[..4].try_into().unwrap()) as usize;
    if count * TITLE_LEN != raw.len() - 4 {
        return Err(FormatError::CorruptRecord {
            offset: title_offset,
            message: format!("title count {count} disagrees with record length {}", raw.len()),
        });
    }
    let titles = raw[4..]
        .chunks_exact(TITLE_LEN)
        .map(|t| {
            String::from_utf8_lossy(t)
                .trim_end_matches(['\0', ' '])
                .to_string()
        })
        .collect();

    let atoms_offset = rec.offset;
    let raw = rec.record(Some(4), "atom-count")?.ok_or_else(|| missing(atoms_offset))?;
    let n_atoms = match endianness {
        Endianness::Little => i32::from_le_bytes(raw[..4].try_into().unwrap()),
        Endianness::Big => i32::from_be_bytes(raw[..4].try_into().unwrap()),
    };
    if n_atoms <= 0 {
        return Err(FormatError::CorruptRecord {
            offset: atoms_offset,
            message: format!("atom count {n_atoms} must be positive"),
        });
    }

    Ok(DcdHeader {
        n_frames: n_frames as u32,
        first_step: int(1),
        step_interval: int(2),
        timestep,
        has_unit_cell,
        charmm_version,
        titles,
        n_atoms: n_atoms as usize,
        endianness,
    })
}

/// Parses the header of an in-memory DCD and returns a lazy frame iterator.
pub fn read_dcd(bytes: &[u8]) -> Result<(DcdHeader, DcdReader<&[u8]>)> {
    let reader = DcdReader::new(bytes)?;
    Ok((reader.header().clone(), reader))
}

/// Opens a DCD file for buffered streaming.
pub fn open_dcd(path: impl AsRef<Path>) -> Result<DcdReader<BufReader<File>>> {
    let file = File::open(path)?;
    DcdReader::new(BufReader::with_capacity(1 << 20, file))
}

struct RecordWriter<W> {
    out: W,
    endianness: Endianness,
}

impl<W: Write> RecordWriter<W> {
    fn u32(&self, v: u32) -> [u8; 4] {
        match self.endianness {
            Endianness::Little => v.to_le_bytes(),
            Endianness::Big => v.to_be_bytes(),
        }
    }

    fn record(&mut self, payload: &[u8]) -> io::Result<()> {
        let marker = self.u32(payload.len() as u32);
        self.out.write_all(&marker)?;
        self.out.write_all(payload)?;
        self.out.write_all(&marker)
    }
}

fn validate_for_write(header: &DcdHeader, frames: &[Frame]) -> Result<()> {
    if header.n_atoms == 0 {
        return Err(FormatError::Invalid("DCD needs at least one atom".into()));
    }
    if header.n_frames as usize != frames.len() {
        return Err(FormatError::Invalid(format!(
            "header declares {} frames but {} were supplied",
            header.n_frames,
            frames.len()
        )));
    }
    if header.has_unit_cell && header.charmm_version == 0 {
        return Err(FormatError::Invalid(
            "unit cells require a CHARMM-format header (charmm_version != 0)".into(),
        ));
    }
    if let Some(t) = header.titles.iter().find(|t| t.len() > TITLE_LEN) {
        return Err(FormatError::Invalid(format!("title longer than 80 bytes: {t:?}")));
    }
    for frame in frames {
        if frame.coords.len() != header.n_atoms {
            return Err(FormatError::Invalid(format!(
                "frame {} has {} atoms, header declares {}",
                frame.index,
                frame.coords.len(),
                header.n_atoms
            )));
        }
        if frame.unit_cell.is_some() != header.has_unit_cell {
            return Err(FormatError::Invalid(format!(
                "frame {} unit-cell presence disagrees with the header flag",
                frame.index
            )));
        }
    }
    Ok(())
}

/// Serializes a trajectory; all validation happens before any byte is written.
pub fn write_dcd_to<W: Write>(out: W, header: &DcdHeader, frames: &[Frame]) -> Result<()> {
    validate_for_write(header, frames)?;
    let mut w = RecordWriter {
        out,
        endianness: header.endianness,
    };
    let i32b = |v: i32| match header.endianness {
        Endianness::Little => v.to_le_bytes(),
        Endianness::Big => v.to_be_bytes(),
    };

    let mut head = Vec::with_capacity(HEADER_LEN as usize);
    head.extend_from_slice(b"CORD");
    let mut icntrl = [[0u8; 4]; 20];
    icntrl[0] = i32b(header.n_frames as i32);
    icntrl[1] = i32b(header.first_step);
    icntrl[2] = i32b(header.step_interval);
    icntrl[3] = i32b(header.step_interval.wrapping_mul(header.n_frames as i32));
    icntrl[19] = i32b(header.charmm_version);
    for word in &icntrl[..9] {
        head.extend_from_slice(word);
    }
    if header.charmm_version == 0 {
        let dt = header.timestep as f64;
        head.extend_from_slice(&match header.endianness {
            Endianness::Little => dt.to_le_bytes(),
            Endianness::Big => dt.to_be_bytes(),
        });
    } else {
        head.extend_from_slice(&match header.endianness {
            Endianness::Little => header.timestep.to_le_bytes(),
            Endianness::Big => header.timestep.to_be_bytes(),
        });
        head.extend_from_slice(&i32b(header.has_unit_cell as i32));
    }
    for word in &icntrl[11..] {
        head.extend_from_slice(word);
    }
    w.record(&head)?;

    let mut titles = Vec::with_capacity(4 + TITLE_LEN * header.titles.len());
    titles.extend_from_slice(&w.u32(header.titles.len() as u32));
    for t in &header.titles {
        let mut line = [b' '; TITLE_LEN];
        line[..t.len()].copy_from_slice(t.as_bytes());
        titles.extend_from_slice(&line);
    }
    w.record(&titles)?;
    w.record(&i32b(header.n_atoms as i32))?;

    let mut buf = Vec::with_capacity(4 * header.n_atoms);
    for frame in frames {
        if let Some(cell) = &frame.unit_cell {
            let mut raw = Vec::with_capacity(CELL_LEN as usize);
            for v in [cell.a, cell.gamma, cell.b, cell.beta, cell.alpha, cell.c] {
                raw.extend_from_slice(&match header.endianness {
                    Endianness::Little => v.to_le_bytes(),
                    Endianness::Big => v.to_be_bytes(),
                });
            }
            w.record(&raw)?;
        }
        for axis in 0..3 {
            buf.clear();
            for p in &frame.coords {
                let v = p[axis] as f32;
                buf.extend_from_slice(&match header.endianness {
                    Endianness::Little => v.to_le_bytes(),
                    Endianness::Big => v.to_be_bytes(),
                });
            }
            w.record(&buf)?;
        }
    }
    w.out.flush()?;
    Ok(())
}

pub fn write_dcd(header: &DcdHeader, frames: &[Frame]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    write_dcd_to(&mut out, header, frames)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_frame_fixture() -> (DcdHeader, Vec<Frame>) {
        let mut header = DcdHeader::new(1, 2);
        header.first_step = 100;
        header.step_interval = 50;
        header.timestep = 0.040_90;
        header.titles = vec!["REMARKS synthetic".into()];
        let frames = vec![
            Frame::new(0, vec![Vec3::new(1.0, 2.0, 3.0)]),
            Frame::new(1, vec![Vec3::new(-1.5, 0.25, 8.0)]),
        ];
        (header, frames)
    }

    #[test]
    fn round_trip_little_endian() {
        let (header, frames) = two_frame_fixture();
        let bytes = write_dcd(&header, &frames).unwrap();
        let (h, reader) = read_dcd(&bytes).unwrap();
        assert_eq!(h, header);
        let got: Vec<Frame> = reader.collect::<Result<_>>().unwrap();
        assert_eq!(got, frames);
    }

    #[test]
    fn empty_trajectory() {
        let header = DcdHeader::new(3, 0);
        let bytes = write_dcd(&header, &[]).unwrap();
        let (h, reader) = read_dcd(&bytes).unwrap();
        assert_eq!(h.n_frames, 0);
        assert_eq!(reader.count(), 0);
    }

    #[test]
    fn cosine_cell_convention() {
        let cell = decode_cell([30.0, 0.0, 30.0, 0.0, 0.0, 30.0]);
        assert_eq!(cell, UnitCell::orthorhombic(30.0, 30.0, 30.0));
        let degrees = decode_cell([30.0, 90.0, 40.0, 90.0, 90.0, 50.0]);
        assert_eq!(degrees, UnitCell::orthorhombic(30.0, 40.0, 50.0));
        let skew = decode_cell([30.0, 0.5, 30.0, 0.0, 0.0, 30.0]);
        assert!((skew.gamma - 60.0).abs() < 1e-12);
    }

    #[test]
    fn atom_count_mismatch_writes_nothing() {
        let (header, mut frames) = two_frame_fixture();
        frames[1].coords.push(Vec3::ZERO);
        let mut out = Vec::new();
        assert!(matches!(
            write_dcd_to(&mut out, &header, &frames),
            Err(FormatError::Invalid(_))
        ));
        assert!(out.is_empty());
    }

    #[test]
    fn marker_mismatch_reports_offset() {
        let (header, frames) = two_frame_fixture();
        let mut bytes = write_dcd(&header, &frames).unwrap();
        // trailing marker of the header record sits at bytes 88..92
        bytes[88] ^= 0xff;
        match read_dcd(&bytes) {
            Err(FormatError::CorruptRecord { offset, .. }) => assert_eq!(offset, 88),
            Err(other) => panic!("expected corrupt record, got {other:?}"),
            Ok(_) => panic!("expected corrupt record"),
        }
    }

    #[test]
    fn truncated_frame_reports_progress() {
        let (header, frames) = two_frame_fixture();
        let bytes = write_dcd(&header, &frames).unwrap();
        let cut = &bytes[..bytes.len() - 6];
        let (_, reader) = read_dcd(cut).unwrap();
        let results: Vec<_> = reader.collect();
        assert_eq!(results.len(), 2);
        assert!(results[0].is_ok());
        assert!(matches!(results[1], Err(FormatError::Truncated { frames_read: 1, .. })));
    }

    #[test]
    fn not_a_dcd() {
        assert!(matches!(
            read_dcd(b"HEADER    not a trajectory"),
            Err(FormatError::CorruptRecord { offset: 0, .. })
        ));
    }
}
