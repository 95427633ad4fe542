//! Snapshot dumps and atomic file writes.
//!
//! Particle dumps are CSV with a one-line JSON header (`# {...}`), edge
//! lists are CSV, and density grids are either text or little-endian
//! binary. Every float is written in its shortest round-trip form, so
//! reading a dump back reproduces the snapshot exactly.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::continuum::{DensityField, Grid};
use crate::error::{Error, Result};
use crate::micro::{LinkGraph, ParticleState, Vec2};

/// Write `bytes` to `path` via a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Hex SHA-256 of `text`.
pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Header line of a particle dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleHeader {
    pub time: f64,
    pub step: u64,
    pub seed: u64,
    pub params_hash: String,
    pub half_length: f64,
}

fn parse_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

pub fn particles_to_csv(header: &ParticleHeader, state: &ParticleState) -> Result<String> {
    let mut out = format!("# {}\nspecies,x,y\n", serde_json::to_string(header)?);
    for (tag, pos) in [("A", &state.pos_a), ("B", &state.pos_b)] {
        for p in pos {
            out.push_str(&format!("{tag},{},{}\n", p[0], p[1]));
        }
    }
    Ok(out)
}

pub fn particles_from_csv(path: &Path, text: &str) -> Result<(ParticleHeader, ParticleState)> {
    let mut lines = text.lines();
    let head = lines
        .next()
        .and_then(|l| l.strip_prefix("# "))
        .ok_or_else(|| parse_err(path, "missing JSON header line"))?;
    let header: ParticleHeader = serde_json::from_str(head).map_err(|e| parse_err(path, e.to_string()))?;
    if lines.next() != Some("species,x,y") {
        return Err(parse_err(path, "missing column header"));
    }
    let mut state = ParticleState {
        pos_a: Vec::new(),
        pos_b: Vec::new(),
        time: header.time,
    };
    for (n, line) in lines.enumerate() {
        let bad = || parse_err(path, format!("bad row {}: `{line}`", n + 3));
        let mut it = line.split(',');
        let (sp, x, y) = (it.next(), it.next(), it.next());
        let p: Vec2 = [
            x.and_then(|v| v.parse().ok()).ok_or_else(bad)?,
            y.and_then(|v| v.parse().ok()).ok_or_else(bad)?,
        ];
        match sp {
            Some("A") => state.pos_a.push(p),
            Some("B") => state.pos_b.push(p),
            _ => return Err(bad()),
        }
    }
    Ok((header, state))
}

pub fn edges_to_csv(graph: &LinkGraph) -> String {
    let mut out = String::from("kind,i,j\n");
    for (kind, set) in [("AA", &graph.aa), ("BB", &graph.bb), ("AB", &graph.ab)] {
        for (i, j) in set {
            out.push_str(&format!("{kind},{i},{j}\n"));
        }
    }
    out
}

pub fn edges_from_csv(path: &Path, text: &str) -> Result<LinkGraph> {
    let mut lines = text.lines();
    if lines.next() != Some("kind,i,j") {
        return Err(parse_err(path, "missing column header"));
    }
    let mut g = LinkGraph::default();
    for line in lines {
        let bad = || parse_err(path, format!("bad row `{line}`"));
        let mut it = line.split(',');
        let kind = it.next();
        let i: usize = it.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        let j: usize = it.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        let set = match kind {
            Some("AA") => &mut g.aa,
            Some("BB") => &mut g.bb,
            Some("AB") => &mut g.ab,
            _ => return Err(bad()),
        };
        set.insert((i, j));
    }
    Ok(g)
}

/// Header of a density dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    pub time: f64,
    pub step: u64,
    pub seed: u64,
    pub params_hash: String,
    pub half_length: f64,
    pub n_cells: usize,
}

/// Text grid: JSON header, then one `f_a,f_b` row per cell in row-major
/// order.
pub fn grid_to_text(header: &GridHeader, field: &DensityField) -> Result<String> {
    let mut out = format!("# {}\nf_a,f_b\n", serde_json::to_string(header)?);
    for (a, b) in field.f_a.iter().zip(&field.f_b) {
        out.push_str(&format!("{a},{b}\n"));
    }
    Ok(out)
}

pub fn grid_from_text(path: &Path, text: &str) -> Result<(GridHeader, DensityField)> {
    let mut lines = text.lines();
    let head = lines
        .next()
        .and_then(|l| l.strip_prefix("# "))
        .ok_or_else(|| parse_err(path, "missing JSON header line"))?;
    let header: GridHeader = serde_json::from_str(head).map_err(|e| parse_err(path, e.to_string()))?;
    if lines.next() != Some("f_a,f_b") {
        return Err(parse_err(path, "missing column header"));
    }
    let grid = Grid::new(header.half_length, header.n_cells)?;
    let (mut f_a, mut f_b) = (Vec::with_capacity(grid.len()), Vec::with_capacity(grid.len()));
    for line in lines {
        let bad = || parse_err(path, format!("bad row `{line}`"));
        let (a, b) = line.split_once(',').ok_or_else(bad)?;
        f_a.push(a.parse::<f64>().map_err(|_| bad())?);
        f_b.push(b.parse::<f64>().map_err(|_| bad())?);
    }
    if f_a.len() != grid.len() {
        return Err(parse_err(path, format!("expected {} cells, found {}", grid.len(), f_a.len())));
    }
    let time = header.time;
    Ok((header, DensityField { grid, f_a, f_b, time }))
}

const GRID_MAGIC: &[u8; 8] = b"CSGRID1\0";

/// Binary grid: magic, header length (u64 LE), JSON header, then `f_a` and
/// `f_b` as little-endian f64.
pub fn grid_to_binary(header: &GridHeader, field: &DensityField) -> Result<Vec<u8>> {
    let head = serde_json::to_vec(header)?;
    let mut out = Vec::with_capacity(16 + head.len() + 16 * field.f_a.len());
    out.extend_from_slice(GRID_MAGIC);
    out.extend_from_slice(&(head.len() as u64).to_le_bytes());
    out.extend_from_slice(&head);
    for v in field.f_a.iter().chain(&field.f_b) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn grid_from_binary(path: &Path, bytes: &[u8]) -> Result<(GridHeader, DensityField)> {
    if bytes.len() < 16 || &bytes[..8] != GRID_MAGIC {
        return Err(parse_err(path, "not a binary grid dump"));
    }
    let hl = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let body = bytes.get(16..16 + hl).ok_or_else(|| parse_err(path, "truncated header"))?;
    let header: GridHeader = serde_json::from_slice(body).map_err(|e| parse_err(path, e.to_string()))?;
    let grid = Grid::new(header.half_length, header.n_cells)?;
    let data = &bytes[16 + hl..];
    if data.len() != 16 * grid.len() {
        return Err(parse_err(path, "payload size does not match the grid"));
    }
    let vals: Vec<f64> = data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let (f_a, f_b) = vals.split_at(grid.len());
    let time = header.time;
    Ok((
        header,
        DensityField {
            grid,
            f_a: f_a.to_vec(),
            f_b: f_b.to_vec(),
            time,
        },
    ))
}

/// A dump read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub enum Dump {
    Particles { header: ParticleHeader, state: ParticleState },
    Density { header: GridHeader, field: DensityField },
}

impl Dump {
    pub fn time(&self) -> f64 {
        match self {
            Dump::Particles { state, .. } => state.time,
            Dump::Density { field, .. } => field.time,
        }
    }
}

/// Read a particle (`.csv`) or density (`.grid.txt`, `.grid.bin`) dump.
pub fn read_dump(path: &Path) -> Result<Dump> {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    if name.ends_with(".grid.bin") {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let (header, field) = grid_from_binary(path, &bytes)?;
        Ok(Dump::Density { header, field })
    } else if name.ends_with(".grid.txt") {
        let (header, field) = grid_from_text(path, &read_text(path)?)?;
        Ok(Dump::Density { header, field })
    } else if name.ends_with(".csv") {
        let (header, state) = particles_from_csv(path, &read_text(path)?)?;
        Ok(Dump::Particles { header, state })
    } else {
        Err(parse_err(path, "unrecognised dump extension"))
    }
}

/// Snapshot file name for step `step`.
pub fn snapshot_name(step: u64, density: bool, binary: bool) -> String {
    match (density, binary) {
        (false, _) => format!("snap_{step:010}.csv"),
        (true, false) => format!("snap_{step:010}.grid.txt"),
        (true, true) => format!("snap_{step:010}.grid.bin"),
    }
}

pub fn edges_name(step: u64) -> String {
    format!("edges_{step:010}.csv")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuum::{init_density, InitKind};
    use crate::micro::{init_particles, Placement};
    use crate::params::PhysicalParams;

    fn grid_header() -> GridHeader {
        GridHeader {
            time: 1.25,
            step: 3,
            seed: 9,
            params_hash: "abc".into(),
            half_length: 7.5,
            n_cells: 8,
        }
    }

    #[test]
    fn particle_round_trip() {
        let mut p = PhysicalParams::default();
        p.n_a = 17;
        p.n_b = 5;
        let mut st = init_particles(&p, 3, Placement::Uniform);
        st.time = 0.1 + 0.2;
        let h = ParticleHeader {
            time: st.time,
            step: 4,
            seed: 3,
            params_hash: sha256_hex("x"),
            half_length: 7.5,
        };
        let text = particles_to_csv(&h, &st).unwrap();
        let (h2, st2) = particles_from_csv(Path::new("t"), &text).unwrap();
        assert_eq!(h2, h);
        assert_eq!(st2, st);
    }

    #[test]
    fn edge_round_trip() {
        let mut g = LinkGraph::default();
        g.aa.insert((0, 3));
        g.bb.insert((1, 2));
        g.ab.insert((4, 0));
        g.ab.insert((0, 4));
        let back = edges_from_csv(Path::new("e"), &edges_to_csv(&g)).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn grid_round_trips() {
        let g = Grid::new(7.5, 8).unwrap();
        let mut f = init_density(g, InitKind::PerturbedUniform, 0.3, 2).unwrap();
        f.time = 1.25;
        let h = grid_header();
        let (h1, f1) = grid_from_text(Path::new("g"), &grid_to_text(&h, &f).unwrap()).unwrap();
        assert_eq!((h1, f1), (h.clone(), f.clone()));
        let (h2, f2) = grid_from_binary(Path::new("g"), &grid_to_binary(&h, &f).unwrap()).unwrap();
        assert_eq!((h2, f2), (h, f));
    }

    #[test]
    fn corrupt_dumps_are_rejected() {
        let p = Path::new("bad");
        assert!(particles_from_csv(p, "species,x,y\n").is_err());
        assert!(grid_from_binary(p, b"CSGRID1\0").is_err());
        let g = Grid::new(7.5, 8).unwrap();
        let f = init_density(g, InitKind::PerturbedUniform, 0.0, 0).unwrap();
        let text = grid_to_text(&grid_header(), &f).unwrap();
        let cut: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
        assert!(grid_from_text(p, &cut).is_err());
    }

    #[test]
    fn atomic_write_leaves_no_temp() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/file.txt");
        write_atomic(&path, b"hello").unwrap();
        write_atomic(&path, b"world").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "world");
        let names: Vec<_> = fs::read_dir(path.parent().unwrap()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 1);
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(
            sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
