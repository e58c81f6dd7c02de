use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use floqlin::fluctuations::WignerGrid;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

/// Files written for one run. Each is written to a temporary name and
/// renamed into place; [`Outputs::rollback`] removes everything written so
/// far.
pub struct Outputs {
    dir: PathBuf,
    hash: String,
    written: Vec<PathBuf>,
    created_dir: bool,
}

impl Outputs {
    pub fn new(dir: &Path, hash: &str) -> io::Result<Self> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir)?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            hash: hash.to_string(),
            written: Vec::new(),
            created_dir,
        })
    }

    pub fn names(&self) -> Vec<String> {
        self.written
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect()
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> io::Result<()> {
        let target = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.partial"));
        let result = (|| {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(bytes)?;
            f.sync_all()?;
            fs::rename(&tmp, &target)
        })();
        if result.is_err() {
            let _ = fs::remove_file(&tmp);
        }
        result?;
        self.written.push(target);
        Ok(())
    }

    /// CSV with a `# config_sha256` comment line ahead of the header.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
        let mut s = format!("# config_sha256={}\n{}\n", self.hash, header.join(","));
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            s.push_str(&row.join(","));
            s.push('\n');
        }
        self.write(name, s.as_bytes())
    }

    /// 16-bit binary PGM, first row at `p_max`. Returns `(Wmin, Wmax)`.
    pub fn pgm(&mut self, name: &str, grid: &WignerGrid) -> io::Result<(f64, f64)> {
        let (bytes, lo, hi) = encode_pgm(grid, &self.hash);
        self.write(name, &bytes)?;
        Ok((lo, hi))
    }

    pub fn rollback(self) {
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

pub fn encode_pgm(grid: &WignerGrid, hash: &str) -> (Vec<u8>, f64, f64) {
    let spec = &grid.spec;
    let lo = grid.values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = grid
        .values
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let mut out = format!(
        "P5\n# config_sha256={hash}\n# wmin={} wmax={}\n{} {}\n65535\n",
        fmt_f(lo),
        fmt_f(hi),
        spec.nx,
        spec.np
    )
    .into_bytes();
    out.reserve(2 * spec.nx * spec.np);
    for j in (0..spec.np).rev() {
        for i in 0..spec.nx {
            let w = grid.at(i, j);
            let v = if span > 0.0 {
                (65535.0 * (w - lo) / span).round() as u16
            } else {
                0
            };
            out.extend_from_slice(&v.to_be_bytes());
        }
    }
    (out, lo, hi)
}

pub const PLOT_SCRIPT: &str = r##"# Non-normative helper: renders the heatmaps and tables of a floqlin run.
# Requires numpy and matplotlib. Usage: python plot_outputs.py <run-dir>
import json, pathlib, sys
import numpy as np
import matplotlib.pyplot as plt

run = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else ".")
meta = json.loads((run / "metadata.json").read_text())

def read_pgm(path):
    data = path.read_bytes()
    fields, pos = [], 0
    while len(fields) < 4:
        end = data.index(b"\n", pos)
        line = data[pos:end].strip()
        pos = end + 1
        if line.startswith(b"#"):
            continue
        fields.extend(line.split())
    nx, ny = int(fields[1]), int(fields[2])
    return np.frombuffer(data[pos:], dtype=">u2").reshape(ny, nx)

for name, info in meta.get("heatmaps", {}).items():
    raw = read_pgm(run / name).astype(float)
    w = info["wmin"] + raw / 65535.0 * (info["wmax"] - info["wmin"])
    g = info["grid"]
    plt.figure()
    plt.imshow(w, extent=[g["x_min"], g["x_max"], g["p_min"], g["p_max"]], cmap="viridis")
    plt.colorbar(label="W")
    plt.xlabel("x"); plt.ylabel("p"); plt.title(name)
    plt.savefig(run / (name + ".png"), dpi=150)

for path in sorted(run.glob("*.csv")):
    try:
        table = np.genfromtxt(path, delimiter=",", comments="#", names=True)
    except ValueError:
        continue
    cols = table.dtype.names
    if not cols or len(cols) < 2 or len(table.shape) == 0:
        continue
    plt.figure()
    plt.plot(table[cols[0]], table[cols[1]], ".", ms=2)
    plt.xlabel(cols[0]); plt.ylabel(cols[1]); plt.title(path.name)
    plt.savefig(run / (path.name + ".png"), dpi=150)
"##;
